//! Value-at-Risk for heavy-tailed return series.
//!
//! The crate covers the whole estimation path:
//!
//! * [`series`]: return ingestion plus distributional and serial-dependence diagnostics.
//! * [`tail`]: Hill tail-index estimation, adaptive threshold selection and the
//!   weighted-least-squares small-sample correction.
//! * [`garch`]: AR(1)-GARCH(1,1) with standardized Student-t(4) (or Gaussian)
//!   innovations, used to filter returns into near-iid residuals.
//! * [`var`]: unconditional and conditional extreme-value quantiles, the
//!   alpha-root multi-period scaling law and the Gaussian square-root-of-time baseline.
//! * [`mc`]: a Monte Carlo harness that runs the pipeline on simulated GARCH paths.
//!
//! Returns are always in percent. VaR figures are positive loss magnitudes.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops read more naturally in the small dense linear algebra here.
#![allow(clippy::needless_range_loop)]

pub mod dist;
pub mod error;
pub mod garch;
pub mod mc;
pub mod optim;
pub mod quad;
pub mod series;
pub mod special;
pub mod tail;
pub mod var;

pub use error::{Error, Result};
pub use garch::{GarchFit, GarchParams, Innovation};
pub use mc::{McConfig, McReport};
pub use series::{ReturnSeries, SummaryStats};
pub use tail::{HillTrace, Tail, TailEstimate, TailMethod};
pub use var::{VarEstimate, VarMethod};
