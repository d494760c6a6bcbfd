//! Unit-variance Student-t with four degrees of freedom.
//!
//! A t(4) variate `T` has variance 2, so the standardized variable is `Z = T / sqrt(2)`.
//! Density, CDF and quantile all have closed forms at four degrees of freedom.

use std::f64::consts::SQRT_2;

use rand::distributions::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::special::{norm_logpdf, norm_ppf};

/// Degrees of freedom of the Student-t innovations. Fixed, never estimated.
pub const T_DOF: f64 = 4.0;

/// `ln(Gamma(5/2) / (Gamma(2) sqrt(2 pi)))` which equals `ln(3 / (4 sqrt 2))`.
fn log_norm_const() -> f64 {
    (3.0 / (4.0 * SQRT_2)).ln()
}

/// Log density of the standardized t(4): `ln g(z)` with
/// `g(z) = Gamma(2.5) / (Gamma(2) sqrt(2 pi)) * (1 + z^2 / 2)^(-5/2)`.
pub fn std_t_logdensity(z: f64) -> f64 {
    log_norm_const() - 2.5 * (0.5 * z * z).ln_1p()
}

pub fn std_t_density(z: f64) -> f64 {
    std_t_logdensity(z).exp()
}

fn t4_lower_tail(t_abs: f64) -> f64 {
    // P(T <= -|t|) = 1/2 - |t|(s+6) / (2 (s+4)^1.5), rewritten without cancellation
    // using (s+4)^3 - s (s+6)^2 = 12 s + 64.
    let s = t_abs * t_abs;
    let c = (s + 4.0).powf(1.5);
    (12.0 * s + 64.0) / (2.0 * c * (c + t_abs * (s + 6.0)))
}

/// CDF of the standardized t(4).
pub fn std_t_cdf(z: f64) -> f64 {
    let t = z * SQRT_2;
    if t <= 0.0 {
        t4_lower_tail(-t)
    } else {
        1.0 - t4_lower_tail(t)
    }
}

/// Quantile of the standardized t(4) (closed form for four degrees of freedom).
pub fn std_t_quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let tail = p.min(1.0 - p);
    let a = 4.0 * tail * (1.0 - tail);
    let root = a.sqrt();
    let q = ((root.acos()) / 3.0).cos() / root;
    let t = 2.0 * (q - 1.0).max(0.0).sqrt();
    let z = t / SQRT_2;
    if p < 0.5 {
        -z
    } else {
        z
    }
}

/// Draws one standardized t(4) variate by inverse CDF on an open-interval uniform.
pub fn sample_std_t<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    std_t_quantile(u)
}

/// Innovation density of the GARCH model. Both variants have unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Innovation {
    #[default]
    StudentT4,
    Normal,
}

impl Innovation {
    pub fn logpdf(self, z: f64) -> f64 {
        match self {
            Innovation::StudentT4 => std_t_logdensity(z),
            Innovation::Normal => norm_logpdf(z),
        }
    }

    pub fn quantile(self, p: f64) -> f64 {
        match self {
            Innovation::StudentT4 => std_t_quantile(p),
            Innovation::Normal => norm_ppf(p),
        }
    }

    /// Degrees of freedom, `None` for the Gaussian.
    pub fn dof(self) -> Option<f64> {
        match self {
            Innovation::StudentT4 => Some(T_DOF),
            Innovation::Normal => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, integrate_real_line};
    use rand::SeedableRng;

    #[test]
    fn density_at_zero() {
        assert!((std_t_density(0.0) - 0.53033).abs() < 1e-5);
        assert!((std_t_logdensity(0.0) + 0.63426).abs() < 1e-5);
        // Gamma(2.5) = 1.329340...
        let via_gamma = (1.329_340_388_179_137 / (2.0 * std::f64::consts::PI).sqrt()).ln();
        assert!((std_t_logdensity(0.0) - via_gamma).abs() < 1e-12);
    }

    #[test]
    fn symmetric() {
        for &z in &[0.1, 0.7, 2.0, 13.5, 1e3] {
            assert_eq!(std_t_logdensity(z), std_t_logdensity(-z));
        }
    }

    #[test]
    fn unit_mass_and_unit_variance() {
        let mass = integrate(std_t_density, -50.0, 50.0, 1e-12, 0.0).unwrap().value;
        assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
        let var = integrate(|z| z * z * std_t_density(z), -50.0, 50.0, 1e-12, 0.0).unwrap().value;
        // Second moment truncated at |z| = 50 loses about 3 / 50^2 = 1.2e-3 of the heavy tail.
        let full = integrate_real_line(|z| z * z * std_t_density(z), 1e-10, 0.0).unwrap().value;
        assert!((full - 1.0).abs() < 1e-4, "variance {full}");
        assert!(var < full);
    }

    // Oracle: integrate the density over (-inf, z] with x = z - u / (1 - u).
    fn cdf_by_quadrature(z: f64) -> f64 {
        let lower = |z: f64| {
            integrate(
                |u| {
                    let d = 1.0 - u;
                    std_t_density(z - u / d) / (d * d)
                },
                0.0,
                1.0,
                1e-14,
                0.0,
            )
            .unwrap()
            .value
        };
        if z <= 0.0 {
            lower(z)
        } else {
            1.0 - lower(-z)
        }
    }

    #[test]
    fn cdf_matches_quadrature() {
        for &z in &[-30.0, -5.0, -2.3, -0.4, 0.0, 0.9, 3.7] {
            let want = cdf_by_quadrature(z);
            assert!((std_t_cdf(z) - want).abs() < 1e-8, "z={z}: {} vs {want}", std_t_cdf(z));
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-7, 1e-4, 0.005, 0.01, 0.05, 0.2, 0.5, 0.77, 0.99, 0.999_9] {
            let z = std_t_quantile(p);
            assert!((std_t_cdf(z) - p).abs() < 1e-8 * p.max(1e-3), "p={p}");
        }
        assert_eq!(std_t_quantile(0.5), 0.0);
    }

    #[test]
    fn sampled_variance_near_one() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(3);
        let n = 200_000;
        let draws: Vec<f64> = (0..n).map(|_| sample_std_t(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.02);
        // t(4) has infinite fourth moment so the sample variance converges slowly.
        assert!((var - 1.0).abs() < 0.1, "var {var}");
    }
}
