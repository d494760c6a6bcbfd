use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use tailvar::garch::{garch_fit_with, stationarity_check, ModelFile};
use tailvar::mc::{run_mc, McConfig};
use tailvar::series::{diagnostics, load_series, ColumnMode};
use tailvar::tail::{
    default_huisman_eta, estimate, finite_variance_test, hill_trace, qq_normal_data, write_qq_csv, FiniteVarianceTest,
};
use tailvar::var::{conditional_grid, gaussian_grid, unconditional_grid, write_csv, VarTable};
use tailvar::{Innovation, ReturnSeries, Tail, TailEstimate, VarEstimate};

use crate::args::*;
use crate::CliError;

type Out = Box<dyn Write>;

fn open_out(path: Option<&Path>) -> Result<Out, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(out: &mut Out, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(tailvar::Error::from)?;
    writeln!(out).map_err(CliError::stdout)?;
    Ok(())
}

fn load(input: &InputArgs) -> Result<ReturnSeries, CliError> {
    Ok(load_series(&input.input, input.column.into())?)
}

fn finish(mut out: Out) -> Result<(), CliError> {
    out.flush().map_err(CliError::stdout)
}

pub fn stats(a: StatsArgs) -> Result<(), CliError> {
    let series = load(&a.input)?;
    let d = diagnostics(&series, a.lags)?;
    let mut out = open_out(a.output.out.as_deref())?;
    match a.output.format {
        Format::Json => write_json(&mut out, &d)?,
        Format::Csv => {
            let s = &d.summary;
            let mut w = csv::Writer::from_writer(&mut out);
            let mut header: Vec<String> =
                ["n", "mean", "sd", "min", "max", "skewness", "excess_kurtosis", "ks_stat"].map(String::from).into();
            let mut row = vec![
                s.n.to_string(),
                s.mean.to_string(),
                s.sd.to_string(),
                s.min.to_string(),
                s.max.to_string(),
                s.skewness.to_string(),
                s.excess_kurtosis.to_string(),
                s.ks_stat.to_string(),
            ];
            for lb in &d.ljung_box {
                let tag = if lb.squared { "lb2" } else { "lb" };
                header.push(format!("{tag}_stat"));
                header.push(format!("{tag}_p"));
                row.push(lb.statistic.to_string());
                row.push(lb.p_value.to_string());
            }
            w.write_record(&header).map_err(tailvar::Error::from)?;
            w.write_record(&row).map_err(tailvar::Error::from)?;
            w.flush().map_err(CliError::stdout)?;
        }
        Format::Table => {
            let s = &d.summary;
            let lines = [
                ("n", s.n.to_string()),
                ("mean", fmt(s.mean)),
                ("sd", fmt(s.sd)),
                ("min", fmt(s.min)),
                ("max", fmt(s.max)),
                ("skewness", fmt(s.skewness)),
                ("excess kurtosis", fmt(s.excess_kurtosis)),
                ("KS statistic", fmt(s.ks_stat)),
            ];
            for (k, v) in lines {
                writeln!(out, "{k:<18}{v:>12}").map_err(CliError::stdout)?;
            }
            for lb in &d.ljung_box {
                let name = if lb.squared { "LB(r^2)" } else { "LB(r)" };
                writeln!(
                    out,
                    "{:<18}{:>12}  p = {:.4}",
                    format!("{name} lags {}", lb.lags),
                    fmt(lb.statistic),
                    lb.p_value
                )
                .map_err(CliError::stdout)?;
            }
        }
    }
    finish(out)
}

fn fmt(v: f64) -> String {
    format!("{v:.4}")
}

fn tail_estimate(
    series: &ReturnSeries,
    choice_method: Method,
    tail: Tail,
    m: Option<usize>,
    eta: Option<usize>,
) -> Result<TailEstimate, CliError> {
    if matches!(choice_method, Method::Fixed) && m.is_none() {
        return Err(CliError::Usage("--method fixed needs --m".into()));
    }
    Ok(estimate(series, choice_method.into(), tail, m, eta)?)
}

#[derive(Serialize)]
struct TailReport {
    #[serde(flatten)]
    estimate: TailEstimate,
    se_alpha: f64,
    finite_variance: FiniteVarianceTest,
}

pub fn tail(a: TailArgs) -> Result<(), CliError> {
    let series = load(&a.input)?;
    let est = tail_estimate(&series, a.choice.method, a.choice.tail.into(), a.choice.m, a.choice.eta)?;
    let fv = finite_variance_test(&est)?;
    let report = TailReport { estimate: est, se_alpha: est.se_alpha(), finite_variance: fv };
    let mut out = open_out(a.output.out.as_deref())?;
    match a.output.format {
        Format::Json => write_json(&mut out, &report)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record([
                "method",
                "tail",
                "m",
                "threshold",
                "gamma",
                "se_gamma",
                "alpha",
                "se_alpha",
                "z_stat",
                "finite_variance",
            ])
            .map_err(tailvar::Error::from)?;
            w.write_record([
                est.method.to_string(),
                est.tail.to_string(),
                est.m.to_string(),
                est.threshold.to_string(),
                est.gamma.to_string(),
                est.se_gamma.to_string(),
                est.alpha.to_string(),
                report.se_alpha.to_string(),
                fv.z_stat.to_string(),
                fv.finite_variance.to_string(),
            ])
            .map_err(tailvar::Error::from)?;
            w.flush().map_err(CliError::stdout)?;
        }
        Format::Table => {
            writeln!(out, "method {} ({} tail), n = {}", est.method, est.tail, est.n).map_err(CliError::stdout)?;
            writeln!(out, "m          {:>10}", est.m).map_err(CliError::stdout)?;
            writeln!(out, "threshold  {:>10.4}", est.threshold).map_err(CliError::stdout)?;
            writeln!(out, "gamma      {:>10.4}  ({:.4})", est.gamma, est.se_gamma).map_err(CliError::stdout)?;
            writeln!(out, "alpha      {:>10.4}  ({:.4})", est.alpha, report.se_alpha).map_err(CliError::stdout)?;
            writeln!(out, "alpha > 2  {:>10}  z = {:.3}", fv.finite_variance, fv.z_stat).map_err(CliError::stdout)?;
        }
    }
    finish(out)
}

pub fn hillplot(a: HillplotArgs) -> Result<(), CliError> {
    let series = load(&a.input)?;
    let tail: Tail = a.tail.into();
    let eta = a.eta.unwrap_or_else(|| default_huisman_eta(&series, tail));
    let trace = hill_trace(&series, eta, tail)?;
    let out = open_out(a.out.as_deref())?;
    trace.write_csv(out)?;
    Ok(())
}

pub fn qqplot(a: QqplotArgs) -> Result<(), CliError> {
    let series = load(&a.input)?;
    let pairs = qq_normal_data(&series)?;
    let out = open_out(a.out.as_deref())?;
    write_qq_csv(&pairs, out)?;
    Ok(())
}

pub fn fit(a: FitArgs) -> Result<(), CliError> {
    let series = load(&a.input)?;
    let fit = garch_fit_with(&series, a.innovation.into())?;
    if fit.boundary {
        log::warn!("fitted persistence {} is at the stationarity boundary", fit.params.persistence());
    }
    let model = ModelFile::from_fit(&fit)?;
    write_file(&a.out, model.to_json()?.as_bytes())?;
    if let Some(p) = &a.path_out {
        fit.write_path_csv(BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?))?;
    }
    let st = stationarity_check(&fit.params)?;
    let p = fit.params;
    let se = fit.param_se;
    let mut out = open_out(None)?;
    writeln!(out, "AR(1)-GARCH(1,1), {} innovations, n = {}", innovation_name(fit.innovation), fit.n)
        .map_err(CliError::stdout)?;
    for (name, v, s) in
        [("c", p.c, se[0]), ("phi", p.phi, se[1]), ("a0", p.a0, se[2]), ("a1", p.a1, se[3]), ("b1", p.b1, se[4])]
    {
        writeln!(out, "{name:<4}{v:>12.6}  ({s:.6})").map_err(CliError::stdout)?;
    }
    writeln!(out, "loglik {:.4}", fit.loglik).map_err(CliError::stdout)?;
    writeln!(out, "a1 + b1 = {:.4} (< 1: {}), E ln(a1 z^2 + b1) = {:.6}", p.persistence(), st.sum_ok, st.eq12_integral)
        .map_err(CliError::stdout)?;
    writeln!(out, "forecast mu = {:.6}, sigma = {:.6}", fit.mu_next, fit.sigma_next).map_err(CliError::stdout)?;
    finish(out)
}

fn innovation_name(i: Innovation) -> &'static str {
    match i {
        Innovation::StudentT4 => "t(4)",
        Innovation::Normal => "normal",
    }
}

fn write_file(path: &PathBuf, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn check_grid(probabilities: &[f64], horizons: &[usize]) -> Result<(), CliError> {
    if probabilities.is_empty() || horizons.is_empty() {
        return Err(CliError::Usage("need at least one probability and one horizon".into()));
    }
    if let Some(p) = probabilities.iter().find(|p| !(**p > 0.0 && **p < 0.5)) {
        return Err(CliError::Usage(format!("probability {p} must lie in (0, 0.5)")));
    }
    if horizons.contains(&0) {
        return Err(CliError::Usage("horizons must be at least 1".into()));
    }
    Ok(())
}

fn read_model(path: &Path) -> Result<ModelFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let model = ModelFile::from_json(&text)?;
    model.params()?;
    Ok(model)
}

fn fit_model(input: &Path, column: ColumnMode, innovation: Innovation) -> Result<ModelFile, CliError> {
    let series = load_series(input, column)?;
    Ok(ModelFile::from_fit(&garch_fit_with(&series, innovation)?)?)
}

pub fn var(a: VarArgs) -> Result<(), CliError> {
    check_grid(&a.probabilities, &a.horizons)?;
    if matches!(a.method, Method::Fixed) && a.m.is_none() {
        return Err(CliError::Usage("--method fixed needs --m".into()));
    }
    let column: ColumnMode = a.column.into();
    let rows: Vec<VarEstimate> = match a.mode {
        VarMode::Unconditional => {
            let Some(input) = &a.input else {
                return Err(CliError::Usage("--mode unconditional needs --input".into()));
            };
            let series = load_series(input, column)?;
            let est = tail_estimate(&series, a.method, Tail::Lower, a.m, a.eta)?;
            unconditional_grid(&series, &est, &a.probabilities, &a.horizons)?
        }
        VarMode::Conditional => {
            let model = match (&a.model, &a.input) {
                (Some(m), None) => read_model(m)?,
                (None, Some(i)) => fit_model(i, column, Innovation::StudentT4)?,
                _ => return Err(CliError::Usage("--mode conditional needs --model or --input".into())),
            };
            let z = model.residuals()?;
            let est = tail_estimate(&z, a.method, Tail::Lower, a.m, a.eta)?;
            conditional_grid(&model.forecast(), &z, &est, &a.probabilities, &a.horizons)?
        }
        VarMode::Gaussian => {
            let model = match (&a.model, &a.input) {
                (Some(m), None) => {
                    let model = read_model(m)?;
                    if model.innovation != Innovation::Normal {
                        return Err(CliError::Usage(
                            "--mode gaussian needs a model fitted with --innovation normal, or --input".into(),
                        ));
                    }
                    model
                }
                (None, Some(i)) => fit_model(i, column, Innovation::Normal)?,
                _ => return Err(CliError::Usage("--mode gaussian needs --model or --input".into())),
            };
            gaussian_grid(&model.forecast(), &a.probabilities, &a.horizons)?
        }
    };

    let mut out = open_out(a.output.out.as_deref())?;
    match a.output.format {
        Format::Csv => {
            write_csv(&rows, &mut out)?;
        }
        Format::Json => {
            let table = VarTable::from_rows(&rows).expect("grid is non-empty");
            write_json(&mut out, &table)?;
        }
        Format::Table => {
            let table = VarTable::from_rows(&rows).expect("grid is non-empty");
            match table.alpha_used {
                Some(alpha) => writeln!(out, "{} (alpha = {alpha:.4})", table.method),
                None => writeln!(out, "{} (square-root-of-time scaling)", table.method),
            }
            .map_err(CliError::stdout)?;
            write!(out, "{:>10}", "horizon").map_err(CliError::stdout)?;
            for l in &table.levels {
                write!(out, "{:>12}", format!("{}%", 100.0 * l.confidence)).map_err(CliError::stdout)?;
            }
            writeln!(out).map_err(CliError::stdout)?;
            for &h in &a.horizons {
                write!(out, "{h:>10}").map_err(CliError::stdout)?;
                for p in &a.probabilities {
                    let v = rows.iter().find(|r| r.p == *p && r.horizon_n == h).map(|r| r.var_pct);
                    write!(out, "{:>12}", v.map(|v| format!("{v:.4}")).unwrap_or_default())
                        .map_err(CliError::stdout)?;
                }
                writeln!(out).map_err(CliError::stdout)?;
            }
        }
    }
    finish(out)
}

pub fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    check_grid(&a.probabilities, &a.horizons)?;
    let config = McConfig {
        a0: a.a0,
        a1: a.a1,
        b1: a.b1,
        n: a.n,
        reps: a.reps,
        horizons: a.horizons,
        probabilities: a.probabilities,
        seed: a.seed,
        burn_in: a.burn_in,
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let report = run_mc(&config)?;
    if report.failures > 0 {
        log::warn!("{} of {} replications failed and were excluded", report.failures, config.reps);
    }
    let mut out = open_out(a.out.as_deref())?;
    match a.format {
        Format::Json => write_json(&mut out, &report)?,
        Format::Csv => report.write_csv(&mut out)?,
        Format::Table => {
            writeln!(
                out,
                "{:>8}{:>8}{:>12}{:>10}{:>12}{:>12}",
                "p", "horizon", "mean_pred", "sd", "empirical", "published"
            )
            .map_err(CliError::stdout)?;
            for r in &report.rows {
                writeln!(
                    out,
                    "{:>8}{:>8}{:>12.4}{:>10.4}{:>12.4}{:>12}",
                    r.p,
                    r.horizon,
                    r.mean_pred,
                    r.sd_pred,
                    r.empirical,
                    r.paper_ref.map(|v| format!("{v:.4}")).unwrap_or_default()
                )
                .map_err(CliError::stdout)?;
            }
        }
    }
    finish(out)
}
