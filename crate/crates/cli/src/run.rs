//! Execution of the recorded subcommands.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use heattrace::asymptotics::{tauberian_first_term, weyl_check, WeylFlag};
use heattrace::inversion::{bromwich_invert, invert_profile, InversionConfig};
use heattrace::smoothing::{beta_sweep, default_beta, smoothed_counting, smoothing_error_bound, SmoothingConfig};
use heattrace::table::{fmt_bool, fmt_sig17, Csv};
use heattrace::{
    counting, density_estimate, heat_trace, laplace_of_counting, load_spectrum, save_spectrum, CountingMode,
    EvalTable64, GeneratorSpec64, LaplaceMethod, Spectrum64,
};

use crate::args::*;

/// A usage, parameter or I/O problem (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<heattrace::Error> for UsageError {
    fn from(e: heattrace::Error) -> Self {
        Self(e.to_string())
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, UsageError> {
    Err(UsageError(msg.into()))
}

/// What a successful run read and wrote, and whether its checks passed.
#[derive(Debug)]
pub struct Outcome {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub passed: bool,
}

pub fn execute(cmd: &Command) -> Result<Outcome, UsageError> {
    match cmd {
        Command::Generate(a) => generate(a),
        Command::Verify(a) => verify(a),
        Command::Heat(a) => heat(a),
        Command::Smooth(a) => smooth(a),
        Command::Invert(a) => invert(a),
        Command::Weyl(a) => weyl(a),
        Command::Tauber(a) => tauber(a),
        Command::Density(a) => density(a),
    }
}

fn load(path: &Path) -> Result<Spectrum64, UsageError> {
    load_spectrum(path).map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), UsageError> {
    fs::write(path, text).map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

/// Reads one spectrum and writes one CSV.
fn single(spectrum: &Path, out: &Path, csv: &str, passed: bool) -> Result<Outcome, UsageError> {
    write(out, csv)?;
    Ok(Outcome {
        inputs: vec![spectrum.to_path_buf()],
        outputs: vec![out.to_path_buf()],
        passed,
    })
}

fn required<T: Copy>(value: Option<T>, flag: &str, shape: &str) -> Result<T, UsageError> {
    match value {
        Some(v) => Ok(v),
        None => usage(format!("--{flag} is required for --shape {shape}")),
    }
}

fn count_arg(value: Option<i64>, shape: &str) -> Result<u64, UsageError> {
    let n = required(value, "count", shape)?;
    u64::try_from(n).map_err(|_| UsageError(format!("invalid parameter `count`: must be at least 1, got {n}")))
}

fn generate(a: &GenerateArgs) -> Result<Outcome, UsageError> {
    let spec = match a.shape {
        Shape::Interval => GeneratorSpec64::Interval {
            length: required(a.length, "length", "interval")?,
            count: count_arg(a.count, "interval")?,
        },
        Shape::Rectangle => GeneratorSpec64::Rectangle {
            a: required(a.a, "a", "rectangle")?,
            b: required(a.b, "b", "rectangle")?,
            lambda_max: required(a.lambda_max, "lambda-max", "rectangle")?,
        },
        Shape::Torus => GeneratorSpec64::Torus {
            lambda_max: required(a.lambda_max, "lambda-max", "torus")?,
        },
        Shape::ConstantDensity => GeneratorSpec64::ConstantDensity {
            density: required(a.density, "density", "constant-density")?,
            count: count_arg(a.count, "constant-density")?,
        },
    };
    let mut s = spec.generate()?;
    if let Some(label) = &a.label {
        s = Spectrum64::from_levels(label.clone(), s.generator().clone(), Some(s.cutoff()), s.levels().to_vec(), 0.0)?;
    }
    save_spectrum(&s, &a.out).map_err(|e| UsageError(format!("{}: {e}", a.out.display())))?;
    println!(
        "{}: {} eigenvalues ({} distinct) in [{}, {}], cutoff {}",
        s.label(),
        s.total_count(),
        s.distinct_len(),
        s.min_value(),
        s.max_value(),
        s.cutoff()
    );
    Ok(Outcome {
        inputs: vec![],
        outputs: vec![a.out.clone()],
        passed: true,
    })
}

fn grid<'g>(g: &'g Option<crate::grid::Grid>, flag: &str, theorem: u8) -> Result<&'g [f64], UsageError> {
    match g {
        Some(g) => Ok(g.values()),
        None => usage(format!("--{flag} is required for --theorem {theorem}")),
    }
}

fn positive(values: &[f64], flag: &str) -> Result<(), UsageError> {
    match values.iter().find(|v| **v <= 0.0) {
        Some(v) => usage(format!("invalid parameter `{flag}`: values must be positive, got {v}")),
        None => Ok(()),
    }
}

fn verify(a: &VerifyArgs) -> Result<Outcome, UsageError> {
    if let Some(tol) = a.tol {
        if !(tol >= 0.0) {
            return usage(format!("invalid parameter `tol`: must be nonnegative, got {tol}"));
        }
    }
    let s = load(&a.spectrum)?;
    let (csv, passed, rows) = match a.theorem {
        1 => verify_laplace(&s, grid(&a.t, "t", 1)?, a.tol.unwrap_or(1e-12), a.quad_tol)?,
        2 => verify_inversion(&s, grid(&a.lambda, "lambda", 2)?, a.tol.unwrap_or(0.1))?,
        3 => {
            let lambda = match grid(&a.lambda, "lambda", 3)? {
                [one] => *one,
                _ => return usage("--theorem 3 takes a single --lambda"),
            };
            verify_smoothing(&s, lambda, grid(&a.beta, "beta", 3)?, a.tol)?
        }
        _ => verify_weyl(&s, grid(&a.t, "t", 4)?, a.tol.unwrap_or(0.01))?,
    };
    let failed = rows.iter().filter(|ok| !**ok).count();
    println!(
        "theorem {}: {}/{} rows pass ({})",
        a.theorem,
        rows.len() - failed,
        rows.len(),
        a.spectrum.display()
    );
    single(&a.spectrum, &a.out, &csv, passed)
}

type Verdict = (String, bool, Vec<bool>);

fn verify_laplace(s: &Spectrum64, ts: &[f64], tol: f64, quad_tol: f64) -> Result<Verdict, UsageError> {
    positive(ts, "t")?;
    let mut csv = Csv::new(&[
        "t",
        "K",
        "step_exact",
        "step_deviation",
        "quadrature",
        "quadrature_deviation",
        "pass",
    ]);
    let mut rows = Vec::new();
    for &t in ts {
        let k = heat_trace(s, t)?.value;
        let step = laplace_of_counting(s, t, LaplaceMethod::StepExact)?.corrected();
        let step_dev = (step - k).abs() / k;
        let quad = match laplace_of_counting(s, t, LaplaceMethod::Quadrature) {
            Ok(q) => q.corrected(),
            Err(e) => {
                log::warn!("quadrature at t = {t}: {e}");
                f64::NAN
            }
        };
        let quad_dev = (quad - k).abs() / k;
        let ok = step_dev <= tol && quad_dev <= quad_tol;
        csv.row(&[
            fmt_sig17(t),
            fmt_sig17(k),
            fmt_sig17(step),
            fmt_sig17(step_dev),
            fmt_sig17(quad),
            fmt_sig17(quad_dev),
            fmt_bool(ok).to_string(),
        ]);
        rows.push(ok);
    }
    Ok((csv.into_string(), rows.iter().all(|r| *r), rows))
}

/// Integer-valued expectations print as integers, jump midpoints as decimals.
fn fmt_expected(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{x:.0}")
    } else {
        format!("{x:.1}")
    }
}

fn verify_inversion(s: &Spectrum64, lambdas: &[f64], tol: f64) -> Result<Verdict, UsageError> {
    positive(lambdas, "lambda")?;
    let profile = invert_profile(s, lambdas, &InversionConfig::auto())?;
    let mut csv = Csv::new(&["lambda", "value", "oscillation_estimate", "rounded", "oracle", "match"]);
    let mut rows = Vec::new();
    for row in &profile.rows {
        // at an eigenvalue the inversion converges to the jump midpoint
        let jump = s.multiplicity_of(row.lambda);
        let expected = row.oracle as f64 + jump as f64 / 2.0;
        let (value, osc, ok) = match &row.result {
            Ok(r) => {
                let close = (r.value - expected).abs() <= tol;
                (fmt_sig17(r.value), fmt_sig17(r.oscillation_estimate), close && (jump > 0 || row.matches()))
            }
            Err(e) => {
                log::warn!("inversion at lambda = {}: {e}", row.lambda);
                ("NaN".to_string(), "NaN".to_string(), false)
            }
        };
        csv.row(&[
            fmt_sig17(row.lambda),
            value,
            osc,
            row.rounded().map(|r| r.to_string()).unwrap_or_default(),
            fmt_expected(expected),
            fmt_bool(ok).to_string(),
        ]);
        rows.push(ok);
    }
    Ok((csv.into_string(), rows.iter().all(|r| *r), rows))
}

fn verify_smoothing(s: &Spectrum64, lambda: f64, betas: &[f64], tol: Option<f64>) -> Result<Verdict, UsageError> {
    positive(betas, "beta")?;
    if s.position(lambda).is_some() {
        return usage(format!(
            "lambda = {lambda} is an eigenvalue; the smoothed count tends to the jump midpoint there and has no error bound"
        ));
    }
    let sweep = beta_sweep(s, lambda, betas)?;
    let mut csv = Csv::new(&["beta", "value", "deviation", "bound", "pass"]);
    let mut rows = Vec::new();
    let mut previous = f64::INFINITY;
    for (i, r) in sweep.rows.iter().enumerate() {
        let last = i + 1 == sweep.rows.len();
        let ok = r.within_bound() && r.deviation <= previous && !(last && tol.is_some_and(|t| r.deviation > t));
        previous = r.deviation;
        csv.row(&[
            fmt_sig17(r.beta),
            fmt_sig17(r.value),
            fmt_sig17(r.deviation),
            r.bound.map(fmt_sig17).unwrap_or_else(|| "NaN".into()),
            fmt_bool(ok).to_string(),
        ]);
        rows.push(ok);
    }
    Ok((csv.into_string(), rows.iter().all(|r| *r), rows))
}

fn verify_weyl(s: &Spectrum64, ts: &[f64], tol: f64) -> Result<Verdict, UsageError> {
    positive(ts, "t")?;
    let report = weyl_check(s, ts)?;
    // the grid is sorted ascending, so the first row has the smallest t
    let mut rows = Vec::new();
    let csv = report.to_csv_with(|row| {
        let (flag, ok) = match row.flag {
            WeylFlag::Ok if row.t == ts[0] && !(row.deviation() <= tol) => ("fail", false),
            WeylFlag::Ok => ("ok", true),
            other => (other.as_str(), false),
        };
        rows.push(ok);
        flag.to_string()
    });
    println!(
        "density constant {} (max relative bin deviation {:e})",
        report.density_constant, report.density_constancy
    );
    Ok((csv, rows.iter().all(|r| *r), rows))
}

fn heat(a: &HeatArgs) -> Result<Outcome, UsageError> {
    let s = load(&a.spectrum)?;
    positive(a.t.values(), "t")?;
    let mut table = EvalTable64::new();
    for &t in a.t.values() {
        let k = heat_trace(&s, t)?;
        let err = if k.tail.valid { k.tail.bound_value } else { f64::NAN };
        table.push(t, k.value, err);
    }
    single(&a.spectrum, &a.out, &table.to_csv(), true)
}

fn smooth(a: &SmoothArgs) -> Result<Outcome, UsageError> {
    let s = load(&a.spectrum)?;
    let mut csv = Csv::new(&["lambda", "beta", "value", "count", "deviation", "bound"]);
    for &lambda in a.lambda.values() {
        let beta = a.beta.unwrap_or_else(|| default_beta(&s, lambda));
        let cfg = SmoothingConfig::with_cap(beta, a.exponent_cap)?;
        let value = smoothed_counting(&s, lambda, &cfg)?;
        let count = counting(&s, lambda, CountingMode::Strict);
        let bound = smoothing_error_bound(&s, lambda, beta).unwrap_or(f64::NAN);
        csv.row(&[
            fmt_sig17(lambda),
            fmt_sig17(beta),
            fmt_sig17(value),
            count.to_string(),
            fmt_sig17(value - count as f64),
            fmt_sig17(bound),
        ]);
    }
    single(&a.spectrum, &a.out, csv.as_str(), true)
}

fn invert(a: &InvertArgs) -> Result<Outcome, UsageError> {
    let s = load(&a.spectrum)?;
    positive(a.lambda.values(), "lambda")?;
    let cfg = match (a.c, a.height, a.step) {
        (Some(c), Some(height), Some(step)) => InversionConfig::manual(c, height, step)?,
        _ => InversionConfig::auto(),
    };
    if let [only] = a.lambda.values() {
        // a lone point reports configuration problems directly
        bromwich_invert(&s, *only, &cfg)?;
    }
    let profile = invert_profile(&s, a.lambda.values(), &cfg)?;
    for row in &profile.rows {
        if let Err(e) = &row.result {
            log::warn!("inversion at lambda = {}: {e}", row.lambda);
        }
    }
    single(&a.spectrum, &a.out, &profile.to_csv(), true)
}

fn weyl(a: &WeylArgs) -> Result<Outcome, UsageError> {
    let s = load(&a.spectrum)?;
    positive(a.t.values(), "t")?;
    let report = weyl_check(&s, a.t.values())?;
    println!(
        "density constant {} (max relative bin deviation {:e})",
        report.density_constant, report.density_constancy
    );
    single(&a.spectrum, &a.out, &report.to_csv(), true)
}

fn tauber(a: &TauberArgs) -> Result<Outcome, UsageError> {
    let s = load(&a.spectrum)?;
    let est = tauberian_first_term(&s, (a.t_lo, a.t_hi), a.probe, a.points)?;
    println!(
        "K(t) ~ {} t^-{}; N({}) predicted {} vs {}{}",
        est.fit.amplitude,
        est.fit.exponent,
        est.lambda_probe,
        est.predicted,
        est.actual,
        if est.poor_fit { " (poor fit)" } else { "" }
    );
    single(&a.spectrum, &a.out, &est.to_csv(), true)
}

fn density(a: &DensityArgs) -> Result<Outcome, UsageError> {
    let s = load(&a.spectrum)?;
    let d = density_estimate(&s, a.bin_width, a.lo, a.hi)?;
    println!(
        "mean density {} (max relative bin deviation {:e})",
        d.mean_density, d.max_relative_deviation
    );
    single(&a.spectrum, &a.out, &d.table.to_csv(), true)
}
