//! Recovering `N(lambda)` from the heat trace by the Bromwich integral
//!
//! ```text
//! N(lambda) = 1/(2 pi i) int_{c - i inf}^{c + i inf} K(s) e^{lambda s} / s ds
//!           = 1/pi int_0^inf Re[ K(c + i w) e^{lambda (c + i w)} / (c + i w) ] dw
//! ```
//!
//! evaluated on a vertical line `Re s = c` to the right of the abscissa of
//! convergence of `K`, truncated at height `T` and discretized by the
//! trapezoidal rule with step `h`.
//!
//! Three error sources, and how the automatic configuration controls them:
//!
//! * discretization (aliasing): with step `h` the trapezoidal sum equals the
//!   exact inverse plus `sum_{k >= 1} e^{-2 pi k c / h} N(lambda + 2 pi k / h)`;
//!   `h = pi / (8 lambda)` and `c lambda = 1` make this `~ e^{-16} N(17 lambda)`.
//! * truncation: each eigenvalue contributes an oscillatory tail of size
//!   `~ e^{c (lambda - lambda_n)} / (pi |lambda - lambda_n| T)`; `T` is chosen
//!   so the sum of these stays below [`TRUNCATION_TARGET`].
//! * jumps: at an eigenvalue the integral converges to the midpoint of the
//!   jump, `N(lambda-) + mult / 2`. Gibbs oscillation is not filtered.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;
use crate::sum::CompensatedSum;
use crate::table::{fmt_bool, fmt_sig17, Csv, EvalTable};
use crate::transforms::{counting, CountingMode};
use crate::Real;

/// `c lambda` of the automatic contour.
pub const CONTOUR_KAPPA: f64 = 1.0;
/// Target for the summed truncation-error bound of the automatic height.
pub const TRUNCATION_TARGET: f64 = 0.01;
/// The automatic height never exceeds this multiple of `c`.
pub const HEIGHT_CAP_FACTOR: f64 = 1e5;
/// Minimum number of eigenvalues for [`abscissa_estimate`].
pub const MIN_ABSCISSA_ENTRIES: u64 = 32;
/// Terms with `c (lambda_n - lambda)` above this are below double precision.
const NEGLIGIBLE_EXPONENT: f64 = 45.0;
/// Phasors are recomputed from scratch this often to stop drift.
const REANCHOR_INTERVAL: usize = 256;
const MAX_STEPS: f64 = 5e7;

/// Contour parameters. With `auto` set, `c`, `height` and `step` are derived
/// per evaluation point and the stored values are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionConfig<T> {
    /// Abscissa of the vertical contour.
    pub c: T,
    /// Truncation height `T` along the imaginary axis.
    pub height: T,
    /// Trapezoidal step `h`.
    pub step: T,
    pub auto: bool,
}

impl<T: Real> InversionConfig<T> {
    pub fn auto() -> Self {
        Self {
            c: T::zero(),
            height: T::zero(),
            step: T::zero(),
            auto: true,
        }
    }

    pub fn manual(c: T, height: T, step: T) -> Result<Self> {
        let cfg = Self {
            c,
            height,
            step,
            auto: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > T::zero()) {
            return Err(Error::Configuration(format!("contour abscissa c = {} must be positive", self.c)));
        }
        if !(self.step > T::zero() && self.height.is_finite() && self.step < self.height) {
            return Err(Error::Configuration(format!(
                "need 0 < h < T, got h = {}, T = {}",
                self.step, self.height
            )));
        }
        Ok(())
    }
}

impl<T: Real> Default for InversionConfig<T> {
    fn default() -> Self {
        Self::auto()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Decreasing,
    Flat,
    Increasing,
}

/// Tail estimate of `limsup (ln n) / lambda_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbscissaEstimate<T> {
    pub value: T,
    /// Whether `(ln n) / lambda_n` is still moving across the examined tail:
    /// compares the maxima over its lower and upper halves.
    pub trend: Trend,
}

/// Estimates the abscissa of convergence of `K(t) = sum_n e^{-lambda_n t}`,
/// i.e. `limsup (ln n) / lambda_n`, as the maximum over the upper half of
/// the stored spectrum (by cumulative index).
pub fn abscissa_estimate<T: Real>(s: &Spectrum<T>) -> Result<AbscissaEstimate<T>> {
    let total = s.total_count();
    if total < MIN_ABSCISSA_ENTRIES {
        return Err(Error::InsufficientData {
            needed: MIN_ABSCISSA_ENTRIES,
            found: total,
        });
    }
    let ratios: Vec<T> = s
        .levels()
        .iter()
        .zip(s.cumulative_counts())
        .filter(|(l, &n)| 2 * n > total && l.value > T::zero())
        .map(|(l, &n)| T::from_count(n).ln() / l.value)
        .collect();
    if ratios.is_empty() {
        return Err(Error::InsufficientData {
            needed: MIN_ABSCISSA_ENTRIES,
            found: total,
        });
    }
    let max = |xs: &[T]| xs.iter().copied().fold(T::neg_infinity(), T::max);
    let value = max(&ratios);
    let (lower, upper) = ratios.split_at(ratios.len() / 2);
    let trend = if lower.is_empty() {
        Trend::Flat
    } else {
        let (a, b) = (max(lower), max(upper));
        let slack = T::lit(1e-3) * a.abs().max(b.abs());
        if b < a - slack {
            Trend::Decreasing
        } else if b > a + slack {
            Trend::Increasing
        } else {
            Trend::Flat
        }
    };
    Ok(AbscissaEstimate { value, trend })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionResult<T> {
    pub value: T,
    /// Spread of the running integral over the last eighth of the contour.
    pub oscillation_estimate: T,
    pub config_used: InversionConfig<T>,
}

/// Contour term `mult * e^{c (lambda - lambda_n)}` rotating at rate `lambda - lambda_n`.
struct Term<T> {
    weight: T,
    rate: T,
}

fn contour_terms<T: Real>(s: &Spectrum<T>, lambda: T, c: T) -> Vec<Term<T>> {
    let cut = T::lit(NEGLIGIBLE_EXPONENT);
    s.levels()
        .iter()
        .take_while(|l| c * (l.value - lambda) <= cut)
        .map(|l| Term {
            weight: T::from_count(l.multiplicity) * (c * (lambda - l.value)).exp(),
            rate: lambda - l.value,
        })
        .collect()
}

/// Fills in `c`, `T` and `h` for `lambda`, or checks a manual configuration.
pub fn resolve_config<T: Real>(
    s: &Spectrum<T>,
    lambda: T,
    cfg: &InversionConfig<T>,
) -> Result<InversionConfig<T>> {
    let abscissa = abscissa_estimate(s).ok().map(|a| a.value);
    let resolved = if cfg.auto {
        let c = (T::lit(2.0) * abscissa.unwrap_or_else(T::zero)).max(T::lit(CONTOUR_KAPPA) / lambda);
        let step = T::PI() / (T::lit(8.0) * lambda);
        // summed truncation-error bound; an eigenvalue at lambda itself
        // contributes (1/pi)(pi/2 - atan(T/c)) <= c / (pi T)
        let mut bound = CompensatedSum::new();
        for term in contour_terms(s, lambda, c) {
            if term.rate == T::zero() {
                bound.add(term.weight * c);
            } else {
                bound.add(term.weight / term.rate.abs());
            }
        }
        let wanted = bound.value() / (T::PI() * T::lit(TRUNCATION_TARGET));
        let height = wanted
            .min(T::lit(HEIGHT_CAP_FACTOR) * c)
            .max(T::lit(64.0) * step);
        InversionConfig {
            c,
            height,
            step,
            auto: true,
        }
    } else {
        if let Some(a) = abscissa {
            if cfg.c <= a {
                return Err(Error::Configuration(format!(
                    "contour abscissa c = {} does not exceed the abscissa of convergence estimate {a}",
                    cfg.c
                )));
            }
        }
        *cfg
    };
    resolved.validate()?;
    if resolved.c * lambda > T::max_exp_arg() - T::lit(10.0) {
        return Err(Error::Configuration(format!(
            "e^(c lambda) overflows for c = {}, lambda = {lambda}; use a smaller c",
            resolved.c
        )));
    }
    if resolved.height / resolved.step > T::lit(MAX_STEPS) {
        return Err(Error::Configuration(format!(
            "T / h = {} exceeds the step budget {MAX_STEPS:e}",
            resolved.height / resolved.step
        )));
    }
    Ok(resolved)
}

/// `sum_n weight_n e^{i rate_n w}`, i.e. `K(c + i w) e^{lambda (c + i w)}`.
fn contour_sum<T: Real>(terms: &[Term<T>], w: T) -> Complex<T> {
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for term in terms {
        let (sin, cos) = (term.rate * w).sin_cos();
        re.add(term.weight * cos);
        im.add(term.weight * sin);
    }
    Complex::new(re.value(), im.value())
}

/// Numerical Bromwich inversion of the heat trace at `lambda`.
pub fn bromwich_invert<T: Real>(
    s: &Spectrum<T>,
    lambda: T,
    cfg: &InversionConfig<T>,
) -> Result<InversionResult<T>> {
    if !(lambda.is_finite() && lambda > T::zero()) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    let cfg = resolve_config(s, lambda, cfg)?;
    let (c, h) = (cfg.c, cfg.step);
    let terms = contour_terms(s, lambda, c);
    let steps = (cfg.height / h).ceil().to_usize().expect("step count bounded");

    // The integrand at -w is the conjugate of the one at +w; the half-line
    // form relies on it, so check one symmetric pair.
    let plus = contour_sum(&terms, h) / Complex::new(c, h);
    let minus = contour_sum(&terms, -h) / Complex::new(c, -h);
    let asymmetry = (plus + minus).im.abs();
    if asymmetry > T::lit(1e-10) * plus.norm().max(T::min_positive_value()) {
        return Err(Error::Accuracy {
            message: "contour integrand is not conjugate symmetric".into(),
            achieved: asymmetry.as_f64(),
            error: asymmetry.as_f64(),
        });
    }

    let integrand = |sum: Complex<T>, w: T| (sum.re * c + sum.im * w) / (c * c + w * w);
    let half = T::lit(0.5);
    let scale = h / T::PI();
    let tail_start = steps - steps / 8;

    // phasors z_n = weight_n e^{i rate_n w_j}, advanced by e^{i rate_n h}
    let rotations: Vec<Complex<T>> = terms
        .iter()
        .map(|t| {
            let (sin, cos) = (t.rate * h).sin_cos();
            Complex::new(cos, sin)
        })
        .collect();
    let mut phasors: Vec<Complex<T>> = terms.iter().map(|t| Complex::new(t.weight, T::zero())).collect();

    let mut running = CompensatedSum::new();
    let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
    for j in 0..=steps {
        let w = T::from_count(j as u64) * h;
        if j > 0 {
            if j % REANCHOR_INTERVAL == 0 {
                for (z, t) in phasors.iter_mut().zip(&terms) {
                    let (sin, cos) = (t.rate * w).sin_cos();
                    *z = Complex::new(t.weight * cos, t.weight * sin);
                }
            } else {
                for (z, r) in phasors.iter_mut().zip(&rotations) {
                    *z = *z * *r;
                }
            }
        }
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        for z in &phasors {
            re.add(z.re);
            im.add(z.im);
        }
        let f = integrand(Complex::new(re.value(), im.value()), w);
        if j == 0 || j == steps {
            running.add(half * f);
        } else {
            running.add(f);
        }
        if j >= tail_start {
            // value of the trapezoid rule truncated at w_j
            let partial = if j == steps {
                running.value()
            } else {
                running.value() - half * f
            } * scale;
            lo = lo.min(partial);
            hi = hi.max(partial);
        }
    }
    let value = running.value() * scale;
    Ok(InversionResult {
        value,
        oscillation_estimate: (hi - lo).max(T::zero()),
        config_used: cfg,
    })
}

/// One grid point of [`invert_profile`].
#[derive(Debug)]
pub struct ProfileRow<T> {
    pub lambda: T,
    pub result: Result<InversionResult<T>>,
    /// `counting(lambda, strict)`.
    pub oracle: u64,
}

impl<T: Real> ProfileRow<T> {
    pub fn rounded(&self) -> Option<i64> {
        self.result
            .as_ref()
            .ok()
            .and_then(|r| r.value.round().to_i64())
    }

    /// Rounded inversion equals the counting oracle.
    pub fn matches(&self) -> bool {
        self.rounded() == i64::try_from(self.oracle).ok()
    }

    /// `|value - oracle|` before rounding; infinite for failed rows.
    pub fn abs_error(&self) -> T {
        match &self.result {
            Ok(r) => (r.value - T::from_count(self.oracle)).abs(),
            Err(_) => T::infinity(),
        }
    }
}

/// Inversion over a grid, compared row by row with the counting oracle.
#[derive(Debug)]
pub struct InversionProfile<T> {
    pub rows: Vec<ProfileRow<T>>,
}

impl<T: Real> InversionProfile<T> {
    /// `lambda,value,oscillation_estimate,rounded,oracle,match`.
    pub fn to_csv(&self) -> String {
        let mut csv = Csv::new(&[
            "lambda",
            "value",
            "oscillation_estimate",
            "rounded",
            "oracle",
            "match",
        ]);
        for row in &self.rows {
            let (value, osc) = match &row.result {
                Ok(r) => (fmt_sig17(r.value), fmt_sig17(r.oscillation_estimate)),
                Err(_) => ("NaN".to_string(), "NaN".to_string()),
            };
            csv.row(&[
                fmt_sig17(row.lambda),
                value,
                osc,
                row.rounded().map(|r| r.to_string()).unwrap_or_default(),
                row.oracle.to_string(),
                fmt_bool(row.matches()).to_string(),
            ]);
        }
        csv.into_string()
    }

    /// `(lambda, value, oscillation_estimate)` for the rows that succeeded.
    pub fn to_eval_table(&self) -> EvalTable<T> {
        let mut table = EvalTable::new();
        for row in &self.rows {
            if let Ok(r) = &row.result {
                table.push(row.lambda, r.value, r.oscillation_estimate);
            }
        }
        table
    }

    pub fn all_match(&self) -> bool {
        self.rows.iter().all(ProfileRow::matches)
    }
}

/// Runs [`bromwich_invert`] at every grid point (in parallel; each point is
/// evaluated sequentially, so results do not depend on scheduling). Per-row
/// failures are recorded in the row instead of aborting the batch.
pub fn invert_profile<T: Real>(
    s: &Spectrum<T>,
    grid: &[T],
    cfg: &InversionConfig<T>,
) -> Result<InversionProfile<T>> {
    if grid.is_empty() {
        return Err(Error::Domain("inversion grid is empty".into()));
    }
    let rows = grid
        .par_iter()
        .map(|&lambda| ProfileRow {
            lambda,
            result: bromwich_invert(s, lambda, cfg),
            oracle: counting(s, lambda, CountingMode::Strict),
        })
        .collect();
    Ok(InversionProfile { rows })
}
