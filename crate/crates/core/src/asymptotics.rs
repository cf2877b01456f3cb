//! Small-`t` regime of the heat trace.
//!
//! * [`weyl_check`] compares `K(t)` with `N(1/t)`, which agree to leading
//!   order exactly when the eigenvalue density is constant.
//! * [`tauberian_first_term`] fits `K(t) ~ A t^{-p}` and turns it into the
//!   leading term of the counting function, `N(lambda) ~ A lambda^p / Gamma(p + 1)`
//!   (Hardy-Littlewood-Karamata). Nothing beyond the first term is attempted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;
use crate::special::gamma;
use crate::table::{fmt_sig17, Csv};
use crate::transforms::{counting, density_estimate, heat_trace, CountingMode};
use crate::Real;

/// `1/t` must not exceed this fraction of the spectrum cutoff.
pub const COVERAGE_FRACTION: f64 = 0.8;
/// Fits whose max relative residual exceeds this carry a poor-fit warning.
pub const POOR_FIT_RESIDUAL: f64 = 0.05;
/// Minimum number of log-spaced fit points.
pub const MIN_FIT_POINTS: usize = 8;
/// Largest acceptable tail-bound / heat-trace ratio inside a fit window.
pub const FIT_TAIL_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeylFlag {
    Ok,
    /// `1/t` lies beyond the covered part of the spectrum.
    Coverage,
    /// `N(1/t) = 0`; the ratio is undefined.
    Empty,
}

impl WeylFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            WeylFlag::Ok => "ok",
            WeylFlag::Coverage => "coverage",
            WeylFlag::Empty => "empty",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylRow<T> {
    pub t: T,
    pub heat_trace: T,
    /// `N(1/t)`, strict counting.
    pub count_at_inverse: u64,
    /// `K(t) / N(1/t)`; NaN when the count is zero.
    pub ratio: T,
    pub flag: WeylFlag,
}

impl<T: Real> WeylRow<T> {
    /// `|ratio - 1|`.
    pub fn deviation(&self) -> T {
        (self.ratio - T::one()).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylCheckReport<T> {
    pub rows: Vec<WeylRow<T>>,
    /// Mean eigenvalue density over `[0, cutoff]`; NaN if it cannot be binned.
    pub density_constant: T,
    /// Max relative deviation of the binned density from its mean.
    pub density_constancy: T,
}

impl<T: Real> WeylCheckReport<T> {
    pub fn t_grid(&self) -> Vec<T> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn ratios(&self) -> Vec<T> {
        self.rows.iter().map(|r| r.ratio).collect()
    }

    pub fn deviation_trend(&self) -> Vec<T> {
        self.rows.iter().map(WeylRow::deviation).collect()
    }

    /// `t,K,N_inv,ratio,flag`.
    pub fn to_csv(&self) -> String {
        self.to_csv_with(|row| row.flag.as_str().to_string())
    }

    /// Same layout with a caller-supplied flag column.
    pub fn to_csv_with(&self, mut flag: impl FnMut(&WeylRow<T>) -> String) -> String {
        let mut csv = Csv::new(&["t", "K", "N_inv", "ratio", "flag"]);
        for r in &self.rows {
            csv.row(&[
                fmt_sig17(r.t),
                fmt_sig17(r.heat_trace),
                r.count_at_inverse.to_string(),
                fmt_sig17(r.ratio),
                flag(r),
            ]);
        }
        csv.into_string()
    }
}

/// Mean density over the whole stored range, binned into at most 100 bins
/// of about 100 eigenvalues each.
fn density_summary<T: Real>(s: &Spectrum<T>) -> (T, T) {
    let bins = (s.total_count() / 100).clamp(1, 100);
    let width = s.cutoff() / T::from_count(bins);
    match density_estimate(s, width, T::zero(), s.cutoff()) {
        Ok(d) => (d.mean_density, d.max_relative_deviation),
        Err(_) => (T::nan(), T::nan()),
    }
}

/// `K(t)`, `N(1/t)` and their ratio on `t_grid`.
///
/// Points with `1/t` beyond [`COVERAGE_FRACTION`] of the cutoff are still
/// evaluated but flagged.
pub fn weyl_check<T: Real>(s: &Spectrum<T>, t_grid: &[T]) -> Result<WeylCheckReport<T>> {
    if t_grid.is_empty() {
        return Err(Error::Domain("t grid is empty".into()));
    }
    let reach = T::lit(COVERAGE_FRACTION) * s.cutoff();
    let rows = t_grid
        .iter()
        .map(|&t| {
            let k = heat_trace(s, t)?.value;
            let inverse = t.recip();
            let n = counting(s, inverse, CountingMode::Strict);
            let ratio = if n == 0 { T::nan() } else { k / T::from_count(n) };
            let flag = if inverse > reach {
                WeylFlag::Coverage
            } else if n == 0 {
                WeylFlag::Empty
            } else {
                WeylFlag::Ok
            };
            Ok(WeylRow {
                t,
                heat_trace: k,
                count_at_inverse: n,
                ratio,
                flag,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (density_constant, density_constancy) = density_summary(s);
    Ok(WeylCheckReport {
        rows,
        density_constant,
        density_constancy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit<T> {
    pub amplitude: T,
    pub exponent: T,
    /// Max relative deviation of `amplitude * t^-exponent` from `K(t)` on the window.
    pub fit_residual: T,
    pub t_window: (T, T),
}

impl<T: Real> PowerLawFit<T> {
    pub fn eval(&self, t: T) -> T {
        self.amplitude * t.powf(-self.exponent)
    }

    /// Leading term of the counting function implied by the fit.
    pub fn predicted_count(&self, lambda: T) -> T {
        self.amplitude * lambda.powf(self.exponent) / gamma(self.exponent + T::one())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauberianEstimate<T> {
    pub fit: PowerLawFit<T>,
    pub lambda_probe: T,
    pub predicted: T,
    /// `counting(lambda_probe, strict)`.
    pub actual: u64,
    /// `(predicted - actual) / actual`.
    pub relative_gap: T,
    pub poor_fit: bool,
}

impl<T: Real> TauberianEstimate<T> {
    /// `A,p,residual,lambda_probe,predicted,actual,relative_gap`.
    pub fn to_csv(&self) -> String {
        let mut csv = Csv::new(&[
            "A",
            "p",
            "residual",
            "lambda_probe",
            "predicted",
            "actual",
            "relative_gap",
        ]);
        csv.row(&[
            fmt_sig17(self.fit.amplitude),
            fmt_sig17(self.fit.exponent),
            fmt_sig17(self.fit.fit_residual),
            fmt_sig17(self.lambda_probe),
            fmt_sig17(self.predicted),
            self.actual.to_string(),
            fmt_sig17(self.relative_gap),
        ]);
        csv.into_string()
    }
}

/// Least-squares fit of `ln K = ln A - p ln t` on `points` log-spaced times.
pub fn fit_power_law<T: Real>(s: &Spectrum<T>, window: (T, T), points: usize) -> Result<PowerLawFit<T>> {
    let (lo, hi) = window;
    if !(lo > T::zero() && lo < hi && hi.is_finite()) {
        return Err(Error::Domain(format!("invalid fit window [{lo}, {hi}]")));
    }
    if points < MIN_FIT_POINTS {
        return Err(Error::Domain(format!(
            "need at least {MIN_FIT_POINTS} fit points, got {points}"
        )));
    }
    let tail = heat_trace(s, lo)?;
    if tail.tail.valid {
        if tail.tail.bound_value > T::lit(FIT_TAIL_TOLERANCE) * tail.value {
            return Err(Error::Coverage(format!(
                "truncation tail at t = {lo} is {} of K; move the window to larger t",
                tail.tail.bound_value / tail.value
            )));
        }
    } else {
        log::warn!("no tail bound for this spectrum; fit window [{lo}, {hi}] is unchecked");
    }

    let (llo, lhi) = (lo.ln(), hi.ln());
    let step = (lhi - llo) / T::from_count(points as u64 - 1);
    let mut samples = Vec::with_capacity(points);
    for i in 0..points {
        let x = llo + T::from_count(i as u64) * step;
        let t = if i + 1 == points { hi } else { x.exp() };
        let k = heat_trace(s, t)?.value;
        if k <= T::zero() {
            return Err(Error::Domain(format!("K({t}) underflowed")));
        }
        samples.push((t, x, k.ln(), k));
    }
    let n = T::from_count(points as u64);
    let mean_x = samples.iter().map(|s| s.1).sum::<T>() / n;
    let mean_y = samples.iter().map(|s| s.2).sum::<T>() / n;
    let sxy = samples.iter().map(|s| (s.1 - mean_x) * (s.2 - mean_y)).sum::<T>();
    let sxx = samples.iter().map(|s| (s.1 - mean_x).powi(2)).sum::<T>();
    let slope = sxy / sxx;
    let amplitude = (mean_y - slope * mean_x).exp();
    let exponent = -slope;
    let fit_residual = samples
        .iter()
        .map(|&(t, _, _, k)| (amplitude * t.powf(exponent.neg()) / k - T::one()).abs())
        .fold(T::zero(), T::max);
    Ok(PowerLawFit {
        amplitude,
        exponent,
        fit_residual,
        t_window: window,
    })
}

/// Fits the heat trace on `window` and compares the implied first-term
/// count at `lambda_probe` with the exact count.
pub fn tauberian_first_term<T: Real>(
    s: &Spectrum<T>,
    window: (T, T),
    lambda_probe: T,
    points: usize,
) -> Result<TauberianEstimate<T>> {
    if !(lambda_probe > T::zero() && lambda_probe <= s.cutoff()) {
        return Err(Error::Coverage(format!(
            "probe {lambda_probe} outside the covered range (0, {}]",
            s.cutoff()
        )));
    }
    let fit = fit_power_law(s, window, points)?;
    let predicted = fit.predicted_count(lambda_probe);
    let actual = counting(s, lambda_probe, CountingMode::Strict);
    let relative_gap = if actual == 0 {
        T::nan()
    } else {
        (predicted - T::from_count(actual)) / T::from_count(actual)
    };
    let poor_fit = fit.fit_residual > T::lit(POOR_FIT_RESIDUAL);
    if poor_fit {
        log::warn!(
            "power-law fit residual {} exceeds {POOR_FIT_RESIDUAL}; K may not be a power law on [{}, {}]",
            fit.fit_residual,
            window.0,
            window.1
        );
    }
    Ok(TauberianEstimate {
        fit,
        lambda_probe,
        predicted,
        actual,
        relative_gap,
        poor_fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{generate_constant_density, generate_interval, generate_rectangle};
    use std::f64::consts::PI;

    #[test]
    fn constant_density_ratios() {
        let s = generate_constant_density(1.0, 10_000).unwrap();
        let r = weyl_check(&s, &[1e-3, 0.1]).unwrap();
        let k = 1.0 / 1e-3f64.exp_m1();
        assert_eq!(r.rows[0].count_at_inverse, 999);
        // truncated at n = 10^4: the missing geometric tail is e^{-10} / (1 - e^{-0.001})
        let missing = (-10.001f64).exp() / -(-1e-3f64).exp_m1();
        assert!((r.rows[0].heat_trace - (k - missing)).abs() < 1e-9);
        assert!((r.rows[0].ratio - 1.0005).abs() < 1e-4);
        assert_eq!(r.rows[1].count_at_inverse, 9);
        assert!((r.rows[1].heat_trace - 9.5083).abs() < 1e-4);
        assert!((r.rows[1].ratio - 1.056).abs() < 1e-3);
        assert_eq!(r.density_constant, 1.0);
        assert_eq!(r.density_constancy, 0.0);
    }

    #[test]
    fn interval_ratio_tends_to_root_pi_over_two() {
        let s = generate_interval(PI, 10_000).unwrap();
        let r = weyl_check(&s, &[1e-3]).unwrap();
        // sum e^{-n^2 t} ~ sqrt(pi/t)/2 - 1/2, N(1000) = 31
        let expected = (0.5 * (PI / 1e-3).sqrt() - 0.5) / 31.0;
        assert!((r.rows[0].ratio - expected).abs() < 1e-6);
        assert!((r.rows[0].ratio - 1.0).abs() > 0.05);
    }

    #[test]
    fn coverage_and_empty_flags() {
        let s = generate_constant_density(1.0f64, 100).unwrap();
        let r = weyl_check(&s, &[0.001, 2.0, 0.1]).unwrap();
        assert_eq!(r.rows[0].flag, WeylFlag::Coverage);
        assert_eq!(r.rows[1].flag, WeylFlag::Empty);
        assert!(r.rows[1].ratio.is_nan());
        assert_eq!(r.rows[2].flag, WeylFlag::Ok);
        assert!(weyl_check(&s, &[]).is_err());
        let csv = r.to_csv();
        assert!(csv.starts_with("t,K,N_inv,ratio,flag\n"));
        assert!(csv.contains(",coverage\n"));
    }

    #[test]
    fn first_term_constant_density() {
        let s = generate_constant_density(1.0f64, 10_000).unwrap();
        let est = tauberian_first_term(&s, (1e-3, 1e-2), 500.0, 16).unwrap();
        assert!((est.fit.exponent - 1.0).abs() < 0.01);
        assert!((est.fit.amplitude - 1.0).abs() < 0.02);
        assert_eq!(est.actual, 499);
        assert!((est.predicted - 500.0).abs() < 5.0);
        assert!(!est.poor_fit);
    }

    #[test]
    fn first_term_interval() {
        let s = generate_interval(PI, 10_000).unwrap();
        let est = tauberian_first_term(&s, (1e-4, 1e-3), 1e4, 16).unwrap();
        assert!((est.fit.exponent - 0.5).abs() < 0.01);
        assert_eq!(est.actual, 99);
        assert!(est.relative_gap.abs() < 0.05);
    }

    #[test]
    fn first_term_rectangle_documented_window() {
        let s = generate_rectangle(PI, PI, 1e4).unwrap();
        let est = tauberian_first_term(&s, (1e-3, 1e-2), 200.0, 16).unwrap();
        // the perimeter correction bends the slope on this window
        assert!((est.fit.exponent - 1.0).abs() < 0.05);
        assert!(est.relative_gap.abs() < 0.05);
    }

    #[test]
    fn window_too_close_to_truncation() {
        let s = generate_constant_density(1.0, 1000).unwrap();
        assert!(matches!(
            tauberian_first_term(&s, (1e-3, 1e-2), 500.0, 16),
            Err(Error::Coverage(_))
        ));
        assert!(tauberian_first_term(&s, (1e-2, 1e-1), 5000.0, 16).is_err());
        assert!(tauberian_first_term(&s, (1e-2, 1e-1), 50.0, 4).is_err());
    }

    #[test]
    fn poor_fit_is_flagged() {
        // two eigenvalues: K is nowhere near a power law
        let s = Spectrum::<f64>::from_values("two", &[1.0, 10.0]).unwrap();
        let est = tauberian_first_term(&s, (0.1, 10.0), 5.0, 8).unwrap();
        assert!(est.poor_fit);
    }
}
