//! Fermi-Dirac smoothed counting function
//! `N_beta(lambda) = sum_n 1 / (exp(beta (lambda_n - lambda)) + 1)`,
//! which tends to `N(lambda)` as `beta -> inf` away from the spectrum and to
//! the jump midpoint `N(lambda-) + mult / 2` at an eigenvalue.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;
use crate::sum::CompensatedSum;
use crate::table::{fmt_sig17, Csv, EvalTable};
use crate::Real;

pub const DEFAULT_EXPONENT_CAP: f64 = 700.0;
/// Default sharpness is this many inverse nearest-gap units.
pub const DEFAULT_BETA_GAPS: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingConfig<T> {
    pub beta: T,
    /// Terms with `|beta (lambda_n - lambda)|` above this are saturated to 0 or 1.
    pub exponent_cap: T,
}

impl<T: Real> SmoothingConfig<T> {
    pub fn new(beta: T) -> Result<Self> {
        Self::with_cap(beta, T::lit(DEFAULT_EXPONENT_CAP).min(T::max_exp_arg()))
    }

    pub fn with_cap(beta: T, exponent_cap: T) -> Result<Self> {
        check_beta(beta)?;
        if !(exponent_cap > T::zero() && exponent_cap <= T::max_exp_arg()) {
            return Err(Error::Domain(format!(
                "exponent cap {exponent_cap} must lie in (0, {}]",
                T::max_exp_arg()
            )));
        }
        Ok(Self { beta, exponent_cap })
    }
}

fn check_beta<T: Real>(beta: T) -> Result<()> {
    if beta.is_finite() && beta > T::zero() {
        Ok(())
    } else {
        Err(Error::Domain(format!("beta must be positive and finite, got {beta}")))
    }
}

/// Fermi-Dirac occupation `1 / (e^x + 1)` with saturation beyond `cap`.
#[inline]
fn occupation<T: Real>(x: T, cap: T) -> T {
    if x > cap {
        T::zero()
    } else if x < -cap {
        T::one()
    } else {
        T::one() / (x.exp() + T::one())
    }
}

/// `sum_n mult_n / (exp(beta (lambda_n - lambda)) + 1)`, in `[0, total count]`.
pub fn smoothed_counting<T: Real>(s: &Spectrum<T>, lambda: T, cfg: &SmoothingConfig<T>) -> Result<T> {
    check_beta(cfg.beta)?;
    let mut acc = CompensatedSum::new();
    for l in s.levels() {
        let x = cfg.beta * (l.value - lambda);
        acc.add(T::from_count(l.multiplicity) * occupation(x, cfg.exponent_cap));
    }
    Ok(acc.value())
}

/// `smoothed_counting - counting(strict)`, summed term by term so that
/// deviations far below one ulp of the count stay resolved.
pub fn smoothed_deviation<T: Real>(s: &Spectrum<T>, lambda: T, cfg: &SmoothingConfig<T>) -> Result<T> {
    check_beta(cfg.beta)?;
    let mut acc = CompensatedSum::new();
    for l in s.levels() {
        let y = cfg.beta * (l.value - lambda).abs();
        let m = T::from_count(l.multiplicity);
        let term = if l.value == lambda {
            T::lit(0.5)
        } else if y > cfg.exponent_cap {
            T::zero()
        } else {
            let tail = T::one() / (y.exp() + T::one());
            if l.value < lambda {
                -tail
            } else {
                tail
            }
        };
        acc.add(m * term);
    }
    Ok(acc.value())
}

/// `sum_n mult_n min(1 / (e^{beta |lambda_n - lambda|} + 1), e^{-beta |lambda_n - lambda|})`,
/// which dominates `|smoothed_counting - counting(strict)|`.
pub fn smoothing_error_bound<T: Real>(s: &Spectrum<T>, lambda: T, beta: T) -> Result<T> {
    check_beta(beta)?;
    if s.position(lambda).is_some() {
        return Err(Error::Domain(format!(
            "lambda = {lambda} is an eigenvalue; the smoothed count tends to the jump midpoint there"
        )));
    }
    let mut acc = CompensatedSum::new();
    for l in s.levels() {
        let e = (-beta * (l.value - lambda).abs()).exp();
        // e / (1 + e) = 1 / (e^y + 1) <= e^{-y}
        acc.add(T::from_count(l.multiplicity) * e / (T::one() + e));
    }
    Ok(acc.value())
}

/// `beta = 50 / gap`, where `gap` is the distance from `lambda` to the
/// nearest eigenvalue, or to the nearest other eigenvalue when `lambda` is one.
pub fn default_beta<T: Real>(s: &Spectrum<T>, lambda: T) -> T {
    let gap = match s.position(lambda) {
        Some(k) => {
            let levels = s.levels();
            let left = k.checked_sub(1).map(|i| lambda - levels[i].value);
            let right = levels.get(k + 1).map(|l| l.value - lambda);
            match (left, right) {
                (Some(a), Some(b)) => a.min(b),
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => T::one(),
            }
        }
        None => s.nearest_gap(lambda),
    };
    T::lit(DEFAULT_BETA_GAPS) / gap
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaRow<T> {
    pub beta: T,
    pub value: T,
    /// `|value - counting(strict)|`.
    pub deviation: T,
    /// [`smoothing_error_bound`]; `None` when `lambda` is an eigenvalue.
    pub bound: Option<T>,
}

impl<T: Real> BetaRow<T> {
    /// Deviation within the error bound (up to rounding of the two sums).
    pub fn within_bound(&self) -> bool {
        match self.bound {
            Some(b) => self.deviation <= b * (T::one() + T::lit(1e-12)) + T::min_positive_value(),
            None => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaSweep<T> {
    pub lambda: T,
    pub rows: Vec<BetaRow<T>>,
}

impl<T: Real> BetaSweep<T> {
    /// `beta,value,deviation,bound`.
    pub fn to_csv(&self) -> String {
        let mut csv = Csv::new(&["beta", "value", "deviation", "bound"]);
        for r in &self.rows {
            csv.row(&[
                fmt_sig17(r.beta),
                fmt_sig17(r.value),
                fmt_sig17(r.deviation),
                r.bound.map(fmt_sig17).unwrap_or_else(|| "NaN".into()),
            ]);
        }
        csv.into_string()
    }

    /// `(beta, value, deviation)`.
    pub fn to_eval_table(&self) -> EvalTable<T> {
        let mut t = EvalTable::new();
        for r in &self.rows {
            t.push(r.beta, r.value, r.deviation);
        }
        t
    }
}

/// Smoothed count at `lambda` for each `beta`, with deviation from the exact
/// count and the error bound.
pub fn beta_sweep<T: Real>(s: &Spectrum<T>, lambda: T, betas: &[T]) -> Result<BetaSweep<T>> {
    if betas.is_empty() {
        return Err(Error::Domain("beta list is empty".into()));
    }
    let rows = betas
        .iter()
        .map(|&beta| {
            let cfg = SmoothingConfig::new(beta)?;
            Ok(BetaRow {
                beta,
                value: smoothed_counting(s, lambda, &cfg)?,
                deviation: smoothed_deviation(s, lambda, &cfg)?.abs(),
                bound: smoothing_error_bound(s, lambda, beta).ok(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BetaSweep { lambda, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{generate_constant_density, generate_interval};
    use std::f64::consts::{E, PI};

    fn cfg(beta: f64) -> SmoothingConfig<f64> {
        SmoothingConfig::new(beta).unwrap()
    }

    #[test]
    fn away_from_spectrum_recovers_count() {
        let s = generate_interval(PI, 50).unwrap();
        let v = smoothed_counting(&s, 12.0, &cfg(10.0)).unwrap();
        assert!((v - 3.0).abs() < 1e-8);
    }

    #[test]
    fn at_eigenvalue_gives_half_weight() {
        let s = generate_constant_density(1.0, 20).unwrap();
        let v = smoothed_counting(&s, 5.0, &cfg(100.0)).unwrap();
        assert!((v - 4.5).abs() < 1e-12);
        assert_eq!(smoothed_deviation(&s, 5.0, &cfg(100.0)).unwrap(), 0.5);
    }

    #[test]
    fn far_below_spectrum_is_exactly_zero() {
        let s = generate_interval(PI, 50).unwrap();
        assert_eq!(smoothed_counting(&s, -100.0, &cfg(10.0)).unwrap(), 0.0);
    }

    #[test]
    fn rejects_nonpositive_beta() {
        assert!(SmoothingConfig::new(0.0f64).is_err());
        assert!(SmoothingConfig::new(-1.0f64).is_err());
        let s = generate_interval(PI, 5).unwrap();
        let bad = SmoothingConfig {
            beta: -1.0,
            exponent_cap: 700.0,
        };
        assert!(smoothed_counting(&s, 1.0, &bad).is_err());
    }

    #[test]
    fn bound_matches_termwise_oracle() {
        let s = generate_constant_density(1.0, 10).unwrap();
        let bound = smoothing_error_bound(&s, 2.5, 2.0).unwrap();
        // gaps 1.5, 0.5, 0.5, 1.5, 2.5, ..., 7.5 scaled by beta = 2
        let oracle: f64 = [3.0, 1.0, 1.0, 3.0, 5.0, 7.0, 9.0, 11.0, 13.0, 15.0]
            .iter()
            .map(|y: &f64| 1.0 / (y.exp() + 1.0))
            .sum();
        assert!((bound - oracle).abs() < 1e-15);
        assert!(bound > 2.0 / (E + 1.0));
    }

    #[test]
    fn bound_rejects_eigenvalue() {
        let s = generate_constant_density(1.0, 10).unwrap();
        assert!(matches!(smoothing_error_bound(&s, 3.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn bound_at_tiny_level_for_interval() {
        let s = generate_interval(PI, 50).unwrap();
        assert!(smoothing_error_bound(&s, 12.0, 10.0).unwrap() < 1e-12);
    }

    #[test]
    fn single_eigenvalue_closed_form() {
        let s = Spectrum::<f64>::from_values("one", &[1.0]).unwrap();
        let sweep = beta_sweep(&s, 2.0, &[1.0, 10.0]).unwrap();
        assert!((sweep.rows[0].value - 0.7310586).abs() < 1e-7);
        assert!((sweep.rows[1].value - 0.9999546).abs() < 1e-7);
        assert!((sweep.rows[0].value - 1.0 / ((-1f64).exp() + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn symmetric_pair_cancels() {
        let s = Spectrum::<f64>::from_values("pair", &[4.0, 6.0]).unwrap();
        for beta in [0.1, 1.0, 7.0] {
            assert_eq!(smoothed_deviation(&s, 5.0, &cfg(beta)).unwrap(), 0.0);
            let v = smoothed_counting(&s, 5.0, &cfg(beta)).unwrap();
            assert!((v - 1.0).abs() <= 2.0 * f64::EPSILON);
        }
    }

    #[test]
    fn gap_midpoint_bound_leading_order() {
        // midway in the gap of width 1 between 5 and 6
        let s = generate_constant_density(1.0, 30).unwrap();
        for beta in [20.0, 40.0] {
            let bound = smoothing_error_bound(&s, 5.5, beta).unwrap();
            let leading = 2.0 * (-beta * 0.5f64).exp();
            assert!((bound / leading - 1.0).abs() < 1e-4, "{bound} vs {leading}");
        }
    }

    #[test]
    fn default_beta_uses_nearest_gap() {
        let s = generate_constant_density(1.0, 30).unwrap();
        assert_eq!(default_beta(&s, 5.25), 200.0);
        assert_eq!(default_beta(&s, 5.0), 50.0);
    }

    #[test]
    fn sweep_csv_layout() {
        let s = generate_interval(PI, 50).unwrap();
        let sweep = beta_sweep(&s, 12.0, &[1.0, 2.0]).unwrap();
        let csv = sweep.to_csv();
        assert!(csv.starts_with("beta,value,deviation,bound\n"));
        assert_eq!(csv.lines().count(), 3);
        assert!(beta_sweep(&s, 12.0, &[]).is_err());
        assert!(beta_sweep(&s, 12.0, &[1.0, -2.0]).is_err());
    }

    #[test]
    fn single_precision() {
        let s = generate_interval(std::f32::consts::PI, 20).unwrap();
        let v = smoothed_counting(&s, 12.0f32, &SmoothingConfig::new(10.0f32).unwrap()).unwrap();
        assert!((v - 3.0).abs() < 1e-5);
    }
}
