//! Counting function, heat trace and the transforms connecting them.
//!
//! * `N(lambda)` — [`counting`]
//! * `K(t) = sum_n exp(-lambda_n t)` — [`heat_trace`]
//! * `A(u, t) = sum_{lambda_n <= u} exp(-lambda_n t)` — [`partial_exponential_sum`]
//! * `K(t) = t * int_0^inf N(lambda) exp(-lambda t) dlambda` — [`laplace_of_counting`]
//! * eigenvalue density per unit interval — [`density_estimate`]
//!
//! All sums run in ascending eigenvalue order through a compensated
//! accumulator, so a given spectrum and argument always produce the same bits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_simpson, SimpsonLimits};
use crate::spectrum::{GeneratorSpec, Level, Spectrum};
use crate::sum::CompensatedSum;
use crate::table::EvalTable;
use crate::Real;

/// Whether `N(lambda)` counts eigenvalues `< lambda` or `<= lambda`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountingMode {
    #[default]
    Strict,
    Inclusive,
}

/// Number of eigenvalues (with multiplicity) below `lambda`. `O(log n)`.
pub fn counting<T: Real>(s: &Spectrum<T>, lambda: T, mode: CountingMode) -> u64 {
    match mode {
        CountingMode::Strict => s.count_below(lambda),
        CountingMode::Inclusive => s.count_at_or_below(lambda),
    }
}

/// Upper bound on the part of an infinite sum lost by truncating the
/// spectrum at `truncation_cutoff`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBound<T> {
    pub truncation_cutoff: T,
    pub bound_value: T,
    /// `false` when nothing is known about eigenvalues past the cutoff.
    pub valid: bool,
    /// `true` when `bound_value` is the exact remainder rather than a bound.
    pub exact: bool,
}

impl<T: Real> TailBound<T> {
    fn unknown(cutoff: T) -> Self {
        Self {
            truncation_cutoff: cutoff,
            bound_value: T::infinity(),
            valid: false,
            exact: false,
        }
    }
}

/// Heat trace of the stored spectrum plus a bound on the truncated remainder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatTrace<T> {
    pub value: T,
    pub tail: TailBound<T>,
}

/// `sum mult * exp(-lambda t)` over `levels`, ascending, compensated.
pub(crate) fn exp_sum<T: Real>(levels: &[Level<T>], t: T) -> T {
    let mut acc = CompensatedSum::new();
    for l in levels {
        acc.add(T::from_count(l.multiplicity) * (-l.value * t).exp());
    }
    acc.value()
}

fn check_time<T: Real>(t: T) -> Result<()> {
    if t.is_finite() && t > T::zero() {
        Ok(())
    } else {
        Err(Error::Domain(format!("t must be positive and finite, got {t}")))
    }
}

/// `K(t)` over the stored spectrum, with a tail bound derived from the
/// generator metadata.
pub fn heat_trace<T: Real>(s: &Spectrum<T>, t: T) -> Result<HeatTrace<T>> {
    check_time(t)?;
    Ok(HeatTrace {
        value: exp_sum(s.levels(), t),
        tail: heat_trace_tail(s, t),
    })
}

/// Bound on `sum_{lambda_n > cutoff} exp(-lambda_n t)` for the eigenvalues
/// the generator would have produced beyond the stored cutoff.
///
/// For the geometric generators a Weyl-type majorant `N(lambda) <= N_up(lambda)`
/// is pushed through the Stieltjes identity
/// `tail = -N(L) e^{-L t} + t int_L^inf N(lambda) e^{-lambda t} dlambda`:
///
/// * interval: `N_up = (length / pi) sqrt(lambda)`, with the tangent-line
///   majorant of the square root at `L`;
/// * rectangle: `N_up = a b lambda / (4 pi)` (quarter-ellipse area);
/// * torus: `N_up = pi (sqrt(lambda) + 1/sqrt 2)^2 <= 2 pi lambda + pi`.
///
/// The constant-density remainder is a geometric series and is returned exactly.
pub fn heat_trace_tail<T: Real>(s: &Spectrum<T>, t: T) -> TailBound<T> {
    let cutoff = s.cutoff();
    let decay = (-cutoff * t).exp();
    let stored = T::from_count(s.count_at_or_below(cutoff)) * decay;
    let two = T::lit(2.0);
    let bound = |majorant_integral: T| TailBound {
        truncation_cutoff: cutoff,
        bound_value: (majorant_integral - stored).max(T::zero()),
        valid: true,
        exact: false,
    };
    match *s.generator() {
        GeneratorSpec::Interval { length, .. } => {
            if cutoff <= T::zero() {
                return TailBound::unknown(cutoff);
            }
            let k = length / T::PI();
            let root = cutoff.sqrt();
            bound(k * decay * (root + T::one() / (two * t * root)))
        }
        GeneratorSpec::Rectangle { a, b, .. } => {
            let area = a * b / (T::lit(4.0) * T::PI());
            bound(area * decay * (cutoff + T::one() / t))
        }
        GeneratorSpec::Torus { .. } => {
            bound(decay * (two * T::PI() * (cutoff + T::one() / t) + T::PI()))
        }
        GeneratorSpec::ConstantDensity { density, count } => {
            let step = t / density;
            let next = T::from_count(count + 1) * step;
            TailBound {
                truncation_cutoff: cutoff,
                bound_value: (-next).exp() / -(-step).exp_m1(),
                valid: true,
                exact: true,
            }
        }
        GeneratorSpec::File { .. } => TailBound::unknown(cutoff),
    }
}

/// `A(u, t) = sum_{lambda_n <= u} mult_n exp(-lambda_n t)`.
///
/// `A(lambda, 0)` is the inclusive count and `A(u >= max eigenvalue, t)` is
/// bitwise equal to [`heat_trace`].
pub fn partial_exponential_sum<T: Real>(s: &Spectrum<T>, u: T, t: T) -> T {
    let k = s.levels().partition_point(|l| l.value <= u);
    exp_sum(&s.levels()[..k], t)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplaceMethod {
    /// Integrate the step function piece by piece in closed form.
    #[default]
    StepExact,
    /// Adaptive Simpson on `N(lambda) exp(-lambda t)`.
    Quadrature,
}

/// `t * int_0^boundary N(lambda) exp(-lambda t) dlambda` and what it takes
/// to compare it with `K(t)`.
///
/// For the stored spectrum,
/// `K(t) = value + truncation_correction + sum_{lambda_n > boundary} exp(-lambda_n t)`,
/// where the last sum is empty when `boundary` is the spectrum cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceTransform<T> {
    pub value: T,
    pub boundary: T,
    /// `N(boundary) * exp(-boundary t)` with inclusive counting.
    pub truncation_correction: T,
    pub error_estimate: T,
    pub method: LaplaceMethod,
}

impl<T: Real> LaplaceTransform<T> {
    /// `value + truncation_correction`, the quantity that reproduces `K(t)`.
    pub fn corrected(&self) -> T {
        self.value + self.truncation_correction
    }
}

/// Panel alignment with the eigenvalues is used up to this many distinct levels.
pub const ALIGNED_PANEL_LIMIT: usize = 10_000;

/// Relative panel tolerance of the quadrature mode.
const QUADRATURE_RTOL: f64 = 1e-10;

/// Laplace transform of the counting function, scaled by `t`.
pub fn laplace_of_counting<T: Real>(
    s: &Spectrum<T>,
    t: T,
    method: LaplaceMethod,
) -> Result<LaplaceTransform<T>> {
    check_time(t)?;
    match method {
        LaplaceMethod::StepExact => Ok(step_exact(s, t)),
        LaplaceMethod::Quadrature => quadrature(s, t),
    }
}

fn step_exact<T: Real>(s: &Spectrum<T>, t: T) -> LaplaceTransform<T> {
    let boundary = s.cutoff();
    // t * int_{lambda_n}^{L} e^{-lambda t} = e^{-lambda_n t} (1 - e^{-(L - lambda_n) t})
    let mut acc = CompensatedSum::new();
    for l in s.levels() {
        let inner = -(-(boundary - l.value) * t).exp_m1();
        acc.add(T::from_count(l.multiplicity) * (-l.value * t).exp() * inner);
    }
    let value = acc.value();
    LaplaceTransform {
        value,
        boundary,
        truncation_correction: T::from_count(s.total_count()) * (-boundary * t).exp(),
        error_estimate: T::epsilon() * value.abs(),
        method: LaplaceMethod::StepExact,
    }
}

/// Upper integration limit past which `N(lambda) exp(-lambda t)` is
/// negligible: `total * exp(-(L - lambda_1) t) <= e^{-40}`, and
/// `K(t) >= exp(-lambda_1 t)` keeps this far below `1e-12` relative.
fn quadrature_boundary<T: Real>(s: &Spectrum<T>, t: T) -> T {
    let total = T::from_count(s.total_count());
    let reach = s.min_value() + (total.ln() + T::lit(40.0)) / t;
    reach.min(s.cutoff())
}

fn quadrature<T: Real>(s: &Spectrum<T>, t: T) -> Result<LaplaceTransform<T>> {
    let boundary = quadrature_boundary(s, t);
    let rtol = T::lit(QUADRATURE_RTOL);
    let limits = SimpsonLimits::default();
    let mut acc = CompensatedSum::new();
    let mut err = T::zero();
    let mut converged = true;

    if s.distinct_len() <= ALIGNED_PANEL_LIMIT {
        // N is constant between consecutive eigenvalues; each panel is smooth.
        let levels = s.levels();
        let cumulative = s.cumulative_counts();
        for (k, level) in levels.iter().enumerate() {
            let lo = level.value;
            if lo >= boundary {
                break;
            }
            let hi = levels
                .get(k + 1)
                .map_or(boundary, |next| next.value.min(boundary));
            let height = T::from_count(cumulative[k]);
            let scale = height * (hi - lo) * (-lo * t).exp();
            let q = adaptive_simpson(|x| height * (-x * t).exp(), lo, hi, rtol * scale, limits);
            acc.add(q.value);
            err = err + q.error_estimate;
            converged &= q.converged;
        }
    } else {
        let lo = s.min_value();
        let scale = (-lo * t).exp() / t;
        let chunks = 64usize;
        let width = (boundary - lo) / T::from_count(chunks as u64);
        for i in 0..chunks {
            let a = lo + T::from_count(i as u64) * width;
            let b = if i + 1 == chunks {
                boundary
            } else {
                a + width
            };
            let tol = rtol * scale / T::from_count(chunks as u64);
            // right-continuous N: the first jump sits on the left end of chunk 0
            let q = adaptive_simpson(
                |x| T::from_count(s.count_at_or_below(x)) * (-x * t).exp(),
                a,
                b,
                tol,
                limits,
            );
            acc.add(q.value);
            err = err + q.error_estimate;
            converged &= q.converged;
        }
    }

    let value = t * acc.value();
    let error_estimate = t * err;
    if !converged {
        return Err(Error::Accuracy {
            message: format!("adaptive Simpson hit its subdivision cap at t = {t}"),
            achieved: value.as_f64(),
            error: error_estimate.as_f64(),
        });
    }
    let count = T::from_count(s.count_at_or_below(boundary));
    Ok(LaplaceTransform {
        value,
        boundary,
        truncation_correction: count * (-boundary * t).exp(),
        error_estimate,
        method: LaplaceMethod::Quadrature,
    })
}

/// Binned eigenvalue density with a constancy diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate<T> {
    /// Bin centre, count / bin width, sqrt(count) / bin width.
    pub table: EvalTable<T>,
    /// Eigenvalues in the range divided by its length.
    pub mean_density: T,
    /// `max_k |rho_k - mean| / mean`; infinite when the range holds no eigenvalue.
    pub max_relative_deviation: T,
}

/// Eigenvalue count per unit interval on `[lo, hi]`.
///
/// Bins are `[lo, lo + w]`, `(lo + w, lo + 2w]`, ...; a final partial bin is
/// normalized by its own width.
pub fn density_estimate<T: Real>(
    s: &Spectrum<T>,
    bin_width: T,
    lo: T,
    hi: T,
) -> Result<DensityEstimate<T>> {
    if !(bin_width.is_finite() && bin_width > T::zero()) {
        return Err(Error::Domain(format!("bin width must be positive, got {bin_width}")));
    }
    if !(lo.is_finite() && hi.is_finite() && lo >= T::zero() && lo < hi) {
        return Err(Error::Domain(format!("empty or invalid range [{lo}, {hi}]")));
    }
    if hi > s.cutoff() {
        return Err(Error::Domain(format!(
            "range end {hi} exceeds spectrum coverage {}",
            s.cutoff()
        )));
    }
    let ratio = (hi - lo) / bin_width;
    let rounded = ratio.round();
    let bins = if (ratio - rounded).abs() <= T::lit(1e-9) * rounded.max(T::one()) {
        rounded
    } else {
        ratio.ceil()
    };
    let bins = bins.to_u64().unwrap_or(1).max(1);

    let mut table = EvalTable::new();
    let mut densities = Vec::with_capacity(bins as usize);
    let mut below = s.count_below(lo);
    let mut left = lo;
    for k in 1..=bins {
        let right = if k == bins {
            hi
        } else {
            lo + T::from_count(k) * bin_width
        };
        let upto = s.count_at_or_below(right);
        let count = T::from_count(upto - below);
        let width = right - left;
        let rho = count / width;
        table.push((left + right) / T::lit(2.0), rho, count.sqrt() / width);
        densities.push(rho);
        below = upto;
        left = right;
    }
    let in_range = T::from_count(s.count_at_or_below(hi) - s.count_below(lo));
    let mean = in_range / (hi - lo);
    let max_relative_deviation = if mean > T::zero() {
        densities
            .iter()
            .map(|&r| ((r - mean) / mean).abs())
            .fold(T::zero(), T::max)
    } else {
        T::infinity()
    };
    Ok(DensityEstimate {
        table,
        mean_density: mean,
        max_relative_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{generate_constant_density, generate_interval, generate_torus};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn counting_boundary_semantics() {
        let s = generate_interval(PI, 100).unwrap();
        assert_eq!(counting(&s, 10.0, CountingMode::Strict), 3);
        assert_eq!(counting(&s, 9.0, CountingMode::Strict), 2);
        assert_eq!(counting(&s, 9.0, CountingMode::Inclusive), 3);
        assert_eq!(counting(&s, 0.5, CountingMode::default()), 0);
    }

    #[test]
    fn heat_trace_interval_direct_sum() {
        let s = generate_interval(PI, 100).unwrap();
        let k = heat_trace(&s, 1.0).unwrap();
        let oracle: f64 = (1..=100).map(|n| (-(n * n) as f64).exp()).sum();
        assert_relative_eq!(k.value, oracle, max_relative = 1e-15);
        assert_relative_eq!(k.value, 0.3863186, max_relative = 1e-7);
        assert!(k.tail.valid && k.tail.bound_value < 1e-300);
    }

    #[test]
    fn heat_trace_geometric_closed_form() {
        let s = generate_constant_density(1.0, 10_000).unwrap();
        let k = heat_trace(&s, 1.0).unwrap();
        assert_relative_eq!(k.value, 1.0 / (1f64.exp() - 1.0), max_relative = 1e-15);
        assert!(k.tail.exact && k.tail.bound_value == 0.0);
    }

    #[test]
    fn heat_trace_rejects_nonpositive_time() {
        let s = generate_interval(PI, 3).unwrap();
        assert!(matches!(heat_trace(&s, 0.0), Err(Error::Domain(_))));
        assert!(matches!(heat_trace(&s, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn heat_trace_large_time_limit() {
        let s = generate_interval(PI, 50).unwrap();
        let t = 700.0;
        assert_relative_eq!(heat_trace(&s, t).unwrap().value, (-700f64).exp(), max_relative = 1e-12);
        let torus = generate_torus(50.0).unwrap();
        assert_relative_eq!(heat_trace(&torus, 700.0).unwrap().value, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn file_spectrum_has_no_tail_bound() {
        let s = Spectrum::from_values("f", &[1.0, 2.0]).unwrap();
        let k = heat_trace(&s, 1.0).unwrap();
        assert!(!k.tail.valid);
    }

    #[test]
    fn interval_tail_bound_dominates_missing_terms() {
        let s = generate_interval(PI, 20).unwrap();
        let full = generate_interval(PI, 2000).unwrap();
        for t in [1e-3, 1e-2, 1e-1] {
            let tail = heat_trace(&s, t).unwrap().tail.bound_value;
            let missing = heat_trace(&full, t).unwrap().value - heat_trace(&s, t).unwrap().value;
            assert!(tail >= missing, "t={t}: {tail} < {missing}");
        }
    }

    #[test]
    fn partial_sum_examples() {
        let s = generate_interval(PI, 100).unwrap();
        assert_eq!(partial_exponential_sum(&s, 10.0, 0.0), 3.0);
        let expected = (-0.5f64).exp() + (-2f64).exp() + (-4.5f64).exp();
        assert_relative_eq!(partial_exponential_sum(&s, 10.0, 0.5), expected, max_relative = 1e-15);
        assert_relative_eq!(expected, 0.752975, max_relative = 1e-6);
        let u = s.max_value();
        assert_eq!(
            partial_exponential_sum(&s, u, 0.3).to_bits(),
            heat_trace(&s, 0.3).unwrap().value.to_bits()
        );
        assert_eq!(partial_exponential_sum(&s, 0.0, 0.3), 0.0);
    }

    #[test]
    fn step_exact_constant_density() {
        let s = generate_constant_density(1.0, 10_000).unwrap();
        let l = laplace_of_counting(&s, 1.0, LaplaceMethod::StepExact).unwrap();
        assert_relative_eq!(l.corrected(), 0.5819767068693265, max_relative = 1e-14);
    }

    #[test]
    fn quadrature_interval() {
        let s = generate_interval(PI, 100).unwrap();
        let l = laplace_of_counting(&s, 1.0, LaplaceMethod::Quadrature).unwrap();
        assert_relative_eq!(l.corrected(), 0.38631860, max_relative = 1e-7);
        let k = heat_trace(&s, 1.0).unwrap().value;
        assert_relative_eq!(l.corrected(), k, max_relative = 1e-8);
    }

    #[test]
    fn quadrature_unaligned_path() {
        // more distinct levels than the alignment limit
        let s = generate_constant_density(1.0, 12_000).unwrap();
        assert!(s.distinct_len() > ALIGNED_PANEL_LIMIT);
        let t = 0.5;
        let l = laplace_of_counting(&s, t, LaplaceMethod::Quadrature).unwrap();
        let k = heat_trace(&s, t).unwrap().value;
        assert_relative_eq!(l.corrected(), k, max_relative = 1e-8);
    }

    #[test]
    fn density_constant() {
        let s = generate_constant_density(2.0, 40).unwrap();
        let d = density_estimate(&s, 1.0, 0.0, 10.0).unwrap();
        assert_eq!(d.table.len(), 10);
        assert!(d.table.values().all(|v| v == 2.0));
        assert_eq!(d.max_relative_deviation, 0.0);
        assert_eq!(d.mean_density, 2.0);
    }

    #[test]
    fn density_interval_decreases() {
        let s = generate_interval(PI, 20).unwrap();
        let d = density_estimate(&s, 10.0, 0.0, 100.0).unwrap();
        // bins [0,10], (10,20], ... hold n^2: {1,4,9}, {16}, {25}, {36}, {49}, {64}, {81}, {100}
        let counts: Vec<f64> = d.table.values().map(|v| v * 10.0).collect();
        assert_eq!(counts, vec![3.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn density_errors() {
        let s = generate_constant_density(1.0, 10).unwrap();
        assert!(density_estimate(&s, 1.0, 5.0, 5.0).is_err());
        assert!(density_estimate(&s, 0.0, 0.0, 5.0).is_err());
        assert!(density_estimate(&s, 1.0, 0.0, 50.0).is_err());
    }
}
