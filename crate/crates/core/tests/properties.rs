//! Invariants of the core operations over randomly generated spectra.

use heattrace::smoothing::{smoothed_counting, smoothed_deviation, smoothing_error_bound, SmoothingConfig};
use heattrace::{
    counting, heat_trace, partial_exponential_sum, CountingMode, GeneratorSpec, Level, Spectrum,
};
use proptest::prelude::*;

fn spectrum_strategy() -> impl Strategy<Value = Spectrum<f64>> {
    prop::collection::vec((0.0f64..200.0, 1u64..5), 1..60).prop_map(|raw| {
        let levels = raw.into_iter().map(|(v, m)| Level::new(v, m)).collect();
        Spectrum::from_levels("random", GeneratorSpec::file(), None, levels, 0.0).unwrap()
    })
}

proptest! {
    #[test]
    fn construction_invariants(s in spectrum_strategy()) {
        let levels = s.levels();
        prop_assert!(levels.windows(2).all(|w| w[0].value < w[1].value));
        prop_assert!(levels.iter().all(|l| l.value >= 0.0 && l.multiplicity >= 1));
        prop_assert!(s.total_count() >= 1);
    }

    #[test]
    fn counting_is_monotone_and_modes_differ_by_multiplicity(
        s in spectrum_strategy(),
        a in -10.0f64..220.0,
        b in -10.0f64..220.0,
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(counting(&s, lo, CountingMode::Strict) <= counting(&s, hi, CountingMode::Strict));
        prop_assert!(counting(&s, lo, CountingMode::Inclusive) <= counting(&s, hi, CountingMode::Inclusive));
        for level in s.levels() {
            let diff = counting(&s, level.value, CountingMode::Inclusive)
                - counting(&s, level.value, CountingMode::Strict);
            prop_assert_eq!(diff, level.multiplicity);
        }
        if s.position(a).is_none() {
            prop_assert_eq!(counting(&s, a, CountingMode::Strict), counting(&s, a, CountingMode::Inclusive));
        }
    }

    #[test]
    fn partial_sum_identities(s in spectrum_strategy(), u in 0.0f64..220.0, t in 0.001f64..2.0) {
        prop_assert_eq!(
            partial_exponential_sum(&s, u, 0.0),
            counting(&s, u, CountingMode::Inclusive) as f64
        );
        prop_assert_eq!(
            partial_exponential_sum(&s, s.max_value(), t).to_bits(),
            heat_trace(&s, t).unwrap().value.to_bits()
        );
    }

    #[test]
    fn heat_trace_strictly_decreasing(s in spectrum_strategy(), t in 0.001f64..1.0) {
        prop_assume!(s.max_value() > 0.0);
        let k1 = heat_trace(&s, t).unwrap().value;
        let k2 = heat_trace(&s, t * 1.5).unwrap().value;
        prop_assert!(k2 < k1);
        prop_assert!(k1 <= s.total_count() as f64);
    }

    #[test]
    fn smoothing_range_and_monotonicity(
        s in spectrum_strategy(),
        lambda in -10.0f64..220.0,
        beta in 0.01f64..5.0,
    ) {
        let cfg = SmoothingConfig::new(beta).unwrap();
        let v = smoothed_counting(&s, lambda, &cfg).unwrap();
        prop_assert!(v >= 0.0 && v <= s.total_count() as f64);
        let w = smoothed_counting(&s, lambda + 0.5, &cfg).unwrap();
        prop_assert!(w >= v);
    }

    #[test]
    fn smoothing_deviation_within_bound(
        s in spectrum_strategy(),
        lambda in 0.0f64..200.0,
        beta in 0.01f64..50.0,
    ) {
        prop_assume!(s.position(lambda).is_none());
        let cfg = SmoothingConfig::new(beta).unwrap();
        let dev = smoothed_deviation(&s, lambda, &cfg).unwrap().abs();
        let bound = smoothing_error_bound(&s, lambda, beta).unwrap();
        prop_assert!(dev <= bound * (1.0 + 1e-12) + f64::MIN_POSITIVE);
        let gap = s.nearest_gap(lambda);
        prop_assert!(bound <= s.total_count() as f64 * (-beta * gap).exp() * (1.0 + 1e-12));
        // the term-wise deviation is the same quantity as value - count
        let value = smoothed_counting(&s, lambda, &cfg).unwrap();
        let direct = value - counting(&s, lambda, CountingMode::Strict) as f64;
        prop_assert!((direct.abs() - dev).abs() <= 1e-12 * s.total_count() as f64);
    }

    #[test]
    fn json_round_trip_is_bit_exact(s in spectrum_strategy()) {
        let text = s.to_json_string().unwrap();
        let back = Spectrum::<f64>::from_json_str(&text).unwrap();
        prop_assert_eq!(&back, &s);
        for (a, b) in back.levels().iter().zip(s.levels()) {
            prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
        }
    }
}
