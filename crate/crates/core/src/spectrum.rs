//! Eigenvalue spectra: construction, closed-form generators and JSON persistence.
//!
//! A [`Spectrum`] is a finite truncation of a Laplace spectrum, stored as
//! strictly increasing distinct eigenvalues with multiplicities. The
//! truncation cutoff is kept alongside the entries: the spectrum is complete
//! on `[0, cutoff]`, which is what the heat-trace tail bounds rely on.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::Real;

/// Relative tolerance used to merge nearly equal eigenvalues read from user files.
pub const FILE_MERGE_TOLERANCE: f64 = 1e-12;

/// Largest torus cutoff accepted by [`generate_torus`].
const TORUS_LAMBDA_LIMIT: f64 = 1e8;

/// One distinct eigenvalue and its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level<T> {
    pub value: T,
    pub multiplicity: u64,
}

impl<T> Level<T> {
    pub fn new(value: T, multiplicity: u64) -> Self {
        Self {
            value,
            multiplicity,
        }
    }
}

/// How a spectrum was produced. Serialized as the `generator` object of the
/// spectrum file, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec<T> {
    /// Dirichlet interval of length `length`: `(n pi / length)^2`, `n = 1..=count`.
    Interval { length: T, count: u64 },
    /// Dirichlet rectangle `a x b`: `(m pi / a)^2 + (n pi / b)^2 <= lambda_max`.
    Rectangle { a: T, b: T, lambda_max: T },
    /// Flat square torus of side `2 pi`: `m^2 + n^2 <= lambda_max`, `(m, n)` integer.
    Torus { lambda_max: T },
    /// Equally spaced spectrum `n / density`, `n = 1..=count`.
    ConstantDensity { density: T, count: u64 },
    /// User-supplied spectrum; any extra keys are preserved verbatim.
    File {
        #[serde(flatten)]
        params: serde_json::Map<String, serde_json::Value>,
    },
}

impl<T> GeneratorSpec<T> {
    pub fn file() -> Self {
        GeneratorSpec::File {
            params: serde_json::Map::new(),
        }
    }
}

impl<T: Real> GeneratorSpec<T> {
    /// Checks the geometric parameters without generating anything.
    pub fn validate(&self) -> Result<()> {
        fn positive<T: Real>(field: &'static str, x: T) -> Result<()> {
            if x.is_finite() && x > T::zero() {
                Ok(())
            } else {
                Err(invalid(field, format!("must be a positive finite number, got {x}")))
            }
        }
        fn nonzero(field: &'static str, n: u64) -> Result<()> {
            if n == 0 {
                Err(invalid(field, "must be at least 1"))
            } else {
                Ok(())
            }
        }
        match *self {
            GeneratorSpec::Interval { length, count } => {
                positive("length", length)?;
                nonzero("count", count)
            }
            GeneratorSpec::Rectangle { a, b, lambda_max } => {
                positive("a", a)?;
                positive("b", b)?;
                positive("lambda_max", lambda_max)
            }
            GeneratorSpec::Torus { lambda_max } => {
                if lambda_max.is_finite() && lambda_max >= T::zero() {
                    Ok(())
                } else {
                    Err(invalid("lambda_max", format!("must be finite and >= 0, got {lambda_max}")))
                }
            }
            GeneratorSpec::ConstantDensity { density, count } => {
                positive("density", density)?;
                nonzero("count", count)
            }
            GeneratorSpec::File { .. } => Ok(()),
        }
    }

    /// Runs the generator.
    pub fn generate(&self) -> Result<Spectrum<T>> {
        match *self {
            GeneratorSpec::Interval { length, count } => generate_interval(length, count),
            GeneratorSpec::Rectangle { a, b, lambda_max } => generate_rectangle(a, b, lambda_max),
            GeneratorSpec::Torus { lambda_max } => generate_torus(lambda_max),
            GeneratorSpec::ConstantDensity { density, count } => {
                generate_constant_density(density, count)
            }
            GeneratorSpec::File { .. } => Err(Error::Configuration(
                "file spectra are loaded, not generated".into(),
            )),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            GeneratorSpec::Interval { .. } => "interval",
            GeneratorSpec::Rectangle { .. } => "rectangle",
            GeneratorSpec::Torus { .. } => "torus",
            GeneratorSpec::ConstantDensity { .. } => "constant_density",
            GeneratorSpec::File { .. } => "file",
        }
    }
}

/// On-disk layout of a spectrum.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SpectrumFile<T> {
    #[serde(default)]
    label: String,
    #[serde(default = "GeneratorSpec::file")]
    generator: GeneratorSpec<T>,
    #[serde(default)]
    cutoff: Option<T>,
    entries: Vec<FileEntry<T>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FileEntry<T> {
    value: T,
    #[serde(default = "one")]
    multiplicity: u64,
}

fn one() -> u64 {
    1
}

/// A finite, validated eigenvalue spectrum.
///
/// Invariants: levels strictly increasing, values finite and `>= 0`,
/// multiplicities `>= 1`, at least one eigenvalue, `cutoff >=` largest value.
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    label: String,
    generator: GeneratorSpec<T>,
    cutoff: T,
    levels: Vec<Level<T>>,
    /// `cumulative[k]` = total multiplicity of `levels[..=k]`.
    cumulative: Vec<u64>,
}

impl<T: Real> Spectrum<T> {
    /// Builds a spectrum from raw `(value, multiplicity)` pairs in any order.
    ///
    /// Values closer than `merge_tolerance` (relative) are merged into one
    /// level carrying the summed multiplicity; `merge_tolerance = 0` merges
    /// exact duplicates only. A `None` cutoff defaults to the largest value.
    pub fn from_levels(
        label: impl Into<String>,
        generator: GeneratorSpec<T>,
        cutoff: Option<T>,
        raw: Vec<Level<T>>,
        merge_tolerance: T,
    ) -> Result<Self> {
        for (i, level) in raw.iter().enumerate() {
            if !level.value.is_finite() {
                return Err(Error::Validation(format!(
                    "entry {i}: eigenvalue {} is not finite",
                    level.value
                )));
            }
            if level.value < T::zero() {
                return Err(Error::Validation(format!(
                    "entry {i}: negative eigenvalue {}",
                    level.value
                )));
            }
            if level.multiplicity == 0 {
                return Err(Error::Validation(format!("entry {i}: multiplicity must be >= 1")));
            }
        }
        if raw.is_empty() {
            return Err(Error::EmptySpectrum("no eigenvalues supplied".into()));
        }
        let (levels, reordered) = sort_and_merge(raw, merge_tolerance);
        if reordered {
            log::warn!("spectrum entries were unsorted or repeated; sorted and merged");
        }
        let max = levels.last().map(|l| l.value).unwrap_or_else(T::zero);
        let cutoff = cutoff.unwrap_or(max);
        if !cutoff.is_finite() || cutoff < max {
            return Err(Error::Validation(format!(
                "cutoff {cutoff} is below the largest eigenvalue {max}"
            )));
        }
        let cumulative = levels
            .iter()
            .scan(0u64, |acc, l| {
                *acc += l.multiplicity;
                Some(*acc)
            })
            .collect();
        Ok(Self {
            label: label.into(),
            generator,
            cutoff,
            levels,
            cumulative,
        })
    }

    /// User-supplied eigenvalue list (each with multiplicity one), merged
    /// with the file tolerance.
    pub fn from_values(label: impl Into<String>, values: &[T]) -> Result<Self> {
        let raw = values.iter().map(|&v| Level::new(v, 1)).collect();
        Self::from_levels(
            label,
            GeneratorSpec::file(),
            None,
            raw,
            T::lit(FILE_MERGE_TOLERANCE),
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn generator(&self) -> &GeneratorSpec<T> {
        &self.generator
    }

    /// Truncation boundary: the spectrum is complete on `[0, cutoff]`.
    pub fn cutoff(&self) -> T {
        self.cutoff
    }

    pub fn levels(&self) -> &[Level<T>] {
        &self.levels
    }

    /// Number of distinct eigenvalues.
    pub fn distinct_len(&self) -> usize {
        self.levels.len()
    }

    /// Total number of eigenvalues counted with multiplicity.
    pub fn total_count(&self) -> u64 {
        *self.cumulative.last().expect("spectrum is nonempty")
    }

    pub fn min_value(&self) -> T {
        self.levels[0].value
    }

    pub fn max_value(&self) -> T {
        self.levels[self.levels.len() - 1].value
    }

    /// Inclusive cumulative counts aligned with [`levels`](Self::levels).
    pub fn cumulative_counts(&self) -> &[u64] {
        &self.cumulative
    }

    /// Number of eigenvalues `< lambda`.
    pub fn count_below(&self, lambda: T) -> u64 {
        let k = self.levels.partition_point(|l| l.value < lambda);
        self.prefix(k)
    }

    /// Number of eigenvalues `<= lambda`.
    pub fn count_at_or_below(&self, lambda: T) -> u64 {
        let k = self.levels.partition_point(|l| l.value <= lambda);
        self.prefix(k)
    }

    /// Multiplicity of `lambda` (exact comparison), zero if it is not an eigenvalue.
    pub fn multiplicity_of(&self, lambda: T) -> u64 {
        self.position(lambda)
            .map(|k| self.levels[k].multiplicity)
            .unwrap_or(0)
    }

    /// Index of the level exactly equal to `lambda`.
    pub fn position(&self, lambda: T) -> Option<usize> {
        let k = self.levels.partition_point(|l| l.value < lambda);
        (k < self.levels.len() && self.levels[k].value == lambda).then_some(k)
    }

    /// Distance from `lambda` to the closest eigenvalue.
    pub fn nearest_gap(&self, lambda: T) -> T {
        let k = self.levels.partition_point(|l| l.value < lambda);
        let mut best = T::infinity();
        if k < self.levels.len() {
            best = best.min((self.levels[k].value - lambda).abs());
        }
        if k > 0 {
            best = best.min((lambda - self.levels[k - 1].value).abs());
        }
        best
    }

    fn prefix(&self, k: usize) -> u64 {
        if k == 0 {
            0
        } else {
            self.cumulative[k - 1]
        }
    }

    /// Serializes to the JSON layout, values in shortest round-trip form.
    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.to_file()).map_err(|e| Error::Io(e.into()))
    }

    /// Parses and validates the JSON layout.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: SpectrumFile<T> = serde_json::from_str(text).map_err(parse_error)?;
        Self::from_file(file)
    }

    fn to_file(&self) -> SpectrumFile<T> {
        SpectrumFile {
            label: self.label.clone(),
            generator: self.generator.clone(),
            cutoff: Some(self.cutoff),
            entries: self
                .levels
                .iter()
                .map(|l| FileEntry {
                    value: l.value,
                    multiplicity: l.multiplicity,
                })
                .collect(),
        }
    }

    fn from_file(file: SpectrumFile<T>) -> Result<Self> {
        file.generator.validate()?;
        // Generator output repeats degenerate values exactly; user files may not.
        let tolerance = match file.generator {
            GeneratorSpec::File { .. } => T::lit(FILE_MERGE_TOLERANCE),
            _ => T::zero(),
        };
        let raw = file
            .entries
            .into_iter()
            .map(|e| Level::new(e.value, e.multiplicity))
            .collect();
        Self::from_levels(file.label, file.generator, file.cutoff, raw, tolerance)
    }
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Sorts ascending and merges neighbours within `tolerance` (relative).
/// Returns whether the input was not already strictly increasing.
fn sort_and_merge<T: Real>(mut raw: Vec<Level<T>>, tolerance: T) -> (Vec<Level<T>>, bool) {
    let reordered = raw.windows(2).any(|w| w[1].value <= w[0].value);
    if reordered {
        raw.sort_by(|a, b| a.value.partial_cmp(&b.value).expect("finite values"));
    }
    let mut merged: Vec<Level<T>> = Vec::with_capacity(raw.len());
    for level in raw {
        match merged.last_mut() {
            Some(last)
                if level.value - last.value
                    <= tolerance * level.value.abs().max(last.value.abs()) =>
            {
                last.multiplicity += level.multiplicity;
            }
            _ => merged.push(level),
        }
    }
    (merged, reordered)
}

/// Writes `spectrum` as JSON.
pub fn save_spectrum<T: Real>(spectrum: &Spectrum<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, &spectrum.to_file()).map_err(|e| Error::Io(e.into()))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// Reads and validates a JSON spectrum file.
pub fn load_spectrum<T: Real>(path: impl AsRef<Path>) -> Result<Spectrum<T>> {
    let reader = BufReader::new(File::open(path)?);
    let file: SpectrumFile<T> = serde_json::from_reader(reader).map_err(parse_error)?;
    Spectrum::from_file(file)
}

/// Dirichlet interval: `lambda_n = n^2 (pi / length)^2` for `n = 1..=count`.
pub fn generate_interval<T: Real>(length: T, count: u64) -> Result<Spectrum<T>> {
    let spec = GeneratorSpec::Interval { length, count };
    spec.validate()?;
    let scale = (T::PI() / length).powi(2);
    let raw = (1..=count)
        .map(|n| Level::new(T::from_count(n * n) * scale, 1))
        .collect();
    Spectrum::from_levels(format!("interval L={length}"), spec, None, raw, T::zero())
}

/// Dirichlet rectangle `a x b`, all eigenvalues up to `lambda_max`.
pub fn generate_rectangle<T: Real>(a: T, b: T, lambda_max: T) -> Result<Spectrum<T>> {
    let spec = GeneratorSpec::Rectangle { a, b, lambda_max };
    spec.validate()?;
    let qa = (T::PI() / a).powi(2);
    let qb = (T::PI() / b).powi(2);
    if qa + qb > lambda_max {
        return Err(Error::EmptySpectrum(format!(
            "lambda_max {lambda_max} is below the lowest rectangle eigenvalue {}",
            qa + qb
        )));
    }
    let square = a == b;
    let value = |m: u64, n: u64| {
        if square {
            T::from_count(m * m + n * n) * qa
        } else {
            T::from_count(m * m) * qa + T::from_count(n * n) * qb
        }
    };
    let mut raw = Vec::new();
    let mut m = 1u64;
    while value(m, 1) <= lambda_max {
        let mut n = 1u64;
        loop {
            let v = value(m, n);
            if v > lambda_max {
                break;
            }
            raw.push(Level::new(v, 1));
            n += 1;
        }
        m += 1;
    }
    Spectrum::from_levels(
        format!("rectangle {a}x{b}"),
        spec,
        Some(lambda_max),
        raw,
        T::zero(),
    )
}

/// Flat torus `R^2 / (2 pi Z)^2`: eigenvalue `k` with multiplicity
/// `r2(k) = #{(m, n) in Z^2 : m^2 + n^2 = k}` for every `k <= lambda_max`.
///
/// `r2` is evaluated with Jacobi's divisor formula
/// `r2(k) = 4 * sum_{d | k, d odd} (-1)^((d - 1) / 2)` via a sieve.
pub fn generate_torus<T: Real>(lambda_max: T) -> Result<Spectrum<T>> {
    let spec = GeneratorSpec::Torus { lambda_max };
    spec.validate()?;
    if lambda_max.as_f64() > TORUS_LAMBDA_LIMIT {
        return Err(invalid(
            "lambda_max",
            format!("must not exceed {TORUS_LAMBDA_LIMIT:e} for the torus generator"),
        ));
    }
    let kmax = lambda_max.floor().to_usize().expect("bounded above");
    let mut chi_sum = vec![0i64; kmax + 1];
    for d in (1..=kmax).step_by(2) {
        let chi = if d % 4 == 1 { 1 } else { -1 };
        for k in (d..=kmax).step_by(d) {
            chi_sum[k] += chi;
        }
    }
    let mut raw = vec![Level::new(T::zero(), 1)];
    raw.extend(
        chi_sum
            .iter()
            .enumerate()
            .skip(1)
            .filter(|&(_, &s)| s > 0)
            .map(|(k, &s)| Level::new(T::from_count(k as u64), 4 * s as u64)),
    );
    Spectrum::from_levels("flat torus", spec, Some(lambda_max), raw, T::zero())
}

/// Equally spaced spectrum `lambda_n = n / density`, `n = 1..=count`.
pub fn generate_constant_density<T: Real>(density: T, count: u64) -> Result<Spectrum<T>> {
    let spec = GeneratorSpec::ConstantDensity { density, count };
    spec.validate()?;
    let raw = (1..=count)
        .map(|n| Level::new(T::from_count(n) / density, 1))
        .collect();
    Spectrum::from_levels(
        format!("constant density C={density}"),
        spec,
        None,
        raw,
        T::zero(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn values(s: &Spectrum<f64>) -> Vec<(f64, u64)> {
        s.levels().iter().map(|l| (l.value, l.multiplicity)).collect()
    }

    #[test]
    fn interval_unit_scale_gives_squares() {
        let s = generate_interval(PI, 3).unwrap();
        assert_eq!(values(&s), vec![(1.0, 1), (4.0, 1), (9.0, 1)]);
        let s = generate_interval(1.0, 1).unwrap();
        assert_eq!(values(&s), vec![(PI * PI, 1)]);
    }

    #[test]
    fn interval_length_two() {
        let s = generate_interval(2.0, 4).unwrap();
        let expected = [PI * PI / 4.0, PI * PI, 9.0 * PI * PI / 4.0, 4.0 * PI * PI];
        for (l, e) in s.levels().iter().zip(expected) {
            assert!((l.value - e).abs() <= 1e-14 * e);
        }
    }

    #[test]
    fn interval_rejects_bad_parameters() {
        assert!(matches!(
            generate_interval(0.0f64, 3),
            Err(Error::InvalidParameter { field: "length", .. })
        ));
        assert!(matches!(
            generate_interval(1.0f64, 0),
            Err(Error::InvalidParameter { field: "count", .. })
        ));
    }

    #[test]
    fn rectangle_small_cases() {
        let s = generate_rectangle(PI, PI, 2.0).unwrap();
        assert_eq!(values(&s), vec![(2.0, 1)]);
        let s = generate_rectangle(PI, PI, 5.0).unwrap();
        assert_eq!(values(&s), vec![(2.0, 1), (5.0, 2)]);
        assert!(matches!(
            generate_rectangle(PI, PI, 1.5),
            Err(Error::EmptySpectrum(_))
        ));
    }

    #[test]
    fn torus_small_cases() {
        let s = generate_torus(0.0f64).unwrap();
        assert_eq!(values(&s), vec![(0.0, 1)]);
        let s = generate_torus(1.0f64).unwrap();
        assert_eq!(values(&s), vec![(0.0, 1), (1.0, 4)]);
        let s = generate_torus(25.0f64).unwrap();
        assert_eq!(s.multiplicity_of(25.0), 12);
        // 3 is not a sum of two squares
        assert_eq!(s.multiplicity_of(3.0), 0);
    }

    #[test]
    fn constant_density_values() {
        let s = generate_constant_density(1.0, 3).unwrap();
        assert_eq!(values(&s), vec![(1.0, 1), (2.0, 1), (3.0, 1)]);
        let s = generate_constant_density(2.0, 4).unwrap();
        assert_eq!(values(&s), vec![(0.5, 1), (1.0, 1), (1.5, 1), (2.0, 1)]);
        let s = generate_constant_density(0.5, 2).unwrap();
        assert_eq!(values(&s), vec![(2.0, 1), (4.0, 1)]);
        assert!(matches!(
            generate_constant_density(0.0f64, 2),
            Err(Error::InvalidParameter { field: "density", .. })
        ));
    }

    #[test]
    fn file_entries_are_sorted_and_merged() {
        let text = r#"{"label": "x", "entries": [{"value": 4}, {"value": 1}, {"value": 1}]}"#;
        let s = Spectrum::<f64>::from_json_str(text).unwrap();
        assert_eq!(values(&s), vec![(1.0, 2), (4.0, 1)]);
        assert_eq!(s.cutoff(), 4.0);
        assert_eq!(s.generator().kind(), "file");
    }

    #[test]
    fn file_merge_uses_relative_tolerance() {
        let s = Spectrum::<f64>::from_values("noisy", &[2.0, 2.0 * (1.0 + 1e-14), 3.0]).unwrap();
        assert_eq!(values(&s), vec![(2.0, 2), (3.0, 1)]);
    }

    #[test]
    fn negative_entry_is_rejected() {
        let text = r#"{"label": "x", "entries": [{"value": -1, "multiplicity": 1}]}"#;
        assert!(matches!(
            Spectrum::<f64>::from_json_str(text),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn malformed_json_reports_position() {
        let text = "{\n  \"entries\": [ {\"value\": 1,, } ]\n}";
        match Spectrum::<f64>::from_json_str(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_field_is_named() {
        let text = r#"{"label": "x", "entries": [{"multiplicity": 2}]}"#;
        let err = Spectrum::<f64>::from_json_str(text).unwrap_err();
        assert!(err.to_string().contains("value"), "{err}");
    }

    #[test]
    fn cutoff_below_max_is_rejected() {
        let text = r#"{"cutoff": 1.0, "entries": [{"value": 2.0}]}"#;
        assert!(Spectrum::<f64>::from_json_str(text).is_err());
    }

    #[test]
    fn counting_helpers() {
        let s = generate_torus(2.0f64).unwrap();
        assert_eq!(s.count_below(1.0), 1);
        assert_eq!(s.count_at_or_below(1.0), 5);
        assert_eq!(s.total_count(), 9);
        assert_eq!(s.nearest_gap(1.25), 0.25);
    }

    #[test]
    fn single_precision_generators() {
        let s = generate_interval(std::f32::consts::PI, 3).unwrap();
        assert_eq!(s.levels().len(), 3);
        assert!((s.max_value() - 9.0).abs() < 1e-5);
    }
}
