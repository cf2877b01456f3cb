//! Tabular results and their CSV encoding.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::Real;

/// Formats a scalar with 17 significant digits.
pub fn fmt_sig17<T: Real>(x: T) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > T::zero() { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Minimal CSV builder: a fixed header followed by rows of preformatted fields.
#[derive(Debug, Clone)]
pub struct Csv {
    columns: usize,
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self {
            columns: header.len(),
            text,
        }
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        assert_eq!(fields.len(), self.columns, "CSV row width mismatch");
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            self.text.push_str(f.as_ref());
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRow<T> {
    pub abscissa: T,
    pub value: T,
    pub error_estimate: T,
}

/// Values of some function on a grid of abscissae, with error estimates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalTable<T> {
    pub rows: Vec<EvalRow<T>>,
}

impl<T: Real> EvalTable<T> {
    pub fn new() -> Self {
        Self { rows: Vec::new() }
    }

    pub fn push(&mut self, abscissa: T, value: T, error_estimate: T) {
        self.rows.push(EvalRow {
            abscissa,
            value,
            error_estimate,
        });
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn abscissae(&self) -> impl Iterator<Item = T> + '_ {
        self.rows.iter().map(|r| r.abscissa)
    }

    pub fn values(&self) -> impl Iterator<Item = T> + '_ {
        self.rows.iter().map(|r| r.value)
    }

    /// `abscissa,value,error_estimate`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut csv = Csv::new(&["abscissa", "value", "error_estimate"]);
        for r in &self.rows {
            csv.row(&[
                fmt_sig17(r.abscissa),
                fmt_sig17(r.value),
                fmt_sig17(r.error_estimate),
            ]);
        }
        csv.into_string()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Renders a boolean the way every CSV in the crate does.
pub fn fmt_bool(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}
