//! Grid arguments: `0.01,0.1,1` or `start:stop:step`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Hard limit on the number of points a range may expand to.
const MAX_POINTS: usize = 1_000_000;

/// A grid as written on the command line; expands to a sorted, deduplicated
/// list of finite values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Grid {
    text: String,
    values: Vec<f64>,
}

impl Grid {
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, String> {
        let text = text.trim();
        let mut values = if text.contains(':') {
            range(text)?
        } else {
            text.split(',')
                .map(|item| number(item.trim()))
                .collect::<Result<Vec<_>, _>>()?
        };
        if values.is_empty() {
            return Err("grid is empty".into());
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        Ok(Self {
            text: text.to_string(),
            values,
        })
    }
}

impl TryFrom<String> for Grid {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Grid> for String {
    fn from(g: Grid) -> String {
        g.text
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

fn number(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn range(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, step] = parts[..] else {
        return Err(format!("range `{text}` must be start:stop:step"));
    };
    let (start, stop, step) = (number(start)?, number(stop)?, number(step)?);
    if step <= 0.0 {
        return Err(format!("range step must be positive, got {step}"));
    }
    if stop < start {
        return Err(format!("range stop {stop} is below start {start}"));
    }
    // tolerate stop landing a rounding error short of a grid point
    let n = ((stop - start) / step * (1.0 + 1e-12)).floor() + 1.0;
    if n > MAX_POINTS as f64 {
        return Err(format!("range `{text}` has more than {MAX_POINTS} points"));
    }
    Ok((0..n as usize).map(|i| start + i as f64 * step).collect())
}
