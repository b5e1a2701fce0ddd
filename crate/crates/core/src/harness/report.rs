use std::io::Write;

use super::experiment::ExperimentId;
use crate::error::{Error, Result};

/// One output value; `se` is the standard error over replications when the value
/// is a replication mean.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub value: f64,
    pub se: Option<f64>,
}

impl Column {
    pub fn stat(name: impl Into<String>, samples: &[f64]) -> Self {
        let (value, se) = mean_and_se(samples);
        Self {
            name: name.into(),
            value,
            se: Some(se),
        }
    }

    pub fn scalar(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            se: None,
        }
    }
}

/// One sweep point of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: ExperimentId,
    pub param: &'static str,
    pub value: f64,
    pub columns: Vec<Column>,
}

impl ResultRow {
    pub fn get(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Value of column `name`. Panics if the column is missing.
    pub fn value_of(&self, name: &str) -> f64 {
        self.get(name)
            .unwrap_or_else(|| panic!("no column `{name}` in {} row", self.experiment))
            .value
    }

    fn header(&self) -> Vec<String> {
        let mut h = vec!["experiment".to_string(), "param".to_string(), "value".to_string()];
        for c in &self.columns {
            h.push(c.name.clone());
            if c.se.is_some() {
                h.push(format!("{}_se", c.name));
            }
        }
        h
    }

    fn fields(&self) -> Vec<String> {
        let mut f = vec![
            self.experiment.to_string(),
            self.param.to_string(),
            format_sig(self.value),
        ];
        for c in &self.columns {
            f.push(format_sig(c.value));
            if let Some(se) = c.se {
                f.push(format_sig(se));
            }
        }
        f
    }
}

/// Sample mean and standard error of the mean (0 for a single sample).
pub fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Header line plus one line per row, LF-terminated. All rows must share a schema.
pub fn emit_csv<W: Write>(rows: &[ResultRow], mut out: W) -> Result<()> {
    let first = rows
        .first()
        .ok_or_else(|| Error::InvalidArgument("no rows to write".into()))?;
    let header = first.header();
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        if row.header() != header {
            return Err(Error::InvalidArgument(format!(
                "row for {} = {} does not match the header schema",
                row.param, row.value
            )));
        }
        writeln!(out, "{}", row.fields().join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Formats like C's `%.6g`: six significant digits, trailing zeros trimmed.
pub fn format_sig(x: f64) -> String {
    const DIGITS: i32 = 6;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
