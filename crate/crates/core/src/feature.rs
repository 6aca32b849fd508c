//! Dense per-vertex feature storage.
//!
//! A [`FeatureMatrix`] is an N x c row-major matrix of finite reals. The same
//! container serves as unary input, propagated output, pairwise embedding, or
//! gradient buffer; the role tag records which one a given instance is.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// What a feature matrix holds. Purely descriptive; no operation branches on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FeatureRole {
    #[default]
    Unary,
    Propagated,
    Pairwise,
    Gradient,
}

/// N x c dense matrix of per-vertex features, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    role: FeatureRole,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            role: FeatureRole::default(),
            data: vec![0.0; rows * cols],
        }
    }

    /// Wraps row-major data; rejects wrong length or non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "expected {}x{}={} values, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite feature value at flat index {bad}"
            )));
        }
        Ok(Self {
            rows,
            cols,
            role: FeatureRole::default(),
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self {
            rows,
            cols,
            role: FeatureRole::default(),
            data,
        }
    }

    pub fn with_role(mut self, role: FeatureRole) -> Self {
        self.role = role;
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn role(&self) -> FeatureRole {
        self.role
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    /// Text form: header `fm <N> <c>` then N lines of c decimals.
    /// Values are printed with 17 significant digits so f64 round-trips exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "fm {} {}", self.rows, self.cols);
        for r in 0..self.rows {
            let row = self.row(r);
            for (c, v) in row.iter().enumerate() {
                if c > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty feature matrix file".into()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("fm") {
            return Err(Error::Parse("feature matrix header must start with 'fm'".into()));
        }
        let rows: usize = parse_field(parts.next(), "row count")?;
        let cols: usize = parse_field(parts.next(), "column count")?;
        let mut data = Vec::with_capacity(rows * cols);
        for (i, line) in lines.enumerate() {
            if i >= rows {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(Error::Parse(format!("unexpected extra line {}", i + 2)));
            }
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad value '{tok}' on line {}", i + 2)))?;
                data.push(v);
            }
        }
        Self::from_vec(rows, cols, data)
    }

    pub fn write_to(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_from(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }
}

fn parse_field<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
    tok.ok_or_else(|| Error::Parse(format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::Parse(format!("invalid {what}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_wrong_length() {
        assert!(FeatureMatrix::from_vec(2, 2, vec![1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(FeatureMatrix::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
    }

    proptest! {
        #[test]
        fn text_round_trip_is_exact(rows in 1usize..6, cols in 1usize..5,
                                    seed in proptest::collection::vec(-1e12f64..1e12, 30)) {
            let data: Vec<f64> = seed.iter().cycle().take(rows * cols).copied().collect();
            let fm = FeatureMatrix::from_vec(rows, cols, data).unwrap();
            let back = FeatureMatrix::from_text(&fm.to_text()).unwrap();
            prop_assert_eq!(fm.as_slice(), back.as_slice());
        }
    }
}
