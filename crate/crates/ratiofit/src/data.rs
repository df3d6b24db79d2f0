//! Sample batches and their text formats.
//!
//! A [`SampleSet`] is an n x d batch of covariates drawn from one density,
//! tagged with the role it plays in the ratio (numerator or denominator).
//! The CSV format is one row per sample with d decimal columns and an
//! optional `x1,...,xd` header; label files are a single column of `1`/`-1`.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::numfmt::fmt_f64;
use crate::{Error, Result};

/// Which side of the ratio a sample set was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Samples from p_nu (the numerator density).
    Numerator,
    /// Samples from p_de (the denominator density).
    Denominator,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Numerator => "numerator",
            Role::Denominator => "denominator",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A batch of d-dimensional covariates from one density.
///
/// Row-major storage: sample i occupies `data[i*dim .. (i+1)*dim]`.
/// Invariants enforced at construction: n >= 1, d >= 1, all entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    data: Vec<f64>,
    n: usize,
    dim: usize,
    role: Role,
}

impl SampleSet {
    /// Build from a flat row-major buffer.
    pub fn new(data: Vec<f64>, n: usize, dim: usize, role: Role) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(Error::Shape(format!(
                "sample set must be non-empty: n = {n}, d = {dim}"
            )));
        }
        if data.len() != n * dim {
            return Err(Error::Shape(format!(
                "buffer length {} does not match n * d = {}",
                data.len(),
                n * dim
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("sample set contains non-finite entries".into()));
        }
        Ok(Self { data, n, dim, role })
    }

    /// Build from per-sample rows.
    pub fn from_rows(rows: &[Vec<f64>], role: Role) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Shape("sample set must contain at least one row".into()));
        }
        let dim = rows[0].len();
        let mut data = Vec::with_capacity(n * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Shape(format!(
                    "row {i} has {} columns, expected {dim}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(data, n, dim, role)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn role(&self) -> Role {
        self.role
    }

    /// Sample i as a slice of length `dim`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// A new set containing the given rows, in the given order (repeats allowed).
    pub fn select(&self, indices: &[usize], role: Role) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Shape("cannot select an empty batch".into()));
        }
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.n {
                return Err(Error::Shape(format!("row index {i} out of range (n = {})", self.n)));
            }
            data.extend_from_slice(self.row(i));
        }
        Self::new(data, indices.len(), self.dim, role)
    }

    /// Same rows, different role tag.
    pub fn with_role(&self, role: Role) -> Self {
        let mut out = self.clone();
        out.role = role;
        out
    }

    pub fn expect_role(&self, expected: Role) -> Result<()> {
        if self.role == expected {
            Ok(())
        } else {
            Err(Error::Role {
                expected: expected.name(),
                got: self.role.name(),
            })
        }
    }
}

/// Read a sample CSV: d comma-separated decimal columns per row, optional
/// `x1,...,xd` header.
pub fn read_samples_csv(path: &Path, role: Role) -> Result<SampleSet> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if lineno == 0 && is_header(trimmed) {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> = trimmed
            .split(',')
            .map(|tok| tok.trim().parse::<f64>())
            .collect();
        match row {
            Ok(values) => rows.push(values),
            Err(e) => {
                return Err(Error::Parse(format!(
                    "{}:{}: {e}",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    SampleSet::from_rows(&rows, role)
}

fn is_header(line: &str) -> bool {
    line.split(',')
        .enumerate()
        .all(|(i, tok)| tok.trim() == format!("x{}", i + 1))
}

/// Write a sample CSV with the `x1,...,xd` header and round-trip-exact decimals.
pub fn write_samples_csv(path: &Path, set: &SampleSet) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let header: Vec<String> = (1..=set.dim()).map(|i| format!("x{i}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for row in set.rows() {
        let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Read a label file: one `1` or `-1` per line.
pub fn read_labels(path: &Path) -> Result<Vec<i8>> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut labels = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        match trimmed {
            "1" | "+1" => labels.push(1),
            "-1" => labels.push(-1),
            other => {
                return Err(Error::Parse(format!(
                    "{}:{}: expected 1 or -1, got {other:?}",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::Parse(format!("{}: no labels", path.display())));
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_ragged() {
        assert!(SampleSet::new(vec![], 0, 1, Role::Numerator).is_err());
        assert!(SampleSet::new(vec![1.0, 2.0, 3.0], 2, 2, Role::Numerator).is_err());
        assert!(SampleSet::from_rows(&[vec![1.0], vec![1.0, 2.0]], Role::Numerator).is_err());
        assert!(SampleSet::new(vec![f64::NAN], 1, 1, Role::Numerator).is_err());
    }

    #[test]
    fn row_access_is_row_major() {
        let s = SampleSet::new(vec![1.0, 2.0, 3.0, 4.0], 2, 2, Role::Denominator).unwrap();
        assert_eq!(s.row(0), &[1.0, 2.0]);
        assert_eq!(s.row(1), &[3.0, 4.0]);
        assert_eq!(s.len(), 2);
        assert_eq!(s.dim(), 2);
    }

    #[test]
    fn select_allows_repeats() {
        let s = SampleSet::new(vec![1.0, 2.0, 3.0], 3, 1, Role::Numerator).unwrap();
        let b = s.select(&[2, 0, 2], Role::Numerator).unwrap();
        assert_eq!(b.as_slice(), &[3.0, 1.0, 3.0]);
    }

    #[test]
    fn role_check() {
        let s = SampleSet::new(vec![0.0], 1, 1, Role::Numerator).unwrap();
        assert!(s.expect_role(Role::Numerator).is_ok());
        assert!(matches!(
            s.expect_role(Role::Denominator),
            Err(Error::Role { .. })
        ));
    }

    #[test]
    fn csv_round_trip_with_and_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let s = SampleSet::new(vec![0.5, -1.25, 3.0, 0.1], 2, 2, Role::Numerator).unwrap();
        let path = dir.path().join("samples.csv");
        write_samples_csv(&path, &s).unwrap();
        let back = read_samples_csv(&path, Role::Numerator).unwrap();
        assert_eq!(back.as_slice(), s.as_slice());

        // headerless variant
        let bare = dir.path().join("bare.csv");
        std::fs::write(&bare, "0.5,-1.25\n3.0,0.1\n").unwrap();
        let back2 = read_samples_csv(&bare, Role::Numerator).unwrap();
        assert_eq!(back2.as_slice(), s.as_slice());
    }

    #[test]
    fn labels_parse() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.txt");
        std::fs::write(&path, "1\n-1\n1\n").unwrap();
        assert_eq!(read_labels(&path).unwrap(), vec![1, -1, 1]);
        std::fs::write(&path, "1\n2\n").unwrap();
        assert!(read_labels(&path).is_err());
    }
}
