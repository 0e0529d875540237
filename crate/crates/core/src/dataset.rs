//! Identified vectors with a shared dimension.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A borrowed view of one point: its id and coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataPoint<'a> {
    pub id: u32,
    pub coords: &'a [f64],
}

/// Points stored row-major in one flat buffer; ids are row indices.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    coords: Vec<f64>,
}

/// Outcome of [`Dataset::dedup`]: `(dropped row, row it duplicated)` pairs,
/// in original row numbering.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DedupReport {
    pub removed: Vec<(usize, usize)>,
}

impl Dataset {
    pub fn new(dim: usize) -> Self {
        Dataset {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut ds = Dataset::new(dim);
        for row in &rows {
            ds.push(row)?;
        }
        Ok(ds)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn point(&self, id: u32) -> &[f64] {
        let start = id as usize * self.dim;
        &self.coords[start..start + self.dim]
    }

    pub fn get(&self, id: u32) -> DataPoint<'_> {
        DataPoint {
            id,
            coords: self.point(id),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = DataPoint<'_>> {
        self.coords
            .chunks_exact(self.dim.max(1))
            .enumerate()
            .map(|(i, c)| DataPoint {
                id: i as u32,
                coords: c,
            })
    }

    /// Appends a row, returning its id. The first row fixes the dimension of
    /// an empty, dimensionless dataset.
    pub fn push(&mut self, row: &[f64]) -> Result<u32> {
        if self.dim == 0 && self.coords.is_empty() {
            if row.is_empty() {
                return Err(Error::InvalidInput("points need at least one coordinate".into()));
            }
            self.dim = row.len();
        }
        if row.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: row.len(),
            });
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite coordinate {v}")));
        }
        let id = self.len() as u32;
        self.coords.extend_from_slice(row);
        Ok(id)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(|p| p.coords.to_vec()).collect()
    }

    /// Subset of rows, in the given order.
    pub fn select(&self, ids: &[u32]) -> Dataset {
        let mut out = Dataset::new(self.dim);
        for &id in ids {
            out.coords.extend_from_slice(self.point(id));
        }
        out
    }

    /// Drops rows whose coordinates repeat an earlier row exactly
    /// (`-0.0` and `0.0` compare equal).
    pub fn dedup(&self) -> (Dataset, DedupReport) {
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::with_capacity(self.len());
        let mut out = Dataset::new(self.dim);
        let mut report = DedupReport::default();
        for p in self.iter() {
            let key = coord_key(p.coords);
            match seen.get(&key) {
                Some(&first) => report.removed.push((p.id as usize, first)),
                None => {
                    seen.insert(key, p.id as usize);
                    out.coords.extend_from_slice(p.coords);
                }
            }
        }
        (out, report)
    }
}

pub(crate) fn coord_key(coords: &[f64]) -> Vec<u64> {
    coords
        .iter()
        .map(|&v| if v == 0.0 { 0u64 } else { v.to_bits() })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_rows() {
        let err = Dataset::from_rows(vec![vec![0.0, 1.0], vec![2.0]]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, got: 1 }));
    }

    #[test]
    fn dedup_reports_pairs() {
        let ds = Dataset::from_rows(vec![
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![-0.0, 1.0],
            vec![1.0, 1.0],
        ])
        .unwrap();
        let (clean, report) = ds.dedup();
        assert_eq!(clean.len(), 2);
        assert_eq!(report.removed, vec![(2, 0), (3, 1)]);
    }

    #[test]
    fn ids_are_row_indices() {
        let ds = Dataset::from_rows(vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let ids: Vec<u32> = ds.iter().map(|p| p.id).collect();
        assert_eq!(ids, vec![0, 1, 2]);
        assert_eq!(ds.point(2), &[2.0]);
    }
}
