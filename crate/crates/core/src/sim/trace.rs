//! Externally generated UE positions.
//!
//! CSV with header `tti,ue_id,x_m,y_m`, rows sorted by `(tti, ue_id)`. A UE
//! keeps its last position through TTIs in which it has no row. Every UE must
//! have a row at TTI 0.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::geometry::Point2D;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub tti: u64,
    pub ue_id: usize,
    pub x_m: f64,
    pub y_m: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PositionTrace {
    by_tti: BTreeMap<u64, Vec<(usize, Point2D)>>,
}

impl PositionTrace {
    pub fn from_rows(rows: &[TraceRow]) -> Result<Self, String> {
        let mut by_tti: BTreeMap<u64, Vec<(usize, Point2D)>> = BTreeMap::new();
        let mut prev: Option<(u64, usize)> = None;
        for (i, r) in rows.iter().enumerate() {
            if prev.is_some_and(|p| p >= (r.tti, r.ue_id)) {
                return Err(format!("row {}: rows must be strictly sorted by (tti, ue_id)", i + 2));
            }
            let p = Point2D::new(r.x_m, r.y_m);
            if !p.is_finite() {
                return Err(format!("row {}: non-finite coordinate", i + 2));
            }
            by_tti.entry(r.tti).or_default().push((r.ue_id, p));
            prev = Some((r.tti, r.ue_id));
        }
        Ok(Self { by_tti })
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let err = |message: String| SimError::Trace { path: path.to_owned(), message };
        let mut reader = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
        let rows: Vec<TraceRow> = reader.deserialize().collect::<Result<_, _>>().map_err(|e| err(e.to_string()))?;
        Self::from_rows(&rows).map_err(err)
    }

    /// Rows for exactly this TTI.
    pub fn rows_at(&self, tti: u64) -> &[(usize, Point2D)] {
        self.by_tti.get(&tti).map_or(&[], Vec::as_slice)
    }

    /// Checks that UEs `0..n_ues` all start at TTI 0 and no unknown id appears.
    pub fn check_population(&self, n_ues: usize) -> Result<(), String> {
        let start = self.rows_at(0);
        for ue in 0..n_ues {
            if !start.iter().any(|(id, _)| *id == ue) {
                return Err(format!("UE {ue} has no position at TTI 0"));
            }
        }
        if let Some((t, id)) = self
            .by_tti
            .iter()
            .flat_map(|(t, rows)| rows.iter().map(move |(id, _)| (*t, *id)))
            .find(|(_, id)| *id >= n_ues)
        {
            return Err(format!("TTI {t}: unknown UE id {id} (population is {n_ues})"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn loads_and_indexes() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "tti,ue_id,x_m,y_m\n0,0,1.5,2\n0,1,-3,4\n5,1,7,8").unwrap();
        let t = PositionTrace::load(f.path()).unwrap();
        assert_eq!(t.rows_at(0).len(), 2);
        assert_eq!(t.rows_at(5), &[(1, Point2D::new(7.0, 8.0))]);
        assert!(t.rows_at(3).is_empty());
        assert!(t.check_population(2).is_ok());
        assert!(t.check_population(3).is_err());
        assert!(t.check_population(1).is_err());
    }

    #[test]
    fn rejects_unsorted_rows() {
        let rows =
            [TraceRow { tti: 1, ue_id: 0, x_m: 0.0, y_m: 0.0 }, TraceRow { tti: 0, ue_id: 0, x_m: 0.0, y_m: 0.0 }];
        assert!(PositionTrace::from_rows(&rows).is_err());
    }

    #[test]
    fn missing_file_is_an_error() {
        assert!(matches!(PositionTrace::load(Path::new("/nonexistent/trace.csv")), Err(SimError::Trace { .. })));
    }
}
