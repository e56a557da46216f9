//! Flat per-array metric rows for tables and sweeps.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::coarray::analyze;
use crate::coupling::{coupling_leakage, coupling_matrix, CouplingModel};
use crate::error::Result;
use crate::geometry::{Family, SensorArray};

/// Co-array metrics, small-lag weights and coupling leakage of one array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArraySummary {
    pub array: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub udofs: u64,
    pub cva: u64,
    pub holes: usize,
    /// Spatial efficiency in percent.
    pub se: f64,
    pub w1: u64,
    pub w2: u64,
    pub w3: u64,
    pub lc: f64,
}

impl ArraySummary {
    pub fn of(p: &SensorArray, coupling: &CouplingModel) -> Result<Self> {
        let report = analyze(p);
        let lc = coupling_leakage(&coupling_matrix::<f64>(p, coupling))?;
        Ok(ArraySummary {
            array: p.name().to_string(),
            n: p.len(),
            udofs: report.udofs,
            cva: report.cva,
            holes: report.hole_count(),
            se: 100.0 * report.spatial_efficiency_f64(),
            w1: report.weight(1),
            w2: report.weight(2),
            w3: report.weight(3),
            lc,
        })
    }
}

/// Summaries for every family/N pair the family supports, ordered by N and
/// then family name. Unsupported pairs are skipped.
pub fn sweep(
    families: &[Family],
    n_range: std::ops::RangeInclusive<usize>,
    coupling: &CouplingModel,
) -> Result<Vec<ArraySummary>> {
    let mut rows = Vec::new();
    for n in n_range {
        let mut fams: Vec<Family> = families
            .iter()
            .copied()
            .filter(|f| n >= f.min_sensors())
            .collect();
        fams.sort_by_key(|f| f.name());
        fams.dedup();
        for f in fams {
            if let Ok(p) = f.design(n) {
                rows.push(ArraySummary::of(&p, coupling)?);
            }
        }
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[ArraySummary], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_order_and_skip() {
        let rows = sweep(
            &[Family::Tsaulas, Family::Aulas],
            8..=9,
            &CouplingModel::paper_v(),
        )
        .unwrap();
        let keys: Vec<(usize, &str)> = rows.iter().map(|r| (r.n, r.array.as_str())).collect();
        assert_eq!(keys.len(), 3);
        assert_eq!(keys[0].0, 8);
        assert!(keys[1].1 < keys[2].1);
    }

    #[test]
    fn csv_header() {
        let p = Family::Saulas.design(12).unwrap();
        let row = ArraySummary::of(&p, &CouplingModel::paper_v()).unwrap();
        assert_eq!((row.udofs, row.holes, row.cva), (189, 0, 188));
        let mut buf = Vec::new();
        write_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("array,N,udofs,cva,holes,se,w1,w2,w3,lc\n"));
    }
}
