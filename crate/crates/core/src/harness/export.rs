//! Plain exporters for datasets, spectra and geometry reports.

use crate::error::Result;
use crate::geometry::{GeometryReport, GeometrySummary};
use crate::model::GeneratedDataset;
use crate::spectra::SpectralDecomposition;

use super::format::{fmt_f64, to_json_bytes, Csv};

/// `d` rows, one column per sample, header `sample_1..sample_n`.
pub fn dataset_csv(ds: &GeneratedDataset) -> String {
    let mut csv = Csv::with_header((1..=ds.n).map(|j| format!("sample_{j}")).collect());
    for i in 0..ds.d() {
        csv.row(&ds.x.row(i).iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>());
    }
    csv.into_string()
}

/// `{direction: [samples]}`, both 1-based, for every outlier component.
pub fn memberships_json(ds: &GeneratedDataset) -> Result<Vec<u8>> {
    to_json_bytes(&ds.memberships_one_based())
}

/// Columns `index, eigenvalue`.
pub fn spectrum_csv(s: &SpectralDecomposition) -> String {
    let mut csv = Csv::new(&["index", "eigenvalue"]);
    for (i, l) in s.eigenvalues.iter().enumerate() {
        csv.row(&[(i + 1).to_string(), fmt_f64(*l)]);
    }
    csv.into_string()
}

/// The first `count` eigenvectors as columns `pc_1..`, one row per coordinate.
pub fn eigenvectors_csv(s: &SpectralDecomposition, count: usize) -> String {
    let k = count.min(s.retained());
    let mut csv = Csv::with_header((1..=k).map(|i| format!("pc_{i}")).collect());
    for r in 0..s.d {
        csv.row(&(0..k).map(|i| fmt_f64(s.eigenvectors[(r, i)])).collect::<Vec<_>>());
    }
    csv.into_string()
}

/// Columns `j, l, class, scaled_dist`.
pub fn geometry_pairs_csv(g: &GeometryReport) -> String {
    let mut csv = Csv::new(&["j", "l", "class", "scaled_dist"]);
    for p in g.pairs() {
        csv.row(&[p.j.to_string(), p.l.to_string(), p.class.label().into(), fmt_f64(p.scaled_dist)]);
    }
    csv.into_string()
}

/// Columns `j, outlier, scaled_norm`.
pub fn geometry_norms_csv(g: &GeometryReport) -> String {
    let mut csv = Csv::new(&["j", "outlier", "scaled_norm"]);
    for (j, (v, o)) in g.scaled_norms.iter().zip(&g.outlier).enumerate() {
        csv.row(&[(j + 1).to_string(), o.to_string(), fmt_f64(*v)]);
    }
    csv.into_string()
}

pub fn geometry_summary_json(s: &GeometrySummary) -> Result<Vec<u8>> {
    to_json_bytes(s)
}
