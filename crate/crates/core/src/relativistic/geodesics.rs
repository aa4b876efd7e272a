//! Simple radial null geodesics through the scaling origin: straight lines
//! `R = sigma tau` in the upper half plane, i.e. roots of
//! `F(y) = eps y² e^(2lambda - 2mu) - 1` at `y = -sigma/sqrt(eps)`.

use serde::{Deserialize, Serialize};

use super::extension::{chart_of_similarity, chart_s, UpperExtension};
use super::RelativisticError;
use crate::numerics::roots::{brackets_from_samples, refine_root};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicOptions {
    pub samples: usize,
    /// Fraction of the extension (in `ln |y|`) kept away from each end.
    pub margin: f64,
    pub tol: f64,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        Self { samples: 400, margin: 1e-9, tol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicReport {
    /// `(y, F(y))` on a grid logarithmic in `|y|`, `y` increasing.
    pub table: Vec<(f64, f64)>,
    /// Roots in increasing order.
    pub roots: Vec<f64>,
    /// Most negative sample `(y_0, F(y_0))`.
    pub dip: (f64, f64),
    /// `F` at the most negative and at the least negative sample.
    pub f_at_extremes: (f64, f64),
}

/// `F(y)` from the extension's dense output; `None` outside it.
pub fn geodesic_function(ext: &UpperExtension, y: f64) -> Option<f64> {
    let p = ext.params;
    let big_y = chart_of_similarity(p, y);
    let s = ext.trajectory.eval(big_y)?;
    Some(p.eps() / chart_s(p, big_y, s[0], s[1], s[2]) - 1.0)
}

pub fn rng_roots(ext: &UpperExtension, opts: &GeodesicOptions) -> Result<GeodesicReport, RelativisticError> {
    let first = ext.points.first().map(|p| p.y).unwrap_or(f64::NAN);
    let last = ext.points.last().map(|p| p.y).unwrap_or(f64::NAN);
    // y runs from `first` (large |y|) towards y_ms
    let (la, lb) = (first.abs().ln(), last.abs().ln());
    let span = la - lb;
    let n = opts.samples.max(3);
    let mut table = Vec::with_capacity(n);
    for i in 0..n {
        let t = opts.margin + (1.0 - 2.0 * opts.margin) * i as f64 / (n - 1) as f64;
        let y = -(la - t * span).exp();
        if let Some(f) = geodesic_function(ext, y) {
            table.push((y, f));
        }
    }
    let xs: Vec<f64> = table.iter().map(|t| t.0).collect();
    let fs: Vec<f64> = table.iter().map(|t| t.1).collect();
    let brackets = brackets_from_samples(&xs, &fs);
    let mut roots = Vec::new();
    for b in brackets {
        let f = |y: f64| geodesic_function(ext, y).unwrap_or(f64::NAN);
        if let Ok(r) = refine_root(f, b, opts.tol * b.a().abs().max(1.0)) {
            roots.push(r);
        }
    }
    if roots.is_empty() {
        return Err(RelativisticError::NoSignChange { table });
    }
    let dip = table.iter().copied().fold((f64::NAN, f64::INFINITY), |m, t| if t.1 < m.1 { t } else { m });
    let f_at_extremes = (table[0].1, table[table.len() - 1].1);
    Ok(GeodesicReport { table, roots, dip, f_at_extremes })
}
