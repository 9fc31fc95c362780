//! Parallel transport around closed curves and the holonomy defect
//! `|Hol_c - id|` measured against the curvature-times-length-squared bound.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::curve::DiscreteCurve;
use crate::error::{Error, Result};
use crate::stats::fit_slope;

/// The loop transport `c_0 -> c_1 -> ... -> c_0` as a matrix in the
/// orthonormal frame of `T_{c(0)}N` returned by [`crate::ManifoldSpec::frame`].
pub fn loop_holonomy(c: &DiscreteCurve) -> Result<DMatrix<f64>> {
    if !c.domain().is_closed() {
        return Err(Error::InvalidArgument("holonomy needs a closed curve".into()));
    }
    let m = c.manifold();
    let frame = m.frame(&c.points()[0]);
    let d = frame.len();
    let mut out = DMatrix::zeros(d, d);
    for (b, e) in frame.iter().enumerate() {
        let t = around(c, e);
        for (a, f) in frame.iter().enumerate() {
            out[(a, b)] = m.g(f, &t);
        }
    }
    Ok(out)
}

fn around(c: &DiscreteCurve, e: &[f64]) -> Vec<f64> {
    let n = c.len();
    let m = c.manifold();
    let pts = c.points();
    let mut w = e.to_vec();
    for i in 0..n {
        w = m.transport_g(&pts[i], &pts[(i + 1) % n], &w);
    }
    w
}

/// Frobenius norm of `Hol_c - id`.
pub fn holonomy_defect(c: &DiscreteCurve) -> Result<f64> {
    let h = loop_holonomy(c)?;
    let d = h.nrows();
    Ok((h - DMatrix::<f64>::identity(d, d)).norm())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolonomyReport {
    pub curve_id: usize,
    pub length: f64,
    pub defect: f64,
    pub ratio: f64,
    pub cap: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundProbe {
    pub reports: Vec<HolonomyReport>,
    /// `C* = 1.1 K_N sqrt(d)`.
    pub constant: f64,
    /// Largest observed `defect / l^2`.
    pub max_ratio: f64,
    /// Least-squares slope of `log defect` against `log l` over curves with
    /// nonzero defect, if at least two exist.
    pub slope: Option<f64>,
}

/// Evaluates every curve and checks `defect <= min(C* l^2, 2 sqrt(d))`.
pub fn bound_probe(curves: &[DiscreteCurve]) -> Result<BoundProbe> {
    let first = curves.first().ok_or_else(|| Error::InvalidArgument("empty curve family".into()))?;
    let m = first.manifold().clone();
    if curves.iter().any(|c| c.manifold() != &m) {
        return Err(Error::InvalidArgument("all curves must live on the same manifold".into()));
    }
    let dim = m.dim as f64;
    let constant = 1.1 * m.curvature_bound() * dim.sqrt();
    let cap = 2.0 * dim.sqrt();
    let reports: Vec<HolonomyReport> = curves
        .par_iter()
        .enumerate()
        .map(|(curve_id, c)| {
            let defect = holonomy_defect(c)?;
            let length = c.length();
            let bound = (constant * length * length).min(cap);
            Ok(HolonomyReport {
                curve_id,
                length,
                defect,
                ratio: defect / (length * length),
                cap,
                pass: defect <= bound + 1e-9,
            })
        })
        .collect::<Result<_>>()?;
    let max_ratio = reports.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        reports.iter().filter(|r| r.defect > 1e-13).map(|r| (r.length.ln(), r.defect.ln())).unzip();
    let slope = if xs.len() >= 2 { Some(fit_slope(&xs, &ys)) } else { None };
    Ok(BoundProbe { reports, constant, max_ratio, slope })
}
