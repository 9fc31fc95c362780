//! Empirical probes: Sobolev interpolation inequalities along curves,
//! equivalence of `G` with the fixed-parameter `H^n` metric, length control
//! along paths, and the vanishing-length path of open planar curves under
//! constant-coefficient metrics.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{DerivVariable, DiscreteCurve, Domain, Topology, VectorField};
use crate::error::{Error, Result};
use crate::manifold::{ManifoldKind, ManifoldSpec};
use crate::metric::{inner_h, norm_g, path_energy, segment_quads, CurvePath, Family, MetricSpec};
use crate::stats::fit_slope;

// -------------------------------------------------------------------------
// curve families and random fields

/// Base curve of a scan family. `scale` multiplies the size parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveFamily {
    /// Euclidean circle in the first coordinate plane.
    Circle { radius: f64 },
    /// Euclidean ellipse with semi-axes `a`, `b`.
    Ellipse { a: f64, b: f64 },
    /// Euclidean `r(phi) = radius (1 + amplitude cos(mode phi))`, lifted into the
    /// third coordinate when there is one.
    Wavy { radius: f64, amplitude: f64, mode: u32 },
    /// Sphere: parallel at the given colatitude. Hyperbolic space: geodesic
    /// circle of that radius around the base point `(1, 0, ..., 0)`.
    Latitude { colatitude: f64 },
}

impl CurveFamily {
    /// Samples the member with the given scale. Open curves cover three
    /// quarters of the closed curve.
    pub fn curve(&self, m: &ManifoldSpec, dom: Domain, scale: f64) -> Result<DiscreteCurve> {
        let turn = if dom.is_closed() { 1.0 } else { 0.75 };
        let euclidean = m.kind == ManifoldKind::Euclidean;
        let d = m.ambient_dim();
        match (self, euclidean) {
            (CurveFamily::Latitude { .. }, true) | (CurveFamily::Circle { .. } | CurveFamily::Ellipse { .. } | CurveFamily::Wavy { .. }, false) => {
                return Err(Error::InvalidArgument("curve family does not match the manifold".into()))
            }
            _ => {}
        }
        if d < 2 {
            return Err(Error::InvalidArgument("curve families need ambient dimension at least 2".into()));
        }
        let f = |t: f64| -> Vec<f64> {
            let phi = turn * t;
            let mut p = vec![0.0; d];
            match *self {
                CurveFamily::Circle { radius } => {
                    p[0] = scale * radius * phi.cos();
                    p[1] = scale * radius * phi.sin();
                }
                CurveFamily::Ellipse { a, b } => {
                    p[0] = scale * a * phi.cos();
                    p[1] = scale * b * phi.sin();
                }
                CurveFamily::Wavy { radius, amplitude, mode } => {
                    let r = scale * radius * (1.0 + amplitude * (mode as f64 * phi).cos());
                    p[0] = r * phi.cos();
                    p[1] = r * phi.sin();
                    if d >= 3 {
                        p[2] = scale * radius * amplitude * (mode as f64 * phi).sin();
                    }
                }
                CurveFamily::Latitude { colatitude } => {
                    let a = scale * colatitude;
                    if m.kind == ManifoldKind::Sphere {
                        p[0] = m.radius * a.sin() * phi.cos();
                        p[1] = m.radius * a.sin() * phi.sin();
                        p[d - 1] = m.radius * a.cos();
                    } else {
                        p[0] = a.cosh();
                        p[1] = a.sinh() * phi.cos();
                        p[2] = a.sinh() * phi.sin();
                    }
                }
            }
            p
        };
        DiscreteCurve::from_fn(m.clone(), dom, f)
    }
}

/// Random smooth vector fields: ambient Fourier series in `theta` with
/// modes up to `min(max_mode, N/8)`, projected onto the tangent spaces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSampler {
    pub count: usize,
    pub max_mode: usize,
    pub seed: u64,
}

impl Default for FieldSampler {
    fn default() -> Self {
        FieldSampler { count: 16, max_mode: 4, seed: 0 }
    }
}

impl FieldSampler {
    /// Field number `id`; its coefficients depend only on `(seed, id)`, so
    /// every curve of a family sees the same fields.
    pub fn field(&self, c: &DiscreteCurve, id: usize) -> VectorField {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id as u64);
        let d = c.manifold().ambient_dim();
        let modes = self.max_mode.min(c.len() / 8);
        let coeffs: Vec<(Vec<f64>, Vec<f64>)> = (0..=modes)
            .map(|j| {
                let amp = 1.0 / (1.0 + j as f64);
                let mut draw = || (0..d).map(|_| amp * rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
                (draw(), draw())
            })
            .collect();
        c.field_from_fn(|_, t, _| {
            let mut v = vec![0.0; d];
            for (j, (a, b)) in coeffs.iter().enumerate() {
                let (s, co) = (j as f64 * t).sin_cos();
                for q in 0..d {
                    v[q] += a[q] * co + b[q] * s;
                }
            }
            v
        })
    }
}

// -------------------------------------------------------------------------
// interpolation inequality scans

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub manifold: ManifoldSpec,
    pub topology: Topology,
    pub samples: usize,
    pub family: CurveFamily,
    /// Size multipliers applied to the family.
    pub scales: Vec<f64>,
    #[serde(default)]
    pub fields: FieldSampler,
    /// Lower order `k`.
    pub k: usize,
    /// Upper order `n`.
    pub n: usize,
    /// Number of points `a_j = l (j + 1) / a_points` of the general scan.
    #[serde(default = "default_a_points")]
    pub a_points: usize,
}

fn default_a_points() -> usize {
    16
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        self.manifold.validate()?;
        Domain::new(self.topology, self.samples)?;
        if self.k >= self.n {
            return Err(Error::InvalidArgument("need k < n".into()));
        }
        if self.scales.is_empty() || self.scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidArgument("scales must be positive and finite".into()));
        }
        if self.fields.count == 0 || self.a_points == 0 {
            return Err(Error::InvalidArgument("need at least one field and one a-value".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanSample {
    pub curve_id: usize,
    pub scale: f64,
    pub length: f64,
    pub field_id: usize,
    /// Interpolation parameter (general scan only).
    pub a: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// `L^infinity` variant (general scan only).
    pub ratio_inf: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveSummary {
    pub curve_id: usize,
    pub scale: f64,
    pub length: f64,
    pub max_ratio: f64,
    pub max_ratio_inf: Option<f64>,
    /// Periodic scan: `max_ratio / min(1, l^2)`.
    pub c_hat: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanReport {
    pub kind: String,
    pub samples: Vec<ScanSample>,
    pub curves: Vec<CurveSummary>,
    /// Samples dropped because their curve was not an admissible immersion.
    pub skipped: usize,
    /// Empirical constant: largest ratio over all samples.
    pub max_ratio: f64,
    /// Largest over curves divided by smallest over curves of the per-curve maximum.
    pub spread: f64,
    /// Periodic scan: largest `c_hat`.
    pub c_hat: Option<f64>,
    /// Periodic scan: slope of `log max_ratio` against `log l`.
    pub slope: Option<f64>,
}

/// Squared `L^2(ds)` norms of `nabla_s^i h` for `i = 0..=n`, and the squared
/// sup norms.
fn derivative_norms(c: &DiscreteCurve, h: &VectorField, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = c.manifold();
    let ds = c.cov_derivs(h, DerivVariable::Arclength, n)?;
    let l2 = ds
        .iter()
        .map(|d| d.vectors().iter().zip(c.weights()).map(|(v, w)| m.g(v, v) * w).sum())
        .collect();
    let sup = ds.iter().map(|d| d.vectors().iter().map(|v| m.g(v, v)).fold(0.0, f64::max)).collect();
    Ok((l2, sup))
}

enum ScanKind {
    General,
    Periodic,
}

fn scan(cfg: &ScanConfig, kind: ScanKind) -> Result<ScanReport> {
    cfg.validate()?;
    let dom = Domain::new(cfg.topology, cfg.samples)?;
    let curves: Vec<Option<DiscreteCurve>> =
        cfg.scales.iter().map(|s| cfg.family.curve(&cfg.manifold, dom, *s).ok()).collect();
    let jobs: Vec<(usize, usize)> = (0..curves.len())
        .filter(|i| curves[*i].is_some())
        .flat_map(|i| (0..cfg.fields.count).map(move |f| (i, f)))
        .collect();
    let skipped = curves.iter().filter(|c| c.is_none()).count() * cfg.fields.count;
    let (k, n) = (cfg.k, cfg.n);
    let per_job: Vec<Vec<ScanSample>> = jobs
        .par_iter()
        .map(|&(ci, fi)| {
            let c = curves[ci].as_ref().unwrap();
            let h = cfg.fields.field(c, fi);
            let (l2, sup) = derivative_norms(c, &h, n)?;
            let length = c.length();
            let base = |a, lhs: f64, rhs: f64, ratio_inf| ScanSample {
                curve_id: ci,
                scale: cfg.scales[ci],
                length,
                field_id: fi,
                a,
                lhs,
                rhs,
                ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 },
                ratio_inf,
            };
            Ok(match kind {
                ScanKind::General => (0..cfg.a_points)
                    .map(|j| {
                        let a = length * (j + 1) as f64 / cfg.a_points as f64;
                        let lhs = a.powi(2 * k as i32) * l2[k];
                        let rhs = l2[0] + a.powi(2 * n as i32) * l2[n];
                        let lhs_inf = a.powi(2 * k as i32) * sup[k];
                        let rhs_inf = l2[0] / a + a.powi(2 * n as i32 - 1) * l2[n];
                        base(Some(a), lhs, rhs, Some(if rhs_inf > 0.0 { lhs_inf / rhs_inf } else { 0.0 }))
                    })
                    .collect(),
                ScanKind::Periodic => vec![base(None, l2[k], l2[0] + l2[n], None)],
            })
        })
        .collect::<Result<_>>()?;
    let samples: Vec<ScanSample> = per_job.into_iter().flatten().collect();
    if samples.iter().any(|s| !(s.ratio.is_finite() && s.ratio >= 0.0)) {
        return Err(Error::SolverFailure("non-finite inequality ratio".into()));
    }
    let periodic = matches!(kind, ScanKind::Periodic);
    let summaries: Vec<CurveSummary> = curves
        .iter()
        .enumerate()
        .filter_map(|(ci, c)| {
            let c = c.as_ref()?;
            let mine: Vec<&ScanSample> = samples.iter().filter(|s| s.curve_id == ci).collect();
            let max_ratio = mine.iter().map(|s| s.ratio).fold(0.0, f64::max);
            let length = c.length();
            Some(CurveSummary {
                curve_id: ci,
                scale: cfg.scales[ci],
                length,
                max_ratio,
                max_ratio_inf: (!periodic).then(|| mine.iter().filter_map(|s| s.ratio_inf).fold(0.0, f64::max)),
                c_hat: periodic.then(|| max_ratio / (length * length).min(1.0)),
            })
        })
        .collect();
    let max_ratio = summaries.iter().map(|s| s.max_ratio).fold(0.0, f64::max);
    let min_ratio = summaries.iter().map(|s| s.max_ratio).fold(f64::INFINITY, f64::min);
    let spread = if min_ratio > 0.0 { max_ratio / min_ratio } else { f64::INFINITY };
    let (c_hat, slope) = if periodic {
        let c_hat = summaries.iter().filter_map(|s| s.c_hat).fold(0.0, f64::max);
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            summaries.iter().filter(|s| s.max_ratio > 0.0).map(|s| (s.length.ln(), s.max_ratio.ln())).unzip();
        (Some(c_hat), (xs.len() >= 2).then(|| fit_slope(&xs, &ys)))
    } else {
        (None, None)
    };
    Ok(ScanReport {
        kind: if periodic { "periodic" } else { "general" }.into(),
        samples,
        curves: summaries,
        skipped,
        max_ratio,
        spread,
        c_hat,
        slope,
    })
}

/// `a^{2k} |nabla_s^k h|^2 <= C (|h|^2 + a^{2n} |nabla_s^n h|^2)` in `L^2(ds)`,
/// and its sup-norm variant, over the configured curves, fields and a-grid.
pub fn ineq_scan_general(cfg: &ScanConfig) -> Result<ScanReport> {
    scan(cfg, ScanKind::General)
}

/// `|nabla_s^k h|^2 <= C min(1, l^2) (|h|^2 + |nabla_s^n h|^2)` on closed curves.
pub fn ineq_scan_periodic(cfg: &ScanConfig) -> Result<ScanReport> {
    if cfg.topology != Topology::Closed {
        return Err(Error::InvalidArgument("the periodic scan needs closed curves".into()));
    }
    scan(cfg, ScanKind::Periodic)
}

// -------------------------------------------------------------------------
// metric equivalence

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub ratios: Vec<f64>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub condition: f64,
}

/// Whether `G` belongs to one of the classes known to be equivalent to the
/// fixed `H^n` metric on metric balls: length-weighted coefficients, or
/// constant `a_0, a_n > 0` on closed curves.
fn equivalence_class(spec: &MetricSpec, closed: bool) -> bool {
    let n = spec.order();
    if n < 2 {
        return false;
    }
    match spec.family() {
        Family::Constant(a) => closed && a[0] > 0.0 && a[n] > 0.0,
        Family::ScaleInvariant(c) => c[1] > 0.0 || (c[0] > 0.0 && c[2..].iter().any(|x| *x > 0.0)),
        Family::Custom(_) => false,
    }
}

/// Ratios `|h|_G / |h|_H` over `samples` random fields.
pub fn equivalence_probe(spec: &MetricSpec, c: &DiscreteCurve, fields: &FieldSampler) -> Result<EquivalenceReport> {
    if !equivalence_class(spec, c.domain().is_closed()) {
        return Err(Error::InvalidArgument(
            "metric is neither length weighted nor constant-coefficient on closed curves with a_0, a_n > 0".into(),
        ));
    }
    let ratios: Vec<f64> = (0..fields.count)
        .into_par_iter()
        .map(|i| {
            let h = fields.field(c, i);
            let g = norm_g(spec, c, &h)?;
            let hh = inner_h(c, &h, &h, spec.order())?.max(0.0).sqrt();
            Ok(g / hh)
        })
        .collect::<Result<_>>()?;
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(EquivalenceReport { ratios, min_ratio, max_ratio, condition: max_ratio / min_ratio })
}

// -------------------------------------------------------------------------
// length control along paths

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShrinkageReport {
    pub times: Vec<f64>,
    pub lengths: Vec<f64>,
    /// Metric length of the path from `t_0` to `t_j`.
    pub path_lengths: Vec<f64>,
    /// Smallest `L` with `|l_a^{3/2} - l_b^{3/2}| <= L * length(path|[t_a, t_b])` for all pairs.
    pub lipschitz: f64,
    /// Indices of curves whose length is below the threshold.
    pub flagged: Vec<usize>,
}

pub fn shrinkage_probe(spec: &MetricSpec, path: &CurvePath, threshold: f64) -> Result<ShrinkageReport> {
    if !spec.is_constant() {
        return Err(Error::InvalidArgument("the shrinkage probe needs a constant-coefficient metric".into()));
    }
    let q = segment_quads(spec, path)?;
    let mut path_lengths = vec![0.0];
    for qj in &q {
        path_lengths.push(path_lengths.last().unwrap() + qj.max(0.0).sqrt());
    }
    let lengths: Vec<f64> = path.curves().iter().map(|c| c.length()).collect();
    let p: Vec<f64> = lengths.iter().map(|l| l.powf(1.5)).collect();
    let mut lipschitz: f64 = 0.0;
    for a in 0..p.len() {
        for b in a + 1..p.len() {
            let dl = (p[a] - p[b]).abs();
            let dist = path_lengths[b] - path_lengths[a];
            if dl > 0.0 {
                lipschitz = lipschitz.max(if dist > 0.0 { dl / dist } else { f64::INFINITY });
            }
        }
    }
    let flagged = lengths.iter().enumerate().filter(|(_, l)| **l < threshold).map(|(i, _)| i).collect();
    Ok(ShrinkageReport { times: path.times().to_vec(), lengths, path_lengths, lipschitz, flagged })
}

// -------------------------------------------------------------------------
// the vanishing-length path

/// `c(t, theta) = ((1 - t)(theta - pi) + f(t), g(t))` for the listed `(f, g)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum Preset {
    /// `f = g = 0`: shrinks to the origin.
    F0g0,
    /// `f = t x0`, `g = t y0`: shrinks to `(x0, y0)`.
    Translate { x0: f64, y0: f64 },
    /// `f = -log(1 - t)`: escapes along the positive x axis.
    LogEscape,
    /// `f = sin(-log(1 - t))`: has no pointwise limit.
    Oscillate,
}

impl Preset {
    /// `(f, g, f', g')` at time `t = 1 - r`, `r > 0`.
    fn offsets_r(&self, r: f64) -> (f64, f64, f64, f64) {
        match *self {
            Preset::F0g0 => (0.0, 0.0, 0.0, 0.0),
            Preset::Translate { x0, y0 } => ((1.0 - r) * x0, (1.0 - r) * y0, x0, y0),
            Preset::LogEscape => (-r.ln(), 0.0, 1.0 / r, 0.0),
            Preset::Oscillate => {
                let u = -r.ln();
                (u.sin(), 0.0, u.cos() / r, 0.0)
            }
        }
    }

    /// `(f, g, f', g')` at time `t < 1`.
    pub fn offsets(&self, t: f64) -> (f64, f64, f64, f64) {
        self.offsets_r(1.0 - t)
    }

    pub fn curve(&self, samples: usize, t: f64) -> Result<DiscreteCurve> {
        let (f, g, _, _) = self.offsets(t);
        DiscreteCurve::from_fn(ManifoldSpec::euclidean(2), Domain::open(samples)?, |th| {
            vec![(1.0 - t) * (th - PI) + f, g]
        })
    }

    fn speed_r(&self, coeffs: &[f64], r: f64) -> f64 {
        let (_, _, fp, gp) = self.offsets_r(r);
        let mut q = coeffs[0] * 2.0 * PI * r * (PI * PI / 3.0 + fp * fp + gp * gp);
        if coeffs.len() > 1 {
            q += coeffs[1] * 2.0 * PI / r;
        }
        q.sqrt()
    }

    /// Metric speed `|c_t|_G` of the continuous path for a constant-coefficient
    /// metric: the root of `a_0 2pi (1-t)(pi^2/3 + f'^2 + g'^2) + a_1 2pi/(1-t)`.
    pub fn speed(&self, coeffs: &[f64], t: f64) -> f64 {
        self.speed_r(coeffs, 1.0 - t)
    }

    /// `int_0^{t1} |c_t|_G dt`, by composite Simpson in `u = sqrt(1 - t)`,
    /// which removes the endpoint singularities of every preset.
    pub fn length_quadrature(&self, coeffs: &[f64], t1: f64) -> f64 {
        let u0 = (1.0 - t1).max(0.0).sqrt();
        let panels = 20_000;
        let h = (1.0 - u0) / panels as f64;
        let f = |u: f64| {
            let u = u.max(1e-9);
            self.speed_r(coeffs, u * u) * 2.0 * u
        };
        let mut s = f(u0) + f(1.0);
        for i in 1..panels {
            let u = u0 + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(u);
        }
        s * h / 3.0
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::F0g0 => write!(f, "f0g0"),
            Preset::Translate { x0, y0 } => write!(f, "translate({x0},{y0})"),
            Preset::LogEscape => write!(f, "log_escape"),
            Preset::Oscillate => write!(f, "oscillate"),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    /// `f0g0`, `translate(x0,y0)`, `log_escape` or `oscillate`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "f0g0" => return Ok(Preset::F0g0),
            "log_escape" => return Ok(Preset::LogEscape),
            "oscillate" => return Ok(Preset::Oscillate),
            _ => {}
        }
        let bad = || Error::Parse(format!("unknown preset '{s}'"));
        let args = s.strip_prefix("translate(").and_then(|r| r.strip_suffix(')')).ok_or_else(bad)?;
        let v: Vec<f64> = args.split(',').map(|x| x.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
        match v[..] {
            [x0, y0] => Ok(Preset::Translate { x0, y0 }),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DemoRow {
    pub t: f64,
    pub length: f64,
    pub length_exact: f64,
    /// Metric length of the discrete path from `t = 0`.
    pub path_length: f64,
    pub max_speed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomotopyRow {
    pub t: f64,
    /// Metric length of the affine homotopy between the two presets at time `t`.
    pub length: f64,
    pub length_exact: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IncompletenessReport {
    pub preset: String,
    pub samples: usize,
    pub steps: usize,
    pub rows: Vec<DemoRow>,
    /// Discrete path length over `[0, 1 - 1/M]`.
    pub path_length: f64,
    /// Quadrature of the continuous length over the same interval.
    pub quadrature_truncated: f64,
    /// Quadrature over `[0, 1]`.
    pub quadrature_full: f64,
    /// Largest relative deviation of `l(t)` from `2 pi (1 - t)`.
    pub length_error: f64,
    pub partner: Option<String>,
    pub homotopy: Vec<HomotopyRow>,
    /// Log-log slope of homotopy length over `|offset difference|` against `1 - t`.
    pub homotopy_exponent: Option<f64>,
}

/// Builds the vanishing path on `t_j = j / M`, `j < M`, and measures it.
/// With a partner preset, also measures the affine homotopies between the
/// two paths at `homotopy_times`.
pub fn incompleteness_demo(
    preset: Preset,
    samples: usize,
    steps: usize,
    spec: &MetricSpec,
    partner: Option<Preset>,
    homotopy_times: &[f64],
) -> Result<IncompletenessReport> {
    let Family::Constant(coeffs) = spec.family() else {
        return Err(Error::InvalidArgument("the demo needs a constant-coefficient metric".into()));
    };
    if steps < 2 {
        return Err(Error::InvalidArgument("need at least two time steps".into()));
    }
    let times: Vec<f64> = (0..steps).map(|j| j as f64 / steps as f64).collect();
    let curves: Vec<DiscreteCurve> = times.par_iter().map(|t| preset.curve(samples, *t)).collect::<Result<_>>()?;
    let path = CurvePath::with_times(curves, times.clone())?;
    let q = segment_quads(spec, &path)?;
    let mut cum = vec![0.0];
    for qj in &q {
        cum.push(cum.last().unwrap() + qj.max(0.0).sqrt());
    }
    let rows: Vec<DemoRow> = path
        .curves()
        .iter()
        .zip(&times)
        .zip(&cum)
        .map(|((c, t), pl)| DemoRow {
            t: *t,
            length: c.length(),
            length_exact: 2.0 * PI * (1.0 - t),
            path_length: *pl,
            max_speed: c.speeds().iter().copied().fold(0.0, f64::max),
        })
        .collect();
    let length_error = rows.iter().map(|r| (r.length - r.length_exact).abs() / r.length_exact).fold(0.0, f64::max);
    let t_last = *times.last().unwrap();
    let mut homotopy = Vec::new();
    if let Some(p2) = partner {
        for &t in homotopy_times {
            if !(0.0..1.0).contains(&t) {
                return Err(Error::InvalidArgument("homotopy times must lie in [0, 1)".into()));
            }
            let (a, b) = (preset.curve(samples, t)?, p2.curve(samples, t)?);
            let k = 4;
            let cs: Vec<DiscreteCurve> = (0..=k)
                .map(|i| {
                    let tau = i as f64 / k as f64;
                    let pts = a
                        .points()
                        .iter()
                        .zip(b.points())
                        .map(|(p, q)| vec![(1.0 - tau) * p[0] + tau * q[0], (1.0 - tau) * p[1] + tau * q[1]])
                        .collect();
                    DiscreteCurve::new(ManifoldSpec::euclidean(2), *a.domain(), pts)
                })
                .collect::<Result<_>>()?;
            let length = path_energy(spec, &CurvePath::new(cs)?)?.length;
            let (f1, g1, _, _) = preset.offsets(t);
            let (f2, g2, _, _) = p2.offsets(t);
            let delta = ((f1 - f2).powi(2) + (g1 - g2).powi(2)).sqrt();
            homotopy.push(HomotopyRow { t, length, length_exact: delta * (coeffs[0] * 2.0 * PI * (1.0 - t)).sqrt() });
        }
    }
    let homotopy_exponent = homotopy_exponent(&homotopy, preset, partner);
    Ok(IncompletenessReport {
        preset: preset.to_string(),
        samples,
        steps,
        rows,
        path_length: *cum.last().unwrap(),
        quadrature_truncated: preset.length_quadrature(coeffs, t_last),
        quadrature_full: preset.length_quadrature(coeffs, 1.0),
        length_error,
        partner: partner.map(|p| p.to_string()),
        homotopy,
        homotopy_exponent,
    })
}

/// Slope of `log(length / |delta(t)|)` against `log(1 - t)`.
fn homotopy_exponent(rows: &[HomotopyRow], a: Preset, b: Option<Preset>) -> Option<f64> {
    let b = b?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter_map(|r| {
            let (f1, g1, _, _) = a.offsets(r.t);
            let (f2, g2, _, _) = b.offsets(r.t);
            let delta = ((f1 - f2).powi(2) + (g1 - g2).powi(2)).sqrt();
            (delta > 0.0 && r.length > 0.0).then(|| ((1.0 - r.t).ln(), (r.length / delta).ln()))
        })
        .unzip();
    (xs.len() >= 2).then(|| fit_slope(&xs, &ys))
}
