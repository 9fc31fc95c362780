//! Discrete curves on the uniform grid of `[0, 2pi]` (open) or the circle
//! (closed), vector fields along them, and covariant finite differences.

use std::collections::hash_map::DefaultHasher;
use std::f64::consts::PI;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::ManifoldSpec;
use crate::real::{vecops, Real};

pub const DEFAULT_EPS_IMM: f64 = 1e-8;
pub const DEFAULT_MAX_ORDER: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Open,
    Closed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub topology: Topology,
    pub samples: usize,
}

impl Domain {
    pub fn new(topology: Topology, samples: usize) -> Result<Self> {
        let d = Domain { topology, samples };
        d.validate()?;
        Ok(d)
    }

    pub fn closed(samples: usize) -> Result<Self> {
        Self::new(Topology::Closed, samples)
    }

    pub fn open(samples: usize) -> Result<Self> {
        Self::new(Topology::Open, samples)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 8 {
            return Err(Error::InvalidArgument(format!(
                "domain needs at least 8 samples, got {}",
                self.samples
            )));
        }
        Ok(())
    }

    pub fn is_closed(&self) -> bool {
        self.topology == Topology::Closed
    }

    pub fn spacing(&self) -> f64 {
        match self.topology {
            Topology::Closed => 2.0 * PI / self.samples as f64,
            Topology::Open => 2.0 * PI / (self.samples - 1) as f64,
        }
    }

    pub fn theta(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    pub fn thetas(&self) -> Vec<f64> {
        (0..self.samples).map(|i| self.theta(i)).collect()
    }

    /// Trapezoid weights for `int f dtheta` (without the factor `dtheta`).
    pub(crate) fn trap_weight(&self, i: usize) -> f64 {
        if !self.is_closed() && (i == 0 || i + 1 == self.samples) {
            0.5
        } else {
            1.0
        }
    }
}

/// Construction options shared by all curves in a computation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveOptions {
    /// Minimal admissible speed `|c'|`.
    pub eps_imm: f64,
    /// Largest covariant derivative order that may be requested.
    pub max_order: usize,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions { eps_imm: DEFAULT_EPS_IMM, max_order: DEFAULT_MAX_ORDER }
    }
}

// -------------------------------------------------------------------------
// generic kernels

/// Geometry of a sampled curve that every metric evaluation needs.
#[derive(Clone, Debug)]
pub(crate) struct Geom<T> {
    pub velocity: Vec<Vec<T>>,
    pub speed: Vec<T>,
    /// Trapezoid arc-length weights `ds_i`.
    pub weight: Vec<T>,
    pub length: T,
}

/// Fourth-order log-based tangent `c'_i`. Each difference is expressed in the
/// normal coordinates centred at `c_i`, so no chart is needed.
pub(crate) fn velocity_g<T: Real>(m: &ManifoldSpec, dom: &Domain, pts: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    let n = pts.len();
    let h = dom.spacing();
    let zero = vec![T::zero(); m.ambient_dim()];
    let logs = |i: usize, offs: &[isize]| -> Result<Vec<Vec<T>>> {
        offs.iter()
            .map(|&o| {
                if o == 0 {
                    Ok(zero.clone())
                } else {
                    let j = (i as isize + o).rem_euclid(n as isize) as usize;
                    m.log_g(&pts[i], &pts[j])
                }
            })
            .collect()
    };
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let v = if dom.is_closed() || (i >= 2 && i + 2 < n) {
            let f = logs(i, &[-2, -1, 1, 2])?;
            vecops::lincomb(&[(1.0, &f[0]), (-8.0, &f[1]), (8.0, &f[2]), (-1.0, &f[3])])
        } else {
            // one-sided fourth-order stencils, mirrored at the far end
            let (offs, coef, sign): (&[isize], [f64; 5], f64) = match i {
                0 => (&[0, 1, 2, 3, 4], [-25.0, 48.0, -36.0, 16.0, -3.0], 1.0),
                1 => (&[-1, 0, 1, 2, 3], [-3.0, -10.0, 18.0, -6.0, 1.0], 1.0),
                _ if i + 1 == n => (&[0, -1, -2, -3, -4], [-25.0, 48.0, -36.0, 16.0, -3.0], -1.0),
                _ => (&[1, 0, -1, -2, -3], [-3.0, -10.0, 18.0, -6.0, 1.0], -1.0),
            };
            let f = logs(i, offs)?;
            let terms: Vec<(f64, &[T])> = coef.iter().zip(&f).map(|(c, v)| (sign * c, v.as_slice())).collect();
            vecops::lincomb(&terms)
        };
        out.push(vecops::scale(T::cst(1.0 / (12.0 * h)), &v));
    }
    Ok(out)
}

pub(crate) fn geom_g<T: Real>(m: &ManifoldSpec, dom: &Domain, pts: &[Vec<T>]) -> Result<Geom<T>> {
    let velocity = velocity_g(m, dom, pts)?;
    let speed: Vec<T> = velocity.iter().map(|v| m.norm(v)).collect();
    let h = dom.spacing();
    let weight: Vec<T> = speed.iter().enumerate().map(|(i, s)| *s * (h * dom.trap_weight(i))).collect();
    let mut length = T::zero();
    for w in &weight {
        length += *w;
    }
    Ok(Geom { velocity, speed, weight, length })
}

/// One application of the discrete `nabla_theta` (or `nabla_s` when `speed`
/// is given) by transported central differences, with second-order
/// one-sided stencils at open endpoints.
pub(crate) fn cov_step_g<T: Real>(
    m: &ManifoldSpec,
    dom: &Domain,
    pts: &[Vec<T>],
    h: &[Vec<T>],
    speed: Option<&[T]>,
) -> Vec<Vec<T>> {
    let n = pts.len();
    let dt = dom.spacing();
    let tr = |from: usize, to: usize, v: &[T]| m.transport_g(&pts[from], &pts[to], v);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let d = if dom.is_closed() || (i > 0 && i + 1 < n) {
            let ip = (i + 1) % n;
            let im = (i + n - 1) % n;
            let a = tr(ip, i, &h[ip]);
            let b = tr(im, i, &h[im]);
            vecops::lincomb(&[(0.5 / dt, &a), (-0.5 / dt, &b)])
        } else {
            let (i1, i2, sign) = if i == 0 { (1, 2, 1.0) } else { (n - 2, n - 3, -1.0) };
            let a = tr(i1, i, &h[i1]);
            let b = tr(i1, i, &tr(i2, i1, &h[i2]));
            let c = sign * 0.5 / dt;
            vecops::lincomb(&[(-3.0 * c, &h[i]), (4.0 * c, &a), (-c, &b)])
        };
        let d = m.project(&pts[i], &d);
        out.push(match speed {
            Some(s) => vecops::scale(s[i].recip(), &d),
            None => d,
        });
    }
    out
}

/// `[h, nabla h, ..., nabla^k h]`.
pub(crate) fn cov_iter_g<T: Real>(
    m: &ManifoldSpec,
    dom: &Domain,
    pts: &[Vec<T>],
    h: &[Vec<T>],
    speed: Option<&[T]>,
    k: usize,
) -> Vec<Vec<Vec<T>>> {
    let mut all = vec![h.to_vec()];
    for _ in 0..k {
        let next = cov_step_g(m, dom, pts, all.last().unwrap(), speed);
        all.push(next);
    }
    all
}

// -------------------------------------------------------------------------
// public types

#[derive(Clone, Debug)]
pub struct DiscreteCurve {
    manifold: ManifoldSpec,
    domain: Domain,
    points: Vec<Vec<f64>>,
    opts: CurveOptions,
    geom: Geom<f64>,
    fingerprint: u64,
}

impl PartialEq for DiscreteCurve {
    fn eq(&self, other: &Self) -> bool {
        self.manifold == other.manifold && self.domain == other.domain && self.points == other.points
    }
}

impl DiscreteCurve {
    pub fn new(manifold: ManifoldSpec, domain: Domain, points: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_options(manifold, domain, points, CurveOptions::default())
    }

    pub fn with_options(
        manifold: ManifoldSpec,
        domain: Domain,
        points: Vec<Vec<f64>>,
        opts: CurveOptions,
    ) -> Result<Self> {
        manifold.validate()?;
        domain.validate()?;
        if points.len() != domain.samples {
            return Err(Error::InvalidArgument(format!(
                "domain has {} samples but {} points were given",
                domain.samples,
                points.len()
            )));
        }
        for (i, p) in points.iter().enumerate() {
            manifold.check_point(p).map_err(|e| Error::NotOnManifold(format!("point {i}: {e}")))?;
        }
        check_adjacency(&manifold, &domain, &points)?;
        let geom = geom_g(&manifold, &domain, &points)?;
        for (i, s) in geom.speed.iter().enumerate() {
            if !(*s > opts.eps_imm) {
                return Err(Error::ImmersionViolation { node: i, speed: *s, threshold: opts.eps_imm });
            }
        }
        let fingerprint = fingerprint(&manifold, &domain, &points);
        Ok(DiscreteCurve { manifold, domain, points, opts, geom, fingerprint })
    }

    /// Samples `f(theta_i)` on the grid.
    pub fn from_fn(manifold: ManifoldSpec, domain: Domain, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let pts = domain.thetas().into_iter().map(f).collect();
        Self::new(manifold, domain, pts)
    }

    pub fn manifold(&self) -> &ManifoldSpec {
        &self.manifold
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn options(&self) -> CurveOptions {
        self.opts
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `|c'|_i`.
    pub fn speeds(&self) -> &[f64] {
        &self.geom.speed
    }

    /// `c'_i` as tangent vectors.
    pub fn velocity(&self) -> &[Vec<f64>] {
        &self.geom.velocity
    }

    /// Arc-length weights `ds_i`.
    pub fn weights(&self) -> &[f64] {
        &self.geom.weight
    }

    pub fn length(&self) -> f64 {
        self.geom.length
    }

    pub fn unit_tangent(&self) -> VectorField {
        let vectors = self
            .geom
            .velocity
            .iter()
            .zip(&self.geom.speed)
            .map(|(v, s)| vecops::scale(1.0 / s, v))
            .collect();
        VectorField { vectors, fingerprint: self.fingerprint }
    }

    /// The zero field along the curve.
    pub fn zero_field(&self) -> VectorField {
        VectorField {
            vectors: vec![vec![0.0; self.manifold.ambient_dim()]; self.len()],
            fingerprint: self.fingerprint,
        }
    }

    /// Builds a field from ambient vectors, checking tangency at every node.
    pub fn field(&self, vectors: Vec<Vec<f64>>) -> Result<VectorField> {
        if vectors.len() != self.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} vectors but the curve has {} nodes",
                vectors.len(),
                self.len()
            )));
        }
        for (i, (p, v)) in self.points.iter().zip(&vectors).enumerate() {
            self.manifold
                .check_tangent(p, v)
                .map_err(|e| Error::InvalidArgument(format!("vector {i}: {e}")))?;
        }
        Ok(VectorField { vectors, fingerprint: self.fingerprint })
    }

    /// Builds a field from `f(i, theta_i, c_i)`, projecting onto each tangent space.
    pub fn field_from_fn(&self, f: impl Fn(usize, f64, &[f64]) -> Vec<f64>) -> VectorField {
        let vectors = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| self.manifold.project(p, &f(i, self.domain.theta(i), p)))
            .collect();
        VectorField { vectors, fingerprint: self.fingerprint }
    }

    pub(crate) fn field_unchecked(&self, vectors: Vec<Vec<f64>>) -> VectorField {
        VectorField { vectors, fingerprint: self.fingerprint }
    }

    pub(crate) fn check_field(&self, h: &VectorField) -> Result<()> {
        if h.fingerprint != self.fingerprint {
            return Err(Error::InvalidArgument("vector field belongs to a different curve".into()));
        }
        Ok(())
    }

    /// Discrete `nabla^k` with respect to `theta` or arc length.
    pub fn cov_deriv(&self, h: &VectorField, variable: DerivVariable, order: usize) -> Result<VectorField> {
        self.check_field(h)?;
        if order == 0 || order > self.opts.max_order {
            return Err(Error::InvalidArgument(format!(
                "derivative order {order} outside 1..={}",
                self.opts.max_order
            )));
        }
        let all = cov_iter_g(&self.manifold, &self.domain, &self.points, &h.vectors, self.speed_for(variable), order);
        Ok(VectorField { vectors: all.into_iter().last().unwrap(), fingerprint: self.fingerprint })
    }

    /// All iterated derivatives `[h, nabla h, ..., nabla^k h]`.
    pub fn cov_derivs(&self, h: &VectorField, variable: DerivVariable, order: usize) -> Result<Vec<VectorField>> {
        self.check_field(h)?;
        if order > self.opts.max_order {
            return Err(Error::InvalidArgument(format!(
                "derivative order {order} exceeds the maximum {}",
                self.opts.max_order
            )));
        }
        let all = cov_iter_g(&self.manifold, &self.domain, &self.points, &h.vectors, self.speed_for(variable), order);
        Ok(all.into_iter().map(|vectors| VectorField { vectors, fingerprint: self.fingerprint }).collect())
    }

    fn speed_for(&self, variable: DerivVariable) -> Option<&[f64]> {
        match variable {
            DerivVariable::Theta => None,
            DerivVariable::Arclength => Some(&self.geom.speed),
        }
    }

    /// Parallel transport of the tangent vector `v` at node `from` to node
    /// `to`, stepping through the intermediate nodes in increasing index order.
    pub fn transport_along(&self, from: usize, to: usize, v: &[f64]) -> Vec<f64> {
        let mut w = v.to_vec();
        let mut i = from;
        while i != to {
            let j = if i + 1 == self.len() { 0 } else { i + 1 };
            w = self.manifold.transport_g(&self.points[i], &self.points[j], &w);
            i = j;
        }
        w
    }

    /// Resamples the curve at equal arc-length spacing, keeping node 0 (and
    /// the last node of an open curve) fixed.
    ///
    /// Cumulative arc length is integrated with the end-corrected trapezoid
    /// rule and inverted on cubic Hermite pieces; new nodes are placed by
    /// cubic interpolation in the normal coordinates of the nearest node.
    pub fn reparametrize_arclength(&self) -> Result<DiscreteCurve> {
        let n = self.len();
        let closed = self.domain.is_closed();
        let h = self.domain.spacing();
        let s = &self.geom.speed;
        let segs = if closed { n } else { n - 1 };
        let ds = speed_derivative(s, h, closed);
        let mut cum = vec![0.0; segs + 1];
        for k in 0..segs {
            let k1 = (k + 1) % n;
            cum[k + 1] = cum[k] + 0.5 * h * (s[k] + s[k1]) - h * h / 12.0 * (ds[k1] - ds[k]);
        }
        let total = cum[segs];
        let mut pts = Vec::with_capacity(n);
        pts.push(self.points[0].clone());
        let mut seg = 0usize;
        for k in 1..n {
            if !closed && k + 1 == n {
                pts.push(self.points[n - 1].clone());
                break;
            }
            let target = total * k as f64 / segs as f64;
            while seg + 1 < segs && cum[seg + 1] < target {
                seg += 1;
            }
            let k1 = (seg + 1) % n;
            let t = invert_hermite(cum[seg], cum[seg + 1], s[seg] * h, s[k1] * h, target);
            pts.push(self.interpolate(seg, t)?);
        }
        DiscreteCurve::with_options(self.manifold.clone(), self.domain, pts, self.opts)
    }

    /// Point at local parameter `t in [0, 1]` between nodes `i` and `i + 1`.
    fn interpolate(&self, i: usize, t: f64) -> Result<Vec<f64>> {
        let n = self.len() as isize;
        let closed = self.domain.is_closed();
        let mut offs: [isize; 4] = [-1, 0, 1, 2];
        if !closed {
            if i == 0 {
                offs = [0, 1, 2, 3];
            } else if i as isize + 2 >= n {
                offs = [-2, -1, 0, 1];
            }
        }
        let base = &self.points[i];
        let mut acc = vec![0.0; self.manifold.ambient_dim()];
        for &o in &offs {
            let mut w = 1.0;
            for &q in &offs {
                if q != o {
                    w *= (t - q as f64) / (o - q) as f64;
                }
            }
            if w == 0.0 {
                continue;
            }
            let j = (i as isize + o).rem_euclid(n) as usize;
            let f = if o == 0 { vec![0.0; acc.len()] } else { self.manifold.log_g(base, &self.points[j])? };
            acc = vecops::axpy(w, &f, &acc);
        }
        Ok(self.manifold.exp_g(base, &acc))
    }
}

fn check_adjacency(m: &ManifoldSpec, dom: &Domain, pts: &[Vec<f64>]) -> Result<()> {
    let limit = 0.5 * m.injectivity_radius();
    if !limit.is_finite() {
        return Ok(());
    }
    let n = pts.len();
    let edges = if dom.is_closed() { n } else { n - 1 };
    for i in 0..edges {
        let j = (i + 1) % n;
        let d = m.dist_f(&pts[i], &pts[j]);
        if d >= limit {
            return Err(Error::AdjacencyViolation { node: i, next: j, dist: d, limit });
        }
    }
    Ok(())
}

fn fingerprint(m: &ManifoldSpec, dom: &Domain, pts: &[Vec<f64>]) -> u64 {
    let mut hs = DefaultHasher::new();
    (m.kind as u8).hash(&mut hs);
    m.dim.hash(&mut hs);
    m.radius.to_bits().hash(&mut hs);
    dom.hash(&mut hs);
    for p in pts {
        for x in p {
            x.to_bits().hash(&mut hs);
        }
    }
    hs.finish()
}

/// Fourth-order derivative of a sampled scalar.
fn speed_derivative(s: &[f64], h: f64, closed: bool) -> Vec<f64> {
    let n = s.len();
    (0..n)
        .map(|i| {
            if closed || (i >= 2 && i + 2 < n) {
                let at = |o: isize| s[(i as isize + o).rem_euclid(n as isize) as usize];
                (8.0 * (at(1) - at(-1)) - (at(2) - at(-2))) / (12.0 * h)
            } else if i < 2 {
                speed_derivative_edge(s, i, h)
            } else {
                let r: Vec<f64> = s.iter().rev().copied().collect();
                -speed_derivative_edge(&r, n - 1 - i, h)
            }
        })
        .collect()
}

/// One-sided stencil at node 0 or 1 of `r`.
fn speed_derivative_edge(r: &[f64], i: usize, h: f64) -> f64 {
    if i == 0 {
        (-25.0 * r[0] + 48.0 * r[1] - 36.0 * r[2] + 16.0 * r[3] - 3.0 * r[4]) / (12.0 * h)
    } else {
        (-3.0 * r[0] - 10.0 * r[1] + 18.0 * r[2] - 6.0 * r[3] + r[4]) / (12.0 * h)
    }
}

/// Solves `S(t) = target` for the cubic Hermite `S` with `S(0) = s0`,
/// `S(1) = s1`, `S'(0) = d0`, `S'(1) = d1`.
fn invert_hermite(s0: f64, s1: f64, d0: f64, d1: f64, target: f64) -> f64 {
    let eval = |t: f64| {
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * s0 + (t3 - 2.0 * t2 + t) * d0 + (-2.0 * t3 + 3.0 * t2) * s1 + (t3 - t2) * d1;
        let dv = (6.0 * t2 - 6.0 * t) * s0 + (3.0 * t2 - 4.0 * t + 1.0) * d0 + (-6.0 * t2 + 6.0 * t) * s1 + (3.0 * t2 - 2.0 * t) * d1;
        (v, dv)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut t = ((target - s0) / (s1 - s0)).clamp(0.0, 1.0);
    for _ in 0..60 {
        let (v, dv) = eval(t);
        let r = v - target;
        if r.abs() <= 1e-15 * (1.0 + target.abs()) {
            break;
        }
        if r > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let newton = t - r / dv;
        t = if dv > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    t
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivVariable {
    Theta,
    Arclength,
}

/// A tangent vector field along a specific curve.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    vectors: Vec<Vec<f64>>,
    fingerprint: u64,
}

impl VectorField {
    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn into_vectors(self) -> Vec<Vec<f64>> {
        self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn scaled(&self, a: f64) -> VectorField {
        VectorField { vectors: self.vectors.iter().map(|v| vecops::scale(a, v)).collect(), fingerprint: self.fingerprint }
    }

    /// `a * self + other`.
    pub fn axpy(&self, a: f64, other: &VectorField) -> Result<VectorField> {
        if self.fingerprint != other.fingerprint {
            return Err(Error::InvalidArgument("vector fields live on different curves".into()));
        }
        let vectors = self.vectors.iter().zip(&other.vectors).map(|(x, y)| vecops::axpy(a, x, y)).collect();
        Ok(VectorField { vectors, fingerprint: self.fingerprint })
    }
}
