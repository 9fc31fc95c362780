//! Closed-form Riemannian geometry of the constant-curvature targets.
//!
//! Points and tangent vectors live in an ambient coordinate space:
//!
//! * Euclidean `R^d`: plain coordinates.
//! * Sphere `S^d` of radius `rho`: vectors of `R^{d+1}` with `|x| = rho`.
//! * Hyperbolic `H^d`: the upper sheet of `<x, x>_L = -1` in Minkowski
//!   space `R^{d,1}`, with `<x, y>_L = -x_0 y_0 + sum_i x_i y_i`.
//!
//! The kernels are generic over [`Real`] so that the same formulas serve both
//! plain evaluation and reverse-mode differentiation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{vecops, Real};

/// Below this geodesic distance (in units of the radius) exp/log switch to
/// their series expansions.
const SERIES_THRESHOLD: f64 = 1e-6;

/// Relative tolerance for the on-manifold and tangency constraints.
pub const CONSTRAINT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifoldKind {
    Euclidean,
    Sphere,
    Hyperbolic,
}

fn default_radius() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub kind: ManifoldKind,
    pub dim: usize,
    #[serde(default = "default_radius")]
    pub radius: f64,
}

/// A point in ambient coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

/// A tangent vector together with its base point.
#[derive(Clone, Debug, PartialEq)]
pub struct Tangent {
    pub base: Point,
    pub vec: Vec<f64>,
}

impl ManifoldSpec {
    pub fn euclidean(dim: usize) -> Self {
        ManifoldSpec { kind: ManifoldKind::Euclidean, dim, radius: 1.0 }
    }

    pub fn sphere(dim: usize, radius: f64) -> Self {
        ManifoldSpec { kind: ManifoldKind::Sphere, dim, radius }
    }

    pub fn hyperbolic(dim: usize) -> Self {
        ManifoldSpec { kind: ManifoldKind::Hyperbolic, dim, radius: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidArgument("manifold dim must be >= 1".into()));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "manifold radius must be positive, got {}",
                self.radius
            )));
        }
        Ok(())
    }

    /// Length of the coordinate vectors representing points and tangents.
    pub fn ambient_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Euclidean => self.dim,
            ManifoldKind::Sphere | ManifoldKind::Hyperbolic => self.dim + 1,
        }
    }

    /// Sectional curvature K.
    pub fn sectional_curvature(&self) -> f64 {
        match self.kind {
            ManifoldKind::Euclidean => 0.0,
            ManifoldKind::Sphere => 1.0 / (self.radius * self.radius),
            ManifoldKind::Hyperbolic => -1.0,
        }
    }

    /// Curvature bound `K_N = |K|`.
    pub fn curvature_bound(&self) -> f64 {
        self.sectional_curvature().abs()
    }

    pub fn injectivity_radius(&self) -> f64 {
        match self.kind {
            ManifoldKind::Sphere => std::f64::consts::PI * self.radius,
            _ => f64::INFINITY,
        }
    }

    fn r2(&self) -> f64 {
        self.radius * self.radius
    }

    // ---------------------------------------------------------------------
    // generic kernels on ambient coordinates

    /// The Riemannian inner product of two tangent vectors in ambient form.
    #[inline]
    pub(crate) fn g<T: Real>(&self, u: &[T], v: &[T]) -> T {
        match self.kind {
            ManifoldKind::Hyperbolic => minkowski(u, v),
            _ => vecops::dot(u, v),
        }
    }

    pub(crate) fn norm<T: Real>(&self, u: &[T]) -> T {
        self.g(u, u).sqrt()
    }

    /// Orthogonal projection of an ambient vector onto `T_p`.
    pub(crate) fn project<T: Real>(&self, p: &[T], v: &[T]) -> Vec<T> {
        match self.kind {
            ManifoldKind::Euclidean => v.to_vec(),
            ManifoldKind::Sphere => {
                let c = vecops::dot(p, v) / self.r2();
                vecops::axpy(-c, p, v)
            }
            ManifoldKind::Hyperbolic => {
                let c = minkowski(p, v);
                vecops::axpy(c, p, v)
            }
        }
    }

    /// Nearest point on the manifold (used to remove round-off drift).
    pub(crate) fn retract_point<T: Real>(&self, x: &[T]) -> Vec<T> {
        match self.kind {
            ManifoldKind::Euclidean => x.to_vec(),
            ManifoldKind::Sphere => {
                let n = vecops::dot(x, x).sqrt();
                vecops::scale(T::cst(self.radius) / n, x)
            }
            ManifoldKind::Hyperbolic => {
                let mut out = x.to_vec();
                let rest = vecops::dot(&x[1..], &x[1..]);
                out[0] = (rest + 1.0).sqrt();
                out
            }
        }
    }

    pub(crate) fn exp_g<T: Real>(&self, p: &[T], v: &[T]) -> Vec<T> {
        match self.kind {
            ManifoldKind::Euclidean => vecops::add(p, v),
            ManifoldKind::Sphere => {
                let th2 = vecops::dot(v, v) / self.r2();
                let (c, sinc) = if th2.val() < SERIES_THRESHOLD * SERIES_THRESHOLD {
                    (
                        T::cst(1.0) - th2 * 0.5 + th2 * th2 / 24.0,
                        T::cst(1.0) - th2 / 6.0 + th2 * th2 / 120.0,
                    )
                } else {
                    let th = th2.sqrt();
                    (th.cos(), th.sin() / th)
                };
                let x: Vec<T> = p.iter().zip(v).map(|(a, b)| *a * c + *b * sinc).collect();
                self.retract_point(&x)
            }
            ManifoldKind::Hyperbolic => {
                let r2 = minkowski(v, v);
                let (ch, shc) = if r2.val().abs() < SERIES_THRESHOLD * SERIES_THRESHOLD {
                    (T::cst(1.0) + r2 * 0.5 + r2 * r2 / 24.0, T::cst(1.0) + r2 / 6.0 + r2 * r2 / 120.0)
                } else {
                    let r = r2.sqrt();
                    (r.cosh(), r.sinh() / r)
                };
                let x: Vec<T> = p.iter().zip(v).map(|(a, b)| *a * ch + *b * shc).collect();
                self.retract_point(&x)
            }
        }
    }

    pub(crate) fn log_g<T: Real>(&self, p: &[T], q: &[T]) -> Result<Vec<T>> {
        match self.kind {
            ManifoldKind::Euclidean => Ok(vecops::sub(q, p)),
            ManifoldKind::Sphere => {
                let r2 = self.r2();
                let a = vecops::dot(p, q) / r2;
                let u = vecops::axpy(-a, p, q);
                let s2 = vecops::dot(&u, &u) / r2;
                let th = s2.val().max(0.0).sqrt().atan2(a.val());
                if self.radius * th > std::f64::consts::PI * self.radius - 1e-6 {
                    return Err(Error::InjectivityViolation(format!(
                        "sphere points at distance {:.9} are (nearly) antipodal",
                        self.radius * th
                    )));
                }
                let factor = if s2.val() < SERIES_THRESHOLD * SERIES_THRESHOLD && a.val() > 0.0 {
                    T::cst(1.0) + s2 / 6.0 + s2 * s2 * (3.0 / 40.0)
                } else {
                    let s = s2.sqrt();
                    s.atan2(a) / s
                };
                Ok(vecops::scale(factor, &u))
            }
            ManifoldKind::Hyperbolic => {
                let alpha = -minkowski(p, q);
                let u = vecops::axpy(-alpha, p, q);
                let s2 = minkowski(&u, &u);
                let factor = if s2.val().abs() < SERIES_THRESHOLD * SERIES_THRESHOLD {
                    T::cst(1.0) - s2 / 6.0 + s2 * s2 * (3.0 / 40.0)
                } else {
                    let s = s2.sqrt();
                    asinh(s) / s
                };
                Ok(vecops::scale(factor, &u))
            }
        }
    }

    /// Parallel transport of `v` from `p` to `q` along the minimizing geodesic.
    /// Callers guarantee `dist(p, q) < inj`.
    pub(crate) fn transport_g<T: Real>(&self, p: &[T], q: &[T], v: &[T]) -> Vec<T> {
        match self.kind {
            ManifoldKind::Euclidean => v.to_vec(),
            ManifoldKind::Sphere => {
                let c = vecops::dot(q, v) / (vecops::dot(p, q) + self.r2());
                let pq = vecops::add(p, q);
                vecops::axpy(-c, &pq, v)
            }
            ManifoldKind::Hyperbolic => {
                let c = minkowski(q, v) / (T::cst(1.0) - minkowski(p, q));
                let pq = vecops::add(p, q);
                vecops::axpy(c, &pq, v)
            }
        }
    }

    /// `R(x, y) z = K (g(y, z) x - g(x, z) y)`.
    pub(crate) fn curvature_g<T: Real>(&self, x: &[T], y: &[T], z: &[T]) -> Vec<T> {
        let k = self.sectional_curvature();
        if k == 0.0 {
            return vec![T::zero(); x.len()];
        }
        let gyz = self.g(y, z) * k;
        let gxz = self.g(x, z) * k;
        x.iter().zip(y).map(|(a, b)| gyz * *a - gxz * *b).collect()
    }

    /// Geodesic distance.
    pub(crate) fn dist_f(&self, p: &[f64], q: &[f64]) -> f64 {
        match self.kind {
            ManifoldKind::Euclidean => vecops::norm2(&vecops::sub(q, p)),
            ManifoldKind::Sphere => {
                let a = vecops::dot(p, q) / self.r2();
                let u = vecops::axpy(-a, p, q);
                let s = vecops::norm2(&u) / self.radius;
                self.radius * s.atan2(a)
            }
            ManifoldKind::Hyperbolic => {
                let alpha = -minkowski(p, q);
                alpha.max(1.0).acosh()
            }
        }
    }

    /// Deterministic orthonormal basis of `T_p`, built by Gram-Schmidt on the
    /// projected ambient coordinate axes (largest residual first).
    pub fn frame(&self, p: &[f64]) -> Vec<Vec<f64>> {
        let m = self.ambient_dim();
        let mut cands: Vec<Vec<f64>> = (0..m)
            .map(|k| {
                let mut e = vec![0.0; m];
                e[k] = 1.0;
                self.project(p, &e)
            })
            .collect();
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(self.dim);
        while basis.len() < self.dim {
            let mut best = (0usize, -1.0f64);
            for (k, c) in cands.iter().enumerate() {
                let nrm = self.g(c, c);
                if nrm > best.1 {
                    best = (k, nrm);
                }
            }
            let c = cands.swap_remove(best.0);
            let e = vecops::scale(1.0 / best.1.sqrt(), &c);
            for other in cands.iter_mut() {
                let proj = self.g(&e, other);
                *other = vecops::axpy(-proj, &e, other);
            }
            basis.push(e);
        }
        basis
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> std::result::Result<(), String> {
        if x.len() != self.ambient_dim() {
            return Err(format!("expected {} coordinates, got {}", self.ambient_dim(), x.len()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err("non-finite coordinate".into());
        }
        match self.kind {
            ManifoldKind::Euclidean => Ok(()),
            ManifoldKind::Sphere => {
                let r2 = vecops::dot(x, x);
                let res = (r2 - self.r2()).abs() / self.r2();
                if res > CONSTRAINT_TOL * 4.0 {
                    Err(format!("|x|^2 = {r2:.17} differs from radius^2 = {:.17}", self.r2()))
                } else {
                    Ok(())
                }
            }
            ManifoldKind::Hyperbolic => {
                let q = minkowski(x, x);
                let scale = 1.0 + vecops::dot(x, x);
                if x[0] <= 0.0 || (q + 1.0).abs() > CONSTRAINT_TOL * 4.0 * scale {
                    Err(format!("<x,x>_L = {q:.17} is not -1 on the upper sheet"))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub(crate) fn check_tangent(&self, p: &[f64], v: &[f64]) -> std::result::Result<(), String> {
        if v.len() != self.ambient_dim() {
            return Err(format!("expected {} components, got {}", self.ambient_dim(), v.len()));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err("non-finite component".into());
        }
        let off = match self.kind {
            ManifoldKind::Euclidean => 0.0,
            ManifoldKind::Sphere => vecops::dot(p, v).abs() / self.radius,
            ManifoldKind::Hyperbolic => minkowski(p, v).abs(),
        };
        let scale = vecops::norm2(p).max(1.0) * vecops::norm2(v).max(1.0);
        if off > CONSTRAINT_TOL * 4.0 * scale {
            Err(format!("vector is not tangent (normal component {off:e})"))
        } else {
            Ok(())
        }
    }

    // ---------------------------------------------------------------------
    // typed public API

    pub fn point(&self, coords: Vec<f64>) -> Result<Point> {
        self.check_point(&coords).map_err(Error::NotOnManifold)?;
        Ok(Point(coords))
    }

    pub fn tangent(&self, base: &Point, vec: Vec<f64>) -> Result<Tangent> {
        self.check_tangent(&base.0, &vec).map_err(Error::InvalidArgument)?;
        Ok(Tangent { base: base.clone(), vec })
    }

    pub fn zero_tangent(&self, base: &Point) -> Tangent {
        Tangent { base: base.clone(), vec: vec![0.0; self.ambient_dim()] }
    }

    fn same_base(&self, p: &Point, t: &Tangent) -> Result<()> {
        let close = p.0.len() == t.base.0.len()
            && p.0.iter().zip(&t.base.0).all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        if close {
            Ok(())
        } else {
            Err(Error::InvalidArgument("tangent vector is based at a different point".into()))
        }
    }

    pub fn inner(&self, p: &Point, u: &Tangent, v: &Tangent) -> Result<f64> {
        self.same_base(p, u)?;
        self.same_base(p, v)?;
        Ok(self.g(&u.vec, &v.vec))
    }

    pub fn exp(&self, p: &Point, v: &Tangent) -> Result<Point> {
        self.same_base(p, v)?;
        Ok(Point(self.exp_g(&p.0, &v.vec)))
    }

    pub fn log(&self, p: &Point, q: &Point) -> Result<Tangent> {
        let v = self.log_g(&p.0, &q.0)?;
        Ok(Tangent { base: p.clone(), vec: v })
    }

    pub fn distance(&self, p: &Point, q: &Point) -> f64 {
        self.dist_f(&p.0, &q.0)
    }

    pub fn transport(&self, p: &Point, q: &Point, v: &Tangent) -> Result<Tangent> {
        self.same_base(p, v)?;
        if self.kind == ManifoldKind::Sphere {
            let d = self.dist_f(&p.0, &q.0);
            if d > self.injectivity_radius() - 1e-6 {
                return Err(Error::InjectivityViolation(format!(
                    "no unique geodesic between points at distance {d:.9}"
                )));
            }
        }
        Ok(Tangent { base: q.clone(), vec: self.transport_g(&p.0, &q.0, &v.vec) })
    }

    pub fn curvature(&self, p: &Point, x: &Tangent, y: &Tangent, z: &Tangent) -> Result<Tangent> {
        self.same_base(p, x)?;
        self.same_base(p, y)?;
        self.same_base(p, z)?;
        Ok(Tangent { base: p.clone(), vec: self.curvature_g(&x.vec, &y.vec, &z.vec) })
    }
}

#[inline]
pub(crate) fn minkowski<T: Real>(u: &[T], v: &[T]) -> T {
    let mut s = -(u[0] * v[0]);
    for (a, b) in u[1..].iter().zip(&v[1..]) {
        s += *a * *b;
    }
    s
}

fn asinh<T: Real>(s: T) -> T {
    let x = s.val();
    s.lift(x.asinh(), 1.0 / (1.0 + x * x).sqrt())
}
