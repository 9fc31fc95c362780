//! Geodesic initial value problem for first-order metrics
//! `G_c(h, k) = a_0 int g(h, k) ds + a_1 int g(nabla_s h, nabla_s k) ds`.
//!
//! The geodesic equation is written as
//!
//! ```text
//! A_c X = -(nabla_t A_c) w - mu A_c w - 1/2 Psi nabla_s v - g(w_s, A_c w) v - a_1 R(w, w_s) v
//! ```
//!
//! with `w = c_t`, `X = nabla_t w`, `w_s = nabla_s w`, `mu = g(v, w_s)`, unit
//! tangent `v`, and the inertia operator `A_c = a_0 - a_1 nabla_s^2`. The
//! curvature sign is the one for `R(X, Y) = [nabla_X, nabla_Y] - nabla_[X, Y]`.
//! Expanding the commutator with the swap rule
//! `nabla_t nabla_s k = nabla_s nabla_t k - mu nabla_s k + R(w, v) k` gives
//!
//! ```text
//! (nabla_t A_c) w = l_t (a_0' w - a_1' w_ss)
//!                 + a_1 (mu w_ss + nabla_s(mu w_s) - nabla_s(R(w, v) w) - R(w, v) w_s),
//! ```
//!
//! where `l_t = int mu ds`. For open curves the natural boundary condition
//! `-2 nabla_t(a_1 w_s) + Psi v = 0` becomes Neumann data for `X`:
//!
//! ```text
//! nabla_s X = Psi v / (2 a_1) - (a_1' / a_1) l_t w_s + mu w_s - R(w, v) w   at both ends.
//! ```
//!
//! `A_c` is discretized by a compact three-point stencil in a frame that is
//! parallel along the curve; on closed curves the seam couples through the
//! holonomy of that frame, giving a cyclic block-tridiagonal SPD system.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::curve::{DerivVariable, DiscreteCurve, VectorField};
use crate::error::{Error, Result};
use crate::linalg::BlockTridiagonal;
use crate::manifold::{ManifoldKind, ManifoldSpec};
use crate::metric::{inner_g, CurvePath, MetricSpec};
use crate::real::vecops;

fn require_first_order(spec: &MetricSpec) -> Result<()> {
    if spec.order() != 1 {
        return Err(Error::UnsupportedOrder(spec.order()));
    }
    Ok(())
}

/// Orthonormal frames `E_i` with `E_{i+1} = transport(E_i)`, and for closed
/// curves the matrix `Q` with `transport_{N-1 -> 0}(E_{N-1}) = E_0 Q`.
struct ParallelFrame {
    frames: Vec<Vec<Vec<f64>>>,
    seam: Option<DMatrix<f64>>,
}

impl ParallelFrame {
    fn new(c: &DiscreteCurve) -> Self {
        let m = c.manifold();
        let pts = c.points();
        let n = pts.len();
        let mut frames = vec![m.frame(&pts[0])];
        for i in 1..n {
            let prev = &frames[i - 1];
            let next = prev.iter().map(|e| m.transport_g(&pts[i - 1], &pts[i], e)).collect();
            frames.push(next);
        }
        let seam = c.domain().is_closed().then(|| {
            let d = m.dim;
            let last = &frames[n - 1];
            let mut q = DMatrix::zeros(d, d);
            for (b, e) in last.iter().enumerate() {
                let t = m.transport_g(&pts[n - 1], &pts[0], e);
                for (a, f) in frames[0].iter().enumerate() {
                    q[(a, b)] = m.g(f, &t);
                }
            }
            q
        });
        ParallelFrame { frames, seam }
    }

    fn coords(&self, m: &ManifoldSpec, h: &[Vec<f64>]) -> Vec<DVector<f64>> {
        self.frames
            .iter()
            .zip(h)
            .map(|(f, v)| DVector::from_iterator(f.len(), f.iter().map(|e| m.g(e, v))))
            .collect()
    }

    fn ambient(&self, u: &[DVector<f64>]) -> Vec<Vec<f64>> {
        self.frames
            .iter()
            .zip(u)
            .map(|(f, x)| {
                let mut out = vec![0.0; f[0].len()];
                for (e, a) in f.iter().zip(x.iter()) {
                    out = vecops::axpy(*a, e, &out);
                }
                out
            })
            .collect()
    }
}

/// The stiffness form of `A_c`: `U^T K U` approximates `G_c(u, u)` and
/// `K U = M (A_c u)` up to boundary fluxes, with `M` the lumped `ds` weights.
struct Inertia {
    system: BlockTridiagonal,
    mass: Vec<f64>,
    a1: f64,
    frame: ParallelFrame,
}

impl Inertia {
    fn new(a0: f64, a1: f64, c: &DiscreteCurve) -> Self {
        let dom = c.domain();
        let n = c.len();
        let d = c.manifold().dim;
        let h = dom.spacing();
        let s = c.speeds();
        let closed = dom.is_closed();
        let mass: Vec<f64> = (0..n).map(|i| s[i] * h * dom.trap_weight(i)).collect();
        let edges = if closed { n } else { n - 1 };
        // conductances a_1 / (s_{i+1/2} dtheta)
        let k: Vec<f64> = (0..edges).map(|i| a1 / (0.5 * (s[i] + s[(i + 1) % n]) * h)).collect();
        let eye = DMatrix::<f64>::identity(d, d);
        let mut diag = Vec::with_capacity(n);
        for i in 0..n {
            let mut v = a0 * mass[i];
            if closed || i + 1 < n {
                v += k[i];
            }
            if closed || i > 0 {
                v += k[(i + edges - 1) % edges];
            }
            diag.push(&eye * v);
        }
        let upper = (0..n - 1).map(|i| &eye * -k[i]).collect();
        let frame = ParallelFrame::new(c);
        let corner = frame.seam.as_ref().map(|q| q.transpose() * -k[n - 1]);
        Inertia { system: BlockTridiagonal { diag, upper, corner }, mass, a1, frame }
    }
}

fn coefficients(spec: &MetricSpec, c: &DiscreteCurve) -> Result<(f64, f64)> {
    let a = spec.coefficients(c.length())?;
    Ok((a[0], a[1]))
}

fn as_blocks(u: &[DVector<f64>]) -> Vec<DMatrix<f64>> {
    u.iter().map(|x| DMatrix::from_column_slice(x.len(), 1, x.as_slice())).collect()
}

/// Neumann data `nabla_theta u` at the two ends of an open curve.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryData {
    Periodic,
    Neumann { start: Vec<f64>, end: Vec<f64> },
}

impl BoundaryData {
    /// The boundary data of an existing field (one-sided differences at the ends).
    pub fn of_field(c: &DiscreteCurve, h: &VectorField) -> Result<Self> {
        if c.domain().is_closed() {
            return Ok(BoundaryData::Periodic);
        }
        let d = c.cov_deriv(h, DerivVariable::Theta, 1)?;
        let v = d.vectors();
        Ok(BoundaryData::Neumann { start: v[0].clone(), end: v[v.len() - 1].clone() })
    }

    pub fn homogeneous(c: &DiscreteCurve) -> Self {
        if c.domain().is_closed() {
            BoundaryData::Periodic
        } else {
            let z = vec![0.0; c.manifold().ambient_dim()];
            BoundaryData::Neumann { start: z.clone(), end: z }
        }
    }
}

/// `A_c h = a_0 h - a_1 nabla_s^2 h` through the compact stencil.
pub fn apply_inertia(spec: &MetricSpec, c: &DiscreteCurve, h: &VectorField) -> Result<VectorField> {
    require_first_order(spec)?;
    let (a0, a1) = coefficients(spec, c)?;
    let inertia = Inertia::new(a0, a1, c);
    let m = c.manifold();
    let u = inertia.frame.coords(m, h.vectors());
    let mut ku: Vec<DVector<f64>> =
        inertia.system.apply(&as_blocks(&u)).into_iter().map(|b| b.column(0).into_owned()).collect();
    if let BoundaryData::Neumann { start, end } = BoundaryData::of_field(c, h)? {
        let n = c.len();
        let s = c.speeds();
        let f = &inertia.frame;
        let g0 = f.coords(m, std::slice::from_ref(&start)).remove(0);
        let g1 = DVector::from_iterator(m.dim, f.frames[n - 1].iter().map(|e| m.g(e, &end)));
        ku[0] += g0 * (inertia.a1 / s[0]);
        ku[n - 1] -= g1 * (inertia.a1 / s[n - 1]);
    }
    let out: Vec<DVector<f64>> = ku.into_iter().zip(&inertia.mass).map(|(x, w)| x / *w).collect();
    Ok(c.field_unchecked(inertia.frame.ambient(&out)))
}

/// Solves `A_c u = f` (periodic, or with Neumann data `nabla_theta u` at the ends).
pub fn solve_inertia(spec: &MetricSpec, c: &DiscreteCurve, f: &VectorField, bc: &BoundaryData) -> Result<VectorField> {
    require_first_order(spec)?;
    c.check_field(f)?;
    let (a0, a1) = coefficients(spec, c)?;
    solve_with(a0, a1, c, f.vectors(), bc).map(|u| c.field_unchecked(u))
}

fn solve_with(a0: f64, a1: f64, c: &DiscreteCurve, f: &[Vec<f64>], bc: &BoundaryData) -> Result<Vec<Vec<f64>>> {
    let inertia = Inertia::new(a0, a1, c);
    let m = c.manifold();
    let n = c.len();
    let mut rhs: Vec<DVector<f64>> =
        inertia.frame.coords(m, f).into_iter().zip(&inertia.mass).map(|(x, w)| x * *w).collect();
    match (bc, c.domain().is_closed()) {
        (BoundaryData::Periodic, true) => {}
        (BoundaryData::Neumann { start, end }, false) => {
            let s = c.speeds();
            let fr = &inertia.frame.frames;
            let g0 = DVector::from_iterator(m.dim, fr[0].iter().map(|e| m.g(e, start)));
            let g1 = DVector::from_iterator(m.dim, fr[n - 1].iter().map(|e| m.g(e, end)));
            rhs[0] -= g0 * (a1 / s[0]);
            rhs[n - 1] += g1 * (a1 / s[n - 1]);
        }
        _ => {
            return Err(Error::InvalidArgument(
                "boundary data must be periodic for closed curves and Neumann for open curves".into(),
            ))
        }
    }
    let x = inertia.system.solve(&as_blocks(&rhs))?;
    let u: Vec<DVector<f64>> = x.into_iter().map(|b| b.column(0).into_owned()).collect();
    Ok(inertia.frame.ambient(&u))
}

/// Derived fields of a state that the geodesic equation needs.
struct Kinematics {
    a: [f64; 2],
    da: [f64; 2],
    v: Vec<Vec<f64>>,
    w1: Vec<Vec<f64>>,
    w2: Vec<Vec<f64>>,
    mu: Vec<f64>,
    l_dot: f64,
    psi: Vec<f64>,
}

fn kinematics(spec: &MetricSpec, c: &DiscreteCurve, w: &VectorField) -> Result<Kinematics> {
    require_first_order(spec)?;
    let m = c.manifold();
    let l = c.length();
    let a = spec.coefficients(l)?;
    let da = spec.coefficient_derivatives(l)?;
    let ds = c.cov_derivs(w, DerivVariable::Arclength, 2)?;
    let v = c.unit_tangent().into_vectors();
    let w0 = w.vectors();
    let w1 = ds[1].vectors().to_vec();
    let w2 = ds[2].vectors().to_vec();
    let weights = c.weights();
    let mu: Vec<f64> = v.iter().zip(&w1).map(|(a, b)| m.g(a, b)).collect();
    let l_dot: f64 = mu.iter().zip(weights).map(|(a, b)| a * b).sum();
    let int_w: f64 = w0.iter().zip(weights).map(|(x, s)| m.g(x, x) * s).sum();
    let int_w1: f64 = w1.iter().zip(weights).map(|(x, s)| m.g(x, x) * s).sum();
    let psi = w0
        .iter()
        .zip(&w1)
        .map(|(x, y)| a[0] * m.g(x, x) + da[0] * int_w - a[1] * m.g(y, y) + da[1] * int_w1)
        .collect();
    Ok(Kinematics { a: [a[0], a[1]], da: [da[0], da[1]], v, w1, w2, mu, l_dot, psi })
}

/// `Psi_c(w, w)` at every node.
pub fn psi_form(spec: &MetricSpec, c: &DiscreteCurve, w: &VectorField) -> Result<Vec<f64>> {
    c.check_field(w)?;
    Ok(kinematics(spec, c, w)?.psi)
}

/// The covariant acceleration `nabla_t c_t` of the geodesic through `(c, w)`.
pub fn covariant_acceleration(spec: &MetricSpec, c: &DiscreteCurve, w: &VectorField) -> Result<VectorField> {
    c.check_field(w)?;
    let k = kinematics(spec, c, w)?;
    let m = c.manifold();
    let n = c.len();
    let [a0, a1] = k.a;
    let [da0, da1] = k.da;
    let w0 = w.vectors();
    let step = |f: Vec<Vec<f64>>| c.cov_deriv(&c.field_unchecked(f), DerivVariable::Arclength, 1).map(|x| x.into_vectors());
    let curved = m.kind != ManifoldKind::Euclidean;
    let rwvw: Vec<Vec<f64>> = (0..n).map(|i| m.curvature_g(&w0[i], &k.v[i], &w0[i])).collect();
    let d_rwvw = if curved { step(rwvw.clone())? } else { vec![vec![0.0; m.ambient_dim()]; n] };
    let d_mu_w1 = step((0..n).map(|i| vecops::scale(k.mu[i], &k.w1[i])).collect())?;
    let dv = step(k.v.clone())?;
    let mut f = Vec::with_capacity(n);
    for i in 0..n {
        let aw = vecops::lincomb(&[(a0, &w0[i]), (-a1, &k.w2[i])]);
        let r_wv_w1 = m.curvature_g(&w0[i], &k.v[i], &k.w1[i]);
        let r_ww1_v = m.curvature_g(&w0[i], &k.w1[i], &k.v[i]);
        // (nabla_t A) w
        let dta = vecops::lincomb(&[
            (k.l_dot * da0, &w0[i]),
            (-k.l_dot * da1, &k.w2[i]),
            (a1 * k.mu[i], &k.w2[i]),
            (a1, &d_mu_w1[i]),
            (-a1, &d_rwvw[i]),
            (-a1, &r_wv_w1),
        ]);
        let g_w1_aw = m.g(&k.w1[i], &aw);
        let rhs = vecops::lincomb(&[
            (-1.0, &dta),
            (-k.mu[i], &aw),
            (-0.5 * k.psi[i], &dv[i]),
            (-g_w1_aw, &k.v[i]),
            (-a1, &r_ww1_v),
        ]);
        f.push(m.project(&c.points()[i], &rhs));
    }
    let bc = if c.domain().is_closed() {
        BoundaryData::Periodic
    } else {
        let s = c.speeds();
        let end_value = |i: usize| {
            let x = vecops::lincomb(&[
                (k.psi[i] / (2.0 * a1), &k.v[i]),
                (k.mu[i] - da1 / a1 * k.l_dot, &k.w1[i]),
                (-1.0, &rwvw[i]),
            ]);
            vecops::scale(s[i], &m.project(&c.points()[i], &x))
        };
        BoundaryData::Neumann { start: end_value(0), end: end_value(n - 1) }
    };
    solve_with(a0, a1, c, &f, &bc).map(|u| c.field_unchecked(u))
}

/// Initial data for the geodesic IVP.
#[derive(Clone, Debug)]
pub struct GeodesicState {
    pub curve: DiscreteCurve,
    pub velocity: VectorField,
}

impl GeodesicState {
    pub fn new(curve: DiscreteCurve, velocity: VectorField) -> Result<Self> {
        curve.check_field(&velocity)?;
        Ok(GeodesicState { curve, velocity })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub t: f64,
    pub energy: f64,
    pub length: f64,
    pub min_speed: f64,
}

#[derive(Clone, Debug)]
pub struct IvpResult {
    /// Curves at `t_j = j T / steps` (fewer if the integration aborted).
    pub curves: Vec<DiscreteCurve>,
    pub times: Vec<f64>,
    pub velocities: Vec<VectorField>,
    pub diagnostics: Vec<StepDiagnostics>,
    /// Why the integration stopped early, if it did.
    pub aborted: Option<Error>,
}

impl IvpResult {
    /// The computed curves as a path; needs at least one completed step.
    pub fn path(&self) -> Result<CurvePath> {
        CurvePath::with_times(self.curves.clone(), self.times.clone())
    }

    pub fn final_state(&self) -> GeodesicState {
        let c = self.curves.last().unwrap().clone();
        GeodesicState { curve: c, velocity: self.velocities.last().unwrap().clone() }
    }

    /// Largest relative deviation of the energy from its initial value.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.diagnostics[0].energy;
        self.diagnostics.iter().map(|d| ((d.energy - e0) / e0).abs()).fold(0.0, f64::max)
    }
}

type State = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Nearest on-manifold state.
fn project_state(m: &ManifoldSpec, s: &State) -> State {
    let c: Vec<Vec<f64>> = s.0.iter().map(|p| m.retract_point(p)).collect();
    let w = c.iter().zip(&s.1).map(|(p, v)| m.project(p, v)).collect();
    (c, w)
}

fn build_curve(template: &DiscreteCurve, pts: Vec<Vec<f64>>) -> Result<DiscreteCurve> {
    DiscreteCurve::with_options(template.manifold().clone(), *template.domain(), pts, template.options())
}

/// Right-hand side of the ambient first-order system, evaluated on the
/// projection of `s` so that off-manifold RK stages stay well defined.
fn rhs(spec: &MetricSpec, template: &DiscreteCurve, s: &State) -> Result<State> {
    let m = template.manifold();
    let (c, w) = project_state(m, s);
    let curve = build_curve(template, c.clone())?;
    let x = covariant_acceleration(spec, &curve, &curve.field_unchecked(w.clone()))?;
    let dw = c
        .iter()
        .zip(&w)
        .zip(x.vectors())
        .map(|((p, v), a)| match m.kind {
            ManifoldKind::Euclidean => a.clone(),
            ManifoldKind::Sphere => vecops::axpy(-m.g(v, v) / (m.radius * m.radius), p, a),
            ManifoldKind::Hyperbolic => vecops::axpy(m.g(v, v), p, a),
        })
        .collect();
    Ok((w, dw))
}

fn axpy_state(a: f64, x: &State, y: &State) -> State {
    let f = |u: &[Vec<f64>], v: &[Vec<f64>]| u.iter().zip(v).map(|(p, q)| vecops::axpy(a, p, q)).collect();
    (f(&x.0, &y.0), f(&x.1, &y.1))
}

fn rk4_step(spec: &MetricSpec, template: &DiscreteCurve, s: &State, h: f64) -> Result<State> {
    let k1 = rhs(spec, template, s)?;
    let k2 = rhs(spec, template, &axpy_state(0.5 * h, &k1, s))?;
    let k3 = rhs(spec, template, &axpy_state(0.5 * h, &k2, s))?;
    let k4 = rhs(spec, template, &axpy_state(h, &k3, s))?;
    let mut out = axpy_state(h / 6.0, &k1, s);
    out = axpy_state(h / 3.0, &k2, &out);
    out = axpy_state(h / 3.0, &k3, &out);
    out = axpy_state(h / 6.0, &k4, &out);
    Ok(project_state(template.manifold(), &out))
}

fn diagnostics(spec: &MetricSpec, step: usize, t: f64, c: &DiscreteCurve, w: &VectorField) -> Result<StepDiagnostics> {
    Ok(StepDiagnostics {
        step,
        t,
        energy: inner_g(spec, c, w, w)?,
        length: c.length(),
        min_speed: c.speeds().iter().copied().fold(f64::INFINITY, f64::min),
    })
}

/// Integrates the geodesic equation with classical RK4 over `[0, t_end]`.
pub fn ivp_integrate(spec: &MetricSpec, state0: &GeodesicState, t_end: f64, steps: usize) -> Result<IvpResult> {
    require_first_order(spec)?;
    if steps == 0 || !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument("need steps >= 1 and a positive final time".into()));
    }
    state0.curve.check_field(&state0.velocity)?;
    let h = t_end / steps as f64;
    let template = &state0.curve;
    let mut curves = vec![state0.curve.clone()];
    let mut velocities = vec![state0.velocity.clone()];
    let mut diags = vec![diagnostics(spec, 0, 0.0, &state0.curve, &state0.velocity)?];
    let mut state: State = (state0.curve.points().to_vec(), state0.velocity.vectors().to_vec());
    let mut aborted = None;
    for step in 1..=steps {
        let next = rk4_step(spec, template, &state, h).and_then(|s| {
            let c = build_curve(template, s.0.clone())?;
            Ok((s, c))
        });
        match next {
            Ok((s, c)) => {
                let w = c.field_unchecked(s.1.clone());
                diags.push(diagnostics(spec, step, step as f64 * h, &c, &w)?);
                curves.push(c);
                velocities.push(w);
                state = s;
            }
            Err(e) => {
                aborted = Some(e);
                break;
            }
        }
    }
    let times = (0..curves.len()).map(|j| j as f64 * h).collect();
    Ok(IvpResult { curves, times, velocities, diagnostics: diags, aborted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{CurveOptions, Domain};
    use std::f64::consts::PI;

    fn circle(n: usize) -> DiscreteCurve {
        DiscreteCurve::from_fn(ManifoldSpec::euclidean(2), Domain::closed(n).unwrap(), |t| vec![t.cos(), t.sin()]).unwrap()
    }

    fn constant(a0: f64, a1: f64) -> MetricSpec {
        MetricSpec::constant(&[a0, a1]).unwrap()
    }

    #[test]
    fn higher_orders_rejected() {
        let c = circle(16);
        let spec = MetricSpec::constant(&[1.0, 0.0, 1.0]).unwrap();
        assert_eq!(apply_inertia(&spec, &c, &c.zero_field()), Err(Error::UnsupportedOrder(2)));
    }

    #[test]
    fn inertia_on_constant_field_of_segment() {
        let c = DiscreteCurve::from_fn(ManifoldSpec::euclidean(2), Domain::open(32).unwrap(), |t| vec![t, 0.5]).unwrap();
        let h = c.field_from_fn(|_, _, _| vec![0.3, -1.0]);
        let a = apply_inertia(&constant(1.0, 1.0), &c, &h).unwrap();
        for v in a.vectors() {
            assert!((v[0] - 0.3).abs() < 1e-12 && (v[1] + 1.0).abs() < 1e-12);
        }
        let u = solve_inertia(&constant(2.0, 1.0), &c, &h, &BoundaryData::homogeneous(&c)).unwrap();
        for v in u.vectors() {
            assert!((v[0] - 0.15).abs() < 1e-12 && (v[1] + 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn inertia_on_circle_field() {
        let c = circle(256);
        let h = c.field_from_fn(|_, t, _| vec![t.cos(), t.sin()]);
        let a = apply_inertia(&constant(1.0, 1.0), &c, &h).unwrap();
        for (x, y) in a.vectors().iter().zip(h.vectors()) {
            assert!((x[0] - 2.0 * y[0]).abs() < 1e-3 && (x[1] - 2.0 * y[1]).abs() < 1e-3);
        }
        let a3 = apply_inertia(&constant(1.0, 1.0), &c, &h.scaled(3.0)).unwrap();
        for (x, y) in a3.vectors().iter().zip(a.vectors()) {
            let e = (x[0] - 3.0 * y[0]).abs().max((x[1] - 3.0 * y[1]).abs());
            assert!(e < 1e-12 * vecops::norm2(x), "{e:e}");
        }
    }

    #[test]
    fn round_trip_on_sphere() {
        let m = ManifoldSpec::sphere(2, 1.0);
        for dom in [Domain::closed(64).unwrap(), Domain::open(64).unwrap()] {
            let c = DiscreteCurve::from_fn(m.clone(), dom, |t| {
                let (a, b) = (0.9 * t, 0.4 + 0.2 * t.sin());
                vec![a.cos() * b.cos(), a.sin() * b.cos(), b.sin()]
            })
            .unwrap();
            let h = c.field_from_fn(|_, t, _| vec![(3.0 * t).sin(), t.cos(), 0.5]);
            let spec = MetricSpec::scale_invariant(&[1.0, 0.7]).unwrap();
            let f = apply_inertia(&spec, &c, &h).unwrap();
            let bc = BoundaryData::of_field(&c, &h).unwrap();
            let u = solve_inertia(&spec, &c, &f, &bc).unwrap();
            for (x, y) in u.vectors().iter().zip(h.vectors()) {
                assert!(vecops::norm2(&vecops::sub(x, y)) < 1e-10);
            }
        }
    }

    #[test]
    fn small_a1_is_nearly_identity() {
        let c = circle(128);
        let f = c.field_from_fn(|_, t, _| vec![t.cos() + 0.5, (2.0 * t).sin()]);
        let u = solve_inertia(&constant(1.0, 1e-6), &c, &f, &BoundaryData::Periodic).unwrap();
        for (x, y) in u.vectors().iter().zip(f.vectors()) {
            assert!(vecops::norm2(&vecops::sub(x, y)) < 1e-4);
        }
    }

    #[test]
    fn psi_examples() {
        let spec = constant(1.0, 1.0);
        let seg = DiscreteCurve::from_fn(ManifoldSpec::euclidean(2), Domain::open(32).unwrap(), |t| vec![t, 0.0]).unwrap();
        let w = seg.field_from_fn(|_, _, _| vec![0.0, 1.0]);
        assert!(psi_form(&spec, &seg, &w).unwrap().iter().all(|p| (p - 1.0).abs() < 1e-12));
        // |w| = 0 at the sampled point theta = pi, |nabla_s w| = 1 everywhere
        let w = seg.field_from_fn(|_, t, _| vec![0.0, t - PI]);
        let psi = psi_form(&spec, &seg, &w).unwrap();
        let mid = (seg.len() - 1) / 2;
        let mid_theta = seg.domain().theta(mid);
        assert!((psi[mid] - (-1.0 + (mid_theta - PI).powi(2))).abs() < 1e-12);
    }

    #[test]
    fn psi_scale_invariant_normal_field() {
        // unit circle, w = outward normal: |w| = 1, nabla_s w = v so |w_s| = 1,
        // l = 2 pi, a_0 = l^-3, a_1 = l^-1, a_0' = -3 l^-4, a_1' = -l^-2
        let c = circle(512);
        let w = c.field_from_fn(|_, t, _| vec![t.cos(), t.sin()]);
        let spec = MetricSpec::scale_invariant(&[1.0, 1.0]).unwrap();
        let l = c.length();
        let want = l.powi(-3) - 3.0 * l.powi(-4) * l - l.powi(-1) - l.powi(-2) * l;
        for p in psi_form(&spec, &c, &w).unwrap() {
            assert!((p - want).abs() < 1e-4, "{p} vs {want}");
        }
    }

    #[test]
    fn flat_targets_have_no_curvature_forcing() {
        let m = ManifoldSpec::euclidean(3);
        let x = m.curvature_g(&[1.0, 0.0, 2.0], &[0.0, 1.0, 0.0], &[3.0, 1.0, 1.0]);
        assert!(x.iter().all(|v| *v == 0.0));
    }

    fn max_node_gap(a: &DiscreteCurve, b: &DiscreteCurve) -> f64 {
        a.points().iter().zip(b.points()).map(|(p, q)| vecops::norm2(&vecops::sub(p, q))).fold(0.0, f64::max)
    }

    #[test]
    fn rk4_time_convergence_order() {
        let run = |steps| {
            let c = circle(64);
            let w = c.field_from_fn(|_, _, _| vec![1.0, 0.0]);
            let r = ivp_integrate(&constant(1.0, 1.0), &GeodesicState::new(c, w).unwrap(), 0.5, steps).unwrap();
            r.curves.last().unwrap().clone()
        };
        let (a, b, c) = (run(5), run(10), run(20));
        let order = (max_node_gap(&a, &b) / max_node_gap(&b, &c)).log2();
        assert!((order - 4.0).abs() < 0.3, "order {order}");
    }

    #[test]
    fn closed_circle_energy_drift_shrinks_with_resolution() {
        let drift = |n| {
            let c = circle(n);
            let w = c.field_from_fn(|_, _, _| vec![1.0, 0.0]);
            ivp_integrate(&constant(1.0, 1.0), &GeodesicState::new(c, w).unwrap(), 0.5, 50).unwrap().energy_drift()
        };
        let (a, b) = (drift(64), drift(128));
        assert!(b < 1.5e-5, "drift {b}");
        assert!(a / b > 3.5, "ratio {}", a / b);
    }

    fn sphere_drift(n: usize) -> f64 {
        let m = ManifoldSpec::sphere(2, 1.0);
        let c = DiscreteCurve::from_fn(m, Domain::closed(n).unwrap(), |t| {
            let p: f64 = 0.8;
            vec![p.sin() * t.cos(), p.sin() * t.sin(), p.cos()]
        })
        .unwrap();
        let w = c.field_from_fn(|_, t, _| vec![0.3 + 0.5 * (2.0 * t).sin(), (3.0 * t).cos(), 0.2]);
        let spec = constant(1.0, 1.0);
        let r = ivp_integrate(&spec, &GeodesicState::new(c, w).unwrap(), 0.01, 10).unwrap();
        assert!(r.aborted.is_none());
        r.energy_drift()
    }

    /// The curvature forcing term is what makes the energy converge on S^2.
    #[test]
    fn sphere_energy_drift_converges() {
        let (a, b) = (sphere_drift(64), sphere_drift(128));
        assert!(a / b > 3.5, "{a} {b}");
        assert!(b < 3e-5);
    }

    #[test]
    fn hyperbolic_energy_is_nearly_conserved() {
        let m = ManifoldSpec::hyperbolic(2);
        let c = DiscreteCurve::from_fn(m, Domain::closed(128).unwrap(), |t| {
            let (x, y) = (0.7 * t.cos(), 0.5 * t.sin());
            vec![(1.0 + x * x + y * y).sqrt(), x, y]
        })
        .unwrap();
        let w = c.field_from_fn(|_, t, _| vec![0.0, 0.4, 0.2 * t.cos()]);
        let spec = MetricSpec::scale_invariant(&[1.0, 1.0]).unwrap();
        let r = ivp_integrate(&spec, &GeodesicState::new(c, w).unwrap(), 0.2, 20).unwrap();
        assert!(r.aborted.is_none());
        assert!(r.energy_drift() < 1e-4, "{}", r.energy_drift());
        for (cv, wv) in r.curves.iter().zip(&r.velocities) {
            for (p, v) in cv.points().iter().zip(wv.vectors()) {
                assert!(crate::manifold::minkowski(p, p) + 1.0 < 1e-12);
                assert!(crate::manifold::minkowski(p, v).abs() < 1e-12);
            }
        }
    }

    /// The natural boundary condition pulls the ends of a translating open
    /// segment outwards, so it stretches symmetrically while translating.
    #[test]
    fn translating_segment_stretches_symmetrically() {
        let c = DiscreteCurve::from_fn(ManifoldSpec::euclidean(2), Domain::open(64).unwrap(), |t| vec![t, 0.0]).unwrap();
        let w = c.field_from_fn(|_, _, _| vec![0.0, 1.0]);
        let r = ivp_integrate(&constant(1.0, 1.0), &GeodesicState::new(c.clone(), w).unwrap(), 0.5, 50).unwrap();
        let last = r.curves.last().unwrap();
        assert!(last.length() > c.length());
        let n = c.len();
        for i in 0..n {
            let (p, q) = (&last.points()[i], &last.points()[n - 1 - i]);
            assert!((p[0] + q[0] - 2.0 * PI).abs() < 1e-9 && (p[1] - q[1]).abs() < 1e-9);
        }
        assert!(r.energy_drift() < 1e-3);
    }

    #[test]
    fn immersion_loss_aborts_with_partial_path() {
        // nearly an L2 metric, so nodes move almost in straight lines towards the centre
        let pts = circle(32).points().to_vec();
        let opts = CurveOptions { eps_imm: 0.1, ..CurveOptions::default() };
        let c = DiscreteCurve::with_options(ManifoldSpec::euclidean(2), Domain::closed(32).unwrap(), pts, opts).unwrap();
        let w = c.field_from_fn(|_, t, _| vec![-2.0 * t.cos(), -2.0 * t.sin()]);
        let r = ivp_integrate(&constant(1.0, 1e-4), &GeodesicState::new(c, w).unwrap(), 1.0, 50).unwrap();
        assert!(r.aborted.is_some());
        assert_eq!(r.curves.len(), r.diagnostics.len());
        assert!(matches!(r.aborted, Some(Error::ImmersionViolation { .. })));
        assert!(r.curves.len() > 15 && r.curves.len() < 30, "{}", r.curves.len());
    }
}
