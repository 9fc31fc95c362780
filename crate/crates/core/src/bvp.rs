//! Minimizing geodesics between two immersions by direct minimization of the
//! discrete path energy `E = sum_j G_{m_j}(delta_j, delta_j) / dt_j`.
//!
//! The interior curves of a path are the unknowns. The energy gradient is
//! computed by reverse-mode differentiation of each time step (in parallel,
//! reduced in a fixed order), and the descent direction is preconditioned by
//! the flat model of the Hessian, `2M L_t (x) P`, where `L_t` is the discrete
//! Dirichlet Laplacian in time and `P` the scalar Sobolev operator of a
//! uniformly parametrized reference curve. Updates move every node along its
//! exponential map.

use nalgebra::{Cholesky, DMatrix, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ad::{gradient, with_tape, Var};
use crate::curve::{cov_iter_g, DiscreteCurve};
use crate::error::{Error, Result};
use crate::manifold::{ManifoldKind, ManifoldSpec};
use crate::metric::{path_energy, segment_quad_g, CurvePath, MetricSpec};
use crate::real::{vecops, Real};

/// Node positions of every curve of a path.
type Nodes = Vec<Vec<Vec<f64>>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// `c(t, theta_i) = exp_{c0_i}(t log_{c0_i} c1_i)`.
    PointwiseGeodesic,
    /// Ambient linear interpolation, retracted onto the manifold.
    StraightEmbedding,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BvpOptions {
    pub time_steps: usize,
    pub max_iters: usize,
    /// Tolerance on the preconditioned gradient norm.
    pub gtol: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Step reduction factor of the backtracking line search.
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Nonlinear conjugate gradients (Polak-Ribiere+) instead of plain descent.
    pub conjugate: bool,
    pub init: InitMode,
    /// Amplitude of a smooth random perturbation of the initial interior curves.
    pub init_noise: f64,
    pub seed: u64,
}

impl Default for BvpOptions {
    fn default() -> Self {
        BvpOptions {
            time_steps: 16,
            max_iters: 500,
            gtol: 1e-7,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 40,
            conjugate: true,
            init: InitMode::PointwiseGeodesic,
            init_noise: 0.0,
            seed: 0,
        }
    }
}

impl BvpOptions {
    pub fn validate(&self) -> Result<()> {
        if self.time_steps < 2 {
            return Err(Error::InvalidArgument("need at least two time steps".into()));
        }
        if !(self.gtol > 0.0) {
            return Err(Error::InvalidArgument("gtol must be positive".into()));
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) || !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::InvalidArgument("line-search constants must lie in (0, 1)".into()));
        }
        if !(self.init_noise >= 0.0 && self.init_noise.is_finite()) {
            return Err(Error::InvalidArgument("init_noise must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct GeodesicResult {
    /// Optimized path, retimed to constant metric speed.
    pub path: CurvePath,
    /// Energy of the retimed path (equal to `length^2`).
    pub energy: f64,
    pub length: f64,
    /// `sqrt(energy)`.
    pub distance: f64,
    /// Energy on the uniform grid at the initial path.
    pub initial_energy: f64,
    /// Energy on the uniform grid after each accepted step, starting with the initial path.
    pub energy_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
}

// -------------------------------------------------------------------------
// initialization

fn check_pair(c0: &DiscreteCurve, c1: &DiscreteCurve) -> Result<()> {
    if c0.manifold() != c1.manifold() || c0.domain() != c1.domain() {
        return Err(Error::InvalidArgument("end curves must share manifold and domain".into()));
    }
    Ok(())
}

fn to_init_failure(e: Error) -> Error {
    match e {
        Error::ImmersionViolation { node, .. } | Error::AdjacencyViolation { node, .. } => {
            Error::InitFailure { node, reason: e.to_string() }
        }
        e @ Error::InitFailure { .. } => e,
        e => Error::InitFailure { node: 0, reason: e.to_string() },
    }
}

/// Interpolating path with `M` time steps between `c0` and `c1`.
pub fn init_path(c0: &DiscreteCurve, c1: &DiscreteCurve, steps: usize, mode: InitMode) -> Result<CurvePath> {
    check_pair(c0, c1)?;
    if steps < 1 {
        return Err(Error::InvalidArgument("need at least one time step".into()));
    }
    let m = c0.manifold();
    let logs: Vec<Vec<f64>> = c0
        .points()
        .iter()
        .zip(c1.points())
        .enumerate()
        .map(|(i, (p, q))| {
            m.log_g(p, q).map_err(|e| Error::InitFailure { node: i, reason: e.to_string() })
        })
        .collect::<Result<_>>()?;
    let mut curves = vec![c0.clone()];
    for j in 1..steps {
        let t = j as f64 / steps as f64;
        let pts: Vec<Vec<f64>> = match mode {
            InitMode::PointwiseGeodesic => c0
                .points()
                .iter()
                .zip(&logs)
                .map(|(p, u)| m.retract_point(&m.exp_g(p, &vecops::scale(t, u))))
                .collect(),
            InitMode::StraightEmbedding => c0
                .points()
                .iter()
                .zip(c1.points())
                .enumerate()
                .map(|(i, (p, q))| {
                    let x = vecops::lincomb(&[(1.0 - t, p), (t, q)]);
                    if m.kind == ManifoldKind::Sphere && vecops::norm2(&x) < 1e-9 {
                        return Err(Error::InitFailure { node: i, reason: "antipodal endpoints".into() });
                    }
                    Ok(m.retract_point(&x))
                })
                .collect::<Result<_>>()?,
        };
        let c = DiscreteCurve::with_options(m.clone(), *c0.domain(), pts, c0.options()).map_err(to_init_failure)?;
        curves.push(c);
    }
    curves.push(c1.clone());
    CurvePath::new(curves).map_err(to_init_failure)
}

// -------------------------------------------------------------------------
// energy and gradient

fn segment_gradient(
    spec: &MetricSpec,
    m: &ManifoldSpec,
    dom: &crate::curve::Domain,
    a: &[Vec<f64>],
    b: &[Vec<f64>],
) -> Result<(f64, Vec<f64>)> {
    with_tape(|| {
        let lift = |pts: &[Vec<f64>]| -> Vec<Vec<Var>> {
            pts.iter().map(|p| p.iter().map(|x| Var::input(*x)).collect()).collect()
        };
        let av = lift(a);
        let bv = lift(b);
        let q = segment_quad_g(spec, m, dom, &av, &bv)?;
        let inputs: Vec<Var> = av.iter().chain(&bv).flatten().copied().collect();
        Ok((q.val(), gradient(q, &inputs)))
    })
}

/// Converts a Euclidean ambient gradient into the Riemannian gradient at `p`.
fn riemannian(m: &ManifoldSpec, p: &[f64], e: &[f64]) -> Vec<f64> {
    match m.kind {
        ManifoldKind::Euclidean => e.to_vec(),
        ManifoldKind::Sphere => m.project(p, e),
        ManifoldKind::Hyperbolic => {
            let mut v = e.to_vec();
            v[0] = -v[0];
            m.project(p, &v)
        }
    }
}

/// Ambient gradient of the energy with respect to every node of every
/// interior curve, plus the energy itself.
fn ambient_gradient(spec: &MetricSpec, path: &CurvePath) -> Result<(f64, Nodes)> {
    let curves = path.curves();
    let (m, dom) = (curves[0].manifold(), curves[0].domain());
    let times = path.times();
    let parts: Vec<(f64, Vec<f64>)> = (0..path.segments())
        .into_par_iter()
        .map(|j| segment_gradient(spec, m, dom, curves[j].points(), curves[j + 1].points()))
        .collect::<Result<_>>()?;
    let n = dom.samples;
    let d = m.ambient_dim();
    let mut energy = 0.0;
    let mut grad: Nodes = vec![vec![vec![0.0; d]; n]; curves.len() - 2];
    for (j, (q, g)) in parts.iter().enumerate() {
        let w = 1.0 / (times[j + 1] - times[j]);
        energy += w * q;
        // segment j touches curves j (first half of g) and j + 1 (second half)
        for (side, k) in [(0usize, j), (1, j + 1)] {
            if k == 0 || k == curves.len() - 1 {
                continue;
            }
            let block = &g[side * n * d..(side + 1) * n * d];
            for i in 0..n {
                for c in 0..d {
                    grad[k - 1][i][c] += w * block[i * d + c];
                }
            }
        }
    }
    Ok((energy, grad))
}

/// Riemannian gradient of the discrete path energy with respect to the
/// nodes of each interior curve (endpoints fixed).
pub fn energy_gradient(spec: &MetricSpec, path: &CurvePath) -> Result<Vec<Vec<Vec<f64>>>> {
    let (_, g) = ambient_gradient(spec, path)?;
    let curves = path.curves();
    let m = curves[0].manifold();
    Ok(g.iter()
        .enumerate()
        .map(|(k, gk)| gk.iter().zip(curves[k + 1].points()).map(|(e, p)| riemannian(m, p, e)).collect())
        .collect())
}

// -------------------------------------------------------------------------
// preconditioner

struct Preconditioner {
    space: Cholesky<f64, Dyn>,
    /// Diagonal scaling `2 / dt` of the time Laplacian on a uniform grid.
    time_scale: f64,
}

impl Preconditioner {
    /// Flat model of the energy Hessian around a uniformly parametrized
    /// curve of length `l` on the given domain.
    fn new(spec: &MetricSpec, dom: &crate::curve::Domain, l: f64, steps: usize) -> Result<Self> {
        let n = dom.samples;
        let h = dom.spacing();
        let span = if dom.is_closed() { n as f64 * h } else { (n - 1) as f64 * h };
        let s = l / span;
        let a = spec.coefficients(l)?;
        let line = ManifoldSpec::euclidean(1);
        let pts = vec![vec![0.0]; n];
        let speed = vec![s; n];
        let mut p = DMatrix::<f64>::zeros(n, n);
        // columns of the discrete derivative matrices D_i, from unit impulses
        let cols: Vec<Vec<Vec<f64>>> = (0..n)
            .map(|k| {
                let e: Vec<Vec<f64>> = (0..n).map(|i| vec![if i == k { 1.0 } else { 0.0 }]).collect();
                cov_iter_g(&line, dom, &pts, &e, Some(&speed), spec.order())
                    .into_iter()
                    .map(|d| d.into_iter().map(|v| v[0]).collect())
                    .collect()
            })
            .collect();
        let w: Vec<f64> = (0..n).map(|i| s * h * dom.trap_weight(i)).collect();
        for (order, ai) in a.iter().enumerate() {
            if *ai == 0.0 {
                continue;
            }
            for k in 0..n {
                for l2 in k..n {
                    let v: f64 = (0..n).map(|i| cols[k][order][i] * w[i] * cols[l2][order][i]).sum();
                    p[(k, l2)] += ai * v;
                    if l2 != k {
                        p[(l2, k)] += ai * v;
                    }
                }
            }
        }
        let space = Cholesky::new(p)
            .ok_or_else(|| Error::SolverFailure("preconditioner is not positive definite".into()))?;
        Ok(Preconditioner { space, time_scale: 2.0 * steps as f64 })
    }

    /// Applies `(2M L_t (x) P)^{-1}` componentwise to interior-curve vectors.
    fn apply(&self, g: &Nodes) -> Nodes {
        let k = g.len();
        let n = g[0].len();
        let d = g[0][0].len();
        let mut out = g.clone();
        for gk in out.iter_mut() {
            let rhs = DMatrix::from_fn(n, d, |i, c| gk[i][c]);
            let x = self.space.solve(&rhs);
            for i in 0..n {
                for c in 0..d {
                    gk[i][c] = x[(i, c)] / self.time_scale;
                }
            }
        }
        // tridiag(-1, 2, -1) over the interior curves, by the Thomas algorithm
        let mut cp = vec![0.0; k];
        let mut denom = vec![0.0; k];
        for j in 0..k {
            denom[j] = if j == 0 { 2.0 } else { 2.0 + cp[j - 1] };
            cp[j] = -1.0 / denom[j];
        }
        for i in 0..n {
            for c in 0..d {
                let mut y = vec![0.0; k];
                for j in 0..k {
                    let prev = if j == 0 { 0.0 } else { y[j - 1] };
                    y[j] = (out[j][i][c] + prev) / denom[j];
                }
                for j in (0..k).rev() {
                    let next = if j + 1 < k { out[j + 1][i][c] } else { 0.0 };
                    out[j][i][c] = y[j] - cp[j] * next;
                }
            }
        }
        out
    }
}

// -------------------------------------------------------------------------
// optimizer

fn dot_nodes(a: &Nodes, b: &Nodes) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(u, v)| vecops::dot(u, v)).sum()
}

fn project_nodes(m: &ManifoldSpec, pts: &[DiscreteCurve], v: &Nodes) -> Nodes {
    v.iter()
        .enumerate()
        .map(|(k, vk)| vk.iter().zip(pts[k + 1].points()).map(|(x, p)| m.project(p, x)).collect())
        .collect()
}

fn step_path(path: &CurvePath, dir: &Nodes, alpha: f64) -> Result<CurvePath> {
    let curves = path.curves();
    let m = curves[0].manifold();
    let mut out = Vec::with_capacity(curves.len());
    out.push(curves[0].clone());
    for (k, dk) in dir.iter().enumerate() {
        let c = &curves[k + 1];
        let pts = c
            .points()
            .iter()
            .zip(dk)
            .map(|(p, v)| m.retract_point(&m.exp_g(p, &vecops::scale(alpha, v))))
            .collect();
        out.push(DiscreteCurve::with_options(m.clone(), *c.domain(), pts, c.options())?);
    }
    out.push(curves.last().unwrap().clone());
    CurvePath::with_times(out, path.times().to_vec())
}

fn perturb(path: CurvePath, amplitude: f64, seed: u64) -> Result<CurvePath> {
    if amplitude == 0.0 {
        return Ok(path);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let curves = path.curves();
    let m = curves[0].manifold().clone();
    let d = m.ambient_dim();
    let steps = curves.len() - 1;
    let dir: Nodes = (1..steps)
        .map(|j| {
            let t = j as f64 / steps as f64;
            let modes: Vec<[f64; 2]> = (0..3 * d).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
            let c = &curves[j];
            (0..c.len())
                .map(|i| {
                    let th = c.domain().theta(i);
                    let v: Vec<f64> = (0..d)
                        .map(|comp| {
                            (0..3)
                                .map(|k| {
                                    let [x, y] = modes[comp * 3 + k];
                                    x * (k as f64 * th).cos() + y * (k as f64 * th).sin()
                                })
                                .sum::<f64>()
                        })
                        .collect();
                    m.project(&c.points()[i], &vecops::scale(amplitude * (std::f64::consts::PI * t).sin(), &v))
                })
                .collect()
        })
        .collect();
    step_path(&path, &dir, 1.0)
}

/// Minimizes the path energy between `c0` and `c1`.
pub fn minimize(spec: &MetricSpec, c0: &DiscreteCurve, c1: &DiscreteCurve, opts: &BvpOptions) -> Result<GeodesicResult> {
    opts.validate()?;
    let path = init_path(c0, c1, opts.time_steps, opts.init)?;
    let path = perturb(path, opts.init_noise, opts.seed).map_err(to_init_failure)?;
    minimize_from(spec, path, opts)
}

/// Minimizes the path energy starting from a caller-supplied feasible path;
/// the end curves stay fixed and the time grid is reset to uniform.
pub fn minimize_from(spec: &MetricSpec, path: CurvePath, opts: &BvpOptions) -> Result<GeodesicResult> {
    opts.validate()?;
    let mut path = CurvePath::new(path.into_curves())?;
    let curves = path.curves();
    let m = curves[0].manifold().clone();
    let dom = *curves[0].domain();
    let steps = path.segments();
    if steps < 2 {
        return Err(Error::InvalidArgument("need at least two time steps".into()));
    }
    let l_ref = 0.5 * (curves[0].length() + curves[steps].length());
    let pre = Preconditioner::new(spec, &dom, l_ref, steps)?;

    let (mut energy, mut egrad) = ambient_gradient(spec, &path)?;
    let initial_energy = energy;
    let mut history = vec![energy];
    let mut iterations = 0;
    let mut converged = false;
    let mut prev: Option<(Nodes, Nodes, f64)> = None; // (direction, preconditioned gradient, <g, Kg>)
    let mut grad_norm;
    loop {
        let rgrad: Nodes = egrad
            .iter()
            .enumerate()
            .map(|(k, gk)| gk.iter().zip(path.curves()[k + 1].points()).map(|(e, p)| riemannian(&m, p, e)).collect())
            .collect();
        let kg = project_nodes(&m, path.curves(), &pre.apply(&rgrad));
        let gkg = dot_nodes(&egrad, &kg);
        grad_norm = gkg.max(0.0).sqrt();
        if grad_norm <= opts.gtol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iters {
            break;
        }
        let mut dir: Nodes = kg.iter().map(|v| v.iter().map(|x| vecops::scale(-1.0, x)).collect()).collect();
        if let (true, Some((pdir, pkg, pgkg))) = (opts.conjugate, &prev) {
            let pkg = project_nodes(&m, path.curves(), pkg);
            let beta = ((gkg - dot_nodes(&egrad, &pkg)) / pgkg).max(0.0);
            let pdir = project_nodes(&m, path.curves(), pdir);
            let cand: Nodes = dir
                .iter()
                .zip(&pdir)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| vecops::axpy(beta, y, x)).collect())
                .collect();
            if dot_nodes(&egrad, &cand) < 0.0 {
                dir = cand;
            }
        }
        let mut slope = dot_nodes(&egrad, &dir);
        if !(slope < 0.0) {
            dir = kg.iter().map(|v| v.iter().map(|x| vecops::scale(-1.0, x)).collect()).collect();
            slope = -gkg;
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            if let Ok(trial) = step_path(&path, &dir, alpha) {
                if let Ok(pe) = path_energy(spec, &trial) {
                    if pe.energy <= energy + opts.armijo * alpha * slope && pe.energy < energy {
                        accepted = Some(trial);
                        break;
                    }
                }
            }
            alpha *= opts.backtrack;
        }
        let Some(next) = accepted else {
            if prev.is_some() {
                // retry once from steepest descent
                prev = None;
                continue;
            }
            break;
        };
        iterations += 1;
        prev = Some((dir, kg, gkg));
        path = next;
        let (e, g) = ambient_gradient(spec, &path)?;
        energy = e;
        egrad = g;
        history.push(energy);
    }

    let retimed = path.constant_speed(spec)?;
    let pe = path_energy(spec, &retimed)?;
    let length = pe.length;
    let energy = pe.energy.max(length * length);
    Ok(GeodesicResult {
        path: retimed,
        energy,
        length,
        distance: energy.sqrt(),
        initial_energy,
        energy_history: history,
        iterations,
        converged,
        grad_norm,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceReport {
    pub distance: f64,
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
    /// Informational radius `C l^{3/2} / (1 + l^{3/2})` of `c0` for a
    /// caller-supplied constant `C`.
    pub r0_hat: Option<f64>,
}

/// Geodesic distance estimate `sqrt(E*)`.
pub fn distance(
    spec: &MetricSpec,
    c0: &DiscreteCurve,
    c1: &DiscreteCurve,
    opts: &BvpOptions,
    c_hat: Option<f64>,
) -> Result<DistanceReport> {
    let r = minimize(spec, c0, c1, opts)?;
    let l = c0.length().powf(1.5);
    Ok(DistanceReport {
        distance: r.distance,
        energy: r.energy,
        iterations: r.iterations,
        converged: r.converged,
        grad_norm: r.grad_norm,
        r0_hat: c_hat.map(|c| c * l / (1.0 + l)),
    })
}
