//! Sobolev-type metrics on curves and the energy of paths of curves.
//!
//! `G_c(h, k) = sum_i a_i(l_c) int g(nabla_s^i h, nabla_s^i k) ds` with
//! length-dependent coefficients, and the parametrization-dependent
//! reference metric `H_c(h, k) = int g(h, k) + g(nabla_theta^n h, nabla_theta^n k) dtheta`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::curve::{cov_iter_g, geom_g, DerivVariable, DiscreteCurve, Domain, VectorField};
use crate::error::{Error, Result};
use crate::manifold::ManifoldSpec;
use crate::real::{vecops, Real};

pub type CoeffFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Family {
    /// `a_i = C_i`.
    Constant(Vec<f64>),
    /// `a_i(l) = C_i l^(2i - 3)`, which makes rescaling of a Euclidean target an isometry.
    ScaleInvariant(Vec<f64>),
    Custom(Vec<CoeffFn>),
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            Family::ScaleInvariant(c) => f.debug_tuple("ScaleInvariant").field(c).finish(),
            Family::Custom(c) => write!(f, "Custom({} functions)", c.len()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MetricSpec {
    order: usize,
    family: Family,
}

impl MetricSpec {
    pub fn new(order: usize, family: Family) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("metric order must be >= 1".into()));
        }
        let len = match &family {
            Family::Constant(c) | Family::ScaleInvariant(c) => {
                if c.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(Error::InvalidArgument("metric coefficients must be finite and >= 0".into()));
                }
                if c.len() == order + 1 && !(c[0] > 0.0 && c[order] > 0.0) {
                    return Err(Error::InvalidArgument("C_0 and C_n must be strictly positive".into()));
                }
                c.len()
            }
            Family::Custom(f) => f.len(),
        };
        if len != order + 1 {
            return Err(Error::InvalidArgument(format!(
                "order {order} needs {} coefficients, got {len}",
                order + 1
            )));
        }
        Ok(MetricSpec { order, family })
    }

    pub fn constant(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.len().saturating_sub(1), Family::Constant(coeffs.to_vec()))
    }

    pub fn scale_invariant(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.len().saturating_sub(1), Family::ScaleInvariant(coeffs.to_vec()))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.family, Family::Constant(_))
    }

    /// `[a_0(l), ..., a_n(l)]`.
    pub fn coefficients(&self, l: f64) -> Result<Vec<f64>> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidArgument(format!("curve length must be positive, got {l}")));
        }
        let a: Vec<f64> = match &self.family {
            Family::Constant(c) => c.clone(),
            Family::ScaleInvariant(c) => {
                c.iter().enumerate().map(|(i, ci)| ci * l.powi(2 * i as i32 - 3)).collect()
            }
            Family::Custom(f) => f.iter().map(|fi| fi(l)).collect(),
        };
        if a.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || !(a[0] > 0.0 && a[self.order] > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "coefficients at length {l} violate a_i >= 0, a_0 > 0, a_n > 0: {a:?}"
            )));
        }
        Ok(a)
    }

    /// `[a_0'(l), ..., a_n'(l)]`; custom coefficients are differentiated numerically.
    pub fn coefficient_derivatives(&self, l: f64) -> Result<Vec<f64>> {
        self.coefficients(l)?;
        Ok(match &self.family {
            Family::Constant(c) => vec![0.0; c.len()],
            Family::ScaleInvariant(c) => c
                .iter()
                .enumerate()
                .map(|(i, ci)| {
                    let p = 2 * i as i32 - 3;
                    ci * p as f64 * l.powi(p - 1)
                })
                .collect(),
            Family::Custom(f) => {
                let h = 1e-5 * l;
                f.iter().map(|fi| (fi(l + h) - fi(l - h)) / (2.0 * h)).collect()
            }
        })
    }

    pub(crate) fn coefficients_g<T: Real>(&self, l: T) -> Result<Vec<T>> {
        let a = self.coefficients(l.val())?;
        Ok(match &self.family {
            Family::Constant(_) => a.into_iter().map(T::cst).collect(),
            _ => {
                let d = self.coefficient_derivatives(l.val())?;
                a.iter().zip(&d).map(|(ai, di)| l.lift(*ai, *di)).collect()
            }
        })
    }

    /// True when the family makes term `i` vanish identically.
    fn term_vanishes(&self, i: usize) -> bool {
        match &self.family {
            Family::Constant(c) | Family::ScaleInvariant(c) => c[i] == 0.0,
            Family::Custom(_) => false,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricJson {
    order: usize,
    family: String,
    coeffs: Vec<f64>,
}

impl Serialize for MetricSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (family, coeffs) = match &self.family {
            Family::Constant(c) => ("constant", c.clone()),
            Family::ScaleInvariant(c) => ("scale_invariant", c.clone()),
            Family::Custom(_) => {
                return Err(serde::ser::Error::custom("custom coefficient functions cannot be serialized"))
            }
        };
        MetricJson { order: self.order, family: family.into(), coeffs }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MetricSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MetricJson::deserialize(d)?;
        let family = match j.family.as_str() {
            "constant" => Family::Constant(j.coeffs),
            "scale_invariant" => Family::ScaleInvariant(j.coeffs),
            other => {
                return Err(serde::de::Error::custom(format!(
                    "unknown metric family `{other}` (expected `constant` or `scale_invariant`)"
                )))
            }
        };
        MetricSpec::new(j.order, family).map_err(serde::de::Error::custom)
    }
}

// -------------------------------------------------------------------------
// inner products on a single curve

/// `G_c(h, h)` for a field given as raw ambient vectors, generic over the scalar.
pub(crate) fn quad_g<T: Real>(
    spec: &MetricSpec,
    m: &ManifoldSpec,
    dom: &Domain,
    pts: &[Vec<T>],
    h: &[Vec<T>],
) -> Result<T> {
    let geom = geom_g(m, dom, pts)?;
    let a = spec.coefficients_g(geom.length)?;
    let derivs = cov_iter_g(m, dom, pts, h, Some(&geom.speed), spec.order);
    let mut total = T::zero();
    for (i, d) in derivs.iter().enumerate() {
        if spec.term_vanishes(i) {
            continue;
        }
        let mut s = T::zero();
        for (v, w) in d.iter().zip(&geom.weight) {
            s += m.g(v, v) * *w;
        }
        total += a[i] * s;
    }
    Ok(total)
}

fn check_order(spec: &MetricSpec, c: &DiscreteCurve) -> Result<()> {
    if spec.order > c.options().max_order {
        return Err(Error::InvalidArgument(format!(
            "metric order {} exceeds the configured maximum derivative order {}",
            spec.order,
            c.options().max_order
        )));
    }
    Ok(())
}

/// Per-order contributions `a_i int g(nabla_s^i h, nabla_s^i k) ds`.
pub fn inner_g_terms(spec: &MetricSpec, c: &DiscreteCurve, h: &VectorField, k: &VectorField) -> Result<Vec<f64>> {
    check_order(spec, c)?;
    let a = spec.coefficients(c.length())?;
    let dh = c.cov_derivs(h, DerivVariable::Arclength, spec.order)?;
    let dk = c.cov_derivs(k, DerivVariable::Arclength, spec.order)?;
    let m = c.manifold();
    Ok((0..=spec.order)
        .map(|i| {
            if spec.term_vanishes(i) {
                return 0.0;
            }
            let s: f64 = dh[i]
                .vectors()
                .iter()
                .zip(dk[i].vectors())
                .zip(c.weights())
                .map(|((u, v), w)| m.g(u, v) * w)
                .sum();
            a[i] * s
        })
        .collect())
}

pub fn inner_g(spec: &MetricSpec, c: &DiscreteCurve, h: &VectorField, k: &VectorField) -> Result<f64> {
    Ok(inner_g_terms(spec, c, h, k)?.iter().sum())
}

pub fn norm_g(spec: &MetricSpec, c: &DiscreteCurve, h: &VectorField) -> Result<f64> {
    Ok(inner_g(spec, c, h, h)?.max(0.0).sqrt())
}

/// `int g(h, k) + g(nabla_theta^n h, nabla_theta^n k) dtheta`.
pub fn inner_h(c: &DiscreteCurve, h: &VectorField, k: &VectorField, order: usize) -> Result<f64> {
    let dh = c.cov_derivs(h, DerivVariable::Theta, order)?;
    let dk = c.cov_derivs(k, DerivVariable::Theta, order)?;
    let m = c.manifold();
    let dom = c.domain();
    let dt = dom.spacing();
    let mut s = 0.0;
    for i in 0..c.len() {
        let w = dt * dom.trap_weight(i);
        s += w * m.g(&h.vectors()[i], &k.vectors()[i]);
        s += w * m.g(&dh[order].vectors()[i], &dk[order].vectors()[i]);
    }
    Ok(s)
}

pub fn norm_h(c: &DiscreteCurve, h: &VectorField, order: usize) -> Result<f64> {
    Ok(inner_h(c, h, h, order)?.max(0.0).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldNorm {
    L2Ds,
    L2Dtheta,
    Linf,
}

pub fn field_norm(c: &DiscreteCurve, h: &VectorField, which: FieldNorm) -> Result<f64> {
    c.check_field(h)?;
    let m = c.manifold();
    let sq = h.vectors().iter().map(|v| m.g(v, v).max(0.0));
    Ok(match which {
        FieldNorm::L2Ds => sq.zip(c.weights()).map(|(a, w)| a * w).sum::<f64>().sqrt(),
        FieldNorm::L2Dtheta => {
            let dom = c.domain();
            sq.enumerate().map(|(i, a)| a * dom.spacing() * dom.trap_weight(i)).sum::<f64>().sqrt()
        }
        FieldNorm::Linf => sq.fold(0.0, f64::max).sqrt(),
    })
}

// -------------------------------------------------------------------------
// paths of curves

/// A discrete path `t_j -> c_j` of curves sharing manifold and domain.
#[derive(Clone, Debug)]
pub struct CurvePath {
    curves: Vec<DiscreteCurve>,
    times: Vec<f64>,
}

impl CurvePath {
    /// Path on the uniform time grid `t_j = j / M`.
    pub fn new(curves: Vec<DiscreteCurve>) -> Result<Self> {
        let m = curves.len().saturating_sub(1).max(1);
        let times = (0..curves.len()).map(|j| j as f64 / m as f64).collect();
        Self::with_times(curves, times)
    }

    pub fn with_times(curves: Vec<DiscreteCurve>, times: Vec<f64>) -> Result<Self> {
        if curves.len() < 2 {
            return Err(Error::InvalidArgument("a path needs at least two curves".into()));
        }
        if times.len() != curves.len() {
            return Err(Error::InvalidArgument("time grid and curve list differ in length".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("path times must be strictly increasing".into()));
        }
        let first = &curves[0];
        for (j, c) in curves.iter().enumerate() {
            if c.manifold() != first.manifold() || c.domain() != first.domain() {
                return Err(Error::InvalidArgument(format!(
                    "curve {j} differs from curve 0 in manifold or domain"
                )));
            }
        }
        let limit = 0.5 * first.manifold().injectivity_radius();
        if limit.is_finite() {
            for j in 0..curves.len() - 1 {
                for (i, (p, q)) in curves[j].points().iter().zip(curves[j + 1].points()).enumerate() {
                    let d = first.manifold().dist_f(p, q);
                    if d >= limit {
                        return Err(Error::AdjacencyViolation { node: i, next: i, dist: d, limit });
                    }
                }
            }
        }
        Ok(CurvePath { curves, times })
    }

    pub fn curves(&self) -> &[DiscreteCurve] {
        &self.curves
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn segments(&self) -> usize {
        self.curves.len() - 1
    }

    pub fn into_curves(self) -> Vec<DiscreteCurve> {
        self.curves
    }

    /// The same curves on a time grid with constant metric speed, which
    /// makes `E = L^2`. A stationary path is returned unchanged.
    pub fn constant_speed(&self, spec: &MetricSpec) -> Result<CurvePath> {
        let q = segment_quads(spec, self)?;
        let lens: Vec<f64> = q.iter().map(|x| x.max(0.0).sqrt()).collect();
        let total: f64 = lens.iter().sum();
        if total == 0.0 || lens.contains(&0.0) {
            return Ok(self.clone());
        }
        let (t0, t1) = (self.times[0], *self.times.last().unwrap());
        let mut times = vec![t0];
        let mut acc = 0.0;
        for l in &lens[..lens.len() - 1] {
            acc += l;
            times.push(t0 + (t1 - t0) * acc / total);
        }
        times.push(t1);
        CurvePath::with_times(self.curves.clone(), times)
    }
}

/// `G_m(delta, delta)` for one time step, where `m` is the geodesic midpoint
/// curve and `delta = log_m(b) - log_m(a)` the symmetric time difference.
pub(crate) fn segment_quad_g<T: Real>(
    spec: &MetricSpec,
    m: &ManifoldSpec,
    dom: &Domain,
    a: &[Vec<T>],
    b: &[Vec<T>],
) -> Result<T> {
    let mut mid = Vec::with_capacity(a.len());
    let mut delta = Vec::with_capacity(a.len());
    for (p, q) in a.iter().zip(b) {
        let u = m.log_g(p, q)?;
        let c = m.exp_g(p, &vecops::scale(T::cst(0.5), &u));
        let d = vecops::sub(&m.log_g(&c, q)?, &m.log_g(&c, p)?);
        delta.push(m.project(&c, &d));
        mid.push(c);
    }
    quad_g(spec, m, dom, &mid, &delta)
}

pub(crate) fn segment_quads(spec: &MetricSpec, path: &CurvePath) -> Result<Vec<f64>> {
    let first = &path.curves[0];
    check_order(spec, first)?;
    let (m, dom) = (first.manifold(), first.domain());
    let eps = first.options().eps_imm;
    (0..path.segments())
        .map(|j| {
            let (a, b) = (path.curves[j].points(), path.curves[j + 1].points());
            check_midpoint(m, dom, a, b, eps)?;
            segment_quad_g(spec, m, dom, a, b)
        })
        .collect()
}

fn check_midpoint(m: &ManifoldSpec, dom: &Domain, a: &[Vec<f64>], b: &[Vec<f64>], eps: f64) -> Result<()> {
    let mid: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(p, q)| Ok(m.exp_g(p, &vecops::scale(0.5, &m.log_g(p, q)?))))
        .collect::<Result<_>>()?;
    let geom = geom_g(m, dom, &mid)?;
    for (i, s) in geom.speed.iter().enumerate() {
        if !(*s > eps) {
            return Err(Error::ImmersionViolation { node: i, speed: *s, threshold: eps });
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathEnergy {
    pub energy: f64,
    pub length: f64,
    /// `sqrt(G(c_t, c_t))` on each time step.
    pub segment_speeds: Vec<f64>,
}

/// `E = sum_j dt_j G(c_t, c_t)` and `L = sum_j dt_j sqrt(G(c_t, c_t))`, with
/// the velocity of step `j` evaluated on its geodesic midpoint curve.
pub fn path_energy(spec: &MetricSpec, path: &CurvePath) -> Result<PathEnergy> {
    let q = segment_quads(spec, path)?;
    let mut energy = 0.0;
    let mut length = 0.0;
    let mut segment_speeds = Vec::with_capacity(q.len());
    for (j, qj) in q.iter().enumerate() {
        let dt = path.times[j + 1] - path.times[j];
        let qj = qj.max(0.0);
        energy += qj / dt;
        length += qj.sqrt();
        segment_speeds.push(qj.sqrt() / dt);
    }
    Ok(PathEnergy { energy, length, segment_speeds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::Domain;
    use std::f64::consts::PI;

    fn circle(n: usize, r: f64) -> DiscreteCurve {
        DiscreteCurve::from_fn(ManifoldSpec::euclidean(2), Domain::closed(n).unwrap(), |t| {
            vec![r * t.cos(), r * t.sin()]
        })
        .unwrap()
    }

    #[test]
    fn coefficient_examples() {
        let c = MetricSpec::constant(&[1.0, 0.0, 1.0]).unwrap();
        assert_eq!(c.coefficients(17.0).unwrap(), vec![1.0, 0.0, 1.0]);
        let s = MetricSpec::scale_invariant(&[1.0, 0.0, 1.0]).unwrap();
        assert_eq!(s.coefficients(2.0).unwrap(), vec![0.125, 0.0, 2.0]);
        let custom = MetricSpec::new(
            1,
            Family::Custom(vec![Arc::new(|_| 1.0), Arc::new(|l: f64| 1.0 / l)]),
        )
        .unwrap();
        assert_eq!(custom.coefficients(4.0).unwrap()[1], 0.25);
        assert!(c.coefficients(0.0).is_err());
        assert!(MetricSpec::constant(&[0.0, 1.0]).is_err());
        assert!(MetricSpec::constant(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn coefficient_derivatives_match_differences() {
        let s = MetricSpec::scale_invariant(&[1.0, 0.5, 2.0]).unwrap();
        let l = 1.7;
        let d = s.coefficient_derivatives(l).unwrap();
        let (p, q) = (s.coefficients(l + 1e-6).unwrap(), s.coefficients(l - 1e-6).unwrap());
        for i in 0..3 {
            assert!((d[i] - (p[i] - q[i]) / 2e-6).abs() < 1e-6 * (1.0 + d[i].abs()));
        }
    }

    #[test]
    fn metric_json_round_trip() {
        let j = r#"{"order":2,"family":"scale_invariant","coeffs":[1.0,0.0,1.0]}"#;
        let m: MetricSpec = serde_json::from_str(j).unwrap();
        assert_eq!(m.order(), 2);
        assert_eq!(serde_json::to_string(&m).unwrap(), j);
        assert!(serde_json::from_str::<MetricSpec>(r#"{"order":2,"family":"constant","coeffs":[1.0,1.0]}"#).is_err());
        assert!(serde_json::from_str::<MetricSpec>(r#"{"order":1,"family":"weird","coeffs":[1.0,1.0]}"#).is_err());
    }

    #[test]
    fn g_on_unit_circle() {
        let spec = MetricSpec::constant(&[1.0, 0.0, 1.0]).unwrap();
        let c = circle(256, 1.0);
        let h = c.field_from_fn(|_, _, _| vec![1.0, 0.0]);
        assert!((inner_g(&spec, &c, &h, &h).unwrap() - 2.0 * PI).abs() < 1e-4);
        let c = circle(512, 1.0);
        let h = c.field_from_fn(|_, t, _| vec![t.cos(), t.sin()]);
        assert!((inner_g(&spec, &c, &h, &h).unwrap() - 4.0 * PI).abs() < 1e-3);
    }

    #[test]
    fn h_metric_examples() {
        let seg = DiscreteCurve::from_fn(ManifoldSpec::euclidean(2), Domain::open(64).unwrap(), |t| vec![t, 0.0]).unwrap();
        let h = seg.field_from_fn(|_, _, _| vec![0.6, -0.8]);
        assert!((inner_h(&seg, &h, &h, 2).unwrap() - 2.0 * PI).abs() < 1e-6);
        let c = circle(512, 1.0);
        let h = c.field_from_fn(|_, t, _| vec![t.cos(), t.sin()]);
        assert!((inner_h(&c, &h, &h, 2).unwrap() - 4.0 * PI).abs() < 1e-3);
        let k = c.field_from_fn(|_, t, _| vec![(2.0 * t).sin(), 1.0]);
        assert_eq!(inner_h(&c, &h.scaled(2.0), &k, 2).unwrap(), 2.0 * inner_h(&c, &h, &k, 2).unwrap());
    }

    #[test]
    fn field_norm_examples() {
        let c = circle(256, 1.0);
        let h = c.field_from_fn(|_, _, _| vec![1.0, 0.0]);
        assert!((field_norm(&c, &h, FieldNorm::L2Ds).unwrap() - (2.0 * PI).sqrt()).abs() < 1e-6);
        let c2 = circle(256, 2.0);
        let h2 = c2.field_from_fn(|_, _, _| vec![1.0, 0.0]);
        assert!((field_norm(&c2, &h2, FieldNorm::L2Ds).unwrap() - (4.0 * PI).sqrt()).abs() < 1e-6);
        assert!((field_norm(&c2, &h2, FieldNorm::L2Dtheta).unwrap() - (2.0 * PI).sqrt()).abs() < 1e-12);
        let c = circle(256, 1.0);
        let s = c.field_from_fn(|_, t, _| vec![t.sin(), 0.0]);
        assert!((field_norm(&c, &s, FieldNorm::Linf).unwrap() - 1.0).abs() < 1e-6);
        assert_eq!(field_norm(&c, &c.zero_field(), FieldNorm::Linf).unwrap(), 0.0);
    }

    #[test]
    fn scale_invariance() {
        let spec = MetricSpec::scale_invariant(&[1.0, 0.3, 1.0]).unwrap();
        let m = ManifoldSpec::euclidean(3);
        let base = |a: f64| {
            DiscreteCurve::from_fn(m.clone(), Domain::closed(128).unwrap(), move |t| {
                vec![a * (t.cos() + 0.2 * (3.0 * t).cos()), a * t.sin(), a * 0.3 * (2.0 * t).sin()]
            })
            .unwrap()
        };
        let field = |c: &DiscreteCurve, a: f64| c.field_from_fn(move |_, t, _| vec![a * t.sin(), a * (2.0 * t).cos(), a]);
        let c1 = base(1.0);
        let g1 = inner_g(&spec, &c1, &field(&c1, 1.0), &field(&c1, 1.0)).unwrap();
        for a in [0.5, 2.0] {
            let ca = base(a);
            let ga = inner_g(&spec, &ca, &field(&ca, a), &field(&ca, a)).unwrap();
            assert!(((ga - g1) / g1).abs() < 1e-6);
        }
    }

    #[test]
    fn g_terms_sum_to_inner_and_quad_matches() {
        let spec = MetricSpec::scale_invariant(&[1.0, 0.5, 0.7]).unwrap();
        let m = ManifoldSpec::sphere(2, 1.0);
        let c = DiscreteCurve::from_fn(m.clone(), Domain::open(64).unwrap(), |t| {
            let a = 0.3 * t;
            vec![a.cos() * 0.8, a.sin() * 0.8, 0.6]
        })
        .unwrap();
        let h = c.field_from_fn(|_, t, _| vec![t.sin(), 1.0, 0.3]);
        let g = inner_g(&spec, &c, &h, &h).unwrap();
        let q = quad_g(&spec, c.manifold(), c.domain(), c.points(), h.vectors()).unwrap();
        assert!((g - q).abs() < 1e-12 * g);
    }

    #[test]
    fn path_energy_examples() {
        let spec = MetricSpec::constant(&[1.0, 0.0, 1.0]).unwrap();
        let m = ManifoldSpec::euclidean(2);
        let dom = Domain::open(128).unwrap();
        let seg = |y: f64| DiscreteCurve::from_fn(m.clone(), dom, move |t| vec![t, y]).unwrap();
        let stationary = CurvePath::new(vec![seg(0.0); 4]).unwrap();
        let e = path_energy(&spec, &stationary).unwrap();
        assert_eq!((e.energy, e.length), (0.0, 0.0));
        let path = CurvePath::new((0..=8).map(|j| seg(j as f64 / 8.0)).collect()).unwrap();
        let e = path_energy(&spec, &path).unwrap();
        assert!((e.energy - 2.0 * PI).abs() < 1e-3);
        assert!(e.length * e.length <= e.energy * (1.0 + 1e-12));
    }

    #[test]
    fn retiming_gives_equality() {
        let spec = MetricSpec::constant(&[1.0, 1.0]).unwrap();
        let m = ManifoldSpec::euclidean(2);
        let dom = Domain::open(64).unwrap();
        let curves = (0..=6)
            .map(|j| {
                let s = (j as f64 / 6.0).powi(2);
                DiscreteCurve::from_fn(m.clone(), dom, move |t| vec![t, s * t.sin()]).unwrap()
            })
            .collect();
        let path = CurvePath::new(curves).unwrap();
        let e = path_energy(&spec, &path).unwrap();
        assert!(e.length * e.length < e.energy);
        let r = path.constant_speed(&spec).unwrap();
        let er = path_energy(&spec, &r).unwrap();
        assert!((er.length - e.length).abs() < 1e-12);
        assert!((er.energy - er.length * er.length).abs() < 1e-8 * er.energy);
    }
}
