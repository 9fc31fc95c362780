use elastica::bvp::{energy_gradient, init_path, minimize, BvpOptions, InitMode};
use elastica::metric::path_energy;
use elastica::{CurvePath, DiscreteCurve, Domain, ManifoldSpec, MetricSpec, Point, Tangent};

fn wavy_parallel(phi: f64, shift: f64, n: usize) -> DiscreteCurve {
    DiscreteCurve::from_fn(ManifoldSpec::sphere(2, 1.0), Domain::closed(n).unwrap(), move |t| {
        let (s, c) = (phi + 0.1 * (t + shift).sin()).sin_cos();
        vec![s * t.cos(), s * t.sin(), c]
    })
    .unwrap()
}

fn segment(n: usize, y: f64) -> DiscreteCurve {
    DiscreteCurve::from_fn(ManifoldSpec::euclidean(2), Domain::open(n).unwrap(), move |t| vec![t, y]).unwrap()
}

#[test]
fn sphere_geodesic_keeps_endpoints_and_retimes() {
    let spec = MetricSpec::constant(&[1.0, 1.0]).unwrap();
    let (a, b) = (wavy_parallel(0.5, 0.0, 48), wavy_parallel(0.65, 1.0, 48));
    let r = minimize(&spec, &a, &b, &BvpOptions { time_steps: 6, ..BvpOptions::default() }).unwrap();
    assert!(r.converged, "grad {}", r.grad_norm);
    assert_eq!(r.path.curves()[0].points(), a.points());
    assert_eq!(r.path.curves()[6].points(), b.points());
    let e = path_energy(&spec, &r.path).unwrap();
    assert!((e.length * e.length - e.energy).abs() < 1e-8, "{} {}", e.length, e.energy);
    assert!(r.distance < r.initial_energy.sqrt());
    assert!(r.energy_history.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn distance_is_symmetric_within_one_percent() {
    let spec = MetricSpec::scale_invariant(&[1.0, 1.0, 0.5]).unwrap();
    let (a, b) = (wavy_parallel(0.5, 0.0, 32), wavy_parallel(0.7, 2.0, 32));
    let opts = BvpOptions { time_steps: 6, ..BvpOptions::default() };
    let ab = minimize(&spec, &a, &b, &opts).unwrap().distance;
    let ba = minimize(&spec, &b, &a, &opts).unwrap().distance;
    assert!((ab - ba).abs() < 0.01 * ab, "{ab} {ba}");
}

#[test]
fn refining_time_changes_segment_energy_little() {
    let spec = MetricSpec::constant(&[1.0, 0.0, 1.0]).unwrap();
    let energy = |m| minimize(&spec, &segment(128, 0.0), &segment(128, 1.0), &BvpOptions { time_steps: m, ..BvpOptions::default() }).unwrap().energy;
    let (e8, e16) = (energy(8), energy(16));
    assert!((e8 - e16).abs() < 0.01 * e16, "{e8} {e16}");
    assert!(e16 <= 2.0 * std::f64::consts::PI);
}

fn minkowski(a: &[f64], b: &[f64]) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn hyperbolic_circle(r: f64, x: f64, n: usize) -> DiscreteCurve {
    DiscreteCurve::from_fn(ManifoldSpec::hyperbolic(2), Domain::closed(n).unwrap(), move |t| {
        let (u, v) = (x + r * t.cos(), r * t.sin());
        vec![(1.0 + u * u + v * v).sqrt(), u, v]
    })
    .unwrap()
}

#[test]
fn hyperbolic_gradient_matches_finite_differences() {
    let spec = MetricSpec::constant(&[1.0, 0.5, 0.3]).unwrap();
    let m = ManifoldSpec::hyperbolic(2);
    let path = init_path(&hyperbolic_circle(0.5, 0.0, 24), &hyperbolic_circle(0.7, 0.3, 24), 3, InitMode::PointwiseGeodesic).unwrap();
    let g = energy_gradient(&spec, &path).unwrap();
    // a fixed tangent direction at every interior node
    let dir: Vec<Vec<Vec<f64>>> = path.curves()[1..3]
        .iter()
        .map(|c| {
            c.points()
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let v = [0.3 * (i as f64).sin(), (0.7 * i as f64).cos(), 0.2];
                    let s = minkowski(&v, p);
                    v.iter().zip(p).map(|(x, q)| x + s * q).collect()
                })
                .collect()
        })
        .collect();
    let analytic: f64 = g.iter().flatten().zip(dir.iter().flatten()).map(|(u, v)| minkowski(u, v)).sum();
    let moved = |eps: f64| {
        let mut curves = path.curves().to_vec();
        for (j, d) in dir.iter().enumerate() {
            let pts = curves[j + 1]
                .points()
                .iter()
                .zip(d)
                .map(|(p, v)| {
                    let base = Point(p.clone());
                    m.exp(&base, &Tangent { base: base.clone(), vec: v.iter().map(|x| eps * x).collect() }).unwrap().0
                })
                .collect();
            curves[j + 1] = DiscreteCurve::new(m.clone(), *curves[j + 1].domain(), pts).unwrap();
        }
        path_energy(&spec, &CurvePath::with_times(curves, path.times().to_vec()).unwrap()).unwrap().energy
    };
    let fd = (moved(1e-6) - moved(-1e-6)) / 2e-6;
    assert!((analytic - fd).abs() < 1e-5 * analytic.abs(), "{analytic} {fd}");
}

#[test]
fn straight_embedding_init_reaches_the_same_energy() {
    let spec = MetricSpec::constant(&[1.0, 1.0]).unwrap();
    let (a, b) = (segment(48, 0.0), segment(48, 0.5));
    let opts = |init| BvpOptions { time_steps: 6, init, ..BvpOptions::default() };
    let x = minimize(&spec, &a, &b, &opts(InitMode::PointwiseGeodesic)).unwrap();
    let y = minimize(&spec, &a, &b, &opts(InitMode::StraightEmbedding)).unwrap();
    assert!((x.energy - y.energy).abs() < 1e-6 * x.energy);
}
