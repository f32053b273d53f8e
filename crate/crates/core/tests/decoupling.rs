use curvelab::cutoff::plateau_bump;
use curvelab::decoupling::*;
use curvelab::{Dims, Error, GridFunction, TorusGrid};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DEPTH: usize = 64;

fn wavy() -> Density {
    Density::function(|xi| Complex64::new(1.0 + xi, 0.5 * (7.0 * xi).sin()))
}

fn random_points(seed: u64, count: usize, reach: f64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (rng.random_range(-reach..reach), rng.random_range(-reach..reach)))
        .collect()
}

fn simpson(f: impl Fn(f64) -> Complex64, a: f64, b: f64, n: usize) -> Complex64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * (h / 3.0)
}

#[test]
fn extension_is_additive_over_caps() {
    let g = wavy();
    let pts = random_points(3, 100, 40.0);
    let whole = extension(&g, (0.0, 1.0), &pts, DEPTH).unwrap();
    let caps = CapDecomposition::new(0.125).unwrap();
    let mut sum = vec![Complex64::new(0.0, 0.0); pts.len()];
    for &cap in caps.caps() {
        for (s, e) in sum.iter_mut().zip(extension(&g, cap, &pts, DEPTH).unwrap()) {
            *s += e;
        }
    }
    for (a, b) in whole.iter().zip(&sum) {
        assert!((a - b).norm() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn extension_basic_values() {
    let one = Density::function(|_| Complex64::new(1.0, 0.0));
    let at_origin = extension(&one, (0.0, 1.0), &[(0.0, 0.0)], DEPTH).unwrap();
    assert!((at_origin[0] - 1.0).norm() < 1e-14);
    let zero = Density::function(|_| Complex64::new(0.0, 0.0));
    let pts = random_points(4, 20, 30.0);
    assert!(extension(&zero, (0.0, 1.0), &pts, DEPTH).unwrap().iter().all(|z| z.norm() == 0.0));
    assert!(extension(&one, (0.5, 0.5), &pts, DEPTH).is_err());

    let g = wavy();
    let mass = simpson(|xi| Complex64::new(g.at(xi).norm(), 0.0), 0.0, 0.5, 2000).re;
    for e in extension(&g, (0.0, 0.5), &pts, DEPTH).unwrap() {
        assert!(e.norm() <= mass * (1.0 + 1e-12));
    }
}

#[test]
fn extension_matches_direct_quadrature() {
    let g = wavy();
    let pts = [(3.0, -2.0), (-17.5, 9.0)];
    let got = extension(&g, (0.25, 0.75), &pts, DEPTH).unwrap();
    for (&(x1, x2), e) in pts.iter().zip(&got) {
        let direct = simpson(|xi| g.at(xi) * Complex64::from_polar(1.0, x1 * xi + x2 * xi * xi), 0.25, 0.75, 20000);
        assert!((direct - e).norm() < 1e-10, "{direct} vs {e}");
    }
}

#[test]
fn parabolic_rescaling() {
    let delta = 0.125;
    let g = Density::function(|xi| Complex64::new((3.0 * xi).cos(), xi * xi));
    let rescaled = Density::function(move |xi| Complex64::new((3.0 * delta * xi).cos(), (delta * xi).powi(2)));
    let pts = random_points(8, 20, 60.0);
    let sheared: Vec<(f64, f64)> = pts.iter().map(|&(a, b)| (delta * a, delta * delta * b)).collect();
    let small = extension(&g, (0.0, delta), &pts, DEPTH).unwrap();
    let unit = extension(&rescaled, (0.0, 1.0), &sheared, DEPTH).unwrap();
    for (a, b) in small.iter().zip(&unit) {
        assert!((a - b * delta).norm() < 1e-10, "{a} vs {}", b * delta);
    }
}

#[test]
fn weight_is_a_unit_peak() {
    let w = DecouplingWeight::new((1.0, -2.0), 0.25).unwrap();
    assert_eq!(w.value((1.0, -2.0)), 1.0);
    assert_eq!(w.decay_power, 10);
    assert_eq!(w.cutoff_radius, 4.0 * w.radius);
    let mut last = 1.0;
    for r in [1.0, 5.0, 16.0, 64.0, 1000.0] {
        let v = w.value((1.0 + r, -2.0));
        assert!(v > 0.0 && v < last);
        last = v;
    }
}

#[test]
fn ratio_is_one_for_a_single_cap() {
    let delta = 0.25;
    let single = Density::steps(0.0, 1.0, vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, -2.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
    for p in [2.0, 3.0, 4.0] {
        let r = decoupling_ratio(&CoefficientModel::Given(single.clone()), delta, p, DEPTH).unwrap();
        assert!((r - 1.0).abs() < 1e-12, "p={p}: {r}");
    }
    let r = decoupling_ratio(&CoefficientModel::Given(wavy()), 1.0, 4.0, DEPTH).unwrap();
    assert!((r - 1.0).abs() < 1e-12, "{r}");
}

#[test]
fn ratio_ignores_phase_and_scale() {
    let base = decoupling_ratio(&CoefficientModel::Given(wavy()), 0.25, 4.0, DEPTH).unwrap();
    let c = Complex64::from_polar(3.7, 1.1);
    let turned = Density::function(move |xi| c * Complex64::new(1.0 + xi, 0.5 * (7.0 * xi).sin()));
    let other = decoupling_ratio(&CoefficientModel::Given(turned), 0.25, 4.0, DEPTH).unwrap();
    assert!((base - other).abs() < 1e-12 * base, "{base} vs {other}");
}

#[test]
fn ratio_rejects_bad_input() {
    let zero = Density::function(|_| Complex64::new(0.0, 0.0));
    assert!(decoupling_ratio(&CoefficientModel::Given(zero), 0.5, 4.0, DEPTH).is_err());
    assert!(decoupling_ratio(&CoefficientModel::Given(wavy()), 0.5, 5.0, DEPTH).is_err());
    assert!(decoupling_ratio(&CoefficientModel::Given(wavy()), 0.3, 4.0, DEPTH).is_err());
}

#[test]
fn gaussian_ratio_is_deterministic() {
    let model = CoefficientModel::Gaussian { trials: 4, seed: 17 };
    let a = decoupling_ratio(&model, 0.25, 4.0, DEPTH).unwrap();
    let b = decoupling_ratio(&model, 0.25, 4.0, DEPTH).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
    assert!(a > 0.0);
}

#[test]
fn bilinear_symmetry_and_errors() {
    let lat = Lattice::new((0.0, 0.0), 1.0, 24.0).unwrap();
    let g1 = Density::gaussian(0.0, 0.25, 8, 1).unwrap();
    let g2 = Density::gaussian(0.5, 0.75, 8, 2).unwrap();
    let (r1, r2) = ((0.0, 0.25), (0.5, 0.75));
    let a = bilinear_ratio(&g1, &g2, r1, r2, 0.25, &lat, DEPTH).unwrap();
    let b = bilinear_ratio(&g2, &g1, r2, r1, 0.25, &lat, DEPTH).unwrap();
    assert!(a > 0.0 && (a - b).abs() < 1e-12 * a, "{a} vs {b}");

    let zero = Density::function(|_| Complex64::new(0.0, 0.0));
    assert_eq!(bilinear_ratio(&zero, &g2, r1, r2, 0.25, &lat, DEPTH).unwrap(), 0.0);
    assert!(matches!(
        bilinear_ratio(&g1, &g2, r1, (0.3, 0.5), 0.25, &lat, DEPTH),
        Err(Error::Transversality { .. })
    ));
}

#[test]
fn plane_wave_local_smoothing_matches_scalar() {
    let grid = TorusGrid::new(32, std::f64::consts::TAU, Dims::Two).unwrap();
    let (a, b, alpha) = (3.0, -2.0, 2.0);
    let f = GridFunction::from_fn(grid, |x, y| Complex64::from_polar(1.0, a * x + b * y));
    let ladder = u_ladder(9);
    let depth = dilation_depth(8.0, alpha, 2.0);
    let got = local_smoothing_ratios(&[f], alpha, &ladder, 4.0, depth).unwrap()[0];
    let oracle = ladder
        .iter()
        .map(|&u| {
            simpson(|t| Complex64::from_polar(plateau_bump(t), -u * (a * t + b * t.powf(alpha))), 0.5, 3.0, 20000).norm()
        })
        .fold(0.0, f64::max);
    assert!((got - oracle).abs() < 1e-8 * oracle, "{got} vs {oracle}");
}

#[test]
fn local_smoothing_input_checks() {
    let grid = TorusGrid::new(64, std::f64::consts::TAU, Dims::Two).unwrap();
    assert!(matches!(
        local_smoothing_decay(5, 4.0, 2.0, 4, grid, 1, 0),
        Err(Error::UnderResolvedLadder { .. })
    ));
    assert!(local_smoothing_decay(3, 2.0, 2.0, 8, grid, 1, 0).is_err());
    assert!(local_smoothing_decay(-6, 4.0, 2.0, 8, grid, 1, 0).is_err());
    let r = local_smoothing_decay(3, 4.0, 2.0, 8, grid, 2, 0).unwrap();
    assert!(r > 0.0 && r.is_finite());
}

#[test]
fn ladder_spans_one_to_two() {
    let l = u_ladder(5);
    assert_eq!(l, vec![1.0, 1.25, 1.5, 1.75, 2.0]);
}
