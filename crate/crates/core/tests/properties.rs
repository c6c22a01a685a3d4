use std::sync::Arc;

use proptest::prelude::*;

use skewflow::driving::{affine, constant, Driving, DrivingConfig, OmegaPoint, SharedField};
use skewflow::oracles::dde_characteristic_root;
use skewflow::parabolic::{sandwich, Separable};
use skewflow::spectral::{hilbert_metric, make_projection};
use skewflow::{
    Boundary, ConePropagator, DelayCocycle, DelayCoefficients, GridFunction, ParabolicCocycle,
    ParabolicCoefficients,
};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

/// Cooperative quasi-periodic delay system, N = 2, with table seed `seed`.
fn delay_system(seed: u64) -> DelayCocycle {
    let d = Driving::new(DrivingConfig::random_fourier(vec![1.0, 2f64.sqrt()], 4, 0.5, seed)).unwrap();
    let f = |k, mean, amp| affine(mean, amp, d.random_field(k));
    let a = vec![f(0, -1.0, 0.5), f(1, 0.3, 0.2), f(2, 0.3, 0.2), f(3, -1.0, 0.5)];
    let b = vec![f(4, 0.6, 0.3), f(5, 0.6, 0.3), f(6, 0.6, 0.3), f(7, 0.6, 0.3)];
    DelayCocycle::new(DelayCoefficients::new(d, 2, a, b).unwrap(), 16).unwrap()
}

/// Quasi-periodic parabolic system on `n` nodes with the given boundary.
fn parabolic_system(seed: u64, boundary: Boundary) -> ParabolicCocycle {
    let d = Driving::new(DrivingConfig::random_fourier(vec![1.0, 2f64.sqrt()], 4, 0.5, seed)).unwrap();
    let field = |k| -> SharedField { Arc::new(d.random_field(k)) };
    let a11 = Separable::new()
        .term(constant(1.0), |_| 1.0)
        .term(field(0), |x| 0.3 * x)
        .shared();
    let b1 = Separable::new().term(field(1), |x| 0.8 * (1.0 - x)).shared();
    let a1 = Separable::new().term(field(2), |_| 0.4).shared();
    let c0 = Separable::new().term(field(3), |x| x).shared();
    let f3 = field(3);
    let g3 = field(3);
    let lower: SharedField = Arc::new(move |w: &OmegaPoint| f3.eval(w).min(0.0));
    let upper: SharedField = Arc::new(move |w: &OmegaPoint| g3.eval(w).max(0.0));
    let coeffs = ParabolicCoefficients::heat(d.clone(), boundary)
        .with_a11(a11)
        .with_a1(a1)
        .with_b1(b1)
        .with_c0(c0, lower, upper);
    ParabolicCocycle::new(coeffs, 12, 128).unwrap().with_watchdog(true)
}

fn boundary(kind: u8) -> Boundary {
    match kind {
        0 => Boundary::Dirichlet,
        1 => Boundary::Neumann,
        _ => Boundary::robin_constant(0.7, 1.3).unwrap(),
    }
}

fn omega() -> impl Strategy<Value = OmegaPoint> {
    (0.0..1.0f64, 0.0..1.0f64).prop_map(|(a, b)| OmegaPoint::new(vec![a, b]).unwrap())
}

fn cone_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, len)
}

/// `u_i(τ) = a_i + b_i (1 + sin(2π k_i τ + φ_i))` on the 16-cell grid, N = 2.
fn smooth_segment() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0.0..1.0f64, 0.0..1.0f64, 1u32..3, 0.0..6.3f64), 2).prop_map(|modes| {
        (0..=16)
            .flat_map(|k| {
                let tau = k as f64 / 16.0 - 1.0;
                modes
                    .iter()
                    .map(move |&(a, b, f, phi)| a + b * (1.0 + (std::f64::consts::TAU * f as f64 * tau + phi).sin()))
            })
            .collect()
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Order preservation, linearity, cocycle identity to `cocycle_tol` relative
/// error, and `U(0) = Id`.
fn check_semiflow<P: ConePropagator>(p: &P, w: &OmegaPoint, u: &[f64], d: &[f64], s: f64, t: f64, cocycle_tol: f64) {
    let v: Vec<f64> = u.iter().zip(d).map(|(a, b)| a + b).collect();
    let (uu, ud, uv) = (
        p.propagate(w, t, u).unwrap(),
        p.propagate(w, t, d).unwrap(),
        p.propagate(w, t, &v).unwrap(),
    );
    assert!(uu.iter().all(|&x| x >= 0.0), "cone not invariant");
    assert!(uu.iter().zip(&uv).all(|(a, b)| a <= b), "order not preserved");
    let sum: Vec<f64> = uu.iter().zip(&ud).map(|(a, b)| a + b).collect();
    assert!(max_diff(&sum, &uv) <= 1e-12 * max_abs(&uv).max(1e-300));

    let composed = p.propagate(&p.shift(w, s), t, &p.propagate(w, s, u).unwrap()).unwrap();
    let direct = p.propagate(w, s + t, u).unwrap();
    let defect = max_diff(&composed, &direct) / max_abs(&direct).max(max_abs(u));
    assert!(defect <= cocycle_tol, "cocycle defect {defect:e} at s = {s}, t = {t}");

    assert_eq!(p.propagate(w, 0.0, u).unwrap(), u);
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn delay_semiflow(seed in 0u64..1000, w in omega(), u in smooth_segment(), d in smooth_segment(),
                      s in 1usize..32, t in 1usize..32) {
        let p = delay_system(seed);
        check_semiflow(&p, &w, &u, &d, s as f64 / 16.0, t as f64 / 16.0, 1e-10);
    }

    #[test]
    fn parabolic_semiflow(seed in 0u64..1000, kind in 0u8..3, w in omega(), u in cone_vec(12),
                          d in cone_vec(12), s in 1usize..192, t in 1usize..192) {
        let p = parabolic_system(seed, boundary(kind));
        check_semiflow(&p, &w, &u, &d, s as f64 / 128.0, t as f64 / 128.0, 1e-10);
    }

    #[test]
    fn parabolic_duality(seed in 0u64..1000, kind in 0u8..3, w in omega(),
                         u in prop::collection::vec(-1.0..1.0f64, 12),
                         v in prop::collection::vec(-1.0..1.0f64, 12), t in 1usize..256) {
        let p = parabolic_system(seed, boundary(kind));
        let t = t as f64 / 128.0;
        let lhs = p.pairing(&p.propagate_values(&p.shift(&w, -t), t, &u).unwrap(), &v);
        let rhs = p.pairing(&u, &p.adjoint(&w, t, &v).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * p.norm(&u) * p.norm(&v));
    }

    #[test]
    fn parabolic_sandwich(seed in 0u64..1000, kind in 0u8..3, w in omega(), u in cone_vec(12),
                          t in 1usize..256) {
        let p = parabolic_system(seed, boundary(kind));
        let u0 = GridFunction::new(p.grid(), u).unwrap();
        let r = sandwich(&p, &w, t as f64 / 128.0, &u0).unwrap();
        prop_assert!(r.lower_margin >= -1e-12 && r.upper_margin >= -1e-12);
    }

    #[test]
    fn hilbert_metric_is_projective(u in prop::collection::vec(0.1..1.0f64, 6),
                                    v in prop::collection::vec(0.1..1.0f64, 6), c in 0.01..100.0f64) {
        let d = hilbert_metric(&u, &v);
        let cu: Vec<f64> = u.iter().map(|x| c * x).collect();
        prop_assert!((hilbert_metric(&cu, &v) - d).abs() <= 1e-12 * d.max(1.0));
        prop_assert!((hilbert_metric(&v, &u) - d).abs() <= 1e-12 * d.max(1.0));
        prop_assert!(d >= 0.0);
    }

    #[test]
    fn projection_is_idempotent(seed in 0u64..1000, w in cone_vec(12), ws in cone_vec(12),
                                u in prop::collection::vec(-1.0..1.0f64, 12)) {
        let p = parabolic_system(seed, Boundary::Dirichlet);
        let w: Vec<f64> = w.iter().map(|x| x + 0.1).collect();
        let ws: Vec<f64> = ws.iter().map(|x| x + 0.1).collect();
        let proj = make_projection(&p, w.clone(), ws.clone()).unwrap();
        let once = proj.apply(&p, &u);
        let twice = proj.apply(&p, &once);
        prop_assert!(max_diff(&once, &twice) <= 1e-12 * max_abs(&u).max(1.0));
        prop_assert!(max_abs(&proj.apply(&p, &w)) <= 1e-12 * max_abs(&w));
        prop_assert!(p.pairing(&once, &ws).abs() <= 1e-12 * p.norm(&u) * p.norm(&ws));
    }

    #[test]
    fn characteristic_root_residual(a in prop::collection::vec(0.0..1.0f64, 4),
                                    b in prop::collection::vec(0.05..1.0f64, 4), shift in -2.0..0.5f64) {
        let a = vec![a[0] + shift, a[1], a[2], a[3] + shift];
        let r = dde_characteristic_root(2, &a, &b).unwrap();
        prop_assert!(r.residual <= 1e-12 * (1.0 + r.lambda_re.abs()).powi(2));
        prop_assert!(r.perron.iter().all(|&x| x > 0.0));
    }
}
