use std::f64::consts::TAU;
use std::sync::Arc;

use skewflow::driving::{constant, Driving, DrivingConfig, OmegaPoint, SharedField};
use skewflow::oracles::{dde_characteristic_root, elliptic_principal_eig, periodic_monodromy, MONODROMY_CAP};
use skewflow::spectral::{top_exponent, ExponentOptions};
use skewflow::{Boundary, DelayCocycle, DelayCoefficients, Error, ParabolicCocycle, ParabolicCoefficients};

fn origin() -> OmegaPoint {
    OmegaPoint::new(vec![0.0]).unwrap()
}

fn circle() -> Driving {
    Driving::new(DrivingConfig::periodic(1.0)).unwrap()
}

fn wave(mean: f64, amp: f64, phase: f64) -> SharedField {
    Arc::new(move |w: &OmegaPoint| mean + amp * (TAU * w.coords()[0] + phase).sin())
}

#[test]
fn monodromy_matches_characteristic_roots() {
    for (n, a, b) in [(1, vec![0.0], vec![1.0]), (2, vec![0.0; 4], vec![1.0; 4]), (2, vec![-1.0, 0.3, 0.1, -0.5], vec![0.4, 0.2, 0.6, 0.1])] {
        let root = dde_characteristic_root(n, &a, &b).unwrap();
        assert!(root.residual <= 1e-12);
        assert!(root.perron.iter().all(|&v| v > 0.0));
        let p = DelayCocycle::new(DelayCoefficients::autonomous(n, &a, &b).unwrap(), 100).unwrap();
        let lambda = periodic_monodromy(&p, &origin(), 1.0).unwrap();
        assert!((lambda - root.lambda_re).abs() <= 1e-6, "{lambda} vs {}", root.lambda_re);
    }
}

#[test]
fn periodic_ode_rate_is_the_mean_coefficient() {
    let c = DelayCoefficients::new(circle(), 1, vec![wave(0.3, 0.5, 0.4)], vec![constant(0.0)]).unwrap();
    let p = DelayCocycle::new(c, 100).unwrap();
    let lambda = periodic_monodromy(&p, &OmegaPoint::new(vec![0.17]).unwrap(), 1.0).unwrap();
    assert!((lambda - 0.3).abs() <= 1e-9, "{lambda}");
}

#[test]
fn monodromy_agrees_with_top_exponent_on_a_periodic_delay_system() {
    let c = DelayCoefficients::new(circle(), 1, vec![wave(-0.5, 0.3, 0.0)], vec![wave(0.8, 0.2, 1.0)]).unwrap();
    let p = DelayCocycle::new(c, 64).unwrap();
    let omega = OmegaPoint::new(vec![0.4]).unwrap();
    let mono = periodic_monodromy(&p, &omega, 1.0).unwrap();
    let e = vec![1.0; 65];
    let lambda = top_exponent(&p, &omega, &e, ExponentOptions::new(200.0).with_burn_in(10)).unwrap().lambda;
    assert!((mono - lambda).abs() <= 1e-4, "{mono} vs {lambda}");
}

#[test]
fn monodromy_refuses_large_states() {
    let p = ParabolicCocycle::new(ParabolicCoefficients::heat(circle(), Boundary::Dirichlet), MONODROMY_CAP + 1, 1)
        .unwrap();
    assert!(matches!(
        periodic_monodromy(&p, &origin(), 1.0),
        Err(Error::OracleRefused { .. })
    ));
}

#[test]
fn neumann_diffusion_has_zero_principal_eigenvalue() {
    let p = ParabolicCocycle::new(ParabolicCoefficients::heat(circle(), Boundary::Neumann), 24, 8).unwrap();
    let (lambda, phi) = elliptic_principal_eig(&p.assemble(&origin(), 0.0).unwrap()).unwrap();
    assert!(lambda.abs() < 1e-9, "{lambda}");
    let first = phi[0];
    assert!(phi.iter().all(|&v| (v - first).abs() < 1e-10));
}
