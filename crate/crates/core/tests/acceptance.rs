//! Acceptance suite: one line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skewflow::delay::{compute_assumption_constants, verify_focusing, FocusingSamples};
use skewflow::driving::{OmegaPoint, ScalarField, SharedField};
use skewflow::oracles::dde_characteristic_root;
use skewflow::parabolic::{check_comparison, sandwich, temporal};
use skewflow::presets::{all_presets, delay_coefficients, parabolic_coefficients, preset};
use skewflow::spectral::{
    as_segment, dual_floquet, exponent_agreement, pullback_floquet, separation, top_exponent, ExponentOptions,
    PullbackOptions, SeparationOptions,
};
use skewflow::{
    ConePropagator, DelayCocycle, DelayCoefficients, GridFunction, ParabolicCocycle, ParabolicCoefficients,
    PresetSystem, Result,
};

/// Leading unit intervals dropped from every exponent average.
const BURN_IN: usize = 10;
const QP: &str = "quasiperiodic-parabolic";

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { pass, detail })
}

fn parabolic(name: &str, seed: u64) -> ParabolicCocycle {
    match preset(name, seed).expect("preset") {
        PresetSystem::Parabolic(p) => p,
        PresetSystem::Delay { .. } => panic!("{name} is not parabolic"),
    }
}

fn delay(name: &str) -> DelayCocycle {
    match preset(name, 0).expect("preset") {
        PresetSystem::Delay { cocycle, .. } => cocycle,
        PresetSystem::Parabolic(_) => panic!("{name} is not a delay system"),
    }
}

fn omega_for<P: ConePropagator + ?Sized>(p: &P, seed: u64) -> OmegaPoint {
    p.driving().sample_omega(seed)
}

fn exponent<P: ConePropagator + ?Sized>(p: &P, omega: &OmegaPoint, u0: &[f64], horizon: f64) -> Result<f64> {
    Ok(top_exponent(p, omega, u0, ExponentOptions::new(horizon).with_burn_in(BURN_IN))?.lambda)
}

fn c1_scalar_dde() -> Result<Verdict> {
    let start = Instant::now();
    let p = delay("scalar-dde");
    let root = dde_characteristic_root(1, &[0.0], &[1.0])?.lambda_re;
    let lambda = exponent(&p, &omega_for(&p, 1), &p.reference(), 200.0)?;
    let secs = start.elapsed().as_secs_f64();
    let err = (lambda - root).abs();
    verdict(err <= 1e-3 && secs < 10.0, format!("|λ̂-λ*| = {err:.2e}, {secs:.2}s"))
}

fn c2_ode_limit() -> Result<Verdict> {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for a in [0.3, -0.7] {
        let p = DelayCocycle::new(DelayCoefficients::autonomous(1, &[a], &[0.0])?, 200)?;
        let lambda = exponent(&p, &omega_for(&p, 2), &p.reference(), 200.0)?;
        worst = worst.max((lambda - a).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(worst <= 1e-10 && secs < 1.0, format!("max |λ̂-a| = {worst:.2e}, {secs:.2}s"))
}

fn c3_coupled_dde() -> Result<Verdict> {
    let p = delay("coupled-dde-N2");
    let root = dde_characteristic_root(2, &[0.0; 4], &[1.0; 4])?.lambda_re;
    let omega = omega_for(&p, 3);
    let err = (exponent(&p, &omega, &p.reference(), 200.0)? - root).abs();
    let w = as_segment(&p, &pullback_floquet(&p, &omega, PullbackOptions::default())?.w)?;
    let scale = w.head()[0];
    let mut shape = 0.0f64;
    for k in 0..=w.grid() {
        let expected = (root * w.tau(k)).exp();
        for v in w.node(k) {
            shape = shape.max((v / scale - expected).abs());
        }
    }
    verdict(
        err <= 1e-3 && shape <= 1e-4,
        format!("|λ̂-λ*| = {err:.2e}, Floquet shape error {shape:.2e}"),
    )
}

fn heat(n: usize) -> Result<ParabolicCocycle> {
    ParabolicCocycle::new(parabolic_coefficients("heat-dirichlet", 0)?, n, 10_000)
}

fn c4_heat() -> Result<Verdict> {
    let omega = OmegaPoint::new(vec![0.0])?;
    let rate = |n: usize, horizon: f64| -> Result<f64> {
        let p = heat(n)?;
        Ok(top_exponent(&p, &omega, &ConePropagator::reference(&p), ExponentOptions::new(horizon))?.lambda)
    };
    let h = 0.01;
    let discrete = -(4.0 / (h * h)) * (PI * h / 2.0).sin().powi(2);
    let err = (rate(99, 10.0)? - discrete).abs();

    let l: Vec<f64> = [49, 99, 199].iter().map(|&n| rate(n, 2.0)).collect::<Result<_>>()?;
    let r1 = [(4.0 * l[1] - l[0]) / 3.0, (4.0 * l[2] - l[1]) / 3.0];
    let richardson = (16.0 * r1[1] - r1[0]) / 15.0;
    let rich_err = (richardson + PI * PI).abs();

    let p = heat(99)?;
    let sep = separation(&p, &omega, SeparationOptions::new(20).with_burn_in(2))?;
    let rel = (sep.sigma - 3.0 * PI * PI).abs() / (3.0 * PI * PI);
    verdict(
        err <= 1e-6 && rich_err <= 1e-2 && rel <= 0.05,
        format!("|λ̂-λ_h| = {err:.2e}, |R+π²| = {rich_err:.2e}, σ̂ rel err {rel:.2e}"),
    )
}

fn c5_duality() -> Result<Verdict> {
    let p = parabolic(QP, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let omega = omega_for(&p, 500 + k);
        let t = rng.random_range(1..=2048) as f64 * p.dt();
        let u: Vec<f64> = (0..p.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..p.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let start = p.shift(&omega, -t);
        let lhs = p.pairing(&p.propagate_values(&start, t, &u)?, &v);
        let rhs = p.pairing(&u, &p.adjoint(&omega, t, &v)?);
        worst = worst.max((lhs - rhs).abs() / (p.norm(&u) * p.norm(&v)));
    }
    verdict(worst <= 1e-12, format!("max relative defect {worst:.2e}"))
}

fn c6_dual_agreement() -> Result<Verdict> {
    let p = parabolic(QP, 0);
    let a = exponent_agreement(&p, &omega_for(&p, 6), ExponentOptions::new(200.0).with_burn_in(BURN_IN))?;
    verdict(
        a.gap <= 1e-3,
        format!("λ̂ = {:.6}, λ̂* = {:.6}, gap {:.2e}", a.lambda, a.lambda_adjoint, a.gap),
    )
}

fn c7_focusing() -> Result<Verdict> {
    let mut detail = Vec::new();
    let mut pass = true;
    for name in ["cooperative-oa3", "cooperative-oa4"] {
        let (coeffs, variant) = delay_coefficients(name, 0)?;
        let omega = coeffs.driving().sample_omega(7);
        let constants = compute_assumption_constants(&coeffs, &omega, variant)?;
        let r = verify_focusing(&coeffs, &omega, &constants, FocusingSamples::default())?;
        pass &= r.passed;
        detail.push(format!("{name}: margins ({:.2e}, {:.2e})", r.lower_margin, r.upper_margin));
    }
    verdict(pass, detail.join("; "))
}

fn c8_start_independence() -> Result<Verdict> {
    let mut worst = (0.0f64, "");
    for name in all_presets() {
        let sys = preset(name, 0)?;
        let p = sys.propagator();
        let omega = omega_for(p, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for _ in 0..10 {
            let u0: Vec<f64> = (0..p.dim()).map(|_| rng.random::<f64>()).collect();
            let l = exponent(p, &omega, &u0, 200.0)?;
            lo = lo.min(l);
            hi = hi.max(l);
        }
        if hi - lo >= worst.0 {
            worst = (hi - lo, name);
        }
    }
    verdict(worst.0 <= 1e-3, format!("max spread {:.2e} ({})", worst.0, worst.1))
}

/// `c0 + r (1 + sin(2π(x + φ)))` with `r >= 0`, envelopes widened to match.
fn raised(base: &ParabolicCoefficients, r: f64, phase: f64) -> ParabolicCoefficients {
    let c0 = base.c0.clone();
    let (lo, hi) = (base.c0_lower.clone(), base.c0_upper.clone());
    let profile = Arc::new(move |w: &OmegaPoint, x: f64| c0.eval(w, x) + r * (1.0 + (2.0 * PI * (x + phase)).sin()));
    let lower: SharedField = Arc::new(move |w: &OmegaPoint| lo.eval(w));
    let upper: SharedField = Arc::new(move |w: &OmegaPoint| hi.eval(w) + 2.0 * r);
    base.clone().with_c0(profile, lower, upper)
}

fn random_cone(rng: &mut ChaCha8Rng, p: &ParabolicCocycle) -> Result<GridFunction> {
    GridFunction::new(p.grid(), (0..p.dim()).map(|_| rng.random::<f64>()).collect())
}

fn c9_comparison() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut margin = f64::INFINITY;
    for k in 0..50 {
        let first = parabolic(QP, k);
        let second = raised(first.coeffs(), rng.random::<f64>(), rng.random::<f64>());
        let omega = omega_for(&first, 900 + k);
        let t = rng.random_range(64..=1024) as f64 * first.dt();
        let r = check_comparison(&first, &second, &omega, t, &random_cone(&mut rng, &first)?)?;
        for m in [
            r.margin,
            r.sandwich_first.lower_margin,
            r.sandwich_first.upper_margin,
            r.sandwich_second.lower_margin,
            r.sandwich_second.upper_margin,
        ] {
            margin = margin.min(m);
        }
    }
    let mut gap = 0.0f64;
    for k in 0..10 {
        let base = parabolic(QP, k);
        let field = base.coeffs().driving.random_field(40);
        let shared: SharedField = Arc::new(move |w: &OmegaPoint| 0.5 * field.eval(w));
        let flat = base.coeffs().clone().with_c0(temporal(shared.clone()), shared.clone(), shared);
        let p = base.with_coeffs(flat)?;
        let omega = omega_for(&p, 950 + k);
        let r = sandwich(&p, &omega, 1.0, &random_cone(&mut rng, &p)?)?;
        gap = gap.max(r.lower_gap).max(r.upper_gap);
    }
    verdict(
        margin >= -1e-12 && gap <= 1e-12,
        format!("min margin {margin:.2e}, space-independent gap {gap:.2e}"),
    )
}

fn c10_properties() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = [0.0f64; 4];
    let mut cone = true;
    for name in all_presets() {
        let sys = preset(name, 1)?;
        let p = sys.propagator();
        for k in 0..4 {
            let omega = omega_for(p, 1000 + k);
            let (s, t) = (rng.random_range(1..=3) as f64, rng.random_range(1..=3) as f64);
            let u: Vec<f64> = (0..p.dim()).map(|_| rng.random::<f64>()).collect();
            let d: Vec<f64> = (0..p.dim()).map(|_| rng.random::<f64>()).collect();
            let v: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + b).collect();
            let uu = p.propagate(&omega, t, &u)?;
            let uv = p.propagate(&omega, t, &v)?;
            let ud = p.propagate(&omega, t, &d)?;
            let scale = uv.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            cone &= uu.iter().all(|&x| x >= 0.0) && uu.iter().zip(&uv).all(|(a, b)| a <= b);
            let lin = uu.iter().zip(&ud).zip(&uv).map(|((a, b), c)| (a + b - c).abs()).fold(0.0, f64::max);
            worst[0] = worst[0].max(lin / scale);
            let composed = p.propagate(&p.shift(&omega, s), t, &p.propagate(&omega, s, &u)?)?;
            let direct = p.propagate(&omega, s + t, &u)?;
            let cscale = direct.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let coc = composed.iter().zip(&direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst[1] = worst[1].max(coc / cscale);
            let id = p.propagate(&omega, 0.0, &u)?;
            worst[2] = worst[2].max(id.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
    }
    verdict(
        cone && worst[0] <= 1e-12 && worst[1] <= 1e-10 && worst[2] == 0.0,
        format!(
            "order preserved: {cone}, linearity {:.1e}, cocycle {:.1e}, U(0) {:.1e}",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn c11_gauge() -> Result<Verdict> {
    let p = parabolic(QP, 0);
    let q = p.with_coeffs(p.coeffs().shift_c0(1.0))?;
    let omega = omega_for(&p, 11);
    let opts = SeparationOptions::new(40).with_burn_in(BURN_IN);
    let (a, b) = (separation(&p, &omega, opts)?, separation(&q, &omega, opts)?);
    let pb = PullbackOptions::default();
    let dw = max_diff(&pullback_floquet(&p, &omega, pb)?.w, &pullback_floquet(&q, &omega, pb)?.w);
    let dws = max_diff(&dual_floquet(&p, &omega, pb)?.w, &dual_floquet(&q, &omega, pb)?.w);
    let shifts = [(b.lambda1 - a.lambda1 - 1.0).abs(), (b.lambda2 - a.lambda2 - 1.0).abs()];
    let dsigma = (b.sigma - a.sigma).abs();
    let worst = shifts[0].max(shifts[1]).max(dsigma).max(dw).max(dws);
    verdict(
        worst <= 1e-10,
        format!(
            "Δλ₁-1 {:.1e}, Δλ₂-1 {:.1e}, Δσ {dsigma:.1e}, Δw {dw:.1e}, Δw* {dws:.1e}",
            shifts[0], shifts[1]
        ),
    )
}

fn c12_temperedness() -> Result<Verdict> {
    let p = parabolic(QP, 0);
    let s = separation(&p, &omega_for(&p, 12), SeparationOptions::new(200).with_burn_in(BURN_IN))?;
    verdict(
        s.temperedness_slope.abs() <= 0.01 && s.sigma > 0.0,
        format!("slope {:.2e}, σ̂ = {:.4}", s.temperedness_slope, s.sigma),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Result<Verdict>); 12] = [
        ("1  scalar DDE exponent", c1_scalar_dde),
        ("2  ODE limit", c2_ode_limit),
        ("3  coupled DDE exponent and Floquet segment", c3_coupled_dde),
        ("4  heat equation", c4_heat),
        ("5  duality", c5_duality),
        ("6  forward/adjoint exponents", c6_dual_agreement),
        ("7  focusing sandwich", c7_focusing),
        ("8  initial-condition independence", c8_start_independence),
        ("9  comparison and sandwich", c9_comparison),
        ("10 order, linearity, cocycle, identity", c10_properties),
        ("11 gauge covariance", c11_gauge),
        ("12 temperedness", c12_temperedness),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "{} criterion {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
