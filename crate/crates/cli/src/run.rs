//! Subcommand bodies. Each fills a report and a list of in-memory CSV
//! traces; nothing touches the file system here.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skewflow::delay::{
    check_cooperativity, check_irreducibility, check_positivity, compute_assumption_constants, exponent_floor,
    verify_focusing, FocusingSamples,
};
use skewflow::oracles::{dde_characteristic_root, periodic_monodromy};
use skewflow::parabolic::{check_comparison, harnack_quotient, sandwich};
use skewflow::presets::{preset_with, PresetSystem};
use skewflow::spectral::{
    as_segment, dual_floquet, entire_orbit, pullback_floquet, separation, top_exponent, ExponentOptions,
    PullbackOptions, SeparationOptions,
};
use skewflow::{
    AdjointView, ConePropagator, DelayCocycle, DrivingKind, Error, GridFunction, OmegaPoint, ParabolicCocycle, Result,
    Variant,
};

use crate::config::ExperimentConfig;
use crate::report::{pairs_csv, Check, Report};
use crate::Command;

/// Finite-sample slack allowed on checks that hold with equality in exact
/// arithmetic.
const ROUNDOFF: f64 = 1e-12;

pub type Traces = Vec<(String, Vec<u8>)>;

pub fn build(cfg: &ExperimentConfig) -> Result<PresetSystem> {
    preset_with(&cfg.system.preset, cfg.driving.seed, cfg.discretization())
}

pub fn execute(cmd: Command, cfg: &ExperimentConfig, sys: &PresetSystem, report: &mut Report, traces: &mut Traces) -> Result<()> {
    let prop = sys.propagator();
    let omega = prop.driving().sample_omega(cfg.run.omega_seed);
    match cmd {
        Command::EstimateLyapunov => estimate_lyapunov(cfg, sys, &omega, report, traces),
        Command::Floquet => floquet(cfg, sys, &omega, report, traces),
        Command::Separation => separation_run(cfg, prop, &omega, report, traces),
        Command::VerifyAssumptions => match sys {
            PresetSystem::Delay { cocycle, variant } => verify_delay(cfg, cocycle, *variant, &omega, report),
            PresetSystem::Parabolic(p) => verify_parabolic(cfg, p, &omega, report),
        },
        Command::OracleCompare => oracle_compare(cfg, sys, &omega, report),
    }
}

fn exponent_options(cfg: &ExperimentConfig) -> ExponentOptions {
    ExponentOptions::new(cfg.run.horizon as f64).with_burn_in(cfg.run.burn_in)
}

fn pullback_options(cfg: &ExperimentConfig) -> PullbackOptions {
    PullbackOptions {
        max_depth: cfg.run.pullback_depth,
        tol: cfg.run.pullback_tol,
    }
}

fn state_csv(sys: &PresetSystem, values: &[f64]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    match sys {
        PresetSystem::Delay { cocycle, .. } => as_segment(cocycle, values)?.write_csv(&mut buf)?,
        PresetSystem::Parabolic(p) => GridFunction::new(p.grid(), values.to_vec())?.write_csv(&mut buf)?,
    }
    Ok(buf)
}

fn estimate_lyapunov(
    cfg: &ExperimentConfig,
    sys: &PresetSystem,
    omega: &OmegaPoint,
    report: &mut Report,
    traces: &mut Traces,
) -> Result<()> {
    let prop = sys.propagator();
    let opts = exponent_options(cfg);
    let est = top_exponent(prop, omega, &prop.reference(), opts)?;
    report.lambda1 = Some(est.lambda);
    report.values.insert("minus_infinity".into(), f64::from(u8::from(est.minus_infinity)));
    let mut buf = Vec::new();
    est.write_trace_csv(&mut buf)?;
    traces.push(("lambda1_trace.csv".into(), buf));

    if prop.has_adjoint() {
        let view = AdjointView(prop);
        let dual = top_exponent(&view, omega, &view.reference(), opts)?;
        report.lambda1_adjoint = Some(dual.lambda);
        let gap = (est.lambda - dual.lambda).abs();
        report.checks.push(Check::from_margin("exponent_agreement", cfg.run.agreement_tol - gap));
        let mut buf = Vec::new();
        dual.write_trace_csv(&mut buf)?;
        traces.push(("lambda1_adjoint_trace.csv".into(), buf));
    }
    if let PresetSystem::Delay { cocycle, variant } = sys {
        let blocks = cfg.run.horizon / variant.horizon(cocycle.coeffs().n());
        if blocks > 0 {
            let floor = exponent_floor(cocycle.coeffs(), omega, *variant, blocks)?;
            report.values.insert("exponent_floor".into(), floor);
            report.checks.push(Check::from_margin("exponent_floor", est.lambda - floor));
        }
    }
    Ok(())
}

fn floquet(cfg: &ExperimentConfig, sys: &PresetSystem, omega: &OmegaPoint, report: &mut Report, traces: &mut Traces) -> Result<()> {
    let prop = sys.propagator();
    let opts = pullback_options(cfg);
    let w = pullback_floquet(prop, omega, opts)?;
    report.values.insert("depth".into(), w.depth as f64);
    report.values.insert("residual".into(), w.residual);
    report.checks.push(Check::from_margin("pullback_converged", opts.tol - w.residual));
    traces.push(("w.csv".into(), state_csv(sys, &w.w)?));

    if prop.has_adjoint() {
        let ws = dual_floquet(prop, omega, opts)?;
        let pairing = prop.pairing(&w.w, &ws.w);
        report.values.insert("depth_dual".into(), ws.depth as f64);
        report.values.insert("residual_dual".into(), ws.residual);
        report.values.insert("pairing".into(), pairing);
        report.checks.push(Check::from_margin("dual_converged", opts.tol - ws.residual));
        report.checks.push(Check {
            name: "pairing_positive".into(),
            pass: pairing > 0.0,
            margin: pairing,
        });
        traces.push(("w_star.csv".into(), state_csv(sys, &ws.w)?));
    }

    let orbit = entire_orbit(prop, omega, cfg.run.orbit_back, &cfg.run.orbit_times, opts)?;
    let lowest = orbit
        .iter()
        .flat_map(|p| p.unit.iter().copied())
        .fold(f64::INFINITY, f64::min);
    report.checks.push(Check::from_margin("orbit_positive", lowest));
    traces.push((
        "orbit.csv".into(),
        pairs_csv(["t", "log_scale"], orbit.iter().map(|p| (p.t, format!("{:e}", p.log_scale)))),
    ));
    Ok(())
}

fn separation_run(
    cfg: &ExperimentConfig,
    prop: &dyn ConePropagator,
    omega: &OmegaPoint,
    report: &mut Report,
    traces: &mut Traces,
) -> Result<()> {
    let mut opts = SeparationOptions::new(cfg.run.horizon).with_burn_in(cfg.run.burn_in);
    opts.refresh = cfg.run.refresh;
    opts.pullback = pullback_options(cfg);
    opts.seed = cfg.run.omega_seed;
    let est = separation(prop, omega, opts)?;
    report.lambda1 = Some(est.lambda1);
    report.lambda2 = Some(est.lambda2);
    report.sigma = Some(est.lambda1 - est.lambda2);
    report.values.insert("temperedness_slope".into(), est.temperedness_slope);
    report.checks.push(Check {
        name: "gap_positive".into(),
        pass: est.sigma > 0.0,
        margin: est.sigma,
    });
    report.checks.push(Check::from_margin(
        "temperedness",
        cfg.run.temperedness_tol - est.temperedness_slope.abs(),
    ));
    traces.push((
        "temperedness.csv".into(),
        pairs_csv(["t", "log_norm_over_t"], est.temperedness.iter().map(|(t, v)| (t, format!("{v:e}")))),
    ));
    Ok(())
}

fn verify_delay(cfg: &ExperimentConfig, p: &DelayCocycle, variant: Variant, omega: &OmegaPoint, report: &mut Report) -> Result<()> {
    let coeffs = p.coeffs();
    let n = coeffs.n();
    let coop = check_cooperativity(coeffs, omega, variant.horizon(n) as f64)?;
    report.checks.push(Check {
        name: "cooperativity".into(),
        pass: coop.passed,
        margin: coop.violation.as_ref().map_or(0.0, |v| v.value),
    });
    let (name, pass, margin) = match variant {
        Variant::Oa3 => {
            let r = check_irreducibility(coeffs, omega);
            ("irreducibility", r.passed, r.delta_lower)
        }
        Variant::Oa4 => {
            let (pass, lowest) = check_positivity(coeffs, omega);
            ("positivity", pass, lowest)
        }
    };
    report.checks.push(Check {
        name: name.into(),
        pass,
        margin,
    });
    if !pass || !coop.passed {
        return Ok(());
    }

    let c = compute_assumption_constants(coeffs, omega, variant)?;
    for (k, v) in [
        ("beta_lower", c.beta_lower),
        ("beta_upper", c.beta_upper),
        ("kappa", c.kappa),
        ("a_lower", c.a_lower),
        ("a_upper", c.a_upper),
        ("delta_lower", c.delta_lower),
        ("delta_upper", c.delta_upper),
        ("horizon", c.horizon as f64),
    ] {
        report.values.insert(k.into(), v);
    }
    let plan = FocusingSamples {
        count: cfg.run.samples,
        seed: cfg.run.omega_seed,
        ..FocusingSamples::default()
    };
    let f = verify_focusing(coeffs, omega, &c, plan)?;
    report.values.insert("focusing_lower_margin".into(), f.lower_margin);
    report.values.insert("focusing_upper_margin".into(), f.upper_margin);
    report.checks.push(Check {
        name: "focusing".into(),
        pass: f.passed,
        margin: f.lower_margin.min(f.upper_margin),
    });
    Ok(())
}

fn verify_parabolic(cfg: &ExperimentConfig, p: &ParabolicCocycle, omega: &OmegaPoint, report: &mut Report) -> Result<()> {
    let mut ellipticity = Check::from_margin("ellipticity", 0.0);
    for k in 0..16 {
        if let Err(Error::Ellipticity { value, floor, .. }) = p.assemble(omega, k as f64 / 8.0) {
            ellipticity = Check::from_margin("ellipticity", value - floor);
            break;
        }
    }
    report.checks.push(ellipticity);

    let e = p.reference();
    let s = sandwich(p, omega, 1.0, &e)?;
    report.checks.push(Check::from_margin("sandwich", s.lower_margin.min(s.upper_margin) + ROUNDOFF));

    let c = check_comparison(p, &p.coeffs().shift_c0(1.0), omega, 1.0, &e)?;
    report.checks.push(Check {
        name: "comparison".into(),
        pass: c.margin > 0.0,
        margin: c.margin,
    });

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.omega_seed);
    let n = p.grid().len();
    let draw = |rng: &mut ChaCha8Rng| (0..n).map(|_| rng.random::<f64>()).collect::<Vec<_>>();
    let start = p.shift(omega, -1.0);
    let mut defect = 0.0f64;
    let mut harnack = harnack_quotient(p, omega, &e)?;
    for _ in 0..cfg.run.samples {
        let (u, v) = (draw(&mut rng), draw(&mut rng));
        let uu = p.propagate_values(&start, 1.0, &u)?;
        let av = p.propagate_adjoint_values(omega, 1.0, &v)?;
        let g = p.grid();
        let scale = g.norm(&uu) * g.norm(&v) + g.norm(&u) * g.norm(&av);
        defect = defect.max((g.inner(&uu, &v) - g.inner(&u, &av)).abs() / scale);
        harnack = harnack.max(harnack_quotient(p, omega, &GridFunction::new(g, u)?)?);
    }
    report.values.insert("duality_defect".into(), defect);
    report.values.insert("harnack_max".into(), harnack);
    report.checks.push(Check::from_margin("duality", cfg.run.duality_tol - defect));
    report.checks.push(Check {
        name: "harnack".into(),
        pass: harnack.is_finite(),
        margin: 1.0 / harnack,
    });
    Ok(())
}

fn oracle_compare(cfg: &ExperimentConfig, sys: &PresetSystem, omega: &OmegaPoint, report: &mut Report) -> Result<()> {
    let prop = sys.propagator();
    let d = prop.driving().config();
    let periodic = d.kind == DrivingKind::Periodic;
    let autonomous = match sys {
        PresetSystem::Delay { cocycle, .. } => {
            let c = cocycle.coeffs();
            (1..4).all(|k| {
                let w = prop.driving().sample_omega(k);
                c.a_at(&w) == c.a_at(omega) && c.b_at(&w) == c.b_at(omega)
            })
        }
        PresetSystem::Parabolic(_) => false,
    };
    if !periodic && !autonomous {
        return Err(Error::Unsupported(format!(
            "no oracle for {}: driving is neither periodic nor trivial",
            report.system
        )));
    }
    let lambda = top_exponent(prop, omega, &prop.reference(), exponent_options(cfg))?.lambda;
    report.lambda1 = Some(lambda);
    if let (true, PresetSystem::Delay { cocycle, .. }) = (autonomous, sys) {
        let c = cocycle.coeffs();
        let root = dde_characteristic_root(c.n(), &c.a_at(omega), &c.b_at(omega))?;
        report.values.insert("characteristic_root".into(), root.lambda_re);
        report
            .checks
            .push(Check::from_margin("characteristic_root", cfg.run.oracle_tol - (lambda - root.lambda_re).abs()));
    }
    if periodic {
        let period = 1.0 / d.frequencies[0];
        let mono = periodic_monodromy(prop, omega, period)?;
        report.values.insert("monodromy".into(), mono);
        report
            .checks
            .push(Check::from_margin("monodromy", cfg.run.oracle_tol - (lambda - mono).abs()));
    }
    Ok(())
}
