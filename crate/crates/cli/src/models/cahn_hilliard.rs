//! Isothermal Cahn–Hilliard runs.

use std::f64::consts::TAU;

use nlt_core::cahn_hilliard::{
    ch_heat_form_residual, ch_powers, ch_rhs, ch_step, chemical_potential, dissipation, free_energy, ChParams, ChState,
    Mobility,
};
use nlt_core::field_ops::{grad, inner, volume_integral};
use nlt_core::power::midpoint;
use nlt_core::thermo_laws::{channel, functional, ProcessRecord};
use nlt_core::{Field64, Grid64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::checks::{tol, CheckResult, StepBound};
use crate::error::Result;
use crate::schema::Scenario;
use crate::sim::{self, ModelRun, Series};

const COLUMNS: &[&str] = &[
    "mass",
    "free_energy",
    "dissipation",
    "internal_power",
    "dual_power",
    "source_power",
    "equivalence_constant",
    "balance_constant",
    "heat_form_residual",
];

fn initial_concentration(sc: &Scenario, grid: &Grid64) -> Field64 {
    let mean = sc.real("init.mean");
    let a = sc.real("init.amplitude");
    match sc.text("init.preset") {
        "noise" => {
            // Random amplitudes and phases on every wave vector up to `init.max_mode`,
            // rescaled so that the largest deviation from the mean is `a`.
            let mut rng = ChaCha8Rng::seed_from_u64(sc.seed());
            let m = sc.int("init.max_mode");
            let two_d = grid.dims() == 2;
            let mut waves = Vec::new();
            for mx in 0..=m {
                for my in if two_d { -m..=m } else { 0..=0 } {
                    if mx == 0 && my <= 0 {
                        continue;
                    }
                    let kx = TAU * mx as f64 / grid.length(0);
                    let ky = if two_d { TAU * my as f64 / grid.length(1) } else { 0.0 };
                    waves.push((kx, ky, rng.gen_range(-1.0f64..1.0), rng.gen_range(0.0..TAU)));
                }
            }
            let raw = Field64::scalar_fn(grid, |x| {
                waves.iter().map(|&(kx, ky, c, ph)| c * (kx * x[0] + ky * x[1] + ph).cos()).sum()
            });
            let peak = raw.max_abs();
            raw.map(|v| mean + if peak > 0.0 { a * v / peak } else { 0.0 })
        }
        "modes" => {
            let shapes: Vec<Field64> = sc.ints("init.modes").iter().map(|&m| sim::mode_shape(grid, m)).collect();
            shapes.iter().fold(Field64::constant(grid, 0, mean).expect("scalar"), |acc, s| {
                acc.axpy(a, s).expect("same grid")
            })
        }
        _ => Field64::constant(grid, 0, mean).expect("scalar"),
    }
}

/// Pointwise `θ G′(c) ċ + M|∇μ|²` at one state, the heat an isothermal bath must absorb.
fn holding_heat(c: &Field64, p: &ChParams<f64>, source: &Field64) -> nlt_core::Result<Field64> {
    let s = ChState { c: c.clone(), t: 0.0 };
    let cdot = ch_rhs(c, p, source)?;
    let gm = grad(&chemical_potential(&s, p)?)?;
    let diss = inner(&gm, &gm)?.scale_by(&c.map(|v| p.mobility.at(v)))?;
    c.map(|v| p.theta * p.g_prime(v)).scale_by(&cdot)?.axpy(1.0, &diss)
}

pub fn run(sc: &Scenario) -> Result<ModelRun> {
    let grid = sim::grid(sc)?;
    let m0 = sc.real("model.mobility.m0");
    let mobility = match sc.text("model.mobility.kind") {
        "degenerate" => Mobility::Degenerate(m0),
        _ => Mobility::Constant(m0),
    };
    let p = ChParams::new(sc.real("model.gamma"), sc.real("model.beta"), sc.real("model.theta0"), sc.real("model.theta"), mobility)
        .map_err(|e| sc.problem(e.to_string()))?;
    let mut run = ModelRun::default();
    let c_disc = sc.discretization_c();
    let forcing = sim::forcing(sc, &grid);
    let mut state = ChState::new(initial_concentration(sc, &grid), 0.0)?;
    let c_max = state.c.max_abs().max(1.0);
    let timing = sim::timing(sc, p.stable_dt(&grid, c_max), sim::forcing_period(sc), &mut run.notes)?;
    let dt = timing.dt;
    let h = grid.min_spacing();

    let mass0 = state.mass()?;
    // Largest ∫|c| seen so far; a source can move c away from a zero initial state.
    let mut l1 = state.c.norm_l1();
    let f0 = free_energy(&state, &p)?;
    let mut series = Series::new(sc, COLUMNS);
    let mut cells = vec![None; COLUMNS.len()];
    cells[0] = Some(mass0);
    cells[1] = Some(f0);
    cells[2] = Some(dissipation(&state, &p)?);
    series.push(0, 0.0, &cells);
    let mut record = ProcessRecord::new("cahn_hilliard", dt, 0.0, vec![state.c.clone()], &[(functional::FREE_ENERGY, f0)])?
        .with_params(sc.model_params());

    let modes: Vec<i64> = sc.ints("init.modes").to_vec();
    let shapes: Vec<Field64> = modes.iter().map(|&m| sim::mode_shape(&grid, m)).collect();
    let amp0 = shapes.iter().map(|s| sim::project(&state.c, s)).collect::<nlt_core::Result<Vec<_>>>()?;

    let mut mass = StepBound::default();
    let mut monotone = StepBound::default();
    let mut equivalence = StepBound::default();
    let mut balance = StepBound::default();
    let mut heat_form = StepBound::default();
    let mut soft_warned = false;
    let mut f_prev = f0;

    for step in 1..=timing.steps {
        let outcome = (|| -> nlt_core::Result<ChState<f64>> {
            let next = ch_step(&state, &p, &forcing, dt)?;
            let pw = ch_powers(&state, &next, &p, dt)?;
            let term = |k: &str| pw.term(k).expect("recorded term");
            let scale = term("free_energy_rate").norm_l1() + term("dissipation").norm_l1();
            let p_int = pw.internal_integral()?;
            let p_dual = volume_integral(term("dual"))?;
            let eq = sim::normalized(p_int - p_dual, dt, h, scale);
            equivalence.observe(step, eq, c_disc);
            let s_prev = forcing.at(&grid, state.t);
            let s_now = forcing.at(&grid, next.t);
            let source_power = volume_integral(&term("chemical_potential").scale_by(&midpoint(&s_prev, &s_now)?)?)?;
            let bal = sim::normalized(p_int - pw.external_integral()? - source_power, dt, h, scale);
            balance.observe(step, bal, c_disc);

            let m = next.mass()?;
            l1 = l1.max(next.c.norm_l1());
            let allowance = tol::MASS_REL_PER_1000 * l1 * (step as f64 / 1000.0).max(1.0);
            mass.observe(step, (m - mass0).abs(), allowance);
            let f = free_energy(&next, &p)?;
            monotone.observe(step, (f - f_prev) / dt / ((dt + h * h) * scale.max(f64::MIN_POSITIVE)), c_disc);

            // Supply that holds θ fixed, estimated from the state at the start of the step.
            let r = holding_heat(&state.c, &p, &s_prev)?.scale(-1.0);
            let q = Field64::zeros(&grid, 1)?;
            let residual = ch_heat_form_residual(&state, &next, &p, dt, &q, &r)?;
            let heat_scale = r.norm_l1() + term("dissipation").norm_l1();
            heat_form.observe(step, sim::normalized(residual, dt, h, heat_scale), c_disc);

            let g_rate = nlt_core::power::rate(&state.c.map(|c| p.g(c)), &next.c.map(|c| p.g(c)), dt)?.scale(p.theta);
            let heat = -volume_integral(&g_rate)? - volume_integral(term("dissipation"))?;
            record.push(
                vec![next.c.clone()],
                &[(channel::HEAT_POWER, heat), (channel::INTERNAL_POWER, p_int)],
                &[(functional::FREE_ENERGY, f)],
            )?;
            series.push(
                step,
                next.t,
                &[
                    Some(m),
                    Some(f),
                    Some(dissipation(&next, &p)?),
                    Some(p_int),
                    Some(p_dual),
                    Some(source_power),
                    Some(eq),
                    Some(bal),
                    Some(residual),
                ],
            );
            f_prev = f;
            Ok(next)
        })();
        match outcome {
            Ok(next) => {
                if next.out_of_soft_range() && !soft_warned {
                    run.notes.push(format!("|c| exceeded 1.5 at step {step}"));
                    soft_warned = true;
                }
                state = next;
            }
            Err(e) => {
                sim::integration_failure(&mut run, step, &e);
                break;
            }
        }
    }

    run.checks.push(mass.check("mass", "|∫c - ∫c₀| against 1e-12 max ∫|c| per 10³ steps"));
    run.checks.push(if forcing.is_none() {
        monotone.check("free_energy_monotone", "(ΔF/dt) / ((dt + h²) scale) per step")
    } else {
        CheckResult::not_applicable("free_energy_monotone", "a chemical source can raise the free energy")
    });
    run.checks.push(equivalence.check("power_equivalence", "|∫P_c^i - ∫(ċμ + M|∇μ|² - ∇·N)| / ((dt + h²) scale) per step"));
    run.checks.push(balance.check("power_balance", "|∫P_c^i - ∫P_c^e - ∫μs| / ((dt + h²) scale) per step"));
    run.checks.push(heat_form.check("heat_form", "reduced heat-equation residual / ((dt + h²) scale) with a lagged holding supply"));
    run.checks.push(growth_check(sc, &p, &state, &shapes, &modes, &amp0, forcing.is_none()));
    run.checks.extend(sim::cycle_checks(sc, &record, &timing, 1));
    run.checks.push(CheckResult::not_applicable("virtual_balance", "the chemical model exposes no virtual-power split"));
    run.select_checks(sc);
    run.series = series;
    run.record = Some(record.channel_table());
    let mu = chemical_potential(&state, &p)?;
    run.fields = vec![("c".into(), state.c), ("mu".into(), mu)];
    Ok(run)
}

fn growth_check(
    sc: &Scenario,
    p: &ChParams<f64>,
    state: &ChState<f64>,
    shapes: &[Field64],
    modes: &[i64],
    amp0: &[f64],
    unforced: bool,
) -> CheckResult {
    if sc.text("init.preset") != "modes" || !unforced || sc.real("init.mean") != 0.0 {
        return CheckResult::not_applicable("growth_rate", "needs init.preset = modes about c = 0 without a source");
    }
    if state.t <= 0.0 {
        return CheckResult::failed("growth_rate", "no time elapsed");
    }
    let grid = state.c.grid();
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for ((shape, &m), &a0) in shapes.iter().zip(modes).zip(amp0) {
        let a1 = match sim::project(&state.c, shape) {
            Ok(a) => a,
            Err(e) => return CheckResult::from_error("growth_rate", &e),
        };
        let measured = (a1 / a0).abs().ln() / state.t;
        let expected = p.growth_rate(sim::wave_number(grid, m));
        let err = ((measured - expected) / expected).abs();
        worst = worst.max(if err.is_nan() { f64::INFINITY } else { err });
        parts.push(format!("mode {m}: σ = {measured:.6e} vs {expected:.6e}"));
    }
    CheckResult::at_most("growth_rate", worst, tol::GROWTH_REL, format!("relative error, worst mode; {}", parts.join("; ")))
}
