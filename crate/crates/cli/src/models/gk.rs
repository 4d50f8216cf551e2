//! Guyer–Krumhansl conductor runs.

use nlt_core::field_ops::volume_integral;
use nlt_core::gk_heat::{gk_decomposition, gk_entropy_actions, gk_second_law_residual, gk_step, GkParams, GkState};
use nlt_core::power::rate;
use nlt_core::thermo_laws::{channel, functional, random_virtual_pairs, reconstruct_potential, PotentialKind, ProcessRecord};
use nlt_core::{Field64, Grid64};

use crate::checks::{tol, CheckResult, StepBound};
use crate::error::Result;
use crate::schema::Scenario;
use crate::sim::{self, ModelRun, Series};

const COLUMNS: &[&str] = &[
    "energy",
    "entropy",
    "entropy_action",
    "external_action",
    "production",
    "equivalence_constant",
    "balance_constant",
    "second_law_margin",
    "q_decay_error",
];

fn initial_state(sc: &Scenario, grid: &Grid64) -> Result<GkState<f64>> {
    let theta0 = sc.real("init.theta0");
    let a = sc.real("init.theta_amplitude");
    let q0 = sc.real("init.q0");
    let (lx, ly) = (grid.length(0), grid.length(1));
    let two_d = grid.dims() == 2;
    let (theta, q) = match sc.text("init.preset") {
        "uniform" => (Field64::constant(grid, 0, theta0)?, Field64::vector_fn(grid, |_| [q0, 0.0])),
        "rest" => (Field64::constant(grid, 0, theta0)?, Field64::zeros(grid, 1)?),
        _ => {
            let phase = |x: [f64; 2]| (std::f64::consts::TAU * x[0] / lx, std::f64::consts::TAU * x[1] / ly);
            let theta = Field64::scalar_fn(grid, |x| {
                let (px, py) = phase(x);
                theta0 * (1.0 + a * px.sin() * if two_d { py.cos() } else { 1.0 })
            });
            let q = Field64::vector_fn(grid, |x| {
                let (px, py) = phase(x);
                [q0 * (px.sin() + 0.5 * (2.0 * py).cos()), if two_d { q0 * (px + py).cos() } else { 0.0 }]
            });
            (theta, q)
        }
    };
    Ok(GkState::new(theta, q, 0.0)?)
}

pub fn run(sc: &Scenario) -> Result<ModelRun> {
    let grid = sim::grid(sc)?;
    let p = GkParams::unconstrained(
        sc.real("model.tau_r"),
        sc.real("model.tau_n"),
        sc.real("model.c0"),
        sc.real("model.c_heat"),
    )
    .map_err(|e| sc.problem(e.to_string()))?;
    let mut run = ModelRun::default();
    let c_disc = sc.discretization_c();
    if !p.is_admissible() {
        run.notes.push(format!("tau_n = {} is outside the admissible range tau_n > 0", p.tau_n));
    }
    let forcing = sim::forcing(sc, &grid);
    let mut state = initial_state(sc, &grid)?;
    let timing = sim::timing(sc, p.stable_dt(&grid, state.theta.min_value()), sim::forcing_period(sc), &mut run.notes)?;
    let dt = timing.dt;
    let h = grid.min_spacing();
    let uniform = sc.text("init.preset") == "uniform" && forcing.is_none();
    let q0 = sc.real("init.q0");

    let mut series = Series::new(sc, COLUMNS);
    let energy0 = state.energy(&p)?;
    let entropy0 = state.entropy(&p)?;
    let mut cells = vec![None; COLUMNS.len()];
    cells[0] = Some(energy0);
    cells[1] = Some(entropy0);
    if uniform {
        cells[8] = Some(0.0);
    }
    series.push(0, 0.0, &cells);
    let mut record = ProcessRecord::new(
        "gk",
        dt,
        0.0,
        vec![state.theta.clone(), state.q.clone()],
        &[(functional::ENERGY, energy0), (functional::ENTROPY, entropy0)],
    )?
    .with_params(sc.model_params());

    let mut second_law = StepBound::default();
    let mut equivalence = StepBound::default();
    let mut balance = StepBound::default();
    let mut decay = StepBound::default();
    let mut trace = Vec::new();
    let mut action_scale = 0.0;

    for step in 1..=timing.steps {
        let outcome = (|| -> nlt_core::Result<GkState<f64>> {
            let next = gk_step(&state, &p, &forcing, dt)?;
            let actions = gk_entropy_actions(&state, &next, &p, &forcing, dt)?;
            let term = |k: &str| actions.term(k).expect("recorded term");
            let a_int = actions.internal_integral()?;
            let a_ext = actions.external_integral()?;
            let scale = ["thermal", "kinetic", "production"].iter().map(|k| term(k).norm_l1()).sum::<f64>();
            let eq = sim::normalized(a_int - volume_integral(term("hybrid"))?, dt, h, scale);
            let bal = sim::normalized(a_int - a_ext, dt, h, scale + term("supply").norm_l1());
            equivalence.observe(step, eq, c_disc);
            balance.observe(step, bal, c_disc);
            let residual = gk_second_law_residual(&state, &next, &p, &forcing, dt)?;
            let margin = residual.min / residual.scale;
            second_law.observe(step, -margin, tol::SECOND_LAW_REL);

            let t = next.t;
            let mut decay_err = None;
            if uniform {
                let expect = q0 * (-t / p.tau_r).exp();
                let worst = (0..next.q.nodes())
                    .map(|i| (next.q.get(i, 0) - expect).abs().max(if grid.dims() == 2 { next.q.get(i, 1).abs() } else { 0.0 }))
                    .fold(0.0, f64::max);
                let err = worst / q0.abs();
                decay.observe(step, err, tol::UNIFORM_DECAY_REL);
                trace.push([t, err]);
                decay_err = Some(err);
            }

            let energy = next.energy(&p)?;
            let entropy = next.entropy(&p)?;
            let heat = p.c_heat * volume_integral(&rate(&state.theta, &next.theta, dt)?)?;
            record.push(
                vec![next.theta.clone(), next.q.clone()],
                &[(channel::HEAT_POWER, heat), (channel::INTERNAL_POWER, 0.0), (channel::ENTROPY_ACTION, a_int)],
                &[(functional::ENERGY, energy), (functional::ENTROPY, entropy)],
            )?;
            action_scale += a_int.abs() * dt;
            series.push(
                step,
                t,
                &[
                    Some(energy),
                    Some(entropy),
                    Some(a_int),
                    Some(a_ext),
                    Some(volume_integral(term("production"))?),
                    Some(eq),
                    Some(bal),
                    Some(margin),
                    decay_err,
                ],
            );
            Ok(next)
        })();
        match outcome {
            Ok(next) => state = next,
            Err(e) => {
                sim::integration_failure(&mut run, step, &e);
                break;
            }
        }
    }

    let mut checks = vec![
        second_law.check("second_law", "-min(dη/dt - A_en^i) / scale, pointwise per step"),
        equivalence.check("power_equivalence", "|∫A_en^i - ∫(classical - ∇·Φ′)| / ((dt + h²) scale) per step"),
        balance.check("entropy_balance", "|∫A_en^i - ∫A_en^e| / ((dt + h²) scale) per step"),
    ];
    checks.push(if uniform {
        decay.check("uniform_decay", "max |q - q₀ exp(-t/τ_R)| / |q₀|")
    } else {
        CheckResult::not_applicable("uniform_decay", "needs init.preset = uniform without forcing")
    });
    if uniform {
        run.traces.insert("q_decay_error".into(), trace);
    }
    checks.push(match reconstruct_potential(&record, PotentialKind::Entropy) {
        Ok(r) => {
            let eta = record.functional(functional::ENTROPY)?;
            let scale = action_scale + eta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            CheckResult::at_most(
                "entropy_reconstruction",
                r.violation(eta)?,
                tol::RECONSTRUCTION_REL * scale,
                "largest excess of ∫∫A_en^i dt over Δη along the run",
            )
        }
        Err(e) => CheckResult::from_error("entropy_reconstruction", &e),
    });
    checks.extend(sim::cycle_checks(sc, &record, &timing, 1));
    let r_final = forcing.at(&grid, state.t);
    checks.push(match gk_decomposition(&state, &p, &r_final) {
        Ok(d) => {
            let pairs = random_virtual_pairs(&grid, 1, 20, sc.seed(), sc.real("init.theta0"))?;
            sim::virtual_check(None, Some(&d), &pairs, tol::VIRTUAL_EXACT_REL, "entropy balance")
        }
        Err(e) => CheckResult::from_error("virtual_balance", &e),
    });
    run.checks.extend(checks);
    run.select_checks(sc);
    run.series = series;
    run.record = Some(record.channel_table());
    run.fields = vec![("theta".into(), state.theta), ("q".into(), state.q)];
    Ok(run)
}
