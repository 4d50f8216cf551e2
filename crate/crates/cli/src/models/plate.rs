//! Kirchhoff plate runs, with rotary inertia or with memory.

use nlt_core::field_ops::{laplacian, volume_integral};
use nlt_core::plate::{
    plate_decomposition, plate_energy, plate_memory_powers, plate_powers, plate_step, PlateMemory, PlateParams, PlateState,
};
use nlt_core::thermo_laws::{channel, functional, random_virtual_pairs, reconstruct_potential, PotentialKind, ProcessRecord};
use nlt_core::{Field64, Grid64, PowerBreakdown};

use crate::checks::{tol, CheckResult, StepBound};
use crate::error::Result;
use crate::schema::Scenario;
use crate::sim::{self, ModelRun, Series};

const COLUMNS: &[&str] = &[
    "mode_amplitude",
    "kinetic_energy",
    "stored_energy",
    "total_energy",
    "internal_power",
    "external_power",
    "kinetic_power",
    "equivalence_constant",
    "balance_constant",
    "uncoupled_flux_gap",
];

fn params(sc: &Scenario) -> Result<PlateParams<f64>> {
    let rho = sc.real("model.rho");
    let c_th = sc.real("model.c_th");
    let memory = [sc.opt_real("model.memory.c0"), sc.opt_real("model.memory.c1"), sc.opt_real("model.memory.lambda")];
    let p = match (memory, sc.opt_real("model.a")) {
        ([None, None, None], Some(a)) => PlateParams::new(rho, a, sc.real("model.b"), c_th),
        ([None, None, None], None) => return Err(sc.problem("set model.a, or model.memory.c0/c1/lambda for the memory plate")),
        ([Some(c0), Some(c1), Some(lambda)], None) => {
            if sc.real("model.b") != 0.0 {
                return Err(sc.problem("the memory plate has no rotary inertia; leave model.b at 0"));
            }
            PlateParams::with_memory(rho, c_th, PlateMemory { c0, c1, lambda })
        }
        ([Some(_), Some(_), Some(_)], Some(_)) => {
            return Err(sc.problem("model.a is unused by the memory plate; its stiffness is model.memory.c0"))
        }
        _ => return Err(sc.problem("the memory plate needs all of model.memory.c0, c1 and lambda")),
    };
    p.map_err(|e| sc.problem(e.to_string()))
}

fn initial_fields(sc: &Scenario, grid: &Grid64) -> Result<(Field64, Field64)> {
    let a = sc.real("init.amplitude");
    let u = match sc.text("init.preset") {
        "mode" => sim::mode_shape(grid, sc.int("init.mode")).scale(a),
        "smooth" => {
            let (lx, ly) = (grid.length(0), grid.length(1));
            let two_d = grid.dims() == 2;
            Field64::scalar_fn(grid, |x| {
                let px = std::f64::consts::TAU * x[0] / lx;
                let py = std::f64::consts::TAU * x[1] / ly;
                a * (px.sin() + 0.5 * (2.0 * px).cos()) * if two_d { py.cos() } else { 1.0 }
            })
        }
        _ => Field64::zeros(grid, 0)?,
    };
    let theta = match sc.text("theta.preset") {
        "uniform" => Field64::constant(grid, 0, sc.real("theta.amplitude"))?,
        "sine" => sim::mode_shape(grid, sc.int("theta.mode")).scale(sc.real("theta.amplitude")),
        _ => Field64::zeros(grid, 0)?,
    };
    Ok((u, theta))
}

/// Stored energy including the static thermal coupling, `½∫[a(Δu)² + b|∇v|²] - c∫θΔu`.
fn stored(s: &PlateState<f64>, p: &PlateParams<f64>) -> nlt_core::Result<(f64, f64)> {
    let e = plate_energy(s, p)?;
    let coupling = p.c_th * volume_integral(&s.theta.scale_by(&laplacian(&s.u))?)?;
    Ok((e.kinetic, e.potential - coupling))
}

pub fn run(sc: &Scenario) -> Result<ModelRun> {
    let grid = sim::grid(sc)?;
    let p = params(sc)?;
    let memory = p.memory.is_some();
    let mut run = ModelRun::default();
    let c_disc = sc.discretization_c();
    let forcing = sim::forcing(sc, &grid);
    let (u0, theta) = initial_fields(sc, &grid)?;
    let single_mode = sc.text("init.preset") == "mode" && forcing.is_none() && !memory;
    let mode_k = sim::wave_number(&grid, sc.int("init.mode"));
    let h = grid.spacing(0);
    let natural = match sim::forcing_period(sc) {
        Some(t) => Some(t),
        None if single_mode => Some(std::f64::consts::TAU / p.discrete_frequency(mode_k, h)),
        None => None,
    };
    let stable = p.stable_dt(&grid);
    let mut run_notes = Vec::new();
    let timing = sim::timing(sc, stable, natural, &mut run_notes)?;
    run.notes.extend(run_notes);
    let dt = timing.dt;
    let hmin = grid.min_spacing();
    let mut state = PlateState::new(u0, Field64::zeros(&grid, 0)?, theta, &p, dt)?;
    let shape = sim::mode_shape(&grid, sc.int("init.mode"));

    let (k0, s0) = stored(&state, &p)?;
    let e0 = k0 + s0;
    let mut series = Series::new(sc, COLUMNS);
    let mut cells = vec![None; COLUMNS.len()];
    cells[0] = Some(sim::project(&state.u, &shape)?);
    cells[1] = Some(k0);
    cells[2] = Some(s0);
    cells[3] = Some(e0);
    series.push(0, 0.0, &cells);
    let mut record = ProcessRecord::new(
        "plate",
        dt,
        0.0,
        vec![state.u.clone(), state.v.clone()],
        &[(functional::ENERGY, s0)],
    )?
    .with_params(sc.model_params());

    let mut amplitudes = vec![cells[0].unwrap_or(0.0)];
    let mut drift = StepBound::default();
    let mut equivalence = StepBound::default();
    let mut balance = StepBound::default();
    let mut internal_scale = 0.0;

    for step in 1..=timing.steps {
        let outcome = (|| -> nlt_core::Result<PlateState<f64>> {
            let next = plate_step(&state, &p, &forcing, dt)?;
            let pw: PowerBreakdown<f64> = if memory {
                plate_memory_powers(&next, &p, &forcing.at(&grid, next.t))?
            } else {
                plate_powers(&state, &next, &p, &forcing, dt)?
            };
            let term = |k: &str| pw.term(k).expect("recorded term");
            let p_int = pw.internal_integral()?;
            let p_ext = pw.external_integral()?;
            let p_kin = volume_integral(term("kinetic"))?;
            let scale = pw.internal.norm_l1() + term("kinetic").norm_l1() + term("classical").norm_l1();
            let eq = sim::normalized(p_int - volume_integral(term("dual"))?, dt, hmin, scale);
            let bal = sim::normalized(p_kin + p_int - p_ext, dt, hmin, scale + pw.external.norm_l1());
            equivalence.observe(step, eq, c_disc);
            balance.observe(step, bal, c_disc);
            let (kin, sto) = stored(&next, &p)?;
            let total = kin + sto;
            drift.observe(step, ((total - e0) / e0).abs(), tol::ENERGY_DRIFT_REL);
            let gap = match (pw.term("n_prime_uncoupled"), pw.term("n_prime")) {
                (Some(a), Some(b)) => Some((a - b).max_abs()),
                _ => None,
            };
            let amp = sim::project(&next.u, &shape)?;
            record.push(
                vec![next.u.clone(), next.v.clone()],
                &[(channel::HEAT_POWER, 0.0), (channel::INTERNAL_POWER, p_int)],
                &[(functional::ENERGY, sto)],
            )?;
            internal_scale += p_int.abs() * dt;
            series.push(
                step,
                next.t,
                &[Some(amp), Some(kin), Some(sto), Some(total), Some(p_int), Some(p_ext), Some(p_kin), Some(eq), Some(bal), gap],
            );
            amplitudes.push(amp);
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

    run.checks.push(if forcing.is_none() && !memory {
        drift.check("energy_drift", "|E(t) - E(0)| / |E(0)|, E including the static thermal coupling")
    } else {
        CheckResult::not_applicable("energy_drift", "energy is conserved only by the unforced instantaneous plate")
    });
    let thermal_ok = matches!(sc.text("theta.preset"), "zero" | "uniform") || p.c_th == 0.0;
    run.checks.push(if single_mode && thermal_ok {
        let what = if p.b > 0.0 { "rotary-inertia symbol" } else { "continuum" };
        sim::frequency_check(&amplitudes, dt, p.frequency(mode_k), mode_k * h, what)
    } else {
        CheckResult::not_applicable("frequency", "needs a free single-mode run without a static thermal load")
    });
    run.checks.push(equivalence.check("power_equivalence", "|∫P_m^i - ∫(T·∇v - ∇·N)| / ((dt + h²) scale) per step"));
    run.checks.push(balance.check("power_balance", "|∫(ρvü + P_m^i - P_m^e)| / ((dt + h²) scale) per step"));
    run.checks.push(if memory {
        CheckResult::not_applicable("energy_reconstruction", "the memory plate has no closed-form stored energy")
    } else {
        match reconstruct_potential(&record, PotentialKind::Energy) {
            Ok(r) => {
                let e = record.functional(functional::ENERGY)?;
                let scale = internal_scale + e.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                CheckResult::at_most(
                    "energy_reconstruction",
                    r.violation(e)? / scale.max(f64::MIN_POSITIVE),
                    c_disc * (dt + hmin * hmin),
                    "max |Δe - ∫P_m^i dt| / scale along the run",
                )
            }
            Err(e) => CheckResult::from_error("energy_reconstruction", &e),
        }
    });
    run.checks.extend(sim::cycle_checks(sc, &record, &timing, if memory { 1 } else { 4 }));
    let f_final = forcing.at(&grid, state.t);
    run.checks.push(match plate_decomposition(&state, &p, &f_final) {
        Ok(d) => {
            let pairs = random_virtual_pairs(&grid, 0, 20, sc.seed(), 1.0)?;
            sim::virtual_check(Some(&d), None, &pairs, tol::VIRTUAL_C * hmin * hmin, "mechanical balance")
        }
        Err(e) => CheckResult::from_error("virtual_balance", &e),
    });
    run.select_checks(sc);
    run.series = series;
    run.record = Some(record.channel_table());
    run.fields = vec![("u".into(), state.u), ("v".into(), state.v), ("theta".into(), state.theta)];
    Ok(run)
}
