//! Quadrupole dielectric runs on a 2D grid.

use nlt_core::dielectric::{em_energy, em_heat_power_residual, em_powers, em_step, EmParams, EmState};
use nlt_core::field_ops::volume_integral;
use nlt_core::thermo_laws::{channel, functional, ProcessRecord};

use crate::checks::{tol, CheckResult, StepBound};
use crate::error::Result;
use crate::schema::Scenario;
use crate::sim::{self, ModelRun, Series};

const COLUMNS: &[&str] = &[
    "mode_amplitude",
    "energy",
    "internal_power",
    "classical_power",
    "external_power",
    "equivalence_constant",
    "heat_power_global",
    "heat_power_local",
];

pub fn run(sc: &Scenario) -> Result<ModelRun> {
    if sc.count("grid.dims") != 2 {
        return Err(sc.problem("the dielectric model needs grid.dims = 2"));
    }
    let grid = sim::grid(sc)?;
    let p = EmParams::new(sc.real("model.mu"), sc.real("model.eps0"), sc.real("model.eps1"), sc.real("model.eps2"))
        .map_err(|e| sc.problem(e.to_string()))?;
    let mut run = ModelRun::default();
    let c_disc = sc.discretization_c();
    let plane = sc.text("init.preset") == "plane_wave";
    let mode = sc.int("init.mode");
    let amplitude = sc.real("init.amplitude");
    let mut state = if plane {
        EmState::plane_wave(&grid, mode as i32, amplitude)?
    } else {
        EmState::gaussian_pulse(&grid, amplitude, sc.real("init.sigma"))?
    };
    let k = sim::wave_number(&grid, mode);
    let h = grid.spacing(0);
    let natural = plane.then(|| std::f64::consts::TAU / p.discrete_frequency(k, h));
    let timing = sim::timing(sc, p.stable_dt(&grid), natural, &mut run.notes)?;
    let dt = timing.dt;
    let hmin = grid.min_spacing();
    let shape = sim::mode_shape(&grid, mode);
    let amp = |s: &EmState<f64>| sim::project(&s.e.component_field(1), &shape);

    let e0 = em_energy(&state, &p)?;
    let mut series = Series::new(sc, COLUMNS);
    let mut cells = vec![None; COLUMNS.len()];
    cells[0] = Some(amp(&state)?);
    cells[1] = Some(e0);
    series.push(0, 0.0, &cells);
    let mut record = ProcessRecord::new("dielectric", dt, 0.0, vec![state.e.clone(), state.h.clone()], &[(functional::ENERGY, e0)])?
        .with_params(sc.model_params());
    let mut amplitudes = vec![cells[0].unwrap_or(0.0)];
    let mut drift = StepBound::default();
    let mut equivalence = StepBound::default();
    let mut external_null = StepBound::default();
    let mut global = StepBound::default();
    let mut local_max = 0.0f64;
    let mut local_step = 0;
    let quadrupole = p.eps1 + p.eps2 > 0.0;

    for step in 1..=timing.steps {
        let outcome = (|| -> nlt_core::Result<EmState<f64>> {
            let next = em_step(&state, &p, dt)?;
            let pw = em_powers(&state, &next, &p, dt)?;
            let p_int = pw.internal_integral()?;
            let p_ext = pw.external_integral()?;
            let classical = pw.term("classical").expect("classical");
            let p_cl = volume_integral(classical)?;
            let scale = pw.internal.norm_l1() + classical.norm_l1();
            let eq = sim::normalized(p_int - volume_integral(pw.term("dual").expect("dual"))?, dt, hmin, scale);
            equivalence.observe(step, eq, c_disc);
            let ext_scale = pw.external.norm_l1();
            external_null.observe(step, if ext_scale > 0.0 { p_ext.abs() / ext_scale } else { 0.0 }, tol::EXTERNAL_NULL_REL);
            let cmp = em_heat_power_residual(&state, &next, &p, dt)?;
            let g = if cmp.scale > 0.0 { cmp.global_difference.abs() / cmp.scale } else { 0.0 };
            global.observe(step, g, tol::HEAT_GLOBAL_REL);
            let local = if cmp.pointwise_scale > 0.0 { cmp.max_pointwise / cmp.pointwise_scale } else { 0.0 };
            if local > local_max {
                local_max = local;
                local_step = step;
            }
            let energy = em_energy(&next, &p)?;
            drift.observe(step, ((energy - e0) / e0).abs(), tol::ENERGY_DRIFT_REL);
            record.push(
                vec![next.e.clone(), next.h.clone()],
                &[(channel::HEAT_POWER, volume_integral(&cmp.h_new)?), (channel::INTERNAL_POWER, p_int)],
                &[(functional::ENERGY, energy)],
            )?;
            let a = amp(&next)?;
            amplitudes.push(a);
            series.push(step, next.t, &[Some(a), Some(energy), Some(p_int), Some(p_cl), Some(p_ext), Some(eq), Some(g), Some(local)]);
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

    run.checks.push(drift.check("energy_drift", "|E(t) - E(0)| / E(0)"));
    run.checks.push(if plane {
        sim::frequency_check(&amplitudes, dt, p.frequency(k), k * h, "continuum")
    } else {
        CheckResult::not_applicable("frequency", "needs init.preset = plane_wave")
    });
    run.checks.push(equivalence.check("power_equivalence", "|∫P^i - ∫(Ḋ·E + Ḃ·H - ∇·N)| / ((dt + h²) scale) per step"));
    run.checks.push(external_null.check("external_null", "|∫P^e| / ∫|P^e| per step"));
    run.checks.push(global.check("heat_power_global", "|∫(h_new - h_classical)| / ∫|classical| per step"));
    run.checks.push(if quadrupole {
        CheckResult::new(
            "extra_flux_local",
            local_max >= tol::EXTRA_FLUX_LOCAL_REL,
            local_max,
            tol::EXTRA_FLUX_LOCAL_REL,
            format!("largest max|h_new - h_classical| / max|classical| (at step {local_step}) must reach the tolerance"),
        )
    } else {
        CheckResult::at_most(
            "extra_flux_local",
            local_max,
            tol::EXTRA_FLUX_SIMPLE_REL,
            "simple material: the pointwise difference must vanish",
        )
    });
    run.checks.push(CheckResult::not_applicable("virtual_balance", "the dielectric exposes no virtual-power split"));
    run.select_checks(sc);
    run.series = series;
    run.record = Some(record.channel_table());
    run.fields = vec![("e".into(), state.e), ("h".into(), state.h)];
    Ok(run)
}
