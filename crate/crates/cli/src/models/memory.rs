//! History-type conductor runs under a prescribed oscillating temperature.

use nlt_core::field_ops::{div, grad, volume_integral};
use nlt_core::memory_heat::{
    memory_decomposition, memory_entropy_action, memory_flux, psi2, psi2_rate_residual, update_history, HistoryBuffer,
    Kernel, OscillatingTemperature,
};
use nlt_core::thermo_laws::{
    channel, functional, pie_entropy_action, random_virtual_pairs, ColdnessJet, ProcessRecord,
};
use nlt_core::Field64;

use crate::checks::{tol, CheckResult, StepBound};
use crate::error::Result;
use crate::schema::Scenario;
use crate::sim::{self, ModelRun, Series};

const COLUMNS: &[&str] = &[
    "theta_mean",
    "heat_power",
    "entropy_action",
    "entropy_action_dual",
    "dual_path_error",
    "psi2",
    "psi2_rate",
    "psi2_bound",
];

/// Steps per period when `time.dt` and `time.periods` are both absent.
const DEFAULT_STEPS_PER_PERIOD: f64 = 200.0;

fn snapshot(theta: &Field64, buf: &HistoryBuffer<f64>) -> Vec<Field64> {
    let m = buf.m();
    vec![theta.clone(), buf.gbar(m / 2).clone(), buf.gbar(m).clone()]
}

pub fn run(sc: &Scenario) -> Result<ModelRun> {
    let grid = sim::grid(sc)?;
    let c_heat = sc.real("model.c_heat");
    if c_heat <= 0.0 {
        return Err(sc.problem("model.c_heat must be positive"));
    }
    let kernel = |name: &str| {
        Kernel::unconstrained(sc.real(&format!("model.{name}.amplitude")), sc.real(&format!("model.{name}.lambda")))
            .map_err(|e| sc.problem(format!("model.{name}: {e}")))
    };
    let (k1, k2) = (kernel("k1")?, kernel("k2")?);
    let osc = OscillatingTemperature::new(
        sc.real("theta.theta0"),
        sc.real("theta.amplitude"),
        sc.real("theta.omega"),
        [sc.int("theta.mode") as i32, 0],
    )
    .map_err(|e| sc.problem(e.to_string()))?;
    let mut run = ModelRun::default();
    for (name, k) in [("k1", &k1), ("k2", &k2)] {
        if !k.is_admissible() {
            run.notes.push(format!("{name}: amplitude {} is outside the admissible range k > 0", k.amplitude()));
        }
    }
    let period = osc.period();
    let timing = sim::timing(sc, period / DEFAULT_STEPS_PER_PERIOD, Some(period), &mut run.notes)?;
    let dt = timing.dt;

    let mut t = 0.0;
    let mut theta = osc.theta(&grid, t);
    let g0 = grad(&theta)?;
    let mut buf = match sc.opt_int("buffer.m") {
        Some(m) if m >= 1 => HistoryBuffer::new(&grid, dt, m as usize, g0)?,
        Some(m) => return Err(sc.problem(format!("buffer.m must be at least 1, got {m}"))),
        None => HistoryBuffer::for_kernels(&grid, dt, &[&k1, &k2], g0)?,
    };
    for (name, k) in [("k1", &k1), ("k2", &k2)] {
        if !buf.covers(k) {
            run.notes.push(format!("the history span {:e} is shorter than 5/lambda for {name}", buf.span()));
        }
    }

    let mut series = Series::new(sc, COLUMNS);
    let psi0 = psi2(&buf, &k1, &k2)?;
    let mut cells = vec![None; COLUMNS.len()];
    cells[0] = Some(volume_integral(&theta)? / grid.domain_volume());
    cells[5] = Some(psi0);
    series.push(0, 0.0, &cells);
    let mut record = ProcessRecord::new("memory_heat", dt, 0.0, snapshot(&theta, &buf), &[(functional::FREE_ENERGY, psi0)])?
        .with_params(sc.model_params());

    let mut dual = StepBound::default();
    let mut psi_rate = StepBound::default();
    let mut last_decomposition = None;

    for step in 1..=timing.steps {
        let outcome = (|| -> nlt_core::Result<(Field64, HistoryBuffer<f64>)> {
            let t_next = t + dt;
            let theta_next = osc.theta(&grid, t_next);
            let next = update_history(&buf, &grad(&theta_next)?, dt)?;
            let heating = osc.theta_rate(&grid, t_next).scale(c_heat);
            let action = memory_entropy_action(&next, &theta_next, &heating, &k1, &k2)?;
            let flux = memory_flux(&next, &theta_next, &k1, &k2)?;
            let supply = &heating + &div(&flux.q)?;
            let d = memory_decomposition(&next, &theta_next, &heating, &supply, &k1, &k2)?;
            let jet = ColdnessJet::from_temperature(&theta_next)?;
            let pie = pie_entropy_action(&d, &jet)?;
            let yardstick = action.max_abs().max(heating.scale_by(&jet.value)?.max_abs()).max(f64::MIN_POSITIVE);
            let err = (&action - &pie).max_abs() / yardstick;
            dual.observe(step, err, tol::DUAL_PATH_REL);
            let psi = psi2_rate_residual(&buf, &next, &theta, &theta_next, &k1, &k2, dt)?;
            psi_rate.observe(step, psi.residual, psi.tolerance);

            let a = volume_integral(&action)?;
            let heat = volume_integral(&heating)?;
            let psi_now = psi2(&next, &k1, &k2)?;
            record.push(
                snapshot(&theta_next, &next),
                &[(channel::HEAT_POWER, heat), (channel::INTERNAL_POWER, 0.0), (channel::ENTROPY_ACTION, a)],
                &[(functional::FREE_ENERGY, psi_now)],
            )?;
            series.push(
                step,
                t_next,
                &[
                    Some(volume_integral(&theta_next)? / grid.domain_volume()),
                    Some(heat),
                    Some(a),
                    Some(volume_integral(&pie)?),
                    Some(err),
                    Some(psi_now),
                    Some(psi.rate),
                    Some(psi.bound),
                ],
            );
            last_decomposition = Some(d);
            Ok((theta_next, next))
        })();
        match outcome {
            Ok((th, b)) => {
                theta = th;
                buf = b;
                t += dt;
            }
            Err(e) => {
                sim::integration_failure(&mut run, step, &e);
                break;
            }
        }
    }

    run.checks.push(dual.check("entropy_dual_path", "max |A(history) - A(virtual split)| / max|A| per step"));
    run.checks.push(psi_rate.check("psi2_rate", "dψ₂/dt - ∫RHS against dt (|rate| + |bound|) per step"));
    run.checks.extend(sim::cycle_checks(sc, &record, &timing, 1));
    run.checks.push(match &last_decomposition {
        Some(d) => {
            let pairs = random_virtual_pairs(&grid, 1, 20, sc.seed(), osc.theta0)?;
            sim::virtual_check(None, Some(d), &pairs, tol::VIRTUAL_EXACT_REL, "entropy balance with second-grade flux")
        }
        None => CheckResult::failed("virtual_balance", "no step completed"),
    });
    run.select_checks(sc);
    if sc.flag("output.history") {
        let mut out = Vec::new();
        buf.write_csv(&mut out).map_err(|e| crate::error::CliError::io("history.csv", e))?;
        run.extra_files.push(("history.csv".into(), String::from_utf8(out).expect("ascii")));
    }
    run.series = series;
    run.record = Some(record.channel_table());
    let flux = memory_flux(&buf, &theta, &k1, &k2)?;
    run.fields = vec![("theta".into(), theta), ("q".into(), flux.q)];
    Ok(run)
}
