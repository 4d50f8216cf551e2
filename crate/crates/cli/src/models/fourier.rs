//! Fourier conductor runs: the simple-material control.

use nlt_core::field_ops::volume_integral;
use nlt_core::fourier_heat::{fourier_decomposition, fourier_entropy_actions, fourier_flux, fourier_step, FourierParams};
use nlt_core::power::rate;
use nlt_core::thermo_laws::{channel, functional, random_virtual_pairs, ProcessRecord};
use nlt_core::Field64;

use crate::checks::{tol, CheckResult, StepBound};
use crate::error::Result;
use crate::schema::Scenario;
use crate::sim::{self, ModelRun, Series};

const COLUMNS: &[&str] = &["energy", "entropy", "entropy_action", "external_action", "balance_constant", "second_law_margin"];

fn entropy(theta: &Field64, c: f64) -> nlt_core::Result<f64> {
    Ok(c * volume_integral(&theta.map(f64::ln))?)
}

pub fn run(sc: &Scenario) -> Result<ModelRun> {
    let grid = sim::grid(sc)?;
    let p = FourierParams::new(sc.real("model.conductivity"), sc.real("model.c_heat")).map_err(|e| sc.problem(e.to_string()))?;
    let mut run = ModelRun::default();
    let c_disc = sc.discretization_c();
    let forcing = sim::forcing(sc, &grid);
    let theta0 = sc.real("init.theta0");
    let a = sc.real("init.theta_amplitude");
    let (lx, ly) = (grid.length(0), grid.length(1));
    let two_d = grid.dims() == 2;
    let mut theta = Field64::scalar_fn(&grid, |x| {
        let px = std::f64::consts::TAU * x[0] / lx;
        let py = std::f64::consts::TAU * x[1] / ly;
        theta0 * (1.0 + a * px.sin() * if two_d { py.cos() } else { 1.0 })
    });
    if theta.min_value() <= 0.0 {
        return Err(sc.problem("init.theta0 and init.theta_amplitude give a non-positive temperature"));
    }
    let timing = sim::timing(sc, p.stable_dt(&grid), sim::forcing_period(sc), &mut run.notes)?;
    let dt = timing.dt;
    let h = grid.min_spacing();
    let mut t = 0.0;

    let mut series = Series::new(sc, COLUMNS);
    let e0 = p.c_heat * volume_integral(&theta)?;
    let s0 = entropy(&theta, p.c_heat)?;
    series.push(0, 0.0, &[Some(e0), Some(s0), None, None, None, None]);
    let mut record = ProcessRecord::new(
        "fourier",
        dt,
        0.0,
        vec![theta.clone()],
        &[(functional::ENERGY, e0), (functional::ENTROPY, s0)],
    )?
    .with_params(sc.model_params());
    let mut second_law = StepBound::default();
    let mut balance = StepBound::default();

    for step in 1..=timing.steps {
        let outcome = (|| -> nlt_core::Result<Field64> {
            let next = fourier_step(&theta, t, &p, &forcing, dt)?;
            let actions = fourier_entropy_actions((&theta, t), (&next, t + dt), &p, &forcing, dt)?;
            let a_int = actions.internal_integral()?;
            let a_ext = actions.external_integral()?;
            let thermal = actions.term("thermal").expect("thermal");
            let production = actions.term("production").expect("production");
            let scale = thermal.norm_l1() + production.norm_l1();
            // The classical Second Law: dη/dt - A^i = production ≥ 0 pointwise.
            let rate_eta = rate(&theta.map(f64::ln), &next.map(f64::ln), dt)?.scale(p.c_heat);
            let residual = &rate_eta - &actions.internal;
            let margin = residual.min_value() / thermal.max_abs().max(production.max_abs()).max(f64::MIN_POSITIVE);
            second_law.observe(step, -margin, tol::SECOND_LAW_REL);
            let bal = sim::normalized(a_int - a_ext, dt, h, scale + actions.external.norm_l1());
            balance.observe(step, bal, c_disc);
            let energy = p.c_heat * volume_integral(&next)?;
            let eta = entropy(&next, p.c_heat)?;
            let heat = p.c_heat * volume_integral(&rate(&theta, &next, dt)?)?;
            record.push(
                vec![next.clone()],
                &[(channel::HEAT_POWER, heat), (channel::INTERNAL_POWER, 0.0), (channel::ENTROPY_ACTION, a_int)],
                &[(functional::ENERGY, energy), (functional::ENTROPY, eta)],
            )?;
            series.push(step, t + dt, &[Some(energy), Some(eta), Some(a_int), Some(a_ext), Some(bal), Some(margin)]);
            Ok(next)
        })();
        match outcome {
            Ok(next) => {
                theta = next;
                t += dt;
            }
            Err(e) => {
                sim::integration_failure(&mut run, step, &e);
                break;
            }
        }
    }

    run.checks.push(second_law.check("second_law", "-min(dη/dt - A_en^i) / scale, pointwise per step"));
    run.checks.push(balance.check("entropy_balance", "|∫A_en^i - ∫A_en^e| / ((dt + h²) scale) per step"));
    run.checks.extend(sim::cycle_checks(sc, &record, &timing, 1));
    let r_final = forcing.at(&grid, t);
    run.checks.push(match fourier_decomposition(&theta, &p, &r_final) {
        Ok(d) => {
            let pairs = random_virtual_pairs(&grid, 1, 20, sc.seed(), theta0)?;
            sim::virtual_check(None, Some(&d), &pairs, tol::VIRTUAL_EXACT_REL, "entropy balance, simple material")
        }
        Err(e) => CheckResult::from_error("virtual_balance", &e),
    });
    run.select_checks(sc);
    run.series = series;
    run.record = Some(record.channel_table());
    let q = fourier_flux(&theta, &p)?;
    run.fields = vec![("theta".into(), theta), ("q".into(), q)];
    Ok(run)
}
