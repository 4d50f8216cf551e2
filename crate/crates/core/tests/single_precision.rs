//! The models are generic over the scalar; spot-check them in `f32`.

use nlt_core::cahn_hilliard::{ch_step, ChParams, ChState, Mobility};
use nlt_core::field_ops::{div, volume_integral};
use nlt_core::gk_heat::{gk_step, GkParams, GkState};
use nlt_core::plate::{plate_energy, plate_step, PlateParams, PlateState};
use nlt_core::{Field32, Forcing, Grid32};

#[test]
fn uniform_gk_mode_decays_in_single_precision() {
    let g = Grid32::line(16, 1.0).unwrap();
    let p = GkParams::new(0.5f32, 0.01, 1.0, 1.0).unwrap();
    let mut s = GkState::new(Field32::constant(&g, 0, 1.0).unwrap(), Field32::constant(&g, 1, 0.3).unwrap(), 0.0)
        .unwrap();
    let dt = 0.01f32;
    for _ in 0..100 {
        s = gk_step(&s, &p, &Forcing::None, dt).unwrap();
    }
    let expect = 0.3f32 * (-1.0f32 / 0.5).exp();
    assert!((s.q.get(3, 0) - expect).abs() < 1e-5);
}

#[test]
fn cahn_hilliard_conserves_mass_in_single_precision() {
    let g = Grid32::line(32, std::f32::consts::TAU).unwrap();
    let p = ChParams::new(1.0f32, 1.0, 1.0, 0.5, Mobility::Constant(1.0)).unwrap();
    let mut s = ChState::new(Field32::scalar_fn(&g, |x| 0.1 * x[0].sin() + 0.05), 0.0).unwrap();
    let m0 = s.mass().unwrap();
    let dt = p.stable_dt(&g, 1.0);
    for _ in 0..50 {
        s = ch_step(&s, &p, &Forcing::None, dt).unwrap();
    }
    assert!((s.mass().unwrap() - m0).abs() < 1e-5);
}

#[test]
fn plate_energy_is_conserved_in_single_precision() {
    let g = Grid32::line(32, std::f32::consts::TAU).unwrap();
    let p = PlateParams::new(1.0f32, 1.0, 0.1, 0.0).unwrap();
    let dt = 0.5 * p.stable_dt(&g);
    let z = Field32::zeros(&g, 0).unwrap();
    let mut s = PlateState::new(Field32::scalar_fn(&g, |x| x[0].sin()), z.clone(), z, &p, dt).unwrap();
    let e0 = plate_energy(&s, &p).unwrap().total();
    for _ in 0..100 {
        s = plate_step(&s, &p, &Forcing::None, dt).unwrap();
    }
    assert!(((plate_energy(&s, &p).unwrap().total() - e0) / e0).abs() < 1e-4);
}

#[test]
fn divergence_theorem_in_single_precision() {
    let g = Grid32::square(16, 1.0).unwrap();
    let f = Field32::vector_fn(&g, |x| [(7.0 * x[0]).sin() + x[1], (3.0 * x[1]).cos() * x[0]]);
    let i = volume_integral(&div(&f).unwrap()).unwrap();
    assert!(i.abs() <= 10.0 * f32::EPSILON * f.norm_l1() / g.cell_volume());
}
