use crate::field_ops::{Field, Grid};
use crate::scalar::Real;

/// Space–time source term (heat supply, body force or chemical source).
#[derive(Clone, Debug, PartialEq)]
pub enum Forcing<T> {
    None,
    Steady(Field<T>),
    /// `profile · sin(omega t + phase)`.
    Oscillating { profile: Field<T>, omega: T, phase: T },
}

impl<T: Real> Forcing<T> {
    pub fn at(&self, grid: &Grid<T>, t: T) -> Field<T> {
        match self {
            Forcing::None => Field::zeros(grid, 0).expect("rank 0"),
            Forcing::Steady(f) => f.clone(),
            Forcing::Oscillating { profile, omega, phase } => profile.scale((*omega * t + *phase).sin()),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Forcing::None)
    }
}
