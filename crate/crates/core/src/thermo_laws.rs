//! Processes, cycles and the three Laws as numerical checks, plus the virtual
//! power / entropy-action balance.
//!
//! A [`ProcessRecord`] is an ordered list of state snapshots with a uniform
//! step. Each step interval carries volume-integrated *channels* (internal
//! power, heat power, internal entropy action) and each snapshot may carry
//! scalar *functionals* (energy, entropy, free energy) used as oracles.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field_ops::{contract, grad, grad2, inner, outer, volume_integral, Field, Grid};
use crate::scalar::Real;

/// Channel names recorded per step interval.
pub mod channel {
    /// `∫ P_m^i dx`.
    pub const INTERNAL_POWER: &str = "internal_power";
    /// `∫ ρh dx`.
    pub const HEAT_POWER: &str = "heat_power";
    /// `∫ A_en^i dx`.
    pub const ENTROPY_ACTION: &str = "entropy_action";
}

/// Functional names recorded per snapshot.
pub mod functional {
    pub const ENERGY: &str = "energy";
    pub const ENTROPY: &str = "entropy";
    pub const FREE_ENERGY: &str = "free_energy";
}

/// Default relative closure error below which a record counts as a cycle.
pub const DEFAULT_CLOSURE_TOL: f64 = 1e-4;
/// Relative endpoint mismatch tolerated by [`compose`].
pub const COMPOSE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessRecord<T> {
    pub model: String,
    pub params: BTreeMap<String, f64>,
    dt: T,
    t0: T,
    snapshots: Vec<Vec<Field<T>>>,
    channels: BTreeMap<String, Vec<T>>,
    functionals: BTreeMap<String, Vec<T>>,
}

/// Serializable channel table of a record (snapshots are not included).
#[derive(Clone, Debug, Serialize)]
pub struct ChannelTable {
    pub model: String,
    pub params: BTreeMap<String, f64>,
    pub dt: f64,
    pub t0: f64,
    pub steps: usize,
    pub channels: BTreeMap<String, Vec<f64>>,
    pub functionals: BTreeMap<String, Vec<f64>>,
}

impl<T: Real> ProcessRecord<T> {
    /// Starts a record at `initial`, with the functionals evaluated there.
    pub fn new(
        model: impl Into<String>,
        dt: T,
        t0: T,
        initial: Vec<Field<T>>,
        functionals: &[(&str, T)],
    ) -> Result<Self> {
        if !(dt > T::zero()) {
            return Err(Error::InvalidParameter(format!("process step must be positive, got {dt}")));
        }
        if initial.is_empty() {
            return Err(Error::ProcessMismatch("snapshot without fields".into()));
        }
        Ok(ProcessRecord {
            model: model.into(),
            params: BTreeMap::new(),
            dt,
            t0,
            snapshots: vec![initial],
            channels: BTreeMap::new(),
            functionals: functionals.iter().map(|(k, v)| (k.to_string(), vec![*v])).collect(),
        })
    }

    /// The empty process, identity for [`compose`].
    pub fn empty(model: impl Into<String>, dt: T) -> Self {
        ProcessRecord {
            model: model.into(),
            params: BTreeMap::new(),
            dt,
            t0: T::zero(),
            snapshots: Vec::new(),
            channels: BTreeMap::new(),
            functionals: BTreeMap::new(),
        }
    }

    pub fn with_params(mut self, params: impl IntoIterator<Item = (String, f64)>) -> Self {
        self.params.extend(params);
        self
    }

    /// Appends one step: the new snapshot, its interval channels and its functionals.
    ///
    /// The set of channel and functional names is fixed by the first call.
    pub fn push(&mut self, snapshot: Vec<Field<T>>, channels: &[(&str, T)], functionals: &[(&str, T)]) -> Result<()> {
        let last = self.snapshots.last().ok_or_else(|| Error::ProcessMismatch("push onto empty record".into()))?;
        if snapshot.len() != last.len() || snapshot.iter().zip(last).any(|(a, b)| a.same_shape("push", b).is_err()) {
            return Err(Error::ProcessMismatch("snapshot layout differs from the previous one".into()));
        }
        let steps = self.steps();
        if steps == 0 {
            for (k, _) in channels {
                self.channels.insert(k.to_string(), Vec::new());
            }
        }
        check_names("channel", &self.channels, channels)?;
        check_names("functional", &self.functionals, functionals)?;
        for (k, v) in channels {
            self.channels.get_mut(*k).expect("checked").push(*v);
        }
        for (k, v) in functionals {
            self.functionals.get_mut(*k).expect("checked").push(*v);
        }
        self.snapshots.push(snapshot);
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    /// Number of step intervals.
    pub fn steps(&self) -> usize {
        self.snapshots.len().saturating_sub(1)
    }

    pub fn duration(&self) -> T {
        self.dt * T::from_usize_lossy(self.steps())
    }

    pub fn snapshots(&self) -> &[Vec<Field<T>>] {
        &self.snapshots
    }

    pub fn channel(&self, name: &str) -> Result<&[T]> {
        self.channels.get(name).map(|v| v.as_slice()).ok_or_else(|| Error::MissingChannel(name.into()))
    }

    pub fn functional(&self, name: &str) -> Result<&[T]> {
        self.functionals.get(name).map(|v| v.as_slice()).ok_or_else(|| Error::MissingChannel(name.into()))
    }

    pub fn has_channel(&self, name: &str) -> bool {
        self.channels.contains_key(name)
    }

    pub fn channel_table(&self) -> ChannelTable {
        let conv = |m: &BTreeMap<String, Vec<T>>| {
            m.iter().map(|(k, v)| (k.clone(), v.iter().map(|x| x.as_f64()).collect())).collect()
        };
        ChannelTable {
            model: self.model.clone(),
            params: self.params.clone(),
            dt: self.dt.as_f64(),
            t0: self.t0.as_f64(),
            steps: self.steps(),
            channels: conv(&self.channels),
            functionals: conv(&self.functionals),
        }
    }

    /// Relative sup-norm distance between the first and last snapshot.
    ///
    /// Each field's difference is measured against that field's largest
    /// magnitude along the whole record, and the worst field is reported.
    pub fn closure_error(&self) -> Result<T> {
        let (first, last) = match (self.snapshots.first(), self.snapshots.last()) {
            (Some(a), Some(b)) if self.snapshots.len() >= 2 => (a, b),
            _ => return Err(Error::ProcessMismatch("a cycle needs at least two snapshots".into())),
        };
        let mut worst = T::zero();
        for f in 0..first.len() {
            let scale = self.snapshots.iter().map(|s| s[f].max_abs()).fold(T::zero(), T::max);
            let diff = (&last[f] - &first[f]).max_abs();
            if diff > T::zero() {
                worst = worst.max(if scale > T::zero() { diff / scale } else { T::infinity() });
            }
        }
        Ok(worst)
    }
}

fn check_names<T>(what: &str, have: &BTreeMap<String, Vec<T>>, given: &[(&str, T)]) -> Result<()> {
    let same = have.len() == given.len() && given.iter().all(|(k, _)| have.contains_key(*k));
    if same {
        Ok(())
    } else {
        Err(Error::ProcessMismatch(format!("{what} names differ from the record's")))
    }
}

fn snapshot_distance<T: Real>(a: &[Field<T>], b: &[Field<T>]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::ProcessMismatch("snapshots hold different numbers of fields".into()));
    }
    let mut worst = T::zero();
    for (x, y) in a.iter().zip(b) {
        x.same_shape("compose", y).map_err(|_| Error::ProcessMismatch("snapshot layouts differ".into()))?;
        let scale = x.max_abs().max(y.max_abs());
        let diff = (x - y).max_abs();
        if diff > T::zero() {
            worst = worst.max(diff / scale);
        }
    }
    Ok(worst)
}

/// `P1 ⋆ P2`: runs `p1` then `p2`. The empty record is a two-sided identity.
pub fn compose<T: Real>(p1: &ProcessRecord<T>, p2: &ProcessRecord<T>) -> Result<ProcessRecord<T>> {
    if p2.is_empty() {
        return Ok(p1.clone());
    }
    if p1.is_empty() {
        return Ok(p2.clone());
    }
    if p1.dt != p2.dt {
        return Err(Error::ProcessMismatch(format!("step sizes differ: {} vs {}", p1.dt, p2.dt)));
    }
    let gap = snapshot_distance(p1.snapshots.last().expect("non-empty"), &p2.snapshots[0])?;
    if gap > T::lit(COMPOSE_TOL) {
        return Err(Error::ProcessMismatch(format!("endpoints differ by {gap:e} (relative)")));
    }
    let names = |m: &BTreeMap<String, Vec<T>>| m.keys().cloned().collect::<Vec<_>>();
    let channels_match = p1.steps() == 0 || p2.steps() == 0 || names(&p1.channels) == names(&p2.channels);
    if !channels_match || names(&p1.functionals) != names(&p2.functionals) {
        return Err(Error::ProcessMismatch("channel sets differ".into()));
    }
    let mut out = p1.clone();
    out.snapshots.extend(p2.snapshots[1..].iter().cloned());
    if p1.steps() == 0 {
        out.channels = p2.channels.clone();
    } else {
        for (k, v) in &p2.channels {
            out.channels.get_mut(k).expect("matched").extend_from_slice(v);
        }
    }
    for (k, v) in &p2.functionals {
        out.functionals.get_mut(k).expect("matched").extend_from_slice(&v[1..]);
    }
    Ok(out)
}

/// `P_[t1, t2)`, with times measured from the start of the process.
pub fn restrict<T: Real>(p: &ProcessRecord<T>, t1: T, t2: T) -> Result<ProcessRecord<T>> {
    let index = |t: T| -> Result<usize> {
        let x = t / p.dt;
        let k = x.round();
        if (x - k).abs() > T::lit(1e-9) * k.abs().max(T::one()) || k < T::zero() {
            return Err(Error::ProcessMismatch(format!("time {t} is not on the step grid")));
        }
        Ok(k.to_usize().expect("non-negative"))
    };
    let (i1, i2) = (index(t1)?, index(t2)?);
    if i1 >= i2 || i2 > p.steps() {
        return Err(Error::ProcessMismatch(format!("window [{t1}, {t2}] outside [0, {}]", p.duration())));
    }
    Ok(ProcessRecord {
        model: p.model.clone(),
        params: p.params.clone(),
        dt: p.dt,
        t0: p.t0 + p.dt * T::from_usize_lossy(i1),
        snapshots: p.snapshots[i1..=i2].to_vec(),
        channels: p.channels.iter().map(|(k, v)| (k.clone(), v[i1..i2].to_vec())).collect(),
        functionals: p.functionals.iter().map(|(k, v)| (k.clone(), v[i1..=i2].to_vec())).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycleSettings<T> {
    pub closure_tol: T,
    /// Constant `C` in the tolerances `C (closure + dt^p) scale`.
    pub coefficient: T,
    /// Time order `p` of the First-Law allowance.
    pub first_law_order: i32,
}

impl<T: Real> Default for CycleSettings<T> {
    fn default() -> Self {
        CycleSettings { closure_tol: T::lit(DEFAULT_CLOSURE_TOL), coefficient: T::one(), first_law_order: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CycleCheck<T> {
    pub value: T,
    pub tolerance: T,
    /// `∮ |integrand| dt`, the magnitude the tolerance is relative to.
    pub scale: T,
    pub pass: bool,
    /// The inequality holds with margin: the value lies beyond the tolerance on the allowed side.
    pub strict: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleReport<T> {
    pub closure_error: T,
    pub closure_tol: T,
    pub first_law: Option<CycleCheck<T>>,
    pub second_law: Option<CycleCheck<T>>,
    pub dissipation: Option<CycleCheck<T>>,
}

impl<T: Real> CycleReport<T> {
    pub fn all_pass(&self) -> bool {
        [&self.first_law, &self.second_law, &self.dissipation].iter().all(|c| c.is_none_or(|c| c.pass))
    }
}

fn ensure_cycle<T: Real>(p: &ProcessRecord<T>, s: &CycleSettings<T>) -> Result<T> {
    let closure = p.closure_error()?;
    if closure <= s.closure_tol {
        Ok(closure)
    } else {
        Err(Error::NotACycle { closure: closure.as_f64(), tolerance: s.closure_tol.as_f64() })
    }
}

/// `Σ integrand dt` and `Σ |integrand| dt` over the intervals of one or more channels.
fn cyclic<T: Real>(p: &ProcessRecord<T>, names: &[&str]) -> Result<(T, T)> {
    let series = names.iter().map(|n| p.channel(n)).collect::<Result<Vec<_>>>()?;
    let mut value = T::zero();
    let mut scale = T::zero();
    for k in 0..p.steps() {
        let v: T = series.iter().map(|s| s[k]).sum();
        value += v * p.dt;
        scale += v.abs() * p.dt;
    }
    Ok((value, scale))
}

/// `∮ (ρh + P_m^i) dt`; passes when `|value| ≤ C (closure + dt^p) scale`.
pub fn first_law_cycle<T: Real>(p: &ProcessRecord<T>, s: &CycleSettings<T>) -> Result<CycleCheck<T>> {
    let closure = ensure_cycle(p, s)?;
    let (value, scale) = cyclic(p, &[channel::HEAT_POWER, channel::INTERNAL_POWER])?;
    let tolerance = s.coefficient * (closure + p.dt.powi(s.first_law_order)) * scale;
    Ok(CycleCheck { value, tolerance, scale, pass: value.abs() <= tolerance, strict: false })
}

/// `∮ A_en^i dt`; passes when `value ≤ C (closure + dt) scale`.
pub fn second_law_cycle<T: Real>(p: &ProcessRecord<T>, s: &CycleSettings<T>) -> Result<CycleCheck<T>> {
    let closure = ensure_cycle(p, s)?;
    let (value, scale) = cyclic(p, &[channel::ENTROPY_ACTION])?;
    let tolerance = s.coefficient * (closure + p.dt) * scale;
    Ok(CycleCheck { value, tolerance, scale, pass: value <= tolerance, strict: value < -tolerance })
}

/// `∮ P_m^i dt`; passes when `value ≥ -C (closure + dt) scale`.
pub fn dissipation_cycle<T: Real>(p: &ProcessRecord<T>, s: &CycleSettings<T>) -> Result<CycleCheck<T>> {
    let closure = ensure_cycle(p, s)?;
    let (value, scale) = cyclic(p, &[channel::INTERNAL_POWER])?;
    let tolerance = s.coefficient * (closure + p.dt) * scale;
    Ok(CycleCheck { value, tolerance, scale, pass: value >= -tolerance, strict: value > tolerance })
}

/// Runs every cyclic check whose channels the record carries.
pub fn cycle_report<T: Real>(p: &ProcessRecord<T>, s: &CycleSettings<T>) -> Result<CycleReport<T>> {
    let closure_error = ensure_cycle(p, s)?;
    let first_law = if p.has_channel(channel::HEAT_POWER) && p.has_channel(channel::INTERNAL_POWER) {
        Some(first_law_cycle(p, s)?)
    } else {
        None
    };
    let second_law = p.has_channel(channel::ENTROPY_ACTION).then(|| second_law_cycle(p, s)).transpose()?;
    let dissipation = p.has_channel(channel::INTERNAL_POWER).then(|| dissipation_cycle(p, s)).transpose()?;
    Ok(CycleReport { closure_error, closure_tol: s.closure_tol, first_law, second_law, dissipation })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PotentialKind {
    Energy,
    Entropy,
    FreeEnergy,
}

/// How a reconstructed series relates to the true potential difference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    /// `Δe` equals the series.
    Equal,
    /// `Δη ≥` the series.
    LowerBound,
    /// `Δψ ≤` the series.
    UpperBound,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction<T> {
    pub kind: PotentialKind,
    pub relation: Relation,
    /// Cumulative integral anchored at 0 on the first snapshot.
    pub values: Vec<T>,
}

impl<T: Real> Reconstruction<T> {
    /// Largest violation of the relation against a functional series `f`, anchored at `f[0]`.
    pub fn violation(&self, f: &[T]) -> Result<T> {
        if f.len() != self.values.len() {
            return Err(Error::ProcessMismatch("series lengths differ".into()));
        }
        let mut worst = T::zero();
        for (r, &v) in self.values.iter().zip(f) {
            let delta = v - f[0];
            let bad = match self.relation {
                Relation::Equal => (delta - *r).abs(),
                Relation::LowerBound => *r - delta,
                Relation::UpperBound => delta - *r,
            };
            worst = worst.max(bad);
        }
        Ok(worst)
    }
}

/// Cumulative time integral of the integrand belonging to `kind`.
pub fn reconstruct_potential<T: Real>(p: &ProcessRecord<T>, kind: PotentialKind) -> Result<Reconstruction<T>> {
    let (names, relation): (&[&str], _) = match kind {
        PotentialKind::Energy => (&[channel::HEAT_POWER, channel::INTERNAL_POWER], Relation::Equal),
        PotentialKind::Entropy => (&[channel::ENTROPY_ACTION], Relation::LowerBound),
        PotentialKind::FreeEnergy => (&[channel::INTERNAL_POWER], Relation::UpperBound),
    };
    let series = names.iter().map(|n| p.channel(n)).collect::<Result<Vec<_>>>()?;
    if p.is_empty() {
        return Err(Error::ProcessMismatch("empty record".into()));
    }
    let mut values = Vec::with_capacity(p.steps() + 1);
    let mut acc = T::zero();
    values.push(acc);
    for k in 0..p.steps() {
        acc += series.iter().map(|s| s[k]).sum::<T>() * p.dt;
        values.push(acc);
    }
    Ok(Reconstruction { kind, relation, values })
}

/// Mechanical part of a model's virtual-power split: inertia `ρü`, stresses
/// `T₂` (rank of `v` + 1) and `T₃` (rank of `v` + 2), and body force `ρf`.
#[derive(Clone, Debug, PartialEq)]
pub struct MechanicalDecomposition<T> {
    pub inertia: Field<T>,
    pub t2: Option<Field<T>>,
    pub t3: Option<Field<T>>,
    pub body_force: Field<T>,
}

/// Thermal part: heating `ρh`, fluxes `q₁` (vector) and `q₂` (rank 2) with
/// `q = q₁ - ∇·q₂`, and supply `ρr`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermalDecomposition<T> {
    pub heating: Field<T>,
    pub q1: Field<T>,
    pub q2: Option<Field<T>>,
    pub supply: Field<T>,
}

/// Coldness `κ = 1/θ` with its first two gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct ColdnessJet<T> {
    pub value: Field<T>,
    pub grad: Field<T>,
    pub hess: Field<T>,
}

impl<T: Real> ColdnessJet<T> {
    /// Gradients taken by applying the stencils to `κ` directly.
    pub fn from_coldness(kappa: Field<T>) -> Result<Self> {
        let g = grad(&kappa)?;
        let h = grad(&g)?;
        Ok(ColdnessJet { value: kappa, grad: g, hess: h })
    }

    /// Gradients of `1/θ` by the chain rule from the stencil gradients of `θ`:
    /// `∇κ = -∇θ/θ²`, `∇²κ = -∇²θ/θ² + 2 ∇θ⊗∇θ/θ³`.
    pub fn from_temperature(theta: &Field<T>) -> Result<Self> {
        crate::gk_heat::check_temperature(theta)?;
        let gt = grad(theta)?;
        let inv = theta.map(|t| T::one() / t);
        let inv2 = inv.map(|k| -(k * k));
        let two_inv3 = inv.map(|k| T::lit(2.0) * k * k * k);
        let grad_k = gt.scale_by(&inv2)?;
        let hess = grad2(theta)?.scale_by(&inv2)?.axpy(T::one(), &outer(&gt, &gt)?.scale_by(&two_inv3)?)?;
        Ok(ColdnessJet { value: inv, grad: grad_k, hess })
    }
}

/// Internal entropy action density `κh - q₁·∇κ - q₂:∇²κ`.
pub fn pie_entropy_action<T: Real>(d: &ThermalDecomposition<T>, k: &ColdnessJet<T>) -> Result<Field<T>> {
    let mut a = d.heating.scale_by(&k.value)?.axpy(-T::one(), &inner(&d.q1, &k.grad)?)?;
    if let Some(q2) = &d.q2 {
        a = a.axpy(-T::one(), &inner(q2, &k.hess)?)?;
    }
    Ok(a)
}

/// A smooth virtual velocity and a virtual coldness bounded away from zero.
#[derive(Clone, Debug, PartialEq)]
pub struct VirtualPair<T> {
    pub velocity: Field<T>,
    pub coldness: Field<T>,
}

/// Normalized trig polynomial with integer wave numbers up to 3 per axis, max |value| ≤ 1.
fn trig_polynomial<T: Real>(grid: &Grid<T>, rng: &mut ChaCha8Rng) -> Field<T> {
    let ky_max: i32 = if grid.dims() == 2 { 3 } else { 0 };
    let mut modes = Vec::new();
    for mx in 0..=3i32 {
        for my in -ky_max..=ky_max {
            if mx == 0 && my <= 0 {
                continue;
            }
            let a: f64 = rng.gen_range(-1.0..1.0);
            let b: f64 = rng.gen_range(-1.0..1.0);
            modes.push((mx, my, a, b));
        }
    }
    let two_pi = T::lit(std::f64::consts::TAU);
    let (lx, ly) = (grid.length(0), grid.length(1));
    let f = Field::scalar_fn(grid, |x| {
        let mut s = T::zero();
        for &(mx, my, a, b) in &modes {
            let phase = two_pi * (T::lit(mx as f64) * x[0] / lx + T::lit(my as f64) * x[1] / ly);
            s += T::lit(a) * phase.sin() + T::lit(b) * phase.cos();
        }
        s
    });
    let m = f.max_abs();
    if m > T::zero() {
        f.scale(T::one() / m)
    } else {
        f
    }
}

/// `count` seeded virtual pairs; `velocity_rank` matches the model's velocity field and
/// the virtual temperature is `θ_ref (1 + 0.3 w)` with `|w| ≤ 1`.
pub fn random_virtual_pairs<T: Real>(
    grid: &Grid<T>,
    velocity_rank: usize,
    count: usize,
    seed: u64,
    theta_ref: T,
) -> Result<Vec<VirtualPair<T>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let data: Vec<T> = (0..grid.components(velocity_rank))
            .flat_map(|_| trig_polynomial(grid, &mut rng).into_data())
            .collect();
        let velocity = Field::from_vec(grid, velocity_rank, data)?;
        let w = trig_polynomial(grid, &mut rng);
        let coldness = w.map(|w| T::one() / (theta_ref * (T::one() + T::lit(0.3) * w)));
        out.push(VirtualPair { velocity, coldness });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Imbalance<T> {
    /// Largest `|∫ internal - ∫ external|` over the pairs.
    pub max_abs: T,
    /// Largest imbalance divided by the summed L1 norms of the balanced integrands.
    pub max_relative: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VirtualBalanceReport<T> {
    pub mechanical: Option<Imbalance<T>>,
    pub entropy: Option<Imbalance<T>>,
}

/// `|∫ Σ parts|` and its ratio to `Σ ‖part‖₁`; the integrand norms keep the ratio meaningful when
/// every integral vanishes on its own.
fn relative<T: Real>(parts: &[Field<T>]) -> Result<(T, T)> {
    let mut total = T::zero();
    let mut scale = T::zero();
    for p in parts {
        total += volume_integral(p)?;
        scale += p.norm_l1();
    }
    let rel = if scale > T::zero() { total.abs() / scale } else { T::zero() };
    Ok((total.abs(), rel))
}

/// `∫ ρüṽ + T₂·∇ṽ + T₃:∇²ṽ - ρfṽ` for one virtual velocity; returns (|imbalance|, relative).
pub fn virtual_mechanical_imbalance<T: Real>(d: &MechanicalDecomposition<T>, v: &Field<T>) -> Result<(T, T)> {
    let mut parts = vec![inner(&d.inertia, v)?];
    if let Some(t2) = &d.t2 {
        parts.push(inner(t2, &grad(v)?)?);
    }
    if let Some(t3) = &d.t3 {
        parts.push(inner(t3, &grad(&grad(v)?)?)?);
    }
    parts.push(inner(&d.body_force, v)?.scale(-T::one()));
    relative(&parts)
}

/// `∫ κ̃h - q₁·∇κ̃ - q₂:∇²κ̃ - κ̃r` for one virtual coldness; returns (|imbalance|, relative).
pub fn virtual_entropy_imbalance<T: Real>(d: &ThermalDecomposition<T>, kappa: &Field<T>) -> Result<(T, T)> {
    let jet = ColdnessJet::from_coldness(kappa.clone())?;
    let mut parts = vec![d.heating.scale_by(kappa)?, inner(&d.q1, &jet.grad)?.scale(-T::one())];
    if let Some(q2) = &d.q2 {
        parts.push(contract(q2, &jet.hess)?.scale(-T::one()));
    }
    parts.push(d.supply.scale_by(kappa)?.scale(-T::one()));
    relative(&parts)
}

/// Worst virtual imbalance over `pairs` for whichever decompositions the model provides.
pub fn virtual_balance_residual<T: Real>(
    mechanical: Option<&MechanicalDecomposition<T>>,
    thermal: Option<&ThermalDecomposition<T>>,
    pairs: &[VirtualPair<T>],
) -> Result<VirtualBalanceReport<T>> {
    if mechanical.is_none() && thermal.is_none() {
        return Err(Error::NotApplicable("model exposes no virtual-power decomposition".into()));
    }
    let worst = |vals: Vec<(T, T)>| Imbalance {
        max_abs: vals.iter().map(|v| v.0).fold(T::zero(), T::max),
        max_relative: vals.iter().map(|v| v.1).fold(T::zero(), T::max),
    };
    let mech = mechanical
        .map(|d| pairs.iter().map(|p| virtual_mechanical_imbalance(d, &p.velocity)).collect::<Result<Vec<_>>>())
        .transpose()?
        .map(worst);
    let ent = thermal
        .map(|d| pairs.iter().map(|p| virtual_entropy_imbalance(d, &p.coldness)).collect::<Result<Vec<_>>>())
        .transpose()?
        .map(worst);
    Ok(VirtualBalanceReport { mechanical: mech, entropy: ent })
}
