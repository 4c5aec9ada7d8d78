//! Phase flow of `ẋ = g(p)`, `ṗ = −∇V(x) + (1/c)B(x)g(p)` and of its
//! nonrelativistic mirror `ẍ = −∇V + Bẋ`, with domain-exit detection.
//!
//! In nonrelativistic mode the "impulse" slot holds the velocity.

use crate::domain::{random_unit, ConvexDomain};
use crate::error::{Error, Result};
use crate::fields::{FieldModel, Gauge, Mode};
use crate::linalg::Vec3;
use crate::ode::{self, OdeSystem, Options, Solution};
use crate::real::Real;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseState<T> {
    pub t: T,
    pub x: Vec3<T>,
    pub p: Vec3<T>,
}

impl<T: Real> PhaseState<T> {
    pub fn new(x: Vec3<T>, p: Vec3<T>) -> Self {
        PhaseState { t: T::zero(), x, p }
    }

    pub fn energy(&self, model: &FieldModel<T>) -> T {
        energy(model, &self.x, &self.p)
    }
}

/// `g(p) = p/√(1 + |p|²/c²)`.
#[inline]
pub fn g_map<T: Real>(p: &Vec3<T>, c: T) -> Vec3<T> {
    p.scale(T::one() / (T::one() + p.norm2() / (c * c)).sqrt())
}

/// `g⁻¹(v) = v/√(1 − |v|²/c²)` for `|v| < c`.
pub fn g_inverse<T: Real>(v: &Vec3<T>, c: T) -> Result<Vec3<T>> {
    let s = T::one() - v.norm2() / (c * c);
    if !(s > T::zero()) {
        return Err(Error::Superluminal(v.norm().as_f64()));
    }
    Ok(v.scale(T::one() / s.sqrt()))
}

/// Velocity carried by the impulse slot.
#[inline]
pub fn velocity<T: Real>(model: &FieldModel<T>, p: &Vec3<T>) -> Vec3<T> {
    match model.mode {
        Mode::Relativistic => g_map(p, model.c),
        Mode::Nonrelativistic => *p,
    }
}

/// Impulse slot value for a given velocity.
pub fn impulse<T: Real>(model: &FieldModel<T>, v: &Vec3<T>) -> Result<Vec3<T>> {
    match model.mode {
        Mode::Relativistic => g_inverse(v, model.c),
        Mode::Nonrelativistic => Ok(*v),
    }
}

/// `c²√(1 + |p|²/c²) + V(x)` or `½|v|² + V(x)`.
pub fn energy<T: Real>(model: &FieldModel<T>, x: &Vec3<T>, p: &Vec3<T>) -> T {
    let v = model.potential_value(x);
    match model.mode {
        Mode::Relativistic => {
            let c2 = model.c * model.c;
            c2 * (T::one() + p.norm2() / c2).sqrt() + v
        }
        Mode::Nonrelativistic => T::lit(0.5) * p.norm2() + v,
    }
}

/// Radius of the impulse sphere: `c√(((E − V)/c²)² − 1)` or `√(2(E − V))`.
pub fn impulse_radius<T: Real>(model: &FieldModel<T>, x: &Vec3<T>, e: T) -> Result<T> {
    let w = e - model.potential_value(x);
    radius_from_gap(model, w, e)
}

pub(crate) fn radius_from_gap<T: Real>(model: &FieldModel<T>, w: T, e: T) -> Result<T> {
    match model.mode {
        Mode::Relativistic => {
            let c2 = model.c * model.c;
            let q = w / c2;
            if q < T::one() {
                return Err(Error::EnergyTooLow { energy: e.as_f64(), floor: (e - w + c2).as_f64() });
            }
            Ok(model.c * ((q - T::one()) * (q + T::one())).sqrt())
        }
        Mode::Nonrelativistic => {
            if w < T::zero() {
                return Err(Error::EnergyTooLow { energy: e.as_f64(), floor: (e - w).as_f64() });
            }
            Ok((T::lit(2.0) * w).sqrt())
        }
    }
}

/// Speed `|v|` on the energy shell at `x`: `c√(1 − ((E − V)/c²)⁻²)` or `√(2(E − V))`.
pub fn shell_speed<T: Real>(model: &FieldModel<T>, x: &Vec3<T>, e: T) -> Result<T> {
    let w = e - model.potential_value(x);
    match model.mode {
        Mode::Relativistic => {
            let q = w / (model.c * model.c);
            if q < T::one() {
                return Err(Error::EnergyTooLow { energy: e.as_f64(), floor: (e - w + model.c * model.c).as_f64() });
            }
            Ok(model.c * (T::one() - T::one() / (q * q)).sqrt())
        }
        Mode::Nonrelativistic => radius_from_gap(model, w, e),
    }
}

/// Point `r_{V,E}(x)·u` of the impulse sphere.
pub fn sphere_momentum<T: Real>(model: &FieldModel<T>, x: &Vec3<T>, e: T, u: &Vec3<T>) -> Result<Vec3<T>> {
    Ok(u.normalized().scale(impulse_radius(model, x, e)?))
}

/// First-order system on `[x (3), p (3), S]`; `S` accumulates `P·ẋ`.
pub struct PhaseSystem<'a, T: Real> {
    pub model: &'a FieldModel<T>,
    pub gauge: Option<&'a dyn Gauge<T>>,
    joins: Vec<(Vec3<T>, T)>,
}

impl<'a, T: Real> PhaseSystem<'a, T> {
    pub fn new(model: &'a FieldModel<T>) -> Self {
        Self::with_gauge(model, None)
    }

    pub fn with_gauge(model: &'a FieldModel<T>, gauge: Option<&'a dyn Gauge<T>>) -> Self {
        PhaseSystem { model, gauge, joins: model.joins() }
    }
}

pub fn pack<T: Real>(x: &Vec3<T>, p: &Vec3<T>) -> [T; 7] {
    [x.0[0], x.0[1], x.0[2], p.0[0], p.0[1], p.0[2], T::zero()]
}

#[inline]
pub fn unpack<T: Real>(y: &[T; 7]) -> (Vec3<T>, Vec3<T>) {
    (Vec3([y[0], y[1], y[2]]), Vec3([y[3], y[4], y[5]]))
}

impl<'a, T: Real> OdeSystem<T, 7> for PhaseSystem<'a, T> {
    #[inline]
    fn rhs(&self, _t: T, y: &[T; 7], dy: &mut [T; 7]) {
        let (x, p) = unpack(y);
        let v = velocity(self.model, &p);
        let f = self.model.force(&x, &v);
        let mut s = p.dot(&v);
        if let Some(g) = self.gauge {
            let a = g.potential(&x);
            s += match self.model.mode {
                Mode::Relativistic => a.dot(&v) / self.model.c,
                Mode::Nonrelativistic => a.dot(&v),
            };
        }
        dy[0] = v.0[0];
        dy[1] = v.0[1];
        dy[2] = v.0[2];
        dy[3] = f.0[0];
        dy[4] = f.0[1];
        dy[5] = f.0[2];
        dy[6] = s;
    }

    fn controls_error(&self, i: usize) -> bool {
        // the action is a quadrature of A·v once a gauge is supplied, and long
        // steps that suit the state can misintegrate it
        i < 6 || self.gauge.is_some()
    }

    fn switch_count(&self) -> usize {
        self.joins.len()
    }

    fn switch(&self, k: usize, y: &[T; 7]) -> T {
        let (c, r) = self.joins[k];
        let d = Vec3([y[0], y[1], y[2]]) - c;
        d.norm2() - r * r
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FlowOptions<T> {
    pub ode: Options<T>,
    /// Drift above `drift_factor · rtol · max(1, |E|)` is reported as an integrator failure.
    pub drift_factor: T,
    /// Starts with `χ ≥ −boundary_tol` count as boundary starts.
    pub boundary_tol: T,
}

impl<T: Real> Default for FlowOptions<T> {
    fn default() -> Self {
        FlowOptions { ode: Options::default(), drift_factor: T::lit(100.0), boundary_tol: T::lit(1e-10) }
    }
}

impl<T: Real> FlowOptions<T> {
    pub fn with_tolerances(rtol: T, atol: T) -> Self {
        let mut o = Self::default();
        o.ode.tol.rtol = rtol;
        o.ode.tol.atol = atol;
        o
    }
}

#[derive(Clone, Debug)]
pub struct FlowResult<T: Real> {
    pub solution: Solution<T, 7>,
    pub start: PhaseState<T>,
    pub exit_time: Option<T>,
    pub exit_state: Option<PhaseState<T>>,
    pub energy0: T,
    pub energy_drift: T,
}

impl<T: Real> FlowResult<T> {
    /// Dense-output state at time `t`.
    pub fn state_at(&self, t: T) -> PhaseState<T> {
        let (x, p) = unpack(&self.solution.eval(t));
        PhaseState { t, x, p }
    }

    /// States at the accepted step ends.
    pub fn states(&self) -> Vec<PhaseState<T>> {
        self.solution
            .nodes
            .iter()
            .map(|(t, y)| {
                let (x, p) = unpack(y);
                PhaseState { t: *t, x, p }
            })
            .collect()
    }

    pub fn end_state(&self) -> PhaseState<T> {
        let (x, p) = unpack(&self.solution.y_end);
        PhaseState { t: self.solution.t_end, x, p }
    }

    /// Accumulated `∫ P·ẋ dt` (gauge part included only if a gauge was supplied).
    pub fn action(&self) -> T {
        self.solution.y_end[6]
    }
}

/// Integrates from `state0` for a signed duration `t_max`, stopping when the
/// trajectory leaves `domain`. A start on `∂D` heading outward exits at once.
pub fn integrate_flow<T: Real>(
    model: &FieldModel<T>,
    domain: Option<&ConvexDomain<T>>,
    state0: &PhaseState<T>,
    t_max: T,
    opts: &FlowOptions<T>,
) -> Result<FlowResult<T>> {
    integrate_flow_with_gauge(model, domain, state0, t_max, opts, None)
}

pub fn integrate_flow_with_gauge<T: Real>(
    model: &FieldModel<T>,
    domain: Option<&ConvexDomain<T>>,
    state0: &PhaseState<T>,
    t_max: T,
    opts: &FlowOptions<T>,
    gauge: Option<&dyn Gauge<T>>,
) -> Result<FlowResult<T>> {
    let sys = PhaseSystem::with_gauge(model, gauge);
    let e0 = state0.energy(model);
    let y0 = pack(&state0.x, &state0.p);
    let dir = if t_max >= T::zero() { T::one() } else { -T::one() };
    if let Some(d) = domain {
        let chi0 = d.chi(&state0.x);
        if chi0 > T::lit(1e-9) {
            return Err(Error::OutsideDomain(chi0.as_f64()));
        }
        let outward = dir * d.grad_chi(&state0.x).dot(&velocity(model, &state0.p));
        if chi0 >= -opts.boundary_tol && outward >= T::zero() {
            let solution = Solution {
                t0: state0.t,
                y0,
                t_end: state0.t,
                y_end: y0,
                nodes: vec![(state0.t, y0)],
                dense: vec![],
                hs: vec![],
                event: None,
                n_rhs: 0,
                n_rejected: 0,
            };
            return Ok(FlowResult {
                solution,
                start: *state0,
                exit_time: Some(state0.t),
                exit_state: Some(*state0),
                energy0: e0,
                energy_drift: T::zero(),
            });
        }
    }
    let ev;
    let event: Option<&dyn Fn(&[T; 7]) -> T> = match domain {
        Some(d) => {
            ev = move |y: &[T; 7]| d.chi(&Vec3([y[0], y[1], y[2]]));
            Some(&ev)
        }
        None => None,
    };
    let solution = ode::integrate(&sys, state0.t, y0, state0.t + t_max, &opts.ode, event)?;
    let mut drift = T::zero();
    for (_, y) in &solution.nodes {
        let (x, p) = unpack(y);
        drift = drift.max((energy(model, &x, &p) - e0).abs());
    }
    let bound = opts.drift_factor * opts.ode.tol.rtol * e0.abs().max(T::one());
    if drift > bound {
        return Err(Error::EnergyDrift { drift: drift.as_f64(), bound: bound.as_f64() });
    }
    let (exit_time, exit_state) = match &solution.event {
        Some(ev) => {
            let (x, p) = unpack(&ev.y);
            (Some(ev.t), Some(PhaseState { t: ev.t, x, p }))
        }
        None => (None, None),
    };
    Ok(FlowResult { solution, start: *state0, exit_time, exit_state, energy0: e0, energy_drift: drift })
}

/// Both boundary crossings of the trajectory through an interior phase point.
#[derive(Clone, Debug)]
pub struct Flight<T: Real> {
    pub backward: FlowResult<T>,
    pub forward: FlowResult<T>,
}

impl<T: Real> Flight<T> {
    pub fn t_minus(&self) -> Option<T> {
        self.backward.exit_time
    }
    pub fn t_plus(&self) -> Option<T> {
        self.forward.exit_time
    }
}

/// Integrates forward and backward from `(x, p)` until leaving `domain` or exhausting `budget`.
pub fn flight<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    x: &Vec3<T>,
    p: &Vec3<T>,
    budget: T,
    opts: &FlowOptions<T>,
) -> Result<Flight<T>> {
    let s = PhaseState::new(*x, *p);
    let forward = integrate_flow(model, Some(domain), &s, budget, opts)?;
    let backward = integrate_flow(model, Some(domain), &s, -budget, opts)?;
    Ok(Flight { backward, forward })
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct LivingTimeReport {
    pub samples: usize,
    pub violations: usize,
    pub bound: f64,
    pub max_flight: f64,
    pub failures: usize,
}

/// Samples `(x, p)` on the energy surface and checks `t₊ − t₋ ≤ 5δ/c`.
pub fn living_time_check<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    e: T,
    samples: usize,
    seed: u64,
    opts: &FlowOptions<T>,
) -> LivingTimeReport {
    let delta = domain.delta();
    let bound = T::lit(5.0) * delta / model.c;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(Vec3<T>, Vec3<T>)> = (0..samples)
        .map(|_| {
            let x = domain.sample_interior(&mut rng);
            let u = random_unit::<T, _>(model.dim, &mut rng);
            (x, u)
        })
        .collect();
    let budget = T::lit(4.0) * bound;
    let results: Vec<Option<T>> = draws
        .par_iter()
        .map(|(x, u)| {
            let p = sphere_momentum(model, x, e, u).ok()?;
            let f = flight(model, domain, x, &p, budget, opts).ok()?;
            match (f.t_minus(), f.t_plus()) {
                (Some(tm), Some(tp)) => Some(tp - tm),
                _ => Some(T::infinity()),
            }
        })
        .collect();
    let mut rep = LivingTimeReport { samples, violations: 0, bound: bound.as_f64(), max_flight: 0.0, failures: 0 };
    for r in results {
        match r {
            None => rep.failures += 1,
            Some(dt) => {
                rep.max_flight = rep.max_flight.max(dt.as_f64());
                if dt > bound {
                    rep.violations += 1;
                }
            }
        }
    }
    rep
}

/// Second derivative of `m(t) = χ(x(t))` from the equations of motion.
pub fn chi_second_derivative<T: Real>(model: &FieldModel<T>, domain: &ConvexDomain<T>, x: &Vec3<T>, p: &Vec3<T>) -> T {
    let v = velocity(model, p);
    let f = model.force(x, &v);
    let grad = domain.grad_chi(x);
    let hess = domain.hess_chi(x).quad_form(&v, &v);
    match model.mode {
        Mode::Relativistic => {
            let c2 = model.c * model.c;
            let gam = (T::one() + p.norm2() / c2).sqrt();
            hess + grad.dot(&f) / gam - p.dot(&f) * grad.dot(p) / (c2 * gam * gam * gam)
        }
        Mode::Nonrelativistic => hess + grad.dot(&f),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Transversality {
    /// `ẋ·N` at the entry point (negative for a transversal entry).
    pub entry_dot: f64,
    /// `ẋ·N` at the exit point (positive for a transversal exit).
    pub exit_dot: f64,
    pub entry_mddot: f64,
    pub exit_mddot: f64,
    /// `c²·C8` when supplied.
    pub mddot_floor: Option<f64>,
    pub transversal: bool,
    pub floor_respected: bool,
}

/// Normal velocities and `m̈` at both crossings of a flow started on `∂D`.
pub fn exit_transversality<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    flow: &FlowResult<T>,
    c8: Option<T>,
) -> Result<Transversality> {
    let entry = flow.start;
    if domain.chi(&entry.x).abs() > T::lit(1e-9) {
        return Err(Error::MissingCrossing("flow does not start on the boundary".into()));
    }
    let exit = flow.exit_state.ok_or_else(|| Error::MissingCrossing("no exit recorded".into()))?;
    transversality_between(model, domain, &entry, &exit, c8)
}

/// Same as [`exit_transversality`] for an explicit pair of crossing states.
pub fn transversality_between<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    entry: &PhaseState<T>,
    exit: &PhaseState<T>,
    c8: Option<T>,
) -> Result<Transversality> {
    let dot = |s: &PhaseState<T>| velocity(model, &s.p).dot(&domain.outward_normal(&s.x));
    let entry_dot = dot(entry);
    let exit_dot = dot(exit);
    let m_in = chi_second_derivative(model, domain, &entry.x, &entry.p);
    let m_out = chi_second_derivative(model, domain, &exit.x, &exit.p);
    let floor = c8.map(|c| c * model.c * model.c);
    let floor_respected = floor.is_none_or(|f| m_in >= f && m_out >= f);
    Ok(Transversality {
        entry_dot: entry_dot.as_f64(),
        exit_dot: exit_dot.as_f64(),
        entry_mddot: m_in.as_f64(),
        exit_mddot: m_out.as_f64(),
        mddot_floor: floor.map(|f| f.as_f64()),
        transversal: entry_dot < T::zero() && exit_dot > T::zero(),
        floor_respected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Profile;

    fn bump() -> FieldModel<f64> {
        FieldModel::<f64>::free(2, 1.0, Mode::Relativistic)
            .with_potential(Vec3::new(0.1, 0.0, 0.0), Profile::Bump { amplitude: 0.05, radius: 0.7 })
            .with_magnetic(crate::fields::MagneticTerm::Planar {
                center: Vec3::new(-0.1, 0.2, 0.0),
                profile: Profile::Bump { amplitude: 0.4, radius: 0.6 },
            })
    }

    #[test]
    fn g_map_examples() {
        assert_eq!(g_map(&Vec3::<f64>::zero(), 1.0), Vec3::zero());
        let v = g_map(&Vec3::new(3f64.sqrt(), 0.0, 0.0), 1.0);
        assert!((v.0[0] - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(g_inverse(&Vec3::new(1.0, 0.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn energy_and_sphere_examples() {
        let free = FieldModel::<f64>::free(2, 1.0, Mode::Relativistic);
        assert_eq!(energy(&free, &Vec3::zero(), &Vec3::zero()), 1.0);
        assert!((energy(&free, &Vec3::zero(), &Vec3::new(3f64.sqrt(), 0.0, 0.0)) - 2.0).abs() < 1e-15);
        let p = sphere_momentum(&free, &Vec3::zero(), 2.0, &Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert!((p.0[0] - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(sphere_momentum(&free, &Vec3::zero(), 1.0, &Vec3::new(1.0, 0.0, 0.0)).unwrap(), Vec3::zero());
        assert!(sphere_momentum(&free, &Vec3::zero(), 0.9, &Vec3::new(1.0, 0.0, 0.0)).is_err());
        let nr = FieldModel::<f64>::free(2, 1.0, Mode::Nonrelativistic);
        let p = sphere_momentum(&nr, &Vec3::zero(), 0.5, &Vec3::new(0.0, 1.0, 0.0)).unwrap();
        assert!((p.0[1] - 1.0).abs() < 1e-15);
        let nrv = FieldModel::<f64>::free(2, 1.0, Mode::Nonrelativistic)
            .with_potential(Vec3::zero(), Profile::Harmonic { strength: 0.5 });
        // V(1, 0) = 0.25
        assert!((energy(&nrv, &Vec3::new(1.0, 0.0, 0.0), &Vec3::new(1.0, 0.0, 0.0)) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn free_flow_is_a_straight_line() {
        let free = FieldModel::<f64>::free(3, 1.0, Mode::Relativistic);
        let p = Vec3::new(0.7, -1.1, 0.4);
        let s = PhaseState::new(Vec3::new(0.1, 0.2, -0.3), p);
        let r = integrate_flow(&free, None, &s, 2.5, &FlowOptions::default()).unwrap();
        let v = g_map(&p, 1.0);
        for k in 0..=25 {
            let t = 0.1 * k as f64;
            let st = r.state_at(t);
            assert!((st.x - (s.x + v.scale(t))).max_abs() < 1e-10);
        }
    }

    #[test]
    fn cyclotron_orbit_closes() {
        let m = FieldModel::<f64>::free(2, 1.0, Mode::Nonrelativistic).with_constant_b12(1.0);
        let s = PhaseState::new(Vec3::zero(), Vec3::new(1.0, 0.0, 0.0));
        let tau = 2.0 * std::f64::consts::PI;
        let r = integrate_flow(&m, None, &s, tau, &FlowOptions::default()).unwrap();
        assert!((r.end_state().x - s.x).norm() < 1e-8);
        // clockwise circle of radius 1 centred at (0, −1)
        let q = r.state_at(tau / 4.0).x;
        assert!((q - Vec3::new(1.0, -1.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn energy_drift_over_a_crossing() {
        let m = bump();
        let d = ConvexDomain::<f64>::unit_ball(2);
        let x = Vec3::new(-0.2, 0.1, 0.0);
        let p = sphere_momentum(&m, &x, 2.0, &Vec3::new(0.6, 0.8, 0.0)).unwrap();
        let f = flight(&m, &d, &x, &p, 20.0, &FlowOptions::default()).unwrap();
        assert!(f.forward.energy_drift <= 1e-9 && f.backward.energy_drift <= 1e-9, "{} {}", f.forward.energy_drift, f.backward.energy_drift);
        let ex = f.forward.exit_state.unwrap();
        assert!(d.chi(&ex.x).abs() <= 1e-12);
        assert!(f.t_minus().unwrap() < 0.0 && f.t_plus().unwrap() > 0.0);
    }

    #[test]
    fn outward_boundary_start_exits_immediately() {
        let m = FieldModel::<f64>::free(2, 1.0, Mode::Relativistic);
        let d = ConvexDomain::<f64>::unit_ball(2);
        let s = PhaseState::new(Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.0, 0.3, 0.0));
        let r = integrate_flow(&m, Some(&d), &s, 5.0, &FlowOptions::default()).unwrap();
        assert_eq!(r.exit_time, Some(0.0));
        let s_in = PhaseState::new(Vec3::new(1.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0));
        let r = integrate_flow(&m, Some(&d), &s_in, 5.0, &FlowOptions::default()).unwrap();
        let v = g_map(&s_in.p, 1.0).norm();
        assert!((r.exit_time.unwrap() - 2.0 / v).abs() < 1e-11);
    }

    #[test]
    fn reversed_field_retraces_path() {
        let m = bump();
        let x = Vec3::new(-0.3, 0.05, 0.0);
        let p = sphere_momentum(&m, &x, 2.0, &Vec3::new(0.8, 0.6, 0.0)).unwrap();
        let o = FlowOptions::with_tolerances(1e-12, 1e-14);
        let fwd = integrate_flow(&m, None, &PhaseState::new(x, p), 1.2, &o).unwrap();
        let end = fwd.end_state();
        let rev = m.with_reversed_magnetic();
        let back = integrate_flow(&rev, None, &PhaseState::new(end.x, -end.p), 1.2, &o).unwrap();
        let b = back.end_state();
        assert!((b.x - x).norm() < 1e-10);
        assert!((b.p + p).norm() < 1e-10);
    }

    #[test]
    fn mddot_matches_finite_differences() {
        let m = bump();
        let d = ConvexDomain::<f64>::unit_ball(2);
        let x = Vec3::new(0.0, -0.1, 0.0);
        let p = sphere_momentum(&m, &x, 1.8, &Vec3::new(-0.2, 1.0, 0.0)).unwrap();
        let o = FlowOptions::with_tolerances(1e-12, 1e-14);
        let r = integrate_flow(&m, None, &PhaseState::new(x, p), 1.0, &o).unwrap();
        for t in [0.3, 0.5, 0.7] {
            let h = 1e-3;
            let mc = |s: f64| d.chi(&r.state_at(s).x);
            let fd = (mc(t + h) - 2.0 * mc(t) + mc(t - h)) / (h * h);
            let st = r.state_at(t);
            let an = chi_second_derivative(&m, &d, &st.x, &st.p);
            assert!((fd - an).abs() < 1e-5, "{fd} vs {an}");
        }
    }

    #[test]
    fn free_chord_through_centre_is_transversal() {
        let m = FieldModel::<f64>::free(2, 1.0, Mode::Relativistic);
        let d = ConvexDomain::<f64>::unit_ball(2);
        let s = PhaseState::new(Vec3::new(-1.0, 0.0, 0.0), Vec3::new(3f64.sqrt(), 0.0, 0.0));
        let r = integrate_flow(&m, Some(&d), &s, 10.0, &FlowOptions::default()).unwrap();
        let t = exit_transversality(&m, &d, &r, None).unwrap();
        let v = 3f64.sqrt() / 2.0;
        assert!((t.exit_dot - v).abs() < 1e-10 && (t.entry_dot + v).abs() < 1e-10);
        assert!((t.exit_mddot - 2.0 * v * v).abs() < 1e-9);
        assert!(t.transversal);
    }

    #[test]
    fn free_living_time_bound() {
        let m = FieldModel::<f64>::free(2, 1.0, Mode::Relativistic);
        let d = ConvexDomain::<f64>::unit_ball(2);
        let rep = living_time_check(&m, &d, 2.0, 200, 7, &FlowOptions::default());
        assert_eq!(rep.violations, 0);
        assert_eq!(rep.failures, 0);
        assert!(rep.max_flight <= 2.0 / (3f64.sqrt() / 2.0) + 1e-9);
    }
}
