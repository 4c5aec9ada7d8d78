//! Scattering data `(a, b)` for compactly supported fields and the dictionary
//! between scattering data and boundary data on a convex domain containing
//! the support.

use crate::boundary::BoundaryDatum;
use crate::domain::{random_unit, ChordData, ConvexDomain};
use crate::dynamics::{impulse, integrate_flow, velocity, FlowOptions, PhaseState};
use crate::error::{Error, Result};
use crate::fields::FieldModel;
use crate::linalg::Vec3;
use crate::real::Real;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatteringDatum<T> {
    pub v_minus: Vec3<T>,
    pub x_minus: Vec3<T>,
    pub v_plus: Vec3<T>,
    pub x_plus: Vec3<T>,
    pub e: T,
    /// `v₋·x₋ = 0` and `|v₋|` on the energy shell.
    pub in_m_e: bool,
}

/// Intersections of `t ↦ tv + x` with `∂D`.
pub fn chord<T: Real>(domain: &ConvexDomain<T>, v: &Vec3<T>, x: &Vec3<T>) -> ChordData<T> {
    domain.chord(v, x)
}

/// Energy of a free particle with velocity `v`.
pub fn free_energy<T: Real>(model: &FieldModel<T>, v: &Vec3<T>) -> Result<T> {
    let p = impulse(model, v)?;
    Ok(match model.mode {
        crate::fields::Mode::Relativistic => {
            let c2 = model.c * model.c;
            c2 * (T::one() + p.norm2() / c2).sqrt()
        }
        crate::fields::Mode::Nonrelativistic => T::lit(0.5) * v.norm2(),
    })
}

/// Speed of a free particle at energy `e`.
pub fn free_speed<T: Real>(model: &FieldModel<T>, e: T) -> Result<T> {
    crate::dynamics::radius_from_gap(model, e, e).map(|r| match model.mode {
        crate::fields::Mode::Relativistic => r / (T::one() + r * r / (model.c * model.c)).sqrt(),
        crate::fields::Mode::Nonrelativistic => r,
    })
}

fn m_e_flag<T: Real>(model: &FieldModel<T>, v: &Vec3<T>, x: &Vec3<T>, e: T) -> bool {
    let orth = v.dot(x).abs() <= T::lit(1e-10) * (T::one() + v.norm() * x.norm());
    let shell = free_energy(model, v).is_ok_and(|f| (f - e).abs() <= T::lit(1e-9) * e.abs().max(T::one()));
    orth && shell
}

/// Ball containing the support, as a domain.
fn support_domain<T: Real>(model: &FieldModel<T>) -> Result<Option<ConvexDomain<T>>> {
    let (c, r) = model.support_ball().ok_or(Error::NotCompactlySupported)?;
    if r == T::zero() {
        return Ok(None);
    }
    Ok(Some(ConvexDomain::ball(model.dim, c, r)?))
}

/// Scattering data for the incoming asymptote `v₋t + x₋`: free flight to the
/// support ball, integration across it, straight-line extrapolation after exit.
pub fn scatter<T: Real>(
    model: &FieldModel<T>,
    v_minus: &Vec3<T>,
    x_minus: &Vec3<T>,
    opts: &FlowOptions<T>,
) -> Result<ScatteringDatum<T>> {
    if v_minus.norm() == T::zero() {
        return Err(Error::InvalidParameter("v₋ = 0".into()));
    }
    let e = free_energy(model, v_minus)?;
    let in_m_e = m_e_flag(model, v_minus, x_minus, e);
    let unchanged = ScatteringDatum { v_minus: *v_minus, x_minus: *x_minus, v_plus: *v_minus, x_plus: *x_minus, e, in_m_e };
    let Some(sball) = support_domain(model)? else { return Ok(unchanged) };
    let ch = sball.chord(v_minus, x_minus);
    if ch.chi < 2 {
        return Ok(unchanged);
    }
    let p = impulse(model, v_minus)?;
    let start = PhaseState { t: ch.tau_minus, x: *x_minus + v_minus.scale(ch.tau_minus), p };
    let budget = T::lit(5.0) * sball.delta() / model.c;
    let flow = integrate_flow(model, Some(&sball), &start, budget, opts)?;
    let exit = flow.exit_state.ok_or(Error::Trapped(budget.as_f64()))?;
    let v_plus = velocity(model, &exit.p);
    Ok(ScatteringDatum { v_minus: *v_minus, x_minus: *x_minus, v_plus, x_plus: exit.x - v_plus.scale(exit.t), e, in_m_e })
}

/// Oracle: integrate from `x₋ − T v₋` at time `−T` to time `T` and read the outgoing line.
pub fn scatter_long_time<T: Real>(
    model: &FieldModel<T>,
    v_minus: &Vec3<T>,
    x_minus: &Vec3<T>,
    horizon: T,
    opts: &FlowOptions<T>,
) -> Result<ScatteringDatum<T>> {
    let e = free_energy(model, v_minus)?;
    let p = impulse(model, v_minus)?;
    let start = PhaseState { t: -horizon, x: *x_minus - v_minus.scale(horizon), p };
    // keep steps short enough that the field region cannot be stepped over
    let mut o = *opts;
    let (_, r) = model.support_ball().ok_or(Error::NotCompactlySupported)?;
    if r > T::zero() {
        o.ode.h_max = Some(T::lit(0.25) * r / v_minus.norm());
    }
    let flow = integrate_flow(model, None, &start, T::lit(2.0) * horizon, &o)?;
    let end = flow.end_state();
    let v_plus = velocity(model, &end.p);
    Ok(ScatteringDatum {
        v_minus: *v_minus,
        x_minus: *x_minus,
        v_plus,
        x_plus: end.x - v_plus.scale(end.t),
        e,
        in_m_e: m_e_flag(model, v_minus, x_minus, e),
    })
}

/// Whether the support ball lies in the closed domain (checked on sphere samples).
pub fn support_inside<T: Real>(model: &FieldModel<T>, domain: &ConvexDomain<T>) -> bool {
    match model.support_ball() {
        None => false,
        Some((_, r)) if r == T::zero() => true,
        Some((c, r)) => {
            let sphere = ConvexDomain::ball(model.dim, c, r).expect("positive radius");
            let m = if model.dim == 2 { 720 } else { 4000 };
            sphere.boundary_grid(m).iter().all(|x| domain.chi(x) <= T::zero())
        }
    }
}

/// Boundary data of the trajectory with scattering data `datum`.
pub fn scattering_to_boundary<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    datum: &ScatteringDatum<T>,
) -> Result<BoundaryDatum<T>> {
    if !support_inside(model, domain) {
        return Err(Error::InvalidParameter("support is not contained in the domain".into()));
    }
    let inc = domain.chord(&datum.v_minus, &datum.x_minus);
    if inc.chi < 2 {
        return Err(Error::NoChord(inc.chi));
    }
    let out = domain.chord(&datum.v_plus, &datum.x_plus);
    if out.chi < 2 {
        return Err(Error::NoChord(out.chi));
    }
    let q0 = datum.x_minus + datum.v_minus.scale(inc.tau_minus);
    let q = datum.x_plus + datum.v_plus.scale(out.tau_plus);
    let kbar0 = impulse(model, &datum.v_minus)?;
    let kbar = impulse(model, &datum.v_plus)?;
    Ok(BoundaryDatum {
        q0,
        q,
        e: datum.e,
        s: out.tau_plus - inc.tau_minus,
        k0: datum.v_minus,
        k: datum.v_plus,
        kbar0,
        kbar,
        s0: None,
        residual: T::zero(),
        iterations: 0,
    })
}

/// Scattering data of a boundary datum, written in the `v₋·x₋ = 0` normalisation.
pub fn boundary_datum_to_scattering<T: Real>(model: &FieldModel<T>, datum: &BoundaryDatum<T>) -> Result<ScatteringDatum<T>> {
    let v = datum.k0;
    let tau_minus = datum.q0.dot(&v) / v.norm2();
    let x_minus = datum.q0 - v.scale(tau_minus);
    let v_plus = datum.k;
    let x_plus = datum.q - v_plus.scale(datum.s + tau_minus);
    Ok(ScatteringDatum { v_minus: v, x_minus, v_plus, x_plus, e: datum.e, in_m_e: m_e_flag(model, &v, &x_minus, datum.e) })
}

/// Scattering data from `(v₋, x₋) ∈ M_E` by entering `D` at `q0 = x₋ + τ₋v₋`
/// and integrating to the exit point.
pub fn boundary_to_scattering<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    e: T,
    v_minus: &Vec3<T>,
    x_minus: &Vec3<T>,
    opts: &FlowOptions<T>,
) -> Result<ScatteringDatum<T>> {
    let in_m_e = m_e_flag(model, v_minus, x_minus, e);
    if !in_m_e {
        return Err(Error::InvalidParameter("(v₋, x₋) is not on M_E".into()));
    }
    let ch = domain.chord(v_minus, x_minus);
    if ch.chi < 2 {
        return Ok(ScatteringDatum { v_minus: *v_minus, x_minus: *x_minus, v_plus: *v_minus, x_plus: *x_minus, e, in_m_e });
    }
    let q0 = *x_minus + v_minus.scale(ch.tau_minus);
    let p = impulse(model, v_minus)?;
    let budget = T::lit(5.0) * domain.delta() / model.c;
    let flow = integrate_flow(model, Some(domain), &PhaseState::new(q0, p), budget, opts)?;
    let exit = flow.exit_state.ok_or(Error::Trapped(budget.as_f64()))?;
    let k = velocity(model, &exit.p);
    Ok(ScatteringDatum { v_minus: *v_minus, x_minus: *x_minus, v_plus: k, x_plus: exit.x - k.scale(exit.t + ch.tau_minus), e, in_m_e })
}

/// Random points of `M_E` whose line meets `D`: `|v₋|` on the shell, `x₋ ⟂ v₋`, `|x₋| < δ`.
pub fn sample_m_e<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    e: T,
    count: usize,
    seed: u64,
) -> Result<Vec<(Vec3<T>, Vec3<T>)>> {
    let speed = free_speed(model, e)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = random_unit::<T, _>(model.dim, &mut rng);
        let mut w = random_unit::<T, _>(model.dim, &mut rng);
        w = w - u.scale(w.dot(&u));
        if w.norm() < T::lit(1e-3) {
            continue;
        }
        let rad = domain.delta() * T::lit(rng.gen::<f64>());
        let x = w.normalized().scale(rad);
        if domain.chord(&u, &x).chi == 2 {
            out.push((u.scale(speed), x));
        }
    }
    Ok(out)
}

/// Scattering data for many incoming asymptotes, in input order.
pub fn scattering_sweep<T: Real>(
    model: &FieldModel<T>,
    inputs: &[(Vec3<T>, Vec3<T>)],
    opts: &FlowOptions<T>,
) -> Vec<Result<ScatteringDatum<T>>> {
    inputs.par_iter().map(|(v, x)| scatter(model, v, x, opts)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{shoot, ShootOptions};
    use crate::fields::{MagneticTerm, Mode, Profile};

    fn bump() -> FieldModel<f64> {
        FieldModel::<f64>::free(2, 1.0, Mode::Relativistic)
            .with_potential(Vec3::new(0.1, -0.1, 0.0), Profile::Bump { amplitude: 0.05, radius: 0.6 })
            .with_magnetic(MagneticTerm::Planar {
                center: Vec3::new(-0.1, 0.1, 0.0),
                profile: Profile::Bump { amplitude: 0.3, radius: 0.5 },
            })
    }

    #[test]
    fn chord_examples() {
        let d = ConvexDomain::<f64>::unit_ball(2);
        let c = chord(&d, &Vec3::new(1.0, 0.0, 0.0), &Vec3::zero());
        assert_eq!((c.chi, c.tau_minus, c.tau_plus), (2, -1.0, 1.0));
        assert_eq!(chord(&d, &Vec3::new(1.0, 0.0, 0.0), &Vec3::new(0.0, 2.0, 0.0)).chi, 0);
        let t = chord(&d, &Vec3::new(1.0, 0.0, 0.0), &Vec3::new(0.0, 1.0, 0.0));
        assert_eq!(t.chi, 1);
        assert_eq!(t.tau_minus, t.tau_plus);
    }

    #[test]
    fn missing_the_support_changes_nothing() {
        let m = bump();
        let v = Vec3::new(0.8, 0.0, 0.0);
        let x = Vec3::new(0.0, 0.95, 0.0);
        let s = scatter(&m, &v, &x, &FlowOptions::default()).unwrap();
        assert_eq!((s.v_plus, s.x_plus), (v, x));
    }

    #[test]
    fn shell_is_preserved_and_long_flight_agrees() {
        let m = bump();
        let o = FlowOptions::with_tolerances(1e-12, 1e-14);
        for (v, x) in sample_m_e(&m, &ConvexDomain::unit_ball(2), 3.0, 5, 11).unwrap() {
            let s = scatter(&m, &v, &x, &o).unwrap();
            assert!(s.in_m_e);
            assert!((s.v_plus.norm() - v.norm()).abs() < 1e-10);
            let l = scatter_long_time(&m, &v, &x, 1e3, &o).unwrap();
            assert!((l.v_plus - s.v_plus).norm() < 1e-6 && (l.x_plus - s.x_plus).norm() < 1e-6, "{:?} {:?}", l, s);
        }
    }

    #[test]
    fn free_dictionary_example() {
        let m = FieldModel::<f64>::free(2, 1.0, Mode::Relativistic);
        let d = ConvexDomain::<f64>::unit_ball(2);
        let w = 0.5;
        let s = scatter(&m, &Vec3::new(w, 0.0, 0.0), &Vec3::zero(), &FlowOptions::default()).unwrap();
        let b = scattering_to_boundary(&m, &d, &s).unwrap();
        assert_eq!(b.q0, Vec3::new(-1.0, 0.0, 0.0));
        assert_eq!(b.q, Vec3::new(1.0, 0.0, 0.0));
        assert!((b.s - 2.0 / w).abs() < 1e-15);
        let e = s.e;
        let back = boundary_to_scattering(&m, &d, e, &Vec3::new(w, 0.0, 0.0), &Vec3::zero(), &FlowOptions::default()).unwrap();
        assert!((back.v_plus - s.v_plus).norm() < 1e-14 && (back.x_plus - s.x_plus).norm() < 1e-10);
    }

    #[test]
    fn dictionary_roundtrip_on_bump() {
        let m = bump();
        let d = ConvexDomain::<f64>::unit_ball(2);
        let e = 3.0;
        let o = FlowOptions::with_tolerances(1e-12, 1e-14);
        let so = ShootOptions::default();
        for (v, x) in sample_m_e(&m, &d, e, 6, 5).unwrap() {
            let s = scatter(&m, &v, &x, &o).unwrap();
            let b = scattering_to_boundary(&m, &d, &s).unwrap();
            let back = boundary_datum_to_scattering(&m, &b).unwrap();
            assert!((back.v_plus - s.v_plus).norm() < 1e-12 && (back.x_plus - s.x_plus).norm() < 1e-12);
            assert!((back.x_minus - x).norm() < 1e-12);
            let shot = shoot(&m, &d, &b.q0, &b.q, e, &so).unwrap();
            assert!((shot.s - b.s).abs() < 1e-8 && (shot.k0 - b.k0).norm() < 1e-8 && (shot.k - b.k).norm() < 1e-8);
            let via = boundary_to_scattering(&m, &d, e, &v, &x, &o).unwrap();
            assert!((via.v_plus - s.v_plus).norm() < 1e-7 && (via.x_plus - s.x_plus).norm() < 1e-7);
        }
    }

    #[test]
    fn non_compact_fields_are_rejected() {
        let m = FieldModel::<f64>::free(2, 1.0, Mode::Relativistic).with_constant_b12(0.1);
        assert!(matches!(scatter(&m, &Vec3::new(0.5, 0.0, 0.0), &Vec3::zero(), &FlowOptions::default()), Err(Error::NotCompactlySupported)));
    }
}
