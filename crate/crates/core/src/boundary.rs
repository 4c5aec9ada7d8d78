//! Fixed-energy two-point problem: shooting from `q0` to `q` and the
//! boundary data `s`, `k₀`, `k`, `k̄₀`, `k̄`, `S₀` it produces.

use crate::domain::{unit_from_angles, ConvexDomain};
use crate::dynamics::{pack, unpack, velocity, FlowOptions, PhaseSystem};
use crate::error::{Error, Result};
use crate::fields::{FieldModel, Gauge, Mode};
use crate::linalg::{solve_dense, Vec3};
use crate::ode::{self, Solution};
use crate::real::Real;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryDatum<T> {
    pub q0: Vec3<T>,
    pub q: Vec3<T>,
    pub e: T,
    pub s: T,
    pub k0: Vec3<T>,
    pub k: Vec3<T>,
    pub kbar0: Vec3<T>,
    pub kbar: Vec3<T>,
    /// Reduced action in the gauge used by the solver.
    pub s0: Option<T>,
    pub residual: T,
    pub iterations: usize,
}

impl<T: Real> BoundaryDatum<T> {
    /// Launch direction `k̄₀/|k̄₀|`.
    pub fn direction(&self) -> Vec3<T> {
        self.kbar0.normalized()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ShootOptions<T> {
    pub flow: FlowOptions<T>,
    /// Terminal miss accepted as converged.
    pub tol: T,
    pub max_iter: usize,
    /// Finite-difference step in the direction chart.
    pub fd_step: T,
    /// Directions tried when the chord guess fails.
    pub starts: usize,
    /// Largest `χ` tolerated along an accepted trajectory.
    pub inside_tol: T,
}

impl<T: Real> Default for ShootOptions<T> {
    fn default() -> Self {
        ShootOptions {
            flow: FlowOptions::with_tolerances(T::lit(1e-12), T::lit(1e-14)),
            tol: T::lit(1e-11),
            max_iter: 40,
            fd_step: T::lit(1e-7),
            starts: 16,
            inside_tol: T::lit(1e-9),
        }
    }
}

/// Chart on `S^{n−1}`: the angle in the plane, otherwise the graph chart
/// over the coordinate plane orthogonal to the dominant axis.
#[derive(Clone, Copy, Debug)]
struct DirChart<T> {
    dim: usize,
    axis: usize,
    sign: T,
}

impl<T: Real> DirChart<T> {
    fn around(dim: usize, u: &Vec3<T>) -> Self {
        let mut axis = 0;
        for i in 1..dim {
            if u.0[i].abs() > u.0[axis].abs() {
                axis = i;
            }
        }
        DirChart { dim, axis, sign: if u.0[axis] >= T::zero() { T::one() } else { -T::one() } }
    }

    fn params(&self, u: &Vec3<T>) -> Vec<T> {
        if self.dim == 2 {
            return vec![u.0[1].atan2(u.0[0])];
        }
        (0..3).filter(|&i| i != self.axis).map(|i| u.0[i]).collect()
    }

    fn point(&self, w: &[T]) -> Option<Vec3<T>> {
        if self.dim == 2 {
            return Some(unit_from_angles(2, w));
        }
        let r2 = w[0] * w[0] + w[1] * w[1];
        if r2 >= T::one() {
            return None;
        }
        let mut u = Vec3::zero();
        let mut j = 0;
        for i in 0..3 {
            if i == self.axis {
                u.0[i] = self.sign * (T::one() - r2).sqrt();
            } else {
                u.0[i] = w[j];
                j += 1;
            }
        }
        Some(u)
    }
}

struct Shot<T: Real> {
    solution: Solution<T, 7>,
}

fn fly<T: Real>(
    sys: &PhaseSystem<'_, T>,
    x0: &Vec3<T>,
    p0: &Vec3<T>,
    s: T,
    opts: &ShootOptions<T>,
) -> Result<Shot<T>> {
    let solution = ode::integrate(sys, T::zero(), pack(x0, p0), s, &opts.flow.ode, None)?;
    Ok(Shot { solution })
}

fn max_chi<T: Real>(domain: &ConvexDomain<T>, sol: &Solution<T, 7>) -> T {
    let mut m = T::neg_infinity();
    for (_, y) in &sol.nodes {
        m = m.max(domain.chi(&Vec3([y[0], y[1], y[2]])));
    }
    for d in &sol.dense {
        for j in 1..4 {
            let y = d.eval(d.t0 + d.h * T::from_count(j) / T::lit(4.0));
            m = m.max(domain.chi(&Vec3([y[0], y[1], y[2]])));
        }
    }
    m
}

/// Launch impulse for direction `u` at `q0`.
fn launch<T: Real>(model: &FieldModel<T>, q0: &Vec3<T>, e: T, u: &Vec3<T>) -> Result<Vec3<T>> {
    crate::dynamics::sphere_momentum(model, q0, e, u)
}

/// Newton iteration on `(w, s) ↦ ψ₁(s, q0, r·u(w)) − q` from one starting guess.
#[allow(clippy::too_many_arguments)]
fn newton<T: Real>(
    model: &FieldModel<T>,
    gauge: Option<&dyn Gauge<T>>,
    domain: &ConvexDomain<T>,
    q0: &Vec3<T>,
    q: &Vec3<T>,
    e: T,
    u_start: Vec3<T>,
    s_start: T,
    opts: &ShootOptions<T>,
) -> Result<BoundaryDatum<T>> {
    let n = model.dim;
    let sys = PhaseSystem::with_gauge(model, gauge);
    let mut u = u_start.normalized();
    let mut s = s_start;
    let eval = |u: &Vec3<T>, s: T| -> Result<(Shot<T>, Vec3<T>)> {
        let p0 = launch(model, q0, e, u)?;
        let shot = fly(&sys, q0, &p0, s, opts)?;
        let (x, _) = unpack(&shot.solution.y_end);
        Ok((shot, x - *q))
    };
    let (mut shot, mut f) = eval(&u, s)?;
    let mut fnorm = f.norm();
    for it in 0..=opts.max_iter {
        if fnorm <= opts.tol {
            if max_chi(domain, &shot.solution) > opts.inside_tol {
                return Err(Error::EarlyExit);
            }
            let (x_end, p_end) = unpack(&shot.solution.y_end);
            let p0 = launch(model, q0, e, &u)?;
            // first-order correction of the action for the remaining terminal miss
            let s0 = gauge.map(|g| {
                let canon = p_end + g.potential(&x_end).scale(model.magnetic_coupling());
                shot.solution.y_end[6] + canon.dot(&(*q - x_end))
            });
            return Ok(BoundaryDatum {
                q0: *q0,
                q: *q,
                e,
                s,
                k0: velocity(model, &p0),
                k: velocity(model, &p_end),
                kbar0: p0,
                kbar: p_end,
                s0,
                residual: fnorm,
                iterations: it,
            });
        }
        if it == opts.max_iter {
            break;
        }
        // Jacobian columns: chart directions by forward differences on the
        // replayed mesh, time by the velocity at the end point
        let chart = DirChart::around(n, &u);
        let w = chart.params(&u);
        let mut jac = vec![vec![T::zero(); n]; n];
        let base = unpack(&ode::replay(&sys, T::zero(), pack(q0, &launch(model, q0, e, &u)?), &shot.solution.hs)).0;
        for (j, _) in w.iter().enumerate() {
            let mut wp = w.clone();
            wp[j] += opts.fd_step;
            let up = chart.point(&wp).ok_or_else(|| Error::NoConvergence("chart left".into()))?;
            let pp = launch(model, q0, e, &up)?;
            let xp = unpack(&ode::replay(&sys, T::zero(), pack(q0, &pp), &shot.solution.hs)).0;
            let col = (xp - base).scale(T::one() / opts.fd_step);
            for i in 0..n {
                jac[i][j] = col.0[i];
            }
        }
        let (_, p_end) = unpack(&shot.solution.y_end);
        let vend = velocity(model, &p_end);
        for i in 0..n {
            jac[i][n - 1] = vend.0[i];
        }
        let rhs: Vec<T> = (0..n).map(|i| -f.0[i]).collect();
        let delta = solve_dense(&jac, &rhs).ok_or_else(|| Error::NoConvergence("singular Jacobian".into()))?;
        let mut lam = T::one();
        let mut accepted = false;
        for _ in 0..12 {
            let wn: Vec<T> = w.iter().zip(&delta).map(|(a, d)| *a + lam * *d).collect();
            let sn = s + lam * delta[n - 1];
            if let (Some(un), true) = (chart.point(&wn), sn > T::zero()) {
                if let Ok((sh, fnew)) = eval(&un, sn) {
                    let nn = fnew.norm();
                    if nn < fnorm * (T::one() - T::lit(1e-4) * lam) || nn <= opts.tol {
                        u = un;
                        s = sn;
                        shot = sh;
                        f = fnew;
                        fnorm = nn;
                        accepted = true;
                        break;
                    }
                }
            }
            lam *= T::lit(0.5);
        }
        if !accepted {
            break;
        }
    }
    Err(Error::NoConvergence(format!("miss {:.3e}", fnorm.as_f64())))
}

/// Chord guess: launch along `q − q0` for the time a free particle at the local speed needs.
fn chord_guess<T: Real>(model: &FieldModel<T>, q0: &Vec3<T>, q: &Vec3<T>, e: T) -> Result<(Vec3<T>, T)> {
    let d = *q - *q0;
    let speed = crate::dynamics::shell_speed(model, q0, e)?;
    let vq = crate::dynamics::shell_speed(model, q, e)?;
    let mean = T::lit(0.5) * (speed + vq);
    if !(mean > T::zero()) {
        return Err(Error::EnergyTooLow { energy: e.as_f64(), floor: e.as_f64() });
    }
    Ok((d.normalized(), d.norm() / mean))
}

/// Start directions on a coarse grid, ordered by closest approach to `q`.
fn multistart_guesses<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    q0: &Vec3<T>,
    q: &Vec3<T>,
    e: T,
    opts: &ShootOptions<T>,
) -> Vec<(Vec3<T>, T)> {
    let n = model.dim;
    let sys = PhaseSystem::new(model);
    let horizon = T::lit(10.0) * domain.delta() / model.c.min(T::one()).max(T::lit(1e-3));
    let dirs: Vec<Vec3<T>> = if n == 2 {
        (0..opts.starts)
            .map(|k| unit_from_angles(2, &[T::TAU() * T::from_count(k) / T::from_count(opts.starts)]))
            .collect()
    } else {
        let d = ConvexDomain::unit_ball(3);
        d.boundary_grid(opts.starts)
    };
    let mut out: Vec<(T, Vec3<T>, T)> = Vec::new();
    for u in dirs {
        let Ok(p0) = launch(model, q0, e, &u) else { continue };
        let mut o = opts.flow.ode;
        o.tol.rtol = T::lit(1e-8);
        o.tol.atol = T::lit(1e-10);
        let Ok(sol) = ode::integrate(&sys, T::zero(), pack(q0, &p0), horizon, &o, None) else { continue };
        let mut best = (T::infinity(), T::zero());
        for d in &sol.dense {
            for j in 0..8 {
                let t = d.t0 + d.h * T::from_count(j) / T::lit(8.0);
                let y = d.eval(t);
                let dist = (Vec3([y[0], y[1], y[2]]) - *q).norm();
                if dist < best.0 && t > T::zero() {
                    best = (dist, t);
                }
            }
        }
        if best.0.is_finite() {
            out.push((best.0, u, best.1));
        }
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out.into_iter().map(|(_, u, s)| (u, s)).collect()
}

fn check_pair<T: Real>(model: &FieldModel<T>, domain: &ConvexDomain<T>, q0: &Vec3<T>, q: &Vec3<T>) -> Result<()> {
    for x in [q0, q] {
        let chi = domain.chi(x);
        if chi > T::lit(1e-9) {
            return Err(Error::OutsideDomain(chi.as_f64()));
        }
    }
    if (*q - *q0).norm() == T::zero() {
        return Err(Error::InvalidParameter("q0 = q".into()));
    }
    let _ = model;
    Ok(())
}

/// Solves the two-point problem from `q0` to `q` at energy `e`. The reduced
/// action is accumulated in the analytic gauge of the model.
pub fn shoot<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    q0: &Vec3<T>,
    q: &Vec3<T>,
    e: T,
    opts: &ShootOptions<T>,
) -> Result<BoundaryDatum<T>> {
    shoot_with(model, Some(model), domain, q0, q, e, opts, None)
}

/// Shooting with an explicit gauge (or none) and an optional `(direction, time)` warm start.
#[allow(clippy::too_many_arguments)]
pub fn shoot_with<T: Real>(
    model: &FieldModel<T>,
    gauge: Option<&dyn Gauge<T>>,
    domain: &ConvexDomain<T>,
    q0: &Vec3<T>,
    q: &Vec3<T>,
    e: T,
    opts: &ShootOptions<T>,
    guess: Option<(Vec3<T>, T)>,
) -> Result<BoundaryDatum<T>> {
    check_pair(model, domain, q0, q)?;
    let first = match guess {
        Some(g) => g,
        None => chord_guess(model, q0, q, e)?,
    };
    let mut last_err = match newton(model, gauge, domain, q0, q, e, first.0, first.1, opts) {
        Ok(d) => return Ok(d),
        Err(err @ Error::EnergyTooLow { .. }) => return Err(err),
        Err(err) => err,
    };
    if guess.is_some() {
        let (u, s) = chord_guess(model, q0, q, e)?;
        match newton(model, gauge, domain, q0, q, e, u, s, opts) {
            Ok(d) => return Ok(d),
            Err(err) => last_err = err,
        }
    }
    for (u, s) in multistart_guesses(model, domain, q0, q, e, opts) {
        match newton(model, gauge, domain, q0, q, e, u, s, opts) {
            Ok(d) => return Ok(d),
            Err(err) => last_err = err,
        }
    }
    Err(last_err)
}

/// Converged solutions from the chord guess and from every multistart direction.
pub fn shoot_all<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    q0: &Vec3<T>,
    q: &Vec3<T>,
    e: T,
    opts: &ShootOptions<T>,
) -> Result<Vec<BoundaryDatum<T>>> {
    check_pair(model, domain, q0, q)?;
    let mut starts = vec![chord_guess(model, q0, q, e)?];
    starts.extend(multistart_guesses(model, domain, q0, q, e, opts));
    Ok(starts.into_iter().filter_map(|(u, s)| newton(model, None, domain, q0, q, e, u, s, opts).ok()).collect())
}

/// `∫₀^s P·ẋ dt` along the datum's trajectory in the supplied gauge; zero when `q0 = q`.
pub fn reduced_action<T: Real>(
    model: &FieldModel<T>,
    datum: &BoundaryDatum<T>,
    gauge: &dyn Gauge<T>,
    opts: &ShootOptions<T>,
) -> Result<T> {
    if datum.q0 == datum.q {
        return Ok(T::zero());
    }
    let sys = PhaseSystem::with_gauge(model, Some(gauge));
    let sol = ode::integrate(&sys, T::zero(), pack(&datum.q0, &datum.kbar0), datum.s, &opts.flow.ode, None)?;
    Ok(sol.y_end[6])
}

/// Impulse magnitude `|k̄|` implied by the speed law at `x`.
pub fn impulse_from_speed<T: Real>(model: &FieldModel<T>, k: &Vec3<T>) -> Result<Vec3<T>> {
    match model.mode {
        Mode::Relativistic => crate::dynamics::g_inverse(k, model.c),
        Mode::Nonrelativistic => Ok(*k),
    }
}

#[derive(Clone, Debug)]
pub struct SweepEntry<T> {
    pub i: usize,
    pub j: usize,
    pub result: std::result::Result<BoundaryDatum<T>, Error>,
}

#[derive(Clone, Debug)]
pub struct BoundarySweep<T> {
    pub grid: Vec<Vec3<T>>,
    pub e: T,
    pub cutoff: T,
    pub entries: Vec<SweepEntry<T>>,
}

impl<T: Real> BoundarySweep<T> {
    pub fn data(&self) -> impl Iterator<Item = &BoundaryDatum<T>> {
        self.entries.iter().filter_map(|e| e.result.as_ref().ok())
    }

    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| e.result.is_err()).count()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&BoundaryDatum<T>> {
        self.entries.iter().find(|e| e.i == i && e.j == j).and_then(|e| e.result.as_ref().ok())
    }
}

/// Boundary data for every ordered grid pair at least `cutoff_frac · diam` apart.
pub fn boundary_sweep<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    e: T,
    grid: &[Vec3<T>],
    cutoff_frac: T,
    opts: &ShootOptions<T>,
) -> BoundarySweep<T> {
    let cutoff = cutoff_frac * domain.diameter();
    let mut pairs = Vec::new();
    for i in 0..grid.len() {
        for j in 0..grid.len() {
            if i != j && (grid[i] - grid[j]).norm() >= cutoff {
                pairs.push((i, j));
            }
        }
    }
    let entries = pairs
        .par_iter()
        .map(|&(i, j)| SweepEntry { i, j, result: shoot(model, domain, &grid[i], &grid[j], e, opts) })
        .collect();
    BoundarySweep { grid: grid.to_vec(), e, cutoff, entries }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KSample<T> {
    pub x: Vec3<T>,
    /// `k̄(E, ζ, x)`.
    pub kbar: Vec3<T>,
    /// `ν(ζ, x) = −k/|k|`.
    pub nu: Vec3<T>,
}

/// `k̄(E, ζ, x)` at each interior point by shooting from `ζ`.
pub fn interior_k_field<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    e: T,
    zeta: &Vec3<T>,
    points: &[Vec3<T>],
    opts: &ShootOptions<T>,
) -> Vec<Result<KSample<T>>> {
    points
        .par_iter()
        .map(|x| {
            let d = shoot_with(model, None, domain, zeta, x, e, opts, None)?;
            Ok(KSample { x: *x, kbar: d.kbar, nu: -d.k.normalized() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{impulse_radius, shell_speed};
    use crate::fields::{MagneticTerm, Profile};

    fn bump_model() -> FieldModel<f64> {
        FieldModel::<f64>::free(2, 1.0, Mode::Relativistic)
            .with_potential(Vec3::new(0.1, -0.1, 0.0), Profile::Bump { amplitude: 0.05, radius: 0.6 })
            .with_magnetic(MagneticTerm::Planar {
                center: Vec3::new(-0.1, 0.1, 0.0),
                profile: Profile::Bump { amplitude: 0.3, radius: 0.5 },
            })
    }

    #[test]
    fn free_chord_closed_form() {
        let m = FieldModel::<f64>::free(2, 1.0, Mode::Relativistic);
        let d = ConvexDomain::ball(2, Vec3::zero(), 1.2).unwrap();
        let q0 = Vec3::new(-1.0, 0.0, 0.0);
        let q = Vec3::new(1.0, 0.0, 0.0);
        let b = shoot(&m, &d, &q0, &q, 2.0, &ShootOptions::default()).unwrap();
        assert!((b.s - 4.0 / 3f64.sqrt()).abs() < 1e-10);
        assert!((b.k0 - Vec3::new(3f64.sqrt() / 2.0, 0.0, 0.0)).norm() < 1e-10);
        assert!((b.k - b.k0).norm() < 1e-10);
        assert!((b.s0.unwrap() - 3f64.sqrt() * 2.0).abs() < 1e-9);
    }

    #[test]
    fn speed_law_holds_for_bump_field() {
        let m = bump_model();
        let d = ConvexDomain::<f64>::unit_ball(2);
        let grid = d.boundary_grid(7);
        let o = ShootOptions::default();
        for i in 0..grid.len() {
            for j in 0..grid.len() {
                if i == j {
                    continue;
                }
                let b = shoot(&m, &d, &grid[i], &grid[j], 3.0, &o).unwrap();
                assert!((b.k0.norm() - shell_speed(&m, &grid[i], 3.0).unwrap()).abs() < 1e-9);
                assert!((b.k.norm() - shell_speed(&m, &grid[j], 3.0).unwrap()).abs() < 1e-9);
                assert!((b.kbar.norm() - impulse_radius(&m, &grid[j], 3.0).unwrap()).abs() < 1e-9);
                assert!(b.residual <= 1e-11);
            }
        }
    }

    #[test]
    fn three_dimensional_constant_field() {
        let m = FieldModel::<f64>::free(3, 1.0, Mode::Relativistic)
            .with_magnetic(MagneticTerm::Constant(crate::linalg::Mat3::antisymmetric(0.2, -0.1, 0.15)));
        let d = ConvexDomain::<f64>::unit_ball(3);
        let grid = d.boundary_grid(6);
        let o = ShootOptions::default();
        for i in 0..grid.len() {
            for j in 0..grid.len() {
                if i != j {
                    let b = shoot(&m, &d, &grid[i], &grid[j], 3.0, &o).unwrap();
                    assert!(b.residual <= 1e-11);
                }
            }
        }
    }

    #[test]
    fn nonrelativistic_constant_field_matches_angle_scan() {
        let b = 0.5;
        let m = FieldModel::<f64>::free(2, 1.0, Mode::Nonrelativistic).with_constant_b12(b);
        let d = ConvexDomain::<f64>::unit_ball(2);
        let e = 2.0;
        let q0 = Vec3::new(-1.0, 0.0, 0.0);
        let q = unit_from_angles(2, &[0.3]);
        let sh = shoot(&m, &d, &q0, &q, e, &ShootOptions::default()).unwrap();
        // circles of radius |v|/b through q0; scan launch angles for the one passing through q
        let v = (2.0 * e).sqrt();
        let rad = v / b;
        let miss = |th: f64| {
            let u = unit_from_angles::<f64>(2, &[th]);
            // clockwise rotation: centre to the right of the velocity
            let c = q0 + Vec3::new(u.0[1], -u.0[0], 0.0).scale(rad);
            (q - c).norm() - rad
        };
        let mut best = f64::NAN;
        let n = 200_000;
        let mut prev = miss(-1.5);
        for k in 1..=n {
            let th = -1.5 + 3.0 * k as f64 / n as f64;
            let cur = miss(th);
            if prev.signum() != cur.signum() {
                let (mut a, mut bb) = (th - 3.0 / n as f64, th);
                for _ in 0..60 {
                    let mid = 0.5 * (a + bb);
                    if miss(mid).signum() == miss(a).signum() {
                        a = mid;
                    } else {
                        bb = mid;
                    }
                }
                best = 0.5 * (a + bb);
                break;
            }
            prev = cur;
        }
        let th = sh.k0.0[1].atan2(sh.k0.0[0]);
        assert!((th - best).abs() < 1e-6, "{th} vs {best}");
    }

    #[test]
    fn multistart_finds_a_single_solution() {
        let m = bump_model();
        let d = ConvexDomain::<f64>::unit_ball(2);
        let q0 = unit_from_angles(2, &[2.5]);
        let q = unit_from_angles(2, &[-0.4]);
        let all = shoot_all(&m, &d, &q0, &q, 3.0, &ShootOptions::default()).unwrap();
        assert!(all.len() >= 8);
        for b in &all {
            assert!((b.s - all[0].s).abs() < 1e-6);
            assert!((b.k0 - all[0].k0).norm() < 1e-6);
        }
    }

    #[test]
    fn reduced_action_free_and_gradient() {
        let m = FieldModel::<f64>::free(2, 1.0, Mode::Relativistic);
        let d = ConvexDomain::<f64>::unit_ball(2);
        let q0 = Vec3::new(-0.5, 0.2, 0.0);
        let q = Vec3::new(0.4, -0.3, 0.0);
        let o = ShootOptions::default();
        let b = shoot(&m, &d, &q0, &q, 2.0, &o).unwrap();
        let r = impulse_radius(&m, &q0, 2.0).unwrap();
        let s0 = reduced_action(&m, &b, &crate::fields::ZeroGauge, &o).unwrap();
        assert!((s0 - r * (q - q0).norm()).abs() < 1e-10);
        let same = BoundaryDatum { q: q0, ..b };
        assert_eq!(reduced_action(&m, &same, &crate::fields::ZeroGauge, &o).unwrap(), 0.0);
    }

    #[test]
    fn interior_field_is_radial_without_fields() {
        let m = FieldModel::<f64>::free(2, 1.0, Mode::Relativistic);
        let d = ConvexDomain::<f64>::unit_ball(2);
        let zeta = Vec3::new(0.0, -1.0, 0.0);
        let pts = vec![Vec3::new(0.2, 0.3, 0.0), Vec3::new(-0.4, 0.1, 0.0)];
        let r = impulse_radius(&m, &Vec3::zero(), 2.5).unwrap();
        for s in interior_k_field(&m, &d, 2.5, &zeta, &pts, &ShootOptions::default()) {
            let s = s.unwrap();
            assert!((s.kbar - (s.x - zeta).normalized().scale(r)).norm() < 1e-9);
        }
    }
}
