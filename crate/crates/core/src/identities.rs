//! Numerical checks of the identities, inequalities and structural
//! properties satisfied by fixed-energy data.

use crate::boundary::{shoot, shoot_with, BoundaryDatum, ShootOptions};
use crate::domain::{random_unit, ConvexDomain};
use crate::dynamics::{
    impulse_radius, integrate_flow, living_time_check, shell_speed, sphere_momentum, velocity, FlowOptions,
    PhaseState,
};
use crate::error::{Error, Result};
use crate::fields::{FieldModel, Gauge};
use crate::linalg::{singular_values, Vec3};
use crate::real::Real;
use crate::thresholds::ThresholdInputs;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Outcome of one check; `passed` iff `max_residual ≤ tolerance`.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub sample_count: usize,
    pub passed: bool,
    /// Worst samples, largest residual first.
    pub details: Vec<String>,
}

const WORST_KEPT: usize = 5;

impl CheckResult {
    /// Folds per-sample outcomes; a failed sample counts as an infinite residual.
    pub fn from_samples(name: &str, tolerance: f64, samples: Vec<Result<(f64, String)>>) -> Self {
        let n = samples.len();
        let mut rows: Vec<(f64, String)> = samples
            .into_iter()
            .map(|s| match s {
                Ok((r, d)) => (if r.is_nan() { f64::INFINITY } else { r }, d),
                Err(e) => (f64::INFINITY, format!("solver failure: {e}")),
            })
            .collect();
        rows.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let max_residual = rows.first().map_or(0.0, |r| r.0);
        let details = rows.into_iter().take(WORST_KEPT).map(|(r, d)| format!("{r:.3e}: {d}")).collect();
        CheckResult {
            name: name.into(),
            max_residual,
            tolerance,
            sample_count: n,
            passed: max_residual <= tolerance,
            details,
        }
    }

    pub fn with_note(mut self, note: String) -> Self {
        self.details.push(note);
        self
    }
}

fn coupling<T: Real>(model: &FieldModel<T>) -> T {
    model.magnetic_coupling()
}

fn curl_scale<T: Real>(model: &FieldModel<T>) -> T {
    T::one() / coupling(model)
}

fn fmt_pt<T: Real>(x: &Vec3<T>, dim: usize) -> String {
    let v: Vec<String> = x.to_f64(dim).iter().map(|c| format!("{c:.4}")).collect();
    format!("({})", v.join(", "))
}

/// Random ordered boundary pairs at least `min_sep` apart.
pub fn boundary_pairs<T: Real>(domain: &ConvexDomain<T>, count: usize, seed: u64, min_sep: T) -> Vec<(Vec3<T>, Vec3<T>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = domain.sample_boundary(&mut rng);
        let b = domain.sample_boundary(&mut rng);
        if (a - b).norm() >= min_sep {
            out.push((a, b));
        }
    }
    out
}

/// Random ordered interior pairs with `χ ≤ −margin` at least `min_sep` apart.
pub fn interior_pairs<T: Real>(
    domain: &ConvexDomain<T>,
    count: usize,
    seed: u64,
    margin: T,
    min_sep: T,
) -> Vec<(Vec3<T>, Vec3<T>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = domain.sample_interior_margin(&mut rng, margin);
        let b = domain.sample_interior_margin(&mut rng, margin);
        if (a - b).norm() >= min_sep {
            out.push((a, b));
        }
    }
    out
}

/// `|k₀| = |v|(q₀)` and `|k| = |v|(q)` for every datum, with `|v|` from the energy shell.
pub fn check_speed_law<T: Real>(model: &FieldModel<T>, data: &[BoundaryDatum<T>], tolerance: f64) -> CheckResult {
    let rows = data
        .iter()
        .map(|d| {
            let r0 = (d.k0.norm() - shell_speed(model, &d.q0, d.e)?).abs();
            let r1 = (d.k.norm() - shell_speed(model, &d.q, d.e)?).abs();
            Ok((r0.max(r1).as_f64(), format!("q0 = {}, q = {}", fmt_pt(&d.q0, model.dim), fmt_pt(&d.q, model.dim))))
        })
        .collect();
    CheckResult::from_samples("speed-law", tolerance, rows)
}

/// Reversal symmetry: the trajectory from `q` back to `q0` in the field `−B`
/// retraces the original one, so `k₀ + k'`, `k + k'₀` and `s − s'` vanish.
pub fn check_reciprocity<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    e: T,
    pairs: &[(Vec3<T>, Vec3<T>)],
    opts: &ShootOptions<T>,
    tolerance: f64,
) -> CheckResult {
    let reversed = model.with_reversed_magnetic();
    let rows = pairs
        .par_iter()
        .map(|(q0, q)| {
            let a = shoot(model, domain, q0, q, e, opts)?;
            let b = shoot(&reversed, domain, q, q0, e, opts)?;
            let r = (a.k0 + b.k).norm().max((a.k + b.k0).norm()).max((a.s - b.s).abs());
            Ok((r.as_f64(), format!("q0 = {}, q = {}", fmt_pt(q0, model.dim), fmt_pt(q, model.dim))))
        })
        .collect();
    CheckResult::from_samples("reciprocity", tolerance, rows)
}

fn action_at<T: Real>(
    model: &FieldModel<T>,
    gauge: &dyn Gauge<T>,
    domain: &ConvexDomain<T>,
    q0: &Vec3<T>,
    q: &Vec3<T>,
    e: T,
    opts: &ShootOptions<T>,
    warm: &BoundaryDatum<T>,
) -> Result<T> {
    let d = shoot_with(model, Some(gauge), domain, q0, q, e, opts, Some((warm.direction(), warm.s)))?;
    d.s0.ok_or_else(|| Error::NoConvergence("reduced action missing".into()))
}

/// Central difference `D(h)` refined by one halving, `(4D(h/2) − D(h))/3`;
/// also returns the halving error estimate `|D(h/2) − D(h)|/3`.
pub fn richardson<T: Real, F>(h: T, d: F) -> Result<(T, T)>
where
    F: Fn(T) -> Result<T>,
{
    let a = d(h)?;
    let b = d(h * T::lit(0.5))?;
    let three = T::lit(3.0);
    Ok(((T::lit(4.0) * b - a) / three, (b - a).abs() / three))
}

/// Halving-refined central differences of the reduced action against
/// `∂S₀/∂x = k̄ + κA(x)` and `∂S₀/∂ζ = −k̄₀ − κA(ζ)`, with `κ = 1/c`
/// (relativistic) or `κ = 1` (nonrelativistic).
#[allow(clippy::too_many_arguments)]
pub fn check_action_gradients<T: Real>(
    model: &FieldModel<T>,
    gauge: &dyn Gauge<T>,
    domain: &ConvexDomain<T>,
    e: T,
    pairs: &[(Vec3<T>, Vec3<T>)],
    h: T,
    opts: &ShootOptions<T>,
    tolerance: f64,
) -> CheckResult {
    let kappa = coupling(model);
    let n = model.dim;
    let rows = pairs
        .par_iter()
        .map(|(zeta, x)| {
            let d = shoot_with(model, Some(gauge), domain, zeta, x, e, opts, None)?;
            let ax = gauge.potential(x);
            let az = gauge.potential(zeta);
            let mut worst = T::zero();
            let mut fd_err = T::zero();
            for i in 0..n {
                let ei = Vec3::axis(i);
                let (gx, ex) = richardson(h, |step| {
                    let sp = action_at(model, gauge, domain, zeta, &(*x + ei.scale(step)), e, opts, &d)?;
                    let sm = action_at(model, gauge, domain, zeta, &(*x - ei.scale(step)), e, opts, &d)?;
                    Ok((sp - sm) / (step + step))
                })?;
                worst = worst.max((gx - d.kbar[i] - kappa * ax[i]).abs());
                let (gz, ez) = richardson(h, |step| {
                    let sp = action_at(model, gauge, domain, &(*zeta + ei.scale(step)), x, e, opts, &d)?;
                    let sm = action_at(model, gauge, domain, &(*zeta - ei.scale(step)), x, e, opts, &d)?;
                    Ok((sp - sm) / (step + step))
                })?;
                worst = worst.max((gz + d.kbar0[i] + kappa * az[i]).abs());
                fd_err = fd_err.max(ex).max(ez);
            }
            Ok((
                worst.as_f64(),
                format!("zeta = {}, x = {}, halving estimate {:.2e}", fmt_pt(zeta, n), fmt_pt(x, n), fd_err.as_f64()),
            ))
        })
        .collect();
    CheckResult::from_samples(&format!("action-gradients[{}]", gauge.label()), tolerance, rows)
}

/// Jacobian `J[i][j] = ∂f_j/∂x_i` by halving-refined central differences.
fn fd_jacobian<T: Real, F>(x: &Vec3<T>, n: usize, h: T, f: F) -> Result<[[T; 3]; 3]>
where
    F: Fn(&Vec3<T>) -> Result<Vec3<T>>,
{
    let mut jac = [[T::zero(); 3]; 3];
    let three = T::lit(3.0);
    for (i, row) in jac.iter_mut().enumerate().take(n) {
        let mut diff = [Vec3::zero(); 2];
        for (k, step) in [h, h * T::lit(0.5)].into_iter().enumerate() {
            let ei = Vec3::axis(i).scale(step);
            diff[k] = (f(&(*x + ei))? - f(&(*x - ei))?).scale(T::one() / (step + step));
        }
        for j in 0..n {
            row[j] = (T::lit(4.0) * diff[1][j] - diff[0][j]) / three;
        }
    }
    Ok(jac)
}

/// Magnetic field recovered at `x` from impulses of trajectories joining `x`
/// and `zeta`: `B_ij = −(1/κ)(∂ᵢk̄ʲ − ∂ⱼk̄ⁱ)` for arrivals at `x`, or the same
/// formula with the launch impulse `k̄₀` when `swapped` (trajectories start at `x`).
pub fn curl_from_impulses<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    e: T,
    zeta: &Vec3<T>,
    x: &Vec3<T>,
    h: T,
    swapped: bool,
    opts: &ShootOptions<T>,
) -> Result<[[T; 3]; 3]> {
    let centre = if swapped {
        shoot_with(model, None, domain, x, zeta, e, opts, None)?
    } else {
        shoot_with(model, None, domain, zeta, x, e, opts, None)?
    };
    let warm = Some((centre.direction(), centre.s));
    let jac = fd_jacobian(x, model.dim, h, |y| {
        if swapped {
            Ok(shoot_with(model, None, domain, y, zeta, e, opts, warm)?.kbar0)
        } else {
            Ok(shoot_with(model, None, domain, zeta, y, e, opts, warm)?.kbar)
        }
    })?;
    let s = curl_scale(model);
    let mut b = [[T::zero(); 3]; 3];
    for i in 0..model.dim {
        for j in 0..model.dim {
            b[i][j] = -s * (jac[i][j] - jac[j][i]);
        }
    }
    Ok(b)
}

/// Curl of the impulse field against the model's `B` at each point.
#[allow(clippy::too_many_arguments)]
pub fn check_curl_formula<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    e: T,
    zeta: &Vec3<T>,
    points: &[Vec3<T>],
    h: T,
    swapped: bool,
    opts: &ShootOptions<T>,
    tolerance: f64,
) -> CheckResult {
    let n = model.dim;
    let rows = points
        .par_iter()
        .map(|x| {
            let b = curl_from_impulses(model, domain, e, zeta, x, h, swapped, opts)?;
            let truth = model.magnetic_field(x);
            let mut worst = T::zero();
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((b[i][j] - truth.0[i][j]).abs());
                }
            }
            Ok((worst.as_f64(), format!("x = {}, B12 = {:.6e}", fmt_pt(x, n), b[0][1].as_f64())))
        })
        .collect();
    let name = if swapped { "curl-formula[launch]" } else { "curl-formula[arrival]" };
    CheckResult::from_samples(name, tolerance, rows)
}

/// Symmetry of the mixed second derivative of the reduced action:
/// `−∂k̄₀ⁱ/∂xⱼ = ∂k̄ʲ/∂ζᵢ`.
#[allow(clippy::too_many_arguments)]
pub fn check_mixed_derivatives<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    e: T,
    pairs: &[(Vec3<T>, Vec3<T>)],
    h: T,
    opts: &ShootOptions<T>,
    tolerance: f64,
) -> CheckResult {
    let n = model.dim;
    let rows = pairs
        .par_iter()
        .map(|(zeta, x)| {
            let d = shoot_with(model, None, domain, zeta, x, e, opts, None)?;
            let warm = Some((d.direction(), d.s));
            let dx = fd_jacobian(x, n, h, |y| Ok(shoot_with(model, None, domain, zeta, y, e, opts, warm)?.kbar0))?;
            let dz = fd_jacobian(zeta, n, h, |y| Ok(shoot_with(model, None, domain, y, x, e, opts, warm)?.kbar))?;
            let mut worst = T::zero();
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((dx[j][i] + dz[i][j]).abs());
                }
            }
            Ok((worst.as_f64(), format!("zeta = {}, x = {}", fmt_pt(zeta, n), fmt_pt(x, n))))
        })
        .collect();
    CheckResult::from_samples("mixed-derivatives", tolerance, rows)
}

/// `|∂²S₀/∂ζ∂x| · |ζ − x|` as `ζ` approaches `x` along `dir` at distances
/// `d0 / 2^k`; bounded values indicate the expected `|ζ − x|⁻¹` growth.
pub fn near_diagonal_growth<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    e: T,
    x: &Vec3<T>,
    dir: &Vec3<T>,
    d0: T,
    levels: usize,
    opts: &ShootOptions<T>,
) -> Result<Vec<(f64, f64)>> {
    let n = model.dim;
    let u = dir.normalized();
    let mut out = Vec::with_capacity(levels);
    let mut d = d0;
    for _ in 0..levels {
        let zeta = *x + u.scale(d);
        let h = d * T::lit(1e-3);
        let centre = shoot_with(model, None, domain, &zeta, x, e, opts, None)?;
        let warm = Some((centre.direction(), centre.s));
        let jac = fd_jacobian(&zeta, n, h, |y| Ok(shoot_with(model, None, domain, y, x, e, opts, warm)?.kbar))?;
        let mut norm = T::zero();
        for row in jac.iter().take(n) {
            for v in row.iter().take(n) {
                norm += *v * *v;
            }
        }
        out.push((d.as_f64(), (norm.sqrt() * d).as_f64()));
        d *= T::lit(0.5);
    }
    Ok(out)
}

/// Boundedness along refinement: the largest scaled value over the finer
/// half of the sequence exceeds the coarser half's by at most `ratio`.
pub fn check_near_diagonal(name: &str, series: &[(f64, f64)], ratio: f64) -> CheckResult {
    let half = series.len() / 2;
    let coarse = series[..half].iter().map(|s| s.1).fold(0.0, f64::max);
    let fine = series[half..].iter().map(|s| s.1).fold(0.0, f64::max);
    let r = if coarse > 0.0 { fine / coarse } else { f64::INFINITY };
    let details = series.iter().map(|(d, v)| format!("distance {d:.3e}: scaled mixed derivative {v:.6e}")).collect();
    CheckResult {
        name: name.into(),
        max_residual: r,
        tolerance: ratio,
        sample_count: series.len(),
        passed: r <= ratio,
        details,
    }
}

/// Energy along sampled flights through interior points.
pub fn check_energy_conservation<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    e: T,
    samples: usize,
    seed: u64,
    opts: &FlowOptions<T>,
    tolerance: f64,
) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<_> = (0..samples)
        .map(|_| (domain.sample_interior(&mut rng), random_unit::<T, _>(model.dim, &mut rng)))
        .collect();
    let budget = T::lit(20.0) * domain.delta() / model.c;
    let mut strict = *opts;
    strict.drift_factor = T::infinity();
    let rows = draws
        .par_iter()
        .map(|(x, u)| {
            let p = sphere_momentum(model, x, e, u)?;
            let s = PhaseState::new(*x, p);
            let fw = integrate_flow(model, Some(domain), &s, budget, &strict)?;
            let bw = integrate_flow(model, Some(domain), &s, -budget, &strict)?;
            let drift = fw.energy_drift.max(bw.energy_drift);
            Ok((drift.as_f64(), format!("x = {}", fmt_pt(x, model.dim))))
        })
        .collect();
    CheckResult::from_samples("energy-conservation", tolerance, rows)
}

/// Every sampled flight crosses `D` within `5δ/c`.
pub fn check_living_time<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    e: T,
    samples: usize,
    seed: u64,
    opts: &FlowOptions<T>,
) -> CheckResult {
    let rep = living_time_check(model, domain, e, samples, seed, opts);
    let excess = if rep.failures > 0 { f64::INFINITY } else { (rep.max_flight - rep.bound).max(0.0) };
    CheckResult {
        name: "living-time".into(),
        max_residual: excess,
        tolerance: 0.0,
        sample_count: rep.samples,
        passed: excess <= 0.0,
        details: vec![format!(
            "longest flight {:.6} against bound {:.6}; {} violations, {} failures",
            rep.max_flight, rep.bound, rep.violations, rep.failures
        )],
    }
}

fn flow_to_exit<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    x: &Vec3<T>,
    p: &Vec3<T>,
    opts: &FlowOptions<T>,
) -> Result<crate::dynamics::FlowResult<T>> {
    let budget = T::lit(20.0) * domain.delta() / model.c;
    let f = integrate_flow(model, Some(domain), &PhaseState::new(*x, *p), budget, opts)?;
    if f.exit_time.is_none() {
        return Err(Error::Trapped(budget.as_f64()));
    }
    Ok(f)
}

/// Near-isometry of the flow out of a point:
/// `| |ψ(t₁,x,p₁) − ψ(t₂,x,p₂)| − |t₁v₁ − t₂v₂| | ≤ C3 |t₁v₁ − t₂v₂|`
/// with `vᵢ` the initial velocities and `C3` evaluated at `V(x)`.
#[allow(clippy::too_many_arguments)]
pub fn check_injectivity_bound<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    e: T,
    samples: usize,
    seed: u64,
    resolution: usize,
    opts: &FlowOptions<T>,
) -> CheckResult {
    let inputs = ThresholdInputs::new(model, domain, resolution);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<_> = (0..samples)
        .map(|k| {
            let x = domain.sample_interior(&mut rng);
            let u1 = random_unit::<T, _>(model.dim, &mut rng);
            // Every other triple uses nearby directions, where the bound is tightest.
            let u2 = if k % 2 == 0 {
                random_unit::<T, _>(model.dim, &mut rng)
            } else {
                let eps: f64 = rng.gen_range(1e-4..1e-1);
                (u1 + random_unit::<T, _>(model.dim, &mut rng).scale(T::lit(eps))).normalized()
            };
            let f1: f64 = rng.gen();
            let f2: f64 = rng.gen();
            (x, u1, u2, T::lit(f1), T::lit(f2))
        })
        .collect();
    let rows = draws
        .par_iter()
        .map(|(x, u1, u2, f1, f2)| {
            let p1 = sphere_momentum(model, x, e, u1)?;
            let p2 = sphere_momentum(model, x, e, u2)?;
            let a = flow_to_exit(model, domain, x, &p1, opts)?;
            let b = flow_to_exit(model, domain, x, &p2, opts)?;
            let t1 = *f1 * a.exit_time.unwrap();
            let t2 = *f2 * b.exit_time.unwrap();
            let y1 = a.state_at(t1).x;
            let y2 = b.state_at(t2).x;
            let chord = (velocity(model, &p1).scale(t1) - velocity(model, &p2).scale(t2)).norm();
            let lhs = ((y1 - y2).norm() - chord).abs();
            let c3 = inputs.c345(e, model.potential_value(x)).0;
            let excess = (lhs - c3 * chord).max(T::zero());
            Ok((
                excess.as_f64(),
                format!("x = {}, lhs = {:.3e}, C3|t1v1 - t2v2| = {:.3e}", fmt_pt(x, model.dim), lhs.as_f64(), (c3 * chord).as_f64()),
            ))
        })
        .collect();
    CheckResult::from_samples("injectivity-bound", 1e-10, rows)
}

/// Orthonormal basis of the complement of `u` in `R^dim`.
fn tangent_frame<T: Real>(u: &Vec3<T>, dim: usize) -> Vec<Vec3<T>> {
    let mut out: Vec<Vec3<T>> = Vec::new();
    for i in 0..dim {
        let mut w = Vec3::axis(i);
        w -= u.scale(u.dot(&w));
        for f in &out {
            let c = f.dot(&w);
            w -= f.scale(c);
        }
        if w.norm() > T::lit(1e-3) {
            out.push(w.normalized());
        }
        if out.len() + 1 == dim {
            break;
        }
    }
    out
}

/// Smallest singular value of the Jacobian of `(t, u) ↦ ψ(t, x, r·φ(u))`
/// with `φ` an orthonormal chart of the direction sphere.
pub fn flow_jacobian_min_singular<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    e: T,
    x: &Vec3<T>,
    u: &Vec3<T>,
    t: T,
    eta: T,
    opts: &FlowOptions<T>,
) -> Result<T> {
    let n = model.dim;
    let u = u.normalized();
    let p = sphere_momentum(model, x, e, &u)?;
    let base = flow_to_exit(model, domain, x, &p, opts)?;
    let mut cols = vec![velocity(model, &base.state_at(t).p)];
    for f in tangent_frame(&u, n) {
        let pp = sphere_momentum(model, x, e, &(u + f.scale(eta)))?;
        let pm = sphere_momentum(model, x, e, &(u - f.scale(eta)))?;
        let budget = t * T::lit(1.01);
        let a = integrate_flow(model, None, &PhaseState::new(*x, pp), budget, opts)?;
        let b = integrate_flow(model, None, &PhaseState::new(*x, pm), budget, opts)?;
        cols.push((a.state_at(t).x - b.state_at(t).x).scale(T::one() / (eta + eta)));
    }
    let rows: Vec<Vec<T>> = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    Ok(singular_values(&rows)[0])
}

/// Smallest singular value of the flow Jacobian against the floor
/// `min(c·C6, t·C7)/√n`.
#[allow(clippy::too_many_arguments)]
pub fn check_diffeo_jacobian<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    e: T,
    samples: usize,
    seed: u64,
    resolution: usize,
    opts: &FlowOptions<T>,
) -> CheckResult {
    let inputs = ThresholdInputs::new(model, domain, resolution);
    let report = match inputs.report(e) {
        Ok(r) => r,
        Err(err) => return CheckResult::from_samples("diffeo-jacobian", 0.0, vec![Err(err)]),
    };
    let c = model.c.as_f64();
    let sqrt_n = (model.dim as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<_> = (0..samples)
        .map(|_| {
            let x = domain.sample_interior(&mut rng);
            let u = random_unit::<T, _>(model.dim, &mut rng);
            let f: f64 = rng.gen_range(0.02..1.0);
            (x, u, f)
        })
        .collect();
    let rows = draws
        .par_iter()
        .map(|(x, u, f)| {
            let p = sphere_momentum(model, x, e, u)?;
            let exit = flow_to_exit(model, domain, x, &p, opts)?.exit_time.unwrap();
            let t = exit * T::lit(*f);
            let sigma = flow_jacobian_min_singular(model, domain, e, x, u, t, T::lit(1e-5), opts)?.as_f64();
            let floor = (c * report.c6).min(t.as_f64() * report.c7) / sqrt_n;
            let deficit = (floor - sigma).max(0.0);
            Ok((deficit, format!("x = {}, t = {:.4}, sigma = {sigma:.6e}, floor = {floor:.6e}", fmt_pt(x, model.dim), t.as_f64())))
        })
        .collect();
    CheckResult::from_samples("diffeo-jacobian", 1e-9, rows)
        .with_note(format!("C6 = {:.6e}, C7 = {:.6e}", report.c6, report.c7))
}

/// The direction map `ζ ↦ ν(ζ, x) = −k/|k|` winds once, positively, as `ζ`
/// runs counterclockwise over `∂D` (plane only).
pub fn check_orientation<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    e: T,
    points: &[Vec3<T>],
    m: usize,
    opts: &ShootOptions<T>,
) -> CheckResult {
    if model.dim != 2 {
        return CheckResult::from_samples("orientation", 0.0, vec![Err(Error::UnsupportedDimension(model.dim))]);
    }
    let grid = domain.boundary_grid(m);
    let rows = points
        .par_iter()
        .map(|x| {
            let mut angles = Vec::with_capacity(m);
            for z in &grid {
                let d = shoot_with(model, None, domain, z, x, e, opts, None)?;
                let nu = -d.k;
                angles.push(nu[1].atan2(nu[0]).as_f64());
            }
            let pi = std::f64::consts::PI;
            let mut total = 0.0;
            let mut min_step = f64::INFINITY;
            for i in 0..m {
                let mut step = angles[(i + 1) % m] - angles[i];
                while step > pi {
                    step -= 2.0 * pi;
                }
                while step <= -pi {
                    step += 2.0 * pi;
                }
                total += step;
                min_step = min_step.min(step);
            }
            let r = (-min_step).max(0.0) + (total - 2.0 * pi).abs();
            Ok((r, format!("x = {}, smallest step {min_step:.4e}, winding {:.6}", fmt_pt(x, 2), total / (2.0 * pi))))
        })
        .collect();
    CheckResult::from_samples("orientation", 1e-9, rows)
}

/// Abbreviated action `∫ (r(y)|ẏ| + κ A(y)·ẏ) dτ` of the datum's path
/// perturbed by `ε η(τ)` with `η(τ) = sin(πτ) b₁ + sin(2πτ) b₂` (ends fixed).
fn abbreviated_action<T: Real>(
    model: &FieldModel<T>,
    flow: &crate::dynamics::FlowResult<T>,
    s: T,
    e: T,
    b: &[Vec3<T>; 2],
    eps: T,
    panels: usize,
) -> Result<T> {
    let kappa = coupling(model);
    let (gx, gw) = gauss_legendre::<T>(8);
    let pi = T::PI();
    let mut sum = T::zero();
    let width = T::one() / T::from_count(panels);
    for k in 0..panels {
        let a = T::from_count(k) * width;
        for (xi, wi) in gx.iter().zip(&gw) {
            let tau = a + (*xi + T::one()) * T::lit(0.5) * width;
            let st = flow.state_at(s * tau);
            let eta = b[0].scale((pi * tau).sin()) + b[1].scale((pi * tau * T::lit(2.0)).sin());
            let deta = b[0].scale(pi * (pi * tau).cos()) + b[1].scale(T::lit(2.0) * pi * (T::lit(2.0) * pi * tau).cos());
            let y = st.x + eta.scale(eps);
            let ydot = velocity(model, &st.p).scale(s) + deta.scale(eps);
            let r = impulse_radius(model, &y, e)?;
            let f = r * ydot.norm() + kappa * model.vector_potential(&y).dot(&ydot);
            sum += *wi * T::lit(0.5) * width * f;
        }
    }
    Ok(sum)
}

/// Stationarity of the abbreviated action at fixed-energy trajectories:
/// the first variation along endpoint-fixing perturbations vanishes.
#[allow(clippy::too_many_arguments)]
pub fn check_maupertuis<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    e: T,
    pairs: &[(Vec3<T>, Vec3<T>)],
    seed: u64,
    opts: &ShootOptions<T>,
    tolerance: f64,
) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<[Vec3<T>; 2]> = pairs
        .iter()
        .map(|_| [random_unit(model.dim, &mut rng), random_unit(model.dim, &mut rng)])
        .collect();
    let eps = T::lit(1e-4);
    let rows = pairs
        .par_iter()
        .zip(dirs.par_iter())
        .map(|((q0, q), b)| {
            let d = shoot(model, domain, q0, q, e, opts)?;
            let flow = integrate_flow(model, None, &PhaseState::new(*q0, d.kbar0), d.s, &opts.flow)?;
            let a0 = abbreviated_action(model, &flow, d.s, e, b, T::zero(), 64)?;
            let (variation, _) = richardson(eps, |step| {
                let ap = abbreviated_action(model, &flow, d.s, e, b, step, 64)?;
                let am = abbreviated_action(model, &flow, d.s, e, b, -step, 64)?;
                Ok((ap - am) / (step + step))
            })?;
            let variation = variation.abs();
            let scale = a0.abs().max(T::one());
            Ok(((variation / scale).as_f64(), format!("q0 = {}, q = {}, action {:.6e}", fmt_pt(q0, model.dim), fmt_pt(q, model.dim), a0.as_f64())))
        })
        .collect();
    CheckResult::from_samples("maupertuis", tolerance, rows)
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x.into_iter().map(T::lit).collect(), w.into_iter().map(T::lit).collect())
}

/// Resolution and tolerance settings of [`check_uniqueness_estimate`].
#[derive(Clone, Copy, Debug)]
pub struct UniquenessOptions<T> {
    /// Boundary grid sizes for the boundary-pair integral (coarse, fine).
    pub boundary_grids: (usize, usize),
    /// Interior quadrature `(radial, angular, directions)` at the fine level; the coarse level halves each.
    pub interior_grid: (usize, usize, usize),
    /// Interior quadrature for the potential-difference integral.
    pub lhs_grid: (usize, usize),
    /// Chart step for the boundary derivative of the action.
    pub fd_step: T,
    /// Pairs closer than `cutoff_frac · diam` are excluded.
    pub cutoff_frac: T,
    /// Allowed relative gap between the two sides of the Stokes identity.
    pub rel_tol: f64,
    /// Absolute level below which a quantity counts as zero.
    pub abs_tol: f64,
    pub shoot: ShootOptions<T>,
}

impl<T: Real> Default for UniquenessOptions<T> {
    fn default() -> Self {
        UniquenessOptions {
            boundary_grids: (24, 48),
            interior_grid: (16, 32, 16),
            lhs_grid: (64, 128),
            fd_step: T::lit(1e-4),
            cutoff_frac: T::lit(0.05),
            rel_tol: 0.02,
            abs_tol: 1e-9,
            shoot: ShootOptions::default(),
        }
    }
}

/// The plane uniqueness estimate for two fields at one energy.
///
/// * `lhs = ∫_D (r₁ − r₂)² dx`.
/// * `boundary_integral`: the boundary-pair integral
///   `−∬ (k̄₂ − k̄₁)(ζ, x)·x′(θₓ) ∂_{θ_ζ}(S₀² − S₀¹)(ζ, x) dθ_ζ dθₓ`,
///   trapezoidal on two grids and extrapolated as `2 I_fine − I_coarse`.
/// * `interior_integral`: `∫_D Σ_μ r_μ² ∫_{S¹} (1 + w·k̄_{μ'}(ζ_{μ,x}(w), x)/r_μ) dw dx`,
///   where `ζ_{μ,x}(w)` is the source whose trajectory in field `μ` arrives at
///   `x` with direction `−w`.
///
/// Stokes' formula makes the two integrals equal and
/// `lhs ≤ boundary_integral / 2π`.
#[derive(Clone, Debug, Serialize)]
pub struct UniquenessEstimate {
    pub energy: f64,
    pub lhs: f64,
    pub boundary_coarse: f64,
    pub boundary_fine: f64,
    pub boundary_integral: f64,
    /// Same integral with the chart derivative taken from launch impulses instead of differences.
    pub boundary_from_impulses: f64,
    pub interior_coarse: f64,
    pub interior_fine: f64,
    pub interior_integral: f64,
    /// Largest `|Σ_μ r_μ²(1 + w·k̄_{μ'}/r_μ)|` on the interior grid.
    pub interior_integrand_max: f64,
    pub rhs: f64,
    pub margin: f64,
    pub relative_gap: f64,
    /// Bound on the contribution of the excluded near-diagonal band.
    pub diagonal_bound: f64,
    pub excluded_pairs: usize,
    pub failures: usize,
    pub identity_holds: bool,
    pub inequality_holds: bool,
}

pub(crate) fn potential_lhs<T: Real>(m1: &FieldModel<T>, m2: &FieldModel<T>, domain: &ConvexDomain<T>, e: T, grid: (usize, usize)) -> Result<f64> {
    let (gx, gw) = gauss_legendre::<T>(grid.0);
    let jac = domain.semi_axes[0] * domain.semi_axes[1];
    let mut sum = T::zero();
    for (xi, wi) in gx.iter().zip(&gw) {
        let rho = (*xi + T::one()) * T::lit(0.5);
        for j in 0..grid.1 {
            let phi = T::lit(2.0) * T::PI() * (T::from_count(j) + T::lit(0.5)) / T::from_count(grid.1);
            let x = disk_point(domain, rho, phi);
            let d = impulse_radius(m1, &x, e)? - impulse_radius(m2, &x, e)?;
            sum += *wi * T::lit(0.5) * rho * d * d;
        }
    }
    Ok((sum * jac * T::lit(2.0) * T::PI() / T::from_count(grid.1)).as_f64())
}

fn disk_point<T: Real>(domain: &ConvexDomain<T>, rho: T, phi: T) -> Vec3<T> {
    let (s, c) = phi.sin_cos();
    domain.center + Vec3::new(domain.semi_axes[0] * rho * c, domain.semi_axes[1] * rho * s, T::zero())
}

struct BoundaryIntegral {
    value: f64,
    from_impulses: f64,
    diagonal_bound: f64,
    excluded: usize,
    failures: usize,
}

fn boundary_pair_integral<T: Real>(
    models: [&FieldModel<T>; 2],
    domain: &ConvexDomain<T>,
    e: T,
    m: usize,
    opts: &UniquenessOptions<T>,
) -> BoundaryIntegral {
    let two_pi = T::lit(2.0) * T::PI();
    let dtheta = two_pi / T::from_count(m);
    let cutoff = opts.cutoff_frac * domain.diameter();
    let h = opts.fd_step;
    let mut pairs = Vec::new();
    let mut excluded = 0;
    for i in 0..m {
        for j in 0..m {
            let zi = domain.chart(&[dtheta * T::from_count(i)]);
            let xj = domain.chart(&[dtheta * T::from_count(j)]);
            if (zi - xj).norm() < cutoff {
                excluded += 1;
            } else {
                pairs.push((i, j));
            }
        }
    }
    let vals: Vec<Option<(T, T, T)>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let tz = dtheta * T::from_count(i);
            let x = domain.chart(&[dtheta * T::from_count(j)]);
            let xt = domain.chart_tangents(&[dtheta * T::from_count(j)])[0];
            let zeta = domain.chart(&[tz]);
            let zt = domain.chart_tangents(&[tz])[0];
            let mut kbar = [Vec3::zero(); 2];
            let mut ds = [T::zero(); 2];
            let mut ds_imp = [T::zero(); 2];
            for mu in 0..2 {
                let model = models[mu];
                let d = shoot_with(model, Some(model), domain, &zeta, &x, e, &opts.shoot, None).ok()?;
                let warm = Some((d.direction(), d.s));
                let zp = domain.chart(&[tz + h]);
                let zm = domain.chart(&[tz - h]);
                let sp = shoot_with(model, Some(model), domain, &zp, &x, e, &opts.shoot, warm).ok()?.s0?;
                let sm = shoot_with(model, Some(model), domain, &zm, &x, e, &opts.shoot, warm).ok()?.s0?;
                kbar[mu] = d.kbar;
                ds[mu] = (sp - sm) / (h + h);
                ds_imp[mu] = -(d.kbar0 + model.vector_potential(&zeta).scale(coupling(model))).dot(&zt);
            }
            let dk = (kbar[1] - kbar[0]).dot(&xt);
            Some((-dk * (ds[1] - ds[0]), -dk * (ds_imp[1] - ds_imp[0]), (x - zeta).norm()))
        })
        .collect();
    let w = dtheta * dtheta;
    let mut value = T::zero();
    let mut from_impulses = T::zero();
    let mut failures = 0;
    let mut near = T::zero();
    for v in &vals {
        match v {
            Some((f, g, dist)) => {
                value += *f * w;
                from_impulses += *g * w;
                if *dist < T::lit(2.0) * cutoff.max(dtheta) {
                    near = near.max(f.abs());
                }
            }
            None => failures += 1,
        }
    }
    let band = T::from_count(excluded) * w;
    BoundaryIntegral {
        value: value.as_f64(),
        from_impulses: from_impulses.as_f64(),
        diagonal_bound: (near * band).as_f64(),
        excluded,
        failures,
    }
}

/// Source point on `∂D` of the trajectory in `model` arriving at `x` with impulse `−r w`.
fn source_point<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    x: &Vec3<T>,
    e: T,
    w: &Vec3<T>,
    opts: &FlowOptions<T>,
) -> Result<(Vec3<T>, Vec3<T>, T)> {
    let reversed = model.with_reversed_magnetic();
    let p = sphere_momentum(model, x, e, w)?;
    let f = flow_to_exit(&reversed, domain, x, &p, opts)?;
    let st = f.exit_state.unwrap();
    Ok((st.x, -st.p, f.exit_time.unwrap()))
}

fn interior_integral<T: Real>(
    models: [&FieldModel<T>; 2],
    domain: &ConvexDomain<T>,
    e: T,
    grid: (usize, usize, usize),
    opts: &ShootOptions<T>,
) -> (f64, f64, usize) {
    let (gx, gw) = gauss_legendre::<T>(grid.0);
    let two_pi = T::lit(2.0) * T::PI();
    let mut nodes = Vec::new();
    for (xi, wi) in gx.iter().zip(&gw) {
        let rho = (*xi + T::one()) * T::lit(0.5);
        for j in 0..grid.1 {
            let phi = two_pi * (T::from_count(j) + T::lit(0.5)) / T::from_count(grid.1);
            nodes.push((disk_point(domain, rho, phi), *wi * T::lit(0.5) * rho));
        }
    }
    let nw = grid.2;
    let vals: Vec<Option<(T, T)>> = nodes
        .par_iter()
        .map(|(x, weight)| {
            let r = [impulse_radius(models[0], x, e).ok()?, impulse_radius(models[1], x, e).ok()?];
            let mut sum = T::zero();
            let mut peak = T::zero();
            for k in 0..nw {
                let a = two_pi * (T::from_count(k) + T::lit(0.5)) / T::from_count(nw);
                let w = Vec3::new(a.cos(), a.sin(), T::zero());
                // With |k̄| = r the integrand sum equals
                // (r₁ − r₂)² + r₁r₂(|w + k̂₂(ζ₁)|² + |w + k̂₁(ζ₂)|²)/2, evaluated in this
                // form to avoid cancelling terms of size r².
                let mut f = (r[0] - r[1]) * (r[0] - r[1]);
                for mu in 0..2 {
                    let other = models[1 - mu];
                    let (zeta, p_src, s) = source_point(models[mu], domain, x, e, &w, &opts.flow).ok()?;
                    let d = shoot_with(other, None, domain, &zeta, x, e, opts, Some((p_src.normalized(), s))).ok()?;
                    f += T::lit(0.5) * r[0] * r[1] * (w + d.kbar.normalized()).norm2();
                }
                peak = peak.max(f.abs());
                sum += f;
            }
            Some((*weight * sum * two_pi / T::from_count(nw), peak))
        })
        .collect();
    let jac = domain.semi_axes[0] * domain.semi_axes[1] * two_pi / T::from_count(grid.1);
    let mut total = T::zero();
    let mut peak = T::zero();
    let mut failures = 0;
    for v in vals {
        match v {
            Some((s, p)) => {
                total += s;
                peak = peak.max(p);
            }
            None => failures += 1,
        }
    }
    ((total * jac).as_f64(), peak.as_f64(), failures)
}

/// Evaluates both sides of the plane Stokes identity and the uniqueness
/// estimate for fields `m1`, `m2` at energy `e`, each model acting as its
/// own magnetic potential.
pub fn uniqueness_estimate<T: Real>(
    m1: &FieldModel<T>,
    m2: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    e: T,
    opts: &UniquenessOptions<T>,
) -> Result<UniquenessEstimate> {
    if domain.dim != 2 || m1.dim != 2 || m2.dim != 2 {
        return Err(Error::UnsupportedDimension(domain.dim.max(m1.dim).max(m2.dim)));
    }
    let models = [m1, m2];
    let lhs = potential_lhs(m1, m2, domain, e, opts.lhs_grid)?;
    let coarse = boundary_pair_integral(models, domain, e, opts.boundary_grids.0, opts);
    let fine = boundary_pair_integral(models, domain, e, opts.boundary_grids.1, opts);
    let boundary_integral = 2.0 * fine.value - coarse.value;
    let (r, a, d) = opts.interior_grid;
    let (ic, _, fc) = interior_integral(models, domain, e, ((r / 2).max(1), (a / 2).max(1), (d / 2).max(1)), &opts.shoot);
    let (ifine, peak, ff) = interior_integral(models, domain, e, opts.interior_grid, &opts.shoot);
    let interior_integral = ifine;
    let rhs = boundary_integral / (2.0 * std::f64::consts::PI);
    let scale = boundary_integral.abs().max(interior_integral.abs());
    let relative_gap = if scale <= opts.abs_tol { 0.0 } else { (boundary_integral - interior_integral).abs() / scale };
    let failures = coarse.failures + fine.failures + fc + ff;
    Ok(UniquenessEstimate {
        energy: e.as_f64(),
        lhs,
        boundary_coarse: coarse.value,
        boundary_fine: fine.value,
        boundary_integral,
        boundary_from_impulses: fine.from_impulses,
        interior_coarse: ic,
        interior_fine: ifine,
        interior_integral,
        interior_integrand_max: peak,
        rhs,
        margin: rhs - lhs,
        relative_gap,
        diagonal_bound: fine.diagonal_bound,
        excluded_pairs: fine.excluded,
        failures,
        identity_holds: failures == 0 && relative_gap <= opts.rel_tol,
        inequality_holds: failures == 0 && lhs <= rhs + opts.abs_tol,
    })
}

/// [`uniqueness_estimate`] folded into a pass/fail result.
pub fn check_uniqueness_estimate<T: Real>(
    m1: &FieldModel<T>,
    m2: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    e: T,
    opts: &UniquenessOptions<T>,
) -> CheckResult {
    match uniqueness_estimate(m1, m2, domain, e, opts) {
        Err(err) => CheckResult::from_samples("uniqueness-estimate", opts.rel_tol, vec![Err(err)]),
        Ok(u) => {
            let residual = if u.failures > 0 {
                f64::INFINITY
            } else if u.inequality_holds {
                u.relative_gap
            } else {
                f64::INFINITY
            };
            CheckResult {
                name: "uniqueness-estimate".into(),
                max_residual: residual,
                tolerance: opts.rel_tol,
                sample_count: 1,
                passed: residual <= opts.rel_tol,
                details: vec![format!(
                    "lhs {:.6e}, rhs {:.6e}, boundary {:.6e} (coarse {:.6e}, fine {:.6e}), interior {:.6e} (coarse {:.6e}), gap {:.3e}",
                    u.lhs,
                    u.rhs,
                    u.boundary_integral,
                    u.boundary_coarse,
                    u.boundary_fine,
                    u.interior_integral,
                    u.interior_coarse,
                    u.relative_gap
                )],
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{MagneticTerm, Mode, Profile, ZeroGauge};

    fn bump() -> FieldModel<f64> {
        FieldModel::<f64>::free(2, 1.0, Mode::Relativistic)
            .with_potential(Vec3::new(0.1, -0.1, 0.0), Profile::Bump { amplitude: 0.01, radius: 0.6 })
            .with_magnetic(MagneticTerm::Planar {
                center: Vec3::new(-0.1, 0.1, 0.0),
                profile: Profile::Bump { amplitude: 0.05, radius: 0.5 },
            })
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre::<f64>(7);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((s - 2.0 / 13.0).abs() < 1e-14);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn free_action_gradient_is_radial() {
        let m = FieldModel::<f64>::free(2, 1.0, Mode::Relativistic);
        let d = ConvexDomain::unit_ball(2);
        let pairs = interior_pairs(&d, 4, 1, 0.05, 0.3);
        let r = check_action_gradients(&m, &ZeroGauge, &d, 3.0, &pairs, 1e-4, &ShootOptions::default(), 1e-7);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn reciprocity_and_curl_on_bump() {
        let m = bump();
        let d = ConvexDomain::unit_ball(2);
        let o = ShootOptions::default();
        let pairs = boundary_pairs(&d, 10, 3, 0.2);
        let r = check_reciprocity(&m, &d, 300.0, &pairs, &o, 1e-8);
        assert!(r.passed, "{r:?}");
        let pts = [Vec3::new(0.1, 0.2, 0.0), Vec3::new(-0.3, -0.1, 0.0)];
        let zeta = Vec3::new(1.0, 0.0, 0.0);
        for swapped in [false, true] {
            let r = check_curl_formula(&m, &d, 300.0, &zeta, &pts, 1e-3, swapped, &o, 1e-3);
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn free_jacobian_closed_form() {
        let m = FieldModel::<f64>::free(2, 1.0, Mode::Relativistic);
        let d = ConvexDomain::unit_ball(2);
        let e = 2.0;
        let x = Vec3::new(0.1, 0.2, 0.0);
        let u = Vec3::new(0.6, 0.8, 0.0);
        let t = 0.5;
        let s = flow_jacobian_min_singular(&m, &d, e, &x, &u, t, 1e-5, &FlowOptions::with_tolerances(1e-12, 1e-14)).unwrap();
        let v = (1.0f64 - 0.25).sqrt();
        let r = 3f64.sqrt();
        assert!((s - v.min(t * r / e)).abs() < 1e-8, "{s}");
    }

    #[test]
    fn orientation_is_positive() {
        let m = bump();
        let d = ConvexDomain::unit_ball(2);
        let r = check_orientation(&m, &d, 300.0, &[Vec3::new(0.2, -0.3, 0.0)], 32, &ShootOptions::default());
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn maupertuis_first_variation_vanishes() {
        let m = bump();
        let d = ConvexDomain::unit_ball(2);
        let pairs = boundary_pairs(&d, 3, 5, 0.5);
        let r = check_maupertuis(&m, &d, 300.0, &pairs, 7, &ShootOptions::default(), 1e-7);
        assert!(r.passed, "{r:?}");
    }
}
