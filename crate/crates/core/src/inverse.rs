//! Reconstruction of `(V, B)`.
//!
//! Boundary values of `V` follow from the speed law at the endpoints. The
//! interior reconstruction uses simulated interior impulse fields `k̄(E, ζ, x)`,
//! which boundary measurements alone do not provide. The boundary-only route is
//! a least-squares fit over a small parametric family.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::{shoot, shoot_with, BoundaryDatum, ShootOptions};
use crate::domain::ConvexDomain;
use crate::error::{Error, Result};
use crate::fields::{FieldModel, MagneticTerm, Mode, Profile};
use crate::identities::{curl_from_impulses, potential_lhs};
use crate::linalg::{solve_dense, Vec3};
use crate::real::Real;

/// `V` from a speed `|k|` at a point of energy `e`.
pub fn potential_from_speed<T: Real>(model: &FieldModel<T>, speed: T, e: T) -> Result<T> {
    let c = model.c;
    match model.mode {
        Mode::Relativistic => {
            let s = T::one() - speed * speed / (c * c);
            if !(s > T::zero()) {
                return Err(Error::Superluminal(speed.as_f64()));
            }
            Ok(e - c * c / s.sqrt())
        }
        Mode::Nonrelativistic => Ok(e - T::lit(0.5) * speed * speed),
    }
}

/// `V` from an impulse magnitude `r = |k̄|`.
pub fn potential_from_impulse<T: Real>(model: &FieldModel<T>, r: T, e: T) -> T {
    let c = model.c;
    match model.mode {
        Mode::Relativistic => e - c * c * (T::one() + r * r / (c * c)).sqrt(),
        Mode::Nonrelativistic => e - T::lit(0.5) * r * r,
    }
}

/// Recovered boundary value of `V` at one boundary point.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoundaryPotential<T> {
    pub q: Vec3<T>,
    /// Mean over every datum touching `q`.
    pub value: T,
    /// Largest deviation of a single datum from the mean.
    pub spread: T,
    pub count: usize,
}

fn point_key<T: Real>(q: &Vec3<T>) -> [u64; 3] {
    [q[0].as_f64().to_bits(), q[1].as_f64().to_bits(), q[2].as_f64().to_bits()]
}

/// Boundary trace of `V` from the endpoint speeds of a dataset. Both the launch
/// speed at `q0` and the arrival speed at `q` are used.
pub fn recover_v_boundary<T: Real>(model: &FieldModel<T>, data: &[BoundaryDatum<T>]) -> Result<Vec<BoundaryPotential<T>>> {
    let mut groups: BTreeMap<[u64; 3], (Vec3<T>, Vec<T>)> = BTreeMap::new();
    for d in data {
        for (q, k) in [(d.q0, d.k0), (d.q, d.k)] {
            let v = potential_from_speed(model, k.norm(), d.e)?;
            groups.entry(point_key(&q)).or_insert_with(|| (q, Vec::new())).1.push(v);
        }
    }
    Ok(groups
        .into_values()
        .map(|(q, vals)| {
            let mean = vals.iter().copied().sum::<T>() / T::from_count(vals.len());
            let spread = vals.iter().fold(T::zero(), |m, v| m.max((*v - mean).abs()));
            BoundaryPotential { q, value: mean, spread, count: vals.len() }
        })
        .collect())
}

/// `V̂` and `B̂` on interior points from simulated interior impulse fields.
#[derive(Clone, Debug, Serialize)]
pub struct InteriorReconstruction<T> {
    pub points: Vec<Vec3<T>>,
    pub v_hat: Vec<T>,
    pub b_hat: Vec<[[T; 3]; 3]>,
    /// Spread of the per-source estimates of `V` and `B` at each point.
    pub v_spread: Vec<T>,
    pub b_spread: Vec<T>,
    /// Sources that produced an estimate at each point.
    pub sources_used: Vec<usize>,
}

impl<T: Real> InteriorReconstruction<T> {
    /// Sup-norm errors `(|V̂ − V|, |B̂ − B|)` against a known model.
    pub fn errors_against(&self, model: &FieldModel<T>) -> (T, T) {
        let mut ev = T::zero();
        let mut eb = T::zero();
        for ((x, v), b) in self.points.iter().zip(&self.v_hat).zip(&self.b_hat) {
            ev = ev.max((*v - model.potential_value(x)).abs());
            let truth = model.magnetic_field(x);
            for i in 0..model.dim {
                for j in 0..model.dim {
                    eb = eb.max((b[i][j] - truth.0[i][j]).abs());
                }
            }
        }
        (ev, eb)
    }
}

/// Curl formula averaged over the sources `zetas` for `B`, and `V` from
/// `|k̄(E, ζ, x)| = r(x)`. A point fails only if every source fails there.
#[allow(clippy::too_many_arguments)]
pub fn recover_fields_interior<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    e: T,
    zetas: &[Vec3<T>],
    points: &[Vec3<T>],
    h: T,
    opts: &ShootOptions<T>,
) -> Result<InteriorReconstruction<T>> {
    let n = model.dim;
    let rows: Vec<Result<(T, [[T; 3]; 3], T, T, usize)>> = points
        .par_iter()
        .map(|x| {
            let mut vs = Vec::new();
            let mut bs = Vec::new();
            let mut last = None;
            for z in zetas {
                let est = shoot_with(model, None, domain, z, x, e, opts, None)
                    .and_then(|d| Ok((d.kbar.norm(), curl_from_impulses(model, domain, e, z, x, h, false, opts)?)));
                match est {
                    Ok((r, b)) => {
                        vs.push(potential_from_impulse(model, r, e));
                        bs.push(b);
                    }
                    Err(err) => last = Some(err),
                }
            }
            if vs.is_empty() {
                return Err(last.unwrap_or_else(|| Error::InvalidParameter("no source points".into())));
            }
            let k = T::from_count(vs.len());
            let v = vs.iter().copied().sum::<T>() / k;
            let mut b = [[T::zero(); 3]; 3];
            for bk in &bs {
                for i in 0..n {
                    for j in 0..n {
                        b[i][j] += bk[i][j] / k;
                    }
                }
            }
            let vspread = vs.iter().fold(T::zero(), |m, w| m.max((*w - v).abs()));
            let mut bspread = T::zero();
            for bk in &bs {
                for i in 0..n {
                    for j in 0..n {
                        bspread = bspread.max((bk[i][j] - b[i][j]).abs());
                    }
                }
            }
            Ok((v, b, vspread, bspread, vs.len()))
        })
        .collect();
    let mut out = InteriorReconstruction {
        points: points.to_vec(),
        v_hat: vec![],
        b_hat: vec![],
        v_spread: vec![],
        b_spread: vec![],
        sources_used: vec![],
    };
    for row in rows {
        let (v, b, vs, bs, k) = row?;
        out.v_hat.push(v);
        out.b_hat.push(b);
        out.v_spread.push(vs);
        out.b_spread.push(bs);
        out.sources_used.push(k);
    }
    Ok(out)
}

/// A map from parameters `θ` to field models.
pub trait ParametricFamily<T: Real>: Sync {
    fn len(&self) -> usize;
    fn names(&self) -> Vec<String>;
    fn model(&self, theta: &[T]) -> Result<FieldModel<T>>;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One bump of a [`BumpFamily`]: fixed radius, reference centre.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FamilyBump<T> {
    pub center: Vec3<T>,
    pub radius: T,
}

/// Polynomial bumps in `V` and planar polynomial bumps in `B₁₂` (two dimensions
/// only). With free centres each bump contributes `(amplitude, centre…)`,
/// otherwise only its amplitude. Potential bumps come first.
#[derive(Clone, Debug)]
pub struct BumpFamily<T> {
    pub base: FieldModel<T>,
    pub potential: Vec<FamilyBump<T>>,
    pub magnetic: Vec<FamilyBump<T>>,
    pub free_centers: bool,
}

impl<T: Real> BumpFamily<T> {
    fn per_bump(&self) -> usize {
        if self.free_centers {
            1 + self.base.dim
        } else {
            1
        }
    }

    /// Parameters of the family member with the given amplitudes at the reference centres.
    pub fn parameters(&self, potential_amplitudes: &[T], magnetic_amplitudes: &[T]) -> Vec<T> {
        let mut theta = Vec::new();
        for (bumps, amps) in [(&self.potential, potential_amplitudes), (&self.magnetic, magnetic_amplitudes)] {
            for (b, a) in bumps.iter().zip(amps) {
                theta.push(*a);
                if self.free_centers {
                    theta.extend(b.center.to_vec(self.base.dim));
                }
            }
        }
        theta
    }
}

impl<T: Real> ParametricFamily<T> for BumpFamily<T> {
    fn len(&self) -> usize {
        (self.potential.len() + self.magnetic.len()) * self.per_bump()
    }

    fn names(&self) -> Vec<String> {
        let axes = ["x", "y", "z"];
        let mut out = Vec::new();
        for (tag, bumps) in [("V", &self.potential), ("B", &self.magnetic)] {
            for i in 0..bumps.len() {
                out.push(format!("{tag}{i}.amplitude"));
                if self.free_centers {
                    for a in axes.iter().take(self.base.dim) {
                        out.push(format!("{tag}{i}.{a}"));
                    }
                }
            }
        }
        out
    }

    fn model(&self, theta: &[T]) -> Result<FieldModel<T>> {
        if theta.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: theta.len() });
        }
        if !self.magnetic.is_empty() && self.base.dim != 2 {
            return Err(Error::InvalidParameter("planar magnetic bumps need dimension two".into()));
        }
        let dim = self.base.dim;
        let k = self.per_bump();
        let centre = |chunk: &[T], b: &FamilyBump<T>| {
            if self.free_centers {
                Vec3::from_slice(&chunk[1..])
            } else {
                b.center
            }
        };
        let mut m = self.base.clone();
        let np = self.potential.len();
        for (i, b) in self.potential.iter().enumerate() {
            let chunk = &theta[i * k..(i + 1) * k];
            m = m.with_potential(centre(chunk, b).truncate(dim), Profile::Bump { amplitude: chunk[0], radius: b.radius });
        }
        for (i, b) in self.magnetic.iter().enumerate() {
            let chunk = &theta[(np + i) * k..(np + i + 1) * k];
            m = m.with_magnetic(MagneticTerm::Planar {
                center: centre(chunk, b).truncate(dim),
                profile: Profile::Bump { amplitude: chunk[0], radius: b.radius },
            });
        }
        Ok(m)
    }
}

/// Weights of the misfit terms. The default uses velocities only, which keeps
/// the objective independent of the gauge of `A`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MisfitWeights {
    pub k: f64,
    pub k0: f64,
    pub s: f64,
    /// Residual substituted for every component of a sample whose forward solve fails.
    pub failure_residual: f64,
}

impl Default for MisfitWeights {
    fn default() -> Self {
        MisfitWeights { k: 1.0, k0: 1.0, s: 0.0, failure_residual: 1.0 }
    }
}

/// Residual vector of `model` against observed data, plus the number of failed forward solves.
pub fn residuals<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    data: &[BoundaryDatum<T>],
    weights: &MisfitWeights,
    opts: &ShootOptions<T>,
) -> (Vec<f64>, usize) {
    let n = model.dim;
    let (wk, wk0, ws) = (weights.k.sqrt(), weights.k0.sqrt(), weights.s.sqrt());
    let rows: Vec<(Vec<f64>, bool)> = data
        .par_iter()
        .map(|obs| {
            let mut r = Vec::with_capacity(2 * n + 1);
            match shoot_with(model, None, domain, &obs.q0, &obs.q, obs.e, opts, Some((obs.direction(), obs.s))) {
                Ok(d) => {
                    for i in 0..n {
                        r.push(wk * (d.k[i] - obs.k[i]).as_f64());
                    }
                    for i in 0..n {
                        r.push(wk0 * (d.k0[i] - obs.k0[i]).as_f64());
                    }
                    r.push(ws * (d.s - obs.s).as_f64());
                    (r, false)
                }
                Err(_) => (vec![weights.failure_residual; 2 * n + 1], true),
            }
        })
        .collect();
    let failures = rows.iter().filter(|r| r.1).count();
    (rows.into_iter().flat_map(|r| r.0).collect(), failures)
}

/// `Σ w_k|k − k_obs|² + w_k0|k₀ − k₀_obs|² + w_s|s − s_obs|²` for a fixed model.
pub fn misfit<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    data: &[BoundaryDatum<T>],
    weights: &MisfitWeights,
    opts: &ShootOptions<T>,
) -> f64 {
    residuals(model, domain, data, weights, opts).0.iter().map(|r| r * r).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    NelderMead,
    /// Levenberg–Marquardt on finite-difference Jacobians.
    LevenbergMarquardt,
}

#[derive(Clone, Copy, Debug)]
pub struct OptimizerOptions {
    pub method: Optimizer,
    pub max_evaluations: usize,
    pub max_iterations: usize,
    /// Stop once the relative parameter change of an iteration falls below this.
    pub x_tol: f64,
    /// Stop once the misfit falls below this.
    pub f_tol: f64,
    /// Initial simplex edge relative to each parameter (absolute for zero parameters).
    pub simplex_scale: f64,
    /// Nelder–Mead restarts from the best vertex after convergence.
    pub restarts: usize,
    /// Relative finite-difference step of the Jacobian.
    pub fd_step: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            method: Optimizer::NelderMead,
            max_evaluations: 4000,
            max_iterations: 2000,
            x_tol: 1e-9,
            f_tol: 1e-20,
            simplex_scale: 0.05,
            restarts: 2,
            fd_step: 1e-6,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReconstructionResult {
    pub method: Optimizer,
    pub names: Vec<String>,
    pub theta: Vec<f64>,
    pub initial_misfit: f64,
    pub misfit: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Best misfit after each iteration; non-increasing.
    pub trace: Vec<f64>,
    pub converged: bool,
    /// Failed forward solves at the returned parameters.
    pub failed_samples: usize,
    pub truth: Option<Vec<f64>>,
    /// `|θ̂ − θ|/|θ|` per parameter, absolute where `θ = 0`.
    pub relative_errors: Option<Vec<f64>>,
}

impl ReconstructionResult {
    /// Records the ground truth and per-parameter errors.
    pub fn with_truth(mut self, truth: &[f64]) -> Self {
        let errs = self
            .theta
            .iter()
            .zip(truth)
            .map(|(a, b)| if *b == 0.0 { (a - b).abs() } else { ((a - b) / b).abs() })
            .collect();
        self.truth = Some(truth.to_vec());
        self.relative_errors = Some(errs);
        self
    }

    pub fn max_relative_error(&self) -> Option<f64> {
        self.relative_errors.as_ref().map(|e| e.iter().copied().fold(0.0, f64::max))
    }
}

struct Objective<'a, T: Real, F: ParametricFamily<T>> {
    family: &'a F,
    domain: &'a ConvexDomain<T>,
    data: &'a [BoundaryDatum<T>],
    weights: &'a MisfitWeights,
    opts: &'a ShootOptions<T>,
    evaluations: usize,
}

impl<'a, T: Real, F: ParametricFamily<T>> Objective<'a, T, F> {
    fn residuals(&mut self, theta: &[f64]) -> (Vec<f64>, usize) {
        self.evaluations += 1;
        let th: Vec<T> = theta.iter().map(|v| T::lit(*v)).collect();
        match self.family.model(&th) {
            Ok(m) => residuals(&m, self.domain, self.data, self.weights, self.opts),
            Err(_) => (vec![self.weights.failure_residual; self.data.len() * (2 * self.family_dim() + 1)], self.data.len()),
        }
    }

    fn family_dim(&self) -> usize {
        self.domain.dim
    }

    fn value(&mut self, theta: &[f64]) -> f64 {
        let v: f64 = self.residuals(theta).0.iter().map(|r| r * r).sum();
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }
}

/// Fits the family to observed boundary data starting from `theta0`. Forward
/// solves are warm-started from the observed launch directions.
pub fn reconstruct_least_squares<T: Real, F: ParametricFamily<T>>(
    family: &F,
    domain: &ConvexDomain<T>,
    data: &[BoundaryDatum<T>],
    theta0: &[f64],
    weights: &MisfitWeights,
    optimizer: &OptimizerOptions,
    opts: &ShootOptions<T>,
) -> Result<ReconstructionResult> {
    if theta0.len() != family.len() {
        return Err(Error::DimensionMismatch { expected: family.len(), got: theta0.len() });
    }
    if data.is_empty() {
        return Err(Error::InvalidParameter("empty dataset".into()));
    }
    let mut obj = Objective { family, domain, data, weights, opts, evaluations: 0 };
    let (theta, trace, iterations, converged) = match optimizer.method {
        Optimizer::NelderMead => nelder_mead(&mut obj, theta0, optimizer),
        Optimizer::LevenbergMarquardt => levenberg_marquardt(&mut obj, theta0, optimizer),
    };
    let (res, failed) = obj.residuals(&theta);
    Ok(ReconstructionResult {
        method: optimizer.method,
        names: family.names(),
        theta,
        initial_misfit: trace[0],
        misfit: res.iter().map(|r| r * r).sum(),
        iterations,
        evaluations: obj.evaluations,
        trace,
        converged,
        failed_samples: failed,
        truth: None,
        relative_errors: None,
    })
}

fn rel_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-12)).fold(0.0, f64::max)
}

fn nelder_mead<T: Real, F: ParametricFamily<T>>(
    obj: &mut Objective<'_, T, F>,
    theta0: &[f64],
    o: &OptimizerOptions,
) -> (Vec<f64>, Vec<f64>, usize, bool) {
    let n = theta0.len();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut best = theta0.to_vec();
    let mut best_f = obj.value(&best);
    let mut trace = vec![best_f];
    let mut iterations = 0;
    let mut converged = false;
    for _round in 0..=o.restarts {
        let mut simplex: Vec<(Vec<f64>, f64)> = vec![(best.clone(), best_f)];
        for i in 0..n {
            let mut v = best.clone();
            v[i] += if v[i] != 0.0 { o.simplex_scale * v[i] } else { o.simplex_scale };
            let f = obj.value(&v);
            simplex.push((v, f));
        }
        converged = false;
        while iterations < o.max_iterations && obj.evaluations < o.max_evaluations {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let lo = simplex[0].1;
            if lo <= o.f_tol || rel_change(&simplex[0].0, &simplex[n].0) <= o.x_tol {
                converged = true;
                break;
            }
            iterations += 1;
            let mut cen = vec![0.0; n];
            for (v, _) in &simplex[..n] {
                for (c, x) in cen.iter_mut().zip(v) {
                    *c += x / n as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> { cen.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (c - w)).collect() };
            let xr = along(alpha);
            let fr = obj.value(&xr);
            if fr < simplex[0].1 {
                let xe = along(alpha * gamma);
                let fe = obj.value(&xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let (xc, fc) = if fr < simplex[n].1 {
                    let x = along(alpha * rho);
                    let f = obj.value(&x);
                    (x, f)
                } else {
                    let x = along(-rho);
                    let f = obj.value(&x);
                    (x, f)
                };
                if fc < simplex[n].1.min(fr) {
                    simplex[n] = (xc, fc);
                } else {
                    let x0 = simplex[0].0.clone();
                    for (v, f) in simplex.iter_mut().skip(1) {
                        for (x, b) in v.iter_mut().zip(&x0) {
                            *x = b + sigma * (*x - b);
                        }
                        *f = obj.value(v);
                    }
                }
            }
            let cur = simplex.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
            trace.push(cur.min(*trace.last().unwrap()));
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 <= best_f {
            best = simplex[0].0.clone();
            best_f = simplex[0].1;
        }
        if best_f <= o.f_tol || iterations >= o.max_iterations || obj.evaluations >= o.max_evaluations {
            break;
        }
    }
    (best, trace, iterations, converged)
}

fn levenberg_marquardt<T: Real, F: ParametricFamily<T>>(
    obj: &mut Objective<'_, T, F>,
    theta0: &[f64],
    o: &OptimizerOptions,
) -> (Vec<f64>, Vec<f64>, usize, bool) {
    let n = theta0.len();
    let mut theta = theta0.to_vec();
    let mut r = obj.residuals(&theta).0;
    let mut f: f64 = r.iter().map(|v| v * v).sum();
    let mut trace = vec![f];
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < o.max_iterations && obj.evaluations < o.max_evaluations {
        if f <= o.f_tol {
            converged = true;
            break;
        }
        iterations += 1;
        // central-difference Jacobian, one column per parameter
        let mut jac = vec![vec![0.0; n]; r.len()];
        for j in 0..n {
            let h = o.fd_step * theta[j].abs().max(1e-3);
            let mut tp = theta.clone();
            tp[j] += h;
            let rp = obj.residuals(&tp).0;
            tp[j] = theta[j] - h;
            let rm = obj.residuals(&tp).0;
            for i in 0..r.len() {
                jac[i][j] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let mut jtj = vec![vec![0.0; n]; n];
        let mut jtr = vec![0.0; n];
        for (row, ri) in jac.iter().zip(&r) {
            for a in 0..n {
                jtr[a] += row[a] * ri;
                for b in 0..n {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        let mut stepped = false;
        while obj.evaluations < o.max_evaluations {
            let mut m = jtj.clone();
            for (a, row) in m.iter_mut().enumerate() {
                row[a] += lambda * jtj[a][a].max(1e-300);
            }
            let rhs: Vec<f64> = jtr.iter().map(|v| -v).collect();
            let Some(delta) = solve_dense(&m, &rhs) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = theta.iter().zip(&delta).map(|(a, d)| a + d).collect();
            let rt = obj.residuals(&trial).0;
            let ft: f64 = rt.iter().map(|v| v * v).sum();
            if ft.is_finite() && ft <= f {
                let change = rel_change(&trial, &theta);
                theta = trial;
                r = rt;
                f = ft;
                lambda = (lambda / 10.0).max(1e-12);
                stepped = true;
                if change <= o.x_tol {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
        trace.push(f);
        if !stepped || converged {
            converged = true;
            break;
        }
    }
    (theta, trace, iterations, converged)
}

/// Separation of the boundary data of two models on a boundary grid.
#[derive(Clone, Debug, Serialize)]
pub struct SeparationStats {
    pub pairs: usize,
    pub failures: usize,
    pub k_sup: f64,
    pub k_rms: f64,
    pub k0_sup: f64,
    pub k0_rms: f64,
    pub s_sup: f64,
    /// `∫_D (r₁ − r₂)² dx`, available in two dimensions.
    pub potential_gap: Option<f64>,
}

/// Boundary-data distance between two models on `m` boundary points.
pub fn uniqueness_probe<T: Real>(
    m1: &FieldModel<T>,
    m2: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    e: T,
    m: usize,
    cutoff_frac: T,
    opts: &ShootOptions<T>,
) -> SeparationStats {
    let grid = domain.boundary_grid(m);
    let cutoff = cutoff_frac * domain.diameter();
    let mut pairs = Vec::new();
    for i in 0..m {
        for j in 0..m {
            if i != j && (grid[i] - grid[j]).norm() >= cutoff {
                pairs.push((i, j));
            }
        }
    }
    let rows: Vec<Option<(f64, f64, f64)>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let a = shoot(m1, domain, &grid[i], &grid[j], e, opts).ok()?;
            let b = shoot(m2, domain, &grid[i], &grid[j], e, opts).ok()?;
            Some(((a.k - b.k).norm().as_f64(), (a.k0 - b.k0).norm().as_f64(), (a.s - b.s).abs().as_f64()))
        })
        .collect();
    let ok: Vec<(f64, f64, f64)> = rows.iter().flatten().copied().collect();
    let count = ok.len().max(1) as f64;
    SeparationStats {
        pairs: pairs.len(),
        failures: rows.len() - ok.len(),
        k_sup: ok.iter().map(|r| r.0).fold(0.0, f64::max),
        k_rms: (ok.iter().map(|r| r.0 * r.0).sum::<f64>() / count).sqrt(),
        k0_sup: ok.iter().map(|r| r.1).fold(0.0, f64::max),
        k0_rms: (ok.iter().map(|r| r.1 * r.1).sum::<f64>() / count).sqrt(),
        s_sup: ok.iter().map(|r| r.2).fold(0.0, f64::max),
        potential_gap: if m1.dim == 2 { potential_lhs(m1, m2, domain, e, (64, 128)).ok() } else { None },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::boundary_sweep;

    #[test]
    fn speed_potential_roundtrip() {
        let m = FieldModel::<f64>::free(2, 1.0, Mode::Relativistic);
        let e = 3.0;
        let v = 0.25;
        let r = ((e - v) * (e - v) - 1.0f64).sqrt();
        assert!((potential_from_impulse(&m, r, e) - v).abs() < 1e-12);
        let speed = r / (1.0 + r * r).sqrt();
        assert!((potential_from_speed(&m, speed, e).unwrap() - v).abs() < 1e-12);
        assert!(potential_from_speed(&m, 1.0, e).is_err());
    }

    #[test]
    fn boundary_trace_of_compact_bump_vanishes() {
        let d = ConvexDomain::unit_ball(2);
        let m = FieldModel::<f64>::free(2, 1.0, Mode::Relativistic)
            .with_potential(Vec3::new(0.1, 0.0, 0.0), Profile::Bump { amplitude: 0.01, radius: 0.6 });
        let sweep = boundary_sweep(&m, &d, 220.0, &d.boundary_grid(8), 0.05, &ShootOptions::default());
        let data: Vec<_> = sweep.data().cloned().collect();
        let trace = recover_v_boundary(&m, &data).unwrap();
        assert_eq!(trace.len(), 8);
        for t in trace {
            assert!(t.value.abs() < 1e-8, "{}", t.value);
        }
    }

    #[test]
    fn bump_family_layout() {
        let fam = BumpFamily {
            base: FieldModel::<f64>::free(2, 1.0, Mode::Relativistic),
            potential: vec![FamilyBump { center: Vec3::new(0.1, -0.1, 0.0), radius: 0.6 }],
            magnetic: vec![FamilyBump { center: Vec3::new(-0.1, 0.1, 0.0), radius: 0.5 }],
            free_centers: true,
        };
        assert_eq!(fam.len(), 6);
        let theta = fam.parameters(&[0.01], &[0.05]);
        assert_eq!(theta, vec![0.01, 0.1, -0.1, 0.05, -0.1, 0.1]);
        let m = fam.model(&theta).unwrap();
        assert!((m.potential_value(&Vec3::new(0.1, -0.1, 0.0)) - 0.01).abs() < 1e-15);
        assert!((m.magnetic_field(&Vec3::new(-0.1, 0.1, 0.0)).0[0][1] - 0.05).abs() < 1e-15);
    }
}
