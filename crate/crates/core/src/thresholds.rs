//! Explicit high-energy constants `C1 … C10` and the sufficient conditions
//! built from them. Suprema and infima over the domain are grid estimates.
//!
//! The constants are relativistic; for a nonrelativistic model they are
//! evaluated with the model's `c` and only reported.

use crate::domain::ConvexDomain;
use crate::error::{Error, Result};
use crate::fields::{field_norms, FieldModel};
use crate::linalg::symmetric_eigenvalues;
use crate::real::Real;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Conditions {
    /// `E ≥ max(C1, C2)`: flights are injective in time and direction.
    pub injectivity: bool,
    /// `E ≥ C1`, `E ≥` the 400-coefficient bound, `min(C6, C7) > 0`.
    pub local_diffeomorphism: bool,
    /// As above with `min(C6, C7, C8) > 0`.
    pub surjectivity: bool,
    /// `E > max(C1, C2)`, `sup C3 < 1`, `min(C6, C7, C8) > 0`; defines `E*`.
    pub global: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub energy: f64,
    pub c: f64,
    pub dim: usize,
    pub beta: f64,
    pub delta: f64,
    pub sup_v: f64,
    pub c1: f64,
    /// With the coefficient 800.
    pub c2: f64,
    /// The same bound with the coefficient 400.
    pub c2_400: f64,
    pub c3_sup: f64,
    /// `C4` and `C5` at the sample where `C3` is largest.
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
    pub c9: f64,
    pub c10: f64,
    pub conditions: Conditions,
    /// `E` lies between the two forms of `C2`, so only one of them holds.
    pub c2_forms_disagree: bool,
    pub resolution: usize,
    pub samples: usize,
}

/// Energy-independent ingredients, evaluated once per model and domain.
#[derive(Clone, Debug)]
pub struct ThresholdInputs<T> {
    pub c: T,
    pub dim: usize,
    pub beta: T,
    pub delta: T,
    pub sup_v: T,
    pub c1: T,
    pub c9: T,
    pub c10: T,
    /// `V` at every sample of the closure.
    pub v_samples: Vec<T>,
    pub resolution: usize,
}

impl<T: Real> ThresholdInputs<T> {
    pub fn new(model: &FieldModel<T>, domain: &ConvexDomain<T>, resolution: usize) -> Self {
        let n = model.dim;
        let c = model.c;
        let norms = field_norms(model, domain, resolution);
        let beta = T::lit(norms.v_c2.max(norms.b_c1));
        let samples = domain.closure_samples(resolution);
        let mut v_samples = Vec::with_capacity(samples.len());
        let mut sup_v = T::neg_infinity();
        let mut sup1 = T::neg_infinity();
        for x in &samples {
            let jet = model.potential_jet(x);
            let b = model.magnetic_field(x);
            let mut bsum = T::zero();
            for i in 0..n {
                for j in 0..n {
                    bsum += b.0[i][j].abs();
                }
            }
            sup1 = sup1.max(jet.value + T::lit(8.0) * x.norm() * (jet.grad.norm() + bsum));
            sup_v = sup_v.max(jet.value);
            v_samples.push(jet.value);
        }
        let bgrid = domain.boundary_grid(if n == 2 { 4 * resolution.max(2) } else { 2 * resolution.max(2).pow(2) });
        let mut c9 = T::zero();
        let mut c10 = T::infinity();
        for x in &bgrid {
            c9 = c9.max(domain.grad_chi(x).norm());
            let h = domain.hess_chi(x).block(n);
            for ev in symmetric_eigenvalues(&h) {
                c10 = c10.min(ev.abs());
            }
        }
        ThresholdInputs {
            c,
            dim: n,
            beta,
            delta: domain.delta(),
            sup_v,
            c1: T::lit(2.0) * c * c + sup1,
            c9,
            c10,
            v_samples,
            resolution,
        }
    }

    /// `C2` with a given leading coefficient (800 or 400).
    pub fn c2_with(&self, coef: T) -> T {
        let n = T::from_count(self.dim);
        let c2 = self.c * self.c;
        c2 * (T::one() + coef * n * n * self.beta * self.beta * self.delta * self.delta / (c2 * c2)).sqrt() + self.sup_v
    }

    /// `(C3, C4, C5)` at a point with potential value `v`.
    pub fn c345(&self, e: T, v: T) -> (T, T, T) {
        let n = T::from_count(self.dim);
        let n32 = n * n.sqrt();
        let (b, d, c) = (self.beta, self.delta, self.c);
        let w = e - v;
        let s2 = T::lit(2.0).sqrt();
        let a = T::lit(10.0) * s2 * n32 * d * b / w;
        let pre = T::one() + a * a.exp();
        let c4 = pre
            * (T::lit(10.0) * n32 * d * d * b / w)
            * (T::lit(5.0) + T::lit(600.0) * n32 * d * b / w + T::lit(24.0) * n.sqrt())
            + T::lit(20.0) * s2 * n * n * d * b / w * a.exp()
            + T::lit(40.0) * n32 * d * b / (c * c * ((w / (c * c)).powi(2) - T::one()).sqrt());
        let c5 = pre * (T::lit(20.0) * n32 * b * d / w) * (T::one() + T::lit(120.0) * n32 * b * d / w);
        let k = T::lit(5.0) * d * c5;
        (c4 * (T::one() + k * k.exp()), c4, c5)
    }

    pub fn c6_at(&self, e: T, v: T) -> T {
        let n = T::from_count(self.dim);
        let w = e - v;
        let q = self.c * self.c / w;
        (T::one() - q * q).sqrt() - T::lit(20.0) * n * n * self.beta * self.delta / w
    }

    pub fn c7_at(&self, e: T, v: T) -> T {
        let n = T::from_count(self.dim);
        let sn = n.sqrt();
        let (b, d, c) = (self.beta, self.delta, self.c);
        let w = e - v;
        let q = c * c / w;
        let a = T::lit(10.0) * n * sn * b * d / w;
        let r = c * ((w / (c * c)).powi(2) - T::one()).sqrt();
        let expo = a * (T::one() + T::lit(2.0) * c * sn * a.exp());
        c * (T::one() - q * q).sqrt()
            - T::lit(5.0) * c * (n + T::one()).sqrt() * n * n * d / w
                * b
                * expo.exp()
                * (c * r / w)
                * (T::lit(12.0) * sn + T::one() + T::lit(10.0) * sn * d)
    }

    pub fn c8(&self, e: T) -> T {
        let n = T::from_count(self.dim);
        let w = e - self.sup_v;
        let q = self.c * self.c / w;
        self.c10 * (T::one() - q * q) - T::lit(4.0) * n * self.c9 * self.beta / w
    }

    /// Full report at energy `e`; requires `e > c² + sup V`.
    pub fn report(&self, e: T) -> Result<ThresholdReport> {
        let floor = self.c * self.c + self.sup_v;
        if !(e > floor) {
            return Err(Error::EnergyTooLow { energy: e.as_f64(), floor: floor.as_f64() });
        }
        let mut c3 = (T::neg_infinity(), T::zero(), T::zero());
        let mut c6 = T::infinity();
        let mut c7 = T::infinity();
        for &v in &self.v_samples {
            let t = self.c345(e, v);
            if t.0 > c3.0 {
                c3 = t;
            }
            c6 = c6.min(self.c6_at(e, v));
            c7 = c7.min(self.c7_at(e, v));
        }
        let c8 = self.c8(e);
        let c2 = self.c2_with(T::lit(800.0));
        let c2_400 = self.c2_with(T::lit(400.0));
        let min3 = c6.min(c7).min(c8);
        let conditions = Conditions {
            injectivity: e >= self.c1.max(c2),
            local_diffeomorphism: e >= self.c1 && e >= c2_400 && c6.min(c7) > T::zero(),
            surjectivity: e >= self.c1 && e >= c2_400 && min3 > T::zero(),
            global: e > self.c1.max(c2) && c3.0 < T::one() && min3 > T::zero(),
        };
        Ok(ThresholdReport {
            energy: e.as_f64(),
            c: self.c.as_f64(),
            dim: self.dim,
            beta: self.beta.as_f64(),
            delta: self.delta.as_f64(),
            sup_v: self.sup_v.as_f64(),
            c1: self.c1.as_f64(),
            c2: c2.as_f64(),
            c2_400: c2_400.as_f64(),
            c3_sup: c3.0.as_f64(),
            c4: c3.1.as_f64(),
            c5: c3.2.as_f64(),
            c6: c6.as_f64(),
            c7: c7.as_f64(),
            c8: c8.as_f64(),
            c9: self.c9.as_f64(),
            c10: self.c10.as_f64(),
            conditions,
            c2_forms_disagree: (e >= c2) != (e >= c2_400),
            resolution: self.resolution,
            samples: self.v_samples.len(),
        })
    }

    /// Smallest energy at which the global conditions hold: doubling from the
    /// rest-energy floor, then bisection to relative width `rel_tol`.
    pub fn threshold(&self, rel_tol: T) -> T {
        let holds = |e: T| self.report(e).map(|r| r.conditions.global).unwrap_or(false);
        let floor = self.c * self.c + self.sup_v;
        let mut lo = floor;
        let mut hi = floor.abs().max(self.c * self.c) * T::lit(1.5) + floor.max(T::zero());
        while !holds(hi) {
            lo = hi;
            hi *= T::lit(2.0);
            if hi > T::lit(1e15) {
                return T::infinity();
            }
        }
        while hi - lo > rel_tol * hi {
            let mid = T::lit(0.5) * (lo + hi);
            if holds(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

/// Report for one energy; `resolution` controls the sampling of sups and infs.
pub fn compute_constants<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    e: T,
    resolution: usize,
) -> Result<ThresholdReport> {
    ThresholdInputs::new(model, domain, resolution).report(e)
}

/// The named predicates of a report.
pub fn check_conditions(report: &ThresholdReport) -> Conditions {
    report.conditions
}

/// Working threshold `E*` for a model on a domain.
pub fn energy_threshold<T: Real>(model: &FieldModel<T>, domain: &ConvexDomain<T>, resolution: usize) -> T {
    ThresholdInputs::new(model, domain, resolution).threshold(T::lit(1e-4))
}

/// Reports on the ladder `e0·ratioᵏ`, `k = 0 … steps−1`.
pub fn energy_ladder<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    e0: T,
    ratio: T,
    steps: usize,
    resolution: usize,
) -> Vec<Result<ThresholdReport>> {
    let inputs = ThresholdInputs::new(model, domain, resolution);
    let mut e = e0;
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        out.push(inputs.report(e));
        e *= ratio;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{MagneticTerm, Mode, Profile};
    use crate::linalg::Vec3;

    #[test]
    fn zero_field_closed_forms() {
        let m = FieldModel::<f64>::free(2, 1.0, Mode::Relativistic);
        let d = ConvexDomain::<f64>::unit_ball(2);
        for e in [1.5, 3.0, 10.0] {
            let r = compute_constants(&m, &d, e, 20).unwrap();
            let s = (1.0 - 1.0 / (e * e)).sqrt();
            assert_eq!(r.beta, 0.0);
            assert_eq!(r.delta, 1.0);
            assert!((r.c1 - 2.0).abs() < 1e-12 && (r.c2 - 1.0).abs() < 1e-12);
            assert_eq!((r.c3_sup, r.c4, r.c5), (0.0, 0.0, 0.0));
            assert!((r.c6 - s).abs() < 1e-12 && (r.c7 - s).abs() < 1e-12);
            assert!((r.c9 - 2.0).abs() < 1e-12 && (r.c10 - 2.0).abs() < 1e-12);
            assert!((r.c8 - 2.0 * s * s).abs() < 1e-12);
            assert_eq!(r.conditions.global, e > 2.0);
        }
    }

    #[test]
    fn zero_field_threshold_is_twice_rest_energy() {
        let m = FieldModel::<f64>::free(3, 1.0, Mode::Relativistic);
        let d = ConvexDomain::<f64>::unit_ball(3);
        let t = energy_threshold(&m, &d, 6);
        assert!((t - 2.0).abs() < 1e-3);
    }

    #[test]
    fn constants_follow_their_formulas_at_one_point() {
        // constant B₁₂ = b: ∂B = 0, V = 0, so β = |b| and the x-dependence drops out
        let b = 0.1;
        let m = FieldModel::<f64>::free(2, 1.0, Mode::Relativistic).with_constant_b12(b);
        let d = ConvexDomain::<f64>::unit_ball(2);
        let e = 200.0;
        let r = compute_constants(&m, &d, e, 30).unwrap();
        let n: f64 = 2.0;
        assert!((r.c1 - (2.0 + 8.0 * 2.0 * b)).abs() < 1e-12);
        assert!((r.c2 - (1.0 + 800.0 * n * n * b * b).sqrt()).abs() < 1e-12);
        let c6 = (1.0 - 1.0 / (e * e)).sqrt() - 20.0 * n * n * b / e;
        assert!((r.c6 - c6).abs() < 1e-12);
        let c8 = 2.0 * (1.0 - 1.0 / (e * e)) - 4.0 * n * 2.0 * b / e;
        assert!((r.c8 - c8).abs() < 1e-12);
        let a = 10.0 * n.powf(1.5) * b / e;
        let rr = (e * e - 1.0).sqrt();
        let c7 = (1.0 - 1.0 / (e * e)).sqrt()
            - 5.0 * 3f64.sqrt() * n * n / e * b * (a * (1.0 + 2.0 * n.sqrt() * a.exp())).exp() * (rr / e)
                * (12.0 * n.sqrt() + 1.0 + 10.0 * n.sqrt());
        assert!((r.c7 - c7).abs() < 1e-12);
    }

    #[test]
    fn asymptotics_on_energy_ladder() {
        let m = FieldModel::<f64>::free(2, 1.0, Mode::Relativistic)
            .with_potential(Vec3::zero(), Profile::Bump { amplitude: 0.01, radius: 0.8 });
        let d = ConvexDomain::<f64>::unit_ball(2);
        let e_star = energy_threshold(&m, &d, 24);
        let reps: Vec<_> = energy_ladder(&m, &d, e_star, 2.0, 7, 24).into_iter().map(|r| r.unwrap()).collect();
        for w in reps.windows(2) {
            assert!(w[1].c3_sup < w[0].c3_sup);
            assert!(w[1].c6 > w[0].c6 && w[1].c7 > w[0].c7 && w[1].c8 > w[0].c8);
            assert!(w[1].conditions.global);
        }
        let last = reps.last().unwrap();
        assert!(last.c6 < 1.0 && last.c7 < 1.0 && last.c8 < last.c10);
    }

    #[test]
    fn larger_fields_raise_constants() {
        let d = ConvexDomain::<f64>::unit_ball(2);
        let mk = |a: f64| {
            FieldModel::<f64>::free(2, 1.0, Mode::Relativistic)
                .with_potential(Vec3::zero(), Profile::Bump { amplitude: a, radius: 0.8 })
                .with_magnetic(MagneticTerm::Planar { center: Vec3::zero(), profile: Profile::Bump { amplitude: a, radius: 0.7 } })
        };
        let lo = compute_constants(&mk(0.01), &d, 500.0, 20).unwrap();
        let hi = compute_constants(&mk(0.02), &d, 500.0, 20).unwrap();
        assert!(hi.beta > lo.beta && hi.c1 >= lo.c1 && hi.c2 >= lo.c2);
        assert!(hi.c6 <= lo.c6 && hi.c7 <= lo.c7 && hi.c8 <= lo.c8);
        assert!(energy_threshold(&mk(0.02), &d, 20) >= energy_threshold(&mk(0.01), &d, 20));
    }

    #[test]
    fn dilated_thresholds_converge() {
        let m = FieldModel::<f64>::free(2, 1.0, Mode::Relativistic)
            .with_potential(Vec3::zero(), Profile::Bump { amplitude: 0.01, radius: 0.8 });
        let d = ConvexDomain::<f64>::unit_ball(2);
        let base = energy_threshold(&m, &d, 24);
        let mut prev = f64::INFINITY;
        for eps in [0.2, 0.1, 0.05, 0.01, 0.001] {
            let t = energy_threshold(&m, &d.dilate(&Vec3::zero(), eps).unwrap(), 24);
            let gap = (t - base).abs();
            assert!(gap <= prev + 1e-3 * base);
            prev = gap;
        }
        assert!(prev < 1e-2 * base);
    }

    #[test]
    fn below_rest_energy_is_rejected() {
        let m = FieldModel::<f64>::free(2, 1.0, Mode::Relativistic);
        assert!(compute_constants(&m, &ConvexDomain::unit_ball(2), 0.9, 10).is_err());
    }
}
