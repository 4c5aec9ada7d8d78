//! Strictly convex domains: balls and axis-aligned ellipsoids with the
//! polynomial defining function `χ(x) = Σ ((xᵢ − cᵢ)/aᵢ)² − 1`.

use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3};
use crate::real::Real;
use rand::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct ConvexDomain<T> {
    pub dim: usize,
    pub center: Vec3<T>,
    pub semi_axes: Vec3<T>,
}

/// Intersections of the line `t ↦ tv + x` with the boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChordData<T> {
    /// Number of intersection points: 0, 1 (tangent) or 2.
    pub chi: u8,
    pub tau_minus: T,
    pub tau_plus: T,
}

impl<T: Real> ConvexDomain<T> {
    pub fn ellipsoid(dim: usize, center: Vec3<T>, semi_axes: Vec3<T>) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        for i in 0..dim {
            if !(semi_axes.0[i] > T::zero()) {
                return Err(Error::InvalidParameter("semi-axes must be positive".into()));
            }
        }
        let mut axes = semi_axes;
        for i in dim..3 {
            axes.0[i] = T::one();
        }
        Ok(ConvexDomain { dim, center: center.truncate(dim), semi_axes: axes })
    }

    pub fn ball(dim: usize, center: Vec3<T>, radius: T) -> Result<Self> {
        Self::ellipsoid(dim, center, Vec3([radius; 3]))
    }

    pub fn unit_ball(dim: usize) -> Self {
        Self::ball(dim, Vec3::zero(), T::one()).expect("valid unit ball")
    }

    pub fn is_ball(&self) -> bool {
        (1..self.dim).all(|i| self.semi_axes.0[i] == self.semi_axes.0[0])
    }

    #[inline]
    pub fn chi(&self, x: &Vec3<T>) -> T {
        let mut s = -T::one();
        for i in 0..self.dim {
            let u = (x.0[i] - self.center.0[i]) / self.semi_axes.0[i];
            s += u * u;
        }
        s
    }

    pub fn grad_chi(&self, x: &Vec3<T>) -> Vec3<T> {
        let mut g = Vec3::zero();
        for i in 0..self.dim {
            let a = self.semi_axes.0[i];
            g.0[i] = T::lit(2.0) * (x.0[i] - self.center.0[i]) / (a * a);
        }
        g
    }

    pub fn hess_chi(&self, _x: &Vec3<T>) -> Mat3<T> {
        let mut h = Mat3::zero();
        for i in 0..self.dim {
            let a = self.semi_axes.0[i];
            h.0[i][i] = T::lit(2.0) / (a * a);
        }
        h
    }

    pub fn outward_normal(&self, x: &Vec3<T>) -> Vec3<T> {
        self.grad_chi(x).normalized()
    }

    pub fn contains(&self, x: &Vec3<T>) -> bool {
        self.chi(x) < T::zero()
    }

    pub fn diameter(&self) -> T {
        T::lit(2.0) * (0..self.dim).fold(T::zero(), |m, i| m.max(self.semi_axes.0[i]))
    }

    /// Number of chart coordinates on the boundary.
    pub fn chart_dim(&self) -> usize {
        self.dim - 1
    }

    /// Boundary point for chart coordinates: an angle in 2D, polar and azimuthal angles in 3D.
    pub fn chart(&self, params: &[T]) -> Vec3<T> {
        self.center + self.scale_axes(&unit_from_angles(self.dim, params))
    }

    /// Derivatives of [`Self::chart`] with respect to each chart coordinate.
    pub fn chart_tangents(&self, params: &[T]) -> Vec<Vec3<T>> {
        match self.dim {
            2 => {
                let (s, c) = params[0].sin_cos();
                vec![self.scale_axes(&Vec3::new(-s, c, T::zero()))]
            }
            _ => {
                let (st, ct) = params[0].sin_cos();
                let (sp, cp) = params[1].sin_cos();
                vec![
                    self.scale_axes(&Vec3::new(ct * cp, ct * sp, -st)),
                    self.scale_axes(&Vec3::new(-st * sp, st * cp, T::zero())),
                ]
            }
        }
    }

    /// Chart coordinates of a boundary point (the point is projected radially first).
    pub fn inverse_chart(&self, x: &Vec3<T>) -> Vec<T> {
        let mut u = Vec3::zero();
        for i in 0..self.dim {
            u.0[i] = (x.0[i] - self.center.0[i]) / self.semi_axes.0[i];
        }
        let u = u.normalized();
        match self.dim {
            2 => vec![u.0[1].atan2(u.0[0])],
            _ => vec![u.0[2].max(-T::one()).min(T::one()).acos(), u.0[1].atan2(u.0[0])],
        }
    }

    fn scale_axes(&self, u: &Vec3<T>) -> Vec3<T> {
        let mut v = Vec3::zero();
        for i in 0..self.dim {
            v.0[i] = u.0[i] * self.semi_axes.0[i];
        }
        v
    }

    /// Radial projection of a nonzero offset direction onto the boundary.
    pub fn boundary_point_towards(&self, dir: &Vec3<T>) -> Vec3<T> {
        let mut u = Vec3::zero();
        for i in 0..self.dim {
            u.0[i] = dir.0[i] / self.semi_axes.0[i];
        }
        let k = T::one() / u.norm();
        self.center + dir.truncate(self.dim).scale(k)
    }

    /// Evenly spread boundary points: equal angles in 2D, a Fibonacci lattice in 3D.
    pub fn boundary_grid(&self, m: usize) -> Vec<Vec3<T>> {
        match self.dim {
            2 => (0..m)
                .map(|i| self.chart(&[T::lit(2.0) * T::PI() * T::from_count(i) / T::from_count(m)]))
                .collect(),
            _ => {
                let golden = T::PI() * (T::lit(3.0) - T::lit(5.0).sqrt());
                (0..m)
                    .map(|i| {
                        let z = T::one() - T::lit(2.0) * (T::from_count(i) + T::lit(0.5)) / T::from_count(m);
                        let theta = z.acos();
                        let phi = golden * T::from_count(i);
                        self.chart(&[theta, phi])
                    })
                    .collect()
            }
        }
    }

    /// `δ = sup |x|` over the closure.
    pub fn delta(&self) -> T {
        if self.is_ball() {
            return self.center.norm() + self.semi_axes.0[0];
        }
        if self.center.max_abs() == T::zero() {
            return (0..self.dim).fold(T::zero(), |m, i| m.max(self.semi_axes.0[i]));
        }
        // coarse angular scan followed by local refinement
        let mut best = self.boundary_grid(if self.dim == 2 { 4096 } else { 20000 })
            .into_iter()
            .map(|x| self.inverse_chart(&x))
            .max_by(|a, b| self.chart(a).norm().partial_cmp(&self.chart(b).norm()).unwrap())
            .unwrap();
        let mut step = T::lit(0.01);
        while step > T::lit(1e-13) {
            let mut improved = false;
            for k in 0..best.len() {
                for sgn in [T::one(), -T::one()] {
                    let mut trial = best.clone();
                    trial[k] += sgn * step;
                    if self.chart(&trial).norm() > self.chart(&best).norm() {
                        best = trial;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= T::lit(0.5);
            }
        }
        self.chart(&best).norm()
    }

    /// Dilation `{x₀ + (1+ε)(x − x₀) : x ∈ D}`; its defining function is `χ(x₀ + (x − x₀)/(1+ε))`.
    pub fn dilate(&self, x0: &Vec3<T>, eps: T) -> Result<Self> {
        if !self.contains(x0) {
            return Err(Error::NotInterior);
        }
        if !(eps > T::zero()) {
            return Err(Error::InvalidParameter("dilation factor must be positive".into()));
        }
        let f = T::one() + eps;
        let x0 = x0.truncate(self.dim);
        let center = x0 + (self.center - x0).scale(f);
        let mut axes = self.semi_axes;
        for i in 0..self.dim {
            axes.0[i] *= f;
        }
        Self::ellipsoid(self.dim, center, axes)
    }

    /// Solves `χ(tv + x) = 0` exactly (the defining function is quadratic).
    pub fn chord(&self, v: &Vec3<T>, x: &Vec3<T>) -> ChordData<T> {
        let mut a = T::zero();
        let mut b = T::zero();
        let mut c = -T::one();
        for i in 0..self.dim {
            let s = self.semi_axes.0[i];
            let y = (x.0[i] - self.center.0[i]) / s;
            let w = v.0[i] / s;
            a += w * w;
            b += T::lit(2.0) * w * y;
            c += y * y;
        }
        let none = ChordData { chi: 0, tau_minus: T::nan(), tau_plus: T::nan() };
        if !(a > T::zero()) {
            return none;
        }
        let disc = b * b - T::lit(4.0) * a * c;
        let thr = T::lit(16.0) * T::epsilon() * (b * b).max((T::lit(4.0) * a * c).abs());
        if disc < -thr {
            return none;
        }
        if disc <= thr {
            let t = -b / (T::lit(2.0) * a);
            return ChordData { chi: 1, tau_minus: t, tau_plus: t };
        }
        let sq = disc.sqrt();
        let q = -T::lit(0.5) * (b + if b >= T::zero() { sq } else { -sq });
        let (t1, t2) = (q / a, c / q);
        ChordData { chi: 2, tau_minus: t1.min(t2), tau_plus: t1.max(t2) }
    }

    /// Grid points of the closed domain (bounding box grid plus boundary samples).
    pub fn closure_samples(&self, resolution: usize) -> Vec<Vec3<T>> {
        let res = resolution.max(2);
        let mut out = Vec::new();
        let idx = |k: usize| -> T { T::lit(-1.0) + T::lit(2.0) * T::from_count(k) / T::from_count(res - 1) };
        let mut push = |u: [T; 3]| {
            let mut x = self.center;
            for i in 0..self.dim {
                x.0[i] += u[i] * self.semi_axes.0[i];
            }
            if self.chi(&x) <= T::zero() {
                out.push(x);
            }
        };
        if self.dim == 2 {
            for i in 0..res {
                for j in 0..res {
                    push([idx(i), idx(j), T::zero()]);
                }
            }
        } else {
            for i in 0..res {
                for j in 0..res {
                    for k in 0..res {
                        push([idx(i), idx(j), idx(k)]);
                    }
                }
            }
        }
        let nb = if self.dim == 2 { 4 * res } else { 2 * res * res };
        out.extend(self.boundary_grid(nb));
        out
    }

    /// Uniform sample from the interior by rejection.
    pub fn sample_interior<R: Rng>(&self, rng: &mut R) -> Vec3<T> {
        loop {
            let mut x = self.center;
            for i in 0..self.dim {
                let u: f64 = rng.gen_range(-1.0..1.0);
                x.0[i] += T::lit(u) * self.semi_axes.0[i];
            }
            if self.chi(&x) < T::zero() {
                return x;
            }
        }
    }

    /// Interior sample with `χ ≤ −margin`.
    pub fn sample_interior_margin<R: Rng>(&self, rng: &mut R, margin: T) -> Vec3<T> {
        loop {
            let x = self.sample_interior(rng);
            if self.chi(&x) <= -margin {
                return x;
            }
        }
    }

    /// Boundary point with uniformly distributed chart direction.
    pub fn sample_boundary<R: Rng>(&self, rng: &mut R) -> Vec3<T> {
        let u = random_unit::<T, R>(self.dim, rng);
        self.center + self.scale_axes(&u)
    }
}

/// Unit vector from angle parameters (the boundary chart of the unit ball).
pub fn unit_from_angles<T: Real>(dim: usize, params: &[T]) -> Vec3<T> {
    match dim {
        2 => {
            let (s, c) = params[0].sin_cos();
            Vec3::new(c, s, T::zero())
        }
        _ => {
            let (st, ct) = params[0].sin_cos();
            let (sp, cp) = params[1].sin_cos();
            Vec3::new(st * cp, st * sp, ct)
        }
    }
}

/// Uniformly distributed unit vector in dimension `dim`.
pub fn random_unit<T: Real, R: Rng>(dim: usize, rng: &mut R) -> Vec3<T> {
    loop {
        let mut v = Vec3::zero();
        for i in 0..dim {
            let u: f64 = rng.gen_range(-1.0..1.0);
            v.0[i] = T::lit(u);
        }
        let n = v.norm();
        if n > T::lit(1e-3) && n <= T::one() {
            return v.scale(T::one() / n);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chord_examples() {
        let d = ConvexDomain::<f64>::unit_ball(2);
        let c = d.chord(&Vec3::new(1.0, 0.0, 0.0), &Vec3::zero());
        assert_eq!((c.chi, c.tau_minus, c.tau_plus), (2, -1.0, 1.0));
        assert_eq!(d.chord(&Vec3::new(1.0, 0.0, 0.0), &Vec3::new(0.0, 1.5, 0.0)).chi, 0);
        let t = d.chord(&Vec3::new(1.0, 0.0, 0.0), &Vec3::new(0.3, 1.0, 0.0));
        assert_eq!(t.chi, 1);
        assert_eq!(t.tau_minus, t.tau_plus);
        assert!((t.tau_minus + 0.3).abs() < 1e-15);
    }

    #[test]
    fn dilation_examples() {
        let d = ConvexDomain::<f64>::unit_ball(2);
        let big = d.dilate(&Vec3::zero(), 0.5).unwrap();
        assert!(big.is_ball() && (big.semi_axes.0[0] - 1.5).abs() < 1e-15);
        let e = ConvexDomain::<f64>::ellipsoid(2, Vec3::zero(), Vec3::new(2.0, 1.0, 1.0)).unwrap();
        let x0 = Vec3::new(1.0, 0.0, 0.0);
        let de = e.dilate(&x0, 0.1).unwrap();
        for x in de.boundary_grid(64) {
            let back = x0 + (x - x0).scale(1.0 / 1.1);
            assert!(e.chi(&back).abs() < 1e-12);
        }
        assert!(matches!(e.dilate(&Vec3::new(3.0, 0.0, 0.0), 0.1), Err(Error::NotInterior)));
    }

    #[test]
    fn unit_ball_constants() {
        let d = ConvexDomain::<f64>::unit_ball(3);
        assert_eq!(d.delta(), 1.0);
        for x in d.boundary_grid(50) {
            assert!((d.grad_chi(&x).norm() - 2.0).abs() < 1e-14);
            assert!(d.chi(&x).abs() < 1e-14);
        }
    }

    #[test]
    fn shifted_ellipse_delta() {
        let e = ConvexDomain::<f64>::ellipsoid(2, Vec3::new(0.3, -0.1, 0.0), Vec3::new(1.2, 0.7, 1.0)).unwrap();
        let mut best: f64 = 0.0;
        for k in 0..200000 {
            let th = 2.0 * std::f64::consts::PI * k as f64 / 200000.0;
            best = best.max(e.chart(&[th]).norm());
        }
        assert!((e.delta() - best).abs() < 1e-9);
    }

    #[test]
    fn chart_roundtrip_and_tangents() {
        let e = ConvexDomain::<f64>::ellipsoid(3, Vec3::new(0.1, 0.0, 0.2), Vec3::new(1.0, 0.8, 1.3)).unwrap();
        let p = [0.7, -2.1];
        let x = e.chart(&p);
        let back = e.inverse_chart(&x);
        assert!((back[0] - p[0]).abs() < 1e-13 && (back[1] - p[1]).abs() < 1e-13);
        let tang = e.chart_tangents(&p);
        let h = 1e-6;
        for k in 0..2 {
            let mut pp = p;
            let mut pm = p;
            pp[k] += h;
            pm[k] -= h;
            let fd = (e.chart(&pp) - e.chart(&pm)).scale(0.5 / h);
            assert!((fd - tang[k]).max_abs() < 1e-8);
            assert!(e.grad_chi(&x).dot(&tang[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn samples_lie_inside() {
        let d = ConvexDomain::<f64>::ellipsoid(2, Vec3::zero(), Vec3::new(2.0, 1.0, 1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert!(d.contains(&d.sample_interior(&mut rng)));
            assert!(d.chi(&d.sample_boundary(&mut rng)).abs() < 1e-14);
        }
        assert!(d.closure_samples(16).iter().all(|x| d.chi(x) <= 1e-14));
    }
}
