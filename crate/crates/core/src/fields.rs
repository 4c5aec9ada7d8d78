//! Static electromagnetic field models `(V, B)`.
//!
//! `V` is a sum of radial profiles around chosen centres. `B` is an
//! antisymmetric matrix field assembled from terms that are closed by
//! construction; every built-in term also carries an analytic vector potential
//! `A` with `∂ᵢA_k − ∂_kA_i = B_{ik}`.

use crate::domain::ConvexDomain;
use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3};
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Relativistic,
    Nonrelativistic,
}

/// Radial profile `f(r)` together with `f'(r)/r` and `f''(r)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialJet<T> {
    pub f: T,
    pub fr: T,
    pub f2: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile<T> {
    /// `a (1 − r²/ρ²)³` for `r < ρ`, zero outside. C² with compact support.
    Bump { amplitude: T, radius: T },
    /// `a exp(−r²/(2σ²))`.
    Gaussian { amplitude: T, width: T },
    /// `k r²/2`.
    Harmonic { strength: T },
    /// `k r²/2` for `r ≤ r₀`, smoothly cut to zero on `[r₀, r₁]` by a quintic step.
    TruncatedHarmonic { strength: T, flat_radius: T, cutoff_radius: T },
}

// quintic smoothstep and its first two derivatives
fn smoothstep<T: Real>(u: T) -> (T, T, T) {
    let u2 = u * u;
    let one = T::one();
    let s = u2 * u * (T::lit(10.0) - T::lit(15.0) * u + T::lit(6.0) * u2);
    let s1 = T::lit(30.0) * u2 * (one - u) * (one - u);
    let s2 = T::lit(60.0) * u * (one - u) * (one - T::lit(2.0) * u);
    (s, s1, s2)
}

const GL6_X: [f64; 6] = [
    -0.932_469_514_203_152,
    -0.661_209_386_466_264_5,
    -0.238_619_186_083_196_9,
    0.238_619_186_083_196_9,
    0.661_209_386_466_264_5,
    0.932_469_514_203_152,
];
const GL6_W: [f64; 6] = [
    0.171_324_492_379_170_3,
    0.360_761_573_048_138_6,
    0.467_913_934_572_691,
    0.467_913_934_572_691,
    0.360_761_573_048_138_6,
    0.171_324_492_379_170_3,
];

impl<T: Real> Profile<T> {
    pub fn jet(&self, r: T) -> RadialJet<T> {
        let zero = RadialJet { f: T::zero(), fr: T::zero(), f2: T::zero() };
        let one = T::one();
        match *self {
            Profile::Bump { amplitude: a, radius: rho } => {
                let s = r * r / (rho * rho);
                if s >= one {
                    return zero;
                }
                let w = one - s;
                RadialJet {
                    f: a * w * w * w,
                    fr: -T::lit(6.0) * a * w * w / (rho * rho),
                    f2: -T::lit(6.0) * a * w * (one - T::lit(5.0) * s) / (rho * rho),
                }
            }
            Profile::Gaussian { amplitude: a, width: sg } => {
                let e = (-(r * r) / (T::lit(2.0) * sg * sg)).exp();
                let inv = one / (sg * sg);
                RadialJet { f: a * e, fr: -a * inv * e, f2: a * inv * (r * r * inv - one) * e }
            }
            Profile::Harmonic { strength: k } => {
                RadialJet { f: T::lit(0.5) * k * r * r, fr: k, f2: k }
            }
            Profile::TruncatedHarmonic { strength: k, flat_radius: r0, cutoff_radius: r1 } => {
                if r >= r1 {
                    return zero;
                }
                let (chi, chi1, chi2) = if r <= r0 {
                    (one, T::zero(), T::zero())
                } else {
                    let l = r1 - r0;
                    let (s, s1, s2) = smoothstep((r - r0) / l);
                    (one - s, -s1 / l, -s2 / (l * l))
                };
                let half = T::lit(0.5);
                RadialJet {
                    f: half * k * r * r * chi,
                    fr: k * chi + half * k * r * chi1,
                    f2: k * chi + T::lit(2.0) * k * r * chi1 + half * k * r * r * chi2,
                }
            }
        }
    }

    /// Radius outside which the profile vanishes identically.
    pub fn support(&self) -> Option<T> {
        match *self {
            Profile::Bump { radius, .. } => Some(radius),
            Profile::TruncatedHarmonic { cutoff_radius, .. } => Some(cutoff_radius),
            _ => None,
        }
    }

    /// Radii where the profile is only finitely smooth.
    pub fn joins(&self) -> Vec<T> {
        match *self {
            Profile::Bump { radius, .. } => vec![radius],
            Profile::TruncatedHarmonic { flat_radius, cutoff_radius, .. } => vec![flat_radius, cutoff_radius],
            _ => vec![],
        }
    }

    /// `r⁻² ∫₀^r ρ f(ρ) dρ`, finite at `r = 0`.
    pub fn moment_over_r2(&self, r: T) -> T {
        let one = T::one();
        let r2 = r * r;
        match *self {
            Profile::Bump { amplitude: a, radius: rho } => {
                let s = r2 / (rho * rho);
                if s >= one {
                    a * rho * rho / (T::lit(8.0) * r2)
                } else {
                    a / T::lit(8.0) * (T::lit(4.0) - T::lit(6.0) * s + T::lit(4.0) * s * s - s * s * s)
                }
            }
            Profile::Gaussian { amplitude: a, width: sg } => {
                let u = r2 / (T::lit(2.0) * sg * sg);
                if u < T::lit(1e-8) {
                    a * T::lit(0.5) * (one - T::lit(0.5) * u)
                } else {
                    a * T::lit(0.5) * (-(-u).exp_m1()) / u
                }
            }
            Profile::Harmonic { strength: k } => k * r2 / T::lit(8.0),
            Profile::TruncatedHarmonic { strength: k, flat_radius: r0, cutoff_radius: r1 } => {
                if r <= r0 {
                    return k * r2 / T::lit(8.0);
                }
                let inner = k * r0 * r0 * r0 * r0 / T::lit(8.0);
                let hi = r.min(r1);
                // the integrand is a polynomial of degree 8 on [r0, r1]; six Gauss nodes are exact
                let mid = T::lit(0.5) * (hi + r0);
                let half = T::lit(0.5) * (hi - r0);
                let mut acc = T::zero();
                for (x, w) in GL6_X.iter().zip(GL6_W.iter()) {
                    let rho = mid + half * T::lit(*x);
                    acc += T::lit(*w) * rho * self.jet(rho).f;
                }
                (inner + half * acc) / r2
            }
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        match *self {
            Profile::Bump { amplitude, radius } => Profile::Bump { amplitude: amplitude * s, radius },
            Profile::Gaussian { amplitude, width } => Profile::Gaussian { amplitude: amplitude * s, width },
            Profile::Harmonic { strength } => Profile::Harmonic { strength: strength * s },
            Profile::TruncatedHarmonic { strength, flat_radius, cutoff_radius } => {
                Profile::TruncatedHarmonic { strength: strength * s, flat_radius, cutoff_radius }
            }
        }
    }
}

/// One radial contribution `f(|x − centre|)` to the potential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialTerm<T> {
    pub center: Vec3<T>,
    pub profile: Profile<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MagneticTerm<T> {
    /// Constant antisymmetric matrix.
    Constant(Mat3<T>),
    /// Planar field `B₁₂ = f(|x − centre|)`; only closed in dimension two.
    Planar { center: Vec3<T>, profile: Profile<T> },
    /// `B = dA` with `A = f(|x − centre|)·direction`; closed in every dimension.
    Curl { center: Vec3<T>, profile: Profile<T>, direction: Vec3<T> },
    /// `B = dA` with `A_k = Σ q[k][i][j] xᵢ xⱼ`.
    Quadratic { q: [[[T; 3]; 3]; 3] },
}

/// Sum of all field terms at one point.
#[derive(Clone, Copy, Debug)]
pub struct PotentialJet<T> {
    pub value: T,
    pub grad: Vec3<T>,
    pub hess: Mat3<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldModel<T> {
    pub dim: usize,
    pub c: T,
    pub mode: Mode,
    pub potential: Vec<RadialTerm<T>>,
    pub magnetic: Vec<MagneticTerm<T>>,
    /// Global multiplier on `B` and `A`; `−1` gives the reversed field.
    pub magnetic_scale: T,
}

fn hessian_of_radial<T: Real>(jet: &RadialJet<T>, d: &Vec3<T>, dim: usize) -> Mat3<T> {
    let mut h = Mat3::zero();
    for i in 0..dim {
        h.0[i][i] = jet.fr;
    }
    let r2 = d.norm2();
    if r2 > T::zero() {
        let k = (jet.f2 - jet.fr) / r2;
        for i in 0..dim {
            for j in 0..dim {
                h.0[i][j] += k * d.0[i] * d.0[j];
            }
        }
    }
    h
}

impl<T: Real> FieldModel<T> {
    pub fn new(dim: usize, c: T, mode: Mode) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(c > T::zero()) || !c.is_finite() {
            return Err(Error::InvalidParameter("c must be positive".into()));
        }
        Ok(FieldModel { dim, c, mode, potential: vec![], magnetic: vec![], magnetic_scale: T::one() })
    }

    /// The zero field.
    pub fn free(dim: usize, c: T, mode: Mode) -> Self {
        Self::new(dim, c, mode).expect("valid dimension and c")
    }

    pub fn with_potential(mut self, center: Vec3<T>, profile: Profile<T>) -> Self {
        self.potential.push(RadialTerm { center: center.truncate(self.dim), profile });
        self
    }

    pub fn with_magnetic(mut self, term: MagneticTerm<T>) -> Self {
        let dim = self.dim;
        let term = match term {
            MagneticTerm::Constant(m) => {
                let mut t = Mat3::zero();
                for i in 0..dim {
                    for j in 0..dim {
                        t.0[i][j] = m.0[i][j];
                    }
                }
                MagneticTerm::Constant(t)
            }
            MagneticTerm::Planar { center, profile } => MagneticTerm::Planar { center: center.truncate(dim), profile },
            MagneticTerm::Curl { center, profile, direction } => MagneticTerm::Curl {
                center: center.truncate(dim),
                profile,
                direction: direction.truncate(dim),
            },
            q => q,
        };
        self.magnetic.push(term);
        self
    }

    /// Constant planar field with `B₁₂ = b`.
    pub fn with_constant_b12(self, b: T) -> Self {
        self.with_magnetic(MagneticTerm::Constant(Mat3::antisymmetric(b, T::zero(), T::zero())))
    }

    /// Checks structural constraints of the term list.
    pub fn validate(&self) -> Result<()> {
        for m in &self.magnetic {
            match m {
                MagneticTerm::Planar { .. } if self.dim != 2 => {
                    return Err(Error::InvalidParameter(
                        "planar magnetic term requires dimension 2".into(),
                    ))
                }
                MagneticTerm::Constant(b) => {
                    let asym = (*b + b.transpose()).max_abs();
                    if asym > T::zero() {
                        return Err(Error::InvalidParameter("constant B must be antisymmetric".into()));
                    }
                }
                _ => {}
            }
        }
        for t in &self.potential {
            check_profile(&t.profile)?;
        }
        for m in &self.magnetic {
            match m {
                MagneticTerm::Planar { profile, .. } | MagneticTerm::Curl { profile, .. } => check_profile(profile)?,
                _ => {}
            }
        }
        Ok(())
    }

    /// Same potential with `B` replaced by `−B`.
    pub fn with_reversed_magnetic(&self) -> Self {
        let mut m = self.clone();
        m.magnetic_scale = -m.magnetic_scale;
        m
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        let mut m = self.clone();
        m.mode = mode;
        m
    }

    /// Factor multiplying `A` in the canonical impulse: `1/c`, or `1` without relativity.
    pub fn magnetic_coupling(&self) -> T {
        match self.mode {
            Mode::Relativistic => T::one() / self.c,
            Mode::Nonrelativistic => T::one(),
        }
    }

    pub fn is_relativistic(&self) -> bool {
        self.mode == Mode::Relativistic
    }

    pub fn potential_value(&self, x: &Vec3<T>) -> T {
        self.potential
            .iter()
            .map(|t| t.profile.jet((*x - t.center).truncate(self.dim).norm()).f)
            .sum()
    }

    pub fn potential_grad(&self, x: &Vec3<T>) -> Vec3<T> {
        let mut g = Vec3::zero();
        for t in &self.potential {
            let d = (*x - t.center).truncate(self.dim);
            let jet = t.profile.jet(d.norm());
            g += d.scale(jet.fr);
        }
        g
    }

    pub fn potential_jet(&self, x: &Vec3<T>) -> PotentialJet<T> {
        let mut out = PotentialJet { value: T::zero(), grad: Vec3::zero(), hess: Mat3::zero() };
        for t in &self.potential {
            let d = (*x - t.center).truncate(self.dim);
            let jet = t.profile.jet(d.norm());
            out.value += jet.f;
            out.grad += d.scale(jet.fr);
            out.hess = out.hess + hessian_of_radial(&jet, &d, self.dim);
        }
        out
    }

    /// Antisymmetric matrix `B(x)`.
    pub fn magnetic_field(&self, x: &Vec3<T>) -> Mat3<T> {
        let mut b = Mat3::zero();
        for term in &self.magnetic {
            match term {
                MagneticTerm::Constant(m) => b = b + *m,
                MagneticTerm::Planar { center, profile } => {
                    let f = profile.jet((*x - *center).truncate(self.dim).norm()).f;
                    b.0[0][1] += f;
                    b.0[1][0] -= f;
                }
                MagneticTerm::Curl { center, profile, direction } => {
                    let d = (*x - *center).truncate(self.dim);
                    let jet = profile.jet(d.norm());
                    for i in 0..self.dim {
                        for k in 0..self.dim {
                            b.0[i][k] += jet.fr * (d.0[i] * direction.0[k] - d.0[k] * direction.0[i]);
                        }
                    }
                }
                MagneticTerm::Quadratic { q } => {
                    let g = quadratic_gradient(q, x, self.dim);
                    for i in 0..self.dim {
                        for k in 0..self.dim {
                            b.0[i][k] += g[i][k] - g[k][i];
                        }
                    }
                }
            }
        }
        b.scale(self.magnetic_scale)
    }

    /// `dB[l]` is the matrix `∂_l B`.
    pub fn magnetic_derivative(&self, x: &Vec3<T>) -> [Mat3<T>; 3] {
        let mut db = [Mat3::zero(); 3];
        let n = self.dim;
        for term in &self.magnetic {
            match term {
                MagneticTerm::Constant(_) => {}
                MagneticTerm::Planar { center, profile } => {
                    let d = (*x - *center).truncate(n);
                    let jet = profile.jet(d.norm());
                    for l in 0..n {
                        db[l].0[0][1] += jet.fr * d.0[l];
                        db[l].0[1][0] -= jet.fr * d.0[l];
                    }
                }
                MagneticTerm::Curl { center, profile, direction } => {
                    let d = (*x - *center).truncate(n);
                    let jet = profile.jet(d.norm());
                    let h = hessian_of_radial(&jet, &d, n);
                    for l in 0..n {
                        for i in 0..n {
                            for k in 0..n {
                                db[l].0[i][k] += h.0[l][i] * direction.0[k] - h.0[l][k] * direction.0[i];
                            }
                        }
                    }
                }
                MagneticTerm::Quadratic { q } => {
                    for l in 0..n {
                        for i in 0..n {
                            for k in 0..n {
                                db[l].0[i][k] += (q[k][i][l] + q[k][l][i]) - (q[i][k][l] + q[i][l][k]);
                            }
                        }
                    }
                }
            }
        }
        for m in db.iter_mut() {
            *m = m.scale(self.magnetic_scale);
        }
        db
    }

    /// Analytic vector potential of the built-in terms.
    pub fn vector_potential(&self, x: &Vec3<T>) -> Vec3<T> {
        let mut a = Vec3::zero();
        let half = T::lit(0.5);
        for term in &self.magnetic {
            match term {
                MagneticTerm::Constant(m) => a -= m.mul_vec(x).scale(half),
                MagneticTerm::Planar { center, profile } => {
                    let d = (*x - *center).truncate(self.dim);
                    let w = profile.moment_over_r2(d.norm());
                    a += Vec3::new(-d.0[1], d.0[0], T::zero()).scale(w);
                }
                MagneticTerm::Curl { center, profile, direction } => {
                    let f = profile.jet((*x - *center).truncate(self.dim).norm()).f;
                    a += direction.scale(f);
                }
                MagneticTerm::Quadratic { q } => {
                    for k in 0..self.dim {
                        let mut s = T::zero();
                        for i in 0..self.dim {
                            for j in 0..self.dim {
                                s += q[k][i][j] * x.0[i] * x.0[j];
                            }
                        }
                        a.0[k] += s;
                    }
                }
            }
        }
        a.scale(self.magnetic_scale)
    }

    /// Lorentz-type force `−∇V + (1/c)Bv`, or `−∇V + Bv` without relativity.
    #[inline]
    pub fn force(&self, x: &Vec3<T>, v: &Vec3<T>) -> Vec3<T> {
        let mut f = -self.potential_grad(x);
        if !self.magnetic.is_empty() {
            let bv = self.magnetic_field(x).mul_vec(v);
            f += match self.mode {
                Mode::Relativistic => bv.scale(T::one() / self.c),
                Mode::Nonrelativistic => bv,
            };
        }
        f
    }

    /// Smallest ball outside which `V` and `B` vanish, if one exists.
    pub fn support_ball(&self) -> Option<(Vec3<T>, T)> {
        let mut balls: Vec<(Vec3<T>, T)> = Vec::new();
        for t in &self.potential {
            balls.push((t.center, t.profile.support()?));
        }
        for m in &self.magnetic {
            match m {
                MagneticTerm::Planar { center, profile } | MagneticTerm::Curl { center, profile, .. } => {
                    balls.push((*center, profile.support()?));
                }
                MagneticTerm::Constant(b) if b.max_abs() == T::zero() => {}
                _ => return None,
            }
        }
        if balls.is_empty() {
            return Some((Vec3::zero(), T::zero()));
        }
        let mut c = Vec3::zero();
        for (b, _) in &balls {
            c += *b;
        }
        c = c.scale(T::one() / T::from_count(balls.len()));
        let r = balls.iter().fold(T::zero(), |m, (b, rho)| m.max((*b - c).norm() + *rho));
        Some((c, r))
    }

    /// Radius of a ball about the origin containing the support.
    /// Spheres `(centre, radius)` on which some term is only finitely smooth.
    pub fn joins(&self) -> Vec<(Vec3<T>, T)> {
        let mut out = Vec::new();
        for t in &self.potential {
            out.extend(t.profile.joins().into_iter().map(|r| (t.center, r)));
        }
        for m in &self.magnetic {
            if let MagneticTerm::Planar { center, profile } | MagneticTerm::Curl { center, profile, .. } = m {
                out.extend(profile.joins().into_iter().map(|r| (*center, r)));
            }
        }
        out
    }

    pub fn support_radius(&self) -> Option<T> {
        self.support_ball().map(|(c, r)| c.norm() + r)
    }

    pub fn has_magnetic(&self) -> bool {
        !self.magnetic.is_empty()
    }
}

fn check_profile<T: Real>(p: &Profile<T>) -> Result<()> {
    let ok = match *p {
        Profile::Bump { radius, .. } => radius > T::zero(),
        Profile::Gaussian { width, .. } => width > T::zero(),
        Profile::Harmonic { .. } => true,
        Profile::TruncatedHarmonic { flat_radius, cutoff_radius, .. } => {
            flat_radius >= T::zero() && cutoff_radius > flat_radius
        }
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("bad profile {p:?}")))
    }
}

// g[i][k] = ∂ᵢ A_k
fn quadratic_gradient<T: Real>(q: &[[[T; 3]; 3]; 3], x: &Vec3<T>, dim: usize) -> [[T; 3]; 3] {
    let mut g = [[T::zero(); 3]; 3];
    for i in 0..dim {
        for k in 0..dim {
            let mut s = T::zero();
            for j in 0..dim {
                s += (q[k][i][j] + q[k][j][i]) * x.0[j];
            }
            g[i][k] = s;
        }
    }
    g
}

/// Checked force evaluation on plain slices.
pub fn eval_force<T: Real>(model: &FieldModel<T>, x: &[T], v: &[T]) -> Result<Vec<T>> {
    for s in [x, v] {
        if s.len() != model.dim {
            return Err(Error::DimensionMismatch { expected: model.dim, got: s.len() });
        }
    }
    Ok(model.force(&Vec3::from_slice(x), &Vec3::from_slice(v)).to_vec(model.dim))
}

/// Largest cyclic residual `|∂ᵢB_{kl} + ∂_lB_{ik} + ∂_kB_{li}|` over the samples.
pub fn check_magnetic_closedness<T: Real>(model: &FieldModel<T>, samples: &[Vec3<T>]) -> T {
    let n = model.dim;
    let mut worst = T::zero();
    for x in samples {
        let db = model.magnetic_derivative(x);
        for i in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let r = db[i].0[k][l] + db[l].0[i][k] + db[k].0[l][i];
                    worst = worst.max(r.abs());
                }
            }
        }
    }
    worst
}

/// Largest `|B + Bᵀ|` entry over the samples.
pub fn antisymmetry_residual<T: Real>(model: &FieldModel<T>, samples: &[Vec3<T>]) -> T {
    samples
        .iter()
        .map(|x| {
            let b = model.magnetic_field(x);
            (b + b.transpose()).max_abs()
        })
        .fold(T::zero(), T::max)
}

/// A magnetic potential: any `A` with `∂ᵢA_k − ∂_kA_i = B_{ik}`.
pub trait Gauge<T: Real>: Send + Sync {
    fn potential(&self, x: &Vec3<T>) -> Vec3<T>;
    fn label(&self) -> String {
        "custom".into()
    }
}

impl<T: Real> Gauge<T> for FieldModel<T> {
    fn potential(&self, x: &Vec3<T>) -> Vec3<T> {
        self.vector_potential(x)
    }
    fn label(&self) -> String {
        "analytic".into()
    }
}

/// `A ≡ 0`, valid only for `B ≡ 0`.
pub struct ZeroGauge;

impl<T: Real> Gauge<T> for ZeroGauge {
    fn potential(&self, _x: &Vec3<T>) -> Vec3<T> {
        Vec3::zero()
    }
    fn label(&self) -> String {
        "zero".into()
    }
}

/// `A + ∇φ` for a user supplied gradient `∇φ`.
pub struct ShiftedGauge<'a, T> {
    pub base: &'a dyn Gauge<T>,
    pub grad_phi: fn(&Vec3<T>) -> Vec3<T>,
}

impl<'a, T: Real> Gauge<T> for ShiftedGauge<'a, T> {
    fn potential(&self, x: &Vec3<T>) -> Vec3<T> {
        self.base.potential(x) + (self.grad_phi)(x)
    }
    fn label(&self) -> String {
        format!("{}+grad", self.base.label())
    }
}

const GL8_X: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// `A(x) = −∫₀¹ s B(x₀ + s(x − x₀))(x − x₀) ds` by composite Gauss–Legendre quadrature.
#[derive(Clone, Debug)]
pub struct LineIntegralGauge<T> {
    pub model: FieldModel<T>,
    pub x0: Vec3<T>,
    pub panels: usize,
}

impl<T: Real> LineIntegralGauge<T> {
    /// Parameters in `(0, 1)` where the segment from `x0` to `x` crosses a profile join.
    fn breaks(&self, d: &Vec3<T>) -> Vec<T> {
        let mut out = vec![T::zero(), T::one()];
        let a = d.norm2();
        if a == T::zero() {
            return out;
        }
        for m in &self.model.magnetic {
            if let MagneticTerm::Planar { center, profile } | MagneticTerm::Curl { center, profile, .. } = m {
                let w = self.x0 - *center;
                let b = w.dot(d);
                for rho in profile.joins() {
                    let disc = b * b - a * (w.norm2() - rho * rho);
                    if disc <= T::zero() {
                        continue;
                    }
                    for s in [(-b - disc.sqrt()) / a, (-b + disc.sqrt()) / a] {
                        if s > T::zero() && s < T::one() {
                            out.push(s);
                        }
                    }
                }
            }
        }
        out.sort_by(|x, y| x.partial_cmp(y).unwrap());
        out
    }
}

impl<T: Real> Gauge<T> for LineIntegralGauge<T> {
    fn potential(&self, x: &Vec3<T>) -> Vec3<T> {
        let d = *x - self.x0;
        let mut acc = Vec3::zero();
        let brk = self.breaks(&d);
        for seg in brk.windows(2) {
            let (lo, hi) = (seg[0], seg[1]);
            if hi <= lo {
                continue;
            }
            let h = (hi - lo) / T::from_count(self.panels);
            let half = T::lit(0.5) * h;
            for p in 0..self.panels {
                let mid = lo + (T::from_count(p) + T::lit(0.5)) * h;
                for (xi, wi) in GL8_X.iter().zip(GL8_W.iter()) {
                    let s = mid + half * T::lit(*xi);
                    let b = self.model.magnetic_field(&(self.x0 + d.scale(s)));
                    acc += b.mul_vec(&d).scale(T::lit(*wi) * half * s);
                }
            }
        }
        -acc
    }
    fn label(&self) -> String {
        "line-integral".into()
    }
}

/// Builds the line-integral potential after confirming closedness on the domain samples.
pub fn potential_from_b<T: Real>(
    model: &FieldModel<T>,
    domain: &ConvexDomain<T>,
    x0: Vec3<T>,
    closedness_tol: T,
) -> Result<LineIntegralGauge<T>> {
    let samples = domain.closure_samples(16);
    let res = check_magnetic_closedness(model, &samples);
    if res > closedness_tol {
        return Err(Error::NotClosed(res.as_f64()));
    }
    Ok(LineIntegralGauge { model: model.clone(), x0: x0.truncate(model.dim), panels: 8 })
}

/// Grid sup-norms `(‖V‖_{C²}, ‖B‖_{C¹})` over the closed domain.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct FieldNorms {
    pub v_c2: f64,
    pub b_c1: f64,
    pub samples: usize,
    pub resolution: usize,
}

pub fn field_norms<T: Real>(model: &FieldModel<T>, domain: &ConvexDomain<T>, resolution: usize) -> FieldNorms {
    let samples = domain.closure_samples(resolution);
    let n = model.dim;
    let mut v = T::zero();
    let mut b = T::zero();
    for x in &samples {
        let jet = model.potential_jet(x);
        v = v.max(jet.value.abs());
        for i in 0..n {
            v = v.max(jet.grad.0[i].abs());
            for j in 0..n {
                v = v.max(jet.hess.0[i][j].abs());
            }
        }
        b = b.max(model.magnetic_field(x).max_abs());
        for m in model.magnetic_derivative(x).iter().take(n) {
            b = b.max(m.max_abs());
        }
    }
    FieldNorms { v_c2: v.as_f64(), b_c1: b.as_f64(), samples: samples.len(), resolution }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump_model() -> FieldModel<f64> {
        FieldModel::<f64>::free(2, 1.0, Mode::Relativistic)
            .with_potential(Vec3::new(0.1, -0.2, 0.0), Profile::Bump { amplitude: 0.05, radius: 0.6 })
            .with_magnetic(MagneticTerm::Planar {
                center: Vec3::new(-0.1, 0.15, 0.0),
                profile: Profile::Bump { amplitude: 0.3, radius: 0.5 },
            })
    }

    fn fd_grad(f: impl Fn(&Vec3<f64>) -> f64, x: &Vec3<f64>, dim: usize) -> Vec3<f64> {
        let h = 1e-5;
        let mut g = Vec3::zero();
        for i in 0..dim {
            let mut xp = *x;
            let mut xm = *x;
            xp.0[i] += h;
            xm.0[i] -= h;
            g.0[i] = (f(&xp) - f(&xm)) / (2.0 * h);
        }
        g
    }

    #[test]
    fn force_examples() {
        let free = FieldModel::<f64>::free(2, 1.0, Mode::Relativistic);
        assert_eq!(eval_force(&free, &[0.3, 0.1], &[0.2, 0.5]).unwrap(), vec![0.0, 0.0]);
        let m = FieldModel::<f64>::free(2, 1.0, Mode::Relativistic).with_constant_b12(1.0);
        assert_eq!(eval_force(&m, &[0.0, 0.0], &[1.0, 0.0]).unwrap(), vec![0.0, -1.0]);
        let h = FieldModel::<f64>::free(2, 1.0, Mode::Relativistic).with_potential(
            Vec3::zero(),
            Profile::TruncatedHarmonic { strength: 1.0, flat_radius: 0.5, cutoff_radius: 0.9 },
        );
        let f = eval_force(&h, &[0.2, -0.3], &[0.4, 0.4]).unwrap();
        assert!((f[0] + 0.2).abs() < 1e-15 && (f[1] - 0.3).abs() < 1e-15);
        assert!(matches!(
            eval_force(&h, &[0.2, -0.3, 0.0], &[0.4, 0.4]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn radial_derivatives_match_finite_differences() {
        let profiles = [
            Profile::Bump { amplitude: 0.7, radius: 1.3 },
            Profile::Gaussian { amplitude: -0.4, width: 0.35 },
            Profile::Harmonic { strength: 2.0 },
            Profile::TruncatedHarmonic { strength: 1.5, flat_radius: 0.3, cutoff_radius: 0.8 },
        ];
        for p in profiles {
            for k in 1..40 {
                // offset keeps the stencil off the C2 joins
                let r = 0.025 * k as f64 + 0.0037;
                let h = 1e-5;
                let j = p.jet(r);
                let d1 = (p.jet(r + h).f - p.jet(r - h).f) / (2.0 * h);
                let d2 = (p.jet(r + h).f - 2.0 * j.f + p.jet(r - h).f) / (h * h);
                assert!((j.fr * r - d1).abs() < 1e-8, "{p:?} r={r} {} {}", j.fr * r, d1);
                assert!((j.f2 - d2).abs() < 2e-4, "{p:?} r={r} {} {}", j.f2, d2);
            }
        }
    }

    #[test]
    fn moment_matches_quadrature() {
        let profiles = [
            Profile::Bump { amplitude: 0.7, radius: 1.3 },
            Profile::Gaussian { amplitude: -0.4, width: 0.35 },
            Profile::Harmonic { strength: 2.0 },
            Profile::TruncatedHarmonic { strength: 1.5, flat_radius: 0.3, cutoff_radius: 0.8 },
        ];
        for p in profiles {
            for r in [0.05, 0.4, 0.77, 1.2, 2.0] {
                let n = 20000;
                let h = r / n as f64;
                // Simpson oracle for ∫ ρ f(ρ) dρ
                let mut s = 0.0;
                for i in 0..=n {
                    let rho = i as f64 * h;
                    let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                    s += w * rho * p.jet(rho).f;
                }
                s *= h / 3.0;
                assert!((p.moment_over_r2(r) - s / (r * r)).abs() < 1e-9, "{p:?} r={r}");
            }
        }
    }

    #[test]
    fn potential_gradient_and_hessian() {
        let m = FieldModel::<f64>::free(3, 1.0, Mode::Relativistic)
            .with_potential(Vec3::new(0.1, 0.0, -0.1), Profile::Bump { amplitude: 0.2, radius: 0.9 })
            .with_potential(Vec3::new(-0.3, 0.2, 0.0), Profile::Gaussian { amplitude: 0.1, width: 0.3 });
        let x = Vec3::new(0.05, 0.12, 0.3);
        let jet = m.potential_jet(&x);
        let g = fd_grad(|y| m.potential_value(y), &x, 3);
        assert!((g - jet.grad).max_abs() < 1e-9);
        for i in 0..3 {
            let gi = fd_grad(|y| m.potential_grad(y).0[i], &x, 3);
            for j in 0..3 {
                assert!((gi.0[j] - jet.hess.0[i][j]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn vector_potentials_reproduce_b() {
        let mut q = [[[0.0; 3]; 3]; 3];
        q[0][1][2] = 0.3;
        q[1][0][0] = -0.2;
        q[2][1][1] = 0.5;
        q[2][0][2] = 0.1;
        let models = vec![
            bump_model(),
            FieldModel::<f64>::free(2, 1.0, Mode::Relativistic).with_constant_b12(0.7),
            FieldModel::<f64>::free(2, 1.0, Mode::Relativistic).with_magnetic(MagneticTerm::Planar {
                center: Vec3::zero(),
                profile: Profile::Gaussian { amplitude: 0.4, width: 0.3 },
            }),
            FieldModel::<f64>::free(3, 1.0, Mode::Relativistic).with_magnetic(MagneticTerm::Curl {
                center: Vec3::new(0.1, 0.1, 0.0),
                profile: Profile::Bump { amplitude: 0.4, radius: 0.8 },
                direction: Vec3::new(0.2, -0.5, 0.7),
            }),
            FieldModel::<f64>::free(3, 1.0, Mode::Relativistic).with_magnetic(MagneticTerm::Quadratic { q }),
        ];
        let pts = [Vec3::new(0.2, -0.1, 0.3), Vec3::new(-0.4, 0.25, -0.2), Vec3::new(0.0, 0.0, 0.0)];
        for m in &models {
            for p in &pts {
                let x = p.truncate(m.dim);
                let b = m.magnetic_field(&x);
                let mut da = [[0.0; 3]; 3];
                for k in 0..m.dim {
                    let g = fd_grad(|y| m.vector_potential(y).0[k], &x, m.dim);
                    for i in 0..m.dim {
                        da[i][k] = g.0[i];
                    }
                }
                for i in 0..m.dim {
                    for k in 0..m.dim {
                        assert!((da[i][k] - da[k][i] - b.0[i][k]).abs() < 1e-8, "{m:?}");
                    }
                }
                let db = m.magnetic_derivative(&x);
                for l in 0..m.dim {
                    for i in 0..m.dim {
                        let g = fd_grad(|y| m.magnetic_field(y).0[i][l], &x, m.dim);
                        for ll in 0..m.dim {
                            assert!((g.0[ll] - db[ll].0[i][l]).abs() < 1e-8);
                        }
                    }
                }
                assert!(check_magnetic_closedness(m, &[x]) < 1e-12);
                assert!(antisymmetry_residual(m, &[x]) == 0.0);
            }
        }
    }

    #[test]
    fn constant_field_potential_convention() {
        let b = 0.8;
        let m = FieldModel::<f64>::free(2, 1.0, Mode::Relativistic).with_constant_b12(b);
        let x = Vec3::new(0.3, -0.6, 0.0);
        let a = m.vector_potential(&x);
        assert!((a.0[0] + b * x.0[1] / 2.0).abs() < 1e-15);
        assert!((a.0[1] - b * x.0[0] / 2.0).abs() < 1e-15);
        let rev = m.with_reversed_magnetic();
        assert_eq!(rev.magnetic_field(&x).0[0][1], -b);
    }

    #[test]
    fn line_integral_matches_analytic_for_radial_gauge() {
        // the planar term's analytic potential is the line integral about its centre
        let m = FieldModel::<f64>::free(2, 1.0, Mode::Relativistic).with_magnetic(MagneticTerm::Planar {
            center: Vec3::new(0.1, 0.2, 0.0),
            profile: Profile::Bump { amplitude: 0.3, radius: 0.5 },
        });
        let g = LineIntegralGauge { model: m.clone(), x0: Vec3::new(0.1, 0.2, 0.0), panels: 8 };
        for x in [Vec3::new(0.3, 0.1, 0.0), Vec3::new(-0.5, 0.4, 0.0), Vec3::new(0.12, 0.21, 0.0)] {
            let err = (g.potential(&x) - m.vector_potential(&x)).max_abs();
            assert!(err < 1e-12, "{err}");
        }
    }

    #[test]
    fn support_ball_covers_terms() {
        let m = bump_model();
        let (c, r) = m.support_ball().unwrap();
        for t in &m.potential {
            assert!((t.center - c).norm() + 0.6 <= r + 1e-15);
        }
        assert!(FieldModel::<f64>::free(2, 1.0, Mode::Relativistic).with_constant_b12(0.1).support_ball().is_none());
        assert_eq!(FieldModel::<f64>::free(2, 1.0, Mode::Relativistic).support_ball().unwrap().1, 0.0);
    }

    #[test]
    fn planar_term_rejected_in_three_dimensions() {
        let m = FieldModel::<f64>::free(3, 1.0, Mode::Relativistic).with_magnetic(MagneticTerm::Planar {
            center: Vec3::zero(),
            profile: Profile::Bump { amplitude: 0.1, radius: 0.5 },
        });
        assert!(m.validate().is_err());
    }
}
