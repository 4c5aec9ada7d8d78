//! Dormand–Prince 5(4) integrator with continuous extension and terminal events.
//!
//! Steps are controlled on the embedded fourth-order estimate and advanced with
//! the fifth-order solution. Accepted step sizes are recorded so that a run can
//! be replayed on the same mesh; the replayed map is smooth in the initial
//! data, which keeps finite-difference Jacobians free of step-selection noise.

use crate::error::{Error, Result};
use crate::real::Real;

pub trait OdeSystem<T: Real, const N: usize> {
    fn rhs(&self, t: T, y: &[T; N], dy: &mut [T; N]);

    /// Whether component `i` enters the step-size error norm.
    fn controls_error(&self, _i: usize) -> bool {
        true
    }

    /// Number of surfaces across which the right-hand side is only finitely smooth.
    fn switch_count(&self) -> usize {
        0
    }

    /// Signed function whose zero set is switching surface `k`.
    fn switch(&self, _k: usize, _y: &[T; N]) -> T {
        T::zero()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances<T> {
    pub rtol: T,
    pub atol: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Tolerances { rtol: T::lit(1e-10), atol: T::lit(1e-12) }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Options<T> {
    pub tol: Tolerances<T>,
    pub h_init: Option<T>,
    pub h_max: Option<T>,
    pub max_steps: usize,
    /// Events are located until `|g| ≤ event_tol`.
    pub event_tol: T,
    pub keep_dense: bool,
}

impl<T: Real> Default for Options<T> {
    fn default() -> Self {
        Options {
            tol: Tolerances::default(),
            h_init: None,
            h_max: None,
            max_steps: 200_000,
            event_tol: T::lit(1e-12),
            keep_dense: true,
        }
    }
}

/// Continuous extension on one accepted step.
#[derive(Clone, Debug)]
pub struct DenseStep<T, const N: usize> {
    pub t0: T,
    pub h: T,
    r: [[T; N]; 5],
}

impl<T: Real, const N: usize> DenseStep<T, N> {
    pub fn eval(&self, t: T) -> [T; N] {
        let th = (t - self.t0) / self.h;
        let one = T::one();
        let c = one - th;
        let mut y = [T::zero(); N];
        for i in 0..N {
            y[i] = self.r[0][i] + th * (self.r[1][i] + c * (self.r[2][i] + th * (self.r[3][i] + c * self.r[4][i])));
        }
        y
    }

    pub fn t1(&self) -> T {
        self.t0 + self.h
    }
}

#[derive(Clone, Debug)]
pub struct EventHit<T, const N: usize> {
    pub t: T,
    pub y: [T; N],
    pub g: T,
}

#[derive(Clone, Debug)]
pub struct Solution<T, const N: usize> {
    pub t0: T,
    pub y0: [T; N],
    pub t_end: T,
    pub y_end: [T; N],
    /// Step end points `(t, y)`, including the start.
    pub nodes: Vec<(T, [T; N])>,
    pub dense: Vec<DenseStep<T, N>>,
    /// Accepted step sizes, in order.
    pub hs: Vec<T>,
    pub event: Option<EventHit<T, N>>,
    pub n_rhs: usize,
    pub n_rejected: usize,
}

impl<T: Real, const N: usize> Solution<T, N> {
    /// Dense-output evaluation; clamps to the covered interval.
    pub fn eval(&self, t: T) -> [T; N] {
        if self.dense.is_empty() {
            return self.y_end;
        }
        let fwd = self.t_end >= self.t0;
        let idx = self
            .dense
            .partition_point(|s| if fwd { s.t1() < t } else { s.t1() > t })
            .min(self.dense.len() - 1);
        let s = &self.dense[idx];
        let tc = if fwd { t.max(s.t0).min(s.t1()) } else { t.min(s.t0).max(s.t1()) };
        s.eval(tc)
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct Stage<T, const N: usize> {
    y_new: [T; N],
    k: [[T; N]; 7],
    err: [T; N],
}

fn dp_step<T: Real, S: OdeSystem<T, N>, const N: usize>(sys: &S, t: T, y: &[T; N], k1: &[T; N], h: T) -> Stage<T, N> {
    let l = T::lit;
    let mut k = [[T::zero(); N]; 7];
    k[0] = *k1;
    let mut tmp = [T::zero(); N];
    for i in 0..N {
        tmp[i] = y[i] + h * l(A21) * k[0][i];
    }
    sys.rhs(t + l(C2) * h, &tmp, &mut k[1]);
    for i in 0..N {
        tmp[i] = y[i] + h * (l(A31) * k[0][i] + l(A32) * k[1][i]);
    }
    sys.rhs(t + l(C3) * h, &tmp, &mut k[2]);
    for i in 0..N {
        tmp[i] = y[i] + h * (l(A41) * k[0][i] + l(A42) * k[1][i] + l(A43) * k[2][i]);
    }
    sys.rhs(t + l(C4) * h, &tmp, &mut k[3]);
    for i in 0..N {
        tmp[i] = y[i] + h * (l(A51) * k[0][i] + l(A52) * k[1][i] + l(A53) * k[2][i] + l(A54) * k[3][i]);
    }
    sys.rhs(t + l(C5) * h, &tmp, &mut k[4]);
    for i in 0..N {
        tmp[i] = y[i]
            + h * (l(A61) * k[0][i] + l(A62) * k[1][i] + l(A63) * k[2][i] + l(A64) * k[3][i] + l(A65) * k[4][i]);
    }
    sys.rhs(t + h, &tmp, &mut k[5]);
    let mut y_new = [T::zero(); N];
    for i in 0..N {
        y_new[i] = y[i]
            + h * (l(A71) * k[0][i] + l(A73) * k[2][i] + l(A74) * k[3][i] + l(A75) * k[4][i] + l(A76) * k[5][i]);
    }
    sys.rhs(t + h, &y_new, &mut k[6]);
    let mut err = [T::zero(); N];
    for i in 0..N {
        err[i] = h
            * (l(E1) * k[0][i] + l(E3) * k[2][i] + l(E4) * k[3][i] + l(E5) * k[4][i] + l(E6) * k[5][i] + l(E7) * k[6][i]);
    }
    Stage { y_new, k, err }
}

fn dense_coeffs<T: Real, const N: usize>(t0: T, h: T, y: &[T; N], st: &Stage<T, N>) -> DenseStep<T, N> {
    let l = T::lit;
    let mut r = [[T::zero(); N]; 5];
    for i in 0..N {
        let ydiff = st.y_new[i] - y[i];
        let bspl = h * st.k[0][i] - ydiff;
        r[0][i] = y[i];
        r[1][i] = ydiff;
        r[2][i] = bspl;
        r[3][i] = ydiff - h * st.k[6][i] - bspl;
        r[4][i] = h
            * (l(D1) * st.k[0][i] + l(D3) * st.k[2][i] + l(D4) * st.k[3][i] + l(D5) * st.k[4][i]
                + l(D6) * st.k[5][i]
                + l(D7) * st.k[6][i]);
    }
    DenseStep { t0, h, r }
}

fn err_norm<T: Real, S: OdeSystem<T, N>, const N: usize>(
    sys: &S,
    tol: &Tolerances<T>,
    y: &[T; N],
    y_new: &[T; N],
    err: &[T; N],
) -> T {
    let mut s = T::zero();
    for i in 0..N {
        if !sys.controls_error(i) {
            continue;
        }
        let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
        s = s.max((err[i] / sc).abs());
    }
    s
}

fn initial_step<T: Real, S: OdeSystem<T, N>, const N: usize>(
    sys: &S,
    t0: T,
    y0: &[T; N],
    f0: &[T; N],
    tol: &Tolerances<T>,
    dir: T,
) -> T {
    let wnorm = |v: &[T; N]| {
        let mut s = T::zero();
        let mut m = 0usize;
        for i in 0..N {
            if sys.controls_error(i) {
                let sc = tol.atol + tol.rtol * y0[i].abs();
                s += (v[i] / sc) * (v[i] / sc);
                m += 1;
            }
        }
        (s / T::from_count(m.max(1))).sqrt()
    };
    let d0 = wnorm(y0);
    let d1 = wnorm(f0);
    let h0 = if d0 < T::lit(1e-5) || d1 < T::lit(1e-5) { T::lit(1e-6) } else { T::lit(0.01) * d0 / d1 };
    let mut y1 = [T::zero(); N];
    for i in 0..N {
        y1[i] = y0[i] + dir * h0 * f0[i];
    }
    let mut f1 = [T::zero(); N];
    sys.rhs(t0 + dir * h0, &y1, &mut f1);
    let mut df = [T::zero(); N];
    for i in 0..N {
        df[i] = f1[i] - f0[i];
    }
    let d2 = wnorm(&df) / h0;
    let h1 = if d1.max(d2) <= T::lit(1e-15) {
        (h0 * T::lit(1e-3)).max(T::lit(1e-6))
    } else {
        (T::lit(0.01) / d1.max(d2)).powf(T::lit(0.2))
    };
    (T::lit(100.0) * h0).min(h1)
}

/// Samples per step when looking for switching-surface crossings; a pass
/// through a surface's interior shorter than one sample spacing goes unseen.
const SWITCH_SAMPLES: usize = 16;

/// Fraction of the step at which the first switching surface is met, if it
/// lies well inside the step.
fn first_switch<T: Real, S: OdeSystem<T, N>, const N: usize>(
    sys: &S,
    y: &[T; N],
    y_new: &[T; N],
    d: &DenseStep<T, N>,
    t: T,
    hs: T,
) -> Option<T> {
    let mut best: Option<T> = None;
    let lo_cut = T::lit(1e-6);
    for k in 0..sys.switch_count() {
        let mut ta = T::zero();
        let mut ga = sys.switch(k, y);
        for j in 1..=SWITCH_SAMPLES {
            let tb = T::from_count(j) / T::from_count(SWITCH_SAMPLES);
            let yb = if j == SWITCH_SAMPLES { *y_new } else { d.eval(t + tb * hs) };
            let gb = sys.switch(k, &yb);
            if (ga < T::zero()) != (gb < T::zero()) && ga != T::zero() {
                let (mut a, mut b) = (ta, tb);
                let neg = ga < T::zero();
                while b - a > T::lit(1e-13) {
                    let m = T::lit(0.5) * (a + b);
                    if (sys.switch(k, &d.eval(t + m * hs)) < T::zero()) == neg {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                let th = b;
                if th > lo_cut && th < T::one() - lo_cut {
                    best = Some(best.map_or(th, |x: T| x.min(th)));
                }
                break;
            }
            ta = tb;
            ga = gb;
        }
    }
    best
}

/// Integrates from `t0` to `t_end` (either direction), stopping early at the
/// first time the event function crosses from negative to nonnegative values.
pub fn integrate<T, S, const N: usize>(
    sys: &S,
    t0: T,
    y0: [T; N],
    t_end: T,
    opts: &Options<T>,
    event: Option<&dyn Fn(&[T; N]) -> T>,
) -> Result<Solution<T, N>>
where
    T: Real,
    S: OdeSystem<T, N>,
{
    let dir = if t_end >= t0 { T::one() } else { -T::one() };
    let span = (t_end - t0).abs();
    let mut sol = Solution {
        t0,
        y0,
        t_end: t0,
        y_end: y0,
        nodes: vec![(t0, y0)],
        dense: Vec::new(),
        hs: Vec::new(),
        event: None,
        n_rhs: 0,
        n_rejected: 0,
    };
    if span == T::zero() {
        return Ok(sol);
    }
    let mut k1 = [T::zero(); N];
    sys.rhs(t0, &y0, &mut k1);
    sol.n_rhs += 1;
    let mut h = match opts.h_init {
        Some(h) => h.abs(),
        None => {
            sol.n_rhs += 1;
            initial_step(sys, t0, &y0, &k1, &opts.tol, dir)
        }
    };
    if let Some(hm) = opts.h_max {
        h = h.min(hm);
    }
    let mut t = t0;
    let mut y = y0;
    let mut armed = event.is_some_and(|g| g(&y0) < T::zero());
    let mut g_prev = event.map_or(T::zero(), |g| g(&y0));
    let mut accepted = 0usize;
    let mut last_reject = false;
    loop {
        if accepted >= opts.max_steps {
            return Err(Error::MaxSteps(opts.max_steps));
        }
        let remaining = (t_end - t).abs();
        let mut last = false;
        if h >= remaining * (T::one() - T::lit(1e-12)) {
            h = remaining;
            last = true;
        }
        if h <= T::lit(16.0) * T::epsilon() * t.abs().max(span) {
            return Err(Error::StepUnderflow(t.as_f64()));
        }
        let hs = dir * h;
        let st = dp_step(sys, t, &y, &k1, hs);
        sol.n_rhs += 6;
        let en = err_norm(sys, &opts.tol, &y, &st.y_new, &st.err);
        if !(en <= T::one()) || !st.y_new.iter().all(|v| v.is_finite()) {
            sol.n_rejected += 1;
            let fac = if en.is_finite() {
                (T::lit(0.9) * en.powf(-T::lit(0.2))).max(T::lit(0.2))
            } else {
                T::lit(0.1)
            };
            h *= fac.min(T::one());
            last_reject = true;
            continue;
        }
        accepted += 1;
        let mut st = st;
        let mut hs = hs;
        let mut d = dense_coeffs(t, hs, &y, &st);
        let mut clipped = false;
        if let Some(th) = first_switch(sys, &y, &st.y_new, &d, t, hs) {
            // end the step on the join so no step straddles it
            hs *= th;
            st = dp_step(sys, t, &y, &k1, hs);
            sol.n_rhs += 6;
            let en_clip = err_norm(sys, &opts.tol, &y, &st.y_new, &st.err);
            if !(en_clip <= T::one()) {
                // the long step's estimate was unreliable across the join
                sol.n_rejected += 1;
                accepted -= 1;
                h = hs.abs() * (T::lit(0.9) * en_clip.powf(-T::lit(0.2))).max(T::lit(0.1)).min(T::one());
                last_reject = true;
                continue;
            }
            d = dense_coeffs(t, hs, &y, &st);
            last = false;
            clipped = true;
        }
        let t_new = if last { t_end } else { t + hs };

        if let Some(g) = event {
            // sample the step at interior points so a brief excursion is not missed
            let mut prev_th = T::zero();
            let mut prev_g = g_prev;
            let mut hit = None;
            for j in 1..=3 {
                let th = T::from_count(j) / T::lit(3.0);
                let yj = if j == 3 { st.y_new } else { d.eval(t + th * hs) };
                let gj = g(&yj);
                if armed && gj >= T::zero() && prev_g < T::zero() {
                    hit = Some((prev_th, th));
                    break;
                }
                if gj < T::zero() {
                    armed = true;
                }
                prev_th = th;
                prev_g = gj;
            }
            if let Some((ta, tb)) = hit {
                let ev = locate_event(sys, g, t, &y, &k1, hs, &d, ta, tb, opts.event_tol, &mut sol.n_rhs);
                sol.hs.push(ev.t - t);
                let stp = dp_step(sys, t, &y, &k1, ev.t - t);
                let dtrunc = dense_coeffs(t, ev.t - t, &y, &stp);
                if opts.keep_dense {
                    sol.dense.push(dtrunc);
                }
                sol.nodes.push((ev.t, ev.y));
                sol.t_end = ev.t;
                sol.y_end = ev.y;
                sol.event = Some(ev);
                return Ok(sol);
            }
            g_prev = prev_g;
        }
        if opts.keep_dense {
            sol.dense.push(d);
        }
        sol.hs.push(hs);
        t = t_new;
        y = st.y_new;
        k1 = st.k[6];
        sol.nodes.push((t, y));
        if last {
            break;
        }
        if clipped {
            last_reject = false;
            continue;
        }
        let mut fac = T::lit(0.9) * en.max(T::lit(1e-10)).powf(-T::lit(0.2));
        fac = fac.min(if last_reject { T::one() } else { T::lit(5.0) }).max(T::lit(0.2));
        h *= fac;
        if let Some(hm) = opts.h_max {
            h = h.min(hm);
        }
        last_reject = false;
    }
    sol.t_end = t;
    sol.y_end = y;
    Ok(sol)
}

#[allow(clippy::too_many_arguments)]
fn locate_event<T, S, const N: usize>(
    sys: &S,
    g: &dyn Fn(&[T; N]) -> T,
    t: T,
    y: &[T; N],
    k1: &[T; N],
    hs: T,
    dense: &DenseStep<T, N>,
    th_a: T,
    th_b: T,
    event_tol: T,
    n_rhs: &mut usize,
) -> EventHit<T, N>
where
    T: Real,
    S: OdeSystem<T, N>,
{
    // Illinois iterations on the exact single-step map over [θa, θb]
    let mut eval = |th: T| -> ([T; N], T) {
        if th == T::zero() {
            return (*y, g(y));
        }
        let st = dp_step(sys, t, y, k1, th * hs);
        *n_rhs += 6;
        let gv = g(&st.y_new);
        (st.y_new, gv)
    };
    let (mut a, mut b) = (th_a, th_b);
    let (mut ya, mut ga) = eval(a);
    let (mut yb, mut gb) = eval(b);
    if !(ga < T::zero() && gb >= T::zero()) {
        // the exact step disagrees in sign with the interpolant; fall back to the interpolant bracket
        let gd = |th: T| g(&dense.eval(t + th * hs));
        ga = gd(a);
        gb = gd(b);
        if !(ga < T::zero() && gb >= T::zero()) {
            let th = if gb.abs() < ga.abs() { b } else { a };
            let (yy, gg) = eval(th);
            return EventHit { t: t + th * hs, y: yy, g: gg };
        }
    }
    let mut side = 0i32;
    for _ in 0..100 {
        let c = (a * gb - b * ga) / (gb - ga);
        let c = if c > a && c < b { c } else { T::lit(0.5) * (a + b) };
        let (yc, gc) = eval(c);
        if gc.abs() <= event_tol || (b - a) <= T::lit(4.0) * T::epsilon() {
            if gc >= T::zero() || gc.abs() <= event_tol {
                return EventHit { t: t + c * hs, y: yc, g: gc };
            }
            return EventHit { t: t + b * hs, y: yb, g: gb };
        }
        if gc < T::zero() {
            a = c;
            ga = gc;
            ya = yc;
            if side == -1 {
                gb *= T::lit(0.5);
            }
            side = -1;
        } else {
            b = c;
            gb = gc;
            yb = yc;
            if side == 1 {
                ga *= T::lit(0.5);
            }
            side = 1;
        }
    }
    let _ = ya;
    EventHit { t: t + b * hs, y: yb, g: gb }
}

/// Re-runs the fixed step sequence `hs` from `(t0, y0)` without error control.
pub fn replay<T, S, const N: usize>(sys: &S, t0: T, y0: [T; N], hs: &[T]) -> [T; N]
where
    T: Real,
    S: OdeSystem<T, N>,
{
    let mut t = t0;
    let mut y = y0;
    let mut k1 = [T::zero(); N];
    sys.rhs(t, &y, &mut k1);
    for &h in hs {
        let st = dp_step(sys, t, &y, &k1, h);
        t += h;
        y = st.y_new;
        k1 = st.k[6];
    }
    y
}
