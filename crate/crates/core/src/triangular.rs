//! The triangular system `u_t + f(u)_x = 0`, `v_t + (g(u) v)_x = 0` with
//! `f(u) = |u|^{p+1}/(p+1)` and `g = h o f'`: an explicit continuous `u`
//! built from packets whose fans have not yet met, characteristics of
//! `c = g(u)`, and the transported component `v`.
//!
//! Packet `n` occupies `[x_n, x_n + 2 Delta_n]` with
//! `Delta_n = 1/(n log^2(n+1))`, `t_n = log(n+1)/log 2 * (T+1)`,
//! `delta_n^p = Delta_n / t_n`, `x_n = 2 sum_{m<n} Delta_m`.
//!
//! Points that must stay distinguishable far below `f64` resolution of
//! their absolute position (the dyadic points `y_n ~ 2^{-n}`) are carried
//! as offsets from the fan edge of their packet, which is itself a
//! characteristic when `h` is the identity.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::flux::ScalarFn;
use crate::numeric::bisect_increasing;
use crate::variation::{p_variation_values, PartialSum, SampledFunction};

#[derive(Clone)]
pub struct TriangularSetup {
    p: f64,
    horizon: f64,
    half: Vec<f64>,
    tn: Vec<f64>,
    deltap: Vec<f64>,
    origin: Vec<f64>,
    h: Option<ScalarFn>,
    dt: f64,
}

impl std::fmt::Debug for TriangularSetup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TriangularSetup")
            .field("p", &self.p)
            .field("horizon", &self.horizon)
            .field("packets", &self.half.len())
            .field("h", &self.h.as_ref().map(|_| "custom").unwrap_or("identity"))
            .field("dt", &self.dt)
            .finish()
    }
}

/// Which fan edge an offset is measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Anchor {
    /// Absolute coordinate.
    Free,
    /// Left edge `x_k + delta_k^p t` of packet `k` (0-based).
    Left(usize),
    /// Right edge `x_k + 2 Delta_k - delta_k^p t`.
    Right(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowPoint {
    pub anchor: Anchor,
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Regime {
    Fan,
    Middle,
}

/// `v0 = -1` on `(2^{-2k}, 2^{-2k+1})`, `+1` on `(2^{-2k-1}, 2^{-2k})`,
/// `+1` for `x > 1/2` or `x < 0` (and on the measure-zero dyadic points).
pub fn alternating_v0(x: f64) -> f64 {
    if !(x > 0.0 && x < 0.5) {
        return 1.0;
    }
    let (mant_zero, m) = dyadic_level(x);
    if mant_zero {
        return 1.0;
    }
    if m % 2 == 0 {
        -1.0
    } else {
        1.0
    }
}

/// For `x` in `[2^{-m}, 2^{-m+1})`: `(x == 2^{-m}, m)`.
fn dyadic_level(x: f64) -> (bool, i64) {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    if exp == 0 {
        // Subnormal: fall back to the logarithm.
        let m = (-x.log2()).ceil() as i64;
        return (x == 2f64.powi(-m as i32), m);
    }
    (frac == 0, -(exp - 1023))
}

/// `y_n = (2^{-n} + 2^{-n+1}) / 2`.
pub fn dyadic_midpoint(n: usize) -> f64 {
    1.5 * 2f64.powi(-(n as i32))
}

impl TriangularSetup {
    /// `count` packets on the horizon `[0, T]`, `h` the identity and the
    /// RK4 step `T / 2^14`.
    pub fn new(p: f64, horizon: f64, count: usize) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(invalid(format!("need p >= 1, got {p}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(invalid(format!("need T > 0, got {horizon}")));
        }
        if count == 0 {
            return Err(invalid("need at least one packet"));
        }
        let mut half = Vec::with_capacity(count);
        let mut tn = Vec::with_capacity(count);
        let mut deltap = Vec::with_capacity(count);
        let mut origin = Vec::with_capacity(count);
        let mut acc = 0.0;
        for n in 1..=count {
            let d = crate::family::half_width(n);
            let t = ((n + 1) as f64).ln() / 2f64.ln() * (horizon + 1.0);
            half.push(d);
            tn.push(t);
            deltap.push(d / t);
            origin.push(2.0 * acc);
            acc += d;
        }
        Ok(TriangularSetup { p, horizon, half, tn, deltap, origin, h: None, dt: horizon / 16384.0 })
    }

    /// Replace the identity coupling by a Lipschitz `h`; characteristics are
    /// then integrated in absolute coordinates.
    pub fn with_h<F: Fn(f64) -> f64 + Send + Sync + 'static>(mut self, h: F) -> Self {
        self.h = Some(std::sync::Arc::new(h));
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(invalid("RK4 step must be positive"));
        }
        self.dt = dt;
        Ok(self)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn s(&self) -> f64 {
        1.0 / self.p
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn count(&self) -> usize {
        self.half.len()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `Delta_n` (1-based `n`).
    pub fn half_width(&self, n: usize) -> f64 {
        self.half[n - 1]
    }

    pub fn interaction_time(&self, n: usize) -> f64 {
        self.tn[n - 1]
    }

    /// `delta_n = (Delta_n / t_n)^{1/p}`.
    pub fn amplitude(&self, n: usize) -> f64 {
        self.deltap[n - 1].powf(1.0 / self.p)
    }

    /// `x_n`.
    pub fn origin(&self, n: usize) -> f64 {
        self.origin[n - 1]
    }

    /// `[0, x_N + 2 Delta_N]`.
    pub fn support(&self) -> (f64, f64) {
        let k = self.count() - 1;
        (0.0, self.origin[k] + 2.0 * self.half[k])
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t >= 0.0 && t <= self.horizon {
            Ok(())
        } else {
            Err(Error::Domain(format!("need 0 <= t <= T = {}, got {t}", self.horizon)))
        }
    }

    /// `f'(w_k(y, t))` for 0-based `k`, relative coordinate `y`.
    fn ratio(&self, k: usize, y: f64, t: f64) -> f64 {
        let d = self.half[k];
        if !(y > 0.0 && y < 2.0 * d) {
            return 0.0;
        }
        let e = self.deltap[k] * t;
        if y < e.min(d) {
            y / t
        } else if y < d {
            (d - y) / (self.tn[k] - t)
        } else if y < 2.0 * d - e {
            -(y - d) / (self.tn[k] - t)
        } else {
            -(2.0 * d - y) / t
        }
    }

    fn u_of_ratio(&self, r: f64) -> f64 {
        r.signum() * r.abs().powf(1.0 / self.p) * (r != 0.0) as u8 as f64
    }

    /// `w_n(y, t)` on the packet's own coordinate `y in [0, 2 Delta_n]`.
    pub fn w_n_eval(&self, n: usize, y: f64, t: f64) -> Result<f64> {
        if n == 0 || n > self.count() {
            return Err(invalid(format!("packet index {n} outside 1..={}", self.count())));
        }
        self.check_time(t)?;
        Ok(self.u_of_ratio(self.ratio(n - 1, y, t)))
    }

    /// 0-based packet containing `x`, if any.
    fn packet_at(&self, x: f64) -> Option<usize> {
        let k = self.origin.partition_point(|&o| o <= x);
        if k == 0 {
            return None;
        }
        let k = k - 1;
        (x < self.origin[k] + 2.0 * self.half[k]).then_some(k)
    }

    /// `f'(u(x, t))`.
    pub fn dflux_u(&self, x: f64, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.packet_at(x).map_or(0.0, |k| self.ratio(k, x - self.origin[k], t)))
    }

    /// `u(x, t) = sum_n w_n(x - x_n, t)`.
    pub fn u_eval(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self.u_of_ratio(self.dflux_u(x, t)?))
    }

    /// `c(x, t) = h(f'(u(x, t)))`.
    pub fn transport_velocity(&self, x: f64, t: f64) -> Result<f64> {
        let r = self.dflux_u(x, t)?;
        Ok(match &self.h {
            None => r,
            Some(h) => h(r),
        })
    }

    /// Largest mismatch between neighbouring branch formulas at every seam
    /// (`0`, `delta^p t`, `Delta`, `2 Delta - delta^p t`, `2 Delta`) of every
    /// packet at time `t > 0`.
    pub fn seam_defects(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        if t == 0.0 {
            return Err(Error::Domain("seams are checked for t > 0".into()));
        }
        let s = 1.0 / self.p;
        let pw = |r: f64| r.signum() * r.abs().powf(s);
        let mut worst = 0.0f64;
        for k in 0..self.count() {
            let (d, tk, e) = (self.half[k], self.tn[k], self.deltap[k] * t);
            let fan_l = |y: f64| pw(y / t);
            let mid = |y: f64| pw((d - y) / (tk - t));
            let fan_r = |y: f64| pw(-(2.0 * d - y) / t);
            let seams = [
                (fan_l(0.0), 0.0),
                (fan_l(e), mid(e)),
                (mid(d), 0.0),
                (mid(2.0 * d - e), fan_r(2.0 * d - e)),
                (fan_r(2.0 * d), 0.0),
            ];
            for (a, b) in seams {
                worst = worst.max((a - b).abs());
            }
        }
        Ok(worst)
    }

    /// `1/t + max_n 1/(t_n - t)`: Lipschitz bound of `f'(u(., t))`.
    pub fn lipschitz_bound(&self, t: f64) -> f64 {
        1.0 / t + self.tn.iter().map(|tn| 1.0 / (tn - t)).fold(0.0, f64::max)
    }

    /// Largest difference quotient of `c(., t)` over a uniform grid of
    /// `samples` points on the support.
    pub fn lipschitz_estimate(&self, t: f64, samples: usize) -> Result<f64> {
        let (lo, hi) = self.support();
        let xs = crate::numeric::linspace(lo, hi, samples.max(2));
        let cs = xs.iter().map(|&x| self.transport_velocity(x, t)).collect::<Result<Vec<_>>>()?;
        Ok(xs
            .windows(2)
            .zip(cs.windows(2))
            .map(|(x, c)| (c[1] - c[0]).abs() / (x[1] - x[0]))
            .fold(0.0, f64::max))
    }

    /// Samples of packet `n` at time `t`: every seam plus `per_branch`
    /// interior points in each branch.
    pub fn packet_sample(&self, n: usize, t: f64, per_branch: usize) -> Result<SampledFunction> {
        self.check_time(t)?;
        let k = n - 1;
        let (d, e) = (self.half[k], self.deltap[k] * t);
        let knots = [0.0, e.min(d), d, (2.0 * d - e).max(d), 2.0 * d];
        let mut xs = Vec::new();
        for w in knots.windows(2) {
            if w[1] <= w[0] {
                continue;
            }
            for i in 0..=per_branch {
                xs.push(w[0] + (w[1] - w[0]) * i as f64 / (per_branch + 1) as f64);
            }
        }
        xs.push(2.0 * d);
        xs.dedup();
        // The peak and trough sit exactly on the fan edges.
        let vs: Vec<f64> = xs
            .iter()
            .map(|&y| {
                if t > 0.0 && y == e && e < d {
                    self.amplitude(n)
                } else if t > 0.0 && y == 2.0 * d - e && e < d {
                    -self.amplitude(n)
                } else {
                    self.u_of_ratio(self.ratio(k, y, t))
                }
            })
            .collect();
        SampledFunction::new(xs, vs)
    }

    /// Per-packet lower bounds `4 (Delta_n / t_n)^{1/(1+p eps)}` on
    /// `TV^{s+eps} u(., t)` over the packet, with running totals, paired with
    /// the measured variation of the sampled packet.
    pub fn packet_tv_bounds(&self, t: f64, eps: f64, count: usize) -> Result<Vec<(PartialSum, f64)>> {
        if !(eps > 0.0) || 1.0 / self.p + eps > 1.0 {
            return Err(invalid(format!("need eps > 0 and s + eps <= 1, got eps = {eps}")));
        }
        let q = 1.0 / (1.0 / self.p + eps);
        let ns: Vec<usize> = (1..=count.min(self.count())).collect();
        let measured = crate::exec::map(&ns, |&n| -> Result<f64> {
            p_variation_values(self.packet_sample(n, t, 16)?.vs(), q)
        });
        let mut acc = 0.0;
        ns.iter()
            .zip(measured)
            .map(|(&n, m)| {
                let bound = 4.0 * self.deltap[n - 1].powf(1.0 / (1.0 + self.p * eps));
                acc += bound;
                Ok((PartialSum { n, bound, cumulative: acc }, m?))
            })
            .collect()
    }

    /// Anchored representation of the absolute point `x` at time `t`.
    pub fn point_at(&self, x: f64, t: f64) -> FlowPoint {
        if self.h.is_some() {
            return FlowPoint { anchor: Anchor::Free, offset: x };
        }
        match self.packet_at(x) {
            None => FlowPoint { anchor: Anchor::Free, offset: x },
            Some(k) => {
                let y = x - self.origin[k];
                let (d, e) = (self.half[k], self.deltap[k] * t);
                if y < d {
                    FlowPoint { anchor: Anchor::Left(k), offset: y - e }
                } else {
                    FlowPoint { anchor: Anchor::Right(k), offset: y - (2.0 * d - e) }
                }
            }
        }
    }

    /// Absolute position of an anchored point at time `t`.
    pub fn absolute(&self, pt: FlowPoint, t: f64) -> f64 {
        match pt.anchor {
            Anchor::Free => pt.offset,
            Anchor::Left(k) => self.origin[k] + self.deltap[k] * t + pt.offset,
            Anchor::Right(k) => self.origin[k] + 2.0 * self.half[k] - self.deltap[k] * t + pt.offset,
        }
    }

    /// Fan side of an anchored offset: negative offsets of a left anchor,
    /// positive offsets of a right anchor.
    fn regime(anchor: Anchor, offset: f64) -> Regime {
        match anchor {
            Anchor::Left(_) if offset < 0.0 => Regime::Fan,
            Anchor::Right(_) if offset > 0.0 => Regime::Fan,
            _ => Regime::Middle,
        }
    }

    /// Relative growth rate of an offset: `1/t` in a fan, `-1/(t_k - t)`
    /// between the fans.
    fn rate(&self, k: usize, regime: Regime, t: f64) -> f64 {
        match regime {
            Regime::Fan => {
                if t > 0.0 {
                    1.0 / t
                } else {
                    0.0
                }
            }
            Regime::Middle => -1.0 / (self.tn[k] - t),
        }
    }

    fn steps(&self, t0: f64, t1: f64) -> (usize, f64) {
        let n = ((t1 - t0) / self.dt).ceil().max(1.0) as usize;
        (n, (t1 - t0) / n as f64)
    }

    /// RK4 factor of the linear offset equation `xi' = rate(t) xi` from `t0`
    /// to `t1`.
    fn unit_multiplier(&self, k: usize, regime: Regime, t0: f64, t1: f64) -> f64 {
        let (n, h) = self.steps(t0, t1);
        let mut m = 1.0;
        for i in 0..n {
            let t = t0 + h * i as f64;
            let k1 = self.rate(k, regime, t);
            let k2 = self.rate(k, regime, t + 0.5 * h) * (1.0 + 0.5 * h * k1);
            let k3 = self.rate(k, regime, t + 0.5 * h) * (1.0 + 0.5 * h * k2);
            let k4 = self.rate(k, regime, t + h) * (1.0 + h * k3);
            m *= 1.0 + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        m
    }

    fn rk4_absolute(&self, x0: f64, t0: f64, t1: f64) -> Result<(f64, f64)> {
        let (n, h) = self.steps(t0, t1);
        let eps = 1e-7;
        let mut x = x0;
        let mut xp = x0 + eps;
        for i in 0..n {
            let t = t0 + h * i as f64;
            x = rk4_step(|x, t| self.transport_velocity(x, t), x, t, h)?;
            xp = rk4_step(|x, t| self.transport_velocity(x, t), xp, t, h)?;
        }
        Ok((x, (xp - x) / eps))
    }

    /// Flow a point from `t0` to `t1` by RK4 with the setup's step; returns
    /// the moved point and the Jacobian `dX/dx0`.
    pub fn trace(&self, pt: FlowPoint, t0: f64, t1: f64) -> Result<(FlowPoint, f64)> {
        self.check_time(t0)?;
        self.check_time(t1)?;
        if t1 < t0 {
            return Err(invalid("tracing runs forward in time"));
        }
        if t1 == t0 {
            return Ok((pt, 1.0));
        }
        match pt.anchor {
            Anchor::Free if self.h.is_some() => {
                let (x, j) = self.rk4_absolute(pt.offset, t0, t1)?;
                Ok((FlowPoint { anchor: Anchor::Free, offset: x }, j))
            }
            Anchor::Free => Ok((pt, 1.0)),
            Anchor::Left(k) | Anchor::Right(k) => {
                let m = self.unit_multiplier(k, Self::regime(pt.anchor, pt.offset), t0, t1);
                Ok((FlowPoint { anchor: pt.anchor, offset: pt.offset * m }, m))
            }
        }
    }

    /// `X(t, x0)` from time zero, in absolute coordinates.
    pub fn characteristic_flow(&self, x0: f64, t: f64) -> Result<f64> {
        let (pt, _) = self.trace(self.point_at(x0, 0.0), 0.0, t)?;
        Ok(self.absolute(pt, t))
    }

    /// Flow many points from time zero; if the images are not in the same
    /// order as the inputs the step is halved and the batch retried.
    pub fn flow_batch(&self, x0s: &[f64], t: f64) -> Result<Vec<f64>> {
        let mut setup = self.clone();
        for _ in 0..8 {
            let xs = crate::exec::map(x0s, |&x| setup.characteristic_flow(x, t));
            let xs = xs.into_iter().collect::<Result<Vec<_>>>()?;
            let mut idx: Vec<usize> = (0..x0s.len()).collect();
            idx.sort_by(|&a, &b| x0s[a].total_cmp(&x0s[b]));
            if idx.windows(2).all(|w| x0s[w[0]] == x0s[w[1]] || xs[w[0]] < xs[w[1]]) {
                return Ok(xs);
            }
            setup.dt *= 0.5;
        }
        Err(Error::Numerical("characteristic order not preserved after step halving".into()))
    }

    /// `v(x, t)`: trace the characteristic through `pt` back to time zero by
    /// forward shooting and bisection on its starting label, then read `v0`.
    /// With `jacobian` the conservative dilution `1 / (dX/dx0)` is applied.
    pub fn v_eval_point<V: Fn(f64) -> f64>(&self, v0: V, pt: FlowPoint, t: f64, jacobian: bool) -> Result<f64> {
        self.check_time(t)?;
        if t == 0.0 {
            return Ok(v0(self.absolute(pt, 0.0)));
        }
        let (x0, j) = match pt.anchor {
            Anchor::Free if self.h.is_none() => (pt.offset, 1.0),
            Anchor::Free => {
                let (lo, hi) = self.support();
                let span = (hi - lo) + self.horizon * self.speed_cap();
                let g = |x0: f64| self.rk4_absolute(x0, 0.0, t).map_or(f64::NAN, |(x, _)| x - pt.offset);
                let x0 = bisect_increasing(g, lo - span, hi + span, 1e-14)
                    .map_err(|e| Error::Range(format!("backward trace bracket failed: {e}")))?;
                (x0, self.rk4_absolute(x0, 0.0, t)?.1)
            }
            Anchor::Left(k) | Anchor::Right(k) => {
                // Offsets at time zero: [0, Delta] on the left, [-Delta, 0] on the right.
                let d = self.half[k];
                let (lo, hi) = if let Anchor::Left(_) = pt.anchor { (0.0, d) } else { (-d, 0.0) };
                let regime = Self::regime(pt.anchor, pt.offset);
                if regime == Regime::Fan {
                    // Every fan point traces back to the fan centre.
                    let edge = if let Anchor::Left(_) = pt.anchor { 0.0 } else { 2.0 * d };
                    (self.origin[k] + edge, 1.0)
                } else {
                    let m = self.unit_multiplier(k, Regime::Middle, 0.0, t);
                    let xi0 = bisect_increasing(|xi: f64| xi * m - pt.offset, lo, hi, 0.0)
                        .map_err(|e| Error::Range(format!("backward trace bracket failed: {e}")))?;
                    let start = FlowPoint { anchor: pt.anchor, offset: xi0 };
                    (self.absolute(start, 0.0), m)
                }
            }
        };
        let v = v0(x0);
        Ok(if jacobian { v / j } else { v })
    }

    pub fn v_eval<V: Fn(f64) -> f64>(&self, v0: V, x: f64, t: f64) -> Result<f64> {
        self.v_eval_point(v0, self.point_at(x, t), t, false)
    }

    fn speed_cap(&self) -> f64 {
        let top = self.tn.iter().zip(&self.half).map(|(tn, d)| d / tn).fold(0.0, f64::max);
        let top = top.max(1.0 / self.horizon.max(1e-300));
        match &self.h {
            None => top,
            Some(h) => (0..=64)
                .map(|i| h(-top + 2.0 * top * i as f64 / 64.0).abs())
                .fold(0.0, f64::max),
        }
    }

    /// Transported dyadic midpoints `z_n = X(t, y_n)` for `n = 1..=count`.
    pub fn transported_midpoints(&self, t: f64, count: usize) -> Result<Vec<FlowPoint>> {
        let ns: Vec<usize> = (1..=count).collect();
        crate::exec::map(&ns, |&n| {
            let pt = self.point_at(dyadic_midpoint(n), 0.0);
            Ok(self.trace(pt, 0.0, t)?.0)
        })
        .into_iter()
        .collect()
    }

    /// `sum_{n<=N} |v(z_n, t) - v(z_{n+1}, t)|^{1/s'}` for the alternating
    /// data, with `v` recovered by backward tracing.
    pub fn v_divergence_sums(&self, t: f64, s_prime: f64, count: usize, jacobian: bool) -> Result<f64> {
        if !(s_prime > 0.0 && s_prime <= 1.0) {
            return Err(invalid(format!("need 0 < s' <= 1, got {s_prime}")));
        }
        if count == 0 {
            return Ok(0.0);
        }
        let pts = self.transported_midpoints(t, count + 1)?;
        let vals = crate::exec::map(&pts, |pt| self.v_eval_point(alternating_v0, *pt, t, jacobian));
        let vals = vals.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(vals.windows(2).map(|w| (w[0] - w[1]).abs().powf(1.0 / s_prime)).sum())
    }
}

fn rk4_step<C: Fn(f64, f64) -> Result<f64>>(c: C, x: f64, t: f64, h: f64) -> Result<f64> {
    let k1 = c(x, t)?;
    let k2 = c(x + 0.5 * h * k1, t + 0.5 * h)?;
    let k3 = c(x + 0.5 * h * k2, t + 0.5 * h)?;
    let k4 = c(x + h * k3, t + h)?;
    Ok(x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> TriangularSetup {
        TriangularSetup::new(2.0, 1.0, 64).unwrap()
    }

    #[test]
    fn packet_constants() {
        let s = setup();
        for n in 1..=64 {
            let tn = s.interaction_time(n);
            assert!(tn > s.horizon());
            let dp = s.amplitude(n).powi(2);
            assert!((dp * tn / s.half_width(n) - 1.0).abs() < 1e-14);
        }
        assert_eq!(s.origin(1), 0.0);
        for n in 1..64 {
            assert!((s.origin(n) + 2.0 * s.half_width(n) - s.origin(n + 1)).abs() < 1e-14);
        }
    }

    #[test]
    fn w_examples() {
        let s = setup();
        // Packet 1 has delta^2 = Delta_1 / 2 > 0.04.
        assert!((s.w_n_eval(1, 0.04, 1.0).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(s.w_n_eval(3, s.half_width(3), 0.5).unwrap(), 0.0);
        for n in [1, 5, 40] {
            let e = s.amplitude(n).powi(2) * 0.7;
            let fan = (e / 0.7f64).sqrt();
            let mid = ((s.half_width(n) - e) / (s.interaction_time(n) - 0.7)).sqrt();
            assert!((fan - mid).abs() < 1e-14);
        }
        assert!(s.w_n_eval(0, 0.1, 0.5).is_err());
        assert!(s.w_n_eval(1, 0.1, 1.5).is_err());
    }

    #[test]
    fn velocity_examples() {
        let s = setup();
        assert_eq!(s.transport_velocity(-1.0, 0.5).unwrap(), 0.0);
        assert_eq!(s.transport_velocity(100.0, 0.5).unwrap(), 0.0);
        assert!((s.transport_velocity(0.3, 1.0).unwrap() - 0.3).abs() < 1e-15);
        let est = s.lipschitz_estimate(1.0, 20_000).unwrap();
        assert!(est <= s.lipschitz_bound(1.0) * (1.0 + 1e-9), "{est}");
    }

    #[test]
    fn seams_are_continuous() {
        let s = setup();
        for &t in &[0.01, 0.25, 1.0] {
            assert!(s.seam_defects(t).unwrap() < 1e-8);
        }
    }

    #[test]
    fn alternating_data() {
        assert_eq!(alternating_v0(0.75), 1.0);
        assert_eq!(alternating_v0(-3.0), 1.0);
        assert_eq!(alternating_v0(0.3), -1.0);
        assert_eq!(alternating_v0(0.2), 1.0);
        assert_eq!(alternating_v0(0.1), -1.0);
        for n in 1..70 {
            let want = if n % 2 == 0 { -1.0 } else { 1.0 };
            assert_eq!(alternating_v0(dyadic_midpoint(n)), want, "n={n}");
        }
    }

    #[test]
    fn flow_matches_closed_form() {
        let s = setup();
        // Between the fans X(t) = x0 + (Delta - x0) t / t_1.
        for &x0 in &[0.75, 0.1, 1e-10] {
            let x = s.characteristic_flow(x0, 0.8).unwrap();
            let want = x0 + (s.half_width(1) - x0) * 0.8 / s.interaction_time(1);
            assert!((x - want).abs() < 1e-13, "{x} vs {want}");
        }
        assert_eq!(s.characteristic_flow(-2.0, 1.0).unwrap(), -2.0);
        // Inside a fan from time 0.5: X = x * t / 0.5.
        let pt = s.point_at(0.2, 0.5);
        let (moved, _) = s.trace(pt, 0.5, 1.0).unwrap();
        assert!((s.absolute(moved, 1.0) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn tiny_offsets_survive() {
        let s = setup();
        let pts = s.transported_midpoints(1.0, 65).unwrap();
        for w in pts.windows(2) {
            assert!(w[0].offset > w[1].offset && w[1].offset > 0.0);
        }
    }

    #[test]
    fn divergence_sum_examples() {
        let s = setup();
        assert_eq!(s.v_divergence_sums(0.5, 1.0, 10, false).unwrap(), 20.0);
        assert_eq!(s.v_divergence_sums(0.5, 0.5, 10, false).unwrap(), 40.0);
        assert_eq!(s.v_divergence_sums(0.5, 0.5, 0, false).unwrap(), 0.0);
    }

    #[test]
    fn custom_h_uses_absolute_tracing() {
        let s = TriangularSetup::new(2.0, 1.0, 8).unwrap().with_h(|y| 0.5 * y).with_dt(1.0 / 1024.0).unwrap();
        let x = s.characteristic_flow(0.75, 1.0).unwrap();
        assert!(x > 0.75);
        let v = s.v_eval(alternating_v0, x, 1.0).unwrap();
        assert_eq!(v, 1.0);
    }
}
