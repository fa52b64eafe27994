//! Exact entropy-solution structures: Riemann shocks, centered fans,
//! antisymmetric packets and planar lifts, all represented analytically.

use crate::error::{invalid, Error, Result};
use crate::psi::PsiContext;
use crate::variation::SampledFunction;

/// Region descriptor of a time-`t` profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    /// Already scaled by `e^{B(t)}`.
    Constant(f64),
    /// `Psi(x - center, t) e^{B(t)}`.
    Fan { center: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub left: f64,
    pub right: f64,
    pub region: Region,
}

impl Segment {
    pub fn constant(left: f64, right: f64, value: f64) -> Self {
        Segment { left, right, region: Region::Constant(value) }
    }

    pub fn fan(left: f64, right: f64, center: f64) -> Self {
        Segment { left, right, region: Region::Fan { center } }
    }
}

/// Exact solution at a fixed time: ordered, non-overlapping segments with
/// the value zero in every gap between them.
#[derive(Debug, Clone)]
pub struct PiecewiseProfile<'a> {
    ctx: &'a PsiContext,
    time: f64,
    scale: f64,
    segments: Vec<Segment>,
}

impl<'a> PiecewiseProfile<'a> {
    pub fn new(ctx: &'a PsiContext, time: f64, segments: Vec<Segment>) -> Result<Self> {
        if !(time > 0.0) {
            return Err(invalid(format!("profiles need t > 0, got {time}")));
        }
        for s in &segments {
            if !(s.left <= s.right) {
                return Err(invalid(format!("segment [{}, {}] is reversed", s.left, s.right)));
            }
        }
        if segments.windows(2).any(|w| w[1].left < w[0].right) {
            return Err(invalid("profile segments overlap or are out of order"));
        }
        Ok(PiecewiseProfile { ctx, time, scale: ctx.amplification(time), segments })
    }

    pub fn empty(ctx: &'a PsiContext, time: f64) -> Result<Self> {
        Self::new(ctx, time, Vec::new())
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn context(&self) -> &'a PsiContext {
        self.ctx
    }

    /// Support hull, `None` for the zero profile.
    pub fn support(&self) -> Option<(f64, f64)> {
        Some((self.segments.first()?.left, self.segments.last()?.right))
    }

    fn region_value(&self, region: Region, x: f64) -> Result<f64> {
        match region {
            Region::Constant(v) => Ok(v),
            Region::Fan { center } => Ok(self.ctx.psi(x - center, self.time)? * self.scale),
        }
    }

    /// Value at `x`, right-continuous at interior breakpoints.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let k = self.segments.partition_point(|s| s.left <= x);
        if k == 0 {
            return Ok(0.0);
        }
        let s = self.segments[k - 1];
        if x < s.right || (x == s.right && self.segments.get(k).is_none_or(|n| n.left > x)) {
            self.region_value(s.region, x)
        } else {
            Ok(0.0)
        }
    }

    /// `u(x-)`.
    pub fn left_limit(&self, x: f64) -> Result<f64> {
        let k = self.segments.partition_point(|s| s.left < x);
        if k == 0 {
            return Ok(0.0);
        }
        let s = self.segments[k - 1];
        if x <= s.right {
            self.region_value(s.region, x)
        } else {
            Ok(0.0)
        }
    }

    /// `u(x+)`.
    pub fn right_limit(&self, x: f64) -> Result<f64> {
        let k = self.segments.partition_point(|s| s.left <= x);
        if k == 0 {
            return Ok(0.0);
        }
        let s = self.segments[k - 1];
        if x < s.right {
            self.region_value(s.region, x)
        } else {
            match self.segments.get(k) {
                Some(n) if n.left == x => self.region_value(n.region, x),
                _ => Ok(0.0),
            }
        }
    }

    /// All segment endpoints, ascending, without duplicates.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.segments.iter().flat_map(|s| [s.left, s.right]).collect();
        out.dedup();
        out
    }

    /// Breakpoints where the two one-sided limits differ by more than `tol`,
    /// with `(x, u(x-), u(x+))`.
    pub fn jumps(&self, tol: f64) -> Result<Vec<(f64, f64, f64)>> {
        let mut out = Vec::new();
        for x in self.breakpoints() {
            let (l, r) = (self.left_limit(x)?, self.right_limit(x)?);
            if (l - r).abs() > tol {
                out.push((x, l, r));
            }
        }
        Ok(out)
    }

    /// Exact `int_a^b u(x, t) dx`.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        let mut acc = 0.0;
        for s in &self.segments {
            let lo = s.left.max(a);
            let hi = s.right.min(b);
            if hi <= lo {
                continue;
            }
            acc += match s.region {
                Region::Constant(v) => v * (hi - lo),
                Region::Fan { center } => {
                    self.scale
                        * (self.ctx.psi_integral(hi - center, self.time)?
                            - self.ctx.psi_integral(lo - center, self.time)?)
                }
            };
        }
        Ok(acc)
    }

    /// Exact cell averages on a uniform mesh of `[lo, hi]`.
    pub fn cell_averages(&self, lo: f64, hi: f64, cells: usize) -> Result<Vec<f64>> {
        let h = (hi - lo) / cells as f64;
        (0..cells)
            .map(|i| {
                let a = lo + h * i as f64;
                Ok(self.integral(a, a + h)? / h)
            })
            .collect()
    }

    /// Sample for variation computations: every breakpoint as a left and a
    /// right limit (the right limit placed one ulp to the right), plus
    /// `fan_points` uniform interior points in each fan, plus one zero in
    /// each gap between segments.
    pub fn sample(&self, fan_points: usize) -> Result<SampledFunction> {
        let mut xs: Vec<f64> = Vec::new();
        let mut vs: Vec<f64> = Vec::new();
        let push = |x: f64, v: f64, xs: &mut Vec<f64>, vs: &mut Vec<f64>| {
            let x = match xs.last() {
                Some(&last) if x <= last => last.next_up(),
                _ => x,
            };
            xs.push(x);
            vs.push(v);
        };
        for (k, s) in self.segments.iter().enumerate() {
            if k > 0 {
                let prev = self.segments[k - 1];
                if s.left > prev.right {
                    push(0.5 * (prev.right + s.left), 0.0, &mut xs, &mut vs);
                }
            }
            push(s.left, self.region_value(s.region, s.left)?, &mut xs, &mut vs);
            if let Region::Fan { .. } = s.region {
                let h = (s.right - s.left) / (fan_points + 1) as f64;
                for i in 1..=fan_points {
                    let x = s.left + h * i as f64;
                    push(x, self.region_value(s.region, x)?, &mut xs, &mut vs);
                }
            }
            if s.right > s.left {
                push(s.right, self.region_value(s.region, s.right)?, &mut xs, &mut vs);
            }
        }
        SampledFunction::new(xs, vs)
    }
}

/// Entropy shock of a Riemann problem `w_minus > w_plus` at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shock {
    pub position: f64,
    pub left: f64,
    pub right: f64,
}

/// Shock curve `x0 + lambda(t)` with
/// `lambda = (w+ - w-)^{-1} int_0^t [f(w+ e^B) - f(w- e^B)] e^{-B}`.
pub fn riemann_shock(ctx: &PsiContext, w_minus: f64, w_plus: f64, x0: f64, t: f64) -> Result<Shock> {
    if !(w_minus > w_plus) {
        return Err(invalid(format!(
            "shock needs w- > w+ (got {w_minus} <= {w_plus}); use a fan for rarefactions"
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    let lam = (ctx.scaled_flux_integral(w_plus, t)? - ctx.scaled_flux_integral(w_minus, t)?) / (w_plus - w_minus);
    let e = ctx.amplification(t);
    Ok(Shock { position: x0 + lam, left: w_minus * e, right: w_plus * e })
}

/// Fan edges for the steps `0 | delta` at `x_left` and `-delta | 0` at
/// `x_right`: `Psi(zeta_L - x_left, t) = delta`, `Psi(zeta_R - x_right, t) = -delta`.
/// Infinite `t` gives the limiting edges for power-law fluxes.
pub fn fan_edges(ctx: &PsiContext, x_left: f64, x_right: f64, delta: f64, t: f64) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("fan edges need t > 0, got {t}")));
    }
    Ok((x_left + ctx.drift(delta, t)?, x_right + ctx.drift(-delta, t)?))
}

/// Antisymmetric block `delta` on `(x_n - dx, x_n)`, `-delta` on
/// `(x_n, x_n + dx)` for a power-law flux.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Packet {
    pub center: f64,
    pub half_width: f64,
    pub amplitude: f64,
    /// First meeting time of the two fan edges; infinite if they never meet.
    pub interaction_time: f64,
}

impl Packet {
    pub fn new(ctx: &PsiContext, center: f64, half_width: f64, amplitude: f64) -> Result<Self> {
        let p = ctx
            .flux
            .power()
            .ok_or_else(|| invalid("packet structures need a power-law flux"))?;
        if !(half_width > 0.0) || !(amplitude > 0.0) {
            return Err(invalid("packet needs positive half-width and amplitude"));
        }
        let ratio = half_width / amplitude.powf(p);
        let interaction_time = ctx.source.gamma_inverse(p, ratio)?;
        Ok(Packet { center, half_width, amplitude, interaction_time })
    }

    pub fn left(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn right(&self) -> f64 {
        self.center + self.half_width
    }

    pub fn fan_edges(&self, ctx: &PsiContext, t: f64) -> Result<(f64, f64)> {
        fan_edges(ctx, self.left(), self.right(), self.amplitude, t)
    }

    /// Region list at time `t`; the post-interaction form is used from
    /// `t = t_n` on.
    pub fn segments(&self, ctx: &PsiContext, t: f64) -> Result<Vec<Segment>> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("packet structure needs t > 0, got {t}")));
        }
        let (xl, xn, xr) = (self.left(), self.center, self.right());
        if t < self.interaction_time {
            let (zl, zr) = self.fan_edges(ctx, t)?;
            let (zl, zr) = (zl.min(xn), zr.max(xn));
            let top = self.amplitude * ctx.amplification(t);
            Ok(vec![
                Segment::fan(xl, zl, xl),
                Segment::constant(zl, xn, top),
                Segment::constant(xn, zr, -top),
                Segment::fan(zr, xr, xr),
            ])
        } else {
            Ok(vec![Segment::fan(xl, xn, xl), Segment::fan(xn, xr, xr)])
        }
    }

    pub fn profile<'a>(&self, ctx: &'a PsiContext, t: f64) -> Result<PiecewiseProfile<'a>> {
        PiecewiseProfile::new(ctx, t, self.segments(ctx, t)?)
    }

    /// Height of the central jump at time `t`.
    pub fn central_jump(&self, ctx: &PsiContext, t: f64) -> Result<f64> {
        let e = ctx.amplification(t);
        if t < self.interaction_time {
            Ok(2.0 * self.amplitude * e)
        } else {
            Ok(2.0 * ctx.psi(self.half_width, t)? * e)
        }
    }
}

/// `u^n(x, t)` for a single packet.
pub fn packet_solution(ctx: &PsiContext, packet: &Packet, x: f64, t: f64) -> Result<f64> {
    if x < packet.left() || x > packet.right() {
        return Ok(0.0);
    }
    packet.profile(ctx, t)?.eval(x)
}

/// Planar wave `U(X, t) = U_bar + u(xi . X, t)` for a unit direction `xi`.
pub fn planar_lift<F>(u_eval: F, xi: &[f64], u_bar: f64, point: &[f64], t: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    if xi.len() != point.len() || xi.is_empty() {
        return Err(invalid("direction and point must share a positive dimension"));
    }
    let norm = xi.iter().map(|c| c * c).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("direction must be a unit vector, |xi| = {norm}")));
    }
    let s: f64 = xi.iter().zip(point).map(|(a, b)| a * b).sum();
    Ok(u_bar + u_eval(s, t)?)
}
