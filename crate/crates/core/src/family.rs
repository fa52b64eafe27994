//! The infinite counterexample families, truncated to finitely many cells:
//! packets of power-law data with `Delta x_n / delta_n^p = log(n + 1)`, and
//! single-shock cells `[A_n, B_n]` for fluxes with a decay condition.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::exact::{Packet, PiecewiseProfile, Segment};
use crate::numeric::bisect_increasing;
use crate::psi::PsiContext;
use crate::variation::{accumulate, p_variation, p_variation_values, PartialSum, VariationReport};

/// `1 / (n log^2(n + 1))`.
pub fn half_width(n: usize) -> f64 {
    let l = ((n + 1) as f64).ln();
    1.0 / (n as f64 * l * l)
}

/// Centers `x_n = 4 sum_{k<n} Delta_k + 2 Delta_n` for `n = 1..=count`.
pub fn centers(count: usize) -> Vec<f64> {
    let mut acc = 0.0;
    (1..=count)
        .map(|n| {
            let d = half_width(n);
            let x = 4.0 * acc + 2.0 * d;
            acc += d;
            x
        })
        .collect()
}

/// Power-law packet family, truncated to `n = 1..=N`.
#[derive(Debug, Clone)]
pub struct PowerLawFamily {
    ctx: PsiContext,
    p: f64,
    packets: Vec<Packet>,
}

impl PowerLawFamily {
    pub fn new(ctx: PsiContext, count: usize) -> Result<Self> {
        let p = ctx
            .flux
            .power()
            .ok_or_else(|| invalid("the power-law family needs a power-law flux"))?;
        if !(p > 1.0) {
            return Err(invalid(format!("the power-law family needs p > 1, got {p}")));
        }
        let packets = centers(count)
            .into_iter()
            .enumerate()
            .map(|(i, x)| {
                let n = i + 1;
                let l = ((n + 1) as f64).ln();
                let delta = (n as f64 * l * l * l).powf(-1.0 / p);
                Packet::new(&ctx, x, half_width(n), delta)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PowerLawFamily { ctx, p, packets })
    }

    pub fn context(&self) -> &PsiContext {
        &self.ctx
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Packet `n` sits at index `n - 1`.
    pub fn packets(&self) -> &[Packet] {
        &self.packets
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        Some((self.packets.first()?.left(), self.packets.last()?.right()))
    }

    pub fn profile(&self, t: f64) -> Result<PiecewiseProfile<'_>> {
        let mut segs = Vec::with_capacity(4 * self.packets.len());
        for pk in &self.packets {
            segs.extend(pk.segments(&self.ctx, t)?);
        }
        PiecewiseProfile::new(&self.ctx, t, segs)
    }

    /// Per-packet lower bounds on the `TV^s` contribution: the central jump
    /// to the power `1/s`, with running totals.
    pub fn tvs_partial_sums(&self, t: f64, s: f64, count: usize) -> Result<Vec<PartialSum>> {
        check_s(s)?;
        let terms = self
            .packets
            .iter()
            .take(count)
            .enumerate()
            .map(|(i, pk)| Ok((i + 1, pk.central_jump(&self.ctx, t)?.powf(1.0 / s))))
            .collect::<Result<Vec<_>>>()?;
        Ok(accumulate(terms))
    }
}

fn check_s(s: f64) -> Result<()> {
    if s > 0.0 && s <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("need 0 < s <= 1, got {s}")))
    }
}

/// How the cell states were found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Alternating,
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellStates {
    pub a: f64,
    pub b: f64,
    pub method: SolveMethod,
    pub iterations: usize,
}

/// The functionals `G`, `F+`, `F-` at a fixed time `t0`.
#[derive(Debug, Clone, Copy)]
pub struct CellSolver<'a> {
    ctx: &'a PsiContext,
    t0: f64,
    /// Half-width of the state window `(-r, r)`.
    reach: f64,
}

const ALTERNATING_MAX: usize = 200;
const STEP_TOL: f64 = 1e-13;
const RESIDUAL_TOL: f64 = 1e-10;

impl<'a> CellSolver<'a> {
    pub fn new(ctx: &'a PsiContext, t0: f64) -> Result<Self> {
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(invalid(format!("t0 must be positive and finite, got {t0}")));
        }
        let decay = ctx
            .flux
            .decay()
            .ok_or_else(|| invalid("single-shock cells need flux decay metadata"))?;
        let reach = decay.r.min(ctx.flux.bound() * (-ctx.source.max_beta(t0)).exp());
        Ok(CellSolver { ctx, t0, reach })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// `G(a) = int_0^{t0} [a f'(a e^B) - f(a e^B) e^{-B}]`.
    pub fn g(&self, a: f64) -> Result<f64> {
        Ok(a * self.ctx.drift(a, self.t0)? - self.ctx.scaled_flux_integral(a, self.t0)?)
    }

    /// `F+(a) = int_0^{t0} f'(a e^B)`.
    pub fn f_plus(&self, a: f64) -> Result<f64> {
        self.ctx.drift(a, self.t0)
    }

    /// `F-(b) = -int_0^{t0} f'(b e^B)`.
    pub fn f_minus(&self, b: f64) -> Result<f64> {
        Ok(-self.ctx.drift(b, self.t0)?)
    }

    fn solve_inc<F: Fn(f64) -> Result<f64>>(&self, f: F, target: f64, lo: f64, hi: f64) -> Result<f64> {
        let err = std::cell::Cell::new(None);
        let g = |x: f64| match f(x) {
            Ok(v) => v - target,
            Err(e) => {
                err.set(Some(e));
                f64::NAN
            }
        };
        let r = bisect_increasing(g, lo, hi, 0.0);
        match err.take() {
            Some(e) => Err(e),
            None => r,
        }
    }

    /// `a >= 0` with `F+(a) = target`.
    fn f_plus_inverse(&self, target: f64, cap: f64) -> Result<f64> {
        self.solve_inc(|a| self.f_plus(a), target, 0.0, cap)
    }

    /// `b <= 0` with `F-(b) = target`.
    fn f_minus_inverse(&self, target: f64, cap: f64) -> Result<f64> {
        self.solve_inc(|b| Ok(-self.f_minus(b)?), -target, -cap, 0.0)
    }

    /// `a >= 0` with `G(a) = level`.
    fn g_inverse_pos(&self, level: f64, cap: f64) -> Result<f64> {
        self.solve_inc(|a| self.g(a), level, 0.0, cap)
    }

    /// `b <= 0` with `G(b) = level`.
    fn g_inverse_neg(&self, level: f64, cap: f64) -> Result<f64> {
        self.solve_inc(|b| Ok(-self.g(b)?), -level, -cap, 0.0)
    }

    /// A matched pair `G(a0) = G(b0)` inside the state window.
    pub fn anchor(&self) -> Result<(f64, f64)> {
        let edge = self.reach * (1.0 - 1e-9);
        let g_edge = self.g(-edge)?;
        let mut a0 = 0.5 * edge;
        for _ in 0..200 {
            let ga = self.g(a0)?;
            if ga <= g_edge {
                return Ok((a0, self.g_inverse_neg(ga, edge)?));
            }
            a0 *= 0.5;
        }
        Err(Error::NonConvergence { what: "anchor pair for G".into(), iterations: 200 })
    }

    /// `min{F+(a0), F-(b0)}`: the largest admissible cell length.
    pub fn max_length(&self) -> Result<f64> {
        let (a0, b0) = self.anchor()?;
        Ok(self.f_plus(a0)?.min(self.f_minus(b0)?))
    }

    /// States with `G(a) = G(b)` and `F+(a) + F-(b) = B - A`.
    ///
    /// Runs the alternating scheme first; when it cycles (it does for
    /// even fluxes) the reduced monotone equation in `a` is bisected.
    pub fn solve(&self, left: f64, right: f64) -> Result<CellStates> {
        let len = right - left;
        if !(len > 0.0) {
            return Err(invalid(format!("cell [{left}, {right}] is empty")));
        }
        let (a0, b0) = self.anchor()?;
        let limit = self.f_plus(a0)?.min(self.f_minus(b0)?);
        if len > limit {
            return Err(invalid(format!(
                "cell length {len} exceeds min(F+(a0), F-(b0)) = {limit}"
            )));
        }
        let a_bar = self.f_plus_inverse(len, a0)?;
        let b_bar = self.f_minus_inverse(len, -b0)?;
        let ga_bar = self.g(a_bar)?;
        let gb_bar = self.g(b_bar)?;
        if let Some(st) = self.alternating(len, a_bar, b_bar, ga_bar, gb_bar)? {
            return Ok(st);
        }
        // Reduced equation: Phi(a) = F+(a) + F-(b(a)) - len, b(a) = G^{-1}_-(G(a)).
        let a_hi = if ga_bar <= gb_bar { a_bar } else { self.g_inverse_pos(gb_bar, a_bar)? };
        let b_of = |a: f64| self.g_inverse_neg(self.g(a)?, -b_bar);
        let a = self.solve_inc(|a| Ok(self.f_plus(a)? + self.f_minus(b_of(a)?)?), len, 0.0, a_hi)?;
        let b = b_of(a)?;
        let st = CellStates { a, b, method: SolveMethod::Reduced, iterations: 0 };
        self.check(st, len)
    }

    fn alternating(&self, len: f64, a_bar: f64, b_bar: f64, ga_bar: f64, gb_bar: f64) -> Result<Option<CellStates>> {
        // The scheme as written assumes G(a_bar) <= G(b_bar); mirror roles otherwise.
        let pos_first = ga_bar <= gb_bar;
        let (mut a, mut b) = if pos_first { (a_bar, 0.0) } else { (0.0, b_bar) };
        for k in 1..=ALTERNATING_MAX {
            let (na, nb) = if pos_first {
                let nb = self.g_inverse_neg(self.g(a)?, -b_bar)?;
                let rest = (len - self.f_minus(nb)?).max(0.0);
                (self.f_plus_inverse(rest, a_bar)?, nb)
            } else {
                let na = self.g_inverse_pos(self.g(b)?, a_bar)?;
                let rest = (len - self.f_plus(na)?).max(0.0);
                (na, self.f_minus_inverse(rest, -b_bar)?)
            };
            let moved = (na - a).abs().max((nb - b).abs());
            a = na;
            b = nb;
            if moved < STEP_TOL {
                let st = CellStates { a, b, method: SolveMethod::Alternating, iterations: k };
                return Ok(self.check(st, len).ok());
            }
        }
        Ok(None)
    }

    fn check(&self, st: CellStates, len: f64) -> Result<CellStates> {
        let (rg, rf) = self.residuals(st.a, st.b, len)?;
        if rg < RESIDUAL_TOL && rf < RESIDUAL_TOL {
            Ok(st)
        } else {
            Err(Error::NonConvergence {
                what: format!("cell states residuals {rg:e}, {rf:e}"),
                iterations: st.iterations,
            })
        }
    }

    /// `(|G(a) - G(b)|, |F+(a) + F-(b) - len|)`.
    pub fn residuals(&self, a: f64, b: f64, len: f64) -> Result<(f64, f64)> {
        Ok((
            (self.g(a)? - self.g(b)?).abs(),
            (self.f_plus(a)? + self.f_minus(b)? - len).abs(),
        ))
    }

    /// `int_0^t [f(a e^B) - f(b e^B)] e^{-B} / (a - b)`: shock displacement.
    pub fn shock_drift(&self, a: f64, b: f64, t: f64) -> Result<f64> {
        if a == b {
            return Err(invalid("degenerate cell: a = b"));
        }
        Ok((self.ctx.scaled_flux_integral(a, t)? - self.ctx.scaled_flux_integral(b, t)?) / (a - b))
    }

    /// `tau = A + F+(a) - shock_drift(a, b, t0)`.
    pub fn tau(&self, left: f64, a: f64, b: f64) -> Result<f64> {
        Ok(left + self.f_plus(a)? - self.shock_drift(a, b, self.t0)?)
    }

    /// `C int_0^{t} e^{qB}`.
    pub fn rho(&self, t: f64) -> Result<f64> {
        let d = self.ctx.flux.decay().expect("checked in new");
        Ok(d.c * self.ctx.source.gamma(d.q, t)?)
    }

    /// `c0^{-1/q} (B - A)^{1/q}` with `c0 = C int_0^{t0} e^{qB}`.
    pub fn state_gap_bound(&self, len: f64) -> Result<f64> {
        let q = self.ctx.flux.decay().expect("checked in new").q;
        Ok((len / self.rho(self.t0)?).powf(1.0 / q))
    }
}

/// `G` at `t0`.
pub fn g_functional(ctx: &PsiContext, t0: f64, a: f64) -> Result<f64> {
    if a.abs() > ctx.flux.bound() {
        return Err(Error::Domain(format!("|a| = {} exceeds M = {}", a.abs(), ctx.flux.bound())));
    }
    CellSolver::new(ctx, t0)?.g(a)
}

pub fn solve_cell_states(ctx: &PsiContext, t0: f64, left: f64, right: f64) -> Result<CellStates> {
    CellSolver::new(ctx, t0)?.solve(left, right)
}

pub fn tau_position(ctx: &PsiContext, t0: f64, left: f64, a: f64, b: f64) -> Result<f64> {
    CellSolver::new(ctx, t0)?.tau(left, a, b)
}

/// One single-shock cell `[A, B]` with states `a | b` split at `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsspCell {
    pub n: usize,
    pub left: f64,
    pub right: f64,
    pub a: f64,
    pub b: f64,
    pub tau: f64,
    pub method: SolveMethod,
}

impl AsspCell {
    pub fn new(ctx: &PsiContext, t0: f64, n: usize, left: f64, right: f64) -> Result<Self> {
        let solver = CellSolver::new(ctx, t0)?;
        let st = solver.solve(left, right)?;
        let tau = solver.tau(left, st.a, st.b)?;
        Ok(AsspCell { n, left, right, a: st.a, b: st.b, tau, method: st.method })
    }

    /// Splitting point of the two fans for `t >= t0`: the zero-mass point
    /// `int_0^{z-A} Psi = int_0^{z-B} Psi`.
    pub fn split_point(&self, ctx: &PsiContext, t: f64) -> Result<f64> {
        let err = std::cell::Cell::new(None);
        let h = |z: f64| {
            let v = ctx.psi_integral(z - self.left, t).and_then(|l| Ok(l - ctx.psi_integral(z - self.right, t)?));
            v.unwrap_or_else(|e| {
                err.set(Some(e));
                f64::NAN
            })
        };
        let z = bisect_increasing(h, self.left, self.right, 0.0);
        if let Some(e) = err.take() {
            return Err(e);
        }
        let z = z?;
        if !(z > self.left && z < self.right) {
            return Err(Error::Numerical(format!(
                "split point {z} left the cell ({}, {})",
                self.left, self.right
            )));
        }
        Ok(z)
    }

    pub fn segments(&self, ctx: &PsiContext, t0: f64, t: f64) -> Result<Vec<Segment>> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("cell structure needs t > 0, got {t}")));
        }
        let (l, r) = (self.left, self.right);
        if t < t0 {
            let solver = CellSolver::new(ctx, t0)?;
            let e = ctx.amplification(t);
            let zm = (l + ctx.drift(self.a, t)?).min(r);
            let zp = (r + ctx.drift(self.b, t)?).max(zm);
            let z0 = (self.tau + solver.shock_drift(self.a, self.b, t)?).clamp(zm, zp);
            Ok(vec![
                Segment::fan(l, zm, l),
                Segment::constant(zm, z0, self.a * e),
                Segment::constant(z0, zp, self.b * e),
                Segment::fan(zp, r, r),
            ])
        } else {
            let z = self.split_point(ctx, t)?;
            Ok(vec![Segment::fan(l, z, l), Segment::fan(z, r, r)])
        }
    }
}

/// `u_{A,B}(x, t)` for one cell.
pub fn assp_solution(ctx: &PsiContext, t0: f64, cell: &AsspCell, x: f64, t: f64) -> Result<f64> {
    if x < cell.left || x > cell.right {
        return Ok(0.0);
    }
    PiecewiseProfile::new(ctx, t, cell.segments(ctx, t0, t)?)?.eval(x)
}

/// Single-shock cells `n = n0..=N` at `A_n, B_n = x_n -+ Delta_n`.
#[derive(Debug, Clone)]
pub struct AsspFamily {
    ctx: PsiContext,
    t0: f64,
    n0: usize,
    cells: Vec<AsspCell>,
}

impl AsspFamily {
    pub fn new(ctx: PsiContext, t0: f64, count: usize) -> Result<Self> {
        let solver = CellSolver::new(&ctx, t0)?;
        let limit = solver.max_length()?;
        let mut n0 = 1;
        while 2.0 * half_width(n0) > limit {
            n0 += 1;
            if n0 > 1 << 40 {
                return Err(Error::NonConvergence { what: "first admissible cell index".into(), iterations: n0 });
            }
        }
        let xs = if count >= n0 { centers(count) } else { Vec::new() };
        let cells = (n0..=count)
            .map(|n| {
                let d = half_width(n);
                AsspCell::new(&ctx, t0, n, xs[n - 1] - d, xs[n - 1] + d)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AsspFamily { ctx, t0, n0, cells })
    }

    pub fn context(&self) -> &PsiContext {
        &self.ctx
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn cells(&self) -> &[AsspCell] {
        &self.cells
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        Some((self.cells.first()?.left, self.cells.last()?.right))
    }

    pub fn profile(&self, t: f64) -> Result<PiecewiseProfile<'_>> {
        let mut segs = Vec::with_capacity(4 * self.cells.len());
        for c in &self.cells {
            segs.extend(c.segments(&self.ctx, self.t0, t)?);
        }
        PiecewiseProfile::new(&self.ctx, t, segs)
    }

    /// Lower bounds `min{c0^{-1/(qs)}, rho(t)^{-1/(qs)}} e^{B(t)/s} (B_n - A_n)^{1/(qs)}`.
    pub fn tvs_partial_sums(&self, t: f64, s: f64, count: usize) -> Result<Vec<PartialSum>> {
        check_s(s)?;
        let solver = CellSolver::new(&self.ctx, self.t0)?;
        let q = self.ctx.flux.decay().expect("checked in new").q;
        let k = -1.0 / (q * s);
        let factor = solver.rho(self.t0)?.powf(k).min(solver.rho(t)?.powf(k)) * (self.ctx.source.b(t) / s).exp();
        let terms = self
            .cells
            .iter()
            .filter(|c| c.n <= count)
            .map(|c| (c.n, factor * (c.right - c.left).powf(1.0 / (q * s))));
        Ok(accumulate(terms))
    }
}

/// Either family, for code that treats them uniformly.
#[derive(Debug, Clone)]
pub enum PacketFamily {
    PowerLaw(PowerLawFamily),
    Assp(AsspFamily),
}

impl PacketFamily {
    pub fn context(&self) -> &PsiContext {
        match self {
            PacketFamily::PowerLaw(f) => f.context(),
            PacketFamily::Assp(f) => f.context(),
        }
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            PacketFamily::PowerLaw(f) => f.support(),
            PacketFamily::Assp(f) => f.support(),
        }
    }

    /// Exact profile of the truncated family at time `t`.
    pub fn profile(&self, t: f64) -> Result<PiecewiseProfile<'_>> {
        match self {
            PacketFamily::PowerLaw(f) => f.profile(t),
            PacketFamily::Assp(f) => f.profile(t),
        }
    }

    pub fn tvs_partial_sums(&self, t: f64, s: f64, count: usize) -> Result<Vec<PartialSum>> {
        match self {
            PacketFamily::PowerLaw(f) => f.tvs_partial_sums(t, s, count),
            PacketFamily::Assp(f) => f.tvs_partial_sums(t, s, count),
        }
    }

    /// `(n, left, right, segments)` per cell.
    fn cell_segments(&self, t: f64) -> Result<Vec<(usize, Vec<Segment>)>> {
        match self {
            PacketFamily::PowerLaw(f) => f
                .packets()
                .iter()
                .enumerate()
                .map(|(i, pk)| Ok((i + 1, pk.segments(f.context(), t)?)))
                .collect(),
            PacketFamily::Assp(f) => f
                .cells()
                .iter()
                .map(|c| Ok((c.n, c.segments(f.context(), f.t0(), t)?)))
                .collect(),
        }
    }

    /// Measured `p`-variation of the sampled profile, with the measured
    /// contribution of every cell on its own support.
    pub fn measured_variation(&self, t: f64, p: f64, fan_points: usize) -> Result<VariationReport> {
        let ctx = self.context();
        let profile = self.profile(t)?;
        let sample = profile.sample(fan_points)?;
        let mut report = if sample.len() >= 2 {
            p_variation(&sample, p)?
        } else {
            VariationReport { p, value: 0.0, subdivision: Vec::new(), per_packet: None }
        };
        let cells = self.cell_segments(t)?;
        let per: Vec<Result<(usize, f64)>> = crate::exec::map(&cells, |(n, segs)| {
            let s = PiecewiseProfile::new(ctx, t, segs.clone())?.sample(fan_points)?;
            Ok((*n, p_variation_values(s.vs(), p)?))
        });
        report.per_packet = Some(per.into_iter().collect::<Result<Vec<_>>>()?);
        Ok(report)
    }
}

/// `family_profile` for either family.
pub fn family_profile(family: &PacketFamily, t: f64) -> Result<PiecewiseProfile<'_>> {
    family.profile(t)
}

/// `family_tvs_partial_sums` for either family.
pub fn family_tvs_partial_sums(family: &PacketFamily, t: f64, s: f64, count: usize) -> Result<Vec<PartialSum>> {
    family.tvs_partial_sums(t, s, count)
}
