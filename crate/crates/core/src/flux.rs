//! Convex scalar fluxes with their degeneracy and decay constants.

use std::fmt;
use std::sync::Arc;

use crate::error::{domain, invalid, Result};
use crate::numeric::{abs_pow, bisect_increasing, golden_max, linspace};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `|f'(u) - f'(v)| >= c0 |u - v|^p` on the working interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Degeneracy {
    pub p: f64,
    pub c0: f64,
}

/// `0 <= f'(a) - f'(b) <= c (a - b)^q` for `b in (-r, 0)`, `a in (0, r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decay {
    pub q: f64,
    pub c: f64,
    pub r: f64,
}

/// Derivative given as a nondecreasing piecewise-linear table; the flux is
/// its exact primitive normalized by `f(0) = 0`. Outside the nodes the
/// derivative is extended linearly from the end segments.
#[derive(Debug, Clone, PartialEq)]
pub struct TableFlux {
    u: Vec<f64>,
    df: Vec<f64>,
    cumulative: Vec<f64>,
    offset: f64,
}

impl TableFlux {
    pub fn new(u: Vec<f64>, df: Vec<f64>) -> Result<Self> {
        if u.len() < 2 || u.len() != df.len() {
            return Err(invalid("table flux needs >= 2 nodes and matching lengths"));
        }
        if u.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("table abscissae must be strictly increasing"));
        }
        if df.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("table derivative must be nondecreasing (convex flux)"));
        }
        let mut cumulative = vec![0.0; u.len()];
        for k in 1..u.len() {
            cumulative[k] = cumulative[k - 1] + 0.5 * (df[k] + df[k - 1]) * (u[k] - u[k - 1]);
        }
        let mut t = TableFlux { u, df, cumulative, offset: 0.0 };
        t.offset = t.primitive(0.0);
        Ok(t)
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.u.len();
        match self.u.partition_point(|&v| v <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    fn deriv(&self, x: f64) -> f64 {
        let k = self.segment(x);
        let (u0, u1) = (self.u[k], self.u[k + 1]);
        let slope = (self.df[k + 1] - self.df[k]) / (u1 - u0);
        self.df[k] + slope * (x - u0)
    }

    fn primitive(&self, x: f64) -> f64 {
        let k = self.segment(x);
        let u0 = self.u[k];
        let slope = (self.df[k + 1] - self.df[k]) / (self.u[k + 1] - u0);
        let h = x - u0;
        self.cumulative[k] + self.df[k] * h + 0.5 * slope * h * h
    }

    fn value(&self, x: f64) -> f64 {
        self.primitive(x) - self.offset
    }
}

#[derive(Clone)]
pub enum FluxKind {
    /// `f(u) = |u|^{p+1} / (p+1)`.
    PowerLaw { p: f64 },
    /// User-supplied convex `f` with its derivative.
    Convex { f: ScalarFn, df: ScalarFn },
    Table(TableFlux),
}

impl fmt::Debug for FluxKind {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FluxKind::PowerLaw { p } => fm.debug_struct("PowerLaw").field("p", p).finish(),
            FluxKind::Convex { .. } => fm.write_str("Convex { .. }"),
            FluxKind::Table(t) => fm.debug_tuple("Table").field(t).finish(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Flux {
    kind: FluxKind,
    bound: f64,
    degeneracy: Option<Degeneracy>,
    decay: Option<Decay>,
}

impl Flux {
    /// Power-law flux on `[-bound, bound]`. Degeneracy `(p, 2^{1-p})` is
    /// attached, and for `p > 1` the decay triple `(p, 1, bound)`.
    pub fn power_law(p: f64, bound: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(invalid(format!("power-law exponent must be >= 1, got {p}")));
        }
        check_bound(bound)?;
        let decay = (p > 1.0).then_some(Decay { q: p, c: 1.0, r: bound });
        Ok(Flux {
            kind: FluxKind::PowerLaw { p },
            bound,
            degeneracy: Some(Degeneracy { p, c0: (1.0 - p).exp2() }),
            decay,
        })
    }

    pub fn convex<F, D>(f: F, df: D, bound: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_bound(bound)?;
        Ok(Flux {
            kind: FluxKind::Convex { f: Arc::new(f), df: Arc::new(df) },
            bound,
            degeneracy: None,
            decay: None,
        })
    }

    pub fn table(u: Vec<f64>, df: Vec<f64>, bound: f64) -> Result<Self> {
        check_bound(bound)?;
        Ok(Flux { kind: FluxKind::Table(TableFlux::new(u, df)?), bound, degeneracy: None, decay: None })
    }

    pub fn with_degeneracy(mut self, p: f64, c0: f64) -> Result<Self> {
        if !(p >= 1.0) || !(c0 > 0.0) {
            return Err(invalid("degeneracy needs p >= 1 and c0 > 0"));
        }
        self.degeneracy = Some(Degeneracy { p, c0 });
        Ok(self)
    }

    pub fn with_decay(mut self, q: f64, c: f64, r: f64) -> Result<Self> {
        if !(q > 1.0) || !(c > 0.0) || !(r > 0.0) {
            return Err(invalid("decay needs q > 1, C > 0, r > 0"));
        }
        self.decay = Some(Decay { q, c, r });
        Ok(self)
    }

    pub fn kind(&self) -> &FluxKind {
        &self.kind
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn degeneracy(&self) -> Option<Degeneracy> {
        self.degeneracy
    }

    pub fn decay(&self) -> Option<Decay> {
        self.decay
    }

    /// Exponent `p` when this is a power-law flux.
    pub fn power(&self) -> Option<f64> {
        match self.kind {
            FluxKind::PowerLaw { p } => Some(p),
            _ => None,
        }
    }

    /// `f(u)` without the working-interval check.
    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        match &self.kind {
            FluxKind::PowerLaw { p } => abs_pow(u, p + 1.0) / (p + 1.0),
            FluxKind::Convex { f, .. } => f(u),
            FluxKind::Table(t) => t.value(u),
        }
    }

    /// `f'(u)` without the working-interval check.
    #[inline]
    pub fn df(&self, u: f64) -> f64 {
        match &self.kind {
            FluxKind::PowerLaw { p } => u * abs_pow(u, p - 1.0),
            FluxKind::Convex { df, .. } => df(u),
            FluxKind::Table(t) => t.deriv(u),
        }
    }

    fn check_domain(&self, u: f64) -> Result<()> {
        if u.abs() > self.bound || u.is_nan() {
            Err(domain(format!("|u| = {} exceeds flux bound {}", u.abs(), self.bound)))
        } else {
            Ok(())
        }
    }

    pub fn eval_flux(&self, u: f64) -> Result<f64> {
        self.check_domain(u)?;
        Ok(self.f(u))
    }

    pub fn eval_dflux(&self, u: f64) -> Result<f64> {
        self.check_domain(u)?;
        Ok(self.df(u))
    }

    /// Grid estimate of the best constant in `|f'(u)-f'(v)| >= c0 |u-v|^p`:
    /// the minimum ratio over all pairs of a uniform `grid_count`-point grid
    /// on `[-M, M]`, skipping pairs closer than `1e-12`.
    pub fn degeneracy_constant(&self, p: f64, grid_count: usize) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(invalid(format!("degeneracy exponent must be >= 1, got {p}")));
        }
        if grid_count < 2 {
            return Err(invalid("degeneracy grid needs at least 2 points"));
        }
        let grid = linspace(-self.bound, self.bound, grid_count);
        let slopes: Vec<f64> = grid.iter().map(|&u| self.df(u)).collect();
        let row_min = crate::exec::map_range(grid_count, |i| {
            let mut best = f64::INFINITY;
            for j in (i + 1)..grid_count {
                let gap = grid[j] - grid[i];
                if gap < 1e-12 {
                    continue;
                }
                let ratio = (slopes[j] - slopes[i]).abs() / abs_pow(gap, p);
                if ratio < best {
                    best = ratio;
                }
            }
            best
        });
        Ok(row_min.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// Legendre transform `f*(m) = sup_{|u| <= M} (m u - f(u))`.
    /// Uses the closed form for power-law fluxes.
    pub fn legendre(&self, slope: f64) -> Result<f64> {
        self.check_slope(slope)?;
        match self.kind {
            FluxKind::PowerLaw { p } => Ok(p / (p + 1.0) * abs_pow(slope, (p + 1.0) / p)),
            _ => Ok(self.legendre_search(slope)),
        }
    }

    /// Legendre transform by golden-section maximization (tolerance 1e-12).
    pub fn legendre_numeric(&self, slope: f64) -> Result<f64> {
        self.check_slope(slope)?;
        Ok(self.legendre_search(slope))
    }

    fn legendre_search(&self, slope: f64) -> f64 {
        golden_max(|u| slope * u - self.f(u), -self.bound, self.bound, 1e-12).1
    }

    fn check_slope(&self, slope: f64) -> Result<()> {
        let lo = self.df(-self.bound);
        let hi = self.df(self.bound);
        if slope < lo || slope > hi || slope.is_nan() {
            Err(domain(format!("slope {slope} outside [{lo}, {hi}]")))
        } else {
            Ok(())
        }
    }

    /// Minimizer of `f` (the sonic state), clamped to `[-M, M]`.
    pub fn sonic_point(&self) -> f64 {
        if let FluxKind::PowerLaw { .. } = self.kind {
            return 0.0;
        }
        let m = self.bound;
        if self.df(-m) >= 0.0 {
            -m
        } else if self.df(m) <= 0.0 {
            m
        } else {
            bisect_increasing(|u| self.df(u), -m, m, 0.0).unwrap_or(0.0)
        }
    }

    /// `max_{|u| <= level} |f'(u)|`; `f'` is monotone so the ends suffice.
    pub fn max_speed(&self, level: f64) -> f64 {
        self.df(-level).abs().max(self.df(level).abs())
    }
}

fn check_bound(bound: f64) -> Result<()> {
    if bound > 0.0 && bound.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("flux bound must be positive and finite, got {bound}")))
    }
}
