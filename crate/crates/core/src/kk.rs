//! The two-dimensional Keyfitz-Kranzer example: `u = eta * omega` with
//! `eta = |u|` solving a scalar law with velocity `(g(eta), 0)` and the
//! direction `omega` transported by it.
//!
//! Initial data `u0^n` live on dyadic bands `I_i = [2^{-i}, 2^{-i+1})`,
//! `i >= n`, each cut into `m_i` horizontal strips. Grids store deviations
//! (`eta - |b|`, `omega - beta`, `u - b`) as exact cell averages, so data
//! far below the cell size (and below `f64` resolution of `|b|`) survive.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::flux::ScalarFn;
use crate::numeric::bisect_increasing;

#[derive(Clone)]
pub struct KKSetup {
    p: f64,
    delta: f64,
    b: [f64; 2],
    n: usize,
    depth: usize,
    eps: f64,
    support: f64,
    g: Option<ScalarFn>,
    bands: Vec<Band>,
}

impl std::fmt::Debug for KKSetup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KKSetup")
            .field("p", &self.p)
            .field("delta", &self.delta)
            .field("b", &self.b)
            .field("n", &self.n)
            .field("depth", &self.depth)
            .field("M", &self.support)
            .finish()
    }
}

#[derive(Debug, Clone, Copy)]
struct Band {
    i: usize,
    strips: f64,
    /// `eta - |b|` on even and odd strips.
    r_even: f64,
    r_odd: f64,
    /// `beta_i - beta`.
    turn: [f64; 2],
    /// Velocities `g(eta)` on even and odd strips.
    speed_even: f64,
    speed_odd: f64,
}

/// Cell-averaged field on `[lo, hi]^2`, row-major with `y` the slow index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridField {
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
    pub components: usize,
    pub data: Vec<f64>,
}

impl GridField {
    pub fn zeros(lo: f64, hi: f64, cells: usize, components: usize) -> Self {
        GridField { lo, hi, cells, components, data: vec![0.0; cells * cells * components] }
    }

    pub fn cell_size(&self) -> f64 {
        (self.hi - self.lo) / self.cells as f64
    }

    /// Value of cell `(ix, iy)`.
    pub fn get(&self, ix: usize, iy: usize) -> &[f64] {
        let k = (iy * self.cells + ix) * self.components;
        &self.data[k..k + self.components]
    }

    /// Largest Euclidean norm of a cell value.
    pub fn sup_norm(&self) -> f64 {
        self.data
            .chunks(self.components)
            .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Largest norm among cells lying entirely outside the disc of radius `r`.
    pub fn sup_outside(&self, r: f64) -> f64 {
        let h = self.cell_size();
        let mut worst = 0.0f64;
        for iy in 0..self.cells {
            let (y0, y1) = (self.lo + h * iy as f64, self.lo + h * (iy + 1) as f64);
            let ny = if y0 > 0.0 { y0 } else if y1 < 0.0 { -y1 } else { 0.0 };
            for ix in 0..self.cells {
                let (x0, x1) = (self.lo + h * ix as f64, self.lo + h * (ix + 1) as f64);
                let nx = if x0 > 0.0 { x0 } else if x1 < 0.0 { -x1 } else { 0.0 };
                if nx.hypot(ny) > r {
                    let v = self.get(ix, iy);
                    worst = worst.max(v.iter().map(|a| a * a).sum::<f64>().sqrt());
                }
            }
        }
        worst
    }
}

/// Anisotropic discrete BV seminorm: `sum |difference| * h` over all
/// horizontally and vertically adjacent cell pairs.
pub fn bv_grid_norm(field: &GridField) -> f64 {
    let (n, c) = (field.cells, field.components);
    let h = field.cell_size();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let rows = crate::exec::map_range(n, |iy| {
        let mut s = 0.0;
        for ix in 0..n {
            let v = field.get(ix, iy);
            if ix + 1 < n {
                s += dist(v, field.get(ix + 1, iy));
            }
            if iy + 1 < n {
                s += dist(v, field.get(ix, iy + 1));
            }
        }
        s
    });
    debug_assert!(c > 0);
    rows.iter().sum::<f64>() * h
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KKFields {
    /// `eta - |b|`.
    pub eta: GridField,
    /// `omega - beta`.
    pub omega: GridField,
    /// `u - b`.
    pub u: GridField,
}

/// Measure of `{z in [0, x] : floor(z / h) odd}`, signed for negative `x`.
fn odd_primitive(x: f64, h: f64) -> f64 {
    let k = (x / h).floor();
    let half = (k / 2.0).floor();
    if k - 2.0 * half == 1.0 {
        h * half + (x - k * h)
    } else {
        h * half
    }
}

fn odd_measure(lo: f64, hi: f64, h: f64) -> f64 {
    if hi <= lo {
        0.0
    } else {
        odd_primitive(hi, h) - odd_primitive(lo, h)
    }
}

impl KKSetup {
    /// `g(u) = u - |b|`, `eps = |b|/4`, bands `i = n ..= n + depth`.
    pub fn new(p: f64, delta: f64, b: [f64; 2], n: usize, depth: usize) -> Result<Self> {
        Self::build(p, delta, b, n, depth, None)
    }

    /// Custom velocity with `g(|b|) = 0`, `g'(|b|) = 1`, increasing on
    /// `[|b| - 2 eps, |b| + 2 eps]`.
    pub fn with_g<G: Fn(f64) -> f64 + Send + Sync + 'static>(
        p: f64,
        delta: f64,
        b: [f64; 2],
        n: usize,
        depth: usize,
        g: G,
    ) -> Result<Self> {
        Self::build(p, delta, b, n, depth, Some(std::sync::Arc::new(g)))
    }

    fn build(p: f64, delta: f64, b: [f64; 2], n: usize, depth: usize, g: Option<ScalarFn>) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(invalid(format!("need p > 1, got {p}")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid(format!("need delta > 0, got {delta}")));
        }
        let nb = b[0].hypot(b[1]);
        if !(nb > 0.0 && nb.is_finite()) {
            return Err(invalid("b must be a finite non-zero vector"));
        }
        if n == 0 {
            return Err(invalid("data index n starts at 1"));
        }
        let eps = 0.25 * nb;
        let mut setup = KKSetup { p, delta, b, n, depth, eps, support: 0.0, g, bands: Vec::new() };
        let beta = [b[0] / nb, b[1] / nb];
        let mut rs = Vec::with_capacity(depth + 2);
        for i in n..=n + depth + 1 {
            rs.push(setup.solve_r(i)?);
        }
        let mut top = 0.0f64;
        for (k, i) in (n..=n + depth).enumerate() {
            let c = (i as f64).powf(-1.0 - delta);
            // Rotation by 2 asin(c/2): cos - 1 = -c^2/2, sin = c sqrt(1 - c^2/4).
            let (dc, sn) = (-0.5 * c * c, c * (1.0 - 0.25 * c * c).sqrt());
            let turn = [beta[0] * dc - beta[1] * sn, beta[1] * dc + beta[0] * sn];
            let (se, so) = (setup.g_eval(nb + rs[k]), setup.g_eval(nb + rs[k + 1]));
            top = top.max(se.abs()).max(so.abs());
            setup.bands.push(Band {
                i,
                strips: (i as f64).powf(p + p * delta).round().max(1.0),
                r_even: rs[k],
                r_odd: rs[k + 1],
                turn,
                speed_even: se,
                speed_odd: so,
            });
        }
        setup.support = 4.0 * (1.0 + top);
        Ok(setup)
    }

    fn g_eval(&self, u: f64) -> f64 {
        match &self.g {
            None => u - self.norm_b(),
            Some(g) => g(u),
        }
    }

    /// `r_i` with `g(|b| + r_i) = 2^{-i}`.
    fn solve_r(&self, i: usize) -> Result<f64> {
        let target = 2f64.powi(-(i as i32));
        match &self.g {
            None => Ok(target),
            Some(g) => {
                let nb = self.norm_b();
                bisect_increasing(|r| g(nb + r) - target, -2.0 * self.eps, 2.0 * self.eps, 0.0)
                    .map_err(|e| Error::Range(format!("r_{i} outside [-2 eps, 2 eps]: {e}")))
            }
        }
    }

    pub fn norm_b(&self) -> f64 {
        self.b[0].hypot(self.b[1])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> f64 {
        self.eps
    }

    /// The box half-width `M`.
    pub fn support(&self) -> f64 {
        self.support
    }

    /// `u0^n = b` outside this radius.
    pub fn support_radius(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.support
    }

    /// `m_i = i^{p + p delta}`.
    pub fn m(&self, i: usize) -> f64 {
        (i as f64).powf(self.p + self.p * self.delta)
    }

    /// `r_i` for `n <= i <= n + depth + 1`.
    pub fn r(&self, i: usize) -> Option<f64> {
        if i < self.n {
            return None;
        }
        let k = i - self.n;
        match self.bands.get(k) {
            Some(band) => Some(band.r_even),
            None => self.bands.last().filter(|_| k == self.bands.len()).map(|band| band.r_odd),
        }
    }

    /// `|beta - beta_i|`.
    pub fn turn_length(&self, i: usize) -> Option<f64> {
        let band = self.bands.get(i.checked_sub(self.n)?)?;
        Some(band.turn[0].hypot(band.turn[1]))
    }

    /// `|b| n^{-1-delta} + 2^{-n+1}`.
    pub fn sup_bound(&self) -> f64 {
        self.norm_b() * (self.n as f64).powf(-1.0 - self.delta) + 2f64.powi(1 - self.n as i32)
    }

    /// Pointwise `sup |u0^n - b|` over the truncated bands.
    pub fn sup_norm_exact(&self) -> f64 {
        let nb = self.norm_b();
        let beta = [self.b[0] / nb, self.b[1] / nb];
        let mut worst = 0.0f64;
        for band in &self.bands {
            for r in [band.r_even, band.r_odd] {
                let v = [r * beta[0] + (nb + r) * band.turn[0], r * beta[1] + (nb + r) * band.turn[1]];
                worst = worst.max(r.abs()).max(v[0].hypot(v[1]));
            }
        }
        worst
    }

    /// `sum_{i>=n} m_i 2^{-i} + (4M + 2) r_n + 4 M^2 sup|u0 - b|`.
    pub fn eta_bv_bound(&self) -> f64 {
        let tail: f64 = self.bands.iter().map(|b| self.m(b.i) * 2f64.powi(-(b.i as i32))).sum();
        let m = self.support;
        tail + (4.0 * m + 2.0) * self.bands[0].r_even + 4.0 * m * m * self.sup_norm_exact()
    }

    /// Even- and odd-strip measure of band `band` within `[c, d]`.
    fn strip_measures(band: &Band, c: f64, d: f64) -> (f64, f64) {
        let base = 2f64.powi(-(band.i as i32));
        let (lo, hi) = (c.max(base), d.min(2.0 * base));
        if hi <= lo {
            return (0.0, 0.0);
        }
        let w = base / band.strips;
        let z = |y: f64| ((y - base) / w).clamp(0.0, band.strips);
        // Strip j = floor(z) + 1 is even when floor(z) is odd.
        let even = w * odd_measure(z(lo), z(hi), 1.0);
        let total = hi - lo;
        (even.clamp(0.0, total), (total - even).clamp(0.0, total))
    }

    /// Exact cell averages of `eta - |b|`, `omega - beta`, `u - b` at time `t`
    /// on `cells^2` cells over `[-2M, 2M]^2`.
    fn averages(&self, t: f64, cells: usize) -> KKFields {
        let m = self.support;
        let (lo, hi) = (-2.0 * m, 2.0 * m);
        let mut eta = GridField::zeros(lo, hi, cells, 1);
        let mut omega = GridField::zeros(lo, hi, cells, 2);
        let mut u = GridField::zeros(lo, hi, cells, 2);
        let h = (hi - lo) / cells as f64;
        let area = h * h;
        let nb = self.norm_b();
        let beta = [self.b[0] / nb, self.b[1] / nb];
        let top = 2f64.powi(1 - self.n as i32);
        let rows: Vec<Vec<(Band, f64, f64)>> = (0..cells)
            .map(|iy| {
                let (c, d) = (lo + h * iy as f64, lo + h * (iy + 1) as f64);
                if d <= 0.0 || c >= top {
                    return Vec::new();
                }
                self.bands
                    .iter()
                    .map(|band| {
                        let (e, o) = Self::strip_measures(band, c, d);
                        (*band, e, o)
                    })
                    .filter(|(_, e, o)| *e > 0.0 || *o > 0.0)
                    .collect()
            })
            .collect();
        let fill = |field: &mut GridField, comps: usize, which: u8| {
            crate::exec::for_each_chunk_mut(&mut field.data, cells * comps, |iy, row| {
                for &(band, ye, yo) in &rows[iy] {
                    let width = 2f64.powi(-(band.i as i32));
                    for ix in 0..cells {
                        let (a, b) = (lo + h * ix as f64, lo + h * (ix + 1) as f64);
                        let inside = |s: f64| ((b - s).min(m) - (a - s).max(-m)).max(0.0);
                        let odd = |s: f64| odd_measure((a - s).max(-m), (b - s).min(m), width);
                        let cell = &mut row[ix * comps..(ix + 1) * comps];
                        match which {
                            0 => cell[0] += (band.r_even * ye + band.r_odd * yo) * inside(0.0) / area,
                            1 => {
                                let wgt = (ye * odd(t * band.speed_even) + yo * odd(t * band.speed_odd)) / area;
                                cell[0] += band.turn[0] * wgt;
                                cell[1] += band.turn[1] * wgt;
                            }
                            _ => {
                                for (r, y, s) in [
                                    (band.r_even, ye, t * band.speed_even),
                                    (band.r_odd, yo, t * band.speed_odd),
                                ] {
                                    let lin = r * y * inside(0.0) / area;
                                    let rot = (nb + r) * y * odd(s) / area;
                                    cell[0] += lin * beta[0] + rot * band.turn[0];
                                    cell[1] += lin * beta[1] + rot * band.turn[1];
                                }
                            }
                        }
                    }
                }
            });
        };
        fill(&mut eta, 1, 0);
        fill(&mut omega, 2, 1);
        fill(&mut u, 2, 2);
        KKFields { eta, omega, u }
    }

    /// Exact cell averages of the initial data on `cells^2` cells over
    /// `[-2M, 2M]^2`. Strips are far thinner than the cells; averages are
    /// computed analytically rather than by sampling.
    pub fn build_initial_data(&self, cells: usize) -> Result<KKFields> {
        if cells < 2 || !cells.is_multiple_of(2) {
            return Err(invalid(format!("need an even cell count >= 2, got {cells}")));
        }
        Ok(self.averages(0.0, cells))
    }

    /// Fields at time `t`: `eta` is unchanged and every strip's direction
    /// pattern moves right by `t g(eta)`, i.e. `t 2^{-i}` on strips with
    /// `eta = |b| + r_i`.
    pub fn evolve(&self, t: f64, cells: usize) -> Result<KKFields> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("need t in [0, 1], got {t}")));
        }
        if cells < 2 || !cells.is_multiple_of(2) {
            return Err(invalid(format!("need an even cell count >= 2, got {cells}")));
        }
        // Characteristics stay on their rows and move by at most this much.
        let reach = self.bands.iter().map(|b| b.speed_even.abs().max(b.speed_odd.abs())).fold(0.0, f64::max);
        if reach * t >= self.support {
            return Err(Error::Range("shift exceeds the support box".into()));
        }
        Ok(self.averages(t, cells))
    }

    /// Shift of the direction pattern on the strips of band `i` at time `t`:
    /// `(even strips, odd strips)`.
    pub fn shift(&self, i: usize, t: f64) -> Option<(f64, f64)> {
        let band = self.bands.get(i.checked_sub(self.n)?)?;
        Some((t * band.speed_even, t * band.speed_odd))
    }

    /// `(t/2) sum_{i=n}^{n+extra} (m_i - 1) i^{-p-p delta}`, the lower bound on
    /// the BV norm of any factor `W` with `omega = pi o W`, `pi` `s`-Holder
    /// with unit constant.
    pub fn jump_sum_lower_bound(&self, t: f64, extra: usize) -> Result<f64> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Domain(format!("need t in (0, 1), got {t}")));
        }
        let e = self.p + self.p * self.delta;
        Ok(0.5 * t * (self.n..=self.n + extra).map(|i| (self.m(i) - 1.0) * (i as f64).powf(-e)).sum::<f64>())
    }
}
