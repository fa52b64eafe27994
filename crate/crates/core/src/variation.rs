//! Total p-variation `sup sum |v(x_i) - v(x_{i-1})|^p` of sampled functions
//! (so `TV^s` with `p = 1/s`), together with the analytic bounds used to
//! certify finiteness and divergence for the packet families.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::numeric::abs_pow;
use crate::psi::PsiContext;

/// Samples `v(x_i)` at strictly increasing abscissae.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledFunction {
    xs: Vec<f64>,
    vs: Vec<f64>,
}

impl SampledFunction {
    pub fn new(xs: Vec<f64>, vs: Vec<f64>) -> Result<Self> {
        if xs.len() != vs.len() {
            return Err(invalid(format!("{} abscissae but {} values", xs.len(), vs.len())));
        }
        if let Some(i) = xs.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(invalid(format!("abscissae not strictly increasing at index {}", i + 1)));
        }
        if xs.iter().chain(&vs).any(|v| !v.is_finite()) {
            return Err(invalid("samples must be finite"));
        }
        Ok(SampledFunction { xs, vs })
    }

    /// Values at the abscissae `0, 1, 2, ...`.
    pub fn from_values(vs: Vec<f64>) -> Result<Self> {
        Self::new((0..vs.len()).map(|i| i as f64).collect(), vs)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn vs(&self) -> &[f64] {
        &self.vs
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.xs, self.vs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationReport {
    pub p: f64,
    pub value: f64,
    /// Sample indices of an optimal subdivision.
    pub subdivision: Vec<usize>,
    /// Per-packet contributions `(n, value)` when computed for a family.
    pub per_packet: Option<Vec<(usize, f64)>>,
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("p-variation needs finite p >= 1, got {p}")))
    }
}

/// Indices of local extrema: plateaus collapse to their first index, both
/// ends are always kept.
pub fn local_extrema(vs: &[f64]) -> Vec<usize> {
    let mut runs: Vec<usize> = Vec::with_capacity(vs.len());
    for (i, &v) in vs.iter().enumerate() {
        if runs.last().is_none_or(|&j| vs[j] != v) {
            runs.push(i);
        }
    }
    if runs.len() <= 2 {
        return runs;
    }
    let mut out = Vec::with_capacity(runs.len());
    out.push(runs[0]);
    for w in runs.windows(3) {
        let (a, b, c) = (vs[w[0]], vs[w[1]], vs[w[2]]);
        if (b > a && b > c) || (b < a && b < c) {
            out.push(w[1]);
        }
    }
    out.push(*runs.last().unwrap());
    out
}

/// Exact supremum over all subdivisions of the sample points.
///
/// Dynamic programming over the local extrema, `O(k^2)` in their number.
/// Ties go to fewer points, then to earlier indices.
pub fn p_variation(f: &SampledFunction, p: f64) -> Result<VariationReport> {
    check_p(p)?;
    if f.len() < 2 {
        return Err(invalid("p-variation needs at least two samples"));
    }
    let (value, subdivision) = dp(f.vs(), p);
    Ok(VariationReport { p, value, subdivision, per_packet: None })
}

/// Value-only variant of [`p_variation`] on a bare value sequence.
pub fn p_variation_values(vs: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    if vs.len() < 2 {
        return Ok(0.0);
    }
    Ok(dp(vs, p).0)
}

fn dp(vs: &[f64], p: f64) -> (f64, Vec<usize>) {
    let ext = local_extrema(vs);
    let y: Vec<f64> = ext.iter().map(|&i| vs[i]).collect();
    let m = y.len();
    let mut best = vec![0.0f64; m];
    let mut count = vec![1usize; m];
    let mut prev = vec![usize::MAX; m];
    for j in 1..m {
        let yj = y[j];
        let (mut bv, mut bc, mut bp) = (f64::NEG_INFINITY, usize::MAX, usize::MAX);
        for i in 0..j {
            let cand = best[i] + abs_pow(yj - y[i], p);
            let cc = count[i] + 1;
            if cand > bv || (cand == bv && cc < bc) {
                bv = cand;
                bc = cc;
                bp = i;
            }
        }
        best[j] = bv;
        count[j] = bc;
        prev[j] = bp;
    }
    let mut end = 0;
    for j in 1..m {
        if best[j] > best[end] || (best[j] == best[end] && count[j] < count[end]) {
            end = j;
        }
    }
    let mut chain = vec![ext[end]];
    let mut j = end;
    while prev[j] != usize::MAX {
        j = prev[j];
        chain.push(ext[j]);
    }
    chain.reverse();
    (best[end], chain)
}

/// `TV^s` of the samples, i.e. the `1/s`-variation.
pub fn tvs(f: &SampledFunction, s: f64) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(invalid(format!("TV^s needs 0 < s <= 1, got {s}")));
    }
    Ok(p_variation(f, 1.0 / s)?.value)
}

/// One row of a divergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartialSum {
    pub n: usize,
    pub bound: f64,
    pub cumulative: f64,
}

/// Attach running totals to per-index lower bounds.
pub fn accumulate(terms: impl IntoIterator<Item = (usize, f64)>) -> Vec<PartialSum> {
    let mut acc = 0.0;
    terms
        .into_iter()
        .map(|(n, bound)| {
            acc += bound;
            PartialSum { n, bound, cumulative: acc }
        })
        .collect()
}

/// `e^{pB(t)} (c0 gamma_p(t))^{-1} (2(b - a) + 2 C(T) t)`: the smoothing
/// bound on `TV^{1/p}` over `[a, b]` at time `t <= T`.
pub fn tvs_upper_bound(ctx: &PsiContext, t: f64, a: f64, b: f64, horizon: f64) -> Result<f64> {
    let deg = ctx
        .flux
        .degeneracy()
        .ok_or_else(|| invalid("the TV^s bound needs flux degeneracy metadata"))?;
    if !(a < b) {
        return Err(invalid(format!("interval [{a}, {b}] is empty")));
    }
    if !(t >= 0.0 && t <= horizon) {
        return Err(Error::Domain(format!("need 0 <= t <= T, got t = {t}, T = {horizon}")));
    }
    if t == 0.0 {
        return Ok(f64::INFINITY);
    }
    let g = ctx.source.gamma(deg.p, t)?;
    let c = ctx.speed_bound(horizon);
    Ok((deg.p * ctx.source.b(t)).exp() / (deg.c0 * g) * (2.0 * (b - a) + 2.0 * c * t))
}

/// Exponent of `n` in the general term `(n log^3(n+1))^{-1/(1+p eps)}` of
/// the divergent series; the series diverges whenever it is at most one.
pub fn series_exponent(p: f64, eps: f64) -> f64 {
    1.0 / (1.0 + p * eps)
}

/// Least-squares slope of `log y` against `log x`.
pub fn growth_exponent(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(invalid("growth fit needs two or more positive points"));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(invalid("growth fit needs distinct abscissae"));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Flux, SourceProfile};

    fn sf(vs: &[f64]) -> SampledFunction {
        SampledFunction::from_values(vs.to_vec()).unwrap()
    }

    #[test]
    fn variation_examples() {
        let r = p_variation(&sf(&[0.0, 1.0, 0.0]), 2.0).unwrap();
        assert_eq!(r.value, 2.0);
        assert_eq!(r.subdivision, vec![0, 1, 2]);
        let mono: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let r = p_variation(&sf(&mono), 2.0).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.subdivision, vec![0, 100]);
        assert_eq!(p_variation(&sf(&[0.0, 1.0, 0.0, 1.0]), 2.0).unwrap().value, 3.0);
    }

    #[test]
    fn tvs_examples() {
        let h: f64 = 0.7;
        for &s in &[1.0, 0.5, 1.0 / 3.0] {
            let v = tvs(&sf(&[0.0, 0.0, h, h]), s).unwrap();
            assert!((v - h.powf(1.0 / s)).abs() < 1e-15);
        }
        assert_eq!(tvs(&sf(&[0.0, 1.0, 0.0]), 1.0).unwrap(), 2.0);
        assert_eq!(tvs(&sf(&[0.0, 1.0, 0.0, 1.0]), 0.5).unwrap(), 3.0);
        assert!(tvs(&sf(&[0.0, 1.0]), 0.0).is_err());
        assert!(tvs(&sf(&[0.0, 1.0]), 1.5).is_err());
    }

    #[test]
    fn invalid_inputs() {
        assert!(p_variation(&sf(&[0.0, 1.0]), 0.5).is_err());
        assert!(p_variation(&sf(&[0.0]), 2.0).is_err());
        assert!(SampledFunction::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(SampledFunction::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(SampledFunction::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn extrema_collapse_plateaus() {
        assert_eq!(local_extrema(&[0.0, 1.0, 1.0, 1.0, 0.0]), vec![0, 1, 4]);
        assert_eq!(local_extrema(&[0.0, 1.0, 1.0, 2.0]), vec![0, 3]);
        assert_eq!(local_extrema(&[2.0, 2.0, 2.0]), vec![0]);
    }

    #[test]
    fn classical_tv_is_sum_of_moves() {
        let vs = [0.0, 3.0, -1.0, 2.0, 2.0, 5.0];
        let r = p_variation(&sf(&vs), 1.0).unwrap();
        assert_eq!(r.value, 3.0 + 4.0 + 6.0);
    }

    #[test]
    fn upper_bound_examples() {
        let burgers = PsiContext::new(Flux::power_law(1.0, 3.0).unwrap(), SourceProfile::zero());
        assert!((tvs_upper_bound(&burgers, 1.0, 0.0, 1.0, 1.0).unwrap() - 8.0).abs() < 1e-14);
        let c = PsiContext::new(Flux::power_law(2.0, 1.0).unwrap(), SourceProfile::zero());
        assert!((tvs_upper_bound(&c, 1.0, 0.0, 1.0, 1.0).unwrap() - 8.0).abs() < 1e-14);
        assert_eq!(tvs_upper_bound(&c, 0.0, 0.0, 1.0, 1.0).unwrap(), f64::INFINITY);
        assert!(tvs_upper_bound(&c, 1e-9, 0.0, 1.0, 1.0).unwrap() > 1e9);
    }

    #[test]
    fn growth_fit() {
        let pts: Vec<(f64, f64)> = [10.0f64, 100.0, 1000.0].iter().map(|&n| (n, 3.0 * n.sqrt())).collect();
        assert!((growth_exponent(&pts).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(series_exponent(2.0, 0.5), 0.5);
    }

    #[test]
    fn partial_sums_accumulate() {
        let rows = accumulate([(1, 1.0), (2, 0.5), (3, 0.25)]);
        assert_eq!(rows[2].cumulative, 1.75);
        assert_eq!(rows[1].n, 2);
    }
}
