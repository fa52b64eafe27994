//! Piecewise-constant source coefficients `alpha(t)` and their exact
//! primitives `B(t)` and `gamma_p(t) = int_0^t e^{p B}`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};
use crate::numeric::{bisect_increasing, exp_ratio, simpson};

/// Config form of a source coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "alpha", rename_all = "snake_case", deny_unknown_fields)]
pub enum Alpha {
    Zero {},
    Constant { a: f64 },
    /// `alpha = v[k]` on `[t[k], t[k+1])`, the last value continuing to
    /// infinity; `t[0]` must be 0.
    #[serde(rename = "pw")]
    Piecewise { t: Vec<f64>, v: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    start: f64,
    alpha: f64,
    /// `B(start)`.
    beta0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceProfile {
    alpha: Alpha,
    pieces: Vec<Piece>,
    sup_norm: f64,
}

impl SourceProfile {
    pub fn new(alpha: Alpha) -> Result<Self> {
        let (starts, values) = match &alpha {
            Alpha::Zero {} => (vec![0.0], vec![0.0]),
            Alpha::Constant { a } => (vec![0.0], vec![*a]),
            Alpha::Piecewise { t, v } => {
                if t.is_empty() || t.len() != v.len() {
                    return Err(invalid("piecewise source needs matching, nonempty t and v"));
                }
                if t[0] != 0.0 {
                    return Err(invalid("piecewise source must start at t = 0"));
                }
                if t.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid("piecewise source breakpoints must increase"));
                }
                (t.clone(), v.clone())
            }
        };
        if values.iter().chain(starts.iter()).any(|x| !x.is_finite()) {
            return Err(invalid("source values must be finite"));
        }
        let mut pieces = Vec::with_capacity(starts.len());
        let mut beta0 = 0.0;
        for k in 0..starts.len() {
            if k > 0 {
                beta0 += values[k - 1] * (starts[k] - starts[k - 1]);
            }
            pieces.push(Piece { start: starts[k], alpha: values[k], beta0 });
        }
        let sup_norm = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(SourceProfile { alpha, pieces, sup_norm })
    }

    pub fn zero() -> Self {
        Self::new(Alpha::Zero {}).expect("zero source")
    }

    pub fn constant(a: f64) -> Result<Self> {
        Self::new(Alpha::Constant { a })
    }

    pub fn piecewise(t: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        Self::new(Alpha::Piecewise { t, v })
    }

    pub fn alpha(&self) -> &Alpha {
        &self.alpha
    }

    /// `||alpha||_inf`.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(|p| p.alpha == 0.0)
    }

    /// Piece breakpoints inside `(0, t)`.
    pub fn breakpoints_before(&self, t: f64) -> impl Iterator<Item = f64> + '_ {
        self.pieces.iter().skip(1).map(|p| p.start).take_while(move |&s| s < t)
    }

    fn piece_index(&self, t: f64) -> usize {
        self.pieces.partition_point(|p| p.start <= t).saturating_sub(1)
    }

    fn check_time(t: f64) -> Result<()> {
        if t >= 0.0 {
            Ok(())
        } else {
            Err(domain(format!("time must be >= 0, got {t}")))
        }
    }

    fn check_p(p: f64) -> Result<()> {
        if p >= 1.0 {
            Ok(())
        } else {
            Err(domain(format!("exponent must be >= 1, got {p}")))
        }
    }

    /// `B(t)` without argument checks.
    #[inline]
    pub(crate) fn b(&self, t: f64) -> f64 {
        let pc = &self.pieces[self.piece_index(t)];
        pc.beta0 + pc.alpha * (t - pc.start)
    }

    /// `B(t) = int_0^t alpha`.
    pub fn beta(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        Ok(self.b(t))
    }

    /// `min_{[0, t]} B`; `B` is piecewise linear so breakpoints suffice.
    pub fn min_beta(&self, t: f64) -> f64 {
        self.breakpoints_before(t).map(|s| self.b(s)).fold(0.0f64.min(self.b(t)), f64::min)
    }

    /// `max_{[0, t]} B`.
    pub fn max_beta(&self, t: f64) -> f64 {
        self.breakpoints_before(t).map(|s| self.b(s)).fold(0.0f64.max(self.b(t)), f64::max)
    }

    /// `int_0^t e^{c B}` for any real weight `c`; `t` may be infinite.
    pub(crate) fn exp_integral(&self, c: f64, t: f64) -> f64 {
        let mut acc = 0.0;
        for (k, pc) in self.pieces.iter().enumerate() {
            if pc.start >= t {
                break;
            }
            let end = self.pieces.get(k + 1).map_or(t, |n| n.start.min(t));
            let len = end - pc.start;
            let rate = c * pc.alpha;
            let piece = if len.is_infinite() {
                if rate < 0.0 {
                    (c * pc.beta0).exp() / -rate
                } else {
                    f64::INFINITY
                }
            } else {
                (c * pc.beta0).exp() * exp_ratio(rate, len)
            };
            acc += piece;
        }
        acc
    }

    /// `gamma_p(t) = int_0^t e^{p B}`, closed form on each piece.
    pub fn gamma(&self, p: f64, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        Self::check_p(p)?;
        Ok(self.exp_integral(p, t))
    }

    /// `B* = gamma_p(+inf)`; infinite unless the final piece decays.
    pub fn gamma_tail(&self, p: f64) -> Result<f64> {
        Self::check_p(p)?;
        Ok(self.exp_integral(p, f64::INFINITY))
    }

    /// Unique `t` with `gamma_p(t) = target`, or infinity when
    /// `target >= B*`. The crossing piece is located first and inverted in
    /// closed form.
    pub fn gamma_inverse(&self, p: f64, target: f64) -> Result<f64> {
        Self::check_p(p)?;
        if !(target >= 0.0) {
            return Err(domain(format!("gamma target must be >= 0, got {target}")));
        }
        if target == 0.0 {
            return Ok(0.0);
        }
        if target >= self.gamma_tail(p)? {
            return Ok(f64::INFINITY);
        }
        let mut acc = 0.0;
        for (k, pc) in self.pieces.iter().enumerate() {
            let weight = (p * pc.beta0).exp();
            let rate = p * pc.alpha;
            let piece_total = match self.pieces.get(k + 1) {
                Some(n) => weight * exp_ratio(rate, n.start - pc.start),
                None => f64::INFINITY,
            };
            if acc + piece_total >= target {
                let rest = (target - acc) / weight;
                let len = if rate == 0.0 { rest } else { (rate * rest).ln_1p() / rate };
                return Ok(pc.start + len);
            }
            acc += piece_total;
        }
        unreachable!("target below B* must be reached by the final piece")
    }

    /// Reference inversion by exponential bracketing and bisection, kept as
    /// an independent route for cross-checks.
    pub fn gamma_inverse_bisect(&self, p: f64, target: f64) -> Result<f64> {
        Self::check_p(p)?;
        if target >= self.gamma_tail(p)? {
            return Ok(f64::INFINITY);
        }
        let mut hi = 1.0;
        while self.exp_integral(p, hi) < target {
            hi *= 2.0;
        }
        bisect_increasing(|t| self.exp_integral(p, t) - target, 0.0, hi, 1e-15)
    }

    /// `int_0^t g(theta) d theta` by adaptive Simpson on each piece of
    /// `alpha`, so the integrand sees a linear `B` on every call.
    pub fn integrate<G: Fn(f64) -> f64>(&self, t: f64, g: G, tol: f64) -> Result<f64> {
        let mut acc = 0.0;
        let mut lo = 0.0;
        for s in self.breakpoints_before(t).chain(std::iter::once(t)) {
            acc += simpson(&g, lo, s, tol)?;
            lo = s;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn step() -> SourceProfile {
        SourceProfile::piecewise(vec![0.0, 1.0], vec![1.0, 0.0]).unwrap()
    }

    #[test]
    fn beta_examples() {
        assert_eq!(SourceProfile::zero().beta(5.0).unwrap(), 0.0);
        assert_eq!(SourceProfile::constant(-1.0).unwrap().beta(2.0).unwrap(), -2.0);
        assert_eq!(step().beta(3.0).unwrap(), 1.0);
        assert!(SourceProfile::zero().beta(-1.0).is_err());
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(SourceProfile::zero().gamma(2.0, 0.4).unwrap(), 0.4);
        let s = SourceProfile::constant(-1.0).unwrap();
        assert!((s.gamma(2.0, 1e3).unwrap() - 0.5).abs() < 1e-15);
        assert!(s.gamma(0.5, 1.0).is_err());
        assert!(s.gamma(2.0, -1.0).is_err());
    }

    #[test]
    fn gamma_constant_matches_quadrature() {
        for &a in &[-1.3, -0.5, 0.7, 2.0] {
            let s = SourceProfile::constant(a).unwrap();
            for &p in &[1.0, 2.0, 3.0] {
                for &t in &[0.1, 1.0, 3.7] {
                    let closed = ((p * a * t).exp() - 1.0) / (p * a);
                    let quad = s.integrate(t, |th| (p * s.b(th)).exp(), 1e-13).unwrap();
                    let g = s.gamma(p, t).unwrap();
                    assert!((g - closed).abs() <= 1e-12 * closed.abs().max(1.0));
                    assert!((g - quad).abs() <= 1e-12 * closed.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn tail_examples() {
        assert_eq!(SourceProfile::zero().gamma_tail(2.0).unwrap(), f64::INFINITY);
        assert!((SourceProfile::constant(-1.0).unwrap().gamma_tail(2.0).unwrap() - 0.5).abs() < 1e-16);
        assert_eq!(SourceProfile::constant(1.0).unwrap().gamma_tail(2.0).unwrap(), f64::INFINITY);
        let decaying = SourceProfile::piecewise(vec![0.0, 1.0], vec![1.0, -2.0]).unwrap();
        let expect = (2f64.exp() - 1.0) / 2.0 + 2f64.exp() / 4.0;
        assert!((decaying.gamma_tail(2.0).unwrap() - expect).abs() < 1e-13);
        assert_eq!(step().gamma_tail(1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn inverse_examples() {
        assert!((SourceProfile::zero().gamma_inverse(2.0, 0.4).unwrap() - 0.4).abs() < 1e-16);
        let s = SourceProfile::constant(-1.0).unwrap();
        assert_eq!(s.gamma_inverse(2.0, 1.0).unwrap(), f64::INFINITY);
        assert_eq!(s.gamma_inverse(2.0, 0.5).unwrap(), f64::INFINITY);
        let t = s.gamma_inverse(2.0, 0.25).unwrap();
        assert!((t - 0.5f64.ln() / -2.0).abs() < 1e-14);
        let tb = s.gamma_inverse_bisect(2.0, 0.25).unwrap();
        assert!((t - tb).abs() < 1e-12);
    }

    #[test]
    fn inverse_roundtrip_and_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sources = [
            SourceProfile::zero(),
            SourceProfile::constant(-1.0).unwrap(),
            SourceProfile::constant(0.8).unwrap(),
            SourceProfile::piecewise(vec![0.0, 0.5, 2.0], vec![1.0, -2.0, 0.3]).unwrap(),
        ];
        for s in &sources {
            for _ in 0..300 {
                let p = rng.random_range(1.0..3.5);
                let t1 = rng.random_range(0.0..4.0);
                let t2 = t1 + rng.random_range(1e-6..2.0);
                let g1 = s.gamma(p, t1).unwrap();
                assert!(s.gamma(p, t2).unwrap() > g1);
                let back = s.gamma_inverse(p, g1).unwrap();
                assert!(back.is_finite());
                let again = s.gamma(p, back).unwrap();
                assert!((again - g1).abs() < 1e-10 * g1.max(1.0), "{again} vs {g1}");
            }
        }
    }

    #[test]
    fn derivative_of_gamma_is_weight() {
        let s = SourceProfile::piecewise(vec![0.0, 0.5, 2.0], vec![1.0, -2.0, 0.3]).unwrap();
        for &t in &[0.2, 0.9, 1.7, 3.0] {
            for &p in &[1.0, 2.0] {
                let h = 1e-5;
                let fd = (s.gamma(p, t + h).unwrap() - s.gamma(p, t - h).unwrap()) / (2.0 * h);
                let exact = (p * s.b(t)).exp();
                assert!(((fd - exact) / exact).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn lipschitz_lower_bound_on_beta() {
        let s = SourceProfile::piecewise(vec![0.0, 0.5, 2.0], vec![1.0, -2.0, 0.3]).unwrap();
        for k in 0..100 {
            let t = k as f64 * 0.05;
            assert!(s.b(t) >= -t * s.sup_norm() - 1e-15);
        }
        assert!(s.min_beta(3.0) <= s.b(2.0));
    }

    #[test]
    fn config_shapes() {
        let a: Alpha = serde_json::from_str(r#"{"alpha":"zero"}"#).unwrap();
        assert_eq!(a, Alpha::Zero {});
        let a: Alpha = serde_json::from_str(r#"{"alpha":"constant","a":-1}"#).unwrap();
        assert_eq!(a, Alpha::Constant { a: -1.0 });
        let a: Alpha = serde_json::from_str(r#"{"alpha":"pw","t":[0,1],"v":[1,0]}"#).unwrap();
        assert_eq!(SourceProfile::new(a).unwrap().beta(3.0).unwrap(), 1.0);
        assert!(serde_json::from_str::<Alpha>(r#"{"alpha":"zero","x":1}"#).is_err());
        assert!(SourceProfile::piecewise(vec![0.5], vec![1.0]).is_err());
    }
}
