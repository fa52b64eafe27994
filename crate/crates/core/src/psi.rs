//! The implicit function `Psi(x, t)` defined by
//! `x = int_0^t f'(Psi e^{B(theta)}) d theta`, which generalizes
//! `(f')^{-1}(x / t)` to balance laws with linear source.

use crate::error::{domain, invalid, Error, Result};
use crate::flux::{Degeneracy, Flux};
use crate::numeric::{abs_pow, illinois_increasing};
use crate::source::SourceProfile;

/// Relative tolerance for every time quadrature in this module.
pub const QUAD_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct PsiContext {
    pub flux: Flux,
    pub source: SourceProfile,
    pub root_tol: f64,
}

impl PsiContext {
    pub fn new(flux: Flux, source: SourceProfile) -> Self {
        PsiContext { flux, source, root_tol: 1e-12 }
    }

    pub fn with_root_tol(mut self, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(invalid("root tolerance must be positive"));
        }
        self.root_tol = tol;
        Ok(self)
    }

    /// Exponent used by the power-law closed forms.
    fn power(&self) -> Option<f64> {
        self.flux.power()
    }

    /// `e^{B(t)}`.
    pub fn amplification(&self, t: f64) -> f64 {
        self.source.b(t).exp()
    }

    /// `int_0^t f'(v e^{B})`: the displacement after time `t` of the
    /// characteristic carrying the value `v e^{B}`. Infinite `t` is allowed
    /// for power-law fluxes, where it equals `v |v|^{p-1} B*`.
    pub fn drift(&self, v: f64, t: f64) -> Result<f64> {
        if v == 0.0 || t == 0.0 {
            return Ok(0.0);
        }
        match self.power() {
            Some(p) => Ok(v * abs_pow(v, p - 1.0) * self.source.exp_integral(p, t)),
            None => {
                if t.is_infinite() {
                    return Err(invalid("infinite horizon needs a power-law flux"));
                }
                self.source.integrate(t, |th| self.flux.df(v * self.source.b(th).exp()), QUAD_TOL)
            }
        }
    }

    /// Quadrature form of [`Self::drift`], used as the independent route.
    pub fn drift_numeric(&self, v: f64, t: f64) -> Result<f64> {
        self.source.integrate(t, |th| self.flux.df(v * self.source.b(th).exp()), QUAD_TOL)
    }

    /// `int_0^t f(v e^{B}) e^{-B}`.
    pub fn scaled_flux_integral(&self, v: f64, t: f64) -> Result<f64> {
        if v == 0.0 || t == 0.0 {
            return Ok(0.0);
        }
        match self.power() {
            Some(p) => Ok(abs_pow(v, p + 1.0) / (p + 1.0) * self.source.exp_integral(p, t)),
            None => self.source.integrate(
                t,
                |th| {
                    let e = self.source.b(th).exp();
                    self.flux.f(v * e) / e
                },
                QUAD_TOL,
            ),
        }
    }

    fn check_time(t: f64) -> Result<()> {
        if t > 0.0 {
            Ok(())
        } else {
            Err(domain(format!("Psi needs t > 0, got {t}")))
        }
    }

    /// Largest admissible `|Psi|` at time `t`.
    pub fn value_bound(&self, t: f64) -> f64 {
        self.flux.bound() * (-self.source.min_beta(t)).exp()
    }

    fn check_range(&self, v: f64, t: f64) -> Result<f64> {
        let cap = self.value_bound(t);
        if v.abs() > cap * (1.0 + 1e-12) {
            Err(Error::Range(format!("Psi = {v} escapes the flux interval (|Psi| <= {cap})")))
        } else {
            Ok(v)
        }
    }

    /// `Psi(x, t)`; closed form `sgn(x)|x|^{1/p} gamma_p(t)^{-1/p}` for power
    /// laws, root-finding otherwise.
    pub fn psi(&self, x: f64, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        let v = match self.power() {
            Some(p) => {
                let g = self.source.exp_integral(p, t);
                x.signum() * (x.abs() / g).powf(1.0 / p)
            }
            None => return self.psi_numeric(x, t),
        };
        self.check_range(if x == 0.0 { 0.0 } else { v }, t)
    }

    /// `Psi(x, t)` by a bracketed monotone root search on `v -> int_0^t f'(v e^B) - x`
    /// over `[-M e^{||alpha|| t}, M e^{||alpha|| t}]`, whatever the flux kind.
    pub fn psi_numeric(&self, x: f64, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        if x == 0.0 {
            return Ok(0.0);
        }
        let span = self.flux.bound() * (self.source.sup_norm() * t).exp();
        let g = |v: f64| self.drift_numeric(v, t).map_or(f64::NAN, |d| d - x);
        // Grow the bracket outward from 0 on the side of the root.
        let dir = x.signum();
        let (mut near, mut far) = (0.0, (1.0f64).min(span));
        while far < span && dir * g(dir * far) < 0.0 {
            near = far;
            far = (far * 4.0).min(span);
        }
        let (lo, hi) = if dir > 0.0 { (near, far) } else { (-far, -near) };
        let v = illinois_increasing(g, lo, hi, 1e-16).map_err(|e| match e {
            Error::Range(_) => Error::Range(format!("no Psi root for x = {x}, t = {t} within +-{span}")),
            other => other,
        })?;
        self.check_range(v, t)
    }

    /// `x - int_0^t f'(v e^B)`, the implicit-equation residual.
    pub fn residual(&self, x: f64, t: f64, v: f64) -> Result<f64> {
        Ok(x - self.drift_numeric(v, t)?)
    }

    /// Both sides of the Hölder estimate
    /// `|Psi(z1)-Psi(z2)| <= (|z1-z2| / (c0 gamma_p(t)))^{1/p}`.
    pub fn psi_holder_gap(&self, z1: f64, z2: f64, t: f64) -> Result<(f64, f64)> {
        let Degeneracy { p, c0 } = self
            .flux
            .degeneracy()
            .ok_or_else(|| invalid("Hölder estimate needs flux degeneracy metadata"))?;
        let lhs = (self.psi(z1, t)? - self.psi(z2, t)?).abs();
        let g = self.source.gamma(p, t)?;
        let rhs = ((z1 - z2).abs() / (c0 * g)).powf(1.0 / p);
        Ok((lhs, rhs))
    }

    /// `int_0^L Psi(y, t) dy = V L - int_0^t f(V e^B) e^{-B}` with
    /// `V = Psi(L, t)` (integration by parts through the inverse map).
    pub fn psi_integral(&self, len: f64, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        if len == 0.0 {
            return Ok(0.0);
        }
        if let Some(p) = self.power() {
            let g = self.source.exp_integral(p, t);
            return Ok(p / (p + 1.0) * abs_pow(len, 1.0 + 1.0 / p) * g.powf(-1.0 / p));
        }
        let v = self.psi(len, t)?;
        Ok(v * len - self.scaled_flux_integral(v, t)?)
    }

    /// `C(T) = max_{|u| <= M e^{||alpha|| T}} |f'(u)|`, the finite-speed
    /// constant used for support bookkeeping.
    pub fn speed_bound(&self, horizon: f64) -> f64 {
        self.flux.max_speed(self.flux.bound() * (self.source.sup_norm() * horizon).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ctx(p: f64, source: SourceProfile) -> PsiContext {
        PsiContext::new(Flux::power_law(p, 50.0).unwrap(), source)
    }

    #[test]
    fn psi_examples() {
        let c = ctx(2.0, SourceProfile::zero());
        assert!((c.psi(4.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(c.psi(0.0, 1.0).unwrap(), 0.0);
        let burgers = PsiContext::new(
            Flux::convex(|u| u * u / 2.0, |u| u, 10.0).unwrap(),
            SourceProfile::constant(0.3).unwrap(),
        );
        assert_eq!(burgers.psi(0.0, 1.0).unwrap(), 0.0);

        let damped = ctx(2.0, SourceProfile::constant(-1.0).unwrap());
        let t = 2f64.ln() / 2.0;
        let g = damped.source.gamma(2.0, t).unwrap();
        assert!((g - 0.25).abs() < 1e-15);
        assert!((damped.psi(0.25, t).unwrap() - 1.0).abs() < 1e-14);
        assert!((damped.psi_numeric(0.25, t).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn psi_errors() {
        let c = ctx(2.0, SourceProfile::zero());
        assert!(matches!(c.psi(1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(c.psi(1.0, -1.0), Err(Error::Domain(_))));
        let tight = PsiContext::new(Flux::power_law(2.0, 1.0).unwrap(), SourceProfile::zero());
        assert!(matches!(tight.psi(4.0, 1.0), Err(Error::Range(_))));
        assert!(matches!(tight.psi_numeric(4.0, 1.0), Err(Error::Range(_))));
    }

    #[test]
    fn holder_gap_examples() {
        let c = ctx(2.0, SourceProfile::zero());
        assert_eq!(c.psi_holder_gap(1.0, 1.0, 1.0).unwrap(), (0.0, 0.0));
        let (l, r) = c.psi_holder_gap(1.0, 0.0, 1.0).unwrap();
        assert!((l - 1.0).abs() < 1e-15 && (r - 2f64.sqrt()).abs() < 1e-15);
        let b = ctx(1.0, SourceProfile::zero());
        let (l, r) = b.psi_holder_gap(2.0, 1.0, 4.0).unwrap();
        assert!((l - 0.25).abs() < 1e-15 && (r - 0.25).abs() < 1e-15);
        let plain = PsiContext::new(Flux::convex(|u| u * u, |u| 2.0 * u, 1.0).unwrap(), SourceProfile::zero());
        assert!(plain.psi_holder_gap(0.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn holder_bound_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let sources = [SourceProfile::zero(), SourceProfile::constant(-1.0).unwrap(), SourceProfile::constant(0.5).unwrap()];
        for &p in &[1.0, 2.0, 3.0] {
            for s in &sources {
                let c = ctx(p, s.clone());
                for _ in 0..1500 {
                    let z1 = rng.random_range(-3.0..3.0);
                    let z2 = rng.random_range(-3.0..3.0);
                    let t = rng.random_range(0.1..3.0);
                    let (l, r) = c.psi_holder_gap(z1, z2, t).unwrap();
                    assert!(l <= r + c.root_tol, "p={p} z=({z1},{z2}) t={t}: {l} > {r}");
                }
            }
        }
    }

    #[test]
    fn monotone_and_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let c = ctx(3.0, SourceProfile::piecewise(vec![0.0, 1.0], vec![-0.5, 0.5]).unwrap());
        for _ in 0..500 {
            let a = rng.random_range(-2.0..2.0);
            let b = a + rng.random_range(1e-6..1.0);
            let t = rng.random_range(0.1..2.0);
            assert!(c.psi(a, t).unwrap() < c.psi(b, t).unwrap());
            assert!(a * c.psi(a, t).unwrap() > 0.0);
        }
    }

    #[test]
    fn general_flux_matches_closed_form() {
        // p = 2 power law written as a generic convex flux.
        let generic = PsiContext::new(
            Flux::convex(|u| u.abs().powi(3) / 3.0, |u| u * u.abs(), 50.0).unwrap(),
            SourceProfile::piecewise(vec![0.0, 0.7], vec![-1.0, 0.4]).unwrap(),
        );
        let exact = ctx(2.0, generic.source.clone());
        for &(x, t) in &[(0.3, 0.5), (-1.2, 1.3), (2.0, 2.5)] {
            let a = generic.psi(x, t).unwrap();
            let b = exact.psi(x, t).unwrap();
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            assert!(generic.residual(x, t, a).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn psi_integral_matches_quadrature() {
        let generic = PsiContext::new(
            Flux::convex(|u| u.abs().powi(3) / 3.0, |u| u * u.abs(), 50.0).unwrap(),
            SourceProfile::constant(-0.5).unwrap(),
        );
        let exact = ctx(2.0, generic.source.clone());
        for &len in &[0.4, -0.7] {
            let a = generic.psi_integral(len, 1.3).unwrap();
            let b = exact.psi_integral(len, 1.3).unwrap();
            let q = crate::numeric::simpson(&|y: f64| exact.psi(y, 1.3).unwrap(), 0.0, len, 1e-12).unwrap();
            assert!((a - b).abs() < 1e-9 && (b - q).abs() < 1e-7, "{a} {b} {q}");
        }
    }

    #[test]
    fn speed_bound_burgers() {
        let c = ctx(1.0, SourceProfile::zero());
        assert_eq!(c.speed_bound(3.0), 50.0);
    }
}
