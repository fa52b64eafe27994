//! First-order Godunov finite volumes for `u_t + f(u)_x = alpha(t) u`,
//! used as an independent check of the exact structures.
//!
//! Transport uses the exact Riemann flux of a convex `f`; the source is then
//! applied through the exact factor `e^{B(t + dt) - B(t)}`.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::flux::Flux;
use crate::psi::PsiContext;

#[derive(Debug, Clone, PartialEq)]
pub struct MeshRun {
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
    pub cfl: f64,
    /// Output times, ascending; the run ends at the last one.
    pub snapshots: Vec<f64>,
}

impl MeshRun {
    pub fn new(lo: f64, hi: f64, cells: usize, cfl: f64, snapshots: Vec<f64>) -> Result<Self> {
        if !(lo < hi) {
            return Err(invalid(format!("empty domain [{lo}, {hi}]")));
        }
        if cells < 8 {
            return Err(invalid(format!("need at least 8 cells, got {cells}")));
        }
        if !(cfl > 0.0 && cfl < 1.0) {
            return Err(invalid(format!("CFL number must lie in (0, 1), got {cfl}")));
        }
        if snapshots.is_empty() || snapshots.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(invalid("snapshot times must be finite, non-negative and non-empty"));
        }
        if snapshots.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("snapshot times must be ascending"));
        }
        Ok(MeshRun { lo, hi, cells, cfl, snapshots })
    }

    pub fn dx(&self) -> f64 {
        (self.hi - self.lo) / self.cells as f64
    }

    pub fn t_end(&self) -> f64 {
        *self.snapshots.last().expect("validated non-empty")
    }

    pub fn centers(&self) -> Vec<f64> {
        let h = self.dx();
        (0..self.cells).map(|i| self.lo + h * (i as f64 + 0.5)).collect()
    }

    /// Cell `i` spans `[edge(i), edge(i + 1)]`.
    pub fn edge(&self, i: usize) -> f64 {
        self.lo + self.dx() * i as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub time: f64,
    pub values: Vec<f64>,
}

/// Exact Riemann flux of a convex `f` with minimum at `flux.sonic_point()`.
pub fn godunov_flux(flux: &Flux, ul: f64, ur: f64) -> f64 {
    if ul <= ur {
        flux.f(flux.sonic_point().clamp(ul, ur))
    } else {
        flux.f(ul).max(flux.f(ur))
    }
}

/// One transport step of length `dt` with zero exterior states.
pub fn transport_step(flux: &Flux, u: &mut [f64], faces: &mut Vec<f64>, dt_over_dx: f64) {
    let n = u.len();
    faces.clear();
    faces.push(godunov_flux(flux, 0.0, u[0]));
    for i in 0..n - 1 {
        faces.push(godunov_flux(flux, u[i], u[i + 1]));
    }
    faces.push(godunov_flux(flux, u[n - 1], 0.0));
    for i in 0..n {
        u[i] -= dt_over_dx * (faces[i + 1] - faces[i]);
    }
}

fn max_speed(flux: &Flux, u: &[f64]) -> f64 {
    u.iter().fold(0.0f64, |m, &v| m.max(flux.df(v).abs()))
}

/// Cell averages at every snapshot time.
pub fn godunov_solve(ctx: &PsiContext, u0: &[f64], run: &MeshRun) -> Result<Vec<Snapshot>> {
    if u0.len() != run.cells {
        return Err(invalid(format!("{} initial averages for {} cells", u0.len(), run.cells)));
    }
    if u0.iter().any(|v| !v.is_finite()) {
        return Err(invalid("initial data must be finite"));
    }
    let dx = run.dx();
    let mut u = u0.to_vec();
    let mut faces = Vec::with_capacity(run.cells + 1);
    let mut t = 0.0;
    let mut out = Vec::with_capacity(run.snapshots.len());
    for &target in &run.snapshots {
        while t < target {
            let speed = max_speed(&ctx.flux, &u);
            let mut dt = if speed > 0.0 { run.cfl * dx / speed } else { target - t };
            if t + dt >= target {
                dt = target - t;
            }
            transport_step(&ctx.flux, &mut u, &mut faces, dt / dx);
            let next = if t + dt >= target { target } else { t + dt };
            let factor = (ctx.source.b(next) - ctx.source.b(t)).exp();
            if factor != 1.0 {
                u.iter_mut().for_each(|v| *v *= factor);
            }
            t = next;
            if let Some(i) = u.iter().position(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!("non-finite value in cell {i} at t = {t}")));
            }
        }
        out.push(Snapshot { time: target, values: u.clone() });
    }
    Ok(out)
}

/// Exact averages of a step function given as `(left, right, value)` pieces.
pub fn step_averages(pieces: &[(f64, f64, f64)], run: &MeshRun) -> Vec<f64> {
    let h = run.dx();
    (0..run.cells)
        .map(|i| {
            let (a, b) = (run.edge(i), run.edge(i + 1));
            pieces
                .iter()
                .map(|&(l, r, v)| (r.min(b) - l.max(a)).max(0.0) * v)
                .sum::<f64>()
                / h
        })
        .collect()
}

/// `sum |a_i - b_i| dx` over the cells whose centers lie in `window`.
pub fn l1_distance(a: &[f64], b: &[f64], run: &MeshRun, window: Option<(f64, f64)>) -> f64 {
    let h = run.dx();
    run.centers()
        .iter()
        .zip(a.iter().zip(b))
        .filter(|(x, _)| window.is_none_or(|(lo, hi)| **x >= lo && **x <= hi))
        .map(|(_, (u, v))| (u - v).abs() * h)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StudyRow {
    pub cells: usize,
    pub time: f64,
    pub l1_error: f64,
}

/// L1 errors against exact cell averages for several resolutions; the
/// resolutions run concurrently.
///
/// `initial(run)` builds the starting averages, `exact(run, t)` the exact
/// averages at time `t`.
pub fn mesh_study<I, E>(
    ctx: &PsiContext,
    domain: (f64, f64),
    resolutions: &[usize],
    cfl: f64,
    times: &[f64],
    initial: I,
    exact: E,
) -> Result<Vec<StudyRow>>
where
    I: Fn(&MeshRun) -> Result<Vec<f64>> + Sync + Send,
    E: Fn(&MeshRun, f64) -> Result<Vec<f64>> + Sync + Send,
{
    let per_mesh = crate::exec::map(resolutions, |&cells| -> Result<Vec<StudyRow>> {
        let run = MeshRun::new(domain.0, domain.1, cells, cfl, times.to_vec())?;
        let snaps = godunov_solve(ctx, &initial(&run)?, &run)?;
        snaps
            .iter()
            .map(|s| {
                let e = exact(&run, s.time)?;
                Ok(StudyRow { cells, time: s.time, l1_error: l1_distance(&s.values, &e, &run, None) })
            })
            .collect()
    });
    let mut rows = Vec::new();
    for r in per_mesh {
        rows.extend(r?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{riemann_shock, Packet};
    use crate::SourceProfile;

    fn burgers() -> PsiContext {
        PsiContext::new(Flux::power_law(1.0, 4.0).unwrap(), SourceProfile::zero())
    }

    #[test]
    fn flux_cases() {
        let f = Flux::power_law(1.0, 4.0).unwrap();
        assert_eq!(godunov_flux(&f, -1.0, 2.0), 0.0);
        assert_eq!(godunov_flux(&f, 1.0, 2.0), 0.5);
        assert_eq!(godunov_flux(&f, -2.0, -1.0), 0.5);
        assert_eq!(godunov_flux(&f, 1.0, -1.0), 0.5);
        assert_eq!(godunov_flux(&f, 2.0, -1.0), 2.0);
    }

    #[test]
    fn zero_stays_zero() {
        let run = MeshRun::new(-1.0, 1.0, 64, 0.9, vec![0.5, 1.0]).unwrap();
        let snaps = godunov_solve(&burgers(), &vec![0.0; 64], &run).unwrap();
        assert!(snaps.iter().all(|s| s.values.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn stationary_burgers_shock() {
        let c = burgers();
        let run = MeshRun::new(-1.0, 1.0, 2000, 0.9, vec![0.5]).unwrap();
        let u0 = step_averages(&[(-0.8, 0.0, 1.0), (0.0, 0.8, -1.0)], &run);
        let snap = &godunov_solve(&c, &u0, &run).unwrap()[0];
        let shock = riemann_shock(&c, 1.0, -1.0, 0.0, 0.5).unwrap();
        let exact: Vec<f64> = run
            .centers()
            .iter()
            .map(|&x| if x < shock.position { shock.left } else { shock.right })
            .collect();
        let err = l1_distance(&snap.values, &exact, &run, Some((-0.2, 0.2)));
        assert!(err < 2.0 * run.dx(), "{err}");
    }

    #[test]
    fn conservation_with_source() {
        let c = PsiContext::new(Flux::power_law(2.0, 4.0).unwrap(), SourceProfile::constant(-1.0).unwrap());
        let run = MeshRun::new(-0.5, 0.5, 256, 0.8, vec![0.3, 0.9]).unwrap();
        let u0 = step_averages(&[(-0.2, 0.0, 0.7), (0.0, 0.1, -0.3)], &run);
        let m0: f64 = u0.iter().sum::<f64>() * run.dx();
        for s in godunov_solve(&c, &u0, &run).unwrap() {
            let m: f64 = s.values.iter().sum::<f64>() * run.dx();
            assert!((m - m0 * (-s.time).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn packet_errors_shrink() {
        let c = PsiContext::new(Flux::power_law(2.0, 4.0).unwrap(), SourceProfile::constant(-1.0).unwrap());
        let pk = Packet::new(&c, 0.0, 0.1, 0.5).unwrap();
        let rows = mesh_study(
            &c,
            (-0.2, 0.2),
            &[256, 512, 1024],
            0.9,
            &[0.3],
            |run| Ok(step_averages(&[(-0.1, 0.0, 0.5), (0.0, 0.1, -0.5)], run)),
            |run, t| pk.profile(&c, t)?.cell_averages(run.lo, run.hi, run.cells),
        )
        .unwrap();
        assert!(rows[0].l1_error / rows[1].l1_error >= 1.3);
        assert!(rows[1].l1_error / rows[2].l1_error >= 1.3);
    }

    #[test]
    fn rejects_bad_runs() {
        assert!(MeshRun::new(0.0, 1.0, 4, 0.5, vec![1.0]).is_err());
        assert!(MeshRun::new(0.0, 1.0, 16, 1.5, vec![1.0]).is_err());
        assert!(MeshRun::new(0.0, 1.0, 16, 0.5, vec![1.0, 0.5]).is_err());
        let run = MeshRun::new(0.0, 1.0, 16, 0.5, vec![1.0]).unwrap();
        assert!(godunov_solve(&burgers(), &[0.0; 3], &run).is_err());
    }
}
