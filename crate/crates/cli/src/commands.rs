use std::path::Path;

use bvs_core::exact::{riemann_shock, Segment};
use bvs_core::family::{AsspFamily, CellSolver, PowerLawFamily};
use bvs_core::godunov::{godunov_solve, l1_distance, step_averages, MeshRun};
use bvs_core::kk::{bv_grid_norm, KKSetup};
use bvs_core::triangular::TriangularSetup;
use bvs_core::variation::{p_variation, tvs_upper_bound, PartialSum};
use bvs_core::{Flux, Packet, PacketFamily, PiecewiseProfile, PsiContext, SampledFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::args::*;
use crate::error::CliError;
use crate::output::{csv_bytes, num, write_out, Report};

type Out = Result<Report, CliError>;

fn power_ctx(p: f64, bound: f64, alpha: &AlphaArg) -> Result<PsiContext, CliError> {
    Ok(PsiContext::new(Flux::power_law(p, bound)?, alpha.profile()?))
}

fn profile_rows(sample: &SampledFunction) -> Vec<Vec<String>> {
    sample.xs().iter().zip(sample.vs()).map(|(x, u)| vec![num(*x), num(*u)]).collect()
}

fn profile_json(sample: &SampledFunction) -> serde_json::Value {
    json!(sample.xs().iter().zip(sample.vs()).map(|(x, u)| json!({"x": x, "u": u})).collect::<Vec<_>>())
}

fn sums_rows(rows: &[PartialSum]) -> Vec<Vec<String>> {
    rows.iter().map(|r| vec![r.n.to_string(), num(r.bound), num(r.cumulative)]).collect()
}

pub fn packet(a: &PacketArgs) -> Out {
    let ctx = power_ctx(a.p, a.bound, &a.alpha)?;
    let pk = Packet::new(&ctx, a.center, a.dx, a.delta)?;
    let sample = pk.profile(&ctx, a.t)?.sample(a.samples)?;
    let body = json!({
        "time": a.t,
        "interaction_time": if pk.interaction_time.is_finite() { json!(pk.interaction_time) } else { json!(null) },
        "central_jump": pk.central_jump(&ctx, a.t)?,
        "profile": profile_json(&sample),
    });
    Ok(Report::new("packet", body, vec!["x", "u"], profile_rows(&sample)))
}

/// Exact Riemann profile on `[lo, hi]`: a shock for `left > right`, a fan otherwise.
fn riemann_profile<'a>(
    ctx: &'a PsiContext,
    left: f64,
    right: f64,
    x0: f64,
    t: f64,
    lo: f64,
    hi: f64,
) -> Result<(PiecewiseProfile<'a>, serde_json::Value), CliError> {
    let e = ctx.amplification(t);
    let clip = |x: f64| x.clamp(lo, hi);
    if left > right {
        let s = riemann_shock(ctx, left, right, x0, t)?;
        let segs = vec![Segment::constant(lo, clip(s.position), s.left), Segment::constant(clip(s.position), hi, s.right)];
        let info = json!({"wave": "shock", "position": s.position, "left": s.left, "right": s.right});
        Ok((PiecewiseProfile::new(ctx, t, segs)?, info))
    } else {
        let (zl, zr) = (x0 + ctx.drift(left, t)?, x0 + ctx.drift(right, t)?);
        let segs = vec![
            Segment::constant(lo, clip(zl), left * e),
            Segment::fan(clip(zl), clip(zr), x0),
            Segment::constant(clip(zr), hi, right * e),
        ];
        let info = json!({"wave": "rarefaction", "left_edge": zl, "right_edge": zr});
        Ok((PiecewiseProfile::new(ctx, t, segs)?, info))
    }
}

pub fn riemann(a: &RiemannArgs) -> Out {
    let ctx = power_ctx(a.p, a.bound, &a.alpha)?;
    let (prof, info) = riemann_profile(&ctx, a.left, a.right, a.x0, a.t, a.lo, a.hi)?;
    let sample = prof.sample(a.samples)?;
    let body = json!({"time": a.t, "wave": info, "profile": profile_json(&sample)});
    Ok(Report::new("riemann", body, vec!["x", "u"], profile_rows(&sample)))
}

fn build_family(kind: FamilyKind, p: f64, q: f64, bound: f64, alpha: &AlphaArg, t0: f64, count: usize) -> Result<PacketFamily, CliError> {
    Ok(match kind {
        FamilyKind::Powerlaw => PacketFamily::PowerLaw(PowerLawFamily::new(power_ctx(p, bound, alpha)?, count)?),
        FamilyKind::Assp => PacketFamily::Assp(AsspFamily::new(power_ctx(q, bound, alpha)?, t0, count)?),
    })
}

pub fn family(a: &FamilyArgs) -> Out {
    let fam = build_family(a.kind, a.p, a.q, a.bound, &a.alpha, a.t0, a.count)?;
    let sample = fam.profile(a.t)?.sample(a.samples)?;
    let cells = match &fam {
        PacketFamily::PowerLaw(f) => json!(f
            .packets()
            .iter()
            .enumerate()
            .map(|(i, p)| json!({
                "n": i + 1,
                "center": p.center,
                "half_width": p.half_width,
                "amplitude": p.amplitude,
                "interaction_time": if p.interaction_time.is_finite() { json!(p.interaction_time) } else { json!(null) },
            }))
            .collect::<Vec<_>>()),
        PacketFamily::Assp(f) => json!(f.cells()),
    };
    let body = json!({"time": a.t, "cells": cells});
    Ok(Report::new("family", body, vec!["x", "u"], profile_rows(&sample)))
}

pub fn assp(a: &AsspArgs) -> Out {
    let ctx = power_ctx(a.q, a.bound, &a.alpha)?;
    let solver = CellSolver::new(&ctx, a.t0)?;
    let st = solver.solve(a.left, a.right)?;
    let len = a.right - a.left;
    let tau = solver.tau(a.left, st.a, st.b)?;
    let (rg, rf) = solver.residuals(st.a, st.b, len)?;
    let gap = solver.state_gap_bound(len)?;
    let body = json!({
        "a": st.a, "b": st.b, "tau": tau, "method": st.method, "iterations": st.iterations,
        "residual_g": rg, "residual_f": rf, "state_gap_bound": gap,
    });
    let row = vec![num(st.a), num(st.b), num(tau), num(rg), num(rf), num(gap)];
    Ok(Report::new("assp", body, vec!["a", "b", "tau", "residual_g", "residual_f", "state_gap_bound"], vec![row]))
}

/// Reads a `x,u` CSV profile.
pub fn read_profile(path: &Path) -> Result<SampledFunction, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| CliError::Config(e.to_string()))?.clone();
    if headers.len() < 2 || &headers[0] != "x" || &headers[1] != "u" {
        return Err(CliError::Config(format!("{}: expected columns x,u", path.display())));
    }
    let (mut xs, mut vs) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Config(e.to_string()))?;
        let parse = |i: usize| rec[i].trim().parse::<f64>().map_err(|e| CliError::Config(format!("{:?}: {e}", &rec[i])));
        xs.push(parse(0)?);
        vs.push(parse(1)?);
    }
    Ok(SampledFunction::new(xs, vs)?)
}

pub fn variation(a: &VariationArgs) -> Out {
    if !(a.s > 0.0 && a.s <= 1.0) {
        return Err(CliError::Config(format!("need 0 < s <= 1, got {}", a.s)));
    }
    let f = read_profile(&a.input)?;
    let r = p_variation(&f, 1.0 / a.s)?;
    let body = json!({"s": a.s, "p": r.p, "value": r.value, "subdivision": r.subdivision});
    Ok(Report::new("variation", body, vec!["s", "p", "value"], vec![vec![num(a.s), num(r.p), num(r.value)]]))
}

pub fn diverge(a: &DivergeArgs) -> Out {
    let fam = build_family(a.family, a.p, a.q, a.bound, &a.alpha, a.t0, a.count)?;
    let rows = fam.tvs_partial_sums(a.t, a.s, a.count)?;
    let body = json!({"time": a.t, "s": a.s, "rows": rows});
    Ok(Report::new("diverge", body, vec!["n", "bound", "cumulative"], sums_rows(&rows)))
}

pub fn oracle(a: &OracleArgs) -> Out {
    let flux = a.flux.0.build()?;
    let ctx = PsiContext::new(flux, a.alpha.profile()?);
    let mut times = a.t.clone();
    times.sort_by(f64::total_cmp);
    let run = MeshRun::new(a.lo, a.hi, a.cells, a.cfl, times.clone())?;
    let family = match a.init {
        InitKind::Family => Some(PowerLawFamily::new(ctx.clone(), a.count)?),
        _ => None,
    };
    let packet = match a.init {
        InitKind::Packet => Some(Packet::new(&ctx, a.x0, a.dx, a.delta)?),
        _ => None,
    };
    let pieces: Vec<(f64, f64, f64)> = match a.init {
        InitKind::Riemann => vec![(a.lo, a.x0, a.left), (a.x0, a.hi, a.right)],
        InitKind::Packet => {
            let p = packet.as_ref().expect("built above");
            vec![(p.left(), p.center, p.amplitude), (p.center, p.right(), -p.amplitude)]
        }
        InitKind::Family => family
            .as_ref()
            .expect("built above")
            .packets()
            .iter()
            .flat_map(|p| [(p.left(), p.center, p.amplitude), (p.center, p.right(), -p.amplitude)])
            .collect(),
    };
    let snaps = godunov_solve(&ctx, &step_averages(&pieces, &run), &run)?;
    let t_end = *times.last().expect("validated");
    let level = a.left.abs().max(a.right.abs()) * ctx.amplification(t_end);
    let speed = ctx.flux.max_speed(level);
    let (mut rows, mut errors, mut table) = (Vec::new(), Vec::new(), Vec::new());
    for s in &snaps {
        if s.time == 0.0 {
            continue;
        }
        let exact = match a.init {
            InitKind::Riemann => riemann_profile(&ctx, a.left, a.right, a.x0, s.time, a.lo, a.hi)?.0.cell_averages(a.lo, a.hi, a.cells)?,
            InitKind::Packet => packet.as_ref().expect("built above").profile(&ctx, s.time)?.cell_averages(a.lo, a.hi, a.cells)?,
            InitKind::Family => family.as_ref().expect("built above").profile(s.time)?.cell_averages(a.lo, a.hi, a.cells)?,
        };
        // Riemann data feel the zero exterior; compare away from the walls.
        let window = match a.init {
            InitKind::Riemann => Some((a.lo + speed * s.time, a.hi - speed * s.time)),
            _ => None,
        };
        let err = l1_distance(&s.values, &exact, &run, window);
        errors.push(json!({"cells": a.cells, "time": s.time, "l1_error": err}));
        table.push(vec![a.cells.to_string(), num(s.time), num(err)]);
        for ((x, u), e) in run.centers().iter().zip(&s.values).zip(&exact) {
            rows.push(vec![num(s.time), num(*x), num(*u), num(*e)]);
        }
    }
    if let Some(path) = &a.errors {
        write_out(Some(path), &csv_bytes(&["cells", "time", "l1_error"], &table)?)?;
    }
    let body = json!({"cells": a.cells, "errors": errors});
    Ok(Report::new("oracle", body, vec!["time", "x", "u", "exact"], rows))
}

pub fn triangular(a: &TriangularArgs, seed: u64) -> Out {
    let s = TriangularSetup::new(a.p, a.horizon, a.count)?;
    let seam = if a.t > 0.0 { Some(s.seam_defects(a.t)?) } else { None };
    let sum = s.v_divergence_sums(a.t, a.sprime, a.count, a.jacobian)?;
    let tv = s.packet_tv_bounds(a.t, a.eps, a.count)?;
    let sums: Vec<PartialSum> = tv.iter().map(|(r, _)| *r).collect();
    let under = tv.iter().filter(|(r, m)| *m < r.bound * (1.0 - 1e-12)).count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = s.support();
    let starts: Vec<f64> = (0..2 * a.pairs).map(|_| rng.random_range(lo - 0.5..hi + 0.5)).collect();
    let ends = s.flow_batch(&starts, a.t)?;
    let flipped = (0..a.pairs)
        .filter(|&k| {
            let (i, j) = (2 * k, 2 * k + 1);
            starts[i] != starts[j] && (starts[i] < starts[j]) != (ends[i] < ends[j])
        })
        .count();
    let body = json!({
        "time": a.t,
        "seam_defect": seam,
        "lipschitz_bound": if a.t > 0.0 { json!(s.lipschitz_bound(a.t)) } else { json!(null) },
        "divergence_sum": sum,
        "divergence_expected": a.count as f64 * 2f64.powf(1.0 / a.sprime),
        "tv_bounds": sums,
        "packets_under_bound": under,
        "order_pairs": a.pairs,
        "order_violations": flipped,
    });
    Ok(Report::new("triangular", body, vec!["n", "bound", "cumulative"], sums_rows(&sums)))
}

pub fn kk(a: &KkArgs) -> Out {
    if a.b.len() != 2 {
        return Err(CliError::Config("--b takes two components".into()));
    }
    let s = KKSetup::new(a.p, a.delta, [a.b[0], a.b[1]], a.n, a.depth)?;
    let f0 = s.build_initial_data(a.res)?;
    let ft = s.evolve(a.t, a.res)?;
    let mut acc = 0.0;
    let e = a.p + a.p * a.delta;
    let sums: Vec<PartialSum> = (a.n..=a.n + a.ni)
        .map(|i| {
            let bound = 0.5 * a.t * (s.m(i) - 1.0) * (i as f64).powf(-e);
            acc += bound;
            PartialSum { n: i, bound, cumulative: acc }
        })
        .collect();
    if let Some(path) = &a.grid {
        let h = f0.u.cell_size();
        let mut rows = Vec::new();
        for iy in 0..f0.u.cells {
            for ix in 0..f0.u.cells {
                let v = f0.u.get(ix, iy);
                if v.iter().any(|c| *c != 0.0) {
                    let (x, y) = (f0.u.lo + h * (ix as f64 + 0.5), f0.u.lo + h * (iy as f64 + 0.5));
                    rows.push(vec![num(x), num(y), num(v[0]), num(v[1])]);
                }
            }
        }
        write_out(Some(path), &csv_bytes(&["x", "y", "u1", "u2"], &rows)?)?;
    }
    let body = json!({
        "n": a.n,
        "time": a.t,
        "cells": a.res,
        "M": s.support(),
        "support_radius": s.support_radius(),
        "sup_grid": f0.u.sup_norm(),
        "sup_exact": s.sup_norm_exact(),
        "sup_bound": s.sup_bound(),
        "bv_u0": bv_grid_norm(&f0.u),
        "bv_eta0": bv_grid_norm(&f0.eta),
        "bv_omega0": bv_grid_norm(&f0.omega),
        "bv_omega_t": bv_grid_norm(&ft.omega),
        "eta_bv_bound": s.eta_bv_bound(),
        "jump_sum": s.jump_sum_lower_bound(a.t, a.ni)?,
    });
    Ok(Report::new("kk", body, vec!["n", "bound", "cumulative"], sums_rows(&sums)))
}

pub fn bound(a: &BoundArgs) -> Out {
    let ctx = power_ctx(a.p, a.bound, &a.alpha)?;
    let horizon = a.horizon.unwrap_or(a.t);
    let b = tvs_upper_bound(&ctx, a.t, a.a, a.b, horizon)?;
    let body = json!({"time": a.t, "a": a.a, "b": a.b, "horizon": horizon, "bound": b});
    Ok(Report::new("bound", body, vec!["t", "a", "b", "bound"], vec![vec![num(a.t), num(a.a), num(a.b), num(b)]]))
}
