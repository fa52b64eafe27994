use bvs_core::godunov::{godunov_solve, l1_distance, step_averages, MeshRun};
use bvs_core::{Flux, Packet, PsiContext, SourceProfile};
use proptest::prelude::*;

fn ctx(p: f64, alpha: f64) -> PsiContext {
    let src = if alpha == 0.0 { SourceProfile::zero() } else { SourceProfile::constant(alpha).unwrap() };
    PsiContext::new(Flux::power_law(p, 4.0).unwrap(), src)
}

fn steps() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec(-1.0f64..1.0, 1..6).prop_map(|vals| {
        let w = 0.6 / vals.len() as f64;
        vals.iter().enumerate().map(|(i, &v)| (-0.3 + w * i as f64, -0.3 + w * (i + 1) as f64, v)).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn maximum_principle(pieces in steps(), p in prop::sample::select(vec![1.0, 2.0, 3.0])) {
        let run = MeshRun::new(-1.0, 1.0, 200, 0.9, vec![0.2, 0.5]).unwrap();
        let u0 = step_averages(&pieces, &run);
        let hi = u0.iter().cloned().fold(0.0, f64::max);
        let lo = u0.iter().cloned().fold(0.0, f64::min);
        for s in godunov_solve(&ctx(p, 0.0), &u0, &run).unwrap() {
            prop_assert!(s.values.iter().all(|&v| v <= hi + 1e-12 && v >= lo - 1e-12));
        }
    }

    #[test]
    fn l1_contraction(a in steps(), b in steps()) {
        let c = ctx(2.0, -0.5);
        let run = MeshRun::new(-1.0, 1.0, 200, 0.9, vec![0.3, 0.6]).unwrap();
        let (ua, ub) = (step_averages(&a, &run), step_averages(&b, &run));
        let d0 = l1_distance(&ua, &ub, &run, None);
        let sa = godunov_solve(&c, &ua, &run).unwrap();
        let sb = godunov_solve(&c, &ub, &run).unwrap();
        for (x, y) in sa.iter().zip(&sb) {
            let damp = (-0.5 * x.time).exp();
            prop_assert!(l1_distance(&x.values, &y.values, &run, None) <= d0 * damp + 1e-12);
        }
    }

    #[test]
    fn packet_mass_follows_source(dx in 0.02f64..0.2, delta in 0.1f64..1.0, t in 0.05f64..2.0, alpha in -1.0f64..0.5) {
        let c = ctx(2.0, alpha);
        let pk = Packet::new(&c, 0.0, dx, delta).unwrap();
        let prof = pk.profile(&c, t).unwrap();
        let (l, r) = prof.support().unwrap();
        // Antisymmetric data keep zero mass.
        prop_assert!(prof.integral(l, r).unwrap().abs() < 1e-12);
        let jump = pk.central_jump(&c, t).unwrap();
        prop_assert!(jump > 0.0);
        prop_assert!(prof.eval(pk.center - 1e-12).unwrap() >= prof.eval(pk.center + 1e-12).unwrap());
    }
}

#[test]
fn riemann_oracle_agrees() {
    let c = ctx(1.0, 0.0);
    let run = MeshRun::new(-1.0, 1.0, 4000, 0.9, vec![0.4]).unwrap();
    let u0 = step_averages(&[(-1.0, 0.0, 1.0)], &run);
    let s = &godunov_solve(&c, &u0, &run).unwrap()[0];
    // Shock from (1, 0) at speed 1/2, left edge rarefies from the boundary.
    let x = run.centers();
    let exact: Vec<f64> = x.iter().map(|&x| if x < 0.2 { 1.0 } else { 0.0 }).collect();
    assert!(l1_distance(&s.values, &exact, &run, Some((-0.5, 0.6))) < 5e-3);
}
