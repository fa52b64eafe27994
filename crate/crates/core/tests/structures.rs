use bvs_core::family::{half_width, CellSolver, PowerLawFamily};
use bvs_core::kk::{bv_grid_norm, KKSetup};
use bvs_core::triangular::{alternating_v0, TriangularSetup};
use bvs_core::{Flux, PsiContext, SourceProfile};
use proptest::prelude::*;

fn source(kind: u8) -> SourceProfile {
    match kind {
        0 => SourceProfile::zero(),
        1 => SourceProfile::constant(-0.7).unwrap(),
        _ => SourceProfile::piecewise(vec![0.0, 0.4], vec![0.3, -0.8]).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn psi_is_increasing_and_inverts_drift(x in -3.0f64..3.0, dx in 1e-6f64..1.0, t in 0.05f64..4.0, kind in 0u8..3, p in 1.0f64..4.0) {
        let c = PsiContext::new(Flux::power_law(p, 60.0).unwrap(), source(kind));
        let (a, b) = (c.psi(x, t).unwrap(), c.psi(x + dx, t).unwrap());
        prop_assert!(b > a);
        prop_assert!((c.drift(a, t).unwrap() - x).abs() <= 1e-10 * x.abs().max(1.0));
    }

    #[test]
    fn psi_integral_is_even(len in 0.0f64..2.0, t in 0.1f64..3.0, kind in 0u8..3) {
        let c = PsiContext::new(Flux::power_law(2.0, 60.0).unwrap(), source(kind));
        let (l, r) = (c.psi_integral(len, t).unwrap(), c.psi_integral(-len, t).unwrap());
        prop_assert!((l - r).abs() <= 1e-12 * l.abs().max(1e-12));
        prop_assert!(l >= 0.0);
    }

    #[test]
    fn characteristics_keep_order(a in -0.5f64..7.0, b in -0.5f64..7.0, t in 0.0f64..1.0) {
        let s = TriangularSetup::new(2.0, 1.0, 64).unwrap().with_dt(1.0 / 512.0).unwrap();
        let (xa, xb) = (s.characteristic_flow(a, t).unwrap(), s.characteristic_flow(b, t).unwrap());
        if a < b { prop_assert!(xa <= xb); }
        if a > b { prop_assert!(xa >= xb); }
    }

    #[test]
    fn transported_values_come_from_initial_data(x0 in 0.01f64..0.49, t in 0.1f64..1.0) {
        let s = TriangularSetup::new(2.0, 1.0, 16).unwrap();
        let x = s.characteristic_flow(x0, t).unwrap();
        let v = s.v_eval(alternating_v0, x, t).unwrap();
        prop_assert_eq!(v, alternating_v0(x0));
    }
}

#[test]
fn power_law_packets_are_disjoint() {
    let c = PsiContext::new(Flux::power_law(2.0, 4.0).unwrap(), SourceProfile::zero());
    let fam = PowerLawFamily::new(c, 500).unwrap();
    for (n, w) in fam.packets().windows(2).enumerate() {
        assert!(w[0].right() <= w[1].left());
        assert!((w[0].half_width - half_width(n + 1)).abs() < 1e-15);
    }
}

#[test]
fn cell_gap_bound_holds_across_lengths() {
    let c = PsiContext::new(Flux::power_law(3.0, 1.0).unwrap(), SourceProfile::constant(-0.5).unwrap());
    let solver = CellSolver::new(&c, 1.0).unwrap();
    for len in [1e-6, 1e-4, 1e-2, 0.05] {
        let st = solver.solve(0.0, len).unwrap();
        assert!(st.a - st.b >= solver.state_gap_bound(len).unwrap() * (1.0 - 1e-12));
    }
}

#[test]
fn kk_norms_shrink_with_n() {
    let norms: Vec<f64> = [8, 12, 16]
        .iter()
        .map(|&n| bv_grid_norm(&KKSetup::new(2.0, 0.1, [1.0, 0.0], n, 40).unwrap().build_initial_data(256).unwrap().u))
        .collect();
    assert!(norms.windows(2).all(|w| w[1] < w[0]), "{norms:?}");
}

#[test]
fn kk_evolution_moves_mass_right() {
    let s = KKSetup::new(2.0, 0.1, [0.0, 2.0], 6, 30).unwrap();
    let f0 = s.build_initial_data(512).unwrap();
    let f1 = s.evolve(0.9, 512).unwrap();
    let first = |f: &bvs_core::GridField| {
        (0..f.cells).flat_map(|iy| (0..f.cells).map(move |ix| (ix, iy))).find(|&(ix, iy)| f.get(ix, iy)[0] != 0.0).map(|c| c.0)
    };
    assert!(first(&f1.omega).unwrap() >= first(&f0.omega).unwrap());
    assert_eq!(f0.eta, f1.eta);
}
