//! Sequential (one-thread pool) against the default rayon pool on the
//! data-parallel kernels.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use bvs_core::godunov::{mesh_study, step_averages};
use bvs_core::kk::{bv_grid_norm, KKSetup};
use bvs_core::triangular::TriangularSetup;
use bvs_core::{Flux, Packet, PacketFamily, PowerLawFamily, PsiContext, SourceProfile};

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    vec![
        ("sequential", rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
        ("parallel", rayon::ThreadPoolBuilder::new().build().unwrap()),
    ]
}

fn kernels(c: &mut Criterion) {
    let ctx = PsiContext::new(Flux::power_law(2.0, 4.0).unwrap(), SourceProfile::zero());
    let family = PacketFamily::PowerLaw(PowerLawFamily::new(ctx.clone(), 2000).unwrap());
    let packet = Packet::new(&ctx, 0.0, 0.1, 0.5).unwrap();
    let kk = KKSetup::new(2.0, 0.1, [0.6, 0.8], 10, 64).unwrap();
    let tri = TriangularSetup::new(2.0, 1.0, 64).unwrap().with_dt(1.0 / 1024.0).unwrap();
    let starts: Vec<f64> = (0..2000).map(|i| i as f64 * 0.003).collect();

    let mut group = c.benchmark_group("kernels");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(format!("family_variation/{name}"), |b| {
            b.iter(|| pool.install(|| black_box(family.measured_variation(1.0, 2.0, 8).unwrap().value)))
        });
        group.bench_function(format!("mesh_study/{name}"), |b| {
            b.iter(|| {
                pool.install(|| {
                    mesh_study(
                        &ctx,
                        (-0.5, 0.5),
                        &[512, 1024, 2048],
                        0.9,
                        &[0.4],
                        |run| Ok(step_averages(&[(-0.1, 0.0, 0.5), (0.0, 0.1, -0.5)], run)),
                        |run, t| packet.profile(&ctx, t)?.cell_averages(run.lo, run.hi, run.cells),
                    )
                    .unwrap()
                })
            })
        });
        group.bench_function(format!("kk_grid/{name}"), |b| {
            b.iter(|| pool.install(|| black_box(bv_grid_norm(&kk.build_initial_data(1024).unwrap().u))))
        });
        group.bench_function(format!("characteristics/{name}"), |b| {
            b.iter(|| pool.install(|| black_box(tri.flow_batch(&starts, 1.0).unwrap())))
        });
    }
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
