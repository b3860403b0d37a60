//! Hot kernels, benchmarked under whichever backend the build selected. Ids are the same
//! for both backends, so a saved baseline compares them:
//!
//! ```text
//! cargo bench -p hlab-core --bench kernels --no-default-features -- --save-baseline sequential
//! cargo bench -p hlab-core --bench kernels -- --baseline-lenient sequential
//! ```
//!
//! Parallel builds also run each kernel inside a one-thread rayon pool (`rayon-1`).

use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use hlab::definetti::flow_mixture;
use hlab::interactions::{bbgky_rhs, builtin_profile, realize_potential, PotentialSpec, ProfileKind};
use hlab::marginals::{free_propagate_marginal, mixture_marginal, sobolev_norm};
use hlab::nbody::{extract_marginal, nbody_evolve, NBodyState};
use hlab::states::{random_smooth_unit, random_sphere_mixture};
use hlab::{GridSpec, HierarchyState};

fn grid() -> GridSpec {
    GridSpec::new(1, 16, 2.0 * PI).unwrap()
}

fn potential(big_n: u64) -> PotentialSpec {
    let profile = builtin_profile(grid(), ProfileKind::Gaussian, 1.2).unwrap();
    realize_potential(&profile, 0.2, big_n).unwrap()
}

type Kernel = Box<dyn Fn() + Send + Sync>;

fn kernels() -> Vec<(&'static str, Kernel)> {
    let g = grid();
    let mu = random_sphere_mixture(g, 4, 1);
    let gamma2 = mixture_marginal(&mu, 2).unwrap();
    let state = HierarchyState::from_mixture(&mu, 2, 0.5).unwrap();
    let v16 = potential(16);
    let nbody = NBodyState::factorized(&random_smooth_unit(g, 2), potential(4)).unwrap();
    let nb2 = nbody.clone();
    vec![
        ("sobolev_norm_k2", Box::new({
            let gamma2 = gamma2.clone();
            move || {
                black_box(sobolev_norm(&gamma2, 1.0).unwrap());
            }
        })),
        ("free_propagate_k2", Box::new(move || {
            black_box(free_propagate_marginal(&gamma2, 0.1));
        })),
        ("extract_marginal_n4_k2", Box::new(move || {
            black_box(extract_marginal(&nbody, 2).unwrap());
        })),
        ("bbgky_rhs_k2", Box::new(move || {
            black_box(bbgky_rhs(&state, &v16).unwrap());
        })),
        ("flow_mixture_4_atoms", Box::new(move || {
            black_box(flow_mixture(&mu, 0.01).unwrap());
        })),
        ("nbody_step_n4", Box::new(move || {
            black_box(nbody_evolve(&nb2, 1e-3, 2e-3, 0).unwrap());
        })),
    ]
}

fn bench(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernels");
    group.sample_size(10);
    for (name, f) in kernels() {
        group.bench_function(name, |b| b.iter(&f));
        #[cfg(feature = "parallel")]
        {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
            group.bench_function(format!("{name}/rayon-1"), |b| b.iter(|| pool.install(&f)));
        }
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
