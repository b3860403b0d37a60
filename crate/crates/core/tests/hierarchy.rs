use std::f64::consts::PI;

use hlab::definetti::{nls_flow, Mixture, NlsConfig};
use hlab::evolution::{bbgky_evolve, gp_evolve, gp_evolve_with_mixture, Closure, EvolutionConfig};
use hlab::interactions::{builtin_profile, realize_potential, PotentialSpec, ProfileKind};
use hlab::marginals::{pure_product_marginal, sobolev_norm, trace};
use hlab::nbody::{extract_marginal, nbody_evolve, NBodyState};
use hlab::states::{random_smooth_unit, random_sphere_mixture};
use hlab::{GridSpec, HierarchyState};

fn desk() -> GridSpec {
    GridSpec::new(1, 16, 2.0 * PI).unwrap()
}

fn potential(big_n: u64) -> PotentialSpec {
    let profile = builtin_profile(desk(), ProfileKind::Gaussian, 1.2).unwrap();
    realize_potential(&profile, 0.2, big_n).unwrap()
}

#[test]
fn two_body_bbgky_is_the_von_neumann_flow() {
    let phi = random_smooth_unit(desk(), 12);
    let v = potential(2);
    let t = 0.1;
    let reference = {
        let state = NBodyState::factorized(&phi, v.clone()).unwrap();
        let end = nbody_evolve(&state, 1e-4, t, 0).unwrap().states.pop().unwrap();
        extract_marginal(&end, 2).unwrap()
    };
    let cfg = EvolutionConfig {
        dt: 1e-3,
        t_final: t,
        truncation: 2,
        record_every: 0,
        ..Default::default()
    };
    let gamma0 = HierarchyState::from_mixture(&Mixture::point(phi).unwrap(), 2, 0.5).unwrap();
    let end = bbgky_evolve(&gamma0, &cfg, &v).unwrap();
    let two = end.last().level(2).unwrap();
    let err = sobolev_norm(&two.sub(&reference), 0.0).unwrap();
    assert!(err < 1e-5, "HS distance {err:.3e}");
}

#[test]
fn mixture_closed_gp_follows_the_nls_flow() {
    let phi = random_smooth_unit(desk(), 13);
    let t = 0.1;
    let cfg = EvolutionConfig {
        dt: 1e-3,
        t_final: t,
        truncation: 2,
        closure: Closure::Mixture,
        record_every: 0,
        ..Default::default()
    };
    let mu = Mixture::point(phi.clone()).unwrap();
    let gamma0 = HierarchyState::from_mixture(&mu, 2, 0.5).unwrap();
    let end = gp_evolve_with_mixture(&gamma0, &cfg, 1.0, Some(&mu)).unwrap();
    let exact = pure_product_marginal(&nls_flow(&phi, t, &NlsConfig::default()).unwrap(), 1).unwrap();
    let err = sobolev_norm(&end.last().level(1).unwrap().sub(&exact), 0.0).unwrap();
    assert!(err < 1e-5, "HS distance {err:.3e}");
}

#[test]
fn zero_closure_conserves_traces() {
    let mu = random_sphere_mixture(desk(), 3, 8);
    let cfg = EvolutionConfig {
        t_final: 0.1,
        truncation: 2,
        record_every: 10,
        ..Default::default()
    };
    let gamma0 = HierarchyState::from_mixture(&mu, 2, 0.5).unwrap();
    let traj = gp_evolve(&gamma0, &cfg, 1.0).unwrap();
    for s in &traj.states {
        for level in s.levels() {
            assert!((trace(level).re - 1.0).abs() < 1e-8);
        }
    }
}
