//! Experiment drivers. Each returns a [`Report`]; binary artifacts go to the output directory.

use std::fs;
use std::path::PathBuf;

use crate::definetti::{
    energy_functional_mixture, flow_mixture_with, gwp_window_chain, mass, nls_energy, Mixture,
    NlsConfig,
};
use crate::error::{Error, Result};
use crate::evolution::{
    bbgky_evolve, duhamel_iterate, free_series, gp_evolve_with_mixture, gp_residual, k_schedule,
    picard_fixed_point, picard_residual, Trajectory,
};
use crate::grid::C64;
use crate::harness::config::ExperimentConfig;
use crate::harness::report::Report;
use crate::interactions::{
    bbgky_collision_main, bbgky_main_level, bbgky_main_plus_weighted, bbgky_rhs,
    collision_fourier_oracle, gp_collision, gp_collision_sum, PotentialSpec, Side,
};
use crate::io::{write_marginal, write_mixture};
use crate::marginals::{
    admissibility_defect, free_propagate_marginal, hierarchy_norm, mixture_marginal,
    pure_product_marginal, psd_defect, sobolev_norm, trace, trace_norm, HierarchyState, Marginal,
    NormFlavor,
};
use crate::nbody::{energy_moment, extract_marginal, nbody_evolve, sobolev_moment, NBodyState};
use crate::par;
use crate::states::{perturbed_constant, random_smooth_unit, random_sphere_mixture};

pub const EXPERIMENTS: [&str; 8] = [
    "simulate-nbody",
    "simulate-gp",
    "simulate-bbgky",
    "convergence",
    "conservation",
    "collision-limit",
    "duhamel-check",
    "picard",
];

pub fn run(name: &str, cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    match name {
        "simulate-nbody" => simulate_nbody(cfg),
        "simulate-gp" => simulate_gp(cfg),
        "simulate-bbgky" => simulate_bbgky(cfg),
        "convergence" => run_convergence(cfg),
        "conservation" => run_conservation(cfg),
        "collision-limit" => run_collision_limit(cfg),
        "duhamel-check" => duhamel_check(cfg),
        "picard" => picard(cfg),
        other => Err(Error::Config(format!("unknown experiment {other}"))),
    }
}

fn nls_config(cfg: &ExperimentConfig, coupling: f64) -> NlsConfig {
    NlsConfig {
        dt: cfg.time.dt,
        coupling,
        ..NlsConfig::default()
    }
}

fn segment(cfg: &ExperimentConfig) -> f64 {
    cfg.time.t_final / cfg.time.samples as f64
}

fn hs_distance(a: &Marginal, b: &Marginal) -> Result<f64> {
    sobolev_norm(&a.sub(b), 0.0)
}

fn max_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, f64::max)
}

/// Advances a GP hierarchy by one report segment, the mixture closure reading `mu`.
fn gp_segment(
    gamma: &HierarchyState,
    cfg: &ExperimentConfig,
    kappa0: f64,
    mu: &Mixture,
    record: bool,
) -> Result<Trajectory> {
    let mut evo = cfg.evolution(gamma.top());
    evo.t_final = segment(cfg);
    evo.record_every = usize::from(record);
    gp_evolve_with_mixture(gamma, &evo, kappa0, Some(mu))
}

fn nbody_hierarchy(state: &NBodyState, k: usize, xi: f64) -> Result<HierarchyState> {
    let levels = (1..=k).map(|j| extract_marginal(state, j)).collect::<Result<Vec<_>>>()?;
    HierarchyState::new(levels, xi)
}

fn convergence_entry(cfg: &ExperimentConfig, big_n: u64) -> Result<Report> {
    let mut rep = Report::new("convergence");
    let g = cfg.grid()?;
    let v = cfg.potential(big_n)?;
    let kappa0 = v.kappa0();
    let k = k_schedule(big_n, cfg.ladder.b1, cfg.ladder.k_max).min(big_n as usize);
    let xi = cfg.weights.xi;
    let phi0 = random_smooth_unit(g, cfg.seed);
    let nls = nls_config(cfg, kappa0);
    let mut nb = NBodyState::factorized(&phi0, v.clone())?;
    let mut mu = Mixture::point(phi0)?;
    let mut gamma = HierarchyState::from_mixture(&mu, k, xi)?;
    let id = format!("N{big_n}");
    for (i, &t) in cfg.sample_times().iter().enumerate() {
        if i > 0 {
            nb = nbody_evolve(&nb, cfg.time.dt, segment(cfg), 0)?
                .states
                .pop()
                .expect("endpoint");
            gamma = gp_segment(&gamma, cfg, kappa0, &mu, false)?.last().clone();
            mu = flow_mixture_with(&mu, segment(cfg), &nls)?;
        }
        let gn = nbody_hierarchy(&nb, k, xi)?;
        let diff = gn.sub(&gamma);
        rep.push(&id, big_n, k, t, "hierarchy_distance_h1", hierarchy_norm(&diff, 1.0, NormFlavor::HilbertSchmidt)?);
        let bn = bbgky_rhs(&gn, &v)?;
        let b = gp_collision_sum(&gamma, kappa0)?;
        rep.push(&id, big_n, k, t, "collision_distance", hierarchy_norm(&bn.sub(&b), 0.0, NormFlavor::HilbertSchmidt)?);
        let one = diff.level(1).expect("level 1");
        rep.push(&id, big_n, k, t, "trace_distance_1", trace_norm(one)?);
    }
    Ok(rep)
}

/// Runs every ladder entry concurrently; entries over budget are skipped with a warning.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<Report> {
    let results = par::map_slice(&cfg.ladder.big_n, |&n| convergence_entry(cfg, n));
    let mut rep = Report::new("convergence");
    for (n, r) in cfg.ladder.big_n.iter().zip(results) {
        match r {
            Ok(part) => rep.extend(part),
            Err(e @ Error::Budget { .. }) => rep.warnings.push(format!("N = {n} skipped: {e}")),
            Err(e) => return Err(e),
        }
    }
    Ok(rep)
}

pub fn run_conservation(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = Report::new("conservation");
    let g = cfg.grid()?;
    let kappa0 = cfg.potential(cfg.potential.big_n)?.kappa0();
    let nls = nls_config(cfg, kappa0);
    let k = cfg.ladder.k_max;
    let m_max = cfg.conservation.m_max;
    let mu0 = random_sphere_mixture(g, cfg.conservation.atoms, cfg.seed);
    let initial: Vec<f64> = (1..=m_max).map(|m| energy_functional_mixture(&mu0, m)).collect();
    let energies0: Vec<f64> = mu0.atoms().iter().map(|a| nls_energy(&a.phi)).collect();
    let mut mu = mu0.clone();
    for (i, &t) in cfg.sample_times().iter().enumerate() {
        if i > 0 {
            mu = flow_mixture_with(&mu, segment(cfg), &nls)?;
        }
        for m in 1..=m_max {
            let value = energy_functional_mixture(&mu, m);
            let drift = (value - initial[m - 1]).abs() / initial[m - 1].abs();
            rep.push(&format!("m{m}"), 0, k, t, "k_functional", value);
            rep.push(&format!("m{m}"), 0, k, t, "k_functional_drift", drift);
        }
        let atom_drift = mu
            .atoms()
            .iter()
            .zip(&energies0)
            .map(|(a, e0)| (nls_energy(&a.phi) - e0).abs() / e0.abs());
        rep.push("atoms", 0, k, t, "atom_energy_drift", max_of(atom_drift));
        let mass_drift = mu.atoms().iter().map(|a| (mass(&a.phi) - 1.0).abs());
        rep.push("atoms", 0, k, t, "atom_mass_drift", max_of(mass_drift));
        for j in 1..=k {
            rep.push(&format!("k{j}"), 0, j, t, "psd_defect", psd_defect(&mixture_marginal(&mu, j)?)?);
        }
        if k >= 2 {
            let state = HierarchyState::from_mixture(&mu, k, cfg.weights.xi)?;
            let adm = max_of(admissibility_defect(&state)?);
            rep.push("hierarchy", 0, k, t, "admissibility_defect", adm);
        }
    }

    let dir = artifact(cfg, "conservation_mixture")?;
    rep.artifacts.push(write_mixture(dir, &mu0)?);

    let mut evo = cfg.evolution(k);
    evo.xi = cfg.weights.xi1.unwrap_or(cfg.weights.xi);
    let chain = gwp_window_chain(
        &mu0,
        cfg.conservation.window,
        cfg.conservation.windows,
        &evo,
        kappa0,
        1e-10,
    )?;
    for w in &chain.windows {
        let id = format!("window{}", w.window);
        rep.push(&id, 0, k, w.t_end, "window_norm", w.norm);
        rep.push(&id, 0, k, w.t_end, "window_bound", w.bound);
        rep.push(&id, 0, k, w.t_end, "window_psd_defect", w.psd_defect);
        rep.push(&id, 0, k, w.t_end, "window_admissibility_defect", w.admissibility_defect);
        rep.push(&id, 0, k, w.t_end, "window_passed", f64::from(u8::from(w.passed)));
    }
    rep.summary.insert("window_chain_passed".into(), f64::from(u8::from(chain.passed)));
    Ok(rep)
}

/// Fixed smooth two-particle kernel used along the collision ladder.
pub fn collision_test_kernel(cfg: &ExperimentConfig) -> Result<Marginal> {
    pure_product_marginal(&perturbed_constant(cfg.grid()?, 0.1), 2)
}

pub fn run_collision_limit(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = Report::new("collision-limit");
    let gamma = collision_test_kernel(cfg)?;
    let entries = par::map_slice(&cfg.ladder.big_n, |&n| -> Result<Vec<(String, f64)>> {
        let v = cfg.potential(n)?;
        let main = bbgky_main_plus_weighted(&gamma, &v)?;
        let contact = gp_collision(&gamma, 1, Side::Plus)?.scaled(C64::new(v.kappa0(), 0.0));
        let gap = hs_distance(&main, &contact)?;
        let single = bbgky_collision_main(&gamma, 1, Side::Plus, &v)?;
        let mut rows = vec![
            ("main_minus_contact_hs".to_string(), gap),
            ("main_minus_contact_rel".to_string(), gap / sobolev_norm(&contact, 0.0)?.max(f64::MIN_POSITIVE)),
            ("unweighted_main_minus_contact_hs".to_string(), hs_distance(&single, &contact)?),
            ("resolvable".to_string(), f64::from(u8::from(v.resolvable()))),
        ];
        let spectrum = oracle_spectrum(cfg, &v);
        for t in [0.0, 0.1] {
            let spatial = bbgky_collision_main(&free_propagate_marginal(&gamma, t), 1, Side::Plus, &v)?;
            let oracle = collision_fourier_oracle(&gamma, t, spectrum.as_deref())?;
            let scale = sobolev_norm(&oracle, 0.0)?.max(f64::MIN_POSITIVE);
            rows.push((format!("oracle_rel_error_t{t}"), hs_distance(&spatial, &oracle)? / scale));
        }
        Ok(rows)
    });
    for (n, r) in cfg.ladder.big_n.iter().zip(entries) {
        match r {
            Ok(rows) => {
                for (metric, value) in rows {
                    rep.push(&format!("N{n}"), *n, 2, 0.0, &metric, value);
                }
            }
            Err(e @ Error::Budget { .. }) => rep.warnings.push(format!("N = {n} skipped: {e}")),
            Err(e) => return Err(e),
        }
    }
    Ok(rep)
}

/// The delta surrogate has no spectral interpolant; the oracle then evaluates the contact term.
fn oracle_spectrum(cfg: &ExperimentConfig, v: &PotentialSpec) -> Option<Vec<C64>> {
    (cfg.potential.profile != "delta").then(|| v.spectrum())
}

fn artifact(cfg: &ExperimentConfig, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.output)?;
    Ok(cfg.output.join(name))
}

fn write_levels(cfg: &ExperimentConfig, rep: &mut Report, prefix: &str, state: &HierarchyState) -> Result<()> {
    for (i, level) in state.levels().iter().enumerate() {
        let path = artifact(cfg, &format!("{prefix}_marginal_{}.hlab", i + 1))?;
        write_marginal(&path, level)?;
        rep.artifacts.push(path);
    }
    Ok(())
}

pub fn simulate_nbody(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = Report::new("simulate-nbody");
    let big_n = cfg.potential.big_n;
    let v = cfg.potential(big_n)?;
    let k = cfg.k_marginals.min(big_n as usize);
    let phi0 = random_smooth_unit(cfg.grid()?, cfg.seed);
    let mut state = NBodyState::factorized(&phi0, v)?;
    let id = format!("N{big_n}");
    let mut last = None;
    for (i, &t) in cfg.sample_times().iter().enumerate() {
        if i > 0 {
            state = nbody_evolve(&state, cfg.time.dt, segment(cfg), 0)?
                .states
                .pop()
                .expect("endpoint");
        }
        rep.push(&id, big_n, k, t, "norm", state.psi().norm_l2());
        rep.push(&id, big_n, k, t, "energy", energy_moment(&state, 1)?);
        rep.push(&id, big_n, k, t, "symmetry_defect", state.symmetry_defect());
        let h = nbody_hierarchy(&state, k, cfg.weights.xi)?;
        for (j, level) in h.levels().iter().enumerate() {
            rep.push(&format!("k{}", j + 1), big_n, j + 1, t, "trace", trace(level).re);
            rep.push(&format!("k{}", j + 1), big_n, j + 1, t, "psd_defect", psd_defect(level)?);
        }
        last = Some(h);
    }
    for m in 1..=3 {
        rep.summary.insert(format!("energy_moment_{m}"), energy_moment(&state, m)?);
    }
    for m in 1..=k {
        rep.summary.insert(format!("sobolev_moment_{m}"), sobolev_moment(&state, m)?);
    }
    write_levels(cfg, &mut rep, "nbody", &last.expect("at least one sample"))?;
    Ok(rep)
}

fn hierarchy_rows(rep: &mut Report, id: &str, big_n: u64, t: f64, state: &HierarchyState) -> Result<()> {
    let k = state.top();
    for (j, level) in state.levels().iter().enumerate() {
        rep.push(&format!("k{}", j + 1), big_n, j + 1, t, "trace", trace(level).re);
    }
    rep.push(id, big_n, k, t, "hierarchy_norm_h1", hierarchy_norm(state, 1.0, NormFlavor::HilbertSchmidt)?);
    if k >= 2 {
        rep.push(id, big_n, k, t, "admissibility_defect", max_of(admissibility_defect(state)?));
    }
    Ok(())
}

pub fn simulate_gp(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = Report::new("simulate-gp");
    let kappa0 = cfg.potential(cfg.potential.big_n)?.kappa0();
    let k = cfg.ladder.k_max;
    let nls = nls_config(cfg, kappa0);
    let mu0 = random_sphere_mixture(cfg.grid()?, cfg.conservation.atoms, cfg.seed);
    let mut mu = mu0.clone();
    let mut gamma = HierarchyState::from_mixture(&mu, k, cfg.weights.xi)?;
    for (i, &t) in cfg.sample_times().iter().enumerate() {
        if i > 0 {
            let traj = gp_segment(&gamma, cfg, kappa0, &mu, true)?;
            if traj.len() >= 3 && k >= 2 {
                let res = gp_residual(&traj, kappa0)?;
                rep.push("gp", 0, k, t, "residual_1", max_of(res.iter().map(|r| r[0])));
            }
            gamma = traj.last().clone();
            mu = flow_mixture_with(&mu, segment(cfg), &nls)?;
        }
        hierarchy_rows(&mut rep, "gp", 0, t, &gamma)?;
        let exact = HierarchyState::from_mixture(&mu, k, cfg.weights.xi)?;
        rep.push("gp", 0, k, t, "distance_to_mixture_h1", hierarchy_norm(&gamma.sub(&exact), 1.0, NormFlavor::HilbertSchmidt)?);
    }
    write_levels(cfg, &mut rep, "gp", &gamma)?;
    let dir = artifact(cfg, "initial_mixture")?;
    rep.artifacts.push(write_mixture(dir, &mu0)?);
    Ok(rep)
}

pub fn simulate_bbgky(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = Report::new("simulate-bbgky");
    let big_n = cfg.potential.big_n;
    let v = cfg.potential(big_n)?;
    let k = cfg.ladder.k_max.min(big_n as usize);
    let phi0 = random_smooth_unit(cfg.grid()?, cfg.seed);
    let mut gamma = HierarchyState::from_mixture(&Mixture::point(phi0)?, k, cfg.weights.xi)?;
    let mut evo = cfg.evolution(k);
    evo.t_final = segment(cfg);
    for (i, &t) in cfg.sample_times().iter().enumerate() {
        if i > 0 {
            gamma = bbgky_evolve(&gamma, &evo, &v)?.last().clone();
        }
        hierarchy_rows(&mut rep, &format!("N{big_n}"), big_n, t, &gamma)?;
    }
    write_levels(cfg, &mut rep, "bbgky", &gamma)?;
    Ok(rep)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}

/// `Duh_j` norms on free data over several horizons, their growth exponents, and the
/// closed form `Duh_1^{(1)}(t) = it B^{main}U(t)Ξ₀^{(2)}` that free data admits.
pub fn duhamel_check(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = Report::new("duhamel-check");
    let big_n = cfg.potential.big_n;
    let v = cfg.potential(big_n)?;
    let j_max = cfg.duhamel.j_max;
    let top = j_max + 1;
    let mu = random_sphere_mixture(cfg.grid()?, cfg.conservation.atoms, cfg.seed);
    let xi0 = HierarchyState::from_mixture(&mu, top, cfg.weights.xi)?;
    let steps = cfg.duhamel.steps;
    let horizons = &cfg.duhamel.horizons;
    let norms = par::map_slice(horizons, |&t| -> Result<Vec<f64>> {
        let series = free_series(&xi0, t / steps as f64, steps);
        (0..=j_max)
            .map(|j| {
                let duh = duhamel_iterate(&series, j, &v)?;
                sobolev_norm(duh.last().level(1).expect("level 1"), 1.0)
            })
            .collect()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    for (t, row) in horizons.iter().zip(&norms) {
        for (j, value) in row.iter().enumerate() {
            rep.push(&format!("j{j}"), big_n, top, *t, "duh_norm_h1", *value);
        }
    }
    if horizons.len() >= 2 {
        for j in 0..=j_max {
            let y: Vec<f64> = norms.iter().map(|r| r[j]).collect();
            if y.iter().all(|&v| v > 0.0) {
                rep.push(&format!("j{j}"), big_n, top, 0.0, "duh_exponent", loglog_slope(horizons, &y));
            }
        }
    }
    if let Some(&t) = horizons.first() {
        let series = free_series(&xi0, t / steps as f64, steps);
        let duh = duhamel_iterate(&series, 1, &v)?;
        let two = free_propagate_marginal(xi0.level(2).expect("level 2"), t);
        let exact = bbgky_main_level(&two, &v)?.scaled(C64::new(0.0, t));
        let got = duh.last().level(1).expect("level 1");
        let rel = hs_distance(got, &exact)? / sobolev_norm(&exact, 0.0)?.max(f64::MIN_POSITIVE);
        rep.push("j1", big_n, top, t, "closed_form_rel_error", rel);
    }
    Ok(rep)
}

/// Picard iteration for the BBGKY Duhamel equation on free data over `[0, t_final]`.
pub fn picard(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = Report::new("picard");
    let big_n = cfg.potential.big_n;
    let v = cfg.potential(big_n)?;
    let k = cfg.ladder.k_max;
    let mut evo = cfg.evolution(k);
    let steps = cfg.duhamel.steps;
    let t = cfg.time.t_final;
    evo.t_final = t;
    let mu = random_sphere_mixture(cfg.grid()?, cfg.conservation.atoms, cfg.seed);
    let xi0 = HierarchyState::from_mixture(&mu, k, cfg.weights.xi)?;
    let series = free_series(&xi0, t / steps as f64, steps);
    let out = picard_fixed_point(&series, &v, &evo)?;
    let id = format!("N{big_n}");
    rep.push(&id, big_n, k, t, "t0", evo.t0());
    for (m, d) in out.distances.iter().enumerate() {
        rep.push(&format!("iter{}", m + 1), big_n, k, t, "distance", *d);
    }
    for (m, r) in out.ratios.iter().enumerate() {
        rep.push(&format!("iter{}", m + 2), big_n, k, t, "ratio", *r);
    }
    rep.push(&id, big_n, k, t, "converged", f64::from(u8::from(out.converged)));
    let residual = picard_residual(&out.theta, &series, &v, cfg.weights.xi)?;
    rep.push(&id, big_n, k, t, "residual", residual);
    write_levels(cfg, &mut rep, "picard", out.theta.last())?;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(dir: &std::path::Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.output = dir.to_path_buf();
        cfg.grid.n = 8;
        cfg.ladder.big_n = vec![2, 3];
        cfg.time.t_final = 0.02;
        cfg.time.dt = 0.005;
        cfg.time.samples = 2;
        cfg
    }

    #[test]
    fn convergence_report_shape() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path());
        let rep = run_convergence(&cfg).unwrap();
        for metric in ["hierarchy_distance_h1", "collision_distance", "trace_distance_1"] {
            let rows = rep.metric(metric);
            assert_eq!(rows.len(), 2 * 3);
            for t in cfg.sample_times() {
                assert_eq!(rows.iter().filter(|r| r.t == t).count(), 2);
            }
        }
        let at0 = rep.metric("hierarchy_distance_h1");
        assert!(at0.iter().filter(|r| r.t == 0.0).all(|r| r.value < 1e-12));
    }

    #[test]
    fn zero_potential_convergence_is_noise() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(dir.path());
        cfg.potential.profile = "zero".into();
        let rep = run_convergence(&cfg).unwrap();
        for r in rep.metric("hierarchy_distance_h1") {
            assert!(r.value < 1e-10, "{r:?}");
        }
    }

    #[test]
    fn budget_overflow_is_partial() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(dir.path());
        cfg.grid.n = 16;
        cfg.ladder.big_n = vec![2, 7];
        cfg.time.samples = 1;
        cfg.time.t_final = 0.005;
        let rep = run_convergence(&cfg).unwrap();
        assert_eq!(rep.warnings.len(), 1);
        assert!(rep.rows.iter().all(|r| r.big_n == 2));
    }

    #[test]
    fn delta_collision_rows_vanish() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(dir.path());
        cfg.potential.profile = "delta".into();
        let rep = run_collision_limit(&cfg).unwrap();
        assert_eq!(rep.metric("main_minus_contact_hs").len(), 2);
        let exact = ["unweighted_main_minus_contact_hs", "oracle_rel_error_t0", "oracle_rel_error_t0.1"];
        for r in rep.rows.iter().filter(|r| exact.contains(&r.metric.as_str())) {
            assert!(r.value < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn duhamel_exponents_track_order() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(dir.path());
        cfg.potential.big_n = 16;
        let rep = duhamel_check(&cfg).unwrap();
        for r in rep.metric("duh_exponent") {
            let j: f64 = r.id[1..].parse().unwrap();
            assert!((r.value - j).abs() < 0.1, "{r:?}");
        }
        assert!(rep.metric("closed_form_rel_error")[0].value < 1e-12);
    }

    #[test]
    fn unknown_experiment() {
        assert!(run("nope", &ExperimentConfig::default()).is_err());
    }
}
