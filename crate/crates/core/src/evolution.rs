//! Time evolution of truncated GP and BBGKY hierarchies, iterated Duhamel terms and the
//! Picard fixed point of the BBGKY integral equation.

use serde::{Deserialize, Serialize};

use crate::definetti::{flow_mixture_with, Mixture, NlsConfig, NlsScheme};
use crate::error::{Error, Result};
use crate::grid::C64;
use crate::interactions::{
    bbgky_rhs, gp_collision_level, gp_collision_sum, main_weight, PotentialSpec,
};
use crate::marginals::{
    hierarchy_norm_with_xi, kinetic_commutator, sobolev_norm, tensor_power, trace,
    HierarchyState, Marginal, NormFlavor,
};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Free half step, RK4 on the collision term, free half step.
    StrangSplitting,
    /// RK4 on `Ω(τ) = U(−τ)Γ(t_n + τ)`, free flow exact.
    Rk4InteractionPicture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    /// `γ^{(K+1)} = 0`.
    ZeroTop,
    /// `γ^{(K+1)}(t)` from the NLS-flowed mixture.
    Mixture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_final: f64,
    pub method: Method,
    pub closure: Closure,
    /// Truncation level `K`.
    pub truncation: usize,
    pub b1: f64,
    pub xi: f64,
    pub xi_prime: f64,
    pub c0: f64,
    /// Keep every `record_every`-th step; 0 keeps only the endpoints.
    pub record_every: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 0.1,
            method: Method::StrangSplitting,
            closure: Closure::ZeroTop,
            truncation: 2,
            b1: 1.0,
            xi: 0.3,
            xi_prime: 0.6,
            c0: 1.0,
            record_every: 1,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_final >= 0.0) {
            return Err(Error::Config(format!(
                "need dt > 0 and t_final ≥ 0, got dt = {}, t_final = {}",
                self.dt, self.t_final
            )));
        }
        if !(0.0 < self.xi && self.xi < self.xi_prime && self.xi_prime < 1.0) {
            return Err(Error::Config(format!(
                "need 0 < ξ < ξ′ < 1, got ξ = {}, ξ′ = {}",
                self.xi, self.xi_prime
            )));
        }
        if self.truncation == 0 {
            return Err(Error::Config("truncation level must be at least 1".into()));
        }
        if !(self.c0 > 0.0) {
            return Err(Error::Config("c0 must be positive".into()));
        }
        Ok(())
    }

    /// `T₀(ξ) = ξ²/c₀`.
    pub fn t0(&self) -> f64 {
        self.xi * self.xi / self.c0
    }

    fn steps(&self) -> usize {
        (self.t_final / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// Recorded states on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<HierarchyState>,
}

impl Trajectory {
    pub fn last(&self) -> &HierarchyState {
        self.states.last().expect("trajectories are never empty")
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    fn spacing(&self) -> Result<f64> {
        if self.times.len() < 2 {
            return Err(Error::InvalidArgument("time series needs at least two samples".into()));
        }
        let dt = self.times[1] - self.times[0];
        for w in self.times.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1e-300) {
                return Err(Error::InvalidArgument("time series must be uniformly spaced".into()));
            }
        }
        if self.times[0] != 0.0 {
            return Err(Error::InvalidArgument("time series must start at t = 0".into()));
        }
        Ok(dt)
    }
}

/// `P_{≤K}Γ`.
pub fn truncate(state: &HierarchyState, k: usize) -> Result<HierarchyState> {
    if k == 0 {
        return Err(Error::InvalidArgument("truncation level must be at least 1".into()));
    }
    if k >= state.top() {
        return Ok(state.clone());
    }
    HierarchyState::new(state.levels()[..k].to_vec(), state.xi())
}

/// `K(N) = clamp(⌊b₁ ln N⌋, 1, cap)`.
pub fn k_schedule(big_n: u64, b1: f64, cap: usize) -> usize {
    let raw = (b1 * (big_n.max(1) as f64).ln()).floor();
    (raw.max(1.0) as usize).clamp(1, cap.max(1))
}

/// `Σ_a w_a Σ_j (|φ_a(x_j)|² − |φ_a(x′_j)|²)(|φ_a⟩⟨φ_a|)^{⊗K}`, i.e. the contact collision of
/// the mixture's `γ^{(K+1)}`, without materializing it.
pub fn mixture_top_collision(mu: &Mixture, top: usize) -> Result<Marginal> {
    let g = *mu.grid();
    let mut out = Marginal::zeros(g, top)?;
    let p = g.points();
    let rows = out.rows();
    let strides: Vec<usize> = (1..=top).map(|j| p.pow((top - j) as u32)).collect();
    for atom in mu.atoms() {
        let v = tensor_power(&atom.phi, top);
        let rho: Vec<f64> = atom.phi.data().iter().map(|z| z.norm_sqr()).collect();
        let dens: Vec<f64> = (0..rows)
            .map(|r| strides.iter().map(|s| rho[(r / s) % p]).sum())
            .collect();
        let w = atom.weight;
        par::for_each_chunk_mut(out.data_mut(), rows, |r, row| {
            let vr = v[r] * w;
            for (c, z) in row.iter_mut().enumerate() {
                *z += vr * v[c].conj() * (dens[r] - dens[c]);
            }
        });
    }
    Ok(out)
}

/// Top-level source term, evaluated on demand at nondecreasing times.
struct MixtureClock {
    mixture: Mixture,
    time: f64,
    cached: Option<(f64, Marginal)>,
    nls: NlsConfig,
    top: usize,
    kappa0: f64,
}

impl MixtureClock {
    fn new(mixture: &Mixture, top: usize, kappa0: f64, dt: f64) -> Self {
        Self {
            mixture: mixture.clone(),
            time: 0.0,
            cached: None,
            nls: NlsConfig {
                dt: dt / 2.0,
                coupling: kappa0,
                scheme: NlsScheme::Strang,
            },
            top,
            kappa0,
        }
    }

    fn at(&mut self, t: f64) -> Result<Marginal> {
        if let Some((tc, m)) = &self.cached {
            if (tc - t).abs() <= 1e-14 * t.abs().max(1.0) {
                return Ok(m.clone());
            }
        }
        if t < self.time - 1e-14 {
            return Err(Error::InvalidArgument("mixture closure queried backwards in time".into()));
        }
        if t > self.time {
            self.mixture = flow_mixture_with(&self.mixture, t - self.time, &self.nls)?;
            self.time = t;
        }
        let m = mixture_top_collision(&self.mixture, self.top)?.scaled(C64::new(self.kappa0, 0.0));
        self.cached = Some((t, m.clone()));
        Ok(m)
    }
}

/// `∂_tΓ` without the free part: `−i·(collision)`.
type Rhs<'a> = dyn FnMut(&HierarchyState, f64) -> Result<HierarchyState> + 'a;

fn rk4_collision(state: &HierarchyState, t: f64, dt: f64, rhs: &mut Rhs) -> Result<HierarchyState> {
    let half = C64::new(dt / 2.0, 0.0);
    let k1 = rhs(state, t)?;
    let mut s = state.clone();
    s.axpy(half, &k1);
    let k2 = rhs(&s, t + dt / 2.0)?;
    let mut s = state.clone();
    s.axpy(half, &k2);
    let k3 = rhs(&s, t + dt / 2.0)?;
    let mut s = state.clone();
    s.axpy(C64::new(dt, 0.0), &k3);
    let k4 = rhs(&s, t + dt)?;
    let mut out = state.clone();
    out.axpy(C64::new(dt / 6.0, 0.0), &k1);
    out.axpy(C64::new(dt / 3.0, 0.0), &k2);
    out.axpy(C64::new(dt / 3.0, 0.0), &k3);
    out.axpy(C64::new(dt / 6.0, 0.0), &k4);
    Ok(out)
}

fn step(
    state: &HierarchyState,
    t: f64,
    dt: f64,
    method: Method,
    rhs: &mut Rhs,
) -> Result<HierarchyState> {
    match method {
        Method::StrangSplitting => {
            let a = state.free_propagate(dt / 2.0);
            let b = rk4_collision(&a, t, dt, rhs)?;
            Ok(b.free_propagate(dt / 2.0))
        }
        Method::Rk4InteractionPicture => {
            let mut picture = |omega: &HierarchyState, tau: f64| -> Result<HierarchyState> {
                let lab = omega.free_propagate(tau - t);
                Ok(rhs(&lab, tau)?.free_propagate(t - tau))
            };
            let omega = rk4_collision(state, t, dt, &mut picture)?;
            Ok(omega.free_propagate(dt))
        }
    }
}

fn traces(state: &HierarchyState) -> Vec<f64> {
    state.levels().iter().map(|l| trace(l).re).collect()
}

fn run(gamma0: &HierarchyState, config: &EvolutionConfig, rhs: &mut Rhs) -> Result<Trajectory> {
    config.validate()?;
    let steps = config.steps();
    let dt = if steps == 0 { config.dt } else { config.t_final / steps as f64 };
    let reference = traces(gamma0);
    let mut times = vec![0.0];
    let mut states = vec![gamma0.clone()];
    let mut cur = gamma0.clone();
    for n in 0..steps {
        let t = n as f64 * dt;
        cur = step(&cur, t, dt, config.method, rhs)?;
        for (k, (now, then)) in traces(&cur).iter().zip(&reference).enumerate() {
            let scale = then.abs().max(1e-12);
            if !now.is_finite() || (now - then).abs() > 0.01 * scale {
                return Err(Error::Instability(format!(
                    "trace of level {} drifted from {then} to {now} at t = {:.6}",
                    k + 1,
                    t + dt
                )));
            }
        }
        let last = n + 1 == steps;
        if last || (config.record_every > 0 && (n + 1) % config.record_every == 0) {
            times.push((n + 1) as f64 * dt);
            states.push(cur.clone());
        }
    }
    Ok(Trajectory { times, states })
}

/// K-truncated GP hierarchy `i∂Γ = [−Δ, Γ] + κ₀BΓ` with zero closure.
pub fn gp_evolve(gamma0: &HierarchyState, config: &EvolutionConfig, kappa0: f64) -> Result<Trajectory> {
    gp_evolve_with_mixture(gamma0, config, kappa0, None)
}

/// As [`gp_evolve`]; with [`Closure::Mixture`] the level above the top is taken from the
/// NLS-flowed `mixture`.
pub fn gp_evolve_with_mixture(
    gamma0: &HierarchyState,
    config: &EvolutionConfig,
    kappa0: f64,
    mixture: Option<&Mixture>,
) -> Result<Trajectory> {
    if gamma0.top() != config.truncation {
        return Err(Error::InvalidArgument(format!(
            "initial state has {} levels, config truncates at {}",
            gamma0.top(),
            config.truncation
        )));
    }
    let top = gamma0.top();
    let mut clock = match (config.closure, mixture) {
        (Closure::ZeroTop, _) => None,
        (Closure::Mixture, Some(mu)) => Some(MixtureClock::new(mu, top, kappa0, config.dt)),
        (Closure::Mixture, None) => {
            return Err(Error::Config("mixture closure requested without a mixture".into()))
        }
    };
    let minus_i = C64::new(0.0, -1.0);
    let mut rhs = |s: &HierarchyState, t: f64| -> Result<HierarchyState> {
        let mut b = gp_collision_sum(s, kappa0)?;
        if let Some(clock) = clock.as_mut() {
            let source = clock.at(t)?;
            b.level_mut(top).expect("top level").axpy(C64::new(1.0, 0.0), &source);
        }
        Ok(b.scaled(minus_i))
    };
    run(gamma0, config, &mut rhs)
}

/// K-truncated N-BBGKY hierarchy `i∂Γ_N = [−Δ, Γ_N] + B_NΓ_N`, levels above `K` zero.
pub fn bbgky_evolve(
    gamma0: &HierarchyState,
    config: &EvolutionConfig,
    v: &PotentialSpec,
) -> Result<Trajectory> {
    if gamma0.top() as u64 > v.big_n() {
        return Err(Error::InvalidArgument(format!(
            "truncation K = {} exceeds N = {}",
            gamma0.top(),
            v.big_n()
        )));
    }
    let minus_i = C64::new(0.0, -1.0);
    let mut rhs = |s: &HierarchyState, _t: f64| -> Result<HierarchyState> {
        Ok(bbgky_rhs(s, v)?.scaled(minus_i))
    };
    run(gamma0, config, &mut rhs)
}

/// Residuals `‖i∂_tγ^{(k)} − [−Δ, γ^{(k)}] − κ₀B_{k+1}γ^{(k+1)}‖_{HS}` at interior samples,
/// by central differences; row `i` belongs to `times[i + 1]`, column `k − 1` to level `k < K`.
pub fn gp_residual(traj: &Trajectory, kappa0: f64) -> Result<Vec<Vec<f64>>> {
    if traj.len() < 3 {
        return Err(Error::InvalidArgument("residual needs at least three samples".into()));
    }
    let top = traj.states[0].top();
    let mut out = Vec::with_capacity(traj.len() - 2);
    for i in 1..traj.len() - 1 {
        let span = traj.times[i + 1] - traj.times[i - 1];
        let row = par::map_indices(top.saturating_sub(1), |kk| -> Result<f64> {
            let k = kk + 1;
            let fwd = traj.states[i + 1].level(k).expect("level");
            let bwd = traj.states[i - 1].level(k).expect("level");
            let mut r = fwd.sub(bwd).scaled(C64::new(0.0, 1.0 / span));
            let cur = traj.states[i].level(k).expect("level");
            r.axpy(C64::new(-1.0, 0.0), &kinetic_commutator(cur));
            let next = traj.states[i].level(k + 1).expect("level");
            r.axpy(C64::new(-kappa0, 0.0), &gp_collision_level(next)?);
            sobolev_norm(&r, 0.0)
        });
        out.push(row.into_iter().collect::<Result<Vec<_>>>()?);
    }
    Ok(out)
}

/// Composite trapezoid weights on `[0, t_m]` with spacing `dt`.
fn trapezoid_weights(m: usize, dt: f64) -> Vec<f64> {
    if m == 0 {
        return vec![0.0];
    }
    let mut w = vec![dt; m + 1];
    w[0] = dt / 2.0;
    w[m] = dt / 2.0;
    w
}

/// Composite Simpson weights on `[0, t_m]`, closing with the 3/8 rule when `m` is odd.
pub fn simpson_weights(m: usize, dt: f64) -> Vec<f64> {
    match m {
        0 => vec![0.0],
        1 => trapezoid_weights(1, dt),
        _ => {
            let mut w = vec![0.0; m + 1];
            let simpson_end = if m % 2 == 0 { m } else { m - 3 };
            let mut i = 0;
            while i < simpson_end {
                w[i] += dt / 3.0;
                w[i + 1] += 4.0 * dt / 3.0;
                w[i + 2] += dt / 3.0;
                i += 2;
            }
            if m % 2 == 1 {
                let s = simpson_end;
                w[s] += 3.0 * dt / 8.0;
                w[s + 1] += 9.0 * dt / 8.0;
                w[s + 2] += 9.0 * dt / 8.0;
                w[s + 3] += 3.0 * dt / 8.0;
            }
            w
        }
    }
}

/// `B^{main}_{N;k+1}γ^{(k+1)} = ((N−k)/N)Σ_j(B^{+,main}_{N;j;k+1} − B^{−,main}_{N;j;k+1})γ^{(k+1)}`
/// for every level `k < K`, zero on the top level.
fn bbgky_main_sum(state: &HierarchyState, v: &PotentialSpec) -> Result<HierarchyState> {
    let top = state.top();
    let levels = par::map_indices(top, |i| -> Result<Marginal> {
        let k = i + 1;
        if k == top || main_weight(v.big_n(), k) == 0.0 {
            return Marginal::zeros(*state.grid(), k);
        }
        crate::interactions::bbgky_main_level(state.level(k + 1).expect("level"), v)
    });
    HierarchyState::new(levels.into_iter().collect::<Result<_>>()?, state.xi())
}

/// Applies `Θ ↦ i∫₀^{t} op(U(t − s)Θ(s)) ds` on the sample grid with the given weights.
fn duhamel_integral(
    series: &[HierarchyState],
    dt: f64,
    weights: &dyn Fn(usize, f64) -> Vec<f64>,
    op: &(dyn Fn(&HierarchyState) -> Result<HierarchyState> + Sync),
) -> Result<Vec<HierarchyState>> {
    let template = series[0].scaled(C64::default());
    let mut out = Vec::with_capacity(series.len());
    for m in 0..series.len() {
        let w = weights(m, dt);
        let terms = par::map_indices(m + 1, |l| -> Result<Option<HierarchyState>> {
            if w[l] == 0.0 {
                return Ok(None);
            }
            let moved = series[l].free_propagate((m - l) as f64 * dt);
            Ok(Some(op(&moved)?.scaled(C64::new(0.0, w[l]))))
        });
        let mut acc = template.clone();
        for t in terms {
            if let Some(t) = t? {
                acc.axpy(C64::new(1.0, 0.0), &t);
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// `Duh_j(Ξ)` on the sample grid of `xi`: `Duh_0 = Ξ` and
/// `Duh_j^{(k)}(t) = i∫₀ᵗ B^{main}_{N;k+1}U(t − t₁)Duh_{j−1}^{(k+1)}(t₁)dt₁`, composite
/// trapezoid in each nested time variable.
pub fn duhamel_iterate(xi: &Trajectory, j: usize, v: &PotentialSpec) -> Result<Trajectory> {
    if j == 0 {
        return Ok(xi.clone());
    }
    let dt = xi.spacing()?;
    let mut cur = xi.states.clone();
    let op = |s: &HierarchyState| bbgky_main_sum(s, v);
    for _ in 0..j {
        cur = duhamel_integral(&cur, dt, &trapezoid_weights, &op)?;
    }
    Ok(Trajectory {
        times: xi.times.clone(),
        states: cur,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardOutcome {
    pub theta: Trajectory,
    /// Successive distances `sup_t ‖Θ_{m+1}(t) − Θ_m(t)‖_{ℋ¹_ξ}`.
    pub distances: Vec<f64>,
    /// `distances[m+1] / distances[m]`.
    pub ratios: Vec<f64>,
    pub converged: bool,
}

pub const PICARD_TOLERANCE: f64 = 1e-8;
pub const PICARD_MAX_ITERATIONS: usize = 50;

fn sup_distance(a: &[HierarchyState], b: &[HierarchyState], xi: f64) -> Result<f64> {
    let d = par::map_indices(a.len(), |i| {
        hierarchy_norm_with_xi(&a[i].sub(&b[i]), 1.0, NormFlavor::HilbertSchmidt, xi)
    });
    d.into_iter()
        .try_fold(0.0f64, |acc, x| x.map(|x| acc.max(x)))
}

/// Fixed point of `Θ(t) = Ξ(t) + i∫₀ᵗ B_N U(t − s)Θ(s) ds` by Picard iteration on the
/// sample grid of `xi_series` (trapezoid rule), with `B_N = B_N^{main} + B_N^{error}`.
pub fn picard_fixed_point(
    xi_series: &Trajectory,
    v: &PotentialSpec,
    config: &EvolutionConfig,
) -> Result<PicardOutcome> {
    config.validate()?;
    let dt = xi_series.spacing()?;
    let horizon = *xi_series.times.last().expect("nonempty");
    if horizon >= config.t0() {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} is not below T₀(ξ) = {}",
            config.t0()
        )));
    }
    let op = |s: &HierarchyState| bbgky_rhs(s, v);
    let mut theta = xi_series.states.clone();
    let mut distances = Vec::new();
    let mut ratios = Vec::new();
    let mut growing = 0;
    let mut converged = false;
    for _ in 0..PICARD_MAX_ITERATIONS {
        let integral = duhamel_integral(&theta, dt, &trapezoid_weights, &op)?;
        let next: Vec<HierarchyState> = xi_series
            .states
            .iter()
            .zip(&integral)
            .map(|(x, i)| {
                let mut s = x.clone();
                s.axpy(C64::new(1.0, 0.0), i);
                s
            })
            .collect();
        let d = sup_distance(&next, &theta, config.xi)?;
        if let Some(&prev) = distances.last() {
            let r: f64 = if prev > 0.0 { d / prev } else { 0.0 };
            ratios.push(r);
            growing = if r >= 1.0 { growing + 1 } else { 0 };
        }
        distances.push(d);
        theta = next;
        if d < PICARD_TOLERANCE {
            converged = true;
            break;
        }
        if growing >= 3 {
            return Err(Error::NonContraction(format!(
                "contraction ratio ≥ 1 for three consecutive iterates (last {:?}); \
                 the horizon {horizon} is too long for this surrogate",
                &ratios[ratios.len() - 3..]
            )));
        }
    }
    Ok(PicardOutcome {
        theta: Trajectory {
            times: xi_series.times.clone(),
            states: theta,
        },
        distances,
        ratios,
        converged,
    })
}

/// `sup_t ‖Θ(t) − Ξ(t) − i∫₀ᵗ B_N U(t − s)Θ(s) ds‖_{ℋ¹_ξ}` with the integral taken by
/// composite Simpson quadrature.
pub fn picard_residual(
    theta: &Trajectory,
    xi_series: &Trajectory,
    v: &PotentialSpec,
    xi: f64,
) -> Result<f64> {
    let dt = theta.spacing()?;
    let op = |s: &HierarchyState| bbgky_rhs(s, v);
    let integral = duhamel_integral(&theta.states, dt, &simpson_weights, &op)?;
    let rhs: Vec<HierarchyState> = xi_series
        .states
        .iter()
        .zip(&integral)
        .map(|(x, i)| {
            let mut s = x.clone();
            s.axpy(C64::new(1.0, 0.0), i);
            s
        })
        .collect();
    sup_distance(&theta.states, &rhs, xi)
}

/// Free-flow time series `Ξ(t_m) = U(t_m)Ξ₀` on `m = 0..=steps`.
pub fn free_series(xi0: &HierarchyState, dt: f64, steps: usize) -> Trajectory {
    let times: Vec<f64> = (0..=steps).map(|m| m as f64 * dt).collect();
    let states = par::map_slice(&times, |&t| xi0.free_propagate(t));
    Trajectory { times, states }
}
