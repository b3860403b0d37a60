//! Finite de Finetti mixtures, the cubic NLS flow and the higher-order energy functionals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{gp_evolve_with_mixture, Closure, EvolutionConfig};
use crate::grid::{bessel_multiply, free_propagate, Field, GridSpec, C64};
use crate::interactions::{gp_collision, Side};
use crate::marginals::{
    admissibility_defect, hierarchy_norm, partial_trace, psd_defect, trace,
    HierarchyState, Marginal, NormFlavor,
};
use crate::par;

/// Where the atoms of a mixture live: the unit sphere (strong de Finetti) or the unit
/// ball (weak de Finetti).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    Sphere,
    Ball,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub weight: f64,
    pub phi: Field,
}

/// Discrete probability measure on one-particle wavefunctions.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    atoms: Vec<Atom>,
    support: Support,
}

impl Mixture {
    pub fn new(atoms: Vec<Atom>, support: Support) -> Result<Self> {
        let first = atoms
            .first()
            .ok_or_else(|| Error::InvalidArgument("a mixture needs at least one atom".into()))?;
        let grid = *first.phi.grid();
        let mut total = 0.0;
        for (i, a) in atoms.iter().enumerate() {
            if a.phi.rank() != 1 || *a.phi.grid() != grid {
                return Err(Error::InvalidArgument(format!(
                    "atom {i} must be a one-particle field on the shared grid"
                )));
            }
            if !(a.weight >= 0.0) {
                return Err(Error::InvalidArgument(format!("atom {i} has negative weight")));
            }
            let norm = a.phi.norm_l2();
            let ok = match support {
                Support::Sphere => (norm - 1.0).abs() <= 1e-10,
                Support::Ball => norm <= 1.0 + 1e-10,
            };
            if !ok {
                return Err(Error::InvalidArgument(format!(
                    "atom {i} has L² norm {norm}, outside the {support:?} support"
                )));
            }
            total += a.weight;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { atoms, support })
    }

    /// Point mass at a unit-norm `φ`.
    pub fn point(phi: Field) -> Result<Self> {
        Self::new(vec![Atom { weight: 1.0, phi }], Support::Sphere)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn grid(&self) -> &GridSpec {
        self.atoms[0].phi.grid()
    }

    /// Same weights, atoms replaced.
    fn with_fields(&self, fields: Vec<Field>) -> Self {
        let atoms = self
            .atoms
            .iter()
            .zip(fields)
            .map(|(a, phi)| Atom { weight: a.weight, phi })
            .collect();
        Self {
            atoms,
            support: self.support,
        }
    }
}

/// Time integrator for `i∂_tφ = −Δφ + κ|φ|²φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NlsScheme {
    /// Second-order Strang splitting: half nonlinear, full linear, half nonlinear.
    Strang,
    /// Fourth-order triple-jump composition of Strang steps.
    Yoshida4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NlsConfig {
    pub dt: f64,
    pub coupling: f64,
    pub scheme: NlsScheme,
}

impl Default for NlsConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            coupling: 1.0,
            scheme: NlsScheme::Yoshida4,
        }
    }
}

fn nonlinear_phase(phi: &mut Field, tau: f64, coupling: f64) {
    for z in phi.data_mut() {
        *z *= C64::from_polar(1.0, -coupling * z.norm_sqr() * tau);
    }
}

fn strang_step(phi: &Field, dt: f64, coupling: f64) -> Field {
    let mut f = phi.clone();
    nonlinear_phase(&mut f, dt / 2.0, coupling);
    let mut f = free_propagate(&f, dt, &[1]).expect("one slot");
    nonlinear_phase(&mut f, dt / 2.0, coupling);
    f
}

fn nls_step(phi: &Field, dt: f64, cfg: &NlsConfig) -> Field {
    match cfg.scheme {
        NlsScheme::Strang => strang_step(phi, dt, cfg.coupling),
        NlsScheme::Yoshida4 => {
            let c = 2f64.powf(1.0 / 3.0);
            let w1 = 1.0 / (2.0 - c);
            let w0 = -c * w1;
            let f = strang_step(phi, w1 * dt, cfg.coupling);
            let f = strang_step(&f, w0 * dt, cfg.coupling);
            strang_step(&f, w1 * dt, cfg.coupling)
        }
    }
}

fn step_count(t: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need dt > 0 and t ≥ 0, got dt = {dt}, t = {t}"
        )));
    }
    Ok((t / dt - 1e-9).ceil().max(0.0) as usize)
}

/// Trajectory `φ(t_0 = 0), φ(t_1), …` of the NLS on the uniform grid `t_j = j·t/steps`
/// with `steps = ⌈t/dt⌉`.
pub fn nls_evolve(phi: &Field, t_final: f64, cfg: &NlsConfig) -> Result<Vec<Field>> {
    if phi.rank() != 1 {
        return Err(Error::InvalidArgument("NLS needs a one-particle field".into()));
    }
    let steps = step_count(t_final, cfg.dt)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(phi.clone());
    if steps == 0 {
        return Ok(out);
    }
    let dt = t_final / steps as f64;
    for _ in 0..steps {
        let next = nls_step(out.last().expect("nonempty"), dt, cfg);
        out.push(next);
    }
    Ok(out)
}

/// `S_tφ`.
pub fn nls_flow(phi: &Field, t: f64, cfg: &NlsConfig) -> Result<Field> {
    if phi.rank() != 1 {
        return Err(Error::InvalidArgument("NLS needs a one-particle field".into()));
    }
    let steps = step_count(t, cfg.dt)?;
    let mut f = phi.clone();
    if steps == 0 {
        return Ok(f);
    }
    let dt = t / steps as f64;
    for _ in 0..steps {
        f = nls_step(&f, dt, cfg);
    }
    Ok(f)
}

pub fn mass(phi: &Field) -> f64 {
    phi.norm_l2().powi(2)
}

/// `‖φ‖²_{H¹} = ‖⟨∇⟩φ‖²_{L²}`.
pub fn h1_norm_sq(phi: &Field) -> f64 {
    bessel_multiply(phi, 1.0, &[0]).expect("one slot").norm_l2().powi(2)
}

pub fn l4_norm_pow4(phi: &Field) -> f64 {
    let w = phi.grid().cell_volume();
    phi.data().iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() * w
}

/// `E[φ] = ½‖φ‖²_{H¹}‖φ‖²_{L²} + ¼‖φ‖⁴_{L⁴}`.
pub fn nls_energy(phi: &Field) -> f64 {
    0.5 * h1_norm_sq(phi) * mass(phi) + 0.25 * l4_norm_pow4(phi)
}

/// Hamiltonian of the NLS flow, `½‖∇φ‖² + ¼κ‖φ‖⁴_{L⁴}`.
pub fn hamiltonian_energy(phi: &Field, coupling: f64) -> f64 {
    0.5 * (h1_norm_sq(phi) - mass(phi)) + 0.25 * coupling * l4_norm_pow4(phi)
}

/// Each atom carried by `S_t`, weights unchanged. Atoms are evolved concurrently.
pub fn flow_mixture_with(mu: &Mixture, t: f64, cfg: &NlsConfig) -> Result<Mixture> {
    let flowed = par::map_slice(mu.atoms(), |a| nls_flow(&a.phi, t, cfg));
    Ok(mu.with_fields(flowed.into_iter().collect::<Result<_>>()?))
}

pub fn flow_mixture(mu: &Mixture, t: f64) -> Result<Mixture> {
    flow_mixture_with(mu, t, &NlsConfig::default())
}

/// `K_ℓ` on a kernel with particles `1..=2i` followed by already reduced ones, acting on the
/// pair `(2i−1, 2i)`: `½(1 − Δ_{x_{2i−1}})Tr_{2i} + ¼B⁺_{2i−1;2i}`.
fn apply_pair_functional(gamma: &Marginal, i: usize) -> Result<Marginal> {
    let k = gamma.k();
    let consumed = 2 * i - 1;
    // Move particle `2i` (0-based `consumed`) to the last position on both sides.
    let mut order: Vec<usize> = (0..k).filter(|&s| s != consumed).collect();
    order.push(consumed);
    let moved = if consumed == k - 1 {
        gamma.clone()
    } else {
        gamma.permute(&order, &order)
    };
    let traced = partial_trace(&moved)?;
    let raised = bessel_multiply(traced.field(), 2.0, &[2 * i - 2])?;
    let mut out = Marginal::from_field(raised)?;
    out = out.scaled(C64::new(0.5, 0.0));
    let contact = gp_collision(&moved, 2 * i - 1, Side::Plus)?;
    out.axpy(C64::new(0.25, 0.0), &contact);
    Ok(out)
}

/// `⟨K^{(m)}⟩` from a `2m`-particle kernel: `K₁K₃⋯K_{2m−1}` applied right to left, then
/// the trace over the `m` surviving particles.
pub fn energy_functional_kernel(gamma: &Marginal, m: usize) -> Result<f64> {
    if m == 0 {
        return Ok(trace(gamma).re);
    }
    if gamma.k() != 2 * m {
        return Err(Error::InvalidArgument(format!(
            "⟨K^({m})⟩ needs a {}-particle kernel, got k = {}",
            2 * m,
            gamma.k()
        )));
    }
    let mut cur = gamma.clone();
    for i in (1..=m).rev() {
        cur = apply_pair_functional(&cur, i)?;
    }
    let tr = trace(&cur);
    let scale = tr.re.abs().max(1.0);
    if tr.im.abs() > 1e-10 * scale {
        return Err(Error::InvalidArgument(format!(
            "energy functional has imaginary residue {}",
            tr.im
        )));
    }
    Ok(tr.re)
}

/// `⟨K^{(m)}⟩_Γ` evaluated on the stored level `γ^{(2m)}`.
pub fn energy_functional_direct(state: &HierarchyState, m: usize) -> Result<f64> {
    if m == 0 {
        return Ok(1.0);
    }
    let gamma = state.level(2 * m).ok_or_else(|| {
        Error::InvalidArgument(format!("⟨K^({m})⟩ needs γ^({}) in the state", 2 * m))
    })?;
    energy_functional_kernel(gamma, m)
}

/// `Σ_i w_i (½ + E[φ_i])^m`.
pub fn energy_functional_mixture(mu: &Mixture, m: usize) -> f64 {
    mu.atoms()
        .iter()
        .map(|a| a.weight * (0.5 + nls_energy(&a.phi)).powi(m as i32))
        .sum()
}

/// `max_i ‖φ_i‖_{H¹}`.
pub fn support_bound(mu: &Mixture) -> f64 {
    mu.atoms()
        .iter()
        .map(|a| h1_norm_sq(&a.phi).sqrt())
        .fold(0.0, f64::max)
}

/// `(Σ_i w_i ‖φ_i‖^{2k}_{H¹})^{1/2k}`.
pub fn h1_moment(mu: &Mixture, k: usize) -> f64 {
    let s: f64 = mu
        .atoms()
        .iter()
        .map(|a| a.weight * h1_norm_sq(&a.phi).powi(k as i32))
        .sum();
    s.powf(1.0 / (2.0 * k as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub atom_energies: Vec<f64>,
    /// `⟨K^{(m)}⟩` for `m = 1..=m_max`, mixture form.
    pub functionals: Vec<f64>,
    pub support_bound: f64,
}

pub fn energy_report(mu: &Mixture, m_max: usize) -> EnergyReport {
    EnergyReport {
        atom_energies: mu.atoms().iter().map(|a| nls_energy(&a.phi)).collect(),
        functionals: (1..=m_max).map(|m| energy_functional_mixture(mu, m)).collect(),
        support_bound: support_bound(mu),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub window: usize,
    pub t_start: f64,
    pub t_end: f64,
    /// `‖Γ(t_end)‖_{ℋ¹_ξ}`.
    pub norm: f64,
    /// `‖Γ₀‖_{𝔉¹_{ξ′}}` of the chain's initial state.
    pub bound: f64,
    pub psd_defect: f64,
    pub admissibility_defect: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub windows: Vec<WindowRecord>,
    pub passed: bool,
}

/// Runs `windows` consecutive windows of length `window`, each started afresh from the
/// flowed mixture and evolved by the mixture-closed GP hierarchy.
pub fn gwp_window_chain(
    mu: &Mixture,
    window: f64,
    windows: usize,
    config: &EvolutionConfig,
    kappa0: f64,
    slack: f64,
) -> Result<ChainReport> {
    if mu.support() != Support::Sphere {
        return Err(Error::InvalidArgument("window chaining needs sphere support".into()));
    }
    let top = config.truncation;
    let start = HierarchyState::from_mixture(mu, top, config.xi_prime)?;
    let bound = hierarchy_norm(&start, 1.0, NormFlavor::Trace)?;
    let nls = NlsConfig {
        dt: config.dt,
        coupling: kappa0,
        ..NlsConfig::default()
    };
    let mut cfg = config.clone();
    cfg.t_final = window;
    cfg.closure = Closure::Mixture;
    cfg.record_every = 0;
    let mut current = mu.clone();
    let mut out = Vec::with_capacity(windows);
    for w in 0..windows {
        let gamma0 = HierarchyState::from_mixture(&current, top, config.xi)?;
        let traj = gp_evolve_with_mixture(&gamma0, &cfg, kappa0, Some(&current))?;
        let end = traj.last().clone().with_xi(config.xi);
        let norm = hierarchy_norm(&end, 1.0, NormFlavor::HilbertSchmidt)?;
        let psd = end
            .levels()
            .iter()
            .map(psd_defect)
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let adm = if top >= 2 {
            admissibility_defect(&end)?.into_iter().fold(0.0, f64::max)
        } else {
            0.0
        };
        let passed = norm <= bound + slack;
        out.push(WindowRecord {
            window: w,
            t_start: w as f64 * window,
            t_end: (w + 1) as f64 * window,
            norm,
            bound,
            psd_defect: psd,
            admissibility_defect: adm,
            passed,
        });
        current = flow_mixture_with(&current, window, &nls)?;
    }
    let passed = out.iter().all(|r| r.passed);
    Ok(ChainReport { windows: out, passed })
}
