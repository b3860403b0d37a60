//! Exact small-N bosonic dynamics under `H_N = Σ_j(−Δ_{x_j}) + (1/N)Σ_{i<j}V_N(x_i − x_j)`.

use crate::budget;
use crate::error::{Error, Result};
use crate::grid::{self, apply_slot_symbols, Combine, Field, GridSpec, C64};
use crate::interactions::PotentialSpec;
use crate::marginals::{permute_slots, tensor_power, Marginal};
use crate::par;

#[derive(Debug, Clone, PartialEq)]
pub struct NBodyState {
    psi: Field,
    v: PotentialSpec,
}

fn check_budget(grid: &GridSpec, big_n: usize) -> Result<()> {
    budget::check_tensor(
        format!("{big_n}-body wavefunction"),
        budget::entries(grid.points(), big_n),
    )
}

impl NBodyState {
    /// Wraps a rank-`N` wavefunction; `N` is taken from the potential.
    pub fn new(psi: Field, v: PotentialSpec) -> Result<Self> {
        if psi.rank() as u64 != v.big_n() {
            return Err(Error::InvalidArgument(format!(
                "wavefunction has {} slots but the potential is set up for N = {}",
                psi.rank(),
                v.big_n()
            )));
        }
        if psi.grid() != v.grid() {
            return Err(Error::InvalidArgument("wavefunction and potential grids differ".into()));
        }
        Ok(Self { psi, v })
    }

    /// `φ^{⊗N}`.
    pub fn factorized(phi: &Field, v: PotentialSpec) -> Result<Self> {
        let n = v.big_n() as usize;
        check_budget(phi.grid(), n)?;
        let psi = Field::from_data(*phi.grid(), n, tensor_power(phi, n))?;
        Self::new(psi, v)
    }

    /// Normalized `a·φ^{⊗N} + b·χ^{⊗N}`.
    pub fn two_mode(phi: &Field, chi: &Field, a: C64, b: C64, v: PotentialSpec) -> Result<Self> {
        let n = v.big_n() as usize;
        check_budget(phi.grid(), n)?;
        let mut psi = Field::from_data(*phi.grid(), n, tensor_power(phi, n))?;
        psi.scale(a);
        psi.axpy(b, &Field::from_data(*chi.grid(), n, tensor_power(chi, n))?);
        normalize(&mut psi)?;
        Self::new(psi, v)
    }

    /// Normalized symmetrization of `φ₁ ⊗ ⋯ ⊗ φ_N`.
    pub fn symmetrized_product(factors: &[Field], v: PotentialSpec) -> Result<Self> {
        let n = v.big_n() as usize;
        if factors.len() != n {
            return Err(Error::InvalidArgument(format!("need {n} factors, got {}", factors.len())));
        }
        let g = *factors[0].grid();
        check_budget(&g, n)?;
        let p = g.points();
        let len = p.pow(n as u32);
        let product = par::map_indices(len, |i| {
            let mut z = C64::new(1.0, 0.0);
            let mut rem = i;
            for s in (0..n).rev() {
                z *= factors[s].data()[rem % p];
                rem /= p;
            }
            z
        });
        let product = Field::from_data(g, n, product)?;
        let mut psi = Field::zeros(g, n)?;
        for perm in permutations(n) {
            psi.axpy(C64::new(1.0, 0.0), &permute_slots(&product, &perm));
        }
        normalize(&mut psi)?;
        Self::new(psi, v)
    }

    pub fn psi(&self) -> &Field {
        &self.psi
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.v
    }

    pub fn big_n(&self) -> usize {
        self.psi.rank()
    }

    pub fn grid(&self) -> &GridSpec {
        self.psi.grid()
    }

    pub fn with_psi(&self, psi: Field) -> Result<Self> {
        Self::new(psi, self.v.clone())
    }

    /// Largest `‖ψ − P_{s,s+1}ψ‖_{L²}` over adjacent slot swaps.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.big_n();
        (0..n.saturating_sub(1))
            .map(|s| {
                let mut perm: Vec<usize> = (0..n).collect();
                perm.swap(s, s + 1);
                let mut d = permute_slots(&self.psi, &perm);
                d.axpy(C64::new(-1.0, 0.0), &self.psi);
                d.norm_l2()
            })
            .fold(0.0, f64::max)
    }
}

fn normalize(psi: &mut Field) -> Result<()> {
    let norm = psi.norm_l2();
    if norm == 0.0 {
        return Err(Error::InvalidArgument("cannot normalize the zero wavefunction".into()));
    }
    psi.scale(C64::new(1.0 / norm, 0.0));
    Ok(())
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn pair_table(v: &PotentialSpec) -> Vec<f64> {
    let g = *v.grid();
    let p = g.points();
    let real = v.realized().data();
    (0..p * p).map(|i| real[g.sub_modes(i / p, i % p)].re).collect()
}

/// `W(x̲) = (1/N)Σ_{i<j}V_N(x_i − x_j)` at configuration index `idx`.
fn pair_energy(idx: usize, n: usize, p: usize, table: &[f64], scratch: &mut [usize]) -> f64 {
    let mut rem = idx;
    for s in (0..n).rev() {
        scratch[s] = rem % p;
        rem /= p;
    }
    let mut w = 0.0;
    for i in 0..n {
        let row = &table[scratch[i] * p..(scratch[i] + 1) * p];
        for &xj in &scratch[i + 1..n] {
            w += row[xj];
        }
    }
    w / n as f64
}

fn potential_diagonal(state: &NBodyState) -> Vec<f64> {
    let n = state.big_n();
    let p = state.grid().points();
    let table = pair_table(&state.v);
    let len = state.psi.len();
    let mut out = vec![0.0; len];
    par::for_each_chunk_mut(&mut out, 4096, |c, chunk| {
        let mut scratch = vec![0usize; n];
        for (o, w) in chunk.iter_mut().enumerate() {
            *w = pair_energy(c * 4096 + o, n, p, &table, &mut scratch);
        }
    });
    out
}

fn kinetic_apply(psi: &Field) -> Field {
    let g = *psi.grid();
    let n = psi.rank();
    let k2: Vec<C64> = g.wavenumber_sq().into_iter().map(|v| C64::new(v, 0.0)).collect();
    let tables = vec![k2; n];
    let slots: Vec<usize> = (0..n).collect();
    let mut out = psi.clone();
    apply_slot_symbols(out.data_mut(), &g, n, &slots, &tables, Combine::Sum);
    out
}

/// `H_Nψ`: kinetic part spectrally, pair potential pointwise.
pub fn hamiltonian_apply(state: &NBodyState) -> Field {
    hamiltonian_apply_to(state, &state.psi)
}

fn hamiltonian_apply_to(state: &NBodyState, psi: &Field) -> Field {
    let mut out = kinetic_apply(psi);
    let n = state.big_n();
    let p = state.grid().points();
    let table = pair_table(&state.v);
    let src = psi.data();
    par::for_each_chunk_mut(out.data_mut(), 4096, |c, chunk| {
        let mut scratch = vec![0usize; n];
        for (o, z) in chunk.iter_mut().enumerate() {
            let i = c * 4096 + o;
            *z += src[i] * pair_energy(i, n, p, &table, &mut scratch);
        }
    });
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct NBodyTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<NBodyState>,
}

/// Strang split-step: half potential phase, full kinetic flow, half potential phase.
/// Keeps every `record_every`-th step (0: endpoints only).
pub fn nbody_evolve(
    state: &NBodyState,
    dt: f64,
    t_final: f64,
    record_every: usize,
) -> Result<NBodyTrajectory> {
    if !(dt > 0.0) || !(t_final >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need dt > 0 and t_final ≥ 0, got dt = {dt}, t_final = {t_final}"
        )));
    }
    let steps = (t_final / dt - 1e-9).ceil().max(0.0) as usize;
    let mut times = vec![0.0];
    let mut states = vec![state.clone()];
    if steps == 0 {
        return Ok(NBodyTrajectory { times, states });
    }
    let dt = t_final / steps as f64;
    let w = potential_diagonal(state);
    let half: Vec<C64> = w.iter().map(|w| C64::from_polar(1.0, -w * dt / 2.0)).collect();
    let signs = vec![1i8; state.big_n()];
    let mut psi = state.psi.clone();
    let phase = |f: &mut Field| {
        par::for_each_chunk_mut(f.data_mut(), 4096, |c, chunk| {
            for (o, z) in chunk.iter_mut().enumerate() {
                *z *= half[c * 4096 + o];
            }
        });
    };
    for s in 0..steps {
        phase(&mut psi);
        psi = grid::free_propagate(&psi, dt, &signs)?;
        phase(&mut psi);
        if s + 1 == steps || (record_every > 0 && (s + 1) % record_every == 0) {
            times.push((s + 1) as f64 * dt);
            states.push(state.with_psi(psi.clone())?);
        }
    }
    Ok(NBodyTrajectory { times, states })
}

/// `γ^{(k)}_ψ(x̲; x̲′) = ∫ψ(x̲, y̲) conj(ψ(x̲′, y̲)) dy̲` over the last `N − k` slots.
pub fn extract_marginal(state: &NBodyState, k: usize) -> Result<Marginal> {
    let n = state.big_n();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("need 1 ≤ k ≤ N = {n}, got {k}")));
    }
    let g = *state.grid();
    budget::check_tensor(
        format!("{k}-particle marginal"),
        budget::entries(g.points(), 2 * k),
    )?;
    let rows = g.points().pow(k as u32);
    let inner = g.points().pow((n - k) as u32);
    let w = g.cell_volume().powi((n - k) as i32);
    let a = state.psi.data();
    let data = par::map_indices(rows * rows, |i| {
        let (r, c) = (i / rows, i % rows);
        let ar = &a[r * inner..(r + 1) * inner];
        let ac = &a[c * inner..(c + 1) * inner];
        let s: C64 = ar.iter().zip(ac).map(|(x, y)| x * y.conj()).sum();
        s * w
    });
    Marginal::from_data(g, k, data)
}

/// `⟨ψ, H_N^k ψ⟩` for `k ≤ 3`.
pub fn energy_moment(state: &NBodyState, k: usize) -> Result<f64> {
    moment_of(state, k, 0.0)
}

/// `⟨ψ, (H_N + shift)^k ψ⟩`, evaluated as a squared norm or a single quadratic form.
fn moment_of(state: &NBodyState, k: usize, shift: f64) -> Result<f64> {
    if k > 3 {
        return Err(Error::InvalidArgument(format!("moments are limited to k ≤ 3, got {k}")));
    }
    let apply = |f: &Field| {
        let mut out = hamiltonian_apply_to(state, f);
        out.axpy(C64::new(shift, 0.0), f);
        out
    };
    let mut half = state.psi.clone();
    for _ in 0..k / 2 {
        half = apply(&half);
    }
    if k % 2 == 0 {
        return Ok(half.norm_l2().powi(2));
    }
    let value = half.inner(&apply(&half));
    if value.im.abs() > 1e-9 * value.re.abs().max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "moment has imaginary part {}; the Hamiltonian is not Hermitian here",
            value.im
        )));
    }
    Ok(value.re)
}

/// `⟨ψ, R^{(k,2)}ψ⟩ = ‖∏_{j≤k}⟨∇_{x_j}⟩ψ‖²`.
pub fn sobolev_moment(state: &NBodyState, k: usize) -> Result<f64> {
    let slots: Vec<usize> = (0..k).collect();
    Ok(grid::bessel_multiply(&state.psi, 1.0, &slots)?.norm_l2().powi(2))
}

/// `⟨ψ,(H_N + N)^kψ⟩ / (C^k N^k ⟨ψ, R^{(k,2)}ψ⟩)`.
pub fn energy_estimate_check(state: &NBodyState, k: usize, c: f64) -> Result<f64> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidArgument(format!("need 0 < C < 1, got {c}")));
    }
    if k == 0 || k > 2 {
        return Err(Error::InvalidArgument(format!("energy estimate needs k ∈ {{1, 2}}, got {k}")));
    }
    let n = state.big_n() as f64;
    let num = moment_of(state, k, n)?;
    let den = (c * n).powi(k as i32) * sobolev_moment(state, k)?;
    Ok(num / den)
}
