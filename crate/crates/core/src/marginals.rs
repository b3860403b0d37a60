//! k-particle marginal density kernels and truncated hierarchy states.
//!
//! A [`Marginal`] of order `k` is a rank-`2k` field whose first `k` slots carry the
//! unprimed positions `x̲` and whose last `k` slots carry the primed positions `x̲′`.
//! Read as a matrix, it is `P^k × P^k` with `P = n^d`, rows indexed by `x̲`. As an
//! operator on `L²`, the kernel acts with the quadrature weight `h^{dk}`, so the
//! operator matrix is `h^{dk}·kernel`.

use serde::{Deserialize, Serialize};

use crate::budget;
use crate::definetti::Mixture;
use crate::error::{Error, Result};
use crate::grid::{self, Combine, Field, GridSpec, C64};
use crate::linalg;
use crate::par;

#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    k: usize,
    field: Field,
}

impl Marginal {
    pub fn zeros(grid: GridSpec, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("marginal order must be at least 1".into()));
        }
        budget::check_tensor(
            format!("{k}-particle kernel"),
            budget::entries(grid.points(), 2 * k),
        )?;
        Ok(Self {
            k,
            field: Field::zeros(grid, 2 * k)?,
        })
    }

    /// Wraps a rank-`2k` field whose slots are ordered unprimed-then-primed.
    pub fn from_field(field: Field) -> Result<Self> {
        if field.rank() == 0 || field.rank() % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "a kernel needs an even positive rank, got {}",
                field.rank()
            )));
        }
        Ok(Self {
            k: field.rank() / 2,
            field,
        })
    }

    pub fn from_data(grid: GridSpec, k: usize, data: Vec<C64>) -> Result<Self> {
        Self::from_field(Field::from_data(grid, 2 * k, data)?)
    }

    /// Kernel of the identity operator, `δ(x̲ − x̲′) = 1/h^{dk}` on the diagonal.
    pub fn identity(grid: GridSpec, k: usize) -> Result<Self> {
        let mut m = Self::zeros(grid, k)?;
        let rows = m.rows();
        let v = 1.0 / grid.cell_volume().powi(k as i32);
        for r in 0..rows {
            m.field.data_mut()[r * rows + r] = C64::new(v, 0.0);
        }
        Ok(m)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn grid(&self) -> &GridSpec {
        self.field.grid()
    }

    /// Matrix side `P^k`.
    pub fn rows(&self) -> usize {
        self.grid().points().pow(self.k as u32)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn into_field(self) -> Field {
        self.field
    }

    pub fn data(&self) -> &[C64] {
        self.field.data()
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        self.field.data_mut()
    }

    /// Weight turning kernel entries into operator matrix entries, `h^{dk}`.
    pub fn operator_weight(&self) -> f64 {
        self.grid().cell_volume().powi(self.k as i32)
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.data()[row * self.rows() + col]
    }

    pub fn scaled(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.field.scale(c);
        out
    }

    /// `self += c·other`.
    pub fn axpy(&mut self, c: C64, other: &Marginal) {
        assert_eq!(self.k, other.k, "marginal order mismatch");
        self.field.axpy(c, &other.field);
    }

    pub fn sub(&self, other: &Marginal) -> Self {
        let mut out = self.clone();
        out.axpy(C64::new(-1.0, 0.0), other);
        out
    }

    /// Kernel of the adjoint operator, `conj(γ(x̲′; x̲))`.
    pub fn adjoint(&self) -> Self {
        let rows = self.rows();
        let src = self.data();
        let data = par::map_indices(rows * rows, |i| {
            let (r, c) = (i / rows, i % rows);
            src[c * rows + r].conj()
        });
        Self {
            k: self.k,
            field: Field::from_data(*self.grid(), 2 * self.k, data).expect("same shape"),
        }
    }

    /// `½(γ + γ*)`.
    pub fn hermitian_part(&self) -> Self {
        let mut out = self.adjoint();
        out.axpy(C64::new(1.0, 0.0), self);
        out.field.scale(C64::new(0.5, 0.0));
        out
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        let rows = self.rows();
        let d = self.data();
        (0..rows)
            .flat_map(|r| (r..rows).map(move |c| (r, c)))
            .map(|(r, c)| (d[r * rows + c] - d[c * rows + r].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise deviation under adjacent transpositions of the unprimed or the
    /// primed slots; zero iff the kernel is invariant under all of `S_k × S_k`.
    pub fn permutation_defect(&self) -> f64 {
        let k = self.k;
        let mut worst: f64 = 0.0;
        for i in 0..k.saturating_sub(1) {
            let mut swap: Vec<usize> = (0..k).collect();
            swap.swap(i, i + 1);
            let id: Vec<usize> = (0..k).collect();
            for (pu, pp) in [(&swap, &id), (&id, &swap)] {
                let p = self.permute(pu, pp);
                worst = worst.max(p.field.max_abs_diff(&self.field));
            }
        }
        worst
    }

    /// Kernel with slots relabeled: output slot `j` reads input unprimed slot
    /// `unprimed[j]` and primed slot `k + primed[j]`.
    pub fn permute(&self, unprimed: &[usize], primed: &[usize]) -> Self {
        let k = self.k;
        let mut perm: Vec<usize> = unprimed.to_vec();
        perm.extend(primed.iter().map(|&p| p + k));
        Self {
            k,
            field: permute_slots(&self.field, &perm),
        }
    }
}

/// Output slot `s` reads input slot `perm[s]`.
pub(crate) fn permute_slots(f: &Field, perm: &[usize]) -> Field {
    let rank = f.rank();
    assert_eq!(perm.len(), rank);
    let p = f.grid().points();
    let in_strides: Vec<usize> = (0..rank).map(|s| p.pow((rank - 1 - s) as u32)).collect();
    let src_strides: Vec<usize> = perm.iter().map(|&s| in_strides[s]).collect();
    let src = f.data();
    let data = par::map_indices(f.len(), |i| {
        let mut rem = i;
        let mut j = 0;
        for s in (0..rank).rev() {
            let q = rem % p;
            rem /= p;
            j += q * src_strides[s];
        }
        src[j]
    });
    Field::from_data(*f.grid(), rank, data).expect("same shape")
}

/// `φ^{⊗k}` as a flat vector of length `P^k`.
pub(crate) fn tensor_power(phi: &Field, k: usize) -> Vec<C64> {
    let p = phi.len();
    let src = phi.data();
    par::map_indices(p.pow(k as u32), |i| {
        let mut rem = i;
        let mut acc = C64::new(1.0, 0.0);
        for _ in 0..k {
            acc *= src[rem % p];
            rem /= p;
        }
        acc
    })
}

/// Adds `w·v v*` to a `rows × rows` row-major buffer.
fn add_outer(out: &mut [C64], v: &[C64], w: f64) {
    let rows = v.len();
    par::for_each_chunk_mut(out, rows, |r, row| {
        let a = v[r] * w;
        for (z, b) in row.iter_mut().zip(v) {
            *z += a * b.conj();
        }
    });
}

fn check_kernel_budget(grid: &GridSpec, k: usize) -> Result<()> {
    budget::check_tensor(
        format!("{k}-particle kernel"),
        budget::entries(grid.points(), 2 * k),
    )
}

/// `∏_j φ(x_j) conj(φ(x′_j))`.
pub fn pure_product_marginal(phi: &Field, k: usize) -> Result<Marginal> {
    if phi.rank() != 1 {
        return Err(Error::InvalidArgument("expected a one-particle field".into()));
    }
    check_kernel_budget(phi.grid(), k)?;
    let mut m = Marginal::zeros(*phi.grid(), k)?;
    let v = tensor_power(phi, k);
    add_outer(m.data_mut(), &v, 1.0);
    Ok(m)
}

/// `Σ_i w_i (|φ_i⟩⟨φ_i|)^{⊗k}`.
pub fn mixture_marginal(mixture: &Mixture, k: usize) -> Result<Marginal> {
    let grid = *mixture.grid();
    check_kernel_budget(&grid, k)?;
    let mut m = Marginal::zeros(grid, k)?;
    for atom in mixture.atoms() {
        let v = tensor_power(&atom.phi, k);
        add_outer(m.data_mut(), &v, atom.weight);
    }
    Ok(m)
}

/// `Tr_k γ`: contracts the last unprimed slot with the last primed slot.
pub fn partial_trace(gamma: &Marginal) -> Result<Marginal> {
    if gamma.k < 2 {
        return Err(Error::InvalidArgument(
            "partial trace needs k >= 2; use trace for k = 1".into(),
        ));
    }
    let p = gamma.grid().points();
    let rows = gamma.rows();
    let out_rows = rows / p;
    let w = gamma.grid().cell_volume();
    let src = gamma.data();
    let data = par::map_indices(out_rows * out_rows, |i| {
        let (x, xp) = (i / out_rows, i % out_rows);
        let mut acc = C64::default();
        for y in 0..p {
            acc += src[(x * p + y) * rows + xp * p + y];
        }
        acc * w
    });
    Marginal::from_data(*gamma.grid(), gamma.k - 1, data)
}

/// `Tr γ = h^{dk} Σ_x̲ γ(x̲; x̲)`.
pub fn trace(gamma: &Marginal) -> C64 {
    let rows = gamma.rows();
    let d = gamma.data();
    let s: C64 = (0..rows).map(|r| d[r * rows + r]).sum();
    s * gamma.operator_weight()
}

/// `S^{(k,α)}γ`: the Bessel multiplier `⟨∇⟩^α` on every unprimed and primed slot.
pub fn sobolev_weighted(gamma: &Marginal, alpha: f64) -> Result<Marginal> {
    let slots: Vec<usize> = (0..2 * gamma.k).collect();
    Ok(Marginal {
        k: gamma.k,
        field: grid::bessel_multiply(&gamma.field, alpha, &slots)?,
    })
}

/// `‖S^{(k,α)}γ‖_{L²}`, the Hilbert–Schmidt–Sobolev norm, by Parseval on one forward
/// transform.
pub fn sobolev_norm(gamma: &Marginal, alpha: f64) -> Result<f64> {
    if alpha < 0.0 || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Bessel exponent must be nonnegative, got {alpha}"
        )));
    }
    if alpha == 0.0 {
        return Ok(gamma.field.norm_l2());
    }
    let g = *gamma.grid();
    let rank = 2 * gamma.k;
    let mut hat = gamma.field.data().to_vec();
    let all: Vec<usize> = (0..rank).collect();
    grid::forward_raw(&mut hat, &g, rank, &all);
    let axes = (rank * g.dim()) as i32;
    let scale = (g.spacing() / g.n() as f64).powi(axes);
    let weights: Vec<f64> = gamma
        .grid()
        .wavenumber_sq()
        .into_iter()
        .map(|k2| (1.0 + k2).powf(alpha))
        .collect();
    let p = weights.len();
    let d = &hat;
    let total: f64 = par::sum_indices(d.len(), |i| {
        let mut rem = i;
        let mut w = 1.0;
        for _ in 0..rank {
            w *= weights[rem % p];
            rem /= p;
        }
        w * d[i].norm_sqr()
    });
    Ok((total * scale).sqrt())
}

/// `Tr|S^{(k,α)}γ|` evaluated on the Hermitian part by dense eigendecomposition.
pub fn trace_sobolev_norm(gamma: &Marginal, alpha: f64) -> Result<f64> {
    budget::check_eigen("trace-norm eigensolve", gamma.rows())?;
    let s = sobolev_weighted(gamma, alpha)?;
    let ev = linalg::hermitian_eigenvalues(s.data(), s.rows(), s.operator_weight())?;
    Ok(ev.iter().map(|l| l.abs()).sum())
}

/// Trace norm of `γ` as an operator (Hermitian part).
pub fn trace_norm(gamma: &Marginal) -> Result<f64> {
    trace_sobolev_norm(gamma, 0.0)
}

/// `max(0, −λ_min)` of the Hermitized operator.
pub fn psd_defect(gamma: &Marginal) -> Result<f64> {
    let ev = linalg::hermitian_eigenvalues(gamma.data(), gamma.rows(), gamma.operator_weight())?;
    Ok((-ev[0]).max(0.0))
}

/// Tolerance below which [`psd_defect`] counts as positive semidefinite.
pub fn psd_tolerance(gamma: &Marginal) -> f64 {
    1e-10 * trace(gamma).re.abs().max(f64::MIN_POSITIVE)
}

/// `Σ_i 2^{-i} |Tr(J_i(γ_a − γ_b))|`, `i = 1, 2, …`, with each observable rescaled to
/// operator norm at most one.
pub fn weakstar_metric(a: &Marginal, b: &Marginal, observables: &[Marginal]) -> Result<f64> {
    if a.k != b.k {
        return Err(Error::InvalidArgument("marginal orders differ".into()));
    }
    let diff = a.sub(b);
    let rows = diff.rows();
    let w = diff.operator_weight();
    let mut total = 0.0;
    let mut coeff = 0.5;
    for j in observables {
        if j.k != a.k {
            return Err(Error::InvalidArgument("observable order differs".into()));
        }
        let norm = linalg::operator_norm(j.data(), rows, w)?;
        let rescale = if norm > 1.0 { 1.0 / norm } else { 1.0 };
        let jd = j.data();
        let dd = diff.data();
        let tr: C64 = par::sum_indices(rows * rows, |i| {
            let (r, c) = (i / rows, i % rows);
            jd[r * rows + c] * dd[c * rows + r]
        });
        total += coeff * (tr * (w * w * rescale)).norm();
        coeff *= 0.5;
    }
    Ok(total)
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

/// Projection onto permutation-symmetric Hermitian kernels: averages over
/// independent permutations of unprimed and primed slots, then Hermitizes.
pub fn symmetrize(gamma: &Marginal) -> Marginal {
    let k = gamma.k;
    let perms = permutations(k);
    let id: Vec<usize> = (0..k).collect();
    let inv = C64::new(1.0 / perms.len() as f64, 0.0);

    let mut stage = Marginal {
        k,
        field: Field::zeros(*gamma.grid(), 2 * k).expect("same shape"),
    };
    for p in &perms {
        stage.axpy(inv, &gamma.permute(p, &id));
    }
    let mut out = Marginal {
        k,
        field: Field::zeros(*gamma.grid(), 2 * k).expect("same shape"),
    };
    for p in &perms {
        out.axpy(inv, &stage.permute(&id, p));
    }
    out.hermitian_part()
}

/// `U^{(k)}(t)γ = e^{itΔ_x̲} γ e^{−itΔ_x̲′}`.
pub fn free_propagate_marginal(gamma: &Marginal, t: f64) -> Marginal {
    let k = gamma.k;
    let mut signs = vec![1i8; k];
    signs.extend(std::iter::repeat(-1i8).take(k));
    Marginal {
        k,
        field: grid::free_propagate(&gamma.field, t, &signs).expect("sign count matches"),
    }
}

/// Kernel of `Σ_j [−Δ_{x_j}, γ]`, i.e. `(−Δ_x̲ + Δ_x̲′)γ`.
pub fn kinetic_commutator(gamma: &Marginal) -> Marginal {
    let k = gamma.k;
    let g = *gamma.grid();
    let k2: Vec<C64> = g.wavenumber_sq().into_iter().map(|v| C64::new(v, 0.0)).collect();
    let neg: Vec<C64> = k2.iter().map(|v| -v).collect();
    let mut tables = vec![k2; k];
    tables.extend(std::iter::repeat(neg).take(k));
    let slots: Vec<usize> = (0..2 * k).collect();
    let mut out = gamma.clone();
    grid::apply_slot_symbols(out.data_mut(), &g, 2 * k, &slots, &tables, Combine::Sum);
    out
}

/// Which per-level norm a hierarchy norm sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormFlavor {
    /// `‖S^{(k,α)}γ‖_{L²}` per level.
    HilbertSchmidt,
    /// `Tr|S^{(k,α)}γ|` per level.
    Trace,
}

/// Truncated hierarchy `(γ^{(1)}, …, γ^{(K)})`; levels above `K` are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyState {
    entries: Vec<Marginal>,
    xi: f64,
}

impl HierarchyState {
    pub fn new(entries: Vec<Marginal>, xi: f64) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("hierarchy needs at least one level".into()));
        }
        let grid = *entries[0].grid();
        for (i, e) in entries.iter().enumerate() {
            if e.k != i + 1 {
                return Err(Error::InvalidArgument(format!(
                    "level {} holds a {}-particle kernel",
                    i + 1,
                    e.k
                )));
            }
            if *e.grid() != grid {
                return Err(Error::InvalidArgument("levels use different grids".into()));
            }
        }
        Ok(Self { entries, xi })
    }

    pub fn zeros(grid: GridSpec, top: usize, xi: f64) -> Result<Self> {
        let entries = (1..=top)
            .map(|k| Marginal::zeros(grid, k))
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries, xi)
    }

    /// Levels `1..=top` of a mixture, `γ^{(k)} = Σ w_i (|φ_i⟩⟨φ_i|)^{⊗k}`.
    pub fn from_mixture(mixture: &Mixture, top: usize, xi: f64) -> Result<Self> {
        let entries = (1..=top)
            .map(|k| mixture_marginal(mixture, k))
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries, xi)
    }

    /// Truncation level `K`.
    pub fn top(&self) -> usize {
        self.entries.len()
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn with_xi(mut self, xi: f64) -> Self {
        self.xi = xi;
        self
    }

    pub fn grid(&self) -> &GridSpec {
        self.entries[0].grid()
    }

    /// `γ^{(k)}` for `1 ≤ k ≤ K`.
    pub fn level(&self, k: usize) -> Option<&Marginal> {
        k.checked_sub(1).and_then(|i| self.entries.get(i))
    }

    pub fn level_mut(&mut self, k: usize) -> Option<&mut Marginal> {
        k.checked_sub(1).and_then(move |i| self.entries.get_mut(i))
    }

    pub fn levels(&self) -> &[Marginal] {
        &self.entries
    }

    pub fn levels_mut(&mut self) -> &mut [Marginal] {
        &mut self.entries
    }

    pub fn into_levels(self) -> Vec<Marginal> {
        self.entries
    }

    /// `self += c·other`, level by level.
    pub fn axpy(&mut self, c: C64, other: &HierarchyState) {
        assert_eq!(self.top(), other.top(), "truncation mismatch");
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            a.axpy(c, b);
        }
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            entries: self.entries.iter().map(|e| e.scaled(c)).collect(),
            xi: self.xi,
        }
    }

    pub fn sub(&self, other: &HierarchyState) -> Self {
        let mut out = self.clone();
        out.axpy(C64::new(-1.0, 0.0), other);
        out
    }

    /// `U(t)Γ`, level by level.
    pub fn free_propagate(&self, t: f64) -> Self {
        Self {
            entries: par::map_slice(&self.entries, |e| free_propagate_marginal(e, t)),
            xi: self.xi,
        }
    }
}

/// `Σ_{k≤K} ξ^k ‖γ^{(k)}‖` for the selected per-level norm.
pub fn hierarchy_norm(state: &HierarchyState, alpha: f64, flavor: NormFlavor) -> Result<f64> {
    hierarchy_norm_with_xi(state, alpha, flavor, state.xi)
}

pub fn hierarchy_norm_with_xi(
    state: &HierarchyState,
    alpha: f64,
    flavor: NormFlavor,
    xi: f64,
) -> Result<f64> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::InvalidArgument(format!("ξ must lie in (0,1), got {xi}")));
    }
    let mut total = 0.0;
    for (i, g) in state.entries.iter().enumerate() {
        let norm = match flavor {
            NormFlavor::HilbertSchmidt => sobolev_norm(g, alpha)?,
            NormFlavor::Trace => trace_sobolev_norm(g, alpha)?,
        };
        total += xi.powi(i as i32 + 1) * norm;
    }
    Ok(total)
}

/// `‖Tr_{k+1}γ^{(k+1)} − γ^{(k)}‖_{HS}` for `k = 1..K−1`.
pub fn admissibility_defect(state: &HierarchyState) -> Result<Vec<f64>> {
    if state.top() < 2 {
        return Err(Error::InvalidArgument(
            "admissibility needs at least two levels".into(),
        ));
    }
    state
        .entries
        .windows(2)
        .map(|w| {
            let reduced = partial_trace(&w[1])?;
            sobolev_norm(&reduced.sub(&w[0]), 0.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::definetti::{Atom, Support};
    use crate::testutil::{random_kernel, random_smooth_unit, unit_constant};

    fn grid() -> GridSpec {
        GridSpec::new(1, 8, 2.0 * std::f64::consts::PI).unwrap()
    }

    #[test]
    fn pure_product_trace_and_reduction() {
        let g = grid();
        let phi = random_smooth_unit(g, 1);
        for k in 1..=3 {
            let m = pure_product_marginal(&phi, k).unwrap();
            assert!((trace(&m) - 1.0).norm() < 1e-12);
            if k >= 2 {
                let r = partial_trace(&m).unwrap();
                let expect = pure_product_marginal(&phi, k - 1).unwrap();
                assert!(r.field.max_abs_diff(&expect.field) < 1e-12);
            }
        }
        let m = pure_product_marginal(&phi, 1).unwrap();
        assert!(psd_defect(&m).unwrap() < 1e-12);
        assert!(partial_trace(&m).is_err());
    }

    #[test]
    fn trace_is_linear() {
        let g = grid();
        let z = Marginal::zeros(g, 2).unwrap();
        assert_eq!(trace(&z), C64::default());
        let r = random_kernel(g, 2, 4);
        let c = C64::new(0.7, -1.3);
        assert!((trace(&r.scaled(c)) - c * trace(&r)).norm() < 1e-12 * trace(&r).norm().max(1.0));
        let reduced = partial_trace(&r).unwrap();
        assert!((trace(&reduced) - trace(&r)).norm() < 1e-12 * trace(&r).norm());
    }

    #[test]
    fn two_orthonormal_atoms() {
        let g = grid();
        let l = g.length();
        let a = Field::from_fn(g, |_| C64::new(l.powf(-0.5), 0.0));
        let b = Field::from_fn(g, |x| C64::from_polar(l.powf(-0.5), x[0]));
        let mu = Mixture::new(
            vec![Atom { weight: 0.5, phi: a }, Atom { weight: 0.5, phi: b }],
            Support::Sphere,
        )
        .unwrap();
        let m = mixture_marginal(&mu, 1).unwrap();
        assert!((trace(&m) - 1.0).norm() < 1e-12);
        let ev = linalg::hermitian_eigenvalues(m.data(), m.rows(), m.operator_weight()).unwrap();
        let top: Vec<f64> = ev.iter().rev().take(2).copied().collect();
        assert!((top[0] - 0.5).abs() < 1e-12 && (top[1] - 0.5).abs() < 1e-12);
        assert!(ev.iter().rev().skip(2).all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn sobolev_norm_of_pure_product_factorizes() {
        let g = grid();
        let phi = random_smooth_unit(g, 9);
        for alpha in [0.0, 1.0, 2.0] {
            let h_alpha = grid::bessel_multiply(&phi, alpha, &[0]).unwrap().norm_l2();
            for k in 1..=3 {
                let m = pure_product_marginal(&phi, k).unwrap();
                let got = sobolev_norm(&m, alpha).unwrap();
                let want = h_alpha.powi(2 * k as i32);
                assert!(((got - want) / want).abs() < 1e-10, "α={alpha} k={k}");
            }
        }
        let c = pure_product_marginal(&unit_constant(g), 1).unwrap();
        let a0 = sobolev_norm(&c, 0.0).unwrap();
        assert!((sobolev_norm(&c, 1.0).unwrap() - a0).abs() < 1e-12);
    }

    #[test]
    fn trace_norm_examples() {
        let g = grid();
        let phi = random_smooth_unit(g, 3);
        let m = pure_product_marginal(&phi, 1).unwrap();
        assert!((trace_norm(&m).unwrap() - 1.0).abs() < 1e-12);
        let mu = crate::testutil::random_sphere_mixture(g, 3, 21);
        let m2 = mixture_marginal(&mu, 2).unwrap();
        assert!((trace_norm(&m2).unwrap() - trace(&m2).re).abs() < 1e-12);
        let h = random_kernel(g, 2, 17).hermitian_part();
        assert!(trace_norm(&h).unwrap() >= sobolev_norm(&h, 0.0).unwrap());
    }

    #[test]
    fn psd_defect_of_indefinite_kernel() {
        let g = grid();
        let l = g.length();
        let a = Field::from_fn(g, |_| C64::new(l.powf(-0.5), 0.0));
        let b = Field::from_fn(g, |x| C64::from_polar(l.powf(-0.5), 2.0 * x[0]));
        let mut m = pure_product_marginal(&a, 1).unwrap();
        m.axpy(C64::new(-0.5, 0.0), &pure_product_marginal(&b, 1).unwrap());
        assert!((psd_defect(&m).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn admissibility_examples() {
        let g = grid();
        let phi = random_smooth_unit(g, 2);
        let mu = Mixture::point(phi).unwrap();
        let s = HierarchyState::from_mixture(&mu, 3, 0.5).unwrap();
        assert!(admissibility_defect(&s).unwrap().iter().all(|d| *d < 1e-12));

        let mut levels = s.clone().into_levels();
        levels[1] = levels[1].scaled(C64::new(2.0, 0.0));
        let bad = HierarchyState::new(levels, 0.5).unwrap();
        let d = admissibility_defect(&bad).unwrap();
        let want = sobolev_norm(s.level(1).unwrap(), 0.0).unwrap();
        assert!((d[0] - want).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_slot_choice_is_immaterial_for_symmetric_kernels() {
        let g = grid();
        let mu = crate::testutil::random_sphere_mixture(g, 3, 5);
        let m = mixture_marginal(&mu, 3).unwrap();
        let last = partial_trace(&m).unwrap();
        let first = partial_trace(&m.permute(&[1, 2, 0], &[1, 2, 0])).unwrap();
        assert!(first.field.max_abs_diff(&last.field) < 1e-13);
    }

    #[test]
    fn symmetrize_is_a_projection() {
        let g = grid();
        let r = random_kernel(g, 2, 8);
        let s = symmetrize(&r);
        assert!(s.hermiticity_defect() < 1e-13);
        assert!(s.permutation_defect() < 1e-13);
        let s2 = symmetrize(&s);
        assert!(s2.field.max_abs_diff(&s.field) < 1e-13);
        let mu = crate::testutil::random_sphere_mixture(g, 2, 1);
        let m = mixture_marginal(&mu, 2).unwrap();
        assert!(symmetrize(&m).field.max_abs_diff(&m.field) < 1e-13);
    }

    #[test]
    fn free_flow_preserves_norms() {
        let g = grid();
        let mu = crate::testutil::random_sphere_mixture(g, 3, 12);
        let s = HierarchyState::from_mixture(&mu, 2, 0.5).unwrap();
        let t = s.free_propagate(0.31);
        for (a, b) in s.levels().iter().zip(t.levels()) {
            assert!((trace(a) - trace(b)).norm() < 1e-10);
            for alpha in [0.0, 1.0, 2.0] {
                let x = sobolev_norm(a, alpha).unwrap();
                assert!((x - sobolev_norm(b, alpha).unwrap()).abs() < 1e-10 * x);
            }
            assert!(psd_defect(b).unwrap() < 1e-10);
        }
        assert!(admissibility_defect(&t).unwrap()[0] < 1e-10);
        assert_eq!(free_propagate_marginal(s.level(2).unwrap(), 0.0), *s.level(2).unwrap());
    }

    #[test]
    fn hierarchy_norm_examples() {
        let g = grid();
        let phi = random_smooth_unit(g, 4);
        let c = grid::bessel_multiply(&phi, 1.0, &[0]).unwrap().norm_l2();
        let s = HierarchyState::from_mixture(&Mixture::point(phi).unwrap(), 3, 0.3).unwrap();
        let got = hierarchy_norm(&s, 1.0, NormFlavor::HilbertSchmidt).unwrap();
        let want: f64 = (1..=3).map(|k| (0.3 * c * c).powi(k)).sum();
        assert!(((got - want) / want).abs() < 1e-10);
        let tr = hierarchy_norm(&s, 1.0, NormFlavor::Trace).unwrap();
        assert!(tr >= got * (1.0 - 1e-12));
        let z = HierarchyState::zeros(g, 2, 0.3).unwrap();
        assert_eq!(hierarchy_norm(&z, 1.0, NormFlavor::HilbertSchmidt).unwrap(), 0.0);
        assert!(hierarchy_norm_with_xi(&z, 1.0, NormFlavor::Trace, 1.5).is_err());
    }

    #[test]
    fn weakstar_metric_examples() {
        let g = grid();
        let mu = crate::testutil::random_sphere_mixture(g, 2, 3);
        let a = mixture_marginal(&mu, 1).unwrap();
        let b = pure_product_marginal(&random_smooth_unit(g, 77), 1).unwrap();
        let obs = vec![random_kernel(g, 1, 1), random_kernel(g, 1, 2)];
        assert_eq!(weakstar_metric(&a, &a, &obs).unwrap(), 0.0);
        let id = Marginal::identity(g, 1).unwrap().scaled(C64::new(1.0 / g.points() as f64, 0.0));
        assert!(weakstar_metric(&a, &b, &[id]).unwrap() < 1e-13);
        assert!(weakstar_metric(&a, &b, &obs).unwrap() > 0.0);
    }

    #[test]
    fn kinetic_commutator_of_plane_wave_projector() {
        // γ = |e_1⟩⟨e_0|: (−Δ_x + Δ_x′)γ = (1 − 0)γ
        let g = grid();
        let l = g.length();
        let e0 = Field::from_fn(g, |_| C64::new(l.powf(-0.5), 0.0));
        let e1 = Field::from_fn(g, |x| C64::from_polar(l.powf(-0.5), x[0]));
        let rows = g.points();
        let data = (0..rows * rows)
            .map(|i| e1.data()[i / rows] * e0.data()[i % rows].conj())
            .collect();
        let m = Marginal::from_data(g, 1, data).unwrap();
        let c = kinetic_commutator(&m);
        assert!(c.field.max_abs_diff(&m.field) < 1e-12);
    }
}
