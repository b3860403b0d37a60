//! Scaled pair potentials and the collision operators of the GP and BBGKY hierarchies.
//!
//! Conventions shared by every operator here:
//! - particle indices `i`, `j` are 1-based, as in `B_{j;k+1}`;
//! - a delta contraction `∫dy δ(x − y) f(y)` is realized as `f(x)` with no `1/h^d`
//!   factor (the quadrature weight and the grid delta cancel);
//! - primed-variable (`−`) operators are obtained by conjugate-transposing the unprimed
//!   (`+`) implementation, `B^−γ = (B^+γ^*)^*`.

use serde::{Deserialize, Serialize};

use crate::budget;
use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec, C64};
use crate::marginals::{HierarchyState, Marginal};
use crate::par;

/// Which side of the kernel a collision or interaction term acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// Unprimed variables, the `+` terms.
    Plus,
    /// Primed variables, the `−` terms.
    Minus,
}

/// Built-in base profiles, normalized to unit quadrature mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Gaussian,
    Bump,
}

impl std::str::FromStr for ProfileKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "bump" => Ok(Self::Bump),
            other => Err(Error::InvalidArgument(format!("unknown profile {other:?}"))),
        }
    }
}

/// Samples a built-in profile centered at the origin of the torus, scaled to
/// `h^d Σ V = 1`.
pub fn builtin_profile(grid: GridSpec, kind: ProfileKind, width: f64) -> Result<Field> {
    if !(width > 0.0) {
        return Err(Error::InvalidArgument(format!("profile width must be positive, got {width}")));
    }
    let data: Vec<C64> = (0..grid.points())
        .map(|p| {
            let x = grid.centered_position(p);
            let r2: f64 = x.iter().take(grid.dim()).map(|v| v * v).sum();
            let v = match kind {
                ProfileKind::Gaussian => (-r2 / (2.0 * width * width)).exp(),
                ProfileKind::Bump => {
                    let s = r2 / (width * width);
                    if s < 1.0 {
                        (-1.0 / (1.0 - s)).exp()
                    } else {
                        0.0
                    }
                }
            };
            C64::new(v, 0.0)
        })
        .collect();
    let mass: f64 = data.iter().map(|z| z.re).sum::<f64>() * grid.cell_volume();
    if mass <= 0.0 {
        return Err(Error::InvalidArgument(
            "profile has no mass on this grid; increase the width".into(),
        ));
    }
    Field::from_data(grid, 1, data.into_iter().map(|z| z / mass).collect())
}

/// Base profile `V`, its scaled realization `V_N(x) = N^{dβ} V(N^β x)` on the grid, and
/// the coupling `κ₀ = h^d Σ V`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    profile: Field,
    beta: f64,
    big_n: u64,
    kappa0: f64,
    realized: Field,
    resolvable: bool,
}

impl PotentialSpec {
    pub fn profile(&self) -> &Field {
        &self.profile
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn big_n(&self) -> u64 {
        self.big_n
    }

    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }

    /// `V_N` sampled on the grid.
    pub fn realized(&self) -> &Field {
        &self.realized
    }

    /// False when `N^β` squeezes the profile below the grid resolution.
    pub fn resolvable(&self) -> bool {
        self.resolvable
    }

    pub fn grid(&self) -> &GridSpec {
        self.realized.grid()
    }

    /// `h^d Σ V_N`.
    pub fn realized_mass(&self) -> f64 {
        self.realized.data().iter().map(|z| z.re).sum::<f64>() * self.grid().cell_volume()
    }

    /// `V̂_N(q) = h^d Σ_z V_N(z) e^{−iq·z}` for every spectral point `q` of one slot.
    pub fn spectrum(&self) -> Vec<C64> {
        let g = *self.grid();
        let mut data = self.realized.data().to_vec();
        crate::grid::forward_raw(&mut data, &g, 1, &[0]);
        let w = g.cell_volume();
        data.into_iter().map(|z| z * w).collect()
    }

    /// The grid delta `δ_0 / h^d`, for which `B^{main}_N` reduces to the contact operator.
    pub fn delta_surrogate(grid: GridSpec, big_n: u64) -> Self {
        let mut data = vec![C64::default(); grid.points()];
        data[0] = C64::new(1.0 / grid.cell_volume(), 0.0);
        let realized = Field::from_data(grid, 1, data).expect("one slot");
        Self {
            profile: realized.clone(),
            beta: 0.0,
            big_n,
            kappa0: 1.0,
            realized,
            resolvable: true,
        }
    }

    /// Vanishing potential (mass zero).
    pub fn zero(grid: GridSpec, big_n: u64) -> Self {
        let realized = Field::zeros(grid, 1).expect("one slot");
        Self {
            profile: realized.clone(),
            beta: 0.0,
            big_n,
            kappa0: 0.0,
            realized,
            resolvable: true,
        }
    }

    /// Same base profile at a different particle number.
    pub fn with_big_n(&self, big_n: u64) -> Result<Self> {
        if self.beta == 0.0 {
            let mut out = self.clone();
            out.big_n = big_n;
            return Ok(out);
        }
        realize_potential(&self.profile, self.beta, big_n)
    }
}

/// Root-mean-square radius of a nonnegative profile, per axis.
fn rms_width(profile: &Field) -> f64 {
    let g = profile.grid();
    let mut mass = 0.0;
    let mut second = 0.0;
    for (p, z) in profile.data().iter().enumerate() {
        let x = g.centered_position(p);
        let r2: f64 = x.iter().take(g.dim()).map(|v| v * v).sum();
        mass += z.re;
        second += z.re * r2;
    }
    if mass <= 0.0 {
        return 0.0;
    }
    (second / mass / g.dim() as f64).sqrt()
}

/// Trigonometric interpolant of one-slot samples, evaluated at arbitrary points.
struct SpectralInterpolant {
    grid: GridSpec,
    coeffs: Vec<C64>,
}

impl SpectralInterpolant {
    fn new(samples: &Field) -> Self {
        let g = *samples.grid();
        let mut coeffs = samples.data().to_vec();
        crate::grid::forward_raw(&mut coeffs, &g, 1, &[0]);
        let norm = 1.0 / g.points() as f64;
        coeffs.iter_mut().for_each(|c| *c *= norm);
        Self { grid: g, coeffs }
    }

    fn eval(&self, y: [f64; 3]) -> C64 {
        let g = &self.grid;
        let n = g.n();
        let d = g.dim();
        // Per-axis basis values; the Nyquist bin uses cos so real data interpolates to real.
        let mut basis = vec![[C64::default(); 3]; n];
        for (i, b) in basis.iter_mut().enumerate() {
            let k = g.frequency(i);
            for a in 0..d {
                b[a] = if i == n / 2 {
                    C64::new((k * y[a]).cos(), 0.0)
                } else {
                    C64::from_polar(1.0, k * y[a])
                };
            }
        }
        let mut acc = C64::default();
        for (p, c) in self.coeffs.iter().enumerate() {
            let idx = g.axis_indices(p);
            let mut w = *c;
            for a in 0..d {
                w *= basis[idx[a]][a];
            }
            acc += w;
        }
        acc
    }
}

/// `V_N(x) = N^{dβ} V(N^β x)` on the grid, with `V` evaluated through the spectral
/// interpolant of the sampled base profile. Points whose compressed preimage `N^β x`
/// leaves the fundamental cell `[−L/2, L/2)^d` receive zero.
pub fn realize_potential(profile: &Field, beta: f64, big_n: u64) -> Result<PotentialSpec> {
    let g = *profile.grid();
    if profile.rank() != 1 {
        return Err(Error::InvalidArgument("potential profile must be a one-slot field".into()));
    }
    if !(beta > 0.0 && beta < 0.25) {
        return Err(Error::InvalidArgument(format!("β must lie in (0, 1/4), got {beta}")));
    }
    if big_n < 1 {
        return Err(Error::InvalidArgument("particle number must be at least 1".into()));
    }
    let scale_max = profile.data().iter().map(|z| z.norm()).fold(0.0, f64::max);
    for (p, z) in profile.data().iter().enumerate() {
        if z.re < -1e-12 * scale_max || z.im.abs() > 1e-12 * scale_max {
            return Err(Error::InvalidArgument(
                "potential profile must be real and nonnegative".into(),
            ));
        }
        let mirror = g.negate_mode(p);
        if (profile.data()[mirror] - z).norm() > 1e-10 * scale_max {
            return Err(Error::InvalidArgument("potential profile must be even".into()));
        }
    }
    let kappa0 = profile.data().iter().map(|z| z.re).sum::<f64>() * g.cell_volume();

    let s = (big_n as f64).powf(beta);
    let amp = s.powi(g.dim() as i32);
    let half = g.length() / 2.0;
    let realized = if big_n == 1 {
        profile.clone()
    } else {
        let interp = SpectralInterpolant::new(profile);
        let data = par::map_indices(g.points(), |p| {
            let x = g.centered_position(p);
            let mut y = [0.0; 3];
            for a in 0..g.dim() {
                y[a] = s * x[a];
                if y[a] < -half || y[a] >= half {
                    return C64::default();
                }
            }
            C64::new(amp * interp.eval(y).re, 0.0)
        });
        Field::from_data(g, 1, data)?
    };
    let resolvable = rms_width(profile) / s >= g.spacing();
    Ok(PotentialSpec {
        profile: profile.clone(),
        beta,
        big_n,
        kappa0,
        realized,
        resolvable,
    })
}

fn check_collision_index(gamma_next: &Marginal, j: usize) -> Result<usize> {
    let k = gamma_next.k().checked_sub(1).unwrap_or(0);
    if k == 0 || j == 0 || j > k {
        return Err(Error::Index(format!(
            "collision index j = {j} needs 1 ≤ j ≤ k = {k}"
        )));
    }
    Ok(k)
}

/// `(B^+_{j;k+1}γ)(x̲; x̲′) = γ(x̲, x_j; x̲′, x_j)`.
fn contact_plus(gamma_next: &Marginal, j: usize, k: usize) -> Marginal {
    let g = *gamma_next.grid();
    let p = g.points();
    let rows = p.pow(k as u32);
    let in_rows = rows * p;
    let stride = p.pow((k - j) as u32);
    let src = gamma_next.data();
    let data = par::map_indices(rows * rows, |i| {
        let (r, c) = (i / rows, i % rows);
        let xj = (r / stride) % p;
        src[(r * p + xj) * in_rows + c * p + xj]
    });
    Marginal::from_data(g, k, data).expect("shape")
}

/// Contact collision term `B^±_{j;k+1}γ^{(k+1)}`.
pub fn gp_collision(gamma_next: &Marginal, j: usize, side: Side) -> Result<Marginal> {
    let k = check_collision_index(gamma_next, j)?;
    Ok(match side {
        Side::Plus => contact_plus(gamma_next, j, k),
        Side::Minus => contact_plus(&gamma_next.adjoint(), j, k).adjoint(),
    })
}

/// `Σ_j (B^+_{j;k+1} − B^−_{j;k+1}) γ^{(k+1)}`.
pub fn gp_collision_level(gamma_next: &Marginal) -> Result<Marginal> {
    let k = gamma_next
        .k()
        .checked_sub(1)
        .filter(|&k| k >= 1)
        .ok_or_else(|| Error::InvalidArgument("collision needs a kernel with k+1 ≥ 2".into()))?;
    let adj = gamma_next.adjoint();
    let mut plus = contact_plus(gamma_next, 1, k);
    let mut minus_adj = contact_plus(&adj, 1, k);
    for j in 2..=k {
        plus.axpy(C64::new(1.0, 0.0), &contact_plus(gamma_next, j, k));
        minus_adj.axpy(C64::new(1.0, 0.0), &contact_plus(&adj, j, k));
    }
    plus.axpy(C64::new(-1.0, 0.0), &minus_adj.adjoint());
    Ok(plus)
}

/// `κ₀ BΓ`: level `k` is `κ₀ Σ_{j≤k}(B^+_{j;k+1} − B^−_{j;k+1})γ^{(k+1)}`, using `closure`
/// for `γ^{(K+1)}` (zero when `None`).
pub fn gp_collision_sum_with_closure(
    state: &HierarchyState,
    kappa0: f64,
    closure: Option<&Marginal>,
) -> Result<HierarchyState> {
    let top = state.top();
    let levels = par::map_indices(top, |i| -> Result<Marginal> {
        let k = i + 1;
        let next = if k < top { state.level(k + 1) } else { closure };
        match next {
            Some(next) => Ok(gp_collision_level(next)?.scaled(C64::new(kappa0, 0.0))),
            None => Marginal::zeros(*state.grid(), k),
        }
    });
    HierarchyState::new(levels.into_iter().collect::<Result<_>>()?, state.xi())
}

/// `κ₀ BΓ` for the zero-closed truncated hierarchy.
pub fn gp_collision_sum(state: &HierarchyState, kappa0: f64) -> Result<HierarchyState> {
    gp_collision_sum_with_closure(state, kappa0, None)
}

/// Table `V_N(x − y)` indexed `[x·P + y]`.
fn difference_table(v: &PotentialSpec) -> Result<Vec<f64>> {
    let g = *v.grid();
    let p = g.points();
    budget::check_tensor("pair-potential table", (p as u128) * (p as u128))?;
    let real = v.realized().data();
    Ok(par::map_indices(p * p, |i| real[g.sub_modes(i / p, i % p)].re))
}

/// `Σ_{j∈js} h^d Σ_y V_N(x_j − y) γ(x̲, y; x̲′, y)`, unweighted.
fn main_plus(gamma_next: &Marginal, js: &[usize], k: usize, table: &[f64]) -> Marginal {
    let g = *gamma_next.grid();
    let p = g.points();
    let rows = p.pow(k as u32);
    let in_rows = rows * p;
    let w = g.cell_volume();
    let strides: Vec<usize> = js.iter().map(|&j| p.pow((k - j) as u32)).collect();
    let src = gamma_next.data();
    let data = par::map_indices(rows * rows, |i| {
        let (r, c) = (i / rows, i % rows);
        let mut acc = C64::default();
        for &stride in &strides {
            let xj = (r / stride) % p;
            let vrow = &table[xj * p..(xj + 1) * p];
            let base = r * p * in_rows + c * p;
            for y in 0..p {
                acc += src[base + y * in_rows + y] * vrow[y];
            }
        }
        acc * w
    });
    Marginal::from_data(g, k, data).expect("shape")
}

/// `B^{±,main}_{N;j;k+1}γ^{(k+1)}`: convolution of the diagonal of the last particle pair
/// with `V_N` centered at `x_j` (or `x′_j`).
pub fn bbgky_collision_main(
    gamma_next: &Marginal,
    j: usize,
    side: Side,
    v: &PotentialSpec,
) -> Result<Marginal> {
    let k = check_collision_index(gamma_next, j)?;
    let table = difference_table(v)?;
    Ok(match side {
        Side::Plus => main_plus(gamma_next, &[j], k, &table),
        Side::Minus => main_plus(&gamma_next.adjoint(), &[j], k, &table).adjoint(),
    })
}

/// `B^{+,main}_{N;k+1}γ^{(k+1)} = ((N−k)/N) Σ_j B^{+,main}_{N;j;k+1}γ^{(k+1)}`.
pub fn bbgky_main_plus_weighted(gamma_next: &Marginal, v: &PotentialSpec) -> Result<Marginal> {
    let k = check_collision_index(gamma_next, 1)?;
    let table = difference_table(v)?;
    let js: Vec<usize> = (1..=k).collect();
    let weight = main_weight(v.big_n(), k);
    Ok(main_plus(gamma_next, &js, k, &table).scaled(C64::new(weight, 0.0)))
}

/// `B^{main}_{N;k+1}γ^{(k+1)}`: the weighted `+` sum minus its primed counterpart.
pub fn bbgky_main_level(gamma_next: &Marginal, v: &PotentialSpec) -> Result<Marginal> {
    let k = check_collision_index(gamma_next, 1)?;
    let table = difference_table(v)?;
    let js: Vec<usize> = (1..=k).collect();
    let weight = main_weight(v.big_n(), k);
    let plus = main_plus(gamma_next, &js, k, &table);
    let minus = main_plus(&gamma_next.adjoint(), &js, k, &table).adjoint();
    Ok(plus.sub(&minus).scaled(C64::new(weight, 0.0)))
}

/// `(N−k)/N`, zero once `k ≥ N`.
pub fn main_weight(big_n: u64, k: usize) -> f64 {
    if (k as u64) >= big_n {
        0.0
    } else {
        (big_n - k as u64) as f64 / big_n as f64
    }
}

/// `B^{±,error}_{N;i,j;k}γ^{(k)}`: pointwise multiplication by `V_N(x_i − x_j)`
/// (or `V_N(x′_i − x′_j)`).
pub fn bbgky_collision_error(
    gamma: &Marginal,
    i: usize,
    j: usize,
    side: Side,
    v: &PotentialSpec,
) -> Result<Marginal> {
    let k = gamma.k();
    if !(1 <= i && i < j && j <= k) {
        return Err(Error::Index(format!(
            "error term needs 1 ≤ i < j ≤ k, got i = {i}, j = {j}, k = {k}"
        )));
    }
    let table = difference_table(v)?;
    Ok(match side {
        Side::Plus => error_plus(gamma, &[(i, j)], &table),
        Side::Minus => error_plus(&gamma.adjoint(), &[(i, j)], &table).adjoint(),
    })
}

fn error_plus(gamma: &Marginal, pairs: &[(usize, usize)], table: &[f64]) -> Marginal {
    let g = *gamma.grid();
    let p = g.points();
    let k = gamma.k();
    let rows = gamma.rows();
    let strides: Vec<(usize, usize)> = pairs
        .iter()
        .map(|&(i, j)| (p.pow((k - i) as u32), p.pow((k - j) as u32)))
        .collect();
    let src = gamma.data();
    let data = par::map_indices(rows * rows, |idx| {
        let r = idx / rows;
        let mut v = 0.0;
        for &(si, sj) in &strides {
            let xi = (r / si) % p;
            let xj = (r / sj) % p;
            v += table[xi * p + xj];
        }
        src[idx] * v
    });
    Marginal::from_data(g, k, data).expect("shape")
}

/// `(B_NΓ_N)^{(k)}` for every stored level: the `1/N`-weighted pair commutator on
/// level `k` plus the `(N−k)/N`-weighted main collision from level `k+1` (`closure`
/// for the level above the top, zero when `None`). Levels with `k > N` vanish.
pub fn bbgky_rhs_with_closure(
    state: &HierarchyState,
    v: &PotentialSpec,
    closure: Option<&Marginal>,
) -> Result<HierarchyState> {
    let top = state.top();
    let big_n = v.big_n();
    let table = difference_table(v)?;
    let levels = par::map_indices(top, |i| -> Result<Marginal> {
        let k = i + 1;
        let mut out = Marginal::zeros(*state.grid(), k)?;
        if (k as u64) > big_n {
            return Ok(out);
        }
        let gamma = state.level(k).expect("stored level");
        if k >= 2 {
            let pairs: Vec<(usize, usize)> = (1..=k)
                .flat_map(|i| ((i + 1)..=k).map(move |j| (i, j)))
                .collect();
            let plus = error_plus(gamma, &pairs, &table);
            let minus = error_plus(&gamma.adjoint(), &pairs, &table).adjoint();
            let w = C64::new(1.0 / big_n as f64, 0.0);
            out.axpy(w, &plus);
            out.axpy(-w, &minus);
        }
        let weight = main_weight(big_n, k);
        let next = if k < top { state.level(k + 1) } else { closure };
        if let (Some(next), true) = (next, weight > 0.0) {
            let js: Vec<usize> = (1..=k).collect();
            let plus = main_plus(next, &js, k, &table);
            let minus = main_plus(&next.adjoint(), &js, k, &table).adjoint();
            out.axpy(C64::new(weight, 0.0), &plus);
            out.axpy(C64::new(-weight, 0.0), &minus);
        }
        Ok(out)
    });
    HierarchyState::new(levels.into_iter().collect::<Result<_>>()?, state.xi())
}

/// `B_NΓ_N` for the zero-closed truncated hierarchy.
pub fn bbgky_rhs(state: &HierarchyState, v: &PotentialSpec) -> Result<HierarchyState> {
    bbgky_rhs_with_closure(state, v, None)
}

/// `B^{+,main}_{N;1;k+1}U^{(k+1)}(t)γ₀` (or the contact `B^+_{1;k+1}U(t)γ₀` when
/// `spectrum` is `None`) evaluated entirely in momentum space:
///
/// `out^(u₁, u₂…; u′) = Σ_{ζ,ζ′} V̂_N(ζ + ζ′) e^{−itΦ} γ̂₀(u₁ − ζ − ζ′, u₂…, ζ; u′, ζ′)`
///
/// with `Φ = Σ|ξ|² − Σ|ξ′|²` taken at the input frequencies. The spatial result is
/// returned. `spectrum` is `V̂_N(q)` per spectral point, see [`PotentialSpec::spectrum`].
pub fn collision_fourier_oracle(
    gamma0: &Marginal,
    t: f64,
    spectrum: Option<&[C64]>,
) -> Result<Marginal> {
    let k = check_collision_index(gamma0, 1)?;
    if k + 1 > 3 {
        return Err(Error::InvalidArgument(
            "the momentum-space oracle is limited to k + 1 ≤ 3".into(),
        ));
    }
    let g = *gamma0.grid();
    let p = g.points();
    let rank_in = 2 * (k + 1);
    budget::check_tensor(
        "momentum-space oracle",
        budget::entries(p, 2 * k).saturating_mul((p * p) as u128),
    )?;

    let mut hat = gamma0.data().to_vec();
    let all: Vec<usize> = (0..rank_in).collect();
    crate::grid::forward_raw(&mut hat, &g, rank_in, &all);
    let norm = 1.0 / (p as f64).powi(rank_in as i32);
    hat.iter_mut().for_each(|z| *z *= norm);

    let k2 = g.wavenumber_sq();
    let rows_out = p.pow(k as u32);
    let rows_in = rows_out * p;
    let rest = p.pow((k - 1) as u32);
    let coeffs = par::map_indices(rows_out * rows_out, |i| {
        let (r, c) = (i / rows_out, i % rows_out);
        let u1 = r / rest;
        let tail = r % rest;
        let mut phase_fixed = 0.0;
        {
            let mut rem = tail;
            for _ in 1..k {
                phase_fixed += k2[rem % p];
                rem /= p;
            }
            let mut rem = c;
            for _ in 0..k {
                phase_fixed -= k2[rem % p];
                rem /= p;
            }
        }
        let mut acc = C64::default();
        for zeta in 0..p {
            for zeta_p in 0..p {
                let q = g.add_modes(zeta, zeta_p);
                let v = spectrum.map_or(C64::new(1.0, 0.0), |s| s[q]);
                let src_u1 = g.sub_modes(u1, q);
                let row = (src_u1 * rest + tail) * p + zeta;
                let col = c * p + zeta_p;
                let phi = phase_fixed + k2[src_u1] + k2[zeta] - k2[zeta_p];
                acc += v * C64::from_polar(1.0, -t * phi) * hat[row * rows_in + col];
            }
        }
        acc
    });
    let mut data = coeffs;
    let out_all: Vec<usize> = (0..2 * k).collect();
    // Synthesis: kernel(x) = Σ ĉ e^{+iξx} is an unnormalized inverse transform.
    crate::grid::inverse_raw(&mut data, &g, 2 * k, &out_all);
    let scale = (p as f64).powi(2 * k as i32);
    data.iter_mut().for_each(|z| *z *= scale);
    Marginal::from_data(g, k, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginals::{free_propagate_marginal, mixture_marginal, pure_product_marginal, sobolev_norm, trace};
    use crate::testutil::{random_kernel, random_smooth_unit, random_sphere_mixture};
    use std::f64::consts::PI;

    fn grid() -> GridSpec {
        GridSpec::new(1, 16, 2.0 * PI).unwrap()
    }

    #[test]
    fn contact_collision_on_factorized_kernel() {
        let g = grid();
        let phi = random_smooth_unit(g, 3);
        let gamma2 = pure_product_marginal(&phi, 2).unwrap();
        let plus = gp_collision(&gamma2, 1, Side::Plus).unwrap();
        let full = gp_collision_level(&gamma2).unwrap();
        let p = g.points();
        let f = phi.data();
        for x in 0..p {
            for xp in 0..p {
                let base = f[x] * f[xp].conj();
                let want_plus = f[x].norm_sqr() * base;
                let want_full = (f[x].norm_sqr() - f[xp].norm_sqr()) * base;
                assert!((plus.entry(x, xp) - want_plus).norm() < 1e-14);
                assert!((full.entry(x, xp) - want_full).norm() < 1e-14);
            }
        }
        assert!(gp_collision(&gamma2, 2, Side::Plus).is_err());
        assert!(gp_collision(&gamma2, 0, Side::Minus).is_err());
    }

    #[test]
    fn real_wavefunction_has_vanishing_diagonal_collision() {
        let g = grid();
        let phi = Field::from_fn(g, |x| C64::new((x[0].cos() + 1.5) / 4.0, 0.0));
        let full = gp_collision_level(&pure_product_marginal(&phi, 2).unwrap()).unwrap();
        for x in 0..g.points() {
            assert!(full.entry(x, x).norm() < 1e-15);
        }
    }

    #[test]
    fn collision_sum_is_trace_free_and_anti_hermitian() {
        let g = GridSpec::new(1, 8, 2.0 * PI).unwrap();
        let mu = random_sphere_mixture(g, 3, 4);
        let s = HierarchyState::from_mixture(&mu, 3, 0.5).unwrap();
        let b = gp_collision_sum(&s, 1.0).unwrap();
        for lvl in b.levels() {
            assert!(trace(lvl).norm() < 1e-10);
            assert!(lvl.scaled(C64::new(0.0, 1.0)).hermiticity_defect() < 1e-13);
        }
        assert_eq!(trace(b.level(3).unwrap()), C64::default());
        let z = HierarchyState::zeros(g, 2, 0.5).unwrap();
        let bz = gp_collision_sum(&z, 1.0).unwrap();
        assert!(bz.levels().iter().all(|l| l.data().iter().all(|v| *v == C64::default())));
    }

    #[test]
    fn delta_surrogate_reproduces_contact_collision() {
        let g = grid();
        let r = random_kernel(g, 2, 5);
        let delta = PotentialSpec::delta_surrogate(g, 10);
        for side in [Side::Plus, Side::Minus] {
            let a = bbgky_collision_main(&r, 1, side, &delta).unwrap();
            let b = gp_collision(&r, 1, side).unwrap();
            assert!(a.field().max_abs_diff(b.field()) < 1e-14);
        }
    }

    #[test]
    fn main_collision_on_factorized_kernel_is_a_convolution() {
        let g = grid();
        let phi = random_smooth_unit(g, 8);
        let profile = builtin_profile(g, ProfileKind::Gaussian, 0.8).unwrap();
        let v = realize_potential(&profile, 0.2, 16).unwrap();
        let out = bbgky_collision_main(&pure_product_marginal(&phi, 2).unwrap(), 1, Side::Plus, &v).unwrap();
        let gamma1 = pure_product_marginal(&phi, 1).unwrap();
        let p = g.points();
        let h = g.cell_volume();
        for x in 0..p {
            let conv: f64 = (0..p)
                .map(|y| v.realized().data()[g.sub_modes(x, y)].re * phi.data()[y].norm_sqr())
                .sum::<f64>()
                * h;
            for xp in 0..p {
                assert!((out.entry(x, xp) - gamma1.entry(x, xp) * conv).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn error_term_examples() {
        let g = grid();
        let profile = builtin_profile(g, ProfileKind::Gaussian, 0.8).unwrap();
        let v = realize_potential(&profile, 0.2, 16).unwrap();
        let one = pure_product_marginal(&random_smooth_unit(g, 1), 1).unwrap();
        assert!(bbgky_collision_error(&one, 1, 1, Side::Plus, &v).is_err());
        let two = pure_product_marginal(&random_smooth_unit(g, 2), 2).unwrap();
        assert!(bbgky_collision_error(&two, 2, 1, Side::Plus, &v).is_err());
        let out = bbgky_collision_error(&two, 1, 2, Side::Plus, &v).unwrap();
        let sup = v.realized().data().iter().map(|z| z.re).fold(0.0, f64::max);
        assert!(sobolev_norm(&out, 0.0).unwrap() <= sup * sobolev_norm(&two, 0.0).unwrap() + 1e-14);
        let p = g.points();
        let rows = p * p;
        for r in (0..rows).step_by(7) {
            let (x1, x2) = (r / p, r % p);
            let vv = v.realized().data()[g.sub_modes(x1, x2)].re;
            for c in (0..rows).step_by(5) {
                assert!((out.entry(r, c) - two.entry(r, c) * vv).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn realize_potential_examples() {
        let g = grid();
        let profile = builtin_profile(g, ProfileKind::Gaussian, 0.8).unwrap();
        let v1 = realize_potential(&profile, 0.2, 1).unwrap();
        assert_eq!(v1.realized(), &profile);
        assert!((v1.kappa0() - 1.0).abs() < 1e-12);

        let v16 = realize_potential(&profile, 0.2, 16).unwrap();
        assert!(((v16.realized_mass() - v16.kappa0()) / v16.kappa0()).abs() < 0.05);
        let sup0 = profile.data().iter().map(|z| z.re).fold(0.0, f64::max);
        let sup = v16.realized().data().iter().map(|z| z.re).fold(0.0, f64::max);
        assert!((sup - 16f64.powf(0.2) * sup0).abs() < 1e-10 * sup);

        assert!(realize_potential(&profile, 0.3, 16).is_err());
        assert!(realize_potential(&profile, 0.0, 16).is_err());
        let mut bad = profile.clone();
        bad.data_mut()[1] = C64::new(-1.0, 0.0);
        assert!(realize_potential(&bad, 0.2, 4).is_err());

        let narrow = builtin_profile(g, ProfileKind::Gaussian, 0.3).unwrap();
        assert!(!realize_potential(&narrow, 0.2, 1 << 20).unwrap().resolvable());
    }

    #[test]
    fn bbgky_rhs_weights() {
        let g = GridSpec::new(1, 8, 2.0 * PI).unwrap();
        let mu = random_sphere_mixture(g, 2, 3);
        let s = HierarchyState::from_mixture(&mu, 2, 0.5).unwrap();
        let profile = builtin_profile(g, ProfileKind::Gaussian, 0.8).unwrap();
        let v = realize_potential(&profile, 0.2, 2).unwrap();
        let rhs = bbgky_rhs(&s, &v).unwrap();
        // k = N = 2: no main term, so level 2 is the pure pair commutator.
        let e_plus = bbgky_collision_error(s.level(2).unwrap(), 1, 2, Side::Plus, &v).unwrap();
        let e_minus = bbgky_collision_error(s.level(2).unwrap(), 1, 2, Side::Minus, &v).unwrap();
        let want = e_plus.sub(&e_minus).scaled(C64::new(0.5, 0.0));
        assert!(rhs.level(2).unwrap().field().max_abs_diff(want.field()) < 1e-14);
        for lvl in rhs.levels() {
            assert!(trace(lvl).norm() < 1e-12);
        }
        let z = HierarchyState::zeros(g, 2, 0.5).unwrap();
        let rz = bbgky_rhs(&z, &v).unwrap();
        assert!(rz.levels().iter().all(|l| l.data().iter().all(|x| *x == C64::default())));
        let v1 = v.with_big_n(1).unwrap();
        let r1 = bbgky_rhs(&s, &v1).unwrap();
        assert!(r1.level(2).unwrap().data().iter().all(|x| *x == C64::default()));
    }

    #[test]
    fn fourier_oracle_matches_spatial_path() {
        let g = grid();
        let mu = random_sphere_mixture(g, 2, 6);
        let gamma = mixture_marginal(&mu, 2).unwrap();
        let spatial = gp_collision(&gamma, 1, Side::Plus).unwrap();
        let oracle = collision_fourier_oracle(&gamma, 0.0, None).unwrap();
        let rel = sobolev_norm(&oracle.sub(&spatial), 0.0).unwrap() / sobolev_norm(&spatial, 0.0).unwrap();
        assert!(rel < 1e-10, "rel {rel}");

        let ones = vec![C64::new(1.0, 0.0); g.points()];
        let with_ones = collision_fourier_oracle(&gamma, 0.0, Some(&ones)).unwrap();
        assert!(with_ones.field().max_abs_diff(oracle.field()) < 1e-13);

        let profile = builtin_profile(g, ProfileKind::Gaussian, 0.8).unwrap();
        let v = realize_potential(&profile, 0.2, 16).unwrap();
        let moved = free_propagate_marginal(&gamma, 0.1);
        let spatial = bbgky_collision_main(&moved, 1, Side::Plus, &v).unwrap();
        let oracle = collision_fourier_oracle(&gamma, 0.1, Some(&v.spectrum())).unwrap();
        let rel = sobolev_norm(&oracle.sub(&spatial), 0.0).unwrap() / sobolev_norm(&spatial, 0.0).unwrap();
        assert!(rel < 1e-9, "rel {rel}");
    }
}
