//! Periodic torus discretization and the spectral toolkit built on it.
//!
//! A [`GridSpec`] fixes `dim` axes of `n` points on `[0, L)`. A [`Field`] of rank `r`
//! stores one complex value per point of the `r`-fold product of that grid, row-major
//! by slot and, inside a slot, row-major by axis. Every integral `∫dx` over one slot is
//! realized as `h^d Σ`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::budget;
use crate::error::{Error, Result};
use crate::par;

pub type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    n: usize,
    length: f64,
}

impl GridSpec {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and at least 4, got {n}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "box length must be positive, got {length}"
            )));
        }
        Ok(Self { dim, n, length })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Mesh spacing `h = L / n`.
    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Quadrature weight of one slot, `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Grid points of one particle slot, `n^d`.
    pub fn points(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Angular frequency `2πm/L` of DFT bin `i`, with the upper half aliased negative.
    pub fn frequency(&self, i: usize) -> f64 {
        let m = self.mode_number(i);
        2.0 * PI * m as f64 / self.length
    }

    /// Signed mode number of DFT bin `i`, in `-n/2..n/2`.
    pub fn mode_number(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Per-axis angular frequencies in DFT order.
    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.frequency(i)).collect()
    }

    /// Splits a slot point index into per-axis indices.
    pub fn axis_indices(&self, mut p: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for a in (0..self.dim).rev() {
            out[a] = p % self.n;
            p /= self.n;
        }
        out
    }

    pub fn point_index(&self, idx: &[usize]) -> usize {
        idx.iter().take(self.dim).fold(0, |acc, &i| acc * self.n + i)
    }

    /// Coordinates of slot point `p` in `[0, L)^d`.
    pub fn position(&self, p: usize) -> [f64; 3] {
        let idx = self.axis_indices(p);
        let h = self.spacing();
        let mut out = [0.0; 3];
        for a in 0..self.dim {
            out[a] = idx[a] as f64 * h;
        }
        out
    }

    /// Coordinates of slot point `p` in the centered cell `[-L/2, L/2)^d`.
    pub fn centered_position(&self, p: usize) -> [f64; 3] {
        let idx = self.axis_indices(p);
        let h = self.spacing();
        let mut out = [0.0; 3];
        for a in 0..self.dim {
            out[a] = self.mode_number(idx[a]) as f64 * h;
        }
        out
    }

    /// `|ξ|²` for each spectral point of one slot.
    pub fn wavenumber_sq(&self) -> Vec<f64> {
        let freq = self.frequencies();
        (0..self.points())
            .map(|p| {
                let idx = self.axis_indices(p);
                (0..self.dim).map(|a| freq[idx[a]] * freq[idx[a]]).sum()
            })
            .collect()
    }

    /// Index of the spectral point `p + q` (per-axis addition modulo `n`).
    pub fn add_modes(&self, p: usize, q: usize) -> usize {
        let a = self.axis_indices(p);
        let b = self.axis_indices(q);
        let mut out = 0;
        for ax in 0..self.dim {
            out = out * self.n + (a[ax] + b[ax]) % self.n;
        }
        out
    }

    /// Index of the spectral point `-p`.
    pub fn negate_mode(&self, p: usize) -> usize {
        let a = self.axis_indices(p);
        let mut out = 0;
        for ax in 0..self.dim {
            out = out * self.n + (self.n - a[ax]) % self.n;
        }
        out
    }

    /// Index of `p - q`.
    pub fn sub_modes(&self, p: usize, q: usize) -> usize {
        self.add_modes(p, self.negate_mode(q))
    }

    /// Entries of a rank-`rank` field on this grid.
    pub fn field_len(&self, rank: usize) -> Result<usize> {
        let needed = budget::entries(self.points(), rank);
        budget::check_tensor(format!("rank-{rank} field"), needed)?;
        Ok(needed as usize)
    }
}

pub fn make_grid(dim: usize, n: usize, length: f64) -> Result<GridSpec> {
    GridSpec::new(dim, n, length)
}

/// Complex samples of a function of `rank` particle positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    rank: usize,
    data: Vec<C64>,
}

impl Field {
    pub fn zeros(grid: GridSpec, rank: usize) -> Result<Self> {
        let len = grid.field_len(rank)?;
        Ok(Self {
            grid,
            rank,
            data: vec![C64::new(0.0, 0.0); len],
        })
    }

    pub fn from_data(grid: GridSpec, rank: usize, data: Vec<C64>) -> Result<Self> {
        let len = grid.field_len(rank)?;
        if data.len() != len {
            return Err(Error::InvalidArgument(format!(
                "rank-{rank} field needs {len} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { grid, rank, data })
    }

    /// Rank-1 field sampled from `f(x)` at the grid points of `[0, L)^d`.
    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> C64) -> Self {
        let data = (0..grid.points()).map(|p| f(grid.position(p))).collect();
        Self {
            grid,
            rank: 1,
            data,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    /// `L²` norm with the `h^{d·rank}` quadrature weight.
    pub fn norm_l2(&self) -> f64 {
        let w = self.grid.cell_volume().powi(self.rank as i32);
        let s: f64 = par::sum_indices(self.data.len(), |i| self.data[i].norm_sqr());
        (w * s).sqrt()
    }

    /// `⟨self, other⟩ = ∫ conj(self)·other`.
    pub fn inner(&self, other: &Field) -> C64 {
        assert_eq!(self.data.len(), other.data.len(), "field shape mismatch");
        let w = self.grid.cell_volume().powi(self.rank as i32);
        let s: C64 = par::sum_indices(self.data.len(), |i| self.data[i].conj() * other.data[i]);
        s * w
    }

    pub fn scale(&mut self, c: C64) {
        for z in &mut self.data {
            *z *= c;
        }
    }

    /// `self += c·other`.
    pub fn axpy(&mut self, c: C64, other: &Field) {
        assert_eq!(self.data.len(), other.data.len(), "field shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * *b;
        }
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Precomputed 1-D transforms of length `n`.
struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft(n, FftDirection::Forward),
            inverse: planner.plan_fft(n, FftDirection::Inverse),
        }
    }
}

/// Unnormalized 1-D transform along `axis` of an `n^axes` array.
fn fft_axis(data: &mut [C64], n: usize, axes: usize, axis: usize, fft: &Arc<dyn Fft<f64>>) {
    let stride = n.pow((axes - 1 - axis) as u32);
    let block = n * stride;
    if stride == 1 {
        par::for_each_chunk_mut(data, block.max(n * 256), |_, chunk| {
            let mut scratch = vec![C64::default(); fft.get_inplace_scratch_len()];
            fft.process_with_scratch(chunk, &mut scratch);
        });
        return;
    }
    par::for_each_chunk_mut(data, block, |_, chunk| {
        let mut line = vec![C64::default(); n];
        let mut scratch = vec![C64::default(); fft.get_inplace_scratch_len()];
        for j in 0..stride {
            for i in 0..n {
                line[i] = chunk[j + i * stride];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for i in 0..n {
                chunk[j + i * stride] = line[i];
            }
        }
    });
}

fn slot_axes(grid: &GridSpec, slots: &[usize]) -> Vec<usize> {
    let d = grid.dim();
    slots.iter().flat_map(|&s| (s * d)..((s + 1) * d)).collect()
}

/// Raw forward transform (`e^{-iξx}`, no scaling) over the axes of `slots`.
pub(crate) fn forward_raw(data: &mut [C64], grid: &GridSpec, rank: usize, slots: &[usize]) {
    let plans = Plans::new(grid.n());
    let axes = rank * grid.dim();
    for a in slot_axes(grid, slots) {
        fft_axis(data, grid.n(), axes, a, &plans.forward);
    }
}

/// Inverse of [`forward_raw`], including the `1/n` per axis.
pub(crate) fn inverse_raw(data: &mut [C64], grid: &GridSpec, rank: usize, slots: &[usize]) {
    let plans = Plans::new(grid.n());
    let axes = rank * grid.dim();
    let list = slot_axes(grid, slots);
    for &a in &list {
        fft_axis(data, grid.n(), axes, a, &plans.inverse);
    }
    let scale = 1.0 / (grid.n() as f64).powi(list.len() as i32);
    for z in data.iter_mut() {
        *z *= scale;
    }
}

/// How per-slot symbol tables combine into the symbol of the whole field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Combine {
    Product,
    Sum,
}

/// Applies a Fourier multiplier whose symbol is built from one table per selected slot.
/// `tables[i]` is indexed by the spectral point of slot `slots[i]`.
pub(crate) fn apply_slot_symbols(
    data: &mut [C64],
    grid: &GridSpec,
    rank: usize,
    slots: &[usize],
    tables: &[Vec<C64>],
    combine: Combine,
) {
    debug_assert_eq!(slots.len(), tables.len());
    if slots.is_empty() {
        if combine == Combine::Sum {
            data.iter_mut().for_each(|z| *z = C64::default());
        }
        return;
    }
    forward_raw(data, grid, rank, slots);
    let p = grid.points();
    let strides: Vec<usize> = slots
        .iter()
        .map(|&s| p.pow((rank - 1 - s) as u32))
        .collect();
    par::for_each_chunk_mut(data, 4096, |chunk_idx, chunk| {
        let base = chunk_idx * 4096;
        for (off, z) in chunk.iter_mut().enumerate() {
            let idx = base + off;
            let mut sym = match combine {
                Combine::Product => C64::new(1.0, 0.0),
                Combine::Sum => C64::new(0.0, 0.0),
            };
            for (t, &st) in tables.iter().zip(&strides) {
                let q = (idx / st) % p;
                match combine {
                    Combine::Product => sym *= t[q],
                    Combine::Sum => sym += t[q],
                }
            }
            *z *= sym;
        }
    });
    inverse_raw(data, grid, rank, slots);
}

/// Forward transform normalized so that `Σ|f̂|² = h^{d·rank} Σ|f|²`.
pub fn dft_forward(f: &Field) -> Field {
    let mut out = f.clone();
    let all: Vec<usize> = (0..f.rank).collect();
    forward_raw(&mut out.data, &f.grid, f.rank, &all);
    let axes = (f.rank * f.grid.dim()) as i32;
    let s = (f.grid.spacing() / f.grid.n() as f64).sqrt().powi(axes);
    out.scale(C64::new(s, 0.0));
    out
}

/// Inverse of [`dft_forward`].
pub fn dft_inverse(f: &Field) -> Field {
    let mut out = f.clone();
    let all: Vec<usize> = (0..f.rank).collect();
    inverse_raw(&mut out.data, &f.grid, f.rank, &all);
    let axes = (f.rank * f.grid.dim()) as i32;
    let s = (f.grid.n() as f64 / f.grid.spacing()).sqrt().powi(axes);
    out.scale(C64::new(s, 0.0));
    out
}

/// `(1 + |ξ|²)^{α/2}` for each spectral point of one slot.
pub fn bessel_table(grid: &GridSpec, alpha: f64) -> Vec<C64> {
    grid.wavenumber_sq()
        .into_iter()
        .map(|k2| C64::new((1.0 + k2).powf(alpha / 2.0), 0.0))
        .collect()
}

/// `e^{-i·sign·t|ξ|²}` for each spectral point of one slot.
pub fn propagator_table(grid: &GridSpec, t: f64, sign: f64) -> Vec<C64> {
    grid.wavenumber_sq()
        .into_iter()
        .map(|k2| C64::from_polar(1.0, -sign * t * k2))
        .collect()
}

/// Multiplies the spectrum of every slot in `slots` by `⟨ξ⟩^α = (1+|ξ|²)^{α/2}`.
pub fn bessel_multiply(f: &Field, alpha: f64, slots: &[usize]) -> Result<Field> {
    if alpha < 0.0 || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Bessel exponent must be nonnegative, got {alpha}"
        )));
    }
    check_slots(f.rank, slots)?;
    let mut out = f.clone();
    if alpha == 0.0 {
        return Ok(out);
    }
    let table = bessel_table(&f.grid, alpha);
    let tables = vec![table; slots.len()];
    apply_slot_symbols(&mut out.data, &f.grid, f.rank, slots, &tables, Combine::Product);
    Ok(out)
}

/// Free Schrödinger flow: slot `s` is multiplied by `e^{-i·signs[s]·t|ξ|²}` in Fourier
/// space. A sign of `+1` realizes `e^{itΔ}` on that slot, `-1` realizes `e^{-itΔ}`, and
/// `0` leaves the slot untouched.
pub fn free_propagate(f: &Field, t: f64, signs: &[i8]) -> Result<Field> {
    if signs.len() != f.rank {
        return Err(Error::InvalidArgument(format!(
            "need one sign per slot ({}), got {}",
            f.rank,
            signs.len()
        )));
    }
    let mut out = f.clone();
    if t == 0.0 {
        return Ok(out);
    }
    let mut slots = Vec::new();
    let mut tables = Vec::new();
    for (s, &sign) in signs.iter().enumerate() {
        if sign != 0 {
            slots.push(s);
            tables.push(propagator_table(&f.grid, t, sign as f64));
        }
    }
    apply_slot_symbols(&mut out.data, &f.grid, f.rank, &slots, &tables, Combine::Product);
    Ok(out)
}

fn check_slots(rank: usize, slots: &[usize]) -> Result<()> {
    if let Some(&s) = slots.iter().find(|&&s| s >= rank) {
        return Err(Error::Index(format!("slot {s} out of range for rank {rank}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: GridSpec, rank: usize, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = grid.field_len(rank).unwrap();
        let data = (0..len)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        Field::from_data(grid, rank, data).unwrap()
    }

    #[test]
    fn grid_spacing_and_layout() {
        let g = make_grid(1, 8, 2.0 * PI).unwrap();
        assert_relative_eq!(g.spacing(), PI / 4.0, epsilon = 1e-15);

        let g = make_grid(2, 4, 1.0).unwrap();
        assert_eq!(g.points(), 16);
        let f = g.frequencies();
        let expect = [0.0, 2.0 * PI, -4.0 * PI, -2.0 * PI];
        for (a, b) in f.iter().zip(expect) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(make_grid(1, 7, 1.0).is_err());
        assert!(make_grid(1, 2, 1.0).is_err());
        assert!(make_grid(1, 8, 0.0).is_err());
        assert!(make_grid(1, 8, -1.0).is_err());
        assert!(make_grid(4, 8, 1.0).is_err());
    }

    #[test]
    fn constant_field_has_only_zero_mode() {
        let g = make_grid(2, 8, 3.0).unwrap();
        let f = Field::from_fn(g, |_| C64::new(1.0, 0.0));
        let s = dft_forward(&f);
        assert!(s.data()[0].norm() > 1.0);
        for z in &s.data()[1..] {
            assert!(z.norm() < 1e-13);
        }
    }

    #[test]
    fn plane_wave_has_single_coefficient() {
        let l = 1.0;
        let g = make_grid(1, 16, l).unwrap();
        let f = Field::from_fn(g, |x| C64::from_polar(1.0, 2.0 * PI * x[0] / l));
        let s = dft_forward(&f);
        for (i, z) in s.data().iter().enumerate() {
            if i == 1 {
                assert!(z.norm() > 0.1);
            } else {
                assert!(z.norm() < 1e-13, "bin {i}: {z}");
            }
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        for (dim, n, rank) in [(1, 16, 1), (1, 8, 3), (2, 8, 2), (3, 4, 1)] {
            let g = make_grid(dim, n, 2.0 * PI).unwrap();
            let f = random_field(g, rank, 7);
            let s = dft_forward(&f);
            let back = dft_inverse(&s);
            assert!(back.max_abs_diff(&f) < 1e-12);
            let spec: f64 = s.data().iter().map(|z| z.norm_sqr()).sum();
            let norm2 = f.norm_l2().powi(2);
            assert!(((spec - norm2) / norm2).abs() < 1e-12);
        }
    }

    #[test]
    fn bessel_multiplier_examples() {
        let g = make_grid(1, 16, 2.0 * PI).unwrap();
        let c = Field::from_fn(g, |_| C64::new(0.3, -0.2));
        let out = bessel_multiply(&c, 1.7, &[0]).unwrap();
        assert!(out.max_abs_diff(&c) < 1e-13);

        let e = Field::from_fn(g, |x| C64::from_polar(1.0, x[0]));
        let out = bessel_multiply(&e, 2.0, &[0]).unwrap();
        for (a, b) in out.data().iter().zip(e.data()) {
            assert!((a - 2.0 * b).norm() < 1e-12);
        }

        let r = random_field(g, 2, 3);
        let out = bessel_multiply(&r, 0.0, &[0, 1]).unwrap();
        assert_eq!(out, r);
        assert!(bessel_multiply(&r, -1.0, &[0]).is_err());
        assert!(bessel_multiply(&r, 1.0, &[2]).is_err());
    }

    #[test]
    fn propagator_examples() {
        let g = make_grid(1, 16, 2.0 * PI).unwrap();
        let r = random_field(g, 2, 11);
        assert_eq!(free_propagate(&r, 0.0, &[1, -1]).unwrap(), r);

        // e^{itΔ} e^{ix} = e^{-it} e^{ix}
        let e = Field::from_fn(g, |x| C64::from_polar(1.0, x[0]));
        let out = free_propagate(&e, 1.0, &[1]).unwrap();
        let phase = C64::from_polar(1.0, -1.0);
        for (a, b) in out.data().iter().zip(e.data()) {
            assert!((a - phase * b).norm() < 1e-12);
        }

        let fwd = free_propagate(&r, 0.37, &[1, -1]).unwrap();
        assert!((fwd.norm_l2() - r.norm_l2()).abs() < 1e-12 * r.norm_l2());
        let back = free_propagate(&fwd, -0.37, &[1, -1]).unwrap();
        assert!(back.max_abs_diff(&r) < 1e-12);
    }

    #[test]
    fn multipliers_commute_and_group_law_holds() {
        let g = make_grid(1, 8, 2.0 * PI).unwrap();
        let r = random_field(g, 3, 5);
        let a = free_propagate(&bessel_multiply(&r, 1.5, &[0, 2]).unwrap(), 0.2, &[1, -1, 1]).unwrap();
        let b = bessel_multiply(&free_propagate(&r, 0.2, &[1, -1, 1]).unwrap(), 1.5, &[0, 2]).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);

        let ts = free_propagate(&free_propagate(&r, 0.3, &[1, 1, -1]).unwrap(), 0.45, &[1, 1, -1]).unwrap();
        let direct = free_propagate(&r, 0.75, &[1, 1, -1]).unwrap();
        let mut diff = ts.clone();
        diff.axpy(C64::new(-1.0, 0.0), &direct);
        assert!(diff.norm_l2() / direct.norm_l2() < 1e-10);
    }

    #[test]
    fn mode_arithmetic() {
        let g = make_grid(2, 4, 1.0).unwrap();
        for p in 0..g.points() {
            assert_eq!(g.add_modes(p, g.negate_mode(p)), 0);
            for q in 0..g.points() {
                assert_eq!(g.sub_modes(g.add_modes(p, q), q), p);
            }
        }
    }
}
