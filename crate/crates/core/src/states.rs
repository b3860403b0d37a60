//! Seeded initial data: smooth low-mode wavefunctions and random mixtures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::definetti::{Atom, Mixture, Support};
use crate::grid::{dft_inverse, Field, GridSpec, C64};

/// Random field with spectrum supported on `|m_a| ≤ n/4` per axis, amplitudes decaying
/// like `1/(1 + |m|²)`, normalized to unit `L²` mass.
pub fn random_smooth_unit(grid: GridSpec, seed: u64) -> Field {
    let mut f = random_smooth(grid, seed, grid.n() / 4);
    let norm = f.norm_l2();
    f.scale(C64::new(1.0 / norm, 0.0));
    f
}

/// Unnormalized low-mode field with modes `|m_a| ≤ cutoff`.
pub fn random_smooth(grid: GridSpec, seed: u64, cutoff: usize) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = Field::zeros(grid, 1).expect("one slot");
    for p in 0..grid.points() {
        let idx = grid.axis_indices(p);
        let mut m2 = 0i64;
        let mut inside = true;
        for &i in idx.iter().take(grid.dim()) {
            let m = grid.mode_number(i);
            inside &= m.unsigned_abs() as usize <= cutoff;
            m2 += m * m;
        }
        let re: f64 = rng.gen_range(-1.0..1.0);
        let im: f64 = rng.gen_range(-1.0..1.0);
        if inside {
            spec.data_mut()[p] = C64::new(re, im) / (1.0 + m2 as f64);
        }
    }
    dft_inverse(&spec)
}

/// `L^{−d/2}`, the unit-mass constant.
pub fn unit_constant(grid: GridSpec) -> Field {
    let v = grid.length().powf(-(grid.dim() as f64) / 2.0);
    Field::from_fn(grid, |_| C64::new(v, 0.0))
}

/// `1 + ε cos ωx₁ + (iε/2) sin 2ωx₁` with `ω = 2π/L`, normalized.
pub fn perturbed_constant(grid: GridSpec, eps: f64) -> Field {
    let w = 2.0 * std::f64::consts::PI / grid.length();
    let mut f = Field::from_fn(grid, |x| {
        C64::new(1.0 + eps * (w * x[0]).cos(), 0.5 * eps * (2.0 * w * x[0]).sin())
    });
    let norm = f.norm_l2();
    f.scale(C64::new(1.0 / norm, 0.0));
    f
}

/// `atoms` random smooth unit atoms with random positive weights summing to one.
pub fn random_sphere_mixture(grid: GridSpec, atoms: usize, seed: u64) -> Mixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let raw: Vec<f64> = (0..atoms).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let list = raw
        .iter()
        .enumerate()
        .map(|(i, w)| Atom {
            weight: w / total,
            phi: random_smooth_unit(grid, seed.wrapping_mul(1000).wrapping_add(i as u64)),
        })
        .collect();
    Mixture::new(list, Support::Sphere).expect("valid by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn smooth_states_are_unit_and_band_limited() {
        let g = GridSpec::new(1, 16, 2.0 * PI).unwrap();
        let phi = random_smooth_unit(g, 3);
        assert!((phi.norm_l2() - 1.0).abs() < 1e-14);
        let spec = crate::grid::dft_forward(&phi);
        for (p, c) in spec.data().iter().enumerate() {
            if g.mode_number(p).abs() > 4 {
                assert!(c.norm() < 1e-14);
            }
        }
        assert_eq!(random_smooth_unit(g, 3), phi);
        assert_ne!(random_smooth_unit(g, 4), phi);
    }

    #[test]
    fn constant_has_unit_mass() {
        let g = GridSpec::new(2, 8, 3.0).unwrap();
        assert!((unit_constant(g).norm_l2() - 1.0).abs() < 1e-14);
    }
}
