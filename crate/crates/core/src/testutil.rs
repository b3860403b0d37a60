use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{GridSpec, C64};
use crate::marginals::Marginal;

pub use crate::states::{random_smooth_unit, random_sphere_mixture, unit_constant};

/// Kernel with independent uniform entries in the unit square, no symmetry.
pub fn random_kernel(grid: GridSpec, k: usize, seed: u64) -> Marginal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Marginal::zeros(grid, k).unwrap();
    for z in m.data_mut() {
        *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    m
}
