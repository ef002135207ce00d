//! Deterministic randomness: one root seed, independent ChaCha streams per task.

use faer::{c64, Col, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::dense::{CMat, CVec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Seeder {
    root: u64,
}

impl Seeder {
    pub fn new(root: u64) -> Self {
        Seeder { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    /// Independent generator for task `index`; identical for identical (root, index).
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.root);
        rng.set_stream(index);
        rng
    }

    /// A derived seeder, for nesting task families.
    pub fn child(&self, index: u64) -> Seeder {
        Seeder {
            root: self.stream(index).random(),
        }
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> c64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    c64::new(a, b)
}

/// Matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> CMat {
    Mat::from_fn(n, m, |_, _| gaussian(rng))
}

/// Uniformly distributed unit vector.
pub fn haar_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    let v = Col::from_fn(n, |_| gaussian(rng));
    let norm = v.norm_l2();
    Col::from_fn(n, |i| v[i] / norm)
}

/// Random density matrix G G† / tr with G of the given rank.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> CMat {
    let g = ginibre(rng, d, rank.max(1));
    let rho = &g * g.adjoint();
    let tr: f64 = (0..d).map(|i| rho[(i, i)].re).sum();
    Mat::from_fn(d, d, |i, j| rho[(i, j)] / tr)
}

/// Random Hermitian matrix from the Gaussian unitary ensemble, unit-variance entries.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMat {
    let g = ginibre(rng, d, d);
    Mat::from_fn(d, d, |i, j| (g[(i, j)] + g[(j, i)].conj()) * 0.5)
}
