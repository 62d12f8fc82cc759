//! Seeded synthetic problem instances, shared by the test suites and the
//! benchmarks. Everything is deterministic given the seed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hermitian::{ChannelGram, HermitianMatrix};

/// Deterministic RNG for a given seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One standard-normal draw (Box-Muller).
fn randn(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Random complex matrix with i.i.d. standard-normal real/imaginary parts.
pub fn random_complex(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| Complex64::new(randn(rng), randn(rng)))
}

/// Random Hermitian matrix `(G + G^H)/2` with O(1) entries.
pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> HermitianMatrix {
    HermitianMatrix::symmetrized(random_complex(dim, dim, rng))
}

/// Random PSD matrix `G^H G / dim`.
pub fn random_psd(dim: usize, rng: &mut impl Rng) -> HermitianMatrix {
    let g = random_complex(dim, dim, rng);
    HermitianMatrix::symmetrized(g.adjoint() * g / Complex64::new(dim as f64, 0.0))
}

/// Random unitary matrix (QR of a complex Gaussian matrix).
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    let g = random_complex(dim, dim, rng);
    g.qr().q()
}

/// Random full-rank channel gram with condition number at most `cond`.
///
/// Eigenvalues are log-uniform between `top / cond` and `top` with the
/// extremes pinned, `top` drawn in `[0.5, 2]`; eigenvectors are a random
/// unitary basis.
pub fn random_pd_gram(dim: usize, cond: f64, rng: &mut impl Rng) -> ChannelGram {
    assert!(cond >= 1.0, "condition number must be at least 1");
    let top: f64 = 0.5 + 1.5 * rng.random::<f64>();
    let bottom = top / cond;
    let mut lambda = vec![0.0; dim];
    lambda[0] = top;
    if dim > 1 {
        lambda[dim - 1] = bottom;
        for l in lambda.iter_mut().take(dim - 1).skip(1) {
            let t: f64 = rng.random();
            *l = bottom * (top / bottom).powf(t);
        }
    }
    let u = random_unitary(dim, rng);
    let diag = DMatrix::from_diagonal(&DVector::from_iterator(
        dim,
        lambda.iter().map(|&l| Complex64::new(l, 0.0)),
    ));
    let w = HermitianMatrix::symmetrized(&u * diag * u.adjoint());
    ChannelGram::new(w).expect("constructed PSD gram")
}

/// Random diagonal full-rank gram with entries in `[lo, hi]`.
pub fn random_diagonal_gram(dim: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> ChannelGram {
    let diag: Vec<f64> = (0..dim)
        .map(|_| lo + (hi - lo) * rng.random::<f64>())
        .collect();
    ChannelGram::new(HermitianMatrix::from_real_diagonal(&diag)).expect("diagonal PSD gram")
}

/// Rejection-samples a channel and budget whose joint-constraint optimum is
/// full-rank, i.e. [`classify_full_rank`] returns `FullRank`.
///
/// [`classify_full_rank`]: crate::solvers::classify_full_rank
pub fn random_fullrank_instance(
    dim: usize,
    rng: &mut impl Rng,
) -> (ChannelGram, crate::solvers::PowerBudget) {
    use crate::solvers::{classify_full_rank, PowerBudget, RankClassification};
    loop {
        let cond = 1.5 + 30.0 * rng.random::<f64>();
        let w = random_pd_gram(dim, cond, rng);
        let p = (0.2 + 3.0 * rng.random::<f64>()) / w.lambda_min();
        let ratio = 0.3 + 1.5 * rng.random::<f64>();
        let p_total = ratio * dim as f64 * p;
        let budget = PowerBudget::new(p_total, p).expect("positive powers");
        if matches!(
            classify_full_rank(&w, &budget),
            RankClassification::FullRank { .. }
        ) {
            return (w, budget);
        }
    }
}
