//! Exact-shape Hermitian matrix types and the spectral primitives every
//! solver builds on: eigendecomposition, positive part, diagonal/off-diagonal
//! splits, and the log-det capacity objective.
//!
//! All types are immutable after construction and all operations are pure
//! functions, so everything here is safe to share across threads.

use std::ops::{Add, Mul, Sub};

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Result, SolverError};

/// Maximum relative asymmetry accepted by [`HermitianMatrix::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Relative eigenvalue threshold for rank decisions on a [`ChannelGram`].
pub const RANK_RTOL: f64 = 1e-10;

/// Square complex matrix with exact Hermitian symmetry.
///
/// Construction averages the input with its conjugate transpose (after
/// checking the asymmetry is within [`HERMITIAN_TOL`]), so
/// `entries[(i, j)] == conj(entries[(j, i)])` holds exactly afterwards and
/// the diagonal is exactly real. Downstream spectral code relies on this.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    entries: DMatrix<Complex64>,
}

impl HermitianMatrix {
    /// Builds a Hermitian matrix from arbitrary complex entries.
    ///
    /// Fails if the matrix is not square, is empty, contains non-finite
    /// entries, or differs from its conjugate transpose by more than
    /// [`HERMITIAN_TOL`] relative to the largest entry magnitude.
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(SolverError::InvalidInput(format!(
                "matrix must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.nrows() == 0 {
            return Err(SolverError::InvalidInput(
                "matrix dimension must be at least 1".into(),
            ));
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(SolverError::InvalidInput(
                "matrix contains non-finite entries".into(),
            ));
        }
        let scale = entries
            .iter()
            .map(|z| z.norm())
            .fold(0.0_f64, f64::max)
            .max(1.0);
        let mut asymmetry = 0.0_f64;
        for i in 0..entries.nrows() {
            for j in 0..=i {
                let delta = (entries[(i, j)] - entries[(j, i)].conj()).norm();
                asymmetry = asymmetry.max(delta);
            }
        }
        let relative = asymmetry / scale;
        if relative > HERMITIAN_TOL {
            return Err(SolverError::NotHermitian {
                asymmetry: relative,
                tolerance: HERMITIAN_TOL,
            });
        }
        Ok(Self::symmetrized(entries))
    }

    /// Averages a matrix with its conjugate transpose without an asymmetry
    /// check. Used internally where rounding-level asymmetry is expected
    /// (spectral reconstructions, matrix products of Hermitian factors).
    pub(crate) fn symmetrized(entries: DMatrix<Complex64>) -> Self {
        let adjoint = entries.adjoint();
        let entries = (entries + adjoint).map(|z| z * 0.5);
        Self { entries }
    }

    /// Wraps entries that are Hermitian by construction (exact splits).
    fn from_exact(entries: DMatrix<Complex64>) -> Self {
        Self { entries }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_exact(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_exact(DMatrix::identity(dim, dim))
    }

    /// `x * I`.
    pub fn scaled_identity(dim: usize, x: f64) -> Self {
        Self::from_exact(DMatrix::from_diagonal_element(
            dim,
            dim,
            Complex64::new(x, 0.0),
        ))
    }

    /// Diagonal matrix with the given real entries.
    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let v = DVector::from_iterator(diag.len(), diag.iter().map(|&x| Complex64::new(x, 0.0)));
        Self::from_exact(DMatrix::from_diagonal(&v))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[(i, j)]
    }

    /// Diagonal entries; exactly real for a Hermitian matrix.
    pub fn diagonal_real(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.entries.diagonal().iter().map(|z| z.re))
    }

    /// Trace, which is real for a Hermitian matrix.
    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.norm()
    }

    /// Copy with the diagonal replaced by the given real entries; the
    /// off-diagonal part is untouched, so Hermitian symmetry is preserved
    /// exactly.
    pub fn with_real_diagonal(&self, diag: &DVector<f64>) -> Self {
        assert_eq!(diag.len(), self.dim(), "diagonal length mismatch");
        let mut entries = self.entries.clone();
        for i in 0..self.dim() {
            entries[(i, i)] = Complex64::new(diag[i], 0.0);
        }
        Self::from_exact(entries)
    }

    /// Eigendecomposition with eigenvalues sorted in decreasing order.
    pub fn eigensystem(&self) -> Eigensystem {
        Eigensystem::of(self)
    }

    /// Smallest eigenvalue (convenience over the full eigensystem).
    pub fn min_eigenvalue(&self) -> f64 {
        let eig = self.eigensystem();
        eig.eigenvalues()[self.dim() - 1]
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix::from_exact(&self.entries + &rhs.entries)
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix::from_exact(&self.entries - &rhs.entries)
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, rhs: f64) -> HermitianMatrix {
        HermitianMatrix::from_exact(self.entries.map(|z| z * rhs))
    }
}

/// Eigendecomposition of a Hermitian matrix: real eigenvalues sorted in
/// decreasing order and the matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<Complex64>,
}

impl Eigensystem {
    fn of(a: &HermitianMatrix) -> Self {
        let se = SymmetricEigen::new(a.entries.clone());
        let m = se.eigenvalues.len();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| se.eigenvalues[j].total_cmp(&se.eigenvalues[i]));
        let eigenvalues = DVector::from_iterator(m, order.iter().map(|&i| se.eigenvalues[i]));
        let mut eigenvectors = DMatrix::zeros(m, m);
        for (dst, &src) in order.iter().enumerate() {
            eigenvectors.set_column(dst, &se.eigenvectors.column(src));
        }
        Self {
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors as matrix columns, ordered like the values.
    pub fn eigenvectors(&self) -> &DMatrix<Complex64> {
        &self.eigenvectors
    }

    /// Rebuilds `sum_i lambda_i u_i u_i^H`.
    pub fn reconstruct(&self) -> HermitianMatrix {
        self.map_reconstruct(|l| l)
    }

    /// Rebuilds `sum_i f(lambda_i) u_i u_i^H`, i.e. applies a spectral
    /// function while keeping the eigenvectors.
    pub fn map_reconstruct(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let m = self.dim();
        let mut scaled = self.eigenvectors.clone();
        for i in 0..m {
            let w = Complex64::new(f(self.eigenvalues[i]), 0.0);
            scaled.column_mut(i).iter_mut().for_each(|z| *z *= w);
        }
        let product = &scaled * self.eigenvectors.adjoint();
        HermitianMatrix::symmetrized(product)
    }

    fn clip_negative(&mut self) {
        for l in self.eigenvalues.iter_mut() {
            if *l < 0.0 {
                *l = 0.0;
            }
        }
    }
}

/// The channel gram matrix `W = H^H H` with its cached spectral data.
///
/// This is the fixed problem data every solver consumes: the PSD matrix
/// itself, its eigendecomposition (negative rounding tails clipped to zero),
/// the numerical rank, the inverse when full-rank, and the PSD square root
/// used by the log-det evaluation.
#[derive(Debug, Clone)]
pub struct ChannelGram {
    w: HermitianMatrix,
    eig: Eigensystem,
    rank: usize,
    w_inverse: Option<HermitianMatrix>,
    sqrt: HermitianMatrix,
}

impl ChannelGram {
    /// Validates PSD-ness (eigenvalues above `-RANK_RTOL * lambda_1`) and
    /// caches the spectral data.
    pub fn new(w: HermitianMatrix) -> Result<Self> {
        let mut eig = w.eigensystem();
        let m = w.dim();
        let lambda_max = eig.eigenvalues[0].max(0.0);
        let floor = -RANK_RTOL * lambda_max;
        let lambda_min = eig.eigenvalues[m - 1];
        if lambda_min < floor {
            return Err(SolverError::NotPositiveSemidefinite {
                min_eigenvalue: lambda_min,
            });
        }
        eig.clip_negative();
        let rank_tol = RANK_RTOL * lambda_max;
        let rank = eig.eigenvalues.iter().filter(|&&l| l > rank_tol).count();
        let w_inverse = if rank == m {
            Some(eig.map_reconstruct(|l| 1.0 / l))
        } else {
            None
        };
        let sqrt = eig.map_reconstruct(f64::sqrt);
        Ok(Self {
            w,
            eig,
            rank,
            w_inverse,
            sqrt,
        })
    }

    /// Builds the gram `H^H H` from a channel matrix (receive dim x transmit
    /// dim). Fails on non-finite entries.
    pub fn from_channel(h: &DMatrix<Complex64>) -> Result<Self> {
        if h.nrows() == 0 || h.ncols() == 0 {
            return Err(SolverError::InvalidInput(
                "channel matrix must have at least one row and column".into(),
            ));
        }
        if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(SolverError::InvalidInput(
                "channel matrix contains non-finite entries".into(),
            ));
        }
        let w = h.adjoint() * h;
        Self::new(HermitianMatrix::symmetrized(w))
    }

    pub fn dim(&self) -> usize {
        self.w.dim()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.w
    }

    pub fn eigensystem(&self) -> &Eigensystem {
        &self.eig
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.dim()
    }

    /// `W^{-1}`, present only when the gram is numerically full-rank.
    pub fn inverse(&self) -> Option<&HermitianMatrix> {
        self.w_inverse.as_ref()
    }

    /// Diagonal of `W^{-1}` when full-rank.
    pub fn inverse_diagonal(&self) -> Option<DVector<f64>> {
        self.w_inverse.as_ref().map(|inv| inv.diagonal_real())
    }

    /// PSD square root `W^{1/2}`.
    pub fn sqrt(&self) -> &HermitianMatrix {
        &self.sqrt
    }

    /// Largest eigenvalue `lambda_1(W)`.
    pub fn lambda_max(&self) -> f64 {
        self.eig.eigenvalues[0]
    }

    /// Smallest (clipped) eigenvalue `lambda_m(W)`.
    pub fn lambda_min(&self) -> f64 {
        self.eig.eigenvalues[self.dim() - 1]
    }

    /// `ln|W|` for a full-rank gram.
    pub fn log_det(&self) -> Option<f64> {
        if self.is_full_rank() {
            Some(self.eig.eigenvalues.iter().map(|l| l.ln()).sum())
        } else {
            None
        }
    }
}

/// Builds the channel gram `W = H^H H` from a channel matrix.
pub fn gram_from_channel(h: &DMatrix<Complex64>) -> Result<ChannelGram> {
    ChannelGram::from_channel(h)
}

/// Positive part `(A)_+ = sum_{i: lambda_i > 0} lambda_i u_i u_i^H`:
/// retains the positive eigenmodes of a Hermitian matrix.
pub fn positive_part(a: &HermitianMatrix) -> HermitianMatrix {
    a.eigensystem().map_reconstruct(|l| l.max(0.0))
}

/// Splits a Hermitian matrix into its diagonal part and its off-diagonal
/// part. The split is exact: `d + offd` recomposes the input bitwise.
pub fn diag_split(a: &HermitianMatrix) -> (HermitianMatrix, HermitianMatrix) {
    let m = a.dim();
    let mut d = DMatrix::zeros(m, m);
    let mut offd = a.entries().clone();
    for i in 0..m {
        d[(i, i)] = a.get(i, i);
        offd[(i, i)] = Complex64::new(0.0, 0.0);
    }
    (
        HermitianMatrix::from_exact(d),
        HermitianMatrix::from_exact(offd),
    )
}

/// Evaluates the capacity objective `ln det(I + W R)` in nats at a fixed
/// transmit covariance `R` (PSD within tolerance).
///
/// Computed as `ln det(I + W^{1/2} R W^{1/2})` via a Cholesky factorization
/// of the (symmetrized) Hermitian argument, which is numerically stable and
/// nonnegative for PSD inputs. A failed factorization reports a
/// numerical-domain error.
pub fn log_det_capacity(w: &ChannelGram, r: &HermitianMatrix) -> Result<f64> {
    if r.dim() != w.dim() {
        return Err(SolverError::InvalidInput(format!(
            "covariance dimension {} does not match channel dimension {}",
            r.dim(),
            w.dim()
        )));
    }
    let s = w.sqrt().entries();
    let inner = s * r.entries() * s;
    let arg = HermitianMatrix::symmetrized(inner);
    let m = arg.dim();
    let shifted = arg.entries() + DMatrix::<Complex64>::identity(m, m);
    let chol = Cholesky::new(shifted).ok_or(SolverError::NumericalDomain)?;
    let value: f64 = chol.l().diagonal().iter().map(|z| 2.0 * z.re.ln()).sum();
    // PSD inputs can only produce rounding-level negatives.
    if value < 0.0 && value > -1e-12 {
        Ok(0.0)
    } else {
        Ok(value)
    }
}

/// Gradient of `R -> ln det(I + W R)` on the real vector space of Hermitian
/// matrices, i.e. the Hermitian-symmetrized derivative `(I + W R)^{-1} W`.
///
/// Evaluated as `W^{1/2} (I + W^{1/2} R W^{1/2})^{-1} W^{1/2}`, which is the
/// same matrix and keeps the computation inside Hermitian factorizations;
/// falls back to an LU solve of `(I + W R) G = W` if the Cholesky route is
/// unavailable.
pub fn capacity_gradient(w: &ChannelGram, r: &HermitianMatrix) -> Result<HermitianMatrix> {
    if r.dim() != w.dim() {
        return Err(SolverError::InvalidInput(format!(
            "covariance dimension {} does not match channel dimension {}",
            r.dim(),
            w.dim()
        )));
    }
    let m = w.dim();
    let s = w.sqrt().entries();
    let inner = s * r.entries() * s;
    let shifted =
        HermitianMatrix::symmetrized(inner).entries() + DMatrix::<Complex64>::identity(m, m);
    if let Some(chol) = Cholesky::new(shifted) {
        let solved = chol.solve(s);
        return Ok(HermitianMatrix::symmetrized(s * solved));
    }
    let a = DMatrix::<Complex64>::identity(m, m) + w.matrix().entries() * r.entries();
    let solved = a
        .lu()
        .solve(w.matrix().entries())
        .ok_or(SolverError::NumericalDomain)?;
    Ok(HermitianMatrix::symmetrized(solved))
}
