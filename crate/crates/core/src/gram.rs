//! Unit-diagonal positive semidefinite matrices, i.e. Gram matrices of unit
//! vectors `y_1, ..., y_n`, equivalently correlation matrices of centered
//! unit-variance Gaussian vectors.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::error::{MathError, Result};
use crate::monte_carlo::fill_normal;

/// Eigenvalues down to this level are treated as zero.
pub const EIGEN_CLIP: f64 = -1e-10;

const ENTRY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GramConfiguration {
    matrix: DMatrix<f64>,
}

impl GramConfiguration {
    /// Validates and normalizes: symmetric to `1e-12`, unit diagonal,
    /// entries in `[-1, 1]`, smallest eigenvalue at least `-1e-10`.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(MathError::invalid("gram matrix must be square and nonempty"));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(MathError::invalid("gram matrix has non-finite entries"));
        }
        let mut m = matrix;
        for i in 0..n {
            if (m[(i, i)] - 1.0).abs() > ENTRY_SLACK {
                return Err(MathError::invalid(format!(
                    "diagonal entry {i} is {}, expected 1",
                    m[(i, i)]
                )));
            }
            m[(i, i)] = 1.0;
            for j in 0..i {
                let (a, b) = (m[(i, j)], m[(j, i)]);
                if (a - b).abs() > ENTRY_SLACK {
                    return Err(MathError::invalid(format!("gram matrix not symmetric at ({i}, {j})")));
                }
                let v = 0.5 * (a + b);
                if v.abs() > 1.0 + ENTRY_SLACK {
                    return Err(MathError::invalid(format!("correlation {v} outside [-1, 1]")));
                }
                let v = v.clamp(-1.0, 1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        let g = Self { matrix: m };
        let min = g.min_eigenvalue();
        if min < EIGEN_CLIP {
            return Err(MathError::NotPositiveSemidefinite { min_eigenvalue: min });
        }
        Ok(g)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(DMatrix::identity(n, n))
    }

    /// Perfect correlation: every entry 1.
    pub fn all_ones(n: usize) -> Result<Self> {
        Self::new(DMatrix::from_element(n, n, 1.0))
    }

    /// Vertices of the regular simplex: off-diagonals `-1/(n-1)`.
    pub fn regular_simplex(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(MathError::invalid("regular simplex needs n >= 2"));
        }
        let c = -1.0 / (n as f64 - 1.0);
        Self::new(DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { c }))
    }

    /// Gram matrix of the rows of `points` after normalizing each to unit length.
    pub fn from_points(points: &DMatrix<f64>) -> Result<Self> {
        let mut y = points.clone();
        normalize_rows(&mut y)?;
        let mut g = &y * y.transpose();
        for i in 0..g.nrows() {
            g[(i, i)] = 1.0;
        }
        let g = 0.5 * (&g + g.transpose());
        Self::new(g.map(|v| v.clamp(-1.0, 1.0)))
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn eigenvalues_sorted(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.matrix.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues_sorted()[0]
    }

    /// Symmetric square root `V diag(sqrt(max(λ, 0))) V^T`.
    pub fn sqrt_factor(&self) -> Result<DMatrix<f64>> {
        let eig = SymmetricEigen::new(self.matrix.clone());
        if let Some(&min) = eig.eigenvalues.iter().min_by(|a, b| a.total_cmp(b)) {
            if min < EIGEN_CLIP {
                return Err(MathError::NotPositiveSemidefinite { min_eigenvalue: min });
            }
        }
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
        let v = &eig.eigenvectors;
        Ok(v * d * v.transpose())
    }

    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        if self.n() != other.n() {
            return f64::INFINITY;
        }
        (&self.matrix - &other.matrix).norm()
    }

    /// Sorted off-diagonal entries followed by sorted eigenvalues; invariant
    /// under simultaneous permutation of rows and columns.
    pub fn fingerprint(&self) -> Vec<f64> {
        let n = self.n();
        let mut off: Vec<f64> = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.matrix[(i, j)])
            .collect();
        off.sort_by(f64::total_cmp);
        off.extend(self.eigenvalues_sorted());
        off
    }

    /// Largest coordinate difference between fingerprints.
    pub fn fingerprint_distance(&self, other: &Self) -> f64 {
        if self.n() != other.n() {
            return f64::INFINITY;
        }
        self.fingerprint()
            .iter()
            .zip(other.fingerprint())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Scales every row of `y` to unit length.
pub fn normalize_rows(y: &mut DMatrix<f64>) -> Result<()> {
    for mut row in y.row_iter_mut() {
        let r = row.norm();
        if !(r > 0.0) || !r.is_finite() {
            return Err(MathError::invalid("point configuration has a zero or non-finite row"));
        }
        row /= r;
    }
    Ok(())
}

/// Random orthogonal conjugation of a random nonnegative spectrum, rescaled to unit diagonal.
pub fn random_gram<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<GramConfiguration> {
    if n == 0 {
        return Err(MathError::invalid("n must be at least 1"));
    }
    let mut buf = vec![0.0; n * n];
    fill_normal(rng, &mut buf);
    let q = DMatrix::from_vec(n, n, buf).qr().q();
    let rank = rng.random_range(1..=n);
    let mut spectrum: Vec<f64> = (0..n).map(|i| if i < rank { rng.random::<f64>() + 1e-3 } else { 0.0 }).collect();
    // shuffle which directions are null
    for i in (1..n).rev() {
        spectrum.swap(i, rng.random_range(0..=i));
    }
    let a = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(spectrum)) * q.transpose();
    let scale: Vec<f64> = (0..n).map(|i| a[(i, i)].max(f64::MIN_POSITIVE).sqrt()).collect();
    let g = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            (a[(i, j)] / (scale[i] * scale[j])).clamp(-1.0, 1.0)
        }
    });
    GramConfiguration::new(0.5 * (&g + g.transpose()))
}
