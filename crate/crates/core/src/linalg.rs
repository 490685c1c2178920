//! Small dense symmetric problems: pseudo-inverse quadratic forms and the
//! largest generalized eigenvalue on the range of a semidefinite matrix.
//!
//! Matrices here are at most a dozen rows, so they are solved in `f64`
//! whatever the scalar type of the moments that produced them.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Relative cutoff below which an eigenvalue of a Gram matrix counts as zero.
pub const RANK_CUTOFF: f64 = 1e-10;

/// Orthonormal eigenvectors of a symmetric `A` whose eigenvalues exceed
/// `cutoff · λ_max`, each scaled by `λ^{-1/2}`: the columns of `W` with
/// `Wᵀ A W = I` spanning the numerical range of `A`.
#[derive(Clone, Debug)]
pub struct RangeBasis {
    pub w: DMatrix<f64>,
    pub rank: usize,
    pub largest: f64,
}

pub fn range_basis(a: &DMatrix<f64>, cutoff: f64) -> RangeBasis {
    let n = a.nrows();
    if n == 0 {
        return RangeBasis {
            w: DMatrix::zeros(0, 0),
            rank: 0,
            largest: 0.0,
        };
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let largest = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let keep: Vec<usize> = (0..n)
        .filter(|&i| largest > 0.0 && eig.eigenvalues[i] > cutoff * largest)
        .collect();
    let mut w = DMatrix::zeros(n, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        let scale = eig.eigenvalues[i].sqrt().recip();
        w.set_column(j, &(eig.eigenvectors.column(i) * scale));
    }
    RangeBasis {
        w,
        rank: keep.len(),
        largest,
    }
}

/// `bᵀ A⁺ b` with the pseudo-inverse taken at [`RANK_CUTOFF`].
pub fn pinv_quadratic(a: &DMatrix<f64>, b: &DVector<f64>) -> f64 {
    let r = range_basis(a, RANK_CUTOFF);
    if r.rank == 0 {
        return 0.0;
    }
    let y = r.w.transpose() * b;
    y.norm_squared()
}

/// Largest `λ` with `M c = λ A c` for some `c` in the range of `A`, i.e.
/// the maximum of `cᵀMc / cᵀAc` over that range. `None` when `A` has
/// numerical rank zero.
pub fn max_generalized_eigenvalue(m: &DMatrix<f64>, a: &DMatrix<f64>) -> Option<f64> {
    let r = range_basis(a, RANK_CUTOFF);
    if r.rank == 0 {
        return None;
    }
    let reduced = r.w.transpose() * m * &r.w;
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = SymmetricEigen::new(reduced);
    eig.eigenvalues.iter().cloned().reduce(f64::max)
}

/// Row-major `Vec<Vec<f64>>` to a matrix.
pub fn matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(n, m, |i, j| rows[i][j])
}
