//! Small Hermitian helpers shared by the solver and metric code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

/// Eigen-decomposition of a Hermitian matrix with eigenpairs sorted by
/// ascending eigenvalue. Equal eigenvalues keep the decomposition's own
/// column order.
pub fn hermitian_eigen_sorted(a: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .total_cmp(&eig.eigenvalues[j])
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(a.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

/// Unit-norm eigenvector for the smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvector(a: &DMatrix<Complex64>) -> DVector<Complex64> {
    let (_, vectors) = hermitian_eigen_sorted(a);
    normalize(vectors.column(0).into_owned())
}

/// Largest eigenvalue of `h^H h`, i.e. the squared spectral norm of `h`.
pub fn lambda_max_gram(h: &DMatrix<Complex64>) -> f64 {
    let gram = if h.ncols() <= h.nrows() {
        h.adjoint() * h
    } else {
        h * h.adjoint()
    };
    let (values, _) = hermitian_eigen_sorted(&gram);
    values.last().copied().unwrap_or(0.0).max(0.0)
}

pub fn normalize(v: DVector<Complex64>) -> DVector<Complex64> {
    let n = v.norm();
    if n > 0.0 {
        v / Complex64::new(n, 0.0)
    } else {
        v
    }
}

/// `a^H b` for column vectors.
pub fn inner(a: &DVector<Complex64>, b: &DVector<Complex64>) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}
