//! Thin helpers over nalgebra for the dense complex algebra used everywhere.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const J: Complex64 = Complex64::new(0.0, 1.0);

/// One draw of CN(0, 1).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_normal_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| complex_normal(rng))
}

pub fn complex_normal_mat<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    // Column-major fill keeps the draw order independent of nalgebra internals.
    let mut m = CMat::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            m[(r, c)] = complex_normal(rng);
        }
    }
    m
}

pub fn unit_vector(n: usize, index: usize) -> CVec {
    let mut e = CVec::zeros(n);
    e[index] = Complex64::new(1.0, 0.0);
    e
}

pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// `‖A - Aᴴ‖_F`.
pub fn hermitian_defect(a: &CMat) -> f64 {
    (a - a.adjoint()).norm()
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(a: &CMat) -> (DVector<f64>, CMat) {
    let eig = SymmetricEigen::new(hermitian_part(a));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Ratio of extreme eigenvalue magnitudes of a Hermitian matrix.
pub fn hermitian_condition(a: &CMat) -> f64 {
    let (values, _) = hermitian_eigen(a);
    let max = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let min = values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solve `A X = B` for Hermitian positive-definite `A`, falling back to LU
/// when the Cholesky factorisation breaks down numerically.
pub fn solve_hpd(a: &CMat, b: &CMat, context: &'static str) -> Result<CMat> {
    if let Some(chol) = a.clone().cholesky() {
        let x = chol.solve(b);
        if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Ok(x);
        }
    }
    solve_general(a, b, context)
}

pub fn solve_general(a: &CMat, b: &CMat, context: &'static str) -> Result<CMat> {
    let lu = a.clone().lu();
    match lu.solve(b) {
        Some(x) if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => Ok(x),
        _ => Err(Error::Singular {
            context,
            condition: hermitian_condition(&hermitian_part(a)),
        }),
    }
}

pub fn solve_hpd_vec(a: &CMat, b: &CVec, context: &'static str) -> Result<CVec> {
    let x = solve_hpd(a, &CMat::from_column_slice(b.len(), 1, b.as_slice()), context)?;
    Ok(CVec::from_column_slice(x.as_slice()))
}

/// Real trace of `A B` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// `xᴴ A x`, real part only (the imaginary part vanishes for Hermitian `A`).
pub fn quadratic_form(a: &CMat, x: &CVec) -> f64 {
    x.dotc(&(a * x)).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn complex_normal_has_unit_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 200_000;
        let (mut mean, mut power) = (Complex64::new(0.0, 0.0), 0.0);
        for _ in 0..n {
            let z = complex_normal(&mut rng);
            mean += z;
            power += z.norm_sqr();
        }
        assert!((mean / n as f64).norm() < 0.01);
        assert!((power / n as f64 - 1.0).abs() < 0.01);
    }

    #[test]
    fn eigen_is_sorted_and_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = complex_normal_mat(&mut rng, 5, 5);
        let h = &a * a.adjoint();
        let (vals, vecs) = hermitian_eigen(&h);
        for i in 1..vals.len() {
            assert!(vals[i - 1] <= vals[i]);
        }
        let d = CMat::from_diagonal(&vals.map(|v| Complex64::new(v, 0.0)));
        let rebuilt = &vecs * d * vecs.adjoint();
        assert!((rebuilt - h).norm() < 1e-10);
    }

    #[test]
    fn hpd_solve_matches_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = complex_normal_mat(&mut rng, 4, 4);
        let h = &a * a.adjoint() + CMat::identity(4, 4);
        let b = complex_normal_mat(&mut rng, 4, 2);
        let x = solve_hpd(&h, &b, "test").unwrap();
        assert!((&h * x - b).norm() < 1e-12);
    }

    #[test]
    fn singular_system_is_reported() {
        let h = CMat::zeros(3, 3);
        let b = CMat::identity(3, 1);
        assert!(matches!(solve_hpd(&h, &b, "zero"), Err(Error::Singular { .. })));
    }
}
