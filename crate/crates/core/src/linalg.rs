//! Dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{ComplexField, Complex, DMatrix, DVector, Schur, SymmetricEigen, SVD};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Column-stacking vectorization.
pub fn vec_of<T: Real>(m: &DMatrix<T>) -> DVector<T> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_of`].
pub fn unvec<T: Real>(v: &DVector<T>, rows: usize, cols: usize) -> DMatrix<T> {
    DMatrix::from_column_slice(rows, cols, v.as_slice())
}

pub fn kron<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    a.kronecker(b)
}

/// `(X + Xᵀ) / 2`
pub fn sym<T: Real>(x: &DMatrix<T>) -> DMatrix<T> {
    (x + x.transpose()) * T::lit(0.5)
}

/// All eigenvalues of a general real square matrix via the real Schur form.
pub fn eigenvalues<T: Real>(m: &DMatrix<T>) -> Result<Vec<Complex<T>>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Dimension(format!(
            "eigenvalues of a non-square {}x{} matrix",
            n,
            m.ncols()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), T::default_epsilon(), 1000 + 200 * n)
        .ok_or(Error::EigenNoConvergence(n))?;
    Ok(schur.complex_eigenvalues().iter().cloned().collect())
}

pub fn modulus<T: Real>(z: &Complex<T>) -> T {
    z.re.hypot(z.im)
}

pub fn spectral_radius<T: Real>(m: &DMatrix<T>) -> Result<T> {
    Ok(eigenvalues(m)?
        .iter()
        .map(modulus)
        .fold(T::zero(), |a, b| if b > a { b } else { a }))
}

/// Largest real part over the spectrum.
pub fn max_real_part<T: Real>(m: &DMatrix<T>) -> Result<T> {
    let eig = eigenvalues(m)?;
    eig.iter()
        .map(|z| z.re)
        .reduce(|a, b| if b > a { b } else { a })
        .ok_or_else(|| Error::Dimension("empty matrix has no spectrum".into()))
}

/// Eigenvalue moduli sorted in decreasing order.
pub fn sorted_moduli<T: Real>(m: &DMatrix<T>) -> Result<Vec<T>> {
    let mut mods: Vec<T> = eigenvalues(m)?.iter().map(modulus).collect();
    mods.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(mods)
}

pub fn singular_values<T: Real>(m: &DMatrix<T>) -> DVector<T> {
    SVD::new(m.clone(), false, false).singular_values
}

/// Number of singular values above `rel_tol` times the largest one.
pub fn numerical_rank<T: Real>(m: &DMatrix<T>, rel_tol: T) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = singular_values(m);
    let smax = sv.max();
    if smax <= T::zero() {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Unit right singular vector belonging to the smallest singular value.
pub fn null_vector<T: Real>(m: &DMatrix<T>) -> Result<DVector<T>> {
    let n = m.ncols();
    let svd = SVD::new(m.clone(), false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Singular("SVD did not return right singular vectors".into()))?;
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, T::max_value().unwrap_or(T::one())), |(bi, bv), (i, &s)| {
            if s < bv {
                (i, s)
            } else {
                (bi, bv)
            }
        });
    Ok(DVector::from_iterator(n, v_t.row(idx).iter().cloned()))
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_symmetric_eigenvalue<T: Real>(m: &DMatrix<T>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    SymmetricEigen::new(sym(m)).eigenvalues.min()
}

pub fn max_abs<T: Real>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |a, &b| {
        let b = ComplexField::abs(b);
        if b > a {
            b
        } else {
            a
        }
    })
}

pub fn max_abs_vec<T: Real>(v: &DVector<T>) -> T {
    v.iter().fold(T::zero(), |a, &b| {
        let b = ComplexField::abs(b);
        if b > a {
            b
        } else {
            a
        }
    })
}

pub fn all_finite<T: Real>(m: &DMatrix<T>) -> bool {
    m.iter().all(|x| x.is_finite_value())
}

/// Solves `m x = b` by LU with partial pivoting.
pub fn solve<T: Real>(m: &DMatrix<T>, b: &DVector<T>, what: &str) -> Result<DVector<T>> {
    m.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Singular(what.to_string()))
}
