//! Hermitian eigendecomposition by cyclic complex Jacobi rotations.
//!
//! Jacobi is slower than Householder tridiagonalization but converges to
//! full relative accuracy on small eigenvalues, which matters here: rank-one
//! tests compare `λ₂/λ₁` against thresholds as small as 1e-12.

use std::cmp::Ordering;

use num_complex::Complex;

use super::matrix::{ComplexMatrix, HermitianOperator, StateVector};
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 64;

/// Eigenvalues in descending order with matching orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct Eigen<T> {
    pub values: Vec<T>,
    pub vectors: Vec<StateVector<T>>,
}

impl<T: Real> Eigen<T> {
    /// `V diag(λ) V†`.
    pub fn reconstruct(&self) -> HermitianOperator<T> {
        HermitianOperator::from_spectrum(&self.values, &self.vectors)
            .expect("eigen pairs share one dimension")
    }

    pub fn max(&self) -> T {
        self.values[0]
    }

    pub fn min(&self) -> T {
        *self.values.last().expect("dim >= 1")
    }
}

/// Diagonalizes a Hermitian operator.
///
/// Eigenvectors are phase-fixed (first significant component real and
/// positive). Ties in eigenvalue are broken by descending lexicographic order
/// of the phase-fixed eigenvectors so output is deterministic.
pub fn hermitian_eig<T: Real>(op: &HermitianOperator<T>) -> Eigen<T> {
    let n = op.dim();
    let mut a = op.matrix().clone();
    let mut v = ComplexMatrix::<T>::identity(n);
    let scale = a.frobenius_norm();
    let target = T::epsilon() * scale;

    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(&a);
        if off <= target || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut pairs: Vec<(T, StateVector<T>)> = (0..n)
        .map(|k| {
            let col: Vec<Complex<T>> = (0..n).map(|i| v[(i, k)]).collect();
            let vec = StateVector::new(col)
                .expect("finite eigenvector")
                .phase_fixed();
            (a[(k, k)].re, vec)
        })
        .collect();
    sort_pairs(&mut pairs);

    let (values, vectors) = pairs.into_iter().unzip();
    Eigen { values, vectors }
}

fn off_diagonal_norm<T: Real>(a: &ComplexMatrix<T>) -> T {
    let n = a.dim();
    let mut s = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            s = s + a[(i, j)].norm_sqr();
        }
    }
    (s + s).sqrt()
}

/// Annihilates `a[p][q]` with `A ← J† A J`, `V ← V J`, where `J` first rotates
/// the phase of `a[p][q]` onto the real axis and then applies a real Jacobi
/// rotation.
fn rotate<T: Real>(a: &mut ComplexMatrix<T>, v: &mut ComplexMatrix<T>, p: usize, q: usize) {
    let h = a[(p, q)];
    let habs = h.norm();
    if habs == T::zero() {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let two = T::lit(2.0);

    let theta = (aqq - app) / (two * habs);
    let t = if theta.abs() > T::lit(1e150).min(T::max_value().sqrt()) {
        (two * theta).recip()
    } else {
        theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt())
    };
    let c = (t * t + T::one()).sqrt().recip();
    let s = t * c;
    let phase = (h / habs).conj();

    let jpp = Complex::new(c, T::zero());
    let jpq = Complex::new(s, T::zero());
    let jqp = phase * (-s);
    let jqq = phase * c;

    let n = a.dim();
    // columns: A ← A J
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * jpp + akq * jqp;
        a[(k, q)] = akp * jpq + akq * jqq;
    }
    // rows: A ← J† A
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a[(p, q)] = Complex::new(T::zero(), T::zero());
    a[(q, p)] = Complex::new(T::zero(), T::zero());
    a[(p, p)] = Complex::new(app - t * habs, T::zero());
    a[(q, q)] = Complex::new(aqq + t * habs, T::zero());

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
}

fn sort_pairs<T: Real>(pairs: &mut [(T, StateVector<T>)]) {
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(Ordering::Equal));
    let n = pairs.len();
    let top = pairs.iter().map(|p| p.0.abs()).fold(T::one(), T::max);
    let tie = T::lit(16.0) * T::from_usize(n).unwrap_or_else(T::one) * T::epsilon() * top;

    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && pairs[end - 1].0 - pairs[end].0 <= tie {
            end += 1;
        }
        if end - start > 1 {
            pairs[start..end].sort_by(|x, y| lex_desc(&x.1, &y.1));
        }
        start = end;
    }
}

fn lex_desc<T: Real>(x: &StateVector<T>, y: &StateVector<T>) -> Ordering {
    for (a, b) in x.amplitudes().iter().zip(y.amplitudes()) {
        match b.re.partial_cmp(&a.re) {
            Some(Ordering::Equal) | None => {}
            Some(o) => return o,
        }
        match b.im.partial_cmp(&a.im) {
            Some(Ordering::Equal) | None => {}
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

/// Principal square root of a PSD operator.
///
/// Eigenvalues in `[-tol·max(1, λ_max), 0)` are clamped to zero; anything
/// more negative is rejected.
pub fn psd_sqrt<T: Real>(op: &HermitianOperator<T>, tol: T) -> Result<HermitianOperator<T>> {
    let eig = hermitian_eig(op);
    let floor = -tol * T::one().max(eig.max());
    if eig.min() < floor {
        return Err(Error::NotPsd {
            min_eigenvalue: eig.min().as_f64(),
        });
    }
    let roots: Vec<T> = eig
        .values
        .iter()
        .map(|&l| l.max(T::zero()).sqrt())
        .collect();
    HermitianOperator::from_spectrum(&roots, &eig.vectors)
}

/// Checks that every eigenvalue is at least `-tol·max(1, λ_max)`.
pub fn check_psd<T: Real>(op: &HermitianOperator<T>, tol: T) -> Result<Eigen<T>> {
    let eig = hermitian_eig(op);
    if eig.min() < -tol * T::one().max(eig.max()) {
        return Err(Error::NotPsd {
            min_eigenvalue: eig.min().as_f64(),
        });
    }
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{frobenius_distance, make_projector};

    #[test]
    fn diagonal_spectrum() {
        let e = hermitian_eig(&HermitianOperator::<f64>::diagonal(&[1.0, 3.0]));
        assert_eq!(e.values, vec![3.0, 1.0]);
        assert_eq!(e.vectors[0], StateVector::basis(2, 1));
        assert_eq!(e.vectors[1], StateVector::basis(2, 0));
    }

    #[test]
    fn degenerate_identity_orders_standard_basis() {
        let e = hermitian_eig(&HermitianOperator::<f64>::identity(3));
        for k in 0..3 {
            assert_eq!(e.vectors[k], StateVector::basis(3, k));
        }
    }

    #[test]
    fn projector_spectrum() {
        let op = HermitianOperator::<f64>::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]).unwrap();
        let e = hermitian_eig(&op);
        assert!((e.values[0] - 1.0).abs() < 1e-15);
        assert!(e.values[1].abs() < 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.vectors[0][0].re - h).abs() < 1e-15);
        assert!((e.vectors[0][1].re - h).abs() < 1e-15);
        assert_eq!(e.vectors[0][0].im, 0.0);
    }

    #[test]
    fn complex_two_by_two() {
        // [[2, i], [-i, 2]] has eigenvalues 3 and 1.
        let op = HermitianOperator::<f64>::from_entries(
            2,
            vec![
                Complex::new(2.0, 0.0),
                Complex::new(0.0, 1.0),
                Complex::new(0.0, -1.0),
                Complex::new(2.0, 0.0),
            ],
        )
        .unwrap();
        let e = hermitian_eig(&op);
        assert!((e.values[0] - 3.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        assert!(frobenius_distance(&e.reconstruct(), &op).unwrap() < 1e-14);
    }

    #[test]
    fn sqrt_examples() {
        let s = psd_sqrt(&HermitianOperator::<f64>::diagonal(&[4.0, 9.0]), 1e-9).unwrap();
        assert_eq!(s, HermitianOperator::diagonal(&[2.0, 3.0]));
        let i = HermitianOperator::<f64>::identity(4);
        assert_eq!(psd_sqrt(&i, 1e-9).unwrap(), i);

        let psi = StateVector::from_real(&[0.6, 0.8]).unwrap();
        let p = make_projector(&psi).unwrap();
        let s = psd_sqrt(&p, 1e-9).unwrap();
        assert!(frobenius_distance(&s, &p).unwrap() < 1e-7);
    }

    #[test]
    fn sqrt_clamps_tiny_negative_and_rejects_large() {
        let tiny = HermitianOperator::<f64>::diagonal(&[1.0, -5e-10]);
        let s = psd_sqrt(&tiny, 1e-9).unwrap();
        assert_eq!(s.get(1, 1).re, 0.0);
        let neg = HermitianOperator::<f64>::diagonal(&[1.0, -1e-6]);
        assert!(matches!(psd_sqrt(&neg, 1e-9), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn single_precision_works() {
        let op = HermitianOperator::<f32>::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let e = hermitian_eig(&op);
        assert!((e.values[0] - 3.0).abs() < 1e-5);
        assert!((e.values[1] - 1.0).abs() < 1e-5);
    }
}
