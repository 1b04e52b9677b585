use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use super::FieldEnsemble;
use crate::error::{invalid, Result};
use crate::linops::{ComplexMatrix, HermitianOperator, StateVector};
use crate::rng::CHUNK;
use crate::scalar::Real;

/// Empirical first and second moments of an ensemble.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleStats<T: Real> {
    pub n: usize,
    pub mean: StateVector<T>,
    /// Zero-mean estimator `(1/N) Σ φᵢφᵢ†`.
    pub covariance: HermitianOperator<T>,
    /// Average total energy; equal to `trace(covariance)` bit for bit.
    pub dispersion: T,
}

pub fn ensemble_stats<T: Real>(e: &FieldEnsemble<T>) -> Result<EnsembleStats<T>> {
    if e.is_empty() {
        return Err(invalid("ensemble is empty"));
    }
    let (mean, cov) = moments(e.flat(), e.dim());
    let covariance = HermitianOperator::from_hermitian_unchecked(cov);
    let dispersion = covariance.trace();
    Ok(EnsembleStats {
        n: e.len(),
        mean: StateVector::new(mean)?,
        covariance,
        dispersion,
    })
}

/// `(1/N) Σ xᵢ` and `(1/N) Σ xᵢxᵢ†` over rows of `flat`.
///
/// Partial sums are taken over fixed chunks and combined in chunk order, so
/// the result does not depend on the thread pool.
pub(crate) fn moments<T: Real>(
    flat: &[Complex<T>],
    dim: usize,
) -> (Vec<Complex<T>>, ComplexMatrix<T>) {
    let zero = Complex::new(T::zero(), T::zero());
    #[allow(clippy::type_complexity)]
    let partials: Vec<(Vec<Complex<T>>, Vec<Complex<T>>)> = flat
        .par_chunks(CHUNK * dim)
        .map(|chunk| {
            let mut s1 = vec![zero; dim];
            let mut s2 = vec![zero; dim * dim];
            for x in chunk.chunks_exact(dim) {
                for i in 0..dim {
                    s1[i] = s1[i] + x[i];
                    s2[i * dim + i] = s2[i * dim + i] + Complex::new(x[i].norm_sqr(), T::zero());
                    for j in (i + 1)..dim {
                        s2[i * dim + j] = s2[i * dim + j] + x[i] * x[j].conj();
                    }
                }
            }
            (s1, s2)
        })
        .collect();

    let mut s1 = vec![zero; dim];
    let mut s2 = vec![zero; dim * dim];
    for (p1, p2) in &partials {
        for (a, b) in s1.iter_mut().zip(p1) {
            *a = *a + b;
        }
        for (a, b) in s2.iter_mut().zip(p2) {
            *a = *a + b;
        }
    }
    let n = T::from_usize(flat.len() / dim).expect("sample count fits scalar");
    let mean = s1.into_iter().map(|z| z / n).collect();
    let cov = ComplexMatrix::from_fn(dim, |i, j| {
        if i <= j {
            s2[i * dim + j] / n
        } else {
            (s2[j * dim + i] / n).conj()
        }
    });
    (mean, cov)
}
