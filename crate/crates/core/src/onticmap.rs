//! Covariance operators to density operators and back.
//!
//! A field with covariance `B` maps to the state `ρ = B / Tr B`; the trace is
//! the field's average energy and is kept alongside so the covariance can be
//! rebuilt. Fields that differ only in energy scale share one image.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::linops::{check_psd, frobenius_distance, Basis, DensityState, HermitianOperator};
use crate::scalar::Real;

/// A density operator together with the energy scale of its preimage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = ""))]
pub struct EpistemicImage<T: Real> {
    pub rho: DensityState<T>,
    pub sigma2: T,
}

impl<T: Real> EpistemicImage<T> {
    /// `sigma2 · rho`.
    pub fn covariance(&self) -> HermitianOperator<T> {
        self.rho.operator().scale(self.sigma2)
    }
}

fn zero_field_floor<T: Real>(b: &HermitianOperator<T>) -> T {
    T::default_tol() * T::one().max(b.matrix().max_abs())
}

/// `ρ = B / Tr B`, `σ² = Tr B`.
pub fn to_epistemic<T: Real>(b: &HermitianOperator<T>) -> Result<EpistemicImage<T>> {
    let trace = b.trace();
    if !(trace > zero_field_floor(b)) {
        return Err(Error::ZeroField {
            trace: trace.as_f64(),
        });
    }
    check_psd(b, T::default_tol())?;
    let rho = DensityState::new(b.scale(trace.recip()))?;
    Ok(EpistemicImage { rho, sigma2: trace })
}

/// Field covariance `σ²·ρ` with average energy `sigma2`.
pub fn from_epistemic<T: Real>(rho: &DensityState<T>, sigma2: T) -> Result<HermitianOperator<T>> {
    if !(sigma2 > T::zero()) || !sigma2.is_finite() {
        return Err(invalid(format!(
            "energy scale must be positive, got {sigma2}"
        )));
    }
    Ok(rho.operator().scale(sigma2))
}

/// Born probabilities `p(k) = ⟨e_k|ρ|e_k⟩`.
///
/// Round-off negatives down to `-tol` are clamped to zero and the vector is
/// renormalized so downstream samplers always see a distribution.
pub fn born_probabilities<T: Real>(rho: &DensityState<T>, basis: &Basis<T>) -> Result<Vec<T>> {
    check_dim(rho.dim(), basis.dim())?;
    let tol = T::default_tol();
    let mut p = basis
        .vectors()
        .iter()
        .map(|e| rho.operator().expectation(e))
        .collect::<Result<Vec<T>>>()?;
    if let Some(&bad) = p.iter().find(|&&x| x < -tol) {
        return Err(invalid(format!("negative Born weight {bad}")));
    }
    p.iter_mut().for_each(|x| *x = x.max(T::zero()));
    let total = p.iter().fold(T::zero(), |a, &b| a + b);
    Ok(p.into_iter().map(|x| x / total).collect())
}

/// `B1 ∼ B2` iff their density images agree within `tol` (Frobenius).
pub fn equivalent<T: Real>(
    b1: &HermitianOperator<T>,
    b2: &HermitianOperator<T>,
    tol: T,
) -> Result<bool> {
    check_dim(b1.dim(), b2.dim())?;
    for b in [b1, b2] {
        let t = b.trace();
        if !(t > zero_field_floor(b)) {
            return Err(Error::ZeroField { trace: t.as_f64() });
        }
    }
    let r1 = b1.scale(b1.trace().recip());
    let r2 = b2.scale(b2.trace().recip());
    Ok(frobenius_distance(&r1, &r2)? <= tol)
}
