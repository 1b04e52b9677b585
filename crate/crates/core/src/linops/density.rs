use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::eig::hermitian_eig;
use super::matrix::{inner, ComplexMatrix, HermitianOperator, StateVector};
use crate::error::{check_dim, invalid, Error, Result};
use crate::scalar::Real;

/// Which density-operator properties a matrix satisfies.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityCheck<T> {
    pub hermitian: bool,
    pub positive: bool,
    pub unit_trace: bool,
    pub hermitian_defect: T,
    /// Smallest eigenvalue of the Hermitian part; `None` when not Hermitian.
    pub min_eigenvalue: Option<T>,
    pub trace: Complex<T>,
}

impl<T: Real> DensityCheck<T> {
    pub fn is_density(&self) -> bool {
        self.hermitian && self.positive && self.unit_trace
    }

    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.hermitian {
            out.push("not Hermitian");
        }
        if !self.positive {
            out.push("not positive semidefinite");
        }
        if !self.unit_trace {
            out.push("trace differs from one");
        }
        out
    }
}

/// Tests Hermiticity, positivity and unit trace, each to `tol`.
pub fn is_density<T: Real>(m: &ComplexMatrix<T>, tol: T) -> DensityCheck<T> {
    let defect = m.hermitian_defect();
    let hermitian = m.is_hermitian(tol);
    let trace = m.trace();
    let unit_trace = (trace - Complex::new(T::one(), T::zero())).norm() <= tol;
    let min_eigenvalue = hermitian
        .then(|| hermitian_eig(&HermitianOperator::from_hermitian_unchecked(m.clone())).min());
    let positive = min_eigenvalue.is_some_and(|l| l >= -tol);
    DensityCheck {
        hermitian,
        positive,
        unit_trace,
        hermitian_defect: defect,
        min_eigenvalue,
        trace,
    }
}

/// A validated density operator: Hermitian, PSD and trace one.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DensityState<T: Real> {
    op: HermitianOperator<T>,
}

impl<T: Real> DensityState<T> {
    pub fn new(op: HermitianOperator<T>) -> Result<Self> {
        Self::with_tolerance(op, T::default_tol())
    }

    pub fn with_tolerance(op: HermitianOperator<T>, tol: T) -> Result<Self> {
        let check = is_density(op.matrix(), tol);
        if !check.is_density() {
            return Err(Error::NotDensity(check.failures().join(", ")));
        }
        Ok(Self { op })
    }

    /// Pure state `|ψ⟩⟨ψ|` of a unit vector.
    pub fn pure(psi: &StateVector<T>) -> Result<Self> {
        let n = psi.norm_sqr();
        if (n - T::one()).abs() > T::default_tol() {
            return Err(invalid("pure state requires a normalized vector"));
        }
        Self::new(super::make_projector(psi)?)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let w = T::from_usize(dim).expect("dimension fits scalar").recip();
        Self {
            op: HermitianOperator::identity(dim).scale(w),
        }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn operator(&self) -> &HermitianOperator<T> {
        &self.op
    }

    pub fn into_operator(self) -> HermitianOperator<T> {
        self.op
    }
}

impl<'de, T: Real> Deserialize<'de> for DensityState<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let op = HermitianOperator::<T>::deserialize(d)?;
        DensityState::new(op).map_err(serde::de::Error::custom)
    }
}

/// Orthonormal, complete basis of the Hilbert space: the detector channels.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Basis<T: Real> {
    vectors: Vec<StateVector<T>>,
    #[serde(skip)]
    standard: bool,
}

impl<T: Real> Basis<T> {
    pub fn new(vectors: Vec<StateVector<T>>) -> Result<Self> {
        Self::with_tolerance(vectors, T::default_tol())
    }

    pub fn with_tolerance(vectors: Vec<StateVector<T>>, tol: T) -> Result<Self> {
        let dim = vectors
            .first()
            .map(StateVector::dim)
            .ok_or_else(|| invalid("empty basis"))?;
        for v in &vectors {
            check_dim(dim, v.dim())?;
        }
        if vectors.len() != dim {
            return Err(invalid(format!(
                "basis is incomplete: {} vectors in dimension {dim}",
                vectors.len()
            )));
        }
        for (i, a) in vectors.iter().enumerate() {
            for (j, b) in vectors.iter().enumerate().skip(i) {
                let g = inner(a.amplitudes(), b.amplitudes());
                let want = if i == j { T::one() } else { T::zero() };
                if (g - Complex::new(want, T::zero())).norm() > tol {
                    return Err(invalid(format!(
                        "basis is not orthonormal: <e{i}|e{j}> = {g}"
                    )));
                }
            }
        }
        let standard = vectors
            .iter()
            .enumerate()
            .all(|(k, v)| *v == StateVector::basis(dim, k));
        Ok(Self { vectors, standard })
    }

    pub fn standard(dim: usize) -> Self {
        Self {
            vectors: (0..dim).map(|k| StateVector::basis(dim, k)).collect(),
            standard: true,
        }
    }

    /// Orthonormal basis whose first vector is `ψ/‖ψ‖`, completed by
    /// Gram–Schmidt against the standard basis.
    pub fn completing(psi: &StateVector<T>) -> Result<Self> {
        let dim = psi.dim();
        let mut vectors = vec![psi.normalized()?];
        for k in 0..dim {
            if vectors.len() == dim {
                break;
            }
            let mut cand = StateVector::<T>::basis(dim, k).into_amplitudes();
            for _ in 0..2 {
                for v in &vectors {
                    let ov = inner(v.amplitudes(), &cand);
                    for (c, a) in cand.iter_mut().zip(v.amplitudes()) {
                        *c = *c - a * ov;
                    }
                }
            }
            let n = super::matrix::norm_sqr(&cand).sqrt();
            if n > T::lit(0.5) / T::from_usize(dim).expect("dim fits").sqrt() {
                vectors.push(StateVector::new(cand)?.normalized()?);
            }
        }
        Self::new(vectors)
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[StateVector<T>] {
        &self.vectors
    }

    pub fn is_standard(&self) -> bool {
        self.standard
    }

    /// Coordinates `ξ_k = ⟨e_k|φ⟩`.
    pub fn coordinates_into(&self, phi: &[Complex<T>], out: &mut [Complex<T>]) {
        if self.standard {
            out.copy_from_slice(phi);
        } else {
            for (o, e) in out.iter_mut().zip(&self.vectors) {
                *o = inner(e.amplitudes(), phi);
            }
        }
    }

    pub fn coordinates(&self, phi: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        check_dim(self.dim(), phi.len())?;
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.dim()];
        self.coordinates_into(phi, &mut out);
        Ok(out)
    }

    /// `φ = Σ_k ξ_k |e_k⟩`.
    pub fn synthesize_into(&self, xi: &[Complex<T>], out: &mut [Complex<T>]) {
        if self.standard {
            out.copy_from_slice(xi);
            return;
        }
        out.iter_mut()
            .for_each(|o| *o = Complex::new(T::zero(), T::zero()));
        for (x, e) in xi.iter().zip(&self.vectors) {
            for (o, a) in out.iter_mut().zip(e.amplitudes()) {
                *o = *o + a * x;
            }
        }
    }

    /// Unitary whose columns are the basis vectors.
    pub fn unitary(&self) -> ComplexMatrix<T> {
        ComplexMatrix::from_fn(self.dim(), |i, j| self.vectors[j][i])
    }
}

impl<'de, T: Real> Deserialize<'de> for Basis<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<StateVector<T>>::deserialize(d)?;
        Basis::new(v).map_err(serde::de::Error::custom)
    }
}
