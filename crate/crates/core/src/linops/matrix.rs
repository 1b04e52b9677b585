use std::ops::{Index, IndexMut};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::scalar::Real;

/// Complex amplitude vector in a finite-dimensional Hilbert space.
///
/// Normalization is not assumed; operations that need a unit vector check it.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T> {
    amplitudes: Vec<Complex<T>>,
}

impl<T: Real> StateVector<T> {
    pub fn new(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(invalid("state vector must have dimension >= 1"));
        }
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(invalid("state vector has non-finite amplitudes"));
        }
        Ok(Self { amplitudes })
    }

    pub fn from_real(values: &[T]) -> Result<Self> {
        Self::new(values.iter().map(|&x| Complex::new(x, T::zero())).collect())
    }

    pub fn from_parts(re: &[T], im: &[T]) -> Result<Self> {
        check_dim(re.len(), im.len())?;
        Self::new(
            re.iter()
                .zip(im)
                .map(|(&r, &i)| Complex::new(r, i))
                .collect(),
        )
    }

    /// Standard basis vector `e_k` (zero-based `k`).
    pub fn basis(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index {k} out of range for dimension {dim}");
        let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); dim];
        amplitudes[k] = Complex::new(T::one(), T::zero());
        Self { amplitudes }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            amplitudes: vec![Complex::new(T::zero(), T::zero()); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> T {
        norm_sqr(&self.amplitudes)
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        check_dim(self.dim(), other.dim())?;
        Ok(inner(&self.amplitudes, &other.amplitudes))
    }

    pub fn scaled(&self, s: Complex<T>) -> Self {
        Self {
            amplitudes: self.amplitudes.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == T::zero() {
            return Err(invalid("cannot normalize the zero vector"));
        }
        Ok(self.scaled(Complex::new(n.recip(), T::zero())))
    }

    pub fn is_zero(&self) -> bool {
        self.amplitudes
            .iter()
            .all(|z| z.re == T::zero() && z.im == T::zero())
    }

    /// Multiplies by a global phase so the first significant component is real
    /// and positive. Components below `sqrt(eps) * max|v_i|` are treated as noise.
    pub fn phase_fixed(&self) -> Self {
        match first_significant(&self.amplitudes) {
            Some(i) => {
                let z = self.amplitudes[i];
                let phase = z.conj() / z.norm();
                let mut out = self.scaled(phase);
                out.amplitudes[i] = Complex::new(out.amplitudes[i].re, T::zero());
                out
            }
            None => self.clone(),
        }
    }
}

impl<T> Index<usize> for StateVector<T> {
    type Output = Complex<T>;
    fn index(&self, i: usize) -> &Complex<T> {
        &self.amplitudes[i]
    }
}

pub(crate) fn first_significant<T: Real>(v: &[Complex<T>]) -> Option<usize> {
    let max = v.iter().map(|z| z.norm()).fold(T::zero(), T::max);
    if max == T::zero() {
        return None;
    }
    let cut = max * T::epsilon().sqrt();
    v.iter().position(|z| z.norm() > cut)
}

#[inline]
pub(crate) fn norm_sqr<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

/// `Σ conj(a_i) b_i`.
#[inline]
pub(crate) fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter()
        .zip(b)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| {
            acc + x.conj() * y
        })
}

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn new(dim: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("matrix dimension must be >= 1"));
        }
        if data.len() != dim * dim {
            return Err(invalid(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(invalid("matrix has non-finite entries"));
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex::new(T::zero(), T::zero()); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// `|u⟩⟨v|`.
    pub fn outer(u: &[Complex<T>], v: &[Complex<T>]) -> Self {
        assert_eq!(u.len(), v.len());
        Self::from_fn(u.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).fold(Complex::new(T::zero(), T::zero()), |acc, i| {
            acc + self[(i, i)]
        })
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            dim: self.dim,
            data,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            dim: self.dim,
            data,
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] = out.data[i * n + j] + a * other.data[k * n + j];
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        check_dim(self.dim, v.len())?;
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.dim];
        self.apply_into(v, &mut out);
        Ok(out)
    }

    /// `out = M v` without allocation. Lengths must match `dim`.
    #[inline]
    pub(crate) fn apply_into(&self, v: &[Complex<T>], out: &mut [Complex<T>]) {
        let n = self.dim;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * n..(i + 1) * n];
            *o = row
                .iter()
                .zip(v)
                .fold(Complex::new(T::zero(), T::zero()), |acc, (a, x)| {
                    acc + a * x
                });
        }
    }

    /// `⟨u|M|v⟩`.
    pub fn sandwich(&self, u: &[Complex<T>], v: &[Complex<T>]) -> Result<Complex<T>> {
        check_dim(self.dim, u.len())?;
        Ok(inner(u, &self.apply(v)?))
    }

    pub fn frobenius_norm(&self) -> T {
        norm_sqr(&self.data).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    /// `max |a_ij - conj(a_ji)|`.
    pub fn hermitian_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.hermitian_defect() <= tol * T::one().max(self.max_abs())
    }

    /// `(M + M†) / 2`; exact when `M` is already Hermitian.
    pub(crate) fn hermitian_part(&self) -> Self {
        let half = T::lit(0.5);
        let mut out = self.clone();
        for i in 0..self.dim {
            out[(i, i)] = Complex::new(self[(i, i)].re, T::zero());
            for j in (i + 1)..self.dim {
                let z = (self[(i, j)] + self[(j, i)].conj()) * half;
                out[(i, j)] = z;
                out[(j, i)] = z.conj();
            }
        }
        out
    }
}

impl<T> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = Complex<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.dim + j]
    }
}

/// Dense complex Hermitian operator: covariance operators and candidate
/// density operators live here.
///
/// Construction checks `a_ij = conj(a_ji)` up to a tolerance relative to
/// `max(1, max|a_ij|)`, then stores the exact Hermitian part.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator<T> {
    matrix: ComplexMatrix<T>,
}

impl<T: Real> HermitianOperator<T> {
    pub fn new(matrix: ComplexMatrix<T>) -> Result<Self> {
        Self::with_tolerance(matrix, T::default_tol())
    }

    pub fn with_tolerance(matrix: ComplexMatrix<T>, tol: T) -> Result<Self> {
        if !matrix.is_hermitian(tol) {
            return Err(Error::NotHermitian {
                defect: matrix.hermitian_defect().as_f64(),
            });
        }
        Ok(Self {
            matrix: matrix.hermitian_part(),
        })
    }

    pub fn from_entries(dim: usize, entries: Vec<Complex<T>>) -> Result<Self> {
        Self::new(ComplexMatrix::new(dim, entries)?)
    }

    pub fn from_real_rows(rows: &[&[T]]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            check_dim(dim, row.len())?;
            data.extend(row.iter().map(|&x| Complex::new(x, T::zero())));
        }
        Self::from_entries(dim, data)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::zeros(dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim),
        }
    }

    pub fn diagonal(values: &[T]) -> Self {
        let mut m = ComplexMatrix::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex::new(v, T::zero());
        }
        Self { matrix: m }
    }

    /// `Σ_k w_k |v_k⟩⟨v_k|` for real weights.
    pub fn from_spectrum(weights: &[T], vectors: &[StateVector<T>]) -> Result<Self> {
        check_dim(weights.len(), vectors.len())?;
        let dim = vectors
            .first()
            .map(StateVector::dim)
            .ok_or_else(|| invalid("empty spectrum"))?;
        let mut m = ComplexMatrix::zeros(dim);
        for (&w, v) in weights.iter().zip(vectors) {
            check_dim(dim, v.dim())?;
            if w == T::zero() {
                continue;
            }
            let a = v.amplitudes();
            for i in 0..dim {
                for j in 0..dim {
                    m[(i, j)] = m[(i, j)] + a[i] * a[j].conj() * w;
                }
            }
        }
        Ok(Self {
            matrix: m.hermitian_part(),
        })
    }

    /// Wraps a matrix known to be Hermitian by construction, enforcing exact symmetry.
    pub(crate) fn from_hermitian_unchecked(matrix: ComplexMatrix<T>) -> Self {
        Self {
            matrix: matrix.hermitian_part(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.matrix
    }

    pub fn trace(&self) -> T {
        self.matrix.trace().re
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            matrix: self.matrix.scale(s),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            matrix: self.matrix.add(&other.matrix)?,
        })
    }

    /// `⟨e|self|e⟩`, always real for a Hermitian operator.
    pub fn expectation(&self, e: &StateVector<T>) -> Result<T> {
        Ok(self.matrix.sandwich(e.amplitudes(), e.amplitudes())?.re)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.matrix[(i, j)]
    }

    pub fn frobenius_norm(&self) -> T {
        self.matrix.frobenius_norm()
    }
}

/// `|ψ⟩⟨ψ|`. Idempotent when `‖ψ‖ = 1`.
pub fn make_projector<T: Real>(psi: &StateVector<T>) -> Result<HermitianOperator<T>> {
    if psi.is_zero() {
        return Err(invalid("projector of the zero vector"));
    }
    let a = psi.amplitudes();
    Ok(HermitianOperator::from_hermitian_unchecked(
        ComplexMatrix::outer(a, a),
    ))
}

/// `‖a − b‖_F`.
pub fn frobenius_distance<T: Real>(
    a: &HermitianOperator<T>,
    b: &HermitianOperator<T>,
) -> Result<T> {
    Ok(a.matrix.sub(&b.matrix)?.frobenius_norm())
}

/// Wire form shared by every matrix: `{dim, re, im}` with row-major reals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson<T> {
    pub dim: usize,
    pub re: Vec<T>,
    pub im: Vec<T>,
}

impl<T: Real> From<&ComplexMatrix<T>> for MatrixJson<T> {
    fn from(m: &ComplexMatrix<T>) -> Self {
        Self {
            dim: m.dim,
            re: m.data.iter().map(|z| z.re).collect(),
            im: m.data.iter().map(|z| z.im).collect(),
        }
    }
}

impl<T: Real> TryFrom<MatrixJson<T>> for ComplexMatrix<T> {
    type Error = Error;
    fn try_from(j: MatrixJson<T>) -> Result<Self> {
        check_dim(j.re.len(), j.im.len())?;
        let data =
            j.re.into_iter()
                .zip(j.im)
                .map(|(r, i)| Complex::new(r, i))
                .collect();
        ComplexMatrix::new(j.dim, data)
    }
}

impl<T: Real> Serialize for ComplexMatrix<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(self).serialize(s)
    }
}

impl<'de, T: Real> Deserialize<'de> for ComplexMatrix<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MatrixJson::<T>::deserialize(d)?;
        ComplexMatrix::try_from(j).map_err(serde::de::Error::custom)
    }
}

impl<T: Real> Serialize for HermitianOperator<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.matrix.serialize(s)
    }
}

impl<'de, T: Real> Deserialize<'de> for HermitianOperator<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::<T>::deserialize(d)?;
        HermitianOperator::new(m).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VectorJson<T> {
    re: Vec<T>,
    im: Vec<T>,
}

impl<T: Real> Serialize for StateVector<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        VectorJson {
            re: self.amplitudes.iter().map(|z| z.re).collect(),
            im: self.amplitudes.iter().map(|z| z.im).collect(),
        }
        .serialize(s)
    }
}

impl<'de, T: Real> Deserialize<'de> for StateVector<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = VectorJson::<T>::deserialize(d)?;
        StateVector::from_parts(&j.re, &j.im).map_err(serde::de::Error::custom)
    }
}
