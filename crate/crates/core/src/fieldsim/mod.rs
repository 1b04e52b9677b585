//! Classical random fields on a finite-dimensional Hilbert space.
//!
//! A [`FieldSpec`] describes how to draw one field realization; a
//! [`FieldEnsemble`] holds `N` seeded draws. All generators produce zero-mean
//! fields.

mod energy;
mod io;
pub(crate) mod stats;

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{check_dim, invalid, Result};
use crate::linops::{
    check_psd, make_projector, psd_sqrt, Basis, ComplexMatrix, HermitianOperator, StateVector,
};
use crate::rng::{circular_normal, normal, substream, Purpose, CHUNK};
use crate::scalar::Real;
use crate::superpos::SuperpositionSpec;

pub use energy::{energy_along, energy_density, grid_energy, total_energy};
pub use io::{
    read_ensemble_binary, read_ensemble_csv, write_ensemble_binary, write_ensemble_csv,
    EnsembleHeader,
};
pub use stats::{ensemble_stats, EnsembleStats};

/// How two summed fields share randomness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// Each summand draws from its own randomness; covariances add.
    Independent,
    /// Both summands are driven by one scalar signal; the sum stays on a line.
    CommonDriver,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldKind<T: Real> {
    /// Circular complex Gaussian `N(0, B)`.
    Gaussian { covariance: HermitianOperator<T> },
    /// `ξ·ψ/‖ψ‖` with scalar `ξ` of variance `sigma2`.
    Pure { psi: StateVector<T>, sigma2: T },
    /// Maximally correlated components `ξ_k = c_k η`.
    Superposition(SuperpositionSpec<T>),
    /// Inner field with independent Gaussian phase noise (variance `gamma`)
    /// on each coordinate in `basis`.
    Decohered {
        inner: Box<FieldSpec<T>>,
        gamma: T,
        basis: Basis<T>,
    },
    Sum {
        a: Box<FieldSpec<T>>,
        b: Box<FieldSpec<T>>,
        coupling: Coupling,
    },
}

/// Generative description of a random field.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct FieldSpec<T: Real> {
    kind: FieldKind<T>,
}

impl<T: Real> FieldSpec<T> {
    pub fn gaussian(covariance: HermitianOperator<T>) -> Result<Self> {
        check_psd(&covariance, T::default_tol())?;
        Ok(Self {
            kind: FieldKind::Gaussian { covariance },
        })
    }

    pub fn pure(psi: StateVector<T>, sigma2: T) -> Result<Self> {
        if psi.is_zero() {
            return Err(invalid("pure field needs a nonzero psi"));
        }
        if !(sigma2 > T::zero()) || !sigma2.is_finite() {
            return Err(invalid(format!(
                "pure field needs sigma2 > 0, got {sigma2}"
            )));
        }
        Ok(Self {
            kind: FieldKind::Pure { psi, sigma2 },
        })
    }

    pub fn superposition(spec: SuperpositionSpec<T>) -> Self {
        Self {
            kind: FieldKind::Superposition(spec),
        }
    }

    /// Dephases `inner` in its natural basis: the construction basis of a
    /// superposition, the standard basis otherwise.
    pub fn decohered(inner: FieldSpec<T>, gamma: T) -> Result<Self> {
        let basis = match &inner.kind {
            FieldKind::Superposition(s) => s.basis().clone(),
            _ => Basis::standard(inner.dim()),
        };
        Self::decohered_in(inner, gamma, basis)
    }

    pub fn decohered_in(inner: FieldSpec<T>, gamma: T, basis: Basis<T>) -> Result<Self> {
        if !(gamma >= T::zero()) || !gamma.is_finite() {
            return Err(invalid(format!(
                "decoherence strength must be >= 0, got {gamma}"
            )));
        }
        check_dim(inner.dim(), basis.dim())?;
        Ok(Self {
            kind: FieldKind::Decohered {
                inner: Box::new(inner),
                gamma,
                basis,
            },
        })
    }

    /// Pointwise sum `φ = φ_a + φ_b`. A common driver is only meaningful when
    /// both summands are concentrated on a line.
    pub fn sum(a: FieldSpec<T>, b: FieldSpec<T>, coupling: Coupling) -> Result<Self> {
        check_dim(a.dim(), b.dim())?;
        if coupling == Coupling::CommonDriver
            && (a.line_amplitude().is_none() || b.line_amplitude().is_none())
        {
            return Err(invalid(
                "common-driver sums need pure or superposition summands",
            ));
        }
        Ok(Self {
            kind: FieldKind::Sum {
                a: Box::new(a),
                b: Box::new(b),
                coupling,
            },
        })
    }

    pub fn kind(&self) -> &FieldKind<T> {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            FieldKind::Gaussian { covariance } => covariance.dim(),
            FieldKind::Pure { psi, .. } => psi.dim(),
            FieldKind::Superposition(s) => s.dim(),
            FieldKind::Decohered { inner, .. } => inner.dim(),
            FieldKind::Sum { a, .. } => a.dim(),
        }
    }

    /// For fields concentrated on a line, the vector `a` with `φ = η·a` and
    /// `η` of unit variance.
    pub fn line_amplitude(&self) -> Option<Vec<Complex<T>>> {
        match &self.kind {
            FieldKind::Pure { psi, sigma2 } => {
                let unit = psi.normalized().ok()?;
                Some(
                    unit.scaled(Complex::new(sigma2.sqrt(), T::zero()))
                        .into_amplitudes(),
                )
            }
            FieldKind::Superposition(s) => Some(
                s.psi()
                    .scaled(Complex::new(s.driver_sigma2().sqrt(), T::zero()))
                    .into_amplitudes(),
            ),
            FieldKind::Sum {
                a,
                b,
                coupling: Coupling::CommonDriver,
            } => {
                let (a, b) = (a.line_amplitude()?, b.line_amplitude()?);
                Some(a.iter().zip(&b).map(|(x, y)| x + y).collect())
            }
            _ => None,
        }
    }

    /// Exact covariance `E[φφ†]` in the standard basis.
    pub fn covariance(&self) -> HermitianOperator<T> {
        match &self.kind {
            FieldKind::Gaussian { covariance } => covariance.clone(),
            FieldKind::Pure { psi, sigma2 } => {
                let unit = psi.normalized().expect("validated nonzero");
                make_projector(&unit).expect("nonzero").scale(*sigma2)
            }
            FieldKind::Superposition(s) => s.analytic_covariance(),
            FieldKind::Decohered {
                inner,
                gamma,
                basis,
            } => {
                let u = basis.unitary();
                let b = inner.covariance();
                let in_basis = u
                    .adjoint()
                    .matmul(b.matrix())
                    .and_then(|m| m.matmul(&u))
                    .expect("same dim");
                let damp = (-*gamma).exp();
                let dim = b.dim();
                let damped = ComplexMatrix::from_fn(dim, |i, j| {
                    if i == j {
                        in_basis[(i, j)]
                    } else {
                        in_basis[(i, j)] * damp
                    }
                });
                let back = u
                    .matmul(&damped)
                    .and_then(|m| m.matmul(&u.adjoint()))
                    .expect("same dim");
                HermitianOperator::from_hermitian_unchecked(back)
            }
            FieldKind::Sum {
                a,
                b,
                coupling: Coupling::Independent,
            } => a.covariance().add(&b.covariance()).expect("same dim"),
            FieldKind::Sum {
                coupling: Coupling::CommonDriver,
                ..
            } => {
                let amp = self.line_amplitude().expect("validated line summands");
                HermitianOperator::from_hermitian_unchecked(ComplexMatrix::outer(&amp, &amp))
            }
        }
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Draws `n` samples. Identical `(spec, seed, n)` give bit-identical output
    /// regardless of thread count.
    pub fn sample(&self, n: usize, seed: u64) -> Result<FieldEnsemble<T>> {
        if n == 0 {
            return Err(invalid("ensemble size must be >= 1"));
        }
        let sampler = Sampler::compile(self)?;
        let dim = self.dim();
        let chunks = chunked(n, seed, Purpose::Field, |_, rng, count| {
            let mut scratch = sampler.scratch();
            let mut out = vec![Complex::new(T::zero(), T::zero()); count * dim];
            for row in out.chunks_exact_mut(dim) {
                sampler.draw(rng, row, &mut scratch);
            }
            out
        });
        let samples = chunks.concat();
        Ok(FieldEnsemble {
            dim,
            samples,
            origin: Some(Origin {
                spec: self.clone(),
                seed,
            }),
        })
    }
}

/// Runs `f(chunk_index, rng, count)` over fixed chunks of `n` items, one RNG
/// substream per chunk, returning chunk results in order.
pub(crate) fn chunked<R, F>(n: usize, seed: u64, purpose: Purpose, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize, &mut rand_chacha::ChaCha8Rng, usize) -> R + Sync,
{
    let n_chunks = n.div_ceil(CHUNK);
    (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(n - c * CHUNK);
            let mut rng = substream(seed, purpose, c as u64);
            f(c, &mut rng, count)
        })
        .collect()
}

/// A compiled [`FieldSpec`]: matrix roots and directions precomputed so one
/// draw is a handful of multiply-adds.
#[derive(Clone, Debug)]
pub(crate) enum Sampler<T: Real> {
    Gaussian {
        root: ComplexMatrix<T>,
    },
    Line {
        direction: Vec<Complex<T>>,
        variance: f64,
    },
    Superposition(SuperpositionSpec<T>),
    Decohered {
        inner: Box<Sampler<T>>,
        sd: f64,
        basis: Basis<T>,
    },
    Sum {
        a: Box<Sampler<T>>,
        b: Box<Sampler<T>>,
    },
}

type Scratch<T> = Vec<Vec<Complex<T>>>;

impl<T: Real> Sampler<T> {
    pub(crate) fn compile(spec: &FieldSpec<T>) -> Result<Self> {
        Ok(match &spec.kind {
            FieldKind::Gaussian { covariance } => Sampler::Gaussian {
                root: psd_sqrt(covariance, T::default_tol())?.into_matrix(),
            },
            FieldKind::Pure { psi, sigma2 } => Sampler::Line {
                direction: psi.normalized()?.into_amplitudes(),
                variance: sigma2.as_f64(),
            },
            FieldKind::Superposition(s) => Sampler::Superposition(s.clone()),
            FieldKind::Decohered {
                inner,
                gamma,
                basis,
            } => Sampler::Decohered {
                inner: Box::new(Sampler::compile(inner)?),
                sd: gamma.as_f64().sqrt(),
                basis: basis.clone(),
            },
            FieldKind::Sum {
                coupling: Coupling::CommonDriver,
                ..
            } => Sampler::Line {
                direction: spec
                    .line_amplitude()
                    .ok_or_else(|| invalid("common driver needs line fields"))?,
                variance: 1.0,
            },
            FieldKind::Sum {
                a,
                b,
                coupling: Coupling::Independent,
            } => Sampler::Sum {
                a: Box::new(Sampler::compile(a)?),
                b: Box::new(Sampler::compile(b)?),
            },
        })
    }

    fn dim(&self) -> usize {
        match self {
            Sampler::Gaussian { root } => root.dim(),
            Sampler::Line { direction, .. } => direction.len(),
            Sampler::Superposition(s) => s.dim(),
            Sampler::Decohered { inner, .. } => inner.dim(),
            Sampler::Sum { a, .. } => a.dim(),
        }
    }

    fn scratch_depth(&self) -> usize {
        match self {
            Sampler::Gaussian { .. } | Sampler::Superposition(_) => 1,
            Sampler::Line { .. } => 0,
            Sampler::Decohered { inner, .. } => 1 + inner.scratch_depth(),
            Sampler::Sum { a, b } => 1 + a.scratch_depth().max(b.scratch_depth()),
        }
    }

    pub(crate) fn scratch(&self) -> Scratch<T> {
        vec![vec![Complex::new(T::zero(), T::zero()); self.dim()]; self.scratch_depth()]
    }

    /// Writes one realization into `out`.
    pub(crate) fn draw<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        out: &mut [Complex<T>],
        scratch: &mut [Vec<Complex<T>>],
    ) {
        match self {
            Sampler::Gaussian { root } => {
                let z = &mut scratch[0];
                for zi in z.iter_mut() {
                    *zi = circular_normal(rng, 1.0);
                }
                root.apply_into(z, out);
            }
            Sampler::Line {
                direction,
                variance,
            } => {
                let xi: Complex<T> = circular_normal(rng, *variance);
                for (o, d) in out.iter_mut().zip(direction) {
                    *o = xi * d;
                }
            }
            Sampler::Superposition(s) => {
                s.draw(rng, &mut scratch[0], out);
            }
            Sampler::Decohered { inner, sd, basis } => {
                let (xi, rest) = scratch.split_first_mut().expect("scratch sized by depth");
                inner.draw(rng, out, rest);
                basis.coordinates_into(out, xi);
                dephase(rng, xi, *sd);
                basis.synthesize_into(xi, out);
            }
            Sampler::Sum { a, b } => {
                let (tmp, rest) = scratch.split_first_mut().expect("scratch sized by depth");
                a.draw(rng, out, rest);
                b.draw(rng, tmp, rest);
                for (o, t) in out.iter_mut().zip(tmp.iter()) {
                    *o = *o + t;
                }
            }
        }
    }
}

/// Multiplies each component by `e^{iθ}` with `θ ~ N(0, sd²)`.
pub(crate) fn dephase<T: Real, R: Rng + ?Sized>(rng: &mut R, xi: &mut [Complex<T>], sd: f64) {
    for x in xi.iter_mut() {
        let theta = sd * normal(rng);
        let (s, c) = theta.sin_cos();
        *x = *x * Complex::new(T::lit(c), T::lit(s));
    }
}

/// Spec and seed an ensemble was generated from.
#[derive(Clone, Debug, PartialEq)]
pub struct Origin<T: Real> {
    pub spec: FieldSpec<T>,
    pub seed: u64,
}

/// `N` field samples `φ_i ∈ C^dim`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldEnsemble<T: Real> {
    dim: usize,
    samples: Vec<Complex<T>>,
    origin: Option<Origin<T>>,
}

impl<T: Real> FieldEnsemble<T> {
    /// Wraps externally supplied samples (no generating spec).
    pub fn from_samples(samples: &[StateVector<T>]) -> Result<Self> {
        let dim = samples
            .first()
            .map(StateVector::dim)
            .ok_or_else(|| invalid("empty ensemble"))?;
        let mut flat = Vec::with_capacity(dim * samples.len());
        for s in samples {
            check_dim(dim, s.dim())?;
            flat.extend_from_slice(s.amplitudes());
        }
        Ok(Self {
            dim,
            samples: flat,
            origin: None,
        })
    }

    pub(crate) fn from_flat(
        dim: usize,
        samples: Vec<Complex<T>>,
        origin: Option<Origin<T>>,
    ) -> Result<Self> {
        if dim == 0 || samples.is_empty() || !samples.len().is_multiple_of(dim) {
            return Err(invalid("ensemble data must hold N >= 1 rows of length dim"));
        }
        Ok(Self {
            dim,
            samples,
            origin,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[Complex<T>] {
        &self.samples[i * self.dim..(i + 1) * self.dim]
    }

    pub fn samples(&self) -> std::slice::ChunksExact<'_, Complex<T>> {
        self.samples.chunks_exact(self.dim)
    }

    pub fn flat(&self) -> &[Complex<T>] {
        &self.samples
    }

    pub fn origin(&self) -> Option<&Origin<T>> {
        self.origin.as_ref()
    }

    pub fn spec(&self) -> Option<&FieldSpec<T>> {
        self.origin.as_ref().map(|o| &o.spec)
    }

    pub fn seed(&self) -> Option<u64> {
        self.origin.as_ref().map(|o| o.seed)
    }
}

/// Gaussian ensemble `φ = B^{1/2} z` with circular unit-variance `z`.
pub fn sample_gaussian_field<T: Real>(
    b: &HermitianOperator<T>,
    n: usize,
    seed: u64,
) -> Result<FieldEnsemble<T>> {
    FieldSpec::gaussian(b.clone())?.sample(n, seed)
}

/// Ensemble concentrated on the line through `psi`.
pub fn sample_pure_field<T: Real>(
    psi: &StateVector<T>,
    sigma2: T,
    n: usize,
    seed: u64,
) -> Result<FieldEnsemble<T>> {
    FieldSpec::pure(psi.clone(), sigma2)?.sample(n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::frobenius_distance;

    #[test]
    fn zero_covariance_gives_zero_samples() {
        let e = sample_gaussian_field(&HermitianOperator::<f64>::zeros(2), 100, 3).unwrap();
        assert!(e.flat().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn gaussian_rejects_non_psd() {
        let b = HermitianOperator::<f64>::diagonal(&[1.0, -0.5]);
        assert!(sample_gaussian_field(&b, 10, 0).is_err());
    }

    #[test]
    fn pure_field_validation() {
        let psi = StateVector::<f64>::from_real(&[1.0, 0.0]).unwrap();
        assert!(sample_pure_field(&psi, 0.0, 10, 0).is_err());
        assert!(sample_pure_field(&StateVector::zeros(2), 1.0, 10, 0).is_err());
        assert!(sample_pure_field(&psi, 1.0, 0, 0).is_err());
    }

    #[test]
    fn pure_on_basis_vector_has_exactly_zero_second_component() {
        let psi = StateVector::<f64>::from_real(&[1.0, 0.0]).unwrap();
        let e = sample_pure_field(&psi, 1.0, 10_000, 11).unwrap();
        assert!(e.samples().all(|s| s[1].re == 0.0 && s[1].im == 0.0));
    }

    #[test]
    fn same_seed_same_bits_across_chunking() {
        let b = HermitianOperator::<f64>::diagonal(&[1.0, 3.0]);
        let a = sample_gaussian_field(&b, CHUNK * 2 + 17, 5).unwrap();
        let c = sample_gaussian_field(&b, CHUNK * 2 + 17, 5).unwrap();
        assert_eq!(a, c);
        // prefix property: the first chunks agree with a longer run
        let d = sample_gaussian_field(&b, CHUNK * 3, 5).unwrap();
        assert_eq!(&a.flat()[..CHUNK * 2 * 2], &d.flat()[..CHUNK * 2 * 2]);
        let other = sample_gaussian_field(&b, 10, 6).unwrap();
        assert_ne!(&a.flat()[..20], other.flat());
    }

    #[test]
    fn decohered_covariance_damps_off_diagonals() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = StateVector::from_real(&[h, h]).unwrap();
        let spec = FieldSpec::decohered(FieldSpec::pure(psi, 1.0).unwrap(), 1.0).unwrap();
        let b = spec.covariance();
        assert!((b.get(0, 0).re - 0.5).abs() < 1e-15);
        assert!((b.get(0, 1).re - 0.5 * (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn independent_sum_covariance_adds() {
        let e1 = FieldSpec::pure(StateVector::<f64>::basis(2, 0), 1.0).unwrap();
        let e2 = FieldSpec::pure(StateVector::<f64>::basis(2, 1), 1.0).unwrap();
        let s = FieldSpec::sum(e1, e2, Coupling::Independent).unwrap();
        assert_eq!(s.covariance(), HermitianOperator::identity(2));
    }

    #[test]
    fn common_driver_rejects_gaussian_summand() {
        let g = FieldSpec::gaussian(HermitianOperator::<f64>::identity(2)).unwrap();
        let p = FieldSpec::pure(StateVector::basis(2, 0), 1.0).unwrap();
        assert!(FieldSpec::sum(g, p, Coupling::CommonDriver).is_err());
    }

    #[test]
    fn digest_is_stable_and_discriminating() {
        let a = FieldSpec::gaussian(HermitianOperator::<f64>::diagonal(&[1.0, 3.0])).unwrap();
        let b = FieldSpec::gaussian(HermitianOperator::<f64>::diagonal(&[1.0, 3.0])).unwrap();
        let c = FieldSpec::gaussian(HermitianOperator::<f64>::diagonal(&[3.0, 1.0])).unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), c.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn decohered_sample_matches_covariance() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = StateVector::from_real(&[h, h]).unwrap();
        let spec = FieldSpec::decohered(FieldSpec::pure(psi, 1.0).unwrap(), 0.5).unwrap();
        let e = spec.sample(100_000, 2).unwrap();
        let s = ensemble_stats(&e).unwrap();
        assert!(frobenius_distance(&s.covariance, &spec.covariance()).unwrap() < 0.03);
    }

    #[test]
    fn single_precision_sampling() {
        let b = HermitianOperator::<f32>::diagonal(&[1.0, 3.0]);
        let e = sample_gaussian_field(&b, 50_000, 1).unwrap();
        let s = ensemble_stats(&e).unwrap();
        assert!(frobenius_distance(&s.covariance, &b).unwrap() < 0.1);
    }
}
