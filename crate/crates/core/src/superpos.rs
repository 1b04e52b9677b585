//! Superposition as maximal correlation of component signals.
//!
//! A field `φ(ω) = Σ_k ξ_k(ω)|e_k⟩` stays on a single line exactly when every
//! pair of component signals is maximally correlated, `|cor(ξ_k, ξ_m)| = 1`.
//! The generator here realizes that with one scalar driver `η` shared by all
//! components, `ξ_k = c_k η`, which gives covariance `σ²_η |ψ⟩⟨ψ|` with
//! `ψ = Σ c_k |e_k⟩`. Decoherence is modelled as independent phase noise on
//! each component, which destroys the cross-correlations and leaves the
//! per-component energies untouched.

use num_complex::Complex;
use rand::Rng;
use serde::{Serialize, Serializer};

use crate::error::{check_dim, invalid, Error, Result};
use crate::fieldsim::{
    chunked, dephase, stats::moments, Coupling, FieldEnsemble, FieldSpec, Origin,
};
use crate::linops::{
    hermitian_eig, make_projector, Basis, ComplexMatrix, HermitianOperator, StateVector,
};
use crate::rng::{circular_normal, Purpose};
use crate::scalar::Real;

/// Coefficients `c_k` in a basis plus the variance of the common driver.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuperpositionSpec<T: Real> {
    coefficients: StateVector<T>,
    driver_sigma2: T,
    basis: Basis<T>,
}

impl<T: Real> SuperpositionSpec<T> {
    pub fn new(coefficients: StateVector<T>, driver_sigma2: T, basis: Basis<T>) -> Result<Self> {
        check_dim(basis.dim(), coefficients.dim())?;
        if coefficients.is_zero() {
            return Err(invalid(
                "superposition needs at least one nonzero coefficient",
            ));
        }
        if !(driver_sigma2 > T::zero()) || !driver_sigma2.is_finite() {
            return Err(invalid(format!(
                "driver variance must be positive, got {driver_sigma2}"
            )));
        }
        Ok(Self {
            coefficients,
            driver_sigma2,
            basis,
        })
    }

    /// Coefficients in the standard basis.
    pub fn standard(coefficients: StateVector<T>, driver_sigma2: T) -> Result<Self> {
        let dim = coefficients.dim();
        Self::new(coefficients, driver_sigma2, Basis::standard(dim))
    }

    pub fn dim(&self) -> usize {
        self.coefficients.dim()
    }

    pub fn coefficients(&self) -> &StateVector<T> {
        &self.coefficients
    }

    pub fn driver_sigma2(&self) -> T {
        self.driver_sigma2
    }

    pub fn basis(&self) -> &Basis<T> {
        &self.basis
    }

    /// `ψ = Σ_k c_k |e_k⟩` in standard coordinates.
    pub fn psi(&self) -> StateVector<T> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.dim()];
        self.basis
            .synthesize_into(self.coefficients.amplitudes(), &mut out);
        StateVector::new(out).expect("finite")
    }

    /// `σ²_η |ψ⟩⟨ψ|`, rank one by construction.
    pub fn analytic_covariance(&self) -> HermitianOperator<T> {
        make_projector(&self.psi())
            .expect("nonzero psi")
            .scale(self.driver_sigma2)
    }

    /// One draw: `η` of variance `σ²_η`, `ξ_k = c_k η`, `φ = Σ ξ_k e_k`.
    pub(crate) fn draw<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        xi: &mut [Complex<T>],
        phi: &mut [Complex<T>],
    ) {
        let eta: Complex<T> = circular_normal(rng, self.driver_sigma2.as_f64());
        for (x, c) in xi.iter_mut().zip(self.coefficients.amplitudes()) {
            *x = c * eta;
        }
        self.basis.synthesize_into(xi, phi);
    }
}

/// Per-sample component values `ξ_k(ω)` relative to a basis.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentSignals<T: Real> {
    basis: Basis<T>,
    xi: Vec<Complex<T>>,
}

impl<T: Real> ComponentSignals<T> {
    /// Projects every ensemble sample on `basis`: `ξ_k = ⟨e_k|φ⟩`.
    pub fn from_ensemble(e: &FieldEnsemble<T>, basis: &Basis<T>) -> Result<Self> {
        check_dim(e.dim(), basis.dim())?;
        let mut xi = vec![Complex::new(T::zero(), T::zero()); e.flat().len()];
        for (row, out) in e.samples().zip(xi.chunks_exact_mut(e.dim())) {
            basis.coordinates_into(row, out);
        }
        Ok(Self {
            basis: basis.clone(),
            xi,
        })
    }

    pub fn from_rows(basis: Basis<T>, rows: &[Vec<Complex<T>>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(invalid("no component samples"));
        }
        let mut xi = Vec::with_capacity(rows.len() * basis.dim());
        for r in rows {
            check_dim(basis.dim(), r.len())?;
            xi.extend_from_slice(r);
        }
        Ok(Self { basis, xi })
    }

    pub fn basis(&self) -> &Basis<T> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn len(&self) -> usize {
        self.xi.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[Complex<T>] {
        &self.xi[i * self.dim()..(i + 1) * self.dim()]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, Complex<T>> {
        self.xi.chunks_exact(self.dim())
    }

    /// `Σ_k ξ_k(ω)|e_k⟩` for every sample.
    pub fn reconstruct(&self) -> FieldEnsemble<T> {
        let d = self.dim();
        let mut flat = vec![Complex::new(T::zero(), T::zero()); self.xi.len()];
        for (x, out) in self.rows().zip(flat.chunks_exact_mut(d)) {
            self.basis.synthesize_into(x, out);
        }
        FieldEnsemble::from_flat(d, flat, None).expect("non-empty")
    }

    /// Zero-mean covariance `b_km = (1/N) Σ ξ_k ξ̄_m` in basis coordinates.
    pub fn covariance(&self) -> HermitianOperator<T> {
        HermitianOperator::from_hermitian_unchecked(moments(&self.xi, self.dim()).1)
    }

    /// Per-component energies `|ξ_k|²`, row by row.
    pub fn energies(&self) -> impl Iterator<Item = T> + '_ {
        self.xi.iter().map(|z| z.norm_sqr())
    }
}

/// Common-driver ensemble together with its component signals.
pub fn superpose_max_correlated<T: Real>(
    spec: &SuperpositionSpec<T>,
    n: usize,
    seed: u64,
) -> Result<(FieldEnsemble<T>, ComponentSignals<T>)> {
    if n == 0 {
        return Err(invalid("ensemble size must be >= 1"));
    }
    let d = spec.dim();
    let zero = Complex::new(T::zero(), T::zero());
    let chunks = chunked(n, seed, Purpose::Field, |_, rng, count| {
        let mut xi = vec![zero; count * d];
        let mut phi = vec![zero; count * d];
        for (x, p) in xi.chunks_exact_mut(d).zip(phi.chunks_exact_mut(d)) {
            spec.draw(rng, x, p);
        }
        (xi, phi)
    });
    let (xi, phi): (Vec<_>, Vec<_>) = chunks.into_iter().unzip();
    let origin = Origin {
        spec: FieldSpec::superposition(spec.clone()),
        seed,
    };
    let ensemble = FieldEnsemble::from_flat(d, phi.concat(), Some(origin))?;
    Ok((
        ensemble,
        ComponentSignals {
            basis: spec.basis.clone(),
            xi: xi.concat(),
        },
    ))
}

/// Sample correlation coefficients; `None` where a component has zero variance.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix<T> {
    dim: usize,
    entries: Vec<Option<Complex<T>>>,
}

impl<T: Real> CorrelationMatrix<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, k: usize, m: usize) -> Option<Complex<T>> {
        self.entries[k * self.dim + m]
    }

    /// Smallest `|cor|` over defined off-diagonal pairs.
    pub fn min_offdiag_modulus(&self) -> Option<T> {
        let mut best: Option<T> = None;
        for k in 0..self.dim {
            for m in (k + 1)..self.dim {
                if let Some(z) = self.get(k, m) {
                    best = Some(best.map_or(z.norm(), |b| b.min(z.norm())));
                }
            }
        }
        best
    }

    pub fn max_modulus(&self) -> T {
        self.entries
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(T::zero(), T::max)
    }
}

impl<T: Real> Serialize for CorrelationMatrix<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<T> {
            dim: usize,
            re: Vec<Option<T>>,
            im: Vec<Option<T>>,
        }
        Wire {
            dim: self.dim,
            re: self.entries.iter().map(|z| z.map(|z| z.re)).collect(),
            im: self.entries.iter().map(|z| z.map(|z| z.im)).collect(),
        }
        .serialize(s)
    }
}

/// `cor_km = σ̂_km / (σ̂_k σ̂_m)` with `σ̂_km = (1/N) Σ ξ_k ξ̄_m`.
pub fn correlation_matrix<T: Real>(cs: &ComponentSignals<T>) -> CorrelationMatrix<T> {
    let d = cs.dim();
    let (_, cov) = moments(&cs.xi, d);
    let sd: Vec<T> = (0..d).map(|k| cov[(k, k)].re.sqrt()).collect();
    let mut entries = vec![None; d * d];
    for k in 0..d {
        for m in 0..d {
            if sd[k] == T::zero() || sd[m] == T::zero() {
                continue;
            }
            entries[k * d + m] = Some(if k == m {
                Complex::new(T::one(), T::zero())
            } else {
                cov[(k, m)] / (sd[k] * sd[m])
            });
        }
    }
    CorrelationMatrix { dim: d, entries }
}

/// Outcome of a rank-one test on a covariance operator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankOne<T: Real> {
    pub is_rank_one: bool,
    /// Top eigenvector, phase-fixed.
    pub psi_hat: StateVector<T>,
    pub lambda1: T,
    /// `λ₂ / λ₁` (zero in dimension one).
    pub ratio: T,
}

/// Rank one iff `λ₂/λ₁ ≤ tol`.
pub fn rank_one_check<T: Real>(b: &HermitianOperator<T>, tol: T) -> Result<RankOne<T>> {
    let trace = b.trace();
    if !(trace > T::default_tol() * T::one().max(b.matrix().max_abs())) {
        return Err(Error::ZeroField {
            trace: trace.as_f64(),
        });
    }
    let eig = hermitian_eig(b);
    let lambda1 = eig.values[0];
    let lambda2 = eig
        .values
        .get(1)
        .copied()
        .unwrap_or(T::zero())
        .max(T::zero());
    let ratio = lambda2 / lambda1;
    Ok(RankOne {
        is_rank_one: ratio <= tol,
        psi_hat: eig.vectors[0].clone(),
        lambda1,
        ratio,
    })
}

/// Multiplies each `ξ_k(ω)` by `e^{iθ_k(ω)}` with independent `θ_k ~ N(0, γ)`.
///
/// Cross-correlations shrink by `E e^{i(θ_k − θ_m)} = e^{−γ}`; every `|ξ_k|`
/// is preserved sample by sample.
pub fn decohere<T: Real>(
    cs: &ComponentSignals<T>,
    gamma: T,
    seed: u64,
) -> Result<ComponentSignals<T>> {
    if !(gamma >= T::zero()) || !gamma.is_finite() {
        return Err(invalid(format!(
            "decoherence strength must be >= 0, got {gamma}"
        )));
    }
    if gamma == T::zero() {
        return Ok(cs.clone());
    }
    let d = cs.dim();
    let sd = gamma.as_f64().sqrt();
    let chunks = chunked(cs.len(), seed, Purpose::Dephasing, |c, rng, count| {
        let start = c * crate::rng::CHUNK * d;
        let mut out = cs.xi[start..start + count * d].to_vec();
        for row in out.chunks_exact_mut(d) {
            dephase(rng, row, sd);
        }
        out
    });
    Ok(ComponentSignals {
        basis: cs.basis.clone(),
        xi: chunks.concat(),
    })
}

/// Pointwise sum of two fields, independent or sharing one scalar driver.
pub fn superpose_fields<T: Real>(
    a: &FieldSpec<T>,
    b: &FieldSpec<T>,
    coupling: Coupling,
    n: usize,
    seed: u64,
) -> Result<FieldEnsemble<T>> {
    FieldSpec::sum(a.clone(), b.clone(), coupling)?.sample(n, seed)
}

/// Covariance of component signals reconstructed into a matrix over the
/// construction basis, handy for comparing to `c c†`.
pub fn coefficient_outer<T: Real>(spec: &SuperpositionSpec<T>) -> ComplexMatrix<T> {
    let c = spec.coefficients.amplitudes();
    ComplexMatrix::outer(c, c).scale(spec.driver_sigma2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldsim::ensemble_stats;
    use crate::linops::frobenius_distance;

    fn sym() -> SuperpositionSpec<f64> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        SuperpositionSpec::standard(StateVector::from_real(&[h, h]).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn analytic_covariance_examples() {
        let b = sym().analytic_covariance();
        let want = HermitianOperator::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]).unwrap();
        assert!(frobenius_distance(&b, &want).unwrap() < 1e-15);

        let (s1, s2) = (0.6, 1.3);
        let spec =
            SuperpositionSpec::standard(StateVector::from_real(&[s1, -s2]).unwrap(), 1.0).unwrap();
        let want = HermitianOperator::from_real_rows(&[&[s1 * s1, -s1 * s2], &[-s1 * s2, s2 * s2]])
            .unwrap();
        assert!(frobenius_distance(&spec.analytic_covariance(), &want).unwrap() < 1e-15);
    }

    #[test]
    fn spec_validation() {
        assert!(SuperpositionSpec::<f64>::standard(StateVector::zeros(2), 1.0).is_err());
        let c = StateVector::from_real(&[1.0, 0.0]).unwrap();
        assert!(SuperpositionSpec::standard(c.clone(), 0.0).is_err());
        assert!(SuperpositionSpec::new(c, 1.0, Basis::standard(3)).is_err());
    }

    #[test]
    fn single_component_limit_stays_on_e1() {
        let spec =
            SuperpositionSpec::standard(StateVector::from_real(&[1.0, 0.0]).unwrap(), 1.0).unwrap();
        let (e, _) = superpose_max_correlated(&spec, 5_000, 1).unwrap();
        assert!(e.samples().all(|s| s[1] == Complex::new(0.0, 0.0)));
    }

    #[test]
    fn matches_field_spec_sampling_bitwise() {
        let (e, cs) = superpose_max_correlated(&sym(), 10_000, 42).unwrap();
        let via_spec = FieldSpec::superposition(sym()).sample(10_000, 42).unwrap();
        assert_eq!(e.flat(), via_spec.flat());
        assert_eq!(cs.reconstruct().flat(), e.flat());
    }

    #[test]
    fn reconstruction_in_rotated_basis() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let basis = Basis::new(vec![
            StateVector::from_real(&[h, h]).unwrap(),
            StateVector::new(vec![Complex::new(0.0, h), Complex::new(0.0, -h)]).unwrap(),
        ])
        .unwrap();
        let spec = SuperpositionSpec::new(
            StateVector::new(vec![Complex::new(0.8, 0.0), Complex::new(0.0, 0.6)]).unwrap(),
            2.0,
            basis.clone(),
        )
        .unwrap();
        let (e, cs) = superpose_max_correlated(&spec, 1_000, 3).unwrap();
        let back = cs.reconstruct();
        for (a, b) in back.flat().iter().zip(e.flat()) {
            assert!((a - b).norm() <= 1e-12);
        }
        let proj = ComponentSignals::from_ensemble(&e, &basis).unwrap();
        for (a, b) in proj.xi.iter().zip(&cs.xi) {
            assert!((a - b).norm() <= 1e-12);
        }
    }

    #[test]
    fn correlation_examples() {
        let mut rng = crate::rng::substream(5, Purpose::Field, 0);
        let theta = 0.7f64;
        let rot = Complex::from_polar(1.0, theta);
        let rows: Vec<Vec<Complex<f64>>> = (0..2_000)
            .map(|_| {
                let x: Complex<f64> = circular_normal(&mut rng, 1.0);
                vec![x, x, x * rot]
            })
            .collect();
        let cs = ComponentSignals::from_rows(Basis::standard(3), &rows).unwrap();
        let cor = correlation_matrix(&cs);
        assert_eq!(cor.get(0, 0), Some(Complex::new(1.0, 0.0)));
        assert!((cor.get(0, 1).unwrap() - Complex::new(1.0, 0.0)).norm() < 1e-12);
        let z = cor.get(0, 2).unwrap();
        assert!((z.norm() - 1.0).abs() < 1e-12);
        assert!((z.arg() + theta).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_component_is_undefined() {
        let rows = vec![vec![Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)]; 4];
        let cs = ComponentSignals::from_rows(Basis::standard(2), &rows).unwrap();
        let cor = correlation_matrix(&cs);
        assert_eq!(cor.get(0, 1), None);
        assert_eq!(cor.get(1, 1), None);
        assert_eq!(cor.get(0, 0), Some(Complex::new(1.0, 0.0)));
        assert_eq!(cor.min_offdiag_modulus(), None);
        let json = serde_json::to_string(&cor).unwrap();
        assert_eq!(
            json,
            r#"{"dim":2,"re":[1.0,null,null,null],"im":[0.0,null,null,null]}"#
        );
    }

    #[test]
    fn rank_one_examples() {
        let p = HermitianOperator::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]).unwrap();
        let r = rank_one_check(&p, 1e-10).unwrap();
        assert!(r.is_rank_one);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((r.psi_hat[0].re - h).abs() < 1e-15 && (r.psi_hat[1].re - h).abs() < 1e-15);

        let r = rank_one_check(&HermitianOperator::<f64>::identity(2), 0.02).unwrap();
        assert!(!r.is_rank_one);
        assert_eq!(r.ratio, 1.0);

        assert!(matches!(
            rank_one_check(&HermitianOperator::<f64>::zeros(2), 0.02),
            Err(Error::ZeroField { .. })
        ));
    }

    #[test]
    fn rank_one_bound_on_reconstruction() {
        let (e, _) = superpose_max_correlated(&sym(), 20_000, 8).unwrap();
        let b = ensemble_stats(&e).unwrap().covariance;
        let r = rank_one_check(&b, 1e-10).unwrap();
        assert!(r.is_rank_one);
        let approx = make_projector(&r.psi_hat).unwrap().scale(r.lambda1);
        assert!(frobenius_distance(&b, &approx).unwrap() <= r.lambda1 * 1e-10 * 2f64.sqrt());
    }

    #[test]
    fn decohere_zero_is_identity_and_negative_rejected() {
        let (_, cs) = superpose_max_correlated(&sym(), 100, 1).unwrap();
        assert_eq!(decohere(&cs, 0.0, 9).unwrap(), cs);
        assert!(decohere(&cs, -0.1, 9).is_err());
    }

    #[test]
    fn decohere_preserves_component_energies() {
        let (_, cs) = superpose_max_correlated(&sym(), 10_000, 1).unwrap();
        let out = decohere(&cs, 1.3, 9).unwrap();
        for (a, b) in cs.energies().zip(out.energies()) {
            assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
        }
    }

    #[test]
    fn strong_decoherence_kills_off_diagonals() {
        let (_, cs) = superpose_max_correlated(&sym(), 100_000, 2).unwrap();
        let out = decohere(&cs, 50.0, 3).unwrap();
        let b = out.covariance();
        let rho = b.scale(b.trace().recip());
        assert!(rho.get(0, 1).norm() <= 0.02);
    }

    #[test]
    fn common_driver_sums() {
        let e1 = FieldSpec::pure(StateVector::<f64>::basis(2, 0), 1.0).unwrap();
        let e2 = FieldSpec::pure(StateVector::<f64>::basis(2, 1), 1.0).unwrap();
        let s = superpose_fields(&e1, &e2, Coupling::CommonDriver, 20_000, 4).unwrap();
        let r = rank_one_check(&ensemble_stats(&s).unwrap().covariance, 1e-10).unwrap();
        assert!(r.is_rank_one);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((r.psi_hat[0].re - h).abs() < 1e-12 && (r.psi_hat[1].re - h).abs() < 1e-12);

        let ind = superpose_fields(&e1, &e2, Coupling::Independent, 100_000, 4).unwrap();
        let cov = ensemble_stats(&ind).unwrap().covariance;
        assert!(frobenius_distance(&cov, &HermitianOperator::identity(2)).unwrap() < 0.05);
        assert!(!rank_one_check(&cov, 0.02).unwrap().is_rank_one);
    }

    #[test]
    fn common_driver_non_orthogonal() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let a = FieldSpec::pure(StateVector::<f64>::basis(2, 0), 1.0).unwrap();
        let b = FieldSpec::pure(StateVector::from_real(&[h, h]).unwrap(), 1.0).unwrap();
        let s = superpose_fields(&a, &b, Coupling::CommonDriver, 20_000, 4).unwrap();
        let r = rank_one_check(&ensemble_stats(&s).unwrap().covariance, 1e-10).unwrap();
        assert!(r.is_rank_one);
        let want = StateVector::from_real(&[1.0 + h, h])
            .unwrap()
            .normalized()
            .unwrap();
        assert!((r.psi_hat.inner(&want).unwrap().norm() - 1.0).abs() < 1e-12);
        assert!((r.psi_hat[0].re - want[0].re).abs() < 1e-12);
    }
}
