use num_complex::Complex;
use rayon::prelude::*;

use super::FieldEnsemble;
use crate::error::{check_dim, invalid, Result};
use crate::linops::{inner, norm_sqr, StateVector};
use crate::rng::CHUNK;
use crate::scalar::Real;

/// `‖φ‖²`.
pub fn total_energy<T: Real>(phi: &[Complex<T>]) -> T {
    norm_sqr(phi)
}

/// Average energy along a unit direction, `(1/N) Σ |⟨φᵢ|e⟩|²`.
pub fn energy_along<T: Real>(e: &FieldEnsemble<T>, direction: &StateVector<T>) -> Result<T> {
    check_dim(e.dim(), direction.dim())?;
    if (direction.norm() - T::one()).abs() > T::default_tol() {
        return Err(invalid("energy direction must be normalized"));
    }
    let dir = direction.amplitudes();
    let partials: Vec<T> = e
        .flat()
        .par_chunks(CHUNK * e.dim())
        .map(|chunk| {
            chunk
                .chunks_exact(e.dim())
                .fold(T::zero(), |acc, phi| acc + inner(dir, phi).norm_sqr())
        })
        .collect();
    let total = partials.into_iter().fold(T::zero(), |a, b| a + b);
    Ok(total / T::from_usize(e.len()).expect("count fits scalar"))
}

/// Pointwise `|φ(xᵢ)|²` of a field sampled on a 1-D grid.
pub fn energy_density<T: Real>(values: &[Complex<T>], dx: T) -> Result<Vec<T>> {
    if !(dx > T::zero()) {
        return Err(invalid(format!("grid spacing must be positive, got {dx}")));
    }
    Ok(values.iter().map(|z| z.norm_sqr()).collect())
}

/// `Σ |φ(xᵢ)|² dx`, the Riemann sum of the energy density.
pub fn grid_energy<T: Real>(values: &[Complex<T>], dx: T) -> Result<T> {
    Ok(energy_density(values, dx)?
        .into_iter()
        .fold(T::zero(), |a, b| a + b)
        * dx)
}
