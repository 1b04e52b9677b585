#![allow(dead_code)]

use num_complex::Complex;
use pcsft_core::{HermitianOperator, Operator, StateVector, Vector};
use proptest::prelude::*;

pub fn complex() -> impl Strategy<Value = Complex<f64>> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex::new(re, im))
}

/// Nonzero vectors of the given dimension.
pub fn vector(dim: usize) -> impl Strategy<Value = Vector> {
    proptest::collection::vec(complex(), dim)
        .prop_filter("nonzero", |v| {
            v.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-3
        })
        .prop_map(|v| StateVector::new(v).unwrap())
}

pub fn unit_vector(max_dim: usize) -> impl Strategy<Value = Vector> {
    (1..=max_dim)
        .prop_flat_map(vector)
        .prop_map(|v| v.normalized().unwrap())
}

/// `G G†` for a random square `G`, so PSD with generic rank.
pub fn psd(dim: usize) -> impl Strategy<Value = Operator> {
    proptest::collection::vec(complex(), dim * dim).prop_map(move |g| {
        let m = pcsft_core::ComplexMatrix::new(dim, g).unwrap();
        let b = m.matmul(&m.adjoint()).unwrap();
        HermitianOperator::new(b).unwrap()
    })
}

pub fn psd_any(max_dim: usize) -> impl Strategy<Value = Operator> {
    (1..=max_dim).prop_flat_map(psd)
}
