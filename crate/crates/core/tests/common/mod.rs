#![allow(dead_code)]

use etaqfi_core::densela::{expm, Operator};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> Operator {
    Operator::from_fn(n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> Operator {
    random_matrix(rng, n).hermitian_part()
}

pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> Operator {
    expm(&random_hermitian(rng, n).scale(c(0.0, 3.0)))
}

pub fn random_state(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..n)
        .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// S⁻¹·diag(values)·S for a random well-conditioned S: pseudo-Hermitian with a
/// real, distinct spectrum.
pub fn random_pseudo_hermitian(rng: &mut ChaCha8Rng, n: usize) -> (Operator, Vec<f64>) {
    let values: Vec<f64> = (0..n).map(|k| k as f64 * 1.3 - 1.0 + rng.gen_range(0.0..0.5)).collect();
    let s = &Operator::identity(n).scale_real(2.0) + &random_matrix(rng, n).scale_real(0.5);
    let h = s.inverse().unwrap().matmul(&Operator::from_real_diag(&values)).matmul(&s);
    (h, values)
}

pub fn ground(n: usize) -> Vec<Complex64> {
    let mut v = vec![c(0.0, 0.0); n];
    v[0] = c(1.0, 0.0);
    v
}
