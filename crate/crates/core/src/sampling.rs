//! Seeded random instances for property checks and the acceptance suite.

use rand::Rng;

use crate::indexed::{IndexedVector, NormPair};
use crate::ordinal::Ordinal;
use crate::pair_norm::membership_u;
use crate::space_operators::{ENorm, OrdinalFunction, VectorField};

/// Pair on keys `0..size`; each component is 0 with probability `zero_prob`,
/// otherwise uniform in `(-scale, scale)`.
pub fn random_pair<R: Rng>(rng: &mut R, size: usize, scale: f64, zero_prob: f64) -> NormPair<usize> {
    let mut f = IndexedVector::new();
    let mut x = IndexedVector::new();
    for t in 0..size {
        if !rng.gen_bool(zero_prob) {
            f.set(t, rng.gen_range(-scale..scale));
        }
        if !rng.gen_bool(zero_prob) {
            x.set(t, rng.gen_range(-scale..scale));
        }
    }
    NormPair::new(f, x)
}

/// Rejection-samples [`random_pair`] into `U(L)`.
pub fn random_u_pair<R: Rng>(rng: &mut R, size: usize) -> NormPair<usize> {
    loop {
        let p = random_pair(rng, size, 1.0, 0.2);
        if membership_u(&p) {
            return p;
        }
    }
}

/// An ordinal below `ω^{max_degree+1}`.
pub fn random_ordinal<R: Rng>(rng: &mut R, max_degree: u32) -> Ordinal {
    let mut cnf = Vec::new();
    for e in (0..=max_degree).rev() {
        if rng.gen_bool(0.5) {
            cnf.push((e, rng.gen_range(1..=3)));
        }
    }
    Ordinal::from_cnf(cnf).expect("exponents are decreasing")
}

/// A nonzero function on ordinals below `ω^{max_degree+1}` with at most `size` points.
pub fn random_ordinal_function<R: Rng>(rng: &mut R, max_degree: u32, size: usize) -> OrdinalFunction {
    let bound = Ordinal::omega_power(max_degree + 1, 1);
    loop {
        let mut f = OrdinalFunction::new(bound.clone());
        for _ in 0..rng.gen_range(1..=size) {
            let v = if rng.gen_bool(0.2) {
                // Ties for the sup norm.
                1.0
            } else {
                rng.gen_range(-1.0..1.0)
            };
            f.set(random_ordinal(rng, max_degree), v)
                .expect("index below bound");
        }
        if !f.is_zero() {
            return f;
        }
    }
}

/// A finitely supported continuous function on `[0, ω·2]`: values only at successors.
pub fn random_continuous_function<R: Rng>(rng: &mut R, size: usize) -> OrdinalFunction {
    let bound = Ordinal::omega_power(1, 2);
    let mut f = OrdinalFunction::new(bound.clone());
    for _ in 0..rng.gen_range(1..=size) {
        let base = if rng.gen_bool(0.5) {
            Ordinal::zero()
        } else {
            Ordinal::omega_power(1, 1)
        };
        let mut a = base;
        for _ in 0..rng.gen_range(1..=8) {
            a = a.successor();
        }
        f.set(a, rng.gen_range(-1.0..1.0)).expect("index below bound");
    }
    f
}

/// A nonzero vector field on keys below `keys` with at most `keys` entries.
pub fn random_vector_field<R: Rng>(rng: &mut R, keys: usize, dim: usize, e_norm: ENorm) -> VectorField<usize> {
    loop {
        let mut z = VectorField::new(dim, e_norm);
        for k in 0..keys {
            if rng.gen_bool(0.6) {
                let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                z.set(k, v).expect("dimension matches");
            }
        }
        if !z.is_zero() {
            return z;
        }
    }
}

/// A nonzero vector of the given length with entries in `(-1, 1)`.
pub fn random_vector<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..len)
            .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(-1.0..1.0) })
            .collect();
        if v.iter().any(|&a| a != 0.0) {
            return v;
        }
    }
}

/// `n` log-spaced points from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
