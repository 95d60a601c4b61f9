//! Bump, plateau and coercive functions, and the composites that turn an
//! operator pair into a coercive function of class `C^k`.

use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::indexed::{IndexedVector, NormPair};
use crate::pair_norm::{membership_u, SmoothNorm};
use crate::quadrature::adaptive_simpson;
use crate::space_operators::{operator_pair, Matrix, VectorField};

pub type FieldFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

const SAMPLE_DIRECTIONS: usize = 64;
const SAMPLE_SEED: u64 = 0x5eed;

/// Order of differentiability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    Finite(u32),
    Infinite,
}

/// A real function on `(ℝ^dim, norm)`.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    eval: FieldFn,
    norm: FieldFn,
    smoothness: Smoothness,
    support_bound: Option<f64>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("dim", &self.dim)
            .field("smoothness", &self.smoothness)
            .field("support_bound", &self.support_bound)
            .finish_non_exhaustive()
    }
}

impl ScalarField {
    pub fn new(
        dim: usize,
        norm: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        smoothness: Smoothness,
        support_bound: Option<f64>,
    ) -> Self {
        Self {
            dim,
            eval: Arc::new(eval),
            norm: Arc::new(norm),
            smoothness,
            support_bound,
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        (self.eval)(x)
    }

    pub fn norm_of(&self, x: &[f64]) -> f64 {
        (self.norm)(x)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    /// Radius outside which the function vanishes, if known.
    pub fn support_bound(&self) -> Option<f64> {
        self.support_bound
    }
}

pub fn euclidean_norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// `exp(1 - 1/(1 - ‖x‖²))` inside the Euclidean unit ball, 0 outside.
///
/// `φ(0) = 1`, `φ ≥ ⅔` on the ball of radius ½ and `φ = 0` outside radius 1.
pub fn standard_bump(dim: usize) -> ScalarField {
    ScalarField::new(
        dim,
        euclidean_norm,
        |x| {
            let r2: f64 = x.iter().map(|a| a * a).sum();
            if r2 >= 1.0 {
                0.0
            } else {
                (1.0 - 1.0 / (1.0 - r2)).exp()
            }
        },
        Smoothness::Infinite,
        Some(1.0),
    )
}

fn step_density(v: f64) -> f64 {
    if v <= 0.0 || v >= 1.0 {
        0.0
    } else {
        (-1.0 / (v * (1.0 - v))).exp()
    }
}

const STEP_TABLE_SIZE: usize = 1024;

// Cumulative integrals of the step density at k / (2·STEP_TABLE_SIZE), k ≤ STEP_TABLE_SIZE.
fn step_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let h = 0.5 / STEP_TABLE_SIZE as f64;
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(STEP_TABLE_SIZE + 1);
        out.push(0.0);
        for k in 0..STEP_TABLE_SIZE {
            acc += adaptive_simpson(step_density, k as f64 * h, (k + 1) as f64 * h, 1e-18);
            out.push(acc);
        }
        out
    })
}

// ∫₀^s of the step density, s ≤ ½.
fn step_integral(s: f64) -> f64 {
    let table = step_table();
    let h = 0.5 / STEP_TABLE_SIZE as f64;
    let k = ((s / h) as usize).min(STEP_TABLE_SIZE);
    table[k] + adaptive_simpson(step_density, k as f64 * h, s, 1e-18)
}

/// Normalized `C^∞` step: 0 for `s ≤ 0`, 1 for `s ≥ 1`, and `B(s) + B(1-s) = 1`.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else if s <= 0.5 {
        step_integral(s) / (2.0 * step_table()[STEP_TABLE_SIZE])
    } else {
        1.0 - smooth_step(1.0 - s)
    }
}

/// Decreasing transition: 1 for `t ≤ ⅓`, 0 for `t ≥ ⅔`.
pub fn transition_pi(t: f64) -> f64 {
    smooth_step((2.0 / 3.0 - t) * 3.0)
}

/// 0 on `[0, 1]`, `(t-1)² exp(-1/(t-1))` beyond; `C^∞` and unbounded.
pub fn coercive_cutoff(t: f64) -> f64 {
    if t <= 1.0 {
        0.0
    } else {
        let s = t - 1.0;
        s * s * (-1.0 / s).exp()
    }
}

// Unit vectors (in the field's norm) used for sampling checks.
fn sample_directions(field: &ScalarField) -> Vec<Vec<f64>> {
    let dim = field.dim;
    let mut dirs = Vec::new();
    for i in 0..dim {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; dim];
            e[i] = s;
            dirs.push(e);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    while dirs.len() < 2 * dim + SAMPLE_DIRECTIONS {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = field.norm_of(&v);
        if n > 1e-3 {
            dirs.push(v.iter().map(|a| a / n).collect());
        }
    }
    dirs.into_iter()
        .map(|v| {
            let n = field.norm_of(&v);
            v.iter().map(|a| a / n).collect()
        })
        .collect()
}

fn scaled(u: &[f64], r: f64) -> Vec<f64> {
    u.iter().map(|a| r * a).collect()
}

/// `ψ(x) = π(φ(δx))`: 0 on the unit ball, 1 outside radius `M/δ`.
///
/// The bounds `φ(0) = 1`, `φ ≥ ⅔` on `‖x‖ ≤ δ` and `φ = 0` on `‖x‖ ≥ M`
/// are checked on sampled rays.
pub fn plateau_from_bump(phi: &ScalarField, delta: f64, m: f64) -> Result<ScalarField> {
    if !(delta > 0.0 && m > delta) {
        return Err(Error::Parameter(format!(
            "need 0 < delta < M, got delta = {delta}, M = {m}"
        )));
    }
    let origin = vec![0.0; phi.dim];
    if phi.evaluate(&origin) != 1.0 {
        return Err(Error::Certification("phi(0) must be 1".into()));
    }
    for u in sample_directions(phi) {
        for k in 0..=16 {
            let r = delta * k as f64 / 16.0;
            let v = phi.evaluate(&scaled(&u, r));
            if !(v >= 2.0 / 3.0) {
                return Err(Error::Certification(format!(
                    "phi = {v} < 2/3 at radius {r} <= delta"
                )));
            }
        }
        for k in 0..=24 {
            let r = m * 2f64.powf(k as f64 / 2.0);
            let v = phi.evaluate(&scaled(&u, r));
            if v != 0.0 {
                return Err(Error::Certification(format!(
                    "phi = {v} != 0 at radius {r} >= M"
                )));
            }
        }
    }
    let inner = phi.clone();
    Ok(ScalarField {
        dim: phi.dim,
        eval: Arc::new(move |x: &[f64]| transition_pi(inner.evaluate(&scaled(x, delta)))),
        norm: phi.norm.clone(),
        smoothness: phi.smoothness,
        support_bound: None,
    })
}

/// `Σ_{n < terms} ψ(R^{-n} x)`.
pub fn plateau_series(psi: &ScalarField, r: f64, x: &[f64], terms: usize) -> f64 {
    let mut acc = 0.0;
    let mut scale = 1.0;
    for _ in 0..terms {
        acc += psi.evaluate(&scaled(x, scale));
        scale /= r;
    }
    acc
}

/// Terms of the plateau series that can be nonzero at `x`.
pub fn plateau_series_terms(psi: &ScalarField, r: f64, x: &[f64]) -> usize {
    let n = psi.norm_of(x);
    if n <= 1.0 {
        1
    } else {
        (n.ln() / r.ln()).ceil() as usize + 2
    }
}

/// `θ(x) = Σ_{n ≥ 0} ψ(R^{-n} x)`, summed only over terms that can be nonzero.
pub fn coercive_from_plateau(psi: &ScalarField, r: f64) -> Result<ScalarField> {
    if !(r > 1.0) {
        return Err(Error::Parameter(format!("R must exceed 1, got {r}")));
    }
    let inner = psi.clone();
    Ok(ScalarField {
        dim: psi.dim,
        eval: Arc::new(move |x: &[f64]| {
            plateau_series(&inner, r, x, plateau_series_terms(&inner, r, x))
        }),
        norm: psi.norm.clone(),
        smoothness: psi.smoothness,
        support_bound: None,
    })
}

/// `φ(x) = π(θ(x) - θ(0))`, with its support radius found by doubling.
pub fn bump_from_coercive(theta_c: &ScalarField) -> Result<ScalarField> {
    let origin = vec![0.0; theta_c.dim];
    let base = theta_c.evaluate(&origin);
    let dirs = sample_directions(theta_c);
    let mut radius = 1.0f64;
    let bound = loop {
        let clear = dirs.iter().all(|u| {
            [1.0, 1.5, 2.0, 4.0, 8.0]
                .iter()
                .all(|k| theta_c.evaluate(&scaled(u, k * radius)) - base >= 2.0 / 3.0)
        });
        if clear {
            break radius;
        }
        radius *= 2.0;
        if radius > 1e12 {
            return Err(Error::Certification(
                "theta - theta(0) stays below 2/3 on sampled rays".into(),
            ));
        }
    };
    let inner = theta_c.clone();
    Ok(ScalarField {
        dim: theta_c.dim,
        eval: Arc::new(move |x: &[f64]| transition_pi(inner.evaluate(x) - base)),
        norm: theta_c.norm.clone(),
        smoothness: theta_c.smoothness,
        support_bound: Some(bound),
    })
}

fn require_u_or_zero<K: Ord + Clone>(p: &NormPair<K>) -> Result<()> {
    if p.is_zero() || membership_u(p) {
        Ok(())
    } else {
        Err(Error::HypothesisViolation(
            "operator pair is neither zero nor in U(L)".into(),
        ))
    }
}

/// `φ(x) = cutoff(‖(Sx, Tx)‖)`.
pub fn talagrand_bump(x: &[f64], s: &Matrix, t: &Matrix) -> Result<f64> {
    let p = operator_pair(x, s, t)?;
    require_u_or_zero(&p)?;
    Ok(coercive_cutoff(SmoothNorm::default().smooth_norm(&p)))
}

/// `(θ_E ∘ f, T(θ_E ∘ f))` over the scalar coordinates `0..T.cols()`.
pub fn composed_pair(
    f: &VectorField<usize>,
    t: &Matrix,
    theta_e: &ScalarField,
) -> Result<NormPair<usize>> {
    if theta_e.dim != f.dim() {
        return Err(Error::Parameter("theta_E lives on a different space".into()));
    }
    let zero = vec![0.0; f.dim()];
    if theta_e.evaluate(&zero) != 0.0 {
        return Err(Error::Precondition(
            "theta_E(0) must be 0 so that theta_E∘f stays finitely supported".into(),
        ));
    }
    let n = t.cols();
    let mut g = vec![0.0; n];
    for (&k, v) in f.iter() {
        if k >= n {
            return Err(Error::Parameter(format!("index {k} outside 0..{n}")));
        }
        g[k] = theta_e.evaluate(v);
    }
    let tg = t.apply(&g)?;
    let idx = |v: &[f64]| -> IndexedVector<usize> {
        v.iter().enumerate().map(|(i, &a)| (i, a)).collect()
    };
    Ok(NormPair::new(idx(&g), idx(&tg)))
}

/// `φ(f) = ρ(‖(θ_E ∘ f, T(θ_E ∘ f))‖)`.
pub fn vector_valued_bump(
    f: &VectorField<usize>,
    t: &Matrix,
    theta_e: &ScalarField,
    rho: &dyn Fn(f64) -> f64,
) -> Result<f64> {
    let p = composed_pair(f, t, theta_e)?;
    require_u_or_zero(&p)?;
    Ok(rho(SmoothNorm::default().smooth_norm(&p)))
}

/// `θ_E(v) = ‖v‖²` in the field's `E`-norm.
pub fn squared_norm_field(f: &VectorField<usize>) -> ScalarField {
    let e = f.e_norm();
    ScalarField::new(
        f.dim(),
        move |v| e.norm(v),
        move |v| e.norm(v).powi(2),
        Smoothness::Infinite,
        None,
    )
}
