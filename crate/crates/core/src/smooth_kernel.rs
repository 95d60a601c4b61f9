//! The scalar kernel behind the smooth norm.
//!
//! `varpi` is a C^∞ function on `[0, 2)` that vanishes on `[0, 1]`, increases
//! strictly on `(1, 2)` and blows up at 2:
//!
//! ```text
//! varpi(u) = exp(1/(2-u) - 1/(u-1))   for 1 < u < 2
//! ```
//!
//! `theta(c) = ∫_0^c dv / varpi⁻¹(v)` is the concave weight function paired
//! with it. Substituting `v = varpi(s)` and integrating by parts gives
//!
//! ```text
//! theta(c) = c / w + ∫_1^w varpi(s) / s² ds,   w = varpi⁻¹(c)
//! ```
//!
//! whose integrand is smooth up to `s = 1`. The same identity gives
//! `theta(varpi(u))` without any inversion, which is what the norm solver
//! evaluates in its inner loop.

use std::sync::{OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;

/// Spacing of cached theta checkpoints in `c`.
pub const CHECKPOINT_SPACING: f64 = 0.25;
/// Checkpoints are cached up to this `c`; beyond it queries integrate from the last one.
pub const CHECKPOINT_LIMIT: f64 = 1024.0;
const EAGER_CHECKPOINTS: usize = 32;
// Number of segments the quadrature budget is split across.
const SEGMENT_BUDGET: f64 = 4096.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelTolerances {
    pub quadrature_abs_tol: f64,
    pub inverse_tol: f64,
}

impl Default for KernelTolerances {
    fn default() -> Self {
        Self {
            quadrature_abs_tol: 1e-10,
            inverse_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Checkpoint {
    c: f64,
    /// varpi⁻¹(c)
    u: f64,
    /// ∫_1^u varpi(s)/s² ds
    tail: f64,
    theta: f64,
}

/// `varpi`, `theta` and their derivatives, with a lazily extended cache of
/// theta checkpoints.
///
/// All methods take `&self`; the cache sits behind a lock, so one instance can
/// be shared between threads.
#[derive(Debug)]
pub struct KernelFunctions {
    tol: KernelTolerances,
    checkpoints: RwLock<Vec<Checkpoint>>,
}

impl Default for KernelFunctions {
    fn default() -> Self {
        Self::new(KernelTolerances::default()).expect("default tolerances are valid")
    }
}

/// A process-wide kernel with default tolerances.
pub fn shared() -> &'static KernelFunctions {
    static KERNEL: OnceLock<KernelFunctions> = OnceLock::new();
    KERNEL.get_or_init(KernelFunctions::default)
}

impl KernelFunctions {
    pub fn new(tol: KernelTolerances) -> Result<Self> {
        if !(tol.quadrature_abs_tol > 0.0 && tol.inverse_tol > 0.0) {
            return Err(Error::Parameter(format!(
                "kernel tolerances must be positive, got {tol:?}"
            )));
        }
        let kernel = Self {
            tol,
            checkpoints: RwLock::new(vec![Checkpoint {
                c: 0.0,
                u: 1.0,
                tail: 0.0,
                theta: 0.0,
            }]),
        };
        kernel.extend_checkpoints(EAGER_CHECKPOINTS);
        Ok(kernel)
    }

    pub fn tolerances(&self) -> KernelTolerances {
        self.tol
    }

    /// Snapshot of the cached `(c, theta(c))` checkpoints.
    pub fn theta_checkpoint_grid(&self) -> Vec<(f64, f64)> {
        self.checkpoints
            .read()
            .expect("checkpoint lock poisoned")
            .iter()
            .map(|cp| (cp.c, cp.theta))
            .collect()
    }

    pub fn varpi(&self, u: f64) -> Result<f64> {
        check_unit_domain(u)?;
        Ok(varpi_unchecked(u))
    }

    pub fn varpi_prime(&self, u: f64) -> Result<f64> {
        check_unit_domain(u)?;
        Ok(varpi_prime_unchecked(u))
    }

    /// Inverse of `varpi` on `(1, 2)`, extended by `varpi_inv(0) = 1`.
    pub fn varpi_inv(&self, v: f64) -> Result<f64> {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::Domain(format!(
                "varpi_inv needs a finite v >= 0, got {v}"
            )));
        }
        Ok(self.varpi_inv_unchecked(v))
    }

    pub fn theta(&self, c: f64) -> Result<f64> {
        check_weight_domain(c)?;
        Ok(self.theta_unchecked(c))
    }

    /// `theta'(c) = 1 / varpi⁻¹(c)`, with `theta'(0) = 1`.
    pub fn theta_prime(&self, c: f64) -> Result<f64> {
        check_weight_domain(c)?;
        Ok(1.0 / self.varpi_inv_unchecked(c))
    }

    /// `(theta(varpi(u)), d/du theta(varpi(u)))`; the derivative is `varpi'(u)/u`.
    pub fn theta_compose_varpi(&self, u: f64) -> Result<(f64, f64)> {
        check_unit_domain(u)?;
        let derivative = if u > 0.0 {
            varpi_prime_unchecked(u) / u
        } else {
            0.0
        };
        Ok((self.theta_varpi_unchecked(u), derivative))
    }

    pub(crate) fn varpi_inv_unchecked(&self, v: f64) -> f64 {
        if v == 0.0 {
            return 1.0;
        }
        let target = v.ln();
        // ln varpi(1 + a) = L  <=>  L a² + (2 - L) a - 1 = 0.
        let mut a = 2.0 / ((target * target + 4.0).sqrt() - target + 2.0);
        for _ in 0..4 {
            let b = 1.0 - a;
            // Log-space residual = relative error in v.
            let residual = 1.0 / b - 1.0 / a - target;
            if residual.abs() <= 0.01 * self.tol.inverse_tol {
                break;
            }
            let slope = 1.0 / (b * b) + 1.0 / (a * a);
            let next = a - residual / slope;
            if !(next > 0.0 && next < 1.0) || next == a {
                break;
            }
            a = next;
        }
        1.0 + a
    }

    pub(crate) fn theta_unchecked(&self, c: f64) -> f64 {
        if c == 0.0 {
            return 0.0;
        }
        let w = self.varpi_inv_unchecked(c);
        let cp = self.checkpoint_below(c);
        c / w + cp.tail + self.tail_segment(cp.u, w)
    }

    /// `theta(varpi(u))` for `u` in `[0, 2)`.
    pub(crate) fn theta_varpi_unchecked(&self, u: f64) -> f64 {
        if u <= 1.0 {
            return 0.0;
        }
        let c = varpi_unchecked(u);
        let cp = self.checkpoint_below(c);
        // Rounding in varpi can put the checkpoint marginally above u.
        let start = cp.u.min(u);
        c / u + cp.tail + self.tail_segment(start, u)
    }

    fn segment_tol(&self) -> f64 {
        self.tol.quadrature_abs_tol / SEGMENT_BUDGET
    }

    fn tail_segment(&self, from: f64, to: f64) -> f64 {
        adaptive_simpson(|s| varpi_unchecked(s) / (s * s), from, to, self.segment_tol())
    }

    fn checkpoint_below(&self, c: f64) -> Checkpoint {
        let wanted = (c.min(CHECKPOINT_LIMIT) / CHECKPOINT_SPACING).floor() as usize;
        {
            let cps = self.checkpoints.read().expect("checkpoint lock poisoned");
            if wanted < cps.len() {
                return cps[wanted];
            }
        }
        self.extend_checkpoints(wanted + 1);
        self.checkpoints.read().expect("checkpoint lock poisoned")[wanted]
    }

    fn extend_checkpoints(&self, len: usize) {
        let mut cps = self.checkpoints.write().expect("checkpoint lock poisoned");
        while cps.len() < len {
            let prev = *cps.last().expect("checkpoint list is never empty");
            let c = cps.len() as f64 * CHECKPOINT_SPACING;
            let u = self.varpi_inv_unchecked(c);
            let tail = prev.tail + self.tail_segment(prev.u, u);
            cps.push(Checkpoint {
                c,
                u,
                tail,
                theta: c / u + tail,
            });
        }
    }
}

fn check_unit_domain(u: f64) -> Result<()> {
    if u >= 0.0 && u < 2.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("expected u in [0, 2), got {u}")))
    }
}

fn check_weight_domain(c: f64) -> Result<()> {
    if c >= 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("expected finite c >= 0, got {c}")))
    }
}

pub(crate) fn varpi_unchecked(u: f64) -> f64 {
    if u <= 1.0 {
        return 0.0;
    }
    let v = (1.0 / (2.0 - u) - 1.0 / (u - 1.0)).exp();
    if v.is_finite() {
        v
    } else {
        f64::MAX
    }
}

pub(crate) fn varpi_prime_unchecked(u: f64) -> f64 {
    if u <= 1.0 {
        return 0.0;
    }
    let a = u - 1.0;
    let b = 2.0 - u;
    let d = varpi_unchecked(u) * (1.0 / (b * b) + 1.0 / (a * a));
    if d.is_finite() {
        d
    } else {
        f64::MAX
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::composite_simpson;

    fn k() -> &'static KernelFunctions {
        shared()
    }

    // Independent inverse: plain bisection on varpi.
    fn bisect_inverse(v: f64) -> f64 {
        if v == 0.0 {
            return 1.0;
        }
        let (mut lo, mut hi) = (1.0_f64, 2.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if varpi_unchecked(mid) < v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    // Simpson on 1/varpi⁻¹ over v, after v = c τ² to tame the endpoint.
    fn theta_oracle(c: f64, panels: usize) -> f64 {
        composite_simpson(
            |t| 2.0 * c * t / bisect_inverse(c * t * t),
            0.0,
            1.0,
            panels,
        )
    }

    fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn varpi_examples() {
        assert_eq!(k().varpi(0.5).unwrap(), 0.0);
        assert_eq!(k().varpi(1.0).unwrap(), 0.0);
        assert!((k().varpi(1.5).unwrap() - 1.0).abs() < 1e-15);
        assert!(k().varpi(1.2).unwrap() < k().varpi(1.8).unwrap());
        assert!(k().varpi(1.9999).unwrap().is_finite());
    }

    #[test]
    fn varpi_domain_errors() {
        for u in [-0.1, 2.0, 2.5, f64::NAN] {
            assert!(matches!(k().varpi(u), Err(Error::Domain(_))), "u={u}");
            assert!(matches!(k().varpi_prime(u), Err(Error::Domain(_))));
            assert!(matches!(k().theta_compose_varpi(u), Err(Error::Domain(_))));
        }
        assert!(matches!(k().varpi_inv(-1e-300), Err(Error::Domain(_))));
        assert!(matches!(k().theta(-1.0), Err(Error::Domain(_))));
        assert!(matches!(k().theta_prime(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn varpi_prime_matches_symbolic_and_central_differences() {
        assert_eq!(k().varpi_prime(0.9).unwrap(), 0.0);
        // varpi(1.5) = 1 and 1/(0.5)² + 1/(0.5)² = 8.
        assert!((k().varpi_prime(1.5).unwrap() - 8.0).abs() < 1e-12);
        let h = 1e-6;
        for i in 1..200 {
            let u = 1.0 + 0.0049 * i as f64;
            let d = k().varpi_prime(u).unwrap();
            let fd = central(varpi_unchecked, u, h);
            assert!(
                (d - fd).abs() <= 1e-6 * (1.0 + d),
                "u={u} d={d} fd={fd}"
            );
        }
    }

    #[test]
    fn varpi_inv_examples_and_identity() {
        assert_eq!(k().varpi_inv(0.0).unwrap(), 1.0);
        assert!((k().varpi_inv(1.0).unwrap() - 1.5).abs() < 1e-15);
        let tol = k().tolerances().inverse_tol;
        for i in 0..=280 {
            let v = 10f64.powf(-8.0 + 0.05 * i as f64);
            let u = k().varpi_inv(v).unwrap();
            assert!(u > 1.0 && u < 2.0);
            assert!(
                (varpi_unchecked(u) - v).abs() <= tol * (1.0 + v),
                "v={v} u={u}"
            );
            assert!((u - bisect_inverse(v)).abs() < 1e-14);
        }
    }

    #[test]
    fn theta_examples() {
        assert_eq!(k().theta(0.0).unwrap(), 0.0);
        let t1 = k().theta(1.0).unwrap();
        assert!(t1 > 0.5 && t1 < 1.0);
        // 40-digit reference: 0.71907021913898765...
        assert!((t1 - 0.719_070_219_138_987_7).abs() < 1e-12);
        let t2 = k().theta(2.0).unwrap();
        let oracle = theta_oracle(2.0, 1_000_000);
        assert!((t2 - oracle).abs() < 1e-8, "theta(2)={t2} oracle={oracle}");
        assert!((t2 - 1.365_418_611_670_026_6).abs() < 1e-12);
    }

    #[test]
    fn theta_prime_examples() {
        assert_eq!(k().theta_prime(0.0).unwrap(), 1.0);
        let expect = 1.0 / k().varpi_inv(1.0).unwrap();
        assert_eq!(k().theta_prime(1.0).unwrap(), expect);
        for i in 0..100 {
            let c = 10f64.powf(-6.0 + 0.1 * i as f64);
            let d = k().theta_prime(c).unwrap();
            assert!(d > 0.5 && d <= 1.0);
        }
    }

    #[test]
    fn theta_prime_is_derivative_of_theta() {
        for c in [0.01f64, 0.3, 1.0, 2.7, 15.0, 300.0] {
            let h = 1e-4 * c.max(1e-2);
            let fd = central(|x| k().theta(x).unwrap(), c, h);
            let d = k().theta_prime(c).unwrap();
            assert!((fd - d).abs() < 1e-7, "c={c} fd={fd} d={d}");
        }
    }

    #[test]
    fn theta_compose_varpi_examples() {
        assert_eq!(k().theta_compose_varpi(0.7).unwrap(), (0.0, 0.0));
        assert_eq!(k().theta_compose_varpi(0.0).unwrap(), (0.0, 0.0));
        let (value, deriv) = k().theta_compose_varpi(1.5).unwrap();
        assert!((value - k().theta(1.0).unwrap()).abs() < 1e-13);
        assert!((deriv - k().varpi_prime(1.5).unwrap() / 1.5).abs() < 1e-15);
        let fd = central(|u| k().theta_compose_varpi(u).unwrap().0, 1.5, 1e-6);
        assert!((fd - deriv).abs() <= 1e-6 * deriv.abs());
    }

    #[test]
    fn theta_compose_varpi_agrees_with_theta_of_varpi() {
        for i in 1..60 {
            let u = 1.0 + i as f64 * 0.015;
            let direct = k().theta(varpi_unchecked(u)).unwrap();
            let composed = k().theta_compose_varpi(u).unwrap().0;
            assert!(
                (direct - composed).abs() <= 1e-12 * (1.0 + direct),
                "u={u}"
            );
        }
    }

    #[test]
    fn checkpoints_are_monotone_and_extend_lazily() {
        let kernel = KernelFunctions::default();
        let before = kernel.theta_checkpoint_grid().len();
        kernel.theta(40.0).unwrap();
        let grid = kernel.theta_checkpoint_grid();
        assert!(grid.len() > before);
        assert!(grid.len() as f64 * CHECKPOINT_SPACING > 40.0);
        for w in grid.windows(2) {
            assert!(w[1].0 > w[0].0 && w[1].1 > w[0].1);
        }
    }

    #[test]
    fn beyond_checkpoint_limit_is_still_consistent() {
        let c = 2.0 * CHECKPOINT_LIMIT;
        let t = k().theta(c).unwrap();
        let d = k().theta_prime(c).unwrap();
        assert!(0.5 * c < c * d && c * d < t && t < c);
    }

    #[test]
    fn rejects_bad_tolerances() {
        let bad = KernelTolerances {
            quadrature_abs_tol: 0.0,
            inverse_tol: 1e-12,
        };
        assert!(matches!(KernelFunctions::new(bad), Err(Error::Parameter(_))));
    }
}
