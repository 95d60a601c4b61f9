//! The smooth lattice norm on `ℓ∞(L) ⊕ c₀(L)`.
//!
//! ```text
//! ‖(f, x)‖ = sup_{d ≥ 0} exp(-Σ d_t) Σ [ d_t |f_t| + theta(d_t) |x_t| ]
//! ```
//!
//! At a maximizer every weight satisfies `c_t = varpi(|x_t| / (ν - |f_t|))`
//! where `ν = Σ [c_t |f_t| + theta(c_t) |x_t|]`, so the whole problem collapses
//! to the scalar equation `H(ν) = 0` with
//!
//! ```text
//! H(ν) = ν - Σ [ varpi(r_t) |f_t| + theta(varpi(r_t)) |x_t| ],   r_t = |x_t| / (ν - |f_t|)
//! ```
//!
//! and `∂H/∂ν ≥ 1`. On the open set `U(L)` the sum only needs the finite
//! near-peak set `N(f, x)`; elsewhere the same equation is solved over the
//! whole support, with an extra free-mass term when the top of
//! `|f| + ½|x|` is reached only where `x` vanishes.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::indexed::{IndexedVector, NormPair};
use crate::smooth_kernel::{self, varpi_prime_unchecked, varpi_unchecked, KernelFunctions};

/// Largest support the brute-force oracle accepts.
pub const BRUTE_FORCE_MAX_SUPPORT: usize = 6;
const BRUTE_FORCE_MAX_GRID: f64 = 2e7;
const NU_REL_TOL: f64 = 1e-12;
const WEIGHT_SLACK: f64 = 1e-9;

/// `‖f‖∞` and `‖x‖∞` both strictly below `‖ |f| + ½|x| ‖∞`.
pub fn membership_u<K: Ord + Clone>(p: &NormPair<K>) -> bool {
    let level = p.peak_level();
    p.f.sup_norm().max(p.x.sup_norm()) < level
}

/// `ξ(f, x) = ‖ |f| + ½|x| ‖∞ - max(‖f‖∞, ‖x‖∞)`.
pub fn slack_xi<K: Ord + Clone>(p: &NormPair<K>) -> f64 {
    p.peak_level() - p.f.sup_norm().max(p.x.sup_norm())
}

/// `M(f, x) = {t : |f_t| + |x_t| ≥ ‖ |f| + ½|x| ‖∞}`.
pub fn peak_set<K: Ord + Clone>(p: &NormPair<K>) -> BTreeSet<K> {
    let level = p.peak_level();
    level_set(p, level)
}

/// `N(f, x) = {t : |f_t| + |x_t| ≥ ‖ |f| + ½|x| ‖∞ - ½ξ}`.
///
/// Outside `U(L)` the slack is not positive and `N = M`.
pub fn near_peak_set<K: Ord + Clone>(p: &NormPair<K>) -> BTreeSet<K> {
    let level = p.peak_level();
    let xi = slack_xi(p);
    if xi > 0.0 {
        level_set(p, level - 0.5 * xi)
    } else {
        level_set(p, level)
    }
}

fn level_set<K: Ord + Clone>(p: &NormPair<K>, threshold: f64) -> BTreeSet<K> {
    if p.is_zero() {
        return BTreeSet::new();
    }
    p.joint_support()
        .into_iter()
        .filter(|t| p.f.get(t).abs() + p.x.get(t).abs() >= threshold)
        .collect()
}

/// Weights `c`, stationary value `ν` and the resulting norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "K: Ord + Serialize"))]
pub struct WeightSolution<K: Ord> {
    pub active_set: BTreeSet<K>,
    pub nu: f64,
    pub weights: BTreeMap<K, f64>,
    pub norm_value: f64,
    pub sum_c: f64,
    /// Slack parameter in force when the solution came from the fast path.
    pub eta: Option<f64>,
}

impl<K: Ord + Clone> WeightSolution<K> {
    pub fn weight(&self, t: &K) -> f64 {
        self.weights.get(t).copied().unwrap_or(0.0)
    }
}

/// Which solver produced a norm value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Zero,
    /// `(f, x) ∈ U(L)`: near-peak set, `η = ½ξ`.
    FastPath,
    /// Stationary solve over the whole support.
    Support,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "K: Ord + Serialize"))]
pub struct NormEvaluation<K: Ord> {
    pub value: f64,
    pub route: Route,
    pub solution: Option<WeightSolution<K>>,
}

/// Danskin gradient: `∂‖·‖/∂f_t` and `∂‖·‖/∂x_t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "K: Ord + Serialize"))]
pub struct NormGradient<K: Ord> {
    pub df: IndexedVector<K>,
    pub dx: IndexedVector<K>,
}

#[derive(Debug, Clone, Copy)]
struct Term {
    a: f64,
    b: f64,
}

/// The norm evaluator; borrows a kernel for `varpi`/`theta`.
#[derive(Debug, Clone, Copy)]
pub struct SmoothNorm<'k> {
    kernel: &'k KernelFunctions,
}

impl Default for SmoothNorm<'static> {
    fn default() -> Self {
        Self::new(smooth_kernel::shared())
    }
}

impl<'k> SmoothNorm<'k> {
    pub fn new(kernel: &'k KernelFunctions) -> Self {
        Self { kernel }
    }

    pub fn kernel(&self) -> &'k KernelFunctions {
        self.kernel
    }

    /// `F(f, x, c) = exp(-Σ c_t) Σ [c_t |f_t| + theta(c_t) |x_t|]`, weights absent from `c` are 0.
    pub fn objective<K: Ord + Clone>(&self, p: &NormPair<K>, c: &BTreeMap<K, f64>) -> f64 {
        let mut sum_c = 0.0;
        let mut acc = 0.0;
        for (t, &ct) in c {
            if ct == 0.0 {
                continue;
            }
            sum_c += ct;
            acc += ct * p.f.get(t).abs() + self.kernel.theta_unchecked(ct) * p.x.get(t).abs();
        }
        (-sum_c).exp() * acc
    }

    /// `H(f, x, ν)` over the index set `n`; `None` stands for `-∞` (some ratio ≥ 2).
    pub fn h_value<K: Ord + Clone>(&self, p: &NormPair<K>, n: &BTreeSet<K>, nu: f64) -> Option<f64> {
        let terms = terms_on(p, n);
        self.h_eval(&terms, nu).map(|(h, _)| h)
    }

    // Returns (H, ∂H/∂ν).
    fn h_eval(&self, terms: &[Term], nu: f64) -> Option<(f64, f64)> {
        let mut sum = 0.0;
        let mut slope = 1.0;
        for &Term { a, b } in terms {
            if b == 0.0 {
                continue;
            }
            let gap = nu - a;
            if gap <= 0.0 {
                return None;
            }
            let r = b / gap;
            if !(r < 2.0) {
                return None;
            }
            if r <= 1.0 {
                continue;
            }
            let c = varpi_unchecked(r);
            sum += c * a + self.kernel.theta_varpi_unchecked(r) * b;
            slope += varpi_prime_unchecked(r) * nu * r / gap;
        }
        let h = nu - sum;
        if h.is_finite() {
            Some((h, slope))
        } else {
            None
        }
    }

    /// Root of `H(f, x, ·)` over `n`, bracketed by `‖ |f| + ½|x| ‖∞` and `Σ_n (|f_t| + |x_t|) + 1`.
    pub fn solve_nu<K: Ord + Clone>(&self, p: &NormPair<K>, n: &BTreeSet<K>, eta: f64) -> Result<f64> {
        if !(eta > 0.0) {
            return Err(Error::Domain(format!("eta must be positive, got {eta}")));
        }
        let terms = terms_on(p, n);
        let lo = p.peak_level();
        let hi = terms.iter().map(|t| t.a + t.b).sum::<f64>() + 1.0;
        self.find_root(&terms, lo, hi)
    }

    fn find_root(&self, terms: &[Term], mut lo: f64, mut hi: f64) -> Result<f64> {
        let lo_negative = self.h_eval(terms, lo).map_or(true, |(h, _)| h < 0.0);
        let hi_positive = self.h_eval(terms, hi).is_some_and(|(h, _)| h > 0.0);
        if !(lo_negative && hi_positive) {
            return Err(Error::BracketFailure(format!(
                "H does not change sign on [{lo}, {hi}]"
            )));
        }
        // Bisection to a modest width, then safeguarded Newton.
        while hi - lo > 1e-6 * hi {
            let mid = 0.5 * (lo + hi);
            match self.h_eval(terms, mid) {
                Some((h, _)) if h >= 0.0 => hi = mid,
                _ => lo = mid,
            }
        }
        let mut nu = hi;
        for _ in 0..60 {
            let Some((h, slope)) = self.h_eval(terms, nu) else {
                lo = nu;
                nu = 0.5 * (lo + hi);
                continue;
            };
            if h == 0.0 {
                return Ok(nu);
            }
            if h > 0.0 {
                hi = nu;
            } else {
                lo = nu;
            }
            let mut next = nu - h / slope;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let step = (next - nu).abs();
            nu = next;
            if step <= 4.0 * f64::EPSILON * nu || hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
        }
        // H can be very steep when ν - |f_t| is tiny, so judge convergence by
        // the Newton step |H/H'| rather than by |H|.
        if (hi - lo) > NU_REL_TOL * hi
            && self
                .h_eval(terms, nu)
                .map_or(true, |(h, slope)| (h / slope).abs() > NU_REL_TOL * nu)
        {
            return Err(Error::BracketFailure(format!(
                "nu did not converge in [{lo}, {hi}]"
            )));
        }
        Ok(nu)
    }

    /// Weights `c_t = varpi(|x_t| / (ν - |f_t|))` on `n`.
    pub fn optimal_weights<K: Ord + Clone>(
        &self,
        p: &NormPair<K>,
        nu: f64,
        n: &BTreeSet<K>,
    ) -> Result<WeightSolution<K>> {
        let mut weights = BTreeMap::new();
        let mut sum_c = 0.0;
        let mut mass = 0.0;
        for t in n {
            let a = p.f.get(t).abs();
            let b = p.x.get(t).abs();
            let (c, tc) = self.weight_pair(a, b, nu);
            if !(c <= 1.0 + WEIGHT_SLACK) {
                return Err(Error::Consistency(format!(
                    "weight {c} exceeds 1 at nu = {nu}"
                )));
            }
            sum_c += c;
            mass += c * a + tc * b;
            weights.insert(t.clone(), c);
        }
        Ok(WeightSolution {
            active_set: n.clone(),
            nu,
            weights,
            // Equals exp(-S)·ν at the root, but is stationary in the weights,
            // so the rounding in ν - |f_t| only enters at second order.
            norm_value: (-sum_c).exp() * mass,
            sum_c,
            eta: None,
        })
    }

    pub fn smooth_norm<K: Ord + Clone>(&self, p: &NormPair<K>) -> f64 {
        self.evaluate(p).value
    }

    /// Norm value together with the route and weights that produced it.
    pub fn evaluate<K: Ord + Clone>(&self, p: &NormPair<K>) -> NormEvaluation<K> {
        if p.is_zero() {
            return NormEvaluation {
                value: 0.0,
                route: Route::Zero,
                solution: None,
            };
        }
        if membership_u(p) {
            if let Ok(sol) = self.fast_path(p) {
                return NormEvaluation {
                    value: sol.norm_value,
                    route: Route::FastPath,
                    solution: Some(sol),
                };
            }
        }
        let sol = self.support_solution(p);
        NormEvaluation {
            value: sol.norm_value,
            route: Route::Support,
            solution: Some(sol),
        }
    }

    /// Fast path on `U(L)`: near-peak set, `η = ½ξ`.
    pub fn fast_path<K: Ord + Clone>(&self, p: &NormPair<K>) -> Result<WeightSolution<K>> {
        if !membership_u(p) {
            return Err(Error::Precondition("pair is not in U(L)".into()));
        }
        let eta = 0.5 * slack_xi(p);
        let n = near_peak_set(p);
        let nu = self.solve_nu(p, &n, eta)?;
        let mut sol = self.optimal_weights(p, nu, &n)?;
        sol.eta = Some(eta);
        Ok(sol)
    }

    /// Maximizer over the whole joint support; valid for every pair.
    ///
    /// For a fixed total mass the inner problem is a concave allocation, and
    /// `exp(-S)` times its value is log-concave in `S`, so the unique
    /// stationary point of `H` (plus free mass on flat coordinates) is the
    /// global maximum.
    pub fn support_solution<K: Ord + Clone>(&self, p: &NormPair<K>) -> WeightSolution<K> {
        let support = p.joint_support();
        let terms = terms_on(p, &support);
        let lo = terms.iter().map(|t| t.a + 0.5 * t.b).fold(0.0, f64::max);
        if lo == 0.0 {
            return WeightSolution {
                active_set: support,
                nu: 0.0,
                weights: BTreeMap::new(),
                norm_value: 0.0,
                sum_c: 0.0,
                eta: None,
            };
        }
        let curved_top = terms.iter().any(|t| t.b > 0.0 && t.a + 0.5 * t.b == lo);
        let hi = terms.iter().map(|t| t.a + t.b).sum::<f64>() + 1.0;
        let h_at_lo = if curved_top { None } else { self.h_eval(&terms, lo) };

        let (nu, free_mass) = match h_at_lo {
            Some((h, _)) if h >= 0.0 => (lo, h / lo),
            _ => (
                self.find_root(&terms, lo, hi)
                    .expect("H is increasing with a sign change on the support bracket"),
                0.0,
            ),
        };

        let flat_top: Vec<&K> = support
            .iter()
            .filter(|t| p.x.get(t) == 0.0 && p.f.get(t).abs() == lo)
            .collect();
        let mut weights = BTreeMap::new();
        let mut sum_c = 0.0;
        let mut mass = 0.0;
        for t in &support {
            let (a, b) = (p.f.get(t).abs(), p.x.get(t).abs());
            let (c, tc) = self.weight_pair(a, b, nu);
            sum_c += c;
            mass += c * a + tc * b;
            weights.insert(t.clone(), c);
        }
        if free_mass > 0.0 {
            let share = free_mass / flat_top.len() as f64;
            for t in flat_top {
                *weights.get_mut(t).expect("flat top lies in the support") += share;
            }
            sum_c += free_mass;
            mass += free_mass * lo;
        }
        WeightSolution {
            active_set: support,
            nu,
            weights,
            norm_value: (-sum_c).exp() * mass,
            sum_c,
            eta: None,
        }
    }

    // (c, θ(c)) with c = varpi(|x_t| / (ν - |f_t|)).
    fn weight_pair(&self, a: f64, b: f64, nu: f64) -> (f64, f64) {
        if b == 0.0 || nu <= a {
            return (0.0, 0.0);
        }
        let r = b / (nu - a);
        if r <= 1.0 {
            (0.0, 0.0)
        } else if r < 2.0 {
            (varpi_unchecked(r), self.kernel.theta_varpi_unchecked(r))
        } else {
            (f64::INFINITY, f64::INFINITY)
        }
    }

    /// Envelope (Danskin) gradient on `U(L)`.
    pub fn smooth_norm_gradient<K: Ord + Clone>(&self, p: &NormPair<K>) -> Result<NormGradient<K>> {
        let sol = self.fast_path(p)?;
        let scale = (-sol.sum_c).exp();
        let mut df = IndexedVector::new();
        let mut dx = IndexedVector::new();
        for (t, &c) in &sol.weights {
            if c == 0.0 {
                continue;
            }
            df.set(t.clone(), scale * c * p.f.get(t).signum());
            dx.set(
                t.clone(),
                scale * self.kernel.theta_unchecked(c) * p.x.get(t).signum(),
            );
        }
        Ok(NormGradient { df, dx })
    }

    /// Grid search over `{0, 1/res, …, 1}^S` refined by cyclic coordinate ascent.
    pub fn brute_force_norm<K: Ord + Clone>(&self, p: &NormPair<K>, resolution: usize) -> Result<f64> {
        self.brute_force_norm_in_box(p, resolution, 1.0)
    }

    /// As [`Self::brute_force_norm`], over `[0, upper]^S`.
    pub fn brute_force_norm_in_box<K: Ord + Clone>(
        &self,
        p: &NormPair<K>,
        resolution: usize,
        upper: f64,
    ) -> Result<f64> {
        let support = p.joint_support();
        let n = support.len();
        if n > BRUTE_FORCE_MAX_SUPPORT {
            return Err(Error::Size(format!(
                "support of size {n} exceeds the brute-force limit {BRUTE_FORCE_MAX_SUPPORT}"
            )));
        }
        if resolution == 0 || !(upper > 0.0) {
            return Err(Error::Parameter(
                "resolution and box size must be positive".into(),
            ));
        }
        if n == 0 {
            return Ok(0.0);
        }
        let steps = resolution + 1;
        if (steps as f64).powi(n as i32) > BRUTE_FORCE_MAX_GRID {
            return Err(Error::Size(format!(
                "grid of {steps}^{n} points is too large"
            )));
        }
        let terms = terms_on(p, &support);
        let grid: Vec<f64> = (0..steps)
            .map(|k| upper * k as f64 / resolution as f64)
            .collect();
        let theta_grid: Vec<f64> = grid.iter().map(|&c| self.kernel.theta_unchecked(c)).collect();

        let mut idx = vec![0usize; n];
        let mut best = f64::NEG_INFINITY;
        let mut best_idx = idx.clone();
        loop {
            let (mut s, mut acc) = (0.0, 0.0);
            for (term, &k) in terms.iter().zip(&idx) {
                s += grid[k];
                acc += grid[k] * term.a + theta_grid[k] * term.b;
            }
            let value = (-s).exp() * acc;
            if value > best {
                best = value;
                best_idx.clone_from(&idx);
            }
            // Odometer increment.
            let mut pos = 0;
            loop {
                if pos == n {
                    break;
                }
                idx[pos] += 1;
                if idx[pos] < steps {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == n {
                break;
            }
        }

        let mut c: Vec<f64> = best_idx.iter().map(|&k| grid[k]).collect();
        let f_at = |c: &[f64]| -> f64 {
            let (mut s, mut acc) = (0.0, 0.0);
            for (term, &ci) in terms.iter().zip(c) {
                s += ci;
                acc += ci * term.a + self.kernel.theta_unchecked(ci) * term.b;
            }
            (-s).exp() * acc
        };
        let mut current = f_at(&c);
        for _ in 0..10_000 {
            let before = current;
            for i in 0..n {
                let mut trial = c.clone();
                let line = |ci: f64| {
                    trial[i] = ci;
                    f_at(&trial)
                };
                let (arg, val) = golden_section_max(line, 0.0, upper, 1e-12);
                if val > current {
                    c[i] = arg;
                    current = val;
                }
            }
            if current - before < 1e-12 {
                break;
            }
        }
        Ok(current.max(best))
    }

    /// Near-peak set and the radius `ξ/7` of a neighbourhood on which the norm
    /// only sees coordinates in that set.
    pub fn local_patch<K: Ord + Clone>(&self, p0: &NormPair<K>) -> Result<(BTreeSet<K>, f64)> {
        if !membership_u(p0) {
            return Err(Error::Precondition("local_patch needs a pair in U(L)".into()));
        }
        Ok((near_peak_set(p0), slack_xi(p0) / 7.0))
    }
}

fn terms_on<K: Ord + Clone>(p: &NormPair<K>, n: &BTreeSet<K>) -> Vec<Term> {
    n.iter()
        .map(|t| Term {
            a: p.f.get(t).abs(),
            b: p.x.get(t).abs(),
        })
        .collect()
}

/// Golden-section search for the maximum of a unimodal function on `[lo, hi]`.
fn golden_section_max(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    // Endpoints matter when the maximum sits on the boundary.
    let candidates = [(lo, f(lo)), (hi, f(hi)), (x1, f1), (x2, f2)];
    candidates
        .into_iter()
        .fold((lo, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indexed::iv;

    fn pair(f: &[(&str, f64)], x: &[(&str, f64)]) -> NormPair {
        NormPair::new(iv(f), iv(x))
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    const E_INV: f64 = 0.367_879_441_171_442_33;

    #[test]
    fn membership_examples() {
        assert!(membership_u(&pair(&[("a", 1.0)], &[("a", 0.5)])));
        assert!(!membership_u(&pair(&[("a", 1.0)], &[])));
        assert!(!membership_u(&pair(&[], &[])));
    }

    #[test]
    fn slack_examples() {
        assert_eq!(slack_xi(&pair(&[("a", 1.0)], &[("a", 0.5)])), 0.25);
        assert_eq!(slack_xi(&pair(&[("a", 1.0)], &[])), 0.0);
        let p = pair(&[("a", 1.0), ("b", -0.3)], &[("a", 0.5), ("c", 0.2)]);
        for lambda in [0.5, 2.0, 8.0] {
            let scaled = slack_xi(&p.scale(lambda));
            assert!((scaled - lambda * slack_xi(&p)).abs() < 1e-15);
        }
    }

    #[test]
    fn peak_and_near_peak_examples() {
        let p = pair(&[("a", 1.0), ("b", 0.9)], &[("a", 0.5)]);
        assert_eq!(peak_set(&p), set(&["a"]));
        assert_eq!(near_peak_set(&p), set(&["a"]));
        let q = pair(&[("a", 1.0), ("b", 1.1)], &[("a", 0.5)]);
        // ξ = 1.35 - 1.1 = 0.25 would need b ∈ U; here ‖f‖ = 1.1 so ξ = 0.25 and threshold 1.225.
        assert_eq!(near_peak_set(&q), set(&["a"]));
        assert_eq!(peak_set(&pair(&[("a", 1.0)], &[("a", 0.5)])), set(&["a"]));
        let outside = pair(&[("a", 1.0), ("b", 1.0)], &[]);
        assert_eq!(near_peak_set(&outside), peak_set(&outside));
    }

    #[test]
    fn solve_nu_example_matches_reference() {
        // f = {a:1}, x = {a:1}: 40-digit reference ν = 1.66838579630693715842.
        let p = pair(&[("a", 1.0)], &[("a", 1.0)]);
        let sn = SmoothNorm::default();
        let n = near_peak_set(&p);
        let nu = sn.solve_nu(&p, &n, 0.5 * slack_xi(&p)).unwrap();
        assert!(nu > 1.5 && nu <= 2.0);
        assert!((nu - 1.668_385_796_306_937_2).abs() < 1e-12, "nu={nu}");
        let sol = sn.optimal_weights(&p, nu, &n).unwrap();
        let c = sol.weight(&"a".to_string());
        let stationarity = 1.0 + sn.kernel().theta_prime(c).unwrap() * 1.0;
        assert!((stationarity - nu).abs() < 1e-9);
        let brute = sn.brute_force_norm(&p, 1000).unwrap();
        assert!((sol.norm_value - brute).abs() < 1e-6);
        assert!((sol.norm_value - 0.632_706_671_340_093_4).abs() < 1e-12);
    }

    #[test]
    fn h_is_steeper_than_identity() {
        let p = pair(&[("a", 1.0), ("b", 0.7)], &[("a", 0.9), ("b", 0.6)]);
        let sn = SmoothNorm::default();
        let n = p.joint_support();
        let lo = p.peak_level();
        let hi: f64 = 1.0 + 0.9 + 0.7 + 0.6 + 1.0;
        let mut prev: Option<(f64, f64)> = None;
        for i in 1..=200 {
            let nu = lo + (hi - lo) * i as f64 / 200.0;
            if let Some(h) = sn.h_value(&p, &n, nu) {
                if let Some((nu0, h0)) = prev {
                    assert!(h - h0 >= (nu - nu0) * (1.0 - 1e-12));
                }
                prev = Some((nu, h));
            }
        }
        // Every ratio is ≤ 1 at the upper end, so H is the identity there.
        let top = 1.0 + 0.9 + 0.7 + 0.6;
        assert_eq!(sn.h_value(&p, &n, top), Some(top));
    }

    #[test]
    fn solve_nu_errors() {
        let sn = SmoothNorm::default();
        let p = pair(&[("a", 1.0)], &[("a", 0.5)]);
        assert!(matches!(
            sn.solve_nu(&p, &set(&["a"]), 0.0),
            Err(Error::Domain(_))
        ));
        // A near-peak set that misses the witness cannot bracket the root.
        let q = pair(&[("a", 1.0), ("b", 0.2)], &[("a", 0.8)]);
        assert!(matches!(
            sn.solve_nu(&q, &set(&["b"]), 0.1),
            Err(Error::BracketFailure(_))
        ));
    }

    #[test]
    fn optimal_weights_rejects_a_wrong_nu() {
        let sn = SmoothNorm::default();
        let p = pair(&[("a", 1.0)], &[("a", 1.0)]);
        // ν just above the lower bracket drives the ratio towards 2 and c far above 1.
        let err = sn.optimal_weights(&p, 1.5001, &set(&["a"])).unwrap_err();
        assert!(matches!(err, Error::Consistency(_)));
    }

    #[test]
    fn weights_vanish_below_eta() {
        let sn = SmoothNorm::default();
        let p = pair(
            &[("a", 1.0), ("b", 0.95), ("c", 0.01)],
            &[("a", 0.8), ("b", 0.01), ("c", 0.3)],
        );
        let sol = sn.fast_path(&p).unwrap();
        let eta = sol.eta.unwrap();
        for (t, &c) in &sol.weights {
            if p.f.get(t).abs() <= eta || p.x.get(t).abs() <= eta {
                assert_eq!(c, 0.0, "t={t}");
            }
            assert!((0.0..=1.0).contains(&c));
        }
        assert!((sol.norm_value - (-sol.sum_c).exp() * sol.nu).abs() < 1e-12 * sol.norm_value);
    }

    #[test]
    fn norm_examples() {
        let sn = SmoothNorm::default();
        assert_eq!(sn.smooth_norm(&pair(&[], &[])), 0.0);
        let v = sn.smooth_norm(&pair(&[("a", 1.0)], &[]));
        assert!((v - E_INV).abs() < 1e-12, "v={v}");
        let p = pair(&[("a", 1.0), ("b", 0.2)], &[("a", 0.8), ("b", 0.1)]);
        assert!(membership_u(&p));
        let fast = sn.smooth_norm(&p);
        let brute = sn.brute_force_norm(&p, 100).unwrap();
        assert!((fast - brute).abs() <= 1e-4 * fast);
        for lambda in [-3.0, -0.5, 0.25, 7.0] {
            let scaled = sn.smooth_norm(&p.scale(lambda));
            assert!((scaled - lambda.abs() * fast).abs() <= 1e-9 * scaled);
        }
    }

    #[test]
    fn flat_top_free_mass() {
        let sn = SmoothNorm::default();
        // Ties between flat coordinates share the free mass; the value is still e⁻¹‖f‖.
        let p = pair(&[("a", 2.0), ("b", -2.0), ("c", 0.5)], &[]);
        let ev = sn.evaluate(&p);
        assert_eq!(ev.route, Route::Support);
        assert!((ev.value - 2.0 * E_INV).abs() < 1e-12);
        let sol = ev.solution.unwrap();
        assert!((sol.sum_c - 1.0).abs() < 1e-12);
        // A small curved coordinate does not take over the top.
        let q = pair(&[("a", 1.0)], &[("b", 0.3)]);
        let brute = sn.brute_force_norm(&q, 200).unwrap();
        assert!((sn.smooth_norm(&q) - brute).abs() < 1e-7);
    }

    #[test]
    fn gradient_examples() {
        let sn = SmoothNorm::default();
        let p = pair(&[("a", 1.0), ("b", 0.9)], &[("a", 0.5), ("b", 0.05)]);
        let g = sn.smooth_norm_gradient(&p).unwrap();
        let sol = sn.fast_path(&p).unwrap();
        for t in p.joint_support() {
            if sol.weight(&t) == 0.0 {
                assert_eq!(g.df.get(&t), 0.0);
                assert_eq!(g.dx.get(&t), 0.0);
            }
        }
        let flipped = NormPair::new(p.f.scale(-1.0), p.x.clone());
        let gf = sn.smooth_norm_gradient(&flipped).unwrap();
        assert_eq!(gf.df, g.df.scale(-1.0));
        assert_eq!(gf.dx, g.dx);
        assert!(matches!(
            sn.smooth_norm_gradient(&pair(&[("a", 1.0)], &[])),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn brute_force_examples_and_guards() {
        let sn = SmoothNorm::default();
        assert_eq!(sn.brute_force_norm(&pair(&[], &[]), 10).unwrap(), 0.0);
        let v = sn.brute_force_norm(&pair(&[("a", 1.0)], &[]), 1000).unwrap();
        assert!((v - E_INV).abs() < 1e-6);
        let big = pair(
            &[("a", 1.0), ("b", 1.0), ("c", 1.0), ("d", 1.0), ("e", 1.0), ("f", 1.0), ("g", 1.0)],
            &[],
        );
        assert!(matches!(sn.brute_force_norm(&big, 2), Err(Error::Size(_))));
    }

    #[test]
    fn local_patch_example() {
        let sn = SmoothNorm::default();
        let p = pair(&[("a", 1.0), ("b", 0.9)], &[("a", 0.5)]);
        let (n, radius) = sn.local_patch(&p).unwrap();
        assert_eq!(n, set(&["a"]));
        assert!((radius - 0.25 / 7.0).abs() < 1e-16);
        let base = sn.smooth_norm(&p);
        for delta in [0.01, -0.01] {
            let mut q = p.clone();
            q.f.set("b".into(), 0.9 + delta);
            assert!((sn.smooth_norm(&q) - base).abs() <= 1e-10);
        }
        assert!(matches!(
            sn.local_patch(&pair(&[("a", 1.0)], &[])),
            Err(Error::Precondition(_))
        ));
    }
}
