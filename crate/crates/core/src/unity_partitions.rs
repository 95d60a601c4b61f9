//! Coordinates, reconstruction operators and the basic-set locator on
//! `C([0, Ω])` built from ordinal truncations.
//!
//! Elements of `C([0, Ω])` are represented as finitely many point values plus
//! finitely many steps (see [`StepFunction`]). A finitely supported function is
//! continuous exactly when it vanishes at every limit ordinal, which the
//! operations here require of their inputs.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bump_toolkit::{plateau_from_bump, standard_bump, ScalarField};
use crate::error::{Error, Result};
use crate::ordinal::Ordinal;
use crate::space_operators::OrdinalFunction;

/// A point `(α, n)` of `Ω × ℕ`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GammaIndex {
    pub alpha: Ordinal,
    pub n: u32,
}

impl GammaIndex {
    pub fn new(alpha: Ordinal, n: u32) -> Self {
        Self { alpha, n }
    }
}

/// A continuous function on `[0, Ω]`: finitely many point values plus finitely
/// many steps, `x(β) = e(β) + Σ_{γ < β} v_γ`.
///
/// Each step `1_{(γ, Ω]}` is continuous since `(γ, Ω] = [γ+1, Ω]` is clopen.
/// Truncations stay in this class and are computed exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    #[serde(with = "crate::ordinal::as_pairs")]
    entries: BTreeMap<Ordinal, f64>,
    /// `γ ↦ v_γ`: `v_γ` is added on `(γ, Ω]`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty", with = "crate::ordinal::as_pairs")]
    steps: BTreeMap<Ordinal, f64>,
    bound: Ordinal,
}

impl StepFunction {
    pub fn new(
        entries: impl IntoIterator<Item = (Ordinal, f64)>,
        steps: impl IntoIterator<Item = (Ordinal, f64)>,
        bound: Ordinal,
    ) -> Result<Self> {
        let mut out = Self {
            entries: BTreeMap::new(),
            steps: BTreeMap::new(),
            bound,
        };
        for (map, items) in [(&mut out.entries, entries.into_iter().collect::<Vec<_>>()), (&mut out.steps, steps.into_iter().collect())] {
            for (a, v) in items {
                if a >= out.bound {
                    return Err(Error::Parameter(format!("index {a} is not below {}", out.bound)));
                }
                if !v.is_finite() {
                    return Err(Error::Domain(format!("value at {a} is not finite")));
                }
                *map.entry(a).or_insert(0.0) += v;
            }
            map.retain(|_, v| *v != 0.0);
        }
        Ok(out)
    }

    pub fn bound(&self) -> &Ordinal {
        &self.bound
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Ordinal, f64)> {
        self.entries.iter().map(|(a, v)| (a, *v))
    }

    pub fn steps(&self) -> impl Iterator<Item = (&Ordinal, f64)> {
        self.steps.iter().map(|(a, v)| (a, *v))
    }

    /// `x(β)` for `β ≤ Ω`.
    pub fn value_at(&self, beta: &Ordinal) -> f64 {
        let level: f64 = self.steps.range(..beta.clone()).map(|(_, v)| v).sum();
        level + self.entries.get(beta).copied().unwrap_or(0.0)
    }

    /// `self + t·other`.
    pub fn add_scaled(&self, other: &StepFunction, t: f64) -> StepFunction {
        let scaled = |m: &BTreeMap<Ordinal, f64>| m.iter().map(|(a, v)| (a.clone(), t * v)).collect::<Vec<_>>();
        let mut out = self.clone();
        for (map, extra) in [(&mut out.entries, scaled(&other.entries)), (&mut out.steps, scaled(&other.steps))] {
            for (a, v) in extra {
                *map.entry(a).or_insert(0.0) += v;
            }
            map.retain(|_, v| *v != 0.0);
        }
        out
    }

    /// Whether every point value sits at a successor (or 0); limits carry no
    /// isolated mass in `C([0, Ω])`.
    pub fn is_continuous(&self) -> bool {
        self.entries.keys().all(|a| !a.is_limit())
    }

    // Points realizing every value of `self - other`: the point values, the
    // first few points past each step, and Ω.
    fn probe_points(&self, other: &StepFunction) -> BTreeSet<Ordinal> {
        let mut pts: BTreeSet<Ordinal> = self.entries.keys().chain(other.entries.keys()).cloned().collect();
        let walk = pts.len() + 1;
        pts.insert(Ordinal::zero());
        for g in self.steps.keys().chain(other.steps.keys()) {
            let mut b = g.successor();
            for _ in 0..=walk {
                if b > self.bound {
                    break;
                }
                pts.insert(b.clone());
                b = b.successor();
            }
        }
        pts.insert(self.bound.clone());
        pts
    }

    /// `sup_{β ≤ Ω} |x(β) - y(β)|`.
    pub fn sup_distance(&self, other: &StepFunction) -> f64 {
        self.probe_points(other)
            .iter()
            .map(|b| (self.value_at(b) - other.value_at(b)).abs())
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_distance(&StepFunction::from(&OrdinalFunction::new(self.bound.clone())))
    }
}

impl From<&OrdinalFunction> for StepFunction {
    fn from(f: &OrdinalFunction) -> Self {
        Self {
            entries: f.iter().map(|(a, v)| (a.clone(), v)).collect(),
            steps: BTreeMap::new(),
            bound: f.domain_bound().clone(),
        }
    }
}

/// Requires the finitely supported `x` to vanish at limit ordinals.
pub fn require_continuous(x: &OrdinalFunction) -> Result<()> {
    match x.iter().find(|(a, _)| a.is_limit()) {
        Some((a, v)) => Err(Error::Precondition(format!(
            "x({a}) = {v} at a limit ordinal; finitely supported elements of C([0, Ω]) vanish there"
        ))),
        None => Ok(()),
    }
}

/// A family `R_γ` (γ ≤ Ω) with `R_Ω = I` and `γ ↦ R_γ x` continuous.
pub trait Resolution {
    fn bound(&self) -> &Ordinal;
    fn apply(&self, gamma: &Ordinal, x: &StepFunction) -> StepFunction;
    /// A finite superset of `{α < Ω : R_{α+1} x ≠ R_α x}`.
    fn increment_points(&self, x: &StepFunction) -> BTreeSet<Ordinal>;
    /// `‖R_{α+1} x - R_α x‖`.
    fn increment(&self, alpha: &Ordinal, x: &StepFunction) -> f64 {
        self.apply(&alpha.successor(), x)
            .sup_distance(&self.apply(alpha, x))
    }
    /// A finite set containing the largest `β < Ω` with `‖x - R_β x‖ ≥ ε`, for every `ε`.
    fn critical_points(&self, x: &StepFunction) -> BTreeSet<Ordinal>;
}

/// `(R_γ f)_β = f_β` for `β ≤ γ` and `f_γ` beyond.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Truncation {
    bound: Ordinal,
}

impl Truncation {
    pub fn new(bound: Ordinal) -> Self {
        Self { bound }
    }
}

/// `R_γ f` on `[0, Ω]`.
pub fn truncation_r(gamma: &Ordinal, f: &StepFunction) -> StepFunction {
    if gamma >= &f.bound {
        return f.clone();
    }
    // Steps before γ already give f(γ) - e(γ) beyond γ; a step of e(γ) at γ
    // freezes the rest. Summing in that order reproduces f(γ) bit for bit.
    let mut steps: BTreeMap<Ordinal, f64> = f
        .steps
        .range(..gamma.clone())
        .map(|(a, v)| (a.clone(), *v))
        .collect();
    if let Some(&e) = f.entries.get(gamma) {
        steps.insert(gamma.clone(), e);
    }
    StepFunction {
        entries: f
            .entries
            .range(..=gamma.clone())
            .map(|(a, v)| (a.clone(), *v))
            .collect(),
        steps,
        bound: f.bound.clone(),
    }
}

impl Resolution for Truncation {
    fn bound(&self) -> &Ordinal {
        &self.bound
    }

    fn apply(&self, gamma: &Ordinal, x: &StepFunction) -> StepFunction {
        truncation_r(gamma, x)
    }

    fn increment_points(&self, x: &StepFunction) -> BTreeSet<Ordinal> {
        let mut pts: BTreeSet<Ordinal> = x.steps.keys().cloned().collect();
        for a in x.entries.keys() {
            pts.insert(a.clone());
            pts.extend(a.predecessor());
        }
        pts.retain(|a| a < &self.bound);
        pts
    }

    fn increment(&self, alpha: &Ordinal, x: &StepFunction) -> f64 {
        // R_{α+1} x and R_α x differ only on (α, Ω], by x(α+1) - x(α).
        let next = alpha.successor();
        if next > self.bound {
            return 0.0;
        }
        (x.value_at(&next) - x.value_at(alpha)).abs()
    }

    fn critical_points(&self, x: &StepFunction) -> BTreeSet<Ordinal> {
        // Between consecutive steps x is constant off its point values, and
        // ‖x - R_β x‖ only changes when β passes a point value or a step. So
        // the largest bad β is a point value, a step, or the first point
        // below a run of point values ending at one of those.
        let mut pts = BTreeSet::new();
        for a in x.entries.keys().chain(x.steps.keys()) {
            pts.insert(a.clone());
            let mut b = a.clone();
            while let Some(p) = b.predecessor() {
                pts.insert(p.clone());
                if !x.entries.contains_key(&p) {
                    break;
                }
                b = p;
            }
        }
        pts.insert(Ordinal::zero());
        pts.retain(|a| a < &self.bound);
        pts
    }
}

/// A radial plateau on `X`: `φ(z) = ψ(R‖z‖)` with `ψ` a one-dimensional plateau,
/// so `φ = 0` on `‖z‖ ≤ 1/R` and `φ = 1` on `‖z‖ ≥ 1`.
#[derive(Debug, Clone)]
pub struct CoordinatePlateau {
    psi: ScalarField,
    r: f64,
}

impl CoordinatePlateau {
    pub fn new(psi: ScalarField, r: f64) -> Result<Self> {
        if psi.dim() != 1 || !(r > 1.0) {
            return Err(Error::Parameter(
                "a coordinate plateau needs a one-dimensional psi and R > 1".into(),
            ));
        }
        Ok(Self { psi, r })
    }

    /// Built from the standard bump with `δ = ½`, `M = 1`, hence `R = 2`.
    pub fn standard() -> Self {
        let psi = plateau_from_bump(&standard_bump(1), 0.5, 1.0)
            .expect("the standard bump meets its plateau bounds");
        Self { psi, r: 2.0 }
    }

    /// Radius of the ball on which `φ` vanishes.
    pub fn eta(&self) -> f64 {
        1.0 / self.r
    }

    /// `φ` at a point of norm `t`.
    pub fn at_norm(&self, t: f64) -> f64 {
        self.psi.evaluate(&[self.r * t])
    }
}

/// One `α`-column of `Tx`: explicit entries below `saturated_from`, `2^{-n}` from there on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub increment: f64,
    pub entries: Vec<(u32, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturated_from: Option<u32>,
}

impl Column {
    fn get(&self, n: u32) -> f64 {
        match self.saturated_from {
            Some(s) if n >= s => 0.5f64.powi(n as i32),
            _ => self
                .entries
                .iter()
                .find(|(k, _)| *k == n)
                .map_or(0.0, |(_, v)| *v),
        }
    }

    // Indices with |value| ≥ threshold (> when `strict`).
    fn indices_at_least(&self, threshold: f64, strict: bool) -> Vec<u32> {
        let keep = |v: f64| if strict { v.abs() > threshold } else { v.abs() >= threshold };
        let mut out: Vec<u32> = self
            .entries
            .iter()
            .filter(|(_, v)| keep(*v))
            .map(|(n, _)| *n)
            .collect();
        if let Some(s) = self.saturated_from {
            let mut n = s;
            while keep(0.5f64.powi(n as i32)) {
                out.push(n);
                n += 1;
            }
        }
        out.sort_unstable();
        out
    }

    // max |value| at n not in `skip`.
    fn sup_excluding(&self, skip: &BTreeSet<u32>) -> f64 {
        let mut best = self
            .entries
            .iter()
            .filter(|(n, _)| !skip.contains(n))
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        if let Some(s) = self.saturated_from {
            let first_free = (s..).find(|n| !skip.contains(n)).expect("skip is finite");
            best = best.max(0.5f64.powi(first_free as i32));
        }
        best
    }
}

/// `y ∈ c₀(Ω × ℕ)` as finitely many columns.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CoordinateImage {
    #[serde(with = "crate::ordinal::as_pairs")]
    pub columns: BTreeMap<Ordinal, Column>,
}

impl CoordinateImage {
    /// A finitely supported `y`.
    pub fn from_finite(values: impl IntoIterator<Item = (GammaIndex, f64)>) -> Self {
        let mut columns: BTreeMap<Ordinal, Column> = BTreeMap::new();
        for (g, v) in values {
            if v == 0.0 {
                continue;
            }
            columns
                .entry(g.alpha)
                .or_insert_with(|| Column {
                    increment: 0.0,
                    entries: Vec::new(),
                    saturated_from: None,
                })
                .entries
                .push((g.n, v));
        }
        Self { columns }
    }

    pub fn get(&self, g: &GammaIndex) -> f64 {
        self.columns.get(&g.alpha).map_or(0.0, |c| c.get(g.n))
    }

    /// `{γ : |y(γ)| ≥ δ}`; finite for `δ > 0`.
    pub fn entries_at_least(&self, delta: f64) -> BTreeSet<GammaIndex> {
        self.collect(delta, false)
    }

    /// `{γ : |y(γ)| > ε}`.
    pub fn entries_above(&self, eps: f64) -> BTreeSet<GammaIndex> {
        self.collect(eps, true)
    }

    fn collect(&self, threshold: f64, strict: bool) -> BTreeSet<GammaIndex> {
        assert!(threshold > 0.0, "threshold must be positive");
        self.columns
            .iter()
            .flat_map(|(a, c)| {
                c.indices_at_least(threshold, strict)
                    .into_iter()
                    .map(move |n| GammaIndex::new(a.clone(), n))
            })
            .collect()
    }

    /// `sup_{γ ∉ F} |y(γ)|`.
    pub fn sup_off(&self, f: &BTreeSet<GammaIndex>) -> f64 {
        self.columns
            .iter()
            .map(|(a, c)| {
                let skip: BTreeSet<u32> = f.iter().filter(|g| &g.alpha == a).map(|g| g.n).collect();
                c.sup_excluding(&skip)
            })
            .fold(0.0, f64::max)
    }

    /// `min_{γ ∈ F} |y(γ)|`, `+∞` for empty `F`.
    pub fn min_on(&self, f: &BTreeSet<GammaIndex>) -> f64 {
        f.iter().map(|g| self.get(g).abs()).fold(f64::INFINITY, f64::min)
    }
}

/// `(Tx)(α, n) = 2^{-n} φ(2^n (R_{α+1} x - R_α x))`, column by column.
pub fn coordinate_image<R: Resolution>(
    x: &StepFunction,
    res: &R,
    phi: &CoordinatePlateau,
) -> CoordinateImage {
    let mut columns = BTreeMap::new();
    for alpha in res.increment_points(x) {
        let d = res.increment(&alpha, x);
        if d == 0.0 {
            continue;
        }
        let mut sat = 0u32;
        while 2f64.powi(sat as i32) * d < 1.0 {
            sat += 1;
        }
        let entries = (0..sat)
            .filter_map(|n| {
                let scale = 2f64.powi(n as i32);
                let v = phi.at_norm(scale * d) / scale;
                (v != 0.0).then_some((n, v))
            })
            .collect();
        columns.insert(
            alpha,
            Column {
                increment: d,
                entries,
                saturated_from: Some(sat),
            },
        );
    }
    CoordinateImage { columns }
}

/// Checks the `c₀` rectangle bound: entries above `ε` lie in `H × {0, …, m-1}`,
/// with `2^{-m} < ε` and `H` the indices whose increment exceeds `2^{-m} η`.
pub fn c0_rectangle_holds(image: &CoordinateImage, eps: f64, eta: f64) -> bool {
    let mut m = 0u32;
    while 0.5f64.powi(m as i32) >= eps {
        m += 1;
    }
    let cut = 0.5f64.powi(m as i32) * eta;
    image.entries_above(eps).iter().all(|g| {
        g.n < m
            && image
                .columns
                .get(&g.alpha)
                .is_some_and(|c| c.increment > cut)
    })
}

/// `y ∈ W_{F,q,r}`; the empty `F` gives all of `c₀(Γ)`.
pub fn covering_membership(
    y: &CoordinateImage,
    f: &BTreeSet<GammaIndex>,
    q: f64,
    r: f64,
) -> Result<bool> {
    if !(q > 0.0 && q < r) {
        return Err(Error::Parameter(format!("need 0 < q < r, got q = {q}, r = {r}")));
    }
    if f.is_empty() {
        return Ok(true);
    }
    Ok(y.min_on(f) > r && y.sup_off(f) < q)
}

/// The `γ` with `R_F = R_γ`: 0 for empty `F`, otherwise `α(F) + 1`.
pub fn reconstruction_index(f: &BTreeSet<GammaIndex>) -> Ordinal {
    match f.iter().map(|g| &g.alpha).max() {
        None => Ordinal::zero(),
        Some(a) => a.successor(),
    }
}

/// `R_F x`.
pub fn reconstruction_rf<R: Resolution>(
    f: &BTreeSet<GammaIndex>,
    res: &R,
    x: &StepFunction,
) -> StepFunction {
    let g = reconstruction_index(f);
    if &g >= res.bound() {
        x.clone()
    } else {
        res.apply(&g, x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Approximation {
    pub delta: f64,
    pub f: BTreeSet<GammaIndex>,
    /// The largest `β` with `‖x - R_β x‖ ≥ ε`, if any.
    pub bad_beta: Option<Ordinal>,
    /// `(γ, n)` with `(Tx)(γ, n) = δ`.
    pub pivot: Option<GammaIndex>,
    pub residual: f64,
}

/// Finds `δ` such that `F = {γ : |(Tx)(γ)| ≥ δ}` gives `‖x - R_F x‖ < ε`.
pub fn approximation_check<R: Resolution>(
    x: &StepFunction,
    eps: f64,
    res: &R,
    phi: &CoordinatePlateau,
) -> Result<Approximation> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let image = coordinate_image(x, res, phi);
    let bad_beta = res
        .critical_points(x)
        .into_iter()
        .filter(|b| x.sup_distance(&res.apply(b, x)) >= eps)
        .max();

    let (delta, pivot) = match &bad_beta {
        None => (1.0, None),
        Some(beta) => {
            let (gamma, d) = res
                .increment_points(x)
                .into_iter()
                // β itself qualifies: ‖x - R_β x‖ ≥ ε > ‖x - R_{β+1} x‖.
                .filter(|g| g >= beta)
                .map(|g| {
                    let d = res.increment(&g, x);
                    (g, d)
                })
                .find(|(_, d)| *d > 0.0)
                .ok_or_else(|| {
                    Error::Consistency(format!("no positive increment from {beta} on"))
                })?;
            let mut n = 0u32;
            while 2f64.powi(n as i32) * d < 1.0 {
                n += 1;
            }
            (0.5f64.powi(n as i32), Some(GammaIndex::new(gamma, n)))
        }
    };
    let f = image.entries_at_least(delta);
    if let Some(p) = &pivot {
        if image.get(p) != delta {
            return Err(Error::Consistency(format!(
                "(Tx)({}, {}) = {} differs from delta = {delta}",
                p.alpha,
                p.n,
                image.get(p)
            )));
        }
    }
    let residual = x.sup_distance(&reconstruction_rf(&f, res, x));
    if !(residual < eps) {
        return Err(Error::Consistency(format!(
            "‖x - R_F x‖ = {residual} is not below eps = {eps}"
        )));
    }
    Ok(Approximation {
        delta,
        f,
        bad_beta,
        pivot,
        residual,
    })
}

/// The data `(m, F, q, r, V)` of one basic set containing `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasicSetDescriptor {
    pub eps: f64,
    /// `U_m` is the open ball of radius `3^{-m}`.
    pub m: u32,
    pub f: BTreeSet<GammaIndex>,
    pub delta: f64,
    pub q: f64,
    pub r: f64,
    pub v_center: StepFunction,
    pub v_radius: f64,
}

impl BasicSetDescriptor {
    pub fn inner_radius(&self) -> f64 {
        3f64.powi(-(self.m as i32))
    }

    /// Which of the three membership clauses hold at `x`.
    pub fn clauses<R: Resolution>(
        &self,
        x: &StepFunction,
        res: &R,
        phi: &CoordinatePlateau,
    ) -> Result<[bool; 3]> {
        let image = coordinate_image(x, res, phi);
        let in_w = covering_membership(&image, &self.f, self.q, self.r)?;
        let rx = reconstruction_rf(&self.f, res, x);
        let in_v = rx.sup_distance(&self.v_center) < self.v_radius;
        let in_u = x.sup_distance(&rx) < self.inner_radius();
        Ok([in_w, in_v, in_u])
    }

    pub fn contains<R: Resolution>(
        &self,
        x: &StepFunction,
        res: &R,
        phi: &CoordinatePlateau,
    ) -> Result<bool> {
        Ok(self.clauses(x, res, phi)?.iter().all(|&c| c))
    }
}

/// Largest dyadic `k / 2^j` strictly below `v`, trying `j = 16, 17, …` until it exceeds `floor`.
fn dyadic_between(floor: f64, v: f64) -> Option<f64> {
    for j in 16..=60 {
        let den = 2f64.powi(j);
        let k = (v * den).ceil() - 1.0;
        let d = k / den;
        if d > floor && d < v {
            return Some(d);
        }
    }
    None
}

/// Locates a basic set of the base around `x` whose members lie within `ε` of `x`.
pub fn locate_basic_set<R: Resolution>(
    x: &StepFunction,
    eps: f64,
    res: &R,
    phi: &CoordinatePlateau,
) -> Result<BasicSetDescriptor> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let mut m = 1u32;
    while 3f64.powi(-(m as i32)) > eps / 3.0 {
        m += 1;
    }
    let inner = 3f64.powi(-(m as i32));
    let approx = approximation_check(x, inner, res, phi)?;
    let image = coordinate_image(x, res, phi);
    let off = image.sup_off(&approx.f);
    let r = dyadic_between(off, approx.delta).ok_or_else(|| {
        Error::Consistency(format!("no rational between {off} and {}", approx.delta))
    })?;
    let mut q = 0.5 * r;
    if q <= off {
        q = dyadic_between(off, r).ok_or_else(|| {
            Error::Consistency(format!("no rational between {off} and {r}"))
        })?;
    }
    Ok(BasicSetDescriptor {
        eps,
        m,
        f: approx.f.clone(),
        delta: approx.delta,
        q,
        r,
        v_center: reconstruction_rf(&approx.f, res, x),
        v_radius: eps / 3.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationReport {
    pub accepted: usize,
    pub attempts: usize,
    pub violations: usize,
    pub max_distance: f64,
    pub passed: bool,
}

const MAX_ATTEMPTS_PER_SAMPLE: usize = 2000;
const BOUNDARY_BISECTIONS: usize = 20;

/// A random successor ordinal below `bound`; half the time a few steps past a
/// point of `near`.
fn random_point(rng: &mut ChaCha8Rng, bound: &Ordinal, near: &[Ordinal]) -> Ordinal {
    if !near.is_empty() && rng.gen_bool(0.5) {
        let mut b = near[rng.gen_range(0..near.len())].clone();
        for _ in 0..rng.gen_range(1..=3) {
            b = b.successor();
        }
        if &b < bound {
            return b;
        }
    }
    let degree = bound.degree().unwrap_or(0);
    loop {
        let mut cnf = Vec::new();
        for e in (1..=degree).rev() {
            if rng.gen_bool(0.5) {
                cnf.push((e, rng.gen_range(1..=2)));
            }
        }
        let mut o = Ordinal::from_cnf(cnf).expect("exponents are decreasing");
        for _ in 0..rng.gen_range(1..=6) {
            o = o.successor();
        }
        if &o < bound {
            return o;
        }
    }
}

// A continuous perturbation of sup norm 1: point moves on and near the
// support, plus at most one step.
fn random_direction(rng: &mut ChaCha8Rng, bound: &Ordinal, near: &[Ordinal]) -> StepFunction {
    loop {
        let mut entries = Vec::new();
        for a in near {
            if !a.is_limit() && rng.gen_bool(0.5) {
                entries.push((a.clone(), rng.gen_range(-1.0..1.0)));
            }
        }
        for _ in 0..rng.gen_range(0..=2) {
            entries.push((random_point(rng, bound, near), rng.gen_range(-1.0..1.0)));
        }
        let mut steps = Vec::new();
        if rng.gen_bool(0.7) {
            let start = if rng.gen_bool(0.6) {
                near[rng.gen_range(0..near.len())].clone()
            } else {
                random_point(rng, bound, near)
            };
            if &start < bound {
                steps.push((start, rng.gen_range(-1.0..1.0)));
            }
        }
        let d = StepFunction::new(entries, steps, bound.clone()).expect("indices below bound");
        let n = d.sup_norm();
        if n > 1e-3 {
            let zero = StepFunction::from(&OrdinalFunction::new(bound.clone()));
            return zero.add_scaled(&d, 1.0 / n);
        }
    }
}

/// Draws members `x'` of the basic set around `x` and checks `‖x - x'‖ < ε`.
///
/// Half the candidates are `x + tΔ` with `t` uniform in `[0, 1.5ε]`, kept when
/// they satisfy all three clauses; the other half push `t` along `Δ` to the
/// edge of the set by bisection, where the triangle bound is tightest.
pub fn separation_check<R: Resolution>(
    x: &OrdinalFunction,
    d: &BasicSetDescriptor,
    samples: usize,
    seed: u64,
    res: &R,
    phi: &CoordinatePlateau,
) -> Result<SeparationReport> {
    require_continuous(x)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = StepFunction::from(x);
    let bound = x.domain_bound();
    let mut near: BTreeSet<Ordinal> = x.iter().map(|(a, _)| a.clone()).collect();
    near.insert(Ordinal::zero());
    let g = reconstruction_index(&d.f);
    if &g < bound {
        near.insert(g);
    }
    let near: Vec<Ordinal> = near.into_iter().collect();
    let budget = samples.saturating_mul(MAX_ATTEMPTS_PER_SAMPLE).max(1);
    let reach = 1.5 * d.eps;
    let mut report = SeparationReport {
        accepted: 0,
        attempts: 0,
        violations: 0,
        max_distance: 0.0,
        passed: false,
    };
    while report.accepted < samples {
        if report.attempts >= budget {
            return Err(Error::SamplingExhausted(format!(
                "{} of {samples} members found in {budget} attempts",
                report.accepted
            )));
        }
        report.attempts += 1;
        let dir = random_direction(&mut rng, bound, &near);
        let cand = if rng.gen_bool(0.5) {
            let c = base.add_scaled(&dir, rng.gen_range(0.0..reach));
            if !d.contains(&c, res, phi)? {
                continue;
            }
            c
        } else {
            let (mut lo, mut hi) = (0.0, reach);
            if d.contains(&base.add_scaled(&dir, hi), res, phi)? {
                lo = hi;
            } else {
                for _ in 0..BOUNDARY_BISECTIONS {
                    let mid = 0.5 * (lo + hi);
                    if d.contains(&base.add_scaled(&dir, mid), res, phi)? {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
            }
            let c = base.add_scaled(&dir, lo);
            if lo == 0.0 || !d.contains(&c, res, phi)? {
                continue;
            }
            c
        };
        report.accepted += 1;
        let dist = base.sup_distance(&cand);
        report.max_distance = report.max_distance.max(dist);
        if !(dist < d.eps) {
            report.violations += 1;
        }
    }
    report.passed = report.violations == 0;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ord(cnf: &[(u32, u64)]) -> Ordinal {
        Ordinal::from_cnf(cnf.to_vec()).unwrap()
    }

    fn omega_two() -> Ordinal {
        ord(&[(1, 2)])
    }

    fn fun(items: &[(Ordinal, f64)]) -> OrdinalFunction {
        OrdinalFunction::from_entries(items.iter().cloned(), omega_two()).unwrap()
    }

    fn gi(alpha: Ordinal, n: u32) -> GammaIndex {
        GammaIndex::new(alpha, n)
    }

    fn fin(n: u64) -> Ordinal {
        Ordinal::finite(n)
    }

    #[test]
    fn covering_examples() {
        let y = CoordinateImage::from_finite([(gi(fin(0), 0), 2.0), (gi(fin(1), 0), 0.1)]);
        let f: BTreeSet<_> = [gi(fin(0), 0)].into();
        assert!(covering_membership(&y, &f, 0.5, 1.0).unwrap());
        assert!(!covering_membership(&y, &f, 0.5, 3.0).unwrap());
        assert!(covering_membership(&y, &BTreeSet::new(), 0.5, 1.0).unwrap());
        assert!(matches!(covering_membership(&y, &f, 1.0, 0.5), Err(Error::Parameter(_))));
    }

    #[test]
    fn reconstruction_index_examples() {
        assert_eq!(reconstruction_index(&BTreeSet::new()), Ordinal::zero());
        let f: BTreeSet<_> = [gi(ord(&[(1, 1)]), 3), gi(fin(2), 0)].into();
        assert_eq!(reconstruction_index(&f), ord(&[(1, 1), (0, 1)]));
        for n in [0, 7] {
            assert_eq!(reconstruction_index(&[gi(fin(0), n)].into()), fin(1));
        }
    }

    #[test]
    fn truncation_examples() {
        let f = StepFunction::from(&fun(&[(fin(0), 1.0), (fin(5), 2.0)]));
        assert_eq!(truncation_r(&omega_two(), &f), f);
        let t = truncation_r(&fin(3), &f);
        assert_eq!(t.entries().collect::<Vec<_>>(), vec![(&fin(0), 1.0)]);
        assert_eq!(t.steps().count(), 0);
        assert_eq!(t.value_at(&fin(5)), 0.0);
        assert_eq!(truncation_r(&fin(3), &t), t);
        let g = StepFunction::from(&fun(&[(fin(2), 1.0), (ord(&[(1, 1), (0, 4)]), -3.0)]));
        let frozen = truncation_r(&fin(2), &g);
        assert_eq!(frozen.value_at(&ord(&[(1, 2)])), 1.0);
        assert_eq!(frozen.sup_distance(&g), 4.0);
    }

    #[test]
    fn truncations_settle_below_limits() {
        let x = StepFunction::from(&fun(&[(fin(3), 1.0), (ord(&[(1, 1), (0, 2)]), -0.5)]));
        let omega = ord(&[(1, 1)]);
        let at_limit = truncation_r(&omega, &x);
        for k in 4..20 {
            assert_eq!(truncation_r(&fin(k), &x).sup_distance(&at_limit), 0.0);
        }
        let top = truncation_r(&omega_two(), &x);
        for k in 3..20 {
            let g = ord(&[(1, 1), (0, k)]);
            assert_eq!(truncation_r(&g, &x).sup_distance(&top), 0.0);
        }
    }

    #[test]
    fn coordinate_image_examples() {
        let phi = CoordinatePlateau::standard();
        let res = Truncation::new(omega_two());
        let x = StepFunction::from(&fun(&[(fin(2), 0.3), (fin(3), 0.3)]));
        let y = coordinate_image(&x, &res, &phi);
        // R_3 x = R_2 x: no column at 2.
        assert!(!y.columns.contains_key(&fin(2)));
        let col = &y.columns[&fin(3)];
        assert_eq!(col.increment, 0.3);
        assert_eq!(col.saturated_from, Some(2));
        for n in 2..30 {
            assert_eq!(y.get(&gi(fin(3), n)), 0.5f64.powi(n as i32));
        }
        assert_eq!(y.get(&gi(fin(3), 0)), 0.0);
        for eps in [0.3, 0.1, 0.01, 1e-4] {
            assert!(c0_rectangle_holds(&y, eps, phi.eta()));
        }
    }

    #[test]
    fn limits_must_vanish() {
        assert!(require_continuous(&fun(&[(ord(&[(1, 1)]), 1.0)])).is_err());
        assert!(require_continuous(&fun(&[(ord(&[(1, 1), (0, 1)]), 1.0)])).is_ok());
    }

    #[test]
    fn approximation_examples() {
        let phi = CoordinatePlateau::standard();
        let res = Truncation::new(omega_two());
        let zero = StepFunction::from(&fun(&[]));
        let a = approximation_check(&zero, 0.1, &res, &phi).unwrap();
        assert_eq!(a.residual, 0.0);
        assert!(a.bad_beta.is_none());
        // Blocks of 1 on [1, 3] and on [ω+1, ω+2].
        let x = StepFunction::from(&fun(&[
            (fin(1), 1.0),
            (fin(2), 1.0),
            (fin(3), 1.0),
            (ord(&[(1, 1), (0, 1)]), 1.0),
            (ord(&[(1, 1), (0, 2)]), 1.0),
        ]));
        let a = approximation_check(&x, 0.5, &res, &phi).unwrap();
        let beta = a.bad_beta.clone().unwrap();
        assert_eq!(beta, ord(&[(1, 1), (0, 2)]));
        assert!(reconstruction_index(&a.f) > beta);
        assert!(a.residual < 0.5);
        assert!(approximation_check(&x, 0.0, &res, &phi).is_err());
    }

    #[test]
    fn locate_and_separate() {
        let phi = CoordinatePlateau::standard();
        let res = Truncation::new(omega_two());
        let xf = fun(&[(fin(1), 0.8), (fin(4), -0.5), (ord(&[(1, 1), (0, 3)]), 0.6)]);
        let x = StepFunction::from(&xf);
        let d = locate_basic_set(&x, 0.3, &res, &phi).unwrap();
        assert!(d.q < d.r && d.r < d.delta);
        assert_eq!(d.clauses(&x, &res, &phi).unwrap(), [true; 3]);
        let half = locate_basic_set(&x, 0.15, &res, &phi).unwrap();
        assert_eq!(half.v_radius, 0.5 * d.v_radius);
        assert!(half.inner_radius() <= 0.15 / 3.0);
        let report = separation_check(&xf, &d, 300, 7, &res, &phi).unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn steps_truncate_exactly() {
        let x = StepFunction::new(
            [(fin(2), 0.5), (ord(&[(1, 1), (0, 1)]), -0.25)],
            [(fin(1), 1.0), (fin(4), 0.125)],
            omega_two(),
        )
        .unwrap();
        assert_eq!(x.value_at(&fin(1)), 0.0);
        assert_eq!(x.value_at(&fin(2)), 1.5);
        assert_eq!(x.value_at(&fin(7)), 1.125);
        assert_eq!(x.value_at(&omega_two()), 1.125);
        for g in [fin(0), fin(2), fin(3), fin(4), ord(&[(1, 1)]), ord(&[(1, 1), (0, 1)])] {
            let t = truncation_r(&g, &x);
            assert_eq!(truncation_r(&g, &t), t);
            assert_eq!(t.value_at(&omega_two()), x.value_at(&g));
            assert_eq!(t.value_at(&g.successor()), x.value_at(&g));
        }
        assert_eq!(x.sup_norm(), 1.5);
        assert!(x.is_continuous());
    }

    #[test]
    fn doubled_radius_admits_violations() {
        let phi = CoordinatePlateau::standard();
        let res = Truncation::new(omega_two());
        let xf = fun(&[(fin(1), 1.0), (fin(5), 0.1)]);
        let x = StepFunction::from(&xf);
        let d = locate_basic_set(&x, 0.34, &res, &phi).unwrap();
        assert!(separation_check(&xf, &d, 500, 1, &res, &phi).unwrap().passed);
        // x' = -0.21 beyond 1 with a further dip at 5 is a member of the corrupted set.
        let mut bad = d.clone();
        bad.v_radius *= 2.0;
        let witness = StepFunction::new([(fin(1), 1.0), (fin(5), -0.05)], [(fin(1), -0.21)], omega_two()).unwrap();
        assert!(bad.contains(&witness, &res, &phi).unwrap());
        assert!(x.sup_distance(&witness) >= 0.34);
        let report = separation_check(&xf, &bad, 4000, 1, &res, &phi).unwrap();
        assert!(report.violations > 0, "{report:?}");
    }

    #[test]
    fn descriptor_json_round_trip() {
        let phi = CoordinatePlateau::standard();
        let res = Truncation::new(omega_two());
        let x = StepFunction::from(&fun(&[(fin(1), 0.8)]));
        let d = locate_basic_set(&x, 0.3, &res, &phi).unwrap();
        let back: BasicSetDescriptor = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
    }
}
