//! Operator pairs `(S, T)` that feed the pair norm: Talagrand operators on
//! ordinal-indexed spaces, countable-boundary maps, and the vector-valued
//! construction through coordinatewise `E`-norms.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indexed::{IndexedVector, NormPair};
use crate::ordinal::Ordinal;
use crate::pair_norm::{membership_u, SmoothNorm};

const DUAL_NORM_SLACK: f64 = 1e-12;

/// A finitely supported function on `[0, Ω)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrdinalFunction {
    entries: BTreeMap<Ordinal, f64>,
    domain_bound: Ordinal,
}

#[derive(Serialize, Deserialize)]
struct OrdinalFunctionRepr {
    entries: Vec<(Ordinal, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain_bound: Option<Ordinal>,
}

impl Serialize for OrdinalFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        OrdinalFunctionRepr {
            entries: self.entries.iter().map(|(a, v)| (a.clone(), *v)).collect(),
            domain_bound: Some(self.domain_bound.clone()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for OrdinalFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = OrdinalFunctionRepr::deserialize(d)?;
        let bound = match repr.domain_bound {
            Some(b) => b,
            None => default_bound(repr.entries.iter().map(|(a, _)| a)),
        };
        OrdinalFunction::from_entries(repr.entries, bound).map_err(serde::de::Error::custom)
    }
}

// Smallest ω^{d+1} above every index.
fn default_bound<'a>(indices: impl Iterator<Item = &'a Ordinal>) -> Ordinal {
    let degree = indices.filter_map(Ordinal::degree).max();
    Ordinal::omega_power(degree.map_or(1, |d| d + 1), 1)
}

impl OrdinalFunction {
    pub fn new(domain_bound: Ordinal) -> Self {
        Self {
            entries: BTreeMap::new(),
            domain_bound,
        }
    }

    pub fn from_entries(
        entries: impl IntoIterator<Item = (Ordinal, f64)>,
        domain_bound: Ordinal,
    ) -> Result<Self> {
        let mut out = Self::new(domain_bound);
        for (a, v) in entries {
            out.set(a, v)?;
        }
        Ok(out)
    }

    pub fn domain_bound(&self) -> &Ordinal {
        &self.domain_bound
    }

    pub fn get(&self, a: &Ordinal) -> f64 {
        self.entries.get(a).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, a: Ordinal, v: f64) -> Result<()> {
        if a >= self.domain_bound {
            return Err(Error::Parameter(format!(
                "index {a} is not below the domain bound {}",
                self.domain_bound
            )));
        }
        if !v.is_finite() {
            return Err(Error::Parameter(format!("non-finite value at {a}")));
        }
        if v == 0.0 {
            self.entries.remove(&a);
        } else {
            self.entries.insert(a, v);
        }
        Ok(())
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (&Ordinal, f64)> {
        self.entries.iter().map(|(a, v)| (a, *v))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.entries.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_indexed(&self) -> IndexedVector<Ordinal> {
        self.iter().map(|(a, v)| (a.clone(), v)).collect()
    }
}

/// `(Tf)_α = f_α - f_{α+1}`.
pub fn talagrand_ordinal(f: &OrdinalFunction) -> OrdinalFunction {
    let mut out = OrdinalFunction::new(f.domain_bound.clone());
    for (a, _) in f.iter() {
        let mut candidates = vec![a.clone()];
        candidates.extend(a.predecessor());
        for b in candidates {
            let value = f.get(&b) - f.get(&b.successor());
            out.entries.remove(&b);
            if value != 0.0 {
                out.entries.insert(b, value);
            }
        }
    }
    out
}

/// The largest `α` with `|f_α| = ‖f‖∞`; checks `(Tf)_α ≠ 0`.
pub fn verify_talagrand(f: &OrdinalFunction) -> Result<Ordinal> {
    if f.is_zero() {
        return Err(Error::Precondition("the zero function has no witness".into()));
    }
    let norm = f.sup_norm();
    let (alpha, value) = f
        .iter()
        .rev()
        .find(|(_, v)| v.abs() == norm)
        .expect("a nonzero finitely supported function attains its norm");
    let image = value - f.get(&alpha.successor());
    if image == 0.0 {
        return Err(Error::Consistency(format!(
            "(Tf) vanishes at the maximal norming index {alpha}"
        )));
    }
    Ok(alpha.clone())
}

/// `(f, ½·Tf)`: the scaled operator keeps `‖T'f‖∞ ≤ ‖f‖∞`, as membership in `U` requires.
pub fn talagrand_pair(f: &OrdinalFunction) -> NormPair<Ordinal> {
    NormPair::new(f.to_indexed(), talagrand_ordinal(f).to_indexed().scale(0.5))
}

/// A dense real matrix acting on column vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Matrix {
    rows: Vec<Vec<f64>>,
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Matrix::new(Vec::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl Matrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(first) = rows.first() {
            if rows.iter().any(|r| r.len() != first.len()) {
                return Err(Error::Parameter("matrix rows differ in length".into()));
            }
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("matrix has a non-finite entry".into()));
        }
        Ok(Self { rows })
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self { rows }
    }

    /// `½(f_i - f_{i+1})` on `n` points, the last one followed by 0.
    pub fn talagrand(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| match j {
                        _ if j == i => 0.5,
                        _ if j == i + 1 => -0.5,
                        _ => 0.0,
                    })
                    .collect()
            })
            .collect();
        Self { rows }
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.rows.is_empty() && x.len() != self.cols() {
            return Err(Error::Parameter(format!(
                "vector of length {} does not fit a matrix with {} columns",
                x.len(),
                self.cols()
            )));
        }
        Ok(self
            .rows
            .iter()
            .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }
}

fn indexed_from_slice(v: &[f64], offset: usize) -> IndexedVector<usize> {
    v.iter().enumerate().map(|(i, &a)| (i + offset, a)).collect()
}

/// Linear functionals on `(ℝ^d, ‖·‖∞)`, each of dual (ℓ₁) norm at most 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundarySystem {
    functionals: Vec<Vec<f64>>,
}

impl<'de> Deserialize<'de> for BoundarySystem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            functionals: Vec<Vec<f64>>,
        }
        BoundarySystem::new(Repr::deserialize(d)?.functionals).map_err(serde::de::Error::custom)
    }
}

impl BoundarySystem {
    pub fn new(functionals: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(first) = functionals.first() {
            if functionals.iter().any(|g| g.len() != first.len()) {
                return Err(Error::Parameter("functionals differ in dimension".into()));
            }
        }
        for g in &functionals {
            let dual: f64 = g.iter().map(|v| v.abs()).sum();
            if !(dual <= 1.0 + DUAL_NORM_SLACK) {
                return Err(Error::Parameter(format!(
                    "functional has dual norm {dual} > 1"
                )));
            }
        }
        Ok(Self { functionals })
    }

    /// `+e₁, -e₁, +e₂, -e₂, …` on `ℝ^dim`.
    pub fn coordinate(dim: usize) -> Self {
        let functionals = (0..dim)
            .flat_map(|i| {
                [1.0, -1.0].map(|s| (0..dim).map(|j| if j == i { s } else { 0.0 }).collect())
            })
            .collect();
        Self { functionals }
    }

    pub fn functionals(&self) -> &[Vec<f64>] {
        &self.functionals
    }

    pub fn dim(&self) -> usize {
        self.functionals.first().map_or(0, Vec::len)
    }

    fn pairings(&self, x: &[f64]) -> Result<Vec<f64>> {
        Matrix {
            rows: self.functionals.clone(),
        }
        .apply(x)
    }

    /// Whether some functional attains `‖x‖∞`.
    pub fn attains_norm(&self, x: &[f64]) -> Result<bool> {
        let norm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(self.pairings(x)?.iter().any(|&p| p == norm))
    }

    /// `S` with rows `ξ_n` and `T` with rows `2^{-n} ξ_n`, `n = 1, 2, …`.
    pub fn operators(&self) -> (Matrix, Matrix) {
        let s = Matrix {
            rows: self.functionals.clone(),
        };
        let t = Matrix {
            rows: self
                .functionals
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    let w = 0.5f64.powi(i as i32 + 1);
                    g.iter().map(|v| w * v).collect()
                })
                .collect(),
        };
        (s, t)
    }
}

/// `((⟨ξ_n, x⟩)_n, (2^{-n}⟨ξ_n, x⟩)_n)`, indexed from `n = 1`.
pub fn boundary_maps(x: &[f64], b: &BoundarySystem) -> Result<NormPair<usize>> {
    let p = b.pairings(x)?;
    let t: Vec<f64> = p
        .iter()
        .enumerate()
        .map(|(i, v)| v * 0.5f64.powi(i as i32 + 1))
        .collect();
    Ok(NormPair::new(
        indexed_from_slice(&p, 1),
        indexed_from_slice(&t, 1),
    ))
}

/// `(Sx, Tx)` indexed by row, from 1.
pub fn operator_pair(x: &[f64], s: &Matrix, t: &Matrix) -> Result<NormPair<usize>> {
    Ok(NormPair::new(
        indexed_from_slice(&s.apply(x)?, 1),
        indexed_from_slice(&t.apply(x)?, 1),
    ))
}

fn require_u_or_zero<K: Ord + Clone>(p: &NormPair<K>, what: &str) -> Result<()> {
    if p.is_zero() || membership_u(p) {
        Ok(())
    } else {
        Err(Error::HypothesisViolation(format!(
            "{what} is neither zero nor in U(L)"
        )))
    }
}

/// `‖x‖ = ‖(Sx, Tx)‖`.
pub fn renormed_norm(x: &[f64], s: &Matrix, t: &Matrix) -> Result<f64> {
    let p = operator_pair(x, s, t)?;
    require_u_or_zero(&p, "(Sx, Tx)")?;
    Ok(SmoothNorm::default().smooth_norm(&p))
}

/// Norm on the fibre space `E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ENorm {
    Euclidean,
    /// `ℓ_p` with even `p ≥ 2`.
    Lp(u32),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ENormRepr {
    Name(String),
    P { p: u32 },
}

impl Serialize for ENorm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            ENorm::Euclidean => ENormRepr::Name("euclidean".into()),
            ENorm::Lp(p) => ENormRepr::P { p },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ENorm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match ENormRepr::deserialize(d)? {
            ENormRepr::Name(n) if n == "euclidean" => Ok(ENorm::Euclidean),
            ENormRepr::Name(n) => Err(serde::de::Error::custom(format!("unknown E-norm {n:?}"))),
            ENormRepr::P { p } => ENorm::lp(p).map_err(serde::de::Error::custom),
        }
    }
}

impl ENorm {
    pub fn lp(p: u32) -> Result<Self> {
        if p < 2 || p % 2 != 0 {
            return Err(Error::Parameter(format!("p = {p} must be an even integer ≥ 2")));
        }
        Ok(if p == 2 { ENorm::Euclidean } else { ENorm::Lp(p) })
    }

    fn exponent(self) -> f64 {
        match self {
            ENorm::Euclidean => 2.0,
            ENorm::Lp(p) => p as f64,
        }
    }

    pub fn norm(self, v: &[f64]) -> f64 {
        match self {
            ENorm::Euclidean => v.iter().map(|a| a * a).sum::<f64>().sqrt(),
            ENorm::Lp(_) => {
                let p = self.exponent();
                let m = v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
                if m == 0.0 {
                    return 0.0;
                }
                m * v.iter().map(|a| (a.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
            }
        }
    }

    /// Norm of a functional on `E`, i.e. the conjugate `ℓ_q` norm.
    pub fn dual_norm(self, eta: &[f64]) -> f64 {
        match self {
            ENorm::Euclidean => ENorm::Euclidean.norm(eta),
            ENorm::Lp(_) => {
                let p = self.exponent();
                let q = p / (p - 1.0);
                let m = eta.iter().fold(0.0f64, |m, a| m.max(a.abs()));
                if m == 0.0 {
                    return 0.0;
                }
                m * eta.iter().map(|a| (a.abs() / m).powf(q)).sum::<f64>().powf(1.0 / q)
            }
        }
    }

    /// A unit functional `η` with `⟨η, v⟩ = ‖v‖`.
    pub fn norming_functional(self, v: &[f64]) -> Vec<f64> {
        let n = self.norm(v);
        if n == 0.0 {
            return vec![0.0; v.len()];
        }
        let p = self.exponent();
        v.iter()
            .map(|a| a.signum() * (a.abs() / n).powf(p - 1.0))
            .collect()
    }
}

/// A finitely supported `E`-valued function: `z ∈ ℓ∞(L; E)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "K: Ord + Serialize"))]
pub struct VectorField<K: Ord = String> {
    entries: BTreeMap<K, Vec<f64>>,
    dim: usize,
    e_norm: ENorm,
}

impl<'de, K> Deserialize<'de> for VectorField<K>
where
    K: Ord + Clone + Deserialize<'de>,
{
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(bound(deserialize = "K: Ord + Deserialize<'de>"))]
        struct Repr<K: Ord> {
            entries: BTreeMap<K, Vec<f64>>,
            #[serde(default)]
            dim: Option<usize>,
            e_norm: ENorm,
        }
        let r = Repr::<K>::deserialize(d)?;
        let dim = match r.dim {
            Some(d) => d,
            None => r.entries.values().next().map_or(1, Vec::len),
        };
        VectorField::from_entries(r.entries, dim, r.e_norm).map_err(serde::de::Error::custom)
    }
}

impl<K: Ord + Clone> VectorField<K> {
    pub fn new(dim: usize, e_norm: ENorm) -> Self {
        Self {
            entries: BTreeMap::new(),
            dim,
            e_norm,
        }
    }

    pub fn from_entries(
        entries: impl IntoIterator<Item = (K, Vec<f64>)>,
        dim: usize,
        e_norm: ENorm,
    ) -> Result<Self> {
        let mut out = Self::new(dim, e_norm);
        for (k, v) in entries {
            out.set(k, v)?;
        }
        Ok(out)
    }

    pub fn set(&mut self, k: K, v: Vec<f64>) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::Parameter(format!(
                "vector of length {} in a field of dimension {}",
                v.len(),
                self.dim
            )));
        }
        if v.iter().any(|a| !a.is_finite()) {
            return Err(Error::Parameter("non-finite component".into()));
        }
        if v.iter().all(|&a| a == 0.0) {
            self.entries.remove(&k);
        } else {
            self.entries.insert(k, v);
        }
        Ok(())
    }

    pub fn get(&self, k: &K) -> Option<&[f64]> {
        self.entries.get(k).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &[f64])> {
        self.entries.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn e_norm(&self) -> ENorm {
        self.e_norm
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `(⟨η, z_t⟩)_t`.
pub fn slice_map<K: Ord + Clone>(z: &VectorField<K>, eta: &[f64]) -> Result<IndexedVector<K>> {
    if eta.len() != z.dim {
        return Err(Error::Parameter(format!(
            "functional of length {} on a space of dimension {}",
            eta.len(),
            z.dim
        )));
    }
    let dual = z.e_norm.dual_norm(eta);
    if dual > 1.0 + DUAL_NORM_SLACK {
        return Err(Error::Precondition(format!("functional has dual norm {dual} > 1")));
    }
    Ok(z
        .iter()
        .map(|(k, v)| (k.clone(), v.iter().zip(eta).map(|(a, b)| a * b).sum()))
        .collect())
}

/// `(Nz)_t = ‖z_t‖_E`.
pub fn coordinate_norms<K: Ord + Clone>(z: &VectorField<K>) -> IndexedVector<K> {
    z.iter().map(|(k, v)| (k.clone(), z.e_norm.norm(v))).collect()
}

/// `(S ⊗ I_E)(z)`, where the field is indexed by the columns of `m`.
pub fn apply_componentwise(m: &Matrix, z: &VectorField<usize>) -> Result<VectorField<usize>> {
    if let Some((&k, _)) = z.entries.iter().next_back() {
        if k >= m.cols() {
            return Err(Error::Parameter(format!(
                "field index {k} exceeds the {} matrix columns",
                m.cols()
            )));
        }
    }
    let mut out = VectorField::new(z.dim, z.e_norm);
    for (i, row) in m.rows.iter().enumerate() {
        let mut acc = vec![0.0; z.dim];
        for (&j, v) in &z.entries {
            for (a, b) in acc.iter_mut().zip(v) {
                *a += row[j] * b;
            }
        }
        out.set(i + 1, acc)?;
    }
    Ok(out)
}

/// `(N((S⊗I)z), N((T⊗I)z))`, after checking the scalar hypothesis on slices of `z`.
pub fn tensor_pair(z: &VectorField<usize>, s: &Matrix, t: &Matrix) -> Result<NormPair<usize>> {
    let sz = apply_componentwise(s, z)?;
    let tz = apply_componentwise(t, z)?;
    let cols = s.cols();
    let dense = |v: &IndexedVector<usize>| -> Vec<f64> { (0..cols).map(|j| v.get(&j)).collect() };

    let mut slices: Vec<Vec<f64>> = (0..z.dim)
        .map(|k| (0..z.dim).map(|j| if j == k { 1.0 } else { 0.0 }).collect())
        .collect();
    let peak = sz
        .iter()
        .map(|(_, v)| v)
        .fold(None::<&[f64]>, |best, v| match best {
            Some(b) if z.e_norm.norm(b) >= z.e_norm.norm(v) => Some(b),
            _ => Some(v),
        });
    if let Some(v) = peak {
        slices.push(z.e_norm.norming_functional(v));
    }
    for eta in &slices {
        let scalar = dense(&slice_map(z, eta)?);
        let p = operator_pair(&scalar, s, t)?;
        require_u_or_zero(&p, "a scalar slice (Sζ, Tζ)")?;
    }

    let pair = NormPair::new(coordinate_norms(&sz), coordinate_norms(&tz));
    require_u_or_zero(&pair, "(N(S⊗I)z, N(T⊗I)z)")?;
    Ok(pair)
}

/// `‖z‖ = ‖(N((S⊗I)z), N((T⊗I)z))‖`.
pub fn tensor_norm(z: &VectorField<usize>, s: &Matrix, t: &Matrix) -> Result<f64> {
    let pair = tensor_pair(z, s, t)?;
    Ok(SmoothNorm::default().smooth_norm(&pair))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ord(cnf: &[(u32, u64)]) -> Ordinal {
        Ordinal::from_cnf(cnf.to_vec()).unwrap()
    }

    fn ofn(items: &[(Ordinal, f64)]) -> OrdinalFunction {
        OrdinalFunction::from_entries(items.iter().cloned(), ord(&[(3, 1)])).unwrap()
    }

    #[test]
    fn talagrand_examples() {
        let f = ofn(&[(Ordinal::finite(0), 1.0), (Ordinal::finite(1), 1.0)]);
        assert_eq!(talagrand_ordinal(&f), ofn(&[(Ordinal::finite(1), 1.0)]));
        let omega = ord(&[(1, 1)]);
        let g = ofn(&[(omega.clone(), 2.0)]);
        assert_eq!(talagrand_ordinal(&g), g);
        assert!(talagrand_ordinal(&ofn(&[])).is_zero());
        // A predecessor picks up -f at the next index.
        let h = ofn(&[(Ordinal::finite(3), 2.0)]);
        assert_eq!(
            talagrand_ordinal(&h),
            ofn(&[(Ordinal::finite(2), -2.0), (Ordinal::finite(3), 2.0)])
        );
    }

    #[test]
    fn talagrand_witnesses() {
        let f = ofn(&[(Ordinal::finite(0), 1.0), (Ordinal::finite(1), 1.0)]);
        assert_eq!(verify_talagrand(&f).unwrap(), Ordinal::finite(1));
        let omega = ord(&[(1, 1)]);
        assert_eq!(verify_talagrand(&ofn(&[(omega.clone(), -3.0)])).unwrap(), omega);
        assert!(matches!(verify_talagrand(&ofn(&[])), Err(Error::Precondition(_))));
    }

    #[test]
    fn talagrand_pair_is_in_u() {
        let f = ofn(&[(Ordinal::finite(0), 1.0), (Ordinal::finite(1), -1.0)]);
        assert!(membership_u(&talagrand_pair(&f)));
    }

    #[test]
    fn ordinal_function_bounds_and_json() {
        assert!(OrdinalFunction::from_entries([(ord(&[(2, 1)]), 1.0)], ord(&[(1, 5)])).is_err());
        let f: OrdinalFunction =
            serde_json::from_str(r#"{"entries":[[[[1,1]],2.0],[[],1.0]]}"#).unwrap();
        assert_eq!(f.domain_bound(), &ord(&[(2, 1)]));
        assert_eq!(f.get(&Ordinal::zero()), 1.0);
        let back: OrdinalFunction = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn boundary_examples() {
        let b = BoundarySystem::coordinate(3);
        assert!(boundary_maps(&[0.0; 3], &b).unwrap().is_zero());
        let p = boundary_maps(&[1.0, 0.5, -0.2], &b).unwrap();
        let s = [1.0, -1.0, 0.5, -0.5, -0.2, 0.2];
        for (n, &v) in s.iter().enumerate() {
            assert_eq!(p.f.get(&(n + 1)), v);
            assert_eq!(p.x.get(&(n + 1)), v * 0.5f64.powi(n as i32 + 1));
        }
        assert!(membership_u(&p));
        assert!(b.attains_norm(&[1.0, 0.5, -0.2]).unwrap());
        assert!(BoundarySystem::new(vec![vec![0.8, 0.8]]).is_err());
    }

    #[test]
    fn non_boundary_is_reported() {
        // The second functional is too short to norm (0, 1); the 2^{-n} weights
        // keep the pair in U, so the defect shows up as a lost norm bound instead.
        let b = BoundarySystem::new(vec![vec![1.0, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!(b.attains_norm(&[1.0, 0.0]).unwrap());
        assert!(!b.attains_norm(&[-1.0, 0.0]).unwrap());
        assert!(!b.attains_norm(&[0.0, 1.0]).unwrap());
        let (s, t) = b.operators();
        let v = renormed_norm(&[0.0, 1.0], &s, &t).unwrap();
        assert!(v < (-1.0f64).exp() * 1.0);
    }

    #[test]
    fn unscaled_talagrand_leaves_u() {
        let s = Matrix::identity(2);
        let t = Matrix::new(vec![vec![1.0, -1.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            renormed_norm(&[1.0, -1.0], &s, &t),
            Err(Error::HypothesisViolation(_))
        ));
    }

    #[test]
    fn renormed_norm_examples() {
        let b = BoundarySystem::coordinate(3);
        let (s, t) = b.operators();
        assert_eq!(renormed_norm(&[0.0; 3], &s, &t).unwrap(), 0.0);
        let x = [1.0, 0.5, -0.2];
        let v = renormed_norm(&x, &s, &t).unwrap();
        for lambda in [-2.0, 0.5, 3.0] {
            let scaled: Vec<f64> = x.iter().map(|a| lambda * a).collect();
            let w = renormed_norm(&scaled, &s, &t).unwrap();
            assert!((w - lambda.abs() * v).abs() <= 1e-9 * w);
        }
        let e_inv = (-1.0f64).exp();
        assert!(v >= e_inv * 1.0 - 1e-9 && v <= e_inv * 1.5 + 1e-9);
    }

    #[test]
    fn slice_and_coordinate_norm_examples() {
        let z = VectorField::from_entries(
            [("a".to_string(), vec![1.0, 0.0]), ("b".to_string(), vec![0.0, 2.0])],
            2,
            ENorm::Euclidean,
        )
        .unwrap();
        assert!(slice_map(&z, &[0.0, 0.0]).unwrap().is_empty());
        let s = slice_map(&z, &[1.0, 0.0]).unwrap();
        assert_eq!(s, crate::indexed::iv(&[("a", 1.0)]));
        assert!(matches!(slice_map(&z, &[1.0, 1.0]), Err(Error::Precondition(_))));
        let w = VectorField::from_entries([("a".to_string(), vec![3.0, 4.0])], 2, ENorm::Euclidean)
            .unwrap();
        assert_eq!(coordinate_norms(&w), crate::indexed::iv(&[("a", 5.0)]));
        assert!(coordinate_norms(&VectorField::<String>::new(2, ENorm::Euclidean)).is_empty());
    }

    #[test]
    fn lp_norms_and_norming_functionals() {
        let e = ENorm::lp(4).unwrap();
        let v = [1.0, -2.0, 0.5];
        let eta = e.norming_functional(&v);
        let pairing: f64 = eta.iter().zip(&v).map(|(a, b)| a * b).sum();
        assert!((pairing - e.norm(&v)).abs() < 1e-12);
        assert!((e.dual_norm(&eta) - 1.0).abs() < 1e-12);
        assert!(ENorm::lp(3).is_err());
        assert_eq!(ENorm::lp(2).unwrap(), ENorm::Euclidean);
        let parsed: ENorm = serde_json::from_str(r#"{"p":4}"#).unwrap();
        assert_eq!(parsed, e);
        let parsed: ENorm = serde_json::from_str(r#""euclidean""#).unwrap();
        assert_eq!(parsed, ENorm::Euclidean);
    }

    #[test]
    fn tensor_norm_examples() {
        let s = Matrix::identity(3);
        let t = Matrix::talagrand(3);
        assert_eq!(tensor_norm(&VectorField::new(2, ENorm::Euclidean), &s, &t).unwrap(), 0.0);
        let z = VectorField::from_entries(
            [(0, vec![1.0, -0.5]), (2, vec![0.3, 0.9])],
            2,
            ENorm::Euclidean,
        )
        .unwrap();
        let pair = tensor_pair(&z, &s, &t).unwrap();
        assert!(membership_u(&pair));
        // One-dimensional fibres: the coordinate norms are |Sx| and |Tx|.
        let x = [0.7, -0.7, 0.2];
        let z1 = VectorField::from_entries(
            x.iter().enumerate().map(|(i, &a)| (i, vec![a])),
            1,
            ENorm::Euclidean,
        )
        .unwrap();
        assert_eq!(tensor_norm(&z1, &s, &t).unwrap(), renormed_norm(&x, &s, &t).unwrap());
    }
}
