//! Finitely supported coordinate vectors and the pairs `(f, x)` the norm acts on.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

/// A finitely supported real function on an index set; absent indices are 0.
///
/// Zero entries are never stored, so `support()` is exact. Serializes as
/// `{"entries": {index: value}}`; a bare `{index: value}` map is also accepted.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "K: Ord + Serialize"))]
pub struct IndexedVector<K: Ord = String> {
    entries: BTreeMap<K, f64>,
}

impl<'de, K> Deserialize<'de> for IndexedVector<K>
where
    K: Ord + Deserialize<'de>,
{
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged, bound(deserialize = "K: Ord + Deserialize<'de>"))]
        enum Repr<K: Ord> {
            Wrapped { entries: BTreeMap<K, f64> },
            Bare(BTreeMap<K, f64>),
        }
        let mut entries = match Repr::<K>::deserialize(d)? {
            Repr::Wrapped { entries } | Repr::Bare(entries) => entries,
        };
        if let Some(bad) = entries.values().find(|v| !v.is_finite()) {
            return Err(serde::de::Error::custom(format!("non-finite entry {bad}")));
        }
        entries.retain(|_, v| *v != 0.0);
        Ok(Self { entries })
    }
}

impl<K: Ord> Default for IndexedVector<K> {
    fn default() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }
}

impl<K: Ord + Clone> IndexedVector<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, index: &K) -> f64 {
        self.entries.get(index).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, index: K, value: f64) {
        if value == 0.0 {
            self.entries.remove(&index);
        } else {
            self.entries.insert(index, value);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, f64)> {
        self.entries.iter().map(|(k, v)| (k, *v))
    }

    pub fn support(&self) -> impl Iterator<Item = &K> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.entries.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map_values(&self, mut f: impl FnMut(&K, f64) -> f64) -> Self {
        self.entries
            .iter()
            .map(|(k, v)| (k.clone(), f(k, *v)))
            .collect()
    }

    pub fn abs(&self) -> Self {
        self.map_values(|_, v| v.abs())
    }

    pub fn scale(&self, lambda: f64) -> Self {
        self.map_values(|_, v| lambda * v)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in other.iter() {
            out.set(k.clone(), out.get(k) + v);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Keeps only the coordinates in `keep`.
    pub fn restrict(&self, keep: &BTreeSet<K>) -> Self {
        self.entries
            .iter()
            .filter(|(k, _)| keep.contains(*k))
            .map(|(k, v)| (k.clone(), *v))
            .collect()
    }
}

impl<K: Ord + Clone> FromIterator<(K, f64)> for IndexedVector<K> {
    fn from_iter<I: IntoIterator<Item = (K, f64)>>(iter: I) -> Self {
        let mut v = Self::new();
        for (k, x) in iter {
            v.set(k, x);
        }
        v
    }
}

impl<K: Ord + Clone, const N: usize> From<[(K, f64); N]> for IndexedVector<K> {
    fn from(items: [(K, f64); N]) -> Self {
        items.into_iter().collect()
    }
}

/// Convenience constructor for string-indexed vectors: `iv(&[("a", 1.0)])`.
pub fn iv(items: &[(&str, f64)]) -> IndexedVector {
    items.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// An element `(f, x)` of `ℓ∞(L) ⊕ c₀(L)` with finite joint support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "K: Ord + Serialize",
    deserialize = "K: Ord + Deserialize<'de>"
))]
pub struct NormPair<K: Ord = String> {
    pub f: IndexedVector<K>,
    pub x: IndexedVector<K>,
}

impl<K: Ord> Default for NormPair<K> {
    fn default() -> Self {
        Self {
            f: IndexedVector::default(),
            x: IndexedVector::default(),
        }
    }
}

impl<K: Ord + Clone> NormPair<K> {
    pub fn new(f: IndexedVector<K>, x: IndexedVector<K>) -> Self {
        Self { f, x }
    }

    pub fn is_zero(&self) -> bool {
        self.f.is_empty() && self.x.is_empty()
    }

    pub fn joint_support(&self) -> BTreeSet<K> {
        self.f.support().chain(self.x.support()).cloned().collect()
    }

    /// `‖ |f| + ½|x| ‖∞`
    pub fn peak_level(&self) -> f64 {
        self.joint_support()
            .iter()
            .map(|t| self.f.get(t).abs() + 0.5 * self.x.get(t).abs())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, lambda: f64) -> Self {
        Self::new(self.f.scale(lambda), self.x.scale(lambda))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.f.add(&other.f), self.x.add(&other.x))
    }

    pub fn abs(&self) -> Self {
        Self::new(self.f.abs(), self.x.abs())
    }

    pub fn restrict(&self, keep: &BTreeSet<K>) -> Self {
        Self::new(self.f.restrict(keep), self.x.restrict(keep))
    }

    /// Largest coordinatewise distance in either component.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.f
            .sub(&other.f)
            .sup_norm()
            .max(self.x.sub(&other.x).sup_norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_are_pruned() {
        let mut v = iv(&[("a", 1.0), ("b", 0.0)]);
        assert_eq!(v.len(), 1);
        v.set("a".into(), 0.0);
        assert!(v.is_empty());
        assert_eq!(v.sup_norm(), 0.0);
    }

    #[test]
    fn sup_norm_and_arithmetic() {
        let a = iv(&[("a", -3.0), ("b", 2.0)]);
        let b = iv(&[("a", 3.0), ("c", 1.0)]);
        assert_eq!(a.sup_norm(), 3.0);
        let s = a.add(&b);
        assert_eq!(s, iv(&[("b", 2.0), ("c", 1.0)]));
        assert_eq!(a.sub(&a), IndexedVector::new());
    }

    #[test]
    fn json_shape_prunes_zeros() {
        let v: IndexedVector = serde_json::from_str(r#"{"entries":{"a":1.5,"b":0}}"#).unwrap();
        assert_eq!(v, iv(&[("a", 1.5)]));
        let bare: IndexedVector = serde_json::from_str(r#"{"a":1.5}"#).unwrap();
        assert_eq!(bare, v);
        let p: NormPair =
            serde_json::from_str(r#"{"f":{"entries":{"a":1}},"x":{"entries":{}}}"#).unwrap();
        assert_eq!(p.joint_support().len(), 1);
    }

    #[test]
    fn peak_level() {
        let p = NormPair::new(iv(&[("a", 1.0), ("b", 0.9)]), iv(&[("a", -0.5)]));
        assert_eq!(p.peak_level(), 1.25);
    }
}
