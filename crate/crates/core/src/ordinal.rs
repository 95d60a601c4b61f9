//! Ordinals below ω^ω in Cantor normal form.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `Σ ω^{e_i}·k_i` with strictly decreasing exponents and positive coefficients.
///
/// The derived ordering is the ordinal ordering: terms compare by exponent,
/// then coefficient, and a proper prefix is smaller.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
#[serde(transparent)]
pub struct Ordinal {
    cnf: Vec<(u32, u64)>,
}

impl<'de> Deserialize<'de> for Ordinal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let cnf = Vec::<(u32, u64)>::deserialize(d)?;
        Ordinal::from_cnf(cnf).map_err(serde::de::Error::custom)
    }
}

impl Ordinal {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn finite(n: u64) -> Self {
        if n == 0 {
            Self::zero()
        } else {
            Self { cnf: vec![(0, n)] }
        }
    }

    /// `ω^e · k`
    pub fn omega_power(e: u32, k: u64) -> Self {
        if k == 0 {
            Self::zero()
        } else {
            Self { cnf: vec![(e, k)] }
        }
    }

    pub fn from_cnf(cnf: Vec<(u32, u64)>) -> Result<Self> {
        if cnf.iter().any(|&(_, k)| k == 0) {
            return Err(Error::Parameter("CNF coefficients must be positive".into()));
        }
        if cnf.windows(2).any(|w| w[0].0 <= w[1].0) {
            return Err(Error::Parameter(
                "CNF exponents must be strictly decreasing".into(),
            ));
        }
        Ok(Self { cnf })
    }

    pub fn cnf(&self) -> &[(u32, u64)] {
        &self.cnf
    }

    pub fn is_zero(&self) -> bool {
        self.cnf.is_empty()
    }

    pub fn is_limit(&self) -> bool {
        self.cnf.last().is_some_and(|&(e, _)| e > 0)
    }

    pub fn successor(&self) -> Self {
        let mut cnf = self.cnf.clone();
        match cnf.last_mut() {
            Some((0, k)) => *k += 1,
            _ => cnf.push((0, 1)),
        }
        Self { cnf }
    }

    /// `None` for 0 and for limit ordinals.
    pub fn predecessor(&self) -> Option<Self> {
        let mut cnf = self.cnf.clone();
        match cnf.last_mut() {
            Some((0, k)) => {
                *k -= 1;
                if *k == 0 {
                    cnf.pop();
                }
                Some(Self { cnf })
            }
            _ => None,
        }
    }

    /// Leading exponent, `None` for 0.
    pub fn degree(&self) -> Option<u32> {
        self.cnf.first().map(|&(e, _)| e)
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.cnf.is_empty() {
            return write!(out, "0");
        }
        for (i, &(e, k)) in self.cnf.iter().enumerate() {
            if i > 0 {
                write!(out, "+")?;
            }
            match (e, k) {
                (0, k) => write!(out, "{k}")?,
                (1, 1) => write!(out, "ω")?,
                (1, k) => write!(out, "ω·{k}")?,
                (e, 1) => write!(out, "ω^{e}")?,
                (e, k) => write!(out, "ω^{e}·{k}")?,
            }
        }
        Ok(())
    }
}

/// Serializes an ordinal-keyed map as a list of `[key, value]` pairs, since
/// JSON object keys must be strings.
pub(crate) mod as_pairs {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::Ordinal;

    pub fn serialize<V: Serialize, S: Serializer>(
        map: &BTreeMap<Ordinal, V>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter())
    }

    pub fn deserialize<'de, V: Deserialize<'de>, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<Ordinal, V>, D::Error> {
        Ok(Vec::<(Ordinal, V)>::deserialize(d)?.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(cnf: &[(u32, u64)]) -> Ordinal {
        Ordinal::from_cnf(cnf.to_vec()).unwrap()
    }

    #[test]
    fn successor_examples() {
        assert_eq!(Ordinal::zero().successor(), Ordinal::finite(1));
        assert_eq!(o(&[(1, 1)]).successor(), o(&[(1, 1), (0, 1)]));
        assert_eq!(o(&[(2, 3), (0, 5)]).successor(), o(&[(2, 3), (0, 6)]));
    }

    #[test]
    fn predecessor_and_limits() {
        assert_eq!(Ordinal::zero().predecessor(), None);
        assert_eq!(o(&[(1, 1)]).predecessor(), None);
        assert!(o(&[(1, 1)]).is_limit());
        assert!(!Ordinal::zero().is_limit());
        assert_eq!(o(&[(1, 1), (0, 1)]).predecessor(), Some(o(&[(1, 1)])));
        let a = o(&[(3, 2), (1, 4), (0, 7)]);
        assert_eq!(a.successor().predecessor(), Some(a));
    }

    #[test]
    fn ordering() {
        let mut v = vec![
            o(&[(2, 1)]),
            Ordinal::finite(5),
            o(&[(1, 1), (0, 3)]),
            o(&[(1, 2)]),
            Ordinal::zero(),
            o(&[(1, 1)]),
            o(&[(2, 1), (0, 1)]),
        ];
        v.sort();
        let expected = vec![
            Ordinal::zero(),
            Ordinal::finite(5),
            o(&[(1, 1)]),
            o(&[(1, 1), (0, 3)]),
            o(&[(1, 2)]),
            o(&[(2, 1)]),
            o(&[(2, 1), (0, 1)]),
        ];
        assert_eq!(v, expected);
    }

    #[test]
    fn json_is_a_cnf_array() {
        let a = o(&[(2, 3), (0, 5)]);
        assert_eq!(serde_json::to_string(&a).unwrap(), "[[2,3],[0,5]]");
        let back: Ordinal = serde_json::from_str("[[2,3],[0,5]]").unwrap();
        assert_eq!(back, a);
        assert!(serde_json::from_str::<Ordinal>("[[0,1],[1,1]]").is_err());
        assert!(serde_json::from_str::<Ordinal>("[[1,0]]").is_err());
        assert_eq!(a.to_string(), "ω^2·3+5");
    }
}
