//! Finite transformations of the coordinate set: maps `ℕ → ℕ` that move
//! only finitely many coordinates.

use std::collections::BTreeMap;
use std::fmt;

use itertools::Itertools;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// A map on coordinates that is the identity outside a finite set.
///
/// Fixed points are never stored, so structural equality is equality of maps.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FiniteTransformation {
    moved: BTreeMap<usize, usize>,
}

impl FiniteTransformation {
    pub fn identity() -> Self {
        Self::default()
    }

    /// `[i|j]`: sends `i` to `j` and fixes everything else.
    pub fn replace(i: usize, j: usize) -> Self {
        Self::from_pairs([(i, j)])
    }

    /// The transposition swapping `i` and `j`.
    pub fn swap(i: usize, j: usize) -> Self {
        Self::from_pairs([(i, j), (j, i)])
    }

    /// Builds a transformation from `(from, to)` pairs; later pairs win.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut moved = BTreeMap::new();
        for (from, to) in pairs {
            if from == to {
                moved.remove(&from);
            } else {
                moved.insert(from, to);
            }
        }
        Self { moved }
    }

    /// A permutation of `{0..images.len()-1}` given by its image list.
    pub fn from_images(images: &[usize]) -> Self {
        Self::from_pairs(images.iter().copied().enumerate())
    }

    pub fn apply(&self, i: usize) -> usize {
        self.moved.get(&i).copied().unwrap_or(i)
    }

    pub fn is_identity(&self) -> bool {
        self.moved.is_empty()
    }

    /// Coordinates moved by the map.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.moved.keys().copied()
    }

    pub fn moved(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.moved.iter().map(|(a, b)| (*a, *b))
    }

    /// Largest coordinate mentioned as a source or a target.
    pub fn max_coordinate(&self) -> Option<usize> {
        self.moved.iter().map(|(a, b)| *a.max(b)).max()
    }

    /// `self ∘ other`, i.e. `i ↦ self(other(i))`.
    pub fn compose(&self, other: &Self) -> Self {
        let keys = self.moved.keys().chain(other.moved.keys()).copied();
        Self::from_pairs(keys.map(|i| (i, self.apply(other.apply(i)))).collect::<Vec<_>>())
    }

    /// The same map with `k` sent to `v`.
    pub fn with(&self, k: usize, v: usize) -> Self {
        let mut out = self.clone();
        if k == v {
            out.moved.remove(&k);
        } else {
            out.moved.insert(k, v);
        }
        out
    }

    pub fn is_injective(&self) -> bool {
        // a moved point landing on a fixed point collides with it
        self.moved.values().all_unique() && self.moved.values().all(|img| self.moved.contains_key(img))
    }

    /// Inverse of a finite permutation.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_injective() {
            return Err(Error::Precondition(format!("{self} is not a permutation")));
        }
        Ok(Self::from_pairs(
            self.moved.iter().map(|(a, b)| (*b, *a)).collect::<Vec<_>>(),
        ))
    }

    /// All permutations of `{0..m-1}`, identity first, in lexicographic order
    /// of their image lists.
    pub fn permutations(m: usize) -> Vec<Self> {
        (0..m)
            .permutations(m)
            .map(|images| Self::from_images(&images))
            .collect()
    }

    /// Every transformation that moves at most `max_moved` coordinates of
    /// `{0..window-1}` to targets inside the window, identity first.
    pub fn enumerate_bounded(window: usize, max_moved: usize) -> Vec<Self> {
        let mut out = vec![Self::identity()];
        for size in 1..=max_moved.min(window) {
            for sources in (0..window).combinations(size) {
                let choices: Vec<Vec<usize>> = sources
                    .iter()
                    .map(|s| (0..window).filter(|t| t != s).collect())
                    .collect();
                for targets in choices.into_iter().multi_cartesian_product() {
                    out.push(Self::from_pairs(sources.iter().copied().zip(targets)));
                }
            }
        }
        out
    }
}

impl fmt::Display for FiniteTransformation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.moved.is_empty() {
            return write!(f, "id");
        }
        let parts = self.moved.iter().map(|(a, b)| format!("{a}|{b}")).join(",");
        write!(f, "[{parts}]")
    }
}

impl Serialize for FiniteTransformation {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_points_are_dropped() {
        let t = FiniteTransformation::from_pairs([(0, 0), (1, 2)]);
        assert_eq!(t.support().collect::<Vec<_>>(), vec![1]);
        assert_eq!(t.with(1, 1), FiniteTransformation::identity());
        assert_eq!(t.to_string(), "[1|2]");
        assert_eq!(FiniteTransformation::identity().to_string(), "id");
    }

    #[test]
    fn composition_applies_right_operand_first() {
        let sigma = FiniteTransformation::replace(0, 1);
        let tau = FiniteTransformation::replace(1, 2);
        let st = sigma.compose(&tau);
        // st(0) = sigma(tau(0)) = sigma(0) = 1, st(1) = sigma(2) = 2
        assert_eq!(st.apply(0), 1);
        assert_eq!(st.apply(1), 2);
        let ts = tau.compose(&sigma);
        assert_eq!(ts.apply(0), 2);
    }

    #[test]
    fn injectivity_and_inverse() {
        assert!(FiniteTransformation::swap(0, 3).is_injective());
        assert!(!FiniteTransformation::replace(0, 1).is_injective());
        let p = FiniteTransformation::from_images(&[2, 0, 1]);
        let inv = p.inverse().unwrap();
        assert!(p.compose(&inv).is_identity());
        assert!(inv.compose(&p).is_identity());
        assert!(FiniteTransformation::replace(0, 1).inverse().is_err());
    }

    #[test]
    fn enumeration_sizes() {
        assert_eq!(FiniteTransformation::permutations(3).len(), 6);
        assert!(FiniteTransformation::permutations(3)[0].is_identity());
        // identity + 4*3 single moves + C(4,2)*3*3 double moves
        assert_eq!(FiniteTransformation::enumerate_bounded(4, 2).len(), 1 + 12 + 54);
    }
}
