//! Finite topological spaces on the base set `{0..n-1}`.
//!
//! Subsets of the base are bit masks (`u32`), so bases are limited to
//! [`MAX_POINTS`] points. Closure checks iterate over all pairs of opens,
//! which is fine in the intended regime of a dozen points or so.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest supported base cardinality.
pub const MAX_POINTS: usize = 32;

/// A subset of the base, one bit per point.
pub type PointSet = u32;

pub fn full_mask(n: usize) -> PointSet {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

pub fn mask_from_points(n: usize, points: &[usize]) -> Result<PointSet> {
    let mut mask = 0;
    for &p in points {
        if p >= n {
            return Err(Error::Malformed(format!(
                "point {p} is outside the base {{0..{}}}",
                n.saturating_sub(1)
            )));
        }
        mask |= 1 << p;
    }
    Ok(mask)
}

pub fn mask_points(mask: PointSet) -> Vec<usize> {
    (0..32).filter(|p| mask & (1 << p) != 0).collect()
}

/// Renders a mask as `{0,2}`.
pub fn format_mask(mask: PointSet) -> String {
    let pts: Vec<String> = mask_points(mask).iter().map(|p| p.to_string()).collect();
    format!("{{{}}}", pts.join(","))
}

/// First closure property a candidate family fails.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum TopologyViolation {
    MissingEmpty,
    MissingFull,
    UnionMissing { left: PointSet, right: PointSet },
    IntersectionMissing { left: PointSet, right: PointSet },
}

impl fmt::Display for TopologyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MissingEmpty => write!(f, "the empty set is not open"),
            Self::MissingFull => write!(f, "the full base is not open"),
            Self::UnionMissing { left, right } => {
                write!(f, "union {}∪{} missing", format_mask(*left), format_mask(*right))
            }
            Self::IntersectionMissing { left, right } => {
                write!(f, "intersection {}∩{} missing", format_mask(*left), format_mask(*right))
            }
        }
    }
}

/// Checks the topology axioms for `family` over `{0..n-1}`.
///
/// Returns `Ok(None)` when the family is a topology, `Ok(Some(v))` naming the
/// first violated closure, and `Err` on malformed input.
pub fn validate_topology(n: usize, family: &[PointSet]) -> Result<Option<TopologyViolation>> {
    check_base_size(n)?;
    let full = full_mask(n);
    if let Some(bad) = family.iter().find(|m| **m & !full != 0) {
        return Err(Error::Malformed(format!(
            "open set {} references a point outside {{0..{}}}",
            format_mask(*bad),
            n - 1
        )));
    }
    let opens: BTreeSet<PointSet> = family.iter().copied().collect();
    if !opens.contains(&0) {
        return Ok(Some(TopologyViolation::MissingEmpty));
    }
    for &a in &opens {
        for &b in opens.range(a..) {
            if !opens.contains(&(a | b)) {
                return Ok(Some(TopologyViolation::UnionMissing { left: a, right: b }));
            }
            if !opens.contains(&(a & b)) {
                return Ok(Some(TopologyViolation::IntersectionMissing { left: a, right: b }));
            }
        }
    }
    if !opens.contains(&full) {
        return Ok(Some(TopologyViolation::MissingFull));
    }
    Ok(None)
}

fn check_base_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_POINTS {
        return Err(Error::Malformed(format!(
            "base cardinality must be in 1..={MAX_POINTS}, got {n}"
        )));
    }
    Ok(())
}

/// A topology on a finite base, stored as the sorted family of its opens.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiniteTopology {
    n: usize,
    opens: Vec<PointSet>,
}

impl FiniteTopology {
    /// Builds a topology from an explicit family of opens.
    pub fn new(n: usize, family: &[PointSet]) -> Result<Self> {
        if let Some(violation) = validate_topology(n, family)? {
            return Err(Error::Malformed(format!("not a topology: {violation}")));
        }
        let mut opens: Vec<PointSet> = family.to_vec();
        opens.sort_unstable();
        opens.dedup();
        Ok(Self { n, opens })
    }

    pub fn discrete(n: usize) -> Result<Self> {
        check_base_size(n)?;
        if n > 16 {
            return Err(Error::Malformed(
                "discrete topology is only materialized for n <= 16".into(),
            ));
        }
        Ok(Self {
            n,
            opens: (0..=full_mask(n)).collect(),
        })
    }

    pub fn indiscrete(n: usize) -> Result<Self> {
        check_base_size(n)?;
        Ok(Self {
            n,
            opens: vec![0, full_mask(n)],
        })
    }

    /// The two-point space with opens ∅, {0}, {0,1}.
    pub fn sierpinski() -> Self {
        Self {
            n: 2,
            opens: vec![0b00, 0b01, 0b11],
        }
    }

    /// Smallest topology containing every set in `subbasis`.
    ///
    /// Always adjoins ∅ and the full base, even when `subbasis` is empty.
    pub fn from_subbasis(n: usize, subbasis: &[PointSet]) -> Result<Self> {
        check_base_size(n)?;
        let full = full_mask(n);
        if let Some(bad) = subbasis.iter().find(|m| **m & !full != 0) {
            return Err(Error::Malformed(format!(
                "subbasis set {} references a point outside {{0..{}}}",
                format_mask(*bad),
                n - 1
            )));
        }
        // finite intersections first, then unions
        let mut basis: BTreeSet<PointSet> = BTreeSet::from([full]);
        basis.extend(subbasis.iter().copied());
        loop {
            let snapshot: Vec<PointSet> = basis.iter().copied().collect();
            let before = basis.len();
            for (i, &a) in snapshot.iter().enumerate() {
                for &b in &snapshot[i + 1..] {
                    basis.insert(a & b);
                }
            }
            if basis.len() == before {
                break;
            }
        }
        let mut opens: BTreeSet<PointSet> = BTreeSet::from([0]);
        for &b in &basis {
            let current: Vec<PointSet> = opens.iter().copied().collect();
            for o in current {
                opens.insert(o | b);
            }
        }
        Ok(Self {
            n,
            opens: opens.into_iter().collect(),
        })
    }

    /// Every topology on `{0..n-1}`, by brute force over all families of
    /// subsets. Only feasible for `n <= 3`.
    pub fn enumerate_all(n: usize) -> Result<Vec<Self>> {
        check_base_size(n)?;
        if n > 3 {
            return Err(Error::Resource(format!(
                "brute-force topology enumeration is limited to n <= 3, got {n}"
            )));
        }
        let full = full_mask(n);
        let middle: Vec<PointSet> = (1..full).collect();
        let mut out = Vec::new();
        for choice in 0u64..(1u64 << middle.len()) {
            let mut family = vec![0, full];
            family.extend(
                middle
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| choice & (1 << i) != 0)
                    .map(|(_, m)| *m),
            );
            if validate_topology(n, &family)?.is_none() {
                out.push(Self::new(n, &family)?);
            }
        }
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn opens(&self) -> &[PointSet] {
        &self.opens
    }

    pub fn full(&self) -> PointSet {
        full_mask(self.n)
    }

    pub fn is_open(&self, set: PointSet) -> bool {
        self.opens.binary_search(&set).is_ok()
    }

    pub fn is_discrete(&self) -> bool {
        self.n <= 16 && self.opens.len() == 1usize << self.n
    }

    /// Largest open subset of `set`.
    pub fn interior_of(&self, set: PointSet) -> PointSet {
        self.opens.iter().filter(|o| **o & !set == 0).fold(0, |acc, o| acc | o)
    }
}

impl fmt::Display for FiniteTopology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sets: Vec<String> = self.opens.iter().map(|m| format_mask(*m)).collect();
        write!(f, "{}", sets.join(", "))
    }
}
