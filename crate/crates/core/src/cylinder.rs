//! Finite-support cylinder subsets of `^ωU` over a finite topological base.
//!
//! An element is a finite sorted support `S` together with the set of tuples
//! `S → U` it admits; it denotes every sequence whose restriction to `S` is
//! one of those tuples. Tuples are packed into a bit vector of length
//! `n^|S|`, indexed in mixed radix with the first support coordinate most
//! significant. Elements are always kept canonical (no coordinate the rows
//! ignore), so structural equality coincides with equality of denotations.

use std::fmt;

use rand::Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::topology::FiniteTopology;
use crate::transform::FiniteTransformation;

/// Default cap on the number of coordinates an element may depend on.
pub const DEFAULT_SUPPORT_CAP: usize = 8;

/// Hard limit on `n^|support|`.
const MAX_ROWS: usize = 1 << 24;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CylinderElement {
    n: u8,
    support: Vec<usize>,
    bits: Vec<u64>,
}

fn word_count(rows: usize) -> usize {
    rows.div_ceil(64)
}

fn get_bit(bits: &[u64], i: usize) -> bool {
    bits[i / 64] >> (i % 64) & 1 == 1
}

fn set_bit(bits: &mut [u64], i: usize) {
    bits[i / 64] |= 1 << (i % 64);
}

fn row_count(n: usize, k: usize) -> Result<usize> {
    let mut rows: usize = 1;
    for _ in 0..k {
        rows = rows
            .checked_mul(n)
            .filter(|r| *r <= MAX_ROWS)
            .ok_or_else(|| Error::Resource(format!("{n}^{k} rows exceed the row limit")))?;
    }
    Ok(rows)
}

/// Calls `f(index, digits)` for every tuple over `k` coordinates in index order.
fn for_each_tuple(n: usize, k: usize, mut f: impl FnMut(usize, &[usize])) {
    let total = n.pow(k as u32);
    let mut digits = vec![0usize; k];
    for idx in 0..total {
        f(idx, &digits);
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < n {
                break;
            }
            *d = 0;
        }
    }
}

impl CylinderElement {
    fn from_parts(n: usize, support: Vec<usize>, bits: Vec<u64>) -> Self {
        Self {
            n: n as u8,
            support,
            bits,
        }
    }

    /// Builds `support`/`bits` by evaluating `f` on every tuple, then canonicalizes.
    fn tabulate(n: usize, support: Vec<usize>, mut f: impl FnMut(&[usize]) -> bool) -> Result<Self> {
        let rows = row_count(n, support.len())?;
        let mut bits = vec![0u64; word_count(rows)];
        for_each_tuple(n, support.len(), |idx, digits| {
            if f(digits) {
                set_bit(&mut bits, idx);
            }
        });
        Ok(Self::from_parts(n, support, bits).canonical())
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    /// The dimension set: coordinates the element genuinely depends on.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn depends_on(&self, coordinate: usize) -> bool {
        self.support.binary_search(&coordinate).is_ok()
    }

    pub fn max_coordinate(&self) -> Option<usize> {
        self.support.last().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|w| *w == 0)
    }

    pub fn is_one(&self) -> bool {
        self.support.is_empty() && !self.is_zero()
    }

    fn rows(&self) -> usize {
        self.n().pow(self.support.len() as u32)
    }

    fn stride(&self, position: usize) -> usize {
        self.n().pow((self.support.len() - 1 - position) as u32)
    }

    /// Per-position strides of this element's index when its coordinates are
    /// looked up through `map` inside a tuple over `target`.
    fn lookup(&self, target: &[usize], map: impl Fn(usize) -> usize) -> Vec<usize> {
        let mut strides = vec![0usize; target.len()];
        for (p, c) in self.support.iter().enumerate() {
            let q = target
                .binary_search(&map(*c))
                .expect("lookup target must cover the mapped support");
            strides[q] += self.stride(p);
        }
        strides
    }

    fn bit_at(&self, strides: &[usize], digits: &[usize]) -> bool {
        let idx: usize = strides.iter().zip(digits).map(|(s, d)| s * d).sum();
        get_bit(&self.bits, idx)
    }

    /// Whether the sequence `s` (given coordinate-wise) belongs to the element.
    pub fn contains(&self, s: impl Fn(usize) -> usize) -> bool {
        let mut idx = 0;
        for c in &self.support {
            idx = idx * self.n() + s(*c);
        }
        get_bit(&self.bits, idx)
    }

    /// Tuples over the support, in index order.
    pub fn tuples(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for_each_tuple(self.n(), self.support.len(), |idx, digits| {
            if get_bit(&self.bits, idx) {
                out.push(digits.to_vec());
            }
        });
        out
    }

    /// Drops every coordinate the rows are closed under changing.
    fn canonical(self) -> Self {
        let n = self.n();
        let k = self.support.len();
        let redundant: Vec<bool> = (0..k)
            .map(|p| {
                let stride = self.stride(p);
                let mut ok = true;
                for_each_tuple(n, k, |idx, digits| {
                    if ok && digits[p] == 0 {
                        let b = get_bit(&self.bits, idx);
                        ok = (1..n).all(|v| get_bit(&self.bits, idx + v * stride) == b);
                    }
                });
                ok
            })
            .collect();
        if !redundant.iter().any(|r| *r) {
            return self;
        }
        let kept: Vec<usize> = (0..k).filter(|p| !redundant[*p]).collect();
        let support: Vec<usize> = kept.iter().map(|p| self.support[*p]).collect();
        let strides: Vec<usize> = kept.iter().map(|p| self.stride(*p)).collect();
        let rows = n.pow(kept.len() as u32);
        let mut bits = vec![0u64; word_count(rows)];
        for_each_tuple(n, kept.len(), |idx, digits| {
            if self.bit_at(&strides, digits) {
                set_bit(&mut bits, idx);
            }
        });
        Self::from_parts(n, support, bits)
    }
}

impl fmt::Display for CylinderElement {
    /// Renders as `support (0,1) rows [(0,0),(1,1)]`, the same form the
    /// problem-file parser accepts.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let support: Vec<String> = self.support.iter().map(|c| c.to_string()).collect();
        let rows: Vec<String> = self
            .tuples()
            .iter()
            .map(|t| {
                let vals: Vec<String> = t.iter().map(|v| v.to_string()).collect();
                format!("({})", vals.join(","))
            })
            .collect();
        write!(f, "support ({}) rows [{}]", support.join(","), rows.join(","))
    }
}

impl fmt::Debug for CylinderElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for CylinderElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

/// The base `U` with its topology, plus the support cap every operation honours.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseSpace {
    topology: FiniteTopology,
    support_cap: usize,
}

impl BaseSpace {
    pub fn new(topology: FiniteTopology) -> Result<Self> {
        if topology.n() > u8::MAX as usize {
            return Err(Error::Malformed("base too large".into()));
        }
        Ok(Self {
            topology,
            support_cap: DEFAULT_SUPPORT_CAP,
        })
    }

    pub fn discrete(n: usize) -> Result<Self> {
        Self::new(FiniteTopology::discrete(n)?)
    }

    pub fn sierpinski() -> Self {
        Self::new(FiniteTopology::sierpinski()).expect("two points fit")
    }

    pub fn with_support_cap(mut self, cap: usize) -> Self {
        self.support_cap = cap;
        self
    }

    pub fn n(&self) -> usize {
        self.topology.n()
    }

    pub fn topology(&self) -> &FiniteTopology {
        &self.topology
    }

    pub fn support_cap(&self) -> usize {
        self.support_cap
    }

    fn check_cap(&self, needed: usize) -> Result<()> {
        if needed > self.support_cap {
            return Err(Error::SupportCap {
                needed,
                cap: self.support_cap,
            });
        }
        Ok(())
    }

    fn check_base(&self, x: &CylinderElement) -> Result<()> {
        if x.n() != self.n() {
            return Err(Error::BaseMismatch {
                left: self.n(),
                right: x.n(),
            });
        }
        Ok(())
    }

    /// Canonical element from a raw support and tuple list.
    ///
    /// The support may be given in any order; tuples follow that order.
    pub fn element(&self, support: &[usize], rows: &[Vec<usize>]) -> Result<CylinderElement> {
        let n = self.n();
        let mut order: Vec<usize> = (0..support.len()).collect();
        order.sort_by_key(|p| support[*p]);
        let sorted: Vec<usize> = order.iter().map(|p| support[*p]).collect();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Malformed(format!("repeated coordinate in support {support:?}")));
        }
        self.check_cap(sorted.len())?;
        let total = row_count(n, sorted.len())?;
        let mut bits = vec![0u64; word_count(total)];
        for row in rows {
            if row.len() != support.len() {
                return Err(Error::Malformed(format!(
                    "tuple {row:?} has arity {}, support has {} coordinates",
                    row.len(),
                    support.len()
                )));
            }
            let mut idx = 0;
            for p in &order {
                let v = row[*p];
                if v >= n {
                    return Err(Error::Malformed(format!(
                        "tuple {row:?} uses point {v}, base has {n} points"
                    )));
                }
                idx = idx * n + v;
            }
            set_bit(&mut bits, idx);
        }
        Ok(CylinderElement::from_parts(n, sorted, bits).canonical())
    }

    pub fn zero(&self) -> CylinderElement {
        CylinderElement::from_parts(self.n(), Vec::new(), vec![0])
    }

    pub fn one(&self) -> CylinderElement {
        CylinderElement::from_parts(self.n(), Vec::new(), vec![1])
    }

    /// The cylinder `s_j = v`.
    pub fn literal(&self, j: usize, v: usize) -> Result<CylinderElement> {
        if v >= self.n() {
            return Err(Error::Malformed(format!(
                "point {v} outside base of {} points",
                self.n()
            )));
        }
        CylinderElement::tabulate(self.n(), vec![j], |d| d[0] == v)
    }

    /// `d_ij`: sequences whose `i`-th and `j`-th entries coincide.
    pub fn diagonal(&self, i: usize, j: usize) -> Result<CylinderElement> {
        if i == j {
            return Ok(self.one());
        }
        self.check_cap(2)?;
        CylinderElement::tabulate(self.n(), vec![i.min(j), i.max(j)], |d| d[0] == d[1])
    }

    pub fn complement(&self, x: &CylinderElement) -> CylinderElement {
        let rows = x.rows();
        let mut bits: Vec<u64> = x.bits.iter().map(|w| !w).collect();
        let tail = rows % 64;
        if tail != 0 {
            *bits.last_mut().expect("at least one word") &= (1u64 << tail) - 1;
        }
        CylinderElement::from_parts(x.n(), x.support.clone(), bits)
    }

    fn union_support(&self, x: &CylinderElement, y: &CylinderElement) -> Result<Vec<usize>> {
        self.check_base(x)?;
        self.check_base(y)?;
        let mut support: Vec<usize> = x.support.iter().chain(&y.support).copied().collect();
        support.sort_unstable();
        support.dedup();
        self.check_cap(support.len())?;
        Ok(support)
    }

    fn combine(
        &self,
        x: &CylinderElement,
        y: &CylinderElement,
        op: impl Fn(bool, bool) -> bool,
        word_op: impl Fn(u64, u64) -> u64,
    ) -> Result<CylinderElement> {
        if x.support == y.support {
            self.check_base(x)?;
            self.check_base(y)?;
            let bits = x.bits.iter().zip(&y.bits).map(|(a, b)| word_op(*a, *b)).collect();
            return Ok(CylinderElement::from_parts(x.n(), x.support.clone(), bits).canonical());
        }
        let support = self.union_support(x, y)?;
        let lx = x.lookup(&support, |c| c);
        let ly = y.lookup(&support, |c| c);
        CylinderElement::tabulate(self.n(), support, |d| op(x.bit_at(&lx, d), y.bit_at(&ly, d)))
    }

    pub fn meet(&self, x: &CylinderElement, y: &CylinderElement) -> Result<CylinderElement> {
        self.combine(x, y, |a, b| a && b, |a, b| a & b)
    }

    /// `x + y`, i.e. `-(-x · -y)`.
    pub fn join(&self, x: &CylinderElement, y: &CylinderElement) -> Result<CylinderElement> {
        self.combine(x, y, |a, b| a || b, |a, b| a | b)
    }

    pub fn meet_all<'a>(&self, xs: impl IntoIterator<Item = &'a CylinderElement>) -> Result<CylinderElement> {
        xs.into_iter().try_fold(self.one(), |acc, x| self.meet(&acc, x))
    }

    /// `c_i x`: projection along coordinate `i`.
    pub fn cylindrify(&self, i: usize, x: &CylinderElement) -> Result<CylinderElement> {
        self.check_base(x)?;
        let Ok(p) = x.support.binary_search(&i) else {
            return Ok(x.clone());
        };
        let stride = x.stride(p);
        let support: Vec<usize> = x.support.iter().copied().filter(|c| *c != i).collect();
        let n = self.n();
        let lookup: Vec<usize> = support
            .iter()
            .map(|c| x.stride(x.support.binary_search(c).expect("subset")))
            .collect();
        CylinderElement::tabulate(n, support, |d| {
            let base: usize = lookup.iter().zip(d).map(|(s, v)| s * v).sum();
            (0..n).any(|v| get_bit(&x.bits, base + v * stride))
        })
    }

    /// `c_i^∂ x = -c_i -x`.
    pub fn cylindrify_dual(&self, i: usize, x: &CylinderElement) -> Result<CylinderElement> {
        Ok(self.complement(&self.cylindrify(i, &self.complement(x))?))
    }

    /// `s_τ x = {s : s∘τ ∈ x}`.
    pub fn substitute(&self, tau: &FiniteTransformation, x: &CylinderElement) -> Result<CylinderElement> {
        self.check_base(x)?;
        if tau.is_identity() || x.support.iter().all(|c| tau.apply(*c) == *c) {
            return Ok(x.clone());
        }
        let mut support: Vec<usize> = x.support.iter().map(|c| tau.apply(*c)).collect();
        support.sort_unstable();
        support.dedup();
        self.check_cap(support.len())?;
        let lx = x.lookup(&support, |c| tau.apply(c));
        CylinderElement::tabulate(self.n(), support, |d| x.bit_at(&lx, d))
    }

    /// `I(k) x`: `s` belongs iff `s_k` lies in the interior of
    /// `{u : s[k:=u] ∈ x}`.
    pub fn interior(&self, k: usize, x: &CylinderElement) -> Result<CylinderElement> {
        self.check_base(x)?;
        let Ok(p) = x.support.binary_search(&k) else {
            // the fibre along k is all or nothing, both open
            return Ok(x.clone());
        };
        let n = self.n();
        let stride = x.stride(p);
        let lx = x.lookup(&x.support, |c| c);
        let support = x.support.clone();
        CylinderElement::tabulate(n, support, |d| {
            let base = lx.iter().zip(d).map(|(s, v)| s * v).sum::<usize>() - d[p] * stride;
            let fibre = (0..n)
                .filter(|u| get_bit(&x.bits, base + u * stride))
                .fold(0u32, |m, u| m | 1 << u);
            self.topology.interior_of(fibre) & (1 << d[p]) != 0
        })
    }

    pub fn leq(&self, x: &CylinderElement, y: &CylinderElement) -> Result<bool> {
        Ok(self.meet(x, &self.complement(y))?.is_zero())
    }

    /// Uniformly random raw element over `coords`, canonicalized.
    pub fn random_element(&self, rng: &mut impl Rng, coords: &[usize]) -> Result<CylinderElement> {
        let mut support = coords.to_vec();
        support.sort_unstable();
        support.dedup();
        self.check_cap(support.len())?;
        CylinderElement::tabulate(self.n(), support, |_| rng.gen_bool(0.5))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two() -> BaseSpace {
        BaseSpace::discrete(2).unwrap()
    }

    fn lit(b: &BaseSpace, j: usize, v: usize) -> CylinderElement {
        b.literal(j, v).unwrap()
    }

    #[test]
    fn canonicalize_examples() {
        let b = two();
        let all: Vec<Vec<usize>> = vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]];
        assert_eq!(b.element(&[0, 1], &all).unwrap(), b.one());
        let x = b.element(&[0, 1], &[vec![0, 0], vec![0, 1]]).unwrap();
        assert_eq!(x.support(), &[0]);
        assert_eq!(x.tuples(), vec![vec![0]]);
        assert_eq!(x, lit(&b, 0, 0));
        assert_eq!(b.element(&[0], &[]).unwrap(), b.zero());
    }

    #[test]
    fn element_validation() {
        let b = two();
        assert!(matches!(b.element(&[0, 1], &[vec![0]]), Err(Error::Malformed(_))));
        assert!(matches!(b.element(&[0], &[vec![2]]), Err(Error::Malformed(_))));
        assert!(matches!(b.element(&[0, 0], &[]), Err(Error::Malformed(_))));
        let wide: Vec<usize> = (0..9).collect();
        assert!(matches!(
            b.element(&wide, &[]),
            Err(Error::SupportCap { needed: 9, cap: 8 })
        ));
    }

    #[test]
    fn unsorted_support_reorders_tuples() {
        let b = two();
        let x = b.element(&[1, 0], &[vec![1, 0]]).unwrap();
        assert_eq!(x.support(), &[0, 1]);
        assert_eq!(x.tuples(), vec![vec![0, 1]]);
    }

    #[test]
    fn complement_examples() {
        let b = two();
        assert_eq!(b.complement(&b.one()), b.zero());
        assert_eq!(b.complement(&lit(&b, 0, 0)), lit(&b, 0, 1));
    }

    #[test]
    fn meet_examples() {
        let b = two();
        let d01 = b.diagonal(0, 1).unwrap();
        let m = b.meet(&d01, &lit(&b, 0, 0)).unwrap();
        assert_eq!(m.support(), &[0, 1]);
        assert_eq!(m.tuples(), vec![vec![0, 0]]);
        assert_eq!(b.meet(&m, &b.one()).unwrap(), m);
        assert!(b.meet(&m, &b.complement(&m)).unwrap().is_zero());
    }

    #[test]
    fn base_mismatch_is_an_error() {
        let b2 = two();
        let b3 = BaseSpace::discrete(3).unwrap();
        let x = b3.literal(0, 2).unwrap();
        assert!(matches!(b2.meet(&lit(&b2, 0, 0), &x), Err(Error::BaseMismatch { .. })));
    }

    #[test]
    fn cylindrify_examples() {
        let b = two();
        assert_eq!(b.cylindrify(0, &b.zero()).unwrap(), b.zero());
        assert_eq!(b.cylindrify(0, &lit(&b, 0, 0)).unwrap(), b.one());
        assert_eq!(b.cylindrify(5, &lit(&b, 0, 0)).unwrap(), lit(&b, 0, 0));
        let x = b.meet(&b.diagonal(0, 1).unwrap(), &lit(&b, 0, 0)).unwrap();
        assert_eq!(b.cylindrify(0, &x).unwrap(), lit(&b, 1, 0));
    }

    #[test]
    fn diagonal_examples() {
        let b = two();
        assert_eq!(b.diagonal(3, 3).unwrap(), b.one());
        let d = b.diagonal(0, 1).unwrap();
        assert_eq!(d.tuples(), vec![vec![0, 0], vec![1, 1]]);
        assert_eq!(b.diagonal(1, 0).unwrap(), d);
        assert!(b.meet(&d, &b.complement(&d)).unwrap().is_zero());
    }

    #[test]
    fn substitute_examples() {
        let b = two();
        let x = lit(&b, 0, 0);
        assert_eq!(b.substitute(&FiniteTransformation::identity(), &x).unwrap(), x);
        assert_eq!(
            b.substitute(&FiniteTransformation::replace(0, 1), &x).unwrap(),
            lit(&b, 1, 0)
        );
        // non-injective on the support: s_[1|0] d01 = 1
        assert_eq!(
            b.substitute(&FiniteTransformation::replace(1, 0), &b.diagonal(0, 1).unwrap())
                .unwrap(),
            b.one()
        );
        // the swap permutes tuple entries
        let y = b.element(&[0, 1], &[vec![0, 1]]).unwrap();
        assert_eq!(
            b.substitute(&FiniteTransformation::swap(0, 1), &y).unwrap(),
            b.element(&[0, 1], &[vec![1, 0]]).unwrap()
        );
    }

    #[test]
    fn interior_examples() {
        let s = BaseSpace::sierpinski();
        assert_eq!(s.interior(0, &s.literal(0, 1).unwrap()).unwrap(), s.zero());
        let x = s.literal(0, 0).unwrap();
        assert_eq!(s.interior(0, &x).unwrap(), x);
        assert_eq!(s.interior(3, &s.one()).unwrap(), s.one());
        // a coordinate outside the support leaves the element alone
        assert_eq!(
            s.interior(1, &s.literal(0, 1).unwrap()).unwrap(),
            s.literal(0, 1).unwrap()
        );
        let d = two();
        let dd = d.diagonal(0, 1).unwrap();
        assert_eq!(d.interior(0, &dd).unwrap(), dd);
    }

    #[test]
    fn leq_examples() {
        let b = two();
        let x = lit(&b, 0, 0);
        assert!(b.leq(&b.zero(), &x).unwrap());
        assert!(b.leq(&b.meet(&x, &lit(&b, 1, 0)).unwrap(), &x).unwrap());
        assert!(!b.leq(&x, &b.diagonal(0, 1).unwrap()).unwrap());
    }

    #[test]
    fn contains_reads_the_denotation() {
        let b = two();
        let d = b.diagonal(2, 5).unwrap();
        assert!(d.contains(|c| if c == 2 || c == 5 { 1 } else { 0 }));
        assert!(!d.contains(|c| if c == 2 { 1 } else { 0 }));
    }

    #[test]
    fn random_elements_are_canonical() {
        let b = BaseSpace::discrete(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let x = b.random_element(&mut rng, &[0, 1, 2]).unwrap();
            let rebuilt = b.element(x.support(), &x.tuples()).unwrap();
            assert_eq!(rebuilt, x);
        }
    }
}
