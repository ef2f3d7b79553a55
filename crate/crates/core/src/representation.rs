//! The representation induced by a chain: the diagonal quotient, the
//! membership oracle `f(x) ∋ τ̄ ⇔ s_τ x ∈ F`, and pointwise verification of
//! the homomorphism and interior equations.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::chains::{run_schedule, ChainState, Membership, ScheduleConfig, Task, TypeFamily};
use crate::cylinder::{BaseSpace, CylinderElement};
use crate::error::{Error, Result};
use crate::topology::{FiniteTopology, PointSet, MAX_POINTS};
use crate::transform::FiniteTransformation;

/// Blocks of `{0..bound-1}` under `i E j ⇔ d_ij ∈ F`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiagPartition {
    pub bound: usize,
    pub blocks: Vec<Vec<usize>>,
    /// Triples `(k,l,u)` whose transitivity was confirmed in the chain.
    pub transitivity_checks: usize,
}

impl DiagPartition {
    /// Index of the block holding `i`.
    pub fn block_of(&self, i: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(&i))
    }

    /// Least member of `i`'s block (`i` itself outside the bound).
    pub fn representative(&self, i: usize) -> usize {
        self.block_of(i).map(|b| self.blocks[b][0]).unwrap_or(i)
    }

    pub fn same_block(&self, i: usize, j: usize) -> bool {
        i == j || self.block_of(i).is_some_and(|b| self.blocks[b].contains(&j))
    }

    pub fn is_discrete(&self) -> bool {
        self.blocks.iter().all(|b| b.len() == 1)
    }
}

/// Decides every `d_ij` with `i < j < bound` and groups coordinates.
pub fn diag_partition(chain: &mut ChainState, bound: usize) -> Result<DiagPartition> {
    if bound == 0 {
        return Err(Error::Precondition("partition bound must be at least 1".into()));
    }
    let base = chain.base().clone();
    let mut parent: Vec<usize> = (0..bound).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    let mut related = BTreeSet::new();
    for i in 0..bound {
        for j in i + 1..bound {
            if chain.membership(&base.diagonal(i, j)?, true)? == Membership::In {
                related.insert((i, j));
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    // d_kl · d_lu ≤ c_l(d_kl · d_lu) = d_ku
    let mut checks = 0;
    for &(k, l) in &related {
        for &(l2, u) in &related {
            if l2 == l && k != u {
                checks += 1;
                if !chain.generated_filter_contains(&base.diagonal(k, u)?)? {
                    return Err(Error::Precondition(format!(
                        "diagonals {k}{l} and {l}{u} are in the chain but {k}{u} is not"
                    )));
                }
            }
        }
    }
    let mut blocks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..bound {
        let r = find(&mut parent, i);
        blocks.entry(r).or_default().push(i);
    }
    Ok(DiagPartition {
        bound,
        blocks: blocks.into_values().collect(),
        transitivity_checks: checks,
    })
}

/// The chain together with its diagonal quotient.
#[derive(Debug, Clone)]
pub struct Representation {
    chain: ChainState,
    partition: DiagPartition,
    seed: CylinderElement,
}

impl Representation {
    pub fn new(mut chain: ChainState, bound: usize) -> Result<Self> {
        let partition = diag_partition(&mut chain, bound)?;
        let seed = chain.seed().clone();
        Ok(Self { chain, partition, seed })
    }

    pub fn chain(&self) -> &ChainState {
        &self.chain
    }

    pub fn chain_mut(&mut self) -> &mut ChainState {
        &mut self.chain
    }

    pub fn partition(&self) -> &DiagPartition {
        &self.partition
    }

    pub fn seed(&self) -> &CylinderElement {
        &self.seed
    }

    pub fn base(&self) -> &BaseSpace {
        self.chain.base()
    }

    /// Whether `τ̄ ∈ f(x)`, deciding `s_τ x` if the chain has not yet.
    pub fn rep_membership(&mut self, x: &CylinderElement, tau: &FiniteTransformation) -> Result<bool> {
        let y = self.base().substitute(tau, x)?;
        Ok(self.chain.membership(&y, true)? == Membership::In)
    }

    /// Whether coordinates `a` and `b` name the same point of the quotient.
    pub fn equivalent(&mut self, a: usize, b: usize) -> Result<bool> {
        if a == b {
            return Ok(true);
        }
        let d = self.base().diagonal(a, b)?;
        Ok(self.chain.membership(&d, true)? == Membership::In)
    }

    /// Whether `f` answers alike for `σ` and `τ`, which must agree up to `E`
    /// on the support of `x`.
    pub fn check_well_defined(
        &mut self,
        x: &CylinderElement,
        sigma: &FiniteTransformation,
        tau: &FiniteTransformation,
    ) -> Result<bool> {
        for &i in x.support() {
            let (a, b) = (sigma.apply(i), tau.apply(i));
            let d = self.base().diagonal(a, b)?;
            if a != b && !self.chain.generated_filter_contains(&d)? {
                return Err(Error::Precondition(format!(
                    "{sigma} and {tau} are not E-equivalent at coordinate {i}"
                )));
            }
        }
        Ok(self.rep_membership(x, sigma)? == self.rep_membership(x, tau)?)
    }
}

/// Runs the chain construction from `a` and forms its representation.
pub fn build_representation(
    base: &BaseSpace,
    a: CylinderElement,
    steps: usize,
    rng_seed: u64,
    config: &ScheduleConfig,
    bound: usize,
) -> Result<Representation> {
    if a.is_zero() {
        return Err(Error::Precondition("the represented element must be nonzero".into()));
    }
    let chain = run_schedule(base, a, TypeFamily::empty(), steps, rng_seed, config)?;
    Representation::new(chain, bound)
}

/// Outcome of a batch of pointwise checks.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CheckReport {
    pub checks: usize,
    pub failures: Vec<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }
}

/// Pointwise homomorphism checks of `f` on `terms × taus`.
pub fn verify_homomorphism(
    rep: &mut Representation,
    terms: &[CylinderElement],
    taus: &[FiniteTransformation],
) -> Result<CheckReport> {
    let base = rep.base().clone();
    let mut report = CheckReport::default();
    for tau in taus {
        let mut member = Vec::with_capacity(terms.len());
        for x in terms {
            member.push(rep.rep_membership(x, tau)?);
        }
        for (x, &fx) in terms.iter().zip(&member) {
            let fnx = rep.rep_membership(&base.complement(x), tau)?;
            report.record(fnx != fx, || {
                format!("f(-x) is not the complement of f(x) at {tau}, x=<{x}>")
            });
        }
        for a in 0..terms.len() {
            for b in a + 1..terms.len() {
                let (x, y) = (&terms[a], &terms[b]);
                let meet = rep.rep_membership(&base.meet(x, y)?, tau)?;
                report.record(meet == (member[a] && member[b]), || {
                    format!("f(x·y) ≠ f(x) ∩ f(y) at {tau}, x=<{x}>, y=<{y}>")
                });
                let join = rep.rep_membership(&base.join(x, y)?, tau)?;
                report.record(join == (member[a] || member[b]), || {
                    format!("f(x+y) ≠ f(x) ∪ f(y) at {tau}, x=<{x}>, y=<{y}>")
                });
            }
        }
        let bound = rep.partition().bound;
        for i in 0..bound {
            for j in 0..bound {
                let fd = rep.rep_membership(&base.diagonal(i, j)?, tau)?;
                let e = rep.equivalent(tau.apply(i), tau.apply(j))?;
                report.record(fd == e, || format!("f(d_{i}{j}) disagrees with E at {tau}"));
            }
        }
        for x in terms {
            let ks: Vec<usize> = if x.support().is_empty() {
                vec![0]
            } else {
                x.support().to_vec()
            };
            for k in ks {
                check_cylindrification(rep, x, k, tau, &mut report)?;
            }
        }
    }
    Ok(report)
}

/// `τ̄ ∈ f(c_k x)` iff some `k`-variant of `τ` lies in `f(x)`.
fn check_cylindrification(
    rep: &mut Representation,
    x: &CylinderElement,
    k: usize,
    tau: &FiniteTransformation,
    report: &mut CheckReport,
) -> Result<()> {
    let base = rep.base().clone();
    let ckx = base.cylindrify(k, x)?;
    let inside = rep.rep_membership(&ckx, tau)?;
    if inside {
        let mut avoid: BTreeSet<usize> = x.support().iter().map(|c| tau.apply(*c)).collect();
        avoid.extend(tau.moved().flat_map(|(a, b)| [a, b]));
        avoid.extend(x.support().iter().copied());
        avoid.insert(k);
        let u0 = rep.chain.fresh_avoiding(avoid);
        let shifted = tau.with(k, u0);
        let z = base.substitute(&shifted, x)?;
        let lhs = base.substitute(tau, &ckx)?;
        let rhs = base.cylindrify(u0, &z)?;
        report.record(lhs == rhs, || {
            format!("s_τ c_{k} x ≠ c_{u0} s_τ[{k}:={u0}] x at {tau}, x=<{x}>")
        });
        if !z.depends_on(u0) {
            // x does not depend on k: c_k x = x and the identity is its own witness
            let ok = rep.rep_membership(x, tau)?;
            report.record(ok, || format!("f(x) misses {tau} although f(c_{k} x) has it, x=<{x}>"));
            return Ok(());
        }
        rep.chain.step(&Task::Henkin { k: u0, x: z })?;
        let w = rep.chain.henkin_log().last().expect("just recorded").witness;
        let ok = rep.rep_membership(x, &tau.with(k, w))?;
        report.record(ok, || {
            format!("Henkin witness {w} for c_{k} x at {tau} does not land in f(x), x=<{x}>")
        });
    } else {
        for w in 0..rep.partition().bound {
            let variant = rep.rep_membership(x, &tau.with(k, w))?;
            report.record(!variant, || {
                format!("{tau}[{k}:={w}] is in f(x) but {tau} is not in f(c_{k} x), x=<{x}>")
            });
        }
    }
    Ok(())
}

/// One member of `q`: the coordinates `k < k_bound` with `s_[i|k] I(i)p ∈ F`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QEntry {
    pub term: CylinderElement,
    pub coordinate: usize,
    pub table: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteriorWitnessFamily {
    pub k_bound: usize,
    pub entries: Vec<QEntry>,
}

/// Tabulates the `q` predicates for every term and coordinate `i < index_bound`.
pub fn interior_witnesses(
    rep: &mut Representation,
    terms: &[CylinderElement],
    index_bound: usize,
    k_bound: usize,
) -> Result<InteriorWitnessFamily> {
    let base = rep.base().clone();
    let mut entries = Vec::new();
    for p in terms {
        for i in 0..index_bound {
            let ip = base.interior(i, p)?;
            let mut table = Vec::new();
            for k in 0..k_bound {
                if rep.rep_membership(&ip, &FiniteTransformation::replace(i, k))? {
                    table.push(k);
                }
            }
            entries.push(QEntry {
                term: p.clone(),
                coordinate: i,
                table,
            });
        }
    }
    Ok(InteriorWitnessFamily { k_bound, entries })
}

/// Per-transformation verdict for `Ψ(I(i)p) = J(i)Ψ(p)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteriorVerdict {
    pub tau: FiniteTransformation,
    /// `τ̄ ∈ Ψ(I(i)p)`.
    pub lhs: bool,
    /// Left to right: the fresh-coordinate witness set is open around `τ(i)`
    /// and included in the `i`-section of `Ψ(p)`.
    pub forward: bool,
    /// Right to left: every `q` member around `τ(i)` included in the section
    /// forces `τ̄ ∈ Ψ(I(i)p)`.
    pub converse: bool,
    /// Number of `q` members that witnessed membership on the right.
    pub witnesses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteriorReport {
    pub term: CylinderElement,
    pub coordinate: usize,
    pub verdicts: Vec<InteriorVerdict>,
}

impl InteriorReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.forward && v.converse)
    }
}

/// Checks both directions of the interior equation at each sampled `τ`.
pub fn verify_interior_rep(
    rep: &mut Representation,
    q: &InteriorWitnessFamily,
    p: &CylinderElement,
    i: usize,
    taus: &[FiniteTransformation],
) -> Result<InteriorReport> {
    let base = rep.base().clone();
    let ip = base.interior(i, p)?;
    let mut verdicts = Vec::with_capacity(taus.len());
    for tau in taus {
        let lhs = rep.rep_membership(&ip, tau)?;
        let mut avoid: BTreeSet<usize> = p.support().iter().map(|c| tau.apply(*c)).collect();
        avoid.extend(tau.moved().flat_map(|(a, b)| [a, b]));
        avoid.extend(p.support().iter().copied());
        avoid.insert(i);
        for e in &q.entries {
            avoid.extend(e.term.support().iter().copied());
            avoid.insert(e.coordinate);
        }
        let w = rep.chain.fresh_avoiding(avoid);
        let target = tau.apply(i);
        // the i-section of Ψ(p), as a formula in the free coordinate w
        let section = base.substitute(&tau.with(i, w), p)?;

        let forward = if lhs {
            let open = base.interior(w, &section)?;
            let back = base.substitute(&FiniteTransformation::replace(w, target), &open)?;
            let same = back == base.substitute(tau, &ip)?;
            let inclusion = base.cylindrify_dual(w, &base.join(&base.complement(&open), &section)?)?;
            same && rep.chain.membership(&inclusion, true)? == Membership::In
        } else {
            true
        };

        let mut converse = true;
        let mut witnesses = 0;
        for e in &q.entries {
            let opened = base.interior(e.coordinate, &e.term)?;
            let around = base.substitute(&FiniteTransformation::replace(e.coordinate, target), &opened)?;
            if rep.chain.membership(&around, true)? != Membership::In {
                continue;
            }
            let member = base.substitute(&FiniteTransformation::replace(e.coordinate, w), &opened)?;
            let inclusion = base.cylindrify_dual(w, &base.join(&base.complement(&member), &section)?)?;
            if rep.chain.membership(&inclusion, true)? == Membership::In {
                witnesses += 1;
                if !lhs {
                    converse = false;
                }
            }
        }
        verdicts.push(InteriorVerdict {
            tau: tau.clone(),
            lhs,
            forward,
            converse,
            witnesses,
        });
    }
    Ok(InteriorReport {
        term: p.clone(),
        coordinate: i,
        verdicts,
    })
}

/// The topology generated on the quotient points below `k_bound` by the
/// `q` tables, and whether generating it added sets beyond the tables.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientTopology {
    pub points: Vec<usize>,
    pub topology: FiniteTopology,
    pub closure_added: bool,
    /// Tables that are not unions of `E`-blocks.
    pub unsaturated: usize,
}

pub fn quotient_topology(rep: &Representation, q: &InteriorWitnessFamily) -> Result<QuotientTopology> {
    let part = rep.partition();
    let points: Vec<usize> = (0..q.k_bound.min(part.bound))
        .map(|k| part.representative(k))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if points.is_empty() || points.len() > MAX_POINTS {
        return Err(Error::Resource(format!("{} quotient points", points.len())));
    }
    let index = |k: usize| points.iter().position(|p| *p == part.representative(k));
    let mut masks: BTreeSet<PointSet> = BTreeSet::new();
    let mut unsaturated = 0;
    for e in &q.entries {
        let mut mask = 0;
        for &k in e.table.iter().filter(|k| **k < part.bound) {
            if let Some(p) = index(k) {
                mask |= 1 << p;
            }
        }
        let saturated = (0..q.k_bound.min(part.bound))
            .all(|k| e.table.contains(&k) == index(k).is_some_and(|p| mask & (1 << p) != 0));
        if !saturated {
            unsaturated += 1;
        }
        masks.insert(mask);
    }
    let family: Vec<PointSet> = masks.iter().copied().collect();
    let topology = FiniteTopology::from_subbasis(points.len(), &family)?;
    masks.insert(0);
    masks.insert(topology.full());
    let closure_added = topology.opens().len() > masks.len();
    Ok(QuotientTopology {
        points,
        topology,
        closure_added,
        unsaturated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(b: &BaseSpace, j: usize, v: usize) -> CylinderElement {
        b.literal(j, v).unwrap()
    }

    fn chain(b: &BaseSpace, seed: CylinderElement) -> ChainState {
        ChainState::new(b, seed, 0).unwrap()
    }

    #[test]
    fn partition_of_separated_coordinates_is_discrete() {
        let b = BaseSpace::discrete(3).unwrap();
        let mut c = chain(&b, b.one());
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            c.step(&Task::Decide(b.complement(&b.diagonal(i, j).unwrap()))).unwrap();
        }
        let p = diag_partition(&mut c, 3).unwrap();
        assert!(p.is_discrete());
    }

    #[test]
    fn forced_diagonal_merges_blocks() {
        let b = BaseSpace::discrete(3).unwrap();
        let mut c = chain(&b, b.diagonal(0, 1).unwrap());
        for (i, j) in [(0, 2), (1, 2), (0, 3), (1, 3), (2, 3)] {
            c.step(&Task::Decide(b.complement(&b.diagonal(i, j).unwrap()))).unwrap();
        }
        let p = diag_partition(&mut c, 4).unwrap();
        assert_eq!(p.blocks, vec![vec![0, 1], vec![2], vec![3]]);
    }

    #[test]
    fn transitivity_probe() {
        let b = BaseSpace::discrete(2).unwrap();
        let mut c = chain(&b, b.one());
        assert_eq!(c.membership(&b.diagonal(0, 1).unwrap(), true).unwrap(), Membership::In);
        assert_eq!(c.membership(&b.diagonal(1, 2).unwrap(), true).unwrap(), Membership::In);
        assert_eq!(c.membership(&b.diagonal(0, 2).unwrap(), false).unwrap(), Membership::In);
        let p = diag_partition(&mut c, 3).unwrap();
        assert_eq!(p.blocks, vec![vec![0, 1, 2]]);
        assert!(p.transitivity_checks > 0);
    }

    #[test]
    fn rep_membership_examples() {
        let b = BaseSpace::discrete(2).unwrap();
        let x = lit(&b, 0, 0);
        let mut rep = Representation::new(chain(&b, x.clone()), 2).unwrap();
        let id = FiniteTransformation::identity();
        assert!(rep.rep_membership(&x, &id).unwrap());
        assert!(!rep.rep_membership(&b.zero(), &id).unwrap());
        let r01 = FiniteTransformation::replace(0, 1);
        let direct = rep.chain_mut().membership(&lit(&b, 1, 0), false).unwrap() == Membership::In;
        assert_eq!(rep.rep_membership(&x, &r01).unwrap(), direct);
    }

    #[test]
    fn well_definedness_under_identified_coordinates() {
        let b = BaseSpace::discrete(2).unwrap();
        let mut rep = Representation::new(chain(&b, b.diagonal(0, 1).unwrap()), 3).unwrap();
        let x = lit(&b, 2, 1);
        let sigma = FiniteTransformation::replace(2, 0);
        let tau = FiniteTransformation::replace(2, 1);
        assert!(rep.check_well_defined(&x, &sigma, &tau).unwrap());
        assert!(rep.check_well_defined(&x, &sigma, &sigma).unwrap());

        let mut apart = Representation::new(chain(&b, b.complement(&b.diagonal(0, 1).unwrap())), 2).unwrap();
        assert!(matches!(
            apart.check_well_defined(&x, &sigma, &tau),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn representation_contains_seed() {
        let b = BaseSpace::discrete(2).unwrap();
        let a = lit(&b, 0, 0);
        let cfg = ScheduleConfig::default();
        let mut rep = build_representation(&b, a.clone(), 30, 0, &cfg, 3).unwrap();
        let id = FiniteTransformation::identity();
        assert!(rep.rep_membership(&a, &id).unwrap());
        assert!(!rep.rep_membership(&b.complement(&a), &id).unwrap());
        let mut one = build_representation(&b, b.one(), 5, 0, &cfg, 2).unwrap();
        assert!(one.rep_membership(&b.one(), &id).unwrap());
        assert!(build_representation(&b, b.zero(), 5, 0, &cfg, 2).is_err());
    }

    #[test]
    fn homomorphism_on_small_sample() {
        let b = BaseSpace::discrete(2).unwrap();
        let a = lit(&b, 0, 0);
        let mut rep = build_representation(&b, a.clone(), 60, 0, &ScheduleConfig::default(), 3).unwrap();
        let terms = vec![
            a.clone(),
            lit(&b, 1, 1),
            b.diagonal(0, 2).unwrap(),
            b.join(&lit(&b, 2, 0), &lit(&b, 1, 0)).unwrap(),
            b.diagonal(0, 0).unwrap(),
        ];
        let taus = vec![
            FiniteTransformation::identity(),
            FiniteTransformation::replace(0, 1),
            FiniteTransformation::swap(1, 2),
        ];
        let report = verify_homomorphism(&mut rep, &terms, &taus).unwrap();
        assert!(report.passed(), "{:?}", report.failures);
        assert!(report.checks > 50);
    }

    #[test]
    fn interior_tables() {
        let b = BaseSpace::sierpinski();
        let mut rep = build_representation(&b, lit(&b, 0, 0), 20, 0, &ScheduleConfig::default(), 3).unwrap();
        let terms = vec![b.one(), b.zero(), lit(&b, 0, 0)];
        let q = interior_witnesses(&mut rep, &terms, 1, 4).unwrap();
        assert_eq!(q.entries[0].table, vec![0, 1, 2, 3]);
        assert!(q.entries[1].table.is_empty());
        let mut expected = Vec::new();
        for k in 0..4 {
            if rep
                .rep_membership(&lit(&b, k, 0), &FiniteTransformation::identity())
                .unwrap()
            {
                expected.push(k);
            }
        }
        assert_eq!(q.entries[2].table, expected);
    }

    #[test]
    fn interior_equation_on_sierpinski() {
        let b = BaseSpace::sierpinski();
        let mut rep = build_representation(&b, lit(&b, 0, 0), 40, 0, &ScheduleConfig::default(), 3).unwrap();
        let terms = vec![b.one(), lit(&b, 0, 0), lit(&b, 0, 1), b.diagonal(0, 1).unwrap()];
        let q = interior_witnesses(&mut rep, &terms, 2, 3).unwrap();
        let taus = vec![
            FiniteTransformation::identity(),
            FiniteTransformation::replace(0, 1),
            FiniteTransformation::swap(0, 2),
        ];
        for p in [b.zero(), b.one(), lit(&b, 0, 0), lit(&b, 0, 1)] {
            for i in 0..2 {
                let r = verify_interior_rep(&mut rep, &q, &p, i, &taus).unwrap();
                assert!(r.passed(), "p=<{p}> i={i}: {:?}", r.verdicts);
            }
        }
        let r = verify_interior_rep(&mut rep, &q, &lit(&b, 0, 1), 0, &taus[..1]).unwrap();
        assert!(!r.verdicts[0].lhs);
        assert_eq!(r.verdicts[0].witnesses, 0);
        let qt = quotient_topology(&rep, &q).unwrap();
        assert!(!qt.points.is_empty());
    }
}
