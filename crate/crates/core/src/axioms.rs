//! Conformance engine for the cylindric, interior, and substitution laws.
//!
//! Laws are evaluated through [`CylindricSignature`], so any implementation
//! of the operations (including deliberately broken ones) can be checked.
//! Every failure carries the instance that produced it; [`Axiom::evaluate`]
//! re-runs that instance on demand.

use std::fmt;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cylinder::{BaseSpace, CylinderElement};
use crate::error::{Error, Result};
use crate::transform::FiniteTransformation;

/// The operations of a topological cylindric algebra.
pub trait CylindricSignature {
    fn zero(&self) -> CylinderElement;
    fn one(&self) -> CylinderElement;
    fn complement(&self, x: &CylinderElement) -> CylinderElement;
    fn meet(&self, x: &CylinderElement, y: &CylinderElement) -> Result<CylinderElement>;
    fn join(&self, x: &CylinderElement, y: &CylinderElement) -> Result<CylinderElement>;
    fn cylindrify(&self, i: usize, x: &CylinderElement) -> Result<CylinderElement>;
    fn diagonal(&self, i: usize, j: usize) -> Result<CylinderElement>;
    fn interior(&self, k: usize, x: &CylinderElement) -> Result<CylinderElement>;
    fn substitute(&self, tau: &FiniteTransformation, x: &CylinderElement) -> Result<CylinderElement>;

    fn leq(&self, x: &CylinderElement, y: &CylinderElement) -> Result<bool> {
        Ok(self.meet(x, &self.complement(y))?.is_zero())
    }

    fn cylindrify_dual(&self, i: usize, x: &CylinderElement) -> Result<CylinderElement> {
        Ok(self.complement(&self.cylindrify(i, &self.complement(x))?))
    }

    /// `p ↔ q`, i.e. `(-p + q)·(-q + p)`.
    fn biimplication(&self, p: &CylinderElement, q: &CylinderElement) -> Result<CylinderElement> {
        let a = self.join(&self.complement(p), q)?;
        let b = self.join(&self.complement(q), p)?;
        self.meet(&a, &b)
    }
}

impl CylindricSignature for BaseSpace {
    fn zero(&self) -> CylinderElement {
        BaseSpace::zero(self)
    }
    fn one(&self) -> CylinderElement {
        BaseSpace::one(self)
    }
    fn complement(&self, x: &CylinderElement) -> CylinderElement {
        BaseSpace::complement(self, x)
    }
    fn meet(&self, x: &CylinderElement, y: &CylinderElement) -> Result<CylinderElement> {
        BaseSpace::meet(self, x, y)
    }
    fn join(&self, x: &CylinderElement, y: &CylinderElement) -> Result<CylinderElement> {
        BaseSpace::join(self, x, y)
    }
    fn cylindrify(&self, i: usize, x: &CylinderElement) -> Result<CylinderElement> {
        BaseSpace::cylindrify(self, i, x)
    }
    fn diagonal(&self, i: usize, j: usize) -> Result<CylinderElement> {
        BaseSpace::diagonal(self, i, j)
    }
    fn interior(&self, k: usize, x: &CylinderElement) -> Result<CylinderElement> {
        BaseSpace::interior(self, k, x)
    }
    fn substitute(&self, tau: &FiniteTransformation, x: &CylinderElement) -> Result<CylinderElement> {
        BaseSpace::substitute(self, tau, x)
    }
}

/// How a printed interior axiom is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Reading {
    /// Exactly as printed.
    Literal,
    /// The repaired forms: `∀i` read as `c_i^∂`, item 3 balanced in `q`,
    /// item 4 as `I(i)p ≤ I(i)I(i)p`.
    Corrected,
}

impl fmt::Display for Reading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reading::Literal => write!(f, "literal"),
            Reading::Corrected => write!(f, "corrected"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Eq,
    Leq,
}

/// One law of the conformance suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Axiom {
    // Boolean part
    MeetCommutes,
    JoinCommutes,
    MeetAssociates,
    JoinAssociates,
    Absorption,
    Distributes,
    ComplementMeet,
    ComplementJoin,
    Huntington,
    // cylindric part
    CylZero,
    CylExtensive,
    CylMeetModular,
    CylCommute,
    DiagReflexive,
    DiagThroughK,
    DiagSubstitution,
    // interior part
    InteriorCongruence(Reading),
    InteriorDeflationary,
    InteriorMultiplicative(Reading),
    InteriorIdempotent(Reading),
    InteriorNormal,
    InteriorSubstitution,
    // substitutions
    SubMeet,
    SubJoin,
    SubComplement,
    SubIdentity,
    SubCompose,
    SubReplace,
}

/// A concrete instantiation of an axiom's variables.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Instance {
    pub indices: Vec<usize>,
    pub elements: Vec<CylinderElement>,
    pub transformations: Vec<FiniteTransformation>,
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = ["i", "j", "k"];
        let vars = ["x", "y", "z"];
        let taus = ["σ", "τ"];
        let mut parts = Vec::new();
        for (n, v) in names.iter().zip(&self.indices) {
            parts.push(format!("{n}={v}"));
        }
        for (n, t) in taus.iter().zip(&self.transformations) {
            parts.push(format!("{n}={t}"));
        }
        for (n, e) in vars.iter().zip(&self.elements) {
            parts.push(format!("{n}=<{e}>"));
        }
        write!(f, "{}", parts.join(" "))
    }
}

impl Axiom {
    pub const BOOLEAN: [Axiom; 9] = [
        Axiom::MeetCommutes,
        Axiom::JoinCommutes,
        Axiom::MeetAssociates,
        Axiom::JoinAssociates,
        Axiom::Absorption,
        Axiom::Distributes,
        Axiom::ComplementMeet,
        Axiom::ComplementJoin,
        Axiom::Huntington,
    ];

    pub fn cylindric() -> Vec<Axiom> {
        let mut out = Self::BOOLEAN.to_vec();
        out.extend([
            Axiom::CylZero,
            Axiom::CylExtensive,
            Axiom::CylMeetModular,
            Axiom::CylCommute,
            Axiom::DiagReflexive,
            Axiom::DiagThroughK,
            Axiom::DiagSubstitution,
        ]);
        out
    }

    pub fn interior(reading: Reading) -> Vec<Axiom> {
        vec![
            Axiom::InteriorCongruence(reading),
            Axiom::InteriorDeflationary,
            Axiom::InteriorMultiplicative(reading),
            Axiom::InteriorIdempotent(reading),
            Axiom::InteriorNormal,
            Axiom::InteriorSubstitution,
        ]
    }

    pub fn substitution() -> Vec<Axiom> {
        vec![
            Axiom::SubMeet,
            Axiom::SubJoin,
            Axiom::SubComplement,
            Axiom::SubIdentity,
            Axiom::SubCompose,
            Axiom::SubReplace,
        ]
    }

    /// Short identifier: the group number of the law in its definition
    /// (`CA1`..`CA8`, `TCA1`..`TCA6`) or `SUB-*`.
    pub fn id(&self) -> String {
        let group = match self {
            a if Self::BOOLEAN.contains(a) => "CA1",
            Axiom::CylZero => "CA2",
            Axiom::CylExtensive => "CA3",
            Axiom::CylMeetModular => "CA4",
            Axiom::CylCommute => "CA5",
            Axiom::DiagReflexive => "CA6",
            Axiom::DiagThroughK => "CA7",
            Axiom::DiagSubstitution => "CA8",
            Axiom::InteriorCongruence(_) => "TCA1",
            Axiom::InteriorDeflationary => "TCA2",
            Axiom::InteriorMultiplicative(_) => "TCA3",
            Axiom::InteriorIdempotent(_) => "TCA4",
            Axiom::InteriorNormal => "TCA5",
            Axiom::InteriorSubstitution => "TCA6",
            Axiom::SubMeet => "SUB-meet",
            Axiom::SubJoin => "SUB-join",
            Axiom::SubComplement => "SUB-complement",
            Axiom::SubIdentity => "SUB-identity",
            Axiom::SubCompose => "SUB-compose",
            Axiom::SubReplace => "SUB-replace",
            _ => unreachable!(),
        };
        group.to_string()
    }

    pub fn reading(&self) -> Option<Reading> {
        match self {
            Axiom::InteriorCongruence(r) | Axiom::InteriorMultiplicative(r) | Axiom::InteriorIdempotent(r) => Some(*r),
            _ => None,
        }
    }

    pub fn law(&self) -> &'static str {
        match self {
            Axiom::MeetCommutes => "x·y = y·x",
            Axiom::JoinCommutes => "x+y = y+x",
            Axiom::MeetAssociates => "x·(y·z) = (x·y)·z",
            Axiom::JoinAssociates => "x+(y+z) = (x+y)+z",
            Axiom::Absorption => "x+(x·y) = x",
            Axiom::Distributes => "x·(y+z) = x·y + x·z",
            Axiom::ComplementMeet => "x·-x = 0",
            Axiom::ComplementJoin => "x+-x = 1",
            Axiom::Huntington => "-(-x+y) + -(-x+-y) = x",
            Axiom::CylZero => "c_i 0 = 0",
            Axiom::CylExtensive => "x ≤ c_i x",
            Axiom::CylMeetModular => "c_i(x·c_i y) = c_i x · c_i y",
            Axiom::CylCommute => "c_i c_j x = c_j c_i x",
            Axiom::DiagReflexive => "d_ii = 1",
            Axiom::DiagThroughK => "d_ij = c_k(d_ik·d_jk) for k ∉ {i,j}",
            Axiom::DiagSubstitution => "c_i(d_ij·x)·c_i(d_ij·-x) = 0 for i ≠ j",
            Axiom::InteriorCongruence(Reading::Corrected) => "c_i^∂(p↔q) ≤ c_i^∂(I(i)p ↔ I(i)q)",
            Axiom::InteriorCongruence(Reading::Literal) => "c_i^∂(p↔q) ≤ ∀i(I(i)p ↔ I(i)q)",
            Axiom::InteriorDeflationary => "I(i)p ≤ p",
            Axiom::InteriorMultiplicative(Reading::Corrected) => "I(i)p·I(i)q = I(i)(p·q)",
            Axiom::InteriorMultiplicative(Reading::Literal) => "I(i)p·I(i)p = I(i)(p·q)",
            Axiom::InteriorIdempotent(Reading::Corrected) => "I(i)p ≤ I(i)I(i)p",
            Axiom::InteriorIdempotent(Reading::Literal) => "p ≤ I(i)I(i)p",
            Axiom::InteriorNormal => "I(i)1 = 1",
            Axiom::InteriorSubstitution => "s_[i|j] I(i)p = I(j) s_[i|j] p",
            Axiom::SubMeet => "s_τ(x·y) = s_τx · s_τy",
            Axiom::SubJoin => "s_τ(x+y) = s_τx + s_τy",
            Axiom::SubComplement => "s_τ(-x) = -s_τx",
            Axiom::SubIdentity => "s_id x = x",
            Axiom::SubCompose => "s_(σ∘τ) x = s_σ(s_τ x)",
            Axiom::SubReplace => "s_[i|j] x = c_i(d_ij·x) for i ≠ j",
        }
    }

    /// Number of (elements, indices, transformations) the law quantifies over.
    pub fn arity(&self) -> (usize, usize, usize) {
        match self {
            Axiom::MeetCommutes | Axiom::JoinCommutes | Axiom::Absorption | Axiom::Huntington => (2, 0, 0),
            Axiom::MeetAssociates | Axiom::JoinAssociates | Axiom::Distributes => (3, 0, 0),
            Axiom::ComplementMeet | Axiom::ComplementJoin => (1, 0, 0),
            Axiom::CylZero | Axiom::DiagReflexive => (0, 1, 0),
            Axiom::CylExtensive => (1, 1, 0),
            Axiom::CylMeetModular => (2, 1, 0),
            Axiom::CylCommute => (1, 2, 0),
            Axiom::DiagThroughK => (0, 3, 0),
            Axiom::DiagSubstitution => (1, 2, 0),
            Axiom::InteriorCongruence(_) => (2, 1, 0),
            Axiom::InteriorDeflationary => (1, 1, 0),
            Axiom::InteriorMultiplicative(_) => (2, 1, 0),
            Axiom::InteriorIdempotent(_) => (1, 1, 0),
            Axiom::InteriorNormal => (0, 1, 0),
            Axiom::InteriorSubstitution => (1, 2, 0),
            Axiom::SubMeet | Axiom::SubJoin => (2, 0, 1),
            Axiom::SubComplement => (1, 0, 1),
            Axiom::SubIdentity => (1, 0, 0),
            Axiom::SubCompose => (1, 0, 2),
            Axiom::SubReplace => (1, 2, 0),
        }
    }

    /// Side conditions on the index variables.
    fn admits(&self, indices: &[usize]) -> bool {
        match self {
            Axiom::DiagThroughK => indices[2] != indices[0] && indices[2] != indices[1],
            Axiom::DiagSubstitution | Axiom::SubReplace | Axiom::InteriorSubstitution => indices[0] != indices[1],
            _ => true,
        }
    }

    /// Whether the law has a meaning under its reading at all.
    pub fn skip_reason(&self) -> Option<&'static str> {
        match self {
            Axiom::InteriorCongruence(Reading::Literal) => {
                Some("the printed quantifier ∀i is not an operation of the signature")
            }
            _ => None,
        }
    }

    /// Evaluates both sides of the law on `inst`.
    pub fn evaluate<S: CylindricSignature + ?Sized>(
        &self,
        sig: &S,
        inst: &Instance,
    ) -> Result<(CylinderElement, CylinderElement, Relation)> {
        use Relation::{Eq, Leq};
        let e = &inst.elements;
        let ix = &inst.indices;
        let t = &inst.transformations;
        let out = match self {
            Axiom::MeetCommutes => (sig.meet(&e[0], &e[1])?, sig.meet(&e[1], &e[0])?, Eq),
            Axiom::JoinCommutes => (sig.join(&e[0], &e[1])?, sig.join(&e[1], &e[0])?, Eq),
            Axiom::MeetAssociates => (
                sig.meet(&e[0], &sig.meet(&e[1], &e[2])?)?,
                sig.meet(&sig.meet(&e[0], &e[1])?, &e[2])?,
                Eq,
            ),
            Axiom::JoinAssociates => (
                sig.join(&e[0], &sig.join(&e[1], &e[2])?)?,
                sig.join(&sig.join(&e[0], &e[1])?, &e[2])?,
                Eq,
            ),
            Axiom::Absorption => (sig.join(&e[0], &sig.meet(&e[0], &e[1])?)?, e[0].clone(), Eq),
            Axiom::Distributes => (
                sig.meet(&e[0], &sig.join(&e[1], &e[2])?)?,
                sig.join(&sig.meet(&e[0], &e[1])?, &sig.meet(&e[0], &e[2])?)?,
                Eq,
            ),
            Axiom::ComplementMeet => (sig.meet(&e[0], &sig.complement(&e[0]))?, sig.zero(), Eq),
            Axiom::ComplementJoin => (sig.join(&e[0], &sig.complement(&e[0]))?, sig.one(), Eq),
            Axiom::Huntington => {
                let nx = sig.complement(&e[0]);
                let a = sig.complement(&sig.join(&nx, &e[1])?);
                let b = sig.complement(&sig.join(&nx, &sig.complement(&e[1]))?);
                (sig.join(&a, &b)?, e[0].clone(), Eq)
            }
            Axiom::CylZero => (sig.cylindrify(ix[0], &sig.zero())?, sig.zero(), Eq),
            Axiom::CylExtensive => (e[0].clone(), sig.cylindrify(ix[0], &e[0])?, Leq),
            Axiom::CylMeetModular => {
                let i = ix[0];
                let cy = sig.cylindrify(i, &e[1])?;
                (
                    sig.cylindrify(i, &sig.meet(&e[0], &cy)?)?,
                    sig.meet(&sig.cylindrify(i, &e[0])?, &cy)?,
                    Eq,
                )
            }
            Axiom::CylCommute => (
                sig.cylindrify(ix[0], &sig.cylindrify(ix[1], &e[0])?)?,
                sig.cylindrify(ix[1], &sig.cylindrify(ix[0], &e[0])?)?,
                Eq,
            ),
            Axiom::DiagReflexive => (sig.diagonal(ix[0], ix[0])?, sig.one(), Eq),
            Axiom::DiagThroughK => {
                let (i, j, k) = (ix[0], ix[1], ix[2]);
                let through = sig.meet(&sig.diagonal(i, k)?, &sig.diagonal(j, k)?)?;
                (sig.diagonal(i, j)?, sig.cylindrify(k, &through)?, Eq)
            }
            Axiom::DiagSubstitution => {
                let (i, j) = (ix[0], ix[1]);
                let d = sig.diagonal(i, j)?;
                let a = sig.cylindrify(i, &sig.meet(&d, &e[0])?)?;
                let b = sig.cylindrify(i, &sig.meet(&d, &sig.complement(&e[0]))?)?;
                (sig.meet(&a, &b)?, sig.zero(), Eq)
            }
            Axiom::InteriorCongruence(_) => {
                let i = ix[0];
                let lhs = sig.cylindrify_dual(i, &sig.biimplication(&e[0], &e[1])?)?;
                let ip = sig.interior(i, &e[0])?;
                let iq = sig.interior(i, &e[1])?;
                let rhs = sig.cylindrify_dual(i, &sig.biimplication(&ip, &iq)?)?;
                (lhs, rhs, Leq)
            }
            Axiom::InteriorDeflationary => (sig.interior(ix[0], &e[0])?, e[0].clone(), Leq),
            Axiom::InteriorMultiplicative(reading) => {
                let i = ix[0];
                let ip = sig.interior(i, &e[0])?;
                let other = match reading {
                    Reading::Literal => ip.clone(),
                    Reading::Corrected => sig.interior(i, &e[1])?,
                };
                (sig.meet(&ip, &other)?, sig.interior(i, &sig.meet(&e[0], &e[1])?)?, Eq)
            }
            Axiom::InteriorIdempotent(reading) => {
                let i = ix[0];
                let ip = sig.interior(i, &e[0])?;
                let lhs = match reading {
                    Reading::Literal => e[0].clone(),
                    Reading::Corrected => ip.clone(),
                };
                (lhs, sig.interior(i, &ip)?, Leq)
            }
            Axiom::InteriorNormal => (sig.interior(ix[0], &sig.one())?, sig.one(), Eq),
            Axiom::InteriorSubstitution => {
                let (i, j) = (ix[0], ix[1]);
                let r = FiniteTransformation::replace(i, j);
                (
                    sig.substitute(&r, &sig.interior(i, &e[0])?)?,
                    sig.interior(j, &sig.substitute(&r, &e[0])?)?,
                    Eq,
                )
            }
            Axiom::SubMeet => (
                sig.substitute(&t[0], &sig.meet(&e[0], &e[1])?)?,
                sig.meet(&sig.substitute(&t[0], &e[0])?, &sig.substitute(&t[0], &e[1])?)?,
                Eq,
            ),
            Axiom::SubJoin => (
                sig.substitute(&t[0], &sig.join(&e[0], &e[1])?)?,
                sig.join(&sig.substitute(&t[0], &e[0])?, &sig.substitute(&t[0], &e[1])?)?,
                Eq,
            ),
            Axiom::SubComplement => (
                sig.substitute(&t[0], &sig.complement(&e[0]))?,
                sig.complement(&sig.substitute(&t[0], &e[0])?),
                Eq,
            ),
            Axiom::SubIdentity => (
                sig.substitute(&FiniteTransformation::identity(), &e[0])?,
                e[0].clone(),
                Eq,
            ),
            Axiom::SubCompose => (
                sig.substitute(&t[0].compose(&t[1]), &e[0])?,
                sig.substitute(&t[0], &sig.substitute(&t[1], &e[0])?)?,
                Eq,
            ),
            Axiom::SubReplace => {
                let (i, j) = (ix[0], ix[1]);
                (
                    sig.substitute(&FiniteTransformation::replace(i, j), &e[0])?,
                    sig.cylindrify(i, &sig.meet(&sig.diagonal(i, j)?, &e[0])?)?,
                    Eq,
                )
            }
        };
        Ok(out)
    }

    /// Evaluates the instance and decides whether the law holds there.
    pub fn holds_on<S: CylindricSignature + ?Sized>(&self, sig: &S, inst: &Instance) -> Result<bool> {
        let (lhs, rhs, rel) = self.evaluate(sig, inst)?;
        match rel {
            Relation::Eq => Ok(lhs == rhs),
            Relation::Leq => sig.leq(&lhs, &rhs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub instance: Instance,
    pub lhs: CylinderElement,
    pub rhs: CylinderElement,
    pub relation: Relation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    /// No instance of the sample failed.
    HoldsOnSample,
    Fails {
        counterexample: Box<Counterexample>,
    },
    Skipped {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomResult {
    pub id: String,
    pub law: String,
    #[serde(skip)]
    pub axiom: Axiom,
    pub reading: Option<Reading>,
    pub verdict: Verdict,
    pub instances: usize,
    pub failures: usize,
    /// Instances abandoned because an operation hit the support cap.
    pub resource_errors: usize,
}

impl AxiomResult {
    pub fn holds(&self) -> bool {
        matches!(self.verdict, Verdict::HoldsOnSample)
    }

    pub fn fails(&self) -> bool {
        matches!(self.verdict, Verdict::Fails { .. })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AxiomReport {
    pub results: Vec<AxiomResult>,
}

impl AxiomReport {
    pub fn all_hold(&self) -> bool {
        self.results.iter().all(|r| !r.fails())
    }

    pub fn failures(&self) -> impl Iterator<Item = &AxiomResult> {
        self.results.iter().filter(|r| r.fails())
    }

    pub fn get(&self, axiom: Axiom) -> Option<&AxiomResult> {
        self.results.iter().find(|r| r.axiom == axiom)
    }

    pub fn instances(&self) -> usize {
        self.results.iter().map(|r| r.instances).sum()
    }

    /// Folds another report in, matching results by axiom.
    pub fn merge(&mut self, other: AxiomReport) {
        for r in other.results {
            match self.results.iter_mut().find(|s| s.axiom == r.axiom) {
                Some(mine) => {
                    mine.instances += r.instances;
                    mine.failures += r.failures;
                    mine.resource_errors += r.resource_errors;
                    if mine.holds() && r.fails() {
                        mine.verdict = r.verdict;
                    }
                }
                None => self.results.push(r),
            }
        }
    }
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<14} {:<10} {:<44} {:>9} {:>6}  verdict",
            "axiom", "reading", "law", "instances", "fails"
        )?;
        for r in &self.results {
            let reading = r.reading.map(|x| x.to_string()).unwrap_or_else(|| "-".into());
            let verdict = match &r.verdict {
                Verdict::HoldsOnSample => "holds".to_string(),
                Verdict::Fails { counterexample } => format!(
                    "FAILS at {} (lhs <{}>, rhs <{}>)",
                    counterexample.instance, counterexample.lhs, counterexample.rhs
                ),
                Verdict::Skipped { reason } => format!("skipped: {reason}"),
            };
            writeln!(
                f,
                "{:<14} {:<10} {:<44} {:>9} {:>6}  {}",
                r.id, reading, r.law, r.instances, r.failures, verdict
            )?;
        }
        Ok(())
    }
}

/// Limits on how far the exhaustive driver expands element tuples.
#[derive(Debug, Clone, Copy)]
pub struct SampleLimits {
    /// Triples are drawn from the first `triple_prefix` sample elements only.
    pub triple_prefix: usize,
}

impl Default for SampleLimits {
    fn default() -> Self {
        Self { triple_prefix: 24 }
    }
}

struct Tally {
    instances: usize,
    failures: usize,
    resource_errors: usize,
    first: Option<Counterexample>,
}

fn run_instances<S: CylindricSignature + ?Sized>(
    sig: &S,
    axiom: Axiom,
    instances: impl Iterator<Item = Instance>,
) -> Result<Tally> {
    let mut tally = Tally {
        instances: 0,
        failures: 0,
        resource_errors: 0,
        first: None,
    };
    for inst in instances {
        match axiom.evaluate(sig, &inst) {
            Ok((lhs, rhs, relation)) => {
                tally.instances += 1;
                let ok = match relation {
                    Relation::Eq => lhs == rhs,
                    Relation::Leq => match sig.leq(&lhs, &rhs) {
                        Ok(b) => b,
                        Err(e) if e.is_resource() => {
                            tally.resource_errors += 1;
                            continue;
                        }
                        Err(e) => return Err(e),
                    },
                };
                if !ok {
                    tally.failures += 1;
                    if tally.first.is_none() {
                        tally.first = Some(Counterexample {
                            instance: inst,
                            lhs,
                            rhs,
                            relation,
                        });
                    }
                }
            }
            Err(e) if e.is_resource() => tally.resource_errors += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(tally)
}

fn result_from(axiom: Axiom, tally: Tally) -> AxiomResult {
    let verdict = match tally.first {
        Some(c) => Verdict::Fails {
            counterexample: Box::new(c),
        },
        None => Verdict::HoldsOnSample,
    };
    AxiomResult {
        id: axiom.id(),
        law: axiom.law().to_string(),
        axiom,
        reading: axiom.reading(),
        verdict,
        instances: tally.instances,
        failures: tally.failures,
        resource_errors: tally.resource_errors,
    }
}

fn skipped(axiom: Axiom, reason: &str) -> AxiomResult {
    AxiomResult {
        id: axiom.id(),
        law: axiom.law().to_string(),
        axiom,
        reading: axiom.reading(),
        verdict: Verdict::Skipped {
            reason: reason.to_string(),
        },
        instances: 0,
        failures: 0,
        resource_errors: 0,
    }
}

/// Runs every instance of `axioms` over the sample: all element tuples (triples
/// restricted by `limits`), all index tuples below `index_bound`, and all
/// transformation tuples.
pub fn check_exhaustive<S: CylindricSignature + ?Sized>(
    sig: &S,
    axioms: &[Axiom],
    index_bound: usize,
    sample: &[CylinderElement],
    transformations: &[FiniteTransformation],
    limits: SampleLimits,
) -> Result<AxiomReport> {
    if index_bound < 2 {
        return Err(Error::Precondition("index bound must be at least 2".into()));
    }
    let mut report = AxiomReport::default();
    for &axiom in axioms {
        if let Some(reason) = axiom.skip_reason() {
            report.results.push(skipped(axiom, reason));
            continue;
        }
        let (ne, ni, nt) = axiom.arity();
        let pool = if ne == 3 {
            &sample[..sample.len().min(limits.triple_prefix)]
        } else {
            sample
        };
        let element_tuples: Vec<Vec<CylinderElement>> = if ne == 0 {
            vec![vec![]]
        } else {
            (0..ne)
                .map(|_| pool.iter().cloned())
                .multi_cartesian_product()
                .collect()
        };
        let index_tuples: Vec<Vec<usize>> = if ni == 0 {
            vec![vec![]]
        } else {
            (0..ni)
                .map(|_| 0..index_bound)
                .multi_cartesian_product()
                .filter(|ix| axiom.admits(ix))
                .collect()
        };
        let tau_tuples: Vec<Vec<FiniteTransformation>> = if nt == 0 {
            vec![vec![]]
        } else {
            (0..nt)
                .map(|_| transformations.iter().cloned())
                .multi_cartesian_product()
                .collect()
        };
        let index_tuples = &index_tuples;
        let tau_tuples = &tau_tuples;
        let instances = element_tuples.iter().flat_map(|es| {
            index_tuples.iter().flat_map(move |ix| {
                tau_tuples.iter().map(move |ts| Instance {
                    indices: ix.clone(),
                    elements: es.clone(),
                    transformations: ts.clone(),
                })
            })
        });
        let tally = run_instances(sig, axiom, instances)?;
        report.results.push(result_from(axiom, tally));
    }
    Ok(report)
}

/// Checks the cylindric-algebra laws over a sample.
pub fn check_ca_axioms<S: CylindricSignature + ?Sized>(
    sig: &S,
    index_bound: usize,
    sample: &[CylinderElement],
) -> Result<AxiomReport> {
    check_exhaustive(
        sig,
        &Axiom::cylindric(),
        index_bound,
        sample,
        &[],
        SampleLimits::default(),
    )
}

/// Checks the interior laws under one reading.
pub fn check_tca_axioms<S: CylindricSignature + ?Sized>(
    sig: &S,
    index_bound: usize,
    sample: &[CylinderElement],
    reading: Reading,
) -> Result<AxiomReport> {
    check_exhaustive(
        sig,
        &Axiom::interior(reading),
        index_bound,
        sample,
        &[],
        SampleLimits::default(),
    )
}

/// Checks that substitutions are Boolean endomorphisms, compose, and agree
/// with the cylindric definition of `[i|j]`.
pub fn check_substitution_laws<S: CylindricSignature + ?Sized>(
    sig: &S,
    index_bound: usize,
    sample: &[CylinderElement],
    transformations: &[FiniteTransformation],
) -> Result<AxiomReport> {
    check_exhaustive(
        sig,
        &Axiom::substitution(),
        index_bound,
        sample,
        transformations,
        SampleLimits::default(),
    )
}

/// Evaluates `count` seeded random instances of every law in `axioms`.
///
/// Elements are uniform random raw elements over `{0..index_bound-1}`;
/// transformations move up to two coordinates inside the same window.
pub fn check_random(
    base: &BaseSpace,
    axioms: &[Axiom],
    index_bound: usize,
    count: usize,
    seed: u64,
) -> Result<AxiomReport> {
    if index_bound < 2 {
        return Err(Error::Precondition("index bound must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<usize> = (0..index_bound).collect();
    let mut tallies: Vec<Tally> = axioms
        .iter()
        .map(|_| Tally {
            instances: 0,
            failures: 0,
            resource_errors: 0,
            first: None,
        })
        .collect();
    for _ in 0..count {
        let elements: Vec<CylinderElement> = (0..3)
            .map(|_| {
                let k = rng.gen_range(0..=coords.len());
                let picked: Vec<usize> = rand::seq::index::sample(&mut rng, coords.len(), k)
                    .into_iter()
                    .map(|p| coords[p])
                    .collect();
                base.random_element(&mut rng, &picked)
            })
            .collect::<Result<_>>()?;
        let indices: Vec<usize> = (0..3).map(|_| rng.gen_range(0..index_bound)).collect();
        let transformations: Vec<FiniteTransformation> = (0..2)
            .map(|_| {
                FiniteTransformation::from_pairs(
                    (0..rng.gen_range(0..=2))
                        .map(|_| (rng.gen_range(0..index_bound), rng.gen_range(0..index_bound)))
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        for (axiom, tally) in axioms.iter().zip(tallies.iter_mut()) {
            let (ne, ni, nt) = axiom.arity();
            if axiom.skip_reason().is_some() || (ni > 0 && !axiom.admits(&indices[..ni])) {
                continue;
            }
            let inst = Instance {
                indices: indices[..ni].to_vec(),
                elements: elements[..ne].to_vec(),
                transformations: transformations[..nt].to_vec(),
            };
            let t = run_instances(base, *axiom, std::iter::once(inst))?;
            tally.instances += t.instances;
            tally.failures += t.failures;
            tally.resource_errors += t.resource_errors;
            if tally.first.is_none() {
                tally.first = t.first;
            }
        }
    }
    let mut report = AxiomReport::default();
    for (axiom, tally) in axioms.iter().zip(tallies) {
        if let Some(reason) = axiom.skip_reason() {
            report.results.push(skipped(*axiom, reason));
        } else {
            report.results.push(result_from(*axiom, tally));
        }
    }
    Ok(report)
}

/// The Boolean subalgebra generated by `generators`: every join of atoms,
/// where atoms are the nonzero meets of the generators and their complements.
///
/// Elements come out as 0, 1, the generators in order, then the remaining
/// joins by increasing atom bitmask.
pub fn boolean_closure<S: CylindricSignature + ?Sized>(
    sig: &S,
    generators: &[CylinderElement],
) -> Result<Vec<CylinderElement>> {
    let mut atoms = vec![sig.one()];
    for g in generators {
        let ng = sig.complement(g);
        let mut next = Vec::with_capacity(atoms.len() * 2);
        for a in &atoms {
            for part in [sig.meet(a, g)?, sig.meet(a, &ng)?] {
                if !part.is_zero() {
                    next.push(part);
                }
            }
        }
        atoms = next;
    }
    if atoms.len() > 16 {
        return Err(Error::Resource(format!(
            "Boolean closure has {} atoms; at most 16 are enumerated",
            atoms.len()
        )));
    }
    let mut out = vec![sig.zero(), sig.one()];
    out.extend(generators.iter().cloned());
    let mut seen: std::collections::HashSet<CylinderElement> = out.iter().cloned().collect();
    for mask in 1u32..(1u32 << atoms.len()) {
        let mut e = sig.zero();
        for (p, a) in atoms.iter().enumerate() {
            if mask & (1 << p) != 0 {
                e = sig.join(&e, a)?;
            }
        }
        if seen.insert(e.clone()) {
            out.push(e);
        }
    }
    out.dedup();
    let mut uniq = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for e in out {
        if seen.insert(e.clone()) {
            uniq.push(e);
        }
    }
    Ok(uniq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::FiniteTopology;

    fn two() -> BaseSpace {
        BaseSpace::discrete(2).unwrap()
    }

    #[test]
    fn closure_of_two_generators() {
        let b = two();
        let x = b.literal(0, 0).unwrap();
        let d = b.diagonal(0, 1).unwrap();
        let closure = boolean_closure(&b, &[d.clone(), x.clone()]).unwrap();
        // 4 atoms over U = {0,1}
        assert_eq!(closure.len(), 16);
        assert_eq!(closure[0], b.zero());
        assert_eq!(closure[1], b.one());
        assert_eq!(closure[2], d);
        assert_eq!(closure[3], x);
    }

    #[test]
    fn ca_axioms_hold_on_discrete_two_points() {
        let b = two();
        let gens = [b.diagonal(0, 1).unwrap(), b.literal(0, 0).unwrap()];
        let sample = boolean_closure(&b, &gens).unwrap();
        let report = check_ca_axioms(&b, 3, &sample).unwrap();
        assert!(report.all_hold(), "{report}");
        let d11 = report.get(Axiom::DiagReflexive).unwrap();
        assert!(d11.holds());
        assert_eq!(d11.instances, 3);
    }

    #[test]
    fn corrected_interior_axioms_on_sierpinski() {
        let b = BaseSpace::sierpinski();
        let gens = [b.diagonal(0, 1).unwrap(), b.literal(0, 0).unwrap()];
        let sample = boolean_closure(&b, &gens).unwrap();
        let report = check_tca_axioms(&b, 3, &sample, Reading::Corrected).unwrap();
        for axiom in [
            Axiom::InteriorCongruence(Reading::Corrected),
            Axiom::InteriorDeflationary,
            Axiom::InteriorMultiplicative(Reading::Corrected),
            Axiom::InteriorIdempotent(Reading::Corrected),
            Axiom::InteriorNormal,
        ] {
            assert!(report.get(axiom).unwrap().holds(), "{report}");
        }
    }

    #[test]
    fn literal_item_four_fails_on_sierpinski() {
        let b = BaseSpace::sierpinski();
        let p = b.literal(0, 1).unwrap();
        let inst = Instance {
            indices: vec![0],
            elements: vec![p.clone()],
            transformations: vec![],
        };
        let axiom = Axiom::InteriorIdempotent(Reading::Literal);
        let (lhs, rhs, rel) = axiom.evaluate(&b, &inst).unwrap();
        assert_eq!(rel, Relation::Leq);
        assert_eq!(lhs, p);
        assert!(rhs.is_zero());
        assert!(!axiom.holds_on(&b, &inst).unwrap());
    }

    #[test]
    fn interior_normal_holds_under_both_readings() {
        let b = BaseSpace::sierpinski();
        let sample = vec![b.literal(0, 0).unwrap()];
        for reading in [Reading::Literal, Reading::Corrected] {
            let report = check_tca_axioms(&b, 2, &sample, reading).unwrap();
            assert!(report.get(Axiom::InteriorNormal).unwrap().holds());
        }
        let literal = check_tca_axioms(&b, 2, &sample, Reading::Literal).unwrap();
        assert!(matches!(
            literal
                .get(Axiom::InteriorCongruence(Reading::Literal))
                .unwrap()
                .verdict,
            Verdict::Skipped { .. }
        ));
    }

    #[test]
    fn substitution_laws_hold() {
        let b = two();
        let gens = [b.diagonal(0, 1).unwrap(), b.literal(0, 0).unwrap()];
        let sample = boolean_closure(&b, &gens).unwrap();
        let taus = FiniteTransformation::enumerate_bounded(3, 1);
        let report = check_substitution_laws(&b, 3, &sample, &taus).unwrap();
        assert!(report.all_hold(), "{report}");
        let x = b.literal(0, 0).unwrap();
        let inst = Instance {
            indices: vec![0, 1],
            elements: vec![x],
            transformations: vec![],
        };
        let (lhs, rhs, _) = Axiom::SubReplace.evaluate(&b, &inst).unwrap();
        assert_eq!(lhs, b.literal(1, 0).unwrap());
        assert_eq!(rhs, lhs);
    }

    struct LossyProjection(BaseSpace);

    impl CylindricSignature for LossyProjection {
        fn zero(&self) -> CylinderElement {
            self.0.zero()
        }
        fn one(&self) -> CylinderElement {
            self.0.one()
        }
        fn complement(&self, x: &CylinderElement) -> CylinderElement {
            self.0.complement(x)
        }
        fn meet(&self, x: &CylinderElement, y: &CylinderElement) -> Result<CylinderElement> {
            self.0.meet(x, y)
        }
        fn join(&self, x: &CylinderElement, y: &CylinderElement) -> Result<CylinderElement> {
            self.0.join(x, y)
        }
        /// Projects but forgets the row whose `i`-entry is 0.
        fn cylindrify(&self, i: usize, x: &CylinderElement) -> Result<CylinderElement> {
            let without = self.0.meet(x, &self.0.complement(&self.0.literal(i, 0)?))?;
            self.0.cylindrify(i, &without)
        }
        fn diagonal(&self, i: usize, j: usize) -> Result<CylinderElement> {
            self.0.diagonal(i, j)
        }
        fn interior(&self, k: usize, x: &CylinderElement) -> Result<CylinderElement> {
            self.0.interior(k, x)
        }
        fn substitute(&self, tau: &FiniteTransformation, x: &CylinderElement) -> Result<CylinderElement> {
            self.0.substitute(tau, x)
        }
    }

    #[test]
    fn corrupted_cylindrification_is_caught() {
        let b = two();
        let gens = [b.diagonal(0, 1).unwrap(), b.literal(0, 0).unwrap()];
        let sample = boolean_closure(&b, &gens).unwrap();
        let broken = LossyProjection(b.clone());
        let report = check_ca_axioms(&broken, 3, &sample).unwrap();
        let ext = report.get(Axiom::CylExtensive).unwrap();
        let Verdict::Fails { counterexample } = &ext.verdict else {
            panic!("x ≤ c_i x should fail: {report}");
        };
        // the counterexample re-evaluates to a genuine violation
        assert!(!Axiom::CylExtensive.holds_on(&broken, &counterexample.instance).unwrap());
        assert!(Axiom::CylExtensive.holds_on(&b, &counterexample.instance).unwrap());
    }

    #[test]
    fn random_instances_hold_on_three_points() {
        let t = FiniteTopology::from_subbasis(3, &[0b001, 0b011]).unwrap();
        let b = BaseSpace::new(t).unwrap();
        let mut axioms = Axiom::cylindric();
        axioms.extend(
            Axiom::interior(Reading::Corrected)
                .into_iter()
                .filter(|a| *a != Axiom::InteriorSubstitution),
        );
        axioms.extend(Axiom::substitution());
        let report = check_random(&b, &axioms, 3, 200, 11).unwrap();
        assert!(report.all_hold(), "{report}");
        let again = check_random(&b, &axioms, 3, 200, 11).unwrap();
        assert_eq!(report, again);
    }
}
