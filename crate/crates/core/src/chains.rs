//! Finite approximations of ultrafilters built by a task scheduler.
//!
//! A [`ChainState`] is an ordered list of committed conditions whose meet is
//! kept nonzero. Tasks add conditions: Henkin witnesses for cylindrified
//! members, decisions of single elements, negations that omit a type, and
//! splits that separate two chains from each other.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::axioms::boolean_closure;
use crate::cylinder::{BaseSpace, CylinderElement};
use crate::error::{Error, Result};
use crate::solver::ConstraintStore;
use crate::transform::FiniteTransformation;

pub use crate::solver::is_proper;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Task {
    /// Witness `c_k x` by `s_[k|u] x` for a fresh `u`.
    Henkin { k: usize, x: CylinderElement },
    /// Put the element or its complement into the chain.
    Decide(CylinderElement),
    /// Keep `s_τ x` out of the chain for some member `x` of family `family`.
    Omit { family: usize, tau: FiniteTransformation },
    /// Split from the partner chain (only meaningful inside a two-chain game).
    Separate,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::Henkin { k, x } => write!(f, "henkin k={k} x=<{x}>"),
            Task::Decide(a) => write!(f, "decide <{a}>"),
            Task::Omit { family, tau } => write!(f, "omit family={family} tau={tau}"),
            Task::Separate => write!(f, "separate"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    In,
    Out,
    Undecided,
}

/// Types to omit: each family is a list of elements meant to have meet 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TypeFamily {
    families: Vec<Vec<CylinderElement>>,
}

impl TypeFamily {
    /// Validates that members are nonzero and that every sub-meet of at most
    /// `depth` members is nonzero.
    pub fn new(base: &BaseSpace, families: Vec<Vec<CylinderElement>>, depth: usize) -> Result<Self> {
        for (i, family) in families.iter().enumerate() {
            if family.is_empty() {
                return Err(Error::Precondition(format!("type family {i} is empty")));
            }
            for size in 1..=depth.min(family.len()) {
                for subset in family.iter().combinations(size) {
                    if !is_proper(base, &subset.into_iter().cloned().collect::<Vec<_>>())? {
                        return Err(Error::Precondition(format!(
                            "type family {i} has a finite sub-meet equal to 0"
                        )));
                    }
                }
            }
        }
        Ok(Self { families })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// `{ "s_j=0"·…·"s_{j+m-1}=0" : 1 ≤ m ≤ m_max }`.
    pub fn chain(base: &BaseSpace, j: usize, m_max: usize) -> Result<Vec<CylinderElement>> {
        if m_max == 0 {
            return Err(Error::Precondition("chain family needs m_max ≥ 1".into()));
        }
        let mut out = Vec::with_capacity(m_max);
        let mut acc = base.one();
        for t in 0..m_max {
            acc = base.meet(&acc, &base.literal(j + t, 0)?)?;
            out.push(acc.clone());
        }
        Ok(out)
    }

    pub fn families(&self) -> &[Vec<CylinderElement>] {
        &self.families
    }

    pub fn len(&self) -> usize {
        self.families.len()
    }

    pub fn is_empty(&self) -> bool {
        self.families.is_empty()
    }

    pub fn coordinates(&self) -> BTreeSet<usize> {
        self.families
            .iter()
            .flatten()
            .flat_map(|x| x.support().iter().copied())
            .collect()
    }
}

/// Knobs of the round-robin scheduler.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleConfig {
    /// Decide tasks range over literals, diagonals, and their pairwise meets
    /// and joins on coordinates below this bound.
    pub decide_window: usize,
    /// Omit tasks range over transformations of `{0..omit_window-1}` ...
    pub omit_window: usize,
    /// ... moving at most this many coordinates.
    pub omit_moved: usize,
    /// Keep a per-step trace.
    pub trace: bool,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            decide_window: 4,
            omit_window: 12,
            omit_moved: 1,
            trace: false,
        }
    }
}

/// The Decide enumeration: literals, diagonals, then pairwise meets and
/// joins of those, deduplicated, constants dropped.
pub fn decision_elements(base: &BaseSpace, window: usize) -> Result<Vec<CylinderElement>> {
    let mut atoms = Vec::new();
    for j in 0..window {
        for v in 0..base.n() {
            atoms.push(base.literal(j, v)?);
        }
    }
    for (i, j) in (0..window).tuple_combinations() {
        atoms.push(base.diagonal(i, j)?);
    }
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut push = |e: CylinderElement, out: &mut Vec<CylinderElement>| {
        if !e.is_zero() && !e.is_one() && seen.insert(e.clone()) {
            out.push(e);
        }
    };
    for a in &atoms {
        push(a.clone(), &mut out);
    }
    for (a, b) in atoms.iter().tuple_combinations() {
        push(base.meet(a, b)?, &mut out);
        push(base.join(a, b)?, &mut out);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HenkinRecord {
    pub step: usize,
    pub k: usize,
    pub x: CylinderElement,
    pub witness: usize,
    pub condition: CylinderElement,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmitRecord {
    pub step: usize,
    pub family: usize,
    pub tau: FiniteTransformation,
    pub member: usize,
    pub condition: CylinderElement,
}

#[derive(Debug, Clone)]
struct Schedule {
    decide_list: Vec<CylinderElement>,
    decide_cursor: usize,
    omit_pairs: Vec<(usize, FiniteTransformation)>,
    omit_cursor: usize,
    round: usize,
}

#[derive(Debug, Clone)]
pub struct ChainState {
    base: BaseSpace,
    seed: CylinderElement,
    conditions: Vec<CylinderElement>,
    store: ConstraintStore,
    decided: BTreeMap<CylinderElement, bool>,
    families: TypeFamily,
    henkin_queue: VecDeque<(usize, CylinderElement)>,
    henkin_log: Vec<HenkinRecord>,
    omit_log: Vec<OmitRecord>,
    used_witnesses: BTreeSet<usize>,
    avoid: BTreeSet<usize>,
    rng_seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
    step: usize,
    schedule: Schedule,
    trace: Option<Vec<String>>,
}

impl ChainState {
    /// A chain whose only condition is `seed`.
    pub fn new(base: &BaseSpace, seed: CylinderElement, rng_seed: u64) -> Result<Self> {
        Self::with_schedule(base, seed, TypeFamily::empty(), rng_seed, &ScheduleConfig::default())
    }

    pub fn with_schedule(
        base: &BaseSpace,
        seed: CylinderElement,
        families: TypeFamily,
        rng_seed: u64,
        config: &ScheduleConfig,
    ) -> Result<Self> {
        if seed.is_zero() {
            return Err(Error::Precondition("the chain seed must be nonzero".into()));
        }
        let mut avoid = families.coordinates();
        let mut omit_pairs = Vec::new();
        if !families.is_empty() {
            avoid.extend(0..config.omit_window);
            for tau in FiniteTransformation::enumerate_bounded(config.omit_window, config.omit_moved) {
                for i in 0..families.len() {
                    omit_pairs.push((i, tau.clone()));
                }
            }
        }
        let mut state = Self {
            base: base.clone(),
            seed: seed.clone(),
            conditions: Vec::new(),
            store: ConstraintStore::new(base),
            decided: BTreeMap::new(),
            families,
            henkin_queue: VecDeque::new(),
            henkin_log: Vec::new(),
            omit_log: Vec::new(),
            used_witnesses: BTreeSet::new(),
            avoid,
            rng_seed,
            stream: 0,
            rng: ChaCha8Rng::seed_from_u64(rng_seed),
            step: 0,
            schedule: Schedule {
                decide_list: decision_elements(base, config.decide_window)?,
                decide_cursor: 0,
                omit_pairs,
                omit_cursor: 0,
                round: 0,
            },
            trace: config.trace.then(Vec::new),
        };
        state.commit(seed, "seed")?;
        Ok(state)
    }

    pub fn base(&self) -> &BaseSpace {
        &self.base
    }

    pub fn seed(&self) -> &CylinderElement {
        &self.seed
    }

    pub fn conditions(&self) -> &[CylinderElement] {
        &self.conditions
    }

    pub fn decided(&self) -> &BTreeMap<CylinderElement, bool> {
        &self.decided
    }

    pub fn henkin_log(&self) -> &[HenkinRecord] {
        &self.henkin_log
    }

    pub fn omit_log(&self) -> &[OmitRecord] {
        &self.omit_log
    }

    pub fn families(&self) -> &TypeFamily {
        &self.families
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn trace(&self) -> &[String] {
        self.trace.as_deref().unwrap_or(&[])
    }

    /// A point of the meet of all conditions, on every coordinate they mention.
    pub fn certificate(&self) -> BTreeMap<usize, usize> {
        let model = self.store.model();
        self.store
            .variables()
            .map(|v| (v, model.get(&v).copied().unwrap_or(0)))
            .collect()
    }

    /// Whether the meet of the conditions lies below `y`.
    pub fn generated_filter_contains(&self, y: &CylinderElement) -> Result<bool> {
        self.store.entails(y)
    }

    /// Whether adding `y` keeps the chain proper.
    pub fn consistent_with(&self, y: &CylinderElement) -> Result<bool> {
        self.store.consistent_with(std::slice::from_ref(y))
    }

    /// Smallest coordinate unused by conditions, `x`, earlier witnesses, and
    /// the coordinates reserved for type families.
    pub fn fresh_coordinate(&self, x: &CylinderElement) -> usize {
        self.fresh_avoiding(x.support().iter().copied())
    }

    /// Like [`fresh_coordinate`](Self::fresh_coordinate), also avoiding `extra`.
    pub fn fresh_avoiding(&self, extra: impl IntoIterator<Item = usize>) -> usize {
        let mut taken: BTreeSet<usize> = self
            .conditions
            .iter()
            .flat_map(|c| c.support().iter().copied())
            .collect();
        taken.extend(extra);
        (0..)
            .find(|u| !taken.contains(u) && !self.used_witnesses.contains(u) && !self.avoid.contains(u))
            .expect("coordinates are unbounded")
    }

    /// Reserves coordinates so later Henkin witnesses avoid them.
    pub fn reserve(&mut self, coords: impl IntoIterator<Item = usize>) {
        self.avoid.extend(coords);
    }

    fn format_certificate(&self) -> String {
        self.certificate().iter().map(|(c, v)| format!("{c}:{v}")).join(",")
    }

    fn commit(&mut self, c: CylinderElement, label: &str) -> Result<()> {
        if !self.store.try_add(c.clone())? {
            return Err(Error::Precondition(format!(
                "committing <{c}> would make the chain improper"
            )));
        }
        for k in c.support() {
            self.henkin_queue.push_back((*k, c.clone()));
        }
        self.conditions.push(c.clone());
        debug_assert!(self
            .conditions
            .iter()
            .all(|d| d.contains(|v| *self.store.model().get(&v).unwrap_or(&0))));
        let line = self.trace.is_some().then(|| {
            format!(
                "{} {} | <{}> | cert ({})",
                self.step,
                label,
                c,
                self.format_certificate()
            )
        });
        if let (Some(t), Some(line)) = (self.trace.as_mut(), line) {
            t.push(line);
        }
        Ok(())
    }

    fn note(&mut self, label: String) {
        if let Some(t) = self.trace.as_mut() {
            t.push(format!("{} {}", self.step, label));
        }
    }

    /// Executes one task.
    pub fn step(&mut self, task: &Task) -> Result<()> {
        self.step += 1;
        let label = task.to_string();
        match task {
            Task::Henkin { k, x } => self.henkin(*k, x, &label),
            Task::Decide(a) => self.decide(a, &label).map(|_| ()),
            Task::Omit { family, tau } => self.omit(*family, tau, &label),
            Task::Separate => {
                self.note(format!("{label} | no partner, skipped"));
                Ok(())
            }
        }
    }

    fn henkin(&mut self, k: usize, x: &CylinderElement, label: &str) -> Result<()> {
        let u = self.fresh_coordinate(x);
        let b = &self.base;
        let witness = b.substitute(&FiniteTransformation::replace(k, u), x)?;
        let cond = b.join(&b.complement(&b.cylindrify(k, x)?), &witness)?;
        self.used_witnesses.insert(u);
        self.henkin_log.push(HenkinRecord {
            step: self.step,
            k,
            x: x.clone(),
            witness: u,
            condition: cond.clone(),
        });
        self.commit(cond, &format!("{label} u={u}"))
    }

    fn decide(&mut self, a: &CylinderElement, label: &str) -> Result<bool> {
        let verdict = if self.store.entails(a)? {
            self.note(format!("{label} | already in"));
            true
        } else if self.store.entails(&self.base.complement(a))? {
            self.note(format!("{label} | already out"));
            false
        } else {
            self.commit(a.clone(), label)?;
            true
        };
        self.decided.insert(a.clone(), verdict);
        Ok(verdict)
    }

    fn omit(&mut self, family: usize, tau: &FiniteTransformation, label: &str) -> Result<()> {
        let members = self
            .families
            .families()
            .get(family)
            .ok_or_else(|| Error::Precondition(format!("no type family {family}")))?
            .clone();
        for (m, x) in members.iter().enumerate() {
            let neg = self.base.complement(&self.base.substitute(tau, x)?);
            if self.consistent_with(&neg)? {
                self.omit_log.push(OmitRecord {
                    step: self.step,
                    family,
                    tau: tau.clone(),
                    member: m,
                    condition: neg.clone(),
                });
                return self.commit(neg, &format!("{label} member={m}"));
            }
        }
        Err(Error::FamilyExhausted {
            family,
            transformation: tau.to_string(),
        })
    }

    /// In/out if the chain already decides `x`; with `force`, decides it.
    pub fn membership(&mut self, x: &CylinderElement, force: bool) -> Result<Membership> {
        if self.store.entails(x)? {
            return Ok(Membership::In);
        }
        if self.store.entails(&self.base.complement(x))? {
            return Ok(Membership::Out);
        }
        if !force {
            return Ok(Membership::Undecided);
        }
        self.step += 1;
        let label = format!("force <{x}>");
        Ok(if self.decide(x, &label)? {
            Membership::In
        } else {
            Membership::Out
        })
    }

    /// The read-only half of [`membership`](Self::membership).
    pub fn peek(&self, x: &CylinderElement) -> Result<Membership> {
        Ok(if self.store.entails(x)? {
            Membership::In
        } else if self.store.entails(&self.base.complement(x))? {
            Membership::Out
        } else {
            Membership::Undecided
        })
    }

    fn next_henkin(&mut self) -> Option<Task> {
        while let Some((k, x)) = self.henkin_queue.pop_front() {
            if x.depends_on(k) {
                return Some(Task::Henkin { k, x });
            }
        }
        None
    }

    fn next_decide(&mut self) -> Option<Task> {
        let list = &self.schedule.decide_list;
        while self.schedule.decide_cursor < list.len() {
            let a = &list[self.schedule.decide_cursor];
            self.schedule.decide_cursor += 1;
            if !self.decided.contains_key(a) {
                return Some(Task::Decide(a.clone()));
            }
        }
        None
    }

    fn next_omit(&mut self) -> Option<Task> {
        let (family, tau) = self.schedule.omit_pairs.get(self.schedule.omit_cursor)?.clone();
        self.schedule.omit_cursor += 1;
        Some(Task::Omit { family, tau })
    }

    /// The next task of the round robin Henkin, Decide, Omit; a kind with
    /// nothing left yields its turn to the next one.
    pub fn next_task(&mut self) -> Option<Task> {
        for offset in 0..3 {
            let kind = (self.schedule.round + offset) % 3;
            let task = match kind {
                0 => self.next_henkin(),
                1 => self.next_decide(),
                _ => self.next_omit(),
            };
            if let Some(t) = task {
                self.schedule.round = kind + 1;
                return Some(t);
            }
        }
        None
    }

    /// Runs `steps` scheduled tasks (fewer if the schedule runs dry).
    pub fn run(&mut self, steps: usize) -> Result<()> {
        for _ in 0..steps {
            match self.next_task() {
                Some(task) => self.step(&task)?,
                None => break,
            }
        }
        Ok(())
    }

    /// Every processed Henkin pair whose `c_k x` is in the chain also has its
    /// witness `s_[k|u] x` in the chain. Returns the violating records.
    pub fn check_henkin_invariant(&self) -> Result<Vec<HenkinRecord>> {
        let mut bad = Vec::new();
        for r in &self.henkin_log {
            let ckx = self.base.cylindrify(r.k, &r.x)?;
            if self.store.entails(&ckx)? {
                let w = self
                    .base
                    .substitute(&FiniteTransformation::replace(r.k, r.witness), &r.x)?;
                if r.x.depends_on(r.witness) || !self.store.entails(&w)? {
                    bad.push(r.clone());
                }
            }
        }
        Ok(bad)
    }

    /// Witness coordinates are pairwise distinct.
    pub fn witnesses_distinct(&self) -> bool {
        self.henkin_log.iter().map(|r| r.witness).all_unique()
    }

    /// Every scheduled omit pair has its negated member in the chain.
    pub fn check_omit_invariant(&self) -> Result<Vec<OmitRecord>> {
        let mut bad = Vec::new();
        for r in &self.omit_log {
            let x = &self.families.families()[r.family][r.member];
            let image = self.base.substitute(&r.tau, x)?;
            if !self.store.entails(&self.base.complement(&image))? {
                bad.push(r.clone());
            }
        }
        Ok(bad)
    }

    /// Two independent copies with divergent random streams.
    pub fn branch(&self) -> (ChainState, ChainState) {
        let mut left = self.clone();
        let mut right = self.clone();
        left.stream = 2 * self.stream + 1;
        right.stream = 2 * self.stream + 2;
        for s in [&mut left, &mut right] {
            s.rng = ChaCha8Rng::seed_from_u64(s.rng_seed);
            s.rng.set_stream(s.stream);
            s.note(format!("branch stream={}", s.stream));
        }
        (left, right)
    }

    fn random_value(&mut self) -> usize {
        self.rng.gen_range(0..self.base.n())
    }
}

/// Runs the round-robin schedule from `seed` for `steps` steps.
pub fn run_schedule(
    base: &BaseSpace,
    seed: CylinderElement,
    families: TypeFamily,
    steps: usize,
    rng_seed: u64,
    config: &ScheduleConfig,
) -> Result<ChainState> {
    let mut state = ChainState::with_schedule(base, seed, families, rng_seed, config)?;
    state.run(steps)?;
    Ok(state)
}

/// The finite subalgebra against which principality is judged.
#[derive(Debug, Clone, PartialEq)]
pub struct CensusWindow {
    pub elements: Vec<CylinderElement>,
    pub atoms: Vec<CylinderElement>,
}

impl CensusWindow {
    pub fn generated(base: &BaseSpace, generators: &[CylinderElement]) -> Result<Self> {
        let elements = boolean_closure(base, generators)?;
        let atoms = atoms_of(base, generators)?;
        Ok(Self { elements, atoms })
    }

    /// The default window: generated by `"s0=0"` and `"s1=0"`.
    pub fn standard(base: &BaseSpace) -> Result<Self> {
        Self::generated(base, &[base.literal(0, 0)?, base.literal(1, 0)?])
    }
}

/// Atoms of the Boolean algebra generated by `generators`.
pub fn atoms_of(base: &BaseSpace, generators: &[CylinderElement]) -> Result<Vec<CylinderElement>> {
    let mut atoms = vec![base.one()];
    for g in generators {
        let ng = base.complement(g);
        let mut next = Vec::new();
        for a in &atoms {
            for part in [base.meet(a, g)?, base.meet(a, &ng)?] {
                if !part.is_zero() {
                    next.push(part);
                }
            }
        }
        atoms = next;
    }
    atoms.sort();
    atoms.dedup();
    Ok(atoms)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SeparateOutcome {
    /// The splitting chain's meet is an atom of the census window.
    Principal {
        atom: CylinderElement,
    },
    Split {
        theta: CylinderElement,
    },
}

fn meet_equals(chain: &ChainState, atom: &CylinderElement) -> Result<bool> {
    if !chain.generated_filter_contains(atom)? {
        return Ok(false);
    }
    for c in chain.conditions() {
        if !chain.base.leq(atom, c)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One splitting move: `s` receives `θ`, `t` receives `-θ`.
///
/// θ is the first element of the census window, then of the Decide list,
/// that properly splits `s` and is consistent with `t` when negated; if
/// none does, a literal on a coordinate fresh for both chains is used.
pub fn separate(s: &mut ChainState, t: &mut ChainState, census: &CensusWindow) -> Result<SeparateOutcome> {
    s.step += 1;
    t.step += 1;
    for atom in &census.atoms {
        if meet_equals(s, atom)? {
            s.note(format!("separate | principal at <{atom}>"));
            t.note(format!("separate | principal at <{atom}>"));
            return Ok(SeparateOutcome::Principal { atom: atom.clone() });
        }
    }
    let base = s.base.clone();
    let candidates: Vec<CylinderElement> = census.elements.iter().chain(&s.schedule.decide_list).cloned().collect();
    let mut chosen = None;
    'search: for c in candidates {
        let nc = base.complement(&c);
        for theta in [c.clone(), nc.clone()] {
            let neg = base.complement(&theta);
            if s.consistent_with(&theta)? && s.consistent_with(&neg)? && t.consistent_with(&neg)? {
                chosen = Some(theta);
                break 'search;
            }
        }
    }
    let theta = match chosen {
        Some(th) => th,
        None => {
            let u = (0..)
                .find(|u| !s.store.mentions(*u) && !t.store.mentions(*u))
                .expect("unbounded");
            let v = s.random_value();
            base.literal(u, v)?
        }
    };
    let neg = base.complement(&theta);
    s.commit(theta.clone(), "separate +theta")?;
    t.commit(neg, "separate -theta")?;
    Ok(SeparateOutcome::Split { theta })
}

/// Two chains after a twin game.
#[derive(Debug, Clone)]
pub struct TwinGame {
    pub t: ChainState,
    pub s: ChainState,
    pub outcomes: Vec<SeparateOutcome>,
}

impl TwinGame {
    /// Elements decided by both chains with opposite verdicts.
    pub fn disagreements(&self) -> Vec<CylinderElement> {
        self.t
            .decided()
            .iter()
            .filter(|(e, v)| self.s.decided().get(*e).is_some_and(|w| w != *v))
            .map(|(e, _)| e.clone())
            .collect()
    }

    /// Census atoms consistent with both chains; at most one means the
    /// common part is principal inside the window.
    pub fn common_atoms(&self, census: &CensusWindow) -> Result<Vec<CylinderElement>> {
        let mut out = Vec::new();
        for a in &census.atoms {
            if self.t.consistent_with(a)? && self.s.consistent_with(a)? {
                out.push(a.clone());
            }
        }
        Ok(out)
    }
}

/// Runs the round robin Separate, Henkin, Decide on two chains from 1.
pub fn twin_game(
    base: &BaseSpace,
    steps: usize,
    rng_seed: u64,
    census: &CensusWindow,
    config: &ScheduleConfig,
) -> Result<TwinGame> {
    let t = ChainState::with_schedule(base, base.one(), TypeFamily::empty(), rng_seed, config)?;
    let (mut t, mut s) = t.branch();
    let mut outcomes = Vec::new();
    for step in 0..steps {
        match step % 3 {
            0 => outcomes.push(separate(&mut s, &mut t, census)?),
            1 => {
                for chain in [&mut t, &mut s] {
                    match chain.next_henkin() {
                        Some(task) => chain.step(&task)?,
                        None => chain.step += 1,
                    }
                }
            }
            _ => {
                for chain in [&mut t, &mut s] {
                    match chain.next_decide() {
                        Some(task) => chain.step(&task)?,
                        None => chain.step += 1,
                    }
                }
            }
        }
    }
    Ok(TwinGame { t, s, outcomes })
}

/// Some condition of `a` whose complement `b` contains, if any.
pub fn disagreement(a: &ChainState, b: &ChainState) -> Result<Option<CylinderElement>> {
    for c in a.conditions() {
        if b.generated_filter_contains(&a.base.complement(c))? {
            return Ok(Some(c.clone()));
        }
    }
    Ok(None)
}

/// Branches `depth` times, separating each fresh pair, and returns the
/// `2^depth` leaves in tree order.
pub fn branch_tree(root: &ChainState, depth: usize, census: &CensusWindow) -> Result<Vec<ChainState>> {
    let mut leaves = vec![root.clone()];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(leaves.len() * 2);
        for leaf in &leaves {
            let (mut a, mut b) = leaf.branch();
            separate(&mut a, &mut b, census)?;
            next.push(a);
            next.push(b);
        }
        leaves = next;
    }
    Ok(leaves)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> BaseSpace {
        BaseSpace::discrete(2).unwrap()
    }

    fn lit(b: &BaseSpace, j: usize, v: usize) -> CylinderElement {
        b.literal(j, v).unwrap()
    }

    #[test]
    fn filter_membership_examples() {
        let b = two();
        let fresh = ChainState::new(&b, b.one(), 0).unwrap();
        assert!(fresh.generated_filter_contains(&b.one()).unwrap());
        let c = ChainState::new(&b, lit(&b, 0, 0), 0).unwrap();
        let y = b.join(&lit(&b, 0, 0), &lit(&b, 1, 1)).unwrap();
        assert!(c.generated_filter_contains(&y).unwrap());
        assert!(!c.generated_filter_contains(&lit(&b, 0, 1)).unwrap());
    }

    #[test]
    fn first_decision_commits_the_element() {
        let b = two();
        let mut c = ChainState::new(&b, b.one(), 0).unwrap();
        c.step(&Task::Decide(lit(&b, 0, 0))).unwrap();
        assert_eq!(c.conditions().last().unwrap(), &lit(&b, 0, 0));
        assert_eq!(c.decided().get(&lit(&b, 0, 0)), Some(&true));
    }

    #[test]
    fn henkin_witness_on_fresh_chain() {
        let b = two();
        let mut c = ChainState::new(&b, b.one(), 0).unwrap();
        c.step(&Task::Henkin { k: 0, x: lit(&b, 0, 0) }).unwrap();
        assert_eq!(c.henkin_log()[0].witness, 1);
        assert_eq!(c.conditions().last().unwrap(), &lit(&b, 1, 0));
    }

    #[test]
    fn omit_identity_on_canonical_family() {
        let b = two();
        let fam = TypeFamily::new(&b, vec![TypeFamily::chain(&b, 0, 4).unwrap()], 3).unwrap();
        let mut c = ChainState::with_schedule(&b, b.one(), fam, 0, &ScheduleConfig::default()).unwrap();
        c.step(&Task::Omit {
            family: 0,
            tau: FiniteTransformation::identity(),
        })
        .unwrap();
        assert_eq!(c.conditions().last().unwrap(), &b.complement(&lit(&b, 0, 0)));
        assert!(c.check_omit_invariant().unwrap().is_empty());
    }

    #[test]
    fn exhausted_family_leaves_chain_unchanged() {
        let b = two();
        let fam = TypeFamily::new(&b, vec![vec![lit(&b, 0, 0)]], 1).unwrap();
        let mut c = ChainState::with_schedule(&b, lit(&b, 0, 0), fam, 0, &ScheduleConfig::default()).unwrap();
        let before = c.conditions().to_vec();
        let err = c
            .step(&Task::Omit {
                family: 0,
                tau: FiniteTransformation::identity(),
            })
            .unwrap_err();
        assert!(matches!(err, Error::FamilyExhausted { family: 0, .. }));
        assert_eq!(c.conditions(), before.as_slice());
    }

    #[test]
    fn zero_seed_is_rejected() {
        let b = two();
        assert!(matches!(ChainState::new(&b, b.zero(), 0), Err(Error::Precondition(_))));
    }

    #[test]
    fn schedule_keeps_henkin_invariant() {
        let b = two();
        let c = run_schedule(
            &b,
            lit(&b, 0, 0),
            TypeFamily::empty(),
            100,
            0,
            &ScheduleConfig::default(),
        )
        .unwrap();
        assert!(c.conditions().contains(&lit(&b, 0, 0)));
        assert!(c.check_henkin_invariant().unwrap().is_empty());
        assert!(c.witnesses_distinct());
        let idle = run_schedule(&b, b.one(), TypeFamily::empty(), 0, 0, &ScheduleConfig::default()).unwrap();
        assert_eq!(idle.conditions(), &[b.one()]);
    }

    #[test]
    fn forced_membership_prefers_in() {
        let b = two();
        let mut c = ChainState::new(&b, lit(&b, 0, 0), 0).unwrap();
        assert_eq!(c.membership(&lit(&b, 0, 0), false).unwrap(), Membership::In);
        assert_eq!(c.membership(&lit(&b, 0, 1), false).unwrap(), Membership::Out);
        assert_eq!(c.membership(&lit(&b, 7, 1), false).unwrap(), Membership::Undecided);
        assert_eq!(c.membership(&lit(&b, 7, 1), true).unwrap(), Membership::In);
    }

    #[test]
    fn first_split_uses_first_literal() {
        let b = two();
        let census = CensusWindow::standard(&b).unwrap();
        let game = twin_game(&b, 1, 0, &census, &ScheduleConfig::default()).unwrap();
        assert_eq!(game.outcomes, vec![SeparateOutcome::Split { theta: lit(&b, 0, 0) }]);
        assert_eq!(game.s.conditions().last().unwrap(), &lit(&b, 0, 0));
        assert_eq!(game.t.conditions().last().unwrap(), &lit(&b, 0, 1));
    }

    #[test]
    fn no_split_when_meet_is_a_census_atom() {
        let b = two();
        let census = CensusWindow::generated(&b, &[]).unwrap();
        let root = ChainState::new(&b, b.one(), 0).unwrap();
        let (mut s, mut t) = root.branch();
        let out = separate(&mut s, &mut t, &census).unwrap();
        assert_eq!(out, SeparateOutcome::Principal { atom: b.one() });
        assert_eq!(s.conditions(), t.conditions());
    }

    #[test]
    fn branch_without_steps_matches_parent() {
        let b = two();
        let root = run_schedule(
            &b,
            lit(&b, 0, 0),
            TypeFamily::empty(),
            10,
            3,
            &ScheduleConfig::default(),
        )
        .unwrap();
        let (l, r) = root.branch();
        assert_eq!(l.conditions(), root.conditions());
        assert_eq!(r.conditions(), root.conditions());
    }

    #[test]
    fn branch_tree_leaves_pairwise_disagree() {
        let b = two();
        // a window of two literals would make the depth-2 meets principal
        let gens: Vec<_> = (0..3).map(|j| lit(&b, j, 0)).collect();
        let census = CensusWindow::generated(&b, &gens).unwrap();
        let root = ChainState::new(&b, b.one(), 0).unwrap();
        let leaves = branch_tree(&root, 3, &census).unwrap();
        assert_eq!(leaves.len(), 8);
        for (x, y) in leaves.iter().tuple_combinations() {
            assert!(disagreement(x, y).unwrap().is_some());
        }
    }
}
