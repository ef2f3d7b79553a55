//! Bounded interpolant search and the separating-filter construction.
//!
//! Instances live in a concrete algebra, so term equality is decided by
//! evaluation. The subalgebra generated by a set of elements is approximated
//! by [`sg_closure`]: coordinates below a support cap, operation layers up to
//! a depth cap, and a Boolean closure after every layer.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::chains::{ChainState, Membership, Task};
use crate::cylinder::{BaseSpace, CylinderElement};
use crate::error::{Error, Result};
use crate::solver::ConstraintStore;
use crate::transform::FiniteTransformation;

/// Largest number of atoms a closure level may have.
pub const MAX_ATOMS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Zero,
    One,
    Generator(String),
    Diagonal(usize, usize),
    Complement(Box<Term>),
    Meet(Box<Term>, Box<Term>),
    Join(Box<Term>, Box<Term>),
    Cylindrify(usize, Box<Term>),
    Substitute(usize, usize, Box<Term>),
    Interior(usize, Box<Term>),
}

impl Term {
    fn not(t: &Term) -> Term {
        match t {
            Term::Zero => Term::One,
            Term::One => Term::Zero,
            Term::Complement(inner) => (**inner).clone(),
            _ => Term::Complement(Box::new(t.clone())),
        }
    }

    fn meet(a: &Term, b: &Term) -> Term {
        match (a, b) {
            (Term::One, t) | (t, Term::One) => t.clone(),
            _ => Term::Meet(Box::new(a.clone()), Box::new(b.clone())),
        }
    }

    fn join(a: &Term, b: &Term) -> Term {
        match (a, b) {
            (Term::Zero, t) | (t, Term::Zero) => t.clone(),
            _ => Term::Join(Box::new(a.clone()), Box::new(b.clone())),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Zero => write!(f, "0"),
            Term::One => write!(f, "1"),
            Term::Generator(name) => write!(f, "{name}"),
            Term::Diagonal(i, j) => write!(f, "d({i},{j})"),
            Term::Complement(t) => write!(f, "-{t}"),
            Term::Meet(a, b) => write!(f, "({a} * {b})"),
            Term::Join(a, b) => write!(f, "({a} + {b})"),
            Term::Cylindrify(k, t) => write!(f, "c{k}({t})"),
            Term::Substitute(i, j, t) => write!(f, "s[{i}|{j}]({t})"),
            Term::Interior(k, t) => write!(f, "I{k}({t})"),
        }
    }
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// A named generator.
pub type Generator = (String, CylinderElement);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SgCaps {
    pub support_cap: usize,
    pub depth_cap: usize,
}

/// Finite approximation of the subalgebra generated by some elements.
#[derive(Debug, Clone)]
pub struct GeneratedSubalgebra {
    generators: Vec<Generator>,
    caps: SgCaps,
    depth_reached: usize,
    saturated: bool,
    elements: Vec<CylinderElement>,
    terms: Vec<Term>,
    index: HashMap<CylinderElement, usize>,
    atoms: Vec<usize>,
}

impl GeneratedSubalgebra {
    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn caps(&self) -> SgCaps {
        self.caps
    }

    /// Operation layers applied before the closure stopped.
    pub fn depth_reached(&self) -> usize {
        self.depth_reached
    }

    /// Whether another layer would add nothing.
    pub fn is_saturated(&self) -> bool {
        self.saturated
    }

    /// Elements in enumeration order: 0, 1, generators, then the rest.
    pub fn elements(&self) -> &[CylinderElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn term(&self, i: usize) -> &Term {
        &self.terms[i]
    }

    pub fn position(&self, x: &CylinderElement) -> Option<usize> {
        self.index.get(x).copied()
    }

    pub fn contains(&self, x: &CylinderElement) -> bool {
        self.index.contains_key(x)
    }

    pub fn term_of(&self, x: &CylinderElement) -> Option<&Term> {
        self.position(x).map(|i| &self.terms[i])
    }

    pub fn atoms(&self) -> impl Iterator<Item = &CylinderElement> + '_ {
        self.atoms.iter().map(|i| &self.elements[*i])
    }

    fn insert(&mut self, x: CylinderElement, t: Term) -> bool {
        if self.index.contains_key(&x) {
            return false;
        }
        self.index.insert(x.clone(), self.elements.len());
        self.elements.push(x);
        self.terms.push(t);
        true
    }

    /// Refines the atoms by `inputs` and adds every join of atoms.
    fn close(&mut self, base: &BaseSpace, inputs: Vec<(CylinderElement, Term)>) -> Result<()> {
        let mut atoms: Vec<(CylinderElement, Term)> = self
            .atoms
            .iter()
            .map(|i| (self.elements[*i].clone(), self.terms[*i].clone()))
            .collect();
        for (g, tg) in &inputs {
            let ng = base.complement(g);
            let not_tg = Term::not(tg);
            let mut next = Vec::with_capacity(atoms.len() * 2);
            for (a, ta) in &atoms {
                let inside = base.meet(a, g)?;
                let outside = base.meet(a, &ng)?;
                match (inside.is_zero(), outside.is_zero()) {
                    (false, true) | (true, false) => next.push((a.clone(), ta.clone())),
                    (false, false) => {
                        next.push((inside, Term::meet(ta, tg)));
                        next.push((outside, Term::meet(ta, &not_tg)));
                    }
                    (true, true) => unreachable!("atoms are nonzero"),
                }
            }
            if next.len() > MAX_ATOMS {
                return Err(Error::Resource(format!(
                    "subalgebra closure needs more than {MAX_ATOMS} atoms after adding {tg}"
                )));
            }
            atoms = next;
        }
        for (x, t) in inputs {
            self.insert(x, t);
        }
        for (a, t) in &atoms {
            self.insert(a.clone(), t.clone());
        }
        let mut joins: Vec<CylinderElement> = Vec::with_capacity(1 << atoms.len());
        joins.push(base.zero());
        for mask in 1usize..(1 << atoms.len()) {
            let low = mask.trailing_zeros() as usize;
            let e = base.join(&joins[mask & (mask - 1)], &atoms[low].0)?;
            if !self.index.contains_key(&e) {
                let t = (0..atoms.len())
                    .filter(|p| mask & (1 << p) != 0)
                    .map(|p| atoms[p].1.clone())
                    .reduce(|a, b| Term::join(&a, &b))
                    .expect("nonempty mask");
                self.insert(e.clone(), t);
            }
            joins.push(e);
        }
        self.atoms = atoms.iter().map(|(a, _)| self.index[a]).collect();
        Ok(())
    }
}

/// Closes `generators` and the diagonals under every operation with
/// coordinates below `support_cap`, one layer at a time, for at most
/// `depth_cap` layers.
pub fn sg_closure(
    base: &BaseSpace,
    generators: &[Generator],
    support_cap: usize,
    depth_cap: usize,
) -> Result<GeneratedSubalgebra> {
    if support_cap == 0 || depth_cap == 0 {
        return Err(Error::Precondition("subalgebra caps must be at least 1".into()));
    }
    let mut unique: Vec<Generator> = Vec::new();
    for (name, g) in generators {
        if !unique.iter().any(|(_, h)| h == g) {
            unique.push((name.clone(), g.clone()));
        }
    }
    let mut sg = GeneratedSubalgebra {
        generators: unique.clone(),
        caps: SgCaps { support_cap, depth_cap },
        depth_reached: 0,
        saturated: false,
        elements: Vec::new(),
        terms: Vec::new(),
        index: HashMap::new(),
        atoms: Vec::new(),
    };
    sg.insert(base.zero(), Term::Zero);
    sg.insert(base.one(), Term::One);
    sg.atoms = vec![1];
    let mut inputs: Vec<(CylinderElement, Term)> =
        unique.into_iter().map(|(name, g)| (g, Term::Generator(name))).collect();
    for i in 0..support_cap {
        for j in i + 1..support_cap {
            inputs.push((base.diagonal(i, j)?, Term::Diagonal(i, j)));
        }
    }
    sg.close(base, inputs)?;
    for depth in 1..=depth_cap {
        let mut fresh: Vec<(CylinderElement, Term)> = Vec::new();
        let mut seen: BTreeSet<CylinderElement> = BTreeSet::new();
        let mut offer = |x: CylinderElement, t: Term, sg: &GeneratedSubalgebra| {
            if !sg.contains(&x) && seen.insert(x.clone()) {
                fresh.push((x, t));
            }
        };
        // cylindrifications and substitutions are additive, so atoms suffice
        for &a in &sg.atoms.clone() {
            let (x, t) = (sg.elements[a].clone(), sg.terms[a].clone());
            for k in 0..support_cap {
                offer(base.cylindrify(k, &x)?, Term::Cylindrify(k, Box::new(t.clone())), &sg);
                for j in 0..support_cap {
                    if j != k {
                        let tau = FiniteTransformation::replace(k, j);
                        offer(
                            base.substitute(&tau, &x)?,
                            Term::Substitute(k, j, Box::new(t.clone())),
                            &sg,
                        );
                    }
                }
            }
        }
        for e in 0..sg.elements.len() {
            for k in 0..support_cap {
                let x = base.interior(k, &sg.elements[e])?;
                offer(x, Term::Interior(k, Box::new(sg.terms[e].clone())), &sg);
            }
        }
        if fresh.is_empty() {
            sg.saturated = true;
            break;
        }
        sg.close(base, fresh)?;
        sg.depth_reached = depth;
    }
    Ok(sg)
}

#[derive(Debug, Clone)]
pub struct InterpolationInstance {
    pub base: BaseSpace,
    pub x1: Vec<Generator>,
    pub x2: Vec<Generator>,
    pub a: CylinderElement,
    pub c: CylinderElement,
}

impl InterpolationInstance {
    pub fn new(
        base: &BaseSpace,
        x1: Vec<Generator>,
        x2: Vec<Generator>,
        a: CylinderElement,
        c: CylinderElement,
    ) -> Result<Self> {
        for (name, g) in &x1 {
            if x2.iter().any(|(other, h)| other == name && h != g) {
                return Err(Error::Malformed(format!(
                    "generator {name} names two different elements"
                )));
            }
        }
        if !base.leq(&a, &c)? {
            return Err(Error::Precondition(format!("a = <{a}> is not below c = <{c}>")));
        }
        Ok(Self {
            base: base.clone(),
            x1,
            x2,
            a,
            c,
        })
    }

    /// Generators of `X₁` that also occur in `X₂`.
    pub fn common(&self) -> Vec<Generator> {
        self.x1
            .iter()
            .filter(|(_, g)| self.x2.iter().any(|(_, h)| h == g))
            .cloned()
            .collect()
    }

    /// The instance `(−c, −a)` with the generator sets swapped.
    pub fn dual(&self) -> Self {
        Self {
            base: self.base.clone(),
            x1: self.x2.clone(),
            x2: self.x1.clone(),
            a: self.base.complement(&self.c),
            c: self.base.complement(&self.a),
        }
    }

    pub fn is_interpolant(&self, b: &CylinderElement) -> Result<bool> {
        Ok(self.base.leq(&self.a, b)? && self.base.leq(b, &self.c)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum InterpolantOutcome {
    Found {
        element: CylinderElement,
        term: Term,
    },
    /// Nothing in the capped closure; says nothing about larger caps.
    NotFoundWithinBounds {
        caps: SgCaps,
        searched: usize,
    },
}

impl InterpolantOutcome {
    pub fn found(&self) -> Option<&CylinderElement> {
        match self {
            InterpolantOutcome::Found { element, .. } => Some(element),
            InterpolantOutcome::NotFoundWithinBounds { .. } => None,
        }
    }
}

/// Scans the capped closure of the common generators for `b` with `a ≤ b ≤ c`.
pub fn find_interpolant(inst: &InterpolationInstance, caps: SgCaps) -> Result<InterpolantOutcome> {
    let sg = sg_closure(&inst.base, &inst.common(), caps.support_cap, caps.depth_cap)?;
    for (i, e) in sg.elements().iter().enumerate() {
        if inst.is_interpolant(e)? {
            return Ok(InterpolantOutcome::Found {
                element: e.clone(),
                term: sg.term(i).clone(),
            });
        }
    }
    Ok(InterpolantOutcome::NotFoundWithinBounds {
        caps,
        searched: sg.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessPair {
    pub step: usize,
    pub k: usize,
    pub x: Term,
    pub u: usize,
    pub l: usize,
    pub y: Term,
    pub v: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub step: usize,
    pub b0: CylinderElement,
    pub b0_term: Term,
    pub b1: CylinderElement,
    pub b1_term: Term,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterExtension {
    /// Atom of the common subalgebra generating the ultrafilter `H*`.
    pub atom: CylinderElement,
    pub atom_term: Term,
    pub f1_conditions: usize,
    pub f2_conditions: usize,
    pub f1_witnesses: usize,
    pub f2_witnesses: usize,
    /// Whether `F₁` and `F₂` decide every common element alike.
    pub agree_on_common: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationReport {
    pub caps: SgCaps,
    pub common_size: usize,
    pub steps: usize,
    pub witnesses: Vec<WitnessPair>,
    pub proper: bool,
    pub violation: Option<Violation>,
    /// Least common elements above the two traces; `H` is generated by their meet.
    pub h_bounds: Option<(Term, Term)>,
    pub extension: Option<FilterExtension>,
    pub note: &'static str,
}

pub struct SeparatingFilters {
    pub h1: ConstraintStore,
    pub h2: ConstraintStore,
    pub f1: Option<ChainState>,
    pub f2: Option<ChainState>,
    pub report: SeparationReport,
}

const SEPARATION_NOTE: &str =
    "finite evidence only: a proper H within these caps does not show that no interpolant exists";

/// Henkin pairs `(k, x)` with `k ∈ Δx`, in enumeration order.
fn henkin_pairs(sg: &GeneratedSubalgebra) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, x) in sg.elements().iter().enumerate() {
        for &k in x.support() {
            out.push((k, i));
        }
    }
    out
}

/// Meet of the common elements above the trace; zero when the trace is improper.
fn least_above(
    base: &BaseSpace,
    store: Option<&ConstraintStore>,
    common: &GeneratedSubalgebra,
) -> Result<CylinderElement> {
    let Some(store) = store else {
        return Ok(base.zero());
    };
    let mut m = base.one();
    for e in common.elements() {
        if !base.leq(&m, e)? && store.entails(e)? {
            m = base.meet(&m, e)?;
        }
    }
    Ok(m)
}

fn disjunction(base: &BaseSpace, k: usize, x: &CylinderElement, u: usize) -> Result<CylinderElement> {
    let ckx = base.cylindrify(k, x)?;
    let sub = base.substitute(&FiniteTransformation::replace(k, u), x)?;
    base.join(&base.complement(&ckx), &sub)
}

/// Builds the traces `Y₁ = {a} ∪ Henkin(Sg X₁)` and `Y₂ = {−c} ∪ Henkin(Sg X₂)`
/// with interleaved fresh witnesses and checks after every step that the
/// least common elements above them have a nonzero meet.
pub fn build_separating_filters(
    inst: &InterpolationInstance,
    caps: SgCaps,
    steps: usize,
    rng_seed: u64,
) -> Result<SeparatingFilters> {
    let base = &inst.base;
    let sg1 = sg_closure(base, &inst.x1, caps.support_cap, caps.depth_cap)?;
    let sg2 = sg_closure(base, &inst.x2, caps.support_cap, caps.depth_cap)?;
    let common = sg_closure(base, &inst.common(), caps.support_cap, caps.depth_cap)?;
    let pairs1 = henkin_pairs(&sg1);
    let pairs2 = henkin_pairs(&sg2);

    let mut next = [&inst.a, &inst.c]
        .into_iter()
        .chain(sg1.elements())
        .chain(sg2.elements())
        .filter_map(|e| e.max_coordinate())
        .max()
        .map_or(0, |m| m + 1)
        .max(caps.support_cap);

    let mut h1 = ConstraintStore::new(base);
    let mut h2 = ConstraintStore::new(base);
    let mut proper1 = h1.try_add(inst.a.clone())?;
    let mut proper2 = h2.try_add(base.complement(&inst.c))?;
    let mut y1 = vec![inst.a.clone()];
    let mut y2 = vec![base.complement(&inst.c)];
    let mut witnesses = Vec::new();
    let mut violation = None;
    let mut bounds = (base.one(), base.one());
    let total = steps.min(pairs1.len().max(pairs2.len()));
    for step in 0..=total {
        if step > 0 {
            let (k, xi) = pairs1[(step - 1) % pairs1.len().max(1)];
            let (l, yi) = pairs2[(step - 1) % pairs2.len().max(1)];
            let u = next;
            let v = next + 1;
            next += 2;
            if step <= pairs1.len() {
                let d = disjunction(base, k, &sg1.elements()[xi], u)?;
                proper1 &= h1.try_add(d.clone())?;
                y1.push(d);
            }
            if step <= pairs2.len() {
                let d = disjunction(base, l, &sg2.elements()[yi], v)?;
                proper2 &= h2.try_add(d.clone())?;
                y2.push(d);
            }
            witnesses.push(WitnessPair {
                step,
                k,
                x: sg1.term(xi).clone(),
                u,
                l,
                y: sg2.term(yi).clone(),
                v,
            });
        }
        let m1 = least_above(base, proper1.then_some(&h1), &common)?;
        let m2 = least_above(base, proper2.then_some(&h2), &common)?;
        bounds = (m1.clone(), m2.clone());
        if base.meet(&m1, &m2)?.is_zero() {
            let term = |e: &CylinderElement| common.term_of(e).cloned().unwrap_or(Term::Zero);
            violation = Some(Violation {
                step,
                b0_term: term(&m1),
                b0: m1,
                b1_term: term(&m2),
                b1: m2,
            });
            break;
        }
    }

    let term = |e: &CylinderElement| common.term_of(e).cloned().unwrap_or(Term::One);
    let h_bounds = Some((term(&bounds.0), term(&bounds.1)));
    let (mut f1, mut f2, mut extension) = (None, None, None);
    if violation.is_none() {
        let mut atom = base.meet(&bounds.0, &bounds.1)?;
        for e in common.elements() {
            let narrower = base.meet(&atom, e)?;
            if !narrower.is_zero() {
                atom = narrower;
            }
        }
        let mut chains = Vec::new();
        for (seed, trace) in [(&inst.a, &y1), (&base.complement(&inst.c), &y2)] {
            let mut chain = ChainState::new(base, seed.clone(), rng_seed)?;
            for y in trace.iter().skip(1) {
                chain.step(&Task::Decide(y.clone()))?;
            }
            chain.step(&Task::Decide(atom.clone()))?;
            chain.run(steps)?;
            chains.push(chain);
        }
        let mut agree = true;
        for e in common.elements() {
            let in1 = chains[0].peek(e)? == Membership::In;
            let in2 = chains[1].peek(e)? == Membership::In;
            agree &= in1 == in2;
        }
        let c2 = chains.pop().expect("two chains");
        let c1 = chains.pop().expect("two chains");
        extension = Some(FilterExtension {
            atom_term: term(&atom),
            atom,
            f1_conditions: c1.conditions().len(),
            f2_conditions: c2.conditions().len(),
            f1_witnesses: c1.henkin_log().len(),
            f2_witnesses: c2.henkin_log().len(),
            agree_on_common: agree,
        });
        f1 = Some(c1);
        f2 = Some(c2);
    }
    let report = SeparationReport {
        caps,
        common_size: common.len(),
        steps: witnesses.len(),
        witnesses,
        proper: violation.is_none(),
        violation,
        h_bounds,
        extension,
        note: SEPARATION_NOTE,
    };
    Ok(SeparatingFilters { h1, h2, f1, f2, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(b: &BaseSpace, j: usize, v: usize) -> CylinderElement {
        b.literal(j, v).unwrap()
    }

    fn named(name: &str, x: &CylinderElement) -> Generator {
        (name.to_string(), x.clone())
    }

    /// Every element reachable by any operation, with no depth limit.
    fn naive_closure(b: &BaseSpace, gens: &[CylinderElement], cap: usize) -> BTreeSet<CylinderElement> {
        let mut set: BTreeSet<CylinderElement> = gens.iter().cloned().collect();
        set.insert(b.zero());
        set.insert(b.one());
        for i in 0..cap {
            for j in 0..cap {
                set.insert(b.diagonal(i, j).unwrap());
            }
        }
        loop {
            let cur: Vec<CylinderElement> = set.iter().cloned().collect();
            let mut grown = set.clone();
            for x in &cur {
                grown.insert(b.complement(x));
                for k in 0..cap {
                    grown.insert(b.cylindrify(k, x).unwrap());
                    grown.insert(b.interior(k, x).unwrap());
                    for j in 0..cap {
                        grown.insert(b.substitute(&FiniteTransformation::replace(k, j), x).unwrap());
                    }
                }
                for y in &cur {
                    grown.insert(b.meet(x, y).unwrap());
                }
            }
            if grown.len() == set.len() {
                return set;
            }
            set = grown;
        }
    }

    fn example() -> (BaseSpace, InterpolationInstance) {
        let b = BaseSpace::discrete(2).unwrap();
        let (x, y, z) = (lit(&b, 0, 0), lit(&b, 1, 0), lit(&b, 2, 1));
        let a = b.meet(&x, &y).unwrap();
        let c = b.join(&x, &z).unwrap();
        let inst = InterpolationInstance::new(
            &b,
            vec![named("x", &x), named("y", &y)],
            vec![named("x", &x), named("z", &z)],
            a,
            c,
        )
        .unwrap();
        (b, inst)
    }

    #[test]
    fn empty_generators_give_the_minimal_subalgebra() {
        let b = BaseSpace::discrete(2).unwrap();
        let sg = sg_closure(&b, &[], 2, 3).unwrap();
        assert!(sg.is_saturated());
        assert_eq!(sg.elements()[..2], [b.zero(), b.one()]);
        let expected = naive_closure(&b, &[], 2);
        let got: BTreeSet<CylinderElement> = sg.elements().iter().cloned().collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn literal_closure_contains_its_images() {
        let b = BaseSpace::discrete(2).unwrap();
        let x = lit(&b, 0, 0);
        let sg = sg_closure(&b, &[named("x", &x)], 2, 3).unwrap();
        assert!(sg.contains(&lit(&b, 1, 0)));
        assert!(sg.contains(&b.meet(&b.diagonal(0, 1).unwrap(), &x).unwrap()));
        assert_eq!(sg.elements()[2], x);
        let expected = naive_closure(&b, std::slice::from_ref(&x), 2);
        let got: BTreeSet<CylinderElement> = sg.elements().iter().cloned().collect();
        assert_eq!(got, expected);
        let dup = sg_closure(&b, &[named("x", &x), named("x2", &x)], 2, 3).unwrap();
        assert_eq!(dup.elements(), sg.elements());
    }

    #[test]
    fn terms_evaluate_to_their_elements() {
        fn eval(b: &BaseSpace, t: &Term, gens: &[Generator]) -> CylinderElement {
            match t {
                Term::Zero => b.zero(),
                Term::One => b.one(),
                Term::Generator(n) => gens.iter().find(|(m, _)| m == n).unwrap().1.clone(),
                Term::Diagonal(i, j) => b.diagonal(*i, *j).unwrap(),
                Term::Complement(x) => b.complement(&eval(b, x, gens)),
                Term::Meet(x, y) => b.meet(&eval(b, x, gens), &eval(b, y, gens)).unwrap(),
                Term::Join(x, y) => b.join(&eval(b, x, gens), &eval(b, y, gens)).unwrap(),
                Term::Cylindrify(k, x) => b.cylindrify(*k, &eval(b, x, gens)).unwrap(),
                Term::Substitute(i, j, x) => b
                    .substitute(&FiniteTransformation::replace(*i, *j), &eval(b, x, gens))
                    .unwrap(),
                Term::Interior(k, x) => b.interior(*k, &eval(b, x, gens)).unwrap(),
            }
        }
        let b = BaseSpace::sierpinski();
        let gens = vec![named("p", &lit(&b, 0, 0))];
        let sg = sg_closure(&b, &gens, 2, 2).unwrap();
        for (i, e) in sg.elements().iter().enumerate() {
            assert_eq!(&eval(&b, sg.term(i), &gens), e, "term {}", sg.term(i));
        }
    }

    #[test]
    fn three_variable_instance() {
        let (b, inst) = example();
        let caps = SgCaps {
            support_cap: 2,
            depth_cap: 3,
        };
        let found = find_interpolant(&inst, caps).unwrap();
        let InterpolantOutcome::Found { element, term } = &found else {
            panic!("expected an interpolant, got {found:?}");
        };
        assert_eq!(element, &lit(&b, 0, 0));
        assert_eq!(term.to_string(), "x");
        let candidates: Vec<CylinderElement> = naive_closure(&b, &[lit(&b, 0, 0)], 2)
            .into_iter()
            .filter(|e| inst.is_interpolant(e).unwrap())
            .collect();
        assert!(candidates.contains(element));

        let dual = find_interpolant(&inst.dual(), caps).unwrap();
        assert!(inst.dual().is_interpolant(dual.found().unwrap()).unwrap());
        assert!(inst.dual().is_interpolant(&b.complement(element)).unwrap());
    }

    #[test]
    fn trivial_instances() {
        let b = BaseSpace::discrete(2).unwrap();
        let x = lit(&b, 0, 0);
        let caps = SgCaps {
            support_cap: 1,
            depth_cap: 1,
        };
        let zero = InterpolationInstance::new(&b, vec![named("x", &x)], vec![], b.zero(), x.clone()).unwrap();
        assert_eq!(find_interpolant(&zero, caps).unwrap().found(), Some(&b.zero()));
        let one = InterpolationInstance::new(&b, vec![], vec![named("x", &x)], x.clone(), b.one()).unwrap();
        assert_eq!(find_interpolant(&one, caps).unwrap().found(), Some(&b.one()));
        assert!(matches!(
            InterpolationInstance::new(&b, vec![], vec![], b.one(), x),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn separating_filters_on_the_example_find_the_interpolant() {
        let (b, inst) = example();
        let caps = SgCaps {
            support_cap: 2,
            depth_cap: 3,
        };
        let out = build_separating_filters(&inst, caps, 6, 0).unwrap();
        let v = out.report.violation.as_ref().expect("an interpolant exists");
        assert!(b.meet(&v.b0, &v.b1).unwrap().is_zero());
        assert_eq!(v.b1, b.complement(&lit(&b, 0, 0)));
        assert!(inst.is_interpolant(&v.b0).unwrap());
        assert!(inst.is_interpolant(&b.complement(&v.b1)).unwrap());
    }

    #[test]
    fn degenerate_instance_is_improper_at_once() {
        let b = BaseSpace::discrete(2).unwrap();
        let x = lit(&b, 0, 0);
        let inst =
            InterpolationInstance::new(&b, vec![named("a", &x)], vec![named("a", &x)], x.clone(), x.clone()).unwrap();
        let out = build_separating_filters(
            &inst,
            SgCaps {
                support_cap: 1,
                depth_cap: 1,
            },
            4,
            0,
        )
        .unwrap();
        let v = out.report.violation.expect("forced failure");
        assert_eq!(v.step, 0);
        assert_eq!((v.b0, v.b1), (x.clone(), b.complement(&x)));
    }

    #[test]
    fn without_interpolant_the_filters_stay_proper() {
        // a and c share no generators, and the minimal subalgebra has no interpolant
        let b = BaseSpace::discrete(2).unwrap();
        let (y, z) = (lit(&b, 1, 0), lit(&b, 2, 1));
        let a = b.meet(&y, &b.diagonal(0, 1).unwrap()).unwrap();
        let c = b.join(&z, &b.diagonal(0, 1).unwrap()).unwrap();
        let inst = InterpolationInstance::new(&b, vec![named("y", &y)], vec![named("z", &z)], a, c).unwrap();
        let caps = SgCaps {
            support_cap: 2,
            depth_cap: 2,
        };
        let found = find_interpolant(&inst, caps).unwrap();
        assert_eq!(found.found(), Some(&b.diagonal(0, 1).unwrap()));

        let apart = InterpolationInstance::new(
            &b,
            vec![named("y", &y)],
            vec![named("z", &z)],
            y.clone(),
            b.join(&y, &z).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            find_interpolant(&apart, caps).unwrap(),
            InterpolantOutcome::NotFoundWithinBounds { .. }
        ));
        let out = build_separating_filters(&apart, caps, 8, 0).unwrap();
        assert!(out.report.proper, "{:?}", out.report.violation);
        let ext = out.report.extension.expect("H* extends");
        assert!(ext.agree_on_common);
        assert!(out.f1.is_some() && out.f2.is_some());
    }
}
