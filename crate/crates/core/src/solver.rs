//! Satisfiability of finite sets of cylinder elements.
//!
//! A chain's conditions mention ever more coordinates, so their meet cannot
//! be tabulated. Instead the store keeps the conditions as separate
//! constraints over coordinate variables, together with one assignment (a
//! point of the meet) that satisfies all of them.
//!
//! The store also maintains a peeling: a sequence of eliminations of
//! coordinates that occur in a single live constraint. A Henkin disjunction
//! with a private witness coordinate projects to 1 and drops out, so the
//! unpeeled core stays small. A query undoes only the peels that touch its
//! own coordinates (and the later peels depending on those), then runs
//! bucket elimination on the part connected to the query.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};

use crate::cylinder::{BaseSpace, CylinderElement};
use crate::error::Result;

/// Support cap used for intermediate meets during elimination; the row limit
/// of the cylinder layer still applies.
const ELIMINATION_SUPPORT_CAP: usize = 24;

/// Largest number of assignments tried by local repair.
const REPAIR_LIMIT: usize = 4096;

pub type Assignment = BTreeMap<usize, usize>;

fn value(model: &Assignment, var: usize) -> usize {
    model.get(&var).copied().unwrap_or(0)
}

fn satisfies(model: &Assignment, c: &CylinderElement) -> bool {
    c.contains(|v| value(model, v))
}

#[derive(Debug, Clone)]
struct Peel {
    /// Element eliminated (index into `elems`).
    id: usize,
    var: usize,
    /// Projection left behind, when it is not 1.
    message: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ConstraintStore {
    base: BaseSpace,
    constraints: Vec<CylinderElement>,
    by_var: BTreeMap<usize, Vec<usize>>,
    model: Assignment,
    /// Every element the peeling has seen: stored constraints and projections.
    elems: Vec<CylinderElement>,
    dead: Vec<bool>,
    /// Live unpeeled elements by coordinate.
    core: BTreeMap<usize, BTreeSet<usize>>,
    core_ids: BTreeSet<usize>,
    peels: Vec<Option<Peel>>,
    peeled_on: BTreeMap<usize, usize>,
}

impl ConstraintStore {
    pub fn new(base: &BaseSpace) -> Self {
        Self {
            base: base.clone().with_support_cap(ELIMINATION_SUPPORT_CAP),
            constraints: Vec::new(),
            by_var: BTreeMap::new(),
            model: Assignment::new(),
            elems: Vec::new(),
            dead: Vec::new(),
            core: BTreeMap::new(),
            core_ids: BTreeSet::new(),
            peels: Vec::new(),
            peeled_on: BTreeMap::new(),
        }
    }

    pub fn constraints(&self) -> &[CylinderElement] {
        &self.constraints
    }

    /// A point satisfying every stored constraint (unlisted coordinates are 0).
    pub fn model(&self) -> &Assignment {
        &self.model
    }

    /// Coordinates mentioned by some constraint.
    pub fn variables(&self) -> impl Iterator<Item = usize> + '_ {
        self.by_var.keys().copied()
    }

    pub fn mentions(&self, var: usize) -> bool {
        self.by_var.contains_key(&var)
    }

    /// Number of live elements the peeling could not remove.
    pub fn core_size(&self) -> usize {
        self.core_ids.len()
    }

    /// Whether the stored constraints together with `extra` have a common
    /// point; returns such a point.
    pub fn satisfiable_with(&self, extra: &[CylinderElement]) -> Result<Option<Assignment>> {
        self.check(extra, true)
    }

    /// [`satisfiable_with`](Self::satisfiable_with) without building the point.
    pub fn consistent_with(&self, extra: &[CylinderElement]) -> Result<bool> {
        Ok(self.check(extra, false)?.is_some())
    }

    fn check(&self, extra: &[CylinderElement], want_model: bool) -> Result<Option<Assignment>> {
        if extra.iter().any(|e| e.is_zero()) {
            return Ok(None);
        }
        let extra: Vec<&CylinderElement> = extra.iter().filter(|e| !e.is_one()).collect();
        if extra.iter().all(|e| satisfies(&self.model, e)) {
            return Ok(Some(if want_model {
                self.model.clone()
            } else {
                Assignment::new()
            }));
        }
        let vars: BTreeSet<usize> = extra.iter().flat_map(|e| e.support().iter().copied()).collect();
        if let Some(model) = self.repair(&extra, &vars) {
            return Ok(Some(model));
        }
        self.solve(&extra, &vars, want_model)
    }

    /// Whether every point of the store lies in `y`.
    pub fn entails(&self, y: &CylinderElement) -> Result<bool> {
        if y.is_one() {
            return Ok(true);
        }
        if !satisfies(&self.model, y) {
            return Ok(false);
        }
        if self.subsumed(y)? {
            return Ok(true);
        }
        Ok(!self.consistent_with(&[self.base.complement(y)])?)
    }

    /// Whether a stored constraint supported inside `y`'s support lies below `y`.
    fn subsumed(&self, y: &CylinderElement) -> Result<bool> {
        let candidates: BTreeSet<usize> = y
            .support()
            .iter()
            .filter_map(|v| self.by_var.get(v))
            .flatten()
            .copied()
            .collect();
        for i in candidates {
            let c = &self.constraints[i];
            if c.support().iter().all(|v| y.depends_on(*v)) && self.base.leq(c, y)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Adds `c` if that keeps the store satisfiable.
    pub fn try_add(&mut self, c: CylinderElement) -> Result<bool> {
        match self.satisfiable_with(std::slice::from_ref(&c))? {
            Some(model) => {
                self.push(c, model)?;
                Ok(true)
            }
            None => Ok(false),
        }
    }

    fn push(&mut self, c: CylinderElement, model: Assignment) -> Result<()> {
        self.model = model;
        if c.is_one() {
            return Ok(());
        }
        let idx = self.constraints.len();
        for v in c.support() {
            self.by_var.entry(*v).or_default().push(idx);
        }
        self.constraints.push(c.clone());
        debug_assert!(self.constraints.iter().all(|c| satisfies(&self.model, c)));

        // undo the peels the new coordinates invalidate, then peel again
        let mut touched: BTreeSet<usize> = c.support().iter().copied().collect();
        let restored: Vec<Peel> = self
            .restore_set(&touched)
            .into_iter()
            .map(|t| self.peels[t].take().expect("live peel"))
            .collect();
        for peel in &restored {
            self.peeled_on.remove(&peel.var);
            if let Some(m) = peel.message {
                self.dead[m] = true;
                if self.core_ids.contains(&m) {
                    self.core_remove(m);
                }
            }
        }
        for peel in &restored {
            if !self.dead[peel.id] {
                self.core_insert(peel.id);
                touched.extend(self.elems[peel.id].support().iter().copied());
            }
        }
        let id = self.add_elem(c);
        self.core_insert(id);
        self.peel(touched)
    }

    fn add_elem(&mut self, c: CylinderElement) -> usize {
        self.elems.push(c);
        self.dead.push(false);
        self.elems.len() - 1
    }

    fn core_insert(&mut self, id: usize) {
        self.core_ids.insert(id);
        for v in self.elems[id].support() {
            self.core.entry(*v).or_default().insert(id);
        }
    }

    fn core_remove(&mut self, id: usize) {
        self.core_ids.remove(&id);
        for v in self.elems[id].support() {
            if let Some(set) = self.core.get_mut(v) {
                set.remove(&id);
                if set.is_empty() {
                    self.core.remove(v);
                }
            }
        }
    }

    /// Eliminates coordinates that occur in exactly one core element.
    fn peel(&mut self, candidates: BTreeSet<usize>) -> Result<()> {
        let mut work: Vec<usize> = candidates.into_iter().rev().collect();
        while let Some(v) = work.pop() {
            let id = match self.core.get(&v) {
                Some(set) if set.len() == 1 => *set.iter().next().expect("one"),
                _ => continue,
            };
            let message = self.base.cylindrify(v, &self.elems[id])?;
            debug_assert!(!message.is_zero(), "peeling an unsatisfiable store");
            self.core_remove(id);
            let message = if message.is_one() {
                None
            } else {
                let m = self.add_elem(message);
                self.core_insert(m);
                Some(m)
            };
            self.peeled_on.insert(v, self.peels.len());
            self.peels.push(Some(Peel { id, var: v, message }));
            for w in self.elems[id].support() {
                if *w != v && self.core.get(w).is_some_and(|s| s.len() == 1) {
                    work.push(*w);
                }
            }
        }
        Ok(())
    }

    /// Peels to undo so that the coordinates in `vars` are unconstrained by
    /// the peeling: peels on those coordinates, and later peels on any
    /// coordinate of an undone element.
    fn restore_set(&self, vars: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut work: Vec<usize> = vars.iter().filter_map(|v| self.peeled_on.get(v)).copied().collect();
        while let Some(t) = work.pop() {
            if !out.insert(t) {
                continue;
            }
            let peel = self.peels[t].as_ref().expect("live peel");
            for w in self.elems[peel.id].support() {
                if let Some(&t2) = self.peeled_on.get(w) {
                    if t2 > t && !out.contains(&t2) {
                        work.push(t2);
                    }
                }
            }
        }
        out
    }

    /// Tries every assignment of `vars`, keeping the rest of the model.
    fn repair(&self, extra: &[&CylinderElement], vars: &BTreeSet<usize>) -> Option<Assignment> {
        let n = self.base.n();
        let vars: Vec<usize> = vars.iter().copied().collect();
        let total = (n as f64).powi(vars.len() as i32);
        if total > REPAIR_LIMIT as f64 {
            return None;
        }
        let touched: BTreeSet<usize> = vars
            .iter()
            .filter_map(|v| self.by_var.get(v))
            .flatten()
            .copied()
            .collect();
        let mut model = self.model.clone();
        let mut digits = vec![0usize; vars.len()];
        loop {
            for (v, d) in vars.iter().zip(&digits) {
                model.insert(*v, *d);
            }
            if extra.iter().all(|e| satisfies(&model, e))
                && touched.iter().all(|i| satisfies(&model, &self.constraints[*i]))
            {
                return Some(model);
            }
            let mut p = digits.len();
            loop {
                if p == 0 {
                    return None;
                }
                p -= 1;
                digits[p] += 1;
                if digits[p] < n {
                    break;
                }
                digits[p] = 0;
            }
        }
    }

    /// Exact check on the part of the problem connected to `vars`.
    fn solve(
        &self,
        extra: &[&CylinderElement],
        vars: &BTreeSet<usize>,
        want_model: bool,
    ) -> Result<Option<Assignment>> {
        let restored = self.restore_set(vars);
        let mut local: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &t in &restored {
            let id = self.peels[t].as_ref().expect("live peel").id;
            for v in self.elems[id].support() {
                local.entry(*v).or_default().push(id);
            }
        }
        let mut seen_vars: BTreeSet<usize> = vars.clone();
        let mut work: Vec<usize> = vars.iter().copied().collect();
        let mut ids = BTreeSet::new();
        while let Some(v) = work.pop() {
            let here = self
                .core
                .get(&v)
                .into_iter()
                .flatten()
                .chain(local.get(&v).into_iter().flatten());
            for &id in here {
                if ids.insert(id) {
                    for &w in self.elems[id].support() {
                        if seen_vars.insert(w) {
                            work.push(w);
                        }
                    }
                }
            }
        }
        let pool: Vec<Cow<'_, CylinderElement>> = ids
            .iter()
            .map(|id| Cow::Borrowed(&self.elems[*id]))
            .chain(extra.iter().map(|e| Cow::Borrowed(*e)))
            .collect();
        let Some(mut model) = eliminate(&self.base, pool, &self.model)? else {
            return Ok(None);
        };
        if want_model {
            // re-extend the peeled coordinates, latest peel first
            let n = self.base.n();
            for (t, peel) in self.peels.iter().enumerate().rev() {
                let Some(peel) = peel else { continue };
                if restored.contains(&t) {
                    continue;
                }
                let c = &self.elems[peel.id];
                let current = value(&model, peel.var);
                let choice = std::iter::once(current)
                    .chain((0..n).filter(|v| *v != current))
                    .find(|val| c.contains(|w| if w == peel.var { *val } else { value(&model, w) }))
                    .expect("a peel always extends");
                model.insert(peel.var, choice);
            }
            debug_assert!(self.constraints.iter().all(|c| satisfies(&model, c)));
            debug_assert!(extra.iter().all(|c| satisfies(&model, c)));
        }
        Ok(Some(model))
    }
}

/// Bucket elimination over `pool`; coordinates in a single element go first,
/// then the one with the smallest joint support. Returns `start` updated on
/// the pool's coordinates, or `None` if the pool is unsatisfiable.
fn eliminate(base: &BaseSpace, pool: Vec<Cow<'_, CylinderElement>>, start: &Assignment) -> Result<Option<Assignment>> {
    let mut pool: Vec<Option<Cow<'_, CylinderElement>>> = pool.into_iter().map(Some).collect();
    let mut occurs: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (i, c) in pool.iter().enumerate() {
        for v in c.as_ref().expect("fresh pool").support() {
            occurs.entry(*v).or_default().insert(i);
        }
    }
    let mut buckets: Vec<(usize, Vec<Cow<'_, CylinderElement>>)> = Vec::new();
    let mut leaves: Vec<usize> = occurs
        .iter()
        .filter(|(_, set)| set.len() == 1)
        .map(|(v, _)| *v)
        .collect();
    loop {
        let var = match leaves.pop() {
            Some(v) if occurs.get(&v).is_some_and(|set| set.len() == 1) => v,
            Some(_) => continue,
            None => match occurs.iter().min_by_key(|(v, idx)| {
                let joint: BTreeSet<usize> = idx
                    .iter()
                    .flat_map(|i| pool[*i].as_ref().expect("live").support().iter().copied())
                    .collect();
                (joint.len(), **v)
            }) {
                Some((v, _)) => *v,
                None => break,
            },
        };
        let members = occurs.remove(&var).expect("present");
        let bucket: Vec<Cow<'_, CylinderElement>> = members
            .iter()
            .map(|i| pool[*i].take().expect("live constraint"))
            .collect();
        for c in &bucket {
            for w in c.support() {
                if let Some(set) = occurs.get_mut(w) {
                    for i in &members {
                        set.remove(i);
                    }
                }
            }
        }
        let message = if bucket.len() == 1 {
            base.cylindrify(var, &bucket[0])?
        } else {
            let joint = base.meet_all(bucket.iter().map(|c| c.as_ref()))?;
            base.cylindrify(var, &joint)?
        };
        buckets.push((var, bucket));
        if message.is_zero() {
            return Ok(None);
        }
        if !message.is_one() {
            let idx = pool.len();
            for w in message.support() {
                occurs.entry(*w).or_default().insert(idx);
            }
            pool.push(Some(Cow::Owned(message)));
        }
        occurs.retain(|w, set| {
            if set.len() == 1 {
                leaves.push(*w);
            }
            !set.is_empty()
        });
    }
    if pool.iter().flatten().any(|c| c.is_zero()) {
        return Ok(None);
    }
    let n = base.n();
    let mut model = start.clone();
    for (var, bucket) in buckets.iter().rev() {
        let current = value(start, *var);
        let choice = std::iter::once(current)
            .chain((0..n).filter(|v| *v != current))
            .find(|val| {
                bucket
                    .iter()
                    .all(|c| c.contains(|w| if w == *var { *val } else { value(&model, w) }))
            })
            .expect("elimination guarantees an extension");
        model.insert(*var, choice);
    }
    Ok(Some(model))
}

/// Whether the meet of `conditions` is nonzero.
pub fn is_proper(base: &BaseSpace, conditions: &[CylinderElement]) -> Result<bool> {
    ConstraintStore::new(base).consistent_with(conditions)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(b: &BaseSpace, j: usize, v: usize) -> CylinderElement {
        b.literal(j, v).unwrap()
    }

    #[test]
    fn proper_examples() {
        let b = BaseSpace::discrete(2).unwrap();
        assert!(is_proper(&b, &[b.one(), lit(&b, 0, 0)]).unwrap());
        assert!(!is_proper(&b, &[lit(&b, 0, 0), lit(&b, 0, 1)]).unwrap());
        let d = b.diagonal(0, 1).unwrap();
        assert!(is_proper(&b, &[d, lit(&b, 0, 0), lit(&b, 1, 0)]).unwrap());
    }

    #[test]
    fn entailment_needs_elimination() {
        // 0 = 1 = 2 = 3 through a chain of diagonals, with s0 = 0
        let b = BaseSpace::discrete(2).unwrap();
        let mut store = ConstraintStore::new(&b);
        for i in 0..3 {
            assert!(store.try_add(b.diagonal(i, i + 1).unwrap()).unwrap());
        }
        assert!(store.try_add(lit(&b, 0, 0)).unwrap());
        assert!(store.entails(&lit(&b, 3, 0)).unwrap());
        assert!(!store.entails(&lit(&b, 3, 1)).unwrap());
        assert!(!store.try_add(lit(&b, 3, 1)).unwrap());
        assert!(store.constraints().iter().all(|c| satisfies(store.model(), c)));
    }

    #[test]
    fn model_is_repaired_when_needed() {
        let b = BaseSpace::discrete(3).unwrap();
        let mut store = ConstraintStore::new(&b);
        let not0 = b.complement(&lit(&b, 0, 0));
        assert!(store.try_add(not0).unwrap());
        assert_ne!(value(store.model(), 0), 0);
        let not1 = b.complement(&lit(&b, 0, 1));
        assert!(store.try_add(not1).unwrap());
        assert_eq!(value(store.model(), 0), 2);
        assert!(store.entails(&lit(&b, 0, 2)).unwrap());
    }

    #[test]
    fn pigeonhole_is_unsatisfiable() {
        // three coordinates pairwise distinct over two points
        let b = BaseSpace::discrete(2).unwrap();
        let mut store = ConstraintStore::new(&b);
        assert!(store.try_add(b.complement(&b.diagonal(0, 1).unwrap())).unwrap());
        assert!(store.try_add(b.complement(&b.diagonal(1, 2).unwrap())).unwrap());
        assert!(!store.try_add(b.complement(&b.diagonal(0, 2).unwrap())).unwrap());
        assert!(store.entails(&b.diagonal(0, 2).unwrap()).unwrap());
    }
}
