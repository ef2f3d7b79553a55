//! Base-isomorphism tests and orbit counting on a permutation-closed finite
//! subalgebra.
//!
//! The ultrafilters of a finite Boolean algebra are generated by its atoms,
//! so a representation `h_F` is named by an atom `F`, and a finite
//! permutation `σ` of the window acts on atoms by `F ↦ s_σ F`.

use std::collections::HashMap;

use serde::Serialize;

use crate::cylinder::{BaseSpace, CylinderElement};
use crate::error::{Error, Result};
use crate::transform::FiniteTransformation;

/// Largest number of atoms a census subalgebra may have.
pub const MAX_CENSUS_ATOMS: usize = 4096;

#[derive(Debug, Clone)]
pub struct CensusSubalgebra {
    base: BaseSpace,
    generators: Vec<(String, CylinderElement)>,
    window: usize,
    permutations: Vec<FiniteTransformation>,
    atoms: Vec<CylinderElement>,
    atom_terms: Vec<String>,
    index: HashMap<CylinderElement, usize>,
}

impl CensusSubalgebra {
    /// The Boolean closure of the generators and all their images under
    /// permutations of `0..window`. The window defaults to the coordinates
    /// the generators mention.
    pub fn new(base: &BaseSpace, generators: Vec<(String, CylinderElement)>, window: Option<usize>) -> Result<Self> {
        let window = window.unwrap_or_else(|| {
            generators
                .iter()
                .filter_map(|(_, g)| g.max_coordinate())
                .max()
                .map_or(1, |m| m + 1)
        });
        if window == 0 {
            return Err(Error::Precondition("the census window must be at least 1".into()));
        }
        let permutations = FiniteTransformation::permutations(window);
        let mut atoms: Vec<(CylinderElement, String)> = vec![(base.one(), String::new())];
        for (name, g) in &generators {
            for sigma in &permutations {
                let image = base.substitute(sigma, g)?;
                let label = if sigma.is_identity() {
                    name.clone()
                } else {
                    format!("s{sigma}({name})")
                };
                let outside = base.complement(&image);
                let mut next = Vec::with_capacity(atoms.len() * 2);
                for (a, t) in &atoms {
                    let yes = base.meet(a, &image)?;
                    let no = base.meet(a, &outside)?;
                    match (yes.is_zero(), no.is_zero()) {
                        (false, false) => {
                            next.push((yes, conjoin(t, &label)));
                            next.push((no, conjoin(t, &format!("-{label}"))));
                        }
                        _ => next.push((a.clone(), t.clone())),
                    }
                }
                if next.len() > MAX_CENSUS_ATOMS {
                    return Err(Error::Resource(format!(
                        "census subalgebra needs more than {MAX_CENSUS_ATOMS} atoms after adding {label}"
                    )));
                }
                atoms = next;
            }
        }
        let (atoms, mut atom_terms): (Vec<CylinderElement>, Vec<String>) = atoms.into_iter().unzip();
        for t in &mut atom_terms {
            if t.is_empty() {
                *t = "1".into();
            }
        }
        let index = atoms.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        let census = Self {
            base: base.clone(),
            generators,
            window,
            permutations,
            atoms,
            atom_terms,
            index,
        };
        census.verify_closed()?;
        Ok(census)
    }

    fn verify_closed(&self) -> Result<()> {
        for atom in &self.atoms {
            for sigma in &self.permutations {
                let image = self.base.substitute(sigma, atom)?;
                if !self.index.contains_key(&image) {
                    return Err(Error::Precondition(format!(
                        "s{sigma} maps the atom <{atom}> outside the census subalgebra"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn base(&self) -> &BaseSpace {
        &self.base
    }

    pub fn generators(&self) -> &[(String, CylinderElement)] {
        &self.generators
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// All permutations of the window, identity first.
    pub fn permutations(&self) -> &[FiniteTransformation] {
        &self.permutations
    }

    pub fn atoms(&self) -> &[CylinderElement] {
        &self.atoms
    }

    pub fn atom_term(&self, i: usize) -> &str {
        &self.atom_terms[i]
    }

    pub fn atom_index(&self, atom: &CylinderElement) -> Option<usize> {
        self.index.get(atom).copied()
    }

    /// Whether `x` is a join of atoms.
    pub fn contains(&self, x: &CylinderElement) -> Result<bool> {
        for a in &self.atoms {
            let part = self.base.meet(a, x)?;
            if !part.is_zero() && &part != a {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Whether `τ ∈ h_F(x)`, i.e. `s_τ x` lies above the atom `F`.
    pub fn h_contains(&self, atom: usize, x: &CylinderElement, tau: &FiniteTransformation) -> Result<bool> {
        self.base.leq(&self.atoms[atom], &self.base.substitute(tau, x)?)
    }
}

fn conjoin(t: &str, label: &str) -> String {
    if t.is_empty() {
        label.to_string()
    } else {
        format!("{t} * {label}")
    }
}

/// The atom generating `s_σ F`.
pub fn apply_perm_to_filter(census: &CensusSubalgebra, sigma: &FiniteTransformation, atom: usize) -> Result<usize> {
    if sigma.support().any(|i| i >= census.window) || !sigma.is_injective() {
        return Err(Error::Precondition(format!(
            "{sigma} is not a permutation of the window 0..{}",
            census.window
        )));
    }
    let image = census.base.substitute(sigma, &census.atoms[atom])?;
    census
        .atom_index(&image)
        .ok_or_else(|| Error::Precondition(format!("s{sigma} maps atom {atom} outside the census subalgebra")))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaseIsomorphism {
    pub sigma: FiniteTransformation,
    /// Pairs `(x, τ)` on which `Ψ(h_F(x)) = h_G(x)` was confirmed.
    pub psi_checks: usize,
    pub psi_failures: usize,
}

/// Transformations used to sample `Ψ`: at most two moved coordinates in a
/// window one wider than the census window.
fn tau_sample(window: usize) -> Vec<FiniteTransformation> {
    FiniteTransformation::enumerate_bounded(window + 1, 2)
}

/// Some permutation `σ` of the window with `s_σ F = G`, with the map
/// `Ψ(X) = {τ : σ⁻¹∘τ ∈ X}` checked pointwise on generators and atoms.
pub fn base_iso_search(census: &CensusSubalgebra, f: usize, g: usize) -> Result<Option<BaseIsomorphism>> {
    for sigma in &census.permutations {
        if apply_perm_to_filter(census, sigma, f)? != g {
            continue;
        }
        let inverse = sigma.inverse()?;
        let mut iso = BaseIsomorphism {
            sigma: sigma.clone(),
            psi_checks: 0,
            psi_failures: 0,
        };
        let xs = census.generators.iter().map(|(_, x)| x).chain(&census.atoms);
        let taus = tau_sample(census.window);
        for x in xs {
            for tau in &taus {
                let transported = census.h_contains(f, x, &inverse.compose(tau))?;
                let direct = census.h_contains(g, x, tau)?;
                iso.psi_checks += 1;
                if transported != direct {
                    iso.psi_failures += 1;
                }
            }
        }
        return Ok(Some(iso));
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitClass {
    pub atoms: Vec<usize>,
    pub terms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitReport {
    pub window: usize,
    pub atoms: usize,
    pub count: usize,
    pub classes: Vec<OrbitClass>,
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut root = i;
    while parent[root] != root {
        root = parent[root];
    }
    let mut i = i;
    while parent[i] != root {
        let up = parent[i];
        parent[i] = root;
        i = up;
    }
    root
}

/// Partitions the atoms into orbits of the permutation action.
pub fn orbit_count(census: &CensusSubalgebra) -> Result<OrbitReport> {
    let n = census.atoms.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for f in 0..n {
        for sigma in &census.permutations {
            let g = apply_perm_to_filter(census, sigma, f)?;
            let (rf, rg) = (find(&mut parent, f), find(&mut parent, g));
            if rf != rg {
                parent[rf.max(rg)] = rf.min(rg);
            }
        }
    }
    let mut classes: Vec<OrbitClass> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for f in 0..n {
        let root = find(&mut parent, f);
        let c = *slot.entry(root).or_insert_with(|| {
            classes.push(OrbitClass {
                atoms: Vec::new(),
                terms: Vec::new(),
            });
            classes.len() - 1
        });
        classes[c].atoms.push(f);
        classes[c].terms.push(census.atom_terms[f].clone());
    }
    Ok(OrbitReport {
        window: census.window,
        atoms: n,
        count: classes.len(),
        classes,
    })
}
