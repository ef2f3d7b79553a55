use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use topocyl::census::{apply_perm_to_filter, CensusSubalgebra};
use topocyl::interpolation::{find_interpolant, InterpolationInstance, SgCaps};
use topocyl::solver::ConstraintStore;
use topocyl::{BaseSpace, CylinderElement, FiniteTopology, FiniteTransformation};

const WIDTH: usize = 4;

fn element(b: &BaseSpace, seed: u64, coords: &[usize]) -> CylinderElement {
    b.random_element(&mut ChaCha8Rng::seed_from_u64(seed), coords).unwrap()
}

fn coords() -> impl Strategy<Value = Vec<usize>> {
    proptest::sample::subsequence((0..WIDTH).collect::<Vec<_>>(), 0..=3)
}

fn transformation() -> impl Strategy<Value = FiniteTransformation> {
    proptest::collection::vec((0..WIDTH, 0..WIDTH), 0..=3).prop_map(FiniteTransformation::from_pairs)
}

fn topology() -> impl Strategy<Value = BaseSpace> {
    (1usize..=3, any::<prop::sample::Index>()).prop_map(|(n, pick)| {
        let all = FiniteTopology::enumerate_all(n).unwrap();
        BaseSpace::new(all[pick.index(all.len())].clone()).unwrap()
    })
}

/// Every assignment of `0..WIDTH` into the base, as a lookup table.
fn points(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..WIDTH {
        out = out
            .into_iter()
            .flat_map(|p| (0..n).map(move |v| [p.clone(), vec![v]].concat()))
            .collect();
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn substitution_is_a_composing_boolean_map(
        sx in any::<u64>(), cx in coords(), sy in any::<u64>(), cy in coords(),
        s in transformation(), t in transformation(),
    ) {
        let b = BaseSpace::discrete(2).unwrap();
        let (x, y) = (element(&b, sx, &cx), element(&b, sy, &cy));
        let sub = |f: &FiniteTransformation, e: &CylinderElement| b.substitute(f, e).unwrap();
        prop_assert_eq!(sub(&s.compose(&t), &x), sub(&s, &sub(&t, &x)));
        prop_assert_eq!(sub(&s, &b.meet(&x, &y).unwrap()), b.meet(&sub(&s, &x), &sub(&s, &y)).unwrap());
        prop_assert_eq!(sub(&s, &b.complement(&x)), b.complement(&sub(&s, &x)));
        prop_assert_eq!(sub(&FiniteTransformation::identity(), &x), x);
    }

    #[test]
    fn substitution_matches_its_pointwise_definition(
        sx in any::<u64>(), cx in coords(), s in transformation(),
    ) {
        let b = BaseSpace::discrete(2).unwrap();
        let x = element(&b, sx, &cx);
        let image = b.substitute(&s, &x).unwrap();
        for p in points(2) {
            prop_assert_eq!(image.contains(|i| p[i]), x.contains(|i| p[s.apply(i)]));
        }
    }

    #[test]
    fn interior_is_a_kernel_operator(base in topology(), seed in any::<u64>(), cx in coords(), k in 0..WIDTH) {
        let x = element(&base, seed, &cx);
        let y = element(&base, seed.wrapping_add(1), &cx);
        let ix = base.interior(k, &x).unwrap();
        prop_assert!(base.leq(&ix, &x).unwrap());
        prop_assert_eq!(base.interior(k, &ix).unwrap(), ix.clone());
        prop_assert_eq!(
            base.interior(k, &base.meet(&x, &y).unwrap()).unwrap(),
            base.meet(&ix, &base.interior(k, &y).unwrap()).unwrap()
        );
        prop_assert_eq!(base.interior(k, &base.one()).unwrap(), base.one());
        if base.topology().is_discrete() {
            prop_assert_eq!(ix, x);
        }
    }

    #[test]
    fn cylindrification_is_existential(seed in any::<u64>(), cx in coords(), k in 0..WIDTH) {
        let b = BaseSpace::discrete(3).unwrap();
        let x = element(&b, seed, &cx);
        let cx = b.cylindrify(k, &x).unwrap();
        prop_assert!(!cx.depends_on(k));
        for p in points(3) {
            let exists = (0..3).any(|v| x.contains(|i| if i == k { v } else { p[i] }));
            prop_assert_eq!(cx.contains(|i| p[i]), exists);
        }
    }

    #[test]
    fn solver_agrees_with_enumeration(
        cs in proptest::collection::vec((any::<u64>(), coords()), 1..8),
        probe in (any::<u64>(), coords()),
    ) {
        let b = BaseSpace::discrete(2).unwrap();
        let mut store = ConstraintStore::new(&b);
        let mut kept: Vec<CylinderElement> = Vec::new();
        let all = points(2);
        for (seed, c) in &cs {
            let e = element(&b, *seed, c);
            let feasible = all.iter().any(|p| kept.iter().chain([&e]).all(|k| k.contains(|i| p[i])));
            prop_assert_eq!(store.try_add(e.clone()).unwrap(), feasible);
            if feasible {
                kept.push(e);
            }
        }
        let y = element(&b, probe.0, &probe.1);
        let models: Vec<&Vec<usize>> = all.iter().filter(|p| kept.iter().all(|k| k.contains(|i| p[i]))).collect();
        prop_assert_eq!(store.entails(&y).unwrap(), models.iter().all(|p| y.contains(|i| p[i])));
        let consistent = models.iter().any(|p| y.contains(|i| p[i]));
        prop_assert_eq!(store.consistent_with(std::slice::from_ref(&y)).unwrap(), consistent);
        if let Some(m) = store.satisfiable_with(std::slice::from_ref(&y)).unwrap() {
            let at = |i: usize| m.get(&i).copied().unwrap_or(0);
            prop_assert!(y.contains(at));
            prop_assert!(kept.iter().all(|k| k.contains(at)));
        }
    }

    #[test]
    fn permutation_action_is_a_group_action(m in 1usize..=3, picks in proptest::collection::vec(any::<prop::sample::Index>(), 3)) {
        let b = BaseSpace::discrete(2).unwrap();
        let gens: Vec<(String, CylinderElement)> =
            (0..m).map(|j| (format!("g{j}"), b.literal(j, 0).unwrap())).collect();
        let c = CensusSubalgebra::new(&b, gens, Some(m)).unwrap();
        let perms = c.permutations();
        let (s, t) = (&perms[picks[0].index(perms.len())], &perms[picks[1].index(perms.len())]);
        let f = picks[2].index(c.atoms().len());
        let act = |g: &FiniteTransformation, a: usize| apply_perm_to_filter(&c, g, a).unwrap();
        prop_assert_eq!(act(&s.compose(t), f), act(s, act(t, f)));
        prop_assert_eq!(act(&FiniteTransformation::identity(), f), f);
        let image = &c.atoms()[act(s, f)];
        prop_assert_eq!(image, &b.substitute(s, &c.atoms()[f]).unwrap());
    }

    #[test]
    fn interpolants_found_are_interpolants(sa in any::<u64>(), sc in any::<u64>()) {
        let b = BaseSpace::discrete(2).unwrap();
        let x = b.literal(0, 0).unwrap();
        let y = element(&b, sa, &[0, 1]);
        let z = element(&b, sc, &[0, 2]);
        let a = b.meet(&x, &y).unwrap();
        let c = b.join(&x, &z).unwrap();
        let named = |n: &str, e: &CylinderElement| (n.to_string(), e.clone());
        let inst = InterpolationInstance::new(
            &b, vec![named("x", &x), named("y", &y)], vec![named("x", &x), named("z", &z)], a, c,
        ).unwrap();
        let caps = SgCaps { support_cap: 2, depth_cap: 2 };
        let found = find_interpolant(&inst, caps).unwrap();
        let b0 = found.found().expect("x interpolates");
        prop_assert!(inst.is_interpolant(b0).unwrap());
        let dual = inst.dual();
        let d = find_interpolant(&dual, caps).unwrap();
        prop_assert!(dual.is_interpolant(d.found().unwrap()).unwrap());
        prop_assert!(dual.is_interpolant(&b.complement(b0)).unwrap());
    }
}
