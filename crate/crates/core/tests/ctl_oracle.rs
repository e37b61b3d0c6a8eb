//! The fixpoint checker against a naive evaluator of the full operator set,
//! plus duality identities and the shape of counterexamples.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ssiv_core::checker::{explain_false, sat_set};
use ssiv_core::logic::Formula;
use ssiv_oracle::gen::{random_formula, random_lts};

const ATOMS: usize = 3;

fn instance(seed: u64) -> (ssiv_core::graph::Lts, Vec<fixedbitset::FixedBitSet>, ssiv_oracle::ctl::Kripke, Formula<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = if rng.gen_bool(0.1) { rng.gen_range(500..=2000) } else { rng.gen_range(1..=60) };
    let (lts, atoms, k) = random_lts(&mut rng, n, 3, ATOMS);
    let depth = rng.gen_range(1..=4);
    let f = random_formula(&mut rng, depth, ATOMS);
    (lts, atoms, k, f)
}

fn bools(set: &fixedbitset::FixedBitSet, n: usize) -> Vec<bool> {
    (0..n).map(|i| set.contains(i)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn sat_set_matches_naive(seed in any::<u64>()) {
        let (lts, atoms, k, f) = instance(seed);
        let mine = sat_set(&lts, &atoms, &f).unwrap();
        prop_assert_eq!(bools(&mine, k.len()), k.sat(&f));
    }

    #[test]
    fn dualities(seed in any::<u64>()) {
        let (lts, atoms, k, f) = instance(seed);
        let b = Box::new;
        let neg = |g: Formula<usize>| Formula::Not(b(g));
        let ag = sat_set(&lts, &atoms, &Formula::AG(b(f.clone()))).unwrap();
        let not_ef_not = sat_set(&lts, &atoms, &neg(Formula::EF(b(neg(f.clone()))))).unwrap();
        prop_assert_eq!(&ag, &not_ef_not);
        let af = sat_set(&lts, &atoms, &Formula::AF(b(f.clone()))).unwrap();
        let not_eg_not = sat_set(&lts, &atoms, &neg(Formula::EG(b(neg(f.clone()))))).unwrap();
        prop_assert_eq!(&af, &not_eg_not);
        prop_assert_eq!(bools(&ag, k.len()), k.sat(&Formula::AG(b(f))));
    }

    #[test]
    fn counterexamples_are_paths_of_the_system(seed in any::<u64>(), atom in 0..ATOMS) {
        let (lts, atoms, k, _) = instance(seed);
        let p = || Box::new(Formula::Atom(atom));
        let edge = |a: u32, b: u32| k.succ[a as usize].contains(&b);

        if !k.sat(&Formula::AG(p()))[0] {
            let t = explain_false(&lts, &atoms, &Formula::AG(p()), 0).unwrap();
            let states: Vec<u32> = t.steps().map(|s| s.state).collect();
            prop_assert!(!t.is_lasso());
            prop_assert_eq!(states[0], 0);
            prop_assert!(states.windows(2).all(|w| edge(w[0], w[1])));
            prop_assert!(!k.labels[atom][*states.last().unwrap() as usize]);
            prop_assert!(states[..states.len() - 1].iter().all(|s| k.labels[atom][*s as usize]));
        }
        if !k.sat(&Formula::AF(p()))[0] {
            let t = explain_false(&lts, &atoms, &Formula::AF(p()), 0).unwrap();
            prop_assert!(t.is_lasso());
            let states: Vec<u32> = t.steps().map(|s| s.state).collect();
            prop_assert!(states.windows(2).all(|w| edge(w[0], w[1])));
            prop_assert!(edge(*t.cycle.last().map(|s| &s.state).unwrap(), t.cycle[0].state));
            prop_assert!(states.iter().all(|s| !k.labels[atom][*s as usize]));
        }
    }
}
