//! Concretization against the brute-force constructor on random models.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ssiv_core::frontend::compile_str;
use ssiv_core::graph::{compose_async, concretize, ConcretizeError, ExploreOptions};
use ssiv_oracle::brute::{brute_lts, from_lts, BruteError};
use ssiv_oracle::gen::random_model;

/// Models whose explored and enumerated systems are compared in full.
const MODELS: usize = 600;
const CAP: u128 = 60_000;

#[test]
fn concretize_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let (mut compared, mut deadlocks, mut attempts, mut edges) = (0, 0, 0, 0);
    while compared < MODELS {
        attempts += 1;
        assert!(attempts < MODELS * 20, "generator produces too few usable models");
        let src = random_model(&mut rng);
        let Ok(program) = compile_str(&[&src]) else { continue };
        let c = compose_async(&program).unwrap();
        let explored = concretize(&c, &ExploreOptions::default());
        let atoms = match &explored {
            Ok(l) => l.atoms().to_vec(),
            Err(_) => Vec::new(),
        };
        let brute = match brute_lts(&c, &atoms, CAP) {
            Err(BruteError::TooLarge(_)) => continue,
            other => other,
        };
        match (explored, brute) {
            (Ok(l), Ok(b)) => {
                let mine = from_lts(&c, &l);
                assert_eq!(mine.initial, b.initial, "initial states differ for\n{src}");
                assert_eq!(mine.states, b.states, "state sets differ for\n{src}");
                assert_eq!(mine.edges, b.edges, "transitions differ for\n{src}");
                assert_eq!(mine.labels, b.labels, "labels differ for\n{src}");
                edges += b.edges.len();
                compared += 1;
            }
            (Err(ConcretizeError::Deadlock { .. }), Err(BruteError::Deadlock)) => deadlocks += 1,
            (Err(ConcretizeError::NoInitialState), Err(BruteError::NoInitial)) => {}
            (mine, theirs) => panic!("disagreement: {:?} vs {:?} for\n{src}", mine.map(|l| l.num_states()), theirs.map(|b| b.states.len())),
        }
    }
    eprintln!("{compared} models, {deadlocks} deadlocks, {edges} edges, {attempts} attempts");
    assert!(deadlocks > 0, "deadlock agreement was never exercised");
}

#[test]
fn parallel_exploration_is_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut compared = 0;
    while compared < 100 {
        let src = random_model(&mut rng);
        let Ok(program) = compile_str(&[&src]) else { continue };
        let c = compose_async(&program).unwrap();
        let seq = concretize(&c, &ExploreOptions { jobs: 1, ..Default::default() });
        let par = concretize(&c, &ExploreOptions { jobs: 4, ..Default::default() });
        assert_eq!(seq, par, "{src}");
        compared += 1;
    }
}
