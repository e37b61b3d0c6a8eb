//! Emitted NuSMV programs against an independent interpreter of the same
//! subset: reachable states, transitions and CTL verdicts must agree with
//! the explicit-state engine.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ssiv_core::checker::{check, Outcome};
use ssiv_core::codegen::emit_nusmv;
use ssiv_core::frontend::compile_str;
use ssiv_core::graph::{compose_async, concretize, Composition, ExploreOptions};
use ssiv_core::library::{list_scenarios, load_scenario};
use ssiv_oracle::gen::random_model;
use ssiv_oracle::smv::parse;

fn agree(c: &Composition, what: &str) {
    let lts = concretize(c, &ExploreOptions::default()).unwrap();
    let native = check(&lts, c).unwrap();
    let program = emit_nusmv(c, &c.formulas).unwrap();
    let run = parse(&program.text)
        .and_then(|p| p.run(lts.num_states() + 1))
        .unwrap_or_else(|e| panic!("{what}: {e}\n{}", program.text));
    assert_eq!(run.states.len(), lts.num_states(), "{what}: state counts differ");
    assert_eq!(run.initial.len(), lts.initial().len(), "{what}: initial state counts differ");
    let pairs: BTreeSet<(u32, u32)> =
        (0..lts.num_states() as u32).flat_map(|s| lts.succ(s).iter().map(move |e| (s, e.dst))).collect();
    let theirs: usize = run.succ.iter().map(|s| s.len()).sum();
    assert_eq!(theirs, pairs.len(), "{what}: transition counts differ");
    for (i, (v, t)) in native.iter().zip(&run.verdicts).enumerate() {
        match v.outcome {
            Outcome::Delegated => assert_eq!(*t, None),
            _ => assert_eq!(Some(v.holds()), *t, "{what}: formula {i} `{}`", v.text),
        }
    }
}

#[test]
fn library_programs_agree_with_the_native_checker() {
    for s in list_scenarios() {
        let loaded = load_scenario(&s.id).unwrap();
        agree(&loaded.composition, &s.id);
        if let Some(base) = loaded.baseline() {
            agree(&base, &format!("{} baseline", s.id));
        }
    }
}

#[test]
fn random_programs_agree_with_the_native_checker() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let (mut compared, mut attempts) = (0, 0);
    while compared < 300 {
        attempts += 1;
        assert!(attempts < 10_000);
        let src = random_model(&mut rng);
        let Ok(program) = compile_str(&[&src]) else { continue };
        let c = compose_async(&program).unwrap();
        if concretize(&c, &ExploreOptions::default()).is_err() {
            continue;
        }
        agree(&c, &src);
        compared += 1;
    }
}
