//! Golden verdicts for every built-in scenario, and the baseline runs with
//! the attacker frozen.

use ssiv_core::checker::{check, replay};
use ssiv_core::graph::{concretize, ExploreOptions};
use ssiv_core::library::{compare, list_scenarios, load_scenario};

#[test]
fn golden_verdicts() {
    let mut failures = Vec::new();
    for sc in list_scenarios() {
        let loaded = load_scenario(&sc.id).unwrap_or_else(|e| panic!("{e}"));
        let c = &loaded.composition;
        let lts = concretize(c, &ExploreOptions::default()).unwrap_or_else(|e| panic!("{}: {e}", sc.id));
        let verdicts = check(&lts, c).unwrap();
        for m in compare(&sc.expected, &verdicts) {
            failures.push(format!("{}: {m}", sc.id));
        }
        for v in &verdicts {
            if let Some(t) = &v.evidence {
                if let Err(e) = replay(c, &lts, t) {
                    failures.push(format!("{}: evidence for `{}` does not replay: {e}", sc.id, v.text));
                }
            }
        }
        eprintln!("{}: {} states, {:?}", sc.id, lts.num_states(), verdicts.iter().map(|v| v.holds()).collect::<Vec<_>>());
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn baseline_flips_violations() {
    let mut failures = Vec::new();
    for sc in list_scenarios() {
        let loaded = load_scenario(&sc.id).unwrap();
        let Some(base) = loaded.baseline() else { continue };
        let lts = concretize(&base, &ExploreOptions::default()).unwrap_or_else(|e| panic!("{}: {e}", sc.id));
        let verdicts = check(&lts, &base).unwrap();
        for (i, v) in verdicts.iter().enumerate() {
            if !v.holds() {
                failures.push(format!("{}: formula {i} `{}` still fails without the attacker", sc.id, v.text));
            }
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}
