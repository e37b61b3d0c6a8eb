//! Action elimination leaves every library model's behaviour unchanged.

use std::collections::BTreeSet;

use ssiv_core::checker::check;
use ssiv_core::graph::{concretize, ExploreOptions, Lts};
use ssiv_core::library::list_scenarios;
use ssiv_core::library::load_scenario;

fn endpoints(l: &Lts) -> (BTreeSet<Vec<u32>>, BTreeSet<(Vec<u32>, Vec<u32>)>) {
    let n = l.num_states() as u32;
    let states = (0..n).map(|s| l.state(s).to_vec()).collect();
    let edges = (0..n)
        .flat_map(|s| l.succ(s).iter().map(move |e| (l.state(s).to_vec(), l.state(e.dst).to_vec())))
        .collect();
    (states, edges)
}

#[test]
fn elimination_preserves_states_edges_and_verdicts() {
    for sc in list_scenarios() {
        let c = load_scenario(&sc.id).unwrap().composition;
        let e = c.eliminated();
        let before = concretize(&c, &ExploreOptions::default()).unwrap();
        let after = concretize(&e, &ExploreOptions::default()).unwrap();
        assert_eq!(endpoints(&before), endpoints(&after), "{}", sc.id);
        let v1: Vec<bool> = check(&before, &c).unwrap().iter().map(|v| v.holds()).collect();
        let v2: Vec<bool> = check(&after, &e).unwrap().iter().map(|v| v.holds()).collect();
        assert_eq!(v1, v2, "{}", sc.id);
        let eps = e.instances.iter().flat_map(|i| &i.graph.transitions).filter(|t| t.is_epsilon()).count();
        assert!(eps > 0, "{}: nothing was eliminated", sc.id);
    }
}
