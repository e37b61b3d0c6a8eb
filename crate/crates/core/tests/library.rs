//! Structural checks over every model of the built-in library.

use ssiv_core::frontend::parser::parse_source;
use ssiv_core::frontend::printer::print_unit;
use ssiv_core::frontend::{compile, DiagKind, SourceFile};
use ssiv_core::graph::{concretize, ExploreOptions, DEFAULT_MAX_STATES};
use ssiv_core::library::{list_scenarios, load_scenario, Attacker, Library};

#[test]
fn every_source_round_trips_through_the_printer() {
    let lib = Library::builtin();
    let mut n = 0;
    for (path, text) in lib.sources() {
        let a = parse_source(text, 0).unwrap_or_else(|d| panic!("{path}: {d:?}"));
        let printed = print_unit(&a);
        let b = parse_source(&printed, 0).unwrap_or_else(|d| panic!("{path} reprinted: {d:?}\n{printed}"));
        assert_eq!(a, b, "{path}");
        assert_eq!(print_unit(&b), printed, "{path}");
        n += 1;
    }
    assert!(n >= 20, "only {n} sources");
}

#[test]
fn library_layout() {
    let lib = Library::builtin();
    let count = |dir: &str| lib.sources().filter(|(p, _)| p.starts_with(dir)).count();
    assert_eq!(count("patterns/"), 8);
    assert_eq!(count("env/"), 2);
    assert_eq!(count("attackers/"), 4);
    let attackers: Vec<Attacker> = list_scenarios().iter().map(|s| s.attacker).collect();
    for a in [Attacker::Mitm, Attacker::Collusion, Attacker::Masquerade, Attacker::Dos] {
        assert!(attackers.contains(&a), "{a}");
    }
}

#[test]
fn duplicated_declarator_blocks_are_rejected() {
    let mut injected = 0;
    for sc in list_scenarios() {
        let loaded = load_scenario(&sc.id).unwrap();
        let files: Vec<SourceFile> = loaded.files[..sc.sources.len()].to_vec();
        for (i, f) in files.iter().enumerate() {
            let mut unit = parse_source(&f.text, i as u32).unwrap();
            let Some(sys) = unit.systems.iter_mut().find(|s| s.declarators.len() >= 2) else { continue };
            sys.declarators[1].assigns = sys.declarators[0].assigns.clone();
            let mut changed = files.clone();
            changed[i] = SourceFile::new(f.name.clone(), print_unit(&unit));
            let err = compile(&changed, &[]).map(|_| ()).unwrap_err().0;
            assert!(err.has(DiagKind::Uniqueness), "{}: {}: {err:?}", sc.id, f.name);
            injected += 1;
        }
    }
    assert!(injected >= 10);
}

#[test]
fn scenarios_fit_the_default_state_cap() {
    for sc in list_scenarios() {
        let c = load_scenario(&sc.id).unwrap().composition;
        let lts = concretize(&c, &ExploreOptions::default()).unwrap();
        assert!(lts.num_states() <= DEFAULT_MAX_STATES);
    }
}

#[test]
fn a_library_directory_loads_like_the_builtin_one() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models");
    let lib = Library::from_dir(&root).unwrap();
    let ids: Vec<&str> = lib.scenarios().iter().map(|s| s.id.as_str()).collect();
    let builtin: Vec<&str> = list_scenarios().iter().map(|s| s.id.as_str()).collect();
    assert_eq!(ids, builtin);
    let a = lib.load("dos-vm").unwrap().composition;
    let b = load_scenario("dos-vm").unwrap().composition;
    assert_eq!(a, b);
}
