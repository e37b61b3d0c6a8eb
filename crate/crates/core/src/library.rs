//! Built-in model library: the `.sz` sources of the architectural patterns,
//! environment modules and attacker templates, plus one TOML manifest per
//! scenario naming its sources, formulas and expected verdicts.
//!
//! A manifest lives at `scenarios/<id>.toml`:
//!
//! ```toml
//! id = "dos-vm"
//! description = "..."
//! patterns = ["VM"]
//! attacker = "dos"            # mitm | collusion | masquerade | dos | none
//! attacker_alias = "d"        # instance frozen for the baseline run
//! sources = ["env/network.sz", "patterns/vm.sz", "scenarios/dos-vm.sz"]
//!
//! [[formula]]                 # appended after the control system's own formulas
//! logic = "ctl"
//! text = "AG (h.REQ_SENT -> AF h.vcH != ∅)"
//!
//! [[expected]]
//! index = 0
//! holds = false
//! evidence = "lasso"          # finite | lasso; omitted when no evidence is required
//! conjuncts = [true, false]   # optional, per top-level conjunct
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use include_dir::{include_dir, Dir};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checker::{Outcome, Verdict};
use crate::expr::Expr;
use crate::frontend::{compile, SourceFile};
use crate::graph::{compose_async, ComposeError, Composition};
use crate::logic::Logic;

static MODELS: Dir<'static> = include_dir!("$CARGO_MANIFEST_DIR/../../models");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LibraryError {
    #[error("unknown scenario `{id}` (known: {})", .known.join(", "))]
    UnknownScenario { id: String, known: Vec<String> },
    #[error("{path}: {message}")]
    Manifest { path: String, message: String },
    #[error("scenario `{scenario}` lists missing source `{path}`")]
    MissingSource { scenario: String, path: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("scenario `{scenario}` does not compile:\n{rendered}")]
    Compile { scenario: String, rendered: String },
    #[error("scenario `{scenario}`: {source}")]
    Compose { scenario: String, source: ComposeError },
    #[error("scenario `{scenario}`: {message}")]
    Expectations { scenario: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pattern {
    SK,
    MK,
    SM,
    VM,
    DT,
    IT,
    CD,
    DD,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attacker {
    Mitm,
    Collusion,
    Masquerade,
    Dos,
    None,
}

impl fmt::Display for Attacker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Attacker::Mitm => "mitm",
            Attacker::Collusion => "collusion",
            Attacker::Masquerade => "masquerade",
            Attacker::Dos => "dos",
            Attacker::None => "none",
        })
    }
}

/// Shape of the evidence a failing formula must come with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvidenceShape {
    /// A path without a cycle.
    Finite,
    /// A path ending in a non-empty cycle.
    Lasso,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormulaSpec {
    #[serde(default)]
    pub logic: Option<Logic>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    pub index: usize,
    pub holds: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<EvidenceShape>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conjuncts: Option<Vec<bool>>,
}

impl Expected {
    pub fn evidence_required(&self) -> bool {
        self.evidence.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    pub description: String,
    #[serde(default)]
    pub patterns: Vec<Pattern>,
    pub attacker: Attacker,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attacker_alias: Option<String>,
    pub sources: Vec<String>,
    #[serde(default, rename = "formula")]
    pub formulas: Vec<FormulaSpec>,
    #[serde(default)]
    pub expected: Vec<Expected>,
}

/// A compiled scenario ready for concretization and checking.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub files: Vec<SourceFile>,
    pub composition: Composition,
}

impl LoadedScenario {
    /// The composition with the attacker instance frozen, or `None` for a
    /// scenario without attacker.
    pub fn baseline(&self) -> Option<Composition> {
        let alias = self.scenario.attacker_alias.as_deref()?;
        let mut c = self.composition.clone();
        c.freeze(alias).expect("alias validated at load time");
        Some(c)
    }
}

/// A difference between a checker verdict and the scenario's expectation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub index: usize,
    pub message: String,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "formula {}: {}", self.index, self.message)
    }
}

/// Compares verdicts against expectations. Delegated verdicts are not judged.
pub fn compare(expected: &[Expected], verdicts: &[Verdict]) -> Vec<Mismatch> {
    let mut out = Vec::new();
    for e in expected {
        let Some(v) = verdicts.get(e.index) else {
            out.push(Mismatch { index: e.index, message: "no verdict".into() });
            continue;
        };
        if v.outcome == Outcome::Delegated {
            continue;
        }
        let mut miss = |m: String| out.push(Mismatch { index: e.index, message: m });
        if v.holds() != e.holds {
            miss(format!("expected {}, got {}", word(e.holds), word(v.holds())));
            continue;
        }
        if let Some(shape) = e.evidence {
            match &v.evidence {
                None => miss("expected evidence, got none".into()),
                Some(t) if t.is_lasso() != (shape == EvidenceShape::Lasso) => {
                    let got = if t.is_lasso() { "a lasso" } else { "a finite path" };
                    miss(format!("expected {shape:?} evidence, got {got}").to_lowercase())
                }
                Some(_) => {}
            }
        }
        if let Some(cs) = &e.conjuncts {
            let got: Vec<bool> = v.conjuncts.iter().map(|c| c.holds).collect();
            if &got != cs {
                miss(format!("expected conjunct verdicts {cs:?}, got {got:?}"));
            }
        }
    }
    out
}

fn word(b: bool) -> &'static str {
    if b {
        "holds"
    } else {
        "fails"
    }
}

/// Builds the conformity atom `truth ≻ vc`.
pub fn conformity_atom(truth: Expr, vc: Expr) -> Expr {
    Expr::Conforms(Box::new(truth), Box::new(vc))
}

/// A set of model files and scenario manifests.
#[derive(Debug, Clone, Default)]
pub struct Library {
    /// Model sources keyed by `/`-separated path relative to the root.
    files: BTreeMap<String, String>,
    /// Sorted by id.
    scenarios: Vec<Scenario>,
}

impl Library {
    /// The library compiled into the binary.
    pub fn builtin() -> &'static Library {
        static LIB: OnceLock<Library> = OnceLock::new();
        LIB.get_or_init(|| {
            let mut files = BTreeMap::new();
            collect_embedded(&MODELS, &mut files);
            Library::from_files(files).expect("built-in manifests are valid")
        })
    }

    /// Reads a library laid out like the built-in `models/` directory.
    pub fn from_dir(root: &Path) -> Result<Library, LibraryError> {
        let mut files = BTreeMap::new();
        collect_dir(root, root, &mut files)?;
        Library::from_files(files)
    }

    /// Builds a library from `(path, text)` pairs; `.toml` files under
    /// `scenarios/` are manifests.
    pub fn from_files(files: BTreeMap<String, String>) -> Result<Library, LibraryError> {
        let mut scenarios = Vec::new();
        for (path, text) in &files {
            if !(path.starts_with("scenarios/") && path.ends_with(".toml")) {
                continue;
            }
            let sc: Scenario = toml::from_str(text)
                .map_err(|e| LibraryError::Manifest { path: path.clone(), message: e.message().to_string() })?;
            validate(path, &sc, &files)?;
            scenarios.push(sc);
        }
        scenarios.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = scenarios.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(LibraryError::Manifest {
                path: format!("scenarios/{}.toml", w[0].id),
                message: format!("duplicate scenario id `{}`", w[0].id),
            });
        }
        Ok(Library { files, scenarios })
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn scenario(&self, id: &str) -> Result<&Scenario, LibraryError> {
        self.scenarios.iter().find(|s| s.id == id).ok_or_else(|| LibraryError::UnknownScenario {
            id: id.to_string(),
            known: self.scenarios.iter().map(|s| s.id.clone()).collect(),
        })
    }

    /// All `.sz` files with their library-relative paths.
    pub fn sources(&self) -> impl Iterator<Item = (&str, &str)> {
        self.files.iter().filter(|(p, _)| p.ends_with(".sz")).map(|(p, t)| (p.as_str(), t.as_str()))
    }

    pub fn file(&self, path: &str) -> Option<&str> {
        self.files.get(path).map(String::as_str)
    }

    /// Compiles and composes a scenario, checking that its expectations
    /// cover exactly the formulas of the composition.
    pub fn load(&self, id: &str) -> Result<LoadedScenario, LibraryError> {
        let scenario = self.scenario(id)?.clone();
        let files: Vec<SourceFile> = scenario
            .sources
            .iter()
            .map(|p| SourceFile::new(p.clone(), self.files[p].clone()))
            .collect();
        let extra: Vec<(Option<Logic>, String)> =
            scenario.formulas.iter().map(|f| (f.logic, f.text.clone())).collect();
        let compiled = compile(&files, &extra).map_err(|(e, table)| LibraryError::Compile {
            scenario: id.to_string(),
            rendered: e.render(&table),
        })?;
        let composition = compose_async(&compiled.program)
            .map_err(|source| LibraryError::Compose { scenario: id.to_string(), source })?;
        let n = composition.formulas.len();
        let mut covered = vec![false; n];
        for e in &scenario.expected {
            if e.index >= n {
                return Err(LibraryError::Expectations {
                    scenario: id.to_string(),
                    message: format!("expectation for formula {} but only {n} formula(s)", e.index),
                });
            }
            covered[e.index] = true;
        }
        if let Some(i) = covered.iter().position(|c| !c) {
            return Err(LibraryError::Expectations {
                scenario: id.to_string(),
                message: format!("formula {i} has no expectation"),
            });
        }
        if let Some(a) = &scenario.attacker_alias {
            if composition.instance(a).is_none() {
                return Err(LibraryError::Compose {
                    scenario: id.to_string(),
                    source: ComposeError::UnknownInstance(a.clone()),
                });
            }
        }
        Ok(LoadedScenario { scenario, files: compiled.files, composition })
    }
}

fn validate(path: &str, sc: &Scenario, files: &BTreeMap<String, String>) -> Result<(), LibraryError> {
    let bad = |m: String| Err(LibraryError::Manifest { path: path.to_string(), message: m });
    if sc.sources.is_empty() {
        return bad("no sources".into());
    }
    if let Some(p) = sc.sources.iter().find(|p| !files.contains_key(*p)) {
        return Err(LibraryError::MissingSource { scenario: sc.id.clone(), path: p.clone() });
    }
    let mut seen = std::collections::BTreeSet::new();
    if let Some(e) = sc.expected.iter().find(|e| !seen.insert(e.index)) {
        return bad(format!("formula {} has two expectations", e.index));
    }
    if let Some(e) = sc.expected.iter().find(|e| e.holds && e.evidence.is_some()) {
        return bad(format!("formula {} is expected to hold but requires evidence", e.index));
    }
    match (sc.attacker, &sc.attacker_alias) {
        (Attacker::None, Some(_)) => bad("attacker_alias given without an attacker".into()),
        (a, None) if a != Attacker::None => bad(format!("{a} scenario without attacker_alias")),
        _ => Ok(()),
    }
}

fn collect_embedded(dir: &Dir<'static>, out: &mut BTreeMap<String, String>) {
    for f in dir.files() {
        let p = f.path().to_string_lossy().replace('\\', "/");
        if let Some(text) = f.contents_utf8() {
            out.insert(p, text.to_string());
        }
    }
    for d in dir.dirs() {
        collect_embedded(d, out);
    }
}

fn collect_dir(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) -> Result<(), LibraryError> {
    let io = |p: &Path, e: std::io::Error| LibraryError::Io { path: p.display().to_string(), message: e.to_string() };
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| io(dir, e))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(|e| io(dir, e))?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_dir(root, &p, out)?;
        } else if matches!(p.extension().and_then(|e| e.to_str()), Some("sz" | "toml")) {
            let rel = p.strip_prefix(root).expect("walked below root");
            let key = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            out.insert(key, std::fs::read_to_string(&p).map_err(|e| io(&p, e))?);
        }
    }
    Ok(())
}

/// Scenarios of the built-in library, sorted by id.
pub fn list_scenarios() -> &'static [Scenario] {
    Library::builtin().scenarios()
}

/// Loads a built-in scenario.
pub fn load_scenario(id: &str) -> Result<LoadedScenario, LibraryError> {
    Library::builtin().load(id)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_lists_fourteen_sorted_ids() {
        let ids: Vec<&str> = list_scenarios().iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids.len(), 14);
        assert!(ids.windows(2).all(|w| w[0] < w[1]));
        assert!(ids.contains(&"vm-upload") && ids.contains(&"mitm-sk-vm"));
    }

    #[test]
    fn unknown_scenario() {
        let e = load_scenario("nope").unwrap_err();
        assert!(matches!(e, LibraryError::UnknownScenario { ref id, .. } if id == "nope"));
    }

    #[test]
    fn manifest_validation() {
        let mut files = BTreeMap::new();
        files.insert("a.sz".to_string(), String::new());
        let manifest = |extra: &str| {
            let mut f = files.clone();
            f.insert(
                "scenarios/x.toml".into(),
                format!("id = \"x\"\ndescription = \"\"\nattacker = \"none\"\nsources = [\"a.sz\"]\n{extra}"),
            );
            Library::from_files(f)
        };
        assert!(manifest("").is_ok());
        assert!(matches!(manifest("bogus = 1"), Err(LibraryError::Manifest { .. })));
        assert!(matches!(
            manifest("[[expected]]\nindex = 0\nholds = true\n[[expected]]\nindex = 0\nholds = false"),
            Err(LibraryError::Manifest { .. })
        ));
        assert!(matches!(manifest("attacker_alias = \"m\""), Err(LibraryError::Manifest { .. })));
        let mut f = files.clone();
        f.insert("scenarios/y.toml".into(), "id = \"y\"\ndescription = \"\"\nattacker = \"none\"\nsources = [\"b.sz\"]".into());
        assert!(matches!(Library::from_files(f), Err(LibraryError::MissingSource { .. })));
    }

    #[test]
    fn conformity_atom_builds_conforms() {
        let a = conformity_atom(Expr::Lit(crate::expr::Value::Str(1)), Expr::Var(crate::expr::VarId(0)));
        assert!(matches!(a, Expr::Conforms(..)));
    }
}
