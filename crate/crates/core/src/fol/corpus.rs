//! Chronologically ordered theorem corpus.
//!
//! Manifest format (`corpus.manifest`, one record per line, `#` comments):
//!
//! ```text
//! @axiom <name> <path>              global axiom, eligible for every item
//! <name> <path> : <ref> <ref> ...   corpus item with its reference premises
//! <name> <path>                     corpus item with unknown references
//! @tag <name> <tag>                 free-form source tag of an item
//! @split train|test <name> ...      train/test membership
//! ```
//!
//! Paths are relative to the manifest's directory. The named formula is taken
//! from the file; items are stored with role `conjecture`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::parser::ProblemReader;
use super::syntax::{AnnotatedFormula, ArityClash, Role, Signature, SymbolKind};
use super::{extend_signature, ParseError};

pub const MANIFEST_FILE: &str = "corpus.manifest";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot access `{path}`: {message}")]
    Io { path: String, message: String },
    #[error("in `{file}`: {error}")]
    Parse { file: String, error: ParseError },
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("duplicate corpus name `{0}`")]
    DuplicateName(String),
    #[error("file `{file}` has no formula named `{name}`")]
    MissingFormula { name: String, file: String },
    #[error("item `{item}` references unknown premise `{premise}`")]
    DanglingPremise { item: String, premise: String },
    #[error("item `{item}` references `{premise}`, which does not precede it")]
    ForwardReference { item: String, premise: String },
    #[error("{kind} `{symbol}` used with arity {first} and {second} across the corpus")]
    ArityClash {
        symbol: String,
        kind: SymbolKind,
        first: usize,
        second: usize,
    },
    #[error("`{0}` is in both the train and the test split")]
    OverlappingSplit(String),
    #[error("test item `{test}` duplicates train item `{train}`")]
    DuplicateAcrossSplit { train: String, test: String },
    #[error("split names unknown item `{0}`")]
    UnknownSplitItem(String),
}

impl From<ArityClash> for CorpusError {
    fn from(c: ArityClash) -> Self {
        CorpusError::ArityClash {
            symbol: c.symbol,
            kind: c.kind,
            first: c.first,
            second: c.second,
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CorpusError {
    CorpusError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusItem {
    pub theorem: AnnotatedFormula,
    /// Premises of the reference proof, when known.
    pub references: Option<Vec<String>>,
    pub tag: Option<String>,
}

impl CorpusItem {
    pub fn name(&self) -> &str {
        &self.theorem.name
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Clone, Debug, Default)]
pub struct Corpus {
    pub axioms: Vec<AnnotatedFormula>,
    pub items: Vec<CorpusItem>,
    pub split: Option<Split>,
    index: HashMap<String, Slot>,
}

#[derive(Clone, Copy, Debug)]
enum Slot {
    Axiom(usize),
    Item(usize),
}

impl Corpus {
    /// Validates the chronological eligibility invariant and global arities.
    pub fn new(
        axioms: Vec<AnnotatedFormula>,
        items: Vec<CorpusItem>,
        split: Option<Split>,
    ) -> Result<Self, CorpusError> {
        let mut index = HashMap::new();
        for (i, a) in axioms.iter().enumerate() {
            if index.insert(a.name.clone(), Slot::Axiom(i)).is_some() {
                return Err(CorpusError::DuplicateName(a.name.clone()));
            }
        }
        for (i, it) in items.iter().enumerate() {
            if index
                .insert(it.theorem.name.clone(), Slot::Item(i))
                .is_some()
            {
                return Err(CorpusError::DuplicateName(it.theorem.name.clone()));
            }
        }
        for (i, it) in items.iter().enumerate() {
            for r in it.references.iter().flatten() {
                match index.get(r) {
                    None => {
                        return Err(CorpusError::DanglingPremise {
                            item: it.name().to_string(),
                            premise: r.clone(),
                        })
                    }
                    Some(Slot::Item(j)) if *j >= i => {
                        return Err(CorpusError::ForwardReference {
                            item: it.name().to_string(),
                            premise: r.clone(),
                        })
                    }
                    Some(_) => {}
                }
            }
        }
        let mut sig = Signature::new();
        for f in axioms.iter().chain(items.iter().map(|i| &i.theorem)) {
            extend_signature(&mut sig, &f.formula)?;
        }
        if let Some(split) = &split {
            let train: HashSet<&String> = split.train.iter().collect();
            for name in split.train.iter().chain(&split.test) {
                if !matches!(index.get(name), Some(Slot::Item(_))) {
                    return Err(CorpusError::UnknownSplitItem(name.clone()));
                }
            }
            for t in &split.test {
                if train.contains(t) {
                    return Err(CorpusError::OverlappingSplit(t.clone()));
                }
            }
            let train_forms: HashMap<String, &str> = split
                .train
                .iter()
                .filter_map(|n| match index.get(n) {
                    Some(Slot::Item(i)) => Some((
                        items[*i].theorem.formula.alpha_normalize().to_string(),
                        n.as_str(),
                    )),
                    _ => None,
                })
                .collect();
            for t in &split.test {
                if let Some(Slot::Item(i)) = index.get(t) {
                    let key = items[*i].theorem.formula.alpha_normalize().to_string();
                    if let Some(train) = train_forms.get(&key) {
                        return Err(CorpusError::DuplicateAcrossSplit {
                            train: train.to_string(),
                            test: t.clone(),
                        });
                    }
                }
            }
        }
        Ok(Corpus {
            axioms,
            items,
            split,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn item_index(&self, name: &str) -> Option<usize> {
        match self.index.get(name) {
            Some(Slot::Item(i)) => Some(*i),
            _ => None,
        }
    }

    pub fn is_axiom(&self, name: &str) -> bool {
        matches!(self.index.get(name), Some(Slot::Axiom(_)))
    }

    /// The named premise as an axiom-role formula.
    pub fn premise(&self, name: &str) -> Option<AnnotatedFormula> {
        match self.index.get(name)? {
            Slot::Axiom(i) => Some(self.axioms[*i].clone()),
            Slot::Item(i) => Some(self.items[*i].theorem.with_role(Role::Axiom)),
        }
    }

    /// Premises eligible for item `i`: global axioms in declaration order,
    /// then earlier items in corpus order.
    pub fn eligible(&self, i: usize) -> Vec<&str> {
        self.axioms
            .iter()
            .map(|a| a.name.as_str())
            .chain(self.items[..i].iter().map(|it| it.name()))
            .collect()
    }

    /// Position in the chronological order; global axioms precede every item.
    pub fn order_of(&self, name: &str) -> Option<isize> {
        match self.index.get(name)? {
            Slot::Axiom(_) => Some(-1),
            Slot::Item(i) => Some(*i as isize),
        }
    }

    /// Loads a corpus from a manifest file or a directory containing one.
    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let manifest = if path.is_dir() {
            path.join(MANIFEST_FILE)
        } else {
            path.to_path_buf()
        };
        let base = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
        let text = std::fs::read_to_string(&manifest).map_err(|e| io_err(&manifest, e))?;
        let reader = ProblemReader::new(vec![base.clone()]);
        let mut cache: HashMap<PathBuf, super::Problem> = HashMap::new();
        let mut fetch = |name: &str, rel: &str| -> Result<AnnotatedFormula, CorpusError> {
            let file = base.join(rel);
            if !cache.contains_key(&file) {
                let p = reader
                    .read_file(&file)
                    .map_err(|error| CorpusError::Parse {
                        file: file.display().to_string(),
                        error,
                    })?;
                cache.insert(file.clone(), p);
            }
            cache[&file]
                .get(name)
                .cloned()
                .ok_or_else(|| CorpusError::MissingFormula {
                    name: name.to_string(),
                    file: rel.to_string(),
                })
        };

        let mut axioms = Vec::new();
        let mut items = Vec::new();
        let mut tags: BTreeMap<String, String> = BTreeMap::new();
        let mut split: Option<Split> = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: &str| CorpusError::Manifest {
                line: n + 1,
                message: message.to_string(),
            };
            let words: Vec<&str> = line.split_whitespace().collect();
            match words[0] {
                "@axiom" => {
                    let [_, name, path] = words[..] else {
                        return Err(bad("expected `@axiom <name> <path>`"));
                    };
                    axioms.push(fetch(name, path)?.with_role(Role::Axiom));
                }
                "@tag" => {
                    let [_, name, tag] = words[..] else {
                        return Err(bad("expected `@tag <name> <tag>`"));
                    };
                    tags.insert(name.to_string(), tag.to_string());
                }
                "@split" => {
                    let s = split.get_or_insert_with(Split::default);
                    let names = words[2..].iter().map(|w| w.to_string());
                    match words.get(1) {
                        Some(&"train") => s.train.extend(names),
                        Some(&"test") => s.test.extend(names),
                        _ => return Err(bad("expected `@split train|test <name> ...`")),
                    }
                }
                w if w.starts_with('@') => return Err(bad("unknown directive")),
                _ => {
                    if words.len() < 2 {
                        return Err(bad("expected `<name> <path> [: <ref> ...]`"));
                    }
                    let references = match words.get(2) {
                        None => None,
                        Some(&":") => Some(words[3..].iter().map(|w| w.to_string()).collect()),
                        Some(_) => return Err(bad("reference list must start with `:`")),
                    };
                    let theorem = fetch(words[0], words[1])?.with_role(Role::Conjecture);
                    items.push(CorpusItem {
                        theorem,
                        references,
                        tag: None,
                    });
                }
            }
        }
        for it in &mut items {
            it.tag = tags.remove(it.name());
        }
        if let Some(name) = tags.into_keys().next() {
            return Err(CorpusError::Manifest {
                line: 0,
                message: format!("tag for unknown item `{name}`"),
            });
        }
        Corpus::new(axioms, items, split)
    }

    /// Writes the manifest and one problem file per formula. The output is a
    /// pure function of the corpus contents.
    pub fn write(&self, dir: &Path) -> Result<(), CorpusError> {
        let mk = |p: &Path| std::fs::create_dir_all(p).map_err(|e| io_err(p, e));
        mk(&dir.join("axioms"))?;
        mk(&dir.join("problems"))?;
        let mut manifest = String::from("# corpus manifest v1\n");
        for a in &self.axioms {
            let rel = format!("axioms/{}.p", a.name);
            let path = dir.join(&rel);
            std::fs::write(&path, format!("{a}\n")).map_err(|e| io_err(&path, e))?;
            let _ = writeln!(manifest, "@axiom {} {rel}", a.name);
        }
        for it in &self.items {
            let rel = format!("problems/{}.p", it.name());
            let path = dir.join(&rel);
            std::fs::write(&path, format!("{}\n", it.theorem)).map_err(|e| io_err(&path, e))?;
            let _ = write!(manifest, "{} {rel}", it.name());
            if let Some(refs) = &it.references {
                manifest.push_str(" :");
                for r in refs {
                    let _ = write!(manifest, " {r}");
                }
            }
            manifest.push('\n');
        }
        for it in &self.items {
            if let Some(tag) = &it.tag {
                let _ = writeln!(manifest, "@tag {} {tag}", it.name());
            }
        }
        if let Some(split) = &self.split {
            for (label, names) in [("train", &split.train), ("test", &split.test)] {
                if !names.is_empty() {
                    let _ = writeln!(manifest, "@split {label} {}", names.join(" "));
                }
            }
        }
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, manifest).map_err(|e| io_err(&path, e))
    }
}
