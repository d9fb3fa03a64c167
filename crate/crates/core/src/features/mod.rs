//! Sparse feature vectors over three namespaces: symbols (`SYM`),
//! parent-to-child symbol chains (`STR`) and truth values in stored
//! models (`MOD`).
//!
//! Feature keys carry their content, so ids are stable across runs and
//! processes without a shared interner.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::fol::{symbols_of, Atom, Formula, Term};
use crate::models::{ModelStore, Truth};

/// Token standing for any variable in `STR` chains.
pub const VAR_TOKEN: &str = "VAR";
pub const DEFAULT_STR_DEPTH: usize = 2;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Feature {
    Sym(String),
    Str(Vec<String>),
    Mod(usize, bool),
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Feature::Sym(s) => write!(f, "SYM:{s}"),
            Feature::Str(chain) => write!(f, "STR:{}", chain.join(">")),
            Feature::Mod(i, t) => write!(f, "MOD:{i}:{}", if *t { 'T' } else { 'F' }),
        }
    }
}

impl FromStr for Feature {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(rest) = s.strip_prefix("SYM:") {
            return Ok(Feature::Sym(rest.to_string()));
        }
        if let Some(rest) = s.strip_prefix("STR:") {
            let chain: Vec<String> = rest.split('>').map(str::to_string).collect();
            if chain.len() < 2 {
                return Err(format!("chain too short in `{s}`"));
            }
            return Ok(Feature::Str(chain));
        }
        if let Some(rest) = s.strip_prefix("MOD:") {
            let (i, t) = rest
                .split_once(':')
                .ok_or_else(|| format!("bad model feature `{s}`"))?;
            let i = i.parse().map_err(|_| format!("bad model index in `{s}`"))?;
            return match t {
                "T" => Ok(Feature::Mod(i, true)),
                "F" => Ok(Feature::Mod(i, false)),
                _ => Err(format!("bad truth value in `{s}`")),
            };
        }
        Err(format!("unknown feature namespace in `{s}`"))
    }
}

impl From<Feature> for String {
    fn from(f: Feature) -> String {
        f.to_string()
    }
}

impl TryFrom<String> for Feature {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Feature to weight; weights are positive.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub entries: BTreeMap<Feature, f64>,
}

impl FeatureVector {
    pub fn new() -> Self {
        FeatureVector::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, f: &Feature) -> f64 {
        self.entries.get(f).copied().unwrap_or(0.0)
    }

    /// Adds `w` to the weight of `f`; non-positive weights are ignored.
    pub fn add(&mut self, f: Feature, w: f64) {
        if w > 0.0 {
            *self.entries.entry(f).or_insert(0.0) += w;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Feature, f64)> {
        self.entries.iter().map(|(f, w)| (f, *w))
    }

    pub fn scaled(&self, c: f64) -> FeatureVector {
        let mut out = FeatureVector::new();
        for (f, w) in self.iter() {
            out.add(f.clone(), w * c);
        }
        out
    }

    pub fn binarized(&self) -> FeatureVector {
        FeatureVector {
            entries: self.entries.keys().map(|f| (f.clone(), 1.0)).collect(),
        }
    }

    /// Only the `SYM` entries.
    pub fn symbols(&self) -> FeatureVector {
        FeatureVector {
            entries: self
                .entries
                .iter()
                .filter(|(f, _)| matches!(f, Feature::Sym(_)))
                .map(|(f, w)| (f.clone(), *w))
                .collect(),
        }
    }

    /// Jaccard overlap of the key sets.
    pub fn jaccard(&self, other: &FeatureVector) -> f64 {
        let inter = self
            .entries
            .keys()
            .filter(|k| other.entries.contains_key(k))
            .count();
        let union = self.len() + other.len() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }
}

impl FromIterator<(Feature, f64)> for FeatureVector {
    fn from_iter<I: IntoIterator<Item = (Feature, f64)>>(iter: I) -> Self {
        let mut v = FeatureVector::new();
        for (f, w) in iter {
            v.add(f, w);
        }
        v
    }
}

/// One `SYM` feature per distinct symbol, weighted by occurrence count.
pub fn symbol_features(f: &Formula) -> FeatureVector {
    symbols_of(f)
        .into_iter()
        .map(|(s, n)| (Feature::Sym(s.name), n as f64))
        .collect()
}

fn label(t: &Term) -> &str {
    match t {
        Term::Var(_) => VAR_TOKEN,
        Term::App(f, _) => f,
    }
}

fn chains_from(t: &Term, prefix: &mut Vec<String>, depth: usize, out: &mut FeatureVector) {
    prefix.push(label(t).to_string());
    if prefix.len() >= 2 {
        out.add(Feature::Str(prefix.clone()), 1.0);
    }
    if prefix.len() < depth {
        if let Term::App(_, args) = t {
            for a in args {
                chains_from(a, prefix, depth, out);
            }
        }
    }
    prefix.pop();
}

fn walk_term(t: &Term, depth: usize, out: &mut FeatureVector) {
    chains_from(t, &mut Vec::new(), depth, out);
    if let Term::App(_, args) = t {
        args.iter().for_each(|a| walk_term(a, depth, out));
    }
}

/// Directed symbol chains of 2 to `depth` nodes read downwards from a
/// predicate or function occurrence; variables become [`VAR_TOKEN`].
pub fn structural_features(f: &Formula, depth: usize) -> FeatureVector {
    let mut out = FeatureVector::new();
    f.for_each_atom(&mut |a| {
        let (p, args): (&str, Vec<&Term>) = match a {
            Atom::Pred(p, args) => (p, args.iter().collect()),
            Atom::Eq(l, r) => ("=", vec![l, r]),
        };
        if depth >= 2 {
            let mut prefix = vec![p.to_string()];
            for t in &args {
                chains_from(t, &mut prefix, depth, &mut out);
            }
        }
        for t in args {
            walk_term(t, depth, &mut out);
        }
    });
    out
}

/// `MOD:i:T` or `MOD:i:F` for every model the formula is defined in.
pub fn semantic_features(f: &Formula, store: &ModelStore) -> FeatureVector {
    semantic_from_row(&store.iter().map(|m| m.evaluate(f)).collect::<Vec<_>>())
}

/// Same as [`semantic_features`] from a precomputed truth-matrix row.
pub fn semantic_from_row(row: &[Truth]) -> FeatureVector {
    row.iter()
        .enumerate()
        .filter_map(|(i, t)| match t {
            Truth::True => Some((Feature::Mod(i, true), 1.0)),
            Truth::False => Some((Feature::Mod(i, false), 1.0)),
            Truth::Undefined => None,
        })
        .collect()
}

/// Union of the vectors, summing weights of shared keys.
pub fn combine<'a>(vectors: impl IntoIterator<Item = &'a FeatureVector>) -> FeatureVector {
    let mut out = FeatureVector::new();
    for v in vectors {
        for (f, w) in v.iter() {
            out.add(f.clone(), w);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub structural: bool,
    pub str_depth: usize,
    pub semantic: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            structural: true,
            str_depth: DEFAULT_STR_DEPTH,
            semantic: true,
        }
    }
}

impl FeatureConfig {
    pub fn symbols_only() -> Self {
        FeatureConfig {
            structural: false,
            str_depth: DEFAULT_STR_DEPTH,
            semantic: false,
        }
    }

    /// Features of `f`; `row` is its truth-matrix row when semantic
    /// features are on.
    pub fn extract(&self, f: &Formula, row: Option<&[Truth]>) -> FeatureVector {
        let mut parts = vec![symbol_features(f)];
        if self.structural {
            parts.push(structural_features(f, self.str_depth));
        }
        if self.semantic {
            if let Some(row) = row {
                parts.push(semantic_from_row(row));
            }
        }
        combine(&parts)
    }
}

#[derive(Serialize, Deserialize)]
struct CacheRecord {
    name: String,
    features: BTreeMap<Feature, f64>,
}

/// One JSON record per formula name.
pub fn write_cache<'a>(entries: impl IntoIterator<Item = (&'a str, &'a FeatureVector)>) -> String {
    let mut s = String::new();
    for (name, v) in entries {
        let rec = CacheRecord {
            name: name.to_string(),
            features: v.entries.clone(),
        };
        s.push_str(&serde_json::to_string(&rec).expect("feature records serialize"));
        s.push('\n');
    }
    s
}

pub fn read_cache(text: &str) -> Result<Vec<(String, FeatureVector)>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let rec: CacheRecord = serde_json::from_str(l)?;
            Ok((
                rec.name,
                FeatureVector {
                    entries: rec.features,
                },
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests;
