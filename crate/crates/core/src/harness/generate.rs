//! Synthetic corpora with known reference proofs.
//!
//! Every generated item is proved from its reference premises before it is
//! kept; the depth of that proof is stored in the item's tag as `depth=<d>`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cnf::{clause_set, CnfConfig};
use crate::fol::{parse_formula, AnnotatedFormula, ClauseSet, Corpus, CorpusItem, Role};
use crate::prover::{prove, Limits, Status};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Each theorem follows from its predecessor and one step axiom.
    Chain,
    /// Instances of a small equational theory and lemmas over them.
    Group,
    /// Interleaved chains over several topics plus group items.
    Mixed,
    /// Near-identical problems over one shared library.
    NearDup,
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chain" => Ok(Family::Chain),
            "group" => Ok(Family::Group),
            "mixed" => Ok(Family::Mixed),
            "neardup" => Ok(Family::NearDup),
            _ => Err(format!(
                "unknown family `{s}` (expected chain, group, mixed or neardup)"
            )),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Chain => "chain",
            Family::Group => "group",
            Family::Mixed => "mixed",
            Family::NearDup => "neardup",
        })
    }
}

/// Limits used to confirm that an item follows from its references.
pub fn verification_limits() -> Limits {
    Limits {
        inferences: 200_000,
        max_depth: 8,
        model_domain: 0,
        ..Limits::default()
    }
}

struct Builder {
    axioms: Vec<AnnotatedFormula>,
    items: Vec<CorpusItem>,
    seen: BTreeSet<String>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            axioms: Vec::new(),
            items: Vec::new(),
            seen: BTreeSet::new(),
        }
    }

    fn axiom(&mut self, name: &str, text: &str) {
        let f = parse_formula(text).unwrap_or_else(|e| panic!("generator axiom `{text}`: {e}"));
        self.axioms
            .push(AnnotatedFormula::new(name, Role::Axiom, f));
    }

    fn formula(&self, name: &str) -> AnnotatedFormula {
        self.axioms
            .iter()
            .find(|a| a.name == name)
            .cloned()
            .or_else(|| {
                self.items
                    .iter()
                    .find(|i| i.name() == name)
                    .map(|i| i.theorem.with_role(Role::Axiom))
            })
            .unwrap_or_else(|| panic!("generator reference `{name}` is undefined"))
    }

    /// Keeps the item when its references prove it; returns the proof depth.
    fn item(&mut self, name: &str, text: &str, refs: &[String]) -> Option<usize> {
        let f = parse_formula(text).unwrap_or_else(|e| panic!("generator item `{text}`: {e}"));
        let key = f.alpha_normalize().to_string();
        if self.seen.contains(&key) {
            return None;
        }
        let theorem = AnnotatedFormula::new(name, Role::Conjecture, f);
        let mut problem: Vec<AnnotatedFormula> = refs.iter().map(|r| self.formula(r)).collect();
        problem.push(theorem.clone());
        let r = prove(
            &clause_set(&problem, &CnfConfig::default()),
            &verification_limits(),
            None,
        )
        .ok()?;
        if r.status != Status::Proved {
            log::debug!("generator dropped `{name}`: {}", r.status.as_str());
            return None;
        }
        self.seen.insert(key);
        self.items.push(CorpusItem {
            theorem,
            references: Some(refs.to_vec()),
            tag: Some(format!("depth={}", r.stats.depth)),
        });
        Some(r.stats.depth)
    }

    fn finish(self, split: Option<crate::fol::Split>) -> Corpus {
        Corpus::new(self.axioms, self.items, split).expect("generated corpus is well formed")
    }
}

struct Chain {
    prefix: String,
    constant: String,
    next: usize,
    last: String,
}

impl Chain {
    fn new(b: &mut Builder, prefix: &str) -> Self {
        let constant = format!("{prefix}_c");
        let base = format!("{prefix}_base");
        b.axiom(&base, &format!("{prefix}_p0({constant})"));
        Chain {
            prefix: prefix.to_string(),
            constant,
            next: 0,
            last: base,
        }
    }

    fn pred(&self, i: usize) -> String {
        format!("{}_p{i}", self.prefix)
    }

    /// Adds the step axiom `p_i => p_{i+1}`, sometimes with a side fact.
    fn step(&mut self, b: &mut Builder, rng: &mut ChaCha8Rng) -> Vec<String> {
        let i = self.next;
        let (p, q, c) = (self.pred(i), self.pred(i + 1), &self.constant);
        let step = format!("{}_step{i}", self.prefix);
        let mut refs = vec![step.clone()];
        if rng.gen_bool(0.3) {
            let side = format!("{}_side{i}", self.prefix);
            b.axiom(&side, &format!("{}_h{i}({c})", self.prefix));
            b.axiom(
                &step,
                &format!("![X]: (({p}(X) & {}_h{i}(X)) => {q}(X))", self.prefix),
            );
            refs.push(side);
        } else {
            b.axiom(&step, &format!("![X]: ({p}(X) => {q}(X))"));
        }
        for j in 0..rng.gen_range(1..=2) {
            let noise = format!("{}_noise{i}_{j}", self.prefix);
            let a = rng.gen_range(0..=i + 1);
            let text = match rng.gen_range(0..3) {
                0 => format!("![X]: ({}(X) => {}_w{a}(X))", self.pred(a), self.prefix),
                1 => format!("{}_w{a}({c})", self.prefix),
                _ => format!("![X]: ({}_w{a}(X) => {}_u{i}(X))", self.prefix, self.prefix),
            };
            b.axiom(&noise, &text);
        }
        self.next += 1;
        refs
    }

    /// The next theorem: one or two steps beyond the last one.
    fn advance(&mut self, b: &mut Builder, rng: &mut ChaCha8Rng, name: &str) {
        let mut refs = vec![self.last.clone()];
        refs.extend(self.step(b, rng));
        if rng.gen_bool(0.25) {
            refs.extend(self.step(b, rng));
        }
        let goal = format!("{}({})", self.pred(self.next), self.constant);
        if b.item(name, &goal, &refs).is_some() {
            self.last = name.to_string();
        }
    }
}

struct Group {
    constants: Vec<String>,
    inverse_lemmas: Vec<(String, String)>,
}

impl Group {
    const LEFT_ID: &'static str = "grp_left_id";
    const LEFT_INV: &'static str = "grp_left_inv";
    const ASSOC: &'static str = "grp_assoc";

    fn new(b: &mut Builder) -> Self {
        b.axiom(Self::LEFT_ID, "![X]: mult(e, X) = X");
        b.axiom(Self::LEFT_INV, "![X]: mult(inv(X), X) = e");
        b.axiom(
            Self::ASSOC,
            "![X, Y, Z]: mult(mult(X, Y), Z) = mult(X, mult(Y, Z))",
        );
        Group {
            constants: (0..6).map(|i| format!("g{i}")).collect(),
            inverse_lemmas: Vec::new(),
        }
    }

    fn add(&mut self, b: &mut Builder, rng: &mut ChaCha8Rng, name: &str) -> bool {
        let a = self.constants.choose(rng).expect("constants").clone();
        let x = self.constants.choose(rng).expect("constants").clone();
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        let inverse = format!("mult(inv({a}), {a}) = e");
        let (text, refs, is_inverse) = match rng.gen_range(0..5) {
            0 => (format!("mult(e, {a}) = {a}"), s(&[Self::LEFT_ID]), false),
            2 => (
                format!("mult(e, mult(e, {a})) = {a}"),
                s(&[Self::LEFT_ID]),
                false,
            ),
            3 if !self.inverse_lemmas.is_empty() => {
                let (lemma, c) = self.inverse_lemmas.choose(rng).expect("non-empty");
                (
                    format!("mult(e, mult(inv({c}), {c})) = e"),
                    vec![lemma.clone(), Self::LEFT_ID.to_string()],
                    false,
                )
            }
            4 => (
                format!("mult(mult(inv({a}), {a}), {x}) = {x}"),
                s(&[Self::LEFT_INV, Self::LEFT_ID]),
                false,
            ),
            _ => (inverse, s(&[Self::LEFT_INV]), true),
        };
        let kept = b.item(name, &text, &refs).is_some();
        if kept && is_inverse {
            self.inverse_lemmas.push((name.to_string(), a));
        }
        kept
    }
}

fn chain_family(size: usize, rng: &mut ChaCha8Rng) -> Corpus {
    let mut b = Builder::new();
    let mut chain = Chain::new(&mut b, "ch");
    for i in 0..size {
        chain.advance(&mut b, rng, &format!("ch_t{i}"));
    }
    b.finish(None)
}

fn group_family(size: usize, rng: &mut ChaCha8Rng) -> Corpus {
    let mut b = Builder::new();
    let mut g = Group::new(&mut b);
    let mut n = 0;
    let mut tries = 0;
    while n < size && tries < size * 20 {
        tries += 1;
        if g.add(&mut b, rng, &format!("grp_t{n}")) {
            n += 1;
        }
    }
    b.finish(None)
}

const TOPICS: [&str; 4] = ["ta", "tb", "tc", "td"];

fn mixed_family(size: usize, rng: &mut ChaCha8Rng) -> Corpus {
    let mut b = Builder::new();
    let mut chains: Vec<Chain> = TOPICS.iter().map(|t| Chain::new(&mut b, t)).collect();
    let mut group = Group::new(&mut b);
    let mut tries = 0;
    while b.items.len() < size && tries < size * 20 {
        tries += 1;
        let name = format!("mx_t{}", b.items.len());
        if rng.gen_bool(0.25) {
            group.add(&mut b, rng, &name);
        } else {
            let k = rng.gen_range(0..chains.len());
            chains[k].advance(&mut b, rng, &name);
        }
    }
    let n = b.items.len();
    let split = (n >= 3).then(|| {
        let cut = n * 2 / 3;
        crate::fol::Split {
            train: b.items[..cut]
                .iter()
                .map(|i| i.name().to_string())
                .collect(),
            test: b.items[cut..]
                .iter()
                .map(|i| i.name().to_string())
                .collect(),
        }
    });
    b.finish(split)
}

pub const NEARDUP_ROUTES: usize = 5;
pub const NEARDUP_CONSTANTS: usize = 8;

fn neardup_family(size: usize, rng: &mut ChaCha8Rng) -> Corpus {
    let mut b = Builder::new();
    for k in 0..NEARDUP_ROUTES {
        b.axiom(
            &format!("nd_route{k}"),
            &format!("![X]: (nd_q{k}(X) => nd_p(X))"),
        );
        b.axiom(
            &format!("nd_step{k}"),
            &format!("![X, Y]: ((nd_r(X, Y) & nd_t{k}(Y)) => nd_q{k}(X))"),
        );
        b.axiom(
            &format!("nd_hop{k}"),
            &format!("![Y, Z]: ((nd_r(Y, Z) & nd_s{k}(Z)) => nd_t{k}(Y))"),
        );
    }
    let mut tries = 0;
    while b.items.len() < size && tries < size * 20 {
        tries += 1;
        let m = rng.gen_range(0..NEARDUP_CONSTANTS);
        let route = m % NEARDUP_ROUTES;
        let links = rng.gen_range(3..=5);
        let fan = rng.gen_range(5..=7);
        let mut facts = Vec::new();
        for j in 0..links {
            facts.push(format!("nd_r(nd_c{m}, nd_d{j})"));
            for i in 0..fan {
                facts.push(format!("nd_r(nd_d{j}, nd_e{j}_{i})"));
            }
        }
        facts.push(format!("nd_s{route}(nd_e0_{})", rng.gen_range(0..fan)));
        if rng.gen_bool(0.5) {
            let other = (route + 1 + rng.gen_range(0..NEARDUP_ROUTES - 1)) % NEARDUP_ROUTES;
            facts.push(format!(
                "nd_s{other}(nd_e{}_{})",
                rng.gen_range(1..links),
                fan
            ));
        }
        let text = format!("~(~nd_p(nd_c{m}) & {})", facts.join(" & "));
        let refs = vec![
            format!("nd_route{route}"),
            format!("nd_step{route}"),
            format!("nd_hop{route}"),
        ];
        let name = format!("nd_t{}", b.items.len());
        b.item(&name, &text, &refs);
    }
    b.finish(None)
}

/// A deterministic corpus of (at most) `size` items.
pub fn generate_corpus(family: Family, size: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match family {
        Family::Chain => chain_family(size, &mut rng),
        Family::Group => group_family(size, &mut rng),
        Family::Mixed => mixed_family(size, &mut rng),
        Family::NearDup => neardup_family(size, &mut rng),
    }
}

/// One problem per item: every global axiom plus the conjecture.
pub fn library_problems(corpus: &Corpus, cnf: &CnfConfig) -> Vec<(String, ClauseSet)> {
    corpus
        .items
        .iter()
        .map(|it| {
            let mut fs = corpus.axioms.clone();
            fs.push(it.theorem.clone());
            (it.name().to_string(), clause_set(&fs, cnf))
        })
        .collect()
}

#[doc(hidden)]
pub fn depth_tag(item: &CorpusItem) -> Option<usize> {
    item.tag.as_deref()?.strip_prefix("depth=")?.parse().ok()
}
