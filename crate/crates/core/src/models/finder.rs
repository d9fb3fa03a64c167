//! Flatten, ground over `0..n`, and search the ground problem with a small
//! DPLL solver using watched literals.

use std::collections::HashMap;

use crate::fol::{Atom, ClauseSet, Literal, Term, EQUALITY};

use super::{tuple_index, FiniteModel, ModelError, Table, Truth};

pub const DEFAULT_MAX_DOMAIN: u32 = 3;
pub const DEFAULT_GROUNDING_LIMIT: u64 = 1_000_000;
pub const DEFAULT_CONFLICT_LIMIT: u64 = 20_000;

#[derive(Clone, Debug)]
pub struct FinderConfig {
    pub min_domain: u32,
    pub max_domain: u32,
    pub grounding_limit: u64,
    /// Conflicts allowed per domain size before the search gives up.
    pub conflict_limit: u64,
}

impl Default for FinderConfig {
    fn default() -> Self {
        FinderConfig {
            min_domain: 1,
            max_domain: DEFAULT_MAX_DOMAIN,
            grounding_limit: DEFAULT_GROUNDING_LIMIT,
            conflict_limit: DEFAULT_CONFLICT_LIMIT,
        }
    }
}

/// Smallest model of the clause set with at most `max_domain` elements.
pub fn find_model(clauses: &ClauseSet, max_domain: u32) -> Result<Option<FiniteModel>, ModelError> {
    let lits: Vec<Vec<Literal>> = clauses.iter().map(|c| c.literals.clone()).collect();
    find_model_in(
        &lits,
        &FinderConfig {
            max_domain,
            ..FinderConfig::default()
        },
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Function,
    Predicate,
}

struct Sym {
    name: String,
    kind: Kind,
    arity: usize,
    freq: usize,
    first_seen: usize,
}

#[derive(Debug)]
enum FLit {
    Pred {
        sign: bool,
        sym: usize,
        args: Vec<u32>,
    },
    Fun {
        sign: bool,
        sym: usize,
        args: Vec<u32>,
        res: u32,
    },
    Eq {
        sign: bool,
        a: u32,
        b: u32,
    },
}

struct FClause {
    nvars: u32,
    lits: Vec<FLit>,
}

#[derive(Default)]
struct SymTable {
    syms: Vec<Sym>,
    index: HashMap<(String, bool), usize>,
}

impl SymTable {
    fn intern(&mut self, name: &str, kind: Kind, arity: usize) -> Result<usize, ModelError> {
        let key = (name.to_string(), kind == Kind::Function);
        if let Some(&i) = self.index.get(&key) {
            if self.syms[i].arity != arity {
                return Err(ModelError::ArityClash(name.to_string()));
            }
            self.syms[i].freq += 1;
            return Ok(i);
        }
        let i = self.syms.len();
        self.syms.push(Sym {
            name: name.to_string(),
            kind,
            arity,
            freq: 1,
            first_seen: i,
        });
        self.index.insert(key, i);
        Ok(i)
    }
}

struct Flattener<'a> {
    table: &'a mut SymTable,
    vars: HashMap<String, u32>,
    cache: HashMap<Term, u32>,
    extra: Vec<FLit>,
    next: u32,
}

impl Flattener<'_> {
    fn fresh(&mut self) -> u32 {
        self.next += 1;
        self.next - 1
    }

    fn var(&mut self, name: &str) -> u32 {
        if let Some(&v) = self.vars.get(name) {
            return v;
        }
        let v = self.fresh();
        self.vars.insert(name.to_string(), v);
        v
    }

    fn args(&mut self, args: &[Term]) -> Result<Vec<u32>, ModelError> {
        args.iter().map(|t| self.term(t)).collect()
    }

    fn term(&mut self, t: &Term) -> Result<u32, ModelError> {
        match t {
            Term::Var(v) => Ok(self.var(v)),
            Term::App(f, args) => {
                if let Some(&y) = self.cache.get(t) {
                    return Ok(y);
                }
                let sym = self.table.intern(f, Kind::Function, args.len())?;
                let args = self.args(args)?;
                let res = self.fresh();
                self.cache.insert(t.clone(), res);
                self.extra.push(FLit::Fun {
                    sign: false,
                    sym,
                    args,
                    res,
                });
                Ok(res)
            }
        }
    }

    fn equation(&mut self, sign: bool, l: &Term, r: &Term) -> Result<FLit, ModelError> {
        Ok(match (l, r) {
            (Term::Var(a), Term::Var(b)) => FLit::Eq {
                sign,
                a: self.var(a),
                b: self.var(b),
            },
            (Term::App(f, args), Term::Var(y)) | (Term::Var(y), Term::App(f, args)) => {
                let sym = self.table.intern(f, Kind::Function, args.len())?;
                let args = self.args(args)?;
                FLit::Fun {
                    sign,
                    sym,
                    args,
                    res: self.var(y),
                }
            }
            (Term::App(f, args), t) => {
                let res = self.term(t)?;
                let sym = self.table.intern(f, Kind::Function, args.len())?;
                let args = self.args(args)?;
                FLit::Fun {
                    sign,
                    sym,
                    args,
                    res,
                }
            }
        })
    }

    fn literal(&mut self, l: &Literal) -> Result<FLit, ModelError> {
        match &l.atom {
            Atom::Eq(a, b) => self.equation(l.sign, a, b),
            Atom::Pred(p, args) if p == EQUALITY && args.len() == 2 => {
                self.equation(l.sign, &args[0], &args[1])
            }
            Atom::Pred(p, args) => {
                let sym = self.table.intern(p, Kind::Predicate, args.len())?;
                let args = self.args(args)?;
                Ok(FLit::Pred {
                    sign: l.sign,
                    sym,
                    args,
                })
            }
        }
    }
}

fn flatten(clauses: &[Vec<Literal>], table: &mut SymTable) -> Result<Vec<FClause>, ModelError> {
    let mut out = Vec::with_capacity(clauses.len());
    for c in clauses {
        let mut fl = Flattener {
            table,
            vars: HashMap::new(),
            cache: HashMap::new(),
            extra: Vec::new(),
            next: 0,
        };
        let mut lits = Vec::new();
        for l in c {
            lits.push(fl.literal(l)?);
        }
        lits.append(&mut fl.extra);
        let nvars = fl.next;
        out.push(FClause { nvars, lits });
    }
    Ok(out)
}

struct Layout {
    n: u32,
    base: Vec<u32>,
    total: u32,
}

impl Layout {
    fn new(syms: &[Sym], n: u32) -> Layout {
        let mut base = Vec::with_capacity(syms.len());
        let mut total = 0u32;
        for s in syms {
            base.push(total);
            let cells = n.pow(s.arity as u32);
            total += if s.kind == Kind::Function {
                cells * n
            } else {
                cells
            };
        }
        Layout { n, base, total }
    }

    fn pred(&self, sym: usize, args: &[u32]) -> u32 {
        self.base[sym] + tuple_index(self.n, args) as u32
    }

    fn fun(&self, sym: usize, args: &[u32], value: u32) -> u32 {
        self.base[sym] + tuple_index(self.n, args) as u32 * self.n + value
    }
}

fn grounding_count(flat: &[FClause], syms: &[Sym], n: u32) -> u64 {
    let n = n as u64;
    let mut count = 0u64;
    for c in flat {
        count = count.saturating_add(n.saturating_pow(c.nvars));
    }
    for s in syms.iter().filter(|s| s.kind == Kind::Function) {
        count = count.saturating_add(
            n.saturating_pow(s.arity as u32)
                .saturating_mul(1 + n * (n - 1) / 2),
        );
    }
    count
}

fn lit(var: u32, sign: bool) -> u32 {
    var * 2 + (!sign) as u32
}

fn ground(flat: &[FClause], syms: &[Sym], layout: &Layout) -> Vec<Vec<u32>> {
    let n = layout.n;
    let mut out = Vec::new();
    let mut assignment: Vec<u32> = Vec::new();
    let mut args = Vec::new();
    for c in flat {
        assignment.clear();
        assignment.resize(c.nvars as usize, 0);
        'tuples: loop {
            let mut ground = Vec::with_capacity(c.lits.len());
            let mut satisfied = false;
            for l in &c.lits {
                match l {
                    FLit::Eq { sign, a, b } => {
                        if (assignment[*a as usize] == assignment[*b as usize]) == *sign {
                            satisfied = true;
                            break;
                        }
                    }
                    FLit::Pred { sign, sym, args: a } => {
                        args.clear();
                        args.extend(a.iter().map(|v| assignment[*v as usize]));
                        ground.push(lit(layout.pred(*sym, &args), *sign));
                    }
                    FLit::Fun {
                        sign,
                        sym,
                        args: a,
                        res,
                    } => {
                        args.clear();
                        args.extend(a.iter().map(|v| assignment[*v as usize]));
                        ground.push(lit(
                            layout.fun(*sym, &args, assignment[*res as usize]),
                            *sign,
                        ));
                    }
                }
            }
            if !satisfied {
                ground.sort_unstable();
                ground.dedup();
                if !ground.windows(2).any(|w| w[0] ^ 1 == w[1]) {
                    out.push(ground);
                }
            }
            // next tuple
            let mut i = 0;
            loop {
                if i == assignment.len() {
                    break 'tuples;
                }
                assignment[i] += 1;
                if assignment[i] < n {
                    break;
                }
                assignment[i] = 0;
                i += 1;
            }
        }
    }
    let mut constants = 0;
    let mut order: Vec<usize> = (0..syms.len()).collect();
    order.sort_by_key(|&i| syms[i].first_seen);
    for i in order {
        let s = &syms[i];
        if s.kind != Kind::Function {
            continue;
        }
        let cells = n.pow(s.arity as u32);
        for cell in 0..cells {
            let base = layout.base[i] + cell * n;
            out.push((0..n).map(|e| lit(base + e, true)).collect());
            for a in 0..n {
                for b in a + 1..n {
                    out.push(vec![lit(base + a, false), lit(base + b, false)]);
                }
            }
        }
        if s.arity == 0 {
            // the i-th constant can be mapped to an element <= i
            for e in constants + 1..n {
                out.push(vec![lit(layout.base[i] + e, false)]);
            }
            constants += 1;
        }
    }
    out
}

struct Solver {
    clauses: Vec<Vec<u32>>,
    watches: Vec<Vec<u32>>,
    assign: Vec<i8>,
    trail: Vec<u32>,
    qhead: usize,
}

impl Solver {
    fn value(&self, l: u32) -> i8 {
        let a = self.assign[(l / 2) as usize];
        if a < 0 {
            -1
        } else {
            a ^ (l & 1) as i8
        }
    }

    fn enqueue(&mut self, l: u32) -> bool {
        match self.value(l) {
            1 => true,
            0 => false,
            _ => {
                self.assign[(l / 2) as usize] = 1 ^ (l & 1) as i8;
                self.trail.push(l);
                true
            }
        }
    }

    fn propagate(&mut self) -> bool {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = p ^ 1;
            let mut ws = std::mem::take(&mut self.watches[false_lit as usize]);
            let mut i = 0;
            let mut conflict = false;
            while i < ws.len() {
                let ci = ws[i] as usize;
                let c = &mut self.clauses[ci];
                if c[0] == false_lit {
                    c.swap(0, 1);
                }
                let first = c[0];
                let first_val = {
                    let a = self.assign[(first / 2) as usize];
                    if a < 0 {
                        -1
                    } else {
                        a ^ (first & 1) as i8
                    }
                };
                if first_val == 1 {
                    i += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..c.len() {
                    let l = c[k];
                    let a = self.assign[(l / 2) as usize];
                    if a < 0 || a ^ (l & 1) as i8 == 1 {
                        c.swap(1, k);
                        self.watches[c[1] as usize].push(ci as u32);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    ws.swap_remove(i);
                    continue;
                }
                i += 1;
                if first_val == 0 {
                    conflict = true;
                    break;
                }
                self.assign[(first / 2) as usize] = 1 ^ (first & 1) as i8;
                self.trail.push(first);
            }
            let rest = std::mem::take(&mut self.watches[false_lit as usize]);
            ws.extend(rest);
            self.watches[false_lit as usize] = ws;
            if conflict {
                return false;
            }
        }
        true
    }

    fn undo(&mut self, len: usize) {
        for l in self.trail.drain(len..) {
            self.assign[(l / 2) as usize] = -1;
        }
        self.qhead = len;
    }

    /// `order` lists decision variables with their preferred first value.
    /// `Err` once `limit` conflicts have been seen.
    fn solve(
        nvars: u32,
        clauses: Vec<Vec<u32>>,
        order: &[(u32, bool)],
        limit: u64,
    ) -> Result<Option<Vec<bool>>, ()> {
        let mut s = Solver {
            clauses: Vec::new(),
            watches: vec![Vec::new(); nvars as usize * 2],
            assign: vec![-1; nvars as usize],
            trail: Vec::new(),
            qhead: 0,
        };
        let mut units = Vec::new();
        for c in clauses {
            match c.len() {
                0 => return Ok(None),
                1 => units.push(c[0]),
                _ => {
                    let ci = s.clauses.len() as u32;
                    s.watches[c[0] as usize].push(ci);
                    s.watches[c[1] as usize].push(ci);
                    s.clauses.push(c);
                }
            }
        }
        for u in units {
            if !s.enqueue(u) {
                return Ok(None);
            }
        }
        // (trail length before the decision, decision literal, already flipped)
        let mut decisions: Vec<(usize, u32, bool)> = Vec::new();
        let mut cursor = 0usize;
        let mut ok = s.propagate();
        let mut conflicts = 0u64;
        loop {
            if !ok {
                conflicts += 1;
                if conflicts > limit {
                    return Err(());
                }
                loop {
                    match decisions.pop() {
                        None => return Ok(None),
                        Some((_, _, true)) => continue,
                        Some((len, l, false)) => {
                            s.undo(len);
                            decisions.push((len, l ^ 1, true));
                            s.enqueue(l ^ 1);
                            break;
                        }
                    }
                }
                cursor = 0;
                ok = s.propagate();
                continue;
            }
            while cursor < order.len() && s.assign[order[cursor].0 as usize] >= 0 {
                cursor += 1;
            }
            if cursor == order.len() {
                return Ok(Some(s.assign.iter().map(|&a| a == 1).collect()));
            }
            let (v, first) = order[cursor];
            let l = lit(v, first);
            decisions.push((s.trail.len(), l, false));
            s.enqueue(l);
            ok = s.propagate();
        }
    }
}

/// Searches domain sizes `min_domain..=max_domain` in ascending order.
pub fn find_model_in(
    clauses: &[Vec<Literal>],
    config: &FinderConfig,
) -> Result<Option<FiniteModel>, ModelError> {
    let mut table = SymTable::default();
    let flat = flatten(clauses, &mut table)?;
    let syms = table.syms;
    let mut by_freq: Vec<usize> = (0..syms.len()).collect();
    by_freq.sort_by(|&a, &b| syms[b].freq.cmp(&syms[a].freq).then(a.cmp(&b)));
    for n in config.min_domain.max(1)..=config.max_domain {
        let count = grounding_count(&flat, &syms, n);
        if count > config.grounding_limit {
            return Err(ModelError::GroundingTooLarge {
                count,
                limit: config.grounding_limit,
            });
        }
        let layout = Layout::new(&syms, n);
        let ground = ground(&flat, &syms, &layout);
        let mut order = Vec::with_capacity(layout.total as usize);
        for &i in &by_freq {
            let cells = layout.base[i]..layout.base[i] + cells_of(&syms[i], n);
            order.extend(cells.map(|v| (v, syms[i].kind == Kind::Function)));
        }
        let solved =
            Solver::solve(layout.total, ground, &order, config.conflict_limit).map_err(|()| {
                ModelError::SearchLimit {
                    domain: n,
                    limit: config.conflict_limit,
                }
            })?;
        let Some(values) = solved else {
            continue;
        };
        let mut m = FiniteModel::new(n);
        for (i, s) in syms.iter().enumerate() {
            let cells = n.pow(s.arity as u32) as usize;
            let base = layout.base[i] as usize;
            match s.kind {
                Kind::Predicate => {
                    m.predicates.insert(
                        s.name.clone(),
                        Table {
                            arity: s.arity,
                            values: values[base..base + cells].to_vec(),
                        },
                    );
                }
                Kind::Function => {
                    let vals = (0..cells)
                        .map(|cell| {
                            let at = base + cell * n as usize;
                            (0..n).find(|&e| values[at + e as usize]).unwrap_or(0)
                        })
                        .collect();
                    m.functions.insert(
                        s.name.clone(),
                        Table {
                            arity: s.arity,
                            values: vals,
                        },
                    );
                }
            }
        }
        for c in clauses {
            if m.evaluate_literals(c) != Truth::True {
                let mut text = String::new();
                crate::fol::write_literals(&mut text, c).unwrap();
                return Err(ModelError::SelfCheck(text));
            }
        }
        return Ok(Some(m));
    }
    Ok(None)
}

fn cells_of(s: &Sym, n: u32) -> u32 {
    let cells = n.pow(s.arity as u32);
    if s.kind == Kind::Function {
        cells * n
    } else {
        cells
    }
}
