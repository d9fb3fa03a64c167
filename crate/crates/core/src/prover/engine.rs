//! Connection-tableau search over interned terms with a binding trail.

use std::cell::Cell;
use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::rc::Rc;
use std::time::Instant;

use crate::fol::{Atom, ClauseId, ClauseRole, ClauseSet, Literal, Term, EQUALITY};

use super::proof::{copy_var, ProofObject, Step, Unifier};
use super::{ChoicePoint, ChoiceRecord, Guide, Limits, ProverError, ProverOptions, TraceEntry};

#[derive(Clone, Debug, PartialEq, Eq)]
enum ITerm {
    Var(u32),
    App(u32, Rc<[ITerm]>),
}

#[derive(Clone, Debug)]
struct ILit {
    sign: bool,
    pred: u32,
    args: Rc<[ITerm]>,
}

struct IClause {
    lits: Vec<ILit>,
    var_names: Vec<String>,
}

#[derive(Default)]
struct Interner {
    names: Vec<String>,
    arity: Vec<usize>,
    index: HashMap<String, u32>,
}

impl Interner {
    fn intern(&mut self, name: &str, arity: usize) -> Result<u32, ProverError> {
        if let Some(&i) = self.index.get(name) {
            if self.arity[i as usize] != arity {
                return Err(ProverError::Malformed(format!(
                    "symbol `{name}` used with two arities"
                )));
            }
            return Ok(i);
        }
        let i = self.names.len() as u32;
        self.names.push(name.to_string());
        self.arity.push(arity);
        self.index.insert(name.to_string(), i);
        Ok(i)
    }
}

struct PathNode {
    lit: ILit,
    len: usize,
    id: usize,
    parent: Path,
}

type Path = Option<Rc<PathNode>>;

fn path_len(p: &Path) -> usize {
    p.as_ref().map_or(0, |n| n.len)
}

enum Task {
    Goal {
        lit: ILit,
        path: Path,
    },
    Done {
        cell: Rc<Cell<bool>>,
        lemma: Option<(ILit, Path, usize)>,
    },
}

struct AgendaNode {
    task: Task,
    next: Agenda,
}

type Agenda = Option<Rc<AgendaNode>>;

fn cons(task: Task, next: Agenda) -> Agenda {
    Some(Rc::new(AgendaNode { task, next }))
}

enum IStep {
    Start {
        clause: u32,
    },
    Ext {
        goal: ILit,
        clause: u32,
        lit: u32,
        base: u32,
        consult: Option<usize>,
    },
    Red {
        goal: ILit,
        path_index: usize,
        path_lit: ILit,
    },
    Lemma {
        goal: ILit,
        step: usize,
    },
}

struct Lemma {
    lit: ILit,
    path: Path,
    step: usize,
}

#[derive(Debug)]
pub(crate) enum Stop {
    Inferences,
    Time,
}

pub(crate) struct Outcome {
    pub proof: Option<ProofObject>,
    pub stop: Option<Stop>,
    pub inferences: u64,
    pub depth: usize,
    pub exhausted: bool,
    pub choices: Vec<ChoiceRecord>,
    pub trace: Vec<TraceEntry>,
}

pub(crate) struct Engine<'a> {
    set: &'a ClauseSet,
    funs: Interner,
    preds: Interner,
    eq_pred: Option<u32>,
    clauses: Vec<IClause>,
    index: HashMap<(bool, u32), Vec<(u32, u32)>>,
    bind: Vec<Option<ITerm>>,
    var_origin: Vec<(u32, u32, u32)>,
    trail: Vec<u32>,
    steps: Vec<IStep>,
    lemmas: Vec<Lemma>,
    path_ids: usize,
    inferences: u64,
    limits: &'a Limits,
    options: &'a ProverOptions,
    deadline: Option<Instant>,
    depth_limit: usize,
    hit: bool,
    guide: Option<&'a dyn Guide>,
    choices: Vec<ChoiceRecord>,
    trace: Vec<TraceEntry>,
}

impl<'a> Engine<'a> {
    pub fn new(
        set: &'a ClauseSet,
        limits: &'a Limits,
        options: &'a ProverOptions,
        guide: Option<&'a dyn Guide>,
    ) -> Result<Self, ProverError> {
        let mut e = Engine {
            set,
            funs: Interner::default(),
            preds: Interner::default(),
            eq_pred: None,
            clauses: Vec::with_capacity(set.len()),
            index: HashMap::new(),
            bind: Vec::new(),
            var_origin: Vec::new(),
            trail: Vec::new(),
            steps: Vec::new(),
            lemmas: Vec::new(),
            path_ids: 0,
            inferences: 0,
            limits,
            options,
            deadline: limits.time.map(|t| Instant::now() + t),
            depth_limit: 0,
            hit: false,
            guide,
            choices: Vec::new(),
            trace: Vec::new(),
        };
        for (i, c) in set.iter().enumerate() {
            if c.id.index() != i {
                return Err(ProverError::Malformed(format!(
                    "clause at position {i} has id {}",
                    c.id
                )));
            }
            let mut var_names = Vec::new();
            let mut lits = Vec::with_capacity(c.literals.len());
            for l in &c.literals {
                lits.push(e.intern_lit(l, &mut var_names)?);
            }
            for (li, l) in lits.iter().enumerate() {
                e.index
                    .entry((l.sign, l.pred))
                    .or_default()
                    .push((i as u32, li as u32));
            }
            e.clauses.push(IClause { lits, var_names });
        }
        Ok(e)
    }

    fn intern_term(&mut self, t: &Term, vars: &mut Vec<String>) -> Result<ITerm, ProverError> {
        Ok(match t {
            Term::Var(v) => {
                let i = vars.iter().position(|x| x == v).unwrap_or_else(|| {
                    vars.push(v.clone());
                    vars.len() - 1
                });
                ITerm::Var(i as u32)
            }
            Term::App(f, args) => {
                let id = self.funs.intern(f, args.len())?;
                let args: Result<Vec<ITerm>, ProverError> =
                    args.iter().map(|a| self.intern_term(a, vars)).collect();
                ITerm::App(id, args?.into())
            }
        })
    }

    fn intern_lit(&mut self, l: &Literal, vars: &mut Vec<String>) -> Result<ILit, ProverError> {
        let (name, args): (&str, Vec<&Term>) = match &l.atom {
            Atom::Pred(p, args) => (p.as_str(), args.iter().collect()),
            Atom::Eq(a, b) => (EQUALITY, vec![a, b]),
        };
        let pred = self.preds.intern(name, args.len())?;
        if name == EQUALITY {
            self.eq_pred = Some(pred);
        }
        let args: Result<Vec<ITerm>, ProverError> = args
            .into_iter()
            .map(|a| self.intern_term(a, vars))
            .collect();
        Ok(ILit {
            sign: l.sign,
            pred,
            args: args?.into(),
        })
    }

    fn start_clauses(&self) -> Vec<u32> {
        if let Some(i) = self.set.iter().position(|c| c.literals.is_empty()) {
            return vec![i as u32];
        }
        // negated conjecture first, then the other all-negative clauses so
        // that inconsistent axioms are still refuted
        let mut starts: Vec<u32> = self
            .set
            .iter()
            .filter(|c| c.role == ClauseRole::NegatedConjecture)
            .map(|c| c.id.0)
            .collect();
        starts.extend(
            self.set
                .iter()
                .filter(|c| {
                    c.role != ClauseRole::NegatedConjecture && c.literals.iter().all(|l| !l.sign)
                })
                .map(|c| c.id.0),
        );
        starts
    }

    pub fn run(mut self) -> Outcome {
        let starts = self.start_clauses();
        let mut stop = None;
        let mut proof = None;
        let mut exhausted = false;
        let mut depth = 0;
        'deepen: for limit in 1..=self.limits.max_depth.max(1) {
            depth = limit;
            self.depth_limit = limit;
            self.hit = false;
            for &s in &starts {
                let mark = self.mark();
                let base = self.copy_vars(s, 0);
                self.steps.push(IStep::Start { clause: s });
                let lits = self.clauses[s as usize].lits.clone();
                let mut agenda = None;
                for l in lits.iter().rev() {
                    agenda = cons(
                        Task::Goal {
                            lit: shift_lit(l, base),
                            path: None,
                        },
                        agenda,
                    );
                }
                match self.solve(&agenda) {
                    Ok(true) => {
                        proof = Some(self.extract());
                        break 'deepen;
                    }
                    Ok(false) => {}
                    Err(s) => {
                        stop = Some(s);
                        break 'deepen;
                    }
                }
                self.steps.clear();
                self.undo(mark);
            }
            if !self.hit {
                exhausted = true;
                break;
            }
        }
        Outcome {
            proof,
            stop,
            inferences: self.inferences,
            depth,
            exhausted,
            choices: std::mem::take(&mut self.choices),
            trace: std::mem::take(&mut self.trace),
        }
    }

    fn mark(&self) -> (usize, usize) {
        (self.trail.len(), self.bind.len())
    }

    fn undo(&mut self, (trail, bind): (usize, usize)) {
        for v in self.trail.drain(trail..) {
            self.bind[v as usize] = None;
        }
        self.bind.truncate(bind);
        self.var_origin.truncate(bind);
    }

    fn copy_vars(&mut self, clause: u32, step: usize) -> u32 {
        let base = self.bind.len() as u32;
        let n = self.clauses[clause as usize].var_names.len() as u32;
        for v in 0..n {
            self.bind.push(None);
            self.var_origin.push((clause, v, step as u32));
        }
        base
    }

    fn tick(&mut self) -> Result<(), Stop> {
        if self.inferences >= self.limits.inferences {
            return Err(Stop::Inferences);
        }
        self.inferences += 1;
        if self.inferences & 1023 == 0 {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    return Err(Stop::Time);
                }
            }
        }
        Ok(())
    }

    fn walk<'t>(&'t self, mut t: &'t ITerm) -> &'t ITerm {
        while let ITerm::Var(v) = t {
            match &self.bind[*v as usize] {
                Some(b) => t = b,
                None => break,
            }
        }
        t
    }

    fn occurs(&self, v: u32, t: &ITerm) -> bool {
        match self.walk(t) {
            ITerm::Var(w) => *w == v,
            ITerm::App(_, args) => args.iter().any(|a| self.occurs(v, a)),
        }
    }

    fn unify_args(&mut self, a: &[ITerm], b: &[ITerm]) -> bool {
        let mut stack: Vec<(ITerm, ITerm)> = a.iter().cloned().zip(b.iter().cloned()).collect();
        while let Some((x, y)) = stack.pop() {
            let x = self.walk(&x).clone();
            let y = self.walk(&y).clone();
            match (&x, &y) {
                (ITerm::Var(i), ITerm::Var(j)) if i == j => {}
                (ITerm::Var(i), t) | (t, ITerm::Var(i)) => {
                    if self.occurs(*i, t) {
                        return false;
                    }
                    self.bind[*i as usize] = Some(t.clone());
                    self.trail.push(*i);
                }
                (ITerm::App(f, fa), ITerm::App(g, ga)) => {
                    if f != g || fa.len() != ga.len() {
                        return false;
                    }
                    stack.extend(fa.iter().cloned().zip(ga.iter().cloned()));
                }
            }
        }
        true
    }

    fn term_eq(&self, a: &ITerm, b: &ITerm) -> bool {
        match (self.walk(a), self.walk(b)) {
            (ITerm::Var(i), ITerm::Var(j)) => i == j,
            (ITerm::App(f, fa), ITerm::App(g, ga)) => {
                f == g && fa.iter().zip(ga.iter()).all(|(x, y)| self.term_eq(x, y))
            }
            _ => false,
        }
    }

    fn lit_eq(&self, a: &ILit, b: &ILit) -> bool {
        a.sign == b.sign
            && a.pred == b.pred
            && a.args
                .iter()
                .zip(b.args.iter())
                .all(|(x, y)| self.term_eq(x, y))
    }

    fn solve(&mut self, agenda: &Agenda) -> Result<bool, Stop> {
        let Some(node) = agenda else {
            return Ok(true);
        };
        match &node.task {
            Task::Done { cell, lemma } => {
                cell.set(true);
                let pushed = if let Some((lit, path, step)) = lemma {
                    self.lemmas.push(Lemma {
                        lit: lit.clone(),
                        path: path.clone(),
                        step: *step,
                    });
                    true
                } else {
                    false
                };
                let r = self.solve(&node.next);
                if pushed && !matches!(r, Ok(true)) {
                    self.lemmas.pop();
                }
                r
            }
            Task::Goal { lit, path } => self.solve_goal(lit, path, &node.next),
        }
    }

    fn path_contains(path: &Path, target: &Path) -> bool {
        let Some(t) = target else {
            return true;
        };
        let mut cur = path;
        while let Some(n) = cur {
            if n.id == t.id {
                return true;
            }
            cur = &n.parent;
        }
        false
    }

    fn done_task(&self, cell: &Rc<Cell<bool>>, goal: &ILit, path: &Path) -> Option<Task> {
        if !self.options.lemmata && !self.options.restricted_backtracking {
            return None;
        }
        let lemma = self
            .options
            .lemmata
            .then(|| (goal.clone(), path.clone(), self.steps.len() - 1));
        Some(Task::Done {
            cell: cell.clone(),
            lemma,
        })
    }

    fn solve_goal(&mut self, goal: &ILit, path: &Path, rest: &Agenda) -> Result<bool, Stop> {
        let mut cur = path;
        while let Some(n) = cur {
            if self.lit_eq(goal, &n.lit) {
                return Ok(false);
            }
            cur = &n.parent;
        }
        let closed = Rc::new(Cell::new(false));
        let cut = self.options.restricted_backtracking;

        if self.options.lemmata {
            let found = self
                .lemmas
                .iter()
                .rev()
                .find(|l| Self::path_contains(path, &l.path) && self.lit_eq(goal, &l.lit))
                .map(|l| l.step);
            if let Some(step) = found {
                self.steps.push(IStep::Lemma {
                    goal: goal.clone(),
                    step,
                });
                if self.solve(rest)? {
                    return Ok(true);
                }
                self.steps.pop();
                return Ok(false);
            }
        }

        let mut nodes = Vec::new();
        let mut cur = path;
        while let Some(n) = cur {
            nodes.push(n.clone());
            cur = &n.parent;
        }
        // most recent path literal first; indices count from the root
        let depth = nodes.len();
        for (k, n) in nodes.iter().enumerate() {
            if n.lit.sign == goal.sign || n.lit.pred != goal.pred {
                continue;
            }
            self.tick()?;
            let mark = self.mark();
            if self.unify_args(&goal.args, &n.lit.args) {
                self.steps.push(IStep::Red {
                    goal: goal.clone(),
                    path_index: depth - 1 - k,
                    path_lit: n.lit.clone(),
                });
                let next = match self.done_task(&closed, goal, path) {
                    Some(t) => cons(t, rest.clone()),
                    None => rest.clone(),
                };
                if self.solve(&next)? {
                    return Ok(true);
                }
                self.steps.pop();
            }
            self.undo(mark);
            if cut && closed.get() {
                return Ok(false);
            }
        }

        let Some(cands) = self.index.get(&(!goal.sign, goal.pred)).cloned() else {
            return Ok(false);
        };
        let (cands, consult) = self.order_candidates(cands, goal, path);
        let plen = path_len(path);
        for (c, li) in cands {
            self.tick()?;
            let mark = self.mark();
            let step = self.steps.len();
            let base = self.copy_vars(c, step);
            let clause_len = self.clauses[c as usize].lits.len();
            let target = shift_lit(&self.clauses[c as usize].lits[li as usize], base);
            if let Some(k) = consult {
                let rec = &mut self.choices[k];
                let id = ClauseId(c);
                if !rec.tried.contains(&id) {
                    rec.tried.push(id);
                }
            }
            if self.unify_args(&goal.args, &target.args) {
                if clause_len > 1 && plen >= self.depth_limit {
                    self.hit = true;
                } else {
                    self.steps.push(IStep::Ext {
                        goal: goal.clone(),
                        clause: c,
                        lit: li,
                        base,
                        consult,
                    });
                    self.path_ids += 1;
                    let new_path = Some(Rc::new(PathNode {
                        lit: goal.clone(),
                        len: plen + 1,
                        id: self.path_ids,
                        parent: path.clone(),
                    }));
                    let mut next = match self.done_task(&closed, goal, path) {
                        Some(t) => cons(t, rest.clone()),
                        None => rest.clone(),
                    };
                    let lits = &self.clauses[c as usize].lits;
                    for (j, l) in lits.iter().enumerate().rev() {
                        if j != li as usize {
                            next = cons(
                                Task::Goal {
                                    lit: shift_lit(l, base),
                                    path: new_path.clone(),
                                },
                                next,
                            );
                        }
                    }
                    if self.solve(&next)? {
                        return Ok(true);
                    }
                    self.steps.pop();
                }
            }
            self.undo(mark);
            if cut && closed.get() {
                return Ok(false);
            }
        }
        Ok(false)
    }

    fn order_candidates(
        &mut self,
        cands: Vec<(u32, u32)>,
        goal: &ILit,
        path: &Path,
    ) -> (Vec<(u32, u32)>, Option<usize>) {
        let mut ids: Vec<ClauseId> = Vec::new();
        for &(c, _) in &cands {
            if ids.last() != Some(&ClauseId(c)) && !ids.contains(&ClauseId(c)) {
                ids.push(ClauseId(c));
            }
        }
        let depth = path_len(path) + 1;
        let consulted = self.guide.is_some_and(|g| g.wants(depth, ids.len()));
        if self.options.trace {
            let branch = self.branch_literals(path);
            self.trace.push(TraceEntry {
                depth,
                candidates: ids.len(),
                consulted,
                branch,
                goal: self.to_literal(goal),
            });
        }
        if !consulted {
            return (cands, None);
        }
        let guide = self.guide.unwrap();
        let branch = self.branch_literals(path);
        let goal_lit = self.to_literal(goal);
        let point = ChoicePoint {
            branch: &branch,
            goal: &goal_lit,
            depth,
            candidates: &ids,
        };
        let advice = catch_unwind(AssertUnwindSafe(|| guide.advise(&point)));
        let order = match advice {
            Ok(Ok(order)) if is_permutation(&order, &ids) => order,
            Ok(Ok(_)) => {
                log::warn!("advisor returned a non-permutation; keeping input order");
                ids.clone()
            }
            Ok(Err(e)) => {
                log::warn!("advisor failed: {e}; keeping input order");
                ids.clone()
            }
            Err(_) => {
                log::warn!("advisor panicked; keeping input order");
                ids.clone()
            }
        };
        let k = self.choices.len();
        self.choices.push(ChoiceRecord {
            branch,
            goal: goal_lit,
            depth,
            candidates: ids,
            advised: order.clone(),
            tried: Vec::new(),
            closed_with: None,
        });
        let mut out = Vec::with_capacity(cands.len());
        for id in order {
            out.extend(cands.iter().filter(|(c, _)| *c == id.0));
        }
        (out, Some(k))
    }

    fn branch_literals(&self, path: &Path) -> Vec<Literal> {
        let mut out = Vec::new();
        let mut cur = path;
        while let Some(n) = cur {
            out.push(self.to_literal(&n.lit));
            cur = &n.parent;
        }
        out.reverse();
        out
    }

    fn var_name(&self, v: u32) -> String {
        let (c, local, step) = self.var_origin[v as usize];
        copy_var(
            &self.clauses[c as usize].var_names[local as usize],
            step as usize,
        )
    }

    fn to_term(&self, t: &ITerm) -> Term {
        match self.walk(t) {
            ITerm::Var(v) => Term::Var(self.var_name(*v)),
            ITerm::App(f, args) => Term::App(
                self.funs.names[*f as usize].clone(),
                args.iter().map(|a| self.to_term(a)).collect(),
            ),
        }
    }

    fn to_literal(&self, l: &ILit) -> Literal {
        let args: Vec<Term> = l.args.iter().map(|a| self.to_term(a)).collect();
        let atom = if Some(l.pred) == self.eq_pred && args.len() == 2 {
            let mut it = args.into_iter();
            Atom::Eq(it.next().unwrap(), it.next().unwrap())
        } else {
            Atom::Pred(self.preds.names[l.pred as usize].clone(), args)
        };
        Literal { sign: l.sign, atom }
    }

    fn collect_vars(&self, t: &ITerm, out: &mut Vec<u32>) {
        match t {
            ITerm::Var(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            ITerm::App(_, args) => args.iter().for_each(|a| self.collect_vars(a, out)),
        }
    }

    fn unifier(&self, vars: &[u32]) -> Unifier {
        vars.iter()
            .filter_map(|&v| {
                let t = self.to_term(&ITerm::Var(v));
                let name = self.var_name(v);
                match &t {
                    Term::Var(w) if *w == name => None,
                    _ => Some((name, t)),
                }
            })
            .collect()
    }

    fn extract(&mut self) -> ProofObject {
        let mut steps = Vec::with_capacity(self.steps.len());
        let mut used = std::collections::BTreeSet::new();
        for s in &self.steps {
            match s {
                IStep::Start { clause } => {
                    let c = &self.set.clauses[*clause as usize];
                    if c.is_premise() {
                        used.insert(c.origin.clone());
                    }
                    steps.push(Step::Start {
                        clause: ClauseId(*clause),
                    });
                }
                IStep::Ext {
                    goal,
                    clause,
                    lit,
                    base,
                    consult,
                } => {
                    let c = &self.set.clauses[*clause as usize];
                    if c.is_premise() {
                        used.insert(c.origin.clone());
                    }
                    let mut vars = Vec::new();
                    goal.args
                        .iter()
                        .for_each(|a| self.collect_vars(a, &mut vars));
                    for v in 0..self.clauses[*clause as usize].var_names.len() as u32 {
                        if !vars.contains(&(base + v)) {
                            vars.push(base + v);
                        }
                    }
                    if let Some(k) = consult {
                        self.choices[*k].closed_with = Some(ClauseId(*clause));
                    }
                    steps.push(Step::Extension {
                        goal: self.to_literal(goal),
                        clause: ClauseId(*clause),
                        literal: *lit as usize,
                        unifier: self.unifier(&vars),
                    });
                }
                IStep::Red {
                    goal,
                    path_index,
                    path_lit,
                } => {
                    let mut vars = Vec::new();
                    goal.args
                        .iter()
                        .for_each(|a| self.collect_vars(a, &mut vars));
                    path_lit
                        .args
                        .iter()
                        .for_each(|a| self.collect_vars(a, &mut vars));
                    steps.push(Step::Reduction {
                        goal: self.to_literal(goal),
                        path_index: *path_index,
                        unifier: self.unifier(&vars),
                    });
                }
                IStep::Lemma { goal, step } => steps.push(Step::Lemma {
                    goal: self.to_literal(goal),
                    step: *step,
                }),
            }
        }
        ProofObject {
            steps,
            used_premises: used,
        }
    }
}

fn shift_term(t: &ITerm, base: u32) -> ITerm {
    match t {
        ITerm::Var(v) => ITerm::Var(v + base),
        ITerm::App(f, args) if args.is_empty() => ITerm::App(*f, args.clone()),
        ITerm::App(f, args) => ITerm::App(*f, args.iter().map(|a| shift_term(a, base)).collect()),
    }
}

fn shift_lit(l: &ILit, base: u32) -> ILit {
    ILit {
        sign: l.sign,
        pred: l.pred,
        args: l.args.iter().map(|a| shift_term(a, base)).collect(),
    }
}

fn is_permutation(order: &[ClauseId], ids: &[ClauseId]) -> bool {
    if order.len() != ids.len() {
        return false;
    }
    let mut a = order.to_vec();
    let mut b = ids.to_vec();
    a.sort();
    b.sort();
    a == b
}
