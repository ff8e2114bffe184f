//! Calculus-tagged terms with per-occurrence capability labels.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::Error;

/// The six supported calculi.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Calculus {
    #[serde(rename = "ma")]
    Ma,
    #[serde(rename = "sa")]
    Sa,
    #[serde(rename = "pi-mix")]
    PiMix,
    #[serde(rename = "pi-sep")]
    PiSep,
    #[serde(rename = "pi-asyn")]
    PiAsyn,
    #[serde(rename = "join")]
    Join,
}

impl Calculus {
    pub const ALL: [Calculus; 6] =
        [Calculus::Ma, Calculus::Sa, Calculus::PiMix, Calculus::PiSep, Calculus::PiAsyn, Calculus::Join];

    pub fn id(self) -> &'static str {
        match self {
            Calculus::Ma => "ma",
            Calculus::Sa => "sa",
            Calculus::PiMix => "pi-mix",
            Calculus::PiSep => "pi-sep",
            Calculus::PiAsyn => "pi-asyn",
            Calculus::Join => "join",
        }
    }

    pub fn from_id(id: &str) -> Option<Calculus> {
        Calculus::ALL.into_iter().find(|c| c.id() == id)
    }

    pub fn is_ambient(self) -> bool {
        matches!(self, Calculus::Ma | Calculus::Sa)
    }

    pub fn is_pi(self) -> bool {
        matches!(self, Calculus::PiMix | Calculus::PiSep | Calculus::PiAsyn)
    }
}

impl fmt::Display for Calculus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// A name. User-written names have `fresh == 0`; generated names never do,
/// so the two can never collide.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name {
    pub text: Arc<str>,
    pub fresh: u32,
}

impl Name {
    pub fn new(text: &str) -> Name {
        Name { text: Arc::from(text), fresh: 0 }
    }

    pub fn with_fresh(text: &str, fresh: u32) -> Name {
        Name { text: Arc::from(text), fresh }
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.fresh == 0 {
            f.write_str(&self.text)
        } else {
            write!(f, "{}'{}", self.text, self.fresh)
        }
    }
}

/// Copy-path elements at or above this bit mark copies created speculatively
/// while enumerating the steps of one state (see `semantics`).
pub const FRESH_COPY: u32 = 1 << 31;

/// Identity of one syntactic capability occurrence.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Label {
    pub base: u32,
    pub path: Vec<u32>,
}

impl Label {
    pub fn new(base: u32) -> Label {
        Label { base, path: Vec::new() }
    }

    pub fn extended(&self, k: u32) -> Label {
        let mut path = self.path.clone();
        path.push(k);
        Label { base: self.base, path }
    }

    /// True if any path element refers to a speculative copy.
    pub fn is_fresh_copy(&self) -> bool {
        self.path.iter().any(|&p| p & FRESH_COPY != 0)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.base)?;
        for &p in &self.path {
            if p & FRESH_COPY != 0 {
                write!(f, ".*{}", p & !FRESH_COPY)?;
            } else {
                write!(f, ".{p}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CapKind {
    In,
    Out,
    Open,
    CoIn,
    CoOut,
    CoOpen,
    Ambient,
    Sum,
    OutputAtom,
    InputPrefix,
    Tau,
    JoinMessage,
    JoinDefinition,
    Replication,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cap {
    In,
    Out,
    Open,
    CoIn,
    CoOut,
    CoOpen,
}

impl Cap {
    pub const ALL: [Cap; 6] = [Cap::In, Cap::Out, Cap::Open, Cap::CoIn, Cap::CoOut, Cap::CoOpen];

    pub fn keyword(self) -> &'static str {
        match self {
            Cap::In => "in",
            Cap::Out => "out",
            Cap::Open => "open",
            Cap::CoIn => "co-in",
            Cap::CoOut => "co-out",
            Cap::CoOpen => "co-open",
        }
    }

    pub fn is_co(self) -> bool {
        matches!(self, Cap::CoIn | Cap::CoOut | Cap::CoOpen)
    }

    pub fn kind(self) -> CapKind {
        match self {
            Cap::In => CapKind::In,
            Cap::Out => CapKind::Out,
            Cap::Open => CapKind::Open,
            Cap::CoIn => CapKind::CoIn,
            Cap::CoOut => CapKind::CoOut,
            Cap::CoOpen => CapKind::CoOpen,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Guard {
    /// `chan!<obj>`; `obj == None` is the objectless `chan!<>`.
    Out {
        chan: Name,
        obj: Option<Name>,
    },
    /// `chan?(var)`; `var` is bound in the continuation.
    In {
        chan: Name,
        var: Option<Name>,
    },
    Tau,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Branch {
    pub guard: Guard,
    pub cont: Proc,
}

/// One join pattern position `chan<var>`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pattern {
    pub chan: Name,
    pub var: Option<Name>,
}

/// `J |> body`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub patterns: Vec<Pattern>,
    pub body: Proc,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Proc {
    Nil,
    Success,
    Par(Vec<Proc>),
    Res(Name, Box<Proc>),
    /// `!body`; `copies` counts the copies already split off, so that copy
    /// labels stay unique along an execution.
    Rep {
        label: Label,
        copies: u32,
        body: Box<Proc>,
    },
    Amb {
        label: Label,
        name: Name,
        body: Box<Proc>,
    },
    Act {
        label: Label,
        cap: Cap,
        target: Name,
        cont: Box<Proc>,
    },
    /// A guarded sum; pi prefixes are one-branch sums.
    Sum {
        label: Label,
        branches: Vec<Branch>,
    },
    /// Join message `chan<arg>`.
    Msg {
        label: Label,
        chan: Name,
        arg: Option<Name>,
    },
    /// `def rules in body`; `copies` counts rule-body instantiations.
    Def {
        label: Label,
        copies: u32,
        rules: Vec<Rule>,
        body: Box<Proc>,
    },
}

/// A term together with the calculus whose grammar it follows.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    pub calculus: Calculus,
    pub proc: Proc,
}

impl Term {
    pub fn new(calculus: Calculus, proc: Proc) -> Term {
        Term { calculus, proc }
    }
}

// ---------------------------------------------------------------------------
// builders

impl Proc {
    pub fn par(mut items: Vec<Proc>) -> Proc {
        match items.len() {
            0 => Proc::Nil,
            1 => items.pop().unwrap(),
            _ => Proc::Par(items),
        }
    }

    pub fn res(name: Name, body: Proc) -> Proc {
        Proc::Res(name, Box::new(body))
    }

    pub fn rep(body: Proc) -> Proc {
        Proc::Rep { label: Label::default(), copies: 0, body: Box::new(body) }
    }

    pub fn amb(name: Name, body: Proc) -> Proc {
        Proc::Amb { label: Label::default(), name, body: Box::new(body) }
    }

    pub fn act(cap: Cap, target: Name, cont: Proc) -> Proc {
        Proc::Act { label: Label::default(), cap, target, cont: Box::new(cont) }
    }

    pub fn sum(branches: Vec<Branch>) -> Proc {
        Proc::Sum { label: Label::default(), branches }
    }

    pub fn prefix(guard: Guard, cont: Proc) -> Proc {
        Proc::sum(vec![Branch { guard, cont }])
    }

    pub fn msg(chan: Name, arg: Option<Name>) -> Proc {
        Proc::Msg { label: Label::default(), chan, arg }
    }

    pub fn def(rules: Vec<Rule>, body: Proc) -> Proc {
        Proc::Def { label: Label::default(), copies: 0, rules, body: Box::new(body) }
    }

    pub fn label(&self) -> Option<&Label> {
        match self {
            Proc::Rep { label, .. }
            | Proc::Amb { label, .. }
            | Proc::Act { label, .. }
            | Proc::Sum { label, .. }
            | Proc::Msg { label, .. }
            | Proc::Def { label, .. } => Some(label),
            _ => None,
        }
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Proc::Nil)
    }
}

impl Rule {
    /// Names defined by this rule's join pattern.
    pub fn defined(&self) -> impl Iterator<Item = &Name> {
        self.patterns.iter().map(|p| &p.chan)
    }

    /// Received variables, bound in the rule body.
    pub fn received(&self) -> impl Iterator<Item = &Name> {
        self.patterns.iter().filter_map(|p| p.var.as_ref())
    }
}

/// Defined names of a definition block, in order of first occurrence.
pub fn defined_names(rules: &[Rule]) -> Vec<Name> {
    let mut out: Vec<Name> = Vec::new();
    for r in rules {
        for n in r.defined() {
            if !out.contains(n) {
                out.push(n.clone());
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// names

pub fn free_names(t: &Term) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    proc_free_names(&t.proc, &mut Vec::new(), &mut out);
    out
}

pub fn proc_free_names(p: &Proc, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
    let add = |n: &Name, bound: &Vec<Name>, out: &mut BTreeSet<Name>| {
        if !bound.contains(n) {
            out.insert(n.clone());
        }
    };
    match p {
        Proc::Nil | Proc::Success => {}
        Proc::Par(ps) => ps.iter().for_each(|q| proc_free_names(q, bound, out)),
        Proc::Res(n, body) => {
            bound.push(n.clone());
            proc_free_names(body, bound, out);
            bound.pop();
        }
        Proc::Rep { body, .. } => proc_free_names(body, bound, out),
        Proc::Amb { name, body, .. } => {
            add(name, bound, out);
            proc_free_names(body, bound, out);
        }
        Proc::Act { target, cont, .. } => {
            add(target, bound, out);
            proc_free_names(cont, bound, out);
        }
        Proc::Sum { branches, .. } => {
            for b in branches {
                match &b.guard {
                    Guard::Out { chan, obj } => {
                        add(chan, bound, out);
                        if let Some(o) = obj {
                            add(o, bound, out);
                        }
                        proc_free_names(&b.cont, bound, out);
                    }
                    Guard::In { chan, var } => {
                        add(chan, bound, out);
                        let pushed = var.is_some();
                        if let Some(v) = var {
                            bound.push(v.clone());
                        }
                        proc_free_names(&b.cont, bound, out);
                        if pushed {
                            bound.pop();
                        }
                    }
                    Guard::Tau => proc_free_names(&b.cont, bound, out),
                }
            }
        }
        Proc::Msg { chan, arg, .. } => {
            add(chan, bound, out);
            if let Some(a) = arg {
                add(a, bound, out);
            }
        }
        Proc::Def { rules, body, .. } => {
            let dv = defined_names(rules);
            let depth = bound.len();
            bound.extend(dv);
            for r in rules {
                let inner = bound.len();
                bound.extend(r.received().cloned());
                proc_free_names(&r.body, bound, out);
                bound.truncate(inner);
            }
            proc_free_names(body, bound, out);
            bound.truncate(depth);
        }
    }
}

/// Every name occurring in the term, free or bound.
pub fn all_names(p: &Proc, out: &mut BTreeSet<Name>) {
    match p {
        Proc::Nil | Proc::Success => {}
        Proc::Par(ps) => ps.iter().for_each(|q| all_names(q, out)),
        Proc::Res(n, body) => {
            out.insert(n.clone());
            all_names(body, out);
        }
        Proc::Rep { body, .. } => all_names(body, out),
        Proc::Amb { name, body, .. } => {
            out.insert(name.clone());
            all_names(body, out);
        }
        Proc::Act { target, cont, .. } => {
            out.insert(target.clone());
            all_names(cont, out);
        }
        Proc::Sum { branches, .. } => {
            for b in branches {
                match &b.guard {
                    Guard::Out { chan, obj } => {
                        out.insert(chan.clone());
                        out.extend(obj.iter().cloned());
                    }
                    Guard::In { chan, var } => {
                        out.insert(chan.clone());
                        out.extend(var.iter().cloned());
                    }
                    Guard::Tau => {}
                }
                all_names(&b.cont, out);
            }
        }
        Proc::Msg { chan, arg, .. } => {
            out.insert(chan.clone());
            out.extend(arg.iter().cloned());
        }
        Proc::Def { rules, body, .. } => {
            for r in rules {
                for pat in &r.patterns {
                    out.insert(pat.chan.clone());
                    out.extend(pat.var.iter().cloned());
                }
                all_names(&r.body, out);
            }
            all_names(body, out);
        }
    }
}

/// Source of generated names that cannot clash with anything in a given term.
#[derive(Clone, Debug)]
pub struct NameSupply {
    next: u32,
}

impl NameSupply {
    pub fn for_proc(p: &Proc) -> NameSupply {
        let mut names = BTreeSet::new();
        all_names(p, &mut names);
        NameSupply::above(names.iter())
    }

    pub fn above<'a>(names: impl Iterator<Item = &'a Name>) -> NameSupply {
        let next = names.map(|n| n.fresh).max().unwrap_or(0) + 1;
        NameSupply { next }
    }

    pub fn bump_past(&mut self, n: &Name) {
        self.next = self.next.max(n.fresh + 1);
    }

    pub fn fresh(&mut self, like: &Name) -> Name {
        let n = Name { text: like.text.clone(), fresh: self.next };
        self.next += 1;
        n
    }
}

// ---------------------------------------------------------------------------
// alpha equivalence

/// Structural equality up to consistent renaming of bound names; labels and
/// replication/definition counters are ignored.
pub fn alpha_eq(t1: &Term, t2: &Term) -> Result<bool, Error> {
    if t1.calculus != t2.calculus {
        return Err(Error::CalculusMismatch(t1.calculus, t2.calculus));
    }
    Ok(proc_alpha_eq(&t1.proc, &t2.proc))
}

pub fn proc_alpha_eq(p: &Proc, q: &Proc) -> bool {
    let mut env = AlphaEnv::default();
    alpha(p, q, &mut env)
}

#[derive(Default)]
struct AlphaEnv {
    left: Vec<Name>,
    right: Vec<Name>,
}

impl AlphaEnv {
    fn same(&self, a: &Name, b: &Name) -> bool {
        let i = self.left.iter().rposition(|n| n == a);
        let j = self.right.iter().rposition(|n| n == b);
        match (i, j) {
            (Some(i), Some(j)) => i == j,
            (None, None) => a == b,
            _ => false,
        }
    }

    fn same_opt(&self, a: &Option<Name>, b: &Option<Name>) -> bool {
        match (a, b) {
            (Some(a), Some(b)) => self.same(a, b),
            (None, None) => true,
            _ => false,
        }
    }

    fn push(&mut self, a: &Name, b: &Name) {
        self.left.push(a.clone());
        self.right.push(b.clone());
    }

    fn truncate(&mut self, n: usize) {
        self.left.truncate(n);
        self.right.truncate(n);
    }
}

fn alpha(p: &Proc, q: &Proc, env: &mut AlphaEnv) -> bool {
    match (p, q) {
        (Proc::Nil, Proc::Nil) | (Proc::Success, Proc::Success) => true,
        (Proc::Par(a), Proc::Par(b)) => a.len() == b.len() && a.iter().zip(b).all(|(x, y)| alpha(x, y, env)),
        (Proc::Res(n, a), Proc::Res(m, b)) => {
            let d = env.left.len();
            env.push(n, m);
            let r = alpha(a, b, env);
            env.truncate(d);
            r
        }
        (Proc::Rep { body: a, .. }, Proc::Rep { body: b, .. }) => alpha(a, b, env),
        (Proc::Amb { name: n, body: a, .. }, Proc::Amb { name: m, body: b, .. }) => env.same(n, m) && alpha(a, b, env),
        (Proc::Act { cap: c1, target: n, cont: a, .. }, Proc::Act { cap: c2, target: m, cont: b, .. }) => {
            c1 == c2 && env.same(n, m) && alpha(a, b, env)
        }
        (Proc::Sum { branches: a, .. }, Proc::Sum { branches: b, .. }) => {
            a.len() == b.len()
                && a.iter().zip(b).all(|(x, y)| match (&x.guard, &y.guard) {
                    (Guard::Out { chan: c1, obj: o1 }, Guard::Out { chan: c2, obj: o2 }) => {
                        env.same(c1, c2) && env.same_opt(o1, o2) && alpha(&x.cont, &y.cont, env)
                    }
                    (Guard::In { chan: c1, var: v1 }, Guard::In { chan: c2, var: v2 }) => {
                        if !env.same(c1, c2) {
                            return false;
                        }
                        let d = env.left.len();
                        match (v1, v2) {
                            (Some(v1), Some(v2)) => env.push(v1, v2),
                            (None, None) => {}
                            _ => return false,
                        }
                        let r = alpha(&x.cont, &y.cont, env);
                        env.truncate(d);
                        r
                    }
                    (Guard::Tau, Guard::Tau) => alpha(&x.cont, &y.cont, env),
                    _ => false,
                })
        }
        (Proc::Msg { chan: c1, arg: a1, .. }, Proc::Msg { chan: c2, arg: a2, .. }) => {
            env.same(c1, c2) && env.same_opt(a1, a2)
        }
        (Proc::Def { rules: r1, body: b1, .. }, Proc::Def { rules: r2, body: b2, .. }) => {
            if r1.len() != r2.len() {
                return false;
            }
            let d1 = defined_names(r1);
            let d2 = defined_names(r2);
            if d1.len() != d2.len() {
                return false;
            }
            let depth = env.left.len();
            for (a, b) in d1.iter().zip(&d2) {
                env.push(a, b);
            }
            let mut ok = true;
            for (x, y) in r1.iter().zip(r2) {
                if x.patterns.len() != y.patterns.len() {
                    ok = false;
                    break;
                }
                let inner = env.left.len();
                for (pa, pb) in x.patterns.iter().zip(&y.patterns) {
                    if !env.same(&pa.chan, &pb.chan) {
                        ok = false;
                    }
                    match (&pa.var, &pb.var) {
                        (Some(a), Some(b)) => env.push(a, b),
                        (None, None) => {}
                        _ => ok = false,
                    }
                }
                ok = ok && alpha(&x.body, &y.body, env);
                env.truncate(inner);
                if !ok {
                    break;
                }
            }
            ok = ok && alpha(b1, b2, env);
            env.truncate(depth);
            ok
        }
        _ => false,
    }
}

// ---------------------------------------------------------------------------
// substitution and renaming

/// Capture-avoiding substitution of free names.
pub fn substitute(t: &Term, mapping: &HashMap<Name, Name>) -> Term {
    let mut names = BTreeSet::new();
    all_names(&t.proc, &mut names);
    let mut supply = NameSupply::above(names.iter().chain(mapping.values()));
    Term::new(t.calculus, subst_proc(&t.proc, mapping, &mut supply))
}

/// Substitution with an externally managed name supply.
pub fn subst_proc(p: &Proc, mapping: &HashMap<Name, Name>, supply: &mut NameSupply) -> Proc {
    if mapping.is_empty() {
        return p.clone();
    }
    let map = |n: &Name| mapping.get(n).cloned().unwrap_or_else(|| n.clone());
    match p {
        Proc::Nil => Proc::Nil,
        Proc::Success => Proc::Success,
        Proc::Par(ps) => Proc::Par(ps.iter().map(|q| subst_proc(q, mapping, supply)).collect()),
        Proc::Res(n, body) => {
            let (n2, inner) = enter_binder(n, mapping, body, supply);
            Proc::Res(n2, Box::new(subst_proc(body, &inner, supply)))
        }
        Proc::Rep { label, copies, body } => {
            Proc::Rep { label: label.clone(), copies: *copies, body: Box::new(subst_proc(body, mapping, supply)) }
        }
        Proc::Amb { label, name, body } => {
            Proc::Amb { label: label.clone(), name: map(name), body: Box::new(subst_proc(body, mapping, supply)) }
        }
        Proc::Act { label, cap, target, cont } => Proc::Act {
            label: label.clone(),
            cap: *cap,
            target: map(target),
            cont: Box::new(subst_proc(cont, mapping, supply)),
        },
        Proc::Sum { label, branches } => Proc::Sum {
            label: label.clone(),
            branches: branches
                .iter()
                .map(|b| match &b.guard {
                    Guard::Out { chan, obj } => Branch {
                        guard: Guard::Out { chan: map(chan), obj: obj.as_ref().map(map) },
                        cont: subst_proc(&b.cont, mapping, supply),
                    },
                    Guard::In { chan, var: Some(v) } => {
                        let (v2, inner) = enter_binder(v, mapping, &b.cont, supply);
                        Branch {
                            guard: Guard::In { chan: map(chan), var: Some(v2) },
                            cont: subst_proc(&b.cont, &inner, supply),
                        }
                    }
                    Guard::In { chan, var: None } => Branch {
                        guard: Guard::In { chan: map(chan), var: None },
                        cont: subst_proc(&b.cont, mapping, supply),
                    },
                    Guard::Tau => Branch { guard: Guard::Tau, cont: subst_proc(&b.cont, mapping, supply) },
                })
                .collect(),
        },
        Proc::Msg { label, chan, arg } => {
            Proc::Msg { label: label.clone(), chan: map(chan), arg: arg.as_ref().map(map) }
        }
        Proc::Def { label, copies, rules, body } => {
            // defined names scope over the rules and the body
            let mut inner: HashMap<Name, Name> = mapping.clone();
            let mut renamed: HashMap<Name, Name> = HashMap::new();
            let range: BTreeSet<&Name> = mapping.values().collect();
            for d in defined_names(rules) {
                inner.remove(&d);
                if range.contains(&d) {
                    let f = supply.fresh(&d);
                    renamed.insert(d.clone(), f.clone());
                    inner.insert(d, f);
                }
            }
            let rename_dv = |n: &Name| renamed.get(n).cloned().unwrap_or_else(|| n.clone());
            let rules = rules
                .iter()
                .map(|r| {
                    let mut rmap = inner.clone();
                    let mut pats = Vec::new();
                    let range: BTreeSet<Name> = rmap.values().cloned().collect();
                    for pat in &r.patterns {
                        let var = pat.var.as_ref().map(|v| {
                            rmap.remove(v);
                            if range.contains(v) {
                                let f = supply.fresh(v);
                                rmap.insert(v.clone(), f.clone());
                                f
                            } else {
                                v.clone()
                            }
                        });
                        pats.push(Pattern { chan: rename_dv(&pat.chan), var });
                    }
                    Rule { patterns: pats, body: subst_proc(&r.body, &rmap, supply) }
                })
                .collect();
            Proc::Def { label: label.clone(), copies: *copies, rules, body: Box::new(subst_proc(body, &inner, supply)) }
        }
    }
}

/// Prepares the mapping for a binder `n` over `body`: shadowed entries are
/// dropped and `n` is renamed when it would capture a substituted name.
fn enter_binder(
    n: &Name,
    mapping: &HashMap<Name, Name>,
    body: &Proc,
    supply: &mut NameSupply,
) -> (Name, HashMap<Name, Name>) {
    let mut inner = mapping.clone();
    inner.remove(n);
    let captures = inner.values().any(|v| v == n) && {
        let mut fv = BTreeSet::new();
        proc_free_names(body, &mut Vec::new(), &mut fv);
        inner.iter().any(|(k, v)| v == n && fv.contains(k))
    };
    if captures {
        let f = supply.fresh(n);
        inner.insert(n.clone(), f.clone());
        (f, inner)
    } else {
        (n.clone(), inner)
    }
}

/// Renames every binder of `p` to a name from `supply`. Used to make copies
/// (replication unfolding, rule-body instantiation) binder-disjoint.
pub fn freshen_binders(p: &Proc, supply: &mut NameSupply) -> Proc {
    let mut map: HashMap<Name, Name> = HashMap::new();
    freshen(p, &mut map, supply)
}

fn freshen(p: &Proc, map: &mut HashMap<Name, Name>, supply: &mut NameSupply) -> Proc {
    let get = |n: &Name, map: &HashMap<Name, Name>| map.get(n).cloned().unwrap_or_else(|| n.clone());
    match p {
        Proc::Nil => Proc::Nil,
        Proc::Success => Proc::Success,
        Proc::Par(ps) => Proc::Par(ps.iter().map(|q| freshen(q, map, supply)).collect()),
        Proc::Res(n, body) => {
            let f = supply.fresh(n);
            let old = map.insert(n.clone(), f.clone());
            let b = freshen(body, map, supply);
            restore(map, n, old);
            Proc::Res(f, Box::new(b))
        }
        Proc::Rep { label, copies, body } => {
            Proc::Rep { label: label.clone(), copies: *copies, body: Box::new(freshen(body, map, supply)) }
        }
        Proc::Amb { label, name, body } => {
            Proc::Amb { label: label.clone(), name: get(name, map), body: Box::new(freshen(body, map, supply)) }
        }
        Proc::Act { label, cap, target, cont } => Proc::Act {
            label: label.clone(),
            cap: *cap,
            target: get(target, map),
            cont: Box::new(freshen(cont, map, supply)),
        },
        Proc::Sum { label, branches } => Proc::Sum {
            label: label.clone(),
            branches: branches
                .iter()
                .map(|b| match &b.guard {
                    Guard::Out { chan, obj } => Branch {
                        guard: Guard::Out { chan: get(chan, map), obj: obj.as_ref().map(|o| get(o, map)) },
                        cont: freshen(&b.cont, map, supply),
                    },
                    Guard::In { chan, var } => {
                        let chan = get(chan, map);
                        match var {
                            Some(v) => {
                                let f = supply.fresh(v);
                                let old = map.insert(v.clone(), f.clone());
                                let cont = freshen(&b.cont, map, supply);
                                restore(map, v, old);
                                Branch { guard: Guard::In { chan, var: Some(f) }, cont }
                            }
                            None => {
                                Branch { guard: Guard::In { chan, var: None }, cont: freshen(&b.cont, map, supply) }
                            }
                        }
                    }
                    Guard::Tau => Branch { guard: Guard::Tau, cont: freshen(&b.cont, map, supply) },
                })
                .collect(),
        },
        Proc::Msg { label, chan, arg } => {
            Proc::Msg { label: label.clone(), chan: get(chan, map), arg: arg.as_ref().map(|a| get(a, map)) }
        }
        Proc::Def { label, copies, rules, body } => {
            let dv = defined_names(rules);
            let mut saved = Vec::new();
            for d in &dv {
                let f = supply.fresh(d);
                saved.push((d.clone(), map.insert(d.clone(), f)));
            }
            let rules = rules
                .iter()
                .map(|r| {
                    let mut inner_saved = Vec::new();
                    let mut pats = Vec::new();
                    for pat in &r.patterns {
                        let chan = get(&pat.chan, map);
                        let var = pat.var.as_ref().map(|v| {
                            let f = supply.fresh(v);
                            inner_saved.push((v.clone(), map.insert(v.clone(), f.clone())));
                            f
                        });
                        pats.push(Pattern { chan, var });
                    }
                    let body = freshen(&r.body, map, supply);
                    for (n, old) in inner_saved.into_iter().rev() {
                        restore(map, &n, old);
                    }
                    Rule { patterns: pats, body }
                })
                .collect();
            let body = freshen(body, map, supply);
            for (n, old) in saved.into_iter().rev() {
                restore(map, &n, old);
            }
            Proc::Def { label: label.clone(), copies: *copies, rules, body: Box::new(body) }
        }
    }
}

fn restore(map: &mut HashMap<Name, Name>, n: &Name, old: Option<Name>) {
    match old {
        Some(o) => {
            map.insert(n.clone(), o);
        }
        None => {
            map.remove(n);
        }
    }
}

// ---------------------------------------------------------------------------
// labels

/// Numbers every capability occurrence in left-to-right preorder, starting at 0.
pub fn assign_labels(t: &Term) -> Term {
    let mut proc = t.proc.clone();
    let mut next = 0;
    relabel(&mut proc, &mut next);
    Term::new(t.calculus, proc)
}

fn relabel(p: &mut Proc, next: &mut u32) {
    let fresh = |l: &mut Label, next: &mut u32| {
        *l = Label::new(*next);
        *next += 1;
    };
    match p {
        Proc::Nil | Proc::Success => {}
        Proc::Par(ps) => ps.iter_mut().for_each(|q| relabel(q, next)),
        Proc::Res(_, body) => relabel(body, next),
        Proc::Rep { label, copies, body } => {
            fresh(label, next);
            *copies = 0;
            relabel(body, next);
        }
        Proc::Amb { label, body, .. } => {
            fresh(label, next);
            relabel(body, next);
        }
        Proc::Act { label, cont, .. } => {
            fresh(label, next);
            relabel(cont, next);
        }
        Proc::Sum { label, branches } => {
            fresh(label, next);
            branches.iter_mut().for_each(|b| relabel(&mut b.cont, next));
        }
        Proc::Msg { label, .. } => fresh(label, next),
        Proc::Def { label, copies, rules, body } => {
            fresh(label, next);
            *copies = 0;
            rules.iter_mut().for_each(|r| relabel(&mut r.body, next));
            relabel(body, next);
        }
    }
}

/// The kind of the capability carried by a labelled node.
pub fn cap_kind(calculus: Calculus, p: &Proc) -> Option<CapKind> {
    Some(match p {
        Proc::Rep { .. } => CapKind::Replication,
        Proc::Amb { .. } => CapKind::Ambient,
        Proc::Act { cap, .. } => cap.kind(),
        Proc::Sum { branches, .. } => {
            if calculus == Calculus::PiAsyn && branches.len() == 1 {
                match branches[0].guard {
                    Guard::Out { .. } => CapKind::OutputAtom,
                    Guard::In { .. } => CapKind::InputPrefix,
                    Guard::Tau => CapKind::Tau,
                }
            } else {
                CapKind::Sum
            }
        }
        Proc::Msg { .. } => CapKind::JoinMessage,
        Proc::Def { .. } => CapKind::JoinDefinition,
        _ => return None,
    })
}

/// All capability occurrences, in preorder.
pub fn capabilities(t: &Term) -> Vec<(Label, CapKind)> {
    let mut out = Vec::new();
    collect_caps(t.calculus, &t.proc, &mut out);
    out
}

fn collect_caps(c: Calculus, p: &Proc, out: &mut Vec<(Label, CapKind)>) {
    if let (Some(l), Some(k)) = (p.label(), cap_kind(c, p)) {
        out.push((l.clone(), k));
    }
    for child in children(p) {
        collect_caps(c, child, out);
    }
}

/// Direct sub-processes (operator arguments) of a node.
pub fn children(p: &Proc) -> Vec<&Proc> {
    match p {
        Proc::Nil | Proc::Success | Proc::Msg { .. } => Vec::new(),
        Proc::Par(ps) => ps.iter().collect(),
        Proc::Res(_, b) | Proc::Rep { body: b, .. } | Proc::Amb { body: b, .. } => vec![b],
        Proc::Act { cont, .. } => vec![cont],
        Proc::Sum { branches, .. } => branches.iter().map(|b| &b.cont).collect(),
        Proc::Def { rules, body, .. } => {
            let mut v: Vec<&Proc> = rules.iter().map(|r| &r.body).collect();
            v.push(body);
            v
        }
    }
}

// ---------------------------------------------------------------------------
// subterms and success

/// The term itself plus, recursively, every operator argument that is a term.
pub fn subterms(t: &Term) -> Vec<Term> {
    let mut out: Vec<Term> = Vec::new();
    let mut stack = vec![&t.proc];
    while let Some(p) = stack.pop() {
        let term = Term::new(t.calculus, p.clone());
        if !out.iter().any(|o| proc_alpha_eq(&o.proc, &term.proc)) {
            out.push(term);
        }
        let kids = children(p);
        stack.extend(kids.into_iter().rev());
    }
    out
}

/// True iff `ok` occurs unguarded.
pub fn has_success(t: &Term) -> bool {
    proc_has_success(&t.proc)
}

pub fn proc_has_success(p: &Proc) -> bool {
    match p {
        Proc::Success => true,
        Proc::Par(ps) => ps.iter().any(proc_has_success),
        Proc::Res(_, b) | Proc::Rep { body: b, .. } | Proc::Amb { body: b, .. } => proc_has_success(b),
        Proc::Def { body, .. } => proc_has_success(body),
        _ => false,
    }
}

/// Operator count, excluding `0`; an n-ary parallel counts as n-1 operators.
pub fn size(p: &Proc) -> usize {
    match p {
        Proc::Nil => 0,
        Proc::Success | Proc::Msg { .. } => 1,
        Proc::Par(ps) => ps.iter().map(size).sum::<usize>() + ps.len().saturating_sub(1),
        Proc::Res(_, b) | Proc::Rep { body: b, .. } | Proc::Amb { body: b, .. } => 1 + size(b),
        Proc::Act { cont, .. } => 1 + size(cont),
        Proc::Sum { branches, .. } => branches.iter().map(|b| 1 + size(&b.cont)).sum::<usize>() + branches.len() - 1,
        Proc::Def { rules, body, .. } => {
            1 + rules.iter().map(|r| r.patterns.len() + size(&r.body)).sum::<usize>() + size(body)
        }
    }
}

/// True if the term contains a replication anywhere.
pub fn has_replication(p: &Proc) -> bool {
    matches!(p, Proc::Rep { .. }) || children(p).into_iter().any(has_replication)
}
