//! Labelled reduction steps modulo structural congruence.
//!
//! A term is first brought into a *soup*: binders renamed apart, restrictions
//! hoisted, join definitions heated, and every unguarded replication unfolded
//! into `unfold` speculative copies (copy-path element `copies + k`). Redexes
//! are searched over the soup; a residual keeps only the copies its step
//! used and advances the counters of the replications involved, so labels
//! stay unique along an execution.
//!
//! Consumed labels of speculative copies are reported with [`FRESH_COPY`]
//! path elements, numbered by first use within the step. This makes the
//! consumed multiset of "the same" step comparable across states.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::congruence::{canonical_parts, tidy, Key};
use crate::syntax::{
    cap_kind, freshen_binders, subst_proc, Calculus, Cap, CapKind, Guard, Label, Name, NameSupply, Proc, Rule, Term,
    FRESH_COPY,
};
use crate::Error;

pub const DEFAULT_UNFOLD: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Axiom {
    MaIn,
    MaOut,
    MaOpen,
    SaIn,
    SaOut,
    SaOpen,
    PiTau,
    PiComm,
    JoinReact,
}

impl Axiom {
    pub fn is_open(self) -> bool {
        matches!(self, Axiom::MaOpen | Axiom::SaOpen)
    }

    pub fn name(self) -> &'static str {
        match self {
            Axiom::MaIn => "MA_IN",
            Axiom::MaOut => "MA_OUT",
            Axiom::MaOpen => "MA_OPEN",
            Axiom::SaIn => "SA_IN",
            Axiom::SaOut => "SA_OUT",
            Axiom::SaOpen => "SA_OPEN",
            Axiom::PiTau => "PI_TAU",
            Axiom::PiComm => "PI_COMM",
            Axiom::JoinReact => "JOIN_REACT",
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Consumed {
    pub label: Label,
    pub kind: CapKind,
    pub recurrent: bool,
}

#[derive(Clone, Debug)]
pub struct Step {
    /// Position in the deterministic step order of the source.
    pub id: usize,
    pub axiom: Axiom,
    /// Sorted multiset.
    pub consumed: Vec<Consumed>,
    /// Canonical form of the reduct.
    pub residual: Term,
    /// Label-free key of the residual.
    pub residual_key: Key,
}

impl Step {
    /// Consumed labels that denote fixed occurrences (not speculative copies).
    pub fn stable_labels(&self) -> impl Iterator<Item = &Consumed> {
        self.consumed.iter().filter(|c| !c.label.is_fresh_copy())
    }
}

#[derive(Clone, Debug)]
pub struct StepSet {
    pub source: Term,
    pub steps: Vec<Step>,
}

pub fn enumerate_steps(t: &Term, unfold: usize) -> StepSet {
    let state = State::build(t, unfold);
    let mut seen: HashSet<(Vec<Consumed>, Key)> = HashSet::new();
    let mut steps = Vec::new();
    for r in state.redexes() {
        let (consumed, used) = state.consumed(&r);
        let residual = Term::new(t.calculus, state.residual(&r, &used));
        let (canon, key) = canonical_parts(&residual);
        if seen.insert((consumed.clone(), key.clone())) {
            steps.push(Step {
                id: 0,
                axiom: r.axiom(t.calculus),
                consumed,
                residual: Term::new(t.calculus, tidy(&canon)),
                residual_key: key,
            });
        }
    }
    steps.sort_by(|a, b| (a.axiom, &a.consumed, &a.residual_key).cmp(&(b.axiom, &b.consumed, &b.residual_key)));
    for (i, s) in steps.iter_mut().enumerate() {
        s.id = i;
    }
    StepSet { source: t.clone(), steps }
}

/// Steps with the default unfolding depth.
pub fn steps(t: &Term) -> StepSet {
    enumerate_steps(t, DEFAULT_UNFOLD)
}

/// Consumed multisets of all enabled steps, without building residuals.
pub fn enabled_consumed(t: &Term, unfold: usize) -> Vec<Vec<Consumed>> {
    let state = State::build(t, unfold);
    let mut out: Vec<Vec<Consumed>> = state.redexes().iter().map(|r| state.consumed(r).0).collect();
    out.sort();
    out.dedup();
    out
}

pub fn apply_step(t: &Term, s: &Step) -> Result<Term, Error> {
    enumerate_steps(t, DEFAULT_UNFOLD)
        .steps
        .into_iter()
        .find(|c| c.consumed == s.consumed && c.residual_key == s.residual_key)
        .map(|c| c.residual)
        .ok_or_else(|| Error::StepNotApplicable(format!("step {} ({})", s.id, s.axiom)))
}

/// True iff `t` can perform a step consuming exactly `s.consumed`.
pub fn still_enabled(t: &Term, s: &Step) -> bool {
    enabled_consumed(t, DEFAULT_UNFOLD).contains(&s.consumed)
}

// ---------------------------------------------------------------------------
// soup

/// A replication copy: the replication's label and the concrete copy index.
type CopyId = (Label, u32);

#[derive(Clone, Debug)]
struct Item {
    /// Copies this item lives in, outermost first.
    origin: Vec<CopyId>,
    node: Node,
}

#[derive(Clone, Debug)]
enum Node {
    Amb { label: Label, name: Name, content: Vec<Item> },
    Leaf(Proc),
}

impl Item {
    fn label(&self) -> Option<&Label> {
        match &self.node {
            Node::Amb { label, .. } => Some(label),
            Node::Leaf(p) => p.label(),
        }
    }

    fn proc(&self) -> Option<&Proc> {
        match &self.node {
            Node::Leaf(p) => Some(p),
            Node::Amb { .. } => None,
        }
    }

    fn amb_name(&self) -> Option<&Name> {
        match &self.node {
            Node::Amb { name, .. } => Some(name),
            Node::Leaf(_) => None,
        }
    }

    fn content(&self) -> &[Item] {
        match &self.node {
            Node::Amb { content, .. } => content,
            Node::Leaf(_) => &[],
        }
    }

    fn content_mut(&mut self) -> &mut Vec<Item> {
        match &mut self.node {
            Node::Amb { content, .. } => content,
            Node::Leaf(_) => unreachable!("not an ambient"),
        }
    }

    fn action(&self) -> Option<(Cap, &Name, &Proc)> {
        match self.proc()? {
            Proc::Act { cap, target, cont, .. } => Some((*cap, target, cont)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
struct JoinBlock {
    label: Label,
    copies: u32,
    rules: Vec<Rule>,
}

struct State {
    calculus: Calculus,
    nus: Vec<Name>,
    top: Vec<Item>,
    blocks: Vec<JoinBlock>,
    supply: NameSupply,
}

/// A located participant: ambient path to its level, then index in the level.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Loc {
    level: Vec<usize>,
    idx: usize,
}

impl Loc {
    fn at(level: &[usize], idx: usize) -> Loc {
        Loc { level: level.to_vec(), idx }
    }

    fn inside(&self, idx: usize) -> Loc {
        let mut level = self.level.clone();
        level.push(self.idx);
        Loc { level, idx }
    }
}

#[derive(Clone, Debug)]
enum Redex {
    Open { act: Loc, amb: Loc, co: Option<Loc> },
    In { cap: Loc, mover: Loc, target: Loc, co: Option<Loc> },
    Out { cap: Loc, mover: Loc, parent: Loc, co: Option<Loc> },
    Tau { sum: usize, branch: usize },
    Comm { out: usize, ob: usize, inp: usize, ib: usize },
    React { block: usize, rule: usize, mols: Vec<usize> },
}

impl Redex {
    fn axiom(&self, c: Calculus) -> Axiom {
        let sa = c == Calculus::Sa;
        match self {
            Redex::Open { .. } => {
                if sa {
                    Axiom::SaOpen
                } else {
                    Axiom::MaOpen
                }
            }
            Redex::In { .. } => {
                if sa {
                    Axiom::SaIn
                } else {
                    Axiom::MaIn
                }
            }
            Redex::Out { .. } => {
                if sa {
                    Axiom::SaOut
                } else {
                    Axiom::MaOut
                }
            }
            Redex::Tau { .. } => Axiom::PiTau,
            Redex::Comm { .. } => Axiom::PiComm,
            Redex::React { .. } => Axiom::JoinReact,
        }
    }
}

fn level<'a>(top: &'a [Item], path: &[usize]) -> &'a [Item] {
    let mut cur = top;
    for &i in path {
        cur = cur[i].content();
    }
    cur
}

fn level_mut<'a>(top: &'a mut Vec<Item>, path: &[usize]) -> &'a mut Vec<Item> {
    let mut cur = top;
    for &i in path {
        cur = cur[i].content_mut();
    }
    cur
}

fn item<'a>(top: &'a [Item], loc: &Loc) -> &'a Item {
    &level(top, &loc.level)[loc.idx]
}

/// Extends every label in `p` by one copy-path element.
pub fn extend_labels(p: &Proc, k: u32) -> Proc {
    let mut q = p.clone();
    fn go(p: &mut Proc, k: u32) {
        match p {
            Proc::Nil | Proc::Success => {}
            Proc::Par(ps) => ps.iter_mut().for_each(|q| go(q, k)),
            Proc::Res(_, b) => go(b, k),
            Proc::Rep { label, body, .. } | Proc::Amb { label, body, .. } => {
                *label = label.extended(k);
                go(body, k);
            }
            Proc::Act { label, cont, .. } => {
                *label = label.extended(k);
                go(cont, k);
            }
            Proc::Sum { label, branches } => {
                *label = label.extended(k);
                branches.iter_mut().for_each(|b| go(&mut b.cont, k));
            }
            Proc::Msg { label, .. } => *label = label.extended(k),
            Proc::Def { label, rules, body, .. } => {
                *label = label.extended(k);
                rules.iter_mut().for_each(|r| go(&mut r.body, k));
                go(body, k);
            }
        }
    }
    go(&mut q, k);
    q
}

impl State {
    fn build(t: &Term, unfold: usize) -> State {
        let mut supply = NameSupply::for_proc(&t.proc);
        let p = freshen_binders(&t.proc, &mut supply);
        let p = crate::congruence::normalize(t.calculus, &p);
        let mut st = State { calculus: t.calculus, nus: Vec::new(), top: Vec::new(), blocks: Vec::new(), supply };
        let mut top = Vec::new();
        st.load(&p, &[], unfold, &mut top);
        st.top = top;
        st
    }

    /// Adds the components of a normalised process to `out`.
    fn load(&mut self, p: &Proc, origin: &[CopyId], unfold: usize, out: &mut Vec<Item>) {
        let mut cur = p;
        loop {
            match cur {
                Proc::Res(n, b) => {
                    self.nus.push(n.clone());
                    cur = b;
                }
                Proc::Def { label, copies, rules, body } if self.calculus == Calculus::Join => {
                    self.blocks.push(JoinBlock { label: label.clone(), copies: *copies, rules: rules.clone() });
                    cur = body;
                }
                _ => break,
            }
        }
        let comps: Vec<&Proc> = match cur {
            Proc::Nil => Vec::new(),
            Proc::Par(ps) => ps.iter().collect(),
            other => vec![other],
        };
        for c in comps {
            match c {
                Proc::Amb { label, name, body } => {
                    let mut content = Vec::new();
                    self.load(body, origin, unfold, &mut content);
                    out.push(Item {
                        origin: origin.to_vec(),
                        node: Node::Amb { label: label.clone(), name: name.clone(), content },
                    });
                }
                Proc::Rep { label, copies, body } => {
                    out.push(Item { origin: origin.to_vec(), node: Node::Leaf(c.clone()) });
                    for k in 0..unfold as u32 {
                        let idx = copies + k;
                        let copy = extend_labels(body, idx);
                        let copy = freshen_binders(&copy, &mut self.supply);
                        let mut o = origin.to_vec();
                        o.push((label.clone(), idx));
                        self.load(&copy, &o, unfold, out);
                    }
                }
                Proc::Par(_) | Proc::Res(..) | Proc::Nil => self.load(c, origin, unfold, out),
                other => out.push(Item { origin: origin.to_vec(), node: Node::Leaf(other.clone()) }),
            }
        }
    }

    fn redexes(&self) -> Vec<Redex> {
        let mut out = Vec::new();
        match self.calculus {
            Calculus::Ma | Calculus::Sa => {
                self.ambient_redexes(&[], None, &mut out);
            }
            Calculus::PiMix | Calculus::PiSep | Calculus::PiAsyn => self.pi_redexes(&mut out),
            Calculus::Join => self.join_redexes(&mut out),
        }
        out
    }

    fn ambient_redexes(&self, path: &[usize], parent: Option<&Loc>, out: &mut Vec<Redex>) {
        let sa = self.calculus == Calculus::Sa;
        let items = level(&self.top, path);
        // co-capability of kind `cap` naming `n` among `items`
        let co_in = |items: &[Item], cap: Cap, n: &Name| -> Vec<usize> {
            items
                .iter()
                .enumerate()
                .filter(|(_, it)| matches!(it.action(), Some((c, t, _)) if c == cap && t == n))
                .map(|(i, _)| i)
                .collect()
        };
        let with_co = |cos: Vec<Option<Loc>>| if sa { cos } else { vec![None] };
        for (i, it) in items.iter().enumerate() {
            // open n | n[...]
            if let Some((Cap::Open, n, _)) = it.action() {
                for (j, amb) in items.iter().enumerate() {
                    if amb.amb_name() == Some(n) {
                        let amb_loc = Loc::at(path, j);
                        let cos =
                            co_in(amb.content(), Cap::CoOpen, n).into_iter().map(|q| Some(amb_loc.inside(q))).collect();
                        for co in with_co(cos) {
                            out.push(Redex::Open { act: Loc::at(path, i), amb: amb_loc.clone(), co });
                        }
                    }
                }
            }
            if it.amb_name().is_none() {
                continue;
            }
            let mover = Loc::at(path, i);
            for (k, inner) in it.content().iter().enumerate() {
                match inner.action() {
                    Some((Cap::In, m, _)) => {
                        for (j, target) in items.iter().enumerate() {
                            if j != i && target.amb_name() == Some(m) {
                                let tloc = Loc::at(path, j);
                                let cos = co_in(target.content(), Cap::CoIn, m)
                                    .into_iter()
                                    .map(|q| Some(tloc.inside(q)))
                                    .collect();
                                for co in with_co(cos) {
                                    out.push(Redex::In {
                                        cap: mover.inside(k),
                                        mover: mover.clone(),
                                        target: tloc.clone(),
                                        co,
                                    });
                                }
                            }
                        }
                    }
                    Some((Cap::Out, m, _)) => {
                        if let Some(ploc) = parent {
                            if item(&self.top, ploc).amb_name() == Some(m) {
                                let cos =
                                    co_in(items, Cap::CoOut, m).into_iter().map(|q| Some(Loc::at(path, q))).collect();
                                for co in with_co(cos) {
                                    out.push(Redex::Out {
                                        cap: mover.inside(k),
                                        mover: mover.clone(),
                                        parent: ploc.clone(),
                                        co,
                                    });
                                }
                            }
                        }
                    }
                    _ => {}
                }
            }
            let mut sub = path.to_vec();
            sub.push(i);
            self.ambient_redexes(&sub, Some(&mover), out);
        }
    }

    fn pi_redexes(&self, out: &mut Vec<Redex>) {
        let sums: Vec<(usize, &Vec<crate::syntax::Branch>)> = self
            .top
            .iter()
            .enumerate()
            .filter_map(|(i, it)| match it.proc() {
                Some(Proc::Sum { branches, .. }) => Some((i, branches)),
                _ => None,
            })
            .collect();
        for &(i, bs) in &sums {
            for (bi, b) in bs.iter().enumerate() {
                match &b.guard {
                    Guard::Tau => out.push(Redex::Tau { sum: i, branch: bi }),
                    Guard::Out { chan, obj } => {
                        for &(j, cs) in &sums {
                            if j == i {
                                continue;
                            }
                            for (bj, c) in cs.iter().enumerate() {
                                if let Guard::In { chan: ch2, var } = &c.guard {
                                    if ch2 == chan && var.is_some() == obj.is_some() {
                                        out.push(Redex::Comm { out: i, ob: bi, inp: j, ib: bj });
                                    }
                                }
                            }
                        }
                    }
                    Guard::In { .. } => {}
                }
            }
        }
    }

    fn join_redexes(&self, out: &mut Vec<Redex>) {
        let mols: Vec<(usize, &Name, bool)> = self
            .top
            .iter()
            .enumerate()
            .filter_map(|(i, it)| match it.proc() {
                Some(Proc::Msg { chan, arg, .. }) => Some((i, chan, arg.is_some())),
                _ => None,
            })
            .collect();
        for (bi, block) in self.blocks.iter().enumerate() {
            for (ri, rule) in block.rules.iter().enumerate() {
                let options: Vec<Vec<usize>> = rule
                    .patterns
                    .iter()
                    .map(|pat| {
                        mols.iter()
                            .filter(|(_, c, a)| **c == pat.chan && *a == pat.var.is_some())
                            .map(|(i, _, _)| *i)
                            .collect()
                    })
                    .collect();
                let mut chosen = Vec::new();
                choose_distinct(&options, &mut chosen, &mut |m| {
                    out.push(Redex::React { block: bi, rule: ri, mols: m.to_vec() })
                });
            }
        }
    }

    /// Participants with their kind and recurrence, in a fixed role order.
    fn participants(&self, r: &Redex) -> Vec<(&Item, bool)> {
        let at = |l: &Loc| item(&self.top, l);
        let mut v = Vec::new();
        match r {
            Redex::Open { act, amb, co } => {
                v.push((at(act), false));
                v.push((at(amb), false));
                if let Some(c) = co {
                    v.push((at(c), false));
                }
            }
            Redex::In { cap, mover, target, co } => {
                v.push((at(cap), false));
                v.push((at(mover), false));
                v.push((at(target), true));
                if let Some(c) = co {
                    v.push((at(c), false));
                }
            }
            Redex::Out { cap, mover, parent, co } => {
                v.push((at(cap), false));
                v.push((at(mover), false));
                v.push((at(parent), true));
                if let Some(c) = co {
                    v.push((at(c), false));
                }
            }
            Redex::Tau { sum, .. } => v.push((&self.top[*sum], false)),
            Redex::Comm { out, inp, .. } => {
                v.push((&self.top[*out], false));
                v.push((&self.top[*inp], false));
            }
            Redex::React { mols, .. } => {
                for &m in mols {
                    v.push((&self.top[m], false));
                }
            }
        }
        v
    }

    /// Consumed multiset (normalised) and the concrete copies the step uses.
    fn consumed(&self, r: &Redex) -> (Vec<Consumed>, Vec<CopyId>) {
        let parts = self.participants(r);
        let mut used: Vec<CopyId> = Vec::new();
        for (it, _) in &parts {
            for c in &it.origin {
                if !used.contains(c) {
                    used.push(c.clone());
                }
            }
        }
        let mut rank: HashMap<&CopyId, u32> = HashMap::new();
        let mut per_rep: HashMap<&Label, u32> = HashMap::new();
        for c in &used {
            let n = per_rep.entry(&c.0).or_insert(0);
            rank.insert(c, *n);
            *n += 1;
        }
        let normalise = |label: &Label, origin: &[CopyId]| -> Label {
            let mut l = label.clone();
            for c in origin {
                let pos = c.0.path.len();
                if pos < l.path.len() && l.path[pos] == c.1 {
                    l.path[pos] = FRESH_COPY | rank[c];
                }
            }
            l
        };
        let mut out: Vec<Consumed> = Vec::new();
        for (it, recurrent) in &parts {
            let label = it.label().expect("participants carry labels");
            let kind = match &it.node {
                Node::Amb { .. } => CapKind::Ambient,
                Node::Leaf(p) => cap_kind(self.calculus, p).expect("labelled leaf"),
            };
            out.push(Consumed { label: normalise(label, &it.origin), kind, recurrent: *recurrent });
        }
        // replications whose copies take part are recurrent participants
        for it_origin in parts.iter().map(|(it, _)| &it.origin) {
            for (i, c) in it_origin.iter().enumerate() {
                let l = normalise(&c.0, &it_origin[..i]);
                let cons = Consumed { label: l, kind: CapKind::Replication, recurrent: true };
                if !out.contains(&cons) {
                    out.push(cons);
                }
            }
        }
        if let Redex::React { block, .. } = r {
            out.push(Consumed {
                label: self.blocks[*block].label.clone(),
                kind: CapKind::JoinDefinition,
                recurrent: true,
            });
        }
        out.sort();
        (out, used)
    }

    fn residual(&self, r: &Redex, used: &[CopyId]) -> Proc {
        let mut top = self.top.clone();
        let mut blocks = self.blocks.clone();
        let mut supply = self.supply.clone();
        let raw = |p: &Proc, origin: &[CopyId]| Item { origin: origin.to_vec(), node: Node::Leaf(p.clone()) };
        match r {
            Redex::Open { act, amb, co } => {
                let lvl = level_mut(&mut top, &act.level);
                let (a, b) = (act.idx, amb.idx);
                let (first, second) = if a > b { (a, b) } else { (b, a) };
                let x = lvl.remove(first);
                let y = lvl.remove(second);
                let (act_item, mut amb_item) = if a > b { (x, y) } else { (y, x) };
                let (_, _, cont) = act_item.action().expect("open action");
                lvl.push(raw(cont, &act_item.origin));
                let content = amb_item.content_mut();
                if let Some(c) = co {
                    let q = content.remove(c.idx);
                    let (_, _, qc) = q.action().expect("co-open");
                    content.push(raw(qc, &q.origin));
                }
                lvl.extend(std::mem::take(content));
            }
            Redex::In { cap, mover, target, co } => {
                let lvl = level_mut(&mut top, &mover.level);
                let mut m = lvl.remove(mover.idx);
                let t_idx = if target.idx > mover.idx { target.idx - 1 } else { target.idx };
                {
                    let content = m.content_mut();
                    let c = content.remove(cap.idx);
                    let (_, _, cc) = c.action().expect("in action");
                    content.push(raw(cc, &c.origin));
                }
                let tgt = lvl[t_idx].content_mut();
                if let Some(q) = co {
                    let c = tgt.remove(q.idx);
                    let (_, _, qc) = c.action().expect("co-in");
                    tgt.push(raw(qc, &c.origin));
                }
                tgt.push(m);
            }
            Redex::Out { cap, mover, parent, co } => {
                let inner = level_mut(&mut top, &mover.level);
                let mut m = inner.remove(mover.idx);
                {
                    let content = m.content_mut();
                    let c = content.remove(cap.idx);
                    let (_, _, cc) = c.action().expect("out action");
                    content.push(raw(cc, &c.origin));
                }
                if let Some(q) = co {
                    let qi = if q.idx > mover.idx { q.idx - 1 } else { q.idx };
                    let c = inner.remove(qi);
                    let (_, _, qc) = c.action().expect("co-out");
                    inner.push(raw(qc, &c.origin));
                }
                let outer = level_mut(&mut top, &parent.level);
                outer.push(m);
            }
            Redex::Tau { sum, branch } => {
                let it = top.remove(*sum);
                let Some(Proc::Sum { branches, .. }) = it.proc() else { unreachable!() };
                top.push(raw(&branches[*branch].cont, &it.origin));
            }
            Redex::Comm { out, ob, inp, ib } => {
                let (o, i) = (*out, *inp);
                let (hi, lo) = if o > i { (o, i) } else { (i, o) };
                let x = top.remove(hi);
                let y = top.remove(lo);
                let (oi, ii) = if o > i { (x, y) } else { (y, x) };
                let Some(Proc::Sum { branches: obs, .. }) = oi.proc() else { unreachable!() };
                let Some(Proc::Sum { branches: ibs, .. }) = ii.proc() else { unreachable!() };
                let Guard::Out { obj, .. } = &obs[*ob].guard else { unreachable!() };
                let Guard::In { var, .. } = &ibs[*ib].guard else { unreachable!() };
                top.push(raw(&obs[*ob].cont, &oi.origin));
                let cont = match (var, obj) {
                    (Some(v), Some(o)) => {
                        let map = HashMap::from([(v.clone(), o.clone())]);
                        subst_proc(&ibs[*ib].cont, &map, &mut supply)
                    }
                    _ => ibs[*ib].cont.clone(),
                };
                top.push(raw(&cont, &ii.origin));
            }
            Redex::React { block, rule, mols } => {
                let b = &mut blocks[*block];
                let rl = &b.rules[*rule];
                let mut map = HashMap::new();
                for (pat, &m) in rl.patterns.iter().zip(mols) {
                    if let (Some(v), Some(Proc::Msg { arg: Some(a), .. })) = (&pat.var, top[m].proc()) {
                        map.insert(v.clone(), a.clone());
                    }
                }
                let body = extend_labels(&rl.body, b.copies);
                let body = freshen_binders(&body, &mut supply);
                let body = subst_proc(&body, &map, &mut supply);
                b.copies += 1;
                let mut idx = mols.clone();
                idx.sort_unstable_by(|a, b| b.cmp(a));
                for m in idx {
                    top.remove(m);
                }
                top.push(raw(&body, &[]));
            }
        }
        let mut bump: BTreeMap<&Label, u32> = BTreeMap::new();
        for (l, k) in used {
            let e = bump.entry(l).or_insert(0);
            *e = (*e).max(k + 1);
        }
        let mut p = Proc::par(to_procs(&top, used, &bump));
        for b in blocks.into_iter().rev() {
            p = Proc::Def { label: b.label, copies: b.copies, rules: b.rules, body: Box::new(p) };
        }
        for n in self.nus.iter().rev() {
            p = Proc::Res(n.clone(), Box::new(p));
        }
        p
    }
}

fn to_procs(items: &[Item], used: &[CopyId], bump: &BTreeMap<&Label, u32>) -> Vec<Proc> {
    let mut out = Vec::new();
    for it in items {
        if it.origin.iter().any(|c| !used.contains(c)) {
            continue;
        }
        match &it.node {
            Node::Amb { label, name, content } => out.push(Proc::Amb {
                label: label.clone(),
                name: name.clone(),
                body: Box::new(Proc::par(to_procs(content, used, bump))),
            }),
            Node::Leaf(Proc::Rep { label, copies, body }) => out.push(Proc::Rep {
                label: label.clone(),
                copies: bump.get(label).copied().unwrap_or(*copies).max(*copies),
                body: body.clone(),
            }),
            Node::Leaf(p) => out.push(p.clone()),
        }
    }
    out
}

/// Calls `f` for every choice of one index per option list, all distinct.
fn choose_distinct(options: &[Vec<usize>], chosen: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if chosen.len() == options.len() {
        f(chosen);
        return;
    }
    for &i in &options[chosen.len()] {
        if !chosen.contains(&i) {
            chosen.push(i);
            choose_distinct(options, chosen, f);
            chosen.pop();
        }
    }
}
