//! Canonical forms modulo structural congruence.
//!
//! A canonical form is produced in three passes:
//!
//! 1. every binder is renamed apart, so restrictions can float freely;
//! 2. parallel compositions are flattened, `0` units, unused restrictions and
//!    (for ambients) `!0` are dropped, and unguarded restrictions are pulled
//!    to the top of their scope, across ambient brackets for MA/SA. Join terms
//!    are heated into a solution of definition blocks and molecules;
//! 3. components are sorted by a name-level key that is invariant under
//!    renaming of bound names; the order of the restrictions at one level is
//!    chosen to minimise that key (exhaustively for up to five names).
//!
//! Replication is never unfolded, so the procedure decides congruence on the
//! replication-free fragment and is sound but incomplete with replication.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use crate::syntax::{
    defined_names, freshen_binders, proc_alpha_eq, proc_free_names, Branch, Calculus, Guard, Label, Name, NameSupply,
    Pattern, Proc, Rule, Term,
};
use crate::Error;

/// Up to this many restrictions at one level are ordered exhaustively.
const EXACT_BINDERS: usize = 5;

/// Label-free, alpha-invariant description of a canonical form; equal keys
/// mean alpha-equal canonical forms.
pub type Key = Vec<K>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum K {
    Tag(u8),
    Num(u32),
    Free(Name),
    Bound(u32),
    Unit,
    End,
}

mod tag {
    pub const BLOCK: u8 = 0;
    pub const OK: u8 = 1;
    pub const MSG: u8 = 2;
    pub const ACT: u8 = 3;
    pub const AMB: u8 = 4;
    pub const SUM: u8 = 5;
    pub const REP: u8 = 6;
    pub const DEF: u8 = 7;
    pub const RULE: u8 = 8;
    pub const OUT: u8 = 9;
    pub const IN: u8 = 10;
    pub const TAU: u8 = 11;
    pub const SOLUTION: u8 = 12;
}

pub fn canonicalize(t: &Term) -> Term {
    let (proc, _) = canonical_parts(t);
    Term::new(t.calculus, tidy(&proc))
}

/// The key of the canonical form; cheaper than `canonicalize` when only a
/// hashable identity is needed.
pub fn canonical_key(t: &Term) -> Key {
    canonical_parts(t).1
}

/// Canonical form (untidied binder names) together with its key.
pub fn canonical_parts(t: &Term) -> (Proc, Key) {
    let mut supply = NameSupply::for_proc(&t.proc);
    let p = freshen_binders(&t.proc, &mut supply);
    let p = normalize(t.calculus, &p);
    let mut env = Vec::new();
    if t.calculus == Calculus::Join {
        order_solution(&p, &mut env)
    } else {
        order_block(t.calculus, &p, &mut env)
    }
}

pub fn congruent(t1: &Term, t2: &Term) -> Result<bool, Error> {
    if t1.calculus != t2.calculus {
        return Err(Error::CalculusMismatch(t1.calculus, t2.calculus));
    }
    let (p1, k1) = canonical_parts(t1);
    let (p2, k2) = canonical_parts(t2);
    Ok(k1 == k2 && proc_alpha_eq(&p1, &p2))
}

// ---------------------------------------------------------------------------
// pass 2: normalisation (assumes binders are pairwise distinct)

/// Flattened, hoisted, but not yet ordered form: a chain of restrictions (or
/// for join, of definitions) over a parallel composition of atoms.
pub fn normalize(calculus: Calculus, p: &Proc) -> Proc {
    if calculus == Calculus::Join {
        let mut s = Solution::default();
        heat(p, &mut s);
        s.cool_unordered()
    } else {
        let mut s = Soup::default();
        flatten(calculus, p, &mut s);
        s.into_proc()
    }
}

#[derive(Default)]
struct Soup {
    nus: Vec<Name>,
    comps: Vec<Proc>,
}

impl Soup {
    fn into_proc(self) -> Proc {
        let mut p = Proc::par(self.comps);
        for n in self.nus.into_iter().rev() {
            p = Proc::Res(n, Box::new(p));
        }
        p
    }
}

fn flatten(calculus: Calculus, p: &Proc, out: &mut Soup) {
    match p {
        Proc::Nil => {}
        Proc::Success | Proc::Msg { .. } => out.comps.push(p.clone()),
        Proc::Par(ps) => ps.iter().for_each(|q| flatten(calculus, q, out)),
        Proc::Res(n, body) => {
            let mut inner = Soup::default();
            flatten(calculus, body, &mut inner);
            let mut fv = BTreeSet::new();
            for c in &inner.comps {
                proc_free_names(c, &mut Vec::new(), &mut fv);
            }
            if fv.contains(n) {
                out.nus.push(n.clone());
            }
            out.nus.extend(inner.nus);
            out.comps.extend(inner.comps);
        }
        Proc::Rep { label, copies, body } => {
            let body = normalize(calculus, body);
            if calculus.is_ambient() && body.is_nil() {
                return;
            }
            out.comps.push(Proc::Rep { label: label.clone(), copies: *copies, body: Box::new(body) });
        }
        Proc::Amb { label, name, body } => {
            let mut inner = Soup::default();
            flatten(calculus, body, &mut inner);
            out.nus.extend(inner.nus);
            out.comps.push(Proc::Amb {
                label: label.clone(),
                name: name.clone(),
                body: Box::new(Proc::par(inner.comps)),
            });
        }
        Proc::Act { label, cap, target, cont } => out.comps.push(Proc::Act {
            label: label.clone(),
            cap: *cap,
            target: target.clone(),
            cont: Box::new(normalize(calculus, cont)),
        }),
        Proc::Sum { label, branches } => out.comps.push(Proc::Sum {
            label: label.clone(),
            branches: branches
                .iter()
                .map(|b| Branch { guard: b.guard.clone(), cont: normalize(calculus, &b.cont) })
                .collect(),
        }),
        Proc::Def { .. } => {
            // definitions only occur in join terms, which take the other path
            let mut s = Solution::default();
            heat(p, &mut s);
            out.comps.push(s.cool_unordered());
        }
    }
}

/// A heated join term: definition blocks over a multiset of molecules.
#[derive(Default)]
struct Solution {
    blocks: Vec<Block>,
    mols: Vec<Proc>,
}

struct Block {
    label: Label,
    copies: u32,
    rules: Vec<Rule>,
}

fn heat(p: &Proc, out: &mut Solution) {
    match p {
        Proc::Nil => {}
        Proc::Par(ps) => ps.iter().for_each(|q| heat(q, out)),
        Proc::Def { label, copies, rules, body } => {
            let rules = rules
                .iter()
                .map(|r| Rule { patterns: r.patterns.clone(), body: normalize(Calculus::Join, &r.body) })
                .collect();
            out.blocks.push(Block { label: label.clone(), copies: *copies, rules });
            heat(body, out);
        }
        other => out.mols.push(other.clone()),
    }
}

impl Solution {
    fn cool_unordered(self) -> Proc {
        let mut p = Proc::par(self.mols);
        for b in self.blocks.into_iter().rev() {
            p = Proc::Def { label: b.label, copies: b.copies, rules: b.rules, body: Box::new(p) };
        }
        p
    }
}

// ---------------------------------------------------------------------------
// pass 3: ordering

fn name_key(n: &Name, env: &[Name]) -> K {
    match env.iter().rposition(|m| m == n) {
        Some(i) => K::Bound(i as u32),
        None => K::Free(n.clone()),
    }
}

fn opt_key(n: &Option<Name>, env: &[Name]) -> K {
    n.as_ref().map(|n| name_key(n, env)).unwrap_or(K::Unit)
}

/// Labels in preorder; tie-breaker for components with equal keys.
pub fn label_sequence(p: &Proc) -> Vec<Label> {
    let mut out = Vec::new();
    fn go(p: &Proc, out: &mut Vec<Label>) {
        if let Some(l) = p.label() {
            out.push(l.clone());
        }
        for c in crate::syntax::children(p) {
            go(c, out);
        }
    }
    go(p, &mut out);
    out
}

fn permutations(names: &[Name]) -> Vec<Vec<Name>> {
    if names.len() > EXACT_BINDERS {
        return vec![names.to_vec()];
    }
    let mut out = Vec::new();
    let mut cur = names.to_vec();
    permute(&mut cur, 0, &mut out);
    out
}

fn permute(v: &mut Vec<Name>, k: usize, out: &mut Vec<Vec<Name>>) {
    if k == v.len() {
        out.push(v.clone());
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, out);
        v.swap(k, i);
    }
}

fn sort_components(items: &mut [(Proc, Key)]) {
    items.sort_by(|a, b| match a.1.cmp(&b.1) {
        Ordering::Equal => label_sequence(&a.0).cmp(&label_sequence(&b.0)),
        o => o,
    });
}

/// Orders a normalised restriction chain over a parallel composition.
fn order_block(calculus: Calculus, p: &Proc, env: &mut Vec<Name>) -> (Proc, Key) {
    let mut nus = Vec::new();
    let mut cur = p;
    while let Proc::Res(n, b) = cur {
        nus.push(n.clone());
        cur = b;
    }
    let comps: Vec<&Proc> = match cur {
        Proc::Nil => Vec::new(),
        Proc::Par(ps) => ps.iter().collect(),
        other => vec![other],
    };
    let mut best: Option<(Proc, Key)> = None;
    for perm in permutations(&nus) {
        let depth = env.len();
        env.extend(perm.iter().cloned());
        let mut items: Vec<(Proc, Key)> = comps.iter().map(|c| order_atom(calculus, c, env)).collect();
        env.truncate(depth);
        sort_components(&mut items);
        let mut key = vec![K::Tag(tag::BLOCK), K::Num(perm.len() as u32)];
        let mut procs = Vec::with_capacity(items.len());
        for (q, k) in items {
            key.extend(k);
            key.push(K::End);
            procs.push(q);
        }
        key.push(K::End);
        if best.as_ref().is_none_or(|(_, bk)| key < *bk) {
            let mut q = Proc::par(procs);
            for n in perm.into_iter().rev() {
                q = Proc::Res(n, Box::new(q));
            }
            best = Some((q, key));
        }
    }
    best.expect("at least one permutation")
}

fn order_atom(calculus: Calculus, p: &Proc, env: &mut Vec<Name>) -> (Proc, Key) {
    match p {
        Proc::Success => (Proc::Success, vec![K::Tag(tag::OK)]),
        Proc::Msg { label, chan, arg } => (p.clone(), {
            let _ = label;
            vec![K::Tag(tag::MSG), name_key(chan, env), opt_key(arg, env)]
        }),
        Proc::Rep { label, copies, body } => {
            let (b, k) = order_block(calculus, body, env);
            let mut key = vec![K::Tag(tag::REP)];
            key.extend(k);
            (Proc::Rep { label: label.clone(), copies: *copies, body: Box::new(b) }, key)
        }
        Proc::Amb { label, name, body } => {
            let (b, k) = order_block(calculus, body, env);
            let mut key = vec![K::Tag(tag::AMB), name_key(name, env)];
            key.extend(k);
            (Proc::Amb { label: label.clone(), name: name.clone(), body: Box::new(b) }, key)
        }
        Proc::Act { label, cap, target, cont } => {
            let (c, k) = order_block(calculus, cont, env);
            let mut key = vec![K::Tag(tag::ACT), K::Num(*cap as u32), name_key(target, env)];
            key.extend(k);
            (Proc::Act { label: label.clone(), cap: *cap, target: target.clone(), cont: Box::new(c) }, key)
        }
        Proc::Sum { label, branches } => {
            let mut key = vec![K::Tag(tag::SUM), K::Num(branches.len() as u32)];
            let mut out = Vec::with_capacity(branches.len());
            for b in branches {
                let depth = env.len();
                match &b.guard {
                    Guard::Out { chan, obj } => {
                        key.extend([K::Tag(tag::OUT), name_key(chan, env), opt_key(obj, env)]);
                    }
                    Guard::In { chan, var } => {
                        key.extend([K::Tag(tag::IN), name_key(chan, env)]);
                        match var {
                            Some(v) => {
                                key.push(K::Num(1));
                                env.push(v.clone());
                            }
                            None => key.push(K::Unit),
                        }
                    }
                    Guard::Tau => key.push(K::Tag(tag::TAU)),
                }
                let (c, k) = if calculus == Calculus::Join {
                    order_solution(&b.cont, env)
                } else {
                    order_block(calculus, &b.cont, env)
                };
                env.truncate(depth);
                key.extend(k);
                out.push(Branch { guard: b.guard.clone(), cont: c });
            }
            (Proc::Sum { label: label.clone(), branches: out }, key)
        }
        Proc::Def { .. } => order_solution(p, env),
        Proc::Nil | Proc::Par(_) | Proc::Res(..) => order_block(calculus, p, env),
    }
}

/// Orders a heated join solution and cools it back into nested definitions,
/// respecting the scoping dependencies between blocks.
fn order_solution(p: &Proc, env: &mut Vec<Name>) -> (Proc, Key) {
    let mut blocks: Vec<(&Label, u32, &Vec<Rule>)> = Vec::new();
    let mut cur = p;
    while let Proc::Def { label, copies, rules, body } = cur {
        blocks.push((label, *copies, rules));
        cur = body;
    }
    let mols: Vec<&Proc> = match cur {
        Proc::Nil => Vec::new(),
        Proc::Par(ps) => ps.iter().collect(),
        other => vec![other],
    };
    let dv: Vec<Name> = blocks.iter().flat_map(|(_, _, r)| defined_names(r)).collect();
    let mut best: Option<(Proc, Key)> = None;
    for perm in permutations(&dv) {
        let depth = env.len();
        env.extend(perm.iter().cloned());
        let mut ordered_blocks: Vec<(Proc, Key)> = blocks
            .iter()
            .map(|(label, copies, rules)| {
                let mut rs: Vec<(Rule, Key)> = rules.iter().map(|r| order_rule(r, env)).collect();
                rs.sort_by(|a, b| a.1.cmp(&b.1));
                let mut key = vec![K::Tag(tag::DEF), K::Num(rs.len() as u32)];
                let mut out = Vec::new();
                for (r, k) in rs {
                    key.extend(k);
                    out.push(r);
                }
                key.push(K::End);
                (Proc::Def { label: (*label).clone(), copies: *copies, rules: out, body: Box::new(Proc::Nil) }, key)
            })
            .collect();
        let mut items: Vec<(Proc, Key)> = mols.iter().map(|m| order_atom(Calculus::Join, m, env)).collect();
        env.truncate(depth);
        sort_components(&mut ordered_blocks);
        sort_components(&mut items);
        let mut key = vec![K::Tag(tag::SOLUTION), K::Num(ordered_blocks.len() as u32), K::Num(items.len() as u32)];
        for (_, k) in ordered_blocks.iter().chain(items.iter()) {
            key.extend(k.iter().cloned());
            key.push(K::End);
        }
        if best.as_ref().is_none_or(|(_, bk)| key < *bk) {
            let body = Proc::par(items.into_iter().map(|(q, _)| q).collect());
            best = Some((cool(ordered_blocks.into_iter().map(|(q, _)| q).collect(), body), key));
        }
    }
    best.expect("at least one permutation")
}

fn order_rule(r: &Rule, env: &mut Vec<Name>) -> (Rule, Key) {
    let depth = env.len();
    let mut key = vec![K::Tag(tag::RULE), K::Num(r.patterns.len() as u32)];
    for pat in &r.patterns {
        key.push(name_key(&pat.chan, env));
        key.push(if pat.var.is_some() { K::Num(1) } else { K::Unit });
    }
    env.extend(r.received().cloned());
    let (body, k) = order_solution(&r.body, env);
    env.truncate(depth);
    key.extend(k);
    (Rule { patterns: r.patterns.clone(), body }, key)
}

/// Nests ordered blocks so that each block sits inside the scope of every
/// block whose names it mentions; among ready blocks the key order decides.
fn cool(blocks: Vec<Proc>, body: Proc) -> Proc {
    let info: Vec<(Vec<Name>, BTreeSet<Name>)> = blocks
        .iter()
        .map(|b| {
            let Proc::Def { rules, .. } = b else { unreachable!() };
            let mut fv = BTreeSet::new();
            proc_free_names(b, &mut Vec::new(), &mut fv);
            (defined_names(rules), fv)
        })
        .collect();
    let mut emitted = vec![false; blocks.len()];
    let mut order = Vec::new();
    while order.len() < blocks.len() {
        let ready = (0..blocks.len()).find(|&i| {
            !emitted[i]
                && (0..blocks.len()).all(|j| j == i || emitted[j] || !info[j].0.iter().any(|d| info[i].1.contains(d)))
        });
        // dependencies among blocks are acyclic; fall back to key order otherwise
        let i = ready.unwrap_or_else(|| (0..blocks.len()).find(|&i| !emitted[i]).unwrap());
        emitted[i] = true;
        order.push(i);
    }
    let mut slots: Vec<Option<Proc>> = blocks.into_iter().map(Some).collect();
    let mut p = body;
    for &i in order.iter().rev() {
        let Some(Proc::Def { label, copies, rules, .. }) = slots[i].take() else { unreachable!() };
        p = Proc::Def { label, copies, rules, body: Box::new(p) };
    }
    p
}

// ---------------------------------------------------------------------------
// readable binder names

/// Renames binders to their plain text where that cannot capture anything,
/// otherwise to the smallest free index.
pub fn tidy(p: &Proc) -> Proc {
    let mut fv = BTreeSet::new();
    proc_free_names(p, &mut Vec::new(), &mut fv);
    let mut scope: Vec<Name> = Vec::new();
    tidy_rec(p, &fv, &mut scope, &mut HashMap::new())
}

fn pick(n: &Name, fv: &BTreeSet<Name>, scope: &[Name], taken: &[Name]) -> Name {
    let mut i = 0;
    loop {
        let cand = Name { text: n.text.clone(), fresh: i };
        if !fv.contains(&cand) && !scope.contains(&cand) && !taken.contains(&cand) {
            return cand;
        }
        i += 1;
    }
}

fn tidy_rec(p: &Proc, fv: &BTreeSet<Name>, scope: &mut Vec<Name>, map: &mut HashMap<Name, Name>) -> Proc {
    let get = |n: &Name, map: &HashMap<Name, Name>| map.get(n).cloned().unwrap_or_else(|| n.clone());
    match p {
        Proc::Nil => Proc::Nil,
        Proc::Success => Proc::Success,
        Proc::Par(ps) => Proc::Par(ps.iter().map(|q| tidy_rec(q, fv, scope, map)).collect()),
        Proc::Res(n, b) => {
            let m = pick(n, fv, scope, &[]);
            let old = map.insert(n.clone(), m.clone());
            scope.push(m.clone());
            let body = tidy_rec(b, fv, scope, map);
            scope.pop();
            restore(map, n, old);
            Proc::Res(m, Box::new(body))
        }
        Proc::Rep { label, copies, body } => {
            Proc::Rep { label: label.clone(), copies: *copies, body: Box::new(tidy_rec(body, fv, scope, map)) }
        }
        Proc::Amb { label, name, body } => {
            Proc::Amb { label: label.clone(), name: get(name, map), body: Box::new(tidy_rec(body, fv, scope, map)) }
        }
        Proc::Act { label, cap, target, cont } => Proc::Act {
            label: label.clone(),
            cap: *cap,
            target: get(target, map),
            cont: Box::new(tidy_rec(cont, fv, scope, map)),
        },
        Proc::Sum { label, branches } => Proc::Sum {
            label: label.clone(),
            branches: branches
                .iter()
                .map(|b| match &b.guard {
                    Guard::Out { chan, obj } => Branch {
                        guard: Guard::Out { chan: get(chan, map), obj: obj.as_ref().map(|o| get(o, map)) },
                        cont: tidy_rec(&b.cont, fv, scope, map),
                    },
                    Guard::In { chan, var: Some(v) } => {
                        let m = pick(v, fv, scope, &[]);
                        let old = map.insert(v.clone(), m.clone());
                        scope.push(m.clone());
                        let cont = tidy_rec(&b.cont, fv, scope, map);
                        scope.pop();
                        restore(map, v, old);
                        Branch { guard: Guard::In { chan: get(chan, map), var: Some(m) }, cont }
                    }
                    Guard::In { chan, var: None } => Branch {
                        guard: Guard::In { chan: get(chan, map), var: None },
                        cont: tidy_rec(&b.cont, fv, scope, map),
                    },
                    Guard::Tau => Branch { guard: Guard::Tau, cont: tidy_rec(&b.cont, fv, scope, map) },
                })
                .collect(),
        },
        Proc::Msg { label, chan, arg } => {
            Proc::Msg { label: label.clone(), chan: get(chan, map), arg: arg.as_ref().map(|a| get(a, map)) }
        }
        Proc::Def { label, copies, rules, body } => {
            let dv = defined_names(rules);
            let mut chosen: Vec<Name> = Vec::new();
            let mut saved = Vec::new();
            for d in &dv {
                let m = pick(d, fv, scope, &chosen);
                chosen.push(m.clone());
                saved.push((d.clone(), map.insert(d.clone(), m)));
            }
            let depth = scope.len();
            scope.extend(chosen.iter().cloned());
            let rules = rules
                .iter()
                .map(|r| {
                    let inner = scope.len();
                    let mut rsaved = Vec::new();
                    let mut picked: Vec<Name> = Vec::new();
                    let patterns = r
                        .patterns
                        .iter()
                        .map(|pat| {
                            let chan = get(&pat.chan, map);
                            let var = pat.var.as_ref().map(|v| {
                                let m = pick(v, fv, scope, &picked);
                                picked.push(m.clone());
                                rsaved.push((v.clone(), map.insert(v.clone(), m.clone())));
                                m
                            });
                            Pattern { chan, var }
                        })
                        .collect();
                    scope.extend(picked);
                    let body = tidy_rec(&r.body, fv, scope, map);
                    scope.truncate(inner);
                    for (n, old) in rsaved.into_iter().rev() {
                        restore(map, &n, old);
                    }
                    Rule { patterns, body }
                })
                .collect();
            let body = tidy_rec(body, fv, scope, map);
            scope.truncate(depth);
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
