//! A deliberately naive reduction relation, used to cross-check
//! [`crate::semantics::enumerate_steps`] on replication-free terms.
//!
//! Every binder is renamed apart and every unguarded restriction (join:
//! definition) is pulled to the top. Each axiom is then matched by brute
//! force over syntactic positions and the reduct is rebuilt as a plain
//! process, so this shares nothing with the fast path except the final
//! canonical key.

use std::collections::{BTreeSet, HashMap};

use crate::congruence::{canonical_key, Key};
use crate::semantics::Consumed;
use crate::syntax::{
    cap_kind, freshen_binders, has_replication, subst_proc, Calculus, Cap, CapKind, Guard, Label, Name, NameSupply,
    Proc, Rule, Term,
};
use crate::Error;

pub type StepSig = (Vec<Consumed>, Key);

pub fn slow_steps(t: &Term) -> Result<BTreeSet<StepSig>, Error> {
    if has_replication(&t.proc) {
        return Err(Error::Unsupported("the slow oracle covers replication-free terms".into()));
    }
    let mut supply = NameSupply::for_proc(&t.proc);
    let p = freshen_binders(&t.proc, &mut supply);
    let mut out = BTreeSet::new();
    match t.calculus {
        Calculus::Ma | Calculus::Sa => ambient_steps(t.calculus, &p, &mut out),
        Calculus::Join => join_steps(&p, &mut supply, &mut out),
        _ => pi_steps(t.calculus, &p, &mut supply, &mut out),
    }
    Ok(out)
}

fn cons(label: &Label, kind: CapKind, recurrent: bool) -> Consumed {
    Consumed { label: label.clone(), kind, recurrent }
}

fn finish(calculus: Calculus, mut consumed: Vec<Consumed>, p: Proc) -> StepSig {
    consumed.sort();
    (consumed, canonical_key(&Term::new(calculus, p)))
}

fn wrap_nus(nus: &[Name], p: Proc) -> Proc {
    nus.iter().rev().fold(p, |acc, n| Proc::res(n.clone(), acc))
}

// ---------------------------------------------------------------------------
// ambients

/// Parallel components of a reduction context, restrictions stripped;
/// ambient bodies are flattened recursively into `Par` lists.
fn flat(p: &Proc, nus: &mut Vec<Name>, out: &mut Vec<Proc>) {
    match p {
        Proc::Nil => {}
        Proc::Par(ps) => ps.iter().for_each(|q| flat(q, nus, out)),
        Proc::Res(n, b) => {
            nus.push(n.clone());
            flat(b, nus, out);
        }
        Proc::Amb { label, name, body } => {
            let mut inner = Vec::new();
            flat(body, nus, &mut inner);
            out.push(Proc::Amb { label: label.clone(), name: name.clone(), body: Box::new(Proc::Par(inner)) });
        }
        other => out.push(other.clone()),
    }
}

fn items(p: &Proc) -> &Vec<Proc> {
    match p {
        Proc::Amb { body, .. } => match &**body {
            Proc::Par(v) => v,
            _ => unreachable!("flattened ambient"),
        },
        _ => unreachable!("ambient expected"),
    }
}

fn items_mut(p: &mut Proc) -> &mut Vec<Proc> {
    match p {
        Proc::Amb { body, .. } => match &mut **body {
            Proc::Par(v) => v,
            _ => unreachable!("flattened ambient"),
        },
        _ => unreachable!("ambient expected"),
    }
}

fn at_path<'a>(top: &'a mut Vec<Proc>, path: &[usize]) -> &'a mut Vec<Proc> {
    let mut cur = top;
    for &i in path {
        cur = items_mut(&mut cur[i]);
    }
    cur
}

fn find_act(v: &[Proc], want: Cap, target: &Name) -> Vec<usize> {
    (0..v.len()).filter(|&i| matches!(&v[i], Proc::Act { cap, target: t, .. } if *cap == want && t == target)).collect()
}

fn act_parts(p: &Proc) -> (&Label, &Proc) {
    match p {
        Proc::Act { label, cont, .. } => (label, cont),
        _ => unreachable!("action expected"),
    }
}

fn amb_parts(p: &Proc) -> (&Label, &Name) {
    match p {
        Proc::Amb { label, name, .. } => (label, name),
        _ => unreachable!("ambient expected"),
    }
}

/// Removes `idx` from `v` and appends the action's continuation.
fn fire(v: &mut Vec<Proc>, idx: usize) {
    let p = v.remove(idx);
    if let Proc::Act { cont, .. } = p {
        v.push(*cont);
    }
}

fn ambient_steps(calculus: Calculus, p: &Proc, out: &mut BTreeSet<StepSig>) {
    let safe = calculus == Calculus::Sa;
    let mut nus = Vec::new();
    let mut top = Vec::new();
    flat(p, &mut nus, &mut top);
    let rebuild = |top: Vec<Proc>| wrap_nus(&nus, Proc::Par(top));
    let mut paths: Vec<Vec<usize>> = vec![Vec::new()];
    let mut k = 0;
    while k < paths.len() {
        let path = paths[k].clone();
        k += 1;
        let level = at_path(&mut top.clone(), &path).clone();
        for (i, q) in level.iter().enumerate() {
            if matches!(q, Proc::Amb { .. }) {
                let mut p2 = path.clone();
                p2.push(i);
                paths.push(p2);
            }
        }
        let co = |cap: Cap, host: &Proc, name: &Name| -> Vec<Option<usize>> {
            if safe {
                find_act(items(host), cap, name).into_iter().map(Some).collect()
            } else {
                vec![None]
            }
        };
        for (i, a) in level.iter().enumerate() {
            // open
            if let Proc::Act { cap: Cap::Open, target, .. } = a {
                for (j, b) in level.iter().enumerate() {
                    if j == i || !matches!(b, Proc::Amb { name, .. } if name == target) {
                        continue;
                    }
                    for c in co(Cap::CoOpen, b, target) {
                        let mut consumed = vec![
                            cons(act_parts(a).0, CapKind::Open, false),
                            cons(amb_parts(b).0, CapKind::Ambient, false),
                        ];
                        let mut t2 = top.clone();
                        let lvl = at_path(&mut t2, &path);
                        let mut amb = lvl[j].clone();
                        if let Some(c) = c {
                            consumed.push(cons(act_parts(&items(&amb)[c]).0, CapKind::CoOpen, false));
                            fire(items_mut(&mut amb), c);
                        }
                        let released = items(&amb).clone();
                        let (hi, lo) = if i > j { (i, j) } else { (j, i) };
                        let x = lvl.remove(hi);
                        let y = lvl.remove(lo);
                        let act = if i > j { x } else { y };
                        lvl.push(act_parts(&act).1.clone());
                        lvl.extend(released);
                        out.insert(finish(calculus, consumed, rebuild(t2)));
                    }
                }
            }
            let Proc::Amb { name: n, .. } = a else { continue };
            // in: a = n[in m.P | Q], sibling m[R]
            for c in (0..items(a).len()).filter(|&c| matches!(&items(a)[c], Proc::Act { cap: Cap::In, .. })) {
                let Proc::Act { target: m, .. } = &items(a)[c] else { continue };
                for (j, b) in level.iter().enumerate() {
                    if j == i || !matches!(b, Proc::Amb { name, .. } if name == m) {
                        continue;
                    }
                    for cc in co(Cap::CoIn, b, m) {
                        let mut consumed = vec![
                            cons(act_parts(&items(a)[c]).0, CapKind::In, false),
                            cons(amb_parts(a).0, CapKind::Ambient, false),
                            cons(amb_parts(b).0, CapKind::Ambient, true),
                        ];
                        let mut t2 = top.clone();
                        let lvl = at_path(&mut t2, &path);
                        let mut mover = lvl[i].clone();
                        fire(items_mut(&mut mover), c);
                        let mut target = lvl[j].clone();
                        if let Some(cc) = cc {
                            consumed.push(cons(act_parts(&items(&target)[cc]).0, CapKind::CoIn, false));
                            fire(items_mut(&mut target), cc);
                        }
                        items_mut(&mut target).push(mover);
                        lvl[j] = target;
                        lvl.remove(i);
                        out.insert(finish(calculus, consumed, rebuild(t2)));
                    }
                }
            }
            // out: a = m[ n'[out m.P | Q] | R ]
            let m = n;
            let inner = items(a);
            for (x, mover) in inner.iter().enumerate() {
                if !matches!(mover, Proc::Amb { .. }) {
                    continue;
                }
                for c in find_act(items(mover), Cap::Out, m) {
                    for cc in co(Cap::CoOut, a, m) {
                        let mut consumed = vec![
                            cons(act_parts(&items(mover)[c]).0, CapKind::Out, false),
                            cons(amb_parts(mover).0, CapKind::Ambient, false),
                            cons(amb_parts(a).0, CapKind::Ambient, true),
                        ];
                        let mut t2 = top.clone();
                        let lvl = at_path(&mut t2, &path);
                        let mut parent = lvl[i].clone();
                        let mut mv = items(&parent)[x].clone();
                        fire(items_mut(&mut mv), c);
                        items_mut(&mut parent).remove(x);
                        if let Some(cc) = cc {
                            let cc = if cc > x { cc - 1 } else { cc };
                            consumed.push(cons(act_parts(&items(&parent)[cc]).0, CapKind::CoOut, false));
                            fire(items_mut(&mut parent), cc);
                        }
                        lvl[i] = parent;
                        lvl.push(mv);
                        out.insert(finish(calculus, consumed, rebuild(t2)));
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// pi

fn pi_flat(p: &Proc, nus: &mut Vec<Name>, out: &mut Vec<Proc>) {
    match p {
        Proc::Nil => {}
        Proc::Par(ps) => ps.iter().for_each(|q| pi_flat(q, nus, out)),
        Proc::Res(n, b) => {
            nus.push(n.clone());
            pi_flat(b, nus, out);
        }
        other => out.push(other.clone()),
    }
}

fn pi_steps(calculus: Calculus, p: &Proc, supply: &mut NameSupply, out: &mut BTreeSet<StepSig>) {
    let mut nus = Vec::new();
    let mut top = Vec::new();
    pi_flat(p, &mut nus, &mut top);
    let sums: Vec<usize> = (0..top.len()).filter(|&i| matches!(top[i], Proc::Sum { .. })).collect();
    let branches = |i: usize| match &top[i] {
        Proc::Sum { branches, .. } => branches,
        _ => unreachable!(),
    };
    let info = |i: usize| (top[i].label().unwrap().clone(), cap_kind(calculus, &top[i]).unwrap());
    for &i in &sums {
        for b in branches(i) {
            if b.guard == Guard::Tau {
                let (l, k) = info(i);
                let mut rest: Vec<Proc> = top.clone();
                rest.remove(i);
                rest.push(b.cont.clone());
                out.insert(finish(calculus, vec![cons(&l, k, false)], wrap_nus(&nus, Proc::Par(rest))));
            }
        }
    }
    for &i in &sums {
        for &j in &sums {
            if i == j {
                continue;
            }
            for bo in branches(i) {
                let Guard::Out { chan: x, obj } = &bo.guard else { continue };
                for bi in branches(j) {
                    let Guard::In { chan: y, var } = &bi.guard else { continue };
                    if x != y || obj.is_some() != var.is_some() {
                        continue;
                    }
                    let cont = match (obj, var) {
                        (Some(o), Some(v)) => {
                            let map = HashMap::from([(v.clone(), o.clone())]);
                            subst_proc(&bi.cont, &map, supply)
                        }
                        _ => bi.cont.clone(),
                    };
                    let mut rest: Vec<Proc> =
                        top.iter().enumerate().filter(|&(k, _)| k != i && k != j).map(|(_, q)| q.clone()).collect();
                    rest.push(bo.cont.clone());
                    rest.push(cont);
                    let (li, ki) = info(i);
                    let (lj, kj) = info(j);
                    let consumed = vec![cons(&li, ki, false), cons(&lj, kj, false)];
                    out.insert(finish(calculus, consumed, wrap_nus(&nus, Proc::Par(rest))));
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// join

struct Block {
    label: Label,
    rules: Vec<Rule>,
}

fn join_flat(p: &Proc, blocks: &mut Vec<Block>, out: &mut Vec<Proc>) {
    match p {
        Proc::Nil => {}
        Proc::Par(ps) => ps.iter().for_each(|q| join_flat(q, blocks, out)),
        Proc::Def { label, rules, body, .. } => {
            blocks.push(Block { label: label.clone(), rules: rules.clone() });
            join_flat(body, blocks, out);
        }
        other => out.push(other.clone()),
    }
}

fn rebuild_join(blocks: &[Block], mols: Vec<Proc>) -> Proc {
    blocks.iter().rev().fold(Proc::Par(mols), |acc, b| Proc::Def {
        label: b.label.clone(),
        copies: 0,
        rules: b.rules.clone(),
        body: Box::new(acc),
    })
}

fn join_steps(p: &Proc, supply: &mut NameSupply, out: &mut BTreeSet<StepSig>) {
    let mut blocks = Vec::new();
    let mut mols = Vec::new();
    join_flat(p, &mut blocks, &mut mols);
    for block in &blocks {
        for rule in &block.rules {
            // all injective assignments of molecules to the rule's patterns
            let mut choice: Vec<usize> = Vec::new();
            assign(rule, &mols, &mut choice, &mut |chosen| {
                let mut map = HashMap::new();
                let mut consumed = vec![cons(&block.label, CapKind::JoinDefinition, true)];
                for (pat, &m) in rule.patterns.iter().zip(chosen) {
                    let Proc::Msg { label, arg, .. } = &mols[m] else { unreachable!() };
                    consumed.push(cons(label, CapKind::JoinMessage, false));
                    if let (Some(v), Some(a)) = (&pat.var, arg) {
                        map.insert(v.clone(), a.clone());
                    }
                }
                let body = freshen_binders(&rule.body, supply);
                let body = subst_proc(&body, &map, supply);
                let mut rest: Vec<Proc> =
                    mols.iter().enumerate().filter(|(k, _)| !chosen.contains(k)).map(|(_, q)| q.clone()).collect();
                rest.push(body);
                out.insert(finish(Calculus::Join, consumed, rebuild_join(&blocks, rest)));
            });
        }
    }
}

fn assign(rule: &Rule, mols: &[Proc], choice: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if choice.len() == rule.patterns.len() {
        f(choice);
        return;
    }
    let pat = &rule.patterns[choice.len()];
    for (k, m) in mols.iter().enumerate() {
        let Proc::Msg { chan, arg, .. } = m else { continue };
        if *chan != pat.chan || arg.is_some() != pat.var.is_some() || choice.contains(&k) {
            continue;
        }
        choice.push(k);
        assign(rule, mols, choice, f);
        choice.pop();
    }
}
