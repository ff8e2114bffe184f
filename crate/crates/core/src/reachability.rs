//! Success predicates and executions by bounded exploration of the state
//! space quotiented by structural congruence.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::congruence::{canonical_key, canonical_parts, tidy, Key};
use crate::semantics::{enumerate_steps, Consumed, Step, DEFAULT_UNFOLD};
use crate::syntax::{has_success, Calculus, Proc, Term};

pub const DEFAULT_STATE_LIMIT: usize = 100_000;
pub const DEFAULT_DEPTH: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    True,
    False,
    BoundExceeded,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::True => "TRUE",
            Verdict::False => "FALSE",
            Verdict::BoundExceeded => "BOUND_EXCEEDED",
        }
    }
}

impl From<bool> for Verdict {
    fn from(b: bool) -> Verdict {
        if b {
            Verdict::True
        } else {
            Verdict::False
        }
    }
}

/// Canonical states discovered so far, with their outgoing steps cached.
struct Explorer {
    index: HashMap<Key, usize>,
    states: Vec<Term>,
    succ: Vec<Option<Vec<Step>>>,
}

impl Explorer {
    fn new() -> Explorer {
        Explorer { index: HashMap::new(), states: Vec::new(), succ: Vec::new() }
    }

    fn intern(&mut self, t: &Term, key: Key) -> usize {
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.states.len();
        self.index.insert(key, i);
        self.states.push(t.clone());
        self.succ.push(None);
        i
    }

    fn root(&mut self, t: &Term) -> usize {
        let (p, key) = canonical_parts(t);
        self.intern(&Term::new(t.calculus, tidy(&p)), key)
    }

    fn steps(&mut self, i: usize) -> &[Step] {
        if self.succ[i].is_none() {
            self.succ[i] = Some(enumerate_steps(&self.states[i], DEFAULT_UNFOLD).steps);
        }
        self.succ[i].as_deref().unwrap()
    }

    /// Successor state indices of `i`, in step order.
    fn next(&mut self, i: usize) -> Vec<usize> {
        let targets: Vec<(Term, Key)> =
            self.steps(i).iter().map(|s| (s.residual.clone(), s.residual_key.clone())).collect();
        targets.into_iter().map(|(t, k)| self.intern(&t, k)).collect()
    }
}

/// Breadth-first search from `t`; `expand` decides whether a state's
/// successors are explored, `stop` ends the search with a verdict.
fn search(
    t: &Term,
    limit: usize,
    expand: impl Fn(&Term) -> bool,
    stop: impl Fn(&Term, bool) -> Option<Verdict>,
    exhausted: Verdict,
) -> Verdict {
    let mut ex = Explorer::new();
    let root = ex.root(t);
    let mut queue = VecDeque::from([root]);
    let mut queued = vec![true];
    while let Some(i) = queue.pop_front() {
        let state = ex.states[i].clone();
        let can_expand = expand(&state);
        let next = if can_expand { ex.next(i) } else { Vec::new() };
        let deadlock = can_expand && next.is_empty();
        if let Some(v) = stop(&state, deadlock) {
            return v;
        }
        for j in next {
            if j >= queued.len() {
                queued.resize(j + 1, false);
            }
            if !queued[j] {
                queued[j] = true;
                queue.push_back(j);
            }
        }
        if ex.states.len() > limit {
            return Verdict::BoundExceeded;
        }
    }
    exhausted
}

/// May `t` reach a successful state?
pub fn reach_success(t: &Term, limit: usize) -> Verdict {
    search(t, limit, |_| true, |s, _| has_success(s).then_some(Verdict::True), Verdict::False)
}

/// Does every finite maximal execution of `t` pass through a successful
/// state? Successful states are not expanded; the answer is FALSE iff an
/// unsuccessful deadlock is reachable through unsuccessful states.
pub fn must_reach_success_finite(t: &Term, limit: usize) -> Verdict {
    search(t, limit, |s| !has_success(s), |_, deadlock| deadlock.then_some(Verdict::False), Verdict::True)
}

/// Sorted keys of the top-level parallel components of a canonical state,
/// or `None` when the state has a top-level restriction (or is a join
/// solution), where plain multiset inclusion says nothing.
fn components(t: &Term) -> Option<Vec<Key>> {
    if t.calculus == Calculus::Join {
        return None;
    }
    let parts: Vec<&Proc> = match &t.proc {
        Proc::Res(..) => return None,
        Proc::Nil => Vec::new(),
        Proc::Par(ps) => ps.iter().collect(),
        p => vec![p],
    };
    let mut keys: Vec<Key> = parts.into_iter().map(|p| canonical_key(&Term::new(t.calculus, p.clone()))).collect();
    keys.sort();
    Some(keys)
}

/// Strict sub-multiset test on sorted lists.
fn strictly_within(small: &[Key], big: &[Key]) -> bool {
    if small.len() >= big.len() {
        return false;
    }
    let mut j = 0;
    for k in small {
        while j < big.len() && big[j] < *k {
            j += 1;
        }
        if j == big.len() || big[j] != *k {
            return false;
        }
        j += 1;
    }
    true
}

/// Is every execution of `t` finite? FALSE on a reachable cycle (including
/// a step back to the same congruence class) and on growth: a state that
/// reaches itself in parallel with something more. Reduction is closed
/// under parallel composition, so such a path repeats forever.
pub fn is_convergent(t: &Term, limit: usize) -> Verdict {
    let mut ex = Explorer::new();
    let root = ex.root(t);
    let mut parts: Vec<Option<Option<Vec<Key>>>> = Vec::new();
    let mut parts_of = |ex: &Explorer, i: usize| -> Option<Vec<Key>> {
        if i >= parts.len() {
            parts.resize(i + 1, None);
        }
        parts[i].get_or_insert_with(|| components(&ex.states[i])).clone()
    };
    // iterative DFS with colours: 0 new, 1 on stack, 2 done
    let mut colour: Vec<u8> = vec![0];
    let mut stack: Vec<(usize, Vec<usize>, usize)> = Vec::new();
    colour[0] = 1;
    let first = ex.next(root);
    stack.push((root, first, 0));
    let mut truncated = false;
    while let Some((_, next, pos)) = stack.last_mut() {
        if *pos == next.len() {
            let (i, _, _) = stack.pop().unwrap();
            colour[i] = 2;
            continue;
        }
        let j = next[*pos];
        *pos += 1;
        if j >= colour.len() {
            colour.resize(j + 1, 0);
        }
        match colour[j] {
            1 => return Verdict::False,
            2 => {}
            _ => {
                if let Some(big) = parts_of(&ex, j) {
                    let ancestors: Vec<usize> = stack.iter().map(|(i, _, _)| *i).collect();
                    for a in ancestors {
                        if parts_of(&ex, a).is_some_and(|small| strictly_within(&small, &big)) {
                            return Verdict::False;
                        }
                    }
                }
                if ex.states.len() > limit {
                    truncated = true;
                    colour[j] = 2;
                    continue;
                }
                colour[j] = 1;
                let nj = ex.next(j);
                stack.push((j, nj, 0));
            }
        }
    }
    if truncated {
        Verdict::BoundExceeded
    } else {
        Verdict::True
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum End {
    /// No step is possible: a finite maximal execution.
    Deadlock,
    /// The next state repeats one on the path; the execution can be
    /// continued forever around the loop.
    Cycle,
    /// Depth or execution bound reached.
    Truncated,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Execution {
    /// Step ids, each relative to the state it is taken from.
    pub steps: Vec<usize>,
    pub consumed: Vec<Vec<Consumed>>,
    pub end: End,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Executions {
    pub runs: Vec<Execution>,
    /// False when `max_runs` cut the enumeration short.
    pub complete: bool,
}

impl Executions {
    pub fn finite(&self) -> impl Iterator<Item = &Execution> {
        self.runs.iter().filter(|e| e.end == End::Deadlock)
    }
}

/// All maximal executions up to `depth` steps, in step order. Lassos are
/// reported once, ending in [`End::Cycle`].
pub fn maximal_executions(t: &Term, depth: usize) -> Executions {
    maximal_executions_bounded(t, depth, DEFAULT_STATE_LIMIT)
}

pub fn maximal_executions_bounded(t: &Term, depth: usize, max_runs: usize) -> Executions {
    let mut ex = Explorer::new();
    let root = ex.root(t);
    let mut out = Executions { runs: Vec::new(), complete: true };
    let mut path_states = vec![root];
    let mut path_steps: Vec<(usize, Vec<Consumed>)> = Vec::new();
    walk(&mut ex, depth, max_runs, &mut path_states, &mut path_steps, &mut out);
    out
}

fn walk(
    ex: &mut Explorer,
    depth: usize,
    max_runs: usize,
    states: &mut Vec<usize>,
    steps: &mut Vec<(usize, Vec<Consumed>)>,
    out: &mut Executions,
) {
    if out.runs.len() >= max_runs {
        out.complete = false;
        return;
    }
    let emit = |steps: &[(usize, Vec<Consumed>)], end: End, out: &mut Executions| {
        out.runs.push(Execution {
            steps: steps.iter().map(|s| s.0).collect(),
            consumed: steps.iter().map(|s| s.1.clone()).collect(),
            end,
        });
    };
    let cur = *states.last().unwrap();
    let next = ex.next(cur);
    if next.is_empty() {
        emit(steps, End::Deadlock, out);
        return;
    }
    if steps.len() >= depth {
        emit(steps, End::Truncated, out);
        return;
    }
    let consumed: Vec<Vec<Consumed>> = ex.steps(cur).iter().map(|s| s.consumed.clone()).collect();
    for (k, j) in next.into_iter().enumerate() {
        steps.push((k, consumed[k].clone()));
        if states.contains(&j) {
            emit(steps, End::Cycle, out);
        } else {
            states.push(j);
            walk(ex, depth, max_runs, states, steps, out);
            states.pop();
        }
        steps.pop();
        if !out.complete {
            return;
        }
    }
}
