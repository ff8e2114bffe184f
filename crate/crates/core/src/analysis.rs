//! Pairwise step relations, decomposition into distributable components, and
//! execution-level classification.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::congruence::{canonicalize, label_sequence};
use crate::semantics::{enabled_consumed, enumerate_steps, extend_labels, Consumed, Step, StepSet, DEFAULT_UNFOLD};
use crate::syntax::{capabilities, children, freshen_binders, Calculus, CapKind, Label, NameSupply, Proc, Term};
use crate::Error;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PairKind {
    ConflictSymmetric,
    /// Not a symmetric conflict, but performing a `disabler` disables the
    /// other step. Two disablers means mutual disabling without a shared
    /// capability that is non-recurrent in both steps.
    ConflictAsymmetric {
        disablers: Vec<usize>,
    },
    ParallelDistributable,
    ParallelLocal,
}

impl PairKind {
    pub fn is_conflict(&self) -> bool {
        matches!(self, PairKind::ConflictSymmetric | PairKind::ConflictAsymmetric { .. })
    }

    pub fn is_parallel(&self) -> bool {
        !self.is_conflict()
    }

    pub fn name(&self) -> &'static str {
        match self {
            PairKind::ConflictSymmetric => "CONFLICT_SYMMETRIC",
            PairKind::ConflictAsymmetric { .. } => "CONFLICT_ASYMMETRIC",
            PairKind::ParallelDistributable => "PARALLEL_DISTRIBUTABLE",
            PairKind::ParallelLocal => "PARALLEL_LOCAL",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SharedLabel {
    pub label: Label,
    pub kind: CapKind,
    pub recurrent_first: bool,
    pub recurrent_second: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairRelation {
    pub first: usize,
    pub second: usize,
    #[serde(flatten)]
    pub kind: PairKind,
    pub shared: Vec<SharedLabel>,
}

/// Which recurrent capabilities may be shared by distributable steps.
pub fn distributable_recurrent(kind: CapKind) -> bool {
    kind == CapKind::Replication
}

/// Labels consumed by both steps. Speculative copies are never shared: two
/// steps that each use "a fresh copy" use different copies.
pub fn shared_labels(c1: &[Consumed], c2: &[Consumed]) -> Vec<SharedLabel> {
    let mut out = Vec::new();
    for a in c1.iter().filter(|c| !c.label.is_fresh_copy()) {
        for b in c2.iter().filter(|c| c.label == a.label) {
            out.push(SharedLabel {
                label: a.label.clone(),
                kind: a.kind,
                recurrent_first: a.recurrent,
                recurrent_second: b.recurrent,
            });
        }
    }
    out
}

fn symmetric(shared: &[SharedLabel]) -> bool {
    shared.iter().any(|s| !s.recurrent_first && !s.recurrent_second)
}

/// Parallel kind from the shared labels: distributable iff every shared
/// label is a distributable recurrent operator in both steps.
fn parallel_kind(shared: &[SharedLabel]) -> PairKind {
    if shared.iter().all(|s| s.recurrent_first && s.recurrent_second && distributable_recurrent(s.kind)) {
        PairKind::ParallelDistributable
    } else {
        PairKind::ParallelLocal
    }
}

/// Classifies two alternative steps of `t`.
pub fn classify_pair(t: &Term, s1: &Step, s2: &Step) -> Result<PairRelation, Error> {
    let enabled = enabled_consumed(t, DEFAULT_UNFOLD);
    if !enabled.contains(&s1.consumed) || !enabled.contains(&s2.consumed) {
        return Err(Error::NotAlternative);
    }
    // branches of one sum may consume the same labels; the residual tells them apart
    if s1.consumed == s2.consumed && s1.residual_key == s2.residual_key {
        return Err(Error::NotAlternative);
    }
    let after1 = enabled_consumed(&s1.residual, DEFAULT_UNFOLD);
    let after2 = enabled_consumed(&s2.residual, DEFAULT_UNFOLD);
    Ok(relate(s1, s2, &after1, &after2))
}

/// Classification given the consumed multisets enabled after each step.
pub fn relate(s1: &Step, s2: &Step, after1: &[Vec<Consumed>], after2: &[Vec<Consumed>]) -> PairRelation {
    let shared = shared_labels(&s1.consumed, &s2.consumed);
    let kind = if symmetric(&shared) {
        PairKind::ConflictSymmetric
    } else {
        let mut disablers = Vec::new();
        if !after1.contains(&s2.consumed) {
            disablers.push(s1.id);
        }
        if !after2.contains(&s1.consumed) {
            disablers.push(s2.id);
        }
        if disablers.is_empty() {
            parallel_kind(&shared)
        } else {
            PairKind::ConflictAsymmetric { disablers }
        }
    };
    PairRelation { first: s1.id, second: s2.id, kind, shared }
}

/// Relations of all pairs of a step set, indexed `[i][j]` for `i != j`.
#[derive(Clone, Debug)]
pub struct RelationMatrix {
    pub n: usize,
    rel: Vec<Option<PairRelation>>,
}

impl RelationMatrix {
    pub fn compute(ss: &StepSet) -> RelationMatrix {
        let n = ss.steps.len();
        let after: Vec<Vec<Vec<Consumed>>> =
            ss.steps.iter().map(|s| enabled_consumed(&s.residual, DEFAULT_UNFOLD)).collect();
        let mut rel = vec![None; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let r = relate(&ss.steps[i], &ss.steps[j], &after[i], &after[j]);
                let mut rev = r.clone();
                rev.first = j;
                rev.second = i;
                for s in &mut rev.shared {
                    std::mem::swap(&mut s.recurrent_first, &mut s.recurrent_second);
                }
                rel[i * n + j] = Some(r);
                rel[j * n + i] = Some(rev);
            }
        }
        RelationMatrix { n, rel }
    }

    pub fn get(&self, i: usize, j: usize) -> &PairRelation {
        self.rel[i * self.n + j].as_ref().expect("distinct steps")
    }

    /// All unordered pairs, `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = &PairRelation> {
        (0..self.n).flat_map(move |i| ((i + 1)..self.n).map(move |j| self.get(i, j)))
    }
}

// ---------------------------------------------------------------------------
// decomposition

#[derive(Clone, Debug)]
pub struct Distribution {
    pub components: Vec<Term>,
    /// The congruent rearrangement the components are read off.
    pub witness: Term,
}

/// Serialised as the component count, or the string `"UNBOUNDED"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Degree {
    Finite(usize),
    Unbounded,
}

impl Serialize for Degree {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Degree::Finite(n) => s.serialize_u64(*n as u64),
            Degree::Unbounded => s.serialize_str("UNBOUNDED"),
        }
    }
}

impl<'de> Deserialize<'de> for Degree {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Degree, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(usize),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(n) => Ok(Degree::Finite(n)),
            Raw::Word(w) if w == "UNBOUNDED" => Ok(Degree::Unbounded),
            Raw::Word(w) => Err(serde::de::Error::custom(format!("bad degree `{w}`"))),
        }
    }
}

/// Maximal decomposition into top-level components (join: heated solution
/// members), after unfolding every top-level replication `unfold` times.
pub fn decompose(t: &Term, unfold: usize) -> Distribution {
    let mut witness = canonicalize(t);
    if unfold > 0 {
        let mut supply = NameSupply::for_proc(&witness.proc);
        let p = unfold_top(&witness.proc, unfold as u32, &mut supply);
        witness = canonicalize(&Term::new(t.calculus, p));
    }
    let components = top_components(&witness.proc, t.calculus).into_iter().map(|p| Term::new(t.calculus, p)).collect();
    Distribution { components, witness }
}

fn unfold_top(p: &Proc, k: u32, supply: &mut NameSupply) -> Proc {
    match p {
        Proc::Res(n, b) => Proc::Res(n.clone(), Box::new(unfold_top(b, k, supply))),
        Proc::Par(ps) => Proc::Par(ps.iter().map(|q| unfold_top(q, k, supply)).collect()),
        Proc::Rep { label, copies, body } => {
            let mut items = Vec::new();
            for i in 0..k {
                items.push(freshen_binders(&extend_labels(body, copies + i), supply));
            }
            items.push(Proc::Rep { label: label.clone(), copies: copies + k, body: body.clone() });
            Proc::Par(items)
        }
        other => other.clone(),
    }
}

fn top_components(p: &Proc, calculus: Calculus) -> Vec<Proc> {
    let mut cur = p;
    while let Proc::Res(_, b) = cur {
        cur = b;
    }
    let mut out = Vec::new();
    if calculus == Calculus::Join {
        while let Proc::Def { label, copies, rules, body } = cur {
            out.push(Proc::Def {
                label: label.clone(),
                copies: *copies,
                rules: rules.clone(),
                body: Box::new(Proc::Nil),
            });
            cur = body;
        }
    }
    match cur {
        Proc::Nil => {}
        Proc::Par(ps) => out.extend(ps.iter().cloned()),
        other => out.push(other.clone()),
    }
    out
}

pub fn degree_of_distributability(t: &Term) -> Degree {
    let d = decompose(t, 0);
    let unbounded = top_components(&d.witness.proc, t.calculus)
        .iter()
        .any(|c| matches!(c, Proc::Rep { body, .. } if !body.is_nil()));
    if unbounded {
        Degree::Unbounded
    } else {
        Degree::Finite(d.components.len())
    }
}

fn success_count(p: &Proc) -> usize {
    usize::from(matches!(p, Proc::Success)) + children(p).into_iter().map(success_count).sum::<usize>()
}

/// Mechanical check of the three distributability conditions: every
/// component carries a capability or a non-0 constant; no capability
/// occurrence is split across components; components cover the witness.
pub fn check_distribution(d: &Distribution) -> Result<(), String> {
    let mut seen: BTreeMap<Label, usize> = BTreeMap::new();
    let mut oks = 0;
    for (i, c) in d.components.iter().enumerate() {
        let caps = capabilities(c);
        let s = success_count(&c.proc);
        if caps.is_empty() && s == 0 {
            return Err(format!("component {i} has no capability or constant"));
        }
        for (l, _) in caps {
            if let Some(j) = seen.insert(l.clone(), i) {
                return Err(format!("capability {l} occurs in components {j} and {i}"));
            }
        }
        oks += s;
    }
    let mut all: Vec<Label> = label_sequence(&d.witness.proc);
    all.sort();
    let covered: Vec<Label> = seen.into_keys().collect();
    if all != covered {
        return Err("components do not cover the capabilities of the witness".into());
    }
    if oks != success_count(&d.witness.proc) {
        return Err("components do not cover the success constants of the witness".into());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// executions

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExecutionRelation {
    Conflict,
    ParallelLocal,
    ParallelDistributable,
}

/// Replays an execution from `t`, returning the final state.
pub fn replay(t: &Term, e: &[Step]) -> Result<Term, Error> {
    let mut state = t.clone();
    for (i, s) in e.iter().enumerate() {
        let next = enumerate_steps(&state, DEFAULT_UNFOLD)
            .steps
            .into_iter()
            .find(|c| c.consumed == s.consumed && c.residual_key == s.residual_key)
            .ok_or(Error::NotReplayable(i))?;
        state = next.residual;
    }
    Ok(state)
}

/// Relates two executions of `t` by the capabilities their steps reduce.
pub fn classify_executions(t: &Term, e1: &[Step], e2: &[Step]) -> Result<ExecutionRelation, Error> {
    replay(t, e1)?;
    replay(t, e2)?;
    let mut all_distributable = true;
    for a in e1 {
        for b in e2 {
            let shared = shared_labels(&a.consumed, &b.consumed);
            if symmetric(&shared) {
                return Ok(ExecutionRelation::Conflict);
            }
            if parallel_kind(&shared) != PairKind::ParallelDistributable {
                all_distributable = false;
            }
        }
    }
    Ok(if all_distributable { ExecutionRelation::ParallelDistributable } else { ExecutionRelation::ParallelLocal })
}
