//! Bounded, exhaustive checks of the pattern lemmas over small ambient
//! terms, plus slow-path cross-checks of the step semantics and of the
//! conflict classification.

pub mod count;
pub mod enumerate;
pub mod generate;
pub mod slow;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::PairKind;
use crate::parser::render;
use crate::patterns::{Analysis, GreatMWitness, Locality, MWitness};
use crate::reachability::{maximal_executions, DEFAULT_DEPTH};
use crate::semantics::{enabled_consumed, enumerate_steps, DEFAULT_UNFOLD};
use crate::syntax::{Calculus, Term};
use crate::Error;

pub use enumerate::{enumerate_terms, for_each_term};

pub const BANNER: &str = "bounded check: evidence, not proof";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EnumSpec {
    pub max_operators: usize,
    pub name_pool: usize,
    pub allow_restriction: bool,
    pub allow_replication: bool,
    pub calculus: Calculus,
}

impl EnumSpec {
    pub fn new(calculus: Calculus, max_operators: usize) -> EnumSpec {
        EnumSpec { max_operators, name_pool: 3, allow_restriction: false, allow_replication: false, calculus }
    }

    fn plain(&self) -> bool {
        !self.allow_restriction && !self.allow_replication
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub term: String,
    pub witness: MWitness,
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    pub banner: &'static str,
    pub terms_checked: u64,
    pub witnesses_found: u64,
    pub violations: Vec<Violation>,
    /// Distinct step structures analysed (skeletons, or terms when no
    /// factorisation applies).
    pub shapes_analysed: u64,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl LemmaReport {
    fn empty() -> LemmaReport {
        LemmaReport {
            banner: BANNER,
            terms_checked: 0,
            witnesses_found: 0,
            violations: Vec::new(),
            shapes_analysed: 0,
            wall_time: Duration::ZERO,
        }
    }

    fn merge(&mut self, other: LemmaReport) {
        self.terms_checked += other.terms_checked;
        self.witnesses_found += other.witnesses_found;
        self.shapes_analysed += other.shapes_analysed;
        self.violations.extend(other.violations);
    }
}

/// What a lemma check does with one term: its M witnesses and which of
/// them are violations.
type Verdict = fn(&Analysis) -> (Vec<MWitness>, Vec<MWitness>);

fn lemma3_verdict(an: &Analysis) -> (Vec<MWitness>, Vec<MWitness>) {
    let ws = an.find_m(true, false);
    let bad = ws.iter().filter(|w| w.symmetric() && !w.b_uses_open).cloned().collect();
    (ws, bad)
}

fn corollary_verdict(an: &Analysis) -> (Vec<MWitness>, Vec<MWitness>) {
    let ws = an.find_m(false, false);
    (ws.clone(), ws)
}

fn check_one(t: &Term, weight: u64, verdict: Verdict) -> LemmaReport {
    let mut r = LemmaReport::empty();
    r.terms_checked = weight;
    r.shapes_analysed = 1;
    // an M needs three alternative steps
    if enabled_consumed(t, DEFAULT_UNFOLD).len() < 3 {
        return r;
    }
    let an = Analysis::new(t);
    let (ws, bad) = verdict(&an);
    r.witnesses_found = ws.len() as u64 * weight;
    r.violations = bad.into_iter().map(|w| Violation { term: render(t), witness: w }).collect();
    r
}

const BATCH: usize = 4096;

fn run_batches(items: &mut Vec<(Term, u64)>, verdict: Verdict, acc: &mut LemmaReport) {
    let parts: Vec<LemmaReport> = items.par_iter().map(|(t, w)| check_one(t, *w, verdict)).collect();
    for p in parts {
        acc.merge(p);
    }
    items.clear();
}

fn check_universe(spec: &EnumSpec, unique: bool, verdict: Verdict) -> Result<LemmaReport, Error> {
    if spec.calculus != Calculus::Ma {
        return Err(Error::WrongCalculus { expected: Calculus::Ma, found: spec.calculus });
    }
    let start = Instant::now();
    let mut acc = LemmaReport::empty();
    let mut batch: Vec<(Term, u64)> = Vec::with_capacity(BATCH);
    if spec.plain() {
        // the step structure, conflicts and witnesses of a term are those
        // of its skeleton: continuations are inert until their prefix fires
        let tables = enumerate::Tables::new(spec, true, unique);
        tables.stream_all(&mut |b| {
            if unique && b.dup {
                return;
            }
            let w = tables.completions(&b, unique);
            batch.push((tables.term(b.proc), w));
            if batch.len() == BATCH {
                run_batches(&mut batch, verdict, &mut acc);
            }
        });
    } else {
        for_each_term(spec, &mut |t| {
            if unique && !unique_ambient_names(&t) {
                return;
            }
            batch.push((t, 1));
            if batch.len() == BATCH {
                run_batches(&mut batch, verdict, &mut acc);
            }
        });
    }
    run_batches(&mut batch, verdict, &mut acc);
    acc.wall_time = start.elapsed();
    Ok(acc)
}

/// Checks on every term of the universe that each M witness (asymmetric
/// conflicts admitted) has an asymmetric conflict or a `b` that opens.
pub fn check_lemma3(spec: &EnumSpec) -> Result<LemmaReport, Error> {
    check_universe(spec, false, lemma3_verdict)
}

/// The same check on an explicit list of terms.
pub fn check_lemma3_terms(terms: &[Term]) -> LemmaReport {
    let mut acc = LemmaReport::empty();
    for t in terms {
        acc.merge(check_one(t, 1, lemma3_verdict));
    }
    acc
}

/// With pairwise distinct ambient names there is no M with two symmetric
/// conflicts; every strict witness is a violation.
pub fn check_corollary_unique_names(spec: &EnumSpec) -> Result<LemmaReport, Error> {
    check_universe(spec, true, corollary_verdict)
}

pub fn unique_ambient_names(t: &Term) -> bool {
    fn go(p: &crate::Proc, seen: &mut BTreeSet<crate::Name>) -> bool {
        if let crate::Proc::Amb { name, .. } = p {
            if !seen.insert(name.clone()) {
                return false;
            }
        }
        crate::syntax::children(p).into_iter().all(|c| go(c, seen))
    }
    go(&t.proc, &mut BTreeSet::new())
}

/// Is there an execution of `t` performing three of the witness's five
/// steps? Steps are identified by the capabilities they consume.
pub fn check_lemma5(t: &Term, w: &GreatMWitness) -> Result<bool, Error> {
    let an = Analysis::new(t);
    let n = an.steps.steps.len();
    if let Some(&bad) = w.cycle.iter().find(|&&i| i >= n) {
        return Err(Error::WitnessReplay(format!("no step {bad}")));
    }
    for i in 0..5 {
        let (x, y) = (w.cycle[i], w.cycle[(i + 1) % 5]);
        if !an.matrix.get(x, y).kind.is_conflict() {
            return Err(Error::WitnessReplay(format!("steps {x} and {y} are not in conflict")));
        }
    }
    let wanted: Vec<_> = w.cycle.iter().map(|&i| an.step(i).consumed.clone()).collect();
    let runs = maximal_executions(t, DEFAULT_DEPTH);
    Ok(runs.runs.iter().any(|e| {
        let hit: BTreeSet<usize> = e.consumed.iter().filter_map(|c| wanted.iter().position(|x| x == c)).collect();
        hit.len() >= 3
    }))
}

/// Every M witness of every term has to be local.
pub fn check_join_locality(corpus: &[Term]) -> Result<LemmaReport, Error> {
    if let Some(t) = corpus.iter().find(|t| t.calculus != Calculus::Join) {
        return Err(Error::WrongCalculus { expected: Calculus::Join, found: t.calculus });
    }
    let start = Instant::now();
    let mut acc = LemmaReport::empty();
    for t in corpus {
        let an = Analysis::new(t);
        let ws = an.find_m(true, false);
        acc.terms_checked += 1;
        acc.shapes_analysed += 1;
        acc.witnesses_found += ws.len() as u64;
        acc.violations.extend(
            ws.into_iter()
                .filter(|w| w.locality == Locality::NonLocal)
                .map(|w| Violation { term: render(t), witness: w }),
        );
    }
    acc.wall_time = start.elapsed();
    Ok(acc)
}

// ---------------------------------------------------------------------------
// cross-checks

#[derive(Clone, Debug, Default, Serialize)]
pub struct CrossCheck {
    pub terms: usize,
    pub compared: usize,
    pub discrepancies: Vec<String>,
}

/// Fast and slow step relations agree on (consumed, residual) pairs.
pub fn semantics_agreement(terms: &[Term]) -> CrossCheck {
    let mut out = CrossCheck { terms: terms.len(), ..Default::default() };
    for t in terms {
        let fast: BTreeSet<_> =
            enumerate_steps(t, DEFAULT_UNFOLD).steps.into_iter().map(|s| (s.consumed, s.residual_key)).collect();
        match slow::slow_steps(t) {
            Ok(slow) => {
                out.compared += fast.len();
                if fast != slow {
                    out.discrepancies.push(format!(
                        "{}: fast {} steps, slow {} steps",
                        render(t),
                        fast.len(),
                        slow.len()
                    ));
                }
            }
            Err(e) => out.discrepancies.push(format!("{}: {e}", render(t))),
        }
    }
    out
}

/// Symmetric conflict iff each step disables the other (pi and join).
/// Ambients: every asymmetric conflict shares a capability that is
/// recurrent in exactly one of the two steps.
pub fn conflict_agreement(terms: &[Term]) -> CrossCheck {
    let mut out = CrossCheck { terms: terms.len(), ..Default::default() };
    for t in terms {
        let an = Analysis::new(t);
        let after: Vec<Vec<_>> = an.steps.steps.iter().map(|s| enabled_consumed(&s.residual, DEFAULT_UNFOLD)).collect();
        for r in an.matrix.pairs() {
            out.compared += 1;
            let (a, b) = (an.step(r.first), an.step(r.second));
            let ok = if t.calculus.is_ambient() {
                match r.kind {
                    PairKind::ConflictAsymmetric { .. } => {
                        r.shared.iter().any(|s| s.recurrent_first != s.recurrent_second)
                    }
                    _ => true,
                }
            } else {
                let mutual = !after[r.first].contains(&b.consumed) && !after[r.second].contains(&a.consumed);
                (r.kind == PairKind::ConflictSymmetric) == mutual
            };
            if !ok {
                out.discrepancies.push(format!("{}: steps {} and {}: {:?}", render(t), r.first, r.second, r.kind));
            }
        }
    }
    out
}
