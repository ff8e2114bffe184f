//! Detection of the synchronisation patterns M (three steps, `b` in conflict
//! with parallel `a` and `c`) and ⋆ (a five-cycle of conflicts whose
//! non-adjacent pairs run in parallel).

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::analysis::{PairKind, RelationMatrix};
use crate::congruence::{label_sequence, Key};
use crate::parser::render;
use crate::semantics::{enumerate_steps, Step, StepSet, DEFAULT_UNFOLD};
use crate::syntax::{Label, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Locality {
    Local,
    NonLocal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Symmetry {
    Symmetric,
    Asymmetric,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MWitness {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub locality: Locality,
    /// Symmetry of the conflicts `b`–`a` and `b`–`c`.
    pub conflict_symmetry: (Symmetry, Symmetry),
    pub b_uses_open: bool,
}

impl MWitness {
    pub fn symmetric(&self) -> bool {
        self.conflict_symmetry == (Symmetry::Symmetric, Symmetry::Symmetric)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GreatMWitness {
    /// Steps in cycle order; `cycle[i]` conflicts with `cycle[(i + 1) % 5]`.
    pub cycle: [usize; 5],
    pub conflict_edges: [Symmetry; 5],
    pub locality: Locality,
}

/// Everything the detectors need about one term, computed once.
pub struct Analysis {
    pub steps: StepSet,
    pub matrix: RelationMatrix,
    /// Residual identity used for "pairwise different": canonical key plus
    /// the multiset of surviving capability labels.
    identity: Vec<(Key, Vec<Label>)>,
}

impl Analysis {
    pub fn new(t: &Term) -> Analysis {
        Analysis::from_steps(enumerate_steps(t, DEFAULT_UNFOLD))
    }

    pub fn from_steps(steps: StepSet) -> Analysis {
        let matrix = RelationMatrix::compute(&steps);
        let identity = steps
            .steps
            .iter()
            .map(|s| {
                let mut labels = label_sequence(&s.residual.proc);
                labels.sort();
                (s.residual_key.clone(), labels)
            })
            .collect();
        Analysis { steps, matrix, identity }
    }

    pub fn step(&self, i: usize) -> &Step {
        &self.steps.steps[i]
    }

    fn different(&self, i: usize, j: usize) -> bool {
        self.identity[i] != self.identity[j]
    }

    fn conflict(&self, i: usize, j: usize, allow_asym: bool) -> Option<Symmetry> {
        match self.matrix.get(i, j).kind {
            PairKind::ConflictSymmetric => Some(Symmetry::Symmetric),
            PairKind::ConflictAsymmetric { .. } if allow_asym => Some(Symmetry::Asymmetric),
            _ => None,
        }
    }

    fn parallel(&self, i: usize, j: usize) -> Option<Locality> {
        match self.matrix.get(i, j).kind {
            PairKind::ParallelDistributable => Some(Locality::NonLocal),
            PairKind::ParallelLocal => Some(Locality::Local),
            _ => None,
        }
    }

    pub fn find_m(&self, allow_asym: bool, nonlocal_only: bool) -> Vec<MWitness> {
        let n = self.steps.steps.len();
        let mut out = Vec::new();
        for b in 0..n {
            let partners: Vec<(usize, Symmetry)> =
                (0..n).filter(|&x| x != b).filter_map(|x| self.conflict(b, x, allow_asym).map(|s| (x, s))).collect();
            for (i, &(a, sa)) in partners.iter().enumerate() {
                for &(c, sc) in &partners[i + 1..] {
                    let Some(locality) = self.parallel(a, c) else { continue };
                    if nonlocal_only && locality != Locality::NonLocal {
                        continue;
                    }
                    if !(self.different(a, b) && self.different(b, c) && self.different(a, c)) {
                        continue;
                    }
                    out.push(MWitness {
                        a,
                        b,
                        c,
                        locality,
                        conflict_symmetry: (sa, sc),
                        b_uses_open: self.step(b).axiom.is_open(),
                    });
                }
            }
        }
        out.sort_by_key(|w| (w.a, w.b, w.c));
        out
    }

    /// Five-cycles, each reported once: `cycle[0]` is the smallest id and
    /// `cycle[1] < cycle[4]`.
    pub fn find_great_m(&self, allow_asym: bool, nonlocal_only: bool) -> Vec<GreatMWitness> {
        let n = self.steps.steps.len();
        let adj: Vec<Vec<usize>> =
            (0..n).map(|i| (0..n).filter(|&j| j != i && self.conflict(i, j, allow_asym).is_some()).collect()).collect();
        let mut out = Vec::new();
        let mut path = Vec::with_capacity(5);
        for a in 0..n {
            path.clear();
            path.push(a);
            self.extend_cycle(&adj, &mut path, allow_asym, nonlocal_only, &mut out);
        }
        out
    }

    fn extend_cycle(
        &self,
        adj: &[Vec<usize>],
        path: &mut Vec<usize>,
        allow_asym: bool,
        nonlocal_only: bool,
        out: &mut Vec<GreatMWitness>,
    ) {
        let last = *path.last().unwrap();
        if path.len() == 5 {
            let first = path[0];
            if path[1] > path[4] || self.conflict(last, first, allow_asym).is_none() {
                return;
            }
            let mut locality = Locality::NonLocal;
            for (x, y) in [(0, 2), (0, 3), (1, 3), (1, 4), (2, 4)] {
                if self.parallel(path[x], path[y]) == Some(Locality::Local) {
                    locality = Locality::Local;
                }
            }
            if nonlocal_only && locality == Locality::Local {
                return;
            }
            let cycle = [path[0], path[1], path[2], path[3], path[4]];
            let conflict_edges =
                std::array::from_fn(|i| self.conflict(cycle[i], cycle[(i + 1) % 5], allow_asym).unwrap());
            out.push(GreatMWitness { cycle, conflict_edges, locality });
            return;
        }
        for &next in &adj[last] {
            if next <= path[0] || path.contains(&next) {
                continue;
            }
            // every earlier non-neighbour must run in parallel with `next`
            let ok = path[..path.len() - 1].iter().enumerate().all(|(k, &p)| {
                let neighbour_of_closing = k == 0 && path.len() == 4;
                if neighbour_of_closing {
                    true
                } else {
                    self.parallel(p, next).is_some()
                }
            }) && path.iter().all(|&p| self.different(p, next));
            if ok {
                path.push(next);
                self.extend_cycle(adj, path, allow_asym, nonlocal_only, out);
                path.pop();
            }
        }
    }

    /// Graphviz rendering of the steps out of the term, with conflict edges
    /// between step targets (red: symmetric, orange: asymmetric, pointing
    /// away from the disabler) and, for parallel pairs, the joint reduct.
    pub fn to_dot(&self, highlight: &[usize]) -> String {
        let mut nodes: HashMap<Key, usize> = HashMap::new();
        let mut lines = Vec::new();
        let mut node = |key: &Key, term: &Term, lines: &mut Vec<String>| -> usize {
            if let Some(&i) = nodes.get(key) {
                return i;
            }
            let i = nodes.len();
            nodes.insert(key.clone(), i);
            lines.push(format!("  s{i} [label={}];", quote(&render(term))));
            i
        };
        let source = &self.steps.source;
        let src_key = crate::congruence::canonical_key(source);
        let src = node(&src_key, source, &mut lines);
        let mut targets = Vec::new();
        for s in &self.steps.steps {
            let dst = node(&s.residual_key, &s.residual, &mut lines);
            targets.push(dst);
            let bold = if highlight.contains(&s.id) { ", penwidth=2" } else { "" };
            lines.push(format!("  s{src} -> s{dst} [label={}{bold}];", quote(&format!("{}:{}", s.id, s.axiom))));
        }
        for r in self.matrix.pairs() {
            let (i, j) = (r.first, r.second);
            match &r.kind {
                PairKind::ConflictSymmetric => lines.push(format!(
                    "  s{} -> s{} [dir=none, style=dashed, color=red, constraint=false];",
                    targets[i], targets[j]
                )),
                PairKind::ConflictAsymmetric { disablers } => {
                    for &d in disablers {
                        let other = if d == i { j } else { i };
                        lines.push(format!(
                            "  s{} -> s{} [style=dashed, color=orange, constraint=false];",
                            targets[d], targets[other]
                        ));
                    }
                }
                PairKind::ParallelDistributable | PairKind::ParallelLocal => {
                    let si = self.step(i);
                    let sj = self.step(j);
                    let after = enumerate_steps(&si.residual, DEFAULT_UNFOLD);
                    if let Some(joint) = after.steps.iter().find(|x| x.consumed == sj.consumed) {
                        let d = node(&joint.residual_key, &joint.residual, &mut lines);
                        lines.push(format!("  s{} -> s{d} [label={}, color=gray];", targets[i], quote(&j.to_string())));
                        lines.push(format!("  s{} -> s{d} [label={}, color=gray];", targets[j], quote(&i.to_string())));
                    }
                }
            }
        }
        let mut out = String::from("digraph steps {\n  node [shape=box, fontname=monospace];\n");
        for l in lines {
            let _ = writeln!(out, "{l}");
        }
        out.push_str("}\n");
        out
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn find_m(t: &Term, allow_asym: bool, nonlocal_only: bool) -> Vec<MWitness> {
    Analysis::new(t).find_m(allow_asym, nonlocal_only)
}

pub fn find_great_m(t: &Term, allow_asym: bool, nonlocal_only: bool) -> Vec<GreatMWitness> {
    Analysis::new(t).find_great_m(allow_asym, nonlocal_only)
}
