//! Bounded enumeration of ambient terms.
//!
//! Terms without restriction and replication are multisets of atoms
//! (`ok`, `n[P]`, `cap n.P`), so canonical-form-distinct terms are exactly
//! the distinct multisets. Atoms are numbered by size; a multiset is a
//! non-decreasing sequence of atom ids. Atoms are materialised up to size
//! `max - 1` and multisets up to size `max - 2`; the two largest sizes are
//! streamed.
//!
//! In skeleton mode every capability continuation is a hole, and each atom
//! carries the generating function of the ways its holes can be filled.
//! A full term has exactly one skeleton (replace every continuation by
//! `0`), so a check whose outcome depends only on the skeleton runs once per
//! skeleton and is weighted by its completion count.

use std::collections::HashSet;

use super::count::{mset_exact, term_counts, Gf};
use crate::congruence::canonical_key;
use crate::syntax::{assign_labels, Calculus, Cap, Name, Proc, Term};

#[derive(Clone, Copy, Debug)]
enum Shape {
    Ok,
    Cap(Cap, u8, u32),
    Amb(u8, u32),
    Rep(u32),
    /// `(nu n) P` binding a pool name.
    Res(u8, u32),
}

#[derive(Clone, Debug)]
struct Atom {
    shape: Shape,
    size: u8,
    /// Ambient names occurring in the atom (skeleton part only).
    mask: u16,
    /// Some ambient name occurs twice.
    dup: bool,
    /// Completion generating function (skeleton mode).
    gf: Option<Gf>,
}

/// A streamed term.
pub struct Built {
    pub proc: Proc,
    pub size: usize,
    pub mask: u16,
    pub dup: bool,
    pub gf: Option<Gf>,
}

pub struct Tables {
    calculus: Calculus,
    max: usize,
    skeleton: bool,
    names: Vec<Name>,
    caps: Vec<Cap>,
    restriction: bool,
    replication: bool,
    atoms: Vec<Atom>,
    /// atoms of size `s` are `atom_start[s]..atom_start[s + 1]`
    atom_start: Vec<usize>,
    terms: Vec<Vec<u32>>,
    term_start: Vec<usize>,
    /// Full-term counts, the completion function of a single hole.
    hole: Option<Gf>,
    masks: usize,
}

impl Tables {
    /// `unique` selects name-tracking completion counts (skeleton mode).
    pub fn new(spec: &super::EnumSpec, skeleton: bool, unique: bool) -> Tables {
        assert!(spec.calculus.is_ambient(), "enumeration covers the ambient calculi");
        let names: Vec<Name> = (1..=spec.name_pool).map(|i| Name::new(&format!("n{i}"))).collect();
        let caps: Vec<Cap> =
            if spec.calculus == Calculus::Sa { Cap::ALL.to_vec() } else { vec![Cap::In, Cap::Out, Cap::Open] };
        let masks = if unique { 1 << spec.name_pool } else { 1 };
        let hole =
            skeleton.then(|| term_counts(spec.max_operators, spec.name_pool, spec.calculus == Calculus::Sa, unique));
        let mut t = Tables {
            calculus: spec.calculus,
            max: spec.max_operators,
            skeleton,
            names,
            caps,
            restriction: spec.allow_restriction,
            replication: spec.allow_replication,
            atoms: Vec::new(),
            atom_start: vec![0, 0],
            terms: vec![Vec::new()],
            term_start: vec![0, 1],
            hole,
            masks,
        };
        t.build();
        t
    }

    fn build(&mut self) {
        let max_atom = self.max.saturating_sub(1).max(self.max.min(1));
        let max_term = self.max.saturating_sub(2);
        for s in 1..=max_atom {
            let mut fresh = Vec::new();
            if s == 1 {
                fresh.push(Shape::Ok);
            }
            let bodies = self.term_start[s - 1]..self.term_start[s];
            for (ci, _) in self.caps.iter().enumerate() {
                for n in 0..self.names.len() {
                    if self.skeleton {
                        if s == 1 {
                            fresh.push(Shape::Cap(self.caps[ci], n as u8, 0));
                        }
                    } else {
                        for b in bodies.clone() {
                            fresh.push(Shape::Cap(self.caps[ci], n as u8, b as u32));
                        }
                    }
                }
            }
            for n in 0..self.names.len() {
                for b in bodies.clone() {
                    fresh.push(Shape::Amb(n as u8, b as u32));
                }
            }
            if self.replication {
                for b in bodies.clone().filter(|&b| !self.terms[b].is_empty()) {
                    fresh.push(Shape::Rep(b as u32));
                }
            }
            if self.restriction {
                for n in 0..self.names.len() {
                    for b in bodies.clone().filter(|&b| !self.terms[b].is_empty()) {
                        fresh.push(Shape::Res(n as u8, b as u32));
                    }
                }
            }
            for shape in fresh {
                let a = self.make_atom(shape, s);
                self.atoms.push(a);
            }
            self.atom_start.push(self.atoms.len());
            if s <= max_term {
                let mut ms = Vec::new();
                self.multisets(s + 1, 0, &mut Vec::new(), &mut |m| ms.push(m.to_vec()));
                self.terms.extend(ms);
                self.term_start.push(self.terms.len());
            }
        }
    }

    fn make_atom(&self, shape: Shape, size: usize) -> Atom {
        let (mask, dup, gf) = match shape {
            Shape::Ok => (0, false, self.skeleton.then(|| Gf::one(self.max, self.masks))),
            Shape::Cap(_, _, b) => {
                let (m, d) = self.term_names(&self.terms[b as usize]);
                (m, d, self.hole.clone())
            }
            Shape::Amb(n, b) => {
                let (m, d) = self.term_names(&self.terms[b as usize]);
                let bit = 1u16 << n;
                let gf = self.skeleton.then(|| self.term_gf(&self.terms[b as usize], self.max - size));
                (m | bit, d || m & bit != 0, gf)
            }
            Shape::Rep(b) | Shape::Res(_, b) => {
                let (m, d) = self.term_names(&self.terms[b as usize]);
                (m, d, None)
            }
        };
        Atom { shape, size: size as u8, mask, dup, gf }
    }

    fn term_names(&self, atoms: &[u32]) -> (u16, bool) {
        let mut mask = 0u16;
        let mut dup = false;
        for &a in atoms {
            let at = &self.atoms[a as usize];
            dup |= at.dup || mask & at.mask != 0;
            mask |= at.mask;
        }
        (mask, dup)
    }

    /// Completion function of a multiset of atoms, truncated at `max`.
    fn term_gf(&self, atoms: &[u32], max: usize) -> Gf {
        let mut g = Gf::one(max, self.masks);
        let mut i = 0;
        while i < atoms.len() {
            let mut j = i;
            while j < atoms.len() && atoms[j] == atoms[i] {
                j += 1;
            }
            let a = self.atoms[atoms[i] as usize].gf.as_ref().expect("skeleton mode");
            g = g.mul(&mset_exact(&a.truncate(max), j - i));
            i = j;
        }
        g
    }

    /// Non-decreasing atom sequences of total weight `w` (atom weight is
    /// size + 1), starting at atom `from`.
    fn multisets(&self, w: usize, from: usize, stack: &mut Vec<u32>, f: &mut dyn FnMut(&[u32])) {
        if w == 0 {
            f(stack);
            return;
        }
        let top = (w - 1).min(self.atom_start.len() - 2);
        let end = self.atom_start[top + 1];
        for a in from..end {
            let aw = self.atoms[a].size as usize + 1;
            if aw > w || w - aw == 1 {
                continue;
            }
            stack.push(a as u32);
            self.multisets(w - aw, a, stack, f);
            stack.pop();
        }
    }

    fn atom_proc(&self, a: u32) -> Proc {
        match self.atoms[a as usize].shape {
            Shape::Ok => Proc::Success,
            Shape::Cap(c, n, b) => Proc::act(c, self.names[n as usize].clone(), self.term_proc(b)),
            Shape::Amb(n, b) => Proc::amb(self.names[n as usize].clone(), self.term_proc(b)),
            Shape::Rep(b) => Proc::rep(self.term_proc(b)),
            Shape::Res(n, b) => Proc::res(self.names[n as usize].clone(), self.term_proc(b)),
        }
    }

    fn term_proc(&self, t: u32) -> Proc {
        self.ms_proc(&self.terms[t as usize])
    }

    fn ms_proc(&self, atoms: &[u32]) -> Proc {
        Proc::par(atoms.iter().map(|&a| self.atom_proc(a)).collect())
    }

    fn built(&self, atoms: &[u32], size: usize) -> Built {
        let (mask, dup) = self.term_names(atoms);
        let gf = self.skeleton.then(|| self.term_gf(atoms, self.max - size));
        Built { proc: self.ms_proc(atoms), size, mask, dup, gf }
    }

    /// Streams every term of exactly `size` operators, in a fixed order.
    pub fn stream(&self, size: usize, f: &mut dyn FnMut(Built)) {
        if size + 1 < self.term_start.len() {
            for t in self.term_start[size]..self.term_start[size + 1] {
                f(self.built(&self.terms[t], size));
            }
            return;
        }
        self.multisets(size + 1, 0, &mut Vec::new(), &mut |m| f(self.built(m, size)));
        if size + 2 > self.atom_start.len() {
            // single atoms that are too large to be materialised
            let mut wrap = |inner: Built| {
                let mut out = Vec::new();
                if !self.skeleton {
                    for &c in &self.caps {
                        for n in &self.names {
                            out.push(Proc::act(c, n.clone(), inner.proc.clone()));
                        }
                    }
                }
                let amb_start = out.len();
                for n in &self.names {
                    out.push(Proc::amb(n.clone(), inner.proc.clone()));
                }
                let amb_end = out.len();
                if !inner.proc.is_nil() {
                    if self.replication {
                        out.push(Proc::rep(inner.proc.clone()));
                    }
                    if self.restriction {
                        for n in &self.names {
                            out.push(Proc::res(n.clone(), inner.proc.clone()));
                        }
                    }
                }
                for (i, p) in out.into_iter().enumerate() {
                    let (mut mask, mut dup) = (inner.mask, inner.dup);
                    if (amb_start..amb_end).contains(&i) {
                        let bit = 1u16 << (i - amb_start);
                        dup |= mask & bit != 0;
                        mask |= bit;
                    }
                    let gf = inner.gf.as_ref().map(|g| g.truncate(self.max - size));
                    f(Built { proc: p, size, mask, dup, gf });
                }
            };
            self.stream(size - 1, &mut wrap);
        }
    }

    /// Streams every term with at most `max` operators, smallest first.
    pub fn stream_all(&self, f: &mut dyn FnMut(Built)) {
        for s in 0..=self.max {
            self.stream(s, f);
        }
    }

    pub fn term(&self, p: Proc) -> Term {
        assign_labels(&Term::new(self.calculus, p))
    }

    /// Number of full terms a skeleton stands for.
    pub fn completions(&self, b: &Built, unique: bool) -> u64 {
        let g = b.gf.as_ref().expect("skeleton mode");
        let avoid = if unique { b.mask as usize } else { 0 };
        g.total(self.max - b.size, avoid)
    }
}

/// Every canonical-form-distinct term within the bounds, smallest first.
/// Materialises the stream; meant for small bounds.
pub fn enumerate_terms(spec: &super::EnumSpec) -> Vec<Term> {
    let mut out = Vec::new();
    for_each_term(spec, &mut |t| out.push(t));
    out
}

/// Streaming form of [`enumerate_terms`].
pub fn for_each_term(spec: &super::EnumSpec, f: &mut dyn FnMut(Term)) {
    let tables = Tables::new(spec, false, false);
    // without binders distinct multisets are distinct canonical forms
    let dedup = spec.allow_restriction || spec.allow_replication;
    let mut seen = HashSet::new();
    tables.stream_all(&mut |b| {
        let t = tables.term(b.proc);
        if dedup && !seen.insert(canonical_key(&t)) {
            return;
        }
        f(t);
    });
}
