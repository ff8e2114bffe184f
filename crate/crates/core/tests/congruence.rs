//! Canonical forms, checked against an independent applier of single
//! congruence rules.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use syncpat::congruence::{canonical_key, canonicalize, congruent};
use syncpat::oracle::generate::random_terms;
use syncpat::parser::{parse, parse_file, render};
use syncpat::semantics::enumerate_steps;
use syncpat::syntax::{
    alpha_eq, capabilities, children, free_names, has_success, proc_free_names, Calculus, Name, Proc, Term,
};

fn ma(s: &str) -> Term {
    parse(s, Calculus::Ma).unwrap()
}

#[test]
fn canonical_form_examples() {
    assert!(alpha_eq(&canonicalize(&ma("n[] | 0")), &ma("n[]")).unwrap());
    assert!(congruent(&ma("(nu n)(m[n[0]])"), &ma("m[(nu n) n[0]]")).unwrap());
    assert!(render(&canonicalize(&ma("m[(nu n) n[0]]"))).starts_with("(nu"));
    let j = parse("def a<x> |> 0 in (def b<y> |> c<a> in (a<> | b<>))", Calculus::Join).unwrap();
    let c = render(&canonicalize(&j));
    assert!(c.contains("a<> | b<>"), "{c}");
}

#[test]
fn congruence_examples() {
    assert!(congruent(&ma("n[] | open m"), &ma("open m | n[]")).unwrap());
    assert!(congruent(&ma("(nu n) 0"), &ma("0")).unwrap());
    // sound with replication: never claims a congruence that is not there
    assert!(!congruent(&ma("!n[] | m[]"), &ma("!n[]")).unwrap());
    assert!(!congruent(&ma("n[]"), &ma("n[] | n[]")).unwrap());
    assert!(!congruent(&ma("(nu n) n[]"), &ma("n[]")).unwrap());
    assert!(congruent(&ma("0"), &parse("0", Calculus::Join).unwrap()).is_err());
    assert!(congruent(&ma("!0 | n[]"), &ma("n[]")).unwrap());
}

// ---------------------------------------------------------------------------
// single-rule applier

struct Rw<'r> {
    rng: &'r mut ChaCha8Rng,
    ambient: bool,
    fresh: u32,
}

fn fnames(p: &Proc) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    proc_free_names(p, &mut Vec::new(), &mut out);
    out
}

impl Rw<'_> {
    fn fresh(&mut self) -> Name {
        self.fresh += 1;
        Name::new(&format!("z{}", self.fresh))
    }

    /// Applies one rule at a random position (or leaves `p` unchanged when
    /// the chosen rule does not apply).
    fn step(&mut self, p: &Proc) -> Proc {
        let kids = children(p).len();
        if kids > 0 && self.rng.gen_range(0..=kids) > 0 {
            return self.descend(p);
        }
        self.here(p)
    }

    fn descend(&mut self, p: &Proc) -> Proc {
        let mut p = p.clone();
        match &mut p {
            Proc::Par(ps) => {
                let i = self.rng.gen_range(0..ps.len());
                ps[i] = self.step(&ps[i]);
            }
            Proc::Res(_, b) | Proc::Rep { body: b, .. } | Proc::Amb { body: b, .. } => **b = self.step(b),
            Proc::Act { cont, .. } => **cont = self.step(cont),
            Proc::Sum { branches, .. } => {
                let i = self.rng.gen_range(0..branches.len());
                branches[i].cont = self.step(&branches[i].cont);
            }
            _ => {}
        }
        p
    }

    fn here(&mut self, p: &Proc) -> Proc {
        match self.rng.gen_range(0..7) {
            // P ≡ P | 0
            0 => Proc::Par(vec![p.clone(), Proc::Nil]),
            // P ≡ P | (nu z) 0
            1 => {
                let z = self.fresh();
                Proc::Par(vec![Proc::Res(z, Box::new(Proc::Nil)), p.clone()])
            }
            // commutativity and associativity
            2 => match p {
                Proc::Par(ps) if ps.len() >= 2 => {
                    let mut ps = ps.clone();
                    let i = self.rng.gen_range(0..ps.len() - 1);
                    ps.swap(i, i + 1);
                    Proc::Par(ps)
                }
                _ => p.clone(),
            },
            3 => match p {
                Proc::Par(ps) if ps.len() >= 3 => {
                    let k = self.rng.gen_range(1..ps.len() - 1);
                    let (l, r) = ps.split_at(k);
                    Proc::Par(vec![Proc::Par(l.to_vec()), Proc::Par(r.to_vec())])
                }
                _ => p.clone(),
            },
            // scope extrusion: (nu n) P | Q ≡ (nu n)(P | Q) when n is not free in Q
            4 => match p {
                Proc::Par(ps) if ps.len() == 2 => match (&ps[0], &ps[1]) {
                    (Proc::Res(n, b), q) if !fnames(q).contains(n) => {
                        Proc::Res(n.clone(), Box::new(Proc::Par(vec![(**b).clone(), q.clone()])))
                    }
                    _ => p.clone(),
                },
                Proc::Res(n, b) => match &**b {
                    Proc::Par(qs) if qs.len() == 2 && !fnames(&qs[1]).contains(n) => {
                        Proc::Par(vec![Proc::Res(n.clone(), Box::new(qs[0].clone())), qs[1].clone()])
                    }
                    _ => p.clone(),
                },
                _ => p.clone(),
            },
            // (nu a)(nu b) P ≡ (nu b)(nu a) P
            5 => match p {
                Proc::Res(a, b) => match &**b {
                    Proc::Res(c, q) => Proc::Res(c.clone(), Box::new(Proc::Res(a.clone(), q.clone()))),
                    _ => p.clone(),
                },
                _ => p.clone(),
            },
            // ambients: (nu n) m[P] ≡ m[(nu n) P] for n ≠ m
            _ if self.ambient => match p {
                Proc::Res(n, b) => match &**b {
                    Proc::Amb { label, name, body } if name != n => Proc::Amb {
                        label: label.clone(),
                        name: name.clone(),
                        body: Box::new(Proc::Res(n.clone(), body.clone())),
                    },
                    _ => p.clone(),
                },
                Proc::Amb { label, name, body } => match &**body {
                    Proc::Res(n, q) if n != name => Proc::Res(
                        n.clone(),
                        Box::new(Proc::Amb { label: label.clone(), name: name.clone(), body: q.clone() }),
                    ),
                    _ => p.clone(),
                },
                _ => p.clone(),
            },
            _ => p.clone(),
        }
    }
}

fn scramble(t: &Term, rng: &mut ChaCha8Rng, rounds: usize) -> Term {
    let mut rw = Rw { rng, ambient: t.calculus.is_ambient(), fresh: 0 };
    let mut p = t.proc.clone();
    for _ in 0..rounds {
        p = rw.step(&p);
    }
    Term::new(t.calculus, p)
}

fn kinds(t: &Term) -> Vec<String> {
    let mut v: Vec<String> = capabilities(t).iter().map(|c| format!("{:?}", c.1)).collect();
    v.sort();
    v
}

const PLAIN: [Calculus; 5] = [Calculus::Ma, Calculus::Sa, Calculus::PiMix, Calculus::PiSep, Calculus::PiAsyn];

#[test]
fn rule_closure_is_found_congruent() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (ci, c) in PLAIN.into_iter().enumerate() {
        let mut changed = 0;
        for t in random_terms(c, 300, 8, 100 + ci as u64) {
            let u = scramble(&t, &mut rng, 12);
            changed += usize::from(u.proc != t.proc);
            assert!(congruent(&t, &u).unwrap(), "{} vs {}", render(&t), render(&u));
            assert_eq!(canonical_key(&t), canonical_key(&u));
        }
        assert!(changed > 250, "{c}: only {changed} terms rewritten");
    }
}

#[test]
fn congruent_terms_share_invariants() {
    // soundness: among many random pairs, every claimed congruence preserves
    // what structural congruence preserves
    for (ci, c) in PLAIN.into_iter().chain([Calculus::Join]).enumerate() {
        let terms = random_terms(c, 400, 5, 200 + ci as u64);
        let mut hits = 0;
        for (i, t) in terms.iter().enumerate() {
            for u in &terms[i + 1..] {
                if !congruent(t, u).unwrap() {
                    continue;
                }
                hits += 1;
                assert_eq!(free_names(t), free_names(u), "{} vs {}", render(t), render(u));
                assert_eq!(has_success(t), has_success(u));
                assert_eq!(kinds(t), kinds(u));
                let keys = |x: &Term| {
                    let mut k: Vec<_> = enumerate_steps(x, 2).steps.into_iter().map(|s| s.residual_key).collect();
                    k.sort();
                    k
                };
                assert_eq!(keys(t), keys(u));
            }
        }
        assert!(hits > 0, "{c}: no congruent pairs drawn");
    }
}

#[test]
fn canonicalize_is_idempotent_and_preserving() {
    for (ci, c) in Calculus::ALL.into_iter().enumerate() {
        for t in random_terms(c, 300, 10, 300 + ci as u64) {
            let once = canonicalize(&t);
            let twice = canonicalize(&once);
            assert!(alpha_eq(&once, &twice).unwrap(), "{}", render(&t));
            assert_eq!(has_success(&once), has_success(&t));
            assert_eq!(free_names(&once), free_names(&t));
            let labels = |x: &Term| {
                let mut v: Vec<_> = capabilities(x).into_iter().collect();
                v.sort();
                v
            };
            assert_eq!(labels(&once), labels(&t), "{}", render(&t));
        }
    }
}

#[test]
fn corpus_terms_round_trip() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "term") {
            let t = parse_file(&std::fs::read_to_string(&path).unwrap()).unwrap();
            let back = parse(&render(&t), t.calculus).unwrap();
            assert!(alpha_eq(&back, &t).unwrap(), "{}", path.display());
            n += 1;
        }
    }
    assert!(n > 40);
}
