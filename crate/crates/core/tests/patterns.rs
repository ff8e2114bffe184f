use std::path::Path;

use syncpat::analysis::PairKind;
use syncpat::congruence::{canonicalize, congruent, label_sequence};
use syncpat::oracle::enumerate::Tables;
use syncpat::oracle::generate::interacting_terms;
use syncpat::oracle::{for_each_term, EnumSpec};
use syncpat::parser::{parse, parse_file, render};
use syncpat::patterns::{find_great_m, find_m, Analysis, GreatMWitness, Locality, MWitness, Symmetry};
use syncpat::semantics::{enabled_consumed, Axiom, DEFAULT_UNFOLD};
use syncpat::{Calculus, Term};

fn corpus(name: &str) -> Term {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name);
    parse_file(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn symmetry(k: &PairKind) -> Option<Symmetry> {
    match k {
        PairKind::ConflictSymmetric => Some(Symmetry::Symmetric),
        PairKind::ConflictAsymmetric { .. } => Some(Symmetry::Asymmetric),
        _ => None,
    }
}

/// Residuals are told apart up to congruence and by which capability
/// occurrences survive: `y!<v> | y?(x)` left by two different
/// communications counts twice.
fn different(an: &Analysis, x: usize, y: usize) -> bool {
    let (p, q) = (&an.step(x).residual, &an.step(y).residual);
    let labels = |t: &Term| {
        let mut v = label_sequence(&t.proc);
        v.sort();
        v
    };
    !congruent(p, q).unwrap() || labels(p) != labels(q)
}

/// Re-derives every property a witness claims from the steps themselves.
fn replay_m(an: &Analysis, w: &MWitness) {
    let ids = [w.a, w.b, w.c];
    assert!(w.a != w.b && w.b != w.c && w.a != w.c);
    for (i, &x) in ids.iter().enumerate() {
        for &y in &ids[i + 1..] {
            assert!(different(an, x, y), "residuals {x} {y}");
        }
    }
    let ac = &an.matrix.get(w.a, w.c).kind;
    assert!(ac.is_parallel());
    assert_eq!(w.locality == Locality::NonLocal, *ac == PairKind::ParallelDistributable);
    assert_eq!(symmetry(&an.matrix.get(w.b, w.a).kind), Some(w.conflict_symmetry.0));
    assert_eq!(symmetry(&an.matrix.get(w.b, w.c).kind), Some(w.conflict_symmetry.1));
    assert_eq!(w.b_uses_open, an.step(w.b).axiom.is_open());
}

fn replay_great(an: &Analysis, w: &GreatMWitness) {
    let c = w.cycle;
    let mut all_distributable = true;
    for i in 0..5 {
        for j in i + 1..5 {
            assert!(different(an, c[i], c[j]));
            let k = &an.matrix.get(c[i], c[j]).kind;
            if j == i + 1 || (i == 0 && j == 4) {
                let edge = if j == i + 1 { i } else { 4 };
                assert_eq!(symmetry(k), Some(w.conflict_edges[edge]), "edge {i}-{j}");
            } else {
                assert!(k.is_parallel(), "{i}-{j} must be parallel");
                all_distributable &= *k == PairKind::ParallelDistributable;
            }
        }
    }
    assert_eq!(w.locality == Locality::NonLocal, all_distributable);
}

#[test]
fn ma_m_term() {
    let t = corpus("maM.term");
    let ws = find_m(&t, false, false);
    assert_eq!(ws.len(), 1);
    let w = &ws[0];
    assert_eq!((w.a, w.b, w.c), (0, 2, 1));
    assert_eq!(w.locality, Locality::NonLocal);
    assert!(w.b_uses_open && w.symmetric());
    replay_m(&Analysis::new(&t), w);
    assert!(find_great_m(&t, true, false).is_empty(), "only three steps");
}

#[test]
fn asynchronous_pi_m() {
    let t = corpus("piasyn_m.term");
    let an = Analysis::new(&t);
    let ws = an.find_m(false, false);
    assert_eq!(ws.len(), 4);
    assert!(ws.iter().all(|w| w.locality == Locality::NonLocal && !w.b_uses_open));
    // a = first output with first input, c = second output with second input
    let bases = |i: usize| -> Vec<u32> { an.step(i).consumed.iter().map(|c| c.label.base).collect() };
    assert!(ws.iter().any(|w| bases(w.a) == [0, 1] && bases(w.c) == [2, 3]));
    for w in &ws {
        replay_m(&an, w);
    }
}

#[test]
fn safe_ambient_m() {
    let t = corpus("sa_m.term");
    let an = Analysis::new(&t);
    let ws = an.find_m(false, false);
    assert_eq!(ws.len(), 1);
    let w = &ws[0];
    assert_eq!(w.locality, Locality::NonLocal);
    assert_eq!(
        [an.step(w.a).axiom, an.step(w.b).axiom, an.step(w.c).axiom],
        [Axiom::SaIn, Axiom::SaOpen, Axiom::SaOpen]
    );
    replay_m(&an, w);
}

#[test]
fn nothing_in_nil() {
    for c in Calculus::ALL {
        let t = parse("0", c).unwrap();
        assert!(find_m(&t, true, false).is_empty());
        assert!(find_great_m(&t, true, false).is_empty());
    }
}

#[test]
fn mixed_choice_star() {
    let mut n = 0;
    for entry in std::fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        if !name.starts_with("pimix_star_") {
            continue;
        }
        n += 1;
        let t = corpus(&name);
        let an = Analysis::new(&t);
        let ws = an.find_great_m(false, false);
        assert_eq!(ws.len(), 1, "{name}");
        let w = &ws[0];
        assert_eq!(w.locality, Locality::NonLocal);
        assert_eq!(w.conflict_edges, [Symmetry::Symmetric; 5]);
        assert!(w.cycle.iter().all(|&i| an.step(i).axiom == Axiom::PiComm));
        // one communication per channel
        assert_eq!(an.steps.steps.len(), 5);
        replay_great(&an, w);
        for m in an.find_m(false, false) {
            replay_m(&an, &m);
        }
    }
    assert_eq!(n, 32);
}

#[test]
fn ambient_in_cycle() {
    let t = corpus("ma_cycle.term");
    let an = Analysis::new(&t);
    assert!(an.find_great_m(false, false).is_empty());
    assert!(an.find_m(false, false).is_empty());
    let ws = an.find_great_m(true, false);
    assert_eq!(ws.len(), 1);
    assert_eq!(ws[0].locality, Locality::NonLocal);
    assert_eq!(ws[0].conflict_edges, [Symmetry::Asymmetric; 5]);
    replay_great(&an, &ws[0]);
    for w in an.find_m(true, false) {
        replay_m(&an, &w);
    }
}

#[test]
fn join_m_is_local() {
    let t = corpus("join_pair_m.term");
    let ws = find_m(&t, false, false);
    assert_eq!(ws.len(), 4);
    assert!(ws.iter().all(|w| w.locality == Locality::Local));
    assert!(find_m(&t, false, true).is_empty(), "nonlocal-only filters them out");
}

#[test]
fn witnesses_replay_on_generated_terms() {
    let mut found = 0;
    for (ci, c) in Calculus::ALL.into_iter().enumerate() {
        for t in interacting_terms(c, 150, 12, 500 + ci as u64) {
            let an = Analysis::new(&t);
            for asym in [false, true] {
                for w in an.find_m(asym, false) {
                    replay_m(&an, &w);
                    found += 1;
                }
                for w in an.find_great_m(asym, false) {
                    replay_great(&an, &w);
                }
            }
        }
    }
    assert!(found > 0, "no witnesses drawn");
}

fn summary_m(t: &Term) -> Vec<(Locality, bool, bool)> {
    let mut v: Vec<_> = find_m(t, true, false).iter().map(|w| (w.locality, w.symmetric(), w.b_uses_open)).collect();
    v.sort();
    v
}

fn summary_great(t: &Term) -> Vec<Locality> {
    let mut v: Vec<_> = find_great_m(t, true, false).iter().map(|w| w.locality).collect();
    v.sort();
    v
}

#[test]
fn detectors_are_invariant_under_canonicalization() {
    for (ci, c) in Calculus::ALL.into_iter().enumerate() {
        for t in interacting_terms(c, 100, 10, 600 + ci as u64) {
            let u = canonicalize(&t);
            assert_eq!(summary_m(&t), summary_m(&u), "{}", render(&t));
            assert_eq!(summary_great(&t), summary_great(&u), "{}", render(&t));
        }
    }
}

#[test]
fn no_strict_star_in_small_ambient_terms() {
    // Skeletons (every continuation 0) carry the full step structure of
    // the terms they stand for. A cycle needs five alternative steps, which
    // takes at least nine operators.
    let spec = EnumSpec { name_pool: 2, ..EnumSpec::new(Calculus::Ma, 9) };
    let tables = Tables::new(&spec, true, false);
    let mut candidates = 0;
    tables.stream_all(&mut |b| {
        let t = tables.term(b.proc);
        if enabled_consumed(&t, DEFAULT_UNFOLD).len() >= 5 {
            candidates += 1;
            assert!(find_great_m(&t, false, false).is_empty(), "{}", render(&t));
        }
    });
    assert_eq!(candidates, 90);

    // replication reaches five steps with far fewer operators
    let spec =
        EnumSpec { allow_restriction: true, allow_replication: true, name_pool: 1, ..EnumSpec::new(Calculus::Ma, 6) };
    let mut candidates = 0;
    for_each_term(&spec, &mut |t| {
        if enabled_consumed(&t, DEFAULT_UNFOLD).len() >= 5 {
            candidates += 1;
            assert!(find_great_m(&t, false, false).is_empty(), "{}", render(&t));
        }
    });
    assert!(candidates > 0);
}
