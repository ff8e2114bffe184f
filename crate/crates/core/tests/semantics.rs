use std::path::Path;

use syncpat::congruence::congruent;
use syncpat::oracle::generate::interacting_terms;
use syncpat::oracle::semantics_agreement;
use syncpat::parser::{parse, parse_file, render};
use syncpat::semantics::{apply_step, enumerate_steps, steps, still_enabled, Axiom};
use syncpat::syntax::CapKind;
use syncpat::{Calculus, Term};

fn ma(s: &str) -> Term {
    parse(s, Calculus::Ma).unwrap()
}

fn corpus(name: &str) -> Term {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name);
    parse_file(&std::fs::read_to_string(p).unwrap()).unwrap()
}

/// Every residual is congruent to exactly one expected term, and vice versa.
fn assert_residuals(t: &Term, expected: &[&str]) {
    let ss = steps(t);
    assert_eq!(ss.steps.len(), expected.len(), "{}", render(t));
    for e in expected {
        let e = parse(e, t.calculus).unwrap();
        let hits = ss.steps.iter().filter(|s| congruent(&s.residual, &e).unwrap()).count();
        assert_eq!(hits, 1, "{} among residuals of {}", render(&e), render(t));
    }
}

#[test]
fn ma_m_term_steps() {
    let t = corpus("maM.term");
    let ss = steps(&t);
    let axioms: Vec<Axiom> = ss.steps.iter().map(|s| s.axiom).collect();
    assert_eq!(axioms, [Axiom::MaIn, Axiom::MaOpen, Axiom::MaOpen]);
    assert_residuals(&t, &["open n1 | n1[] | n2[n1[]]", "n1[in n2] | n2[]", "n1[] | in n2 | n2[]"]);
    // the in-step consumes the moving ambient, the capability and the target
    let kinds: Vec<CapKind> = ss.steps[0].consumed.iter().map(|c| c.kind).collect();
    assert_eq!(kinds.iter().filter(|k| **k == CapKind::Ambient).count(), 2);
    assert!(kinds.contains(&CapKind::In));
}

#[test]
fn inert_terms_have_no_steps() {
    for s in ["0", "ok", "n[]", "in n", "n[in m]", "open n | m[]"] {
        assert!(steps(&ma(s)).steps.is_empty(), "{s}");
    }
    assert!(steps(&parse("a!<> | b?()", Calculus::PiMix).unwrap()).steps.is_empty());
    assert!(steps(&parse("def a<> | b<> |> 0 in a<>", Calculus::Join).unwrap()).steps.is_empty());
}

#[test]
fn ambient_axioms() {
    assert_residuals(&ma("n1[in n2] | n2[in n3] | n3[]"), &["n2[n1[] | in n3] | n3[]", "n1[in n2] | n3[n2[]]"]);
    assert_residuals(&ma("m[n[out m.ok]]"), &["m[] | n[ok]"]);
    assert_residuals(&ma("open n.ok | n[m[]]"), &["ok | m[]"]);
    let sa = |s| parse(s, Calculus::Sa).unwrap();
    assert_residuals(&sa("n1[in n2] | n2[co-in n2]"), &["n2[n1[]]"]);
    assert!(steps(&sa("n1[in n2] | n2[]")).steps.is_empty(), "in needs its co-capability");
    assert_residuals(&sa("open n | n[co-open n.ok]"), &["ok"]);
    assert_residuals(&sa("m[n[out m | co-out m]]"), &[]);
    assert_residuals(&sa("m[n[out m] | co-out m]"), &["m[] | n[]"]);
    let all_sa = steps(&sa("open n | n[co-open n]"));
    assert_eq!(all_sa.steps[0].axiom, Axiom::SaOpen);
}

#[test]
fn pi_and_join_axioms() {
    let pi = |c, s| parse(s, c).unwrap();
    assert_residuals(&pi(Calculus::PiMix, "a!<b> | a?(x).x!<c>"), &["b!<c>"]);
    assert_residuals(&pi(Calculus::PiMix, "a!<>.ok + b?() | a?()"), &["ok"]);
    assert_residuals(&pi(Calculus::PiSep, "a!<> + b!<> | a?().ok + b?()"), &["ok", "0"]);
    let asyn = corpus("piasyn_m.term");
    assert_eq!(steps(&asyn).steps.len(), 4);
    assert!(steps(&asyn).steps.iter().all(|s| s.axiom == Axiom::PiComm));
    let j = pi(Calculus::Join, "def a<x> |> x<> in a<b>");
    assert_residuals(&j, &["def a<x> |> x<> in b<>"]);
    assert_eq!(steps(&j).steps[0].axiom, Axiom::JoinReact);
    let pair = pi(Calculus::Join, "def a<> | b<> |> ok in (a<> | b<>)");
    assert_residuals(&pair, &["def a<> | b<> |> ok in ok"]);
}

#[test]
fn apply_step_examples() {
    let t = ma("open n.ok | n[0]");
    let s = &steps(&t).steps[0];
    assert!(congruent(&apply_step(&t, s).unwrap(), &ma("ok")).unwrap());

    let t = ma("n1[in n2] | n2[0]");
    let s = &steps(&t).steps[0];
    assert!(congruent(&apply_step(&t, s).unwrap(), &ma("n2[n1[0]]")).unwrap());

    // in maMS, moving the ambient that carries `ok` leads to the third variant
    let ms = corpus("maMS.term");
    let sc = corpus("maMS_Sc.term");
    let hits: Vec<_> = steps(&ms)
        .steps
        .iter()
        .filter(|s| congruent(&apply_step(&ms, s).unwrap(), &sc).unwrap())
        .map(|s| s.axiom)
        .collect();
    assert_eq!(hits, [Axiom::MaIn]);

    // a step of another term does not apply
    let other = &steps(&ma("m1[in m2] | m2[]")).steps[0];
    assert!(apply_step(&ma("open n | n[]"), other).is_err());
}

#[test]
fn still_enabled_on_the_in_chain() {
    let t = corpus("ma_asymmetric.term");
    let ss = steps(&t);
    assert_eq!(ss.steps.len(), 2);
    let (first, second) = (&ss.steps[0], &ss.steps[1]);
    // moving n2 into n3 takes it away from n1; the converse keeps n2 mobile
    let after_first = apply_step(&t, first).unwrap();
    let after_second = apply_step(&t, second).unwrap();
    assert!(still_enabled(&after_first, second));
    assert!(!still_enabled(&after_second, first));
    assert!(still_enabled(&t, first) && still_enabled(&t, second));
}

#[test]
fn step_order_is_deterministic() {
    for t in [corpus("maMS.term"), corpus("pimix_star_01010.term"), corpus("join_choice.term")] {
        let a = steps(&t);
        let b = steps(&parse(&render(&t), t.calculus).unwrap());
        assert_eq!(a.steps.len(), b.steps.len());
        for (x, y) in a.steps.iter().zip(&b.steps) {
            assert_eq!(x.id, y.id);
            assert_eq!(x.axiom, y.axiom);
            assert_eq!(x.consumed, y.consumed);
            assert_eq!(x.residual_key, y.residual_key);
        }
        assert!(a.steps.iter().enumerate().all(|(i, s)| s.id == i));
    }
}

#[test]
fn replication_unfolds_a_bounded_number_of_times() {
    let t = ma("!(open n) | n[] | n[]");
    let once = enumerate_steps(&t, 1).steps.len();
    let twice = enumerate_steps(&t, 2).steps.len();
    assert!(once >= 2, "each ambient can be opened by a copy");
    assert!(twice >= once);
}

#[test]
fn fast_and_slow_semantics_agree() {
    for (i, c) in Calculus::ALL.into_iter().enumerate() {
        let terms = interacting_terms(c, 200, 8, 900 + i as u64);
        let r = semantics_agreement(&terms);
        assert_eq!(r.terms, 200);
        assert!(r.compared > 0);
        assert!(r.discrepancies.is_empty(), "{c}: {:?}", &r.discrepancies[..r.discrepancies.len().min(3)]);
    }
}
