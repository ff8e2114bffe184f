use std::collections::BTreeSet;
use std::path::Path;

use syncpat::congruence::{canonical_key, Key};
use syncpat::oracle::count::term_counts;
use syncpat::oracle::generate::interacting_terms;
use syncpat::oracle::{
    check_corollary_unique_names, check_join_locality, check_lemma3, check_lemma3_terms, check_lemma5,
    conflict_agreement, enumerate_terms, for_each_term, unique_ambient_names, EnumSpec, BANNER,
};
use syncpat::parser::{parse, parse_file, render};
use syncpat::patterns::{find_great_m, find_m, GreatMWitness, Locality, Symmetry};
use syncpat::syntax::Cap;
use syncpat::{Calculus, Error, Name, Proc, Term};

fn ma(s: &str) -> Term {
    parse(s, Calculus::Ma).unwrap()
}

fn corpus_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn corpus(name: &str) -> Term {
    parse_file(&std::fs::read_to_string(corpus_dir().join(name)).unwrap()).unwrap()
}

fn keys(ts: &[Term]) -> BTreeSet<Key> {
    ts.iter().map(canonical_key).collect()
}

// ---------------------------------------------------------------------------
// enumeration

/// Straight from the grammar: every term of exactly `size` operators.
fn grammar(size: usize, names: &[Name], binders: bool) -> Vec<Proc> {
    if size == 0 {
        return vec![Proc::Nil];
    }
    let mut out = Vec::new();
    if size == 1 {
        out.push(Proc::Success);
    }
    for body in grammar(size - 1, names, binders) {
        for n in names {
            out.push(Proc::amb(n.clone(), body.clone()));
            for c in [Cap::In, Cap::Out, Cap::Open] {
                out.push(Proc::act(c, n.clone(), body.clone()));
            }
            if binders {
                out.push(Proc::res(n.clone(), body.clone()));
            }
        }
        if binders {
            out.push(Proc::rep(body.clone()));
        }
    }
    // P | Q costs one operator more than its operands
    for left in 1..size.saturating_sub(1) {
        let right = size - 1 - left;
        for p in grammar(left, names, binders) {
            for q in grammar(right, names, binders) {
                out.push(Proc::par(vec![p.clone(), q]));
            }
        }
    }
    out
}

fn grammar_upto(max: usize, pool: usize, binders: bool) -> Vec<Term> {
    let names: Vec<Name> = (1..=pool).map(|i| Name::new(&format!("n{i}"))).collect();
    (0..=max).flat_map(|s| grammar(s, &names, binders)).map(|p| Term::new(Calculus::Ma, p)).collect()
}

#[test]
fn enumeration_examples() {
    let one = enumerate_terms(&EnumSpec { name_pool: 1, ..EnumSpec::new(Calculus::Ma, 1) });
    let expected = ["0", "ok", "n1[]", "in n1", "out n1", "open n1"].map(ma);
    assert_eq!(keys(&one), keys(&expected));
    assert_eq!(one.len(), 6);

    let zero = enumerate_terms(&EnumSpec::new(Calculus::Ma, 0));
    assert_eq!(zero.len(), 1);
    assert_eq!(render(&zero[0]), "0");
}

#[test]
fn enumeration_matches_the_grammar() {
    for pool in 1..=3 {
        let spec = EnumSpec { name_pool: pool, ..EnumSpec::new(Calculus::Ma, 3) };
        let ours = enumerate_terms(&spec);
        let theirs = grammar_upto(3, pool, false);
        assert_eq!(ours.len(), keys(&ours).len(), "no duplicates");
        assert_eq!(keys(&ours), keys(&theirs), "pool {pool}");
        let counts = term_counts(3, pool, false, false);
        assert_eq!(counts.total(3, 0), ours.len() as u64);
    }
    // with binders the grammar produces many congruent spellings
    let spec =
        EnumSpec { name_pool: 2, allow_restriction: true, allow_replication: true, ..EnumSpec::new(Calculus::Ma, 3) };
    let ours = enumerate_terms(&spec);
    assert_eq!(ours.len(), keys(&ours).len());
    assert_eq!(keys(&ours), keys(&grammar_upto(3, 2, true)));
}

#[test]
fn enumeration_order_is_fixed() {
    let spec = EnumSpec::new(Calculus::Ma, 3);
    let a: Vec<String> = enumerate_terms(&spec).iter().map(render).collect();
    let b: Vec<String> = enumerate_terms(&spec).iter().map(render).collect();
    assert_eq!(a, b);
    let mut streamed = Vec::new();
    for_each_term(&spec, &mut |t| streamed.push(render(&t)));
    assert_eq!(a, streamed);
}

// ---------------------------------------------------------------------------
// lemma checks

#[test]
fn lemma3_small_bounds() {
    let r = check_lemma3(&EnumSpec::new(Calculus::Ma, 2)).unwrap();
    assert_eq!(r.witnesses_found, 0, "no term of two operators has three steps");
    assert!(r.violations.is_empty());
    assert_eq!(r.banner, BANNER);

    // without an M of size six or less
    let spec = EnumSpec::new(Calculus::Ma, 5);
    let r = check_lemma3(&spec).unwrap();
    assert_eq!(r.terms_checked, 371_762);
    assert_eq!(r.terms_checked, term_counts(5, 3, false, false).total(5, 0));
    assert_eq!(r.witnesses_found, 0);
    assert!(r.violations.is_empty());

    let r7 = check_lemma3(&EnumSpec::new(Calculus::Ma, 7)).unwrap();
    assert!(r7.witnesses_found > 0);
    assert!(r7.violations.is_empty());
    let again = check_lemma3(&EnumSpec::new(Calculus::Ma, 7)).unwrap();
    assert_eq!(
        (again.terms_checked, again.witnesses_found, again.shapes_analysed),
        (r7.terms_checked, r7.witnesses_found, r7.shapes_analysed)
    );
}

#[test]
fn lemma3_counts_terms_not_skeletons() {
    // the factorised check covers exactly the materialised universe
    let spec = EnumSpec { name_pool: 2, ..EnumSpec::new(Calculus::Ma, 6) };
    let fast = check_lemma3(&spec).unwrap();
    let all = enumerate_terms(&spec);
    assert_eq!(fast.terms_checked, all.len() as u64);
    let slow = check_lemma3_terms(&all);
    assert_eq!(fast.witnesses_found, slow.witnesses_found);
    assert!(slow.violations.is_empty());
}

#[test]
fn lemma3_with_binders() {
    let spec =
        EnumSpec { name_pool: 2, allow_restriction: true, allow_replication: true, ..EnumSpec::new(Calculus::Ma, 5) };
    let r = check_lemma3(&spec).unwrap();
    assert!(r.terms_checked > 0);
    assert!(r.violations.is_empty(), "{:?}", r.violations.first());
}

#[test]
fn injected_m_is_a_witness_not_a_violation() {
    let r = check_lemma3_terms(&[corpus("maM.term"), corpus("maMS.term"), ma("0")]);
    assert_eq!(r.terms_checked, 3);
    assert_eq!(r.witnesses_found, 2);
    assert!(r.violations.is_empty());
}

#[test]
fn lemma_checks_are_about_ambients() {
    let spec = EnumSpec::new(Calculus::PiMix, 3);
    assert!(matches!(check_lemma3(&spec), Err(Error::WrongCalculus { .. })));
    assert!(matches!(check_corollary_unique_names(&spec), Err(Error::WrongCalculus { .. })));
}

#[test]
fn corollary_unique_names() {
    let r = check_corollary_unique_names(&EnumSpec::new(Calculus::Ma, 7)).unwrap();
    assert!(r.terms_checked > 0);
    assert_eq!(r.witnesses_found, 0);
    assert!(r.violations.is_empty());

    assert!(!unique_ambient_names(&corpus("maM.term")));
    let chain = corpus("ma_asymmetric.term");
    assert!(unique_ambient_names(&chain));
    assert!(find_m(&chain, false, false).is_empty());

    // the factorised unique-names count agrees with filtering the universe
    let spec = EnumSpec::new(Calculus::Ma, 5);
    let r = check_corollary_unique_names(&spec).unwrap();
    let filtered = enumerate_terms(&spec).iter().filter(|t| unique_ambient_names(t)).count();
    assert_eq!(r.terms_checked, filtered as u64);
}

#[test]
fn lemma5_examples() {
    let cycle = corpus("ma_cycle.term");
    let w = &find_great_m(&cycle, true, false)[0];
    assert!(check_lemma5(&cycle, w).unwrap());

    let star = corpus("pimix_star_00000.term");
    let w = &find_great_m(&star, true, false)[0];
    assert!(!check_lemma5(&star, w).unwrap());

    let bogus = GreatMWitness {
        cycle: [0, 1, 2, 3, 4],
        conflict_edges: [Symmetry::Symmetric; 5],
        locality: Locality::NonLocal,
    };
    assert!(check_lemma5(&ma("0"), &bogus).is_err());
    assert!(check_lemma5(&corpus("maM.term"), &bogus).is_err());
}

#[test]
fn join_locality() {
    let joins: Vec<Term> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_str().unwrap().starts_with("join_"))
        .map(|p| parse_file(&std::fs::read_to_string(p).unwrap()).unwrap())
        .collect();
    assert!(joins.len() >= 5);
    let r = check_join_locality(&joins).unwrap();
    assert!(r.witnesses_found > 0);
    assert!(r.violations.is_empty());

    let r = check_join_locality(&[]).unwrap();
    assert_eq!((r.terms_checked, r.witnesses_found, r.violations.len()), (0, 0, 0));

    // the asynchronous pi M with both inputs turned into one definition
    let asyn = parse("def y<x> | r<> |> 0 in (y<u> | r<> | y<v> | r<>)", Calculus::Join).unwrap();
    let ws = find_m(&asyn, true, false);
    assert!(!ws.is_empty());
    assert!(ws.iter().all(|w| w.locality == Locality::Local));

    assert!(check_join_locality(&[corpus("maM.term")]).is_err());
}

#[test]
fn conflicts_agree_with_disabling() {
    for (ci, c) in Calculus::ALL.into_iter().enumerate() {
        let terms = interacting_terms(c, 300, 8, 1200 + ci as u64);
        let r = conflict_agreement(&terms);
        assert!(r.compared > 0, "{c}");
        assert!(r.discrepancies.is_empty(), "{c}: {:?}", r.discrepancies.first());
    }
}
