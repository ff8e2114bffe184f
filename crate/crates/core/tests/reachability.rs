use std::path::Path;

use syncpat::oracle::generate::interacting_terms;
use syncpat::parser::{parse, parse_file, render};
use syncpat::patterns::find_great_m;
use syncpat::reachability::{
    is_convergent, maximal_executions, must_reach_success_finite, reach_success, End, Verdict, DEFAULT_DEPTH,
    DEFAULT_STATE_LIMIT,
};
use syncpat::semantics::{apply_step, steps};
use syncpat::{Calculus, Term};

fn ma(s: &str) -> Term {
    parse(s, Calculus::Ma).unwrap()
}

fn corpus(name: &str) -> Term {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name);
    parse_file(&std::fs::read_to_string(p).unwrap()).unwrap()
}

const LIMIT: usize = DEFAULT_STATE_LIMIT;

#[test]
fn success_verdicts() {
    let ms = corpus("maMS.term");
    assert_eq!(reach_success(&ms, LIMIT), Verdict::True);
    assert_eq!(must_reach_success_finite(&ms, LIMIT), Verdict::False);
    assert_eq!(reach_success(&corpus("maMS_Sb.term"), LIMIT), Verdict::False);
    assert_eq!(must_reach_success_finite(&corpus("maMS_Sa.term"), LIMIT), Verdict::True);
    assert_eq!(must_reach_success_finite(&corpus("maMS_Sc.term"), LIMIT), Verdict::True);
    assert_eq!(reach_success(&ma("ok"), LIMIT), Verdict::True);
    assert_eq!(must_reach_success_finite(&ma("ok"), LIMIT), Verdict::True);
    assert_eq!(reach_success(&ma("0"), LIMIT), Verdict::False);
    assert_eq!(reach_success(&ma("open n.ok | n[]"), LIMIT), Verdict::True);
}

#[test]
fn bounds_are_reported_not_coerced() {
    let ms = corpus("maMS.term");
    assert_eq!(reach_success(&ms, 1), Verdict::BoundExceeded);
    assert_eq!(must_reach_success_finite(&ms, 1), Verdict::BoundExceeded);
    // every step doubles n: infinitely many states, and the growth is seen
    let grows = ma("!(open n.(n[] | n[])) | n[]");
    assert_eq!(reach_success(&grows, 50), Verdict::BoundExceeded);
    assert_eq!(is_convergent(&grows, 50), Verdict::False);
    // growth inside an ambient is not recognised; the bound says so
    let nested = ma("!(m[in n]) | n[]");
    assert_eq!(reach_success(&nested, 50), Verdict::BoundExceeded);
    assert_eq!(is_convergent(&nested, 50), Verdict::BoundExceeded);
    let pi = parse("!(a?().(a!<> | a!<>)) | a!<>", Calculus::PiMix).unwrap();
    assert_eq!(is_convergent(&pi, 50), Verdict::False);
    // a self-loop modulo congruence: one state, explored completely
    assert_eq!(reach_success(&ma("!(open n) | !(n[0])"), 1000), Verdict::False);
}

#[test]
fn executions_of_small_terms() {
    let runs = maximal_executions(&ma("open n.0 | n[0]"), DEFAULT_DEPTH);
    assert!(runs.complete);
    assert_eq!(runs.runs.len(), 1);
    assert_eq!(runs.runs[0].steps.len(), 1);
    assert_eq!(runs.runs[0].end, End::Deadlock);

    let runs = maximal_executions(&ma("0"), DEFAULT_DEPTH);
    assert_eq!(runs.runs.len(), 1);
    assert!(runs.runs[0].steps.is_empty());

    // every reported execution replays
    let ms = corpus("maMS.term");
    let runs = maximal_executions(&ms, DEFAULT_DEPTH);
    assert!(runs.finite().count() >= 2);
    for e in &runs.runs {
        let mut t = ms.clone();
        for (&id, consumed) in e.steps.iter().zip(&e.consumed) {
            let s = steps(&t).steps[id].clone();
            assert_eq!(&s.consumed, consumed);
            t = apply_step(&t, &s).unwrap();
        }
        if e.end == End::Deadlock {
            assert!(steps(&t).steps.is_empty());
        }
    }
}

#[test]
fn mixed_choice_runs_take_two_of_five() {
    for bits in ["00000", "10101", "11111"] {
        let t = corpus(&format!("pimix_star_{bits}.term"));
        let runs = maximal_executions(&t, DEFAULT_DEPTH);
        assert!(runs.complete);
        assert_eq!(runs.runs.len(), 10, "{bits}: one run per ordered pair of disjoint steps");
        let initial: Vec<_> = steps(&t).steps.iter().map(|s| s.consumed.clone()).collect();
        for e in &runs.runs {
            assert_eq!(e.end, End::Deadlock);
            assert_eq!(e.steps.len(), 2);
            assert!(e.consumed.iter().all(|c| initial.contains(c)));
        }
    }
}

#[test]
fn ambient_cycle_runs_three_of_five() {
    let t = corpus("ma_cycle.term");
    let w = &find_great_m(&t, true, false)[0];
    let ss = steps(&t);
    let wanted: Vec<_> = w.cycle.iter().map(|&i| ss.steps[i].consumed.clone()).collect();
    let runs = maximal_executions(&t, DEFAULT_DEPTH);
    let best = runs.runs.iter().map(|e| e.consumed.iter().filter(|c| wanted.contains(c)).count()).max().unwrap();
    assert!(best >= 3, "best run hits {best}");
}

#[test]
fn convergence() {
    assert_eq!(is_convergent(&corpus("maMS.term"), LIMIT), Verdict::True);
    assert_eq!(is_convergent(&ma("!(open n) | !(n[0])"), 1000), Verdict::False);
    assert_eq!(is_convergent(&ma("0"), LIMIT), Verdict::True);
    // a two-state loop
    let pi = parse("!(a?().a!<>) | a!<>", Calculus::PiMix).unwrap();
    assert_eq!(is_convergent(&pi, LIMIT), Verdict::False);
}

#[test]
fn must_implies_reach_and_reach_is_monotone() {
    for (ci, c) in Calculus::ALL.into_iter().enumerate() {
        for t in interacting_terms(c, 80, 8, 800 + ci as u64) {
            let must = must_reach_success_finite(&t, 2000);
            let reach = reach_success(&t, 2000);
            let finite = maximal_executions(&t, 50).finite().next().is_some();
            if must == Verdict::True && finite {
                assert_eq!(reach, Verdict::True, "{}", render(&t));
            }
            let mut was_true = false;
            for bound in [5, 50, 500, 2000] {
                let v = reach_success(&t, bound);
                if was_true {
                    assert_eq!(v, Verdict::True, "{} at {bound}", render(&t));
                }
                was_true |= v == Verdict::True;
            }
        }
    }
}

#[test]
fn verdicts_are_deterministic() {
    let t = corpus("pimix_star_01101.term");
    let a = (reach_success(&t, LIMIT), must_reach_success_finite(&t, LIMIT), is_convergent(&t, LIMIT));
    for _ in 0..3 {
        let b = (reach_success(&t, LIMIT), must_reach_success_finite(&t, LIMIT), is_convergent(&t, LIMIT));
        assert_eq!(a, b);
    }
    assert_eq!(maximal_executions(&t, DEFAULT_DEPTH).runs, maximal_executions(&t, DEFAULT_DEPTH).runs);
}
