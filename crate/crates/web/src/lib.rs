//! Browser bindings. Every export takes the calculus id and the term text
//! and returns a JSON document: `{"ok": ...}` or `{"error": "..."}`.

use serde::Serialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

use syncpat::parser::{parse, render};
use syncpat::patterns::Analysis;
use syncpat::reachability::{must_reach_success_finite, reach_success, Verdict};
use syncpat::syntax::has_success;
use syncpat::{Calculus, Term};

/// Exploration bound for the success checks; small enough to keep the page
/// responsive.
pub const STATE_LIMIT: usize = 20_000;

fn term(calculus: &str, text: &str) -> Result<Term, String> {
    let c = Calculus::from_id(calculus).ok_or_else(|| format!("unknown calculus `{calculus}`"))?;
    parse(text, c).map_err(|e| e.to_string())
}

fn reply<T: Serialize>(r: Result<T, String>) -> String {
    let v = match r {
        Ok(body) => json!({ "ok": body }),
        Err(e) => json!({ "error": e }),
    };
    v.to_string()
}

fn steps_of(an: &Analysis) -> Value {
    an.steps
        .steps
        .iter()
        .map(|s| {
            json!({
                "id": s.id,
                "axiom": s.axiom,
                "labels": s.consumed.iter().map(|c| c.label.to_string()).collect::<Vec<_>>(),
                "residual": render(&s.residual),
            })
        })
        .collect()
}

/// Steps plus the pair matrix.
#[wasm_bindgen]
pub fn steps(calculus: &str, text: &str) -> String {
    reply(term(calculus, text).map(|t| {
        let an = Analysis::new(&t);
        let pairs: Vec<Value> =
            an.matrix.pairs().map(|r| json!({ "first": r.first, "second": r.second, "kind": r.kind.name() })).collect();
        json!({ "term": render(&t), "steps": steps_of(&an), "pairs": pairs })
    }))
}

/// Witnesses of M (`great == false`) or ⋆.
#[wasm_bindgen]
pub fn patterns(calculus: &str, text: &str, great: bool, allow_asymmetric: bool) -> String {
    reply(term(calculus, text).map(|t| {
        let an = Analysis::new(&t);
        let witnesses = if great {
            serde_json::to_value(an.find_great_m(allow_asymmetric, false))
        } else {
            serde_json::to_value(an.find_m(allow_asymmetric, false))
        }
        .expect("serialisable");
        json!({ "pattern": if great { "GREAT_M" } else { "M" }, "witnesses": witnesses })
    }))
}

/// All three success predicates.
#[wasm_bindgen]
pub fn success(calculus: &str, text: &str) -> String {
    reply(term(calculus, text).map(|t| {
        json!({
            "has": Verdict::from(has_success(&t)),
            "reach": reach_success(&t, STATE_LIMIT),
            "must": must_reach_success_finite(&t, STATE_LIMIT),
        })
    }))
}
