//! Printable views of steps.

use std::fmt;

use serde::Serialize;

use syncpat::parser::render;
use syncpat::patterns::Analysis;
use syncpat::semantics::Axiom;
use syncpat::syntax::CapKind;

#[derive(Serialize)]
pub struct ConsumedView {
    pub label: String,
    pub kind: CapKind,
    pub recurrent: bool,
}

#[derive(Serialize)]
pub struct StepView {
    pub id: usize,
    pub axiom: Axiom,
    pub consumed: Vec<ConsumedView>,
    pub residual: String,
}

pub fn steps(an: &Analysis) -> Vec<StepView> {
    an.steps
        .steps
        .iter()
        .map(|s| StepView {
            id: s.id,
            axiom: s.axiom,
            consumed: s
                .consumed
                .iter()
                .map(|c| ConsumedView { label: c.label.to_string(), kind: c.kind, recurrent: c.recurrent })
                .collect(),
            residual: render(&s.residual),
        })
        .collect()
}

impl fmt::Display for StepView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} [", self.id, self.axiom)?;
        for (i, c) in self.consumed.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            let kind = serde_json::to_value(c.kind).unwrap();
            write!(f, "{} {}", c.label, kind.as_str().unwrap_or("?"))?;
            if c.recurrent {
                f.write_str(" rec")?;
            }
        }
        write!(f, "] -> {}", self.residual)
    }
}
