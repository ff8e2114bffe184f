//! Seeded random generators of small replication-free terms, one grammar
//! per calculus. Used for the semantic cross-checks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::syntax::{assign_labels, size, Branch, Calculus, Cap, Guard, Name, Pattern, Proc, Rule, Term};

struct Gen<'r> {
    rng: &'r mut ChaCha8Rng,
    calculus: Calculus,
    free: Vec<Name>,
    /// Names bound by enclosing restrictions and inputs.
    scope: Vec<Name>,
    /// Join: defined channels in scope, with their arity.
    defined: Vec<(Name, bool)>,
    /// Ambients: names of the enclosing ambients, innermost last.
    hosts: Vec<Name>,
    fresh: u32,
}

impl Gen<'_> {
    fn new_name(&mut self, stem: &str) -> Name {
        self.fresh += 1;
        Name::new(&format!("{stem}{}", self.fresh))
    }

    fn any_name(&mut self) -> Name {
        let n = self.free.len() + self.scope.len();
        let i = self.rng.gen_range(0..n);
        if i < self.free.len() {
            self.free[i].clone()
        } else {
            self.scope[i - self.free.len()].clone()
        }
    }

    fn proc(&mut self, budget: usize) -> Proc {
        if budget == 0 {
            return Proc::Nil;
        }
        if budget >= 3 && self.rng.gen_bool(0.6) {
            let left = self.rng.gen_range(1..=budget - 2);
            let right = budget - 1 - left;
            return Proc::par(vec![self.proc(left), self.proc(right)]);
        }
        self.atom(budget)
    }

    fn scoped(&mut self, n: Name, budget: usize) -> Proc {
        self.scope.push(n);
        let p = self.proc(budget);
        self.scope.pop();
        p
    }

    fn atom(&mut self, budget: usize) -> Proc {
        let rest = budget - 1;
        if self.rng.gen_bool(0.08) {
            return Proc::Success;
        }
        if rest > 0 && self.calculus != Calculus::Join && self.rng.gen_bool(0.1) {
            let n = self.new_name("r");
            return Proc::res(n.clone(), self.scoped(n, rest));
        }
        match self.calculus {
            Calculus::Ma | Calculus::Sa => {
                let n = self.any_name();
                if self.rng.gen_bool(0.4) {
                    self.hosts.push(n.clone());
                    let body = self.proc(rest);
                    self.hosts.pop();
                    Proc::amb(n, body)
                } else {
                    let caps: &[Cap] =
                        if self.calculus == Calculus::Sa { &Cap::ALL } else { &[Cap::In, Cap::Out, Cap::Open] };
                    let cap = *caps.choose(self.rng).unwrap();
                    // aim co-capabilities at the host and `out` at the
                    // host's parent most of the time
                    let depth = match cap {
                        Cap::CoIn | Cap::CoOut | Cap::CoOpen => 1,
                        Cap::Out => 2,
                        _ => 0,
                    };
                    let n = match self.hosts.len().checked_sub(depth) {
                        Some(i) if depth > 0 && self.rng.gen_bool(0.7) => self.hosts[i].clone(),
                        _ => n,
                    };
                    Proc::act(cap, n, self.proc(rest))
                }
            }
            Calculus::PiMix | Calculus::PiSep | Calculus::PiAsyn => self.sum(budget),
            Calculus::Join => self.join_atom(budget),
        }
    }

    fn guard(&mut self, polarity: Option<bool>) -> (Guard, Option<Name>) {
        let chan = self.any_name();
        let monadic = self.rng.gen_bool(0.8);
        let output = polarity.unwrap_or_else(|| self.rng.gen_bool(0.5));
        if self.rng.gen_bool(0.1) {
            return (Guard::Tau, None);
        }
        if output {
            let obj = monadic.then(|| self.any_name());
            (Guard::Out { chan, obj }, None)
        } else {
            let var = monadic.then(|| self.new_name("y"));
            (Guard::In { chan, var: var.clone() }, var)
        }
    }

    fn sum(&mut self, budget: usize) -> Proc {
        // k branches cost k guards plus k - 1 choice operators
        let max_k = if self.calculus == Calculus::PiAsyn { 1 } else { budget.div_ceil(2).min(3) };
        let k = self.rng.gen_range(1..=max_k);
        let polarity = (self.calculus == Calculus::PiSep).then(|| self.rng.gen_bool(0.5));
        let mut left = budget - (2 * k - 1);
        let mut branches = Vec::new();
        for i in 0..k {
            let share = if i + 1 == k { left } else { self.rng.gen_range(0..=left) };
            left -= share;
            let (guard, bound) = self.guard(polarity);
            let async_out = self.calculus == Calculus::PiAsyn && matches!(guard, Guard::Out { .. });
            let cont = if async_out {
                Proc::Nil
            } else if let Some(v) = bound {
                self.scoped(v, share)
            } else {
                self.proc(share)
            };
            branches.push(Branch { guard, cont });
        }
        Proc::sum(branches)
    }

    fn message(&mut self) -> Proc {
        if !self.defined.is_empty() && self.rng.gen_bool(0.8) {
            let (chan, monadic) = self.defined.choose(self.rng).unwrap().clone();
            let arg = monadic.then(|| self.any_name());
            Proc::msg(chan, arg)
        } else {
            let chan = self.any_name();
            let arg = self.rng.gen_bool(0.5).then(|| self.any_name());
            Proc::msg(chan, arg)
        }
    }

    fn join_atom(&mut self, budget: usize) -> Proc {
        if budget < 4 || self.rng.gen_bool(0.45) {
            return self.message();
        }
        // def: 1 for the operator, each rule costs its patterns plus body
        let chans: Vec<(Name, bool)> = (0..self.rng.gen_range(1..=2))
            .map(|_| {
                let c = self.new_name("d");
                (c, self.rng.gen_bool(0.6))
            })
            .collect();
        let mark = self.defined.len();
        self.defined.extend(chans.iter().cloned());
        let mut left = budget - 1;
        let mut rules = Vec::new();
        let n_rules = if left >= 4 && self.rng.gen_bool(0.3) { 2 } else { 1 };
        for _ in 0..n_rules {
            let mut pool = chans.clone();
            pool.shuffle(self.rng);
            let n_pat = self.rng.gen_range(1..=pool.len().min(left.saturating_sub(1)).max(1));
            let patterns: Vec<Pattern> = pool[..n_pat]
                .iter()
                .map(|(c, monadic)| Pattern { chan: c.clone(), var: monadic.then(|| self.new_name("v")) })
                .collect();
            left = left.saturating_sub(n_pat);
            let share = self.rng.gen_range(0..=left / 2);
            left -= share;
            let vars: Vec<Name> = patterns.iter().filter_map(|p| p.var.clone()).collect();
            let k = vars.len();
            self.scope.extend(vars);
            let body = self.proc(share);
            self.scope.truncate(self.scope.len() - k);
            rules.push(Rule { patterns, body });
        }
        let body = self.proc(left);
        self.defined.truncate(mark);
        Proc::def(rules, body)
    }
}

/// One random term with at most `max_ops` operators.
pub fn random_term(rng: &mut ChaCha8Rng, calculus: Calculus, max_ops: usize) -> Term {
    loop {
        // mostly near the bound, with a small name pool, so that terms interact
        let budget = rng.gen_range(max_ops.div_ceil(2).max(1)..=max_ops.max(1));
        let free = match calculus {
            Calculus::Ma | Calculus::Sa => vec!["n1", "n2"],
            _ => vec!["a", "b"],
        };
        let mut g = Gen {
            rng: &mut *rng,
            calculus,
            free: free.into_iter().map(Name::new).collect(),
            scope: Vec::new(),
            defined: Vec::new(),
            hosts: Vec::new(),
            fresh: 0,
        };
        let p = g.proc(budget);
        if size(&p) <= max_ops {
            return assign_labels(&Term::new(calculus, p));
        }
    }
}

/// `n` random terms from a fixed seed.
pub fn random_terms(calculus: Calculus, n: usize, max_ops: usize, seed: u64) -> Vec<Term> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_term(&mut rng, calculus, max_ops)).collect()
}

/// `n` random terms that can perform at least one step (drawing at most
/// `1000 * n` candidates).
pub fn interacting_terms(calculus: Calculus, n: usize, max_ops: usize, seed: u64) -> Vec<Term> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..1000 * n {
        if out.len() == n {
            break;
        }
        let t = random_term(&mut rng, calculus, max_ops);
        if !crate::semantics::enabled_consumed(&t, crate::semantics::DEFAULT_UNFOLD).is_empty() {
            out.push(t);
        }
    }
    out
}
