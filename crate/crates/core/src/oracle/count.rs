//! Exact term counting with generating functions truncated at a maximal
//! size, optionally tracking which ambient names occur (for the
//! unique-names universe).

/// Coefficients indexed by `(weight, mask)`. With `masks == 1` names are not
/// tracked. With more masks, parts combined by [`Gf::mul`] or [`mset`] must
/// use disjoint names, so each term is counted only when all of its
/// ambient names are pairwise distinct.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gf {
    pub max: usize,
    pub masks: usize,
    pub v: Vec<u64>,
}

impl Gf {
    pub fn zero(max: usize, masks: usize) -> Gf {
        Gf { max, masks, v: vec![0; (max + 1) * masks] }
    }

    pub fn one(max: usize, masks: usize) -> Gf {
        let mut g = Gf::zero(max, masks);
        g.v[0] = 1;
        g
    }

    pub fn get(&self, w: usize, m: usize) -> u64 {
        if w > self.max {
            0
        } else {
            self.v[w * self.masks + m]
        }
    }

    pub fn add(&mut self, w: usize, m: usize, c: u64) {
        if w <= self.max {
            self.v[w * self.masks + m] += c;
        }
    }

    pub fn truncate(&self, max: usize) -> Gf {
        let max = max.min(self.max);
        Gf { max, masks: self.masks, v: self.v[..(max + 1) * self.masks].to_vec() }
    }

    /// Product: independent choices, names kept disjoint.
    pub fn mul(&self, other: &Gf) -> Gf {
        let max = self.max.min(other.max);
        let mut out = Gf::zero(max, self.masks);
        for w1 in 0..=max {
            for m1 in 0..self.masks {
                let a = self.get(w1, m1);
                if a == 0 {
                    continue;
                }
                for w2 in 0..=(max - w1) {
                    for m2 in 0..self.masks {
                        if m1 & m2 != 0 {
                            continue;
                        }
                        let b = other.get(w2, m2);
                        if b != 0 {
                            out.add(w1 + w2, m1 | m2, a * b);
                        }
                    }
                }
            }
        }
        out
    }

    /// Sum of coefficients with weight `<= max` and mask disjoint from `avoid`.
    pub fn total(&self, max: usize, avoid: usize) -> u64 {
        let mut s = 0;
        for w in 0..=max.min(self.max) {
            for m in 0..self.masks {
                if m & avoid == 0 {
                    s += self.get(w, m);
                }
            }
        }
        s
    }
}

/// Multisets with repetition: `C(c + i - 1, i)`.
pub fn multichoose(c: u64, i: usize) -> u64 {
    let mut r: u128 = 1;
    for j in 0..i as u128 {
        r = r * (c as u128 + j) / (j + 1);
    }
    u64::try_from(r).expect("count overflow")
}

/// Multisets drawn from the items counted by `classes` (each entry: item
/// weight, mask and number of distinct items). `exact` fixes the number of
/// items chosen; otherwise any number. Items with a non-empty mask can be
/// chosen at most once in unique-names mode, since a repeat would repeat
/// its names.
pub fn mset(classes: &[(usize, usize, u64)], max: usize, masks: usize, exact: Option<usize>) -> Gf {
    let unique = masks > 1;
    let kdim = exact.map_or(1, |k| k + 1);
    // dp[j][w][m]
    let idx = |j: usize, w: usize, m: usize| (j * (max + 1) + w) * masks + m;
    let mut dp = vec![0u64; kdim * (max + 1) * masks];
    dp[idx(0, 0, 0)] = 1;
    for &(cw, cm, c) in classes {
        if c == 0 || cw > max {
            continue;
        }
        let mut next = dp.clone();
        for j in 0..kdim {
            for w in 0..=max {
                for m in 0..masks {
                    let base = dp[idx(j, w, m)];
                    if base == 0 {
                        continue;
                    }
                    let mut i = 1;
                    loop {
                        let nw = w + i * cw;
                        let nj = if exact.is_some() { j + i } else { 0 };
                        if nw > max || nj >= kdim {
                            break;
                        }
                        if cw == 0 && exact.is_none() {
                            panic!("weight-0 items need an exact item count");
                        }
                        let ways = if unique && cm != 0 {
                            if i > 1 || m & cm != 0 {
                                break;
                            }
                            c
                        } else {
                            multichoose(c, i)
                        };
                        next[idx(nj, nw, m | cm)] += base * ways;
                        i += 1;
                    }
                }
            }
        }
        dp = next;
    }
    let j = exact.unwrap_or(0);
    let mut out = Gf::zero(max, masks);
    for w in 0..=max {
        for m in 0..masks {
            out.v[w * masks + m] = dp[idx(j, w, m)];
        }
    }
    out
}

/// Exactly `k` items drawn (with repetition) from the items counted by `g`.
pub fn mset_exact(g: &Gf, k: usize) -> Gf {
    if k == 1 {
        return g.clone();
    }
    let mut classes = Vec::new();
    for w in 0..=g.max {
        for m in 0..g.masks {
            classes.push((w, m, g.get(w, m)));
        }
    }
    mset(&classes, g.max, g.masks, Some(k))
}

/// Number of capability-prefix atoms per name for a calculus.
pub fn cap_count(safe: bool) -> u64 {
    if safe {
        6
    } else {
        3
    }
}

/// Counts of replication- and restriction-free ambient terms by size (and
/// ambient-name mask when `unique`), over a pool of `names` names.
pub fn term_counts(max: usize, names: usize, safe: bool, unique: bool) -> Gf {
    let masks = if unique { 1 << names } else { 1 };
    let caps = cap_count(safe) * names as u64;
    // atoms[s]: by mask
    let mut atoms: Vec<Vec<u64>> = vec![vec![0; masks]; max + 1];
    let mut terms = Gf::one(max, masks);
    for s in 1..=max {
        if s == 1 {
            atoms[1][0] += 1; // ok
        }
        for m in 0..masks {
            let inner = terms.get(s - 1, m);
            if inner == 0 {
                continue;
            }
            atoms[s][m] += caps * inner;
            for n in 0..names {
                if unique {
                    if m & (1 << n) == 0 {
                        atoms[s][m | (1 << n)] += inner;
                    }
                } else {
                    atoms[s][0] += inner;
                }
            }
        }
        // a parallel of k atoms of sizes s_i has size sum(s_i) + k - 1, so
        // weigh each atom by size + 1 and read size s at weight s + 1
        let mut classes = Vec::new();
        for (a, row) in atoms.iter().enumerate().skip(1).take(s) {
            for (m, &c) in row.iter().enumerate() {
                classes.push((a + 1, m, c));
            }
        }
        let all = mset(&classes, s + 1, masks, None);
        for m in 0..masks {
            terms.v[s * masks + m] = all.get(s + 1, m);
        }
    }
    terms
}
