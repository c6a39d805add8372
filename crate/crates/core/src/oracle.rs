//! Brute-force reference computations on explicit finite words, sharing no
//! code with the skeleton machinery: words come from substitution or from
//! the label formula evaluated directly, languages from scanning windows,
//! and block permutations range over all of `Sym(2^p)`.

use std::collections::BTreeSet;

use num_rational::Ratio;

use crate::sigma::SigmaDatum;

/// A finite stretch of a word, `None` where undetermined.
#[derive(Clone, Debug)]
pub struct FiniteWord {
    pub start: i64,
    pub cells: Vec<Option<u8>>,
}

impl FiniteWord {
    pub fn get(&self, h: i64) -> Option<u8> {
        let k = h - self.start;
        if k < 0 {
            return None;
        }
        self.cells.get(k as usize).copied().flatten()
    }

    pub fn end(&self) -> i64 {
        self.start + self.cells.len() as i64
    }

    pub fn flip(&self) -> FiniteWord {
        FiniteWord {
            start: self.start,
            cells: self.cells.iter().map(|c| c.map(|b| 1 - b)).collect(),
        }
    }
}

/// Positions `0..len` of the fixed point of `1 -> 10, 0 -> 11`.
pub fn period_doubling_prefix(len: usize) -> FiniteWord {
    let mut w = vec![1u8];
    while w.len() < len {
        w = w.iter().flat_map(|&b| if b == 1 { [1, 0] } else { [1, 1] }).collect();
    }
    w.truncate(len);
    FiniteWord {
        start: 0,
        cells: w.into_iter().map(Some).collect(),
    }
}

/// `σ(y, z)` on `[lo, hi)` over a cyclic chain: the least level `n` with
/// `h ≠ y_n mod p_n` decides, with label `(h - y_n) mod p_n`.
pub fn sigma_word(d: &SigmaDatum, lo: i64, hi: i64) -> FiniteWord {
    let periods = d.chain().periods().expect("cyclic chain");
    let cells = (lo..hi)
        .map(|h| {
            for n in 1..=d.depth() {
                let p = periods[n - 1] as i64;
                let yn = d.y().residue(n) as i64;
                let a = (h - yn).rem_euclid(p);
                if a != 0 {
                    let step = if n == 1 { 1 } else { periods[n - 2] as i64 };
                    return Some(d.z().level_bits(n)[(a / step - 1) as usize]);
                }
            }
            None
        })
        .collect();
    FiniteWord { start: lo, cells }
}

/// Distinct fully determined factors of length `len`, as strings.
pub fn factors(w: &FiniteWord, len: usize) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    'outer: for s in w.start..=w.end() - len as i64 {
        let mut f = String::with_capacity(len);
        for h in s..s + len as i64 {
            match w.get(h) {
                Some(b) => f.push(if b == 1 { '1' } else { '0' }),
                None => continue 'outer,
            }
        }
        out.insert(f);
    }
    out
}

/// All permutations of `0..n` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(k) = (0..n.saturating_sub(1)).rev().find(|&k| cur[k] < cur[k + 1]) else {
            return out;
        };
        let l = (k + 1..n).rev().find(|&l| cur[k] < cur[l]).expect("exists");
        cur.swap(k, l);
        cur[k + 1..].reverse();
    }
}

/// `w` with each `p`-block starting at `phase mod p` replaced by its image,
/// blocks read most significant bit first.
pub fn permute_blocks(w: &FiniteWord, p: usize, phase: i64, perm: &[usize]) -> FiniteWord {
    let pi = p as i64;
    let first = w.start + (phase - w.start).rem_euclid(pi);
    let mut cells = Vec::new();
    let mut s = first;
    while s + pi <= w.end() {
        let block: Option<Vec<u8>> = (s..s + pi).map(|h| w.get(h)).collect();
        match block {
            Some(bits) => {
                let idx = bits.iter().fold(0usize, |a, &b| (a << 1) | b as usize);
                let t = perm[idx];
                cells.extend((0..p).map(|k| Some(((t >> (p - 1 - k)) & 1) as u8)));
            }
            None => cells.extend(std::iter::repeat_n(None, p)),
        }
        s += pi;
    }
    FiniteWord { start: first, cells }
}

/// `B^p(S, T)` for each target and the denominator `Σ_i |A_{p,i}|`, with
/// the classes `A_{p,i}` told apart by their `len`-factors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleCounts {
    pub b: Vec<u64>,
    pub denominator: u64,
    /// Every distinct class met, with its total multiplicity over `i`.
    pub class_counts: Vec<u64>,
}

impl OracleCounts {
    pub fn lambda(&self, t: usize) -> Ratio<u64> {
        Ratio::new(self.b[t], self.denominator)
    }

    pub fn class_sum(&self) -> Ratio<u64> {
        self.class_counts
            .iter()
            .fold(Ratio::new(0, 1), |a, &c| a + Ratio::new(c, self.denominator))
    }
}

pub fn b_counts(source: &FiniteWord, targets: &[FiniteWord], p: usize, len: usize) -> OracleCounts {
    let target_langs: Vec<BTreeSet<String>> = targets.iter().map(|t| factors(t, len)).collect();
    let perms = all_permutations(1 << p);
    let mut b = vec![0u64; targets.len()];
    let mut denominator = 0;
    let mut all: Vec<(BTreeSet<String>, u64)> = Vec::new();
    for i in 0..p as i64 {
        let classes: BTreeSet<BTreeSet<String>> = perms
            .iter()
            .map(|perm| factors(&permute_blocks(source, p, i, perm), len))
            .collect();
        denominator += classes.len() as u64;
        for (t, lang) in target_langs.iter().enumerate() {
            if classes.contains(lang) {
                b[t] += 1;
            }
        }
        for c in classes {
            match all.iter_mut().find(|(l, _)| *l == c) {
                Some(e) => e.1 += 1,
                None => all.push((c, 1)),
            }
        }
    }
    OracleCounts {
        b,
        denominator,
        class_counts: all.into_iter().map(|(_, k)| k).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitution_prefix() {
        let w = period_doubling_prefix(8);
        let s: String = w
            .cells
            .iter()
            .map(|c| if c.unwrap() == 1 { '1' } else { '0' })
            .collect();
        assert_eq!(s, "10111010");
    }

    #[test]
    fn permutations() {
        assert_eq!(all_permutations(3).len(), 6);
        assert_eq!(all_permutations(4).len(), 24);
        assert_eq!(all_permutations(3)[1], vec![0, 2, 1]);
    }

    #[test]
    fn identity_permutation_keeps_the_word() {
        let w = period_doubling_prefix(64);
        let same = permute_blocks(&w, 2, 0, &[0, 1, 2, 3]);
        assert_eq!(factors(&same, 5), factors(&w, 5));
    }
}
