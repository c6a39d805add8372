//! Block-permutation orbit classes `A_{p,i}`, the counts `B^p` and weights
//! `λ^p`, and index certificates comparing a word with its image under a
//! conjugacy.
//!
//! `A_{p,i}(x)` is computed exactly for `p <= 3` by enumerating `π` on the
//! `p`-blocks that actually occur at phase `i`; the orbit closure of
//! `π̂(x + i)` depends on nothing else. Orbit closures are identified by
//! their language at a fixed length.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::codes::{
    self, block_index_u64, compare_languages, derive_between, BlockCode, BlockPermutation, CodePair, Comparison,
    ConflictCertificate, DeriveOutcome, LanguageSet,
};
use crate::error::{Error, Result};
use crate::sigma::SubshiftHandle;
use crate::toeplitz::{circular_min_gap, Skeleton, Window};

/// Rationals serialize as `"n/d"` strings.
pub(crate) mod ratio_str {
    use num_rational::Ratio;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(r: &Ratio<u64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(r)
    }

    pub mod opt {
        use super::*;

        pub fn serialize<S: Serializer>(r: &Option<Ratio<u64>>, s: S) -> Result<S::Ok, S::Error> {
            match r {
                Some(r) => s.collect_str(r),
                None => s.serialize_none(),
            }
        }
    }
}

/// Largest `p` for exhaustive enumeration of `Sym(2^p)`.
pub const EXACT_MAX_P: usize = 3;

/// Block offset of the windows used to re-verify certificates.
const FRESH_OFFSET: i64 = 1_000_003;

/// `(C)_r`: residues within distance `r` of `C`, mod `p`.
pub fn thicken(c: &[u64], r: u64, p: u64) -> Vec<u64> {
    let mut out = BTreeSet::new();
    if !c.is_empty() && 2 * r + 1 >= p {
        out.extend(0..p);
    }
    for &h in c.iter().filter(|_| 2 * r + 1 < p) {
        for j in 0..=2 * r {
            out.insert((h + p + j - r) % p);
        }
    }
    let out: Vec<u64> = out.into_iter().collect();
    debug_assert!(out.len() as u64 <= (2 * r + 1) * c.len() as u64);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Membership {
    Member,
    NonMember,
    Inconclusive,
}

/// The distinct orbit closures `cl(Z · π̂(x + i))`, `π ∈ Sym(2^p)`, keyed
/// by their `len`-language.
pub fn a_p_i(x: &Skeleton, p: usize, i: i64, len: usize, span: i64) -> Result<Vec<LanguageSet>> {
    if p == 0 || p > EXACT_MAX_P {
        return Err(Error::PeriodTooLarge(p));
    }
    let xi = x.plus(i);
    let big = crate::toeplitz::lcm(x.last_period(), p as u64) as i64;
    let pi = p as i64;
    let mut blocks = BTreeSet::new();
    for k in 0..big / pi {
        let cells: Vec<_> = (k * pi..(k + 1) * pi).map(|h| xi.evaluate(h)).collect();
        if let Some(b) = block_index_u64(&cells) {
            blocks.insert(b);
        }
    }
    let blocks: Vec<u64> = blocks.into_iter().collect();
    let injections = injections(&blocks, 1u64 << p);
    let classes: Vec<LanguageSet> = injections
        .par_iter()
        .map(|targets| {
            let pairs: Vec<(u64, u64)> = blocks.iter().copied().zip(targets.iter().copied()).collect();
            let perm = BlockPermutation::from_pairs(p, &pairs)?;
            codes::language(&perm.image(&xi, 0)?, len, span)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut seen: BTreeMap<BTreeSet<u64>, LanguageSet> = BTreeMap::new();
    for c in classes {
        seen.entry(c.words.clone())
            .and_modify(|e| e.complete &= c.complete)
            .or_insert(c);
    }
    Ok(seen.into_values().collect())
}

/// Every injective assignment of targets in `0..n` to the sources.
fn injections(sources: &[u64], n: u64) -> Vec<Vec<u64>> {
    fn go(k: usize, m: usize, n: u64, used: &mut Vec<bool>, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if k == m {
            out.push(cur.clone());
            return;
        }
        for t in 0..n {
            if !used[t as usize] {
                used[t as usize] = true;
                cur.push(t);
                go(k + 1, m, n, used, cur, out);
                cur.pop();
                used[t as usize] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(
        0,
        sources.len(),
        n,
        &mut vec![false; n as usize],
        &mut Vec::new(),
        &mut out,
    );
    out
}

fn membership_in(classes: &[LanguageSet], t: &LanguageSet) -> Membership {
    let mut all_distinct = true;
    for c in classes {
        match compare_languages(c, t) {
            Comparison::EqualUpTo => return Membership::Member,
            Comparison::Distinct => {}
            Comparison::Inconclusive => all_distinct = false,
        }
    }
    if all_distinct {
        Membership::NonMember
    } else {
        Membership::Inconclusive
    }
}

/// Whether `T ∈ A_{p,i}(x)`.
pub fn a_p_i_membership(
    t: &SubshiftHandle,
    x: &Skeleton,
    p: usize,
    i: i64,
    len: usize,
    span: i64,
) -> Result<Membership> {
    let classes = a_p_i(x, p, i, len, span)?;
    Ok(membership_in(&classes, &t.language(len, span)?))
}

/// `B^p(S, T)` as an interval: `members` certain, up to `inconclusive` more.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BCount {
    pub members: u64,
    pub inconclusive: u64,
}

impl BCount {
    pub fn is_exact(&self) -> bool {
        self.inconclusive == 0
    }

    pub fn max(&self) -> u64 {
        self.members + self.inconclusive
    }
}

/// All `A_{p,i}` for `i < p`.
pub fn all_classes(x: &Skeleton, p: usize, len: usize, span: i64) -> Result<Vec<Vec<LanguageSet>>> {
    (0..p as i64).map(|i| a_p_i(x, p, i, len, span)).collect()
}

fn count(classes: &[Vec<LanguageSet>], t: &LanguageSet) -> BCount {
    let mut b = BCount::default();
    for row in classes {
        match membership_in(row, t) {
            Membership::Member => b.members += 1,
            Membership::Inconclusive => b.inconclusive += 1,
            Membership::NonMember => {}
        }
    }
    b
}

/// `B^p(S, T) = Σ_{i<p} χ_{A_{p,i}(x)}(T)` with `x` the generator of `S`.
pub fn b_p(s: &SubshiftHandle, t: &SubshiftHandle, p: usize, len: usize, span: i64) -> Result<BCount> {
    let classes = all_classes(s.skeleton()?, p, len, span)?;
    Ok(count(&classes, &t.language(len, span)?))
}

/// A finite list of subshifts standing in for part of an isomorphism class.
#[derive(Clone, Debug)]
pub struct WitnessFamily {
    names: Vec<String>,
    members: Vec<SubshiftHandle>,
    len: usize,
    span: i64,
}

impl WitnessFamily {
    /// Rejects empty families and members that are equal up to `len`.
    pub fn new(members: Vec<(String, SubshiftHandle)>, len: usize, span: i64) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::DegenerateFamily("empty family".into()));
        }
        let langs = members
            .iter()
            .map(|(_, h)| h.language(len, span))
            .collect::<Result<Vec<_>>>()?;
        for a in 0..langs.len() {
            for b in a + 1..langs.len() {
                if compare_languages(&langs[a], &langs[b]) == Comparison::EqualUpTo {
                    return Err(Error::DegenerateFamily(format!(
                        "{} and {} are equal up to length {len}",
                        members[a].0, members[b].0
                    )));
                }
            }
        }
        let (names, members) = members.into_iter().unzip();
        Ok(WitnessFamily {
            names,
            members,
            len,
            span,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn members(&self) -> &[SubshiftHandle] {
        &self.members
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn word_len(&self) -> usize {
        self.len
    }

    pub fn span(&self) -> i64 {
        self.span
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LambdaRow {
    pub target: String,
    pub in_family: bool,
    pub b: BCount,
    /// `None` when the count is not exact.
    #[serde(with = "ratio_str::opt")]
    pub lambda: Option<Ratio<u64>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LambdaTable {
    pub source: String,
    pub p: usize,
    pub len: usize,
    pub span: i64,
    /// `Σ_i |A_{p,i}(x)|`.
    pub denominator: u64,
    /// Family members first, then the remaining classes met in some `A_{p,i}`.
    pub rows: Vec<LambdaRow>,
    pub exact: bool,
    /// Sum of `λ` over all rows; 1 whenever `exact`.
    #[serde(with = "ratio_str")]
    pub closure_sum: Ratio<u64>,
    pub family: Vec<String>,
}

/// `λ^p(S, ·)` over the family and every class generated by `π̂`-images.
pub fn lambda_table(family: &WitnessFamily, source: usize, p: usize) -> Result<LambdaTable> {
    let (len, span) = (family.len, family.span);
    let s = family
        .members
        .get(source)
        .ok_or_else(|| Error::DegenerateFamily(format!("no member {source}")))?;
    let classes = all_classes(s.skeleton()?, p, len, span)?;
    let denominator: u64 = classes.iter().map(|row| row.len() as u64).sum();
    if denominator == 0 {
        return Err(Error::DegenerateFamily("all A_{p,i} are empty".into()));
    }
    let mut rows = Vec::new();
    let mut exact = true;
    let mut family_langs = Vec::new();
    for (name, h) in family.names.iter().zip(&family.members) {
        let l = h.language(len, span)?;
        let b = count(&classes, &l);
        exact &= b.is_exact();
        rows.push(LambdaRow {
            target: name.clone(),
            in_family: true,
            b,
            lambda: b.is_exact().then(|| Ratio::new(b.members, denominator)),
        });
        family_langs.push(l);
    }
    let mut extra: BTreeMap<BTreeSet<u64>, (usize, usize, LanguageSet)> = BTreeMap::new();
    for (i, row) in classes.iter().enumerate() {
        for (k, c) in row.iter().enumerate() {
            let known = family_langs
                .iter()
                .any(|l| compare_languages(l, c) == Comparison::EqualUpTo);
            if !known {
                extra.entry(c.words.clone()).or_insert((i, k, c.clone()));
            }
        }
    }
    let mut extra: Vec<_> = extra.into_values().collect();
    extra.sort_by_key(|e| (e.0, e.1));
    for (i, k, c) in extra {
        let b = count(&classes, &c);
        exact &= b.is_exact();
        rows.push(LambdaRow {
            target: format!("image:p{p}:i{i}:{k}"),
            in_family: false,
            b,
            lambda: b.is_exact().then(|| Ratio::new(b.members, denominator)),
        });
    }
    let closure_sum = rows
        .iter()
        .filter_map(|r| r.lambda)
        .fold(Ratio::new(0, 1), |a, b| a + b);
    Ok(LambdaTable {
        source: family.names[source].clone(),
        p,
        len,
        span,
        denominator,
        rows,
        exact,
        closure_sum,
        family: family.names.clone(),
    })
}

pub fn lambda_p(family: &WitnessFamily, source: usize, target: usize, p: usize) -> Result<Option<Ratio<u64>>> {
    let table = lambda_table(family, source, p)?;
    Ok(table.rows[target].lambda)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum IndexStatus {
    /// `π̂(x + i) = y + i`, with `π` stored in the certificate's table.
    Claim1 {
        pi: usize,
    },
    /// `σ̂(x + i) = x + i + 1`.
    Chained {
        next: u64,
    },
    HoleAdjacent,
    Hole,
    /// No determined cell to compare at this depth.
    Undetermined,
    Counterexample {
        detail: String,
    },
}

impl IndexStatus {
    pub fn label(&self) -> &'static str {
        match self {
            IndexStatus::Claim1 { .. } => "claim1",
            IndexStatus::Chained { .. } => "claim2",
            IndexStatus::HoleAdjacent => "hole-adjacent",
            IndexStatus::Hole => "hole",
            IndexStatus::Undetermined => "undetermined",
            IndexStatus::Counterexample { .. } => "counterexample",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IndexCertificate {
    pub p: usize,
    pub r: usize,
    pub holes: Vec<u64>,
    pub entries: Vec<IndexStatus>,
    /// Distinct permutations referenced by `Claim1` entries.
    pub pis: Vec<BlockPermutation>,
    pub conflicts: Vec<ConflictCertificate>,
}

impl IndexCertificate {
    pub fn count(&self, pred: impl Fn(&IndexStatus) -> bool) -> usize {
        self.entries.iter().filter(|e| pred(e)).count()
    }

    pub fn certified(&self) -> usize {
        self.count(|e| matches!(e, IndexStatus::Claim1 { .. }))
    }

    /// Indices outside the thickened holes that did not certify.
    pub fn failures(&self) -> usize {
        self.count(|e| matches!(e, IndexStatus::Undetermined | IndexStatus::Counterexample { .. }))
    }
}

/// Compares `π̂` applied to a window of `x + i` far from the origin with
/// `y + i`. `None` when no cell is determined on both sides.
fn check_block_map(pi: &BlockPermutation, x: &Skeleton, y: &Skeleton, p: usize, i: i64, shift: i64) -> Option<bool> {
    let big = crate::toeplitz::lcm(x.last_period(), y.last_period()).max(p as u64) as i64;
    let blocks = big / p as i64 + 2;
    let s = FRESH_OFFSET * p as i64 + i;
    let w: Window = x.window(s, (blocks * p as i64) as usize);
    let out = pi.apply(&w, s);
    let mut known = 0usize;
    for h in out.start..out.end() {
        let (a, b) = (out.get(h), y.evaluate(h + shift));
        if a.is_known() && b.is_known() {
            if a != b {
                return Some(false);
            }
            known += 1;
        }
    }
    (known > 0).then_some(true)
}

/// For each `i` outside the `r`-thickened `p`-holes of `x`, finds `π` with
/// `π̂(x + i) = y + i` for `y = code(x)` and re-checks it on a fresh window.
pub fn certify_claim1(code: &BlockCode, x: &Skeleton, p: usize, r: usize) -> Result<IndexCertificate> {
    let y = code.image(x)?;
    certify_claim1_between(x, &y, p, r)
}

pub fn certify_claim1_between(x: &Skeleton, y: &Skeleton, p: usize, r: usize) -> Result<IndexCertificate> {
    let holes = x.holes(p as u64)?;
    let thick: BTreeSet<u64> = thicken(&holes, r as u64, p as u64).into_iter().collect();
    let results: Vec<Result<(IndexStatus, Option<BlockPermutation>, Option<ConflictCertificate>)>> = (0..p as u64)
        .into_par_iter()
        .map(|i| {
            if thick.contains(&i) {
                return Ok((IndexStatus::HoleAdjacent, None, None));
            }
            match derive_between(x, y, p, i as i64) {
                Ok(DeriveOutcome::Derived { perm, .. }) => match check_block_map(&perm, x, y, p, i as i64, 0) {
                    Some(true) => Ok((IndexStatus::Claim1 { pi: 0 }, Some(perm), None)),
                    Some(false) => Ok((
                        IndexStatus::Counterexample {
                            detail: format!("derived block map fails on a fresh window at i = {i}"),
                        },
                        None,
                        None,
                    )),
                    None => Ok((IndexStatus::Undetermined, None, None)),
                },
                Ok(DeriveOutcome::Conflict(c)) => Ok((
                    IndexStatus::Counterexample {
                        detail: format!("{:?} at blocks {:?}", c.kind, c.positions),
                    },
                    None,
                    Some(c),
                )),
                Err(Error::DepthInsufficient(_)) => Ok((IndexStatus::Undetermined, None, None)),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut cert = IndexCertificate {
        p,
        r,
        holes,
        entries: Vec::with_capacity(p),
        pis: Vec::new(),
        conflicts: Vec::new(),
    };
    for res in results {
        let (mut status, perm, conflict) = res?;
        if let Some(perm) = perm {
            let id = match cert.pis.iter().position(|q| *q == perm) {
                Some(k) => k,
                None => {
                    cert.pis.push(perm);
                    cert.pis.len() - 1
                }
            };
            status = IndexStatus::Claim1 { pi: id };
        }
        cert.conflicts.extend(conflict);
        cert.entries.push(status);
    }
    Ok(cert)
}

/// For each `i ∈ Per_p(x)`, checks `σ̂(x + i) = x + i + 1` with `σ` the
/// cyclic block shift, and chains `i` to `i + 1`.
pub fn certify_claim2(x: &Skeleton, p: usize) -> Result<IndexCertificate> {
    let holes = x.holes(p as u64)?;
    let sigma = codes::cyclic_block_shift(p)?;
    let hole_set: BTreeSet<u64> = holes.iter().copied().collect();
    let entries = (0..p as u64)
        .into_par_iter()
        .map(|i| {
            if hole_set.contains(&i) {
                return IndexStatus::Hole;
            }
            match check_block_map(&sigma, x, x, p, i as i64, 1) {
                Some(true) => IndexStatus::Chained {
                    next: (i + 1) % p as u64,
                },
                Some(false) => IndexStatus::Counterexample {
                    detail: format!("cyclic shift does not advance x + {i}"),
                },
                None => IndexStatus::Undetermined,
            }
        })
        .collect();
    Ok(IndexCertificate {
        p,
        r: 0,
        holes,
        entries,
        pis: vec![sigma],
        conflicts: Vec::new(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum L1Verdict {
    BoundWitnessed,
    NotWitnessed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct L1Report {
    pub p: usize,
    pub r: usize,
    pub holes_x: usize,
    pub holes_y: usize,
    /// Least circular gap between holes of either word (`p` for one hole).
    pub min_gap: u64,
    pub certified_x: usize,
    pub certified_y: usize,
    pub uncertified_x: usize,
    pub uncertified_y: usize,
    #[serde(with = "ratio_str")]
    pub certified_fraction: Ratio<u64>,
    /// `(2r + 1) / M`.
    #[serde(with = "ratio_str::opt")]
    pub epsilon_bound: Option<Ratio<u64>>,
    #[serde(with = "ratio_str::opt")]
    pub eps_requested: Option<Ratio<u64>>,
    /// `#uncertified <= (2r + 1) |H_p|` on both sides.
    pub count_bound_holds: bool,
    pub chained_x: usize,
    pub verdict: L1Verdict,
    pub claim1_x: IndexCertificate,
    pub claim1_y: IndexCertificate,
    pub claim2_x: IndexCertificate,
}

/// Certifies Claims 1 and 2 at period `p` for `y = φ(x)`, and `x` against
/// `ψ(y)` for the reverse direction.
///
/// Witnessed iff every index outside the thickened holes certifies on both
/// sides and the gap `M` makes `ε = (2r + 1)/M` at most `eps` (below 1 when
/// no `eps` is given).
pub fn l1_certificate(x: &Skeleton, pair: &CodePair, p: usize, eps: Option<Ratio<u64>>) -> Result<L1Report> {
    let r = pair.forward.radius().max(pair.backward.radius());
    let y = pair.forward.image(x)?;
    let claim1_x = certify_claim1_between(x, &y, p, r)?;
    let x_back = pair.backward.image(&y)?;
    let claim1_y = certify_claim1_between(&y, &x_back, p, r)?;
    let claim2_x = certify_claim2(x, p)?;
    let holes_y = y.holes(p as u64)?;
    let gap = circular_min_gap(&claim1_x.holes, p as u64).min(circular_min_gap(&holes_y, p as u64));
    let uncertified_x = p - claim1_x.certified();
    let uncertified_y = p - claim1_y.certified();
    let width = 2 * r as u64 + 1;
    let count_bound_holds = uncertified_x as u64 <= width * claim1_x.holes.len() as u64
        && uncertified_y as u64 <= width * holes_y.len() as u64;
    let epsilon_bound = (gap > 0).then(|| Ratio::new(width, gap));
    let gap_ok = match (epsilon_bound, eps) {
        (Some(e), Some(want)) => e <= want,
        (Some(e), None) => e < Ratio::new(1, 1),
        (None, _) => false,
    };
    let all_certified = claim1_x.failures() == 0
        && claim1_y.failures() == 0
        && claim1_x.conflicts.is_empty()
        && claim1_y.conflicts.is_empty();
    let verdict = if all_certified && gap_ok && count_bound_holds {
        L1Verdict::BoundWitnessed
    } else {
        L1Verdict::NotWitnessed
    };
    Ok(L1Report {
        p,
        r,
        holes_x: claim1_x.holes.len(),
        holes_y: holes_y.len(),
        min_gap: gap,
        certified_x: claim1_x.certified(),
        certified_y: claim1_y.certified(),
        uncertified_x,
        uncertified_y,
        certified_fraction: Ratio::new(claim1_x.certified() as u64, p as u64),
        epsilon_bound,
        eps_requested: eps,
        count_bound_holds,
        chained_x: claim2_x.count(|e| matches!(e, IndexStatus::Chained { .. })),
        verdict,
        claim1_x,
        claim1_y,
        claim2_x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn thicken_examples() {
        assert_eq!(thicken(&[0], 1, 8), vec![0, 1, 7]);
        assert!(thicken(&[], 3, 8).is_empty());
        assert_eq!(thicken(&[0, 4], 2, 8), (0..8).collect::<Vec<_>>());
        assert_eq!(thicken(&[0], 5, 4), vec![0, 1, 2, 3]);
    }

    fn pd() -> Skeleton {
        Skeleton::period_doubling(10).unwrap()
    }

    #[test]
    fn exact_classes_small_p() {
        let x = pd();
        let s = SubshiftHandle::from_skeleton(x.clone());
        let flip = SubshiftHandle::from_skeleton(BlockCode::flip().image(&x).unwrap());
        assert_eq!(a_p_i_membership(&s, &x, 1, 0, 8, 1024).unwrap(), Membership::Member);
        assert_eq!(a_p_i_membership(&flip, &x, 1, 0, 8, 1024).unwrap(), Membership::Member);
        assert_eq!(a_p_i(&x, 1, 0, 8, 1024).unwrap().len(), 2);
        assert_eq!(
            b_p(&s, &s, 2, 8, 1024).unwrap(),
            BCount {
                members: 2,
                inconclusive: 0
            }
        );
        assert_eq!(b_p(&s, &flip, 1, 8, 1024).unwrap().members, 1);
        let zero = SubshiftHandle::from_skeleton(Skeleton::constant(0));
        assert_eq!(b_p(&s, &zero, 2, 8, 1024).unwrap(), BCount::default());
        assert!(matches!(a_p_i(&x, 4, 0, 8, 1024), Err(Error::PeriodTooLarge(4))));
    }

    #[test]
    fn lambda_examples() {
        let x = pd();
        let s = SubshiftHandle::from_skeleton(x.clone());
        let flip = SubshiftHandle::from_skeleton(BlockCode::flip().image(&x).unwrap());
        let fam = WitnessFamily::new(vec![("S".into(), s.clone()), ("flip".into(), flip)], 8, 1024).unwrap();
        let t = lambda_table(&fam, 0, 1).unwrap();
        assert_eq!(t.denominator, 2);
        assert_eq!(t.rows[0].lambda, Some(Ratio::new(1, 2)));
        assert_eq!(t.rows[1].lambda, Some(Ratio::new(1, 2)));
        assert_eq!(t.closure_sum, Ratio::new(1, 1));
        let t2 = lambda_table(&fam, 0, 2).unwrap();
        assert!(t2.exact);
        assert_eq!(t2.closure_sum, Ratio::new(1, 1));

        // a flip-symmetric word: flip(S) = S
        let sym = Skeleton::periodic(&[0, 1]).unwrap();
        let fam = WitnessFamily::new(vec![("S".into(), SubshiftHandle::from_skeleton(sym))], 4, 64).unwrap();
        assert_eq!(lambda_p(&fam, 0, 0, 1).unwrap(), Some(Ratio::new(1, 1)));

        assert!(matches!(
            WitnessFamily::new(vec![], 4, 64),
            Err(Error::DegenerateFamily(_))
        ));
        let dup = vec![("a".into(), s.clone()), ("b".into(), s)];
        assert!(matches!(
            WitnessFamily::new(dup, 8, 1024),
            Err(Error::DegenerateFamily(_))
        ));
    }

    #[test]
    fn b_p_is_representative_independent() {
        let x = pd();
        let t = SubshiftHandle::from_skeleton(BlockCode::flip().image(&x).unwrap());
        for p in [1usize, 2] {
            let a = b_p(&SubshiftHandle::from_skeleton(x.clone()), &t, p, 8, 1024).unwrap();
            for k in [1i64, 3, 5] {
                let shifted = SubshiftHandle::from_skeleton(x.shift(k));
                assert_eq!(b_p(&shifted, &t, p, 8, 1024).unwrap(), a);
            }
        }
    }

    #[test]
    fn claim1_flip() {
        let x = pd();
        let cert = certify_claim1(&BlockCode::flip(), &x, 4, 0).unwrap();
        assert_eq!(cert.holes, vec![3]);
        assert_eq!(cert.entries[3], IndexStatus::HoleAdjacent);
        assert_eq!(cert.certified(), 3);
        let comp = BlockPermutation::complement(4).unwrap();
        for e in &cert.entries {
            if let IndexStatus::Claim1 { pi } = e {
                for (&a, &b) in cert.pis[*pi].explicit_pairs().iter() {
                    assert_eq!(b, comp.apply_block(a));
                }
            }
        }
    }

    #[test]
    fn claim1_radius_one() {
        let x = Skeleton::period_doubling(12).unwrap();
        let cert = certify_claim1(&BlockCode::right_shift(), &x, 16, 1).unwrap();
        assert_eq!(cert.certified(), 13);
        assert_eq!(cert.failures(), 0);
        let cert = certify_claim1(&BlockCode::majority(), &x, 8, 1).unwrap();
        assert_eq!(cert.certified() + 3, 8);
    }

    #[test]
    fn claim2_examples() {
        let total = Skeleton::periodic(&[0, 1, 1, 0]).unwrap();
        let cert = certify_claim2(&total, 4).unwrap();
        assert!(cert.entries.iter().all(|e| matches!(e, IndexStatus::Chained { .. })));
        let cert = certify_claim2(&pd(), 8).unwrap();
        assert_eq!(cert.entries[7], IndexStatus::Hole);
        assert_eq!(cert.count(|e| matches!(e, IndexStatus::Chained { .. })), 7);
    }

    #[test]
    fn l1_examples() {
        let x = Skeleton::period_doubling(12).unwrap();
        let flip = CodePair {
            forward: BlockCode::flip(),
            backward: BlockCode::flip(),
        };
        let r8 = l1_certificate(&x, &flip, 8, None).unwrap();
        assert_eq!(r8.uncertified_x, 1);
        assert_eq!(r8.certified_fraction, Ratio::new(7, 8));
        assert_eq!(r8.verdict, L1Verdict::BoundWitnessed);
        let r32 = l1_certificate(&x, &flip, 32, None).unwrap();
        assert_eq!(r32.certified_fraction, Ratio::new(31, 32));

        let two = Skeleton::two_hole_tower(6).unwrap();
        let r = l1_certificate(&two, &flip, 27, None).unwrap();
        assert_eq!(r.holes_x, 2);
        assert_eq!(r.verdict, L1Verdict::NotWitnessed);
    }

    proptest! {
        #[test]
        fn thicken_size_bound(c in prop::collection::btree_set(0u64..64, 0..10), r in 0u64..10) {
            let c: Vec<u64> = c.into_iter().collect();
            let t = thicken(&c, r, 64);
            prop_assert!(t.len() as u64 <= (2 * r + 1) * c.len() as u64);
            for h in &c {
                prop_assert!(t.contains(h));
            }
        }
    }
}
