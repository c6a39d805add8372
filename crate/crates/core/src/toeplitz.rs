//! Two-sided binary Toeplitz words over `Z` as staged periodic skeletons.
//!
//! Stage `n` has period `p_n` (each dividing the next) and fills some residue
//! classes mod `p_n`. A position not covered by any stage is unknown; no
//! operation ever invents a bit for it.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported stage period (dense cumulative tables are kept).
pub const MAX_PERIOD: u64 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cell {
    Zero,
    One,
    Unknown,
}

impl Cell {
    pub fn from_bit(b: u8) -> Cell {
        if b == 0 {
            Cell::Zero
        } else {
            Cell::One
        }
    }

    pub fn bit(self) -> Option<u8> {
        match self {
            Cell::Zero => Some(0),
            Cell::One => Some(1),
            Cell::Unknown => None,
        }
    }

    pub fn is_known(self) -> bool {
        self != Cell::Unknown
    }

    pub fn to_char(self) -> char {
        match self {
            Cell::Zero => '0',
            Cell::One => '1',
            Cell::Unknown => '?',
        }
    }

    pub fn from_char(c: char) -> Option<Cell> {
        match c {
            '0' => Some(Cell::Zero),
            '1' => Some(Cell::One),
            '?' => Some(Cell::Unknown),
            _ => None,
        }
    }
}

/// Finite restriction `x|[start, start + len)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Window {
    pub start: i64,
    pub cells: Vec<Cell>,
}

impl Window {
    pub fn new(start: i64, cells: Vec<Cell>) -> Self {
        Window { start, cells }
    }

    pub fn from_bits(start: i64, bits: &str) -> Result<Self> {
        let cells = bits
            .chars()
            .map(|c| Cell::from_char(c).ok_or_else(|| Error::Parse(format!("bad cell {c:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Window { start, cells })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn end(&self) -> i64 {
        self.start + self.cells.len() as i64
    }

    pub fn get(&self, h: i64) -> Cell {
        if h < self.start || h >= self.end() {
            return Cell::Unknown;
        }
        self.cells[(h - self.start) as usize]
    }

    pub fn is_total(&self) -> bool {
        self.cells.iter().all(|c| c.is_known())
    }

    pub fn bits(&self) -> String {
        self.cells.iter().map(|c| c.to_char()).collect()
    }

    /// Window dump: an `offset <start>` header line, then the cells.
    pub fn dump(&self) -> String {
        format!("offset {}\n{}\n", self.start, self.bits())
    }

    pub fn parse_dump(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty window dump".into()))?;
        let start = header
            .strip_prefix("offset ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad window header {header:?}")))?;
        Window::from_bits(start, lines.next().unwrap_or("").trim())
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.bits(), self.start)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    #[serde(rename = "p")]
    pub period: u64,
    pub fill: BTreeMap<u64, u8>,
}

/// A staged partial periodic filling of a two-sided binary word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Skeleton {
    stages: Vec<Stage>,
    /// Cumulative cells mod the last period.
    cum: Vec<Cell>,
}

#[derive(Serialize, Deserialize)]
struct SkeletonFile {
    stages: Vec<Stage>,
}

impl Serialize for Skeleton {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SkeletonFile {
            stages: self.stages.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Skeleton {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = SkeletonFile::deserialize(d)?;
        Skeleton::new(f.stages).map_err(serde::de::Error::custom)
    }
}

/// Per-level separated-holes data, valid only up to the listed depth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HoleProfile {
    pub rows: Vec<ProfileRow>,
    pub threshold: u64,
    /// Gaps non-decreasing and the last gap exceeds `threshold`.
    pub separated_up_to_depth: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProfileRow {
    pub p: u64,
    pub per: usize,
    pub holes: usize,
    pub min_gap: u64,
}

/// Periodic classes found by scanning a finite window; may overreport.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmpiricalPer {
    pub p: u64,
    pub residues: Vec<u64>,
    pub window: (i64, usize),
}

impl Skeleton {
    /// Validates divisibility, residue ranges, consistency with earlier
    /// stages, and that every stage after the first adds a fill.
    pub fn new(stages: Vec<Stage>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::InvalidSkeleton("no stages".into()));
        }
        let mut prev_cum: Vec<Cell> = vec![Cell::Unknown; 1];
        let mut prev_p = 1u64;
        for (n, st) in stages.iter().enumerate() {
            let p = st.period;
            if p == 0 || p > MAX_PERIOD {
                return Err(Error::InvalidSkeleton(format!("stage {n}: period {p} unsupported")));
            }
            if p % prev_p != 0 {
                return Err(Error::InvalidSkeleton(format!(
                    "stage {n}: period {p} is not a multiple of {prev_p}"
                )));
            }
            if n > 0 && p == prev_p {
                return Err(Error::InvalidSkeleton(format!("stage {n}: repeated period {p}")));
            }
            let mut cum: Vec<Cell> = (0..p).map(|r| prev_cum[(r % prev_p) as usize]).collect();
            let mut added = false;
            for (&r, &b) in &st.fill {
                if r >= p || b > 1 {
                    return Err(Error::InvalidSkeleton(format!("stage {n}: bad fill {r} -> {b}")));
                }
                match cum[r as usize] {
                    Cell::Unknown => {
                        cum[r as usize] = Cell::from_bit(b);
                        added = true;
                    }
                    c if c == Cell::from_bit(b) => {}
                    _ => {
                        return Err(Error::InvalidSkeleton(format!(
                            "stage {n}: residue {r} mod {p} contradicts an earlier stage"
                        )))
                    }
                }
            }
            if n > 0 && !added && prev_cum.contains(&Cell::Unknown) {
                return Err(Error::InvalidSkeleton(format!("stage {n} adds no fills")));
            }
            prev_cum = cum;
            prev_p = p;
        }
        Ok(Skeleton { stages, cum: prev_cum })
    }

    /// Builds a skeleton from cumulative tables; consecutive entries must
    /// refine each other. Stages that add nothing are dropped, so derived
    /// skeletons always satisfy the strict-growth invariant.
    pub fn from_cumulative(levels: Vec<(u64, Vec<Cell>)>) -> Result<Self> {
        let mut stages: Vec<Stage> = Vec::new();
        let mut prev: Option<(u64, Vec<Cell>)> = None;
        for (p, cum) in levels {
            if cum.len() as u64 != p {
                return Err(Error::InvalidSkeleton("cumulative table size mismatch".into()));
            }
            let mut fill = BTreeMap::new();
            for (r, c) in cum.iter().enumerate() {
                if let Some(b) = c.bit() {
                    let inherited = prev.as_ref().map(|(pp, pc)| pc[r % *pp as usize]);
                    match inherited {
                        Some(Cell::Unknown) | None => {
                            fill.insert(r as u64, b);
                        }
                        Some(old) if old == *c => {}
                        Some(_) => return Err(Error::InvalidSkeleton("cumulative tables disagree".into())),
                    }
                }
            }
            if let Some(last) = stages.last_mut() {
                if last.period == p {
                    last.fill.extend(fill);
                    prev = Some((p, cum));
                    continue;
                }
            }
            if fill.is_empty() && !stages.is_empty() {
                // nothing new at this stage: keep the coarser period
                continue;
            }
            stages.push(Stage { period: p, fill });
            prev = Some((p, cum));
        }
        if stages.is_empty() {
            stages.push(Stage {
                period: 1,
                fill: BTreeMap::new(),
            });
        }
        Skeleton::new(stages)
    }

    /// Totally periodic word with the given period block.
    pub fn periodic(bits: &[u8]) -> Result<Self> {
        let fill = bits.iter().enumerate().map(|(r, &b)| (r as u64, b)).collect();
        Skeleton::new(vec![Stage {
            period: bits.len() as u64,
            fill,
        }])
    }

    pub fn constant(bit: u8) -> Self {
        Skeleton::periodic(&[bit]).expect("valid")
    }

    /// The period-doubling word: stage `n` has period `2^n` and sets residue
    /// `2^(n-1) - 1` to 1 for odd `n`, 0 for even `n`. Position `-1` is the
    /// only position never filled.
    pub fn period_doubling(depth: u32) -> Result<Self> {
        if depth == 0 || depth > 24 {
            return Err(Error::InvalidSkeleton(format!(
                "period-doubling depth {depth} unsupported"
            )));
        }
        let stages = (1..=depth)
            .map(|n| Stage {
                period: 1 << n,
                fill: BTreeMap::from([((1u64 << (n - 1)) - 1, (n % 2) as u8)]),
            })
            .collect();
        Skeleton::new(stages)
    }

    /// A Toeplitz skeleton with periods `3^n` whose holes at every level are
    /// the two adjacent residues `{0, 1}`. Refined classes alternate 1, 0, ...
    pub fn two_hole_tower(depth: u32) -> Result<Self> {
        if depth == 0 || depth > 14 {
            return Err(Error::InvalidSkeleton(format!("two-hole depth {depth} unsupported")));
        }
        let mut stages = Vec::new();
        let mut p = 1u64;
        for _ in 0..depth {
            let q = p * 3;
            let mut fill = BTreeMap::new();
            let mut flip = 1u8;
            for r in 0..q {
                let prev_hole = p == 1 || r % p < 2;
                if prev_hole && r >= 2 {
                    fill.insert(r, flip);
                    flip ^= 1;
                }
            }
            stages.push(Stage { period: q, fill });
            p = q;
        }
        Skeleton::new(stages)
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn periods(&self) -> Vec<u64> {
        self.stages.iter().map(|s| s.period).collect()
    }

    pub fn last_period(&self) -> u64 {
        self.stages.last().expect("nonempty").period
    }

    /// True when every residue of the last stage is filled.
    pub fn is_total(&self) -> bool {
        self.cum.iter().all(|c| c.is_known())
    }

    pub fn evaluate(&self, h: i64) -> Cell {
        self.cum[h.rem_euclid(self.cum.len() as i64) as usize]
    }

    pub fn window(&self, start: i64, len: usize) -> Window {
        Window::new(start, (0..len as i64).map(|k| self.evaluate(start + k)).collect())
    }

    /// Cumulative cells mod the period of stage `n` (0-based).
    pub fn stage_cumulative(&self, n: usize) -> Vec<Cell> {
        let p = self.stages[n].period;
        let mut cum = vec![Cell::Unknown; p as usize];
        for st in &self.stages[..=n] {
            for (&r, &b) in &st.fill {
                let mut j = r;
                while j < p {
                    cum[j as usize] = Cell::from_bit(b);
                    j += st.period;
                }
            }
        }
        cum
    }

    /// The first `n` stages.
    pub fn truncate(&self, n: usize) -> Result<Skeleton> {
        if n == 0 || n > self.stages.len() {
            return Err(Error::InvalidSkeleton(format!("cannot keep {n} stages")));
        }
        Skeleton::new(self.stages[..n].to_vec())
    }

    fn check_period(&self, p: u64) -> Result<()> {
        let last = self.last_period();
        if p == 0 || !last.is_multiple_of(p) {
            return Err(Error::UnsupportedPeriod { period: p, last });
        }
        Ok(())
    }

    /// Exact `Per_p`: class `i mod p` is periodic iff every refinement of it
    /// mod the last period is filled, all with the same bit.
    pub fn per_p(&self, p: u64) -> Result<Vec<u64>> {
        self.check_period(p)?;
        let big = self.cum.len() as u64;
        Ok((0..p)
            .filter(|&i| {
                let first = self.cum[i as usize];
                first.is_known() && (i..big).step_by(p as usize).all(|j| self.cum[j as usize] == first)
            })
            .collect())
    }

    pub fn holes(&self, p: u64) -> Result<Vec<u64>> {
        let per = self.per_p(p)?;
        let mut is_per = vec![false; p as usize];
        for i in per {
            is_per[i as usize] = true;
        }
        Ok((0..p).filter(|&i| !is_per[i as usize]).collect())
    }

    /// Minimum circular distance between distinct `p`-holes; `p` when there
    /// is at most one hole.
    pub fn min_hole_gap(&self, p: u64) -> Result<u64> {
        Ok(circular_min_gap(&self.holes(p)?, p))
    }

    pub fn per_density(&self, p: u64) -> Result<Ratio<u64>> {
        Ok(Ratio::new(self.per_p(p)?.len() as u64, p))
    }

    pub fn separated_holes_profile(&self, periods: &[u64], threshold: u64) -> Result<HoleProfile> {
        let mut rows = Vec::with_capacity(periods.len());
        for &p in periods {
            let holes = self.holes(p)?;
            rows.push(ProfileRow {
                p,
                per: p as usize - holes.len(),
                holes: holes.len(),
                min_gap: circular_min_gap(&holes, p),
            });
        }
        let monotone = rows.windows(2).all(|w| w[0].min_gap <= w[1].min_gap);
        let last_ok = rows.last().is_some_and(|r| r.min_gap > threshold);
        Ok(HoleProfile {
            rows,
            threshold,
            separated_up_to_depth: monotone && last_ok,
        })
    }

    /// `shift(x, k)(h) = x(h - k)`.
    pub fn shift(&self, k: i64) -> Skeleton {
        let stages = self
            .stages
            .iter()
            .map(|st| Stage {
                period: st.period,
                fill: st
                    .fill
                    .iter()
                    .map(|(&r, &b)| (((r as i64 + k).rem_euclid(st.period as i64)) as u64, b))
                    .collect(),
            })
            .collect();
        Skeleton::new(stages).expect("translation preserves validity")
    }

    /// `x + i`, the word `h -> x(h + i)`.
    pub fn plus(&self, i: i64) -> Skeleton {
        self.shift(-i)
    }

    /// True iff `Per_p(x)` is not contained in `Per_p(shift(x, k))` for every
    /// `k` in `shifts` with `k` not divisible by `p`.
    pub fn essential_period_check(&self, p: u64, shifts: std::ops::RangeInclusive<i64>) -> Result<bool> {
        let per = self.per_p(p)?;
        let mut in_per = vec![false; p as usize];
        for &i in &per {
            in_per[i as usize] = true;
        }
        for k in shifts {
            if k.rem_euclid(p as i64) == 0 {
                continue;
            }
            // Per_p(shift(x, k)) = Per_p(x) + k
            let contained = per
                .iter()
                .all(|&i| in_per[((i as i64 - k).rem_euclid(p as i64)) as usize]);
            if contained {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Classes mod `p` constant on the determined cells of a finite window.
    /// A semi-decision: classes that happen to be constant on the window are
    /// reported even if the word is not `p`-periodic there.
    pub fn per_p_empirical(&self, p: u64, start: i64, len: usize) -> EmpiricalPer {
        let w = self.window(start, len);
        let residues = (0..p)
            .filter(|&i| {
                let mut seen: Option<Cell> = None;
                let mut h = start + ((i as i64 - start).rem_euclid(p as i64));
                while h < w.end() {
                    let c = w.get(h);
                    if !c.is_known() {
                        return false;
                    }
                    if *seen.get_or_insert(c) != c {
                        return false;
                    }
                    h += p as i64;
                }
                seen.is_some()
            })
            .collect();
        EmpiricalPer {
            p,
            residues,
            window: (start, len),
        }
    }

    /// A skeleton for the image of `x` under a pointwise rule depending on
    /// the cells `[h + lo, h + hi]`, computed stage by stage on periods
    /// `lcm(p_n, align)`. `rule(h, cells)` gets the absolute position and the
    /// cells as known at that stage, and must return unknown unless the
    /// cells it reads are known.
    pub fn derive<F>(&self, align: u64, lo: i64, hi: i64, rule: F) -> Result<Skeleton>
    where
        F: Fn(i64, &[Cell]) -> Cell,
    {
        let mut levels = Vec::with_capacity(self.stages.len());
        for n in 0..self.stages.len() {
            let p = self.stages[n].period;
            let q = lcm(p, align);
            if q > MAX_PERIOD {
                return Err(Error::UnsupportedPeriod {
                    period: q,
                    last: MAX_PERIOD,
                });
            }
            let cum = self.stage_cumulative(n);
            let mut block = Vec::with_capacity((hi - lo + 1) as usize);
            let out = (0..q as i64)
                .map(|h| {
                    block.clear();
                    block.extend((lo..=hi).map(|d| cum[((h + d).rem_euclid(p as i64)) as usize]));
                    rule(h, &block)
                })
                .collect();
            levels.push((q, out));
        }
        Skeleton::from_cumulative(levels)
    }
}

impl FromStr for Skeleton {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// Minimum circular distance among distinct residues mod `p`; `p` for at
/// most one residue.
pub fn circular_min_gap(residues: &[u64], p: u64) -> u64 {
    if residues.len() <= 1 {
        return p;
    }
    let mut sorted = residues.to_vec();
    sorted.sort_unstable();
    let mut gap = p;
    for w in sorted.windows(2) {
        let d = w[1] - w[0];
        gap = gap.min(d.min(p - d));
    }
    let wrap = p - (sorted[sorted.len() - 1] - sorted[0]);
    gap.min(wrap.min(p - wrap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stage(p: u64, fill: &[(u64, u8)]) -> Stage {
        Stage {
            period: p,
            fill: fill.iter().copied().collect(),
        }
    }

    /// One-sided fixed point of `1 -> 10, 0 -> 11`, which agrees with the
    /// period-doubling skeleton on nonnegative positions.
    fn pd_oracle(len: usize) -> Vec<u8> {
        let mut w = vec![1u8];
        while w.len() < len {
            w = w.iter().flat_map(|&b| if b == 1 { [1, 0] } else { [1, 1] }).collect();
        }
        w.truncate(len);
        w
    }

    /// Brute-force Per_p on a total window: class i is periodic iff all
    /// positions in the window congruent to i carry one value.
    fn per_oracle(w: &[u8], p: usize) -> Vec<u64> {
        (0..p)
            .filter(|&i| w.iter().skip(i).step_by(p).all(|&b| b == w[i]))
            .map(|i| i as u64)
            .collect()
    }

    #[test]
    fn evaluate_examples() {
        let x = Skeleton::new(vec![stage(2, &[(0, 1)])]).unwrap();
        assert_eq!(x.evaluate(4), Cell::One);
        assert_eq!(x.evaluate(3), Cell::Unknown);
        let pd = Skeleton::period_doubling(10).unwrap();
        assert_eq!(pd.evaluate(5), Cell::Zero);
        assert_eq!(pd.evaluate(-1), Cell::Unknown);
        // position 1023 is congruent to the hole -1 at depth 10
        let oracle = pd_oracle(1023);
        for (h, &b) in oracle.iter().enumerate() {
            assert_eq!(pd.evaluate(h as i64), Cell::from_bit(b), "position {h}");
        }
    }

    #[test]
    fn per_and_holes_examples() {
        let x = Skeleton::new(vec![stage(2, &[(0, 1)])]).unwrap();
        assert_eq!(x.per_p(2).unwrap(), [0]);
        assert_eq!(x.holes(2).unwrap(), [1]);
        assert_eq!(x.per_density(2).unwrap(), Ratio::new(1, 2));
        let pd = Skeleton::period_doubling(8).unwrap();
        assert_eq!(pd.per_p(4).unwrap(), [0, 1, 2]);
        assert_eq!(pd.holes(4).unwrap(), [3]);
        assert_eq!(pd.min_hole_gap(4).unwrap(), 4);
        assert!(matches!(pd.per_p(3), Err(Error::UnsupportedPeriod { .. })));
        let total = Skeleton::periodic(&[0, 1, 1]).unwrap();
        assert_eq!(total.per_p(3).unwrap(), [0, 1, 2]);
        assert!(total.holes(3).unwrap().is_empty());
        assert_eq!(total.per_density(3).unwrap(), Ratio::from_integer(1));
    }

    #[test]
    fn per_matches_brute_force_on_period_doubling() {
        // on [0, 8p) each class mod p < 2^8 that is not a hole is fully
        // determined; the hole class contains undetermined cells further out
        let pd = Skeleton::period_doubling(12).unwrap();
        let w = pd_oracle(1 << 12);
        for k in 1..=8 {
            let p = 1usize << k;
            let mut expect = per_oracle(&w, p);
            // the oracle sees only nonnegative positions; class p-1 contains -1
            expect.retain(|&i| i != p as u64 - 1);
            assert_eq!(pd.per_p(p as u64).unwrap(), expect, "p = {p}");
        }
    }

    #[test]
    fn gaps() {
        assert_eq!(circular_min_gap(&[3], 4), 4);
        assert_eq!(circular_min_gap(&[1, 5], 9), 4);
        assert_eq!(circular_min_gap(&[0, 1], 6), 1);
        assert_eq!(circular_min_gap(&[0, 8], 9), 1);
        assert_eq!(circular_min_gap(&[], 7), 7);
    }

    #[test]
    fn profiles() {
        let pd = Skeleton::period_doubling(8).unwrap();
        let prof = pd.separated_holes_profile(&[2, 4, 8, 16], 8).unwrap();
        assert_eq!(prof.rows.iter().map(|r| r.min_gap).collect::<Vec<_>>(), [2, 4, 8, 16]);
        assert!(prof.separated_up_to_depth);

        let two = Skeleton::two_hole_tower(5).unwrap();
        let periods = two.periods();
        let prof = two.separated_holes_profile(&periods, 2).unwrap();
        for row in &prof.rows {
            assert_eq!(row.holes, 2);
            assert_eq!(row.min_gap, 1);
        }
        assert!(!prof.separated_up_to_depth);

        let c = Skeleton::constant(0);
        let prof = c.separated_holes_profile(&[1], 0).unwrap();
        assert_eq!(prof.rows[0].holes, 0);
        assert!(prof.separated_up_to_depth);
    }

    #[test]
    fn shift_examples() {
        let x = Skeleton::new(vec![stage(2, &[(0, 1)])]).unwrap();
        assert_eq!(x.shift(0), x);
        assert_eq!(x.shift(1).stages(), &[stage(2, &[(1, 1)])]);
        let pd = Skeleton::period_doubling(8).unwrap();
        assert_eq!(pd.shift(4).per_p(4).unwrap(), pd.per_p(4).unwrap());
        assert_eq!(pd.plus(3).evaluate(2), pd.evaluate(5));
    }

    #[test]
    fn essential_periods() {
        let pd = Skeleton::period_doubling(8).unwrap();
        assert!(pd.essential_period_check(2, -8..=8).unwrap());
        for k in 1..=8 {
            assert!(pd.essential_period_check(1 << k, -300..=300).unwrap());
        }
        assert!(!Skeleton::periodic(&[1, 1])
            .unwrap()
            .essential_period_check(2, -4..=4)
            .unwrap());
    }

    #[test]
    fn validation() {
        assert!(Skeleton::new(vec![]).is_err());
        assert!(Skeleton::new(vec![stage(2, &[(0, 1)]), stage(3, &[(1, 0)])]).is_err());
        assert!(Skeleton::new(vec![stage(2, &[(0, 1)]), stage(4, &[(2, 0)])]).is_err());
        assert!(Skeleton::new(vec![stage(2, &[(0, 1)]), stage(4, &[(0, 1)])]).is_err());
        assert!(Skeleton::new(vec![stage(2, &[(2, 1)])]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let pd = Skeleton::period_doubling(5).unwrap();
        let text = serde_json::to_string(&pd).unwrap();
        assert!(text.starts_with("{\"stages\":[{\"p\":2,\"fill\":{\"0\":1}}"));
        let back: Skeleton = text.parse().unwrap();
        assert_eq!(back, pd);
    }

    #[test]
    fn window_dump_round_trip() {
        let w = Skeleton::period_doubling(3).unwrap().window(-5, 12);
        let back = Window::parse_dump(&w.dump()).unwrap();
        assert_eq!(back, w);
        assert!(w.bits().contains('?'));
    }

    #[test]
    fn empirical_per_overreports() {
        // a single stage-3 fill looks periodic on a short window
        let pd = Skeleton::period_doubling(12).unwrap();
        let e = pd.per_p_empirical(4, 0, 4);
        assert_eq!(e.residues, [0, 1, 2, 3]);
        assert_eq!(pd.per_p(4).unwrap(), [0, 1, 2]);
    }

    fn skeleton_strategy() -> impl Strategy<Value = Skeleton> {
        (
            1u32..5,
            prop::collection::vec(prop::collection::vec(any::<bool>(), 8), 1..5),
        )
            .prop_map(|(base, rows)| {
                // periods 2^base, 2^(base+1), ...; fill half of the unknown
                // residues at each stage according to the random row
                let mut levels = Vec::new();
                let mut prev: Vec<Cell> = vec![Cell::Unknown];
                for (n, row) in rows.iter().enumerate() {
                    let p = 1u64 << (base + n as u32);
                    let mut cum: Vec<Cell> = (0..p).map(|r| prev[(r % prev.len() as u64) as usize]).collect();
                    for r in 0..p as usize {
                        if cum[r] == Cell::Unknown && row[r % 8] {
                            cum[r] = Cell::from_bit(((r / 8) % 2) as u8);
                        }
                    }
                    levels.push((p, cum.clone()));
                    prev = cum;
                }
                Skeleton::from_cumulative(levels).unwrap()
            })
    }

    proptest! {
        #[test]
        fn per_and_holes_partition(x in skeleton_strategy()) {
            for &p in &x.periods() {
                let per = x.per_p(p).unwrap();
                let holes = x.holes(p).unwrap();
                prop_assert_eq!(per.len() + holes.len(), p as usize);
                prop_assert!(per.iter().all(|i| !holes.contains(i)));
            }
        }

        #[test]
        fn per_is_monotone_in_p(x in skeleton_strategy()) {
            let ps = x.periods();
            for w in ps.windows(2) {
                let (p, q) = (w[0], w[1]);
                let per_q = x.per_p(q).unwrap();
                for i in x.per_p(p).unwrap() {
                    for j in (i..q).step_by(p as usize) {
                        prop_assert!(per_q.contains(&j));
                    }
                }
            }
        }

        #[test]
        fn shift_translates_evaluation(x in skeleton_strategy(), k in -500i64..500) {
            let s = x.shift(k);
            for h in -500i64..500 {
                prop_assert_eq!(s.evaluate(h), x.evaluate(h - k));
            }
        }

        #[test]
        fn per_agrees_with_brute_force_when_total(bits in prop::collection::vec(0u8..2, 1..6), reps in 1usize..4) {
            // total periodic words: compare against a window of length 8p
            let block: Vec<u8> = bits.iter().cycle().take(bits.len() * reps).copied().collect();
            let x = Skeleton::periodic(&block).unwrap();
            let p = block.len();
            let w: Vec<u8> = (0..8 * p as i64).map(|h| x.evaluate(h).bit().unwrap()).collect();
            prop_assert_eq!(x.per_p(p as u64).unwrap(), per_oracle(&w, p));
        }
    }
}
