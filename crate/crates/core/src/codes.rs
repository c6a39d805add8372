//! Sliding block codes, block permutations of `p`-blocks, finite languages
//! and the bounded-radius conjugacy search.
//!
//! A block `x|[i-r, i+r]` is indexed by reading it left to right as a binary
//! number, most significant bit first. Tables are listed in index order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::toeplitz::{Cell, Skeleton, Window};

/// Largest radius accepted for explicit tables (`2^(2r+1)` entries).
pub const MAX_RADIUS: usize = 8;

/// Largest block length for block permutations (blocks are `u64`).
pub const MAX_BLOCK: usize = 64;

/// Largest word length for languages (words are `u64`).
pub const MAX_WORD: usize = 64;

/// Believed-complete languages need `span >= COMPLETE_MULTIPLE * L`.
pub const COMPLETE_MULTIPLE: i64 = 4;

/// Largest number of `φ` candidates enumerated at one radius.
pub const MAX_CANDIDATES_LOG2: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockCode {
    radius: usize,
    table: Vec<u8>,
}

#[derive(Serialize, Deserialize)]
struct CodeFile {
    r: usize,
    table: String,
}

impl Serialize for BlockCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CodeFile {
            r: self.radius,
            table: self.table_bits(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BlockCode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = CodeFile::deserialize(d)?;
        BlockCode::from_bits(f.r, &f.table).map_err(serde::de::Error::custom)
    }
}

fn block_index(cells: &[Cell]) -> Option<usize> {
    let mut idx = 0usize;
    for c in cells {
        idx = (idx << 1) | c.bit()? as usize;
    }
    Some(idx)
}

impl BlockCode {
    pub fn new(radius: usize, table: Vec<u8>) -> Result<Self> {
        if radius > MAX_RADIUS {
            return Err(Error::InvalidCode(format!("radius {radius} exceeds {MAX_RADIUS}")));
        }
        let n = 1usize << (2 * radius + 1);
        if table.len() != n {
            return Err(Error::InvalidCode(format!(
                "radius {radius} needs {n} table entries, got {}",
                table.len()
            )));
        }
        if table.iter().any(|&b| b > 1) {
            return Err(Error::InvalidCode("table entries must be bits".into()));
        }
        Ok(BlockCode { radius, table })
    }

    pub fn from_bits(radius: usize, bits: &str) -> Result<Self> {
        let table = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Error::InvalidCode(format!("bad table character {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        BlockCode::new(radius, table)
    }

    pub fn from_fn(radius: usize, f: impl Fn(&[u8]) -> u8) -> Result<Self> {
        let width = 2 * radius + 1;
        let table = (0..1usize << width)
            .map(|idx| {
                let block: Vec<u8> = (0..width).map(|k| ((idx >> (width - 1 - k)) & 1) as u8).collect();
                f(&block) & 1
            })
            .collect();
        BlockCode::new(radius, table)
    }

    pub fn identity() -> Self {
        BlockCode::new(0, vec![0, 1]).expect("valid")
    }

    pub fn flip() -> Self {
        BlockCode::new(0, vec![1, 0]).expect("valid")
    }

    /// `f(x)(i) = x(i - 1)`; reading the left neighbour moves the word one
    /// step to the right.
    pub fn right_shift() -> Self {
        BlockCode::from_fn(1, |b| b[0]).expect("valid")
    }

    /// `f(x)(i) = x(i + 1)`.
    pub fn left_shift() -> Self {
        BlockCode::from_fn(1, |b| b[2]).expect("valid")
    }

    pub fn majority() -> Self {
        BlockCode::from_fn(1, |b| u8::from(b.iter().map(|&v| v as u32).sum::<u32>() >= 2)).expect("valid")
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn width(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn table(&self) -> &[u8] {
        &self.table
    }

    pub fn table_bits(&self) -> String {
        self.table.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
    }

    /// `φ` on a block of `2r + 1` cells; unknown if any cell is unknown.
    pub fn eval_cells(&self, cells: &[Cell]) -> Cell {
        debug_assert_eq!(cells.len(), self.width());
        block_index(cells).map_or(Cell::Unknown, |i| Cell::from_bit(self.table[i]))
    }

    /// `f(w)` on positions `[start + r, end - r)`.
    pub fn apply(&self, w: &Window) -> Window {
        let width = self.width();
        if w.len() < width {
            return Window::new(w.start + self.radius as i64, Vec::new());
        }
        let cells = w.cells.windows(width).map(|b| self.eval_cells(b)).collect();
        Window::new(w.start + self.radius as i64, cells)
    }

    /// The image skeleton `f(x)`: filled wherever the whole block is filled.
    pub fn image(&self, x: &Skeleton) -> Result<Skeleton> {
        let r = self.radius as i64;
        x.derive(1, -r, r, |_, cells| self.eval_cells(cells))
    }

    /// The same map written with a larger radius.
    pub fn lift(&self, radius: usize) -> Result<BlockCode> {
        if radius < self.radius {
            return Err(Error::InvalidCode(format!(
                "cannot lift radius {} to {radius}",
                self.radius
            )));
        }
        let pad = radius - self.radius;
        BlockCode::from_fn(radius, |b| {
            let inner = &b[pad..pad + self.width()];
            self.table[inner.iter().fold(0usize, |a, &v| (a << 1) | v as usize)]
        })
    }

    /// The least radius presentation of the same map.
    pub fn reduce(&self) -> BlockCode {
        let mut code = self.clone();
        while code.radius > 0 {
            let r = code.radius - 1;
            let w = 2 * code.radius + 1;
            // independent of the two outer cells
            let independent = (0..code.table.len()).all(|idx| {
                let inner = (idx >> 1) & ((1 << (w - 2)) - 1);
                let base = inner << 1;
                let vals = [base, base | 1, base | (1 << (w - 1)), base | (1 << (w - 1)) | 1];
                vals.iter().all(|&v| code.table[v] == code.table[idx])
            });
            if !independent {
                break;
            }
            let table = (0..1usize << (2 * r + 1)).map(|inner| code.table[inner << 1]).collect();
            code = BlockCode { radius: r, table };
        }
        code
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &BlockCode) -> BlockCode {
        let rf = self.radius;
        let rg = other.radius;
        BlockCode::from_fn(rf + rg, |b| {
            let mid: Vec<u8> = (0..self.width())
                .map(|k| {
                    let blk = &b[k..k + other.width()];
                    other.table[blk.iter().fold(0usize, |a, &v| (a << 1) | v as usize)]
                })
                .collect();
            self.table[mid.iter().fold(0usize, |a, &v| (a << 1) | v as usize)]
        })
        .expect("radius within bounds")
    }

    /// Same map after reducing both sides to least radius.
    pub fn equivalent(&self, other: &BlockCode) -> bool {
        self.reduce() == other.reduce()
    }
}

impl fmt::Display for BlockCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r={}:{}", self.radius, self.table_bits())
    }
}

/// A permutation of the binary words of length `p`. Either a rotation, or an
/// explicit partial injection completed by pairing the remaining sources
/// and targets in increasing order.
#[derive(Clone, Debug)]
pub struct BlockPermutation {
    p: usize,
    kind: PermKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum PermKind {
    /// Left rotation by the given amount, `0 < k < p`.
    Rotation(usize),
    Partial {
        forward: BTreeMap<u64, u64>,
        backward: BTreeMap<u64, u64>,
    },
}

/// Equality as maps; tabulated for `p <= 20`, by representation above that.
impl PartialEq for BlockPermutation {
    fn eq(&self, other: &Self) -> bool {
        if self.p != other.p {
            return false;
        }
        if self.p <= IMAGES_MAX {
            return (0..1u64 << self.p).all(|b| self.apply_block(b) == other.apply_block(b));
        }
        self.kind == other.kind
    }
}

impl Eq for BlockPermutation {}

#[derive(Serialize, Deserialize)]
struct PermFile {
    p: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    images: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pairs: Option<Vec<(u64, u64)>>,
    /// Left rotation amount; absent for other kinds.
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "rotation_amount"
    )]
    rotation: Option<usize>,
}

/// Accepts `true` as a rotation by one.
fn rotation_amount<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<usize>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Amount {
        Flag(bool),
        By(usize),
    }
    Ok(match Amount::deserialize(d)? {
        Amount::Flag(false) => None,
        Amount::Flag(true) => Some(1),
        Amount::By(k) => Some(k),
    })
}

/// Largest `p` whose permutation files list every image.
const FULL_LIST_MAX: usize = 12;

/// Largest `p` accepted by [`BlockPermutation::from_images`].
const IMAGES_MAX: usize = 20;

impl Serialize for BlockPermutation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut file = PermFile {
            p: self.p,
            images: None,
            pairs: None,
            rotation: None,
        };
        if self.p <= FULL_LIST_MAX {
            file.images = Some((0..1u64 << self.p).map(|b| self.apply_block(b)).collect());
        } else {
            match &self.kind {
                PermKind::Rotation(k) => file.rotation = Some(*k),
                PermKind::Partial { forward, .. } => file.pairs = Some(forward.iter().map(|(&a, &b)| (a, b)).collect()),
            }
        }
        file.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BlockPermutation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = PermFile::deserialize(d)?;
        let r = match (f.images, f.pairs, f.rotation) {
            (Some(images), None, None) => BlockPermutation::from_images(f.p, &images),
            (None, Some(pairs), None) => BlockPermutation::from_pairs(f.p, &pairs),
            (None, None, Some(k)) => BlockPermutation::rotation(f.p, k),
            _ => Err(Error::InvalidPermutation(
                "need exactly one of images, pairs, rotation".into(),
            )),
        };
        r.map_err(serde::de::Error::custom)
    }
}

fn block_mask(p: usize) -> u64 {
    if p == 64 {
        u64::MAX
    } else {
        (1u64 << p) - 1
    }
}

/// The `k`-th element (0-based) of `{0..}` minus `excluded`, `excluded` sorted.
fn kth_outside<'a>(k: u64, excluded: impl Iterator<Item = &'a u64>) -> u64 {
    let mut t = k;
    let mut j = 0u64;
    for &e in excluded {
        if e > t {
            break;
        }
        j += 1;
        t = k + j;
    }
    t
}

fn check_p(p: usize) -> Result<()> {
    if p == 0 || p > MAX_BLOCK {
        return Err(Error::InvalidPermutation(format!("block length {p} unsupported")));
    }
    Ok(())
}

impl BlockPermutation {
    pub fn identity(p: usize) -> Result<Self> {
        BlockPermutation::from_pairs(p, &[])
    }

    /// Completes a partial injection. Sources outside the domain are matched
    /// with targets outside the image in increasing order.
    pub fn from_pairs(p: usize, pairs: &[(u64, u64)]) -> Result<Self> {
        check_p(p)?;
        let mask = block_mask(p);
        let mut forward = BTreeMap::new();
        let mut backward = BTreeMap::new();
        for &(a, b) in pairs {
            if a & !mask != 0 || b & !mask != 0 {
                return Err(Error::InvalidPermutation(format!("block out of range in ({a}, {b})")));
            }
            if let Some(&old) = forward.get(&a) {
                if old != b {
                    return Err(Error::InvalidPermutation(format!("{a} has two images")));
                }
                continue;
            }
            if backward.insert(b, a).is_some() {
                return Err(Error::InvalidPermutation(format!("{b} has two preimages")));
            }
            forward.insert(a, b);
        }
        Ok(BlockPermutation {
            p,
            kind: PermKind::Partial { forward, backward },
        })
    }

    pub fn from_images(p: usize, images: &[u64]) -> Result<Self> {
        check_p(p)?;
        if p > IMAGES_MAX {
            return Err(Error::InvalidPermutation(format!(
                "full image list for p = {p} unsupported"
            )));
        }
        if images.len() as u64 != 1u64 << p {
            return Err(Error::InvalidPermutation(format!("expected {} images", 1u64 << p)));
        }
        let pairs: Vec<(u64, u64)> = images.iter().enumerate().map(|(a, &b)| (a as u64, b)).collect();
        BlockPermutation::from_pairs(p, &pairs)
    }

    pub fn from_fn(p: usize, f: impl Fn(u64) -> u64) -> Result<Self> {
        check_p(p)?;
        if p > IMAGES_MAX {
            return Err(Error::InvalidPermutation(format!("tabulating p = {p} unsupported")));
        }
        let images: Vec<u64> = (0..1u64 << p).map(f).collect();
        BlockPermutation::from_images(p, &images)
    }

    /// The blockwise complement.
    pub fn complement(p: usize) -> Result<Self> {
        let mask = block_mask(p);
        BlockPermutation::from_fn(p, |b| !b & mask)
    }

    pub fn period(&self) -> usize {
        self.p
    }

    /// The explicitly stored pairs; empty for rotations.
    pub fn explicit_pairs(&self) -> BTreeMap<u64, u64> {
        match &self.kind {
            PermKind::Rotation(_) => BTreeMap::new(),
            PermKind::Partial { forward, .. } => forward.clone(),
        }
    }

    pub fn apply_block(&self, b: u64) -> u64 {
        match &self.kind {
            PermKind::Rotation(k) => rotate_left(b, self.p, *k),
            PermKind::Partial { forward, backward } => {
                if let Some(&t) = forward.get(&b) {
                    return t;
                }
                let below = forward.range(..b).count() as u64;
                kth_outside(b - below, backward.keys())
            }
        }
    }

    pub fn invert_block(&self, t: u64) -> u64 {
        match &self.kind {
            PermKind::Rotation(k) => rotate_left(t, self.p, self.p - *k),
            PermKind::Partial { forward, backward } => {
                if let Some(&b) = backward.get(&t) {
                    return b;
                }
                let below = backward.range(..t).count() as u64;
                kth_outside(t - below, forward.keys())
            }
        }
    }

    /// `π̂` on a window: blocks `[kp + phase, (k+1)p + phase)` inside `w`
    /// are replaced by their images; partial edge blocks are dropped and
    /// blocks with an unknown cell become all-unknown.
    pub fn apply(&self, w: &Window, phase: i64) -> Window {
        let p = self.p as i64;
        let first = w.start + (phase - w.start).rem_euclid(p);
        let mut cells = Vec::new();
        let mut s = first;
        while s + p <= w.end() {
            let blk: Vec<Cell> = (s..s + p).map(|h| w.get(h)).collect();
            cells.extend(self.image_cells(&blk));
            s += p;
        }
        Window::new(first, cells)
    }

    fn image_cells(&self, blk: &[Cell]) -> Vec<Cell> {
        match block_index_u64(blk) {
            Some(b) => {
                let t = self.apply_block(b);
                (0..self.p)
                    .map(|k| Cell::from_bit(((t >> (self.p - 1 - k)) & 1) as u8))
                    .collect()
            }
            None => vec![Cell::Unknown; self.p],
        }
    }

    /// `π̂(x)` with the given phase as a skeleton.
    pub fn image(&self, x: &Skeleton, phase: i64) -> Result<Skeleton> {
        let p = self.p as i64;
        x.derive(self.p as u64, -(p - 1), p - 1, |h, cells| {
            let o = (h - phase).rem_euclid(p);
            let start = (p - 1 - o) as usize;
            let blk = &cells[start..start + self.p];
            self.image_cells(blk)[o as usize]
        })
    }

    /// Left rotation of `p`-blocks by `k`.
    pub fn rotation(p: usize, k: usize) -> Result<BlockPermutation> {
        check_p(p)?;
        let k = k % p;
        if k == 0 {
            return BlockPermutation::identity(p);
        }
        Ok(BlockPermutation {
            p,
            kind: PermKind::Rotation(k),
        })
    }

    pub fn inverse(&self) -> BlockPermutation {
        let kind = match &self.kind {
            PermKind::Rotation(k) => PermKind::Rotation(self.p - k),
            // the completion rule is symmetric in sources and targets
            PermKind::Partial { forward, backward } => PermKind::Partial {
                forward: backward.clone(),
                backward: forward.clone(),
            },
        };
        BlockPermutation { p: self.p, kind }
    }

    /// Order of the permutation, for small `p`.
    pub fn order(&self) -> Option<u64> {
        if let PermKind::Rotation(k) = self.kind {
            return Some(self.p as u64 / crate::toeplitz::gcd(self.p as u64, k as u64));
        }
        if self.p > 16 {
            return None;
        }
        let n = 1u64 << self.p;
        let mut seen = vec![false; n as usize];
        let mut order = 1u64;
        for b in 0..n {
            if seen[b as usize] {
                continue;
            }
            let mut len = 0;
            let mut c = b;
            while !seen[c as usize] {
                seen[c as usize] = true;
                c = self.apply_block(c);
                len += 1;
            }
            order = order / crate::toeplitz::gcd(order, len) * len;
        }
        Some(order)
    }
}

fn rotate_left(b: u64, p: usize, k: usize) -> u64 {
    if k.is_multiple_of(p) {
        b
    } else if p == 64 {
        b.rotate_left(k as u32)
    } else {
        ((b << k) | (b >> (p - k))) & block_mask(p)
    }
}

pub(crate) fn block_index_u64(cells: &[Cell]) -> Option<u64> {
    let mut idx = 0u64;
    for c in cells {
        idx = (idx << 1) | c.bit()? as u64;
    }
    Some(idx)
}

/// Rotation of `p`-blocks, `σ(z)(j) = z(j + 1 mod p)`. With `x + i` the word
/// `h -> x(h + i)`, this satisfies `σ̂(x + i) = x + i + 1` when `i ∈ Per_p(x)`.
pub fn cyclic_block_shift(p: usize) -> Result<BlockPermutation> {
    BlockPermutation::rotation(p, 1)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConflictCertificate {
    pub p: usize,
    pub i: i64,
    pub kind: ConflictKind,
    /// Block start positions of the two clashing observations.
    pub positions: (i64, i64),
    pub sources: (String, String),
    pub images: (String, String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConflictKind {
    NotAFunction,
    NotInjective,
}

#[derive(Clone, Debug)]
pub enum DeriveOutcome {
    Derived { perm: BlockPermutation, observed: usize },
    Conflict(ConflictCertificate),
}

fn bits_of(b: u64, p: usize) -> String {
    (0..p)
        .map(|k| if (b >> (p - 1 - k)) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Builds `b -> b'` from the aligned `p`-blocks of `x + i` and `y + i`,
/// i.e. from positions `[kp + i, (k+1)p + i)` for `k` in `ks`. Blocks with
/// an unknown cell on either side are skipped.
pub fn block_map(
    x: &Skeleton,
    y: &Skeleton,
    p: usize,
    i: i64,
    ks: std::ops::Range<i64>,
) -> std::result::Result<BTreeMap<u64, (u64, i64)>, ConflictCertificate> {
    let mut map: BTreeMap<u64, (u64, i64)> = BTreeMap::new();
    let mut inverse: BTreeMap<u64, (u64, i64)> = BTreeMap::new();
    let pi = p as i64;
    for k in ks {
        let s = k * pi + i;
        let src: Vec<Cell> = (s..s + pi).map(|h| x.evaluate(h)).collect();
        let dst: Vec<Cell> = (s..s + pi).map(|h| y.evaluate(h)).collect();
        let (Some(a), Some(b)) = (block_index_u64(&src), block_index_u64(&dst)) else {
            continue;
        };
        if let Some(&(old, pos)) = map.get(&a) {
            if old != b {
                return Err(ConflictCertificate {
                    p,
                    i,
                    kind: ConflictKind::NotAFunction,
                    positions: (pos, s),
                    sources: (bits_of(a, p), bits_of(a, p)),
                    images: (bits_of(old, p), bits_of(b, p)),
                });
            }
            continue;
        }
        if let Some(&(other, pos)) = inverse.get(&b) {
            return Err(ConflictCertificate {
                p,
                i,
                kind: ConflictKind::NotInjective,
                positions: (pos, s),
                sources: (bits_of(other, p), bits_of(a, p)),
                images: (bits_of(b, p), bits_of(b, p)),
            });
        }
        map.insert(a, (b, s));
        inverse.insert(b, (a, s));
    }
    Ok(map)
}

/// Derives `π` with `π̂(x + i) = f(x) + i` from observed blocks over one
/// period of the skeletons and re-checks it on disjoint block ranges on
/// both sides.
pub fn derive_block_permutation(code: &BlockCode, x: &Skeleton, p: usize, i: i64) -> Result<DeriveOutcome> {
    let y = code.image(x)?;
    derive_between(x, &y, p, i)
}

/// As [`derive_block_permutation`] with the image word given directly.
pub fn derive_between(x: &Skeleton, y: &Skeleton, p: usize, i: i64) -> Result<DeriveOutcome> {
    if p == 0 || p > MAX_BLOCK {
        return Err(Error::InvalidPermutation(format!("block length {p} unsupported")));
    }
    let big = crate::toeplitz::lcm(crate::toeplitz::lcm(x.last_period(), y.last_period()), p as u64);
    let blocks = (big / p as u64).max(1) as i64;
    let map = match block_map(x, y, p, i, 0..blocks) {
        Ok(m) => m,
        Err(c) => return Ok(DeriveOutcome::Conflict(c)),
    };
    if map.is_empty() {
        return Err(Error::DepthInsufficient(format!(
            "no determined {p}-block at offset {i}"
        )));
    }
    let pairs: Vec<(u64, u64)> = map.iter().map(|(&a, &(b, _))| (a, b)).collect();
    let perm = BlockPermutation::from_pairs(p, &pairs)?;
    // fresh ranges on both sides
    for ks in [-blocks - 3..-3, blocks + 5..2 * blocks + 5] {
        let check = match block_map(x, y, p, i, ks) {
            Ok(m) => m,
            Err(c) => return Ok(DeriveOutcome::Conflict(c)),
        };
        for (a, (b, s)) in check {
            if perm.apply_block(a) != b {
                return Ok(DeriveOutcome::Conflict(ConflictCertificate {
                    p,
                    i,
                    kind: ConflictKind::NotAFunction,
                    positions: (map.get(&a).map_or(s, |e| e.1), s),
                    sources: (bits_of(a, p), bits_of(a, p)),
                    images: (bits_of(perm.apply_block(a), p), bits_of(b, p)),
                }));
            }
        }
    }
    Ok(DeriveOutcome::Derived {
        perm,
        observed: pairs.len(),
    })
}

/// `L`-words of a word over `Z`, as `u64` read most significant bit first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LanguageSet {
    pub len: usize,
    pub words: BTreeSet<u64>,
    /// False means a lower approximation.
    pub complete: bool,
}

impl LanguageSet {
    pub fn contains(&self, w: u64) -> bool {
        self.words.contains(&w)
    }

    pub fn word_strings(&self) -> Vec<String> {
        self.words.iter().map(|&w| bits_of(w, self.len)).collect()
    }

    pub fn is_subset(&self, other: &LanguageSet) -> bool {
        self.words.is_subset(&other.words)
    }
}

/// Fully determined `L`-subwords of `x` starting in `[-span, span - L + 1]`.
/// Since every skeleton is periodic with its last period `P`, starts are
/// folded mod `P` once the range covers a full period.
fn raw_language(x: &Skeleton, len: usize, span: i64) -> (BTreeSet<u64>, bool) {
    let mut words = BTreeSet::new();
    if len == 0 {
        words.insert(0);
        return (words, true);
    }
    let big = x.last_period() as i64;
    let lo = -span;
    let hi = span - len as i64 + 1;
    if hi < lo {
        return (words, false);
    }
    let covers = hi - lo + 1 >= big;
    let (a, b) = if covers { (0, big - 1) } else { (lo, hi) };
    let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
    let mut acc = 0u64;
    let mut known_run = 0usize;
    for h in a..=b + len as i64 - 1 {
        match x.evaluate(h).bit() {
            Some(v) => {
                acc = ((acc << 1) | v as u64) & mask;
                known_run += 1;
            }
            None => known_run = 0,
        }
        if known_run >= len && h - len as i64 + 1 >= a {
            words.insert(acc);
        }
    }
    (words, covers)
}

/// Language of `x` at length `len` over `[-span, span]`.
///
/// Believed complete when the generator is total on a range covering a full
/// period, or when the range covers a full period, `span` is at least
/// [`COMPLETE_MULTIPLE`]` * len`, and dropping the deepest stage leaves the
/// language unchanged.
pub fn language(x: &Skeleton, len: usize, span: i64) -> Result<LanguageSet> {
    language_with(x, len, span, COMPLETE_MULTIPLE)
}

pub fn language_with(x: &Skeleton, len: usize, span: i64, multiple: i64) -> Result<LanguageSet> {
    if len > MAX_WORD {
        return Err(Error::InvalidCode(format!("word length {len} exceeds {MAX_WORD}")));
    }
    let (words, covers) = raw_language(x, len, span);
    let complete = if len == 0 {
        true
    } else if !covers {
        false
    } else if x.is_total() {
        true
    } else if span < multiple * len as i64 || x.stages().len() < 2 {
        false
    } else {
        let shallow = x.truncate(x.stages().len() - 1)?;
        raw_language(&shallow, len, span).0 == words
    };
    Ok(LanguageSet { len, words, complete })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    EqualUpTo,
    Distinct,
    Inconclusive,
}

pub fn compare_languages(a: &LanguageSet, b: &LanguageSet) -> Comparison {
    let a_extra = a.words.difference(&b.words).next().is_some();
    let b_extra = b.words.difference(&a.words).next().is_some();
    if (a_extra && b.complete) || (b_extra && a.complete) {
        Comparison::Distinct
    } else if a.complete && b.complete {
        Comparison::EqualUpTo
    } else {
        Comparison::Inconclusive
    }
}

pub fn equal_up_to(s: &Skeleton, t: &Skeleton, len: usize, span: i64) -> Result<Comparison> {
    Ok(compare_languages(&language(s, len, span)?, &language(t, len, span)?))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodePair {
    pub forward: BlockCode,
    pub backward: BlockCode,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SearchReport {
    pub found: Option<CodePair>,
    pub r_max: usize,
    pub len: usize,
    pub span: i64,
    pub candidates_tried: u64,
    /// Why the search could not decide, when it could not.
    pub note: Option<String>,
    pub budget_exhausted: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct SearchBudget {
    pub r_max: usize,
    pub len: usize,
    pub span: i64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            r_max: 1,
            len: 16,
            span: 4096,
        }
    }
}

/// Occurring `(2r+1)`-blocks, ascending by index.
fn occurring_blocks(x: &Skeleton, r: usize, span: i64) -> Result<Vec<usize>> {
    Ok(language(x, 2 * r + 1, span)?
        .words
        .iter()
        .map(|&w| w as usize)
        .collect())
}

/// The table that is `bits` (most significant first) on `blocks`, 0 elsewhere.
fn canonical_table(r: usize, blocks: &[usize], bits: u64) -> BlockCode {
    let mut table = vec![0u8; 1 << (2 * r + 1)];
    let k = blocks.len();
    for (j, &b) in blocks.iter().enumerate() {
        table[b] = ((bits >> (k - 1 - j)) & 1) as u8;
    }
    BlockCode { radius: r, table }
}

/// The unique `ψ` of radius `r` with `ψ(y)(i) = x(i)` wherever both sides
/// are determined; blocks never seen map to 0. `None` on a clash.
pub fn forced_inverse(x: &Skeleton, y: &Skeleton, r: usize) -> Option<BlockCode> {
    let big = crate::toeplitz::lcm(x.last_period(), y.last_period()) as i64;
    let width = 2 * r + 1;
    let mut table: Vec<Option<u8>> = vec![None; 1 << width];
    let ri = r as i64;
    for h in 0..big {
        let Some(target) = x.evaluate(h).bit() else { continue };
        let blk: Vec<Cell> = (h - ri..=h + ri).map(|k| y.evaluate(k)).collect();
        let Some(idx) = block_index(&blk) else { continue };
        match table[idx] {
            None => table[idx] = Some(target),
            Some(v) if v == target => {}
            Some(_) => return None,
        }
    }
    BlockCode::new(r, table.into_iter().map(|v| v.unwrap_or(0)).collect()).ok()
}

/// True iff `a` and `b` agree wherever both are determined and at least one
/// cell is determined in both.
pub fn agree_where_known(a: &Skeleton, b: &Skeleton) -> bool {
    let big = crate::toeplitz::lcm(a.last_period(), b.last_period()) as i64;
    let mut any = false;
    for h in 0..big {
        let (u, v) = (a.evaluate(h), b.evaluate(h));
        if u.is_known() && v.is_known() {
            if u != v {
                return false;
            }
            any = true;
        }
    }
    any
}

/// Checks that `(forward, backward)` is a conjugacy between the subshifts
/// generated by `s` and `t` on all determined cells: both round trips are
/// the identity and each image's `L`-language lies in the other language.
pub fn verify_pair(s: &Skeleton, t: &Skeleton, pair: &CodePair, len: usize, span: i64) -> Result<bool> {
    let (ls, lt) = (language(s, len, span)?, language(t, len, span)?);
    let fs = pair.forward.image(s)?;
    if !language(&fs, len, span)?.is_subset(&lt) {
        return Ok(false);
    }
    if !agree_where_known(&pair.backward.image(&fs)?, s) {
        return Ok(false);
    }
    let bt = pair.backward.image(t)?;
    if !language(&bt, len, span)?.is_subset(&ls) {
        return Ok(false);
    }
    Ok(agree_where_known(&pair.forward.image(&bt)?, t))
}

/// Context shared by the conjugacy searches.
struct Search<'a> {
    s: &'a Skeleton,
    t: &'a Skeleton,
    budget: SearchBudget,
    short: usize,
    lt_short: LanguageSet,
}

impl Search<'_> {
    /// `None` when the languages are not believed complete.
    fn new<'a>(
        s: &'a Skeleton,
        t: &'a Skeleton,
        budget: SearchBudget,
        report: &mut SearchReport,
    ) -> Result<Option<Search<'a>>> {
        let (ls, lt) = (
            language(s, budget.len, budget.span)?,
            language(t, budget.len, budget.span)?,
        );
        if !(ls.complete && lt.complete) {
            report.note = Some(format!(
                "languages at L = {} not believed complete over span {}",
                budget.len, budget.span
            ));
            report.budget_exhausted = true;
            return Ok(None);
        }
        let short = budget.len.min(8);
        Ok(Some(Search {
            s,
            t,
            budget,
            short,
            lt_short: language(t, short, budget.span)?,
        }))
    }

    /// Cheap language pruning, then a forced backward code and full checks.
    fn check(&self, phi: BlockCode) -> Option<CodePair> {
        let SearchBudget { r_max, len, span } = self.budget;
        let fs = phi.image(self.s).ok()?;
        if !language(&fs, self.short, span).ok()?.is_subset(&self.lt_short) {
            return None;
        }
        for rb in 0..=r_max.min(MAX_RADIUS) {
            let Some(psi) = forced_inverse(self.s, &fs, rb) else {
                continue;
            };
            let pair = CodePair {
                forward: phi.clone(),
                backward: psi,
            };
            if verify_pair(self.s, self.t, &pair, len, span).ok()? {
                return Some(pair);
            }
        }
        None
    }

    fn blocks(&self, r: usize, report: &mut SearchReport) -> Result<Option<Vec<usize>>> {
        let blocks = occurring_blocks(self.s, r, self.budget.span)?;
        if blocks.len() > MAX_CANDIDATES_LOG2 {
            report.note = Some(format!(
                "radius {r}: {} occurring blocks exceed the enumeration budget",
                blocks.len()
            ));
            report.budget_exhausted = true;
            return Ok(None);
        }
        Ok(Some(blocks))
    }
}

fn empty_report(budget: SearchBudget) -> SearchReport {
    SearchReport {
        found: None,
        r_max: budget.r_max,
        len: budget.len,
        span: budget.span,
        candidates_tried: 0,
        note: None,
        budget_exhausted: false,
    }
}

/// Bounded search for a conjugacy `S -> T`, sound but not complete.
///
/// Forward tables are enumerated by radius, then lexicographically over
/// their values on the blocks that occur in `S` (others are 0). For each
/// candidate the backward code is forced cell by cell, then both round trips
/// and language inclusions are checked. Parallel workers report the
/// lexicographically least success, so the result does not depend on
/// scheduling. Positive answers need both languages believed complete.
pub fn search_conjugacy(s: &Skeleton, t: &Skeleton, budget: SearchBudget) -> Result<SearchReport> {
    let mut report = empty_report(budget);
    let Some(search) = Search::new(s, t, budget, &mut report)? else {
        return Ok(report);
    };
    for r in 0..=budget.r_max.min(MAX_RADIUS) {
        let Some(blocks) = search.blocks(r, &mut report)? else {
            return Ok(report);
        };
        let count = 1u64 << blocks.len();
        let hit = (0..count)
            .into_par_iter()
            .find_map_first(|bits| search.check(canonical_table(r, &blocks, bits)).map(|p| (bits, p)));
        match hit {
            Some((bits, pair)) => {
                report.candidates_tried += bits + 1;
                report.found = Some(pair);
                return Ok(report);
            }
            None => report.candidates_tried += count,
        }
    }
    report.note = Some(format!(
        "no conjugacy with radii <= {}; not a proof of non-conjugacy",
        budget.r_max
    ));
    Ok(report)
}

/// Every conjugacy found within the budget, one per map on `S`, in search
/// order. Two codes count as the same map when their images of the
/// generator agree on every cell determined in both; a larger-radius
/// table for an already found map is therefore dropped.
pub fn enumerate_conjugacies(
    s: &Skeleton,
    t: &Skeleton,
    budget: SearchBudget,
) -> Result<(Vec<CodePair>, SearchReport)> {
    let mut report = empty_report(budget);
    let Some(search) = Search::new(s, t, budget, &mut report)? else {
        return Ok((Vec::new(), report));
    };
    let mut found: Vec<(Skeleton, CodePair)> = Vec::new();
    for r in 0..=budget.r_max.min(MAX_RADIUS) {
        let Some(blocks) = search.blocks(r, &mut report)? else {
            break;
        };
        let count = 1u64 << blocks.len();
        report.candidates_tried += count;
        let hits: Vec<CodePair> = (0..count)
            .into_par_iter()
            .filter_map(|bits| search.check(canonical_table(r, &blocks, bits)))
            .collect();
        for pair in hits {
            let img = pair.forward.image(s)?;
            if !found.iter().any(|(other, _)| agree_where_known(other, &img)) {
                found.push((img, pair));
            }
        }
    }
    let pairs: Vec<CodePair> = found.into_iter().map(|(_, p)| p).collect();
    report.found = pairs.first().cloned();
    Ok((pairs, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(bits: &str) -> Window {
        Window::from_bits(0, bits).unwrap()
    }

    #[test]
    fn apply_examples() {
        assert_eq!(BlockCode::identity().apply(&w("0110")).bits(), "0110");
        assert_eq!(BlockCode::flip().apply(&w("0110")).bits(), "1001");
        let m = BlockCode::majority().apply(&w("00110"));
        assert_eq!((m.start, m.bits().as_str()), (1, "011"));
        assert!(BlockCode::majority().apply(&w("01")).is_empty());
        assert_eq!(BlockCode::majority().apply(&w("0?10")).bits(), "??");
    }

    #[test]
    fn majority_hand_evaluation() {
        // blocks 001 -> 0, 011 -> 1, 110 -> 1
        assert_eq!(BlockCode::majority().apply(&w("00110")).bits(), "011");
    }

    #[test]
    fn compose_and_reduce() {
        let id = BlockCode::identity();
        assert!(BlockCode::flip().compose(&BlockCode::flip()).equivalent(&id));
        assert_eq!(BlockCode::flip().compose(&BlockCode::flip()).reduce(), id);
        let shift_back = BlockCode::left_shift().compose(&BlockCode::right_shift());
        assert_eq!(shift_back.radius(), 2);
        assert_eq!(shift_back.reduce(), id);
        assert_eq!(BlockCode::majority().lift(2).unwrap().reduce(), BlockCode::majority());
        let c = BlockCode::majority();
        let x = w("0110100110010110");
        assert_eq!(id.compose(&c).apply(&x), c.apply(&x));
    }

    #[test]
    fn code_json() {
        let c = BlockCode::majority();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"r":1,"table":"00010111"}"#);
        assert_eq!(serde_json::from_str::<BlockCode>(&s).unwrap(), c);
        assert!(serde_json::from_str::<BlockCode>(r#"{"r":1,"table":"0101"}"#).is_err());
    }

    #[test]
    fn block_permutation_examples() {
        let id = BlockPermutation::identity(3).unwrap();
        assert_eq!(id.apply(&w("011010"), 0).bits(), "011010");
        let swap = BlockPermutation::complement(1).unwrap();
        assert_eq!(swap.apply(&w("0110"), 0).bits(), "1001");
        // p = 2: 01 <-> 10
        let p = BlockPermutation::from_pairs(2, &[(1, 2), (2, 1)]).unwrap();
        assert_eq!(p.apply(&w("0101"), 0).bits(), "1010");
        // phase 1 drops the partial edge blocks
        let out = p.apply(&w("00101"), 1);
        assert_eq!((out.start, out.bits().as_str()), (1, "1010"));
        assert_eq!(p.apply(&w("0?01"), 0).bits(), "??10");
    }

    #[test]
    fn completion_is_a_bijection() {
        let p = BlockPermutation::from_pairs(4, &[(0, 5), (3, 0), (9, 9)]).unwrap();
        let imgs: BTreeSet<u64> = (0..16).map(|b| p.apply_block(b)).collect();
        assert_eq!(imgs.len(), 16);
        for b in 0..16 {
            assert_eq!(p.invert_block(p.apply_block(b)), b);
        }
        // unmatched sources 1, 2, 4, ... pair with unmatched targets 1, 2, 3, ...
        assert_eq!(p.apply_block(1), 1);
        assert_eq!(p.apply_block(2), 2);
        assert_eq!(p.apply_block(4), 3);
        let big = BlockPermutation::from_pairs(40, &[(7, 1 << 39)]).unwrap();
        assert_eq!(big.invert_block(big.apply_block(123456)), 123456);
        assert!(BlockPermutation::from_pairs(2, &[(0, 1), (1, 1)]).is_err());
    }

    #[test]
    fn cyclic_shift() {
        assert_eq!(cyclic_block_shift(1).unwrap(), BlockPermutation::identity(1).unwrap());
        let s = cyclic_block_shift(2).unwrap();
        assert_eq!(s.apply(&w("01"), 0).bits(), "10");
        for p in 1..=8 {
            let order = cyclic_block_shift(p).unwrap().order().unwrap();
            assert_eq!(p as u64 % order, 0);
        }
        let s3 = cyclic_block_shift(3).unwrap();
        assert_eq!(s3.apply(&w("011"), 0).bits(), "110");
    }

    #[test]
    fn rotations_and_inverses() {
        let r = BlockPermutation::rotation(5, 2).unwrap();
        assert_eq!(r.apply(&w("10000"), 0).bits(), "00010");
        assert_eq!(r.inverse(), BlockPermutation::rotation(5, 3).unwrap());
        assert_eq!(
            BlockPermutation::rotation(4, 4).unwrap(),
            BlockPermutation::identity(4).unwrap()
        );
        let q = BlockPermutation::from_pairs(3, &[(0, 5), (1, 0)]).unwrap();
        let qi = q.inverse();
        for b in 0..8 {
            assert_eq!(qi.apply_block(q.apply_block(b)), b);
            assert_eq!(qi.apply_block(b), q.invert_block(b));
        }
        let big = BlockPermutation::rotation(40, 7).unwrap();
        let back: BlockPermutation = serde_json::from_str(&serde_json::to_string(&big).unwrap()).unwrap();
        assert_eq!(back.apply_block(1), 1 << 7);
        let legacy: BlockPermutation = serde_json::from_str(r#"{"p":30,"rotation":true}"#).unwrap();
        assert_eq!(legacy.apply_block(1), 2);
    }

    #[test]
    fn perm_json_round_trip() {
        let p = BlockPermutation::from_pairs(2, &[(1, 2), (2, 1)]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"p":2,"images":[0,2,1,3]}"#);
        assert_eq!(serde_json::from_str::<BlockPermutation>(&s).unwrap(), p);
        let big = BlockPermutation::from_pairs(20, &[(5, 6), (6, 5)]).unwrap();
        let s = serde_json::to_string(&big).unwrap();
        let back: BlockPermutation = serde_json::from_str(&s).unwrap();
        assert_eq!(back.apply_block(5), 6);
    }

    #[test]
    fn derive_flip() {
        let pd = Skeleton::period_doubling(10).unwrap();
        for p in [1usize, 2, 4, 8] {
            let DeriveOutcome::Derived { perm, .. } = derive_block_permutation(&BlockCode::flip(), &pd, p, 0).unwrap()
            else {
                panic!("conflict at p = {p}");
            };
            let mask = (1u64 << p) - 1;
            for b in 0..=mask {
                // every observed block maps to its complement
                if perm.explicit_pairs().contains_key(&b) {
                    assert_eq!(perm.apply_block(b), !b & mask);
                }
            }
        }
    }

    /// Languages by direct expansion of the substitution `1 -> 10, 0 -> 11`.
    fn pd_language_oracle(len: usize) -> BTreeSet<String> {
        let mut w = vec![1u8];
        while w.len() < 4096 {
            w = w.iter().flat_map(|&b| if b == 1 { [1, 0] } else { [1, 1] }).collect();
        }
        w.windows(len)
            .map(|b| b.iter().map(|&v| (b'0' + v) as char).collect())
            .collect()
    }

    #[test]
    fn languages() {
        let zero = Skeleton::constant(0);
        let l = language(&zero, 3, 64).unwrap();
        assert_eq!(l.word_strings(), ["000"]);
        assert!(l.complete);
        assert_eq!(language(&zero, 0, 4).unwrap().words.len(), 1);

        let pd = Skeleton::period_doubling(12).unwrap();
        for len in [2usize, 4, 8, 16] {
            let l = language(&pd, len, 4096).unwrap();
            let got: BTreeSet<String> = l.word_strings().into_iter().collect();
            assert_eq!(got, pd_language_oracle(len), "L = {len}");
            assert!(l.complete);
        }
        assert!(!language(&pd, 8, 16).unwrap().complete);
    }

    #[test]
    fn comparisons() {
        let pd = Skeleton::period_doubling(12).unwrap();
        let flip = BlockCode::flip().image(&pd).unwrap();
        assert_eq!(equal_up_to(&pd, &pd, 8, 4096).unwrap(), Comparison::EqualUpTo);
        assert_eq!(equal_up_to(&pd, &flip, 4, 4096).unwrap(), Comparison::Distinct);
        assert_eq!(
            equal_up_to(&pd, &pd.truncate(3).unwrap(), 8, 4).unwrap(),
            Comparison::Inconclusive
        );
    }

    #[test]
    fn search_examples() {
        let pd = Skeleton::period_doubling(12).unwrap();
        let budget = SearchBudget {
            r_max: 0,
            len: 16,
            span: 4096,
        };
        let r = search_conjugacy(&pd, &pd, budget).unwrap();
        let pair = r.found.unwrap();
        assert_eq!(
            (pair.forward.clone(), pair.backward.clone()),
            (BlockCode::identity(), BlockCode::identity())
        );

        let flip = BlockCode::flip().image(&pd).unwrap();
        let r = search_conjugacy(&pd, &flip, budget).unwrap();
        let pair = r.found.unwrap();
        assert_eq!((pair.forward, pair.backward), (BlockCode::flip(), BlockCode::flip()));

        let tiny = SearchBudget {
            r_max: 1,
            len: 16,
            span: 8,
        };
        let r = search_conjugacy(&pd, &flip, tiny).unwrap();
        assert!(r.found.is_none() && r.budget_exhausted);
    }

    #[test]
    fn search_finds_shift_and_is_sound() {
        let pd = Skeleton::period_doubling(12).unwrap();
        let shifted = BlockCode::right_shift().image(&pd).unwrap();
        let budget = SearchBudget {
            r_max: 1,
            len: 16,
            span: 4096,
        };
        let r = search_conjugacy(&pd, &shifted, budget).unwrap();
        let pair = r.found.expect("radius-1 conjugacy");
        // independent round trip on fresh windows far from the origin
        for start in [-100_000i64, 7777, 1 << 20] {
            let x = pd.window(start, 200);
            let back = pair.backward.apply(&pair.forward.apply(&x));
            for h in back.start..back.end() {
                if back.get(h).is_known() {
                    assert_eq!(back.get(h), x.get(h));
                }
            }
        }
    }

    #[test]
    fn search_block_swap_image() {
        let pd = Skeleton::period_doubling(12).unwrap();
        let swapped = cyclic_block_shift(2).unwrap().image(&pd, 0).unwrap();
        let budget = SearchBudget {
            r_max: 1,
            len: 16,
            span: 4096,
        };
        let r = search_conjugacy(&pd, &swapped, budget).unwrap();
        match r.found {
            Some(pair) => assert!(verify_pair(&pd, &swapped, &pair, 24, 8192).unwrap()),
            None => assert!(r.note.unwrap().contains("radii <= 1")),
        }
    }

    #[test]
    fn enumeration_finds_distinct_automorphisms() {
        let pd = Skeleton::period_doubling(10).unwrap();
        let budget = SearchBudget {
            r_max: 1,
            len: 12,
            span: 2048,
        };
        let (pairs, _) = enumerate_conjugacies(&pd, &pd, budget).unwrap();
        let images: Vec<Skeleton> = pairs.iter().map(|p| p.forward.image(&pd).unwrap()).collect();
        for want in [BlockCode::identity(), BlockCode::left_shift(), BlockCode::right_shift()] {
            assert!(images.contains(&want.image(&pd).unwrap()));
        }
        for (a, b) in images.iter().zip(images.iter().skip(1)) {
            assert_ne!(a, b);
        }
        let first = search_conjugacy(&pd, &pd, budget).unwrap().found.unwrap();
        assert_eq!(first, pairs[0]);
    }

    fn code_strategy(max_r: usize) -> impl Strategy<Value = BlockCode> {
        (0..=max_r).prop_flat_map(|r| {
            prop::collection::vec(0u8..2, 1 << (2 * r + 1)).prop_map(move |t| BlockCode::new(r, t).unwrap())
        })
    }

    fn window_strategy() -> impl Strategy<Value = Window> {
        (
            -50i64..50,
            prop::collection::vec(
                prop_oneof![4 => Just(Cell::Zero), 4 => Just(Cell::One), 1 => Just(Cell::Unknown)],
                0..40,
            ),
        )
            .prop_map(|(s, c)| Window::new(s, c))
    }

    proptest! {
        #[test]
        fn compose_matches_nested_apply(f in code_strategy(2), g in code_strategy(2), x in window_strategy()) {
            let nested = f.apply(&g.apply(&x));
            let composed = f.compose(&g).apply(&x);
            prop_assert_eq!(nested.start, composed.start);
            for h in composed.start..composed.end() {
                // composed output is known only where the whole block is
                if composed.get(h).is_known() {
                    prop_assert_eq!(composed.get(h), nested.get(h));
                }
            }
        }

        #[test]
        fn compose_is_associative(f in code_strategy(1), g in code_strategy(1), h in code_strategy(1), x in window_strategy()) {
            let a = f.compose(&g.compose(&h)).apply(&x);
            let b = f.compose(&g).compose(&h).apply(&x);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn refining_unknowns_keeps_outputs(f in code_strategy(2), x in window_strategy(), fill in prop::collection::vec(0u8..2, 40)) {
            let before = f.apply(&x);
            let refined = Window::new(x.start, x.cells.iter().zip(&fill).map(|(&c, &b)| if c.is_known() { c } else { Cell::from_bit(b) }).collect());
            let after = f.apply(&refined);
            for h in before.start..before.end() {
                if before.get(h).is_known() {
                    prop_assert_eq!(before.get(h), after.get(h));
                }
            }
        }

        #[test]
        fn code_image_skeleton_matches_window_apply(f in code_strategy(2), k in -300i64..300) {
            let pd = Skeleton::period_doubling(8).unwrap();
            let img = f.image(&pd).unwrap();
            let x = pd.window(k, 60);
            let y = f.apply(&x);
            for h in y.start..y.end() {
                prop_assert_eq!(img.evaluate(h), y.get(h));
            }
        }

        #[test]
        fn cyclic_shift_advances_periodic_offsets(e in 0u32..4, i in 0i64..256) {
            let p = 1usize << e;
            let pd = Skeleton::period_doubling(10).unwrap();
            let per = pd.per_p(p as u64).unwrap();
            prop_assume!(per.contains(&((i as u64) % p as u64)));
            let sigma = cyclic_block_shift(p).unwrap();
            let lhs = sigma.image(&pd.plus(i), 0).unwrap();
            let rhs = pd.plus(i + 1);
            for h in -512i64..512 {
                if lhs.evaluate(h).is_known() && rhs.evaluate(h).is_known() {
                    prop_assert_eq!(lhs.evaluate(h), rhs.evaluate(h));
                }
            }
        }
    }
}
