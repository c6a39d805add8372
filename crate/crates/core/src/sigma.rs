//! Toeplitz words `σ(y, z)` built from a point `y` of the profinite
//! completion and labels `z` on the level kernels.
//!
//! `σ(y, z)(h) = z(π_n(y)^-1 π_n(h))` for the least level `n` with
//! `π_n(y) != π_n(h)`; the value is unknown when no level up to the depth
//! separates `h` from `y`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{Elem, GroupWord, ProfinitePoint, QuotientChain};
use crate::codes::{self, LanguageSet};
use crate::error::{Error, Result};
use crate::toeplitz::{Cell, Skeleton, Stage};

/// `z`: one bit per label of each level `1..=depth`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabelAssignment {
    /// `bits[n - 1][k]` is the value on the `k`-th label of level `n`.
    bits: Vec<Vec<u8>>,
}

impl Serialize for LabelAssignment {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<usize, BTreeMap<usize, u8>> = self
            .bits
            .iter()
            .enumerate()
            .map(|(n, row)| (n + 1, row.iter().copied().enumerate().collect()))
            .collect();
        map.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LabelAssignment {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let map = BTreeMap::<usize, BTreeMap<usize, u8>>::deserialize(d)?;
        let mut bits = Vec::with_capacity(map.len());
        for (k, (n, row)) in map.into_iter().enumerate() {
            if n != k + 1 {
                return Err(D::Error::custom(format!("levels must be 1..N, found {n}")));
            }
            let mut out = Vec::with_capacity(row.len());
            for (j, (idx, b)) in row.into_iter().enumerate() {
                if idx != j || b > 1 {
                    return Err(D::Error::custom(format!("level {n}: bad entry {idx} -> {b}")));
                }
                out.push(b);
            }
            bits.push(out);
        }
        Ok(LabelAssignment { bits })
    }
}

impl LabelAssignment {
    pub fn new(chain: &QuotientChain, bits: Vec<Vec<u8>>) -> Result<Self> {
        let z = LabelAssignment { bits };
        z.check(chain)?;
        Ok(z)
    }

    pub fn constant(chain: &QuotientChain, depth: usize, bit: u8) -> Result<Self> {
        LabelAssignment::from_fn(chain, depth, |_, _| bit)
    }

    /// `f(n, a)` for every level `n <= depth` and label `a`.
    pub fn from_fn(chain: &QuotientChain, depth: usize, f: impl Fn(usize, Elem) -> u8) -> Result<Self> {
        let bits = (1..=depth)
            .map(|n| Ok(chain.level_labels(n)?.iter().map(|&a| f(n, a) & 1).collect()))
            .collect::<Result<Vec<_>>>()?;
        Ok(LabelAssignment { bits })
    }

    /// Lengths must match the label counts and entries must be bits.
    pub fn check(&self, chain: &QuotientChain) -> Result<()> {
        for (k, row) in self.bits.iter().enumerate() {
            let want = chain.level_labels(k + 1)?.len();
            if row.len() != want {
                return Err(Error::InvalidChain(format!(
                    "level {}: {} label bits for {want} labels",
                    k + 1,
                    row.len()
                )));
            }
            if row.iter().any(|&b| b > 1) {
                return Err(Error::InvalidChain(format!("level {}: entries must be bits", k + 1)));
            }
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.bits.len()
    }

    pub fn level_bits(&self, n: usize) -> &[u8] {
        &self.bits[n - 1]
    }

    pub fn get(&self, chain: &QuotientChain, n: usize, a: Elem) -> Result<u8> {
        if n == 0 || n > self.depth() {
            return Err(Error::LevelOutOfRange {
                level: n,
                depth: self.depth(),
            });
        }
        Ok(self.bits[n - 1][chain.label_index(n, a)?])
    }

    pub fn set(&mut self, chain: &QuotientChain, n: usize, a: Elem, bit: u8) -> Result<()> {
        let k = chain.label_index(n, a)?;
        self.bits[n - 1][k] = bit & 1;
        Ok(())
    }

    /// First `(n, a)` in level and label order where the two differ.
    pub fn first_difference(&self, chain: &QuotientChain, other: &LabelAssignment) -> Option<(usize, Elem)> {
        self.differences(chain, other).into_iter().next()
    }

    pub fn differences(&self, chain: &QuotientChain, other: &LabelAssignment) -> Vec<(usize, Elem)> {
        let depth = self.depth().min(other.depth());
        let mut out = Vec::new();
        for n in 1..=depth {
            let labels = chain.level_labels(n).unwrap_or(&[]);
            for (k, &a) in labels.iter().enumerate() {
                if self.bits[n - 1].get(k) != other.bits[n - 1].get(k) {
                    out.push((n, a));
                }
            }
        }
        out
    }

    /// Values on levels strictly above `n`.
    fn values_above(&self, n: usize) -> impl Iterator<Item = u8> + '_ {
        self.bits.iter().skip(n).flatten().copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Properness {
    ProperSoFar,
    ImproperSoFar,
}

/// Both values occur among the labels up to the depth. A finite depth can
/// only refute, never certify, that both occur infinitely often.
pub fn is_proper(z: &LabelAssignment) -> Properness {
    let (mut zero, mut one) = (false, false);
    for &b in z.bits.iter().flatten() {
        zero |= b == 0;
        one |= b == 1;
    }
    if zero && one {
        Properness::ProperSoFar
    } else {
        Properness::ImproperSoFar
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug)]
pub struct SigmaDatum {
    chain: Arc<QuotientChain>,
    y: ProfinitePoint,
    z: LabelAssignment,
}

impl PartialEq for SigmaDatum {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.chain, &other.chain) || self.chain.depth() == other.chain.depth())
            && self.y == other.y
            && self.z == other.z
    }
}

impl SigmaDatum {
    pub fn new(chain: Arc<QuotientChain>, y: ProfinitePoint, z: LabelAssignment) -> Result<Self> {
        if y.depth() != z.depth() {
            return Err(Error::InvalidChain(format!(
                "y has depth {} but z has depth {}",
                y.depth(),
                z.depth()
            )));
        }
        if y.depth() > chain.depth() {
            return Err(Error::LevelOutOfRange {
                level: y.depth(),
                depth: chain.depth(),
            });
        }
        z.check(&chain)?;
        Ok(SigmaDatum { chain, y, z })
    }

    pub fn chain(&self) -> &QuotientChain {
        &self.chain
    }

    pub fn chain_arc(&self) -> &Arc<QuotientChain> {
        &self.chain
    }

    pub fn y(&self) -> &ProfinitePoint {
        &self.y
    }

    pub fn z(&self) -> &LabelAssignment {
        &self.z
    }

    pub fn depth(&self) -> usize {
        self.y.depth()
    }

    /// `(n_0, label)` for `h` given by its residues, or `None` if unseparated.
    fn locate(&self, h: &[Elem]) -> Option<(usize, Elem)> {
        for n in 1..=self.depth() {
            let yn = self.y.residue(n);
            if h[n - 1] != yn {
                let g = self.chain.group(n).expect("level within depth");
                return Some((n, g.mul(g.inv(yn), h[n - 1])));
            }
        }
        None
    }

    /// Value at a point given by its residue tuple.
    pub fn evaluate_residues(&self, h: &[Elem]) -> Cell {
        match self.locate(h) {
            Some((n, a)) => Cell::from_bit(self.z.get(&self.chain, n, a).expect("kernel label")),
            None => Cell::Unknown,
        }
    }

    pub fn evaluate(&self, h: &GroupWord) -> Result<Cell> {
        let res = self.chain.project_all(h, self.depth())?;
        Ok(self.evaluate_residues(&res))
    }

    /// The level that decides `h`, with its label.
    pub fn deciding_level(&self, h: &GroupWord) -> Result<Option<(usize, Elem)>> {
        let res = self.chain.project_all(h, self.depth())?;
        Ok(self.locate(&res))
    }

    fn periods(&self) -> Result<&[u64]> {
        self.chain
            .periods()
            .ok_or_else(|| Error::NotIntegerWord("chain is not a cyclic chain over Z".into()))
    }

    /// Value at the integer `h` on a chain over `Z`.
    pub fn evaluate_int(&self, h: i64) -> Result<Cell> {
        let periods = self.periods()?;
        for n in 1..=self.depth() {
            let p = periods[n - 1];
            let yn = self.y.residue(n) as i64;
            let r = h.rem_euclid(p as i64);
            if r != yn {
                let a = (r - yn).rem_euclid(p as i64) as Elem;
                return Ok(Cell::from_bit(self.z.get(&self.chain, n, a)?));
            }
        }
        Ok(Cell::Unknown)
    }

    /// The word as a staged skeleton, on chains over `Z`. Stage `n` fills
    /// the residues `r ≡ y_(n-1) mod p_(n-1)` with `r ≢ y_n mod p_n`.
    pub fn to_skeleton(&self) -> Result<Skeleton> {
        let periods = self.periods()?;
        let mut stages = Vec::with_capacity(self.depth());
        for n in 1..=self.depth() {
            let p = periods[n - 1];
            let yn = self.y.residue(n) as u64;
            let mut fill = BTreeMap::new();
            for r in 0..p {
                let fresh = n == 1 || r % periods[n - 2] == self.y.residue(n - 1) as u64;
                if fresh && r != yn {
                    let a = ((r + p - yn) % p) as Elem;
                    fill.insert(r, self.z.get(&self.chain, n, a)?);
                }
            }
            stages.push(Stage { period: p, fill });
        }
        Skeleton::new(stages)
    }

    /// `g · (y, z) = (gy, z)` and `(y, z) · g = (yg, z · g)` with
    /// `(z · g)(a) = z(g a g^-1)`.
    pub fn act(&self, g: &GroupWord, side: Side) -> Result<SigmaDatum> {
        let gr = self.chain.project_all(g, self.depth())?;
        let (y, z) = match side {
            Side::Left => (self.y.left_mul(&self.chain, &gr), self.z.clone()),
            Side::Right => {
                let z = LabelAssignment::from_fn(&self.chain, self.depth(), |n, a| {
                    let c = self.chain.conjugate_label(g, a, n).expect("label");
                    self.z.get(&self.chain, n, c).expect("label")
                })?;
                (self.y.right_mul(&self.chain, &gr), z)
            }
        };
        Ok(SigmaDatum {
            chain: self.chain.clone(),
            y,
            z,
        })
    }
}

/// `(g · x)(h) = x(g^-1 h)` and `(x · g)(h) = x(h g^-1)`: checks that acting
/// on the data and acting on the word agree at every listed position.
pub fn check_equivariance(d: &SigmaDatum, g: &GroupWord, window: &[GroupWord], side: Side) -> Result<bool> {
    let moved = d.act(g, side)?;
    let gi = g.inverse();
    for h in window {
        let src = match side {
            Side::Left => gi.mul(h),
            Side::Right => h.mul(&gi),
        };
        if moved.evaluate(h)? != d.evaluate(&src)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Every determined position takes the value assigned to its whole
/// deciding coset: positions with the same deciding level `n` and the same
/// residue mod `H_n` carry equal bits.
pub fn check_coset_constancy(d: &SigmaDatum, window: &[GroupWord]) -> Result<bool> {
    let mut seen: HashMap<(usize, Elem), u8> = HashMap::new();
    for h in window {
        let res = d.chain.project_all(h, d.depth())?;
        let Some((n, _)) = d.locate(&res) else { continue };
        let bit = d.evaluate_residues(&res).bit().expect("located");
        if *seen.entry((n, res[n - 1])).or_insert(bit) != bit {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `(y, z)` with `y` Haar-distributed and `z` fair independent bits.
pub fn mu_sample(chain: &Arc<QuotientChain>, depth: usize, seed: u64) -> Result<SigmaDatum> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = chain.haar_sample_with(depth, &mut rng)?;
    let bits = (1..=depth)
        .map(|n| Ok(chain.level_labels(n)?.iter().map(|_| rng.gen::<bool>() as u8).collect()))
        .collect::<Result<Vec<_>>>()?;
    SigmaDatum::new(chain.clone(), y, LabelAssignment { bits })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stabilizer {
    Moved,
    FixedSoFar,
}

/// Whether `z · g != z` is visible at the available depth.
pub fn stabilizer_test(d: &SigmaDatum, g: &GroupWord) -> Result<Stabilizer> {
    for n in 1..=d.depth() {
        for &a in d.chain.level_labels(n)? {
            let c = d.chain.conjugate_label(g, a, n)?;
            if d.z.get(&d.chain, n, a)? != d.z.get(&d.chain, n, c)? {
                return Ok(Stabilizer::Moved);
            }
        }
    }
    Ok(Stabilizer::FixedSoFar)
}

/// The unique hole coset `π_n(y)` of `H_n`, or `None` when the labels above
/// level `n` are constant, so that the coset shows no non-constant pattern.
pub fn mef_holes(d: &SigmaDatum, n: usize) -> Result<Option<Elem>> {
    d.chain.level(n)?;
    if n > d.depth() {
        return Err(Error::LevelOutOfRange {
            level: n,
            depth: d.depth(),
        });
    }
    let (mut zero, mut one) = (false, false);
    for b in d.z.values_above(n) {
        zero |= b == 0;
        one |= b == 1;
    }
    Ok((zero && one).then(|| d.y.residue(n)))
}

/// `F = {f, f_0, f_1}` after translating `x_i` by `g_i` so that both hole
/// cosets at level `n` are trivial. Then `x_1(g f) != x_2(f)` for `g ∈ H_n`
/// and `x_1(g f_0) = x_1(g f_1)`, `x_2(f_0) != x_2(f_1)` for `g ∉ H_n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistinguishingWitness {
    pub n: usize,
    pub a0: Elem,
    pub f: GroupWord,
    pub f0: GroupWord,
    pub f1: GroupWord,
    pub g1: GroupWord,
    pub g2: GroupWord,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WitnessSearch {
    Found(DistinguishingWitness),
    NotFound(String),
}

/// `(g · x)(h) = x(g^-1 h)`.
fn translated(d: &SigmaDatum, g: &GroupWord, h: &GroupWord) -> Result<Cell> {
    d.evaluate(&g.inverse().mul(h))
}

pub fn find_distinguishing_window(d1: &SigmaDatum, d2: &SigmaDatum) -> Result<WitnessSearch> {
    let chain = d1.chain();
    let diffs = d1.z.differences(chain, &d2.z);
    if diffs.is_empty() {
        return Err(Error::NoWitnessPossible(
            "the label assignments agree up to the depth".into(),
        ));
    }
    let mut tried = Vec::new();
    let mut reps_cache: HashMap<usize, Vec<Option<GroupWord>>> = HashMap::new();
    for (n, a0) in diffs {
        if let std::collections::hash_map::Entry::Vacant(e) = reps_cache.entry(n) {
            e.insert(chain.representatives(n, None)?);
        }
        let reps = &reps_cache[&n];
        let gn = chain.group(n)?;
        let word_for = |q: Elem| reps[q as usize].clone().expect("generating set reaches every element");
        let g1 = word_for(gn.inv(d1.y.residue(n)));
        let g2 = word_for(gn.inv(d2.y.residue(n)));
        let f = word_for(a0);
        // f0, f1 in H_n with different x_2 values, from deeper levels
        let mut found: [Option<GroupWord>; 2] = [None, None];
        for m in n + 1..=d2.depth() {
            if let std::collections::hash_map::Entry::Vacant(e) = reps_cache.entry(m) {
                e.insert(chain.representatives(m, None)?);
            }
            for w in reps_cache[&m].iter().flatten() {
                if chain.project(w, n)? != gn.identity() {
                    continue;
                }
                if let Some(b) = translated(d2, &g2, w)?.bit() {
                    found[b as usize].get_or_insert_with(|| w.clone());
                }
                if found.iter().all(Option::is_some) {
                    break;
                }
            }
            if found.iter().all(Option::is_some) {
                break;
            }
        }
        match found {
            [Some(f0), Some(f1)] => {
                return Ok(WitnessSearch::Found(DistinguishingWitness {
                    n,
                    a0,
                    f,
                    f0,
                    f1,
                    g1,
                    g2,
                }));
            }
            _ => tried.push(format!("level {n} label {a0}")),
        }
    }
    Ok(WitnessSearch::NotFound(format!(
        "no f0, f1 in H_n with distinct values below depth {} (tried {})",
        d2.depth(),
        tried.join(", ")
    )))
}

/// Sweeps every coset of `H_n`. Structural mismatches give `false`; an
/// unknown value gives a depth error.
pub fn verify_distinguishing_window(w: &DistinguishingWitness, d1: &SigmaDatum, d2: &SigmaDatum) -> Result<bool> {
    let chain = d1.chain();
    let n = w.n;
    let gn = chain.group(n)?;
    let id = gn.identity();
    if !chain.is_label(n, w.a0) || n > d1.depth() || n > d2.depth() {
        return Ok(false);
    }
    if chain.project(&w.f, n)? != w.a0 || chain.project(&w.f0, n)? != id || chain.project(&w.f1, n)? != id {
        return Ok(false);
    }
    let y1 = gn.mul(chain.project(&w.g1, n)?, d1.y.residue(n));
    let y2 = gn.mul(chain.project(&w.g2, n)?, d2.y.residue(n));
    if y1 != id || y2 != id {
        return Ok(false);
    }
    let known = |c: Cell, what: &str| {
        c.bit().ok_or_else(|| {
            Error::DepthInsufficient(format!("{what} is unknown at depth {}", d1.depth().min(d2.depth())))
        })
    };
    let x2f0 = known(translated(d2, &w.g2, &w.f0)?, "x2(f0)")?;
    let x2f1 = known(translated(d2, &w.g2, &w.f1)?, "x2(f1)")?;
    let reps = chain.representatives(n, None)?;
    for (q, rep) in reps.iter().enumerate() {
        let g = rep.clone().expect("every coset has a representative");
        if q as Elem == id {
            let a = known(translated(d1, &w.g1, &g.mul(&w.f))?, "x1(gf)")?;
            let b = known(translated(d2, &w.g2, &w.f)?, "x2(f)")?;
            if a == b {
                return Ok(false);
            }
        } else {
            let a = known(translated(d1, &w.g1, &g.mul(&w.f0))?, "x1(gf0)")?;
            let b = known(translated(d1, &w.g1, &g.mul(&w.f1))?, "x1(gf1)")?;
            if a != b || x2f0 == x2f1 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Clone, Debug)]
pub enum Generator {
    Skeleton(Skeleton),
    Sigma(SigmaDatum),
}

/// A subshift given by a designated Toeplitz generator, with a cache of
/// computed languages.
#[derive(Debug)]
pub struct SubshiftHandle {
    generator: Generator,
    skeleton: Option<Skeleton>,
    properness: Option<Properness>,
    cache: Mutex<HashMap<(usize, i64), LanguageSet>>,
}

impl Clone for SubshiftHandle {
    fn clone(&self) -> Self {
        SubshiftHandle {
            generator: self.generator.clone(),
            skeleton: self.skeleton.clone(),
            properness: self.properness,
            cache: Mutex::new(self.cache.lock().expect("cache lock").clone()),
        }
    }
}

impl SubshiftHandle {
    pub fn from_skeleton(x: Skeleton) -> Self {
        SubshiftHandle {
            generator: Generator::Skeleton(x.clone()),
            skeleton: Some(x),
            properness: None,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn from_sigma(d: SigmaDatum) -> Self {
        let skeleton = d.to_skeleton().ok();
        SubshiftHandle {
            properness: Some(is_proper(&d.z)),
            generator: Generator::Sigma(d),
            skeleton,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn properness(&self) -> Option<Properness> {
        self.properness
    }

    /// A proper-so-far σ-word has an infinite orbit; skeleton generators
    /// carry no such marker.
    pub fn infinite_orbit(&self) -> bool {
        self.properness == Some(Properness::ProperSoFar)
    }

    /// The generator as a skeleton over `Z`.
    pub fn skeleton(&self) -> Result<&Skeleton> {
        self.skeleton
            .as_ref()
            .ok_or_else(|| Error::NotIntegerWord("generator is a word over a non-cyclic group".into()))
    }

    pub fn evaluate(&self, h: &GroupWord) -> Result<Cell> {
        match &self.generator {
            Generator::Sigma(d) => d.evaluate(h),
            Generator::Skeleton(x) => {
                let k = h
                    .as_integer()
                    .ok_or_else(|| Error::NotIntegerWord(format!("{h} is not an integer")))?;
                Ok(x.evaluate(k))
            }
        }
    }

    pub fn language(&self, len: usize, span: i64) -> Result<LanguageSet> {
        if let Some(l) = self.cache.lock().expect("cache lock").get(&(len, span)) {
            return Ok(l.clone());
        }
        let l = codes::language(self.skeleton()?, len, span)?;
        self.cache.lock().expect("cache lock").insert((len, span), l.clone());
        Ok(l)
    }

    /// Number of `p_n`-holes per level of the generator over `Z`.
    pub fn hole_counts(&self) -> Result<Vec<usize>> {
        let x = self.skeleton()?;
        x.periods().iter().map(|&p| Ok(x.holes(p)?.len())).collect()
    }
}

/// `θ(y, z)`: the subshift generated by `σ(y, z)`.
pub fn theta(d: SigmaDatum) -> SubshiftHandle {
    SubshiftHandle::from_sigma(d)
}
