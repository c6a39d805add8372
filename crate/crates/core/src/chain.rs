//! Finite quotient towers `Q_1 <- Q_2 <- ... <- Q_N` of a residually finite
//! group `G`, standing in for `G/H_n` and the inverse limit at finite depth.
//!
//! Elements of each level are opaque indices `0..order`. Level `n` is
//! 1-based throughout the public API; `Q_0` is the trivial group, so the
//! labels of level 1 are all nonidentity elements of `Q_1`.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type Elem = u32;

/// Groups up to this order get a dense multiplication table.
pub const DENSE_TABLE_MAX: usize = 512;

/// Associativity is checked exhaustively up to this order.
const ASSOC_CHECK_MAX: usize = 256;

const NOT_A_LABEL: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct FiniteGroup {
    order: usize,
    repr: Repr,
}

#[derive(Clone, Debug)]
enum Repr {
    /// `Z/nZ`, element index = residue.
    Cyclic,
    Table {
        mul: Vec<Elem>,
        inv: Vec<Elem>,
        id: Elem,
    },
    Perm(PermRepr),
}

#[derive(Clone, Debug)]
struct PermRepr {
    degree: usize,
    gens: Vec<Vec<u16>>,
    /// `order * degree` images, row `e` is the permutation of element `e`.
    points: Vec<u16>,
    index: HashMap<Vec<u16>, Elem>,
    inv: Vec<Elem>,
    table: Option<Vec<Elem>>,
}

/// `(a * b)(x) = a(b(x))`.
fn compose(a: &[u16], b: &[u16]) -> Vec<u16> {
    b.iter().map(|&x| a[x as usize]).collect()
}

/// Builds a permutation of `degree` points from disjoint cycles (0-based).
pub fn perm_from_cycles(degree: usize, cycles: &[&[u16]]) -> Vec<u16> {
    let mut p: Vec<u16> = (0..degree as u16).collect();
    for cycle in cycles {
        for (k, &x) in cycle.iter().enumerate() {
            p[x as usize] = cycle[(k + 1) % cycle.len()];
        }
    }
    p
}

impl FiniteGroup {
    pub fn cyclic(n: u64) -> Result<Self> {
        if n == 0 || n > u32::MAX as u64 {
            return Err(Error::InvalidGroup(format!("cyclic order {n} unsupported")));
        }
        Ok(FiniteGroup {
            order: n as usize,
            repr: Repr::Cyclic,
        })
    }

    /// Builds a group from a full Cayley table. The identity and inverses are
    /// recovered from the table; associativity is checked for small orders.
    pub fn from_table(rows: &[Vec<Elem>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidGroup("empty table".into()));
        }
        let mut mul = Vec::with_capacity(n * n);
        for (a, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidGroup(format!("row {a} has length {}", row.len())));
            }
            if let Some(&bad) = row.iter().find(|&&e| e as usize >= n) {
                return Err(Error::InvalidGroup(format!("entry {bad} out of range")));
            }
            mul.extend_from_slice(row);
        }
        let id = (0..n)
            .find(|&e| (0..n).all(|a| mul[e * n + a] == a as Elem && mul[a * n + e] == a as Elem))
            .ok_or_else(|| Error::InvalidGroup("no two-sided identity".into()))? as Elem;
        let mut inv = vec![0; n];
        for a in 0..n {
            inv[a] = (0..n)
                .find(|&b| mul[a * n + b] == id && mul[b * n + a] == id)
                .ok_or_else(|| Error::InvalidGroup(format!("element {a} has no inverse")))?
                as Elem;
        }
        if n <= ASSOC_CHECK_MAX {
            for a in 0..n {
                for b in 0..n {
                    let ab = mul[a * n + b] as usize;
                    for c in 0..n {
                        let bc = mul[b * n + c] as usize;
                        if mul[ab * n + c] != mul[a * n + bc] {
                            return Err(Error::InvalidGroup(format!("not associative at ({a}, {b}, {c})")));
                        }
                    }
                }
            }
        }
        Ok(FiniteGroup {
            order: n,
            repr: Repr::Table { mul, inv, id },
        })
    }

    /// The permutation group generated by `gens`, enumerated breadth-first
    /// from the identity (index 0) by right multiplication with the
    /// generators in order. The enumeration order is part of the file format.
    pub fn from_perm_gens(gens: &[Vec<u16>]) -> Result<Self> {
        Ok(FiniteGroup::from_perm_gens_capped(gens, usize::MAX)?.expect("uncapped"))
    }

    /// As [`FiniteGroup::from_perm_gens`], but gives up with `None` once the
    /// group is known to exceed `cap` elements.
    pub fn from_perm_gens_capped(gens: &[Vec<u16>], cap: usize) -> Result<Option<Self>> {
        let degree = gens.first().map_or(0, Vec::len);
        for g in gens {
            if g.len() != degree {
                return Err(Error::InvalidGroup("generators of unequal degree".into()));
            }
            let mut seen = vec![false; degree];
            for &x in g {
                if x as usize >= degree || std::mem::replace(&mut seen[x as usize], true) {
                    return Err(Error::InvalidGroup(format!("{g:?} is not a permutation")));
                }
            }
        }
        let identity: Vec<u16> = (0..degree as u16).collect();
        let mut index = HashMap::new();
        let mut points = identity.clone();
        index.insert(identity, 0);
        let mut queue = VecDeque::from([0u32]);
        while let Some(e) = queue.pop_front() {
            let start = e as usize * degree;
            let current = points[start..start + degree].to_vec();
            for g in gens {
                let next = compose(&current, g);
                if !index.contains_key(&next) {
                    if index.len() == cap {
                        return Ok(None);
                    }
                    let id = index.len() as Elem;
                    points.extend_from_slice(&next);
                    index.insert(next, id);
                    queue.push_back(id);
                }
            }
        }
        let order = index.len();
        let mut inv = vec![0; order];
        for e in 0..order {
            let p = &points[e * degree..(e + 1) * degree];
            let mut q = vec![0u16; degree];
            for (x, &px) in p.iter().enumerate() {
                q[px as usize] = x as u16;
            }
            inv[e] = index[&q];
        }
        let mut repr = PermRepr {
            degree,
            gens: gens.to_vec(),
            points,
            index,
            inv,
            table: None,
        };
        if order <= DENSE_TABLE_MAX {
            let mut table = Vec::with_capacity(order * order);
            for a in 0..order as Elem {
                for b in 0..order as Elem {
                    table.push(repr.product(a, b));
                }
            }
            repr.table = Some(table);
        }
        Ok(Some(FiniteGroup {
            order,
            repr: Repr::Perm(repr),
        }))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> Elem {
        match &self.repr {
            Repr::Cyclic | Repr::Perm(_) => 0,
            Repr::Table { id, .. } => *id,
        }
    }

    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        match &self.repr {
            Repr::Cyclic => ((a as u64 + b as u64) % self.order as u64) as Elem,
            Repr::Table { mul, .. } => mul[a as usize * self.order + b as usize],
            Repr::Perm(p) => match &p.table {
                Some(t) => t[a as usize * self.order + b as usize],
                None => p.product(a, b),
            },
        }
    }

    pub fn inv(&self, a: Elem) -> Elem {
        match &self.repr {
            Repr::Cyclic => ((self.order as u64 - a as u64) % self.order as u64) as Elem,
            Repr::Table { inv, .. } => inv[a as usize],
            Repr::Perm(p) => p.inv[a as usize],
        }
    }

    pub fn pow(&self, a: Elem, exp: i64) -> Elem {
        if let Repr::Cyclic = self.repr {
            let n = self.order as i128;
            return ((a as i128 * exp as i128).rem_euclid(n)) as Elem;
        }
        let (mut base, mut e) = if exp < 0 {
            (self.inv(a), exp.unsigned_abs())
        } else {
            (a, exp as u64)
        };
        let mut acc = self.identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn conjugate(&self, g: Elem, a: Elem) -> Elem {
        self.mul(self.mul(g, a), self.inv(g))
    }

    pub fn is_cyclic_repr(&self) -> bool {
        matches!(self.repr, Repr::Cyclic)
    }

    /// Permutation degree and image of an element, for permutation-backed groups.
    pub fn permutation(&self, e: Elem) -> Option<&[u16]> {
        match &self.repr {
            Repr::Perm(p) => Some(&p.points[e as usize * p.degree..(e as usize + 1) * p.degree]),
            _ => None,
        }
    }

    pub fn perm_gens(&self) -> Option<&[Vec<u16>]> {
        match &self.repr {
            Repr::Perm(p) => Some(&p.gens),
            _ => None,
        }
    }

    pub fn element_of_perm(&self, perm: &[u16]) -> Option<Elem> {
        match &self.repr {
            Repr::Perm(p) => p.index.get(perm).copied(),
            _ => None,
        }
    }

    /// Full Cayley table as rows.
    pub fn table_rows(&self) -> Vec<Vec<Elem>> {
        (0..self.order as Elem)
            .map(|a| (0..self.order as Elem).map(|b| self.mul(a, b)).collect())
            .collect()
    }
}

impl PermRepr {
    fn product(&self, a: Elem, b: Elem) -> Elem {
        let d = self.degree;
        let pa = &self.points[a as usize * d..(a as usize + 1) * d];
        let pb = &self.points[b as usize * d..(b as usize + 1) * d];
        self.index[&compose(pa, pb)]
    }
}

/// An element of `G` given as a product of generator powers.
///
/// Stored in syllable form: adjacent powers of the same generator are merged
/// and zero exponents dropped, so `a^3` is one syllable rather than three
/// letters. The empty word is the identity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupWord {
    syllables: Vec<(usize, i64)>,
}

impl GroupWord {
    pub fn identity() -> Self {
        GroupWord::default()
    }

    pub fn generator(gen: usize) -> Self {
        GroupWord::power(gen, 1)
    }

    pub fn power(gen: usize, exp: i64) -> Self {
        let mut w = GroupWord::identity();
        w.push(gen, exp);
        w
    }

    /// `k` in `G = Z`, i.e. the `k`-th power of generator 0.
    pub fn integer(k: i64) -> Self {
        GroupWord::power(0, k)
    }

    pub fn from_letters(letters: &[(usize, i64)]) -> Self {
        let mut w = GroupWord::identity();
        for &(g, e) in letters {
            w.push(g, e);
        }
        w
    }

    fn push(&mut self, gen: usize, exp: i64) {
        if exp == 0 {
            return;
        }
        if let Some(last) = self.syllables.last_mut() {
            if last.0 == gen {
                last.1 += exp;
                if last.1 == 0 {
                    self.syllables.pop();
                }
                return;
            }
        }
        self.syllables.push((gen, exp));
    }

    pub fn syllables(&self) -> &[(usize, i64)] {
        &self.syllables
    }

    pub fn is_identity(&self) -> bool {
        self.syllables.is_empty()
    }

    /// Length as a freely reduced word in the generators.
    pub fn len(&self) -> u64 {
        self.syllables.iter().map(|&(_, e)| e.unsigned_abs()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.syllables.is_empty()
    }

    pub fn mul(&self, other: &GroupWord) -> GroupWord {
        let mut w = self.clone();
        for &(g, e) in &other.syllables {
            w.push(g, e);
        }
        w
    }

    pub fn inverse(&self) -> GroupWord {
        GroupWord {
            syllables: self.syllables.iter().rev().map(|&(g, e)| (g, -e)).collect(),
        }
    }

    /// The integer this word represents when only generator 0 occurs.
    pub fn as_integer(&self) -> Option<i64> {
        match self.syllables.as_slice() {
            [] => Some(0),
            [(0, e)] => Some(*e),
            _ => None,
        }
    }

    /// All freely reduced words of length at most `radius` over `gens`
    /// generators, shortest first.
    pub fn ball(gens: usize, radius: usize) -> Vec<GroupWord> {
        let mut out = vec![GroupWord::identity()];
        let mut frontier = vec![(GroupWord::identity(), None::<(usize, i64)>)];
        for _ in 0..radius {
            let mut next = Vec::new();
            for (w, last) in &frontier {
                for g in 0..gens {
                    for s in [1i64, -1] {
                        if *last == Some((g, -s)) {
                            continue;
                        }
                        let nw = w.mul(&GroupWord::power(g, s));
                        next.push((nw, Some((g, s))));
                    }
                }
            }
            out.extend(next.iter().map(|(w, _)| w.clone()));
            frontier = next;
        }
        out
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.syllables.is_empty() {
            return write!(f, "1");
        }
        for &(g, e) in &self.syllables {
            let letter = (b'a' + g as u8) as char;
            match e {
                1 => write!(f, "{letter}")?,
                -1 => write!(f, "{}", letter.to_ascii_uppercase())?,
                _ => write!(f, "{letter}^{e}")?,
            }
        }
        Ok(())
    }
}

impl serde::Serialize for GroupWord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for GroupWord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for GroupWord {
    type Err = Error;

    /// Parses `1`, `aBa`, `a^5b^-2`; an uppercase letter is the inverse generator.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut w = GroupWord::identity();
        if s.is_empty() || s == "1" {
            return Ok(w);
        }
        let bytes = s.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            if !c.is_ascii_alphabetic() {
                return Err(Error::Parse(format!("bad group word {s:?} at byte {i}")));
            }
            let gen = (c.to_ascii_lowercase() as u8 - b'a') as usize;
            let sign = if c.is_ascii_uppercase() { -1 } else { 1 };
            i += 1;
            let mut exp = 1i64;
            if i < bytes.len() && bytes[i] == b'^' {
                let start = i + 1;
                let mut end = start;
                if end < bytes.len() && bytes[end] == b'-' {
                    end += 1;
                }
                while end < bytes.len() && bytes[end].is_ascii_digit() {
                    end += 1;
                }
                exp = s[start..end]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad exponent in {s:?}")))?;
                i = end;
            }
            w.push(gen, sign * exp);
        }
        Ok(w)
    }
}

#[derive(Clone, Debug)]
pub struct Level {
    group: FiniteGroup,
    /// Map to the previous level; empty at level 1.
    proj: Vec<Elem>,
    labels: Vec<Elem>,
    label_pos: Vec<u32>,
    /// One fixed lift of each element of the previous level; empty at level 1.
    section: Vec<Elem>,
}

impl Level {
    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn proj(&self) -> &[Elem] {
        &self.proj
    }
}

/// A tower of finite quotients with generator images.
#[derive(Clone, Debug)]
pub struct QuotientChain {
    levels: Vec<Level>,
    /// `gens[i][n - 1]` is the image of abstract generator `i` in `Q_n`.
    gens: Vec<Vec<Elem>>,
    periods: Option<Vec<u64>>,
}

impl QuotientChain {
    /// The `G = Z` chain `Z/p_1 <- Z/p_2 <- ...` with generator image `1`.
    pub fn cyclic(periods: &[u64]) -> Result<Self> {
        if periods.is_empty() {
            return Err(Error::InvalidChain("no periods".into()));
        }
        for w in periods.windows(2) {
            if w[1] <= w[0] || w[1] % w[0] != 0 {
                return Err(Error::InvalidChain(format!(
                    "periods must strictly increase and divide each other: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if periods[0] == 0 {
            return Err(Error::InvalidChain("period 0".into()));
        }
        let groups = periods
            .iter()
            .map(|&p| FiniteGroup::cyclic(p))
            .collect::<Result<Vec<_>>>()?;
        let proj = periods
            .windows(2)
            .map(|w| (0..w[1]).map(|r| (r % w[0]) as Elem).collect())
            .collect();
        let gens = vec![periods.iter().map(|&p| (1 % p) as Elem).collect()];
        let mut chain = QuotientChain::from_parts(groups, proj, gens)?;
        chain.periods = Some(periods.to_vec());
        Ok(chain)
    }

    /// Assembles and validates a chain: each projection must be a surjective
    /// homomorphism, the generator images must generate every level, and the
    /// images must be projection-compatible.
    pub fn from_parts(groups: Vec<FiniteGroup>, proj: Vec<Vec<Elem>>, gens: Vec<Vec<Elem>>) -> Result<Self> {
        let depth = groups.len();
        if depth == 0 {
            return Err(Error::InvalidChain("no levels".into()));
        }
        if proj.len() != depth - 1 {
            return Err(Error::InvalidChain(format!(
                "expected {} projections, got {}",
                depth - 1,
                proj.len()
            )));
        }
        for (i, g) in gens.iter().enumerate() {
            if g.len() != depth {
                return Err(Error::InvalidChain(format!("generator {i} has {} images", g.len())));
            }
            for (n, &e) in g.iter().enumerate() {
                if e as usize >= groups[n].order() {
                    return Err(Error::InvalidChain(format!(
                        "generator {i} image out of range at level {}",
                        n + 1
                    )));
                }
            }
        }
        for (n, group) in groups.iter().enumerate() {
            let images: Vec<Elem> = gens.iter().map(|g| g[n]).collect();
            if closure_size(group, &images) != group.order() {
                return Err(Error::InvalidChain(format!(
                    "generator images do not generate level {}",
                    n + 1
                )));
            }
        }
        let mut levels: Vec<Level> = Vec::with_capacity(depth);
        for (n, group) in groups.into_iter().enumerate() {
            let (p, labels, section) = if n == 0 {
                let id = group.identity();
                let labels: Vec<Elem> = (0..group.order() as Elem).filter(|&e| e != id).collect();
                (Vec::new(), labels, Vec::new())
            } else {
                let prev = &levels[n - 1].group;
                let p = proj[n - 1].clone();
                if p.len() != group.order() {
                    return Err(Error::InvalidChain(format!("projection {} has wrong size", n + 1)));
                }
                if p.iter().any(|&e| e as usize >= prev.order()) {
                    return Err(Error::InvalidChain(format!("projection {} out of range", n + 1)));
                }
                if p[group.identity() as usize] != prev.identity() {
                    return Err(Error::InvalidChain(format!("projection {} moves the identity", n + 1)));
                }
                for gen in &gens {
                    let s = gen[n];
                    for a in 0..group.order() as Elem {
                        if p[group.mul(a, s) as usize] != prev.mul(p[a as usize], p[s as usize]) {
                            return Err(Error::InvalidChain(format!(
                                "projection {} is not a homomorphism",
                                n + 1
                            )));
                        }
                    }
                    if p[s as usize] != gen[n - 1] {
                        return Err(Error::InvalidChain(format!(
                            "generator images not compatible at level {}",
                            n + 1
                        )));
                    }
                }
                let mut section = vec![Elem::MAX; prev.order()];
                for e in 0..group.order() as Elem {
                    let slot = &mut section[p[e as usize] as usize];
                    if *slot == Elem::MAX {
                        *slot = e;
                    }
                }
                if section.contains(&Elem::MAX) {
                    return Err(Error::InvalidChain(format!("projection {} is not surjective", n + 1)));
                }
                let id = group.identity();
                let prev_id = prev.identity();
                let labels: Vec<Elem> = (0..group.order() as Elem)
                    .filter(|&e| e != id && p[e as usize] == prev_id)
                    .collect();
                (p, labels, section)
            };
            let mut label_pos = vec![NOT_A_LABEL; group.order()];
            for (k, &a) in labels.iter().enumerate() {
                label_pos[a as usize] = k as u32;
            }
            levels.push(Level {
                group,
                proj: p,
                labels,
                label_pos,
                section,
            });
        }
        Ok(QuotientChain {
            levels,
            gens,
            periods: None,
        })
    }

    /// The chain of images of `F_k` in `P_1 x ... x P_n`, where factor `P_i`
    /// is a permutation group given by the images of the `k` abstract
    /// generators. This realizes `H_n` as the intersection of the first `n`
    /// factor kernels, so the chain is decreasing by construction.
    pub fn from_factors(factors: &[Vec<Vec<u16>>]) -> Result<Self> {
        let k = factors.first().map_or(0, Vec::len);
        if k == 0 || factors.iter().any(|f| f.len() != k) {
            return Err(Error::InvalidChain("every factor needs one image per generator".into()));
        }
        let mut groups: Vec<FiniteGroup> = Vec::new();
        let mut combined: Vec<Vec<u16>> = vec![Vec::new(); k];
        let mut degrees = Vec::new();
        for factor in factors {
            let offset = combined[0].len() as u16;
            for (g, img) in factor.iter().enumerate() {
                combined[g].extend(img.iter().map(|&x| x + offset));
            }
            degrees.push(combined[0].len());
            groups.push(FiniteGroup::from_perm_gens(&combined)?);
        }
        let mut proj = Vec::new();
        for n in 1..groups.len() {
            let prev_deg = degrees[n - 1];
            let (prev, cur) = (&groups[n - 1], &groups[n]);
            let table = (0..cur.order() as Elem)
                .map(|e| {
                    let perm = cur.permutation(e).expect("permutation group");
                    prev.element_of_perm(&perm[..prev_deg])
                        .ok_or_else(|| Error::InvalidChain("restriction left the previous level".into()))
                })
                .collect::<Result<Vec<_>>>()?;
            proj.push(table);
        }
        // BFS enumeration puts generator g's image at index g + 1 unless it
        // coincides with an earlier element, so look images up explicitly.
        let gens = (0..k)
            .map(|g| {
                groups
                    .iter()
                    .enumerate()
                    .map(|(n, grp)| {
                        let img = &grp.perm_gens().expect("permutation group")[g];
                        debug_assert_eq!(img.len(), degrees[n]);
                        grp.element_of_perm(img).expect("generator is an element")
                    })
                    .collect()
            })
            .collect();
        QuotientChain::from_parts(groups, proj, gens)
    }

    /// Two-level chain over `F_2`: `Q_1 = Z/2` via the sign map, `Q_2 = S_3`,
    /// with `a -> (0 1)` and `b -> (0 1 2)`.
    pub fn s3_over_sign() -> Self {
        let z2 = vec![perm_from_cycles(2, &[&[0, 1]]), perm_from_cycles(2, &[])];
        let s3 = vec![perm_from_cycles(3, &[&[0, 1]]), perm_from_cycles(3, &[&[0, 1, 2]])];
        QuotientChain::from_factors(&[z2, s3]).expect("valid tower")
    }

    /// Dihedral quotients `D_m <- D_n` (symmetries of an `m`-gon and an
    /// `n`-gon, `m | n`) of `F_2` with `a -> rotation`, `b -> reflection`.
    pub fn dihedral_pair(m: u16, n: u16) -> Result<Self> {
        if m < 2 || !n.is_multiple_of(m) {
            return Err(Error::InvalidChain(format!("need m | n, got {m}, {n}")));
        }
        let dihedral = |k: u16| {
            let rot: Vec<u16> = (0..k).map(|i| (i + 1) % k).collect();
            let refl: Vec<u16> = (0..k).map(|i| (k - i) % k).collect();
            vec![rot, refl]
        };
        QuotientChain::from_factors(&[dihedral(m), dihedral(n)])
    }

    /// A tower of `S_3` and `S_4` quotients of `F_2 = <a, b>` chosen greedily
    /// so that every element of `tests` moves some label of every level
    /// kernel, including level 1.
    ///
    /// Candidate factors are generating pairs of `S_3` (tried first) and
    /// `S_4`, in lexicographic order; the first one that keeps the level
    /// order within `max_order` and separates all test elements is taken.
    pub fn f2_tower_for(tests: &[GroupWord], depth: usize, max_order: usize) -> Result<Self> {
        if tests.iter().any(|g| g.syllables().iter().any(|&(gen, _)| gen > 1)) {
            return Err(Error::UnknownGenerator(2));
        }
        let pool = f2_factor_pool();
        let mut factors: Vec<Vec<Vec<u16>>> = Vec::new();
        let mut chain: Option<QuotientChain> = None;
        for n in 1..=depth {
            let prev_order = chain.as_ref().map_or(1, |c| c.group(n - 1).unwrap().order());
            let mut chosen = None;
            for cand in &pool {
                // cheap filter: each test element must be non-central in the factor
                let sym = FiniteGroup::from_perm_gens(cand)?;
                let imgs = [
                    sym.element_of_perm(&cand[0]).unwrap(),
                    sym.element_of_perm(&cand[1]).unwrap(),
                ];
                let noncentral = tests.iter().all(|g| {
                    let e = word_in(&sym, &imgs, g);
                    (0..sym.order() as Elem).any(|x| sym.mul(e, x) != sym.mul(x, e))
                });
                if !noncentral {
                    continue;
                }
                let mut trial = factors.clone();
                trial.push(cand.clone());
                let combined = combined_gens(&trial);
                match FiniteGroup::from_perm_gens_capped(&combined, max_order)? {
                    Some(group) if group.order() > prev_order => {}
                    _ => continue,
                }
                let c = QuotientChain::from_factors(&trial)?;
                let mut ok = true;
                for g in tests {
                    if c.verify_chain_condition(g, n - 1)?.is_none() {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    chosen = Some((cand.clone(), c));
                    break;
                }
            }
            let (cand, c) = chosen.ok_or_else(|| {
                Error::InvalidChain(format!("no S3/S4 factor separates the test elements at level {n}"))
            })?;
            factors.push(cand);
            chain = Some(c);
        }
        chain.ok_or_else(|| Error::InvalidChain("depth 0".into()))
    }

    /// [`QuotientChain::f2_tower_for`] with [`f2_test_elements`] and a level
    /// order cap of 32768. Five levels reach order 27648.
    pub fn f2_tower(depth: usize) -> Result<Self> {
        QuotientChain::f2_tower_for(&f2_test_elements(), depth, 32_768)
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn num_generators(&self) -> usize {
        self.gens.len()
    }

    /// Periods when this is a `Z` chain built by [`QuotientChain::cyclic`].
    pub fn periods(&self) -> Option<&[u64]> {
        self.periods.as_deref()
    }

    pub fn level(&self, n: usize) -> Result<&Level> {
        if n == 0 || n > self.depth() {
            return Err(Error::LevelOutOfRange {
                level: n,
                depth: self.depth(),
            });
        }
        Ok(&self.levels[n - 1])
    }

    pub fn group(&self, n: usize) -> Result<&FiniteGroup> {
        Ok(&self.level(n)?.group)
    }

    pub fn generator_images(&self) -> &[Vec<Elem>] {
        &self.gens
    }

    /// Image of `q ∈ Q_n` in `Q_(n-1)`.
    pub fn proj(&self, n: usize, q: Elem) -> Result<Elem> {
        let level = self.level(n)?;
        if n == 1 {
            return Ok(0);
        }
        Ok(level.proj[q as usize])
    }

    /// `π_n(g)`.
    pub fn project(&self, g: &GroupWord, n: usize) -> Result<Elem> {
        let level = self.level(n)?;
        let group = &level.group;
        let mut acc = group.identity();
        for &(gen, exp) in g.syllables() {
            let img = self.gens.get(gen).ok_or(Error::UnknownGenerator(gen))?[n - 1];
            acc = group.mul(acc, group.pow(img, exp));
        }
        Ok(acc)
    }

    /// `(π_1(g), ..., π_depth(g))`, computed at the top level and projected down.
    pub fn project_all(&self, g: &GroupWord, depth: usize) -> Result<Vec<Elem>> {
        let mut out = vec![0; depth];
        if depth == 0 {
            return Ok(out);
        }
        out[depth - 1] = self.project(g, depth)?;
        for n in (1..depth).rev() {
            out[n - 1] = self.levels[n].proj[out[n] as usize];
        }
        Ok(out)
    }

    /// Projects an element of `Q_depth` down to the full residue tuple.
    pub fn residues_of(&self, top: Elem, depth: usize) -> Result<Vec<Elem>> {
        self.level(depth)?;
        let mut out = vec![0; depth];
        out[depth - 1] = top;
        for n in (1..depth).rev() {
            out[n - 1] = self.levels[n].proj[out[n] as usize];
        }
        Ok(out)
    }

    /// `A_n`: the kernel of `Q_n -> Q_(n-1)` without the identity.
    pub fn level_labels(&self, n: usize) -> Result<&[Elem]> {
        Ok(&self.level(n)?.labels)
    }

    /// Position of `a` within `level_labels(n)`.
    pub fn label_index(&self, n: usize, a: Elem) -> Result<usize> {
        let level = self.level(n)?;
        match level.label_pos.get(a as usize) {
            Some(&k) if k != NOT_A_LABEL => Ok(k as usize),
            _ => Err(Error::NotALabel { elem: a, level: n }),
        }
    }

    pub fn is_label(&self, n: usize, a: Elem) -> bool {
        self.label_index(n, a).is_ok()
    }

    /// `π_n(g) a π_n(g)^-1`, again a label since level kernels are normal.
    pub fn conjugate_label(&self, g: &GroupWord, a: Elem, n: usize) -> Result<Elem> {
        self.label_index(n, a)?;
        let gn = self.project(g, n)?;
        Ok(self.levels[n - 1].group.conjugate(gn, a))
    }

    /// A label `C ∈ A_(m+1)` with `g C g^-1 != C`, or `None` when `g`
    /// centralizes the whole kernel. The scan is in label order, so the
    /// returned witness is the least one.
    pub fn verify_chain_condition(&self, g: &GroupWord, m: usize) -> Result<Option<Elem>> {
        let n = m + 1;
        let level = self.level(n)?;
        let gn = self.project(g, n)?;
        Ok(level
            .labels
            .iter()
            .copied()
            .find(|&c| level.group.conjugate(gn, c) != c))
    }

    /// Uniform sample from `Q_depth` drawn level by level: `q_1` uniform,
    /// then each `q_n` uniform among the lifts of `q_(n-1)`.
    pub fn haar_sample(&self, depth: usize, seed: u64) -> Result<ProfinitePoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.haar_sample_with(depth, &mut rng)
    }

    pub fn haar_sample_with<R: Rng>(&self, depth: usize, rng: &mut R) -> Result<ProfinitePoint> {
        if depth > self.depth() {
            return Err(Error::LevelOutOfRange {
                level: depth,
                depth: self.depth(),
            });
        }
        let mut residues = Vec::with_capacity(depth);
        for n in 0..depth {
            let level = &self.levels[n];
            let q = if n == 0 {
                rng.gen_range(0..level.group.order() as Elem)
            } else {
                let lift = level.section[residues[n - 1] as usize];
                // kernel = labels plus the identity
                let k = rng.gen_range(0..=level.labels.len());
                let kernel_elem = if k == level.labels.len() {
                    level.group.identity()
                } else {
                    level.labels[k]
                };
                level.group.mul(lift, kernel_elem)
            };
            residues.push(q);
        }
        Ok(ProfinitePoint {
            residues,
            not_in_g: true,
        })
    }

    /// Breadth-first coset representatives: a shortest word (over the
    /// generators and their inverses) for every element of `Q_n`, optionally
    /// capped at `max_len`.
    pub fn representatives(&self, n: usize, max_len: Option<u64>) -> Result<Vec<Option<GroupWord>>> {
        let group = self.group(n)?;
        let mut reps: Vec<Option<GroupWord>> = vec![None; group.order()];
        let id = group.identity();
        reps[id as usize] = Some(GroupWord::identity());
        let mut queue = VecDeque::from([id]);
        let steps: Vec<(usize, i64, Elem)> = (0..self.gens.len())
            .flat_map(|g| {
                let img = self.gens[g][n - 1];
                [(g, 1, img), (g, -1, group.inv(img))]
            })
            .collect();
        while let Some(e) = queue.pop_front() {
            let word = reps[e as usize].clone().expect("visited");
            if max_len.is_some_and(|m| word.len() >= m) {
                continue;
            }
            for &(g, s, img) in &steps {
                let next = group.mul(e, img);
                if reps[next as usize].is_none() {
                    reps[next as usize] = Some(word.mul(&GroupWord::power(g, s)));
                    queue.push_back(next);
                }
            }
        }
        Ok(reps)
    }
}

fn closure_size(group: &FiniteGroup, gens: &[Elem]) -> usize {
    let mut seen = vec![false; group.order()];
    let id = group.identity();
    seen[id as usize] = true;
    let mut stack = vec![id];
    let mut count = 1;
    while let Some(e) = stack.pop() {
        for &g in gens {
            let next = group.mul(e, g);
            if !seen[next as usize] {
                seen[next as usize] = true;
                count += 1;
                stack.push(next);
            }
        }
    }
    count
}

/// Ten short elements of `F_2 = <a, b>` with nontrivial image in each of the
/// three `S_3` quotients of `F_2`.
///
/// In an `S_3`/`S_4` tower the kernels past the third level are Klein
/// four-groups acted on through an `S_3` quotient, so an element such as
/// `a^2` that dies in some `S_3` quotient cannot be separated at every level.
pub fn f2_test_elements() -> Vec<GroupWord> {
    ["a", "b", "ab", "aB", "abAB", "aba", "bab", "ab^2A", "aBAb", "abaB"]
        .iter()
        .map(|w| w.parse().expect("static word"))
        .collect()
}

fn word_in(group: &FiniteGroup, imgs: &[Elem], g: &GroupWord) -> Elem {
    g.syllables().iter().fold(group.identity(), |acc, &(gen, e)| {
        group.mul(acc, group.pow(imgs[gen], e))
    })
}

fn combined_gens(factors: &[Vec<Vec<u16>>]) -> Vec<Vec<u16>> {
    let mut combined: Vec<Vec<u16>> = vec![Vec::new(); factors[0].len()];
    for factor in factors {
        let offset = combined[0].len() as u16;
        for (g, img) in factor.iter().enumerate() {
            combined[g].extend(img.iter().map(|&x| x + offset));
        }
    }
    combined
}

/// Generating pairs of `S_3` then `S_4`, lexicographic in the image arrays.
fn f2_factor_pool() -> Vec<Vec<Vec<u16>>> {
    let mut pool = Vec::new();
    for (degree, order) in [(3usize, 6usize), (4, 24)] {
        let perms = all_perms(degree);
        for x in &perms {
            for y in &perms {
                let pair = vec![x.clone(), y.clone()];
                // simultaneous conjugates define the same quotient; keep the least
                let canonical = perms.iter().all(|c| {
                    let conj = |p: &Vec<u16>| compose(&compose(c, p), &invert(c));
                    vec![conj(x), conj(y)] >= pair
                });
                if canonical && FiniteGroup::from_perm_gens(&pair).ok().map(|g| g.order()) == Some(order) {
                    pool.push(pair);
                }
            }
        }
    }
    pool
}

fn invert(p: &[u16]) -> Vec<u16> {
    let mut q = vec![0u16; p.len()];
    for (x, &px) in p.iter().enumerate() {
        q[px as usize] = x as u16;
    }
    q
}

fn all_perms(degree: usize) -> Vec<Vec<u16>> {
    fn rec(prefix: &mut Vec<u16>, used: &mut [bool], out: &mut Vec<Vec<u16>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for x in 0..used.len() {
            if !used[x] {
                used[x] = true;
                prefix.push(x as u16);
                rec(prefix, used, out);
                prefix.pop();
                used[x] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; degree], &mut out);
    out
}

/// A point of the inverse limit known to finite depth: a compatible residue
/// tuple `(q_1, ..., q_N)`.
///
/// Membership `y ∉ G` cannot be decided from finitely many residues, so
/// `not_in_g` records an assertion made by whoever built the point. Results
/// that rely on `y ∉ G` are conditional on that flag.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProfinitePoint {
    residues: Vec<Elem>,
    not_in_g: bool,
}

impl ProfinitePoint {
    pub fn new(chain: &QuotientChain, residues: Vec<Elem>, not_in_g: bool) -> Result<Self> {
        if residues.len() > chain.depth() {
            return Err(Error::LevelOutOfRange {
                level: residues.len(),
                depth: chain.depth(),
            });
        }
        for (n, &q) in residues.iter().enumerate() {
            if q as usize >= chain.levels[n].group.order() {
                return Err(Error::InvalidChain(format!(
                    "residue {q} out of range at level {}",
                    n + 1
                )));
            }
            if n > 0 && chain.levels[n].proj[q as usize] != residues[n - 1] {
                return Err(Error::InvalidChain(format!(
                    "residues not compatible at level {}",
                    n + 1
                )));
            }
        }
        Ok(ProfinitePoint { residues, not_in_g })
    }

    pub fn identity(chain: &QuotientChain, depth: usize) -> Self {
        ProfinitePoint {
            residues: chain.levels[..depth].iter().map(|l| l.group.identity()).collect(),
            not_in_g: false,
        }
    }

    pub fn depth(&self) -> usize {
        self.residues.len()
    }

    pub fn residues(&self) -> &[Elem] {
        &self.residues
    }

    pub fn residue(&self, n: usize) -> Elem {
        self.residues[n - 1]
    }

    pub fn not_in_g(&self) -> bool {
        self.not_in_g
    }

    /// Extends the point by one level with a lift of the current top residue.
    /// This is the hook for residue oracles that deepen a point on demand.
    pub fn extend(&mut self, chain: &QuotientChain, residue: Elem) -> Result<()> {
        let n = self.depth() + 1;
        let level = chain.level(n)?;
        if residue as usize >= level.group.order() {
            return Err(Error::InvalidChain(format!("residue {residue} out of range")));
        }
        if n > 1 && level.proj[residue as usize] != self.residues[n - 2] {
            return Err(Error::InvalidChain(format!("residue {residue} is not a lift")));
        }
        self.residues.push(residue);
        Ok(())
    }

    /// `g y`, where `g` is given by its residues.
    pub fn left_mul(&self, chain: &QuotientChain, g: &[Elem]) -> ProfinitePoint {
        ProfinitePoint {
            residues: self
                .residues
                .iter()
                .enumerate()
                .map(|(n, &q)| chain.levels[n].group.mul(g[n], q))
                .collect(),
            not_in_g: self.not_in_g,
        }
    }

    /// `y g`.
    pub fn right_mul(&self, chain: &QuotientChain, g: &[Elem]) -> ProfinitePoint {
        ProfinitePoint {
            residues: self
                .residues
                .iter()
                .enumerate()
                .map(|(n, &q)| chain.levels[n].group.mul(q, g[n]))
                .collect(),
            not_in_g: self.not_in_g,
        }
    }

    pub fn inverse(&self, chain: &QuotientChain) -> ProfinitePoint {
        ProfinitePoint {
            residues: self
                .residues
                .iter()
                .enumerate()
                .map(|(n, &q)| chain.levels[n].group.inv(q))
                .collect(),
            not_in_g: self.not_in_g,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Kernel of `Q_n -> Q_(n-1)` minus the identity, by brute force over the
    /// projection table.
    fn kernel_oracle(chain: &QuotientChain, n: usize) -> Vec<Elem> {
        let g = chain.group(n).unwrap();
        (0..g.order() as Elem)
            .filter(|&e| {
                e != g.identity() && (n == 1 || chain.proj(n, e).unwrap() == chain.group(n - 1).unwrap().identity())
            })
            .collect()
    }

    #[test]
    fn cyclic_chain_label_sizes() {
        let c = QuotientChain::cyclic(&[2, 4, 8]).unwrap();
        let orders: Vec<_> = (1..=3).map(|n| c.group(n).unwrap().order()).collect();
        assert_eq!(orders, [2, 4, 8]);
        for n in 1..=3 {
            assert_eq!(c.level_labels(n).unwrap(), kernel_oracle(&c, n).as_slice());
            assert_eq!(c.level_labels(n).unwrap().len(), 1);
        }
        assert_eq!(c.level_labels(2).unwrap(), &[2]);
        let c = QuotientChain::cyclic(&[3, 9]).unwrap();
        assert_eq!(c.level_labels(2).unwrap(), &[3, 6]);
    }

    #[test]
    fn trivial_and_nondivisible_chains() {
        let c = QuotientChain::cyclic(&[1]).unwrap();
        assert_eq!(c.group(1).unwrap().order(), 1);
        assert!(c.level_labels(1).unwrap().is_empty());
        let p = c.haar_sample(1, 9).unwrap();
        assert_eq!(p.residues(), &[0]);

        let c = QuotientChain::cyclic(&[2, 6]).unwrap();
        assert_eq!(c.level_labels(2).unwrap().len(), 2);

        assert!(matches!(QuotientChain::cyclic(&[2, 3]), Err(Error::InvalidChain(_))));
        assert!(matches!(QuotientChain::cyclic(&[4, 4]), Err(Error::InvalidChain(_))));
        assert!(matches!(QuotientChain::cyclic(&[4, 2]), Err(Error::InvalidChain(_))));
    }

    #[test]
    fn project_examples() {
        let c = QuotientChain::cyclic(&[2, 4, 8]).unwrap();
        assert_eq!(c.project(&GroupWord::integer(5), 2).unwrap(), 1);
        assert_eq!(c.project(&GroupWord::integer(-3), 3).unwrap(), 5);
        for n in 1..=3 {
            let id = c.group(n).unwrap().identity();
            assert_eq!(c.project(&GroupWord::identity(), n).unwrap(), id);
        }
        assert!(matches!(
            c.project(&GroupWord::integer(1), 4),
            Err(Error::LevelOutOfRange { .. })
        ));

        let s = QuotientChain::s3_over_sign();
        let a = c_proj(&s, "a", 1);
        assert_ne!(a, s.group(1).unwrap().identity());
        assert_eq!(c_proj(&s, "b", 1), s.group(1).unwrap().identity());
    }

    fn c_proj(c: &QuotientChain, w: &str, n: usize) -> Elem {
        c.project(&w.parse().unwrap(), n).unwrap()
    }

    #[test]
    fn s3_over_sign_labels_are_three_cycles() {
        let s = QuotientChain::s3_over_sign();
        assert_eq!(s.group(2).unwrap().order(), 6);
        let labels = s.level_labels(2).unwrap();
        assert_eq!(labels.len(), 2);
        let g = s.group(2).unwrap();
        for &l in labels {
            // a 3-cycle has order 3
            assert_ne!(l, g.identity());
            assert_eq!(g.pow(l, 3), g.identity());
        }
        // conjugating by the transposition swaps the two 3-cycles
        let t = GroupWord::generator(0);
        let c0 = s.conjugate_label(&t, labels[0], 2).unwrap();
        assert_eq!(c0, labels[1]);
        let w = s.verify_chain_condition(&t, 1).unwrap();
        assert_eq!(w, Some(labels[0]));
        assert!(matches!(
            s.conjugate_label(&t, g.identity(), 2),
            Err(Error::NotALabel { .. })
        ));
    }

    #[test]
    fn abelian_chains_have_no_chain_witness() {
        let c = QuotientChain::cyclic(&[2, 4, 8, 16]).unwrap();
        for k in [-5i64, 1, 3, 7] {
            let g = GroupWord::integer(k);
            for m in 0..3 {
                assert_eq!(c.verify_chain_condition(&g, m).unwrap(), None);
                for &a in c.level_labels(m + 1).unwrap() {
                    assert_eq!(c.conjugate_label(&g, a, m + 1).unwrap(), a);
                }
            }
        }
    }

    #[test]
    fn dihedral_chain_condition() {
        // D_4 <- D_8: the kernel has order two, hence is central
        let c = QuotientChain::dihedral_pair(4, 8).unwrap();
        assert_eq!(c.group(2).unwrap().order(), 16);
        let refl = GroupWord::generator(1);
        assert_eq!(c.verify_chain_condition(&refl, 1).unwrap(), None);

        // D_4 <- D_12: kernel {1, r^4, r^8}, inverted by reflections
        let c = QuotientChain::dihedral_pair(4, 12).unwrap();
        let g2 = c.group(2).unwrap();
        let w = c.verify_chain_condition(&refl, 1).unwrap().expect("witness");
        let r4 = c.project(&GroupWord::power(0, 4), 2).unwrap();
        let r8 = g2.mul(r4, r4);
        assert!(w == r4 || w == r8);
        assert_ne!(g2.conjugate(c.project(&refl, 2).unwrap(), w), w);
    }

    fn tower4() -> &'static QuotientChain {
        static C: std::sync::OnceLock<QuotientChain> = std::sync::OnceLock::new();
        C.get_or_init(|| QuotientChain::f2_tower(4).unwrap())
    }

    #[test]
    fn f2_tower_separates_its_test_elements() {
        let c = QuotientChain::f2_tower(5).unwrap();
        for g in f2_test_elements() {
            for m in 0..5 {
                let cw = c.verify_chain_condition(&g, m).unwrap().expect("witness");
                assert_ne!(c.conjugate_label(&g, cw, m + 1).unwrap(), cw);
            }
        }
        // squares of transpositions die in an S_3 quotient
        let squares: Vec<GroupWord> = ["a^2", "b^2"].iter().map(|w| w.parse().unwrap()).collect();
        assert!(QuotientChain::f2_tower_for(&squares, 5, 32_768).is_err());
    }

    #[test]
    fn f2_tower_is_a_valid_five_level_chain() {
        let c = QuotientChain::f2_tower(5).unwrap();
        assert_eq!(c.depth(), 5);
        for n in 1..=5 {
            assert_eq!(c.level_labels(n).unwrap(), kernel_oracle(&c, n).as_slice());
            let ratio = c.group(n).unwrap().order() / if n == 1 { 1 } else { c.group(n - 1).unwrap().order() };
            assert_eq!(c.level_labels(n).unwrap().len(), ratio - 1);
        }
    }

    #[test]
    fn table_group_validation() {
        let z3 = vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]];
        let g = FiniteGroup::from_table(&z3).unwrap();
        assert_eq!(g.identity(), 0);
        assert_eq!(g.inv(1), 2);
        let bad = vec![vec![0, 1], vec![1, 1]];
        assert!(FiniteGroup::from_table(&bad).is_err());
        // a quasigroup that is not associative
        let nonassoc = vec![vec![0, 1, 2], vec![1, 0, 2], vec![2, 2, 0]];
        assert!(FiniteGroup::from_table(&nonassoc).is_err());
    }

    #[test]
    fn dense_and_sparse_perm_groups_agree() {
        let c = QuotientChain::f2_tower(5).unwrap();
        let big = c.group(5).unwrap();
        assert!(big.order() > DENSE_TABLE_MAX);
        let small = c.group(1).unwrap();
        for a in 0..small.order() as Elem {
            for b in 0..small.order() as Elem {
                let pa = small.permutation(a).unwrap();
                let pb = small.permutation(b).unwrap();
                assert_eq!(small.element_of_perm(&compose(pa, pb)), Some(small.mul(a, b)));
            }
        }
    }

    #[test]
    fn haar_frequencies_mod_4() {
        let c = QuotientChain::cyclic(&[2, 4]).unwrap();
        let mut counts = [0usize; 4];
        for seed in 0..10_000u64 {
            let p = c.haar_sample(2, seed).unwrap();
            assert_eq!(p.residue(2) % 2, p.residue(1));
            counts[p.residue(2) as usize] += 1;
        }
        for c in counts {
            let f = c as f64 / 10_000.0;
            assert!((f - 0.25).abs() <= 0.02, "frequency {f}");
        }
    }

    #[test]
    fn haar_is_deterministic() {
        let c = QuotientChain::f2_tower(3).unwrap();
        assert_eq!(c.haar_sample(3, 42).unwrap(), c.haar_sample(3, 42).unwrap());
    }

    #[test]
    fn word_parse_and_display() {
        let w: GroupWord = "aBa^3b^-2".parse().unwrap();
        assert_eq!(w.syllables(), &[(0, 1), (1, -1), (0, 3), (1, -2)]);
        assert_eq!(w.to_string(), "aBa^3b^-2");
        assert_eq!("1".parse::<GroupWord>().unwrap(), GroupWord::identity());
        assert_eq!("aA".parse::<GroupWord>().unwrap(), GroupWord::identity());
        assert!("a^x".parse::<GroupWord>().is_err());
        assert_eq!(GroupWord::ball(2, 3).len(), 1 + 4 + 12 + 36);
    }

    #[test]
    fn representatives_cover_every_coset() {
        let c = QuotientChain::f2_tower(3).unwrap();
        let reps = c.representatives(3, None).unwrap();
        for (e, w) in reps.iter().enumerate() {
            assert_eq!(c.project(w.as_ref().unwrap(), 3).unwrap(), e as Elem);
        }
    }

    fn word_strategy() -> impl Strategy<Value = GroupWord> {
        prop::collection::vec((0usize..2, -3i64..=3), 0..8).prop_map(|l| GroupWord::from_letters(&l))
    }

    proptest! {
        #[test]
        fn project_is_a_homomorphism(g in word_strategy(), h in word_strategy()) {
            let c = tower4();
            for n in 1..=4 {
                let grp = c.group(n).unwrap();
                let gh = c.project(&g.mul(&h), n).unwrap();
                prop_assert_eq!(gh, grp.mul(c.project(&g, n).unwrap(), c.project(&h, n).unwrap()));
                if n > 1 {
                    prop_assert_eq!(c.proj(n, c.project(&g, n).unwrap()).unwrap(), c.project(&g, n - 1).unwrap());
                }
            }
        }

        #[test]
        fn conjugation_round_trip(g in word_strategy(), k in 0usize..64) {
            let c = tower4();
            for n in 1..=4 {
                let labels = c.level_labels(n).unwrap();
                if labels.is_empty() { continue; }
                let a = labels[k % labels.len()];
                let b = c.conjugate_label(&g.inverse(), a, n).unwrap();
                prop_assert!(c.is_label(n, b));
                prop_assert_eq!(c.conjugate_label(&g, b, n).unwrap(), a);
            }
        }

        #[test]
        fn chain_witnesses_are_genuine(g in word_strategy()) {
            let c = tower4();
            for m in 0..3 {
                if let Some(cw) = c.verify_chain_condition(&g, m).unwrap() {
                    prop_assert_ne!(c.conjugate_label(&g, cw, m + 1).unwrap(), cw);
                }
            }
        }
    }
}
