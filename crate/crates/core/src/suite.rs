//! The fixed-seed verification suite: one check per certified property,
//! each reporting its budget, case count and serialized counterexamples.
//! Reports contain no timings, so equal seeds give byte-identical JSON.

use std::path::Path;
use std::sync::Arc;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::chain::{f2_test_elements, GroupWord, QuotientChain};
use crate::codes::{cyclic_block_shift, enumerate_conjugacies, BlockCode, CodePair, SearchBudget};
use crate::error::{Error, Result};
use crate::formats::{from_csv, read_json, to_csv, Resolver};
use crate::groupoid::{cocycle_alpha0, conflict_is_concrete, e_p_test, perm_round_trip, Arrow, EpVerdict};
use crate::oracle;
use crate::sigma::{
    check_coset_constancy, check_equivariance, find_distinguishing_window, mu_sample, verify_distinguishing_window,
    DistinguishingWitness, Generator, Side, SigmaDatum, SubshiftHandle, WitnessSearch,
};
use crate::toeplitz::Skeleton;
use crate::witness::{l1_certificate, lambda_table, IndexStatus, WitnessFamily};

/// Failures kept per check; the count is always exact.
const MAX_DUMPED: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: u32,
    pub name: String,
    pub budget: String,
    pub cases: usize,
    pub failed: usize,
    pub passed: bool,
    pub counterexamples: Vec<Value>,
}

impl Check {
    fn new(id: u32, name: &str, budget: String) -> Self {
        Check {
            id,
            name: name.to_string(),
            budget,
            cases: 0,
            failed: 0,
            passed: true,
            counterexamples: Vec::new(),
        }
    }

    fn case(&mut self, ok: bool, detail: impl FnOnce() -> Value) {
        self.cases += 1;
        if !ok {
            self.fail(detail());
        }
    }

    fn fail(&mut self, detail: Value) {
        self.failed += 1;
        self.passed = false;
        if self.counterexamples.len() < MAX_DUMPED {
            self.counterexamples.push(detail);
        }
    }

    /// An error inside a case counts as a failure with its message.
    fn absorb<T>(&mut self, r: Result<T>, what: impl FnOnce() -> Value) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.cases += 1;
                self.fail(json!({ "case": what(), "error": e.to_string() }));
                None
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub checks: Vec<Check>,
    pub all_passed: bool,
}

/// `count` seeds from stream `stream` of the suite seed.
pub fn sub_seeds(seed: u64, stream: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..count).map(|_| rng.gen()).collect()
}

pub const Z_CHAIN: [u64; 6] = [2, 4, 8, 16, 32, 64];

/// Coset constancy on `[-2000, 2000]` and `Per_{p_n} = Z/p_n \ {y_n}` for
/// 50 data over `Z_CHAIN`; the skeleton must also match the label formula.
pub fn check_sigma_construction(seed: u64) -> Result<Check> {
    let mut c = Check::new(
        1,
        "sigma-construction",
        "chain [2..64], 50 data, window [-2000, 2000]".into(),
    );
    let chain = Arc::new(QuotientChain::cyclic(&Z_CHAIN)?);
    let window: Vec<GroupWord> = (-2000..=2000).map(GroupWord::integer).collect();
    for s in sub_seeds(seed, 1, 50) {
        let d = mu_sample(&chain, Z_CHAIN.len(), s)?;
        let ok = check_coset_constancy(&d, &window)?;
        c.case(ok, || json!({ "seed": s, "coset_constancy": false }));
        let x = d.to_skeleton()?;
        let direct = oracle::sigma_word(&d, -2000, 2001);
        let agree = (-2000..=2000).all(|h| x.evaluate(h).bit() == direct.get(h));
        c.case(agree, || json!({ "seed": s, "skeleton_matches_formula": false }));
        for (n, &p) in Z_CHAIN.iter().enumerate() {
            let yn = d.y().residue(n + 1) as u64;
            let per = x.per_p(p)?;
            let want: Vec<u64> = (0..p).filter(|&r| r != yn).collect();
            c.case(
                per == want,
                || json!({ "seed": s, "p": p, "y_n": yn, "holes": x.holes(p).ok() }),
            );
        }
    }
    Ok(c)
}

fn equivariance_cases(
    c: &mut Check,
    chain: &Arc<QuotientChain>,
    window: &[GroupWord],
    seeds: &[u64],
    tag: &str,
) -> Result<()> {
    let gens: Vec<GroupWord> = (0..chain.num_generators()).map(GroupWord::generator).collect();
    for &s in seeds {
        let d = mu_sample(chain, chain.depth(), s)?;
        for g in &gens {
            for side in [Side::Left, Side::Right] {
                let ok = check_equivariance(&d, g, window, side)?;
                c.case(
                    ok,
                    || json!({ "chain": tag, "seed": s, "g": g.to_string(), "side": side }),
                );
            }
        }
    }
    Ok(())
}

/// Equivariance on both sides for every generator, 100 data over
/// `Z_CHAIN` and 100 over the four-level `F_2` tower.
pub fn check_equivariance_suite(seed: u64) -> Result<Check> {
    let mut c = Check::new(
        2,
        "equivariance",
        "100 data over [2..64] on [-256, 256]; 100 data over the F2 tower (depth 4) on the radius-3 ball".into(),
    );
    let z = Arc::new(QuotientChain::cyclic(&Z_CHAIN)?);
    let zw: Vec<GroupWord> = (-256..=256).map(GroupWord::integer).collect();
    equivariance_cases(&mut c, &z, &zw, &sub_seeds(seed, 2, 100), "Z")?;
    let f2 = Arc::new(QuotientChain::f2_tower(4)?);
    equivariance_cases(&mut c, &f2, &GroupWord::ball(2, 3), &sub_seeds(seed, 3, 100), "F2")?;
    Ok(c)
}

pub const INJECTIVITY_CHAIN: [u64; 6] = [4, 16, 64, 256, 1024, 4096];

/// 50 pairs whose labels first differ at a level `<= 4`: a distinguishing
/// window is found and survives the full coset sweep.
pub fn check_injectivity(seed: u64) -> Result<Check> {
    let mut c = Check::new(
        3,
        "injectivity-witness",
        "chain [4..4096], 50 pairs differing at level <= 4".into(),
    );
    let chain = Arc::new(QuotientChain::cyclic(&INJECTIVITY_CHAIN)?);
    let depth = INJECTIVITY_CHAIN.len();
    let mut pairs = 0;
    for s in sub_seeds(seed, 4, 1000) {
        if pairs == 50 {
            break;
        }
        let d1 = mu_sample(&chain, depth, s)?;
        let d2 = mu_sample(&chain, depth, s.wrapping_add(1))?;
        match d1.z().first_difference(&chain, d2.z()) {
            Some((n, _)) if n <= 4 => {}
            _ => continue,
        }
        pairs += 1;
        let res = find_distinguishing_window(&d1, &d2);
        let Some(found) = c.absorb(res, || json!({ "seed": s })) else {
            continue;
        };
        match found {
            WitnessSearch::Found(w) => {
                let res = verify_distinguishing_window(&w, &d1, &d2);
                if let Some(ok) = c.absorb(res, || json!({ "seed": s, "witness": w })) {
                    c.case(ok, || json!({ "seed": s, "witness": w }));
                }
            }
            WitnessSearch::NotFound(why) => c.case(false, || json!({ "seed": s, "not_found": why })),
        }
    }
    if pairs < 50 {
        c.fail(json!({ "pairs_generated": pairs }));
    }
    Ok(c)
}

/// A distinguishing-window file: two sigma data and the claimed witness.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessFile {
    pub d1: String,
    pub d2: String,
    pub witness: DistinguishingWitness,
}

fn sigma_of(h: SubshiftHandle, what: &str) -> Result<SigmaDatum> {
    match h.generator() {
        Generator::Sigma(d) => Ok(d.clone()),
        Generator::Skeleton(_) => Err(Error::Parse(format!("{what} is not a sigma datum"))),
    }
}

/// Re-verifies a user-supplied witness file.
pub fn check_witness_file(path: &Path) -> Result<Check> {
    let mut c = Check::new(10, "supplied-witness", path.display().to_string());
    let f: WitnessFile = read_json(path)?;
    let r = Resolver::beside(path);
    let d1 = sigma_of(r.word(&f.d1)?, "d1")?;
    let d2 = sigma_of(r.word(&f.d2)?, "d2")?;
    let res = verify_distinguishing_window(&f.witness, &d1, &d2);
    if let Some(ok) = c.absorb(res, || json!({ "witness": f.witness })) {
        c.case(ok, || json!({ "witness": f.witness, "d1": f.d1, "d2": f.d2 }));
    }
    Ok(c)
}

pub const DEEP_CHAIN: [u64; 10] = [2, 4, 8, 16, 32, 64, 128, 256, 512, 1024];

/// The σ-word used where deeper levels are needed: the first seed of the
/// stream whose cocycle positions resolve through depth 6.
pub fn deep_sigma_word(seed: u64) -> Result<Skeleton> {
    let chain = Arc::new(QuotientChain::cyclic(&DEEP_CHAIN)?);
    for s in sub_seeds(seed, 5, 64) {
        let x = mu_sample(&chain, DEEP_CHAIN.len(), s)?.to_skeleton()?;
        let flipped = BlockCode::flip().image(&x)?;
        let resolves = crate::groupoid::factor_position(&x, &x.shift(1), 6).is_ok()
            && crate::groupoid::factor_position(&flipped, &flipped.shift(1), 6).is_ok();
        if resolves {
            return Ok(x);
        }
    }
    Err(Error::DepthInsufficient(
        "no sampled sigma word resolves through depth 6".into(),
    ))
}

/// A radius-1 conjugacy `S -> flip(S)` taken from the search output.
pub fn searched_radius_one(x: &Skeleton) -> Result<Option<CodePair>> {
    let t = BlockCode::flip().image(x)?;
    let (pairs, _) = enumerate_conjugacies(
        x,
        &t,
        SearchBudget {
            r_max: 1,
            len: 16,
            span: 4096,
        },
    )?;
    Ok(pairs.into_iter().find(|p| p.forward.reduce().radius() == 1))
}

/// Claims 1 and 2 at `p ∈ {8, 16, 32, 64}` for period doubling and a
/// σ-word, with the flip and a searched radius-1 conjugacy.
pub fn check_claims(seed: u64) -> Result<Check> {
    let mut c = Check::new(
        4,
        "claims-1-2",
        "pd depth 12 and a sigma word over [2..1024]; p in {8,16,32,64}; flip and searched radius-1 pair".into(),
    );
    let words = [
        ("pd", Skeleton::period_doubling(12)?),
        ("sigma", deep_sigma_word(seed)?),
    ];
    for (name, x) in &words {
        let flip = CodePair {
            forward: BlockCode::flip(),
            backward: BlockCode::flip(),
        };
        let Some(searched) = searched_radius_one(x)? else {
            c.fail(json!({ "word": name, "search": "no radius-1 conjugacy found" }));
            continue;
        };
        for (code_name, pair) in [("flip", flip), ("searched", searched)] {
            let mut prev = Ratio::new(0, 1);
            for p in [8usize, 16, 32, 64] {
                let rep = l1_certificate(x, &pair, p, None)?;
                let r = rep.r as u64;
                let bound = Ratio::new(1, 1) - Ratio::new(2 * r + 1, p as u64);
                let claim2_ok = rep
                    .claim2_x
                    .entries
                    .iter()
                    .all(|e| matches!(e, IndexStatus::Chained { .. } | IndexStatus::Hole));
                let ok = rep.claim1_x.failures() == 0
                    && rep.claim1_y.failures() == 0
                    && rep.claim1_x.conflicts.is_empty()
                    && claim2_ok
                    && rep.certified_fraction >= bound
                    && rep.certified_fraction >= prev;
                c.case(ok, || {
                    json!({
                        "word": name, "code": code_name, "p": p, "r": r,
                        "certified_fraction": rep.certified_fraction.to_string(),
                        "failures_x": rep.claim1_x.failures(), "failures_y": rep.claim1_y.failures(),
                        "claim2_ok": claim2_ok,
                    })
                });
                prev = rep.certified_fraction;
            }
        }
    }
    Ok(c)
}

pub const ORACLE_LEN: usize = 8;
pub const ORACLE_SPAN: i64 = 2048;

/// The exact-mode family: period doubling, its flip and a σ-word.
pub fn oracle_family(seed: u64) -> Result<(Vec<(String, SubshiftHandle)>, Vec<oracle::FiniteWord>)> {
    let pd = Skeleton::period_doubling(10)?;
    let chain = Arc::new(QuotientChain::cyclic(&DEEP_CHAIN[..8])?);
    let pd_lang = crate::codes::language(&pd, ORACLE_LEN, ORACLE_SPAN)?;
    let flip_lang = crate::codes::language(&BlockCode::flip().image(&pd)?, ORACLE_LEN, ORACLE_SPAN)?;
    for s in sub_seeds(seed, 6, 64) {
        let d = mu_sample(&chain, 8, s)?;
        let x = d.to_skeleton()?;
        let l = crate::codes::language(&x, ORACLE_LEN, ORACLE_SPAN)?;
        if !l.complete || l.words == pd_lang.words || l.words == flip_lang.words {
            continue;
        }
        let pd_word = oracle::period_doubling_prefix(2 * ORACLE_SPAN as usize);
        let handles = vec![
            ("pd".to_string(), SubshiftHandle::from_skeleton(pd.clone())),
            (
                "flip-pd".to_string(),
                SubshiftHandle::from_skeleton(BlockCode::flip().image(&pd)?),
            ),
            ("sigma".to_string(), SubshiftHandle::from_sigma(d.clone())),
        ];
        let words = vec![
            pd_word.clone(),
            pd_word.flip(),
            oracle::sigma_word(&d, -ORACLE_SPAN, ORACLE_SPAN),
        ];
        return Ok((handles, words));
    }
    Err(Error::DegenerateFamily(
        "no sampled sigma word differs from period doubling".into(),
    ))
}

/// Exact `B^p` and `λ^p` at `p ∈ {1, 2}` against the brute-force oracle;
/// every table's rows sum to exactly 1.
pub fn check_exact_oracle(seed: u64) -> Result<Check> {
    let mut c = Check::new(
        5,
        "exact-small-p",
        format!("family pd, flip-pd, sigma; p in {{1,2}}; L = {ORACLE_LEN}; span {ORACLE_SPAN}"),
    );
    let (members, words) = oracle_family(seed)?;
    let names: Vec<String> = members.iter().map(|m| m.0.clone()).collect();
    let family = WitnessFamily::new(members, ORACLE_LEN, ORACLE_SPAN)?;
    for p in [1usize, 2] {
        for s in 0..family.len() {
            let table = lambda_table(&family, s, p)?;
            let counts = oracle::b_counts(&words[s], &words, p, ORACLE_LEN);
            c.case(
                table.exact && table.closure_sum == Ratio::new(1, 1),
                || json!({ "p": p, "source": names[s], "exact": table.exact, "sum": table.closure_sum.to_string() }),
            );
            c.case(
                counts.class_sum() == Ratio::new(1, 1),
                || json!({ "p": p, "source": names[s], "oracle_sum": counts.class_sum().to_string() }),
            );
            c.case(table.denominator == counts.denominator, || {
                json!({ "p": p, "source": names[s], "denominator": table.denominator, "oracle": counts.denominator })
            });
            for t in 0..family.len() {
                let row = &table.rows[t];
                let ok = row.b.members == counts.b[t] && row.lambda == Some(counts.lambda(t));
                c.case(ok, || {
                    json!({
                        "p": p, "source": names[s], "target": names[t],
                        "b": row.b, "oracle_b": counts.b[t],
                    })
                });
            }
        }
    }
    Ok(c)
}

/// The arrows of the cocycle check: unit shifts, flips and searched
/// radius-1 conjugacies between period doubling, a σ-word and their flips.
pub fn cocycle_arrows(seed: u64) -> Result<Vec<(String, Arrow)>> {
    let mut out = Vec::new();
    let words = [
        ("pd", Skeleton::period_doubling(12)?),
        ("sigma", deep_sigma_word(seed)?),
    ];
    for (name, x) in words {
        let s = SubshiftHandle::from_skeleton(x.clone());
        let t = SubshiftHandle::from_skeleton(BlockCode::flip().image(&x)?);
        let flip = CodePair {
            forward: BlockCode::flip(),
            backward: BlockCode::flip(),
        };
        out.push((
            format!("{name}:flip"),
            Arrow::verify(s.clone(), t.clone(), flip, 16, 4096)?,
        ));
        if let Some(pair) = searched_radius_one(&x)? {
            out.push((
                format!("{name}:searched"),
                Arrow::verify(s.clone(), t.clone(), pair, 16, 4096)?,
            ));
        }
        for (h, hn) in [(&s, name.to_string()), (&t, format!("flip-{name}"))] {
            out.push((format!("{hn}:+1"), Arrow::unit_shift(h.clone(), true)));
            out.push((format!("{hn}:-1"), Arrow::unit_shift(h.clone(), false)));
            out.push((format!("{hn}:id"), Arrow::identity(h.clone())));
        }
    }
    Ok(out)
}

pub const COCYCLE_DEPTH: usize = 6;

/// `α₀(g ∘ f) = α₀(g) α₀(f)` on every composable pair of generated arrows,
/// and `α₀ = 1` on identities.
pub fn check_cocycle(seed: u64) -> Result<Check> {
    let mut c = Check::new(
        6,
        "cocycle-identity",
        format!("depth {COCYCLE_DEPTH}; shifts, flips, searched radius-1"),
    );
    let mut arrows = cocycle_arrows(seed)?;
    let inverses: Vec<(String, Arrow)> = arrows
        .iter()
        .filter(|(n, _)| n.ends_with(":flip") || n.ends_with(":searched"))
        .map(|(n, a)| (format!("{n}^-1"), a.inverse()))
        .collect();
    arrows.extend(inverses);
    let alphas = arrows
        .iter()
        .map(|(_, a)| cocycle_alpha0(a, COCYCLE_DEPTH))
        .collect::<Result<Vec<_>>>()?;
    for ((name, _), alpha) in arrows.iter().zip(&alphas) {
        if name.ends_with(":id") {
            c.case(
                alpha.is_identity(),
                || json!({ "arrow": name, "alpha0": alpha.residues }),
            );
        }
    }
    let mut pairs = 0;
    for (gi, (gn, g)) in arrows.iter().enumerate() {
        for (fi, (fname, f)) in arrows.iter().enumerate() {
            if f.target.skeleton()? != g.source.skeleton()? {
                continue;
            }
            let composed = g.compose(f)?;
            let lhs = cocycle_alpha0(&composed, COCYCLE_DEPTH)?;
            let rhs = alphas[gi].compose(&alphas[fi])?;
            pairs += 1;
            c.case(
                lhs == rhs,
                || json!({ "g": gn, "f": fname, "lhs": lhs.residues, "rhs": rhs.residues }),
            );
        }
    }
    if pairs < 10 {
        c.fail(json!({ "composable_pairs": pairs }));
    }
    Ok(c)
}

/// Member verdicts for flips and cyclic-shift images with round-tripping
/// permutations; distinct verdicts with certificates that re-read
/// correctly from the words.
pub fn check_e_p(_seed: u64) -> Result<Check> {
    let mut c = Check::new(
        7,
        "e-p-soundness",
        "pd depth 12 and shifted or flipped variants; span 4096".into(),
    );
    let x = Skeleton::period_doubling(12)?;
    let s = SubshiftHandle::from_skeleton(x.clone());
    let mut expect_member = vec![(
        "flip".to_string(),
        1usize,
        SubshiftHandle::from_skeleton(BlockCode::flip().image(&x)?),
    )];
    for p in [2usize, 4, 8, 16] {
        let t = cyclic_block_shift(p)?.image(&x, 0)?;
        expect_member.push((format!("cyc{p}"), p, SubshiftHandle::from_skeleton(t)));
    }
    let mut others = Vec::new();
    for p in [2usize, 4, 8] {
        others.push((format!("shift1@{p}"), p, SubshiftHandle::from_skeleton(x.shift(1))));
        others.push((
            format!("twohole@{p}"),
            p,
            SubshiftHandle::from_skeleton(Skeleton::two_hole_tower(8)?),
        ));
    }
    for (name, p, t) in expect_member.iter().chain(&others) {
        let v = e_p_test(&s, t, *p, 4096)?;
        let y = t.skeleton()?;
        match &v {
            EpVerdict::Member { perm, .. } => {
                let ok = perm_round_trip(perm, &x, y)?;
                c.case(ok, || json!({ "case": name, "p": p, "round_trip": false }));
            }
            EpVerdict::Distinct(cert) => {
                c.case(
                    conflict_is_concrete(&x, y, cert),
                    || json!({ "case": name, "certificate": cert }),
                );
            }
            EpVerdict::Inconclusive(_) => {}
        }
        if expect_member.iter().any(|(n, _, _)| n == name) {
            c.case(
                matches!(v, EpVerdict::Member { .. }),
                || json!({ "case": name, "verdict": v.label() }),
            );
        }
    }
    Ok(c)
}

/// A witness label for every test element at every level of the
/// five-level `F_2` tower, re-checked by direct conjugation.
pub fn check_chain_condition(_seed: u64) -> Result<Check> {
    let mut c = Check::new(8, "chain-condition", "F2 tower depth 5, 10 test elements".into());
    let chain = QuotientChain::f2_tower(5)?;
    c.case(chain.depth() == 5, || json!({ "depth": chain.depth() }));
    for g in f2_test_elements() {
        for m in 0..chain.depth() {
            let w = chain.verify_chain_condition(&g, m)?;
            let ok = w.is_some_and(|label| {
                let grp = chain.group(m + 1).expect("level");
                let gm = chain.project(&g, m + 1).expect("projection");
                chain.is_label(m + 1, label) && grp.mul(grp.mul(gm, label), grp.inv(gm)) != label
            });
            c.case(ok, || json!({ "g": g.to_string(), "level": m + 1, "witness": w }));
        }
    }
    Ok(c)
}

/// One CSV row of a certificate table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub p: usize,
    pub i: u64,
    pub status: String,
    pub pi_id: Option<usize>,
    pub gap: u64,
    pub epsilon: Option<String>,
    pub r: usize,
    pub depth: usize,
}

/// One CSV row of a λ table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaCsvRow {
    pub source: String,
    pub target: String,
    pub in_family: bool,
    pub p: usize,
    pub b_members: u64,
    pub b_inconclusive: u64,
    pub denominator: u64,
    pub lambda: Option<String>,
    #[serde(rename = "L")]
    pub len: usize,
    pub span: i64,
}

pub fn certificate_rows(x: &Skeleton, pair: &CodePair, p: usize) -> Result<Vec<CertificateRow>> {
    let rep = l1_certificate(x, pair, p, None)?;
    let depth = x.stages().len();
    Ok(rep
        .claim1_x
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| CertificateRow {
            p,
            i: i as u64,
            status: e.label().to_string(),
            pi_id: match e {
                IndexStatus::Claim1 { pi } => Some(*pi),
                _ => None,
            },
            gap: rep.min_gap,
            epsilon: rep.epsilon_bound.map(|r| r.to_string()),
            r: rep.r,
            depth,
        })
        .collect())
}

pub fn lambda_rows(family: &WitnessFamily, source: usize, p: usize) -> Result<Vec<LambdaCsvRow>> {
    let t = lambda_table(family, source, p)?;
    Ok(t.rows
        .iter()
        .map(|r| LambdaCsvRow {
            source: t.source.clone(),
            target: r.target.clone(),
            in_family: r.in_family,
            p,
            b_members: r.b.members,
            b_inconclusive: r.b.inconclusive,
            denominator: t.denominator,
            lambda: r.lambda.map(|l| l.to_string()),
            len: t.len,
            span: t.span,
        })
        .collect())
}

/// Every CSV table the suite can emit parses back to the same rows.
pub fn check_formats(seed: u64) -> Result<Check> {
    let mut c = Check::new(9, "csv-round-trip", "certificate and lambda tables".into());
    let x = Skeleton::period_doubling(12)?;
    let flip = CodePair {
        forward: BlockCode::flip(),
        backward: BlockCode::flip(),
    };
    for p in [8, 16] {
        let rows = certificate_rows(&x, &flip, p)?;
        let back: Vec<CertificateRow> = from_csv(&to_csv(&rows)?)?;
        c.case(back == rows, || json!({ "table": "certificate", "p": p }));
    }
    let (members, _) = oracle_family(seed)?;
    let family = WitnessFamily::new(members, ORACLE_LEN, ORACLE_SPAN)?;
    let rows = lambda_rows(&family, 0, 2)?;
    let back: Vec<LambdaCsvRow> = from_csv(&to_csv(&rows)?)?;
    c.case(back == rows, || json!({ "table": "lambda" }));
    Ok(c)
}

pub type CheckFn = fn(u64) -> Result<Check>;

pub const CHECKS: [CheckFn; 9] = [
    check_sigma_construction,
    check_equivariance_suite,
    check_injectivity,
    check_claims,
    check_exact_oracle,
    check_cocycle,
    check_e_p,
    check_chain_condition,
    check_formats,
];

pub fn run_suite(seed: u64, witness_files: &[&Path]) -> Result<SuiteReport> {
    let mut checks = CHECKS.iter().map(|f| f(seed)).collect::<Result<Vec<_>>>()?;
    for (k, path) in witness_files.iter().enumerate() {
        let mut c = check_witness_file(path)?;
        c.id += k as u32;
        checks.push(c);
    }
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(SuiteReport {
        seed,
        checks,
        all_passed,
    })
}
