use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;
use tzconj_core::chain::QuotientChain;
use tzconj_core::codes::{search_conjugacy, SearchBudget};
use tzconj_core::formats::{sigma_json, to_csv, to_json, ArrowFile, ChainFile, Resolver};
use tzconj_core::groupoid::{centralizer_search, cocycle_alpha0, e_p_test, in_kernel, EpVerdict};
use tzconj_core::sigma::mu_sample;
use tzconj_core::suite::{certificate_rows, lambda_rows, run_suite, CertificateRow};
use tzconj_core::witness::{l1_certificate, WitnessFamily};
use tzconj_core::{Cell, Error, GroupWord, Skeleton};

use crate::{
    AnalyzeArgs, Budget, CertifyArgs, ChainCmd, ConjCmd, EpArgs, Failure, Format, LambdaArgs, PairArgs, SampleArgs,
    SuiteArgs, WitnessCmd,
};

type Outcome = std::result::Result<(), Failure>;

/// Where and how reports are written.
pub struct Output {
    format: Format,
    path: Option<PathBuf>,
}

impl Output {
    pub fn new(format: Format, path: Option<PathBuf>) -> Self {
        Output { format, path }
    }

    fn write(&self, text: &str) -> Outcome {
        match &self.path {
            Some(p) => std::fs::write(p, text).map_err(|e| Failure::from(Error::from(e))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    /// Writes `report` in the requested format. `rows` is the CSV form and
    /// `text` the human form; either may be absent, in which case JSON is
    /// the fallback for text and CSV is refused.
    fn emit<T: Serialize>(&self, report: &T, rows: Option<String>, text: Option<String>) -> Outcome {
        let body = match self.format {
            Format::Json => to_json(report)?,
            Format::Csv => rows.ok_or_else(|| Failure::Usage("this report has no CSV form".into()))?,
            Format::Text => match text {
                Some(t) => t,
                None => to_json(report)?,
            },
        };
        self.write(&body)
    }
}

fn search_budget(b: &Budget) -> std::result::Result<SearchBudget, Failure> {
    if b.len == 0 || b.span <= 0 || b.depth == 0 {
        return Err(Failure::Usage("budgets must be positive".into()));
    }
    Ok(SearchBudget {
        r_max: b.r_max,
        len: b.len,
        span: b.span,
    })
}

pub fn chain(cmd: ChainCmd, out: &Output) -> Outcome {
    match cmd {
        ChainCmd::Make(a) => {
            let k = a.kind;
            let chain = if let Some(p) = k.cyclic {
                QuotientChain::cyclic(&p)?
            } else if let Some(d) = k.f2 {
                QuotientChain::f2_tower(d)?
            } else if k.s3 {
                QuotientChain::s3_over_sign()
            } else if let Some(mn) = k.dihedral {
                let [m, n] = mn[..] else {
                    return Err(Failure::Usage("--dihedral takes m,n".into()));
                };
                QuotientChain::dihedral_pair(m, n)?
            } else {
                return Err(Failure::Usage("no chain kind given".into()));
            };
            out.emit(&ChainFile::from_chain(&chain)?, None, None)
        }
        ChainCmd::Inspect(a) => inspect(&a.chain, &a.elements, out),
    }
}

#[derive(Serialize)]
struct LevelRow {
    level: usize,
    order: usize,
    labels: usize,
}

#[derive(Serialize)]
struct ConditionRow {
    element: String,
    level: usize,
    /// A label `C` of this level with `g C g^-1 != C`.
    witness: Option<u32>,
}

#[derive(Serialize)]
struct InspectReport {
    depth: usize,
    generators: usize,
    levels: Vec<LevelRow>,
    chain_condition: Vec<ConditionRow>,
}

fn inspect(chain_ref: &str, elements: &[String], out: &Output) -> Outcome {
    let chain = Resolver::default().chain(chain_ref)?;
    let levels = (1..=chain.depth())
        .map(|n| {
            Ok(LevelRow {
                level: n,
                order: chain.group(n)?.order(),
                labels: chain.level_labels(n)?.len(),
            })
        })
        .collect::<tzconj_core::Result<Vec<_>>>()?;
    let mut chain_condition = Vec::new();
    for e in elements {
        let g: GroupWord = e.parse()?;
        for m in 0..chain.depth() {
            chain_condition.push(ConditionRow {
                element: g.to_string(),
                level: m + 1,
                witness: chain.verify_chain_condition(&g, m)?,
            });
        }
    }
    let report = InspectReport {
        depth: chain.depth(),
        generators: chain.num_generators(),
        levels,
        chain_condition,
    };
    let mut text = String::from("level  |Q_n|  |A_n|\n");
    for r in &report.levels {
        let _ = writeln!(text, "{:>5}  {:>5}  {:>5}", r.level, r.order, r.labels);
    }
    for r in &report.chain_condition {
        let w = r.witness.map_or("none".to_string(), |c| c.to_string());
        let _ = writeln!(text, "{} at level {}: witness {w}", r.element, r.level);
    }
    out.emit(&report, Some(to_csv(&report.levels)?), Some(text))
}

#[derive(Serialize)]
struct AnalyzeRow {
    level: usize,
    p: u64,
    per: usize,
    holes: usize,
    min_gap: u64,
    density: String,
    /// `None` when the period is too large to test every shift.
    essential: Option<bool>,
    /// Some hole class is not yet certified as a hole at this depth.
    depth_insufficient: bool,
    separated_up_to_depth: bool,
    depth: usize,
}

/// Largest period for which all `p - 1` shifts are compared.
const ESSENTIAL_MAX: u64 = 4096;

/// A `p`-hole is certain once two refinements mod the last period carry
/// different bits; otherwise more depth could still make it periodic.
fn hole_undecided(x: &Skeleton, p: u64, hole: u64) -> bool {
    let cum = x.stage_cumulative(x.stages().len() - 1);
    let mut seen: Option<Cell> = None;
    for j in (hole as usize..cum.len()).step_by(p as usize) {
        let c = cum[j];
        if !c.is_known() {
            continue;
        }
        match seen {
            None => seen = Some(c),
            Some(s) if s != c => return false,
            _ => {}
        }
    }
    true
}

pub fn analyze(a: AnalyzeArgs, out: &Output) -> Outcome {
    let handle = Resolver::default().word(&a.word)?;
    let mut x = handle.skeleton()?.clone();
    if let Some(d) = a.depth {
        if d == 0 {
            return Err(Failure::Usage("depth must be positive".into()));
        }
        if d < x.stages().len() {
            x = x.truncate(d)?;
        }
    }
    let periods = x.periods();
    let profile = x.separated_holes_profile(&periods, a.threshold)?;
    let depth = periods.len();
    let mut rows = Vec::with_capacity(depth);
    for (n, r) in profile.rows.iter().enumerate() {
        let holes = x.holes(r.p)?;
        let essential = if r.p <= ESSENTIAL_MAX {
            Some(x.essential_period_check(r.p, 1..=r.p as i64 - 1)?)
        } else {
            None
        };
        rows.push(AnalyzeRow {
            level: n + 1,
            p: r.p,
            per: r.per,
            holes: r.holes,
            min_gap: r.min_gap,
            density: x.per_density(r.p)?.to_string(),
            essential,
            depth_insufficient: holes.iter().any(|&h| hole_undecided(&x, r.p, h)),
            separated_up_to_depth: profile.separated_up_to_depth,
            depth,
        });
    }
    let mut text = format!(
        "{}: separated up to depth {depth}: {}\n level      p    |Per|  |H|  min_gap  density\n",
        a.word, profile.separated_up_to_depth
    );
    for r in &rows {
        let _ = writeln!(
            text,
            "{:>6} {:>6} {:>8} {:>4} {:>8}  {}{}",
            r.level,
            r.p,
            r.per,
            r.holes,
            r.min_gap,
            r.density,
            if r.depth_insufficient {
                "  (depth-insufficient)"
            } else {
                ""
            }
        );
    }
    let report = json!({
        "word": a.word,
        "threshold": a.threshold,
        "separated_up_to_depth": profile.separated_up_to_depth,
        "rows": rows,
    });
    out.emit(&report, Some(to_csv(&rows)?), Some(text))
}

pub fn conj(cmd: ConjCmd, out: &Output) -> Outcome {
    match cmd {
        ConjCmd::Search(a) => search(a, out),
        ConjCmd::Verify(a) => {
            let (file, arrow) = Resolver::default().arrow(&a.arrow)?;
            let report = json!({
                "source": file.source,
                "target": file.target,
                "verified": true,
                "forward_radius": arrow.pair.forward.radius(),
                "backward_radius": arrow.pair.backward.radius(),
                "L": arrow.verified_at.0,
                "span": arrow.verified_at.1,
            });
            out.emit(&report, None, None)
        }
        ConjCmd::Cocycle(a) => {
            if a.depth == 0 {
                return Err(Failure::Usage("depth must be positive".into()));
            }
            let (file, arrow) = Resolver::default().arrow(&a.arrow)?;
            let alpha = cocycle_alpha0(&arrow, a.depth)?;
            let report = json!({
                "source": file.source,
                "target": file.target,
                "depth": a.depth,
                "alpha0": alpha,
                "kernel": in_kernel(&arrow, a.depth)?,
            });
            out.emit(&report, None, None)
        }
        ConjCmd::Ep(a) => ep(a, out),
        ConjCmd::Centralizer(a) => {
            let budget = search_budget(&a.budget)?;
            let s = Resolver::default().word(&a.word)?;
            let report = centralizer_search(&s, budget, a.budget.depth)?;
            out.emit(&report, None, None)
        }
    }
}

fn search(a: PairArgs, out: &Output) -> Outcome {
    let budget = search_budget(&a.budget)?;
    let r = Resolver::default();
    let (s, t) = (r.word(&a.source)?, r.word(&a.target)?);
    let report = search_conjugacy(s.skeleton()?, t.skeleton()?, budget)?;
    match &report.found {
        Some(pair) => out.emit(
            &ArrowFile::new(&a.source, &a.target, pair, budget.len, budget.span),
            None,
            None,
        ),
        None => {
            out.emit(&report, None, None)?;
            Err(Failure::Budget(
                report
                    .note
                    .clone()
                    .unwrap_or_else(|| "no conjugacy within budget".into()),
            ))
        }
    }
}

#[derive(Serialize)]
struct EpRow {
    p: usize,
    verdict: &'static str,
    /// Blocks whose images were observed, for members.
    observed: Option<usize>,
    detail: String,
    span: i64,
}

fn ep(a: EpArgs, out: &Output) -> Outcome {
    search_budget(&a.budget)?;
    let r = Resolver::default();
    let (s, t) = (r.word(&a.source)?, r.word(&a.target)?);
    let mut verdicts = Vec::with_capacity(a.p.len());
    let mut rows = Vec::with_capacity(a.p.len());
    for &p in &a.p {
        let v = e_p_test(&s, &t, p, a.budget.span)?;
        let (observed, detail) = match &v {
            EpVerdict::Member { perm, observed } => {
                (Some(*observed), serde_json::to_string(perm).map_err(Error::from)?)
            }
            EpVerdict::Distinct(cert) => (None, serde_json::to_string(cert).map_err(Error::from)?),
            EpVerdict::Inconclusive(why) => (None, why.clone()),
        };
        rows.push(EpRow {
            p,
            verdict: v.label(),
            observed,
            detail,
            span: a.budget.span,
        });
        verdicts.push(json!({ "p": p, "verdict": v }));
    }
    let report = json!({
        "source": a.source,
        "target": a.target,
        "span": a.budget.span,
        "results": verdicts,
    });
    out.emit(&report, Some(to_csv(&rows)?), None)
}

pub fn witness(cmd: WitnessCmd, out: &Output) -> Outcome {
    match cmd {
        WitnessCmd::Lambda(a) => lambda(a, out),
        WitnessCmd::Certify(a) => certify(a, out),
    }
}

fn lambda(a: LambdaArgs, out: &Output) -> Outcome {
    search_budget(&a.budget)?;
    let r = Resolver::default();
    let members = a
        .family
        .iter()
        .map(|name| Ok((name.clone(), r.word(name)?)))
        .collect::<tzconj_core::Result<Vec<_>>>()?;
    let family = WitnessFamily::new(members, a.budget.len, a.budget.span)?;
    let sources: Vec<usize> = match &a.source {
        Some(name) => vec![family
            .index_of(name)
            .ok_or_else(|| Failure::Usage(format!("{name} is not a family member")))?],
        None => (0..family.len()).collect(),
    };
    let mut rows = Vec::new();
    for &p in &a.p {
        for &s in &sources {
            rows.extend(lambda_rows(&family, s, p)?);
        }
    }
    out.emit(&rows, Some(to_csv(&rows)?), None)
}

#[derive(Serialize)]
struct SummaryRow {
    p: usize,
    r: usize,
    holes_x: usize,
    holes_y: usize,
    min_gap: u64,
    certified_x: usize,
    certified_y: usize,
    chained_x: usize,
    certified_fraction: String,
    epsilon_bound: Option<String>,
    count_bound_holds: bool,
    verdict: String,
    depth: usize,
    #[serde(rename = "L")]
    len: usize,
    span: i64,
}

fn parse_ratio(s: &str) -> std::result::Result<num_rational::Ratio<u64>, Failure> {
    s.parse()
        .map_err(|_| Failure::Usage(format!("bad ratio {s:?}; expected n/d")))
}

fn certify(a: CertifyArgs, out: &Output) -> Outcome {
    let (_, arrow) = Resolver::default().arrow(&a.arrow)?;
    let eps = a.eps.as_deref().map(parse_ratio).transpose()?;
    let x = arrow.source.skeleton()?;
    let (len, span) = arrow.verified_at;
    if a.summary {
        let mut rows = Vec::with_capacity(a.p.len());
        for &p in &a.p {
            let rep = l1_certificate(x, &arrow.pair, p, eps)?;
            let verdict = serde_json::to_value(rep.verdict).map_err(Error::from)?;
            rows.push(SummaryRow {
                p,
                r: rep.r,
                holes_x: rep.holes_x,
                holes_y: rep.holes_y,
                min_gap: rep.min_gap,
                certified_x: rep.certified_x,
                certified_y: rep.certified_y,
                chained_x: rep.chained_x,
                certified_fraction: rep.certified_fraction.to_string(),
                epsilon_bound: rep.epsilon_bound.map(|e| e.to_string()),
                count_bound_holds: rep.count_bound_holds,
                verdict: verdict.as_str().unwrap_or_default().to_string(),
                depth: x.stages().len(),
                len,
                span,
            });
        }
        return out.emit(&rows, Some(to_csv(&rows)?), None);
    }
    let mut rows: Vec<CertificateRow> = Vec::new();
    for &p in &a.p {
        rows.extend(certificate_rows(x, &arrow.pair, p)?);
    }
    out.emit(&rows, Some(to_csv(&rows)?), None)
}

pub fn verify_suite(a: SuiteArgs, out: &Output) -> Outcome {
    let files: Vec<&Path> = a.witness.iter().map(PathBuf::as_path).collect();
    let report = run_suite(a.seed, &files)?;
    let mut text = String::new();
    for c in &report.checks {
        let _ = writeln!(
            text,
            "{:>2} {:<24} {} ({} cases, {} failed)",
            c.id,
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.cases,
            c.failed
        );
    }
    let csv = {
        #[derive(Serialize)]
        struct Row<'a> {
            id: u32,
            name: &'a str,
            passed: bool,
            cases: usize,
            failed: usize,
            budget: &'a str,
        }
        let rows: Vec<Row> = report
            .checks
            .iter()
            .map(|c| Row {
                id: c.id,
                name: &c.name,
                passed: c.passed,
                cases: c.cases,
                failed: c.failed,
                budget: &c.budget,
            })
            .collect();
        to_csv(&rows)?
    };
    out.emit(&report, Some(csv), Some(text))?;
    if report.all_passed {
        Ok(())
    } else {
        let failed: Vec<String> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.clone())
            .collect();
        Err(Failure::Verification(format!("failed checks: {}", failed.join(", "))))
    }
}

pub fn sample(a: SampleArgs, out: &Output) -> Outcome {
    if a.depth == 0 {
        return Err(Failure::Usage("depth must be positive".into()));
    }
    let r = Resolver::default();
    let chain = Arc::new(r.chain(&a.chain)?);
    let d = mu_sample(&chain, a.depth, a.seed)?;
    // Chain files are inlined so the datum stays valid wherever it is written.
    let by_ref = !r.path(&a.chain).is_file();
    out.write(&sigma_json(&d, by_ref.then_some(a.chain.as_str()))?)
}
