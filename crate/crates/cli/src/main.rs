use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tzconj_core::Error;

mod commands;

#[derive(Parser, Debug)]
#[command(
    name = "tzconj",
    version,
    about = "Toeplitz subshifts: construction, analysis and conjugacy certificates"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads for parallel searches (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build or inspect quotient chains.
    #[command(subcommand)]
    Chain(ChainCmd),
    /// Per-level periodic structure of a word.
    Analyze(AnalyzeArgs),
    /// Conjugacy search, verification and groupoid data.
    #[command(subcommand)]
    Conj(ConjCmd),
    /// Amenability witnesses: lambda tables and index certificates.
    #[command(subcommand)]
    Witness(WitnessCmd),
    /// Run every fixed-seed check; exit 0 iff all pass.
    VerifySuite(SuiteArgs),
    /// Draw a seeded sigma datum over a chain.
    Sample(SampleArgs),
}

#[derive(Subcommand, Debug)]
pub enum ChainCmd {
    Make(ChainMakeArgs),
    Inspect(ChainInspectArgs),
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct ChainKind {
    /// Periods of a chain over Z, each dividing the next.
    #[arg(long, value_delimiter = ',')]
    cyclic: Option<Vec<u64>>,
    /// S3/S4 tower over F2 with this many levels.
    #[arg(long)]
    f2: Option<usize>,
    /// Z/2 <- S3 over F2 via the sign map.
    #[arg(long)]
    s3: bool,
    /// Dihedral pair D_m <- D_n, given as m,n.
    #[arg(long, value_delimiter = ',')]
    dihedral: Option<Vec<u16>>,
}

#[derive(Args, Debug)]
pub struct ChainMakeArgs {
    #[command(flatten)]
    kind: ChainKind,
}

#[derive(Args, Debug)]
pub struct ChainInspectArgs {
    /// Chain reference or file.
    chain: String,
    /// Group words to run the chain condition on, e.g. a,ab,aBAb.
    #[arg(long, value_delimiter = ',')]
    elements: Vec<String>,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct Budget {
    #[arg(long, default_value_t = 6)]
    depth: usize,
    #[arg(long, default_value_t = 4096)]
    span: i64,
    #[arg(long = "L", default_value_t = 16)]
    len: usize,
    #[arg(long, default_value_t = 1)]
    r_max: usize,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Word reference or file.
    word: String,
    /// Separation threshold for the last hole gap.
    #[arg(long, default_value_t = 1)]
    threshold: u64,
    /// Analyze only the first levels of the word.
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum ConjCmd {
    /// Bounded search for a conjugacy; writes an arrow file.
    Search(PairArgs),
    /// Re-verify an arrow file.
    Verify(ArrowArgs),
    /// The cocycle value of an arrow.
    Cocycle(ArrowArgs),
    /// Block-permutation relations E_p for each listed p.
    Ep(EpArgs),
    /// Self-conjugacies found within the budget, with cocycles.
    Centralizer(CentralizerArgs),
}

#[derive(Args, Debug)]
pub struct PairArgs {
    source: String,
    target: String,
    #[command(flatten)]
    budget: Budget,
}

#[derive(Args, Debug)]
pub struct ArrowArgs {
    arrow: PathBuf,
    /// Levels of the target chain for cocycle values.
    #[arg(long, default_value_t = 6)]
    depth: usize,
}

#[derive(Args, Debug)]
pub struct EpArgs {
    source: String,
    target: String,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    p: Vec<usize>,
    #[command(flatten)]
    budget: Budget,
}

#[derive(Args, Debug)]
pub struct CentralizerArgs {
    word: String,
    #[command(flatten)]
    budget: Budget,
}

#[derive(Subcommand, Debug)]
pub enum WitnessCmd {
    /// Exact lambda tables over a family (p <= 3).
    Lambda(LambdaArgs),
    /// Claims 1 and 2 certificates for an arrow at each p.
    Certify(CertifyArgs),
}

#[derive(Args, Debug)]
pub struct LambdaArgs {
    /// Family members (word references).
    family: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    p: Vec<usize>,
    /// Only rows for this source member.
    #[arg(long)]
    source: Option<String>,
    #[command(flatten)]
    budget: Budget,
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    #[arg(long)]
    arrow: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
    p: Vec<usize>,
    /// Requested epsilon as n/d.
    #[arg(long)]
    eps: Option<String>,
    /// One row per p instead of one per index.
    #[arg(long)]
    summary: bool,
}

#[derive(Args, Debug)]
pub struct SuiteArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Extra distinguishing-window files to verify.
    #[arg(long)]
    witness: Vec<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    /// Chain reference or file.
    #[arg(long)]
    chain: String,
    #[arg(long, default_value_t = 6)]
    depth: usize,
    #[arg(long)]
    seed: u64,
}

/// How a run ended, mapped to the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// A check or verification did not hold; the report is still printed.
    Verification(String),
    Usage(String),
    Budget(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::VerificationFailed(_) | Error::Conflict(_) | Error::NoAlignment(_) | Error::NoWitnessPossible(_) => {
                Failure::Verification(msg)
            }
            Error::DepthInsufficient(_) | Error::AmbiguousAlignment { .. } => Failure::Budget(msg),
            _ => Failure::Usage(msg),
        }
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Budget(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Verification(m) | Failure::Usage(m) | Failure::Budget(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if cli.workers > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let out = commands::Output::new(cli.format, cli.out.clone());
    let result = match cli.command {
        Command::Chain(c) => commands::chain(c, &out),
        Command::Analyze(a) => commands::analyze(a, &out),
        Command::Conj(c) => commands::conj(c, &out),
        Command::Witness(w) => commands::witness(w, &out),
        Command::VerifySuite(s) => commands::verify_suite(s, &out),
        Command::Sample(s) => commands::sample(s, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
