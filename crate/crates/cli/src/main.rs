use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qnormal_core::construction::{digit_at, Ladder, DEFAULT_SCAN_BOUND};
use qnormal_core::equidistribution::{dn_report, Depth};
use qnormal_core::numeric::{prefix_value, rational_string, to_base_b, DEFAULT_REFINEMENT_CAP};
use qnormal_core::sequence::diagnose_growth;
use qnormal_core::stats::normality_report;
use qnormal_core::transforms::{graph, Bound, BuildOptions, ModDiv, Schedule, Target, TargetKind, UdKind};
use qnormal_core::{BasicSequence, DigitBlock, DigitSource, Error, LogBase};
use serde::Serialize;
use sha2::{Digest, Sha256};

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "qnormal", version, about = "Digits and statistics of a computable Q-normal number")]
struct Cli {
    /// Write a JSON manifest (command line, settings, output digest) here.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    /// Upper limit for every threshold and schedule scan.
    #[arg(long, global = true, env = "QNORMAL_SCAN_BOUND", default_value_t = DEFAULT_SCAN_BOUND)]
    scan_bound: u64,

    /// Logarithm used by derived sequences and schedule clauses.
    #[arg(long, global = true, default_value = "natural")]
    log_base: LogBase,

    /// Show warnings and progress on stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Digits of x_Q.
    Digits {
        #[command(flatten)]
        seq: SeqArg,
        #[arg(long)]
        count: usize,
        #[arg(long, value_enum, default_value_t = Format::Raw)]
        format: Format,
        /// Re-derive the first K digits with the per-position oracle.
        #[arg(long, value_name = "K")]
        oracle_check: Option<u64>,
    },
    /// Digits of x_Q or of one of the transformed constructions.
    Construct {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        count: usize,
        #[arg(long, value_enum, default_value_t = Format::Raw)]
        format: Format,
        /// Save the construction graph as JSON.
        #[arg(long, value_name = "PATH")]
        emit_graph: Option<PathBuf>,
    },
    /// Observed and expected block counts at checkpoints.
    Stats {
        #[command(flatten)]
        source: SourceArgs,
        /// Digit source: `construct` or `file:PATH` (digits separated by
        /// whitespace or commas).
        #[arg(long, default_value = "construct")]
        digits: String,
        /// Blocks separated by `;` (e.g. `0;1;0,1`) or `all:k`.
        #[arg(long)]
        blocks: String,
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<u64>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Star and extreme discrepancy of the orbit (T_{Q,m}(x))_{m < N}.
    Discrepancy {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value = "construct")]
        digits: String,
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<u64>,
        /// `root` (floor(sqrt(r(m))) digits) or `fixed:d`.
        #[arg(long, default_value = "root")]
        depth: Depth,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Proven base-b digits of the constructed number.
    Value {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = 10)]
        base: u32,
        #[arg(long, default_value_t = 50)]
        digits: usize,
        /// Extra Cantor digits allowed per output digit.
        #[arg(long, default_value_t = DEFAULT_REFINEMENT_CAP)]
        cap: usize,
        /// Print the exact interval spanned by the first M Cantor digits
        /// instead.
        #[arg(long, value_name = "M")]
        exact: Option<usize>,
    },
    /// Heuristic trend of Q_n(B) / (n log q(n) / log n).
    Diagnose {
        #[command(flatten)]
        seq: SeqArg,
        #[arg(long)]
        block: DigitBlock,
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<u64>,
    },
    /// Thresholds n_r and region boundaries N_r.
    Ladder {
        #[command(flatten)]
        seq: SeqArg,
        #[arg(long, default_value_t = 6)]
        max_r: u64,
    },
    /// Levels L_n of the schedule over an unbounded sequence.
    Schedule {
        #[command(flatten)]
        seq: SeqArg,
        #[arg(long, default_value = "auto")]
        mod_div: ModDiv,
        #[arg(long, default_value_t = 4)]
        levels: u64,
    },
}

#[derive(Args, Debug)]
struct SeqArg {
    /// `constant:b`, `periodic:a,b,...`, `preset:log|iterated-log`,
    /// `table:a,b[;cycle]`, inline JSON, or `file:PATH`.
    #[arg(long = "seq")]
    spec: String,
}

#[derive(Args, Debug)]
struct SourceArgs {
    /// Basic sequence (same forms as `digits --seq`); optional with `--graph`.
    #[arg(long = "seq")]
    spec: Option<String>,
    #[arg(long, default_value = "xq")]
    target: TargetKind,
    #[arg(long, default_value = "vdc")]
    ud: UdKind,
    #[arg(long, default_value = "auto")]
    mod_div: ModDiv,
    /// Load a saved construction graph instead of building one.
    #[arg(long, value_name = "PATH", conflicts_with = "spec")]
    graph: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Raw,
    Csv,
    Json,
}

#[derive(Debug)]
enum CliError {
    Core(Error),
    Usage(String),
    Io(String),
    Mismatch(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Core(e) if e.is_budget_exhausted() => EXIT_BUDGET,
            Self::Core(_) | Self::Usage(_) => EXIT_USAGE,
            Self::Io(_) | Self::Mismatch(_) => EXIT_FAILURE,
        }
    }

    fn report(&self) -> String {
        match self {
            Self::Core(e) => format!("error[{}]: {e}", e.code()),
            Self::Usage(m) => format!("error[argument]: {m}"),
            Self::Io(m) => format!("error[io]: {m}"),
            Self::Mismatch(m) => format!("error[oracle-mismatch]: {m}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn read_file(path: &str) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}")))
}

fn parse_seq(spec: &str) -> CliResult<BasicSequence> {
    match spec.strip_prefix("file:") {
        Some(path) => Ok(BasicSequence::from_json(&read_file(path)?)?),
        None => Ok(spec.parse()?),
    }
}

fn resolve_target(src: &SourceArgs, log: LogBase) -> CliResult<Target> {
    if let Some(path) = &src.graph {
        return Ok(Target::from_json(&read_file(&path.to_string_lossy())?)?);
    }
    let spec = src.spec.as_deref().ok_or_else(|| CliError::Usage("either --seq or --graph is required".into()))?;
    let seq = parse_seq(spec)?;
    let opts = BuildOptions { log, ud: src.ud, mod_div: src.mod_div.clone() };
    Ok(graph(src.target, &seq, &opts)?)
}

fn read_digit_file(path: &str, basis: &BasicSequence) -> CliResult<Vec<u64>> {
    let text = read_file(path)?;
    let digits = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<u64>().map_err(|_| CliError::Usage(format!("{path}: bad digit '{t}'"))))
        .collect::<CliResult<Vec<_>>>()?;
    qnormal_core::digits::check_admissible(basis, &digits)?;
    Ok(digits)
}

/// Digits from the construction or a file, at least `needed` of them.
fn load_digits(target: &Target, source: &str, needed: usize, scan_bound: u64) -> CliResult<Vec<u64>> {
    if source == "construct" {
        return Ok(target.open_with(scan_bound)?.take_digits(needed)?);
    }
    let path = source
        .strip_prefix("file:")
        .ok_or_else(|| CliError::Usage(format!("bad digit source '{source}' (expected construct|file:PATH)")))?;
    let digits = read_digit_file(path, target.basis())?;
    if digits.len() < needed {
        return Err(Error::InsufficientDigits { needed: needed as u64, available: digits.len() as u64 }.into());
    }
    Ok(digits)
}

fn parse_blocks(spec: &str, basis: &BasicSequence) -> CliResult<Vec<DigitBlock>> {
    if let Some(k) = spec.strip_prefix("all:") {
        let k: usize = k.parse().map_err(|_| CliError::Usage(format!("bad block length '{k}'")))?;
        if k == 0 {
            return Err(CliError::Usage("block length must be >= 1".into()));
        }
        // digits below the largest base seen early on
        let radix = basis.running_max(1024)?;
        let count = (radix as f64).powi(k as i32);
        if count > 1e5 {
            return Err(CliError::Usage(format!("all:{k} would list {count:.0} blocks")));
        }
        return Ok(DigitBlock::all_of_length(k, radix));
    }
    spec.split(';').map(|b| Ok(b.trim().parse::<DigitBlock>()?)).collect()
}

fn require_checkpoints(checkpoints: &[u64]) -> CliResult<u64> {
    match checkpoints.last() {
        Some(&last) if checkpoints.iter().all(|&n| n >= 1) => Ok(last),
        _ => Err(CliError::Usage("--checkpoints needs at least one positive value".into())),
    }
}

fn render_digits(out: &mut String, basis: &BasicSequence, digits: &[u64], format: Format) {
    match format {
        Format::Raw => {
            let parts: Vec<_> = digits.iter().map(u64::to_string).collect();
            let _ = writeln!(out, "{}", parts.join(" "));
        }
        Format::Csv => {
            for (i, d) in digits.iter().enumerate() {
                let _ = writeln!(out, "{},{d}", i + 1);
            }
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                sequence: &'a BasicSequence,
                digits: &'a [u64],
            }
            let _ = writeln!(out, "{}", serde_json::to_string(&Doc { sequence: basis, digits }).expect("serializable"));
        }
    }
}

fn json_line<T: Serialize>(out: &mut String, value: &T) {
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn run(cli: &Cli, out: &mut String) -> CliResult<()> {
    match &cli.command {
        Command::Digits { seq, count, format, oracle_check } => {
            let basis = parse_seq(&seq.spec)?;
            let target = Target::Xq { seq: basis.clone() };
            let digits = target.open_with(cli.scan_bound)?.take_digits(*count)?;
            if let Some(k) = oracle_check {
                let ladder = Ladder::with_scan_bound(basis.clone(), cli.scan_bound);
                let k = (*k).min(*count as u64);
                for n in 1..=k {
                    let want = digit_at(&ladder, n)?;
                    if want != digits[(n - 1) as usize] {
                        return Err(CliError::Mismatch(format!(
                            "position {n}: stream {} oracle {want}",
                            digits[(n - 1) as usize]
                        )));
                    }
                }
                eprintln!("oracle check: {k} positions agree");
            }
            render_digits(out, &basis, &digits, *format);
        }
        Command::Construct { source, count, format, emit_graph } => {
            let target = resolve_target(source, cli.log_base)?;
            if let Some(path) = emit_graph {
                std::fs::write(path, target.to_json()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            }
            let digits = target.open_with(cli.scan_bound)?.take_digits(*count)?;
            render_digits(out, target.basis(), &digits, *format);
        }
        Command::Stats { source, digits, blocks, checkpoints, format } => {
            let target = resolve_target(source, cli.log_base)?;
            let blocks = parse_blocks(blocks, target.basis())?;
            let last = require_checkpoints(checkpoints)?;
            let k = blocks.iter().map(DigitBlock::len).max().unwrap_or(1);
            let data = load_digits(&target, digits, last as usize + k - 1, cli.scan_bound)?;
            let report = normality_report(target.basis(), &data, &blocks, checkpoints)?;
            match format {
                Format::Json => json_line(out, &report),
                _ => {
                    let _ = writeln!(out, "block,n,observed,expected_num,expected_den,ratio");
                    for b in &report.blocks {
                        let name: Vec<_> = b.block.digits().iter().map(u64::to_string).collect();
                        for row in &b.rows {
                            let ratio = row.ratio.map_or(String::new(), |r| format!("{r:.9}"));
                            let _ = writeln!(
                                out,
                                "{},{},{},{},{},{ratio}",
                                name.join(" "),
                                row.n,
                                row.observed,
                                row.expected.numer(),
                                row.expected.denom()
                            );
                        }
                    }
                }
            }
        }
        Command::Discrepancy { source, digits, checkpoints, depth, format } => {
            let target = resolve_target(source, cli.log_base)?;
            let last = require_checkpoints(checkpoints)?;
            let ladder = Ladder::with_scan_bound(target.basis().clone(), cli.scan_bound);
            let reach = match depth {
                Depth::Fixed(d) => u64::from(*d),
                Depth::Root => u64::from(qnormal_core::equidistribution::truncation_depth(&ladder, last, *depth)?),
            };
            let data = load_digits(&target, digits, (last + reach) as usize, cli.scan_bound)?;
            let report = dn_report(&ladder, &data, checkpoints, *depth)?;
            match format {
                Format::Json => json_line(out, &report),
                _ => {
                    let _ = writeln!(out, "n,d_star,d_extreme,max_eps");
                    for row in &report.rows {
                        let _ = writeln!(out, "{},{:.9},{:.9},{:.6e}", row.n, row.d_star, row.d_extreme, row.max_eps);
                    }
                }
            }
        }
        Command::Value { source, base, digits, cap, exact } => {
            let target = resolve_target(source, cli.log_base)?;
            let mut stream = target.open_with(cli.scan_bound)?;
            match exact {
                Some(m) => {
                    let prefix = stream.take_digits(*m)?;
                    let iv = prefix_value(target.basis(), &prefix)?;
                    let _ = writeln!(out, "lower {}", rational_string(&iv.lower));
                    let _ = writeln!(out, "upper {}", rational_string(&iv.upper));
                }
                None => {
                    let proven = to_base_b(&mut stream, *base, *digits, *cap)?;
                    let _ = writeln!(out, "0.{}", proven.render());
                    eprintln!("{} Cantor digits consumed", proven.consumed);
                }
            }
        }
        Command::Diagnose { seq, block, checkpoints } => {
            let basis = parse_seq(&seq.spec)?;
            require_checkpoints(checkpoints)?;
            json_line(out, &diagnose_growth(&basis, block, checkpoints)?);
        }
        Command::Ladder { seq, max_r } => {
            let ladder = Ladder::with_scan_bound(parse_seq(&seq.spec)?, cli.scan_bound);
            let _ = writeln!(out, "r,n_r,N_r");
            for r in 1..=*max_r {
                let _ = writeln!(out, "{r},{},{}", ladder.threshold(r)?, ladder.boundary(r)?);
            }
        }
        Command::Schedule { seq, mod_div, levels } => {
            let basis = parse_seq(&seq.spec)?;
            let mut schedule = Schedule::with_scan_bound(basis, mod_div.clone(), cli.log_base, cli.scan_bound)?;
            for n in 1..=*levels {
                if schedule.level(n)?.start == Bound::Beyond {
                    break;
                }
            }
            json_line(out, &schedule.levels());
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    args: Vec<String>,
    scan_bound: u64,
    log_base: LogBase,
    exit_code: u8,
    output_bytes: usize,
    output_sha256: String,
}

fn write_manifest(cli: &Cli, path: &PathBuf, output: &str, exit_code: u8) -> Result<(), String> {
    let manifest = Manifest {
        tool: "qnormal",
        version: env!("CARGO_PKG_VERSION"),
        args: std::env::args().collect(),
        scan_bound: cli.scan_bound,
        log_base: cli.log_base,
        exit_code,
        output_bytes: output.len(),
        output_sha256: hex::encode(Sha256::digest(output.as_bytes())),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("serializable");
    std::fs::write(path, text + "\n").map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "error",
        1 => "warn",
        2 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let mut out = String::new();
    let result = run(&cli, &mut out);
    let code = match &result {
        Ok(()) => 0,
        Err(e) => e.exit_code(),
    };
    if let Err(e) = std::io::stdout().write_all(out.as_bytes()) {
        eprintln!("error[io]: {e}");
        return ExitCode::from(EXIT_FAILURE);
    }
    if let Err(e) = &result {
        eprintln!("{}", e.report());
    }
    if let Some(path) = &cli.manifest {
        if let Err(e) = write_manifest(&cli, path, &out, code) {
            eprintln!("error[io]: {e}");
            return ExitCode::from(EXIT_FAILURE);
        }
    }
    ExitCode::from(code)
}
