//! `cscmine`: mine fixed-gap episode dictionaries from event logs, compress
//! losslessly with them, and generate conveyor traces to validate against.
//!
//! Exit codes: 0 success, 1 validation failure (bad flag combinations,
//! verification mismatches), 2 I/O trouble (unreadable, unparseable or
//! corrupt files).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cscmine_core::codec::{self, CodeTable, CodecError, EncodingStats, StartCoding};
use cscmine_core::io as seqio;
use cscmine_core::selector::{score, SelectError};
use cscmine_core::sim::{self, RateMode, Topology, TopologyError};
use cscmine_core::{
    select, Algorithm, EventSequence, MinerConfig, SelectedModel, SelectionConfig, Time,
};

#[derive(Parser)]
#[command(
    name = "cscmine",
    version,
    about = "Episode-dictionary mining and lossless event-log compression"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Mine a sequence and select the episode dictionary that encodes it best
    Select(SelectCmd),
    /// Encode a sequence into a dictionary-table file
    Encode(EncodeCmd),
    /// Decode an encoded table file back into the text sequence format
    Decode(DecodeCmd),
    /// Round-trip a sequence through the codec and fail on any mismatch
    Verify(VerifyCmd),
    /// Generate a conveyor-system event trace
    Simulate(SimulateCmd),
    /// Check a model's patterns against a topology's paths
    Evaluate(EvaluateCmd),
    /// Emit a per-sequence pattern-count matrix for a corpus
    Features(FeaturesCmd),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Csc1,
    Csc2,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RateModeArg {
    PerPath,
    TotalSplit,
}

/// Flags shared by every command that runs the selector.
#[derive(Args)]
struct SelectionFlags {
    /// Candidate generation strategy
    #[arg(long, value_enum, default_value_t = Algo::Csc2)]
    algo: Algo,
    /// Largest allowed inter-event gap
    #[arg(long, default_value_t = 5)]
    max_gap: Time,
    /// Minimum frequency as a fraction of the event count (csc1 only)
    #[arg(long)]
    freq_threshold: Option<f64>,
    /// Stop after admitting this many patterns
    #[arg(long)]
    max_patterns: Option<usize>,
}

impl SelectionFlags {
    fn to_config(&self) -> Result<SelectionConfig, Failure> {
        let (algorithm, threshold) = match (self.algo, self.freq_threshold) {
            (Algo::Csc2, Some(_)) => {
                return Err(Failure::Usage(
                    "csc2 picks its own candidates; --freq-threshold applies to csc1 only".into(),
                ))
            }
            (Algo::Csc2, None) => (Algorithm::Csc2, 0.0),
            (Algo::Csc1, Some(f)) => (Algorithm::Csc1, f),
            (Algo::Csc1, None) => {
                return Err(Failure::Usage(
                    "csc1 needs --freq-threshold (fraction of events, e.g. 0.05)".into(),
                ))
            }
        };
        let mut cfg = SelectionConfig::new(algorithm, MinerConfig::new(self.max_gap, threshold));
        cfg.max_patterns = self.max_patterns;
        cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(cfg)
    }

    fn echo(&self, input: &Path) -> String {
        format!(
            "input={} algo={} max_gap={} freq_threshold={} max_patterns={}",
            input.display(),
            match self.algo {
                Algo::Csc1 => "csc1",
                Algo::Csc2 => "csc2",
            },
            self.max_gap,
            self.freq_threshold
                .map_or_else(|| "-".to_string(), |f| f.to_string()),
            self.max_patterns
                .map_or_else(|| "unbounded".to_string(), |k| k.to_string()),
        )
    }
}

#[derive(Args)]
struct SelectCmd {
    /// Input sequence file (or corpus, with --corpus)
    input: PathBuf,
    #[command(flatten)]
    selection: SelectionFlags,
    /// Treat the input as a blank-line-separated corpus
    #[arg(long)]
    corpus: bool,
    /// Write the selected model (a dictionary-table file) here
    #[arg(long)]
    out_model: Option<PathBuf>,
    /// Write the model in the bit-stream format instead of the unit format
    #[arg(long)]
    bitwise: bool,
    /// Store occurrence starts verbatim instead of delta-coded
    #[arg(long)]
    raw_starts: bool,
    /// Write a machine-readable JSON run report here
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeCmd {
    /// Input sequence file
    input: PathBuf,
    /// Encode with this existing model instead of selecting one
    #[arg(long)]
    model: Option<PathBuf>,
    /// Output path for the encoded file
    #[arg(long)]
    out: PathBuf,
    /// Write the bit-stream format instead of the unit format
    #[arg(long)]
    bitwise: bool,
    /// Store occurrence starts verbatim instead of delta-coded
    #[arg(long)]
    raw_starts: bool,
    #[command(flatten)]
    selection: SelectionFlags,
}

#[derive(Args)]
struct DecodeCmd {
    /// Encoded table file (either format; detected by magic)
    encoded: PathBuf,
    /// Output sequence file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyCmd {
    /// Input sequence file
    input: PathBuf,
    /// Compare against this encoded file instead of round-tripping afresh
    #[arg(long)]
    encoded: Option<PathBuf>,
    /// Store occurrence starts verbatim instead of delta-coded
    #[arg(long)]
    raw_starts: bool,
    #[command(flatten)]
    selection: SelectionFlags,
}

#[derive(Args)]
struct SimulateCmd {
    /// Builtin topology name (2I-2O, 3I-3O, PackageSorter) or a topology file
    #[arg(long)]
    topology: String,
    /// Ticks of simulated time
    #[arg(long, default_value_t = 1000)]
    horizon: Time,
    /// Random seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the topology's arrival rate
    #[arg(long)]
    rate: Option<f64>,
    /// Whether the rate applies to each path or is split across them
    #[arg(long, value_enum, default_value_t = RateModeArg::PerPath)]
    rate_mode: RateModeArg,
    /// Output trace file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-package ground truth (`path birth` lines) here
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateCmd {
    /// Model (dictionary-table) file to judge
    #[arg(long)]
    model: PathBuf,
    /// Topology whose paths the patterns should follow
    #[arg(long)]
    topology: String,
}

#[derive(Args)]
struct FeaturesCmd {
    /// Corpus file
    input: PathBuf,
    /// Model whose patterns become feature columns
    #[arg(long)]
    model: PathBuf,
    /// Merge patterns that differ only in gaps and count them gap-free
    #[arg(long)]
    drop_gaps: bool,
    /// Output CSV file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Command failure carrying its exit code class.
enum Failure {
    /// Validation problems: exit 1.
    Usage(String),
    /// File-system or file-content problems: exit 2.
    Io(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Io(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Io(m) => m,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<seqio::IoError> for Failure {
    fn from(e: seqio::IoError) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<CodecError> for Failure {
    fn from(e: CodecError) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<SelectError> for Failure {
    fn from(e: SelectError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<TopologyError> for Failure {
    fn from(e: TopologyError) -> Self {
        match e {
            TopologyError::UnknownBuiltin(_) => Failure::Usage(e.to_string()),
            _ => Failure::Io(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_thread_pool();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}

/// Honors CSCMINE_THREADS for the size of the worker pool.
fn init_thread_pool() {
    if let Some(n) = std::env::var("CSCMINE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Select(c) => cmd_select(c),
        Cmd::Encode(c) => cmd_encode(c),
        Cmd::Decode(c) => cmd_decode(c),
        Cmd::Verify(c) => cmd_verify(c),
        Cmd::Simulate(c) => cmd_simulate(c),
        Cmd::Evaluate(c) => cmd_evaluate(c),
        Cmd::Features(c) => cmd_features(c),
    }
}

fn load_input(path: &Path, corpus: bool, max_gap: Time) -> Result<EventSequence, Failure> {
    if corpus {
        let corpus = seqio::read_corpus(path)?;
        Ok(seqio::concat_corpus(&corpus, max_gap))
    } else {
        Ok(seqio::read_sequence(path)?)
    }
}

fn coding_of(raw_starts: bool) -> StartCoding {
    if raw_starts {
        StartCoding::Raw
    } else {
        StartCoding::Delta
    }
}

fn write_table(
    path: &Path,
    table: &CodeTable,
    bitwise: bool,
    coding: StartCoding,
) -> Result<(), Failure> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    if bitwise {
        codec::write_bit_file(&mut w, table, coding)?;
    } else {
        codec::write_unit_file(&mut w, table)?;
    }
    w.flush()?;
    Ok(())
}

fn read_table(path: &Path) -> Result<CodeTable, Failure> {
    let bytes = fs::read(path)?;
    let mut slice = bytes.as_slice();
    if bytes.starts_with(b"CSEUNIT1") {
        Ok(codec::read_unit_file(&mut slice)?)
    } else {
        Ok(codec::read_bit_file(&mut slice)?.0)
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn print_patterns(model: &SelectedModel) {
    for list in model.episodes() {
        let k = list.episode().len();
        let f = list.frequency();
        println!(
            "pattern k={} f={} score={} {}",
            k,
            f,
            score(k, f),
            list.episode().label(model.alphabet())
        );
    }
}

fn print_stats(stats: &EncodingStats, n_patterns: usize, runtime_ms: u128) {
    println!("n_patterns={n_patterns}");
    println!("model_len={}", stats.model_len);
    println!("data_len={}", stats.data_len);
    println!("total={}", stats.total);
    println!("trivial_len={}", stats.trivial_len);
    println!("ratio={:.4}", stats.ratio);
    println!("bit_total={}", stats.bit_total);
    println!("bit_trivial={}", stats.bit_trivial);
    println!("bit_ratio={:.4}", stats.bit_ratio);
    println!("runtime_ms={runtime_ms}");
}

fn report_json(
    command: &str,
    echo: &str,
    model: &SelectedModel,
    stats: &EncodingStats,
    runtime_ms: u128,
) -> serde_json::Value {
    let patterns: Vec<serde_json::Value> = model
        .episodes()
        .iter()
        .map(|list| {
            serde_json::json!({
                "episode": list.episode().label(model.alphabet()),
                "length": list.episode().len(),
                "frequency": list.frequency(),
                "score": score(list.episode().len(), list.frequency()),
            })
        })
        .collect();
    serde_json::json!({
        "command": command,
        "config": echo,
        "patterns": patterns,
        "n_patterns": model.n_patterns(),
        "stats": {
            "model_len": stats.model_len,
            "data_len": stats.data_len,
            "total": stats.total,
            "trivial_len": stats.trivial_len,
            "ratio": stats.ratio,
            "bit_total": stats.bit_total,
            "bit_trivial": stats.bit_trivial,
            "bit_ratio": stats.bit_ratio,
        },
        "runtime_ms": runtime_ms,
    })
}

fn cmd_select(c: SelectCmd) -> Result<(), Failure> {
    let cfg = c.selection.to_config()?;
    let seq = load_input(&c.input, c.corpus, c.selection.max_gap)?;
    let coding = coding_of(c.raw_starts);
    let t0 = Instant::now();
    let model = select(&seq, &cfg)?;
    let table = codec::build_table(&model);
    let stats = codec::encoding_stats(&table, &seq, coding);
    let runtime_ms = t0.elapsed().as_millis();
    if let Some(out) = &c.out_model {
        write_table(out, &table, c.bitwise, coding)?;
    }
    let echo = c.selection.echo(&c.input);
    println!("{echo}");
    print_patterns(&model);
    print_stats(&stats, model.n_patterns(), runtime_ms);
    if let Some(path) = &c.report {
        let doc = report_json("select", &echo, &model, &stats, runtime_ms);
        fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    }
    Ok(())
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn cmd_encode(c: EncodeCmd) -> Result<(), Failure> {
    let seq = seqio::read_sequence(&c.input)?;
    let coding = coding_of(c.raw_starts);
    let t0 = Instant::now();
    let (table, n_patterns) = match &c.model {
        Some(path) => {
            let table = read_table(path)?;
            let decoded = codec::decode(&table)?;
            if decoded != seq {
                return Err(Failure::Usage(format!(
                    "model {} does not encode {} (decoding it yields a different sequence)",
                    path.display(),
                    c.input.display()
                )));
            }
            let n = table.rows.iter().filter(|r| r.episode.len() > 1).count();
            (table, n)
        }
        None => {
            let cfg = c.selection.to_config()?;
            let model = select(&seq, &cfg)?;
            let n = model.n_patterns();
            (codec::build_table(&model), n)
        }
    };
    let stats = codec::encoding_stats(&table, &seq, coding);
    let runtime_ms = t0.elapsed().as_millis();
    write_table(&c.out, &table, c.bitwise, coding)?;
    print_stats(&stats, n_patterns, runtime_ms);
    Ok(())
}

fn cmd_decode(c: DecodeCmd) -> Result<(), Failure> {
    let table = read_table(&c.encoded)?;
    let seq = codec::decode(&table)?;
    let mut w = open_out(c.out.as_deref())?;
    seqio::write_sequence(&mut w, &seq)?;
    w.flush()?;
    Ok(())
}

fn cmd_verify(c: VerifyCmd) -> Result<(), Failure> {
    let seq = seqio::read_sequence(&c.input)?;
    let coding = coding_of(c.raw_starts);
    if let Some(encoded) = &c.encoded {
        let decoded = codec::decode(&read_table(encoded)?)?;
        if decoded != seq {
            return Err(Failure::Usage(format!(
                "mismatch: decoding {} does not reproduce {}",
                encoded.display(),
                c.input.display()
            )));
        }
        println!("verify=ok source={}", encoded.display());
        return Ok(());
    }
    let cfg = c.selection.to_config()?;
    let model = select(&seq, &cfg)?;
    let table = codec::build_table(&model);

    // Unit-format round trip through real bytes.
    let mut unit_bytes = Vec::new();
    codec::write_unit_file(&mut unit_bytes, &table)?;
    let unit_back = codec::decode(&codec::read_unit_file(&mut unit_bytes.as_slice())?)?;
    if unit_back != seq {
        return Err(Failure::Usage(
            "mismatch in the unit-format round trip".into(),
        ));
    }

    // Bit-format round trip likewise.
    let mut bit_bytes = Vec::new();
    codec::write_bit_file(&mut bit_bytes, &table, coding)?;
    let (bit_table, _) = codec::read_bit_file(&mut bit_bytes.as_slice())?;
    if codec::decode(&bit_table)? != seq {
        return Err(Failure::Usage(
            "mismatch in the bit-format round trip".into(),
        ));
    }

    println!(
        "verify=ok formats=unit,bits n_patterns={}",
        model.n_patterns()
    );
    Ok(())
}

fn resolve_topology(arg: &str) -> Result<Topology, Failure> {
    match sim::builtin_topology(arg) {
        Ok(t) => Ok(t),
        Err(TopologyError::UnknownBuiltin(_)) if Path::new(arg).exists() => {
            let text = fs::read_to_string(arg)?;
            let name = Path::new(arg)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| arg.to_string());
            Ok(sim::parse_topology(&name, &text)?)
        }
        Err(e) => Err(Failure::Usage(format!(
            "{e}; pass a builtin name or a topology file path"
        ))),
    }
}

fn cmd_simulate(c: SimulateCmd) -> Result<(), Failure> {
    if c.horizon < 1 {
        return Err(Failure::Usage(format!(
            "--horizon must be at least 1, got {}",
            c.horizon
        )));
    }
    let mut topo = resolve_topology(&c.topology)?;
    if let Some(rate) = c.rate {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Failure::Usage(format!(
                "--rate must be finite and >= 0, got {rate}"
            )));
        }
        topo = topo.with_rate(rate);
    }
    topo = topo.with_rate_mode(match c.rate_mode {
        RateModeArg::PerPath => RateMode::PerPath,
        RateModeArg::TotalSplit => RateMode::TotalSplit,
    });
    let trace = sim::simulate(&topo, c.horizon, c.seed);
    let mut w = open_out(c.out.as_deref())?;
    seqio::write_sequence(&mut w, trace.sequence())?;
    w.flush()?;
    drop(w);
    if let Some(truth) = &c.truth {
        let mut w = BufWriter::new(fs::File::create(truth)?);
        for p in trace.packages() {
            writeln!(w, "{} {}", p.path, p.birth)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn cmd_evaluate(c: EvaluateCmd) -> Result<(), Failure> {
    let topo = resolve_topology(&c.topology)?;
    let table = read_table(&c.model)?;
    if let Some(bad) = table
        .alphabet
        .iter()
        .find(|name| !topo.units().iter().any(|u| u == *name))
    {
        return Err(Failure::Usage(format!(
            "alphabet mismatch: `{bad}` is not a unit of topology {}",
            topo.name()
        )));
    }
    let seq = codec::decode(&table)?;
    let stats = codec::encoding_stats(&table, &seq, StartCoding::Delta);
    let multi: Vec<_> = table.rows.iter().filter(|r| r.episode.len() > 1).collect();
    let mut matched = 0usize;
    let mut longest = 0usize;
    for row in &multi {
        if sim::subpath_match(&row.episode, &table.alphabet, &topo) {
            matched += 1;
            longest = longest.max(row.episode.len());
        }
    }
    let fraction = if multi.is_empty() {
        1.0
    } else {
        matched as f64 / multi.len() as f64
    };
    println!("topology={}", topo.name());
    println!("n_patterns={}", multi.len());
    println!("matched={matched}");
    println!("subpath_fraction={fraction:.4}");
    println!("longest_match={longest}");
    println!("total={}", stats.total);
    println!("trivial_len={}", stats.trivial_len);
    println!("ratio={:.4}", stats.ratio);
    println!("bit_total={}", stats.bit_total);
    println!("bit_trivial={}", stats.bit_trivial);
    println!("bit_ratio={:.4}", stats.bit_ratio);
    Ok(())
}

fn cmd_features(c: FeaturesCmd) -> Result<(), Failure> {
    let corpus = seqio::read_corpus(&c.input)?;
    let table = read_table(&c.model)?;
    let model = codec::table_to_model(&table)?;
    let matrix = seqio::export_features(&corpus, &model, c.drop_gaps);
    let mut w = open_out(c.out.as_deref())?;
    w.write_all(matrix.as_bytes())?;
    w.flush()?;
    Ok(())
}
