//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 data error (bad
//! envelope, malformed index, invalid UTF-8), 3 key error. Failures are
//! reported on stderr as one line of JSON: `{"error": CODE, "message": ..}`.
//!
//! The secret comes from `--secret` or, when the flag is absent, from the
//! `CHAOSKEY_SECRET` environment variable. It is never echoed.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::bench::{self, BenchConfig, BenchReport};
use crate::chaos::{self, ChaosParams};
use crate::cipher::{self, EncryptOptions, Mode};
use crate::cryptanalysis::{self, TrailParams};
use crate::error::Error;
use crate::index;
use crate::keyschedule;
use crate::kgm::{build_matrix, first_key, SecretKey, DEFAULT_SEED};

pub const SECRET_ENV: &str = "CHAOSKEY_SECRET";
pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (envelope format 1)");

#[derive(Debug, Parser)]
#[command(name = "chaoskey", version = VERSION, about = "Chaos-based key scheduling and XOR stream encryption")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Word-level LZ78 indexing of UTF-8 text.
    Index(IndexArgs),
    /// Derive the first key, a cycle's initial condition, or a keystream.
    Keygen(KeygenArgs),
    /// Encrypt a UTF-8 file into a CHK1 envelope.
    Encrypt(EncryptArgs),
    /// Decrypt a CHK1 envelope.
    Decrypt(DecryptArgs),
    /// Trail bounds, avalanche and monobit statistics.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Timing harness.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Debug, Args)]
struct SecretArg {
    /// Secret key (falls back to $CHAOSKEY_SECRET).
    #[arg(long)]
    secret: Option<String>,
}

#[derive(Debug, Args)]
struct IndexArgs {
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
    /// Emit the token stream as JSON lines.
    #[arg(long, conflicts_with = "decode")]
    tokens: bool,
    /// Invert a rendered text.
    #[arg(long)]
    decode: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Stage {
    First,
    X0,
    Full,
}

#[derive(Debug, Args)]
struct KeygenArgs {
    #[command(flatten)]
    secret: SecretArg,
    #[arg(long, value_enum, default_value = "full")]
    stage: Stage,
    #[arg(long, value_parser = parse_seed, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Keystream length in bytes (default: one pass over the first key).
    #[arg(long)]
    len: Option<usize>,
    #[arg(long, default_value_t = 0)]
    cycle: usize,
    #[arg(long)]
    hardened: bool,
    /// Print per-cycle k1/k2/k3/final bytes in binary.
    #[arg(long)]
    trace: bool,
    /// Print the matrix as JSON and exit.
    #[arg(long)]
    dump_matrix: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Literal,
    Hardened,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Literal => Mode::Literal,
            ModeArg::Hardened => Mode::Hardened,
        }
    }
}

#[derive(Debug, Args)]
struct EncryptArgs {
    #[command(flatten)]
    secret: SecretArg,
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
    #[arg(long = "out", value_name = "FILE")]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "literal")]
    mode: ModeArg,
    /// Skip word indexing before encryption.
    #[arg(long)]
    no_index: bool,
    #[arg(long, value_parser = parse_seed, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Debug, Args)]
struct DecryptArgs {
    #[command(flatten)]
    secret: SecretArg,
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
    #[arg(long = "out", value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum AnalyzeCommand {
    /// log2 of (per-box probability)^(active boxes).
    Bounds {
        #[arg(long)]
        active: u32,
        #[arg(long = "log2", allow_negative_numbers = true)]
        log2: f64,
        #[arg(long)]
        json: bool,
    },
    /// Mean fraction of keystream bits flipped by one-bit secret changes.
    Avalanche {
        #[command(flatten)]
        secret: SecretArg,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long)]
        hardened: bool,
        #[arg(long, value_parser = parse_seed, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        rng_seed: u64,
    },
    /// Fraction of one bits in a keystream.
    Monobit {
        #[command(flatten)]
        secret: SecretArg,
        #[arg(long, default_value_t = 10 * 1024)]
        len: usize,
        #[arg(long)]
        hardened: bool,
        #[arg(long, value_parser = parse_seed, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Comma-separated sizes.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
    #[arg(long)]
    parallel: bool,
    #[arg(long)]
    hardened: bool,
}

#[derive(Debug, Subcommand)]
enum BenchCommand {
    /// Encryption time against file size (sizes in KB).
    Keygen(BenchArgs),
    /// Per-cycle keystream time against first-key size (sizes in bytes).
    Cycle(BenchArgs),
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(io::Error),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Lib(e) if e.is_key_error() => 3,
            CliError::Lib(e) if e.is_data_error() => 2,
            CliError::Lib(_) => 1,
        }
    }

    fn to_json(&self) -> String {
        let (code, message) = match self {
            CliError::Usage(m) => ("Usage", m.clone()),
            CliError::Io(e) => ("Io", e.to_string()),
            CliError::Lib(e) => (e.code(), e.to_string()),
        };
        json!({ "error": code, "message": message }).to_string()
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn parse_seed(s: &str) -> Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(&hex.replace('_', ""), 16),
        None => s.replace('_', "").parse(),
    };
    parsed.map_err(|e| format!("invalid seed {s:?}: {e}"))
}

fn resolve_secret(arg: &SecretArg) -> CliResult<SecretKey> {
    let raw = match &arg.secret {
        Some(s) => s.clone(),
        None => std::env::var(SECRET_ENV).map_err(|_| {
            CliError::Usage(format!("no secret given: pass --secret or set {SECRET_ENV}"))
        })?,
    };
    Ok(SecretKey::new(raw)?)
}

fn read_input(path: Option<&Path>) -> CliResult<Vec<u8>> {
    match path {
        Some(p) => Ok(fs::read(p)?),
        None => {
            let mut buf = Vec::new();
            io::stdin().read_to_end(&mut buf)?;
            Ok(buf)
        }
    }
}

fn read_text(path: Option<&Path>) -> CliResult<String> {
    String::from_utf8(read_input(path)?).map_err(|_| CliError::Lib(Error::InvalidUtf8))
}

fn write_output(path: Option<&Path>, data: &[u8]) -> CliResult {
    match path {
        Some(p) => fs::write(p, data)?,
        None => {
            let mut out = io::stdout().lock();
            out.write_all(data)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn params_for(hardened: bool) -> ChaosParams {
    if hardened {
        ChaosParams::hardened()
    } else {
        ChaosParams::literal()
    }
}

fn cmd_index(args: &IndexArgs) -> CliResult {
    let text = read_text(args.input.as_deref())?;
    let out = if args.decode {
        index::decode(&text)?
    } else if args.tokens {
        let msg = index::index_encode(&text);
        let mut lines = String::new();
        for token in &msg.tokens {
            lines.push_str(&json!({ "ref": token.back_ref, "word": token.word }).to_string());
            lines.push('\n');
        }
        lines
    } else {
        index::render(&index::index_encode(&text))
    };
    write_output(None, out.as_bytes())
}

fn cmd_keygen(args: &KeygenArgs) -> CliResult {
    let matrix = build_matrix(args.seed);
    if args.dump_matrix {
        let dump = serde_json::to_string(&matrix.to_nested()).expect("matrix serializes");
        return write_output(None, format!("{dump}\n").as_bytes());
    }
    let secret = resolve_secret(&args.secret)?;
    let params = params_for(args.hardened);
    let k1 = first_key(&secret, &matrix);
    let mut out = String::new();

    match args.stage {
        Stage::First => {
            out.push_str(k1.as_str());
            out.push('\n');
        }
        Stage::X0 => {
            let state = chaos::initial_condition(&k1, args.cycle)?;
            let offset = if params.key_diffusion {
                chaos::key_offset(k1.bytes(), params.r)
            } else {
                0.0
            };
            let seed = chaos::cycle_seed(&state, &params, offset);
            let byte = chaos::quantize(seed.min(1.0 - f64::EPSILON))?;
            out.push_str(&format!("cycle = {}\n", state.cycle));
            out.push_str(&format!("x01 = {:.9e}\n", state.x01));
            out.push_str(&format!("x02 = {:.9}\n", state.x02));
            out.push_str(&format!("x0 = {:.9}\n", state.x0));
            if args.hardened {
                out.push_str(&format!("seed = {seed:.9}\n"));
            }
            out.push_str(&format!("byte = {byte} ({byte:08b})\n"));
        }
        Stage::Full => {
            if args.trace {
                for t in keyschedule::trace(&secret, &params, &matrix)? {
                    let kb = t.bytes;
                    out.push_str(&format!(
                        "cycle {:>3}: x0={:.6} q={:08b} k1={:08b} k2={:08b} k3={:08b} final={:08b}\n",
                        t.state.cycle, t.seed, t.x0_byte, kb.k1_byte, kb.k2_byte, kb.k3_byte, kb.final_byte
                    ));
                }
            }
            let len = args.len.unwrap_or(k1.len());
            let ks = keyschedule::keystream(&secret, len, &params, &matrix)?;
            for b in &ks.bytes {
                out.push_str(&format!("{b:02x}"));
            }
            out.push('\n');
        }
    }
    write_output(None, out.as_bytes())
}

fn cmd_encrypt(args: &EncryptArgs) -> CliResult {
    let secret = resolve_secret(&args.secret)?;
    let text = read_text(args.input.as_deref())?;
    let opts = EncryptOptions {
        mode: args.mode.into(),
        index: !args.no_index,
        kgm_seed: args.seed,
    };
    let env = cipher::encrypt(&text, &secret, &opts)?;
    write_output(args.output.as_deref(), &env.to_bytes())
}

fn cmd_decrypt(args: &DecryptArgs) -> CliResult {
    let secret = resolve_secret(&args.secret)?;
    let data = read_input(args.input.as_deref())?;
    let text = cipher::decrypt_bytes(&data, &secret)?;
    write_output(args.output.as_deref(), text.as_bytes())
}

fn cmd_analyze(cmd: &AnalyzeCommand) -> CliResult {
    let out = match cmd {
        AnalyzeCommand::Bounds { active, log2, json } => {
            let params = TrailParams::new(*active, *log2)?;
            let bound = cryptanalysis::trail_bound(&params)?;
            if *json {
                format!(
                    "{}\n",
                    json!({
                        "active": active,
                        "per_box_log2": log2,
                        "log2": bound.log2,
                        "exponent": bound.exponent,
                    })
                )
            } else {
                format!("log2 bound = {:.3}\n≈ 2^{}\n", bound.log2, bound.exponent)
            }
        }
        AnalyzeCommand::Avalanche {
            secret,
            trials,
            hardened,
            seed,
            rng_seed,
        } => {
            let secret = resolve_secret(secret)?;
            let params = params_for(*hardened);
            let report =
                cryptanalysis::avalanche(&secret, *trials, &params, &build_matrix(*seed), *rng_seed)?;
            let mut value = serde_json::to_value(&report).expect("report serializes");
            value["mode"] = json!(if *hardened { "hardened" } else { "literal" });
            format!("{value}\n")
        }
        AnalyzeCommand::Monobit {
            secret,
            len,
            hardened,
            seed,
        } => {
            let secret = resolve_secret(secret)?;
            let ks = keyschedule::keystream(&secret, *len, &params_for(*hardened), &build_matrix(*seed))?;
            let fraction = cryptanalysis::monobit(&ks.bytes)?;
            format!("{}\n", json!({ "bytes": len, "ones_fraction": fraction }))
        }
    };
    write_output(None, out.as_bytes())
}

fn cmd_bench(cmd: &BenchCommand) -> CliResult {
    let (args, report): (&BenchArgs, BenchReport) = match cmd {
        BenchCommand::Keygen(args) => {
            let config = BenchConfig {
                reps: args.reps,
                parallel: args.parallel,
                ..Default::default()
            };
            let sizes = args
                .sizes
                .clone()
                .unwrap_or_else(|| bench::DEFAULT_FILE_SIZES_KB.to_vec());
            let mode = if args.hardened { Mode::Hardened } else { Mode::Literal };
            // Timing does not depend on which secret is used; a fixed one
            // keeps the harness runnable without credentials.
            let secret = SecretKey::new("POLY12@+αμ")?;
            (args, bench::run_bench(&sizes, mode, &secret, &config)?)
        }
        BenchCommand::Cycle(args) => {
            let config = BenchConfig {
                reps: args.reps,
                parallel: args.parallel,
                ..Default::default()
            };
            let sizes = args
                .sizes
                .clone()
                .unwrap_or_else(|| bench::DEFAULT_KEY_SIZES.to_vec());
            (args, bench::cycle_time(&sizes, &params_for(args.hardened), &config)?)
        }
    };
    let json = report.to_json().to_string();
    if let Some(path) = &args.json {
        fs::write(path, &json)?;
    }
    write_output(None, format!("{json}\n").as_bytes())
}

fn dispatch(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Index(a) => cmd_index(a),
        Command::Keygen(a) => cmd_keygen(a),
        Command::Encrypt(a) => cmd_encrypt(a),
        Command::Decrypt(a) => cmd_decrypt(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn report(err: &CliError) -> i32 {
    eprintln!("{}", err.to_json());
    err.exit_code()
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let message = e.to_string().split_whitespace().collect::<Vec<_>>().join(" ");
            return report(&CliError::Usage(message));
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => report(&e),
    }
}
