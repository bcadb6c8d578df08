mod config;

use std::fs;
use std::io::{self, BufReader, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::thread;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::rngs::OsRng;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use rrc_stego::codec::{CodecError, RrcCodec, StegoCodec, Stegotext, StopRule, VanillaCodec};
use rrc_stego::exact::{BitString, ExactError};
use rrc_stego::keystream::{KeyError, OffsetStream, StegoKey, DEFAULT_RESOLUTION};
use rrc_stego::metrics::{
    analyze_vanilla_distortion, bench, kl_divergence, BenchConfig, CodecKind, LengthSummary,
    SessionReport,
};
use rrc_stego::provider::protocol::serve;
use rrc_stego::provider::{
    Context, DistributionProvider, NgramModel, ProviderDescriptor, ProviderError, Unit,
};

use config::FileConfig;

/// Environment variable naming the default key file.
const KEY_FILE_ENV: &str = "RRC_STEGO_KEY_FILE";

#[derive(Parser)]
#[command(name = "rrc-stego", version, about = "Hide bit-strings in language-model token sequences")]
struct Cli {
    /// TOML file with defaults for the session flags; flags win.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hide a message and write the stegotext.
    Embed(EmbedArgs),
    /// Recover a message from a stegotext.
    Extract(ExtractArgs),
    /// Embed and extract seeded random messages and report the success rate.
    Roundtrip(RoundtripArgs),
    /// Measure capacity, utilization and speed across message lengths.
    Bench(BenchArgs),
    /// Exact first-step distortion of the plain range coder.
    AnalyzeDistortion(AnalyzeArgs),
    /// Train an n-gram model from a text corpus.
    TrainNgram(TrainArgs),
    /// Answer distribution requests over the line protocol.
    Serve(ServeArgs),
    /// Write a fresh random key as hex.
    Keygen(KeygenArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CodecName {
    Vanilla,
    Rrc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RuleName {
    Midpoint,
    Unambiguous,
}

#[derive(Args, Clone, Debug, Default)]
struct SessionArgs {
    /// `table:<path>`, `ngram:<path>` or `remote:tcp:<host:port>` / `remote:exec:<cmd>`.
    #[arg(long)]
    provider: Option<String>,
    #[arg(long, value_enum)]
    codec: Option<CodecName>,
    /// Key as hex.
    #[arg(long)]
    key: Option<String>,
    /// File holding the key as hex. Defaults to $RRC_STEGO_KEY_FILE.
    #[arg(long, value_name = "PATH")]
    key_file: Option<PathBuf>,
    /// Message length in bits, shared by sender and receiver.
    #[arg(long)]
    bits: Option<usize>,
    /// Prompt text, split by the provider's tokenizer.
    #[arg(long, conflicts_with = "prompt_ids")]
    prompt: Option<String>,
    /// Prompt as comma-separated token ids.
    #[arg(long, value_delimiter = ',')]
    prompt_ids: Option<Vec<u32>>,
    #[arg(long, value_enum)]
    stop_rule: Option<RuleName>,
    /// Offset resolution in bits.
    #[arg(long)]
    resolution: Option<u32>,
}

#[derive(Args)]
struct EmbedArgs {
    #[command(flatten)]
    session: SessionArgs,
    /// Message as hex; the first `bits` bits are used.
    #[arg(long, group = "message")]
    message_hex: Option<String>,
    /// Message as a string of 0s and 1s.
    #[arg(long, group = "message")]
    message_bits: Option<String>,
    /// Raw message bytes; the first `bits` bits are used.
    #[arg(long, group = "message", value_name = "PATH")]
    message_file: Option<PathBuf>,
    /// Random message drawn from `--seed`.
    #[arg(long, group = "message")]
    random: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Stegotext output; stdout if omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Session report (JSON).
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
    /// Surface text of the stegotext, for providers that can render it.
    #[arg(long, value_name = "PATH")]
    text_out: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    session: SessionArgs,
    /// Stegotext file.
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Write the recovered message as raw bytes.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Compare the recovered message against this hex value and report the result.
    #[arg(long, value_name = "HEX")]
    expect_hex: Option<String>,
}

#[derive(Args)]
struct RoundtripArgs {
    #[command(flatten)]
    session: SessionArgs,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    session: SessionArgs,
    /// Comma-separated message lengths.
    #[arg(long, value_delimiter = ',')]
    lengths: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Per-trial records (JSON lines).
    #[arg(long, value_name = "PATH")]
    log: Option<PathBuf>,
    /// Print an aligned table instead of JSON lines.
    #[arg(long)]
    table: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    session: SessionArgs,
    /// Print JSON lines instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_name = "PATH")]
    corpus: PathBuf,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    #[arg(long, default_value = "char")]
    unit: String,
    /// Number of context tokens.
    #[arg(long, default_value_t = 2)]
    order: usize,
    /// Add-k smoothing constant, as a decimal.
    #[arg(long, default_value = "0")]
    smoothing: String,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    provider: Option<String>,
    /// Address to listen on, e.g. 127.0.0.1:7070.
    #[arg(long, conflicts_with = "stdio")]
    listen: Option<String>,
    /// Speak the protocol over stdin/stdout.
    #[arg(long)]
    stdio: bool,
    /// Model name reported by health checks.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
struct KeygenArgs {
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    bytes: usize,
}

/// An error with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub const USAGE: u8 = 1;
    pub const CODEC: u8 = 2;
    pub const PROVIDER: u8 = 3;

    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: Self::USAGE,
            message: message.into(),
        }
    }
}

impl From<ProviderError> for Failure {
    fn from(e: ProviderError) -> Self {
        let code = match e {
            ProviderError::TokenNotInSupport { .. } => Self::CODEC,
            _ => Self::PROVIDER,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<CodecError> for Failure {
    fn from(e: CodecError) -> Self {
        match e {
            CodecError::Provider(p) => p.into(),
            CodecError::EmptyMessage => Self::usage(e.to_string()),
            other => Self {
                code: Self::CODEC,
                message: other.to_string(),
            },
        }
    }
}

impl From<KeyError> for Failure {
    fn from(e: KeyError) -> Self {
        Self::usage(e.to_string())
    }
}

fn io_failure(what: &str, path: &Path, e: io::Error) -> Failure {
    Failure::usage(format!("cannot {what} {}: {e}", path.display()))
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| io_failure("read", path, e))
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| io_failure("write", path, e))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(Failure::USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Embed(args) => embed(args, &file),
        Command::Extract(args) => extract(args, &file),
        Command::Roundtrip(args) => roundtrip(args, &file),
        Command::Bench(args) => run_bench(args, &file),
        Command::AnalyzeDistortion(args) => analyze(args, &file),
        Command::TrainNgram(args) => train(args),
        Command::Serve(args) => run_serve(args, &file),
        Command::Keygen(args) => keygen(args),
    }
}

/// Session flags merged over the config file.
struct Session {
    provider: Box<dyn DistributionProvider>,
    codec: CodecName,
    rule: StopRule,
    resolution: u32,
    key: Option<StegoKey>,
    bits: Option<usize>,
    prompt: Context,
}

impl Session {
    /// `keyed` is false for commands that draw their own keys from a seed.
    fn resolve(args: SessionArgs, file: &FileConfig, keyed: bool) -> Result<Self, Failure> {
        let descriptor = args
            .provider
            .or_else(|| file.provider.clone())
            .ok_or_else(|| Failure::usage("--provider is required"))?;
        let descriptor: ProviderDescriptor = descriptor.parse().map_err(|e: ProviderError| Failure::usage(e.to_string()))?;
        let codec = match (args.codec, &file.codec) {
            (Some(c), _) => c,
            (None, Some(name)) => CodecName::from_str(name, true)
                .map_err(|_| Failure::usage(format!("unknown codec {name:?} in config")))?,
            (None, None) => CodecName::Rrc,
        };
        let rule = match (args.stop_rule, &file.stop_rule) {
            (Some(r), _) => r,
            (None, Some(name)) => RuleName::from_str(name, true)
                .map_err(|_| Failure::usage(format!("unknown stop rule {name:?} in config")))?,
            (None, None) => RuleName::Unambiguous,
        };
        let rule = match rule {
            RuleName::Midpoint => StopRule::Midpoint,
            RuleName::Unambiguous => StopRule::Unambiguous,
        };
        let resolution = args.resolution.or(file.resolution).unwrap_or(DEFAULT_RESOLUTION);

        let explicit_key = args.key.is_some() || args.key_file.is_some();
        let key = match codec {
            CodecName::Vanilla if explicit_key => {
                return Err(Failure::usage("the vanilla codec takes no key"));
            }
            CodecName::Rrc if !keyed && explicit_key => {
                return Err(Failure::usage(
                    "this command draws a fresh key per trial from --seed; drop --key/--key-file",
                ));
            }
            CodecName::Rrc if keyed => Some(load_key(args.key, args.key_file, file)?),
            _ => None,
        };

        let provider = descriptor.open()?;
        let prompt = match (args.prompt, args.prompt_ids) {
            (Some(text), _) => tokenize_prompt(provider.as_ref(), &text)?,
            (None, Some(ids)) => ids,
            (None, None) => match (&file.prompt, &file.prompt_ids) {
                (Some(text), _) => tokenize_prompt(provider.as_ref(), text)?,
                (None, Some(ids)) => ids.clone(),
                (None, None) => Vec::new(),
            },
        };
        Ok(Self {
            provider,
            codec,
            rule,
            resolution,
            key,
            bits: args.bits.or(file.bits),
            prompt: Context::new(prompt),
        })
    }

    fn codec(&self) -> Result<Box<dyn StegoCodec>, Failure> {
        Ok(match self.codec {
            CodecName::Vanilla => Box::new(VanillaCodec),
            CodecName::Rrc => {
                let key = self.key.clone().expect("keyed rrc session");
                let stream = OffsetStream::with_resolution(key, self.resolution)?;
                Box::new(RrcCodec::with_stream(stream).stop_rule(self.rule))
            }
        })
    }

    fn kind(&self) -> CodecKind {
        match self.codec {
            CodecName::Vanilla => CodecKind::Vanilla,
            CodecName::Rrc => CodecKind::Rrc {
                rule: self.rule,
                resolution: self.resolution,
            },
        }
    }
}

fn load_key(
    hex_key: Option<String>,
    key_file: Option<PathBuf>,
    file: &FileConfig,
) -> Result<StegoKey, Failure> {
    if let Some(hex_key) = hex_key.or_else(|| file.key.clone()) {
        return Ok(hex_key.trim().parse()?);
    }
    let path = key_file
        .or_else(|| file.key_file.clone())
        .or_else(|| std::env::var_os(KEY_FILE_ENV).map(PathBuf::from))
        .ok_or_else(|| {
            Failure::usage(format!(
                "the rrc codec needs --key, --key-file or {KEY_FILE_ENV}"
            ))
        })?;
    Ok(read_file(&path)?.trim().parse()?)
}

fn tokenize_prompt(provider: &dyn DistributionProvider, text: &str) -> Result<Vec<u32>, Failure> {
    provider.tokenize(text)?.ok_or_else(|| {
        Failure::usage("this provider cannot tokenize text; pass --prompt-ids instead")
    })
}

fn seeded_message(bits: usize, seed: u64) -> BitString {
    let mut bytes = vec![0u8; bits.div_ceil(8)];
    ChaCha20Rng::seed_from_u64(seed).fill_bytes(&mut bytes);
    BitString::from_bytes(&bytes, bits).expect("enough bytes")
}

fn message_from_bytes(bytes: &[u8], bits: Option<usize>, source: &str) -> Result<BitString, Failure> {
    let bits = bits.unwrap_or(bytes.len() * 8);
    BitString::from_bytes(bytes, bits).map_err(|_| {
        Failure::usage(format!(
            "{source} holds {} bits, fewer than the {bits} requested",
            bytes.len() * 8
        ))
    })
}

fn read_message(args: &EmbedArgs, bits: Option<usize>, file: &FileConfig) -> Result<BitString, Failure> {
    if let Some(hex_text) = &args.message_hex {
        let bytes = hex::decode(hex_text.trim())
            .map_err(|e| Failure::usage(format!("invalid --message-hex: {e}")))?;
        return message_from_bytes(&bytes, bits, "--message-hex");
    }
    if let Some(text) = &args.message_bits {
        let msg: BitString = text
            .trim()
            .parse()
            .map_err(|e: ExactError| Failure::usage(e.to_string()))?;
        return match bits {
            Some(l) if l != msg.len() => Err(Failure::usage(format!(
                "--message-bits has {} bits but --bits is {l}",
                msg.len()
            ))),
            _ => Ok(msg),
        };
    }
    if let Some(path) = &args.message_file {
        let bytes = fs::read(path).map_err(|e| io_failure("read", path, e))?;
        return message_from_bytes(&bytes, bits, "message file");
    }
    if args.random {
        let seed = args
            .seed
            .or(file.seed)
            .ok_or_else(|| Failure::usage("--random needs an explicit --seed"))?;
        let bits = bits.ok_or_else(|| Failure::usage("--random needs --bits"))?;
        return Ok(seeded_message(bits, seed));
    }
    Err(Failure::usage(
        "give the message with --message-hex, --message-bits, --message-file or --random",
    ))
}

fn embed(args: EmbedArgs, file: &FileConfig) -> Result<(), Failure> {
    let session = Session::resolve(args.session.clone(), file, true)?;
    let message = read_message(&args, session.bits, file)?;
    let codec = session.codec()?;

    let started = Instant::now();
    let embedding = codec.embed(session.provider.as_ref(), &session.prompt, &message)?;
    let elapsed = started.elapsed().as_secs_f64();

    let stegotext = Stegotext::new(embedding.tokens.clone()).to_string();
    match &args.out {
        Some(path) => write_file(path, &stegotext)?,
        None => print!("{stegotext}"),
    }
    let report = SessionReport::new(&embedding, elapsed, session.codec == CodecName::Rrc);
    if let Some(path) = &args.report {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        write_file(path, json + "\n")?;
    }
    if let Some(path) = &args.text_out {
        let text = session
            .provider
            .detokenize(&embedding.tokens)?
            .ok_or_else(|| Failure::usage("this provider cannot render text"))?;
        write_file(path, text)?;
    }
    eprintln!(
        "embedded {} bits in {} tokens ({:.3} bits/token, utilization {:.2}%)",
        report.message_bits, report.tokens_emitted, report.capacity, report.utilization
    );
    Ok(())
}

fn extract(args: ExtractArgs, file: &FileConfig) -> Result<(), Failure> {
    let session = Session::resolve(args.session, file, true)?;
    let bits = session
        .bits
        .ok_or_else(|| Failure::usage("--bits is required to extract"))?;
    let stegotext: Stegotext = read_file(&args.input)?.parse()?;
    let codec = session.codec()?;
    let message = codec.extract(session.provider.as_ref(), &session.prompt, bits, &stegotext.tokens)?;
    let bytes = message.to_bytes();
    if let Some(path) = &args.out {
        write_file(path, &bytes)?;
    }
    println!("{}", hex::encode(&bytes));
    if let Some(expected) = &args.expect_hex {
        let expected = hex::decode(expected.trim())
            .map_err(|e| Failure::usage(format!("invalid --expect-hex: {e}")))?;
        let expected = message_from_bytes(&expected, Some(bits), "--expect-hex")?;
        let verified = expected == message;
        eprintln!("verification: {}", if verified { "ok" } else { "failed" });
    }
    Ok(())
}

fn roundtrip(args: RoundtripArgs, file: &FileConfig) -> Result<(), Failure> {
    let seed = args
        .seed
        .or(file.seed)
        .ok_or_else(|| Failure::usage("roundtrip draws random messages and needs --seed"))?;
    let session = Session::resolve(args.session, file, false)?;
    let bits = session.bits.ok_or_else(|| Failure::usage("--bits is required"))?;
    let config = BenchConfig {
        codec: session.kind(),
        lengths: vec![bits],
        trials: args.trials.or(file.trials).unwrap_or(100),
        seed,
        prompt: session.prompt.clone(),
    };
    let mut first_error = None;
    let summary = bench(session.provider.as_ref(), &config, |t| {
        if first_error.is_none() {
            first_error = t.error.clone();
        }
    })
    .map_err(|e| Failure::usage(e.to_string()))?
    .remove(0);
    print_json(&summary);
    let ok = summary.trials - summary.failures;
    eprintln!(
        "{ok}/{} round trips recovered ({:.2}%)",
        summary.trials,
        100.0 * ok as f64 / summary.trials as f64
    );
    match first_error {
        Some(e) => Err(Failure {
            code: Failure::CODEC,
            message: format!("{} trials failed; first: {e}", summary.failures),
        }),
        None => Ok(()),
    }
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string(value).expect("records serialize"));
}

fn run_bench(args: BenchArgs, file: &FileConfig) -> Result<(), Failure> {
    let session = Session::resolve(args.session, file, false)?;
    let config = BenchConfig {
        codec: session.kind(),
        lengths: args
            .lengths
            .or_else(|| file.lengths.clone())
            .unwrap_or_else(|| (5..=13).map(|e| 1usize << e).collect()),
        trials: args.trials.or(file.trials).unwrap_or(10),
        seed: args.seed.or(file.seed).unwrap_or(0),
        prompt: session.prompt.clone(),
    };
    let mut log = match &args.log {
        Some(path) => Some(io::BufWriter::new(
            fs::File::create(path).map_err(|e| io_failure("create", path, e))?,
        )),
        None => None,
    };
    let mut log_error = None;
    let summaries = bench(session.provider.as_ref(), &config, |trial| {
        if let Some(w) = log.as_mut() {
            let line = serde_json::to_string(trial).expect("records serialize");
            if let Err(e) = writeln!(w, "{line}") {
                log_error.get_or_insert(e);
            }
        }
    })
    .map_err(|e| Failure::usage(e.to_string()))?;
    if let Some(e) = log_error {
        return Err(Failure::usage(format!("cannot write trial log: {e}")));
    }
    if let Some(mut w) = log {
        w.flush().map_err(|e| Failure::usage(format!("cannot write trial log: {e}")))?;
    }
    if args.table {
        print_table(&summaries);
    } else {
        summaries.iter().for_each(print_json);
    }
    Ok(())
}

fn print_table(rows: &[LengthSummary]) {
    println!(
        "{:>7} {:>7} {:>8} {:>9} {:>11} {:>12} {:>11} {:>12}",
        "bits", "trials", "failures", "tokens", "bits/token", "utilization", "runtime s", "speed bit/s"
    );
    for r in rows {
        println!(
            "{:>7} {:>7} {:>8} {:>9.2} {:>11.3} {:>11.2}% {:>11.5} {:>12.1}",
            r.bits, r.trials, r.failures, r.mean_tokens, r.mean_capacity, r.mean_utilization,
            r.mean_runtime, r.speed
        );
    }
}

fn analyze(args: AnalyzeArgs, file: &FileConfig) -> Result<(), Failure> {
    let mut session_args = args.session;
    // distortion concerns the plain coder, which takes no key
    session_args.codec = Some(CodecName::Vanilla);
    let session = Session::resolve(session_args, file, false)?;
    let bits = session.bits.unwrap_or(16);
    let step = session.provider.next_distribution(&session.prompt)?;
    let rows = analyze_vanilla_distortion(&step, bits);
    let model: Vec<_> = rows.iter().map(|r| r.model.clone()).collect();
    let induced: Vec<_> = rows.iter().map(|r| r.induced.clone()).collect();
    let kl = kl_divergence(&model, &induced);
    if args.json {
        rows.iter().for_each(print_json);
        println!("{{\"kl\":{}}}", serde_json::to_string(&kl).expect("kl serializes"));
    } else {
        println!("{:>8} {:>24} {:>24} {:>24}", "token", "model", "induced", "diff");
        for r in &rows {
            println!(
                "{:>8} {:>24} {:>24} {:>24}",
                r.token,
                r.model.to_string(),
                r.induced.to_string(),
                r.diff.to_string()
            );
        }
        println!("KL(model || induced) = {kl} bits over 2^{bits} messages");
    }
    Ok(())
}

fn train(args: TrainArgs) -> Result<(), Failure> {
    let unit: Unit = args
        .unit
        .parse()
        .map_err(|e: String| Failure::usage(e))?;
    let descriptor = NgramModel::train_file(&args.corpus, &args.out, unit, args.order, &args.smoothing)
        .map_err(|e| match e {
            ProviderError::Io(io) => io_failure("read or write", &args.corpus, io),
            ProviderError::Distribution(_) => Failure::usage(format!("invalid smoothing: {e}")),
            other => Failure::usage(other.to_string()),
        })?;
    println!("{descriptor}");
    Ok(())
}

fn run_serve(args: ServeArgs, file: &FileConfig) -> Result<(), Failure> {
    let descriptor = args
        .provider
        .or_else(|| file.provider.clone())
        .ok_or_else(|| Failure::usage("--provider is required"))?;
    let name = args.name.unwrap_or_else(|| descriptor.clone());
    let descriptor: ProviderDescriptor = descriptor
        .parse()
        .map_err(|e: ProviderError| Failure::usage(e.to_string()))?;
    let provider: Arc<dyn DistributionProvider> = Arc::from(descriptor.open()?);

    if args.stdio {
        let stdin = io::stdin();
        return Ok(serve(provider.as_ref(), &name, stdin.lock(), io::stdout().lock())?);
    }
    let addr = args
        .listen
        .ok_or_else(|| Failure::usage("give --listen <addr> or --stdio"))?;
    let listener = TcpListener::bind(&addr)
        .map_err(|e| Failure::usage(format!("cannot listen on {addr}: {e}")))?;
    let local = listener.local_addr().map_err(|e| Failure::usage(e.to_string()))?;
    eprintln!("listening on {local}");
    for stream in listener.incoming() {
        let Ok(stream) = stream else { continue };
        let provider = provider.clone();
        let name = name.clone();
        thread::spawn(move || {
            let Ok(reader) = stream.try_clone() else { return };
            if let Err(e) = serve(provider.as_ref(), &name, BufReader::new(reader), stream) {
                eprintln!("connection closed: {e}");
            }
        });
    }
    Ok(())
}

fn keygen(args: KeygenArgs) -> Result<(), Failure> {
    let mut bytes = vec![0u8; args.bytes];
    OsRng.fill_bytes(&mut bytes);
    let key = StegoKey::new(bytes)?;
    match &args.out {
        Some(path) => write_file(path, key.to_hex() + "\n"),
        None => {
            println!("{}", key.to_hex());
            Ok(())
        }
    }
}
