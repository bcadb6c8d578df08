use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use super::{mean, median, MetricsError, SessionReport};
use crate::codec::{RrcCodec, StegoCodec, StopRule, VanillaCodec};
use crate::exact::BitString;
use crate::keystream::{OffsetStream, StegoKey, DEFAULT_RESOLUTION};
use crate::provider::{Context, DistributionProvider};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodecKind {
    Vanilla,
    Rrc { rule: StopRule, resolution: u32 },
}

impl CodecKind {
    pub fn rrc() -> Self {
        Self::Rrc {
            rule: StopRule::default(),
            resolution: DEFAULT_RESOLUTION,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Vanilla => "vanilla",
            Self::Rrc { .. } => "rrc",
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub codec: CodecKind,
    pub lengths: Vec<usize>,
    pub trials: usize,
    /// Seeds the messages and keys; equal seeds give equal sessions.
    pub seed: u64,
    pub prompt: Context,
}

/// One trial, as written to the per-trial log.
#[derive(Clone, Debug, Serialize)]
pub struct TrialRecord {
    pub bits: usize,
    pub trial: usize,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<SessionReport>,
}

/// Aggregate over the trials of one message length.
#[derive(Clone, Debug, Serialize)]
pub struct LengthSummary {
    pub codec: &'static str,
    pub bits: usize,
    pub trials: usize,
    /// Trials that errored or extracted a different message.
    pub failures: usize,
    pub mean_tokens: f64,
    pub mean_capacity: f64,
    pub median_capacity: f64,
    pub mean_entropy: f64,
    pub mean_utilization: f64,
    pub median_utilization: f64,
    /// Mean embed time per trial, in seconds.
    pub mean_runtime: f64,
    /// Embedded bits per second of embed time.
    pub speed: f64,
    /// Steps whose selection measure differed from the model.
    pub nonzero_kl_steps: usize,
}

/// Runs `trials` embed/extract round trips per length, one after another,
/// and calls `on_trial` with every result in trial order.
pub fn bench(
    provider: &dyn DistributionProvider,
    config: &BenchConfig,
    mut on_trial: impl FnMut(&TrialRecord),
) -> Result<Vec<LengthSummary>, MetricsError> {
    if config.trials == 0 {
        return Err(MetricsError::ZeroTrials);
    }
    if config.lengths.is_empty() {
        return Err(MetricsError::NoLengths);
    }
    if config.lengths.contains(&0) {
        return Err(MetricsError::ZeroLength);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut summaries = Vec::with_capacity(config.lengths.len());
    for &bits in &config.lengths {
        let mut reports = Vec::with_capacity(config.trials);
        let mut failures = 0;
        for trial in 0..config.trials {
            let record = run_trial(provider, config, bits, trial, &mut rng);
            on_trial(&record);
            match record.report {
                Some(report) if record.ok => reports.push(report),
                _ => failures += 1,
            }
        }
        summaries.push(summarize(config.codec, bits, config.trials, failures, &reports));
    }
    Ok(summaries)
}

fn run_trial(
    provider: &dyn DistributionProvider,
    config: &BenchConfig,
    bits: usize,
    trial: usize,
    rng: &mut ChaCha20Rng,
) -> TrialRecord {
    let mut bytes = vec![0u8; bits.div_ceil(8)];
    rng.fill_bytes(&mut bytes);
    let message = BitString::from_bytes(&bytes, bits).expect("enough bytes for the length");
    let codec: Box<dyn StegoCodec> = match config.codec {
        CodecKind::Vanilla => Box::new(VanillaCodec),
        CodecKind::Rrc { rule, resolution } => {
            let stream = OffsetStream::with_resolution(StegoKey::generate(rng), resolution)
                .expect("resolution validated by the caller");
            Box::new(RrcCodec::with_stream(stream).stop_rule(rule))
        }
    };
    let with_kl = matches!(config.codec, CodecKind::Rrc { .. });

    let started = Instant::now();
    let embedded = codec.embed(provider, &config.prompt, &message);
    let elapsed = started.elapsed().as_secs_f64();
    let failed = |error: String, report| TrialRecord {
        bits,
        trial,
        ok: false,
        error: Some(error),
        report,
    };
    let embedding = match embedded {
        Ok(e) => e,
        Err(e) => return failed(e.to_string(), None),
    };
    let report = SessionReport::new(&embedding, elapsed, with_kl);
    match codec.extract(provider, &config.prompt, bits, &embedding.tokens) {
        Ok(back) if back == message => TrialRecord {
            bits,
            trial,
            ok: true,
            error: None,
            report: Some(report),
        },
        Ok(_) => failed("extracted a different message".into(), Some(report)),
        Err(e) => failed(e.to_string(), Some(report)),
    }
}

fn summarize(
    codec: CodecKind,
    bits: usize,
    trials: usize,
    failures: usize,
    reports: &[SessionReport],
) -> LengthSummary {
    let collect = |f: fn(&SessionReport) -> f64| reports.iter().map(f).collect::<Vec<f64>>();
    let capacity = collect(|r| r.capacity);
    let utilization = collect(|r| r.utilization);
    let runtime = collect(|r| r.elapsed);
    let total_time: f64 = runtime.iter().sum();
    LengthSummary {
        codec: codec.name(),
        bits,
        trials,
        failures,
        mean_tokens: mean(&collect(|r| r.tokens_emitted as f64)),
        mean_capacity: mean(&capacity),
        median_capacity: median(&capacity),
        mean_entropy: mean(&collect(SessionReport::mean_entropy)),
        mean_utilization: mean(&utilization),
        median_utilization: median(&utilization),
        mean_runtime: mean(&runtime),
        speed: (bits * reports.len()) as f64 / total_time,
        nonzero_kl_steps: reports
            .iter()
            .flat_map(|r| &r.kl_per_step)
            .filter(|k| !k.is_zero())
            .count(),
    }
}
