use std::path::PathBuf;

use clap::{Args, ValueEnum};
use convbeam_core::metrics::{ci_sdr, sdr_capped, si_sdr_capped};
use convbeam_core::CiSdrConfig;
use log::warn;

use crate::error::{CliError, CliResult};
use crate::wav::read_wav;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Sdr,
    SiSdr,
    CiSdr,
}

impl Metric {
    pub fn column(self) -> &'static str {
        match self {
            Metric::Sdr => "sdr_db",
            Metric::SiSdr => "si_sdr_db",
            Metric::CiSdr => "ci_sdr_db",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Clean reference (channel 0 is used)
    #[arg(long)]
    pub reference: PathBuf,
    /// Estimates to score (channel 0 of each is used)
    #[arg(long, required = true, num_args = 1..)]
    pub estimate: Vec<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', default_values = ["sdr", "si-sdr", "ci-sdr"])]
    pub metrics: Vec<Metric>,
    /// CI-SDR compensation filter length in taps
    #[arg(long, default_value_t = 512)]
    pub ci_sdr_taps: usize,
}

pub fn format_db(v: f64) -> String {
    format!("{v:.2}")
}

/// Scores `estimate` against `reference`, one value per requested metric.
pub fn score(
    reference: &[f64],
    estimate: &[f64],
    metrics: &[Metric],
    cfg: &CiSdrConfig,
) -> CliResult<Vec<f64>> {
    metrics
        .iter()
        .map(|m| {
            Ok(match m {
                Metric::Sdr => sdr_capped(reference, estimate, cfg.cap_db)?,
                Metric::SiSdr => si_sdr_capped(reference, estimate, cfg.cap_db)?,
                Metric::CiSdr => ci_sdr(reference, estimate, cfg)?,
            })
        })
        .collect()
}

/// Returns the CSV text: header plus one line per estimate.
pub fn evaluate(args: &EvaluateArgs) -> CliResult<String> {
    let reference = read_wav(&args.reference)?;
    if reference.num_channels() > 1 {
        warn!("{}: using channel 0 of {}", args.reference.display(), reference.num_channels());
    }
    let cfg = CiSdrConfig { filter_len: args.ci_sdr_taps, ..CiSdrConfig::default() };
    let mut out = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["file"];
    header.extend(args.metrics.iter().map(|m| m.column()));
    out.write_record(&header).expect("in-memory write");
    for path in &args.estimate {
        let estimate = read_wav(path)?;
        if estimate.sample_rate() != reference.sample_rate() {
            return Err(CliError::Data(format!(
                "{}: sample rate {} differs from reference {}",
                path.display(),
                estimate.sample_rate(),
                reference.sample_rate()
            )));
        }
        if estimate.num_channels() > 1 {
            warn!("{}: using channel 0 of {}", path.display(), estimate.num_channels());
        }
        let len = reference.len().min(estimate.len());
        if reference.len() != estimate.len() {
            warn!(
                "{}: length {} differs from reference {}; truncating to {len}",
                path.display(),
                estimate.len(),
                reference.len()
            );
        }
        let r: Vec<f64> = reference.channel(0).iter().take(len).copied().collect();
        let e: Vec<f64> = estimate.channel(0).iter().take(len).copied().collect();
        let values = score(&r, &e, &args.metrics, &cfg).map_err(|err| err.context(path.display()))?;
        let mut row = vec![path.display().to_string()];
        row.extend(values.into_iter().map(format_db));
        out.write_record(&row).expect("in-memory write");
    }
    Ok(String::from_utf8(out.into_inner().expect("in-memory flush")).expect("utf-8 csv"))
}
