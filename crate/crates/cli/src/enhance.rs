use std::path::PathBuf;

use clap::{Args, ValueEnum};
use convbeam_core::beamform::DIAGONAL_LOADING;
use convbeam_core::masks::read_mask;
use convbeam_core::{
    enhance, BeamformerKind, EnhanceConfig, LambdaMode, MaskSource, MultichannelWaveform, StftConfig,
    TapConfig, TimeFreqMask,
};

use crate::error::{CliError, CliResult};
use crate::wav::{read_wav, write_wav};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MaskMode {
    OracleIrm,
    OracleIbm,
    File,
}

#[derive(Debug, Clone, Args)]
pub struct EnhanceArgs {
    /// Multichannel input WAV
    #[arg(long)]
    pub input: PathBuf,
    /// One-channel output WAV (32-bit float)
    #[arg(long)]
    pub output: PathBuf,
    /// wpd, wpd-rtf, mpdr, mvdr or passthrough
    #[arg(long, default_value = "wpd", value_parser = parse_beamformer)]
    pub beamformer: BeamformerKind,
    /// Prediction delay in frames
    #[arg(long, default_value_t = 3)]
    pub delay: usize,
    /// Number of delayed taps; defaults to 5 for up to two channels, 3 otherwise
    #[arg(long)]
    pub taps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub reference: usize,
    #[arg(long, value_enum, default_value = "oracle-irm")]
    pub mask: MaskMode,
    /// Speech mask file for `--mask file`
    #[arg(long)]
    pub mask_file: Option<PathBuf>,
    /// Noise mask file for MVDR; defaults to the complement of the speech mask
    #[arg(long)]
    pub noise_mask_file: Option<PathBuf>,
    /// Clean source image (multichannel), required for oracle masks
    #[arg(long)]
    pub clean: Option<PathBuf>,
    /// Interference components; summed when repeated. Defaults to input minus clean
    #[arg(long)]
    pub noise: Vec<PathBuf>,
    /// Local-SNR threshold for the binary mask
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub ibm_threshold: f64,
    /// Weight the WPD covariance with a constant instead of the masked power
    #[arg(long)]
    pub constant_lambda: bool,
    #[arg(long, default_value_t = 400)]
    pub stft_window: usize,
    #[arg(long, default_value_t = 128)]
    pub stft_hop: usize,
    #[arg(long, default_value_t = 512)]
    pub stft_fft: usize,
}

fn parse_beamformer(s: &str) -> Result<BeamformerKind, String> {
    s.parse().map_err(|e: convbeam_core::Error| e.to_string())
}

fn check_same_layout(what: &str, wave: &MultichannelWaveform, input: &MultichannelWaveform) -> CliResult<()> {
    if wave.sample_rate() != input.sample_rate() {
        return Err(CliError::Data(format!(
            "{what} sample rate {} differs from input {}",
            wave.sample_rate(),
            input.sample_rate()
        )));
    }
    if wave.num_channels() != input.num_channels() || wave.len() != input.len() {
        return Err(CliError::Data(format!(
            "{what} is {}x{}, input is {}x{}",
            wave.num_channels(),
            wave.len(),
            input.num_channels(),
            input.len()
        )));
    }
    Ok(())
}

fn load_mask(path: &PathBuf) -> CliResult<TimeFreqMask> {
    read_mask(path).map_err(|e| CliError::from(e).context(path.display()))
}

pub fn enhance_config(args: &EnhanceArgs, channels: usize) -> CliResult<EnhanceConfig> {
    let taps = args.taps.unwrap_or_else(|| TapConfig::for_channels(channels).taps);
    let mut cfg = EnhanceConfig::new(args.beamformer, TapConfig::new(args.delay, taps)?);
    cfg.stft = StftConfig::new(args.stft_window, args.stft_hop, args.stft_fft)?;
    cfg.reference = args.reference;
    cfg.lambda = if args.constant_lambda { LambdaMode::Constant } else { LambdaMode::Masked };
    Ok(cfg)
}

/// Runs the enhancement and returns the one-channel output without writing it.
pub fn enhance_input(args: &EnhanceArgs) -> CliResult<MultichannelWaveform> {
    let input = read_wav(&args.input)?;
    let cfg = enhance_config(args, input.num_channels())?;
    if cfg.reference >= input.num_channels() {
        return Err(CliError::Data(format!(
            "reference channel {} out of range for {} channels",
            cfg.reference,
            input.num_channels()
        )));
    }
    eprintln!(
        "convbeam enhance: beamformer={} delay={} taps={} reference={} loading={:e} mask={} lambda={} stft={}/{}/{}",
        cfg.beamformer,
        cfg.taps.delay,
        if cfg.beamformer.is_convolutional() { cfg.taps.taps } else { 0 },
        cfg.reference,
        DIAGONAL_LOADING,
        args.mask.to_possible_value().expect("no skipped variants").get_name(),
        if args.constant_lambda { "constant" } else { "masked" },
        cfg.stft.window_len,
        cfg.stft.hop,
        cfg.stft.fft_len,
    );

    if cfg.beamformer == BeamformerKind::Passthrough {
        return Ok(input.select_channel(cfg.reference));
    }

    let clean;
    let interference;
    let masks = match args.mask {
        MaskMode::OracleIrm | MaskMode::OracleIbm => {
            let path = args
                .clean
                .as_ref()
                .ok_or_else(|| CliError::Input("--clean is required for oracle masks".into()))?;
            clean = read_wav(path)?;
            check_same_layout("clean source image", &clean, &input)?;
            interference = if args.noise.is_empty() {
                MultichannelWaveform::new(input.samples() - clean.samples(), input.sample_rate())?
            } else {
                let mut sum = ndarray::Array2::<f64>::zeros(input.samples().raw_dim());
                for path in &args.noise {
                    let part = read_wav(path)?;
                    check_same_layout(&format!("interference {}", path.display()), &part, &input)?;
                    sum += part.samples();
                }
                MultichannelWaveform::new(sum, input.sample_rate())?
            };
            if args.mask == MaskMode::OracleIrm {
                MaskSource::OracleIrm { source_image: &clean, interference: &interference }
            } else {
                MaskSource::OracleIbm {
                    source_image: &clean,
                    interference: &interference,
                    threshold_db: args.ibm_threshold,
                }
            }
        }
        MaskMode::File => {
            let path = args
                .mask_file
                .as_ref()
                .ok_or_else(|| CliError::Input("--mask-file is required for `--mask file`".into()))?;
            let speech = load_mask(path)?;
            let noise = args.noise_mask_file.as_ref().map(load_mask).transpose()?;
            MaskSource::Given { speech, noise }
        }
    };
    Ok(enhance(&input, &masks, &cfg)?.output)
}

pub fn run_enhance(args: &EnhanceArgs) -> CliResult<()> {
    let out = enhance_input(args)?;
    write_wav(&args.output, &out)
}
