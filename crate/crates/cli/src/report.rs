use std::path::{Path, PathBuf};

use clap::Args;
use convbeam_core::simulate::standard_scene_set;
use convbeam_core::{
    enhance, BeamformerKind, CiSdrConfig, EnhanceConfig, MaskSource, MetricReport, SceneSpec, SourceKind,
    TapConfig,
};
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{CliError, CliResult};
use crate::evaluate::format_db;
use crate::simulate::render_scene;

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// JSON report configuration
    #[arg(long)]
    pub config: PathBuf,
    /// Output CSV
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SceneList {
    /// `"standard"` selects the built-in ten-scene set.
    Named(String),
    Explicit(Vec<SceneSpec>),
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ReportMask {
    #[default]
    OracleIrm,
    OracleIbm,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TapSpec {
    pub delay: usize,
    pub taps: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    pub scenes: SceneList,
    #[serde(default = "default_beamformers")]
    pub beamformers: Vec<String>,
    #[serde(default)]
    pub source: SourceKind,
    /// Defaults to the channel-count rule of `TapConfig::for_channels`.
    #[serde(default)]
    pub taps: Option<TapSpec>,
    #[serde(default)]
    pub mask: ReportMask,
    #[serde(default)]
    pub ibm_threshold_db: f64,
    #[serde(default = "default_filter_len")]
    pub ci_sdr_taps: usize,
}

fn default_beamformers() -> Vec<String> {
    ["passthrough", "mpdr", "mvdr", "wpd"].map(String::from).to_vec()
}

fn default_filter_len() -> usize {
    512
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    /// Scene index, or `mean`.
    pub scene: String,
    pub beamformer: String,
    pub metrics: MetricReport,
}

/// Table label of a beamformer; the pass-through row is the observed signal.
pub fn row_label(kind: BeamformerKind) -> &'static str {
    match kind {
        BeamformerKind::Passthrough => "observed",
        other => other.name(),
    }
}

impl ReportConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: invalid report config: {e}", path.display())))
    }

    pub fn scene_specs(&self) -> CliResult<Vec<SceneSpec>> {
        let specs = match &self.scenes {
            SceneList::Named(name) if name == "standard" => standard_scene_set(),
            SceneList::Named(name) => {
                return Err(CliError::Input(format!("unknown scene set `{name}`")));
            }
            SceneList::Explicit(specs) => specs.clone(),
        };
        if specs.is_empty() {
            return Err(CliError::Input("report config lists no scenes".into()));
        }
        for (i, spec) in specs.iter().enumerate() {
            spec.validate().map_err(|e| CliError::from(e).context(format!("scene {i}")))?;
        }
        Ok(specs)
    }

    pub fn kinds(&self) -> CliResult<Vec<BeamformerKind>> {
        if self.beamformers.is_empty() {
            return Err(CliError::Input("report config lists no beamformers".into()));
        }
        self.beamformers
            .iter()
            .map(|b| b.parse().map_err(|e: convbeam_core::Error| CliError::Input(e.to_string())))
            .collect()
    }
}

fn run_scene(
    index: usize,
    spec: &SceneSpec,
    kinds: &[BeamformerKind],
    cfg: &ReportConfig,
) -> CliResult<Vec<ReportRow>> {
    let scene = render_scene(spec, cfg.source).map_err(|e| e.context(format!("scene {index}")))?;
    let interference = scene.interference();
    let masks = match cfg.mask {
        ReportMask::OracleIrm => {
            MaskSource::OracleIrm { source_image: &scene.source_image, interference: &interference }
        }
        ReportMask::OracleIbm => MaskSource::OracleIbm {
            source_image: &scene.source_image,
            interference: &interference,
            threshold_db: cfg.ibm_threshold_db,
        },
    };
    let taps = match cfg.taps {
        Some(t) => TapConfig::new(t.delay, t.taps)?,
        None => TapConfig::for_channels(spec.num_mics),
    };
    let reference = scene.reference_clean.channel(0).to_vec();
    let metric_cfg = CiSdrConfig { filter_len: cfg.ci_sdr_taps, ..CiSdrConfig::default() };
    kinds
        .iter()
        .map(|&kind| {
            let what = || format!("scene {index}, {kind}");
            let out = enhance(&scene.mixture, &masks, &EnhanceConfig::new(kind, taps))
                .map_err(|e| CliError::from(e).context(what()))?;
            let metrics = MetricReport::compute(&reference, &out.output.channel(0).to_vec(), &metric_cfg)
                .map_err(|e| CliError::from(e).context(what()))?;
            Ok(ReportRow { scene: index.to_string(), beamformer: row_label(kind).to_string(), metrics })
        })
        .collect()
}

/// Per-scene rows in config order followed by one mean row per beamformer.
pub fn run_report(cfg: &ReportConfig) -> CliResult<Vec<ReportRow>> {
    let specs = cfg.scene_specs()?;
    let kinds = cfg.kinds()?;
    let per_scene: Vec<Vec<ReportRow>> = specs
        .par_iter()
        .enumerate()
        .map(|(i, spec)| run_scene(i, spec, &kinds, cfg))
        .collect::<CliResult<_>>()?;
    let n = specs.len() as f64;
    let mut rows: Vec<ReportRow> = per_scene.concat();
    for (k, &kind) in kinds.iter().enumerate() {
        let mean = |f: fn(&MetricReport) -> f64| per_scene.iter().map(|s| f(&s[k].metrics)).sum::<f64>() / n;
        rows.push(ReportRow {
            scene: "mean".into(),
            beamformer: row_label(kind).to_string(),
            metrics: MetricReport {
                sdr_db: mean(|m| m.sdr_db),
                si_sdr_db: mean(|m| m.si_sdr_db),
                ci_sdr_db: mean(|m| m.ci_sdr_db),
            },
        });
    }
    Ok(rows)
}

pub fn render_csv(rows: &[ReportRow]) -> String {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["scene", "beamformer", "sdr_db", "si_sdr_db", "ci_sdr_db"]).expect("in-memory write");
    for r in rows {
        out.write_record([
            r.scene.clone(),
            r.beamformer.clone(),
            format_db(r.metrics.sdr_db),
            format_db(r.metrics.si_sdr_db),
            format_db(r.metrics.ci_sdr_db),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(out.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

pub fn report(args: &ReportArgs) -> CliResult<Vec<ReportRow>> {
    let cfg = ReportConfig::load(&args.config)?;
    let rows = run_report(&cfg)?;
    std::fs::write(&args.out, render_csv(&rows)).map_err(|e| CliError::io(&args.out, e))?;
    Ok(rows)
}
