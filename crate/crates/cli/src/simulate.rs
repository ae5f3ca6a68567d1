use std::path::{Path, PathBuf};

use clap::Args;
use convbeam_core::{builtin_source, generate_scene, SceneOutput, SceneSpec, SourceKind};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::wav::write_wav;

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// JSON scene specification
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Built-in source signal: speech_like, tones or noise_burst
    #[arg(long, default_value = "speech_like")]
    pub source: SourceKind,
}

pub const SCENE_FILES: [&str; 5] =
    ["mixture.wav", "source_image.wav", "late_reverb.wav", "noise.wav", "reference_clean.wav"];

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    spec: &'a SceneSpec,
    seed: u64,
    source: SourceKind,
    num_samples: usize,
    files: [&'a str; 5],
}

pub fn load_scene_spec(path: &Path) -> CliResult<SceneSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let spec: SceneSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: invalid scene spec: {e}", path.display())))?;
    spec.validate().map_err(|e| CliError::from(e).context(path.display()))?;
    Ok(spec)
}

/// Source signal for a scene, seeded by the scene seed.
pub fn scene_source(spec: &SceneSpec, kind: SourceKind) -> Vec<f64> {
    builtin_source(kind, spec.duration, spec.sample_rate, spec.seed)
}

pub fn render_scene(spec: &SceneSpec, kind: SourceKind) -> CliResult<SceneOutput> {
    Ok(generate_scene(spec, &scene_source(spec, kind))?)
}

pub fn simulate(args: &SimulateArgs) -> CliResult<SceneOutput> {
    let spec = load_scene_spec(&args.config)?;
    let scene = render_scene(&spec, args.source)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError::io(&args.out_dir, e))?;
    let waves =
        [&scene.mixture, &scene.source_image, &scene.late_reverb, &scene.noise, &scene.reference_clean];
    for (name, wave) in SCENE_FILES.iter().zip(waves) {
        write_wav(&args.out_dir.join(name), wave)?;
    }
    let manifest = Manifest {
        spec: &spec,
        seed: spec.seed,
        source: args.source,
        num_samples: scene.mixture.len(),
        files: SCENE_FILES,
    };
    let path = args.out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(scene)
}
