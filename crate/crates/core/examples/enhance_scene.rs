use convbeam_core::{
    builtin_source, ci_sdr, enhance, generate_scene, BeamformerKind, CiSdrConfig, EnhanceConfig, MaskSource,
    NoiseKind, SceneSpec, SourceKind, TapConfig,
};

fn main() -> convbeam_core::Result<()> {
    let spec = SceneSpec {
        num_mics: 6,
        array_spacing: 0.05,
        source_azimuth: 30.0,
        source_distance: 1.0,
        t60: 0.3,
        direct_to_early_ms: 50.0,
        snr_db: 0.0,
        noise_kind: NoiseKind::White,
        duration: 4.0,
        sample_rate: 16000,
        seed: 1,
    };
    let source = builtin_source(SourceKind::SpeechLike, spec.duration, spec.sample_rate, spec.seed);
    let scene = generate_scene(&spec, &source)?;
    let interference = scene.interference();
    let masks = MaskSource::OracleIrm { source_image: &scene.source_image, interference: &interference };
    let cfg = EnhanceConfig::new(BeamformerKind::Wpd, TapConfig { delay: 3, taps: 3 });
    let out = enhance(&scene.mixture, &masks, &cfg)?;

    let reference = scene.reference_clean.channel(0).to_vec();
    let observed = scene.mixture.channel(0).to_vec();
    let enhanced = out.output.channel(0).to_vec();
    let ci = CiSdrConfig::default();
    println!("observed {:.2} dB", ci_sdr(&reference, &observed, &ci)?);
    println!("wpd      {:.2} dB", ci_sdr(&reference, &enhanced, &ci)?);
    Ok(())
}
