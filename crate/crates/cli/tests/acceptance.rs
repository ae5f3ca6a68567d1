//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails, including its runtime budget.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use convbeam_cli::report::{render_csv, run_report, ReportConfig, ReportMask, SceneList};
use convbeam_cli::simulate::{render_scene, simulate, SimulateArgs, SCENE_FILES};
use convbeam_core::beamform::{rtf_weights, wpd_filter, wpd_rtf_filter};
use convbeam_core::metrics::ci_sdr;
use convbeam_core::{
    builtin_source, enhance, generate_scene, istft, si_sdr, stft, BeamformerKind, CiSdrConfig, EnhanceConfig,
    LambdaMode, MaskSource, MultichannelWaveform, NoiseKind, SceneSpec, SourceKind, StftConfig, TapConfig,
    TimeFreqMask,
};
use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct CountingLogger;

static WARNINGS: AtomicUsize = AtomicUsize::new(0);

impl log::Log for CountingLogger {
    fn enabled(&self, metadata: &log::Metadata) -> bool {
        metadata.level() <= log::Level::Warn
    }

    fn log(&self, record: &log::Record) {
        if self.enabled(record.metadata()) {
            WARNINGS.fetch_add(1, Ordering::SeqCst);
        }
    }

    fn flush(&self) {}
}

static LOGGER: CountingLogger = CountingLogger;

type Outcome = Result<String, String>;

type Criterion = (&'static str, u64, fn() -> Outcome);

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn cplx(g: &mut ChaCha8Rng) -> C {
    C::new(g.gen_range(-1.0..1.0), g.gen_range(-1.0..1.0))
}

fn random_pd(dim: usize, g: &mut ChaCha8Rng) -> Array2<C> {
    let a = Array2::from_shape_fn((dim, 2 * dim), |_| cplx(g));
    let mut r = Array2::from_shape_fn((dim, dim), |(i, j)| {
        (0..2 * dim).map(|k| a[[i, k]] * a[[j, k]].conj()).sum::<C>() / (2 * dim) as f64
    });
    for i in 0..dim {
        r[[i, i]] += 0.1;
    }
    r
}

fn rel_l2(estimate: &[f64], reference: &[f64]) -> f64 {
    let num: f64 = estimate.iter().zip(reference).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = reference.iter().map(|b| b * b).sum();
    (num / den).sqrt()
}

fn scene_for(spec: &SceneSpec) -> convbeam_core::SceneOutput {
    let src = builtin_source(SourceKind::SpeechLike, spec.duration, spec.sample_rate, spec.seed);
    generate_scene(spec, &src).expect("valid scene")
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn stft_round_trip() -> Outcome {
    let cfg = StftConfig::default();
    let worst = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let mut g = rng(i);
            let channels = g.gen_range(1..=8);
            let len = g.gen_range(8000..=64000);
            let data: Vec<Vec<f64>> =
                (0..channels).map(|_| (0..len).map(|_| g.gen_range(-1.0..1.0)).collect()).collect();
            let x = MultichannelWaveform::from_channels(&data, 16000).unwrap();
            let back = istft(&stft(&x, &cfg).unwrap(), len).unwrap();
            rel_l2(back.samples().as_slice().unwrap(), x.samples().as_slice().unwrap())
        })
        .reduce(|| 0.0, f64::max);
    check(worst < 1e-6, format!("worst relative error {worst:.2e} over 1000 signals"))
}

fn distortionless() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..200u64 {
        let mut g = rng(10_000 + i);
        let d = g.gen_range(2..=24);
        let r = random_pd(d, &mut g);
        let b = Array2::from_shape_fn((1, d), |_| cplx(&mut g));
        let w = wpd_rtf_filter(&[r], &b, 0).map_err(|e| e.to_string())?;
        let gain: C = w.w.row(0).iter().zip(b.row(0)).map(|(wi, bi)| wi.conj() * bi).sum();
        worst = worst.max((gain - 1.0).norm());
    }
    check(worst < 1e-10, format!("max |w^H b - 1| = {worst:.2e}"))
}

fn rank_one_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for i in 0..200u64 {
        let mut g = rng(20_000 + i);
        let d = g.gen_range(2..=24);
        let divisors: Vec<usize> = (1..=d).filter(|m| d % m == 0).collect();
        let m = divisors[g.gen_range(0..divisors.len())];
        let bins = 4;
        let r: Vec<Array2<C>> = (0..bins).map(|_| random_pd(d, &mut g)).collect();
        let mut steering = Array2::<C>::zeros((bins, d));
        let mut h = Vec::new();
        for f in 0..bins {
            steering[[f, 0]] = C::new(1.0, 0.0);
            for k in 1..m {
                steering[[f, k]] = cplx(&mut g);
            }
            let b = steering.row(f);
            h.push(Array2::from_shape_fn((d, d), |(a, c)| b[a] * b[c].conj()));
        }
        let a = wpd_filter(&r, &h, None, 0).map_err(|e| e.to_string())?;
        let c = wpd_rtf_filter(&r, &steering, 0).map_err(|e| e.to_string())?;
        for f in 0..bins {
            let err = a.w.row(f).iter().zip(c.w.row(f)).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            worst = worst.max(err);
            count += 1;
        }
    }
    check(worst < 1e-9, format!("max per-bin deviation {worst:.2e} over {count} bins"))
}

fn degeneration_scenes() -> Vec<SceneSpec> {
    (0..20u64)
        .map(|i| SceneSpec {
            num_mics: 2 + (i as usize % 7),
            source_azimuth: -70.0 + 7.0 * i as f64,
            t60: 0.2 + 0.02 * (i % 5) as f64,
            snr_db: -5.0 + (i % 4) as f64 * 5.0,
            noise_kind: if i % 3 == 0 { NoiseKind::Pink } else { NoiseKind::White },
            duration: 2.0,
            seed: 300 + i,
            ..SceneSpec::default()
        })
        .collect()
}

fn degeneration() -> Outcome {
    let errors: Vec<f64> = degeneration_scenes()
        .par_iter()
        .map(|spec| {
            let s = scene_for(spec);
            let interf = s.interference();
            let masks = MaskSource::OracleIrm { source_image: &s.source_image, interference: &interf };
            let mut wpd = EnhanceConfig::new(BeamformerKind::Wpd, TapConfig { delay: 3, taps: 0 });
            wpd.lambda = LambdaMode::Constant;
            let mpdr = EnhanceConfig::new(BeamformerKind::Mpdr, TapConfig::single());
            let a = enhance(&s.mixture, &masks, &wpd).unwrap().output;
            let b = enhance(&s.mixture, &masks, &mpdr).unwrap().output;
            rel_l2(&a.channel(0).to_vec(), &b.channel(0).to_vec())
        })
        .collect();
    let worst = errors.iter().cloned().fold(0.0, f64::max);
    check(worst < 1e-6, format!("worst relative L2 {worst:.2e} over {} scenes", errors.len()))
}

/// Minimizes `w^H R w` subject to `w^H b = 1` through the dense KKT system.
fn kkt_oracle(r: &Array2<C>, b: &Array1<C>) -> Array1<C> {
    let d = b.len();
    let mut k = DMatrix::<C>::zeros(d + 1, d + 1);
    for i in 0..d {
        for j in 0..d {
            k[(i, j)] = r[[i, j]];
        }
        k[(i, d)] = b[i];
        k[(d, i)] = b[i].conj();
    }
    let mut rhs = DVector::<C>::zeros(d + 1);
    rhs[d] = C::new(1.0, 0.0);
    let sol = k.lu().solve(&rhs).expect("nonsingular KKT system");
    Array1::from_shape_fn(d, |i| sol[i])
}

fn kkt_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let mut g = rng(30_000 + i);
        let d = g.gen_range(1..=24);
        let r = random_pd(d, &mut g);
        let b = Array1::from_shape_fn(d, |_| cplx(&mut g));
        let w = rtf_weights(&r, b.view()).map_err(|e| e.to_string())?;
        let want = kkt_oracle(&r, &b);
        worst = worst.max(w.iter().zip(&want).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max));
    }
    check(worst < 1e-9, format!("max deviation from KKT solve {worst:.2e}"))
}

fn ci_sdr_definition() -> Outcome {
    let results: Vec<(f64, f64)> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let mut g = rng(40_000 + i);
            let len = g.gen_range(1000..4000);
            let mix = g.gen_range(0.01..2.0);
            let s: Vec<f64> = (0..len).map(|_| g.gen_range(-1.0..1.0)).collect();
            let est: Vec<f64> = (0..len)
                .map(|n| s[n] + 0.4 * if n > 0 { s[n - 1] } else { 0.0 } + mix * g.gen_range(-1.0..1.0))
                .collect();
            let unit = ci_sdr(&s, &est, &CiSdrConfig::with_filter_len(1)).unwrap();
            let gap = (unit - si_sdr(&s, &est).unwrap()).abs();
            let mut drop = 0.0f64;
            let mut last = unit;
            for l in [32, 128, 512] {
                let v = ci_sdr(&s, &est, &CiSdrConfig::with_filter_len(l)).unwrap();
                drop = drop.max(last - v);
                last = v;
            }
            (gap, drop)
        })
        .collect();
    let gap = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let drop = results.iter().map(|r| r.1).fold(0.0, f64::max);

    let mut g = rng(41_000);
    let mut s: Vec<f64> = (0..8000).map(|_| g.gen_range(-1.0..1.0)).collect();
    s.extend(std::iter::repeat_n(0.0, 200));
    let mut delayed = vec![0.0; 100];
    delayed.extend_from_slice(&s[..s.len() - 100]);
    let cfg = CiSdrConfig::default();
    let shifted = ci_sdr(&s, &delayed, &cfg).map_err(|e| e.to_string())?;
    check(
        gap < 1e-9 && drop <= 1e-6 && (cfg.cap_db - shifted) <= 0.5,
        format!(
            "L=1 vs SI-SDR {gap:.2e} dB, largest decrease in L {drop:.2e} dB, delayed copy {shifted:.2} dB"
        ),
    )
}

/// Frozen after measuring WPD 9.04, MVDR 8.84, MPDR 4.85 and observed -1.15 dB
/// mean CI-SDR on the standard set.
const WPD_MARGIN_DB: f64 = 8.0;

fn enhancement_regression() -> Outcome {
    let cfg = ReportConfig {
        scenes: SceneList::Named("standard".into()),
        beamformers: ["passthrough", "mpdr", "mvdr", "wpd"].map(String::from).to_vec(),
        source: SourceKind::SpeechLike,
        taps: None,
        mask: ReportMask::OracleIrm,
        ibm_threshold_db: 0.0,
        ci_sdr_taps: 512,
    };
    let rows = run_report(&cfg).map_err(|e| e.to_string())?;
    let mean = |name: &str| {
        rows.iter().find(|r| r.scene == "mean" && r.beamformer == name).map(|r| r.metrics.ci_sdr_db).unwrap()
    };
    let (pass, mpdr, mvdr, wpd) = (mean("observed"), mean("mpdr"), mean("mvdr"), mean("wpd"));
    check(
        pass < mpdr && pass < mvdr && mpdr <= wpd && mvdr <= wpd && wpd - pass >= WPD_MARGIN_DB,
        format!(
            "mean CI-SDR observed {pass:.2}, mpdr {mpdr:.2}, mvdr {mvdr:.2}, wpd {wpd:.2} dB; wpd gain {:.2} dB (need {WPD_MARGIN_DB})",
            wpd - pass
        ),
    )
}

fn anechoic_recovery() -> Outcome {
    let errors: Vec<f64> = (0..10u64)
        .into_par_iter()
        .map(|i| {
            let spec = SceneSpec {
                t60: 0.0,
                snr_db: 160.0,
                num_mics: [2, 4, 6][i as usize % 3],
                source_azimuth: -60.0 + 13.0 * i as f64,
                duration: 2.0,
                seed: 500 + i,
                ..SceneSpec::default()
            };
            let s = scene_for(&spec);
            let interf = s.interference();
            let masks = MaskSource::OracleIrm { source_image: &s.source_image, interference: &interf };
            let cfg = EnhanceConfig::new(BeamformerKind::WpdRtf, TapConfig { delay: 3, taps: 0 });
            let out = enhance(&s.mixture, &masks, &cfg).unwrap().output;
            rel_l2(&out.channel(0).to_vec(), &s.reference_clean.channel(0).to_vec())
        })
        .collect();
    let worst = errors.iter().cloned().fold(0.0, f64::max);
    check(worst < 1e-4, format!("worst relative L2 to the clean reference {worst:.2e} over 10 scenes"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let specs: Vec<SceneSpec> = (0..3u64)
        .map(|i| SceneSpec {
            num_mics: 2 + 2 * i as usize,
            duration: 1.5,
            seed: 700 + i,
            ..SceneSpec::default()
        })
        .collect();
    let cfg = ReportConfig {
        scenes: SceneList::Explicit(specs.clone()),
        beamformers: ["passthrough", "mpdr", "mvdr", "wpd"].map(String::from).to_vec(),
        source: SourceKind::SpeechLike,
        taps: None,
        mask: ReportMask::OracleIrm,
        ibm_threshold_db: 0.0,
        ci_sdr_taps: 512,
    };
    let a = render_csv(&run_report(&cfg).map_err(|e| e.to_string())?);
    let b = render_csv(&run_report(&cfg).map_err(|e| e.to_string())?);
    let config = dir.path().join("scene.json");
    std::fs::write(&config, serde_json::to_string(&specs[1]).unwrap()).unwrap();
    let mut payloads = Vec::new();
    for run in ["a", "b"] {
        let args = SimulateArgs {
            config: config.clone(),
            out_dir: dir.path().join(run),
            source: SourceKind::SpeechLike,
        };
        simulate(&args).map_err(|e| e.to_string())?;
        payloads.push(SCENE_FILES.map(|f| std::fs::read(dir.path().join(run).join(f)).unwrap()));
    }
    let identical_wavs = payloads[0] == payloads[1];
    let again = render_scene(&specs[1], SourceKind::SpeechLike).map_err(|e| e.to_string())?;
    let first = render_scene(&specs[1], SourceKind::SpeechLike).map_err(|e| e.to_string())?;
    check(
        a == b && identical_wavs && again.mixture == first.mixture,
        format!("report CSV identical: {}, scene WAVs identical: {identical_wavs}", a == b),
    )
}

struct Case {
    name: &'static str,
    mixture: MultichannelWaveform,
    kind: BeamformerKind,
    taps: TapConfig,
    mask: f64,
    expect_fallback: bool,
}

fn adversarial_cases() -> Vec<Case> {
    let noise = |channels: usize, len: usize, seed: u64| {
        let mut g = rng(seed);
        let data: Vec<Vec<f64>> =
            (0..channels).map(|_| (0..len).map(|_| g.gen_range(-1.0..1.0)).collect()).collect();
        MultichannelWaveform::from_channels(&data, 16000).unwrap()
    };
    let mut dead = noise(4, 8000, 3).into_samples();
    dead.row_mut(2).fill(0.0);
    let dead = MultichannelWaveform::new(dead, 16000).unwrap();
    let scene = scene_for(&SceneSpec { duration: 1.0, seed: 9, ..SceneSpec::default() }).mixture;
    let single_tap = TapConfig { delay: 3, taps: 0 };
    let mut cases = Vec::new();
    for kind in [BeamformerKind::Wpd, BeamformerKind::Mpdr, BeamformerKind::Mvdr] {
        cases.push(Case {
            name: "zero mask, 4 channels",
            mixture: noise(4, 8000, 1),
            kind,
            taps: TapConfig::default(),
            mask: 0.0,
            expect_fallback: true,
        });
        cases.push(Case {
            name: "zero mask, 1 channel",
            mixture: noise(1, 8000, 2),
            kind,
            taps: TapConfig::default(),
            mask: 0.0,
            expect_fallback: true,
        });
        cases.push(Case {
            name: "unit mask, 1 channel",
            mixture: noise(1, 8000, 4),
            kind,
            taps: single_tap,
            mask: 1.0,
            expect_fallback: kind == BeamformerKind::Mvdr,
        });
        cases.push(Case {
            name: "silent input",
            mixture: MultichannelWaveform::zeros(3, 6000, 16000),
            kind,
            taps: TapConfig::default(),
            mask: 1.0,
            expect_fallback: true,
        });
        cases.push(Case {
            name: "dead channel",
            mixture: dead.clone(),
            kind,
            taps: TapConfig::default(),
            mask: 0.6,
            expect_fallback: false,
        });
    }
    cases.push(Case {
        name: "single tap, 6-channel scene",
        mixture: scene.clone(),
        kind: BeamformerKind::Wpd,
        taps: single_tap,
        mask: 0.5,
        expect_fallback: false,
    });
    cases.push(Case {
        name: "single tap, 1 channel, long delay",
        mixture: noise(1, 8000, 5),
        kind: BeamformerKind::Wpd,
        taps: TapConfig { delay: 40, taps: 0 },
        mask: 0.3,
        expect_fallback: false,
    });
    cases.push(Case {
        name: "very short input",
        mixture: noise(2, 100, 6),
        kind: BeamformerKind::Wpd,
        taps: TapConfig::default(),
        mask: 0.8,
        expect_fallback: false,
    });
    cases.push(Case {
        name: "tiny amplitude",
        mixture: noise(3, 6000, 7).scaled(1e-12),
        kind: BeamformerKind::Wpd,
        taps: TapConfig::default(),
        mask: 0.9,
        expect_fallback: false,
    });
    cases.push(Case {
        name: "huge amplitude",
        mixture: scene.scaled(1e6),
        kind: BeamformerKind::Wpd,
        taps: TapConfig::default(),
        mask: 0.9,
        expect_fallback: false,
    });
    cases
}

fn robustness() -> Outcome {
    let cases = adversarial_cases();
    let mut failures = Vec::new();
    for case in &cases {
        let shape = stft(&case.mixture, &StftConfig::default()).unwrap().shape();
        let masks =
            MaskSource::Given { speech: TimeFreqMask::constant(shape, case.mask).unwrap(), noise: None };
        let before = WARNINGS.load(Ordering::SeqCst);
        let label = format!("{} / {}", case.name, case.kind);
        match enhance(&case.mixture, &masks, &EnhanceConfig::new(case.kind, case.taps)) {
            Ok(out) => {
                let logged = WARNINGS.load(Ordering::SeqCst) > before;
                if !out.output.samples().iter().all(|v| v.is_finite()) {
                    failures.push(format!("{label}: non-finite output"));
                }
                if case.expect_fallback && !(out.fallback_bins() > 0 && logged) {
                    failures.push(format!("{label}: fallback {} bins, logged {logged}", out.fallback_bins()));
                }
                if out.fallback_bins() > 0 && !logged {
                    failures.push(format!("{label}: fallback not logged"));
                }
            }
            Err(e) => failures.push(format!("{label}: {e}")),
        }
    }
    check(
        failures.is_empty(),
        if failures.is_empty() { format!("{} cases finite", cases.len()) } else { failures.join("; ") },
    )
}

fn main() {
    log::set_logger(&LOGGER).expect("logger installs once");
    log::set_max_level(log::LevelFilter::Warn);

    let criteria: [Criterion; 10] = [
        ("STFT perfect reconstruction", 30, stft_round_trip),
        ("distortionless constraint", 5, distortionless),
        ("rank-1 equivalence", 10, rank_one_equivalence),
        ("single-tap degeneration to MPDR", 120, degeneration),
        ("KKT oracle equivalence", 5, kkt_equivalence),
        ("CI-SDR definition checks", 60, ci_sdr_definition),
        ("enhancement regression", 300, enhancement_regression),
        ("anechoic oracle recovery", 60, anechoic_recovery),
        ("determinism", 120, determinism),
        ("robustness", 60, robustness),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let in_budget = elapsed <= Duration::from_secs(*budget);
        let (ok, detail) = match outcome {
            Ok(d) => (in_budget, d),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} [{:>2}] {name}: {detail} ({:.1}s, budget {budget}s{})",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64(),
            if in_budget { "" } else { ", exceeded" }
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
