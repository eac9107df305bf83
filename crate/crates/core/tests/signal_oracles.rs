use neuroswarm_core::fnirs::hrf::{block_regressor, Hrf};
use neuroswarm_core::fnirs::mbll::{intensity_to_od, od_to_hemoglobin, ExtinctionSystem, RawIntensitySeries};
use neuroswarm_core::fnirs::probe::ProbeLayout;
use neuroswarm_core::fnirs::recording::{load_recording, write_hemo, Recording};
use neuroswarm_core::fnirs::synth::{synth_generate, SynthBlock, SynthProtocol};
use neuroswarm_core::glm::fit::lag1_autocorrelation;
use proptest::prelude::*;

/// Direct O(n²) convolution of the boxcar with the sampled kernel,
/// normalised by the kernel sum.
fn direct_convolution(blocks: &[(f64, f64)], rate: f64, n: usize, hrf: &Hrf<f64>) -> Vec<f64> {
    let kernel = hrf.kernel(rate);
    let total: f64 = kernel.iter().sum();
    let boxcar: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / rate;
            if blocks.iter().any(|&(on, d)| t >= on && t < on + d) { 1.0 } else { 0.0 }
        })
        .collect();
    (0..n)
        .map(|i| (0..=i).map(|j| boxcar[j] * kernel.get(i - j).copied().unwrap_or(0.0)).sum::<f64>() / total)
        .collect()
}

fn block_pattern() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0..90.0f64, 0.5..20.0f64), 0..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mbll_round_trip(hbo in -200.0..200.0f64, hbr in -200.0..200.0f64, dpf in 3.0..9.0f64, dist in 1.0..5.0f64) {
        let sys = ExtinctionSystem::new([760.0, 850.0], dpf, dist).unwrap();
        let (o, r) = sys.invert(sys.forward(hbo, hbr));
        prop_assert!((o - hbo).abs() < 1e-9 && (r - hbr).abs() < 1e-9);
    }

    #[test]
    fn convolution_matches_direct_sum(blocks in block_pattern(), n in 1usize..=1000) {
        let hrf = Hrf::default();
        let fast = block_regressor(&blocks, 10.0, 0.0, n, &hrf);
        let slow = direct_convolution(&blocks, 10.0, n, &hrf);
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
        }
    }
}

fn protocol(seed: u64) -> SynthProtocol<f64> {
    let mut p = SynthProtocol::quiet(10.0, 120.0, seed);
    for k in 0..3 {
        p.blocks.push(SynthBlock { onset: 10.0 + 40.0 * k as f64, duration: 15.0, condition: "task".into() });
    }
    let mut amps = vec![0.0; 23];
    amps[..8].fill(1.0);
    p.activation.insert("task".into(), amps);
    p
}

#[test]
fn synthesis_is_deterministic_and_linear() {
    let layout = ProbeLayout::default();
    let mut noisy = protocol(9);
    noisy.noise.white_sigma = 0.3;
    noisy.noise.motion_rate = 0.05;
    noisy.noise.motion_amplitude = 2.0;
    assert_eq!(synth_generate(&noisy, &layout).unwrap(), synth_generate(&noisy, &layout).unwrap());

    let once = synth_generate(&protocol(1), &layout).unwrap();
    let mut doubled = protocol(1);
    for v in doubled.activation.values_mut() {
        v.iter_mut().for_each(|a| *a *= 2.0);
    }
    let twice = synth_generate(&doubled, &layout).unwrap();
    for (a, b) in once.hbo.iter().flatten().zip(twice.hbo.iter().flatten()) {
        assert_eq!(2.0 * a, *b);
    }
}

#[test]
fn white_noise_variance_over_seeds() {
    let layout = ProbeLayout::default();
    let mut vars = Vec::new();
    for seed in 0..50 {
        let mut p = SynthProtocol::quiet(10.0, 100.0, seed);
        p.noise.white_sigma = 0.3;
        let s = synth_generate(&p, &layout).unwrap();
        let x = &s.hbo[3];
        let m = x.iter().sum::<f64>() / x.len() as f64;
        vars.push(x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64);
    }
    let mean_var = vars.iter().sum::<f64>() / vars.len() as f64;
    // sd of the mean sample variance ≈ 0.09·√(2/999)/√50 ≈ 5.7e-4
    assert!((mean_var - 0.09).abs() < 0.004, "mean variance {mean_var}");
}

#[test]
fn ar_noise_has_requested_autocorrelation() {
    let layout = ProbeLayout::default();
    let mut p = SynthProtocol::quiet(10.0, 300.0, 4);
    p.noise.white_sigma = 1.0;
    p.noise.ar_rho = 0.5;
    let s = synth_generate(&p, &layout).unwrap();
    let rho: f64 = s.hbo.iter().map(|c| lag1_autocorrelation(c)).sum::<f64>() / 23.0;
    assert!((rho - 0.5).abs() < 0.03, "rho {rho}");
}

#[test]
fn recording_round_trip_and_raw_pipeline() {
    let layout = ProbeLayout::default();
    let mut p = protocol(3);
    p.noise.white_sigma = 0.2;
    let series = synth_generate(&p, &layout).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rec.csv");
    write_hemo(&series, &path).unwrap();
    match load_recording::<f64>(&path).unwrap() {
        Recording::Hemo(loaded) => assert_eq!(loaded, series),
        Recording::Raw(_) => panic!("expected hemoglobin recording"),
    }

    // raw intensities built from the same concentrations invert back
    let sys = ExtinctionSystem::new([760.0, 850.0], 6.0, 3.0).unwrap();
    let n = series.len();
    let samples = (0..23)
        .map(|c| {
            let od: Vec<[f64; 2]> = (0..n).map(|i| sys.forward(series.hbo[c][i], series.hbr[c][i])).collect();
            [od.iter().map(|o| 10f64.powf(-o[0])).collect(), od.iter().map(|o| 10f64.powf(-o[1])).collect()]
        })
        .collect();
    let raw = RawIntensitySeries { sample_rate: 10.0, start_time: 0.0, wavelengths: [760.0, 850.0], samples };
    let od = intensity_to_od(&raw).unwrap();
    let back = od_to_hemoglobin(&od, &layout, 6.0, 3.0).unwrap();
    // OD is relative to the mean intensity, so compare changes from sample 0
    for c in 0..23 {
        for i in 0..n {
            let want = series.hbo[c][i] - series.hbo[c][0];
            let got = back.hbo[c][i] - back.hbo[c][0];
            assert!((got - want).abs() < 1e-6, "ch {c} sample {i}");
        }
    }
}
