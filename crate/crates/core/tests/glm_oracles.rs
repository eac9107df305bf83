use neuroswarm_core::fnirs::probe::ProbeLayout;
use neuroswarm_core::fnirs::synth::{synth_generate, SynthBlock, SynthProtocol};
use neuroswarm_core::fnirs::{Chromophore, HemoTimeSeries};
use neuroswarm_core::glm::contrast::contrast_t;
use neuroswarm_core::glm::design::build_design;
use neuroswarm_core::glm::fit::{fit_channel, fit_glm};
use neuroswarm_core::glm::workload::{
    gradient, kfold_accuracy, objective, CalibrationSet, LogisticModel,
};
use neuroswarm_core::glm::EventBlock;
use neuroswarm_core::swarm::seeded_rng;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

const RATE: f64 = 10.0;

fn alternating_blocks(duration: f64, on: f64, off: f64, first: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut t = first;
    while t + on <= duration {
        out.push((t, on));
        t += on + off;
    }
    out
}

fn synth_blocks(spans: &[(f64, f64)], cond: &str) -> Vec<SynthBlock<f64>> {
    spans.iter().map(|&(onset, duration)| SynthBlock { onset, duration, condition: cond.into() }).collect()
}

fn events(spans: &[(f64, f64)], cond: &str) -> Vec<EventBlock<f64>> {
    spans.iter().map(|&(on, d)| EventBlock::new(on, d, cond)).collect()
}

#[test]
fn random_designs_are_recovered_exactly() {
    let mut rng = seeded_rng(11);
    let mut fitted = 0;
    while fitted < 100 {
        let n = rng.random_range(300..1500);
        let duration = n as f64 / RATE;
        let conds = rng.random_range(1..=3);
        let mut evs = Vec::new();
        for c in 0..conds {
            for _ in 0..rng.random_range(1..4) {
                let on = rng.random_range(0.0..duration * 0.9);
                evs.push(EventBlock::new(on, rng.random_range(2.0..20.0), format!("c{c}")));
            }
        }
        let Ok(d) = build_design(&evs, RATE, 0.0, n, rng.random_range(0..4)) else { continue };
        let beta: Vec<f64> = (0..d.cols()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let y = d.matrix.mul_vec(&beta);
        let fit = fit_channel(&d.matrix, &y);
        for (b, t) in fit.beta.iter().zip(&beta) {
            assert!((b - t).abs() < 1e-9, "{b} vs {t}");
        }
        fitted += 1;
    }
}

/// Uncorrected false-positive rate of the task contrast on noise-only data.
fn false_positive_rate(rho: f64, seeds: u64) -> f64 {
    let layout = ProbeLayout::default();
    let spans = alternating_blocks(300.0, 20.0, 20.0, 10.0);
    let design = build_design(&events(&spans, "task"), RATE, 0.0, 3000, 2).unwrap();
    let c = design.contrast("task", None).unwrap();
    let mut hits = 0;
    let mut total = 0;
    for seed in 0..seeds {
        let mut p = SynthProtocol::quiet(RATE, 300.0, seed);
        p.blocks = synth_blocks(&spans, "task");
        p.noise.white_sigma = 0.3;
        p.noise.ar_rho = rho;
        let s = synth_generate(&p, &layout).unwrap();
        let fit = fit_glm(&s, &design, Chromophore::Hbo).unwrap();
        for st in contrast_t(&fit, &c, 0.05).unwrap() {
            total += 1;
            if st.p < 0.05 {
                hits += 1;
            }
        }
    }
    hits as f64 / total as f64
}

#[test]
fn false_positive_rate_white_noise() {
    let fpr = false_positive_rate(0.0, 40);
    assert!((0.025..=0.075).contains(&fpr), "fpr {fpr}");
}

#[test]
fn false_positive_rate_ar_noise() {
    let fpr = false_positive_rate(0.5, 40);
    assert!((0.025..=0.075).contains(&fpr), "fpr {fpr}");
}

#[test]
fn rho_is_estimated_from_residuals() {
    let mut rng = seeded_rng(2);
    let n = 3000;
    let design = build_design(&events(&alternating_blocks(300.0, 20.0, 20.0, 10.0), "task"), RATE, 0.0, n, 1).unwrap();
    let mut y = Vec::with_capacity(n);
    let mut prev = 0.0;
    for _ in 0..n {
        let z: f64 = StandardNormal.sample(&mut rng);
        prev = 0.6 * prev + z;
        y.push(prev);
    }
    let fit = fit_channel(&design.matrix, &y);
    assert!((fit.rho - 0.6).abs() < 0.05, "rho {}", fit.rho);
}

#[test]
fn activated_channels_are_detected() {
    let layout = ProbeLayout::default();
    let spans = alternating_blocks(300.0, 20.0, 20.0, 10.0);
    let design = build_design(&events(&spans, "task"), RATE, 0.0, 3000, 2).unwrap();
    let c = design.contrast("task", Some("rest")).unwrap();
    let mut amps = vec![0.0; 23];
    amps[..8].fill(1.0);
    let (mut tp, mut fp) = (0, 0);
    for seed in 0..10 {
        let mut p = SynthProtocol::quiet(RATE, 300.0, seed);
        p.blocks = synth_blocks(&spans, "task");
        p.activation.insert("task".into(), amps.clone());
        p.noise.white_sigma = 0.3;
        p.noise.drift_slope_per_min = 0.01;
        let s = synth_generate(&p, &layout).unwrap();
        let stats = contrast_t(&fit_glm(&s, &design, Chromophore::Hbo).unwrap(), &c, 0.05).unwrap();
        tp += stats[..8].iter().filter(|s| s.significant).count();
        fp += stats[8..].iter().filter(|s| s.significant).count();
        assert!(stats[..8].iter().all(|s| (s.contrast - 1.0).abs() < 0.1));
    }
    assert!(tp as f64 >= 0.9 * 80.0, "detected {tp} of 80");
    assert!(fp as f64 <= 0.1 * 150.0, "false alarms {fp} of 150");
}

fn window_set(seed: u64, separation: f64, n: usize) -> CalibrationSet<f64> {
    let mut rng = seeded_rng(seed);
    let mut set = CalibrationSet::default();
    for i in 0..n {
        let high = i % 2 == 0;
        let centre = if high { separation } else { -separation };
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        set.features.push(vec![centre + 0.2 * a, 0.5 * b]);
        set.labels.push(high);
    }
    set
}

#[test]
fn separable_classes_are_learned() {
    let set = window_set(1, 3.0, 80);
    let model = LogisticModel::fit(&set, 0.01).unwrap();
    assert_eq!(model.accuracy(&set), 1.0);
}

#[test]
fn shuffled_labels_are_at_chance() {
    let mut accs = Vec::new();
    for seed in 0..20 {
        let mut set = window_set(seed, 1.0, 120);
        set.labels.shuffle(&mut seeded_rng(seed + 1000));
        accs.push(kfold_accuracy(&set, 5, 0.01).unwrap());
    }
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    assert!((0.35..=0.65).contains(&mean), "mean cv accuracy {mean}");
}

#[test]
fn gradient_matches_finite_differences() {
    let set = window_set(5, 0.7, 60);
    let model = LogisticModel::fit(&set, 0.01).unwrap();
    let z: Vec<Vec<f64>> = set.features.iter().map(|f| model.standardised(f)).collect();
    let mut rng = seeded_rng(8);
    let points = [model.weights.clone(), model.weights.iter().map(|w| w + rng.random_range(-0.5..0.5)).collect()];
    for w in &points {
        let g = gradient(w, &z, &set.labels, 0.01);
        let h = 1e-5;
        for j in 0..w.len() {
            let mut up = w.clone();
            let mut down = w.clone();
            up[j] += h;
            down[j] -= h;
            let fd = (objective(&up, &z, &set.labels, 0.01) - objective(&down, &z, &set.labels, 0.01)) / (2.0 * h);
            let scale = g[j].abs().max(fd.abs()).max(1e-3);
            assert!((g[j] - fd).abs() / scale < 1e-4, "component {j}: {} vs {fd}", g[j]);
        }
    }
    let at_fit = model.training_gradient(&set);
    assert!(at_fit.iter().all(|g| g.abs() < 1e-8));
}

#[test]
fn hbr_design_fits_too() {
    let layout = ProbeLayout::default();
    let spans = alternating_blocks(120.0, 15.0, 15.0, 5.0);
    let mut p = SynthProtocol::quiet(RATE, 120.0, 0);
    p.blocks = synth_blocks(&spans, "task");
    p.activation.insert("task".into(), vec![1.0; 23]);
    let s: HemoTimeSeries<f64> = synth_generate(&p, &layout).unwrap();
    let design = build_design(&events(&spans, "task"), RATE, 0.0, s.len(), 0).unwrap();
    let fit = fit_glm(&s, &design, Chromophore::Hbr).unwrap();
    assert!(fit.channels.iter().all(|c| (c.beta[0] + 1.0 / 3.0).abs() < 1e-9));
}
