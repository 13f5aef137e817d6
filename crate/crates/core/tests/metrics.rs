use anonbench_core::metrics::{
    compute_auc, compute_eer, cosine_similarity, read_embeddings, read_labeled_scores, read_scores, reference_embed,
    LabeledScores, MetricsError, ScoreSet,
};
use anonbench_core::signal::synth::{formant_pole, resonator_signal, Excitation};
use anonbench_core::stats::{mann_whitney_u, MwMode};
use anonbench_core::Waveform64;
use rand::{Rng, SeedableRng};

/// FAR and FRR at every candidate threshold, including both extremes.
fn sweep(s: &ScoreSet<f64>) -> Vec<(f64, f64)> {
    let mut ts: Vec<f64> = s.genuine.iter().chain(&s.impostor).copied().collect();
    ts.push(f64::INFINITY);
    ts.push(f64::NEG_INFINITY);
    ts.iter()
        .map(|&t| {
            let far = s.impostor.iter().filter(|&&v| v >= t).count() as f64 / s.impostor.len() as f64;
            let frr = s.genuine.iter().filter(|&&v| v < t).count() as f64 / s.genuine.len() as f64;
            (far, frr)
        })
        .collect()
}

#[test]
fn eer_is_bracketed_by_the_sweep() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(1);
    for _ in 0..500 {
        let g: Vec<f64> = (0..rng.random_range(1..15)).map(|_| (rng.random_range(0..30) as f64) / 10.0 + 0.5).collect();
        let i: Vec<f64> = (0..rng.random_range(1..15)).map(|_| (rng.random_range(0..30) as f64) / 10.0).collect();
        let s = ScoreSet { genuine: g, impostor: i };
        let e = compute_eer(&s).unwrap().eer;
        let pts = sweep(&s);
        let upper = pts.iter().map(|(a, b)| a.max(*b)).fold(f64::INFINITY, f64::min);
        let lower = pts.iter().map(|(a, b)| a.min(*b)).fold(f64::NEG_INFINITY, f64::max);
        assert!(e <= upper + 1e-12 && e >= lower - 1e-12, "{e} not in [{lower}, {upper}] for {s:?}");
    }
}

#[test]
fn separable_and_identical() {
    let sep = ScoreSet { genuine: vec![0.9, 0.8, 0.95], impostor: vec![0.1, 0.2, 0.3, 0.15] };
    assert_eq!(compute_eer(&sep).unwrap().eer, 0.0);
    let v: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
    assert!((compute_eer(&ScoreSet { genuine: v.clone(), impostor: v.clone() }).unwrap().eer - 0.5).abs() < 1e-12);
    let labels: Vec<bool> = (0..20).map(|i| i < 10).collect();
    let scores: Vec<f64> = v.iter().chain(&v).copied().collect();
    assert_eq!(compute_auc(&LabeledScores { scores, labels }).unwrap(), 0.5);
}

#[test]
fn eer_invariant_under_monotone_maps() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(2);
    let s = ScoreSet {
        genuine: (0..40).map(|_| rng.random::<f64>() * 0.8 + 0.3).collect(),
        impostor: (0..60).map(|_| rng.random::<f64>() * 0.8).collect(),
    };
    let base = compute_eer(&s).unwrap().eer;
    for k in 0..20 {
        let a = 0.5 + k as f64;
        let c = rng.random::<f64>() * 3.0 - 1.5;
        let f = |x: f64| match k % 4 {
            0 => a * x + c,
            1 => (a * x).exp(),
            2 => (x + 2.0).ln() * a + c,
            _ => (a * x).tanh() + x.powi(3),
        };
        let t = ScoreSet {
            genuine: s.genuine.iter().map(|&x| f(x)).collect(),
            impostor: s.impostor.iter().map(|&x| f(x)).collect(),
        };
        assert!((compute_eer(&t).unwrap().eer - base).abs() < 1e-12, "transform {k}");
    }
    let swapped = ScoreSet {
        genuine: s.impostor.iter().map(|x| -x).collect(),
        impostor: s.genuine.iter().map(|x| -x).collect(),
    };
    assert!((compute_eer(&swapped).unwrap().eer - base).abs() < 0.02);
}

/// Trapezoidal area under the ROC curve traced by descending thresholds.
fn trapezoid_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let pos = labels.iter().filter(|&&l| l).count() as f64;
    let neg = labels.len() as f64 - pos;
    let mut ts: Vec<f64> = scores.to_vec();
    ts.sort_by(|a, b| b.partial_cmp(a).unwrap());
    ts.dedup();
    let (mut fpr0, mut tpr0, mut area) = (0.0, 0.0, 0.0);
    for t in ts {
        let tp = scores.iter().zip(labels).filter(|(&s, &l)| l && s >= t).count() as f64;
        let fp = scores.iter().zip(labels).filter(|(&s, &l)| !l && s >= t).count() as f64;
        let (fpr, tpr) = (fp / neg, tp / pos);
        area += (fpr - fpr0) * (tpr + tpr0) / 2.0;
        fpr0 = fpr;
        tpr0 = tpr;
    }
    area
}

#[test]
fn auc_matches_trapezoid_and_mann_whitney() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(3);
    for _ in 0..100 {
        let n = rng.random_range(4..40);
        let labels: Vec<bool> = (0..n).map(|i| i % 3 == 0 || rng.random::<bool>()).collect();
        if labels.iter().all(|&l| l) {
            continue;
        }
        let scores: Vec<f64> = labels
            .iter()
            .map(|&l| (rng.random_range(0..12) as f64) / 4.0 + if l { 0.7 } else { 0.0 })
            .collect();
        let data = LabeledScores { scores: scores.clone(), labels: labels.clone() };
        let auc = compute_auc(&data).unwrap();
        assert!((auc - trapezoid_auc(&scores, &labels)).abs() < 1e-12);
        let pos: Vec<f64> = scores.iter().zip(&labels).filter(|(_, &l)| l).map(|(&s, _)| s).collect();
        let neg: Vec<f64> = scores.iter().zip(&labels).filter(|(_, &l)| !l).map(|(&s, _)| s).collect();
        let u = mann_whitney_u(&pos, &neg, MwMode::NormalApprox).unwrap();
        assert!((auc - u.u_x / (pos.len() * neg.len()) as f64).abs() < 1e-12);
        let flipped = LabeledScores { scores: scores.iter().map(|s| -s).collect(), labels: labels.clone() };
        if pos.iter().all(|p| !neg.contains(p)) {
            assert!((auc + compute_auc(&flipped).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn embedder_orders_speakers() {
    let make = |f1: f64, f2: f64, f0: f64| -> Waveform64 {
        let poles = [formant_pole(f1, 80.0, 16000), formant_pole(f2, 110.0, 16000), formant_pole(2900.0, 150.0, 16000)];
        resonator_signal(&poles, Excitation::Pulses { f0 }, 12000, 16000, 0.5).unwrap()
    };
    let a = reference_embed(&make(700.0, 1200.0, 110.0)).unwrap();
    let a2 = reference_embed(&make(700.0, 1200.0, 110.0)).unwrap();
    let b = reference_embed(&make(300.0, 2300.0, 220.0)).unwrap();
    let self_sim = cosine_similarity(&a, &a2).unwrap();
    assert!((self_sim - 1.0).abs() < 1e-12);
    assert!(cosine_similarity(&a, &b).unwrap() < self_sim);
}

#[test]
fn csv_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let emb = dir.path().join("e.csv");
    std::fs::write(&emb, "utterance_id,v0,v1,v2\nu1,1,0,0\nu2,0.5,0.5,0\n").unwrap();
    let e = read_embeddings::<f64>(&emb).unwrap();
    assert_eq!(e.len(), 2);
    assert!((cosine_similarity(&e[0], &e[1]).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);

    let sc = dir.path().join("s.csv");
    std::fs::write(&sc, "trial_id,kind,score\nt1,genuine,0.9\nt2,impostor,0.1\nt3,genuine,0.8\n").unwrap();
    let s = read_scores::<f64>(&sc).unwrap();
    assert_eq!((s.genuine.len(), s.impostor.len()), (2, 1));
    assert_eq!(compute_eer(&s).unwrap().eer, 0.0);

    let lab = dir.path().join("l.csv");
    std::fs::write(&lab, "utterance_id,score,label\na,0.9,1\nb,0.2,0\n").unwrap();
    assert_eq!(compute_auc(&read_labeled_scores::<f64>(&lab).unwrap()).unwrap(), 1.0);

    std::fs::write(&sc, "trial_id,kind,score\nt1,other,0.9\n").unwrap();
    assert!(matches!(read_scores::<f64>(&sc), Err(MetricsError::Parse { .. })));
    std::fs::write(&emb, "utterance_id,v0,v1\nu1,1,0\nu2,1\n").unwrap();
    assert!(read_embeddings::<f64>(&emb).is_err());
}
