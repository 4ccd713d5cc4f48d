use std::fs;
use std::path::Path;

use aai_core::contour::{flatten_contour, CONTOUR_DIM, FEATURE_DIM};
use aai_core::corpus::{read_corpus, PreparedDataset, SplitName};
use aai_core::dsp::read_aaif_file;
use aai_core::eval::ErrorMetric;
use aai_core::models::Variant;
use aai_core::pipeline::{cmd_eval, cmd_prep, cmd_train, EvalArgs, TrainArgs};
use aai_core::synth::{generate, SynthConfig};
use aai_core::AaiError;

fn small_synth(dir: &Path, n: usize, seed: u64) -> SynthConfig {
    let cfg = SynthConfig {
        n_acquisitions: n,
        sentences_per_acquisition: 2,
        seed,
        ..SynthConfig::default()
    };
    generate(&cfg, dir).unwrap();
    cfg
}

#[test]
fn synthetic_corpus_reads_back_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = SynthConfig {
        n_acquisitions: 4,
        sentences_per_acquisition: 2,
        ..SynthConfig::default()
    };
    let written = generate(&cfg, tmp.path()).unwrap();
    let read = read_corpus(tmp.path()).unwrap();
    assert_eq!(read.acquisitions.len(), 4);
    assert_eq!(read.phonemes.symbols(), written.phonemes.symbols());
    for (a, b) in written.acquisitions.iter().zip(&read.acquisitions) {
        assert_eq!(a.id, b.id);
        assert_eq!(a.segments, b.segments);
        assert_eq!(a.contours.len(), b.contours.len());
        for (ca, cb) in a.contours.iter().zip(&b.contours) {
            assert_eq!(flatten_contour(ca), flatten_contour(cb));
            assert_eq!(ca.timestamp_s, cb.timestamp_s);
        }
        // 16-bit PCM
        assert_eq!(a.audio.samples.len(), b.audio.samples.len());
        let worst = a
            .audio
            .samples
            .iter()
            .zip(&b.audio.samples)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1.0 / 32768.0, "{worst}");
    }
}

#[test]
fn prepared_sentences_follow_the_documented_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let (corpus, out) = (tmp.path().join("c"), tmp.path().join("d"));
    small_synth(&corpus, 10, 1);
    let header = cmd_prep(&corpus, &out, 5, 0).unwrap();
    assert_eq!(header.feature_dim, 5 * FEATURE_DIM);
    assert_eq!(header.target_dim, CONTOUR_DIM + 2);
    assert_eq!(header.counts.acquisitions, 10);
    assert_eq!(header.counts.sentences, 20);
    assert_eq!(
        header.counts.frames_total,
        header.counts.frames_kept
            + header.counts.frames_discarded_silence
            + header.counts.frames_discarded_outside_contours
    );

    let ds = PreparedDataset::open(&out).unwrap();
    let kept: usize = ds.header.sentences.iter().map(|s| s.frames).sum();
    assert_eq!(kept, header.counts.frames_kept);
    for entry in &ds.header.sentences {
        let s = ds.load_sentence(&entry.id).unwrap();
        assert_eq!(s.features.shape(), (entry.frames, 5 * FEATURE_DIM));
        assert_eq!(s.contours.shape(), (entry.frames, CONTOUR_DIM));
        assert!(s.labels.iter().all(|&l| l < 43));
        for w in s.times.windows(2) {
            assert!((w[1] - w[0] - 0.01).abs() < 1e-6, "frames of a sentence are contiguous");
        }
        let raw = read_aaif_file(&out.join(format!("sentences/{}.tgt", entry.id))).unwrap();
        assert_eq!(raw.dim, CONTOUR_DIM + 2);
        // de-normalized contours land back inside the image
        let stats = ds.contour_stats(&s.acquisition).unwrap();
        for r in 0..s.contours.rows() {
            let px = stats.denormalize_row(s.contours.row(r)).unwrap();
            assert!(px.iter().all(|v| (0.0..=136.0).contains(v)));
        }
    }
}

#[test]
fn training_features_are_standardized() {
    let tmp = tempfile::tempdir().unwrap();
    let (corpus, out) = (tmp.path().join("c"), tmp.path().join("d"));
    small_synth(&corpus, 10, 2);
    cmd_prep(&corpus, &out, 3, 0).unwrap();
    let ds = PreparedDataset::open(&out).unwrap();
    let train = ds.load_split(SplitName::Train).unwrap();
    // the centre block of each stacked vector is the frame itself
    let rows: Vec<&[f64]> = train
        .iter()
        .flat_map(|s| (0..s.features.rows()).map(move |r| &s.features.row(r)[FEATURE_DIM..2 * FEATURE_DIM]))
        .collect();
    let n = rows.len() as f64;
    for d in 0..FEATURE_DIM {
        let mean = rows.iter().map(|r| r[d]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[d] - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-5, "dim {d}: mean {mean}");
        assert!((var.sqrt() - 1.0).abs() < 1e-5, "dim {d}: std {}", var.sqrt());
    }
}

#[test]
fn tampered_stats_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let (corpus, out) = (tmp.path().join("c"), tmp.path().join("d"));
    small_synth(&corpus, 10, 3);
    cmd_prep(&corpus, &out, 1, 0).unwrap();
    let path = out.join("stats.json");
    let mut text = fs::read_to_string(&path).unwrap();
    text.push(' ');
    fs::write(&path, text).unwrap();
    assert!(matches!(PreparedDataset::open(&out), Err(AaiError::Format(_))));
}

#[test]
fn evaluation_is_repeatable_and_covers_the_test_split() {
    let tmp = tempfile::tempdir().unwrap();
    let (corpus, out) = (tmp.path().join("c"), tmp.path().join("d"));
    small_synth(&corpus, 10, 4);
    cmd_prep(&corpus, &out, 3, 0).unwrap();
    let mut args = TrainArgs::new(out.clone(), tmp.path().join("m"), Variant::Mt);
    args.epochs = 2;
    args.width = 12;
    args.hidden = 8;
    let summary = cmd_train(&args).unwrap();
    assert_eq!(summary.epochs_run, 2);

    let eval = |dir: &str| {
        cmd_eval(&EvalArgs {
            dataset: out.clone(),
            checkpoint: tmp.path().join("m/model.ckpt"),
            ae_checkpoint: None,
            split: SplitName::Test,
            out: tmp.path().join(dir),
            mm_per_pixel: 1.6131,
            metric: ErrorMetric::CoordinateRmse,
        })
        .unwrap()
    };
    let (a, b) = (eval("e1"), eval("e2"));
    assert_eq!(a.to_json(), b.to_json());
    let ds = PreparedDataset::open(&out).unwrap();
    let test_frames: usize = ds.entries(SplitName::Test).map(|e| e.frames).sum();
    assert_eq!(a.frames, test_frames);
    assert!(a.acc_percent.is_some());
    assert_eq!(
        fs::read(tmp.path().join("e1/frames.csv")).unwrap(),
        fs::read(tmp.path().join("e2/frames.csv")).unwrap()
    );
}

#[test]
fn latent_variant_needs_an_autoencoder() {
    let tmp = tempfile::tempdir().unwrap();
    let (corpus, out) = (tmp.path().join("c"), tmp.path().join("d"));
    small_synth(&corpus, 10, 5);
    cmd_prep(&corpus, &out, 1, 0).unwrap();
    let mut args = TrainArgs::new(out.clone(), tmp.path().join("m"), Variant::StAe);
    args.epochs = 1;
    args.width = 8;
    args.hidden = 4;
    assert!(matches!(cmd_train(&args), Err(AaiError::Config(_))));

    args.train_ae = true;
    let s = cmd_train(&args).unwrap();
    assert_eq!(s.arch, "ST_AE");
    assert!(tmp.path().join("m/autoencoder.ckpt").is_file());
    let report = cmd_eval(&EvalArgs {
        dataset: out,
        checkpoint: tmp.path().join("m/model.ckpt"),
        ae_checkpoint: None,
        split: SplitName::Validation,
        out: tmp.path().join("e"),
        mm_per_pixel: 1.6131,
        metric: ErrorMetric::PointDistance,
    })
    .unwrap();
    assert!(report.acc_percent.is_none());
    assert!(report.rmse_mm.mean.is_finite());
}
