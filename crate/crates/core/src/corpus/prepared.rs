use std::collections::BTreeMap;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::align::{filter_silences, interpolate_contours};
use super::io::{open_corpus, read_acquisition, PhonemeInventory};
use super::split::{make_split, SplitManifest, SplitName};
use super::stats::{all_contour_norm_stats, ContourMoments};
use crate::contour::{flatten_contour, Acquisition, CONTOUR_DIM, FEATURE_DIM};
use crate::dsp::norm::MomentAccumulator;
use crate::dsp::{
    extract_features, read_aaif_file, stack_context, write_aaif_file, AaifMatrix, ContextConfig, DimStats, DspConfig,
};
use crate::error::{AaiError, Result};
use crate::neural::Tensor2;
use crate::par::ordered_map;

pub const DATASET_FILE: &str = "dataset.json";
pub const SPLIT_FILE: &str = "split.json";
pub const STATS_FILE: &str = "stats.json";
pub const SENTENCE_DIR: &str = "sentences";
pub const DATASET_FORMAT: &str = "aai-prepared";
pub const DATASET_VERSION: u32 = 1;
/// Normalized contour, phoneme index, frame time.
pub const TARGET_DIM: usize = CONTOUR_DIM + 2;

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedSentence {
    /// Frame indices into the acquisition's feature grid.
    pub frames: Range<usize>,
    /// Interpolated contours, flattened, in pixels.
    pub contours: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

/// One acquisition's features with its sentences cut out and contours
/// resampled onto the feature grid.
#[derive(Debug, Clone)]
pub struct AlignedAcquisition {
    pub id: String,
    /// Raw 39-dim features for every frame.
    pub features: Vec<Vec<f64>>,
    pub frame_times: Vec<f64>,
    pub sentences: Vec<AlignedSentence>,
    pub dropped_silence: usize,
    pub dropped_outside_contours: usize,
}

pub fn align_acquisition(acq: &Acquisition, dsp: &DspConfig) -> Result<AlignedAcquisition> {
    let frames = extract_features(&acq.audio.samples, acq.audio.sample_rate_hz, dsp)?;
    let frame_times: Vec<f64> = frames.iter().map(|f| f.t_s).collect();
    let features: Vec<Vec<f64>> = frames.iter().map(|f| f.to_vec()).collect();
    let spans = filter_silences(&frame_times, &acq.segments).map_err(|e| match e {
        AaiError::Coverage { t_s } => {
            AaiError::parse(&acq.id, format!("frame at {t_s:.4} s is not covered by any segment"))
        }
        other => other,
    })?;
    let span_frames: usize = spans.iter().map(|s| s.frames.len()).sum();
    let (t0, t1) = match (acq.contours.first(), acq.contours.last()) {
        (Some(a), Some(b)) if acq.contours.len() >= 2 => (a.timestamp_s, b.timestamp_s),
        _ => return Err(AaiError::parse(&acq.id, "fewer than 2 contours")),
    };
    let mut sentences = Vec::new();
    let mut kept = 0;
    for span in spans {
        let inside: Vec<usize> = span
            .frames
            .clone()
            .filter(|&j| (t0..=t1).contains(&frame_times[j]))
            .collect();
        let (Some(&first), Some(&last)) = (inside.first(), inside.last()) else {
            continue;
        };
        let frames = first..last + 1;
        let grid = &frame_times[frames.clone()];
        let contours = interpolate_contours(&acq.contours, grid)?
            .iter()
            .map(flatten_contour)
            .collect();
        let labels = frames
            .clone()
            .map(|j| acq.segments[span.segments[j - span.frames.start]].label.index())
            .collect();
        kept += frames.len();
        sentences.push(AlignedSentence {
            frames,
            contours,
            labels,
        });
    }
    Ok(AlignedAcquisition {
        id: acq.id.clone(),
        dropped_silence: features.len() - span_frames,
        dropped_outside_contours: span_frames - kept,
        features,
        frame_times,
        sentences,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepCounts {
    pub acquisitions: usize,
    pub sentences: usize,
    pub frames_total: usize,
    pub frames_kept: usize,
    pub frames_discarded_silence: usize,
    pub frames_discarded_outside_contours: usize,
    pub train_acquisitions: usize,
    pub validation_acquisitions: usize,
    pub test_acquisitions: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceEntry {
    pub id: String,
    pub acquisition: String,
    pub split: SplitName,
    pub frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub version: u32,
    pub context: usize,
    pub feature_dim: usize,
    pub target_dim: usize,
    pub seed: u64,
    /// SHA-256 of `stats.json`.
    pub stats_hash: String,
    pub dsp: DspConfig,
    pub phonemes: Vec<String>,
    pub counts: PrepCounts,
    pub sentences: Vec<SentenceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedStats {
    /// 39-dim feature statistics over the kept training frames.
    pub features: DimStats,
    /// Per-acquisition contour statistics over the ±30 acquisition window.
    pub contours: BTreeMap<String, DimStats>,
}

#[derive(Debug, Clone)]
pub struct PrepConfig {
    pub context: ContextConfig,
    pub seed: u64,
    pub dsp: DspConfig,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| AaiError::Format(e.to_string()))?;
    bytes.push(b'\n');
    fs::write(path, &bytes).map_err(|e| AaiError::io(path, e))?;
    Ok(bytes)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<(T, Vec<u8>)> {
    let bytes = fs::read(path).map_err(|e| AaiError::io(path, e))?;
    let v = serde_json::from_slice(&bytes).map_err(|e| AaiError::parse(path, e.to_string()))?;
    Ok((v, bytes))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn sentence_id(acq: &str, k: usize) -> String {
    format!("{acq}_{k:03}")
}

/// First pass: statistics only, one acquisition at a time.
struct Summary {
    contours: ContourMoments,
    features: MomentAccumulator,
    total: usize,
    kept: usize,
    silence: usize,
    outside: usize,
    sentences: usize,
}

fn summarize(acq: &Acquisition, dsp: &DspConfig) -> Result<Summary> {
    let aligned = align_acquisition(acq, dsp)?;
    let mut features = MomentAccumulator::default();
    for s in &aligned.sentences {
        for j in s.frames.clone() {
            features.push(&aligned.features[j])?;
        }
    }
    Ok(Summary {
        contours: ContourMoments::from_contours(&acq.contours)?,
        features,
        total: aligned.features.len(),
        kept: aligned.sentences.iter().map(|s| s.frames.len()).sum(),
        silence: aligned.dropped_silence,
        outside: aligned.dropped_outside_contours,
        sentences: aligned.sentences.len(),
    })
}

fn collect_diagnostics<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    let mut ok = Vec::with_capacity(results.len());
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => errors.push(e.to_string()),
        }
    }
    if errors.is_empty() {
        Ok(ok)
    } else {
        Err(AaiError::Diagnostics(errors))
    }
}

/// Stacked, normalized features and 102-dim targets for one sentence.
fn sentence_matrices(
    aligned: &AlignedAcquisition,
    stacked: &[Vec<f64>],
    s: &AlignedSentence,
    contour_stats: &DimStats,
) -> Result<(AaifMatrix, AaifMatrix)> {
    let feat = AaifMatrix::from_rows(&stacked[s.frames.clone()])?;
    let targets = s
        .contours
        .iter()
        .zip(&s.labels)
        .zip(s.frames.clone())
        .map(|((c, &label), j)| {
            let mut row = contour_stats.normalize_row(c)?;
            row.push(label as f64);
            row.push(aligned.frame_times[j]);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((feat, AaifMatrix::from_rows(&targets)?))
}

/// Reads a corpus and writes the prepared dataset to `out`.
pub fn prepare_dataset(corpus_dir: &Path, out: &Path, cfg: &PrepConfig) -> Result<DatasetHeader> {
    cfg.dsp.validate()?;
    let (phonemes, ids) = open_corpus(corpus_dir)?;
    let split = make_split(&ids, cfg.seed)?;

    let summaries = collect_diagnostics(ordered_map(&ids, |id| {
        read_acquisition(corpus_dir, id, &phonemes).and_then(|a| summarize(&a, &cfg.dsp))
    }))?;
    let mut feature_acc = MomentAccumulator::default();
    for (id, s) in ids.iter().zip(&summaries) {
        if split.split_of(id) == Some(SplitName::Train) {
            feature_acc.merge(&s.features)?;
        }
    }
    if feature_acc.count() == 0 {
        return Err(AaiError::EmptyInput("training split has no speech frames".into()));
    }
    let feature_stats = feature_acc.finish()?;
    let moments: Vec<ContourMoments> = summaries.iter().map(|s| s.contours.clone()).collect();
    let contour_stats = all_contour_norm_stats(&moments)?;
    let stats = PreparedStats {
        features: feature_stats,
        contours: ids.iter().cloned().zip(contour_stats).collect(),
    };

    let sentence_dir = out.join(SENTENCE_DIR);
    fs::create_dir_all(&sentence_dir).map_err(|e| AaiError::io(&sentence_dir, e))?;
    let stats_bytes = write_json(&out.join(STATS_FILE), &stats)?;
    write_json(&out.join(SPLIT_FILE), &split)?;

    let entries = collect_diagnostics(ordered_map(&ids, |id| -> Result<Vec<SentenceEntry>> {
        let acq = read_acquisition(corpus_dir, id, &phonemes)?;
        let aligned = align_acquisition(&acq, &cfg.dsp)?;
        let normalized = stats.features.normalize(&aligned.features)?;
        let stacked = stack_context(&normalized, cfg.context)?;
        let split_name = split.split_of(id).expect("every id is in the split");
        aligned
            .sentences
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let sid = sentence_id(id, k);
                let (feat, tgt) = sentence_matrices(&aligned, &stacked, s, &stats.contours[id])?;
                write_aaif_file(&sentence_dir.join(format!("{sid}.feat")), &feat)?;
                write_aaif_file(&sentence_dir.join(format!("{sid}.tgt")), &tgt)?;
                Ok(SentenceEntry {
                    id: sid,
                    acquisition: id.clone(),
                    split: split_name,
                    frames: s.frames.len(),
                })
            })
            .collect()
    }))?;
    let sentences: Vec<SentenceEntry> = entries.into_iter().flatten().collect();

    let counts = PrepCounts {
        acquisitions: ids.len(),
        sentences: sentences.len(),
        frames_total: summaries.iter().map(|s| s.total).sum(),
        frames_kept: summaries.iter().map(|s| s.kept).sum(),
        frames_discarded_silence: summaries.iter().map(|s| s.silence).sum(),
        frames_discarded_outside_contours: summaries.iter().map(|s| s.outside).sum(),
        train_acquisitions: split.train.len(),
        validation_acquisitions: split.validation.len(),
        test_acquisitions: split.test.len(),
    };
    debug_assert_eq!(counts.sentences, summaries.iter().map(|s| s.sentences).sum::<usize>());
    if counts.frames_discarded_outside_contours > 0 {
        log::warn!(
            "dropped {} frames outside the contour time span",
            counts.frames_discarded_outside_contours
        );
    }
    let header = DatasetHeader {
        format: DATASET_FORMAT.into(),
        version: DATASET_VERSION,
        context: cfg.context.window_frames(),
        feature_dim: cfg.context.stacked_dim(),
        target_dim: TARGET_DIM,
        seed: cfg.seed,
        stats_hash: sha256_hex(&stats_bytes),
        dsp: cfg.dsp.clone(),
        phonemes: phonemes.symbols().to_vec(),
        counts,
        sentences,
    };
    write_json(&out.join(DATASET_FILE), &header)?;
    Ok(header)
}

/// A sentence loaded back from a prepared dataset.
#[derive(Debug, Clone)]
pub struct PreparedSentence {
    pub id: String,
    pub acquisition: String,
    /// Frames by 39·W.
    pub features: Tensor2,
    /// Frames by 100, normalized.
    pub contours: Tensor2,
    pub labels: Vec<usize>,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PreparedDataset {
    pub dir: PathBuf,
    pub header: DatasetHeader,
    pub split: SplitManifest,
    pub stats: PreparedStats,
}

impl PreparedDataset {
    pub fn open(dir: &Path) -> Result<Self> {
        let (header, _): (DatasetHeader, _) = read_json(&dir.join(DATASET_FILE))?;
        if header.format != DATASET_FORMAT || header.version != DATASET_VERSION {
            return Err(AaiError::Format(format!(
                "{} is not a version {DATASET_VERSION} prepared dataset",
                dir.display()
            )));
        }
        let (split, _) = read_json(&dir.join(SPLIT_FILE))?;
        let (stats, bytes): (PreparedStats, _) = read_json(&dir.join(STATS_FILE))?;
        if sha256_hex(&bytes) != header.stats_hash {
            return Err(AaiError::Format(
                "stats.json does not match the dataset header hash".into(),
            ));
        }
        if header.feature_dim != FEATURE_DIM * header.context || stats.features.dim() != FEATURE_DIM {
            return Err(AaiError::Format("dataset dimensions are inconsistent".into()));
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            header,
            split,
            stats,
        })
    }

    pub fn context(&self) -> Result<ContextConfig> {
        ContextConfig::new(self.header.context)
    }

    pub fn phonemes(&self) -> Result<PhonemeInventory> {
        PhonemeInventory::new(self.header.phonemes.clone())
    }

    pub fn entries(&self, split: SplitName) -> impl Iterator<Item = &SentenceEntry> {
        self.header.sentences.iter().filter(move |s| s.split == split)
    }

    pub fn entry(&self, id: &str) -> Result<&SentenceEntry> {
        self.header
            .sentences
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| AaiError::UnknownId(format!("sentence {id:?}")))
    }

    pub fn contour_stats(&self, acquisition: &str) -> Result<&DimStats> {
        self.stats
            .contours
            .get(acquisition)
            .ok_or_else(|| AaiError::UnknownId(format!("acquisition {acquisition:?}")))
    }

    pub fn load_sentence(&self, id: &str) -> Result<PreparedSentence> {
        let entry = self.entry(id)?;
        let dir = self.dir.join(SENTENCE_DIR);
        let feat = read_aaif_file(&dir.join(format!("{id}.feat")))?;
        let tgt = read_aaif_file(&dir.join(format!("{id}.tgt")))?;
        if feat.dim != self.header.feature_dim
            || tgt.dim != TARGET_DIM
            || feat.frames != tgt.frames
            || feat.frames != entry.frames
        {
            return Err(AaiError::Shape(format!(
                "sentence {id}: feature {}x{} / target {}x{} disagree with the header ({} frames, {} dims)",
                feat.frames, feat.dim, tgt.frames, tgt.dim, entry.frames, self.header.feature_dim
            )));
        }
        let mut contours = Tensor2::zeros(tgt.frames, CONTOUR_DIM);
        let mut labels = Vec::with_capacity(tgt.frames);
        let mut times = Vec::with_capacity(tgt.frames);
        for (r, row) in tgt.rows().enumerate() {
            contours.row_mut(r).copy_from_slice(&row[..CONTOUR_DIM]);
            labels.push(row[CONTOUR_DIM] as usize);
            times.push(row[CONTOUR_DIM + 1]);
        }
        Ok(PreparedSentence {
            id: id.to_string(),
            acquisition: entry.acquisition.clone(),
            features: Tensor2::from_vec(feat.frames, feat.dim, feat.data)?,
            contours,
            labels,
            times,
        })
    }

    pub fn load_split(&self, split: SplitName) -> Result<Vec<PreparedSentence>> {
        let ids: Vec<String> = self.entries(split).map(|e| e.id.clone()).collect();
        collect_diagnostics(ordered_map(&ids, |id| self.load_sentence(id)))
    }
}
