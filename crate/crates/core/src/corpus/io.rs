use std::fs;
use std::path::{Path, PathBuf};

use crate::contour::{
    flatten_contour, Acquisition, PhonemeLabel, SegmentInterval, TongueContour, CONTOUR_DIM, N_PHONEMES,
};
use crate::dsp::{read_wav, write_wav};
use crate::error::{AaiError, Result};

pub const AUDIO_FILE: &str = "audio.wav";
pub const CONTOURS_FILE: &str = "contours.csv";
pub const SEGMENTS_FILE: &str = "segments.csv";
pub const PHONEMES_FILE: &str = "phonemes.txt";

/// Symbols treated as silence when reading a phoneme inventory.
pub const SILENCE_SYMBOLS: [&str; 4] = ["sil", "#", "_", "pau"];

/// The 43 phoneme symbols; line order gives the class index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhonemeInventory {
    symbols: Vec<String>,
}

impl PhonemeInventory {
    pub fn new(symbols: Vec<String>) -> Result<Self> {
        if symbols.len() != N_PHONEMES {
            return Err(AaiError::InvalidValue(format!(
                "phoneme inventory has {} symbols, expected {N_PHONEMES}",
                symbols.len()
            )));
        }
        for (i, s) in symbols.iter().enumerate() {
            if s.is_empty() || s.chars().any(char::is_whitespace) {
                return Err(AaiError::InvalidValue(format!(
                    "phoneme {i} has an invalid symbol {s:?}"
                )));
            }
            if symbols[..i].contains(s) {
                return Err(AaiError::InvalidValue(format!("phoneme {s:?} listed twice")));
            }
        }
        Ok(Self { symbols })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| AaiError::io(path, e))?;
        let symbols = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect();
        Self::new(symbols).map_err(|e| AaiError::parse(path, e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = self.symbols.join("\n");
        text.push('\n');
        fs::write(path, text).map_err(|e| AaiError::io(path, e))
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn is_silence_symbol(symbol: &str) -> bool {
        SILENCE_SYMBOLS.contains(&symbol)
    }

    pub fn label(&self, index: usize) -> Result<PhonemeLabel> {
        let sym = self
            .symbols
            .get(index)
            .ok_or_else(|| AaiError::OutOfRange(format!("phoneme index {index}")))?;
        PhonemeLabel::new(index, Self::is_silence_symbol(sym))
    }

    pub fn label_of(&self, symbol: &str) -> Result<PhonemeLabel> {
        let i = self
            .symbols
            .iter()
            .position(|s| s == symbol)
            .ok_or_else(|| AaiError::UnknownId(format!("phoneme symbol {symbol:?}")))?;
        self.label(i)
    }

    pub fn symbol(&self, label: PhonemeLabel) -> &str {
        &self.symbols[label.index()]
    }
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub phonemes: PhonemeInventory,
    /// Sorted by id.
    pub acquisitions: Vec<Acquisition>,
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| AaiError::parse(path, e.to_string()))
}

/// Records of a CSV file, skipping a header row when its first field is not numeric.
fn csv_records(path: &Path) -> Result<Vec<csv::StringRecord>> {
    let mut out = Vec::new();
    for (i, rec) in csv_reader(path)?.records().enumerate() {
        let rec = rec.map_err(|e| AaiError::parse(path, e.to_string()))?;
        if i == 0 && rec.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        out.push(rec);
    }
    Ok(out)
}

fn field_f64(path: &Path, line: usize, rec: &csv::StringRecord, i: usize) -> Result<f64> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
        AaiError::parse(
            path,
            format!("row {line}, column {}: not a finite number: {raw:?}", i + 1),
        )
    })
}

pub fn read_contours_csv(path: &Path) -> Result<Vec<TongueContour>> {
    csv_records(path)?
        .iter()
        .enumerate()
        .map(|(line, rec)| {
            if rec.len() != CONTOUR_DIM + 1 {
                return Err(AaiError::parse(
                    path,
                    format!("row {}: {} fields, expected {}", line + 1, rec.len(), CONTOUR_DIM + 1),
                ));
            }
            let t = field_f64(path, line + 1, rec, 0)?;
            let flat = (1..=CONTOUR_DIM)
                .map(|i| field_f64(path, line + 1, rec, i))
                .collect::<Result<Vec<_>>>()?;
            TongueContour::from_flat(&flat, t)
        })
        .collect()
}

fn parse_flag(raw: &str) -> Option<bool> {
    match raw.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Some(true),
        "0" | "false" | "no" => Some(false),
        _ => None,
    }
}

pub fn read_segments_csv(path: &Path, phonemes: &PhonemeInventory) -> Result<Vec<SegmentInterval>> {
    csv_records(path)?
        .iter()
        .enumerate()
        .map(|(line, rec)| {
            if rec.len() != 4 {
                return Err(AaiError::parse(
                    path,
                    format!("row {}: {} fields, expected 4", line + 1, rec.len()),
                ));
            }
            let start = field_f64(path, line + 1, rec, 0)?;
            let end = field_f64(path, line + 1, rec, 1)?;
            let label = phonemes
                .label_of(&rec[2])
                .map_err(|e| AaiError::parse(path, format!("row {}: {e}", line + 1)))?;
            let inter = parse_flag(&rec[3])
                .ok_or_else(|| AaiError::parse(path, format!("row {}: bad inter flag {:?}", line + 1, &rec[3])))?;
            SegmentInterval::new(start, end, label, inter).map_err(|e| AaiError::parse(path, e.to_string()))
        })
        .collect()
}

/// Subdirectory names of `root`, sorted lexicographically.
pub fn list_acquisitions(root: &Path) -> Result<Vec<String>> {
    let mut ids = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| AaiError::io(root, e))? {
        let entry = entry.map_err(|e| AaiError::io(root, e))?;
        if entry.file_type().map_err(|e| AaiError::io(entry.path(), e))?.is_dir() {
            ids.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    ids.sort();
    Ok(ids)
}

pub fn read_acquisition(root: &Path, id: &str, phonemes: &PhonemeInventory) -> Result<Acquisition> {
    let dir = root.join(id);
    let audio = read_wav(&dir.join(AUDIO_FILE))?;
    let contours = read_contours_csv(&dir.join(CONTOURS_FILE))?;
    let segments = read_segments_csv(&dir.join(SEGMENTS_FILE), phonemes)?;
    Acquisition::new(id.to_string(), audio, contours, segments).map_err(|e| AaiError::parse(dir, e.to_string()))
}

/// Reads `phonemes.txt` and the ids of every acquisition, checking that each
/// acquisition has its three files.
pub fn open_corpus(root: &Path) -> Result<(PhonemeInventory, Vec<String>)> {
    let phonemes = PhonemeInventory::read(&root.join(PHONEMES_FILE))?;
    let ids = list_acquisitions(root)?;
    if ids.is_empty() {
        return Err(AaiError::EmptyInput(format!("{} has no acquisitions", root.display())));
    }
    let missing: Vec<String> = ids
        .iter()
        .flat_map(|id| {
            [AUDIO_FILE, CONTOURS_FILE, SEGMENTS_FILE]
                .into_iter()
                .map(move |f| root.join(id).join(f))
        })
        .filter(|p| !p.is_file())
        .map(|p: PathBuf| format!("{}: missing", p.display()))
        .collect();
    if !missing.is_empty() {
        return Err(AaiError::Diagnostics(missing));
    }
    Ok((phonemes, ids))
}

/// Loads every acquisition, reporting all failing files at once.
pub fn read_corpus(root: &Path) -> Result<Corpus> {
    let (phonemes, ids) = open_corpus(root)?;
    let mut acquisitions = Vec::with_capacity(ids.len());
    let mut errors = Vec::new();
    for id in &ids {
        match read_acquisition(root, id, &phonemes) {
            Ok(a) => acquisitions.push(a),
            Err(e) => errors.push(e.to_string()),
        }
    }
    if !errors.is_empty() {
        return Err(AaiError::Diagnostics(errors));
    }
    Ok(Corpus { phonemes, acquisitions })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| AaiError::parse(path, e.to_string()))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> AaiError + '_ {
    move |e| AaiError::parse(path, e.to_string())
}

pub fn write_contours_csv(path: &Path, contours: &[TongueContour]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["t_s".to_string()];
    header.extend((0..CONTOUR_DIM / 2).map(|i| format!("x{i}")));
    header.extend((0..CONTOUR_DIM / 2).map(|i| format!("y{i}")));
    w.write_record(&header).map_err(csv_err(path))?;
    for c in contours {
        let mut row = vec![c.timestamp_s.to_string()];
        row.extend(flatten_contour(c).iter().map(f64::to_string));
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| AaiError::io(path, e))
}

pub fn write_segments_csv(path: &Path, segments: &[SegmentInterval], phonemes: &PhonemeInventory) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["start_s", "end_s", "phoneme", "inter"])
        .map_err(csv_err(path))?;
    for s in segments {
        w.write_record([
            s.start_s.to_string(),
            s.end_s.to_string(),
            phonemes.symbol(s.label).to_string(),
            u8::from(s.inter).to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| AaiError::io(path, e))
}

pub fn write_acquisition(root: &Path, acq: &Acquisition, phonemes: &PhonemeInventory) -> Result<()> {
    let dir = root.join(&acq.id);
    fs::create_dir_all(&dir).map_err(|e| AaiError::io(&dir, e))?;
    write_wav(&dir.join(AUDIO_FILE), &acq.audio)?;
    write_contours_csv(&dir.join(CONTOURS_FILE), &acq.contours)?;
    write_segments_csv(&dir.join(SEGMENTS_FILE), &acq.segments, phonemes)
}

pub fn write_corpus(root: &Path, corpus: &Corpus) -> Result<()> {
    fs::create_dir_all(root).map_err(|e| AaiError::io(root, e))?;
    corpus.phonemes.write(&root.join(PHONEMES_FILE))?;
    corpus
        .acquisitions
        .iter()
        .try_for_each(|a| write_acquisition(root, a, &corpus.phonemes))
}
