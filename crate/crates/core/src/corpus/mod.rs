//! Corpus ingestion, contour alignment to the feature grid, silence
//! filtering, normalization statistics, splits and the prepared dataset.

mod align;
mod io;
mod prepared;
mod split;
mod stats;

pub use align::{assign_segments, boundary_segments, filter_silences, interpolate_contours, SentenceSpan};
pub use io::{
    list_acquisitions, open_corpus, read_acquisition, read_contours_csv, read_corpus, read_segments_csv,
    write_acquisition, write_contours_csv, write_corpus, write_segments_csv, Corpus, PhonemeInventory, AUDIO_FILE,
    CONTOURS_FILE, PHONEMES_FILE, SEGMENTS_FILE, SILENCE_SYMBOLS,
};
pub use prepared::{
    align_acquisition, prepare_dataset, sha256_hex, AlignedAcquisition, AlignedSentence, DatasetHeader, PrepConfig,
    PrepCounts, PreparedDataset, PreparedSentence, PreparedStats, SentenceEntry, DATASET_FILE, SENTENCE_DIR,
    SPLIT_FILE, STATS_FILE, TARGET_DIM,
};
pub use split::{make_split, SplitManifest, SplitName, MIN_SPLIT_ACQUISITIONS};
pub use stats::{all_contour_norm_stats, contour_norm_stats, norm_window, ContourMoments, NORM_WINDOW};
