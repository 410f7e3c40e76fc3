//! Segments, archives and the preprocessing that turns them into network
//! inputs and training supervision.

mod archive;
mod cmvn;
mod pad;
mod pairs;
mod segment;
mod synth;
mod vocab;

pub use archive::{
    archive_to_bytes, load_archive, read_archive, save_archive, write_archive, ARCHIVE_MAGIC,
};
pub use cmvn::{cmvn_normalize, MIN_VARIANCE};
pub use pad::{pad_segment, OverflowPolicy, PadConfig};
pub use pairs::{
    extract_same_pairs, sample_different_pairs, sample_triplets, PairSet, Triplet, TripletBatch,
};
pub use segment::{Segment, SegmentArchive};
pub use synth::{synth_generate, SynthConfig, SynthCorpus};
pub use vocab::{vocab_filter, Vocabulary};
