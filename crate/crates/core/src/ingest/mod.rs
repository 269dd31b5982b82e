//! Raw volume interchange and synthetic test fields.

mod raw;
mod synth;

pub use raw::{read_raw_dir, read_raw_volume, write_raw_dir, write_raw_volume, RawVolumeHeader};
pub use raw::{DATA_FILE, HEADER_FILE};
pub use synth::{synthesize_field, Blob, SplitMix64, SyntheticField};
