//! Streaming time-dependent 3D scalar fields as video.
//!
//! Each time step is quantized to 8-bit codes with one global scale, its z
//! slices are tiled into a mosaic whose red, green and blue channels carry
//! consecutive thirds of the volume, and the resulting frames are stored as
//! PNGs or piped through an external video encoder. A JSON manifest carries
//! everything a client needs to invert the mapping.

pub mod codec;
pub mod container;
pub mod error;
pub mod field;
pub mod fixture;
pub mod frame;
pub mod ingest;
pub mod layout;
pub mod metrics;
pub mod quant;

pub use container::{decode_dataset, encode_dataset, DatasetManifest, Media};
pub use error::{Error, Result};
pub use field::{Dims, Field4D};
pub use frame::{pack_frame, unpack_frame, RgbFrame};
pub use layout::{Channel, MosaicLayout, PixelSlot};
pub use metrics::{build_report, EncodingReport, Variant};
pub use quant::{QuantizedFrame, Quantizer};
