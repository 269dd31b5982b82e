//! Dataset encoding: a `manifest.json` plus one mosaic frame per time step.

use std::fs;
use std::io::{BufReader, BufWriter, Cursor, Read, Seek, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{self, DecoderSpec, EncoderSpec};
use crate::error::{Error, Result};
use crate::field::{Dims, Field4D};
use crate::frame::{pack_frame, stamp_frame_counter, unpack_frame, RgbFrame};
use crate::layout::MosaicLayout;
use crate::quant::{QuantizedFrame, Quantizer};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;
pub const DEFAULT_FPS: f64 = 10.0;
pub const FILL_CODE: u8 = 0;
/// DEFLATE level used for frame PNGs.
pub const PNG_LEVEL: u8 = 6;

pub fn frame_file_name(t: usize) -> String {
    format!("frame_{t:06}.png")
}

/// Layout fields a client needs to locate voxels; z, y, x come from `dims`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LayoutEcho {
    pub slices_per_channel: usize,
    pub grid_cols: usize,
    pub grid_rows: usize,
    pub frame_width: usize,
    pub frame_height: usize,
    pub fill_code: u8,
}

impl From<&MosaicLayout> for LayoutEcho {
    fn from(l: &MosaicLayout) -> Self {
        Self {
            slices_per_channel: l.slices_per_channel,
            grid_cols: l.grid_cols,
            grid_rows: l.grid_rows,
            frame_width: l.frame_width,
            frame_height: l.frame_height,
            fill_code: l.fill_code,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Media {
    Frames {
        files: Vec<String>,
    },
    Video {
        file: String,
        #[serde(rename = "codecLabel")]
        codec_label: String,
    },
}

impl Media {
    pub fn files(&self) -> Vec<&str> {
        match self {
            Media::Frames { files } => files.iter().map(String::as_str).collect(),
            Media::Video { file, .. } => vec![file.as_str()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DatasetManifest {
    pub version: u32,
    pub name: String,
    #[serde(default)]
    pub units: String,
    pub dims: Dims,
    pub vmin: f64,
    pub vmax: f64,
    pub layout: LayoutEcho,
    pub fps: f64,
    pub media: Media,
    pub nan_count: u64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub debug_frame_counter: bool,
}

fn is_plain_file_name(name: &str) -> bool {
    !name.is_empty() && name != "." && name != ".." && !name.contains(['/', '\\', '\0'])
}

impl DatasetManifest {
    pub fn quantizer(&self) -> Result<Quantizer> {
        Quantizer::new(self.vmin, self.vmax)
    }

    pub fn mosaic_layout(&self) -> Result<MosaicLayout> {
        let d = self.dims;
        let layout = MosaicLayout::compute(d.z, d.y, d.x, self.layout.fill_code)?;
        if LayoutEcho::from(&layout) != self.layout {
            return Err(Error::InvalidManifest(format!(
                "layout {:?} does not match the layout recomputed from dims {d}: {:?}",
                self.layout,
                LayoutEcho::from(&layout)
            )));
        }
        Ok(layout)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(Error::InvalidManifest(format!(
                "unsupported version {}",
                self.version
            )));
        }
        self.dims
            .validate()
            .map_err(|e| Error::InvalidManifest(e.to_string()))?;
        self.quantizer()
            .map_err(|e| Error::InvalidManifest(e.to_string()))?;
        self.mosaic_layout()?;
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::InvalidManifest(format!(
                "fps {} must be positive",
                self.fps
            )));
        }
        if let Media::Frames { files } = &self.media {
            if files.len() != self.dims.t {
                return Err(Error::InvalidManifest(format!(
                    "{} frame files listed for {} time steps",
                    files.len(),
                    self.dims.t
                )));
            }
        }
        if let Some(bad) = self
            .media
            .files()
            .into_iter()
            .find(|f| !is_plain_file_name(f))
        {
            return Err(Error::InvalidManifest(format!(
                "media file {bad:?} must be a plain file name"
            )));
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let manifest: Self = serde_json::from_str(text).map_err(|e| Error::Json {
            path: path.to_owned(),
            source: e,
        })?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Settings for [`encode_dataset_with`].
#[derive(Debug, Clone)]
pub struct EncodeOptions {
    pub fps: f64,
    /// Stamp each frame's index into its bottom-right pixel.
    pub debug_frame_counter: bool,
    /// Encode through an external video codec instead of writing PNG frames.
    pub video: Option<EncoderSpec>,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        Self {
            fps: DEFAULT_FPS,
            debug_frame_counter: false,
            video: None,
        }
    }
}

/// Quantizes `field` with one global scale and packs every time step into a mosaic.
pub fn mosaic_frames(field: &Field4D) -> Result<(Quantizer, MosaicLayout, Vec<RgbFrame>)> {
    let d = field.dims();
    let q = Quantizer::from_field(field);
    let layout = MosaicLayout::compute(d.z, d.y, d.x, FILL_CODE)?;
    let frames = (0..d.t)
        .into_par_iter()
        .map(|t| pack_frame(&q.quantize_step(field, t), &layout))
        .collect::<Result<Vec<_>>>()?;
    Ok((q, layout, frames))
}

/// Writes one PNG per time step plus `manifest.json` into `out_dir`.
pub fn encode_dataset(field: &Field4D, out_dir: &Path, fps: f64) -> Result<DatasetManifest> {
    encode_dataset_with(
        field,
        out_dir,
        &EncodeOptions {
            fps,
            ..EncodeOptions::default()
        },
    )
}

pub fn encode_dataset_with(
    field: &Field4D,
    out_dir: &Path,
    opts: &EncodeOptions,
) -> Result<DatasetManifest> {
    if !(opts.fps.is_finite() && opts.fps > 0.0) {
        return Err(Error::Contract(format!(
            "fps must be positive, got {}",
            opts.fps
        )));
    }
    let (q, layout, mut frames) = mosaic_frames(field)?;
    if opts.debug_frame_counter {
        for (t, f) in frames.iter_mut().enumerate() {
            stamp_frame_counter(f, t);
        }
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let media = match &opts.video {
        None => {
            let files: Vec<String> = (0..frames.len()).map(frame_file_name).collect();
            frames
                .par_iter()
                .zip(&files)
                .try_for_each(|(f, name)| write_frame_pixels(f, &out_dir.join(name)))?;
            Media::Frames { files }
        }
        Some(spec) => {
            let file = format!("video.{}", spec.extension);
            codec::encode_video(frames, spec, opts.fps, &out_dir.join(&file))?;
            Media::Video {
                file,
                codec_label: spec.label.clone(),
            }
        }
    };

    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        name: field.name.clone(),
        units: field.units.clone(),
        dims: field.dims(),
        vmin: q.vmin,
        vmax: q.vmax,
        layout: LayoutEcho::from(&layout),
        fps: opts.fps,
        media,
        nan_count: field.non_finite_replaced,
        debug_frame_counter: opts.debug_frame_counter,
    };
    manifest.validate()?;
    manifest.write(&out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// Reads the frames a manifest points at, checking them against its layout.
pub fn load_frames(
    manifest: &DatasetManifest,
    dir: &Path,
    decoder: Option<&DecoderSpec>,
) -> Result<Vec<RgbFrame>> {
    let layout = manifest.mosaic_layout()?;
    let (w, h) = (layout.frame_width, layout.frame_height);
    match &manifest.media {
        Media::Frames { files } => files
            .par_iter()
            .map(|name| {
                let path = dir.join(name);
                if !path.is_file() {
                    return Err(Error::MissingMedia { path });
                }
                let frame = read_frame_pixels(&path)?;
                if (frame.width(), frame.height()) != (w, h) {
                    return Err(Error::FrameDimensions {
                        path,
                        expected: format!("{w}x{h}"),
                        actual: format!("{}x{}", frame.width(), frame.height()),
                    });
                }
                Ok(frame)
            })
            .collect(),
        Media::Video { file, codec_label } => {
            let path = dir.join(file);
            if !path.is_file() {
                return Err(Error::MissingMedia { path });
            }
            let owned;
            let spec = match decoder {
                Some(s) => s,
                None => {
                    owned = codec::preset(codec_label)?.decoder;
                    &owned
                }
            };
            codec::decode_video(&path, spec, w, h, manifest.dims.t)
        }
    }
}

/// Quantized codes for every time step, exactly as stored.
pub fn decode_codes(manifest_path: &Path) -> Result<(DatasetManifest, Vec<QuantizedFrame>)> {
    decode_codes_with(manifest_path, None)
}

pub fn decode_codes_with(
    manifest_path: &Path,
    decoder: Option<&DecoderSpec>,
) -> Result<(DatasetManifest, Vec<QuantizedFrame>)> {
    let manifest = DatasetManifest::read(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let layout = manifest.mosaic_layout()?;
    let codes = load_frames(&manifest, dir, decoder)?
        .par_iter()
        .map(|f| unpack_frame(f, &layout))
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, codes))
}

/// Dequantized field reconstructed from the manifest and its media alone.
pub fn decode_dataset(manifest_path: &Path) -> Result<Field4D> {
    decode_dataset_with(manifest_path, None)
}

pub fn decode_dataset_with(manifest_path: &Path, decoder: Option<&DecoderSpec>) -> Result<Field4D> {
    let (manifest, codes) = decode_codes_with(manifest_path, decoder)?;
    let q = manifest.quantizer()?;
    let field = dequantize_frames(&q, manifest.dims, &codes, &manifest.name, &manifest.units)?;
    Ok(field)
}

pub fn dequantize_frames(
    q: &Quantizer,
    dims: Dims,
    codes: &[QuantizedFrame],
    name: &str,
    units: &str,
) -> Result<Field4D> {
    let values = codes
        .iter()
        .flat_map(|f| f.codes.iter().map(|&c| q.dequantize(c)))
        .collect();
    Field4D::new(dims, values, name, units)
}

/// Encodes a frame as 8-bit RGB PNG, DEFLATE level 6, non-interlaced.
pub fn encode_png(frame: &RgbFrame, w: impl Write) -> std::result::Result<(), png::EncodingError> {
    let mut enc = png::Encoder::new(w, frame.width() as u32, frame.height() as u32);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    enc.set_deflate_compression(png::DeflateCompression::Level(PNG_LEVEL));
    let mut writer = enc.write_header()?;
    writer.write_image_data(frame.as_bytes())?;
    writer.finish()
}

/// Decodes an 8-bit RGB PNG; any other colour type or depth is rejected.
pub fn decode_png<R: Read + Seek>(r: R, origin: &Path) -> Result<RgbFrame> {
    let corrupt = |reason: String| Error::CorruptMedia {
        path: origin.to_owned(),
        reason,
    };
    let mut decoder = png::Decoder::new(BufReader::new(r));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(|e| corrupt(e.to_string()))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedFormat(format!(
            "{}: {:?} at {:?} bits; frames must be 8-bit RGB",
            origin.display(),
            info.color_type,
            info.bit_depth
        )));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| corrupt("image too large".into()))?;
    let mut buf = vec![0; size];
    let out = reader
        .next_frame(&mut buf)
        .map_err(|e| corrupt(e.to_string()))?;
    buf.truncate(out.buffer_size());
    RgbFrame::new(out.width as usize, out.height as usize, buf).map_err(|e| corrupt(e.to_string()))
}

pub fn write_frame_pixels(frame: &RgbFrame, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    encode_png(frame, &mut w).map_err(|e| match e {
        png::EncodingError::IoError(io) => Error::io(path, io),
        other => Error::CorruptMedia {
            path: path.to_owned(),
            reason: other.to_string(),
        },
    })?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_frame_pixels(path: &Path) -> Result<RgbFrame> {
    let file = fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingMedia {
            path: path.to_owned(),
        },
        _ => Error::io(path, e),
    })?;
    decode_png(file, path)
}

/// PNG bytes of a frame, for in-memory size accounting.
pub fn png_bytes(frame: &RgbFrame) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    encode_png(frame, &mut out).map_err(|e| Error::CorruptMedia {
        path: PathBuf::from("<memory>"),
        reason: e.to_string(),
    })?;
    Ok(out)
}

pub fn png_from_bytes(bytes: &[u8]) -> Result<RgbFrame> {
    decode_png(Cursor::new(bytes), Path::new("<memory>"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::synthesize_field;

    fn write_png(
        path: &Path,
        w: u32,
        h: u32,
        color: png::ColorType,
        depth: png::BitDepth,
        data: &[u8],
    ) {
        let mut enc = png::Encoder::new(fs::File::create(path).unwrap(), w, h);
        enc.set_color(color);
        enc.set_depth(depth);
        enc.write_header().unwrap().write_image_data(data).unwrap();
    }

    #[test]
    fn png_round_trip_is_pixel_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.png");
        let frame = RgbFrame::new(2, 2, (0..12).map(|i| i * 20).collect()).unwrap();
        write_frame_pixels(&frame, &path).unwrap();
        assert_eq!(read_frame_pixels(&path).unwrap(), frame);
    }

    #[test]
    fn sixteen_bit_and_grayscale_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let deep = dir.path().join("deep.png");
        write_png(
            &deep,
            2,
            2,
            png::ColorType::Rgb,
            png::BitDepth::Sixteen,
            &[0; 24],
        );
        assert!(matches!(
            read_frame_pixels(&deep),
            Err(Error::UnsupportedFormat(_))
        ));

        let grey = dir.path().join("grey.png");
        write_png(
            &grey,
            2,
            2,
            png::ColorType::Grayscale,
            png::BitDepth::Eight,
            &[0; 4],
        );
        assert!(matches!(
            read_frame_pixels(&grey),
            Err(Error::UnsupportedFormat(_))
        ));

        let rgba = dir.path().join("rgba.png");
        write_png(
            &rgba,
            2,
            2,
            png::ColorType::Rgba,
            png::BitDepth::Eight,
            &[0; 16],
        );
        assert!(matches!(
            read_frame_pixels(&rgba),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn garbage_is_corrupt_media() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.png");
        fs::write(&path, b"not a png").unwrap();
        assert!(matches!(
            read_frame_pixels(&path),
            Err(Error::CorruptMedia { .. })
        ));
    }

    #[test]
    fn manifest_for_small_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let field = synthesize_field(3, Dims::new(4, 6, 16, 16), 2).unwrap();
        let m = encode_dataset(&field, dir.path(), DEFAULT_FPS).unwrap();
        assert_eq!(
            m.media,
            Media::Frames {
                files: (0..4).map(frame_file_name).collect()
            }
        );
        assert_eq!(m.layout.slices_per_channel, 2);
        assert_eq!((m.layout.grid_cols, m.layout.grid_rows), (2, 1));
        assert_eq!((m.layout.frame_width, m.layout.frame_height), (32, 16));
        assert_eq!(m.fps, 10.0);
        assert!(dir.path().join("frame_000003.png").is_file());

        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap())
                .unwrap();
        for key in [
            "version", "name", "dims", "vmin", "vmax", "layout", "fps", "media", "nanCount",
        ] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json["media"]["kind"], "frames");
        assert_eq!(json["layout"]["slicesPerChannel"], 2);
        assert_eq!(
            DatasetManifest::read(&dir.path().join(MANIFEST_FILE)).unwrap(),
            m
        );
    }

    #[test]
    fn constant_field_gives_black_frames() {
        let dir = tempfile::tempdir().unwrap();
        let field = Field4D::new(Dims::new(2, 3, 2, 2), vec![4.5; 24], "c", "").unwrap();
        let m = encode_dataset(&field, dir.path(), DEFAULT_FPS).unwrap();
        assert_eq!((m.vmin, m.vmax), (4.5, 4.5));
        for name in m.media.files() {
            let f = read_frame_pixels(&dir.path().join(name)).unwrap();
            assert!(f.as_bytes().iter().all(|&b| b == 0));
        }
        let back = decode_dataset(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert!(back.values().iter().all(|&v| v == 4.5));
    }

    #[test]
    fn missing_frame_named() {
        let dir = tempfile::tempdir().unwrap();
        let field = synthesize_field(1, Dims::new(4, 3, 4, 4), 1).unwrap();
        encode_dataset(&field, dir.path(), DEFAULT_FPS).unwrap();
        fs::remove_file(dir.path().join("frame_000002.png")).unwrap();
        match decode_dataset(&dir.path().join(MANIFEST_FILE)) {
            Err(Error::MissingMedia { path }) => assert!(path.ends_with("frame_000002.png")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tampered_frame_dims_detected() {
        let dir = tempfile::tempdir().unwrap();
        let field = synthesize_field(1, Dims::new(2, 3, 4, 4), 1).unwrap();
        encode_dataset(&field, dir.path(), DEFAULT_FPS).unwrap();
        let f = RgbFrame::filled(6, 4, [1, 2, 3]).unwrap();
        write_frame_pixels(&f, &dir.path().join("frame_000001.png")).unwrap();
        assert!(matches!(
            decode_dataset(&dir.path().join(MANIFEST_FILE)),
            Err(Error::FrameDimensions { .. })
        ));
    }

    #[test]
    fn manifest_invariants_enforced() {
        let dir = tempfile::tempdir().unwrap();
        let field = synthesize_field(1, Dims::new(2, 3, 4, 4), 1).unwrap();
        let good = encode_dataset(&field, dir.path(), DEFAULT_FPS).unwrap();

        let mut m = good.clone();
        m.media = Media::Frames {
            files: vec![frame_file_name(0)],
        };
        assert!(m.validate().is_err());

        let mut m = good.clone();
        m.layout.grid_cols += 1;
        assert!(m.validate().is_err());

        let mut m = good.clone();
        std::mem::swap(&mut m.vmin, &mut m.vmax);
        m.vmin += 1.0;
        assert!(m.validate().is_err());

        let mut m = good.clone();
        m.media = Media::Video {
            file: "../escape.mp4".into(),
            codec_label: "x264".into(),
        };
        assert!(m.validate().is_err());
    }

    #[test]
    fn debug_counter_stamps_frame_index() {
        let dir = tempfile::tempdir().unwrap();
        let field = synthesize_field(1, Dims::new(5, 3, 3, 3), 1).unwrap();
        let opts = EncodeOptions {
            debug_frame_counter: true,
            ..EncodeOptions::default()
        };
        let m = encode_dataset_with(&field, dir.path(), &opts).unwrap();
        assert!(m.debug_frame_counter);
        let frames = load_frames(&m, dir.path(), None).unwrap();
        for (t, f) in frames.iter().enumerate() {
            assert_eq!(crate::frame::read_frame_counter(f), t);
        }
    }
}
