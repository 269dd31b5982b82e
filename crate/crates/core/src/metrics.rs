//! Data volume and error accounting across storage variants.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::codec::{self, CodecPreset};
use crate::container::{self, png_bytes, png_from_bytes};
use crate::error::{Error, Result};
use crate::field::Field4D;
use crate::frame::unpack_frame;
use crate::quant::QuantizedFrame;

pub const CSV_HEADER: &str = "label,byteVolume,mae,maxAbsError,ratioVsRaw";

/// Mean absolute difference of two equally long sequences.
pub fn mae(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    Ok(sum / a.len() as f64)
}

pub fn max_abs_error(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Contract(format!(
            "sequence lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Contract(
            "error metrics need at least one value".into(),
        ));
    }
    Ok(())
}

pub fn compression_ratio(original_bytes: f64, encoded_bytes: f64) -> Result<f64> {
    if encoded_bytes.is_nan() || encoded_bytes <= 0.0 {
        return Err(Error::Contract(format!(
            "encoded size must be positive, got {encoded_bytes}"
        )));
    }
    Ok(original_bytes / encoded_bytes)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Variant {
    RawF32,
    Quantized8,
    PngFrames,
    Video(String),
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::RawF32 => f.write_str("raw-f32"),
            Variant::Quantized8 => f.write_str("quantized-8bit"),
            Variant::PngFrames => f.write_str("png-frames"),
            Variant::Video(label) => write!(f, "video:{label}"),
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "raw-f32" => Ok(Variant::RawF32),
            "quantized-8bit" => Ok(Variant::Quantized8),
            "png-frames" => Ok(Variant::PngFrames),
            other => match other.strip_prefix("video:") {
                Some(label) if !label.is_empty() => {
                    codec::preset(label)?;
                    Ok(Variant::Video(label.to_owned()))
                }
                _ => Err(Error::Contract(format!(
                    "unknown variant {other:?}; expected raw-f32, quantized-8bit, png-frames or video:<label>"
                ))),
            },
        }
    }
}

/// Parses a comma-separated variant list.
pub fn parse_variants(list: &str) -> Result<Vec<Variant>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub byte_volume: u64,
    pub mae: f64,
    pub max_abs_error: f64,
    pub ratio_vs_raw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowOutcome {
    Measured(Measurement),
    Unavailable(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub label: String,
    pub outcome: RowOutcome,
}

impl ReportRow {
    pub fn measurement(&self) -> Option<&Measurement> {
        match &self.outcome {
            RowOutcome::Measured(m) => Some(m),
            RowOutcome::Unavailable(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodingReport {
    pub rows: Vec<ReportRow>,
}

impl EncodingReport {
    pub fn row(&self, label: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            match &r.outcome {
                RowOutcome::Measured(m) => out.push_str(&format!(
                    "{},{},{:e},{:e},{}\n",
                    r.label, m.byte_volume, m.mae, m.max_abs_error, m.ratio_vs_raw
                )),
                RowOutcome::Unavailable(_) => {
                    out.push_str(&format!("{},unavailable,,,\n", r.label))
                }
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let label_w = self
            .rows
            .iter()
            .map(|r| r.label.len())
            .max()
            .unwrap_or(0)
            .max(5);
        let mut out = format!(
            "{:<label_w$}  {:>14}  {:>11}  {:>11}  {:>10}\n",
            "label", "byte volume", "MAE", "max error", "ratio"
        );
        for r in &self.rows {
            match &r.outcome {
                RowOutcome::Measured(m) => out.push_str(&format!(
                    "{:<label_w$}  {:>14}  {:>11.3e}  {:>11.3e}  {:>9.1}:1\n",
                    r.label, m.byte_volume, m.mae, m.max_abs_error, m.ratio_vs_raw
                )),
                RowOutcome::Unavailable(why) => {
                    out.push_str(&format!("{:<label_w$}  tool unavailable: {why}\n", r.label))
                }
            }
        }
        out
    }
}

fn measure(field: &Field4D, decoded: &[f64], byte_volume: u64) -> Result<Measurement> {
    Ok(Measurement {
        byte_volume,
        mae: mae(field.values(), decoded)?,
        max_abs_error: max_abs_error(field.values(), decoded)?,
        ratio_vs_raw: compression_ratio(field.raw_f32_bytes() as f64, byte_volume as f64)?,
    })
}

/// Stores and reloads `field` through each variant, measuring size and error
/// against the original values. Video variants whose tool is missing yield an
/// [`RowOutcome::Unavailable`] row.
pub fn build_report(field: &Field4D, variants: &[Variant]) -> Result<EncodingReport> {
    let d = field.dims();
    let (q, layout, frames) = container::mosaic_frames(field)?;
    let dequantize = |codes: &[QuantizedFrame]| -> Vec<f64> {
        codes
            .iter()
            .flat_map(|f| f.codes.iter().map(|&c| q.dequantize(c)))
            .collect()
    };

    let mut rows = Vec::with_capacity(variants.len());
    for v in variants {
        let outcome = match v {
            Variant::RawF32 => {
                let decoded: Vec<f64> = field
                    .values()
                    .iter()
                    .map(|&x| f64::from(x as f32))
                    .collect();
                RowOutcome::Measured(measure(field, &decoded, field.raw_f32_bytes())?)
            }
            Variant::Quantized8 => {
                let codes: Vec<QuantizedFrame> =
                    (0..d.t).map(|t| q.quantize_step(field, t)).collect();
                RowOutcome::Measured(measure(field, &dequantize(&codes), d.len() as u64)?)
            }
            Variant::PngFrames => {
                let (bytes, codes): (Vec<u64>, Vec<QuantizedFrame>) = frames
                    .par_iter()
                    .map(|f| {
                        let png = png_bytes(f)?;
                        let back = png_from_bytes(&png)?;
                        Ok((png.len() as u64, unpack_frame(&back, &layout)?))
                    })
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .unzip();
                RowOutcome::Measured(measure(field, &dequantize(&codes), bytes.iter().sum())?)
            }
            Variant::Video(label) => {
                let preset = codec::preset(label)?;
                match run_video(
                    &preset,
                    frames.clone(),
                    layout.frame_width,
                    layout.frame_height,
                ) {
                    Ok((size, decoded)) => {
                        let codes = decoded
                            .iter()
                            .map(|f| unpack_frame(f, &layout))
                            .collect::<Result<Vec<_>>>()?;
                        RowOutcome::Measured(measure(field, &dequantize(&codes), size)?)
                    }
                    Err(e) if e.is_environment() => RowOutcome::Unavailable(e.to_string()),
                    Err(e) => return Err(e),
                }
            }
        };
        rows.push(ReportRow {
            label: v.to_string(),
            outcome,
        });
    }
    Ok(EncodingReport { rows })
}

fn run_video(
    preset: &CodecPreset,
    frames: Vec<crate::frame::RgbFrame>,
    width: usize,
    height: usize,
) -> Result<(u64, Vec<crate::frame::RgbFrame>)> {
    let n = frames.len();
    let dir = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
    let path = dir
        .path()
        .join(format!("video.{}", preset.encoder.extension));
    let stats = codec::encode_video(frames, &preset.encoder, container::DEFAULT_FPS, &path)?;
    let decoded = codec::decode_video(&path, &preset.decoder, width, height, n)?;
    Ok((stats.output_bytes, decoded))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Dims;
    use crate::ingest::synthesize_field;

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mae(&[0.0, 1.0], &[0.5, 0.5]).unwrap(), 0.5);
        assert_eq!(mae(&[1.0, 2.0, 3.0], &[1.0, 3.0, 5.0]).unwrap(), 1.0);
        assert!(mae(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mae(&[], &[]).is_err());
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(compression_ratio(5.0e9, 12.5e6).unwrap(), 400.0);
        assert_eq!(compression_ratio(77.0, 77.0).unwrap(), 1.0);
        assert_eq!(compression_ratio(1000.0, 250.0).unwrap(), 4.0);
        assert!(compression_ratio(10.0, 0.0).is_err());
    }

    #[test]
    fn variant_parsing() {
        assert_eq!(
            parse_variants("raw-f32, quantized-8bit,png-frames,video:theora-q2").unwrap(),
            vec![
                Variant::RawF32,
                Variant::Quantized8,
                Variant::PngFrames,
                Variant::Video("theora-q2".into())
            ]
        );
        assert!(parse_variants("video:vp9").is_err());
        assert!(parse_variants("jpeg").is_err());
    }

    #[test]
    fn raw_row_and_lossless_png() {
        let field = synthesize_field(5, Dims::new(4, 6, 16, 16), 3).unwrap();
        let report = build_report(
            &field,
            &[Variant::RawF32, Variant::Quantized8, Variant::PngFrames],
        )
        .unwrap();
        let raw = report.row("raw-f32").unwrap().measurement().unwrap();
        assert_eq!(raw.byte_volume, 24576);
        assert_eq!(raw.mae, 0.0);
        let q = report.row("quantized-8bit").unwrap().measurement().unwrap();
        assert_eq!(q.byte_volume * 4, raw.byte_volume);
        let p = report.row("png-frames").unwrap().measurement().unwrap();
        assert_eq!(p.mae, q.mae);
        assert_eq!(p.max_abs_error, q.max_abs_error);
        assert!(p.byte_volume < q.byte_volume);
    }

    #[test]
    fn csv_shape() {
        let report = EncodingReport {
            rows: vec![
                ReportRow {
                    label: "raw-f32".into(),
                    outcome: RowOutcome::Measured(Measurement {
                        byte_volume: 8,
                        mae: 0.0,
                        max_abs_error: 0.0,
                        ratio_vs_raw: 1.0,
                    }),
                },
                ReportRow {
                    label: "video:x264".into(),
                    outcome: RowOutcome::Unavailable("no ffmpeg".into()),
                },
            ],
        };
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "raw-f32,8,0e0,0e0,1");
        assert_eq!(lines[2], "video:x264,unavailable,,,");
        assert!(report.to_text().contains("tool unavailable"));
    }
}
