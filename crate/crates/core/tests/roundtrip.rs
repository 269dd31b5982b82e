use std::path::Path;

use volstream_core::codec::{self, COPY_LABEL, QUALITY_LADDER};
use volstream_core::container::{
    decode_codes, decode_dataset, encode_dataset, encode_dataset_with, EncodeOptions, MANIFEST_FILE,
};
use volstream_core::ingest::synthesize_field;
use volstream_core::metrics::{build_report, mae, max_abs_error, Variant};
use volstream_core::{Dims, Field4D, Media, QuantizedFrame, Quantizer};

fn direct_codes(field: &Field4D) -> Vec<QuantizedFrame> {
    let q = Quantizer::from_field(field);
    (0..field.dims().t)
        .map(|t| q.quantize_step(field, t))
        .collect()
}

fn quantization_only(field: &Field4D) -> Vec<f64> {
    let q = Quantizer::from_field(field);
    field
        .values()
        .iter()
        .map(|&v| q.dequantize(q.quantize(v)))
        .collect()
}

#[test]
fn png_round_trip_adds_no_error() {
    let dir = tempfile::tempdir().unwrap();
    let field = synthesize_field(11, Dims::new(3, 7, 10, 13), 3).unwrap();
    encode_dataset(&field, dir.path(), 10.0).unwrap();
    let manifest = dir.path().join(MANIFEST_FILE);

    let (_, codes) = decode_codes(&manifest).unwrap();
    assert_eq!(codes, direct_codes(&field));

    let decoded = decode_dataset(&manifest).unwrap();
    let q = Quantizer::from_field(&field);
    let expected = quantization_only(&field);
    assert_eq!(decoded.values(), &expected[..]);
    let bound = q.max_error() + 1e-9 * q.range();
    assert!(max_abs_error(field.values(), decoded.values()).unwrap() <= bound);
    assert_eq!(
        mae(field.values(), decoded.values()).unwrap(),
        mae(field.values(), &expected).unwrap()
    );
}

#[test]
fn decoding_uses_only_manifest_and_media() {
    let src = tempfile::tempdir().unwrap();
    let field = synthesize_field(4, Dims::new(2, 4, 6, 6), 1).unwrap();
    encode_dataset(&field, src.path(), 10.0).unwrap();

    let moved = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(src.path()).unwrap() {
        let p = entry.unwrap().path();
        std::fs::copy(&p, moved.path().join(p.file_name().unwrap())).unwrap();
    }
    drop(src);
    let decoded = decode_dataset(&moved.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(decoded.values(), &quantization_only(&field)[..]);
}

fn encode_with_preset(field: &Field4D, dir: &Path, label: &str) -> volstream_core::DatasetManifest {
    let opts = EncodeOptions {
        video: Some(codec::preset(label).unwrap().encoder),
        ..EncodeOptions::default()
    };
    encode_dataset_with(field, dir, &opts).unwrap()
}

#[test]
fn stub_video_matches_png_path() {
    let field = synthesize_field(2, Dims::new(5, 9, 12, 10), 2).unwrap();
    let png_dir = tempfile::tempdir().unwrap();
    let vid_dir = tempfile::tempdir().unwrap();
    encode_dataset(&field, png_dir.path(), 10.0).unwrap();
    let m = encode_with_preset(&field, vid_dir.path(), COPY_LABEL);
    assert_eq!(
        m.media,
        Media::Video {
            file: "video.rgb".into(),
            codec_label: COPY_LABEL.into()
        }
    );
    let frame_bytes = (m.layout.frame_width * m.layout.frame_height * 3 * 5) as u64;
    assert_eq!(
        std::fs::metadata(vid_dir.path().join("video.rgb"))
            .unwrap()
            .len(),
        frame_bytes
    );

    let (_, a) = decode_codes(&png_dir.path().join(MANIFEST_FILE)).unwrap();
    let (_, b) = decode_codes(&vid_dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        decode_dataset(&png_dir.path().join(MANIFEST_FILE)).unwrap(),
        decode_dataset(&vid_dir.path().join(MANIFEST_FILE)).unwrap()
    );
}

fn ffmpeg_ready() -> bool {
    let p = codec::preset(QUALITY_LADDER[0]).unwrap();
    if codec::preset_available(&p) {
        true
    } else {
        eprintln!("skipping: ffmpeg not available");
        false
    }
}

#[test]
fn real_encoder_compresses_smooth_field() {
    if !ffmpeg_ready() {
        return;
    }
    let field = synthesize_field(1, Dims::new(8, 12, 48, 48), 4).unwrap();
    let report = build_report(
        &field,
        &[
            Variant::RawF32,
            Variant::Video(QUALITY_LADDER[0].into()),
            Variant::Video(QUALITY_LADDER[1].into()),
        ],
    )
    .unwrap();
    let q = Quantizer::from_field(&field);
    let low = report.rows[1].measurement().expect("encoder present");
    let high = report.rows[2].measurement().expect("encoder present");
    let raw_frames = {
        let m = volstream_core::MosaicLayout::compute(12, 48, 48, 0).unwrap();
        (m.frame_bytes() * 8) as u64
    };
    assert!(low.byte_volume < raw_frames);
    assert!(low.mae <= 0.05 * q.range(), "mae {}", low.mae);
    assert!(low.byte_volume <= high.byte_volume);
}
