//! Packing quantized time steps into RGB mosaic frames and back.

use crate::error::{Error, Result};
use crate::layout::{MosaicLayout, CHANNELS};
use crate::quant::QuantizedFrame;

/// Interleaved 8-bit RGB, row-major, no row padding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbFrame {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbFrame {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || width % 2 != 0 || height % 2 != 0 {
            return Err(Error::Contract(format!(
                "frame {width}x{height} must have non-zero even dimensions"
            )));
        }
        if data.len() != width * height * CHANNELS {
            return Err(Error::DimensionMismatch {
                what: "frame buffer",
                expected: format!("{} bytes", width * height * CHANNELS),
                actual: format!("{} bytes", data.len()),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        let data = rgb.repeat(width * height);
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, px: usize, py: usize) -> [u8; 3] {
        let i = (py * self.width + px) * CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, px: usize, py: usize, rgb: [u8; 3]) {
        let i = (py * self.width + px) * CHANNELS;
        self.data[i..i + CHANNELS].copy_from_slice(&rgb);
    }

    fn check_layout(&self, layout: &MosaicLayout) -> Result<()> {
        if (self.width, self.height) != (layout.frame_width, layout.frame_height) {
            return Err(Error::DimensionMismatch {
                what: "frame",
                expected: format!("{}x{}", layout.frame_width, layout.frame_height),
                actual: format!("{}x{}", self.width, self.height),
            });
        }
        Ok(())
    }
}

fn check_codes(codes: &QuantizedFrame, layout: &MosaicLayout) -> Result<()> {
    if (codes.z, codes.y, codes.x) != (layout.z, layout.y, layout.x) {
        return Err(Error::DimensionMismatch {
            what: "quantized volume",
            expected: format!("{}x{}x{}", layout.z, layout.y, layout.x),
            actual: format!("{}x{}x{}", codes.z, codes.y, codes.x),
        });
    }
    Ok(())
}

/// Writes every voxel code into its mosaic slot; all other samples hold `fill_code`.
pub fn pack_frame(codes: &QuantizedFrame, layout: &MosaicLayout) -> Result<RgbFrame> {
    check_codes(codes, layout)?;
    let mut data = vec![layout.fill_code; layout.frame_bytes()];
    let stride = layout.frame_width * CHANNELS;
    for zi in 0..layout.z {
        let origin = layout.tile_origin(zi);
        let c = origin.channel.index();
        for yi in 0..layout.y {
            let src = &codes.codes[(zi * layout.y + yi) * layout.x..][..layout.x];
            let row = (origin.py + yi) * stride + origin.px * CHANNELS + c;
            for (xi, &code) in src.iter().enumerate() {
                data[row + xi * CHANNELS] = code;
            }
        }
    }
    Ok(RgbFrame {
        width: layout.frame_width,
        height: layout.frame_height,
        data,
    })
}

/// Inverse of [`pack_frame`]; padding samples are ignored.
pub fn unpack_frame(frame: &RgbFrame, layout: &MosaicLayout) -> Result<QuantizedFrame> {
    frame.check_layout(layout)?;
    let mut out = QuantizedFrame::zeros(layout.z, layout.y, layout.x);
    let stride = layout.frame_width * CHANNELS;
    for zi in 0..layout.z {
        let origin = layout.tile_origin(zi);
        let c = origin.channel.index();
        for yi in 0..layout.y {
            let dst = &mut out.codes[(zi * layout.y + yi) * layout.x..][..layout.x];
            let row = (origin.py + yi) * stride + origin.px * CHANNELS + c;
            for (xi, code) in dst.iter_mut().enumerate() {
                *code = frame.data[row + xi * CHANNELS];
            }
        }
    }
    Ok(out)
}

/// Stamps `index` into the bottom-right pixel as little-endian (R, G, B).
///
/// Used by debug encodes so a client can verify which frame it displays.
/// The stamped pixel may overwrite a voxel when the frame has no padding.
pub fn stamp_frame_counter(frame: &mut RgbFrame, index: usize) {
    let (px, py) = (frame.width - 1, frame.height - 1);
    frame.set_pixel(
        px,
        py,
        [index as u8, (index >> 8) as u8, (index >> 16) as u8],
    );
}

pub fn read_frame_counter(frame: &RgbFrame) -> usize {
    let [r, g, b] = frame.pixel(frame.width - 1, frame.height - 1);
    usize::from(r) | usize::from(g) << 8 | usize::from(b) << 16
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn packs_three_slices_into_one_pixel() {
        let layout = MosaicLayout::compute(3, 1, 1, 0).unwrap();
        let codes = QuantizedFrame::new(3, 1, 1, vec![10, 20, 30]).unwrap();
        let frame = pack_frame(&codes, &layout).unwrap();
        assert_eq!((frame.width(), frame.height()), (2, 2));
        assert_eq!(frame.pixel(0, 0), [10, 20, 30]);
        assert_eq!(frame.pixel(1, 0), [0, 0, 0]);
        assert_eq!(frame.pixel(0, 1), [0, 0, 0]);
        assert_eq!(frame.pixel(1, 1), [0, 0, 0]);
        assert_eq!(unpack_frame(&frame, &layout).unwrap(), codes);
    }

    #[test]
    fn zero_codes_give_zero_frame() {
        let layout = MosaicLayout::compute(7, 5, 3, 0).unwrap();
        let frame = pack_frame(&QuantizedFrame::zeros(7, 5, 3), &layout).unwrap();
        assert!(frame.as_bytes().iter().all(|&b| b == 0));
        let zero = RgbFrame::filled(layout.frame_width, layout.frame_height, [0; 3]).unwrap();
        assert_eq!(
            unpack_frame(&zero, &layout).unwrap(),
            QuantizedFrame::zeros(7, 5, 3)
        );
    }

    #[test]
    fn fill_code_marks_unmapped_samples() {
        let layout = MosaicLayout::compute(4, 3, 3, 9).unwrap();
        let codes = QuantizedFrame::new(4, 3, 3, vec![200; 36]).unwrap();
        let frame = pack_frame(&codes, &layout).unwrap();
        for py in 0..layout.frame_height {
            for px in 0..layout.frame_width {
                for ch in crate::layout::Channel::ALL {
                    let v = frame.pixel(px, py)[ch.index()];
                    match layout.pixel_to_voxel(ch, px, py).unwrap() {
                        Some(_) => assert_eq!(v, 200),
                        None => assert_eq!(v, 9),
                    }
                }
            }
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let layout = MosaicLayout::compute(3, 2, 2, 0).unwrap();
        assert!(matches!(
            pack_frame(&QuantizedFrame::zeros(3, 2, 3), &layout),
            Err(Error::DimensionMismatch { .. })
        ));
        let wrong = RgbFrame::filled(4, 4, [0; 3]).unwrap();
        assert!(matches!(
            unpack_frame(&wrong, &layout),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn odd_frames_rejected() {
        assert!(RgbFrame::new(3, 2, vec![0; 18]).is_err());
        assert!(RgbFrame::new(2, 2, vec![0; 11]).is_err());
    }

    #[test]
    fn frame_counter_round_trip() {
        let mut f = RgbFrame::filled(4, 2, [1, 2, 3]).unwrap();
        stamp_frame_counter(&mut f, 70_000);
        assert_eq!(read_frame_counter(&f), 70_000);
        assert_eq!(f.pixel(0, 0), [1, 2, 3]);
    }

    fn volume() -> impl Strategy<Value = QuantizedFrame> {
        (1usize..=12, 1usize..=9, 1usize..=9).prop_flat_map(|(z, y, x)| {
            proptest::collection::vec(any::<u8>(), z * y * x)
                .prop_map(move |codes| QuantizedFrame::new(z, y, x, codes).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn pack_unpack_is_identity(codes in volume()) {
            let layout = MosaicLayout::compute(codes.z, codes.y, codes.x, 0).unwrap();
            let frame = pack_frame(&codes, &layout).unwrap();
            prop_assert_eq!(unpack_frame(&frame, &layout).unwrap(), codes);
        }
    }
}
