//! Mosaic layout: where each voxel of a time step lands in an RGB frame.
//!
//! The z axis is split into three contiguous runs of `slices_per_channel`
//! slices carried by the red, green and blue channels. Within a channel the
//! slices are tiled row by row on a near-square grid. Frames are padded to
//! even width and height; padding and unused tiles hold `fill_code`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CHANNELS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    R = 0,
    G = 1,
    B = 2,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::R, Channel::G, Channel::B];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MosaicLayout {
    pub z: usize,
    pub y: usize,
    pub x: usize,
    pub slices_per_channel: usize,
    pub grid_cols: usize,
    pub grid_rows: usize,
    pub frame_width: usize,
    pub frame_height: usize,
    pub fill_code: u8,
}

/// Where a voxel is stored in the frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PixelSlot {
    pub channel: Channel,
    pub px: usize,
    pub py: usize,
}

fn ceil_sqrt(n: usize) -> usize {
    let r = n.isqrt();
    if r * r == n {
        r
    } else {
        r + 1
    }
}

fn round_up_even(n: usize) -> Option<usize> {
    n.checked_add(n & 1)
}

impl MosaicLayout {
    pub fn compute(z: usize, y: usize, x: usize, fill_code: u8) -> Result<Self> {
        if z == 0 || y == 0 || x == 0 {
            return Err(Error::EmptyDims(format!("{z}x{y}x{x}")));
        }
        let oversize = || Error::Oversize { z, y, x };
        let slices_per_channel = z.div_ceil(CHANNELS);
        let grid_cols = ceil_sqrt(slices_per_channel);
        let grid_rows = slices_per_channel.div_ceil(grid_cols);
        let frame_width = grid_cols
            .checked_mul(x)
            .and_then(round_up_even)
            .ok_or_else(oversize)?;
        let frame_height = grid_rows
            .checked_mul(y)
            .and_then(round_up_even)
            .ok_or_else(oversize)?;
        // frames are addressed by u32 in image formats and allocated as one buffer
        if u32::try_from(frame_width).is_err()
            || u32::try_from(frame_height).is_err()
            || frame_width
                .checked_mul(frame_height)
                .and_then(|p| p.checked_mul(CHANNELS))
                .is_none_or(|b| b > isize::MAX as usize)
        {
            return Err(oversize());
        }
        Ok(Self {
            z,
            y,
            x,
            slices_per_channel,
            grid_cols,
            grid_rows,
            frame_width,
            frame_height,
            fill_code,
        })
    }

    pub fn frame_pixels(&self) -> usize {
        self.frame_width * self.frame_height
    }

    pub fn frame_bytes(&self) -> usize {
        self.frame_pixels() * CHANNELS
    }

    /// Checks the structural invariants against a fresh computation from `z, y, x`.
    pub fn validate(&self) -> Result<()> {
        let expected = Self::compute(self.z, self.y, self.x, self.fill_code)?;
        if *self != expected {
            return Err(Error::Contract(format!(
                "layout {self:?} is inconsistent with dims {}x{}x{}",
                self.z, self.y, self.x
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn voxel_to_pixel(&self, zi: usize, yi: usize, xi: usize) -> Result<PixelSlot> {
        if zi >= self.z || yi >= self.y || xi >= self.x {
            return Err(Error::OutOfBounds {
                what: "voxel",
                detail: format!("({zi}, {yi}, {xi}) in {}x{}x{}", self.z, self.y, self.x),
            });
        }
        Ok(self.slot_unchecked(zi, yi, xi))
    }

    #[inline]
    fn slot_unchecked(&self, zi: usize, yi: usize, xi: usize) -> PixelSlot {
        let channel = Channel::from_index(zi / self.slices_per_channel).expect("zi < z");
        let s = zi % self.slices_per_channel;
        let (tile_row, tile_col) = (s / self.grid_cols, s % self.grid_cols);
        PixelSlot {
            channel,
            px: tile_col * self.x + xi,
            py: tile_row * self.y + yi,
        }
    }

    /// Inverse of [`voxel_to_pixel`](Self::voxel_to_pixel); `None` for padding and unused tiles.
    #[inline]
    pub fn pixel_to_voxel(
        &self,
        channel: Channel,
        px: usize,
        py: usize,
    ) -> Result<Option<(usize, usize, usize)>> {
        if px >= self.frame_width || py >= self.frame_height {
            return Err(Error::OutOfBounds {
                what: "pixel",
                detail: format!("({px}, {py}) in {}x{}", self.frame_width, self.frame_height),
            });
        }
        let (tile_col, tile_row) = (px / self.x, py / self.y);
        if tile_col >= self.grid_cols || tile_row >= self.grid_rows {
            return Ok(None);
        }
        let s = tile_row * self.grid_cols + tile_col;
        if s >= self.slices_per_channel {
            return Ok(None);
        }
        let zi = channel.index() * self.slices_per_channel + s;
        if zi >= self.z {
            return Ok(None);
        }
        Ok(Some((zi, py % self.y, px % self.x)))
    }

    /// Top-left pixel of slice `zi`'s tile and its channel.
    #[inline]
    pub(crate) fn tile_origin(&self, zi: usize) -> PixelSlot {
        self.slot_unchecked(zi, 0, 0)
    }
}
