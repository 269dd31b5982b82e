//! Sampled voxel-to-pixel mappings for checking other implementations of the layout.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ingest::SplitMix64;
use crate::layout::MosaicLayout;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingSample {
    /// `[z, y, x]`
    pub voxel: [usize; 3],
    /// 0 = red, 1 = green, 2 = blue
    pub channel: usize,
    pub px: usize,
    pub py: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingFixture {
    pub layout: MosaicLayout,
    pub samples: Vec<MappingSample>,
}

/// `count` voxels drawn uniformly (seeded) plus the eight volume corners.
pub fn mapping_fixture(layout: &MosaicLayout, count: usize, seed: u64) -> Result<MappingFixture> {
    let mut rng = SplitMix64::new(seed);
    let pick = |rng: &mut SplitMix64, n: usize| (rng.next_u64() % n as u64) as usize;
    let (z, y, x) = (layout.z, layout.y, layout.x);
    let corners = (0..8).map(|i| {
        [
            if i & 4 != 0 { z - 1 } else { 0 },
            if i & 2 != 0 { y - 1 } else { 0 },
            if i & 1 != 0 { x - 1 } else { 0 },
        ]
    });
    let random: Vec<[usize; 3]> = (0..count)
        .map(|_| [pick(&mut rng, z), pick(&mut rng, y), pick(&mut rng, x)])
        .collect();
    let samples = corners
        .chain(random)
        .map(|[zi, yi, xi]| {
            let s = layout.voxel_to_pixel(zi, yi, xi)?;
            Ok(MappingSample {
                voxel: [zi, yi, xi],
                channel: s.channel.index(),
                px: s.px,
                py: s.py,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MappingFixture {
        layout: *layout,
        samples,
    })
}
