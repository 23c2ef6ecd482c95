//! Core geometry and crack-configuration encoding.
//!
//! A [`CoreGeometry`] is a masked square lattice: a `plan_height` x
//! `plan_width` plan of channel positions replicated over `levels` vertical
//! levels. A [`CrackConfig`] assigns every brick (one lattice cell per level)
//! a status: `+1` cracked, `-1` intact, `0` empty (outside the fuel mask).

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

/// Fuel-channel count targeted by [`MaskSpec::AgrLike`].
pub const AGR_CHANNEL_TARGET: usize = 284;

/// How the fuel mask of a plan is constructed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaskSpec {
    /// Every plan cell is a fuel channel.
    Full,
    /// Cells whose center lies within `radius` of the plan center.
    Disk(f64),
    /// Disk sized so the channel count is closest to [`AGR_CHANNEL_TARGET`];
    /// ties resolve toward the smaller radius. Requires a square plan.
    AgrLike,
}

/// Masked lattice plan shared by every crack configuration of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreGeometry {
    plan_width: usize,
    plan_height: usize,
    levels: usize,
    fuel_mask: Vec<bool>, // plan_height x plan_width, row-major
}

impl CoreGeometry {
    /// Builds a geometry from a mask spec.
    pub fn new(width: usize, height: usize, levels: usize, spec: MaskSpec) -> Result<Self> {
        if width < 1 || height < 1 || levels < 1 {
            return Err(Error::InvalidValue {
                name: "geometry dims",
                message: format!("width/height/levels must be >= 1, got {width}x{height}x{levels}"),
            });
        }
        let mask = match spec {
            MaskSpec::Full => vec![true; width * height],
            MaskSpec::Disk(radius) => {
                if !(radius > 0.0) {
                    return Err(Error::InvalidValue {
                        name: "disk radius",
                        message: format!("must be > 0, got {radius}"),
                    });
                }
                disk_mask(width, height, radius * radius)
            }
            MaskSpec::AgrLike => {
                if width != height {
                    return Err(Error::NonSquarePlan {
                        width,
                        height,
                        context: "agr_like mask",
                    });
                }
                // Compare in squared distance so boundary cells are kept
                // exactly as counted during radius selection.
                disk_mask(width, height, agr_like_radius_sq(width, height))
            }
        };
        Self::from_mask(width, height, levels, mask)
    }

    /// Builds a geometry from an explicit mask (row-major, `height * width`).
    ///
    /// The mask is not required to be symmetric; augmentation ops detect and
    /// reject asymmetric masks when a transformed brick lands on an empty
    /// position.
    pub fn from_mask(width: usize, height: usize, levels: usize, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != width * height {
            return Err(Error::ShapeMismatch {
                what: "fuel mask".into(),
                expected: vec![height, width],
                got: vec![mask.len()],
            });
        }
        if !mask.iter().any(|&m| m) {
            return Err(Error::EmptyMask);
        }
        Ok(Self {
            plan_width: width,
            plan_height: height,
            levels,
            fuel_mask: mask,
        })
    }

    pub fn plan_width(&self) -> usize {
        self.plan_width
    }

    pub fn plan_height(&self) -> usize {
        self.plan_height
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn is_square(&self) -> bool {
        self.plan_width == self.plan_height
    }

    /// Continuous plan center `(row, col)`; half-integral on even plans.
    pub fn center(&self) -> (f64, f64) {
        (
            (self.plan_height as f64 - 1.0) / 2.0,
            (self.plan_width as f64 - 1.0) / 2.0,
        )
    }

    pub fn mask_at(&self, row: usize, col: usize) -> bool {
        self.fuel_mask[row * self.plan_width + col]
    }

    pub fn fuel_mask(&self) -> &[bool] {
        &self.fuel_mask
    }

    /// Number of fuel channels in the plan.
    pub fn channel_count(&self) -> usize {
        self.fuel_mask.iter().filter(|&&m| m).count()
    }

    /// Number of bricks: channels times levels.
    pub fn brick_count(&self) -> usize {
        self.channel_count() * self.levels
    }

    /// Mask-true brick positions in canonical order (level-major, then
    /// row-major within the plan).
    pub fn brick_positions(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::with_capacity(self.brick_count());
        for level in 0..self.levels {
            for row in 0..self.plan_height {
                for col in 0..self.plan_width {
                    if self.mask_at(row, col) {
                        out.push((level, row, col));
                    }
                }
            }
        }
        out
    }
}

fn disk_mask(width: usize, height: usize, r2: f64) -> Vec<bool> {
    let cy = (height as f64 - 1.0) / 2.0;
    let cx = (width as f64 - 1.0) / 2.0;
    let mut mask = vec![false; width * height];
    for row in 0..height {
        for col in 0..width {
            let dy = row as f64 - cy;
            let dx = col as f64 - cx;
            if dy * dy + dx * dx <= r2 {
                mask[row * width + col] = true;
            }
        }
    }
    mask
}

/// Squared radius of the smallest disk whose channel count is closest to
/// the target.
fn agr_like_radius_sq(width: usize, height: usize) -> f64 {
    let cy = (height as f64 - 1.0) / 2.0;
    let cx = (width as f64 - 1.0) / 2.0;
    let mut d2: Vec<f64> = (0..height * width)
        .map(|i| {
            let dy = (i / width) as f64 - cy;
            let dx = (i % width) as f64 - cx;
            dy * dy + dx * dx
        })
        .collect();
    d2.sort_by(|a, b| a.partial_cmp(b).unwrap());

    // Candidate radii are the distinct cell distances; count(d) is the number
    // of cells at distance <= d.
    let mut best: Option<(usize, f64)> = None; // (|count - target|, radius^2)
    let mut count = 0usize;
    let mut i = 0;
    while i < d2.len() {
        let r2 = d2[i];
        while i < d2.len() && d2[i] <= r2 {
            count += 1;
            i += 1;
        }
        let score = count.abs_diff(AGR_CHANNEL_TARGET);
        let better = match best {
            None => true,
            Some((s, _)) => score < s,
        };
        if better {
            best = Some((score, r2));
        }
    }
    best.expect("plan has at least one cell").1
}

/// One crack pattern over a geometry: `+1` cracked, `-1` intact, `0` empty.
#[derive(Debug, Clone, PartialEq)]
pub struct CrackConfig {
    geometry: Arc<CoreGeometry>,
    cells: Vec<i8>, // levels x plan_height x plan_width, row-major
}

impl CrackConfig {
    /// Wraps explicit cell values, checking mask consistency.
    pub fn from_cells(geometry: Arc<CoreGeometry>, cells: Vec<i8>) -> Result<Self> {
        let expect = geometry.levels * geometry.plan_height * geometry.plan_width;
        if cells.len() != expect {
            return Err(Error::ShapeMismatch {
                what: "crack cells".into(),
                expected: vec![geometry.levels, geometry.plan_height, geometry.plan_width],
                got: vec![cells.len()],
            });
        }
        let (h, w) = (geometry.plan_height, geometry.plan_width);
        for (i, &v) in cells.iter().enumerate() {
            let level = i / (h * w);
            let row = (i / w) % h;
            let col = i % w;
            let ok = if geometry.mask_at(row, col) {
                v == 1 || v == -1
            } else {
                v == 0
            };
            if !ok {
                return Err(Error::MaskMismatch { level, row, col });
            }
        }
        Ok(Self { geometry, cells })
    }

    /// Draws a random pattern with exactly `round(fraction * brick_count)`
    /// cracked bricks (round half up), uniform without replacement.
    pub fn random(geometry: Arc<CoreGeometry>, fraction: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::InvalidValue {
                name: "crack fraction",
                message: format!("must be in [0, 1], got {fraction}"),
            });
        }
        let positions = geometry.brick_positions();
        let n = positions.len();
        let k = crack_count(fraction, n);

        let mut idx: Vec<u32> = (0..n as u32).collect();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        // Partial Fisher-Yates: only the first k slots need shuffling.
        for i in 0..k {
            let j = rng.gen_range(i..n);
            idx.swap(i, j);
        }

        let (h, w) = (geometry.plan_height, geometry.plan_width);
        let mut cells = vec![0i8; geometry.levels * h * w];
        for &(level, row, col) in &positions {
            cells[(level * h + row) * w + col] = -1;
        }
        for &p in &idx[..k] {
            let (level, row, col) = positions[p as usize];
            cells[(level * h + row) * w + col] = 1;
        }
        Ok(Self { geometry, cells })
    }

    pub fn geometry(&self) -> &Arc<CoreGeometry> {
        &self.geometry
    }

    pub fn cells(&self) -> &[i8] {
        &self.cells
    }

    pub fn cell(&self, level: usize, row: usize, col: usize) -> i8 {
        let (h, w) = (self.geometry.plan_height, self.geometry.plan_width);
        self.cells[(level * h + row) * w + col]
    }

    pub fn crack_count(&self) -> usize {
        self.cells.iter().filter(|&&v| v == 1).count()
    }

    pub fn crack_fraction(&self) -> f64 {
        self.crack_count() as f64 / self.geometry.brick_count() as f64
    }

    pub(crate) fn from_cells_unchecked(geometry: Arc<CoreGeometry>, cells: Vec<i8>) -> Self {
        Self { geometry, cells }
    }
}

/// Round-half-up crack count for a fraction of `n` bricks.
pub fn crack_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64 + 0.5).floor() as usize).min(n)
}
