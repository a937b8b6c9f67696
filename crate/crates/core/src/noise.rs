//! Image perturbations: iid stable fields and concentrated impulse shapes.
//!
//! The shaped variants take the strongest impulses of a heavy-tailed field
//! and enlarge each one over a square, triangle or rhombus footprint; the
//! final field is always rescaled to the exact target SNR, so shaped and
//! unshaped curves are comparable point for point.

use crate::rng::Seed;
use crate::snr::{self, ImageF, NoiseField, SnrDb, SnrError};
use crate::stable::{self, StableError, StableParams};

use serde::{Deserialize, Serialize};

/// Footprint of an enlarged impulse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Square,
    Triangle,
    Rhombus,
}

impl ShapeKind {
    pub fn name(&self) -> &'static str {
        match self {
            ShapeKind::Square => "square",
            ShapeKind::Triangle => "triangle",
            ShapeKind::Rhombus => "rhombus",
        }
    }
}

impl std::str::FromStr for ShapeKind {
    type Err = NoiseError;

    fn from_str(s: &str) -> Result<Self, NoiseError> {
        match s {
            "square" => Ok(ShapeKind::Square),
            "triangle" => Ok(ShapeKind::Triangle),
            "rhombus" => Ok(ShapeKind::Rhombus),
            other => Err(NoiseError::UnknownShape(other.to_string())),
        }
    }
}

/// A shape kind plus its size: square side, triangle leg, or rhombus
/// Manhattan radius.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    pub size: u32,
}

impl ShapeSpec {
    pub fn new(kind: ShapeKind, size: u32) -> Result<Self, NoiseError> {
        if size == 0 {
            return Err(NoiseError::ZeroShapeSize);
        }
        Ok(ShapeSpec { kind, size })
    }

    /// Label of the form "square-3", used for curve names and CLI parsing.
    pub fn label(&self) -> String {
        format!("{}-{}", self.kind.name(), self.size)
    }
}

impl std::str::FromStr for ShapeSpec {
    type Err = NoiseError;

    fn from_str(s: &str) -> Result<Self, NoiseError> {
        let (kind, size) = s
            .split_once('-')
            .ok_or_else(|| NoiseError::UnknownShape(s.to_string()))?;
        let kind: ShapeKind = kind.parse()?;
        let size: u32 = size
            .parse()
            .map_err(|_| NoiseError::UnknownShape(s.to_string()))?;
        ShapeSpec::new(kind, size)
    }
}

/// One retained impulse of a sparse field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Impulse {
    pub x: usize,
    pub y: usize,
    pub channel: usize,
    pub value: f64,
}

/// Sparse set of impulses over a raster shape.
#[derive(Clone, Debug, PartialEq)]
pub struct ImpulseSet {
    width: usize,
    height: usize,
    channels: usize,
    entries: Vec<Impulse>,
}

impl ImpulseSet {
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    pub fn entries(&self) -> &[Impulse] {
        &self.entries
    }

    /// Dense field holding exactly these impulses at their anchors.
    pub fn to_field(&self) -> NoiseField {
        let mut field = NoiseField::zeros(self.width, self.height, self.channels)
            .expect("impulse set shape is valid");
        for imp in &self.entries {
            let idx = field.index(imp.x, imp.y, imp.channel);
            field.data_mut()[idx] = imp.value;
        }
        field
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NoiseError {
    #[error("shape size must be >= 1")]
    ZeroShapeSize,
    #[error("unknown shape \"{0}\" (expected square-N, triangle-N or rhombus-N)")]
    UnknownShape(String),
    #[error("keep fraction must lie in (0, 1], got {0}")]
    KeepFractionOutOfRange(f64),
    #[error(transparent)]
    Stable(#[from] StableError),
    #[error(transparent)]
    Snr(#[from] SnrError),
}

/// An iid field of stable draws matching the target raster shape.
///
/// The location parameter is forced to zero; every entry is the draw at
/// its linear index, so the field is deterministic in (params, shape,
/// seed) and independent of traversal order.
pub fn iid_field(
    params: &StableParams,
    width: usize,
    height: usize,
    channels: usize,
    seed: Seed,
) -> Result<NoiseField, NoiseError> {
    let centered = StableParams { location: 0.0, ..*params };
    let n = width * height * channels;
    let data = stable::sample(&centered, n, seed)?;
    Ok(NoiseField::new(width, height, channels, data)?)
}

/// The `ceil(keep_fraction * N)` entries of largest magnitude, ties broken
/// by ascending linear index. Zero-valued entries are never retained.
pub fn extract_impulses(
    field: &NoiseField,
    keep_fraction: f64,
) -> Result<ImpulseSet, NoiseError> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(NoiseError::KeepFractionOutOfRange(keep_fraction));
    }
    let n = field.data().len();
    let keep = (keep_fraction * n as f64).ceil() as usize;
    let mut ranked: Vec<(usize, f64)> = field
        .data()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (i, *v))
        .collect();
    ranked.sort_unstable_by(|a, b| {
        b.1.abs()
            .partial_cmp(&a.1.abs())
            .expect("finite magnitudes")
            .then(a.0.cmp(&b.0))
    });
    ranked.truncate(keep);
    // report entries in ascending linear index order
    ranked.sort_unstable_by_key(|(i, _)| *i);
    let (width, height, channels) = field.shape();
    let entries = ranked
        .into_iter()
        .map(|(i, value)| {
            let pixel = i / channels;
            Impulse {
                x: pixel % width,
                y: pixel / width,
                channel: i % channels,
                value,
            }
        })
        .collect();
    Ok(ImpulseSet { width, height, channels, entries })
}

/// Pixel offsets covered by a shape, sorted by (dy, dx).
///
/// square s:   {(dx, dy) : 0 <= dx, dy < s}           -> s^2 offsets
/// triangle s: {(dx, dy) : dx, dy >= 0, dx + dy < s}  -> s(s+1)/2 offsets
/// rhombus r:  {(dx, dy) : |dx| + |dy| <= r}          -> 2r^2 + 2r + 1 offsets
pub fn shape_mask(spec: ShapeSpec) -> Vec<(i64, i64)> {
    let s = spec.size as i64;
    let mut mask = Vec::new();
    match spec.kind {
        ShapeKind::Square => {
            for dy in 0..s {
                for dx in 0..s {
                    mask.push((dx, dy));
                }
            }
        }
        ShapeKind::Triangle => {
            for dy in 0..s {
                for dx in 0..(s - dy) {
                    mask.push((dx, dy));
                }
            }
        }
        ShapeKind::Rhombus => {
            for dy in -s..=s {
                let span = s - dy.abs();
                for dx in -span..=span {
                    mask.push((dx, dy));
                }
            }
        }
    }
    mask
}

/// Stamps each impulse over its shape footprint within its own channel.
///
/// Impulses are processed in descending magnitude (ties by linear index);
/// a pixel already written by a stronger impulse is left alone, and
/// offsets falling outside the raster are clipped.
pub fn stamp(
    impulses: &ImpulseSet,
    spec: ShapeSpec,
    width: usize,
    height: usize,
    channels: usize,
) -> Result<NoiseField, NoiseError> {
    let mask = shape_mask(spec);
    let mut field = NoiseField::zeros(width, height, channels)?;
    let mut written = vec![false; field.data().len()];
    let mut order: Vec<&Impulse> = impulses.entries().iter().collect();
    order.sort_unstable_by(|a, b| {
        b.value
            .abs()
            .partial_cmp(&a.value.abs())
            .expect("finite impulse values")
            .then_with(|| {
                let ia = (a.y * impulses.width + a.x) * impulses.channels + a.channel;
                let ib = (b.y * impulses.width + b.x) * impulses.channels + b.channel;
                ia.cmp(&ib)
            })
    });
    for imp in order {
        for &(dx, dy) in &mask {
            let x = imp.x as i64 + dx;
            let y = imp.y as i64 + dy;
            if x < 0 || y < 0 || x >= width as i64 || y >= height as i64 {
                continue;
            }
            let idx = field.index(x as usize, y as usize, imp.channel);
            if !written[idx] {
                written[idx] = true;
                field.data_mut()[idx] = imp.value;
            }
        }
    }
    Ok(field)
}

/// An attacked image together with the SNR it actually achieved.
#[derive(Clone, Debug)]
pub struct Corrupted {
    pub attacked: ImageF,
    pub achieved: SnrDb,
}

/// Adds `field`, rescaled to the target SNR, onto `image`.
///
/// With `clip` set the attacked pixels are clamped to [0, 255] and the
/// achieved SNR is recomputed after clamping, so it may deviate from the
/// target; with `clip` unset the achieved SNR equals the target to within
/// 1e-9 dB. A target of +inf means "no noise" and returns the image
/// unchanged.
pub fn corrupt(
    image: &ImageF,
    field: &NoiseField,
    target: SnrDb,
    clip: bool,
) -> Result<Corrupted, NoiseError> {
    if target.is_inf() {
        return Ok(Corrupted { attacked: image.clone(), achieved: SnrDb::INF });
    }
    let scaled = snr::scale_to_snr(image, field, target)?;
    let mut attacked = image.add_field(&scaled)?;
    if clip {
        for v in attacked.data_mut() {
            *v = v.clamp(0.0, 255.0);
        }
    }
    let achieved = snr::snr_db(image, &attacked)?;
    Ok(Corrupted { attacked, achieved })
}
