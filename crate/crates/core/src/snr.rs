//! The single empirical SNR definition shared by both pipelines.
//!
//! Power is the plain sum of squared entries of a realization, never a
//! distribution variance (the stable laws in use have none below
//! alpha = 2). Sums are accumulated with Neumaier compensation so that
//! scaling noise to a target SNR and reading the SNR back agree to well
//! under 1e-9 dB even on million-entry inputs.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Float-valued raster: width x height pixels, `channels` interleaved
/// samples per pixel, row-major. Intensities are nominally in [0, 255]
/// but are not clamped; corrupted images may leave that range.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageF {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageF {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f64>,
    ) -> Result<Self, SnrError> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(SnrError::EmptyShape { width, height, channels });
        }
        if data.len() != width * height * channels {
            return Err(SnrError::DataLengthMismatch {
                expected: width * height * channels,
                actual: data.len(),
            });
        }
        Ok(ImageF { width, height, channels, data })
    }

    pub fn constant(width: usize, height: usize, channels: usize, value: f64) -> Result<Self, SnrError> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Linear index of (x, y, channel) in the interleaved layout.
    #[inline]
    pub fn index(&self, x: usize, y: usize, channel: usize) -> usize {
        (y * self.width + x) * self.channels + channel
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, channel: usize) -> f64 {
        self.data[self.index(x, y, channel)]
    }

    /// Sum of squared intensities over every entry.
    pub fn power(&self) -> f64 {
        power(&self.data)
    }

    /// Entry-wise sum with a same-shape noise field.
    pub fn add_field(&self, field: &NoiseField) -> Result<ImageF, SnrError> {
        if field.shape() != self.shape() {
            return Err(SnrError::ShapeMismatch {
                left: self.shape(),
                right: field.shape(),
            });
        }
        let data = self
            .data
            .iter()
            .zip(field.data())
            .map(|(a, b)| a + b)
            .collect();
        ImageF::new(self.width, self.height, self.channels, data)
    }
}

/// Same-shape additive perturbation for an [`ImageF`].
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseField {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl NoiseField {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f64>,
    ) -> Result<Self, SnrError> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(SnrError::EmptyShape { width, height, channels });
        }
        if data.len() != width * height * channels {
            return Err(SnrError::DataLengthMismatch {
                expected: width * height * channels,
                actual: data.len(),
            });
        }
        Ok(NoiseField { width, height, channels, data })
    }

    pub fn zeros(width: usize, height: usize, channels: usize) -> Result<Self, SnrError> {
        Self::new(width, height, channels, vec![0.0; width * height * channels])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, channel: usize) -> usize {
        (y * self.width + x) * self.channels + channel
    }

    pub fn power(&self) -> f64 {
        power(&self.data)
    }

    /// Entry-wise scaling by a constant factor.
    pub fn scaled(&self, factor: f64) -> NoiseField {
        NoiseField {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|v| factor * v).collect(),
        }
    }
}

/// Signal-to-noise ratio in decibels. `INF` is the distinguished sentinel
/// for an exactly zero perturbation; it serializes as the string "inf".
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct SnrDb(f64);

impl SnrDb {
    pub const INF: SnrDb = SnrDb(f64::INFINITY);

    pub fn new(db: f64) -> Result<Self, SnrError> {
        if db.is_nan() || db == f64::NEG_INFINITY {
            return Err(SnrError::InvalidSnr(db));
        }
        Ok(SnrDb(db))
    }

    pub fn db(&self) -> f64 {
        self.0
    }

    pub fn is_inf(&self) -> bool {
        self.0.is_infinite()
    }

    /// 10^(dB/10); infinite for the sentinel.
    pub fn linear(&self) -> f64 {
        10f64.powf(self.0 / 10.0)
    }
}

impl std::fmt::Display for SnrDb {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_inf() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for SnrDb {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.is_inf() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for SnrDb {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(v) => SnrDb::new(v).map_err(serde::de::Error::custom),
            Raw::Text(s) if s == "inf" => Ok(SnrDb::INF),
            Raw::Text(s) => Err(serde::de::Error::custom(format!(
                "expected a number or the token \"inf\", got \"{s}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SnrError {
    #[error("raster dimensions must be >= 1, got {width}x{height}x{channels}")]
    EmptyShape { width: usize, height: usize, channels: usize },
    #[error("data length {actual} does not match width*height*channels = {expected}")]
    DataLengthMismatch { expected: usize, actual: usize },
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: (usize, usize, usize), right: (usize, usize, usize) },
    #[error("SNR is undefined for a zero-power signal")]
    ZeroPowerSignal,
    #[error("cannot scale a zero-power perturbation to a finite SNR")]
    ZeroPowerNoise,
    #[error("target SNR must be finite for scaling, got {0}")]
    NonFiniteTarget(f64),
    #[error("SNR value must be finite or +inf, got {0}")]
    InvalidSnr(f64),
    #[error("bandwidth and linear SNR must be nonnegative, got W={bandwidth}, S/N={snr_linear}")]
    NegativeCapacityInput { bandwidth: f64, snr_linear: f64 },
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Sum of squared entries.
pub fn power(values: &[f64]) -> f64 {
    compensated_sum(values.iter().map(|v| v * v))
}

/// Sum of squared differences between two equal-length slices.
fn diff_power(a: &[f64], b: &[f64]) -> f64 {
    compensated_sum(a.iter().zip(b).map(|(x, y)| {
        let d = x - y;
        d * d
    }))
}

/// Empirical SNR in dB between a clean signal and its perturbed version,
/// computed over arbitrary sample slices (pixels or modulated symbols).
pub fn snr_db_slices(original: &[f64], attacked: &[f64]) -> Result<SnrDb, SnrError> {
    if original.len() != attacked.len() {
        return Err(SnrError::ShapeMismatch {
            left: (original.len(), 1, 1),
            right: (attacked.len(), 1, 1),
        });
    }
    let signal = power(original);
    if signal <= 0.0 {
        return Err(SnrError::ZeroPowerSignal);
    }
    let noise = diff_power(original, attacked);
    if noise == 0.0 {
        return Ok(SnrDb::INF);
    }
    Ok(SnrDb(10.0 * (signal / noise).log10()))
}

/// Empirical SNR between an original image and an attacked one.
pub fn snr_db(original: &ImageF, attacked: &ImageF) -> Result<SnrDb, SnrError> {
    if original.shape() != attacked.shape() {
        return Err(SnrError::ShapeMismatch {
            left: original.shape(),
            right: attacked.shape(),
        });
    }
    snr_db_slices(original.data(), attacked.data())
}

/// The factor `c` such that `signal + c * noise` sits at `target` dB:
/// `c = sqrt(P_signal / (P_noise * 10^(target/10)))`.
pub fn scale_factor(signal_power: f64, noise_power: f64, target: SnrDb) -> Result<f64, SnrError> {
    if target.is_inf() {
        return Err(SnrError::NonFiniteTarget(target.db()));
    }
    if !(signal_power > 0.0) {
        return Err(SnrError::ZeroPowerSignal);
    }
    if !(noise_power > 0.0) {
        return Err(SnrError::ZeroPowerNoise);
    }
    Ok((signal_power / (noise_power * target.linear())).sqrt())
}

/// Scales a noise realization so the signal-plus-noise sits at `target` dB.
pub fn scale_to_snr_slices(
    signal: &[f64],
    noise: &[f64],
    target: SnrDb,
) -> Result<Vec<f64>, SnrError> {
    let c = scale_factor(power(signal), power(noise), target)?;
    Ok(noise.iter().map(|v| c * v).collect())
}

/// Scales a noise field against an image; shapes must match.
pub fn scale_to_snr(
    signal: &ImageF,
    noise: &NoiseField,
    target: SnrDb,
) -> Result<NoiseField, SnrError> {
    if signal.shape() != noise.shape() {
        return Err(SnrError::ShapeMismatch {
            left: signal.shape(),
            right: noise.shape(),
        });
    }
    let c = scale_factor(signal.power(), noise.power(), target)?;
    Ok(noise.scaled(c))
}

/// Shannon capacity W * log2(1 + S/N) in bits per second.
pub fn shannon_capacity(bandwidth: f64, snr_linear: f64) -> Result<f64, SnrError> {
    if bandwidth < 0.0 || snr_linear < 0.0 || bandwidth.is_nan() || snr_linear.is_nan() {
        return Err(SnrError::NegativeCapacityInput { bandwidth, snr_linear });
    }
    Ok(bandwidth * (1.0 + snr_linear).log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn power_of_simple_rasters() {
        let zeros = ImageF::constant(2, 2, 1, 0.0).unwrap();
        assert_eq!(zeros.power(), 0.0);
        let tens = ImageF::constant(2, 2, 1, 10.0).unwrap();
        assert_eq!(tens.power(), 400.0);
        let rgb = ImageF::new(1, 1, 3, vec![3.0, 4.0, 0.0]).unwrap();
        assert_eq!(rgb.power(), 25.0);
    }

    #[test]
    fn snr_of_unit_offset_is_twenty_db() {
        let orig = ImageF::constant(4, 3, 2, 10.0).unwrap();
        let attacked = ImageF::constant(4, 3, 2, 11.0).unwrap();
        let snr = snr_db(&orig, &attacked).unwrap();
        assert_relative_eq!(snr.db(), 20.0, epsilon = 1e-12);
    }

    #[test]
    fn identical_images_give_the_inf_sentinel() {
        let orig = ImageF::constant(2, 2, 3, 42.0).unwrap();
        let snr = snr_db(&orig, &orig.clone()).unwrap();
        assert!(snr.is_inf());
    }

    #[test]
    fn equal_signal_and_noise_power_is_zero_db() {
        let orig = ImageF::constant(2, 2, 1, 10.0).unwrap();
        let attacked = ImageF::constant(2, 2, 1, 20.0).unwrap();
        assert_relative_eq!(snr_db(&orig, &attacked).unwrap().db(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_power_original_is_an_error() {
        let orig = ImageF::constant(2, 2, 1, 0.0).unwrap();
        let attacked = ImageF::constant(2, 2, 1, 1.0).unwrap();
        assert!(matches!(snr_db(&orig, &attacked), Err(SnrError::ZeroPowerSignal)));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = ImageF::constant(2, 2, 1, 1.0).unwrap();
        let b = ImageF::constant(2, 1, 2, 1.0).unwrap();
        assert!(matches!(snr_db(&a, &b), Err(SnrError::ShapeMismatch { .. })));
    }

    #[test]
    fn closed_form_scale_factor() {
        // P_signal = 100, P_noise = 4, target 20 dB -> c = 0.5
        let c = scale_factor(100.0, 4.0, SnrDb::new(20.0).unwrap()).unwrap();
        assert_relative_eq!(c, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn noise_already_at_target_keeps_unit_factor() {
        let signal = vec![3.0, 4.0];
        let noise = vec![0.3, 0.4]; // exactly -20 dB below
        let c = scale_factor(power(&signal), power(&noise), SnrDb::new(20.0).unwrap()).unwrap();
        assert_relative_eq!(c, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn scale_errors_on_zero_power_inputs() {
        let t = SnrDb::new(0.0).unwrap();
        assert!(matches!(scale_factor(0.0, 1.0, t), Err(SnrError::ZeroPowerSignal)));
        assert!(matches!(scale_factor(1.0, 0.0, t), Err(SnrError::ZeroPowerNoise)));
        assert!(matches!(scale_factor(1.0, 1.0, SnrDb::INF), Err(SnrError::NonFiniteTarget(_))));
    }

    #[test]
    fn round_trip_hits_target_within_1e9_db() {
        // deterministic pseudo-random image and heavy-tailed field
        let seed = crate::rng::Seed(3);
        let n = 32 * 32 * 3;
        let img_data: Vec<f64> = (0..n)
            .map(|i| 255.0 * crate::rng::open01_at(seed, i as u64))
            .collect();
        let image = ImageF::new(32, 32, 3, img_data).unwrap();
        let p = crate::stable::StableParams::symmetric(1.5).unwrap();
        let field_data = crate::stable::sample(&p, n, crate::rng::Seed(4)).unwrap();
        let field = NoiseField::new(32, 32, 3, field_data).unwrap();
        for target_db in (-20..=60).step_by(5) {
            let target = SnrDb::new(target_db as f64).unwrap();
            let scaled = scale_to_snr(&image, &field, target).unwrap();
            let attacked = image.add_field(&scaled).unwrap();
            let achieved = snr_db(&image, &attacked).unwrap();
            assert!(
                (achieved.db() - target.db()).abs() < 1e-9,
                "target {target_db} dB, achieved {}",
                achieved.db()
            );
        }
    }

    #[test]
    fn snr_is_invariant_under_common_scaling() {
        let orig = ImageF::new(2, 1, 1, vec![3.0, -4.0]).unwrap();
        let attacked = ImageF::new(2, 1, 1, vec![3.5, -3.0]).unwrap();
        let k = 7.25;
        let scaled_orig =
            ImageF::new(2, 1, 1, orig.data().iter().map(|v| k * v).collect()).unwrap();
        let scaled_attacked =
            ImageF::new(2, 1, 1, attacked.data().iter().map(|v| k * v).collect()).unwrap();
        let a = snr_db(&orig, &attacked).unwrap().db();
        let b = snr_db(&scaled_orig, &scaled_attacked).unwrap().db();
        assert_relative_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn shannon_capacity_known_values() {
        assert_relative_eq!(shannon_capacity(1.0, 1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(shannon_capacity(1.0, 3.0).unwrap(), 2.0, epsilon = 1e-15);
        assert_relative_eq!(
            shannon_capacity(3000.0, 1000.0).unwrap(),
            29901.6788,
            epsilon = 1e-2
        );
        assert_eq!(shannon_capacity(123.0, 0.0).unwrap(), 0.0);
        assert!(shannon_capacity(-1.0, 1.0).is_err());
        assert!(shannon_capacity(1.0, -0.5).is_err());
    }

    #[test]
    fn snr_serde_uses_inf_token() {
        let inf: SnrDb = serde_json::from_str("\"inf\"").unwrap();
        assert!(inf.is_inf());
        let five: SnrDb = serde_json::from_str("5.0").unwrap();
        assert_eq!(five.db(), 5.0);
        assert_eq!(serde_json::to_string(&SnrDb::INF).unwrap(), "\"inf\"");
        assert_eq!(serde_json::to_string(&five).unwrap(), "5.0");
        assert!(serde_json::from_str::<SnrDb>("\"nan\"").is_err());
    }
}
