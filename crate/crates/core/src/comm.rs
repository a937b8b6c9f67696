//! Baseband communication link: bits, optional Hamming(7,4) coding, BPSK,
//! an alpha-stable channel at matched empirical SNR, and BER sweeps.

use rayon::prelude::*;

use crate::rng::{u64_at, Seed};
use crate::snr::{self, SnrDb, SnrError};
use crate::stable::{self, StableError, StableParams};

/// A sequence of bits, each 0 or 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitStream {
    bits: Vec<u8>,
}

impl BitStream {
    pub fn from_bits(bits: Vec<u8>) -> Result<Self, CommError> {
        if let Some(&bad) = bits.iter().find(|b| **b > 1) {
            return Err(CommError::NotABit(bad));
        }
        Ok(BitStream { bits })
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

impl std::ops::Index<usize> for BitStream {
    type Output = u8;

    fn index(&self, i: usize) -> &u8 {
        &self.bits[i]
    }
}

/// Channel code applied before modulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodecKind {
    None,
    Hamming74,
}

impl CodecKind {
    pub fn name(&self) -> &'static str {
        match self {
            CodecKind::None => "none",
            CodecKind::Hamming74 => "hamming74",
        }
    }
}

impl std::str::FromStr for CodecKind {
    type Err = CommError;

    fn from_str(s: &str) -> Result<Self, CommError> {
        match s {
            "none" => Ok(CodecKind::None),
            "hamming74" => Ok(CodecKind::Hamming74),
            other => Err(CommError::UnknownCodec(other.to_string())),
        }
    }
}

/// Channel description: symmetric stable noise at a target empirical SNR.
#[derive(Clone, Copy, Debug)]
pub struct ChannelConfig {
    noise: StableParams,
    pub target_snr: SnrDb,
    pub seed: Seed,
}

impl ChannelConfig {
    /// Noise skewness is forced to zero; asymmetric channel noise is out
    /// of scope for every experiment here.
    pub fn new(noise: StableParams, target_snr: SnrDb, seed: Seed) -> Result<Self, CommError> {
        noise.validate()?;
        if noise.beta != 0.0 {
            return Err(CommError::SkewedChannelNoise(noise.beta));
        }
        Ok(ChannelConfig { noise, target_snr, seed })
    }

    pub fn noise(&self) -> &StableParams {
        &self.noise
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CommError {
    #[error("bit value {0} is not 0 or 1")]
    NotABit(u8),
    #[error("unknown codec \"{0}\" (expected none or hamming74)")]
    UnknownCodec(String),
    #[error("channel noise must be symmetric (beta = 0), got beta = {0}")]
    SkewedChannelNoise(f64),
    #[error("coded stream length {coded} does not frame {data} data bits (expected {expected})")]
    Framing { coded: usize, data: usize, expected: usize },
    #[error("bit streams differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("cannot transmit an empty symbol sequence")]
    EmptySymbols,
    #[error("BER sweep needs at least {min} bits per point, got {got}")]
    TooFewBits { min: usize, got: usize },
    #[error("BER sweep grids must be nonempty")]
    EmptyGrid,
    #[error(transparent)]
    Stable(#[from] StableError),
    #[error(transparent)]
    Snr(#[from] SnrError),
}

/// `n` iid fair bits, bit `i` drawn from the counter stream at index `i`.
pub fn random_bits(n: usize, seed: Seed) -> BitStream {
    let bits = (0..n as u64).map(|i| (u64_at(seed, i) >> 63) as u8).collect();
    BitStream { bits }
}

/// Number of coded bits produced for `data_len` data bits.
pub fn coded_len(data_len: usize, codec: CodecKind) -> usize {
    match codec {
        CodecKind::None => data_len,
        CodecKind::Hamming74 => data_len.div_ceil(4) * 7,
    }
}

/// Encodes a data stream. Hamming(7,4) zero-pads the data to a whole
/// number of 4-bit words; the pad length is implied by the original data
/// length, which `decode` takes back to strip it.
pub fn encode(data: &BitStream, codec: CodecKind) -> BitStream {
    match codec {
        CodecKind::None => data.clone(),
        CodecKind::Hamming74 => {
            let mut bits = Vec::with_capacity(coded_len(data.len(), codec));
            for chunk in data.bits.chunks(4) {
                let mut d = [0u8; 4];
                d[..chunk.len()].copy_from_slice(chunk);
                bits.extend_from_slice(&encode_word(d));
            }
            BitStream { bits }
        }
    }
}

/// Codeword layout p1 p2 d1 p3 d2 d3 d4 with
/// p1 = d1^d2^d4, p2 = d1^d3^d4, p3 = d2^d3^d4.
fn encode_word(d: [u8; 4]) -> [u8; 7] {
    let [d1, d2, d3, d4] = d;
    let p1 = d1 ^ d2 ^ d4;
    let p2 = d1 ^ d3 ^ d4;
    let p3 = d2 ^ d3 ^ d4;
    [p1, p2, d1, p3, d2, d3, d4]
}

/// Syndrome-decodes one codeword, correcting any single flipped bit.
fn decode_word(mut c: [u8; 7]) -> [u8; 4] {
    // syndrome bits over codeword positions 1..7
    let s1 = c[0] ^ c[2] ^ c[4] ^ c[6];
    let s2 = c[1] ^ c[2] ^ c[5] ^ c[6];
    let s4 = c[3] ^ c[4] ^ c[5] ^ c[6];
    let pos = (s1 | (s2 << 1) | (s4 << 2)) as usize;
    if pos != 0 {
        c[pos - 1] ^= 1;
    }
    [c[2], c[4], c[5], c[6]]
}

/// Decodes a coded stream back to exactly `data_len` data bits.
///
/// For Hamming(7,4) the coded length must frame `data_len` (one 7-bit
/// block per 4 data bits, padding included); any single flipped bit per
/// block is corrected and the zero padding is stripped.
pub fn decode(coded: &BitStream, codec: CodecKind, data_len: usize) -> Result<BitStream, CommError> {
    let expected = coded_len(data_len, codec);
    if coded.len() != expected {
        return Err(CommError::Framing { coded: coded.len(), data: data_len, expected });
    }
    match codec {
        CodecKind::None => Ok(coded.clone()),
        CodecKind::Hamming74 => {
            let mut bits = Vec::with_capacity(data_len);
            for block in coded.bits.chunks_exact(7) {
                let mut c = [0u8; 7];
                c.copy_from_slice(block);
                bits.extend_from_slice(&decode_word(c));
            }
            bits.truncate(data_len);
            Ok(BitStream { bits })
        }
    }
}

/// BPSK mapping: bit 0 -> +1.0, bit 1 -> -1.0.
pub fn modulate_bpsk(bits: &BitStream) -> Vec<f64> {
    bits.bits
        .iter()
        .map(|&b| if b == 0 { 1.0 } else { -1.0 })
        .collect()
}

/// Sign detector: positive -> 0, negative -> 1, exact zero -> 0.
pub fn demodulate_bpsk(received: &[f64]) -> BitStream {
    let bits = received.iter().map(|&v| if v < 0.0 { 1 } else { 0 }).collect();
    BitStream { bits }
}

/// Passes symbols through the stable channel: adds a noise realization
/// scaled so the empirical SNR equals the target exactly. A +inf target
/// returns the symbols untouched.
pub fn transmit(symbols: &[f64], cfg: &ChannelConfig) -> Result<Vec<f64>, CommError> {
    if symbols.is_empty() {
        return Err(CommError::EmptySymbols);
    }
    if cfg.target_snr.is_inf() {
        return Ok(symbols.to_vec());
    }
    let noise = stable::sample(&cfg.noise, symbols.len(), cfg.seed)?;
    let scaled = snr::scale_to_snr_slices(symbols, &noise, cfg.target_snr)?;
    Ok(symbols.iter().zip(&scaled).map(|(s, n)| s + n).collect())
}

/// Fraction of differing positions between two equal-length streams.
pub fn ber(sent: &BitStream, recovered: &BitStream) -> Result<f64, CommError> {
    if sent.len() != recovered.len() {
        return Err(CommError::LengthMismatch { left: sent.len(), right: recovered.len() });
    }
    if sent.is_empty() {
        return Ok(0.0);
    }
    let errors = sent
        .bits
        .iter()
        .zip(&recovered.bits)
        .filter(|(a, b)| a != b)
        .count();
    Ok(errors as f64 / sent.len() as f64)
}

/// One measured point of a BER curve.
#[derive(Clone, Copy, Debug)]
pub struct BerPoint {
    pub snr_db: SnrDb,
    /// Empirical SNR of the transmitted symbols, recomputed after the
    /// channel; equals the target within 1e-9 dB.
    pub achieved_snr_db: SnrDb,
    pub ber: f64,
}

/// BER as a function of SNR for one alpha.
#[derive(Clone, Debug)]
pub struct BerCurve {
    pub alpha: f64,
    pub codec: CodecKind,
    pub points: Vec<BerPoint>,
}

const MIN_SWEEP_BITS: usize = 10_000;

/// Runs the full chain encode -> modulate -> transmit -> demodulate ->
/// decode -> ber over every (alpha, snr) grid point.
///
/// The point at curve index `a` and grid index `s` uses the seed
/// `seed.derive(a).derive(s)`, with separate child streams for the data
/// bits and the channel noise, so points are independent of evaluation
/// order and may run concurrently.
pub fn ber_sweep(
    alphas: &[f64],
    snr_grid: &[SnrDb],
    codec: CodecKind,
    n_bits: usize,
    seed: Seed,
) -> Result<Vec<BerCurve>, CommError> {
    if alphas.is_empty() || snr_grid.is_empty() {
        return Err(CommError::EmptyGrid);
    }
    if n_bits < MIN_SWEEP_BITS {
        return Err(CommError::TooFewBits { min: MIN_SWEEP_BITS, got: n_bits });
    }
    let jobs: Vec<(usize, usize)> = (0..alphas.len())
        .flat_map(|a| (0..snr_grid.len()).map(move |s| (a, s)))
        .collect();
    let points: Vec<Result<BerPoint, CommError>> = jobs
        .par_iter()
        .map(|&(a, s)| {
            ber_point(alphas[a], snr_grid[s], codec, n_bits, seed.derive_path(&[a as u64, s as u64]))
        })
        .collect();
    let mut curves: Vec<BerCurve> = alphas
        .iter()
        .map(|&alpha| BerCurve { alpha, codec, points: Vec::with_capacity(snr_grid.len()) })
        .collect();
    for ((a, _), point) in jobs.into_iter().zip(points) {
        curves[a].points.push(point?);
    }
    Ok(curves)
}

fn ber_point(
    alpha: f64,
    target: SnrDb,
    codec: CodecKind,
    n_bits: usize,
    point_seed: Seed,
) -> Result<BerPoint, CommError> {
    let data = random_bits(n_bits, point_seed.derive(0));
    let coded = encode(&data, codec);
    let symbols = modulate_bpsk(&coded);
    let noise = StableParams::symmetric(alpha)?;
    let cfg = ChannelConfig::new(noise, target, point_seed.derive(1))?;
    let received = transmit(&symbols, &cfg)?;
    let achieved = snr::snr_db_slices(&symbols, &received)?;
    let recovered = decode(&demodulate_bpsk(&received), codec, n_bits)?;
    Ok(BerPoint {
        snr_db: target,
        achieved_snr_db: achieved,
        ber: ber(&data, &recovered)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_bits_are_fair_and_deterministic() {
        assert!(random_bits(0, Seed(1)).is_empty());
        let bits = random_bits(1_000_000, Seed(1));
        let ones = bits.as_slice().iter().filter(|b| **b == 1).count() as f64;
        let frac = ones / 1e6;
        assert!((frac - 0.5).abs() < 0.002, "ones fraction {frac}");
        assert_eq!(random_bits(1000, Seed(2)), random_bits(1000, Seed(2)));
    }

    #[test]
    fn hamming_encodes_known_words() {
        let zero = BitStream::from_bits(vec![0, 0, 0, 0]).unwrap();
        assert_eq!(encode(&zero, CodecKind::Hamming74).as_slice(), &[0; 7]);
        let word = BitStream::from_bits(vec![1, 0, 1, 1]).unwrap();
        assert_eq!(
            encode(&word, CodecKind::Hamming74).as_slice(),
            &[0, 1, 1, 0, 0, 1, 1]
        );
    }

    #[test]
    fn identity_codec_is_identity() {
        let data = random_bits(37, Seed(3));
        let coded = encode(&data, CodecKind::None);
        assert_eq!(coded, data);
        assert_eq!(decode(&coded, CodecKind::None, 37).unwrap(), data);
    }

    #[test]
    fn hamming_corrects_every_single_error() {
        // exhaustive: 16 datawords x 7 flip positions
        for word in 0..16u8 {
            let data = BitStream::from_bits(
                (0..4).map(|i| (word >> (3 - i)) & 1).collect(),
            )
            .unwrap();
            let coded = encode(&data, CodecKind::Hamming74);
            // clean codeword decodes to itself
            assert_eq!(decode(&coded, CodecKind::Hamming74, 4).unwrap(), data);
            for flip in 0..7 {
                let mut corrupted = coded.as_slice().to_vec();
                corrupted[flip] ^= 1;
                let fixed = decode(
                    &BitStream::from_bits(corrupted).unwrap(),
                    CodecKind::Hamming74,
                    4,
                )
                .unwrap();
                assert_eq!(fixed, data, "word {word} flip {flip}");
            }
        }
    }

    #[test]
    fn hamming_pads_and_strips_odd_lengths() {
        let data = BitStream::from_bits(vec![1, 1, 0, 1, 0, 1]).unwrap();
        let coded = encode(&data, CodecKind::Hamming74);
        assert_eq!(coded.len(), 14);
        assert_eq!(decode(&coded, CodecKind::Hamming74, 6).unwrap(), data);
    }

    #[test]
    fn decode_rejects_bad_framing() {
        let coded = BitStream::from_bits(vec![0; 13]).unwrap();
        assert!(matches!(
            decode(&coded, CodecKind::Hamming74, 8),
            Err(CommError::Framing { .. })
        ));
    }

    #[test]
    fn bpsk_maps_and_demaps() {
        let bits = BitStream::from_bits(vec![0, 1, 1]).unwrap();
        assert_eq!(modulate_bpsk(&bits), vec![1.0, -1.0, -1.0]);
        assert!(modulate_bpsk(&BitStream::from_bits(vec![]).unwrap()).is_empty());
        // stated tie rule: exact zero demaps to 0
        let demod = demodulate_bpsk(&[0.3, -0.2, 0.0]);
        assert_eq!(demod.as_slice(), &[0, 1, 0]);
    }

    #[test]
    fn symbol_power_equals_symbol_count() {
        let bits = random_bits(257, Seed(5));
        let symbols = modulate_bpsk(&bits);
        assert_eq!(crate::snr::power(&symbols), 257.0);
    }

    #[test]
    fn noiseless_round_trip_is_identity() {
        for codec in [CodecKind::None, CodecKind::Hamming74] {
            let data = random_bits(10_000, Seed(6));
            let coded = encode(&data, codec);
            let symbols = modulate_bpsk(&coded);
            let cfg = ChannelConfig::new(
                StableParams::symmetric(1.5).unwrap(),
                SnrDb::INF,
                Seed(7),
            )
            .unwrap();
            let received = transmit(&symbols, &cfg).unwrap();
            assert_eq!(received, symbols);
            let recovered = decode(&demodulate_bpsk(&received), codec, 10_000).unwrap();
            assert_eq!(recovered, data);
        }
    }

    #[test]
    fn transmit_hits_the_requested_snr() {
        let symbols = modulate_bpsk(&random_bits(50_000, Seed(8)));
        for alpha in [0.5, 1.0, 2.0] {
            let cfg = ChannelConfig::new(
                StableParams::symmetric(alpha).unwrap(),
                SnrDb::new(0.0).unwrap(),
                Seed(9),
            )
            .unwrap();
            let received = transmit(&symbols, &cfg).unwrap();
            let achieved = crate::snr::snr_db_slices(&symbols, &received).unwrap();
            assert!(achieved.db().abs() < 1e-9, "alpha {alpha}: {} dB", achieved.db());
        }
    }

    #[test]
    fn transmit_is_reproducible_and_rejects_empty_input() {
        let cfg = ChannelConfig::new(
            StableParams::symmetric(1.2).unwrap(),
            SnrDb::new(5.0).unwrap(),
            Seed(10),
        )
        .unwrap();
        let symbols = modulate_bpsk(&random_bits(1000, Seed(11)));
        assert_eq!(transmit(&symbols, &cfg).unwrap(), transmit(&symbols, &cfg).unwrap());
        assert!(matches!(transmit(&[], &cfg), Err(CommError::EmptySymbols)));
    }

    #[test]
    fn channel_config_rejects_skewed_noise() {
        let skewed = StableParams::new(1.5, 0.5, 1.0, 0.0).unwrap();
        assert!(matches!(
            ChannelConfig::new(skewed, SnrDb::new(0.0).unwrap(), Seed(1)),
            Err(CommError::SkewedChannelNoise(_))
        ));
    }

    #[test]
    fn ber_counts_differing_positions() {
        let a = BitStream::from_bits(vec![0, 1, 0, 1]).unwrap();
        assert_eq!(ber(&a, &a).unwrap(), 0.0);
        let b = BitStream::from_bits(vec![1, 0, 1, 0]).unwrap();
        assert_eq!(ber(&a, &b).unwrap(), 1.0);
        let mut one_err = random_bits(1_000_000, Seed(12));
        let sent = one_err.clone();
        one_err.bits[123_456] ^= 1;
        assert_eq!(ber(&sent, &one_err).unwrap(), 1e-6);
        let short = BitStream::from_bits(vec![0]).unwrap();
        assert!(matches!(ber(&a, &short), Err(CommError::LengthMismatch { .. })));
    }

    #[test]
    fn sweep_at_infinite_snr_has_zero_ber() {
        let curves = ber_sweep(
            &[0.5, 2.0],
            &[SnrDb::INF],
            CodecKind::None,
            MIN_SWEEP_BITS,
            Seed(13),
        )
        .unwrap();
        for curve in curves {
            assert_eq!(curve.points[0].ber, 0.0);
            assert!(curve.points[0].achieved_snr_db.is_inf());
        }
    }

    #[test]
    fn sweep_is_reproducible_and_validates_inputs() {
        let grid = [SnrDb::new(0.0).unwrap(), SnrDb::new(8.0).unwrap()];
        let a = ber_sweep(&[1.5], &grid, CodecKind::Hamming74, MIN_SWEEP_BITS, Seed(14)).unwrap();
        let b = ber_sweep(&[1.5], &grid, CodecKind::Hamming74, MIN_SWEEP_BITS, Seed(14)).unwrap();
        assert_eq!(a[0].points.len(), 2);
        for (x, y) in a[0].points.iter().zip(&b[0].points) {
            assert_eq!(x.ber, y.ber);
            assert_eq!(x.achieved_snr_db, y.achieved_snr_db);
        }
        assert!(matches!(
            ber_sweep(&[], &grid, CodecKind::None, MIN_SWEEP_BITS, Seed(1)),
            Err(CommError::EmptyGrid)
        ));
        assert!(matches!(
            ber_sweep(&[1.5], &grid, CodecKind::None, 100, Seed(1)),
            Err(CommError::TooFewBits { .. })
        ));
    }
}
