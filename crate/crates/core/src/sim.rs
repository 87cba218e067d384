//! Link-level Monte-Carlo simulation of the downlink schemes.
//!
//! Five schemes share one physical setup: two users, complex AWGN, user 1 on
//! the stronger channel but the smaller transmit power. Each frame draws
//! fresh information bits and noise from a counter-derived RNG stream, so
//! results are reproducible bit-for-bit for a given seed no matter how many
//! worker threads process the frames.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::constellation::Constellation;
use crate::detect::{
    detect_user2_direct, joint_detect, qpsk_gray_modulate, sic_detect_user1, uncoded_ml_detect,
    ReceivedFrame,
};
use crate::error::{invalid_input, Result};
use crate::product::{tensor_product, PowerPair, ProductTrellis};
use crate::trellis::{encode_with_tail, InfoFrame, Trellis};

/// A transmission/detection scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Superposed trellis-coded streams, joint ML detection on the product
    /// trellis at both receivers.
    TcNomaJoint,
    /// Superposed trellis-coded streams, strong user decoded directly,
    /// weak user via successive interference cancellation.
    TcNomaSeparate,
    /// As `TcNomaJoint` with the weak user's constellation rotated by pi/8.
    TcNomaJointRotate,
    /// Equal-power trellis-coded multiple access: both users at
    /// `(p1+p2)/2`, weak user rotated by pi/8, joint detection.
    Tcma,
    /// Uncoded QPSK superposition with per-symbol joint ML detection.
    UcNoma,
}

impl Scheme {
    /// All schemes, in presentation order.
    pub fn all() -> [Scheme; 5] {
        [
            Scheme::TcNomaJoint,
            Scheme::TcNomaSeparate,
            Scheme::TcNomaJointRotate,
            Scheme::Tcma,
            Scheme::UcNoma,
        ]
    }

    /// Stable identifier used in CSV output and on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::TcNomaJoint => "tc-noma-joint",
            Scheme::TcNomaSeparate => "tc-noma-separate",
            Scheme::TcNomaJointRotate => "tc-noma-joint-rotate",
            Scheme::Tcma => "tcma",
            Scheme::UcNoma => "uc-noma",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::all()
            .into_iter()
            .find(|scheme| scheme.name() == s)
            .ok_or_else(|| invalid_input!("unknown scheme `{s}`"))
    }
}

/// Channel gains of the two users and the common noise variance.
///
/// User 1 (weak power) rides the stronger channel: `|h1| > |h2|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub h1: Complex64,
    pub h2: Complex64,
    pub noise_var: f64,
}

impl ChannelParams {
    pub fn new(h1: Complex64, h2: Complex64, noise_var: f64) -> Result<Self> {
        if !h1.is_finite() || !h2.is_finite() {
            return Err(invalid_input!("channel gains must be finite"));
        }
        if h2.norm_sqr() <= 0.0 {
            return Err(invalid_input!("channel gains must be nonzero"));
        }
        if h1.norm_sqr() <= h2.norm_sqr() {
            return Err(invalid_input!(
                "user 1 must have the stronger channel: |h1|^2 = {} <= |h2|^2 = {}",
                h1.norm_sqr(),
                h2.norm_sqr()
            ));
        }
        if !(noise_var.is_finite() && noise_var >= 0.0) {
            return Err(invalid_input!("noise variance must be nonnegative, got {noise_var}"));
        }
        Ok(Self { h1, h2, noise_var })
    }

    /// The default geometry: real gains with `|h1|^2 = 2`, `|h2|^2 = 1`.
    pub fn default_gains(noise_var: f64) -> Result<Self> {
        Self::new(Complex64::new(2f64.sqrt(), 0.0), Complex64::new(1.0, 0.0), noise_var)
    }

    /// Same gains with a different noise variance.
    pub fn with_noise_var(&self, noise_var: f64) -> Result<Self> {
        Self::new(self.h1, self.h2, noise_var)
    }
}

/// Noise variance for an SNR given as `1/noise_var` in dB.
pub fn noise_var_for_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Applies a complex gain and circular AWGN of variance `noise_var`.
///
/// Draws two standard normals per sample (real part first).
pub fn apply_channel<R: Rng>(
    x: &[Complex64],
    gain: Complex64,
    noise_var: f64,
    rng: &mut R,
) -> Vec<Complex64> {
    let sigma = (noise_var / 2.0).sqrt();
    x.iter()
        .map(|&s| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            gain * s + Complex64::new(sigma * re, sigma * im)
        })
        .collect()
}

/// A fully specified transmission scheme: codes, powers, rotation.
#[derive(Debug, Clone)]
pub struct SchemeConfig {
    scheme: Scheme,
    powers: PowerPair,
    trellis1: Trellis,
    trellis2: Trellis,
    rotation1: f64,
}

impl SchemeConfig {
    /// Configures `scheme` with the built-in 4-state 8-PSK codes.
    ///
    /// The weak user's rotation is fixed by the scheme: pi/8 for the rotated
    /// joint scheme and for equal-power multiple access, 0 otherwise.
    pub fn new(scheme: Scheme, powers: PowerPair) -> Self {
        Self::with_trellises(
            scheme,
            powers,
            Trellis::ungerboeck_4state(),
            Trellis::ungerboeck_4state(),
        )
        .expect("built-in codes fit the 8-PSK alphabet")
    }

    /// Configures `scheme` with custom codes labeling into 8-PSK.
    pub fn with_trellises(
        scheme: Scheme,
        powers: PowerPair,
        trellis1: Trellis,
        trellis2: Trellis,
    ) -> Result<Self> {
        for (who, t) in [(1, &trellis1), (2, &trellis2)] {
            if t.max_label_index() >= 8 {
                return Err(invalid_input!(
                    "trellis {who} labels index {} but the 8-PSK alphabet has 8 points",
                    t.max_label_index()
                ));
            }
        }
        let rotation1 = match scheme {
            Scheme::TcNomaJointRotate | Scheme::Tcma => std::f64::consts::FRAC_PI_8,
            _ => 0.0,
        };
        Ok(Self { scheme, powers, trellis1, trellis2, rotation1 })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn powers(&self) -> &PowerPair {
        &self.powers
    }

    /// Rotation applied to the weak user's constellation.
    pub fn rotation1(&self) -> f64 {
        self.rotation1
    }

    /// Information bits consumed per trellis step by each user.
    pub fn bits_per_step(&self) -> (usize, usize) {
        match self.scheme {
            Scheme::UcNoma => (2, 2),
            _ => (self.trellis1.bits_per_step(), self.trellis2.bits_per_step()),
        }
    }

    /// The power pair the joint detector sees (equal split for equal-power
    /// multiple access, the configured split otherwise).
    fn detection_powers(&self) -> PowerPair {
        match self.scheme {
            Scheme::Tcma => {
                let each = self.powers.total() / 2.0;
                PowerPair::relaxed(each, each).expect("positive total power")
            }
            _ => self.powers,
        }
    }

    fn constellation1(&self) -> Constellation {
        Constellation::psk8(self.rotation1)
    }

    fn constellation2(&self) -> Constellation {
        Constellation::psk8(0.0)
    }
}

/// A modulated, superposed frame ready for the channel.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitFrame {
    /// Baseband samples, information steps first, tail last.
    pub samples: Vec<Complex64>,
    /// Number of information-bearing steps.
    pub info_steps: usize,
}

/// Superposes both users' encoded streams: `sqrt(p1)*a1 + sqrt(p2)*a2` for
/// the power-split schemes, `sqrt((p1+p2)/2)*(a1 + a2)` for equal-power
/// multiple access, and Gray-QPSK superposition for the uncoded scheme.
pub fn transmit(cfg: &SchemeConfig, bits1: &[u8], bits2: &[u8]) -> Result<TransmitFrame> {
    match cfg.scheme {
        Scheme::UcNoma => {
            let s1 = qpsk_gray_modulate(bits1, &Constellation::qpsk(0.0))?;
            let s2 = qpsk_gray_modulate(bits2, &Constellation::qpsk(0.0))?;
            if s1.len() != s2.len() {
                return Err(invalid_input!(
                    "users must send equally many symbols, got {} and {}",
                    s1.len(),
                    s2.len()
                ));
            }
            let (a1, a2) = (cfg.powers.p1().sqrt(), cfg.powers.p2().sqrt());
            let samples: Vec<Complex64> =
                s1.iter().zip(&s2).map(|(x1, x2)| a1 * x1 + a2 * x2).collect();
            let info_steps = samples.len();
            Ok(TransmitFrame { samples, info_steps })
        }
        _ => {
            let (w1, w2) = (cfg.trellis1.bits_per_step(), cfg.trellis2.bits_per_step());
            if w1 == 0 || w2 == 0 {
                return Err(invalid_input!("zero-rate trellises cannot carry frames"));
            }
            let frame1 = InfoFrame::for_step_width(bits1.to_vec(), w1)?;
            let frame2 = InfoFrame::for_step_width(bits2.to_vec(), w2)?;
            if frame1.steps() != frame2.steps() {
                return Err(invalid_input!(
                    "users must span equally many steps, got {} and {}",
                    frame1.steps(),
                    frame2.steps()
                ));
            }
            let tail =
                cfg.trellis1.termination_depth().max(cfg.trellis2.termination_depth());
            let e1 = encode_with_tail(&cfg.trellis1, &cfg.constellation1(), &frame1, tail)?;
            let e2 = encode_with_tail(&cfg.trellis2, &cfg.constellation2(), &frame2, tail)?;
            let powers = cfg.detection_powers();
            let (a1, a2) = (powers.p1().sqrt(), powers.p2().sqrt());
            let samples: Vec<Complex64> = e1
                .symbols
                .iter()
                .zip(&e2.symbols)
                .map(|(x1, x2)| a1 * x1 + a2 * x2)
                .collect();
            Ok(TransmitFrame { samples, info_steps: frame1.steps() })
        }
    }
}

/// Equal-power multiple-access transmit, exposed for direct use; equivalent
/// to [`transmit`] with the corresponding scheme.
pub fn transmit_tcma(cfg: &SchemeConfig, bits1: &[u8], bits2: &[u8]) -> Result<TransmitFrame> {
    if cfg.scheme != Scheme::Tcma {
        return Err(invalid_input!("configuration is for {}, not equal-power access", cfg.scheme));
    }
    transmit(cfg, bits1, bits2)
}

/// One BER measurement point.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub scheme: Scheme,
    pub snr_db: f64,
    pub p1: f64,
    pub p2: f64,
    pub ber_user1: f64,
    pub ber_user2: f64,
    /// Pooled over both users' bits.
    pub ber_avg: f64,
    pub frames: usize,
    pub seed: u64,
}

/// Monte-Carlo size and seeding for [`run_ber`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimParams {
    /// Frames per SNR point.
    pub frames: usize,
    /// Information steps per frame (tail steps come on top).
    pub info_steps: usize,
    /// Master seed; every (SNR, frame) pair derives its own stream.
    pub seed: u64,
}

/// Derives the RNG for one frame from the master seed and the frame's
/// coordinates. SplitMix64-style mixing keeps nearby coordinates
/// uncorrelated while staying independent of thread scheduling.
fn frame_rng(seed: u64, snr_idx: usize, frame: usize) -> ChaCha8Rng {
    let stream = ((snr_idx as u64) << 32) | frame as u64;
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

/// Per-scheme receiver state shared across frames.
enum DetectorKit {
    Joint(ProductTrellis),
    Separate,
    Uncoded,
}

/// Measures BER for `cfg` at each SNR point.
///
/// Per frame and user, fresh bits are drawn, the superposition passes each
/// user's channel (independent noise), and each user detects at their own
/// receiver. Frames are processed in parallel; error counts are summed with
/// a commutative reduction, so the output is identical for any worker count.
pub fn run_ber(
    cfg: &SchemeConfig,
    channel: &ChannelParams,
    snr_db: &[f64],
    sim: &SimParams,
) -> Result<Vec<BerRecord>> {
    if snr_db.is_empty() {
        return Err(invalid_input!("at least one SNR point is required"));
    }
    if sim.frames == 0 || sim.frames > u32::MAX as usize {
        return Err(invalid_input!("frame count must be in 1..2^32, got {}", sim.frames));
    }
    if sim.info_steps == 0 {
        return Err(invalid_input!("frames must carry at least one information step"));
    }

    let detection_powers = cfg.detection_powers();
    let kit = match cfg.scheme {
        Scheme::TcNomaJoint | Scheme::TcNomaJointRotate | Scheme::Tcma => {
            DetectorKit::Joint(tensor_product(
                &cfg.trellis1,
                &cfg.constellation1(),
                &cfg.trellis2,
                &cfg.constellation2(),
                &detection_powers,
            )?)
        }
        Scheme::TcNomaSeparate => DetectorKit::Separate,
        Scheme::UcNoma => DetectorKit::Uncoded,
    };
    let (c1, c2) = (cfg.constellation1(), cfg.constellation2());
    let (width1, width2) = cfg.bits_per_step();

    // Surface shape/validation errors once, outside the hot loop.
    transmit(cfg, &vec![0u8; sim.info_steps * width1], &vec![0u8; sim.info_steps * width2])?;

    let mut records = Vec::with_capacity(snr_db.len());
    for (snr_idx, &snr) in snr_db.iter().enumerate() {
        let noise_var = noise_var_for_snr_db(snr);
        let (errs1, errs2) = (0..sim.frames)
            .into_par_iter()
            .map(|frame| {
                let mut rng = frame_rng(sim.seed, snr_idx, frame);
                let bits1: Vec<u8> =
                    (0..sim.info_steps * width1).map(|_| rng.random_range(0..2u8)).collect();
                let bits2: Vec<u8> =
                    (0..sim.info_steps * width2).map(|_| rng.random_range(0..2u8)).collect();
                let tx = transmit(cfg, &bits1, &bits2).expect("shape validated above");
                let y1 = apply_channel(&tx.samples, channel.h1, noise_var, &mut rng);
                let y2 = apply_channel(&tx.samples, channel.h2, noise_var, &mut rng);
                let rx1 = ReceivedFrame::new(y1, channel.h1, noise_var, tx.info_steps)
                    .expect("frame geometry is valid");
                let rx2 = ReceivedFrame::new(y2, channel.h2, noise_var, tx.info_steps)
                    .expect("frame geometry is valid");

                let (hat1, hat2) = match &kit {
                    DetectorKit::Joint(product) => (
                        joint_detect(product, &rx1).expect("validated inputs").bits_user1,
                        joint_detect(product, &rx2).expect("validated inputs").bits_user2,
                    ),
                    DetectorKit::Separate => (
                        sic_detect_user1(
                            &cfg.trellis1,
                            &c1,
                            &cfg.trellis2,
                            &c2,
                            &rx1,
                            &detection_powers,
                        )
                        .expect("validated inputs")
                        .bits_user1,
                        detect_user2_direct(&cfg.trellis2, &c2, &rx2, &detection_powers)
                            .expect("validated inputs")
                            .bits_user2,
                    ),
                    DetectorKit::Uncoded => (
                        uncoded_ml_detect(&rx1, &detection_powers)
                            .expect("validated inputs")
                            .bits_user1,
                        uncoded_ml_detect(&rx2, &detection_powers)
                            .expect("validated inputs")
                            .bits_user2,
                    ),
                };
                let e1 = hat1.iter().zip(&bits1).filter(|(a, b)| a != b).count() as u64;
                let e2 = hat2.iter().zip(&bits2).filter(|(a, b)| a != b).count() as u64;
                (e1, e2)
            })
            .reduce(|| (0u64, 0u64), |a, b| (a.0 + b.0, a.1 + b.1));

        let n1 = (sim.frames * sim.info_steps * width1) as f64;
        let n2 = (sim.frames * sim.info_steps * width2) as f64;
        records.push(BerRecord {
            scheme: cfg.scheme,
            snr_db: snr,
            p1: cfg.powers.p1(),
            p2: cfg.powers.p2(),
            ber_user1: errs1 as f64 / n1,
            ber_user2: errs2 as f64 / n2,
            ber_avg: (errs1 + errs2) as f64 / (n1 + n2),
            frames: sim.frames,
            seed: sim.seed,
        });
    }
    Ok(records)
}

/// CSV header matching [`ber_csv_rows`].
pub const BER_CSV_HEADER: &str = "scheme,snr_db,p1,p2,ber_user1,ber_user2,ber_avg,frames,seed";

/// Renders records as CSV (header + one row per record). Float formatting is
/// Rust's shortest round-trip representation, so output is byte-stable.
pub fn ber_csv(records: &[BerRecord]) -> String {
    let mut out = String::from(BER_CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.scheme, r.snr_db, r.p1, r.p2, r.ber_user1, r.ber_user2, r.ber_avg, r.frames, r.seed
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn powers() -> PowerPair {
        PowerPair::new(0.25, 1.0).unwrap()
    }

    #[test]
    fn scheme_names_round_trip() {
        for scheme in Scheme::all() {
            assert_eq!(scheme.name().parse::<Scheme>().unwrap(), scheme);
        }
        assert!("tc-noma".parse::<Scheme>().is_err());
    }

    #[test]
    fn channel_params_enforce_user_ordering() {
        let h = |x: f64| Complex64::new(x, 0.0);
        assert!(ChannelParams::new(h(2.0), h(1.0), 0.1).is_ok());
        assert!(ChannelParams::new(h(1.0), h(1.0), 0.1).is_err());
        assert!(ChannelParams::new(h(1.0), h(2.0), 0.1).is_err());
        assert!(ChannelParams::new(h(2.0), h(0.0), 0.1).is_err());
        assert!(ChannelParams::new(h(2.0), h(1.0), -0.1).is_err());
        let ch = ChannelParams::default_gains(0.5).unwrap();
        assert!((ch.h1.norm_sqr() - 2.0).abs() < 1e-12);
        assert!((ch.h2.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn snr_conversion_is_reciprocal_power() {
        assert!((noise_var_for_snr_db(0.0) - 1.0).abs() < 1e-15);
        assert!((noise_var_for_snr_db(10.0) - 0.1).abs() < 1e-15);
        assert!((noise_var_for_snr_db(-10.0) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn transmit_superposes_power_weighted_streams() {
        // One step, bits (0,0) and (1,0): user 1 sends point 0 = 1, user 2
        // sends point 2 = j; with p = (0.25, 1) the first sample is 0.5 + j.
        let cfg = SchemeConfig::new(Scheme::TcNomaJoint, powers());
        let tx = transmit(&cfg, &[0, 0], &[1, 0]).unwrap();
        assert_eq!(tx.info_steps, 1);
        assert_eq!(tx.samples.len(), 3, "one info step plus two tail steps");
        assert!((tx.samples[0] - Complex64::new(0.5, 1.0)).norm() < 1e-12);
        // Tail: user 1 idles at point 0 (0.5), user 2 walks states 1 -> 2 -> 0
        // emitting points 1 then 2.
        let p1 = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        assert!((tx.samples[1] - (Complex64::new(0.5, 0.0) + p1)).norm() < 1e-12);
        assert!((tx.samples[2] - Complex64::new(0.5, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn rotated_scheme_rotates_only_the_weak_user() {
        let cfg = SchemeConfig::new(Scheme::TcNomaJointRotate, powers());
        assert!((cfg.rotation1() - std::f64::consts::FRAC_PI_8).abs() < 1e-15);
        let tx = transmit(&cfg, &[0, 0], &[0, 0]).unwrap();
        let expect = 0.5 * Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_8)
            + Complex64::new(1.0, 0.0);
        assert!((tx.samples[0] - expect).norm() < 1e-12);
        let plain = SchemeConfig::new(Scheme::TcNomaJoint, powers());
        assert!((plain.rotation1() - 0.0).abs() < 1e-15);
    }

    #[test]
    fn tcma_transmits_equal_amplitudes() {
        let cfg = SchemeConfig::new(Scheme::Tcma, powers());
        let tx = transmit_tcma(&cfg, &[0, 0], &[0, 0]).unwrap();
        // Both users at sqrt(1.25/2); user 1 rotated by pi/8.
        let amp = (1.25f64 / 2.0).sqrt();
        let expect = amp * Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_8)
            + amp * Complex64::new(1.0, 0.0);
        assert!((tx.samples[0] - expect).norm() < 1e-12);
        // And rejects configs for other schemes.
        let other = SchemeConfig::new(Scheme::TcNomaJoint, powers());
        assert!(transmit_tcma(&other, &[0, 0], &[0, 0]).is_err());
    }

    #[test]
    fn uncoded_frames_carry_no_tail() {
        let cfg = SchemeConfig::new(Scheme::UcNoma, powers());
        let tx = transmit(&cfg, &[0, 0, 1, 1], &[0, 1, 1, 0]).unwrap();
        assert_eq!(tx.info_steps, 2);
        assert_eq!(tx.samples.len(), 2);
    }

    #[test]
    fn transmit_rejects_mismatched_frames() {
        let cfg = SchemeConfig::new(Scheme::TcNomaJoint, powers());
        assert!(transmit(&cfg, &[0, 0], &[0, 0, 0, 0]).is_err());
        assert!(transmit(&cfg, &[0], &[0, 0]).is_err());
    }

    #[test]
    fn channel_is_exact_without_noise_and_calibrated_with_it() {
        let x = vec![Complex64::new(1.0, -0.5); 4];
        let gain = Complex64::new(0.3, 0.7);
        let mut rng = frame_rng(1, 0, 0);
        let y = apply_channel(&x, gain, 0.0, &mut rng);
        for (a, b) in y.iter().zip(&x) {
            assert_eq!(*a, gain * b);
        }

        // Empirical noise power matches the requested variance.
        let n = 200_000;
        let zeros = vec![Complex64::new(0.0, 0.0); n];
        let mut rng = frame_rng(2, 0, 0);
        let y = apply_channel(&zeros, gain, 0.8, &mut rng);
        let avg = y.iter().map(|w| w.norm_sqr()).sum::<f64>() / n as f64;
        assert!(
            (avg - 0.8).abs() < 0.8 * 0.02,
            "noise power {avg} deviates from 0.8 by more than 2%"
        );
    }

    #[test]
    fn run_ber_is_reproducible_and_quiet_at_high_snr() {
        let ch = ChannelParams::default_gains(1.0).unwrap();
        let sim = SimParams { frames: 4, info_steps: 30, seed: 99 };
        for scheme in Scheme::all() {
            let cfg = SchemeConfig::new(scheme, powers());
            let a = run_ber(&cfg, &ch, &[110.0], &sim).unwrap();
            let b = run_ber(&cfg, &ch, &[110.0], &sim).unwrap();
            assert_eq!(a, b, "{scheme}: same seed must reproduce");
            assert_eq!(a[0].ber_avg, 0.0, "{scheme}: errors at 110 dB");
            assert_eq!(a[0].frames, 4);
        }
    }

    #[test]
    fn run_ber_validates_inputs() {
        let cfg = SchemeConfig::new(Scheme::TcNomaJoint, powers());
        let ch = ChannelParams::default_gains(1.0).unwrap();
        let ok = SimParams { frames: 1, info_steps: 4, seed: 0 };
        assert!(run_ber(&cfg, &ch, &[], &ok).is_err(), "empty SNR list");
        let zero_frames = SimParams { frames: 0, ..ok };
        assert!(run_ber(&cfg, &ch, &[10.0], &zero_frames).is_err());
        let zero_steps = SimParams { info_steps: 0, ..ok };
        assert!(run_ber(&cfg, &ch, &[10.0], &zero_steps).is_err());
    }

    #[test]
    fn joint_detection_is_phase_insensitive() {
        // The metric compensates the channel phase, so rotating h1 must not
        // change the error statistics materially (same magnitudes, fresh
        // noise): compare two phases at a moderately noisy operating point.
        let sim = SimParams { frames: 150, info_steps: 60, seed: 1234 };
        let cfg = SchemeConfig::new(Scheme::TcNomaJoint, PowerPair::new(0.3, 1.0).unwrap());
        let flat = ChannelParams::default_gains(1.0).unwrap();
        let spun = ChannelParams::new(
            Complex64::from_polar(2f64.sqrt(), 0.7),
            Complex64::new(1.0, 0.0),
            1.0,
        )
        .unwrap();
        let a = run_ber(&cfg, &flat, &[13.0], &sim).unwrap()[0].ber_avg;
        let b = run_ber(&cfg, &spun, &[13.0], &sim).unwrap()[0].ber_avg;
        assert!(a > 0.0 && b > 0.0, "operating point should produce errors");
        let ratio = a.max(b) / a.min(b);
        assert!(ratio < 2.0, "phase rotation changed BER by more than noise: {a} vs {b}");
    }

    #[test]
    fn csv_is_stable_and_schema_complete() {
        let rec = BerRecord {
            scheme: Scheme::TcNomaJoint,
            snr_db: 18.0,
            p1: 0.1,
            p2: 1.0,
            ber_user1: 0.00125,
            ber_user2: 0.5e-3,
            ber_avg: 0.000875,
            frames: 2000,
            seed: 42,
        };
        let csv = ber_csv(&[rec.clone()]);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), BER_CSV_HEADER);
        assert_eq!(
            lines.next().unwrap(),
            "tc-noma-joint,18,0.1,1,0.00125,0.0005,0.000875,2000,42"
        );
        assert_eq!(csv, ber_csv(&[rec]));
    }
}
