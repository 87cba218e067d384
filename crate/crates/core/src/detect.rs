//! Sequence detection: Viterbi on single and product trellises, successive
//! interference cancellation, and per-symbol ML for uncoded transmission.
//!
//! All detectors minimize the squared Euclidean metric `|y - scale*label|^2`
//! and assume frames that start in state 0 and are driven back to state 0 by
//! tail steps. Tie-breaking is deterministic everywhere: lowest branch index,
//! then lowest parallel-label index, then lowest predecessor state.

use num_complex::Complex64;

use crate::constellation::Constellation;
use crate::error::{invalid_input, Result};
use crate::product::{PowerPair, ProductTrellis};
use crate::trellis::{encode_with_tail, value_bits, InfoFrame, Trellis};

/// A trellis as seen by the Viterbi recursion: regular branching with
/// precomputable complex labels.
pub trait ViterbiTrellis {
    fn num_states(&self) -> usize;
    fn branches_per_state(&self) -> usize;
    fn labels_per_branch(&self) -> usize;
    fn next_state(&self, state: usize, branch: usize) -> usize;
    fn label(&self, state: usize, branch: usize, label: usize) -> Complex64;
    /// The only branch allowed during tail steps (parallel label 0).
    fn tail_branch(&self, state: usize) -> usize;
}

/// A [`Trellis`] paired with the constellation its labels index into.
#[derive(Debug, Clone, Copy)]
pub struct LabeledTrellis<'a> {
    trellis: &'a Trellis,
    constellation: &'a Constellation,
}

impl<'a> LabeledTrellis<'a> {
    pub fn new(trellis: &'a Trellis, constellation: &'a Constellation) -> Result<Self> {
        if trellis.max_label_index() >= constellation.len() {
            return Err(invalid_input!(
                "trellis references constellation index {} but only {} points exist",
                trellis.max_label_index(),
                constellation.len()
            ));
        }
        Ok(Self { trellis, constellation })
    }
}

impl ViterbiTrellis for LabeledTrellis<'_> {
    fn num_states(&self) -> usize {
        self.trellis.num_states()
    }

    fn branches_per_state(&self) -> usize {
        self.trellis.branches_per_state()
    }

    fn labels_per_branch(&self) -> usize {
        self.trellis.labels_per_branch()
    }

    fn next_state(&self, state: usize, branch: usize) -> usize {
        self.trellis.branches(state)[branch].next_state
    }

    fn label(&self, state: usize, branch: usize, label: usize) -> Complex64 {
        self.constellation.points()[self.trellis.branches(state)[branch].labels[label]]
    }

    fn tail_branch(&self, state: usize) -> usize {
        self.trellis.tail_branch(state)
    }
}

impl ViterbiTrellis for ProductTrellis {
    fn num_states(&self) -> usize {
        self.num_states()
    }

    fn branches_per_state(&self) -> usize {
        self.branches_per_state()
    }

    fn labels_per_branch(&self) -> usize {
        self.labels_per_branch()
    }

    fn next_state(&self, state: usize, branch: usize) -> usize {
        self.branches(state)[branch].next_state
    }

    fn label(&self, state: usize, branch: usize, label: usize) -> Complex64 {
        self.branches(state)[branch].labels[label]
    }

    fn tail_branch(&self, state: usize) -> usize {
        self.tail_branch(state)
    }
}

/// One user's view of a received frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedFrame {
    /// Channel output, information steps first, tail steps last.
    pub samples: Vec<Complex64>,
    /// Complex channel gain multiplying the transmitted superposition.
    pub channel_gain: Complex64,
    /// Variance of the circular complex noise.
    pub noise_var: f64,
    /// Number of information-bearing steps; the rest is tail.
    pub info_steps: usize,
}

impl ReceivedFrame {
    pub fn new(
        samples: Vec<Complex64>,
        channel_gain: Complex64,
        noise_var: f64,
        info_steps: usize,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid_input!("received frame has no samples"));
        }
        if info_steps > samples.len() {
            return Err(invalid_input!(
                "info_steps {info_steps} exceeds frame length {}",
                samples.len()
            ));
        }
        if channel_gain.norm_sqr() == 0.0 || !channel_gain.is_finite() {
            return Err(invalid_input!("channel gain must be finite and nonzero"));
        }
        if !(noise_var.is_finite() && noise_var >= 0.0) {
            return Err(invalid_input!("noise variance must be nonnegative, got {noise_var}"));
        }
        Ok(Self { samples, channel_gain, noise_var, info_steps })
    }

    /// Tail steps carried by the frame.
    pub fn tail_steps(&self) -> usize {
        self.samples.len() - self.info_steps
    }
}

/// Maximum-likelihood state path found by [`viterbi`].
#[derive(Debug, Clone, PartialEq)]
pub struct ViterbiPath {
    /// Accumulated squared-distance metric of the winning path.
    pub metric: f64,
    /// Visited states, `samples.len() + 1` entries starting and ending at 0.
    pub states: Vec<usize>,
    /// Chosen `(branch, parallel label)` per step.
    pub steps: Vec<(usize, usize)>,
}

/// Viterbi decoding of `samples` against `scale * label`.
///
/// The first `info_steps` steps search all branches and parallel labels;
/// the remaining tail steps are constrained to each state's tail branch with
/// parallel label 0, exactly mirroring the encoder's termination. The
/// searched path set is therefore in bijection with encodable frames, and
/// the decoder is exact maximum likelihood over that set.
pub fn viterbi<G: ViterbiTrellis>(
    graph: &G,
    samples: &[Complex64],
    info_steps: usize,
    scale: Complex64,
) -> Result<ViterbiPath> {
    if samples.is_empty() {
        return Err(invalid_input!("cannot decode an empty frame"));
    }
    if info_steps > samples.len() {
        return Err(invalid_input!(
            "info_steps {info_steps} exceeds frame length {}",
            samples.len()
        ));
    }
    if scale.norm_sqr() == 0.0 || !scale.is_finite() {
        return Err(invalid_input!("label scale must be finite and nonzero"));
    }

    let states = graph.num_states();
    let nb = graph.branches_per_state();
    let nl = graph.labels_per_branch();

    // Labels are step-invariant; scale them once.
    let mut scaled = vec![Complex64::new(0.0, 0.0); states * nb * nl];
    for s in 0..states {
        for b in 0..nb {
            for l in 0..nl {
                scaled[(s * nb + b) * nl + l] = scale * graph.label(s, b, l);
            }
        }
    }

    let mut metric = vec![f64::INFINITY; states];
    metric[0] = 0.0;
    let mut next = vec![f64::INFINITY; states];
    // Backpointers per step: (predecessor, branch, label) packed small.
    let mut back: Vec<Vec<(u32, u32, u32)>> = Vec::with_capacity(samples.len());

    for (n, &y) in samples.iter().enumerate() {
        let tail = n >= info_steps;
        next.fill(f64::INFINITY);
        let mut bp = vec![(u32::MAX, 0u32, 0u32); states];
        for s in 0..states {
            let m = metric[s];
            if !m.is_finite() {
                continue;
            }
            let (b_lo, b_hi) = if tail {
                (graph.tail_branch(s), graph.tail_branch(s) + 1)
            } else {
                (0, nb)
            };
            for b in b_lo..b_hi {
                let base = (s * nb + b) * nl;
                // Best parallel label: strict improvement keeps the lowest
                // index. Tail steps are pinned to label 0.
                let mut best_label = 0usize;
                let mut best_cost = (y - scaled[base]).norm_sqr();
                if !tail {
                    for l in 1..nl {
                        let c = (y - scaled[base + l]).norm_sqr();
                        if c < best_cost {
                            best_cost = c;
                            best_label = l;
                        }
                    }
                }
                let cand = m + best_cost;
                let t = graph.next_state(s, b);
                let replace = if cand < next[t] {
                    true
                } else if cand == next[t] {
                    let (pred, branch, _) = bp[t];
                    (b as u32) < branch || ((b as u32) == branch && (s as u32) < pred)
                } else {
                    false
                };
                if replace {
                    next[t] = cand;
                    bp[t] = (s as u32, b as u32, best_label as u32);
                }
            }
        }
        std::mem::swap(&mut metric, &mut next);
        back.push(bp);
    }

    if !metric[0].is_finite() {
        return Err(invalid_input!(
            "no path terminates in state 0 within {} tail steps",
            samples.len() - info_steps
        ));
    }

    let mut path_states = vec![0usize; samples.len() + 1];
    let mut steps = vec![(0usize, 0usize); samples.len()];
    let mut cursor = 0usize;
    for n in (0..samples.len()).rev() {
        let (pred, branch, label) = back[n][cursor];
        path_states[n + 1] = cursor;
        steps[n] = (branch as usize, label as usize);
        cursor = pred as usize;
    }
    path_states[0] = cursor;
    debug_assert_eq!(cursor, 0, "surviving paths are rooted at state 0");

    Ok(ViterbiPath { metric: metric[0], states: path_states, steps })
}

/// Output of a detector: recovered bits and the decoded state path.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    /// Information bits of user 1 (empty for detectors that skip user 1).
    pub bits_user1: Vec<u8>,
    /// Information bits of user 2.
    pub bits_user2: Vec<u8>,
    /// Metric of the winning path (or symbol-metric sum for uncoded).
    pub path_metric: f64,
    /// Winning state path where a trellis is involved.
    pub decoded_path: Vec<usize>,
}

/// Reads one user's information bits off a decoded single-trellis path.
fn single_user_bits(trellis: &Trellis, path: &ViterbiPath, info_steps: usize) -> Vec<u8> {
    let mut bits = Vec::with_capacity(info_steps * trellis.bits_per_step());
    for n in 0..info_steps {
        let (branch, label) = path.steps[n];
        bits.extend(value_bits(branch, trellis.branch_bits()));
        bits.extend(value_bits(label, trellis.parallel_bits()));
    }
    bits
}

/// Joint maximum-likelihood detection of both users on the product trellis.
pub fn joint_detect(product: &ProductTrellis, rx: &ReceivedFrame) -> Result<DetectionResult> {
    let path = viterbi(product, &rx.samples, rx.info_steps, rx.channel_gain)?;
    let (bb1, bb2) = product.branch_bits();
    let (pb1, pb2) = product.parallel_bits();
    let mut bits1 = Vec::with_capacity(rx.info_steps * (bb1 + pb1));
    let mut bits2 = Vec::with_capacity(rx.info_steps * (bb2 + pb2));
    for n in 0..rx.info_steps {
        let (branch, label) = path.steps[n];
        let b = &product.branches(path.states[n])[branch];
        let (l1, l2) = b.label_source[label];
        bits1.extend(value_bits(b.source.0, bb1));
        bits1.extend(value_bits(l1, pb1));
        bits2.extend(value_bits(b.source.1, bb2));
        bits2.extend(value_bits(l2, pb2));
    }
    Ok(DetectionResult {
        bits_user1: bits1,
        bits_user2: bits2,
        path_metric: path.metric,
        decoded_path: path.states,
    })
}

/// Detects the strong user directly, treating the weak user as noise.
pub fn detect_user2_direct(
    trellis2: &Trellis,
    constellation2: &Constellation,
    rx: &ReceivedFrame,
    powers: &PowerPair,
) -> Result<DetectionResult> {
    let graph = LabeledTrellis::new(trellis2, constellation2)?;
    let scale = rx.channel_gain * powers.p2().sqrt();
    let path = viterbi(&graph, &rx.samples, rx.info_steps, scale)?;
    let bits2 = single_user_bits(trellis2, &path, rx.info_steps);
    Ok(DetectionResult {
        bits_user1: Vec::new(),
        bits_user2: bits2,
        path_metric: path.metric,
        decoded_path: path.states,
    })
}

/// Detects the weak user by successive interference cancellation: decode the
/// strong user, re-encode and subtract it, then decode the weak user on the
/// residual.
///
/// `bits_user2` carries the stage-1 estimate; metric and path refer to the
/// final weak-user decode.
pub fn sic_detect_user1(
    trellis1: &Trellis,
    constellation1: &Constellation,
    trellis2: &Trellis,
    constellation2: &Constellation,
    rx: &ReceivedFrame,
    powers: &PowerPair,
) -> Result<DetectionResult> {
    let stage1 = detect_user2_direct(trellis2, constellation2, rx, powers)?;

    let frame2 = InfoFrame::new(stage1.bits_user2.clone(), rx.info_steps)?;
    let enc2 = encode_with_tail(trellis2, constellation2, &frame2, rx.tail_steps())?;
    let gain2 = rx.channel_gain * powers.p2().sqrt();
    let residual: Vec<Complex64> = rx
        .samples
        .iter()
        .zip(&enc2.symbols)
        .map(|(y, a)| y - gain2 * a)
        .collect();

    let graph = LabeledTrellis::new(trellis1, constellation1)?;
    let scale = rx.channel_gain * powers.p1().sqrt();
    let path = viterbi(&graph, &residual, rx.info_steps, scale)?;
    let bits1 = single_user_bits(trellis1, &path, rx.info_steps);
    Ok(DetectionResult {
        bits_user1: bits1,
        bits_user2: stage1.bits_user2,
        path_metric: path.metric,
        decoded_path: path.states,
    })
}

/// Gray mapping from a 2-bit value to a QPSK point index. Self-inverse:
/// adjacent points differ in exactly one bit.
const QPSK_GRAY: [usize; 4] = [0, 1, 3, 2];

/// Maps bit pairs onto Gray-coded QPSK points of `constellation`.
pub fn qpsk_gray_modulate(bits: &[u8], constellation: &Constellation) -> Result<Vec<Complex64>> {
    if constellation.len() != 4 {
        return Err(invalid_input!(
            "Gray QPSK mapping needs a 4-point constellation, got {}",
            constellation.len()
        ));
    }
    if !bits.len().is_multiple_of(2) {
        return Err(invalid_input!("QPSK consumes bit pairs, got {} bits", bits.len()));
    }
    if bits.iter().any(|&b| b > 1) {
        return Err(invalid_input!("bits must be 0 or 1"));
    }
    bits.chunks_exact(2)
        .map(|p| constellation.point(QPSK_GRAY[(p[0] * 2 + p[1]) as usize]))
        .collect()
}

/// Per-symbol joint ML detection of two superposed uncoded QPSK streams.
///
/// Every sample is matched against the 16 superposed points; ties resolve to
/// the lowest `(m1, m2)` pair. Uncoded frames carry no tail, so
/// `rx.info_steps` must equal the frame length.
pub fn uncoded_ml_detect(rx: &ReceivedFrame, powers: &PowerPair) -> Result<DetectionResult> {
    if rx.info_steps != rx.samples.len() {
        return Err(invalid_input!(
            "uncoded frames have no tail: info_steps {} != {} samples",
            rx.info_steps,
            rx.samples.len()
        ));
    }
    let constellation = Constellation::qpsk(0.0);
    let a1 = powers.p1().sqrt();
    let a2 = powers.p2().sqrt();
    let mut table = [Complex64::new(0.0, 0.0); 16];
    for m1 in 0..4 {
        for m2 in 0..4 {
            let point = a1 * constellation.points()[m1] + a2 * constellation.points()[m2];
            table[m1 * 4 + m2] = rx.channel_gain * point;
        }
    }

    let mut bits1 = Vec::with_capacity(rx.samples.len() * 2);
    let mut bits2 = Vec::with_capacity(rx.samples.len() * 2);
    let mut metric = 0.0;
    for &y in &rx.samples {
        let mut best = 0usize;
        let mut best_cost = (y - table[0]).norm_sqr();
        for (idx, point) in table.iter().enumerate().skip(1) {
            let c = (y - point).norm_sqr();
            if c < best_cost {
                best_cost = c;
                best = idx;
            }
        }
        metric += best_cost;
        bits1.extend(value_bits(QPSK_GRAY[best / 4], 2));
        bits2.extend(value_bits(QPSK_GRAY[best % 4], 2));
    }
    Ok(DetectionResult {
        bits_user1: bits1,
        bits_user2: bits2,
        path_metric: metric,
        decoded_path: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::product::tensor_product;
    use crate::trellis::encode;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn psk8() -> Constellation {
        Constellation::psk8(0.0)
    }

    fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
        (0..n).map(|_| rng.random_range(0..2u8)).collect()
    }

    fn superpose(
        a1: &[Complex64],
        a2: &[Complex64],
        powers: &PowerPair,
        gain: Complex64,
    ) -> Vec<Complex64> {
        let (s1, s2) = (powers.p1().sqrt(), powers.p2().sqrt());
        a1.iter().zip(a2).map(|(x1, x2)| gain * (s1 * x1 + s2 * x2)).collect()
    }

    #[test]
    fn joint_detection_round_trips_without_noise() {
        let t = Trellis::ungerboeck_4state();
        let c = psk8();
        let powers = PowerPair::new(0.3, 1.0).unwrap();
        let pt = tensor_product(&t, &c, &t, &c, &powers).unwrap();
        let gain = Complex64::new(2f64.sqrt(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let b1 = random_bits(&mut rng, 16);
            let b2 = random_bits(&mut rng, 16);
            let e1 = encode_with_tail(&t, &c, &InfoFrame::new(b1.clone(), 8).unwrap(), 2).unwrap();
            let e2 = encode_with_tail(&t, &c, &InfoFrame::new(b2.clone(), 8).unwrap(), 2).unwrap();
            let samples = superpose(&e1.symbols, &e2.symbols, &powers, gain);
            let rx = ReceivedFrame::new(samples, gain, 1e-9, 8).unwrap();
            let out = joint_detect(&pt, &rx).unwrap();
            assert_eq!(out.bits_user1, b1);
            assert_eq!(out.bits_user2, b2);
            assert!(out.path_metric < 1e-18);
            assert_eq!(out.decoded_path[0], 0);
            assert_eq!(*out.decoded_path.last().unwrap(), 0);
        }
    }

    #[test]
    fn joint_detection_handles_rotated_weak_user() {
        let t = Trellis::ungerboeck_4state();
        let c1 = Constellation::psk8(std::f64::consts::FRAC_PI_8);
        let c2 = psk8();
        let powers = PowerPair::new(0.3, 1.0).unwrap();
        let pt = tensor_product(&t, &c1, &t, &c2, &powers).unwrap();
        let gain = Complex64::new(1.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let b1 = random_bits(&mut rng, 20);
        let b2 = random_bits(&mut rng, 20);
        let e1 = encode_with_tail(&t, &c1, &InfoFrame::new(b1.clone(), 10).unwrap(), 2).unwrap();
        let e2 = encode_with_tail(&t, &c2, &InfoFrame::new(b2.clone(), 10).unwrap(), 2).unwrap();
        let samples = superpose(&e1.symbols, &e2.symbols, &powers, gain);
        let rx = ReceivedFrame::new(samples, gain, 1e-9, 10).unwrap();
        let out = joint_detect(&pt, &rx).unwrap();
        assert_eq!(out.bits_user1, b1);
        assert_eq!(out.bits_user2, b2);
    }

    #[test]
    fn direct_detection_recovers_a_lone_strong_user() {
        let t = Trellis::ungerboeck_4state();
        let c = psk8();
        let powers = PowerPair::relaxed(0.0, 1.0).unwrap();
        let gain = Complex64::new(1.0, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let b2 = random_bits(&mut rng, 24);
        let e2 = encode(&t, &c, &InfoFrame::new(b2.clone(), 12).unwrap()).unwrap();
        let samples: Vec<Complex64> = e2.symbols.iter().map(|s| gain * s).collect();
        let rx = ReceivedFrame::new(samples, gain, 0.0, 12).unwrap();
        let out = detect_user2_direct(&t, &c, &rx, &powers).unwrap();
        assert_eq!(out.bits_user2, b2);
        assert!(out.bits_user1.is_empty());
        assert!(out.path_metric < 1e-18);
    }

    #[test]
    fn sic_recovers_both_users_without_noise() {
        let t = Trellis::ungerboeck_4state();
        let c = psk8();
        let powers = PowerPair::new(0.3, 1.0).unwrap();
        let gain = Complex64::new(2f64.sqrt(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..10 {
            let b1 = random_bits(&mut rng, 12);
            let b2 = random_bits(&mut rng, 12);
            let e1 = encode_with_tail(&t, &c, &InfoFrame::new(b1.clone(), 6).unwrap(), 2).unwrap();
            let e2 = encode_with_tail(&t, &c, &InfoFrame::new(b2.clone(), 6).unwrap(), 2).unwrap();
            let samples = superpose(&e1.symbols, &e2.symbols, &powers, gain);
            let rx = ReceivedFrame::new(samples, gain, 0.0, 6).unwrap();
            let out = sic_detect_user1(&t, &c, &t, &c, &rx, &powers).unwrap();
            assert_eq!(out.bits_user1, b1, "weak user after cancellation");
            assert_eq!(out.bits_user2, b2, "strong user at stage 1");
            assert!(out.path_metric < 1e-18);
        }
    }

    #[test]
    fn uncoded_detection_round_trips_without_noise() {
        let powers = PowerPair::new(0.3, 1.0).unwrap();
        let c = Constellation::qpsk(0.0);
        let gain = Complex64::new(1.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let b1 = random_bits(&mut rng, 40);
        let b2 = random_bits(&mut rng, 40);
        let s1 = qpsk_gray_modulate(&b1, &c).unwrap();
        let s2 = qpsk_gray_modulate(&b2, &c).unwrap();
        let samples = superpose(&s1, &s2, &powers, gain);
        let rx = ReceivedFrame::new(samples, gain, 0.0, 20).unwrap();
        let out = uncoded_ml_detect(&rx, &powers).unwrap();
        assert_eq!(out.bits_user1, b1);
        assert_eq!(out.bits_user2, b2);
    }

    #[test]
    fn viterbi_matches_exhaustive_enumeration_on_noisy_single_user_frames() {
        // Two information steps with a fixed 2-step tail: 16 candidate
        // frames. The decoder must agree with brute force exactly, bits and
        // metric alike.
        let t = Trellis::ungerboeck_4state();
        let c = psk8();
        let graph = LabeledTrellis::new(&t, &c).unwrap();
        let scale = Complex64::new(0.8, -0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..200 {
            let sent = random_bits(&mut rng, 4);
            let enc =
                encode_with_tail(&t, &c, &InfoFrame::new(sent, 2).unwrap(), 2).unwrap();
            let samples: Vec<Complex64> = enc
                .symbols
                .iter()
                .map(|s| {
                    scale * s
                        + Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                })
                .collect();

            let mut best: Option<(f64, Vec<u8>)> = None;
            for value in 0..16u32 {
                let bits: Vec<u8> = (0..4).map(|i| ((value >> (3 - i)) & 1) as u8).collect();
                let cand =
                    encode_with_tail(&t, &c, &InfoFrame::new(bits.clone(), 2).unwrap(), 2)
                        .unwrap();
                let mut m = 0.0;
                for (y, a) in samples.iter().zip(&cand.symbols) {
                    m += (y - scale * a).norm_sqr();
                }
                if best.as_ref().is_none_or(|(bm, _)| m < *bm) {
                    best = Some((m, bits));
                }
            }
            let (best_metric, best_bits) = best.unwrap();

            let path = viterbi(&graph, &samples, 2, scale).unwrap();
            let bits = single_user_bits(&t, &path, 2);
            assert_eq!(bits, best_bits);
            assert_eq!(path.metric, best_metric, "metrics must agree exactly");
        }
    }

    #[test]
    fn ties_resolve_to_the_all_zero_path() {
        // y = 0 makes every unit label equidistant; the documented
        // tie-break (branch, then label, then predecessor) must pick the
        // all-zero frame.
        let t = Trellis::ungerboeck_4state();
        let c = psk8();
        let graph = LabeledTrellis::new(&t, &c).unwrap();
        let samples = vec![Complex64::new(0.0, 0.0); 3];
        let path = viterbi(&graph, &samples, 1, Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(single_user_bits(&t, &path, 1), vec![0, 0]);
        assert_eq!(path.states, vec![0, 0, 0, 0]);
        assert_eq!(path.metric, 3.0);
    }

    #[test]
    fn uncoded_equal_power_collisions_resolve_deterministically() {
        // At p1 = p2 the superpositions of (m1, m2) and (m2, m1) coincide;
        // the detector must return the lexicographically smaller pair.
        let powers = PowerPair::relaxed(0.5, 0.5).unwrap();
        let c = Constellation::qpsk(0.0);
        let a = 0.5f64.sqrt();
        let y = a * (c.point(0).unwrap() + c.point(1).unwrap());
        let rx = ReceivedFrame::new(vec![y], Complex64::new(1.0, 0.0), 0.0, 1).unwrap();
        let out = uncoded_ml_detect(&rx, &powers).unwrap();
        // (m1, m2) = (0, 1): user 1 sends value 0, user 2 value 1.
        assert_eq!(out.bits_user1, vec![0, 0]);
        assert_eq!(out.bits_user2, vec![0, 1]);
    }

    #[test]
    fn sic_beats_direct_weak_user_decoding_under_interference() {
        // With both users active and no noise, decoding user 1 without
        // cancellation fails while SIC is exact — cancellation is doing the
        // work, not the trellis.
        let t = Trellis::ungerboeck_4state();
        let c = psk8();
        let powers = PowerPair::new(0.3, 1.0).unwrap();
        let gain = Complex64::new(1.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut naive_errors = 0usize;
        let mut sic_errors = 0usize;
        for _ in 0..20 {
            let b1 = random_bits(&mut rng, 20);
            let b2 = random_bits(&mut rng, 20);
            let e1 =
                encode_with_tail(&t, &c, &InfoFrame::new(b1.clone(), 10).unwrap(), 2).unwrap();
            let e2 =
                encode_with_tail(&t, &c, &InfoFrame::new(b2.clone(), 10).unwrap(), 2).unwrap();
            let samples = superpose(&e1.symbols, &e2.symbols, &powers, gain);
            let rx = ReceivedFrame::new(samples, gain, 0.0, 10).unwrap();

            // Naive: decode user 1 directly against its own scaled labels.
            let graph = LabeledTrellis::new(&t, &c).unwrap();
            let scale1 = gain * powers.p1().sqrt();
            let naive = viterbi(&graph, &rx.samples, rx.info_steps, scale1).unwrap();
            naive_errors += single_user_bits(&t, &naive, 10)
                .iter()
                .zip(&b1)
                .filter(|(a, b)| a != b)
                .count();

            let sic = sic_detect_user1(&t, &c, &t, &c, &rx, &powers).unwrap();
            sic_errors +=
                sic.bits_user1.iter().zip(&b1).filter(|(a, b)| a != b).count();
        }
        assert_eq!(sic_errors, 0);
        assert!(naive_errors > 0, "interference should cripple the naive decoder");
    }

    #[test]
    fn gray_mapping_flips_one_bit_between_neighbors() {
        // Adjacent constellation points must differ in exactly one bit.
        let idx_to_bits = |m: usize| {
            let v = QPSK_GRAY.iter().position(|&g| g == m).unwrap();
            [(v >> 1) as u8, (v & 1) as u8]
        };
        for m in 0..4 {
            let a = idx_to_bits(m);
            let b = idx_to_bits((m + 1) % 4);
            let diff = (a[0] != b[0]) as usize + (a[1] != b[1]) as usize;
            assert_eq!(diff, 1, "points {m} and {} are not Gray neighbors", (m + 1) % 4);
        }
        // Walking the bit pairs in Gray order (00, 01, 11, 10) modulates to
        // consecutive constellation points.
        let c = Constellation::qpsk(0.0);
        let syms = qpsk_gray_modulate(&[0, 0, 0, 1, 1, 1, 1, 0], &c).unwrap();
        for (sym, m) in syms.iter().zip(0..4) {
            assert!((sym - c.point(m).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn invalid_frames_are_rejected() {
        let gain = Complex64::new(1.0, 0.0);
        assert!(ReceivedFrame::new(vec![], gain, 0.1, 0).is_err());
        assert!(ReceivedFrame::new(vec![gain], gain, 0.1, 2).is_err());
        assert!(ReceivedFrame::new(vec![gain], Complex64::new(0.0, 0.0), 0.1, 1).is_err());
        assert!(ReceivedFrame::new(vec![gain], gain, -1.0, 1).is_err());

        let t = Trellis::ungerboeck_4state();
        let c = psk8();
        let graph = LabeledTrellis::new(&t, &c).unwrap();
        assert!(viterbi(&graph, &[], 0, gain).is_err());
        assert!(viterbi(&graph, &[gain], 2, gain).is_err());
        assert!(viterbi(&graph, &[gain], 1, Complex64::new(0.0, 0.0)).is_err());
        // One sample cannot accommodate a path that returns to state 0 after
        // leaving it: decoding works (all-zero path exists), but a frame
        // whose only step is forced through state 1 cannot terminate. Tail
        // constraints make state 1 unreachable, so the all-zero path wins.
        let path = viterbi(&graph, &[gain], 0, gain).unwrap();
        assert_eq!(path.states, vec![0, 0]);

        let powers = PowerPair::new(0.3, 1.0).unwrap();
        let rx = ReceivedFrame::new(vec![gain, gain], gain, 0.0, 1).unwrap();
        assert!(uncoded_ml_detect(&rx, &powers).is_err(), "tail on an uncoded frame");
    }
}
