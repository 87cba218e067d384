//! Tensor product of two trellis codes under power superposition.
//!
//! Two users' codes `T1` (weak, power `P1`) and `T2` (strong, power `P2`)
//! superimpose on the channel as `sqrt(P1)*u + sqrt(P2)*v`. Their joint
//! behaviour is exactly a larger trellis whose states are pairs of component
//! states and whose branch labels are the superposed symbols. A maximum-
//! likelihood sequence detector can then run on the product directly.

use num_complex::Complex64;

use crate::constellation::Constellation;
use crate::error::{invalid_input, Result};
use crate::trellis::Trellis;

/// A validated pair of superposition powers with `p1 <= p2`.
///
/// By convention user 1 is the weak (low-power) user and user 2 the strong
/// user; most call sites require strictly `p1 < p2` ([`PowerPair::new`]),
/// while degenerate splits (`p1 = 0` or `p1 = p2`) arise in analysis and in
/// equal-power multiple access and use [`PowerPair::relaxed`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPair {
    p1: f64,
    p2: f64,
}

impl PowerPair {
    /// A strict power split: `0 < p1 < p2`, both finite.
    pub fn new(p1: f64, p2: f64) -> Result<Self> {
        if !(p1.is_finite() && p2.is_finite()) {
            return Err(invalid_input!("powers must be finite, got ({p1}, {p2})"));
        }
        if !(0.0 < p1 && p1 < p2) {
            return Err(invalid_input!(
                "powers must satisfy 0 < p1 < p2, got ({p1}, {p2})"
            ));
        }
        Ok(Self { p1, p2 })
    }

    /// A relaxed split allowing the boundary cases: `0 <= p1 <= p2`, `p2 > 0`.
    pub fn relaxed(p1: f64, p2: f64) -> Result<Self> {
        if !(p1.is_finite() && p2.is_finite()) {
            return Err(invalid_input!("powers must be finite, got ({p1}, {p2})"));
        }
        if !(0.0 <= p1 && p1 <= p2 && p2 > 0.0) {
            return Err(invalid_input!(
                "powers must satisfy 0 <= p1 <= p2 with p2 > 0, got ({p1}, {p2})"
            ));
        }
        Ok(Self { p1, p2 })
    }

    /// Splits `budget` so that `p1/p2 = ratio` and `p1 + p2 = budget`.
    pub fn from_ratio(budget: f64, ratio: f64) -> Result<Self> {
        if !(budget.is_finite() && budget > 0.0) {
            return Err(invalid_input!("power budget must be positive, got {budget}"));
        }
        if !(ratio.is_finite() && 0.0 < ratio && ratio <= 1.0) {
            return Err(invalid_input!("power ratio must lie in (0, 1], got {ratio}"));
        }
        let p1 = budget * ratio / (1.0 + ratio);
        Self::relaxed(p1, budget - p1)
    }

    /// Power of the weak user.
    pub fn p1(&self) -> f64 {
        self.p1
    }

    /// Power of the strong user.
    pub fn p2(&self) -> f64 {
        self.p2
    }

    /// Total transmit power `p1 + p2`.
    pub fn total(&self) -> f64 {
        self.p1 + self.p2
    }

    /// The split ratio `p1/p2`.
    pub fn ratio(&self) -> f64 {
        self.p1 / self.p2
    }

    /// Both powers scaled by a positive factor.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(invalid_input!("scale factor must be positive, got {factor}"));
        }
        Self::relaxed(self.p1 * factor, self.p2 * factor)
    }
}

/// One transition of the product trellis.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductBranch {
    /// Component branch indices `(branch in T1, branch in T2)`.
    pub source: (usize, usize),
    /// Destination product state.
    pub next_state: usize,
    /// Superposed labels `sqrt(p1)*u + sqrt(p2)*v`, ordered by
    /// (T1 parallel index, T2 parallel index) with the T2 index minor.
    pub labels: Vec<Complex64>,
    /// Component parallel indices behind each entry of `labels`.
    pub label_source: Vec<(usize, usize)>,
}

/// The tensor product of two labeled trellises under a power split.
///
/// Product state `s1*r2 + s2` pairs component states `(s1, s2)`; product
/// branch `b1*n2 + b2` pairs component branches, and likewise for parallel
/// labels. Labels are precomputed complex values, so metric evaluation never
/// touches the component constellations.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductTrellis {
    states: usize,
    branches: Vec<Vec<ProductBranch>>,
    r1: usize,
    r2: usize,
    branch_bits1: usize,
    branch_bits2: usize,
    parallel_bits1: usize,
    parallel_bits2: usize,
    tail_branches: Vec<usize>,
    termination_depth: usize,
    powers: PowerPair,
}

/// Builds the product of `t1` (power `p1`) and `t2` (power `p2`).
pub fn tensor_product(
    t1: &Trellis,
    c1: &Constellation,
    t2: &Trellis,
    c2: &Constellation,
    powers: &PowerPair,
) -> Result<ProductTrellis> {
    for (who, t, c) in [(1, t1, c1), (2, t2, c2)] {
        if t.max_label_index() >= c.len() {
            return Err(invalid_input!(
                "trellis {who} references constellation index {} but only {} points exist",
                t.max_label_index(),
                c.len()
            ));
        }
    }
    let (r1, r2) = (t1.num_states(), t2.num_states());
    let amp1 = powers.p1().sqrt();
    let amp2 = powers.p2().sqrt();

    let mut branches = Vec::with_capacity(r1 * r2);
    let mut tail_branches = Vec::with_capacity(r1 * r2);
    for s1 in 0..r1 {
        for s2 in 0..r2 {
            let mut out = Vec::with_capacity(t1.branches_per_state() * t2.branches_per_state());
            for (b1, br1) in t1.branches(s1).iter().enumerate() {
                for (b2, br2) in t2.branches(s2).iter().enumerate() {
                    let mut labels =
                        Vec::with_capacity(br1.labels.len() * br2.labels.len());
                    let mut label_source = Vec::with_capacity(labels.capacity());
                    for (l1, &lab1) in br1.labels.iter().enumerate() {
                        for (l2, &lab2) in br2.labels.iter().enumerate() {
                            labels.push(amp1 * c1.point(lab1)? + amp2 * c2.point(lab2)?);
                            label_source.push((l1, l2));
                        }
                    }
                    out.push(ProductBranch {
                        source: (b1, b2),
                        next_state: br1.next_state * r2 + br2.next_state,
                        labels,
                        label_source,
                    });
                }
            }
            out.shrink_to_fit();
            branches.push(out);
            tail_branches.push(t1.tail_branch(s1) * t2.branches_per_state() + t2.tail_branch(s2));
        }
    }

    Ok(ProductTrellis {
        states: r1 * r2,
        branches,
        r1,
        r2,
        branch_bits1: t1.branch_bits(),
        branch_bits2: t2.branch_bits(),
        parallel_bits1: t1.parallel_bits(),
        parallel_bits2: t2.parallel_bits(),
        tail_branches,
        termination_depth: t1.termination_depth().max(t2.termination_depth()),
        powers: *powers,
    })
}

impl ProductTrellis {
    /// Number of product states (`r1 * r2`).
    pub fn num_states(&self) -> usize {
        self.states
    }

    /// Component state counts `(r1, r2)`.
    pub fn component_states(&self) -> (usize, usize) {
        (self.r1, self.r2)
    }

    /// Product state index for component states `(s1, s2)`.
    pub fn state_of(&self, s1: usize, s2: usize) -> usize {
        s1 * self.r2 + s2
    }

    /// Component states behind a product state index.
    pub fn state_parts(&self, state: usize) -> (usize, usize) {
        (state / self.r2, state % self.r2)
    }

    /// Branches out of `state`, indexed by `b1*n2 + b2`.
    pub fn branches(&self, state: usize) -> &[ProductBranch] {
        &self.branches[state]
    }

    /// Branches out of each product state.
    pub fn branches_per_state(&self) -> usize {
        1 << (self.branch_bits1 + self.branch_bits2)
    }

    /// Parallel labels on each product branch.
    pub fn labels_per_branch(&self) -> usize {
        1 << (self.parallel_bits1 + self.parallel_bits2)
    }

    /// Branch-selecting input bits of user 1 and user 2 per step.
    pub fn branch_bits(&self) -> (usize, usize) {
        (self.branch_bits1, self.branch_bits2)
    }

    /// Label-selecting input bits of user 1 and user 2 per step.
    pub fn parallel_bits(&self) -> (usize, usize) {
        (self.parallel_bits1, self.parallel_bits2)
    }

    /// The branch taken from `state` during tail steps.
    pub fn tail_branch(&self, state: usize) -> usize {
        self.tail_branches[state]
    }

    /// Tail steps sufficient to terminate both component codes.
    pub fn termination_depth(&self) -> usize {
        self.termination_depth
    }

    /// The power split the labels were built with.
    pub fn powers(&self) -> &PowerPair {
        &self.powers
    }

    /// Human-readable listing, one line per product edge, for debugging and
    /// golden tests.
    pub fn dump(&self) -> String {
        let mut out = format!(
            "# product trellis: {} states ({} x {}), p1={} p2={}\n",
            self.states,
            self.r1,
            self.r2,
            self.powers.p1(),
            self.powers.p2()
        );
        for state in 0..self.states {
            let (s1, s2) = self.state_parts(state);
            for b in &self.branches[state] {
                let (n1, n2) = self.state_parts(b.next_state);
                let labels = b
                    .labels
                    .iter()
                    .map(|l| format!("({},{})", l.re, l.im))
                    .collect::<Vec<_>>()
                    .join(" ");
                out.push_str(&format!(
                    "({s1},{s2}) --b1={},b2={}--> ({n1},{n2}) labels: {labels}\n",
                    b.source.0, b.source.1
                ));
            }
        }
        out
    }
}

/// Per-frame metric-evaluation counts for joint versus separate detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexityEstimate {
    /// Evaluations for maximum-likelihood detection on the product trellis.
    pub joint: u64,
    /// Evaluations for per-user detection, each code decoded on its own.
    pub separate: u64,
}

/// Estimates metric evaluations over `steps` trellis steps.
///
/// With `K` states and `L` labeled edges (parallel transitions counted) per
/// code, joint detection costs `steps * (K1*K2 + L1*L2)` and separate
/// detection `steps * (K1 + K2 + L1 + L2)`.
pub fn complexity_estimate(t1: &Trellis, t2: &Trellis, steps: usize) -> ComplexityEstimate {
    let k1 = t1.num_states() as u64;
    let k2 = t2.num_states() as u64;
    let l1 = k1 * t1.branches_per_state() as u64 * t1.labels_per_branch() as u64;
    let l2 = k2 * t2.branches_per_state() as u64 * t2.labels_per_branch() as u64;
    let steps = steps as u64;
    ComplexityEstimate {
        joint: steps * (k1 * k2 + l1 * l2),
        separate: steps * (k1 + k2 + l1 + l2),
    }
}
