//! Trellis codes with parallel transitions.
//!
//! A [`Trellis`] describes a rate-k/(k+p) labeled state machine: from each
//! state there are `2^k` branches selected by the first `k` input bits, and
//! each branch carries `2^p` parallel labels selected by the remaining `p`
//! bits. Labels are indices into a [`Constellation`].
//!
//! The workhorse instance is [`Trellis::ungerboeck_4state`], the classic
//! 4-state 8-PSK set-partitioning code: branch bits pick one of the four
//! antipodal subsets A = {0,4}, B = {2,6}, C = {1,5}, D = {3,7} and the
//! parallel bit picks the point within the subset.

use num_complex::Complex64;

use crate::constellation::Constellation;
use crate::error::{invalid_input, Error, Result};

/// One labeled transition out of a state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    /// Input bits (most significant first) that select this branch.
    pub input: Vec<u8>,
    /// Destination state.
    pub next_state: usize,
    /// Constellation indices of the parallel labels, selected by the
    /// trailing input bits (value `v` picks `labels[v]`).
    pub labels: Vec<usize>,
}

/// A validated trellis: regular branching, every state reachable from state 0
/// and able to reach it back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trellis {
    states: usize,
    /// `branches[s][v]` is the branch out of `s` selected by input value `v`.
    branches: Vec<Vec<Branch>>,
    branch_bits: usize,
    parallel_bits: usize,
    /// Per state, the branch index that most quickly approaches state 0.
    tail_branches: Vec<usize>,
    /// Per state, the number of tail steps needed to reach state 0.
    zero_distance: Vec<usize>,
}

/// Interprets `bits` (most significant first) as an unsigned value.
pub(crate) fn bits_value(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
}

/// Writes `value` as `width` bits, most significant first.
pub(crate) fn value_bits(value: usize, width: usize) -> Vec<u8> {
    (0..width).rev().map(|i| ((value >> i) & 1) as u8).collect()
}

impl Trellis {
    /// Builds and validates a trellis from per-state branch lists.
    ///
    /// Branches may be given in any order; they are sorted by input value.
    /// Validation enforces: every state has the same power-of-two branch
    /// count with each input value appearing exactly once, every branch has
    /// the same power-of-two label count with no duplicate label inside a
    /// branch, and state 0 reaches and is reachable from every state.
    pub fn new(states: usize, branches: Vec<Vec<Branch>>) -> Result<Self> {
        if states == 0 {
            return Err(invalid_input!("trellis must have at least one state"));
        }
        if branches.len() != states {
            return Err(invalid_input!(
                "expected branch lists for {states} states, got {}",
                branches.len()
            ));
        }

        let branch_count = branches[0].len();
        if branch_count == 0 || !branch_count.is_power_of_two() {
            return Err(invalid_input!(
                "state 0 has {branch_count} branches (expected a positive power of two)"
            ));
        }
        let branch_bits = branch_count.trailing_zeros() as usize;
        let label_count = branches[0][0].labels.len();
        if label_count == 0 || !label_count.is_power_of_two() {
            return Err(invalid_input!(
                "branches must carry a positive power-of-two label count, got {label_count}"
            ));
        }
        let parallel_bits = label_count.trailing_zeros() as usize;

        let mut sorted = Vec::with_capacity(states);
        for (s, mut list) in branches.into_iter().enumerate() {
            if list.len() != branch_count {
                return Err(invalid_input!(
                    "state {s} has {} branches, state 0 has {branch_count}",
                    list.len()
                ));
            }
            for b in &list {
                if b.input.len() != branch_bits {
                    return Err(invalid_input!(
                        "state {s}: branch input {:?} has width {} (expected {branch_bits})",
                        b.input,
                        b.input.len()
                    ));
                }
                if b.input.iter().any(|&bit| bit > 1) {
                    return Err(invalid_input!("state {s}: branch input bits must be 0 or 1"));
                }
                if b.next_state >= states {
                    return Err(invalid_input!(
                        "state {s}: next state {} out of range (states = {states})",
                        b.next_state
                    ));
                }
                if b.labels.len() != label_count {
                    return Err(invalid_input!(
                        "state {s}: branch has {} labels (expected {label_count})",
                        b.labels.len()
                    ));
                }
                for i in 0..b.labels.len() {
                    for j in (i + 1)..b.labels.len() {
                        if b.labels[i] == b.labels[j] {
                            return Err(invalid_input!(
                                "state {s}: duplicate label {} within one branch",
                                b.labels[i]
                            ));
                        }
                    }
                }
            }
            list.sort_by_key(|b| bits_value(&b.input));
            for (v, b) in list.iter().enumerate() {
                if bits_value(&b.input) != v {
                    return Err(invalid_input!(
                        "state {s}: input value {v} is missing or duplicated"
                    ));
                }
            }
            sorted.push(list);
        }

        // Forward reachability from state 0.
        let mut seen = vec![false; states];
        let mut queue = vec![0usize];
        seen[0] = true;
        while let Some(s) = queue.pop() {
            for b in &sorted[s] {
                if !seen[b.next_state] {
                    seen[b.next_state] = true;
                    queue.push(b.next_state);
                }
            }
        }
        if let Some(s) = seen.iter().position(|&r| !r) {
            return Err(invalid_input!("state {s} is unreachable from state 0"));
        }

        // Reverse reachability gives the tail distance to state 0.
        let mut zero_distance = vec![usize::MAX; states];
        zero_distance[0] = 0;
        loop {
            let mut changed = false;
            for s in 0..states {
                let best = sorted[s]
                    .iter()
                    .map(|b| zero_distance[b.next_state])
                    .min()
                    .unwrap();
                let cand = best.saturating_add(1);
                let target = if s == 0 { 0 } else { cand };
                if target < zero_distance[s] {
                    zero_distance[s] = target;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if let Some(s) = zero_distance.iter().position(|&d| d == usize::MAX) {
            return Err(invalid_input!("state {s} cannot reach state 0"));
        }

        // Tail branch: step toward state 0, lowest branch index on ties.
        let tail_branches = (0..states)
            .map(|s| {
                let mut best = 0usize;
                for (i, b) in sorted[s].iter().enumerate() {
                    if zero_distance[b.next_state] < zero_distance[sorted[s][best].next_state] {
                        best = i;
                    }
                }
                best
            })
            .collect();

        Ok(Self {
            states,
            branches: sorted,
            branch_bits,
            parallel_bits,
            tail_branches,
            zero_distance,
        })
    }

    /// The 4-state rate-2/3 8-PSK set-partitioning code.
    ///
    /// The branch bit selects the label subset, the parallel bit the point
    /// within the subset (offset 4, i.e. the antipodal point):
    ///
    /// | state | input 0      | input 1      |
    /// |-------|--------------|--------------|
    /// | 0     | -> 0, {0,4}  | -> 1, {2,6}  |
    /// | 1     | -> 2, {1,5}  | -> 3, {3,7}  |
    /// | 2     | -> 0, {2,6}  | -> 1, {0,4}  |
    /// | 3     | -> 2, {3,7}  | -> 3, {1,5}  |
    pub fn ungerboeck_4state() -> Self {
        let b = |input: u8, next: usize, lo: usize| Branch {
            input: vec![input],
            next_state: next,
            labels: vec![lo, lo + 4],
        };
        let branches = vec![
            vec![b(0, 0, 0), b(1, 1, 2)],
            vec![b(0, 2, 1), b(1, 3, 3)],
            vec![b(0, 0, 2), b(1, 1, 0)],
            vec![b(0, 2, 3), b(1, 3, 1)],
        ];
        Self::new(4, branches).expect("built-in code must validate")
    }

    /// A degenerate one-state, zero-rate trellis that always emits label 0.
    ///
    /// Taking a product with this trellis leaves the other code unchanged
    /// (up to a constant label offset, which vanishes at zero power).
    pub fn single_state() -> Self {
        let branches = vec![vec![Branch { input: vec![], next_state: 0, labels: vec![0] }]];
        Self::new(1, branches).expect("built-in code must validate")
    }

    /// Number of states.
    pub fn num_states(&self) -> usize {
        self.states
    }

    /// Input bits that select the branch.
    pub fn branch_bits(&self) -> usize {
        self.branch_bits
    }

    /// Input bits that select the parallel label within a branch.
    pub fn parallel_bits(&self) -> usize {
        self.parallel_bits
    }

    /// Total input bits consumed per trellis step.
    pub fn bits_per_step(&self) -> usize {
        self.branch_bits + self.parallel_bits
    }

    /// Branches out of each state.
    pub fn branches_per_state(&self) -> usize {
        1 << self.branch_bits
    }

    /// Parallel labels on each branch.
    pub fn labels_per_branch(&self) -> usize {
        1 << self.parallel_bits
    }

    /// The branches out of `state`, indexed by input value.
    pub fn branches(&self, state: usize) -> &[Branch] {
        &self.branches[state]
    }

    /// The branch taken from `state` during tail (termination) steps.
    pub fn tail_branch(&self, state: usize) -> usize {
        self.tail_branches[state]
    }

    /// Tail steps needed to drive `state` to state 0.
    pub fn zero_distance(&self, state: usize) -> usize {
        self.zero_distance[state]
    }

    /// Tail steps sufficient to terminate from any state.
    pub fn termination_depth(&self) -> usize {
        *self.zero_distance.iter().max().unwrap()
    }

    /// Largest constellation index referenced by any label.
    pub fn max_label_index(&self) -> usize {
        self.branches
            .iter()
            .flatten()
            .flat_map(|b| b.labels.iter().copied())
            .max()
            .unwrap()
    }

    /// Parses the plain-text description emitted by [`Trellis::to_text`].
    ///
    /// One branch per line: `state input_bits next_state label,label,...`,
    /// with input bits as a string of 0/1 (`-` for a zero-rate branch).
    /// `#` starts a comment. The state count is inferred.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut rows: Vec<(usize, Vec<u8>, usize, Vec<usize>)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let parse = |reason: String| Error::Parse { line: line_no, reason };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(parse(format!(
                    "expected 4 fields `state input_bits next_state labels`, got {}",
                    fields.len()
                )));
            }
            let state: usize = fields[0]
                .parse()
                .map_err(|_| parse(format!("bad state `{}`", fields[0])))?;
            let input: Vec<u8> = if fields[1] == "-" {
                vec![]
            } else {
                fields[1]
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(0),
                        '1' => Ok(1),
                        _ => Err(parse(format!("bad input bits `{}`", fields[1]))),
                    })
                    .collect::<Result<_>>()?
            };
            let next: usize = fields[2]
                .parse()
                .map_err(|_| parse(format!("bad next state `{}`", fields[2])))?;
            let labels: Vec<usize> = fields[3]
                .split(',')
                .map(|t| t.trim().parse().map_err(|_| parse(format!("bad label `{t}`"))))
                .collect::<Result<_>>()?;
            rows.push((state, input, next, labels));
        }
        if rows.is_empty() {
            return Err(Error::Parse { line: 0, reason: "no branches found".into() });
        }
        let states = rows.iter().map(|r| r.0.max(r.2)).max().unwrap() + 1;
        let mut branches = vec![Vec::new(); states];
        for (state, input, next, labels) in rows {
            branches[state].push(Branch { input, next_state: next, labels });
        }
        Self::new(states, branches)
    }

    /// Serializes the trellis in the format accepted by [`Trellis::from_text`].
    pub fn to_text(&self) -> String {
        let mut out = String::from("# state input_bits next_state labels\n");
        for (s, list) in self.branches.iter().enumerate() {
            for b in list {
                let input = if b.input.is_empty() {
                    "-".to_string()
                } else {
                    b.input.iter().map(|&bit| char::from(b'0' + bit)).collect()
                };
                let labels =
                    b.labels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",");
                out.push_str(&format!("{s} {input} {} {labels}\n", b.next_state));
            }
        }
        out
    }
}

/// Information bits for one frame, grouped into trellis steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfoFrame {
    bits: Vec<u8>,
    steps: usize,
}

impl InfoFrame {
    /// Wraps `bits` as `steps` trellis steps. The per-step width is checked
    /// against the trellis at encode time.
    pub fn new(bits: Vec<u8>, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(invalid_input!("a frame must contain at least one step"));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(invalid_input!("frame bits must be 0 or 1"));
        }
        if !bits.len().is_multiple_of(steps) {
            return Err(invalid_input!(
                "{} bits do not divide into {steps} equal steps",
                bits.len()
            ));
        }
        Ok(Self { bits, steps })
    }

    /// Wraps `bits` given the per-step width (must be positive).
    pub fn for_step_width(bits: Vec<u8>, bits_per_step: usize) -> Result<Self> {
        if bits_per_step == 0 {
            return Err(invalid_input!("bits_per_step must be positive"));
        }
        if !bits.len().is_multiple_of(bits_per_step) {
            return Err(invalid_input!(
                "{} bits are not a whole number of {bits_per_step}-bit steps",
                bits.len()
            ));
        }
        let steps = bits.len() / bits_per_step;
        Self::new(bits, steps)
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

/// An encoded frame: modulated symbols plus the state path that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    /// One symbol per trellis step, information steps first, tail last.
    pub symbols: Vec<Complex64>,
    /// Visited states, `symbols.len() + 1` entries starting and ending at 0.
    pub states: Vec<usize>,
    /// Number of information-bearing steps.
    pub info_steps: usize,
    /// Number of tail steps appended to return to state 0.
    pub tail_steps: usize,
}

fn encode_steps(
    trellis: &Trellis,
    constellation: &Constellation,
    frame: &InfoFrame,
    tail_steps: Option<usize>,
) -> Result<Encoded> {
    let width = trellis.bits_per_step();
    if frame.bits.len() != frame.steps * width {
        return Err(invalid_input!(
            "frame carries {} bits for {} steps, trellis consumes {width} bits per step",
            frame.bits.len(),
            frame.steps
        ));
    }
    if trellis.max_label_index() >= constellation.len() {
        return Err(invalid_input!(
            "trellis labels reference constellation index {} but the constellation has {} points",
            trellis.max_label_index(),
            constellation.len()
        ));
    }

    let mut symbols = Vec::with_capacity(frame.steps + trellis.termination_depth());
    let mut states = Vec::with_capacity(frame.steps + trellis.termination_depth() + 1);
    let mut state = 0usize;
    states.push(state);
    for step in 0..frame.steps {
        let chunk = &frame.bits[step * width..(step + 1) * width];
        let branch_value = bits_value(&chunk[..trellis.branch_bits()]);
        let label_value = bits_value(&chunk[trellis.branch_bits()..]);
        let branch = &trellis.branches(state)[branch_value];
        symbols.push(constellation.point(branch.labels[label_value])?);
        state = branch.next_state;
        states.push(state);
    }

    let tail = tail_steps.unwrap_or(trellis.zero_distance(state));
    if tail < trellis.zero_distance(state) {
        return Err(invalid_input!(
            "tail of {tail} steps cannot terminate from state {state} (needs {})",
            trellis.zero_distance(state)
        ));
    }
    for _ in 0..tail {
        let branch = &trellis.branches(state)[trellis.tail_branch(state)];
        symbols.push(constellation.point(branch.labels[0])?);
        state = branch.next_state;
        states.push(state);
    }
    if state != 0 {
        return Err(invalid_input!(
            "tail of {tail} steps does not land on state 0 (stopped at {state})"
        ));
    }
    Ok(Encoded { symbols, states, info_steps: frame.steps, tail_steps: tail })
}

/// Encodes a frame, appending the shortest tail that returns to state 0.
pub fn encode(
    trellis: &Trellis,
    constellation: &Constellation,
    frame: &InfoFrame,
) -> Result<Encoded> {
    encode_steps(trellis, constellation, frame, None)
}

/// Encodes a frame with a fixed tail length.
///
/// The tail drives the encoder to state 0 and then idles there, so any
/// `tail_steps >= termination_depth()` is valid for codes with a zero-state
/// self-loop. Needed when co-scheduled encoders must emit equal-length
/// frames.
pub fn encode_with_tail(
    trellis: &Trellis,
    constellation: &Constellation,
    frame: &InfoFrame,
    tail_steps: usize,
) -> Result<Encoded> {
    encode_steps(trellis, constellation, frame, Some(tail_steps))
}
