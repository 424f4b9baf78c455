//! Randomized secure sum with segmentation, over channels assumed secure.
//!
//! Each party splits its input into `k` additive segments, sends `k - 1` of
//! them to distinct random peers, adds what it keeps and what it receives,
//! and the partial sums are accumulated around the ring. Used as a baseline
//! and to check the coverage bound by Monte Carlo.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::seq::index;

use crate::algebra::{mod_inverse, mod_mul, RandomSource};
use crate::error::{Error, Result};
use crate::netsim::{MsgType, Network, Role, Transcript, WireMessage};
use crate::ring::PartyId;

/// Number of peers each party sends a segment to:
/// `min(ceil((1 + eps) ln n + 1), n - 1)`.
pub fn selections_for(n: usize, epsilon: f64) -> usize {
    let raw = ((1.0 + epsilon) * (n as f64).ln() + 1.0).ceil();
    (raw.max(1.0) as usize).min(n.saturating_sub(1))
}

/// Segments per party, `selections + 1`.
pub fn segments_for(n: usize, epsilon: f64) -> usize {
    selections_for(n, epsilon) + 1
}

/// Lower bound on the coverage probability, `1 - n^-eps`.
pub fn coverage_bound(n: usize, epsilon: f64) -> f64 {
    1.0 - (n as f64).powf(-epsilon)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok(())
}

/// `k - 1` uniform draws from `Z_p`, and a last segment that brings the
/// total to `x mod p`.
pub fn segment_data(x: &BigUint, k: usize, p: &BigUint, rng: &mut RandomSource) -> Result<Vec<BigUint>> {
    if k < 2 {
        return Err(Error::InvalidArgument("at least two segments are needed".into()));
    }
    let mut segments: Vec<BigUint> = (0..k - 1).map(|_| rng.below(p)).collect();
    let drawn = segments.iter().fold(BigUint::zero(), |acc, s| (acc + s) % p);
    segments.push((x % p + p - drawn) % p);
    Ok(segments)
}

/// Multiplicative counterpart of [`segment_data`]: `k - 1` uniform draws
/// from `[1, p)` and a last segment making the product `x mod p`.
pub fn segment_product(x: &BigUint, k: usize, p: &BigUint, rng: &mut RandomSource) -> Result<Vec<BigUint>> {
    if k < 2 {
        return Err(Error::InvalidArgument("at least two segments are needed".into()));
    }
    if (x % p).is_zero() {
        return Err(Error::InvalidArgument("zero has no multiplicative segmentation".into()));
    }
    let mut segments: Vec<BigUint> = (0..k - 1).map(|_| rng.range(&BigUint::one(), p)).collect();
    let drawn = segments.iter().fold(BigUint::one(), |acc, s| mod_mul(&acc, s, p));
    segments.push(mod_mul(x, &mod_inverse(&drawn, p)?, p));
    Ok(segments)
}

/// `count` distinct peers of `party` among `1..=n`, uniformly at random.
fn pick_recipients(party: PartyId, n: usize, count: usize, rng: &mut RandomSource) -> Vec<PartyId> {
    index::sample(rng, n - 1, count)
        .into_iter()
        .map(|j| {
            let id = j as PartyId + 1;
            if id >= party {
                id + 1
            } else {
                id
            }
        })
        .collect()
}

/// Everything a segmented run produces.
#[derive(Debug, Clone)]
pub struct SegmentedOutcome {
    pub sum: BigUint,
    /// Whether every party received at least one foreign segment.
    pub covered: bool,
    pub segments_per_party: usize,
    pub transcript: Transcript,
}

/// Runs the segmented sum over a simulated network whose messages are all
/// secure, so the eavesdropper's transcript stays empty.
pub fn run_segmented_sum_traced(
    x: &[BigUint],
    epsilon: f64,
    p: &BigUint,
    rng: &mut RandomSource,
) -> Result<SegmentedOutcome> {
    check_epsilon(epsilon)?;
    let n = x.len();
    if n < 3 {
        return Err(Error::TooFewParticipants { found: n, required: 3 });
    }
    let k = segments_for(n, epsilon);
    let mut net = Network::new((1..=n as PartyId).map(|id| (id, Role::Participant)));
    let secure = |from: PartyId, to: PartyId, payload: BigUint| WireMessage {
        msg_type: MsgType::SecureSegment,
        session_id: 1,
        term_index: 0,
        sender: from,
        recipient: to,
        payload,
    };

    let mut kept = Vec::with_capacity(n);
    for (id, xi) in (1..=n as PartyId).zip(x) {
        let mut segments = segment_data(xi, k, p, rng)?;
        let own = segments.pop().expect("k >= 2");
        for (to, s) in pick_recipients(id, n, k - 1, rng).into_iter().zip(segments) {
            net.send(secure(id, to, s))?;
        }
        kept.push(own);
    }

    let mut covered = true;
    let mut partials = Vec::with_capacity(n);
    for (id, own) in (1..=n as PartyId).zip(kept) {
        let got = net.take(id, |_| true);
        covered &= !got.is_empty();
        partials.push(got.into_iter().fold(own, |acc, m| (acc + m.payload) % p));
    }

    let mut running = BigUint::zero();
    for (id, partial) in (1..=n as PartyId).zip(partials) {
        running = (running + partial) % p;
        let next = if id as usize == n { 1 } else { id + 1 };
        net.send(secure(id, next, running.clone()))?;
    }
    let total = net.take(1, |_| true).pop().expect("ring pass reaches party 1").payload;

    Ok(SegmentedOutcome { sum: total, covered, segments_per_party: k, transcript: net.into_transcript() })
}

/// Sum of `x` mod `p` and whether every party was covered.
pub fn run_segmented_sum(x: &[BigUint], epsilon: f64, p: &BigUint, rng: &mut RandomSource) -> Result<(BigUint, bool)> {
    run_segmented_sum_traced(x, epsilon, p, rng).map(|o| (o.sum, o.covered))
}

/// Fraction of `trials` in which every party receives a foreign segment,
/// with `selections` recipients per party.
pub fn estimate_coverage_with(n: usize, selections: usize, trials: u64, rng: &mut RandomSource) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is needed".into()));
    }
    if n < 2 || selections == 0 || selections >= n {
        return Err(Error::InvalidArgument(format!("cannot pick {selections} of {} peers", n.saturating_sub(1))));
    }
    let mut hits = 0u64;
    let mut received = vec![false; n + 1];
    for _ in 0..trials {
        received.fill(false);
        for party in 1..=n as PartyId {
            for to in pick_recipients(party, n, selections, rng) {
                received[to as usize] = true;
            }
        }
        if received[1..].iter().all(|&r| r) {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}

/// Monte Carlo coverage under the `(1 + eps) ln n + 1` redistribution rule.
pub fn estimate_coverage_probability(n: usize, epsilon: f64, trials: u64, rng: &mut RandomSource) -> Result<f64> {
    check_epsilon(epsilon)?;
    estimate_coverage_with(n, selections_for(n, epsilon), trials, rng)
}

/// One row of the coverage CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub n: usize,
    pub epsilon: f64,
    pub k: usize,
    pub trials: u64,
    pub coverage_estimate: f64,
    pub bound: f64,
}

impl CoverageRow {
    pub const CSV_HEADER: &'static str = "n,epsilon,k,trials,coverage_estimate,bound";

    pub fn compute(n: usize, epsilon: f64, trials: u64, rng: &mut RandomSource) -> Result<Self> {
        Ok(Self {
            n,
            epsilon,
            k: segments_for(n, epsilon),
            trials,
            coverage_estimate: estimate_coverage_probability(n, epsilon, trials, rng)?,
            bound: coverage_bound(n, epsilon),
        })
    }

    /// Binomial standard error of the estimate.
    pub fn standard_error(&self) -> f64 {
        let p = self.coverage_estimate;
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

impl fmt::Display for CoverageRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{:.6},{:.6}",
            self.n, self.epsilon, self.k, self.trials, self.coverage_estimate, self.bound
        )
    }
}
