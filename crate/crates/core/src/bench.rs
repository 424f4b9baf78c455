//! Scaling benchmarks and the least-squares fit used to judge them.
//!
//! For product and sum, Setup is done untimed; each repetition times every
//! participant's encryption plus the aggregator's combine, with repetitions
//! interleaved across party counts. Message and byte
//! columns come from one One-Aggregator simulation per `n` and count only
//! ciphertext messages.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_bigint::BigUint;
use num_traits::One;

use crate::algebra::{GroupParams, RandomSource};
use crate::error::{Error, Result};
use crate::netsim::{complexity_report, MsgType, Role};
use crate::poly::{evaluate_advanced, PolynomialSpec};
use crate::product::{product_combine, product_encrypt};
use crate::ring::{setup_ring, PartyId, Phase, Ring, SetupState};
use crate::session::{Model, Simulation};
use crate::sum::{sum_combine, sum_encrypt};

/// Input width used by default.
pub const DEFAULT_INPUT_BITS: u64 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchTarget {
    Product,
    Sum,
    /// One dense product term plus one squared term per party, evaluated
    /// with the advanced scheme. Timed end to end, Setup included.
    Poly,
}

impl FromStr for BenchTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "product" => Ok(BenchTarget::Product),
            "sum" => Ok(BenchTarget::Sum),
            "poly" => Ok(BenchTarget::Poly),
            other => Err(Error::Parse(format!("unknown bench protocol {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub mean_ns: f64,
    pub stddev_ns: f64,
    pub msgs: u64,
    pub bytes: u64,
}

impl BenchRow {
    pub const CSV_HEADER: &'static str = "n,mean_ns,stddev_ns,msgs,bytes";
}

impl fmt::Display for BenchRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{:.1},{:.1},{},{}", self.n, self.mean_ns, self.stddev_ns, self.msgs, self.bytes)
    }
}

/// Parses `A:B:STEP` into `A, A+STEP, ...` up to and including `B`.
pub fn parse_range(s: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, step] = parts.as_slice() else {
        return Err(Error::Parse(format!("range {s:?} is not A:B:STEP")));
    };
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| Error::Parse(format!("{t:?} in range is not a number")));
    let (a, b, step) = (num(a)?, num(b)?, num(step)?);
    if step == 0 || a > b {
        return Err(Error::Parse(format!("range {s:?} is empty or has step 0")));
    }
    Ok((a..=b).step_by(step).collect())
}

fn mean_stddev(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn random_inputs(n: usize, bits: u64, rng: &mut RandomSource) -> Vec<BigUint> {
    let hi = BigUint::one() << bits;
    (0..n).map(|_| rng.range(&BigUint::one(), &hi)).collect()
}

/// Parties of one product or sum session with Setup already done.
struct PreparedSession {
    phase: Phase,
    inputs: Vec<BigUint>,
    participants: Vec<PartyId>,
    states: Vec<SetupState>,
}

impl PreparedSession {
    fn new(gp: &GroupParams, phase: Phase, inputs: &[BigUint], rng: &mut RandomSource) -> Result<Self> {
        let n = inputs.len() as PartyId;
        let ring = Ring::new((1..=n + 1).collect::<Vec<_>>())?;
        Ok(PreparedSession {
            phase,
            inputs: inputs.to_vec(),
            participants: (1..=n).collect(),
            states: setup_ring(gp, &ring, phase, rng)?,
        })
    }

    /// Nanoseconds for every participant's encryption plus the combine.
    fn time_once(&self, gp: &GroupParams) -> Result<f64> {
        let (parties, agg) = self.states.split_at(self.inputs.len());
        let blinding = agg[0].blinding();
        let start = Instant::now();
        let value = match self.phase {
            Phase::Product => {
                let cts = parties
                    .iter()
                    .zip(&self.inputs)
                    .map(|(st, x)| product_encrypt(st, gp, x, 0))
                    .collect::<Result<Vec<_>>>()?;
                product_combine(gp, &cts, &self.participants, blinding)?
            }
            Phase::Sum => {
                let cts = parties
                    .iter()
                    .zip(&self.inputs)
                    .map(|(st, x)| sum_encrypt(st, gp, x, 0))
                    .collect::<Result<Vec<_>>>()?;
                sum_combine(gp, &cts, &self.participants, blinding)?
            }
        };
        let elapsed = start.elapsed().as_nanos() as f64;
        std::hint::black_box(value);
        Ok(elapsed)
    }
}

/// Timings in nanoseconds of `reps` encrypt-all-and-combine runs over one
/// untimed Setup.
pub fn time_session(
    gp: &GroupParams,
    phase: Phase,
    inputs: &[BigUint],
    reps: usize,
    rng: &mut RandomSource,
) -> Result<Vec<f64>> {
    let session = PreparedSession::new(gp, phase, inputs, rng)?;
    (0..reps).map(|_| session.time_once(gp)).collect()
}

fn poly_spec(n: usize) -> PolynomialSpec {
    let coefficients = vec![BigUint::one(); n + 1];
    let exponents = (0..n)
        .map(|i| {
            let mut row = vec![BigUint::from(0u8); n + 1];
            row[0] = BigUint::one();
            row[i + 1] = BigUint::from(2u8);
            row
        })
        .collect();
    PolynomialSpec::new(coefficients, exponents).expect("well-formed")
}

/// Ciphertext messages and their bytes in a One-Aggregator run.
fn traffic(gp: &GroupParams, target: BenchTarget, inputs: &[BigUint], rng: &mut RandomSource) -> Result<(u64, u64)> {
    let mut sim = Simulation::new(gp.clone(), Model::Aggregator, inputs.len(), rng)?;
    match target {
        BenchTarget::Product => {
            sim.run_product(0, inputs)?;
        }
        BenchTarget::Sum => {
            sim.run_sum_all(inputs)?;
        }
        BenchTarget::Poly => {
            evaluate_advanced(&mut sim, &poly_spec(inputs.len()), inputs)?;
        }
    }
    let sent = complexity_report(sim.transcript()).role(Role::Participant);
    let (p, s) = (sent.sent_of(MsgType::ProductCiphertext), sent.sent_of(MsgType::SumCiphertext));
    Ok((p.messages + s.messages, p.bytes + s.bytes))
}

fn time_poly(gp: &GroupParams, inputs: &[BigUint], reps: usize, rng: &mut RandomSource) -> Result<Vec<f64>> {
    let spec = poly_spec(inputs.len());
    let mut out = Vec::with_capacity(reps);
    for _ in 0..reps {
        let mut sim = Simulation::new(gp.clone(), Model::Aggregator, inputs.len(), rng)?;
        let start = Instant::now();
        let value = evaluate_advanced(&mut sim, &spec, inputs)?;
        out.push(start.elapsed().as_nanos() as f64);
        std::hint::black_box(value);
    }
    Ok(out)
}

/// One CSV row for `n` participants.
pub fn bench_row(
    gp: &GroupParams,
    target: BenchTarget,
    n: usize,
    reps: usize,
    input_bits: u64,
    rng: &mut RandomSource,
) -> Result<BenchRow> {
    run_bench(gp, target, &[n], reps, input_bits, rng).map(|mut rows| rows.remove(0))
}

/// Rows for every `n` in `ns`, all over the same parameters.
///
/// Product and sum repetitions are interleaved across `ns` (one run per `n`
/// per round) so that drift in machine speed spreads evenly over the rows.
pub fn run_bench(
    gp: &GroupParams,
    target: BenchTarget,
    ns: &[usize],
    reps: usize,
    input_bits: u64,
    rng: &mut RandomSource,
) -> Result<Vec<BenchRow>> {
    if reps == 0 {
        return Err(Error::InvalidArgument("at least one repetition is needed".into()));
    }
    let inputs: Vec<Vec<BigUint>> = ns.iter().map(|&n| random_inputs(n, input_bits, rng)).collect();
    let samples: Vec<Vec<f64>> = match target {
        BenchTarget::Product | BenchTarget::Sum => {
            let phase = if target == BenchTarget::Product { Phase::Product } else { Phase::Sum };
            let sessions =
                inputs.iter().map(|x| PreparedSession::new(gp, phase, x, rng)).collect::<Result<Vec<_>>>()?;
            let mut samples = vec![Vec::with_capacity(reps); ns.len()];
            for _ in 0..reps {
                for (session, out) in sessions.iter().zip(&mut samples) {
                    out.push(session.time_once(gp)?);
                }
            }
            samples
        }
        BenchTarget::Poly => inputs.iter().map(|x| time_poly(gp, x, reps, rng)).collect::<Result<_>>()?,
    };
    ns.iter()
        .zip(&inputs)
        .zip(&samples)
        .map(|((&n, x), s)| {
            let (mean_ns, stddev_ns) = mean_stddev(s);
            let (msgs, bytes) = traffic(gp, target, x, rng)?;
            Ok(BenchRow { n, mean_ns, stddev_ns, msgs, bytes })
        })
        .collect()
}

/// Ordinary least squares `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Some(LinearFit { slope, intercept, r_squared })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{params_for_prime_order, DEFAULT_K_SEARCH_BOUND};

    #[test]
    fn ranges() {
        assert_eq!(parse_range("100:1000:100").unwrap().len(), 10);
        assert_eq!(parse_range("3:10:4").unwrap(), vec![3, 7]);
        assert_eq!(parse_range("5:5:1").unwrap(), vec![5]);
        for bad in ["1:2", "1:2:0", "5:1:1", "a:2:1", "1:2:3:4"] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn fit_of_a_line_is_exact() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        let fit = linear_fit(&xs, &ys).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(linear_fit(&[1.0, 1.0], &[2.0, 3.0]).is_none());
        let noisy = linear_fit(&xs, &[1.0, 4.0, 1.0, 4.0]).unwrap();
        assert!(noisy.r_squared < 0.5);
    }

    #[test]
    fn rows_count_one_ciphertext_per_party() {
        let gp = params_for_prime_order(&BigUint::from(1019u32), DEFAULT_K_SEARCH_BOUND).unwrap();
        let mut rng = RandomSource::from_u64(1);
        for (target, per_party) in [(BenchTarget::Product, 1), (BenchTarget::Sum, 1), (BenchTarget::Poly, 2)] {
            let rows = run_bench(&gp, target, &[3, 6], 2, 8, &mut rng).unwrap();
            for row in rows {
                assert_eq!(row.msgs, per_party * row.n as u64);
                assert!(row.bytes > row.msgs * 21);
                assert!(row.mean_ns > 0.0);
            }
        }
        let row = BenchRow { n: 3, mean_ns: 1234.56, stddev_ns: 7.0, msgs: 3, bytes: 70 };
        assert_eq!(row.to_string(), "3,1234.6,7.0,3,70");
    }
}
