//! Evaluation of `f(x) = sum_k c_k * prod_i x_i^{d_{i,k}}` from product and
//! sum sessions.
//!
//! Term numbers are 1-based throughout, as are party ids.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::algebra::{mod_exp, mod_mul, GroupParams, RandomSource};
use crate::error::{Error, Result};
use crate::netsim::Transcript;
use crate::ring::PartyId;
use crate::session::{Model, Simulation};

/// Public description of the polynomial: `m` coefficients and an `n x m`
/// exponent matrix (row `i` belongs to party `i + 1`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolynomialSpec {
    coefficients: Vec<BigUint>,
    exponents: Vec<Vec<BigUint>>,
}

impl PolynomialSpec {
    pub fn new(coefficients: Vec<BigUint>, exponents: Vec<Vec<BigUint>>) -> Result<Self> {
        if coefficients.is_empty() || exponents.is_empty() {
            return Err(Error::InvalidArgument("a polynomial needs at least one term and one party".into()));
        }
        if let Some(i) = exponents.iter().position(|row| row.len() != coefficients.len()) {
            return Err(Error::InvalidArgument(format!(
                "exponent row {} has {} entries, expected {}",
                i + 1,
                exponents[i].len(),
                coefficients.len()
            )));
        }
        Ok(Self { coefficients, exponents })
    }

    /// Convenience constructor from small integers.
    pub fn from_u64(coefficients: &[u64], exponents: &[&[u64]]) -> Result<Self> {
        Self::new(
            coefficients.iter().map(|&c| BigUint::from(c)).collect(),
            exponents.iter().map(|row| row.iter().map(|&d| BigUint::from(d)).collect()).collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.exponents.len()
    }

    pub fn m(&self) -> usize {
        self.coefficients.len()
    }

    /// `c_k` for `k` in `1..=m`.
    pub fn coefficient(&self, k: usize) -> &BigUint {
        &self.coefficients[k - 1]
    }

    /// `d_{i,k}` for party `i` and term `k`, both 1-based.
    pub fn exponent(&self, party: PartyId, k: usize) -> &BigUint {
        &self.exponents[party as usize - 1][k - 1]
    }

    pub fn coefficients(&self) -> &[BigUint] {
        &self.coefficients
    }

    pub fn exponents(&self) -> &[Vec<BigUint>] {
        &self.exponents
    }

    /// Parties with a nonzero exponent in term `k`.
    pub fn contributors(&self, k: usize) -> Vec<PartyId> {
        (1..=self.n() as PartyId).filter(|&i| !self.exponent(i, k).is_zero()).collect()
    }

    /// Coefficients must lie in `[0, p)` and exponents in `[0, q)`.
    pub fn check_against(&self, gp: &GroupParams) -> Result<()> {
        if let Some(k) = self.coefficients.iter().position(|c| c >= gp.p()) {
            return Err(Error::InvalidArgument(format!("coefficient of term {} is not below p", k + 1)));
        }
        for (i, row) in self.exponents.iter().enumerate() {
            if let Some(k) = row.iter().position(|d| d >= gp.q()) {
                return Err(Error::InvalidArgument(format!("exponent of party {} in term {} is not below q", i + 1, k + 1)));
            }
        }
        Ok(())
    }
}

/// `n m`, then the `m` coefficients, then `n` rows of `m` exponents.
impl fmt::Display for PolynomialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn row(f: &mut fmt::Formatter<'_>, values: &[BigUint]) -> fmt::Result {
            for (j, v) in values.iter().enumerate() {
                if j > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{v}")?;
            }
            writeln!(f)
        }
        writeln!(f, "{} {}", self.n(), self.m())?;
        row(f, &self.coefficients)?;
        self.exponents.iter().try_for_each(|r| row(f, r))
    }
}

/// Whitespace-separated decimal tokens in the order written by `Display`.
impl FromStr for PolynomialSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut tokens = s.split_whitespace();
        let mut dim = |what: &str| -> Result<usize> {
            tokens
                .next()
                .ok_or_else(|| Error::Parse(format!("missing {what}")))?
                .parse()
                .map_err(|_| Error::Parse(format!("{what} is not a number")))
        };
        let (n, m) = (dim("n")?, dim("m")?);
        let values: Vec<BigUint> = tokens
            .map(|t| t.parse::<BigUint>().map_err(|_| Error::Parse(format!("{t:?} is not a decimal integer"))))
            .collect::<Result<_>>()?;
        let expected = n.checked_mul(m).and_then(|nm| nm.checked_add(m));
        if expected != Some(values.len()) {
            return Err(Error::Parse(format!("expected {} values after `n m`, found {}", m + n * m, values.len())));
        }
        let mut values = values.into_iter();
        let coefficients = values.by_ref().take(m).collect();
        let exponents = (0..n).map(|_| values.by_ref().take(m).collect()).collect();
        Self::new(coefficients, exponents)
    }
}

/// How each term with a nonzero coefficient is evaluated.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermClassification {
    /// Terms with at least two contributors, plus constant terms.
    pub product_terms: Vec<usize>,
    /// Single-contributor terms, ordered by owner then term.
    pub sum_terms: Vec<usize>,
    /// Owner of each entry of `sum_terms`; non-decreasing, may repeat.
    pub sum_owners: Vec<PartyId>,
}

impl TermClassification {
    /// Owners without repetition.
    pub fn distinct_owners(&self) -> Vec<PartyId> {
        let mut owners = self.sum_owners.clone();
        owners.dedup();
        owners
    }
}

pub fn classify_terms(spec: &PolynomialSpec) -> TermClassification {
    let mut out = TermClassification::default();
    let mut single = Vec::new();
    for k in 1..=spec.m() {
        if spec.coefficient(k).is_zero() {
            continue;
        }
        match spec.contributors(k).as_slice() {
            [owner] => single.push((*owner, k)),
            _ => out.product_terms.push(k),
        }
    }
    single.sort_unstable();
    (out.sum_owners, out.sum_terms) = single.into_iter().unzip();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Every term through the product protocol.
    Basic,
    /// Single-contributor terms through one sum session.
    Advanced,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basic" => Ok(Scheme::Basic),
            "advanced" => Ok(Scheme::Advanced),
            other => Err(Error::Parse(format!("unknown scheme {other:?}"))),
        }
    }
}

fn check_inputs(sim: &Simulation, spec: &PolynomialSpec, inputs: &[BigUint]) -> Result<()> {
    let gp = sim.params();
    spec.check_against(gp)?;
    if spec.n() != sim.participant_count() || inputs.len() != spec.n() {
        return Err(Error::InvalidArgument(format!(
            "spec has {} parties, simulation {}, inputs {}",
            spec.n(),
            sim.participant_count(),
            inputs.len()
        )));
    }
    if let Some(i) = inputs.iter().position(|x| x >= gp.p()) {
        return Err(Error::OutOfRange { party: i as PartyId + 1, reason: "input must lie in [0, p)".into() });
    }
    Ok(())
}

fn is_constant(spec: &PolynomialSpec, k: usize) -> bool {
    spec.contributors(k).is_empty()
}

/// Zero cannot be carried by the product protocol.
fn check_no_zero_factors(spec: &PolynomialSpec, inputs: &[BigUint], terms: &[usize]) -> Result<()> {
    for &k in terms {
        if let Some(&party) = spec.contributors(k).iter().find(|&&i| inputs[i as usize - 1].is_zero()) {
            return Err(Error::ZeroInProductTerm { term: k, party });
        }
    }
    Ok(())
}

/// Runs one product session per non-constant term in `terms` and returns
/// `(c_k, term value)` pairs. Constants are summed separately.
fn run_product_terms(
    sim: &mut Simulation,
    spec: &PolynomialSpec,
    inputs: &[BigUint],
    terms: &[usize],
) -> Result<(Vec<(BigUint, BigUint)>, BigUint)> {
    let mut values = Vec::new();
    let mut constants = BigUint::zero();
    for &k in terms {
        if is_constant(spec, k) {
            constants += spec.coefficient(k);
            continue;
        }
        let mut powers = Vec::with_capacity(spec.n());
        for (id, x) in (1..=spec.n() as PartyId).zip(inputs) {
            let d = spec.exponent(id, k);
            powers.push(if d.is_zero() { BigUint::one() } else { sim.local(id, |gp| mod_exp(x, d, gp.p())) });
        }
        let value = sim.run_product(k as u32, &powers)?;
        values.push((spec.coefficient(k).clone(), value));
    }
    Ok((values, constants))
}

/// `constants + extra + sum c_k * T_k mod p`, computed by whoever learns the
/// result: the aggregator, or every participant.
fn finish(sim: &mut Simulation, terms: &[(BigUint, BigUint)], constants: &BigUint, extra: &BigUint) -> BigUint {
    let evaluators: Vec<PartyId> = match sim.aggregator() {
        Some(agg) => vec![agg],
        None => sim.participants().collect(),
    };
    let mut result = BigUint::zero();
    for id in evaluators {
        result = sim.local(id, |gp| {
            let p = gp.p();
            terms.iter().fold((constants + extra) % p, |acc, (c, t)| (acc + mod_mul(c, t, p)) % p)
        });
    }
    result
}

/// Every term through the product protocol. Refuses specs with a
/// single-contributor term, whose value the product protocol would reveal.
pub fn evaluate_basic(sim: &mut Simulation, spec: &PolynomialSpec, inputs: &[BigUint]) -> Result<BigUint> {
    let classes = classify_terms(spec);
    if let Some((&term, &party)) = classes.sum_terms.iter().zip(&classes.sum_owners).min() {
        return Err(Error::InsecureTerm { term, party });
    }
    evaluate_basic_unguarded(sim, spec, inputs)
}

/// [`evaluate_basic`] without the single-contributor check. Exists to
/// demonstrate the leak; do not use for real data.
pub fn evaluate_basic_unguarded(sim: &mut Simulation, spec: &PolynomialSpec, inputs: &[BigUint]) -> Result<BigUint> {
    check_inputs(sim, spec, inputs)?;
    let terms: Vec<usize> = (1..=spec.m()).filter(|&k| !spec.coefficient(k).is_zero()).collect();
    check_no_zero_factors(spec, inputs, &terms)?;
    let (values, constants) = run_product_terms(sim, spec, inputs, &terms)?;
    Ok(finish(sim, &values, &constants, &BigUint::zero()))
}

/// Product terms as in the basic scheme; single-contributor terms are
/// weighted locally by their owners and added in one sum session.
pub fn evaluate_advanced(sim: &mut Simulation, spec: &PolynomialSpec, inputs: &[BigUint]) -> Result<BigUint> {
    check_inputs(sim, spec, inputs)?;
    let classes = classify_terms(spec);
    let owners = classes.distinct_owners();
    if owners.len() == 1 {
        return Err(Error::TooFewSumParticipants { found: 1, required: 2 });
    }
    check_no_zero_factors(spec, inputs, &classes.product_terms)?;

    let (values, constants) = run_product_terms(sim, spec, inputs, &classes.product_terms)?;

    let mut sum_part = BigUint::zero();
    if !owners.is_empty() {
        let mut addends: BTreeMap<PartyId, BigUint> = BTreeMap::new();
        for (&k, &owner) in classes.sum_terms.iter().zip(&classes.sum_owners) {
            let x = &inputs[owner as usize - 1];
            let (c, d) = (spec.coefficient(k), spec.exponent(owner, k));
            let weighted = sim.local(owner, |gp| mod_mul(c, &mod_exp(x, d, gp.p()), gp.p()));
            let acc = addends.entry(owner).or_default();
            *acc = (&*acc + weighted) % sim.params().p();
        }
        if sim.model() == Model::Peers {
            // A two-member ring gives R_i = 1; pad with zero addends.
            let others: Vec<PartyId> = sim.participants().filter(|id| !addends.contains_key(id)).collect();
            let missing = 3usize.saturating_sub(addends.len());
            addends.extend(others.into_iter().take(missing).map(|id| (id, BigUint::zero())));
        }
        sum_part = sim.run_sum(&addends)?;
    }
    Ok(finish(sim, &values, &constants, &sum_part))
}

/// Result of [`evaluate`].
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: BigUint,
    pub transcript: Transcript,
}

/// Builds a simulation for `spec` and evaluates it with `scheme`.
pub fn evaluate(
    gp: &GroupParams,
    spec: &PolynomialSpec,
    inputs: &[BigUint],
    model: Model,
    scheme: Scheme,
    rng: &mut RandomSource,
) -> Result<Evaluation> {
    let mut sim = Simulation::new(gp.clone(), model, spec.n(), rng)?;
    let value = match scheme {
        Scheme::Basic => evaluate_basic(&mut sim, spec, inputs)?,
        Scheme::Advanced => evaluate_advanced(&mut sim, spec, inputs)?,
    };
    Ok(Evaluation { value, transcript: sim.into_transcript() })
}
