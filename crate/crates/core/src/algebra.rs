//! Group parameters, modular arithmetic and seeded randomness.
//!
//! Two groups are used by the protocols:
//!
//! * `G1`, the order-`q` subgroup of `Z_p*`, generated by `g1 = h^((p-1)/q)`.
//!   It carries the product protocol.
//! * `G2`, the order-`p(p-1)` subgroup of `Z_{p^2}*` generated by `g2`. It
//!   carries the sum protocol, where `1 + x*p` encodes `x`.

use std::cell::Cell;
use std::fmt;
use std::ops::{Add, AddAssign, Sub};
use std::str::FromStr;
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

/// Miller-Rabin rounds used for every primality decision.
pub const MILLER_RABIN_ROUNDS: usize = 64;

/// Number of `k` values tried when searching for a prime `p = kq + 1`.
pub const DEFAULT_K_SEARCH_BOUND: u64 = 1_000_000;

/// Smallest accepted bit length for `q`.
pub const MIN_Q_BITS: u64 = 4;

// Trial division limit used when certifying the factorisation of (p - 1) / q.
const TRIAL_DIVISION_LIMIT: u64 = 1 << 21;

/// Modular operations performed on the current thread, as counted by
/// [`mod_mul`], [`mod_exp`] and [`mod_inverse`].
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct OpCounts {
    pub mul: u64,
    pub exp: u64,
    pub inv: u64,
}

impl Add for OpCounts {
    type Output = OpCounts;

    fn add(self, rhs: Self) -> Self {
        OpCounts { mul: self.mul + rhs.mul, exp: self.exp + rhs.exp, inv: self.inv + rhs.inv }
    }
}

impl AddAssign for OpCounts {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for OpCounts {
    type Output = OpCounts;

    fn sub(self, rhs: Self) -> Self {
        OpCounts { mul: self.mul - rhs.mul, exp: self.exp - rhs.exp, inv: self.inv - rhs.inv }
    }
}

thread_local! {
    static OPS: Cell<OpCounts> = const { Cell::new(OpCounts { mul: 0, exp: 0, inv: 0 }) };
}

fn bump(f: impl FnOnce(&mut OpCounts)) {
    OPS.with(|ops| {
        let mut c = ops.get();
        f(&mut c);
        ops.set(c);
    });
}

/// Running operation totals for this thread.
pub fn op_counts() -> OpCounts {
    OPS.with(Cell::get)
}

/// Runs `f` and returns its result with the operations it performed.
pub fn measure_ops<T>(f: impl FnOnce() -> T) -> (T, OpCounts) {
    let before = op_counts();
    let out = f();
    (out, op_counts() - before)
}

/// `a * b mod modulus`.
pub fn mod_mul(a: &BigUint, b: &BigUint, modulus: &BigUint) -> BigUint {
    bump(|c| c.mul += 1);
    (a * b) % modulus
}

/// `base^exponent mod modulus`.
///
/// `modulus` must be at least 2.
pub fn mod_exp(base: &BigUint, exponent: &BigUint, modulus: &BigUint) -> BigUint {
    debug_assert!(*modulus >= BigUint::from(2u8), "modulus must be >= 2");
    bump(|c| c.exp += 1);
    base.modpow(exponent, modulus)
}

/// Multiplicative inverse of `a` modulo `modulus` by the extended Euclidean
/// algorithm.
pub fn mod_inverse(a: &BigUint, modulus: &BigUint) -> Result<BigUint> {
    if modulus.is_zero() {
        return Err(Error::NotInvertible);
    }
    bump(|c| c.inv += 1);
    let m = BigInt::from_biguint(Sign::Plus, modulus.clone());
    let a = BigInt::from_biguint(Sign::Plus, a % modulus);
    let egcd = a.extended_gcd(&m);
    if !egcd.gcd.is_one() {
        return Err(Error::NotInvertible);
    }
    let inv = egcd.x.mod_floor(&m);
    Ok(inv.to_biguint().expect("mod_floor result is non-negative"))
}

/// Miller-Rabin with [`MILLER_RABIN_ROUNDS`] rounds. Witnesses are drawn from
/// a stream seeded by `n` itself so the answer is a pure function of `n`.
pub fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u8);
    if *n < two {
        return false;
    }
    for small in SMALL_PRIMES {
        let sp = BigUint::from(*small);
        if *n == sp {
            return true;
        }
        if (n % &sp).is_zero() {
            return false;
        }
    }

    let n_minus_1 = n - 1u8;
    let s = n_minus_1.trailing_zeros().expect("n - 1 > 0");
    let d = &n_minus_1 >> s;

    let mut seed = [0u8; 32];
    for (slot, byte) in seed.iter_mut().zip(n.to_bytes_le()) {
        *slot = byte;
    }
    let mut witnesses = RandomSource::from_seed(seed);
    let span = n - 3u8; // witnesses in [2, n - 2]

    'rounds: for _ in 0..MILLER_RABIN_ROUNDS {
        let a = witnesses.below(&span) + 2u8;
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_1 {
                continue 'rounds;
            }
        }
        return false;
    }
    true
}

const SMALL_PRIMES: &[u32] = &[
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

/// Distinct prime factors of `n`, found by trial division up to `limit`.
/// Returns the factors and the cofactor left unfactored (1 when complete).
fn trial_factor(n: &BigUint, limit: u64) -> (Vec<BigUint>, BigUint) {
    let mut rest = n.clone();
    let mut factors = Vec::new();
    let mut f = 2u64;
    let mut exhausted = false;
    while f <= limit {
        let fb = BigUint::from(f);
        if &fb * &fb > rest {
            exhausted = true;
            break;
        }
        if (&rest % &fb).is_zero() {
            factors.push(fb.clone());
            while (&rest % &fb).is_zero() {
                rest /= &fb;
            }
        }
        f += if f == 2 { 1 } else { 2 };
    }
    if rest > BigUint::one() && exhausted {
        // no factor <= sqrt(rest) remains, so rest is prime
        factors.push(std::mem::replace(&mut rest, BigUint::one()));
    }
    (factors, rest)
}

/// Distinct prime factors of `p - 1 = k * q`, or a description of why the
/// factorisation could not be completed.
fn factor_p_minus_1(p: &BigUint, q: &BigUint) -> std::result::Result<Vec<BigUint>, String> {
    let p_minus_1 = p - 1u8;
    let (k, r) = p_minus_1.div_rem(q);
    if !r.is_zero() {
        return Err("q does not divide p - 1".into());
    }
    let (mut factors, rest) = trial_factor(&k, TRIAL_DIVISION_LIMIT);
    if rest > BigUint::one() {
        if is_probable_prime(&rest) {
            factors.push(rest);
        } else {
            return Err("cannot factor (p - 1) / q by trial division".into());
        }
    }
    if !factors.contains(q) {
        factors.push(q.clone());
    }
    factors.sort();
    factors.dedup();
    Ok(factors)
}

/// Public algebraic setting shared by all parties.
///
/// Fields are read-only; a validation verdict is cached on first use.
#[derive(Debug, Clone)]
pub struct GroupParams {
    q: BigUint,
    p: BigUint,
    h: BigUint,
    g1: BigUint,
    g2: BigUint,
    input_bound: BigUint,
    p_squared: BigUint,
    sum_order: BigUint,
    verdict: OnceLock<Vec<String>>,
}

impl PartialEq for GroupParams {
    fn eq(&self, other: &Self) -> bool {
        self.q == other.q
            && self.p == other.p
            && self.h == other.h
            && self.g1 == other.g1
            && self.g2 == other.g2
            && self.input_bound == other.input_bound
    }
}

impl Eq for GroupParams {}

impl GroupParams {
    /// Assembles parameters without checking them. Use [`GroupParams::validate`]
    /// (or let the protocols do it) before trusting hand-supplied values.
    pub fn from_parts(
        q: BigUint,
        p: BigUint,
        h: BigUint,
        g1: BigUint,
        g2: BigUint,
        input_bound: BigUint,
    ) -> Self {
        let p_squared = &p * &p;
        let sum_order = if p.is_zero() { BigUint::zero() } else { &p * (&p - 1u8) };
        Self { q, p, h, g1, g2, input_bound, p_squared, sum_order, verdict: OnceLock::new() }
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn h(&self) -> &BigUint {
        &self.h
    }

    pub fn g1(&self) -> &BigUint {
        &self.g1
    }

    pub fn g2(&self) -> &BigUint {
        &self.g2
    }

    /// Public upper bound `M` on participant inputs.
    pub fn input_bound(&self) -> &BigUint {
        &self.input_bound
    }

    /// Modulus of `G2`.
    pub fn p_squared(&self) -> &BigUint {
        &self.p_squared
    }

    /// Order of `G2`, `p(p - 1)`.
    pub fn sum_group_order(&self) -> &BigUint {
        &self.sum_order
    }

    /// Replaces the input bound `M`; it must stay below `p`.
    pub fn with_input_bound(self, bound: BigUint) -> Result<Self> {
        if bound >= self.p {
            return Err(Error::InvalidParams(vec!["M must be smaller than p".into()]));
        }
        Ok(Self::from_parts(self.q, self.p, self.h, self.g1, self.g2, bound))
    }

    /// Every violated invariant, in a human readable form. Empty when valid.
    pub fn violations(&self) -> &[String] {
        self.verdict.get_or_init(|| check_params(self))
    }

    /// `true` iff every invariant holds.
    pub fn validate(&self) -> bool {
        self.violations().is_empty()
    }

    /// Like [`GroupParams::validate`] but as a `Result` carrying the reasons.
    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(v.to_vec()))
        }
    }
}

/// Checks every [`GroupParams`] invariant and returns the violated ones.
pub fn validate_group_params(gp: &GroupParams) -> (bool, Vec<String>) {
    let v = gp.violations().to_vec();
    (v.is_empty(), v)
}

fn check_params(gp: &GroupParams) -> Vec<String> {
    let mut reasons = Vec::new();
    let one = BigUint::one();
    let (p, q) = (&gp.p, &gp.q);

    if !is_probable_prime(q) {
        reasons.push("q is not prime".to_string());
    }
    if !is_probable_prime(p) {
        reasons.push("p is not prime".to_string());
    }
    if !reasons.is_empty() {
        return reasons;
    }
    if gp.input_bound >= *p {
        reasons.push("M is not smaller than p".into());
    }

    let factors = match factor_p_minus_1(p, q) {
        Ok(f) => f,
        Err(why) => {
            reasons.push(why);
            return reasons;
        }
    };
    let p_minus_1 = p - 1u8;

    if gp.h <= one || gp.h >= *p {
        reasons.push("h is not in (1, p)".into());
    } else if factors.iter().any(|f| gp.h.modpow(&(&p_minus_1 / f), p).is_one()) {
        reasons.push("h does not generate Z_p*".into());
    }

    if gp.g1.is_zero() || gp.g1 >= *p {
        reasons.push("g1 is not in [1, p)".into());
    } else if gp.g1.is_one() {
        reasons.push("g1 is the identity".into());
    } else if !gp.g1.modpow(q, p).is_one() {
        reasons.push("g1^q is not 1 mod p".into());
    }

    let p2 = &gp.p_squared;
    let order = &gp.sum_order;
    if gp.g2.is_zero() || gp.g2 >= *p2 || (&gp.g2 % p).is_zero() {
        reasons.push("g2 is not a unit mod p^2".into());
    } else if !gp.g2.modpow(order, p2).is_one() {
        reasons.push("g2^(p(p-1)) is not 1 mod p^2".into());
    } else {
        // Order is exactly p(p-1) iff no maximal proper divisor kills g2.
        let mut primes = factors.clone();
        primes.push(p.clone());
        if primes.iter().any(|f| gp.g2.modpow(&(order / f), p2).is_one()) {
            reasons.push("g2 does not have order p(p-1) mod p^2".into());
        }
    }
    reasons
}

fn random_prime(bits: u64, rng: &mut RandomSource) -> BigUint {
    loop {
        let mut candidate = rng.bits(bits);
        candidate.set_bit(bits - 1, true);
        candidate.set_bit(0, true);
        if is_probable_prime(&candidate) {
            return candidate;
        }
    }
}

/// Samples a `q_bits`-bit prime `q` and builds the full parameter set on top
/// of it with [`params_for_prime_order`].
pub fn generate_group_params(q_bits: u64, rng: &mut RandomSource) -> Result<GroupParams> {
    if q_bits < MIN_Q_BITS {
        return Err(Error::InvalidArgument(format!("q_bits must be at least {MIN_Q_BITS}")));
    }
    let q = random_prime(q_bits, rng);
    params_for_prime_order(&q, DEFAULT_K_SEARCH_BOUND)
}

/// Deterministic parameter construction for a given prime `q`: the first
/// prime `p = kq + 1` with even `k`, then [`params_for_primes`].
pub fn params_for_prime_order(q: &BigUint, k_bound: u64) -> Result<GroupParams> {
    if !is_probable_prime(q) {
        return Err(Error::InvalidArgument("q is not prime".into()));
    }
    let p = (1..=k_bound)
        .map(|i| q * (2 * i) + 1u8)
        .find(is_probable_prime)
        .ok_or(Error::NoPrimeFound(k_bound))?;
    params_for_primes(q, &p)
}

/// Parameters for primes `q | p - 1`: the smallest generator `h` of `Z_p*`,
/// `g1 = h^((p-1)/q)`, `g2 = lift_generator(h, p)` and `M = p - 1`.
pub fn params_for_primes(q: &BigUint, p: &BigUint) -> Result<GroupParams> {
    if !is_probable_prime(q) || !is_probable_prime(p) {
        return Err(Error::InvalidArgument("p and q must be prime".into()));
    }
    let factors = factor_p_minus_1(p, q).map_err(Error::InvalidArgument)?;
    let p_minus_1 = p - 1u8;
    let cofactors: Vec<BigUint> = factors.iter().map(|f| &p_minus_1 / f).collect();

    let mut h = BigUint::from(2u8);
    while h < *p && cofactors.iter().any(|e| h.modpow(e, p).is_one()) {
        h += 1u8;
    }
    if h >= *p {
        // only p = 2, where Z_p* is trivial
        return Err(Error::InvalidArgument("Z_p* has no non-trivial generator".into()));
    }
    let g1 = h.modpow(&(&p_minus_1 / q), p);
    let g2 = lift_generator(&h, p);
    Ok(GroupParams::from_parts(q.clone(), p.clone(), h, g1, g2, p_minus_1))
}

/// Lifts a generator `h` of `Z_p*` to a generator of the order-`p(p-1)`
/// group mod `p^2`: `h` itself unless `h^(p-1) = 1 mod p^2`, else `h + p`.
pub fn lift_generator(h: &BigUint, p: &BigUint) -> BigUint {
    let p2 = p * p;
    if h.modpow(&(p - 1u8), &p2).is_one() {
        h + p
    } else {
        h.clone()
    }
}

impl fmt::Display for GroupParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "q={:x} p={:x} h={:x} g1={:x} g2={:x} M={:x}",
            self.q, self.p, self.h, self.g1, self.g2, self.input_bound
        )
    }
}

fn parse_hex(field: &str, value: &str) -> Result<BigUint> {
    let canonical = !value.is_empty()
        && value.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
        && (value == "0" || !value.starts_with('0'));
    if !canonical {
        return Err(Error::Parse(format!("{field}: expected lowercase hex without leading zeros")));
    }
    BigUint::parse_bytes(value.as_bytes(), 16)
        .ok_or_else(|| Error::Parse(format!("{field}: invalid hex")))
}

impl FromStr for GroupParams {
    type Err = Error;

    /// Parses the exact text form produced by `Display`.
    fn from_str(s: &str) -> Result<Self> {
        const KEYS: [&str; 6] = ["q", "p", "h", "g1", "g2", "M"];
        let s = s.strip_suffix('\n').unwrap_or(s);
        let tokens: Vec<&str> = s.split(' ').collect();
        if tokens.len() != KEYS.len() {
            return Err(Error::Parse(format!("expected {} fields, got {}", KEYS.len(), tokens.len())));
        }
        let mut values = Vec::with_capacity(KEYS.len());
        for (token, key) in tokens.iter().zip(KEYS) {
            let value = token
                .strip_prefix(key)
                .and_then(|rest| rest.strip_prefix('='))
                .ok_or_else(|| Error::Parse(format!("expected field `{key}=`, got `{token}`")))?;
            values.push(parse_hex(key, value)?);
        }
        let mut it = values.into_iter();
        let mut next = || it.next().expect("six fields");
        Ok(GroupParams::from_parts(next(), next(), next(), next(), next(), next()))
    }
}

/// Deterministic randomness for every party and simulation.
///
/// A ChaCha20 stream keyed by a 32-byte seed. Parties never share a source;
/// use [`RandomSource::fork`] to derive independent children.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: [u8; 32],
    stream: ChaCha20Rng,
}

impl RandomSource {
    pub fn from_seed(seed: [u8; 32]) -> Self {
        Self { seed, stream: ChaCha20Rng::from_seed(seed) }
    }

    /// Seed with the little-endian bytes of `seed` followed by zeros.
    pub fn from_u64(seed: u64) -> Self {
        let mut bytes = [0u8; 32];
        bytes[..8].copy_from_slice(&seed.to_le_bytes());
        Self::from_seed(bytes)
    }

    pub fn seed(&self) -> [u8; 32] {
        self.seed
    }

    /// A child source whose seed is the next 32 bytes of this stream.
    pub fn fork(&mut self) -> RandomSource {
        let mut child = [0u8; 32];
        self.stream.fill_bytes(&mut child);
        Self::from_seed(child)
    }

    /// Uniform integer with `bits` random bits.
    pub fn bits(&mut self, bits: u64) -> BigUint {
        let nbytes = bits.div_ceil(8) as usize;
        let mut buf = vec![0u8; nbytes];
        self.stream.fill_bytes(&mut buf);
        let excess = nbytes as u64 * 8 - bits;
        if excess > 0 {
            if let Some(top) = buf.last_mut() {
                *top &= 0xff >> excess;
            }
        }
        BigUint::from_bytes_le(&buf)
    }

    /// Uniform in `[0, n)` by rejection sampling. Panics if `n` is zero.
    pub fn below(&mut self, n: &BigUint) -> BigUint {
        assert!(!n.is_zero(), "cannot sample below zero");
        let bits = n.bits();
        loop {
            let candidate = self.bits(bits);
            if candidate < *n {
                return candidate;
            }
        }
    }

    /// Uniform in `[lo, hi)`. Panics if the range is empty.
    pub fn range(&mut self, lo: &BigUint, hi: &BigUint) -> BigUint {
        assert!(lo < hi, "empty range");
        lo + self.below(&(hi - lo))
    }

    /// Uniform in `[0, n)` for machine-sized `n`. Panics if `n` is zero.
    pub fn below_u64(&mut self, n: u64) -> u64 {
        assert!(n > 0, "cannot sample below zero");
        let mask = u64::MAX >> (n - 1).leading_zeros().min(63);
        loop {
            let candidate = self.stream.next_u64() & mask;
            if candidate < n {
                return candidate;
            }
        }
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.stream.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.stream.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.stream.fill_bytes(dst)
    }
}
