//! Blinded addition in `G2 ⊂ Z_{p^2}*`.
//!
//! `(1 + p)^x = 1 + x*p mod p^2`, so multiplying encodings `1 + x_i*p` adds
//! the inputs. Each party multiplies its encoding by `R_i`; the blinding
//! cancels around the ring and the sum is read off as `(C - 1) / p`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::algebra::{mod_mul, GroupParams};
use crate::error::{Error, Result};
use crate::product::{check_senders, fold_mul};
use crate::ring::{PartyId, Phase, SetupState};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SumCiphertext {
    pub value: BigUint,
    pub sender: PartyId,
    pub session: u32,
}

/// `1 + x*p mod p^2`.
pub fn encode(gp: &GroupParams, x: &BigUint) -> BigUint {
    (BigUint::one() + mod_mul(x, gp.p(), gp.p_squared())) % gp.p_squared()
}

/// Inverse of [`encode`] for aggregates: requires `c = 1 mod p` and returns
/// `(c - 1) / p`, which is exact.
pub fn decode(gp: &GroupParams, c: &BigUint) -> Result<BigUint> {
    let (quotient, rem) = (c % gp.p_squared() + gp.p_squared() - 1u8).div_rem(gp.p());
    if !rem.is_zero() {
        return Err(Error::MalformedAggregate);
    }
    Ok(quotient % gp.p())
}

/// `C_i = (1 + x_i*p) * R_i mod p^2`. Every `x_i` in `[0, p)` is accepted;
/// the encoding is always a unit.
pub fn sum_encrypt(st: &SetupState, gp: &GroupParams, x: &BigUint, session: u32) -> Result<SumCiphertext> {
    if st.phase() != Phase::Sum {
        return Err(Error::InvalidArgument("sum encryption needs a sum-phase setup".into()));
    }
    let blinding = st.require_blinding()?;
    if x >= gp.p() {
        return Err(Error::OutOfRange { party: st.party(), reason: "sum input must lie in [0, p)".into() });
    }
    let value = mod_mul(&encode(gp, x), blinding, gp.p_squared());
    Ok(SumCiphertext { value, sender: st.party(), session })
}

/// Multiplies all ciphertexts (and `R_{n+1}` in the One-Aggregator model)
/// and decodes the sum of the inputs mod `p`.
pub fn sum_combine(
    gp: &GroupParams,
    ciphertexts: &[SumCiphertext],
    expected: &[PartyId],
    aggregator_blinding: Option<&BigUint>,
) -> Result<BigUint> {
    check_senders(ciphertexts.iter().map(|c| c.sender), expected)?;
    let c = fold_mul(aggregator_blinding, ciphertexts.iter().map(|c| &c.value), gp.p_squared());
    decode(gp, &c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{mod_exp, params_for_prime_order, params_for_primes};
    use crate::ring::{setup_begin_with_secret, setup_complete, Ring};

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    fn sum_ring(gp: &GroupParams, secrets: &[u64]) -> Vec<SetupState> {
        let ring = Ring::new(1..=secrets.len() as PartyId).unwrap();
        let begun: Vec<_> = secrets
            .iter()
            .zip(1..)
            .map(|(&r, id)| setup_begin_with_secret(gp, &ring, id, Phase::Sum, big(r)).unwrap())
            .collect();
        begun
            .iter()
            .map(|(st, _)| {
                let pred = &begun[st.predecessor() as usize - 1].1;
                let succ = &begun[st.successor() as usize - 1].1;
                setup_complete(st.clone(), gp, pred, succ).unwrap()
            })
            .collect()
    }

    #[test]
    fn encoding_identity_holds_exhaustively_for_small_primes() {
        for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
            let pb = big(p);
            let p2 = big(p * p);
            for m in 0..p {
                let direct = (1 + m * p) % (p * p);
                assert_eq!(mod_exp(&(&pb + 1u8), &big(m), &p2), big(direct), "p={p} m={m}");
            }
        }
    }

    #[test]
    fn unblinded_and_zero_inputs() {
        let gp = params_for_prime_order(&big(2), 10).unwrap();
        assert_eq!(gp.p(), &big(5));
        assert_eq!(encode(&gp, &big(4)), big(21));
        assert_eq!(decode(&gp, &big(21)).unwrap(), big(4));
        assert_eq!(decode(&gp, &big(1)).unwrap(), big(0));
        assert_eq!(decode(&gp, &big(22)), Err(Error::MalformedAggregate));

        let states = sum_ring(&gp, &[3, 7, 11]);
        let ct = sum_encrypt(&states[0], &gp, &big(0), 0).unwrap();
        assert_eq!(&ct.value, states[0].blinding().unwrap());
        assert!(matches!(sum_encrypt(&states[0], &gp, &big(5), 0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn three_party_sum_mod_25() {
        let gp = params_for_prime_order(&big(2), 10).unwrap();
        for secrets in [[1u64, 2, 3], [19, 4, 7], [5, 5, 6]] {
            let states = sum_ring(&gp, &secrets);
            let cts: Vec<_> =
                states.iter().zip([1u64, 2, 1]).map(|(st, x)| sum_encrypt(st, &gp, &big(x), 0).unwrap()).collect();
            let prod = cts.iter().fold(big(1), |a, c| a * &c.value % 25u8);
            assert_eq!(prod, big(21));
            assert_eq!(sum_combine(&gp, &cts, &[1, 2, 3], None).unwrap(), big(4));

            let zeros: Vec<_> = states.iter().map(|st| sum_encrypt(st, &gp, &big(0), 0).unwrap()).collect();
            assert_eq!(sum_combine(&gp, &zeros, &[1, 2, 3], None).unwrap(), big(0));
        }
    }

    #[test]
    fn sum_mod_23() {
        let gp = params_for_primes(&big(11), &big(23)).unwrap();
        let states = sum_ring(&gp, &[100, 200, 300]);
        let cts: Vec<_> =
            states.iter().zip([3u64, 5, 7]).map(|(st, x)| sum_encrypt(st, &gp, &big(x), 9).unwrap()).collect();
        assert_eq!(sum_combine(&gp, &cts, &[1, 2, 3], None).unwrap(), big(15));
        assert_eq!(sum_combine(&gp, &cts[1..], &[1, 2, 3], None), Err(Error::MissingCiphertext(1)));
    }

    #[test]
    fn tampered_aggregate_is_detected() {
        let gp = params_for_primes(&big(11), &big(23)).unwrap();
        let states = sum_ring(&gp, &[10, 20, 30]);
        let mut cts: Vec<_> =
            states.iter().zip([3u64, 5, 7]).map(|(st, x)| sum_encrypt(st, &gp, &big(x), 0).unwrap()).collect();
        cts[1].value = (&cts[1].value * 2u8) % gp.p_squared();
        assert_eq!(sum_combine(&gp, &cts, &[1, 2, 3], None), Err(Error::MalformedAggregate));
    }
}
