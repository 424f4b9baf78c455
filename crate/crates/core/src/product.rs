//! Blinded multiplication in `G1`: `C_i = x_i * R_i mod p`, and the
//! product of all ciphertexts equals the product of all inputs.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::algebra::{mod_mul, GroupParams};
use crate::error::{Error, Result};
use crate::ring::{PartyId, Phase, SetupState};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductCiphertext {
    pub value: BigUint,
    pub sender: PartyId,
    /// Polynomial term this ciphertext belongs to; 0 for standalone runs.
    pub term_index: u32,
}

/// `C_i = x_i * R_i mod p`. A party that does not take part sets `x_i = 1`.
pub fn product_encrypt(
    st: &SetupState,
    gp: &GroupParams,
    x: &BigUint,
    term_index: u32,
) -> Result<ProductCiphertext> {
    if st.phase() != Phase::Product {
        return Err(Error::InvalidArgument("product encryption needs a product-phase setup".into()));
    }
    let blinding = st.require_blinding()?;
    if x.is_zero() || x >= gp.p() {
        return Err(Error::OutOfRange { party: st.party(), reason: "product input must lie in [1, p)".into() });
    }
    Ok(ProductCiphertext { value: mod_mul(x, blinding, gp.p()), sender: st.party(), term_index })
}

/// Checks that `senders` is exactly `expected`, each once.
pub(crate) fn check_senders(
    senders: impl IntoIterator<Item = PartyId>,
    expected: &[PartyId],
) -> Result<()> {
    let wanted: BTreeSet<PartyId> = expected.iter().copied().collect();
    let mut seen = BTreeSet::new();
    for s in senders {
        if !wanted.contains(&s) || !seen.insert(s) {
            return Err(Error::UnexpectedCiphertext(s));
        }
    }
    if let Some(missing) = wanted.difference(&seen).next() {
        return Err(Error::MissingCiphertext(*missing));
    }
    Ok(())
}

/// Multiplies `values` (and an optional starting factor) mod `modulus`.
pub(crate) fn fold_mul<'a>(
    start: Option<&BigUint>,
    values: impl IntoIterator<Item = &'a BigUint>,
    modulus: &BigUint,
) -> BigUint {
    let mut acc: Option<BigUint> = start.cloned();
    for v in values {
        acc = Some(match acc {
            None => v % modulus,
            Some(a) => mod_mul(&a, v, modulus),
        });
    }
    acc.unwrap_or_else(|| BigUint::from(1u8) % modulus)
}

/// `prod C_i mod p`, times `R_{n+1}` when the aggregator's own blinding is
/// supplied. Every party in `expected` must contribute exactly one ciphertext,
/// otherwise the blinding does not cancel.
pub fn product_combine(
    gp: &GroupParams,
    ciphertexts: &[ProductCiphertext],
    expected: &[PartyId],
    aggregator_blinding: Option<&BigUint>,
) -> Result<BigUint> {
    check_senders(ciphertexts.iter().map(|c| c.sender), expected)?;
    if let Some(first) = ciphertexts.first() {
        if ciphertexts.iter().any(|c| c.term_index != first.term_index) {
            return Err(Error::InvalidArgument("ciphertexts from different terms".into()));
        }
    }
    Ok(fold_mul(aggregator_blinding, ciphertexts.iter().map(|c| &c.value), gp.p()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{measure_ops, params_for_prime_order};
    use crate::ring::{setup_begin_with_secret, setup_complete, Ring};

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    fn textbook() -> (GroupParams, Vec<SetupState>) {
        let gp = params_for_prime_order(&big(11), 10).unwrap();
        let ring = Ring::new([1, 2, 3]).unwrap();
        let begun: Vec<_> = [3u64, 5, 7]
            .iter()
            .zip(1..)
            .map(|(&r, id)| setup_begin_with_secret(&gp, &ring, id, Phase::Product, big(r)).unwrap())
            .collect();
        let states = begun
            .iter()
            .map(|(st, _)| {
                let pred = &begun[st.predecessor() as usize - 1].1;
                let succ = &begun[st.successor() as usize - 1].1;
                setup_complete(st.clone(), &gp, pred, succ).unwrap()
            })
            .collect();
        (gp, states)
    }

    #[test]
    fn encrypt_examples() {
        let (gp, states) = textbook();
        let cts: Vec<_> = states
            .iter()
            .zip([2u64, 3, 4])
            .map(|(st, x)| product_encrypt(st, &gp, &big(x), 0).unwrap().value)
            .collect();
        // R = (9, 6, 3): 18, 18, 12 mod 23
        assert_eq!(cts, vec![big(18), big(18), big(12)]);
        assert_eq!(product_encrypt(&states[0], &gp, &big(1), 0).unwrap().value, big(9));
        assert!(matches!(product_encrypt(&states[0], &gp, &big(23), 0), Err(Error::OutOfRange { .. })));
        assert!(matches!(product_encrypt(&states[0], &gp, &big(0), 0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn encrypt_requires_setup() {
        let gp = params_for_prime_order(&big(11), 10).unwrap();
        let ring = Ring::new([1, 2, 3]).unwrap();
        let (st, _) = setup_begin_with_secret(&gp, &ring, 1, Phase::Product, big(3)).unwrap();
        assert_eq!(product_encrypt(&st, &gp, &big(2), 0), Err(Error::NotSetUp(1)));
        let (st, _) = setup_begin_with_secret(&gp, &ring, 1, Phase::Sum, big(3)).unwrap();
        assert!(matches!(product_encrypt(&st, &gp, &big(2), 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn combine_examples() {
        let (gp, states) = textbook();
        let encrypt = |xs: [u64; 3]| -> Vec<ProductCiphertext> {
            states.iter().zip(xs).map(|(st, x)| product_encrypt(st, &gp, &big(x), 0).unwrap()).collect()
        };
        let cts = encrypt([2, 3, 4]);
        // 18 * 18 * 12 = 3888 = 169 * 23 + 1, and 2 * 3 * 4 = 24 = 23 + 1
        assert_eq!(product_combine(&gp, &cts, &[1, 2, 3], None).unwrap(), big(1));
        assert_eq!(product_combine(&gp, &encrypt([1, 1, 1]), &[1, 2, 3], None).unwrap(), big(1));
        assert_eq!(product_combine(&gp, &encrypt([1, 5, 4]), &[1, 2, 3], None).unwrap(), big(20));

        assert_eq!(product_combine(&gp, &cts[..2], &[1, 2, 3], None), Err(Error::MissingCiphertext(3)));
        let mut dup = cts.clone();
        dup.push(cts[0].clone());
        assert_eq!(product_combine(&gp, &dup, &[1, 2, 3], None), Err(Error::UnexpectedCiphertext(1)));
        assert_eq!(product_combine(&gp, &cts, &[1, 2], None), Err(Error::UnexpectedCiphertext(3)));
    }

    #[test]
    fn combine_cost_is_one_multiplication_per_extra_factor() {
        let (gp, states) = textbook();
        let cts: Vec<_> = states.iter().map(|st| product_encrypt(st, &gp, &big(2), 0).unwrap()).collect();
        let (_, ops) = measure_ops(|| product_combine(&gp, &cts, &[1, 2, 3], None).unwrap());
        assert_eq!(ops.mul, 2);
        let (_, ops) = measure_ops(|| product_combine(&gp, &cts, &[1, 2, 3], Some(&big(1))).unwrap());
        assert_eq!(ops.mul, 3);
    }
}
