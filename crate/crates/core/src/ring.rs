//! Ring arrangement and the one-round Setup exchange.
//!
//! Every ring member `i` publishes `Y_i = g^{r_i}` to both neighbours and
//! derives `R_i = (Y_succ / Y_pred)^{r_i}`. Around the ring the exponents
//! telescope, so `prod R_i = 1` in the phase group.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::algebra::{mod_exp, mod_inverse, mod_mul, GroupParams, RandomSource};
use crate::error::{Error, Result};

/// Participant identifier. Regular participants are `1..=n`; in the
/// One-Aggregator model the aggregator is `n + 1`. `0` is reserved for
/// broadcast addressing.
pub type PartyId = u32;

/// Which group a Setup exchange runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    /// `G1` mod `p`, exponents in `Z_q`.
    Product,
    /// `G2` mod `p^2`, exponents in `Z_{p(p-1)}`.
    Sum,
}

impl Phase {
    pub fn modulus(self, gp: &GroupParams) -> &BigUint {
        match self {
            Phase::Product => gp.p(),
            Phase::Sum => gp.p_squared(),
        }
    }

    pub fn generator(self, gp: &GroupParams) -> &BigUint {
        match self {
            Phase::Product => gp.g1(),
            Phase::Sum => gp.g2(),
        }
    }

    /// Order of the phase group, which bounds the secret exponents.
    pub fn group_order(self, gp: &GroupParams) -> &BigUint {
        match self {
            Phase::Product => gp.q(),
            Phase::Sum => gp.sum_group_order(),
        }
    }

    /// Membership test for a received public value: `1 < y < modulus` and
    /// `y^order = 1`. For `G2` every unit mod `p^2` has order dividing
    /// `p(p-1)`, so the exponent test reduces to `p` not dividing `y`.
    pub fn accepts(self, gp: &GroupParams, y: &BigUint) -> bool {
        let modulus = self.modulus(gp);
        if *y <= BigUint::one() || y >= modulus {
            return false;
        }
        match self {
            Phase::Product => y.modpow(gp.q(), gp.p()).is_one(),
            Phase::Sum => !(y % gp.p()).is_zero(),
        }
    }
}

/// 1-based slot in a ring of `size` members.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RingPosition {
    index: usize,
    size: usize,
}

impl RingPosition {
    pub fn new(index: usize, size: usize) -> Option<Self> {
        (1..=size).contains(&index).then_some(Self { index, size })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn predecessor_index(&self) -> usize {
        if self.index == 1 {
            self.size
        } else {
            self.index - 1
        }
    }

    pub fn successor_index(&self) -> usize {
        if self.index == self.size {
            1
        } else {
            self.index + 1
        }
    }
}

/// Parties ordered by ascending identifier and closed into a cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ring {
    members: Vec<PartyId>,
}

impl Ring {
    /// Minimum ring size; with two members predecessor and successor
    /// coincide and every blinding factor is 1.
    pub const MIN_SIZE: usize = 3;

    pub fn new(ids: impl IntoIterator<Item = PartyId>) -> Result<Self> {
        let mut members: Vec<PartyId> = ids.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if members.contains(&0) {
            return Err(Error::InvalidArgument("party id 0 is reserved for broadcast".into()));
        }
        if members.len() < Self::MIN_SIZE {
            return Err(Error::TooFewParticipants { found: members.len(), required: Self::MIN_SIZE });
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[PartyId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, party: PartyId) -> bool {
        self.members.binary_search(&party).is_ok()
    }

    pub fn position_of(&self, party: PartyId) -> Option<RingPosition> {
        let idx = self.members.binary_search(&party).ok()?;
        RingPosition::new(idx + 1, self.members.len())
    }

    pub fn member_at(&self, pos: RingPosition) -> PartyId {
        self.members[pos.index() - 1]
    }

    pub fn predecessor(&self, party: PartyId) -> Option<PartyId> {
        let pos = self.position_of(party)?;
        Some(self.members[pos.predecessor_index() - 1])
    }

    pub fn successor(&self, party: PartyId) -> Option<PartyId> {
        let pos = self.position_of(party)?;
        Some(self.members[pos.successor_index() - 1])
    }
}

/// One party's view of a Setup exchange.
///
/// The secret exponent never leaves this struct through any message; the
/// `Debug` impl redacts it together with the derived blinding factor.
#[derive(Clone)]
pub struct SetupState {
    party: PartyId,
    predecessor: PartyId,
    successor: PartyId,
    phase: Phase,
    secret: BigUint,
    public: BigUint,
    pred_public: Option<BigUint>,
    succ_public: Option<BigUint>,
    blinding: Option<BigUint>,
}

impl fmt::Debug for SetupState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SetupState")
            .field("party", &self.party)
            .field("predecessor", &self.predecessor)
            .field("successor", &self.successor)
            .field("phase", &self.phase)
            .field("public", &self.public)
            .field("complete", &self.blinding.is_some())
            .finish_non_exhaustive()
    }
}

impl SetupState {
    pub fn party(&self) -> PartyId {
        self.party
    }

    pub fn predecessor(&self) -> PartyId {
        self.predecessor
    }

    pub fn successor(&self) -> PartyId {
        self.successor
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// `Y_i`, the value sent to both neighbours.
    pub fn public_value(&self) -> &BigUint {
        &self.public
    }

    /// `r_i`. Exposed for inspection in tests and audits; never transmitted.
    pub fn secret_exponent(&self) -> &BigUint {
        &self.secret
    }

    /// `R_i`, once both neighbour values have been received.
    pub fn blinding(&self) -> Option<&BigUint> {
        self.blinding.as_ref()
    }

    pub fn neighbor_publics(&self) -> Option<(&BigUint, &BigUint)> {
        Some((self.pred_public.as_ref()?, self.succ_public.as_ref()?))
    }

    pub fn is_complete(&self) -> bool {
        self.blinding.is_some()
    }

    pub(crate) fn require_blinding(&self) -> Result<&BigUint> {
        self.blinding.as_ref().ok_or(Error::NotSetUp(self.party))
    }
}

/// Draws `r_i` uniformly from `[1, order)` and returns the state with the
/// public value `Y_i` to send to both neighbours. Zero is excluded because it
/// would make `R_i = 1` and expose the input.
pub fn setup_begin(
    gp: &GroupParams,
    ring: &Ring,
    party: PartyId,
    phase: Phase,
    rng: &mut RandomSource,
) -> Result<(SetupState, BigUint)> {
    gp.ensure_valid()?;
    let secret = rng.range(&BigUint::one(), phase.group_order(gp));
    setup_begin_with_secret(gp, ring, party, phase, secret)
}

/// [`setup_begin`] with a caller-chosen exponent in `[0, order)`.
pub fn setup_begin_with_secret(
    gp: &GroupParams,
    ring: &Ring,
    party: PartyId,
    phase: Phase,
    secret: BigUint,
) -> Result<(SetupState, BigUint)> {
    gp.ensure_valid()?;
    if secret >= *phase.group_order(gp) {
        return Err(Error::InvalidArgument("secret exponent exceeds the group order".into()));
    }
    let predecessor = ring
        .predecessor(party)
        .ok_or_else(|| Error::InvalidArgument(format!("party {party} is not a ring member")))?;
    let successor = ring.successor(party).expect("member has a successor");
    let public = mod_exp(phase.generator(gp), &secret, phase.modulus(gp));
    let state = SetupState {
        party,
        predecessor,
        successor,
        phase,
        secret,
        public: public.clone(),
        pred_public: None,
        succ_public: None,
        blinding: None,
    };
    Ok((state, public))
}

/// Checks both neighbour values and derives `R_i = (Y_succ * Y_pred^-1)^{r_i}`.
pub fn setup_complete(
    mut st: SetupState,
    gp: &GroupParams,
    y_pred: &BigUint,
    y_succ: &BigUint,
) -> Result<SetupState> {
    for (from, y) in [(st.predecessor, y_pred), (st.successor, y_succ)] {
        if !st.phase.accepts(gp, y) {
            return Err(Error::SubgroupViolation { party: st.party, from });
        }
    }
    let modulus = st.phase.modulus(gp);
    let ratio = mod_mul(y_succ, &mod_inverse(y_pred, modulus)?, modulus);
    st.blinding = Some(mod_exp(&ratio, &st.secret, modulus));
    st.pred_public = Some(y_pred.clone());
    st.succ_public = Some(y_succ.clone());
    Ok(st)
}

/// Runs Setup for every member of `ring` without a network, handing each
/// member its neighbours' public values directly. States are in ring order.
pub fn setup_ring(gp: &GroupParams, ring: &Ring, phase: Phase, rng: &mut RandomSource) -> Result<Vec<SetupState>> {
    let begun = ring
        .members()
        .iter()
        .map(|&id| setup_begin(gp, ring, id, phase, rng))
        .collect::<Result<Vec<_>>>()?;
    let n = begun.len();
    begun
        .iter()
        .enumerate()
        .map(|(i, (st, _))| {
            let y_pred = &begun[(i + n - 1) % n].1;
            let y_succ = &begun[(i + 1) % n].1;
            setup_complete(st.clone(), gp, y_pred, y_succ)
        })
        .collect()
}
