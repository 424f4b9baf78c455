//! Drives whole protocol sessions over a [`Network`].
//!
//! Participants are parties `1..=n`. In the One-Aggregator model the
//! aggregator is party `n + 1` and joins every ring, so it sits between
//! party `n` and party `1`. Every session runs a fresh Setup.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::algebra::{measure_ops, GroupParams, RandomSource};
use crate::error::{Error, Result};
use crate::netsim::{MsgType, Network, Role, Transcript, WireMessage, BROADCAST};
use crate::product::{product_combine, product_encrypt, ProductCiphertext};
use crate::ring::{setup_begin, setup_complete, PartyId, Phase, Ring, SetupState};
use crate::sum::{sum_combine, sum_encrypt, SumCiphertext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    /// An untrusted aggregator (party `n + 1`) alone learns the result.
    Aggregator,
    /// No aggregator; every participant learns the result.
    Peers,
}

impl Model {
    /// Smallest number of regular participants the model supports.
    pub fn min_participants(self) -> usize {
        match self {
            Model::Aggregator => 2,
            Model::Peers => 3,
        }
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aggregator" => Ok(Model::Aggregator),
            "peers" => Ok(Model::Peers),
            other => Err(Error::Parse(format!("unknown model {other:?}"))),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Aggregator => "aggregator",
            Model::Peers => "peers",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    Product,
    Sum,
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "product" => Ok(Protocol::Product),
            "sum" => Ok(Protocol::Sum),
            other => Err(Error::Parse(format!("unknown protocol {other:?}"))),
        }
    }
}

/// Runs `f` as local computation of `party`, charging its modular operations.
fn local<T>(net: &mut Network, party: PartyId, f: impl FnOnce() -> T) -> T {
    let (out, ops) = measure_ops(f);
    net.record_ops(party, ops);
    out
}

/// A group of simulated parties sharing one network and one transcript.
#[derive(Debug, Clone)]
pub struct Simulation {
    gp: GroupParams,
    model: Model,
    n: usize,
    net: Network,
    rngs: BTreeMap<PartyId, RandomSource>,
    next_session: u32,
}

impl Simulation {
    /// Each party gets its own random stream forked from `rng`.
    pub fn new(gp: GroupParams, model: Model, n: usize, rng: &mut RandomSource) -> Result<Self> {
        gp.ensure_valid()?;
        let required = model.min_participants();
        if n < required {
            return Err(Error::TooFewParticipants { found: n, required });
        }
        if n >= (u32::MAX - 1) as usize {
            return Err(Error::InvalidArgument(format!("{n} participants exceed the wire format")));
        }
        let mut nodes: Vec<(PartyId, Role)> = (1..=n as PartyId).map(|id| (id, Role::Participant)).collect();
        if model == Model::Aggregator {
            nodes.push((n as PartyId + 1, Role::Aggregator));
        }
        let rngs = nodes.iter().map(|(id, _)| (*id, rng.fork())).collect();
        Ok(Self { gp, model, n, net: Network::new(nodes), rngs, next_session: 1 })
    }

    pub fn params(&self) -> &GroupParams {
        &self.gp
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn participant_count(&self) -> usize {
        self.n
    }

    pub fn participants(&self) -> impl Iterator<Item = PartyId> {
        1..=self.n as PartyId
    }

    pub fn aggregator(&self) -> Option<PartyId> {
        (self.model == Model::Aggregator).then_some(self.n as PartyId + 1)
    }

    pub fn transcript(&self) -> &Transcript {
        self.net.transcript()
    }

    pub fn into_transcript(self) -> Transcript {
        self.net.into_transcript()
    }

    /// Runs `f` as local work of `party`, charging its operations.
    pub fn local<T>(&mut self, party: PartyId, f: impl FnOnce(&GroupParams) -> T) -> T {
        let gp = &self.gp;
        local(&mut self.net, party, || f(gp))
    }

    fn new_session(&mut self) -> u32 {
        let s = self.next_session;
        self.next_session += 1;
        s
    }

    /// Session ring: the given participants plus the aggregator, if any.
    fn ring_with(&self, members: impl IntoIterator<Item = PartyId>) -> Result<Ring> {
        Ring::new(members.into_iter().chain(self.aggregator()))
    }

    /// Setup exchange: every member sends `Y_i` to both neighbours, then
    /// derives `R_i` from what it received.
    fn setup(&mut self, session: u32, term: u32, ring: &Ring, phase: Phase) -> Result<BTreeMap<PartyId, SetupState>> {
        let mut begun = Vec::with_capacity(ring.len());
        for &id in ring.members() {
            let rng = self.rngs.get_mut(&id).expect("every node has a random stream");
            let gp = &self.gp;
            let (st, y) = local(&mut self.net, id, || setup_begin(gp, ring, id, phase, rng))?;
            for to in [st.predecessor(), st.successor()] {
                self.net.send(WireMessage {
                    msg_type: MsgType::SetupY,
                    session_id: session,
                    term_index: term,
                    sender: id,
                    recipient: to,
                    payload: y.clone(),
                })?;
            }
            begun.push(st);
        }

        let mut states = BTreeMap::new();
        for st in begun {
            let id = st.party();
            let got = self.net.take(id, |m| m.session_id == session && m.msg_type == MsgType::SetupY);
            let from = |who: PartyId| {
                got.iter().find(|m| m.sender == who).map(|m| &m.payload).ok_or(Error::NotSetUp(id))
            };
            let (y_pred, y_succ) = (from(st.predecessor())?, from(st.successor())?);
            let gp = &self.gp;
            let st = local(&mut self.net, id, || setup_complete(st, gp, y_pred, y_succ))?;
            states.insert(id, st);
        }
        Ok(states)
    }

    fn send_ciphertext(&mut self, ty: MsgType, session: u32, term: u32, from: PartyId, value: &BigUint) -> Result<()> {
        self.net.send(WireMessage {
            msg_type: ty,
            session_id: session,
            term_index: term,
            sender: from,
            recipient: self.aggregator().unwrap_or(BROADCAST),
            payload: value.clone(),
        })
    }

    fn received(&mut self, party: PartyId, session: u32, ty: MsgType) -> Vec<WireMessage> {
        self.net.take(party, |m| m.session_id == session && m.msg_type == ty)
    }

    /// Participants-Only: the lowest-indexed participant announces the result
    /// on the channel, and everyone clears the announcement from its inbox.
    fn announce(&mut self, session: u32, term: u32, value: &BigUint) -> Result<()> {
        self.net.send(WireMessage {
            msg_type: MsgType::ResultAnnounce,
            session_id: session,
            term_index: term,
            sender: 1,
            recipient: BROADCAST,
            payload: value.clone(),
        })?;
        for id in 1..=self.n as PartyId {
            self.received(id, session, MsgType::ResultAnnounce);
        }
        Ok(())
    }

    /// One product session over all participants. `inputs[i]` belongs to
    /// party `i + 1`; a party that does not take part supplies 1.
    pub fn run_product(&mut self, term_index: u32, inputs: &[BigUint]) -> Result<BigUint> {
        if inputs.len() != self.n {
            return Err(Error::InvalidArgument(format!("expected {} inputs, got {}", self.n, inputs.len())));
        }
        for (id, x) in (1..).zip(inputs) {
            if x.is_zero() || x >= self.gp.p() {
                return Err(Error::OutOfRange { party: id, reason: "product input must lie in [1, p)".into() });
            }
        }
        let participants: Vec<PartyId> = self.participants().collect();
        let session = self.new_session();
        let ring = self.ring_with(participants.iter().copied())?;
        let states = self.setup(session, term_index, &ring, Phase::Product)?;

        let mut own = BTreeMap::new();
        for (&id, x) in participants.iter().zip(inputs) {
            let gp = &self.gp;
            let ct = local(&mut self.net, id, || product_encrypt(&states[&id], gp, x, term_index))?;
            self.send_ciphertext(MsgType::ProductCiphertext, session, term_index, id, &ct.value)?;
            own.insert(id, ct);
        }

        let to_ct = |m: WireMessage| ProductCiphertext { value: m.payload, sender: m.sender, term_index: m.term_index };
        if let Some(agg) = self.aggregator() {
            let cts: Vec<_> = self.received(agg, session, MsgType::ProductCiphertext).into_iter().map(to_ct).collect();
            let blinding = states[&agg].blinding();
            let gp = &self.gp;
            return local(&mut self.net, agg, || product_combine(gp, &cts, &participants, blinding));
        }

        let mut result: Option<BigUint> = None;
        for &id in &participants {
            let mut cts: Vec<_> = self.received(id, session, MsgType::ProductCiphertext).into_iter().map(to_ct).collect();
            cts.push(own[&id].clone());
            let gp = &self.gp;
            let value = local(&mut self.net, id, || product_combine(gp, &cts, &participants, None))?;
            debug_assert!(result.as_ref().is_none_or(|r| *r == value), "participants disagree");
            result = Some(value);
        }
        let result = result.expect("at least three participants");
        self.announce(session, term_index, &result)?;
        Ok(result)
    }

    /// One sum session among the parties in `contributions` (party to
    /// addend). The sum ring contains only these parties, plus the
    /// aggregator. In the Participants-Only model every participant, member
    /// or not, receives the ciphertexts and learns the sum.
    pub fn run_sum(&mut self, contributions: &BTreeMap<PartyId, BigUint>) -> Result<BigUint> {
        let members: Vec<PartyId> = contributions.keys().copied().collect();
        if let Some(&bad) = members.iter().find(|&&id| id == 0 || id as usize > self.n) {
            return Err(Error::InvalidArgument(format!("party {bad} is not a participant")));
        }
        let required = match self.model {
            Model::Aggregator => 2,
            Model::Peers => 3,
        };
        if members.len() < required {
            return Err(Error::TooFewSumParticipants { found: members.len(), required });
        }
        for (&id, x) in contributions {
            if x >= self.gp.p() {
                return Err(Error::OutOfRange { party: id, reason: "sum input must lie in [0, p)".into() });
            }
        }
        let session = self.new_session();
        let ring = self.ring_with(members.iter().copied())?;
        let states = self.setup(session, 0, &ring, Phase::Sum)?;

        let mut own = BTreeMap::new();
        for (&id, x) in contributions {
            let gp = &self.gp;
            let ct = local(&mut self.net, id, || sum_encrypt(&states[&id], gp, x, session))?;
            self.send_ciphertext(MsgType::SumCiphertext, session, 0, id, &ct.value)?;
            own.insert(id, ct);
        }

        let to_ct = |m: WireMessage| SumCiphertext { value: m.payload, sender: m.sender, session: m.session_id };
        if let Some(agg) = self.aggregator() {
            let cts: Vec<_> = self.received(agg, session, MsgType::SumCiphertext).into_iter().map(to_ct).collect();
            let blinding = states[&agg].blinding();
            let gp = &self.gp;
            return local(&mut self.net, agg, || sum_combine(gp, &cts, &members, blinding));
        }

        let mut result: Option<BigUint> = None;
        for id in 1..=self.n as PartyId {
            let mut cts: Vec<_> = self.received(id, session, MsgType::SumCiphertext).into_iter().map(to_ct).collect();
            cts.extend(own.get(&id).cloned());
            let gp = &self.gp;
            let value = local(&mut self.net, id, || sum_combine(gp, &cts, &members, None))?;
            debug_assert!(result.as_ref().is_none_or(|r| *r == value), "participants disagree");
            result = Some(value);
        }
        let result = result.expect("at least three participants");
        self.announce(session, 0, &result)?;
        Ok(result)
    }

    /// [`Simulation::run_sum`] with every participant contributing;
    /// `inputs[i]` belongs to party `i + 1`.
    pub fn run_sum_all(&mut self, inputs: &[BigUint]) -> Result<BigUint> {
        if inputs.len() != self.n {
            return Err(Error::InvalidArgument(format!("expected {} inputs, got {}", self.n, inputs.len())));
        }
        let contributions = (1..).zip(inputs.iter().cloned()).collect();
        self.run_sum(&contributions)
    }
}

/// Runs one standalone session and returns the result with its transcript.
pub fn run_protocol(
    gp: &GroupParams,
    protocol: Protocol,
    model: Model,
    inputs: &[BigUint],
    rng: &mut RandomSource,
) -> Result<(BigUint, Transcript)> {
    let mut sim = Simulation::new(gp.clone(), model, inputs.len(), rng)?;
    let value = match protocol {
        Protocol::Product => sim.run_product(0, inputs)?,
        Protocol::Sum => sim.run_sum_all(inputs)?,
    };
    Ok((value, sim.into_transcript()))
}
