//! Deterministic simulated network.
//!
//! Every message crosses a single channel. Unless it is a secure segment
//! (type `0x05`), it is also appended to the eavesdropper's transcript.
//! Per-party counters track messages, bytes and modular operations.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::{self, Write as _};

use num_bigint::BigUint;

use crate::algebra::OpCounts;
use crate::error::{Error, Result};
use crate::ring::PartyId;

/// Recipient value meaning "every other node".
pub const BROADCAST: PartyId = 0;

/// Fixed header size: tag + five big-endian `u32` fields.
pub const HEADER_LEN: usize = 1 + 4 * 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum MsgType {
    SetupY = 0x01,
    ProductCiphertext = 0x02,
    SumCiphertext = 0x03,
    ResultAnnounce = 0x04,
    SecureSegment = 0x05,
}

impl MsgType {
    pub const ALL: [MsgType; 5] = [
        MsgType::SetupY,
        MsgType::ProductCiphertext,
        MsgType::SumCiphertext,
        MsgType::ResultAnnounce,
        MsgType::SecureSegment,
    ];

    pub fn tag(self) -> u8 {
        self as u8
    }

    /// Secure messages never reach the eavesdropper.
    pub fn is_secure(self) -> bool {
        self == MsgType::SecureSegment
    }
}

impl TryFrom<u8> for MsgType {
    type Error = Error;

    fn try_from(tag: u8) -> Result<Self> {
        MsgType::ALL
            .into_iter()
            .find(|t| t.tag() == tag)
            .ok_or_else(|| Error::Decode(format!("unknown message type 0x{tag:02x}")))
    }
}

/// A message as it travels on the wire.
///
/// Encoding: `type(1) session(4) term(4) sender(4) recipient(4) len(4)
/// payload(len)`, integers big-endian, payload the minimal big-endian
/// magnitude (zero is the empty payload).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireMessage {
    pub msg_type: MsgType,
    pub session_id: u32,
    pub term_index: u32,
    pub sender: PartyId,
    pub recipient: PartyId,
    pub payload: BigUint,
}

fn payload_bytes(v: &BigUint) -> Vec<u8> {
    if v.bits() == 0 {
        Vec::new()
    } else {
        v.to_bytes_be()
    }
}

impl WireMessage {
    pub fn encode(&self) -> Vec<u8> {
        let payload = payload_bytes(&self.payload);
        let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
        out.push(self.msg_type.tag());
        for field in [self.session_id, self.term_index, self.sender, self.recipient] {
            out.extend_from_slice(&field.to_be_bytes());
        }
        out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
        out.extend_from_slice(&payload);
        out
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + (self.payload.bits() as usize).div_ceil(8)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Decode(format!("{} bytes is shorter than the header", bytes.len())));
        }
        let word = |i: usize| u32::from_be_bytes(bytes[1 + 4 * i..5 + 4 * i].try_into().expect("4 bytes"));
        let msg_type = MsgType::try_from(bytes[0])?;
        let len = word(4) as usize;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() != len {
            return Err(Error::Decode(format!("payload length {} but header says {len}", payload.len())));
        }
        if payload.first() == Some(&0) {
            return Err(Error::Decode("payload has a leading zero byte".into()));
        }
        Ok(WireMessage {
            msg_type,
            session_id: word(0),
            term_index: word(1),
            sender: word(2),
            recipient: word(3),
            payload: BigUint::from_bytes_be(payload),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Participant,
    Aggregator,
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct Traffic {
    pub messages: u64,
    pub bytes: u64,
}

impl std::ops::AddAssign for Traffic {
    fn add_assign(&mut self, rhs: Self) {
        self.messages += rhs.messages;
        self.bytes += rhs.bytes;
    }
}

/// Counters for one node.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct PartyStats {
    pub sent: BTreeMap<MsgType, Traffic>,
    pub received: BTreeMap<MsgType, Traffic>,
    pub ops: OpCounts,
}

impl PartyStats {
    pub fn sent_of(&self, t: MsgType) -> Traffic {
        self.sent.get(&t).copied().unwrap_or_default()
    }

    pub fn received_of(&self, t: MsgType) -> Traffic {
        self.received.get(&t).copied().unwrap_or_default()
    }

    pub fn sent_total(&self) -> Traffic {
        let mut t = Traffic::default();
        self.sent.values().for_each(|v| t += *v);
        t
    }

    pub fn received_total(&self) -> Traffic {
        let mut t = Traffic::default();
        self.received.values().for_each(|v| t += *v);
        t
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub timestamp: u64,
    pub message: WireMessage,
}

impl fmt::Display for TranscriptEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.message;
        write!(
            f,
            "ts={} type={:02x} sess={} term={} from={} to={} payload={:x}",
            self.timestamp,
            m.msg_type.tag(),
            m.session_id,
            m.term_index,
            m.sender,
            m.recipient,
            m.payload
        )
    }
}

/// The eavesdropper's view plus every node's counters. Append-only.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
    stats: BTreeMap<PartyId, (Role, PartyStats)>,
}

impl Transcript {
    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn stats(&self, party: PartyId) -> Option<&PartyStats> {
        self.stats.get(&party).map(|(_, s)| s)
    }

    pub fn parties(&self) -> impl Iterator<Item = (PartyId, Role, &PartyStats)> {
        self.stats.iter().map(|(id, (role, s))| (*id, *role, s))
    }

    /// One line per message:
    /// `ts=<int> type=<hex> sess=<int> term=<int> from=<int> to=<int> payload=<hex>`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            writeln!(out, "{e}").expect("write to String");
        }
        out
    }
}

/// A message that matched a forbidden value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub timestamp: u64,
    pub msg_type: MsgType,
    pub sender: PartyId,
    pub value: BigUint,
}

/// Every transcript message whose payload equals one of `forbidden`.
pub fn transcript_scan(t: &Transcript, forbidden: &[BigUint]) -> Vec<Violation> {
    let set: BTreeSet<&BigUint> = forbidden.iter().collect();
    t.entries
        .iter()
        .filter(|e| set.contains(&e.message.payload))
        .map(|e| Violation {
            timestamp: e.timestamp,
            msg_type: e.message.msg_type,
            sender: e.message.sender,
            value: e.message.payload.clone(),
        })
        .collect()
}

/// Per-role totals derived from a transcript's counters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoleSummary {
    pub parties: usize,
    pub sent: BTreeMap<MsgType, Traffic>,
    pub received: BTreeMap<MsgType, Traffic>,
    pub ops: OpCounts,
}

impl RoleSummary {
    pub fn sent_of(&self, t: MsgType) -> Traffic {
        self.sent.get(&t).copied().unwrap_or_default()
    }

    pub fn received_of(&self, t: MsgType) -> Traffic {
        self.received.get(&t).copied().unwrap_or_default()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ComplexityReport {
    pub roles: BTreeMap<Role, RoleSummary>,
    /// Messages handed to the channel.
    pub messages_sent: u64,
    /// Message deliveries; a broadcast counts once per recipient.
    pub deliveries: u64,
    /// Bytes delivered across all recipients.
    pub bytes_delivered: u64,
}

impl ComplexityReport {
    pub fn role(&self, role: Role) -> RoleSummary {
        self.roles.get(&role).cloned().unwrap_or_default()
    }
}

pub fn complexity_report(t: &Transcript) -> ComplexityReport {
    let mut report = ComplexityReport::default();
    for (role, stats) in t.stats.values() {
        let summary = report.roles.entry(*role).or_default();
        summary.parties += 1;
        summary.ops += stats.ops;
        for (ty, tr) in &stats.sent {
            *summary.sent.entry(*ty).or_default() += *tr;
            report.messages_sent += tr.messages;
        }
        for (ty, tr) in &stats.received {
            *summary.received.entry(*ty).or_default() += *tr;
            report.deliveries += tr.messages;
            report.bytes_delivered += tr.bytes;
        }
    }
    report
}

impl fmt::Display for ComplexityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "role,parties,msg_type,sent_msgs,sent_bytes,recv_msgs,recv_bytes")?;
        for (role, s) in &self.roles {
            for ty in MsgType::ALL {
                let (tx, rx) = (s.sent_of(ty), s.received_of(ty));
                if tx.messages + rx.messages == 0 {
                    continue;
                }
                writeln!(
                    f,
                    "{role:?},{},{:02x},{},{},{},{}",
                    s.parties,
                    ty.tag(),
                    tx.messages,
                    tx.bytes,
                    rx.messages,
                    rx.bytes
                )?;
            }
            writeln!(f, "{role:?},{},ops,mul={},exp={},inv={}", s.parties, s.ops.mul, s.ops.exp, s.ops.inv)?;
        }
        write!(
            f,
            "total,messages_sent={},deliveries={},bytes_delivered={}",
            self.messages_sent, self.deliveries, self.bytes_delivered
        )
    }
}

/// The channel. Delivery order is the order of `send` calls, which the
/// protocol drivers issue phase by phase in ascending sender order.
#[derive(Debug, Clone)]
pub struct Network {
    inboxes: BTreeMap<PartyId, VecDeque<WireMessage>>,
    transcript: Transcript,
    clock: u64,
}

impl Network {
    pub fn new(nodes: impl IntoIterator<Item = (PartyId, Role)>) -> Self {
        let mut inboxes = BTreeMap::new();
        let mut transcript = Transcript::default();
        for (id, role) in nodes {
            assert_ne!(id, BROADCAST, "party id 0 is reserved for broadcast");
            inboxes.insert(id, VecDeque::new());
            transcript.stats.insert(id, (role, PartyStats::default()));
        }
        Self { inboxes, transcript, clock: 0 }
    }

    pub fn nodes(&self) -> impl Iterator<Item = PartyId> + '_ {
        self.inboxes.keys().copied()
    }

    pub fn role_of(&self, party: PartyId) -> Option<Role> {
        self.transcript.stats.get(&party).map(|(r, _)| *r)
    }

    /// Delivers `msg` to its recipient (or every other node for
    /// [`BROADCAST`]), records it for the eavesdropper unless secure, and
    /// updates counters.
    pub fn send(&mut self, msg: WireMessage) -> Result<()> {
        if !self.inboxes.contains_key(&msg.sender) {
            return Err(Error::InvalidArgument(format!("unknown sender {}", msg.sender)));
        }
        let recipients: Vec<PartyId> = if msg.recipient == BROADCAST {
            self.inboxes.keys().copied().filter(|&id| id != msg.sender).collect()
        } else if self.inboxes.contains_key(&msg.recipient) {
            vec![msg.recipient]
        } else {
            return Err(Error::UnknownRecipient(msg.recipient));
        };
        let len = msg.encoded_len() as u64;
        let ty = msg.msg_type;

        let sender_stats = &mut self.transcript.stats.get_mut(&msg.sender).expect("registered").1;
        *sender_stats.sent.entry(ty).or_default() += Traffic { messages: 1, bytes: len };
        for r in &recipients {
            let stats = &mut self.transcript.stats.get_mut(r).expect("registered").1;
            *stats.received.entry(ty).or_default() += Traffic { messages: 1, bytes: len };
            self.inboxes.get_mut(r).expect("registered").push_back(msg.clone());
        }

        self.clock += 1;
        if !ty.is_secure() {
            self.transcript.entries.push(TranscriptEntry { timestamp: self.clock, message: msg });
        }
        Ok(())
    }

    /// Removes and returns the messages in `party`'s inbox that satisfy `pred`,
    /// in delivery order.
    pub fn take(&mut self, party: PartyId, mut pred: impl FnMut(&WireMessage) -> bool) -> Vec<WireMessage> {
        let Some(inbox) = self.inboxes.get_mut(&party) else {
            return Vec::new();
        };
        let (hit, keep): (VecDeque<_>, VecDeque<_>) = inbox.drain(..).partition(|m| pred(m));
        *inbox = keep;
        hit.into()
    }

    pub fn pending(&self, party: PartyId) -> usize {
        self.inboxes.get(&party).map_or(0, VecDeque::len)
    }

    /// Attributes locally performed modular operations to `party`.
    pub fn record_ops(&mut self, party: PartyId, ops: OpCounts) {
        if let Some((_, s)) = self.transcript.stats.get_mut(&party) {
            s.ops += ops;
        }
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }
}
