//! SIB1 size budget, fragmentation, cyclic reassembly, broadcast delay and
//! freshness.

pub mod profiles;

use std::collections::BTreeMap;

use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::Group;
use crate::error::{Error, Result};
use crate::hierarchy::{GroupKeyChain, IdentityVector};
use crate::thresh_sign::ThresholdSignature;

pub use profiles::{scheme_report, ReportRow, SchemeReport, SchemeSizeProfile, SizeRegistry};

pub const SIB1_MAX_BYTES: usize = 372;
pub const DEFAULT_FREE_BYTES: usize = 290;
pub const MIN_PERIOD_MS: u64 = 20;
pub const MAX_PERIOD_MS: u64 = 160;
/// Bytes per identity carried in a SIB1.
pub const SIB_ID_LEN: usize = 8;

/// Base payload plus attached authentication bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sib1Message {
    pub base: Vec<u8>,
    pub attached: Vec<u8>,
}

impl Sib1Message {
    pub fn with_attachment(base: Vec<u8>, attached: Vec<u8>) -> Result<Self> {
        let size = base.len() + attached.len();
        if size > SIB1_MAX_BYTES {
            return Err(Error::OversizeSib1 {
                size,
                limit: SIB1_MAX_BYTES,
            });
        }
        Ok(Self { base, attached })
    }

    pub fn total_len(&self) -> usize {
        self.base.len() + self.attached.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.base.clone();
        out.extend(&self.attached);
        out
    }
}

/// Attaches `sigma || Q_1..Q_k || ID_1..ID_k`. The master key is omitted since
/// receivers hold it already. Identities must be [`SIB_ID_LEN`] bytes.
pub fn build_authenticated_sib1<G: Group>(
    base: &[u8],
    sig: &ThresholdSignature<G>,
    chain: &GroupKeyChain<G>,
    ids: &IdentityVector,
) -> Result<Sib1Message> {
    if chain.level() != ids.level() {
        return Err(Error::MalformedChain(
            "chain and identity vector disagree on level".into(),
        ));
    }
    let mut attached = sig.to_bytes();
    for q in &chain.elements()[1..] {
        attached.extend(G::encode_element(q));
    }
    for id in ids.ids() {
        if id.len() != SIB_ID_LEN {
            return Err(Error::IdentityLength(
                String::from_utf8_lossy(id).into_owned(),
                id.len(),
            ));
        }
        attached.extend(id);
    }
    Sib1Message::with_attachment(base.to_vec(), attached)
}

/// What a receiver extracts from the attachment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedAttachment<G: Group> {
    pub signature: Vec<u8>,
    pub chain: GroupKeyChain<G>,
    pub ids: IdentityVector,
}

/// Inverse of [`build_authenticated_sib1`] given the master key and depth.
pub fn parse_attachment<G: Group>(
    attached: &[u8],
    master_pk: &G::Element,
    levels: usize,
) -> Result<ParsedAttachment<G>> {
    let sig_len = G::ELEMENT_LEN + G::SCALAR_LEN;
    let expected = sig_len + levels * (G::ELEMENT_LEN + SIB_ID_LEN);
    if attached.len() != expected {
        return Err(Error::Decode(format!(
            "attachment is {} bytes, expected {expected}",
            attached.len()
        )));
    }
    let (signature, rest) = attached.split_at(sig_len);
    let (keys, ids) = rest.split_at(levels * G::ELEMENT_LEN);
    let mut elements = vec![*master_pk];
    for chunk in keys.chunks_exact(G::ELEMENT_LEN) {
        elements.push(
            G::decode_element(chunk)
                .ok_or_else(|| Error::Decode("invalid chain element".into()))?,
        );
    }
    Ok(ParsedAttachment {
        signature: signature.to_vec(),
        chain: GroupKeyChain::from_elements(elements)?,
        ids: IdentityVector::new(ids.chunks_exact(SIB_ID_LEN)),
    })
}

/// Best, expected and worst packet counts for one complete reception.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CyclicCounts {
    pub best: u64,
    pub expected: Ratio<u64>,
    pub worst: u64,
}

/// Receiver tunes in at a uniformly random phase of a cyclic broadcast of
/// `fragments` packets and discards everything before fragment 1.
/// `fragments = 0` yields all zeros.
pub fn expected_packets_cyclic(fragments: u64) -> CyclicCounts {
    if fragments == 0 {
        return CyclicCounts {
            best: 0,
            expected: Ratio::from_integer(0),
            worst: 0,
        };
    }
    let f = fragments;
    let total: u64 = f + (2..=f).map(|s| 2 * f + 1 - s).sum::<u64>();
    CyclicCounts {
        best: f,
        expected: Ratio::new(total, f),
        worst: 2 * f - 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReassemblyPolicy {
    /// Discard fragments heard before fragment 1.
    AnchorFirst,
    /// Keep every fragment and sort by sequence number.
    SlidingWindow,
}

/// Packets heard until all fragments are held, when reception starts at
/// fragment `start` (1-based).
pub fn simulate_reassembly(fragments: u64, start: u64, policy: ReassemblyPolicy) -> u64 {
    assert!(
        fragments >= 1 && (1..=fragments).contains(&start),
        "start phase must lie in 1..=fragments"
    );
    let mut have = vec![false; fragments as usize];
    let mut anchored = policy == ReassemblyPolicy::SlidingWindow;
    let mut held = 0;
    let mut heard = 0;
    let mut next = start - 1;
    while held < fragments {
        heard += 1;
        if next == 0 {
            anchored = true;
        }
        if anchored && !have[next as usize] {
            have[next as usize] = true;
            held += 1;
        }
        next = (next + 1) % fragments;
    }
    heard
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloStats {
    pub trials: u64,
    pub mean: f64,
    pub std_err: f64,
}

/// Mean packets heard over uniformly random start phases.
pub fn monte_carlo_reassembly<R: Rng>(
    fragments: u64,
    policy: ReassemblyPolicy,
    trials: u64,
    rng: &mut R,
) -> MonteCarloStats {
    assert!(fragments >= 1 && trials >= 2);
    let (mut sum, mut sum_sq) = (0f64, 0f64);
    for _ in 0..trials {
        let s = rng.gen_range(1..=fragments);
        let x = simulate_reassembly(fragments, s, policy) as f64;
        sum += x;
        sum_sq += x * x;
    }
    let n = trials as f64;
    let mean = sum / n;
    let var = (sum_sq - n * mean * mean) / (n - 1.0);
    MonteCarloStats {
        trials,
        mean,
        std_err: (var.max(0.0) / n).sqrt(),
    }
}

/// `(packets - 1) * period`: gaps between the first and last packet.
pub fn broadcast_delay(packets: u64, period_ms: u64) -> u64 {
    packets.saturating_sub(1) * period_ms
}

/// Fragmentation of `payload` bytes at `free` bytes per SIB1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FragmentPlan {
    pub payload: usize,
    pub free: usize,
    pub fragments: u64,
    pub counts: CyclicCounts,
    /// In-order reception (`best` packets) at the shortest and longest period.
    pub delay_range_ms: (u64, u64),
    /// Anchor-first expected packets at the shortest and longest period.
    pub expected_delay_range_ms: (Ratio<u64>, Ratio<u64>),
    /// Worst case at the longest period.
    pub worst_delay_ms: u64,
}

pub fn fragment_plan(payload: usize, free: usize) -> FragmentPlan {
    assert!(free >= 1, "free bytes per SIB1 must be positive");
    let fragments = if payload <= free {
        0
    } else {
        payload.div_ceil(free) as u64
    };
    plan_for(payload, free, fragments)
}

fn plan_for(payload: usize, free: usize, fragments: u64) -> FragmentPlan {
    let counts = expected_packets_cyclic(fragments);
    FragmentPlan {
        payload,
        free,
        fragments,
        counts,
        delay_range_ms: (
            broadcast_delay(counts.best, MIN_PERIOD_MS),
            broadcast_delay(counts.best, MAX_PERIOD_MS),
        ),
        expected_delay_range_ms: (
            expected_delay(counts.expected, MIN_PERIOD_MS),
            expected_delay(counts.expected, MAX_PERIOD_MS),
        ),
        worst_delay_ms: broadcast_delay(counts.worst, MAX_PERIOD_MS),
    }
}

/// [`broadcast_delay`] for a fractional packet count.
pub fn expected_delay(packets: Ratio<u64>, period_ms: u64) -> Ratio<u64> {
    if packets <= Ratio::from_integer(1) {
        return Ratio::from_integer(0);
    }
    (packets - 1) * period_ms
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Freshness {
    Fresh,
    Expired,
}

/// Fresh iff `0 <= now - timestamp <= window`.
pub fn freshness_check(timestamp_ms: i64, window_ms: u64, now_ms: i64) -> Freshness {
    let delta = now_ms - timestamp_ms;
    if delta >= 0 && delta as u64 <= window_ms {
        Freshness::Fresh
    } else {
        Freshness::Expired
    }
}

/// Window = one SIB1 period plus a per-deployment allowance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreshnessPolicy {
    pub version: u32,
    pub sib_period_ms: u64,
    pub allowances_ms: BTreeMap<String, u64>,
}

impl Default for FreshnessPolicy {
    fn default() -> Self {
        serde_json::from_str(include_str!("../../data/freshness_policy.json"))
            .expect("bundled freshness policy parses")
    }
}

impl FreshnessPolicy {
    /// Falls back to the `default` allowance for unknown keys.
    pub fn window_ms(&self, key: &str) -> u64 {
        let allowance = self
            .allowances_ms
            .get(key)
            .or_else(|| self.allowances_ms.get("default"))
            .copied()
            .unwrap_or(0);
        self.sib_period_ms + allowance
    }
}
