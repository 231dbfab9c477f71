//! Discrete-event simulation of bootstrapping authentication: a core key
//! generator, an AMF, `n` base stations and one UE exchanging keys, shares,
//! broadcasts and forgery proofs over a simulated clock.
//!
//! Crypto costs come from a [`CostModel`] unless [`TimingMode::Measured`] is
//! selected, so transcripts are byte-identical for a fixed seed.

mod engine;

pub use engine::level_identity;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::audit::AuditEntry;
use crate::error::{Error, Result};
use crate::failstop::{ProofFile, Verdict};

/// Modeled durations in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub setup_us: u64,
    pub extract_us: u64,
    pub preprocess_slot_us: u64,
    pub sign_share_us: u64,
    pub aggregate_us: u64,
    pub packet_processing_us: u64,
    pub transmission_us: u64,
    pub verify_us: u64,
    pub pof_us: u64,
    pub pof_verify_us: u64,
    pub audit_seal_us: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            setup_us: 200,
            extract_us: 400,
            preprocess_slot_us: 150,
            sign_share_us: 300,
            aggregate_us: 100,
            packet_processing_us: 40,
            transmission_us: 10,
            verify_us: 1200,
            pof_us: 600,
            pof_verify_us: 900,
            audit_seal_us: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimingMode {
    #[default]
    Modeled,
    /// Library calls are timed on the host; transcripts stop being
    /// reproducible in their time fields.
    Measured,
}

/// What the UE does when no authenticated SIB1 can be produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FallbackPolicy {
    #[default]
    ScanAlternative,
    Abort,
}

impl FallbackPolicy {
    pub fn as_str(&self) -> &'static str {
        match self {
            FallbackPolicy::ScanAlternative => "scan-alternative",
            FallbackPolicy::Abort => "abort",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub t: usize,
    pub n: usize,
    /// Hierarchy depth including the BS level; at least 2.
    pub depth: usize,
    /// Signers per broadcast; `None` means `t`.
    pub beta: Option<usize>,
    /// Preprocessed slots per batch.
    pub preprocess_batch: usize,
    pub base_bytes: usize,
    pub sib_period_ms: u64,
    pub link_latency_ms: u64,
    pub broadcasts: u64,
    pub seed: u64,
    /// Audit threshold `t'`; `None` means `t`.
    pub audit_threshold: Option<usize>,
    pub share_validity_s: u64,
    pub freshness_key: String,
    pub fallback: FallbackPolicy,
    pub timing: TimingMode,
    pub costs: CostModel,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            t: 2,
            n: 3,
            depth: 2,
            beta: None,
            preprocess_batch: 16,
            base_bytes: 79,
            sib_period_ms: 20,
            link_latency_ms: 10,
            broadcasts: 10,
            seed: 1,
            audit_threshold: None,
            share_validity_s: 86_400,
            freshness_key: "default".into(),
            fallback: FallbackPolicy::ScanAlternative,
            timing: TimingMode::Modeled,
            costs: CostModel::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t < 1 || self.t > self.n {
            return Err(Error::InvalidThreshold {
                t: self.t,
                n: self.n,
            });
        }
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.depth < 2 {
            return bad("depth must be at least 2");
        }
        if self.depth > 9 {
            return bad("depth above 9 does not fit 8-byte identities");
        }
        if let Some(b) = self.beta {
            if b < self.t || b > self.n {
                return bad("beta must lie in [t, n]");
            }
        }
        if let Some(a) = self.audit_threshold {
            if a < self.t || a > self.n {
                return bad("audit threshold must lie in [t, n]");
            }
        }
        if self.preprocess_batch == 0 {
            return bad("preprocess batch must be at least 1");
        }
        if self.base_bytes < 16 {
            return bad("base payload must hold at least 16 bytes");
        }
        if !(crate::sib_model::MIN_PERIOD_MS..=crate::sib_model::MAX_PERIOD_MS)
            .contains(&self.sib_period_ms)
        {
            return bad("SIB1 period must lie in [20, 160] ms");
        }
        Ok(())
    }

    pub fn beta(&self) -> usize {
        self.beta.unwrap_or(self.t)
    }

    pub fn audit_threshold(&self) -> usize {
        self.audit_threshold.unwrap_or(self.t)
    }
}

/// Which recorded broadcast the adversary substitutes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TamperSpec {
    pub target_j: u64,
    pub kind: TamperKind,
    /// BS that raises the suspicion; `None` means the slot's leader.
    pub detector: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TamperKind {
    /// `R'` replaced by an unrelated group element.
    ReplaceR,
    /// Nothing is changed; the genuine signature is investigated.
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEvent {
    pub seq: u64,
    pub time_us: u64,
    pub actor: String,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<u64>,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
}

/// Per-broadcast end-to-end delay split. `e2e_us` is the exact sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayBreakdown {
    pub j: u64,
    pub sign_us: u64,
    pub aggregation_link_us: u64,
    pub packet_processing_us: u64,
    pub transmission_us: u64,
    pub verification_us: u64,
    pub e2e_us: u64,
}

impl DelayBreakdown {
    pub fn component_sum(&self) -> u64 {
        self.sign_us
            + self.aggregation_link_us
            + self.packet_processing_us
            + self.transmission_us
            + self.verification_us
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaltReport {
    pub halted: bool,
    pub j: u64,
    pub verdict: Option<Verdict>,
    pub halt_time_us: Option<u64>,
    pub proof: Option<ProofFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub config: ScenarioConfig,
    pub offline: Vec<u32>,
    pub tamper: Option<TamperSpec>,
    pub broadcasts: u64,
    pub verified: u64,
    pub rejected: u64,
    pub unavailable: u64,
    pub refused: u64,
    pub halted: bool,
    pub failure: Option<String>,
    pub audit_entries: u64,
    pub audit_head: String,
    pub breakdowns: Vec<DelayBreakdown>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub events: Vec<TranscriptEvent>,
    pub summary: Summary,
    pub halt: Option<HaltReport>,
    /// The sealed audit log; written separately from the event stream.
    #[serde(skip)]
    pub audit_log: Vec<AuditEntry>,
}

impl Transcript {
    /// One event per line followed by a `{"summary": ...}` line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        #[derive(Serialize)]
        struct Tail<'a> {
            summary: &'a Summary,
            #[serde(skip_serializing_if = "Option::is_none")]
            halt: &'a Option<HaltReport>,
        }
        out.push_str(
            &serde_json::to_string(&Tail {
                summary: &self.summary,
                halt: &self.halt,
            })
            .expect("summary serializes"),
        );
        out.push('\n');
        out
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_jsonl().as_bytes())?;
        Ok(())
    }

    pub fn events_of<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a TranscriptEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }
}

/// Setup, extraction, preprocessing, then `broadcasts` signed SIB1s each
/// verified by the UE.
pub fn run_bootstrap_scenario(config: &ScenarioConfig) -> Result<Transcript> {
    run_unavailability_scenario(config, &[])
}

/// As [`run_bootstrap_scenario`] with the listed base stations offline.
pub fn run_unavailability_scenario(config: &ScenarioConfig, offline: &[u32]) -> Result<Transcript> {
    config.validate()?;
    if offline.iter().any(|&i| i == 0 || i as usize > config.n) {
        return Err(Error::InvalidConfig("offline index outside 1..=n".into()));
    }
    engine::simulate(config, offline, None)
}

/// Runs the bootstrap scenario with one broadcast tampered (or investigated
/// untouched) and the proof-of-forgery workflow that follows.
pub fn run_forgery_scenario(
    config: &ScenarioConfig,
    tamper: &TamperSpec,
) -> Result<(Transcript, HaltReport)> {
    config.validate()?;
    let transcript = engine::simulate(config, &[], Some(*tamper))?;
    let report = transcript.halt.clone().unwrap_or(HaltReport {
        halted: false,
        j: tamper.target_j,
        verdict: None,
        halt_time_us: None,
        proof: None,
    });
    Ok((transcript, report))
}
