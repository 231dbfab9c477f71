//! Declarative signature-size profiles and the feasibility report built from
//! them.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{fragment_plan, plan_for, FragmentPlan, SIB1_MAX_BYTES};
use crate::error::{Error, Result};

pub const REGISTRY_VERSION: u32 = 1;

/// Figures published for a profile, kept for side-by-side comparison.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublishedFigures {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crypto_bytes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comm_bytes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packets: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSizeProfile {
    pub name: String,
    pub architecture: String,
    pub signature_bytes: usize,
    pub public_key_bytes: usize,
    pub public_keys_sent: usize,
    pub id_bytes: usize,
    pub cert_levels: usize,
    pub per_cert_overhead: usize,
    /// Certificate signatures collapse into one aggregate.
    pub aggregate: bool,
    #[serde(default, rename = "published", skip_serializing_if = "Option::is_none")]
    pub published: Option<PublishedFigures>,
}

impl SchemeSizeProfile {
    pub fn signature_count(&self) -> usize {
        if self.aggregate {
            1
        } else {
            1 + self.cert_levels
        }
    }

    /// Bytes attached to each authenticated broadcast.
    pub fn crypto_bytes(&self) -> usize {
        self.signature_count() * self.signature_bytes
            + self.public_keys_sent * self.public_key_bytes
            + self.id_bytes
            + self.cert_levels * self.per_cert_overhead
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizeRegistry {
    pub version: u32,
    pub profiles: Vec<SchemeSizeProfile>,
}

impl Default for SizeRegistry {
    fn default() -> Self {
        Self::from_json(include_str!("../../data/size_profiles.json"))
            .expect("bundled registry parses")
    }
}

impl SizeRegistry {
    pub fn from_json(text: &str) -> Result<Self> {
        let reg: Self =
            serde_json::from_str(text).map_err(|e| Error::Decode(format!("registry: {e}")))?;
        if reg.version != REGISTRY_VERSION {
            return Err(Error::Decode(format!(
                "unsupported registry version {}",
                reg.version
            )));
        }
        let mut names = BTreeSet::new();
        for p in &reg.profiles {
            if !names.insert(p.name.as_str()) {
                return Err(Error::Decode(format!("duplicate profile {}", p.name)));
            }
        }
        Ok(reg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, name: &str) -> Option<&SchemeSizeProfile> {
        self.profiles.iter().find(|p| p.name == name)
    }
}

/// One report line. Fractional packet counts are exact (`a/b` or integer).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReportRow {
    pub name: String,
    pub architecture: String,
    pub crypto_bytes: usize,
    pub fits: bool,
    pub fragments: u64,
    /// Fragments times the SIB1 size; `None` when the payload piggybacks.
    pub comm_bytes: Option<usize>,
    pub best_packets: u64,
    pub expected_packets: String,
    pub worst_packets: u64,
    pub delay_min_ms: u64,
    pub delay_max_ms: u64,
    pub expected_delay_min_ms: String,
    pub expected_delay_max_ms: String,
    pub published_crypto_bytes: Option<usize>,
    pub published_comm_bytes: Option<usize>,
    pub published_packets: Option<u64>,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemeReport {
    pub base_bytes: usize,
    pub free_bytes: usize,
    pub rows: Vec<ReportRow>,
}

/// Piggybacks when `base + crypto <= 372`; otherwise splits the crypto bytes
/// into at least one fragment of `free` bytes each.
pub fn plan_for_profile(crypto: usize, base: usize, free: usize) -> (bool, FragmentPlan) {
    let fits = base + crypto <= SIB1_MAX_BYTES;
    if fits {
        return (true, plan_for(crypto, free, 0));
    }
    let plan = fragment_plan(crypto, free);
    let plan = if plan.fragments == 0 {
        plan_for(crypto, free, 1)
    } else {
        plan
    };
    (false, plan)
}

pub fn scheme_report(profiles: &[SchemeSizeProfile], base: usize, free: usize) -> SchemeReport {
    let rows = profiles
        .iter()
        .map(|p| {
            let crypto = p.crypto_bytes();
            let (fits, plan) = plan_for_profile(crypto, base, free);
            let comm = (!fits).then(|| plan.fragments as usize * SIB1_MAX_BYTES);
            let published = p.published.clone().unwrap_or_default();
            let mut flags = Vec::new();
            if let Some(c) = published.crypto_bytes {
                if c != crypto {
                    flags.push(format!("crypto bytes: published {c}, computed {crypto}"));
                }
            }
            if let Some(c) = published.comm_bytes {
                if Some(c) != comm {
                    flags.push(format!(
                        "comm bytes: published {c}, computed {}",
                        comm.map_or("-".into(), |v| v.to_string())
                    ));
                }
            }
            if let Some(k) = published.packets {
                if k != plan.fragments {
                    flags.push(format!(
                        "packets: published {k}, computed {}",
                        plan.fragments
                    ));
                }
            }
            ReportRow {
                name: p.name.clone(),
                architecture: p.architecture.clone(),
                crypto_bytes: crypto,
                fits,
                fragments: plan.fragments,
                comm_bytes: comm,
                best_packets: plan.counts.best,
                expected_packets: plan.counts.expected.to_string(),
                worst_packets: plan.counts.worst,
                delay_min_ms: plan.delay_range_ms.0,
                delay_max_ms: plan.delay_range_ms.1,
                expected_delay_min_ms: plan.expected_delay_range_ms.0.to_string(),
                expected_delay_max_ms: plan.expected_delay_range_ms.1.to_string(),
                published_crypto_bytes: published.crypto_bytes,
                published_comm_bytes: published.comm_bytes,
                published_packets: published.packets,
                flags,
            }
        })
        .collect();
    SchemeReport {
        base_bytes: base,
        free_bytes: free,
        rows,
    }
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or("-".into(), ToString::to_string)
}

const HEADER: [&str; 12] = [
    "scheme",
    "crypto_B",
    "comm_B",
    "fits",
    "fragments",
    "packets_best",
    "packets_expected",
    "packets_worst",
    "delay_ms",
    "expected_delay_ms",
    "published_crypto/comm_B",
    "published_packets",
];

impl ReportRow {
    fn cells(&self) -> [String; 12] {
        [
            self.name.clone(),
            self.crypto_bytes.to_string(),
            opt(&self.comm_bytes),
            if self.fits { "yes" } else { "no" }.into(),
            self.fragments.to_string(),
            self.best_packets.to_string(),
            self.expected_packets.clone(),
            self.worst_packets.to_string(),
            format!("{}-{}", self.delay_min_ms, self.delay_max_ms),
            format!(
                "{}-{}",
                self.expected_delay_min_ms, self.expected_delay_max_ms
            ),
            format!(
                "{}/{}",
                opt(&self.published_crypto_bytes),
                opt(&self.published_comm_bytes)
            ),
            opt(&self.published_packets),
        ]
    }
}

impl SchemeReport {
    pub fn render_text(&self) -> String {
        let rows: Vec<[String; 12]> = self.rows.iter().map(ReportRow::cells).collect();
        let mut widths: Vec<usize> = HEADER.iter().map(|h| h.len()).collect();
        for r in &rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = format!(
            "SIB1 base {} B, free {} B per fragment, cap {} B\n",
            self.base_bytes, self.free_bytes, SIB1_MAX_BYTES
        );
        let line = |cells: Vec<&str>, out: &mut String| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| {
                    if i == 0 {
                        format!("{c:<w$}")
                    } else {
                        format!("{c:>w$}")
                    }
                })
                .collect();
            out.push_str(parts.join("  ").trim_end());
            out.push('\n');
        };
        line(HEADER.to_vec(), &mut out);
        for r in &rows {
            line(r.iter().map(String::as_str).collect(), &mut out);
        }
        for r in &self.rows {
            for f in &r.flags {
                let _ = writeln!(out, "! {}: {}", r.name, f);
            }
        }
        out
    }

    /// Same values as [`Self::render_text`], comma separated.
    pub fn render_csv(&self) -> String {
        let quote = |s: &str| {
            if s.contains([',', '"']) {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.to_string()
            }
        };
        let mut out = HEADER.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.cells().iter().map(|c| quote(c)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}
