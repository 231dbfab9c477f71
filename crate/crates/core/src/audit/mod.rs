//! Hash-chained audit log of broadcast signatures, sealed with a threshold
//! post-quantum signature and replicated to JSON-lines files.

pub mod thpq;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::HashInput;
use crate::error::{Error, Result};
pub use thpq::{InsecureMacThpq, ThpqKeyMaterial, ThpqPartial, ThpqShare, ThresholdPq};

pub const GENESIS_DIGEST: &str = "0000000000000000000000000000000000000000000000000000000000000000";

/// One line of an audit log file. Field order is the on-disk order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub height: u64,
    pub j: u64,
    pub timestamp_ms: u64,
    pub bs_ids: Vec<String>,
    pub sigma_bs: String,
    pub sigma_a: String,
    pub prev: String,
    pub digest: String,
}

impl AuditEntry {
    pub fn compute_digest(&self) -> String {
        let input = self
            .bs_ids
            .iter()
            .fold(
                HashInput::new()
                    .bytes(b"AUDIT-ENTRY")
                    .u64(self.height)
                    .u64(self.j)
                    .u64(self.timestamp_ms)
                    .u64(self.bs_ids.len() as u64),
                |acc, id| acc.bytes(id.as_bytes()),
            )
            .bytes(self.sigma_bs.as_bytes())
            .bytes(self.sigma_a.as_bytes())
            .bytes(self.prev.as_bytes());
        hex::encode(Sha256::digest(input.finish()))
    }
}

/// Inputs to [`AuditLog::append`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntryFields {
    pub j: u64,
    pub timestamp_ms: u64,
    pub bs_ids: Vec<String>,
    pub sigma_bs: Vec<u8>,
    pub sigma_a: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReplicaPolicy {
    /// Every append is written to every replica before returning.
    #[default]
    Synchronous,
    /// Replicas are written every `n` appends and on [`AuditLog::flush`].
    Batched(usize),
}

pub struct AuditLog<P: ThresholdPq> {
    scheme: P,
    public_key: Vec<u8>,
    entries: Vec<AuditEntry>,
    by_j: HashMap<u64, usize>,
    replicas: Vec<PathBuf>,
    policy: ReplicaPolicy,
    flushed: usize,
}

impl<P: ThresholdPq> AuditLog<P> {
    pub fn new(scheme: P, public_key: Vec<u8>) -> Self {
        Self {
            scheme,
            public_key,
            entries: Vec::new(),
            by_j: HashMap::new(),
            replicas: Vec::new(),
            policy: ReplicaPolicy::Synchronous,
            flushed: 0,
        }
    }

    /// Creates (truncating) one file per replica path.
    pub fn with_replicas(mut self, paths: Vec<PathBuf>, policy: ReplicaPolicy) -> Result<Self> {
        for p in &paths {
            File::create(p)?;
        }
        self.replicas = paths;
        self.policy = policy;
        Ok(self)
    }

    pub fn entries(&self) -> &[AuditEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn head_digest(&self) -> &str {
        self.entries
            .last()
            .map(|e| e.digest.as_str())
            .unwrap_or(GENESIS_DIGEST)
    }

    pub fn find_by_j(&self, j: u64) -> Option<&AuditEntry> {
        self.by_j.get(&j).map(|&h| &self.entries[h])
    }

    fn check_seal(&self, sigma_bs: &[u8], sigma_a: &[u8]) -> Result<()> {
        if self.scheme.verify(&self.public_key, sigma_bs, sigma_a) {
            Ok(())
        } else {
            Err(Error::BadAuditSignature)
        }
    }

    pub fn append(&mut self, fields: EntryFields) -> Result<AuditEntry> {
        self.check_seal(&fields.sigma_bs, &fields.sigma_a)?;
        if self.by_j.contains_key(&fields.j) {
            return Err(Error::DuplicateHistoryIndex(fields.j));
        }
        let mut entry = AuditEntry {
            height: self.entries.len() as u64,
            j: fields.j,
            timestamp_ms: fields.timestamp_ms,
            bs_ids: fields.bs_ids,
            sigma_bs: hex::encode(&fields.sigma_bs),
            sigma_a: hex::encode(&fields.sigma_a),
            prev: self.head_digest().to_string(),
            digest: String::new(),
        };
        entry.digest = entry.compute_digest();
        self.commit(entry.clone())?;
        Ok(entry)
    }

    /// Appends a pre-built entry, e.g. when rebuilding from a replica.
    pub fn push_entry(&mut self, entry: AuditEntry) -> Result<()> {
        let height = self.entries.len() as u64;
        if entry.height != height
            || entry.prev != self.head_digest()
            || entry.digest != entry.compute_digest()
        {
            return Err(Error::ChainMismatch { height });
        }
        let decode = |s: &str| hex::decode(s).map_err(|e| Error::Decode(e.to_string()));
        self.check_seal(&decode(&entry.sigma_bs)?, &decode(&entry.sigma_a)?)?;
        if self.by_j.contains_key(&entry.j) {
            return Err(Error::DuplicateHistoryIndex(entry.j));
        }
        self.commit(entry)
    }

    fn commit(&mut self, entry: AuditEntry) -> Result<()> {
        self.by_j.insert(entry.j, self.entries.len());
        self.entries.push(entry);
        let due = match self.policy {
            ReplicaPolicy::Synchronous => true,
            ReplicaPolicy::Batched(n) => self.entries.len() - self.flushed >= n.max(1),
        };
        if due {
            self.flush()?;
        }
        Ok(())
    }

    /// Writes pending entries to every replica.
    pub fn flush(&mut self) -> Result<()> {
        let pending = &self.entries[self.flushed..];
        if pending.is_empty() {
            return Ok(());
        }
        for path in &self.replicas {
            let mut out = BufWriter::new(OpenOptions::new().append(true).open(path)?);
            for e in pending {
                serde_json::to_writer(&mut out, e)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
        self.flushed = self.entries.len();
        Ok(())
    }
}

pub fn read_log(path: &Path) -> Result<Vec<AuditEntry>> {
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

pub fn write_log(path: &Path, entries: &[AuditEntry]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for e in entries {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// First height at which a single replica's own chain breaks.
pub fn verify_chain(entries: &[AuditEntry]) -> Result<()> {
    match integrity_failures(entries).first() {
        Some((h, _)) => Err(Error::ChainMismatch { height: *h }),
        None => Ok(()),
    }
}

fn integrity_failures(entries: &[AuditEntry]) -> Vec<(u64, &'static str)> {
    let mut out = Vec::new();
    let mut prev = GENESIS_DIGEST;
    for (h, e) in entries.iter().enumerate() {
        let h = h as u64;
        if e.height != h {
            out.push((h, "height out of sequence"));
        }
        if e.prev != prev {
            out.push((h, "previous digest does not link"));
        }
        if e.digest != e.compute_digest() {
            out.push((h, "digest does not match contents"));
        }
        prev = &e.digest;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Fork {
    pub height: u64,
    /// Replicas whose digest differs from the most common one.
    pub replicas: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MissingEntries {
    pub replica: usize,
    pub from_height: u64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DuplicateIndex {
    pub replica: usize,
    pub j: u64,
    pub heights: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntegrityFailure {
    pub replica: usize,
    pub height: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ConsistencyReport {
    pub replicas: usize,
    pub height: u64,
    pub forks: Vec<Fork>,
    pub missing: Vec<MissingEntries>,
    pub duplicates: Vec<DuplicateIndex>,
    pub integrity: Vec<IntegrityFailure>,
}

impl ConsistencyReport {
    pub fn is_clean(&self) -> bool {
        self.forks.is_empty()
            && self.missing.is_empty()
            && self.duplicates.is_empty()
            && self.integrity.is_empty()
    }
}

impl fmt::Display for ConsistencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_clean() {
            return write!(
                f,
                "consistent: {} replicas, {} entries",
                self.replicas, self.height
            );
        }
        writeln!(f, "inconsistent: {} replicas", self.replicas)?;
        for x in &self.forks {
            writeln!(
                f,
                "  fork at height {}: replicas {:?}",
                x.height, x.replicas
            )?;
        }
        for x in &self.missing {
            writeln!(
                f,
                "  replica {} missing {} entries from height {}",
                x.replica, x.count, x.from_height
            )?;
        }
        for x in &self.duplicates {
            writeln!(
                f,
                "  replica {} repeats j={} at heights {:?}",
                x.replica, x.j, x.heights
            )?;
        }
        for x in &self.integrity {
            writeln!(
                f,
                "  replica {} height {}: {}",
                x.replica, x.height, x.reason
            )?;
        }
        Ok(())
    }
}

/// Compares replicas height by height and checks each replica's own chain.
pub fn cross_validate(replicas: &[Vec<AuditEntry>]) -> ConsistencyReport {
    let height = replicas.iter().map(Vec::len).max().unwrap_or(0);
    let mut report = ConsistencyReport {
        replicas: replicas.len(),
        height: height as u64,
        ..Default::default()
    };

    for h in 0..height {
        let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
        for (r, log) in replicas.iter().enumerate() {
            if let Some(e) = log.get(h) {
                let slot = counts.entry(e.digest.as_str()).or_insert((0, r));
                slot.0 += 1;
            }
        }
        if counts.len() > 1 {
            // Most common digest wins; ties go to the lowest replica.
            let reference = counts
                .iter()
                .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
                .map(|(d, _)| *d)
                .expect("nonempty");
            let deviating = replicas
                .iter()
                .enumerate()
                .filter(|(_, log)| log.get(h).is_some_and(|e| e.digest != reference))
                .map(|(r, _)| r)
                .collect();
            report.forks.push(Fork {
                height: h as u64,
                replicas: deviating,
            });
        }
    }

    for (r, log) in replicas.iter().enumerate() {
        if log.len() < height {
            report.missing.push(MissingEntries {
                replica: r,
                from_height: log.len() as u64,
                count: (height - log.len()) as u64,
            });
        }
        let mut seen: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
        for (h, e) in log.iter().enumerate() {
            seen.entry(e.j).or_default().push(h as u64);
        }
        for (j, heights) in seen {
            if heights.len() > 1 {
                report.duplicates.push(DuplicateIndex {
                    replica: r,
                    j,
                    heights,
                });
            }
        }
        for (h, reason) in integrity_failures(log) {
            report.integrity.push(IntegrityFailure {
                replica: r,
                height: h,
                reason: reason.to_string(),
            });
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn sealed_log(len: u64) -> (AuditLog<InsecureMacThpq>, ThpqKeyMaterial) {
        let s = InsecureMacThpq;
        let km = s.keygen(2, 3, &mut ChaCha20Rng::seed_from_u64(9)).unwrap();
        let mut log = AuditLog::new(s, km.public_key.clone());
        for j in 1..=len {
            let sigma_bs = j.to_be_bytes().repeat(8);
            let parts: Vec<_> = km.shares[..2]
                .iter()
                .map(|sh| s.sign_share(sh, &sigma_bs))
                .collect();
            log.append(EntryFields {
                j,
                timestamp_ms: j * 20,
                bs_ids: vec!["BS-1".into(), "BS-2".into()],
                sigma_a: s.aggregate(2, &parts).unwrap(),
                sigma_bs,
            })
            .unwrap();
        }
        (log, km)
    }

    #[test]
    fn genesis_and_chain() {
        let (log, _) = sealed_log(100);
        assert_eq!(log.entries()[0].prev, GENESIS_DIGEST);
        verify_chain(log.entries()).unwrap();
        assert_eq!(log.find_by_j(42).unwrap().height, 41);
    }

    #[test]
    fn bad_seal_and_replayed_index() {
        let (mut log, km) = sealed_log(2);
        let fields = EntryFields {
            j: 9,
            timestamp_ms: 0,
            bs_ids: vec![],
            sigma_bs: b"x".to_vec(),
            sigma_a: vec![0; 40],
        };
        assert!(matches!(log.append(fields), Err(Error::BadAuditSignature)));
        let s = InsecureMacThpq;
        let parts: Vec<_> = km.shares.iter().map(|sh| s.sign_share(sh, b"y")).collect();
        let replay = EntryFields {
            j: 2,
            timestamp_ms: 0,
            bs_ids: vec![],
            sigma_bs: b"y".to_vec(),
            sigma_a: s.aggregate(2, &parts).unwrap(),
        };
        assert!(matches!(
            log.append(replay),
            Err(Error::DuplicateHistoryIndex(2))
        ));
    }

    #[test]
    fn push_entry_checks_links() {
        let (log, km) = sealed_log(5);
        let mut copy = AuditLog::new(InsecureMacThpq, km.public_key.clone());
        for e in &log.entries()[..4] {
            copy.push_entry(e.clone()).unwrap();
        }
        let mut bad = log.entries()[4].clone();
        bad.prev = GENESIS_DIGEST.into();
        assert!(matches!(
            copy.push_entry(bad),
            Err(Error::ChainMismatch { height: 4 })
        ));
        copy.push_entry(log.entries()[4].clone()).unwrap();
        assert_eq!(copy.entries(), log.entries());
    }

    #[test]
    fn replicas_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let paths: Vec<_> = (0..3)
            .map(|i| dir.path().join(format!("r{i}.jsonl")))
            .collect();
        let (src, km) = sealed_log(7);
        let mut log = AuditLog::new(InsecureMacThpq, km.public_key)
            .with_replicas(paths.clone(), ReplicaPolicy::Batched(3))
            .unwrap();
        for e in src.entries() {
            log.push_entry(e.clone()).unwrap();
        }
        assert_eq!(read_log(&paths[0]).unwrap().len(), 6);
        log.flush().unwrap();
        let logs: Vec<_> = paths.iter().map(|p| read_log(p).unwrap()).collect();
        assert!(logs.iter().all(|l| l == src.entries()));
        assert!(cross_validate(&logs).is_clean());
    }

    #[test]
    fn detects_fork_truncation_and_duplicates() {
        let (log, _) = sealed_log(10);
        let base = log.entries().to_vec();

        let mut forked = base.clone();
        forked[5].timestamp_ms += 1;
        forked[5].digest = forked[5].compute_digest();
        let r = cross_validate(&[base.clone(), forked, base.clone()]);
        assert_eq!(
            r.forks,
            vec![Fork {
                height: 5,
                replicas: vec![1]
            }]
        );
        assert!(r.integrity.iter().any(|x| x.replica == 1 && x.height == 6));

        let r = cross_validate(&[base.clone(), base[..7].to_vec()]);
        assert_eq!(
            r.missing,
            vec![MissingEntries {
                replica: 1,
                from_height: 7,
                count: 3
            }]
        );

        let mut dup = base.clone();
        dup[3].j = dup[2].j;
        let r = cross_validate(&[dup]);
        assert_eq!(r.duplicates[0].heights, vec![2, 3]);
        assert!(!r.is_clean());
    }
}
