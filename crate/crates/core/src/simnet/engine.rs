use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use super::{
    DelayBreakdown, HaltReport, ScenarioConfig, Summary, TamperKind, TamperSpec, TimingMode,
    Transcript, TranscriptEvent,
};
use crate::algebra::{sample_scalar, DefaultGroup, Group};
use crate::audit::{AuditLog, EntryFields, InsecureMacThpq, ThpqKeyMaterial, ThresholdPq};
use crate::error::Result;
use crate::failstop::{
    pof, pof_verify, HistoryRecord, PofOutcome, ProofFile, SignatureHistory, Verdict,
};
use crate::hierarchy::{extract, setup, Extraction, KeyShare, LevelKey};
use crate::sib_model::{
    build_authenticated_sib1, freshness_check, parse_attachment, Freshness, FreshnessPolicy,
};
use crate::thresh_sign::{
    aggregate, context_id, mverify, preprocess_batch, sign_session_share, Bulletin, NonceStore,
    SignatureShare, SigningSession, ThresholdSignature,
};

type G = DefaultGroup;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Actor {
    Ckg,
    Amf,
    Bs(u32),
    Ue,
    Adversary,
}

impl Actor {
    fn name(&self) -> String {
        match self {
            Actor::Ckg => "CKG".into(),
            Actor::Amf => "AMF".into(),
            Actor::Bs(i) => format!("BS-{i}"),
            Actor::Ue => "UE".into(),
            Actor::Adversary => "ADV".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Ev {
    Setup,
    ParentKey { level: usize },
    ReceiveShare(u32),
    Preprocessed(u32),
    SignRequest(u64),
    ShareArrive { j: u64, from: u32 },
    Broadcast(u64),
    UeReceive(u64),
    UeDone(u64),
    Suspect(u64),
    RevealArrive { j: u64, from: u32 },
    PofDone(u64),
    ProofArrive(u64),
    VerdictDone(u64),
    HaltNotice(u32),
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Scheduled {
    time: u64,
    actor: Actor,
    seq: u64,
    ev: Ev,
}

struct Signing {
    request_us: u64,
    message: Vec<u8>,
    session: SigningSession<G>,
    leader: u32,
    shares: Vec<SignatureShare<G>>,
    compute_done_us: u64,
    sign_us: u64,
    link_us: u64,
    sent: Option<ThresholdSignature<G>>,
    sib: Option<Vec<u8>>,
}

struct Investigation {
    spec: TamperSpec,
    detector: u32,
    suspect: ThresholdSignature<G>,
    message: Vec<u8>,
    reveals: BTreeMap<u32, crate::thresh_sign::RawNonces<G>>,
    expected: BTreeSet<u32>,
    outcome: Option<PofOutcome<G>>,
    verdict: Option<Verdict>,
    halt_time_us: Option<u64>,
}

struct World {
    cfg: ScenarioConfig,
    rng: ChaCha20Rng,
    queue: BinaryHeap<Reverse<Scheduled>>,
    seq: u64,
    now: u64,
    events: Vec<TranscriptEvent>,

    master: Option<crate::hierarchy::MasterKey<G>>,
    parent: Option<LevelKey<G>>,
    group: Option<Extraction<G>>,
    shares: BTreeMap<u32, KeyShare<G>>,
    stores: BTreeMap<u32, NonceStore<G>>,
    ready: BTreeSet<u32>,
    next_slot: u64,
    bulletin: Bulletin,
    context: String,
    thpq: Option<ThpqKeyMaterial>,
    audit: Option<AuditLog<InsecureMacThpq>>,
    hist: SignatureHistory<G>,
    freshness: FreshnessPolicy,

    offline: BTreeSet<u32>,
    tamper: Option<TamperSpec>,
    signing: BTreeMap<u64, Signing>,
    in_flight: BTreeMap<(u64, u32), SignatureShare<G>>,
    ue_pending: BTreeMap<u64, (bool, Freshness)>,
    investigation: Option<Investigation>,
    halted: bool,

    verified: u64,
    rejected: u64,
    unavailable: u64,
    refused: u64,
    failure: Option<String>,
    breakdowns: Vec<DelayBreakdown>,
}

fn short_digest(bytes: &[u8]) -> String {
    hex::encode(&Sha256::digest(bytes)[..16])
}

/// Eight-byte identity for `level` in a hierarchy of `depth` levels: the
/// AMF at level 1, the base-station group at `depth`.
pub fn level_identity(level: usize, depth: usize) -> Vec<u8> {
    if level == depth {
        b"BSG-0001".to_vec()
    } else if level == 1 {
        b"AMF-0001".to_vec()
    } else {
        format!("TA{level:02}-001").into_bytes()
    }
}

/// `timestamp_ms || j || filler`, `len` bytes in total.
fn base_payload(len: usize, timestamp_ms: u64, j: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(len);
    out.extend(timestamp_ms.to_be_bytes());
    out.extend(j.to_be_bytes());
    out.extend((16..len).map(|k| (k as u8).wrapping_mul(31)));
    out
}

fn payload_timestamp(m: &[u8]) -> u64 {
    u64::from_be_bytes(m[..8].try_into().expect("payload holds a timestamp"))
}

impl World {
    fn new(cfg: &ScenarioConfig, offline: &[u32], tamper: Option<TamperSpec>) -> Self {
        Self {
            cfg: cfg.clone(),
            rng: ChaCha20Rng::seed_from_u64(cfg.seed),
            queue: BinaryHeap::new(),
            seq: 0,
            now: 0,
            events: Vec::new(),
            master: None,
            parent: None,
            group: None,
            shares: BTreeMap::new(),
            stores: BTreeMap::new(),
            ready: BTreeSet::new(),
            next_slot: 1,
            bulletin: Bulletin::new(),
            context: String::new(),
            thpq: None,
            audit: None,
            hist: SignatureHistory::new(),
            freshness: FreshnessPolicy::default(),
            offline: offline.iter().copied().collect(),
            tamper,
            signing: BTreeMap::new(),
            in_flight: BTreeMap::new(),
            ue_pending: BTreeMap::new(),
            investigation: None,
            halted: false,
            verified: 0,
            rejected: 0,
            unavailable: 0,
            refused: 0,
            failure: None,
            breakdowns: Vec::new(),
        }
    }

    fn link_us(&self) -> u64 {
        self.cfg.link_latency_ms * 1000
    }

    fn schedule(&mut self, delay: u64, actor: Actor, ev: Ev) {
        self.seq += 1;
        self.queue.push(Reverse(Scheduled {
            time: self.now + delay,
            actor,
            seq: self.seq,
            ev,
        }));
    }

    fn log(
        &mut self,
        actor: Actor,
        kind: &str,
        j: Option<u64>,
        detail: String,
        digest: Option<String>,
    ) {
        self.events.push(TranscriptEvent {
            seq: self.events.len() as u64,
            time_us: self.now,
            actor: actor.name(),
            kind: kind.into(),
            j,
            detail,
            digest,
        });
    }

    /// Runs `f`, returning its value and either the modeled cost or the
    /// measured host time.
    fn timed<T>(&self, modeled_us: u64, f: impl FnOnce() -> T) -> (T, u64) {
        match self.cfg.timing {
            TimingMode::Modeled => (f(), modeled_us),
            TimingMode::Measured => {
                let start = Instant::now();
                let out = f();
                (out, start.elapsed().as_micros() as u64)
            }
        }
    }

    fn fail(&mut self, actor: Actor, j: Option<u64>, msg: String) {
        self.log(actor, "scenario-failure", j, msg.clone(), None);
        if self.failure.is_none() {
            self.failure = Some(msg);
        }
    }

    fn run(mut self) -> Result<Transcript> {
        self.schedule(0, Actor::Ckg, Ev::Setup);
        while let Some(Reverse(s)) = self.queue.pop() {
            self.now = s.time;
            self.handle(s.actor, s.ev)?;
        }
        Ok(self.finish())
    }

    fn handle(&mut self, actor: Actor, ev: Ev) -> Result<()> {
        match ev {
            Ev::Setup => self.on_setup(),
            Ev::ParentKey { level } => self.on_parent_key(level),
            Ev::ReceiveShare(i) => self.on_receive_share(i),
            Ev::Preprocessed(i) => self.on_preprocessed(i),
            Ev::SignRequest(j) => self.on_sign_request(j),
            Ev::ShareArrive { j, from } => self.on_share_arrive(j, from),
            Ev::Broadcast(j) => self.on_broadcast(j),
            Ev::UeReceive(j) => self.on_ue_receive(j),
            Ev::UeDone(j) => self.on_ue_done(j),
            Ev::Suspect(j) => self.on_suspect(j),
            Ev::RevealArrive { j, from } => self.on_reveal(j, from),
            Ev::PofDone(j) => self.on_pof_done(j),
            Ev::ProofArrive(j) => self.on_proof_arrive(j),
            Ev::VerdictDone(j) => self.on_verdict(j),
            Ev::HaltNotice(i) => {
                self.log(
                    actor,
                    "halt-notice",
                    None,
                    format!("BS-{i} stops signing"),
                    None,
                );
                Ok(())
            }
        }
    }

    fn on_setup(&mut self) -> Result<()> {
        let ((mk, _), cost) = {
            let rng = &mut self.rng;
            match self.cfg.timing {
                TimingMode::Modeled => (setup::<G, _>(rng), self.cfg.costs.setup_us),
                TimingMode::Measured => {
                    let s = Instant::now();
                    let out = setup::<G, _>(rng);
                    (out, s.elapsed().as_micros() as u64)
                }
            }
        };
        let digest = short_digest(&G::encode_element(&mk.pk));
        self.log(
            Actor::Ckg,
            "setup",
            None,
            "master key generated".into(),
            Some(digest),
        );
        let id = level_identity(1, self.cfg.depth);
        let expiry = self.cfg.share_validity_s;
        let ex = extract(&id, &mk.level_key(), 1, 1, expiry, &mut self.rng)?;
        self.master = Some(mk);
        self.parent = Some(ex.shares[0].clone().into_level_key()?);
        let delay = cost + self.cfg.costs.extract_us + self.link_us();
        self.schedule(delay, Actor::Amf, Ev::ParentKey { level: 1 });
        Ok(())
    }

    fn on_parent_key(&mut self, level: usize) -> Result<()> {
        let depth = self.cfg.depth;
        let parent = self.parent.clone().expect("parent key delivered");
        self.log(
            Actor::Amf,
            "key-received",
            None,
            format!(
                "level {level} key {}",
                String::from_utf8_lossy(&level_identity(level, depth))
            ),
            Some(short_digest(&G::encode_element(parent.chain.last()))),
        );
        let expiry = self.cfg.share_validity_s;
        if level + 1 < depth {
            let id = level_identity(level + 1, depth);
            let ex = extract(&id, &parent, 1, 1, expiry, &mut self.rng)?;
            self.parent = Some(ex.shares[0].clone().into_level_key()?);
            let cost = self.cfg.costs.extract_us;
            self.schedule(cost, Actor::Amf, Ev::ParentKey { level: level + 1 });
            return Ok(());
        }

        let (t, n) = (self.cfg.t, self.cfg.n);
        let id = level_identity(depth, depth);
        let ex = extract(&id, &parent, t, n, expiry, &mut self.rng)?;
        let thpq = InsecureMacThpq.keygen(self.cfg.audit_threshold(), n, &mut self.rng)?;
        self.audit = Some(AuditLog::new(InsecureMacThpq, thpq.public_key.clone()));
        self.thpq = Some(thpq);
        self.context = context_id(&ex.shares[0].ids, &ex.chain);
        self.log(
            Actor::Amf,
            "extract",
            None,
            format!(
                "({t},{n}) shares for BS group, audit t'={}",
                self.cfg.audit_threshold()
            ),
            Some(short_digest(&G::encode_element(ex.chain.last()))),
        );
        let delay = self.cfg.costs.extract_us + self.link_us();
        for i in 1..=n as u32 {
            self.schedule(delay, Actor::Bs(i), Ev::ReceiveShare(i));
        }
        if self.offline.len() == n {
            self.schedule_broadcasts(delay);
        }
        self.group = Some(ex);
        Ok(())
    }

    fn on_receive_share(&mut self, i: u32) -> Result<()> {
        if self.offline.contains(&i) {
            self.log(
                Actor::Bs(i),
                "offline",
                None,
                "share not received".into(),
                None,
            );
            return Ok(());
        }
        let share = self.group.as_ref().expect("group extracted").shares[i as usize - 1].clone();
        self.log(
            Actor::Bs(i),
            "share-received",
            None,
            format!("index {i}"),
            Some(short_digest(&G::encode_element(&share.pk_share))),
        );
        let batch = self.cfg.preprocess_batch;
        let (store, list) = preprocess_batch(&share, 1, batch, &mut self.rng)?;
        self.bulletin.publish(&self.context, &list);
        self.stores.insert(i, store);
        self.shares.insert(i, share);
        let cost = self.cfg.costs.preprocess_slot_us * batch as u64;
        self.schedule(cost, Actor::Bs(i), Ev::Preprocessed(i));
        Ok(())
    }

    fn on_preprocessed(&mut self, i: u32) -> Result<()> {
        self.log(
            Actor::Bs(i),
            "preprocess",
            None,
            format!("{} commitments published", self.cfg.preprocess_batch),
            None,
        );
        self.ready.insert(i);
        if self.ready.len() + self.offline.len() == self.cfg.n {
            self.next_slot = 1 + self.cfg.preprocess_batch as u64;
            self.schedule_broadcasts(0);
        }
        Ok(())
    }

    /// First broadcast on the next period boundary after `now + delay`.
    fn schedule_broadcasts(&mut self, delay: u64) {
        let period = self.cfg.sib_period_ms * 1000;
        let start = ((self.now + delay) / period + 1) * period;
        for j in 1..=self.cfg.broadcasts {
            let at = start + (j - 1) * period - self.now;
            self.schedule(at, Actor::Amf, Ev::SignRequest(j));
        }
        if let Some(spec) = self.tamper {
            if spec.target_j == 0 || spec.target_j > self.cfg.broadcasts {
                let after = start + self.cfg.broadcasts * period - self.now;
                let detector = spec.detector.unwrap_or(1);
                self.schedule(after, Actor::Bs(detector), Ev::Suspect(spec.target_j));
            }
        }
    }

    fn on_sign_request(&mut self, j: u64) -> Result<()> {
        if self.halted {
            self.refused += 1;
            self.log(
                Actor::Amf,
                "sign-refused",
                Some(j),
                "system halted".into(),
                None,
            );
            return Ok(());
        }
        let online: Vec<u32> = self.ready.iter().copied().collect();
        if online.len() < self.cfg.t {
            self.unavailable += 1;
            self.log(
                Actor::Ue,
                "authentication-unavailable",
                Some(j),
                format!(
                    "{} of {} signers online, need {}",
                    online.len(),
                    self.cfg.n,
                    self.cfg.t
                ),
                None,
            );
            let policy = self.cfg.fallback.as_str().to_string();
            self.log(Actor::Ue, "fallback", Some(j), policy, None);
            return Ok(());
        }
        let beta = self.cfg.beta().min(online.len());
        let set: Vec<u32> = online[..beta].to_vec();
        let leader = set[0];
        let timestamp_ms = self.now / 1000;
        if timestamp_ms / 1000 > self.shares[&leader].expiry {
            self.refused += 1;
            self.log(
                Actor::Bs(leader),
                "sign-refused",
                Some(j),
                "share expired".into(),
                None,
            );
            return Ok(());
        }

        let mut replenish_us = 0;
        if set.iter().any(|i| self.stores[i].is_consumed(j).is_none()) {
            let first = self.next_slot;
            let batch = self.cfg.preprocess_batch;
            for i in online.clone() {
                let (store, list) =
                    preprocess_batch(&self.shares[&i], first, batch, &mut self.rng)?;
                self.bulletin.publish(&self.context, &list);
                self.stores.get_mut(&i).expect("ready").extend(store)?;
            }
            self.next_slot += batch as u64;
            replenish_us = self.cfg.costs.preprocess_slot_us * batch as u64;
            self.log(
                Actor::Bs(leader),
                "preprocess",
                Some(j),
                format!("replenished slots {first}..{}", self.next_slot - 1),
                None,
            );
        }

        let message = base_payload(self.cfg.base_bytes, timestamp_ms, j);
        let lists = self.bulletin.fetch_all::<G>(&self.context)?;
        let chain_last = *self.group.as_ref().expect("group").chain.last();
        let session = SigningSession::new(&message, j, &set, &lists, self.cfg.t, &chain_last)?;

        let mut costs = Vec::new();
        let mut shares = Vec::new();
        for &i in &set {
            let share = self.shares[&i].clone();
            let mut store = self.stores.remove(&i).expect("ready");
            let (res, cost) = self.timed(self.cfg.costs.sign_share_us, || {
                sign_session_share(&session, &share, &mut store)
            });
            self.stores.insert(i, store);
            shares.push(res?);
            costs.push((i, cost));
        }
        let max_cost = costs.iter().map(|(_, c)| *c).max().unwrap_or(0);
        for &(i, cost) in &costs {
            let link = if i == leader { 0 } else { self.link_us() };
            self.schedule(
                replenish_us + cost + link,
                Actor::Bs(leader),
                Ev::ShareArrive { j, from: i },
            );
        }
        self.log(
            Actor::Bs(leader),
            "sign-start",
            Some(j),
            format!("signers {set:?}"),
            Some(short_digest(&message)),
        );
        self.signing.insert(
            j,
            Signing {
                request_us: self.now,
                message,
                session,
                leader,
                shares: Vec::new(),
                compute_done_us: self.now + replenish_us + max_cost,
                sign_us: replenish_us + max_cost,
                link_us: 0,
                sent: None,
                sib: None,
            },
        );
        for s in shares {
            self.in_flight.insert((j, s.index), s);
        }
        Ok(())
    }

    fn on_share_arrive(&mut self, j: u64, from: u32) -> Result<()> {
        let share = self.in_flight.remove(&(j, from)).expect("share in flight");
        let sg = self.signing.get_mut(&j).expect("signing started");
        sg.shares.push(share);
        let leader = sg.leader;
        let complete = sg.shares.len() == sg.session.signer_set.len();
        self.log(
            Actor::Bs(leader),
            "share-received",
            Some(j),
            format!("from BS-{from}"),
            Some(short_digest(&share.z.to_bytes())),
        );
        if !complete {
            return Ok(());
        }
        let pks: BTreeMap<u32, _> = self
            .group
            .as_ref()
            .expect("group")
            .indexed_pks()
            .into_iter()
            .collect();
        let sg = self.signing.get(&j).expect("signing started");
        let (res, agg_cost) = self.timed(self.cfg.costs.aggregate_us, || {
            aggregate(&sg.session, &sg.shares, &pks)
        });
        let link_us = self.now - sg.compute_done_us;
        match res {
            Ok(sig) => {
                let sg = self.signing.get_mut(&j).expect("signing started");
                sg.sign_us += agg_cost;
                sg.link_us = link_us;
                sg.sent = Some(sig);
                self.schedule(agg_cost, Actor::Bs(leader), Ev::Broadcast(j));
            }
            Err(e) => self.fail(Actor::Bs(leader), Some(j), e.to_string()),
        }
        Ok(())
    }

    fn on_broadcast(&mut self, j: u64) -> Result<()> {
        let group = self.group.as_ref().expect("group");
        let (chain, ids) = (group.chain.clone(), group.shares[0].ids.clone());
        let sg = self.signing.get(&j).expect("signing started");
        let leader = sg.leader;
        let genuine = sg.sent.clone().expect("aggregated");
        let message = sg.message.clone();
        self.hist.append(HistoryRecord {
            message: message.clone(),
            signature: genuine.clone(),
            timestamp_ms: payload_timestamp(&message),
        })?;
        self.seal_audit(j, &genuine, leader)?;

        let mut sent = genuine.clone();
        let tamper = self.tamper.filter(|t| t.target_j == j);
        if let Some(spec) = tamper {
            if spec.kind == TamperKind::ReplaceR {
                sent.r = G::exp_generator(&sample_scalar::<G, _>(&mut self.rng));
                self.log(
                    Actor::Adversary,
                    "tamper",
                    Some(j),
                    "R replaced in broadcast signature".into(),
                    Some(short_digest(&sent.to_bytes())),
                );
            }
        }
        match build_authenticated_sib1(&message, &sent, &chain, &ids) {
            Ok(sib) => {
                let bytes = sib.to_bytes();
                self.log(
                    Actor::Bs(leader),
                    "broadcast",
                    Some(j),
                    format!("SIB1 {} bytes", bytes.len()),
                    Some(short_digest(&bytes)),
                );
                let sg = self.signing.get_mut(&j).expect("signing started");
                sg.sib = Some(sib.attached.clone());
                sg.sent = Some(sent.clone());
                let tx = self.cfg.costs.transmission_us;
                self.schedule(tx, Actor::Ue, Ev::UeReceive(j));
                if let Some(spec) = tamper {
                    let detector = spec.detector.unwrap_or(leader);
                    let delay = tx + self.cfg.costs.packet_processing_us;
                    self.investigation = Some(Investigation {
                        spec,
                        detector,
                        suspect: sent,
                        message,
                        reveals: BTreeMap::new(),
                        expected: BTreeSet::new(),
                        outcome: None,
                        verdict: None,
                        halt_time_us: None,
                    });
                    self.schedule(delay, Actor::Bs(detector), Ev::Suspect(j));
                }
            }
            Err(e) => self.fail(Actor::Bs(leader), Some(j), e.to_string()),
        }
        Ok(())
    }

    fn seal_audit(&mut self, j: u64, sig: &ThresholdSignature<G>, leader: u32) -> Result<()> {
        let km = self.thpq.as_ref().expect("audit keys");
        let tp = self.cfg.audit_threshold();
        let sealers: Vec<u32> = self.ready.iter().copied().take(tp).collect();
        if sealers.len() < tp {
            self.log(
                Actor::Bs(leader),
                "audit-skipped",
                Some(j),
                "too few sealers online".into(),
                None,
            );
            return Ok(());
        }
        let sigma_bs = sig.to_bytes();
        let partials: Vec<_> = sealers
            .iter()
            .map(|&i| InsecureMacThpq.sign_share(&km.shares[i as usize - 1], &sigma_bs))
            .collect();
        let sigma_a = InsecureMacThpq.aggregate(tp, &partials)?;
        let entry = self
            .audit
            .as_mut()
            .expect("audit log")
            .append(EntryFields {
                j,
                timestamp_ms: self.now / 1000,
                bs_ids: sig.signer_set.iter().map(|i| format!("BS-{i}")).collect(),
                sigma_bs,
                sigma_a,
            })?;
        self.log(
            Actor::Bs(leader),
            "audit-append",
            Some(j),
            format!("height {}", entry.height),
            Some(entry.digest[..32].to_string()),
        );
        Ok(())
    }

    fn on_ue_receive(&mut self, j: u64) -> Result<()> {
        let sg = self.signing.get(&j).expect("signing started");
        let attached = sg.sib.clone().expect("broadcast");
        let message = sg.message.clone();
        let master = self.master.as_ref().expect("master").pk;
        let depth = self.cfg.depth;
        let (parsed, pp) = self.timed(self.cfg.costs.packet_processing_us, || {
            parse_attachment::<G>(&attached, &master, depth)
        });
        let parsed = parsed?;
        let (accepted, verify_cost) = self.timed(self.cfg.costs.verify_us, || {
            ThresholdSignature::<G>::from_bytes(&parsed.signature, j, Vec::new())
                .and_then(|sig| mverify(&message, &parsed.ids, &parsed.chain, &sig))
                .unwrap_or(false)
        });
        self.log(
            Actor::Ue,
            "ue-receive",
            Some(j),
            format!("{} attached bytes", attached.len()),
            None,
        );
        let done = self.now + pp + verify_cost;
        let window = self.freshness.window_ms(&self.cfg.freshness_key);
        let fresh = freshness_check(
            payload_timestamp(&message) as i64,
            window,
            (done / 1000) as i64,
        );
        self.ue_pending.insert(j, (accepted, fresh));
        let sg = self.signing.get_mut(&j).expect("signing started");
        self.breakdowns.push(DelayBreakdown {
            j,
            sign_us: sg.sign_us,
            aggregation_link_us: sg.link_us,
            packet_processing_us: pp,
            transmission_us: self.now - (sg.request_us + sg.sign_us + sg.link_us),
            verification_us: verify_cost,
            e2e_us: done - sg.request_us,
        });
        self.schedule(pp + verify_cost, Actor::Ue, Ev::UeDone(j));
        Ok(())
    }

    fn on_ue_done(&mut self, j: u64) -> Result<()> {
        let (accepted, fresh) = self.ue_pending.remove(&j).expect("pending verification");
        let ok = accepted && fresh == Freshness::Fresh;
        if ok {
            self.verified += 1;
        } else {
            self.rejected += 1;
        }
        let detail = format!(
            "{} ({})",
            if ok { "accepted" } else { "rejected" },
            if fresh == Freshness::Fresh {
                "fresh"
            } else {
                "expired"
            }
        );
        self.log(Actor::Ue, "ue-verify", Some(j), detail, None);
        Ok(())
    }

    fn on_suspect(&mut self, j: u64) -> Result<()> {
        if self.investigation.is_none() {
            // Suspicion about a slot that was never broadcast.
            let spec = self.tamper.expect("tamper spec");
            let detector = spec.detector.unwrap_or(1);
            let fake = ThresholdSignature::<G> {
                r: G::exp_generator(&sample_scalar::<G, _>(&mut self.rng)),
                z: sample_scalar::<G, _>(&mut self.rng),
                j,
                signer_set: Vec::new(),
            };
            self.investigation = Some(Investigation {
                spec,
                detector,
                suspect: fake,
                message: base_payload(self.cfg.base_bytes, self.now / 1000, j),
                reveals: BTreeMap::new(),
                expected: BTreeSet::new(),
                outcome: None,
                verdict: None,
                halt_time_us: None,
            });
        }
        let inv = self.investigation.as_ref().expect("investigation");
        let detector = inv.detector;
        self.log(
            Actor::Bs(detector),
            "suspect",
            Some(j),
            "requesting nonce reveals".into(),
            None,
        );
        let Some(record) = self.hist.get(j) else {
            let err = crate::Error::UnknownMessageIndex(j);
            self.fail(Actor::Bs(detector), Some(j), err.to_string());
            return Ok(());
        };
        let signers = record.signature.signer_set.clone();
        self.investigation.as_mut().expect("investigation").expected =
            signers.iter().copied().collect();
        for i in signers {
            let delay = if i == detector { 0 } else { 2 * self.link_us() };
            self.schedule(delay, Actor::Bs(detector), Ev::RevealArrive { j, from: i });
        }
        Ok(())
    }

    fn on_reveal(&mut self, j: u64, from: u32) -> Result<()> {
        let raw = self.stores[&from].reveal(j).expect("slot was preprocessed");
        let inv = self.investigation.as_mut().expect("investigation");
        inv.reveals.insert(from, raw);
        let detector = inv.detector;
        let complete = inv.reveals.len() == inv.expected.len();
        self.log(
            Actor::Bs(detector),
            "nonce-reveal",
            Some(j),
            format!("from BS-{from}"),
            None,
        );
        if complete {
            let cost = self.cfg.costs.pof_us;
            self.schedule(cost, Actor::Bs(detector), Ev::PofDone(j));
        }
        Ok(())
    }

    fn on_pof_done(&mut self, j: u64) -> Result<()> {
        let ids = self.group.as_ref().expect("group").shares[0].ids.clone();
        let inv = self.investigation.as_ref().expect("investigation");
        let detector = inv.detector;
        match pof(&inv.suspect, &inv.message, &self.hist, &ids, &inv.reveals) {
            Ok(outcome) => {
                let is_proof = matches!(outcome, PofOutcome::Proof(_));
                let detail = if is_proof {
                    "forgery-proof"
                } else {
                    "not-a-forgery"
                };
                self.log(Actor::Bs(detector), "pof", Some(j), detail.into(), None);
                self.investigation.as_mut().expect("investigation").outcome = Some(outcome);
                if is_proof {
                    let link = self.link_us();
                    self.schedule(link, Actor::Amf, Ev::ProofArrive(j));
                }
            }
            Err(e) => self.fail(Actor::Bs(detector), Some(j), e.to_string()),
        }
        Ok(())
    }

    fn on_proof_arrive(&mut self, j: u64) -> Result<()> {
        self.log(Actor::Amf, "proof-received", Some(j), String::new(), None);
        let cost = self.cfg.costs.pof_verify_us;
        self.schedule(cost, Actor::Amf, Ev::VerdictDone(j));
        Ok(())
    }

    fn on_verdict(&mut self, j: u64) -> Result<()> {
        let group = self.group.as_ref().expect("group");
        let parent = self.parent.as_ref().expect("parent");
        let pks: BTreeMap<u32, _> = group.indexed_pks().into_iter().collect();
        let inv = self.investigation.as_ref().expect("investigation");
        let verdict = pof_verify(
            &group.level_secret.alpha,
            &parent.sk,
            &group.shares[0].ids,
            &group.chain,
            &pks,
            &inv.message,
            &inv.suspect,
            inv.outcome.as_ref().expect("pof ran"),
        );
        let verdict = match verdict {
            Ok(v) => v,
            Err(e) => {
                self.fail(Actor::Amf, Some(j), e.to_string());
                return Ok(());
            }
        };
        self.log(Actor::Amf, "pof-verify", Some(j), verdict.to_string(), None);
        let inv = self.investigation.as_mut().expect("investigation");
        inv.verdict = Some(verdict);
        if verdict.is_confirmed() {
            inv.halt_time_us = Some(self.now);
            self.halted = true;
            self.log(
                Actor::Amf,
                "halt",
                Some(j),
                "forgery confirmed, signing halted".into(),
                None,
            );
            let link = self.link_us();
            for i in 1..=self.cfg.n as u32 {
                self.schedule(link, Actor::Bs(i), Ev::HaltNotice(i));
            }
        }
        Ok(())
    }

    fn finish(self) -> Transcript {
        let halt = self.investigation.as_ref().map(|inv| HaltReport {
            halted: inv.halt_time_us.is_some(),
            j: inv.spec.target_j,
            verdict: inv.verdict,
            halt_time_us: inv.halt_time_us,
            proof: match &inv.outcome {
                Some(PofOutcome::Proof(p)) => Some(ProofFile::from_proof(p)),
                _ => None,
            },
        });
        let (entries, head, audit_log) = self
            .audit
            .as_ref()
            .map(|a| {
                (
                    a.len() as u64,
                    a.head_digest().to_string(),
                    a.entries().to_vec(),
                )
            })
            .unwrap_or((0, crate::audit::GENESIS_DIGEST.to_string(), Vec::new()));
        let mut breakdowns = self.breakdowns;
        breakdowns.sort_by_key(|b| b.j);
        Transcript {
            events: self.events,
            summary: Summary {
                config: self.cfg,
                offline: self.offline.into_iter().collect(),
                tamper: self.tamper,
                broadcasts: breakdowns.len() as u64,
                verified: self.verified,
                rejected: self.rejected,
                unavailable: self.unavailable,
                refused: self.refused,
                halted: self.halted,
                failure: self.failure,
                audit_entries: entries,
                audit_head: head,
                breakdowns,
            },
            halt,
            audit_log,
        }
    }
}

pub(super) fn simulate(
    cfg: &ScenarioConfig,
    offline: &[u32],
    tamper: Option<TamperSpec>,
) -> Result<Transcript> {
    World::new(cfg, offline, tamper).run()
}
