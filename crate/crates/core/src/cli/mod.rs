//! `sibauth` command line.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 2 | usage error or invalid parameters |
//! | 3 | I/O failure |
//! | 4 | signer set below threshold |
//! | 5 | verification, detection or self-check failure |
//! | 6 | malformed input data |
//!
//! Every subcommand accepts `--json`, which prints the same values as the
//! text output as one JSON document.

pub mod bench;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::algebra::{element_to_hex, DefaultGroup};
use crate::audit::{cross_validate, read_log, write_log, ConsistencyReport};
use crate::error::{Error, Result};
use crate::failstop::ProofFile;
use crate::hierarchy::keyfile::{read_json, write_json, ChildRecord, LevelKeyFile, ShareFile};
use crate::hierarchy::{extract, setup, KeyShare};
use crate::sib_model::profiles::{scheme_report, SchemeReport, SizeRegistry};
use crate::sib_model::DEFAULT_FREE_BYTES;
use crate::simnet::{
    level_identity, run_forgery_scenario, run_unavailability_scenario, ScenarioConfig, Summary,
    TamperKind, TamperSpec, TimingMode,
};
use crate::thresh_sign::{
    aggregate, mverify, preprocess_batch, sign_session_share, SignatureFile, SigningSession,
};

use bench::{bench_rows, BenchRow};

type G = DefaultGroup;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_THRESHOLD: i32 = 4;
pub const EXIT_VERIFY: i32 = 5;
pub const EXIT_DATA: i32 = 6;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidThreshold { .. } | Error::InvalidConfig(_) => EXIT_USAGE,
        Error::Io(_) => EXIT_IO,
        Error::BelowThreshold { .. } | Error::InsufficientShares { .. } => EXIT_THRESHOLD,
        Error::ShareVerificationFailed(_)
        | Error::BadAuditSignature
        | Error::ChainMismatch { .. }
        | Error::Halted => EXIT_VERIFY,
        _ => EXIT_DATA,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "sibauth",
    version,
    about = "Threshold-signed SIB1 broadcast authentication"
)]
pub struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// RNG seed; runs with the same seed produce identical output.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate master, intermediate and base-station share key files.
    Keygen(KeygenArgs),
    /// Threshold-sign a message with the listed share files.
    Sign(SignArgs),
    /// Verify a signature file against the master key.
    Verify(VerifyArgs),
    /// SIB1 size-budget and fragmentation report.
    FragAnalysis(FragArgs),
    /// Simulate a tampered broadcast and the proof-of-forgery workflow.
    ForgeryDemo(ForgeryArgs),
    /// Cross-validate audit log replicas.
    AuditVerify(AuditArgs),
    /// Measure sign and verify timings on this host.
    Bench(BenchArgs),
    /// Run a bootstrapping simulation and write its transcript.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct KeygenArgs {
    #[arg(long)]
    pub t: usize,
    #[arg(long)]
    pub n: usize,
    /// Levels including the base-station group.
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Share validity in seconds from time zero.
    #[arg(long, default_value_t = 86_400)]
    pub validity: u64,
}

#[derive(Debug, Args)]
pub struct SignArgs {
    /// Directory written by `keygen`.
    #[arg(long)]
    pub keys: PathBuf,
    /// File holding the message bytes.
    #[arg(long)]
    pub message: PathBuf,
    /// Comma-separated share indices.
    #[arg(long, value_delimiter = ',', required = true)]
    pub signers: Vec<u32>,
    /// Message index `j`.
    #[arg(long, default_value_t = 1)]
    pub slot: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Directory holding `master.json`.
    #[arg(long)]
    pub keys: PathBuf,
    /// File holding the message bytes.
    #[arg(long)]
    pub message: PathBuf,
    #[arg(long)]
    pub signature: PathBuf,
}

#[derive(Debug, Args)]
pub struct FragArgs {
    /// Size-profile registry; the built-in one when omitted.
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Restrict to these profiles.
    #[arg(long)]
    pub profile: Vec<String>,
    /// Unauthenticated SIB1 size in bytes.
    #[arg(long, default_value_t = 79)]
    pub base: usize,
    /// Payload bytes per fragment.
    #[arg(long, default_value_t = DEFAULT_FREE_BYTES)]
    pub free: usize,
    /// Emit CSV instead of the aligned table.
    #[arg(long)]
    pub csv: bool,
    /// Check the reference figures and fail on any mismatch.
    #[arg(long = "check-paper")]
    pub check_reference: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TamperArg {
    /// Replace the commitment `R` of the target broadcast.
    R,
    /// Investigate the genuine signature.
    None,
}

#[derive(Debug, Args)]
pub struct ForgeryArgs {
    #[arg(long, value_enum, ignore_case = true, default_value_t = TamperArg::R)]
    pub tamper: TamperArg,
    #[arg(long, default_value_t = 2)]
    pub t: usize,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub broadcasts: u64,
    /// Broadcast index to tamper with.
    #[arg(long, default_value_t = 2)]
    pub target: u64,
    /// Base station that raises the suspicion.
    #[arg(long)]
    pub detector: Option<u32>,
    #[arg(long)]
    pub proof_out: Option<PathBuf>,
    #[arg(long)]
    pub transcript: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// JSON-lines audit logs, one per replica.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 2)]
    pub t: usize,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub iterations: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario configuration JSON; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub beta: Option<usize>,
    #[arg(long)]
    pub broadcasts: Option<u64>,
    /// Comma-separated offline base stations.
    #[arg(long, value_delimiter = ',')]
    pub offline: Vec<u32>,
    #[arg(long, value_enum, ignore_case = true)]
    pub tamper: Option<TamperArg>,
    #[arg(long, default_value_t = 1)]
    pub target: u64,
    #[arg(long)]
    pub detector: Option<u32>,
    /// Time library calls on the host instead of using the cost model.
    #[arg(long)]
    pub measured: bool,
    /// Transcript output (JSON lines).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the audit log replicas into this directory.
    #[arg(long)]
    pub audit_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub replicas: usize,
}

/// Text and JSON renderings of one command's result.
struct Output {
    code: i32,
    text: String,
    json: serde_json::Value,
}

impl Output {
    fn new<T: Serialize>(code: i32, text: String, value: &T) -> Self {
        Self {
            code,
            text,
            json: serde_json::to_value(value).expect("report serializes"),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let json = cli.json;
    match execute(cli) {
        Ok(o) => {
            let _ = if json {
                writeln!(
                    out,
                    "{}",
                    serde_json::to_string_pretty(&o.json).expect("json")
                )
            } else {
                write!(out, "{}", o.text)
            };
            o.code
        }
        Err(e) => {
            let code = exit_code(&e);
            if json {
                let v = serde_json::json!({ "error": e.to_string(), "exit_code": code });
                let _ = writeln!(out, "{v}");
            }
            let _ = writeln!(err, "error: {e}");
            code
        }
    }
}

fn execute(cli: Cli) -> Result<Output> {
    let seed = cli.seed;
    match cli.command {
        Command::Keygen(a) => cmd_keygen(&a, seed),
        Command::Sign(a) => cmd_sign(&a, seed),
        Command::Verify(a) => cmd_verify(&a),
        Command::FragAnalysis(a) => cmd_frag_analysis(&a),
        Command::ForgeryDemo(a) => cmd_forgery_demo(&a, seed),
        Command::AuditVerify(a) => cmd_audit_verify(&a),
        Command::Bench(a) => cmd_bench(&a, seed),
        Command::Simulate(a) => cmd_simulate(&a, seed),
    }
}

fn seeded(seed: Option<u64>) -> (u64, ChaCha20Rng) {
    let seed = seed.unwrap_or_else(rand::random);
    (seed, ChaCha20Rng::seed_from_u64(seed))
}

fn level_file_name(level: usize) -> String {
    match level {
        0 => "master.json".into(),
        1 => "amf.json".into(),
        l => format!("level-{l}.json"),
    }
}

pub fn share_file_name(index: u32) -> String {
    format!("bs-{index}.json")
}

#[derive(Debug, Serialize)]
struct KeygenReport {
    seed: u64,
    t: usize,
    n: usize,
    depth: usize,
    master_pk: String,
    group_pk: String,
    files: Vec<PathBuf>,
}

fn cmd_keygen(a: &KeygenArgs, seed: Option<u64>) -> Result<Output> {
    if a.t < 1 || a.t > a.n {
        return Err(Error::InvalidThreshold { t: a.t, n: a.n });
    }
    if !(2..=9).contains(&a.depth) {
        return Err(Error::InvalidConfig("depth must lie in [2, 9]".into()));
    }
    let (seed, mut rng) = seeded(seed);
    std::fs::create_dir_all(&a.out)?;

    let (mk, _) = setup::<G, _>(&mut rng);
    let mut files = Vec::new();
    let mut parent_key = mk.level_key();
    let mut parent_file = LevelKeyFile::from_master(&mk);
    for level in 1..=a.depth {
        let id = level_identity(level, a.depth);
        let (t, n) = if level == a.depth { (a.t, a.n) } else { (1, 1) };
        let ex = extract(&id, &parent_key, t, n, a.validity, &mut rng)?;
        parent_file
            .children
            .push(ChildRecord::from_extraction(&id, &ex));
        let path = a.out.join(level_file_name(level - 1));
        write_json(&path, &parent_file)?;
        files.push(path);
        if level == a.depth {
            for share in &ex.shares {
                let path = a.out.join(share_file_name(share.index));
                write_json(&path, &ShareFile::from_share(share))?;
                files.push(path);
            }
            let report = KeygenReport {
                seed,
                t: a.t,
                n: a.n,
                depth: a.depth,
                master_pk: element_to_hex::<G>(&mk.pk),
                group_pk: element_to_hex::<G>(ex.chain.last()),
                files,
            };
            let mut text = format!(
                "generated ({}, {}) keys at depth {} (seed {})\nmaster pk {}\ngroup key {}\n",
                report.t, report.n, report.depth, report.seed, report.master_pk, report.group_pk
            );
            for f in &report.files {
                let _ = writeln!(text, "  wrote {}", f.display());
            }
            return Ok(Output::new(EXIT_OK, text, &report));
        }
        parent_key = ex.shares[0].clone().into_level_key()?;
        parent_file = LevelKeyFile::from_level_key(&parent_key);
    }
    unreachable!("loop returns at the leaf level")
}

pub fn load_share(dir: &Path, index: u32) -> Result<KeyShare<G>> {
    read_json::<ShareFile>(&dir.join(share_file_name(index)))?.to_share::<G>()
}

#[derive(Debug, Serialize)]
struct SignReport {
    verdict: &'static str,
    j: u64,
    signer_set: Vec<u32>,
    signature: String,
    signature_file: PathBuf,
}

fn cmd_sign(a: &SignArgs, seed: Option<u64>) -> Result<Output> {
    let (_, mut rng) = seeded(seed);
    let message = std::fs::read(&a.message)?;
    let shares = a
        .signers
        .iter()
        .map(|&i| load_share(&a.keys, i))
        .collect::<Result<Vec<_>>>()?;
    let first = shares
        .first()
        .ok_or(Error::InvalidConfig("no signers given".into()))?;
    let (t, ids, chain) = (first.threshold, first.ids.clone(), first.chain.clone());

    let mut stores = BTreeMap::new();
    let mut lists = BTreeMap::new();
    for share in &shares {
        let (s, l) = preprocess_batch(share, a.slot, 1, &mut rng)?;
        stores.insert(share.index, s);
        lists.insert(share.index, l);
    }
    let session = SigningSession::new(&message, a.slot, &a.signers, &lists, t, chain.last())?;
    let sig_shares = shares
        .iter()
        .map(|s| sign_session_share(&session, s, stores.get_mut(&s.index).expect("stored")))
        .collect::<Result<Vec<_>>>()?;
    let pks = shares.iter().map(|s| (s.index, s.pk_share)).collect();
    let sig = aggregate(&session, &sig_shares, &pks)?;
    let ok = mverify(&message, &ids, &chain, &sig)?;
    let file = SignatureFile::new(&ids, &chain, &sig);
    write_json(&a.out, &file)?;

    let report = SignReport {
        verdict: if ok { "accepted" } else { "rejected" },
        j: sig.j,
        signer_set: sig.signer_set.clone(),
        signature: file.signature.clone(),
        signature_file: a.out.clone(),
    };
    let text = format!(
        "signed slot {} with signers {:?}\nsignature {}\nwrote {}\n{}\n",
        report.j,
        report.signer_set,
        report.signature,
        report.signature_file.display(),
        report.verdict
    );
    Ok(Output::new(
        if ok { EXIT_OK } else { EXIT_VERIFY },
        text,
        &report,
    ))
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    j: u64,
    signer_set: Vec<u32>,
}

fn cmd_verify(a: &VerifyArgs) -> Result<Output> {
    let master =
        read_json::<LevelKeyFile>(&a.keys.join(level_file_name(0)))?.to_level_key::<G>()?;
    let message = std::fs::read(&a.message)?;
    let file: SignatureFile = read_json(&a.signature)?;
    let reason = match file.decode::<G>() {
        Err(e) => Some(e.to_string()),
        Ok((_, chain, _)) if chain.master() != master.chain.master() => {
            Some("signature chain is not rooted at the master key".into())
        }
        Ok((ids, chain, sig)) => match mverify(&message, &ids, &chain, &sig) {
            Ok(true) => None,
            Ok(false) => Some("verification equation failed".into()),
            Err(e) => Some(e.to_string()),
        },
    };
    let report = VerifyReport {
        verdict: if reason.is_none() {
            "accepted"
        } else {
            "rejected"
        },
        reason,
        j: file.j,
        signer_set: file.signer_set.clone(),
    };
    let mut text = report.verdict.to_string();
    if let Some(r) = &report.reason {
        let _ = write!(text, ": {r}");
    }
    text.push('\n');
    let code = if report.reason.is_none() {
        EXIT_OK
    } else {
        EXIT_VERIFY
    };
    Ok(Output::new(code, text, &report))
}

#[derive(Debug, Clone, Serialize)]
pub struct FigureCheck {
    pub name: String,
    pub expected: String,
    pub actual: String,
    pub pass: bool,
}

/// Reference figures the size model must reproduce.
pub fn reference_checks(report: &SchemeReport) -> Vec<FigureCheck> {
    let mut checks = Vec::new();
    let mut check = |name: &str, expected: String, actual: Option<String>| {
        let actual = actual.unwrap_or_else(|| "missing".into());
        checks.push(FigureCheck {
            name: name.into(),
            pass: expected == actual,
            expected,
            actual,
        });
    };
    let row = |name: &str| report.rows.iter().find(|r| r.name == name);
    let ml = row("ML-DSA single-chain");
    check(
        "ML-DSA single-chain fragments",
        "13".into(),
        ml.map(|r| r.fragments.to_string()),
    );
    check(
        "ML-DSA single-chain packets best/expected/worst",
        "13/19/25".into(),
        ml.map(|r| {
            format!(
                "{}/{}/{}",
                r.best_packets, r.expected_packets, r.worst_packets
            )
        }),
    );
    check(
        "ML-DSA single-chain delay (ms)",
        "240-1920".into(),
        ml.map(|r| format!("{}-{}", r.delay_min_ms, r.delay_max_ms)),
    );
    check(
        "ML-DSA single-chain expected delay (ms)",
        "360-2880".into(),
        ml.map(|r| format!("{}-{}", r.expected_delay_min_ms, r.expected_delay_max_ms)),
    );
    let borg = row("(2,3)-BORG");
    check(
        "(2,3)-BORG overhead bytes",
        "144".into(),
        borg.map(|r| r.crypto_bytes.to_string()),
    );
    check(
        "(2,3)-BORG fits in one SIB1",
        "fits, 0 fragments".into(),
        borg.map(|r| {
            format!(
                "{}, {} fragments",
                if r.fits { "fits" } else { "does not fit" },
                r.fragments
            )
        }),
    );
    checks
}

#[derive(Debug, Serialize)]
struct FragOutput {
    #[serde(flatten)]
    report: SchemeReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    checks: Option<Vec<FigureCheck>>,
}

fn cmd_frag_analysis(a: &FragArgs) -> Result<Output> {
    let registry = match &a.registry {
        Some(p) => SizeRegistry::load(p)?,
        None => SizeRegistry::default(),
    };
    let profiles: Vec<_> = if a.profile.is_empty() {
        registry.profiles.clone()
    } else {
        a.profile
            .iter()
            .map(|name| {
                registry
                    .get(name)
                    .cloned()
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown profile {name:?}")))
            })
            .collect::<Result<_>>()?
    };
    let report = scheme_report(&profiles, a.base, a.free);
    let mut text = if a.csv {
        report.render_csv()
    } else {
        report.render_text()
    };
    let mut code = EXIT_OK;
    let checks = a.check_reference.then(|| {
        let checks = reference_checks(&scheme_report(&registry.profiles, 79, DEFAULT_FREE_BYTES));
        text.push('\n');
        for c in &checks {
            let _ = writeln!(
                text,
                "{} {}: expected {}, got {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.expected,
                c.actual
            );
        }
        if checks.iter().any(|c| !c.pass) {
            code = EXIT_VERIFY;
        }
        checks
    });
    Ok(Output::new(code, text, &FragOutput { report, checks }))
}

#[derive(Debug, Serialize)]
struct ForgeryReport {
    tamper: &'static str,
    target: u64,
    outcome: String,
    halted: bool,
    halt_time_us: Option<u64>,
    refused: u64,
    proof: Option<ProofFile>,
    failure: Option<String>,
}

fn cmd_forgery_demo(a: &ForgeryArgs, seed: Option<u64>) -> Result<Output> {
    let cfg = ScenarioConfig {
        t: a.t,
        n: a.n,
        broadcasts: a.broadcasts,
        seed: seed.unwrap_or(1),
        ..ScenarioConfig::default()
    };
    let spec = TamperSpec {
        target_j: a.target,
        kind: match a.tamper {
            TamperArg::R => TamperKind::ReplaceR,
            TamperArg::None => TamperKind::None,
        },
        detector: a.detector,
    };
    let (transcript, halt) = run_forgery_scenario(&cfg, &spec)?;
    if let Some(p) = &a.transcript {
        transcript.write_jsonl(p)?;
    }
    if let (Some(p), Some(proof)) = (&a.proof_out, &halt.proof) {
        write_json(p, proof)?;
    }
    let pof_said = transcript.events_of("pof").last().map(|e| e.detail.clone());
    let outcome = match (&halt.verdict, pof_said) {
        (Some(v), _) => v.to_string(),
        (None, Some(d)) => d,
        (None, None) => "no-investigation".into(),
    };
    let report = ForgeryReport {
        tamper: match a.tamper {
            TamperArg::R => "R",
            TamperArg::None => "none",
        },
        target: a.target,
        outcome,
        halted: halt.halted,
        halt_time_us: halt.halt_time_us,
        refused: transcript.summary.refused,
        proof: halt.proof.clone(),
        failure: transcript.summary.failure.clone(),
    };
    let mut text = String::new();
    if let Some(p) = &report.proof {
        let _ = writeln!(
            text,
            "proof of forgery (slot {}, signers {:?}):",
            p.j, p.signer_set
        );
        for (i, (e, d)) in p.signer_set.iter().zip(p.e_hat.iter().zip(&p.d_hat)) {
            let _ = writeln!(text, "  BS-{i}: e_hat {e}\n        d_hat {d}");
        }
    }
    if let Some(f) = &report.failure {
        let _ = writeln!(text, "scenario failure: {f}");
    }
    let _ = writeln!(text, "{}", report.outcome);
    if report.halted {
        let _ = writeln!(
            text,
            "halted at {} us; {} later signing requests refused",
            report.halt_time_us.unwrap_or_default(),
            report.refused
        );
    }
    let ok = report.failure.is_none()
        && match a.tamper {
            TamperArg::R => report.halted,
            TamperArg::None => !report.halted && report.outcome == "not-a-forgery",
        };
    Ok(Output::new(
        if ok { EXIT_OK } else { EXIT_VERIFY },
        text,
        &report,
    ))
}

fn cmd_audit_verify(a: &AuditArgs) -> Result<Output> {
    let replicas = a
        .files
        .iter()
        .map(|p| read_log(p))
        .collect::<Result<Vec<_>>>()?;
    let report: ConsistencyReport = cross_validate(&replicas);
    let mut text = report.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    let code = if report.is_clean() {
        EXIT_OK
    } else {
        EXIT_VERIFY
    };
    let status = if report.is_clean() {
        "consistent"
    } else {
        "inconsistent"
    };
    let value = serde_json::json!({ "status": status, "report": report });
    Ok(Output::new(code, text, &value))
}

#[derive(Debug, Serialize)]
struct BenchReport {
    note: &'static str,
    rows: Vec<BenchRow>,
}

fn cmd_bench(a: &BenchArgs, seed: Option<u64>) -> Result<Output> {
    if a.t < 1 || a.t > a.n {
        return Err(Error::InvalidThreshold { t: a.t, n: a.n });
    }
    if a.iterations == 0 {
        return Err(Error::InvalidConfig("iterations must be at least 1".into()));
    }
    let rows = bench_rows(a.t, a.n, a.iterations, seed.unwrap_or(1))?;
    let report = BenchReport {
        note: "median timings measured on this host; absolute values depend on hardware",
        rows,
    };
    let mut text = format!("# {}\n", report.note);
    let _ = writeln!(
        text,
        "{:<20} {:>12} {:>10} {:>12} {:>6}",
        "scheme", "sign (ms)", "verify (ms)", "total (ms)", "iters"
    );
    for r in &report.rows {
        let _ = writeln!(
            text,
            "{:<20} {:>12.3} {:>10.3} {:>12.3} {:>6}",
            r.scheme, r.sign_ms, r.verify_ms, r.round_trip_ms, r.iterations
        );
    }
    Ok(Output::new(EXIT_OK, text, &report))
}

#[derive(Debug, Serialize)]
struct SimulateReport {
    summary: Summary,
    mean_e2e_us: Option<u64>,
    transcript: Option<PathBuf>,
    audit_replicas: Vec<PathBuf>,
}

fn cmd_simulate(a: &SimulateArgs, seed: Option<u64>) -> Result<Output> {
    let mut cfg: ScenarioConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(v) = a.t {
        cfg.t = v;
    }
    if let Some(v) = a.n {
        cfg.n = v;
    }
    if let Some(v) = a.depth {
        cfg.depth = v;
    }
    if a.beta.is_some() {
        cfg.beta = a.beta;
    }
    if let Some(v) = a.broadcasts {
        cfg.broadcasts = v;
    }
    if a.measured {
        cfg.timing = TimingMode::Measured;
    }
    let transcript = match a.tamper {
        Some(kind) => {
            if !a.offline.is_empty() {
                return Err(Error::InvalidConfig(
                    "--offline and --tamper cannot be combined".into(),
                ));
            }
            let spec = TamperSpec {
                target_j: a.target,
                kind: match kind {
                    TamperArg::R => TamperKind::ReplaceR,
                    TamperArg::None => TamperKind::None,
                },
                detector: a.detector,
            };
            run_forgery_scenario(&cfg, &spec)?.0
        }
        None => run_unavailability_scenario(&cfg, &a.offline)?,
    };
    if let Some(p) = &a.out {
        transcript.write_jsonl(p)?;
    }
    let mut audit_replicas = Vec::new();
    if let Some(dir) = &a.audit_dir {
        std::fs::create_dir_all(dir)?;
        for k in 1..=a.replicas {
            let path = dir.join(format!("replica-{k}.jsonl"));
            write_log(&path, &transcript.audit_log)?;
            audit_replicas.push(path);
        }
    }
    let s = &transcript.summary;
    let mean_e2e_us = (!s.breakdowns.is_empty())
        .then(|| s.breakdowns.iter().map(|b| b.e2e_us).sum::<u64>() / s.breakdowns.len() as u64);
    let report = SimulateReport {
        summary: s.clone(),
        mean_e2e_us,
        transcript: a.out.clone(),
        audit_replicas,
    };
    let mut text = format!(
        "({},{}) depth {} seed {}: {} broadcasts, {} verified, {} rejected, {} unavailable, {} refused\n",
        s.config.t,
        s.config.n,
        s.config.depth,
        s.config.seed,
        s.broadcasts,
        s.verified,
        s.rejected,
        s.unavailable,
        s.refused
    );
    if let Some(m) = mean_e2e_us {
        let _ = writeln!(text, "mean end-to-end delay {m} us");
    }
    if s.halted {
        text.push_str("halted after confirmed forgery\n");
    }
    if let Some(f) = &s.failure {
        let _ = writeln!(text, "scenario failure: {f}");
    }
    let _ = writeln!(
        text,
        "audit log: {} entries, head {}",
        s.audit_entries, s.audit_head
    );
    if let Some(p) = &report.transcript {
        let _ = writeln!(text, "wrote {}", p.display());
    }
    for p in &report.audit_replicas {
        let _ = writeln!(text, "wrote {}", p.display());
    }
    let code = if s.failure.is_some() {
        EXIT_VERIFY
    } else {
        EXIT_OK
    };
    Ok(Output::new(code, text, &report))
}
