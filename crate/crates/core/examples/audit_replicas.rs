//! Seals signatures into a hash-chained audit log, replicates it three ways,
//! tampers with one replica and cross-validates.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sibauth::audit::{cross_validate, AuditLog, EntryFields, InsecureMacThpq, ThresholdPq};

fn main() -> sibauth::Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let keys = InsecureMacThpq.keygen(2, 3, &mut rng)?;
    let mut log = AuditLog::new(InsecureMacThpq, keys.public_key.clone());

    for j in 1..=20u64 {
        let sigma_bs = vec![j as u8; 64];
        let partials: Vec<_> = keys.shares[..2]
            .iter()
            .map(|s| InsecureMacThpq.sign_share(s, &sigma_bs))
            .collect();
        let sigma_a = InsecureMacThpq.aggregate(2, &partials)?;
        log.append(EntryFields {
            j,
            timestamp_ms: 20 * j,
            bs_ids: vec!["BS-1".into(), "BS-2".into()],
            sigma_bs,
            sigma_a,
        })?;
    }
    println!("head digest {}", log.head_digest());

    let replicas = vec![log.entries().to_vec(); 3];
    println!("{}", cross_validate(&replicas));

    let mut tampered = replicas.clone();
    tampered[2][7].timestamp_ms += 1;
    print!("{}", cross_validate(&tampered));

    let mut truncated = replicas;
    truncated[0].truncate(15);
    print!("{}", cross_validate(&truncated));
    Ok(())
}
