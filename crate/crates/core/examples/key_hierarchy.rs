//! Builds a three-level hierarchy (AMF, tracking area, base-station group),
//! checks that each level's secret matches the public key a verifier derives
//! from identities alone, and writes the key files.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sibauth::algebra::{element_to_hex, DefaultGroup, Group};
use sibauth::hierarchy::keyfile::{write_json, ChildRecord, LevelKeyFile, ShareFile};
use sibauth::hierarchy::{
    derived_level_public_key, extract, interpolate_public_key, reconstruct_secret, setup,
};

type G = DefaultGroup;

fn main() -> sibauth::Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let (master, params) = setup::<G, _>(&mut rng);
    println!("group {} (H1 tag {:?})", params.group.name, params.h1_tag);
    println!("master pk {}", element_to_hex::<G>(&master.pk));

    let amf = extract(b"AMF-0001", &master.level_key(), 1, 1, 86_400, &mut rng)?;
    let amf_key = amf.shares[0].clone().into_level_key()?;
    let area = extract(b"TA02-001", &amf_key, 1, 1, 86_400, &mut rng)?;
    let area_key = area.shares[0].clone().into_level_key()?;
    let bs = extract(b"BSG-0001", &area_key, 2, 3, 86_400, &mut rng)?;

    for key in [&amf_key, &area_key] {
        let derived = derived_level_public_key(&key.ids, &key.chain)?;
        assert_eq!(G::exp_generator(&key.sk), derived);
        println!(
            "level {} key matches its identity-derived public key",
            key.ids.level()
        );
    }

    let leaf = &bs.shares[0];
    let derived = derived_level_public_key(&leaf.ids, &leaf.chain)?;
    let sk = reconstruct_secret(&bs.shares[..2])?;
    assert_eq!(G::exp_generator(&sk), derived);
    assert_eq!(
        interpolate_public_key::<G>(&bs.indexed_pks()[1..])?,
        derived
    );
    println!(
        "any 2 of 3 BS shares interpolate to the group key {}",
        element_to_hex::<G>(&derived)
    );

    let dir = tempfile::tempdir()?;
    let mut amf_file = LevelKeyFile::from_level_key(&amf_key);
    amf_file
        .children
        .push(ChildRecord::from_extraction(b"TA02-001", &area));
    write_json(&dir.path().join("amf.json"), &amf_file)?;
    for share in &bs.shares {
        write_json(
            &dir.path().join(format!("bs-{}.json", share.index)),
            &ShareFile::from_share(share),
        )?;
    }
    println!("wrote {} key files", std::fs::read_dir(dir.path())?.count());
    Ok(())
}
