//! Versioned JSON key files. Scalars and elements are lowercase hex of their
//! canonical encodings.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Extraction, GroupKeyChain, IdentityVector, KeyShare, LevelKey, MasterKey};
use crate::algebra::{element_from_hex, element_to_hex, scalar_from_hex, scalar_to_hex, Group};
use crate::error::{Error, Result};

pub const KEY_FILE_VERSION: u32 = 1;

/// Per-member share file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShareFile {
    pub version: u32,
    pub group: String,
    pub ids: Vec<String>,
    pub level: usize,
    pub threshold: usize,
    pub group_size: usize,
    pub index: u32,
    pub sk_share: String,
    pub pk_share: String,
    pub chain: Vec<String>,
    pub expiry: u64,
}

/// Record a parent keeps about a child level it extracted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChildRecord {
    pub id: String,
    pub alpha: String,
    pub threshold: usize,
    pub group_size: usize,
    pub share_pks: Vec<String>,
}

/// Master or intermediate (unshared) level key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelKeyFile {
    pub version: u32,
    pub group: String,
    pub ids: Vec<String>,
    pub level: usize,
    pub sk: String,
    pub chain: Vec<String>,
    /// `alpha_0` for the master key.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<String>,
    #[serde(default)]
    pub children: Vec<ChildRecord>,
}

pub fn ids_to_hex(ids: &IdentityVector) -> Vec<String> {
    ids.ids().iter().map(hex::encode).collect()
}

pub fn ids_from_hex(ids: &[String]) -> Result<IdentityVector> {
    let raw = ids
        .iter()
        .map(|s| hex::decode(s).map_err(|e| Error::Decode(format!("identity: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(IdentityVector::new(raw))
}

pub fn chain_to_hex<G: Group>(chain: &GroupKeyChain<G>) -> Vec<String> {
    chain.elements().iter().map(element_to_hex::<G>).collect()
}

pub fn chain_from_hex<G: Group>(chain: &[String]) -> Result<GroupKeyChain<G>> {
    let keys = chain
        .iter()
        .map(|s| element_from_hex::<G>(s))
        .collect::<Result<Vec<_>>>()?;
    GroupKeyChain::from_elements(keys)
}

fn check_header<G: Group>(version: u32, group: &str) -> Result<()> {
    if version != KEY_FILE_VERSION {
        return Err(Error::Decode(format!(
            "unsupported key file version {version}"
        )));
    }
    if group != G::NAME {
        return Err(Error::Decode(format!(
            "key file is for group {group}, expected {}",
            G::NAME
        )));
    }
    Ok(())
}

fn check_level(level: usize, ids: &IdentityVector, chain_level: usize) -> Result<()> {
    if level != ids.level() || level != chain_level {
        return Err(Error::MalformedChain(format!(
            "declared level {level}, identities {}, chain {chain_level}",
            ids.level()
        )));
    }
    Ok(())
}

impl ShareFile {
    pub fn from_share<G: Group>(share: &KeyShare<G>) -> Self {
        Self {
            version: KEY_FILE_VERSION,
            group: G::NAME.into(),
            ids: ids_to_hex(&share.ids),
            level: share.ids.level(),
            threshold: share.threshold,
            group_size: share.group_size,
            index: share.index,
            sk_share: scalar_to_hex::<G>(&share.sk_share),
            pk_share: element_to_hex::<G>(&share.pk_share),
            chain: chain_to_hex(&share.chain),
            expiry: share.expiry,
        }
    }

    pub fn to_share<G: Group>(&self) -> Result<KeyShare<G>> {
        check_header::<G>(self.version, &self.group)?;
        let ids = ids_from_hex(&self.ids)?;
        let chain = chain_from_hex::<G>(&self.chain)?;
        check_level(self.level, &ids, chain.level())?;
        let sk_share = scalar_from_hex::<G>(&self.sk_share)?;
        let pk_share = element_from_hex::<G>(&self.pk_share)?;
        if G::exp_generator(&sk_share) != pk_share {
            return Err(Error::Decode(
                "share public key does not match secret".into(),
            ));
        }
        Ok(KeyShare {
            index: self.index,
            sk_share,
            pk_share,
            threshold: self.threshold,
            group_size: self.group_size,
            ids,
            chain,
            expiry: self.expiry,
        })
    }
}

impl ChildRecord {
    pub fn from_extraction<G: Group>(child_id: &[u8], ex: &Extraction<G>) -> Self {
        let (t, n) = ex
            .shares
            .first()
            .map(|s| (s.threshold, s.group_size))
            .unwrap_or_default();
        Self {
            id: hex::encode(child_id),
            alpha: scalar_to_hex::<G>(&ex.level_secret.alpha),
            threshold: t,
            group_size: n,
            share_pks: ex.share_pks.iter().map(element_to_hex::<G>).collect(),
        }
    }

    pub fn alpha<G: Group>(&self) -> Result<G::Scalar> {
        scalar_from_hex::<G>(&self.alpha)
    }

    /// `(index, PK_i)` with indices `1..=n`.
    pub fn indexed_pks<G: Group>(&self) -> Result<Vec<(u32, G::Element)>> {
        self.share_pks
            .iter()
            .enumerate()
            .map(|(i, s)| Ok((i as u32 + 1, element_from_hex::<G>(s)?)))
            .collect()
    }
}

impl LevelKeyFile {
    pub fn from_master<G: Group>(mk: &MasterKey<G>) -> Self {
        let mut file = Self::from_level_key(&mk.level_key());
        file.alpha = Some(scalar_to_hex::<G>(&mk.alpha));
        file
    }

    pub fn from_level_key<G: Group>(key: &LevelKey<G>) -> Self {
        Self {
            version: KEY_FILE_VERSION,
            group: G::NAME.into(),
            ids: ids_to_hex(&key.ids),
            level: key.ids.level(),
            sk: scalar_to_hex::<G>(&key.sk),
            chain: chain_to_hex(&key.chain),
            alpha: None,
            children: Vec::new(),
        }
    }

    pub fn to_level_key<G: Group>(&self) -> Result<LevelKey<G>> {
        check_header::<G>(self.version, &self.group)?;
        let ids = ids_from_hex(&self.ids)?;
        let chain = chain_from_hex::<G>(&self.chain)?;
        check_level(self.level, &ids, chain.level())?;
        Ok(LevelKey {
            ids,
            chain,
            sk: scalar_from_hex::<G>(&self.sk)?,
        })
    }

    pub fn child(&self, id: &[u8]) -> Option<&ChildRecord> {
        let id = hex::encode(id);
        self.children.iter().find(|c| c.id == id)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
