//! Seat manifests: a JSON list of ballot files with party maps.

use anyhow::{bail, Context, Result};
use irv_margin::ballot::Profile;
use irv_margin::tabulate::TieRule;
use serde::Deserialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub seats: Vec<SeatEntry>,
    #[serde(default)]
    pub options: ManifestOptions,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeatEntry {
    pub name: String,
    pub path: PathBuf,
    /// Candidate id to party code; overrides parties from the ballot file.
    #[serde(default)]
    pub parties: BTreeMap<String, String>,
}

#[derive(Debug, Default, Deserialize)]
pub struct ManifestOptions {
    pub tie_rule: Option<TieRule>,
    pub workers: Option<usize>,
}

pub struct LoadedSeat {
    pub name: String,
    pub profile: Profile,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("{}: invalid manifest", path.display()))
    }

    /// Loads every seat's ballots. Relative paths resolve against `base`.
    pub fn load_seats(&self, base: &Path) -> Result<Vec<LoadedSeat>> {
        let mut names = BTreeSet::new();
        for seat in &self.seats {
            if !names.insert(seat.name.as_str()) {
                bail!("seat {} is listed twice", seat.name);
            }
        }
        self.seats
            .iter()
            .map(|seat| {
                let path = base.join(&seat.path);
                let profile = read_profile(&path)?
                    .with_parties(&seat.parties)
                    .with_context(|| format!("seat {}", seat.name))?;
                Ok(LoadedSeat {
                    name: seat.name.clone(),
                    profile,
                })
            })
            .collect()
    }
}

pub fn read_profile(path: &Path) -> Result<Profile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Profile::parse(&text).with_context(|| format!("{}", path.display()))
}
