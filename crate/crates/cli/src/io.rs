use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rnred::simulate::{EnsembleManifest, SeriesKind};
use rnred::{parse_model, Ensemble, ReactionNetwork, TimeSeries};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn load_model(path: &Path) -> Result<ReactionNetwork> {
    let text = read_text(path)?;
    parse_model(&text).with_context(|| format!("model {}", path.display()))
}

/// Load a CSV series and order its columns like the network's species.
pub fn load_series(path: &Path, net: &ReactionNetwork, kind: SeriesKind) -> Result<TimeSeries> {
    let text = read_text(path)?;
    let ts = TimeSeries::from_csv(&text, kind).with_context(|| format!("series {}", path.display()))?;
    align_series(ts, net).with_context(|| format!("series {}", path.display()))
}

pub fn align_series(ts: TimeSeries, net: &ReactionNetwork) -> Result<TimeSeries> {
    if ts.species == net.species {
        return Ok(ts);
    }
    let mut cols = Vec::with_capacity(net.num_species());
    let mut missing = Vec::new();
    for name in &net.species {
        match ts.species.iter().position(|s| s == name) {
            Some(i) => cols.push(i),
            None => missing.push(name.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(rnred::Error::MissingSpecies(missing).into());
    }
    let states = ts.states.iter().map(|x| cols.iter().map(|&i| x[i]).collect()).collect();
    Ok(TimeSeries::new(net.species.clone(), ts.times, states, ts.kind)?)
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `name sha256:<hex>` of a file, without its directory so that the string
/// does not depend on where the run happens.
pub fn provenance(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(format!("{name} sha256:{}", sha256_hex(&bytes)))
}

pub fn member_file(m: usize) -> String {
    format!("member_{m:04}.csv")
}

/// Read an ensemble back from its manifest; member paths are relative to
/// the manifest's directory.
pub fn load_ensemble(manifest_path: &Path, net: &ReactionNetwork) -> Result<(EnsembleManifest, Ensemble)> {
    let manifest: EnsembleManifest = read_json(manifest_path)?;
    if manifest.members.len() != manifest.seeds.len() {
        bail!("manifest lists {} members but {} seeds", manifest.members.len(), manifest.seeds.len());
    }
    let dir: PathBuf = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let kind = manifest.method.kind();
    let members = manifest
        .members
        .iter()
        .map(|f| load_series(&dir.join(f), net, kind))
        .collect::<Result<Vec<_>>>()?;
    let ens = Ensemble { members, seeds: manifest.seeds.clone(), method: manifest.method };
    Ok((manifest, ens))
}
