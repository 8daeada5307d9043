//! Writes a planted network and its synthetic activity as an input set the
//! `report` subcommand can consume directly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use recispace_core::activity::{SECONDS_PER_DAY, DEFAULT_ENGAGEMENT_CUTOFF};
use recispace_core::generator::{generate_planted_network, synthesize_activity, PlantedNetwork, PlantedSpec};
use recispace_core::{EdgeStore, UserId};

use crate::activity_io::{profiles_tsv, timelines_tsv};
use crate::edges::{write_edge_file, write_id_file};
use crate::tables::{write_text, Provenance};
use crate::Result;

/// Collection time of the synthetic crawl: thirty days after the default
/// engagement cutoff, so timelines straddle it.
pub const SYNTH_COLLECTED_AT: i64 = DEFAULT_ENGAGEMENT_CUTOFF + 30 * SECONDS_PER_DAY as i64;

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub network: PlantedNetwork,
    pub files: Vec<PathBuf>,
}

fn spec_hash(spec: &PlantedSpec) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(format!("{spec:?}").as_bytes());
    hex::encode(&digest[..8])
}

/// Splits edges into a followee file (edges leaving a planted user) and a
/// follower file (edges into a planted user from outside).
fn split_edges(store: &EdgeStore) -> (EdgeStore, EdgeStore) {
    let mut followees = Vec::new();
    let mut followers = Vec::new();
    for e in store.edges() {
        if store.is_focal(e.src) {
            followees.push(*e);
        } else {
            // followed-by rows are `user<TAB>follower`
            followers.push(e.reversed());
        }
    }
    (EdgeStore::from_edges(followees), EdgeStore::from_edges(followers))
}

pub fn write_synthetic(spec: &PlantedSpec, dir: &Path) -> Result<SynthOutput> {
    let network = generate_planted_network(spec)?;
    let activity = synthesize_activity(&network, SYNTH_COLLECTED_AT, spec.seed);
    let prov = Provenance::new("synth", spec_hash(spec));
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;

    let (followees, followers) = split_edges(&network.store);
    let mut files = Vec::new();
    let mut put = |name: &str| {
        let p = dir.join(name);
        files.push(p.clone());
        p
    };
    write_edge_file(&put("followees.tsv"), &prov, &followees)?;
    write_edge_file(&put("followers.tsv"), &prov, &followers)?;
    let planted: Vec<UserId> = network.truth.iter().map(|(u, _)| *u).collect();
    write_id_file(&put("focal.tsv"), &prov, &planted)?;

    let mut truth = prov.line();
    truth.push_str("user\tlabel\n");
    for (u, l) in &network.truth {
        let _ = writeln!(truth, "{u}\t{l}");
    }
    write_text(&put("truth_labels.tsv"), &truth)?;
    write_text(&put("profiles.tsv"), &profiles_tsv(&prov, &activity.profiles))?;
    write_text(&put("timelines.tsv"), &timelines_tsv(&prov, &activity.posts))?;

    let conf = format!(
        "# producer=synth config={}\n\
         edges = followees.tsv follows\n\
         edges = followers.tsv followed-by\n\
         focal = focal.tsv\n\
         profiles = profiles.tsv\n\
         timelines = timelines.tsv\n\
         seed = {}\n\
         vocab_min_support = 3\n",
        prov.config_hash, spec.seed
    );
    write_text(&put("report.conf"), &conf)?;
    Ok(SynthOutput { network, files })
}
