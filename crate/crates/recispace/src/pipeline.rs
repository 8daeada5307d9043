//! Stage functions shared by the subcommands, and the full report run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use recispace_core::activity::{build_property_record, KindPrecedence, PostRecord, ProfileFields, Property, UserPropertyRecord};
use recispace_core::flow::{archetype_flow_counts, normalize_cols, normalize_rows, FlowMatrix};
use recispace_core::graph::{compute_degree_summaries, MalformedPolicy, overall_reciprocity, IngestReport, ReciprocityScope};
use recispace_core::reciprocity::{
    classify_archetype, compute_reciprocity, density_map, grid_aggregate, GridSummary, Statistic,
};
use recispace_core::stats::{conover_holm, letter_values, GroupedSample, LetterValueOptions, LetterValueSummary};
use recispace_core::vocab::{build_user_documents, top_k_words, ChiSquareResult, DocumentFilter, TokenizerOptions, VocabParams};
use recispace_core::{ArchetypeLabel, ClassifierConfig, DegreeSummary, EdgeStore, UserId};

use crate::activity_io::{group_timelines, read_profiles, read_timelines, Timelines};
use crate::config::PipelineConfig;
use crate::edges::{read_edge_sources, read_id_file, EdgeSource};
use crate::manifest::{Manifest, Status, MANIFEST_FILE};
use crate::tables::{self, Classified, PropertyTable, PropertyTests, Provenance};
use crate::{Error, Result};

/// Reads and merges the edge files and attaches the focal users, if any.
pub fn load_store(
    edges: &[EdgeSource],
    focal: Option<&Path>,
    policy: MalformedPolicy,
) -> Result<(EdgeStore, Vec<(PathBuf, IngestReport)>)> {
    let (store, reports) = read_edge_sources(edges, policy)?;
    let store = match focal {
        Some(p) => store.with_focal(read_id_file(p)?),
        None => store,
    };
    Ok((store, reports))
}

/// Degree summaries for the focal users, or for every endpoint when no focal
/// set is given, dropping users below `min_total_degree`.
pub fn population(store: &EdgeStore, min_total_degree: u64) -> Vec<DegreeSummary> {
    let users = if store.focal().is_empty() {
        store.endpoint_users()
    } else {
        store.focal().to_vec()
    };
    compute_degree_summaries(store, users)
        .into_iter()
        .filter(|d| d.total_degree() >= min_total_degree)
        .collect()
}

pub fn classify(rows: &[DegreeSummary], cfg: &ClassifierConfig) -> Vec<Classified> {
    rows.iter()
        .map(|d| {
            let point = compute_reciprocity(d);
            Classified {
                user: d.user,
                point,
                label: classify_archetype(point, cfg),
            }
        })
        .collect()
}

pub fn label_map(rows: &[Classified]) -> BTreeMap<UserId, ArchetypeLabel> {
    rows.iter().map(|c| (c.user, c.label)).collect()
}

pub fn load_timelines(path: &Path, precedence: KindPrecedence, cap: Option<usize>) -> Result<Timelines> {
    Ok(group_timelines(read_timelines(path, precedence)?, cap))
}

/// Property records for `users`. Users lacking a profile or a profile field
/// are returned separately with the reason.
pub fn property_records(
    users: &[UserId],
    profiles: &BTreeMap<UserId, ProfileFields>,
    timelines: &Timelines,
    cutoff: i64,
) -> (Vec<UserPropertyRecord>, Vec<(UserId, String)>) {
    let results: Vec<_> = users
        .par_iter()
        .map(|u| {
            let Some(profile) = profiles.get(u) else {
                return Err((*u, "no profile".to_string()));
            };
            let timeline: &[PostRecord] = timelines.get(u).map(Vec::as_slice).unwrap_or(&[]);
            build_property_record(profile, timeline, cutoff).map_err(|e| (*u, e.to_string()))
        })
        .collect();
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(s) => skipped.push(s),
        }
    }
    (records, skipped)
}

/// Median of `prop` per grid cell over the classified users.
pub fn property_grid(
    classified: &[Classified],
    table: &PropertyTable,
    prop: Property,
    resolution: usize,
) -> Result<GridSummary> {
    let points = classified.iter().filter_map(|c| {
        table
            .get(&c.user)
            .map(|vals| (c.point, vals.get(&prop).copied().flatten()))
    });
    Ok(grid_aggregate(points, resolution, Statistic::Median)?)
}

/// Non-empty archetype groups of `prop`, in the canonical label order.
pub fn property_groups(
    classified: &[Classified],
    table: &PropertyTable,
    prop: Property,
) -> Vec<(ArchetypeLabel, Vec<f64>)> {
    let mut groups: BTreeMap<ArchetypeLabel, Vec<f64>> = BTreeMap::new();
    for c in classified {
        if let Some(v) = table.get(&c.user).and_then(|vals| vals.get(&prop).copied().flatten()) {
            if !v.is_nan() {
                groups.entry(c.label).or_default().push(v);
            }
        }
    }
    ArchetypeLabel::ALL
        .iter()
        .filter_map(|l| groups.remove(l).map(|v| (*l, v)))
        .collect()
}

pub fn property_tests(
    classified: &[Classified],
    table: &PropertyTable,
    props: &[Property],
) -> Vec<PropertyTests> {
    props
        .par_iter()
        .map(|&property| {
            let groups = property_groups(classified, table, property);
            let outcome = GroupedSample::new(groups)
                .and_then(|s| conover_holm(&s))
                .map_err(|e| e.to_string());
            PropertyTests { property, outcome }
        })
        .collect()
}

pub fn property_letter_values(
    classified: &[Classified],
    table: &PropertyTable,
    props: &[Property],
    opts: &LetterValueOptions,
) -> Vec<(Property, ArchetypeLabel, LetterValueSummary)> {
    let mut out = Vec::new();
    for &prop in props {
        for (label, values) in property_groups(classified, table, prop) {
            if let Ok(lv) = letter_values(&values, opts) {
                out.push((prop, label, lv));
            }
        }
    }
    out
}

pub fn vocab_tables(
    classified: &[Classified],
    timelines: &Timelines,
    filter: &DocumentFilter,
    opts: &TokenizerOptions,
    params: &VocabParams,
) -> Result<BTreeMap<ArchetypeLabel, Vec<ChiSquareResult>>> {
    let labels = label_map(classified);
    let docs = build_user_documents(
        timelines
            .iter()
            .filter(|(u, _)| labels.contains_key(u))
            .map(|(u, tl)| (*u, tl.as_slice())),
        filter,
        opts,
    );
    Ok(top_k_words(&docs, &labels, params)?)
}

pub fn vocab_comment(cfg: &PipelineConfig) -> String {
    format!(
        "filter=positive_association min_support={} k={} include_empty_users={} lang={} originals_only={} keep_hashtags={}",
        cfg.vocab.min_support,
        cfg.vocab.k,
        cfg.vocab.include_empty_users,
        cfg.vocab_lang.as_deref().unwrap_or("any"),
        cfg.vocab_originals_only,
        cfg.keep_hashtags
    )
}

pub fn flow_matrix(store: &EdgeStore, classified: &[Classified], corner_only: bool) -> FlowMatrix {
    let order: &[ArchetypeLabel] = if corner_only {
        &ArchetypeLabel::CORNERS
    } else {
        &ArchetypeLabel::ALL
    };
    archetype_flow_counts(store, &label_map(classified), order)
}

pub fn reciprocity_comment(store: &EdgeStore, scope: ReciprocityScope) -> String {
    let scope_name = match scope {
        ReciprocityScope::AllEndpoints => "all",
        ReciprocityScope::FocalOnly => "focal",
    };
    match overall_reciprocity(store, scope) {
        Ok(r) => format!(
            "overall_reciprocity scope={scope_name} mutual_pairs={} connected_pairs={} ratio={}",
            r.mutual_pairs, r.connected_pairs, r.ratio
        ),
        Err(e) => format!("overall_reciprocity scope={scope_name} unavailable: {e}"),
    }
}

pub fn grid_file_name(prop: Property) -> String {
    format!("grid_{}.tsv", prop.name())
}

/// Files written so far, so a failed run can clean up after itself.
struct Bundle<'a> {
    dir: &'a Path,
    prov: Provenance,
    written: Vec<String>,
}

impl Bundle<'_> {
    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        tables::write_text(&self.dir.join(name), text)?;
        self.written.push(name.to_string());
        Ok(())
    }
}

fn write_stages(cfg: &PipelineConfig, bundle: &mut Bundle<'_>) -> Result<()> {
    let prov = bundle.prov.clone();
    let (store, reports) = load_store(&cfg.edges, cfg.focal.as_deref(), cfg.malformed_policy())?;
    let degrees = population(&store, cfg.min_total_degree);
    if degrees.is_empty() {
        return Err(Error::Validation("no users left to analyse".into()));
    }

    let mut comment = reciprocity_comment(&store, cfg.reciprocity_scope);
    for (path, r) in &reports {
        let name = path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default();
        comment.push_str(&format!(
            "\n# ingest file={name} rows={} accepted={} self_edges={} malformed={}",
            r.rows,
            r.accepted,
            r.self_edges,
            r.errors.len()
        ));
    }
    bundle.write("reciprocity.tsv", &tables::points_tsv(&prov, Some(&comment), &degrees))?;

    let classified = classify(&degrees, &cfg.classifier);
    bundle.write("classification.tsv", &tables::classification_tsv(&prov, &classified))?;
    let density = density_map(classified.iter().map(|c| c.point), cfg.grid_resolution)?;
    bundle.write(
        "density_grid.tsv",
        &tables::grid_tsv(&prov, "statistic=count", &density),
    )?;

    let timelines = match &cfg.timelines {
        Some(p) => Some(load_timelines(p, cfg.precedence(), cfg.timeline_cap)?),
        None => None,
    };

    if let Some(profile_path) = &cfg.profiles {
        let profiles = read_profiles(profile_path)?;
        let empty = Timelines::new();
        let users: Vec<UserId> = degrees.iter().map(|d| d.user).collect();
        let (records, skipped) =
            property_records(&users, &profiles, timelines.as_ref().unwrap_or(&empty), cfg.cutoff);
        let mut text = tables::properties_tsv(&prov, &records);
        if !skipped.is_empty() {
            text.push_str(&format!("# skipped_users={}\n", skipped.len()));
        }
        bundle.write("properties.tsv", &text)?;

        let table = tables::property_table(&records);
        for prop in Property::ALL {
            let grid = property_grid(&classified, &table, prop, cfg.grid_resolution)?;
            let comment = format!("property={} statistic=median", prop.name());
            bundle.write(&grid_file_name(prop), &tables::grid_tsv(&prov, &comment, &grid))?;
        }
        let tests = property_tests(&classified, &table, &Property::ALL);
        bundle.write("stats.tsv", &tables::stats_tsv(&prov, &tests))?;
        let lv = property_letter_values(&classified, &table, &Property::ALL, &LetterValueOptions::default());
        bundle.write("letter_values.tsv", &tables::letter_values_tsv(&prov, &lv))?;
    }

    if let Some(timelines) = &timelines {
        let words = vocab_tables(
            &classified,
            timelines,
            &cfg.document_filter(),
            &cfg.tokenizer()?,
            &cfg.vocab,
        )?;
        bundle.write("vocab.tsv", &tables::vocab_tsv(&prov, &vocab_comment(cfg), &words))?;
    }

    let flows = flow_matrix(&store, &classified, cfg.corner_only_flows);
    bundle.write("flows_counts.tsv", &tables::flow_counts_tsv(&prov, &flows))?;
    bundle.write(
        "flows_following.tsv",
        &tables::normalized_tsv(&prov, "row", &normalize_rows(&flows)),
    )?;
    bundle.write(
        "flows_followers.tsv",
        &tables::normalized_tsv(&prov, "column", &normalize_cols(&flows)),
    )?;
    Ok(())
}

/// Runs every stage into `cfg.output_dir`. On failure the files written so
/// far are removed and the manifest is left marked incomplete.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Manifest> {
    cfg.validate()?;
    let dir = cfg.output_dir.as_path();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let prov = Provenance::new("report", cfg.hash());
    let mut manifest = Manifest::new(cfg)?;
    let mut bundle = Bundle {
        dir,
        prov: prov.clone(),
        written: Vec::new(),
    };

    let outcome = write_stages(cfg, &mut bundle).and_then(|()| {
        for name in &bundle.written {
            manifest.record_output(dir, name)?;
        }
        Ok(())
    });
    match outcome {
        Ok(()) => {
            manifest.status = Status::Complete;
            tables::write_text(&dir.join(MANIFEST_FILE), &manifest.render(&prov))?;
            Ok(manifest)
        }
        Err(e) => {
            for name in &bundle.written {
                let _ = std::fs::remove_file(dir.join(name));
            }
            manifest.outputs.clear();
            manifest.error = Some(e.to_string());
            tables::write_text(&dir.join(MANIFEST_FILE), &manifest.render(&prov))?;
            Err(e)
        }
    }
}
