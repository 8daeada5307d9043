use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use recispace::activity_io::read_profiles;
use recispace::config::{PipelineConfig, OUTPUT_DIR_ENV};
use recispace::edges::{summarize_reports, write_edge_file, EdgeSource};
use recispace::manifest::verify_manifest;
use recispace::pipeline::{self, load_store, load_timelines, population};
use recispace::synth::write_synthetic;
use recispace::tables::{self, Classified, Provenance};
use recispace::{Error, Result};
use recispace_core::activity::{KindPrecedence, Property, DEFAULT_ENGAGEMENT_CUTOFF};
use recispace_core::flow::{normalize_cols, normalize_rows};
use recispace_core::generator::{BlockSpec, PlantedSpec};
use recispace_core::graph::{MalformedPolicy, ReciprocityScope};
use recispace_core::reciprocity::{classify_archetype, grid_aggregate, Statistic};
use recispace_core::stats::LetterValueOptions;
use recispace_core::vocab::{parse_stopwords, DocumentFilter, TokenizerOptions, VocabParams, DEFAULT_STOPWORDS};
use recispace_core::{ArchetypeLabel, ClassifierConfig, Direction};
use sha2::{Digest, Sha256};

#[derive(Parser, Debug)]
#[command(name = "recispace", version, about = "Reciprocity-space analysis of directed follow graphs")]
struct Cli {
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct EdgeArgs {
    /// Edge file of `user<TAB>followee` rows (repeatable).
    #[arg(long, value_name = "PATH")]
    follows: Vec<PathBuf>,
    /// Edge file of `user<TAB>follower` rows (repeatable).
    #[arg(long = "followed-by", value_name = "PATH")]
    followed_by: Vec<PathBuf>,
    /// Abort on the first malformed row instead of skipping it.
    #[arg(long)]
    strict: bool,
}

impl EdgeArgs {
    fn sources(&self) -> Result<Vec<EdgeSource>> {
        let mut out: Vec<EdgeSource> = self
            .follows
            .iter()
            .map(|p| EdgeSource {
                path: p.clone(),
                direction: Direction::Follows,
            })
            .collect();
        out.extend(self.followed_by.iter().map(|p| EdgeSource {
            path: p.clone(),
            direction: Direction::FollowedBy,
        }));
        if out.is_empty() {
            return Err(Error::Validation("give at least one --follows or --followed-by file".into()));
        }
        Ok(out)
    }

    fn policy(&self) -> MalformedPolicy {
        if self.strict {
            MalformedPolicy::Abort
        } else {
            MalformedPolicy::Skip
        }
    }
}

#[derive(Args, Debug)]
struct PopulationArgs {
    #[command(flatten)]
    edges: EdgeArgs,
    /// Focal users, one id per line; defaults to every endpoint.
    #[arg(long, value_name = "PATH")]
    focal: Option<PathBuf>,
    /// Drop users whose k_i + k_o is below this.
    #[arg(long, default_value_t = 0)]
    min_total_degree: u64,
}

#[derive(Args, Debug)]
struct Thresholds {
    #[arg(long, default_value_t = 0.25)]
    low: f64,
    #[arg(long, default_value_t = 0.75)]
    high: f64,
}

impl Thresholds {
    fn config(&self) -> Result<ClassifierConfig> {
        Ok(ClassifierConfig::new(self.low, self.high)?)
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Scope {
    All,
    Focal,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Stat {
    Median,
    Count,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Groups {
    Archetype,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Normalize {
    None,
    Rows,
    Cols,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Merge edge files into one canonical `src<TAB>dst` file.
    Ingest {
        #[command(flatten)]
        edges: EdgeArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Per-user in, out and mutual degrees.
    Degrees {
        #[command(flatten)]
        pop: PopulationArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Reciprocity coordinates per user and the overall reciprocity ratio.
    Reciprocity {
        #[command(flatten)]
        pop: PopulationArgs,
        #[arg(long, value_enum, default_value = "all")]
        scope: Scope,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Assign archetype labels from a points table.
    Classify {
        /// Table with `user`, `r_in` and `r_out` columns.
        #[arg(long, value_name = "PATH")]
        points: PathBuf,
        #[command(flatten)]
        thresholds: Thresholds,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Aggregate users over the reciprocity grid.
    Grid {
        /// Table with `user`, `r_in` and `r_out` columns.
        #[arg(long, value_name = "PATH")]
        points: PathBuf,
        #[arg(long, default_value_t = 10)]
        resolution: usize,
        #[arg(long, value_enum, default_value = "count")]
        stat: Stat,
        /// Properties table; required for `--stat median`.
        #[arg(long, value_name = "PATH")]
        properties: Option<PathBuf>,
        /// Property to aggregate with `--stat median`.
        #[arg(long)]
        property: Option<Property>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Per-user behavioural properties from profiles and timelines.
    Metrics {
        #[arg(long, value_name = "PATH")]
        profiles: PathBuf,
        #[arg(long, value_name = "PATH")]
        timelines: Option<PathBuf>,
        /// Restrict to these users (any table whose first column is the id).
        #[arg(long, value_name = "PATH")]
        users: Option<PathBuf>,
        /// Engagement cutoff, UTC epoch seconds.
        #[arg(long, default_value_t = DEFAULT_ENGAGEMENT_CUTOFF)]
        cutoff: i64,
        /// Keep only the N most recent posts per user.
        #[arg(long)]
        timeline_cap: Option<usize>,
        /// A post that is both a reply and a quote counts as a quote.
        #[arg(long)]
        quote_over_reply: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Characteristic words per archetype.
    Vocab {
        #[arg(long, value_name = "PATH")]
        classification: PathBuf,
        #[arg(long, value_name = "PATH")]
        timelines: PathBuf,
        /// Stopword file, one word per line; defaults to the bundled list.
        #[arg(long, value_name = "PATH")]
        stopwords: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        k: usize,
        #[arg(long, default_value_t = 5)]
        min_support: u64,
        /// Language tag posts must carry; `any` disables the filter.
        #[arg(long, default_value = "en")]
        lang: String,
        /// Use replies and quotes as well as original posts.
        #[arg(long)]
        all_kinds: bool,
        /// Strip `#` so hashtags merge with plain words.
        #[arg(long)]
        no_hashtags: bool,
        /// Leave users without any qualifying word out of the population.
        #[arg(long)]
        exclude_empty_users: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Kruskal-Wallis, Conover-Holm and letter values per property.
    Stats {
        #[arg(long, value_name = "PATH")]
        classification: PathBuf,
        #[arg(long, value_name = "PATH")]
        properties: PathBuf,
        /// Properties to test (repeatable); defaults to all.
        #[arg(long)]
        property: Vec<Property>,
        #[arg(long, value_enum, default_value = "archetype")]
        groups: Groups,
        /// Also write letter values here.
        #[arg(long, value_name = "PATH")]
        letter_values: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        min_tail: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Edge counts between archetypes, raw or normalized.
    Flows {
        #[command(flatten)]
        edges: EdgeArgs,
        #[arg(long, value_name = "PATH")]
        classification: PathBuf,
        /// Only the four corner archetypes.
        #[arg(long)]
        corner_only: bool,
        #[arg(long, value_enum, default_value = "none")]
        normalize: Normalize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write a planted network with ground-truth labels and synthetic activity.
    Synth {
        /// Users per corner block.
        #[arg(long, default_value_t = 50)]
        block_size: usize,
        /// Size of an extra intermediate block.
        #[arg(long, default_value_t = 0)]
        intermediate: usize,
        #[arg(long, default_value_t = 1000)]
        helper_pool: usize,
        /// Make the circulating block a mutual clique.
        #[arg(long)]
        clique_circulating: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run every stage and write a report bundle with a manifest.
    Report {
        #[arg(short, long, value_name = "PATH")]
        config: PathBuf,
        /// Override a config key (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long, env = OUTPUT_DIR_ENV, value_name = "DIR")]
        output_dir: Option<PathBuf>,
    },
    /// Check a bundle's manifest against the files on disk.
    Verify { manifest: PathBuf },
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => tables::write_text(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|()| out.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn provenance(name: &str, cmd: &Command) -> Provenance {
    let digest = Sha256::digest(format!("{cmd:?}").as_bytes());
    Provenance::new(name, hex::encode(&digest[..8]))
}

fn run(cli: Cli) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| Error::Internal(e.to_string()))?;
    let cmd = &cli.command;
    match cmd {
        Command::Ingest { edges, output } => {
            let prov = provenance("ingest", cmd);
            let (store, reports) = load_store(&edges.sources()?, None, edges.policy())?;
            eprint!("{}", summarize_reports(&reports));
            match output {
                Some(p) => write_edge_file(p, &prov, &store)?,
                None => {
                    let mut text = prov.line();
                    text.push_str("# src\tdst\n");
                    for e in store.edges() {
                        text.push_str(&format!("{}\t{}\n", e.src, e.dst));
                    }
                    emit(None, &text)?;
                }
            }
        }
        Command::Degrees { pop, output } => {
            let prov = provenance("degrees", cmd);
            let (store, reports) = load_store(&pop.edges.sources()?, pop.focal.as_deref(), pop.edges.policy())?;
            eprint!("{}", summarize_reports(&reports));
            let rows = population(&store, pop.min_total_degree);
            emit(output.as_deref(), &tables::degrees_tsv(&prov, &rows))?;
        }
        Command::Reciprocity { pop, scope, output } => {
            let prov = provenance("reciprocity", cmd);
            let (store, reports) = load_store(&pop.edges.sources()?, pop.focal.as_deref(), pop.edges.policy())?;
            eprint!("{}", summarize_reports(&reports));
            let scope = match scope {
                Scope::All => ReciprocityScope::AllEndpoints,
                Scope::Focal => ReciprocityScope::FocalOnly,
            };
            let comment = pipeline::reciprocity_comment(&store, scope);
            let rows = population(&store, pop.min_total_degree);
            emit(output.as_deref(), &tables::points_tsv(&prov, Some(&comment), &rows))?;
        }
        Command::Classify { points, thresholds, output } => {
            let prov = provenance("classify", cmd);
            let cfg = thresholds.config()?;
            let rows: Vec<Classified> = tables::read_points(points)?
                .into_iter()
                .map(|r| Classified {
                    user: r.user,
                    point: r.point,
                    label: classify_archetype(r.point, &cfg),
                })
                .collect();
            emit(output.as_deref(), &tables::classification_tsv(&prov, &rows))?;
        }
        Command::Grid { points, resolution, stat, properties, property, output } => {
            let prov = provenance("grid", cmd);
            let rows = tables::read_points(points)?;
            let (grid, comment) = match stat {
                Stat::Count => (
                    grid_aggregate(rows.iter().map(|r| (r.point, None)), *resolution, Statistic::Count)?,
                    "statistic=count".to_string(),
                ),
                Stat::Median => {
                    let (Some(path), Some(prop)) = (properties, property) else {
                        return Err(Error::Validation(
                            "--stat median needs --properties and --property".into(),
                        ));
                    };
                    let table = tables::read_properties(path)?;
                    let classified: Vec<Classified> = rows
                        .iter()
                        .map(|r| Classified {
                            user: r.user,
                            point: r.point,
                            label: ArchetypeLabel::Intermediate,
                        })
                        .collect();
                    (
                        pipeline::property_grid(&classified, &table, *prop, *resolution)?,
                        format!("property={} statistic=median", prop.name()),
                    )
                }
            };
            emit(output.as_deref(), &tables::grid_tsv(&prov, &comment, &grid))?;
        }
        Command::Metrics { profiles, timelines, users, cutoff, timeline_cap, quote_over_reply, output } => {
            let prov = provenance("metrics", cmd);
            let profiles = read_profiles(profiles)?;
            let precedence = if *quote_over_reply {
                KindPrecedence::QuoteOverReply
            } else {
                KindPrecedence::ReplyOverQuote
            };
            let timelines = match timelines {
                Some(p) => load_timelines(p, precedence, *timeline_cap)?,
                None => BTreeMap::new(),
            };
            let ids = match users {
                Some(p) => recispace::edges::read_id_file(p)?,
                None => profiles.keys().copied().collect(),
            };
            let (records, skipped) = pipeline::property_records(&ids, &profiles, &timelines, *cutoff);
            for (u, why) in &skipped {
                eprintln!("skipped user {u}: {why}");
            }
            emit(output.as_deref(), &tables::properties_tsv(&prov, &records))?;
        }
        Command::Vocab {
            classification,
            timelines,
            stopwords,
            k,
            min_support,
            lang,
            all_kinds,
            no_hashtags,
            exclude_empty_users,
            output,
        } => {
            let prov = provenance("vocab", cmd);
            let classified = tables::read_classification(classification)?;
            let timelines = load_timelines(timelines, KindPrecedence::default(), None)?;
            let words = match stopwords {
                Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
                None => DEFAULT_STOPWORDS.to_string(),
            };
            let opts = TokenizerOptions {
                stopwords: parse_stopwords(&words),
                keep_hashtags: !no_hashtags,
            };
            let filter = DocumentFilter {
                lang: (lang != "any").then(|| lang.clone()),
                originals_only: !all_kinds,
            };
            let params = VocabParams {
                k: *k,
                min_support: *min_support,
                include_empty_users: !exclude_empty_users,
            };
            let result = pipeline::vocab_tables(&classified, &timelines, &filter, &opts, &params)?;
            let comment = format!(
                "filter=positive_association min_support={min_support} k={k} include_empty_users={} lang={lang} originals_only={} keep_hashtags={}",
                !exclude_empty_users, !all_kinds, !no_hashtags
            );
            emit(output.as_deref(), &tables::vocab_tsv(&prov, &comment, &result))?;
        }
        Command::Stats {
            classification,
            properties,
            property,
            groups: Groups::Archetype,
            letter_values,
            min_tail,
            output,
        } => {
            let prov = provenance("stats", cmd);
            let classified = tables::read_classification(classification)?;
            let table = tables::read_properties(properties)?;
            let props: Vec<Property> = if property.is_empty() {
                Property::ALL.to_vec()
            } else {
                property.clone()
            };
            let tests = pipeline::property_tests(&classified, &table, &props);
            emit(output.as_deref(), &tables::stats_tsv(&prov, &tests))?;
            if let Some(p) = letter_values {
                let opts = LetterValueOptions {
                    min_tail: *min_tail,
                    ..LetterValueOptions::default()
                };
                let lv = pipeline::property_letter_values(&classified, &table, &props, &opts);
                tables::write_text(p, &tables::letter_values_tsv(&prov, &lv))?;
            }
        }
        Command::Flows { edges, classification, corner_only, normalize, output } => {
            let prov = provenance("flows", cmd);
            let (store, reports) = load_store(&edges.sources()?, None, edges.policy())?;
            eprint!("{}", summarize_reports(&reports));
            let classified = tables::read_classification(classification)?;
            let m = pipeline::flow_matrix(&store, &classified, *corner_only);
            let text = match normalize {
                Normalize::None => tables::flow_counts_tsv(&prov, &m),
                Normalize::Rows => tables::normalized_tsv(&prov, "row", &normalize_rows(&m)),
                Normalize::Cols => tables::normalized_tsv(&prov, "column", &normalize_cols(&m)),
            };
            emit(output.as_deref(), &text)?;
        }
        Command::Synth { block_size, intermediate, helper_pool, clique_circulating, seed, output } => {
            let mut spec = PlantedSpec::four_corners(*block_size, *seed);
            spec.helper_pool = *helper_pool;
            for b in &mut spec.blocks {
                b.clique = *clique_circulating && b.label == ArchetypeLabel::Circulating;
            }
            if *intermediate > 0 {
                spec.blocks.push(BlockSpec::corner(ArchetypeLabel::Intermediate, *intermediate));
            }
            let out = write_synthetic(&spec, output)?;
            for f in &out.files {
                eprintln!("wrote {}", f.display());
            }
        }
        Command::Report { config, overrides, output_dir } => {
            let mut cfg = PipelineConfig::load(config)?;
            let cwd = std::env::current_dir().map_err(|e| Error::io(".", e))?;
            cfg.apply_overrides(overrides, &cwd)?;
            if let Some(dir) = output_dir {
                cfg.output_dir = dir.clone();
            }
            let manifest = pipeline::run_pipeline(&cfg)?;
            eprintln!(
                "wrote {} files to {}",
                manifest.outputs.len() + 1,
                cfg.output_dir.display()
            );
        }
        Command::Verify { manifest } => {
            let problems = verify_manifest(manifest)?;
            if !problems.is_empty() {
                let list: Vec<String> = problems.iter().map(|p| p.to_string()).collect();
                return Err(Error::Validation(list.join("\n")));
            }
            eprintln!("ok");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => ExitCode::from(3),
    }
}
