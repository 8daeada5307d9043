//! Tab-separated tables: the shared reader plus one writer per output kind.
//!
//! Every file this crate writes starts with a provenance comment
//! (`# producer=<subcommand> config=<hash> version=<version>`), followed by a
//! column header line. Readers skip `#` lines and locate columns by name.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use recispace_core::activity::{Property, UserPropertyRecord};
use recispace_core::flow::{FlowMatrix, NormalizedMatrix};
use recispace_core::reciprocity::{
    compute_reciprocity, followee_follower_ratio, GridSummary, ReciprocityPoint,
};
use recispace_core::stats::{LetterValueSummary, OmnibusResult, PairwiseResult};
use recispace_core::vocab::ChiSquareResult;
use recispace_core::{ArchetypeLabel, DegreeSummary, UserId};

use crate::{Error, Result};

pub const NA: &str = "NA";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub producer: String,
    pub config_hash: String,
}

impl Provenance {
    pub fn new(producer: impl Into<String>, config_hash: impl Into<String>) -> Self {
        Self {
            producer: producer.into(),
            config_hash: config_hash.into(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "# producer={} config={} version={}\n",
            self.producer,
            self.config_hash,
            env!("CARGO_PKG_VERSION")
        )
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) if !x.is_nan() => x.to_string(),
        _ => NA.to_string(),
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// A parsed TSV file.
#[derive(Debug, Clone)]
pub struct Table {
    pub path: PathBuf,
    pub header: Vec<String>,
    /// `(1-based line number, fields)`.
    pub rows: Vec<(usize, Vec<String>)>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(path, &text)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut header = None;
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let fields: Vec<String> = line.split('\t').map(str::to_string).collect();
            if header.is_none() {
                header = Some(fields);
            } else {
                rows.push((i + 1, fields));
            }
        }
        let header = header.ok_or_else(|| Error::format(path, 0, "missing column header"))?;
        Ok(Self {
            path: path.to_path_buf(),
            header,
            rows,
        })
    }

    pub fn col(&self, name: &str) -> Result<usize> {
        self.opt_col(name)
            .ok_or_else(|| Error::format(&self.path, 0, format!("missing column {name:?}")))
    }

    pub fn opt_col(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn field<'a>(&self, line: usize, row: &'a [String], col: usize) -> Result<&'a str> {
        row.get(col)
            .map(String::as_str)
            .ok_or_else(|| Error::format(&self.path, line, "row has too few fields"))
    }

    pub fn parse_field<T: std::str::FromStr>(&self, line: usize, row: &[String], col: usize) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.field(line, row, col)?;
        raw.trim().parse().map_err(|e| {
            Error::format(&self.path, line, format!("{:?}: {e}", self.header[col]))
        })
    }

    /// Parses an optional float; `NA` and empty cells are `None`.
    pub fn opt_f64(&self, line: usize, row: &[String], col: usize) -> Result<Option<f64>> {
        let raw = self.field(line, row, col)?.trim();
        if raw.is_empty() || raw == NA {
            Ok(None)
        } else {
            self.parse_field(line, row, col).map(Some)
        }
    }
}

pub fn degrees_tsv(prov: &Provenance, rows: &[DegreeSummary]) -> String {
    let mut out = prov.line();
    out.push_str("user\tk_i\tk_o\tk_m\n");
    for d in rows {
        let _ = writeln!(out, "{}\t{}\t{}\t{}", d.user, d.k_i, d.k_o, d.k_m);
    }
    out
}

pub fn points_tsv(prov: &Provenance, extra_comment: Option<&str>, rows: &[DegreeSummary]) -> String {
    let mut out = prov.line();
    if let Some(c) = extra_comment {
        let _ = writeln!(out, "# {c}");
    }
    out.push_str("user\tk_i\tk_o\tk_m\tr_in\tr_out\tr_f\n");
    for d in rows {
        let p = compute_reciprocity(d);
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            d.user,
            d.k_i,
            d.k_o,
            d.k_m,
            p.r_in,
            p.r_out,
            followee_follower_ratio(d)
        );
    }
    out
}

/// A user's position, with degrees when the source table carries them.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRow {
    pub user: UserId,
    pub point: ReciprocityPoint,
    pub degrees: Option<DegreeSummary>,
}

/// Reads any table with `user`, `r_in`, `r_out` columns (points or
/// classification files).
pub fn read_points(path: &Path) -> Result<Vec<PointRow>> {
    let t = Table::read(path)?;
    let (cu, ci, co) = (t.col("user")?, t.col("r_in")?, t.col("r_out")?);
    let ks = match (t.opt_col("k_i"), t.opt_col("k_o"), t.opt_col("k_m")) {
        (Some(a), Some(b), Some(c)) => Some((a, b, c)),
        _ => None,
    };
    let mut out = Vec::with_capacity(t.rows.len());
    for (line, row) in &t.rows {
        let user: UserId = t.parse_field(*line, row, cu)?;
        let point = ReciprocityPoint::new(t.parse_field(*line, row, ci)?, t.parse_field(*line, row, co)?)
            .map_err(|e| Error::format(path, *line, e.to_string()))?;
        let degrees = match ks {
            Some((a, b, c)) => Some(DegreeSummary {
                user,
                k_i: t.parse_field(*line, row, a)?,
                k_o: t.parse_field(*line, row, b)?,
                k_m: t.parse_field(*line, row, c)?,
            }),
            None => None,
        };
        out.push(PointRow {
            user,
            point,
            degrees,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classified {
    pub user: UserId,
    pub point: ReciprocityPoint,
    pub label: ArchetypeLabel,
}

pub fn classification_tsv(prov: &Provenance, rows: &[Classified]) -> String {
    let mut out = prov.line();
    out.push_str("user\tr_in\tr_out\tlabel\n");
    for c in rows {
        let _ = writeln!(out, "{}\t{}\t{}\t{}", c.user, c.point.r_in, c.point.r_out, c.label);
    }
    out
}

pub fn read_classification(path: &Path) -> Result<Vec<Classified>> {
    let t = Table::read(path)?;
    let (cu, ci, co, cl) = (t.col("user")?, t.col("r_in")?, t.col("r_out")?, t.col("label")?);
    let mut out = Vec::with_capacity(t.rows.len());
    for (line, row) in &t.rows {
        let point = ReciprocityPoint::new(t.parse_field(*line, row, ci)?, t.parse_field(*line, row, co)?)
            .map_err(|e| Error::format(path, *line, e.to_string()))?;
        out.push(Classified {
            user: t.parse_field(*line, row, cu)?,
            point,
            label: t
                .field(*line, row, cl)?
                .parse()
                .map_err(|e: recispace_core::Error| Error::format(path, *line, e.to_string()))?,
        });
    }
    Ok(out)
}

pub fn grid_tsv(prov: &Provenance, comment: &str, grid: &GridSummary) -> String {
    let mut out = prov.line();
    let _ = writeln!(out, "# {comment}");
    out.push_str("row\tcol\tr_in_low\tr_in_high\tr_out_low\tr_out_high\tcount\tvalue\n");
    for c in &grid.cells {
        let (a, b, lo, hi) = c.bounds(grid.resolution);
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            c.row,
            c.col,
            a,
            b,
            lo,
            hi,
            c.count,
            fmt_opt(c.value)
        );
    }
    out
}

/// Property values per user, as read back from a properties table.
pub type PropertyTable = BTreeMap<UserId, BTreeMap<Property, Option<f64>>>;

pub fn property_table(records: &[UserPropertyRecord]) -> PropertyTable {
    records
        .iter()
        .map(|r| (r.user, Property::ALL.iter().map(|&p| (p, p.value(r))).collect()))
        .collect()
}

pub fn properties_tsv(prov: &Provenance, records: &[UserPropertyRecord]) -> String {
    let mut out = prov.line();
    out.push_str("user");
    for p in Property::ALL {
        let _ = write!(out, "\t{p}");
    }
    out.push('\n');
    for r in records {
        let _ = write!(out, "{}", r.user);
        for p in Property::ALL {
            let _ = write!(out, "\t{}", fmt_opt(p.value(r)));
        }
        out.push('\n');
    }
    out
}

pub fn read_properties(path: &Path) -> Result<PropertyTable> {
    let t = Table::read(path)?;
    let cu = t.col("user")?;
    let cols: Vec<(Property, usize)> = Property::ALL
        .iter()
        .filter_map(|&p| t.opt_col(p.name()).map(|c| (p, c)))
        .collect();
    let mut out = PropertyTable::new();
    for (line, row) in &t.rows {
        let user: UserId = t.parse_field(*line, row, cu)?;
        let mut values = BTreeMap::new();
        for &(p, c) in &cols {
            values.insert(p, t.opt_f64(*line, row, c)?);
        }
        out.insert(user, values);
    }
    Ok(out)
}

pub fn vocab_tsv(
    prov: &Provenance,
    comment: &str,
    tables: &BTreeMap<ArchetypeLabel, Vec<ChiSquareResult>>,
) -> String {
    let mut out = prov.line();
    let _ = writeln!(out, "# {comment}");
    out.push_str("category\trank\tword\tchi_square\tn11\tn10\tn01\tn00\n");
    for (cat, words) in tables {
        for (rank, w) in words.iter().enumerate() {
            let c = &w.counts;
            let _ = writeln!(
                out,
                "{cat}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                rank + 1,
                w.word,
                w.score,
                c.n11,
                c.n10,
                c.n01,
                c.n00
            );
        }
    }
    out
}

/// One property's omnibus and pairwise results.
#[derive(Debug, Clone)]
pub struct PropertyTests {
    pub property: Property,
    pub outcome: std::result::Result<(OmnibusResult, Vec<PairwiseResult<ArchetypeLabel>>), String>,
}

pub fn stats_tsv(prov: &Provenance, tests: &[PropertyTests]) -> String {
    let mut out = prov.line();
    out.push_str("property\ttest\tgroup\tstatistic\tp_raw\tp_adjusted\n");
    for t in tests {
        match &t.outcome {
            Ok((kw, pairs)) => {
                let _ = writeln!(
                    out,
                    "{}\tkruskal_wallis\tall(df={})\t{}\t{}\t{}",
                    t.property, kw.degrees_of_freedom, kw.h_statistic, kw.p_value, kw.p_value
                );
                for p in pairs {
                    let _ = writeln!(
                        out,
                        "{}\tconover\t{}|{}\t{}\t{}\t{}",
                        t.property, p.pair.0, p.pair.1, p.t_statistic, p.p_raw, p.p_adjusted
                    );
                }
            }
            Err(reason) => {
                let _ = writeln!(out, "# skipped property={} reason={reason}", t.property);
            }
        }
    }
    out
}

pub fn letter_values_tsv(
    prov: &Provenance,
    rows: &[(Property, ArchetypeLabel, LetterValueSummary)],
) -> String {
    let mut out = prov.line();
    out.push_str("property\tgroup\tn\tlevel\tdepth\tlower\tupper\n");
    for (prop, label, lv) in rows {
        for l in &lv.levels {
            let _ = writeln!(
                out,
                "{prop}\t{label}\t{}\t{}\t{}\t{}\t{}",
                lv.n, l.label, l.depth, l.lower, l.upper
            );
        }
    }
    out
}

pub fn flow_counts_tsv(prov: &Provenance, m: &FlowMatrix) -> String {
    let mut out = prov.line();
    let _ = writeln!(out, "# rows=source columns=target skipped_edges={}", m.skipped);
    out.push_str("from\\to");
    for l in &m.labels {
        let _ = write!(out, "\t{l}");
    }
    out.push('\n');
    for (l, row) in m.labels.iter().zip(&m.counts) {
        let _ = write!(out, "{l}");
        for c in row {
            let _ = write!(out, "\t{c}");
        }
        out.push('\n');
    }
    out
}

pub fn normalized_tsv(prov: &Provenance, axis: &str, m: &NormalizedMatrix) -> String {
    let mut out = prov.line();
    let empty: Vec<String> = m
        .labels
        .iter()
        .zip(&m.empty)
        .filter(|(_, e)| **e)
        .map(|(l, _)| l.to_string())
        .collect();
    let _ = writeln!(out, "# normalized_by={axis} empty={}", empty.join(","));
    out.push_str("from\\to");
    for l in &m.labels {
        let _ = write!(out, "\t{l}");
    }
    out.push('\n');
    for (l, row) in m.labels.iter().zip(&m.values) {
        let _ = write!(out, "{l}");
        for v in row {
            let _ = write!(out, "\t{v}");
        }
        out.push('\n');
    }
    out
}
