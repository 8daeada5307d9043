//! Edge and focal-user files.
//!
//! Edge files hold one `user<TAB>peer` row per line with decimal ids and an
//! optional `#` header. Large files are read in partitions of
//! [`PARTITION_LINES`] lines; each partition is parsed and sorted on the rayon
//! pool and the sorted partitions are merged.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use recispace_core::graph::{
    merge_edge_sets, EdgeStoreBuilder, IngestReport, MalformedPolicy,
};
use recispace_core::{Direction, EdgeStore, UserId};

use crate::tables::Provenance;
use crate::{Error, Result};

pub const PARTITION_LINES: usize = 1 << 20;
const SUB_PARTITION_LINES: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSource {
    pub path: PathBuf,
    pub direction: Direction,
}

fn build_partition(
    lines: &[String],
    offset: usize,
    direction: Direction,
    policy: MalformedPolicy,
) -> recispace_core::Result<(EdgeStore, IngestReport)> {
    let parts: Vec<_> = lines
        .par_chunks(SUB_PARTITION_LINES)
        .enumerate()
        .map(|(i, chunk)| {
            let mut b = EdgeStoreBuilder::new(direction, policy)
                .with_line_offset(offset + i * SUB_PARTITION_LINES);
            for line in chunk {
                b.push_line(line)?;
            }
            Ok(b.finish())
        })
        .collect::<recispace_core::Result<_>>()?;
    let mut report = IngestReport::default();
    let mut stores = Vec::with_capacity(parts.len());
    for (s, r) in parts {
        report.absorb(r);
        stores.push(s);
    }
    Ok((merge_edge_sets(stores), report))
}

pub fn read_edge_file(
    src: &EdgeSource,
    policy: MalformedPolicy,
) -> Result<(EdgeStore, IngestReport)> {
    let path = &src.path;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut stores = Vec::new();
    let mut report = IngestReport::default();
    let mut buf = Vec::with_capacity(PARTITION_LINES.min(1 << 16));
    let mut consumed = 0usize;
    let mut flush = |buf: &mut Vec<String>, consumed: &mut usize| -> Result<()> {
        let (s, r) = build_partition(buf, *consumed, src.direction, policy).map_err(|e| match e {
            recispace_core::Error::MalformedRow { line, reason } => Error::format(path, line, reason),
            other => other.into(),
        })?;
        *consumed += buf.len();
        buf.clear();
        stores.push(s);
        report.absorb(r);
        Ok(())
    };
    for line in reader.lines() {
        buf.push(line.map_err(|e| Error::io(path, e))?);
        if buf.len() == PARTITION_LINES {
            flush(&mut buf, &mut consumed)?;
        }
    }
    if !buf.is_empty() {
        flush(&mut buf, &mut consumed)?;
    }
    Ok((merge_edge_sets(stores), report))
}

/// Reads and merges every source; the report accumulates across files.
pub fn read_edge_sources(
    sources: &[EdgeSource],
    policy: MalformedPolicy,
) -> Result<(EdgeStore, Vec<(PathBuf, IngestReport)>)> {
    let mut stores = Vec::with_capacity(sources.len());
    let mut reports = Vec::with_capacity(sources.len());
    for src in sources {
        let (s, r) = read_edge_file(src, policy)?;
        stores.push(s);
        reports.push((src.path.clone(), r));
    }
    Ok((merge_edge_sets(stores), reports))
}

pub fn write_edge_file(path: &Path, prov: &Provenance, store: &EdgeStore) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    w.write_all(prov.line().as_bytes()).map_err(io)?;
    w.write_all(b"# src\tdst\n").map_err(io)?;
    let mut line = String::with_capacity(48);
    for e in store.edges() {
        line.clear();
        let _ = writeln!(line, "{}\t{}", e.src, e.dst);
        w.write_all(line.as_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// One id per line; blank and `#` lines ignored.
pub fn read_id_file(path: &Path) -> Result<Vec<UserId>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut ids = Vec::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        // tolerate tables whose first column is the id
        let first = line.split('\t').next().unwrap_or(line);
        if !header_seen && ids.is_empty() && first.parse::<u64>().is_err() {
            header_seen = true;
            continue;
        }
        ids.push(
            first
                .parse()
                .map_err(|e| Error::format(path, i + 1, format!("{first:?}: {e}")))?,
        );
    }
    Ok(ids)
}

pub fn write_id_file(path: &Path, prov: &Provenance, ids: &[UserId]) -> Result<()> {
    let mut out = prov.line();
    for id in ids {
        let _ = writeln!(out, "{id}");
    }
    crate::tables::write_text(path, &out)
}

pub fn summarize_reports(reports: &[(PathBuf, IngestReport)]) -> String {
    let mut out = String::new();
    for (path, r) in reports {
        let _ = writeln!(
            out,
            "{}: rows={} accepted={} self_edges={} malformed={}",
            path.display(),
            r.rows,
            r.accepted,
            r.self_edges,
            r.errors.len()
        );
        for e in r.errors.iter().take(20) {
            let _ = writeln!(out, "  line {}: {}", e.line, e.reason);
        }
        if r.errors.len() > 20 {
            let _ = writeln!(out, "  ... {} more", r.errors.len() - 20);
        }
    }
    out
}
