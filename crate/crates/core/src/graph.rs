//! Directed follow edges, deduplicated edge stores and degree counting.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct UserId(pub u64);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for UserId {
    type Err = core::num::ParseIntError;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        s.trim().parse().map(UserId)
    }
}

/// `src` follows `dst`. Ordered by `(src, dst)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DirectedEdge {
    pub src: UserId,
    pub dst: UserId,
}

impl DirectedEdge {
    /// Returns `None` for self-edges.
    pub fn new(src: UserId, dst: UserId) -> Option<Self> {
        (src != dst).then_some(Self { src, dst })
    }

    pub fn reversed(self) -> Self {
        Self {
            src: self.dst,
            dst: self.src,
        }
    }
}

/// How the two columns of an edge row are to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `user<TAB>peer` means user follows peer (followee files).
    Follows,
    /// `user<TAB>peer` means peer follows user (follower files).
    FollowedBy,
}

impl Direction {
    pub fn orient(self, user: UserId, peer: UserId) -> (UserId, UserId) {
        match self {
            Direction::Follows => (user, peer),
            Direction::FollowedBy => (peer, user),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Follows => "follows",
            Direction::FollowedBy => "followed-by",
        }
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "follows" | "followees" => Ok(Direction::Follows),
            "followed-by" | "is-followed-by" | "followers" => Ok(Direction::FollowedBy),
            other => Err(Error::InvalidParameter(alloc::format!(
                "unknown direction tag {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MalformedPolicy {
    #[default]
    Skip,
    Abort,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    /// 1-based line number within the ingested stream.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub rows: usize,
    pub accepted: usize,
    pub self_edges: usize,
    pub errors: Vec<RowError>,
}

impl IngestReport {
    pub fn absorb(&mut self, other: IngestReport) {
        self.rows += other.rows;
        self.accepted += other.accepted;
        self.self_edges += other.self_edges;
        self.errors.extend(other.errors);
    }
}

/// Deduplicated edge set plus the focal users whose ego networks are complete.
///
/// Edges are kept sorted by `(src, dst)`, so membership is a binary search and
/// merging two stores is a linear merge.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeStore {
    edges: Vec<DirectedEdge>,
    focal: Vec<UserId>,
}

impl EdgeStore {
    pub fn from_edges<I: IntoIterator<Item = DirectedEdge>>(edges: I) -> Self {
        let mut edges: Vec<_> = edges.into_iter().collect();
        edges.sort_unstable();
        edges.dedup();
        Self {
            edges,
            focal: Vec::new(),
        }
    }

    /// Convenience for tests and fixtures; self-pairs are dropped.
    pub fn from_pairs<I: IntoIterator<Item = (u64, u64)>>(pairs: I) -> Self {
        Self::from_edges(
            pairs
                .into_iter()
                .filter_map(|(s, d)| DirectedEdge::new(UserId(s), UserId(d))),
        )
    }

    pub fn with_focal<I: IntoIterator<Item = UserId>>(mut self, focal: I) -> Self {
        self.focal.extend(focal);
        self.focal.sort_unstable();
        self.focal.dedup();
        self
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[DirectedEdge] {
        &self.edges
    }

    pub fn focal(&self) -> &[UserId] {
        &self.focal
    }

    pub fn is_focal(&self, user: UserId) -> bool {
        self.focal.binary_search(&user).is_ok()
    }

    pub fn contains(&self, src: UserId, dst: UserId) -> bool {
        self.edges.binary_search(&DirectedEdge { src, dst }).is_ok()
    }

    /// Edges leaving `user`, sorted by destination.
    pub fn out_edges(&self, user: UserId) -> &[DirectedEdge] {
        let lo = self.edges.partition_point(|e| e.src < user);
        let hi = self.edges.partition_point(|e| e.src <= user);
        &self.edges[lo..hi]
    }

    /// Sorted, deduplicated list of every user that appears on an edge.
    pub fn endpoint_users(&self) -> Vec<UserId> {
        let mut users: Vec<UserId> = self
            .edges
            .iter()
            .flat_map(|e| [e.src, e.dst])
            .collect();
        users.sort_unstable();
        users.dedup();
        users
    }

    pub fn transpose(&self) -> Self {
        let mut store = Self::from_edges(self.edges.iter().map(|e| e.reversed()));
        store.focal = self.focal.clone();
        store
    }

    /// Union of two stores, both edge sets and focal sets.
    pub fn union(&self, other: &Self) -> Self {
        Self {
            edges: merge_sorted(&self.edges, &other.edges),
            focal: merge_sorted(&self.focal, &other.focal),
        }
    }
}

fn merge_sorted<T: Ord + Copy>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            core::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            core::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            core::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Union of any number of stores. Pairwise tree reduction keeps the total
/// work at O(n log k) for k partitions.
pub fn merge_edge_sets<I: IntoIterator<Item = EdgeStore>>(stores: I) -> EdgeStore {
    let mut level: Vec<EdgeStore> = stores.into_iter().collect();
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a.union(&b)),
                None => next.push(a),
            }
        }
        level = next;
    }
    level.pop().unwrap_or_default()
}

/// Incremental row-by-row edge ingestion.
#[derive(Debug)]
pub struct EdgeStoreBuilder {
    direction: Direction,
    policy: MalformedPolicy,
    edges: Vec<DirectedEdge>,
    report: IngestReport,
    line: usize,
}

impl EdgeStoreBuilder {
    pub fn new(direction: Direction, policy: MalformedPolicy) -> Self {
        Self {
            direction,
            policy,
            edges: Vec::new(),
            report: IngestReport::default(),
            line: 0,
        }
    }

    /// Starts line numbering after `offset` lines, for partitioned input.
    pub fn with_line_offset(mut self, offset: usize) -> Self {
        self.line = offset;
        self
    }

    pub fn push_line(&mut self, raw: &str) -> Result<()> {
        self.line += 1;
        let line = raw.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.starts_with('#') {
            return Ok(());
        }
        self.report.rows += 1;
        match parse_row(line) {
            Ok((user, peer)) => {
                let (src, dst) = self.direction.orient(user, peer);
                match DirectedEdge::new(src, dst) {
                    Some(edge) => {
                        self.report.accepted += 1;
                        self.edges.push(edge);
                    }
                    None => self.report.self_edges += 1,
                }
                Ok(())
            }
            Err(reason) => match self.policy {
                MalformedPolicy::Skip => {
                    self.report.errors.push(RowError {
                        line: self.line,
                        reason,
                    });
                    Ok(())
                }
                MalformedPolicy::Abort => Err(Error::MalformedRow {
                    line: self.line,
                    reason,
                }),
            },
        }
    }

    pub fn finish(self) -> (EdgeStore, IngestReport) {
        (EdgeStore::from_edges(self.edges), self.report)
    }
}

fn parse_row(line: &str) -> core::result::Result<(UserId, UserId), String> {
    let mut fields = line.split('\t');
    let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
        return Err("expected exactly two tab-separated fields".to_string());
    };
    let parse = |s: &str| {
        s.trim()
            .parse::<u64>()
            .map(UserId)
            .map_err(|e| alloc::format!("{s:?}: {e}"))
    };
    Ok((parse(a)?, parse(b)?))
}

/// Reads `user<TAB>peer` rows, normalizes them to `src -> dst` according to
/// `direction`, and deduplicates. Blank lines and `#` lines are ignored.
pub fn ingest_edges<'a, I>(
    lines: I,
    direction: Direction,
    policy: MalformedPolicy,
) -> Result<(EdgeStore, IngestReport)>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut builder = EdgeStoreBuilder::new(direction, policy);
    for line in lines {
        builder.push_line(line)?;
    }
    Ok(builder.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct DegreeSummary {
    pub user: UserId,
    /// Followers.
    pub k_i: u64,
    /// Followees.
    pub k_o: u64,
    /// Users connected in both directions.
    pub k_m: u64,
}

impl DegreeSummary {
    pub fn zero(user: UserId) -> Self {
        Self {
            user,
            ..Self::default()
        }
    }

    pub fn total_degree(&self) -> u64 {
        self.k_i + self.k_o
    }
}

/// Degree summaries for every endpoint of an edge store.
#[derive(Debug, Clone, Default)]
pub struct DegreeTable {
    summaries: Vec<DegreeSummary>,
}

impl DegreeTable {
    pub fn build(store: &EdgeStore) -> Self {
        let users = store.endpoint_users();
        let mut summaries: Vec<DegreeSummary> =
            users.iter().map(|&u| DegreeSummary::zero(u)).collect();
        let index = |u: UserId| users.binary_search(&u).expect("endpoint indexed");
        for e in store.edges() {
            let s = index(e.src);
            let d = index(e.dst);
            summaries[s].k_o += 1;
            summaries[d].k_i += 1;
            // each mutual pair is seen from its smaller endpoint only
            if e.src < e.dst && store.contains(e.dst, e.src) {
                summaries[s].k_m += 1;
                summaries[d].k_m += 1;
            }
        }
        Self { summaries }
    }

    pub fn get(&self, user: UserId) -> DegreeSummary {
        match self.summaries.binary_search_by_key(&user, |s| s.user) {
            Ok(i) => self.summaries[i],
            Err(_) => DegreeSummary::zero(user),
        }
    }

    pub fn summaries(&self) -> &[DegreeSummary] {
        &self.summaries
    }
}

/// One summary per requested user, in request order. Users without edges
/// get all-zero summaries.
pub fn compute_degree_summaries<I>(store: &EdgeStore, users: I) -> Vec<DegreeSummary>
where
    I: IntoIterator<Item = UserId>,
{
    let table = DegreeTable::build(store);
    users.into_iter().map(|u| table.get(u)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReciprocityScope {
    #[default]
    AllEndpoints,
    /// Only pairs whose two endpoints are both focal users.
    FocalOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReciprocityRatio {
    pub mutual_pairs: u64,
    pub connected_pairs: u64,
    pub ratio: f64,
}

/// Fraction of connected unordered pairs that are connected in both
/// directions.
pub fn overall_reciprocity(store: &EdgeStore, scope: ReciprocityScope) -> Result<ReciprocityRatio> {
    let mut directed = 0u64;
    let mut with_reverse = 0u64;
    for e in store.edges() {
        if scope == ReciprocityScope::FocalOnly && !(store.is_focal(e.src) && store.is_focal(e.dst))
        {
            continue;
        }
        directed += 1;
        if store.contains(e.dst, e.src) {
            with_reverse += 1;
        }
    }
    if directed == 0 {
        return Err(Error::Empty("edge set"));
    }
    let mutual_pairs = with_reverse / 2;
    let connected_pairs = directed - mutual_pairs;
    Ok(ReciprocityRatio {
        mutual_pairs,
        connected_pairs,
        ratio: mutual_pairs as f64 / connected_pairs as f64,
    })
}
