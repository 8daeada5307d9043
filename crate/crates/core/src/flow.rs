//! Edge counts between archetypes and their row/column normalizations.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::graph::{EdgeStore, UserId};
use crate::reciprocity::ArchetypeLabel;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowMatrix {
    pub labels: Vec<ArchetypeLabel>,
    /// `counts[i][j]`: edges from a user labeled `labels[i]` to one labeled `labels[j]`.
    pub counts: Vec<Vec<u64>>,
    /// Edges with at least one endpoint outside the label map or the label order.
    pub skipped: u64,
}

impl FlowMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn transpose(&self) -> Self {
        let l = self.labels.len();
        let counts = (0..l)
            .map(|i| (0..l).map(|j| self.counts[j][i]).collect())
            .collect();
        Self {
            labels: self.labels.clone(),
            counts,
            skipped: self.skipped,
        }
    }
}

pub fn archetype_flow_counts(
    store: &EdgeStore,
    labels: &BTreeMap<UserId, ArchetypeLabel>,
    order: &[ArchetypeLabel],
) -> FlowMatrix {
    let l = order.len();
    let slot = |u: &UserId| {
        labels
            .get(u)
            .and_then(|lab| order.iter().position(|o| o == lab))
    };
    let mut counts = alloc::vec![alloc::vec![0u64; l]; l];
    let mut skipped = 0;
    for e in store.edges() {
        match (slot(&e.src), slot(&e.dst)) {
            (Some(i), Some(j)) => counts[i][j] += 1,
            _ => skipped += 1,
        }
    }
    FlowMatrix {
        labels: order.to_vec(),
        counts,
        skipped,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedMatrix {
    pub labels: Vec<ArchetypeLabel>,
    pub values: Vec<Vec<f64>>,
    /// Rows (or columns, for column normalization) whose raw sum was zero.
    pub empty: Vec<bool>,
}

/// Following tendency: each row divided by its sum.
pub fn normalize_rows(m: &FlowMatrix) -> NormalizedMatrix {
    let mut empty = Vec::with_capacity(m.labels.len());
    let values = m
        .counts
        .iter()
        .map(|row| {
            let sum: u64 = row.iter().sum();
            empty.push(sum == 0);
            row.iter()
                .map(|&c| if sum == 0 { 0.0 } else { c as f64 / sum as f64 })
                .collect()
        })
        .collect();
    NormalizedMatrix {
        labels: m.labels.clone(),
        values,
        empty,
    }
}

/// Follower tendency: each column divided by its sum.
pub fn normalize_cols(m: &FlowMatrix) -> NormalizedMatrix {
    let t = normalize_rows(&m.transpose());
    let l = t.labels.len();
    NormalizedMatrix {
        values: (0..l)
            .map(|i| (0..l).map(|j| t.values[j][i]).collect())
            .collect(),
        labels: t.labels,
        empty: t.empty,
    }
}
