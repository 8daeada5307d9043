//! Reciprocity coordinates, archetype labels and grid aggregation.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::graph::DegreeSummary;
use crate::{Error, Result};

/// Position of a user in reciprocity space. Both coordinates lie in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReciprocityPoint {
    /// Share of followers that are followed back, smoothed.
    pub r_in: f64,
    /// Share of followees that follow back, smoothed.
    pub r_out: f64,
}

impl ReciprocityPoint {
    pub fn new(r_in: f64, r_out: f64) -> Result<Self> {
        let ok = |r: f64| r > 0.0 && r <= 1.0;
        if ok(r_in) && ok(r_out) {
            Ok(Self { r_in, r_out })
        } else {
            Err(Error::InvalidParameter(alloc::format!(
                "reciprocity point ({r_in}, {r_out}) outside (0,1]^2"
            )))
        }
    }
}

/// `r_in = (k_m+1)/(k_i+1)`, `r_out = (k_m+1)/(k_o+1)`. The +1 acts as a
/// self-edge, so an isolated user sits at (1, 1).
pub fn compute_reciprocity(d: &DegreeSummary) -> ReciprocityPoint {
    let m = d.k_m as f64 + 1.0;
    ReciprocityPoint {
        r_in: m / (d.k_i as f64 + 1.0),
        r_out: m / (d.k_o as f64 + 1.0),
    }
}

/// Smoothed followee-to-follower ratio `(k_o+1)/(k_i+1)`, equal to `r_in / r_out`.
pub fn followee_follower_ratio(d: &DegreeSummary) -> f64 {
    (d.k_o as f64 + 1.0) / (d.k_i as f64 + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArchetypeLabel {
    /// Low r_in, low r_out.
    Flowing,
    /// High r_in, low r_out.
    Accumulating,
    /// Low r_in, high r_out.
    Feeding,
    /// High r_in, high r_out.
    Circulating,
    Intermediate,
}

impl ArchetypeLabel {
    pub const ALL: [ArchetypeLabel; 5] = [
        ArchetypeLabel::Flowing,
        ArchetypeLabel::Accumulating,
        ArchetypeLabel::Feeding,
        ArchetypeLabel::Circulating,
        ArchetypeLabel::Intermediate,
    ];

    pub const CORNERS: [ArchetypeLabel; 4] = [
        ArchetypeLabel::Flowing,
        ArchetypeLabel::Accumulating,
        ArchetypeLabel::Feeding,
        ArchetypeLabel::Circulating,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ArchetypeLabel::Flowing => "Flowing",
            ArchetypeLabel::Accumulating => "Accumulating",
            ArchetypeLabel::Feeding => "Feeding",
            ArchetypeLabel::Circulating => "Circulating",
            ArchetypeLabel::Intermediate => "Intermediate",
        }
    }

    pub fn is_corner(self) -> bool {
        self != ArchetypeLabel::Intermediate
    }
}

impl fmt::Display for ArchetypeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ArchetypeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let label = match s.trim().to_ascii_lowercase().as_str() {
            "flowing" | "flw" => ArchetypeLabel::Flowing,
            "accumulating" | "acc" => ArchetypeLabel::Accumulating,
            "feeding" | "fed" => ArchetypeLabel::Feeding,
            "circulating" | "cir" => ArchetypeLabel::Circulating,
            "intermediate" | "other" | "oth" => ArchetypeLabel::Intermediate,
            _ => {
                return Err(Error::InvalidParameter(alloc::format!(
                    "unknown archetype {s:?}"
                )))
            }
        };
        Ok(label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierConfig {
    low: f64,
    high: f64,
}

impl ClassifierConfig {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if 0.0 < low && low < high && high < 1.0 {
            Ok(Self { low, high })
        } else {
            Err(Error::InvalidParameter(alloc::format!(
                "thresholds must satisfy 0 < low < high < 1, got {low} and {high}"
            )))
        }
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.high
    }
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            low: 0.25,
            high: 0.75,
        }
    }
}

/// Corner regions use inclusive bounds (`<= low`, `>= high`); everything else
/// is Intermediate.
pub fn classify_archetype(p: ReciprocityPoint, cfg: &ClassifierConfig) -> ArchetypeLabel {
    let in_low = p.r_in <= cfg.low;
    let in_high = p.r_in >= cfg.high;
    let out_low = p.r_out <= cfg.low;
    let out_high = p.r_out >= cfg.high;
    match (in_low, in_high, out_low, out_high) {
        (true, _, _, true) => ArchetypeLabel::Feeding,
        (_, true, true, _) => ArchetypeLabel::Accumulating,
        (true, _, true, _) => ArchetypeLabel::Flowing,
        (_, true, _, true) => ArchetypeLabel::Circulating,
        _ => ArchetypeLabel::Intermediate,
    }
}

/// Cell index `(row, col)`: the row follows r_out, the column follows r_in.
/// Cells are half-open `[k/res, (k+1)/res)` except the last, which also
/// holds 1.0.
pub fn bin_to_grid(p: ReciprocityPoint, resolution: usize) -> (usize, usize) {
    let axis = |r: f64| {
        let top = resolution.saturating_sub(1);
        let idx = libm::floor(r * resolution as f64);
        if idx <= 0.0 {
            0
        } else {
            (idx as usize).min(top)
        }
    };
    (axis(p.r_out), axis(p.r_in))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Median,
    Count,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub row: usize,
    pub col: usize,
    /// Users whose point falls in the cell.
    pub count: usize,
    /// `None` marks an empty cell (or a cell without any usable value).
    pub value: Option<f64>,
}

impl GridCell {
    /// `(r_in_low, r_in_high, r_out_low, r_out_high)`.
    pub fn bounds(&self, resolution: usize) -> (f64, f64, f64, f64) {
        let r = resolution as f64;
        (
            self.col as f64 / r,
            (self.col + 1) as f64 / r,
            self.row as f64 / r,
            (self.row + 1) as f64 / r,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSummary {
    pub resolution: usize,
    pub statistic: Statistic,
    /// Row-major, `resolution * resolution` cells.
    pub cells: Vec<GridCell>,
}

impl GridSummary {
    pub fn cell(&self, row: usize, col: usize) -> &GridCell {
        &self.cells[row * self.resolution + col]
    }

    pub fn total_count(&self) -> usize {
        self.cells.iter().map(|c| c.count).sum()
    }
}

/// Median with the mean of the two middle values for even counts. NaNs must
/// be filtered out by the caller.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

/// Aggregates one property over the grid. Missing (`None` or NaN) values
/// still count toward the cell population but not toward its median.
pub fn grid_aggregate<I>(points: I, resolution: usize, statistic: Statistic) -> Result<GridSummary>
where
    I: IntoIterator<Item = (ReciprocityPoint, Option<f64>)>,
{
    if resolution == 0 {
        return Err(Error::InvalidParameter("grid resolution must be >= 1".into()));
    }
    let n_cells = resolution * resolution;
    let mut counts = alloc::vec![0usize; n_cells];
    let mut values: Vec<Vec<f64>> = alloc::vec![Vec::new(); n_cells];
    for (p, v) in points {
        let (row, col) = bin_to_grid(p, resolution);
        let idx = row * resolution + col;
        counts[idx] += 1;
        if statistic == Statistic::Median {
            if let Some(v) = v.filter(|v| !v.is_nan()) {
                values[idx].push(v);
            }
        }
    }
    let cells = (0..n_cells)
        .map(|idx| {
            let count = counts[idx];
            let value = match statistic {
                Statistic::Count => (count > 0).then_some(count as f64),
                Statistic::Median => median(&mut values[idx]),
            };
            GridCell {
                row: idx / resolution,
                col: idx % resolution,
                count,
                value,
            }
        })
        .collect();
    Ok(GridSummary {
        resolution,
        statistic,
        cells,
    })
}

/// Population density over the grid.
pub fn density_map<I>(points: I, resolution: usize) -> Result<GridSummary>
where
    I: IntoIterator<Item = ReciprocityPoint>,
{
    grid_aggregate(
        points.into_iter().map(|p| (p, None)),
        resolution,
        Statistic::Count,
    )
}
