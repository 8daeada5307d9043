//! Rank-based group comparisons: Kruskal-Wallis, Conover-Iman pairwise
//! tests, Holm step-down adjustment, and letter-value summaries.

use alloc::string::String;
use alloc::vec::Vec;

use crate::special::{chi_square_sf, student_t_two_sided};
use crate::{Error, Result};

/// Labeled groups of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedSample<L> {
    groups: Vec<(L, Vec<f64>)>,
}

impl<L: Clone> GroupedSample<L> {
    /// Requires at least two groups, each non-empty and NaN-free.
    pub fn new(groups: Vec<(L, Vec<f64>)>) -> Result<Self> {
        if groups.len() < 2 {
            return Err(Error::InvalidParameter("need at least two groups".into()));
        }
        if groups.iter().any(|(_, v)| v.is_empty()) {
            return Err(Error::InvalidParameter("empty group".into()));
        }
        if groups.iter().any(|(_, v)| v.iter().any(|x| x.is_nan())) {
            return Err(Error::InvalidParameter("NaN observation".into()));
        }
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[(L, Vec<f64>)] {
        &self.groups
    }

    pub fn total(&self) -> usize {
        self.groups.iter().map(|(_, v)| v.len()).sum()
    }
}

/// Average ranks (1-based) and the tie sum `Σ (t³ − t)` over tie blocks.
pub fn midranks(values: &[f64]) -> (Vec<f64>, f64) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0.0; n];
    let mut ties = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j share the average of ranks i+1..=j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

struct RankedGroups {
    n: usize,
    sizes: Vec<usize>,
    mean_ranks: Vec<f64>,
    sum_sq_ranks: f64,
    ties: f64,
}

fn rank_groups<L: Clone>(sample: &GroupedSample<L>) -> RankedGroups {
    let pooled: Vec<f64> = sample.groups.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    let (ranks, ties) = midranks(&pooled);
    let mut sizes = Vec::with_capacity(sample.groups.len());
    let mut mean_ranks = Vec::with_capacity(sample.groups.len());
    let mut offset = 0;
    for (_, v) in &sample.groups {
        let sum: f64 = ranks[offset..offset + v.len()].iter().sum();
        sizes.push(v.len());
        mean_ranks.push(sum / v.len() as f64);
        offset += v.len();
    }
    RankedGroups {
        n: pooled.len(),
        sizes,
        mean_ranks,
        sum_sq_ranks: ranks.iter().map(|r| r * r).sum(),
        ties,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmnibusResult {
    /// Tie-corrected H.
    pub h_statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

/// Kruskal-Wallis H on midranks, divided by the tie correction
/// `1 − Σ(t³−t)/(N³−N)`; p from the chi-square tail with k−1 df.
pub fn kruskal_wallis<L: Clone>(sample: &GroupedSample<L>) -> Result<OmnibusResult> {
    let rg = rank_groups(sample);
    if rg.n < 3 {
        return Err(Error::InvalidParameter("need at least 3 observations".into()));
    }
    let n = rg.n as f64;
    let correction = 1.0 - rg.ties / (n * n * n - n);
    if correction <= 0.0 {
        return Err(Error::Degenerate("all observations are identical"));
    }
    let center = (n + 1.0) / 2.0;
    let spread: f64 = rg
        .sizes
        .iter()
        .zip(&rg.mean_ranks)
        .map(|(&ni, &r)| ni as f64 * (r - center) * (r - center))
        .sum();
    let h = 12.0 / (n * (n + 1.0)) * spread / correction;
    let df = rg.sizes.len() - 1;
    Ok(OmnibusResult {
        h_statistic: h,
        degrees_of_freedom: df,
        p_value: chi_square_sf(h, df as f64),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseResult<L> {
    pub pair: (L, L),
    pub t_statistic: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
}

/// Conover-Iman pairwise comparisons for every pair `i < j` in group order.
///
/// `t = (R̄ᵢ − R̄ⱼ) / sqrt(S² · (N−1−H)/(N−k) · (1/nᵢ + 1/nⱼ))` with
/// `S² = (Σ R² − N(N+1)²/4)/(N−1)`, two-sided p from t(N−k). `p_adjusted`
/// is left equal to `p_raw`; see [`conover_holm`].
pub fn conover_pairwise<L: Clone>(
    sample: &GroupedSample<L>,
    omnibus: &OmnibusResult,
) -> Result<Vec<PairwiseResult<L>>> {
    let rg = rank_groups(sample);
    let k = rg.sizes.len();
    if rg.n <= k {
        return Err(Error::InvalidParameter(
            "no residual degrees of freedom (N = k)".into(),
        ));
    }
    let n = rg.n as f64;
    let s2 = (rg.sum_sq_ranks - n * (n + 1.0) * (n + 1.0) / 4.0) / (n - 1.0);
    let residual_df = (rg.n - k) as f64;
    let scale = s2 * ((n - 1.0 - omnibus.h_statistic) / residual_df).max(0.0);
    let mut out = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in (i + 1)..k {
            let diff = rg.mean_ranks[i] - rg.mean_ranks[j];
            let se = libm::sqrt(
                scale * (1.0 / rg.sizes[i] as f64 + 1.0 / rg.sizes[j] as f64),
            );
            let t = if diff == 0.0 {
                0.0
            } else if se == 0.0 {
                f64::INFINITY.copysign(diff)
            } else {
                diff / se
            };
            let p = student_t_two_sided(t, residual_df);
            out.push(PairwiseResult {
                pair: (sample.groups[i].0.clone(), sample.groups[j].0.clone()),
                t_statistic: t,
                p_raw: p,
                p_adjusted: p,
            });
        }
    }
    Ok(out)
}

/// Kruskal-Wallis followed by Conover pairwise tests with Holm-adjusted p.
pub fn conover_holm<L: Clone>(
    sample: &GroupedSample<L>,
) -> Result<(OmnibusResult, Vec<PairwiseResult<L>>)> {
    let omnibus = kruskal_wallis(sample)?;
    let mut pairs = conover_pairwise(sample, &omnibus)?;
    let raw: Vec<f64> = pairs.iter().map(|p| p.p_raw).collect();
    for (p, adj) in pairs.iter_mut().zip(holm_adjust(&raw)?) {
        p.p_adjusted = adj;
    }
    Ok((omnibus, pairs))
}

/// Holm step-down adjustment, returned in input order.
pub fn holm_adjust(p_values: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidParameter(alloc::format!(
            "p-value {bad} outside [0,1]"
        )));
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut adjusted = alloc::vec![0.0; m];
    let mut running = 0.0f64;
    for (rank, &idx) in order.iter().enumerate() {
        let scaled = ((m - rank) as f64 * p_values[idx]).min(1.0);
        running = running.max(scaled);
        adjusted[idx] = running;
    }
    Ok(adjusted)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LetterValue {
    /// M, F, E, D, C, B, A, Z, Y, X, ...
    pub label: String,
    pub depth: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LetterValueSummary {
    pub n: usize,
    pub levels: Vec<LetterValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LetterValueOptions {
    /// Maximum number of levels, the median included.
    pub max_depth: Option<usize>,
    /// Stop once a level would have fewer than this many observations in
    /// each tail (`floor(depth)`).
    pub min_tail: usize,
}

impl Default for LetterValueOptions {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_tail: 8,
        }
    }
}

fn letter_label(level: usize) -> String {
    const NAMED: &[&str] = &["M", "F", "E", "D", "C", "B", "A"];
    if let Some(s) = NAMED.get(level) {
        return String::from(*s);
    }
    let back = level - NAMED.len();
    if back < 26 {
        String::from(char::from(b'Z' - back as u8))
    } else {
        alloc::format!("L{level}")
    }
}

/// Value at (possibly fractional) depth `d`, counted from the low end of a
/// sorted sample. Written as a weighted sum so that the same depth read from
/// either end of the sample gives bit-identical results at the median.
fn at_depth(sorted: &[f64], d: f64) -> f64 {
    let lo = libm::floor(d) as usize;
    let frac = d - lo as f64;
    let a = sorted[lo - 1];
    if frac == 0.0 || lo >= sorted.len() {
        a
    } else {
        (1.0 - frac) * a + frac * sorted[lo]
    }
}

/// Letter values from the median outward. Depths follow
/// `d₁ = (1+n)/2`, `dₖ₊₁ = (1+⌊dₖ⌋)/2`.
pub fn letter_values(sample: &[f64], opts: &LetterValueOptions) -> Result<LetterValueSummary> {
    if sample.is_empty() {
        return Err(Error::Empty("sample"));
    }
    if sample.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidParameter("NaN observation".into()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let mut desc = sorted.clone();
    desc.reverse();
    let n = sorted.len();

    let mut levels = Vec::new();
    let mut depth = (1.0 + n as f64) / 2.0;
    loop {
        let lower = at_depth(&sorted, depth);
        // mirrored from the top: the upper value at depth d is the lower
        // value of the reversed sample, interpolated toward the center
        let upper = at_depth(&desc, depth);
        levels.push(LetterValue {
            label: letter_label(levels.len()),
            depth,
            lower,
            upper,
        });
        if opts.max_depth.is_some_and(|m| levels.len() >= m) {
            break;
        }
        let next = (1.0 + libm::floor(depth)) / 2.0;
        if next >= depth || (libm::floor(next) as usize) < opts.min_tail.max(1) {
            break;
        }
        depth = next;
    }
    Ok(LetterValueSummary { n, levels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sample(groups: &[&[f64]]) -> GroupedSample<usize> {
        GroupedSample::new(groups.iter().enumerate().map(|(i, g)| (i, g.to_vec())).collect())
            .unwrap()
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn midrank_ties() {
        let (r, t) = midranks(&[3.0, 1.0, 3.0, 2.0]);
        assert_eq!(r, vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(t, 6.0);
    }

    #[test]
    fn kw_no_ties() {
        let s = sample(&[&[1., 2., 3.], &[4., 5., 6.], &[7., 8., 9.]]);
        let r = kruskal_wallis(&s).unwrap();
        assert!((r.h_statistic - 7.2).abs() < 1e-9);
        assert_eq!(r.degrees_of_freedom, 2);
        // scipy.stats.kruskal
        assert!(close(r.p_value, 0.02732372244729252, 1e-10));
    }

    #[test]
    fn kw_with_ties_matches_reference() {
        // scipy.stats.kruskal reference values
        let s = sample(&[&[1., 2., 2., 3., 5.], &[2., 4., 4., 6.], &[5., 7., 7., 8., 9., 9.]]);
        let r = kruskal_wallis(&s).unwrap();
        assert!(close(r.h_statistic, 9.811413043478261, 1e-12));
        assert!(close(r.p_value, 0.007404209999163159, 1e-10));
    }

    #[test]
    fn kw_identical_groups() {
        let s = sample(&[&[1., 2.], &[1., 2.]]);
        let r = kruskal_wallis(&s).unwrap();
        assert_eq!(r.h_statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kw_errors() {
        let s = sample(&[&[4., 4.], &[4., 4.]]);
        assert_eq!(kruskal_wallis(&s), Err(Error::Degenerate("all observations are identical")));
        let s = sample(&[&[1.], &[2.]]);
        assert!(kruskal_wallis(&s).is_err());
        assert!(GroupedSample::new(vec![(0, vec![1.0])]).is_err());
        assert!(GroupedSample::new(vec![(0, vec![1.0]), (1, vec![])]).is_err());
        assert!(GroupedSample::new(vec![(0, vec![f64::NAN]), (1, vec![1.0])]).is_err());
    }

    #[test]
    fn kw_shift_invariance() {
        let a = sample(&[&[1., 5., 2.], &[4., 4., 6.], &[0.5, 8., 9.]]);
        let b = sample(&[&[101., 105., 102.], &[104., 104., 106.], &[100.5, 108., 109.]]);
        assert_eq!(kruskal_wallis(&a).unwrap(), kruskal_wallis(&b).unwrap());
    }

    #[test]
    fn conover_reference() {
        let s = sample(&[&[1., 2., 3.], &[4., 5., 6.], &[7., 8., 9.]]);
        let kw = kruskal_wallis(&s).unwrap();
        let pw = conover_pairwise(&s, &kw).unwrap();
        let expect = [
            (-3.6742346141747735, 0.010401720935463942),
            (-7.348469228349547, 0.00032497467927108026),
            (-3.6742346141747735, 0.010401720935463942),
        ];
        for (r, (t, p)) in pw.iter().zip(expect) {
            assert!(close(r.t_statistic, t, 1e-9), "{} vs {t}", r.t_statistic);
            assert!(close(r.p_raw, p, 1e-8), "{} vs {p}", r.p_raw);
        }
        assert!(pw[1].t_statistic.abs() > pw[0].t_statistic.abs());
        assert_eq!(pw[1].pair, (0, 2));
    }

    #[test]
    fn conover_with_ties_reference() {
        let s = sample(&[&[1., 2., 2., 3., 5.], &[2., 4., 4., 6.], &[5., 7., 7., 8., 9., 9.]]);
        let kw = kruskal_wallis(&s).unwrap();
        let pw = conover_pairwise(&s, &kw).unwrap();
        let expect = [
            (-1.363864786967492, 0.19764639383249727),
            (-5.130837088104804, 0.0002487506044773201),
            (-3.395781964417586, 0.0053109467558908885),
        ];
        for (r, (t, p)) in pw.iter().zip(expect) {
            assert!(close(r.t_statistic, t, 1e-9));
            assert!(close(r.p_raw, p, 1e-8));
        }
    }

    #[test]
    fn conover_identical_groups() {
        let s = sample(&[&[1., 2.], &[1., 2.]]);
        let kw = kruskal_wallis(&s).unwrap();
        let pw = conover_pairwise(&s, &kw).unwrap();
        assert_eq!(pw[0].t_statistic, 0.0);
        assert_eq!(pw[0].p_raw, 1.0);
    }

    #[test]
    fn conover_needs_residual_df() {
        let s = sample(&[&[1.], &[2.], &[3.]]);
        let kw = kruskal_wallis(&s).unwrap();
        assert!(conover_pairwise(&s, &kw).is_err());
    }

    #[test]
    fn conover_holm_fills_adjusted() {
        let s = sample(&[&[1., 2., 3.], &[4., 5., 6.], &[7., 8., 9.]]);
        let (_, pw) = conover_holm(&s).unwrap();
        for p in &pw {
            assert!(p.p_adjusted >= p.p_raw);
        }
        assert!(close(pw[1].p_adjusted, 3.0 * 0.00032497467927108026, 1e-8));
    }

    #[test]
    fn holm_examples() {
        let adj = holm_adjust(&[0.01, 0.04, 0.03]).unwrap();
        for (a, e) in adj.iter().zip([0.03, 0.06, 0.06]) {
            assert!((a - e).abs() < 1e-15);
        }
        assert_eq!(holm_adjust(&[0.5]).unwrap(), vec![0.5]);
        assert_eq!(holm_adjust(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        // statsmodels multipletests(method="holm")
        let adj = holm_adjust(&[0.2, 0.001, 0.05, 0.04, 0.9]).unwrap();
        for (a, e) in adj.iter().zip([0.4, 0.005, 0.16, 0.16, 0.9]) {
            assert!((a - e).abs() < 1e-12);
        }
        assert!(holm_adjust(&[1.2]).is_err());
        assert!(holm_adjust(&[f64::NAN]).is_err());
        assert!(holm_adjust(&[]).unwrap().is_empty());
    }

    #[test]
    fn letter_value_examples() {
        let s: Vec<f64> = (1..=8).map(f64::from).collect();
        let opts = LetterValueOptions {
            max_depth: Some(2),
            min_tail: 1,
        };
        let lv = letter_values(&s, &opts).unwrap();
        assert_eq!(lv.levels.len(), 2);
        assert_eq!((lv.levels[0].lower, lv.levels[0].upper), (4.5, 4.5));
        assert_eq!(lv.levels[1].label, "F");
        assert_eq!((lv.levels[1].lower, lv.levels[1].upper), (2.5, 6.5));

        let s: Vec<f64> = (1..=9).map(f64::from).collect();
        let lv = letter_values(&s, &LetterValueOptions::default()).unwrap();
        assert_eq!(lv.levels[0].lower, 5.0);

        let lv = letter_values(&[3.0; 100], &opts).unwrap();
        assert!(lv.levels.iter().all(|l| l.lower == 3.0 && l.upper == 3.0));
        assert!(letter_values(&[], &opts).is_err());
    }

    #[test]
    fn letter_value_depths_and_stop() {
        let s: Vec<f64> = (1..=1000).map(f64::from).collect();
        let lv = letter_values(&s, &LetterValueOptions::default()).unwrap();
        let depths: Vec<f64> = lv.levels.iter().map(|l| l.depth).collect();
        assert_eq!(depths, vec![500.5, 250.5, 125.5, 63.0, 32.0, 16.5, 8.5]);
        let labels: Vec<&str> = lv.levels.iter().map(|l| l.label.as_str()).collect();
        assert_eq!(labels, vec!["M", "F", "E", "D", "C", "B", "A"]);
        assert_eq!((lv.levels[6].lower, lv.levels[6].upper), (8.5, 992.5));

        // down to depth 1 the ladder ends at the extremes
        let lv = letter_values(&s, &LetterValueOptions { max_depth: None, min_tail: 1 }).unwrap();
        let last = lv.levels.last().unwrap();
        assert_eq!((last.depth, last.lower, last.upper), (1.0, 1.0, 1000.0));
        assert_eq!(lv.levels[7].label, "Z");
        let lv = letter_values(&[42.0], &LetterValueOptions::default()).unwrap();
        assert_eq!(lv.levels.len(), 1);
    }
}
