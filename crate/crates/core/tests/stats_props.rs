use proptest::prelude::*;
use recispace_core::stats::{
    conover_pairwise, holm_adjust, kruskal_wallis, letter_values, GroupedSample, LetterValueOptions,
};

/// Small integer values so ties are common.
fn groups() -> impl Strategy<Value = Vec<(usize, Vec<f64>)>> {
    prop::collection::vec(prop::collection::vec(0i32..20, 2..15), 2..6).prop_map(|gs| {
        gs.into_iter()
            .enumerate()
            .map(|(i, v)| (i, v.into_iter().map(f64::from).collect()))
            .collect()
    })
}

fn not_constant(gs: &[(usize, Vec<f64>)]) -> bool {
    let first = gs[0].1[0];
    gs.iter().flat_map(|(_, v)| v).any(|&x| x != first)
}

proptest! {
    #[test]
    fn kw_invariant_under_monotone_transforms(gs in groups()) {
        prop_assume!(not_constant(&gs));
        let base = kruskal_wallis(&GroupedSample::new(gs.clone()).unwrap()).unwrap();
        let transforms: [fn(f64) -> f64; 3] = [|x| (x + 1.0).ln(), |x| 3.0 * x - 7.0, |x| x * x * x];
        for f in transforms {
            let moved: Vec<(usize, Vec<f64>)> =
                gs.iter().map(|(l, v)| (*l, v.iter().map(|&x| f(x)).collect())).collect();
            let h = kruskal_wallis(&GroupedSample::new(moved).unwrap()).unwrap();
            prop_assert!((h.h_statistic - base.h_statistic).abs() <= 1e-9 * base.h_statistic.max(1.0));
            prop_assert!((h.p_value - base.p_value).abs() <= 1e-9);
        }
    }

    #[test]
    fn conover_is_antisymmetric(gs in groups()) {
        prop_assume!(not_constant(&gs));
        let fwd = GroupedSample::new(gs.clone()).unwrap();
        let mut rev_groups = gs.clone();
        rev_groups.reverse();
        let rev = GroupedSample::new(rev_groups).unwrap();
        let a = conover_pairwise(&fwd, &kruskal_wallis(&fwd).unwrap()).unwrap();
        let b = conover_pairwise(&rev, &kruskal_wallis(&rev).unwrap()).unwrap();
        for x in &a {
            let y = b.iter().find(|y| y.pair == (x.pair.1, x.pair.0)).unwrap();
            if x.t_statistic.is_finite() {
                prop_assert!((x.t_statistic + y.t_statistic).abs() <= 1e-9 * x.t_statistic.abs().max(1.0));
            } else {
                prop_assert_eq!(x.t_statistic, -y.t_statistic);
            }
            prop_assert!((x.p_raw - y.p_raw).abs() <= 1e-12);
        }
    }

    #[test]
    fn holm_dominates_and_stays_monotone(ps in prop::collection::vec(0.0f64..=1.0, 1..40)) {
        let adj = holm_adjust(&ps).unwrap();
        for (p, a) in ps.iter().zip(&adj) {
            prop_assert!(a >= p && *a <= 1.0);
        }
        let mut order: Vec<usize> = (0..ps.len()).collect();
        order.sort_by(|&i, &j| ps[i].total_cmp(&ps[j]));
        for w in order.windows(2) {
            prop_assert!(adj[w[0]] <= adj[w[1]]);
        }
    }

    #[test]
    fn letter_values_nest_within_sample(
        xs in prop::collection::vec(-1e6f64..1e6, 1..500),
        min_tail in 1usize..10,
    ) {
        let opts = LetterValueOptions { min_tail, ..LetterValueOptions::default() };
        let lv = letter_values(&xs, &opts).unwrap();
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for w in lv.levels.windows(2) {
            prop_assert!(w[1].lower <= w[0].lower);
            prop_assert!(w[1].upper >= w[0].upper);
            prop_assert!(w[1].depth < w[0].depth);
        }
        for l in &lv.levels {
            prop_assert!(l.lower >= lo && l.upper <= hi && l.lower <= l.upper);
        }
    }
}
