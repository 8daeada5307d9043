use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use recispace_core::activity::{
    qualifying_posts, tweet_composition, tweets_per_day, EngagementScope, PostKind, PostRecord,
};
use recispace_core::flow::{archetype_flow_counts, normalize_cols, normalize_rows};
use recispace_core::vocab::{chi_square, top_k_words, ContingencyCounts, UserDocument, VocabParams};
use recispace_core::{ArchetypeLabel, EdgeStore, UserId};

fn shortcut(c: &ContingencyCounts) -> f64 {
    let (a, b, cc, d) = (c.n11 as f64, c.n10 as f64, c.n01 as f64, c.n00 as f64);
    let n = a + b + cc + d;
    let den = (a + b) * (cc + d) * (a + cc) * (b + d);
    if den == 0.0 {
        0.0
    } else {
        n * (a * d - b * cc).powi(2) / den
    }
}

fn table() -> impl Strategy<Value = ContingencyCounts> {
    (0u64..2500, 0u64..2500, 0u64..2500, 0u64..2500)
        .prop_filter("non-empty", |t| t.0 + t.1 + t.2 + t.3 > 0)
        .prop_map(|(n11, n10, n01, n00)| ContingencyCounts { n11, n10, n01, n00 })
}

fn post() -> impl Strategy<Value = PostRecord> {
    (0i64..1_000_000, 0usize..4, 0u64..100, 0u64..100, 0i64..100_000).prop_map(
        |(t, k, rt, liked, back)| {
            let kind = [PostKind::Original, PostKind::Retweet, PostKind::Reply, PostKind::Quote][k];
            PostRecord {
                author: UserId(1),
                created_at: t,
                kind,
                retweeted_count: rt,
                liked_count: liked,
                source_created_at: (kind == PostKind::Retweet).then_some(t - back),
                text: String::new(),
                lang: None,
            }
        },
    )
}

fn labeled_graph() -> impl Strategy<Value = (Vec<(u64, u64)>, BTreeMap<UserId, ArchetypeLabel>)> {
    (2u64..30).prop_flat_map(|n| {
        (
            prop::collection::vec((0..n, 0..n), 0..120),
            prop::collection::vec(prop::option::weighted(0.9, 0usize..5), n as usize),
        )
            .prop_map(|(pairs, labels)| {
                let map = labels
                    .into_iter()
                    .enumerate()
                    .filter_map(|(u, l)| l.map(|i| (UserId(u as u64), ArchetypeLabel::ALL[i])))
                    .collect();
                (pairs, map)
            })
    })
}

proptest! {
    #[test]
    fn chi_square_matches_shortcut(c in table()) {
        let got = chi_square(&c).unwrap();
        let want = shortcut(&c);
        prop_assert!((got - want).abs() <= 1e-9 * want.max(1e-12), "{got} vs {want}");
    }

    #[test]
    fn chi_square_symmetry_and_doubling(c in table()) {
        let x = chi_square(&c).unwrap();
        let swapped = ContingencyCounts { n11: c.n00, n00: c.n11, n10: c.n01, n01: c.n10 };
        prop_assert!((chi_square(&swapped).unwrap() - x).abs() <= 1e-9 * x.max(1.0));
        let doubled = ContingencyCounts { n11: 2 * c.n11, n10: 2 * c.n10, n01: 2 * c.n01, n00: 2 * c.n00 };
        prop_assert!((chi_square(&doubled).unwrap() - 2.0 * x).abs() <= 1e-9 * x.max(1.0));
    }

    #[test]
    fn top_k_is_deterministic_and_positive(
        vocab in prop::collection::vec(prop::collection::btree_set(0u8..12, 0..6), 5..40),
        cats in prop::collection::vec(0u8..3, 40),
    ) {
        let docs: Vec<UserDocument> = vocab
            .iter()
            .enumerate()
            .map(|(u, ws)| UserDocument {
                user: UserId(u as u64),
                vocabulary: ws.iter().map(|w| format!("w{w}")).collect::<BTreeSet<_>>(),
            })
            .collect();
        let assignment: BTreeMap<UserId, u8> =
            (0..vocab.len()).map(|u| (UserId(u as u64), cats[u])).collect();
        let params = VocabParams { k: 5, min_support: 2, include_empty_users: true };
        let a = top_k_words(&docs, &assignment, &params).unwrap();
        let mut rev = docs.clone();
        rev.reverse();
        let b = top_k_words(&rev, &assignment, &params).unwrap();
        prop_assert_eq!(&a, &b);
        for rows in a.values() {
            prop_assert!(rows.len() <= 5);
            for w in rows.windows(2) {
                prop_assert!(w[0].score > w[1].score || (w[0].score == w[1].score && w[0].word < w[1].word));
            }
            for r in rows {
                prop_assert!(r.counts.positively_associated());
                prop_assert!(r.counts.n11 + r.counts.n10 >= 2);
            }
        }
    }

    #[test]
    fn flow_counts_match_recount((pairs, labels) in labeled_graph()) {
        let store = EdgeStore::from_pairs(pairs.iter().copied());
        let order = ArchetypeLabel::ALL;
        let m = archetype_flow_counts(&store, &labels, &order);
        let idx = |l: ArchetypeLabel| order.iter().position(|&x| x == l).unwrap();
        let mut want = vec![vec![0u64; 5]; 5];
        let mut skipped = 0u64;
        for e in store.edges() {
            match (labels.get(&e.src), labels.get(&e.dst)) {
                (Some(&a), Some(&b)) => want[idx(a)][idx(b)] += 1,
                _ => skipped += 1,
            }
        }
        prop_assert_eq!(&m.counts, &want);
        prop_assert_eq!(m.skipped, skipped);
        prop_assert_eq!(m.total() + skipped, store.len() as u64);

        let rows = normalize_rows(&m);
        for (i, row) in rows.values.iter().enumerate() {
            let s: f64 = row.iter().sum();
            if rows.empty[i] {
                prop_assert_eq!(s, 0.0);
            } else {
                prop_assert!((s - 1.0).abs() <= 1e-12);
            }
        }
        let cols = normalize_cols(&m);
        let via_t = normalize_rows(&m.transpose());
        for i in 0..5 {
            for j in 0..5 {
                prop_assert_eq!(cols.values[i][j], via_t.values[j][i]);
            }
        }
    }

    #[test]
    fn flow_relabeling_permutes_matrix((pairs, labels) in labeled_graph(), rot in 0usize..5) {
        let store = EdgeStore::from_pairs(pairs.iter().copied());
        let order = ArchetypeLabel::ALL;
        let mut permuted = order;
        permuted.rotate_left(rot);
        let a = archetype_flow_counts(&store, &labels, &order);
        let b = archetype_flow_counts(&store, &labels, &permuted);
        for i in 0..5 {
            for j in 0..5 {
                prop_assert_eq!(b.counts[i][j], a.counts[(i + rot) % 5][(j + rot) % 5]);
            }
        }
    }

    #[test]
    fn composition_sums_to_one(posts in prop::collection::vec(post(), 1..60)) {
        let c = tweet_composition(&posts).unwrap();
        prop_assert!((c.original + c.retweet + c.reply + c.quote - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn rate_ignores_time_translation(posts in prop::collection::vec(post(), 2..60), shift in -1_000_000i64..1_000_000) {
        let moved: Vec<PostRecord> = posts
            .iter()
            .map(|p| PostRecord {
                created_at: p.created_at + shift,
                source_created_at: p.source_created_at.map(|s| s + shift),
                ..p.clone()
            })
            .collect();
        prop_assert_eq!(tweets_per_day(&posts), tweets_per_day(&moved));
    }

    #[test]
    fn original_only_posts_are_a_subset(posts in prop::collection::vec(post(), 0..60), cutoff in 0i64..1_000_000) {
        let all: Vec<*const PostRecord> =
            qualifying_posts(&posts, cutoff, EngagementScope::All).map(|p| p as *const _).collect();
        for p in qualifying_posts(&posts, cutoff, EngagementScope::OriginalOnly) {
            prop_assert!(all.contains(&(p as *const _)));
            prop_assert_eq!(p.kind, PostKind::Original);
        }
    }
}
