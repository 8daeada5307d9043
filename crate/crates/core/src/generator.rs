//! Planted reciprocity networks with ground-truth archetype labels, plus
//! matching synthetic profiles and timelines.
//!
//! Each planted user is wired to a private set of helper accounts drawn from a
//! shared pool: `k_m` of them mutually, the rest one-way in or out. Helpers
//! never link to each other and planted users only link to each other inside a
//! clique block, so every planted user's realized degrees are exactly the ones
//! sampled for it.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::activity::{PostKind, PostRecord, ProfileFields, SECONDS_PER_DAY};
use crate::graph::{DegreeSummary, DirectedEdge, EdgeStore, UserId};
use crate::reciprocity::ArchetypeLabel;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpec {
    pub label: ArchetypeLabel,
    pub size: usize,
    /// Inclusive target range for r_in, within (0, 1].
    pub r_in: (f64, f64),
    /// Inclusive target range for r_out, within (0, 1].
    pub r_out: (f64, f64),
    /// Inclusive range of mutual connections per user.
    pub mutual: (u64, u64),
    /// Link all block members to each other in both directions.
    pub clique: bool,
}

impl BlockSpec {
    /// A block well inside the archetype's region under the default
    /// 0.25/0.75 thresholds.
    pub fn corner(label: ArchetypeLabel, size: usize) -> Self {
        let low = (0.04, 0.2);
        let high = (0.8, 1.0);
        let mid = (0.4, 0.6);
        let (r_in, r_out) = match label {
            ArchetypeLabel::Feeding => (low, high),
            ArchetypeLabel::Accumulating => (high, low),
            ArchetypeLabel::Flowing => (low, low),
            ArchetypeLabel::Circulating => (high, high),
            ArchetypeLabel::Intermediate => (mid, mid),
        };
        Self {
            label,
            size,
            r_in,
            r_out,
            mutual: (1, 6),
            clique: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    pub blocks: Vec<BlockSpec>,
    /// Number of helper accounts shared by all planted users.
    pub helper_pool: usize,
    pub seed: u64,
    /// Id of the first planted user; helpers follow the planted users.
    pub first_id: u64,
}

impl PlantedSpec {
    /// Four corner blocks of `size` users each.
    pub fn four_corners(size: usize, seed: u64) -> Self {
        Self {
            blocks: ArchetypeLabel::CORNERS
                .iter()
                .map(|&l| BlockSpec::corner(l, size))
                .collect(),
            helper_pool: 1_000,
            seed,
            first_id: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedNetwork {
    /// Edges, with the planted users as focal users.
    pub store: EdgeStore,
    /// Planted users and their intended archetype, in id order.
    pub truth: Vec<(UserId, ArchetypeLabel)>,
    /// Degrees each planted user was built to have.
    pub targets: Vec<DegreeSummary>,
}

fn check_range(name: &str, (lo, hi): (f64, f64)) -> Result<()> {
    if lo > 0.0 && lo <= hi && hi <= 1.0 {
        Ok(())
    } else {
        Err(Error::InfeasibleSpec(alloc::format!(
            "{name} range ({lo}, {hi}) must satisfy 0 < lo <= hi <= 1"
        )))
    }
}

/// Degrees `k` >= `k_m` such that `(k_m+1)/(k+1)` falls in `range`.
fn feasible_degrees(k_m: u64, (lo, hi): (f64, f64), cap: u64) -> Vec<u64> {
    let m = (k_m + 1) as f64;
    let first = libm::floor(m / hi).max(1.0) as u64 - 1;
    let last = (libm::ceil(m / lo) as u64).min(cap + 1);
    (first.max(k_m)..=last)
        .filter(|&k| {
            let r = m / (k as f64 + 1.0);
            r >= lo && r <= hi
        })
        .collect()
}

/// All `(k_m, k_i choices, k_o choices)` a block member can take.
fn feasible_triples(block: &BlockSpec, clique_mutual: u64, pool: u64) -> Vec<(u64, Vec<u64>, Vec<u64>)> {
    let lo = block.mutual.0.max(clique_mutual);
    let hi = block.mutual.1.max(clique_mutual);
    let mut out = Vec::new();
    for k_m in lo..=hi {
        let helper_mutual = k_m - clique_mutual;
        if helper_mutual > pool {
            break;
        }
        // one-way helpers needed: (k_i - k_m) + (k_o - k_m) <= pool - helper_mutual
        let spare = pool - helper_mutual;
        let ins = feasible_degrees(k_m, block.r_in, k_m + spare);
        let outs = feasible_degrees(k_m, block.r_out, k_m + spare);
        let min_in = ins.first().copied();
        let min_out = outs.first().copied();
        if let (Some(a), Some(b)) = (min_in, min_out) {
            if (a - k_m) + (b - k_m) <= spare {
                out.push((k_m, ins, outs));
            }
        }
    }
    out
}

pub fn generate_planted_network(spec: &PlantedSpec) -> Result<PlantedNetwork> {
    if spec.blocks.is_empty() {
        return Err(Error::InfeasibleSpec("no blocks".into()));
    }
    let pool = spec.helper_pool as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let planted_total: usize = spec.blocks.iter().map(|b| b.size).sum();
    let helper_base = spec.first_id + planted_total as u64;

    let mut edges: Vec<DirectedEdge> = Vec::new();
    let mut truth = Vec::with_capacity(planted_total);
    let mut targets = Vec::with_capacity(planted_total);
    let mut next_id = spec.first_id;

    for (b, block) in spec.blocks.iter().enumerate() {
        check_range("r_in", block.r_in)?;
        check_range("r_out", block.r_out)?;
        if block.mutual.0 > block.mutual.1 {
            return Err(Error::InfeasibleSpec(alloc::format!(
                "block {b}: mutual range is empty"
            )));
        }
        let clique_mutual = if block.clique {
            block.size.saturating_sub(1) as u64
        } else {
            0
        };
        let choices = feasible_triples(block, clique_mutual, pool);
        if choices.is_empty() && block.size > 0 {
            return Err(Error::InfeasibleSpec(alloc::format!(
                "block {b} ({}): no degree combination reaches r_in in {:?} and r_out in {:?} \
                 with {:?} mutual edges and {} helpers",
                block.label, block.r_in, block.r_out, block.mutual, pool
            )));
        }
        let members: Vec<UserId> = (0..block.size as u64).map(|i| UserId(next_id + i)).collect();
        next_id += block.size as u64;

        if block.clique {
            for &a in &members {
                for &c in &members {
                    if let Some(e) = DirectedEdge::new(a, c) {
                        edges.push(e);
                    }
                }
            }
        }

        for &user in &members {
            let (k_m, k_i, k_o) = loop {
                let (k_m, ins, outs) = &choices[rng.gen_range(0..choices.len())];
                let k_i = ins[rng.gen_range(0..ins.len())];
                let k_o = outs[rng.gen_range(0..outs.len())];
                if (k_m - clique_mutual) + (k_i - k_m) + (k_o - k_m) <= pool {
                    break (*k_m, k_i, k_o);
                }
            };
            let helper_mutual = (k_m - clique_mutual) as usize;
            let in_only = (k_i - k_m) as usize;
            let out_only = (k_o - k_m) as usize;
            let picked = index::sample(&mut rng, spec.helper_pool, helper_mutual + in_only + out_only);
            for (slot, h) in picked.into_iter().enumerate() {
                let helper = UserId(helper_base + h as u64);
                if slot < helper_mutual {
                    edges.push(DirectedEdge { src: user, dst: helper });
                    edges.push(DirectedEdge { src: helper, dst: user });
                } else if slot < helper_mutual + in_only {
                    edges.push(DirectedEdge { src: helper, dst: user });
                } else {
                    edges.push(DirectedEdge { src: user, dst: helper });
                }
            }
            truth.push((user, block.label));
            targets.push(DegreeSummary { user, k_i, k_o, k_m });
        }
    }

    let store = EdgeStore::from_edges(edges).with_focal(truth.iter().map(|(u, _)| *u));
    Ok(PlantedNetwork {
        store,
        truth,
        targets,
    })
}

/// Words that characterize each archetype in synthetic timelines.
pub fn archetype_words(label: ArchetypeLabel) -> &'static [&'static str] {
    match label {
        ArchetypeLabel::Circulating => &["moot", "bestie", "ily", "goodnight", "besties"],
        ArchetypeLabel::Feeding => &["tonight", "weekend", "date", "excited", "saturday"],
        ArchetypeLabel::Accumulating => &["stay", "ready", "drop", "rest", "waiting"],
        ArchetypeLabel::Flowing => &["china", "election", "congress", "strategy", "launch"],
        ArchetypeLabel::Intermediate => &["random", "stuff", "thing"],
    }
}

const COMMON_WORDS: &[&str] = &[
    "people", "time", "today", "good", "new", "love", "know", "great", "think", "day", "world",
    "work", "life", "news", "game", "music", "best", "watch", "year", "home",
];

/// Per-archetype post-kind weights: (original, retweet, reply, quote).
fn kind_weights(label: ArchetypeLabel) -> [u32; 4] {
    match label {
        ArchetypeLabel::Feeding => [34, 29, 30, 7],
        ArchetypeLabel::Accumulating => [25, 51, 19, 5],
        ArchetypeLabel::Flowing => [20, 55, 20, 5],
        ArchetypeLabel::Circulating => [22, 30, 39, 9],
        ArchetypeLabel::Intermediate => [28, 42, 24, 6],
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticActivity {
    pub profiles: Vec<ProfileFields>,
    pub posts: Vec<PostRecord>,
}

/// Profiles and timelines for the planted users of `net`. Posts are spread
/// over the 60 days before `collected_at`; follower and followee counts are
/// the realized degrees.
pub fn synthesize_activity(net: &PlantedNetwork, collected_at: i64, seed: u64) -> SyntheticActivity {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_ac71_0000_0001);
    let mut profiles = Vec::with_capacity(net.truth.len());
    let mut posts = Vec::new();
    let window = (60.0 * SECONDS_PER_DAY) as i64;

    for (&(user, label), target) in net.truth.iter().zip(&net.targets) {
        let n_posts = rng.gen_range(8..40usize);
        let weights = kind_weights(label);
        let total: u32 = weights.iter().sum();
        let own_words = archetype_words(label);
        let reach = 1 + target.k_i / 4;
        for _ in 0..n_posts {
            let created_at = collected_at - rng.gen_range(1..window);
            let mut draw = rng.gen_range(0..total);
            let mut kind_idx = 0;
            while draw >= weights[kind_idx] {
                draw -= weights[kind_idx];
                kind_idx += 1;
            }
            let kind = [PostKind::Original, PostKind::Retweet, PostKind::Reply, PostKind::Quote]
                [kind_idx];
            let source_created_at = (kind == PostKind::Retweet)
                .then(|| created_at - rng.gen_range(0..3 * SECONDS_PER_DAY as i64));
            let mut text = String::new();
            for w in 0..rng.gen_range(3..7usize) {
                if w > 0 {
                    text.push(' ');
                }
                text.push_str(COMMON_WORDS[rng.gen_range(0..COMMON_WORDS.len())]);
            }
            if rng.gen_bool(0.7) {
                text.push(' ');
                text.push_str(own_words[rng.gen_range(0..own_words.len())]);
            }
            posts.push(PostRecord {
                author: user,
                created_at,
                kind,
                retweeted_count: rng.gen_range(0..=reach),
                liked_count: rng.gen_range(0..=3 * reach),
                source_created_at,
                text,
                lang: Some(String::from(if rng.gen_bool(0.9) { "en" } else { "ja" })),
            });
        }
        profiles.push(ProfileFields {
            user,
            statuses_count: Some(n_posts as u64 + rng.gen_range(0..5_000)),
            favourites_count: Some(rng.gen_range(0..20_000)),
            followers_count: Some(target.k_i),
            friends_count: Some(target.k_o),
            created_at: Some(collected_at - rng.gen_range(window..12 * 365 * 86_400)),
        });
    }
    posts.sort_by_key(|p| (p.author, p.created_at));
    SyntheticActivity { profiles, posts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::compute_degree_summaries;
    use crate::reciprocity::compute_reciprocity;
    use alloc::vec;

    #[test]
    fn realized_degrees_match_targets() {
        let net = generate_planted_network(&PlantedSpec::four_corners(20, 3)).unwrap();
        let users: Vec<UserId> = net.truth.iter().map(|(u, _)| *u).collect();
        let got = compute_degree_summaries(&net.store, users);
        assert_eq!(got, net.targets);
        for (d, (_, label)) in got.iter().zip(&net.truth) {
            let p = compute_reciprocity(d);
            let b = BlockSpec::corner(*label, 1);
            assert!(p.r_in >= b.r_in.0 && p.r_in <= b.r_in.1);
            assert!(p.r_out >= b.r_out.0 && p.r_out <= b.r_out.1);
        }
    }

    #[test]
    fn same_seed_same_edges() {
        let a = generate_planted_network(&PlantedSpec::four_corners(10, 11)).unwrap();
        let b = generate_planted_network(&PlantedSpec::four_corners(10, 11)).unwrap();
        let c = generate_planted_network(&PlantedSpec::four_corners(10, 12)).unwrap();
        assert_eq!(a.store, b.store);
        assert_ne!(a.store, c.store);
    }

    #[test]
    fn clique_of_five_is_fully_reciprocal() {
        let spec = PlantedSpec {
            blocks: vec![BlockSpec {
                label: ArchetypeLabel::Circulating,
                size: 5,
                r_in: (1.0, 1.0),
                r_out: (1.0, 1.0),
                mutual: (0, 0),
                clique: true,
            }],
            helper_pool: 0,
            seed: 1,
            first_id: 100,
        };
        let net = generate_planted_network(&spec).unwrap();
        assert_eq!(net.store.len(), 20);
        for d in compute_degree_summaries(&net.store, net.truth.iter().map(|t| t.0)) {
            let p = compute_reciprocity(&d);
            assert_eq!((p.r_in, p.r_out), (1.0, 1.0));
            assert_eq!(d.k_m, 4);
        }
    }

    #[test]
    fn infeasible_specs_are_rejected() {
        let mut block = BlockSpec::corner(ArchetypeLabel::Flowing, 3);
        block.r_in = (0.3, 0.32);
        block.mutual = (0, 0);
        let spec = PlantedSpec {
            blocks: vec![block],
            helper_pool: 100,
            seed: 0,
            first_id: 1,
        };
        assert!(matches!(generate_planted_network(&spec), Err(Error::InfeasibleSpec(_))));

        // low reciprocity needs one-way helpers
        let mut spec = PlantedSpec::four_corners(2, 0);
        spec.helper_pool = 0;
        assert!(matches!(generate_planted_network(&spec), Err(Error::InfeasibleSpec(_))));

        let mut spec = PlantedSpec::four_corners(2, 0);
        spec.blocks[0].r_in = (0.0, 0.2);
        assert!(generate_planted_network(&spec).is_err());
    }

    #[test]
    fn feasible_degree_bounds() {
        // (0+1)/(k+1) in [0.25, 0.5] -> k in {1, 2, 3}
        assert_eq!(feasible_degrees(0, (0.25, 0.5), 100), vec![1, 2, 3]);
        assert_eq!(feasible_degrees(3, (1.0, 1.0), 100), vec![3]);
        assert!(feasible_degrees(0, (0.3, 0.32), 100).is_empty());
    }

    #[test]
    fn activity_is_consistent() {
        let net = generate_planted_network(&PlantedSpec::four_corners(5, 9)).unwrap();
        let act = synthesize_activity(&net, 1_700_000_000, 9);
        assert_eq!(act.profiles.len(), 20);
        for p in &act.posts {
            p.validate().unwrap();
            assert!(p.created_at < 1_700_000_000);
        }
        let again = synthesize_activity(&net, 1_700_000_000, 9);
        assert_eq!(act.posts, again.posts);
    }
}
