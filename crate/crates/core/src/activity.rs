//! Per-user activity, profile and engagement metrics.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::graph::UserId;
use crate::{Error, Result};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// 2021-07-20T00:00:00Z, the engagement cutoff of the original crawl.
pub const DEFAULT_ENGAGEMENT_CUTOFF: i64 = 1_626_739_200;

/// Per-user timeline limit of the original crawl.
pub const PLATFORM_TIMELINE_LIMIT: usize = 3_200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PostKind {
    Original,
    Retweet,
    Reply,
    Quote,
}

impl PostKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PostKind::Original => "original",
            PostKind::Retweet => "retweet",
            PostKind::Reply => "reply",
            PostKind::Quote => "quote",
        }
    }
}

impl fmt::Display for PostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Raw markers carried by a post before it is given a single kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PostFlags {
    pub retweet: bool,
    pub reply: bool,
    pub quote: bool,
}

impl FromStr for PostFlags {
    type Err = Error;

    /// Accepts `original` or a `+`-joined set of `retweet`, `reply`, `quote`.
    fn from_str(s: &str) -> Result<Self> {
        let mut flags = PostFlags::default();
        for part in s.split('+').map(str::trim) {
            match part {
                "original" => {}
                "retweet" => flags.retweet = true,
                "reply" => flags.reply = true,
                "quote" => flags.quote = true,
                other => {
                    return Err(Error::InvalidParameter(alloc::format!(
                        "unknown post kind {other:?}"
                    )))
                }
            }
        }
        Ok(flags)
    }
}

/// Tie-break between the reply and quote markers. Retweets always win.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KindPrecedence {
    #[default]
    ReplyOverQuote,
    QuoteOverReply,
}

impl PostFlags {
    pub fn resolve(self, precedence: KindPrecedence) -> PostKind {
        if self.retweet {
            return PostKind::Retweet;
        }
        match (self.reply, self.quote, precedence) {
            (true, true, KindPrecedence::QuoteOverReply) => PostKind::Quote,
            (true, _, _) => PostKind::Reply,
            (false, true, _) => PostKind::Quote,
            (false, false, _) => PostKind::Original,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostRecord {
    pub author: UserId,
    /// UTC epoch seconds.
    pub created_at: i64,
    pub kind: PostKind,
    pub retweeted_count: u64,
    pub liked_count: u64,
    /// Creation time of the retweeted post; set only for retweets.
    pub source_created_at: Option<i64>,
    pub text: String,
    /// Language tag supplied with the input, if any.
    pub lang: Option<String>,
}

impl PostRecord {
    pub fn validate(&self) -> Result<()> {
        match (self.kind, self.source_created_at) {
            (PostKind::Retweet, None) => Err(Error::InvalidParameter(
                "retweet without source_created_at".into(),
            )),
            (k, Some(_)) if k != PostKind::Retweet => Err(Error::InvalidParameter(
                alloc::format!("{k} post carries source_created_at"),
            )),
            _ => Ok(()),
        }
    }

    /// Time used by the engagement cutoff: the source post's time for
    /// retweets, the post's own time otherwise.
    pub fn effective_timestamp(&self) -> i64 {
        match self.kind {
            PostKind::Retweet => self.source_created_at.unwrap_or(self.created_at),
            _ => self.created_at,
        }
    }
}

/// Keeps the `cap` most recent posts.
pub fn cap_timeline(timeline: &mut Vec<PostRecord>, cap: usize) {
    if timeline.len() > cap {
        timeline.sort_by_key(|p| core::cmp::Reverse(p.created_at));
        timeline.truncate(cap);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Composition {
    pub original: f64,
    pub retweet: f64,
    pub reply: f64,
    pub quote: f64,
}

/// Share of each post kind; `None` for an empty timeline.
pub fn tweet_composition(timeline: &[PostRecord]) -> Option<Composition> {
    if timeline.is_empty() {
        return None;
    }
    let mut counts = [0usize; 4];
    for p in timeline {
        counts[p.kind as usize] += 1;
    }
    let n = timeline.len() as f64;
    Some(Composition {
        original: counts[PostKind::Original as usize] as f64 / n,
        retweet: counts[PostKind::Retweet as usize] as f64 / n,
        reply: counts[PostKind::Reply as usize] as f64 / n,
        quote: counts[PostKind::Quote as usize] as f64 / n,
    })
}

/// Posts per day over the newest-minus-oldest span, floored at one second.
/// `None` with fewer than two posts.
pub fn tweets_per_day(timeline: &[PostRecord]) -> Option<f64> {
    if timeline.len() < 2 {
        return None;
    }
    let oldest = timeline.iter().map(|p| p.created_at).min()?;
    let newest = timeline.iter().map(|p| p.created_at).max()?;
    let span_days = ((newest - oldest) as f64 / SECONDS_PER_DAY).max(1.0 / SECONDS_PER_DAY);
    Some(timeline.len() as f64 / span_days)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EngagementScope {
    #[default]
    All,
    OriginalOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Engagement {
    pub mean_retweeted: f64,
    pub mean_liked: f64,
    pub posts: usize,
}

/// Posts that enter the engagement means: effective timestamp strictly
/// before `cutoff`, restricted to originals under [`EngagementScope::OriginalOnly`].
pub fn qualifying_posts(
    timeline: &[PostRecord],
    cutoff: i64,
    scope: EngagementScope,
) -> impl Iterator<Item = &PostRecord> {
    timeline.iter().filter(move |p| {
        p.effective_timestamp() < cutoff
            && (scope == EngagementScope::All || p.kind == PostKind::Original)
    })
}

/// Mean retweeted and liked counts over qualifying posts; `None` when no
/// post qualifies.
pub fn engagement_summary(
    timeline: &[PostRecord],
    cutoff: i64,
    scope: EngagementScope,
) -> Option<Engagement> {
    let (mut n, mut rt, mut liked) = (0usize, 0u128, 0u128);
    for p in qualifying_posts(timeline, cutoff, scope) {
        n += 1;
        rt += p.retweeted_count as u128;
        liked += p.liked_count as u128;
    }
    (n > 0).then(|| Engagement {
        mean_retweeted: rt as f64 / n as f64,
        mean_liked: liked as f64 / n as f64,
        posts: n,
    })
}

/// Profile counters as read from the input; any of them may be absent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProfileFields {
    pub user: UserId,
    pub statuses_count: Option<u64>,
    pub favourites_count: Option<u64>,
    pub followers_count: Option<u64>,
    pub friends_count: Option<u64>,
    pub created_at: Option<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserPropertyRecord {
    pub user: UserId,
    pub composition: Option<Composition>,
    pub tweets_per_day: Option<f64>,
    pub statuses_count: u64,
    pub favourites_count: u64,
    pub followers_count: u64,
    pub friends_count: u64,
    pub created_at: i64,
    pub engagement: Option<Engagement>,
    pub original_engagement: Option<Engagement>,
}

pub fn build_property_record(
    profile: &ProfileFields,
    timeline: &[PostRecord],
    cutoff: i64,
) -> Result<UserPropertyRecord> {
    let mut missing = Vec::new();
    if profile.statuses_count.is_none() {
        missing.push("statuses_count");
    }
    if profile.favourites_count.is_none() {
        missing.push("favourites_count");
    }
    if profile.followers_count.is_none() {
        missing.push("followers_count");
    }
    if profile.friends_count.is_none() {
        missing.push("friends_count");
    }
    if profile.created_at.is_none() {
        missing.push("created_at");
    }
    if !missing.is_empty() {
        return Err(Error::MissingField {
            user: profile.user.0,
            fields: missing.join(","),
        });
    }
    Ok(UserPropertyRecord {
        user: profile.user,
        composition: tweet_composition(timeline),
        tweets_per_day: tweets_per_day(timeline),
        statuses_count: profile.statuses_count.unwrap_or_default(),
        favourites_count: profile.favourites_count.unwrap_or_default(),
        followers_count: profile.followers_count.unwrap_or_default(),
        friends_count: profile.friends_count.unwrap_or_default(),
        created_at: profile.created_at.unwrap_or_default(),
        engagement: engagement_summary(timeline, cutoff, EngagementScope::All),
        original_engagement: engagement_summary(timeline, cutoff, EngagementScope::OriginalOnly),
    })
}

/// The per-user properties that get gridded and tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Property {
    POriginal,
    PRetweets,
    PReplies,
    PQuotes,
    StatusesCount,
    TweetsPerDay,
    FavouritesCount,
    CreatedAt,
    FriendsCount,
    FollowersCount,
    MeanRetweeted,
    MeanFavorited,
    MeanOriginalRetweeted,
    MeanOriginalFavorited,
}

impl Property {
    pub const ALL: [Property; 14] = [
        Property::POriginal,
        Property::PRetweets,
        Property::PReplies,
        Property::PQuotes,
        Property::StatusesCount,
        Property::TweetsPerDay,
        Property::FavouritesCount,
        Property::CreatedAt,
        Property::FriendsCount,
        Property::FollowersCount,
        Property::MeanRetweeted,
        Property::MeanFavorited,
        Property::MeanOriginalRetweeted,
        Property::MeanOriginalFavorited,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::POriginal => "p_original",
            Property::PRetweets => "p_retweets",
            Property::PReplies => "p_replies",
            Property::PQuotes => "p_quotes",
            Property::StatusesCount => "statuses_count",
            Property::TweetsPerDay => "tweets_per_day",
            Property::FavouritesCount => "favourites_count",
            Property::CreatedAt => "created_at",
            Property::FriendsCount => "friends_count",
            Property::FollowersCount => "followers_count",
            Property::MeanRetweeted => "mean_retweeted",
            Property::MeanFavorited => "mean_favorited",
            Property::MeanOriginalRetweeted => "mean_original_retweeted",
            Property::MeanOriginalFavorited => "mean_original_favorited",
        }
    }

    pub fn value(self, r: &UserPropertyRecord) -> Option<f64> {
        let comp = r.composition;
        match self {
            Property::POriginal => comp.map(|c| c.original),
            Property::PRetweets => comp.map(|c| c.retweet),
            Property::PReplies => comp.map(|c| c.reply),
            Property::PQuotes => comp.map(|c| c.quote),
            Property::StatusesCount => Some(r.statuses_count as f64),
            Property::TweetsPerDay => r.tweets_per_day,
            Property::FavouritesCount => Some(r.favourites_count as f64),
            Property::CreatedAt => Some(r.created_at as f64),
            Property::FriendsCount => Some(r.friends_count as f64),
            Property::FollowersCount => Some(r.followers_count as f64),
            Property::MeanRetweeted => r.engagement.map(|e| e.mean_retweeted),
            Property::MeanFavorited => r.engagement.map(|e| e.mean_liked),
            Property::MeanOriginalRetweeted => r.original_engagement.map(|e| e.mean_retweeted),
            Property::MeanOriginalFavorited => r.original_engagement.map(|e| e.mean_liked),
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Property {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let alias = match s {
            "mean_liked" => "mean_favorited",
            "mean_original_liked" => "mean_original_favorited",
            other => other,
        };
        Property::ALL
            .into_iter()
            .find(|p| p.name() == alias)
            .ok_or_else(|| Error::InvalidParameter(alloc::format!("unknown property {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn post(kind: PostKind, t: i64) -> PostRecord {
        PostRecord {
            author: UserId(1),
            created_at: t,
            kind,
            retweeted_count: 0,
            liked_count: 0,
            source_created_at: (kind == PostKind::Retweet).then_some(t),
            text: String::new(),
            lang: None,
        }
    }

    #[test]
    fn composition_counts() {
        use PostKind::*;
        let tl: Vec<_> = [Original, Retweet, Retweet, Reply]
            .into_iter()
            .map(|k| post(k, 0))
            .collect();
        let c = tweet_composition(&tl).unwrap();
        assert_eq!((c.original, c.retweet, c.reply, c.quote), (0.25, 0.5, 0.25, 0.0));
        let c = tweet_composition(&[post(Original, 0), post(Original, 1)]).unwrap();
        assert_eq!((c.original, c.retweet, c.reply, c.quote), (1.0, 0.0, 0.0, 0.0));
        assert!(tweet_composition(&[]).is_none());
    }

    #[test]
    fn precedence_rules() {
        let f = |s: &str| s.parse::<PostFlags>().unwrap();
        assert_eq!(f("retweet+reply").resolve(Default::default()), PostKind::Retweet);
        assert_eq!(f("quote+reply").resolve(Default::default()), PostKind::Reply);
        assert_eq!(
            f("quote+reply").resolve(KindPrecedence::QuoteOverReply),
            PostKind::Quote
        );
        assert_eq!(f("retweet+quote").resolve(KindPrecedence::QuoteOverReply), PostKind::Retweet);
        assert_eq!(f("quote").resolve(Default::default()), PostKind::Quote);
        assert_eq!(f("original").resolve(Default::default()), PostKind::Original);
        assert!("boost".parse::<PostFlags>().is_err());
    }

    #[test]
    fn rate_examples() {
        let day = 86_400;
        let mut tl: Vec<_> = (0..99).map(|i| post(PostKind::Original, i * 100)).collect();
        tl.push(post(PostKind::Original, 50 * day));
        assert_eq!(tweets_per_day(&tl), Some(2.0));
        let tl = [post(PostKind::Original, 0), post(PostKind::Original, day / 2)];
        assert_eq!(tweets_per_day(&tl), Some(4.0));
        assert_eq!(tweets_per_day(&[post(PostKind::Original, 0)]), None);
        assert_eq!(tweets_per_day(&[]), None);
        // burst: two posts in the same second use the one-second floor
        let tl = [post(PostKind::Original, 7), post(PostKind::Original, 7)];
        assert_eq!(tweets_per_day(&tl), Some(2.0 * 86_400.0));
    }

    #[test]
    fn engagement_cutoff() {
        let mut a = post(PostKind::Original, 10);
        a.retweeted_count = 3;
        let mut b = post(PostKind::Original, 20);
        b.retweeted_count = 5;
        let e = engagement_summary(&[a, b], 100, EngagementScope::All).unwrap();
        assert_eq!(e.mean_retweeted, 4.0);

        let mut late = post(PostKind::Original, 200);
        late.liked_count = 1000;
        let mut early = post(PostKind::Original, 50);
        early.liked_count = 10;
        let e = engagement_summary(&[late, early], 100, EngagementScope::All).unwrap();
        assert_eq!((e.mean_liked, e.posts), (10.0, 1));

        let mut rt = post(PostKind::Retweet, 500);
        rt.source_created_at = Some(40);
        rt.liked_count = 7;
        let e = engagement_summary(&[rt.clone()], 100, EngagementScope::All).unwrap();
        assert_eq!(e.mean_liked, 7.0);
        assert!(engagement_summary(&[rt], 100, EngagementScope::OriginalOnly).is_none());
    }

    #[test]
    fn record_requires_profile_fields() {
        let profile = ProfileFields {
            user: UserId(4),
            statuses_count: Some(1),
            favourites_count: None,
            followers_count: Some(2),
            friends_count: Some(3),
            created_at: None,
        };
        match build_property_record(&profile, &[], 0) {
            Err(Error::MissingField { user, fields }) => {
                assert_eq!(user, 4);
                assert_eq!(fields, "favourites_count,created_at");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn record_with_empty_timeline() {
        let profile = ProfileFields {
            user: UserId(4),
            statuses_count: Some(10),
            favourites_count: Some(20),
            followers_count: Some(2000),
            friends_count: Some(230),
            created_at: Some(1_300_000_000),
        };
        let r = build_property_record(&profile, &[], 0).unwrap();
        assert!(r.composition.is_none() && r.tweets_per_day.is_none());
        assert!(r.engagement.is_none() && r.original_engagement.is_none());
        assert_eq!((r.followers_count, r.friends_count), (2000, 230));
        assert_eq!(Property::FollowersCount.value(&r), Some(2000.0));
        assert_eq!(Property::PRetweets.value(&r), None);
    }

    #[test]
    fn validation_and_cap() {
        let mut rt = post(PostKind::Retweet, 5);
        assert!(rt.validate().is_ok());
        rt.source_created_at = None;
        assert!(rt.validate().is_err());
        let mut o = post(PostKind::Original, 5);
        o.source_created_at = Some(1);
        assert!(o.validate().is_err());

        let mut tl: Vec<_> = (0..10).map(|t| post(PostKind::Original, t)).collect();
        cap_timeline(&mut tl, 3);
        let times: Vec<_> = tl.iter().map(|p| p.created_at).collect();
        assert_eq!(times, vec![9, 8, 7]);
    }

    #[test]
    fn property_names_parse() {
        for p in Property::ALL {
            assert_eq!(p.name().parse::<Property>().unwrap(), p);
        }
        assert_eq!("mean_liked".parse::<Property>().unwrap(), Property::MeanFavorited);
    }
}
