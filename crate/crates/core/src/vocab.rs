//! Characteristic vocabulary per category via user-level chi-square scores.
//!
//! Every user contributes one document: the set of distinct tokens over their
//! qualifying posts. A word's association with a category is scored on the
//! 2x2 table of users (using / not using the word) x (inside / outside the
//! category).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::activity::{PostKind, PostRecord};
use crate::graph::UserId;
use crate::{Error, Result};

/// The stopword list bundled with the crate.
pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

/// Parses a stopword list: one word per line, `#` comments and blank lines
/// ignored, words lowercased.
pub fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_lowercase())
        .collect()
}

#[derive(Debug, Clone)]
pub struct TokenizerOptions {
    pub stopwords: BTreeSet<String>,
    /// Keep `#tag` tokens (with the `#`); when false they are dropped.
    pub keep_hashtags: bool,
}

impl Default for TokenizerOptions {
    fn default() -> Self {
        Self {
            stopwords: parse_stopwords(DEFAULT_STOPWORDS),
            keep_hashtags: true,
        }
    }
}

fn url_start(chunk: &str) -> Option<usize> {
    let lower = chunk.to_ascii_lowercase();
    ["http://", "https://", "www."]
        .iter()
        .filter_map(|pat| lower.find(pat))
        .min()
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Mentions, URLs, emoji and punctuation are stripped, text is lowercased,
/// split on whitespace and filtered against the stopword list. Apostrophes
/// survive only between two alphanumerics; `#` only at the start of a
/// hashtag.
pub fn preprocess_text(text: &str, opts: &TokenizerOptions) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let chunk = match url_start(chunk) {
            Some(i) => &chunk[..i],
            None => chunk,
        };
        let chars: Vec<char> = chunk.chars().collect();
        let mut cleaned = String::with_capacity(chunk.len());
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let prev = i.checked_sub(1).map(|j| chars[j]);
            let next = chars.get(i + 1).copied();
            if c == '@' && next.is_some_and(is_word_char) {
                i += 1;
                while i < chars.len() && is_word_char(chars[i]) {
                    i += 1;
                }
                cleaned.push(' ');
                continue;
            }
            if c.is_alphanumeric() {
                cleaned.extend(c.to_lowercase());
            } else if (c == '\'' || c == '\u{2019}')
                && prev.is_some_and(char::is_alphanumeric)
                && next.is_some_and(char::is_alphanumeric)
            {
                cleaned.push('\'');
            } else if c == '#'
                && !prev.is_some_and(char::is_alphanumeric)
                && next.is_some_and(char::is_alphanumeric)
            {
                cleaned.push(' ');
                cleaned.push('#');
            } else {
                cleaned.push(' ');
            }
            i += 1;
        }
        for tok in cleaned.split_whitespace() {
            if tok.starts_with('#') && !opts.keep_hashtags {
                continue;
            }
            if opts.stopwords.contains(tok) {
                continue;
            }
            tokens.push(String::from(tok));
        }
    }
    tokens
}

/// Tokenizes raw bytes, replacing invalid UTF-8 first.
pub fn preprocess_bytes(raw: &[u8], opts: &TokenizerOptions) -> Vec<String> {
    preprocess_text(&String::from_utf8_lossy(raw), opts)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserDocument {
    pub user: UserId,
    pub vocabulary: BTreeSet<String>,
}

/// Which posts feed a user's document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentFilter {
    /// Required language tag; `None` accepts any post.
    pub lang: Option<String>,
    pub originals_only: bool,
}

impl Default for DocumentFilter {
    fn default() -> Self {
        Self {
            lang: Some(String::from("en")),
            originals_only: true,
        }
    }
}

impl DocumentFilter {
    pub fn accepts(&self, post: &PostRecord) -> bool {
        (!self.originals_only || post.kind == PostKind::Original)
            && match &self.lang {
                Some(want) => post.lang.as_deref() == Some(want.as_str()),
                None => true,
            }
    }
}

/// One document per user timeline supplied. A user without qualifying posts
/// gets an empty vocabulary.
pub fn build_user_documents<'a, I>(
    timelines: I,
    filter: &DocumentFilter,
    opts: &TokenizerOptions,
) -> Vec<UserDocument>
where
    I: IntoIterator<Item = (UserId, &'a [PostRecord])>,
{
    timelines
        .into_iter()
        .map(|(user, posts)| {
            let vocabulary = posts
                .iter()
                .filter(|p| filter.accepts(p))
                .flat_map(|p| preprocess_text(&p.text, opts))
                .collect();
            UserDocument { user, vocabulary }
        })
        .collect()
}

/// User counts for one (word, category) table. The first digit is word use,
/// the second category membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ContingencyCounts {
    pub n11: u64,
    pub n10: u64,
    pub n01: u64,
    pub n00: u64,
}

impl ContingencyCounts {
    pub fn n_all(&self) -> u64 {
        self.n11 + self.n10 + self.n01 + self.n00
    }

    pub fn positively_associated(&self) -> bool {
        (self.n11 as u128) * (self.n00 as u128) > (self.n10 as u128) * (self.n01 as u128)
    }
}

/// Pearson chi-square over the four cells. A cell whose expected count is 0
/// contributes 0.
pub fn chi_square(c: &ContingencyCounts) -> Result<f64> {
    let n_all = c.n_all();
    if n_all == 0 {
        return Err(Error::Empty("contingency table"));
    }
    let n = n_all as f64;
    let (n00, n01, n10, n11) = (c.n00 as f64, c.n01 as f64, c.n10 as f64, c.n11 as f64);
    let e00 = (n01 + n00) * (n10 + n00) / n;
    let e01 = (n01 + n11) * (n00 + n01) / n;
    let e10 = (n10 + n11) * (n00 + n10) / n;
    let e11 = (n01 + n11) * (n10 + n11) / n;
    let term = |e: f64, obs: f64| if e == 0.0 { 0.0 } else { (e - obs) * (e - obs) / e };
    Ok(term(e00, n00) + term(e01, n01) + term(e10, n10) + term(e11, n11))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquareResult {
    pub word: String,
    pub score: f64,
    pub counts: ContingencyCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VocabParams {
    pub k: usize,
    /// Minimum number of users (over the whole population) using a word.
    pub min_support: u64,
    /// Count users with empty documents in the population.
    pub include_empty_users: bool,
}

impl Default for VocabParams {
    fn default() -> Self {
        Self {
            k: 20,
            min_support: 5,
            include_empty_users: true,
        }
    }
}

/// Top `k` positively associated words per category, by descending score,
/// ties broken by the word. The population is the set of users in
/// `assignment`; documents for users outside it are ignored, and users
/// without a document count as using no word.
pub fn top_k_words<C: Ord + Clone>(
    docs: &[UserDocument],
    assignment: &BTreeMap<UserId, C>,
    params: &VocabParams,
) -> Result<BTreeMap<C, Vec<ChiSquareResult>>> {
    if params.k == 0 || params.min_support == 0 {
        return Err(Error::InvalidParameter(
            "k and min_support must be >= 1".into(),
        ));
    }
    let with_doc: BTreeMap<UserId, &UserDocument> = docs
        .iter()
        .filter(|d| assignment.contains_key(&d.user))
        .map(|d| (d.user, d))
        .collect();

    let mut category_sizes: BTreeMap<C, u64> = BTreeMap::new();
    let mut n_all = 0u64;
    for (user, cat) in assignment {
        let has_words = with_doc.get(user).is_some_and(|d| !d.vocabulary.is_empty());
        if !params.include_empty_users && !has_words {
            continue;
        }
        n_all += 1;
        *category_sizes.entry(cat.clone()).or_default() += 1;
    }

    // word -> (users using it, per-category users using it)
    let mut usage: BTreeMap<&str, (u64, BTreeMap<C, u64>)> = BTreeMap::new();
    for doc in with_doc.values() {
        let cat = &assignment[&doc.user];
        for word in &doc.vocabulary {
            let entry = usage.entry(word.as_str()).or_default();
            entry.0 += 1;
            *entry.1.entry(cat.clone()).or_default() += 1;
        }
    }

    let mut out = BTreeMap::new();
    for (cat, &size) in &category_sizes {
        let mut scored = Vec::new();
        for (word, (total, per_cat)) in &usage {
            if *total < params.min_support {
                continue;
            }
            let n11 = per_cat.get(cat).copied().unwrap_or(0);
            let n10 = total - n11;
            let n01 = size - n11;
            let n00 = n_all - n11 - n10 - n01;
            let counts = ContingencyCounts { n11, n10, n01, n00 };
            if !counts.positively_associated() {
                continue;
            }
            scored.push(ChiSquareResult {
                word: String::from(*word),
                score: chi_square(&counts)?,
                counts,
            });
        }
        scored.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.word.cmp(&b.word)));
        scored.truncate(params.k);
        out.insert(cat.clone(), scored);
    }
    Ok(out)
}
