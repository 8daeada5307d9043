//! Timeline and profile files.
//!
//! Timelines come in two encodings that carry the same fields:
//!
//! * TSV: `author, created_at, kind, retweeted_count, liked_count,
//!   source_created_at, text[, lang]`. An empty `source_created_at` or `lang`
//!   means absent. Inside `text` a backslash escapes itself, tab (`\t`),
//!   newline (`\n`) and carriage return (`\r`).
//! * JSON lines (`.jsonl` / `.ndjson`): one object per line with the same
//!   field names.
//!
//! `kind` is `original` or a `+`-joined set of `retweet`, `reply`, `quote`;
//! combined markers are resolved with the configured [`KindPrecedence`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use recispace_core::activity::{cap_timeline, KindPrecedence, PostFlags, PostRecord, ProfileFields};
use recispace_core::UserId;
use serde::{Deserialize, Serialize};

use crate::tables::{Provenance, Table};
use crate::{Error, Result};

pub type Timelines = BTreeMap<UserId, Vec<PostRecord>>;

pub const TIMELINE_COLUMNS: [&str; 8] = [
    "author",
    "created_at",
    "kind",
    "retweeted_count",
    "liked_count",
    "source_created_at",
    "text",
    "lang",
];

pub fn escape_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape_text(s: &str) -> std::result::Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(o) => return Err(format!("unknown escape \\{o}")),
            None => return Err("dangling backslash".into()),
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonPost {
    author: u64,
    created_at: i64,
    kind: String,
    #[serde(default)]
    retweeted_count: u64,
    #[serde(default)]
    liked_count: u64,
    #[serde(default)]
    source_created_at: Option<i64>,
    #[serde(default)]
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lang: Option<String>,
}

fn is_jsonl(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("jsonl") | Some("ndjson")
    )
}

fn parse_tsv_post(fields: &[&str], precedence: KindPrecedence) -> std::result::Result<PostRecord, String> {
    if fields.len() != 7 && fields.len() != 8 {
        return Err(format!("expected 7 or 8 fields, found {}", fields.len()));
    }
    let num = |i: usize| -> std::result::Result<i64, String> {
        fields[i]
            .trim()
            .parse::<i64>()
            .map_err(|e| format!("{}: {:?}: {e}", TIMELINE_COLUMNS[i], fields[i]))
    };
    let count = |i: usize| -> std::result::Result<u64, String> {
        fields[i]
            .trim()
            .parse::<u64>()
            .map_err(|e| format!("{}: {:?}: {e}", TIMELINE_COLUMNS[i], fields[i]))
    };
    let flags: PostFlags = fields[2].trim().parse().map_err(|e| format!("kind: {e}"))?;
    let source = match fields[5].trim() {
        "" => None,
        _ => Some(num(5)?),
    };
    let lang = fields
        .get(7)
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(str::to_owned);
    Ok(PostRecord {
        author: UserId(count(0)?),
        created_at: num(1)?,
        kind: flags.resolve(precedence),
        retweeted_count: count(3)?,
        liked_count: count(4)?,
        source_created_at: source,
        text: unescape_text(fields[6])?,
        lang,
    })
}

fn parse_json_post(line: &str, precedence: KindPrecedence) -> std::result::Result<PostRecord, String> {
    let j: JsonPost = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let flags: PostFlags = j.kind.parse().map_err(|e| format!("kind: {e}"))?;
    Ok(PostRecord {
        author: UserId(j.author),
        created_at: j.created_at,
        kind: flags.resolve(precedence),
        retweeted_count: j.retweeted_count,
        liked_count: j.liked_count,
        source_created_at: j.source_created_at,
        text: j.text,
        lang: j.lang.filter(|s| !s.is_empty()),
    })
}

/// Parses timeline text in either encoding; `path` is used for messages only.
pub fn parse_timelines(
    path: &Path,
    text: &str,
    jsonl: bool,
    precedence: KindPrecedence,
) -> Result<Vec<PostRecord>> {
    let mut posts = Vec::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let post = if jsonl {
            parse_json_post(line, precedence)
        } else {
            let fields: Vec<&str> = line.split('\t').collect();
            if !header_seen && posts.is_empty() && fields[0].trim() == "author" {
                header_seen = true;
                continue;
            }
            parse_tsv_post(&fields, precedence)
        }
        .map_err(|m| Error::format(path, i + 1, m))?;
        post.validate()
            .map_err(|e| Error::format(path, i + 1, e.to_string()))?;
        posts.push(post);
    }
    Ok(posts)
}

pub fn read_timelines(path: &Path, precedence: KindPrecedence) -> Result<Vec<PostRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_timelines(path, &text, is_jsonl(path), precedence)
}

/// Groups posts by author, newest first, optionally keeping only the `cap`
/// most recent per user.
pub fn group_timelines(posts: Vec<PostRecord>, cap: Option<usize>) -> Timelines {
    let mut out: Timelines = BTreeMap::new();
    for p in posts {
        out.entry(p.author).or_default().push(p);
    }
    for tl in out.values_mut() {
        cap_timeline(tl, cap.unwrap_or(usize::MAX));
    }
    out
}

pub fn timelines_tsv(prov: &Provenance, posts: &[PostRecord]) -> String {
    let mut out = prov.line();
    out.push_str(&TIMELINE_COLUMNS.join("\t"));
    out.push('\n');
    for p in posts {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            p.author,
            p.created_at,
            p.kind,
            p.retweeted_count,
            p.liked_count,
            p.source_created_at.map(|t| t.to_string()).unwrap_or_default(),
            escape_text(&p.text),
            p.lang.as_deref().unwrap_or("")
        );
    }
    out
}

pub fn timelines_jsonl(posts: &[PostRecord]) -> String {
    let mut out = String::new();
    for p in posts {
        let j = JsonPost {
            author: p.author.0,
            created_at: p.created_at,
            kind: p.kind.as_str().to_owned(),
            retweeted_count: p.retweeted_count,
            liked_count: p.liked_count,
            source_created_at: p.source_created_at,
            text: p.text.clone(),
            lang: p.lang.clone(),
        };
        // serializing plain data cannot fail
        out.push_str(&serde_json::to_string(&j).unwrap_or_default());
        out.push('\n');
    }
    out
}

pub const PROFILE_COLUMNS: [&str; 6] = [
    "user",
    "statuses_count",
    "favourites_count",
    "followers_count",
    "friends_count",
    "created_at",
];

fn opt_num<T: std::str::FromStr>(table: &Table, line: usize, row: &[String], name: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    let Some(col) = table.opt_col(name) else {
        return Ok(None);
    };
    match row.get(col).map(|s| s.trim()) {
        None | Some("") | Some("NA") => Ok(None),
        Some(_) => table.parse_field(line, row, col).map(Some),
    }
}

/// Missing columns and empty cells both read as absent.
pub fn read_profiles(path: &Path) -> Result<BTreeMap<UserId, ProfileFields>> {
    let table = Table::read(path)?;
    let user_col = table.col("user")?;
    let mut out = BTreeMap::new();
    for (line, row) in &table.rows {
        let user: UserId = table.parse_field(*line, row, user_col)?;
        let p = ProfileFields {
            user,
            statuses_count: opt_num(&table, *line, row, "statuses_count")?,
            favourites_count: opt_num(&table, *line, row, "favourites_count")?,
            followers_count: opt_num(&table, *line, row, "followers_count")?,
            friends_count: opt_num(&table, *line, row, "friends_count")?,
            created_at: opt_num(&table, *line, row, "created_at")?,
        };
        if out.insert(user, p).is_some() {
            return Err(Error::format(path, *line, format!("duplicate user {user}")));
        }
    }
    Ok(out)
}

pub fn profiles_tsv(prov: &Provenance, profiles: &[ProfileFields]) -> String {
    fn cell<T: ToString>(v: Option<T>) -> String {
        v.map(|x| x.to_string()).unwrap_or_default()
    }
    let mut out = prov.line();
    out.push_str(&PROFILE_COLUMNS.join("\t"));
    out.push('\n');
    for p in profiles {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            p.user,
            cell(p.statuses_count),
            cell(p.favourites_count),
            cell(p.followers_count),
            cell(p.friends_count),
            cell(p.created_at)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escapes_round_trip() {
        let s = "a\tb\\n\nc\r";
        assert_eq!(unescape_text(&escape_text(s)).unwrap(), s);
        assert!(unescape_text("bad\\x").is_err());
        assert!(unescape_text("bad\\").is_err());
    }

    #[test]
    fn combined_markers_follow_precedence() {
        let text = "1\t10\treply+quote\t0\t0\t\thi\n";
        let p = Path::new("t.tsv");
        let a = parse_timelines(p, text, false, KindPrecedence::ReplyOverQuote).unwrap();
        let b = parse_timelines(p, text, false, KindPrecedence::QuoteOverReply).unwrap();
        assert_eq!(a[0].kind.as_str(), "reply");
        assert_eq!(b[0].kind.as_str(), "quote");
    }

    #[test]
    fn retweet_without_source_is_rejected() {
        let text = "1\t10\tretweet\t0\t0\t\thi\n";
        let err = parse_timelines(Path::new("t.tsv"), text, false, KindPrecedence::default());
        assert!(matches!(err, Err(Error::Format { line: 1, .. })));
    }
}
