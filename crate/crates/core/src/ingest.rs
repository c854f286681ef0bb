//! Forum issue exports: broken-page URLs, filter-rule kinds and the list
//! versions an issue refers to.
//!
//! URL extraction follows each forum's posting conventions:
//!
//! * EasyList titles usually name the site, so body URLs on the same
//!   registrable domain as a title domain are kept.
//! * uBlock issue templates put the URL after "URL address of the web page"
//!   or "### URL(s) where the issue occurs", before "### Category".
//! * AdGuard templates put it after "### Issue URL", "** Issue URL" or
//!   "Where is the problem encountered?"; posts without one of these
//!   markers are dropped.
//!
//! When no candidate or several candidates survive, the record is flagged
//! for manual investigation.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use chrono::{DateTime, FixedOffset};
use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Forum {
    Easylist,
    Ublock,
    Adguard,
}

impl std::str::FromStr for Forum {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "easylist" => Ok(Forum::Easylist),
            "ublock" => Ok(Forum::Ublock),
            "adguard" => Ok(Forum::Adguard),
            other => Err(format!("unknown forum `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuthorRole {
    User,
    Maintainer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IssueEvent {
    pub author_role: AuthorRole,
    pub timestamp: DateTime<FixedOffset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commit_ref: Option<String>,
    #[serde(default)]
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IssueRecord {
    #[serde(default)]
    pub id: String,
    pub forum: Forum,
    pub title: String,
    pub body: String,
    pub created_at: DateTime<FixedOffset>,
    #[serde(default)]
    pub events: Vec<IssueEvent>,
    /// Filter rules touched by the fix, when the export includes them.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rules: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "url", rename_all = "lowercase")]
pub enum UrlExtraction {
    Url(String),
    Manual,
    Drop,
}

static URL_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r#"https?://[^\s<>"'`\]\[()]+"#).unwrap());
static HOST_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?i)\b(?:[a-z0-9](?:[a-z0-9-]*[a-z0-9])?\.)+[a-z][a-z0-9-]*[a-z0-9]\b").unwrap());

fn urls_in(text: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for m in URL_RE.find_iter(text) {
        let u = m.as_str().trim_end_matches(['.', ',', ';', ':', '!', '?', '*', '>']);
        if url::Url::parse(u).ok().and_then(|p| p.host_str().map(str::to_string)).is_some() && seen.insert(u.to_string())
        {
            out.push(u.to_string());
        }
    }
    out
}

/// Registrable domain (eTLD+1) of a host name.
pub fn registrable_domain(host: &str) -> Option<String> {
    let host = host.trim_end_matches('.').to_ascii_lowercase();
    psl::domain_str(&host).map(str::to_string)
}

fn url_domain(u: &str) -> Option<String> {
    url::Url::parse(u).ok()?.host_str().and_then(registrable_domain)
}

/// Registrable domains mentioned in free text (bare hosts or URLs).
fn text_domains(text: &str) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = urls_in(text).iter().filter_map(|u| url_domain(u)).collect();
    for m in HOST_RE.find_iter(text) {
        if let Some(d) = registrable_domain(m.as_str()) {
            // psl accepts unknown TLDs as suffixes; require a known one
            if psl::suffix_str(m.as_str()).is_some() && is_known_suffix(m.as_str()) {
                out.insert(d);
            }
        }
    }
    out
}

fn is_known_suffix(host: &str) -> bool {
    psl::suffix(host.to_ascii_lowercase().as_bytes()).is_some_and(|s| s.is_known())
}

/// Text after the first of `markers`, up to the next heading line.
fn section_after<'t>(text: &'t str, markers: &[&str]) -> Option<&'t str> {
    let lower = text.to_ascii_lowercase();
    let (pos, len) = markers
        .iter()
        .filter_map(|m| lower.find(&m.to_ascii_lowercase()).map(|p| (p, m.len())))
        .min()?;
    let rest = &text[pos + len..];
    // skip the remainder of the marker line only if it holds no URL
    let end = rest
        .match_indices('\n')
        .map(|(i, _)| i + 1)
        .find(|&i| {
            let line = rest[i..].trim_start();
            line.starts_with("###") || line.starts_with("**")
        })
        .unwrap_or(rest.len());
    Some(&rest[..end])
}

fn pick(candidates: Vec<String>, title_domains: &BTreeSet<String>) -> UrlExtraction {
    let narrowed: Vec<String> = if title_domains.is_empty() {
        candidates.clone()
    } else {
        let same: Vec<String> = candidates
            .iter()
            .filter(|u| url_domain(u).is_some_and(|d| title_domains.contains(&d)))
            .cloned()
            .collect();
        if same.is_empty() {
            candidates.clone()
        } else {
            same
        }
    };
    match narrowed.as_slice() {
        [one] => UrlExtraction::Url(one.clone()),
        _ => UrlExtraction::Manual,
    }
}

pub fn extract_issue_url(rec: &IssueRecord) -> UrlExtraction {
    let title_domains = text_domains(&rec.title);
    match rec.forum {
        Forum::Easylist => {
            if title_domains.is_empty() {
                return UrlExtraction::Manual;
            }
            let same: Vec<String> = urls_in(&rec.body)
                .into_iter()
                .filter(|u| url_domain(u).is_some_and(|d| title_domains.contains(&d)))
                .collect();
            match same.as_slice() {
                [one] => UrlExtraction::Url(one.clone()),
                _ => UrlExtraction::Manual,
            }
        }
        Forum::Ublock => {
            let section = section_after(&rec.body, &["URL address of the web page", "### URL(s) where the issue occurs"])
                .or_else(|| {
                    let lower = rec.body.to_ascii_lowercase();
                    let cat = lower.find("### category")?;
                    let head = &rec.body[..cat];
                    let start = head.rfind("###").map_or(0, |p| p + 3);
                    Some(&rec.body[start..cat])
                });
            match section {
                Some(s) => pick(urls_in(s), &title_domains),
                None => UrlExtraction::Manual,
            }
        }
        Forum::Adguard => {
            match section_after(&rec.body, &["### Issue URL", "** Issue URL", "Where is the problem encountered?"]) {
                Some(s) => pick(urls_in(s), &title_domains),
                None => UrlExtraction::Drop,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RuleKind {
    Blocking,
    Content,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("not a filter rule: `{0}`")]
    UnparsableRule(String),
}

/// Separators of cosmetic, HTML-filtering, CSS-injection and scriptlet
/// rules across the common blocker dialects.
const CONTENT_MARKERS: &[&str] = &[
    "##", "#@#", "#?#", "#@?#", "#$#", "#@$#", "#$?#", "#@$?#", "#%#", "#@%#", "$$", "$@$",
];

pub fn classify_filter_rule(rule: &str) -> Result<RuleKind, RuleError> {
    let r = rule.trim();
    let bad = || RuleError::UnparsableRule(rule.to_string());
    if r.is_empty() || r.starts_with('!') || (r.starts_with('[') && r.ends_with(']')) {
        return Err(bad());
    }
    if r.starts_with('#') && !CONTENT_MARKERS.iter().any(|m| r.starts_with(m)) {
        // hosts-file style comment
        return Err(bad());
    }
    if CONTENT_MARKERS.iter().any(|m| r.contains(m)) {
        return Ok(RuleKind::Content);
    }
    if r.chars().any(char::is_whitespace) {
        return Err(bad());
    }
    Ok(RuleKind::Blocking)
}

/// A filter-list version: the state just before a commit, or at it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "at", content = "commit", rename_all = "lowercase")]
pub enum ListRef {
    Pre(String),
    Commit(String),
}

impl fmt::Display for ListRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ListRef::Pre(c) => write!(f, "PRE({c})"),
            ListRef::Commit(c) => f.write_str(c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListRecovery {
    pub breaking_ref: ListRef,
    pub fixing_ref: ListRef,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IngestError {
    #[error("issue `{0}` has no maintainer commit")]
    NoMaintainerCommit(String),
}

/// Breaking list: the state before the first maintainer commit. Fixing
/// list: the last commit of the issue.
pub fn recover_list_refs(rec: &IssueRecord) -> Result<ListRecovery, IngestError> {
    let mut events: Vec<&IssueEvent> = rec.events.iter().collect();
    events.sort_by_key(|e| e.timestamp);
    let first = events
        .iter()
        .find(|e| e.author_role == AuthorRole::Maintainer && e.commit_ref.is_some())
        .and_then(|e| e.commit_ref.clone())
        .ok_or_else(|| IngestError::NoMaintainerCommit(rec.id.clone()))?;
    let last = events.iter().rev().find_map(|e| e.commit_ref.clone()).expect("a commit exists");
    Ok(ListRecovery { breaking_ref: ListRef::Pre(first), fixing_ref: ListRef::Commit(last) })
}

/// One line of the ingest output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestedIssue {
    pub id: String,
    pub forum: Forum,
    pub title: String,
    pub url: UrlExtraction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lists: Option<ListRecovery>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rule_kinds: Vec<(String, Option<RuleKind>)>,
}

pub fn ingest_record(rec: &IssueRecord) -> IngestedIssue {
    IngestedIssue {
        id: rec.id.clone(),
        forum: rec.forum,
        title: rec.title.clone(),
        url: extract_issue_url(rec),
        lists: recover_list_refs(rec).ok(),
        rule_kinds: rec.rules.iter().map(|r| (r.clone(), classify_filter_rule(r).ok())).collect(),
    }
}

/// Reads an export: a JSON array of issue records. `forum` overrides the
/// per-record forum when given.
pub fn read_export(path: impl AsRef<Path>, forum: Option<Forum>) -> Result<Vec<IssueRecord>, crate::Error> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
    let mut recs: Vec<IssueRecord> = serde_json::from_str(&text)?;
    if let Some(f) = forum {
        recs.iter_mut().for_each(|r| r.forum = f);
    }
    Ok(recs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(forum: Forum, title: &str, body: &str) -> IssueRecord {
        IssueRecord {
            id: "t".into(),
            forum,
            title: title.into(),
            body: body.into(),
            created_at: DateTime::parse_from_rfc3339("2023-05-01T10:00:00Z").unwrap(),
            events: vec![],
            rules: vec![],
        }
    }

    #[test]
    fn easylist_same_domain_as_title() {
        let r = rec(Forum::Easylist, "example.com broken", "see https://example.com/p and https://ads.net/x");
        assert_eq!(extract_issue_url(&r), UrlExtraction::Url("https://example.com/p".into()));
        let two = rec(Forum::Easylist, "example.com broken", "https://example.com/a https://www.example.com/b");
        assert_eq!(extract_issue_url(&two), UrlExtraction::Manual);
    }

    #[test]
    fn adguard_marker_or_drop() {
        let r = rec(Forum::Adguard, "Video missing", "### Issue URL\nhttps://video.example.org/watch?v=1\n### Comment\nhelp");
        assert_eq!(extract_issue_url(&r), UrlExtraction::Url("https://video.example.org/watch?v=1".into()));
        let d = rec(Forum::Adguard, "Video missing", "it is broken at https://x.org");
        assert_eq!(extract_issue_url(&d), UrlExtraction::Drop);
    }

    #[test]
    fn rule_kinds() {
        assert_eq!(classify_filter_rule("||ads.example.com^"), Ok(RuleKind::Blocking));
        assert_eq!(classify_filter_rule("example.com##.banner"), Ok(RuleKind::Content));
        assert!(classify_filter_rule("! comment line").is_err());
    }

    fn ev(role: AuthorRole, t: &str, c: Option<&str>) -> IssueEvent {
        IssueEvent {
            author_role: role,
            timestamp: DateTime::parse_from_rfc3339(t).unwrap(),
            commit_ref: c.map(str::to_string),
            text: String::new(),
        }
    }

    #[test]
    fn list_refs() {
        let mut r = rec(Forum::Easylist, "a.com", "");
        assert!(recover_list_refs(&r).is_err());
        r.events = vec![ev(AuthorRole::Maintainer, "2023-05-02T00:00:00Z", Some("C1"))];
        let l = recover_list_refs(&r).unwrap();
        assert_eq!((l.breaking_ref.to_string(), l.fixing_ref.to_string()), ("PRE(C1)".into(), "C1".into()));
        r.events.push(ev(AuthorRole::Maintainer, "2023-05-04T00:00:00Z", Some("C2")));
        r.events.insert(0, ev(AuthorRole::User, "2023-05-01T12:00:00Z", None));
        let l = recover_list_refs(&r).unwrap();
        assert_eq!((l.breaking_ref.to_string(), l.fixing_ref.to_string()), ("PRE(C1)".into(), "C2".into()));
    }
}
