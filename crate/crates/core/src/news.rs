//! News acquisition: fixture/feed ingestion, anchor construction, batch
//! assignment, and topic stratification.
//!
//! Anchors are immutable after ingestion. `news_id` is a pure content hash of
//! (source, headline, published_at), so re-ingesting the same items yields
//! identical identifiers and downstream artifacts stay stable.

use chrono::{DateTime, Utc};
use quick_xml::events::Event;
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::sha256_hex;
use crate::taxonomy::TopicRules;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("could not read {path:?}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("fixture parse error at byte offset {offset} (line {line}): {message}")]
    Fixture {
        offset: u64,
        line: usize,
        message: String,
    },
    #[error("feed parse error at byte offset {offset}: {message}")]
    Feed { offset: u64, message: String },
    #[error("feed fetch failed for {url}: {message}")]
    Fetch { url: String, message: String },
    #[error("no anchors ingested")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopicStratum {
    IdentityNeutral,
    IdentityRelevant,
    Unlabeled,
}

impl TopicStratum {
    pub fn as_str(self) -> &'static str {
        match self {
            TopicStratum::IdentityNeutral => "identity_neutral",
            TopicStratum::IdentityRelevant => "identity_relevant",
            TopicStratum::Unlabeled => "unlabeled",
        }
    }
}

/// One live news item; the anchor text substituted into every prompt.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NewsAnchor {
    pub news_id: String,
    pub source: String,
    pub url: Option<String>,
    pub headline: String,
    pub description: Option<String>,
    pub retrieved_at: DateTime<Utc>,
    pub published_at: Option<DateTime<Utc>>,
    pub batch_id: String,
    pub topic_stratum: TopicStratum,
}

impl NewsAnchor {
    /// Headline plus the short description when present, newline-joined.
    pub fn anchor_text(&self) -> String {
        match &self.description {
            Some(desc) if !desc.is_empty() => format!("{}\n{}", self.headline, desc),
            _ => self.headline.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NewsBatch {
    pub batch_id: String,
    pub anchors: Vec<NewsAnchor>,
    pub collected_at: DateTime<Utc>,
}

/// Ingestion bookkeeping: skipped items are counted, never silently dropped.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub items_seen: usize,
    pub skipped_empty_headline: usize,
}

/// `news_id` derivation: sha256 over (source, headline, published_at),
/// hex-encoded, 64 chars.
pub fn news_id(source: &str, headline: &str, published_at: Option<DateTime<Utc>>) -> String {
    let stamp = published_at.map(|t| t.to_rfc3339()).unwrap_or_default();
    sha256_hex(format!("{source}\x1f{headline}\x1f{stamp}").as_bytes())
}

#[derive(Debug, Deserialize)]
struct FixtureRecord {
    source: String,
    #[serde(default)]
    url: Option<String>,
    headline: String,
    #[serde(default)]
    description: Option<String>,
    #[serde(default)]
    published_at: Option<DateTime<Utc>>,
    #[serde(default)]
    batch_id: Option<String>,
}

/// Parse a line-delimited JSON fixture of news records.
///
/// Records with an empty headline are skipped and counted. Malformed lines
/// abort with the byte offset of the offending line.
pub fn ingest_fixture_str(
    text: &str,
    retrieved_at: DateTime<Utc>,
) -> Result<(Vec<NewsAnchor>, IngestStats), IngestError> {
    let mut anchors = Vec::new();
    let mut stats = IngestStats::default();
    let mut offset: u64 = 0;
    for (line_no, line) in text.lines().enumerate() {
        let line_offset = offset;
        offset += line.len() as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: FixtureRecord =
            serde_json::from_str(line).map_err(|e| IngestError::Fixture {
                offset: line_offset + e.column().saturating_sub(1) as u64,
                line: line_no + 1,
                message: e.to_string(),
            })?;
        stats.items_seen += 1;
        if record.headline.trim().is_empty() {
            stats.skipped_empty_headline += 1;
            continue;
        }
        anchors.push(NewsAnchor {
            news_id: news_id(&record.source, &record.headline, record.published_at),
            source: record.source,
            url: record.url,
            headline: record.headline,
            description: record.description.filter(|d| !d.trim().is_empty()),
            retrieved_at,
            published_at: record.published_at,
            batch_id: record.batch_id.unwrap_or_default(),
            topic_stratum: TopicStratum::Unlabeled,
        });
    }
    Ok((anchors, stats))
}

pub fn ingest_fixture_file(
    path: &std::path::Path,
    retrieved_at: DateTime<Utc>,
) -> Result<(Vec<NewsAnchor>, IngestStats), IngestError> {
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Read {
        path: path.display().to_string(),
        source,
    })?;
    ingest_fixture_str(&text, retrieved_at)
}

/// Parse RSS 2.0 or Atom feed XML into anchors.
///
/// Only the fields the pipeline needs are extracted: title, link,
/// description/summary, and publication timestamp.
pub fn ingest_feed_xml(
    xml: &str,
    source: &str,
    retrieved_at: DateTime<Utc>,
) -> Result<(Vec<NewsAnchor>, IngestStats), IngestError> {
    let mut reader = Reader::from_str(xml);
    reader.config_mut().trim_text(true);

    let mut anchors = Vec::new();
    let mut stats = IngestStats::default();
    let mut in_item = false;
    let mut field: Option<&'static str> = None;
    let mut title = String::new();
    let mut link = String::new();
    let mut description = String::new();
    let mut pub_date = String::new();

    loop {
        match reader.read_event() {
            Ok(Event::Start(e)) => {
                let name = e.local_name();
                match name.as_ref() {
                    b"item" | b"entry" => {
                        in_item = true;
                        title.clear();
                        link.clear();
                        description.clear();
                        pub_date.clear();
                    }
                    b"title" if in_item => field = Some("title"),
                    b"link" if in_item => {
                        field = Some("link");
                        // Atom carries the link as an attribute
                        if let Some(href) = e
                            .attributes()
                            .flatten()
                            .find(|a| a.key.local_name().as_ref() == b"href")
                        {
                            link = String::from_utf8_lossy(&href.value).into_owned();
                        }
                    }
                    b"description" | b"summary" if in_item => field = Some("description"),
                    b"pubDate" | b"published" | b"updated" if in_item => field = Some("date"),
                    _ => field = None,
                }
            }
            Ok(Event::Text(t)) => {
                if in_item {
                    let text = t.unescape().map_err(|e| IngestError::Feed {
                        offset: reader.buffer_position(),
                        message: e.to_string(),
                    })?;
                    match field {
                        Some("title") => title.push_str(&text),
                        Some("link") if link.is_empty() => link.push_str(&text),
                        Some("description") => description.push_str(&text),
                        Some("date") if pub_date.is_empty() => pub_date.push_str(&text),
                        _ => {}
                    }
                }
            }
            Ok(Event::CData(t)) => {
                if in_item {
                    let text = String::from_utf8_lossy(&t).into_owned();
                    match field {
                        Some("title") => title.push_str(&text),
                        Some("description") => description.push_str(&text),
                        _ => {}
                    }
                }
            }
            Ok(Event::End(e)) => {
                let name = e.local_name();
                match name.as_ref() {
                    b"item" | b"entry" => {
                        in_item = false;
                        stats.items_seen += 1;
                        if title.trim().is_empty() {
                            stats.skipped_empty_headline += 1;
                        } else {
                            let published_at = parse_feed_date(&pub_date);
                            anchors.push(NewsAnchor {
                                news_id: news_id(source, title.trim(), published_at),
                                source: source.to_string(),
                                url: if link.trim().is_empty() {
                                    None
                                } else {
                                    Some(link.trim().to_string())
                                },
                                headline: title.trim().to_string(),
                                description: if description.trim().is_empty() {
                                    None
                                } else {
                                    Some(description.trim().to_string())
                                },
                                retrieved_at,
                                published_at,
                                batch_id: String::new(),
                                topic_stratum: TopicStratum::Unlabeled,
                            });
                        }
                    }
                    _ => field = None,
                }
            }
            Ok(Event::Eof) => break,
            Ok(_) => {}
            Err(e) => {
                return Err(IngestError::Feed {
                    offset: reader.buffer_position(),
                    message: e.to_string(),
                })
            }
        }
    }
    Ok((anchors, stats))
}

fn parse_feed_date(raw: &str) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    if raw.is_empty() {
        return None;
    }
    DateTime::parse_from_rfc2822(raw)
        .or_else(|_| DateTime::parse_from_rfc3339(raw))
        .map(|t| t.with_timezone(&Utc))
        .ok()
}

/// Fetch a live feed over HTTP and ingest it. One fetch per call; scheduling
/// repeated polls is left to the operator (cron or similar).
pub fn ingest_feed_url(
    url: &str,
    source: &str,
    timeout: std::time::Duration,
) -> Result<(Vec<NewsAnchor>, IngestStats), IngestError> {
    let client = reqwest::blocking::Client::builder()
        .timeout(timeout)
        .build()
        .map_err(|e| IngestError::Fetch {
            url: url.to_string(),
            message: e.to_string(),
        })?;
    let body = client
        .get(url)
        .send()
        .and_then(|r| r.error_for_status())
        .and_then(|r| r.text())
        .map_err(|e| IngestError::Fetch {
            url: url.to_string(),
            message: e.to_string(),
        })?;
    ingest_feed_xml(&body, source, Utc::now())
}

/// Partition anchors into batches. Anchors that already carry a batch label
/// (fixture override) keep it verbatim; the rest receive `default_batch_id`,
/// i.e. one batch per ingestion invocation.
pub fn assign_batch(
    mut anchors: Vec<NewsAnchor>,
    default_batch_id: &str,
    collected_at: DateTime<Utc>,
) -> Vec<NewsBatch> {
    let mut by_batch: std::collections::BTreeMap<String, Vec<NewsAnchor>> =
        std::collections::BTreeMap::new();
    for anchor in anchors.drain(..) {
        let batch_id = if anchor.batch_id.is_empty() {
            default_batch_id.to_string()
        } else {
            anchor.batch_id.clone()
        };
        let mut anchor = anchor;
        anchor.batch_id = batch_id.clone();
        by_batch.entry(batch_id).or_default().push(anchor);
    }
    by_batch
        .into_iter()
        .map(|(batch_id, anchors)| NewsBatch {
            batch_id,
            anchors,
            collected_at,
        })
        .collect()
}

/// Keyword-rule stratification over headline + description. Identity-relevant
/// rules win when both sides match; unmatched anchors stay unlabeled.
pub fn stratify_topic(anchor: &NewsAnchor, rules: &TopicRules) -> TopicStratum {
    let haystack = anchor.anchor_text().to_lowercase();
    let tokens: std::collections::BTreeSet<String> = crate::scoring::tfidf::tokenize(&haystack)
        .into_iter()
        .collect();
    let matches = |keywords: &[String]| {
        keywords.iter().any(|kw| {
            let kw = kw.to_lowercase();
            if kw.contains(char::is_whitespace) {
                haystack.contains(&kw)
            } else {
                tokens.contains(&kw)
            }
        })
    };
    if matches(&rules.identity_relevant) {
        TopicStratum::IdentityRelevant
    } else if matches(&rules.identity_neutral) {
        TopicStratum::IdentityNeutral
    } else {
        TopicStratum::Unlabeled
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::Taxonomy;

    fn now() -> DateTime<Utc> {
        "2026-03-09T12:00:00Z".parse().unwrap()
    }

    const FIXTURE: &str = r#"{"source":"bbc","headline":"Jobs report released","description":"Unemployment falls.","published_at":"2026-03-08T09:00:00Z"}
{"source":"bbc","headline":"Storm closes highways","published_at":"2026-03-08T10:00:00Z"}
{"source":"reuters","headline":"Rates held steady","description":"Central bank pauses.","published_at":"2026-03-08T11:00:00Z"}
"#;

    #[test]
    fn fixture_ingest_counts_and_distinct_ids() {
        let (anchors, stats) = ingest_fixture_str(FIXTURE, now()).unwrap();
        assert_eq!(anchors.len(), 3);
        assert_eq!(stats.items_seen, 3);
        assert_eq!(stats.skipped_empty_headline, 0);
        let ids: std::collections::BTreeSet<&str> =
            anchors.iter().map(|a| a.news_id.as_str()).collect();
        assert_eq!(ids.len(), 3);
        for anchor in &anchors {
            assert_eq!(anchor.news_id.len(), 64);
        }
    }

    #[test]
    fn identical_items_share_news_id() {
        let duplicated = format!("{FIXTURE}{}", FIXTURE.lines().next().unwrap());
        let (anchors, _) = ingest_fixture_str(&duplicated, now()).unwrap();
        assert_eq!(anchors.len(), 4);
        assert_eq!(anchors[0].news_id, anchors[3].news_id);
    }

    #[test]
    fn reingest_is_id_stable() {
        let (a, _) = ingest_fixture_str(FIXTURE, now()).unwrap();
        let later: DateTime<Utc> = "2026-03-10T12:00:00Z".parse().unwrap();
        let (b, _) = ingest_fixture_str(FIXTURE, later).unwrap();
        let ids_a: Vec<&str> = a.iter().map(|x| x.news_id.as_str()).collect();
        let ids_b: Vec<&str> = b.iter().map(|x| x.news_id.as_str()).collect();
        assert_eq!(ids_a, ids_b);
    }

    #[test]
    fn missing_description_means_headline_only_anchor_text() {
        let (anchors, _) = ingest_fixture_str(FIXTURE, now()).unwrap();
        assert_eq!(anchors[1].anchor_text(), "Storm closes highways");
        assert_eq!(
            anchors[0].anchor_text(),
            "Jobs report released\nUnemployment falls."
        );
    }

    #[test]
    fn empty_headline_skipped_and_counted() {
        let text = r#"{"source":"bbc","headline":""}
{"source":"bbc","headline":"Real story"}
"#;
        let (anchors, stats) = ingest_fixture_str(text, now()).unwrap();
        assert_eq!(anchors.len(), 1);
        assert_eq!(stats.skipped_empty_headline, 1);
    }

    #[test]
    fn malformed_fixture_reports_offset_and_line() {
        let text = "{\"source\":\"bbc\",\"headline\":\"ok\"}\nnot json\n";
        let err = ingest_fixture_str(text, now()).unwrap_err();
        match err {
            IngestError::Fixture { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn batch_override_respected_default_applied() {
        let text = r#"{"source":"bbc","headline":"A","batch_id":"b-fixed"}
{"source":"bbc","headline":"B"}
"#;
        let (anchors, _) = ingest_fixture_str(text, now()).unwrap();
        let batches = assign_batch(anchors, "b-default", now());
        assert_eq!(batches.len(), 2);
        let ids: Vec<&str> = batches.iter().map(|b| b.batch_id.as_str()).collect();
        assert_eq!(ids, vec!["b-default", "b-fixed"]);
        let total: usize = batches.iter().map(|b| b.anchors.len()).sum();
        assert_eq!(total, 2);
        for batch in &batches {
            for anchor in &batch.anchors {
                assert_eq!(anchor.batch_id, batch.batch_id);
            }
        }
    }

    #[test]
    fn single_anchor_single_batch() {
        let (anchors, _) = ingest_fixture_str(
            r#"{"source":"bbc","headline":"Solo"}"#,
            now(),
        )
        .unwrap();
        let batches = assign_batch(anchors, "b1", now());
        assert_eq!(batches.len(), 1);
        assert_eq!(batches[0].anchors.len(), 1);
    }

    #[test]
    fn rss_feed_parses_items() {
        let xml = r#"<?xml version="1.0"?>
<rss version="2.0"><channel>
<title>Example</title>
<item><title>Texans score 26 fourth-quarter points to complete comeback</title>
<link>https://example.org/1</link>
<description>Dramatic finish in the late game.</description>
<pubDate>Sun, 08 Mar 2026 21:00:00 GMT</pubDate></item>
<item><title>Immigration bill advances</title>
<link>https://example.org/2</link>
<description><![CDATA[Senate committee moves the measure forward.]]></description>
<pubDate>Sun, 08 Mar 2026 22:00:00 GMT</pubDate></item>
</channel></rss>"#;
        let (anchors, stats) = ingest_feed_xml(xml, "example", now()).unwrap();
        assert_eq!(anchors.len(), 2);
        assert_eq!(stats.items_seen, 2);
        assert!(anchors[0].headline.starts_with("Texans score"));
        assert_eq!(anchors[0].url.as_deref(), Some("https://example.org/1"));
        assert!(anchors[0].published_at.is_some());
        assert!(anchors[1]
            .description
            .as_deref()
            .unwrap()
            .contains("Senate committee"));
    }

    #[test]
    fn atom_feed_parses_entries() {
        let xml = r#"<?xml version="1.0"?>
<feed xmlns="http://www.w3.org/2005/Atom">
<entry><title>Council vote delayed</title>
<link href="https://example.org/3"/>
<summary>Procedural hold.</summary>
<updated>2026-03-08T23:00:00Z</updated></entry>
</feed>"#;
        let (anchors, _) = ingest_feed_xml(xml, "example", now()).unwrap();
        assert_eq!(anchors.len(), 1);
        assert_eq!(anchors[0].headline, "Council vote delayed");
        assert_eq!(anchors[0].url.as_deref(), Some("https://example.org/3"));
    }

    #[test]
    fn truncated_feed_reports_offset() {
        let xml = "<rss><channel><item><title>Broken";
        let err = ingest_feed_xml(xml, "example", now()).unwrap_err();
        assert!(matches!(err, IngestError::Feed { .. }));
    }

    #[test]
    fn stratification_follows_keyword_rules() {
        let rules = Taxonomy::bundled_default().topic_rules;
        let mk = |headline: &str| NewsAnchor {
            news_id: news_id("t", headline, None),
            source: "t".into(),
            url: None,
            headline: headline.into(),
            description: None,
            retrieved_at: now(),
            published_at: None,
            batch_id: String::new(),
            topic_stratum: TopicStratum::Unlabeled,
        };
        assert_eq!(
            stratify_topic(
                &mk("Texans score 26 fourth-quarter points to complete dramatic comeback victory"),
                &rules
            ),
            TopicStratum::IdentityNeutral
        );
        assert_eq!(
            stratify_topic(&mk("New immigration rules take effect"), &rules),
            TopicStratum::IdentityRelevant
        );
        assert_eq!(
            stratify_topic(&mk("Museum reopens after renovation"), &rules),
            TopicStratum::Unlabeled
        );
    }

    #[test]
    fn relevant_wins_over_neutral_on_mixed_anchors() {
        let rules = Taxonomy::bundled_default().topic_rules;
        let anchor = NewsAnchor {
            news_id: "x".into(),
            source: "t".into(),
            url: None,
            headline: "Stadium victory overshadowed by stadium workers strike".into(),
            description: None,
            retrieved_at: now(),
            published_at: None,
            batch_id: String::new(),
            topic_stratum: TopicStratum::Unlabeled,
        };
        assert_eq!(
            stratify_topic(&anchor, &rules),
            TopicStratum::IdentityRelevant
        );
    }
}
