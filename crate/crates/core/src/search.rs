//! Case-insensitive annotation search with exact > prefix > substring
//! ranking.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::TagId;
use crate::iri::Iri;
use crate::model::Taxonomy;
use crate::multilang::{resolve_display_name, DisplayLanguageConfig, DisplayName};
use crate::tags::Assignments;
use crate::vocab::vocab;

pub const MAX_LIMIT: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SearchField {
    Label,
    AltLabel,
    Definition,
}

impl SearchField {
    fn property(self) -> &'static Iri {
        let v = vocab();
        match self {
            SearchField::Label => &v.label,
            SearchField::AltLabel => &v.alt_label,
            SearchField::Definition => &v.definition,
        }
    }
}

fn default_fields() -> BTreeSet<SearchField> {
    [SearchField::Label, SearchField::AltLabel].into()
}

fn default_limit() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchQuery {
    #[serde(default)]
    pub text: String,
    #[serde(default = "default_fields")]
    pub fields: BTreeSet<SearchField>,
    #[serde(default)]
    pub tag: Option<TagId>,
    #[serde(default)]
    pub include_deprecated: bool,
    #[serde(default = "default_limit")]
    pub limit: usize,
    #[serde(default)]
    pub offset: usize,
}

impl SearchQuery {
    pub fn text(text: impl Into<String>) -> Self {
        SearchQuery {
            text: text.into(),
            fields: default_fields(),
            tag: None,
            include_deprecated: false,
            limit: default_limit(),
            offset: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if self.limit == 0 || self.limit > MAX_LIMIT {
            return Err(SearchError::InvalidQuery(format!("limit must be between 1 and {MAX_LIMIT}")));
        }
        if self.text.trim().is_empty() && self.tag.is_none() {
            return Err(SearchError::InvalidQuery("text is required without a tag filter".into()));
        }
        if self.fields.is_empty() && self.tag.is_none() {
            return Err(SearchError::InvalidQuery("no fields selected".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum MatchRank {
    Exact,
    Prefix,
    Substring,
    /// Tag-only query; no text matched.
    Tagged,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchHit {
    pub iri: Iri,
    pub display: DisplayName,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub secondary: Option<DisplayName>,
    pub rank: MatchRank,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matched_field: Option<SearchField>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matched_value: Option<String>,
}

fn rank(value: &str, needle: &str) -> Option<MatchRank> {
    let value = value.to_lowercase();
    if value == needle {
        Some(MatchRank::Exact)
    } else if value.starts_with(needle) {
        Some(MatchRank::Prefix)
    } else if value.contains(needle) {
        Some(MatchRank::Substring)
    } else {
        None
    }
}

/// Best (rank, field, value) for entity `e`, if any selected field matches.
fn best_match(tax: &Taxonomy, e: &Iri, fields: &BTreeSet<SearchField>, needle: &str) -> Option<(MatchRank, SearchField, String)> {
    let mut best: Option<(MatchRank, SearchField, String)> = None;
    for &field in fields {
        for v in tax.annotation_values(e, field.property()) {
            if let Some(r) = rank(&v.lexical, needle) {
                let candidate = (r, field, v.lexical.clone());
                if best.as_ref().is_none_or(|b| candidate < *b) {
                    best = Some(candidate);
                }
            }
        }
    }
    best
}

/// Runs `q`. Ranking: exact > prefix > substring, ties broken by display
/// name then IRI. Only declared entities are returned.
pub fn search(tax: &Taxonomy, q: &SearchQuery, languages: &DisplayLanguageConfig, tags: &Assignments) -> Result<Vec<SearchHit>, SearchError> {
    q.validate()?;
    let needle = q.text.trim().to_lowercase();
    let mut hits: Vec<(MatchRank, String, SearchHit)> = Vec::new();
    for e in tax.classes() {
        if e == tax.root() || (!q.include_deprecated && tax.is_deprecated(e)) {
            continue;
        }
        if let Some(tag) = &q.tag {
            if !tags.get(e).is_some_and(|t| t.contains(tag)) {
                continue;
            }
        }
        let matched = if needle.is_empty() { Some(None) } else { best_match(tax, e, &q.fields, &needle).map(Some) };
        let Some(matched) = matched else { continue };
        let names = resolve_display_name(tax, e, languages).expect("iterating declared classes");
        let (rank, field, value) = match matched {
            Some((r, f, v)) => (r, Some(f), Some(v)),
            None => (MatchRank::Tagged, None, None),
        };
        let sort_name = names.primary.text.to_lowercase();
        hits.push((
            rank,
            sort_name,
            SearchHit { iri: e.clone(), display: names.primary, secondary: names.secondary, rank, matched_field: field, matched_value: value },
        ));
    }
    hits.sort_by(|a, b| (a.0, &a.1, &a.2.iri).cmp(&(b.0, &b.1, &b.2.iri)));
    Ok(hits.into_iter().skip(q.offset).take(q.limit).map(|(_, _, h)| h).collect())
}
