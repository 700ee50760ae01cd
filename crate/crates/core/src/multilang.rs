//! Display-name resolution over preferred languages.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::UnknownEntity;
use crate::iri::{Iri, LanguageTag};
use crate::model::{AnnotationValue, AtomicChange, Axiom, Taxonomy};
use crate::vocab::vocab;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("label text is empty")]
    EmptyLabel,
    #[error("invalid language configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    UnknownEntity(#[from] UnknownEntity),
}

/// Ordered display languages. Persisted as
/// `{"primary":["en"],"secondary":["hu"],"default":"en"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplayLanguageConfig {
    pub primary: Vec<LanguageTag>,
    #[serde(default)]
    pub secondary: Vec<LanguageTag>,
    #[serde(rename = "default")]
    pub default_for_new_entities: LanguageTag,
}

impl Default for DisplayLanguageConfig {
    fn default() -> Self {
        let en = LanguageTag::parse("en").expect("static tag");
        DisplayLanguageConfig { primary: vec![en.clone()], secondary: Vec::new(), default_for_new_entities: en }
    }
}

impl DisplayLanguageConfig {
    pub fn new(primary: Vec<LanguageTag>, secondary: Vec<LanguageTag>, default: LanguageTag) -> Result<Self, LangError> {
        let cfg = DisplayLanguageConfig { primary, secondary, default_for_new_entities: default };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), LangError> {
        if self.primary.is_empty() {
            return Err(LangError::InvalidConfig("primary languages must not be empty".into()));
        }
        if let Some(both) = self.primary.iter().find(|l| self.secondary.contains(l)) {
            return Err(LangError::InvalidConfig(format!("{both} is both primary and secondary")));
        }
        if !self.primary.contains(&self.default_for_new_entities) {
            return Err(LangError::InvalidConfig("default language must be a primary language".into()));
        }
        Ok(())
    }
}

/// Language a display name was taken from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum DisplaySource {
    Label(LanguageTag),
    /// No label matched; the IRI's local name is shown.
    IriFallback,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplayName {
    pub text: String,
    pub source: DisplaySource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedNames {
    pub primary: DisplayName,
    pub secondary: Option<DisplayName>,
}

/// First label matching `langs`: an exact tag match for any listed language
/// (in list order) wins over a primary-subtag match. Among labels in the
/// same language the lexicographically smallest is chosen.
pub fn pick_label<'a>(labels: &[&'a AnnotationValue], langs: &[LanguageTag]) -> Option<&'a AnnotationValue> {
    let best = |pred: &dyn Fn(&LanguageTag) -> bool| {
        labels
            .iter()
            .copied()
            .filter(|l| l.lang.as_ref().is_some_and(pred))
            .min_by(|a, b| a.lexical.cmp(&b.lexical).then_with(|| a.lang.cmp(&b.lang)))
    };
    for want in langs {
        if let Some(label) = best(&|tag: &LanguageTag| tag == want) {
            return Some(label);
        }
    }
    for want in langs {
        if let Some(label) = best(&|tag: &LanguageTag| tag.primary_subtag() == want.primary_subtag()) {
            return Some(label);
        }
    }
    None
}

fn display(label: &AnnotationValue) -> DisplayName {
    DisplayName {
        text: label.lexical.clone(),
        source: DisplaySource::Label(label.lang.clone().expect("matched labels carry a language")),
    }
}

/// Primary and secondary display names of `e`. The primary name falls back
/// to the IRI's local name, so it always exists.
pub fn resolve_display_name(tax: &Taxonomy, e: &Iri, cfg: &DisplayLanguageConfig) -> Result<ResolvedNames, UnknownEntity> {
    if !tax.is_declared(e) {
        return Err(UnknownEntity(e.clone()));
    }
    let labels: Vec<&AnnotationValue> = tax.labels(e).collect();
    let primary = pick_label(&labels, &cfg.primary)
        .map(display)
        .unwrap_or_else(|| DisplayName { text: e.local_name().to_string(), source: DisplaySource::IriFallback });
    let secondary = pick_label(&labels, &cfg.secondary).map(display);
    Ok(ResolvedNames { primary, secondary })
}

/// Primary display text; used for sorting.
pub fn display_text(tax: &Taxonomy, e: &Iri, cfg: &DisplayLanguageConfig) -> String {
    let labels: Vec<&AnnotationValue> = tax.labels(e).collect();
    pick_label(&labels, &cfg.primary)
        .map(|l| l.lexical.clone())
        .unwrap_or_else(|| e.local_name().to_string())
}

/// Languages in `required` for which `e` has no `rdfs:label` (exact tag).
pub fn missing_languages(
    tax: &Taxonomy,
    e: &Iri,
    required: &BTreeSet<LanguageTag>,
) -> Result<BTreeSet<LanguageTag>, UnknownEntity> {
    if !tax.is_declared(e) {
        return Err(UnknownEntity(e.clone()));
    }
    let present: BTreeSet<&LanguageTag> = tax.labels(e).filter_map(|l| l.lang.as_ref()).collect();
    Ok(required.iter().filter(|l| !present.contains(l)).cloned().collect())
}

/// The label assertion for a newly created entity, in the configured default
/// language.
pub fn default_label_change(subject: &Iri, text: &str, cfg: &DisplayLanguageConfig) -> Result<AtomicChange, LangError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(LangError::EmptyLabel);
    }
    Ok(AtomicChange::add(Axiom::annotation(
        vocab().label.clone(),
        subject.clone(),
        AnnotationValue::lang_string(text, cfg.default_for_new_entities.clone()),
    )))
}
