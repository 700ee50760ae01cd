//! Entity tags: manual assignment plus automatic assignment from criteria
//! trees evaluated against the taxonomy head.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::UnknownEntity;
use crate::ids::TagId;
use crate::iri::{Iri, LanguageTag};
use crate::model::{AnnotationValue, AtomicChange, Axiom, Taxonomy};
use crate::multilang::{display_text, DisplayLanguageConfig};
use crate::vocab::vocab;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TagError {
    #[error("unknown tag {0}")]
    UnknownTag(TagId),
    #[error(transparent)]
    UnknownEntity(#[from] UnknownEntity),
    #[error("{entity} already carries tag {tag}")]
    AlreadyAssigned { entity: Iri, tag: TagId },
    #[error("{entity} does not carry tag {tag}")]
    NotAssigned { entity: Iri, tag: TagId },
    #[error("a tag labelled {0:?} already exists")]
    DuplicateLabel(String),
    #[error("color must be #RRGGBB, got {0:?}")]
    InvalidColor(String),
    #[error("invalid criteria: {0}")]
    InvalidCriteria(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tag {
    pub id: TagId,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub color: String,
}

fn valid_color(color: &str) -> bool {
    color.len() == 7 && color.starts_with('#') && color[1..].chars().all(|c| c.is_ascii_hexdigit())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ValueMatcher {
    /// Lexical equality; without a language any language matches.
    Equals {
        lexical: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lang: Option<LanguageTag>,
    },
    /// Unanchored search; anchor with `^...$` for whole-value matches.
    Regex(String),
    /// Decimal comparison; non-numeric values never match.
    NumericRange {
        min: f64,
        max: f64,
        #[serde(default = "yes")]
        min_inclusive: bool,
        #[serde(default = "yes")]
        max_inclusive: bool,
    },
    AnyValue,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Criteria {
    And(Vec<Criteria>),
    Or(Vec<Criteria>),
    Not(Box<Criteria>),
    HasAnnotation {
        property: Iri,
        value: ValueMatcher,
    },
    MissingAnnotation {
        property: Iri,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lang: Option<LanguageTag>,
    },
    IsDescendantOf(Iri),
    IsDeprecated,
    /// Another non-deprecated entity has an identical label in this language.
    NonUniqueLabel(LanguageTag),
    /// Some value of `a` equals (lexical + language) some value of `b`.
    AnnotationOverlap {
        a: Iri,
        b: Iri,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagRule {
    pub tag: TagId,
    pub enabled: bool,
    pub criteria: Criteria,
}

enum Compiled {
    And(Vec<Compiled>),
    Or(Vec<Compiled>),
    Not(Box<Compiled>),
    HasAnnotation(Iri, CompiledMatcher),
    MissingAnnotation(Iri, Option<LanguageTag>),
    IsDescendantOf(Iri),
    IsDeprecated,
    NonUniqueLabel(LanguageTag),
    AnnotationOverlap(Iri, Iri),
}

enum CompiledMatcher {
    Equals(String, Option<LanguageTag>),
    Regex(Regex),
    Range { min: f64, max: f64, min_inclusive: bool, max_inclusive: bool },
    Any,
}

/// Parses a plain decimal (`-12`, `3.5`, `.5`); exponents and non-finite
/// values are rejected.
pub fn parse_decimal(s: &str) -> Option<f64> {
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let digits = |p: &str| p.chars().all(|c| c.is_ascii_digit());
    if (int.is_empty() && frac.is_empty()) || !digits(int) || !digits(frac) || body == "." {
        return None;
    }
    s.parse().ok()
}

impl CompiledMatcher {
    fn new(m: &ValueMatcher) -> Result<Self, TagError> {
        Ok(match m {
            ValueMatcher::Equals { lexical, lang } => CompiledMatcher::Equals(lexical.clone(), lang.clone()),
            ValueMatcher::Regex(p) => {
                CompiledMatcher::Regex(Regex::new(p).map_err(|e| TagError::InvalidCriteria(e.to_string()))?)
            }
            ValueMatcher::NumericRange { min, max, min_inclusive, max_inclusive } => {
                if !(min <= max) {
                    return Err(TagError::InvalidCriteria(format!("range min {min} exceeds max {max}")));
                }
                CompiledMatcher::Range { min: *min, max: *max, min_inclusive: *min_inclusive, max_inclusive: *max_inclusive }
            }
            ValueMatcher::AnyValue => CompiledMatcher::Any,
        })
    }

    fn matches(&self, v: &AnnotationValue) -> bool {
        match self {
            CompiledMatcher::Equals(lexical, lang) => &v.lexical == lexical && lang.as_ref().is_none_or(|l| v.lang.as_ref() == Some(l)),
            CompiledMatcher::Regex(re) => re.is_match(&v.lexical),
            CompiledMatcher::Range { min, max, min_inclusive, max_inclusive } => match parse_decimal(v.lexical.trim()) {
                Some(x) => {
                    let lo = if *min_inclusive { x >= *min } else { x > *min };
                    let hi = if *max_inclusive { x <= *max } else { x < *max };
                    lo && hi
                }
                None => false,
            },
            CompiledMatcher::Any => true,
        }
    }
}

impl Compiled {
    fn new(c: &Criteria) -> Result<Self, TagError> {
        Ok(match c {
            Criteria::And(items) | Criteria::Or(items) if items.is_empty() => {
                return Err(TagError::InvalidCriteria("And/Or need at least one operand".into()))
            }
            Criteria::And(items) => Compiled::And(items.iter().map(Compiled::new).collect::<Result<_, _>>()?),
            Criteria::Or(items) => Compiled::Or(items.iter().map(Compiled::new).collect::<Result<_, _>>()?),
            Criteria::Not(inner) => Compiled::Not(Box::new(Compiled::new(inner)?)),
            Criteria::HasAnnotation { property, value } => Compiled::HasAnnotation(property.clone(), CompiledMatcher::new(value)?),
            Criteria::MissingAnnotation { property, lang } => Compiled::MissingAnnotation(property.clone(), lang.clone()),
            Criteria::IsDescendantOf(iri) => Compiled::IsDescendantOf(iri.clone()),
            Criteria::IsDeprecated => Compiled::IsDeprecated,
            Criteria::NonUniqueLabel(lang) => Compiled::NonUniqueLabel(lang.clone()),
            Criteria::AnnotationOverlap { a, b } => Compiled::AnnotationOverlap(a.clone(), b.clone()),
        })
    }

    fn eval(&self, tax: &Taxonomy, e: &Iri) -> bool {
        match self {
            Compiled::And(items) => items.iter().all(|c| c.eval(tax, e)),
            Compiled::Or(items) => items.iter().any(|c| c.eval(tax, e)),
            Compiled::Not(inner) => !inner.eval(tax, e),
            Compiled::HasAnnotation(p, m) => tax.annotation_values(e, p).any(|v| m.matches(v)),
            Compiled::MissingAnnotation(p, lang) => !tax
                .annotation_values(e, p)
                .any(|v| lang.as_ref().is_none_or(|l| v.lang.as_ref() == Some(l))),
            Compiled::IsDescendantOf(ancestor) => tax.is_ancestor(ancestor, e),
            Compiled::IsDeprecated => tax.is_deprecated(e),
            Compiled::NonUniqueLabel(lang) => {
                !tax.is_deprecated(e)
                    && tax.labels(e).filter(|l| l.lang.as_ref() == Some(lang)).any(|l| {
                        tax.entities_with_label(&l.lexical, Some(lang)).any(|other| other != e && !tax.is_deprecated(other))
                    })
            }
            Compiled::AnnotationOverlap(a, b) => {
                let left: Vec<&AnnotationValue> = tax.annotation_values(e, a).collect();
                tax.annotation_values(e, b).any(|v| left.iter().any(|l| l.same_text(v)))
            }
        }
    }
}

/// Validates a criteria tree.
pub fn check_criteria(c: &Criteria) -> Result<(), TagError> {
    Compiled::new(c).map(|_| ())
}

/// Whether entity `e` satisfies `c`.
pub fn match_entity(tax: &Taxonomy, c: &Criteria, e: &Iri) -> Result<bool, TagError> {
    if !tax.is_declared(e) {
        return Err(UnknownEntity(e.clone()).into());
    }
    Ok(Compiled::new(c)?.eval(tax, e))
}

/// Entity to tags.
pub type Assignments = BTreeMap<Iri, BTreeSet<TagId>>;

struct RuleSet(Vec<(TagId, Compiled)>);

impl RuleSet {
    fn new<'a>(rules: impl IntoIterator<Item = &'a TagRule>) -> Result<Self, TagError> {
        let mut out = Vec::new();
        for rule in rules {
            if rule.enabled {
                out.push((rule.tag.clone(), Compiled::new(&rule.criteria)?));
            }
        }
        Ok(RuleSet(out))
    }

    fn tags_for(&self, tax: &Taxonomy, manual: &Assignments, e: &Iri) -> BTreeSet<TagId> {
        let mut tags = manual.get(e).cloned().unwrap_or_default();
        for (tag, criteria) in &self.0 {
            if !tags.contains(tag) && criteria.eval(tax, e) {
                tags.insert(tag.clone());
            }
        }
        tags
    }
}

/// Full evaluation: manual assignments united with every enabled rule's
/// matches, over all declared entities.
pub fn evaluate_all<'a>(
    tax: &Taxonomy,
    rules: impl IntoIterator<Item = &'a TagRule>,
    manual: &Assignments,
) -> Result<Assignments, TagError> {
    let rules = RuleSet::new(rules)?;
    let mut out = Assignments::new();
    for e in tax.classes() {
        let tags = rules.tags_for(tax, manual, e);
        if !tags.is_empty() {
            out.insert(e.clone(), tags);
        }
    }
    Ok(out)
}

/// Entities whose tags may differ after `changes` were applied to produce
/// `tax`.
pub fn affected_entities(tax: &Taxonomy, changes: &[AtomicChange]) -> BTreeSet<Iri> {
    let v = vocab();
    let mut out = BTreeSet::new();
    let label_sharers = |out: &mut BTreeSet<Iri>, lexical: &str, lang: Option<&LanguageTag>| {
        out.extend(tax.entities_with_label(lexical, lang).cloned());
    };
    for change in changes {
        match &change.axiom {
            Axiom::Declaration { class } => {
                out.insert(class.clone());
            }
            Axiom::SubClassOf { sub, .. } => {
                out.insert(sub.clone());
                if let Ok(d) = tax.descendants(sub) {
                    out.extend(d);
                }
            }
            Axiom::Annotation(a) => {
                out.insert(a.subject.clone());
                if a.property == v.label {
                    label_sharers(&mut out, &a.value.lexical, a.value.lang.as_ref());
                } else if a.property == v.deprecated {
                    for label in tax.labels(&a.subject) {
                        label_sharers(&mut out, &label.lexical, label.lang.as_ref());
                    }
                }
            }
        }
    }
    out
}

/// Incremental re-evaluation after a commit: only entities touched by
/// `changes` (and those whose criteria depend on them) are recomputed.
pub fn reevaluate<'a>(
    previous: &Assignments,
    tax: &Taxonomy,
    rules: impl IntoIterator<Item = &'a TagRule>,
    manual: &Assignments,
    changes: &[AtomicChange],
) -> Result<Assignments, TagError> {
    let rules = RuleSet::new(rules)?;
    let mut out = previous.clone();
    for e in affected_entities(tax, changes) {
        if !tax.is_declared(&e) {
            out.remove(&e);
            continue;
        }
        let tags = rules.tags_for(tax, manual, &e);
        if tags.is_empty() {
            out.remove(&e);
        } else {
            out.insert(e, tags);
        }
    }
    Ok(out)
}

/// Per-project tag definitions, rules, manual assignments and the current
/// evaluated assignment map.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TagStore {
    tags: BTreeMap<TagId, Tag>,
    rules: BTreeMap<TagId, TagRule>,
    manual: Assignments,
    next_id: u64,
    #[serde(skip)]
    assignments: Assignments,
}

impl TagStore {
    pub fn tags(&self) -> impl Iterator<Item = &Tag> {
        self.tags.values()
    }

    pub fn tag(&self, id: &TagId) -> Result<&Tag, TagError> {
        self.tags.get(id).ok_or_else(|| TagError::UnknownTag(id.clone()))
    }

    pub fn rules(&self) -> impl Iterator<Item = &TagRule> {
        self.rules.values()
    }

    pub fn manual(&self) -> &Assignments {
        &self.manual
    }

    /// Current assignment map (as of the last evaluation).
    pub fn assignments(&self) -> &Assignments {
        &self.assignments
    }

    pub fn tags_of(&self, e: &Iri) -> impl Iterator<Item = &TagId> {
        self.assignments.get(e).into_iter().flatten()
    }

    pub fn define_tag(&mut self, label: &str, description: Option<String>, color: &str) -> Result<&Tag, TagError> {
        let label = label.trim();
        if label.is_empty() {
            return Err(TagError::InvalidCriteria("tag label is empty".into()));
        }
        if !valid_color(color) {
            return Err(TagError::InvalidColor(color.to_string()));
        }
        if self.tags.values().any(|t| t.label == label) {
            return Err(TagError::DuplicateLabel(label.to_string()));
        }
        self.next_id += 1;
        let id = TagId::new(format!("tag-{}", self.next_id));
        let tag = Tag { id: id.clone(), label: label.to_string(), description, color: color.to_ascii_uppercase() };
        Ok(self.tags.entry(id).or_insert(tag))
    }

    /// Installs (or replaces) the rule for `rule.tag` and re-evaluates.
    pub fn set_rule(&mut self, tax: &Taxonomy, rule: TagRule) -> Result<(), TagError> {
        self.tag(&rule.tag)?;
        check_criteria(&rule.criteria)?;
        self.rules.insert(rule.tag.clone(), rule);
        self.refresh(tax)
    }

    /// Replaces every rule at once (rule-file import).
    pub fn replace_rules(&mut self, tax: &Taxonomy, rules: Vec<TagRule>) -> Result<(), TagError> {
        let mut map = BTreeMap::new();
        for rule in rules {
            self.tag(&rule.tag)?;
            check_criteria(&rule.criteria)?;
            if map.insert(rule.tag.clone(), rule).is_some() {
                return Err(TagError::InvalidCriteria("more than one rule for a tag".into()));
            }
        }
        self.rules = map;
        self.refresh(tax)
    }

    pub fn remove_rule(&mut self, tax: &Taxonomy, tag: &TagId) -> Result<(), TagError> {
        self.rules.remove(tag).ok_or_else(|| TagError::UnknownTag(tag.clone()))?;
        self.refresh(tax)
    }

    pub fn assign_manual(&mut self, tax: &Taxonomy, e: &Iri, tag: &TagId) -> Result<(), TagError> {
        self.tag(tag)?;
        if !tax.is_declared(e) {
            return Err(UnknownEntity(e.clone()).into());
        }
        if !self.manual.entry(e.clone()).or_default().insert(tag.clone()) {
            return Err(TagError::AlreadyAssigned { entity: e.clone(), tag: tag.clone() });
        }
        self.refresh_entities(tax, [e.clone()])
    }

    pub fn unassign_manual(&mut self, tax: &Taxonomy, e: &Iri, tag: &TagId) -> Result<(), TagError> {
        self.tag(tag)?;
        let removed = self.manual.get_mut(e).is_some_and(|set| set.remove(tag));
        if !removed {
            return Err(TagError::NotAssigned { entity: e.clone(), tag: tag.clone() });
        }
        if self.manual.get(e).is_some_and(BTreeSet::is_empty) {
            self.manual.remove(e);
        }
        self.refresh_entities(tax, [e.clone()])
    }

    /// Full re-evaluation.
    pub fn refresh(&mut self, tax: &Taxonomy) -> Result<(), TagError> {
        self.assignments = evaluate_all(tax, self.rules.values(), &self.manual)?;
        Ok(())
    }

    fn refresh_entities(&mut self, tax: &Taxonomy, entities: impl IntoIterator<Item = Iri>) -> Result<(), TagError> {
        let rules = RuleSet::new(self.rules.values())?;
        for e in entities {
            let tags = rules.tags_for(tax, &self.manual, &e);
            if tags.is_empty() || !tax.is_declared(&e) {
                self.assignments.remove(&e);
            } else {
                self.assignments.insert(e, tags);
            }
        }
        Ok(())
    }

    /// Incremental update after `changes` were committed to `tax`. Returns
    /// whether any assignment changed.
    pub fn after_commit(&mut self, tax: &Taxonomy, changes: &[AtomicChange]) -> Result<bool, TagError> {
        let next = reevaluate(&self.assignments, tax, self.rules.values(), &self.manual, changes)?;
        let changed = next != self.assignments;
        self.assignments = next;
        Ok(changed)
    }

    /// Entities currently carrying `tag`, sorted by primary display name
    /// (IRI breaks ties).
    pub fn find_by_tag(&self, tax: &Taxonomy, tag: &TagId, cfg: &DisplayLanguageConfig) -> Result<Vec<Iri>, TagError> {
        self.tag(tag)?;
        let mut found: Vec<(String, Iri)> = self
            .assignments
            .iter()
            .filter(|(_, tags)| tags.contains(tag))
            .map(|(e, _)| (display_text(tax, e, cfg), e.clone()))
            .collect();
        found.sort();
        Ok(found.into_iter().map(|(_, e)| e).collect())
    }
}

/// Entities whose labels are shared with another non-deprecated entity in
/// `lang`; the reference all-pairs definition, quadratic in entity count.
pub fn non_unique_label_pairs(tax: &Taxonomy, lang: &LanguageTag) -> HashSet<(Iri, Iri)> {
    let live: Vec<&Iri> = tax.classes().filter(|c| !tax.is_deprecated(c)).collect();
    let mut out = HashSet::new();
    for (i, a) in live.iter().enumerate() {
        for b in &live[i + 1..] {
            let shared = tax.labels(a).filter(|l| l.lang.as_ref() == Some(lang)).any(|la| {
                tax.labels(b).any(|lb| lb.lang.as_ref() == Some(lang) && lb.lexical == la.lexical)
            });
            if shared {
                out.insert(((*a).clone(), (*b).clone()));
            }
        }
    }
    out
}
