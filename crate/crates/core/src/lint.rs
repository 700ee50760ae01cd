//! Naming-convention and structure lint, plus taxonomy statistics.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::iri::{Iri, LanguageTag};
use crate::model::{AnnotationValue, Axiom, Taxonomy, ValidationReport};
use crate::vocab::vocab;

/// Registered rules. Declaration order equals alphabetical order of the
/// identifiers, so derived `Ord` sorts findings by rule name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LintRule {
    AmbiguitySuffix,
    GlobalLabelCollision,
    MissingDefinitionOnDeepNode,
    SiblingDuplicateLabel,
    TitleCase,
}

impl LintRule {
    pub const ALL: [LintRule; 5] = [
        LintRule::AmbiguitySuffix,
        LintRule::GlobalLabelCollision,
        LintRule::MissingDefinitionOnDeepNode,
        LintRule::SiblingDuplicateLabel,
        LintRule::TitleCase,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LintRule::AmbiguitySuffix => "AmbiguitySuffix",
            LintRule::GlobalLabelCollision => "GlobalLabelCollision",
            LintRule::MissingDefinitionOnDeepNode => "MissingDefinitionOnDeepNode",
            LintRule::SiblingDuplicateLabel => "SiblingDuplicateLabel",
            LintRule::TitleCase => "TitleCase",
        }
    }
}

impl fmt::Display for LintRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "Error",
            Severity::Warning => "Warning",
        })
    }
}

/// A single entity, or an ordered pair for duplicate rules (`a < b`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FindingEntity {
    One(Iri),
    Pair(Iri, Iri),
}

impl FindingEntity {
    fn pair(a: &Iri, b: &Iri) -> Self {
        if a <= b {
            FindingEntity::Pair(a.clone(), b.clone())
        } else {
            FindingEntity::Pair(b.clone(), a.clone())
        }
    }

    pub fn iris(&self) -> Vec<&Iri> {
        match self {
            FindingEntity::One(a) => vec![a],
            FindingEntity::Pair(a, b) => vec![a, b],
        }
    }
}

impl fmt::Display for FindingEntity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FindingEntity::One(a) => write!(f, "{a}"),
            FindingEntity::Pair(a, b) => write!(f, "{a} {b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Finding {
    pub rule: LintRule,
    pub entity: FindingEntity,
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LintOptions {
    #[serde(default)]
    pub include_deprecated: bool,
}

pub const STOP_WORDS: [&str; 15] = [
    "a", "an", "and", "as", "at", "but", "by", "for", "in", "of", "on", "or", "the", "to", "with",
];

fn is_english(lang: Option<&LanguageTag>) -> bool {
    lang.is_some_and(|l| l.primary_subtag() == "en")
}

/// Words of `text` that break title case. The first word must always be
/// capitalized; later stop words may take either case. Words that do not
/// start with a letter are ignored.
pub fn title_case_violations(text: &str) -> Vec<&str> {
    let mut bad = Vec::new();
    for (i, word) in text.split_whitespace().enumerate() {
        let bare = word.trim_start_matches(|c: char| !c.is_alphanumeric());
        let Some(first) = bare.chars().next() else { continue };
        if !first.is_lowercase() {
            continue;
        }
        if i > 0 && STOP_WORDS.contains(&bare) {
            continue;
        }
        bad.push(word);
    }
    bad
}

fn ambiguity_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[^()]*[^()\s] \([^()\s][^()]*\)$").expect("static pattern"))
}

/// Whether a label containing parentheses has the `Name (Qualifier)` form.
pub fn is_well_formed_qualifier(text: &str) -> bool {
    !text.contains(['(', ')']) || ambiguity_pattern().is_match(text)
}

/// Runs every registered rule. Output is sorted by (rule, entity, message).
pub fn lint(tax: &Taxonomy) -> Vec<Finding> {
    lint_with(tax, LintOptions::default())
}

pub fn lint_with(tax: &Taxonomy, opts: LintOptions) -> Vec<Finding> {
    let v = vocab();
    let considered = |c: &Iri| opts.include_deprecated || !tax.is_deprecated(c);
    let mut out = BTreeSet::new();

    for c in tax.classes().filter(|c| considered(c)) {
        for label in tax.labels(c) {
            if is_english(label.lang.as_ref()) {
                let bad = title_case_violations(&label.lexical);
                if !bad.is_empty() || label.lexical.contains('_') {
                    let detail = if bad.is_empty() { "underscores instead of spaces".to_string() } else { format!("lowercase words {}", bad.join(", ")) };
                    out.insert(Finding {
                        rule: LintRule::TitleCase,
                        entity: FindingEntity::One(c.clone()),
                        severity: Severity::Warning,
                        message: format!("label {:?} is not title case: {detail}", label.lexical),
                    });
                }
            }
            if !is_well_formed_qualifier(&label.lexical) {
                out.insert(Finding {
                    rule: LintRule::AmbiguitySuffix,
                    entity: FindingEntity::One(c.clone()),
                    severity: Severity::Error,
                    message: format!("label {:?} does not match \"Name (Qualifier)\"", label.lexical),
                });
            }
        }
        if c != tax.root() && tax.depth(c).is_some_and(|d| d >= 2) && tax.annotation_values(c, &v.definition).next().is_none() {
            out.insert(Finding {
                rule: LintRule::MissingDefinitionOnDeepNode,
                entity: FindingEntity::One(c.clone()),
                severity: Severity::Warning,
                message: format!("no definition at depth {}", tax.depth(c).unwrap_or(0)),
            });
        }
    }

    // sibling duplicates: lexical only, any language
    let mut parents: BTreeSet<&Iri> = BTreeSet::new();
    for c in tax.classes() {
        parents.extend(tax.parents(c));
    }
    for parent in parents {
        let mut by_text: BTreeMap<&str, BTreeSet<&Iri>> = BTreeMap::new();
        for child in tax.children(parent).filter(|c| considered(c)) {
            for label in tax.labels(child) {
                by_text.entry(label.lexical.as_str()).or_default().insert(child);
            }
        }
        for (text, group) in by_text {
            for_each_pair(&group, |a, b| {
                out.insert(Finding {
                    rule: LintRule::SiblingDuplicateLabel,
                    entity: FindingEntity::pair(a, b),
                    severity: Severity::Error,
                    message: format!("siblings under {parent} share the label {text:?}"),
                });
            });
        }
    }

    let mut by_label: BTreeMap<(&str, Option<&LanguageTag>), BTreeSet<&Iri>> = BTreeMap::new();
    for c in tax.classes().filter(|c| considered(c)) {
        for label in tax.labels(c) {
            by_label.entry((label.lexical.as_str(), label.lang.as_ref())).or_default().insert(c);
        }
    }
    for ((text, lang), group) in by_label {
        let lang = lang.map(|l| format!("@{l}")).unwrap_or_default();
        for_each_pair(&group, |a, b| {
            out.insert(Finding {
                rule: LintRule::GlobalLabelCollision,
                entity: FindingEntity::pair(a, b),
                severity: Severity::Warning,
                message: format!("label {text:?}{lang} is used by both entities"),
            });
        });
    }

    // one finding per (rule, entity): keep the first message
    let mut seen = BTreeSet::new();
    out.into_iter().filter(|f| f.rule == LintRule::TitleCase || f.rule == LintRule::AmbiguitySuffix || seen.insert((f.rule, f.entity.clone()))).collect()
}

fn for_each_pair<'a>(group: &BTreeSet<&'a Iri>, mut f: impl FnMut(&'a Iri, &'a Iri)) {
    let items: Vec<&Iri> = group.iter().copied().collect();
    for (i, a) in items.iter().enumerate() {
        for b in &items[i + 1..] {
            f(a, b);
        }
    }
}

/// Lint report as CSV with header `rule,severity,entity,message`.
pub fn findings_to_csv(findings: &[Finding]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["rule", "severity", "entity", "message"]).expect("in-memory write");
    for f in findings {
        w.write_record([f.rule.as_str(), &f.severity.to_string(), &f.entity.to_string(), &f.message]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TaxonomyStats {
    /// Declared classes other than the root.
    pub class_count: usize,
    pub vertical_count: usize,
    pub max_depth: usize,
    /// SubClassOf axioms.
    pub logical_axiom_count: usize,
    pub annotation_axiom_count: usize,
    pub declaration_count: usize,
    pub deprecated_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("taxonomy is not a valid tree ({} violations)", .0.violations.len())]
    InvalidTree(ValidationReport),
}

pub fn stats(tax: &Taxonomy) -> Result<TaxonomyStats, StatsError> {
    let report = tax.validate_tree();
    if !report.is_empty() {
        return Err(StatsError::InvalidTree(report));
    }
    let mut s = TaxonomyStats::default();
    for axiom in tax.axioms() {
        match axiom {
            Axiom::Declaration { .. } => s.declaration_count += 1,
            Axiom::SubClassOf { .. } => s.logical_axiom_count += 1,
            Axiom::Annotation(_) => s.annotation_axiom_count += 1,
        }
    }
    s.class_count = s.declaration_count.saturating_sub(1);
    s.vertical_count = tax.child_count(tax.root());
    s.deprecated_count = tax.deprecated_count();
    let mut queue = VecDeque::from([(tax.root(), 0usize)]);
    while let Some((c, d)) = queue.pop_front() {
        s.max_depth = s.max_depth.max(d);
        queue.extend(tax.children(c).map(|k| (k, d + 1)));
    }
    Ok(s)
}

/// Labels in `lang` shared by two or more entities, regardless of
/// deprecation. Handy for reports.
pub fn shared_labels<'a>(tax: &'a Taxonomy, lang: &LanguageTag) -> BTreeMap<&'a str, Vec<&'a Iri>> {
    let mut out: BTreeMap<&str, Vec<&Iri>> = BTreeMap::new();
    for c in tax.classes() {
        for label in tax.labels(c).filter(|l: &&AnnotationValue| l.lang.as_ref() == Some(lang)) {
            out.entry(label.lexical.as_str()).or_default().push(c);
        }
    }
    out.retain(|_, v| v.len() > 1);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AtomicChange;

    fn iri(local: &str) -> Iri {
        Iri::parse(&format!("https://example.org/tax/{local}")).unwrap()
    }

    fn en(text: &str) -> AnnotationValue {
        AnnotationValue::lang_string(text, LanguageTag::parse("en").unwrap())
    }

    fn build(edges: &[(&str, &str, &str)]) -> Taxonomy {
        let mut tax = Taxonomy::new(iri("root"));
        for (c, p, label) in edges {
            tax.apply(&AtomicChange::add(Axiom::declaration(iri(c)))).unwrap();
            tax.apply(&AtomicChange::add(Axiom::sub_class_of(iri(c), iri(p)))).unwrap();
            tax.apply(&AtomicChange::add(Axiom::annotation(vocab().label.clone(), iri(c), en(label)))).unwrap();
        }
        tax
    }

    fn rules(findings: &[Finding], rule: LintRule) -> Vec<&Finding> {
        findings.iter().filter(|f| f.rule == rule).collect()
    }

    #[test]
    fn sibling_sofas() {
        let tax = build(&[("home", "root", "Home Decor"), ("sofas", "home", "Sofas"), ("sofas_2", "home", "Sofas")]);
        let found = lint(&tax);
        let sib = rules(&found, LintRule::SiblingDuplicateLabel);
        assert_eq!(sib.len(), 1);
        assert_eq!(sib[0].severity, Severity::Error);
        assert_eq!(sib[0].entity, FindingEntity::Pair(iri("sofas"), iri("sofas_2")));
        assert_eq!(rules(&found, LintRule::GlobalLabelCollision).len(), 1);
    }

    #[test]
    fn qualifier_suffix() {
        assert!(is_well_formed_qualifier("Topiary (Plant)"));
        assert!(is_well_formed_qualifier("Topiary (Gardening Activity)"));
        assert!(is_well_formed_qualifier("Topiary"));
        for bad in ["Topiary (", "Topiary ()", "(Plant)", "Topiary(Plant)", "Topiary (Plant) Care", "A (B) (C)", "Topiary )"] {
            assert!(!is_well_formed_qualifier(bad), "{bad}");
        }
        let tax = build(&[("g", "root", "Gardening"), ("t1", "g", "Topiary (Plant)"), ("t2", "g", "Topiary (")]);
        let amb = rules(&lint(&tax), LintRule::AmbiguitySuffix).into_iter().cloned().collect::<Vec<_>>();
        assert_eq!(amb.len(), 1);
        assert_eq!(amb[0].entity, FindingEntity::One(iri("t2")));
    }

    #[test]
    fn title_case() {
        assert!(title_case_violations("Mid Century Architecture").is_empty());
        assert!(title_case_violations("Bread and Butter").is_empty());
        assert!(title_case_violations("The Art of War").is_empty());
        assert!(title_case_violations("DIY Pom Pom").is_empty());
        assert!(title_case_violations("3D Printing").is_empty());
        assert_eq!(title_case_violations("the Art"), vec!["the"]);
        assert_eq!(title_case_violations("Mid century architecture"), vec!["century", "architecture"]);
        let mut tax = build(&[("a", "root", "Mid century")]);
        tax.apply(&AtomicChange::add(Axiom::annotation(
            vocab().label.clone(),
            iri("a"),
            AnnotationValue::lang_string("építészet", LanguageTag::parse("hu").unwrap()),
        )))
        .unwrap();
        let tc = rules(&lint(&tax), LintRule::TitleCase).len();
        assert_eq!(tc, 1);
        let underscored = build(&[("a", "root", "Mid_Century")]);
        assert_eq!(rules(&lint(&underscored), LintRule::TitleCase).len(), 1);
    }

    #[test]
    fn deep_nodes_need_definitions() {
        let mut tax = build(&[("arch", "root", "Architecture"), ("mid", "arch", "Mid Century Architecture")]);
        let found = lint(&tax);
        let md = rules(&found, LintRule::MissingDefinitionOnDeepNode);
        assert_eq!(md.len(), 1);
        assert_eq!(md[0].entity, FindingEntity::One(iri("mid")));
        assert_eq!(md[0].severity, Severity::Warning);
        tax.apply(&AtomicChange::add(Axiom::annotation(vocab().definition.clone(), iri("mid"), en("Design from 1945 to 1969.")))).unwrap();
        assert!(rules(&lint(&tax), LintRule::MissingDefinitionOnDeepNode).is_empty());
    }

    #[test]
    fn deprecated_entities_are_skipped_unless_asked() {
        let mut tax = build(&[("home", "root", "Home Decor"), ("sofas", "home", "Sofas"), ("sofas_2", "home", "Sofas")]);
        tax.apply(&AtomicChange::add(Axiom::annotation(vocab().deprecated.clone(), iri("sofas_2"), AnnotationValue::boolean(true)))).unwrap();
        let found = lint(&tax);
        assert!(found.iter().all(|f| !f.entity.iris().contains(&&iri("sofas_2"))));
        let all = lint_with(&tax, LintOptions { include_deprecated: true });
        assert_eq!(rules(&all, LintRule::SiblingDuplicateLabel).len(), 1);
    }

    #[test]
    fn sorted_and_deterministic() {
        let tax = build(&[("b", "root", "bad label"), ("a", "b", "X ("), ("c", "b", "X (")]);
        let found = lint(&tax);
        let mut sorted = found.clone();
        sorted.sort_by(|x, y| (x.rule.as_str(), &x.entity).cmp(&(y.rule.as_str(), &y.entity)));
        assert_eq!(found, sorted);
        assert_eq!(found, lint(&tax));
    }

    #[test]
    fn csv_report() {
        let tax = build(&[("home", "root", "Home Decor"), ("sofas", "home", "Sofas"), ("sofas_2", "home", "Sofas")]);
        let csv = findings_to_csv(&rules(&lint(&tax), LintRule::SiblingDuplicateLabel).into_iter().cloned().collect::<Vec<_>>());
        assert_eq!(
            csv,
            "rule,severity,entity,message\nSiblingDuplicateLabel,Error,https://example.org/tax/sofas https://example.org/tax/sofas_2,\"siblings under https://example.org/tax/home share the label \"\"Sofas\"\"\"\n"
        );
    }

    #[test]
    fn stats_root_only_and_small() {
        let s = stats(&Taxonomy::new(iri("root"))).unwrap();
        assert_eq!(s, TaxonomyStats { declaration_count: 1, ..Default::default() });
        let tax = build(&[("a", "root", "A"), ("b", "root", "B"), ("c", "a", "C"), ("d", "c", "D")]);
        let s = stats(&tax).unwrap();
        assert_eq!(s.class_count, 4);
        assert_eq!(s.vertical_count, 2);
        assert_eq!(s.max_depth, 3);
        assert_eq!(s.logical_axiom_count, 4);
        assert_eq!(s.annotation_axiom_count, 4);
        assert_eq!(s.declaration_count, 5);
        let mut broken = tax.clone();
        broken.apply(&AtomicChange::add(Axiom::declaration(iri("stray")))).unwrap();
        assert!(matches!(stats(&broken), Err(StatsError::InvalidTree(_))));
    }
}
