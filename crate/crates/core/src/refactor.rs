//! Reorganization planners. Each turns a high-level request into a list of
//! atomic changes against a taxonomy snapshot; nothing is applied here.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::UnknownEntity;
use crate::iri::{Iri, LanguageTag};
use crate::model::{AnnotationAssertion, AnnotationValue, AtomicChange, Axiom, Taxonomy};
use crate::vocab::vocab;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error(transparent)]
    UnknownEntity(#[from] UnknownEntity),
    #[error("merge needs at least one source")]
    NoSources,
    #[error("the merge target is also a source")]
    TargetInSources,
    #[error("source {0} is an ancestor of the target")]
    SourceIsAncestorOfTarget(Iri),
    #[error("moving {0} would create a cycle")]
    WouldCreateCycle(Iri),
    #[error("the root class cannot be moved")]
    RootCannotMove,
    #[error("invalid pattern: {0}")]
    InvalidPattern(String),
    #[error("invalid replacement template: {0}")]
    InvalidTemplate(String),
    #[error("a selection needs at least one criterion")]
    EmptySelection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MergeRequest {
    pub sources: BTreeSet<Iri>,
    pub target: Iri,
    #[serde(default)]
    pub commit_message: String,
}

/// Change list that folds `sources` into `target`: children re-parented,
/// sources detached and deprecated (declarations and annotations kept), and
/// source labels copied to the target as alternative labels.
pub fn plan_merge(tax: &Taxonomy, req: &MergeRequest) -> Result<Vec<AtomicChange>, PlanError> {
    if req.sources.is_empty() {
        return Err(PlanError::NoSources);
    }
    for iri in req.sources.iter().chain([&req.target]) {
        if !tax.is_declared(iri) {
            return Err(UnknownEntity(iri.clone()).into());
        }
    }
    if req.sources.contains(&req.target) {
        return Err(PlanError::TargetInSources);
    }
    let target_ancestors: HashSet<Iri> = tax.ancestors(&req.target).into_iter().collect();
    if let Some(source) = req.sources.iter().find(|s| target_ancestors.contains(*s)) {
        return Err(PlanError::SourceIsAncestorOfTarget(source.clone()));
    }

    let v = vocab();
    let mut changes = Vec::new();
    let mut new_alt_labels: HashSet<AnnotationValue> = HashSet::new();
    for source in &req.sources {
        for child in tax.children(source) {
            changes.push(AtomicChange::remove(Axiom::sub_class_of(child.clone(), source.clone())));
            if !req.sources.contains(child) && !tax.contains(&Axiom::sub_class_of(child.clone(), req.target.clone())) {
                changes.push(AtomicChange::add(Axiom::sub_class_of(child.clone(), req.target.clone())));
            }
        }
        for parent in tax.parents(source) {
            // edges to other sources are removed from the parent side above
            if !req.sources.contains(parent) {
                changes.push(AtomicChange::remove(Axiom::sub_class_of(source.clone(), parent.clone())));
            }
        }
        let deprecation = Axiom::annotation(v.deprecated.clone(), source.clone(), AnnotationValue::boolean(true));
        if !tax.contains(&deprecation) {
            changes.push(AtomicChange::add(deprecation));
        }
        for label in tax.labels(source) {
            if tax.has_annotation(&req.target, &v.alt_label, label) || !new_alt_labels.insert(label.clone()) {
                continue;
            }
            changes.push(AtomicChange::add(Axiom::annotation(v.alt_label.clone(), req.target.clone(), label.clone())));
        }
    }
    Ok(changes)
}

/// Change list re-parenting every entity under `new_parent`. Entities
/// already there produce no changes.
pub fn plan_bulk_move(tax: &Taxonomy, entities: &BTreeSet<Iri>, new_parent: &Iri) -> Result<Vec<AtomicChange>, PlanError> {
    for iri in entities.iter().chain([new_parent]) {
        if !tax.is_declared(iri) {
            return Err(UnknownEntity(iri.clone()).into());
        }
    }
    if entities.contains(tax.root()) {
        return Err(PlanError::RootCannotMove);
    }
    for entity in entities {
        if entity == new_parent || tax.is_ancestor(entity, new_parent) {
            return Err(PlanError::WouldCreateCycle(entity.clone()));
        }
    }
    let mut changes = Vec::new();
    for entity in entities {
        let parents: Vec<&Iri> = tax.parents(entity).collect();
        if parents == [new_parent] {
            continue;
        }
        for parent in parents {
            if parent != new_parent {
                changes.push(AtomicChange::remove(Axiom::sub_class_of(entity.clone(), parent.clone())));
            }
        }
        if !tax.contains(&Axiom::sub_class_of(entity.clone(), new_parent.clone())) {
            changes.push(AtomicChange::add(Axiom::sub_class_of(entity.clone(), new_parent.clone())));
        }
    }
    Ok(changes)
}

/// Which annotation assertions a bulk edit applies to.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnnotationSelection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub property: Option<Iri>,
    /// Full-match regular expression over the lexical value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_pattern: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<LanguageTag>,
    /// Restricts subjects to this class and its descendants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope: Option<Iri>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum AnnotationAction {
    /// Template with `$1`, `${1}` or `${name}` group references.
    ReplaceValue(String),
    SetLang(LanguageTag),
    Delete,
    CopyToProperty(Iri),
}

/// Result of a bulk annotation plan. Additions that would duplicate an
/// existing assertion are dropped and listed in `skipped`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BulkAnnotationPlan {
    pub changes: Vec<AtomicChange>,
    pub matched: usize,
    pub skipped: Vec<Axiom>,
}

struct CompiledSelection<'a> {
    sel: &'a AnnotationSelection,
    regex: Option<Regex>,
    scope: Option<BTreeSet<Iri>>,
}

impl<'a> CompiledSelection<'a> {
    fn new(tax: &Taxonomy, sel: &'a AnnotationSelection) -> Result<Self, PlanError> {
        if sel.property.is_none() && sel.value_pattern.is_none() && sel.lang.is_none() && sel.scope.is_none() {
            return Err(PlanError::EmptySelection);
        }
        let regex = sel
            .value_pattern
            .as_deref()
            .map(|p| Regex::new(&format!("^(?:{p})$")).map_err(|e| PlanError::InvalidPattern(e.to_string())))
            .transpose()?;
        let scope = match &sel.scope {
            Some(root) => {
                let mut set = tax.descendants(root)?;
                set.insert(root.clone());
                Some(set)
            }
            None => None,
        };
        Ok(CompiledSelection { sel, regex, scope })
    }

    fn matches(&self, a: &AnnotationAssertion) -> bool {
        self.sel.property.as_ref().is_none_or(|p| p == &a.property)
            && self.sel.lang.as_ref().is_none_or(|l| a.value.lang.as_ref() == Some(l))
            && self.scope.as_ref().is_none_or(|s| s.contains(&a.subject))
            && self.regex.as_ref().is_none_or(|r| r.is_match(&a.value.lexical))
    }
}

/// Assertions selected by `sel`, in canonical order.
pub fn select_annotations<'t>(tax: &'t Taxonomy, sel: &AnnotationSelection) -> Result<Vec<&'t AnnotationAssertion>, PlanError> {
    let compiled = CompiledSelection::new(tax, sel)?;
    Ok(tax
        .axioms()
        .iter()
        .filter_map(|a| match a {
            Axiom::Annotation(a) if compiled.matches(a) => Some(a),
            _ => None,
        })
        .collect())
}

fn check_template(regex: Option<&Regex>, template: &str) -> Result<(), PlanError> {
    let group_count = regex.map_or(1, Regex::captures_len);
    let names: HashSet<&str> = regex.map(|r| r.capture_names().flatten().collect()).unwrap_or_default();
    let bytes = template.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'$' {
            i += 1;
            continue;
        }
        i += 1;
        if i < bytes.len() && bytes[i] == b'$' {
            i += 1;
            continue;
        }
        let (reference, next) = if i < bytes.len() && bytes[i] == b'{' {
            let end = template[i..]
                .find('}')
                .ok_or_else(|| PlanError::InvalidTemplate("unterminated ${".into()))?;
            (&template[i + 1..i + end], i + end + 1)
        } else {
            let len = template[i..].bytes().take_while(|b| b.is_ascii_alphanumeric() || *b == b'_').count();
            (&template[i..i + len], i + len)
        };
        if reference.is_empty() {
            return Err(PlanError::InvalidTemplate("empty group reference".into()));
        }
        let known = match reference.parse::<usize>() {
            Ok(n) => n < group_count,
            Err(_) => names.contains(reference),
        };
        if !known {
            return Err(PlanError::InvalidTemplate(format!("unknown group ${reference}")));
        }
        i = next;
    }
    Ok(())
}

/// Plans a pattern-driven edit over annotation assertions: `Delete` removes
/// each match, `ReplaceValue` and `SetLang` swap it for a rewritten value,
/// `CopyToProperty` adds the value under another property.
pub fn plan_bulk_annotation_edit(
    tax: &Taxonomy,
    sel: &AnnotationSelection,
    action: &AnnotationAction,
) -> Result<BulkAnnotationPlan, PlanError> {
    let compiled = CompiledSelection::new(tax, sel)?;
    if let AnnotationAction::ReplaceValue(template) = action {
        check_template(compiled.regex.as_ref(), template)?;
    }
    let matched: Vec<&AnnotationAssertion> = tax
        .axioms()
        .iter()
        .filter_map(|a| match a {
            Axiom::Annotation(a) if compiled.matches(a) => Some(a),
            _ => None,
        })
        .collect();

    let mut plan = BulkAnnotationPlan { matched: matched.len(), ..Default::default() };
    let mut removed: HashSet<Axiom> = HashSet::new();
    let mut added: HashSet<Axiom> = HashSet::new();
    // Additions are staged so every removal precedes them and a rewrite can
    // land on a value that another match is vacating.
    let mut additions: BTreeMap<usize, Axiom> = BTreeMap::new();
    for (i, a) in matched.iter().enumerate() {
        let original = Axiom::Annotation((*a).clone());
        let replacement = match action {
            AnnotationAction::Delete => None,
            AnnotationAction::ReplaceValue(template) => {
                let lexical = match &compiled.regex {
                    Some(re) => {
                        let caps = re.captures(&a.value.lexical).expect("selected values match");
                        let mut out = String::new();
                        caps.expand(template, &mut out);
                        out
                    }
                    None => template.clone(),
                };
                Some(AnnotationValue { lexical, ..a.value.clone() })
            }
            AnnotationAction::SetLang(lang) => {
                Some(AnnotationValue { lexical: a.value.lexical.clone(), lang: Some(lang.clone()), datatype: None })
            }
            AnnotationAction::CopyToProperty(property) => {
                let copy = Axiom::annotation(property.clone(), a.subject.clone(), a.value.clone());
                if tax.contains(&copy) || !added.insert(copy.clone()) {
                    plan.skipped.push(copy);
                } else {
                    additions.insert(i, copy);
                }
                continue;
            }
        };
        match replacement {
            None => {
                removed.insert(original.clone());
                plan.changes.push(AtomicChange::remove(original));
            }
            Some(value) if value == a.value => {}
            Some(value) => {
                removed.insert(original.clone());
                plan.changes.push(AtomicChange::remove(original));
                additions.insert(i, Axiom::annotation(a.property.clone(), a.subject.clone(), value));
            }
        }
    }
    let copying = matches!(action, AnnotationAction::CopyToProperty(_));
    for (_, axiom) in additions {
        if !copying {
            let exists = tax.contains(&axiom) && !removed.contains(&axiom);
            if exists || !added.insert(axiom.clone()) {
                plan.skipped.push(axiom);
                continue;
            }
        }
        plan.changes.push(AtomicChange::add(axiom));
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iri(local: &str) -> Iri {
        Iri::parse(&format!("https://example.org/tax/{local}")).unwrap()
    }

    fn en(text: &str) -> AnnotationValue {
        AnnotationValue::lang_string(text, LanguageTag::parse("en").unwrap())
    }

    fn build(edges: &[(&str, &str)], labels: &[(&str, &str)]) -> Taxonomy {
        let mut tax = Taxonomy::new(iri("root"));
        for (c, p) in edges {
            tax.apply(&AtomicChange::add(Axiom::declaration(iri(c)))).unwrap();
            tax.apply(&AtomicChange::add(Axiom::sub_class_of(iri(c), iri(p)))).unwrap();
        }
        for (c, l) in labels {
            tax.apply(&AtomicChange::add(Axiom::annotation(vocab().label.clone(), iri(c), en(l)))).unwrap();
        }
        tax
    }

    fn apply(tax: &Taxonomy, changes: &[AtomicChange]) -> Taxonomy {
        let mut next = tax.clone();
        next.apply_all(changes).unwrap();
        next
    }

    fn set(items: &[&str]) -> BTreeSet<Iri> {
        items.iter().map(|s| iri(s)).collect()
    }

    #[test]
    fn merge_art_deco() {
        let tax = build(
            &[("home_decor_styles", "root"), ("art_deco_interiors", "home_decor_styles"), ("art_deco_style", "home_decor_styles"), ("deco_lamps", "art_deco_interiors")],
            &[("art_deco_interiors", "Art Deco Interiors"), ("art_deco_style", "Art Deco Style")],
        );
        let req = MergeRequest { sources: set(&["art_deco_interiors"]), target: iri("art_deco_style"), commit_message: "merge".into() };
        let changes = plan_merge(&tax, &req).unwrap();
        let after = apply(&tax, &changes);
        assert!(after.has_annotation(&iri("art_deco_style"), &vocab().alt_label, &en("Art Deco Interiors")));
        assert!(after.is_deprecated(&iri("art_deco_interiors")));
        assert!(after.is_declared(&iri("art_deco_interiors")));
        assert!(after.labels(&iri("art_deco_interiors")).any(|l| l == &en("Art Deco Interiors")));
        assert_eq!(after.parent_of(&iri("deco_lamps")).unwrap(), Some(&iri("art_deco_style")));
        assert!(after.validate_tree().is_empty());
    }

    #[test]
    fn merge_bare_leaf_is_two_changes() {
        let tax = build(&[("a", "root"), ("b", "root")], &[]);
        let req = MergeRequest { sources: set(&["a"]), target: iri("b"), commit_message: String::new() };
        let changes = plan_merge(&tax, &req).unwrap();
        assert_eq!(
            changes,
            vec![
                AtomicChange::remove(Axiom::sub_class_of(iri("a"), iri("root"))),
                AtomicChange::add(Axiom::annotation(vocab().deprecated.clone(), iri("a"), AnnotationValue::boolean(true))),
            ]
        );
    }

    #[test]
    fn merge_nested_sources() {
        let tax = build(&[("t", "root"), ("s1", "root"), ("s2", "s1"), ("x", "s2")], &[]);
        let req = MergeRequest { sources: set(&["s1", "s2"]), target: iri("t"), commit_message: String::new() };
        let after = apply(&tax, &plan_merge(&tax, &req).unwrap());
        assert_eq!(after.parent_of(&iri("x")).unwrap(), Some(&iri("t")));
        assert!(after.validate_tree().is_empty());
    }

    #[test]
    fn merge_errors() {
        let tax = build(&[("a", "root"), ("b", "a")], &[]);
        let req = |s: &[&str], t: &str| MergeRequest { sources: set(s), target: iri(t), commit_message: String::new() };
        assert_eq!(plan_merge(&tax, &req(&["a"], "a")), Err(PlanError::TargetInSources));
        assert_eq!(plan_merge(&tax, &req(&["a"], "b")), Err(PlanError::SourceIsAncestorOfTarget(iri("a"))));
        assert_eq!(plan_merge(&tax, &req(&["root"], "b")), Err(PlanError::SourceIsAncestorOfTarget(iri("root"))));
        assert_eq!(plan_merge(&tax, &req(&["zz"], "b")), Err(PlanError::UnknownEntity(UnknownEntity(iri("zz")))));
        assert_eq!(plan_merge(&tax, &req(&[], "b")), Err(PlanError::NoSources));
    }

    #[test]
    fn move_sofas_and_tv_stands() {
        let tax = build(&[("home", "root"), ("living_room", "home"), ("sofas", "home"), ("tv_stands", "home")], &[]);
        let changes = plan_bulk_move(&tax, &set(&["sofas", "tv_stands"]), &iri("living_room")).unwrap();
        assert_eq!(changes.len(), 4);
        let after = apply(&tax, &changes);
        assert_eq!(after.parent_of(&iri("sofas")).unwrap(), Some(&iri("living_room")));
        assert!(after.validate_tree().is_empty());
        assert!(plan_bulk_move(&after, &set(&["sofas"]), &iri("living_room")).unwrap().is_empty());
    }

    #[test]
    fn move_errors() {
        let tax = build(&[("a", "root"), ("b", "a")], &[]);
        assert_eq!(plan_bulk_move(&tax, &set(&["a"]), &iri("b")), Err(PlanError::WouldCreateCycle(iri("a"))));
        assert_eq!(plan_bulk_move(&tax, &set(&["a"]), &iri("a")), Err(PlanError::WouldCreateCycle(iri("a"))));
        assert_eq!(plan_bulk_move(&tax, &set(&["root"]), &iri("a")), Err(PlanError::RootCannotMove));
        assert!(matches!(plan_bulk_move(&tax, &set(&["q"]), &iri("a")), Err(PlanError::UnknownEntity(_))));
    }

    fn styles() -> Taxonomy {
        build(
            &[("home_decor_styles", "root"), ("art_deco_interiors", "home_decor_styles"), ("california_style", "home_decor_styles"), ("other", "root")],
            &[("art_deco_interiors", "Art Deco Interiors"), ("california_style", "California Style"), ("other", "Loft Interiors")],
        )
    }

    #[test]
    fn replace_interiors_with_style() {
        let tax = styles();
        let sel = AnnotationSelection {
            property: Some(vocab().label.clone()),
            value_pattern: Some("(.*) Interiors".into()),
            lang: None,
            scope: Some(iri("home_decor_styles")),
        };
        let plan = plan_bulk_annotation_edit(&tax, &sel, &AnnotationAction::ReplaceValue("$1 Style".into())).unwrap();
        assert_eq!(plan.matched, 1);
        let after = apply(&tax, &plan.changes);
        assert!(after.labels(&iri("art_deco_interiors")).any(|l| l == &en("Art Deco Style")));
        // out of scope
        assert!(after.labels(&iri("other")).any(|l| l == &en("Loft Interiors")));
        assert!(select_annotations(&after, &sel).unwrap().is_empty());
    }

    #[test]
    fn delete_with_no_matches_is_empty() {
        let tax = styles();
        let sel = AnnotationSelection { value_pattern: Some("Nothing.*".into()), ..Default::default() };
        let plan = plan_bulk_annotation_edit(&tax, &sel, &AnnotationAction::Delete).unwrap();
        assert!(plan.changes.is_empty());
        assert_eq!(plan.matched, 0);
    }

    #[test]
    fn set_lang_and_copy() {
        let tax = styles();
        let sel = AnnotationSelection { property: Some(vocab().label.clone()), scope: Some(iri("home_decor_styles")), ..Default::default() };
        let hu = LanguageTag::parse("hu").unwrap();
        let plan = plan_bulk_annotation_edit(&tax, &sel, &AnnotationAction::SetLang(hu.clone())).unwrap();
        assert_eq!(plan.changes.len(), 4);
        let after = apply(&tax, &plan.changes);
        assert!(after.labels(&iri("california_style")).all(|l| l.lang.as_ref() == Some(&hu)));

        let plan = plan_bulk_annotation_edit(&tax, &sel, &AnnotationAction::CopyToProperty(vocab().alt_label.clone())).unwrap();
        assert_eq!(plan.changes.len(), 2);
        let after = apply(&tax, &plan.changes);
        let again = plan_bulk_annotation_edit(&after, &sel, &AnnotationAction::CopyToProperty(vocab().alt_label.clone())).unwrap();
        assert!(again.changes.is_empty());
        assert_eq!(again.skipped.len(), 2);
    }

    #[test]
    fn replace_collision_skips_add() {
        let tax = build(&[("a", "root")], &[("a", "Decor"), ("a", "Decors")]);
        let sel = AnnotationSelection { value_pattern: Some("Decors".into()), ..Default::default() };
        let plan = plan_bulk_annotation_edit(&tax, &sel, &AnnotationAction::ReplaceValue("Decor".into())).unwrap();
        assert_eq!(plan.changes, vec![AtomicChange::remove(Axiom::annotation(vocab().label.clone(), iri("a"), en("Decors")))]);
        assert_eq!(plan.skipped.len(), 1);
    }

    #[test]
    fn selection_errors() {
        let tax = styles();
        assert_eq!(
            plan_bulk_annotation_edit(&tax, &AnnotationSelection::default(), &AnnotationAction::Delete),
            Err(PlanError::EmptySelection)
        );
        let bad = AnnotationSelection { value_pattern: Some("(".into()), ..Default::default() };
        assert!(matches!(plan_bulk_annotation_edit(&tax, &bad, &AnnotationAction::Delete), Err(PlanError::InvalidPattern(_))));
        let sel = AnnotationSelection { value_pattern: Some("(.*) Interiors".into()), ..Default::default() };
        assert!(matches!(
            plan_bulk_annotation_edit(&tax, &sel, &AnnotationAction::ReplaceValue("$2".into())),
            Err(PlanError::InvalidTemplate(_))
        ));
        let named = AnnotationSelection { value_pattern: Some("(?P<base>.*) Interiors".into()), ..Default::default() };
        assert!(plan_bulk_annotation_edit(&tax, &named, &AnnotationAction::ReplaceValue("${base} Style".into())).is_ok());
        assert!(matches!(
            plan_bulk_annotation_edit(&tax, &named, &AnnotationAction::ReplaceValue("$nope".into())),
            Err(PlanError::InvalidTemplate(_))
        ));
    }
}
