//! Relational export: interests, synonyms and closure tables plus a
//! manifest.
//!
//! Excluded rows (noAds, deprecated) do not take their subtree with them:
//! included descendants re-attach to the nearest included ancestor, and
//! their `parentId` and `level` reflect the exported forest.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::iri::Iri;
use crate::model::{Taxonomy, ValidationReport};
use crate::multilang::{display_text, pick_label, DisplayLanguageConfig};
use crate::vocab::vocab;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExportError {
    #[error("taxonomy is not a valid tree ({} violations)", .0.violations.len())]
    InvalidTree(ValidationReport),
}

/// Persisted IRI to surrogate id map. Ids are never reused.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdMap {
    ids: BTreeMap<Iri, u64>,
    last: u64,
}

impl IdMap {
    pub fn get(&self, iri: &Iri) -> Option<u64> {
        self.ids.get(iri).copied()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Assigns ids to the IRIs not yet mapped, in the order given.
    pub fn assign<'a>(&mut self, iris: impl IntoIterator<Item = &'a Iri>) {
        for iri in iris {
            if !self.ids.contains_key(iri) {
                self.last += 1;
                self.ids.insert(iri.clone(), self.last);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExportOptions {
    #[serde(default)]
    pub include_no_ads: bool,
    #[serde(default)]
    pub include_deprecated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InterestRow {
    pub id: u64,
    pub iri: Iri,
    pub label: String,
    pub parent_id: Option<u64>,
    pub level: usize,
    pub no_ads: bool,
    pub is_human_reviewed: bool,
    pub deprecated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SynonymRow {
    pub id: u64,
    pub synonym: String,
    pub lang: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClosureRow {
    pub ancestor_id: u64,
    pub descendant_id: u64,
    pub distance: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowCounts {
    pub interests: usize,
    pub synonyms: usize,
    pub closure: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub revision: u64,
    pub timestamp: DateTime<Utc>,
    pub options: ExportOptions,
    pub row_counts: RowCounts,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportBundle {
    pub interests: Vec<InterestRow>,
    pub synonyms: Vec<SynonymRow>,
    pub closure: Vec<ClosureRow>,
    pub manifest: Manifest,
}

pub fn row_counts(bundle: &ExportBundle) -> RowCounts {
    RowCounts { interests: bundle.interests.len(), synonyms: bundle.synonyms.len(), closure: bundle.closure.len() }
}

/// Builds the bundle for `tax` as of `revision`. New classes get ids in
/// breadth-first order from the root (IRI order within a level, detached
/// classes last), so a fresh export numbers verticals first.
pub fn export(
    tax: &Taxonomy,
    revision: u64,
    timestamp: DateTime<Utc>,
    opts: ExportOptions,
    ids: &mut IdMap,
    languages: &DisplayLanguageConfig,
) -> Result<ExportBundle, ExportError> {
    let report = tax.validate_tree();
    if !report.is_empty() {
        return Err(ExportError::InvalidTree(report));
    }
    let v = vocab();
    let root = tax.root();
    // breadth-first from the root, then from each detached class
    let mut order: Vec<&Iri> = Vec::new();
    let detached: Vec<&Iri> = tax.classes().filter(|c| *c != root && tax.parents(c).next().is_none()).collect();
    for start in std::iter::once(root).chain(detached) {
        if start != root {
            order.push(start);
        }
        let mut frontier = vec![start];
        while !frontier.is_empty() {
            let mut next: Vec<&Iri> = frontier.iter().flat_map(|c| tax.children(c)).collect();
            next.sort();
            order.extend(&next);
            frontier = next;
        }
    }
    ids.assign(order.iter().copied());

    let included = |c: &Iri| (opts.include_deprecated || !tax.is_deprecated(c)) && (opts.include_no_ads || !tax.flag(c, &v.no_ads));
    // exported parent: nearest included proper ancestor below the root
    let mut exported_parent: BTreeMap<&Iri, Option<&Iri>> = BTreeMap::new();
    let mut level: BTreeMap<&Iri, usize> = BTreeMap::new();
    for c in order.iter().copied() {
        let parent = tax.parents(c).next();
        let attach = match parent {
            None => None,
            Some(p) if p == root => None,
            Some(p) if included(p) => Some(p),
            Some(p) => exported_parent.get(p).copied().flatten(),
        };
        exported_parent.insert(c, attach);
        if included(c) {
            level.insert(c, attach.map_or(1, |p| level[p] + 1));
        }
    }

    let default_langs = [languages.default_for_new_entities.clone()];
    let mut interests = Vec::new();
    let mut synonyms = Vec::new();
    let mut closure = Vec::new();
    for (c, lvl) in &level {
        let id = ids.get(c).expect("assigned above");
        let labels: Vec<_> = tax.labels(c).collect();
        let label = pick_label(&labels, &default_langs).map(|l| l.lexical.clone()).unwrap_or_else(|| display_text(tax, c, languages));
        interests.push(InterestRow {
            id,
            iri: (*c).clone(),
            label,
            parent_id: exported_parent[c].map(|p| ids.get(p).expect("assigned above")),
            level: *lvl,
            no_ads: tax.flag(c, &v.no_ads),
            is_human_reviewed: tax.flag(c, &v.is_human_reviewed),
            deprecated: tax.is_deprecated(c),
        });
        for alt in tax.annotation_values(c, &v.alt_label) {
            synonyms.push(SynonymRow {
                id,
                synonym: alt.lexical.clone(),
                lang: alt.lang.as_ref().map(|l| l.to_string()).unwrap_or_default(),
            });
        }
        let mut distance = 0;
        let mut cursor = exported_parent[c];
        while let Some(a) = cursor {
            distance += 1;
            closure.push(ClosureRow { ancestor_id: ids.get(a).expect("assigned above"), descendant_id: id, distance });
            cursor = exported_parent[a];
        }
    }
    interests.sort_by_key(|r| r.id);
    synonyms.sort();
    closure.sort();
    let mut bundle = ExportBundle {
        interests,
        synonyms,
        closure,
        manifest: Manifest { revision, timestamp, options: opts, row_counts: RowCounts { interests: 0, synonyms: 0, closure: 0 } },
    };
    bundle.manifest.row_counts = row_counts(&bundle);
    Ok(bundle)
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

impl ExportBundle {
    pub fn interests_csv(&self) -> Vec<u8> {
        csv_bytes(
            &["id", "iri", "label", "parentId", "level", "noAds", "isHumanReviewed", "deprecated"],
            self.interests.iter().map(|r| {
                vec![
                    r.id.to_string(),
                    r.iri.to_string(),
                    r.label.clone(),
                    r.parent_id.map(|p| p.to_string()).unwrap_or_default(),
                    r.level.to_string(),
                    r.no_ads.to_string(),
                    r.is_human_reviewed.to_string(),
                    r.deprecated.to_string(),
                ]
            }),
        )
    }

    pub fn synonyms_csv(&self) -> Vec<u8> {
        csv_bytes(&["id", "synonym", "lang"], self.synonyms.iter().map(|r| vec![r.id.to_string(), r.synonym.clone(), r.lang.clone()]))
    }

    pub fn closure_csv(&self) -> Vec<u8> {
        csv_bytes(
            &["ancestorId", "descendantId", "distance"],
            self.closure.iter().map(|r| vec![r.ancestor_id.to_string(), r.descendant_id.to_string(), r.distance.to_string()]),
        )
    }

    pub fn manifest_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(&self.manifest).expect("manifest serializes");
        out.push(b'\n');
        out
    }

    /// `(file name, bytes)` for each file in the bundle.
    pub fn files(&self) -> Vec<(&'static str, Vec<u8>)> {
        vec![
            ("interests.csv", self.interests_csv()),
            ("synonyms.csv", self.synonyms_csv()),
            ("closure.csv", self.closure_csv()),
            ("manifest.json", self.manifest_json()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iri::LanguageTag;
    use crate::model::{AnnotationValue, AtomicChange, Axiom};
    use chrono::TimeZone;

    fn iri(local: &str) -> Iri {
        Iri::parse(&format!("https://example.org/tax/{local}")).unwrap()
    }

    fn ts() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2017, 5, 1, 12, 0, 0).unwrap()
    }

    fn build(edges: &[(&str, &str)]) -> Taxonomy {
        let mut tax = Taxonomy::new(iri("root"));
        for (c, p) in edges {
            tax.apply(&AtomicChange::add(Axiom::declaration(iri(c)))).unwrap();
            tax.apply(&AtomicChange::add(Axiom::sub_class_of(iri(c), iri(p)))).unwrap();
            let label = AnnotationValue::lang_string(c.to_uppercase(), LanguageTag::parse("en").unwrap());
            tax.apply(&AtomicChange::add(Axiom::annotation(vocab().label.clone(), iri(c), label))).unwrap();
        }
        tax
    }

    fn flag(tax: &mut Taxonomy, c: &str, p: &Iri) {
        tax.apply(&AtomicChange::add(Axiom::annotation(p.clone(), iri(c), AnnotationValue::boolean(true)))).unwrap();
    }

    fn run(tax: &Taxonomy, opts: ExportOptions, ids: &mut IdMap) -> ExportBundle {
        export(tax, 7, ts(), opts, ids, &DisplayLanguageConfig::default()).unwrap()
    }

    #[test]
    fn root_only_is_empty() {
        let b = run(&Taxonomy::new(iri("root")), ExportOptions::default(), &mut IdMap::default());
        assert!(b.interests.is_empty());
        assert_eq!(b.interests_csv(), b"id,iri,label,parentId,level,noAds,isHumanReviewed,deprecated\r\n");
    }

    #[test]
    fn no_ads_reattachment() {
        let mut tax = build(&[("health", "root"), ("drugs", "health"), ("recovery", "drugs"), ("fitness", "health")]);
        flag(&mut tax, "drugs", &vocab().no_ads);
        let mut ids = IdMap::default();
        let b = run(&tax, ExportOptions::default(), &mut ids);
        let iris: Vec<&Iri> = b.interests.iter().map(|r| &r.iri).collect();
        assert!(!iris.contains(&&iri("drugs")));
        let recovery = b.interests.iter().find(|r| r.iri == iri("recovery")).unwrap();
        assert_eq!(recovery.parent_id, ids.get(&iri("health")));
        assert_eq!(recovery.level, 2);
        let with = run(&tax, ExportOptions { include_no_ads: true, ..Default::default() }, &mut ids);
        let drugs = with.interests.iter().find(|r| r.iri == iri("drugs")).unwrap();
        assert!(drugs.no_ads);
        assert_eq!(with.interests.len(), 4);
        assert_eq!(with.interests.iter().find(|r| r.iri == iri("recovery")).unwrap().level, 3);
    }

    #[test]
    fn closure_and_levels() {
        let tax = build(&[("a", "root"), ("b", "a"), ("c", "b"), ("d", "root")]);
        let mut ids = IdMap::default();
        let b = run(&tax, ExportOptions::default(), &mut ids);
        assert_eq!(ids.get(&iri("a")), Some(1));
        assert_eq!(ids.get(&iri("d")), Some(2));
        let id = |s: &str| ids.get(&iri(s)).unwrap();
        assert_eq!(
            b.closure,
            vec![
                ClosureRow { ancestor_id: id("a"), descendant_id: id("b"), distance: 1 },
                ClosureRow { ancestor_id: id("a"), descendant_id: id("c"), distance: 2 },
                ClosureRow { ancestor_id: id("b"), descendant_id: id("c"), distance: 1 },
            ]
        );
        for r in &b.interests {
            assert_eq!(r.parent_id.is_none(), r.level == 1);
        }
        assert_eq!(b.manifest.row_counts, RowCounts { interests: 4, synonyms: 0, closure: 3 });
    }

    #[test]
    fn ids_survive_exclusion_and_output_is_deterministic() {
        let mut tax = build(&[("a", "root"), ("b", "a")]);
        let mut ids = IdMap::default();
        let first = run(&tax, ExportOptions::default(), &mut ids);
        let b_id = ids.get(&iri("b")).unwrap();
        flag(&mut tax, "b", &vocab().deprecated);
        tax.apply(&AtomicChange::remove(Axiom::sub_class_of(iri("b"), iri("a")))).unwrap();
        tax.apply(&AtomicChange::add(Axiom::declaration(iri("c")))).unwrap();
        tax.apply(&AtomicChange::add(Axiom::sub_class_of(iri("c"), iri("a")))).unwrap();
        let second = run(&tax, ExportOptions::default(), &mut ids);
        assert_eq!(second.interests.len(), first.interests.len());
        assert_eq!(ids.get(&iri("b")), Some(b_id));
        assert!(ids.get(&iri("c")).unwrap() > b_id);
        let with_dep = run(&tax, ExportOptions { include_deprecated: true, ..Default::default() }, &mut ids);
        let b = with_dep.interests.iter().find(|r| r.iri == iri("b")).unwrap();
        assert_eq!((b.parent_id, b.level, b.deprecated), (None, 1, true));
        assert_eq!(run(&tax, ExportOptions::default(), &mut ids).files(), second.files());
    }

    #[test]
    fn synonyms_and_quoting() {
        let mut tax = build(&[("sofas", "root")]);
        let en = LanguageTag::parse("en").unwrap();
        tax.apply(&AtomicChange::add(Axiom::annotation(vocab().alt_label.clone(), iri("sofas"), AnnotationValue::lang_string("Couches, \"big\"", en)))).unwrap();
        let b = run(&tax, ExportOptions::default(), &mut IdMap::default());
        assert_eq!(b.synonyms, vec![SynonymRow { id: 1, synonym: "Couches, \"big\"".into(), lang: "en".into() }]);
        assert_eq!(String::from_utf8(b.synonyms_csv()).unwrap(), "id,synonym,lang\r\n1,\"Couches, \"\"big\"\"\",en\r\n");
    }

    #[test]
    fn invalid_tree_rejected() {
        let mut tax = build(&[("a", "root")]);
        tax.apply(&AtomicChange::add(Axiom::declaration(iri("stray")))).unwrap();
        assert!(matches!(
            export(&tax, 1, ts(), ExportOptions::default(), &mut IdMap::default(), &DisplayLanguageConfig::default()),
            Err(ExportError::InvalidTree(_))
        ));
    }
}
