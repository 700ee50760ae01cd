use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::cell::RefCell;
use std::sync::{Mutex, OnceLock};

use regex::Regex;
use topiary_core::changelog::Revision;
use topiary_core::export::ExportBundle;
use topiary_core::tags::{Assignments, Criteria, TagRule, ValueMatcher};
use topiary_core::{vocab, AnnotationValue, AtomicChange, Axiom, ChangeOp, Iri, TagId, Taxonomy};

/// Axiom set after applying `changes` to `{Declaration(root)}` as plain set
/// insertions and removals.
pub fn fold<'a>(root: &Iri, changes: impl IntoIterator<Item = &'a AtomicChange>) -> BTreeSet<Axiom> {
    let mut set = BTreeSet::from([Axiom::declaration(root.clone())]);
    for c in changes {
        match c.op {
            ChangeOp::Add => set.insert(c.axiom.clone()),
            ChangeOp::Remove => set.remove(&c.axiom),
        };
    }
    set
}

pub fn fold_revisions(root: &Iri, revisions: &[Revision]) -> BTreeSet<Axiom> {
    fold(root, revisions.iter().flat_map(|r| r.changes.iter()))
}

fn mentions(axiom: &Axiom, iri: &Iri) -> bool {
    match axiom {
        Axiom::Declaration { class } => class == iri,
        Axiom::SubClassOf { sub, sup } => sub == iri || sup == iri,
        Axiom::Annotation(a) => &a.subject == iri,
    }
}

/// Revision numbers touching `iri`, newest first.
pub fn history_scan(revisions: &[Revision], iri: &Iri) -> Vec<u64> {
    let mut out: Vec<u64> =
        revisions.iter().filter(|r| r.changes.iter().any(|c| mentions(&c.axiom, iri))).map(|r| r.number).collect();
    out.reverse();
    out
}

/// Plain facts pulled out of an axiom set.
pub struct Facts {
    pub declared: BTreeSet<Iri>,
    pub edges: Vec<(Iri, Iri)>,
    pub annotations: BTreeMap<Iri, Vec<(Iri, AnnotationValue)>>,
    down: BTreeMap<Iri, Vec<Iri>>,
    descendants: RefCell<HashMap<Iri, BTreeSet<Iri>>>,
}

impl Facts {
    pub fn new<'a>(axioms: impl IntoIterator<Item = &'a Axiom>) -> Self {
        let mut f = Facts {
            declared: BTreeSet::new(),
            edges: Vec::new(),
            annotations: BTreeMap::new(),
            down: BTreeMap::new(),
            descendants: RefCell::default(),
        };
        for a in axioms {
            match a {
                Axiom::Declaration { class } => {
                    f.declared.insert(class.clone());
                }
                Axiom::SubClassOf { sub, sup } => f.edges.push((sub.clone(), sup.clone())),
                Axiom::Annotation(a) => {
                    f.annotations.entry(a.subject.clone()).or_default().push((a.property.clone(), a.value.clone()))
                }
            }
        }
        for (sub, sup) in &f.edges {
            f.down.entry(sup.clone()).or_default().push(sub.clone());
        }
        f
    }

    pub fn of(tax: &Taxonomy) -> Self {
        Facts::new(tax.axioms())
    }

    pub fn values<'a>(&'a self, e: &Iri, property: &'a Iri) -> impl Iterator<Item = &'a AnnotationValue> + 'a {
        self.annotations.get(e).into_iter().flatten().filter(move |(p, _)| p == property).map(|(_, v)| v)
    }

    pub fn deprecated(&self, e: &Iri) -> bool {
        self.values(e, &vocab().deprecated).any(|v| v.lexical == "true")
    }

    pub fn children(&self, e: &Iri) -> Vec<Iri> {
        self.down.get(e).cloned().unwrap_or_default()
    }

    /// Strict descendants by breadth-first search over the edge list.
    pub fn descendants(&self, e: &Iri) -> BTreeSet<Iri> {
        if let Some(hit) = self.descendants.borrow().get(e) {
            return hit.clone();
        }
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([e.clone()]);
        while let Some(cur) = queue.pop_front() {
            for c in self.children(&cur) {
                if seen.insert(c.clone()) {
                    queue.push_back(c);
                }
            }
        }
        self.descendants.borrow_mut().insert(e.clone(), seen.clone());
        seen
    }

    pub fn descendant_of(&self, ancestor: &Iri, e: &Iri) -> bool {
        if !self.descendants.borrow().contains_key(ancestor) {
            self.descendants(ancestor);
        }
        self.descendants.borrow()[ancestor].contains(e)
    }

    /// Depth of every class reachable from `root` (root = 0).
    pub fn depths(&self, root: &Iri) -> BTreeMap<Iri, usize> {
        let mut out = BTreeMap::from([(root.clone(), 0)]);
        let mut queue = VecDeque::from([root.clone()]);
        while let Some(cur) = queue.pop_front() {
            let d = out[&cur];
            for c in self.children(&cur) {
                if !out.contains_key(&c) {
                    out.insert(c.clone(), d + 1);
                    queue.push_back(c);
                }
            }
        }
        out
    }
}

fn plain_decimal(s: &str) -> Option<f64> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"^[+-]?([0-9]+(\.[0-9]*)?|\.[0-9]+)$").unwrap());
    re.is_match(s).then(|| s.parse().unwrap())
}

fn regex(p: &str) -> Regex {
    static CACHE: OnceLock<Mutex<HashMap<String, Regex>>> = OnceLock::new();
    let mut cache = CACHE.get_or_init(Default::default).lock().unwrap();
    cache.entry(p.to_string()).or_insert_with(|| Regex::new(p).unwrap()).clone()
}

fn value_matches(m: &ValueMatcher, v: &AnnotationValue) -> bool {
    match m {
        ValueMatcher::Equals { lexical, lang } => v.lexical == *lexical && (lang.is_none() || v.lang == *lang),
        ValueMatcher::Regex(p) => regex(p).is_match(&v.lexical),
        ValueMatcher::NumericRange { min, max, min_inclusive, max_inclusive } => match plain_decimal(v.lexical.trim()) {
            None => false,
            Some(x) => (if *min_inclusive { x >= *min } else { x > *min }) && (if *max_inclusive { x <= *max } else { x < *max }),
        },
        ValueMatcher::AnyValue => true,
    }
}

fn same_text(a: &AnnotationValue, b: &AnnotationValue) -> bool {
    a.lexical == b.lexical && a.lang == b.lang
}

/// Direct recursive interpretation of `c` for entity `e`.
pub fn criteria_match(f: &Facts, c: &Criteria, e: &Iri) -> bool {
    let v = vocab();
    match c {
        Criteria::And(items) => items.iter().all(|c| criteria_match(f, c, e)),
        Criteria::Or(items) => items.iter().any(|c| criteria_match(f, c, e)),
        Criteria::Not(inner) => !criteria_match(f, inner, e),
        Criteria::HasAnnotation { property, value } => f.values(e, property).any(|x| value_matches(value, x)),
        Criteria::MissingAnnotation { property, lang } => {
            !f.values(e, property).any(|x| lang.is_none() || x.lang == *lang)
        }
        Criteria::IsDescendantOf(a) => f.descendant_of(a, e),
        Criteria::IsDeprecated => f.deprecated(e),
        Criteria::NonUniqueLabel(lang) => {
            !f.deprecated(e)
                && f.declared.iter().any(|other| {
                    other != e
                        && !f.deprecated(other)
                        && f.values(e, &v.label).any(|a| {
                            a.lang.as_ref() == Some(lang)
                                && f.values(other, &v.label).any(|b| b.lang.as_ref() == Some(lang) && b.lexical == a.lexical)
                        })
                })
        }
        Criteria::AnnotationOverlap { a, b } => f.values(e, a).any(|x| f.values(e, b).any(|y| same_text(x, y))),
    }
}

/// Per-entity scan over all declared classes: manual tags plus every
/// enabled rule that matches.
pub fn brute_force_assignments(tax: &Taxonomy, rules: &[TagRule], manual: &Assignments) -> Assignments {
    let f = Facts::of(tax);
    let mut out = Assignments::new();
    for e in &f.declared {
        let mut tags: BTreeSet<TagId> = manual.get(e).cloned().unwrap_or_default();
        for r in rules {
            if r.enabled && criteria_match(&f, &r.criteria, e) {
                tags.insert(r.tag.clone());
            }
        }
        if !tags.is_empty() {
            out.insert(e.clone(), tags);
        }
    }
    out
}

/// Entities sharing a label (lexical + `lang`) with another entity, both
/// non-deprecated, by comparing every pair.
pub fn non_unique_label_all_pairs(tax: &Taxonomy, lang: &topiary_core::LanguageTag) -> BTreeSet<Iri> {
    let f = Facts::of(tax);
    let live: Vec<&Iri> = f.declared.iter().filter(|e| !f.deprecated(e)).collect();
    let labels = |e: &Iri| -> Vec<String> {
        f.values(e, &vocab().label).filter(|l| l.lang.as_ref() == Some(lang)).map(|l| l.lexical.clone()).collect()
    };
    let mut out = BTreeSet::new();
    for i in 0..live.len() {
        for j in 0..live.len() {
            if i != j && labels(live[i]).iter().any(|a| labels(live[j]).contains(a)) {
                out.insert(live[i].clone());
            }
        }
    }
    out
}

/// Entities where some value of `a` equals some value of `b`, comparing all
/// value pairs.
pub fn overlap_all_pairs(tax: &Taxonomy, a: &Iri, b: &Iri) -> BTreeSet<Iri> {
    let f = Facts::of(tax);
    f.declared.iter().filter(|e| f.values(e, a).any(|x| f.values(e, b).any(|y| same_text(x, y)))).cloned().collect()
}

/// (ancestorId, descendantId, distance) for every pair connected through the
/// exported parent relation, found by BFS from each row.
pub fn closure_bfs(bundle: &ExportBundle) -> BTreeSet<(u64, u64, u32)> {
    let mut children: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for r in &bundle.interests {
        if let Some(p) = r.parent_id {
            children.entry(p).or_default().push(r.id);
        }
    }
    let mut out = BTreeSet::new();
    for r in &bundle.interests {
        let mut queue = VecDeque::from([(r.id, 0u32)]);
        while let Some((cur, d)) = queue.pop_front() {
            for &c in children.get(&cur).into_iter().flatten() {
                out.insert((r.id, c, d + 1));
                queue.push_back((c, d + 1));
            }
        }
    }
    out
}

/// Unranked search result set: declared, non-root classes with a value of a
/// selected property containing `text` case-insensitively.
pub fn search_scan(tax: &Taxonomy, text: &str, properties: &[&Iri], include_deprecated: bool) -> BTreeSet<Iri> {
    let needle = text.trim().to_lowercase();
    let mut out = BTreeSet::new();
    for axiom in tax.axioms() {
        if let Axiom::Annotation(a) = axiom {
            if properties.contains(&&a.property) && a.value.lexical.to_lowercase().contains(&needle) {
                out.insert(a.subject.clone());
            }
        }
    }
    let f = Facts::of(tax);
    out.retain(|e| f.declared.contains(e) && e != tax.root() && (include_deprecated || !f.deprecated(e)));
    out
}

/// Reference display-name choice: an exact tag match for any preferred
/// language in order, else a primary-subtag match in order, else `None`
/// (IRI fallback). Within one language the lexically smallest label wins.
pub fn resolve_label(labels: &[(&str, &str)], prefs: &[&str]) -> Option<String> {
    let primary = |t: &str| t.split('-').next().unwrap_or(t).to_ascii_lowercase();
    let smallest = |pred: &dyn Fn(&str) -> bool| labels.iter().filter(|(_, l)| pred(l)).map(|(t, _)| t.to_string()).min();
    for p in prefs {
        if let Some(t) = smallest(&|l| l.eq_ignore_ascii_case(p)) {
            return Some(t);
        }
    }
    for p in prefs {
        if let Some(t) = smallest(&|l| primary(l) == primary(p)) {
            return Some(t);
        }
    }
    None
}
