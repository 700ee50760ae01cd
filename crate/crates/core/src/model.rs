//! Axiom-level taxonomy model.
//!
//! A [`Taxonomy`] is a set of axioms (class declarations, `SubClassOf` edges
//! and annotation assertions) plus indexes derived from them. All mutation
//! goes through [`Taxonomy::apply`], which enforces the hierarchy invariants
//! for the configured [`HierarchyMode`].

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ChangeError, ModelError, UnknownEntity};
use crate::iri::{Iri, LanguageTag};
use crate::vocab::vocab;

/// A literal annotation value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AnnotationValue {
    pub lexical: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<LanguageTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datatype: Option<Iri>,
}

impl AnnotationValue {
    pub fn plain(lexical: impl Into<String>) -> Self {
        AnnotationValue { lexical: lexical.into(), lang: None, datatype: None }
    }

    pub fn lang_string(lexical: impl Into<String>, lang: LanguageTag) -> Self {
        AnnotationValue { lexical: lexical.into(), lang: Some(lang), datatype: None }
    }

    pub fn typed(lexical: impl Into<String>, datatype: Iri) -> Result<Self, ModelError> {
        let value = AnnotationValue { lexical: lexical.into(), lang: None, datatype: Some(datatype) };
        value.validate()?;
        Ok(value)
    }

    pub fn boolean(value: bool) -> Self {
        AnnotationValue {
            lexical: value.to_string(),
            lang: None,
            datatype: Some(vocab().xsd_boolean.clone()),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.lang.is_some() && self.datatype.is_some() {
            return Err(ModelError::LangWithDatatype);
        }
        if self.datatype.as_ref() == Some(&vocab().xsd_boolean)
            && self.lexical != "true"
            && self.lexical != "false"
        {
            return Err(ModelError::InvalidBoolean(self.lexical.clone()));
        }
        Ok(())
    }

    /// True for `"true"` regardless of datatype.
    pub fn is_true(&self) -> bool {
        self.lexical == "true"
    }

    /// Equality on lexical form and language only.
    pub fn same_text(&self, other: &AnnotationValue) -> bool {
        self.lexical == other.lexical && self.lang == other.lang
    }
}

impl fmt::Display for AnnotationValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.lexical)?;
        if let Some(lang) = &self.lang {
            write!(f, "@{lang}")?;
        }
        if let Some(dt) = &self.datatype {
            write!(f, "^^<{dt}>")?;
        }
        Ok(())
    }
}

/// `AnnotationAssertion(property subject value)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnnotationAssertion {
    pub property: Iri,
    pub subject: Iri,
    pub value: AnnotationValue,
}

/// One axiom of the supported subset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum Axiom {
    Declaration {
        class: Iri,
    },
    SubClassOf {
        sub: Iri,
        #[serde(rename = "super")]
        sup: Iri,
    },
    #[serde(rename = "annotationAssertion")]
    Annotation(AnnotationAssertion),
}

impl Axiom {
    pub fn declaration(class: Iri) -> Self {
        Axiom::Declaration { class }
    }

    pub fn sub_class_of(sub: Iri, sup: Iri) -> Self {
        Axiom::SubClassOf { sub, sup }
    }

    pub fn annotation(property: Iri, subject: Iri, value: AnnotationValue) -> Self {
        Axiom::Annotation(AnnotationAssertion { property, subject, value })
    }

    /// Rank used by the canonical order: declarations, then logical axioms,
    /// then annotations.
    pub fn kind_rank(&self) -> u8 {
        match self {
            Axiom::Declaration { .. } => 0,
            Axiom::SubClassOf { .. } => 1,
            Axiom::Annotation(_) => 2,
        }
    }

    /// The entity the axiom is about.
    pub fn subject(&self) -> &Iri {
        match self {
            Axiom::Declaration { class } => class,
            Axiom::SubClassOf { sub, .. } => sub,
            Axiom::Annotation(a) => &a.subject,
        }
    }

    /// Whether `iri` occurs as subject, superclass or annotation subject.
    pub fn mentions(&self, iri: &Iri) -> bool {
        match self {
            Axiom::Declaration { class } => class == iri,
            Axiom::SubClassOf { sub, sup } => sub == iri || sup == iri,
            Axiom::Annotation(a) => &a.subject == iri,
        }
    }

    /// Entity IRIs referenced by the axiom (property IRIs excluded).
    pub fn entities(&self) -> impl Iterator<Item = &Iri> {
        let (a, b) = match self {
            Axiom::Declaration { class } => (class, None),
            Axiom::SubClassOf { sub, sup } => (sub, Some(sup)),
            Axiom::Annotation(a) => (&a.subject, None),
        };
        std::iter::once(a).chain(b)
    }

    fn sort_key(&self) -> (u8, &str, &str, &str, Option<&LanguageTag>, Option<&Iri>) {
        match self {
            Axiom::Declaration { class } => (0, class.as_str(), "", "", None, None),
            Axiom::SubClassOf { sub, sup } => (1, sub.as_str(), sup.as_str(), "", None, None),
            Axiom::Annotation(a) => (
                2,
                a.subject.as_str(),
                a.property.as_str(),
                a.value.lexical.as_str(),
                a.value.lang.as_ref(),
                a.value.datatype.as_ref(),
            ),
        }
    }
}

/// Canonical order: (kind rank, subject IRI, property IRI, lexical value),
/// then language and datatype.
impl Ord for Axiom {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for Axiom {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axiom::Declaration { class } => write!(f, "Declaration(Class(<{class}>))"),
            Axiom::SubClassOf { sub, sup } => write!(f, "SubClassOf(<{sub}> <{sup}>)"),
            Axiom::Annotation(a) => {
                write!(f, "AnnotationAssertion(<{}> <{}> {})", a.property, a.subject, a.value)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChangeOp {
    Add,
    Remove,
}

/// Addition or removal of one axiom.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AtomicChange {
    pub op: ChangeOp,
    pub axiom: Axiom,
}

impl AtomicChange {
    pub fn add(axiom: Axiom) -> Self {
        AtomicChange { op: ChangeOp::Add, axiom }
    }

    pub fn remove(axiom: Axiom) -> Self {
        AtomicChange { op: ChangeOp::Remove, axiom }
    }

    pub fn inverse(&self) -> Self {
        let op = match self.op {
            ChangeOp::Add => ChangeOp::Remove,
            ChangeOp::Remove => ChangeOp::Add,
        };
        AtomicChange { op, axiom: self.axiom.clone() }
    }
}

impl fmt::Display for AtomicChange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.op {
            ChangeOp::Add => write!(f, "+ {}", self.axiom),
            ChangeOp::Remove => write!(f, "- {}", self.axiom),
        }
    }
}

/// Whether classes may have several parents.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HierarchyMode {
    #[default]
    Tree,
    Dag,
}

type LabelKey = (String, Option<LanguageTag>);

/// The axiom store with derived hierarchy and label indexes.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    root: Iri,
    mode: HierarchyMode,
    axioms: BTreeSet<Axiom>,
    declared: BTreeSet<Iri>,
    parents: HashMap<Iri, BTreeSet<Iri>>,
    children: HashMap<Iri, BTreeSet<Iri>>,
    annotations: HashMap<Iri, BTreeSet<(Iri, AnnotationValue)>>,
    labels: HashMap<LabelKey, BTreeSet<Iri>>,
    deprecated: HashSet<Iri>,
    // non-declaration axioms mentioning each entity
    references: HashMap<Iri, usize>,
}

impl PartialEq for Taxonomy {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root && self.mode == other.mode && self.axioms == other.axioms
    }
}

impl Eq for Taxonomy {}

impl Taxonomy {
    /// A taxonomy containing only the declaration of `root`.
    pub fn new(root: Iri) -> Self {
        Self::with_mode(root, HierarchyMode::Tree)
    }

    pub fn with_mode(root: Iri, mode: HierarchyMode) -> Self {
        let mut tax = Taxonomy {
            root: root.clone(),
            mode,
            axioms: BTreeSet::new(),
            declared: BTreeSet::new(),
            parents: HashMap::new(),
            children: HashMap::new(),
            annotations: HashMap::new(),
            labels: HashMap::new(),
            deprecated: HashSet::new(),
            references: HashMap::new(),
        };
        tax.index_insert(Axiom::declaration(root));
        tax
    }

    /// Builds a taxonomy from an arbitrary axiom set without enforcing the
    /// hierarchy invariants; use [`Taxonomy::validate_tree`] to inspect it.
    pub fn from_axioms_unchecked(root: Iri, mode: HierarchyMode, axioms: impl IntoIterator<Item = Axiom>) -> Self {
        let mut tax = Self::with_mode(root, mode);
        for axiom in axioms {
            if !tax.axioms.contains(&axiom) {
                tax.index_insert(axiom);
            }
        }
        tax
    }

    /// Applies `changes` in order starting from the root-only taxonomy.
    pub fn from_changes<'a>(root: Iri, changes: impl IntoIterator<Item = &'a AtomicChange>) -> Result<Self, ChangeError> {
        let mut tax = Self::new(root);
        for change in changes {
            tax.apply(change)?;
        }
        Ok(tax)
    }

    pub fn root(&self) -> &Iri {
        &self.root
    }

    pub fn mode(&self) -> HierarchyMode {
        self.mode
    }

    pub fn axioms(&self) -> &BTreeSet<Axiom> {
        &self.axioms
    }

    pub fn contains(&self, axiom: &Axiom) -> bool {
        self.axioms.contains(axiom)
    }

    pub fn is_declared(&self, iri: &Iri) -> bool {
        self.declared.contains(iri)
    }

    /// All declared classes in IRI order, root included.
    pub fn classes(&self) -> impl Iterator<Item = &Iri> {
        self.declared.iter()
    }

    pub fn class_count(&self) -> usize {
        self.declared.len()
    }

    fn require(&self, iri: &Iri) -> Result<(), UnknownEntity> {
        if self.is_declared(iri) {
            Ok(())
        } else {
            Err(UnknownEntity(iri.clone()))
        }
    }

    /// Pure variant of [`Taxonomy::apply`]: returns the changed taxonomy and
    /// leaves `self` untouched.
    pub fn apply_atomic(&self, change: &AtomicChange) -> Result<Taxonomy, ChangeError> {
        let mut next = self.clone();
        next.apply(change)?;
        Ok(next)
    }

    /// Applies one change in place. On error nothing is modified.
    pub fn apply(&mut self, change: &AtomicChange) -> Result<(), ChangeError> {
        self.check(change)?;
        match change.op {
            ChangeOp::Add => self.index_insert(change.axiom.clone()),
            ChangeOp::Remove => self.index_remove(&change.axiom),
        }
        Ok(())
    }

    /// Applies all changes or none of them.
    pub fn apply_all(&mut self, changes: &[AtomicChange]) -> Result<(), (usize, ChangeError)> {
        for (i, change) in changes.iter().enumerate() {
            if let Err(err) = self.apply(change) {
                for done in changes[..i].iter().rev() {
                    self.apply(&done.inverse()).expect("inverse of an applied change is applicable");
                }
                return Err((i, err));
            }
        }
        Ok(())
    }

    /// Checks whether `change` is applicable without applying it.
    pub fn check(&self, change: &AtomicChange) -> Result<(), ChangeError> {
        let axiom = &change.axiom;
        match change.op {
            ChangeOp::Add => {
                if self.axioms.contains(axiom) {
                    return Err(ChangeError::AddDuplicateAxiom(axiom.clone()));
                }
                match axiom {
                    Axiom::Declaration { .. } => {}
                    Axiom::SubClassOf { sub, sup } => {
                        for iri in [sub, sup] {
                            if !self.is_declared(iri) {
                                return Err(ChangeError::UndeclaredEntity(iri.clone()));
                            }
                        }
                        if sub == &self.root {
                            return Err(ChangeError::RootCannotHaveParent);
                        }
                        if sub == sup || self.is_ancestor(sub, sup) {
                            return Err(ChangeError::WouldCreateCycle(axiom.clone()));
                        }
                        if self.mode == HierarchyMode::Tree
                            && self.parents.get(sub).is_some_and(|p| !p.is_empty())
                        {
                            return Err(ChangeError::WouldCreateSecondParent(axiom.clone()));
                        }
                    }
                    Axiom::Annotation(a) => {
                        if !self.is_declared(&a.subject) {
                            return Err(ChangeError::UndeclaredEntity(a.subject.clone()));
                        }
                    }
                }
            }
            ChangeOp::Remove => {
                if !self.axioms.contains(axiom) {
                    return Err(ChangeError::RemoveMissingAxiom(axiom.clone()));
                }
                if let Axiom::Declaration { class } = axiom {
                    if class == &self.root {
                        return Err(ChangeError::CannotRemoveRoot);
                    }
                    if self.references.get(class).copied().unwrap_or(0) > 0 {
                        return Err(ChangeError::EntityStillReferenced(class.clone()));
                    }
                }
            }
        }
        Ok(())
    }

    /// True when `ancestor` is a strict ancestor of `iri`.
    pub fn is_ancestor(&self, ancestor: &Iri, iri: &Iri) -> bool {
        let mut seen = HashSet::new();
        let mut stack: Vec<&Iri> = vec![iri];
        while let Some(current) = stack.pop() {
            if let Some(ps) = self.parents.get(current) {
                for p in ps {
                    if p == ancestor {
                        return true;
                    }
                    if seen.insert(p) {
                        stack.push(p);
                    }
                }
            }
        }
        false
    }

    fn bump_references(&mut self, axiom: &Axiom, delta: isize) {
        if matches!(axiom, Axiom::Declaration { .. }) {
            return;
        }
        for iri in axiom.entities() {
            let count = self.references.entry(iri.clone()).or_insert(0);
            *count = count.checked_add_signed(delta).expect("reference count underflow");
            if *count == 0 {
                self.references.remove(iri);
            }
        }
    }

    fn index_insert(&mut self, axiom: Axiom) {
        self.bump_references(&axiom, 1);
        match &axiom {
            Axiom::Declaration { class } => {
                self.declared.insert(class.clone());
            }
            Axiom::SubClassOf { sub, sup } => {
                self.parents.entry(sub.clone()).or_default().insert(sup.clone());
                self.children.entry(sup.clone()).or_default().insert(sub.clone());
            }
            Axiom::Annotation(a) => {
                self.annotations
                    .entry(a.subject.clone())
                    .or_default()
                    .insert((a.property.clone(), a.value.clone()));
                let v = vocab();
                if a.property == v.label {
                    self.labels
                        .entry((a.value.lexical.clone(), a.value.lang.clone()))
                        .or_default()
                        .insert(a.subject.clone());
                } else if a.property == v.deprecated && a.value.is_true() {
                    self.deprecated.insert(a.subject.clone());
                }
            }
        }
        self.axioms.insert(axiom);
    }

    fn index_remove(&mut self, axiom: &Axiom) {
        if !self.axioms.remove(axiom) {
            return;
        }
        self.bump_references(axiom, -1);
        match axiom {
            Axiom::Declaration { class } => {
                self.declared.remove(class);
            }
            Axiom::SubClassOf { sub, sup } => {
                remove_from(&mut self.parents, sub, sup);
                remove_from(&mut self.children, sup, sub);
            }
            Axiom::Annotation(a) => {
                remove_from(&mut self.annotations, &a.subject, &(a.property.clone(), a.value.clone()));
                let v = vocab();
                if a.property == v.label {
                    remove_from(&mut self.labels, &(a.value.lexical.clone(), a.value.lang.clone()), &a.subject);
                } else if a.property == v.deprecated && a.value.is_true() {
                    self.deprecated.remove(&a.subject);
                }
            }
        }
    }

    /// The unique superclass of `c` in tree mode; `None` for the root or a
    /// detached class. In DAG mode the smallest parent IRI is returned.
    pub fn parent_of(&self, c: &Iri) -> Result<Option<&Iri>, UnknownEntity> {
        self.require(c)?;
        Ok(self.parents.get(c).and_then(|ps| ps.iter().next()))
    }

    pub fn parents(&self, c: &Iri) -> impl Iterator<Item = &Iri> {
        self.parents.get(c).into_iter().flatten()
    }

    /// Direct subclasses in IRI order, deprecated ones included.
    pub fn children(&self, c: &Iri) -> impl Iterator<Item = &Iri> {
        self.children.get(c).into_iter().flatten()
    }

    pub fn child_count(&self, c: &Iri) -> usize {
        self.children.get(c).map_or(0, BTreeSet::len)
    }

    /// Transitive closure of the children relation, excluding `c`.
    pub fn descendants(&self, c: &Iri) -> Result<BTreeSet<Iri>, UnknownEntity> {
        self.require(c)?;
        let mut out = BTreeSet::new();
        let mut queue: VecDeque<&Iri> = VecDeque::from([c]);
        while let Some(current) = queue.pop_front() {
            for child in self.children(current) {
                if child != c && out.insert(child.clone()) {
                    queue.push_back(child);
                }
            }
        }
        Ok(out)
    }

    /// Strict ancestors, nearest first (tree mode order follows the parent chain).
    pub fn ancestors(&self, c: &Iri) -> Vec<Iri> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        let mut queue: VecDeque<&Iri> = VecDeque::from([c]);
        while let Some(current) = queue.pop_front() {
            for p in self.parents(current) {
                if p != c && seen.insert(p) {
                    out.push(p.clone());
                    queue.push_back(p);
                }
            }
        }
        out
    }

    /// Distance from the root along the first-parent chain (root = 0).
    /// `None` when the chain does not reach the root.
    pub fn depth(&self, c: &Iri) -> Option<usize> {
        let mut depth = 0;
        let mut current = c;
        let limit = self.declared.len();
        while current != &self.root {
            current = self.parents.get(current)?.iter().next()?;
            depth += 1;
            if depth > limit {
                return None;
            }
        }
        Some(depth)
    }

    /// All `(property, value)` pairs asserted on `c`.
    pub fn annotations(&self, c: &Iri) -> impl Iterator<Item = (&Iri, &AnnotationValue)> {
        self.annotations.get(c).into_iter().flatten().map(|(p, v)| (p, v))
    }

    pub fn annotation_values<'a>(&'a self, c: &Iri, property: &'a Iri) -> impl Iterator<Item = &'a AnnotationValue> + 'a {
        self.annotations(c).filter(move |(p, _)| *p == property).map(|(_, v)| v)
    }

    pub fn annotation_count(&self, c: &Iri) -> usize {
        self.annotations.get(c).map_or(0, BTreeSet::len)
    }

    pub fn has_annotation(&self, c: &Iri, property: &Iri, value: &AnnotationValue) -> bool {
        self.annotations
            .get(c)
            .is_some_and(|set| set.contains(&(property.clone(), value.clone())))
    }

    /// `rdfs:label` values of `c`.
    pub fn labels<'a>(&'a self, c: &Iri) -> impl Iterator<Item = &'a AnnotationValue> + 'a {
        self.annotation_values(c, &vocab().label)
    }

    /// Entities carrying the label `lexical` in language `lang`.
    pub fn entities_with_label(&self, lexical: &str, lang: Option<&LanguageTag>) -> impl Iterator<Item = &Iri> {
        self.labels
            .get(&(lexical.to_string(), lang.cloned()))
            .into_iter()
            .flatten()
    }

    pub fn is_deprecated(&self, c: &Iri) -> bool {
        self.deprecated.contains(c)
    }

    pub fn deprecated_count(&self) -> usize {
        self.deprecated.len()
    }

    /// Flags a boolean-valued property (`noAds`, `isHumanReviewed`, ...).
    pub fn flag(&self, c: &Iri, property: &Iri) -> bool {
        self.annotation_values(c, property).any(AnnotationValue::is_true)
    }

    /// Lists hierarchy violations; empty iff the taxonomy is a single-rooted
    /// tree (or DAG) whose references are all declared.
    pub fn validate_tree(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if !self.is_declared(&self.root) {
            violations.push(Violation::MissingRoot(self.root.clone()));
        }
        let mut undeclared = BTreeSet::new();
        for axiom in &self.axioms {
            for iri in axiom.entities() {
                if !self.is_declared(iri) {
                    undeclared.insert(iri.clone());
                }
            }
        }
        violations.extend(undeclared.into_iter().map(Violation::UndeclaredReference));

        if self.parents.get(&self.root).is_some_and(|p| !p.is_empty()) {
            violations.push(Violation::RootHasParent);
        }
        let extra_roots: Vec<Iri> = self
            .declared
            .iter()
            .filter(|c| *c != &self.root && !self.is_deprecated(c))
            .filter(|c| self.parents.get(*c).is_none_or(BTreeSet::is_empty))
            .cloned()
            .collect();
        if !extra_roots.is_empty() {
            violations.push(Violation::MultipleRoots(extra_roots));
        }
        if self.mode == HierarchyMode::Tree {
            let mut multi: Vec<_> = self
                .parents
                .iter()
                .filter(|(_, ps)| ps.len() > 1)
                .map(|(c, ps)| Violation::MultiParent { class: c.clone(), parents: ps.iter().cloned().collect() })
                .collect();
            multi.sort();
            violations.extend(multi);
        }
        violations.extend(self.find_cycles().into_iter().map(Violation::Cycle));
        ValidationReport { violations }
    }

    // Iterative DFS over parent edges; returns one member list per cycle found.
    fn find_cycles(&self) -> Vec<Vec<Iri>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Color {
            Grey,
            Black,
        }
        let mut color: HashMap<&Iri, Color> = HashMap::new();
        let mut cycles = Vec::new();
        let mut nodes: Vec<&Iri> = self.parents.keys().collect();
        nodes.sort();
        for start in nodes {
            if color.contains_key(start) {
                continue;
            }
            let mut path: Vec<&Iri> = vec![start];
            let mut iters: Vec<std::collections::btree_set::Iter<'_, Iri>> =
                vec![self.parents.get(start).map(|s| s.iter()).unwrap_or_default()];
            color.insert(start, Color::Grey);
            while let Some(it) = iters.last_mut() {
                match it.next() {
                    Some(next) => match color.get(next) {
                        None => {
                            color.insert(next, Color::Grey);
                            path.push(next);
                            iters.push(self.parents.get(next).map(|s| s.iter()).unwrap_or_default());
                        }
                        Some(Color::Grey) => {
                            let from = path.iter().position(|p| *p == next).unwrap_or(0);
                            let mut members: Vec<Iri> = path[from..].iter().map(|i| (*i).clone()).collect();
                            members.sort();
                            cycles.push(members);
                        }
                        Some(Color::Black) => {}
                    },
                    None => {
                        iters.pop();
                        if let Some(done) = path.pop() {
                            color.insert(done, Color::Black);
                        }
                    }
                }
            }
        }
        cycles.sort();
        cycles.dedup();
        cycles
    }
}

fn remove_from<K, V>(map: &mut HashMap<K, BTreeSet<V>>, key: &K, value: &V)
where
    K: std::hash::Hash + Eq,
    V: Ord,
{
    if let Some(set) = map.get_mut(key) {
        set.remove(value);
        if set.is_empty() {
            map.remove(key);
        }
    }
}

/// A single hierarchy problem.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Violation {
    MissingRoot(Iri),
    UndeclaredReference(Iri),
    RootHasParent,
    /// Non-deprecated classes other than the root that have no parent.
    MultipleRoots(Vec<Iri>),
    MultiParent { class: Iri, parents: Vec<Iri> },
    Cycle(Vec<Iri>),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}
