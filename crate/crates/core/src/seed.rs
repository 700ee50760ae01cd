//! Import of the legacy three-level spreadsheet (`level1,level2,level3`).

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::iri::{Iri, LanguageTag};
use crate::model::{AnnotationValue, AtomicChange, Axiom, Taxonomy};
use crate::vocab::vocab;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeedError {
    #[error("the sheet has no rows")]
    EmptySheet,
    #[error("invalid row {0}: {1}")]
    InvalidRow(usize, String),
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeedRow {
    pub level1: String,
    pub level2: Option<String>,
    pub level3: Option<String>,
}

impl SeedRow {
    pub fn new(level1: &str, level2: &str, level3: &str) -> Self {
        let opt = |s: &str| {
            let t = s.trim();
            (!t.is_empty()).then(|| t.to_string())
        };
        SeedRow { level1: level1.trim().to_string(), level2: opt(level2), level3: opt(level3) }
    }

    fn path(&self) -> Vec<&str> {
        std::iter::once(self.level1.as_str())
            .chain(self.level2.as_deref())
            .chain(self.level3.as_deref())
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeedSheet {
    pub rows: Vec<SeedRow>,
}

impl SeedSheet {
    /// Reads a comma-separated sheet whose first row is the header
    /// `level1,level2,level3`. Missing trailing cells count as empty.
    pub fn from_csv(text: &str) -> Result<Self, SeedError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| SeedError::Csv(e.to_string()))?.clone();
        let expected = ["level1", "level2", "level3"];
        if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h.trim() != e) {
            return Err(SeedError::Csv(format!("expected header level1,level2,level3, found {headers:?}")));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| SeedError::Csv(e.to_string()))?;
            let cell = |i: usize| record.get(i).unwrap_or("");
            rows.push(SeedRow::new(cell(0), cell(1), cell(2)));
        }
        Ok(SeedSheet { rows })
    }

    pub fn validate(&self) -> Result<(), SeedError> {
        if self.rows.is_empty() {
            return Err(SeedError::EmptySheet);
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.level1.is_empty() {
                return Err(SeedError::InvalidRow(i, "level1 is empty".into()));
            }
            if row.level3.is_some() && row.level2.is_none() {
                return Err(SeedError::InvalidRow(i, "level3 without level2".into()));
            }
        }
        Ok(())
    }
}

/// Lowercase, spaces to underscores, everything else non-alphanumeric dropped.
pub fn slugify(label: &str) -> String {
    let slug: String = label
        .trim()
        .chars()
        .flat_map(char::to_lowercase)
        .filter_map(|c| match c {
            c if c.is_whitespace() => Some('_'),
            c if c.is_alphanumeric() || c == '_' => Some(c),
            _ => None,
        })
        .collect();
    if slug.is_empty() {
        "interest".to_string()
    } else {
        slug
    }
}

/// Mints an unused IRI under `namespace` for `label`, appending `_2`, `_3`,
/// ... on collision.
pub fn mint_iri(namespace: &str, label: &str, taken: &dyn Fn(&Iri) -> bool) -> Iri {
    let slug = slugify(label);
    let mut n = 1;
    loop {
        let candidate = if n == 1 { format!("{namespace}{slug}") } else { format!("{namespace}{slug}_{n}") };
        let iri = Iri::parse(&candidate).expect("namespace is an absolute IRI");
        if !taken(&iri) {
            return iri;
        }
        n += 1;
    }
}

/// Change list creating the sheet's hierarchy under the root of an empty
/// taxonomy rooted at `root`.
pub fn import_seed(sheet: &SeedSheet, root: &Iri, lang: &LanguageTag) -> Result<Vec<AtomicChange>, SeedError> {
    import_seed_into(&Taxonomy::new(root.clone()), sheet, lang)
}

/// Change list adding the sheet's paths to `tax`. Path nodes already present
/// (matched by label in `lang` among the parent's children) are reused, so
/// supplementary sheets extend an existing taxonomy.
pub fn import_seed_into(tax: &Taxonomy, sheet: &SeedSheet, lang: &LanguageTag) -> Result<Vec<AtomicChange>, SeedError> {
    sheet.validate()?;
    let v = vocab();
    let root = tax.root().clone();
    let namespace = root.namespace().to_string();
    let mut minted: HashSet<Iri> = HashSet::new();
    // (parent, name) -> class
    let mut nodes: BTreeMap<(Iri, String), Iri> = BTreeMap::new();
    let mut changes = Vec::new();

    for row in &sheet.rows {
        let mut parent = root.clone();
        for name in row.path() {
            let key = (parent.clone(), name.to_string());
            let class = if let Some(existing) = nodes.get(&key) {
                existing.clone()
            } else if let Some(existing) = tax.children(&parent).find(|c| {
                tax.labels(c).any(|l| l.lexical == name && l.lang.as_ref() == Some(lang))
            }) {
                nodes.insert(key, existing.clone());
                existing.clone()
            } else {
                let iri = mint_iri(&namespace, name, &|i| tax.is_declared(i) || minted.contains(i));
                minted.insert(iri.clone());
                changes.push(AtomicChange::add(Axiom::declaration(iri.clone())));
                changes.push(AtomicChange::add(Axiom::sub_class_of(iri.clone(), parent.clone())));
                changes.push(AtomicChange::add(Axiom::annotation(
                    v.label.clone(),
                    iri.clone(),
                    AnnotationValue::lang_string(name, lang.clone()),
                )));
                nodes.insert(key, iri.clone());
                iri
            };
            parent = class;
        }
    }
    Ok(changes)
}
