//! Browser demo: canonical formatting, lint and tag-rule preview over an
//! OFN document, running entirely client side.
//!
//! The plain functions return JSON strings so they can be tested natively;
//! the `wasm_bindgen` wrappers only translate errors.

use std::collections::BTreeSet;

use serde_json::json;
use topiary_core::lint::{lint_with, stats, LintOptions};
use topiary_core::multilang::{display_text, DisplayLanguageConfig};
use topiary_core::tags::{evaluate_all, Assignments, Criteria, TagRule};
use topiary_core::{parse_ofn, write_taxonomy, Iri, TagId, Taxonomy};
use wasm_bindgen::prelude::*;

fn load(ofn: &str) -> Result<Taxonomy, String> {
    let doc = parse_ofn(ofn).map_err(|e| e.to_string())?;
    doc.to_taxonomy(None).map_err(|e| e.to_string())
}

fn ontology_iri(tax: &Taxonomy) -> Iri {
    Iri::parse(tax.root().namespace().trim_end_matches(['/', '#'])).unwrap_or_else(|_| tax.root().clone())
}

/// Canonical serialization plus shape statistics:
/// `{"ofn": text, "stats": {...} | null, "treeErrors": n}`.
pub fn format_document(ofn: &str) -> Result<String, String> {
    let tax = load(ofn)?;
    let report = tax.validate_tree();
    let out = json!({
        "ofn": write_taxonomy(&tax, &ontology_iri(&tax)),
        "stats": stats(&tax).ok(),
        "treeErrors": report.violations.len(),
    });
    Ok(out.to_string())
}

/// Lint findings as a JSON array.
pub fn lint_document(ofn: &str, include_deprecated: bool) -> Result<String, String> {
    let tax = load(ofn)?;
    let findings = lint_with(&tax, LintOptions { include_deprecated });
    serde_json::to_string(&findings).map_err(|e| e.to_string())
}

/// Entities matched by `criteria_json` (a criteria tree), each with its
/// English display name.
pub fn preview_rule(ofn: &str, criteria_json: &str) -> Result<String, String> {
    let tax = load(ofn)?;
    let criteria: Criteria = serde_json::from_str(criteria_json).map_err(|e| format!("criteria: {e}"))?;
    let tag = TagId::new("preview");
    let rule = TagRule { tag: tag.clone(), enabled: true, criteria };
    let hits = evaluate_all(&tax, &[rule], &Assignments::new()).map_err(|e| e.to_string())?;
    let cfg = DisplayLanguageConfig::default();
    let matched: BTreeSet<&Iri> = hits.iter().filter(|(_, tags)| tags.contains(&tag)).map(|(e, _)| e).collect();
    let mut rows: Vec<_> = matched.into_iter().map(|e| (display_text(&tax, e, &cfg), e)).collect();
    rows.sort();
    let rows: Vec<_> = rows.into_iter().map(|(name, iri)| json!({ "iri": iri, "name": name })).collect();
    Ok(serde_json::Value::Array(rows).to_string())
}

#[wasm_bindgen(js_name = formatDocument)]
pub fn format_document_js(ofn: &str) -> Result<String, JsError> {
    format_document(ofn).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = lintDocument)]
pub fn lint_document_js(ofn: &str, include_deprecated: bool) -> Result<String, JsError> {
    lint_document(ofn, include_deprecated).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = previewRule)]
pub fn preview_rule_js(ofn: &str, criteria_json: &str) -> Result<String, JsError> {
    preview_rule(ofn, criteria_json).map_err(|e| JsError::new(&e))
}
