//! Deep links and compact IRIs.

use std::collections::BTreeMap;

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};

use crate::ids::ProjectId;
use crate::iri::Iri;
use crate::vocab::standard_prefixes;

/// Everything except RFC 3986 unreserved characters is escaped, so `/`, `:`
/// and `#` never leak into the path.
const SEGMENT: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'.').remove(b'_').remove(b'~');

pub fn encode_segment(s: &str) -> String {
    utf8_percent_encode(s, SEGMENT).to_string()
}

/// `/p/{project}/e/{percent-encoded IRI}`. Depends only on the IRI, so it
/// survives moves and merges.
pub fn deep_link(project: &ProjectId, e: &Iri) -> String {
    format!("/p/{}/e/{}", encode_segment(project.as_str()), encode_segment(e.as_str()))
}

/// Inverse of [`deep_link`].
pub fn parse_deep_link(path: &str) -> Option<(ProjectId, Iri)> {
    let rest = path.strip_prefix("/p/")?;
    let (project, encoded) = rest.split_once("/e/")?;
    let project = percent_decode_str(project).decode_utf8().ok()?;
    let iri = percent_decode_str(encoded).decode_utf8().ok()?;
    Some((ProjectId::new(project.into_owned()), Iri::parse(&iri).ok()?))
}

/// Prefix table of a project: the standard prefixes plus the empty prefix
/// bound to the root namespace.
pub fn project_prefixes(root: &Iri) -> BTreeMap<String, String> {
    let mut map: BTreeMap<String, String> = standard_prefixes().iter().map(|(p, ns)| (p.to_string(), ns.to_string())).collect();
    map.insert(String::new(), root.namespace().to_string());
    map
}

/// Resolves `<full-iri>`, a bare absolute IRI, or `prefix:local`.
pub fn resolve_reference(prefixes: &BTreeMap<String, String>, s: &str) -> Option<Iri> {
    let s = s.trim();
    if let Some(inner) = s.strip_prefix('<').and_then(|r| r.strip_suffix('>')) {
        return Iri::parse(inner).ok();
    }
    if let Some((prefix, local)) = s.split_once(':') {
        if let Some(ns) = prefixes.get(prefix) {
            if !local.starts_with("//") {
                return Iri::parse(&format!("{ns}{local}")).ok();
            }
        }
    }
    if s.contains("://") {
        return Iri::parse(s).ok();
    }
    None
}
