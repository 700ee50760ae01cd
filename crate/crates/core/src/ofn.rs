//! Reader and writer for the OWL Functional-Style Syntax subset used as the
//! exchange format.
//!
//! ```text
//! Prefix(p:=<iri>)*
//! Ontology(<iri>
//!   Declaration(Class(ref))
//!   SubClassOf(ref ref)
//!   AnnotationAssertion(ref ref literal)
//! )
//! ```
//!
//! Anything outside the subset is rejected with
//! [`OfnError::UnsupportedConstruct`]. The writer is canonical: axioms are
//! sorted and IRIs abbreviated deterministically, so equal axiom sets give
//! byte-identical output.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::iri::{Iri, LanguageTag};
use crate::model::{AnnotationValue, Axiom, HierarchyMode, Taxonomy};
use crate::vocab::{self, standard_prefixes};

/// 1-based line and column (in characters).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Position {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OfnError {
    #[error("syntax error at {pos}: expected {expected}, found {found}")]
    SyntaxError { pos: Position, expected: String, found: String },
    #[error("unsupported construct {construct} at {pos}")]
    UnsupportedConstruct { construct: String, pos: Position },
    #[error("undeclared prefix {prefix:?} at {pos}")]
    UndeclaredPrefix { prefix: String, pos: Position },
    #[error("invalid value at {pos}: {message}")]
    InvalidValue { pos: Position, message: String },
    #[error("cannot determine the root class: {0}")]
    AmbiguousRoot(String),
}

/// A parsed or to-be-written ontology document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OfnDocument {
    /// Prefix name (without the colon) to namespace IRI.
    pub prefixes: BTreeMap<String, String>,
    pub ontology_iri: Iri,
    pub axioms: Vec<Axiom>,
    /// Source position of each axiom; empty for documents not read from text.
    pub positions: Vec<Position>,
}

impl OfnDocument {
    pub fn new(ontology_iri: Iri) -> Self {
        OfnDocument { prefixes: BTreeMap::new(), ontology_iri, axioms: Vec::new(), positions: Vec::new() }
    }

    /// Document for `tax` with the standard prefixes plus the empty prefix
    /// bound to the root's namespace.
    pub fn from_taxonomy(tax: &Taxonomy, ontology_iri: Iri) -> Self {
        let mut doc = OfnDocument::new(ontology_iri);
        for (name, ns) in standard_prefixes() {
            doc.prefixes.insert(name.to_string(), ns.to_string());
        }
        doc.prefixes.insert(String::new(), tax.root().namespace().to_string());
        doc.axioms = tax.axioms().iter().cloned().collect();
        doc
    }

    /// Builds a taxonomy from the document's axioms. Without an explicit
    /// root, the single non-deprecated declared class lacking a superclass is
    /// used.
    pub fn to_taxonomy(&self, root: Option<&Iri>) -> Result<Taxonomy, OfnError> {
        let root = match root {
            Some(r) => r.clone(),
            None => infer_root(&self.axioms)?,
        };
        Ok(Taxonomy::from_axioms_unchecked(root, HierarchyMode::Tree, self.axioms.iter().cloned()))
    }
}

fn infer_root(axioms: &[Axiom]) -> Result<Iri, OfnError> {
    use std::collections::BTreeSet;
    let v = vocab::vocab();
    let mut declared = BTreeSet::new();
    let mut has_parent = BTreeSet::new();
    let mut deprecated = BTreeSet::new();
    for axiom in axioms {
        match axiom {
            Axiom::Declaration { class } => {
                declared.insert(class);
            }
            Axiom::SubClassOf { sub, .. } => {
                has_parent.insert(sub);
            }
            Axiom::Annotation(a) if a.property == v.deprecated && a.value.is_true() => {
                deprecated.insert(&a.subject);
            }
            Axiom::Annotation(_) => {}
        }
    }
    let candidates: Vec<&Iri> = declared
        .into_iter()
        .filter(|c| !has_parent.contains(c) && !deprecated.contains(c))
        .collect();
    match candidates.as_slice() {
        [one] => Ok((*one).clone()),
        [] => Err(OfnError::AmbiguousRoot("no parentless class".into())),
        many => Err(OfnError::AmbiguousRoot(format!("{} parentless classes", many.len()))),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Equals,
    DoubleCaret,
    FullIri(String),
    Name(String),
    Literal(String),
    LangTag(String),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Open => f.write_str("'('"),
            Tok::Close => f.write_str("')'"),
            Tok::Equals => f.write_str("'='"),
            Tok::DoubleCaret => f.write_str("'^^'"),
            Tok::FullIri(s) => write!(f, "<{s}>"),
            Tok::Name(s) => write!(f, "{s:?}"),
            Tok::Literal(s) => write!(f, "literal {s:?}"),
            Tok::LangTag(s) => write!(f, "@{s}"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Position,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer { chars: text.chars().peekable(), pos: Position { line: 1, col: 1 } }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(&c) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn syntax(&self, pos: Position, expected: &str, found: impl Into<String>) -> OfnError {
        OfnError::SyntaxError { pos, expected: expected.to_string(), found: found.into() }
    }

    fn next_token(&mut self) -> Result<(Tok, Position), OfnError> {
        self.skip_trivia();
        let start = self.pos;
        let Some(&c) = self.chars.peek() else {
            return Ok((Tok::Eof, start));
        };
        let tok = match c {
            '(' => {
                self.bump();
                Tok::Open
            }
            ')' => {
                self.bump();
                Tok::Close
            }
            '=' => {
                self.bump();
                Tok::Equals
            }
            '^' => {
                self.bump();
                if self.bump() != Some('^') {
                    return Err(self.syntax(start, "'^^'", "'^'"));
                }
                Tok::DoubleCaret
            }
            '<' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        Some('>') => break,
                        Some(c) if c.is_whitespace() => return Err(self.syntax(start, "'>' closing IRI", "whitespace")),
                        Some(c) => s.push(c),
                        None => return Err(self.syntax(start, "'>' closing IRI", "end of input")),
                    }
                }
                Tok::FullIri(s)
            }
            '"' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some(e @ ('"' | '\\')) => s.push(e),
                            other => {
                                return Err(self.syntax(
                                    self.pos,
                                    "escaped '\"' or '\\'",
                                    other.map_or("end of input".to_string(), |c| format!("{c:?}")),
                                ))
                            }
                        },
                        Some(c) => s.push(c),
                        None => return Err(self.syntax(start, "closing '\"'", "end of input")),
                    }
                }
                Tok::Literal(s)
            }
            '@' => {
                self.bump();
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '-' {
                        s.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Tok::LangTag(s)
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | '=' | '<' | '>' | '"' | '@' | '^') {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                if s.is_empty() {
                    return Err(self.syntax(start, "token", format!("{c:?}")));
                }
                Tok::Name(s)
            }
        };
        Ok((tok, start))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: Option<(Tok, Position)>,
    prefixes: BTreeMap<String, String>,
}

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Result<&(Tok, Position), OfnError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lexer.next_token()?);
        }
        Ok(self.peeked.as_ref().expect("peeked"))
    }

    fn next(&mut self) -> Result<(Tok, Position), OfnError> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => self.lexer.next_token(),
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Position, OfnError> {
        let (tok, pos) = self.next()?;
        if tok == want {
            Ok(pos)
        } else {
            Err(OfnError::SyntaxError { pos, expected: what.to_string(), found: tok.to_string() })
        }
    }

    fn iri_ref(&mut self) -> Result<Iri, OfnError> {
        let (tok, pos) = self.next()?;
        match tok {
            Tok::FullIri(s) => Iri::parse(&s).map_err(|e| OfnError::InvalidValue { pos, message: e.to_string() }),
            Tok::Name(name) => self.expand(&name, pos),
            other => Err(OfnError::SyntaxError { pos, expected: "IRI".into(), found: other.to_string() }),
        }
    }

    fn expand(&self, name: &str, pos: Position) -> Result<Iri, OfnError> {
        if name.starts_with("_:") {
            return Err(OfnError::UnsupportedConstruct { construct: "anonymous individual".into(), pos });
        }
        let Some(colon) = name.find(':') else {
            return Err(OfnError::SyntaxError { pos, expected: "prefixed name".into(), found: format!("{name:?}") });
        };
        let (prefix, local) = (&name[..colon], &name[colon + 1..]);
        let ns = self
            .prefixes
            .get(prefix)
            .ok_or_else(|| OfnError::UndeclaredPrefix { prefix: prefix.to_string(), pos })?;
        Iri::parse(&format!("{ns}{local}")).map_err(|e| OfnError::InvalidValue { pos, message: e.to_string() })
    }

    // An entity position must hold an IRI; a nested `Name(` is a class
    // expression or annotation and is outside the subset.
    fn entity_ref(&mut self) -> Result<Iri, OfnError> {
        let (tok, pos) = self.peek()?.clone();
        if let Tok::Name(name) = &tok {
            if !name.contains(':') {
                return Err(OfnError::UnsupportedConstruct { construct: name.clone(), pos });
            }
        }
        self.iri_ref()
    }

    fn literal(&mut self) -> Result<AnnotationValue, OfnError> {
        let (tok, pos) = self.next()?;
        let lexical = match tok {
            Tok::Literal(s) => s,
            Tok::Name(n) if !n.contains(':') => {
                return Err(OfnError::UnsupportedConstruct { construct: n, pos })
            }
            Tok::FullIri(_) | Tok::Name(_) => {
                return Err(OfnError::UnsupportedConstruct { construct: "IRI annotation value".into(), pos })
            }
            other => return Err(OfnError::SyntaxError { pos, expected: "literal".into(), found: other.to_string() }),
        };
        let value = match self.peek()?.clone() {
            (Tok::LangTag(tag), tag_pos) => {
                self.next()?;
                let lang = LanguageTag::parse(&tag)
                    .map_err(|e| OfnError::InvalidValue { pos: tag_pos, message: e.to_string() })?;
                AnnotationValue::lang_string(lexical, lang)
            }
            (Tok::DoubleCaret, _) => {
                self.next()?;
                let dt = self.iri_ref()?;
                AnnotationValue::typed(lexical, dt).map_err(|e| OfnError::InvalidValue { pos, message: e.to_string() })?
            }
            _ => AnnotationValue::plain(lexical),
        };
        Ok(value)
    }

    fn axiom(&mut self, name: String, pos: Position) -> Result<Axiom, OfnError> {
        self.expect(Tok::Open, "'('")?;
        let axiom = match name.as_str() {
            "Declaration" => {
                let (tok, kpos) = self.next()?;
                match tok {
                    Tok::Name(k) if k == "Class" => {}
                    Tok::Name(k) => return Err(OfnError::UnsupportedConstruct { construct: k, pos: kpos }),
                    other => {
                        return Err(OfnError::SyntaxError { pos: kpos, expected: "'Class'".into(), found: other.to_string() })
                    }
                }
                self.expect(Tok::Open, "'('")?;
                let class = self.iri_ref()?;
                self.expect(Tok::Close, "')'")?;
                Axiom::declaration(class)
            }
            "SubClassOf" => {
                let sub = self.entity_ref()?;
                let sup = self.entity_ref()?;
                Axiom::sub_class_of(sub, sup)
            }
            "AnnotationAssertion" => {
                let property = self.entity_ref()?;
                let subject = self.entity_ref()?;
                let value = self.literal()?;
                Axiom::annotation(property, subject, value)
            }
            _ => return Err(OfnError::UnsupportedConstruct { construct: name, pos }),
        };
        self.expect(Tok::Close, "')'")?;
        Ok(axiom)
    }

    fn document(&mut self) -> Result<OfnDocument, OfnError> {
        let mut declared = BTreeMap::new();
        loop {
            let (tok, pos) = self.next()?;
            match tok {
                Tok::Name(n) if n == "Prefix" => {
                    self.expect(Tok::Open, "'('")?;
                    let (tok, ppos) = self.next()?;
                    let prefix = match tok {
                        Tok::Name(p) if p.ends_with(':') && p.matches(':').count() == 1 => p[..p.len() - 1].to_string(),
                        other => {
                            return Err(OfnError::SyntaxError {
                                pos: ppos,
                                expected: "prefix name ending in ':'".into(),
                                found: other.to_string(),
                            })
                        }
                    };
                    self.expect(Tok::Equals, "'='")?;
                    let (tok, ipos) = self.next()?;
                    let Tok::FullIri(ns) = tok else {
                        return Err(OfnError::SyntaxError { pos: ipos, expected: "<iri>".into(), found: tok.to_string() });
                    };
                    self.expect(Tok::Close, "')'")?;
                    self.prefixes.insert(prefix.clone(), ns.clone());
                    declared.insert(prefix, ns);
                }
                Tok::Name(n) if n == "Ontology" => {
                    self.expect(Tok::Open, "'('")?;
                    break;
                }
                Tok::Name(n) if n == "Import" => return Err(OfnError::UnsupportedConstruct { construct: n, pos }),
                other => {
                    return Err(OfnError::SyntaxError {
                        pos,
                        expected: "'Prefix' or 'Ontology'".into(),
                        found: other.to_string(),
                    })
                }
            }
        }
        let ontology_iri = self.iri_ref()?;
        let mut doc = OfnDocument::new(ontology_iri);
        doc.prefixes = declared;
        loop {
            let (tok, pos) = self.next()?;
            match tok {
                Tok::Close => break,
                Tok::Name(name) => {
                    let axiom = self.axiom(name, pos)?;
                    doc.axioms.push(axiom);
                    doc.positions.push(pos);
                }
                Tok::FullIri(_) => {
                    return Err(OfnError::UnsupportedConstruct { construct: "ontology version IRI".into(), pos })
                }
                other => {
                    return Err(OfnError::SyntaxError { pos, expected: "axiom or ')'".into(), found: other.to_string() })
                }
            }
        }
        let (tok, pos) = self.next()?;
        if tok != Tok::Eof {
            return Err(OfnError::SyntaxError { pos, expected: "end of input".into(), found: tok.to_string() });
        }
        Ok(doc)
    }
}

/// Parses a document. The `rdf`, `rdfs`, `xsd` and `owl` prefixes are
/// predeclared, as in OWL 2.
pub fn parse_ofn(text: &str) -> Result<OfnDocument, OfnError> {
    let mut prefixes = BTreeMap::new();
    for (name, ns) in standard_prefixes() {
        if matches!(name, "rdf" | "rdfs" | "xsd" | "owl") {
            prefixes.insert(name.to_string(), ns.to_string());
        }
    }
    let mut parser = Parser { lexer: Lexer::new(text), peeked: None, prefixes };
    parser.document()
}

fn valid_local(local: &str) -> bool {
    let mut chars = local.chars();
    matches!(chars.next(), Some(c) if c.is_alphanumeric() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '-')
}

struct Abbreviator<'a> {
    // longest namespace first, then prefix name
    by_ns: Vec<(&'a str, &'a str)>,
}

impl<'a> Abbreviator<'a> {
    fn new(prefixes: &'a BTreeMap<String, String>) -> Self {
        let mut by_ns: Vec<(&str, &str)> = prefixes.iter().map(|(p, ns)| (p.as_str(), ns.as_str())).collect();
        by_ns.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(b.0)));
        Abbreviator { by_ns }
    }

    fn write(&self, out: &mut String, iri: &Iri) {
        let s = iri.as_str();
        for (prefix, ns) in &self.by_ns {
            if let Some(local) = s.strip_prefix(ns) {
                if valid_local(local) {
                    let _ = write!(out, "{prefix}:{local}");
                    return;
                }
            }
        }
        let _ = write!(out, "<{s}>");
    }
}

fn write_literal(out: &mut String, abbr: &Abbreviator<'_>, value: &AnnotationValue) {
    out.push('"');
    for c in value.lexical.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    if let Some(lang) = &value.lang {
        let _ = write!(out, "@{lang}");
    } else if let Some(dt) = &value.datatype {
        out.push_str("^^");
        abbr.write(out, dt);
    }
}

/// Writes the canonical text of `doc`: prefixes by name, axioms in canonical
/// order with duplicates dropped, one per line.
pub fn serialize_ofn(doc: &OfnDocument) -> String {
    let abbr = Abbreviator::new(&doc.prefixes);
    let mut out = String::new();
    for (prefix, ns) in &doc.prefixes {
        let _ = writeln!(out, "Prefix({prefix}:=<{ns}>)");
    }
    if !doc.prefixes.is_empty() {
        out.push('\n');
    }
    let _ = writeln!(out, "Ontology(<{}>", doc.ontology_iri);
    let mut axioms: Vec<&Axiom> = doc.axioms.iter().collect();
    axioms.sort();
    axioms.dedup();
    for axiom in axioms {
        match axiom {
            Axiom::Declaration { class } => {
                out.push_str("Declaration(Class(");
                abbr.write(&mut out, class);
                out.push_str("))");
            }
            Axiom::SubClassOf { sub, sup } => {
                out.push_str("SubClassOf(");
                abbr.write(&mut out, sub);
                out.push(' ');
                abbr.write(&mut out, sup);
                out.push(')');
            }
            Axiom::Annotation(a) => {
                out.push_str("AnnotationAssertion(");
                abbr.write(&mut out, &a.property);
                out.push(' ');
                abbr.write(&mut out, &a.subject);
                out.push(' ');
                write_literal(&mut out, &abbr, &a.value);
                out.push(')');
            }
        }
        out.push('\n');
    }
    out.push_str(")\n");
    out
}

/// Canonical text for a taxonomy.
pub fn write_taxonomy(tax: &Taxonomy, ontology_iri: &Iri) -> String {
    serialize_ofn(&OfnDocument::from_taxonomy(tax, ontology_iri.clone()))
}
