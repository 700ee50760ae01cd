//! Identifier newtypes: IRIs and BCP-47 language tags.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ModelError;

/// An absolute IRI. Cheap to clone; compared and ordered by its string form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Iri(Arc<str>);

impl Iri {
    /// Parses an absolute IRI: a scheme followed by `:` and a non-empty body
    /// without whitespace, angle brackets or quotes.
    pub fn parse(value: &str) -> Result<Self, ModelError> {
        if is_absolute_iri(value) {
            Ok(Iri(Arc::from(value)))
        } else {
            Err(ModelError::InvalidIri(value.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The fragment or last path segment, used as a display fallback.
    pub fn local_name(&self) -> &str {
        let s = self.as_str();
        let cut = s.rfind(['#', '/']).map(|i| i + 1).unwrap_or(0);
        let local = &s[cut..];
        if local.is_empty() {
            s
        } else {
            local
        }
    }

    /// Everything up to and including the last `#` or `/`.
    pub fn namespace(&self) -> &str {
        let s = self.as_str();
        match s.rfind(['#', '/']) {
            Some(i) => &s[..=i],
            None => s,
        }
    }
}

fn is_absolute_iri(value: &str) -> bool {
    let Some(colon) = value.find(':') else {
        return false;
    };
    let (scheme, rest) = (&value[..colon], &value[colon + 1..]);
    let mut chars = scheme.chars();
    let scheme_ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
    scheme_ok
        && !rest.is_empty()
        && !rest
            .chars()
            .any(|c| c.is_whitespace() || c.is_control() || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '\\' | '^' | '`'))
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

impl Serialize for Iri {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Iri {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Iri::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// A BCP-47 language tag in canonical case: language lowercase, script
/// titlecase, region uppercase, everything else lowercase.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LanguageTag(Arc<str>);

impl LanguageTag {
    pub fn parse(value: &str) -> Result<Self, ModelError> {
        let invalid = || ModelError::InvalidLanguageTag(value.to_string());
        let mut parts = value.split('-');
        let primary = parts.next().ok_or_else(invalid)?;
        if !(2..=8).contains(&primary.len()) || !primary.chars().all(|c| c.is_ascii_alphabetic()) {
            return Err(invalid());
        }
        let mut out = primary.to_ascii_lowercase();
        let mut after_singleton = false;
        for (i, sub) in parts.enumerate() {
            if sub.is_empty() || sub.len() > 8 || !sub.chars().all(|c| c.is_ascii_alphanumeric()) {
                return Err(invalid());
            }
            out.push('-');
            if sub.len() == 1 {
                after_singleton = true;
            }
            let canon = if after_singleton {
                sub.to_ascii_lowercase()
            } else if sub.len() == 4 && i == 0 && sub.chars().all(|c| c.is_ascii_alphabetic()) {
                let mut s = sub.to_ascii_lowercase();
                s[..1].make_ascii_uppercase();
                s
            } else if (sub.len() == 2 && sub.chars().all(|c| c.is_ascii_alphabetic()))
                || (sub.len() == 3 && sub.chars().all(|c| c.is_ascii_digit()))
            {
                sub.to_ascii_uppercase()
            } else {
                sub.to_ascii_lowercase()
            };
            out.push_str(&canon);
        }
        Ok(LanguageTag(Arc::from(out)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The language subtag, e.g. `en` for `en-US`.
    pub fn primary_subtag(&self) -> &str {
        self.0.split('-').next().unwrap_or(&self.0)
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{}", self.0)
    }
}

impl Serialize for LanguageTag {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for LanguageTag {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        LanguageTag::parse(&s).map_err(serde::de::Error::custom)
    }
}
