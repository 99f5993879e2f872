//! Keyword extraction and synonym-aware term matching.
//!
//! Identifiers such as `getUserName` or `send_Email2Address` are split into
//! lowercase keyword tokens. Two tokens match when they are equal or when
//! their synonym sets (each including the token itself) intersect. Matching
//! is binary; there is no similarity score.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Tokens dropped by [`extract_keywords`].
pub const STOPWORDS: &[&str] = &["a", "an", "the", "of", "to", "and", "or", "get", "set"];

/// A non-empty, lowercase token made only of letters and digits.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NormalizedTerm(String);

impl NormalizedTerm {
    /// Accepts `text` only if it already satisfies the term invariants.
    pub fn new(text: &str) -> Option<Self> {
        if is_normalized(text) {
            Some(Self(text.to_owned()))
        } else {
            None
        }
    }

    /// Collapses an arbitrary string into a single term: lowercase, with
    /// every non-alphanumeric character removed. `"E-Mail"` becomes `"email"`.
    pub fn collapse(raw: &str) -> Option<Self> {
        let text: String = raw
            .chars()
            .flat_map(char::to_lowercase)
            .filter(|c| c.is_alphanumeric())
            .collect();
        Self::new(&text)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

fn is_normalized(text: &str) -> bool {
    !text.is_empty()
        && text.chars().all(|c| {
            c.is_alphanumeric() && {
                let mut lower = c.to_lowercase();
                lower.next() == Some(c) && lower.next().is_none()
            }
        })
}

impl fmt::Display for NormalizedTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for NormalizedTerm {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for NormalizedTerm {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        NormalizedTerm::new(&raw)
            .ok_or_else(|| serde::de::Error::custom(format!("`{raw}` is not a normalized term")))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Upper,
    Lower,
    Digit,
}

fn class_of(c: char) -> CharClass {
    if c.is_numeric() {
        CharClass::Digit
    } else if c.is_uppercase() {
        CharClass::Upper
    } else {
        CharClass::Lower
    }
}

/// Splits an identifier or phrase into keyword terms.
///
/// Boundaries are lower→upper case changes (`userName`), the last capital of
/// an acronym run (`HTTPServer` → `http`, `server`), letter↔digit changes,
/// and any non-alphanumeric character. Tokens are lowercased, stopwords are
/// dropped, and repeated tokens keep their first position.
pub fn extract_keywords(raw: &str) -> Vec<NormalizedTerm> {
    let mut tokens: Vec<String> = Vec::new();
    let chars: Vec<char> = raw.chars().collect();
    let mut current = String::new();

    for (i, &c) in chars.iter().enumerate() {
        if !c.is_alphanumeric() {
            flush(&mut current, &mut tokens);
            continue;
        }
        if let Some(&prev) = i.checked_sub(1).and_then(|p| chars.get(p)) {
            if prev.is_alphanumeric() && !current.is_empty() {
                let (pc, cc) = (class_of(prev), class_of(c));
                let next_lower = chars
                    .get(i + 1)
                    .is_some_and(|&n| n.is_alphanumeric() && class_of(n) == CharClass::Lower);
                let boundary = match (pc, cc) {
                    (CharClass::Digit, CharClass::Digit) => false,
                    (CharClass::Digit, _) | (_, CharClass::Digit) => true,
                    (CharClass::Lower, CharClass::Upper) => true,
                    (CharClass::Upper, CharClass::Upper) => next_lower,
                    _ => false,
                };
                if boundary {
                    flush(&mut current, &mut tokens);
                }
            }
        }
        current.extend(c.to_lowercase().filter(|l| l.is_alphanumeric()));
    }
    flush(&mut current, &mut tokens);

    let mut seen = BTreeSet::new();
    tokens
        .into_iter()
        .filter(|t| !STOPWORDS.contains(&t.as_str()))
        .filter_map(|t| NormalizedTerm::new(&t))
        .filter(|t| seen.insert(t.clone()))
        .collect()
}

fn flush(current: &mut String, tokens: &mut Vec<String>) {
    if !current.is_empty() {
        tokens.push(std::mem::take(current));
    }
}

/// Extracts keywords from each phrase and unions the results.
pub fn keyword_set<'a, I>(phrases: I) -> BTreeSet<NormalizedTerm>
where
    I: IntoIterator<Item = &'a str>,
{
    phrases.into_iter().flat_map(extract_keywords).collect()
}

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("cannot read lexicon {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("lexicon {path} is not valid JSON at line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("lexicon entry `{0}` has no letters or digits")]
    EmptyTerm(String),
}

/// Synonym sets keyed by term. Immutable once built.
///
/// Loading closes the relation under symmetry (if `a` lists `b`, `b` lists
/// `a`) and removes self-references. The relation is not transitively closed,
/// so term matching is reflexive and symmetric but not transitive.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymLexicon {
    entries: BTreeMap<NormalizedTerm, BTreeSet<NormalizedTerm>>,
}

impl SynonymLexicon {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a lexicon from raw `(term, synonyms)` pairs.
    pub fn from_pairs<I, S, T>(pairs: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = (S, Vec<T>)>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let mut lex = Self::default();
        for (term, synonyms) in pairs {
            let term = collapse_entry(term.as_ref())?;
            for syn in synonyms {
                let syn = collapse_entry(syn.as_ref())?;
                lex.link(&term, &syn);
            }
        }
        Ok(lex)
    }

    /// Parses the JSON lexicon format: `{"buy": ["purchase"], ...}`.
    pub fn from_json(text: &str, origin: &str) -> Result<Self, LexiconError> {
        let raw: BTreeMap<String, Vec<String>> =
            serde_json::from_str(text).map_err(|e| LexiconError::Parse {
                path: origin.to_owned(),
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        Self::from_pairs(raw)
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text, &path.display().to_string())
    }

    fn link(&mut self, a: &NormalizedTerm, b: &NormalizedTerm) {
        if a == b {
            return;
        }
        self.entries.entry(a.clone()).or_default().insert(b.clone());
        self.entries.entry(b.clone()).or_default().insert(a.clone());
    }

    /// Synonyms of `term`, never including the term itself. Unknown terms
    /// have no synonyms.
    pub fn synonyms(&self, term: &NormalizedTerm) -> impl Iterator<Item = &NormalizedTerm> {
        self.entries.get(term).into_iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn collapse_entry(raw: &str) -> Result<NormalizedTerm, LexiconError> {
    NormalizedTerm::collapse(raw).ok_or_else(|| LexiconError::EmptyTerm(raw.to_owned()))
}

/// Exact equality first, then synonym-set intersection.
pub fn terms_match(a: &NormalizedTerm, b: &NormalizedTerm, lex: &SynonymLexicon) -> bool {
    if a == b {
        return true;
    }
    let b_set = |t: &NormalizedTerm| t == b || lex.synonyms(b).any(|s| s == t);
    b_set(a) || lex.synonyms(a).any(b_set)
}

/// True when at least one pair across the two sets matches. Empty sets never match.
pub fn keyword_sets_match<'a, U, T>(user: U, target: T, lex: &SynonymLexicon) -> bool
where
    U: IntoIterator<Item = &'a NormalizedTerm>,
    T: IntoIterator<Item = &'a NormalizedTerm> + Clone,
{
    user.into_iter()
        .any(|u| target.clone().into_iter().any(|t| terms_match(u, t, lex)))
}
