//! Edit-distance string metrics and lexicon classification.
//!
//! All scores are on a 0–100 scale. `ratio` and `partial_ratio` compare
//! case-folded text; `levenshtein` compares exactly what it is given.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_MATCH_THRESHOLD: f64 = 80.0;

/// Edit distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_chars(&a, &b)
}

fn levenshtein_chars(a: &[char], b: &[char]) -> usize {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    if b.is_empty() {
        return a.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if ca == cb {
                diag
            } else {
                1 + diag.min(above).min(row[j])
            };
            diag = above;
        }
    }
    row[b.len()]
}

pub fn fold(s: &str) -> String {
    s.to_lowercase()
}

fn ratio_chars(a: &[char], b: &[char]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 100.0;
    }
    let d = levenshtein_chars(a, b);
    100.0 * (longest - d) as f64 / longest as f64
}

/// `100 · (1 − d / max(|a|, |b|))` on case-folded input; two empty strings
/// score 100.
pub fn ratio(a: &str, b: &str) -> f64 {
    let a: Vec<char> = fold(a).chars().collect();
    let b: Vec<char> = fold(b).chars().collect();
    ratio_chars(&a, &b)
}

/// Best [`ratio`] of the shorter string against every equally long window of
/// the longer one, never lower than the whole-string ratio.
pub fn partial_ratio(a: &str, b: &str) -> f64 {
    let a: Vec<char> = fold(a).chars().collect();
    let b: Vec<char> = fold(b).chars().collect();
    partial_ratio_chars(&a, &b)
}

fn partial_ratio_chars(a: &[char], b: &[char]) -> f64 {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut best = ratio_chars(short, long);
    if short.is_empty() || best == 100.0 {
        return best;
    }
    for window in long.windows(short.len()) {
        best = best.max(ratio_chars(short, window));
        if best == 100.0 {
            break;
        }
    }
    best
}

/// Case-folds, turns punctuation into spaces and collapses whitespace.
pub fn normalize_text(s: &str) -> String {
    fold(s)
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Publisher,
    Institute,
    Department,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Publisher, Category::Institute, Category::Department];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Publisher => "publisher",
            Category::Institute => "institute",
            Category::Department => "department",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "publisher" => Ok(Category::Publisher),
            "institute" => Ok(Category::Institute),
            "department" => Ok(Category::Department),
            other => Err(format!("unknown lexicon category {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub canonical: String,
    #[serde(default)]
    pub aliases: Vec<String>,
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("{category} lexicon: duplicate canonical name {name:?}")]
    DuplicateCanonical { category: Category, name: String },
    #[error("{category} lexicon: empty name in entry {entry}")]
    EmptyName { category: Category, entry: usize },
    #[error("invalid lexicon document: {0}")]
    Format(#[from] serde_json::Error),
    #[error("cannot read lexicon {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A category's canonical values and their alternative spellings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLexicon", into = "RawLexicon")]
pub struct Lexicon {
    category: Category,
    entries: Vec<LexiconEntry>,
    /// Folded (canonical index, term) pairs, canonical first.
    #[serde(skip)]
    terms: Vec<(usize, String, Vec<char>)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLexicon {
    category: Category,
    entries: Vec<LexiconEntry>,
}

impl TryFrom<RawLexicon> for Lexicon {
    type Error = LexiconError;

    fn try_from(raw: RawLexicon) -> Result<Self, Self::Error> {
        Lexicon::new(raw.category, raw.entries)
    }
}

impl From<Lexicon> for RawLexicon {
    fn from(lex: Lexicon) -> Self {
        RawLexicon {
            category: lex.category,
            entries: lex.entries,
        }
    }
}

const DEFAULT_PUBLISHERS: &str = include_str!("../lexicons/publisher.json");
const DEFAULT_INSTITUTES: &str = include_str!("../lexicons/institute.json");
const DEFAULT_DEPARTMENTS: &str = include_str!("../lexicons/department.json");

impl Lexicon {
    pub fn new(category: Category, entries: Vec<LexiconEntry>) -> Result<Self, LexiconError> {
        let mut seen = std::collections::HashSet::new();
        let mut terms = Vec::new();
        for (i, entry) in entries.iter().enumerate() {
            if entry.canonical.trim().is_empty() || entry.aliases.iter().any(|a| a.trim().is_empty()) {
                return Err(LexiconError::EmptyName { category, entry: i });
            }
            if !seen.insert(fold(entry.canonical.trim())) {
                return Err(LexiconError::DuplicateCanonical {
                    category,
                    name: entry.canonical.clone(),
                });
            }
            for term in std::iter::once(&entry.canonical).chain(&entry.aliases) {
                let folded = fold(term.trim());
                let chars = folded.chars().collect();
                terms.push((i, term.clone(), chars));
            }
        }
        Ok(Self {
            category,
            entries,
            terms,
        })
    }

    pub fn category(&self) -> Category {
        self.category
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn from_json(text: &str) -> Result<Self, LexiconError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("lexicon serializes")
    }

    /// The shipped seed lexicon for `category`.
    pub fn builtin(category: Category) -> Self {
        let text = match category {
            Category::Publisher => DEFAULT_PUBLISHERS,
            Category::Institute => DEFAULT_INSTITUTES,
            Category::Department => DEFAULT_DEPARTMENTS,
        };
        let lex = Self::from_json(text).expect("built-in lexicon is valid");
        debug_assert_eq!(lex.category, category);
        lex
    }

    /// Every distinct folded word appearing in canonical names or aliases.
    pub fn vocabulary(&self) -> impl Iterator<Item = String> + '_ {
        self.terms
            .iter()
            .flat_map(|(_, term, _)| normalize_text(term).split(' ').map(str::to_string).collect::<Vec<_>>())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub canonical: String,
    pub score: f64,
    pub matched_alias: String,
    /// Line the query came from, when it came from OCR output.
    pub source_line: Option<usize>,
}

/// Highest-scoring canonical for `query`, scoring each term by
/// `max(ratio, partial_ratio)`. Ties prefer the higher plain ratio, then the
/// lexicographically smaller canonical name.
pub fn best_match(query: &str, lex: &Lexicon, threshold: f64) -> Option<MatchResult> {
    let q: Vec<char> = fold(query.trim()).chars().collect();
    if q.is_empty() {
        return None;
    }
    // (score, plain ratio, entry index, term text)
    let mut best: Option<(f64, f64, usize, &str)> = None;
    for (entry, term, chars) in &lex.terms {
        let plain = ratio_chars(&q, chars);
        let score = plain.max(partial_ratio_chars(&q, chars));
        let better = match best {
            None => true,
            Some((bs, br, be, bt)) => {
                score > bs
                    || (score == bs && plain > br)
                    || (score == bs
                        && plain == br
                        && (lex.entries[*entry].canonical.as_str(), term.as_str())
                            < (lex.entries[be].canonical.as_str(), bt))
            }
        };
        if better {
            best = Some((score, plain, *entry, term));
        }
    }
    best.filter(|(score, ..)| *score >= threshold)
        .map(|(score, _, entry, term)| MatchResult {
            canonical: lex.entries[entry].canonical.clone(),
            score,
            matched_alias: term.to_string(),
            source_line: None,
        })
}
