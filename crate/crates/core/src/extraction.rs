//! Per-frame attribute extraction and cross-frame merging.
//!
//! Publisher, institute and department come from lexicon matching on each
//! OCR line. Professor names come from two line rules (an honorific prefix,
//! or the line following a trailing "by"); when neither fires, a pluggable
//! [`NameRecognizer`] gets a chance at a lower score.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matching::{best_match, levenshtein, normalize_text, Category, Lexicon, MatchResult};
use crate::ocr::{OcrLine, OcrResult};

pub const PREFIX_RULE_SCORE: f64 = 100.0;
pub const BY_RULE_SCORE: f64 = 90.0;
/// Recognizer scores are capped here so rule hits always outrank them.
pub const RECOGNIZER_SCORE_CAP: f64 = 80.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeName {
    Publisher,
    Institute,
    Department,
    Professor,
}

impl AttributeName {
    pub const ALL: [AttributeName; 4] = [
        AttributeName::Publisher,
        AttributeName::Institute,
        AttributeName::Department,
        AttributeName::Professor,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AttributeName::Publisher => "publisher",
            AttributeName::Institute => "institute",
            AttributeName::Department => "department",
            AttributeName::Professor => "professor",
        }
    }

    /// Row label used in evaluation tables.
    pub fn label(self) -> &'static str {
        match self {
            AttributeName::Publisher => "Publisher Name",
            AttributeName::Institute => "Institute Name",
            AttributeName::Department => "Department Name",
            AttributeName::Professor => "Professor Name",
        }
    }

    pub fn category(self) -> Option<Category> {
        match self {
            AttributeName::Publisher => Some(Category::Publisher),
            AttributeName::Institute => Some(Category::Institute),
            AttributeName::Department => Some(Category::Department),
            AttributeName::Professor => None,
        }
    }
}

impl fmt::Display for AttributeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttributeName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "publisher" => Ok(AttributeName::Publisher),
            "institute" => Ok(AttributeName::Institute),
            "department" => Ok(AttributeName::Department),
            "professor" => Ok(AttributeName::Professor),
            other => Err(format!(
                "unknown attribute {other:?} (expected publisher, institute, department or professor)"
            )),
        }
    }
}

/// One extracted value with its score and where it was read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeValue {
    pub value: String,
    pub score: f64,
    pub source_frame: u64,
    pub source_line: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AttributeSet {
    pub publisher: Option<AttributeValue>,
    pub institute: Option<AttributeValue>,
    pub department: Option<AttributeValue>,
    pub professor: Option<AttributeValue>,
    /// Carried for catalog completeness; never filled automatically.
    pub subject: Option<String>,
    pub topic: Option<String>,
}

impl AttributeSet {
    pub fn get(&self, name: AttributeName) -> Option<&AttributeValue> {
        match name {
            AttributeName::Publisher => self.publisher.as_ref(),
            AttributeName::Institute => self.institute.as_ref(),
            AttributeName::Department => self.department.as_ref(),
            AttributeName::Professor => self.professor.as_ref(),
        }
    }

    pub fn slot_mut(&mut self, name: AttributeName) -> &mut Option<AttributeValue> {
        match name {
            AttributeName::Publisher => &mut self.publisher,
            AttributeName::Institute => &mut self.institute,
            AttributeName::Department => &mut self.department,
            AttributeName::Professor => &mut self.professor,
        }
    }

    pub fn present_count(&self) -> usize {
        AttributeName::ALL.iter().filter(|&&n| self.get(n).is_some()).count()
    }

    /// Distinct frames that supplied a present attribute, ascending.
    pub fn source_frames(&self) -> Vec<u64> {
        let mut frames: Vec<u64> = AttributeName::ALL
            .iter()
            .filter_map(|&n| self.get(n).map(|v| v.source_frame))
            .collect();
        frames.sort_unstable();
        frames.dedup();
        frames
    }
}

/// A person name found on a line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NameCandidate {
    pub name: String,
    pub score: f64,
    pub line_number: usize,
}

#[derive(Debug, Error)]
#[error("name recognizer {recognizer} failed: {message}")]
pub struct RecognizerError {
    pub recognizer: String,
    pub message: String,
}

/// Fallback person-name finder consulted when the line rules find nothing.
/// Returned names must be substrings of the cited line's text.
pub trait NameRecognizer: Send + Sync {
    fn id(&self) -> &str;

    fn find_person_names(&self, lines: &[OcrLine]) -> Result<Vec<NameCandidate>, RecognizerError>;
}

/// Recognizer that never finds anything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoRecognizer;

impl NameRecognizer for NoRecognizer {
    fn id(&self) -> &str {
        "none"
    }

    fn find_person_names(&self, _lines: &[OcrLine]) -> Result<Vec<NameCandidate>, RecognizerError> {
        Ok(Vec::new())
    }
}

/// Returns a fixed answer and counts how often it was asked.
#[derive(Debug, Default)]
pub struct ScriptedRecognizer {
    response: Option<Result<Vec<NameCandidate>, String>>,
    calls: AtomicUsize,
}

impl ScriptedRecognizer {
    pub fn returning(candidates: Vec<NameCandidate>) -> Self {
        Self {
            response: Some(Ok(candidates)),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn failing(message: &str) -> Self {
        Self {
            response: Some(Err(message.to_string())),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl NameRecognizer for ScriptedRecognizer {
    fn id(&self) -> &str {
        "scripted"
    }

    fn find_person_names(&self, _lines: &[OcrLine]) -> Result<Vec<NameCandidate>, RecognizerError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        match &self.response {
            None => Ok(Vec::new()),
            Some(Ok(c)) => Ok(c.clone()),
            Some(Err(message)) => Err(RecognizerError {
                recognizer: self.id().to_string(),
                message: message.clone(),
            }),
        }
    }
}

/// Common words on lecture title slides that are never part of a name.
const TITLE_WORDS: &[&str] = &[
    "about",
    "advanced",
    "algebra",
    "algorithm",
    "algorithms",
    "analysis",
    "analytics",
    "and",
    "applications",
    "applied",
    "architecture",
    "artificial",
    "assignment",
    "basic",
    "basics",
    "biology",
    "by",
    "calculus",
    "certification",
    "chapter",
    "circuits",
    "class",
    "cloud",
    "communication",
    "communications",
    "compiler",
    "compilers",
    "complexity",
    "computation",
    "computational",
    "computer",
    "computing",
    "concepts",
    "control",
    "course",
    "courses",
    "data",
    "database",
    "databases",
    "deep",
    "department",
    "design",
    "differential",
    "digital",
    "discrete",
    "distributed",
    "dynamics",
    "economics",
    "education",
    "electronics",
    "elements",
    "engineering",
    "environmental",
    "equations",
    "fluid",
    "for",
    "foundations",
    "fundamentals",
    "game",
    "graph",
    "graphics",
    "heat",
    "image",
    "information",
    "institute",
    "intelligence",
    "introduction",
    "lab",
    "language",
    "languages",
    "learning",
    "lecture",
    "lectures",
    "linear",
    "logic",
    "machine",
    "machines",
    "management",
    "materials",
    "mathematics",
    "mechanics",
    "methods",
    "microprocessors",
    "mining",
    "mobile",
    "models",
    "modern",
    "module",
    "networks",
    "network",
    "numerical",
    "of",
    "on",
    "online",
    "operating",
    "optimization",
    "overview",
    "part",
    "pattern",
    "physics",
    "principles",
    "probability",
    "processing",
    "programme",
    "programming",
    "quantum",
    "random",
    "recognition",
    "reinforcement",
    "review",
    "robotics",
    "science",
    "sciences",
    "security",
    "session",
    "signal",
    "signals",
    "software",
    "statistics",
    "structures",
    "systems",
    "technology",
    "the",
    "theory",
    "thermodynamics",
    "to",
    "topics",
    "transfer",
    "tutorial",
    "university",
    "video",
    "vision",
    "week",
    "welcome",
    "wireless",
    "with",
];

const HONORIFICS: &[&str] = &["prof", "professor", "dr", "doctor"];

fn strip_punct(token: &str) -> &str {
    token.trim_end_matches(['.', ',', ':', ';'])
}

fn is_honorific(token: &str) -> bool {
    let t = strip_punct(token).to_lowercase();
    HONORIFICS.contains(&t.as_str())
}

/// Honorific up to one OCR slip ("Pr0f.", "Proff", "Drl"). Bare two-letter
/// tokens are never matched fuzzily; they would catch too many words.
fn is_honorific_like(token: &str) -> bool {
    if is_honorific(token) {
        return true;
    }
    let t = token.to_lowercase();
    t.chars().count() >= 3
        && ["prof", "prof.", "professor", "dr.", "doctor"]
            .iter()
            .any(|h| levenshtein(&t, h) <= 1)
}

/// Title-cases each whitespace token and drops trailing punctuation.
pub fn normalize_name(raw: &str) -> String {
    let name = raw
        .split_whitespace()
        .map(|tok| {
            let mut chars = tok.chars();
            match chars.next() {
                Some(first) => first.to_uppercase().chain(chars.flat_map(char::to_lowercase)).collect(),
                None => String::new(),
            }
        })
        .collect::<Vec<String>>()
        .join(" ");
    name.trim_end_matches(|c: char| c.is_ascii_punctuation() && c != ')')
        .trim()
        .to_string()
}

/// Text after a leading run of honorifics, or `None` when the line does not
/// start with one. Handles a glued "Prof.Name" form.
fn after_honorific(text: &str) -> Option<&str> {
    let mut rest = text.trim();
    let mut stripped = false;
    loop {
        let folded = rest.to_lowercase();
        let glued = ["prof.", "dr."].iter().find_map(|p| {
            folded
                .strip_prefix(p)
                .filter(|tail| tail.chars().next().is_some_and(char::is_alphabetic))
                .map(|_| p.len())
        });
        if let Some(len) = glued {
            rest = rest[len..].trim_start();
            stripped = true;
            continue;
        }
        match rest.split_once(char::is_whitespace) {
            Some((first, tail)) if is_honorific(first) => {
                rest = tail.trim_start();
                stripped = true;
            }
            None if is_honorific(rest) => return None,
            _ => break,
        }
    }
    stripped.then_some(rest)
}

fn last_token_is_by(text: &str) -> bool {
    text.split_whitespace()
        .last()
        .is_some_and(|t| strip_punct(t).eq_ignore_ascii_case("by"))
}

/// Line rules for professor names: an honorific-prefixed line (score 100),
/// otherwise the line after one ending in "by" (score 90).
pub fn extract_professor_rules(ocr: &OcrResult) -> Option<NameCandidate> {
    for line in &ocr.lines {
        if let Some(rest) = after_honorific(&line.text) {
            let name = normalize_name(rest);
            if !name.is_empty() {
                return Some(NameCandidate {
                    name,
                    score: PREFIX_RULE_SCORE,
                    line_number: line.line_number,
                });
            }
        }
    }
    for pair in ocr.lines.windows(2) {
        if last_token_is_by(&pair[0].text) {
            let name = normalize_name(&pair[1].text);
            if !name.is_empty() {
                return Some(NameCandidate {
                    name,
                    score: BY_RULE_SCORE,
                    line_number: pair[1].line_number,
                });
            }
        }
    }
    None
}

/// Rule-based fallback recognizer: a line of two to four capitalised words
/// or initials, none of them a known title or lexicon word, optionally led
/// by an honorific that OCR may have garbled.
#[derive(Debug, Clone)]
pub struct RuleBasedRecognizer {
    vocabulary: HashSet<String>,
}

impl Default for RuleBasedRecognizer {
    fn default() -> Self {
        Self::new(std::iter::empty())
    }
}

impl RuleBasedRecognizer {
    pub fn new(extra_vocabulary: impl IntoIterator<Item = String>) -> Self {
        let mut vocabulary: HashSet<String> = TITLE_WORDS.iter().map(|w| w.to_string()).collect();
        vocabulary.extend(extra_vocabulary.into_iter().filter(|w| !w.is_empty()));
        Self { vocabulary }
    }

    /// Seeds the excluded vocabulary with every word of the given lexicons.
    pub fn with_lexicons<'a>(lexicons: impl IntoIterator<Item = &'a Lexicon>) -> Self {
        Self::new(lexicons.into_iter().flat_map(|l| l.vocabulary().collect::<Vec<_>>()))
    }

    fn is_name_token(&self, token: &str) -> bool {
        let t = strip_punct(token);
        let mut chars = t.chars();
        let Some(first) = chars.next() else { return false };
        if !first.is_uppercase() {
            return false;
        }
        let rest: Vec<char> = chars.collect();
        let initial = rest.is_empty();
        let word = !rest.is_empty()
            && rest.iter().all(|c| c.is_lowercase() || *c == '-' || *c == '\'')
            && !self.vocabulary.contains(&normalize_text(t));
        initial || word
    }

    fn candidate(&self, line: &OcrLine) -> Option<NameCandidate> {
        let text = line.text.trim();
        let (body, honorific) = match text.split_once(char::is_whitespace) {
            Some((first, rest)) if is_honorific_like(first) => (rest.trim_start(), true),
            _ => (text, false),
        };
        let tokens: Vec<&str> = body.split_whitespace().collect();
        if !(2..=4).contains(&tokens.len()) || !tokens.iter().all(|t| self.is_name_token(t)) {
            return None;
        }
        if tokens.iter().all(|t| strip_punct(t).chars().count() == 1) {
            return None;
        }
        let name = body.trim_end_matches(['.', ',', ':', ';']);
        Some(NameCandidate {
            name: name.to_string(),
            score: if honorific { 80.0 } else { 70.0 },
            line_number: line.line_number,
        })
    }
}

impl NameRecognizer for RuleBasedRecognizer {
    fn id(&self) -> &str {
        "rule_based"
    }

    fn find_person_names(&self, lines: &[OcrLine]) -> Result<Vec<NameCandidate>, RecognizerError> {
        Ok(lines.iter().filter_map(|l| self.candidate(l)).collect())
    }
}

/// Result of [`extract_professor`], with any recognizer failure recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfessorExtraction {
    pub candidate: Option<NameCandidate>,
    pub diagnostic: Option<String>,
}

/// Rules first; the recognizer only when they miss. A failing recognizer
/// degrades to the rules-only answer.
pub fn extract_professor(ocr: &OcrResult, recognizer: &dyn NameRecognizer) -> ProfessorExtraction {
    if let Some(hit) = extract_professor_rules(ocr) {
        return ProfessorExtraction {
            candidate: Some(hit),
            diagnostic: None,
        };
    }
    match recognizer.find_person_names(&ocr.lines) {
        Ok(found) => {
            let best = found.into_iter().filter(|c| !c.name.trim().is_empty()).fold(
                None::<NameCandidate>,
                |best, c| match best {
                    Some(b) if b.score > c.score || (b.score == c.score && b.line_number <= c.line_number) => Some(b),
                    _ => Some(c),
                },
            );
            ProfessorExtraction {
                candidate: best.map(|c| NameCandidate {
                    name: normalize_name(&c.name),
                    score: c.score.clamp(0.0, RECOGNIZER_SCORE_CAP),
                    line_number: c.line_number,
                }),
                diagnostic: None,
            }
        }
        Err(err) => {
            log::warn!("name recognizer failed: {err}");
            ProfessorExtraction {
                candidate: None,
                diagnostic: Some(err.to_string()),
            }
        }
    }
}

/// Best accepted lexicon match over all lines; ties go to the earlier line.
pub fn extract_lexicon_attribute(ocr: &OcrResult, lex: &Lexicon, threshold: f64) -> Option<MatchResult> {
    ocr.lines
        .iter()
        .filter_map(|line| {
            best_match(&line.text, lex, threshold).map(|m| MatchResult {
                source_line: Some(line.line_number),
                ..m
            })
        })
        .fold(None, |best: Option<MatchResult>, m| match best {
            Some(b) if b.score >= m.score => Some(b),
            _ => Some(m),
        })
}

/// Attributes from one frame plus anything worth logging.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameExtraction {
    pub attributes: AttributeSet,
    pub diagnostics: Vec<String>,
}

/// Bundles lexicons, threshold and recognizer for per-frame extraction.
#[derive(Clone)]
pub struct Extractor {
    lexicons: BTreeMap<Category, Lexicon>,
    threshold: f64,
    recognizer: Arc<dyn NameRecognizer>,
}

impl fmt::Debug for Extractor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Extractor")
            .field("lexicons", &self.lexicons.keys().collect::<Vec<_>>())
            .field("threshold", &self.threshold)
            .field("recognizer", &self.recognizer.id())
            .finish()
    }
}

impl Extractor {
    pub fn new(
        lexicons: impl IntoIterator<Item = Lexicon>,
        threshold: f64,
        recognizer: Arc<dyn NameRecognizer>,
    ) -> Self {
        Self {
            lexicons: lexicons.into_iter().map(|l| (l.category(), l)).collect(),
            threshold,
            recognizer,
        }
    }

    /// Built-in lexicons and the rule-based recognizer seeded from them.
    pub fn with_defaults(threshold: f64) -> Self {
        let lexicons: Vec<Lexicon> = Category::ALL.iter().map(|&c| Lexicon::builtin(c)).collect();
        let recognizer = Arc::new(RuleBasedRecognizer::with_lexicons(&lexicons));
        Self::new(lexicons, threshold, recognizer)
    }

    pub fn lexicon(&self, category: Category) -> Option<&Lexicon> {
        self.lexicons.get(&category)
    }

    pub fn recognizer_id(&self) -> &str {
        self.recognizer.id()
    }

    pub fn extract(&self, ocr: &OcrResult) -> FrameExtraction {
        let mut attributes = AttributeSet::default();
        let mut diagnostics = Vec::new();
        for name in AttributeName::ALL {
            let Some(category) = name.category() else { continue };
            let Some(lex) = self.lexicons.get(&category) else {
                continue;
            };
            if let Some(m) = extract_lexicon_attribute(ocr, lex, self.threshold) {
                *attributes.slot_mut(name) = Some(AttributeValue {
                    value: m.canonical,
                    score: m.score,
                    source_frame: ocr.frame_index,
                    source_line: m.source_line.unwrap_or_default(),
                });
            }
        }
        let prof = extract_professor(ocr, self.recognizer.as_ref());
        diagnostics.extend(prof.diagnostic);
        attributes.professor = prof.candidate.map(|c| AttributeValue {
            value: c.name,
            score: c.score,
            source_frame: ocr.frame_index,
            source_line: c.line_number,
        });
        FrameExtraction {
            attributes,
            diagnostics,
        }
    }
}

fn better(a: &AttributeValue, b: &AttributeValue) -> bool {
    a.score > b.score || (a.score == b.score && (a.source_frame, a.source_line) < (b.source_frame, b.source_line))
}

/// Per attribute, the highest-scoring value across frames; ties go to the
/// earliest frame. Attributes absent everywhere stay absent.
pub fn merge_frames(per_frame: &[AttributeSet]) -> AttributeSet {
    let mut merged = AttributeSet::default();
    for set in per_frame {
        for name in AttributeName::ALL {
            if let Some(candidate) = set.get(name) {
                let slot = merged.slot_mut(name);
                if slot.as_ref().is_none_or(|cur| better(candidate, cur)) {
                    *slot = Some(candidate.clone());
                }
            }
        }
        if merged.subject.is_none() {
            merged.subject.clone_from(&set.subject);
        }
        if merged.topic.is_none() {
            merged.topic.clone_from(&set.topic);
        }
    }
    merged
}
