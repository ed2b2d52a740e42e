use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// Shift applied by an intensifier or dampener next to a scored word.
pub const BOOSTER_INCREMENT: f64 = 0.293;
/// Normalisation constant in `s / √(s² + α)`.
pub const COMPOUND_ALPHA: f64 = 15.0;
pub const LABEL_THRESHOLD: f64 = 0.05;
/// How many preceding words a negation cue reaches.
pub const NEGATION_WINDOW: usize = 3;

const BUNDLED: &str = include_str!("../../assets/sentiment_lexicon.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SentimentLabel {
    Negative,
    Neutral,
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentScore {
    pub compound: f64,
    pub label: SentimentLabel,
}

pub fn label_for(compound: f64) -> SentimentLabel {
    if compound >= LABEL_THRESHOLD {
        SentimentLabel::Positive
    } else if compound <= -LABEL_THRESHOLD {
        SentimentLabel::Negative
    } else {
        SentimentLabel::Neutral
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    pub valence: HashMap<String, f64>,
    /// +1 for intensifiers, −1 for dampeners.
    pub boosters: HashMap<String, f64>,
    pub negations: HashSet<String>,
}

impl Lexicon {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut lex = Lexicon { valence: HashMap::new(), boosters: HashMap::new(), negations: HashSet::new() };
        let mut section = "";
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with('[') {
                section = line;
                continue;
            }
            let bad = || format!("line {}: {raw:?}", i + 1);
            match section {
                "[valence]" | "[booster]" => {
                    let (word, value) = line.split_once('\t').ok_or_else(bad)?;
                    let value: f64 = value.trim().parse().map_err(|_| bad())?;
                    let map = if section == "[valence]" { &mut lex.valence } else { &mut lex.boosters };
                    map.insert(word.to_lowercase(), value);
                }
                "[negation]" => {
                    lex.negations.insert(line.to_lowercase());
                }
                _ => return Err(bad()),
            }
        }
        Ok(lex)
    }

    pub fn bundled() -> &'static Lexicon {
        static LEX: OnceLock<Lexicon> = OnceLock::new();
        LEX.get_or_init(|| Lexicon::parse(BUNDLED).expect("bundled lexicon parses"))
    }

    /// Same lexicon with every valence negated.
    pub fn mirrored(&self) -> Lexicon {
        Lexicon { valence: self.valence.iter().map(|(w, v)| (w.clone(), -v)).collect(), ..self.clone() }
    }

    fn is_negation(&self, word: &str) -> bool {
        self.negations.contains(word) || word.ends_with("n't")
    }
}

/// Lowercased whitespace words with surrounding punctuation trimmed;
/// apostrophes inside a word are kept so "isn't" stays one word.
pub fn sentiment_words(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric() && c != '\'').replace('’', "'").to_lowercase())
        .filter(|w| !w.is_empty())
        .collect()
}

/// Raw valence sum before normalisation.
pub fn valence_sum(text: &str, lexicon: &Lexicon) -> f64 {
    let words = sentiment_words(text);
    let mut total = 0.0;
    for (i, w) in words.iter().enumerate() {
        let Some(&base) = lexicon.valence.get(w) else { continue };
        let mut v = base;
        if i > 0 {
            if let Some(&dir) = lexicon.boosters.get(&words[i - 1]) {
                v += v.signum() * dir * BOOSTER_INCREMENT;
            }
        }
        if words[i.saturating_sub(NEGATION_WINDOW)..i].iter().any(|p| lexicon.is_negation(p)) {
            v = -v;
        }
        total += v;
    }
    total
}

pub fn sentiment(text: &str, lexicon: &Lexicon) -> SentimentScore {
    let s = valence_sum(text, lexicon);
    let compound = if s == 0.0 { 0.0 } else { (s / (s * s + COMPOUND_ALPHA).sqrt()).clamp(-1.0, 1.0) };
    SentimentScore { compound, label: label_for(compound) }
}
