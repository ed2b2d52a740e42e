//! Tokenization, sentence splitting and the bundled stopword list.

use std::collections::HashSet;
use std::sync::OnceLock;

const STOPWORDS_ASSET: &str = include_str!("../assets/stopwords.txt");

/// Lowercased maximal alphanumeric runs. Anything that is not alphanumeric
/// separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    token_spans(text)
        .into_iter()
        .map(|(start, end)| text[start..end].chars().flat_map(char::to_lowercase).collect())
        .collect()
}

/// Byte ranges `[start, end)` of every token in `text`, in order.
pub fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            spans.push((s, i));
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

/// Splits after `.`, `!` or `?` followed by whitespace. Fragments holding
/// fewer than three tokens are merged into the preceding sentence (or the
/// following one when there is no preceding sentence).
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut raw: Vec<&str> = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((_, ch)) = chars.next() {
        if matches!(ch, '.' | '!' | '?') {
            if let Some(&(j, next)) = chars.peek() {
                if next.is_whitespace() {
                    raw.push(&text[start..j]);
                    start = j;
                }
            }
        }
    }
    raw.push(&text[start..]);

    let mut out: Vec<String> = Vec::new();
    let mut pending: Option<String> = None;
    for piece in raw {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        let mut piece = piece.to_string();
        if let Some(p) = pending.take() {
            piece = format!("{p} {piece}");
        }
        if tokenize(&piece).len() < 3 {
            match out.last_mut() {
                Some(prev) => {
                    prev.push(' ');
                    prev.push_str(&piece);
                }
                None => pending = Some(piece),
            }
        } else {
            out.push(piece);
        }
    }
    if let Some(p) = pending {
        out.push(p);
    }
    out
}

pub fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS_ASSET
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

pub fn is_stopword(token: &str) -> bool {
    stopwords().contains(token)
}

/// Tokens with stopwords and purely numeric tokens removed.
pub fn content_tokens(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| !is_stopword(t) && !t.chars().all(|c| c.is_numeric()))
        .collect()
}
