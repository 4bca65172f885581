//! Rule-based stand-in for a chat model, for offline runs.
//!
//! It recognizes the decomposition and compression system prompts and
//! answers them with simple text rules; any other request gets the text
//! after the instruction's colon echoed back.

use std::collections::HashSet;

use crate::error::Result;
use crate::llm::prompts::{stopwords, COMPRESSION_PROMPT, DECOMPOSITION_PROMPT, DOCUMENT_SEPARATOR};
use crate::llm::ChatModel;
use crate::sparse::tokenize;

const MAX_SENTENCES: usize = 6;

#[derive(Debug, Default, Clone, Copy)]
pub struct HeuristicChat;

impl ChatModel for HeuristicChat {
    fn complete(&self, system: &str, user: &str) -> Result<String> {
        if system == DECOMPOSITION_PROMPT {
            let parts = heuristic_split(user);
            return Ok(serde_json::to_string(&parts).expect("strings serialize"));
        }
        if system == COMPRESSION_PROMPT {
            if let Some((question, docs)) = parse_compression_message(user) {
                return Ok(salient_sentences(question, &docs).join(" "));
            }
            return Ok(String::new());
        }
        Ok(user.split_once(": ").map_or(user, |(_, rest)| rest).to_owned())
    }
}

/// Splits on top-level `"; "` and the word `and`; returns `[q]` when fewer
/// than two non-empty parts result.
pub fn heuristic_split(query: &str) -> Vec<String> {
    let mut parts = Vec::new();
    let mut current = String::new();
    let mut depth = 0usize;
    let mut quote: Option<char> = None;
    let chars: Vec<char> = query.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match (quote, c) {
            (Some(q), c) if c == q => quote = None,
            (Some(_), _) => {}
            (None, '"') => quote = Some('"'),
            (None, '(' | '[' | '{') => depth += 1,
            (None, ')' | ']' | '}') => depth = depth.saturating_sub(1),
            _ => {}
        }
        if quote.is_none() && depth == 0 {
            if c == ';' && chars.get(i + 1) == Some(&' ') {
                parts.push(std::mem::take(&mut current));
                i += 2;
                continue;
            }
            if c == ' ' && is_and_at(&chars, i + 1) {
                parts.push(std::mem::take(&mut current));
                i += 5;
                continue;
            }
        }
        current.push(c);
        i += 1;
    }
    parts.push(current);
    let parts: Vec<String> = parts
        .into_iter()
        .map(|p| p.trim().to_owned())
        .filter(|p| !p.is_empty())
        .collect();
    if parts.len() < 2 {
        vec![query.trim().to_owned()]
    } else {
        parts
    }
}

fn is_and_at(chars: &[char], i: usize) -> bool {
    let word: String = chars.iter().skip(i).take(3).collect();
    word.eq_ignore_ascii_case("and") && chars.get(i + 3) == Some(&' ')
}

fn parse_compression_message(user: &str) -> Option<(&str, Vec<&str>)> {
    let rest = user.strip_prefix("Question: ")?;
    let (question, docs) = rest.split_once("\n\nDocuments:\n")?;
    Some((question, docs.split(DOCUMENT_SEPARATOR).collect()))
}

/// Sentences (in document order) sharing at least one non-stopword term
/// with `question`, at most six.
pub fn salient_sentences<'a>(question: &str, docs: &[&'a str]) -> Vec<&'a str> {
    let stop: HashSet<&str> = stopwords().collect();
    let terms: HashSet<String> = tokenize(question)
        .into_iter()
        .filter(|t| !stop.contains(t.as_str()))
        .collect();
    docs.iter()
        .flat_map(|d| split_sentences(d))
        .filter(|s| tokenize(s).iter().any(|t| terms.contains(t)))
        .take(MAX_SENTENCES)
        .collect()
}

/// Splits after `.`, `!` or `?` when followed by whitespace or end of text.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if matches!(c, '.' | '!' | '?') {
            let boundary = iter.peek().is_none_or(|(_, n)| n.is_whitespace());
            if boundary {
                let end = i + c.len_utf8();
                let s = text[start..end].trim();
                if !s.is_empty() {
                    out.push(s);
                }
                start = end;
            }
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::prompts::compression_message;

    #[test]
    fn split_on_and_and_semicolon() {
        assert_eq!(
            heuristic_split("Who founded Acme and where is it based?"),
            ["Who founded Acme", "where is it based?"]
        );
        assert_eq!(heuristic_split("first part; second part"), ["first part", "second part"]);
        assert_eq!(heuristic_split("What is the capital of Korea?"), ["What is the capital of Korea?"]);
    }

    #[test]
    fn nested_and_is_not_split() {
        let q = "Who wrote \"War and Peace\"?";
        assert_eq!(heuristic_split(q), [q]);
        let q = "Which firm (sales and marketing) grew?";
        assert_eq!(heuristic_split(q), [q]);
        assert_eq!(heuristic_split("Is Anderson here?"), ["Is Anderson here?"]);
    }

    #[test]
    fn sentence_selection_fixture() {
        let docs = [
            "The weather was mild. Seoul is the capital of Korea. Markets opened late.",
            "Tigers sleep most of the day.",
        ];
        assert_eq!(salient_sentences("capital of Korea", &docs), ["Seoul is the capital of Korea."]);
    }

    #[test]
    fn caps_at_six() {
        let doc = "Cats purr. Cats nap. Cats hunt. Cats play. Cats eat. Cats climb. Cats hide.";
        assert_eq!(salient_sentences("cats", &[doc]).len(), 6);
    }

    #[test]
    fn compression_request_dispatch() {
        let msg = compression_message("capital of Korea", &["Dogs bark.", "Seoul is the capital of Korea."]);
        let reply = HeuristicChat.complete(COMPRESSION_PROMPT, &msg).unwrap();
        assert_eq!(reply, "Seoul is the capital of Korea.");
    }

    #[test]
    fn sentence_splitter() {
        assert_eq!(split_sentences("A b. C d? E 3.5 f"), ["A b.", "C d?", "E 3.5 f"]);
    }
}
