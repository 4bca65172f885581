//! System prompts sent to the chat model, stored byte-for-byte under `prompts/`.

pub const DECOMPOSITION_PROMPT: &str = include_str!("../../prompts/decomposition.txt");

pub const COMPRESSION_PROMPT: &str = include_str!("../../prompts/compression.txt");

/// System prompt for the single-call generative baselines.
pub const GENERATION_SYSTEM_PROMPT: &str = "You are a helpful assistant.";

pub const HYDE_INSTRUCTION: &str = "Write a passage that answers the question: ";

pub const QUERY2DOC_INSTRUCTION: &str = "Write a passage that answers the following query: ";

pub const DOCUMENT_SEPARATOR: &str = "\n---\n";

/// Function words ignored by the heuristic compressor.
pub fn stopwords() -> impl Iterator<Item = &'static str> {
    include_str!("../../prompts/stopwords.txt")
        .lines()
        .map(str::trim)
        .filter(|w| !w.is_empty())
}

/// `Question: {q}\n\nDocuments:\n{d1}\n---\n{d2}...`
pub fn compression_message<S: AsRef<str>>(question: &str, documents: &[S]) -> String {
    let mut msg = format!("Question: {question}\n\nDocuments:\n");
    for (i, d) in documents.iter().enumerate() {
        if i > 0 {
            msg.push_str(DOCUMENT_SEPARATOR);
        }
        msg.push_str(d.as_ref());
    }
    msg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stopword_fixture_has_25_words() {
        let words: Vec<_> = stopwords().collect();
        assert_eq!(words.len(), 25);
        assert!(words.contains(&"the") && words.contains(&"of"));
    }

    #[test]
    fn prompts_match_table() {
        assert!(DECOMPOSITION_PROMPT.starts_with(
            "You are a helpful assistant that breaks down complex, multi-hop questions"
        ));
        assert!(DECOMPOSITION_PROMPT.contains(
            r#"Sub-queries: ["Who created The Painter's Studio?", "When was the creator of The Painter's Studio born?"]"#
        ));
        assert!(DECOMPOSITION_PROMPT.ends_with(r#"Sub-queries: ["What is the capital of Korea?"]"#));
        assert_eq!(
            COMPRESSION_PROMPT,
            "You are a helpful assistant that concisely summarizes only the key information from the \
             source documents that is relevant to answering the question.\nExclude unrelated content \
             and avoid using pronouns."
        );
    }

    #[test]
    fn message_layout() {
        assert_eq!(
            compression_message("q?", &["a", "b"]),
            "Question: q?\n\nDocuments:\na\n---\nb"
        );
    }
}
