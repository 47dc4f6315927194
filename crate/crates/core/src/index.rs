//! Word-level LZ78 indexing.
//!
//! Instead of growing a phrase dictionary over characters, every distinct
//! whitespace-delimited word is registered at the position of its first
//! occurrence. Later repeats are emitted as a back-reference to that
//! position. The rendered form writes the reference as a decimal prefix
//! glued to the word (`2your`), so the indexed text stays readable.
//!
//! Whitespace runs are kept verbatim, so `decode(render(index_encode(t)))`
//! reproduces `t` byte for byte. A word that itself starts with a decimal
//! digit or with [`ESCAPE`] gets one `ESCAPE` character in front of it when
//! rendered; without it a literal `4cast` would read as a reference to
//! token 4.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// Marks a rendered word whose first character would otherwise be ambiguous.
pub const ESCAPE: char = '\x1B';

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Token {
    /// 0 for a first occurrence, otherwise the 1-based position of the
    /// token that first introduced `word`.
    #[serde(rename = "ref")]
    pub back_ref: usize,
    pub word: String,
}

impl Token {
    pub fn is_first_occurrence(&self) -> bool {
        self.back_ref == 0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IndexedMessage {
    pub tokens: Vec<Token>,
    /// Whitespace between consecutive tokens; always `tokens.len() - 1` long
    /// (or empty when there are no tokens).
    pub separators: Vec<String>,
    /// Whitespace before the first word. Holds the whole input when it has
    /// no words at all.
    pub leading: String,
    /// Whitespace after the last word.
    pub trailing: String,
}

impl IndexedMessage {
    /// Rebuilds the original text from the token stream.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.leading.len() + self.trailing.len());
        out.push_str(&self.leading);
        for (i, token) in self.tokens.iter().enumerate() {
            if i > 0 {
                out.push_str(&self.separators[i - 1]);
            }
            out.push_str(&token.word);
        }
        out.push_str(&self.trailing);
        out
    }

    /// Number of tokens that reference an earlier word.
    pub fn repeat_count(&self) -> usize {
        self.tokens.iter().filter(|t| t.back_ref > 0).count()
    }
}

struct Segments<'a> {
    leading: &'a str,
    words: Vec<&'a str>,
    separators: Vec<&'a str>,
    trailing: &'a str,
}

fn segment(text: &str) -> Segments<'_> {
    let mut words = Vec::new();
    let mut gaps = Vec::new();
    let mut run_start = 0;
    let mut in_word = false;

    for (pos, ch) in text.char_indices() {
        let ws = ch.is_whitespace();
        if in_word && ws {
            words.push(&text[run_start..pos]);
            run_start = pos;
            in_word = false;
        } else if !in_word && !ws {
            gaps.push(&text[run_start..pos]);
            run_start = pos;
            in_word = true;
        }
    }
    if in_word {
        words.push(&text[run_start..]);
        gaps.push("");
    } else {
        gaps.push(&text[run_start..]);
    }

    // gaps = [leading, sep_1, .., sep_{n-1}, trailing] when there is at
    // least one word, or [whole text] when there is none.
    if words.is_empty() {
        return Segments {
            leading: gaps[0],
            words,
            separators: Vec::new(),
            trailing: "",
        };
    }
    let trailing = gaps.pop().unwrap_or("");
    let leading = gaps.remove(0);
    Segments {
        leading,
        words,
        separators: gaps,
        trailing,
    }
}

fn needs_escape(word: &str) -> bool {
    word.chars()
        .next()
        .is_some_and(|c| c.is_ascii_digit() || c == ESCAPE)
}

pub fn index_encode(text: &str) -> IndexedMessage {
    let seg = segment(text);
    let mut first_seen: HashMap<&str, usize> = HashMap::new();
    let mut tokens = Vec::with_capacity(seg.words.len());

    for (i, word) in seg.words.iter().enumerate() {
        let back_ref = match first_seen.get(word) {
            Some(&pos) => pos,
            None => {
                first_seen.insert(word, i + 1);
                0
            }
        };
        tokens.push(Token {
            back_ref,
            word: (*word).to_string(),
        });
    }

    IndexedMessage {
        tokens,
        separators: seg.separators.iter().map(|s| s.to_string()).collect(),
        leading: seg.leading.to_string(),
        trailing: seg.trailing.to_string(),
    }
}

pub fn render(msg: &IndexedMessage) -> String {
    let body: usize = msg.tokens.iter().map(|t| t.word.len() + 4).sum();
    let gaps: usize = msg.separators.iter().map(String::len).sum();
    let mut out = String::with_capacity(body + gaps + msg.leading.len() + msg.trailing.len());

    out.push_str(&msg.leading);
    for (i, token) in msg.tokens.iter().enumerate() {
        if i > 0 {
            out.push_str(&msg.separators[i - 1]);
        }
        if token.back_ref > 0 {
            out.push_str(&token.back_ref.to_string());
        }
        if needs_escape(&token.word) {
            out.push(ESCAPE);
        }
        out.push_str(&token.word);
    }
    out.push_str(&msg.trailing);
    out
}

/// Parses a rendered text back into its token stream, validating every
/// back-reference.
pub fn parse_rendered(rendered: &str) -> Result<IndexedMessage> {
    let seg = segment(rendered);
    let mut tokens: Vec<Token> = Vec::with_capacity(seg.words.len());

    for (i, raw) in seg.words.iter().enumerate() {
        let position = i + 1;
        let malformed = |reason: &str| Error::MalformedIndex {
            position,
            reason: reason.to_string(),
        };

        let token = if let Some(rest) = raw.strip_prefix(ESCAPE) {
            Token {
                back_ref: 0,
                word: rest.to_string(),
            }
        } else if raw.starts_with(|c: char| c.is_ascii_digit()) {
            let digits_end = raw
                .find(|c: char| !c.is_ascii_digit())
                .ok_or_else(|| malformed("reference without a word"))?;
            let digits = &raw[..digits_end];
            if digits.starts_with('0') {
                return Err(malformed("reference has a leading zero"));
            }
            let back_ref: usize = digits
                .parse()
                .map_err(|_| malformed("reference does not fit in an index"))?;
            let rest = &raw[digits_end..];
            let word = rest.strip_prefix(ESCAPE).unwrap_or(rest);
            if word.is_empty() {
                return Err(malformed("reference without a word"));
            }
            if back_ref >= position {
                return Err(malformed("reference points at or past itself"));
            }
            let target = &tokens[back_ref - 1];
            if !target.is_first_occurrence() {
                return Err(malformed("reference target is itself a repeat"));
            }
            if target.word != word {
                return Err(malformed("reference target holds a different word"));
            }
            Token {
                back_ref,
                word: word.to_string(),
            }
        } else {
            Token {
                back_ref: 0,
                word: (*raw).to_string(),
            }
        };
        tokens.push(token);
    }

    Ok(IndexedMessage {
        tokens,
        separators: seg.separators.iter().map(|s| s.to_string()).collect(),
        leading: seg.leading.to_string(),
        trailing: seg.trailing.to_string(),
    })
}

/// Inverse of `render(index_encode(..))`.
pub fn decode(rendered: &str) -> Result<String> {
    parse_rendered(rendered).map(|msg| msg.to_text())
}
