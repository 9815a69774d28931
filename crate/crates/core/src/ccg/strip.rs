//! Function-word stripping. The same rules are exported as a JSON sidecar so
//! that external embedding exporters select identical content positions.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexical;

/// Stripping configuration.
///
/// Rules, applied per token:
/// - a token in `always` (case-insensitive) or in `punctuation` is removed;
/// - `complementizer` is kept (as a relative pronoun) when the previous token
///   is capitalized or the token two back is a determiner, otherwise removed;
/// - `infinitival` is removed when the next token is a lowercase word that is
///   neither a determiner nor punctuation, otherwise kept (dative or stranded).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionWords {
    pub always: Vec<String>,
    pub punctuation: Vec<String>,
    pub determiners: Vec<String>,
    pub complementizer: String,
    pub infinitival: String,
}

impl Default for FunctionWords {
    fn default() -> Self {
        let s = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect();
        FunctionWords {
            always: s(&["a", "an", "the", "was", "were", "is", "are", "did", "does", "do", "by"]),
            punctuation: s(lexical::PUNCTUATION),
            determiners: s(lexical::DETERMINERS),
            complementizer: "that".into(),
            infinitival: "to".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stripped {
    pub content: Vec<String>,
    /// `alignment[i]` is the original position of content token `i`.
    pub alignment: Vec<usize>,
}

impl FunctionWords {
    pub fn load(path: &Path) -> Result<FunctionWords> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    fn in_list(list: &[String], tok: &str) -> bool {
        list.iter().any(|w| w.eq_ignore_ascii_case(tok))
    }

    pub fn is_relative_that(&self, tokens: &[String], i: usize) -> bool {
        if !tokens[i].eq_ignore_ascii_case(&self.complementizer) || i == 0 {
            return false;
        }
        let prev_cap = tokens[i - 1].chars().next().is_some_and(char::is_uppercase);
        let det_two_back = i >= 2 && Self::in_list(&self.determiners, &tokens[i - 2]);
        prev_cap || det_two_back
    }

    pub fn is_infinitival_to(&self, tokens: &[String], i: usize) -> bool {
        if !tokens[i].eq_ignore_ascii_case(&self.infinitival) {
            return false;
        }
        match tokens.get(i + 1) {
            Some(next) => {
                next.chars().all(|c| c.is_alphabetic())
                    && next.chars().next().is_some_and(char::is_lowercase)
                    && !Self::in_list(&self.determiners, next)
                    && !Self::in_list(&self.punctuation, next)
            }
            None => false,
        }
    }

    pub fn is_function_word(&self, tokens: &[String], i: usize) -> bool {
        let t = &tokens[i];
        if Self::in_list(&self.always, t) || self.punctuation.iter().any(|p| p == t) {
            return true;
        }
        if t.eq_ignore_ascii_case(&self.complementizer) {
            return !self.is_relative_that(tokens, i);
        }
        self.is_infinitival_to(tokens, i)
    }

    pub fn strip(&self, tokens: &[String]) -> Stripped {
        let mut content = Vec::new();
        let mut alignment = Vec::new();
        for i in 0..tokens.len() {
            if !self.is_function_word(tokens, i) {
                content.push(tokens[i].clone());
                alignment.push(i);
            }
        }
        Stripped { content, alignment }
    }
}

pub fn strip_function_words(tokens: &[String]) -> Stripped {
    FunctionWords::default().strip(tokens)
}
