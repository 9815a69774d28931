//! Closed-class word lists shared by LF alignment, stripping and type derivation.

pub const DETERMINERS: &[&str] = &["a", "an", "the"];

pub const WH_WORDS: &[&str] = &["who", "whom", "what", "which"];

/// Auxiliaries whose presence directly before a participle marks passive voice.
pub const PASSIVE_AUX: &[&str] = &["was", "were", "is", "are", "be", "been"];

pub const PUNCTUATION: &[&str] = &[".", "?", "!", ","];

pub fn is_determiner(token: &str) -> bool {
    contains_ci(DETERMINERS, token)
}

pub fn is_wh_word(token: &str) -> bool {
    contains_ci(WH_WORDS, token)
}

pub fn is_passive_aux(token: &str) -> bool {
    contains_ci(PASSIVE_AUX, token)
}

pub fn is_punctuation(token: &str) -> bool {
    PUNCTUATION.contains(&token)
}

fn contains_ci(list: &[&str], token: &str) -> bool {
    list.iter().any(|w| w.eq_ignore_ascii_case(token))
}

/// Whitespace tokenization, the benchmark convention.
pub fn tokenize(sentence: &str) -> Vec<String> {
    sentence.split_whitespace().map(str::to_string).collect()
}
