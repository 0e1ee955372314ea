use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CasingClass {
    Snake,
    UpperCamel,
    LowerCamel,
    Other,
}

/// Classifies an identifier by its casing convention.
///
/// Leading and trailing underscores are ignored, so `__init__` is judged as
/// `init` and `_private_name` as `private_name`. A lowercase word on its own
/// counts as snake case; a single capitalized word (`Foo`) and all-caps names
/// (`MAX_SIZE`, `URL`) fall into `Other`.
pub fn classify_casing(identifier: &str) -> CasingClass {
    let core = identifier.trim_matches('_');
    if core.is_empty() {
        return CasingClass::Other;
    }
    if !core.chars().any(char::is_uppercase) {
        return CasingClass::Snake;
    }
    if core.contains('_') || !core.chars().any(char::is_lowercase) {
        return CasingClass::Other;
    }
    let first = core.chars().next().expect("non-empty");
    if first.is_lowercase() {
        return CasingClass::LowerCamel;
    }
    if first.is_uppercase() && word_count(core) >= 2 {
        return CasingClass::UpperCamel;
    }
    CasingClass::Other
}

/// Counts case-delimited words; a run of capitals is one word, and its last
/// capital starts a new word when a lowercase letter follows (`XMLParser`).
fn word_count(s: &str) -> usize {
    let chars: Vec<char> = s.chars().collect();
    let mut words = 1;
    for i in 1..chars.len() {
        if !chars[i].is_uppercase() {
            continue;
        }
        let prev = chars[i - 1];
        let next_lower = chars.get(i + 1).is_some_and(|c| c.is_lowercase());
        if !prev.is_uppercase() || next_lower {
            words += 1;
        }
    }
    words
}
