use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::pysyntax::{apply_edits, is_keyword, parse, tokenize, Edit, TokenKind};

use super::TransformError;

/// Original identifier → normalized identifier, in order of first use.
/// Only identifiers that actually change are listed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenameMap {
    pub entries: Vec<(String, String)>,
}

impl RenameMap {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.entries.iter().find(|(from, _)| from == name).map(|(_, to)| to.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CasingOutput {
    pub text: String,
    pub map: RenameMap,
    /// Normalized names shared by two or more distinct source identifiers.
    pub collisions: Vec<String>,
}

pub fn is_dunder(name: &str) -> bool {
    name.len() > 4 && name.starts_with("__") && name.ends_with("__")
}

/// Lowercase with underscores dropped. `None` when the name is exempt or
/// the result would not be a usable identifier (empty, leading digit,
/// keyword).
pub fn normalize_identifier(name: &str) -> Option<String> {
    if is_dunder(name) || is_keyword(name) {
        return None;
    }
    let out: String = name.chars().filter(|&c| c != '_').flat_map(char::to_lowercase).collect();
    let mut chars = out.chars();
    let valid = chars.next().is_some_and(unicode_ident::is_xid_start)
        && chars.all(unicode_ident::is_xid_continue)
        && !is_keyword(&out);
    (valid && out != name).then_some(out)
}

/// Lowercases identifiers and strips their underscores, leaving dunder
/// names, keywords and string contents alone.
pub fn strip_casing(source: &str) -> Result<CasingOutput, TransformError> {
    parse(source)?;
    let tokens = tokenize(source)?;
    let mut entries: Vec<(String, String)> = Vec::new();
    let mut by_target: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
    let mut edits = Vec::new();
    for t in tokens.iter().filter(|t| t.kind == TokenKind::Name) {
        match normalize_identifier(t.text) {
            Some(to) => {
                if !entries.iter().any(|(from, _)| from == t.text) {
                    entries.push((t.text.to_string(), to.clone()));
                }
                by_target.entry(to.clone()).or_default().insert(t.text);
                edits.push(Edit::new(t.span, to));
            }
            None => {
                by_target.entry(t.text.to_string()).or_default().insert(t.text);
            }
        }
    }
    let collisions = by_target.into_iter().filter(|(_, from)| from.len() > 1).map(|(to, _)| to).collect();
    Ok(CasingOutput { text: apply_edits(source, &edits)?, map: RenameMap { entries }, collisions })
}

/// Applies the inverse of `map` to the identifiers of `text`. Exact only
/// when the casing output reported no collisions.
pub fn restore_casing(text: &str, map: &RenameMap) -> Result<String, TransformError> {
    let inverse: HashMap<&str, &str> = map.entries.iter().map(|(a, b)| (b.as_str(), a.as_str())).collect();
    let tokens = tokenize(text)?;
    let edits: Vec<Edit> = tokens
        .iter()
        .filter(|t| t.kind == TokenKind::Name)
        .filter_map(|t| inverse.get(t.text).map(|orig| Edit::new(t.span, *orig)))
        .collect();
    Ok(apply_edits(text, &edits)?)
}
