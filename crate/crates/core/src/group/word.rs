//! Word syntax: generator names with a trailing `'` for inverses, `1` for the
//! identity. Letters are separated by whitespace or `.`; when every generator
//! name is a single character, juxtaposition (`aba'`) is accepted too.

use super::Letter;
use crate::error::{Error, Result};

pub(super) fn validate_names(names: &[String]) -> Result<()> {
    if names.is_empty() {
        return Err(Error::InvalidGroup("at least one generator is required".into()));
    }
    if names.len() > Letter::MAX_GENERATORS {
        return Err(Error::InvalidGroup(format!(
            "at most {} generators are supported",
            Letter::MAX_GENERATORS
        )));
    }
    for (i, n) in names.iter().enumerate() {
        let mut chars = n.chars();
        let ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !ok {
            return Err(Error::InvalidGroup(format!("bad generator name {n:?}")));
        }
        if names[..i].contains(n) {
            return Err(Error::InvalidGroup(format!("duplicate generator name {n:?}")));
        }
    }
    Ok(())
}

fn lookup(names: &[String], name: &str, word: &str) -> Result<usize> {
    names.iter().position(|n| n == name).ok_or_else(|| Error::InvalidWord {
        word: word.to_string(),
        reason: format!("unknown generator {name:?}"),
    })
}

pub(super) fn parse_letters(names: &[String], single_char: bool, s: &str) -> Result<Vec<Letter>> {
    let trimmed = s.trim();
    if trimmed.is_empty() {
        return Err(Error::InvalidWord {
            word: s.to_string(),
            reason: "empty word (write 1 for the identity)".into(),
        });
    }
    let mut letters = Vec::new();
    for token in trimmed
        .split(|c: char| c.is_whitespace() || c == '.')
        .filter(|t| !t.is_empty())
    {
        if token == "1" {
            continue;
        }
        let base = token.trim_end_matches('\'');
        let primes = token.len() - base.len();
        if !base.is_empty() && primes <= 1 && names.iter().any(|n| n == base) {
            letters.push(Letter::new(lookup(names, base, s)?, primes == 1));
            continue;
        }
        if !single_char {
            return Err(Error::InvalidWord {
                word: s.to_string(),
                reason: format!("unknown token {token:?}"),
            });
        }
        let mut chars = token.chars().peekable();
        while let Some(c) = chars.next() {
            if c == '\'' {
                return Err(Error::InvalidWord {
                    word: s.to_string(),
                    reason: "dangling inverse mark".into(),
                });
            }
            let idx = lookup(names, &c.to_string(), s)?;
            let inverse = chars.peek() == Some(&'\'');
            if inverse {
                chars.next();
            }
            letters.push(Letter::new(idx, inverse));
        }
    }
    Ok(letters)
}

pub(super) fn format_letters(names: &[String], single_char: bool, letters: &[Letter]) -> String {
    if letters.is_empty() {
        return "1".to_string();
    }
    let parts: Vec<String> = letters
        .iter()
        .map(|l| {
            let mut s = names[l.generator()].clone();
            if l.is_inverse() {
                s.push('\'');
            }
            s
        })
        .collect();
    parts.join(if single_char { "" } else { " " })
}
