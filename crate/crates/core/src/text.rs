//! Text normalization shared by the referee checks and prompt masking.

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

/// Prompt language. Chinese and English catalogues ship with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    Zh,
}

impl Language {
    pub fn code(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::Zh => "zh",
        }
    }

    /// Chinese when any of the given words contains CJK script, English otherwise.
    pub fn detect<'a>(words: impl IntoIterator<Item = &'a str>) -> Language {
        if words.into_iter().any(|w| w.chars().any(is_cjk)) {
            Language::Zh
        } else {
            Language::En
        }
    }
}

impl std::str::FromStr for Language {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "en" | "english" => Ok(Language::En),
            "zh" | "chinese" | "cn" => Ok(Language::Zh),
            other => Err(format!("unknown language `{other}`")),
        }
    }
}

/// Characters written without inter-word spaces (Han ideographs and kana).
pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x30FF
        | 0x3400..=0x4DBF
        | 0x4E00..=0x9FFF
        | 0xF900..=0xFAFF
        | 0x20000..=0x2A6DF
        | 0x2A700..=0x2EBEF)
}

/// Collapses runs of whitespace to one ASCII space and trims.
pub fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Canonical form used for keyword-leak detection.
///
/// NFKC folds full-width forms onto their half-width counterparts, then the
/// text is lower-cased and every run of non-alphanumeric characters becomes
/// a single space. Returns the alphanumeric tokens.
fn canonical_tokens(s: &str) -> Vec<String> {
    let folded: String = s.nfkc().flat_map(char::to_lowercase).collect();
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for c in folded.chars() {
        if c.is_alphanumeric() {
            cur.push(c);
        } else if !cur.is_empty() {
            tokens.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    tokens
}

/// Normalized text for substring matching.
///
/// Scripts with spaces keep single-space word boundaries; CJK text is joined
/// without separators so that `西 瓜` still matches `西瓜`.
pub fn normalize(s: &str) -> String {
    let tokens = canonical_tokens(s);
    let mut out = String::new();
    for t in tokens {
        if let (Some(prev), Some(next)) = (out.chars().last(), t.chars().next()) {
            if !(is_cjk(prev) && is_cjk(next)) {
                out.push(' ');
            }
        }
        out.push_str(&t);
    }
    out
}

/// True when `text` contains `keyword` after normalizing both sides.
pub fn contains_keyword(text: &str, keyword: &str) -> bool {
    let kw = normalize(keyword);
    if kw.is_empty() {
        return false;
    }
    let hay = normalize(text);
    if hay.contains(&kw) {
        return true;
    }
    // Ideographic keywords also match across any separator the text inserts.
    if kw.chars().any(is_cjk) {
        let squash = |s: &str| s.chars().filter(|c| *c != ' ').collect::<String>();
        return squash(&hay).contains(&squash(&kw));
    }
    false
}

/// Counts word units: whitespace-delimited tokens for spaced scripts, single
/// characters for CJK. Tokens without any alphanumeric character (stray
/// punctuation) are not counted.
pub fn word_units(s: &str) -> usize {
    let mut count = 0;
    let mut in_token = false;
    let mut token_has_alnum = false;
    let flush = |in_token: &mut bool, has: &mut bool, count: &mut usize| {
        if *in_token && *has {
            *count += 1;
        }
        *in_token = false;
        *has = false;
    };
    for c in s.nfkc() {
        if is_cjk(c) {
            flush(&mut in_token, &mut token_has_alnum, &mut count);
            count += 1;
        } else if c.is_whitespace() {
            flush(&mut in_token, &mut token_has_alnum, &mut count);
        } else {
            in_token = true;
            token_has_alnum |= c.is_alphanumeric();
        }
    }
    flush(&mut in_token, &mut token_has_alnum, &mut count);
    count
}

/// Replaces every occurrence of `keyword` in `text` with `mask`.
///
/// Matching is case-insensitive and width-insensitive. The result never
/// satisfies [`contains_keyword`] for the same keyword unless the mask itself
/// contains it.
pub fn mask_keyword(text: &str, keyword: &str, mask: &str) -> String {
    if !contains_keyword(text, keyword) {
        return text.to_string();
    }
    let pattern = format!("(?i){}", regex::escape(keyword.trim()));
    let mut out = match regex::Regex::new(&pattern) {
        Ok(re) => re.replace_all(text, mask).into_owned(),
        Err(_) => text.to_string(),
    };
    if contains_keyword(&out, keyword) {
        // Width or separator variants: fall back to the normalized text.
        let folded: String = out.nfkc().collect();
        out = match regex::Regex::new(&pattern) {
            Ok(re) => re.replace_all(&folded, mask).into_owned(),
            Err(_) => folded,
        };
    }
    if contains_keyword(&out, keyword) {
        out = mask.to_string();
    }
    out
}
