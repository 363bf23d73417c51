//! Versioned prompt text, one asset file per builder per language.
//!
//! Asset files are plain text: a free-form header, then `[[section]]` markers
//! each followed by that section's text. Placeholders are written
//! `{{name}}` and substituted in a single pass, so substituted values are
//! never re-expanded.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::text::Language;

/// File name and the sections it must define.
const LAYOUT: &[(&str, &[&str])] = &[
    ("system.txt", &["system"]),
    ("rules.txt", &["rules", "acknowledge"]),
    ("baseline_describe.txt", &["user"]),
    ("baseline_judge.txt", &["history", "vote"]),
    ("describe_cot.txt", &["intro", "first_round", "later_round"]),
    ("judge_cot.txt", &["intro", "history", "prior", "instruction"]),
    ("spy_cot.txt", &["instruction"]),
    ("history.txt", &["round", "description", "empty", "judgment", "guess"]),
    (
        "retry_notice.txt",
        &["notice", "KeywordLeak", "OverLimit", "BadFormat", "SelfVote", "OutOfRange", "Timeout"],
    ),
];

macro_rules! builtin_files {
    ($lang:literal) => {
        [
            ("system.txt", include_str!(concat!("../../assets/prompts/", $lang, "/system.txt"))),
            ("rules.txt", include_str!(concat!("../../assets/prompts/", $lang, "/rules.txt"))),
            (
                "baseline_describe.txt",
                include_str!(concat!("../../assets/prompts/", $lang, "/baseline_describe.txt")),
            ),
            (
                "baseline_judge.txt",
                include_str!(concat!("../../assets/prompts/", $lang, "/baseline_judge.txt")),
            ),
            ("describe_cot.txt", include_str!(concat!("../../assets/prompts/", $lang, "/describe_cot.txt"))),
            ("judge_cot.txt", include_str!(concat!("../../assets/prompts/", $lang, "/judge_cot.txt"))),
            ("spy_cot.txt", include_str!(concat!("../../assets/prompts/", $lang, "/spy_cot.txt"))),
            ("history.txt", include_str!(concat!("../../assets/prompts/", $lang, "/history.txt"))),
            ("retry_notice.txt", include_str!(concat!("../../assets/prompts/", $lang, "/retry_notice.txt"))),
        ]
    };
}

#[derive(Debug, thiserror::Error)]
pub enum CatalogueError {
    #[error("reading prompt file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("prompt file {file} is missing section [[{section}]]")]
    MissingSection { file: String, section: String },
}

/// Identifies the exact catalogue a game was played with.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CatalogueStamp {
    pub version: String,
    pub language: Language,
    /// Hex SHA-256 over every file name and content.
    pub checksum: String,
}

#[derive(Debug, Clone)]
pub struct PromptCatalogue {
    language: Language,
    version: String,
    checksum: String,
    sections: BTreeMap<(String, String), String>,
}

impl PromptCatalogue {
    /// The catalogue compiled into the crate.
    pub fn builtin(language: Language) -> Self {
        let files: Vec<(&str, &str)> = match language {
            Language::En => builtin_files!("en").to_vec(),
            Language::Zh => builtin_files!("zh").to_vec(),
        };
        Self::from_files(language, files.into_iter().map(|(n, c)| (n.to_string(), c.to_string())))
            .expect("built-in prompt catalogue is complete")
    }

    /// Loads `<dir>/<file>` for every builder file.
    pub fn load_dir(dir: &Path, language: Language) -> Result<Self, CatalogueError> {
        let mut files = Vec::new();
        for (name, _) in LAYOUT {
            let path = dir.join(name);
            let content = std::fs::read_to_string(&path).map_err(|source| CatalogueError::Io {
                path: path.display().to_string(),
                source,
            })?;
            files.push((name.to_string(), content));
        }
        Self::from_files(language, files)
    }

    fn from_files(
        language: Language,
        files: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, CatalogueError> {
        let mut hasher = Sha256::new();
        let mut sections = BTreeMap::new();
        let mut version = String::from("unversioned");
        let mut files: Vec<_> = files.into_iter().collect();
        files.sort();
        for (name, content) in &files {
            let content = content.replace("\r\n", "\n");
            hasher.update(name.as_bytes());
            hasher.update([0]);
            hasher.update(content.as_bytes());
            hasher.update([0]);
            let (header, parsed) = split_sections(&content);
            if name == "system.txt" {
                if let Some(v) = header.lines().find_map(|l| l.strip_prefix("catalogue:")) {
                    version = v.trim().to_string();
                }
            }
            for (section, body) in parsed {
                sections.insert((name.clone(), section), body);
            }
        }
        for (file, required) in LAYOUT {
            for section in *required {
                if !sections.contains_key(&(file.to_string(), section.to_string())) {
                    return Err(CatalogueError::MissingSection {
                        file: file.to_string(),
                        section: section.to_string(),
                    });
                }
            }
        }
        Ok(PromptCatalogue {
            language,
            version,
            checksum: hex::encode(hasher.finalize()),
            sections,
        })
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn stamp(&self) -> CatalogueStamp {
        CatalogueStamp {
            version: self.version.clone(),
            language: self.language,
            checksum: self.checksum.clone(),
        }
    }

    pub(crate) fn section(&self, file: &str, section: &str) -> &str {
        self.sections
            .get(&(file.to_string(), section.to_string()))
            .map(String::as_str)
            .unwrap_or_else(|| panic!("catalogue validated at load: {file} [[{section}]]"))
    }

    pub(crate) fn fill(&self, file: &str, section: &str, vars: &[(&str, &str)]) -> String {
        render(self.section(file, section), vars)
    }
}

fn split_sections(content: &str) -> (String, Vec<(String, String)>) {
    let mut header = String::new();
    let mut out: Vec<(String, String)> = Vec::new();
    for line in content.split('\n') {
        let marker = line
            .trim_end()
            .strip_prefix("[[")
            .and_then(|rest| rest.strip_suffix("]]"));
        match marker {
            Some(name) => out.push((name.to_string(), String::new())),
            None => match out.last_mut() {
                Some((_, body)) => {
                    body.push_str(line);
                    body.push('\n');
                }
                None => {
                    header.push_str(line);
                    header.push('\n');
                }
            },
        }
    }
    for (_, body) in &mut out {
        let trimmed = body.trim_matches('\n').to_string();
        *body = trimmed;
    }
    (header, out)
}

/// Single-pass `{{name}}` substitution. Unknown placeholders are kept.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        match after.find("}}") {
            Some(end) => {
                let name = &after[..end];
                match vars.iter().find(|(k, _)| *k == name) {
                    Some((_, v)) => out.push_str(v),
                    None => {
                        out.push_str("{{");
                        out.push_str(name);
                        out.push_str("}}");
                    }
                }
                rest = &after[end + 2..];
            }
            None => {
                out.push_str(&rest[start..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_is_single_pass() {
        assert_eq!(render("a {{x}} b {{y}}", &[("x", "{{y}}"), ("y", "2")]), "a {{y}} b 2");
        assert_eq!(render("{{missing}} {{", &[]), "{{missing}} {{");
    }

    #[test]
    fn builtin_catalogues_load_with_distinct_checksums() {
        let en = PromptCatalogue::builtin(Language::En);
        let zh = PromptCatalogue::builtin(Language::Zh);
        assert_eq!(en.stamp().version, "whospy-prompts v1");
        assert_ne!(en.stamp().checksum, zh.stamp().checksum);
        assert_eq!(en.stamp(), PromptCatalogue::builtin(Language::En).stamp());
    }

    #[test]
    fn load_dir_matches_builtin_and_reports_missing_sections() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/prompts/en");
        let loaded = PromptCatalogue::load_dir(&dir, Language::En).unwrap();
        assert_eq!(loaded.stamp(), PromptCatalogue::builtin(Language::En).stamp());

        let tmp = tempfile::tempdir().unwrap();
        for (name, _) in LAYOUT {
            std::fs::copy(dir.join(name), tmp.path().join(name)).unwrap();
        }
        std::fs::write(tmp.path().join("spy_cot.txt"), "header only\n").unwrap();
        let err = PromptCatalogue::load_dir(tmp.path(), Language::En).unwrap_err();
        assert!(matches!(err, CatalogueError::MissingSection { .. }), "{err}");
    }
}
