use serde::{Deserialize, Serialize};

use crate::game::{Phase, PlayerId};
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationKind {
    KeywordLeak,
    OverLimit,
    BadFormat,
    SelfVote,
    OutOfRange,
    Timeout,
}

impl ViolationKind {
    pub fn name(self) -> &'static str {
        match self {
            ViolationKind::KeywordLeak => "KeywordLeak",
            ViolationKind::OverLimit => "OverLimit",
            ViolationKind::BadFormat => "BadFormat",
            ViolationKind::SelfVote => "SelfVote",
            ViolationKind::OutOfRange => "OutOfRange",
            ViolationKind::Timeout => "Timeout",
        }
    }
}

impl std::fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One rejected agent output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationRecord {
    pub player: PlayerId,
    pub round: u32,
    pub phase: Phase,
    pub kind: ViolationKind,
    pub attempt: u32,
    pub raw_output: String,
}

/// Checks a description against the holder's keyword and the word limit.
pub fn validate_description(text: &str, keyword: &str, limit: u32) -> Result<(), ViolationKind> {
    if text.trim().is_empty() {
        return Err(ViolationKind::BadFormat);
    }
    if text::contains_keyword(text, keyword) {
        return Err(ViolationKind::KeywordLeak);
    }
    if text::word_units(text) > limit as usize {
        return Err(ViolationKind::OverLimit);
    }
    Ok(())
}

pub fn validate_vote(target: i64, voter: PlayerId) -> Result<PlayerId, ViolationKind> {
    let target = PlayerId::from_number(target).map_err(|_| ViolationKind::OutOfRange)?;
    if target == voter {
        return Err(ViolationKind::SelfVote);
    }
    Ok(target)
}
