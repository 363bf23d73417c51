use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::RuleError;
use crate::seed;
use crate::text::{self, Language};

pub const NUM_PLAYERS: usize = 4;

/// A seat at the table, numbered 1 through 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct PlayerId(u8);

impl PlayerId {
    pub const ALL: [PlayerId; NUM_PLAYERS] = [PlayerId(1), PlayerId(2), PlayerId(3), PlayerId(4)];

    pub fn new(index: u8) -> Result<Self, RuleError> {
        if (1..=NUM_PLAYERS as u8).contains(&index) {
            Ok(PlayerId(index))
        } else {
            Err(RuleError::PlayerOutOfRange(i64::from(index)))
        }
    }

    /// Builds a seat from an arbitrary integer, e.g. a parsed vote.
    pub fn from_number(n: i64) -> Result<Self, RuleError> {
        u8::try_from(n)
            .ok()
            .and_then(|i| PlayerId::new(i).ok())
            .ok_or(RuleError::PlayerOutOfRange(n))
    }

    pub fn index(self) -> u8 {
        self.0
    }

    /// Zero-based position, for array indexing.
    pub fn slot(self) -> usize {
        usize::from(self.0 - 1)
    }

    pub fn from_slot(slot: usize) -> Self {
        assert!(slot < NUM_PLAYERS, "slot {slot} out of range");
        PlayerId(slot as u8 + 1)
    }

    /// The other three seats, in ascending order.
    pub fn others(self) -> [PlayerId; 3] {
        let mut out = [self; 3];
        let mut i = 0;
        for p in PlayerId::ALL {
            if p != self {
                out[i] = p;
                i += 1;
            }
        }
        out
    }
}

impl TryFrom<u8> for PlayerId {
    type Error = RuleError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        PlayerId::new(value)
    }
}

impl From<PlayerId> for u8 {
    fn from(p: PlayerId) -> u8 {
        p.0
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One civilian word, one spy word and the category both belong to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawWordGroup", into = "RawWordGroup")]
pub struct WordGroup {
    group_id: String,
    civilian_word: String,
    spy_word: String,
    category: String,
}

#[derive(Serialize, Deserialize)]
struct RawWordGroup {
    id: String,
    civilian_word: String,
    spy_word: String,
    category: String,
}

impl TryFrom<RawWordGroup> for WordGroup {
    type Error = RuleError;

    fn try_from(r: RawWordGroup) -> Result<Self, Self::Error> {
        WordGroup::new(r.id, r.civilian_word, r.spy_word, r.category)
    }
}

impl From<WordGroup> for RawWordGroup {
    fn from(g: WordGroup) -> Self {
        RawWordGroup {
            id: g.group_id,
            civilian_word: g.civilian_word,
            spy_word: g.spy_word,
            category: g.category,
        }
    }
}

impl WordGroup {
    /// Validates and whitespace-normalizes a group.
    pub fn new(
        group_id: impl Into<String>,
        civilian_word: impl AsRef<str>,
        spy_word: impl AsRef<str>,
        category: impl AsRef<str>,
    ) -> Result<Self, RuleError> {
        let group_id = group_id.into();
        let civilian_word = text::collapse_whitespace(civilian_word.as_ref());
        let spy_word = text::collapse_whitespace(spy_word.as_ref());
        let category = text::collapse_whitespace(category.as_ref());
        let bad = |why: &str| RuleError::InvalidWordGroup {
            id: group_id.clone(),
            reason: why.to_string(),
        };
        if group_id.trim().is_empty() {
            return Err(bad("empty id"));
        }
        if civilian_word.is_empty() {
            return Err(bad("empty civilian word"));
        }
        if spy_word.is_empty() {
            return Err(bad("empty spy word"));
        }
        if category.is_empty() {
            return Err(bad("empty category"));
        }
        if text::normalize(&civilian_word) == text::normalize(&spy_word) {
            return Err(bad("civilian word equals spy word"));
        }
        Ok(WordGroup {
            group_id,
            civilian_word,
            spy_word,
            category,
        })
    }

    pub fn id(&self) -> &str {
        &self.group_id
    }

    pub fn civilian_word(&self) -> &str {
        &self.civilian_word
    }

    pub fn spy_word(&self) -> &str {
        &self.spy_word
    }

    pub fn category(&self) -> &str {
        &self.category
    }

    pub fn language(&self) -> Language {
        Language::detect([self.civilian_word.as_str(), self.spy_word.as_str()])
    }
}

/// Which word each seat holds. Exactly one seat holds the spy word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleAssignment {
    words: [String; NUM_PLAYERS],
    spy: PlayerId,
}

impl RoleAssignment {
    pub fn with_spy(group: &WordGroup, spy: PlayerId) -> Self {
        let words = std::array::from_fn(|slot| {
            if slot == spy.slot() {
                group.spy_word().to_string()
            } else {
                group.civilian_word().to_string()
            }
        });
        RoleAssignment { words, spy }
    }

    pub fn word(&self, p: PlayerId) -> &str {
        &self.words[p.slot()]
    }

    pub fn words(&self) -> &[String; NUM_PLAYERS] {
        &self.words
    }

    pub fn spy(&self) -> PlayerId {
        self.spy
    }

    pub fn is_spy(&self, p: PlayerId) -> bool {
        p == self.spy
    }

    pub fn civilians(&self) -> [PlayerId; 3] {
        self.spy.others()
    }
}

/// Picks the spy seat uniformly from `seed` and hands out the words.
pub fn assign_roles(group: &WordGroup, seed: u64) -> RoleAssignment {
    let mut rng = seed::rng(seed);
    let slot = rng.random_range(0..NUM_PLAYERS);
    RoleAssignment::with_spy(group, PlayerId::from_slot(slot))
}

/// Chain-of-thought features switched on for a game.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct Ablation {
    pub judge_cot: bool,
    pub describe_cot: bool,
    pub spy_cot: bool,
}

impl Ablation {
    pub const NONE: Ablation = Ablation {
        judge_cot: false,
        describe_cot: false,
        spy_cot: false,
    };
    pub const FULL: Ablation = Ablation {
        judge_cot: true,
        describe_cot: true,
        spy_cot: true,
    };
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameConfig {
    pub num_rounds: u32,
    pub ablation: Ablation,
    pub retry_cap: u32,
    pub describe_word_limit: u32,
    pub rng_seed: u64,
    /// Prompt language; `None` follows the word group's script.
    pub language: Option<Language>,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            num_rounds: 2,
            ablation: Ablation::NONE,
            retry_cap: 3,
            describe_word_limit: 60,
            rng_seed: 0,
            language: None,
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<(), RuleError> {
        let bad = |why: &str| Err(RuleError::InvalidConfig(why.to_string()));
        if self.num_rounds < 1 {
            return bad("num_rounds must be at least 1");
        }
        if self.retry_cap < 1 {
            return bad("retry_cap must be at least 1");
        }
        if self.describe_word_limit == 0 {
            return bad("describe_word_limit must be positive");
        }
        if self.ablation.spy_cot && !self.ablation.judge_cot {
            return bad("spy_cot requires judge_cot");
        }
        if self.ablation.describe_cot && !self.ablation.judge_cot {
            return bad("describe_cot requires judge_cot");
        }
        Ok(())
    }
}

/// Step of a game at which an agent is asked for output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    RulesBrief,
    Describe,
    Judge,
    Vote,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Description {
    pub player: PlayerId,
    pub round: u32,
    pub text: String,
}

/// One seat's private guess of every seat's word, plus the spy it picked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub judge: PlayerId,
    pub round: u32,
    pub guesses: [String; NUM_PLAYERS],
    pub spy_pick: PlayerId,
    pub self_suspected: bool,
}

impl Judgment {
    pub fn new(judge: PlayerId, round: u32, guesses: [String; NUM_PLAYERS], spy_pick: PlayerId) -> Self {
        Judgment {
            judge,
            round,
            guesses,
            spy_pick,
            self_suspected: spy_pick == judge,
        }
    }

    pub fn guess(&self, p: PlayerId) -> &str {
        &self.guesses[p.slot()]
    }

    /// The seat whose guessed word differs from the other three, if the
    /// guesses split exactly 3 to 1.
    pub fn majority_outlier(&self) -> Option<PlayerId> {
        let norm: Vec<String> = self.guesses.iter().map(|g| text::normalize(g)).collect();
        let mut outlier = None;
        for (i, g) in norm.iter().enumerate() {
            let same = norm.iter().filter(|h| *h == g).count();
            if same == 1 {
                if outlier.is_some() {
                    return None;
                }
                outlier = Some(i);
            } else if same != 3 {
                return None;
            }
        }
        outlier.map(PlayerId::from_slot)
    }
}
