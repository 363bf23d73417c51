//! Structured output handling.
//!
//! The judgment block is one `PLAYER <k>: <word>` line per seat followed by
//! `SPY: <k>`. Reasoning text may surround it; the block used is the last
//! `SPY:` line together with the run of seat lines directly above it.

use std::sync::LazyLock;

use rand::seq::IndexedRandom;
use regex::Regex;

use crate::game::{Judgment, PlayerId, NUM_PLAYERS};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("no SPY line found")]
    MissingBlock,
    #[error("judgment block has no line for player {0}")]
    MissingSeat(u8),
    #[error("judgment block lists player {0} twice")]
    DuplicateSeat(u8),
    #[error("judgment block names player {0}, outside 1..=4")]
    SeatOutOfRange(i64),
    #[error("SPY index {0} is outside 1..=4")]
    SpyOutOfRange(i64),
    #[error("guess for player {0} is empty")]
    EmptyGuess(u8),
    #[error("no description text")]
    EmptyDescription,
    #[error("no player number in vote")]
    NoVote,
    #[error("vote names more than one player number")]
    AmbiguousVote,
}

static SEAT_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^(?:player|玩家)\s*(?:no\.?\s*)?(-?\d+)\s*(?:号\s*(?:玩家)?)?\s*(?:\([^)]*\)|（[^）]*）)?\s*[:：]\s*(.*)$")
        .unwrap()
});
static SPY_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^(?:spy|卧底)\s*[:：]\s*(?:(?:player|玩家)\s*(?:no\.?\s*)?)?(-?\d+)\s*(?:号\s*(?:玩家)?)?\s*[.。]?$")
        .unwrap()
});
static DESCRIPTION_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^(?:description|描述)\s*[:：]\s*(.*)$").unwrap());
static NUMBER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"-?\d+").unwrap());

/// Strips markdown emphasis and list bullets an LLM may wrap lines in.
fn clean_line(line: &str) -> String {
    let s = line.replace(['*', '`'], "");
    let s = s.trim();
    let s = s.strip_prefix("- ").unwrap_or(s);
    s.trim().to_string()
}

fn trim_guess(raw: &str) -> String {
    raw.trim()
        .trim_end_matches(['.', ',', ';', '。', '，', '；'])
        .trim()
        .to_string()
}

pub fn parse_judgment(raw: &str, seat: PlayerId, round: u32) -> Result<Judgment, ParseError> {
    let lines: Vec<String> = raw.lines().map(clean_line).collect();
    let (spy_idx, spy_num) = lines
        .iter()
        .enumerate()
        .rev()
        .find_map(|(i, l)| SPY_LINE.captures(l).map(|c| (i, c[1].parse::<i64>().unwrap_or(i64::MAX))))
        .ok_or(ParseError::MissingBlock)?;

    let mut guesses: [Option<String>; NUM_PLAYERS] = Default::default();
    for line in lines[..spy_idx].iter().rev() {
        if line.is_empty() {
            continue;
        }
        let Some(c) = SEAT_LINE.captures(line) else { break };
        let n: i64 = c[1].parse().unwrap_or(i64::MAX);
        let p = PlayerId::from_number(n).map_err(|_| ParseError::SeatOutOfRange(n))?;
        if guesses[p.slot()].is_some() {
            return Err(ParseError::DuplicateSeat(p.index()));
        }
        let g = trim_guess(&c[2]);
        if g.is_empty() {
            return Err(ParseError::EmptyGuess(p.index()));
        }
        guesses[p.slot()] = Some(g);
    }
    let spy_pick = PlayerId::from_number(spy_num).map_err(|_| ParseError::SpyOutOfRange(spy_num))?;
    let mut out: [String; NUM_PLAYERS] = Default::default();
    for p in PlayerId::ALL {
        out[p.slot()] = guesses[p.slot()].take().ok_or(ParseError::MissingSeat(p.index()))?;
    }
    Ok(Judgment::new(seat, round, out, spy_pick))
}

pub fn render_judgment(j: &Judgment) -> String {
    let mut s = String::new();
    for p in PlayerId::ALL {
        s.push_str(&format!("PLAYER {}: {}\n", p, j.guess(p)));
    }
    s.push_str(&format!("SPY: {}", j.spy_pick));
    s
}

/// Final description from a chain-of-thought answer: the text after the last
/// `DESCRIPTION:` marker, or the whole answer when there is no marker.
pub fn parse_description(raw: &str) -> Result<String, ParseError> {
    let marked = raw
        .lines()
        .rev()
        .find_map(|l| DESCRIPTION_LINE.captures(&clean_line(l)).map(|c| c[1].trim().to_string()));
    let text = match marked {
        Some(t) => t,
        None => raw.trim().to_string(),
    };
    if text.is_empty() {
        Err(ParseError::EmptyDescription)
    } else {
        Ok(text)
    }
}

/// The single player number in a free-text vote. Range is checked by the referee.
pub fn parse_vote(raw: &str) -> Result<i64, ParseError> {
    let mut found: Option<i64> = None;
    for m in NUMBER.find_iter(raw) {
        let n: i64 = m.as_str().parse().unwrap_or(i64::MAX);
        match found {
            Some(prev) if prev != n => return Err(ParseError::AmbiguousVote),
            _ => found = Some(n),
        }
    }
    found.ok_or(ParseError::NoVote)
}

/// One-hot vote from a judgment: the picked spy, or a uniform random other
/// seat when the judgment names the voter itself.
pub fn decide_vote(judgment: &Judgment, seat: PlayerId, vote_seed: u64) -> PlayerId {
    if judgment.self_suspected || judgment.spy_pick == seat {
        let mut rng = seed::rng(vote_seed);
        *seat.others().choose(&mut rng).expect("three other seats")
    } else {
        judgment.spy_pick
    }
}
