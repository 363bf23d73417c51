use std::fmt;

use serde::{Deserialize, Serialize};

use super::types::RoleAssignment;
use super::vote::{GameOutcome, OutcomeKind, VoteMatrix};
use super::RuleError;

/// An exact count ratio, kept as integers so table values reproduce exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ratio {
    pub hits: u64,
    pub total: u64,
}

impl Ratio {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            f64::NAN
        } else {
            self.hits as f64 / self.total as f64
        }
    }

    pub fn percent(&self) -> f64 {
        self.fraction() * 100.0
    }
}

impl fmt::Display for Ratio {
    /// One decimal place, trailing `.0` dropped: `81%`, `16.7%`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.total == 0 {
            return f.write_str("n/a");
        }
        let tenths = (self.percent() * 10.0).round() as i64;
        if tenths % 10 == 0 {
            write!(f, "{}%", tenths / 10)
        } else {
            write!(f, "{}.{}%", tenths / 10, tenths % 10)
        }
    }
}

/// Civilian winning rate: games where the spy alone was voted out, over all
/// scored games (draws included in the denominator).
pub fn compute_cwr<'a>(outcomes: impl IntoIterator<Item = &'a GameOutcome>) -> Result<Ratio, RuleError> {
    let mut r = Ratio { hits: 0, total: 0 };
    for o in outcomes {
        r.total += 1;
        if o.kind == OutcomeKind::SpyOut {
            r.hits += 1;
        }
    }
    if r.total == 0 {
        return Err(RuleError::EmptyInput("compute_cwr"));
    }
    Ok(r)
}

/// Civilian miss rate: civilian ballots not cast on the spy, over all
/// civilian ballots (three per game).
pub fn compute_cmr<'a>(
    records: impl IntoIterator<Item = (&'a VoteMatrix, &'a RoleAssignment)>,
) -> Result<Ratio, RuleError> {
    let mut r = Ratio { hits: 0, total: 0 };
    for (votes, assignment) in records {
        r.total += 3;
        r.hits += u64::from(votes.wrong_civilian_votes(assignment));
    }
    if r.total == 0 {
        return Err(RuleError::EmptyInput("compute_cmr"));
    }
    Ok(r)
}

/// What the metrics need from one completed game.
#[derive(Debug, Clone, Copy)]
pub struct ScoredGame<'a> {
    pub outcome: &'a GameOutcome,
    pub votes: &'a VoteMatrix,
    pub assignment: &'a RoleAssignment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub games: u64,
    pub spy_out: u64,
    pub civilian_out: u64,
    pub draw: u64,
    /// Games that ended in a terminal violation; excluded from every rate.
    pub aborted: u64,
    pub cwr: Ratio,
    pub cmr: Ratio,
    /// Index `k` counts games with exactly `k` wrong civilian votes.
    pub ticket_histogram: [u64; 4],
}

impl MetricsReport {
    pub fn from_games<'a>(games: impl IntoIterator<Item = ScoredGame<'a>>, aborted: u64) -> Self {
        let mut report = MetricsReport {
            games: 0,
            spy_out: 0,
            civilian_out: 0,
            draw: 0,
            aborted,
            cwr: Ratio { hits: 0, total: 0 },
            cmr: Ratio { hits: 0, total: 0 },
            ticket_histogram: [0; 4],
        };
        for g in games {
            report.games += 1;
            match g.outcome.kind {
                OutcomeKind::SpyOut => report.spy_out += 1,
                OutcomeKind::CivilianOut => report.civilian_out += 1,
                OutcomeKind::Draw => report.draw += 1,
            }
            let wrong = g.votes.wrong_civilian_votes(g.assignment);
            report.ticket_histogram[wrong as usize] += 1;
            report.cmr.hits += u64::from(wrong);
            report.cmr.total += 3;
        }
        report.cwr = Ratio {
            hits: report.spy_out,
            total: report.games,
        };
        report
    }
}
