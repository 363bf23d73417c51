use serde::{Deserialize, Serialize};

use super::types::{PlayerId, RoleAssignment, NUM_PLAYERS};
use super::RuleError;

/// Who voted for whom: row `i` holds voter `i`'s ballot.
///
/// Rows are one-hot and the diagonal is zero; construction rejects anything
/// else, so every `VoteMatrix` in circulation is legal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[[u8; NUM_PLAYERS]; NUM_PLAYERS]", into = "[[u8; NUM_PLAYERS]; NUM_PLAYERS]")]
pub struct VoteMatrix([[u8; NUM_PLAYERS]; NUM_PLAYERS]);

impl VoteMatrix {
    pub fn new(rows: [[u8; NUM_PLAYERS]; NUM_PLAYERS]) -> Result<Self, RuleError> {
        for (i, row) in rows.iter().enumerate() {
            let voter = i + 1;
            if row[i] != 0 {
                return Err(RuleError::InvalidVoteMatrix(format!("player {voter} voted for themselves")));
            }
            if row.iter().any(|v| *v > 1) {
                return Err(RuleError::InvalidVoteMatrix(format!("player {voter} cast a multi-vote")));
            }
            let cast: u32 = row.iter().map(|v| u32::from(*v)).sum();
            if cast != 1 {
                return Err(RuleError::InvalidVoteMatrix(format!(
                    "player {voter} cast {cast} votes, expected exactly 1"
                )));
            }
        }
        Ok(VoteMatrix(rows))
    }

    /// Builds the matrix from each seat's chosen target, in seat order.
    pub fn from_targets(targets: [PlayerId; NUM_PLAYERS]) -> Result<Self, RuleError> {
        let mut rows = [[0u8; NUM_PLAYERS]; NUM_PLAYERS];
        for (i, t) in targets.iter().enumerate() {
            rows[i][t.slot()] = 1;
        }
        VoteMatrix::new(rows)
    }

    pub fn rows(&self) -> &[[u8; NUM_PLAYERS]; NUM_PLAYERS] {
        &self.0
    }

    /// The seat `voter` voted for.
    pub fn target(&self, voter: PlayerId) -> PlayerId {
        let slot = self.0[voter.slot()]
            .iter()
            .position(|v| *v == 1)
            .expect("validated row has exactly one vote");
        PlayerId::from_slot(slot)
    }

    /// Civilian ballots that did not land on the spy.
    pub fn wrong_civilian_votes(&self, assignment: &RoleAssignment) -> u32 {
        assignment
            .civilians()
            .iter()
            .filter(|c| self.target(**c) != assignment.spy())
            .count() as u32
    }
}

impl TryFrom<[[u8; NUM_PLAYERS]; NUM_PLAYERS]> for VoteMatrix {
    type Error = RuleError;

    fn try_from(rows: [[u8; NUM_PLAYERS]; NUM_PLAYERS]) -> Result<Self, Self::Error> {
        VoteMatrix::new(rows)
    }
}

impl From<VoteMatrix> for [[u8; NUM_PLAYERS]; NUM_PLAYERS] {
    fn from(m: VoteMatrix) -> Self {
        m.0
    }
}

/// Votes received per seat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tallies(pub [u32; NUM_PLAYERS]);

impl Tallies {
    pub fn get(&self, p: PlayerId) -> u32 {
        self.0[p.slot()]
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Every seat sharing the highest tally, ascending.
    pub fn top(&self) -> Vec<PlayerId> {
        let max = self.0.iter().copied().max().unwrap_or(0);
        PlayerId::ALL.into_iter().filter(|p| self.get(*p) == max).collect()
    }
}

/// Column sums of the vote matrix.
pub fn tally_votes(m: &VoteMatrix) -> Tallies {
    let mut t = [0u32; NUM_PLAYERS];
    for row in m.rows() {
        for (k, v) in row.iter().enumerate() {
            t[k] += u32::from(*v);
        }
    }
    Tallies(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeKind {
    /// The spy alone drew the most votes: civilians win.
    SpyOut,
    /// A civilian alone drew the most votes: the spy wins.
    CivilianOut,
    /// The top tally is shared.
    Draw,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameOutcome {
    pub kind: OutcomeKind,
    pub tallies: Tallies,
    pub top_voted: Vec<PlayerId>,
}

pub fn determine_outcome(tallies: &Tallies, assignment: &RoleAssignment) -> GameOutcome {
    let top_voted = tallies.top();
    let kind = match top_voted.as_slice() {
        [only] if assignment.is_spy(*only) => OutcomeKind::SpyOut,
        [_] => OutcomeKind::CivilianOut,
        _ => OutcomeKind::Draw,
    };
    GameOutcome {
        kind,
        tallies: *tallies,
        top_voted,
    }
}
