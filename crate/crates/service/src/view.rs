//! What the service knows about a running game, and what one seat may see of it.

use serde::{Deserialize, Serialize};

use whospy_core::game::{Description, GameOutcome, Judgment, Phase, PlayerId, RoleAssignment, NUM_PLAYERS};
use whospy_core::referee::{AbortInfo, GameEvent, ViolationKind};
use whospy_core::text::{self, Language};

/// Replacement for a hidden keyword inside another seat's description.
pub const MASK: &str = "***";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameStatus {
    /// Waiting for human seats to join.
    Lobby,
    Running,
    Finished,
    Aborted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteCast {
    pub voter: PlayerId,
    pub target: PlayerId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pending {
    pub phase: Phase,
    pub attempt: u32,
}

/// Full game state as seen by the service. Never serialized to clients.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub status: GameStatus,
    pub assignment: RoleAssignment,
    pub category: String,
    pub language: Language,
    pub num_rounds: u32,
    pub word_limit: u32,
    pub round: u32,
    pub phase: Option<Phase>,
    pub descriptions: Vec<Description>,
    pub judgments: Vec<Judgment>,
    pub votes: Vec<VoteCast>,
    pub pending: [Option<Pending>; NUM_PLAYERS],
    pub last_rejection: [Option<ViolationKind>; NUM_PLAYERS],
    pub outcome: Option<GameOutcome>,
    pub abort: Option<AbortInfo>,
}

impl Snapshot {
    pub fn apply(&mut self, event: &GameEvent) {
        match event {
            GameEvent::Started { .. } => self.status = GameStatus::Running,
            GameEvent::AwaitingAction {
                seat,
                phase,
                round,
                attempt,
            } => {
                self.round = *round;
                self.phase = Some(*phase);
                self.pending[seat.slot()] = Some(Pending {
                    phase: *phase,
                    attempt: *attempt,
                });
            }
            GameEvent::Rejected { seat, kind, .. } => {
                self.pending[seat.slot()] = None;
                self.last_rejection[seat.slot()] = Some(*kind);
            }
            GameEvent::DescriptionAccepted(d) => {
                self.clear(d.player);
                self.descriptions.push(d.clone());
            }
            GameEvent::JudgmentAccepted(j) => {
                self.clear(j.judge);
                self.judgments.push(j.clone());
            }
            GameEvent::VoteAccepted { voter, target } => {
                self.clear(*voter);
                self.votes.push(VoteCast {
                    voter: *voter,
                    target: *target,
                });
            }
            GameEvent::Finished(outcome) => {
                self.phase = None;
                self.outcome = Some(outcome.clone());
            }
            GameEvent::Aborted(info) => {
                self.phase = None;
                self.pending = [None; NUM_PLAYERS];
                self.abort = Some(info.clone());
            }
        }
    }

    fn clear(&mut self, seat: PlayerId) {
        self.pending[seat.slot()] = None;
        self.last_rejection[seat.slot()] = None;
    }

    pub fn is_over(&self) -> bool {
        matches!(self.status, GameStatus::Finished | GameStatus::Aborted)
    }

    /// The redacted view for `seat`.
    pub fn view(&self, game_id: &str, seat: PlayerId) -> SeatView {
        let own = self.assignment.word(seat).to_string();
        let hidden: Vec<&str> = self.assignment.words().iter().map(String::as_str).filter(|w| *w != own).collect();
        let descriptions = self
            .descriptions
            .iter()
            .map(|d| {
                let text = hidden.iter().fold(d.text.clone(), |t, w| text::mask_keyword(&t, w, MASK));
                Description { text, ..d.clone() }
            })
            .collect();
        SeatView {
            game_id: game_id.to_string(),
            seat,
            own_keyword: own,
            category: self.category.clone(),
            language: self.language,
            status: self.status,
            num_rounds: self.num_rounds,
            word_limit: self.word_limit,
            round: self.round,
            phase: self.phase,
            descriptions,
            own_judgments: self.judgments.iter().filter(|j| j.judge == seat).cloned().collect(),
            votes: self.votes.clone(),
            pending: self.pending[seat.slot()],
            last_rejection: self.last_rejection[seat.slot()],
            outcome: self.outcome.clone(),
            aborted: self.abort.clone(),
        }
    }
}

/// Everything one seat is entitled to know. Other seats' keywords are masked
/// out of descriptions and other seats' judgments are never included.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeatView {
    pub game_id: String,
    pub seat: PlayerId,
    pub own_keyword: String,
    pub category: String,
    pub language: Language,
    pub status: GameStatus,
    pub num_rounds: u32,
    pub word_limit: u32,
    pub round: u32,
    pub phase: Option<Phase>,
    pub descriptions: Vec<Description>,
    pub own_judgments: Vec<Judgment>,
    pub votes: Vec<VoteCast>,
    pub pending: Option<Pending>,
    /// Why this seat's previous submission was refused, until it is accepted.
    pub last_rejection: Option<ViolationKind>,
    pub outcome: Option<GameOutcome>,
    pub aborted: Option<AbortInfo>,
}
