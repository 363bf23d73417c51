//! One live game: its seats, tokens and the referee task that drives it.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tokio::sync::watch;
use uuid::Uuid;

use whospy_core::agents::{human_seat, Agent, HumanMailbox, ScriptedAgent, Seats};
use whospy_core::game::{GameConfig, PlayerId, WordGroup, NUM_PLAYERS};
use whospy_core::harness::{AgentPool, AgentSpec};
use whospy_core::referee::{GameEvent, GameObserver, GameRecord, Referee, RefereeError};

use crate::view::{GameStatus, Snapshot};

/// Who fills a seat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeatKind {
    Human,
    /// Uses the service's configured model endpoint.
    Llm,
    Oracle { accuracy: f64 },
    Random,
    Scripted { outputs: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinToken {
    pub seat: PlayerId,
    pub token: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinError {
    Unknown,
    AlreadyUsed,
}

pub struct GameHandle {
    pub id: String,
    pub config: GameConfig,
    pub group: WordGroup,
    pub plan: [SeatKind; NUM_PLAYERS],
    join_tokens: Mutex<HashMap<String, PlayerId>>,
    used_tokens: Mutex<HashSet<String>>,
    sessions: Mutex<HashMap<String, PlayerId>>,
    mailboxes: HashMap<PlayerId, HumanMailbox>,
    snapshot: watch::Sender<Snapshot>,
    record: Mutex<Option<GameRecord>>,
    seats: Mutex<Option<Seats>>,
}

struct Forward(watch::Sender<Snapshot>);

impl GameObserver for Forward {
    fn on_event(&self, event: &GameEvent) {
        self.0.send_modify(|s| s.apply(event));
    }
}

fn new_token() -> String {
    Uuid::new_v4().simple().to_string()
}

impl GameHandle {
    /// Builds the seats and tokens. The caller starts the game with
    /// [`GameHandle::start_if_ready`].
    pub fn create(
        config: GameConfig,
        group: WordGroup,
        plan: [SeatKind; NUM_PLAYERS],
        llm: Option<&AgentPool>,
        human_timeout: Duration,
    ) -> Result<(Arc<Self>, Vec<JoinToken>), String> {
        config.validate().map_err(|e| e.to_string())?;
        let assignment = Referee::roles_for(&config, &group);
        let mut mailboxes = HashMap::new();
        let mut tokens = Vec::new();
        let mut seats: Vec<Box<dyn Agent>> = Vec::with_capacity(NUM_PLAYERS);
        for (slot, kind) in plan.iter().enumerate() {
            let seat = PlayerId::from_slot(slot);
            let agent: Box<dyn Agent> = match kind {
                SeatKind::Human => {
                    let (agent, mailbox) = human_seat(seat, human_timeout);
                    mailboxes.insert(seat, mailbox);
                    tokens.push(JoinToken {
                        seat,
                        token: new_token(),
                    });
                    Box::new(agent)
                }
                SeatKind::Llm => {
                    let pool = llm.ok_or("no model endpoint is configured for llm seats")?;
                    pool.agent(&config, &assignment, seat)
                }
                SeatKind::Oracle { accuracy } => {
                    if !(0.0..=1.0).contains(accuracy) {
                        return Err(format!("seat {seat}: oracle accuracy must be within [0, 1]"));
                    }
                    AgentPool::new(AgentSpec::Oracle { accuracy: *accuracy })
                        .expect("oracle pool needs no client")
                        .agent(&config, &assignment, seat)
                }
                SeatKind::Random => AgentPool::new(AgentSpec::Random)
                    .expect("random pool needs no client")
                    .agent(&config, &assignment, seat),
                SeatKind::Scripted { outputs } => Box::new(ScriptedAgent::new(outputs.clone())),
            };
            seats.push(agent);
        }
        let seats: Seats = match seats.try_into() {
            Ok(s) => s,
            Err(_) => unreachable!("one agent per seat"),
        };
        let snapshot = Snapshot {
            status: GameStatus::Lobby,
            assignment,
            category: group.category().to_string(),
            language: Referee::language_for(&config, &group),
            num_rounds: config.num_rounds,
            word_limit: config.describe_word_limit,
            round: 0,
            phase: None,
            descriptions: Vec::new(),
            judgments: Vec::new(),
            votes: Vec::new(),
            pending: [None; NUM_PLAYERS],
            last_rejection: [None; NUM_PLAYERS],
            outcome: None,
            abort: None,
        };
        let handle = GameHandle {
            id: Uuid::new_v4().to_string(),
            config,
            group,
            plan,
            join_tokens: Mutex::new(tokens.iter().map(|t| (t.token.clone(), t.seat)).collect()),
            used_tokens: Mutex::new(HashSet::new()),
            sessions: Mutex::new(HashMap::new()),
            mailboxes,
            snapshot: watch::Sender::new(snapshot),
            record: Mutex::new(None),
            seats: Mutex::new(Some(seats)),
        };
        Ok((Arc::new(handle), tokens))
    }

    /// Consumes a join token and returns the seat plus a session token for
    /// every later call.
    pub fn join(&self, token: &str) -> Result<(PlayerId, String), JoinError> {
        let seat = {
            let mut pending = self.join_tokens.lock().unwrap();
            match pending.remove(token) {
                Some(seat) => seat,
                None if self.used_tokens.lock().unwrap().contains(token) => return Err(JoinError::AlreadyUsed),
                None => return Err(JoinError::Unknown),
            }
        };
        self.used_tokens.lock().unwrap().insert(token.to_string());
        let session = new_token();
        self.sessions.lock().unwrap().insert(session.clone(), seat);
        Ok((seat, session))
    }

    pub fn seat_for(&self, session: &str) -> Option<PlayerId> {
        self.sessions.lock().unwrap().get(session).copied()
    }

    pub fn mailbox(&self, seat: PlayerId) -> Option<&HumanMailbox> {
        self.mailboxes.get(&seat)
    }

    pub fn subscribe(&self) -> watch::Receiver<Snapshot> {
        self.snapshot.subscribe()
    }

    pub fn snapshot(&self) -> Snapshot {
        self.snapshot.borrow().clone()
    }

    pub fn record(&self) -> Option<GameRecord> {
        self.record.lock().unwrap().clone()
    }

    pub fn awaiting_joins(&self) -> usize {
        self.join_tokens.lock().unwrap().len()
    }

    /// Spawns the referee task once every human seat has joined. Idempotent.
    pub fn start_if_ready(self: &Arc<Self>, referee: Arc<Referee>) -> bool {
        if self.awaiting_joins() > 0 {
            return false;
        }
        let Some(mut seats) = self.seats.lock().unwrap().take() else {
            return false;
        };
        let game = Arc::clone(self);
        tokio::spawn(async move {
            let observer = Forward(game.snapshot.clone());
            let result = referee.run_game_observed(&game.config, &mut seats, &game.group, &observer).await;
            // Dropping the seats closes every human mailbox.
            drop(seats);
            let (record, status) = match result {
                Ok(record) => (Some(record), GameStatus::Finished),
                Err(RefereeError::Aborted(record)) => (Some(*record), GameStatus::Aborted),
                Err(RefereeError::InvalidConfig(e)) => {
                    tracing::error!(game = %game.id, error = %e, "game rejected by referee");
                    (None, GameStatus::Aborted)
                }
            };
            *game.record.lock().unwrap() = record;
            game.snapshot.send_modify(|s| s.status = status);
            tracing::info!(game = %game.id, ?status, "game over");
        });
        true
    }
}
