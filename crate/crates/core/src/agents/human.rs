use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use tokio::sync::{mpsc, oneshot, watch};

use super::{Agent, AgentError, AgentRequest, AgentResponse, ParsedOutput};
use crate::game::{Judgment, Phase, PlayerId, NUM_PLAYERS};
use crate::prompts::render_judgment;
use crate::referee::ViolationKind;

pub const DEFAULT_HUMAN_TIMEOUT: Duration = Duration::from_secs(300);

/// A structured action typed in by a human player.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HumanAction {
    Describe { text: String },
    Judge { guesses: [String; NUM_PLAYERS], spy: i64 },
    Vote { target: i64 },
}

impl HumanAction {
    pub fn phase(&self) -> Phase {
        match self {
            HumanAction::Describe { .. } => Phase::Describe,
            HumanAction::Judge { .. } => Phase::Judge,
            HumanAction::Vote { .. } => Phase::Vote,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "violation", rename_all = "snake_case")]
pub enum Verdict {
    Accepted,
    Rejected(ViolationKind),
    /// The seat was not being asked for this kind of action.
    OutOfTurn,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MailboxError {
    #[error("the game for this seat has ended")]
    Closed,
}

struct Submission {
    action: HumanAction,
    reply: oneshot::Sender<Verdict>,
}

/// The referee side of a human seat.
pub struct HumanAgent {
    seat: PlayerId,
    inbox: mpsc::Receiver<Submission>,
    awaiting: watch::Sender<Option<Phase>>,
    pending: Option<oneshot::Sender<Verdict>>,
    timeout: Duration,
}

/// The service side of a human seat. Cheap to clone.
#[derive(Clone)]
pub struct HumanMailbox {
    seat: PlayerId,
    outbox: mpsc::Sender<Submission>,
    awaiting: watch::Receiver<Option<Phase>>,
}

pub fn human_seat(seat: PlayerId, timeout: Duration) -> (HumanAgent, HumanMailbox) {
    let (outbox, inbox) = mpsc::channel(1);
    let (awaiting_tx, awaiting_rx) = watch::channel(None);
    (
        HumanAgent {
            seat,
            inbox,
            awaiting: awaiting_tx,
            pending: None,
            timeout,
        },
        HumanMailbox {
            seat,
            outbox,
            awaiting: awaiting_rx,
        },
    )
}

impl HumanMailbox {
    pub fn seat(&self) -> PlayerId {
        self.seat
    }

    /// The phase the referee is currently waiting on from this seat.
    pub fn awaiting(&self) -> Option<Phase> {
        *self.awaiting.borrow()
    }

    /// Waits until the referee asks this seat for something.
    pub async fn wait_turn(&mut self) -> Result<Phase, MailboxError> {
        let phase = self.awaiting.wait_for(Option::is_some).await.map_err(|_| MailboxError::Closed)?;
        Ok(phase.expect("waited for a phase"))
    }

    /// Hands an action to the referee and waits for its validation verdict.
    /// Out-of-turn actions are refused here and never reach the game.
    pub async fn submit(&self, action: HumanAction) -> Result<Verdict, MailboxError> {
        if self.awaiting() != Some(action.phase()) {
            return Ok(Verdict::OutOfTurn);
        }
        let (reply, verdict) = oneshot::channel();
        self.outbox
            .send(Submission { action, reply })
            .await
            .map_err(|_| MailboxError::Closed)?;
        verdict.await.map_err(|_| MailboxError::Closed)
    }
}

fn to_response(seat: PlayerId, round: u32, action: HumanAction) -> AgentResponse {
    match action {
        HumanAction::Describe { text } => AgentResponse {
            parsed: Some(ParsedOutput::Description(text.trim().to_string())),
            raw_text: text,
        },
        HumanAction::Judge { guesses, spy } => match PlayerId::from_number(spy) {
            Ok(pick) => {
                let j = Judgment::new(seat, round, guesses, pick);
                AgentResponse {
                    raw_text: render_judgment(&j),
                    parsed: Some(ParsedOutput::Judgment(j)),
                }
            }
            // Left unparsed so the referee classifies the bad index.
            Err(_) => {
                let mut raw = String::new();
                for (i, g) in guesses.iter().enumerate() {
                    raw.push_str(&format!("PLAYER {}: {}\n", i + 1, g));
                }
                raw.push_str(&format!("SPY: {spy}"));
                AgentResponse::raw(raw)
            }
        },
        HumanAction::Vote { target } => AgentResponse {
            raw_text: target.to_string(),
            parsed: Some(ParsedOutput::Vote(target)),
        },
    }
}

#[async_trait]
impl Agent for HumanAgent {
    async fn handle(&mut self, request: &AgentRequest) -> Result<AgentResponse, AgentError> {
        if request.kind == Phase::RulesBrief {
            return Ok(AgentResponse {
                raw_text: "OK".into(),
                parsed: Some(ParsedOutput::Ack),
            });
        }
        self.pending = None;
        self.awaiting.send_replace(Some(request.kind));
        loop {
            let Some(sub) = self.inbox.recv().await else {
                self.awaiting.send_replace(None);
                return Err(AgentError::Disconnected);
            };
            if sub.action.phase() != request.kind {
                let _ = sub.reply.send(Verdict::OutOfTurn);
                continue;
            }
            self.awaiting.send_replace(None);
            self.pending = Some(sub.reply);
            return Ok(to_response(self.seat, request.round, sub.action));
        }
    }

    async fn verdict(&mut self, _request: &AgentRequest, verdict: Result<(), ViolationKind>) {
        if let Some(reply) = self.pending.take() {
            let _ = reply.send(match verdict {
                Ok(()) => Verdict::Accepted,
                Err(kind) => Verdict::Rejected(kind),
            });
        }
    }

    fn timeout(&self) -> Duration {
        self.timeout
    }

    fn label(&self) -> String {
        "human".into()
    }
}
