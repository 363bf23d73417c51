//! The agent contract and its implementations.
//!
//! The referee only talks to [`Agent`]. Every request carries the prompt the
//! referee built (when the phase has one) and a structured [`SeatContext`]
//! holding only what the seat is allowed to know.

mod human;
mod llm;
mod random;
mod scripted;

use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

pub use human::{human_seat, HumanAction, HumanAgent, HumanMailbox, MailboxError, Verdict, DEFAULT_HUMAN_TIMEOUT};
pub use llm::LlmAgent;
pub use random::{random_baseline_vote, RandomBaselineAgent};
pub use scripted::{OracleAgent, ScriptedAgent};

use crate::game::{Judgment, Phase, PlayerId, NUM_PLAYERS};
use crate::llm::ChatExchange;
use crate::prompts::{PromptBundle, VisibleHistory};
use crate::referee::ViolationKind;

pub const DEFAULT_AGENT_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeatContext {
    /// The seat's own keyword; withheld from judge and vote requests.
    pub keyword: Option<String>,
    pub category: String,
    pub history: VisibleHistory,
    pub word_limit: u32,
    /// Seed for a self-suspecting seat's random vote. Vote requests only.
    pub vote_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentRequest {
    pub kind: Phase,
    pub seat: PlayerId,
    pub round: u32,
    /// 1 for the first try, incremented on every re-issue.
    pub attempt: u32,
    pub prompt: Option<PromptBundle>,
    pub context: SeatContext,
    /// Set when this is a re-issue after a rejected output.
    pub rejected: Option<ViolationKind>,
}

impl AgentRequest {
    /// The most recent judgment this seat made, if any.
    pub fn last_judgment(&self) -> Option<&Judgment> {
        self.context.history.own_prior_judgments.last()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParsedOutput {
    Ack,
    Description(String),
    Judgment(Judgment),
    Vote(i64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentResponse {
    pub raw_text: String,
    /// Present only when the agent already parsed its output.
    pub parsed: Option<ParsedOutput>,
}

impl AgentResponse {
    pub fn raw(text: impl Into<String>) -> Self {
        AgentResponse {
            raw_text: text.into(),
            parsed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AgentError {
    #[error("agent did not answer in time")]
    Timeout,
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("agent disconnected")]
    Disconnected,
    #[error("agent returned an empty output")]
    EmptyOutput,
    #[error("scripted agent ran out of outputs")]
    ScriptExhausted,
}

impl AgentError {
    /// How the referee records this failure.
    pub fn violation(&self) -> ViolationKind {
        match self {
            AgentError::EmptyOutput => ViolationKind::BadFormat,
            _ => ViolationKind::Timeout,
        }
    }
}

#[async_trait]
pub trait Agent: Send {
    async fn handle(&mut self, request: &AgentRequest) -> Result<AgentResponse, AgentError>;

    /// Called after the referee has validated the output of `request`.
    async fn verdict(&mut self, _request: &AgentRequest, _verdict: Result<(), ViolationKind>) {}

    fn timeout(&self) -> Duration {
        DEFAULT_AGENT_TIMEOUT
    }

    /// Short label stored in the game record.
    fn label(&self) -> String;

    /// LLM exchanges made so far; drained by the referee at game end.
    fn take_exchanges(&mut self) -> Vec<ChatExchange> {
        Vec::new()
    }
}

pub type Seats = [Box<dyn Agent>; NUM_PLAYERS];
