use std::collections::VecDeque;

use async_trait::async_trait;
use rand::Rng;

use super::{Agent, AgentError, AgentRequest, AgentResponse, ParsedOutput};
use crate::game::{Judgment, Phase, PlayerId, RoleAssignment};
use crate::prompts::{decide_vote, render_judgment};
use crate::seed;
use crate::text;

/// Plays back a fixed queue of raw outputs, one per request.
///
/// Rules briefings are acknowledged without consuming the queue. Rejected
/// outputs are not replayed: a re-issued request takes the next entry.
#[derive(Debug, Clone)]
pub struct ScriptedAgent {
    queue: VecDeque<String>,
    seen: Vec<AgentRequest>,
}

impl ScriptedAgent {
    pub fn new<I, S>(outputs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ScriptedAgent {
            queue: outputs.into_iter().map(Into::into).collect(),
            seen: Vec::new(),
        }
    }

    /// Every request received so far, in order.
    pub fn requests(&self) -> &[AgentRequest] {
        &self.seen
    }

    pub fn remaining(&self) -> usize {
        self.queue.len()
    }
}

#[async_trait]
impl Agent for ScriptedAgent {
    async fn handle(&mut self, request: &AgentRequest) -> Result<AgentResponse, AgentError> {
        self.seen.push(request.clone());
        if request.kind == Phase::RulesBrief {
            return Ok(AgentResponse {
                raw_text: "OK".into(),
                parsed: Some(ParsedOutput::Ack),
            });
        }
        self.queue.pop_front().map(AgentResponse::raw).ok_or(AgentError::ScriptExhausted)
    }

    fn label(&self) -> String {
        "scripted".into()
    }
}

const NEUTRAL_CLUES: &[&str] = &[
    "It is something many people have seen.",
    "You can find it in everyday life.",
    "Most people know it well.",
    "Quite familiar to everyone.",
];

/// A scripted player that knows the full role assignment.
///
/// It gives neutral descriptions and judges correctly except with
/// probability `1 - accuracy` per judgment, where it names a random wrong
/// seat instead. The spy always judges itself, so it votes at random.
/// Used for deterministic batch runs and harness tests.
#[derive(Debug, Clone)]
pub struct OracleAgent {
    seat: PlayerId,
    assignment: RoleAssignment,
    accuracy: f64,
    seed: u64,
}

impl OracleAgent {
    pub fn new(seat: PlayerId, assignment: RoleAssignment, accuracy: f64, seed: u64) -> Self {
        OracleAgent {
            seat,
            assignment,
            accuracy: accuracy.clamp(0.0, 1.0),
            seed,
        }
    }

    fn pick(&self, round: u32, attempt: u32) -> PlayerId {
        let spy = self.assignment.spy();
        if self.seat == spy {
            return spy;
        }
        let mut rng = seed::rng(seed::derive(self.seed, "oracle", u64::from(round) << 8 | u64::from(attempt)));
        if rng.random_bool(self.accuracy) {
            spy
        } else {
            let wrong: Vec<PlayerId> = self.seat.others().into_iter().filter(|p| *p != spy).collect();
            wrong[rng.random_range(0..wrong.len())]
        }
    }

    fn judgment(&self, round: u32, attempt: u32) -> Judgment {
        let pick = self.pick(round, attempt);
        let guesses = self.assignment.words().clone();
        let mut j = Judgment::new(self.seat, round, guesses, pick);
        if pick != self.assignment.spy() {
            // Keep the guesses consistent with the (wrong) pick.
            let civ = self.assignment.word(self.assignment.civilians()[0]).to_string();
            let spy_word = self.assignment.word(self.assignment.spy()).to_string();
            j.guesses = std::array::from_fn(|i| if i == pick.slot() { spy_word.clone() } else { civ.clone() });
        }
        j
    }
}

#[async_trait]
impl Agent for OracleAgent {
    async fn handle(&mut self, request: &AgentRequest) -> Result<AgentResponse, AgentError> {
        let keyword = self.assignment.word(self.seat);
        let text = match request.kind {
            Phase::RulesBrief => "OK".to_string(),
            Phase::Describe => NEUTRAL_CLUES
                .iter()
                .cycle()
                .skip(request.round as usize + self.seat.slot())
                .take(NEUTRAL_CLUES.len())
                .find(|c| !text::contains_keyword(c, keyword))
                .copied()
                .unwrap_or("...")
                .to_string(),
            Phase::Judge => render_judgment(&self.judgment(request.round, request.attempt)),
            Phase::Vote => {
                let vote_seed = request.context.vote_seed.unwrap_or(self.seed);
                let judgment = match request.last_judgment() {
                    Some(j) => j.clone(),
                    None => self.judgment(request.round, request.attempt),
                };
                decide_vote(&judgment, self.seat, vote_seed).to_string()
            }
        };
        Ok(AgentResponse::raw(text))
    }

    fn label(&self) -> String {
        format!("oracle(accuracy={})", self.accuracy)
    }
}
