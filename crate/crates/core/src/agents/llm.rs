use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;

use super::{Agent, AgentError, AgentRequest, AgentResponse, ParsedOutput, DEFAULT_AGENT_TIMEOUT};
use crate::game::{Phase, PlayerId};
use crate::llm::{ChatExchange, ChatMessage, LlmClient, LlmError, Role};
use crate::prompts::{decide_vote, parse_description, parse_judgment, parse_vote};

/// A seat played by a chat model.
///
/// The only conversation carried between requests is the rules briefing and
/// the model's acknowledgement; every other prompt is self-contained. This
/// keeps the seat's keyword out of judge requests.
pub struct LlmAgent {
    client: Arc<LlmClient>,
    seat: PlayerId,
    context: Vec<ChatMessage>,
    exchanges: Vec<ChatExchange>,
    timeout: Duration,
}

impl LlmAgent {
    pub fn new(client: Arc<LlmClient>, seat: PlayerId) -> Self {
        LlmAgent {
            client,
            seat,
            context: Vec::new(),
            exchanges: Vec::new(),
            timeout: DEFAULT_AGENT_TIMEOUT,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

#[async_trait]
impl Agent for LlmAgent {
    async fn handle(&mut self, request: &AgentRequest) -> Result<AgentResponse, AgentError> {
        let Some(prompt) = &request.prompt else {
            // Judge-driven vote: derived locally from this seat's last judgment.
            let (Phase::Vote, Some(j), Some(seed)) = (request.kind, request.last_judgment(), request.context.vote_seed)
            else {
                return Err(AgentError::Transport("request carries no prompt".into()));
            };
            let target = decide_vote(j, self.seat, seed);
            return Ok(AgentResponse {
                raw_text: target.to_string(),
                parsed: Some(ParsedOutput::Vote(i64::from(target.index()))),
            });
        };
        let exchange = self.client.complete(prompt, &self.context).await.map_err(|e| match e {
            LlmError::EmptyCompletion => AgentError::EmptyOutput,
            other => AgentError::Transport(other.to_string()),
        })?;
        let raw = exchange.response.clone();
        if request.kind == Phase::RulesBrief {
            self.context = vec![
                ChatMessage::new(Role::User, prompt.user.clone()),
                ChatMessage::new(Role::Assistant, raw.clone()),
            ];
        }
        self.exchanges.push(exchange);
        let parsed = match request.kind {
            Phase::RulesBrief => Some(ParsedOutput::Ack),
            Phase::Describe => parse_description(&raw).ok().map(ParsedOutput::Description),
            Phase::Judge => parse_judgment(&raw, self.seat, request.round).ok().map(ParsedOutput::Judgment),
            Phase::Vote => parse_vote(&raw).ok().map(ParsedOutput::Vote),
        };
        Ok(AgentResponse { raw_text: raw, parsed })
    }

    fn timeout(&self) -> Duration {
        self.timeout
    }

    fn label(&self) -> String {
        format!("llm({})", self.client.config().model)
    }

    fn take_exchanges(&mut self) -> Vec<ChatExchange> {
        std::mem::take(&mut self.exchanges)
    }
}
