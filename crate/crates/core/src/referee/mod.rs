//! The referee: runs one game as a strict turn-based state machine, builds
//! each seat's prompt from what that seat may see, validates every output,
//! and re-issues rejected requests up to the retry cap.

mod validate;

use serde::{Deserialize, Serialize};

pub use validate::{validate_description, validate_vote, ViolationKind, ViolationRecord};

use crate::agents::{Agent, AgentRequest, AgentResponse, ParsedOutput, SeatContext, Seats};
use crate::game::{
    assign_roles, determine_outcome, tally_votes, Description, GameConfig, GameOutcome, Judgment, Phase, PlayerId,
    RoleAssignment, RuleError, VoteMatrix, WordGroup, NUM_PLAYERS,
};
use crate::llm::ChatExchange;
use crate::prompts::{
    parse_description, parse_judgment, parse_vote, BuilderTag, CatalogueStamp, DescribeInput, JudgeInput, ParseError,
    PromptBundle, PromptCatalogue, VisibleHistory,
};
use crate::seed;
use crate::text::{self, Language};

/// Something that wants to follow a game as it runs (the play service).
pub trait GameObserver: Send + Sync {
    fn on_event(&self, event: &GameEvent);
}

pub struct NoopObserver;

impl GameObserver for NoopObserver {
    fn on_event(&self, _event: &GameEvent) {}
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum GameEvent {
    Started {
        assignment: RoleAssignment,
        category: String,
        num_rounds: u32,
    },
    AwaitingAction {
        seat: PlayerId,
        phase: Phase,
        round: u32,
        attempt: u32,
    },
    Rejected {
        seat: PlayerId,
        phase: Phase,
        round: u32,
        kind: ViolationKind,
    },
    DescriptionAccepted(Description),
    JudgmentAccepted(Judgment),
    VoteAccepted {
        voter: PlayerId,
        target: PlayerId,
    },
    Finished(GameOutcome),
    Aborted(AbortInfo),
}

/// One request sent to an agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestLog {
    pub seat: PlayerId,
    pub phase: Phase,
    pub round: u32,
    pub attempt: u32,
    /// `None` when the request carried no prompt (judgment-driven votes).
    pub builder: Option<BuilderTag>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbortInfo {
    pub seat: PlayerId,
    pub phase: Phase,
    pub round: u32,
    pub last_violation: ViolationKind,
}

/// Per-game log of requests and rejected outputs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ledger {
    pub violations: Vec<ViolationRecord>,
    pub requests: Vec<RequestLog>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("{attempts} attempts rejected, last with {last}")]
pub struct RetryExhausted {
    pub last: ViolationKind,
    pub attempts: u32,
}

/// Sends `request`, validating each answer and re-issuing it with a violation
/// notice appended until `validator` accepts or `cap` attempts are used.
/// Returns the accepted value and the number of attempts it took.
pub async fn request_with_retry<T>(
    agent: &mut dyn Agent,
    request: AgentRequest,
    cap: u32,
    notice: &(dyn Fn(ViolationKind) -> String + Sync),
    validator: &(dyn Fn(&AgentResponse) -> Result<T, ViolationKind> + Sync),
    ledger: &mut Ledger,
    observer: &dyn GameObserver,
) -> Result<(T, u32), RetryExhausted> {
    assert!(cap >= 1, "retry cap must be at least 1");
    let base_prompt = request.prompt.clone();
    let mut req = request;
    let mut last = ViolationKind::Timeout;
    for attempt in 1..=cap {
        req.attempt = attempt;
        if attempt > 1 {
            req.rejected = Some(last);
            req.prompt = base_prompt.as_ref().map(|p| p.with_notice(&notice(last)));
        }
        ledger.requests.push(RequestLog {
            seat: req.seat,
            phase: req.kind,
            round: req.round,
            attempt,
            builder: req.prompt.as_ref().map(|p| p.meta.builder),
        });
        observer.on_event(&GameEvent::AwaitingAction {
            seat: req.seat,
            phase: req.kind,
            round: req.round,
            attempt,
        });
        let (raw, verdict) = match tokio::time::timeout(agent.timeout(), agent.handle(&req)).await {
            Err(_) => (String::new(), Err(ViolationKind::Timeout)),
            Ok(Err(e)) => {
                tracing::warn!(seat = %req.seat, error = %e, "agent failed");
                (String::new(), Err(e.violation()))
            }
            Ok(Ok(resp)) => {
                let v = validator(&resp);
                (resp.raw_text, v)
            }
        };
        match verdict {
            Ok(value) => {
                agent.verdict(&req, Ok(())).await;
                return Ok((value, attempt));
            }
            Err(kind) => {
                agent.verdict(&req, Err(kind)).await;
                observer.on_event(&GameEvent::Rejected {
                    seat: req.seat,
                    phase: req.kind,
                    round: req.round,
                    kind,
                });
                ledger.violations.push(ViolationRecord {
                    player: req.seat,
                    round: req.round,
                    phase: req.kind,
                    kind,
                    attempt,
                    raw_output: raw,
                });
                last = kind;
            }
        }
    }
    Err(RetryExhausted { last, attempts: cap })
}

/// Everything that happened in one game, in serialized form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameRecord {
    pub config: GameConfig,
    pub group: WordGroup,
    pub language: Language,
    pub assignment: RoleAssignment,
    pub prompt_catalogue: CatalogueStamp,
    pub agents: [String; NUM_PLAYERS],
    pub descriptions: Vec<Description>,
    pub judgments: Vec<Judgment>,
    pub votes: Option<VoteMatrix>,
    pub outcome: Option<GameOutcome>,
    pub violations: Vec<ViolationRecord>,
    pub requests: Vec<RequestLog>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exchanges: Vec<SeatExchange>,
    pub abort: Option<AbortInfo>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeatExchange {
    pub seat: PlayerId,
    pub exchange: ChatExchange,
}

impl GameRecord {
    pub fn is_complete(&self) -> bool {
        self.abort.is_none() && self.outcome.is_some()
    }

    /// Checks the rules every finished record must satisfy.
    pub fn check_invariants(&self) -> Result<(), String> {
        for d in &self.descriptions {
            if text::contains_keyword(&d.text, self.assignment.word(d.player)) {
                return Err(format!("round {} description of player {} leaks its keyword", d.round, d.player));
            }
        }
        if self.assignment.words().iter().filter(|w| *w == self.group.spy_word()).count() != 1 {
            return Err("assignment does not have exactly one spy".into());
        }
        match (&self.abort, &self.votes, &self.outcome) {
            (Some(_), _, outcome) => {
                if outcome.is_some() {
                    return Err("aborted game has an outcome".into());
                }
            }
            (None, Some(votes), Some(outcome)) => {
                let expected = determine_outcome(&tally_votes(votes), &self.assignment);
                if &expected != outcome {
                    return Err(format!("outcome {outcome:?} does not follow from the votes"));
                }
                let rounds = self.config.num_rounds as usize;
                if self.descriptions.len() != rounds * NUM_PLAYERS {
                    return Err(format!("expected {} descriptions", rounds * NUM_PLAYERS));
                }
                let judgments = if self.config.ablation.judge_cot { rounds * NUM_PLAYERS } else { 0 };
                if self.judgments.len() != judgments {
                    return Err(format!("expected {judgments} judgments, found {}", self.judgments.len()));
                }
            }
            _ => return Err("finished game is missing votes or outcome".into()),
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RefereeError {
    #[error(transparent)]
    InvalidConfig(#[from] RuleError),
    /// A seat exhausted its retries. The partial record holds the full violation ledger.
    #[error("game aborted: player {} exhausted retries in {:?}", .0.abort.as_ref().map(|a| a.seat.index()).unwrap_or(0), .0.abort.as_ref().map(|a| a.phase))]
    Aborted(Box<GameRecord>),
}

/// Prompt catalogues for both supported languages.
#[derive(Debug, Clone)]
pub struct PromptLibrary {
    pub en: PromptCatalogue,
    pub zh: PromptCatalogue,
}

impl PromptLibrary {
    pub fn builtin() -> Self {
        PromptLibrary {
            en: PromptCatalogue::builtin(Language::En),
            zh: PromptCatalogue::builtin(Language::Zh),
        }
    }

    pub fn get(&self, language: Language) -> &PromptCatalogue {
        match language {
            Language::En => &self.en,
            Language::Zh => &self.zh,
        }
    }
}

impl Default for PromptLibrary {
    fn default() -> Self {
        Self::builtin()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Referee {
    prompts: PromptLibrary,
}

fn parse_violation(e: ParseError) -> ViolationKind {
    match e {
        ParseError::SeatOutOfRange(_) | ParseError::SpyOutOfRange(_) => ViolationKind::OutOfRange,
        _ => ViolationKind::BadFormat,
    }
}

struct Accumulator {
    ledger: Ledger,
    descriptions: Vec<Description>,
    judgments: Vec<Judgment>,
}

impl Accumulator {
    fn history_for(&self, seat: PlayerId) -> VisibleHistory {
        VisibleHistory::new(
            self.descriptions.clone(),
            self.judgments.iter().filter(|j| j.judge == seat).cloned().collect(),
        )
    }

    fn last_judgment(&self, seat: PlayerId) -> Option<&Judgment> {
        self.judgments.iter().rev().find(|j| j.judge == seat)
    }
}

impl Referee {
    pub fn new(prompts: PromptLibrary) -> Self {
        Referee { prompts }
    }

    pub fn prompts(&self) -> &PromptLibrary {
        &self.prompts
    }

    /// The seat assignment `run_game` will use for this config and group.
    pub fn roles_for(config: &GameConfig, group: &WordGroup) -> RoleAssignment {
        assign_roles(group, seed::derive(config.rng_seed, "roles", 0))
    }

    pub fn language_for(config: &GameConfig, group: &WordGroup) -> Language {
        config.language.unwrap_or_else(|| group.language())
    }

    pub async fn run_game(&self, config: &GameConfig, seats: &mut Seats, group: &WordGroup) -> Result<GameRecord, RefereeError> {
        self.run_game_observed(config, seats, group, &NoopObserver).await
    }

    pub async fn run_game_observed(
        &self,
        config: &GameConfig,
        seats: &mut Seats,
        group: &WordGroup,
        observer: &dyn GameObserver,
    ) -> Result<GameRecord, RefereeError> {
        config.validate()?;
        let language = Self::language_for(config, group);
        let cat = self.prompts.get(language);
        let assignment = Self::roles_for(config, group);
        let category = group.category().to_string();
        let limit = config.describe_word_limit;
        let cap = config.retry_cap;
        let notice = |kind: ViolationKind| cat.retry_notice(kind, limit);
        let mut acc = Accumulator {
            ledger: Ledger::default(),
            descriptions: Vec::new(),
            judgments: Vec::new(),
        };
        observer.on_event(&GameEvent::Started {
            assignment: assignment.clone(),
            category: category.clone(),
            num_rounds: config.num_rounds,
        });

        let record = |acc: Accumulator,
                          seats: &mut Seats,
                          votes: Option<VoteMatrix>,
                          outcome: Option<GameOutcome>,
                          abort: Option<AbortInfo>| {
            let mut exchanges = Vec::new();
            for (slot, agent) in seats.iter_mut().enumerate() {
                let seat = PlayerId::from_slot(slot);
                exchanges.extend(agent.take_exchanges().into_iter().map(|exchange| SeatExchange { seat, exchange }));
            }
            GameRecord {
                config: config.clone(),
                group: group.clone(),
                language,
                assignment: assignment.clone(),
                prompt_catalogue: cat.stamp(),
                agents: std::array::from_fn(|i| seats[i].label()),
                descriptions: acc.descriptions,
                judgments: acc.judgments,
                votes,
                outcome,
                violations: acc.ledger.violations,
                requests: acc.ledger.requests,
                exchanges,
                abort,
            }
        };
        macro_rules! abort {
            ($seat:expr, $phase:expr, $round:expr, $err:expr) => {{
                let info = AbortInfo {
                    seat: $seat,
                    phase: $phase,
                    round: $round,
                    last_violation: $err.last,
                };
                observer.on_event(&GameEvent::Aborted(info.clone()));
                tracing::warn!(seat = %$seat, phase = ?$phase, round = $round, "game aborted");
                return Err(RefereeError::Aborted(Box::new(record(acc, seats, None, None, Some(info)))));
            }};
        }

        let context = |keyword: Option<&str>, history: VisibleHistory, vote_seed: Option<u64>| SeatContext {
            keyword: keyword.map(str::to_string),
            category: category.clone(),
            history,
            word_limit: limit,
            vote_seed,
        };

        // Rules briefing.
        for seat in PlayerId::ALL {
            let req = AgentRequest {
                kind: Phase::RulesBrief,
                seat,
                round: 0,
                attempt: 1,
                prompt: Some(cat.rules_brief()),
                context: context(None, VisibleHistory::default(), None),
                rejected: None,
            };
            let accept = |_: &AgentResponse| Ok(());
            if let Err(e) =
                request_with_retry(seats[seat.slot()].as_mut(), req, cap, &notice, &accept, &mut acc.ledger, observer).await
            {
                abort!(seat, Phase::RulesBrief, 0, e);
            }
        }

        let ab = config.ablation;
        for round in 1..=config.num_rounds {
            for seat in PlayerId::ALL {
                let keyword = assignment.word(seat);
                let history = acc.history_for(seat);
                let input = DescribeInput {
                    seat,
                    keyword,
                    category: &category,
                    round,
                    history: &history,
                    limit,
                };
                let self_suspected = round >= 2
                    && acc
                        .last_judgment(seat)
                        .is_some_and(|j| j.round == round - 1 && j.self_suspected);
                let prompt: PromptBundle = if ab.judge_cot && ab.spy_cot && self_suspected {
                    cat.spy_cot(&input)
                } else if ab.judge_cot && ab.describe_cot {
                    cat.describe_cot(&input)
                } else {
                    cat.baseline_describe(seat, keyword, round)
                };
                let req = AgentRequest {
                    kind: Phase::Describe,
                    seat,
                    round,
                    attempt: 1,
                    prompt: Some(prompt),
                    context: context(Some(keyword), history.clone(), None),
                    rejected: None,
                };
                let validator = |resp: &AgentResponse| -> Result<String, ViolationKind> {
                    let text = match &resp.parsed {
                        Some(ParsedOutput::Description(t)) => t.trim().to_string(),
                        _ => parse_description(&resp.raw_text).map_err(parse_violation)?,
                    };
                    validate_description(&text, keyword, limit)?;
                    Ok(text)
                };
                match request_with_retry(seats[seat.slot()].as_mut(), req, cap, &notice, &validator, &mut acc.ledger, observer)
                    .await
                {
                    Ok((text, _)) => {
                        let d = Description { player: seat, round, text };
                        observer.on_event(&GameEvent::DescriptionAccepted(d.clone()));
                        acc.descriptions.push(d);
                    }
                    Err(e) => abort!(seat, Phase::Describe, round, e),
                }
            }

            if !ab.judge_cot {
                continue;
            }
            for seat in PlayerId::ALL {
                let history = acc.history_for(seat).masked(assignment.word(seat));
                let prompt = cat.judge_cot(&JudgeInput {
                    seat,
                    category: &category,
                    round,
                    history: &history,
                });
                let req = AgentRequest {
                    kind: Phase::Judge,
                    seat,
                    round,
                    attempt: 1,
                    prompt: Some(prompt),
                    context: context(None, history, None),
                    rejected: None,
                };
                let validator = |resp: &AgentResponse| -> Result<Judgment, ViolationKind> {
                    let j = match &resp.parsed {
                        Some(ParsedOutput::Judgment(j)) => j.clone(),
                        _ => parse_judgment(&resp.raw_text, seat, round).map_err(parse_violation)?,
                    };
                    if j.judge != seat || j.round != round || j.guesses.iter().any(|g| g.trim().is_empty()) {
                        return Err(ViolationKind::BadFormat);
                    }
                    Ok(j)
                };
                match request_with_retry(seats[seat.slot()].as_mut(), req, cap, &notice, &validator, &mut acc.ledger, observer)
                    .await
                {
                    Ok((j, _)) => {
                        observer.on_event(&GameEvent::JudgmentAccepted(j.clone()));
                        acc.judgments.push(j);
                    }
                    Err(e) => abort!(seat, Phase::Judge, round, e),
                }
            }
        }

        let last_round = config.num_rounds;
        let mut targets = [PlayerId::ALL[0]; NUM_PLAYERS];
        for seat in PlayerId::ALL {
            let history = acc.history_for(seat).masked(assignment.word(seat));
            let vote_seed = seed::derive(config.rng_seed, "vote", u64::from(seat.index()));
            let prompt = (!ab.judge_cot).then(|| cat.baseline_judge(&history, last_round));
            let req = AgentRequest {
                kind: Phase::Vote,
                seat,
                round: last_round,
                attempt: 1,
                prompt,
                context: context(None, history, Some(vote_seed)),
                rejected: None,
            };
            let validator = |resp: &AgentResponse| -> Result<PlayerId, ViolationKind> {
                let n = match &resp.parsed {
                    Some(ParsedOutput::Vote(n)) => *n,
                    _ => parse_vote(&resp.raw_text).map_err(parse_violation)?,
                };
                validate_vote(n, seat)
            };
            match request_with_retry(seats[seat.slot()].as_mut(), req, cap, &notice, &validator, &mut acc.ledger, observer).await
            {
                Ok((target, _)) => {
                    observer.on_event(&GameEvent::VoteAccepted { voter: seat, target });
                    targets[seat.slot()] = target;
                }
                Err(e) => abort!(seat, Phase::Vote, last_round, e),
            }
        }

        let votes = VoteMatrix::from_targets(targets).expect("validated votes form a legal matrix");
        let outcome = determine_outcome(&tally_votes(&votes), &assignment);
        observer.on_event(&GameEvent::Finished(outcome.clone()));
        Ok(record(acc, seats, Some(votes), Some(outcome), None))
    }
}
