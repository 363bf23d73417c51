use async_trait::async_trait;
use rand::seq::IndexedRandom;

use super::{Agent, AgentError, AgentRequest, AgentResponse};
use crate::game::{Judgment, Phase, PlayerId};
use crate::prompts::{decide_vote, render_judgment};
use crate::seed;
use crate::text;

/// Uniform vote over the three other seats.
pub fn random_baseline_vote(seat: PlayerId, vote_seed: u64) -> PlayerId {
    let mut rng = seed::rng(vote_seed);
    *seat.others().choose(&mut rng).expect("three other seats")
}

const FILLER: &[&str] = &["Something ordinary.", "Hard to say more.", "A common thing."];

/// Baseline player that ignores every description and answers at random.
#[derive(Debug, Clone)]
pub struct RandomBaselineAgent {
    seat: PlayerId,
    seed: u64,
}

impl RandomBaselineAgent {
    pub fn new(seat: PlayerId, seed: u64) -> Self {
        RandomBaselineAgent { seat, seed }
    }

    fn stream(&self, request: &AgentRequest) -> u64 {
        seed::derive(self.seed, "random-agent", u64::from(request.round) << 8 | u64::from(request.attempt))
    }
}

#[async_trait]
impl Agent for RandomBaselineAgent {
    async fn handle(&mut self, request: &AgentRequest) -> Result<AgentResponse, AgentError> {
        let text = match request.kind {
            Phase::RulesBrief => "OK".to_string(),
            Phase::Describe => {
                let keyword = request.context.keyword.as_deref().unwrap_or("");
                FILLER
                    .iter()
                    .find(|f| !text::contains_keyword(f, keyword))
                    .copied()
                    .unwrap_or("...")
                    .to_string()
            }
            Phase::Judge => {
                let mut rng = seed::rng(self.stream(request));
                let pick = *PlayerId::ALL.choose(&mut rng).expect("four seats");
                let guesses = PlayerId::ALL.map(|p| if p == pick { "B".to_string() } else { "A".to_string() });
                render_judgment(&Judgment::new(self.seat, request.round, guesses, pick))
            }
            Phase::Vote => {
                let vote_seed = request.context.vote_seed.unwrap_or_else(|| self.stream(request));
                match (&request.prompt, request.last_judgment()) {
                    (None, Some(j)) => decide_vote(j, self.seat, vote_seed),
                    _ => random_baseline_vote(self.seat, vote_seed),
                }
                .to_string()
            }
        };
        Ok(AgentResponse::raw(text))
    }

    fn label(&self) -> String {
        "random".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn never_self_and_repeatable() {
        let seat = PlayerId::new(1).unwrap();
        for s in 0..100 {
            let v = random_baseline_vote(seat, s);
            assert_ne!(v, seat);
            assert_eq!(v, random_baseline_vote(seat, s));
        }
    }

    #[test]
    fn uniform_over_other_seats() {
        // 9,999 draws: each of the three targets expects 3,333 with
        // sigma = sqrt(9999 * 1/3 * 2/3) ~ 47.1; allow 3 sigma.
        let seat = PlayerId::new(3).unwrap();
        let mut counts = [0u32; 4];
        for i in 0..9_999u64 {
            counts[random_baseline_vote(seat, seed::derive(42, "freq", i)).slot()] += 1;
        }
        assert_eq!(counts[seat.slot()], 0);
        for p in seat.others() {
            let c = f64::from(counts[p.slot()]);
            assert!((c - 3333.0).abs() < 3.0 * 47.1, "{counts:?}");
        }
    }
}
