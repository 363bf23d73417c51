//! Batch experiments: many seeded games over a dataset, metric aggregation,
//! transcript archives and the ablation table.

mod ablation;
mod archive;

use std::path::PathBuf;
use std::sync::Arc;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

pub use ablation::{render_table, render_ticket_table, render_tickets, run_ablation, AblationReport, Arm};
pub use archive::{
    archive_digest, read_manifest, read_records, ArchiveWriter, DatasetInfo, Manifest, ARCHIVE_FORMAT, GAMES_FILE,
    MANIFEST_FILE,
};

use crate::agents::{Agent, LlmAgent, OracleAgent, RandomBaselineAgent, Seats};
use crate::dataset::Dataset;
use crate::game::{GameConfig, MetricsReport, PlayerId, RoleAssignment, RuleError, ScoredGame, WordGroup};
use crate::llm::{LlmClient, LlmConfig, LlmError};
use crate::referee::{GameRecord, RefereeError, Referee};
use crate::seed;
use crate::text::Language;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    InvalidConfig(#[from] RuleError),
    #[error("n_games and parallelism must be at least 1")]
    NoGames,
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}, line {line}: {message}")]
    Archive { path: PathBuf, line: usize, message: String },
    #[error("archive has no completed games")]
    EmptyArchive,
}

/// Which kind of agent fills every seat in a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentSpec {
    /// Knows the roles; judges correctly with the given probability.
    Oracle { accuracy: f64 },
    Random,
    Llm { config: LlmConfig },
}

/// Builds fresh seats per game from an [`AgentSpec`]. LLM seats share one
/// client so its concurrency ceiling applies across the whole batch.
#[derive(Debug, Clone)]
pub struct AgentPool {
    spec: AgentSpec,
    client: Option<Arc<LlmClient>>,
}

impl AgentPool {
    pub fn new(spec: AgentSpec) -> Result<Self, LlmError> {
        let client = match &spec {
            AgentSpec::Llm { config } => Some(Arc::new(LlmClient::new(config.clone())?)),
            _ => None,
        };
        Ok(AgentPool { spec, client })
    }

    pub fn spec(&self) -> &AgentSpec {
        &self.spec
    }

    pub fn seats(&self, config: &GameConfig, group: &WordGroup) -> Seats {
        let assignment = Referee::roles_for(config, group);
        PlayerId::ALL.map(|seat| self.agent(config, &assignment, seat))
    }

    /// The agent for one seat. Seeds depend only on the game seed and seat, so
    /// a seat built here plays the same whatever fills the other seats.
    pub fn agent(&self, config: &GameConfig, assignment: &RoleAssignment, seat: PlayerId) -> Box<dyn Agent> {
        let agent_seed = seed::derive(config.rng_seed, "agent", u64::from(seat.index()));
        match &self.spec {
            AgentSpec::Oracle { accuracy } => Box::new(OracleAgent::new(seat, assignment.clone(), *accuracy, agent_seed)),
            AgentSpec::Random => Box::new(RandomBaselineAgent::new(seat, agent_seed)),
            AgentSpec::Llm { .. } => Box::new(LlmAgent::new(self.client.clone().expect("client built for llm spec"), seat)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BatchOptions {
    pub n_games: usize,
    pub parallelism: usize,
    /// Archive directory; nothing is persisted when `None`.
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct BatchOutcome {
    pub report: MetricsReport,
    pub records: Vec<GameRecord>,
    pub archive: Option<PathBuf>,
}

/// Seed for game `index` of a batch with the given master seed.
pub fn game_seed(master_seed: u64, index: usize) -> u64 {
    seed::derive(master_seed, "game", index as u64)
}

/// Metrics over completed records; aborted ones are only counted.
pub fn report_from_records(records: &[GameRecord]) -> MetricsReport {
    let aborted = records.iter().filter(|r| !r.is_complete()).count() as u64;
    let scored = records.iter().filter_map(|r| match (&r.outcome, &r.votes, r.abort.is_none()) {
        (Some(outcome), Some(votes), true) => Some(ScoredGame {
            outcome,
            votes,
            assignment: &r.assignment,
        }),
        _ => None,
    });
    MetricsReport::from_games(scored, aborted)
}

/// Histogram of wrong civilian votes per completed game (index 0..=3).
pub fn ticket_statistics(records: &[GameRecord]) -> Result<[u64; 4], HarnessError> {
    let report = report_from_records(records);
    if report.games == 0 {
        return Err(HarnessError::EmptyArchive);
    }
    Ok(report.ticket_histogram)
}

/// Runs `n_games` independent games. `config.rng_seed` is the master seed;
/// game `i` plays dataset group `i mod len` with seed [`game_seed`]`(master, i)`.
/// Results are written in game order whatever the parallelism.
pub async fn run_batch(
    referee: &Referee,
    config: &GameConfig,
    pool: &AgentPool,
    dataset: &Dataset,
    options: &BatchOptions,
) -> Result<BatchOutcome, HarnessError> {
    run_batch_labeled(referee, config, pool, dataset, options, None).await
}

pub(crate) async fn run_batch_labeled(
    referee: &Referee,
    config: &GameConfig,
    pool: &AgentPool,
    dataset: &Dataset,
    options: &BatchOptions,
    arm: Option<&str>,
) -> Result<BatchOutcome, HarnessError> {
    config.validate()?;
    if options.n_games == 0 || options.parallelism == 0 {
        return Err(HarnessError::NoGames);
    }
    let master = config.rng_seed;
    let mut writer = match &options.out_dir {
        Some(dir) => {
            let languages: std::collections::BTreeSet<Language> = (0..options.n_games.min(dataset.len()))
                .map(|i| Referee::language_for(config, dataset.group_for_game(i)))
                .collect();
            let manifest = Manifest {
                format: ARCHIVE_FORMAT.into(),
                master_seed: master,
                n_games: options.n_games,
                config: config.clone(),
                agents: pool.spec().clone(),
                dataset: DatasetInfo {
                    source: dataset.source().display().to_string(),
                    groups: dataset.len(),
                    declared_theta: dataset.declared_theta(),
                },
                prompt_catalogues: languages.into_iter().map(|l| referee.prompts().get(l).stamp()).collect(),
                arm: arm.map(str::to_string),
            };
            Some(ArchiveWriter::create(dir, &manifest)?)
        }
        None => None,
    };

    let games = stream::iter(0..options.n_games)
        .map(|i| {
            let game_config = GameConfig {
                rng_seed: game_seed(master, i),
                ..config.clone()
            };
            let group = dataset.group_for_game(i).clone();
            async move {
                let mut seats = pool.seats(&game_config, &group);
                match referee.run_game(&game_config, &mut seats, &group).await {
                    Ok(record) => Ok(record),
                    Err(RefereeError::Aborted(record)) => Ok(*record),
                    Err(RefereeError::InvalidConfig(e)) => Err(HarnessError::InvalidConfig(e)),
                }
            }
        })
        .buffered(options.parallelism);
    futures::pin_mut!(games);

    let mut records = Vec::with_capacity(options.n_games);
    while let Some(record) = games.next().await {
        let record = record?;
        if let Some(w) = writer.as_mut() {
            w.append(&record)?;
        }
        records.push(record);
    }
    let archive = writer.map(ArchiveWriter::finish).transpose()?;
    let report = report_from_records(&records);
    tracing::info!(games = report.games, aborted = report.aborted, cwr = %report.cwr, "batch finished");
    Ok(BatchOutcome {
        report,
        records,
        archive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[tokio::test]
    async fn perfect_oracles_always_catch_the_spy() {
        let dataset = crate::dataset::builtin_en();
        let config = GameConfig {
            ablation: crate::game::Ablation {
                judge_cot: true,
                ..Default::default()
            },
            rng_seed: 5,
            ..GameConfig::default()
        };
        let pool = AgentPool::new(AgentSpec::Oracle { accuracy: 1.0 }).unwrap();
        let opts = BatchOptions {
            n_games: 12,
            parallelism: 3,
            out_dir: None,
        };
        let out = run_batch(&Referee::default(), &config, &pool, &dataset, &opts).await.unwrap();
        assert_eq!(out.report.spy_out, 12);
        assert_eq!(out.report.cwr.percent(), 100.0);
        assert_eq!(out.report.cmr.hits, 0);
        assert_eq!(out.report.ticket_histogram, [12, 0, 0, 0]);
    }

    #[test]
    fn zero_games_rejected() {
        let rt = tokio::runtime::Builder::new_current_thread().build().unwrap();
        let pool = AgentPool::new(AgentSpec::Random).unwrap();
        let opts = BatchOptions {
            n_games: 0,
            parallelism: 1,
            out_dir: None,
        };
        let r = rt.block_on(run_batch(
            &Referee::default(),
            &GameConfig::default(),
            &pool,
            &crate::dataset::builtin_en(),
            &opts,
        ));
        assert!(matches!(r, Err(HarnessError::NoGames)));
    }
}
