mod terminal;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use whospy_core::agents::{human_seat, Agent, Seats};
use whospy_core::dataset::{builtin_en, builtin_zh, load_groups, Dataset};
use whospy_core::game::{GameConfig, PlayerId, WordGroup};
use whospy_core::harness::{
    read_manifest, read_records, render_table, render_ticket_table, run_ablation, run_batch, AgentPool, AgentSpec,
    Arm, BatchOptions, MANIFEST_FILE,
};
use whospy_core::llm::mock::{MockChatServer, MockReply, MockScript};
use whospy_core::llm::{ApiKey, LlmConfig};
use whospy_core::referee::{Referee, RefereeError};
use whospy_core::text::Language;
use whospy_service::ServiceConfig;

#[derive(Parser)]
#[command(name = "whospy", version, about = "Who is the Spy: LLM agents, referee and experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play one game and print its transcript.
    Run(RunArgs),
    /// Play many seeded games and write an archive.
    Batch(BatchArgs),
    /// Run the same batch under several chain-of-thought arms.
    Ablation(AblationArgs),
    /// Recompute metrics from archives on disk.
    Report(ReportArgs),
    /// Start the HTTP play service.
    Serve(ServeArgs),
    /// Start a scripted chat-completions server for offline runs.
    MockLlm(MockArgs),
}

#[derive(Args, Clone)]
struct DatasetArgs {
    /// Word-group file (JSON Lines). Defaults to the bundled groups.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Which bundled group set to use when --dataset is absent.
    #[arg(long, value_enum, default_value = "en")]
    builtin: LangArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum LangArg {
    En,
    Zh,
}

impl From<LangArg> for Language {
    fn from(l: LangArg) -> Self {
        match l {
            LangArg::En => Language::En,
            LangArg::Zh => Language::Zh,
        }
    }
}

impl DatasetArgs {
    fn load(&self) -> Result<Dataset> {
        match &self.dataset {
            Some(path) => Ok(load_groups(path)?),
            None => Ok(match self.builtin {
                LangArg::En => builtin_en(),
                LangArg::Zh => builtin_zh(),
            }),
        }
    }
}

#[derive(Args, Clone)]
struct GameArgs {
    /// Chain-of-thought arm: nc, jc, jc-dc or jc-dc-sc.
    #[arg(long, default_value = "nc")]
    arm: Arm,
    /// Rounds of describe (and judge) before the vote.
    #[arg(long = "rounds", short = 'm', default_value_t = 2)]
    rounds: u32,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Attempts per request before the game is aborted.
    #[arg(long, default_value_t = 3)]
    retry_cap: u32,
    /// Maximum word units per description.
    #[arg(long, default_value_t = 60)]
    word_limit: u32,
    /// Prompt language; follows each word group when absent.
    #[arg(long, value_enum)]
    language: Option<LangArg>,
}

impl GameArgs {
    fn config(&self) -> GameConfig {
        GameConfig {
            num_rounds: self.rounds,
            ablation: self.arm.ablation(),
            retry_cap: self.retry_cap,
            describe_word_limit: self.word_limit,
            rng_seed: self.seed,
            language: self.language.map(Into::into),
        }
    }
}

#[derive(Args, Clone)]
struct LlmArgs {
    /// TOML file with model settings (endpoint, model, temperature, ...).
    #[arg(long)]
    llm_config: Option<PathBuf>,
    /// Chat-completions base URL, e.g. https://api.example.com/v1.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    temperature: Option<f32>,
    #[arg(long)]
    max_tokens: Option<u32>,
    /// Simultaneous requests to the model endpoint.
    #[arg(long)]
    max_concurrency: Option<usize>,
}

impl LlmArgs {
    fn config(&self) -> Result<LlmConfig> {
        let mut config = match &self.llm_config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => LlmConfig::default(),
        };
        if let Some(e) = &self.endpoint {
            config.endpoint = e.clone();
        }
        if let Some(m) = &self.model {
            config.model = m.clone();
        }
        if let Some(t) = self.temperature {
            config.temperature = t;
        }
        if let Some(t) = self.max_tokens {
            config.max_tokens = t;
        }
        if let Some(c) = self.max_concurrency {
            config.max_concurrency = c;
        }
        config.api_key = ApiKey::from_env();
        Ok(config)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AgentKind {
    Llm,
    Oracle,
    Random,
}

#[derive(Args, Clone)]
struct AgentArgs {
    /// What fills the non-human seats.
    #[arg(long, value_enum, default_value = "llm")]
    agents: AgentKind,
    /// How often oracle agents judge correctly.
    #[arg(long, default_value_t = 0.8)]
    accuracy: f64,
    #[command(flatten)]
    llm: LlmArgs,
}

impl AgentArgs {
    fn spec(&self) -> Result<AgentSpec> {
        Ok(match self.agents {
            AgentKind::Llm => AgentSpec::Llm {
                config: self.llm.config()?,
            },
            AgentKind::Oracle => {
                if !(0.0..=1.0).contains(&self.accuracy) {
                    bail!("--accuracy must be within [0, 1]");
                }
                AgentSpec::Oracle {
                    accuracy: self.accuracy,
                }
            }
            AgentKind::Random => AgentSpec::Random,
        })
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    #[command(flatten)]
    game: GameArgs,
    #[command(flatten)]
    agents: AgentArgs,
    /// Word group id; sampled with the seed when absent.
    #[arg(long)]
    group: Option<String>,
    /// Seat played from this terminal (1-4).
    #[arg(long)]
    human: Option<u8>,
    /// Seconds the human seat may take per action.
    #[arg(long, default_value_t = 300)]
    human_timeout: u64,
    /// Write the game record as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BatchArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    #[command(flatten)]
    game: GameArgs,
    #[command(flatten)]
    agents: AgentArgs,
    #[arg(long, short = 'n', default_value_t = 100)]
    n_games: usize,
    /// Games in flight at once.
    #[arg(long, short = 'j', default_value_t = 4)]
    parallelism: usize,
    /// Archive directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AblationArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    #[command(flatten)]
    game: GameArgs,
    #[command(flatten)]
    agents: AgentArgs,
    /// Comma-separated arms.
    #[arg(long, value_delimiter = ',', default_value = "nc,jc,jc-dc,jc-dc-sc")]
    arms: Vec<Arm>,
    #[arg(long, short = 'n', default_value_t = 100)]
    n_games: usize,
    #[arg(long, short = 'j', default_value_t = 4)]
    parallelism: usize,
    /// Root directory; each arm writes to its own subdirectory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// An archive directory, or a directory of archives (an ablation run).
    archive: PathBuf,
    /// Also print the wrong-civilian-vote histogram.
    #[arg(long)]
    tickets: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8000")]
    bind: SocketAddr,
    #[command(flatten)]
    dataset: DatasetArgs,
    /// Browser client to serve at /.
    #[arg(long)]
    static_dir: Option<PathBuf>,
    /// Token for full transcripts; generated and printed when absent.
    #[arg(long, env = "WHOSPY_ADMIN_TOKEN")]
    admin_token: Option<String>,
    /// Seconds a human seat may take per action.
    #[arg(long, default_value_t = 300)]
    human_timeout: u64,
    /// Allow `llm` seats, using the model settings below.
    #[arg(long)]
    enable_llm: bool,
    #[command(flatten)]
    llm: LlmArgs,
}

#[derive(Args)]
struct MockArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    /// JSON script of rules and replies; a generic script is used when absent.
    #[arg(long)]
    script: Option<PathBuf>,
}

fn pick_group(dataset: &Dataset, id: Option<&str>, seed: u64) -> Result<WordGroup> {
    match id {
        Some(id) => dataset.get(id).cloned().with_context(|| format!("no word group `{id}` in the dataset")),
        None => Ok(dataset.sample_group(seed).clone()),
    }
}

async fn cmd_run(args: RunArgs) -> Result<()> {
    let dataset = args.dataset.load()?;
    let config = args.game.config();
    config.validate()?;
    let group = pick_group(&dataset, args.group.as_deref(), config.rng_seed)?;
    let pool = AgentPool::new(args.agents.spec()?)?;
    let referee = Referee::default();
    let assignment = Referee::roles_for(&config, &group);

    if let Some(h) = args.human {
        if !(1..=4).contains(&h) {
            bail!("--human must be a seat between 1 and 4");
        }
    }

    let mut human = None;
    let mut seats: Seats = PlayerId::ALL.map(|seat| -> Box<dyn Agent> {
        if args.human == Some(seat.index()) {
            let (agent, mailbox) = human_seat(seat, Duration::from_secs(args.human_timeout));
            human = Some(mailbox);
            Box::new(agent)
        } else {
            pool.agent(&config, &assignment, seat)
        }
    });

    let result = match human {
        Some(mailbox) => {
            let observer = terminal::Narrator::new(mailbox.seat(), &assignment);
            let player = tokio::spawn(terminal::play(mailbox));
            let result = referee.run_game_observed(&config, &mut seats, &group, &observer).await;
            // Dropping the seats closes the mailbox and ends the input loop.
            drop(seats);
            player.abort();
            result
        }
        None => referee.run_game(&config, &mut seats, &group).await,
    };
    let (record, aborted) = match result {
        Ok(r) => (r, false),
        Err(RefereeError::Aborted(r)) => (*r, true),
        Err(e) => return Err(e.into()),
    };
    print!("{}", terminal::summary(&record));
    if let Some(path) = &args.out {
        let json = serde_json::to_string_pretty(&record)?;
        std::fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
        println!("record written to {}", path.display());
    }
    if aborted {
        bail!("game aborted");
    }
    Ok(())
}

async fn cmd_batch(args: BatchArgs) -> Result<()> {
    let dataset = args.dataset.load()?;
    let pool = AgentPool::new(args.agents.spec()?)?;
    let options = BatchOptions {
        n_games: args.n_games,
        parallelism: args.parallelism,
        out_dir: args.out.clone(),
    };
    let out = run_batch(&Referee::default(), &args.game.config(), &pool, &dataset, &options).await?;
    print!("{}", render_table(&[(args.game.arm.label().to_string(), out.report)]));
    if let Some(dir) = out.archive {
        println!("\narchive written to {}", dir.display());
    }
    Ok(())
}

async fn cmd_ablation(args: AblationArgs) -> Result<()> {
    let dataset = args.dataset.load()?;
    let pool = AgentPool::new(args.agents.spec()?)?;
    let options = BatchOptions {
        n_games: args.n_games,
        parallelism: args.parallelism,
        out_dir: args.out.clone(),
    };
    let report = run_ablation(&Referee::default(), &args.game.config(), &args.arms, &pool, &dataset, &options).await?;
    print!("{}", report.render());
    println!();
    print!("{}", whospy_core::harness::render_tickets(&report));
    if let Some(dir) = &args.out {
        println!("\narchives written under {}", dir.display());
    }
    Ok(())
}

fn archive_label(dir: &Path) -> Result<String> {
    let manifest = read_manifest(dir)?;
    Ok(manifest.arm.unwrap_or_else(|| {
        Arm::ALL
            .into_iter()
            .find(|a| a.ablation() == manifest.config.ablation)
            .map(|a| a.label().to_string())
            .unwrap_or_else(|| dir.display().to_string())
    }))
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let mut dirs = Vec::new();
    if args.archive.join(MANIFEST_FILE).is_file() {
        dirs.push(args.archive.clone());
    } else {
        // An ablation root: arms in table order, then anything else sorted.
        let mut found: Vec<PathBuf> = std::fs::read_dir(&args.archive)
            .with_context(|| format!("reading {}", args.archive.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join(MANIFEST_FILE).is_file())
            .collect();
        found.sort_by_key(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            (Arm::ALL.iter().position(|a| a.slug() == name).unwrap_or(usize::MAX), name)
        });
        dirs = found;
    }
    if dirs.is_empty() {
        bail!("no archive found at {}", args.archive.display());
    }
    let mut rows = Vec::new();
    for dir in &dirs {
        let records = read_records(dir)?;
        rows.push((archive_label(dir)?, whospy_core::harness::report_from_records(&records)));
    }
    print!("{}", render_table(&rows));
    if args.tickets {
        println!();
        print!("{}", render_ticket_table(&rows));
    }
    Ok(())
}

async fn cmd_serve(args: ServeArgs) -> Result<()> {
    let admin_token = args.admin_token.clone().unwrap_or_else(|| {
        let t = uuid::Uuid::new_v4().simple().to_string();
        eprintln!("admin token: {t}");
        t
    });
    let mut config = ServiceConfig::new(args.dataset.load()?, admin_token);
    config.human_timeout = Duration::from_secs(args.human_timeout);
    config.static_dir = args.static_dir.clone();
    if args.enable_llm {
        config.llm = Some(args.llm.config()?);
    }
    let app = whospy_service::router(config)?;
    let listener = tokio::net::TcpListener::bind(args.bind).await.with_context(|| format!("binding {}", args.bind))?;
    eprintln!("play service listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app).with_graceful_shutdown(shutdown()).await?;
    Ok(())
}

/// Answers every phase, in either prompt language, with a harmless canned
/// reply. Votes cycle through the seat numbers so a rejected self-vote is
/// followed by a different target.
fn generic_script() -> MockScript {
    let votes: Vec<MockReply> = (0..1000).map(|i| MockReply::text((i % 4 + 1).to_string())).collect();
    let judgment = MockReply::text("PLAYER 1: unsure\nPLAYER 2: unsure\nPLAYER 3: unsure\nPLAYER 4: other\nSPY: 4");
    MockScript::default()
        .rule(["Reply with \"OK\""], vec![MockReply::text("OK")])
        .rule(["请回复“好的”"], vec![MockReply::text("好的")])
        .rule(["Your task now is to judge"], vec![judgment])
        .rule(["现在你的任务是判断谁是卧底"], vec![MockReply::text("玩家1：不确定\n玩家2：不确定\n玩家3：不确定\n玩家4：其他\n卧底：4")])
        .rule(["Please vote"], votes.clone())
        .rule(["请投票"], votes)
        .fallback(MockReply::text("DESCRIPTION: It is something you may have seen before."))
}

async fn cmd_mock(args: MockArgs) -> Result<()> {
    let script = match &args.script {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => generic_script(),
    };
    let server = MockChatServer::bind(script, args.bind).await?;
    eprintln!("mock chat server listening on {}", server.endpoint());
    shutdown().await;
    Ok(())
}

async fn shutdown() {
    let _ = tokio::signal::ctrl_c().await;
}

#[tokio::main]
async fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Run(a) => cmd_run(a).await,
        Command::Batch(a) => cmd_batch(a).await,
        Command::Ablation(a) => cmd_ablation(a).await,
        Command::Report(a) => cmd_report(a),
        Command::Serve(a) => cmd_serve(a).await,
        Command::MockLlm(a) => cmd_mock(a).await,
    }
}
