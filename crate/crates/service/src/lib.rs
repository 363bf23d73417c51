//! HTTP play service. Humans join live games by token and play alongside
//! model, oracle, random or scripted seats.
//!
//! Routes:
//!
//! | method | path | purpose |
//! |---|---|---|
//! | POST | `/games` | create a game, returns join tokens for human seats |
//! | POST | `/games/{id}/join` | trade a join token for a session token |
//! | GET | `/games/{id}/state?token=` | the seat's redacted view |
//! | GET | `/games/{id}/events?token=` | the same view as a server-sent event stream |
//! | POST | `/games/{id}/action` | submit a description, judgment or vote |
//! | GET | `/games/{id}/transcript?token=` | full record after the game, admin token only |

mod game;
mod view;

use std::collections::HashMap;
use std::convert::Infallible;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::Stream;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use whospy_core::agents::{HumanAction, MailboxError, Verdict, DEFAULT_HUMAN_TIMEOUT};
use whospy_core::dataset::Dataset;
use whospy_core::game::{GameConfig, PlayerId, WordGroup, NUM_PLAYERS};
use whospy_core::harness::{AgentPool, AgentSpec};
use whospy_core::llm::{LlmConfig, LlmError};
use whospy_core::referee::{GameRecord, Referee};

pub use game::{GameHandle, JoinError, JoinToken, SeatKind};
pub use view::{GameStatus, Pending, SeatView, Snapshot, VoteCast, MASK};

pub struct ServiceConfig {
    pub dataset: Dataset,
    /// Endpoint for `llm` seats; such seats are refused when absent.
    pub llm: Option<LlmConfig>,
    pub admin_token: String,
    pub human_timeout: Duration,
    /// Directory with the browser client, served at `/`.
    pub static_dir: Option<PathBuf>,
}

impl ServiceConfig {
    pub fn new(dataset: Dataset, admin_token: impl Into<String>) -> Self {
        ServiceConfig {
            dataset,
            llm: None,
            admin_token: admin_token.into(),
            human_timeout: DEFAULT_HUMAN_TIMEOUT,
            static_dir: None,
        }
    }
}

pub struct AppState {
    referee: Arc<Referee>,
    dataset: Dataset,
    llm: Option<AgentPool>,
    admin_token: String,
    human_timeout: Duration,
    games: RwLock<HashMap<String, Arc<GameHandle>>>,
}

impl AppState {
    pub fn new(config: &ServiceConfig) -> Result<Self, LlmError> {
        let llm = config
            .llm
            .clone()
            .map(|config| AgentPool::new(AgentSpec::Llm { config }))
            .transpose()?;
        Ok(AppState {
            referee: Arc::new(Referee::default()),
            dataset: config.dataset.clone(),
            llm,
            admin_token: config.admin_token.clone(),
            human_timeout: config.human_timeout,
            games: RwLock::new(HashMap::new()),
        })
    }

    pub fn game(&self, id: &str) -> Option<Arc<GameHandle>> {
        self.games.read().unwrap().get(id).cloned()
    }
}

pub fn router(config: ServiceConfig) -> Result<Router, LlmError> {
    let state = Arc::new(AppState::new(&config)?);
    let api = Router::new()
        .route("/games", post(create_game))
        .route("/games/{id}/join", post(join_game))
        .route("/games/{id}/state", get(get_state))
        .route("/games/{id}/events", get(stream_state))
        .route("/games/{id}/action", post(submit_action))
        .route("/games/{id}/transcript", get(get_transcript))
        .with_state(state);
    Ok(match config.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { "whospy play service\n" })),
    })
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

/// How the word group is chosen.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupSelector {
    Id(String),
    Index(usize),
    Custom {
        civilian_word: String,
        spy_word: String,
        category: String,
    },
    /// Seeded by the game's `rng_seed`.
    #[default]
    Random,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateGame {
    #[serde(default)]
    pub config: GameConfig,
    pub seats: [SeatKind; NUM_PLAYERS],
    #[serde(default)]
    pub group: GroupSelector,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreatedGame {
    pub game_id: String,
    pub status: GameStatus,
    pub join_tokens: Vec<JoinToken>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JoinRequest {
    pub token: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Joined {
    pub seat: PlayerId,
    /// Identifies the seat on every later call.
    pub session_token: String,
    pub started: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionRequest {
    pub token: String,
    pub action: HumanAction,
}

#[derive(Debug, Clone, Deserialize)]
pub struct TokenQuery {
    pub token: String,
}

type Shared = State<Arc<AppState>>;

fn resolve_group(state: &AppState, selector: &GroupSelector, seed: u64) -> Result<WordGroup, ApiError> {
    let bad = |m: String| ApiError::new(StatusCode::BAD_REQUEST, m);
    match selector {
        GroupSelector::Id(id) => state.dataset.get(id).cloned().ok_or_else(|| bad(format!("unknown word group `{id}`"))),
        GroupSelector::Index(i) => state
            .dataset
            .groups()
            .get(*i)
            .cloned()
            .ok_or_else(|| bad(format!("group index {i} is out of range"))),
        GroupSelector::Custom {
            civilian_word,
            spy_word,
            category,
        } => WordGroup::new("custom", civilian_word, spy_word, category).map_err(|e| bad(e.to_string())),
        GroupSelector::Random => Ok(state.dataset.sample_group(seed).clone()),
    }
}

async fn create_game(State(state): Shared, Json(req): Json<CreateGame>) -> Result<impl IntoResponse, ApiError> {
    let group = resolve_group(&state, &req.group, req.config.rng_seed)?;
    let (game, join_tokens) =
        GameHandle::create(req.config, group, req.seats, state.llm.as_ref(), state.human_timeout)
            .map_err(|m| ApiError::new(StatusCode::BAD_REQUEST, m))?;
    state.games.write().unwrap().insert(game.id.clone(), Arc::clone(&game));
    game.start_if_ready(Arc::clone(&state.referee));
    tracing::info!(game = %game.id, humans = join_tokens.len(), "game created");
    let body = CreatedGame {
        game_id: game.id.clone(),
        status: game.snapshot().status,
        join_tokens,
    };
    Ok((StatusCode::CREATED, Json(body)))
}

fn find(state: &AppState, id: &str) -> Result<Arc<GameHandle>, ApiError> {
    state.game(id).ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no game `{id}`")))
}

fn seat(game: &GameHandle, token: &str) -> Result<PlayerId, ApiError> {
    game.seat_for(token)
        .ok_or_else(|| ApiError::new(StatusCode::FORBIDDEN, "token does not belong to a seat in this game"))
}

async fn join_game(
    State(state): Shared,
    Path(id): Path<String>,
    Json(req): Json<JoinRequest>,
) -> Result<Json<Joined>, ApiError> {
    let game = find(&state, &id)?;
    let (seat, session_token) = game.join(&req.token).map_err(|e| match e {
        JoinError::AlreadyUsed => ApiError::new(StatusCode::CONFLICT, "join token was already used"),
        JoinError::Unknown => ApiError::new(StatusCode::FORBIDDEN, "unknown join token"),
    })?;
    let started = game.start_if_ready(Arc::clone(&state.referee)) || game.awaiting_joins() == 0;
    Ok(Json(Joined {
        seat,
        session_token,
        started,
    }))
}

async fn get_state(
    State(state): Shared,
    Path(id): Path<String>,
    Query(q): Query<TokenQuery>,
) -> Result<Json<SeatView>, ApiError> {
    let game = find(&state, &id)?;
    let seat = seat(&game, &q.token)?;
    Ok(Json(game.snapshot().view(&game.id, seat)))
}

async fn stream_state(
    State(state): Shared,
    Path(id): Path<String>,
    Query(q): Query<TokenQuery>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let game = find(&state, &id)?;
    let seat = seat(&game, &q.token)?;
    let rx = game.subscribe();
    // Emits the current view, then one view per change until the game is over.
    let events = futures::stream::unfold((rx, game, false, false), move |(mut rx, game, sent, done)| async move {
        if done {
            return None;
        }
        if sent && rx.changed().await.is_err() {
            return None;
        }
        let snap = rx.borrow_and_update().clone();
        let view = snap.view(&game.id, seat);
        let event = Event::default().event("state").json_data(&view).expect("view serializes");
        Some((Ok(event), (rx, game, true, snap.is_over())))
    });
    Ok(Sse::new(events).keep_alive(KeepAlive::default()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionReply {
    #[serde(flatten)]
    pub verdict: Verdict,
}

async fn submit_action(
    State(state): Shared,
    Path(id): Path<String>,
    Json(req): Json<ActionRequest>,
) -> Result<Response, ApiError> {
    let game = find(&state, &id)?;
    let seat = seat(&game, &req.token)?;
    let mailbox = game
        .mailbox(seat)
        .ok_or_else(|| ApiError::new(StatusCode::FORBIDDEN, "seat is not played by a human"))?;
    let verdict = match mailbox.submit(req.action).await {
        Ok(v) => v,
        Err(MailboxError::Closed) => return Err(ApiError::new(StatusCode::GONE, "the game is over")),
    };
    let status = match verdict {
        Verdict::Accepted => StatusCode::OK,
        Verdict::Rejected(_) => StatusCode::UNPROCESSABLE_ENTITY,
        Verdict::OutOfTurn => StatusCode::CONFLICT,
    };
    Ok((status, Json(ActionReply { verdict })).into_response())
}

async fn get_transcript(
    State(state): Shared,
    Path(id): Path<String>,
    Query(q): Query<TokenQuery>,
) -> Result<Json<GameRecord>, ApiError> {
    let game = find(&state, &id)?;
    if q.token != state.admin_token {
        return Err(ApiError::new(StatusCode::FORBIDDEN, "the transcript needs the admin token"));
    }
    game.record()
        .map(Json)
        .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "the game has not finished"))
}
