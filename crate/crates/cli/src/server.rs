//! HTTP sessions over live executor runs.
//!
//! Each session runs the execution loop on its own thread. Trace events are
//! appended to a shared log and announced through a watch channel, so event
//! streams never hold up the loop. Human moves go through the world's live
//! queue; pause blocks the loop at its next action gate.

use std::collections::{HashMap, VecDeque};
use std::convert::Infallible;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chainplan_core::executor::{
    run, ExecutionHooks, ExecutorConfig, TraceEvent, DEFAULT_MAX_REPLANS,
};
use chainplan_core::kb::Formulation;
use chainplan_core::object_model::{
    forward_kinematics, forward_kinematics_continuous, AbsConfig, Angle, Pose2D,
};
use chainplan_core::planner::Solver;
use chainplan_core::sim::{HumanAction, WorldState};
use chainplan_core::Scenario;
use futures::Stream;
use serde::{Deserialize, Serialize};
use tokio::sync::watch;

/// Events kept in the state snapshot.
const RECENT_EVENTS: usize = 20;

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CreateSession {
    pub scenario: Scenario,
    /// Start with the action gate closed.
    #[serde(default)]
    pub paused: bool,
    #[serde(default)]
    pub formulation: Option<Formulation>,
    /// "bfs" or "gbfs".
    #[serde(default)]
    pub strategy: Option<String>,
    #[serde(default)]
    pub planner_cmd: Option<String>,
    #[serde(default)]
    pub timeout_s: Option<f64>,
    #[serde(default)]
    pub max_replans: Option<usize>,
}

impl CreateSession {
    fn config(&self) -> Result<ExecutorConfig, String> {
        let seed = self.scenario.seed;
        let solver = match (&self.planner_cmd, self.strategy.as_deref()) {
            (Some(command), _) => Solver::External {
                command: command.clone(),
            },
            (None, None | Some("gbfs")) => Solver::Gbfs { seed },
            (None, Some("bfs")) => Solver::Bfs,
            (None, Some(other)) => return Err(format!("unknown strategy '{other}'")),
        };
        let timeout = Duration::try_from_secs_f64(self.timeout_s.unwrap_or(60.0))
            .map_err(|e| e.to_string())?;
        let cfg = ExecutorConfig {
            formulation: self.formulation.unwrap_or(self.scenario.formulation),
            solver,
            timeout,
            max_replans: self.max_replans.unwrap_or(DEFAULT_MAX_REPLANS),
            ..ExecutorConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionState {
    pub session_id: u64,
    /// Bumped on every trace event.
    pub version: u64,
    pub paused: bool,
    pub ended: bool,
    pub true_config: Vec<f64>,
    /// Joint positions then endpoint, from the true angles.
    pub true_points: Vec<(f64, f64)>,
    pub perceived_config: Option<AbsConfig>,
    pub perceived_poses: Option<Vec<Pose2D>>,
    pub goal: Vec<Angle>,
    pub plan: Vec<String>,
    /// Plan index of the latest started action.
    pub current_step: Option<usize>,
    pub event_count: usize,
    pub recent_events: Vec<TraceEvent>,
}

struct Log {
    events: Vec<TraceEvent>,
    snapshot: SessionState,
}

struct Gate {
    paused: Mutex<bool>,
    cv: Condvar,
}

pub struct Session {
    id: u64,
    joint_count: usize,
    log: Mutex<Log>,
    version: watch::Sender<u64>,
    gate: Gate,
    live: Mutex<mpsc::Sender<HumanAction>>,
}

impl Session {
    pub fn state(&self) -> SessionState {
        let log = self.log.lock().expect("log lock");
        let mut s = log.snapshot.clone();
        s.paused = *self.gate.paused.lock().expect("gate lock");
        s.recent_events = log.events[log.events.len().saturating_sub(RECENT_EVENTS)..].to_vec();
        s
    }

    pub fn events(&self) -> Vec<TraceEvent> {
        self.log.lock().expect("log lock").events.clone()
    }

    fn ended(&self) -> bool {
        self.log.lock().expect("log lock").snapshot.ended
    }

    fn set_paused(&self, paused: bool) {
        *self.gate.paused.lock().expect("gate lock") = paused;
        self.gate.cv.notify_all();
    }
}

struct SessionHooks(Arc<Session>);

impl ExecutionHooks for SessionHooks {
    fn on_event(&mut self, event: &TraceEvent, world: &WorldState) {
        let version = {
            let mut log = self.0.log.lock().expect("log lock");
            let s = &mut log.snapshot;
            s.true_config = world.true_config.clone();
            s.true_points =
                forward_kinematics_continuous(&world.true_config, &world.spec, world.base_pose);
            match event {
                TraceEvent::Perceived { config, .. } => {
                    s.perceived_poses =
                        forward_kinematics(config, &world.spec, world.base_pose).ok();
                    s.perceived_config = Some(config.clone());
                }
                TraceEvent::PlanFound { plan, .. } => {
                    s.plan = plan.clone();
                    s.current_step = None;
                }
                TraceEvent::ActionStarted { index, .. } => s.current_step = Some(*index),
                e if e.is_terminal() => s.ended = true,
                _ => {}
            }
            s.version += 1;
            s.event_count += 1;
            log.events.push(event.clone());
            log.snapshot.version
        };
        self.0.version.send_replace(version);
    }

    fn gate(&mut self) {
        let g = &self.0.gate;
        let mut paused = g.paused.lock().expect("gate lock");
        while *paused {
            paused = g.cv.wait(paused).expect("gate lock");
        }
    }
}

#[derive(Default, Clone)]
pub struct AppState {
    sessions: Arc<Mutex<HashMap<u64, Arc<Session>>>>,
    next_id: Arc<AtomicU64>,
}

impl AppState {
    pub fn session(&self, id: u64) -> Option<Arc<Session>> {
        self.sessions
            .lock()
            .expect("sessions lock")
            .get(&id)
            .cloned()
    }

    /// Starts the run on a background thread.
    pub fn create(&self, req: CreateSession) -> Result<Arc<Session>, String> {
        req.scenario.validate()?;
        let cfg = req.config()?;
        let id = self.next_id.fetch_add(1, Ordering::Relaxed) + 1;
        let (tx, rx) = mpsc::channel();
        let scenario = req.scenario;
        let mut world = scenario.world().with_live_queue(rx);
        let session = Arc::new(Session {
            id,
            joint_count: scenario.object_spec.joint_count(),
            log: Mutex::new(Log {
                events: vec![],
                snapshot: SessionState {
                    session_id: id,
                    version: 0,
                    paused: req.paused,
                    ended: false,
                    true_config: world.state.true_config.clone(),
                    true_points: forward_kinematics_continuous(
                        &world.state.true_config,
                        &world.state.spec,
                        world.state.base_pose,
                    ),
                    perceived_config: None,
                    perceived_poses: None,
                    goal: scenario.goal.clone(),
                    plan: vec![],
                    current_step: None,
                    event_count: 0,
                    recent_events: vec![],
                },
            }),
            version: watch::channel(0).0,
            gate: Gate {
                paused: Mutex::new(req.paused),
                cv: Condvar::new(),
            },
            live: Mutex::new(tx),
        });
        self.sessions
            .lock()
            .expect("sessions lock")
            .insert(id, session.clone());
        let mut hooks = SessionHooks(session.clone());
        std::thread::Builder::new()
            .name(format!("session-{id}"))
            .spawn(move || {
                run(&mut world, &scenario.goal, &cfg, &mut hooks);
            })
            .map_err(|e| e.to_string())?;
        Ok(session)
    }
}

#[derive(Debug)]
pub enum ApiError {
    NotFound,
    BadRequest(String),
    Ended,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (code, msg) = match self {
            ApiError::NotFound => (StatusCode::NOT_FOUND, "unknown session".to_string()),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::Ended => (StatusCode::CONFLICT, "session has ended".to_string()),
        };
        (code, Json(serde_json::json!({ "error": msg }))).into_response()
    }
}

fn body<T: for<'de> Deserialize<'de>>(bytes: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::BadRequest(e.to_string()))
}

fn lookup(app: &AppState, id: &str) -> Result<Arc<Session>, ApiError> {
    id.parse()
        .ok()
        .and_then(|id| app.session(id))
        .ok_or(ApiError::NotFound)
}

async fn create(State(app): State<AppState>, bytes: Bytes) -> Result<impl IntoResponse, ApiError> {
    let req: CreateSession = body(&bytes)?;
    let s = app.create(req).map_err(ApiError::BadRequest)?;
    Ok((
        StatusCode::CREATED,
        Json(serde_json::json!({ "sessionId": s.id })),
    ))
}

async fn state(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionState>, ApiError> {
    Ok(Json(lookup(&app, &id)?.state()))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct InterveneBody {
    joint_idx: usize,
    orientation_deg: f64,
    #[serde(default = "upstream")]
    hold: chainplan_core::Hold,
}

fn upstream() -> chainplan_core::Hold {
    chainplan_core::Hold::Upstream
}

async fn intervene(
    State(app): State<AppState>,
    Path(id): Path<String>,
    bytes: Bytes,
) -> Result<impl IntoResponse, ApiError> {
    let s = lookup(&app, &id)?;
    let b: InterveneBody = body(&bytes)?;
    if b.joint_idx >= s.joint_count {
        return Err(ApiError::BadRequest(format!(
            "joint {} of {}",
            b.joint_idx, s.joint_count
        )));
    }
    if !b.orientation_deg.is_finite() {
        return Err(ApiError::BadRequest("orientationDeg must be finite".into()));
    }
    if s.ended() {
        return Err(ApiError::Ended);
    }
    let action = HumanAction {
        joint_idx: b.joint_idx,
        orientation_deg: b.orientation_deg,
        hold: b.hold,
    };
    s.live
        .lock()
        .expect("live lock")
        .send(action)
        .map_err(|_| ApiError::Ended)?;
    Ok((
        StatusCode::ACCEPTED,
        Json(serde_json::json!({ "queued": action })),
    ))
}

async fn set_paused(
    app: AppState,
    id: String,
    paused: bool,
) -> Result<Json<serde_json::Value>, ApiError> {
    let s = lookup(&app, &id)?;
    if s.ended() {
        return Err(ApiError::Ended);
    }
    s.set_paused(paused);
    Ok(Json(serde_json::json!({ "paused": paused })))
}

async fn pause(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<serde_json::Value>, ApiError> {
    set_paused(app, id, true).await
}

async fn resume(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<serde_json::Value>, ApiError> {
    set_paused(app, id, false).await
}

/// Replays the log from the start, then follows it until the terminal event.
fn event_stream(s: Arc<Session>) -> impl Stream<Item = Result<Event, Infallible>> {
    let rx = s.version.subscribe();
    futures::stream::unfold(
        (s, rx, 0usize, VecDeque::new()),
        |(s, mut rx, mut next, mut buf)| async move {
            loop {
                if let Some(e) = buf.pop_front() {
                    let data = serde_json::to_string(&e).expect("trace events serialize");
                    let ev = Event::default()
                        .id((next - buf.len() - 1).to_string())
                        .data(data);
                    return Some((Ok(ev), (s, rx, next, buf)));
                }
                let (fresh, ended) = {
                    let log = s.log.lock().expect("log lock");
                    (log.events[next..].to_vec(), log.snapshot.ended)
                };
                if fresh.is_empty() {
                    if ended {
                        return None;
                    }
                    rx.borrow_and_update();
                    // Re-check after marking seen so an event between the read
                    // and the wait is not missed.
                    if s.log.lock().expect("log lock").events.len() > next {
                        continue;
                    }
                    if rx.changed().await.is_err() {
                        return None;
                    }
                    continue;
                }
                next += fresh.len();
                buf.extend(fresh);
            }
        },
    )
}

async fn events(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<impl IntoResponse, ApiError> {
    let s = lookup(&app, &id)?;
    Ok(Sse::new(event_stream(s)))
}

pub fn router(app: AppState) -> Router {
    Router::new()
        .route("/session", post(create))
        .route("/session/{id}/state", get(state))
        .route("/session/{id}/events", get(events))
        .route("/session/{id}/intervene", post(intervene))
        .route("/session/{id}/pause", post(pause))
        .route("/session/{id}/resume", post(resume))
        .with_state(app)
}
