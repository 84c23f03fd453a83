//! Recognition service: a WebSocket stream at `/session` that turns
//! grayscale frames into stabilized detections, plus read-only lookups
//! for targets, herb content and wireframe models.
//!
//! The target database and catalog are loaded once and shared immutably.
//! Each WebSocket connection owns one [`Session`] and processes its frames
//! strictly in arrival order.

mod http;
pub mod protocol;
pub mod session;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use herbar_core::content::{load_catalog, Catalog, ContentError};
use herbar_core::features::ExtractParams;
use herbar_core::matcher::RecognizeParams;
use herbar_core::pose::{PoseError, WireframeModel};
use herbar_core::targetdb::{load_db, DbError, TargetDatabase};
use thiserror::Error;

pub use http::router;
pub use protocol::{DetectionBody, ErrorCode, FrameKind, FrameMessage, ServerMessage, WirePose};
pub use session::{Hysteresis, Session};

pub const DEFAULT_HYSTERESIS: usize = 3;
pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("database {path}: {source}")]
    Database {
        path: String,
        #[source]
        source: DbError,
    },
    #[error("catalog {path}: {source}")]
    Catalog {
        path: String,
        #[source]
        source: ContentError,
    },
    #[error("models directory {0} does not exist")]
    MissingModels(String),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub db: PathBuf,
    pub catalog: PathBuf,
    pub models: Option<PathBuf>,
    pub host: String,
    pub port: u16,
    pub seed: u64,
    pub min_inliers: usize,
    pub hysteresis: usize,
}

/// Everything sessions share, immutable after startup.
#[derive(Debug)]
pub struct Engine {
    pub db: TargetDatabase,
    pub catalog: Catalog,
    pub models_dir: Option<PathBuf>,
    pub extract: ExtractParams,
    pub recognize: RecognizeParams,
    pub hysteresis: usize,
}

impl Engine {
    pub fn new(db: TargetDatabase, catalog: Catalog) -> Self {
        Engine {
            db,
            catalog,
            models_dir: None,
            extract: ExtractParams::default(),
            recognize: RecognizeParams::default(),
            hysteresis: DEFAULT_HYSTERESIS,
        }
    }

    pub fn load(config: &ServiceConfig) -> Result<Self, ServiceError> {
        let mut file = std::fs::File::open(&config.db).map_err(|source| ServiceError::Io {
            path: config.db.display().to_string(),
            source,
        })?;
        let db = load_db(&mut std::io::BufReader::new(&mut file)).map_err(|source| ServiceError::Database {
            path: config.db.display().to_string(),
            source,
        })?;
        let text = std::fs::read_to_string(&config.catalog).map_err(|source| ServiceError::Io {
            path: config.catalog.display().to_string(),
            source,
        })?;
        let catalog = load_catalog(&text).map_err(|source| ServiceError::Catalog {
            path: config.catalog.display().to_string(),
            source,
        })?;
        if let Some(dir) = &config.models {
            if !dir.is_dir() {
                return Err(ServiceError::MissingModels(dir.display().to_string()));
            }
        }
        let mut engine = Engine::new(db, catalog);
        engine.models_dir = config.models.clone();
        engine.recognize.ransac.seed = config.seed;
        engine.recognize.min_inliers = config.min_inliers;
        engine.hysteresis = config.hysteresis;
        Ok(engine)
    }

    pub fn new_session(&self) -> Session {
        Session::new(self.hysteresis)
    }

    /// The wireframe model for a target, read from
    /// `<models_dir>/<content_id>.json`.
    pub fn model_for(&self, target_id: u32) -> Option<Result<WireframeModel, PoseError>> {
        let target = self.db.get(target_id)?;
        let path = model_path(self.models_dir.as_deref()?, &target.content_id);
        path.is_file().then(|| WireframeModel::from_json_file(&path))
    }
}

pub fn model_path(dir: &Path, content_id: &str) -> PathBuf {
    dir.join(format!("{content_id}.json"))
}

/// Binds and serves until the process is stopped.
pub async fn serve(engine: Engine, host: &str, port: u16) -> Result<(), ServiceError> {
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .unwrap_or_else(|_| SocketAddr::from(([127, 0, 0, 1], port)));
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServiceError::Bind { addr, source })?;
    tracing::info!(%addr, targets = engine.db.len(), "serving");
    axum::serve(listener, router(Arc::new(engine)))
        .await
        .map_err(|source| ServiceError::Bind { addr, source })
}
