//! JSON-over-HTTP facade for the recommendation pipeline.
//!
//! Requests read the current [`Snapshot`] through an atomic pointer; a reload
//! builds a complete new snapshot off to the side and publishes it with a
//! single swap, so no request ever observes a half-loaded catalog.

mod routes;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use arc_swap::ArcSwapOption;
use serde::Deserialize;
use thiserror::Error;

use crate::catalog::CatalogError;
use crate::pipeline::Snapshot;
use crate::simeng::Metric;

pub use routes::router;

pub const CONFIG_ENV: &str = "PLANSAGE_CONFIG";
pub const ADMIN_TOKEN_ENV: &str = "PLANSAGE_ADMIN_TOKEN";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("listen_address must be host:port with port in 1-65535, got {0:?}")]
    ListenAddress(String),
    #[error("{field} does not exist: {}", .path.display())]
    MissingPath { field: &'static str, path: PathBuf },
    #[error("invalid CORS origin {0:?}")]
    CorsOrigin(String),
    #[error("no config given: pass --config or set {CONFIG_ENV}")]
    NoConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen_address: String,
    pub catalog_path: PathBuf,
    pub ratings_path: PathBuf,
    #[serde(default)]
    pub default_metric: Metric,
    #[serde(default)]
    pub cors_allowed_origins: Vec<String>,
}

impl ServiceConfig {
    /// Reads a TOML config; relative data paths resolve against the config's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: ServiceConfig = toml::from_str(&text)?;
        if let Some(dir) = path.parent() {
            for p in [&mut config.catalog_path, &mut config.ratings_path] {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let port = self
            .listen_address
            .rsplit_once(':')
            .filter(|(host, _)| !host.is_empty())
            .and_then(|(_, port)| port.parse::<u16>().ok());
        if !matches!(port, Some(p) if p >= 1) {
            return Err(ConfigError::ListenAddress(self.listen_address.clone()));
        }
        for (field, path) in [
            ("catalog_path", &self.catalog_path),
            ("ratings_path", &self.ratings_path),
        ] {
            if !path.exists() {
                return Err(ConfigError::MissingPath {
                    field,
                    path: path.clone(),
                });
            }
        }
        for origin in &self.cors_allowed_origins {
            if origin.parse::<axum::http::HeaderValue>().is_err() {
                return Err(ConfigError::CorsOrigin(origin.clone()));
            }
        }
        Ok(())
    }
}

/// Shared service state. Cloning is cheap.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    snapshot: ArcSwapOption<Snapshot>,
    catalog_path: PathBuf,
    ratings_path: PathBuf,
    default_metric: Metric,
    admin_token: Option<String>,
}

impl AppState {
    /// State with no catalog loaded yet; data endpoints answer 503 until
    /// [`AppState::reload`] or [`AppState::publish`] succeeds.
    pub fn new(config: &ServiceConfig, admin_token: Option<String>) -> Self {
        AppState {
            inner: Arc::new(Inner {
                snapshot: ArcSwapOption::empty(),
                catalog_path: config.catalog_path.clone(),
                ratings_path: config.ratings_path.clone(),
                default_metric: config.default_metric,
                admin_token: admin_token.filter(|t| !t.is_empty()),
            }),
        }
    }

    pub fn snapshot(&self) -> Option<Arc<Snapshot>> {
        self.inner.snapshot.load_full()
    }

    pub fn publish(&self, snapshot: Snapshot) {
        self.inner.snapshot.store(Some(Arc::new(snapshot)));
    }

    /// Loads both files and publishes them; on failure the live snapshot is untouched.
    pub fn reload(&self) -> Result<Arc<Snapshot>, CatalogError> {
        let snapshot = Arc::new(Snapshot::load(&self.inner.catalog_path, &self.inner.ratings_path)?);
        self.inner.snapshot.store(Some(snapshot.clone()));
        Ok(snapshot)
    }

    pub fn default_metric(&self) -> Metric {
        self.inner.default_metric
    }

    fn token_matches(&self, presented: &str) -> bool {
        match &self.inner.admin_token {
            Some(expected) => {
                expected.len() == presented.len()
                    && expected
                        .bytes()
                        .zip(presented.bytes())
                        .fold(0u8, |acc, (a, b)| acc | (a ^ b))
                        == 0
            }
            None => false,
        }
    }
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("catalog load failed: {0}")]
    Catalog(#[from] CatalogError),
    #[error("cannot listen on {address}: {source}")]
    Bind {
        address: String,
        #[source]
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

/// Loads the catalog, binds, and serves until Ctrl-C.
pub async fn serve(config: ServiceConfig, admin_token: Option<String>) -> Result<(), ServeError> {
    config.validate()?;
    let state = AppState::new(&config, admin_token);
    let loader = state.clone();
    let snapshot = tokio::task::spawn_blocking(move || loader.reload())
        .await
        .expect("loader task panicked")?;
    tracing::info!(
        plans = snapshot.catalog().len(),
        schema_id = snapshot.schema_id(),
        "catalog loaded"
    );

    let app = router(state, &config.cors_allowed_origins);
    let listener = tokio::net::TcpListener::bind(&config.listen_address)
        .await
        .map_err(|source| ServeError::Bind {
            address: config.listen_address.clone(),
            source,
        })?;
    tracing::info!(address = %listener.local_addr()?, "listening");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
