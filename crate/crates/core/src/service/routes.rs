use std::collections::HashMap;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::Serialize;
use tower_http::cors::{AllowOrigin, CorsLayer};

use super::AppState;
use crate::catalog::{CatalogError, CoverageRegion, FieldError, PlanRecord, Violation, MAX_TIER, MIN_TIER};
use crate::pipeline::{RecommendError, RecommendationRequest};

pub fn router(state: AppState, cors_allowed_origins: &[String]) -> Router {
    let api = Router::new()
        .route("/api/v1/recommend", post(recommend))
        .route("/api/v1/plans", get(plans))
        .route("/api/v1/health", get(health))
        .route("/api/v1/admin/reload", post(reload))
        .with_state(state);

    let origins: Vec<HeaderValue> = cors_allowed_origins.iter().filter_map(|o| o.parse().ok()).collect();
    if origins.is_empty() {
        return api;
    }
    api.layer(
        CorsLayer::new()
            .allow_origin(AllowOrigin::list(origins))
            .allow_methods([Method::GET, Method::POST])
            .allow_headers([header::CONTENT_TYPE, header::AUTHORIZATION]),
    )
}

/// Compact JSON with a trailing newline, the same bytes the CLI prints.
fn json_body(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn json<T: Serialize>(status: StatusCode, value: &T) -> Response {
    let mut body = serde_json::to_string(value).expect("response serializes");
    body.push('\n');
    json_body(status, body)
}

#[derive(Debug, Serialize)]
struct ApiError {
    code: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    errors: Vec<FieldError>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    violations: Vec<Violation>,
}

impl ApiError {
    fn new(code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            code,
            message: message.into(),
            errors: Vec::new(),
            violations: Vec::new(),
        }
    }

    fn respond(self, status: StatusCode) -> Response {
        json(status, &self)
    }
}

fn unavailable() -> Response {
    ApiError::new("unavailable", "catalog is not loaded").respond(StatusCode::SERVICE_UNAVAILABLE)
}

fn invalid(errors: Vec<FieldError>) -> Response {
    ApiError {
        errors,
        ..ApiError::new("invalid_request", "request failed validation")
    }
    .respond(StatusCode::BAD_REQUEST)
}

fn is_json(headers: &HeaderMap) -> bool {
    headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.split(';').next())
        .is_some_and(|mime| mime.trim().eq_ignore_ascii_case("application/json"))
}

async fn recommend(State(state): State<AppState>, headers: HeaderMap, body: Bytes) -> Response {
    if !is_json(&headers) {
        return ApiError::new("unsupported_media_type", "Content-Type must be application/json")
            .respond(StatusCode::UNSUPPORTED_MEDIA_TYPE);
    }
    let value: serde_json::Value = match serde_json::from_slice(&body) {
        Ok(v) => v,
        Err(e) => return invalid(vec![FieldError::new("body", e.to_string())]),
    };
    let request = match RecommendationRequest::from_json(&value, state.default_metric()) {
        Ok(r) => r,
        Err(errors) => return invalid(errors),
    };
    let Some(snapshot) = state.snapshot() else {
        return unavailable();
    };
    match snapshot.respond(&request) {
        Ok(resp) => json_body(StatusCode::OK, resp.to_json()),
        Err(e @ RecommendError::EmptyPreference) => {
            ApiError::new("empty_preference", e.to_string()).respond(StatusCode::UNPROCESSABLE_ENTITY)
        }
        Err(e) => ApiError::new("internal", e.to_string()).respond(StatusCode::INTERNAL_SERVER_ERROR),
    }
}

async fn plans(State(state): State<AppState>, Query(params): Query<HashMap<String, String>>) -> Response {
    let mut errors = Vec::new();
    let mut tier = None;
    let mut region = None;
    for (key, value) in &params {
        match key.as_str() {
            "tier" => match value.parse::<u8>() {
                Ok(t) if (MIN_TIER..=MAX_TIER).contains(&t) => tier = Some(t),
                _ => errors.push(FieldError::new(
                    "tier",
                    format!("must be an integer in [{MIN_TIER}, {MAX_TIER}], got {value:?}"),
                )),
            },
            "region" => match CoverageRegion::parse(value) {
                Some(r) => region = Some(r),
                None => errors.push(FieldError::new(
                    "region",
                    format!("must be lagos or nationwide, got {value:?}"),
                )),
            },
            _ => errors.push(FieldError::new(key.clone(), "unknown filter")),
        }
    }
    if !errors.is_empty() {
        errors.sort_by(|a, b| a.field.cmp(&b.field));
        return invalid(errors);
    }
    let Some(snapshot) = state.snapshot() else {
        return unavailable();
    };
    let mut listed: Vec<&PlanRecord> = snapshot
        .catalog()
        .plans()
        .iter()
        .filter(|p| tier.is_none_or(|t| p.premium_tier == t))
        .filter(|p| region.is_none_or(|r| p.coverage_region == r))
        .collect();
    listed.sort_by(|a, b| a.plan_id.cmp(&b.plan_id));
    json(StatusCode::OK, &listed)
}

#[derive(Debug, Serialize)]
struct Health<'a> {
    status: &'static str,
    catalog_size: usize,
    schema_id: Option<&'a str>,
}

async fn health(State(state): State<AppState>) -> Response {
    match state.snapshot() {
        Some(s) => json(
            StatusCode::OK,
            &Health {
                status: "ok",
                catalog_size: s.catalog().len(),
                schema_id: Some(s.schema_id()),
            },
        ),
        None => json(
            StatusCode::SERVICE_UNAVAILABLE,
            &Health {
                status: "unavailable",
                catalog_size: 0,
                schema_id: None,
            },
        ),
    }
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
        .map(str::trim)
}

async fn reload(State(state): State<AppState>, headers: HeaderMap) -> Response {
    if !bearer(&headers).is_some_and(|t| state.token_matches(t)) {
        return ApiError::new("unauthorized", "missing or invalid admin token").respond(StatusCode::UNAUTHORIZED);
    }
    let loader = state.clone();
    let result = match tokio::task::spawn_blocking(move || loader.reload()).await {
        Ok(r) => r,
        Err(e) => return ApiError::new("internal", e.to_string()).respond(StatusCode::INTERNAL_SERVER_ERROR),
    };
    match result {
        Ok(s) => {
            tracing::info!(plans = s.catalog().len(), schema_id = s.schema_id(), "catalog reloaded");
            json(
                StatusCode::OK,
                &Health {
                    status: "reloaded",
                    catalog_size: s.catalog().len(),
                    schema_id: Some(s.schema_id()),
                },
            )
        }
        Err(e) => {
            tracing::warn!(error = %e, "reload rejected; keeping current catalog");
            let violations = match &e {
                CatalogError::SchemaViolation { violations } => violations.clone(),
                _ => Vec::new(),
            };
            ApiError {
                violations,
                ..ApiError::new("invalid_catalog", e.to_string())
            }
            .respond(StatusCode::UNPROCESSABLE_ENTITY)
        }
    }
}
