//! Street-view audit API: tasks pair a building with its best street-view
//! point; auditors post annotations which are appended to a JSONL log and
//! compared with the predictions.
//!
//! | route | |
//! |---|---|
//! | `GET /tasks` | task summaries with a `completed` flag |
//! | `GET /tasks/{id}` | full task |
//! | `GET /tasks/{id}/image` | street-view image bytes |
//! | `POST /annotations` | store an annotation (`404` unknown building, `422` invalid) |
//! | `GET /stats` | agreement between annotations and predictions |

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::stages::pearson_r2;
use super::{BuildingRecord, PipelineError};
use crate::ensemble::reg_metrics;
use crate::geom::{select_view_side, Point, SpatialIndex, ViewSide};
use crate::indicative::{age_bin, AgeBin, FunctionLabel, SviObservation};

/// Below this many annotations the statistics are flagged as low-n.
pub const LOW_N: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedAttrs {
    pub height: Option<f64>,
    pub function: Option<FunctionLabel>,
    pub age_bin: Option<AgeBin>,
    pub q_total: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditTask {
    pub id: String,
    pub building_id: String,
    pub svi_point_id: String,
    pub heading: f64,
    pub side: ViewSide,
    pub svi_point: Point,
    pub observation_point: Point,
    /// Exterior ring in projected metres.
    pub outline: Vec<[f64; 2]>,
    #[serde(skip)]
    pub image_path: Option<PathBuf>,
    pub has_image: bool,
    pub predicted: PredictedAttrs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub building_id: String,
    pub auditor_id: String,
    pub floors: u32,
    pub function: FunctionLabel,
    pub age_bin: AgeBin,
    /// Count of disorder types seen, 0..=6.
    pub severity: u8,
    /// Seconds since the epoch; filled by the server when 0.
    #[serde(default)]
    pub timestamp: u64,
}

const IMAGE_EXTENSIONS: [(&str, &str); 4] =
    [("jpg", "image/jpeg"), ("jpeg", "image/jpeg"), ("png", "image/png"), ("ppm", "image/x-portable-pixmap")];

/// For each building, the nearest street-view point within `radius` whose
/// view of the building falls on a side; buildings without one get no task.
pub fn match_svi_to_buildings(
    records: &[BuildingRecord],
    observations: &[SviObservation],
    radius: f64,
    images_dir: Option<&Path>,
) -> Vec<AuditTask> {
    let points: Vec<Point> = observations.iter().map(|o| o.point).collect();
    let index = SpatialIndex::from_points(&points);
    records
        .iter()
        .filter_map(|r| {
            let bbox = r.polygon.bbox().inflate(radius);
            let mut cands: Vec<(f64, usize, Point)> = index
                .query(&bbox)
                .into_iter()
                .map(|i| {
                    let q = r.polygon.nearest_point_on_ring(&points[i]);
                    (q.distance(&points[i]), i, q)
                })
                .filter(|(d, i, _)| *d <= radius && !r.polygon.contains(&points[*i]))
                .collect();
            cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let (side, i, q) = cands
                .into_iter()
                .find_map(|(_, i, q)| select_view_side(observations[i].heading, &points[i], &q).map(|s| (s, i, q)))?;
            let o = &observations[i];
            let image_path = images_dir.and_then(|d| {
                IMAGE_EXTENSIONS.iter().map(|(e, _)| d.join(format!("{}.{e}", o.point_id))).find(|p| p.is_file())
            });
            Some(AuditTask {
                id: r.id.clone(),
                building_id: r.id.clone(),
                svi_point_id: o.point_id.clone(),
                heading: o.heading,
                side,
                svi_point: o.point,
                observation_point: q,
                outline: r.polygon.exterior().iter().map(|p| [p.x, p.y]).collect(),
                has_image: image_path.is_some(),
                image_path,
                predicted: PredictedAttrs {
                    height: r.height,
                    function: r.func,
                    age_bin: r.age.map(age_bin),
                    q_total: r.quality.and_then(|q| q.total),
                },
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementStats {
    /// Annotations used: the latest per (building, auditor).
    pub n: usize,
    pub low_n: bool,
    /// R² of predicted height against annotated floors × floor height.
    pub height_r2: Option<f64>,
    pub function_accuracy: Option<f64>,
    pub age_bin_agreement: Option<f64>,
    /// Squared Pearson correlation of predicted `q_total` and severity.
    pub quality_r2: Option<f64>,
}

fn share(hits: impl Iterator<Item = bool>) -> Option<f64> {
    let (mut n, mut k) = (0usize, 0usize);
    for h in hits {
        n += 1;
        k += h as usize;
    }
    (n > 0).then(|| k as f64 / n as f64)
}

pub fn agreement_stats(tasks: &[AuditTask], annotations: &[Annotation], floor_height: f64) -> AgreementStats {
    let by_id: BTreeMap<&str, &AuditTask> = tasks.iter().map(|t| (t.building_id.as_str(), t)).collect();
    // later entries win
    let mut latest: BTreeMap<(&str, &str), &Annotation> = BTreeMap::new();
    for a in annotations {
        if by_id.contains_key(a.building_id.as_str()) {
            latest.insert((&a.building_id, &a.auditor_id), a);
        }
    }
    let pairs: Vec<(&Annotation, &PredictedAttrs)> =
        latest.values().map(|a| (*a, &by_id[a.building_id.as_str()].predicted)).collect();
    let (hy, hp): (Vec<f64>, Vec<f64>) =
        pairs.iter().filter_map(|(a, p)| Some((a.floors as f64 * floor_height, p.height?))).unzip();
    let (qa, qp): (Vec<f64>, Vec<f64>) = pairs.iter().filter_map(|(a, p)| Some((a.severity as f64, p.q_total?))).unzip();
    AgreementStats {
        n: pairs.len(),
        low_n: pairs.len() < LOW_N,
        height_r2: reg_metrics(&hy, &hp).ok().and_then(|m| m.r2),
        function_accuracy: share(pairs.iter().filter_map(|(a, p)| Some(p.function? == a.function))),
        age_bin_agreement: share(pairs.iter().filter_map(|(a, p)| Some(p.age_bin? == a.age_bin))),
        quality_r2: pearson_r2(&qa, &qp),
    }
}

pub struct AuditState {
    tasks: Vec<AuditTask>,
    index: BTreeMap<String, usize>,
    annotations: Mutex<Vec<Annotation>>,
    log: Option<PathBuf>,
    floor_height: f64,
}

impl AuditState {
    /// Replays an existing annotation log, if any.
    pub fn open(tasks: Vec<AuditTask>, log: Option<PathBuf>, floor_height: f64) -> Result<Self, PipelineError> {
        let mut annotations = Vec::new();
        if let Some(p) = log.as_ref().filter(|p| p.exists()) {
            let text = std::fs::read_to_string(p).map_err(|e| PipelineError::io(p, e))?;
            for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let a: Annotation = serde_json::from_str(line).map_err(|e| {
                    PipelineError::Table {
                        line: i + 1,
                        message: e.to_string(),
                    }
                    .within(p)
                })?;
                annotations.push(a);
            }
        }
        let index = tasks.iter().enumerate().map(|(i, t)| (t.id.clone(), i)).collect();
        Ok(Self {
            tasks,
            index,
            annotations: Mutex::new(annotations),
            log,
            floor_height,
        })
    }

    pub fn tasks(&self) -> &[AuditTask] {
        &self.tasks
    }

    pub fn annotations(&self) -> Vec<Annotation> {
        self.annotations.lock().unwrap().clone()
    }

    pub fn stats(&self) -> AgreementStats {
        agreement_stats(&self.tasks, &self.annotations.lock().unwrap(), self.floor_height)
    }

    fn task(&self, id: &str) -> Option<&AuditTask> {
        self.index.get(id).map(|&i| &self.tasks[i])
    }

    fn record(&self, mut a: Annotation) -> Result<Annotation, ApiError> {
        if self.task(&a.building_id).is_none() {
            return Err(ApiError::new(StatusCode::NOT_FOUND, "unknown_building", format!("no task for `{}`", a.building_id)));
        }
        let invalid = |m: &str| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_annotation", m.into());
        if a.auditor_id.trim().is_empty() {
            return Err(invalid("auditor_id must be non-empty"));
        }
        if a.floors < 1 {
            return Err(invalid("floors must be at least 1"));
        }
        if a.severity > 6 {
            return Err(invalid("severity must be in 0..=6"));
        }
        if a.timestamp == 0 {
            a.timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        }
        let mut all = self.annotations.lock().unwrap();
        if let Some(p) = &self.log {
            let line = serde_json::to_string(&a).expect("annotation serializes");
            let append = || -> std::io::Result<()> {
                let mut f = std::fs::OpenOptions::new().create(true).append(true).open(p)?;
                writeln!(f, "{line}")?;
                f.sync_data()
            };
            append().map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "log_write", e.to_string()))?;
        }
        all.push(a.clone());
        Ok(a)
    }
}

struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: String) -> Self {
        Self { status, code, message }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"code": self.code, "message": self.message}))).into_response()
    }
}

type Shared = Arc<AuditState>;

pub fn audit_router(state: Arc<AuditState>) -> Router {
    Router::new()
        .route("/tasks", get(list_tasks))
        .route("/tasks/{id}", get(get_task))
        .route("/tasks/{id}/image", get(get_image))
        .route("/annotations", post(post_annotation))
        .route("/stats", get(get_stats))
        .with_state(state)
}

fn not_found(id: &str) -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "unknown_task", format!("no task `{id}`"))
}

async fn list_tasks(State(s): State<Shared>) -> Json<serde_json::Value> {
    let done: std::collections::BTreeSet<String> =
        s.annotations.lock().unwrap().iter().map(|a| a.building_id.clone()).collect();
    let list: Vec<_> = s
        .tasks
        .iter()
        .map(|t| {
            json!({
                "id": t.id,
                "building_id": t.building_id,
                "svi_point_id": t.svi_point_id,
                "side": t.side,
                "has_image": t.has_image,
                "completed": done.contains(&t.building_id),
            })
        })
        .collect();
    Json(json!(list))
}

async fn get_task(State(s): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Json<AuditTask>, ApiError> {
    s.task(&id).cloned().map(Json).ok_or_else(|| not_found(&id))
}

async fn get_image(State(s): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let t = s.task(&id).ok_or_else(|| not_found(&id))?;
    let p = t
        .image_path
        .as_ref()
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "no_image", format!("task `{id}` has no image")))?;
    let bytes = tokio::fs::read(p)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "image_read", e.to_string()))?;
    let ext = p.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let mime = IMAGE_EXTENSIONS.iter().find(|(e, _)| *e == ext).map_or("application/octet-stream", |(_, m)| *m);
    Ok(([(header::CONTENT_TYPE, mime)], bytes).into_response())
}

async fn post_annotation(State(s): State<Shared>, body: Bytes) -> Result<(StatusCode, Json<Annotation>), ApiError> {
    let a: Annotation = serde_json::from_slice(&body).map_err(|e| {
        let status = if e.is_data() { StatusCode::UNPROCESSABLE_ENTITY } else { StatusCode::BAD_REQUEST };
        ApiError::new(status, "invalid_annotation", e.to_string())
    })?;
    s.record(a).map(|a| (StatusCode::CREATED, Json(a)))
}

async fn get_stats(State(s): State<Shared>) -> Json<AgreementStats> {
    Json(s.stats())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Polygon;
    use crate::indicative::AgeClass;
    use axum::body::Body;
    use axum::http::Request;
    use tower::ServiceExt;

    fn records() -> Vec<BuildingRecord> {
        (0..3)
            .map(|i| {
                let x = 40.0 * i as f64;
                let mut r = BuildingRecord::new(&format!("b{i}"), Polygon::rect(x, 10.0, x + 20.0, 30.0).unwrap());
                r.height = Some(9.0 + 3.0 * i as f64);
                r.func = Some(FunctionLabel::Residential);
                r.age = Some(AgeClass::Year(1995));
                r
            })
            .collect()
    }

    fn state(dir: &Path) -> Arc<AuditState> {
        // road along y = 0, heading east: buildings lie on the left
        let obs: Vec<SviObservation> =
            (0..3).map(|i| SviObservation::new(&format!("p{i}"), Point::new(40.0 * i as f64 + 10.0, 0.0), 90.0)).collect();
        std::fs::write(dir.join("p0.jpg"), b"jpegbytes").unwrap();
        let tasks = match_svi_to_buildings(&records(), &obs, 50.0, Some(dir));
        Arc::new(AuditState::open(tasks, Some(dir.join("log.jsonl")), 3.0).unwrap())
    }

    async fn call(s: &Arc<AuditState>, req: Request<Body>) -> (StatusCode, Vec<u8>) {
        let resp = audit_router(s.clone()).oneshot(req).await.unwrap();
        let status = resp.status();
        (status, axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec())
    }

    fn post(body: &str) -> Request<Body> {
        Request::post("/annotations").header("content-type", "application/json").body(Body::from(body.to_string())).unwrap()
    }

    #[test]
    fn matching_picks_nearest_visible_point() {
        let obs = vec![
            SviObservation::new("far", Point::new(10.0, -30.0), 90.0),
            // facing the building head-on: no side
            SviObservation::new("ahead", Point::new(10.0, 0.0), 0.0),
        ];
        let tasks = match_svi_to_buildings(&records()[..1], &obs, 100.0, None);
        assert_eq!(tasks.len(), 1);
        assert_eq!(tasks[0].svi_point_id, "far");
        assert_eq!(tasks[0].side, ViewSide::Left);
        assert!(tasks[0].observation_point.distance(&Point::new(10.0, 10.0)) < 1e-9);
        assert!(match_svi_to_buildings(&records()[..1], &obs, 5.0, None).is_empty());
    }

    #[tokio::test]
    async fn api_round_trip_and_persistence() {
        let dir = tempfile::tempdir().unwrap();
        let s = state(dir.path());
        assert_eq!(s.tasks().len(), 3);

        let (st, body) = call(&s, Request::get("/tasks").body(Body::empty()).unwrap()).await;
        assert_eq!(st, StatusCode::OK);
        let list: serde_json::Value = serde_json::from_slice(&body).unwrap();
        assert_eq!(list.as_array().unwrap().len(), 3);
        assert_eq!(list[0]["completed"], false);

        let (st, body) = call(&s, Request::get("/tasks/b1").body(Body::empty()).unwrap()).await;
        assert_eq!(st, StatusCode::OK);
        let t: AuditTask = serde_json::from_slice(&body).unwrap();
        assert_eq!(t.svi_point_id, "p1");

        let (st, body) = call(&s, Request::get("/tasks/b0/image").body(Body::empty()).unwrap()).await;
        assert_eq!((st, body.as_slice()), (StatusCode::OK, &b"jpegbytes"[..]));
        let (st, _) = call(&s, Request::get("/tasks/b1/image").body(Body::empty()).unwrap()).await;
        assert_eq!(st, StatusCode::NOT_FOUND);
        let (st, _) = call(&s, Request::get("/tasks/zzz").body(Body::empty()).unwrap()).await;
        assert_eq!(st, StatusCode::NOT_FOUND);

        let ok = r#"{"building_id":"b0","auditor_id":"a","floors":3,"function":"residential","age_bin":"1991-2000","severity":2}"#;
        let (st, body) = call(&s, post(ok)).await;
        assert_eq!(st, StatusCode::CREATED);
        let a: Annotation = serde_json::from_slice(&body).unwrap();
        assert!(a.timestamp > 0);

        for (bad, want) in [
            (ok.replace("b0", "nope"), StatusCode::NOT_FOUND),
            (ok.replace("\"floors\":3", "\"floors\":0"), StatusCode::UNPROCESSABLE_ENTITY),
            (ok.replace("\"severity\":2", "\"severity\":9"), StatusCode::UNPROCESSABLE_ENTITY),
            (ok.replace("residential", "shop"), StatusCode::UNPROCESSABLE_ENTITY),
            ("{not json".to_string(), StatusCode::BAD_REQUEST),
        ] {
            let (st, body) = call(&s, post(&bad)).await;
            assert_eq!(st, want, "{bad}");
            let e: serde_json::Value = serde_json::from_slice(&body).unwrap();
            assert!(e["code"].is_string() && e["message"].is_string());
        }

        let (_, body) = call(&s, Request::get("/stats").body(Body::empty()).unwrap()).await;
        let stats: AgreementStats = serde_json::from_slice(&body).unwrap();
        assert_eq!((stats.n, stats.low_n), (1, true));
        assert_eq!(stats.function_accuracy, Some(1.0));
        assert_eq!(stats.age_bin_agreement, Some(1.0));

        // restart: the log is replayed
        let again = AuditState::open(s.tasks().to_vec(), Some(dir.path().join("log.jsonl")), 3.0).unwrap();
        assert_eq!(again.annotations(), s.annotations());
    }

    #[test]
    fn stats_use_latest_annotation_per_auditor() {
        let tasks = match_svi_to_buildings(
            &records(),
            &(0..3).map(|i| SviObservation::new(&format!("p{i}"), Point::new(40.0 * i as f64 + 10.0, 0.0), 90.0)).collect::<Vec<_>>(),
            50.0,
            None,
        );
        let ann = |b: &str, who: &str, floors: u32| Annotation {
            building_id: b.into(),
            auditor_id: who.into(),
            floors,
            function: FunctionLabel::Office,
            age_bin: AgeBin::To2000,
            severity: 0,
            timestamp: 1,
        };
        // predicted heights 9, 12, 15 m = 3, 4, 5 floors
        let a = vec![ann("b0", "x", 1), ann("b0", "x", 3), ann("b1", "x", 4), ann("b2", "x", 5), ann("b2", "y", 5)];
        let s = agreement_stats(&tasks, &a, 3.0);
        assert_eq!(s.n, 4);
        assert!((s.height_r2.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(s.function_accuracy, Some(0.0));
        assert_eq!(s.quality_r2, None);
    }
}
