//! Full stage chain on a 2,000-building synthetic city, checked against the
//! generator's ground truth, then fed to the audit API.

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use geoattrib::ensemble::reg_metrics;
use geoattrib::geom::SpatialIndex;
use geoattrib::pipeline::{
    agreement_stats, audit_router, load_vector, match_svi_to_buildings, run_all, synth_city, write_city, Annotation,
    AgreementStats, AuditState, BuildingRecord, CityParams, PipelineConfig,
};
use tower::ServiceExt;

#[tokio::test(flavor = "multi_thread")]
async fn two_thousand_buildings_against_truth() {
    let dir = tempfile::tempdir().unwrap();
    let city = synth_city(21, &CityParams { n_buildings: 2000, ..CityParams::default() }).unwrap();
    let overrides = [("n_members", "10"), ("grid_depths", "4"), ("grid_rounds", "150")];
    let cfg = PipelineConfig::load(&write_city(dir.path(), &city, &overrides).unwrap()).unwrap();
    let reports = tokio::task::spawn_blocking({
        let cfg = cfg.clone();
        move || run_all(&cfg).unwrap()
    })
    .await
    .unwrap();
    assert!(reports.iter().all(|r| r.seed == 21 && !r.config_hash.is_empty()));

    let proj = cfg.projection().unwrap();
    let records: Vec<BuildingRecord> = load_vector(&cfg.work_dir().join("buildings.geojson"), &proj)
        .unwrap()
        .iter()
        .enumerate()
        .map(|(i, f)| BuildingRecord::from_feature(f, i).unwrap())
        .collect();
    assert!(records.len() as f64 >= 0.98 * city.buildings.len() as f64, "{} rooftops", records.len());

    let index = SpatialIndex::build(city.buildings.iter().enumerate().map(|(i, b)| (i, b.polygon.bbox())));
    let (mut h_true, mut h_pred) = (vec![], vec![]);
    let (mut func_hits, mut age_hits, mut matched) = (0, 0, 0);
    for r in &records {
        assert!(r.height.is_some() && r.func.is_some() && r.age.is_some() && r.quality.is_some() && r.tier.is_some(), "{}", r.id);
        let c = r.polygon.centroid();
        let Some(t) = index.query_point(&c).into_iter().find(|&i| city.buildings[i].polygon.contains(&c)) else { continue };
        let t = &city.buildings[t];
        matched += 1;
        h_true.push(t.height);
        h_pred.push(r.height.unwrap());
        func_hits += (r.func == Some(t.function)) as usize;
        age_hits += (r.age == Some(t.age)) as usize;
        assert_eq!(r.tier, Some(t.tier));
    }
    let n = matched as f64;
    assert!(n >= 0.98 * records.len() as f64);
    let h = reg_metrics(&h_true, &h_pred).unwrap();
    assert!(h.r2.unwrap() >= 0.8, "height {h:?}");
    assert!(func_hits as f64 / n >= 0.85, "function accuracy {}", func_hits as f64 / n);
    assert!(age_hits as f64 / n >= 0.99, "age accuracy {}", age_hits as f64 / n);

    let seg = std::fs::read_to_string(cfg.work_dir().join("metrics_seg.csv")).unwrap();
    let f1: f64 = seg.lines().nth(1).unwrap().split(',').nth(6).unwrap().parse().unwrap();
    assert!(f1 >= 0.9, "{seg}");

    // audit: annotate with the predictions themselves
    let svi = geoattrib::pipeline::load_svi(&cfg.path("svi").unwrap(), &proj).unwrap();
    let images = cfg.path("images_dir").unwrap();
    let tasks = match_svi_to_buildings(&records, &svi, cfg.svi_match_radius(), Some(&images));
    assert!(!tasks.is_empty() && tasks.len() <= records.len());
    assert!(tasks.iter().all(|t| t.has_image));
    let before = std::fs::read(cfg.work_dir().join("buildings.geojson")).unwrap();
    let log = dir.path().join("annotations.jsonl");
    let state = Arc::new(AuditState::open(tasks.clone(), Some(log.clone()), cfg.floor_height()).unwrap());
    let app = audit_router(state.clone());
    for t in tasks.iter().take(40) {
        let p = &t.predicted;
        let a = Annotation {
            building_id: t.building_id.clone(),
            auditor_id: "auditor-1".into(),
            floors: (p.height.unwrap() / cfg.floor_height()).round().max(1.0) as u32,
            function: p.function.unwrap(),
            age_bin: p.age_bin.unwrap(),
            severity: p.q_total.map_or(0, |q| q.round() as u8),
            timestamp: 0,
        };
        let req = Request::post("/annotations")
            .header("content-type", "application/json")
            .body(Body::from(serde_json::to_vec(&a).unwrap()))
            .unwrap();
        assert_eq!(app.clone().oneshot(req).await.unwrap().status(), StatusCode::CREATED);
    }
    let resp = app.clone().oneshot(Request::get("/stats").body(Body::empty()).unwrap()).await.unwrap();
    let body = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let stats: AgreementStats = serde_json::from_slice(&body).unwrap();
    assert_eq!((stats.n, stats.low_n), (40, false));
    assert_eq!(stats.function_accuracy, Some(1.0));
    assert_eq!(stats.age_bin_agreement, Some(1.0));
    assert!(stats.height_r2.unwrap() > 0.95);

    // offline recomputation from the log
    let logged: Vec<Annotation> =
        std::fs::read_to_string(&log).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(agreement_stats(&tasks, &logged, cfg.floor_height()), stats);
    assert_eq!(std::fs::read(cfg.work_dir().join("buildings.geojson")).unwrap(), before);

    let img = app.oneshot(Request::get(format!("/tasks/{}/image", tasks[0].id)).body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(img.status(), StatusCode::OK);
}
