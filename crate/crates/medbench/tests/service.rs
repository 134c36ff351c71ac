use std::collections::BTreeMap;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use medbench::service::{router, AppState, RecordStore, ANNOTATIONS_FILE, RANKINGS_FILE};
use medbench_core::humeval::{blind_order, Arm, EvalCase, IndependentRecord, RankingRecord};
use serde_json::{json, Value};
use tower::ServiceExt;

const SEED: u64 = 11;

fn cases() -> Vec<EvalCase> {
    (0..6)
        .map(|i| EvalCase {
            case_id: format!("case-{i}"),
            image_ref: format!("img/{i}.png"),
            indication: "Shortness of breath.".into(),
            arms: Arm::ALL
                .iter()
                .map(|a| (*a, format!("Findings text {i} variant {}.", a.as_str().len())))
                .collect::<BTreeMap<_, _>>(),
        })
        .collect()
}

fn app(dir: &std::path::Path) -> Router {
    let state = AppState::new(
        cases(),
        vec!["r1".into(), "r2".into()],
        SEED,
        RecordStore::open(dir).unwrap(),
    )
    .unwrap();
    router(state)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, String) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

fn assert_no_arm_names(payload: &str) {
    for arm in Arm::ALL {
        assert!(
            !payload.contains(arm.as_str()),
            "payload leaks `{}`: {payload}",
            arm.as_str()
        );
    }
}

fn slot_of(case_id: &str, arm: Arm) -> usize {
    blind_order(case_id, SEED).iter().position(|a| *a == arm).unwrap() + 1
}

#[tokio::test]
async fn blinded_case_payloads_hide_arms() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    for c in cases() {
        let (status, body) = call(&app, "GET", &format!("/cases/{}", c.case_id), None).await;
        assert_eq!(status, StatusCode::OK);
        assert_no_arm_names(&body);
        let v: Value = serde_json::from_str(&body).unwrap();
        assert_eq!(v["options"].as_array().unwrap().len(), 4);

        let (status, body) = call(&app, "GET", &format!("/cases/{}/independent", c.case_id), None).await;
        assert_eq!(status, StatusCode::OK);
        assert_no_arm_names(&body);
        let v: Value = serde_json::from_str(&body).unwrap();
        let slots: Vec<u64> = v["candidates"]
            .as_array()
            .unwrap()
            .iter()
            .map(|o| o["slot"].as_u64().unwrap())
            .collect();
        assert_eq!(slots.len(), 3);
        assert!(!slots.contains(&(slot_of(&c.case_id, Arm::Reference) as u64)));
        assert_eq!(v["ground_truth_findings"], c.findings(Arm::Reference));
    }
    let (status, _) = call(&app, "GET", "/cases/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn ranking_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let case_id = "case-0";
    // Rater puts the 562b output first, then reference, 84b, 12b.
    let wanted = [Arm::M562b, Arm::Reference, Arm::M84b, Arm::M12b];
    let slots: Vec<usize> = wanted.iter().map(|a| slot_of(case_id, *a)).collect();
    let (status, body) = call(
        &app,
        "POST",
        "/rankings",
        Some(json!({"case_id": case_id, "rater_id": "r1", "ranking": slots})),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    assert_eq!(serde_json::from_str::<Value>(&body).unwrap()["record_id"], 1);

    let stored: Vec<RankingRecord> = medbench::fsio::read_jsonl(&dir.path().join(RANKINGS_FILE)).unwrap();
    assert_eq!(stored.len(), 1);
    assert_eq!(stored[0].ranking, wanted.to_vec());
    assert_eq!(stored[0].presentation_order, blind_order(case_id, SEED).to_vec());
    stored[0].validate().unwrap();

    let (status, body) = call(&app, "GET", "/analytics/ranking", None).await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["n_records"], 1);

    for bad in [
        json!([1, 2, 3]),
        json!([1, 1, 2, 3]),
        json!([0, 1, 2, 3]),
        json!([1, 2, 3, 5]),
    ] {
        let (status, _) = call(
            &app,
            "POST",
            "/rankings",
            Some(json!({"case_id": case_id, "rater_id": "r1", "ranking": bad})),
        )
        .await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    }
    let (status, _) = call(
        &app,
        "POST",
        "/rankings",
        Some(json!({"case_id": "nope", "rater_id": "r1", "ranking": [1, 2, 3, 4]})),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn resubmission_supersedes() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    for ranking in [[1, 2, 3, 4], [4, 3, 2, 1]] {
        let (status, _) = call(
            &app,
            "POST",
            "/rankings",
            Some(json!({"case_id": "case-1", "rater_id": "r2", "ranking": ranking})),
        )
        .await;
        assert_eq!(status, StatusCode::CREATED);
    }
    let store = RecordStore::open(dir.path()).unwrap();
    let latest = store.rankings().unwrap();
    assert_eq!(latest.len(), 1);
    let order = blind_order("case-1", SEED);
    assert_eq!(latest[0].ranking, vec![order[3], order[2], order[1], order[0]]);
}

#[tokio::test]
async fn annotations_are_model_only_and_span_checked() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let case_id = "case-2";
    let reference_slot = slot_of(case_id, Arm::Reference);
    let (status, body) = call(
        &app,
        "POST",
        "/annotations",
        Some(json!({"case_id": case_id, "rater_id": "r1", "slot": reference_slot, "image_quality_sufficient": true})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_no_arm_names(&body);

    let model_slot = slot_of(case_id, Arm::M84b);
    let error = json!({"start": 0, "end": 8, "error_type": "incorrect_location", "clinically_significant": true});
    let (status, body) = call(
        &app,
        "POST",
        "/annotations",
        Some(json!({
            "case_id": case_id, "rater_id": "r1", "slot": model_slot, "image_quality_sufficient": true,
            "errors": [error],
            "omissions": [{"missing_passage": "No effusion.", "clinically_significant": false}]
        })),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    let stored: Vec<IndependentRecord> = medbench::fsio::read_jsonl(&dir.path().join(ANNOTATIONS_FILE)).unwrap();
    assert_eq!(stored[0].arm, Arm::M84b);
    assert!(stored[0].timestamp > 0);

    let (status, _) = call(
        &app,
        "POST",
        "/annotations",
        Some(json!({
            "case_id": case_id, "rater_id": "r1", "slot": model_slot, "image_quality_sufficient": true,
            "errors": [{"start": 0, "end": 999, "error_type": "no_finding", "clinically_significant": false}]
        })),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let (status, body) = call(
        &app,
        "GET",
        "/analytics/rates?filter=significant-errors&resamples=200",
        None,
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["m84b"]["mean"], 1.0);
    let (status, _) = call(&app, "GET", "/analytics/rates?filter=bogus", None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn next_case_follows_assignment() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let raters = vec!["r1".to_string(), "r2".to_string()];
    let mine: Vec<String> = cases()
        .into_iter()
        .map(|c| c.case_id)
        .filter(|id| medbench_core::humeval::assign_rater(id, &raters, SEED) == Some("r1"))
        .collect();
    for id in &mine {
        let (status, body) = call(&app, "GET", "/raters/r1/next", None).await;
        assert_eq!(status, StatusCode::OK);
        let v: Value = serde_json::from_str(&body).unwrap();
        assert_eq!(v["case_id"], id.as_str());
        let (status, _) = call(
            &app,
            "POST",
            "/rankings",
            Some(json!({"case_id": id, "rater_id": "r1", "ranking": [1, 2, 3, 4]})),
        )
        .await;
        assert_eq!(status, StatusCode::CREATED);
    }
    let (status, _) = call(&app, "GET", "/raters/r1/next", None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    let (status, _) = call(&app, "GET", "/raters/ghost/next", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}
