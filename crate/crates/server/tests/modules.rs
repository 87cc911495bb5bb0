mod common;

use std::collections::BTreeMap;

use common::{start, TestServer};
use coos_core::behavior::{SimulationReport, SuggestionReport};
use coos_core::fixtures::unused_stock_project;
use coos_core::graph::ValidationReport;
use coos_core::impact::{rank_inputs, InputSensitivity, LogicModel, PolicyChoiceRef};
use coos_core::mediator::{MotionRow, SessionMotions};
use coos_core::policy::{compare_policies, ComparisonTable, ScaleMode, SensitivityBlock, TernaryPoint, Triple};
use coos_core::project::{from_template, load_project, save_project, Project};
use coos_core::svo::{score, Instrument, Questionnaire, QuestionnaireStage, SliderItem, SliderResponse, SvoRecord};
use coos_server::{AuthMode, Role};
use reqwest::{Method, StatusCode};
use serde::Deserialize;
use serde_json::{json, Value};

const P: &str = "/projects/unused-stock";

async fn open_with_project() -> (tempfile::TempDir, TestServer) {
    let dir = tempfile::tempdir().unwrap();
    let srv = start(dir.path(), AuthMode::Open).await;
    let body = json!({ "id": "unused-stock", "name": "Unused stock", "template": "unused-stock" });
    let (status, created) = srv.post::<Project>("/projects", None, body).await;
    assert_eq!(status, StatusCode::CREATED, "{created:?}");
    (dir, srv)
}

#[tokio::test]
async fn project_crud_and_export() {
    let (_dir, srv) = open_with_project().await;
    let (_, names) = srv.get::<Vec<String>>("/templates", None).await;
    assert_eq!(names.unwrap().len(), 5);

    let (_, text) = srv.text(&format!("{P}/export"), None, None).await;
    let expected = save_project(&from_template("unused-stock", "unused-stock", "Unused stock").unwrap()).unwrap();
    assert_eq!(text, expected);
    assert_eq!(save_project(&load_project(&text).unwrap()).unwrap(), text);

    let (status, _) = srv.post::<Project>("/projects", None, json!({ "id": "unused-stock", "name": "again" })).await;
    assert_eq!(status, StatusCode::CONFLICT);

    let mut doc = srv.get::<Project>(P, None).await.1.unwrap();
    doc.name = "Renamed".into();
    let (status, put) = srv.put::<Project>(P, None, &doc).await;
    assert_eq!(status, StatusCode::OK);
    let put = put.unwrap();
    assert_eq!(put.name, "Renamed");
    assert_eq!(put.sessions, doc.sessions, "histories come from the logs");

    let mut broken = doc.clone();
    broken.schema_version = 7;
    let (status, err) = srv.put::<Project>(P, None, &broken).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err.unwrap_err().code, "ValidationFailure");

    let mut fresh = unused_stock_project();
    fresh.id = "copy".into();
    let (status, imported) = srv.post::<Project>("/projects/import", None, &fresh).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(imported.unwrap(), fresh);

    let (status, _) = srv.call::<Value>(Method::DELETE, "/projects/copy", None, None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    let (status, _) = srv.get::<Project>("/projects/copy", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn logic_model_endpoints() {
    let (_dir, srv) = open_with_project().await;
    let model = srv.get::<LogicModel>(&format!("{P}/logic-model"), None).await.1.unwrap();
    let (_, ranked) = srv.get::<Vec<InputSensitivity>>(&format!("{P}/logic-model/rank"), None).await;
    assert_eq!(ranked.unwrap(), rank_inputs(&model).unwrap());
    let (_, csv) = srv.text(&format!("{P}/logic-model/rank?format=csv"), None, None).await;
    assert!(csv.starts_with("input_id,label,sensitivity\n"), "{csv}");
    let (_, choices) = srv.get::<Vec<PolicyChoiceRef>>(&format!("{P}/logic-model/choices?top_k=2"), None).await;
    assert_eq!(choices.unwrap().iter().map(|c| c.rank).collect::<Vec<_>>(), [1, 2]);
    let (status, err) = srv.get::<Value>(&format!("{P}/logic-model/choices?top_k=99"), None).await;
    assert_eq!((status, err.unwrap_err().code.as_str()), (StatusCode::UNPROCESSABLE_ENTITY, "ImpactError"));
    let (_, report) = srv.get::<ValidationReport>(&format!("{P}/logic-model/validate"), None).await;
    assert!(report.unwrap().is_valid());

    let back_edge = json!({ "op": "add-edge", "from": model.impact_node, "to": model.graph.input_ids()[0], "weight": 1.0 });
    let (status, err) = srv.post::<LogicModel>(&format!("{P}/logic-model/edit"), None, back_edge).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let err = err.unwrap_err();
    assert_eq!(err.code, "EditRejected");
    assert_eq!(err.details.unwrap()["reason"], "cycle");
    assert_eq!(srv.get::<LogicModel>(&format!("{P}/logic-model"), None).await.1.unwrap(), model);

    let input = model.graph.input_ids()[0].clone();
    let edge = model.graph.edges.iter().find(|e| e.from == input).unwrap().clone();
    let set = json!({ "op": "set-weight", "from": edge.from, "to": edge.to, "weight": edge.weight * 2.0 });
    let (status, edited) = srv.post::<LogicModel>(&format!("{P}/logic-model/edit"), None, set).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(edited.unwrap().graph.find_edge(&edge.from, &edge.to).unwrap().weight, edge.weight * 2.0);

    #[derive(Deserialize)]
    struct Trajectory {
        impact: BTreeMap<u32, f64>,
    }
    let settings = json!({ "horizon": 4, "inputs": { input.clone(): { "frequency": 1, "start": 0, "effect": 1.0, "attenuation": 0.0 } } });
    let (status, t) = srv.post::<Trajectory>(&format!("{P}/logic-model/advanced"), None, settings).await;
    assert_eq!(status, StatusCode::OK);
    let impact = t.unwrap().impact;
    assert_eq!(impact.len(), 4);
    assert!(impact.values().all(|v| *v == impact[&0]), "one undecayed pulse holds its level");
}

#[tokio::test]
async fn policy_endpoints() {
    let (_dir, srv) = open_with_project().await;
    let project = srv.get::<Project>(P, None).await.1.unwrap();

    #[derive(Deserialize)]
    struct Row {
        id: String,
        point: TernaryPoint,
    }
    let (_, rows) = srv.post::<Vec<Row>>(&format!("{P}/sim/ternary"), None, json!({})).await;
    let rows = rows.unwrap();
    assert_eq!(rows.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), ["A", "B", "C", "D"]);
    for r in &rows {
        let s = r.point.simplex.unwrap();
        assert!((s.soc + s.env + s.eco - 1.0).abs() < 1e-9);
    }
    let (_, csv) = srv.text(&format!("{P}/sim/ternary?format=csv"), None, Some(json!({}))).await;
    assert_eq!(csv.lines().next(), Some("policy_id,soc,env,eco"));
    assert_eq!(csv.lines().count(), 5);

    #[derive(Deserialize)]
    struct Evaluated {
        id: String,
        raw: Triple,
    }
    let (_, two) = srv.post::<Vec<Evaluated>>(&format!("{P}/sim/evaluate"), None, json!({ "scenarios": ["C", "A"] })).await;
    let two = two.unwrap();
    assert_eq!((two[0].id.as_str(), two[1].id.as_str()), ("C", "A"));
    assert_eq!(two[1].raw, rows[0].point.raw);
    let (status, _) = srv.post::<Value>(&format!("{P}/sim/evaluate"), None, json!({ "scenarios": ["Z"] })).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (_, table) = srv.post::<ComparisonTable>(&format!("{P}/sim/compare"), None, json!({ "selected": "B" })).await;
    let model = project.multi_agent.as_ref().unwrap();
    assert_eq!(table.unwrap(), compare_policies(model, &project.scenarios, Some("B"), ScaleMode::Range).unwrap());
    let (_, block) = srv.get::<SensitivityBlock>(&format!("{P}/sim/sensitivity/B"), None).await;
    assert_eq!(block.unwrap().scenario_id, "B");
}

#[tokio::test]
async fn svo_questionnaire_flow() {
    let dir = tempfile::tempdir().unwrap();
    let srv = start(dir.path(), AuthMode::Token).await;
    let (_, conv) = srv.staff().await;
    let body = json!({ "id": "unused-stock", "name": "U", "template": "unused-stock" });
    assert_eq!(srv.post::<Project>("/projects", Some(&conv), body).await.0, StatusCode::CREATED);
    srv.register("sam", Role::Subject, None).await;
    srv.register("ana", Role::Participant, None).await;
    let sam = srv.login("sam").await;
    let ana = srv.login("ana").await;
    let q = format!("{P}/svo/sam");

    let (status, err) = srv.get::<Vec<SliderItem>>(&format!("{q}/items"), Some(&sam)).await;
    assert_eq!((status, err.unwrap_err().code.as_str()), (StatusCode::CONFLICT, "ConsentMissing"));
    let (status, _) = srv.post::<Questionnaire>(&format!("{q}/consent"), Some(&ana), json!(null)).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    let (status, state) = srv.post::<Questionnaire>(&format!("{q}/consent"), Some(&sam), json!(null)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(state.unwrap().stage, QuestionnaireStage::Explanation);
    let (_, items) = srv.get::<Vec<SliderItem>>(&format!("{q}/items"), Some(&sam)).await;
    let items = items.unwrap();
    assert_eq!(items.len(), 15);

    let early = json!([{ "item": items[0].id, "position": 0.5 }]);
    let (status, err) = srv.post::<Questionnaire>(&format!("{q}/responses"), Some(&sam), early).await;
    assert_eq!((status, err.unwrap_err().code.as_str()), (StatusCode::CONFLICT, "WrongStage"));
    let (status, _) = srv.post::<Questionnaire>(&format!("{q}/responses"), Some(&sam), json!([])).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    srv.post::<Questionnaire>(&format!("{q}/explanation"), Some(&sam), json!(null)).await.1.unwrap();
    srv.post::<Questionnaire>(&format!("{q}/practice"), Some(&sam), json!({ "item": 1, "position": 0.3 })).await.1.unwrap();
    srv.post::<Questionnaire>(&format!("{q}/practice/done"), Some(&sam), json!(null)).await.1.unwrap();

    let answers: Vec<SliderResponse> =
        items.iter().enumerate().map(|(i, it)| SliderResponse { item: it.id, position: (i % 5) as f64 / 4.0 }).collect();
    let (status, err) = srv.post::<Questionnaire>(&format!("{q}/complete"), Some(&sam), json!(null)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{err:?}");
    let (_, state) = srv.post::<Questionnaire>(&format!("{q}/responses"), Some(&sam), &answers[..7]).await;
    assert_eq!(state.unwrap().responses.len(), 7);
    let bad = [answers[7], SliderResponse { item: 99, position: 0.5 }];
    let (status, _) = srv.post::<Questionnaire>(&format!("{q}/responses"), Some(&sam), bad).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (_, state) = srv.get::<Questionnaire>(&q, Some(&sam)).await;
    assert_eq!(state.unwrap().responses.len(), 7, "a failed batch keeps nothing");
    srv.post::<Questionnaire>(&format!("{q}/responses"), Some(&sam), &answers[7..]).await.1.unwrap();

    let (status, record) = srv.post::<SvoRecord>(&format!("{q}/complete"), Some(&sam), json!(null)).await;
    assert_eq!(status, StatusCode::OK);
    let record = record.unwrap();
    assert_eq!(record.result, score(Instrument::standard(), &answers).unwrap());
    let (status, _) = srv.post::<SvoRecord>(&format!("{q}/complete"), Some(&sam), json!(null)).await;
    assert_eq!(status, StatusCode::CONFLICT);

    let (status, _) = srv.get::<BTreeMap<String, SvoRecord>>(&format!("{P}/svo"), Some(&sam)).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    let (_, all) = srv.get::<BTreeMap<String, SvoRecord>>(&format!("{P}/svo"), Some(&conv)).await;
    assert_eq!(all.unwrap()["sam"], record);
}

#[tokio::test]
async fn behavior_endpoints() {
    let (_dir, srv) = open_with_project().await;
    let (_, report) = srv.post::<SimulationReport>(&format!("{P}/behavior/simulate"), None, json!({})).await;
    let report = report.unwrap();
    let top: Vec<&str> = report.ranked.iter().take(3).map(|o| o.plan_id.as_str()).collect();
    assert_eq!(top, ["motivational-orientation", "leaders-behavior", "positive-mood"]);
    let (_, csv) = srv.text(&format!("{P}/behavior/simulate?format=csv"), None, Some(json!({}))).await;
    assert_eq!(csv, report.to_csv());
    let (status, _) = srv.text(&format!("{P}/behavior/simulate?format=xml"), None, Some(json!({}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    #[derive(Deserialize)]
    struct Prediction {
        rate: f64,
        sensitivity: BTreeMap<String, f64>,
    }
    let (_, p) = srv.post::<Prediction>(&format!("{P}/behavior/predict"), None, json!({})).await;
    let p = p.unwrap();
    assert_eq!(p.rate, report.baseline_rate);
    assert!(!p.sensitivity.is_empty());

    let (_, s) = srv.post::<SuggestionReport>(&format!("{P}/behavior/suggest"), None, json!({ "plan_id": "positive-mood" })).await;
    let s = s.unwrap();
    let outcome = report.ranked.iter().find(|o| o.plan_id == "positive-mood").unwrap();
    assert_eq!((s.rate, s.delta), (outcome.rate, outcome.delta));
    let (status, _) = srv.post::<Value>(&format!("{P}/behavior/suggest"), None, json!({ "plan_id": "nope" })).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    #[derive(Deserialize)]
    struct Imported {
        updated: Vec<String>,
    }
    let (_, imported) = srv.post::<Imported>(&format!("{P}/behavior/import-svo"), None, json!(null)).await;
    let imported = imported.unwrap().updated;
    assert!(!imported.is_empty());
    let (status, _) = srv.post::<Prediction>(&format!("{P}/behavior/predict"), None, json!({ "subject": imported[0] })).await;
    assert_eq!(status, StatusCode::OK);

    #[derive(Deserialize)]
    struct Observed {
        needs_retargeting: bool,
    }
    let m = format!("{P}/behavior/monitoring/owner-01");
    let (status, _) = srv.post::<Observed>(&m, None, json!({ "t": 0, "observed": 0.4 })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (_, o) = srv.post::<Observed>(&m, None, json!({ "t": 0, "observed": 0.6, "threshold": 0.5 })).await;
    assert!(!o.unwrap().needs_retargeting);
    let (_, o) = srv.post::<Observed>(&m, None, json!({ "t": 1, "observed": 0.4 })).await;
    assert!(o.unwrap().needs_retargeting);
}

#[tokio::test]
async fn mediator_endpoints() {
    let (_dir, srv) = open_with_project().await;
    let (_, table) = srv.get::<Vec<MotionRow>>("/mediator/motions", None).await;
    assert_eq!(table.unwrap().len(), 17);
    let (_, motions) = srv.get::<SessionMotions>(&format!("{P}/sessions/consensus-1/motions"), None).await;
    let motions = motions.unwrap();
    assert_eq!(motions.group.map(|g| (g.number, g.name)), Some((16, "Consensus".to_string())));
    assert_eq!(motions.participants.len(), 5);
}
