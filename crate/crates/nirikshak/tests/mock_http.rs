use std::time::Duration;

use nirikshak::{BugFlags, MockServer, UreqTransport};
use nirikshak_core::runner::{execute_node, HttpRequest, Position, RequestBody, Transport};
use nirikshak_core::{enumerate_nodes, parse_endpoints, parse_resource_schema, HttpMethod, Outcome, OutcomeCase, ResourceInstance};
use serde_json::{json, Value};

fn transport(mock: &MockServer) -> UreqTransport {
    UreqTransport::new(&mock.url(), Duration::from_secs(5))
}

fn request(method: HttpMethod, path: &str, body: Option<Value>) -> HttpRequest {
    HttpRequest {
        method,
        path: path.into(),
        headers: vec![],
        body: body.map(RequestBody::Json),
    }
}

fn student(id: &str) -> serde_json::Map<String, Value> {
    json!({"id": id, "name": "Zoe Rossi", "age": 19, "branch": "ME",
           "address": {"street": "4 Lake Rd", "city": "Agra", "state": "UP", "zip": "282001"}})
    .as_object()
    .unwrap()
    .clone()
}

#[test]
fn bug_free_get_unknown_is_404() {
    let mock = MockServer::start(0, BugFlags::default()).unwrap();
    let r = transport(&mock).send(&request(HttpMethod::Get, "/student/nobody", None)).unwrap();
    assert_eq!(r.status, 404);
}

#[test]
fn get_missing_bug_returns_empty_200() {
    let mock = MockServer::start(0, BugFlags::only("getMissingReturns200").unwrap()).unwrap();
    let r = transport(&mock).send(&request(HttpMethod::Get, "/student/nobody", None)).unwrap();
    assert_eq!((r.status, r.body.as_str()), (200, ""));
}

#[test]
fn port_in_use_is_a_startup_error() {
    let first = MockServer::start(0, BugFlags::default()).unwrap();
    assert!(MockServer::start(first.port(), BugFlags::default()).is_err());
}

#[test]
fn crud_round_trip_over_http() {
    let mock = MockServer::start(0, BugFlags::default()).unwrap();
    let mut t = transport(&mock);
    let body = Value::Object(student("s1"));
    assert_eq!(t.send(&request(HttpMethod::Post, "/student", Some(body.clone()))).unwrap().status, 201);
    let got = t.send(&request(HttpMethod::Get, "/student/s1", None)).unwrap();
    assert_eq!(got.header("content-type"), Some("application/json"));
    assert_eq!(serde_json::from_str::<Value>(&got.body).unwrap(), body);
    assert_eq!(t.send(&request(HttpMethod::Patch, "/student/s1", Some(json!({"age": 20})))).unwrap().status, 200);
    assert_eq!(t.send(&request(HttpMethod::Delete, "/student/s1", None)).unwrap().status, 204);
    assert!(mock.is_empty());
    let raw = HttpRequest {
        body: Some(RequestBody::Raw("{\"id\": ".into())),
        ..request(HttpMethod::Post, "/student", None)
    };
    assert_eq!(t.send(&raw).unwrap().status, 400);
}

#[test]
fn admin_routes_accept_hook_payloads() {
    let mock = MockServer::start(0, BugFlags::default()).unwrap();
    let mut t = transport(&mock);
    let payload = json!({"resource": "student", "instances": [student("a"), student("b")]});
    assert_eq!(t.send(&request(HttpMethod::Post, "/__admin/seed", Some(payload))).unwrap().status, 200);
    assert!(mock.contains("a") && mock.contains("b"));
    let purge = json!([student("a")]);
    assert_eq!(t.send(&request(HttpMethod::Post, "/__admin/purge", Some(purge))).unwrap().status, 200);
    assert_eq!(mock.len(), 1);
    assert_eq!(t.send(&request(HttpMethod::Post, "/__admin/reset", None)).unwrap().status, 204);
    assert!(mock.is_empty());
}

#[test]
fn unreachable_host_is_a_transport_error() {
    let port = {
        let mock = MockServer::start(0, BugFlags::default()).unwrap();
        mock.port()
    };
    let mut t = UreqTransport::new(&format!("http://127.0.0.1:{port}"), Duration::from_secs(2));
    let err = t.send(&request(HttpMethod::Get, "/student/x", None)).unwrap_err();
    assert!(err.to_string().starts_with("transport: "), "{err}");
}

fn get_nodes() -> (nirikshak_core::ScenarioNode, nirikshak_core::ScenarioNode) {
    let schema = parse_resource_schema(
        r#"{"name": "student", "idField": "id", "fields": {"id": {"kind": "uuid"}, "name": {"kind": "name"}}}"#,
    )
    .unwrap();
    let eps = parse_endpoints(
        r#"[{"method": "GET", "url": "/student/{resource:id}", "cases": {
              "positive": {"expected": {"status": 200, "body": {"id": "{resource:id}"}}},
              "negative": {}}}]"#,
        &schema,
    )
    .unwrap();
    let mut nodes = enumerate_nodes(&eps).into_iter();
    let pos = nodes.find(|n| n.outcome_case == OutcomeCase::Positive).unwrap();
    let neg = enumerate_nodes(&eps).into_iter().find(|n| n.outcome_case == OutcomeCase::Negative).unwrap();
    (pos, neg)
}

#[test]
fn execute_node_against_the_mock() {
    let (pos, neg) = get_nodes();
    let mock = MockServer::start(0, BugFlags::default()).unwrap();
    mock.seed([student("abc")]);
    let inst = ResourceInstance {
        resource: "student".into(),
        values: json!({"id": "abc", "name": "Zoe Rossi"}).as_object().unwrap().clone(),
    };
    let at = Position { iteration: 1, walk_id: 0, step_index: 0 };
    let mut t = transport(&mock);
    let rec = execute_node(&pos, &inst, &mut t, at);
    assert_eq!((rec.outcome, rec.url.as_str(), rec.error_message.as_str()), (Outcome::Pass, "/student/abc", ""));

    mock.set_flags(BugFlags::only("getMissingReturns200").unwrap());
    let ghost = ResourceInstance {
        resource: "student".into(),
        values: json!({"id": "ghost"}).as_object().unwrap().clone(),
    };
    let rec = execute_node(&neg, &ghost, &mut t, at);
    assert_eq!(rec.outcome, Outcome::Fail);
    assert_eq!(rec.error_message, "expected status in {404}, got 200");
}
