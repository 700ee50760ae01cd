mod common;

use std::collections::BTreeSet;
use std::io::{Cursor, Read};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::http::StatusCode as AxStatus;
use axum::routing::post;
use axum::Json;
use common::*;
use parking_lot::Mutex;
use reqwest::StatusCode;
use serde_json::{json, Value};
use topiary_core::project::RetryPolicy;
use topiary_core::{parse_ofn, EventKind};
use topiary_server::Config;

async fn demo(server: &TestServer) -> Session<'_> {
    let alice = server.login("alice").await;
    alice.json(alice.post("/projects").json(&json!({ "id": "demo", "name": "Demo", "root": format!("{NS}root") })), StatusCode::CREATED).await;
    for (local, parent, label) in [("home", "root", "Home Decor"), ("sofas", "home", "Sofas"), ("couches", "home", "Couches"), ("garden", "root", "Gardening")] {
        alice.json(alice.post("/p/demo/commit").json(&json!({ "message": format!("add {local}"), "changes": add_class(local, parent, label) })), StatusCode::OK).await;
    }
    alice
}

#[tokio::test]
async fn login_and_tokens() {
    let server = start(Config::default(), &["alice"]).await;
    let r = server.client.post(server.url("/login")).json(&json!({ "user": "alice", "password": "nope" })).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::UNAUTHORIZED);
    let r = server.client.get(server.url("/projects")).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::UNAUTHORIZED);
    let r = server.client.get(server.url("/projects")).bearer_auth("forged").send().await.unwrap();
    assert_eq!(r.status(), StatusCode::UNAUTHORIZED);
    let alice = server.login("alice").await;
    assert_eq!(alice.json(alice.get("/projects"), StatusCode::OK).await, json!([]));
    let r = server.client.get(server.url(&format!("/projects?token={}", alice.token))).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::OK);
}

#[tokio::test]
async fn project_creation_rules() {
    let server = start(Config::default(), &["alice", "bob"]).await;
    let alice = demo(&server).await;
    let again = alice.post("/projects").json(&json!({ "id": "demo", "root": format!("{NS}root") }));
    alice.json(again, StatusCode::CONFLICT).await;
    alice.json(alice.post("/projects").json(&json!({ "id": "bad id!", "root": format!("{NS}root") })), StatusCode::BAD_REQUEST).await;
    alice.json(alice.post("/projects").json(&json!({ "id": "x", "root": "not an iri" })), StatusCode::BAD_REQUEST).await;
    let list = alice.json(alice.get("/projects"), StatusCode::OK).await;
    assert_eq!(list[0]["id"], "demo");
    assert_eq!(list[0]["role"], "Manage");
    assert_eq!(list[0]["headRevision"], 4);
    let bob = server.login("bob").await;
    assert_eq!(bob.json(bob.get("/projects"), StatusCode::OK).await, json!([]));
    bob.json(bob.get("/p/demo/stats"), StatusCode::FORBIDDEN).await;
    bob.json(bob.get("/p/nope/stats"), StatusCode::NOT_FOUND).await;
}

#[tokio::test]
async fn entity_view_history_search_and_ofn() {
    let server = start(Config::default(), &["alice"]).await;
    let alice = demo(&server).await;
    let home = format!("{NS}home");
    let view = alice.json(alice.get(&format!("/p/demo/e/{}", enc(&home))), StatusCode::OK).await;
    assert_eq!(view["names"]["primary"]["text"], "Home Decor");
    let kids: Vec<&str> = view["children"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(kids, ["Couches", "Sofas"]);
    assert_eq!(view["deepLink"], format!("/p/demo/e/{}", enc(&home)));
    alice.json(alice.get(&format!("/p/demo/e/{}", enc(&format!("{NS}ghost")))), StatusCode::NOT_FOUND).await;

    let hist = alice.json(alice.get(&format!("/p/demo/history?entity={}&limit=10", enc(&home))), StatusCode::OK).await;
    let revs: Vec<u64> = hist.as_array().unwrap().iter().map(|r| r["rev"].as_u64().unwrap()).collect();
    assert_eq!(revs, [3, 2, 1]);
    let page = alice.json(alice.get("/p/demo/history?limit=2&offset=1"), StatusCode::OK).await;
    assert_eq!(page.as_array().unwrap().iter().map(|r| r["rev"].as_u64().unwrap()).collect::<Vec<_>>(), [3, 2]);
    alice.json(alice.get("/p/demo/history?limit=0"), StatusCode::BAD_REQUEST).await;

    let hits = alice.json(alice.get("/p/demo/search?q=sofa"), StatusCode::OK).await;
    assert_eq!(hits[0]["iri"], format!("{NS}sofas"));
    assert_eq!(hits[0]["rank"], "prefix");
    assert_eq!(alice.json(alice.get("/p/demo/search?q=zzz-nonexistent"), StatusCode::OK).await, json!([]));
    alice.json(alice.get("/p/demo/search?q="), StatusCode::BAD_REQUEST).await;
    alice.json(alice.get("/p/demo/search?q=x&fields=colour"), StatusCode::BAD_REQUEST).await;

    let r = alice.get("/p/demo/taxonomy").send().await.unwrap();
    assert_eq!(r.status(), StatusCode::OK);
    let text = r.text().await.unwrap();
    let parsed = parse_ofn(&text).unwrap().to_taxonomy(None).unwrap();
    let head = server.state.project(&"demo".into()).unwrap().project.read().head().clone();
    assert_eq!(parsed.axioms(), head.axioms());
}

#[tokio::test]
async fn refactoring_endpoints() {
    let server = start(Config::default(), &["alice"]).await;
    let alice = demo(&server).await;
    let merge = json!({ "sources": [format!("{NS}couches")], "target": format!("{NS}sofas") });
    let rev = alice.json(alice.post("/p/demo/merge").json(&merge), StatusCode::OK).await;
    assert_eq!(rev["prov"], "merge");
    let sofas = alice.json(alice.get(&format!("/p/demo/e/{}", enc(&format!("{NS}sofas")))), StatusCode::OK).await;
    assert!(sofas["annotations"].as_array().unwrap().iter().any(|a| a["value"]["lexical"] == "Couches"));
    alice.json(alice.post("/p/demo/merge").json(&json!({ "sources": [format!("{NS}home")], "target": format!("{NS}sofas") })), StatusCode::UNPROCESSABLE_ENTITY).await;

    let mv = json!({ "entities": [format!("{NS}sofas")], "target": format!("{NS}garden") });
    alice.json(alice.post("/p/demo/move").json(&mv), StatusCode::OK).await;
    let sofas = alice.json(alice.get(&format!("/p/demo/e/{}", enc(&format!("{NS}sofas")))), StatusCode::OK).await;
    assert_eq!(sofas["parents"][0]["iri"], format!("{NS}garden"));

    let edit = json!({
        "selection": { "property": "http://www.w3.org/2000/01/rdf-schema#label", "valuePattern": "(.*)ing" },
        "action": { "replaceValue": "${1}" }
    });
    let out = alice.json(alice.post("/p/demo/bulk-annotate").json(&edit), StatusCode::OK).await;
    assert_eq!(out["matched"], 1);
    let garden = alice.json(alice.get(&format!("/p/demo/e/{}", enc(&format!("{NS}garden")))), StatusCode::OK).await;
    assert_eq!(garden["names"]["primary"]["text"], "Garden");

    let before = alice.get("/p/demo/taxonomy").send().await.unwrap().text().await.unwrap();
    let head = out["revision"]["rev"].as_u64().unwrap();
    alice.json(alice.post(&format!("/p/demo/revert/{head}")), StatusCode::OK).await;
    alice.json(alice.post(&format!("/p/demo/revert/{}", head + 1)), StatusCode::OK).await;
    let after = alice.get("/p/demo/taxonomy").send().await.unwrap().text().await.unwrap();
    assert_eq!(before, after);
    alice.json(alice.post("/p/demo/revert/999"), StatusCode::NOT_FOUND).await;

    let bad = json!({ "changes": [{ "op": "remove", "axiom": { "type": "declaration", "class": format!("{NS}nothing") } }] });
    let err = alice.json(alice.post("/p/demo/commit").json(&bad), StatusCode::CONFLICT).await;
    assert_eq!(err["error"], "ValidationFailed");
    alice.json(alice.post("/p/demo/commit").json(&json!({ "changes": [] })), StatusCode::BAD_REQUEST).await;

    let sheet = "level1,level2,level3\nTravel,Beaches,\nTravel,Mountains,Alps\n";
    let rev = alice.json(alice.post("/p/demo/import-seed").body(sheet), StatusCode::OK).await;
    assert_eq!(rev["prov"], "seedImport");
}

#[tokio::test]
async fn tags_rules_and_comments() {
    let server = start(Config::default(), &["alice", "bob"]).await;
    let alice = demo(&server).await;
    let tag = alice.json(alice.post("/p/demo/tags").json(&json!({ "label": "Missing HU", "color": "#ff0000" })), StatusCode::CREATED).await;
    let tag_id = tag["id"].as_str().unwrap().to_string();
    alice.json(alice.post("/p/demo/tags").json(&json!({ "label": "Bad", "color": "red" })), StatusCode::BAD_REQUEST).await;
    let rule = json!({ "tag": tag_id, "enabled": true, "criteria": { "missingAnnotation": { "property": "http://www.w3.org/2000/01/rdf-schema#label", "lang": "hu" } } });
    alice.json(alice.post("/p/demo/tag-rules").json(&rule), StatusCode::OK).await;
    let tagged = alice.json(alice.get(&format!("/p/demo/tagged/{tag_id}")), StatusCode::OK).await;
    let names: Vec<&str> = tagged.as_array().unwrap().iter().map(|t| t["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["Couches", "Gardening", "Home Decor", "Sofas", "root"]);
    assert_eq!(alice.json(alice.get("/p/demo/tag-rules"), StatusCode::OK).await.as_array().unwrap().len(), 1);
    alice.json(alice.post("/p/demo/tag-rules").json(&json!([])), StatusCode::OK).await;
    assert_eq!(alice.json(alice.get(&format!("/p/demo/tagged/{tag_id}")), StatusCode::OK).await, json!([]));
    let assign = json!({ "entity": format!("{NS}sofas") });
    alice.json(alice.post(&format!("/p/demo/tags/{tag_id}/assign")).json(&assign), StatusCode::NO_CONTENT).await;
    alice.json(alice.post(&format!("/p/demo/tags/{tag_id}/assign")).json(&assign), StatusCode::CONFLICT).await;
    assert_eq!(alice.json(alice.get(&format!("/p/demo/tagged/{tag_id}")), StatusCode::OK).await.as_array().unwrap().len(), 1);
    alice.json(alice.get("/p/demo/tagged/tag-99"), StatusCode::NOT_FOUND).await;

    alice.json(alice.put("/p/demo/settings").json(&json!({ "acl": { "bob": "Comment" } })), StatusCode::OK).await;
    let bob = server.login("bob").await;
    let body = json!({ "entity": format!("{NS}sofas"), "body": "Should this merge with :couches? @alice" });
    let thread = bob.json(bob.post("/p/demo/threads").json(&body), StatusCode::CREATED).await;
    assert_eq!(thread["id"], 1);
    let reply = json!({ "entity": format!("{NS}sofas"), "body": "Agreed", "threadId": 1 });
    alice.json(alice.post("/p/demo/threads").json(&reply), StatusCode::CREATED).await;
    let resolved = alice.json(alice.post("/p/demo/threads/1/status").json(&json!({ "status": "Resolved" })), StatusCode::OK).await;
    assert_eq!(resolved["status"], "Resolved");
    let list = bob.json(bob.get("/p/demo/comments?sort=created"), StatusCode::OK).await;
    assert_eq!(list[0]["comments"].as_array().unwrap().len(), 2);
    bob.json(bob.get("/p/demo/comments?sort=loudest"), StatusCode::BAD_REQUEST).await;
    bob.json(bob.post("/p/demo/commit").json(&json!({ "changes": add_class("x", "root", "X") })), StatusCode::FORBIDDEN).await;
    bob.json(bob.put("/p/demo/settings").json(&json!({ "name": "Mine" })), StatusCode::FORBIDDEN).await;
    let settings = bob.json(bob.get("/p/demo/settings"), StatusCode::OK).await;
    assert_eq!(settings["name"], "Demo");
    assert_eq!(settings["owner"], "alice");
}

#[tokio::test]
async fn export_zip_lint_and_stats() {
    let server = start(Config::default(), &["alice"]).await;
    let alice = demo(&server).await;
    let fetch = |q: &'static str| {
        let req = alice.get(&format!("/p/demo/export{q}"));
        async move {
            let r = req.send().await.unwrap();
            assert_eq!(r.status(), StatusCode::OK);
            assert_eq!(r.headers()["content-type"], "application/zip");
            r.bytes().await.unwrap().to_vec()
        }
    };
    let first = fetch("?noAds=true&deprecated=true").await;
    let second = fetch("?noAds=true&deprecated=true").await;
    assert_eq!(first, second);
    let mut zip = zip::ZipArchive::new(Cursor::new(first)).unwrap();
    let names: BTreeSet<String> = zip.file_names().map(str::to_string).collect();
    assert_eq!(names, ["closure.csv", "interests.csv", "manifest.json", "synonyms.csv"].map(String::from).into());
    let mut interests = String::new();
    zip.by_name("interests.csv").unwrap().read_to_string(&mut interests).unwrap();
    assert_eq!(interests.lines().count(), 5);
    let mut manifest = String::new();
    zip.by_name("manifest.json").unwrap().read_to_string(&mut manifest).unwrap();
    let manifest: Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(manifest["revision"], 4);
    assert_eq!(manifest["rowCounts"]["interests"], 4);
    let old = fetch("?rev=2").await;
    let mut zip = zip::ZipArchive::new(Cursor::new(old)).unwrap();
    let mut interests = String::new();
    zip.by_name("interests.csv").unwrap().read_to_string(&mut interests).unwrap();
    assert_eq!(interests.lines().count(), 3);
    alice.json(alice.get("/p/demo/export?rev=77"), StatusCode::NOT_FOUND).await;

    let stats = alice.json(alice.get("/p/demo/stats"), StatusCode::OK).await;
    assert_eq!((stats["classCount"].as_u64(), stats["verticalCount"].as_u64(), stats["maxDepth"].as_u64()), (Some(4), Some(2), Some(2)));
    alice.json(alice.get("/p/demo/lint"), StatusCode::OK).await;
    let csv = alice.get("/p/demo/lint?format=csv").send().await.unwrap().text().await.unwrap();
    assert!(csv.starts_with("rule,severity,entity,message"));
}

#[tokio::test]
async fn event_stream_resume_and_compaction() {
    let server = start(Config::default(), &["alice"]).await;
    let alice = demo(&server).await;
    let mut live = alice.subscribe("demo", None).await.unwrap();
    alice.json(alice.post("/p/demo/commit").json(&json!({ "changes": add_class("lamps", "home", "Lamps") })), StatusCode::OK).await;
    let e = next_event(&mut live).await;
    assert_eq!(e.kind, EventKind::RevisionCommitted);
    assert_eq!(e.payload["rev"], 5);

    let mut replay = alice.subscribe("demo", Some(0)).await.unwrap();
    let mut seqs = Vec::new();
    let last = server.state.project(&"demo".into()).unwrap().project.read().events().last_seq();
    while seqs.last() != Some(&last) {
        seqs.push(next_event(&mut replay).await.seq);
    }
    assert_eq!(seqs, (1..=last).collect::<Vec<_>>());
    let mut resumed = alice.subscribe("demo", Some(last - 1)).await.unwrap();
    assert_eq!(next_event(&mut resumed).await.seq, last);

    let r = alice.get("/p/demo/events").header("Last-Event-ID", "abc").send().await.unwrap();
    assert_eq!(r.status(), StatusCode::BAD_REQUEST);
    server.state.project(&"demo".into()).unwrap().project.write().compact_events(1).unwrap();
    let gone = alice.subscribe("demo", Some(1)).await.unwrap_err();
    assert_eq!(gone.status(), StatusCode::GONE);
    assert!(alice.subscribe("demo", Some(last - 1)).await.is_ok());
}

#[tokio::test]
async fn deep_link_serves_the_app_to_browsers() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<!doctype html><title>app</title>").unwrap();
    let config = Config { static_dir: Some(dir.path().to_path_buf()), ..Config::default() };
    let server = start(config, &["alice"]).await;
    let alice = demo(&server).await;
    let path = format!("/p/demo/e/{}", enc(&format!("{NS}sofas")));
    let page = server.client.get(server.url(&path)).header("Accept", "text/html").send().await.unwrap();
    assert!(page.text().await.unwrap().contains("<title>app</title>"));
    let json = alice.json(alice.get(&path).header("Accept", "application/json"), StatusCode::OK).await;
    assert_eq!(json["iri"], format!("{NS}sofas"));
    let index = server.client.get(server.url("/")).send().await.unwrap();
    assert_eq!(index.status(), StatusCode::OK);
}

#[tokio::test]
async fn projects_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let config = Config { data_dir: Some(dir.path().to_path_buf()), ..Config::default() };
    let ofn = {
        let server = start(config.clone(), &["alice"]).await;
        let alice = demo(&server).await;
        alice.json(alice.post("/p/demo/threads").json(&json!({ "entity": format!("{NS}home"), "body": "hello" })), StatusCode::CREATED).await;
        alice.get("/p/demo/taxonomy").send().await.unwrap().text().await.unwrap()
    };
    let server = start(config, &[]).await;
    let alice = server.login("alice").await;
    assert_eq!(alice.get("/p/demo/taxonomy").send().await.unwrap().text().await.unwrap(), ofn);
    let threads = alice.json(alice.get("/p/demo/comments"), StatusCode::OK).await;
    assert_eq!(threads.as_array().unwrap().len(), 1);
    let mut events = alice.subscribe("demo", Some(0)).await.unwrap();
    assert_eq!(next_event(&mut events).await.seq, 1);
}

#[derive(Default)]
struct Receiver {
    failures_left: AtomicUsize,
    bodies: Mutex<Vec<(String, Value)>>,
}

#[tokio::test]
async fn webhook_retries_until_delivered() {
    let receiver = Arc::new(Receiver { failures_left: AtomicUsize::new(2), ..Receiver::default() });
    let rx = receiver.clone();
    let app = axum::Router::new().route(
        "/hook",
        post(move |headers: axum::http::HeaderMap, Json(body): Json<Value>| {
            let rx = rx.clone();
            async move {
                let delivery = headers["x-topiary-delivery"].to_str().unwrap().to_string();
                rx.bodies.lock().push((delivery, body));
                if rx.failures_left.load(Ordering::SeqCst) > 0 {
                    rx.failures_left.fetch_sub(1, Ordering::SeqCst);
                    AxStatus::INTERNAL_SERVER_ERROR
                } else {
                    AxStatus::OK
                }
            }
        }),
    );
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let hook_url = format!("http://{}/hook", listener.local_addr().unwrap());
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });

    let config = Config { retry: RetryPolicy { base_ms: 30, max_ms: 200 }, webhook_poll: Duration::from_millis(10), ..Config::default() };
    let server = start(config, &["alice", "bob"]).await;
    let worker = topiary_server::webhook::spawn_worker(server.state.clone());
    let alice = demo(&server).await;
    alice.json(alice.put("/p/demo/settings").json(&json!({ "webhook": { "url": hook_url }, "acl": { "bob": "Comment" } })), StatusCode::OK).await;
    let bob = server.login("bob").await;
    bob.json(bob.post("/p/demo/threads").json(&json!({ "entity": format!("{NS}sofas"), "body": "Ping @alice about :couches" })), StatusCode::CREATED).await;

    let handle = server.state.project(&"demo".into()).unwrap();
    let deadline = tokio::time::Instant::now() + Duration::from_secs(10);
    while handle.project.read().outbox().delivered_count() < 1 {
        assert!(tokio::time::Instant::now() < deadline, "not delivered in time");
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    worker.abort();
    let bodies = receiver.bodies.lock();
    assert_eq!(bodies.len(), 3);
    assert!(bodies.iter().all(|(id, b)| id == &bodies[0].0 && b == &bodies[0].1));
    let body = &bodies[0].1;
    assert_eq!(body["kind"], "CommentPosted");
    assert_eq!(body["project"], "demo");
    assert_eq!(body["entityIri"], format!("{NS}sofas"));
    assert_eq!(body["entityLabel"], "Sofas");
    assert_eq!(body["threadId"], 1);
    assert_eq!(body["author"], "bob");
    assert_eq!(body["deepLink"], format!("/p/demo/e/{}", enc(&format!("{NS}sofas"))));
    assert!(body["bodyPreview"].as_str().unwrap().starts_with("Ping"));
    assert_eq!(handle.project.read().outbox().entries().count(), 0);
}
