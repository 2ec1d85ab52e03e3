//! In-process student CRUD server with switchable bugs.
//!
//! Routes: `POST /student`, `GET|PUT|PATCH|DELETE /student/{id}`, plus admin
//! routes `POST /__admin/reset`, `POST /__admin/seed` and `POST /__admin/purge`.
//! Seed and purge take either an array of students or `{"instances": [...]}`,
//! which is the shape command hooks receive on stdin.

use std::collections::BTreeMap;
use std::io;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex, MutexGuard};
use std::thread::JoinHandle;

use nirikshak_core::pool::Hooks;
use nirikshak_core::ResourceInstance;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use tiny_http::{Header, Method, Request, Response, Server};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct BugFlags {
    /// GET on an unknown id answers 200 with an empty body.
    pub get_missing_returns200: bool,
    /// DELETE on an unknown id answers 200.
    pub delete_missing_returns200: bool,
    /// POST of an existing id overwrites it and answers 201.
    pub post_duplicate_creates: bool,
    /// PATCH responses leave out `name`; storage is unaffected.
    pub patch_drops_field: bool,
    /// Successful PUT answers 202.
    pub put_wrong_status: bool,
}

impl BugFlags {
    pub const NAMES: [&'static str; 5] = [
        "getMissingReturns200",
        "deleteMissingReturns200",
        "postDuplicateCreates",
        "patchDropsField",
        "putWrongStatus",
    ];

    /// Flags with only the named bug switched on.
    pub fn only(name: &str) -> Option<BugFlags> {
        let mut f = BugFlags::default();
        *f.slot(name)? = true;
        Some(f)
    }

    fn slot(&mut self, name: &str) -> Option<&mut bool> {
        Some(match name {
            "getMissingReturns200" => &mut self.get_missing_returns200,
            "deleteMissingReturns200" => &mut self.delete_missing_returns200,
            "postDuplicateCreates" => &mut self.post_duplicate_creates,
            "patchDropsField" => &mut self.patch_drops_field,
            "putWrongStatus" => &mut self.put_wrong_status,
            _ => return None,
        })
    }

    /// Parses a comma-separated list of flag names.
    pub fn parse_list(list: &str) -> Result<BugFlags, String> {
        let mut f = BugFlags::default();
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            *f.slot(name).ok_or_else(|| format!("unknown bug flag `{name}`"))? = true;
        }
        Ok(f)
    }
}

#[derive(Debug, Default)]
struct State {
    students: BTreeMap<String, Map<String, Value>>,
    flags: BugFlags,
}

type Shared = Arc<Mutex<State>>;

fn lock(state: &Shared) -> MutexGuard<'_, State> {
    state.lock().unwrap_or_else(|p| p.into_inner())
}

/// A running mock. Stops when dropped.
pub struct MockServer {
    server: Arc<Server>,
    addr: SocketAddr,
    state: Shared,
    worker: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Binds `127.0.0.1:port`; port 0 picks a free one.
    pub fn start(port: u16, flags: BugFlags) -> io::Result<MockServer> {
        let server = Server::http(("127.0.0.1", port)).map_err(|e| io::Error::new(io::ErrorKind::AddrInUse, e.to_string()))?;
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| io::Error::new(io::ErrorKind::Other, "not an IP listener"))?;
        let server = Arc::new(server);
        let state: Shared = Arc::new(Mutex::new(State { students: BTreeMap::new(), flags }));
        let worker = {
            let server = Arc::clone(&server);
            let state = Arc::clone(&state);
            std::thread::spawn(move || {
                for request in server.incoming_requests() {
                    handle(&state, request);
                }
            })
        };
        Ok(MockServer {
            server,
            addr,
            state,
            worker: Some(worker),
        })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn port(&self) -> u16 {
        self.addr.port()
    }

    pub fn flags(&self) -> BugFlags {
        lock(&self.state).flags
    }

    pub fn set_flags(&self, flags: BugFlags) {
        lock(&self.state).flags = flags;
    }

    pub fn seed(&self, students: impl IntoIterator<Item = Map<String, Value>>) {
        let mut st = lock(&self.state);
        for s in students {
            if let Some(id) = s.get("id").and_then(Value::as_str) {
                st.students.insert(id.to_owned(), s.clone());
            }
        }
    }

    pub fn remove(&self, id: &str) -> bool {
        lock(&self.state).students.remove(id).is_some()
    }

    pub fn contains(&self, id: &str) -> bool {
        lock(&self.state).students.contains_key(id)
    }

    pub fn len(&self) -> usize {
        lock(&self.state).students.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn reset(&self) {
        lock(&self.state).students.clear();
    }

    /// Hooks that seed and purge this server directly, without HTTP.
    pub fn hooks(&self) -> MockHooks {
        MockHooks { state: Arc::clone(&self.state) }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

pub struct MockHooks {
    state: Shared,
}

impl Hooks for MockHooks {
    fn setup(&mut self, _resource: &str, instances: &[ResourceInstance]) -> Result<(), String> {
        let mut st = lock(&self.state);
        for inst in instances {
            let id = inst.text_of("id").ok_or("instance without id")?;
            st.students.insert(id, inst.values.clone());
        }
        Ok(())
    }

    fn cleanup(&mut self, _resource: &str, instances: &[ResourceInstance]) -> Result<(), String> {
        let mut st = lock(&self.state);
        for inst in instances {
            if let Some(id) = inst.text_of("id") {
                st.students.remove(&id);
            }
        }
        Ok(())
    }
}

struct Reply {
    status: u16,
    body: Option<Value>,
}

impl Reply {
    fn json(status: u16, body: Value) -> Reply {
        Reply { status, body: Some(body) }
    }

    fn empty(status: u16) -> Reply {
        Reply { status, body: None }
    }

    fn error(status: u16, message: &str) -> Reply {
        Reply::json(status, json!({ "error": message }))
    }
}

fn handle(state: &Shared, mut request: Request) {
    let mut raw = String::new();
    let reply = match request.as_reader().read_to_string(&mut raw) {
        Ok(_) => {
            let if_match_any = request
                .headers()
                .iter()
                .any(|h| h.field.equiv("If-Match") && h.value.as_str().trim() == "*");
            let path = request.url().split('?').next().unwrap_or("").to_owned();
            route(&mut lock(state), request.method(), &path, &raw, if_match_any)
        }
        Err(_) => Reply::error(400, "unreadable body"),
    };
    let result = match reply.body {
        Some(body) => {
            let header = Header::from_bytes("Content-Type", "application/json").expect("static header");
            request.respond(Response::from_string(body.to_string()).with_status_code(reply.status).with_header(header))
        }
        None => request.respond(Response::empty(reply.status)),
    };
    if let Err(e) = result {
        log::debug!("mock: failed to respond: {e}");
    }
}

fn route(st: &mut State, method: &Method, path: &str, raw: &str, if_match_any: bool) -> Reply {
    let segments: Vec<&str> = path.split('/').filter(|s| !s.is_empty()).collect();
    match (method, segments.as_slice()) {
        (Method::Post, ["__admin", "reset"]) => {
            st.students.clear();
            Reply::empty(204)
        }
        (Method::Post, ["__admin", "seed"]) => admin_batch(raw, |s| {
            if let Some(id) = s.get("id").and_then(Value::as_str) {
                st.students.insert(id.to_owned(), s.clone());
            }
        }),
        (Method::Post, ["__admin", "purge"]) => admin_batch(raw, |s| {
            if let Some(id) = s.get("id").and_then(Value::as_str) {
                st.students.remove(id);
            }
        }),
        (Method::Post, ["student"]) => create(st, raw),
        (Method::Get, ["student", id]) => match st.students.get(*id) {
            Some(s) => Reply::json(200, Value::Object(s.clone())),
            None if st.flags.get_missing_returns200 => Reply::empty(200),
            None => Reply::error(404, "student not found"),
        },
        (Method::Put, ["student", id]) => replace(st, id, raw, if_match_any),
        (Method::Patch, ["student", id]) => patch(st, id, raw),
        (Method::Delete, ["student", id]) => match st.students.remove(*id) {
            Some(_) => Reply::empty(204),
            None if st.flags.delete_missing_returns200 => Reply::empty(200),
            None => Reply::error(404, "student not found"),
        },
        (_, ["student"]) | (_, ["student", _]) => Reply::error(405, "method not allowed"),
        _ => Reply::error(404, "no such route"),
    }
}

fn admin_batch(raw: &str, mut apply: impl FnMut(&Map<String, Value>)) -> Reply {
    let items = match serde_json::from_str::<Value>(raw) {
        Ok(Value::Array(items)) => items,
        Ok(Value::Object(mut o)) => match o.remove("instances") {
            Some(Value::Array(items)) => items,
            _ => return Reply::error(400, "expected an array or {\"instances\": [...]}"),
        },
        _ => return Reply::error(400, "malformed JSON"),
    };
    let mut n = 0;
    for item in &items {
        if let Value::Object(s) = item {
            apply(s);
            n += 1;
        }
    }
    Reply::json(200, json!({ "count": n }))
}

const ADDRESS_KEYS: [&str; 4] = ["street", "city", "state", "zip"];

/// Checks a student document. `full` requires every field.
fn validate(body: &Map<String, Value>, full: bool) -> Result<(), String> {
    for (key, value) in body {
        let ok = match key.as_str() {
            "id" | "name" | "branch" => value.is_string(),
            "age" => value.is_i64() || value.is_u64(),
            "address" => value
                .as_object()
                .is_some_and(|a| a.len() == ADDRESS_KEYS.len() && ADDRESS_KEYS.iter().all(|k| a.get(*k).is_some_and(Value::is_string))),
            _ => return Err(format!("unknown field {key}")),
        };
        if !ok {
            return Err(format!("invalid {key}"));
        }
    }
    if full {
        if let Some(missing) = ["id", "name", "age", "branch", "address"].iter().find(|k| !body.contains_key(**k)) {
            return Err(format!("missing {missing}"));
        }
    }
    Ok(())
}

fn parse_student(raw: &str, full: bool) -> Result<Map<String, Value>, Reply> {
    let body = match serde_json::from_str::<Value>(raw) {
        Ok(Value::Object(o)) => o,
        _ => return Err(Reply::error(400, "malformed JSON")),
    };
    validate(&body, full).map_err(|e| Reply::error(400, &e))?;
    Ok(body)
}

fn create(st: &mut State, raw: &str) -> Reply {
    let body = match parse_student(raw, true) {
        Ok(b) => b,
        Err(r) => return r,
    };
    let id = body["id"].as_str().expect("validated").to_owned();
    if st.students.contains_key(&id) && !st.flags.post_duplicate_creates {
        return Reply::error(409, "student exists");
    }
    st.students.insert(id, body.clone());
    Reply::json(201, Value::Object(body))
}

fn replace(st: &mut State, id: &str, raw: &str, if_match_any: bool) -> Reply {
    let body = match parse_student(raw, true) {
        Ok(b) => b,
        Err(r) => return r,
    };
    if body["id"].as_str() != Some(id) {
        return Reply::error(400, "id does not match URL");
    }
    let exists = st.students.contains_key(id);
    if if_match_any && !exists {
        return Reply::error(412, "precondition failed");
    }
    st.students.insert(id.to_owned(), body.clone());
    let status = match (st.flags.put_wrong_status, exists) {
        (true, _) => 202,
        (false, true) => 200,
        (false, false) => 201,
    };
    Reply::json(status, Value::Object(body))
}

fn patch(st: &mut State, id: &str, raw: &str) -> Reply {
    let changes = match parse_student(raw, false) {
        Ok(b) => b,
        Err(r) => return r,
    };
    if changes.get("id").is_some_and(|v| v.as_str() != Some(id)) {
        return Reply::error(400, "id does not match URL");
    }
    let Some(current) = st.students.get_mut(id) else {
        return Reply::error(404, "student not found");
    };
    current.extend(changes);
    let mut shown = current.clone();
    if st.flags.patch_drops_field {
        shown.remove("name");
    }
    Reply::json(200, Value::Object(shown))
}
