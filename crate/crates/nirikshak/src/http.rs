//! Blocking HTTP transport backed by ureq.

use std::io;
use std::time::Duration;

use nirikshak_core::assertion::HttpResponse;
use nirikshak_core::runner::{HttpRequest, RequestBody, Transport, TransportError};
use ureq::http;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

/// Sends requests to `base_url` + request path. Redirects are not followed and
/// every status code is returned as a response.
pub struct UreqTransport {
    agent: ureq::Agent,
    base_url: String,
}

impl UreqTransport {
    pub fn new(base_url: &str, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .max_redirects(0)
            .timeout_global(Some(timeout))
            .build()
            .into();
        UreqTransport {
            agent,
            base_url: base_url.trim_end_matches('/').to_owned(),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }
}

fn method_of(request: &HttpRequest) -> http::Method {
    http::Method::from_bytes(request.method.as_str().as_bytes()).expect("standard method")
}

/// Maps ureq's error onto a short, stable label for the failure message.
fn kind_of(error: &ureq::Error) -> String {
    match error {
        ureq::Error::Timeout(_) => "timeout".into(),
        ureq::Error::HostNotFound => "host not found".into(),
        ureq::Error::ConnectionFailed => "connection failed".into(),
        ureq::Error::BadUri(_) | ureq::Error::Http(_) => "invalid request".into(),
        ureq::Error::Io(e) => match e.kind() {
            io::ErrorKind::ConnectionRefused => "connection refused".into(),
            io::ErrorKind::ConnectionReset | io::ErrorKind::ConnectionAborted => "connection reset".into(),
            io::ErrorKind::TimedOut | io::ErrorKind::WouldBlock => "timeout".into(),
            io::ErrorKind::UnexpectedEof => "connection closed".into(),
            _ => "io error".into(),
        },
        ureq::Error::Protocol(_) => "protocol error".into(),
        ureq::Error::BodyExceedsLimit(_) => "body too large".into(),
        _ => "request failed".into(),
    }
}

impl Transport for UreqTransport {
    fn send(&mut self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        let mut builder = http::Request::builder()
            .method(method_of(request))
            .uri(format!("{}{}", self.base_url, request.path));
        let user_content_type = request.headers.iter().any(|(k, _)| k.eq_ignore_ascii_case("content-type"));
        for (k, v) in &request.headers {
            builder = builder.header(k.as_str(), v.as_str());
        }
        let body = match &request.body {
            None => None,
            Some(RequestBody::Json(v)) => {
                if !user_content_type {
                    builder = builder.header("content-type", "application/json");
                }
                Some(serde_json::to_vec(v).expect("json values serialize"))
            }
            Some(RequestBody::Raw(s)) => Some(s.clone().into_bytes()),
        };
        log::debug!("{} {}{}", request.method, self.base_url, request.path);
        let sent = match body {
            None => builder.body(()).map(|r| self.agent.run(r)),
            Some(bytes) => builder.body(bytes).map(|r| self.agent.run(r)),
        };
        let mut response = sent.map_err(|_| TransportError::new("invalid request"))?.map_err(|e| {
            log::debug!("transport error: {e}");
            TransportError::new(kind_of(&e))
        })?;
        let status = response.status().as_u16();
        let headers = response
            .headers()
            .iter()
            .map(|(k, v)| (k.as_str().to_owned(), String::from_utf8_lossy(v.as_bytes()).into_owned()))
            .collect();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportError::new(kind_of(&e)))?;
        Ok(HttpResponse { status, headers, body })
    }
}
