//! Setup and cleanup hooks as shell commands.
//!
//! Each command runs under `sh -c` with `{"resource": ..., "instances": [...]}`
//! on stdin. `NIRIKSHAK_RESOURCE` and `NIRIKSHAK_BASE_URL` are set in its
//! environment. A non-zero exit is a hook failure.

use std::io::Write;
use std::process::{Command, Stdio};

use nirikshak_core::pool::Hooks;
use nirikshak_core::ResourceInstance;
use serde_json::json;

#[derive(Debug, Clone, Default)]
pub struct CommandHooks {
    pub setup: Option<String>,
    pub cleanup: Option<String>,
    pub base_url: String,
}

impl CommandHooks {
    fn invoke(&self, command: Option<&str>, resource: &str, instances: &[ResourceInstance]) -> Result<(), String> {
        let Some(command) = command else {
            return Ok(());
        };
        let values: Vec<_> = instances.iter().map(|i| &i.values).collect();
        let payload = json!({ "resource": resource, "instances": values }).to_string();
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .env("NIRIKSHAK_RESOURCE", resource)
            .env("NIRIKSHAK_BASE_URL", &self.base_url)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| format!("cannot start `{command}`: {e}"))?;
        if let Some(mut stdin) = child.stdin.take() {
            // a hook may ignore its input and exit early; that is not an error
            let _ = stdin.write_all(payload.as_bytes());
        }
        let out = child.wait_with_output().map_err(|e| format!("`{command}`: {e}"))?;
        if out.status.success() {
            log::debug!("hook `{command}` ok");
            Ok(())
        } else {
            let stderr = String::from_utf8_lossy(&out.stderr);
            Err(format!("`{command}` exited with {}: {}", out.status, stderr.trim()))
        }
    }
}

impl Hooks for CommandHooks {
    fn setup(&mut self, resource: &str, instances: &[ResourceInstance]) -> Result<(), String> {
        self.invoke(self.setup.as_deref(), resource, instances)
    }

    fn cleanup(&mut self, resource: &str, instances: &[ResourceInstance]) -> Result<(), String> {
        self.invoke(self.cleanup.as_deref(), resource, instances)
    }
}
