//! Walk execution.
//!
//! The runner is transport-agnostic: it builds [`HttpRequest`]s, hands them to
//! a [`Transport`], asserts on the responses and keeps the resource pool in
//! step with what a correct API would now contain. Requests are strictly
//! sequential since the API's state is shared by every walk.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use percent_encoding::{utf8_percent_encode, AsciiSet, CONTROLS};
use rand::Rng;
use serde_json::Value;

use crate::assertion::{assert_response, Failure, HttpResponse};
use crate::endpoint::{enumerate_nodes, EndpointDescription, HttpMethod, OutcomeCase, ScenarioNode};
use crate::graph::{build_graph, enumerate_walks_bounded, node_transition, ExistenceState, ScenarioGraph, StepsOutOfRange, Walk, DEFAULT_MAX_STEPS};
use crate::pool::{cleanup_pool, setup_pool, Hooks, PoolError, ResourcePool};
use crate::record::{Outcome, TestRecord};
use crate::schema::{populate_text, populate_text_with, ResourceInstance, ResourceSchema, TemplateError};
use crate::seeded_rng;

/// Characters escaped when a value is substituted into a path segment.
const SEGMENT: &AsciiSet = &CONTROLS.add(b' ').add(b'"').add(b'#').add(b'<').add(b'>').add(b'`').add(b'?').add(b'{').add(b'}').add(b'/').add(b'%');
/// Characters escaped in query keys and values.
const COMPONENT: &AsciiSet = &SEGMENT.add(b'&').add(b'=').add(b'+').add(b'\'');

#[derive(Debug, Clone, PartialEq)]
pub enum RequestBody {
    Json(Value),
    Raw(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpRequest {
    pub method: HttpMethod,
    /// Path plus query string, relative to the base URL.
    pub path: String,
    pub headers: Vec<(String, String)>,
    pub body: Option<RequestBody>,
}

/// Why a request produced no response. `kind` is a short stable label such as `connection refused`.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("transport: {kind}")]
pub struct TransportError {
    pub kind: String,
}

impl TransportError {
    pub fn new(kind: impl Into<String>) -> Self {
        TransportError { kind: kind.into() }
    }
}

pub trait Transport {
    fn send(&mut self, request: &HttpRequest) -> Result<HttpResponse, TransportError>;
}

impl<T: Transport + ?Sized> Transport for &mut T {
    fn send(&mut self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        (**self).send(request)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Vertices per walk.
    pub steps: usize,
    /// Ceiling for `steps`; raise it explicitly to go past the default.
    pub max_steps: usize,
    pub iterations: usize,
    pub setup_instances: usize,
    pub seed: u64,
    /// Abort on the first transport failure instead of recording it.
    pub fail_fast: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            steps: 3,
            max_steps: DEFAULT_MAX_STEPS,
            iterations: 5,
            setup_instances: 10,
            seed: 0,
            fail_fast: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), RunError> {
        if self.steps == 0 || self.steps > self.max_steps {
            return Err(RunError::Steps(StepsOutOfRange {
                steps: self.steps,
                max: self.max_steps,
            }));
        }
        if self.iterations == 0 {
            return Err(RunError::Config("iterations must be at least 1".into()));
        }
        if self.setup_instances == 0 {
            return Err(RunError::Config("setupInstances must be at least 1".into()));
        }
        Ok(())
    }
}

/// A resource's schema together with its endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceSuite {
    pub schema: ResourceSchema,
    pub endpoints: Vec<EndpointDescription>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("configuration: {0}")]
    Steps(#[from] StepsOutOfRange),
    #[error("iteration {iteration}: {source}")]
    Pool { iteration: usize, source: PoolError },
    #[error("iteration {iteration}: {source} (fail-fast)")]
    Transport { iteration: usize, source: TransportError },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutput {
    pub records: Vec<TestRecord>,
    /// Non-fatal problems, e.g. a failed cleanup hook.
    pub warnings: Vec<String>,
    /// Iterations cut short because pool setup failed.
    pub aborted_iterations: Vec<usize>,
}

/// Where a test sits within the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub iteration: usize,
    pub walk_id: usize,
    pub step_index: usize,
}

/// Populates a node's templates with an instance.
pub fn build_request(node: &ScenarioNode, instance: &ResourceInstance) -> Result<HttpRequest, TemplateError> {
    let mut path = populate_text_with(&node.url, instance, |v| utf8_percent_encode(v, SEGMENT).to_string())?;
    let mut sep = if path.contains('?') { '&' } else { '?' };
    for (key, template) in &node.input.query {
        let value = populate_text(template, instance)?;
        path.push(sep);
        path.push_str(&utf8_percent_encode(key, COMPONENT).to_string());
        path.push('=');
        path.push_str(&utf8_percent_encode(&value, COMPONENT).to_string());
        sep = '&';
    }
    let headers = node
        .input
        .headers
        .iter()
        .map(|(k, t)| Ok((k.clone(), populate_text(t, instance)?)))
        .collect::<Result<Vec<_>, TemplateError>>()?;
    let body = match (&node.input.raw_body, &node.input.body) {
        (Some(raw), _) => Some(RequestBody::Raw(populate_text(raw, instance)?)),
        (None, Some(t)) => Some(RequestBody::Json(t.populate(instance)?)),
        (None, None) => None,
    };
    Ok(HttpRequest {
        method: node.method,
        path,
        headers,
        body,
    })
}

/// Sends one request and reports the requested URL with the assertion result.
fn perform<T: Transport + ?Sized>(node: &ScenarioNode, instance: &ResourceInstance, transport: &mut T) -> (String, Result<(), Failure>) {
    let request = match build_request(node, instance) {
        Ok(r) => r,
        Err(e) => return (node.url.clone(), Err(Failure::Config(e.to_string()))),
    };
    let verdict = match transport.send(&request) {
        Ok(response) => assert_response(&response, &node.expected, instance),
        Err(e) => Err(Failure::Transport(e.kind)),
    };
    (request.path, verdict)
}

/// Executes one scenario node against `instance` and returns its log record.
pub fn execute_node<T: Transport + ?Sized>(
    node: &ScenarioNode,
    instance: &ResourceInstance,
    transport: &mut T,
    position: Position,
) -> TestRecord {
    let (url, verdict) = perform(node, instance, transport);
    TestRecord {
        outcome: if verdict.is_ok() { Outcome::Pass } else { Outcome::Fail },
        resource: node.resource.clone(),
        method: node.method,
        method_index: node.method_index,
        outcome_case: node.outcome_case,
        url,
        url_template: node.url.clone(),
        iteration: position.iteration,
        error_message: verdict.err().map(|f| f.to_string()).unwrap_or_default(),
        walk_id: position.walk_id,
        step_index: position.step_index,
    }
}

/// Graph and walks for one resource; identical across iterations.
#[derive(Debug, Clone)]
pub struct SuitePlan {
    pub graph: ScenarioGraph,
    pub walks: Vec<Walk>,
}

impl SuitePlan {
    pub fn new(suite: &ResourceSuite, steps: usize, max_steps: usize) -> Result<Self, StepsOutOfRange> {
        let graph = build_graph(enumerate_nodes(&suite.endpoints));
        let walks = enumerate_walks_bounded(&graph, steps, max_steps)?;
        Ok(SuitePlan { graph, walks })
    }

    /// Records one iteration of this plan produces.
    pub fn records_per_iteration(&self) -> usize {
        self.walks.iter().map(Walk::len).sum()
    }

    fn creator(&self) -> Option<&ScenarioNode> {
        self.graph
            .nodes()
            .iter()
            .filter(|n| n.method == HttpMethod::Post && n.outcome_case == OutcomeCase::Positive)
            .min_by_key(|n| n.method_index)
    }
}

struct IterationState<'a, T: ?Sized, R> {
    transport: &'a mut T,
    rng: &'a mut R,
    fail_fast: bool,
    iteration: usize,
    warnings: &'a mut Vec<String>,
}

impl<T: Transport + ?Sized, R: Rng> IterationState<'_, T, R> {
    fn acquire(&mut self, plan: &SuitePlan, pool: &mut ResourcePool, pre: ExistenceState) -> Result<ResourceInstance, PoolError> {
        match pool.select(pre, self.rng) {
            Ok(sel) => Ok(sel.instance),
            Err(PoolError::Exhausted { .. }) if plan.creator().is_some() => {
                self.replenish(plan, pool)?;
                pool.select(pre, self.rng).map(|sel| sel.instance)
            }
            Err(e) => Err(e),
        }
    }

    /// Creates an instance through the API's own POST endpoint. Not logged as a test.
    fn replenish(&mut self, plan: &SuitePlan, pool: &mut ResourcePool) -> Result<(), PoolError> {
        let creator = plan.creator().expect("checked by caller");
        let fresh = pool.fresh_instance(self.rng)?;
        let (_, verdict) = perform(creator, &fresh, self.transport);
        if let Err(f) = verdict {
            self.warnings.push(format!(
                "iteration {}: replenishing `{}` via POST failed: {f}",
                self.iteration,
                pool.resource()
            ));
        }
        pool.apply_transition(&fresh, ExistenceState::Exists);
        Ok(())
    }

    fn run_walks(&mut self, plan: &SuitePlan, pool: &mut ResourcePool, records: &mut Vec<TestRecord>) -> Result<(), RunError> {
        for (walk_id, walk) in plan.walks.iter().enumerate() {
            let first = plan.graph.node(walk.nodes()[0]);
            let (pre, _) = node_transition(first.method, first.outcome_case);
            let instance = self.acquire(plan, pool, pre).map_err(|source| RunError::Pool {
                iteration: self.iteration,
                source,
            })?;
            for (step_index, &id) in walk.nodes().iter().enumerate() {
                let node = plan.graph.node(id);
                let position = Position {
                    iteration: self.iteration,
                    walk_id,
                    step_index,
                };
                let record = execute_node(node, &instance, self.transport, position);
                if self.fail_fast {
                    if let Some(Failure::Transport(kind)) = Failure::parse(&record.error_message) {
                        return Err(RunError::Transport {
                            iteration: self.iteration,
                            source: TransportError { kind },
                        });
                    }
                }
                records.push(record);
                // optimistic: the pool follows what a correct API would hold
                let (_, post) = node_transition(node.method, node.outcome_case);
                pool.apply_transition(&instance, post);
            }
        }
        Ok(())
    }
}

/// Runs every walk of every suite, `iterations` times, with a fresh pool per iteration.
pub fn run<T: Transport + ?Sized, H: Hooks + ?Sized>(
    config: &RunConfig,
    suites: &[ResourceSuite],
    transport: &mut T,
    hooks: &mut H,
) -> Result<RunOutput, RunError> {
    config.validate()?;
    let plans = suites
        .iter()
        .map(|s| SuitePlan::new(s, config.steps, config.max_steps))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rng = seeded_rng(config.seed);
    let mut out = RunOutput::default();

    for iteration in 1..=config.iterations {
        for (suite, plan) in suites.iter().zip(&plans) {
            let mut pool = match setup_pool(&suite.schema, config.setup_instances, &mut rng, hooks) {
                Ok(pool) => pool,
                Err(e) => {
                    // the rest of this iteration is skipped
                    out.warnings.push(format!("iteration {iteration}: {e}"));
                    out.aborted_iterations.push(iteration);
                    break;
                }
            };
            let mut state = IterationState {
                transport: &mut *transport,
                rng: &mut rng,
                fail_fast: config.fail_fast,
                iteration,
                warnings: &mut out.warnings,
            };
            let result = state.run_walks(plan, &mut pool, &mut out.records);
            if let Some(w) = cleanup_pool(&mut pool, hooks) {
                out.warnings.push(format!("iteration {iteration}: {w}"));
            }
            result?;
        }
    }
    Ok(out)
}

/// Convenience wrapper for a single resource.
pub fn run_single<T: Transport + ?Sized, H: Hooks + ?Sized>(
    config: &RunConfig,
    schema: &ResourceSchema,
    endpoints: &[EndpointDescription],
    transport: &mut T,
    hooks: &mut H,
) -> Result<RunOutput, RunError> {
    let suite = ResourceSuite {
        schema: schema.clone(),
        endpoints: endpoints.to_owned(),
    };
    run(config, core::slice::from_ref(&suite), transport, hooks)
}
