//! The request-relationship graph.
//!
//! Each (method, outcome case) pair has a fixed precondition and postcondition
//! on the existence of the resource instance it is run with. An edge `a -> b`
//! exists when the state `a` leaves behind is one `b` accepts, so a walk is a
//! request sequence that should keep succeeding against a correct API.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::endpoint::{HttpMethod, NodeId, OutcomeCase, ScenarioNode};

/// Upper bound on walk length unless a caller raises it.
pub const DEFAULT_MAX_STEPS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ExistenceState {
    Exists,
    Missing,
    /// Precondition only.
    Any,
}

impl ExistenceState {
    /// Whether a resource left in state `self` may be used where `pre` is required.
    pub fn satisfies(self, pre: ExistenceState) -> bool {
        matches!(
            (self, pre),
            (_, ExistenceState::Any) | (ExistenceState::Exists, ExistenceState::Exists) | (ExistenceState::Missing, ExistenceState::Missing)
        )
    }
}

/// Precondition and postcondition of a request kind on the instance it targets.
pub fn node_transition(method: HttpMethod, case: OutcomeCase) -> (ExistenceState, ExistenceState) {
    use ExistenceState::{Any, Exists, Missing};
    use HttpMethod::*;
    match (method, case) {
        (_, OutcomeCase::Destructive) => (Exists, Exists),
        (Get | Patch, OutcomeCase::Positive) => (Exists, Exists),
        (Get | Patch, OutcomeCase::Negative) => (Missing, Missing),
        (Delete, OutcomeCase::Positive) => (Exists, Missing),
        (Delete, OutcomeCase::Negative) => (Missing, Missing),
        (Post, OutcomeCase::Positive) => (Missing, Exists),
        (Post, OutcomeCase::Negative) => (Exists, Exists),
        (Put, OutcomeCase::Positive) => (Any, Exists),
        (Put, OutcomeCase::Negative) => (Missing, Missing),
    }
}

/// Edge rule between two nodes of the same resource. Depends only on their equivalence keys.
pub fn edge_possible(a: &ScenarioNode, b: &ScenarioNode) -> bool {
    if a.resource != b.resource {
        return false;
    }
    let (_, post) = node_transition(a.method, a.outcome_case);
    let (pre, _) = node_transition(b.method, b.outcome_case);
    post.satisfies(pre)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioGraph {
    nodes: Vec<ScenarioNode>,
    /// Sorted out-neighbours per node.
    adjacency: Vec<Vec<NodeId>>,
}

/// Connects every ordered pair (self-loops included) allowed by [`edge_possible`].
///
/// Node ids are reassigned to list positions.
pub fn build_graph(nodes: Vec<ScenarioNode>) -> ScenarioGraph {
    let mut nodes = nodes;
    for (i, n) in nodes.iter_mut().enumerate() {
        n.id = i;
    }
    let adjacency = nodes
        .iter()
        .map(|a| nodes.iter().filter(|b| edge_possible(a, b)).map(|b| b.id).collect())
        .collect();
    ScenarioGraph { nodes, adjacency }
}

impl ScenarioGraph {
    /// A graph with explicit edges, for tests and tooling. Edges may be arbitrary.
    pub fn from_edges(nodes: Vec<ScenarioNode>, edges: &[(NodeId, NodeId)]) -> Self {
        let mut adjacency = alloc::vec![Vec::new(); nodes.len()];
        for &(from, to) in edges {
            if from < nodes.len() && to < nodes.len() {
                adjacency[from].push(to);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        ScenarioGraph { nodes, adjacency }
    }

    pub fn nodes(&self) -> &[ScenarioNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &ScenarioNode {
        &self.nodes[id]
    }

    pub fn successors(&self, id: NodeId) -> &[NodeId] {
        &self.adjacency[id]
    }

    pub fn has_edge(&self, from: NodeId, to: NodeId) -> bool {
        self.adjacency[from].binary_search(&to).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(from, tos)| tos.iter().map(move |&to| (from, to)))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn export(&self) -> GraphExport {
        GraphExport {
            nodes: self
                .nodes
                .iter()
                .map(|n| ExportedNode {
                    id: n.id,
                    label: n.label(),
                    resource: n.resource.clone(),
                    method: n.method,
                    outcome_case: n.outcome_case,
                    method_index: n.method_index,
                    url: n.url.clone(),
                })
                .collect(),
            edges: self.edges().map(|(a, b)| [a, b]).collect(),
        }
    }
}

/// Debug form of a graph: `{nodes:[...], edges:[[from,to],...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphExport {
    pub nodes: Vec<ExportedNode>,
    pub edges: Vec<[NodeId; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExportedNode {
    pub id: NodeId,
    pub label: String,
    pub resource: String,
    pub method: HttpMethod,
    pub outcome_case: OutcomeCase,
    pub method_index: usize,
    pub url: String,
}

/// An ordered list of node ids; consecutive ids are edges.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Walk(pub Vec<NodeId>);

impl Walk {
    pub fn nodes(&self) -> &[NodeId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Node labels along the walk.
    pub fn labels(&self, graph: &ScenarioGraph) -> Vec<String> {
        self.0.iter().map(|&id| graph.node(id).label()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("steps must be within [1, {max}], got {steps}")]
pub struct StepsOutOfRange {
    pub steps: usize,
    pub max: usize,
}

/// All walks with `steps` vertices, `steps` in `[1, DEFAULT_MAX_STEPS]`.
pub fn enumerate_walks(graph: &ScenarioGraph, steps: usize) -> Result<Vec<Walk>, StepsOutOfRange> {
    enumerate_walks_bounded(graph, steps, DEFAULT_MAX_STEPS)
}

/// All walks with `steps` vertices, in lexicographic order of their id sequences.
pub fn enumerate_walks_bounded(graph: &ScenarioGraph, steps: usize, max_steps: usize) -> Result<Vec<Walk>, StepsOutOfRange> {
    if steps == 0 || steps > max_steps {
        return Err(StepsOutOfRange { steps, max: max_steps });
    }
    let mut out = Vec::new();
    let mut path = Vec::with_capacity(steps);
    for start in 0..graph.nodes.len() {
        path.push(start);
        extend(graph, steps, &mut path, &mut out);
        path.pop();
    }
    Ok(out)
}

fn extend(graph: &ScenarioGraph, steps: usize, path: &mut Vec<NodeId>, out: &mut Vec<Walk>) {
    if path.len() == steps {
        out.push(Walk(path.clone()));
        return;
    }
    let last = *path.last().expect("walks start non-empty");
    for &next in graph.successors(last) {
        path.push(next);
        extend(graph, steps, path, out);
        path.pop();
    }
}

/// Number of walks with `steps` vertices starting at each node, by dynamic programming.
pub fn count_walks_from(graph: &ScenarioGraph, steps: usize) -> Vec<u64> {
    let n = graph.nodes.len();
    if steps == 0 {
        return alloc::vec![0; n];
    }
    let mut counts = alloc::vec![1u64; n];
    for _ in 1..steps {
        counts = (0..n)
            .map(|v| graph.successors(v).iter().map(|&w| counts[w]).sum())
            .collect();
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::endpoint::{ExpectedOutput, RequestInput};
    use alloc::collections::BTreeSet;
    use alloc::vec;
    use ExistenceState::*;

    pub(crate) fn node(method: HttpMethod, case: OutcomeCase, index: usize) -> ScenarioNode {
        ScenarioNode {
            id: 0,
            resource: "student".into(),
            method,
            outcome_case: case,
            method_index: index,
            url: "/student/{resource:id}".into(),
            input: RequestInput::default(),
            expected: ExpectedOutput {
                status: BTreeSet::from([200]),
                headers: Default::default(),
                body: None,
            },
        }
    }

    #[test]
    fn transition_table() {
        use HttpMethod::*;
        use OutcomeCase::*;
        assert_eq!(node_transition(Delete, Positive), (Exists, Missing));
        assert_eq!(node_transition(Post, Positive), (Missing, Exists));
        assert_eq!(node_transition(Put, Positive), (Any, Exists));
        assert_eq!(node_transition(Get, Destructive), (Exists, Exists));
        assert_eq!(node_transition(Post, Negative), (Exists, Exists));
        assert_eq!(node_transition(Put, Negative), (Missing, Missing));
        for m in HttpMethod::ALL {
            for c in OutcomeCase::ALL {
                assert_ne!(node_transition(m, c).1, Any, "{m} {c} has an ANY postcondition");
            }
        }
    }

    #[test]
    fn edge_rule_examples() {
        use HttpMethod::*;
        use OutcomeCase::*;
        assert!(edge_possible(&node(Post, Positive, 0), &node(Get, Positive, 0)));
        assert!(!edge_possible(&node(Delete, Positive, 0), &node(Get, Positive, 0)));
        assert!(edge_possible(&node(Get, Negative, 0), &node(Get, Negative, 0)));
        assert!(edge_possible(&node(Delete, Positive, 0), &node(Put, Positive, 0)));
        let mut other = node(Get, Positive, 0);
        other.resource = "teacher".into();
        assert!(!edge_possible(&node(Get, Positive, 0), &other));
    }

    #[test]
    fn empty_graph() {
        let g = build_graph(Vec::new());
        assert!(g.is_empty());
        assert_eq!(g.edge_count(), 0);
        assert!(enumerate_walks(&g, 2).unwrap().is_empty());
    }

    #[test]
    fn equivalent_nodes_share_neighbourhoods() {
        use HttpMethod::*;
        use OutcomeCase::*;
        let g = build_graph(vec![node(Get, Positive, 0), node(Get, Positive, 1), node(Delete, Positive, 0)]);
        assert_eq!(g.successors(0), g.successors(1));
        let preds = |t: NodeId| (0..3).filter(|&s| g.has_edge(s, t)).collect::<Vec<_>>();
        assert_eq!(preds(0), preds(1));
        assert_eq!(g.successors(0), &[0, 1, 2]);
        assert!(g.successors(2).is_empty());
    }

    #[test]
    fn walk_bounds() {
        let g = build_graph(vec![node(HttpMethod::Get, OutcomeCase::Positive, 0)]);
        assert_eq!(enumerate_walks(&g, 0), Err(StepsOutOfRange { steps: 0, max: 3 }));
        assert!(enumerate_walks(&g, 4).is_err());
        assert_eq!(enumerate_walks_bounded(&g, 4, 4).unwrap().len(), 1);
    }

    #[test]
    fn small_walk_counts() {
        use HttpMethod::*;
        use OutcomeCase::*;
        // one node per kind: steps=1 gives one walk each
        let g = build_graph(vec![node(Get, Positive, 0), node(Delete, Positive, 0)]);
        assert_eq!(enumerate_walks(&g, 1).unwrap().len(), 2);
        let single = build_graph(vec![node(Get, Negative, 0)]);
        assert_eq!(enumerate_walks(&single, 3).unwrap(), vec![Walk(vec![0, 0, 0])]);
        let complete = ScenarioGraph::from_edges(
            vec![node(Get, Positive, 0), node(Get, Positive, 1)],
            &[(0, 0), (0, 1), (1, 0), (1, 1)],
        );
        let walks = enumerate_walks(&complete, 2).unwrap();
        assert_eq!(
            walks,
            vec![Walk(vec![0, 0]), Walk(vec![0, 1]), Walk(vec![1, 0]), Walk(vec![1, 1])]
        );
        assert_eq!(count_walks_from(&complete, 3), vec![4, 4]);
    }
}
