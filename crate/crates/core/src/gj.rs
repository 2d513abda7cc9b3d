//! Static analysis of Goldberg–Jerrum programs.
//!
//! A program is a DAG of input, constant, arithmetic and conditional nodes.
//! Each node computes a rational function of the inputs; the analyzer tracks
//! the formal numerator and denominator degrees of that function without
//! cancellation, and counts the distinct nodes used as conditional tests.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::bounds::{BoundReport, FormulaId};
use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArithOp {
    #[serde(rename = "+")]
    Add,
    #[serde(rename = "-")]
    Sub,
    #[serde(rename = "*")]
    Mul,
    #[serde(rename = "/")]
    Div,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeKind {
    Input { index: usize },
    Const { value: f64 },
    Arith { op: ArithOp, left: NodeId, right: NodeId },
    /// `if test >= 0 { then } else { else_ }`.
    Cond {
        test: NodeId,
        then: NodeId,
        #[serde(rename = "else")]
        else_: NodeId,
    },
}

impl NodeKind {
    fn children(&self) -> Vec<NodeId> {
        match *self {
            NodeKind::Input { .. } | NodeKind::Const { .. } => vec![],
            NodeKind::Arith { left, right, .. } => vec![left, right],
            NodeKind::Cond { test, then, else_ } => vec![test, then, else_],
        }
    }
}

/// Formal degrees of a node's numerator and denominator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormalDegree {
    pub num: u32,
    pub den: u32,
}

impl FormalDegree {
    pub fn degree(self) -> u32 {
        self.num.max(self.den)
    }

    fn combine(op: ArithOp, a: Self, b: Self) -> Self {
        match op {
            // a/b ± c/d = (ad ± cb)/bd
            ArithOp::Add | ArithOp::Sub => Self {
                num: (a.num + b.den).max(b.num + a.den),
                den: a.den + b.den,
            },
            ArithOp::Mul => Self {
                num: a.num + b.num,
                den: a.den + b.den,
            },
            ArithOp::Div => Self {
                num: a.num + b.den,
                den: a.den + b.num,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GjNode {
    pub id: NodeId,
    #[serde(flatten)]
    pub kind: NodeKind,
    #[serde(default, skip_deserializing)]
    pub tracked: FormalDegree,
}

impl GjNode {
    pub fn new(id: NodeId, kind: NodeKind) -> Self {
        Self {
            id,
            kind,
            tracked: FormalDegree::default(),
        }
    }

    pub fn tracked_degree(&self) -> u32 {
        self.tracked.degree()
    }
}

/// A validated program: nodes stored in a topological order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProgramRepr", into = "ProgramRepr")]
pub struct GjProgram {
    inputs: usize,
    nodes: Vec<GjNode>,
    output: NodeId,
    #[serde(skip)]
    position: HashMap<NodeId, usize>,
}

#[derive(Serialize, Deserialize)]
struct ProgramRepr {
    inputs: usize,
    nodes: Vec<GjNode>,
    output: NodeId,
}

impl From<GjProgram> for ProgramRepr {
    fn from(p: GjProgram) -> Self {
        Self {
            inputs: p.inputs,
            nodes: p.nodes,
            output: p.output,
        }
    }
}

impl TryFrom<ProgramRepr> for GjProgram {
    type Error = Error;

    fn try_from(r: ProgramRepr) -> Result<Self> {
        GjProgram::new(r.inputs, r.nodes, r.output)
    }
}

impl GjProgram {
    /// Validates ids and references, orders nodes topologically (stable with
    /// respect to the given order) and computes every node's formal degree.
    pub fn new(inputs: usize, nodes: Vec<GjNode>, output: NodeId) -> Result<Self> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.id, i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate node id {}", n.id)));
            }
            if let NodeKind::Input { index } = n.kind {
                if index >= inputs {
                    return Err(Error::InvalidInput(format!(
                        "input index {index} out of range for {inputs} inputs"
                    )));
                }
            }
            if let NodeKind::Const { value } = n.kind {
                if !value.is_finite() {
                    return Err(Error::InvalidInput(format!("non-finite constant {value}")));
                }
            }
        }
        if !index.contains_key(&output) {
            return Err(Error::InvalidInput(format!("output node {output} does not exist")));
        }

        let mut indegree = vec![0usize; nodes.len()];
        let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
        for (i, n) in nodes.iter().enumerate() {
            for c in n.kind.children() {
                let &j = index
                    .get(&c)
                    .ok_or_else(|| Error::InvalidInput(format!("node {} references unknown node {c}", n.id)))?;
                indegree[i] += 1;
                dependents[j].push(i);
            }
        }
        // Kahn's algorithm; the queue is ordered by original position so an
        // already-sorted list keeps its order.
        let mut ready: VecDeque<usize> = (0..nodes.len()).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(nodes.len());
        while let Some(i) = ready.pop_front() {
            order.push(i);
            for &k in &dependents[i] {
                indegree[k] -= 1;
                if indegree[k] == 0 {
                    ready.push_back(k);
                }
            }
            ready.make_contiguous().sort_unstable();
        }
        if order.len() != nodes.len() {
            let stuck = (0..nodes.len()).find(|&i| indegree[i] > 0).expect("cycle member");
            return Err(Error::Cycle(nodes[stuck].id));
        }

        let mut slots: Vec<Option<GjNode>> = nodes.into_iter().map(Some).collect();
        let mut sorted = Vec::with_capacity(order.len());
        let mut position = HashMap::with_capacity(order.len());
        for i in order {
            let mut node = slots[i].take().expect("each node placed once");
            node.tracked = match node.kind {
                NodeKind::Input { .. } => FormalDegree { num: 1, den: 0 },
                NodeKind::Const { .. } => FormalDegree { num: 0, den: 0 },
                NodeKind::Arith { op, left, right } => {
                    let a: &GjNode = &sorted[position[&left]];
                    let b: &GjNode = &sorted[position[&right]];
                    FormalDegree::combine(op, a.tracked, b.tracked)
                }
                NodeKind::Cond { then, else_, .. } => {
                    let a: &GjNode = &sorted[position[&then]];
                    let b: &GjNode = &sorted[position[&else_]];
                    FormalDegree {
                        num: a.tracked.num.max(b.tracked.num),
                        den: a.tracked.den.max(b.tracked.den),
                    }
                }
            };
            position.insert(node.id, sorted.len());
            sorted.push(node);
        }

        Ok(Self {
            inputs,
            nodes: sorted,
            output,
            position,
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    /// Nodes in topological order.
    pub fn nodes(&self) -> &[GjNode] {
        &self.nodes
    }

    pub fn output(&self) -> NodeId {
        self.output
    }

    pub fn node(&self, id: NodeId) -> Option<&GjNode> {
        self.position.get(&id).map(|&i| &self.nodes[i])
    }

    /// Maximum formal degree over all nodes.
    pub fn degree(&self) -> u32 {
        self.nodes.iter().map(GjNode::tracked_degree).max().unwrap_or(0)
    }

    /// Number of distinct nodes used as conditional tests.
    pub fn predicate_complexity(&self) -> usize {
        self.nodes
            .iter()
            .filter_map(|n| match n.kind {
                NodeKind::Cond { test, .. } => Some(test),
                _ => None,
            })
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Rebuilds the program with nodes listed in `order` (a permutation of
    /// node ids). Fails if the order is not topological.
    pub fn reordered(&self, order: &[NodeId]) -> Result<Self> {
        if order.len() != self.nodes.len() {
            return Err(Error::InvalidInput("order must list every node once".into()));
        }
        let mut seen = BTreeSet::new();
        let mut nodes = Vec::with_capacity(order.len());
        for &id in order {
            let node = self
                .node(id)
                .ok_or_else(|| Error::InvalidInput(format!("unknown node {id}")))?;
            if node.kind.children().iter().any(|c| !seen.contains(c)) {
                return Err(Error::InvalidInput(format!("node {id} precedes one of its operands")));
            }
            seen.insert(id);
            nodes.push(GjNode::new(id, node.kind.clone()));
        }
        Self::new(self.inputs, nodes, self.output)
    }
}

/// `c·p·log₂(max(ΔΛ, 2))` for a program of degree Δ and predicate
/// complexity Λ in `p` real parameters.
pub fn gj_pdim_bound(prog: &GjProgram, p: usize, c: f64) -> Result<BoundReport> {
    if p == 0 {
        return Err(Error::InvalidInput("p must be positive".into()));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::InvalidInput(format!("constant c must be positive, got {c}")));
    }
    let delta = prog.degree() as f64;
    let lambda = prog.predicate_complexity() as f64;
    Ok(bound_from_counts(delta, lambda, p as f64, c))
}

fn bound_from_counts(delta: f64, lambda: f64, p: f64, c: f64) -> BoundReport {
    let arg = (delta * lambda).max(2.0);
    let mut report = BoundReport {
        bound_value: c * p * arg.log2(),
        formula_id: FormulaId::GjProgram,
        inputs: Default::default(),
        log2_intermediates: Default::default(),
        constant_c: c,
    };
    report.inputs.insert("delta".into(), delta);
    report.inputs.insert("lambda".into(), lambda);
    report.inputs.insert("p".into(), p);
    report.log2_intermediates.insert("log2_delta_lambda".into(), arg.log2());
    report
}
