#![allow(dead_code)]

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use pdimtune::gj::{ArithOp, GjNode, GjProgram, NodeId, NodeKind};
use pdimtune::polynomial::{Polynomial, RationalFunction};
use pdimtune::solvers::ProblemInstance;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_instance(rng: &mut ChaCha8Rng, m: usize, d: usize, m_val: usize) -> ProblemInstance {
    let mut draw = || -> f64 { StandardNormal.sample(&mut *rng) };
    let a = DMatrix::from_fn(m, d, |_, _| draw());
    let b = DVector::from_fn(m, |_, _| draw());
    let a_val = DMatrix::from_fn(m_val, d, |_, _| draw());
    let b_val = DVector::from_fn(m_val, |_, _| draw());
    ProblemInstance::new(a, b, a_val, b_val).unwrap()
}

const OPS: [ArithOp; 4] = [ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div];

fn random_const(rng: &mut ChaCha8Rng) -> f64 {
    // Bounded away from zero so a constant is never a structural zero.
    let v: f64 = rng.random_range(0.5..2.0);
    if rng.random_bool(0.5) { v } else { -v }
}

/// Random program over `inputs` variables with `core` nodes beyond the
/// inputs. Conditionals are drawn when `conds` is set.
///
/// With `generic` set, every arithmetic operand is first multiplied by a
/// fresh random constant, so no two subexpressions coincide and no leading
/// coefficients cancel by construction.
pub fn random_program(rng: &mut ChaCha8Rng, inputs: usize, core: usize, conds: bool, generic: bool) -> GjProgram {
    let mut nodes: Vec<GjNode> = (0..inputs)
        .map(|i| GjNode::new(i, NodeKind::Input { index: i }))
        .collect();
    let mut values: Vec<NodeId> = (0..inputs).collect();
    let push = |nodes: &mut Vec<GjNode>, kind: NodeKind| {
        let id = nodes.len();
        nodes.push(GjNode::new(id, kind));
        id
    };
    for _ in 0..core {
        let r: f64 = rng.random();
        let id = if r < 0.15 {
            let value = random_const(rng);
            push(&mut nodes, NodeKind::Const { value })
        } else if conds && r < 0.35 && values.len() >= 2 {
            let test = *values.choose(rng).unwrap();
            let then = *values.choose(rng).unwrap();
            let else_ = *values.choose(rng).unwrap();
            push(&mut nodes, NodeKind::Cond { test, then, else_ })
        } else {
            let op = *OPS.choose(rng).unwrap();
            let mut left = *values.choose(rng).unwrap();
            let mut right = *values.choose(rng).unwrap();
            if generic {
                for operand in [&mut left, &mut right] {
                    let value = random_const(rng);
                    let k = push(&mut nodes, NodeKind::Const { value });
                    *operand = push(&mut nodes, NodeKind::Arith { op: ArithOp::Mul, left: k, right: *operand });
                }
            }
            push(&mut nodes, NodeKind::Arith { op, left, right })
        };
        values.push(id);
    }
    let output = *values.last().unwrap();
    GjProgram::new(inputs, nodes, output).unwrap()
}

/// Symbolic value of every node when each conditional takes the branch given
/// by `branch` (keyed by conditional node id; `true` = then). Returns `None`
/// when some division has a structurally zero divisor.
pub fn expand(prog: &GjProgram, branch: &HashMap<NodeId, bool>) -> Option<HashMap<NodeId, RationalFunction>> {
    let n = prog.inputs();
    let mut vals: HashMap<NodeId, RationalFunction> = HashMap::new();
    for node in prog.nodes() {
        let v = match node.kind {
            NodeKind::Input { index } => RationalFunction::from_polynomial(Polynomial::var(n, index).unwrap()),
            NodeKind::Const { value } => RationalFunction::from_polynomial(Polynomial::constant(n, value)),
            NodeKind::Arith { op, left, right } => {
                let (a, b) = (&vals[&left], &vals[&right]);
                match op {
                    ArithOp::Add => a.try_add(b).unwrap(),
                    ArithOp::Sub => a.try_sub(b).unwrap(),
                    ArithOp::Mul => a.try_mul(b).unwrap(),
                    ArithOp::Div => a.try_div(b).ok()?,
                }
            }
            NodeKind::Cond { then, else_, .. } => {
                vals[if branch[&node.id] { &then } else { &else_ }].clone()
            }
        };
        vals.insert(node.id, v);
    }
    Some(vals)
}

/// Every assignment of branches to the program's conditionals.
pub fn branch_assignments(prog: &GjProgram) -> Vec<HashMap<NodeId, bool>> {
    let conds: Vec<NodeId> = prog
        .nodes()
        .iter()
        .filter(|n| matches!(n.kind, NodeKind::Cond { .. }))
        .map(|n| n.id)
        .collect();
    (0..1u32 << conds.len())
        .map(|mask| conds.iter().enumerate().map(|(i, &id)| (id, mask >> i & 1 == 1)).collect())
        .collect()
}

/// A uniformly random topological order of the program's node ids.
pub fn random_topological_order(prog: &GjProgram, rng: &mut ChaCha8Rng) -> Vec<NodeId> {
    let children = |k: &NodeKind| -> Vec<NodeId> {
        match *k {
            NodeKind::Input { .. } | NodeKind::Const { .. } => vec![],
            NodeKind::Arith { left, right, .. } => vec![left, right],
            NodeKind::Cond { test, then, else_ } => vec![test, then, else_],
        }
    };
    let mut placed = std::collections::BTreeSet::new();
    let mut order = Vec::new();
    while order.len() < prog.nodes().len() {
        let ready: Vec<NodeId> = prog
            .nodes()
            .iter()
            .filter(|n| !placed.contains(&n.id) && children(&n.kind).iter().all(|c| placed.contains(c)))
            .map(|n| n.id)
            .collect();
        let pick = *ready.choose(rng).unwrap();
        placed.insert(pick);
        order.push(pick);
    }
    order
}
