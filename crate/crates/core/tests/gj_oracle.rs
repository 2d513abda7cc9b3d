mod common;

use std::collections::HashMap;

use common::{branch_assignments, expand, random_program, random_topological_order, rng};
use pdimtune::gj::{ArithOp, GjNode, GjProgram, NodeKind};
use proptest::prelude::*;

fn node(id: usize, kind: NodeKind) -> GjNode {
    GjNode::new(id, kind)
}

#[test]
fn small_programs_have_expected_degrees() {
    let inputs = || vec![node(0, NodeKind::Input { index: 0 }), node(1, NodeKind::Input { index: 1 })];
    let arith = |id, op, left, right| node(id, NodeKind::Arith { op, left, right });

    let mut nodes = inputs();
    nodes.push(arith(2, ArithOp::Add, 0, 1));
    assert_eq!(GjProgram::new(2, nodes, 2).unwrap().degree(), 1);

    let mut nodes = inputs();
    nodes.push(arith(2, ArithOp::Mul, 0, 1));
    nodes.push(arith(3, ArithOp::Mul, 0, 0));
    nodes.push(node(4, NodeKind::Const { value: 1.0 }));
    nodes.push(arith(5, ArithOp::Add, 3, 4));
    nodes.push(arith(6, ArithOp::Div, 2, 5));
    assert_eq!(GjProgram::new(2, nodes, 6).unwrap().degree(), 2);

    let mut nodes = inputs();
    nodes.push(arith(2, ArithOp::Div, 0, 0));
    assert_eq!(GjProgram::new(2, nodes, 2).unwrap().degree(), 1);
}

/// Tracked degrees never undercount the expanded numerator and denominator,
/// whichever branch each conditional takes.
#[test]
fn tracked_degree_bounds_expansion() {
    let mut rng = rng(11);
    let mut checked = 0;
    while checked < 200 {
        let core = 1 + checked % 8;
        let prog = random_program(&mut rng, 2, core, true, false);
        assert!(prog.nodes().len() <= 10);
        let expansions: Option<Vec<_>> = branch_assignments(&prog).iter().map(|b| expand(&prog, b)).collect();
        let Some(expansions) = expansions else { continue };
        for vals in &expansions {
            for n in prog.nodes() {
                let f = &vals[&n.id];
                assert!(f.numerator().degree() <= n.tracked.num, "node {} in {prog:?}", n.id);
                assert!(f.denominator().degree() <= n.tracked.den, "node {} in {prog:?}", n.id);
            }
        }
        let true_degree = expansions
            .iter()
            .flat_map(|v| v.values().map(|f| f.degree()))
            .max()
            .unwrap();
        assert!(prog.degree() >= true_degree);
        checked += 1;
    }
}

/// With fresh random coefficients on every operand, the formal count is
/// attained exactly.
#[test]
fn tracked_degree_is_exact_for_generic_coefficients() {
    let mut rng = rng(12);
    for i in 0..200 {
        let prog = random_program(&mut rng, 2, 1 + i % 10, false, true);
        let vals = expand(&prog, &HashMap::new()).expect("generic programs have no structural zeros");
        for n in prog.nodes() {
            let f = &vals[&n.id];
            assert_eq!(f.numerator().degree(), n.tracked.num, "node {} in {prog:?}", n.id);
            assert_eq!(f.denominator().degree(), n.tracked.den, "node {} in {prog:?}", n.id);
        }
        let true_degree = vals.values().map(|f| f.degree()).max().unwrap();
        assert_eq!(prog.degree(), true_degree);
    }
}

proptest! {
    #[test]
    fn analysis_is_invariant_under_reordering(seed in any::<u64>(), core in 1usize..9) {
        let mut rng = rng(seed);
        let prog = random_program(&mut rng, 2, core, true, false);
        let order = random_topological_order(&prog, &mut rng);
        let again = prog.reordered(&order).unwrap();
        prop_assert_eq!(again.predicate_complexity(), prog.predicate_complexity());
        prop_assert_eq!(again.degree(), prog.degree());
        for n in prog.nodes() {
            prop_assert_eq!(again.node(n.id).unwrap().tracked, n.tracked);
        }
    }
}
