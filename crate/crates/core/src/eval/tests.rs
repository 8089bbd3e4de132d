use super::*;
use crate::fixtures::{running_example, two_state};
use crate::logic::check_formula;
use crate::model::{ElemSet, ElementId};

fn run(m: &CounterpartModel, ctx: &str, src: &str) -> Attribute {
    let fc = check_formula(ctx, src, m.signature()).unwrap();
    eval(&fc, m).unwrap()
}

/// Element names bound to the single first-order variable, per world.
fn single(m: &CounterpartModel, a: &Attribute) -> Vec<Vec<String>> {
    let slot = &a.layout()[0];
    m.world_ids()
        .map(|w| {
            let mut names: Vec<String> = a
                .assignments(w)
                .iter()
                .map(|asg| {
                    let e = asg.fo[&slot.name];
                    m.world(w).element_name(slot.sort, e).to_string()
                })
                .collect();
            names.sort();
            names
        })
        .collect()
}

fn closed(m: &CounterpartModel, a: &Attribute) -> Vec<bool> {
    m.world_ids().map(|w| !a.is_empty_at(w)).collect()
}

fn sets(rows: &[&[&str]]) -> Vec<Vec<String>> {
    rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect()
}

#[test]
fn node_merging() {
    let m = running_example();
    let a = run(&m, "y:node", "exists x:node. (x != y & X[x = y])");
    assert_eq!(single(&m, &a), sets(&[&["n0", "n2"], &["n3", "n4"], &[]]));
}

#[test]
fn preserved_edges() {
    let m = running_example();
    let a = run(&m, "x:edge", "nextStepPreserved(x)");
    assert_eq!(single(&m, &a), sets(&[&["e0", "e1"], &[], &["e5"]]));
}

#[test]
fn deallocated_edges_via_weak_next() {
    let m = running_example();
    let a = run(&m, "x:edge", "nextStepDeallocated(x)");
    assert_eq!(single(&m, &a), sets(&[&["e2"], &[], &[]]));
    let a = run(&m, "x:edge", "present(x) & WX[false]");
    assert_eq!(single(&m, &a), sets(&[&["e2"], &[], &[]]));
}

#[test]
fn deallocated_edges_literal_reading_is_empty() {
    let m = running_example();
    let a = run(&m, "x:edge", "present(x) & X[forall y:edge. x != y]");
    assert!(a.is_empty_at(WorldId(0)));
}

#[test]
fn two_state_loses_its_item() {
    let m = two_state();
    let a = run(&m, "x:item", "present(x) & X[X[present(x)]]");
    assert!(a.is_empty_at(WorldId(0)) && a.is_empty_at(WorldId(1)));
    let a = run(&m, "x:item", "X[X[present(x)]]");
    assert!(a.is_empty_at(WorldId(0)));
}

#[test]
fn true_is_the_empty_tuple_everywhere() {
    let m = running_example();
    let a = run(&m, "", "true");
    for w in m.world_ids() {
        assert_eq!(a.assignments(w), vec![Assignment::default()]);
    }
    assert_eq!(closed(&m, &run(&m, "", "false")), vec![false; 3]);
}

#[test]
fn until_examples() {
    let m = running_example();
    assert_eq!(closed(&m, &run(&m, "", "<> (exists e:edge. loop(e))")), vec![true; 3]);
    let a = run(&m, "x:node", "present(x) U (exists e:edge. (s(e) = x & t(e) = x))");
    assert_eq!(single(&m, &a), sets(&[&["n0", "n1", "n2"], &["n3", "n4"], &["n5"]]));
}

#[test]
fn always_present() {
    let m = running_example();
    let a = run(&m, "x:node", "[] present(x)");
    assert_eq!(single(&m, &a), sets(&[&["n0", "n1", "n2"], &["n3", "n4"], &["n5"]]));
    let a = run(&m, "x:edge", "[] present(x)");
    assert_eq!(single(&m, &a), sets(&[&[], &[], &["e5"]]));
}

#[test]
fn next_at_w1_kills_every_edge() {
    let m = running_example();
    let a = run(&m, "x:edge", "X[present(x)]");
    assert!(a.is_empty_at(WorldId(1)));
}

#[test]
fn full_attribute_is_fixed_by_next_on_total_maps() {
    // every node has a counterpart under every transition
    let m = running_example();
    let mut ev = Evaluator::new(&m);
    let layout = vec![Slot {
        name: "x".into(),
        kind: VarKind::Element,
        sort: m.signature().sort("node").unwrap(),
    }];
    let full = ev.full(&layout).unwrap();
    assert_eq!(ev.next_op(&full), full);
    assert_eq!(ev.wnext_op(&full), full);
    let empty = ev.empty(&layout).unwrap();
    assert_eq!(ev.until_op(&empty, &full), full);
    assert_eq!(ev.wuntil_op(&empty, &full), full);
}

#[test]
fn terms() {
    let m = running_example();
    let edge = m.signature().sort("edge").unwrap();
    let mut a = Assignment::default();
    a.fo.insert("e".into(), 0);
    let n = eval_term(&Term::app("s", vec![Term::var("e")]), WorldId(0), &a, &m);
    let node = m.signature().sort("node").unwrap();
    assert_eq!(
        m.element_name(ElementId {
            world: WorldId(0),
            sort: node,
            index: n
        }),
        "n0"
    );
    let n = eval_term(&Term::app("t", vec![Term::var("e")]), WorldId(2), &a, &m);
    assert_eq!(m.world(WorldId(2)).element_name(node, n), "n5");
    assert_eq!(eval_term(&Term::var("e"), WorldId(1), &a, &m), 0);
    assert_eq!(m.world(WorldId(2)).element_name(edge, 0), "e5");
}

#[test]
fn sets_follow_direct_images() {
    let m = running_example();
    // the set {n0, n2} merges into {n3}; {e2} vanishes into the empty set
    let a = run(
        &m,
        "N:Set(node)",
        "X[exists x:node. (x in N & forall y:node. (not y in N | y = x))]",
    );
    let n0n2: ElemSet = [0, 2].into_iter().collect();
    let mut asg = Assignment::default();
    asg.so.insert("N".into(), n0n2);
    assert!(a.contains(WorldId(0), &asg));
    asg.so.insert("N".into(), [0, 1].into_iter().collect());
    assert!(!a.contains(WorldId(0), &asg));
    let b = run(&m, "E:Set(edge)", "X[forall e:edge. not e in E]");
    let mut asg = Assignment::default();
    asg.so.insert("E".into(), [2].into_iter().collect());
    assert!(b.contains(WorldId(0), &asg));
}

#[test]
fn second_order_cap() {
    let m = running_example();
    let fc = check_formula("", "existsS N:node. true", m.signature()).unwrap();
    let opts = EvalOptions {
        max_so_carrier: 2,
        ..EvalOptions::default()
    };
    let err = Evaluator::with_options(&m, opts).eval(&fc).unwrap_err();
    assert!(matches!(err, EvalError::SoCarrierCap { len: 3, cap: 2, .. }));
}

#[test]
fn unexpanded_predicate_is_rejected() {
    let m = running_example();
    let fc = crate::logic::FormulaInContext::parse("x:node", "present(x)", m.signature()).unwrap();
    assert!(matches!(eval(&fc, &m), Err(EvalError::ContextMismatch(_))));
}

#[test]
fn memo_reuses_shared_subformulas() {
    let m = running_example();
    let fc = check_formula("x:node", "X[x = x] & X[x = x]", m.signature()).unwrap();
    let mut ev = Evaluator::new(&m);
    ev.eval(&fc).unwrap();
    assert!(ev.stats().memo_hits >= 1);
}
