use cqtl_core::corpus::{self, random_formula, random_model, FormulaParams, ModelParams};
use cqtl_core::eval::Evaluator;
use cqtl_core::logic::{desugar, parse_formula, DesugarMode, Formula};
use cqtl_core::model::roundtrip_relational_view;
use cqtl_core::oracle::Oracle;
use cqtl_core::{parse_model, print_model, Signature, Term};
use proptest::prelude::*;

fn term() -> impl Strategy<Value = Term> {
    let var = prop::sample::select(vec!["x", "y", "z"]).prop_map(Term::var);
    var.prop_recursive(2, 4, 1, |inner| {
        (prop::sample::select(vec!["s", "t"]), inner).prop_map(|(f, a)| Term::app(f, vec![a]))
    })
}

fn atom() -> impl Strategy<Value = Formula> {
    let set = prop::sample::select(vec!["N", "M"]).prop_map(String::from);
    let base = prop_oneof![
        Just(Formula::True),
        Just(Formula::False),
        (term(), set).prop_map(|(t, x)| Formula::Mem(t, x)),
        (term(), term()).prop_map(|(a, b)| Formula::Eq(a, b, None)),
        (term(), term()).prop_map(|(a, b)| Formula::Neq(a, b, None)),
    ];
    base.prop_recursive(2, 3, 1, |inner| inner.prop_map(Formula::not))
}

fn formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        4 => atom(),
        1 => (prop::sample::select(vec!["present", "loop", "nextStepPreserved"]), term())
            .prop_map(|(p, t)| Formula::Call(p.into(), vec![t])),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        let name = prop::sample::select(vec!["x", "y", "N"]).prop_map(String::from);
        let sort = prop::sample::select(vec!["node", "edge"]).prop_map(String::from);
        let b = |f: Formula| Box::new(f);
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, c)| Formula::or(a, c)),
            (inner.clone(), inner.clone()).prop_map(|(a, c)| Formula::and(a, c)),
            (inner.clone(), inner.clone()).prop_map(|(a, c)| Formula::until(a, c)),
            (inner.clone(), inner.clone()).prop_map(|(a, c)| Formula::wuntil(a, c)),
            inner.clone().prop_map(Formula::next),
            inner.clone().prop_map(Formula::wnext),
            inner.clone().prop_map(move |a| Formula::Eventually(b(a))),
            inner.clone().prop_map(move |a| Formula::Always(b(a))),
            (0..4u8, name, sort, inner).prop_map(move |(k, x, s, a)| match k {
                0 => Formula::Exists(x, s, b(a)),
                1 => Formula::Forall(x, s, b(a)),
                2 => Formula::ExistsSet(x, s, b(a)),
                _ => Formula::ForallSet(x, s, b(a)),
            }),
        ]
    })
}

proptest! {
    #[test]
    fn print_then_parse_is_identity(f in formula()) {
        let text = f.to_string();
        prop_assert_eq!(parse_formula(&text, &Signature::graph()), Ok(f), "{}", text);
    }

    #[test]
    fn desugar_is_idempotent_and_positive(f in formula()) {
        for mode in [DesugarMode::KeepEq, DesugarMode::ExpandEq] {
            let once = desugar(&f, mode);
            prop_assert_eq!(desugar(&once, mode), once.clone());
            prop_assert!(once.is_positive());
            let mut stack = vec![&once];
            while let Some(g) = stack.pop() {
                prop_assert!(!matches!(g, Formula::Eventually(_) | Formula::Always(_) | Formula::Neq(..)));
                stack.extend(g.children());
            }
        }
    }

    #[test]
    fn negating_a_composite_is_rejected(f in formula()) {
        prop_assume!(!f.is_atom());
        let text = format!("not ({f})");
        prop_assert!(parse_formula(&text, &Signature::graph()).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn model_round_trips(seed in any::<u64>()) {
        let m = random_model(&mut corpus::rng(seed), &ModelParams::default());
        prop_assert_eq!(parse_model(&print_model(&m)), Ok(m.clone()));
        prop_assert_eq!(roundtrip_relational_view(&m), m);
    }

    #[test]
    fn evaluator_matches_oracle(seed in any::<u64>()) {
        let mut r = corpus::rng(seed);
        let m = random_model(&mut r, &ModelParams::default());
        let mut ev = Evaluator::new(&m);
        let mut or = Oracle::new(&m);
        for _ in 0..8 {
            let fc = random_formula(&mut r, m.signature(), &FormulaParams::default());
            prop_assert_eq!(ev.eval(&fc).unwrap(), or.eval(&fc).unwrap(), "{}", fc.body);
        }
    }

    #[test]
    fn until_and_weak_until_are_fixed_points(seed in any::<u64>()) {
        let mut r = corpus::rng(seed);
        let m = random_model(&mut r, &ModelParams::default());
        let mut ev = Evaluator::new(&m);
        let fa = random_formula(&mut r, m.signature(), &FormulaParams::default());
        let a = ev.eval(&fa).unwrap();
        let layout = ev.layout_of(&fa).unwrap();
        let g = random_formula(&mut r, m.signature(), &FormulaParams { max_fo_context: 0, max_so_context: 0, ..FormulaParams::default() });
        // a closed formula can be read in any context
        let b = ev.formula(&g.body, &layout).unwrap();
        let u = ev.until_op(&a, &b);
        let w = ev.wuntil_op(&a, &b);
        let xu = ev.next_op(&u);
        let xw = ev.next_op(&w);
        prop_assert_eq!(&u, &b.union(&a.intersection(&xu)));
        prop_assert_eq!(&w, &b.union(&a.intersection(&xw)));
        prop_assert!(u.is_subset(&w));
    }

    #[test]
    fn equality_expansion_agrees(seed in any::<u64>()) {
        let mut r = corpus::rng(seed);
        let m = random_model(&mut r, &ModelParams::default());
        let mut ev = Evaluator::new(&m);
        for _ in 0..4 {
            let fc = random_formula(&mut r, m.signature(), &FormulaParams::default());
            let layout = ev.layout_of(&fc).unwrap();
            let kept = ev.formula(&desugar(&fc.body, DesugarMode::KeepEq), &layout).unwrap();
            let expanded = ev.formula(&desugar(&fc.body, DesugarMode::ExpandEq), &layout).unwrap();
            prop_assert_eq!(kept, expanded, "{}", fc.body);
        }
    }
}
