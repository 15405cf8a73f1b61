//! Property-based checks: printing/parsing stability, expansion as an
//! evaluation homomorphism, and polynomial rewrite identities.

use std::collections::BTreeMap;

use num_traits::Signed;
use probound_core::dist::SignClass;
use probound_core::expr::{parse_expr, BinOp, Expr, VarId};
use probound_core::poly::{expand_expr, pn_rewrite, split_signs, Budget, Polynomial};
use probound_core::rat::Rat;
use proptest::prelude::*;

fn names() -> Vec<String> {
    vec!["a".to_string(), "b".to_string(), "c".to_string()]
}

fn name_map() -> BTreeMap<String, VarId> {
    names()
        .into_iter()
        .enumerate()
        .map(|(i, n)| (n, i as VarId))
        .collect()
}

fn arb_rat() -> impl Strategy<Value = Rat> {
    (-40i64..=40, 1i64..=12).prop_map(|(n, d)| Rat::new(n.into(), d.into()))
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        3 => (0u32..3).prop_map(Expr::Var),
        1 => arb_rat().prop_map(Expr::Const),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            4 => (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Bin(BinOp::Add, a.into(), b.into())),
            3 => (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Bin(BinOp::Sub, a.into(), b.into())),
            4 => (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Bin(BinOp::Mul, a.into(), b.into())),
            1 => (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Bin(BinOp::Div, a.into(), b.into())),
            1 => inner.prop_map(|e| Expr::Neg(e.into())),
        ]
    })
}

/// Parses the display of a raw tree; `None` when normalization rejects it
/// (a constant subexpression dividing by zero).
fn reparse(e: &Expr) -> Option<Expr> {
    let s = e.display(&names()).to_string();
    parse_expr(&s, &name_map()).ok()
}

fn expand(e: &Expr) -> Option<Polynomial> {
    expand_expr(e, &Budget::default()).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn printing_and_parsing_are_mutually_stable(e in arb_expr()) {
        let Some(e1) = reparse(&e) else { return Ok(()) };
        let s1 = e1.display(&names()).to_string();
        let e2 = parse_expr(&s1, &name_map()).unwrap();
        prop_assert_eq!(&e1, &e2, "reparse changed the tree for `{}`", s1);
        let s2 = e2.display(&names()).to_string();
        prop_assert_eq!(s1, s2);
    }

    #[test]
    fn expansion_is_an_evaluation_homomorphism(
        e in arb_expr(),
        pt in prop::collection::vec((-20i64..=20, 1i64..=8), 3),
    ) {
        let Some(e1) = reparse(&e) else { return Ok(()) };
        let Some(p) = expand(&e1) else { return Ok(()) };
        let env: Vec<Rat> =
            pt.iter().map(|(n, d)| Rat::new((*n).into(), (*d).into())).collect();
        let direct = e1.eval_rat(&env).unwrap();
        let via_poly = p.eval_rat(&env, &[], &[]);
        prop_assert_eq!(direct, via_poly);
    }

    #[test]
    fn sign_split_reconstructs_the_polynomial(e in arb_expr()) {
        let Some(e1) = reparse(&e) else { return Ok(()) };
        let Some(p) = expand(&e1) else { return Ok(()) };
        let (plus, minus) = split_signs(&p);
        prop_assert!(plus.terms().iter().all(|t| t.coef.is_positive()));
        prop_assert!(minus.terms().iter().all(|t| t.coef.is_positive()));
        prop_assert!(plus.sub(&minus).sub(&p).is_zero());
    }

    #[test]
    fn component_rewrite_preserves_pointwise_values(
        e in arb_expr(),
        pt in prop::collection::vec((-20i64..=20, 1i64..=8), 3),
    ) {
        let Some(e1) = reparse(&e) else { return Ok(()) };
        let Some(p) = expand(&e1) else { return Ok(()) };
        let q = pn_rewrite(&p, &[SignClass::Spans; 3]);
        let env: Vec<Rat> =
            pt.iter().map(|(n, d)| Rat::new((*n).into(), (*d).into())).collect();
        prop_assert_eq!(p.eval_rat(&env, &[], &[]), q.eval_rat(&env, &[], &[]));
    }
}
