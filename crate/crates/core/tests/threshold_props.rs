//! Ordering, monotonicity and consistency properties of the synthesized
//! thresholds and of the underlying probability bound.

mod common;

use common::{random_problem, rng};
use probound_core::expr::parse_problem;
use probound_core::fpmodel::{taylor_division_free, taylor_fraction};
use probound_core::poly::{pn_majorant, Budget};
use probound_core::rat::Rat;
use probound_core::threshold::{analyze, AnalysisConfig, FlagContext, Mode};

const EX_POLY: &str = "var x1 uniform(-1,1)\nvar x2 uniform(-1,1)\nvar x3 uniform(-1,1)\nexpr x1*x2 + x3\n";
const EX_FRAC: &str = "var x1 uniform(-1,1)\nvar x2 uniform(-1,1)\nvar x3 uniform(-1,1)\nexpr (x1*x2)/(x3 + 5)\n";

#[test]
fn centered_bound_never_exceeds_moment_bound() {
    // On the worked example and a batch of random division-free problems,
    // for both tested orders: the feasibility-searched threshold is at
    // most the plain moment bound (the search starts from that point and
    // only ever moves down).
    let mut r = rng(0x5eed_0601);
    let mut problems = vec![parse_problem(EX_POLY).unwrap()];
    for _ in 0..8 {
        problems.push(random_problem(&mut r, 3, 6));
    }
    for (idx, problem) in problems.iter().enumerate() {
        for order in [2u32, 4] {
            let mut cfg = AnalysisConfig::for_problem(problem);
            cfg.order = order;
            cfg.partitions = Some(1);
            cfg.mode = Mode::Cmb;
            let cmb = analyze(problem, &cfg).unwrap();
            cfg.mode = Mode::Nm;
            let nm = analyze(problem, &cfg).unwrap();
            assert!(
                cmb.threshold_total <= nm.threshold_total,
                "problem {idx} order {order}: cmb {} > nm {}",
                cmb.threshold_total,
                nm.threshold_total
            );
        }
    }
}

fn assert_monotone(fc: &FlagContext, lo: f64, hi: f64) {
    let mut prev = f64::INFINITY;
    for i in 0..200 {
        let v = lo + (hi - lo) * f64::from(i) / 199.0;
        let f = fc.flag(v).unwrap();
        assert!(
            f <= prev + 1e-12,
            "flag rose from {prev} to {f} at v = {v}"
        );
        assert!((0.0..=1.0).contains(&f));
        prev = f;
    }
}

#[test]
fn flag_is_monotone_nonincreasing_on_a_grid() {
    let budget = Budget::default();

    let poly = parse_problem(EX_POLY).unwrap();
    let dists = poly.distributions();
    let tf = taylor_division_free(&poly.expr, &budget).unwrap();
    let p = pn_majorant(&tf.h, &poly.sign_classes());
    for parts in [1u32, 4] {
        for order in [2u32, 4] {
            let fc =
                FlagContext::build(&p, None, 0, order, &dists, parts, 1_000_000, &budget)
                    .unwrap();
            assert_monotone(&fc, 0.5, 14.0);
        }
    }

    let frac = parse_problem(EX_FRAC).unwrap();
    let dists = frac.distributions();
    let ff = taylor_fraction(&frac.expr, &budget, false).unwrap();
    let p = pn_majorant(&ff.scaled_h, &frac.sign_classes());
    for parts in [1u32, 4] {
        let fc = FlagContext::build(
            &p,
            Some(&ff.q0),
            ff.power,
            2,
            &dists,
            parts,
            1_000_000,
            &budget,
        )
        .unwrap();
        assert_monotone(&fc, 0.05, 20.0);
    }
}

#[test]
fn single_region_partition_matches_the_direct_bound() {
    let budget = Budget::default();

    // Division-free shape (denominator power 0).
    let poly = parse_problem(EX_POLY).unwrap();
    let dists = poly.distributions();
    let tf = taylor_division_free(&poly.expr, &budget).unwrap();
    let p = pn_majorant(&tf.h, &poly.sign_classes());
    let part = FlagContext::build(&p, None, 0, 2, &dists, 1, 1_000_000, &budget).unwrap();
    let direct = FlagContext::build_unpartitioned(&p, None, 0, 2, &dists, &budget).unwrap();
    for i in 0..100 {
        let v = 1.0 + 0.15 * f64::from(i);
        let a = part.flag(v).unwrap();
        let d = direct.flag(v).unwrap();
        let scale = a.abs().max(d.abs()).max(1e-300);
        assert!((a - d).abs() <= 1e-12 * scale, "{a} vs {d} at v = {v}");
    }

    // Fraction shape (denominator power >= 1).
    let frac = parse_problem(EX_FRAC).unwrap();
    let dists = frac.distributions();
    let ff = taylor_fraction(&frac.expr, &budget, false).unwrap();
    let p = pn_majorant(&ff.scaled_h, &frac.sign_classes());
    let part = FlagContext::build(&p, Some(&ff.q0), ff.power, 2, &dists, 1, 1_000_000, &budget)
        .unwrap();
    let direct =
        FlagContext::build_unpartitioned(&p, Some(&ff.q0), ff.power, 2, &dists, &budget).unwrap();
    for i in 1..=100 {
        let v = 0.05 * f64::from(i);
        let a = part.flag(v).unwrap();
        let d = direct.flag(v).unwrap();
        let scale = a.abs().max(d.abs()).max(1e-300);
        assert!((a - d).abs() <= 1e-12 * scale, "{a} vs {d} at v = {v}");
    }
}

#[test]
fn thresholds_grow_with_confidence() {
    let problem = parse_problem(EX_POLY).unwrap();
    let mut prev = 0.0f64;
    for (num, den) in [(9i64, 10i64), (99, 100), (999, 1000)] {
        let mut cfg = AnalysisConfig::for_problem(&problem);
        cfg.conf = Rat::new(num.into(), den.into());
        cfg.mode = Mode::Cmb;
        cfg.partitions = Some(1);
        let rep = analyze(&problem, &cfg).unwrap();
        assert!(
            rep.threshold_total > prev,
            "confidence {num}/{den} gave {} after {prev}",
            rep.threshold_total
        );
        prev = rep.threshold_total;
    }
}

#[test]
fn analysis_is_deterministic() {
    let problem = parse_problem(EX_FRAC).unwrap();
    let mut cfg = AnalysisConfig::for_problem(&problem);
    cfg.mode = Mode::Div;
    cfg.partitions = Some(8);
    let a = analyze(&problem, &cfg).unwrap();
    let b = analyze(&problem, &cfg).unwrap();
    assert_eq!(a.threshold_total, b.threshold_total);
    assert_eq!(a.threshold_first_order, b.threshold_first_order);
    assert_eq!(a.threshold_second_order, b.threshold_second_order);
    assert_eq!(a.flag_at_threshold, b.flag_at_threshold);
}

#[test]
fn reported_flag_respects_the_confidence_slack() {
    let mut r = rng(0x5eed_0602);
    for _ in 0..6 {
        let problem = random_problem(&mut r, 3, 6);
        let mut cfg = AnalysisConfig::for_problem(&problem);
        cfg.mode = Mode::Cmb;
        cfg.order = 2;
        let rep = analyze(&problem, &cfg).unwrap();
        cfg.mode = Mode::Nm;
        let nm = analyze(&problem, &cfg).unwrap();
        // When the search tightened the bound below the moment-bound
        // point, the certificate at the returned point must hold. (If the
        // centered bound was infeasible there, the report falls back to
        // the moment bound and records the infeasible flag value.)
        if rep.threshold_total < nm.threshold_total * (1.0 - 1e-9) {
            let flag = rep.flag_at_threshold.unwrap();
            assert!(
                flag <= 0.01 + 1e-12,
                "flag {flag} above slack for {}",
                problem.expr.display(&problem.var_names())
            );
        }
    }
}
