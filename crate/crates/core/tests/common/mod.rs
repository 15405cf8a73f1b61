//! Shared helpers for the integration suites: high-accuracy adaptive
//! quadrature (independent of the analytic moment engine) and seeded
//! random generators for distributions, expressions and sample points.

#![allow(dead_code)] // each suite uses its own subset

use num_traits::One;
use probound_core::dist::{Distribution, Family};
use probound_core::expr::{BinOp, Expr, ProblemSpec, VarDecl};
use probound_core::rat::{rat_to_f64, Dir, Rat};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

/// Adaptive Simpson with Richardson extrapolation at a ~1e-13 relative
/// tolerance (relative to the integral's magnitude, so regions with a
/// negligible contribution terminate early). The integrand must be smooth
/// on `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    if !(a < b) {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // Magnitude estimate (>= |whole|) anchors an absolute tolerance; it is
    // nonzero whenever the integrand is not identically zero at the nodes.
    let mag = (b - a) / 6.0 * (fa.abs() + 4.0 * fm.abs() + fb.abs());
    let tol = 1e-13 * mag.max(1e-300);
    adapt(f, a, b, fa, fm, fb, whole, tol, 40)
}

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let s2 = left + right;
    let err = s2 - whole;
    if depth == 0 || err.abs() <= 15.0 * tol {
        return s2 + err / 15.0;
    }
    adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Integrates a piecewise-smooth function by splitting at the given cut
/// points (only those that fall strictly inside `[a, b]` are used).
pub fn integrate_piecewise<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, cuts: &[f64]) -> f64 {
    if !(a < b) {
        return 0.0;
    }
    let mut pts = vec![a];
    for &c in cuts {
        if c > a && c < b {
            pts.push(c);
        }
    }
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.windows(2).map(|w| integrate(f, w[0], w[1])).sum()
}

/// Pre-truncation density of a family, up to the truncation normalization
/// (uniform is the constant 1; the others are the usual full-line pdfs).
pub fn pre_density(dist: &Distribution) -> Box<dyn Fn(f64) -> f64> {
    match &dist.family {
        Family::Uniform => Box::new(|_| 1.0),
        Family::TruncNormal => Box::new(|x| {
            (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
        }),
        Family::TruncLaplace { sigma } => {
            let s = rat_to_f64(sigma, Dir::Nearest);
            Box::new(move |x| (-x.abs() / s).exp() / (2.0 * s))
        }
    }
}

// ---------------------------------------------------------------------------
// Random generators
// ---------------------------------------------------------------------------

/// A rational multiple of 1/16: exact and with a small denominator, which
/// keeps downstream exact-rational evaluation cheap.
fn sixteenth(j: i64) -> Rat {
    Rat::new(j.into(), 16.into())
}

/// A random distribution of the requested family with support contained in
/// roughly `[-6, 6]` and endpoints on the 1/16 grid. `family`: 0 = uniform,
/// 1 = normal, 2 = laplace. `shape`: 0 = spanning zero, 1 = nonnegative,
/// 2 = nonpositive.
pub fn random_distribution(rng: &mut ChaCha12Rng, family: u32, shape: u32) -> Distribution {
    let (a, b) = match shape {
        1 => {
            let a = rng.gen_range(0..64i64);
            (a, a + rng.gen_range(2..32i64))
        }
        2 => {
            let b = -rng.gen_range(0..64i64);
            (b - rng.gen_range(2..32i64), b)
        }
        _ => {
            let a = -rng.gen_range(1..80i64);
            (a, rng.gen_range(1..80i64))
        }
    };
    let (ra, rb) = (sixteenth(a), sixteenth(b));
    match family {
        0 => Distribution::uniform(ra, rb),
        1 => Distribution::trunc_normal(ra, rb),
        _ => {
            let sigma = sixteenth(rng.gen_range(5..=32));
            Distribution::trunc_laplace(ra, rb, sigma)
        }
    }
}

/// A random division-free expression over `nvars` variables using at most
/// `max_ops` binary operations (and always at least one).
pub fn random_division_free_expr(rng: &mut ChaCha12Rng, nvars: u32, max_ops: u32) -> Expr {
    let mut ops_left = max_ops.max(1);
    let e = build_expr(rng, nvars, &mut ops_left, 4);
    match e {
        Expr::Bin(..) => e,
        other => Expr::Bin(
            BinOp::Add,
            Box::new(other),
            Box::new(Expr::Var(rng.gen_range(0..nvars))),
        ),
    }
}

fn build_expr(rng: &mut ChaCha12Rng, nvars: u32, ops_left: &mut u32, depth: u32) -> Expr {
    if depth == 0 || *ops_left == 0 || rng.gen_bool(0.25) {
        return leaf(rng, nvars);
    }
    *ops_left -= 1;
    let op = match rng.gen_range(0..5) {
        0 | 1 => BinOp::Add,
        2 => BinOp::Sub,
        _ => BinOp::Mul,
    };
    let l = build_expr(rng, nvars, ops_left, depth - 1);
    let r = build_expr(rng, nvars, ops_left, depth - 1);
    Expr::Bin(op, Box::new(l), Box::new(r))
}

fn leaf(rng: &mut ChaCha12Rng, nvars: u32) -> Expr {
    if rng.gen_bool(0.8) {
        Expr::Var(rng.gen_range(0..nvars))
    } else {
        let consts: [(i64, i64); 6] = [(1, 2), (2, 1), (-3, 2), (1, 4), (3, 1), (-1, 1)];
        let (n, d) = consts[rng.gen_range(0..consts.len())];
        Expr::Const(Rat::new(n.into(), d.into()))
    }
}

/// A random division-free problem with mixed families and sign classes.
pub fn random_problem(rng: &mut ChaCha12Rng, max_vars: u32, max_ops: u32) -> ProblemSpec {
    let nv = rng.gen_range(2..=max_vars.max(2));
    let vars: Vec<VarDecl> = (0..nv)
        .map(|i| {
            let family = rng.gen_range(0..3);
            let shape = match rng.gen_range(0..10) {
                0 | 1 => 1,
                2 | 3 => 2,
                _ => 0,
            };
            VarDecl {
                name: format!("v{i}"),
                dist: random_distribution(rng, family, shape),
            }
        })
        .collect();
    let expr = random_division_free_expr(rng, nv, max_ops);
    ProblemSpec { vars, expr, eps: None, delta: None, conf: None }
}

/// An exact rational point strictly inside the support, on a 1/64 grid of
/// the span (small denominators keep exact evaluation cheap).
pub fn random_point(rng: &mut ChaCha12Rng, dist: &Distribution) -> Rat {
    let u = Rat::new(rng.gen_range(1..64i64).into(), 64.into());
    dist.a.clone() + (dist.b.clone() - &dist.a) * u
}

/// An exact rational with `|e| <= bound`, on a 1/64 grid of the bound.
pub fn random_err(rng: &mut ChaCha12Rng, bound: &Rat) -> Rat {
    let u = Rat::new(rng.gen_range(-64..=64i64).into(), 64.into());
    u * bound
}

/// Ones for every declared variable, handy as a neutral evaluation point.
pub fn ones(n: usize) -> Vec<Rat> {
    vec![Rat::one(); n]
}
