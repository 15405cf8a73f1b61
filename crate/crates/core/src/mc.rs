//! Monte Carlo validation of synthesized thresholds.
//!
//! Draws inputs from the declared truncated distributions by inverse-CDF
//! sampling, evaluates the expression in the target precision, compares
//! against a much more accurate reference on the *same* inputs, and counts
//! how often the observed round-off error reaches the threshold. For a
//! certified threshold the empirical frequency should stay below
//! `1 - confidence` up to binomial noise.
//!
//! * binary32 target: inputs are rounded to `f32`, the expression is
//!   evaluated with native `f32` operations, and the reference is the
//!   `f64` evaluation on the rounded inputs (nine extra decimal digits).
//! * binary64 target: inputs are `f64`, the expression is evaluated with
//!   native `f64` operations, and the reference is compensated
//!   double-double arithmetic (roughly 32 significant digits).
//!
//! Samples whose computed or reference value is not finite are excluded
//! from the frequency and tallied separately.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::dist::{Distribution, Family};
use crate::error::{Error, Result};
use crate::expr::{eps_single, BinOp, Expr, ProblemSpec};
use crate::rat::{rat_to_f64, Dir};
use crate::special::{inv_norm_cdf, norm_cdf};

/// Smallest sample count for which the binomial noise term is meaningful.
pub const MIN_SAMPLES: u64 = 10_000;

/// Outcome of one validation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRun {
    pub threshold: f64,
    pub requested: u64,
    /// Samples that produced a finite error measurement.
    pub used: u64,
    /// Samples with `err >= threshold`.
    pub violations: u64,
    /// Samples discarded for non-finite computed or reference values.
    pub nonfinite: u64,
    /// Empirical violation frequency among used samples.
    pub rate: f64,
    /// Three-sigma binomial half-width of `rate`.
    pub ci3_halfwidth: f64,
    pub seed: u64,
}

// ---------------------------------------------------------------------------
// Inverse-CDF sampling
// ---------------------------------------------------------------------------

fn laplace_cdf_pre(x: f64, sigma: f64) -> f64 {
    if x <= 0.0 {
        0.5 * (x / sigma).exp()
    } else {
        1.0 - 0.5 * (-x / sigma).exp()
    }
}

fn laplace_inv_pre(p: f64, sigma: f64) -> f64 {
    if p <= 0.5 {
        sigma * (2.0 * p).ln()
    } else {
        -sigma * (2.0 - 2.0 * p).ln()
    }
}

/// Per-variable sampler: maps a uniform deviate through the truncated
/// inverse CDF, then clamps into the representable part of the support.
struct Sampler {
    family: SamplerFamily,
    lo: f64,
    hi: f64,
}

enum SamplerFamily {
    Uniform,
    /// Pre-truncation CDF values at the endpoints.
    Normal { pa: f64, pb: f64 },
    Laplace { sigma: f64, pa: f64, pb: f64 },
}

impl Sampler {
    fn new(dist: &Distribution) -> Sampler {
        // Clamp targets are the support endpoints rounded toward the
        // inside, so every sample stays within the declared box.
        let lo = rat_to_f64(&dist.a, Dir::Up);
        let hi = rat_to_f64(&dist.b, Dir::Down);
        let family = match &dist.family {
            Family::Uniform => SamplerFamily::Uniform,
            Family::TruncNormal => {
                SamplerFamily::Normal { pa: norm_cdf(lo), pb: norm_cdf(hi) }
            }
            Family::TruncLaplace { sigma } => {
                let s = rat_to_f64(sigma, Dir::Nearest);
                SamplerFamily::Laplace {
                    sigma: s,
                    pa: laplace_cdf_pre(lo, s),
                    pb: laplace_cdf_pre(hi, s),
                }
            }
        };
        Sampler { family, lo, hi }
    }

    fn draw(&self, u: f64) -> f64 {
        let x = match &self.family {
            SamplerFamily::Uniform => self.lo + (self.hi - self.lo) * u,
            SamplerFamily::Normal { pa, pb } => inv_norm_cdf(pa + u * (pb - pa)),
            SamplerFamily::Laplace { sigma, pa, pb } => {
                laplace_inv_pre(pa + u * (pb - pa), *sigma)
            }
        };
        x.clamp(self.lo, self.hi)
    }
}

// ---------------------------------------------------------------------------
// Compiled evaluation trees
// ---------------------------------------------------------------------------

enum CNode {
    Const(f64),
    Var(usize),
    Neg(Box<CNode>),
    Bin(BinOp, Box<CNode>, Box<CNode>),
}

fn compile(e: &Expr) -> CNode {
    match e {
        Expr::Const(c) => CNode::Const(rat_to_f64(c, Dir::Nearest)),
        Expr::Var(v) => CNode::Var(*v as usize),
        Expr::Neg(inner) => CNode::Neg(Box::new(compile(inner))),
        Expr::Bin(op, l, r) => {
            CNode::Bin(*op, Box::new(compile(l)), Box::new(compile(r)))
        }
    }
}

fn eval32(node: &CNode, xs: &[f32]) -> f32 {
    match node {
        CNode::Const(c) => *c as f32,
        CNode::Var(i) => xs[*i],
        CNode::Neg(inner) => -eval32(inner, xs),
        CNode::Bin(op, l, r) => {
            let a = eval32(l, xs);
            let b = eval32(r, xs);
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div | BinOp::DivFold => a / b,
            }
        }
    }
}

fn eval64(node: &CNode, xs: &[f64]) -> f64 {
    match node {
        CNode::Const(c) => *c,
        CNode::Var(i) => xs[*i],
        CNode::Neg(inner) => -eval64(inner, xs),
        CNode::Bin(op, l, r) => {
            let a = eval64(l, xs);
            let b = eval64(r, xs);
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div | BinOp::DivFold => a / b,
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Double-double reference arithmetic
// ---------------------------------------------------------------------------

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`: roughly 32
/// significant decimal digits, enough to measure binary64 round-off.
#[derive(Debug, Clone, Copy)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn value(self) -> f64 {
        self.hi + self.lo
    }

    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        quick_two_sum(s, e + self.lo + o.lo)
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        quick_two_sum(p, e + self.hi * o.lo + self.lo * o.hi)
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::from_f64(q1)));
        let q2 = (r.hi + r.lo) / (o.hi + o.lo);
        quick_two_sum(q1, q2)
    }
}

fn eval_dd(node: &CNode, xs: &[f64]) -> Dd {
    match node {
        CNode::Const(c) => Dd::from_f64(*c),
        CNode::Var(i) => Dd::from_f64(xs[*i]),
        CNode::Neg(inner) => eval_dd(inner, xs).neg(),
        CNode::Bin(op, l, r) => {
            let a = eval_dd(l, xs);
            let b = eval_dd(r, xs);
            match op {
                BinOp::Add => a.add(b),
                BinOp::Sub => a.sub(b),
                BinOp::Mul => a.mul(b),
                BinOp::Div | BinOp::DivFold => a.div(b),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Validation driver
// ---------------------------------------------------------------------------

/// Estimates `P[err >= threshold]` by simulation. Deterministic for a
/// fixed seed. The target precision follows the problem's `eps`: the
/// binary32 preset selects `f32` evaluation, anything else `f64`.
pub fn validate_threshold(
    problem: &ProblemSpec,
    threshold: f64,
    samples: u64,
    seed: u64,
) -> Result<SampleRun> {
    if samples < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "at least {MIN_SAMPLES} samples required, got {samples}"
        )));
    }
    if !(threshold >= 0.0) {
        return Err(Error::invalid("threshold must be nonnegative"));
    }
    let dists = problem.distributions();
    let samplers: Vec<Sampler> = dists.iter().map(Sampler::new).collect();
    let tree = compile(&problem.expr);
    let binary32 = problem.eps() == eps_single();

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let nv = samplers.len();
    let mut xs = vec![0.0f64; nv];
    let mut xs32 = vec![0.0f32; nv];
    let mut violations = 0u64;
    let mut nonfinite = 0u64;

    for _ in 0..samples {
        for (slot, s) in xs.iter_mut().zip(&samplers) {
            *slot = s.draw(rng.gen::<f64>());
        }
        let err = if binary32 {
            for (slot32, x) in xs32.iter_mut().zip(&xs) {
                *slot32 = *x as f32;
            }
            let computed = eval32(&tree, &xs32);
            for (slot, x32) in xs.iter_mut().zip(&xs32) {
                *slot = f64::from(*x32);
            }
            let reference = eval64(&tree, &xs);
            if !computed.is_finite() || !reference.is_finite() {
                nonfinite += 1;
                continue;
            }
            (f64::from(computed) - reference).abs()
        } else {
            let computed = eval64(&tree, &xs);
            let reference = eval_dd(&tree, &xs);
            if !computed.is_finite() || !reference.hi.is_finite() {
                nonfinite += 1;
                continue;
            }
            Dd::from_f64(computed).sub(reference).value().abs()
        };
        if err >= threshold {
            violations += 1;
        }
    }

    let used = samples - nonfinite;
    if used == 0 {
        return Err(Error::NonFinite(
            "every sample produced a non-finite value".into(),
        ));
    }
    let rate = violations as f64 / used as f64;
    let ci3_halfwidth = 3.0 * (rate * (1.0 - rate) / used as f64).sqrt();
    Ok(SampleRun {
        threshold,
        requested: samples,
        used,
        violations,
        nonfinite,
        rate,
        ci3_halfwidth,
        seed,
    })
}
