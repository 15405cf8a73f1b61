//! The floating-point rounding model and its first-order decomposition.
//!
//! Every rounded binary operation obeys
//!
//! ```text
//! fl(a . b) = (a . b)(1 + e) + d,   |e| <= eps,  |d| <= delta,
//! ```
//!
//! with a fresh pair `(e_i, d_i)` per operation (negation is exact).
//! Applying this to an expression tree produces the *computed* value as an
//! exact rational function of the inputs and the error symbols. Splitting
//! its polynomial expansion by error degree yields
//!
//! ```text
//! computed = f(x) + Σ_i h_i(x) e_i + R2(x, e, d),
//! ```
//!
//! where each `h_i` is the first-order coefficient of `e_i`, and the
//! residual `R2` collects every `d`-term and all interactions of degree two
//! and higher — by construction, never a pure first-order `e` term.
//!
//! Operations are indexed in left-to-right post order (an operation's index
//! is assigned after both operands are complete), so indices are stable and
//! reproducible across runs.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::detbound::{struct_bound_poly, VarBox};
use crate::error::{Error, Result};
use crate::expr::{BinOp, Expr, VarId};
use crate::poly::{poly_divide_exact, Budget, Polynomial, Sym, Term};
use crate::rat::Rat;

/// An expression tree with rounding applied: every binary operation carries
/// the index of its error pair `(e_idx, d_idx)`.
#[derive(Debug, Clone, PartialEq)]
pub enum FpExpr {
    Const(Rat),
    Var(VarId),
    Neg(Box<FpExpr>),
    Rounded { op: BinOp, l: Box<FpExpr>, r: Box<FpExpr>, idx: u32 },
}

/// Applies the rounding model, assigning error indices in left-to-right
/// post order. Returns the transformed tree and the operation count.
pub fn fp_transform(e: &Expr) -> (FpExpr, u32) {
    fn go(e: &Expr, next: &mut u32) -> FpExpr {
        match e {
            Expr::Const(c) => FpExpr::Const(c.clone()),
            Expr::Var(v) => FpExpr::Var(*v),
            Expr::Neg(inner) => FpExpr::Neg(Box::new(go(inner, next))),
            Expr::Bin(op, l, r) => {
                let lf = go(l, next);
                let rf = go(r, next);
                let idx = *next;
                *next += 1;
                FpExpr::Rounded { op: *op, l: Box::new(lf), r: Box::new(rf), idx }
            }
        }
    }
    let mut next = 0;
    let fe = go(e, &mut next);
    (fe, next)
}

impl FpExpr {
    /// Exact evaluation of the rounded computation at a concrete point
    /// `(x, e, d)`; `None` on division by zero.
    pub fn eval_rat(&self, xs: &[Rat], es: &[Rat], ds: &[Rat]) -> Option<Rat> {
        match self {
            FpExpr::Const(c) => Some(c.clone()),
            FpExpr::Var(v) => Some(xs[*v as usize].clone()),
            FpExpr::Neg(inner) => inner.eval_rat(xs, es, ds).map(|v| -v),
            FpExpr::Rounded { op, l, r, idx } => {
                let a = l.eval_rat(xs, es, ds)?;
                let b = r.eval_rat(xs, es, ds)?;
                let exact = match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div | BinOp::DivFold => {
                        if b.is_zero() {
                            return None;
                        }
                        a / b
                    }
                };
                let i = *idx as usize;
                Some(exact * (Rat::one() + &es[i]) + &ds[i])
            }
        }
    }
}

/// Expands a rounded tree into an exact rational function `N / D` of the
/// inputs and error symbols. Rounding factors multiply the numerator
/// (`N(1+e) + D d`), so for a division-free tree `D = 1`, and for a
/// top-level fraction `D` is the rounded denominator computation.
pub fn expand_rational(f: &FpExpr, budget: &Budget) -> Result<(Polynomial, Polynomial)> {
    budget.check_time()?;
    match f {
        FpExpr::Const(c) => Ok((Polynomial::constant(c.clone()), Polynomial::one())),
        FpExpr::Var(v) => Ok((Polynomial::sym(Sym::x(*v)), Polynomial::one())),
        FpExpr::Neg(inner) => {
            let (n, d) = expand_rational(inner, budget)?;
            Ok((n.neg(), d))
        }
        FpExpr::Rounded { op, l, r, idx } => {
            let (nl, dl) = expand_rational(l, budget)?;
            let (nr, dr) = expand_rational(r, budget)?;
            let (raw_n, raw_d) = match op {
                BinOp::Add => (
                    nl.mul(&dr, budget)?.add(&nr.mul(&dl, budget)?),
                    dl.mul(&dr, budget)?,
                ),
                BinOp::Sub => (
                    nl.mul(&dr, budget)?.sub(&nr.mul(&dl, budget)?),
                    dl.mul(&dr, budget)?,
                ),
                BinOp::Mul => (nl.mul(&nr, budget)?, dl.mul(&dr, budget)?),
                BinOp::Div => (nl.mul(&dr, budget)?, dl.mul(&nr, budget)?),
                BinOp::DivFold => match &**r {
                    FpExpr::Const(c) if !c.is_zero() => {
                        (nl.scale(&(Rat::one() / c)), dl)
                    }
                    _ => {
                        return Err(Error::invalid(
                            "folded division with non-constant divisor",
                        ))
                    }
                },
            };
            let e = Polynomial::sym(Sym::E(*idx));
            let d = Polynomial::sym(Sym::D(*idx));
            let n_out = raw_n
                .add(&raw_n.mul(&e, budget)?)
                .add(&raw_d.mul(&d, budget)?);
            Ok((n_out, raw_d))
        }
    }
}

enum TermClass {
    Value,
    LinearE(u32, Term),
    Rest,
}

fn classify_term(t: &Term) -> TermClass {
    let mut err_syms = t.mono.iter().filter(|(s, _)| s.is_err());
    match (err_syms.next(), err_syms.next()) {
        (None, _) => TermClass::Value,
        (Some((Sym::E(i), 1)), None) => {
            let stripped: Vec<_> = t
                .mono
                .iter()
                .filter(|(s, _)| !s.is_err())
                .cloned()
                .collect();
            TermClass::LinearE(*i, Term { coef: t.coef.clone(), mono: stripped })
        }
        _ => TermClass::Rest,
    }
}

/// Splits an expanded polynomial by error degree: the error-free part, the
/// pure `e_i`-linear coefficients, and everything else.
fn split_taylor(p: &Polynomial, k: u32) -> (Polynomial, Vec<Polynomial>, Polynomial) {
    let mut value = Vec::new();
    let mut linear: BTreeMap<u32, Vec<Term>> = BTreeMap::new();
    let mut rest = Vec::new();
    for t in p.terms() {
        match classify_term(t) {
            TermClass::Value => value.push(t.clone()),
            TermClass::LinearE(i, stripped) => linear.entry(i).or_default().push(stripped),
            TermClass::Rest => rest.push(t.clone()),
        }
    }
    let h = (0..k)
        .map(|i| Polynomial::from_terms(linear.remove(&i).unwrap_or_default()))
        .collect();
    (Polynomial::from_terms(value), h, Polynomial::from_terms(rest))
}

/// First-order decomposition of a division-free expression.
#[derive(Debug, Clone)]
pub struct TaylorForm {
    /// The exact mathematical value `f(x)`.
    pub value: Polynomial,
    /// First-order coefficients: `h[i]` multiplies `e_i`.
    pub h: Vec<Polynomial>,
    /// Exact residual: all `d` terms and all higher-order interactions.
    pub r2: Polynomial,
    /// Number of rounded operations.
    pub k: u32,
}

/// Decomposes a division-free expression: `computed = value + Σ h_i e_i + r2`
/// exactly (an algebraic identity, not a truncation).
pub fn taylor_division_free(expr: &Expr, budget: &Budget) -> Result<TaylorForm> {
    let (fe, k) = fp_transform(expr);
    let (n, d) = expand_rational(&fe, budget)?;
    debug_assert!(d == Polynomial::one(), "division-free tree has denominator 1");
    let (value, h, r2) = split_taylor(&n, k);
    debug_assert!(residual_invariant(&r2));
    Ok(TaylorForm { value, h, r2, k })
}

/// Every residual term must carry a `d` symbol or have total error degree
/// at least two.
pub fn residual_invariant(r2: &Polynomial) -> bool {
    r2.terms()
        .iter()
        .all(|t| t.d_degree() >= 1 || t.err_degree() >= 2)
}

/// First-order decomposition of a top-level fraction `N/Q`, with every
/// first-order coefficient scaled by a power of the infinite-precision
/// denominator to stay polynomial:
///
/// ```text
/// computed = N/Q + Σ_i (scaled_h_i / Q^power) e_i + r2_num / (den_factors)
/// ```
#[derive(Debug, Clone)]
pub struct FractionForm {
    /// Infinite-precision numerator `N(x)`.
    pub n0: Polynomial,
    /// Infinite-precision denominator `Q(x)`.
    pub q0: Polynomial,
    /// `h_i * Q^power` — polynomial after reduction by common `Q` factors.
    pub scaled_h: Vec<Polynomial>,
    /// Remaining denominator power for the first-order term (0, 1 or 2).
    pub power: u32,
    /// Residual numerator.
    pub r2_num: Polynomial,
    /// Residual denominator, kept factored: `(factor, multiplicity)`.
    pub r2_den_factors: Vec<(Polynomial, u32)>,
    /// Number of rounded operations.
    pub k: u32,
}

/// Decomposes a top-level fraction. `force_q2` suppresses the reduction of
/// common `Q` factors (keeping `power = 2`).
pub fn taylor_fraction(expr: &Expr, budget: &Budget, force_q2: bool) -> Result<FractionForm> {
    let (fe, k) = fp_transform(expr);
    let (pn, pd) = expand_rational(&fe, budget)?;

    let (n0, dpn, _) = split_taylor(&pn, k);
    let (q0, dpd, _) = split_taylor(&pd, k);
    if q0.is_zero() {
        return Err(Error::invalid("denominator is identically zero"));
    }

    // scaled_h_i = (∂P_N/∂e_i) Q − N (∂P_D/∂e_i), all at zero errors: the
    // quotient-rule numerator, i.e. h_i · Q².
    let mut scaled: Vec<Polynomial> = Vec::with_capacity(k as usize);
    for i in 0..k as usize {
        let a = dpn[i].mul(&q0, budget)?;
        let b = n0.mul(&dpd[i], budget)?;
        scaled.push(a.sub(&b));
    }

    // Exact residual: computed − N/Q − Σ h_i e_i over the common
    // denominator P_D · Q².
    let mut s = Polynomial::zero();
    for (i, sh) in scaled.iter().enumerate() {
        s = s.add(&sh.mul(&Polynomial::sym(Sym::E(i as u32)), budget)?);
    }
    let q0_sq = q0.mul(&q0, budget)?;
    let r2_num = pn
        .mul(&q0_sq, budget)?
        .sub(&n0.mul(&q0, budget)?.mul(&pd, budget)?)
        .sub(&s.mul(&pd, budget)?);
    debug_assert!(residual_invariant(&r2_num));
    let r2_den_factors = vec![(pd, 1), (q0.clone(), 2)];

    // Reduce common Q factors from every scaled coefficient at once.
    let mut power = 2u32;
    if !force_q2 {
        while power > 0 {
            let reduced: Option<Vec<Polynomial>> = scaled
                .iter()
                .map(|p| {
                    if p.is_zero() {
                        Some(Polynomial::zero())
                    } else {
                        poly_divide_exact(p, &q0)
                    }
                })
                .collect();
            match reduced {
                Some(r) => {
                    scaled = r;
                    power -= 1;
                }
                None => break,
            }
        }
    }

    Ok(FractionForm { n0, q0, scaled_h: scaled, power, r2_num, r2_den_factors, k })
}

/// First-order decomposition with a certified magnitude bound on everything
/// beyond first order, built by forward propagation.
///
/// Unlike [`taylor_division_free`], the higher-order terms are never
/// materialized as a polynomial: every `(1 + e)` factor along a chain of
/// accumulations would otherwise multiply the entire prefix, so the full
/// expansion grows exponentially with nesting depth. Here each node carries
/// the exact value polynomial, the exact first-order coefficients, and a
/// single rational bound on the residual magnitude over the given box, which
/// keeps the cost polynomial in the expression size.
#[derive(Debug, Clone)]
pub struct JetForm {
    /// The exact mathematical value `f(x)`.
    pub value: Polynomial,
    /// First-order coefficients: `h[i]` multiplies `e_i`.
    pub h: Vec<Polynomial>,
    /// Certified bound on `|computed - value - Σ h_i e_i|` over the box.
    pub r2_bound: Rat,
    /// Number of rounded operations.
    pub k: u32,
}

struct Jet {
    value: Polynomial,
    /// Sparse first-order coefficients, strictly sorted by error index.
    lin: Vec<(u32, Polynomial)>,
    /// Bound on the residual magnitude over the box.
    rem: Rat,
}

/// Sum of coefficient-polynomial magnitude bounds; `|Σ c_i e_i| ≤ ε·lin_sup`.
fn lin_sup(lin: &[(u32, Polynomial)], bx: &VarBox) -> Rat {
    let mut s = Rat::zero();
    for (_, p) in lin {
        s += struct_bound_poly(p, bx);
    }
    s
}

fn lin_concat(
    l: Vec<(u32, Polynomial)>,
    r: Vec<(u32, Polynomial)>,
    negate_right: bool,
) -> Vec<(u32, Polynomial)> {
    let mut out = l;
    out.reserve(r.len());
    for (i, p) in r {
        out.push((i, if negate_right { p.neg() } else { p }));
    }
    debug_assert!(out.windows(2).all(|w| w[0].0 < w[1].0));
    out
}

/// Forward-propagated first-order decomposition of a division-free
/// expression. Error indices match [`fp_transform`]'s left-to-right post
/// order, so `h` lines up with [`taylor_division_free`] exactly; only the
/// residual is summarized as a bound instead of kept symbolic.
pub fn taylor_jet(expr: &Expr, bx: &VarBox, budget: &Budget) -> Result<JetForm> {
    let mut next = 0u32;
    let jet = jet_rec(expr, bx, budget, &mut next)?;
    let mut h = vec![Polynomial::zero(); next as usize];
    for (i, p) in jet.lin {
        h[i as usize] = p;
    }
    Ok(JetForm { value: jet.value, h, r2_bound: jet.rem, k: next })
}

fn jet_rec(e: &Expr, bx: &VarBox, budget: &Budget, next: &mut u32) -> Result<Jet> {
    budget.check_time()?;
    match e {
        Expr::Const(c) => Ok(Jet {
            value: Polynomial::constant(c.clone()),
            lin: Vec::new(),
            rem: Rat::zero(),
        }),
        Expr::Var(v) => Ok(Jet {
            value: Polynomial::sym(Sym::x(*v)),
            lin: Vec::new(),
            rem: Rat::zero(),
        }),
        Expr::Neg(inner) => {
            let j = jet_rec(inner, bx, budget, next)?;
            Ok(Jet {
                value: j.value.neg(),
                lin: j.lin.into_iter().map(|(i, p)| (i, p.neg())).collect(),
                rem: j.rem,
            })
        }
        Expr::Bin(op, l, r) => {
            let jl = jet_rec(l, bx, budget, next)?;
            let jr = jet_rec(r, bx, budget, next)?;
            let idx = *next;
            *next += 1;
            let exact = match op {
                BinOp::Add => Jet {
                    value: jl.value.add(&jr.value),
                    rem: &jl.rem + &jr.rem,
                    lin: lin_concat(jl.lin, jr.lin, false),
                },
                BinOp::Sub => Jet {
                    value: jl.value.sub(&jr.value),
                    rem: &jl.rem + &jr.rem,
                    lin: lin_concat(jl.lin, jr.lin, true),
                },
                BinOp::Mul => {
                    // (v_l + L_l + R_l)(v_r + L_r + R_r): the value-value
                    // product is exact, value-linear products stay linear,
                    // and every term touching two non-value parts or one
                    // residual is absorbed into the residual bound.
                    let ml = struct_bound_poly(&jl.value, bx);
                    let mr = struct_bound_poly(&jr.value, bx);
                    let tl = &bx.eps * lin_sup(&jl.lin, bx) + &jl.rem;
                    let tr = &bx.eps * lin_sup(&jr.lin, bx) + &jr.rem;
                    let mut lin = Vec::with_capacity(jl.lin.len() + jr.lin.len());
                    for (i, p) in &jl.lin {
                        lin.push((*i, p.mul(&jr.value, budget)?));
                    }
                    for (i, p) in &jr.lin {
                        lin.push((*i, p.mul(&jl.value, budget)?));
                    }
                    debug_assert!(lin.windows(2).all(|w| w[0].0 < w[1].0));
                    Jet {
                        value: jl.value.mul(&jr.value, budget)?,
                        lin,
                        rem: ml * &jr.rem + mr * &jl.rem + tl * tr,
                    }
                }
                BinOp::DivFold => {
                    let c = match jr.value.terms() {
                        [] => return Err(Error::invalid("folded division by zero")),
                        [t] if t.mono.is_empty() => t.coef.clone(),
                        _ => {
                            return Err(Error::invalid(
                                "folded division with non-constant divisor",
                            ))
                        }
                    };
                    if c.is_zero() {
                        return Err(Error::invalid("folded division by zero"));
                    }
                    let inv = Rat::one() / &c;
                    Jet {
                        value: jl.value.scale(&inv),
                        lin: jl
                            .lin
                            .into_iter()
                            .map(|(i, p)| (i, p.scale(&inv)))
                            .collect(),
                        rem: &jl.rem * inv.abs(),
                    }
                }
                BinOp::Div => {
                    return Err(Error::unsupported(
                        "forward propagation handles division-free expressions only",
                    ))
                }
            };
            // Rounding: t·(1 + e_idx) + d_idx. The value polynomial becomes
            // the coefficient of the fresh error symbol; products of e_idx
            // with the existing first-order part and residual, plus the
            // absolute offset, move into the residual bound.
            let s = lin_sup(&exact.lin, bx);
            let rem = &exact.rem + &bx.eps * (&bx.eps * s + &exact.rem) + &bx.delta;
            let mut lin = exact.lin;
            lin.push((idx, exact.value.clone()));
            Ok(Jet { value: exact.value, lin, rem })
        }
    }
}
