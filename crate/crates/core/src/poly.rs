//! Sparse multivariate polynomials over exact rationals.
//!
//! Symbols come in three kinds: input variables (with an optional
//! positive-part/negative-part component), relative rounding errors `e_i`,
//! and absolute rounding errors `d_i`. Monomials are kept canonical under
//! the pointwise identities
//!
//! ```text
//! x  = x_pos - x_neg,     x_pos * x_neg = 0,
//! x^a * x_pos^b = x_pos^(a+b),   x^a * x_neg^b = (-1)^a * x_neg^(a+b),
//! ```
//!
//! which hold for the functions `x_pos = max(x, 0)` and `x_neg = max(-x, 0)`.
//! Every product is filtered through these rules, so polynomials that are
//! equal as functions of the inputs have identical term lists.
//!
//! All arithmetic that can grow (multiplication, powers) takes a [`Budget`]
//! that enforces a term-count cap and an optional wall-clock deadline.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use num_traits::{One, Signed, Zero};

use crate::dist::SignClass;
use crate::error::{Error, Result};
use crate::expr::{BinOp, Expr, VarId};
use crate::rat::{rat_to_f64, Dir, Rat};

/// Component of an input variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Comp {
    /// The variable itself.
    Orig,
    /// Positive part `max(x, 0)`.
    Pos,
    /// Negative part `max(-x, 0)` (nonnegative by definition).
    Neg,
}

/// An indeterminate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Sym {
    /// Input variable component.
    X { var: VarId, comp: Comp },
    /// Relative rounding error of operation `i` (bounded by the unit
    /// round-off in magnitude).
    E(u32),
    /// Absolute rounding error of operation `i` (subnormal range).
    D(u32),
}

impl Sym {
    pub fn x(var: VarId) -> Sym {
        Sym::X { var, comp: Comp::Orig }
    }
    pub fn x_pos(var: VarId) -> Sym {
        Sym::X { var, comp: Comp::Pos }
    }
    pub fn x_neg(var: VarId) -> Sym {
        Sym::X { var, comp: Comp::Neg }
    }
    pub fn is_err(&self) -> bool {
        matches!(self, Sym::E(_) | Sym::D(_))
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sym::X { var, comp: Comp::Orig } => write!(f, "x{var}"),
            Sym::X { var, comp: Comp::Pos } => write!(f, "x{var}p"),
            Sym::X { var, comp: Comp::Neg } => write!(f, "x{var}n"),
            Sym::E(i) => write!(f, "e{i}"),
            Sym::D(i) => write!(f, "d{i}"),
        }
    }
}

/// A monomial: sorted `(symbol, power)` pairs, powers >= 1.
pub type Mono = Vec<(Sym, u32)>;

/// One canonical term.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coef: Rat,
    pub mono: Mono,
}

impl Term {
    /// Total degree in the error symbols `e_i`, `d_i`.
    pub fn err_degree(&self) -> u32 {
        self.mono
            .iter()
            .filter(|(s, _)| s.is_err())
            .map(|(_, p)| *p)
            .sum()
    }
    /// Total degree in the `d_i` symbols alone.
    pub fn d_degree(&self) -> u32 {
        self.mono
            .iter()
            .filter(|(s, _)| matches!(s, Sym::D(_)))
            .map(|(_, p)| *p)
            .sum()
    }
}

fn mono_degree(m: &Mono) -> u64 {
    m.iter().map(|(_, p)| u64::from(*p)).sum()
}

/// Graded lexicographic monomial order (total degree first, then
/// lexicographic with earlier symbols taking precedence). This is a proper
/// monomial order, so exact division terminates.
pub fn cmp_mono(a: &Mono, b: &Mono) -> Ordering {
    mono_degree(a).cmp(&mono_degree(b)).then_with(|| {
        let mut i = 0;
        let mut j = 0;
        loop {
            match (a.get(i), b.get(j)) {
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some((sa, pa)), Some((sb, pb))) => match sa.cmp(sb) {
                    // The side holding the earlier symbol has positive power
                    // where the other has zero, hence is lexicographically
                    // larger.
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => match pa.cmp(pb) {
                        Ordering::Equal => {
                            i += 1;
                            j += 1;
                        }
                        other => return other,
                    },
                },
            }
        }
    })
}

fn mul_mono(a: &Mono, b: &Mono) -> Mono {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut i = 0;
    let mut j = 0;
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some((sa, pa)), Some((sb, pb))) => match sa.cmp(sb) {
                Ordering::Less => {
                    out.push((*sa, *pa));
                    i += 1;
                }
                Ordering::Greater => {
                    out.push((*sb, *pb));
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((*sa, pa + pb));
                    i += 1;
                    j += 1;
                }
            },
            (Some(t), None) => {
                out.push(*t);
                i += 1;
            }
            (None, Some(t)) => {
                out.push(*t);
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    out
}

/// Divides monomial `a` by `b`; `None` when `b` does not divide `a`.
fn mono_div(a: &Mono, b: &Mono) -> Option<Mono> {
    let mut out = Vec::with_capacity(a.len());
    let mut i = 0;
    for (sb, pb) in b {
        loop {
            let (sa, pa) = a.get(i)?;
            match sa.cmp(sb) {
                Ordering::Less => {
                    out.push((*sa, *pa));
                    i += 1;
                }
                Ordering::Equal => {
                    if pa < pb {
                        return None;
                    }
                    if pa > pb {
                        out.push((*sa, pa - pb));
                    }
                    i += 1;
                    break;
                }
                Ordering::Greater => return None,
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    Some(out)
}

/// Folds same-variable components inside a sorted, merged monomial and
/// applies the `x_pos * x_neg = 0` rule. Returns `None` when the term
/// vanishes; may flip the coefficient sign.
fn normalize_components(coef: &mut Rat, mono: Mono) -> Option<Mono> {
    let mut out: Mono = Vec::with_capacity(mono.len());
    let mut i = 0;
    while i < mono.len() {
        let (sym, _) = mono[i];
        if let Sym::X { var, .. } = sym {
            let mut orig = 0u32;
            let mut pos = 0u32;
            let mut neg = 0u32;
            while i < mono.len() {
                match mono[i].0 {
                    Sym::X { var: v, comp } if v == var => {
                        match comp {
                            Comp::Orig => orig += mono[i].1,
                            Comp::Pos => pos += mono[i].1,
                            Comp::Neg => neg += mono[i].1,
                        }
                        i += 1;
                    }
                    _ => break,
                }
            }
            if pos > 0 && neg > 0 {
                return None;
            }
            if pos > 0 {
                out.push((Sym::x_pos(var), orig + pos));
            } else if neg > 0 {
                if orig % 2 == 1 {
                    *coef = -std::mem::take(coef);
                }
                out.push((Sym::x_neg(var), orig + neg));
            } else if orig > 0 {
                out.push((Sym::x(var), orig));
            }
        } else {
            out.push(mono[i]);
            i += 1;
        }
    }
    Some(out)
}

/// Compute budget for polynomial and region work: a hard cap on live term
/// counts plus an optional wall-clock deadline.
#[derive(Debug, Clone)]
pub struct Budget {
    pub term_cap: usize,
    deadline: Option<(Instant, f64)>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { term_cap: 5_000_000, deadline: None }
    }
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget { term_cap: usize::MAX, deadline: None }
    }

    pub fn with_term_cap(cap: usize) -> Self {
        Budget { term_cap: cap, deadline: None }
    }

    /// Installs a deadline `seconds` from now.
    #[must_use]
    pub fn with_timeout(mut self, seconds: f64) -> Self {
        let dur = std::time::Duration::from_secs_f64(seconds.max(0.0));
        self.deadline = Some((Instant::now() + dur, seconds));
        self
    }

    pub fn check_terms(&self, n: usize) -> Result<()> {
        if n > self.term_cap {
            return Err(Error::resource(format!(
                "intermediate polynomial has {n} terms, cap is {}",
                self.term_cap
            )));
        }
        Ok(())
    }

    pub fn check_time(&self) -> Result<()> {
        if let Some((at, secs)) = self.deadline {
            if Instant::now() >= at {
                return Err(Error::Timeout(secs));
            }
        }
        Ok(())
    }
}

/// Canonical sparse polynomial. Terms are stored in decreasing graded-lex
/// order with nonzero coefficients and normalized monomials.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    terms: Vec<Term>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Polynomial::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        Polynomial::from_raw_terms(vec![(c, Vec::new())])
    }

    pub fn sym(s: Sym) -> Self {
        Polynomial::from_raw_terms(vec![(Rat::one(), vec![(s, 1)])])
    }

    /// Builds a canonical polynomial from arbitrary `(coefficient, monomial)`
    /// pairs: monomials are sorted and merged, component rules applied, equal
    /// monomials combined, zero terms dropped.
    pub fn from_raw_terms(raw: Vec<(Rat, Mono)>) -> Self {
        let mut acc: BTreeMap<Mono, Rat> = BTreeMap::new();
        for (mut coef, mut mono) in raw {
            if coef.is_zero() {
                continue;
            }
            mono.sort_by(|a, b| a.0.cmp(&b.0));
            // merge duplicate symbols
            let mut merged: Mono = Vec::with_capacity(mono.len());
            for (s, p) in mono {
                if p == 0 {
                    continue;
                }
                match merged.last_mut() {
                    Some((ls, lp)) if *ls == s => *lp += p,
                    _ => merged.push((s, p)),
                }
            }
            let Some(norm) = normalize_components(&mut coef, merged) else {
                continue;
            };
            let slot = acc.entry(norm).or_insert_with(Rat::zero);
            *slot += coef;
        }
        let mut terms: Vec<Term> = acc
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(mono, coef)| Term { coef, mono })
            .collect();
        terms.sort_by(|a, b| cmp_mono(&b.mono, &a.mono));
        Polynomial { terms }
    }

    pub fn from_terms(terms: Vec<Term>) -> Self {
        Polynomial::from_raw_terms(terms.into_iter().map(|t| (t.coef, t.mono)).collect())
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_degree(&self) -> u64 {
        self.terms.iter().map(|t| mono_degree(&t.mono)).max().unwrap_or(0)
    }

    /// The constant term's coefficient.
    pub fn constant_term(&self) -> Rat {
        self.terms
            .iter()
            .find(|t| t.mono.is_empty())
            .map(|t| t.coef.clone())
            .unwrap_or_else(Rat::zero)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut raw: Vec<(Rat, Mono)> = Vec::with_capacity(self.terms.len() + other.terms.len());
        for t in self.terms.iter().chain(other.terms.iter()) {
            raw.push((t.coef.clone(), t.mono.clone()));
        }
        Polynomial::from_raw_terms(raw)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Polynomial {
            terms: self
                .terms
                .iter()
                .map(|t| Term { coef: -t.coef.clone(), mono: t.mono.clone() })
                .collect(),
        }
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return Polynomial::zero();
        }
        Polynomial {
            terms: self
                .terms
                .iter()
                .map(|t| Term { coef: t.coef.clone() * c, mono: t.mono.clone() })
                .collect(),
        }
    }

    /// Keeps the terms matching a predicate (already canonical, no rebuild).
    pub fn filter<F: Fn(&Term) -> bool>(&self, keep: F) -> Self {
        Polynomial {
            terms: self.terms.iter().filter(|t| keep(t)).cloned().collect(),
        }
    }

    /// Coefficient absolute values: the termwise majorant `sum |c_j| m_j`.
    /// Pointwise dominates `|self|` whenever every monomial is pointwise
    /// nonnegative (as after the positive/negative rewrite).
    pub fn abs_coeffs(&self) -> Self {
        Polynomial {
            terms: self
                .terms
                .iter()
                .map(|t| Term { coef: t.coef.abs(), mono: t.mono.clone() })
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self, budget: &Budget) -> Result<Self> {
        let mut acc: BTreeMap<Mono, Rat> = BTreeMap::new();
        for a in &self.terms {
            budget.check_time()?;
            budget.check_terms(acc.len())?;
            for b in &other.terms {
                let mut coef = a.coef.clone() * &b.coef;
                let mono = mul_mono(&a.mono, &b.mono);
                let Some(norm) = normalize_components(&mut coef, mono) else {
                    continue;
                };
                let slot = acc.entry(norm).or_insert_with(Rat::zero);
                *slot += coef;
            }
        }
        budget.check_terms(acc.len())?;
        let mut terms: Vec<Term> = acc
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(mono, coef)| Term { coef, mono })
            .collect();
        terms.sort_by(|a, b| cmp_mono(&b.mono, &a.mono));
        Ok(Polynomial { terms })
    }

    pub fn pow(&self, n: u32, budget: &Budget) -> Result<Self> {
        let mut out = Polynomial::one();
        for _ in 0..n {
            out = out.mul(self, budget)?;
        }
        Ok(out)
    }

    /// Exact rational evaluation. `xs` supplies input values (components are
    /// derived), `es`/`ds` the error symbol values.
    pub fn eval_rat(&self, xs: &[Rat], es: &[Rat], ds: &[Rat]) -> Rat {
        let mut total = Rat::zero();
        for t in &self.terms {
            let mut v = t.coef.clone();
            for (s, p) in &t.mono {
                let base = sym_value_rat(*s, xs, es, ds);
                if base.is_zero() {
                    v = Rat::zero();
                    break;
                }
                for _ in 0..*p {
                    v *= &base;
                }
            }
            total += v;
        }
        total
    }

    /// Binary64 evaluation; inexact, intended for diagnostics and sampling.
    pub fn eval_f64(&self, xs: &[f64], es: &[f64], ds: &[f64]) -> f64 {
        let mut total = 0.0;
        for t in &self.terms {
            let mut v = rat_to_f64(&t.coef, Dir::Nearest);
            for (s, p) in &t.mono {
                v *= sym_value_f64(*s, xs, es, ds).powi(*p as i32);
            }
            total += v;
        }
        total
    }
}

fn sym_value_rat(s: Sym, xs: &[Rat], es: &[Rat], ds: &[Rat]) -> Rat {
    match s {
        Sym::X { var, comp } => {
            let x = &xs[var as usize];
            match comp {
                Comp::Orig => x.clone(),
                Comp::Pos => {
                    if x.is_positive() {
                        x.clone()
                    } else {
                        Rat::zero()
                    }
                }
                Comp::Neg => {
                    if x.is_negative() {
                        -x.clone()
                    } else {
                        Rat::zero()
                    }
                }
            }
        }
        Sym::E(i) => es[i as usize].clone(),
        Sym::D(i) => ds[i as usize].clone(),
    }
}

fn sym_value_f64(s: Sym, xs: &[f64], es: &[f64], ds: &[f64]) -> f64 {
    match s {
        Sym::X { var, comp } => {
            let x = xs[var as usize];
            match comp {
                Comp::Orig => x,
                Comp::Pos => x.max(0.0),
                Comp::Neg => (-x).max(0.0),
            }
        }
        Sym::E(i) => es[i as usize],
        Sym::D(i) => ds[i as usize],
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, t) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " {} ", if t.coef.is_negative() { "-" } else { "+" })?;
            } else if t.coef.is_negative() {
                write!(f, "-")?;
            }
            let mag = t.coef.abs();
            let mut wrote = false;
            if !mag.is_one() || t.mono.is_empty() {
                write!(f, "{mag}")?;
                wrote = true;
            }
            for (s, p) in &t.mono {
                if wrote {
                    write!(f, "*")?;
                }
                write!(f, "{s}")?;
                if *p > 1 {
                    write!(f, "^{p}")?;
                }
                wrote = true;
            }
        }
        Ok(())
    }
}

/// Expands a division-free expression into a polynomial over the original
/// variable components. Folded constant divisions multiply by the exact
/// reciprocal; a non-constant division is unsupported here.
pub fn expand_expr(e: &Expr, budget: &Budget) -> Result<Polynomial> {
    budget.check_time()?;
    match e {
        Expr::Const(c) => Ok(Polynomial::constant(c.clone())),
        Expr::Var(v) => Ok(Polynomial::sym(Sym::x(*v))),
        Expr::Neg(inner) => Ok(expand_expr(inner, budget)?.neg()),
        Expr::Bin(op, l, r) => match op {
            BinOp::Add => Ok(expand_expr(l, budget)?.add(&expand_expr(r, budget)?)),
            BinOp::Sub => Ok(expand_expr(l, budget)?.sub(&expand_expr(r, budget)?)),
            BinOp::Mul => expand_expr(l, budget)?.mul(&expand_expr(r, budget)?, budget),
            BinOp::DivFold => match &**r {
                Expr::Const(c) => Ok(expand_expr(l, budget)?.scale(&(Rat::one() / c))),
                _ => Err(Error::invalid(
                    "folded division with non-constant divisor",
                )),
            },
            BinOp::Div => Err(Error::unsupported(
                "non-constant division in polynomial expansion",
            )),
        },
    }
}

/// Rewrites original-variable factors into positive/negative components so
/// that every monomial is pointwise nonnegative wherever its sign is not
/// already forced:
///
/// * spanning variable, odd power `a`: `x^a = x_pos^a - x_neg^a`
///   (cross terms vanish by the zero rule);
/// * spanning variable, even power: untouched (`x^a >= 0` already);
/// * nonpositive variable: `x^a = (-1)^a x_neg^a`;
/// * nonnegative variable: untouched.
///
/// Error symbols never appear in inputs to this pass.
pub fn pn_rewrite(p: &Polynomial, signs: &[SignClass]) -> Polynomial {
    let mut raw: Vec<(Rat, Mono)> = Vec::new();
    for t in p.terms() {
        // Each factor contributes one or two replacement options; expand the
        // cartesian product over factors.
        let mut parts: Vec<(Rat, Mono)> = vec![(t.coef.clone(), Vec::new())];
        for (s, pw) in &t.mono {
            let options: Vec<(Sym, bool)> = match s {
                Sym::X { var, comp: Comp::Orig } => match signs[*var as usize] {
                    SignClass::NonNeg => vec![(*s, false)],
                    SignClass::NonPos => vec![(Sym::x_neg(*var), pw % 2 == 1)],
                    SignClass::Spans => {
                        if pw % 2 == 1 {
                            vec![(Sym::x_pos(*var), false), (Sym::x_neg(*var), true)]
                        } else {
                            vec![(*s, false)]
                        }
                    }
                },
                other => vec![(*other, false)],
            };
            let mut next = Vec::with_capacity(parts.len() * options.len());
            for (coef, mono) in &parts {
                for (sym, negate) in &options {
                    let mut c = coef.clone();
                    if *negate {
                        c = -c;
                    }
                    let mut m = mono.clone();
                    m.push((*sym, *pw));
                    next.push((c, m));
                }
            }
            parts = next;
        }
        raw.extend(parts);
    }
    Polynomial::from_raw_terms(raw)
}

/// Splits by coefficient sign into `(plus, minus)`, both with positive
/// coefficients, so that `p = plus - minus`.
pub fn split_signs(p: &Polynomial) -> (Polynomial, Polynomial) {
    let plus = p.filter(|t| t.coef.is_positive());
    let minus = p.filter(|t| t.coef.is_negative()).neg();
    (plus, minus)
}

/// The nonnegative majorant of a family of first-order coefficient
/// functions: rewrite each into components and take coefficient magnitudes
/// termwise, then sum. Pointwise it dominates `sum_i |h_i(x)|`.
pub fn pn_majorant(hs: &[Polynomial], signs: &[SignClass]) -> Polynomial {
    let mut total = Polynomial::zero();
    for h in hs {
        total = total.add(&pn_rewrite(h, signs).abs_coeffs());
    }
    total
}

/// Exact multivariate division: returns `q` with `num = q * den`, or `None`
/// when `den` does not divide `num`. Intended for polynomials over original
/// components and error symbols (no positive/negative parts).
pub fn poly_divide_exact(num: &Polynomial, den: &Polynomial) -> Option<Polynomial> {
    if den.is_zero() {
        return None;
    }
    let budget = Budget::unlimited();
    let dlt = &den.terms()[0];
    let mut rem = num.clone();
    let mut quotient: Vec<(Rat, Mono)> = Vec::new();
    while !rem.is_zero() {
        let rlt = &rem.terms()[0];
        let qmono = mono_div(&rlt.mono, &dlt.mono)?;
        let qcoef = rlt.coef.clone() / &dlt.coef;
        let qpoly = Polynomial::from_raw_terms(vec![(qcoef.clone(), qmono.clone())]);
        let prod = qpoly.mul(den, &budget).ok()?;
        rem = rem.sub(&prod);
        quotient.push((qcoef, qmono));
    }
    Some(Polynomial::from_raw_terms(quotient))
}
