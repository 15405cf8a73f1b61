//! Moments of polynomial functions of the random inputs.
//!
//! The inputs are independent, so the expectation of a canonical monomial
//! factors into per-variable raw moments `E[(x_comp)^k | x ∈ R]`, where the
//! component is the variable itself, its positive part, or its negative
//! part, and `R` is an optional subrange of the support (for partitioned
//! analyses). Each raw moment is a ratio of *pre-truncation partial power
//! integrals* (PPIs)
//!
//! ```text
//! PPI(lo, hi, k) = ∫_lo^hi x^k dF_pre(x)
//! ```
//!
//! with the un-truncated uniform/normal/Laplace weight. Uniform PPIs are
//! computed in exact rational arithmetic and rounded once at the end;
//! normal and Laplace PPIs go through the stable incomplete-gamma forms in
//! [`crate::special`].
//!
//! Component moments clamp the integration interval to the matching half
//! line. For `k = 0` this makes the component moment the *indicator* mass
//! `P[x > 0 | R]` (resp. `< 0`), which is exactly the convention that keeps
//! the additivity identity `E[x_pos^k] + (-1)^k E[x_neg^k] = E[x^k]`
//! valid for every `k >= 0`.

use std::cell::RefCell;
use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use crate::dist::{Distribution, Family};
use crate::error::{Error, Result};
use crate::expr::VarId;
use crate::poly::{Comp, Polynomial, Sym, Term};
use crate::rat::{rat_to_f64, Dir, Rat};
use crate::special;

/// Largest supported raw-moment order.
pub const MAX_MOMENT_ORDER: u32 = 64;

/// A closed subrange of a variable's support, with exact endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct SubRange {
    pub lo: Rat,
    pub hi: Rat,
}

impl SubRange {
    pub fn full(dist: &Distribution) -> SubRange {
        SubRange { lo: dist.a.clone(), hi: dist.b.clone() }
    }
}

/// Neumaier-compensated accumulator: the running compensation keeps the
/// summation error independent of the number of addends.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn rat_powi(r: &Rat, k: u32) -> Rat {
    let mut out = Rat::from_integer(1.into());
    for _ in 0..k {
        out *= r;
    }
    out
}

/// Pre-truncation partial power integral over `[lo, hi] ∩ [a, b]`.
fn ppi(dist: &Distribution, lo: &Rat, hi: &Rat, k: u32) -> f64 {
    let lo = lo.clone().max(dist.a.clone());
    let hi = hi.clone().min(dist.b.clone());
    if lo >= hi {
        return 0.0;
    }
    match &dist.family {
        Family::Uniform => {
            // ∫ x^k / (b - a) dx, exactly.
            let span = dist.b.clone() - &dist.a;
            let kk = Rat::from_integer((i64::from(k) + 1).into());
            let v = (rat_powi(&hi, k + 1) - rat_powi(&lo, k + 1)) / (kk * span);
            rat_to_f64(&v, Dir::Nearest)
        }
        Family::TruncNormal => {
            let l = rat_to_f64(&lo, Dir::Nearest);
            let h = rat_to_f64(&hi, Dir::Nearest);
            signed_power_integral(k, l, h, |k, c0, c1| {
                special::normal_power_integral(k, c0, c1)
            })
        }
        Family::TruncLaplace { sigma } => {
            // Standardize t = x / σ: the integral picks up σ^k.
            let l = rat_to_f64(&(lo / sigma), Dir::Nearest);
            let h = rat_to_f64(&(hi / sigma), Dir::Nearest);
            let s = rat_to_f64(sigma, Dir::Nearest);
            s.powi(k as i32)
                * signed_power_integral(k, l, h, |k, c0, c1| {
                    special::laplace_power_integral(k, c0, c1)
                })
        }
    }
}

/// Extends a nonnegative-argument kernel `∫_{c0}^{c1} t^k w(t) dt`
/// (symmetric weight `w`) to a signed interval by splitting at zero.
fn signed_power_integral<F: Fn(u32, f64, f64) -> f64>(k: u32, lo: f64, hi: f64, pos: F) -> f64 {
    let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
    if lo >= 0.0 {
        pos(k, lo, hi)
    } else if hi <= 0.0 {
        sign * pos(k, -hi, -lo)
    } else {
        sign * pos(k, 0.0, -lo) + pos(k, 0.0, hi)
    }
}

/// Conditional raw moment `E[(x_comp)^k | x ∈ range]`.
///
/// Component moments integrate over the matching half line only, so the
/// result is always nonnegative for `Pos`/`Neg`; for `k = 0` they return
/// the conditional probability of the half line (indicator convention).
pub fn raw_moment(dist: &Distribution, range: &SubRange, comp: Comp, k: u32) -> Result<f64> {
    if k > MAX_MOMENT_ORDER {
        return Err(Error::resource(format!(
            "moment order {k} exceeds the supported maximum {MAX_MOMENT_ORDER}"
        )));
    }
    let mass = ppi(dist, &range.lo, &range.hi, 0);
    if !(mass > 0.0) {
        return Err(Error::invalid(
            "zero-probability region in moment computation",
        ));
    }
    let zero = Rat::zero();
    let integral = match comp {
        Comp::Orig => ppi(dist, &range.lo, &range.hi, k),
        Comp::Pos => {
            if !range.hi.is_positive() {
                0.0
            } else {
                let lo = range.lo.clone().max(zero);
                ppi(dist, &lo, &range.hi, k)
            }
        }
        Comp::Neg => {
            if !range.lo.is_negative() {
                0.0
            } else {
                let hi = range.hi.clone().min(zero);
                let v = ppi(dist, &range.lo, &hi, k);
                if k % 2 == 1 {
                    -v
                } else {
                    v
                }
            }
        }
    };
    let value = integral / mass;
    if !value.is_finite() {
        return Err(Error::NonFinite("raw moment".into()));
    }
    Ok(value)
}

/// Conditional probability of the subrange, `P[x ∈ range]`.
pub fn subrange_weight(dist: &Distribution, range: &SubRange) -> Result<f64> {
    let full = SubRange::full(dist);
    let total = ppi(dist, &full.lo, &full.hi, 0);
    if !(total > 0.0) {
        return Err(Error::invalid("distribution support has zero mass"));
    }
    let part = ppi(dist, &range.lo, &range.hi, 0);
    Ok((part / total).clamp(0.0, 1.0))
}

/// Splits a support into `parts` equal-width subranges (exact endpoints).
pub fn partition_ranges(dist: &Distribution, parts: u32) -> Vec<SubRange> {
    assert!(parts >= 1);
    let span = dist.b.clone() - &dist.a;
    let step = span / Rat::from_integer(i64::from(parts).into());
    (0..parts)
        .map(|i| {
            let lo = dist.a.clone() + step.clone() * Rat::from_integer(i64::from(i).into());
            let hi = if i + 1 == parts {
                dist.b.clone()
            } else {
                dist.a.clone() + step.clone() * Rat::from_integer(i64::from(i + 1).into())
            };
            SubRange { lo, hi }
        })
        .collect()
}

/// Cartesian product of per-variable partitions: `parts^nvars` regions in
/// odometer order (last variable fastest). Errors when the region count
/// exceeds `cap`.
pub fn partition_regions(
    dists: &[Distribution],
    parts: u32,
    cap: usize,
) -> Result<Vec<Vec<SubRange>>> {
    let n = dists.len() as u32;
    let total = u128::from(parts).checked_pow(n).unwrap_or(u128::MAX);
    if total > cap as u128 {
        return Err(Error::resource(format!(
            "{parts}^{n} = {total} regions exceed the cap of {cap}"
        )));
    }
    let per_var: Vec<Vec<SubRange>> =
        dists.iter().map(|d| partition_ranges(d, parts)).collect();
    let mut regions = Vec::with_capacity(total as usize);
    let mut idx = vec![0usize; dists.len()];
    loop {
        regions.push(
            idx.iter()
                .enumerate()
                .map(|(v, &i)| per_var[v][i].clone())
                .collect(),
        );
        // odometer increment
        let mut pos = dists.len();
        loop {
            if pos == 0 {
                return Ok(regions);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < parts as usize {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Moment evaluation context: distributions, a fixed subrange per variable,
/// and a cache of raw moments (the same `(var, comp, k)` query recurs once
/// per monomial containing it).
pub struct MomentCtx<'a> {
    dists: &'a [Distribution],
    ranges: Vec<SubRange>,
    cache: RefCell<BTreeMap<(VarId, u8, u32), f64>>,
}

impl<'a> MomentCtx<'a> {
    /// Unconditional moments over the full supports.
    pub fn new(dists: &'a [Distribution]) -> Self {
        let ranges = dists.iter().map(SubRange::full).collect();
        MomentCtx { dists, ranges, cache: RefCell::new(BTreeMap::new()) }
    }

    /// Moments conditioned on `x_v ∈ ranges[v]` for every variable.
    pub fn with_ranges(dists: &'a [Distribution], ranges: Vec<SubRange>) -> Self {
        assert_eq!(dists.len(), ranges.len());
        MomentCtx { dists, ranges, cache: RefCell::new(BTreeMap::new()) }
    }

    pub fn raw_moment(&self, var: VarId, comp: Comp, k: u32) -> Result<f64> {
        let key = (var, comp as u8, k);
        if let Some(v) = self.cache.borrow().get(&key) {
            return Ok(*v);
        }
        let v = raw_moment(
            &self.dists[var as usize],
            &self.ranges[var as usize],
            comp,
            k,
        )?;
        self.cache.borrow_mut().insert(key, v);
        Ok(v)
    }

    /// Probability of the whole region (product of per-variable weights).
    pub fn weight(&self) -> Result<f64> {
        let mut w = 1.0;
        for (dist, range) in self.dists.iter().zip(&self.ranges) {
            w *= subrange_weight(dist, range)?;
        }
        Ok(w)
    }

    /// Expectation of one canonical term.
    pub fn term_expectation(&self, t: &Term) -> Result<f64> {
        let mut v = rat_to_f64(&t.coef, Dir::Nearest);
        for (s, pw) in &t.mono {
            match s {
                Sym::X { var, comp } => {
                    v *= self.raw_moment(*var, *comp, *pw)?;
                }
                Sym::E(_) | Sym::D(_) => {
                    return Err(Error::invalid(
                        "error symbol inside a moment computation",
                    ));
                }
            }
            if v == 0.0 {
                return Ok(0.0);
            }
        }
        if !v.is_finite() {
            return Err(Error::NonFinite("term expectation".into()));
        }
        Ok(v)
    }

    /// Expectation of a canonical polynomial (compensated summation; term
    /// cancellation is expected for central-moment style inputs).
    pub fn poly_expectation(&self, p: &Polynomial) -> Result<f64> {
        let mut acc = NeumaierSum::new();
        for t in p.terms() {
            acc.add(self.term_expectation(t)?);
        }
        let v = acc.value();
        if !v.is_finite() {
            return Err(Error::NonFinite("polynomial expectation".into()));
        }
        Ok(v)
    }
}
