//! Threshold synthesis: turning moment information into certified
//! probabilistic round-off bounds.
//!
//! After the rounding-model decomposition, the first-order error is
//! dominated pointwise by `eps * p(x)` (division-free) or
//! `eps * p(x) / Q(x)^power` (top-level fraction), where `p` is the
//! nonnegative majorant of the first-order coefficients. Strategies:
//!
//! * **nm** — the plain order-`n` moment bound
//!   `U = eps * (E[p^n] / (1-c))^(1/n)`;
//! * **cmb** — a feasibility search on the centered bound
//!   `P[p >= v] <= E[(p - m)^n] / (v - m)^n`, bracketed between `E[p]`
//!   and the nm point;
//! * **div** — for fractions: `P[p/Q^power >= v] = P[K_v >= 0]` with
//!   `K_v = p - v Q^power`, bounded through a shifted even-order Markov
//!   inequality, searched over a wide geometric bracket;
//! * optional **partitioning** refines every bound with the law of total
//!   probability over a grid of per-variable subranges, clipping each
//!   conditional bound at one.
//!
//! All searches run in the scale-free variable `v = u / eps`; moments are
//! binary64 with compensated summation, and every quantity that enters a
//! probability bound is nudged by a relative `1e-9` toward the
//! conservative side before use.

use std::time::Instant;

use num_traits::{One, Signed};

use crate::detbound::{second_order_bound, VarBox};
use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::expr::{
    check_denominator_sign, classify, ProblemSpec, SignCertificate, StructuralForm,
};
use crate::fpmodel::{taylor_fraction, taylor_jet};
use crate::moments::{partition_regions, MomentCtx, NeumaierSum, SubRange};
use crate::poly::{pn_majorant, Budget, Polynomial};
use crate::rat::{next_up_f64, rat_to_f64, Dir, Rat};
use crate::special::factorial;

/// Conservative nudge applied to every probability-bound ingredient.
const INFLATE: f64 = 1.0 + 1e-9;

/// Default order sweep schedule.
pub const DEFAULT_SWEEP_ORDERS: &[u32] = &[2, 4, 6, 8, 10, 12, 18, 24, 30, 36];

fn inflate(x: f64) -> f64 {
    x * INFLATE
}

fn deflate(x: f64) -> f64 {
    x / INFLATE
}

/// Threshold synthesis strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Plain order-n moment bound (division-free only).
    Nm,
    /// Centered moment bound with feasibility search (division-free only).
    Cmb,
    /// Fraction bound (top-level division only).
    Div,
    /// cmb for division-free expressions, div for fractions.
    Auto,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Nm => "nm",
            Mode::Cmb => "cmb",
            Mode::Div => "div",
            Mode::Auto => "auto",
        }
    }
}

/// Full configuration for one analysis.
#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub eps: Rat,
    pub delta: Rat,
    pub conf: Rat,
    pub mode: Mode,
    /// Moment order `n` (even, at least 2). Ignored when `sweep` is set.
    pub order: u32,
    pub sweep: bool,
    pub sweep_orders: Vec<u32>,
    /// Wall-clock budget per sweep order, seconds.
    pub timeout_per_order: f64,
    /// Subranges per variable; `None` applies the size-based policy.
    pub partitions: Option<u32>,
    pub no_partition: bool,
    /// Keep the first-order denominator power at 2 even when reducible.
    pub force_q2: bool,
    pub term_cap: usize,
    pub region_cap: usize,
    /// Relative bracket width at which the feasibility search stops.
    pub search_tol: f64,
    /// Upper search bracket as a multiple of the mean-based lower bracket.
    pub range_multiplier: f64,
}

impl AnalysisConfig {
    /// Defaults for a parsed problem (its precision and confidence).
    pub fn for_problem(p: &ProblemSpec) -> Self {
        AnalysisConfig {
            eps: p.eps(),
            delta: p.delta(),
            conf: p.conf(),
            mode: Mode::Auto,
            order: 2,
            sweep: false,
            sweep_orders: DEFAULT_SWEEP_ORDERS.to_vec(),
            timeout_per_order: 90.0,
            partitions: None,
            no_partition: false,
            force_q2: false,
            term_cap: 5_000_000,
            region_cap: 1_000_000,
            search_tol: 1e-3,
            range_multiplier: 1e5,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Timings {
    /// Rounding-model decomposition, rewrite and residual bound, seconds.
    pub decompose_s: f64,
    /// Moment tables plus feasibility search, seconds.
    pub search_s: f64,
    pub total_s: f64,
}

/// The synthesized threshold and everything needed to interpret it.
#[derive(Debug, Clone)]
pub struct ThresholdReport {
    /// Certified total: exceeding probability at most `1 - confidence`.
    pub threshold_total: f64,
    pub threshold_first_order: f64,
    pub threshold_second_order: f64,
    pub mode: &'static str,
    pub order: u32,
    pub partitions: u32,
    pub confidence: f64,
    pub eps: f64,
    pub delta: f64,
    /// Probability bound at the returned first-order point, if a
    /// feasibility search ran.
    pub flag_at_threshold: Option<f64>,
    pub timings: Timings,
    pub diagnostics: Vec<String>,
}

// ---------------------------------------------------------------------------
// Flag evaluation
// ---------------------------------------------------------------------------

struct RegionTable {
    weight: f64,
    /// `m[a][b] = E[p^a * Qeff^(power*b) | region]`, for `a + b <= n`.
    /// With `power == 0` only `m[a][0]` is stored (the factor is exactly 1).
    m: Vec<Vec<f64>>,
    /// Cached centered numerator for the `power == 0` fast path:
    /// `(m1, E[(p - m1)^n])` — independent of the search point.
    central: Option<(f64, f64)>,
}

/// Precomputed per-region moment tables for evaluating the probability
/// bound ("flag") at arbitrary search points. Works in the scale-free
/// variable `v = u / eps`.
pub struct FlagContext {
    n: u32,
    regions: Vec<RegionTable>,
}

impl FlagContext {
    /// Builds tables over a `parts`-per-variable partition (`parts = 1`
    /// reproduces the unpartitioned bound).
    pub fn build(
        p: &Polynomial,
        qeff: Option<&Polynomial>,
        power: u32,
        n: u32,
        dists: &[Distribution],
        parts: u32,
        region_cap: usize,
        budget: &Budget,
    ) -> Result<FlagContext> {
        let regions = partition_regions(dists, parts, region_cap)?;
        Self::build_over(p, qeff, power, n, dists, regions, budget)
    }

    /// Builds a single-region context directly over the full supports,
    /// bypassing the partition machinery.
    pub fn build_unpartitioned(
        p: &Polynomial,
        qeff: Option<&Polynomial>,
        power: u32,
        n: u32,
        dists: &[Distribution],
        budget: &Budget,
    ) -> Result<FlagContext> {
        let full: Vec<SubRange> = dists.iter().map(SubRange::full).collect();
        Self::build_over(p, qeff, power, n, dists, vec![full], budget)
    }

    fn build_over(
        p: &Polynomial,
        qeff: Option<&Polynomial>,
        power: u32,
        n: u32,
        dists: &[Distribution],
        regions: Vec<Vec<SubRange>>,
        budget: &Budget,
    ) -> Result<FlagContext> {
        assert!(n >= 2 && n % 2 == 0, "even order required");
        // Precompute the polynomial table once; regions only differ in the
        // measure, not in the integrand.
        let mut p_pows: Vec<Polynomial> = Vec::with_capacity(n as usize + 1);
        p_pows.push(Polynomial::one());
        for a in 1..=n as usize {
            p_pows.push(p_pows[a - 1].mul(p, budget)?);
        }
        let table_polys: Vec<Vec<Polynomial>> = if power == 0 {
            p_pows.into_iter().map(|pp| vec![pp]).collect()
        } else {
            let q_unit = qeff
                .expect("fraction flag needs a denominator polynomial")
                .pow(power, budget)?;
            let mut q_pows: Vec<Polynomial> = Vec::with_capacity(n as usize + 1);
            q_pows.push(Polynomial::one());
            for b in 1..=n as usize {
                q_pows.push(q_pows[b - 1].mul(&q_unit, budget)?);
            }
            let mut rows = Vec::with_capacity(n as usize + 1);
            for (a, pp) in p_pows.iter().enumerate() {
                let mut row = Vec::with_capacity(n as usize + 1 - a);
                for qb in q_pows.iter().take(n as usize + 1 - a) {
                    row.push(pp.mul(qb, budget)?);
                }
                rows.push(row);
            }
            rows
        };

        let mut tables = Vec::with_capacity(regions.len());
        for region in regions {
            budget.check_time()?;
            let ctx = MomentCtx::with_ranges(dists, region);
            let weight = ctx.weight()?;
            if weight <= 0.0 {
                tables.push(RegionTable { weight: 0.0, m: Vec::new(), central: None });
                continue;
            }
            let mut m: Vec<Vec<f64>> = Vec::with_capacity(table_polys.len());
            for row in &table_polys {
                let mut out = Vec::with_capacity(row.len());
                for poly in row {
                    out.push(ctx.poly_expectation(poly)?);
                }
                m.push(out);
            }
            let central = if power == 0 {
                let m1 = inflate(m[1][0]);
                let mut acc = NeumaierSum::new();
                for a in 0..=n {
                    let c = n - a;
                    let coef = binomial(n, a);
                    acc.add(coef * m[a as usize][0] * neg_pow(m1, c) * sign_pow(c));
                }
                let num = acc.value();
                if !num.is_finite() {
                    return Err(Error::NonFinite("centered flag numerator".into()));
                }
                Some((m1, inflate(num.max(0.0))))
            } else {
                None
            };
            tables.push(RegionTable { weight, m, central });
        }
        Ok(FlagContext { n, regions: tables })
    }

    /// Upper bound on `P[p / Qeff^power >= v]`: the weighted sum of
    /// per-region shifted Markov bounds, each clipped at one.
    pub fn flag(&self, v: f64) -> Result<f64> {
        let mut acc = NeumaierSum::new();
        for rt in &self.regions {
            if rt.weight <= 0.0 {
                continue;
            }
            acc.add(rt.weight * self.local_flag(rt, v)?);
        }
        let total = acc.value();
        if !total.is_finite() {
            return Err(Error::NonFinite("partitioned flag".into()));
        }
        Ok(inflate(total).clamp(0.0, 1.0))
    }

    fn local_flag(&self, rt: &RegionTable, v: f64) -> Result<f64> {
        let n = self.n;
        if let Some((m1, num0)) = rt.central {
            // power == 0: P[p >= v] <= E[(p - m1)^n] / (v - m1)^n.
            let mu = m1 - v;
            if !mu.is_finite() {
                return Err(Error::NonFinite("flag shift".into()));
            }
            if mu >= 0.0 {
                return Ok(1.0);
            }
            let denom = neg_pow(mu, n); // (-mu)^n = (v - m1)^n > 0
            return Ok((num0 / denom).clamp(0.0, 1.0));
        }
        // Shifted Markov for K_v = p - v Qeff^power with estimate mu
        // (any negative shift is valid; the same mu is used throughout).
        let mu = inflate(rt.m[1][0]) - v * deflate(rt.m[0][1]);
        if !mu.is_finite() {
            return Err(Error::NonFinite("flag shift".into()));
        }
        if mu >= 0.0 {
            return Ok(1.0);
        }
        let mut acc = NeumaierSum::new();
        for a in 0..=n {
            for b in 0..=(n - a) {
                let c = n - a - b;
                let coef = multinomial(n, a, b);
                let term = coef
                    * rt.m[a as usize][b as usize]
                    * neg_pow(v, b)
                    * neg_pow(mu, c) // mu < 0 so (-mu)^c > 0... sign below
                    * sign_pow(b);
                acc.add(term);
            }
        }
        let num = acc.value();
        if !num.is_finite() {
            return Err(Error::NonFinite("flag numerator".into()));
        }
        let num = inflate(num.max(0.0));
        let denom = neg_pow(mu, n);
        Ok((num / denom).clamp(0.0, 1.0))
    }
}

fn sign_pow(k: u32) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `|x|^k` with the sign of `(-x)^k` folded out by the caller.
fn neg_pow(x: f64, k: u32) -> f64 {
    (-x).powi(k as i32).abs()
}

fn binomial(n: u32, a: u32) -> f64 {
    factorial(n) / (factorial(a) * factorial(n - a))
}

fn multinomial(n: u32, a: u32, b: u32) -> f64 {
    factorial(n) / (factorial(a) * factorial(b) * factorial(n - a - b))
}

// ---------------------------------------------------------------------------
// Analysis driver
// ---------------------------------------------------------------------------

/// Analyzes a parsed problem under a configuration and produces a certified
/// threshold report.
pub fn analyze(problem: &ProblemSpec, cfg: &AnalysisConfig) -> Result<ThresholdReport> {
    validate_config(cfg)?;
    let structure = classify(&problem.expr);
    let mode = resolve_mode(cfg.mode, &structure)?;
    if cfg.sweep {
        sweep(problem, cfg, mode, &structure)
    } else {
        let budget = Budget::with_term_cap(cfg.term_cap);
        analyze_order(problem, cfg, mode, &structure, cfg.order, &budget)
    }
}

fn validate_config(cfg: &AnalysisConfig) -> Result<()> {
    if cfg.order < 2 || cfg.order % 2 != 0 {
        return Err(Error::invalid("moment order must be even and at least 2"));
    }
    if !cfg.eps.is_positive() {
        return Err(Error::invalid("eps must be positive"));
    }
    if cfg.delta.is_negative() {
        return Err(Error::invalid("delta must be nonnegative"));
    }
    if !cfg.conf.is_positive() || cfg.conf >= Rat::one() {
        return Err(Error::invalid("confidence must lie in (0,1)"));
    }
    if let Some(b) = cfg.partitions {
        if b < 1 {
            return Err(Error::invalid("partitions must be at least 1"));
        }
    }
    if cfg.sweep {
        if cfg.sweep_orders.is_empty() {
            return Err(Error::invalid("sweep order list is empty"));
        }
        if cfg.sweep_orders.iter().any(|&n| n < 2 || n % 2 != 0) {
            return Err(Error::invalid("sweep orders must be even and at least 2"));
        }
    }
    Ok(())
}

fn resolve_mode(mode: Mode, structure: &StructuralForm) -> Result<Mode> {
    if let StructuralForm::Unsupported(reason) = structure {
        return Err(Error::unsupported(reason.clone()));
    }
    let fraction = matches!(structure, StructuralForm::TopFraction { .. });
    match (mode, fraction) {
        (Mode::Auto, false) => Ok(Mode::Cmb),
        (Mode::Auto, true) => Ok(Mode::Div),
        (Mode::Nm | Mode::Cmb, false) => Ok(mode),
        (Mode::Nm | Mode::Cmb, true) => Err(Error::unsupported(format!(
            "mode {} requires a division-free expression",
            mode.as_str()
        ))),
        (Mode::Div, true) => Ok(Mode::Div),
        (Mode::Div, false) => Err(Error::unsupported(
            "mode div requires a top-level fraction",
        )),
    }
}

fn sweep(
    problem: &ProblemSpec,
    cfg: &AnalysisConfig,
    mode: Mode,
    structure: &StructuralForm,
) -> Result<ThresholdReport> {
    let mut best: Option<ThresholdReport> = None;
    let mut notes: Vec<String> = Vec::new();
    for &n in &cfg.sweep_orders {
        let budget =
            Budget::with_term_cap(cfg.term_cap).with_timeout(cfg.timeout_per_order);
        match analyze_order(problem, cfg, mode, structure, n, &budget) {
            Ok(rep) => {
                notes.push(format!(
                    "order {n}: threshold {:.6e}",
                    rep.threshold_total
                ));
                let better = best
                    .as_ref()
                    .map_or(true, |b| rep.threshold_total < b.threshold_total);
                if better {
                    best = Some(rep);
                }
            }
            Err(Error::Timeout(_)) => {
                notes.push(format!("order {n}: timed out; stopping the sweep"));
                break;
            }
            Err(Error::Resource(msg)) => {
                notes.push(format!("order {n}: {msg}; stopping the sweep"));
                break;
            }
            Err(Error::NoFeasible { ell, r }) => {
                notes.push(format!(
                    "order {n}: no feasible threshold in ({ell:.6e}, {r:.6e})"
                ));
            }
            Err(other) => return Err(other),
        }
    }
    match best {
        Some(mut rep) => {
            rep.diagnostics.extend(notes);
            Ok(rep)
        }
        None => Err(Error::SweepExhausted(format!(
            "no order produced a threshold ({})",
            notes.join("; ")
        ))),
    }
}

fn effective_partitions(
    cfg: &AnalysisConfig,
    problem: &ProblemSpec,
    fraction: bool,
    diags: &mut Vec<String>,
) -> u32 {
    if cfg.no_partition {
        return 1;
    }
    if let Some(b) = cfg.partitions {
        return b;
    }
    let nv = problem.vars.len();
    let ops = problem.expr.op_count();
    let b = if nv < 4 && ops < 10 {
        if fraction {
            16
        } else {
            8
        }
    } else {
        1
    };
    if b > 1 {
        let total = (b as u128).checked_pow(nv as u32).unwrap_or(u128::MAX);
        if total > cfg.region_cap as u128 {
            diags.push(format!(
                "partition policy would need {total} regions (cap {}); staying unpartitioned",
                cfg.region_cap
            ));
            return 1;
        }
        diags.push(format!("partition policy chose {b} subranges per variable"));
    }
    b
}

fn analyze_order(
    problem: &ProblemSpec,
    cfg: &AnalysisConfig,
    mode: Mode,
    structure: &StructuralForm,
    n: u32,
    budget: &Budget,
) -> Result<ThresholdReport> {
    let t_start = Instant::now();
    let mut diags: Vec<String> = Vec::new();
    let dists = problem.distributions();
    let signs = problem.sign_classes();
    let eps_up = rat_to_f64(&cfg.eps, Dir::Up);
    let conf_f64 = rat_to_f64(&cfg.conf, Dir::Nearest);
    let slack = deflate(1.0 - conf_f64);
    if cfg.delta > cfg.eps.clone() * cfg.eps.clone() {
        diags.push(
            "delta exceeds eps^2: absolute rounding error may dominate the residual bound"
                .to_string(),
        );
    }

    let bx = VarBox::with_errors(&dists, &cfg.eps, &cfg.delta);
    let fraction = matches!(structure, StructuralForm::TopFraction { .. });

    // Decomposition and residual bound.
    let (p, qeff, power, u2) = match structure {
        StructuralForm::TopFraction { denominator, .. } => {
            let cert = check_denominator_sign(denominator, &dists);
            let ff = taylor_fraction(&problem.expr, budget, cfg.force_q2)?;
            let qeff = match cert {
                SignCertificate::Positive => ff.q0.clone(),
                SignCertificate::Negative => ff.q0.neg(),
                SignCertificate::Indeterminate => {
                    return Err(Error::unsupported(
                        "cannot certify the denominator sign over the input box",
                    ))
                }
            };
            if ff.power < 2 && !cfg.force_q2 {
                diags.push(format!(
                    "common denominator factor reduced; first-order scale power = {}",
                    ff.power
                ));
            }
            let u2 = second_order_bound(&ff.r2_num, &ff.r2_den_factors, &bx)?;
            let p = pn_majorant(&ff.scaled_h, &signs);
            (p, Some(qeff), ff.power, u2)
        }
        _ => {
            // Forward propagation: exact first-order coefficients plus a
            // certified residual bound, without materializing the full error
            // expansion (which grows exponentially with nesting depth).
            let jf = taylor_jet(&problem.expr, &bx, budget)?;
            let u2 = rat_to_f64(&jf.r2_bound, Dir::Up);
            if !u2.is_finite() {
                return Err(Error::NonFinite("residual bound".into()));
            }
            let p = pn_majorant(&jf.h, &signs);
            (p, None, 0u32, u2)
        }
    };
    let t_decompose = t_start.elapsed().as_secs_f64();

    // Degenerate case: no first-order error at all.
    if p.is_zero() {
        let total = next_up_f64(u2);
        return Ok(finish_report(
            0.0, u2, total, mode, n, 1, conf_f64, cfg, None, t_decompose,
            t_start, diags,
        ));
    }

    let parts = match mode {
        Mode::Nm => 1,
        _ => effective_partitions(cfg, problem, fraction, &mut diags),
    };

    let full_ctx = MomentCtx::new(&dists);
    let (v_star, flag_at, used_parts): (f64, Option<f64>, u32) = match mode {
        Mode::Nm => {
            let v = nm_point(&p, n, &full_ctx, slack, budget)?;
            (v, None, 1)
        }
        Mode::Cmb => {
            let v_nm = nm_point(&p, n, &full_ctx, slack, budget)?;
            let fc = FlagContext::build(
                &p, None, 0, n, &dists, parts, cfg.region_cap, budget,
            )?;
            let flag_nm = fc.flag(v_nm)?;
            if flag_nm <= slack {
                let ep = full_ctx.poly_expectation(&p)?;
                let lo = deflate(ep);
                let (v, iters) = search_feasible(&fc, lo, v_nm, slack, cfg.search_tol, budget)?;
                diags.push(format!(
                    "feasibility search over [{:.6e}, {:.6e}] converged in {iters} steps",
                    eps_up * lo,
                    eps_up * v_nm
                ));
                (v, Some(fc.flag(v)?), parts)
            } else {
                diags.push(
                    "centered bound infeasible at the moment-bound point; returning it unchanged"
                        .to_string(),
                );
                (v_nm, Some(flag_nm), parts)
            }
        }
        Mode::Div => {
            let q = qeff.as_ref().expect("fraction path has a denominator");
            let fc = FlagContext::build(
                &p,
                Some(q),
                power,
                n,
                &dists,
                parts,
                cfg.region_cap,
                budget,
            )?;
            let ep = full_ctx.poly_expectation(&p)?;
            let eq = if power == 0 {
                1.0
            } else {
                full_ctx.poly_expectation(&q.pow(power, budget)?)?
            };
            if !(eq > 0.0) {
                return Err(Error::NonFinite("mean denominator scale".into()));
            }
            let v_lo = deflate(ep / eq);
            let v_hi = v_lo * cfg.range_multiplier;
            let (bracket_lo, bracket_hi) = if fc.flag(v_hi)? <= slack {
                (v_lo, v_hi)
            } else {
                // Magnitude scan: ten geometric points per decade across the
                // whole bracket, looking for a feasible pocket.
                let mut found = None;
                let mut prev = v_lo;
                for t in 1..=50 {
                    budget.check_time()?;
                    let v = v_lo * 10f64.powf(f64::from(t) / 10.0);
                    if fc.flag(v)? <= slack {
                        found = Some((prev, v));
                        break;
                    }
                    prev = v;
                }
                match found {
                    Some(pair) => {
                        diags.push(format!(
                            "magnitude scan located a feasible point near {:.6e}",
                            eps_up * pair.1
                        ));
                        pair
                    }
                    None => {
                        return Err(Error::NoFeasible {
                            ell: eps_up * v_lo,
                            r: eps_up * v_hi,
                        })
                    }
                }
            };
            let (v, iters) =
                search_feasible(&fc, bracket_lo, bracket_hi, slack, cfg.search_tol, budget)?;
            diags.push(format!(
                "feasibility search over [{:.6e}, {:.6e}] converged in {iters} steps",
                eps_up * bracket_lo,
                eps_up * bracket_hi
            ));
            (v, Some(fc.flag(v)?), parts)
        }
        Mode::Auto => unreachable!("mode resolved before dispatch"),
    };

    let u1 = eps_up * v_star;
    if !u1.is_finite() {
        return Err(Error::NonFinite("first-order threshold".into()));
    }
    let total = next_up_f64(u1 + u2);
    Ok(finish_report(
        u1, u2, total, mode, n, used_parts, conf_f64, cfg, flag_at, t_decompose,
        t_start, diags,
    ))
}

#[allow(clippy::too_many_arguments)]
fn finish_report(
    u1: f64,
    u2: f64,
    total: f64,
    mode: Mode,
    n: u32,
    parts: u32,
    conf: f64,
    cfg: &AnalysisConfig,
    flag_at: Option<f64>,
    t_decompose: f64,
    t_start: Instant,
    diags: Vec<String>,
) -> ThresholdReport {
    let total_s = t_start.elapsed().as_secs_f64();
    ThresholdReport {
        threshold_total: total,
        threshold_first_order: u1,
        threshold_second_order: u2,
        mode: mode.as_str(),
        order: n,
        partitions: parts,
        confidence: conf,
        eps: rat_to_f64(&cfg.eps, Dir::Nearest),
        delta: rat_to_f64(&cfg.delta, Dir::Nearest),
        flag_at_threshold: flag_at,
        timings: Timings {
            decompose_s: t_decompose,
            search_s: total_s - t_decompose,
            total_s,
        },
        diagnostics: diags,
    }
}

/// The order-n moment point `v = (E[p^n] / slack)^(1/n)` in scale-free
/// units; `P[p >= v] <= slack` by the Markov inequality on `p^n`.
fn nm_point(
    p: &Polynomial,
    n: u32,
    ctx: &MomentCtx,
    slack: f64,
    budget: &Budget,
) -> Result<f64> {
    let pn = p.pow(n, budget)?;
    let mpn = inflate(ctx.poly_expectation(&pn)?.max(0.0));
    let v = (mpn / slack).powf(1.0 / f64::from(n));
    if !v.is_finite() {
        return Err(Error::NonFinite("moment-bound point".into()));
    }
    Ok(v)
}

/// Shrinks a bracket whose upper end is feasible; returns the feasible
/// upper endpoint once the relative width drops below `tol` (or after 60
/// steps). Geometric splitting: brackets can span several decades.
fn search_feasible(
    fc: &FlagContext,
    mut lo: f64,
    mut hi: f64,
    slack: f64,
    tol: f64,
    budget: &Budget,
) -> Result<(f64, u32)> {
    let mut iters = 0u32;
    while iters < 60 {
        budget.check_time()?;
        if hi - lo <= tol * hi {
            break;
        }
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if !(mid > lo && mid < hi) {
            break;
        }
        if fc.flag(mid)? <= slack {
            hi = mid;
        } else {
            lo = mid;
        }
        iters += 1;
    }
    Ok((hi, iters))
}
