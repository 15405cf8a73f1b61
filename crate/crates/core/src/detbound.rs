//! Deterministic worst-case bounds: exact rational interval arithmetic and
//! structural magnitude bounds over the input supports.
//!
//! All interval work is done in exact rational arithmetic and only converted
//! to binary64 at the very end, rounding upward, so reported bounds never
//! understate the enclosure (a bound that falls below the smallest positive
//! double clamps to it rather than to zero).

use num_traits::{Signed, Zero};

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::expr::{BinOp, Expr};
use crate::poly::{Comp, Polynomial, Sym};
use crate::rat::{rat_to_f64, Dir, Rat};

/// Exact rational interval.
pub type Interval = (Rat, Rat);

/// Interval assignments for every symbol kind: per-variable supports plus
/// shared magnitude bounds for the relative (`e`) and absolute (`d`) error
/// symbols.
#[derive(Debug, Clone)]
pub struct VarBox {
    pub xs: Vec<Interval>,
    pub eps: Rat,
    pub delta: Rat,
}

impl VarBox {
    /// Supports only; error symbols pinned to zero.
    pub fn from_supports(dists: &[Distribution]) -> Self {
        VarBox {
            xs: dists.iter().map(|d| (d.a.clone(), d.b.clone())).collect(),
            eps: Rat::zero(),
            delta: Rat::zero(),
        }
    }

    /// Supports plus `|e_i| <= eps`, `|d_i| <= delta`.
    pub fn with_errors(dists: &[Distribution], eps: &Rat, delta: &Rat) -> Self {
        let mut bx = VarBox::from_supports(dists);
        bx.eps = eps.abs();
        bx.delta = delta.abs();
        bx
    }

    fn sym_interval(&self, s: Sym) -> Interval {
        match s {
            Sym::X { var, comp } => {
                let (a, b) = self.xs[var as usize].clone();
                match comp {
                    Comp::Orig => (a, b),
                    Comp::Pos => (pos_part(&a), pos_part(&b)),
                    Comp::Neg => (pos_part(&-b), pos_part(&-a)),
                }
            }
            Sym::E(_) => (-self.eps.clone(), self.eps.clone()),
            Sym::D(_) => (-self.delta.clone(), self.delta.clone()),
        }
    }
}

fn pos_part(r: &Rat) -> Rat {
    if r.is_positive() {
        r.clone()
    } else {
        Rat::zero()
    }
}

fn iadd(a: &Interval, b: &Interval) -> Interval {
    (a.0.clone() + &b.0, a.1.clone() + &b.1)
}

fn isub(a: &Interval, b: &Interval) -> Interval {
    (a.0.clone() - &b.1, a.1.clone() - &b.0)
}

fn ineg(a: &Interval) -> Interval {
    (-a.1.clone(), -a.0.clone())
}

fn imul(a: &Interval, b: &Interval) -> Interval {
    let products = [
        a.0.clone() * &b.0,
        a.0.clone() * &b.1,
        a.1.clone() * &b.0,
        a.1.clone() * &b.1,
    ];
    let lo = products.iter().min().unwrap().clone();
    let hi = products.iter().max().unwrap().clone();
    (lo, hi)
}

/// Interval power with the even-power tightening `[l,h]^2k >= 0`.
fn ipow(a: &Interval, p: u32) -> Interval {
    if p == 0 {
        return (Rat::from_integer(1.into()), Rat::from_integer(1.into()));
    }
    let lo_p = rat_pow(&a.0, p);
    let hi_p = rat_pow(&a.1, p);
    if p % 2 == 1 {
        (lo_p, hi_p)
    } else {
        let hi = lo_p.clone().max(hi_p.clone());
        let lo = if a.0.is_negative() && a.1.is_positive() {
            Rat::zero()
        } else {
            lo_p.min(hi_p)
        };
        (lo, hi)
    }
}

fn rat_pow(r: &Rat, p: u32) -> Rat {
    let mut out = Rat::from_integer(1.into());
    for _ in 0..p {
        out *= r;
    }
    out
}

fn idiv(a: &Interval, b: &Interval) -> Result<Interval> {
    if !b.0.is_positive() && !b.1.is_negative() {
        return Err(Error::invalid("indeterminate denominator: enclosure contains zero"));
    }
    let inv = (Rat::from_integer(1.into()) / b.1.clone(), Rat::from_integer(1.into()) / b.0.clone());
    Ok(imul(a, &inv))
}

/// Natural interval extension of an expression over the box. Exact rational
/// endpoints; fails only when a denominator enclosure contains zero.
pub fn interval_eval(e: &Expr, bx: &VarBox) -> Result<Interval> {
    match e {
        Expr::Const(c) => Ok((c.clone(), c.clone())),
        Expr::Var(v) => Ok(bx.xs[*v as usize].clone()),
        Expr::Neg(inner) => Ok(ineg(&interval_eval(inner, bx)?)),
        Expr::Bin(op, l, r) => {
            let a = interval_eval(l, bx)?;
            let b = interval_eval(r, bx)?;
            match op {
                BinOp::Add => Ok(iadd(&a, &b)),
                BinOp::Sub => Ok(isub(&a, &b)),
                BinOp::Mul => Ok(imul(&a, &b)),
                BinOp::Div | BinOp::DivFold => idiv(&a, &b),
            }
        }
    }
}

/// Natural interval extension of a canonical polynomial (termwise).
pub fn interval_eval_poly(p: &Polynomial, bx: &VarBox) -> Interval {
    let mut total = (Rat::zero(), Rat::zero());
    for t in p.terms() {
        let mut iv = (t.coef.clone(), t.coef.clone());
        for (s, pw) in &t.mono {
            iv = imul(&iv, &ipow(&bx.sym_interval(*s), *pw));
        }
        total = iadd(&total, &iv);
    }
    total
}

fn max_abs(iv: &Interval) -> Rat {
    iv.0.abs().max(iv.1.abs())
}

/// Structural magnitude bound of a polynomial: `sum_j |c_j| prod max|sym|^p`.
/// Always dominates `sup |p|` over the box.
pub fn struct_bound_poly(p: &Polynomial, bx: &VarBox) -> Rat {
    let mut total = Rat::zero();
    for t in p.terms() {
        let mut v = t.coef.abs();
        for (s, pw) in &t.mono {
            let m = max_abs(&bx.sym_interval(*s));
            v *= rat_pow(&m, *pw);
        }
        total += v;
    }
    total
}

/// Structural magnitude bound by expression recursion: constants contribute
/// their magnitude, variables the larger support endpoint magnitude, sums
/// and differences add, products multiply, folded constant divisions divide
/// by the divisor magnitude. Non-constant division is not handled here.
pub fn struct_bound_expr(e: &Expr, bx: &VarBox) -> Result<Rat> {
    match e {
        Expr::Const(c) => Ok(c.abs()),
        Expr::Var(v) => Ok(max_abs(&bx.xs[*v as usize])),
        Expr::Neg(inner) => struct_bound_expr(inner, bx),
        Expr::Bin(op, l, r) => {
            let a = struct_bound_expr(l, bx)?;
            match op {
                BinOp::Add | BinOp::Sub => Ok(a + struct_bound_expr(r, bx)?),
                BinOp::Mul => Ok(a * struct_bound_expr(r, bx)?),
                BinOp::DivFold => match &**r {
                    Expr::Const(c) if !c.is_zero() => Ok(a / c.abs()),
                    _ => Err(Error::invalid("folded division with non-constant divisor")),
                },
                BinOp::Div => Err(Error::unsupported(
                    "structural bound over a non-constant division",
                )),
            }
        }
    }
}

/// Upper bound on `|num / prod_k f_k^(m_k)|` over the box: structural bound
/// of the numerator divided by certified lower bounds on each denominator
/// factor's magnitude. The rational result converts upward to binary64.
pub fn second_order_bound(
    num: &Polynomial,
    den_factors: &[(Polynomial, u32)],
    bx: &VarBox,
) -> Result<f64> {
    let mut bound = struct_bound_poly(num, bx);
    for (f, mult) in den_factors {
        let iv = interval_eval_poly(f, bx);
        let lb = if iv.0.is_positive() {
            iv.0
        } else if iv.1.is_negative() {
            -iv.1
        } else {
            return Err(Error::invalid(
                "indeterminate denominator: enclosure contains zero",
            ));
        };
        bound /= rat_pow(&lb, *mult);
    }
    Ok(rat_to_f64(&bound, Dir::Up))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use crate::poly::Budget;
    use crate::rat::pow2;
    use std::collections::BTreeMap;

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(n.into(), d.into())
    }

    fn unit_box(n: usize) -> VarBox {
        let dists: Vec<Distribution> = (0..n)
            .map(|_| Distribution::uniform(rat(-1, 1), rat(1, 1)))
            .collect();
        VarBox::from_supports(&dists)
    }

    #[test]
    fn shifted_denominator_encloses_tightly() {
        let names: BTreeMap<String, u32> = [("x3".into(), 0u32)].into();
        let e = parse_expr("x3 + 5", &names).unwrap();
        let iv = interval_eval(&e, &unit_box(1)).unwrap();
        assert_eq!(iv, (rat(4, 1), rat(6, 1)));
    }

    #[test]
    fn division_through_zero_is_rejected() {
        let names: BTreeMap<String, u32> = [("x".into(), 0u32)].into();
        let e = parse_expr("(x + 2)/x", &names).unwrap();
        let err = interval_eval(&e, &unit_box(1)).unwrap_err();
        assert!(err.to_string().contains("indeterminate"), "{err}");
    }

    #[test]
    fn difference_bound_is_two_on_unit_supports() {
        let names: BTreeMap<String, u32> = [("x".into(), 0u32), ("y".into(), 1u32)].into();
        let e = parse_expr("x - y", &names).unwrap();
        assert_eq!(struct_bound_expr(&e, &unit_box(2)).unwrap(), rat(2, 1));
    }

    #[test]
    fn even_powers_tighten_to_zero() {
        let bx = VarBox {
            xs: vec![(rat(-2, 1), rat(3, 1))],
            eps: Rat::zero(),
            delta: Rat::zero(),
        };
        let b = Budget::default();
        let sq = Polynomial::sym(Sym::x(0)).pow(2, &b).unwrap();
        assert_eq!(interval_eval_poly(&sq, &bx), (rat(0, 1), rat(9, 1)));
    }

    #[test]
    fn residual_structural_bound_matches_closed_form() {
        // Residual shape d0 + d1 + x0*x1*e0*e1 + d0*e1 on unit supports:
        // bound = 2*delta + eps^2 + eps*delta exactly.
        let eps = pow2(-24);
        let delta = pow2(-150);
        let dists: Vec<Distribution> = (0..2)
            .map(|_| Distribution::uniform(rat(-1, 1), rat(1, 1)))
            .collect();
        let bx = VarBox::with_errors(&dists, &eps, &delta);
        let r2 = Polynomial::from_raw_terms(vec![
            (rat(1, 1), vec![(Sym::D(0), 1)]),
            (rat(1, 1), vec![(Sym::D(1), 1)]),
            (rat(1, 1), vec![(Sym::x(0), 1), (Sym::x(1), 1), (Sym::E(0), 1), (Sym::E(1), 1)]),
            (rat(1, 1), vec![(Sym::D(0), 1), (Sym::E(1), 1)]),
        ]);
        let got = struct_bound_poly(&r2, &bx);
        let want = rat(2, 1) * &delta + eps.clone() * &eps + eps * delta;
        assert_eq!(got, want);
        // Upward conversion stays an upper bound and lands near 2^-48.
        let f = rat_to_f64(&got, Dir::Up);
        assert!(crate::rat::rat_from_f64(f) >= want);
        assert!(f >= 2f64.powi(-48) && f < 3.6e-15);
    }

    #[test]
    fn fraction_bound_divides_by_certified_factor_magnitude() {
        // num = x0, factor = x1 + 5 over [-1,1]: |x0/(x1+5)^2| <= 1/16.
        let bx = unit_box(2);
        let num = Polynomial::sym(Sym::x(0));
        let factor = Polynomial::sym(Sym::x(1)).add(&Polynomial::constant(rat(5, 1)));
        let got = second_order_bound(&num, &[(factor.clone(), 2)], &bx).unwrap();
        assert!((got - 1.0 / 16.0).abs() <= f64::EPSILON);

        // A factor whose enclosure spans zero is rejected.
        let spanning = Polynomial::sym(Sym::x(1));
        assert!(second_order_bound(&num, &[(spanning, 1)], &bx).is_err());
    }

    #[test]
    fn tiny_bounds_clamp_up_to_subnormals() {
        let bx = VarBox {
            xs: vec![],
            eps: Rat::zero(),
            delta: Rat::zero(),
        };
        let p = Polynomial::constant(pow2(-1100));
        let b = second_order_bound(&p, &[], &bx).unwrap();
        assert!(b > 0.0, "upper bound must not collapse to zero");
    }
}
