//! Problem files and arithmetic expressions.
//!
//! A problem file declares input variables with distributions and one target
//! expression; this module parses it into a checked [`ProblemSpec`],
//! normalizes the expression (constant folding, tagging of divisions by
//! constants) and classifies its structural form for the downstream analysis.
//!
//! Grammar (one directive per line, `#` starts a comment):
//!
//! ```text
//! prec single | prec double | prec eps=<rational> delta=<rational>
//! conf <rational in (0,1)>
//! var <ident> uniform(<a>, <b>)
//! var <ident> normal(<a>, <b>)
//! var <ident> laplace(<a>, <b>, <sigma>)
//! expr <expression over +, -, *, /, parentheses, identifiers, literals>
//! ```
//!
//! Exactly one `expr` line is required; `prec` and `conf` default to
//! `single` and `0.99`. Numeric literals are exact rationals: decimal,
//! scientific, hexadecimal-float (`0x1p-24`) and fraction (`1/3`) forms.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};

use crate::dist::{Distribution, SignClass};
use crate::error::{Error, Result};
use crate::rat::{parse_rational, pow2, rat_to_f64, Dir, Rat};

pub type VarId = u32;

/// Binary operations. `DivFold` is a division whose denominator folded to a
/// constant at parse time: classification treats it as division-free
/// (multiplication by the reciprocal rational), but it still counts as one
/// rounded operation, so the floating-point model emits its error variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    DivFold,
}

/// Arithmetic expression over declared variables and exact rational
/// constants. Unary minus is kept structurally but never rounds (sign flips
/// are exact in IEEE arithmetic).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Rat),
    Var(VarId),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

/// Structural form of a normalized expression.
#[derive(Debug, Clone, PartialEq)]
pub enum StructuralForm {
    /// No non-constant division anywhere.
    DivisionFree,
    /// Exactly the root is a division with non-constant denominator and both
    /// children are division-free.
    TopFraction { numerator: Expr, denominator: Expr },
    /// Anything else (e.g. nested non-constant division).
    Unsupported(String),
}

/// One declared input variable.
#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub name: String,
    pub dist: Distribution,
}

/// A parsed and validated problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    /// Declaration order defines `VarId`s (0-based).
    pub vars: Vec<VarDecl>,
    pub expr: Expr,
    /// Precision override; `None` means the single-precision preset.
    pub eps: Option<Rat>,
    pub delta: Option<Rat>,
    /// Confidence override; `None` means 0.99.
    pub conf: Option<Rat>,
}

/// Single-precision unit round-off 2^-24.
pub fn eps_single() -> Rat {
    pow2(-24)
}
/// Single-precision absolute error floor 2^-150.
pub fn delta_single() -> Rat {
    pow2(-150)
}
/// Double-precision unit round-off 2^-53.
pub fn eps_double() -> Rat {
    pow2(-53)
}
/// Double-precision absolute error floor 2^-1075.
pub fn delta_double() -> Rat {
    pow2(-1075)
}

impl ProblemSpec {
    pub fn eps(&self) -> Rat {
        self.eps.clone().unwrap_or_else(eps_single)
    }
    pub fn delta(&self) -> Rat {
        self.delta.clone().unwrap_or_else(delta_single)
    }
    pub fn conf(&self) -> Rat {
        self.conf.clone().unwrap_or_else(|| Rat::new(99.into(), 100.into()))
    }
    pub fn distributions(&self) -> Vec<Distribution> {
        self.vars.iter().map(|v| v.dist.clone()).collect()
    }
    pub fn sign_classes(&self) -> Vec<SignClass> {
        self.vars.iter().map(|v| v.dist.sign_class()).collect()
    }
    pub fn var_names(&self) -> Vec<String> {
        self.vars.iter().map(|v| v.name.clone()).collect()
    }
}

impl Expr {
    pub fn constant(r: Rat) -> Expr {
        Expr::Const(r)
    }
    pub fn var(id: VarId) -> Expr {
        Expr::Var(id)
    }
    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Bin(op, Box::new(l), Box::new(r))
    }

    /// Number of rounded operations (every `Bin`, including folded constant
    /// divisions; `Neg` is exact and free).
    pub fn op_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 0,
            Expr::Neg(e) => e.op_count(),
            Expr::Bin(_, l, r) => 1 + l.op_count() + r.op_count(),
        }
    }

    /// True when the subtree references no variable.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Var(_) => false,
            Expr::Neg(e) => e.is_constant(),
            Expr::Bin(_, l, r) => l.is_constant() && r.is_constant(),
        }
    }

    /// True when no non-constant division occurs in the subtree.
    pub fn is_division_free(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var(_) => true,
            Expr::Neg(e) => e.is_division_free(),
            Expr::Bin(BinOp::Div, _, _) => false,
            Expr::Bin(_, l, r) => l.is_division_free() && r.is_division_free(),
        }
    }

    /// Collects referenced variable ids (sorted, deduplicated).
    pub fn variables(&self) -> Vec<VarId> {
        let mut ids = Vec::new();
        self.collect_vars(&mut ids);
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    fn collect_vars(&self, out: &mut Vec<VarId>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => out.push(*v),
            Expr::Neg(e) => e.collect_vars(out),
            Expr::Bin(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    /// Exact rational evaluation; `None` on division by zero.
    pub fn eval_rat(&self, env: &[Rat]) -> Option<Rat> {
        match self {
            Expr::Const(c) => Some(c.clone()),
            Expr::Var(v) => Some(env[*v as usize].clone()),
            Expr::Neg(e) => e.eval_rat(env).map(|v| -v),
            Expr::Bin(op, l, r) => {
                let a = l.eval_rat(env)?;
                let b = r.eval_rat(env)?;
                match op {
                    BinOp::Add => Some(a + b),
                    BinOp::Sub => Some(a - b),
                    BinOp::Mul => Some(a * b),
                    BinOp::Div | BinOp::DivFold => {
                        if b.is_zero() {
                            None
                        } else {
                            Some(a / b)
                        }
                    }
                }
            }
        }
    }

    /// Binary64 evaluation of the mathematical value (each step rounded to
    /// nearest, as any double evaluation would).
    pub fn eval_f64(&self, env: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => rat_to_f64(c, Dir::Nearest),
            Expr::Var(v) => env[*v as usize],
            Expr::Neg(e) => -e.eval_f64(env),
            Expr::Bin(op, l, r) => {
                let a = l.eval_f64(env);
                let b = r.eval_f64(env);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div | BinOp::DivFold => a / b,
                }
            }
        }
    }

    /// Display adapter mapping variable ids to names.
    pub fn display<'a>(&'a self, names: &'a [String]) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, names }
    }
}

/// Normalizes a raw parse tree: folds every variable-free subtree to an exact
/// constant, rewrites `Neg(Const)` into signed constants, and tags divisions
/// whose denominator folded to a constant as [`BinOp::DivFold`].
///
/// Folding a whole constant subtree drops its (compile-time) operations;
/// operations with at least one variable operand are runtime operations and
/// are always preserved.
fn normalize(e: Expr) -> Result<Expr> {
    if e.is_constant() {
        let v = e
            .eval_rat(&[])
            .ok_or_else(|| Error::invalid("division by zero in constant expression"))?;
        return Ok(Expr::Const(v));
    }
    Ok(match e {
        Expr::Const(_) | Expr::Var(_) => e,
        Expr::Neg(inner) => Expr::Neg(Box::new(normalize(*inner)?)),
        Expr::Bin(op, l, r) => {
            let l = normalize(*l)?;
            let r = normalize(*r)?;
            if op == BinOp::Div {
                if let Expr::Const(c) = &r {
                    if c.is_zero() {
                        return Err(Error::invalid("division by zero constant"));
                    }
                    return Ok(Expr::bin(BinOp::DivFold, l, r));
                }
            }
            Expr::bin(op, l, r)
        }
    })
}

/// Classifies a normalized expression.
///
/// Total and deterministic; `Unsupported` is a value, not an error. The
/// returned `TopFraction` children contain no non-constant division.
pub fn classify(expr: &Expr) -> StructuralForm {
    if expr.is_division_free() {
        return StructuralForm::DivisionFree;
    }
    if let Expr::Bin(BinOp::Div, l, r) = expr {
        if l.is_division_free() && r.is_division_free() {
            return StructuralForm::TopFraction {
                numerator: (**l).clone(),
                denominator: (**r).clone(),
            };
        }
        return StructuralForm::Unsupported("nested non-constant division".into());
    }
    StructuralForm::Unsupported(
        "non-constant division occurs below the expression root".into(),
    )
}

/// Sign certificate for a division-free denominator over the support box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignCertificate {
    Positive,
    Negative,
    Indeterminate,
}

/// Certifies the sign of `q` over the variables' support boxes using the
/// interval evaluator: `Positive` iff the enclosure's lower bound is > 0,
/// `Negative` iff its upper bound is < 0.
pub fn check_denominator_sign(q: &Expr, dists: &[Distribution]) -> SignCertificate {
    let bx = crate::detbound::VarBox::from_supports(dists);
    match crate::detbound::interval_eval(q, &bx) {
        Ok((lo, hi)) => {
            if lo.is_positive() {
                SignCertificate::Positive
            } else if hi.is_negative() {
                SignCertificate::Negative
            } else {
                SignCertificate::Indeterminate
            }
        }
        Err(_) => SignCertificate::Indeterminate,
    }
}

// ---------------------------------------------------------------------------
// Pretty printing
// ---------------------------------------------------------------------------

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self.expr, self.names, 0)
    }
}

fn prec_of(e: &Expr) -> u8 {
    match e {
        Expr::Const(c) => {
            if c.is_negative() {
                2
            } else {
                3
            }
        }
        Expr::Var(_) => 3,
        Expr::Neg(_) => 2,
        Expr::Bin(BinOp::Add | BinOp::Sub, _, _) => 0,
        Expr::Bin(_, _, _) => 1,
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, names: &[String], min: u8) -> fmt::Result {
    let p = prec_of(e);
    let parens = p < min;
    if parens {
        write!(f, "(")?;
    }
    match e {
        Expr::Const(c) => write_rat(f, c)?,
        Expr::Var(v) => write!(f, "{}", names[*v as usize])?,
        Expr::Neg(inner) => {
            write!(f, "-")?;
            write_expr(f, inner, names, 3)?;
        }
        Expr::Bin(op, l, r) => {
            let (lvl, sym) = match op {
                BinOp::Add => (0, " + "),
                BinOp::Sub => (0, " - "),
                BinOp::Mul => (1, "*"),
                BinOp::Div | BinOp::DivFold => (1, "/"),
            };
            write_expr(f, l, names, lvl)?;
            write!(f, "{sym}")?;
            write_expr(f, r, names, lvl + 1)?;
        }
    }
    if parens {
        write!(f, ")")?;
    }
    Ok(())
}

/// Writes a rational so the expression grammar reparses it to the same value:
/// plain integers directly, everything else as a parenthesized fraction.
fn write_rat(f: &mut fmt::Formatter<'_>, r: &Rat) -> fmt::Result {
    if r.is_integer() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "({}/{})", r.numer(), r.denom())
    }
}

// ---------------------------------------------------------------------------
// Expression parser (tokens + recursive descent)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LPar,
    RPar,
}

fn tokenize(src: &str) -> std::result::Result<Vec<(Tok, usize)>, (usize, String)> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let col = i + 1;
        match c {
            b' ' | b'\t' => i += 1,
            b'+' => {
                toks.push((Tok::Plus, col));
                i += 1;
            }
            b'-' => {
                toks.push((Tok::Minus, col));
                i += 1;
            }
            b'*' => {
                toks.push((Tok::Star, col));
                i += 1;
            }
            b'/' => {
                toks.push((Tok::Slash, col));
                i += 1;
            }
            b'(' => {
                toks.push((Tok::LPar, col));
                i += 1;
            }
            b')' => {
                toks.push((Tok::RPar, col));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                let hex = bytes[i] == b'0'
                    && i + 1 < bytes.len()
                    && (bytes[i + 1] == b'x' || bytes[i + 1] == b'X');
                if hex {
                    i += 2;
                    while i < bytes.len()
                        && (bytes[i].is_ascii_hexdigit() || bytes[i] == b'.')
                    {
                        i += 1;
                    }
                    if i < bytes.len() && (bytes[i] == b'p' || bytes[i] == b'P') {
                        i += 1;
                        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                            i += 1;
                        }
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                } else {
                    while i < bytes.len()
                        && (bytes[i].is_ascii_digit() || bytes[i] == b'.')
                    {
                        i += 1;
                    }
                    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                        // scientific exponent only if followed by digits (with sign)
                        let mut j = i + 1;
                        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                            j += 1;
                        }
                        if j < bytes.len() && bytes[j].is_ascii_digit() {
                            i = j;
                            while i < bytes.len() && bytes[i].is_ascii_digit() {
                                i += 1;
                            }
                        }
                    }
                }
                toks.push((Tok::Num(src[start..i].to_string()), col));
            }
            b'A'..=b'Z' | b'a'..=b'z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((Tok::Ident(src[start..i].to_string()), col));
            }
            _ => return Err((col, format!("unexpected character `{}`", c as char))),
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a BTreeMap<String, VarId>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }
    fn col(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|(_, c)| *c)
            .unwrap_or_else(|| self.toks.last().map(|(_, c)| c + 1).unwrap_or(1))
    }
    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn parse_sum(&mut self) -> std::result::Result<Expr, (usize, String)> {
        let mut acc = self.parse_product()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    let rhs = self.parse_product()?;
                    acc = Expr::bin(BinOp::Add, acc, rhs);
                }
                Some(Tok::Minus) => {
                    self.bump();
                    let rhs = self.parse_product()?;
                    acc = Expr::bin(BinOp::Sub, acc, rhs);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_product(&mut self) -> std::result::Result<Expr, (usize, String)> {
        let mut acc = self.parse_unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    let rhs = self.parse_unary()?;
                    acc = Expr::bin(BinOp::Mul, acc, rhs);
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let rhs = self.parse_unary()?;
                    acc = Expr::bin(BinOp::Div, acc, rhs);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_unary(&mut self) -> std::result::Result<Expr, (usize, String)> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.bump();
                Ok(Expr::Neg(Box::new(self.parse_unary()?)))
            }
            Some(Tok::Plus) => {
                self.bump();
                self.parse_unary()
            }
            _ => self.parse_atom(),
        }
    }

    fn parse_atom(&mut self) -> std::result::Result<Expr, (usize, String)> {
        let col = self.col();
        match self.bump() {
            Some(Tok::Num(text)) => parse_rational(&text)
                .map(Expr::Const)
                .map_err(|e| (col, e.to_string())),
            Some(Tok::Ident(name)) => match self.vars.get(&name) {
                Some(id) => Ok(Expr::Var(*id)),
                None => Err((col, format!("undeclared variable {name}"))),
            },
            Some(Tok::LPar) => {
                let inner = self.parse_sum()?;
                match self.bump() {
                    Some(Tok::RPar) => Ok(inner),
                    _ => Err((col, "unbalanced parenthesis".into())),
                }
            }
            other => Err((col, format!("expected operand, found {other:?}"))),
        }
    }
}

/// Parses one arithmetic expression against a name → id map and normalizes
/// it. Errors carry a column offset in the message.
pub fn parse_expr(src: &str, vars: &BTreeMap<String, VarId>) -> Result<Expr> {
    let toks = tokenize(src).map_err(|(col, msg)| Error::Parse {
        line: 0,
        msg: format!("column {col}: {msg}"),
    })?;
    if toks.is_empty() {
        return Err(Error::Parse { line: 0, msg: "empty expression".into() });
    }
    let mut p = Parser { toks, pos: 0, vars };
    let e = p.parse_sum().map_err(|(col, msg)| Error::Parse {
        line: 0,
        msg: format!("column {col}: {msg}"),
    })?;
    if p.pos != p.toks.len() {
        return Err(Error::Parse {
            line: 0,
            msg: format!("column {}: trailing input", p.col()),
        });
    }
    normalize(e)
}

// ---------------------------------------------------------------------------
// Problem-file parser
// ---------------------------------------------------------------------------

/// Parses a whole problem document.
pub fn parse_problem(text: &str) -> Result<ProblemSpec> {
    let mut vars: Vec<VarDecl> = Vec::new();
    let mut name_map: BTreeMap<String, VarId> = BTreeMap::new();
    let mut expr_line: Option<(usize, String)> = None;
    let mut eps: Option<Rat> = None;
    let mut delta: Option<Rat> = None;
    let mut conf: Option<Rat> = None;
    let mut saw_prec = false;
    let mut saw_conf = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (directive, rest) = match line.split_once(char::is_whitespace) {
            Some((d, r)) => (d, r.trim()),
            None => (line, ""),
        };
        let perr = |msg: String| Error::Parse { line: line_no, msg };
        match directive {
            "prec" => {
                if saw_prec {
                    return Err(perr("duplicate prec directive".into()));
                }
                saw_prec = true;
                match rest {
                    "single" => {
                        eps = Some(eps_single());
                        delta = Some(delta_single());
                    }
                    "double" => {
                        eps = Some(eps_double());
                        delta = Some(delta_double());
                    }
                    _ => {
                        let (e, d) = parse_prec_pair(rest).map_err(&perr)?;
                        if !e.is_positive() {
                            return Err(perr("eps must be positive".into()));
                        }
                        if d.is_negative() {
                            return Err(perr("delta must be nonnegative".into()));
                        }
                        eps = Some(e);
                        delta = Some(d);
                    }
                }
            }
            "conf" => {
                if saw_conf {
                    return Err(perr("duplicate conf directive".into()));
                }
                saw_conf = true;
                let c = parse_rational(rest)
                    .map_err(|e| perr(e.to_string()))?;
                if !c.is_positive() || c >= Rat::from_integer(1.into()) {
                    return Err(perr("confidence must lie in (0,1)".into()));
                }
                conf = Some(c);
            }
            "var" => {
                let decl = parse_var_decl(rest).map_err(&perr)?;
                if name_map.contains_key(&decl.name) {
                    return Err(perr(format!("duplicate variable declaration {}", decl.name)));
                }
                name_map.insert(decl.name.clone(), vars.len() as VarId);
                vars.push(decl);
            }
            "expr" => {
                if expr_line.is_some() {
                    return Err(perr("more than one expr directive".into()));
                }
                if rest.is_empty() {
                    return Err(perr("empty expression".into()));
                }
                expr_line = Some((line_no, rest.to_string()));
            }
            other => return Err(perr(format!("unknown directive `{other}`"))),
        }
    }

    let (expr_ln, expr_src) = expr_line
        .ok_or_else(|| Error::Parse { line: text.lines().count(), msg: "missing expr directive".into() })?;
    let expr = parse_expr(&expr_src, &name_map).map_err(|e| match e {
        Error::Parse { msg, .. } => Error::Parse { line: expr_ln, msg },
        other => other,
    })?;

    Ok(ProblemSpec { vars, expr, eps, delta, conf })
}

fn parse_prec_pair(rest: &str) -> std::result::Result<(Rat, Rat), String> {
    let mut eps = None;
    let mut delta = None;
    for tok in rest.split_whitespace() {
        if let Some(v) = tok.strip_prefix("eps=") {
            eps = Some(parse_rational(v).map_err(|e| e.to_string())?);
        } else if let Some(v) = tok.strip_prefix("delta=") {
            delta = Some(parse_rational(v).map_err(|e| e.to_string())?);
        } else {
            return Err(format!("expected eps=<r> delta=<r>, found `{tok}`"));
        }
    }
    match (eps, delta) {
        (Some(e), Some(d)) => Ok((e, d)),
        _ => Err("prec needs both eps=<r> and delta=<r>".into()),
    }
}

fn parse_var_decl(rest: &str) -> std::result::Result<VarDecl, String> {
    let (name, spec) = rest
        .split_once(char::is_whitespace)
        .ok_or_else(|| "expected `var <ident> <family>(<args>)`".to_string())?;
    if !is_ident(name) {
        return Err(format!("invalid variable name `{name}`"));
    }
    let spec = spec.trim();
    let open = spec.find('(').ok_or_else(|| "missing `(` in distribution".to_string())?;
    let close = spec.rfind(')').ok_or_else(|| "missing `)` in distribution".to_string())?;
    if close < open || !spec[close + 1..].trim().is_empty() {
        return Err("malformed distribution arguments".into());
    }
    let family = spec[..open].trim();
    let args: Vec<&str> = spec[open + 1..close].split(',').map(str::trim).collect();
    let parse_arg = |i: usize| -> std::result::Result<Rat, String> {
        args.get(i)
            .ok_or_else(|| "missing distribution argument".to_string())
            .and_then(|s| parse_rational(s).map_err(|e| e.to_string()))
    };
    let dist = match family {
        "uniform" | "normal" => {
            if args.len() != 2 {
                return Err(format!("{family} takes 2 arguments"));
            }
            let a = parse_arg(0)?;
            let b = parse_arg(1)?;
            if a >= b {
                return Err("bounds must satisfy a < b".into());
            }
            if family == "uniform" {
                Distribution::uniform(a, b)
            } else {
                Distribution::trunc_normal(a, b)
            }
        }
        "laplace" => {
            if args.len() != 3 {
                return Err("laplace takes 3 arguments".into());
            }
            let a = parse_arg(0)?;
            let b = parse_arg(1)?;
            let sigma = parse_arg(2)?;
            if a >= b {
                return Err("bounds must satisfy a < b".into());
            }
            if !sigma.is_positive() {
                return Err("sigma must be positive".into());
            }
            Distribution::trunc_laplace(a, b, sigma)
        }
        other => return Err(format!("unknown distribution family `{other}`")),
    };
    Ok(VarDecl { name: name.to_string(), dist })
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}
