//! Integer programs, branching disjunctions, the text instance format and an
//! exhaustive enumeration oracle.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{dot, LpProblem, LpRow, Sense, FEAS_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowOrigin {
    Original,
    Branch,
    Cut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
    pub origin: RowOrigin,
}

impl LinearConstraint {
    pub fn new(coeffs: Vec<f64>, sense: Sense, rhs: f64, origin: RowOrigin) -> Self {
        LinearConstraint { coeffs, sense, rhs, origin }
    }

    pub fn is_satisfied(&self, x: &[f64], tol: f64) -> bool {
        self.sense.holds(dot(&self.coeffs, x), self.rhs, tol)
    }
}

/// `max objective·x` over `0 <= x <= var_upper`, rows, and integrality on the mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpInstance {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<LinearConstraint>,
    pub var_upper: Vec<i64>,
    pub integral: Vec<bool>,
}

/// Integer disjunction `pi·x <= pi0` or `pi·x >= pi0 + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Disjunction {
    pub pi: Vec<i64>,
    pub pi0: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchSide {
    Down,
    Up,
}

impl Disjunction {
    pub fn new(pi: Vec<i64>, pi0: i64) -> Result<Self> {
        if pi.iter().all(|&v| v == 0) {
            return Err(Error::InvalidInput("disjunction normal is all zero".into()));
        }
        Ok(Disjunction { pi, pi0 })
    }

    /// Unit disjunction on variable `var` splitting at `floor`.
    pub fn single(num_vars: usize, var: usize, floor: i64) -> Self {
        let mut pi = vec![0; num_vars];
        pi[var] = 1;
        Disjunction { pi, pi0: floor }
    }

    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.pi.iter().zip(x).map(|(&p, &v)| p as f64 * v).sum()
    }

    pub fn row(&self, side: BranchSide) -> LinearConstraint {
        let coeffs = self.pi.iter().map(|&p| p as f64).collect();
        match side {
            BranchSide::Down => LinearConstraint::new(coeffs, Sense::Le, self.pi0 as f64, RowOrigin::Branch),
            BranchSide::Up => LinearConstraint::new(coeffs, Sense::Ge, (self.pi0 + 1) as f64, RowOrigin::Branch),
        }
    }
}

impl IpInstance {
    /// Pure binary program with the given objective and rows.
    pub fn binary(objective: Vec<f64>, constraints: Vec<LinearConstraint>) -> Result<Self> {
        let n = objective.len();
        let ip = IpInstance { num_vars: n, objective, constraints, var_upper: vec![1; n], integral: vec![true; n] };
        ip.validate()?;
        Ok(ip)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars;
        if n == 0 {
            return Err(Error::InvalidInput("instance has no variables".into()));
        }
        for (what, len) in [
            ("objective", self.objective.len()),
            ("var_upper", self.var_upper.len()),
            ("integral", self.integral.len()),
        ] {
            if len != n {
                return Err(Error::Dimension(format!("{what} has {len} entries, expected {n}")));
            }
        }
        if self.var_upper.iter().any(|&u| u < 0) {
            return Err(Error::InvalidInput("negative variable upper bound".into()));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite objective".into()));
        }
        for (r, row) in self.constraints.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(Error::Dimension(format!("row {r} has {} coefficients, expected {n}", row.coeffs.len())));
            }
            if !row.rhs.is_finite() || row.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(Error::InvalidInput(format!("row {r} has non-finite data")));
            }
        }
        Ok(())
    }

    pub fn with_rows(&self, rows: impl IntoIterator<Item = LinearConstraint>) -> IpInstance {
        let mut out = self.clone();
        out.constraints.extend(rows);
        out
    }

    /// True iff `x` lies in the box, satisfies every row, and is integral on the mask.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.num_vars
            && x.iter().zip(&self.var_upper).all(|(&v, &u)| v >= -tol && v <= u as f64 + tol)
            && x.iter().zip(&self.integral).all(|(&v, &m)| !m || (v - v.round()).abs() <= tol)
            && self.constraints.iter().all(|c| c.is_satisfied(x, tol))
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }
}

/// LP relaxation: integrality dropped, bounds `[0, var_upper]`.
pub fn relax(ip: &IpInstance) -> LpProblem {
    LpProblem {
        num_vars: ip.num_vars,
        objective: ip.objective.clone(),
        constraints: ip
            .constraints
            .iter()
            .map(|c| LpRow { coeffs: c.coeffs.clone(), sense: c.sense, rhs: c.rhs })
            .collect(),
        bounds: ip.var_upper.iter().map(|&u| (0.0, u as f64)).collect(),
    }
}

/// Child subproblem on one side of `d`; the parent is left untouched.
pub fn apply_branch(ip: &IpInstance, d: &Disjunction, side: BranchSide) -> Result<IpInstance> {
    if d.pi.len() != ip.num_vars {
        return Err(Error::Dimension(format!(
            "disjunction has {} coefficients, instance has {} vars",
            d.pi.len(),
            ip.num_vars
        )));
    }
    if d.pi.iter().all(|&v| v == 0) {
        return Err(Error::InvalidInput("disjunction normal is all zero".into()));
    }
    Ok(ip.with_rows([d.row(side)]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpSolution {
    pub status: IpStatus,
    pub objective: Option<f64>,
    pub solution: Option<Vec<i64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IpStatus {
    Optimal,
    Infeasible,
}

pub const BRUTE_FORCE_LIMIT: u64 = 1 << 20;

/// Exhaustive optimum over every integral point in the box.
pub fn brute_force_ip(ip: &IpInstance) -> Result<IpSolution> {
    ip.validate()?;
    if ip.integral.iter().any(|&m| !m) {
        return Err(Error::InvalidInput("brute_force_ip requires every variable to be integral".into()));
    }
    let mut count: u64 = 1;
    for &u in &ip.var_upper {
        count = count.saturating_mul(u as u64 + 1);
        if count > BRUTE_FORCE_LIMIT {
            return Err(Error::SizeGuard(format!("more than {BRUTE_FORCE_LIMIT} integral points")));
        }
    }
    let n = ip.num_vars;
    let mut point = vec![0i64; n];
    let mut x = vec![0.0; n];
    let mut best: Option<(f64, Vec<i64>)> = None;
    loop {
        if ip.constraints.iter().all(|c| c.is_satisfied(&x, FEAS_TOL)) {
            let obj = ip.objective_value(&x);
            if best.as_ref().is_none_or(|(b, _)| obj > *b) {
                best = Some((obj, point.clone()));
            }
        }
        // odometer increment
        let mut j = 0;
        loop {
            if j == n {
                return Ok(match best {
                    Some((obj, sol)) => {
                        IpSolution { status: IpStatus::Optimal, objective: Some(obj), solution: Some(sol) }
                    }
                    None => IpSolution { status: IpStatus::Infeasible, objective: None, solution: None },
                });
            }
            if point[j] < ip.var_upper[j] {
                point[j] += 1;
                x[j] = point[j] as f64;
                break;
            }
            point[j] = 0;
            x[j] = 0.0;
            j += 1;
        }
    }
}

/// Every integral point of the box satisfying all rows (small instances only).
pub fn enumerate_feasible(ip: &IpInstance) -> Result<Vec<Vec<f64>>> {
    let mut count: u64 = 1;
    for &u in &ip.var_upper {
        count = count.saturating_mul(u as u64 + 1);
    }
    if count > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeGuard(format!("{count} integral points")));
    }
    let n = ip.num_vars;
    let mut out = Vec::new();
    let mut x = vec![0.0; n];
    'outer: loop {
        if ip.constraints.iter().all(|c| c.is_satisfied(&x, FEAS_TOL)) {
            out.push(x.clone());
        }
        for (xj, &upper) in x.iter_mut().zip(&ip.var_upper) {
            if *xj < upper as f64 {
                *xj += 1.0;
                continue 'outer;
            }
            *xj = 0.0;
        }
        return Ok(out);
    }
}

/// `max sum x` s.t. `2 sum x = n`, `x` binary. Infeasible for odd `n`.
pub fn jeroslow_instance(n: usize) -> Result<IpInstance> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    IpInstance::binary(
        vec![1.0; n],
        vec![LinearConstraint::new(vec![2.0; n], Sense::Eq, n as f64, RowOrigin::Original)],
    )
}

fn sense_token(s: Sense) -> &'static str {
    match s {
        Sense::Le => "le",
        Sense::Ge => "ge",
        Sense::Eq => "eq",
    }
}

fn origin_token(o: RowOrigin) -> &'static str {
    match o {
        RowOrigin::Original => "orig",
        RowOrigin::Branch => "branch",
        RowOrigin::Cut => "cut",
    }
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    let mut s = String::new();
    for (i, v) in items.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v}");
    }
    s
}

/// Serializes `ip` in the `IP v1` text format. `comments` become leading `#` lines.
pub fn write_instance_with_comments(ip: &IpInstance, comments: &[String]) -> String {
    let mut s = String::from("IP v1\n");
    for c in comments {
        let _ = writeln!(s, "# {c}");
    }
    let _ = writeln!(s, "vars {}", ip.num_vars);
    let _ = writeln!(s, "maximize {}", join(&ip.objective));
    let _ = writeln!(s, "upper {}", join(&ip.var_upper));
    let mask: Vec<u8> = ip.integral.iter().map(|&b| b as u8).collect();
    let _ = writeln!(s, "integral {}", join(&mask));
    for row in &ip.constraints {
        let _ = writeln!(
            s,
            "row {} {} {} {}",
            sense_token(row.sense),
            row.rhs,
            join(&row.coeffs),
            origin_token(row.origin)
        );
    }
    s
}

pub fn write_instance(ip: &IpInstance) -> String {
    write_instance_with_comments(ip, &[])
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_f64(tok: &str, line: usize, field: &str) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| parse_err(line, format!("{field}: `{tok}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("{field}: non-finite value `{tok}`")));
    }
    Ok(v)
}

fn expect_count(toks: &[&str], n: usize, line: usize, field: &str) -> Result<()> {
    if toks.len() != n {
        return Err(parse_err(line, format!("{field}: expected {n} entries, found {}", toks.len())));
    }
    Ok(())
}

/// Parses the `IP v1` text format.
pub fn read_instance(text: &str) -> Result<IpInstance> {
    let mut lines =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    if header != "IP v1" {
        return Err(parse_err(ln, format!("expected header `IP v1`, found `{header}`")));
    }

    let mut next_keyed = |key: &str| -> Result<(usize, Vec<&str>)> {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(0, format!("missing `{key}` line")))?;
        let mut toks = l.split_whitespace();
        let k = toks.next().unwrap_or("");
        if k != key {
            return Err(parse_err(ln, format!("expected `{key}`, found `{k}`")));
        }
        Ok((ln, toks.collect()))
    };

    let (ln, toks) = next_keyed("vars")?;
    expect_count(&toks, 1, ln, "vars")?;
    let n: usize = toks[0].parse().map_err(|_| parse_err(ln, format!("vars: bad count `{}`", toks[0])))?;
    if n == 0 {
        return Err(parse_err(ln, "vars: instance must have at least one variable"));
    }

    let (ln, toks) = next_keyed("maximize")?;
    if toks.is_empty() {
        return Err(parse_err(ln, "maximize: empty objective vector"));
    }
    expect_count(&toks, n, ln, "maximize")?;
    let objective = toks.iter().map(|t| parse_f64(t, ln, "maximize")).collect::<Result<Vec<_>>>()?;

    let (ln, toks) = next_keyed("upper")?;
    expect_count(&toks, n, ln, "upper")?;
    let var_upper = toks
        .iter()
        .map(|t| match t.parse::<i64>() {
            Ok(u) if u >= 0 => Ok(u),
            _ => Err(parse_err(ln, format!("upper: `{t}` is not a nonnegative integer"))),
        })
        .collect::<Result<Vec<_>>>()?;

    let (ln, toks) = next_keyed("integral")?;
    expect_count(&toks, n, ln, "integral")?;
    let integral = toks
        .iter()
        .map(|t| match *t {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(parse_err(ln, format!("integral: `{t}` is not 0 or 1"))),
        })
        .collect::<Result<Vec<_>>>()?;

    let mut constraints = Vec::new();
    for (ln, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks[0] != "row" {
            return Err(parse_err(ln, format!("expected `row`, found `{}`", toks[0])));
        }
        expect_count(&toks, n + 4, ln, "row")?;
        let sense = match toks[1] {
            "le" => Sense::Le,
            "ge" => Sense::Ge,
            "eq" => Sense::Eq,
            s => return Err(parse_err(ln, format!("row: unknown sense `{s}`"))),
        };
        let rhs = parse_f64(toks[2], ln, "row rhs")?;
        let coeffs = toks[3..3 + n].iter().map(|t| parse_f64(t, ln, "row coefficient")).collect::<Result<Vec<_>>>()?;
        let origin = match toks[3 + n] {
            "orig" => RowOrigin::Original,
            "branch" => RowOrigin::Branch,
            "cut" => RowOrigin::Cut,
            o => return Err(parse_err(ln, format!("row: unknown origin `{o}`"))),
        };
        constraints.push(LinearConstraint { coeffs, sense, rhs, origin });
    }

    let ip = IpInstance { num_vars: n, objective, constraints, var_upper, integral };
    ip.validate()?;
    Ok(ip)
}
