//! Fixed-format MPS export of the model and import of solver solutions.
//!
//! Names are at most 8 characters, indices in base 36:
//! `X` + i(1) + j(3) + t(3), `Y` + j(3), `T` + t(3) + k(4), plus `PSI`/`PHI`
//! for the robust variants. Rows: `OBJ`, `P` (slot count), `E` + j(3) + t(3)
//! (pointing only on chosen slots, at most one direction), `L` + t(3) + k(4)
//! (coverage linking), `R` + t(3) or `R` + k(4) (robust bounds).

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::instance::Instance;
use super::solution::{Assignment, Solution};
use crate::bits::{self, BitMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MpsVariant {
    /// total covered pairs
    Aggregate,
    /// worst-covered step
    TimeRobust,
    /// worst-covered target
    TargetRobust,
}

const DIGITS: &[u8] = b"0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";

fn base36(mut value: usize, width: usize) -> String {
    let mut out = vec![b'0'; width];
    for slot in out.iter_mut().rev() {
        *slot = DIGITS[value % 36];
        value /= 36;
    }
    String::from_utf8(out).expect("ascii digits")
}

fn parse_base36(text: &str) -> Option<usize> {
    text.chars().try_fold(0usize, |acc, c| Some(acc * 36 + c.to_digit(36)?as usize))
        .filter(|_| text.chars().all(|c| c.is_ascii_digit() || c.is_ascii_uppercase()))
}

fn x_name(i: usize, j: usize, t: usize) -> String {
    format!("X{}{}{}", base36(i, 1), base36(j, 3), base36(t, 3))
}

fn y_name(j: usize) -> String {
    format!("Y{}", base36(j, 3))
}

fn theta_name(t: usize, k: usize) -> String {
    format!("T{}{}", base36(t, 3), base36(k, 4))
}

fn check_limits(instance: &Instance) -> Result<()> {
    let limits = [
        (instance.m(), 36usize, "directions"),
        (instance.n(), 36usize.pow(3), "slots"),
        (instance.ell(), 36usize.pow(3), "steps"),
        (instance.q(), 36usize.pow(4), "targets"),
    ];
    for (value, limit, what) in limits {
        if value > limit {
            return Err(Error::Config(format!("{value} {what} exceed the MPS name capacity {limit}")));
        }
    }
    Ok(())
}

/// Number text of at most 12 characters, shortest exact form when it fits.
fn number(value: f64) -> String {
    let plain = format!("{value}");
    if plain.len() <= 12 {
        return plain;
    }
    (0..=8)
        .rev()
        .map(|digits| format!("{value:.digits$e}"))
        .find(|s| s.len() <= 12)
        .unwrap_or_else(|| format!("{value:.0e}"))
}

struct Writer<W: Write> {
    out: W,
}

impl<W: Write> Writer<W> {
    fn line(&mut self, text: &str) -> Result<()> {
        writeln!(self.out, "{}", text.trim_end())?;
        Ok(())
    }

    fn row(&mut self, kind: &str, name: &str) -> Result<()> {
        self.line(&format!(" {kind:<2} {name}"))
    }

    fn entry(&mut self, column: &str, row: &str, value: f64) -> Result<()> {
        self.line(&format!("    {column:<8}  {row:<8}  {:>12}", number(value)))
    }

    fn bound(&mut self, kind: &str, column: &str, value: f64) -> Result<()> {
        self.line(&format!(" {kind:<2} BND       {column:<8}  {:>12}", number(value)))
    }

    fn marker(&mut self, name: &str, kind: &str) -> Result<()> {
        self.line(&format!("    {name:<8}  'MARKER'                 '{kind}'"))
    }
}

/// Write the model in fixed MPS format. The model maximizes, so the objective
/// row holds the negated coefficients and a comment states the sense.
pub fn export_mps(instance: &Instance, variant: MpsVariant, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    write_mps(instance, variant, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_mps(instance: &Instance, variant: MpsVariant, out: impl Write) -> Result<()> {
    check_limits(instance)?;
    let tensor = &instance.tensor;
    let (n, ell, q) = (instance.n(), instance.ell(), instance.q());
    let demand = tensor.demand();
    let inv_ell = 1.0 / ell as f64;
    let mut w = Writer { out };

    let (name, sense) = match variant {
        MpsVariant::Aggregate => ("CSSA", "sum of covered (t,k) minus (1/l) sum f_j Y_j"),
        MpsVariant::TimeRobust => ("CSSATR", "PSI minus (1/l) sum f_j Y_j, PSI <= covered targets at every demanded t"),
        MpsVariant::TargetRobust => ("CSSAKR", "PHI minus (1/l) sum f_j Y_j, PHI <= covered steps of every target"),
    };
    w.line(&format!("* maximize {sense}"))?;
    w.line("* written as minimization of the negated objective")?;
    w.line(&format!("NAME          {name}"))?;
    w.line("ROWS")?;
    w.row("N", "OBJ")?;
    w.row("E", "P")?;
    for j in 0..n {
        for t in 0..ell {
            if tensor.covers(j, t).len() > 0 {
                w.row("L", &format!("E{}{}", base36(j, 3), base36(t, 3)))?;
            }
        }
    }
    for (t, k) in demand.iter_ones() {
        w.row("L", &format!("L{}{}", base36(t, 3), base36(k, 4)))?;
    }
    let robust_steps: Vec<usize> = (0..ell).filter(|&t| bits::count(demand.row(t)) > 0).collect();
    let robust_targets: Vec<usize> = (0..q).filter(|&k| (0..ell).any(|t| demand.get(t, k))).collect();
    match variant {
        MpsVariant::Aggregate => {}
        MpsVariant::TimeRobust => {
            for &t in &robust_steps {
                w.row("G", &format!("R{}", base36(t, 3)))?;
            }
        }
        MpsVariant::TargetRobust => {
            for &k in &robust_targets {
                w.row("G", &format!("R{}", base36(k, 4)))?;
            }
        }
    }

    w.line("COLUMNS")?;
    w.marker("MARKER", "INTORG")?;
    for j in 0..n {
        for t in 0..ell {
            let e_row = format!("E{}{}", base36(j, 3), base36(t, 3));
            for (i, set) in tensor.covers(j, t) {
                let col = x_name(i, j, t);
                w.entry(&col, &e_row, 1.0)?;
                for k in bits::iter_ones(set) {
                    w.entry(&col, &format!("L{}{}", base36(t, 3), base36(k, 4)), -1.0)?;
                }
            }
        }
    }
    for j in 0..n {
        let col = y_name(j);
        w.entry(&col, "OBJ", instance.costs[j] * inv_ell)?;
        w.entry(&col, "P", 1.0)?;
        for t in 0..ell {
            if tensor.covers(j, t).len() > 0 {
                w.entry(&col, &format!("E{}{}", base36(j, 3), base36(t, 3)), -1.0)?;
            }
        }
    }
    w.marker("MARKER", "INTEND")?;
    for (t, k) in demand.iter_ones() {
        let col = theta_name(t, k);
        if variant == MpsVariant::Aggregate {
            w.entry(&col, "OBJ", -1.0)?;
        }
        w.entry(&col, &format!("L{}{}", base36(t, 3), base36(k, 4)), 1.0)?;
        match variant {
            MpsVariant::Aggregate => {}
            MpsVariant::TimeRobust => w.entry(&col, &format!("R{}", base36(t, 3)), 1.0)?,
            MpsVariant::TargetRobust => w.entry(&col, &format!("R{}", base36(k, 4)), 1.0)?,
        }
    }
    match variant {
        MpsVariant::Aggregate => {}
        MpsVariant::TimeRobust => {
            w.entry("PSI", "OBJ", -1.0)?;
            for &t in &robust_steps {
                w.entry("PSI", &format!("R{}", base36(t, 3)), -1.0)?;
            }
        }
        MpsVariant::TargetRobust => {
            w.entry("PHI", "OBJ", -1.0)?;
            for &k in &robust_targets {
                w.entry("PHI", &format!("R{}", base36(k, 4)), -1.0)?;
            }
        }
    }

    w.line("RHS")?;
    w.line(&format!("    RHS       P         {:>12}", number(instance.p as f64)))?;

    w.line("BOUNDS")?;
    for j in 0..n {
        for t in 0..ell {
            for (i, _) in tensor.covers(j, t) {
                w.bound("UP", &x_name(i, j, t), 1.0)?;
            }
        }
    }
    for j in 0..n {
        w.bound("UP", &y_name(j), 1.0)?;
    }
    for (t, k) in demand.iter_ones() {
        w.bound("UP", &theta_name(t, k), 1.0)?;
    }
    match variant {
        MpsVariant::Aggregate => {}
        MpsVariant::TimeRobust => w.bound("UP", "PSI", q as f64)?,
        MpsVariant::TargetRobust => w.bound("UP", "PHI", ell as f64)?,
    }
    w.line("ENDATA")
}

enum Variable {
    X { i: usize, j: usize, t: usize },
    Y { j: usize },
    Theta { t: usize, k: usize },
    Robust,
}

fn decode(name: &str, instance: &Instance) -> Option<Variable> {
    let (m, n, ell, q) = (instance.m(), instance.n(), instance.ell(), instance.q());
    let var = match name.as_bytes().first()? {
        b'X' if name.len() == 8 => Variable::X {
            i: parse_base36(&name[1..2])?,
            j: parse_base36(&name[2..5])?,
            t: parse_base36(&name[5..8])?,
        },
        b'Y' if name.len() == 4 => Variable::Y {
            j: parse_base36(&name[1..4])?,
        },
        b'T' if name.len() == 8 => Variable::Theta {
            t: parse_base36(&name[1..4])?,
            k: parse_base36(&name[4..8])?,
        },
        _ if name == "PSI" || name == "PHI" => Variable::Robust,
        _ => return None,
    };
    let in_range = match var {
        Variable::X { i, j, t } => i < m && j < n && t < ell,
        Variable::Y { j } => j < n,
        Variable::Theta { t, k } => t < ell && k < q && instance.tensor.demand().get(t, k),
        Variable::Robust => true,
    };
    in_range.then_some(var)
}

const INTEGRALITY_TOL: f64 = 1e-6;

/// Read `name value` lines (blank lines and `#` comments ignored) and rebuild
/// a validated solution. Theta is taken from the file.
pub fn import_solution(path: &Path, instance: &Instance) -> Result<Solution> {
    let text = std::fs::read_to_string(path)?;
    parse_solution(&text, path, instance)
}

pub fn parse_solution(text: &str, path: &Path, instance: &Instance) -> Result<Solution> {
    let mut slots = Vec::new();
    let mut schedule: BTreeMap<usize, Vec<Assignment>> = BTreeMap::new();
    let mut theta = BitMatrix::new(instance.ell(), instance.q());
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let name = fields.next().unwrap_or_default();
        let value_text = fields
            .next()
            .ok_or_else(|| Error::parse(path, line_no, name.len() + 1, format!("missing value for {name}")))?;
        if fields.next().is_some() {
            return Err(Error::parse(path, line_no, 1, "expected `name value`"));
        }
        let column = raw.find(value_text).map_or(1, |c| c + 1);
        let value: f64 = value_text
            .parse()
            .map_err(|_| Error::parse(path, line_no, column, format!("invalid value {value_text:?}")))?;
        if let Some(previous) = seen.insert(name, line_no) {
            return Err(Error::parse(path, line_no, 1, format!("{name} already given on line {previous}")));
        }
        let var = decode(name, instance)
            .ok_or_else(|| Error::parse(path, line_no, 1, format!("unknown variable {name}")))?;
        let binary = match var {
            Variable::Robust => continue,
            Variable::Theta { .. } => value > 0.5,
            _ => {
                let rounded = value.round();
                if (value - rounded).abs() > INTEGRALITY_TOL || !(rounded == 0.0 || rounded == 1.0) {
                    return Err(Error::parse(
                        path,
                        line_no,
                        column,
                        format!("{name} = {value} is not binary"),
                    ));
                }
                rounded == 1.0
            }
        };
        if !binary {
            continue;
        }
        match var {
            Variable::X { i, j, t } => schedule.entry(t).or_default().push(Assignment { slot: j, direction: i }),
            Variable::Y { j } => slots.push(j),
            Variable::Theta { t, k } => theta.set(t, k, true),
            Variable::Robust => unreachable!(),
        }
    }
    let mut steps = vec![Vec::new(); instance.ell()];
    for (t, mut list) in schedule {
        list.sort_unstable();
        steps[t] = list;
    }
    slots.sort_unstable();
    let mut solution = Solution {
        slots,
        schedule: steps,
        theta,
        objective: 0.0,
        coverage: 0.0,
    };
    solution.objective = super::solution::evaluate_objective(&solution, instance)?;
    solution.coverage = super::solution::coverage_fraction(&solution.theta, instance.tensor.demand())?;
    Ok(solution)
}

/// Nonzero variables of a solution in the import format.
pub fn format_solution(solution: &Solution) -> String {
    let mut out = String::new();
    for &j in &solution.slots {
        let _ = writeln!(out, "{} 1", y_name(j));
    }
    for (t, step) in solution.schedule.iter().enumerate() {
        for a in step {
            let _ = writeln!(out, "{} 1", x_name(a.direction, a.slot, t));
        }
    }
    for (t, k) in solution.theta.iter_ones() {
        let _ = writeln!(out, "{} 1", theta_name(t, k));
    }
    out
}

pub fn write_solution(solution: &Solution, path: &Path) -> Result<()> {
    std::fs::write(path, format_solution(solution))?;
    Ok(())
}
