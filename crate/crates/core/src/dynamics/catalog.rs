//! Synodic-resonant libration point orbit catalog.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::system::{Cr3bpSystem, State6};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "DRO")]
    Dro,
    #[serde(rename = "DPO")]
    Dpo,
    L1Lyapunov,
    L2Lyapunov,
    L2HaloS,
    L2HaloN,
    ButterflyS,
    ButterflyN,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Dro,
        Family::Dpo,
        Family::L1Lyapunov,
        Family::L2Lyapunov,
        Family::L2HaloS,
        Family::L2HaloN,
        Family::ButterflyS,
        Family::ButterflyN,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Family::Dro => "DRO",
            Family::Dpo => "DPO",
            Family::L1Lyapunov => "L1Lyapunov",
            Family::L2Lyapunov => "L2Lyapunov",
            Family::L2HaloS => "L2HaloS",
            Family::L2HaloN => "L2HaloN",
            Family::ButterflyS => "ButterflyS",
            Family::ButterflyN => "ButterflyN",
        }
    }

    /// Northern counterpart of a Southern family, if the family has branches.
    pub fn northern(self) -> Option<Family> {
        match self {
            Family::L2HaloS => Some(Family::L2HaloN),
            Family::ButterflyS => Some(Family::ButterflyN),
            _ => None,
        }
    }

    pub fn is_planar(self) -> bool {
        matches!(
            self,
            Family::Dro | Family::Dpo | Family::L1Lyapunov | Family::L2Lyapunov
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown orbit family `{s}`"))
    }
}

/// Synodic resonance M:N, i.e. period = (N / M) synodic months.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Resonance {
    pub m: u32,
    pub n: u32,
}

impl Resonance {
    pub const fn new(m: u32, n: u32) -> Self {
        Self { m, n }
    }

    pub fn period_in_months(self) -> f64 {
        self.n as f64 / self.m as f64
    }
}

impl fmt::Display for Resonance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.m, self.n)
    }
}

impl FromStr for Resonance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (m, n) = s.split_once(':').ok_or_else(|| format!("resonance `{s}` is not of the form M:N"))?;
        let m: u32 = m.trim().parse().map_err(|_| format!("bad resonance numerator in `{s}`"))?;
        let n: u32 = n.trim().parse().map_err(|_| format!("bad resonance denominator in `{s}`"))?;
        if m == 0 || n == 0 {
            return Err(format!("resonance `{s}` must have positive terms"));
        }
        Ok(Resonance { m, n })
    }
}

/// One periodic orbit of the candidate set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpoRecord {
    pub family: Family,
    pub resonance: Resonance,
    pub x0: f64,
    pub z0: f64,
    pub ydot0: f64,
    /// TU
    pub period: f64,
    /// linear stability index as tabulated
    pub stability: f64,
    pub slots: usize,
}

impl LpoRecord {
    pub fn initial_state(&self) -> State6 {
        State6::new([self.x0, 0.0, self.z0], [0.0, self.ydot0, 0.0])
    }

    pub fn label(&self) -> String {
        format!("{} {}", self.family, self.resonance)
    }
}

// family, M, N, x0, z0, ydot0, period [TU], stability
type TableRow = (Family, u32, u32, f64, f64, f64, f64, f64);

const TABLE: [TableRow; 30] = [
    (Family::ButterflyS, 1, 1, 0.99265217, -0.17814460, -0.26312433, 6.65515541, 1.00),
    (Family::ButterflyS, 3, 2, 0.91414032, -0.14492270, -0.11588220, 4.43677028, 1.00),
    (Family::ButterflyS, 2, 1, 0.91204757, -0.14952514, -0.02724245, 3.32757771, 12.45),
    (Family::ButterflyS, 9, 4, 0.94130132, -0.16165899, -0.03565177, 2.95784685, 5.79),
    (Family::L1Lyapunov, 1, 1, 0.63394833, 0.0, 0.79045684, 6.65515541, 53.98),
    (Family::L1Lyapunov, 3, 2, 0.76511295, 0.0, 0.49115556, 4.43677028, 133.00),
    (Family::L1Lyapunov, 2, 1, 0.79987674, 0.0, 0.35828602, 3.32757771, 407.88),
    (Family::L1Lyapunov, 9, 4, 0.81109465, 0.0, 0.26078428, 2.95784685, 746.89),
    (Family::L2Lyapunov, 1, 1, 0.99695262, 0.0, 1.64068576, 6.65515541, 49.78),
    (Family::L2Lyapunov, 3, 2, 1.02557297, 0.0, 0.77068285, 4.43677028, 115.15),
    (Family::Dpo, 1, 1, 1.00515914, 0.0, 1.16888350, 6.65515541, 1399.19),
    (Family::Dpo, 3, 2, 1.02851298, 0.0, 0.71048482, 4.43677028, 587.57),
    (Family::Dpo, 2, 1, 1.04880058, 0.0, 0.51457559, 3.32757771, 159.21),
    (Family::Dpo, 9, 4, 1.05547996, 0.0, 0.45941661, 2.95784685, 76.76),
    (Family::Dpo, 5, 2, 1.05978399, 0.0, 0.42240630, 2.66206217, 37.71),
    (Family::Dpo, 3, 1, 1.06335021, 0.0, 0.38222392, 2.21838514, 10.98),
    (Family::Dpo, 4, 1, 1.06189575, 0.0, 0.35989734, 1.66378885, 2.26),
    (Family::Dro, 3, 2, 0.73370014, 0.0, 0.62889866, 4.43677028, 1.00),
    (Family::Dro, 2, 1, 0.79946085, 0.0, 0.52703349, 3.32757771, 1.00),
    (Family::Dro, 9, 4, 0.81807765, 0.0, 0.50559384, 2.95784685, 1.00),
    (Family::Dro, 5, 2, 0.83249233, 0.0, 0.49184571, 2.66206217, 1.00),
    (Family::Dro, 3, 1, 0.85378188, 0.0, 0.47696024, 2.21838514, 1.00),
    (Family::Dro, 4, 1, 0.88060589, 0.0, 0.47011146, 1.66378885, 1.00),
    (Family::Dro, 9, 2, 0.88976967, 0.0, 0.47183463, 1.47892343, 1.00),
    (Family::L2HaloS, 2, 1, 1.16846916, -0.09994291, -0.19568201, 3.32757771, 282.87),
    (Family::L2HaloS, 9, 4, 1.12518004, -0.18195085, -0.22544142, 2.95784685, 28.78),
    (Family::L2HaloS, 5, 2, 1.10193101, -0.19829817, -0.21702846, 2.66206217, 6.93),
    (Family::L2HaloS, 3, 1, 1.07203837, -0.20182525, -0.18853332, 2.21838514, 1.00),
    (Family::L2HaloS, 4, 1, 1.03352559, -0.18903385, -0.12699215, 1.66378885, 1.00),
    (Family::L2HaloS, 9, 2, 1.01958272, -0.18036049, -0.09788185, 1.47892343, 1.00),
];

/// Number of equally spaced slots for an orbit of `period` TU at spacing `spacing_hours`.
pub fn slot_count(system: &Cr3bpSystem, period: f64, spacing_hours: f64) -> usize {
    let ratio = system.tu_to_hours(period) / spacing_hours;
    (ratio.ceil() as usize).max(1)
}

/// Southern/planar table rows without their Northern mirrors, slot counts unset.
pub fn table_rows() -> Vec<LpoRecord> {
    TABLE
        .iter()
        .map(|&(family, m, n, x0, z0, ydot0, period, stability)| LpoRecord {
            family,
            resonance: Resonance::new(m, n),
            x0,
            z0,
            ydot0,
            period,
            stability,
            slots: 0,
        })
        .collect()
}

/// Full 40-orbit catalog with slot counts for `spacing_hours`.
pub fn build_catalog(system: &Cr3bpSystem, spacing_hours: f64) -> Result<Vec<LpoRecord>> {
    complete_catalog(system, table_rows(), spacing_hours)
}

/// Append Northern mirrors (z0 sign flip) and assign slot counts.
pub fn complete_catalog(system: &Cr3bpSystem, rows: Vec<LpoRecord>, spacing_hours: f64) -> Result<Vec<LpoRecord>> {
    if !(spacing_hours > 0.0 && spacing_hours.is_finite()) {
        return Err(Error::DomainError {
            value: spacing_hours,
            domain: "slot spacing > 0 hours",
        });
    }
    let mirrors: Vec<LpoRecord> = rows
        .iter()
        .filter_map(|rec| {
            rec.family.northern().map(|family| LpoRecord {
                family,
                z0: -rec.z0,
                ..rec.clone()
            })
        })
        .collect();
    let mut catalog = rows;
    catalog.extend(mirrors);
    for rec in &mut catalog {
        rec.slots = slot_count(system, rec.period, spacing_hours);
    }
    Ok(catalog)
}

/// Parse a whitespace-separated table with columns
/// `family M:N x0 z0 ydot0 period stability`. Lines starting with `#` are ignored.
pub fn parse_table(text: &str, path: &Path) -> Result<Vec<LpoRecord>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 7 {
            return Err(Error::parse(
                path,
                lineno + 1,
                1,
                format!("expected 7 columns, found {}", fields.len()),
            ));
        }
        let column_of = |idx: usize| line.find(fields[idx]).map_or(1, |c| c + 1);
        let family: Family = fields[0]
            .parse()
            .map_err(|e: String| Error::parse(path, lineno + 1, column_of(0), e))?;
        let resonance: Resonance = fields[1]
            .parse()
            .map_err(|e: String| Error::parse(path, lineno + 1, column_of(1), e))?;
        let mut nums = [0.0f64; 5];
        for (slot, idx) in nums.iter_mut().zip(2..7) {
            *slot = fields[idx].parse().map_err(|_| {
                Error::parse(path, lineno + 1, column_of(idx), format!("invalid number `{}`", fields[idx]))
            })?;
        }
        rows.push(LpoRecord {
            family,
            resonance,
            x0: nums[0],
            z0: nums[1],
            ydot0: nums[2],
            period: nums[3],
            stability: nums[4],
            slots: 0,
        });
    }
    Ok(rows)
}

pub fn load_table(path: &Path) -> Result<Vec<LpoRecord>> {
    let text = std::fs::read_to_string(path)?;
    parse_table(&text, path)
}
