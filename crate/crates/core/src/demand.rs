//! Target sets and demand matrices: lunar SOI grid, Cone of Shame, LET transit window.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitMatrix;
use crate::dynamics::{find_libration_points, Cr3bpSystem};
use crate::error::{Error, Result};

pub const GEO_RADIUS_KM: f64 = 42_164.0;
pub const STEPS_PER_MONTH: usize = 60;

/// Target positions in km, rotating frame with the barycenter at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TargetPositions {
    Static(Vec<Vector3<f64>>),
    /// indexed `[t][k]`
    PerStep(Vec<Vec<Vector3<f64>>>),
}

impl TargetPositions {
    fn targets(&self) -> usize {
        match self {
            TargetPositions::Static(p) => p.len(),
            TargetPositions::PerStep(p) => p.first().map_or(0, Vec::len),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandSet {
    pub label: String,
    positions: TargetPositions,
    demand: BitMatrix,
}

impl DemandSet {
    /// Checks the shape of `demand` (horizon x targets) and that every target is demanded at least once.
    pub fn new(label: impl Into<String>, positions: TargetPositions, demand: BitMatrix) -> Result<Self> {
        let q = positions.targets();
        if demand.cols() != q {
            return Err(Error::DimensionMismatch {
                expected: q,
                found: demand.cols(),
                context: "demand columns vs targets",
            });
        }
        if let TargetPositions::PerStep(steps) = &positions {
            if steps.len() != demand.rows() {
                return Err(Error::DimensionMismatch {
                    expected: demand.rows(),
                    found: steps.len(),
                    context: "position steps vs horizon",
                });
            }
            if let Some(bad) = steps.iter().find(|s| s.len() != q) {
                return Err(Error::DimensionMismatch {
                    expected: q,
                    found: bad.len(),
                    context: "targets per position step",
                });
            }
        }
        if let Some(k) = (0..q).find(|&k| demand.column_count(k) == 0) {
            return Err(Error::Config(format!("target {k} is never demanded")));
        }
        Ok(Self {
            label: label.into(),
            positions,
            demand,
        })
    }

    /// Static demand: every target at every step.
    pub fn fixed(label: impl Into<String>, targets_km: Vec<Vector3<f64>>, horizon: usize) -> Result<Self> {
        let q = targets_km.len();
        Self::new(label, TargetPositions::Static(targets_km), BitMatrix::filled(horizon, q))
    }

    pub fn horizon(&self) -> usize {
        self.demand.rows()
    }

    pub fn targets(&self) -> usize {
        self.demand.cols()
    }

    pub fn demand(&self) -> &BitMatrix {
        &self.demand
    }

    pub fn positions(&self) -> &TargetPositions {
        &self.positions
    }

    pub fn is_demanded(&self, t: usize, k: usize) -> bool {
        self.demand.get(t, k)
    }

    pub fn total_demand(&self) -> usize {
        self.demand.count_ones()
    }

    pub fn is_static(&self) -> bool {
        self.demand.all()
    }

    pub fn position_km(&self, t: usize, k: usize) -> Vector3<f64> {
        match &self.positions {
            TargetPositions::Static(p) => p[k],
            TargetPositions::PerStep(p) => p[t][k],
        }
    }

    pub fn position_lu(&self, t: usize, k: usize, system: &Cr3bpSystem) -> Vector3<f64> {
        self.position_km(t, k) / system.length_unit
    }

    /// Mean target position over all steps and targets, LU.
    pub fn mean_position_lu(&self, system: &Cr3bpSystem) -> Vector3<f64> {
        let (ell, q) = (self.horizon(), self.targets());
        let mut sum = Vector3::zeros();
        for t in 0..ell {
            for k in 0..q {
                sum += self.position_km(t, k);
            }
        }
        sum / (ell * q).max(1) as f64 / system.length_unit
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

fn box_grid(center: Vector3<f64>, spans: [f64; 3], counts: [usize; 3]) -> Result<Vec<Vector3<f64>>> {
    if counts.contains(&0) {
        return Err(Error::Config(format!("grid counts must be at least 1, got {counts:?}")));
    }
    let axes: Vec<Vec<f64>> = (0..3)
        .map(|a| linspace(center[a] - 0.5 * spans[a], center[a] + 0.5 * spans[a], counts[a]))
        .collect();
    let mut points = Vec::with_capacity(counts.iter().product());
    for &x in &axes[0] {
        for &y in &axes[1] {
            for &z in &axes[2] {
                points.push(Vector3::new(x, y, z));
            }
        }
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SoiParams {
    /// x range in km; `None` spans L1 to L2
    pub x_span_km: Option<(f64, f64)>,
    /// full width along y and z, km
    pub yz_width_km: f64,
    pub counts: [usize; 3],
}

impl Default for SoiParams {
    fn default() -> Self {
        Self {
            x_span_km: None,
            yz_width_km: 6.43e4,
            counts: [6, 4, 5],
        }
    }
}

pub fn soi_grid(system: &Cr3bpSystem, params: &SoiParams, horizon: usize) -> Result<DemandSet> {
    let (x0, x1) = params.x_span_km.unwrap_or_else(|| {
        let (l1, l2) = find_libration_points(system);
        (system.lu_to_km(l1), system.lu_to_km(l2))
    });
    let center = Vector3::new(0.5 * (x0 + x1), 0.0, 0.0);
    let w = params.yz_width_km;
    let targets = box_grid(center, [x1 - x0, w, w], params.counts)?;
    DemandSet::fixed("soi", targets, horizon)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConeParams {
    /// geocentric distance of the first axial station, km
    pub inner_radius_km: f64,
    /// geocentric distance of the last axial station, km; `None` uses L2
    pub outer_radius_km: Option<f64>,
    pub half_angle_deg: f64,
    pub n_axial: usize,
    pub n_radial: usize,
    pub n_azimuth: usize,
}

impl Default for ConeParams {
    fn default() -> Self {
        Self {
            inner_radius_km: 2.0 * GEO_RADIUS_KM,
            outer_radius_km: None,
            half_angle_deg: 15.0,
            n_axial: 16,
            n_radial: 3,
            n_azimuth: 6,
        }
    }
}

impl ConeParams {
    pub fn target_count(&self) -> usize {
        self.n_axial * (1 + self.n_radial * self.n_azimuth)
    }
}

/// Discs perpendicular to the Earth-Moon line with apex at the Earth. Each
/// disc holds one on-axis point and `n_radial` rings of `n_azimuth` points; the
/// outermost ring lies on the cone surface.
pub fn cone_of_shame(system: &Cr3bpSystem, params: &ConeParams, horizon: usize) -> Result<DemandSet> {
    let earth_km = system.lu_to_km(system.earth_position().x);
    let outer = params.outer_radius_km.unwrap_or_else(|| {
        let (_, l2) = find_libration_points(system);
        system.lu_to_km(l2) - earth_km
    });
    if params.n_axial == 0 || !(params.inner_radius_km < outer) || params.inner_radius_km < 0.0 {
        return Err(Error::Config(format!(
            "empty cone: {} axial stations between {} km and {} km",
            params.n_axial, params.inner_radius_km, outer
        )));
    }
    if !(params.half_angle_deg > 0.0 && params.half_angle_deg < 90.0) {
        return Err(Error::Config(format!("cone half-angle {} deg outside (0, 90)", params.half_angle_deg)));
    }
    if params.n_radial > 0 && params.n_azimuth == 0 {
        return Err(Error::Config("cone rings need at least one azimuth point".into()));
    }
    let tan = params.half_angle_deg.to_radians().tan();
    let mut targets = Vec::with_capacity(params.target_count());
    for d in linspace(params.inner_radius_km, outer, params.n_axial) {
        let x = earth_km + d;
        targets.push(Vector3::new(x, 0.0, 0.0));
        for ring in 1..=params.n_radial {
            let radius = d * tan * ring as f64 / params.n_radial as f64;
            for a in 0..params.n_azimuth {
                let phi = std::f64::consts::TAU * a as f64 / params.n_azimuth as f64;
                targets.push(Vector3::new(x, radius * phi.cos(), radius * phi.sin()));
            }
        }
    }
    DemandSet::fixed("cone", targets, horizon)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LetWindowParams {
    /// km; `None` centers the window at L2
    pub center_km: Option<[f64; 3]>,
    pub spans_km: [f64; 3],
    pub counts: [usize; 3],
}

impl Default for LetWindowParams {
    fn default() -> Self {
        Self {
            center_km: None,
            spans_km: [2e4, 1e5, 1e5],
            counts: [3, 15, 15],
        }
    }
}

/// Target grid of the transit window, km.
pub fn let_window(system: &Cr3bpSystem, params: &LetWindowParams) -> Result<Vec<Vector3<f64>>> {
    let center = match params.center_km {
        Some(c) => Vector3::from(c),
        None => Vector3::new(system.lu_to_km(find_libration_points(system).1), 0.0, 0.0),
    };
    box_grid(center, params.spans_km, params.counts)
}

/// Seeded Bernoulli activation mask of `period` rows; a target that drew no
/// activation gets one at a random row so that it is demanded at least once.
pub fn random_monthly_pattern(seed: u64, period: usize, targets: usize, density: f64) -> Result<BitMatrix> {
    if !(0.0..=1.0).contains(&density) || period == 0 {
        return Err(Error::Config(format!("pattern needs density in [0, 1] and period >= 1, got {density}, {period}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pattern = BitMatrix::new(period, targets);
    for t in 0..period {
        for k in 0..targets {
            if rng.gen_bool(density) {
                pattern.set(t, k, true);
            }
        }
    }
    for k in 0..targets {
        if pattern.column_count(k) == 0 {
            let t = rng.gen_range(0..period);
            pattern.set(t, k, true);
        }
    }
    Ok(pattern)
}

/// Tile a monthly pattern over the horizon: `D[t][k] = pattern[t mod period][k]`.
pub fn synthesize_let_demand(targets_km: Vec<Vector3<f64>>, horizon: usize, pattern: &BitMatrix) -> Result<DemandSet> {
    let period = pattern.rows();
    if period == 0 || !horizon.is_multiple_of(period) {
        return Err(Error::Config(format!(
            "pattern period {period} does not divide the horizon {horizon}"
        )));
    }
    if pattern.cols() != targets_km.len() {
        return Err(Error::DimensionMismatch {
            expected: targets_km.len(),
            found: pattern.cols(),
            context: "pattern columns vs targets",
        });
    }
    let mut demand = BitMatrix::new(horizon, targets_km.len());
    for t in 0..horizon {
        demand.row_mut(t).copy_from_slice(pattern.row(t % period));
    }
    DemandSet::new("let", TargetPositions::Static(targets_km), demand)
}

const FILE_MAGIC: &str = "# cislunar-ssa demand";

pub fn save_demand(set: &DemandSet, path: &Path) -> Result<()> {
    std::fs::write(path, format_demand(set))?;
    Ok(())
}

/// Text form: header, positions block in km, then one row of 0/1 characters per step.
pub fn format_demand(set: &DemandSet) -> String {
    let mut out = String::new();
    let mode = match set.positions {
        TargetPositions::Static(_) => "static",
        TargetPositions::PerStep(_) => "per-step",
    };
    let _ = writeln!(out, "{FILE_MAGIC}");
    let _ = writeln!(out, "label {}", set.label);
    let _ = writeln!(out, "horizon {}", set.horizon());
    let _ = writeln!(out, "targets {}", set.targets());
    let _ = writeln!(out, "unit km");
    let _ = writeln!(out, "positions {mode}");
    let mut write_points = |points: &[Vector3<f64>]| {
        for p in points {
            let _ = writeln!(out, "{:?} {:?} {:?}", p.x, p.y, p.z);
        }
    };
    match &set.positions {
        TargetPositions::Static(p) => write_points(p),
        TargetPositions::PerStep(steps) => steps.iter().for_each(|p| write_points(p)),
    }
    out.push_str("demand\n");
    for t in 0..set.horizon() {
        out.push_str(&set.demand.row_string(t));
        out.push('\n');
    }
    out
}

pub fn load_demand(path: &Path) -> Result<DemandSet> {
    let text = std::fs::read_to_string(path)?;
    parse_demand(&text, path)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    path: &'a Path,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((i, line)) => {
                self.last = i + 1;
                Ok((i + 1, line))
            }
            None => Err(Error::parse(self.path, self.last + 1, 1, format!("unexpected end of file, expected {what}"))),
        }
    }

    fn keyword(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (n, line) = self.next(key)?;
        match line.strip_prefix(key).and_then(|rest| rest.strip_prefix(' ')) {
            Some(value) => Ok((n, value)),
            None => Err(Error::parse(self.path, n, 1, format!("expected `{key} <value>`"))),
        }
    }

    fn count(&mut self, key: &str) -> Result<usize> {
        let (n, value) = self.keyword(key)?;
        value
            .parse()
            .map_err(|_| Error::parse(self.path, n, key.len() + 2, format!("invalid {key} {value:?}")))
    }
}

pub fn parse_demand(text: &str, path: &Path) -> Result<DemandSet> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        path,
        last: 0,
    };
    let (n, magic) = lines.next("header")?;
    if magic != FILE_MAGIC {
        return Err(Error::parse(path, n, 1, format!("expected `{FILE_MAGIC}`")));
    }
    let label = lines.keyword("label")?.1.to_string();
    let horizon = lines.count("horizon")?;
    let q = lines.count("targets")?;
    let (n, unit) = lines.keyword("unit")?;
    if unit != "km" {
        return Err(Error::parse(path, n, 6, format!("unsupported unit {unit:?}")));
    }
    let (n, mode) = lines.keyword("positions")?;
    let blocks = match mode {
        "static" => 1,
        "per-step" => horizon,
        other => return Err(Error::parse(path, n, 11, format!("unknown position mode {other:?}"))),
    };
    let mut steps = Vec::with_capacity(blocks);
    for _ in 0..blocks {
        let mut points = Vec::with_capacity(q);
        for _ in 0..q {
            let (n, line) = lines.next("target position")?;
            points.push(parse_point(line, n, path)?);
        }
        steps.push(points);
    }
    let (n, line) = lines.next("`demand`")?;
    if line != "demand" {
        return Err(Error::parse(path, n, 1, "expected `demand`"));
    }
    let mut demand = BitMatrix::new(horizon, q);
    let mut rows = 0;
    for (i, line) in lines.inner.by_ref() {
        if line.is_empty() {
            continue;
        }
        if rows == horizon {
            return Err(Error::DimensionMismatch {
                expected: horizon,
                found: rows + 1,
                context: "demand rows vs declared horizon",
            });
        }
        demand
            .parse_row(rows, line)
            .map_err(|(col, msg)| Error::parse(path, i + 1, col + 1, msg))?;
        rows += 1;
    }
    if rows != horizon {
        return Err(Error::DimensionMismatch {
            expected: horizon,
            found: rows,
            context: "demand rows vs declared horizon",
        });
    }
    let positions = if mode == "static" {
        TargetPositions::Static(steps.pop().unwrap_or_default())
    } else {
        TargetPositions::PerStep(steps)
    };
    DemandSet::new(label, positions, demand)
}

fn parse_point(line: &str, n: usize, path: &Path) -> Result<Vector3<f64>> {
    let mut coords = [0.0; 3];
    let mut fields = line.split(' ');
    let mut column = 1;
    for c in &mut coords {
        let field = fields
            .next()
            .ok_or_else(|| Error::parse(path, n, column, "expected three coordinates"))?;
        *c = field
            .parse()
            .map_err(|_| Error::parse(path, n, column, format!("invalid coordinate {field:?}")))?;
        column += field.len() + 1;
    }
    if fields.next().is_some() {
        return Err(Error::parse(path, n, column, "trailing fields after three coordinates"));
    }
    Ok(Vector3::from(coords))
}
