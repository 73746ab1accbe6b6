use nalgebra::{Matrix3, Matrix6, SVector, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use super::integrator::{DormandPrince, Tolerance};
use crate::error::{Error, Result};

pub const SECONDS_PER_DAY: f64 = 86_400.0;
pub const SYNODIC_MONTH_DAYS: f64 = 29.5;

/// Distance below which a state is treated as sitting on a primary.
const SINGULAR_RADIUS: f64 = 1e-12;

/// Canonical Earth-Moon CR3BP constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cr3bpSystem {
    pub mu: f64,
    /// km per LU
    pub length_unit: f64,
    /// s per TU
    pub time_unit: f64,
    /// Earth-Moon-Sun synodic period in TU
    pub synodic_period: f64,
}

impl Default for Cr3bpSystem {
    fn default() -> Self {
        Self::earth_moon()
    }
}

impl Cr3bpSystem {
    pub fn earth_moon() -> Self {
        let time_unit = 382_981.289_129_054_5;
        Self {
            mu: 0.012_150_585_609_624_04,
            length_unit: 389_703.264_829_277_6,
            time_unit,
            synodic_period: SYNODIC_MONTH_DAYS * SECONDS_PER_DAY / time_unit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu < 0.5) {
            return Err(Error::DomainError {
                value: self.mu,
                domain: "mu in (0, 0.5)",
            });
        }
        if !(self.length_unit > 0.0 && self.time_unit > 0.0) {
            return Err(Error::Config("length and time units must be positive".into()));
        }
        Ok(())
    }

    pub fn earth_position(&self) -> Vector3<f64> {
        Vector3::new(-self.mu, 0.0, 0.0)
    }

    pub fn moon_position(&self) -> Vector3<f64> {
        Vector3::new(1.0 - self.mu, 0.0, 0.0)
    }

    pub fn km_to_lu(&self, km: f64) -> f64 {
        km / self.length_unit
    }

    pub fn lu_to_km(&self, lu: f64) -> f64 {
        lu * self.length_unit
    }

    pub fn hours_to_tu(&self, hours: f64) -> f64 {
        hours * 3600.0 / self.time_unit
    }

    pub fn tu_to_hours(&self, tu: f64) -> f64 {
        tu * self.time_unit / 3600.0
    }

    pub fn jacobi_constant(&self, state: &State6) -> f64 {
        let r = state.r;
        let r1 = (r - self.earth_position()).norm();
        let r2 = (r - self.moon_position()).norm();
        r.x * r.x + r.y * r.y + 2.0 * (1.0 - self.mu) / r1 + 2.0 * self.mu / r2 - state.v.norm_squared()
    }

    /// Time derivative of the state in the rotating frame.
    pub fn derivative(&self, state: &State6) -> Result<State6> {
        let accel = self.acceleration(&state.r, &state.v)?;
        Ok(State6 { r: state.v, v: accel })
    }

    fn acceleration(&self, r: &Vector3<f64>, v: &Vector3<f64>) -> Result<Vector3<f64>> {
        let mu1 = 1.0 - self.mu;
        let mu2 = self.mu;
        let r1 = r - self.earth_position();
        let r2 = r - self.moon_position();
        let d1 = r1.norm();
        let d2 = r2.norm();
        if d1 < SINGULAR_RADIUS || d2 < SINGULAR_RADIUS {
            return Err(Error::SingularState { distance: d1.min(d2) });
        }
        let gravity = -r1 * (mu1 / (d1 * d1 * d1)) - r2 * (mu2 / (d2 * d2 * d2));
        // -w x (w x r) - 2 w x v with w = +z
        let centrifugal = Vector3::new(r.x, r.y, 0.0);
        let coriolis = Vector3::new(2.0 * v.y, -2.0 * v.x, 0.0);
        Ok(gravity + centrifugal + coriolis)
    }

    /// Jacobian of the equations of motion with respect to the state.
    pub fn jacobian(&self, r: &Vector3<f64>) -> Matrix6<f64> {
        let mut a = Matrix6::zeros();
        let mut gradient = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 0.0));
        for (mu_i, center) in [(1.0 - self.mu, self.earth_position()), (self.mu, self.moon_position())] {
            let d = r - center;
            let n = d.norm();
            let n3 = n * n * n;
            let n5 = n3 * n * n;
            gradient += (d * d.transpose()) * (3.0 * mu_i / n5) - Matrix3::identity() * (mu_i / n3);
        }
        a.fixed_view_mut::<3, 3>(0, 3).copy_from(&Matrix3::identity());
        a.fixed_view_mut::<3, 3>(3, 0).copy_from(&gradient);
        a[(3, 4)] = 2.0;
        a[(4, 3)] = -2.0;
        a
    }

    /// Integrate `state0` for `tof` TU, optionally with the state-transition matrix.
    pub fn propagate(&self, state0: &State6, tof: f64, with_stm: bool, tol: f64) -> Result<(State6, Option<Matrix6<f64>>)> {
        check_tolerance(tol)?;
        if !tof.is_finite() {
            return Err(Error::DomainError {
                value: tof,
                domain: "finite time of flight",
            });
        }
        if with_stm {
            let (state, stm) = self.propagate_with_stm(state0, tof, tol)?;
            Ok((state, Some(stm)))
        } else {
            let mut prop = StatePropagator::new(*self, tol)?;
            Ok((prop.advance(state0, tof)?, None))
        }
    }

    fn propagate_with_stm(&self, state0: &State6, tof: f64, tol: f64) -> Result<(State6, Matrix6<f64>)> {
        let sys = *self;
        let rhs = move |_t: f64, y: &SVector<f64, 42>| -> Result<SVector<f64, 42>> {
            let r = Vector3::new(y[0], y[1], y[2]);
            let v = Vector3::new(y[3], y[4], y[5]);
            let acc = sys.acceleration(&r, &v)?;
            let a = sys.jacobian(&r);
            let phi = Matrix6::from_column_slice(&y.as_slice()[6..]);
            let dphi = a * phi;
            let mut out = SVector::<f64, 42>::zeros();
            out.fixed_rows_mut::<3>(0).copy_from(&v);
            out.fixed_rows_mut::<3>(3).copy_from(&acc);
            out.as_mut_slice()[6..].copy_from_slice(dphi.as_slice());
            Ok(out)
        };
        let mut y0 = SVector::<f64, 42>::zeros();
        y0.fixed_rows_mut::<6>(0).copy_from(&state0.to_vector());
        y0.as_mut_slice()[6..].copy_from_slice(Matrix6::<f64>::identity().as_slice());
        let mut dp = DormandPrince::new(rhs, Tolerance::new(tol));
        let y = dp.integrate(0.0, y0, tof)?;
        let state = State6::from_vector(&y.fixed_rows::<6>(0).into_owned());
        let stm = Matrix6::from_column_slice(&y.as_slice()[6..]);
        Ok((state, stm))
    }
}

pub(crate) fn check_tolerance(tol: f64) -> Result<()> {
    if !(1e-14..=1e-6).contains(&tol) {
        return Err(Error::DomainError {
            value: tol,
            domain: "integration tolerance in [1e-14, 1e-6]",
        });
    }
    Ok(())
}

/// Position/velocity pair in canonical units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State6 {
    pub r: Vector3<f64>,
    pub v: Vector3<f64>,
}

impl State6 {
    pub fn new(r: [f64; 3], v: [f64; 3]) -> Self {
        Self {
            r: Vector3::from(r),
            v: Vector3::from(v),
        }
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(self.r.x, self.r.y, self.r.z, self.v.x, self.v.y, self.v.z)
    }

    pub fn from_vector(x: &Vector6<f64>) -> Self {
        Self {
            r: Vector3::new(x[0], x[1], x[2]),
            v: Vector3::new(x[3], x[4], x[5]),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.r.iter().chain(self.v.iter()).all(|c| c.is_finite())
    }

    /// Infinity-norm distance between two states.
    pub fn max_abs_diff(&self, other: &State6) -> f64 {
        (self.to_vector() - other.to_vector()).amax()
    }
}

/// State-only propagator that keeps its step size between calls.
pub struct StatePropagator {
    system: Cr3bpSystem,
    tol: f64,
    last_step: Option<f64>,
}

impl StatePropagator {
    pub fn new(system: Cr3bpSystem, tol: f64) -> Result<Self> {
        check_tolerance(tol)?;
        Ok(Self {
            system,
            tol,
            last_step: None,
        })
    }

    pub fn advance(&mut self, state: &State6, dt: f64) -> Result<State6> {
        if dt == 0.0 {
            return Ok(*state);
        }
        let sys = self.system;
        let rhs = move |_t: f64, y: &SVector<f64, 6>| -> Result<SVector<f64, 6>> {
            let r = Vector3::new(y[0], y[1], y[2]);
            let v = Vector3::new(y[3], y[4], y[5]);
            let a = sys.acceleration(&r, &v)?;
            Ok(Vector6::new(v.x, v.y, v.z, a.x, a.y, a.z))
        };
        let mut dp = DormandPrince::new(rhs, Tolerance::new(self.tol));
        if let Some(h) = self.last_step {
            dp.seed_step(h.min(dt.abs()));
        }
        let y = dp.integrate(0.0, state.to_vector(), dt)?;
        self.last_step = dp.last_step();
        Ok(State6::from_vector(&y))
    }
}

/// x-coordinates of the collinear points L1 and L2.
pub fn find_libration_points(system: &Cr3bpSystem) -> (f64, f64) {
    let mu = system.mu;
    let force = |x: f64| {
        let a = x + mu;
        let b = x - 1.0 + mu;
        x - (1.0 - mu) * a / a.abs().powi(3) - mu * b / b.abs().powi(3)
    };
    let moon = 1.0 - mu;
    let l1 = bisect(force, -mu + 1e-9, moon - 1e-9);
    let l2 = bisect(force, moon + 1e-9, 2.0);
    (l1, l2)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    debug_assert!(f_lo * f(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Rule for picking `lambda_max` from the monodromy spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityConvention {
    /// eigenvalue of largest modulus
    #[default]
    Magnitude,
    /// eigenvalue of largest real part; reports 1 whenever the dominant
    /// eigenvalue is negative or complex
    LargestRealPart,
}

/// Linear stability index `0.5 * (|lambda_max| + 1/|lambda_max|)` of a monodromy matrix.
pub fn stability_index(monodromy: &Matrix6<f64>) -> Result<f64> {
    stability_index_with(monodromy, StabilityConvention::Magnitude)
}

pub fn stability_index_with(monodromy: &Matrix6<f64>, convention: StabilityConvention) -> Result<f64> {
    if !monodromy.iter().all(|v| v.is_finite()) {
        return Err(Error::EigenFailure);
    }
    let schur = monodromy.try_schur(1e-14, 10_000).ok_or(Error::EigenFailure)?;
    let eigenvalues = schur.complex_eigenvalues();
    let lambda_max = match convention {
        StabilityConvention::Magnitude => eigenvalues.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())),
        StabilityConvention::LargestRealPart => eigenvalues.iter().max_by(|a, b| a.re.total_cmp(&b.re)),
    }
    .copied()
    .ok_or(Error::EigenFailure)?;
    let modulus = lambda_max.norm();
    if modulus == 0.0 {
        return Err(Error::EigenFailure);
    }
    // moduli, so eigenvalues on the unit circle give exactly 1
    Ok(0.5 * (modulus + modulus.recip()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synodic_period_in_canonical_units() {
        let sys = Cr3bpSystem::earth_moon();
        let expected = 29.5 * 86400.0 / sys.time_unit;
        assert!((sys.synodic_period / expected - 1.0).abs() < 1e-9);
        sys.validate().unwrap();
    }

    #[test]
    fn position_rate_is_velocity() {
        let sys = Cr3bpSystem::earth_moon();
        let s = State6::new([0.8, 0.1, -0.05], [0.01, -0.2, 0.3]);
        let d = sys.derivative(&s).unwrap();
        assert_eq!(d.r, s.v);
    }

    #[test]
    fn acceleration_matches_scratch_evaluation() {
        // Written out component by component, independent of the vector form.
        let sys = Cr3bpSystem::earth_moon();
        let mu = sys.mu;
        let (x, y, z) = (0.5f64, 0.1f64, 0.0f64);
        let r1 = ((x + mu).powi(2) + y * y + z * z).sqrt();
        let r2 = ((x - 1.0 + mu).powi(2) + y * y + z * z).sqrt();
        let ax = x - (1.0 - mu) * (x + mu) / r1.powi(3) - mu * (x - 1.0 + mu) / r2.powi(3);
        let ay = y - (1.0 - mu) * y / r1.powi(3) - mu * y / r2.powi(3);
        let d = sys.derivative(&State6::new([x, y, z], [0.0; 3])).unwrap();
        assert!((d.v.x - ax).abs() < 1e-14);
        assert!((d.v.y - ay).abs() < 1e-14);
        assert_eq!(d.v.z, 0.0);
    }

    #[test]
    fn singular_state_rejected() {
        let sys = Cr3bpSystem::earth_moon();
        let at_moon = State6::new([1.0 - sys.mu, 0.0, 0.0], [0.0; 3]);
        assert!(matches!(sys.derivative(&at_moon), Err(Error::SingularState { .. })));
    }

    #[test]
    fn libration_points_are_equilibria() {
        let sys = Cr3bpSystem::earth_moon();
        let (l1, l2) = find_libration_points(&sys);
        assert!((l1 - 0.83692).abs() < 1e-5, "{l1}");
        assert!((l2 - 1.15568).abs() < 1e-5, "{l2}");
        assert!(l1 < 1.0 - sys.mu && 1.0 - sys.mu < l2);
        for x in [l1, l2] {
            let d = sys.derivative(&State6::new([x, 0.0, 0.0], [0.0; 3])).unwrap();
            assert!(d.v.amax() < 1e-10);
        }
    }

    #[test]
    fn zero_tof_gives_identity_stm() {
        let sys = Cr3bpSystem::earth_moon();
        let s = State6::new([0.8, 0.0, 0.0], [0.0, 0.5, 0.0]);
        let (out, stm) = sys.propagate(&s, 0.0, true, 1e-12).unwrap();
        assert_eq!(out, s);
        assert_eq!(stm.unwrap(), Matrix6::identity());
    }

    #[test]
    fn tolerance_outside_range_rejected() {
        let sys = Cr3bpSystem::earth_moon();
        let s = State6::new([0.8, 0.0, 0.0], [0.0, 0.5, 0.0]);
        assert!(sys.propagate(&s, 1.0, false, 1e-3).is_err());
        assert!(sys.propagate(&s, 1.0, false, 1e-16).is_err());
    }

    #[test]
    fn identity_monodromy_has_unit_index() {
        let nu = stability_index(&Matrix6::identity()).unwrap();
        assert!((nu - 1.0).abs() < 1e-14);
    }

    #[test]
    fn conventions_differ_on_negative_dominant_eigenvalue() {
        let m = Matrix6::from_diagonal(&Vector6::new(-4.0, -0.25, 1.0, 1.0, 0.5, 2.0));
        let by_modulus = stability_index_with(&m, StabilityConvention::Magnitude).unwrap();
        let by_real = stability_index_with(&m, StabilityConvention::LargestRealPart).unwrap();
        assert!((by_modulus - 0.5 * (4.0 + 0.25)).abs() < 1e-12);
        assert!((by_real - 0.5 * (2.0 + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn reversibility() {
        let sys = Cr3bpSystem::earth_moon();
        let s = State6::new([0.85, 0.02, 0.01], [0.01, 0.3, -0.02]);
        let tol = 1e-12;
        let (fwd, _) = sys.propagate(&s, 1.0, false, tol).unwrap();
        let (back, _) = sys.propagate(&fwd, -1.0, false, tol).unwrap();
        assert!(back.max_abs_diff(&s) < 10.0 * tol, "{}", back.max_abs_diff(&s));
    }
}
