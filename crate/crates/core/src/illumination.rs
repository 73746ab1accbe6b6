//! Sun geometry, apparent magnitude, pointing directions and the visibility test.
//!
//! Phase-angle convention: `l_jk` is the unit vector from observer to target and
//! `l_Sk` the unit vector from the Sun to the target. With this convention a
//! phase angle of zero means the observer looks at the fully lit face.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::dynamics::Cr3bpSystem;
use crate::error::{Error, Result};

const MIN_SEPARATION: f64 = 1e-12;
pub const SUN_DISTANCE_KM: f64 = 1.496e8;
pub const MOON_RADIUS_KM: f64 = 1737.4;

/// Coplanar Sun rotating clockwise in the Earth-Moon rotating frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SunModel {
    /// rad, Sun angle at t = 0
    pub theta0: f64,
    /// rad/TU
    pub rate: f64,
    /// LU
    pub distance: f64,
}

impl SunModel {
    pub fn new(system: &Cr3bpSystem, theta0: f64) -> Self {
        Self {
            theta0,
            rate: TAU / system.synodic_period,
            distance: SUN_DISTANCE_KM / system.length_unit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.distance > 100.0) {
            return Err(Error::Config(format!("Sun distance {} LU must exceed 100 LU", self.distance)));
        }
        if !(self.rate > 0.0) {
            return Err(Error::Config("Sun rate must be positive".into()));
        }
        Ok(())
    }

    pub fn angle(&self, t: f64) -> f64 {
        self.theta0 - self.rate * t
    }

    pub fn position(&self, t: f64) -> Vector3<f64> {
        let theta = self.angle(t);
        Vector3::new(self.distance * theta.cos(), self.distance * theta.sin(), 0.0)
    }
}

pub fn sun_position(t: f64, model: &SunModel) -> Vector3<f64> {
    model.position(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetOptics {
    /// km
    pub diameter: f64,
    pub spec_reflectance: f64,
    pub diff_reflectance: f64,
    pub m_sun: f64,
}

impl Default for TargetOptics {
    fn default() -> Self {
        Self {
            diameter: 1e-3,
            spec_reflectance: 0.0,
            diff_reflectance: 0.2,
            m_sun: -26.74,
        }
    }
}

impl TargetOptics {
    pub fn validate(&self) -> Result<()> {
        let unit = 0.0..=1.0;
        if !(self.diameter > 0.0) || !unit.contains(&self.spec_reflectance) || !unit.contains(&self.diff_reflectance) {
            return Err(Error::Config(format!("invalid target optics {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorParams {
    /// full cone angle, deg; values of 360 or more accept every direction
    pub fov: f64,
    pub m_crit: f64,
    /// km
    pub moon_radius: f64,
}

impl SensorParams {
    pub fn new(fov: f64, m_crit: f64) -> Self {
        Self {
            fov,
            m_crit,
            moon_radius: MOON_RADIUS_KM,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fov > 0.0) || self.m_crit.is_nan() || !(self.moon_radius >= 0.0) {
            return Err(Error::Config(format!("invalid sensor parameters {self:?}")));
        }
        Ok(())
    }

    pub fn cos_half_fov(&self) -> f64 {
        cos_half_angle(self.fov)
    }
}

fn cos_half_angle(fov_deg: f64) -> f64 {
    if fov_deg >= 360.0 {
        -1.0
    } else {
        (0.5 * fov_deg).to_radians().cos()
    }
}

pub fn diffuse_phase_function(phi: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&phi) {
        return Err(Error::DomainError {
            value: phi,
            domain: "[0, pi]",
        });
    }
    Ok(2.0 / (3.0 * PI) * (phi.sin() + (PI - phi) * phi.cos()))
}

fn unit_between(from: &Vector3<f64>, to: &Vector3<f64>, what: &'static str) -> Result<(Vector3<f64>, f64)> {
    let d = to - from;
    let n = d.norm();
    if n < MIN_SEPARATION {
        return Err(Error::DegenerateGeometry(what));
    }
    Ok((d / n, n))
}

pub fn solar_phase_angle(r_obs: &Vector3<f64>, r_tgt: &Vector3<f64>, r_sun: &Vector3<f64>) -> Result<f64> {
    let (l_jk, _) = unit_between(r_obs, r_tgt, "observer coincides with target")?;
    let (l_sk, _) = unit_between(r_sun, r_tgt, "Sun coincides with target")?;
    Ok(l_jk.dot(&l_sk).clamp(-1.0, 1.0).acos())
}

/// Apparent magnitude from the phase angle and the range in km.
pub fn magnitude_from_geometry(phase: f64, range_km: f64, optics: &TargetOptics) -> Result<f64> {
    let reflect = optics.spec_reflectance / 4.0 + optics.diff_reflectance * diffuse_phase_function(phase)?;
    let flux = (optics.diameter * optics.diameter) / (range_km * range_km) * reflect;
    if !(flux > 0.0) {
        return Err(Error::InvisibleTarget);
    }
    Ok(optics.m_sun - 2.5 * flux.log10())
}

/// Apparent magnitude of the target seen from `r_obs`; positions in LU.
pub fn apparent_magnitude(
    r_obs: &Vector3<f64>,
    r_tgt: &Vector3<f64>,
    r_sun: &Vector3<f64>,
    optics: &TargetOptics,
    system: &Cr3bpSystem,
) -> Result<f64> {
    let phase = solar_phase_angle(r_obs, r_tgt, r_sun)?;
    let range_km = system.lu_to_km((r_tgt - r_obs).norm());
    magnitude_from_geometry(phase, range_km, optics)
}

/// Discrete sensor pointing directions in the rotating frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointingSet {
    pub directions: Vec<Vector3<f64>>,
}

impl PointingSet {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Azimuth and elevation (rad) of direction `i`.
    pub fn azimuth_elevation(&self, i: usize) -> (f64, f64) {
        let d = &self.directions[i];
        (d.y.atan2(d.x), d.z.clamp(-1.0, 1.0).asin())
    }
}

/// The six axis directions `+x, -x, +y, -y, +z, -z` followed by the eight
/// cube diagonals with sign pattern ordered `(+,+,+), (+,+,-), ..., (-,-,-)`.
pub fn pointing_directions() -> PointingSet {
    let mut directions = vec![
        Vector3::x(),
        -Vector3::x(),
        Vector3::y(),
        -Vector3::y(),
        Vector3::z(),
        -Vector3::z(),
    ];
    let s = 1.0 / 3f64.sqrt();
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            for sz in [1.0, -1.0] {
                directions.push(Vector3::new(sx * s, sy * s, sz * s));
            }
        }
    }
    PointingSet { directions }
}

/// Unit vector from observer to target and the range, LU.
pub fn line_of_sight(r_obs: &Vector3<f64>, r_tgt: &Vector3<f64>) -> Result<(Vector3<f64>, f64)> {
    unit_between(r_obs, r_tgt, "observer coincides with target")
}

/// Cone membership given a precomputed line of sight and `cos(fov / 2)`.
pub fn within_cone(direction: &Vector3<f64>, los: &Vector3<f64>, cos_half: f64) -> bool {
    direction.dot(los) >= cos_half
}

pub fn in_fov(r_obs: &Vector3<f64>, direction: &Vector3<f64>, r_tgt: &Vector3<f64>, fov: f64) -> Result<bool> {
    let (los, _) = line_of_sight(r_obs, r_tgt)?;
    Ok(within_cone(direction, &los, cos_half_angle(fov)))
}

/// True when the Moon disc hides the target; `moon_radius` in LU.
pub fn moon_occults(
    r_obs: &Vector3<f64>,
    r_tgt: &Vector3<f64>,
    moon_center: &Vector3<f64>,
    moon_radius: f64,
) -> Result<bool> {
    let to_moon = moon_center - r_obs;
    let moon_range = to_moon.norm();
    if moon_range <= moon_radius {
        return Err(Error::ObserverInsideBody);
    }
    let (l_jk, range) = unit_between(r_obs, r_tgt, "observer coincides with target")?;
    if range <= moon_range {
        return Ok(false);
    }
    let critical = (moon_radius / moon_range).asin();
    let separation = (to_moon / moon_range).dot(&l_jk).clamp(-1.0, 1.0).acos();
    Ok(separation < critical)
}

/// Everything the visibility test needs besides the three positions.
#[derive(Debug, Clone, Copy)]
pub struct ObservationModel {
    pub system: Cr3bpSystem,
    pub sensor: SensorParams,
    pub optics: TargetOptics,
    pub sun: SunModel,
}

impl ObservationModel {
    pub fn moon_radius_lu(&self) -> f64 {
        self.system.km_to_lu(self.sensor.moon_radius)
    }
}

/// Direction-independent part of the visibility test: not occulted and bright enough.
pub fn detectable(r_obs: &Vector3<f64>, r_tgt: &Vector3<f64>, r_sun: &Vector3<f64>, model: &ObservationModel) -> Result<bool> {
    if moon_occults(r_obs, r_tgt, &model.system.moon_position(), model.moon_radius_lu())? {
        return Ok(false);
    }
    match apparent_magnitude(r_obs, r_tgt, r_sun, &model.optics, &model.system) {
        Ok(m) => Ok(m <= model.sensor.m_crit),
        Err(Error::InvisibleTarget) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Target is visible when it is not occulted, inside the FOV cone around
/// `direction`, and no fainter than the cutoff magnitude.
pub fn visibility(
    r_obs: &Vector3<f64>,
    r_tgt: &Vector3<f64>,
    direction: &Vector3<f64>,
    r_sun: &Vector3<f64>,
    model: &ObservationModel,
) -> Result<bool> {
    if moon_occults(r_obs, r_tgt, &model.system.moon_position(), model.moon_radius_lu())? {
        return Ok(false);
    }
    if !in_fov(r_obs, direction, r_tgt, model.sensor.fov)? {
        return Ok(false);
    }
    match apparent_magnitude(r_obs, r_tgt, r_sun, &model.optics, &model.system) {
        Ok(m) => Ok(m <= model.sensor.m_crit),
        Err(Error::InvisibleTarget) => Ok(false),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model(fov: f64, m_crit: f64) -> ObservationModel {
        let system = Cr3bpSystem::earth_moon();
        ObservationModel {
            system,
            sensor: SensorParams::new(fov, m_crit),
            optics: TargetOptics::default(),
            sun: SunModel::new(&system, 0.0),
        }
    }

    #[test]
    fn sun_moves_clockwise_and_is_periodic() {
        let sys = Cr3bpSystem::earth_moon();
        let sun = SunModel::new(&sys, 0.0);
        sun.validate().unwrap();
        let p0 = sun_position(0.0, &sun);
        assert_eq!(p0, Vector3::new(sun.distance, 0.0, 0.0));
        let full = sun_position(sys.synodic_period, &sun).normalize();
        assert!(full.dot(&p0.normalize()).clamp(-1.0, 1.0).acos() < 1e-9);
        let half = sun_position(0.5 * sys.synodic_period, &sun).normalize();
        assert!((half - Vector3::new(-1.0, 0.0, 0.0)).amax() < 1e-9);
        // clockwise: a quarter period later the Sun is on -y
        let quarter = sun_position(0.25 * sys.synodic_period, &sun).normalize();
        assert!(quarter.y < -0.999);
    }

    #[test]
    fn diffuse_phase_function_values() {
        assert!((diffuse_phase_function(0.0).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!(diffuse_phase_function(PI).unwrap().abs() < 1e-12);
        assert!((diffuse_phase_function(PI / 2.0).unwrap() - 2.0 / (3.0 * PI)).abs() < 1e-12);
        assert!(diffuse_phase_function(-0.1).is_err());
        assert!(diffuse_phase_function(3.2).is_err());
    }

    #[test]
    fn phase_angle_conventions() {
        let sun = Vector3::new(-400.0, 0.0, 0.0);
        let tgt = Vector3::new(0.0, 0.0, 0.0);
        // observer on the Sun side looking down-Sun at the lit face
        let lit = Vector3::new(-1.0, 0.0, 0.0);
        assert!(solar_phase_angle(&lit, &tgt, &sun).unwrap().abs() < 1e-12);
        let backlit = Vector3::new(1.0, 0.0, 0.0);
        assert!((solar_phase_angle(&backlit, &tgt, &sun).unwrap() - PI).abs() < 1e-12);
        let side = Vector3::new(0.0, 1.0, 0.0);
        assert!((solar_phase_angle(&side, &tgt, &sun).unwrap() - PI / 2.0).abs() < 1e-12);
        assert!(matches!(
            solar_phase_angle(&tgt, &tgt, &sun),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn doubling_range_adds_five_log_two() {
        let optics = TargetOptics::default();
        let m1 = magnitude_from_geometry(0.7, 1e5, &optics).unwrap();
        let m2 = magnitude_from_geometry(0.7, 2e5, &optics).unwrap();
        assert!((m2 - m1 - 5.0 * 2f64.log10()).abs() < 1e-9);
    }

    #[test]
    fn magnitude_matches_scratch_evaluation() {
        // d = 1 m, a_spec = 0, a_diff = 0.2, range 1e5 km, phase 0:
        // -26.74 - 2.5 log10(1e-16 * 0.2 * 2/3) = 15.4476531...
        let m = magnitude_from_geometry(0.0, 1e5, &TargetOptics::default()).unwrap();
        let expected = -26.74 - 2.5 * (1e-16f64 * 0.2 * 2.0 / 3.0).log10();
        assert!((m - expected).abs() < 1e-12);
        assert!((m - 15.447_653_2).abs() < 1e-6, "{m}");
    }

    #[test]
    fn specular_only_is_phase_independent() {
        let optics = TargetOptics {
            spec_reflectance: 1.0,
            diff_reflectance: 0.0,
            ..Default::default()
        };
        let a = magnitude_from_geometry(0.1, 5e4, &optics).unwrap();
        let b = magnitude_from_geometry(2.9, 5e4, &optics).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_reflected_light_is_invisible() {
        let dark = TargetOptics {
            diff_reflectance: 0.0,
            ..Default::default()
        };
        let res = magnitude_from_geometry(1.0, 1e4, &dark);
        assert!(matches!(res, Err(Error::InvisibleTarget)));
    }

    #[test]
    fn pointing_set_is_unit_and_closed_under_negation() {
        let set = pointing_directions();
        assert_eq!(set.len(), 14);
        for d in &set.directions {
            assert!((d.norm() - 1.0).abs() < 1e-12);
            assert!(set.directions.iter().any(|e| (e + d).amax() < 1e-15));
        }
        let (az, el) = set.azimuth_elevation(4);
        assert_eq!(az, 0.0);
        assert!((el - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn fov_membership() {
        let o = Vector3::zeros();
        let dir = Vector3::x();
        assert!(in_fov(&o, &dir, &Vector3::new(5.0, 0.0, 0.0), 1e-3).unwrap());
        assert!(in_fov(&o, &dir, &Vector3::new(0.01, 1.0, 0.0), 180.0).unwrap());
        assert!(!in_fov(&o, &dir, &Vector3::new(-0.01, 1.0, 0.0), 180.0).unwrap());
        let at = |deg: f64| Vector3::new(deg.to_radians().cos(), deg.to_radians().sin(), 0.0);
        assert!(!in_fov(&o, &dir, &at(31.0), 60.0).unwrap());
        assert!(in_fov(&o, &dir, &at(29.0), 60.0).unwrap());
        assert!(in_fov(&o, &dir, &at(179.0), 360.0).unwrap());
    }

    #[test]
    fn occultation_cases() {
        let moon = Vector3::new(1.0, 0.0, 0.0);
        let radius = 0.01;
        let obs = Vector3::zeros();
        assert!(!moon_occults(&obs, &Vector3::new(0.5, 0.0, 0.0), &moon, radius).unwrap());
        assert!(moon_occults(&obs, &Vector3::new(2.0, 0.0, 0.0), &moon, radius).unwrap());
        assert!(!moon_occults(&obs, &Vector3::new(0.0, 2.0, 0.0), &moon, radius).unwrap());
        assert!(matches!(
            moon_occults(&Vector3::new(1.005, 0.0, 0.0), &obs, &moon, radius),
            Err(Error::ObserverInsideBody)
        ));
    }

    #[test]
    fn visibility_boundary_cases() {
        let m = model(60.0, 15.0);
        let moon = m.system.moon_position();
        let sun = Vector3::new(-m.sun.distance, 0.0, 0.0);
        // target behind the Moon, looking straight at it with ideal lighting
        let obs = moon - Vector3::new(0.2, 0.0, 0.0);
        let hidden = moon + Vector3::new(0.2, 0.0, 0.0);
        let big = ObservationModel {
            sensor: SensorParams::new(60.0, 100.0),
            ..m
        };
        assert!(!visibility(&obs, &hidden, &Vector3::x(), &sun, &big).unwrap());

        // un-occulted geometry, cutoff placed exactly on the magnitude
        let obs = Vector3::new(0.5, 0.0, 0.0);
        let tgt = Vector3::new(0.5, 0.1, 0.0);
        let mag = apparent_magnitude(&obs, &tgt, &sun, &m.optics, &m.system).unwrap();
        let exact = ObservationModel {
            sensor: SensorParams::new(60.0, mag),
            ..m
        };
        assert!(visibility(&obs, &tgt, &Vector3::y(), &sun, &exact).unwrap());
        let dimmer = ObservationModel {
            sensor: SensorParams::new(60.0, mag - 0.1),
            ..m
        };
        assert!(!visibility(&obs, &tgt, &Vector3::y(), &sun, &dimmer).unwrap());
    }

    fn vec3() -> impl Strategy<Value = Vector3<f64>> {
        (-1.5f64..1.5, -0.5f64..0.5, -0.5f64..0.5).prop_map(|(x, y, z)| Vector3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn diffuse_phase_function_bounded(phi in 0.0f64..=PI) {
            let p = diffuse_phase_function(phi).unwrap();
            prop_assert!((-1e-15..=2.0 / 3.0 + 1e-15).contains(&p));
        }

        #[test]
        fn magnitude_monotone_in_range_and_phase(r in 1e3f64..1e6, dr in 0.0f64..1e5, phi in 0.0f64..3.0, dphi in 0.0f64..0.14) {
            let optics = TargetOptics::default();
            let base = magnitude_from_geometry(phi, r, &optics).unwrap();
            prop_assert!(magnitude_from_geometry(phi, r + dr, &optics).unwrap() >= base);
            prop_assert!(magnitude_from_geometry(phi + dphi, r, &optics).unwrap() >= base - 1e-12);
        }

        #[test]
        fn visibility_monotone_in_cutoff_and_fov(obs in vec3(), tgt in vec3(), i in 0usize..14, fov in 10.0f64..170.0, m_crit in 12.0f64..22.0) {
            let m = model(fov, m_crit);
            let moon = m.system.moon_position();
            prop_assume!((obs - moon).norm() > 0.01 && (obs - tgt).norm() > 1e-6);
            let dir = pointing_directions().directions[i];
            let sun = m.sun.position(0.3);
            if visibility(&obs, &tgt, &dir, &sun, &m).unwrap() {
                let brighter = ObservationModel { sensor: SensorParams::new(fov, m_crit + 1.0), ..m };
                let wider = ObservationModel { sensor: SensorParams::new(fov + 10.0, m_crit), ..m };
                prop_assert!(visibility(&obs, &tgt, &dir, &sun, &brighter).unwrap());
                prop_assert!(visibility(&obs, &tgt, &dir, &sun, &wider).unwrap());
            }
        }
    }
}
