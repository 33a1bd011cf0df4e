//! Coordinate frames, distances and radio-horizon visibility.
//!
//! Geodetic positions use the WGS-84 ellipsoid. Local frames are
//! North-East-Down (NED) anchored at the aircraft, matching the convention
//! used by the GDOP direction cosines.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{OspError, Result};

/// WGS-84 semi-major axis in meters.
pub const WGS84_A: f64 = 6_378_137.0;
/// WGS-84 flattening.
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;
/// WGS-84 semi-minor axis in meters.
pub const WGS84_B: f64 = WGS84_A * (1.0 - WGS84_F);
/// First eccentricity squared.
pub const WGS84_E2: f64 = WGS84_F * (2.0 - WGS84_F);

/// Mean Earth radius (IUGG) used for great-circle ground ranges, km.
pub const MEAN_EARTH_RADIUS_KM: f64 = 6_371.008_8;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Coefficient of the line-of-sight inequality `h1 >= 0.0785 * d^2 / k_e`
/// (d in km, h1 in m). It is `1 / 3.57^2` rounded to four digits.
pub const LOS_HEIGHT_COEFFICIENT: f64 = 0.0785;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodeticPosition {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub altitude_m: f64,
}

impl GeodeticPosition {
    pub fn new(latitude_deg: f64, longitude_deg: f64, altitude_m: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&latitude_deg) {
            return Err(OspError::input(format!(
                "latitude {latitude_deg} outside [-90, 90]"
            )));
        }
        if !(-180.0..=180.0).contains(&longitude_deg) {
            return Err(OspError::input(format!(
                "longitude {longitude_deg} outside [-180, 180]"
            )));
        }
        if !altitude_m.is_finite() {
            return Err(OspError::input("altitude must be finite"));
        }
        Ok(Self {
            latitude_deg,
            longitude_deg,
            altitude_m,
        })
    }

    pub fn to_ecef(&self) -> EcefPosition {
        geodetic_to_ecef(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EcefPosition {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl EcefPosition {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Displacement `self - origin` as a plain vector.
    pub fn minus(&self, origin: &EcefPosition) -> [f64; 3] {
        [self.x - origin.x, self.y - origin.y, self.z - origin.z]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NedVector {
    pub north_m: f64,
    pub east_m: f64,
    pub down_m: f64,
}

impl NedVector {
    pub fn norm(&self) -> f64 {
        (self.north_m * self.north_m + self.east_m * self.east_m + self.down_m * self.down_m)
            .sqrt()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.north_m, self.east_m, self.down_m]
    }
}

/// Refraction model for the radio horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationParams {
    /// Effective earth-radius factor k_e.
    pub effective_earth_radius_factor: f64,
    /// Horizon coefficient in km per sqrt(m).
    pub horizon_coefficient: f64,
}

impl Default for PropagationParams {
    fn default() -> Self {
        Self {
            effective_earth_radius_factor: 4.0 / 3.0,
            horizon_coefficient: 3.57,
        }
    }
}

impl PropagationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.effective_earth_radius_factor > 0.0
            && self.effective_earth_radius_factor.is_finite())
        {
            return Err(OspError::config(
                "propagation.effective_earth_radius_factor",
                "must be a positive finite number",
            ));
        }
        if !(self.horizon_coefficient > 0.0 && self.horizon_coefficient.is_finite()) {
            return Err(OspError::config(
                "propagation.horizon_coefficient",
                "must be a positive finite number",
            ));
        }
        Ok(())
    }
}

/// 3x3 rotation, row-major.
pub type Rotation = [[f64; 3]; 3];

pub fn geodetic_to_ecef(p: &GeodeticPosition) -> EcefPosition {
    let lat = p.latitude_deg.to_radians();
    let lon = p.longitude_deg.to_radians();
    let (sin_lat, cos_lat) = lat.sin_cos();
    let (sin_lon, cos_lon) = lon.sin_cos();
    let n = WGS84_A / (1.0 - WGS84_E2 * sin_lat * sin_lat).sqrt();
    let h = p.altitude_m;
    EcefPosition {
        x: (n + h) * cos_lat * cos_lon,
        y: (n + h) * cos_lat * sin_lon,
        z: (n * (1.0 - WGS84_E2) + h) * sin_lat,
    }
}

/// Inverse of [`geodetic_to_ecef`].
///
/// Uses the fixed-point iteration `lat = atan2(z + e^2 N sin(lat), p)` with
/// the pole-stable height form, so it holds up at +-90 degrees. Longitude is
/// reported as 0 on the polar axis.
pub fn ecef_to_geodetic(e: &EcefPosition) -> Result<GeodeticPosition> {
    if !(e.x.is_finite() && e.y.is_finite() && e.z.is_finite()) {
        return Err(OspError::input("ECEF coordinates must be finite"));
    }
    if e.norm() == 0.0 {
        return Err(OspError::input("ECEF position at the Earth center"));
    }
    let p = e.x.hypot(e.y);
    let lon = if p == 0.0 { 0.0 } else { e.y.atan2(e.x) };

    let mut lat = e.z.atan2(p * (1.0 - WGS84_E2));
    for _ in 0..16 {
        let sin_lat = lat.sin();
        let n = WGS84_A / (1.0 - WGS84_E2 * sin_lat * sin_lat).sqrt();
        let next = (e.z + WGS84_E2 * n * sin_lat).atan2(p);
        let done = (next - lat).abs() < 1e-15;
        lat = next;
        if done {
            break;
        }
    }
    let (sin_lat, cos_lat) = lat.sin_cos();
    let n = WGS84_A / (1.0 - WGS84_E2 * sin_lat * sin_lat).sqrt();
    let h = p * cos_lat + e.z * sin_lat - WGS84_A * WGS84_A / n;

    Ok(GeodeticPosition {
        latitude_deg: lat.to_degrees(),
        longitude_deg: lon.to_degrees(),
        altitude_m: h,
    })
}

/// ECEF -> NED rotation at the given geodetic position.
pub fn ned_rotation(p: &GeodeticPosition) -> Rotation {
    let (sp, cp) = p.latitude_deg.to_radians().sin_cos();
    let (sl, cl) = p.longitude_deg.to_radians().sin_cos();
    [
        [-sp * cl, -sp * sl, cp],
        [-sl, cl, 0.0],
        [-cp * cl, -cp * sl, -sp],
    ]
}

fn rotate(r: &Rotation, v: [f64; 3]) -> [f64; 3] {
    [
        r[0][0] * v[0] + r[0][1] * v[1] + r[0][2] * v[2],
        r[1][0] * v[0] + r[1][1] * v[1] + r[1][2] * v[2],
        r[2][0] * v[0] + r[2][1] * v[1] + r[2][2] * v[2],
    ]
}

/// Vector from the aircraft to the sensor expressed in the aircraft's NED frame.
pub fn ned_vector(aircraft: &GeodeticPosition, sensor: &EcefPosition) -> NedVector {
    ned_vector_with(&ned_rotation(aircraft), &aircraft.to_ecef(), sensor)
}

/// [`ned_vector`] with the aircraft rotation and ECEF position already known.
pub fn ned_vector_with(
    rotation: &Rotation,
    aircraft: &EcefPosition,
    sensor: &EcefPosition,
) -> NedVector {
    let [n, e, d] = rotate(rotation, sensor.minus(aircraft));
    NedVector {
        north_m: n,
        east_m: e,
        down_m: d,
    }
}

/// Unit direction from the aircraft to the sensor in NED.
pub fn direction_cosines(aircraft: &GeodeticPosition, sensor: &EcefPosition) -> Result<[f64; 3]> {
    unit(ned_vector(aircraft, sensor))
}

pub(crate) fn unit(v: NedVector) -> Result<[f64; 3]> {
    let norm = v.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(OspError::DegenerateGeometry(
            "sensor coincides with the aircraft position".into(),
        ));
    }
    Ok([v.north_m / norm, v.east_m / norm, v.down_m / norm])
}

/// Radio horizon `r0 = c * sqrt(k_e) * (sqrt(h1) + sqrt(h2))` in km.
pub fn radio_horizon_km(h1_m: f64, h2_m: f64, params: &PropagationParams) -> f64 {
    params.horizon_coefficient
        * params.effective_earth_radius_factor.sqrt()
        * (h1_m.max(0.0).sqrt() + h2_m.max(0.0).sqrt())
}

/// Great-circle ground distance (haversine on the mean sphere), km.
pub fn great_circle_km(a: &GeodeticPosition, b: &GeodeticPosition) -> f64 {
    let p1 = a.latitude_deg.to_radians();
    let p2 = b.latitude_deg.to_radians();
    let dp = p2 - p1;
    let dl = (b.longitude_deg - a.longitude_deg).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * MEAN_EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Line-of-sight test from `transmitter` to `receiver`.
///
/// With a ground-level receiver this is exactly `h1 >= 0.0785 d^2 / k_e`
/// (boundary inclusive). A raised receiver antenna extends the horizon:
/// `sqrt(h1) + sqrt(h2) >= sqrt(0.0785 d^2 / k_e)`.
pub fn is_visible(
    transmitter: &GeodeticPosition,
    receiver: &GeodeticPosition,
    params: &PropagationParams,
) -> bool {
    let d_km = great_circle_km(transmitter, receiver);
    is_visible_at(
        transmitter.altitude_m,
        receiver.altitude_m,
        d_km,
        params.effective_earth_radius_factor,
    )
}

pub(crate) fn is_visible_at(h1_m: f64, h2_m: f64, ground_km: f64, k_e: f64) -> bool {
    let needed = LOS_HEIGHT_COEFFICIENT * ground_km * ground_km / k_e;
    if h2_m <= 0.0 {
        return h1_m >= needed;
    }
    let residual = needed.sqrt() - h2_m.sqrt();
    residual <= 0.0 || h1_m >= residual * residual
}

/// Straight-line distance in meters.
pub fn euclidean_distance(a: &EcefPosition, b: &EcefPosition) -> f64 {
    let [dx, dy, dz] = a.minus(b);
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Time of arrival `|p - s| / c + tau + e` with `e ~ N(0, noise_std_s^2)`.
///
/// The generator is owned by the caller; a zero standard deviation draws
/// nothing from it and returns the exact geometric value.
pub fn toa<R: Rng + ?Sized>(
    transmitter: &GeodeticPosition,
    sensor: &GeodeticPosition,
    tau_s: f64,
    noise_std_s: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(noise_std_s >= 0.0 && noise_std_s.is_finite()) {
        return Err(OspError::input("noise standard deviation must be >= 0"));
    }
    let range = euclidean_distance(&transmitter.to_ecef(), &sensor.to_ecef());
    let mut t = range / SPEED_OF_LIGHT + tau_s;
    if noise_std_s > 0.0 {
        let normal = Normal::new(0.0, noise_std_s)
            .map_err(|e| OspError::input(format!("noise distribution: {e}")))?;
        t += normal.sample(rng);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn geo(lat: f64, lon: f64, alt: f64) -> GeodeticPosition {
        GeodeticPosition::new(lat, lon, alt).unwrap()
    }

    #[test]
    fn equator_and_pole() {
        let e = geodetic_to_ecef(&geo(0.0, 0.0, 0.0));
        assert_eq!((e.x, e.y, e.z), (WGS84_A, 0.0, 0.0));

        let e = geodetic_to_ecef(&geo(90.0, 0.0, 0.0));
        assert!(e.x.abs() < 1e-9 && e.y.abs() < 1e-9);
        assert!((e.z - 6_356_752.314).abs() < 1e-3);
    }

    /// Independent conversion via the reduced-latitude parametrisation
    /// (x, y) = a cos(beta) + h n, z = b sin(beta) + h n_z.
    fn reference_ecef(lat_deg: f64, lon_deg: f64, h: f64) -> [f64; 3] {
        let phi = lat_deg.to_radians();
        let lam = lon_deg.to_radians();
        let beta = ((WGS84_B / WGS84_A) * phi.tan()).atan();
        let r = WGS84_A * beta.cos() + h * phi.cos();
        let z = WGS84_B * beta.sin() + h * phi.sin();
        [r * lam.cos(), r * lam.sin(), z]
    }

    #[test]
    fn matches_reduced_latitude_reference() {
        let e = geodetic_to_ecef(&geo(48.0, 7.0, 500.0));
        let r = reference_ecef(48.0, 7.0, 500.0);
        assert!((e.x - r[0]).abs() < 1e-6);
        assert!((e.y - r[1]).abs() < 1e-6);
        assert!((e.z - r[2]).abs() < 1e-6);
        // Frozen from an external reference implementation.
        assert!((e.x - 4_244_179.323_168).abs() < 1e-3, "{}", e.x);
        assert!((e.y - 521_119.694_588).abs() < 1e-3, "{}", e.y);
        assert!((e.z - 4_717_247.902_528).abs() < 1e-3, "{}", e.z);
    }

    #[test]
    fn inverse_special_points() {
        let g = ecef_to_geodetic(&EcefPosition::new(WGS84_A, 0.0, 0.0)).unwrap();
        assert!(g.latitude_deg.abs() < 1e-12);
        assert!(g.longitude_deg.abs() < 1e-12);
        assert!(g.altitude_m.abs() < 1e-6);

        let g = ecef_to_geodetic(&EcefPosition::new(0.0, 0.0, 6_356_752.314)).unwrap();
        assert!((g.latitude_deg - 90.0).abs() < 1e-12);
        assert_eq!(g.longitude_deg, 0.0);
        assert!(g.altitude_m.abs() < 1e-3);

        assert!(ecef_to_geodetic(&EcefPosition::default()).is_err());
    }

    #[test]
    fn rotation_at_origin() {
        let r = ned_rotation(&geo(0.0, 0.0, 0.0));
        let expect = [[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((r[i][j] - expect[i][j]).abs() < 1e-15);
            }
        }
        // A node radially below maps to pure Down.
        assert_eq!(rotate(&r, [-1000.0, 0.0, 0.0]), [0.0, 0.0, 1000.0]);
    }

    #[test]
    fn sensor_below_aircraft() {
        let aircraft = geo(0.0, 0.0, 1000.0);
        let sensor = geo(0.0, 0.0, 0.0).to_ecef();
        let v = ned_vector(&aircraft, &sensor);
        assert!(v.north_m.abs() < 1e-9 && v.east_m.abs() < 1e-9);
        assert!((v.down_m - 1000.0).abs() < 1e-3);
        let dc = direction_cosines(&aircraft, &sensor).unwrap();
        assert!((dc[2] - 1.0).abs() < 1e-12);

        let coincident = ned_vector(&aircraft, &aircraft.to_ecef());
        assert_eq!(coincident.as_array(), [0.0, 0.0, 0.0]);
        assert!(matches!(
            direction_cosines(&aircraft, &aircraft.to_ecef()),
            Err(OspError::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn antipodal_direction_flips_sign() {
        let aircraft = geo(47.0, 8.0, 9000.0);
        let a = aircraft.to_ecef();
        let s = EcefPosition::new(a.x + 12_000.0, a.y - 5_000.0, a.z + 300.0);
        let m = EcefPosition::new(a.x - 12_000.0, a.y + 5_000.0, a.z - 300.0);
        let d1 = direction_cosines(&aircraft, &s).unwrap();
        let d2 = direction_cosines(&aircraft, &m).unwrap();
        for i in 0..3 {
            assert!((d1[i] + d2[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn horizon_values() {
        let p = PropagationParams::default();
        assert_eq!(radio_horizon_km(0.0, 0.0, &p), 0.0);
        assert!((radio_horizon_km(10_000.0, 0.0, &p) - 412.23).abs() < 0.01);
        assert_eq!(
            radio_horizon_km(120.0, 9000.0, &p),
            radio_horizon_km(9000.0, 120.0, &p)
        );
    }

    #[test]
    fn visibility_cases() {
        let p = PropagationParams::default();
        let rx = geo(48.0, 7.0, 0.0);
        let far = geo(50.0, 7.0, 0.0);
        let d = great_circle_km(&rx, &far);
        let boundary = LOS_HEIGHT_COEFFICIENT * d * d / p.effective_earth_radius_factor;
        let tx = GeodeticPosition {
            altitude_m: boundary,
            ..far
        };
        assert!(is_visible(&tx, &rx, &p));
        let low = GeodeticPosition {
            altitude_m: boundary - 1e-6,
            ..far
        };
        assert!(!is_visible(&low, &rx, &p));
        assert!(!is_visible(&far, &rx, &p));

        // 10 km aircraft, 300 km ground range: needs ~5299 m.
        assert!(is_visible_at(10_000.0, 0.0, 300.0, 4.0 / 3.0));
        let need: f64 = 0.0785 * 300.0 * 300.0 / (4.0 / 3.0);
        assert!((need - 5299.0).abs() < 1.0);
    }

    #[test]
    fn raised_receiver_extends_horizon() {
        let k = 4.0 / 3.0;
        assert!(!is_visible_at(1000.0, 0.0, 150.0, k));
        assert!(is_visible_at(1000.0, 400.0, 150.0, k));
        assert!(is_visible_at(0.0, 2000.0, 100.0, k));
    }

    #[test]
    fn distances_and_toa() {
        let o = EcefPosition::default();
        assert_eq!(euclidean_distance(&o, &EcefPosition::new(3.0, 4.0, 0.0)), 5.0);
        assert_eq!(euclidean_distance(&o, &o), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = geo(10.0, 20.0, 100.0);
        assert_eq!(toa(&a, &a, 0.0, 0.0, &mut rng).unwrap(), 0.0);
        assert!(toa(&a, &a, 0.0, -1.0, &mut rng).is_err());

        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        let b = geo(11.0, 20.0, 0.0);
        let t1 = toa(&a, &b, 1e-3, 5e-9, &mut r1).unwrap();
        let t2 = toa(&a, &b, 1e-3, 5e-9, &mut r2).unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn toa_light_second() {
        // Two points on the x axis, one light-second apart.
        let a = ecef_to_geodetic(&EcefPosition::new(WGS84_A, 0.0, 0.0)).unwrap();
        let b = ecef_to_geodetic(&EcefPosition::new(WGS84_A + SPEED_OF_LIGHT, 0.0, 0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = toa(&a, &b, 0.0, 0.0, &mut rng).unwrap();
        assert!((t - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(GeodeticPosition::new(91.0, 0.0, 0.0).is_err());
        assert!(GeodeticPosition::new(0.0, -181.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip(lat in -90.0f64..=90.0, lon in -180.0f64..=180.0, alt in 0.0f64..20_000.0) {
            let g = geo(lat, lon, alt);
            let back = ecef_to_geodetic(&g.to_ecef()).unwrap();
            prop_assert!((back.latitude_deg - lat).abs() < 1e-9);
            if lat.abs() < 90.0 - 1e-9 {
                let dl = (back.longitude_deg - lon + 540.0).rem_euclid(360.0) - 180.0;
                prop_assert!(dl.abs() < 1e-9);
            }
            prop_assert!((back.altitude_m - alt).abs() < 1e-3);
        }

        #[test]
        fn rotation_orthonormal(lat in -90.0f64..=90.0, lon in -180.0f64..=180.0) {
            let r = ned_rotation(&geo(lat, lon, 0.0));
            for i in 0..3 {
                for j in 0..3 {
                    let dot: f64 = (0..3).map(|k| r[i][k] * r[j][k]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((dot - want).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn ned_preserves_norm(
            lat in -89.0f64..89.0, lon in -179.0f64..179.0,
            dx in -3e5f64..3e5, dy in -3e5f64..3e5, dz in -3e5f64..3e5,
        ) {
            let aircraft = geo(lat, lon, 10_000.0);
            let a = aircraft.to_ecef();
            let s = EcefPosition::new(a.x + dx, a.y + dy, a.z + dz);
            let v = ned_vector(&aircraft, &s);
            let d = euclidean_distance(&a, &s);
            prop_assume!(d > 1.0);
            prop_assert!(((v.norm() - d) / d).abs() < 1e-6);
            let dc = direction_cosines(&aircraft, &s).unwrap();
            let n = (dc[0] * dc[0] + dc[1] * dc[1] + dc[2] * dc[2]).sqrt();
            prop_assert!((n - 1.0).abs() < 1e-12);
        }

        #[test]
        fn visibility_monotone_in_altitude(h in 0.0f64..12_000.0, extra in 0.0f64..5_000.0,
                                           d in 0.0f64..500.0, h2 in 0.0f64..100.0) {
            let k = 4.0 / 3.0;
            if is_visible_at(h, h2, d, k) {
                prop_assert!(is_visible_at(h + extra, h2, d, k));
            }
        }

        #[test]
        fn horizon_monotone(h1 in 0.0f64..1e4, h2 in 0.0f64..1e4, dh in 0.0f64..1e3, k in 0.5f64..2.0) {
            let p = PropagationParams { effective_earth_radius_factor: k, ..Default::default() };
            let q = PropagationParams { effective_earth_radius_factor: k + 0.1, ..Default::default() };
            let base = radio_horizon_km(h1, h2, &p);
            prop_assert!(radio_horizon_km(h1 + dh, h2, &p) >= base);
            prop_assert!(radio_horizon_km(h1, h2 + dh, &p) >= base);
            prop_assert!(radio_horizon_km(h1, h2, &q) >= base);
        }
    }
}
