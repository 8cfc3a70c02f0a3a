//! Spherical geodesy: haversine distance and initial compass bearing.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// IUGG mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// A validated WGS84 position in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoCoordinate {
    lon: f64,
    lat: f64,
}

impl GeoCoordinate {
    pub fn new(lon: f64, lat: f64) -> Result<Self> {
        if !lon.is_finite() || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::domain(format!("longitude {lon} outside [-180, 180]")));
        }
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(Error::domain(format!("latitude {lat} outside [-90, 90]")));
        }
        Ok(Self { lon, lat })
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }
}

/// Great-circle distance in meters on a sphere of radius [`EARTH_RADIUS_M`].
///
/// Exactly symmetric in its arguments: the deltas enter only through their
/// absolute values and the cosine product commutes.
pub fn haversine_distance(a: GeoCoordinate, b: GeoCoordinate) -> f64 {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dphi = (b.lat - a.lat).abs().to_radians();
    let dlambda = (b.lon - a.lon).abs().to_radians();
    let s_phi = (dphi / 2.0).sin();
    let s_lambda = (dlambda / 2.0).sin();
    let h = s_phi * s_phi + phi1.cos() * phi2.cos() * s_lambda * s_lambda;
    2.0 * EARTH_RADIUS_M * h.clamp(0.0, 1.0).sqrt().asin()
}

/// Initial great-circle bearing from `a` to `b`, degrees clockwise from
/// north in `[0, 360)`. Identical points yield 0.
pub fn compass_bearing(a: GeoCoordinate, b: GeoCoordinate) -> f64 {
    if a == b {
        return 0.0;
    }
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dlambda = (b.lon - a.lon).to_radians();
    let x = dlambda.sin() * phi2.cos();
    let y = phi1.cos() * phi2.sin() - phi1.sin() * phi2.cos() * dlambda.cos();
    let deg = x.atan2(y).to_degrees();
    let wrapped = (deg + 360.0) % 360.0;
    if wrapped >= 360.0 {
        0.0
    } else {
        wrapped
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(lon: f64, lat: f64) -> GeoCoordinate {
        GeoCoordinate::new(lon, lat).unwrap()
    }

    /// Spherical law of cosines, used only as an independent check.
    fn law_of_cosines(a: GeoCoordinate, b: GeoCoordinate) -> f64 {
        let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
        let dl = (b.lon - a.lon).to_radians();
        let cos_c = p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos();
        EARTH_RADIUS_M * cos_c.clamp(-1.0, 1.0).acos()
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(GeoCoordinate::new(180.5, 0.0).is_err());
        assert!(GeoCoordinate::new(0.0, -90.01).is_err());
        assert!(GeoCoordinate::new(f64::NAN, 0.0).is_err());
        assert!(GeoCoordinate::new(-180.0, 90.0).is_ok());
    }

    #[test]
    fn distance_examples() {
        assert_eq!(haversine_distance(c(0.0, 0.0), c(0.0, 0.0)), 0.0);
        let quarter = haversine_distance(c(0.0, 0.0), c(90.0, 0.0));
        assert!((quarter - std::f64::consts::FRAC_PI_2 * EARTH_RADIUS_M).abs() < 1e-6);
        assert!((quarter - 10_007_557.0).abs() < 1.0);

        let berlin = c(13.405, 52.52);
        let tokyo = c(139.6917, 35.6895);
        let d = haversine_distance(berlin, tokyo);
        let oracle = law_of_cosines(berlin, tokyo);
        assert!(((d - oracle) / oracle).abs() < 1e-9, "{d} vs {oracle}");
    }

    #[test]
    fn antipodal_is_half_circumference() {
        let d = haversine_distance(c(0.0, 0.0), c(180.0, 0.0));
        assert!((d - std::f64::consts::PI * EARTH_RADIUS_M).abs() < 1e-6);
    }

    #[test]
    fn bearing_examples() {
        assert_eq!(compass_bearing(c(0.0, 0.0), c(0.0, 1.0)), 0.0);
        assert!((compass_bearing(c(0.0, 0.0), c(1.0, 0.0)) - 90.0).abs() < 1e-12);
        assert!((compass_bearing(c(0.0, 0.0), c(-1.0, 0.0)) - 270.0).abs() < 1e-12);
        assert!((compass_bearing(c(0.0, 0.0), c(0.0, -1.0)) - 180.0).abs() < 1e-12);
        assert_eq!(compass_bearing(c(5.0, 5.0), c(5.0, 5.0)), 0.0);
    }

    fn coord() -> impl Strategy<Value = GeoCoordinate> {
        (-180.0f64..=180.0, -89.0f64..=89.0).prop_map(|(lon, lat)| c(lon, lat))
    }

    proptest! {
        #[test]
        fn distance_symmetric_and_zero_on_self(a in coord(), b in coord()) {
            prop_assert_eq!(haversine_distance(a, b), haversine_distance(b, a));
            prop_assert_eq!(haversine_distance(a, a), 0.0);
            prop_assert!(haversine_distance(a, b) >= 0.0);
        }

        #[test]
        fn triangle_inequality(a in coord(), b in coord(), m in coord()) {
            let ab = haversine_distance(a, b);
            let via = haversine_distance(a, m) + haversine_distance(m, b);
            prop_assert!(ab <= via * (1.0 + 1e-6) + 1e-6);
        }

        #[test]
        fn bearing_in_range(a in coord(), b in coord()) {
            let br = compass_bearing(a, b);
            prop_assert!((0.0..360.0).contains(&br));
        }

        #[test]
        fn reverse_bearing_on_meridians_and_equator(
            lon in -179.0f64..179.0, lat1 in -80.0f64..80.0, lat2 in -80.0f64..80.0, dlon in 0.001f64..1.0,
        ) {
            // Along a meridian or the equator the great circle is symmetric,
            // so forward and reverse bearings differ by exactly 180 degrees.
            prop_assume!((lat1 - lat2).abs() > 1e-3);
            let (a, b) = (c(lon, lat1), c(lon, lat2));
            let diff = (compass_bearing(a, b) - compass_bearing(b, a)).rem_euclid(360.0);
            prop_assert!((diff - 180.0).abs() < 1e-6);
            let (e, w) = (c(lon, 0.0), c(lon + dlon, 0.0));
            let diff = (compass_bearing(e, w) - compass_bearing(w, e)).rem_euclid(360.0);
            prop_assert!((diff - 180.0).abs() < 1e-6);
        }
    }
}
