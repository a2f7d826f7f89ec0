//! Great-circle geometry in kilometers.
//!
//! Every distance in this crate goes through [`Metric`], which is either the
//! haversine distance on a sphere of radius [`EARTH_RADIUS_KM`] or a planar
//! Euclidean distance that treats `(lat, lon)` as plane coordinates. The planar
//! metric exists for synthetic experiments; downstream code never assumes which
//! one is active.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius used by the haversine metric.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Norm below which the averaged unit vector is considered degenerate.
const DEGENERATE_NORM: f64 = 1e-9;

/// A location in degrees. Latitude lies in `[-90, 90]`, longitude in `(-180, 180]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    /// Validates the coordinate. A longitude of exactly `-180` is folded to `180`.
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !lon.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(Error::InvalidCoordinate { lat, lon });
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(Error::InvalidCoordinate { lat, lon });
        }
        let lon = if lon == -180.0 { 180.0 } else { lon };
        Ok(GeoPoint { lat, lon })
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && self.lon > -180.0
            && self.lon <= 180.0
    }

    fn to_unit_vector(self) -> [f64; 3] {
        let (lat, lon) = (self.lat.to_radians(), self.lon.to_radians());
        [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()]
    }

    fn from_vector(v: [f64; 3]) -> Self {
        let lat = v[2].atan2(v[0].hypot(v[1])).to_degrees();
        let mut lon = v[1].atan2(v[0]).to_degrees();
        if lon <= -180.0 {
            lon = 180.0;
        }
        GeoPoint {
            lat: lat.clamp(-90.0, 90.0),
            lon,
        }
    }
}

/// Great-circle distance between two points, in kilometers.
pub fn haversine_km(a: GeoPoint, b: GeoPoint) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.clamp(0.0, 1.0).sqrt().asin()
}

/// Euclidean distance with latitude and longitude used as plane coordinates.
pub fn planar_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    (a.lat - b.lat).hypot(a.lon - b.lon)
}

/// Normalized mean of the members' unit vectors, converted back to degrees.
///
/// When the mean vector nearly vanishes (an antipodal pair, for instance) the
/// first point is returned. If every point is identical that point is returned
/// unchanged, so co-located groups have a centroid at distance exactly zero.
pub fn spherical_centroid<I>(points: I) -> Result<GeoPoint>
where
    I: IntoIterator<Item = GeoPoint>,
{
    let mut iter = points.into_iter();
    let first = iter.next().ok_or(Error::EmptyPointSet)?;
    let mut sum = first.to_unit_vector();
    let mut count = 1usize;
    let mut all_same = true;
    for p in iter {
        all_same &= p == first;
        let v = p.to_unit_vector();
        sum[0] += v[0];
        sum[1] += v[1];
        sum[2] += v[2];
        count += 1;
    }
    if all_same {
        return Ok(first);
    }
    let n = count as f64;
    let mean = [sum[0] / n, sum[1] / n, sum[2] / n];
    let norm = (mean[0] * mean[0] + mean[1] * mean[1] + mean[2] * mean[2]).sqrt();
    if norm < DEGENERATE_NORM {
        return Ok(first);
    }
    Ok(GeoPoint::from_vector([
        mean[0] / norm,
        mean[1] / norm,
        mean[2] / norm,
    ]))
}

/// Arithmetic mean of latitude and longitude.
pub fn planar_centroid<I>(points: I) -> Result<GeoPoint>
where
    I: IntoIterator<Item = GeoPoint>,
{
    let mut iter = points.into_iter();
    let first = iter.next().ok_or(Error::EmptyPointSet)?;
    let (mut lat, mut lon, mut count, mut all_same) = (first.lat, first.lon, 1usize, true);
    for p in iter {
        all_same &= p == first;
        lat += p.lat;
        lon += p.lon;
        count += 1;
    }
    if all_same {
        return Ok(first);
    }
    Ok(GeoPoint {
        lat: lat / count as f64,
        lon: lon / count as f64,
    })
}

/// Largest haversine distance over unordered pairs; zero for fewer than two points.
pub fn max_pairwise_span_km(points: &[GeoPoint]) -> f64 {
    Metric::Haversine.max_pairwise_span(points)
}

/// Distance function used for dispersion, spans and join constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Haversine,
    Planar,
}

impl Metric {
    #[inline]
    pub fn distance(self, a: GeoPoint, b: GeoPoint) -> f64 {
        match self {
            Metric::Haversine => haversine_km(a, b),
            Metric::Planar => planar_distance(a, b),
        }
    }

    /// Community center under this metric.
    pub fn centroid<I>(self, points: I) -> Result<GeoPoint>
    where
        I: IntoIterator<Item = GeoPoint>,
    {
        match self {
            Metric::Haversine => spherical_centroid(points),
            Metric::Planar => planar_centroid(points),
        }
    }

    pub fn max_pairwise_span(self, points: &[GeoPoint]) -> f64 {
        let mut best = 0.0f64;
        for (i, &a) in points.iter().enumerate() {
            for &b in &points[i + 1..] {
                best = best.max(self.distance(a, b));
            }
        }
        best
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "haversine" => Ok(Metric::Haversine),
            "planar" => Ok(Metric::Planar),
            other => Err(Error::Config(format!("unknown metric '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn p(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    #[test]
    fn haversine_reference_distances() {
        assert_eq!(haversine_km(p(0.0, 0.0), p(0.0, 0.0)), 0.0);
        assert_abs_diff_eq!(
            haversine_km(p(0.0, 0.0), p(90.0, 0.0)),
            PI * EARTH_RADIUS_KM / 2.0,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            haversine_km(p(0.0, 0.0), p(0.0, 180.0)),
            PI * EARTH_RADIUS_KM,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            haversine_km(p(0.0, 0.0), p(90.0, 0.0)),
            10007.543,
            epsilon = 1e-3
        );
        assert_abs_diff_eq!(
            haversine_km(p(0.0, 0.0), p(0.0, 180.0)),
            20015.087,
            epsilon = 1e-3
        );
    }

    #[test]
    fn coordinate_validation() {
        assert!(GeoPoint::new(91.0, 0.0).is_err());
        assert!(GeoPoint::new(0.0, 180.5).is_err());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
        assert_eq!(GeoPoint::new(0.0, -180.0).unwrap().lon, 180.0);
    }

    #[test]
    fn centroid_examples() {
        assert_eq!(spherical_centroid([p(10.0, 20.0)]).unwrap(), p(10.0, 20.0));

        let c = spherical_centroid([p(0.0, 0.0), p(0.0, 90.0)]).unwrap();
        assert_abs_diff_eq!(c.lat, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.lon, 45.0, epsilon = 1e-12);

        // antipodal pair falls back to the first point
        let c = spherical_centroid([p(0.0, 0.0), p(0.0, 180.0)]).unwrap();
        assert_eq!(c, p(0.0, 0.0));

        assert!(matches!(
            spherical_centroid(std::iter::empty()),
            Err(Error::EmptyPointSet)
        ));
    }

    #[test]
    fn planar_centroid_is_mean() {
        let c = planar_centroid([p(0.0, 0.0), p(2.0, 4.0)]).unwrap();
        assert_eq!(c, p(1.0, 2.0));
        assert_eq!(planar_distance(p(0.0, 0.0), p(3.0, 4.0)), 5.0);
    }

    #[test]
    fn span_examples() {
        assert_eq!(max_pairwise_span_km(&[]), 0.0);
        assert_eq!(max_pairwise_span_km(&[p(1.0, 1.0)]), 0.0);
        assert_abs_diff_eq!(
            max_pairwise_span_km(&[p(0.0, 0.0), p(0.0, 90.0), p(0.0, 45.0)]),
            10007.543,
            epsilon = 1e-3
        );
    }

    fn point() -> impl Strategy<Value = GeoPoint> {
        (-90.0f64..=90.0, -179.999f64..=180.0).prop_map(|(lat, lon)| p(lat, lon))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn distance_axioms(a in point(), b in point(), c in point()) {
            prop_assert_eq!(haversine_km(a, a), 0.0);
            prop_assert!((haversine_km(a, b) - haversine_km(b, a)).abs() <= 1e-9);
            prop_assert!(haversine_km(a, c) <= haversine_km(a, b) + haversine_km(b, c) + 1e-6);
        }

        #[test]
        fn centroid_of_copies(a in point(), k in 1usize..20) {
            let c = spherical_centroid(std::iter::repeat_n(a, k)).unwrap();
            prop_assert!((c.lat - a.lat).abs() <= 1e-9);
            prop_assert!((c.lon - a.lon).abs() <= 1e-9);
        }

        #[test]
        fn span_matches_exhaustive_scan(pts in prop::collection::vec(point(), 5)) {
            // independent re-scan over all ordered pairs
            let mut expected = 0.0f64;
            for a in &pts {
                for b in &pts {
                    expected = expected.max(haversine_km(*a, *b));
                }
            }
            prop_assert!((max_pairwise_span_km(&pts) - expected).abs() <= 1e-9);
        }

        #[test]
        fn centroid_is_valid(pts in prop::collection::vec(point(), 1..10)) {
            prop_assert!(spherical_centroid(pts.iter().copied()).unwrap().is_valid());
        }
    }
}
