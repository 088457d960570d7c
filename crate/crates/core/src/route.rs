//! Surveyed route database of per-provider signal strengths.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius, meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Signal at or below which a point counts as bad for a provider.
pub const DEFAULT_BAD_THRESHOLD_DBM: f64 = -80.0;

const MIN_DBM: f64 = -120.0;
const MAX_DBM: f64 = 0.0;

#[derive(Debug, Error)]
pub enum RouteError {
    #[error("line {line}: malformed field `{field}`: {reason}")]
    MalformedRow {
        line: u64,
        field: String,
        reason: String,
    },
    #[error("route database needs at least 2 points, found {0}")]
    EmptyDatabase(usize),
    #[error("line {line}: duplicate point label `{label}`")]
    DuplicateLabel { line: u64, label: String },
    #[error("header must be `label,lat,lon,<provider>...`: {0}")]
    BadHeader(String),
    #[error("line {line}: point `{label}` does not advance along the route")]
    NonAdvancingPoint { line: u64, label: String },
    #[error("unknown provider `{0}`")]
    UnknownProvider(String),
    #[error("point index {index} out of range (route has {len} points)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("no point labelled `{0}`")]
    UnknownLabel(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub latitude: f64,
    pub longitude: f64,
}

impl GeoPoint {
    pub fn new(latitude: f64, longitude: f64) -> Option<Self> {
        ((-90.0..=90.0).contains(&latitude) && (-180.0..=180.0).contains(&longitude)).then_some(
            Self {
                latitude,
                longitude,
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProviderId(String);

impl ProviderId {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ProviderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ProviderId {
    fn from(s: &str) -> Self {
        Self::new(s)
    }
}

/// One surveyed point. `signals` is aligned with [`RouteDb::providers`].
#[derive(Debug, Clone, PartialEq)]
pub struct BsspRecord {
    pub label: String,
    pub point: GeoPoint,
    pub signals: Vec<f64>,
}

/// The next bad-signal point ahead of a position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsspHit<'a> {
    pub index: usize,
    pub record: &'a BsspRecord,
    pub distance_m: f64,
}

/// Great-circle distance in meters.
pub fn haversine_m(p1: GeoPoint, p2: GeoPoint) -> f64 {
    let (phi1, phi2) = (p1.latitude.to_radians(), p2.latitude.to_radians());
    let dphi = (p2.latitude - p1.latitude).to_radians();
    let dlambda = (p2.longitude - p1.longitude).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteDb {
    providers: Vec<ProviderId>,
    points: Vec<BsspRecord>,
    cumulative_m: Vec<f64>,
    bad_threshold_dbm: f64,
}

impl RouteDb {
    /// Reads `label,lat,lon,<provider>...` rows in route order. Lines starting
    /// with `#` are comments.
    pub fn load_csv<R: Read>(source: R) -> Result<Self, RouteError> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(source);
        let header = reader.headers()?.clone();
        if header.len() < 4 {
            return Err(RouteError::BadHeader(format!(
                "need at least one provider column, got {} columns",
                header.len()
            )));
        }
        let expected = ["label", "lat", "lon"];
        for (want, got) in expected.iter().zip(header.iter()) {
            if !got.eq_ignore_ascii_case(want) {
                return Err(RouteError::BadHeader(format!(
                    "expected `{want}`, got `{got}`"
                )));
            }
        }
        let providers: Vec<ProviderId> = header.iter().skip(3).map(ProviderId::new).collect();
        let unique: HashSet<_> = providers.iter().collect();
        if unique.len() != providers.len() {
            return Err(RouteError::BadHeader("duplicate provider column".into()));
        }

        let mut points = Vec::new();
        let mut labels = HashSet::new();
        for row in reader.records() {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line());
            let malformed = |field: &str, reason: String| RouteError::MalformedRow {
                line,
                field: field.to_string(),
                reason,
            };
            let number = |idx: usize, name: &str| -> Result<f64, RouteError> {
                let raw = row.get(idx).unwrap_or("");
                raw.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| malformed(name, format!("`{raw}` is not a number")))
            };
            let label = row.get(0).unwrap_or("").to_string();
            if label.is_empty() {
                return Err(malformed("label", "empty label".into()));
            }
            let lat = number(1, "lat")?;
            let lon = number(2, "lon")?;
            let point = GeoPoint::new(lat, lon)
                .ok_or_else(|| malformed("lat/lon", format!("({lat}, {lon}) out of range")))?;
            let mut signals = Vec::with_capacity(providers.len());
            for (k, p) in providers.iter().enumerate() {
                let dbm = number(3 + k, p.as_str())?;
                if !(MIN_DBM..=MAX_DBM).contains(&dbm) {
                    return Err(malformed(
                        p.as_str(),
                        format!("{dbm} dBm outside [{MIN_DBM}, {MAX_DBM}]"),
                    ));
                }
                signals.push(dbm);
            }
            if !labels.insert(label.clone()) {
                return Err(RouteError::DuplicateLabel { line, label });
            }
            points.push((
                line,
                BsspRecord {
                    label,
                    point,
                    signals,
                },
            ));
        }
        if points.len() < 2 {
            return Err(RouteError::EmptyDatabase(points.len()));
        }

        let mut cumulative_m = Vec::with_capacity(points.len());
        let mut total = 0.0;
        for (i, (line, rec)) in points.iter().enumerate() {
            if i > 0 {
                let step = haversine_m(points[i - 1].1.point, rec.point);
                if step <= 0.0 {
                    return Err(RouteError::NonAdvancingPoint {
                        line: *line,
                        label: rec.label.clone(),
                    });
                }
                total += step;
            }
            cumulative_m.push(total);
        }
        Ok(Self {
            providers,
            points: points.into_iter().map(|(_, r)| r).collect(),
            cumulative_m,
            bad_threshold_dbm: DEFAULT_BAD_THRESHOLD_DBM,
        })
    }

    pub fn to_csv<W: Write>(&self, sink: W) -> Result<(), RouteError> {
        let mut w = csv::Writer::from_writer(sink);
        let mut header = vec!["label".to_string(), "lat".into(), "lon".into()];
        header.extend(self.providers.iter().map(|p| p.0.clone()));
        w.write_record(&header)?;
        for rec in &self.points {
            let mut row = vec![
                rec.label.clone(),
                rec.point.latitude.to_string(),
                rec.point.longitude.to_string(),
            ];
            row.extend(rec.signals.iter().map(|s| s.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn with_bad_threshold(mut self, dbm: f64) -> Self {
        self.bad_threshold_dbm = dbm;
        self
    }

    pub fn bad_threshold_dbm(&self) -> f64 {
        self.bad_threshold_dbm
    }

    pub fn providers(&self) -> &[ProviderId] {
        &self.providers
    }

    pub fn points(&self) -> &[BsspRecord] {
        &self.points
    }

    pub fn cumulative_m(&self) -> &[f64] {
        &self.cumulative_m
    }

    pub fn length_m(&self) -> f64 {
        *self.cumulative_m.last().expect("at least two points")
    }

    pub fn provider_index(&self, provider: &ProviderId) -> Result<usize, RouteError> {
        self.providers
            .iter()
            .position(|p| p == provider)
            .ok_or_else(|| RouteError::UnknownProvider(provider.to_string()))
    }

    pub fn position_of(&self, label: &str) -> Result<f64, RouteError> {
        self.points
            .iter()
            .position(|p| p.label == label)
            .map(|i| self.cumulative_m[i])
            .ok_or_else(|| RouteError::UnknownLabel(label.to_string()))
    }

    pub fn is_bssp(&self, index: usize, provider: &ProviderId) -> Result<bool, RouteError> {
        Ok(self.signal_at(index, provider)? <= self.bad_threshold_dbm)
    }

    /// First point strictly ahead of `position_m` whose signal for `provider`
    /// is at or below the bad threshold.
    pub fn next_bssp(
        &self,
        position_m: f64,
        provider: &ProviderId,
    ) -> Result<Option<BsspHit<'_>>, RouteError> {
        let k = self.provider_index(provider)?;
        Ok(self
            .points
            .iter()
            .zip(&self.cumulative_m)
            .enumerate()
            .find(|(_, (rec, &cum))| cum > position_m && rec.signals[k] <= self.bad_threshold_dbm)
            .map(|(index, (record, &cum))| BsspHit {
                index,
                record,
                distance_m: cum - position_m,
            }))
    }

    pub fn signal_at(&self, index: usize, provider: &ProviderId) -> Result<f64, RouteError> {
        let k = self.provider_index(provider)?;
        self.points
            .get(index)
            .map(|p| p.signals[k])
            .ok_or(RouteError::IndexOutOfRange {
                index,
                len: self.points.len(),
            })
    }

    /// Index of the last point at or behind `position_m`.
    pub fn passed_index(&self, position_m: f64) -> usize {
        self.cumulative_m
            .iter()
            .rposition(|&c| c <= position_m)
            .unwrap_or(0)
    }

    /// Index of the first point strictly ahead of `position_m`, clamped to the
    /// final point.
    pub fn ahead_index(&self, position_m: f64) -> usize {
        self.cumulative_m
            .iter()
            .position(|&c| c > position_m)
            .unwrap_or(self.points.len() - 1)
    }

    pub fn current_signal(
        &self,
        position_m: f64,
        provider: &ProviderId,
    ) -> Result<f64, RouteError> {
        self.signal_at(self.passed_index(position_m), provider)
    }

    pub fn future_signal(&self, position_m: f64, provider: &ProviderId) -> Result<f64, RouteError> {
        self.signal_at(self.ahead_index(position_m), provider)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "label,lat,lon,SP1,SP2\n\
        # comment line\n\
        A,33.144552,73.745719,-100,-70\n\
        B,33.144449,73.745606,-60,-85\n\
        C,33.144377,73.745550,-85,-50\n";

    fn small() -> RouteDb {
        RouteDb::load_csv(SMALL.as_bytes()).unwrap()
    }

    #[test]
    fn loads_with_comments() {
        let db = small();
        assert_eq!(db.points().len(), 3);
        assert_eq!(
            db.providers(),
            &[ProviderId::new("SP1"), ProviderId::new("SP2")]
        );
        assert_eq!(db.cumulative_m()[0], 0.0);
        assert!(db.cumulative_m().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn header_only_is_empty() {
        let err = RouteDb::load_csv("label,lat,lon,SP1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, RouteError::EmptyDatabase(0)));
    }

    #[test]
    fn malformed_and_duplicate_rows() {
        let bad = "label,lat,lon,SP1\nA,1,1,bad\nB,1,2,-50\n";
        match RouteDb::load_csv(bad.as_bytes()).unwrap_err() {
            RouteError::MalformedRow { line, field, .. } => {
                assert_eq!(line, 2);
                assert_eq!(field, "SP1");
            }
            e => panic!("unexpected {e}"),
        }
        let dup = "label,lat,lon,SP1\nA,1,1,-50\nA,1,2,-50\n";
        assert!(matches!(
            RouteDb::load_csv(dup.as_bytes()).unwrap_err(),
            RouteError::DuplicateLabel { .. }
        ));
        let range = "label,lat,lon,SP1\nA,1,1,-150\nB,1,2,-50\n";
        assert!(matches!(
            RouteDb::load_csv(range.as_bytes()).unwrap_err(),
            RouteError::MalformedRow { .. }
        ));
        let header = "name,lat,lon,SP1\nA,1,1,-50\nB,1,2,-50\n";
        assert!(matches!(
            RouteDb::load_csv(header.as_bytes()).unwrap_err(),
            RouteError::BadHeader(_)
        ));
        let stuck = "label,lat,lon,SP1\nA,1,1,-50\nB,1,1,-50\n";
        assert!(matches!(
            RouteDb::load_csv(stuck.as_bytes()).unwrap_err(),
            RouteError::NonAdvancingPoint { .. }
        ));
    }

    #[test]
    fn haversine_identity_and_symmetry() {
        let a = GeoPoint::new(33.144552, 73.745719).unwrap();
        let b = GeoPoint::new(33.144449, 73.745606).unwrap();
        assert_eq!(haversine_m(a, a), 0.0);
        assert_eq!(haversine_m(a, b), haversine_m(b, a));
        // one degree of latitude on this sphere
        let d = haversine_m(
            GeoPoint::new(0.0, 0.0).unwrap(),
            GeoPoint::new(1.0, 0.0).unwrap(),
        );
        assert!((d - EARTH_RADIUS_M * std::f64::consts::PI / 180.0).abs() < 1e-6);
    }

    #[test]
    fn next_bssp_skips_current_point() {
        let db = small();
        let sp1 = ProviderId::new("SP1");
        let hit = db.next_bssp(0.0, &sp1).unwrap().unwrap();
        assert_eq!(hit.record.label, "C");
        assert!((hit.distance_m - db.cumulative_m()[2]).abs() < 1e-12);
        assert!(db.next_bssp(db.length_m(), &sp1).unwrap().is_none());
        assert!(matches!(
            db.next_bssp(0.0, &ProviderId::new("SP9")),
            Err(RouteError::UnknownProvider(_))
        ));
    }

    #[test]
    fn threshold_is_configurable() {
        let db = small().with_bad_threshold(-65.0);
        let sp2 = ProviderId::new("SP2");
        assert_eq!(db.next_bssp(0.0, &sp2).unwrap().unwrap().record.label, "B");
        assert!(db.is_bssp(0, &sp2).unwrap());
    }

    #[test]
    fn signal_queries() {
        let db = small();
        let sp1 = ProviderId::new("SP1");
        assert_eq!(db.signal_at(0, &sp1).unwrap(), -100.0);
        assert!(matches!(
            db.signal_at(3, &sp1),
            Err(RouteError::IndexOutOfRange { index: 3, len: 3 })
        ));
        assert_eq!(db.future_signal(0.0, &sp1).unwrap(), -60.0);
        assert_eq!(db.current_signal(0.0, &sp1).unwrap(), -100.0);
        let end = db.length_m();
        assert_eq!(db.future_signal(end, &sp1).unwrap(), -85.0);
        assert_eq!(db.current_signal(end, &sp1).unwrap(), -85.0);
    }

    #[test]
    fn position_of_label() {
        let db = small();
        assert_eq!(db.position_of("A").unwrap(), 0.0);
        assert!(db.position_of("Z").is_err());
    }
}
