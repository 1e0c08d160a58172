//! Vocabulary types shared by the registry, the post-detection machine and
//! the clarification engine.
//!
//! Every constructor validates its invariants and rejects bad input; nothing
//! here silently repairs a value. Geometry is planar on (lat, lon) with
//! altitude ignored.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("operator id must be exactly 8 bytes (16 hex characters), got {0:?}")]
    OperatorId(String),
    #[error("drone id must be 1-20 printable characters, got {0:?}")]
    DroneId(String),
    #[error("coordinate out of range: lat={lat} lon={lon} alt={alt}")]
    GeoPoint { lat: f64, lon: f64, alt: f64 },
    #[error("zone needs at least 3 vertices, got {0}")]
    ZoneTooFewVertices(usize),
    #[error("zone has repeated consecutive vertex at index {0}")]
    ZoneRepeatedVertex(usize),
    #[error("zone edges {0} and {1} cross")]
    ZoneSelfIntersecting(usize, usize),
    #[error("time window start {start} must precede end {end}")]
    TimeWindow { start: u64, end: u64 },
    #[error("velocity must be finite and non-negative, got {0}")]
    Velocity(f64),
    #[error("time mark {time_mark} is more than {bound_ms} ms from send time {sent_at}")]
    ClockSkew {
        time_mark: u64,
        sent_at: u64,
        bound_ms: u64,
    },
    #[error("timed interdiction needs a positive timeout")]
    ZeroTimeout,
}

/// Milliseconds since the Unix epoch.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Timestamp(pub u64);

impl Timestamp {
    pub const fn from_millis(ms: u64) -> Self {
        Timestamp(ms)
    }

    pub const fn as_millis(self) -> u64 {
        self.0
    }

    pub fn plus_ms(self, ms: u64) -> Self {
        Timestamp(self.0.saturating_add(ms))
    }

    pub fn saturating_sub(self, earlier: Timestamp) -> u64 {
        self.0.saturating_sub(earlier.0)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ms", self.0)
    }
}

/// 8-byte operator identifier, rendered as 16 lowercase hex characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OperatorId([u8; 8]);

impl OperatorId {
    pub const fn from_bytes(bytes: [u8; 8]) -> Self {
        OperatorId(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 8] {
        &self.0
    }
}

impl fmt::Display for OperatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl FromStr for OperatorId {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes = hex::decode(s).map_err(|_| DomainError::OperatorId(s.to_string()))?;
        let arr: [u8; 8] = bytes
            .try_into()
            .map_err(|_| DomainError::OperatorId(s.to_string()))?;
        Ok(OperatorId(arr))
    }
}

impl Serialize for OperatorId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OperatorId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// UAS unique identifier as carried in a Remote ID broadcast.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DroneId(String);

impl DroneId {
    pub const MAX_LEN: usize = 20;

    pub fn new(value: impl Into<String>) -> Result<Self, DomainError> {
        let value = value.into();
        let len = value.chars().count();
        if len == 0 || len > Self::MAX_LEN || value.chars().any(char::is_control) {
            return Err(DomainError::DroneId(value));
        }
        Ok(DroneId(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DroneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for DroneId {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DroneId::new(s)
    }
}

impl Serialize for DroneId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for DroneId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        DroneId::new(s).map_err(serde::de::Error::custom)
    }
}

/// Position in degrees, altitude in meters above ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
    alt: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64, alt: f64) -> Result<Self, DomainError> {
        let ok = (-90.0..=90.0).contains(&lat)
            && (-180.0..=180.0).contains(&lon)
            && alt.is_finite()
            && alt >= 0.0;
        if !ok {
            return Err(DomainError::GeoPoint { lat, lon, alt });
        }
        Ok(GeoPoint { lat, lon, alt })
    }

    /// Ground-level point.
    pub fn surface(lat: f64, lon: f64) -> Result<Self, DomainError> {
        GeoPoint::new(lat, lon, 0.0)
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    pub fn alt(&self) -> f64 {
        self.alt
    }

    fn same_ground(&self, other: &GeoPoint) -> bool {
        self.lat == other.lat && self.lon == other.lon
    }
}

impl<'de> Deserialize<'de> for GeoPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            lat: f64,
            lon: f64,
            #[serde(default)]
            alt: f64,
        }
        let raw = Raw::deserialize(d)?;
        GeoPoint::new(raw.lat, raw.lon, raw.alt).map_err(serde::de::Error::custom)
    }
}

/// Simple polygon on the (lat, lon) plane. Serialized as `[[lat, lon], ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    vertices: Vec<GeoPoint>,
}

impl Zone {
    pub fn new(vertices: Vec<GeoPoint>) -> Result<Self, DomainError> {
        let n = vertices.len();
        if n < 3 {
            return Err(DomainError::ZoneTooFewVertices(n));
        }
        for i in 0..n {
            if vertices[i].same_ground(&vertices[(i + 1) % n]) {
                return Err(DomainError::ZoneRepeatedVertex(i));
            }
        }
        // Non-adjacent edges must not touch; adjacent edges may only share
        // their common vertex.
        for i in 0..n {
            let (a1, a2) = (xy(&vertices[i]), xy(&vertices[(i + 1) % n]));
            for j in (i + 1)..n {
                let (b1, b2) = (xy(&vertices[j]), xy(&vertices[(j + 1) % n]));
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    // Overlapping collinear adjacent edges fold back on themselves.
                    let shared = if j == i + 1 { a2 } else { a1 };
                    let (other_a, other_b) = if j == i + 1 { (a1, b2) } else { (a2, b1) };
                    if cross(shared, other_a, other_b) == 0.0
                        && dot(sub(other_a, shared), sub(other_b, shared)) > 0.0
                    {
                        return Err(DomainError::ZoneSelfIntersecting(i, j));
                    }
                } else if segments_intersect(a1, a2, b1, b2) {
                    return Err(DomainError::ZoneSelfIntersecting(i, j));
                }
            }
        }
        Ok(Zone { vertices })
    }

    /// Build from `(lat, lon)` pairs at ground level.
    pub fn from_lat_lon(pairs: &[(f64, f64)]) -> Result<Self, DomainError> {
        let vertices = pairs
            .iter()
            .map(|&(lat, lon)| GeoPoint::surface(lat, lon))
            .collect::<Result<Vec<_>, _>>()?;
        Zone::new(vertices)
    }

    /// Axis-aligned square centered on `(lat, lon)`.
    pub fn square(lat: f64, lon: f64, half_width: f64) -> Result<Self, DomainError> {
        Zone::from_lat_lon(&[
            (lat - half_width, lon - half_width),
            (lat - half_width, lon + half_width),
            (lat + half_width, lon + half_width),
            (lat + half_width, lon - half_width),
        ])
    }

    pub fn vertices(&self) -> &[GeoPoint] {
        &self.vertices
    }

    fn edges(&self) -> impl Iterator<Item = ((f64, f64), (f64, f64))> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (xy(&self.vertices[i]), xy(&self.vertices[(i + 1) % n])))
    }

    /// `(min_lat, min_lon, max_lat, max_lon)`.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        self.vertices.iter().fold(
            (f64::MAX, f64::MAX, f64::MIN, f64::MIN),
            |(a, b, c, d), p| (a.min(p.lat), b.min(p.lon), c.max(p.lat), d.max(p.lon)),
        )
    }
}

impl Serialize for Zone {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.vertices.iter().map(|p| [p.lat, p.lon]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Zone {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(d)?;
        let pairs: Vec<(f64, f64)> = pairs.into_iter().map(|[a, b]| (a, b)).collect();
        Zone::from_lat_lon(&pairs).map_err(serde::de::Error::custom)
    }
}

type Xy = (f64, f64);

fn xy(p: &GeoPoint) -> Xy {
    (p.lat, p.lon)
}

fn sub(a: Xy, b: Xy) -> Xy {
    (a.0 - b.0, a.1 - b.1)
}

fn dot(a: Xy, b: Xy) -> f64 {
    a.0 * b.0 + a.1 * b.1
}

/// Signed area of the triangle (o, a, b), doubled.
fn cross(o: Xy, a: Xy, b: Xy) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn on_segment(p: Xy, a: Xy, b: Xy) -> bool {
    cross(a, b, p) == 0.0
        && p.0 >= a.0.min(b.0)
        && p.0 <= a.0.max(b.0)
        && p.1 >= a.1.min(b.1)
        && p.1 <= a.1.max(b.1)
}

/// Closed-segment intersection test, touching counts.
fn segments_intersect(a1: Xy, a2: Xy, b1: Xy, b2: Xy) -> bool {
    let d1 = cross(b1, b2, a1);
    let d2 = cross(b1, b2, a2);
    let d3 = cross(a1, a2, b1);
    let d4 = cross(a1, a2, b2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    on_segment(a1, b1, b2) || on_segment(a2, b1, b2) || on_segment(b1, a1, a2) || on_segment(b2, a1, a2)
}

/// Ray-casting containment on the lat/lon projection. Points on the
/// boundary count as inside.
pub fn point_in_zone(p: &GeoPoint, zone: &Zone) -> bool {
    let q = xy(p);
    if zone.edges().any(|(a, b)| on_segment(q, a, b)) {
        return true;
    }
    let mut inside = false;
    for (a, b) in zone.edges() {
        if (a.1 > q.1) != (b.1 > q.1) {
            let lat_at = a.0 + (q.1 - a.1) * (b.0 - a.0) / (b.1 - a.1);
            if q.0 < lat_at {
                inside = !inside;
            }
        }
    }
    inside
}

/// True when the two zones share at least one point.
pub fn zones_intersect(a: &Zone, b: &Zone) -> bool {
    let (a0, a1, a2, a3) = a.bounding_box();
    let (b0, b1, b2, b3) = b.bounding_box();
    if a2 < b0 || b2 < a0 || a3 < b1 || b3 < a1 {
        return false;
    }
    for (p, q) in a.edges() {
        for (r, s) in b.edges() {
            if segments_intersect(p, q, r, s) {
                return true;
            }
        }
    }
    point_in_zone(&a.vertices[0], b) || point_in_zone(&b.vertices[0], a)
}

/// Half-open interval `[start, end)` in epoch milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct TimeWindow {
    start: Timestamp,
    end: Timestamp,
}

impl TimeWindow {
    pub fn new(start: Timestamp, end: Timestamp) -> Result<Self, DomainError> {
        if start >= end {
            return Err(DomainError::TimeWindow {
                start: start.0,
                end: end.0,
            });
        }
        Ok(TimeWindow { start, end })
    }

    pub fn from_millis(start: u64, end: u64) -> Result<Self, DomainError> {
        TimeWindow::new(Timestamp(start), Timestamp(end))
    }

    pub fn start(&self) -> Timestamp {
        self.start
    }

    pub fn end(&self) -> Timestamp {
        self.end
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        self.start <= t && t < self.end
    }
}

impl<'de> Deserialize<'de> for TimeWindow {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            start: Timestamp,
            end: Timestamp,
        }
        let raw = Raw::deserialize(d)?;
        TimeWindow::new(raw.start, raw.end).map_err(serde::de::Error::custom)
    }
}

pub fn windows_overlap(a: &TimeWindow, b: &TimeWindow) -> bool {
    a.start < b.end && b.start < a.end
}

/// Broadcast identity packet emitted by a flying drone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteIdMessage {
    pub drone_id: DroneId,
    pub position: GeoPoint,
    pub velocity: f64,
    pub station: GeoPoint,
    pub time_mark: Timestamp,
    pub emergency: bool,
    #[serde(with = "hex_bytes")]
    pub auth_token: Vec<u8>,
}

impl RemoteIdMessage {
    /// Builds a message stamped at `time_mark`, checking it against the
    /// send time with the given skew bound.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        drone_id: DroneId,
        position: GeoPoint,
        velocity: f64,
        station: GeoPoint,
        time_mark: Timestamp,
        emergency: bool,
        auth_token: Vec<u8>,
        sent_at: Timestamp,
        skew_bound_ms: u64,
    ) -> Result<Self, DomainError> {
        let msg = RemoteIdMessage {
            drone_id,
            position,
            velocity,
            station,
            time_mark,
            emergency,
            auth_token,
        };
        msg.validate(sent_at, skew_bound_ms)?;
        Ok(msg)
    }

    pub fn validate(&self, sent_at: Timestamp, skew_bound_ms: u64) -> Result<(), DomainError> {
        if !self.velocity.is_finite() || self.velocity < 0.0 {
            return Err(DomainError::Velocity(self.velocity));
        }
        if self.time_mark.0.abs_diff(sent_at.0) > skew_bound_ms {
            return Err(DomainError::ClockSkew {
                time_mark: self.time_mark.0,
                sent_at: sent_at.0,
                bound_ms: skew_bound_ms,
            });
        }
        Ok(())
    }
}

pub(crate) mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RiskLevel {
    Low,
    High,
}

/// What the authority tells the CUAS to do with a drone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Decision {
    /// `nondestructive` asks for a technology that keeps the drone intact
    /// for forensics.
    ImmediateInterdiction { nondestructive: bool },
    TimedInterdiction { timeout_s: u32 },
    TolerateIdFailure,
    TolerateAuthFailure,
    TolerateMission,
    RestorationConfirmed,
    IssueResolved,
}

impl Decision {
    pub fn timed(timeout_s: u32) -> Result<Self, DomainError> {
        if timeout_s == 0 {
            return Err(DomainError::ZeroTimeout);
        }
        Ok(Decision::TimedInterdiction { timeout_s })
    }

    pub fn immediate() -> Self {
        Decision::ImmediateInterdiction {
            nondestructive: false,
        }
    }

    pub fn is_interdiction(&self) -> bool {
        matches!(
            self,
            Decision::ImmediateInterdiction { .. } | Decision::TimedInterdiction { .. }
        )
    }

    pub fn is_tolerance(&self) -> bool {
        matches!(
            self,
            Decision::TolerateIdFailure | Decision::TolerateAuthFailure | Decision::TolerateMission
        )
    }

    /// Short label used in tables and CSV output.
    pub fn label(&self) -> &'static str {
        match self {
            Decision::ImmediateInterdiction { .. } => "ImmediateInterdiction",
            Decision::TimedInterdiction { .. } => "TimedInterdiction",
            Decision::TolerateIdFailure => "TolerateIdFailure",
            Decision::TolerateAuthFailure => "TolerateAuthFailure",
            Decision::TolerateMission => "TolerateMission",
            Decision::RestorationConfirmed => "RestorationConfirmed",
            Decision::IssueResolved => "IssueResolved",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Zone {
        Zone::from_lat_lon(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)]).unwrap()
    }

    #[test]
    fn center_of_square_is_inside() {
        let p = GeoPoint::surface(0.5, 0.5).unwrap();
        assert!(point_in_zone(&p, &unit_square()));
    }

    #[test]
    fn vertex_and_edge_count_as_inside() {
        let z = unit_square();
        assert!(point_in_zone(&GeoPoint::surface(1.0, 1.0).unwrap(), &z));
        assert!(point_in_zone(&GeoPoint::surface(0.0, 0.25).unwrap(), &z));
    }

    #[test]
    fn far_point_is_outside() {
        let z = unit_square();
        let (a, b, c, d) = z.bounding_box();
        let diag = ((c - a).powi(2) + (d - b).powi(2)).sqrt();
        let p = GeoPoint::surface(c + 2.0 * diag, d + 2.0 * diag).unwrap();
        assert!(!point_in_zone(&p, &z));
    }

    #[test]
    fn concave_notch_is_outside() {
        // U shape opening upwards in lat.
        let z = Zone::from_lat_lon(&[
            (0.0, 0.0),
            (0.0, 3.0),
            (3.0, 3.0),
            (3.0, 2.0),
            (1.0, 2.0),
            (1.0, 1.0),
            (3.0, 1.0),
            (3.0, 0.0),
        ])
        .unwrap();
        assert!(!point_in_zone(&GeoPoint::surface(2.0, 1.5).unwrap(), &z));
        assert!(point_in_zone(&GeoPoint::surface(2.0, 0.5).unwrap(), &z));
    }

    #[test]
    fn windows_half_open() {
        let w = |a, b| TimeWindow::from_millis(a, b).unwrap();
        assert!(!windows_overlap(&w(0, 10), &w(10, 20)));
        assert!(windows_overlap(&w(0, 10), &w(5, 6)));
        assert!(windows_overlap(&w(3, 7), &w(6, 9)));
    }

    #[test]
    fn windows_overlap_matches_enumeration_oracle() {
        // Oracle: the integer sets {start..end-1} intersect.
        for a0 in 0..=5u64 {
            for a1 in (a0 + 1)..=5 {
                for b0 in 0..=5u64 {
                    for b1 in (b0 + 1)..=5 {
                        let sa: std::collections::BTreeSet<u64> = (a0..a1).collect();
                        let shared = (b0..b1).any(|t| sa.contains(&t));
                        let a = TimeWindow::from_millis(a0, a1).unwrap();
                        let b = TimeWindow::from_millis(b0, b1).unwrap();
                        assert_eq!(windows_overlap(&a, &b), shared, "{a:?} {b:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(DroneId::new("").is_err());
        assert!(DroneId::new("a".repeat(21)).is_err());
        assert!(DroneId::new("bad\nid").is_err());
        assert!(DroneId::new("a".repeat(20)).is_ok());
        assert!(GeoPoint::new(91.0, 0.0, 0.0).is_err());
        assert!(GeoPoint::new(0.0, -181.0, 0.0).is_err());
        assert!(GeoPoint::new(0.0, 0.0, -1.0).is_err());
        assert!(GeoPoint::new(f64::NAN, 0.0, 0.0).is_err());
        assert!(TimeWindow::from_millis(5, 5).is_err());
        assert!(Zone::from_lat_lon(&[(0.0, 0.0), (1.0, 1.0)]).is_err());
        assert_eq!(
            Zone::from_lat_lon(&[(0.0, 0.0), (0.0, 0.0), (1.0, 1.0), (1.0, 0.0)]),
            Err(DomainError::ZoneRepeatedVertex(0))
        );
        // Bow tie.
        assert!(matches!(
            Zone::from_lat_lon(&[(0.0, 0.0), (1.0, 1.0), (0.0, 1.0), (1.0, 0.0)]),
            Err(DomainError::ZoneSelfIntersecting(_, _))
        ));
        // Spike folding back on itself.
        assert!(Zone::from_lat_lon(&[(0.0, 0.0), (2.0, 0.0), (1.0, 0.0), (1.0, 1.0)]).is_err());
        assert!("0011223344556677".parse::<OperatorId>().is_ok());
        assert!("00112233445566".parse::<OperatorId>().is_err());
        assert!(Decision::timed(0).is_err());
    }

    #[test]
    fn remote_id_skew_and_velocity() {
        let id = DroneId::new("UAS-1").unwrap();
        let p = GeoPoint::new(24.0, 54.0, 50.0).unwrap();
        let mk = |v: f64, mark: u64| {
            RemoteIdMessage::new(
                id.clone(),
                p,
                v,
                p,
                Timestamp(mark),
                false,
                vec![1, 2],
                Timestamp(10_000),
                500,
            )
        };
        assert!(mk(3.0, 10_400).is_ok());
        assert!(matches!(mk(3.0, 10_600), Err(DomainError::ClockSkew { .. })));
        assert!(matches!(mk(f64::INFINITY, 10_000), Err(DomainError::Velocity(_))));
        assert!(matches!(mk(-1.0, 10_000), Err(DomainError::Velocity(_))));
    }

    #[test]
    fn zone_json_is_lat_lon_pairs() {
        let z = unit_square();
        let json = serde_json::to_string(&z).unwrap();
        assert_eq!(json, "[[0.0,0.0],[0.0,1.0],[1.0,1.0],[1.0,0.0]]");
        let back: Zone = serde_json::from_str(&json).unwrap();
        assert_eq!(back, z);
        assert!(serde_json::from_str::<Zone>("[[0,0],[1,1]]").is_err());
    }

    #[test]
    fn zones_intersect_cases() {
        let a = unit_square();
        let b = Zone::square(1.5, 1.5, 0.6).unwrap();
        let c = Zone::square(5.0, 5.0, 0.5).unwrap();
        let inner = Zone::square(0.5, 0.5, 0.1).unwrap();
        assert!(zones_intersect(&a, &b));
        assert!(!zones_intersect(&a, &c));
        assert!(zones_intersect(&a, &inner));
        assert!(zones_intersect(&inner, &a));
    }
}
