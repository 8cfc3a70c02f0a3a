//! GeoLife ingestion: PLT and label parsing, timestamp cleaning, label join,
//! and segmentation into labeled (user, day, mode) sub-trajectories.

use std::fmt;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geo::GeoCoordinate;
use crate::{Error, Result};

/// Minimum number of points a segment must keep.
pub const MIN_SEGMENT_POINTS: usize = 10;

const PLT_HEADER_LINES: usize = 6;
const SECONDS_PER_DAY: i64 = 86_400;
/// Days between the PLT serial-date epoch (1899-12-30) and 1970-01-01.
const SERIAL_DAY_OFFSET: f64 = 25_569.0;

/// Transportation mode tag. Unknown tags are kept verbatim in `Other`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TransportMode {
    Walk,
    Bike,
    Bus,
    Car,
    Taxi,
    Subway,
    Train,
    Driving,
    Airplane,
    Boat,
    Run,
    Motorcycle,
    Other(String),
}

impl TransportMode {
    pub fn as_str(&self) -> &str {
        match self {
            TransportMode::Walk => "walk",
            TransportMode::Bike => "bike",
            TransportMode::Bus => "bus",
            TransportMode::Car => "car",
            TransportMode::Taxi => "taxi",
            TransportMode::Subway => "subway",
            TransportMode::Train => "train",
            TransportMode::Driving => "driving",
            TransportMode::Airplane => "airplane",
            TransportMode::Boat => "boat",
            TransportMode::Run => "run",
            TransportMode::Motorcycle => "motorcycle",
            TransportMode::Other(raw) => raw,
        }
    }

    pub fn is_known(&self) -> bool {
        !matches!(self, TransportMode::Other(_))
    }
}

impl FromStr for TransportMode {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let trimmed = s.trim();
        Ok(match trimmed.to_ascii_lowercase().as_str() {
            "walk" | "walking" => TransportMode::Walk,
            "bike" => TransportMode::Bike,
            "bus" => TransportMode::Bus,
            "car" => TransportMode::Car,
            "taxi" => TransportMode::Taxi,
            "subway" => TransportMode::Subway,
            "train" => TransportMode::Train,
            "driving" => TransportMode::Driving,
            "airplane" => TransportMode::Airplane,
            "boat" => TransportMode::Boat,
            "run" => TransportMode::Run,
            "motorcycle" => TransportMode::Motorcycle,
            _ => TransportMode::Other(trimmed.to_string()),
        })
    }
}

impl fmt::Display for TransportMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for TransportMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for TransportMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(s.parse().unwrap_or_else(|never| match never {}))
    }
}

/// One GPS fix. `timestamp` is seconds since the Unix epoch, read from the
/// file's naive clock as if it were UTC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub coord: GeoCoordinate,
    pub timestamp: i64,
}

impl TrajectoryPoint {
    pub fn new(lon: f64, lat: f64, timestamp: i64) -> Result<Self> {
        Ok(Self {
            coord: GeoCoordinate::new(lon, lat)?,
            timestamp,
        })
    }

    /// Day index since the epoch in the point's own clock.
    pub fn day_number(&self) -> i64 {
        self.timestamp.div_euclid(SECONDS_PER_DAY)
    }

    pub fn date(&self) -> NaiveDate {
        datetime(self.timestamp).date()
    }
}

fn datetime(ts: i64) -> NaiveDateTime {
    DateTime::from_timestamp(ts, 0)
        .expect("timestamp within chrono range")
        .naive_utc()
}

/// A labeled sub-trajectory: one user, one calendar day, one mode, at least
/// [`MIN_SEGMENT_POINTS`] points with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    user_id: String,
    label: TransportMode,
    day: NaiveDate,
    points: Vec<TrajectoryPoint>,
}

impl Segment {
    pub fn new(user_id: impl Into<String>, label: TransportMode, points: Vec<TrajectoryPoint>) -> Result<Self> {
        if points.len() < MIN_SEGMENT_POINTS {
            return Err(Error::domain(format!(
                "segment has {} points, need at least {MIN_SEGMENT_POINTS}",
                points.len()
            )));
        }
        let day = points[0].day_number();
        for w in points.windows(2) {
            if w[1].timestamp <= w[0].timestamp {
                return Err(Error::domain("segment timestamps are not strictly increasing"));
            }
        }
        if points.iter().any(|p| p.day_number() != day) {
            return Err(Error::domain("segment spans more than one calendar day"));
        }
        Ok(Self {
            user_id: user_id.into(),
            label,
            day: points[0].date(),
            points,
        })
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn label(&self) -> &TransportMode {
        &self.label
    }

    pub fn day(&self) -> NaiveDate {
        self.day
    }

    pub fn points(&self) -> &[TrajectoryPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Total path length in meters.
    pub fn path_length(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| crate::geo::haversine_distance(w[0].coord, w[1].coord))
            .sum()
    }

    /// Same segment with replaced coordinates (timestamps untouched).
    pub fn with_coordinates(&self, coords: &[GeoCoordinate]) -> Result<Segment> {
        if coords.len() != self.points.len() {
            return Err(Error::domain("coordinate count does not match segment length"));
        }
        let points = self
            .points
            .iter()
            .zip(coords)
            .map(|(p, c)| TrajectoryPoint {
                coord: *c,
                timestamp: p.timestamp,
            })
            .collect();
        Ok(Segment {
            points,
            ..self.clone()
        })
    }

    fn relabel(mut self, label: TransportMode) -> Segment {
        self.label = label;
        self
    }
}

/// Result of parsing one PLT file.
#[derive(Debug, Clone, Default)]
pub struct PltParse {
    pub points: Vec<TrajectoryPoint>,
    pub malformed: usize,
    pub diagnostics: Vec<String>,
}

/// Parse a GeoLife PLT file: six header lines, then records
/// `lat,lon,0,altitude_ft,serial_days,yyyy-mm-dd,hh:mm:ss`.
///
/// Malformed records are skipped and counted. Blank lines are ignored.
pub fn parse_plt(content: &[u8]) -> Result<PltParse> {
    let text = String::from_utf8_lossy(content);
    let mut lines = text.lines();
    for i in 0..PLT_HEADER_LINES {
        if lines.next().is_none() {
            return Err(Error::Format(format!(
                "PLT header truncated: expected {PLT_HEADER_LINES} lines, found {i}"
            )));
        }
    }
    let mut out = PltParse::default();
    for (offset, line) in lines.enumerate() {
        let line_no = offset + PLT_HEADER_LINES + 1;
        if line.trim().is_empty() {
            continue;
        }
        match parse_plt_record(line) {
            Ok(p) => out.points.push(p),
            Err(msg) => {
                out.malformed += 1;
                out.diagnostics.push(format!("line {line_no}: {msg}"));
            }
        }
    }
    Ok(out)
}

fn parse_plt_record(line: &str) -> std::result::Result<TrajectoryPoint, String> {
    let fields: Vec<&str> = line.trim().split(',').collect();
    if fields.len() != 7 {
        return Err(format!("expected 7 fields, found {}", fields.len()));
    }
    let lat: f64 = fields[0].trim().parse().map_err(|_| format!("bad latitude `{}`", fields[0]))?;
    let lon: f64 = fields[1].trim().parse().map_err(|_| format!("bad longitude `{}`", fields[1]))?;
    let stamp = format!("{} {}", fields[5].trim(), fields[6].trim());
    let dt = NaiveDateTime::parse_from_str(&stamp, "%Y-%m-%d %H:%M:%S")
        .map_err(|e| format!("bad timestamp `{stamp}`: {e}"))?;
    TrajectoryPoint::new(lon, lat, dt.and_utc().timestamp()).map_err(|e| e.to_string())
}

/// Serialize points in PLT layout. Altitude is written as GeoLife's
/// invalid-altitude marker `-777`; the serial day is derived from the time.
pub fn write_plt(points: &[TrajectoryPoint]) -> String {
    let mut s = String::from(
        "Geolife trajectory\nWGS 84\nAltitude is in Feet\nReserved 3\n0,2,255,My Track,0,0,2,8421376\n0\n",
    );
    for p in points {
        let dt = datetime(p.timestamp);
        let serial = p.timestamp as f64 / SECONDS_PER_DAY as f64 + SERIAL_DAY_OFFSET;
        s.push_str(&format!(
            "{},{},0,-777,{:.10},{},{}\n",
            p.coord.lat(),
            p.coord.lon(),
            serial,
            dt.format("%Y-%m-%d"),
            dt.format("%H:%M:%S"),
        ));
    }
    s
}

/// A row of `labels.txt`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelInterval {
    pub start: i64,
    pub end: i64,
    pub mode: TransportMode,
}

#[derive(Debug, Clone, Default)]
pub struct LabelParse {
    pub intervals: Vec<LabelInterval>,
    /// Rows dropped, with reasons.
    pub rejected: Vec<String>,
    /// Intervals whose mode tag was not recognized (kept as `Other`).
    pub unknown_modes: usize,
}

/// Parse a GeoLife `labels.txt`: one header line, then
/// `yyyy/mm/dd hh:mm:ss<TAB>yyyy/mm/dd hh:mm:ss<TAB>mode`.
pub fn parse_labels(content: &[u8]) -> Result<LabelParse> {
    let text = String::from_utf8_lossy(content);
    let mut out = LabelParse::default();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            out.rejected.push(format!("line {}: expected 3 tab-separated fields", i + 1));
            continue;
        }
        let parse = |s: &str| {
            NaiveDateTime::parse_from_str(s.trim(), "%Y/%m/%d %H:%M:%S").map(|d| d.and_utc().timestamp())
        };
        let (start, end) = match (parse(fields[0]), parse(fields[1])) {
            (Ok(s), Ok(e)) => (s, e),
            _ => {
                out.rejected.push(format!("line {}: unparseable instant", i + 1));
                continue;
            }
        };
        if start >= end {
            out.rejected.push(format!("line {}: start is not before end", i + 1));
            continue;
        }
        let mode: TransportMode = fields[2].parse().unwrap_or_else(|never| match never {});
        if !mode.is_known() {
            out.unknown_modes += 1;
        }
        out.intervals.push(LabelInterval { start, end, mode });
    }
    Ok(out)
}

/// Drop every point whose timestamp is not after the last kept one.
pub fn clean_timestamps(points: &[TrajectoryPoint]) -> Vec<TrajectoryPoint> {
    let mut out: Vec<TrajectoryPoint> = Vec::with_capacity(points.len());
    for p in points {
        match out.last() {
            Some(last) if p.timestamp <= last.timestamp => {}
            _ => out.push(*p),
        }
    }
    out
}

/// Attach to each point the mode of the interval containing it (both ends
/// closed). Where intervals overlap, the one with the earliest start wins.
/// Unlabeled points are dropped.
pub fn assign_labels(points: &[TrajectoryPoint], intervals: &[LabelInterval]) -> Vec<(TrajectoryPoint, TransportMode)> {
    let mut sorted: Vec<&LabelInterval> = intervals.iter().collect();
    sorted.sort_by_key(|iv| iv.start);
    let starts: Vec<i64> = sorted.iter().map(|iv| iv.start).collect();
    // Running maximum of interval ends; monotone, so the first interval that
    // still covers `t` can be found by binary search.
    let reach: Vec<i64> = sorted
        .iter()
        .scan(i64::MIN, |acc, iv| {
            *acc = (*acc).max(iv.end);
            Some(*acc)
        })
        .collect();

    points
        .iter()
        .filter_map(|p| {
            let t = p.timestamp;
            let started = starts.partition_point(|&s| s <= t);
            let first = reach[..started].partition_point(|&r| r < t);
            (first < started).then(|| (*p, sorted[first].mode.clone()))
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct Segmentation {
    pub segments: Vec<Segment>,
    pub discarded_runs: usize,
    pub discarded_points: usize,
}

/// Split a cleaned, labeled point stream into maximal runs sharing calendar
/// day and mode; runs shorter than [`MIN_SEGMENT_POINTS`] are discarded.
pub fn segment(labeled: &[(TrajectoryPoint, TransportMode)], user_id: &str) -> Segmentation {
    let mut out = Segmentation::default();
    let mut start = 0;
    while start < labeled.len() {
        let (first, mode) = &labeled[start];
        let day = first.day_number();
        let mut end = start + 1;
        while end < labeled.len() && labeled[end].1 == *mode && labeled[end].0.day_number() == day {
            end += 1;
        }
        let run: Vec<TrajectoryPoint> = labeled[start..end].iter().map(|(p, _)| *p).collect();
        match Segment::new(user_id, mode.clone(), run) {
            Ok(seg) => out.segments.push(seg),
            Err(_) => {
                out.discarded_runs += 1;
                out.discarded_points += end - start;
            }
        }
        start = end;
    }
    out
}

/// Label vocabularies used by the published experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelScheme {
    /// All known modes, unchanged.
    Identity,
    /// walk, bike, bus, driving (car + taxi), train (train + subway).
    Dabiri5,
    /// walk, bus, car, bike, taxi, subway, train.
    Endo7,
}

impl LabelScheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            LabelScheme::Identity => "identity",
            LabelScheme::Dabiri5 => "dabiri5",
            LabelScheme::Endo7 => "endo7",
        }
    }

    /// Image of `mode` under the scheme, or `None` if the scheme drops it.
    pub fn map(&self, mode: &TransportMode) -> Option<TransportMode> {
        use TransportMode::*;
        match self {
            LabelScheme::Identity => mode.is_known().then(|| mode.clone()),
            LabelScheme::Dabiri5 => match mode {
                Walk | Bike | Bus | Driving | Train => Some(mode.clone()),
                Car | Taxi => Some(Driving),
                Subway => Some(Train),
                _ => None,
            },
            LabelScheme::Endo7 => match mode {
                Walk | Bus | Car | Bike | Taxi | Subway | Train => Some(mode.clone()),
                _ => None,
            },
        }
    }
}

impl FromStr for LabelScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(LabelScheme::Identity),
            "dabiri5" => Ok(LabelScheme::Dabiri5),
            "endo7" => Ok(LabelScheme::Endo7),
            other => Err(Error::config(format!(
                "unknown label scheme `{other}` (expected identity, dabiri5 or endo7)"
            ))),
        }
    }
}

/// Remap segment labels; segments outside the scheme are dropped.
pub fn merge_labels(segments: Vec<Segment>, scheme: LabelScheme) -> Vec<Segment> {
    segments
        .into_iter()
        .filter_map(|s| scheme.map(&s.label).map(|m| s.relabel(m)))
        .collect()
}

#[derive(Serialize, Deserialize)]
struct SegmentRecord {
    user_id: String,
    label: TransportMode,
    day: String,
    points: Vec<(f64, f64, i64)>,
}

/// Write segments as newline-delimited JSON records
/// `{user_id, label, day, points: [[lon, lat, epoch_seconds], ...]}`.
pub fn write_segments<W: Write>(mut w: W, segments: &[Segment]) -> Result<()> {
    for s in segments {
        let rec = SegmentRecord {
            user_id: s.user_id.clone(),
            label: s.label.clone(),
            day: s.day.format("%Y-%m-%d").to_string(),
            points: s
                .points
                .iter()
                .map(|p| (p.coord.lon(), p.coord.lat(), p.timestamp))
                .collect(),
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Read a segment store, re-validating every segment.
pub fn read_segments<R: BufRead>(r: R) -> Result<Vec<Segment>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SegmentRecord =
            serde_json::from_str(&line).map_err(|e| Error::Format(format!("segment record {}: {e}", i + 1)))?;
        let points = rec
            .points
            .iter()
            .map(|&(lon, lat, t)| TrajectoryPoint::new(lon, lat, t))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Format(format!("segment record {}: {e}", i + 1)))?;
        let seg = Segment::new(rec.user_id, rec.label, points)
            .map_err(|e| Error::Format(format!("segment record {}: {e}", i + 1)))?;
        if seg.day.format("%Y-%m-%d").to_string() != rec.day {
            return Err(Error::Format(format!("segment record {}: day does not match points", i + 1)));
        }
        out.push(seg);
    }
    Ok(out)
}

/// Counters accumulated while ingesting a dataset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub users: usize,
    pub users_without_labels: usize,
    pub plt_files: usize,
    pub points_read: usize,
    pub malformed_lines: usize,
    pub out_of_order_points: usize,
    pub rejected_label_rows: usize,
    pub unknown_mode_intervals: usize,
    pub unlabeled_points: usize,
    pub discarded_runs: usize,
    pub discarded_points: usize,
    pub segments: usize,
}

impl IngestReport {
    fn absorb(&mut self, other: &IngestReport) {
        self.users += other.users;
        self.users_without_labels += other.users_without_labels;
        self.plt_files += other.plt_files;
        self.points_read += other.points_read;
        self.malformed_lines += other.malformed_lines;
        self.out_of_order_points += other.out_of_order_points;
        self.rejected_label_rows += other.rejected_label_rows;
        self.unknown_mode_intervals += other.unknown_mode_intervals;
        self.unlabeled_points += other.unlabeled_points;
        self.discarded_runs += other.discarded_runs;
        self.discarded_points += other.discarded_points;
        self.segments += other.segments;
    }
}

/// Ingest one user directory (`<user>/Trajectory/*.plt` + `<user>/labels.txt`).
pub fn ingest_user(dir: &Path, user_id: &str) -> Result<(Vec<Segment>, IngestReport)> {
    let mut report = IngestReport {
        users: 1,
        ..Default::default()
    };
    let labels_path = dir.join("labels.txt");
    if !labels_path.is_file() {
        report.users_without_labels = 1;
        return Ok((Vec::new(), report));
    }
    let labels = parse_labels(&fs::read(&labels_path)?)?;
    report.rejected_label_rows = labels.rejected.len();
    report.unknown_mode_intervals = labels.unknown_modes;

    let mut files: Vec<PathBuf> = fs::read_dir(dir.join("Trajectory"))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("plt")))
        .collect();
    files.sort();

    let mut points = Vec::new();
    for f in &files {
        let parsed = parse_plt(&fs::read(f)?).map_err(|e| Error::Format(format!("{}: {e}", f.display())))?;
        report.malformed_lines += parsed.malformed;
        points.extend(parsed.points);
    }
    report.plt_files = files.len();
    report.points_read = points.len();
    points.sort_by_key(|p| p.timestamp);
    let cleaned = clean_timestamps(&points);
    report.out_of_order_points = points.len() - cleaned.len();

    let labeled = assign_labels(&cleaned, &labels.intervals);
    report.unlabeled_points = cleaned.len() - labeled.len();
    let seg = segment(&labeled, user_id);
    report.discarded_runs = seg.discarded_runs;
    report.discarded_points = seg.discarded_points;
    report.segments = seg.segments.len();
    Ok((seg.segments, report))
}

/// Ingest a GeoLife tree. `root` may be the `Data` directory itself or its
/// parent. Users are processed in parallel and returned in name order.
pub fn ingest_dataset(root: &Path) -> Result<(Vec<Segment>, IngestReport)> {
    let data = if root.join("Data").is_dir() {
        root.join("Data")
    } else {
        root.to_path_buf()
    };
    if !data.is_dir() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("dataset root {} not found", root.display()),
        )));
    }
    let mut users: Vec<(String, PathBuf)> = fs::read_dir(&data)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.join("Trajectory").is_dir())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), p))
        .collect();
    users.sort();
    if users.is_empty() {
        return Err(Error::Format(format!("no user directories under {}", data.display())));
    }

    let per_user: Vec<Result<(Vec<Segment>, IngestReport)>> =
        users.par_iter().map(|(id, dir)| ingest_user(dir, id)).collect();
    let mut segments = Vec::new();
    let mut report = IngestReport::default();
    for r in per_user {
        let (segs, rep) = r?;
        segments.extend(segs);
        report.absorb(&rep);
    }
    Ok((segments, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "Geolife trajectory\nWGS 84\nAltitude is in Feet\nReserved 3\n0,2,255,My Track,0,0,2,8421376\n0\n";

    fn pt(t: i64) -> TrajectoryPoint {
        TrajectoryPoint::new(116.3, 39.9, t).unwrap()
    }

    fn stamps(ps: &[TrajectoryPoint]) -> Vec<i64> {
        ps.iter().map(|p| p.timestamp).collect()
    }

    #[test]
    fn parses_geolife_record() {
        let file = format!("{HEADER}39.984702,116.318417,0,492,39744.1201851852,2008-10-23,02:53:04\n");
        let out = parse_plt(file.as_bytes()).unwrap();
        assert_eq!(out.malformed, 0);
        let p = out.points[0];
        assert_eq!(p.coord.lat(), 39.984702);
        assert_eq!(p.coord.lon(), 116.318417);
        let expect = NaiveDateTime::parse_from_str("2008-10-23 02:53:04", "%Y-%m-%d %H:%M:%S").unwrap();
        assert_eq!(p.timestamp, expect.and_utc().timestamp());
        // The serial-day column agrees with the timestamp.
        let serial = p.timestamp as f64 / 86_400.0 + SERIAL_DAY_OFFSET;
        assert!((serial - 39744.1201851852).abs() < 1e-9);
    }

    #[test]
    fn empty_body_and_short_header() {
        assert!(parse_plt(HEADER.as_bytes()).unwrap().points.is_empty());
        assert!(matches!(parse_plt(b"a\nb\nc\n"), Err(Error::Format(_))));
    }

    #[test]
    fn out_of_range_latitude_is_skipped() {
        let file = format!(
            "{HEADER}91.0,116.318417,0,492,39744.12,2008-10-23,02:53:04\n39.9,116.3,0,492,39744.12,2008-10-23,02:53:05\n"
        );
        let out = parse_plt(file.as_bytes()).unwrap();
        assert_eq!(out.malformed, 1);
        assert_eq!(out.points.len(), 1);
        assert!(out.diagnostics[0].starts_with("line 7"));
    }

    #[test]
    fn parses_labels() {
        let text = "Start Time\tEnd Time\tTransportation Mode\n2008/10/23 02:53:04\t2008/10/23 03:10:00\tbus\n";
        let out = parse_labels(text.as_bytes()).unwrap();
        assert_eq!(out.intervals.len(), 1);
        assert_eq!(out.intervals[0].mode, TransportMode::Bus);
        assert_eq!(out.intervals[0].end - out.intervals[0].start, 17 * 60 - 4);

        assert!(parse_labels(b"Start Time\tEnd Time\tTransportation Mode\n").unwrap().intervals.is_empty());

        let bad = "h\n2008/10/23 03:10:00\t2008/10/23 02:53:04\tbus\n2008/10/23 03:10:00\t2008/10/23 04:00:00\thovercraft\n";
        let out = parse_labels(bad.as_bytes()).unwrap();
        assert_eq!(out.rejected.len(), 1);
        assert_eq!(out.intervals.len(), 1);
        assert_eq!(out.unknown_modes, 1);
        assert_eq!(out.intervals[0].mode, TransportMode::Other("hovercraft".into()));
    }

    #[test]
    fn clean_keeps_first() {
        assert_eq!(stamps(&clean_timestamps(&[pt(1), pt(2), pt(2), pt(3)])), vec![1, 2, 3]);
        assert_eq!(stamps(&clean_timestamps(&[pt(1), pt(3), pt(2), pt(4)])), vec![1, 3, 4]);
        assert_eq!(stamps(&clean_timestamps(&[pt(1), pt(5), pt(9)])), vec![1, 5, 9]);
    }

    #[test]
    fn labels_closed_at_both_ends() {
        let ivs = vec![
            LabelInterval { start: 10, end: 20, mode: TransportMode::Walk },
            LabelInterval { start: 30, end: 40, mode: TransportMode::Bus },
        ];
        let pts: Vec<_> = [5, 10, 20, 25, 30, 40, 41].iter().map(|&t| pt(t)).collect();
        let got: Vec<(i64, TransportMode)> = assign_labels(&pts, &ivs).into_iter().map(|(p, m)| (p.timestamp, m)).collect();
        assert_eq!(
            got,
            vec![
                (10, TransportMode::Walk),
                (20, TransportMode::Walk),
                (30, TransportMode::Bus),
                (40, TransportMode::Bus)
            ]
        );
    }

    #[test]
    fn overlapping_labels_take_earliest_start() {
        let ivs = vec![
            LabelInterval { start: 5, end: 50, mode: TransportMode::Car },
            LabelInterval { start: 0, end: 30, mode: TransportMode::Walk },
            LabelInterval { start: 2, end: 3, mode: TransportMode::Bus },
        ];
        let pts: Vec<_> = [1, 2, 10, 40].iter().map(|&t| pt(t)).collect();
        let modes: Vec<TransportMode> = assign_labels(&pts, &ivs).into_iter().map(|(_, m)| m).collect();
        assert_eq!(modes, vec![TransportMode::Walk, TransportMode::Walk, TransportMode::Walk, TransportMode::Car]);
    }

    fn labeled(times: impl IntoIterator<Item = i64>, mode: TransportMode) -> Vec<(TrajectoryPoint, TransportMode)> {
        times.into_iter().map(|t| (pt(t), mode.clone())).collect()
    }

    const DAY0: i64 = 1_224_720_000; // 2008-10-23T00:00:00

    #[test]
    fn segmentation_examples() {
        let walk = labeled((0..15).map(|i| DAY0 + 3600 + i), TransportMode::Walk);
        let out = segment(&walk, "u");
        assert_eq!(out.segments.len(), 1);
        assert_eq!(out.segments[0].len(), 15);

        let mut mixed = walk.clone();
        mixed.extend(labeled((0..4).map(|i| DAY0 + 7200 + i), TransportMode::Bus));
        let out = segment(&mixed, "u");
        assert_eq!(out.segments.len(), 1);
        assert_eq!(out.segments[0].label(), &TransportMode::Walk);
        assert_eq!((out.discarded_runs, out.discarded_points), (1, 4));

        let midnight = DAY0 + 86_400;
        let bike = labeled((-6..6).map(|i| midnight + i), TransportMode::Bike);
        let out = segment(&bike, "u");
        assert!(out.segments.is_empty());
        assert_eq!((out.discarded_runs, out.discarded_points), (2, 12));
    }

    #[test]
    fn segment_rejects_invalid() {
        let ps: Vec<_> = (0..9).map(|i| pt(DAY0 + i)).collect();
        assert!(Segment::new("u", TransportMode::Walk, ps).is_err());
        let mut ps: Vec<_> = (0..10).map(|i| pt(DAY0 + i)).collect();
        ps[5].timestamp = ps[4].timestamp;
        assert!(Segment::new("u", TransportMode::Walk, ps).is_err());
    }

    fn seg_of(mode: TransportMode) -> Segment {
        Segment::new("u", mode, (0..10).map(|i| pt(DAY0 + i)).collect()).unwrap()
    }

    #[test]
    fn merge_schemes() {
        let segs = vec![
            seg_of(TransportMode::Taxi),
            seg_of(TransportMode::Subway),
            seg_of(TransportMode::Airplane),
            seg_of(TransportMode::Other("x".into())),
        ];
        let d5 = merge_labels(segs.clone(), LabelScheme::Dabiri5);
        let labels: Vec<_> = d5.iter().map(|s| s.label().clone()).collect();
        assert_eq!(labels, vec![TransportMode::Driving, TransportMode::Train]);
        let id = merge_labels(segs.clone(), LabelScheme::Identity);
        assert_eq!(id.len(), 3);
        let e7 = merge_labels(segs, LabelScheme::Endo7);
        assert_eq!(e7.len(), 2);
        assert!(matches!("dabiri6".parse::<LabelScheme>(), Err(Error::Config(_))));
    }

    #[test]
    fn segment_store_round_trip() {
        let segs = vec![seg_of(TransportMode::Walk), seg_of(TransportMode::Other("sled".into()))];
        let mut buf = Vec::new();
        write_segments(&mut buf, &segs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("{\"user_id\":\"u\",\"label\":\"walk\",\"day\":\"2008-10-23\",\"points\":[[116.3,39.9,1224720000]"));
        assert_eq!(read_segments(&buf[..]).unwrap(), segs);
    }

    proptest! {
        #[test]
        fn plt_serialize_parse_round_trip(
            start in 1_000_000_000i64..1_500_000_000,
            steps in prop::collection::vec((1i64..120, -1e-3f64..1e-3, -1e-3f64..1e-3), 1..60),
        ) {
            let mut t = start;
            let (mut lon, mut lat) = (116.3f64, 39.9f64);
            let mut pts = Vec::new();
            for (dt, dlon, dlat) in steps {
                t += dt;
                lon += dlon;
                lat += dlat;
                pts.push(TrajectoryPoint::new(lon, lat, t).unwrap());
            }
            let text = write_plt(&pts);
            let parsed = parse_plt(text.as_bytes()).unwrap();
            prop_assert_eq!(parsed.malformed, 0);
            prop_assert_eq!(&parsed.points, &pts);
            prop_assert_eq!(write_plt(&parsed.points), text);
        }

        #[test]
        fn segments_satisfy_invariants(
            runs in prop::collection::vec((0usize..4, 1usize..30, 1i64..4000), 1..20),
        ) {
            let modes = [TransportMode::Walk, TransportMode::Bus, TransportMode::Car, TransportMode::Bike];
            let mut stream = Vec::new();
            let mut t = DAY0;
            for (m, len, gap) in runs {
                for _ in 0..len {
                    t += gap;
                    stream.push((pt(t), modes[m].clone()));
                }
            }
            let out = segment(&stream, "u");
            let kept: usize = out.segments.iter().map(Segment::len).sum();
            prop_assert_eq!(kept + out.discarded_points, stream.len());
            for s in &out.segments {
                prop_assert!(s.len() >= MIN_SEGMENT_POINTS);
                prop_assert!(s.points().windows(2).all(|w| w[0].timestamp < w[1].timestamp));
                prop_assert!(s.points().iter().all(|p| p.date() == s.day()));
            }
        }
    }
}
