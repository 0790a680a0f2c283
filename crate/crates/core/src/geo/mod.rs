//! Geodetic and planar geometry primitives.
//!
//! Road geometry and GPS fixes are handled in a local equirectangular plane
//! anchored at a projection origin (x east, y north, meters). Within a few
//! degrees of the origin this is accurate to well under a meter, which is
//! far below GPS noise.

mod index;

pub use index::{BBox, GridIndex, SpatialIndex, DEFAULT_CELL_SIZE_M};

use crate::error::{Error, Result};

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Meters per degree of latitude on the mean sphere.
pub const METERS_PER_DEGREE: f64 = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;

/// Maximum lat/lon offset from the projection origin, in degrees.
pub const MAX_PROJECTION_SPAN_DEG: f64 = 5.0;

/// WGS-84 latitude/longitude in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        let p = GeoPoint { lat, lon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidCoordinate {
                lat: self.lat,
                lon: self.lon,
            })
        }
    }
}

/// A point in the local plane, meters east (`x`) and north (`y`) of the
/// projection origin.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        PlanarPoint { x, y }
    }

    pub fn distance(&self, other: &PlanarPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> PlanarPoint {
        PlanarPoint::new(self.x + dx, self.y + dy)
    }
}

/// Local equirectangular projection around a fixed origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    origin: GeoPoint,
    cos_lat: f64,
}

impl Projection {
    pub fn new(origin: GeoPoint) -> Result<Self> {
        origin.validate()?;
        Ok(Projection {
            origin,
            cos_lat: origin.lat.to_radians().cos(),
        })
    }

    /// Projection anchored at the arithmetic mean of `points`.
    pub fn centered_on<'a>(points: impl IntoIterator<Item = &'a GeoPoint>) -> Result<Self> {
        let (mut lat, mut lon, mut n) = (0.0, 0.0, 0usize);
        for p in points {
            lat += p.lat;
            lon += p.lon;
            n += 1;
        }
        if n == 0 {
            return Err(Error::InvalidParameter(
                "cannot center a projection on zero points".into(),
            ));
        }
        Projection::new(GeoPoint {
            lat: lat / n as f64,
            lon: lon / n as f64,
        })
    }

    pub fn origin(&self) -> GeoPoint {
        self.origin
    }

    pub fn project(&self, p: &GeoPoint) -> Result<PlanarPoint> {
        p.validate()?;
        let dlat = p.lat - self.origin.lat;
        let dlon = p.lon - self.origin.lon;
        if dlat.abs() >= MAX_PROJECTION_SPAN_DEG || dlon.abs() >= MAX_PROJECTION_SPAN_DEG {
            return Err(Error::OutOfProjectionRange {
                lat: p.lat,
                lon: p.lon,
            });
        }
        Ok(PlanarPoint {
            x: dlon * self.cos_lat * METERS_PER_DEGREE,
            y: dlat * METERS_PER_DEGREE,
        })
    }

    pub fn unproject(&self, p: &PlanarPoint) -> GeoPoint {
        GeoPoint {
            lat: self.origin.lat + p.y / METERS_PER_DEGREE,
            lon: self.origin.lon + p.x / (METERS_PER_DEGREE * self.cos_lat),
        }
    }
}

/// Projects `p` into the plane anchored at `origin`.
pub fn project(origin: &GeoPoint, p: &GeoPoint) -> Result<PlanarPoint> {
    Projection::new(*origin)?.project(p)
}

/// Great-circle distance in meters on the mean sphere.
pub fn haversine_distance(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Compass bearing from `a` to `b` in degrees: 0 is north, clockwise, in `[0, 360)`.
pub fn bearing(a: &PlanarPoint, b: &PlanarPoint) -> Result<f64> {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::UndefinedBearing);
    }
    Ok(normalize_degrees(dx.atan2(dy).to_degrees()))
}

/// Wraps an angle into `[0, 360)`.
pub fn normalize_degrees(deg: f64) -> f64 {
    let d = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if d >= 360.0 {
        0.0
    } else {
        d
    }
}

/// Smallest angle between two headings, in `[0, 180]`.
pub fn heading_error(h1: f64, h2: f64) -> f64 {
    let d = (normalize_degrees(h1) - normalize_degrees(h2)).abs();
    d.min(360.0 - d)
}

/// A line segment with distinct endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    a: PlanarPoint,
    b: PlanarPoint,
}

impl Segment {
    pub fn new(a: PlanarPoint, b: PlanarPoint) -> Result<Self> {
        if a == b {
            return Err(Error::DegenerateSegment);
        }
        Ok(Segment { a, b })
    }

    pub fn start(&self) -> PlanarPoint {
        self.a
    }

    pub fn end(&self) -> PlanarPoint {
        self.b
    }

    pub fn length(&self) -> f64 {
        self.a.distance(&self.b)
    }

    /// Bearing from start to end.
    pub fn bearing(&self) -> f64 {
        bearing(&self.a, &self.b).expect("segment endpoints are distinct")
    }
}

/// Closest point on a segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentProjection {
    pub distance: f64,
    pub foot: PlanarPoint,
    /// Position of `foot` along the segment, 0 at start and 1 at end.
    pub t: f64,
}

pub fn point_segment_distance(p: &PlanarPoint, s: &Segment) -> SegmentProjection {
    let (dx, dy) = (s.b.x - s.a.x, s.b.y - s.a.y);
    let len2 = dx * dx + dy * dy;
    let t = (((p.x - s.a.x) * dx + (p.y - s.a.y) * dy) / len2).clamp(0.0, 1.0);
    let foot = if t == 0.0 {
        s.a
    } else if t == 1.0 {
        s.b
    } else {
        PlanarPoint::new(s.a.x + t * dx, s.a.y + t * dy)
    };
    SegmentProjection {
        distance: p.distance(&foot),
        foot,
        t,
    }
}

/// Piecewise-linear curve with at least two vertices and no repeated
/// consecutive vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    vertices: Vec<PlanarPoint>,
    // cumulative[i] is the arc length from vertex 0 to vertex i
    cumulative: Vec<f64>,
}

/// Closest point on a polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolylineProjection {
    pub distance: f64,
    pub foot: PlanarPoint,
    pub segment_index: usize,
    /// Arc length from the first vertex to `foot`.
    pub arc_offset: f64,
}

impl Polyline {
    pub fn new(vertices: Vec<PlanarPoint>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::DegeneratePolyline);
        }
        let mut cumulative = Vec::with_capacity(vertices.len());
        cumulative.push(0.0);
        for w in vertices.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DegeneratePolyline);
            }
            let last = *cumulative.last().unwrap();
            cumulative.push(last + w[0].distance(&w[1]));
        }
        Ok(Polyline {
            vertices,
            cumulative,
        })
    }

    pub fn vertices(&self) -> &[PlanarPoint] {
        &self.vertices
    }

    pub fn segment_count(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn segment(&self, i: usize) -> Segment {
        Segment {
            a: self.vertices[i],
            b: self.vertices[i + 1],
        }
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.vertices
            .windows(2)
            .map(|w| Segment { a: w[0], b: w[1] })
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    pub fn first(&self) -> PlanarPoint {
        self.vertices[0]
    }

    pub fn last(&self) -> PlanarPoint {
        *self.vertices.last().unwrap()
    }

    pub fn bbox(&self) -> BBox {
        BBox::around(&self.vertices)
    }

    /// Closest point on the polyline; equal distances resolve to the lowest
    /// segment index.
    pub fn project(&self, p: &PlanarPoint) -> PolylineProjection {
        let mut best: Option<PolylineProjection> = None;
        for (i, seg) in self.segments().enumerate() {
            let sp = point_segment_distance(p, &seg);
            if best.is_none_or(|b| sp.distance < b.distance) {
                best = Some(PolylineProjection {
                    distance: sp.distance,
                    foot: sp.foot,
                    segment_index: i,
                    arc_offset: self.cumulative[i] + sp.t * seg.length(),
                });
            }
        }
        best.expect("polyline has at least one segment")
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Polyline {
        Polyline {
            vertices: self.vertices.iter().map(|v| v.translate(dx, dy)).collect(),
            cumulative: self.cumulative.clone(),
        }
    }
}

/// Free-function form of [`Polyline::project`].
pub fn project_onto_polyline(p: &PlanarPoint, pl: &Polyline) -> PolylineProjection {
    pl.project(p)
}
