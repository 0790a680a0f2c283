use std::collections::HashMap;

use super::{PlanarPoint, Polyline};
use crate::error::{Error, Result};

pub const DEFAULT_CELL_SIZE_M: f64 = 100.0;

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: PlanarPoint,
    pub max: PlanarPoint,
}

impl BBox {
    pub fn around(points: &[PlanarPoint]) -> BBox {
        let mut b = BBox {
            min: PlanarPoint::new(f64::INFINITY, f64::INFINITY),
            max: PlanarPoint::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        };
        for p in points {
            b.min.x = b.min.x.min(p.x);
            b.min.y = b.min.y.min(p.y);
            b.max.x = b.max.x.max(p.x);
            b.max.y = b.max.y.max(p.y);
        }
        b
    }

    pub fn square(center: &PlanarPoint, half_side: f64) -> BBox {
        BBox {
            min: center.translate(-half_side, -half_side),
            max: center.translate(half_side, half_side),
        }
    }

    pub fn contains(&self, p: &PlanarPoint) -> bool {
        (self.min.x..=self.max.x).contains(&p.x) && (self.min.y..=self.max.y).contains(&p.y)
    }
}

/// Uniform grid over the plane mapping each cell to the items whose bounding
/// boxes overlap it. Queries return candidates only; callers filter by exact
/// distance.
#[derive(Debug, Clone)]
pub struct GridIndex<T> {
    cell_size: f64,
    cells: HashMap<(i64, i64), Vec<T>>,
    len: usize,
}

/// Grid index over road edges, keyed by edge position in the network.
pub type SpatialIndex = GridIndex<usize>;

impl<T: Copy + Ord> GridIndex<T> {
    pub fn new(cell_size: f64) -> Result<Self> {
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cell size must be positive, got {cell_size}"
            )));
        }
        Ok(GridIndex {
            cell_size,
            cells: HashMap::new(),
            len: 0,
        })
    }

    /// Registers every polyline in each cell its bounding box overlaps.
    pub fn build<'a, I>(items: I, cell_size: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (T, &'a Polyline)>,
    {
        let mut idx = GridIndex::new(cell_size)?;
        for (id, pl) in items {
            idx.insert(id, &pl.bbox());
        }
        Ok(idx)
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    /// Number of inserted items.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn cell_of(&self, v: f64) -> i64 {
        (v / self.cell_size).floor() as i64
    }

    fn cell_range(&self, b: &BBox) -> (i64, i64, i64, i64) {
        (
            self.cell_of(b.min.x),
            self.cell_of(b.max.x),
            self.cell_of(b.min.y),
            self.cell_of(b.max.y),
        )
    }

    pub fn insert(&mut self, id: T, bbox: &BBox) {
        let (x0, x1, y0, y1) = self.cell_range(bbox);
        for cx in x0..=x1 {
            for cy in y0..=y1 {
                self.cells.entry((cx, cy)).or_default().push(id);
            }
        }
        self.len += 1;
    }

    pub fn insert_point(&mut self, id: T, p: &PlanarPoint) {
        self.insert(id, &BBox { min: *p, max: *p });
    }

    /// Items registered in any cell overlapping `bbox`, sorted and deduplicated.
    pub fn query_bbox(&self, bbox: &BBox) -> Vec<T> {
        let mut out = Vec::new();
        if self.cells.is_empty() {
            return out;
        }
        let (x0, x1, y0, y1) = self.cell_range(bbox);
        for cx in x0..=x1 {
            for cy in y0..=y1 {
                if let Some(ids) = self.cells.get(&(cx, cy)) {
                    out.extend_from_slice(ids);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Grid cell containing `p`.
    pub fn cell_key(&self, p: &PlanarPoint) -> (i64, i64) {
        (self.cell_of(p.x), self.cell_of(p.y))
    }

    pub fn cell_items(&self, key: (i64, i64)) -> &[T] {
        self.cells.get(&key).map_or(&[], Vec::as_slice)
    }

    /// Superset of the items with any part within `radius` of `p`.
    pub fn query(&self, p: &PlanarPoint, radius: f64) -> Vec<T> {
        self.query_bbox(&BBox::square(p, radius))
    }
}
