//! Small-area geodesy and clustering on latitude/longitude points.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::graph::Coord;

const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Local planar offset of `p` from `origin` in metres, scaled by the cosine
/// of `ref_lat`.
fn project(p: Coord, origin: Coord, ref_lat: f64) -> (f64, f64) {
    let k = ref_lat.to_radians().cos();
    (
        (p.lon - origin.lon).to_radians() * k * EARTH_RADIUS_M,
        (p.lat - origin.lat).to_radians() * EARTH_RADIUS_M,
    )
}

/// Equirectangular distance in metres, scaled by the cosine of the mean
/// latitude of the two points.
pub fn equirectangular_m(a: Coord, b: Coord) -> f64 {
    let (x, y) = project(b, a, 0.5 * (a.lat + b.lat));
    x.hypot(y)
}

/// Distance in metres from `p` to the infinite line through `a` and `b`.
/// Degenerate lines (a = b) fall back to point distance.
pub fn distance_to_line_m(p: Coord, a: Coord, b: Coord) -> f64 {
    let ref_lat = (p.lat + a.lat + b.lat) / 3.0;
    let (bx, by) = project(b, a, ref_lat);
    let (px, py) = project(p, a, ref_lat);
    let len = bx.hypot(by);
    if len == 0.0 {
        return px.hypot(py);
    }
    (bx * py - by * px).abs() / len
}

/// Distance in metres from `p` to the closed segment `ab`.
pub fn distance_to_segment_m(p: Coord, a: Coord, b: Coord) -> f64 {
    let ref_lat = (p.lat + a.lat + b.lat) / 3.0;
    let (bx, by) = project(b, a, ref_lat);
    let (px, py) = project(p, a, ref_lat);
    let len2 = bx * bx + by * by;
    let t = if len2 == 0.0 { 0.0 } else { ((px * bx + py * by) / len2).clamp(0.0, 1.0) };
    (px - t * bx).hypot(py - t * by)
}

/// Whether the disc of `radius_m` around `p` meets the polygon `ring`.
pub fn disc_meets_polygon(p: Coord, radius_m: f64, ring: &[Coord]) -> bool {
    if point_in_polygon(p, ring) {
        return true;
    }
    let n = ring.len();
    (0..n).any(|i| distance_to_segment_m(p, ring[i], ring[(i + 1) % n]) <= radius_m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl BoundingBox {
    pub fn new(lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64) -> Result<Self> {
        let b = BoundingBox { lat_min, lat_max, lon_min, lon_max };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.lat_min, self.lat_max, self.lon_min, self.lon_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.lat_min >= self.lat_max || self.lon_min >= self.lon_max {
            return Err(invalid(format!("degenerate bounding box {self:?}")));
        }
        Ok(())
    }

    /// Closed containment test.
    pub fn contains(&self, p: Coord) -> bool {
        (self.lat_min..=self.lat_max).contains(&p.lat) && (self.lon_min..=self.lon_max).contains(&p.lon)
    }
}

/// Ray-casting containment; points on an edge or vertex count as inside.
/// The ring may be given open or closed.
pub fn point_in_polygon(p: Coord, ring: &[Coord]) -> bool {
    let n = ring.len();
    if n == 0 {
        return false;
    }
    if n < 3 {
        return ring.iter().any(|&v| v == p) || (n == 2 && on_segment(p, ring[0], ring[1]));
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if on_segment(p, a, b) {
            return true;
        }
        if (a.lat > p.lat) != (b.lat > p.lat) {
            let x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
            if p.lon < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn on_segment(p: Coord, a: Coord, b: Coord) -> bool {
    let cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
    let scale = (b.lon - a.lon).abs() + (b.lat - a.lat).abs() + 1.0;
    if cross.abs() > 1e-12 * scale {
        return false;
    }
    p.lon >= a.lon.min(b.lon) && p.lon <= a.lon.max(b.lon) && p.lat >= a.lat.min(b.lat) && p.lat <= a.lat.max(b.lat)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centroids: Vec<Coord>,
    pub assignment: Vec<usize>,
    pub sizes: Vec<usize>,
    pub iterations: usize,
}

const KMEANS_MAX_ITER: usize = 100;
const KMEANS_TOL: f64 = 1e-9;

/// Lloyd's algorithm on raw (lat, lon) pairs. Initial centres are `k`
/// distinct observations drawn with a seeded generator. An emptied cluster
/// keeps its previous centre. Assignment ties go to the lower centre index.
pub fn kmeans(points: &[Coord], k: usize, seed: u64) -> Result<KMeans> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    if k > points.len() {
        return Err(invalid(format!("k = {k} exceeds {} observations", points.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut init: Vec<usize> = sample(&mut rng, points.len(), k).into_vec();
    init.sort_unstable();
    let mut centroids: Vec<Coord> = init.iter().map(|&i| points[i]).collect();
    let mut assignment = vec![0usize; points.len()];
    let mut iterations = 0;

    let scale = points
        .iter()
        .map(|p| p.lat.abs().max(p.lon.abs()))
        .fold(1.0f64, f64::max);

    while iterations < KMEANS_MAX_ITER {
        iterations += 1;
        for (a, p) in assignment.iter_mut().zip(points) {
            *a = nearest(&centroids, *p);
        }
        let mut sums = vec![(0.0f64, 0.0f64, 0usize); k];
        for (&a, p) in assignment.iter().zip(points) {
            sums[a].0 += p.lat;
            sums[a].1 += p.lon;
            sums[a].2 += 1;
        }
        let mut shift = 0.0f64;
        for (c, &(slat, slon, cnt)) in centroids.iter_mut().zip(&sums) {
            if cnt == 0 {
                continue;
            }
            let next = Coord::new(slat / cnt as f64, slon / cnt as f64);
            shift = shift.max((next.lat - c.lat).abs().max((next.lon - c.lon).abs()));
            *c = next;
        }
        if shift <= KMEANS_TOL * scale {
            break;
        }
    }
    for (a, p) in assignment.iter_mut().zip(points) {
        *a = nearest(&centroids, *p);
    }
    let mut sizes = vec![0usize; k];
    for &a in &assignment {
        sizes[a] += 1;
    }
    Ok(KMeans { centroids, assignment, sizes, iterations })
}

fn nearest(centroids: &[Coord], p: Coord) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (i, c) in centroids.iter().enumerate() {
        let d = (c.lat - p.lat).powi(2) + (c.lon - p.lon).powi(2);
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}
