use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::{polygon, Aabb, CsgNode, GeomError, Point3};
use crate::ir::{Axis, EvaluatedShape};

/// Samples per deterministic substream.
pub const MC_CHUNK: u64 = 1 << 16;

const CERTIFY_SAMPLES: u64 = 4096;
const CERTIFY_SEED: u64 = 0x5eed_c0de;

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn sample(rng: &mut ChaCha8Rng, bb: &Aabb) -> Point3 {
    let mut p = [0.0; 3];
    for (i, c) in p.iter_mut().enumerate() {
        *c = bb.min[i] + unit(rng) * (bb.max[i] - bb.min[i]);
    }
    p
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn prim_volume(shape: &EvaluatedShape) -> f64 {
    match shape {
        EvaluatedShape::Brick { min, max } => (0..3).map(|i| max[i] - min[i]).product(),
        EvaluatedShape::Cylinder {
            outer_radius,
            inner_radius,
            range,
            ..
        } => {
            PI * (outer_radius * outer_radius - inner_radius * inner_radius)
                * (range[1] - range[0])
        }
        EvaluatedShape::Extrude {
            polygon, height, ..
        } => polygon::polygon_area(polygon).unwrap_or(0.0) * height,
    }
}

/// Points whose convex hull encloses the node.
fn hull_points(node: &CsgNode) -> Vec<Point3> {
    match node {
        CsgNode::Primitive(EvaluatedShape::Extrude {
            plane,
            polygon,
            base,
            height,
        }) => {
            let n = plane.normal();
            let (a, b) = n.in_plane();
            let mut out = Vec::with_capacity(polygon.len() * 2);
            for w in [*base, base + height] {
                for q in polygon {
                    let mut p = [0.0; 3];
                    p[a.index()] = q.x;
                    p[b.index()] = q.y;
                    p[n.index()] = w;
                    out.push(p);
                }
            }
            out
        }
        CsgNode::Difference(a, _) => hull_points(a),
        CsgNode::Union(a, b) => {
            let mut v = hull_points(a);
            v.extend(hull_points(b));
            v
        }
        other => other.bbox().corners().to_vec(),
    }
}

fn is_convex(node: &CsgNode) -> bool {
    match node {
        CsgNode::Primitive(EvaluatedShape::Brick { .. }) => true,
        CsgNode::Primitive(EvaluatedShape::Cylinder { inner_radius, .. }) => *inner_radius == 0.0,
        CsgNode::Primitive(EvaluatedShape::Extrude { polygon, .. }) => polygon::is_convex(polygon),
        _ => false,
    }
}

/// Decides `inner ⊆ outer`. Exact when `outer` is convex (hull vertices
/// suffice); otherwise hull vertices plus seeded interior samples must agree.
fn certify_subset(inner: &CsgNode, outer: &CsgNode) -> bool {
    if !hull_points(inner).into_iter().all(|p| outer.contains(p)) {
        return false;
    }
    if is_convex(outer) {
        return true;
    }
    let bb = inner.bbox();
    if bb.volume() == 0.0 {
        return false;
    }
    let mut rng = stream(CERTIFY_SEED, 0);
    (0..CERTIFY_SAMPLES)
        .map(|_| sample(&mut rng, &bb))
        .filter(|p| inner.contains_interior(*p))
        .all(|p| outer.contains(p))
}

/// Exact volume where the tree decomposes, `None` otherwise.
pub fn exact_volume(node: &CsgNode) -> Option<f64> {
    match node {
        CsgNode::Primitive(s) => Some(prim_volume(s)),
        CsgNode::Difference(a, b) => {
            let va = exact_volume(a)?;
            if a.bbox().separated(&b.bbox()) {
                Some(va)
            } else if certify_subset(b, a) {
                Some(va - exact_volume(b)?)
            } else {
                None
            }
        }
        CsgNode::Union(a, b) => {
            if a.bbox().separated(&b.bbox()) {
                Some(exact_volume(a)? + exact_volume(b)?)
            } else if certify_subset(b, a) {
                exact_volume(a)
            } else if certify_subset(a, b) {
                exact_volume(b)
            } else {
                None
            }
        }
        CsgNode::Intersection(a, b) => {
            if a.bbox().separated(&b.bbox()) {
                Some(0.0)
            } else if certify_subset(b, a) {
                exact_volume(b)
            } else if certify_subset(a, b) {
                exact_volume(a)
            } else {
                None
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChunkTally {
    pub samples: u64,
    pub hits: u64,
    pub sum: [f64; 3],
}

/// Counts hits for substream `chunk` of the seeded sample sequence.
///
/// Chunk `k` covers samples `k * MC_CHUNK ..` and draws from its own
/// ChaCha stream, so any partition of chunks across workers reproduces
/// the sequential result.
pub fn mc_chunk(node: &CsgNode, bb: &Aabb, seed: u64, chunk: u64, samples: u64) -> ChunkTally {
    let mut rng = stream(seed, chunk);
    let mut tally = ChunkTally {
        samples,
        ..Default::default()
    };
    for _ in 0..samples {
        let p = sample(&mut rng, bb);
        if node.contains(p) {
            tally.hits += 1;
            for (s, x) in tally.sum.iter_mut().zip(p) {
                *s += x;
            }
        }
    }
    tally
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: u64,
    pub hits: u64,
    pub centroid: Option<Point3>,
}

/// Combines chunk tallies (in chunk order) into an estimate.
pub fn mc_volume_from_tallies(bb: &Aabb, tallies: &[ChunkTally]) -> McEstimate {
    let mut samples = 0;
    let mut hits = 0;
    let mut sum = [0.0; 3];
    for t in tallies {
        samples += t.samples;
        hits += t.hits;
        for (s, x) in sum.iter_mut().zip(t.sum) {
            *s += x;
        }
    }
    let box_volume = bb.volume();
    let n = samples as f64;
    let p = hits as f64 / n;
    McEstimate {
        estimate: box_volume * p,
        stderr: box_volume * libm::sqrt(p * (1.0 - p) / n),
        samples,
        hits,
        centroid: (hits > 0).then(|| sum.map(|s| s / hits as f64)),
    }
}

/// Uniform Monte-Carlo volume over the node's bounding box.
pub fn mc_volume(node: &CsgNode, samples: u64, seed: u64) -> Result<McEstimate, GeomError> {
    let bb = node.bbox();
    if samples == 0 || !(bb.volume() > 0.0) {
        return Err(GeomError::EmptyBoundingBox);
    }
    let chunks = samples.div_ceil(MC_CHUNK);
    let tallies: Vec<ChunkTally> = (0..chunks)
        .map(|k| {
            let n = (samples - k * MC_CHUNK).min(MC_CHUNK);
            mc_chunk(node, &bb, seed, k, n)
        })
        .collect();
    Ok(mc_volume_from_tallies(&bb, &tallies))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorPlane {
    pub axis: Axis,
    pub offset: f64,
}

impl MirrorPlane {
    pub fn reflect(&self, mut p: Point3) -> Point3 {
        let i = self.axis.index();
        p[i] = 2.0 * self.offset - p[i];
        p
    }

    fn reflect_box(&self, bb: &Aabb) -> Aabb {
        let i = self.axis.index();
        let mut out = *bb;
        out.min[i] = 2.0 * self.offset - bb.max[i];
        out.max[i] = 2.0 * self.offset - bb.min[i];
        out
    }
}

/// Fraction of sampled points whose membership differs from their mirror image.
pub fn check_mirror_symmetry(node: &CsgNode, plane: MirrorPlane, samples: u64, seed: u64) -> f64 {
    let bb = node.bbox();
    let region = bb.union(&plane.reflect_box(&bb));
    if samples == 0 {
        return 0.0;
    }
    let mut rng = stream(seed, 0);
    let mismatches = (0..samples)
        .filter(|_| {
            let p = sample(&mut rng, &region);
            node.contains(p) != node.contains(plane.reflect(p))
        })
        .count();
    mismatches as f64 / samples as f64
}

/// Fraction of sampled points where two nodes disagree on membership.
pub fn disagreement(a: &CsgNode, b: &CsgNode, samples: u64, seed: u64) -> f64 {
    if samples == 0 {
        return 0.0;
    }
    let region = a.bbox().union(&b.bbox());
    let mut rng = stream(seed, 0);
    let n = (0..samples)
        .filter(|_| {
            let p = sample(&mut rng, &region);
            a.contains(p) != b.contains(p)
        })
        .count();
    n as f64 / samples as f64
}
