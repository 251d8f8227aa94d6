//! Skeleta of a planar triangulation drawn on a chart, with exact distances
//! to vertices and segments (minimum image on a torus).

use serde::{Deserialize, Serialize};

use crate::tensor_field::{GridChart, ScalarField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SkeletonSet {
    Empty,
    /// 0-skeleton.
    Vertices { points: Vec<[f64; 2]> },
    /// 1-skeleton: the segments together with their endpoints.
    Edges { points: Vec<[f64; 2]>, edges: Vec<[usize; 2]> },
    /// The whole chart.
    Whole,
}

fn point_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let w = [p[0] - a[0], p[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        ((w[0] * d[0] + w[1] * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (w[0] - t * d[0]).hypot(w[1] - t * d[1])
}

fn segment_segment(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> f64 {
    let cross = |o: [f64; 2], p: [f64; 2], q: [f64; 2]| (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0]);
    let (d1, d2) = (cross(a, b, c), cross(a, b, d));
    let (d3, d4) = (cross(c, d, a), cross(c, d, b));
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        return 0.0;
    }
    point_segment(a, c, d)
        .min(point_segment(b, c, d))
        .min(point_segment(c, a, b))
        .min(point_segment(d, a, b))
}

impl SkeletonSet {
    pub fn dimension(&self) -> Option<usize> {
        match self {
            SkeletonSet::Empty => None,
            SkeletonSet::Vertices { .. } => Some(0),
            SkeletonSet::Edges { .. } => Some(1),
            SkeletonSet::Whole => Some(2),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, SkeletonSet::Empty)
    }

    /// Number of pieces that must be processed in separate components:
    /// vertices, segments, or the single whole-chart piece.
    pub fn piece_count(&self) -> usize {
        match self {
            SkeletonSet::Empty => 0,
            SkeletonSet::Vertices { points } => points.len(),
            SkeletonSet::Edges { edges, .. } => edges.len(),
            SkeletonSet::Whole => 1,
        }
    }

    /// Point `q` translated by whole periods to sit nearest `x`.
    fn near_image(chart: &GridChart, x: [f64; 2], q: [f64; 2]) -> [f64; 2] {
        let d = chart.displacement(x, q);
        [x[0] - d[0], x[1] - d[1]]
    }

    /// Distance from `x` to piece `k` (see `piece_count`).
    pub fn piece_distance(&self, chart: &GridChart, x: [f64; 2], k: usize) -> f64 {
        match self {
            SkeletonSet::Empty => f64::INFINITY,
            SkeletonSet::Whole => 0.0,
            SkeletonSet::Vertices { points } => {
                let d = chart.displacement(x, points[k]);
                d[0].hypot(d[1])
            }
            SkeletonSet::Edges { points, edges } => {
                let [i, j] = edges[k];
                let a = Self::near_image(chart, x, points[i]);
                let b = [a[0] + points[j][0] - points[i][0], a[1] + points[j][1] - points[i][1]];
                point_segment(x, a, b)
            }
        }
    }

    /// Distance from `x` to the set and the index of the nearest piece.
    pub fn nearest(&self, chart: &GridChart, x: [f64; 2]) -> (f64, Option<usize>) {
        let mut best = (f64::INFINITY, None);
        for k in 0..self.piece_count() {
            let d = self.piece_distance(chart, x, k);
            if d < best.0 {
                best = (d, Some(k));
            }
        }
        best
    }

    pub fn distance(&self, chart: &GridChart, x: [f64; 2]) -> f64 {
        self.nearest(chart, x).0
    }

    /// Distances at all nodes; infinite for the empty set.
    pub fn distance_field(&self, chart: &GridChart) -> ScalarField {
        ScalarField {
            chart: chart.clone(),
            values: (0..chart.len()).map(|k| self.distance(chart, chart.node_coords(k))).collect(),
        }
    }

    /// Nearest piece at every node.
    pub fn nearest_pieces(&self, chart: &GridChart) -> Vec<Option<usize>> {
        (0..chart.len()).map(|k| self.nearest(chart, chart.node_coords(k)).1).collect()
    }

    /// Half the smallest separation between pieces, the tube radius below
    /// which tubes around different pieces stay apart. For segments the
    /// separation of two edges meeting at a vertex is the sine of their
    /// angle (the gap at unit distance from the vertex, which the smaller
    /// set already removes); other pairs use their Euclidean distance.
    pub fn separation(&self, chart: &GridChart) -> f64 {
        let mut best = f64::INFINITY;
        match self {
            SkeletonSet::Empty | SkeletonSet::Whole => {}
            SkeletonSet::Vertices { points } => {
                for (a, p) in points.iter().enumerate() {
                    for q in &points[a + 1..] {
                        let d = chart.displacement(*p, *q);
                        best = best.min(d[0].hypot(d[1]));
                    }
                }
            }
            SkeletonSet::Edges { points, edges } => {
                for (a, e) in edges.iter().enumerate() {
                    for f in &edges[a + 1..] {
                        let shared = e.iter().find(|v| f.contains(v)).copied();
                        let sep = match shared {
                            Some(v) => {
                                let o = points[v];
                                let far = |edge: &[usize; 2]| {
                                    let w = if edge[0] == v { edge[1] } else { edge[0] };
                                    chart.displacement(points[w], o)
                                };
                                let (p, q) = (far(e), far(f));
                                let cross = p[0] * q[1] - p[1] * q[0];
                                let dot = p[0] * q[0] + p[1] * q[1];
                                let angle = cross.atan2(dot).abs();
                                // beyond a right angle the edges separate as fast as the distance grows
                                if angle >= std::f64::consts::FRAC_PI_2 {
                                    1.0
                                } else {
                                    angle.sin()
                                }
                            }
                            None => {
                                let o = points[e[0]];
                                let shift = |p: [f64; 2]| {
                                    let d = chart.displacement(p, o);
                                    [o[0] + d[0], o[1] + d[1]]
                                };
                                segment_segment(
                                    shift(points[e[0]]),
                                    shift(points[e[1]]),
                                    shift(points[f[0]]),
                                    shift(points[f[1]]),
                                )
                            }
                        };
                        best = best.min(sep);
                    }
                }
            }
        }
        0.5 * best
    }
}

/// A triangulated patch: vertices and edges of the triangles drawn on the
/// chart. The skeleta are the vertices, the edges, and the whole chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triangulation {
    pub points: Vec<[f64; 2]>,
    pub edges: Vec<[usize; 2]>,
}

impl Triangulation {
    /// Single triangle with the given corners.
    pub fn triangle(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Self {
        Self {
            points: vec![a, b, c],
            edges: vec![[0, 1], [1, 2], [2, 0]],
        }
    }

    /// `S_0 = {}`, `S_1` vertices, `S_2` edges, `S_3` the whole chart.
    pub fn skeleta(&self) -> Vec<SkeletonSet> {
        vec![
            SkeletonSet::Empty,
            SkeletonSet::Vertices {
                points: self.points.clone(),
            },
            SkeletonSet::Edges {
                points: self.points.clone(),
                edges: self.edges.clone(),
            },
            SkeletonSet::Whole,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_distances() {
        assert!((point_segment([0.5, 1.0], [0.0, 0.0], [1.0, 0.0]) - 1.0).abs() < 1e-15);
        assert!((point_segment([2.0, 0.0], [0.0, 0.0], [1.0, 0.0]) - 1.0).abs() < 1e-15);
        assert_eq!(segment_segment([0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]), 0.0);
        assert!((segment_segment([0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [1.0, 2.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn torus_distances_wrap() {
        let chart = GridChart::torus(1.0, 16).unwrap();
        let s = SkeletonSet::Vertices { points: vec![[0.05, 0.5]] };
        assert!((s.distance(&chart, [0.95, 0.5]) - 0.1).abs() < 1e-12);
        let e = SkeletonSet::Edges {
            points: vec![[0.9, 0.2], [1.1, 0.2]],
            edges: vec![[0, 1]],
        };
        assert!((e.distance(&chart, [0.0, 0.3]) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn separation_of_triangle_skeleta() {
        let chart = GridChart::square(2.0, 16).unwrap();
        let t = Triangulation::triangle([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]);
        let sk = t.skeleta();
        assert!((sk[1].separation(&chart) - 0.5).abs() < 1e-15);
        // the sharpest corner is 45 degrees
        assert!((sk[2].separation(&chart) - 0.5 * std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(sk[3].piece_count(), 1);
        assert!(sk[0].distance(&chart, [0.3, 0.3]).is_infinite());
    }
}
