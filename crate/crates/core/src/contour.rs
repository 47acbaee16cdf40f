//! Marching squares on a uniform node grid, with crossing points supplied by
//! a caller-provided refinement (typically bisection on the exact field).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Complex64;

/// Uniform grid of `nx x ny` nodes spanning a rectangle (corners included).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl ScanGrid {
    pub fn square(half_width: f64, center: Complex64, resolution: usize) -> Self {
        Self {
            x_min: center.re - half_width,
            x_max: center.re + half_width,
            y_min: center.im - half_width,
            y_max: center.im + half_width,
            nx: resolution,
            ny: resolution,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max].iter().all(|v| v.is_finite());
        if !finite || self.nx < 2 || self.ny < 2 || self.x_max <= self.x_min || self.y_max <= self.y_min {
            return Err(Error::invalid(format!("empty or degenerate scan grid {self:?}")));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    /// Larger of the two node spacings.
    pub fn step(&self) -> f64 {
        self.dx().max(self.dy())
    }

    pub fn node(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.x_min + i as f64 * self.dx(), self.y_min + j as f64 * self.dy())
    }

    /// Nodes in row-major order (`j` outer, `i` inner).
    pub fn nodes(&self) -> Vec<Complex64> {
        (0..self.ny).flat_map(|j| (0..self.nx).map(move |i| (i, j))).map(|(i, j)| self.node(i, j)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum EdgeId {
    /// `(i, j) -> (i + 1, j)`
    Horizontal(usize, usize),
    /// `(i, j) -> (i, j + 1)`
    Vertical(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Complex64,
    pub b: Complex64,
}

/// Level-set extraction of `values` (row-major over `grid.nodes()`).
///
/// A node is inside when `value >= level` (so `+inf` counts as inside). The
/// crossing point on an edge is `refine(p_in, p_out)` where `p_in` is the
/// inside endpoint.
pub fn marching_squares(
    grid: &ScanGrid,
    values: &[f64],
    level: f64,
    mut refine: impl FnMut(Complex64, Complex64) -> Complex64,
) -> Result<(Vec<Segment>, Vec<Vec<Complex64>>)> {
    grid.validate()?;
    if values.len() != grid.nx * grid.ny {
        return Err(Error::DimensionMismatch {
            expected: format!("{} grid values", grid.nx * grid.ny),
            got: format!("{}", values.len()),
        });
    }
    let val = |i: usize, j: usize| values[j * grid.nx + i];
    let inside = |i: usize, j: usize| val(i, j) >= level;

    let mut crossings: HashMap<EdgeId, Complex64> = HashMap::new();
    let mut crossing = |edge: EdgeId| -> Complex64 {
        *crossings.entry(edge).or_insert_with(|| {
            let ((i0, j0), (i1, j1)) = match edge {
                EdgeId::Horizontal(i, j) => ((i, j), (i + 1, j)),
                EdgeId::Vertical(i, j) => ((i, j), (i, j + 1)),
            };
            let (p0, p1) = (grid.node(i0, j0), grid.node(i1, j1));
            if inside(i0, j0) {
                refine(p0, p1)
            } else {
                refine(p1, p0)
            }
        })
    };

    let mut segments = Vec::new();
    let mut seg_edges = Vec::new();
    for j in 0..grid.ny - 1 {
        for i in 0..grid.nx - 1 {
            // corners counter-clockwise from bottom-left
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let state = corners.map(|(a, b)| inside(a, b));
            // edge k joins corner k and corner k + 1
            let edges = [
                EdgeId::Horizontal(i, j),
                EdgeId::Vertical(i + 1, j),
                EdgeId::Horizontal(i, j + 1),
                EdgeId::Vertical(i, j),
            ];
            let cut: Vec<usize> = (0..4).filter(|&k| state[k] != state[(k + 1) % 4]).collect();
            let pairs: Vec<(usize, usize)> = match cut.len() {
                0 => continue,
                2 => vec![(cut[0], cut[1])],
                4 => {
                    let center = corners.iter().map(|&(a, b)| val(a, b)).sum::<f64>() / 4.0;
                    let center_inside = center >= level;
                    // isolate the corners whose state differs from the centre;
                    // corner k is bounded by edges k-1 and k
                    (0..4).filter(|&k| state[k] != center_inside).map(|k| ((k + 3) % 4, k)).collect()
                }
                _ => unreachable!("a square has an even number of sign changes"),
            };
            for (e0, e1) in pairs {
                let (a, b) = (crossing(edges[e0]), crossing(edges[e1]));
                segments.push(Segment { a, b });
                seg_edges.push((edges[e0], edges[e1]));
            }
        }
    }
    let polylines = join(&segments, &seg_edges);
    Ok((segments, polylines))
}

fn join(segments: &[Segment], seg_edges: &[(EdgeId, EdgeId)]) -> Vec<Vec<Complex64>> {
    let mut by_edge: HashMap<EdgeId, Vec<usize>> = HashMap::new();
    for (k, &(e0, e1)) in seg_edges.iter().enumerate() {
        by_edge.entry(e0).or_default().push(k);
        by_edge.entry(e1).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        // walk forward from e1, then backward from e0
        let mut forward = vec![segments[start].a, segments[start].b];
        let mut edge = seg_edges[start].1;
        while let Some(next) = by_edge[&edge].iter().copied().find(|&k| !used[k]) {
            used[next] = true;
            let (e0, e1) = seg_edges[next];
            let (pt, other) = if e0 == edge { (segments[next].b, e1) } else { (segments[next].a, e0) };
            forward.push(pt);
            edge = other;
        }
        let mut backward = Vec::new();
        let mut edge = seg_edges[start].0;
        while let Some(next) = by_edge[&edge].iter().copied().find(|&k| !used[k]) {
            used[next] = true;
            let (e0, e1) = seg_edges[next];
            let (pt, other) = if e0 == edge { (segments[next].b, e1) } else { (segments[next].a, e0) };
            backward.push(pt);
            edge = other;
        }
        backward.reverse();
        backward.extend(forward);
        lines.push(backward);
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bisect(f: impl Fn(Complex64) -> f64, p_in: Complex64, p_out: Complex64) -> Complex64 {
        let (mut a, mut b) = (p_in, p_out);
        for _ in 0..60 {
            let m = (a + b) / 2.0;
            if f(m) >= 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        (a + b) / 2.0
    }

    #[test]
    fn circle_is_one_closed_loop() {
        let grid = ScanGrid::square(2.0, Complex64::new(0.0, 0.0), 41);
        let f = |z: Complex64| 1.0 - z.norm();
        let values: Vec<f64> = grid.nodes().into_iter().map(f).collect();
        let (segs, lines) = marching_squares(&grid, &values, 0.0, |a, b| bisect(f, a, b)).unwrap();
        assert!(!segs.is_empty());
        assert_eq!(lines.len(), 1);
        let line = &lines[0];
        assert!((line[0] - line[line.len() - 1]).norm() < 1e-12, "loop must close");
        for p in line {
            assert!((p.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn two_disjoint_disks_give_two_loops() {
        let grid = ScanGrid { x_min: -3.0, x_max: 3.0, y_min: -2.0, y_max: 2.0, nx: 61, ny: 41 };
        let f = |z: Complex64| (1.0 - (z - 1.5).norm()).max(1.0 - (z + 1.5).norm());
        let values: Vec<f64> = grid.nodes().into_iter().map(f).collect();
        let (_, lines) = marching_squares(&grid, &values, 0.0, |a, b| bisect(f, a, b)).unwrap();
        assert_eq!(lines.len(), 2);
    }

    #[test]
    fn degenerate_grid_is_rejected() {
        let grid = ScanGrid { x_min: 0.0, x_max: 0.0, y_min: 0.0, y_max: 1.0, nx: 4, ny: 4 };
        assert!(marching_squares(&grid, &[0.0; 16], 0.0, |a, _| a).is_err());
    }
}
