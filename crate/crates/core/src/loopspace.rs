//! Closed polygonal curves: the discrete model of the space of closed curves.
//!
//! A [`Loop`] is an ordered list of `N ≥ 3` vertices with implicit closure.
//! On torus charts a loop also carries one integer offset per edge, so the
//! displacement of edge `j` is `v[j+1] − v[j] + w[j]` and never depends on
//! which representative of a point was stored. Plane loops have no offsets.
//!
//! Curves are parameterized by `t ∈ [0,1]` in `N` equal steps, so the
//! velocity on edge `j` is `N · displacement(j)`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{bilinear, ChartPoint, GeometrySpec};
use crate::Scalar;

/// Integer lattice offset applied to one edge of a torus loop.
pub type Winding = [i64; 2];

/// Closed polygonal curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Loop<T> {
    vertices: Vec<ChartPoint<T>>,
    winding: Option<Vec<Winding>>,
}

impl<T: Scalar> Loop<T> {
    /// Plane loop (no winding bookkeeping).
    pub fn new(vertices: Vec<ChartPoint<T>>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::TooFewVertices(vertices.len()));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("loop vertex"));
        }
        Ok(Self {
            vertices,
            winding: None,
        })
    }

    /// Torus loop with one offset per outgoing edge.
    pub fn with_winding(vertices: Vec<ChartPoint<T>>, winding: Vec<Winding>) -> Result<Self> {
        let mut l = Self::new(vertices)?;
        if winding.len() != l.vertices.len() {
            return Err(Error::IncompatibleLoops(format!(
                "{} winding offsets for {} vertices",
                winding.len(),
                l.vertices.len()
            )));
        }
        l.winding = Some(winding);
        Ok(l)
    }

    /// Same curve, marked as living on a torus (all-zero offsets if none yet).
    pub fn into_torus(mut self) -> Self {
        if self.winding.is_none() {
            self.winding = Some(vec![[0, 0]; self.vertices.len()]);
        }
        self
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    #[inline]
    pub fn vertices(&self) -> &[ChartPoint<T>] {
        &self.vertices
    }

    #[inline]
    pub fn winding(&self) -> Option<&[Winding]> {
        self.winding.as_deref()
    }

    #[inline]
    pub fn has_winding(&self) -> bool {
        self.winding.is_some()
    }

    #[inline]
    fn offset(&self, j: usize) -> ChartPoint<T> {
        match &self.winding {
            Some(w) => {
                ChartPoint::new(T::from_i64(w[j][0]).unwrap(), T::from_i64(w[j][1]).unwrap())
            }
            None => ChartPoint::zero(),
        }
    }

    /// Displacement of edge `j` (from vertex `j` to vertex `j+1`).
    #[inline]
    pub fn displacement(&self, j: usize) -> ChartPoint<T> {
        let n = self.vertices.len();
        let next = self.vertices[(j + 1) % n];
        match &self.winding {
            Some(_) => next + self.offset(j) - self.vertices[j],
            None => next - self.vertices[j],
        }
    }

    /// Midpoint of edge `j`, expressed next to vertex `j`.
    #[inline]
    pub fn midpoint(&self, j: usize) -> ChartPoint<T> {
        self.vertices[j] + self.displacement(j) * T::lit(0.5)
    }

    /// Sum of all edge offsets: the homology class of a torus loop.
    pub fn total_winding(&self) -> Winding {
        match &self.winding {
            Some(w) => w
                .iter()
                .fold([0, 0], |acc, o| [acc[0] + o[0], acc[1] + o[1]]),
            None => [0, 0],
        }
    }

    /// True when every edge has zero displacement (a one-point curve).
    pub fn is_point_curve(&self) -> bool {
        (0..self.len()).all(|j| {
            let d = self.displacement(j);
            d.x == T::zero() && d.y == T::zero()
        })
    }

    /// Vertices of the lift `u_0 = v_0, u_{j+1} = u_j + displacement(j)`.
    pub fn lift(&self) -> Vec<ChartPoint<T>> {
        let mut out = Vec::with_capacity(self.len());
        let mut u = self.vertices[0];
        for j in 0..self.len() {
            out.push(u);
            u += self.displacement(j);
        }
        out
    }

    /// Relabels so that vertex `k` becomes vertex 0.
    pub fn cyclic_shift(&self, k: usize) -> Self {
        let n = self.len();
        let k = k % n;
        let vertices = (0..n).map(|j| self.vertices[(j + k) % n]).collect();
        let winding = self
            .winding
            .as_ref()
            .map(|w| (0..n).map(|j| w[(j + k) % n]).collect());
        Self { vertices, winding }
    }

    /// Opposite traversal direction over the same edges.
    pub fn reversed(&self) -> Self {
        let n = self.len();
        let vertices: Vec<_> = (0..n).map(|j| self.vertices[(n - j) % n]).collect();
        // new edge j runs old vertex (n-j) -> (n-j-1), i.e. old edge (n-j-1) backwards
        let winding = self.winding.as_ref().map(|w| {
            (0..n)
                .map(|j| {
                    let o = w[(2 * n - j - 1) % n];
                    [-o[0], -o[1]]
                })
                .collect()
        });
        Self { vertices, winding }
    }

    /// Wraps every vertex into `[0,1)²` and adjusts offsets so all
    /// displacements are unchanged. Identity for plane loops.
    pub fn canonicalize(&self, spec: &GeometrySpec<T>) -> Self {
        if !spec.is_torus() {
            return self.clone();
        }
        let n = self.len();
        let mut shift = Vec::with_capacity(n);
        let mut vertices = Vec::with_capacity(n);
        for v in &self.vertices {
            let f = ChartPoint::new(v.x.floor(), v.y.floor());
            shift.push([f.x.to_i64().unwrap_or(0), f.y.to_i64().unwrap_or(0)]);
            vertices.push(spec.wrap_point(*v));
        }
        let old: Vec<Winding> = self.winding.clone().unwrap_or_else(|| vec![[0, 0]; n]);
        let winding = (0..n)
            .map(|j| {
                let nx = (j + 1) % n;
                [
                    old[j][0] + shift[nx][0] - shift[j][0],
                    old[j][1] + shift[nx][1] - shift[j][1],
                ]
            })
            .collect();
        Self {
            vertices,
            winding: Some(winding),
        }
    }

    /// Flat coordinate vector `[x_0, y_0, x_1, y_1, …]`.
    pub fn coords(&self) -> Vec<T> {
        self.vertices.iter().flat_map(|v| [v.x, v.y]).collect()
    }

    /// Same winding data, new vertex coordinates.
    pub fn with_coords(&self, coords: &[T]) -> Self {
        debug_assert_eq!(coords.len(), 2 * self.len());
        let vertices = coords
            .chunks_exact(2)
            .map(|c| ChartPoint::new(c[0], c[1]))
            .collect();
        Self {
            vertices,
            winding: self.winding.clone(),
        }
    }

    /// Vertexwise linear interpolation `(1−t)·a + t·b`; requires equal
    /// vertex counts and identical offsets.
    pub fn lerp(a: &Self, b: &Self, t: T) -> Result<Self> {
        if a.len() != b.len() || a.winding != b.winding {
            return Err(Error::IncompatibleLoops(
                "interpolation needs matching vertex count and winding".into(),
            ));
        }
        let s = T::one() - t;
        let vertices = a
            .vertices
            .iter()
            .zip(&b.vertices)
            .map(|(p, q)| *p * s + *q * t)
            .collect();
        Ok(Self {
            vertices,
            winding: a.winding.clone(),
        })
    }

    /// Largest chart distance between corresponding vertices.
    pub fn vertex_distance(a: &Self, b: &Self) -> T {
        a.vertices
            .iter()
            .zip(&b.vertices)
            .map(|(p, q)| (*p - *q).norm())
            .fold(T::zero(), T::max)
    }

    /// Writes the loop CSV: `index,x,y` (plus `wx,wy` on torus loops).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::LoopFile(e.to_string());
        if self.winding.is_some() {
            w.write_record(["index", "x", "y", "wx", "wy"])
                .map_err(io)?;
        } else {
            w.write_record(["index", "x", "y"]).map_err(io)?;
        }
        for (j, v) in self.vertices.iter().enumerate() {
            let mut rec = vec![j.to_string(), v.x.to_string(), v.y.to_string()];
            if let Some(wd) = &self.winding {
                rec.push(wd[j][0].to_string());
                rec.push(wd[j][1].to_string());
            }
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| Error::LoopFile(e.to_string()))
    }

    /// Reads the format produced by [`Loop::write_csv`].
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r
            .headers()
            .map_err(|e| Error::LoopFile(e.to_string()))?
            .clone();
        let torus = match headers.iter().collect::<Vec<_>>().as_slice() {
            ["index", "x", "y"] => false,
            ["index", "x", "y", "wx", "wy"] => true,
            other => return Err(Error::LoopFile(format!("unexpected header {other:?}"))),
        };
        let mut vertices = Vec::new();
        let mut winding = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| Error::LoopFile(e.to_string()))?;
            let field = |i: usize| {
                rec.get(i)
                    .ok_or_else(|| Error::LoopFile(format!("row {row}: missing column {i}")))
            };
            let idx: usize = field(0)?
                .parse()
                .map_err(|_| Error::LoopFile(format!("row {row}: bad index")))?;
            if idx != row {
                return Err(Error::LoopFile(format!(
                    "row {row}: index {idx} out of order"
                )));
            }
            let num = |s: &str| -> Result<T> {
                s.parse::<f64>()
                    .map(T::lit)
                    .map_err(|_| Error::LoopFile(format!("row {row}: bad number {s:?}")))
            };
            vertices.push(ChartPoint::new(num(field(1)?)?, num(field(2)?)?));
            if torus {
                let int = |s: &str| -> Result<i64> {
                    s.parse()
                        .map_err(|_| Error::LoopFile(format!("row {row}: bad winding {s:?}")))
                };
                winding.push([int(field(3)?)?, int(field(4)?)?]);
            }
        }
        if torus {
            Self::with_winding(vertices, winding)
        } else {
            Self::new(vertices)
        }
    }
}

/// Riemannian length of each edge, with the metric evaluated at the edge midpoint.
pub fn edge_lengths<T: Scalar>(spec: &GeometrySpec<T>, gamma: &Loop<T>) -> Vec<T> {
    (0..gamma.len())
        .map(|j| {
            let d = gamma.displacement(j);
            let g = spec.metric(gamma.midpoint(j));
            bilinear(&g, d, d).max(T::zero()).sqrt()
        })
        .collect()
}

/// Riemannian length `L(γ)`.
pub fn length<T: Scalar>(spec: &GeometrySpec<T>, gamma: &Loop<T>) -> T {
    edge_lengths(spec, gamma)
        .into_iter()
        .fold(T::zero(), |a, b| a + b)
}

/// Coefficient of variation of the edge speeds (0 for arc-length loops).
pub fn speed_cv<T: Scalar>(spec: &GeometrySpec<T>, gamma: &Loop<T>) -> T {
    let l = edge_lengths(spec, gamma);
    let n = T::from_usize_lossy(l.len());
    let mean = l.iter().fold(T::zero(), |a, &b| a + b) / n;
    if mean == T::zero() {
        return T::zero();
    }
    let var = l
        .iter()
        .fold(T::zero(), |a, &b| a + (b - mean) * (b - mean))
        / n;
    var.sqrt() / mean
}

/// Regular `n`-gon inscribed in the circle of radius `r` about `center`.
/// `orientation = 1` is counterclockwise, `-1` clockwise.
pub fn make_circle<T: Scalar>(
    center: ChartPoint<T>,
    r: T,
    orientation: i32,
    n: usize,
) -> Result<Loop<T>> {
    make_circle_with_phase(center, r, orientation, n, T::zero())
}

/// [`make_circle`] with the first vertex at angle `phase`.
pub fn make_circle_with_phase<T: Scalar>(
    center: ChartPoint<T>,
    r: T,
    orientation: i32,
    n: usize,
    phase: T,
) -> Result<Loop<T>> {
    if r < T::zero() || !r.is_finite() {
        return Err(Error::InvalidParams(format!(
            "circle radius must be finite and ≥ 0, got {r}"
        )));
    }
    if n < 3 {
        return Err(Error::TooFewVertices(n));
    }
    let sign = if orientation < 0 { -T::one() } else { T::one() };
    let nn = T::from_usize_lossy(n);
    let vertices = (0..n)
        .map(|j| {
            let theta = phase + sign * T::TAU() * T::from_usize_lossy(j) / nn;
            if r == T::zero() {
                center
            } else {
                center + ChartPoint::new(r * theta.cos(), r * theta.sin())
            }
        })
        .collect();
    Loop::new(vertices)
}

/// One-point curve at `p` with `n` coincident vertices.
pub fn make_point_loop<T: Scalar>(p: ChartPoint<T>, n: usize) -> Result<Loop<T>> {
    Loop::new(vec![p; n])
}

/// Resamples `gamma` to `n_out` vertices with equal Riemannian edge lengths.
///
/// Output vertices lie on the input polygon (vertex 0 is kept). The equal-chord
/// condition is solved by a fixed-point iteration on the arc positions.
pub fn resample_arclength<T: Scalar>(
    spec: &GeometrySpec<T>,
    gamma: &Loop<T>,
    n_out: usize,
) -> Result<Loop<T>> {
    if n_out < 3 {
        return Err(Error::TooFewVertices(n_out));
    }
    let lens = edge_lengths(spec, gamma);
    let total = lens.iter().fold(T::zero(), |a, &b| a + b);
    if !(total > T::zero()) {
        return Err(Error::DegenerateLoop);
    }
    let n = gamma.len();
    let lift = gamma.lift();
    let closure = {
        let w = gamma.total_winding();
        ChartPoint::new(T::from_i64(w[0]).unwrap(), T::from_i64(w[1]).unwrap())
    };
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(T::zero());
    for &l in &lens {
        let last = *cum.last().unwrap();
        cum.push(last + l);
    }

    let point_at = |sigma: T| -> ChartPoint<T> {
        let mut s = sigma;
        let mut base = ChartPoint::zero();
        while s >= total {
            s = s - total;
            base += closure;
        }
        while s < T::zero() {
            s = s + total;
            base -= closure;
        }
        // last edge whose start is ≤ s, skipping zero-length edges
        let e = match cum[..n].binary_search_by(|c| c.partial_cmp(&s).unwrap()) {
            Ok(mut i) => {
                while i + 1 < n && cum[i + 1] == s {
                    i += 1;
                }
                i
            }
            Err(i) => i - 1,
        };
        let frac = if lens[e] > T::zero() {
            (s - cum[e]) / lens[e]
        } else {
            T::zero()
        };
        base + lift[e] + gamma.displacement(e) * frac
    };

    let nn = T::from_usize_lossy(n_out);
    let mut sigma: Vec<T> = (0..n_out)
        .map(|j| total * T::from_usize_lossy(j) / nn)
        .collect();
    let tol = T::epsilon() * T::lit(64.0);
    let mut q: Vec<ChartPoint<T>> = sigma.iter().map(|&s| point_at(s)).collect();
    for _ in 0..500 {
        let chords: Vec<T> = (0..n_out)
            .map(|j| {
                let next = if j + 1 == n_out {
                    q[0] + closure
                } else {
                    q[j + 1]
                };
                let d = next - q[j];
                let mid = q[j] + d * T::lit(0.5);
                bilinear(&spec.metric(mid), d, d).max(T::zero()).sqrt()
            })
            .collect();
        let sum = chords.iter().fold(T::zero(), |a, &b| a + b);
        let mean = sum / nn;
        let spread = chords
            .iter()
            .map(|&c| (c - mean).abs())
            .fold(T::zero(), T::max);
        if spread <= tol * mean {
            break;
        }
        let ratio = total / sum;
        let mut acc = T::zero();
        for j in 1..n_out {
            acc = acc + chords[j - 1];
            let target = mean * T::from_usize_lossy(j);
            sigma[j] = sigma[j] + ratio * (target - acc);
        }
        q = sigma.iter().map(|&s| point_at(s)).collect();
    }

    match gamma.winding() {
        Some(_) => {
            let mut winding = vec![[0i64, 0i64]; n_out];
            winding[n_out - 1] = gamma.total_winding();
            Loop::with_winding(q, winding)
        }
        None => Loop::new(q),
    }
}

/// Concatenation `γ1 ∪ γ2`: traverses `γ1` from a shared vertex, then `γ2`.
///
/// Vertices are matched within `1e-9` (modulo integer translations on torus
/// loops). The result has `N1 + N2` vertices.
pub fn concat<T: Scalar>(g1: &Loop<T>, g2: &Loop<T>) -> Result<Loop<T>> {
    let torus = g1.has_winding() || g2.has_winding();
    let tol = T::lit(1e-9);
    let mut found = None;
    'outer: for (i, p) in g1.vertices().iter().enumerate() {
        for (k, q) in g2.vertices().iter().enumerate() {
            let diff = *p - *q;
            let shift = if torus {
                ChartPoint::new(diff.x.round(), diff.y.round())
            } else {
                ChartPoint::zero()
            };
            if (diff - shift).norm() <= tol {
                found = Some((
                    i,
                    k,
                    [shift.x.to_i64().unwrap_or(0), shift.y.to_i64().unwrap_or(0)],
                ));
                break 'outer;
            }
        }
    }
    let (i, k, n) = found.ok_or(Error::NotConcatenable)?;
    let a = g1.clone().into_torus().cyclic_shift(i);
    let b = g2.clone().into_torus().cyclic_shift(k);
    let (n1, n2) = (a.len(), b.len());
    let mut vertices = a.vertices.clone();
    vertices.extend_from_slice(&b.vertices);
    let wa = a.winding.unwrap();
    let wb = b.winding.unwrap();
    let mut winding = wa.clone();
    winding[n1 - 1] = [wa[n1 - 1][0] + n[0], wa[n1 - 1][1] + n[1]];
    winding.extend_from_slice(&wb);
    winding[n1 + n2 - 1] = [wb[n2 - 1][0] - n[0], wb[n2 - 1][1] - n[1]];
    if torus {
        Loop::with_winding(vertices, winding)
    } else {
        Loop::new(vertices)
    }
}

/// Whether a family is a single path (`P` = point) or a cylinder (`P` = circle).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterShape {
    Path,
    Cylinder,
}

/// A discretized sweep `P × [0,1] → loops`.
///
/// `rows[i][s]` is the loop at base point `i` and sweep parameter `s`; a path
/// family has exactly one row. Every `rows[i][0]` is a one-point curve.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopFamily<T> {
    pub shape: ParameterShape,
    pub rows: Vec<Vec<Loop<T>>>,
    /// Maximum allowed vertexwise distance between adjacent loops of a row.
    pub mesh_bound: T,
}

impl<T: Scalar> LoopFamily<T> {
    /// Builds and validates a family; `mesh_bound = None` uses twice the
    /// initial largest gap. Rows violating the bound are refined.
    pub fn new(
        shape: ParameterShape,
        rows: Vec<Vec<Loop<T>>>,
        mesh_bound: Option<T>,
    ) -> Result<Self> {
        if rows.is_empty() || rows.iter().any(|r| r.len() < 2) {
            return Err(Error::InvalidFamily(
                "every row needs at least two loops".into(),
            ));
        }
        if shape == ParameterShape::Path && rows.len() != 1 {
            return Err(Error::InvalidFamily(
                "a path family has exactly one row".into(),
            ));
        }
        let n = rows[0][0].len();
        for row in &rows {
            if row.iter().any(|l| l.len() != n) {
                return Err(Error::InvalidFamily(
                    "all loops must share the vertex count".into(),
                ));
            }
            if !row[0].is_point_curve() {
                return Err(Error::InvalidFamily(
                    "first loop of each row must be a one-point curve".into(),
                ));
            }
            if row.windows(2).any(|w| w[0].winding != w[1].winding) {
                return Err(Error::InvalidFamily(
                    "loops within a row must share winding offsets".into(),
                ));
            }
        }
        let mut fam = Self {
            shape,
            rows,
            mesh_bound: T::zero(),
        };
        fam.mesh_bound = mesh_bound.unwrap_or_else(|| fam.max_gap() * T::lit(2.0));
        fam.refine()?;
        Ok(fam)
    }

    pub fn vertex_count(&self) -> usize {
        self.rows[0][0].len()
    }

    /// Largest vertexwise gap between adjacent loops over all rows.
    pub fn max_gap(&self) -> T {
        self.rows
            .iter()
            .flat_map(|row| row.windows(2).map(|w| Loop::vertex_distance(&w[0], &w[1])))
            .fold(T::zero(), T::max)
    }

    /// Inserts interpolated loops until every adjacent gap is within `mesh_bound`.
    pub fn refine(&mut self) -> Result<()> {
        if !(self.mesh_bound > T::zero()) {
            return Ok(());
        }
        for row in &mut self.rows {
            *row = refine_row(row, self.mesh_bound)?;
        }
        Ok(())
    }

    /// Cyclic relabeling of the base-point index.
    pub fn rotate_rows(&self, k: usize) -> Self {
        let m = self.rows.len();
        let rows = (0..m).map(|i| self.rows[(i + k) % m].clone()).collect();
        Self {
            shape: self.shape,
            rows,
            mesh_bound: self.mesh_bound,
        }
    }
}

/// Inserts interpolated loops so that adjacent loops differ by at most `bound`.
pub fn refine_row<T: Scalar>(row: &[Loop<T>], bound: T) -> Result<Vec<Loop<T>>> {
    let mut out = Vec::with_capacity(row.len());
    for w in row.windows(2) {
        out.push(w[0].clone());
        let gap = Loop::vertex_distance(&w[0], &w[1]);
        let pieces = (gap / bound).ceil().to_usize().unwrap_or(1).max(1);
        for p in 1..pieces {
            let t = T::from_usize_lossy(p) / T::from_usize_lossy(pieces);
            out.push(Loop::lerp(&w[0], &w[1], t)?);
        }
    }
    out.extend(row.last().cloned());
    Ok(out)
}

/// Redistributes the loops of a row to equal spacing in the flat coordinate
/// metric (endpoints fixed), by piecewise-linear interpolation along the row.
pub fn reinterpolate_row<T: Scalar>(row: &[Loop<T>]) -> Result<Vec<Loop<T>>> {
    let m = row.len();
    if m < 3 {
        return Ok(row.to_vec());
    }
    let mut cum = vec![T::zero()];
    for w in row.windows(2) {
        let d: T = w[0]
            .vertices()
            .iter()
            .zip(w[1].vertices())
            .map(|(p, q)| (*p - *q).dot(*p - *q))
            .fold(T::zero(), |a, b| a + b)
            .sqrt();
        let last = *cum.last().unwrap();
        cum.push(last + d);
    }
    let total = cum[m - 1];
    if !(total > T::zero()) {
        return Ok(row.to_vec());
    }
    let mut out = Vec::with_capacity(m);
    out.push(row[0].clone());
    let mut seg = 0;
    for i in 1..m - 1 {
        let target = total * T::from_usize_lossy(i) / T::from_usize_lossy(m - 1);
        while seg + 1 < m - 1 && cum[seg + 1] < target {
            seg += 1;
        }
        let span = cum[seg + 1] - cum[seg];
        let t = if span > T::zero() {
            (target - cum[seg]) / span
        } else {
            T::zero()
        };
        out.push(Loop::lerp(&row[seg], &row[seg + 1], t)?);
    }
    out.push(row[m - 1].clone());
    Ok(out)
}
