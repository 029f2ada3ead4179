//! Interval-valued functions sampled on a uniform grid over an open box.
//!
//! Grid nodes are the interior lattice of the box: along axis `k` with
//! `r` points per axis the nodes sit at `lower + (i + 1) * h` with
//! `h = (upper - lower) / (r + 1)`. Box faces carry no nodes.
//!
//! A node set is treated as "closed and nowhere dense" when it contains no
//! full grid cell (all `2^n` corners of one elementary cell). Dense masks are
//! the complements of such sets.

use std::fmt::Write as _;

use thiserror::Error;

use crate::order::{ExtInterval, ExtReal, OrderError};

pub const MAX_DIMS: usize = 3;
pub const MIN_RESOLUTION: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("invalid domain: {0}")]
    BadDomain(String),
    #[error("grid functions live on different domains")]
    DomainMismatch,
    #[error("expected {expected} node values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("excluded node set contains the full grid cell at {cell:?}; it is not nowhere dense at this resolution")]
    NotDense { cell: Vec<usize> },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Order(#[from] OrderError),
}

/// Axis-aligned box with finite corners, `lower < upper` on every axis.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl DomainBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, GridError> {
        if lower.is_empty() || lower.len() > MAX_DIMS {
            return Err(GridError::BadDomain(format!("dimension must be 1..={MAX_DIMS}, got {}", lower.len())));
        }
        if lower.len() != upper.len() {
            return Err(GridError::BadDomain("corner dimensions differ".into()));
        }
        for (k, (a, b)) in lower.iter().zip(&upper).enumerate() {
            if !a.is_finite() || !b.is_finite() {
                return Err(GridError::BadDomain(format!("axis {k}: corners must be finite (truncate unbounded domains)")));
            }
            if a >= b {
                return Err(GridError::BadDomain(format!("axis {k}: lower {a} is not below upper {b}")));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dims(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    /// Euclidean length of the diagonal.
    pub fn diagonal(&self) -> f64 {
        (0..self.dims()).map(|k| self.side(k).powi(2)).sum::<f64>().sqrt()
    }

    /// Closed-box membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    /// Open-box membership.
    pub fn contains_interior(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (a, b))| *a < *v && *v < *b)
    }
}

/// Uniform interior lattice over an open box.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDomain {
    bounds: DomainBox,
    resolution: Vec<usize>,
    strides: Vec<usize>,
}

impl GridDomain {
    pub fn new(bounds: DomainBox, resolution: Vec<usize>) -> Result<Self, GridError> {
        if resolution.len() != bounds.dims() {
            return Err(GridError::BadDomain("resolution has wrong number of axes".into()));
        }
        if let Some(r) = resolution.iter().find(|&&r| r < MIN_RESOLUTION) {
            return Err(GridError::BadDomain(format!("resolution {r} is below the minimum {MIN_RESOLUTION}")));
        }
        let mut strides = vec![1; resolution.len()];
        for k in (0..resolution.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * resolution[k + 1];
        }
        Ok(Self { bounds, resolution, strides })
    }

    /// Same resolution on every axis.
    pub fn uniform(lower: Vec<f64>, upper: Vec<f64>, points_per_axis: usize) -> Result<Self, GridError> {
        let n = lower.len();
        Self::new(DomainBox::new(lower, upper)?, vec![points_per_axis; n])
    }

    pub fn bounds(&self) -> &DomainBox {
        &self.bounds
    }

    pub fn dims(&self) -> usize {
        self.resolution.len()
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn node_count(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.bounds.side(axis) / (self.resolution[axis] + 1) as f64
    }

    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        self.bounds.lower[axis] + (i + 1) as f64 * self.spacing(axis)
    }

    pub fn index_of(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        self.strides
            .iter()
            .map(|s| {
                let i = idx / s;
                idx %= s;
                i
            })
            .collect()
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx).iter().enumerate().map(|(k, &i)| self.coordinate(k, i)).collect()
    }

    /// Nodes at Chebyshev index distance `<= radius` from `idx`, clipped at
    /// the grid boundary. Includes `idx` itself.
    pub fn neighborhood(&self, idx: usize, radius: usize) -> Vec<usize> {
        let center = self.multi_index(idx);
        let ranges: Vec<(usize, usize)> = center
            .iter()
            .zip(&self.resolution)
            .map(|(&c, &r)| (c.saturating_sub(radius), (c + radius).min(r - 1)))
            .collect();
        let mut out = Vec::new();
        let mut cur: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        loop {
            out.push(self.index_of(&cur));
            let mut k = cur.len();
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                if cur[k] < ranges[k].1 {
                    cur[k] += 1;
                    break;
                }
                cur[k] = ranges[k].0;
            }
        }
    }

    /// Index of the grid node nearest to `coord` along `axis`, if that node
    /// lies within half a spacing.
    pub fn nearest_index(&self, axis: usize, coord: f64) -> Option<usize> {
        let t = (coord - self.bounds.lower[axis]) / self.spacing(axis) - 1.0;
        let i = t.round();
        if i < -0.5 || i > self.resolution[axis] as f64 - 0.5 {
            return None;
        }
        Some(i.max(0.0) as usize)
    }

    /// Base corner of the first grid cell whose `2^n` corners are all
    /// outside `mask`, if any.
    pub fn first_excluded_cell(&self, mask: &[bool]) -> Option<Vec<usize>> {
        let n = self.dims();
        let cells: Vec<usize> = self.resolution.iter().map(|r| r - 1).collect();
        let total: usize = cells.iter().product();
        let mut base = vec![0usize; n];
        for _ in 0..total {
            let all_out = (0..1usize << n).all(|bits| {
                let corner: Vec<usize> = (0..n).map(|k| base[k] + ((bits >> k) & 1)).collect();
                !mask[self.index_of(&corner)]
            });
            if all_out {
                return Some(base);
            }
            for k in (0..n).rev() {
                base[k] += 1;
                if base[k] < cells[k] {
                    break;
                }
                base[k] = 0;
            }
        }
        None
    }

    /// True when the complement of `mask` contains no full grid cell.
    pub fn is_discretely_dense(&self, mask: &[bool]) -> bool {
        self.first_excluded_cell(mask).is_none()
    }

    pub fn check_dense(&self, mask: &[bool]) -> Result<(), GridError> {
        if mask.len() != self.node_count() {
            return Err(GridError::LengthMismatch { expected: self.node_count(), got: mask.len() });
        }
        match self.first_excluded_cell(mask) {
            Some(cell) => Err(GridError::NotDense { cell }),
            None => Ok(()),
        }
    }
}

/// Interval values per node plus a dense mask of reliable nodes.
///
/// Nodes outside the mask still carry a value but it is not trusted; they
/// play the role of the exceptional closed nowhere dense set.
#[derive(Debug, Clone, PartialEq)]
pub struct GridIntervalFunction {
    domain: GridDomain,
    values: Vec<ExtInterval>,
    mask: Vec<bool>,
}

impl GridIntervalFunction {
    pub fn new(domain: GridDomain, values: Vec<ExtInterval>, mask: Vec<bool>) -> Result<Self, GridError> {
        let n = domain.node_count();
        if values.len() != n {
            return Err(GridError::LengthMismatch { expected: n, got: values.len() });
        }
        domain.check_dense(&mask)?;
        Ok(Self { domain, values, mask })
    }

    /// Fully masked function from a per-point interval evaluator.
    pub fn from_fn(domain: GridDomain, mut f: impl FnMut(&[f64]) -> ExtInterval) -> Self {
        let values = (0..domain.node_count()).map(|i| f(&domain.point(i))).collect();
        let mask = vec![true; domain.node_count()];
        Self { domain, values, mask }
    }

    /// Fully masked point-valued function. Panics if `f` returns NaN.
    pub fn from_point_fn(domain: GridDomain, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        Self::from_fn(domain, |x| ExtInterval::point(ExtReal::of(f(x))))
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn values(&self) -> &[ExtInterval] {
        &self.values
    }

    pub fn value(&self, idx: usize) -> ExtInterval {
        self.values[idx]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn is_reliable(&self, idx: usize) -> bool {
        self.mask[idx]
    }

    pub fn with_mask(&self, mask: Vec<bool>) -> Result<Self, GridError> {
        Self::new(self.domain.clone(), self.values.clone(), mask)
    }

    pub fn with_values(&self, values: Vec<ExtInterval>) -> Result<Self, GridError> {
        Self::new(self.domain.clone(), values, self.mask.clone())
    }

    /// Degenerate function taking the lower endpoint everywhere.
    pub fn lower_selection(&self) -> Self {
        let values = self.values.iter().map(|v| ExtInterval::point(v.lo())).collect();
        Self { domain: self.domain.clone(), values, mask: self.mask.clone() }
    }

    pub fn upper_selection(&self) -> Self {
        let values = self.values.iter().map(|v| ExtInterval::point(v.hi())).collect();
        Self { domain: self.domain.clone(), values, mask: self.mask.clone() }
    }

    pub fn is_point_valued(&self) -> bool {
        self.values.iter().all(ExtInterval::is_degenerate)
    }

    fn same_domain(&self, other: &Self) -> Result<(), GridError> {
        if self.domain != other.domain {
            return Err(GridError::DomainMismatch);
        }
        Ok(())
    }

    /// Serialize to the plain-text grid format.
    pub fn to_text(&self) -> String {
        let d = &self.domain;
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        let mut s = String::new();
        s.push_str("# ocm grid function\n");
        let _ = writeln!(s, "dims {}", d.dims());
        let _ = writeln!(s, "lower {}", join(d.bounds.lower()));
        let _ = writeln!(s, "upper {}", join(d.bounds.upper()));
        let _ = writeln!(s, "resolution {}", d.resolution.iter().map(usize::to_string).collect::<Vec<_>>().join(" "));
        for (v, m) in self.values.iter().zip(&self.mask) {
            let _ = writeln!(s, "{} {} {}", v.lo(), v.hi(), u8::from(*m));
        }
        s
    }

    /// Parse the plain-text grid format produced by [`Self::to_text`].
    pub fn from_text(text: &str) -> Result<Self, GridError> {
        let mut header: Vec<(usize, &str, Vec<&str>)> = Vec::new();
        let mut records: Vec<(usize, &str)> = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if header.len() < 4 {
                let mut it = line.split_whitespace();
                let key = it.next().unwrap_or_default();
                header.push((no + 1, key, it.collect()));
            } else {
                records.push((no + 1, line));
            }
        }
        let field = |name: &str| -> Result<&(usize, &str, Vec<&str>), GridError> {
            header.iter().find(|h| h.1 == name).ok_or(GridError::Parse { line: 0, msg: format!("missing header field `{name}`") })
        };
        let nums = |h: &(usize, &str, Vec<&str>)| -> Result<Vec<f64>, GridError> {
            h.2.iter().map(|t| t.parse::<f64>().map_err(|_| GridError::Parse { line: h.0, msg: format!("bad number {t:?}") })).collect()
        };
        let dims_h = field("dims")?;
        let dims: usize = dims_h.2.first().and_then(|t| t.parse().ok()).ok_or(GridError::Parse { line: dims_h.0, msg: "bad dims".into() })?;
        let lower = nums(field("lower")?)?;
        let upper = nums(field("upper")?)?;
        let res_h = field("resolution")?;
        let resolution: Vec<usize> = res_h
            .2
            .iter()
            .map(|t| t.parse().map_err(|_| GridError::Parse { line: res_h.0, msg: format!("bad resolution {t:?}") }))
            .collect::<Result<_, _>>()?;
        if lower.len() != dims || upper.len() != dims || resolution.len() != dims {
            return Err(GridError::Parse { line: dims_h.0, msg: "header arity does not match dims".into() });
        }
        let domain = GridDomain::new(DomainBox::new(lower, upper)?, resolution)?;
        let mut values = Vec::with_capacity(records.len());
        let mut mask = Vec::with_capacity(records.len());
        for (line, rec) in records {
            let toks: Vec<&str> = rec.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(GridError::Parse { line, msg: "expected `lo hi mask`".into() });
            }
            let lo: ExtReal = toks[0].parse().map_err(|e: OrderError| GridError::Parse { line, msg: e.to_string() })?;
            let hi: ExtReal = toks[1].parse().map_err(|e: OrderError| GridError::Parse { line, msg: e.to_string() })?;
            let v = ExtInterval::new(lo, hi).map_err(|e| GridError::Parse { line, msg: e.to_string() })?;
            let m = match toks[2] {
                "1" => true,
                "0" => false,
                t => return Err(GridError::Parse { line, msg: format!("mask bit must be 0 or 1, got {t:?}") }),
            };
            values.push(v);
            mask.push(m);
        }
        Self::new(domain, values, mask)
    }
}

/// One face of the skeleton: the hyperplane `x[axis] = coord` restricted to
/// the closed box `[lower, upper]` (whose `axis` extent is degenerate).
#[derive(Debug, Clone, PartialEq)]
pub struct Slab {
    pub axis: usize,
    pub coord: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Slab {
    fn covers(&self, x: &[f64], skip: usize) -> bool {
        (0..x.len()).filter(|&k| k != skip).all(|k| self.lower[k] <= x[k] && x[k] <= self.upper[k])
    }
}

/// Finite union of axis-aligned faces. Lebesgue-null by construction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SkeletonSet {
    slabs: Vec<Slab>,
}

impl SkeletonSet {
    pub fn new(slabs: Vec<Slab>) -> Self {
        Self { slabs }
    }

    pub fn slabs(&self) -> &[Slab] {
        &self.slabs
    }

    pub fn len(&self) -> usize {
        self.slabs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slabs.is_empty()
    }

    /// Every slab has zero thickness, so the union has measure zero.
    pub fn measure(&self) -> f64 {
        0.0
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.slabs.iter().any(|s| x[s.axis] == s.coord && s.covers(x, s.axis))
    }

    /// Grid mask that excludes, for each slab, the nodes nearest to it.
    ///
    /// Where exclusions from neighbouring slabs would swallow a full grid
    /// cell, one corner of that cell is re-admitted so the mask stays dense.
    pub fn grid_mask(&self, domain: &GridDomain) -> Vec<bool> {
        let mut mask = vec![true; domain.node_count()];
        let n = domain.dims();
        for slab in &self.slabs {
            let Some(i_axis) = domain.nearest_index(slab.axis, slab.coord) else { continue };
            // per-axis index ranges of nodes inside the slab's closed extent
            let mut ranges = Vec::with_capacity(n);
            for k in 0..n {
                if k == slab.axis {
                    ranges.push((i_axis, i_axis));
                    continue;
                }
                let h = domain.spacing(k);
                let lo = ((slab.lower[k] - domain.bounds.lower[k]) / h - 1.0).ceil().max(0.0) as usize;
                let hi = ((slab.upper[k] - domain.bounds.lower[k]) / h - 1.0).floor();
                if hi < 0.0 {
                    ranges.clear();
                    break;
                }
                let hi = (hi as usize).min(domain.resolution[k] - 1);
                if lo > hi {
                    ranges.clear();
                    break;
                }
                ranges.push((lo, hi));
            }
            if ranges.len() != n {
                continue;
            }
            let mut cur: Vec<usize> = ranges.iter().map(|r| r.0).collect();
            'walk: loop {
                let idx = domain.index_of(&cur);
                if slab.covers(&domain.point(idx), slab.axis) {
                    mask[idx] = false;
                }
                let mut k = n;
                loop {
                    if k == 0 {
                        break 'walk;
                    }
                    k -= 1;
                    if cur[k] < ranges[k].1 {
                        cur[k] += 1;
                        break;
                    }
                    cur[k] = ranges[k].0;
                }
            }
        }
        while let Some(cell) = domain.first_excluded_cell(&mask) {
            mask[domain.index_of(&cell)] = true;
        }
        mask
    }
}

pub fn pointwise_leq(f: &GridIntervalFunction, g: &GridIntervalFunction) -> Result<bool, GridError> {
    f.same_domain(g)?;
    Ok(f.values.iter().zip(&g.values).all(|(a, b)| a.leq(b)))
}

fn combined_mask(u: &GridIntervalFunction, v: &GridIntervalFunction) -> Result<Vec<bool>, GridError> {
    u.same_domain(v)?;
    let mask: Vec<bool> = u.mask.iter().zip(&v.mask).map(|(a, b)| *a && *b).collect();
    u.domain.check_dense(&mask)?;
    Ok(mask)
}

fn endpoints_close(a: ExtReal, b: ExtReal, tol: f64) -> bool {
    match (a, b) {
        (ExtReal::Finite(x), ExtReal::Finite(y)) => (x.get() - y.get()).abs() <= tol,
        _ => a == b,
    }
}

/// Equality off the union of both exceptional sets, exact.
pub fn nd_equivalent(u: &GridIntervalFunction, v: &GridIntervalFunction) -> Result<bool, GridError> {
    nd_equivalent_with_tolerance(u, v, 0.0)
}

/// [`nd_equivalent`] with an absolute tolerance on finite endpoints.
pub fn nd_equivalent_with_tolerance(u: &GridIntervalFunction, v: &GridIntervalFunction, tol: f64) -> Result<bool, GridError> {
    let mask = combined_mask(u, v)?;
    Ok(mask.iter().enumerate().filter(|(_, m)| **m).all(|(i, _)| {
        let (a, b) = (u.values[i], v.values[i]);
        endpoints_close(a.lo(), b.lo(), tol) && endpoints_close(a.hi(), b.hi(), tol)
    }))
}

/// `u <= v` off the union of both exceptional sets.
pub fn nd_leq(u: &GridIntervalFunction, v: &GridIntervalFunction) -> Result<bool, GridError> {
    let mask = combined_mask(u, v)?;
    Ok(mask.iter().enumerate().filter(|(_, m)| **m).all(|(i, _)| u.values[i].leq(&v.values[i])))
}

/// Shrink the reliable set of `f` to `f.mask ∧ mask`.
pub fn restrict_to_mask(f: &GridIntervalFunction, mask: &[bool]) -> Result<GridIntervalFunction, GridError> {
    f.domain.check_dense(mask)?;
    let combined: Vec<bool> = f.mask.iter().zip(mask).map(|(a, b)| *a && *b).collect();
    f.with_mask(combined)
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(n: usize) -> GridDomain {
        GridDomain::uniform(vec![0.0], vec![1.0], n).unwrap()
    }

    fn square(n: usize) -> GridDomain {
        GridDomain::uniform(vec![0.0, 0.0], vec![1.0, 1.0], n).unwrap()
    }

    fn constant(d: &GridDomain, lo: f64, hi: f64) -> GridIntervalFunction {
        GridIntervalFunction::from_fn(d.clone(), |_| ExtInterval::from_f64(lo, hi).unwrap())
    }

    #[test]
    fn domain_validation() {
        assert!(GridDomain::uniform(vec![1.0], vec![0.0], 5).is_err());
        assert!(GridDomain::uniform(vec![0.0], vec![f64::INFINITY], 5).is_err());
        assert!(GridDomain::uniform(vec![0.0], vec![1.0], 2).is_err());
        assert!(GridDomain::uniform(vec![0.0; 4], vec![1.0; 4], 3).is_err());
    }

    #[test]
    fn nodes_avoid_the_box_faces() {
        let d = line(3);
        let pts: Vec<f64> = (0..3).map(|i| d.point(i)[0]).collect();
        assert_eq!(pts, vec![0.25, 0.5, 0.75]);
        let s = square(4);
        for i in 0..s.node_count() {
            assert!(s.bounds().contains_interior(&s.point(i)));
            assert_eq!(s.index_of(&s.multi_index(i)), i);
        }
    }

    #[test]
    fn neighborhoods_are_clipped() {
        let s = square(5);
        assert_eq!(s.neighborhood(s.index_of(&[0, 0]), 1).len(), 4);
        assert_eq!(s.neighborhood(s.index_of(&[2, 2]), 1).len(), 9);
        assert_eq!(s.neighborhood(s.index_of(&[2, 2]), 0), vec![s.index_of(&[2, 2])]);
    }

    #[test]
    fn density_proxy() {
        let d = line(7);
        let mut m = vec![true; 7];
        m[3] = false;
        assert!(d.is_discretely_dense(&m));
        m[4] = false;
        assert_eq!(d.first_excluded_cell(&m), Some(vec![3]));

        let s = square(5);
        // a whole grid line is nowhere dense
        let mut m = vec![true; 25];
        for j in 0..5 {
            m[s.index_of(&[2, j])] = false;
        }
        assert!(s.is_discretely_dense(&m));
        for j in 0..5 {
            m[s.index_of(&[3, j])] = false;
        }
        assert!(!s.is_discretely_dense(&m));
    }

    #[test]
    fn pointwise_leq_examples() {
        let d = square(4);
        assert!(pointwise_leq(&constant(&d, 0.0, 0.0), &constant(&d, 1.0, 1.0)).unwrap());
        assert!(!pointwise_leq(&constant(&d, 0.0, 2.0), &constant(&d, 1.0, 1.0)).unwrap());
        let f = constant(&d, -1.0, 3.0);
        assert!(pointwise_leq(&f, &f).unwrap());
        assert_eq!(pointwise_leq(&f, &constant(&line(4), 0.0, 0.0)), Err(GridError::DomainMismatch));
    }

    fn hyperplane_mask(d: &GridDomain, i: usize) -> Vec<bool> {
        (0..d.node_count()).map(|idx| d.multi_index(idx)[0] != i).collect()
    }

    #[test]
    fn nd_equivalence_examples() {
        let d = square(9);
        let u = GridIntervalFunction::from_point_fn(d.clone(), |x| x[0] + x[1]);
        assert!(nd_equivalent(&u, &u).unwrap());

        // differ only on an excluded grid line
        let mask = hyperplane_mask(&d, 4);
        let mut vals = u.values().to_vec();
        for idx in 0..d.node_count() {
            if !mask[idx] {
                vals[idx] = ExtInterval::point(ExtReal::of(100.0));
            }
        }
        let u1 = u.with_mask(mask.clone()).unwrap();
        let v1 = u.with_values(vals).unwrap().with_mask(mask).unwrap();
        assert!(nd_equivalent(&u1, &v1).unwrap());
        assert!(!nd_equivalent(&u, &v1.with_mask(vec![true; 81]).unwrap()).unwrap());

        // differ on a full sub-box
        let w = GridIntervalFunction::from_point_fn(d.clone(), |x| if x[0] < 0.5 && x[1] < 0.5 { 7.0 } else { x[0] + x[1] });
        assert!(!nd_equivalent(&u, &w).unwrap());
    }

    #[test]
    fn nd_equivalence_rejects_fat_exception_sets() {
        let d = line(9);
        let mut ma = vec![true; 9];
        ma[4] = false;
        let mut mb = vec![true; 9];
        mb[5] = false;
        let u = constant(&d, 0.0, 0.0).with_mask(ma).unwrap();
        let v = constant(&d, 0.0, 0.0).with_mask(mb).unwrap();
        assert_eq!(nd_equivalent(&u, &v), Err(GridError::NotDense { cell: vec![4] }));
    }

    #[test]
    fn tolerance_knob() {
        let d = line(5);
        let u = GridIntervalFunction::from_point_fn(d.clone(), |x| x[0]);
        let v = GridIntervalFunction::from_point_fn(d, |x| x[0] + 1e-12);
        assert!(!nd_equivalent(&u, &v).unwrap());
        assert!(nd_equivalent_with_tolerance(&u, &v, 1e-9).unwrap());
    }

    #[test]
    fn nd_leq_examples() {
        let d = square(7);
        let u = GridIntervalFunction::from_point_fn(d.clone(), |x| x[0]);
        let v = GridIntervalFunction::from_point_fn(d.clone(), |x| x[0] + 1.0);
        assert!(nd_leq(&u, &v).unwrap());

        let mask = hyperplane_mask(&d, 3);
        let bumped: Vec<ExtInterval> = (0..d.node_count())
            .map(|i| if mask[i] { u.value(i) } else { ExtInterval::point(ExtReal::of(50.0)) })
            .collect();
        let u_bad = u.with_values(bumped).unwrap().with_mask(mask).unwrap();
        assert!(!pointwise_leq(&u_bad, &v).unwrap());
        assert!(nd_leq(&u_bad, &v).unwrap());

        let big = GridIntervalFunction::from_point_fn(d, |x| if x[0] > 0.5 && x[1] > 0.5 { 9.0 } else { x[0] });
        assert!(!nd_leq(&big, &v).unwrap());
    }

    #[test]
    fn restrict_examples() {
        let d = square(5);
        let f = GridIntervalFunction::from_point_fn(d.clone(), |x| x[1]);
        assert_eq!(restrict_to_mask(&f, &[true; 25]).unwrap(), f);
        let hm = hyperplane_mask(&d, 1);
        let g = restrict_to_mask(&f, &hm).unwrap();
        assert_eq!(g.values(), f.values());
        assert_eq!(g.mask(), &hm[..]);
        let mut fat = hm.clone();
        for idx in 0..25 {
            if d.multi_index(idx)[0] == 2 {
                fat[idx] = false;
            }
        }
        assert!(matches!(restrict_to_mask(&f, &fat), Err(GridError::NotDense { .. })));
    }

    #[test]
    fn text_format_round_trip() {
        let d = GridDomain::new(DomainBox::new(vec![-1.0, 0.0], vec![1.0, 0.3]).unwrap(), vec![3, 4]).unwrap();
        let mut mask = vec![true; 12];
        mask[5] = false;
        let f = GridIntervalFunction::from_fn(d, |x| {
            if x[0] > 0.0 {
                ExtInterval::new(ExtReal::of(x[1]), ExtReal::PosInf).unwrap()
            } else {
                ExtInterval::point(ExtReal::of(0.1 * x[0]))
            }
        })
        .with_mask(mask)
        .unwrap();
        let text = f.to_text();
        assert!(text.contains("+inf"));
        assert_eq!(GridIntervalFunction::from_text(&text).unwrap(), f);
    }

    #[test]
    fn text_format_errors_carry_line_numbers() {
        let bad = "dims 1\nlower 0\nupper 1\nresolution 3\n0 0 1\n2 1 1\n0 0 1\n";
        assert!(matches!(GridIntervalFunction::from_text(bad), Err(GridError::Parse { line: 6, .. })));
        let short = "dims 1\nlower 0\nupper 1\nresolution 3\n0 0 1\n";
        assert!(matches!(GridIntervalFunction::from_text(short), Err(GridError::LengthMismatch { .. })));
    }

    #[test]
    fn skeleton_mask_marks_nearest_nodes() {
        let d = line(9); // nodes at 0.1 .. 0.9
        let sk = SkeletonSet::new(vec![Slab { axis: 0, coord: 0.52, lower: vec![0.52], upper: vec![0.52] }]);
        let m = sk.grid_mask(&d);
        assert_eq!(m.iter().filter(|b| !**b).count(), 1);
        assert!(!m[4]);
        assert!(sk.contains(&[0.52]));
        assert!(!sk.contains(&[0.5]));
        assert_eq!(sk.measure(), 0.0);
    }

    #[test]
    fn skeleton_mask_stays_dense() {
        let d = line(9);
        let slabs = [0.41, 0.49, 0.61].iter().map(|&c| Slab { axis: 0, coord: c, lower: vec![c], upper: vec![c] }).collect();
        let m = SkeletonSet::new(slabs).grid_mask(&d);
        assert!(d.is_discretely_dense(&m));
    }

    fn point_fn(d: &GridDomain, vals: &[i8], mask: &[bool]) -> GridIntervalFunction {
        let values = vals.iter().map(|&v| ExtInterval::point(ExtReal::of(v as f64))).collect();
        GridIntervalFunction::new(d.clone(), values, mask.to_vec()).unwrap()
    }

    // 1-D masks of length 9 with no two adjacent exclusions.
    fn sparse_mask() -> impl Strategy<Value = Vec<bool>> {
        proptest::collection::vec(any::<bool>(), 9).prop_map(|mut m| {
            for i in 1..m.len() {
                if !m[i] && !m[i - 1] {
                    m[i] = true;
                }
            }
            m
        })
    }

    proptest! {
        #[test]
        fn nd_equivalence_is_an_equivalence(
            a in proptest::collection::vec(0i8..3, 9),
            b in proptest::collection::vec(0i8..3, 9),
            c in proptest::collection::vec(0i8..3, 9),
            m in sparse_mask(),
        ) {
            let d = line(9);
            let (u, v, w) = (point_fn(&d, &a, &m), point_fn(&d, &b, &m), point_fn(&d, &c, &m));
            prop_assert!(nd_equivalent(&u, &u).unwrap());
            prop_assert_eq!(nd_equivalent(&u, &v).unwrap(), nd_equivalent(&v, &u).unwrap());
            if nd_equivalent(&u, &v).unwrap() && nd_equivalent(&v, &w).unwrap() {
                prop_assert!(nd_equivalent(&u, &w).unwrap());
            }
        }

        #[test]
        fn nd_leq_is_a_preorder(
            a in proptest::collection::vec(0i8..3, 9),
            b in proptest::collection::vec(0i8..3, 9),
            c in proptest::collection::vec(0i8..3, 9),
            m in sparse_mask(),
        ) {
            let d = line(9);
            let (u, v, w) = (point_fn(&d, &a, &m), point_fn(&d, &b, &m), point_fn(&d, &c, &m));
            prop_assert!(nd_leq(&u, &u).unwrap());
            if nd_leq(&u, &v).unwrap() && nd_leq(&v, &w).unwrap() {
                prop_assert!(nd_leq(&u, &w).unwrap());
            }
            if nd_leq(&u, &v).unwrap() && nd_leq(&v, &u).unwrap() {
                prop_assert!(nd_equivalent(&u, &v).unwrap());
            }
        }

        #[test]
        fn pointwise_leq_on_points_is_function_order(
            a in proptest::collection::vec(-3i8..3, 9),
            b in proptest::collection::vec(-3i8..3, 9),
        ) {
            let d = line(9);
            let all = vec![true; 9];
            let expected = a.iter().zip(&b).all(|(x, y)| x <= y);
            prop_assert_eq!(pointwise_leq(&point_fn(&d, &a, &all), &point_fn(&d, &b, &all)).unwrap(), expected);
        }
    }
}
