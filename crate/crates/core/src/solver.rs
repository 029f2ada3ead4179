//! Certified one-sided approximate solutions: local jet solving, box-wise
//! assembly into piecewise polynomials, sampling audits, and ε-refinement
//! with assimilation onto grids.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::baire::{assimilate_f0, is_h_continuous, BaireError};
use crate::grid::{DomainBox, GridDomain, GridError, GridIntervalFunction, SkeletonSet, Slab};
use crate::order::ExtInterval;
use crate::pde::{
    check_condition_23, probe_lattice, residual, Jet, MultiIndexSet, PdeError, PdeProblem, Polynomial, DEFAULT_PROBE_BUDGET,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Pde(#[from] PdeError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Baire(#[from] BaireError),
    #[error("eps must be at least {MIN_EPS:e}, got {0}")]
    EpsTooSmall(f64),
    #[error("at least one refinement level is required")]
    NoLevels,
    #[error("could not bracket a root of F(x, .) = {target} at x = {point:?}")]
    BracketFailure { point: Vec<f64>, target: f64 },
    #[error("patch radius fell to {delta:e} at x = {point:?}")]
    DeltaUnderflow { point: Vec<f64>, delta: f64 },
    #[error("box subdivision exceeded depth {MAX_DEPTH} near x = {point:?}")]
    DepthExceeded { point: Vec<f64> },
    #[error("f(x) is not interior to the range of F(x, .) at x = {point:?}")]
    ConditionFailed { point: Vec<f64> },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub const MIN_EPS: f64 = 1e-10;
pub const MAX_DEPTH: usize = 20;
/// Fraction of ε kept clear of both certificate bounds during construction.
pub const CONSTRUCTION_MARGIN: f64 = 1.0 / 64.0;

/// Which one-sided inequality a solution satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// `f - ε <= T U <= f`
    Lower,
    /// `f <= T U <= f + ε`
    Upper,
}

impl Side {
    pub fn target(self, rhs: f64, eps: f64) -> f64 {
        match self {
            Side::Lower => rhs - eps / 2.0,
            Side::Upper => rhs + eps / 2.0,
        }
    }

    /// Certified residual band.
    pub fn band(self, eps: f64) -> (f64, f64) {
        match self {
            Side::Lower => (-eps, 0.0),
            Side::Upper => (0.0, eps),
        }
    }

    fn strict_band(self, eps: f64) -> (f64, f64) {
        let (lo, hi) = self.band(eps);
        (lo + eps * CONSTRUCTION_MARGIN, hi - eps * CONSTRUCTION_MARGIN)
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Lower => "lower",
            Side::Upper => "upper",
        })
    }
}

impl FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lower" => Ok(Side::Lower),
            "upper" => Ok(Side::Upper),
            _ => Err(format!("side must be lower or upper, got {s:?}")),
        }
    }
}

fn check_eps(eps: f64) -> Result<(), SolverError> {
    if eps.is_finite() && eps >= MIN_EPS {
        Ok(())
    } else {
        Err(SolverError::EpsTooSmall(eps))
    }
}

const BRACKET_STEPS: i32 = 48;
const BISECTION_STEPS: usize = 400;
const MULTI_STARTS: usize = 64;
const MULTI_START_SEED: u64 = 0x6a65_7473;

fn tolerance(target: f64) -> f64 {
    1e-10 * (1.0 + target.abs())
}

/// Solve `F(x0, base + t e_axis) = target` by doubling brackets and bisection.
fn solve_along(problem: &PdeProblem, x0: &[f64], target: f64, base: &[f64], axis: usize) -> Result<Option<Jet>, PdeError> {
    let tol = tolerance(target);
    let mut jet = base.to_vec();
    let g = |t: f64, jet: &mut Vec<f64>| -> Result<f64, PdeError> {
        jet[axis] = base[axis] + t;
        Ok(problem.operator_at(x0, jet)? - target)
    };
    let g0 = g(0.0, &mut jet)?;
    if g0.abs() <= tol {
        jet[axis] = base[axis];
        return Ok(Some(Jet(jet)));
    }
    let mut bracket = None;
    let (mut prev_pos, mut prev_neg) = ((0.0, g0), (0.0, g0));
    'scan: for j in -4..BRACKET_STEPS {
        let step = 2f64.powi(j);
        for (prev, t) in [(&mut prev_pos, step), (&mut prev_neg, -step)] {
            let Ok(v) = g(t, &mut jet) else { continue };
            if v.abs() <= tol {
                return Ok(Some(Jet(jet)));
            }
            if v.signum() != prev.1.signum() {
                bracket = Some((prev.0, prev.1, t));
                break 'scan;
            }
            *prev = (t, v);
        }
    }
    let Some((mut a, ga, mut b)) = bracket else { return Ok(None) };
    let sa = ga.signum();
    let mut best = (f64::INFINITY, 0.0);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (a + b);
        let v = g(mid, &mut jet)?;
        if v.abs() < best.0 {
            best = (v.abs(), mid);
        }
        if v.abs() <= tol || mid == a || mid == b {
            break;
        }
        if v.signum() == sa {
            a = mid;
        } else {
            b = mid;
        }
    }
    if best.0 <= tol {
        jet[axis] = base[axis] + best.1;
        Ok(Some(Jet(jet)))
    } else {
        Ok(None)
    }
}

/// Find a jet `ξ` with `|F(x0, ξ) - target| <= 1e-10 (1 + |target|)`.
///
/// The pivot is the highest-order pure derivative along the first axis with
/// every other entry zero. Other coordinates are tried next (highest order
/// first), then a seeded multi-start search.
pub fn jet_solve(problem: &PdeProblem, x0: &[f64], target: f64) -> Result<Jet, SolverError> {
    let set = problem.jets();
    let zero = vec![0.0; set.len()];
    let pivot = set.pivot();
    let mut order: Vec<usize> = vec![pivot];
    order.extend((0..set.len()).rev().filter(|&i| i != pivot));
    for &axis in &order {
        if let Some(jet) = solve_along(problem, x0, target, &zero, axis)? {
            return Ok(jet);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(MULTI_START_SEED);
    for start in 0..MULTI_STARTS {
        let k = 2f64.powi((start / 8) as i32);
        let base: Vec<f64> = (0..set.len()).map(|_| rng.gen_range(-k..=k)).collect();
        let axis = rng.gen_range(0..set.len());
        if let Ok(Some(jet)) = solve_along(problem, x0, target, &base, axis) {
            return Ok(jet);
        }
    }
    Err(SolverError::BracketFailure { point: x0.to_vec(), target })
}

/// Points per axis of the certification lattice (`k^n >= 27 · 3^n`).
pub fn lattice_points_per_axis(dims: usize) -> usize {
    match dims {
        1 => 81,
        2 => 16,
        _ => 9,
    }
}

fn closed_lattice(region: &DomainBox) -> Vec<Vec<f64>> {
    let n = region.dims();
    let k = lattice_points_per_axis(n);
    let total = k.pow(n as u32);
    (0..total)
        .map(|mut idx| {
            let mut x = vec![0.0; n];
            for a in (0..n).rev() {
                let i = idx % k;
                idx /= k;
                x[a] = region.lower()[a] + region.side(a) * i as f64 / (k - 1) as f64;
            }
            x
        })
        .collect()
}

/// Residual range of `p` on the lattice of `region`, if it stays inside the
/// construction band for `side`.
fn certify(problem: &PdeProblem, p: &Polynomial, region: &DomainBox, eps: f64, side: Side) -> Option<(f64, f64)> {
    let (lo, hi) = side.strict_band(eps);
    let mut range = (f64::INFINITY, f64::NEG_INFINITY);
    for x in closed_lattice(region) {
        let r = residual(problem, p, &x).ok()?;
        if !(lo..=hi).contains(&r) {
            return None;
        }
        range = (range.0.min(r), range.1.max(r));
    }
    Some(range)
}

fn clipped_cube(domain: &DomainBox, x0: &[f64], delta: f64) -> DomainBox {
    let lower = x0.iter().zip(domain.lower()).map(|(c, l)| (c - delta).max(*l)).collect();
    let upper = x0.iter().zip(domain.upper()).map(|(c, u)| (c + delta).min(*u)).collect();
    DomainBox::new(lower, upper).expect("cube around an interior point")
}

/// A polynomial certified on `[x0 - δ, x0 + δ]^n ∩ Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPatch {
    pub center: Vec<f64>,
    pub delta: f64,
    pub poly: Polynomial,
    pub side: Side,
    pub residual: (f64, f64),
}

fn patch_polynomial(problem: &PdeProblem, x0: &[f64], eps: f64, side: Side) -> Result<Polynomial, SolverError> {
    let target = side.target(problem.rhs_at(x0)?, eps);
    let jet = jet_solve(problem, x0, target)?;
    Ok(Polynomial::from_jet(x0.to_vec(), problem.jets(), &jet)?)
}

/// Local solution at `x0`, with `δ` halved from half the domain diameter
/// until the side's inequality holds on a lattice of the δ-cube.
pub fn local_patch(problem: &PdeProblem, x0: &[f64], eps: f64, side: Side) -> Result<LocalPatch, SolverError> {
    check_eps(eps)?;
    let domain = problem.domain();
    let poly = patch_polynomial(problem, x0, eps, side)?;
    let floor = 1e-8 * domain.diagonal();
    let mut delta = 0.5 * domain.diagonal();
    loop {
        let region = clipped_cube(domain, x0, delta);
        if let Some(residual) = certify(problem, &poly, &region, eps, side) {
            return Ok(LocalPatch { center: x0.to_vec(), delta, poly, side, residual });
        }
        delta *= 0.5;
        if delta < floor {
            return Err(SolverError::DeltaUnderflow { point: x0.to_vec(), delta });
        }
    }
}

/// One box of a partition with the polynomial anchored at its center.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxPiece {
    pub bounds: DomainBox,
    /// Half of the longest side; the patch is certified on the whole box.
    pub delta: f64,
    pub poly: Polynomial,
    /// Residual range seen on the construction lattice.
    pub residual: (f64, f64),
}

impl BoxPiece {
    pub fn contains_open(&self, x: &[f64]) -> bool {
        self.bounds.contains_interior(x)
    }
}

/// `U_ε`: a polynomial on the interior of each box, undefined on the faces.
#[derive(Debug, Clone)]
pub struct PiecewiseSolution {
    problem: PdeProblem,
    eps: f64,
    side: Side,
    boxes: Vec<BoxPiece>,
    skeleton: SkeletonSet,
}

fn skeleton_of(domain: &DomainBox, boxes: &[BoxPiece]) -> SkeletonSet {
    let mut slabs: Vec<Slab> = Vec::new();
    for b in boxes {
        for axis in 0..domain.dims() {
            for coord in [b.bounds.lower()[axis], b.bounds.upper()[axis]] {
                if coord == domain.lower()[axis] || coord == domain.upper()[axis] {
                    continue;
                }
                let mut lower = b.bounds.lower().to_vec();
                let mut upper = b.bounds.upper().to_vec();
                lower[axis] = coord;
                upper[axis] = coord;
                let slab = Slab { axis, coord, lower, upper };
                if !slabs.contains(&slab) {
                    slabs.push(slab);
                }
            }
        }
    }
    SkeletonSet::new(slabs)
}

impl PiecewiseSolution {
    pub fn from_parts(problem: PdeProblem, eps: f64, side: Side, boxes: Vec<BoxPiece>) -> Self {
        let skeleton = skeleton_of(problem.domain(), &boxes);
        Self { problem, eps, side, boxes, skeleton }
    }

    pub fn problem(&self) -> &PdeProblem {
        &self.problem
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn boxes(&self) -> &[BoxPiece] {
        &self.boxes
    }

    pub fn boxes_mut(&mut self) -> &mut [BoxPiece] {
        &mut self.boxes
    }

    pub fn skeleton(&self) -> &SkeletonSet {
        &self.skeleton
    }

    /// Index of the box whose open interior holds `x`.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        self.boxes.iter().position(|b| b.contains_open(x))
    }

    fn locate_closed(&self, x: &[f64]) -> Option<usize> {
        self.locate(x).or_else(|| self.boxes.iter().position(|b| b.bounds.contains(x)))
    }

    /// `U_ε(x)`, or `None` on the skeleton and outside the domain.
    pub fn eval(&self, x: &[f64]) -> Option<f64> {
        self.locate(x).map(|i| self.boxes[i].poly.eval(x))
    }

    /// `T(x, D) U_ε (x) - f(x)` off the skeleton.
    pub fn residual_at(&self, x: &[f64]) -> Option<Result<f64, PdeError>> {
        self.locate(x).map(|i| residual(&self.problem, &self.boxes[i].poly, x))
    }

    /// Interiors are pairwise disjoint and the volumes add up to the domain.
    pub fn partition_is_sound(&self) -> bool {
        let vol = |b: &DomainBox| (0..b.dims()).map(|k| b.side(k)).product::<f64>();
        let total: f64 = self.boxes.iter().map(|b| vol(&b.bounds)).sum();
        let whole = vol(self.problem.domain());
        let disjoint = self.boxes.iter().enumerate().all(|(i, a)| {
            self.boxes[i + 1..].iter().all(|b| {
                (0..a.bounds.dims()).any(|k| a.bounds.upper()[k] <= b.bounds.lower()[k] || b.bounds.upper()[k] <= a.bounds.lower()[k])
            })
        });
        disjoint && (total - whole).abs() <= 1e-9 * whole
    }

    pub fn to_text(&self) -> String {
        let dom = self.problem.domain();
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        let mut out = String::new();
        out.push_str("# ocm piecewise solution\n");
        out.push_str("# certificate: sampled residuals, not interval-rigorous\n");
        out.push_str("version 1\n");
        out.push_str(&format!("dims {}\n", dom.dims()));
        out.push_str(&format!("eps {:?}\n", self.eps));
        out.push_str(&format!("side {}\n", self.side));
        out.push_str(&format!("domain {} {}\n", join(dom.lower()), join(dom.upper())));
        out.push_str(&format!("boxes {}\n", self.boxes.len()));
        for b in &self.boxes {
            out.push_str(&format!(
                "box {} {} {:?} {} {} {} {:?} {:?}\n",
                join(b.bounds.lower()),
                join(b.bounds.upper()),
                b.delta,
                b.poly.degree(),
                join(b.poly.center()),
                join(b.poly.coeffs()),
                b.residual.0,
                b.residual.1
            ));
        }
        out
    }

    pub fn from_text(text: &str, problem: &PdeProblem) -> Result<Self, SolverError> {
        let perr = |line: usize, msg: &str| SolverError::Parse { line, msg: msg.to_string() };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut header = |key: &str| -> Result<(usize, Vec<String>), SolverError> {
            let (no, l) = lines.next().ok_or_else(|| perr(0, &format!("missing {key}")))?;
            let mut toks = l.split_whitespace();
            if toks.next() != Some(key) {
                return Err(perr(no, &format!("expected {key}")));
            }
            Ok((no, toks.map(str::to_string).collect()))
        };
        let num = |no: usize, s: &str| s.parse::<f64>().map_err(|_| perr(no, &format!("bad number {s:?}")));
        let (no, v) = header("version")?;
        if v != ["1"] {
            return Err(perr(no, "unsupported version"));
        }
        let (no, v) = header("dims")?;
        let dims: usize = v.first().and_then(|s| s.parse().ok()).ok_or_else(|| perr(no, "bad dims"))?;
        if dims != problem.dims() {
            return Err(perr(no, "dimension differs from the problem"));
        }
        let (no, v) = header("eps")?;
        let eps = num(no, v.first().map(String::as_str).unwrap_or(""))?;
        let (no, v) = header("side")?;
        let side: Side = v.first().map(String::as_str).unwrap_or("").parse().map_err(|e: String| perr(no, &e))?;
        let (no, v) = header("domain")?;
        let corners = v.iter().map(|s| num(no, s)).collect::<Result<Vec<_>, _>>()?;
        if corners.len() != 2 * dims || corners[..dims] != *problem.domain().lower() || corners[dims..] != *problem.domain().upper() {
            return Err(perr(no, "domain differs from the problem"));
        }
        let (no, v) = header("boxes")?;
        let count: usize = v.first().and_then(|s| s.parse().ok()).ok_or_else(|| perr(no, "bad box count"))?;
        let mut boxes = Vec::with_capacity(count);
        for _ in 0..count {
            let (no, v) = header("box")?;
            let mut it = v.iter();
            let mut take = |k: usize| -> Result<Vec<f64>, SolverError> {
                (0..k).map(|_| it.next().ok_or_else(|| perr(no, "truncated box record")).and_then(|s| num(no, s))).collect()
            };
            let lower = take(dims)?;
            let upper = take(dims)?;
            let delta = take(1)?[0];
            let degree = take(1)?[0];
            if degree < 0.0 || degree.fract() != 0.0 || degree > 16.0 {
                return Err(perr(no, "bad degree"));
            }
            let center = take(dims)?;
            let coeffs = take(MultiIndexSet::new(dims, degree as u32).len())?;
            let res = take(2)?;
            let bounds = DomainBox::new(lower, upper).map_err(|e| perr(no, &e.to_string()))?;
            let poly = Polynomial::new(center, degree as u32, coeffs).map_err(|e| perr(no, &e.to_string()))?;
            boxes.push(BoxPiece { bounds, delta, poly, residual: (res[0], res[1]) });
        }
        if let Some((no, _)) = lines.next() {
            return Err(perr(no, "unexpected trailing content"));
        }
        Ok(Self::from_parts(problem.clone(), eps, side, boxes))
    }
}

fn bisect(b: &DomainBox) -> Vec<DomainBox> {
    let n = b.dims();
    let mid = b.center();
    (0..1usize << n)
        .map(|mask| {
            let mut lower = b.lower().to_vec();
            let mut upper = b.upper().to_vec();
            for k in 0..n {
                if mask >> (n - 1 - k) & 1 == 1 {
                    lower[k] = mid[k];
                } else {
                    upper[k] = mid[k];
                }
            }
            DomainBox::new(lower, upper).expect("halves of a valid box")
        })
        .collect()
}

enum BoxOutcome {
    Accepted(BoxPiece),
    Split(Vec<DomainBox>),
}

/// Condition check on a small probe lattice before assembly.
pub fn precheck_condition(problem: &PdeProblem) -> Result<(), SolverError> {
    let pts = probe_lattice(problem.domain(), 5);
    for c in check_condition_23(problem, &pts, DEFAULT_PROBE_BUDGET)? {
        if !c.holds {
            return Err(SolverError::ConditionFailed { point: c.point });
        }
    }
    Ok(())
}

/// Recursive bisection until the center patch of every box certifies the
/// whole closed box. The skeleton is the union of interior box faces.
pub fn assemble_global(problem: &PdeProblem, eps: f64, side: Side) -> Result<PiecewiseSolution, SolverError> {
    check_eps(eps)?;
    precheck_condition(problem)?;
    let mut pending = vec![problem.domain().clone()];
    let mut accepted = Vec::new();
    for depth in 0..=MAX_DEPTH {
        if pending.is_empty() {
            break;
        }
        let outcomes: Vec<Result<BoxOutcome, SolverError>> = pending
            .par_iter()
            .map(|b| {
                let c = b.center();
                let poly = patch_polynomial(problem, &c, eps, side)?;
                match certify(problem, &poly, b, eps, side) {
                    Some(res) => {
                        let delta = (0..b.dims()).map(|k| 0.5 * b.side(k)).fold(0.0, f64::max);
                        Ok(BoxOutcome::Accepted(BoxPiece { bounds: b.clone(), delta, poly, residual: res }))
                    }
                    None if depth == MAX_DEPTH => Err(SolverError::DepthExceeded { point: c }),
                    None => Ok(BoxOutcome::Split(bisect(b))),
                }
            })
            .collect();
        pending = Vec::new();
        for o in outcomes {
            match o? {
                BoxOutcome::Accepted(piece) => accepted.push(piece),
                BoxOutcome::Split(children) => pending.extend(children),
            }
        }
    }
    accepted.sort_by(|a, b| a.bounds.lower().partial_cmp(b.bounds.lower()).expect("finite corners"));
    Ok(PiecewiseSolution::from_parts(problem.clone(), eps, side, accepted))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub box_index: usize,
    pub point: Vec<f64>,
    /// NaN when the evaluator failed.
    pub residual: f64,
}

/// Outcome of a fresh-sample audit.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub eps: f64,
    pub side: Side,
    pub samples: usize,
    pub min_residual: f64,
    pub max_residual: f64,
    pub per_box: Vec<(f64, f64)>,
    pub violations: Vec<Violation>,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn sup_abs_residual(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.min_residual.abs().max(self.max_residual.abs())
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# ocm certificate report\n");
        out.push_str("# sampled residuals at fresh points off the skeleton; not interval-rigorous\n");
        out.push_str(&format!("side {}\neps {:?}\nsamples {}\n", self.side, self.eps, self.samples));
        out.push_str(&format!("min_residual {:?}\nmax_residual {:?}\n", self.min_residual, self.max_residual));
        out.push_str(&format!("status {}\n", if self.passed() { "ok" } else { "violated" }));
        for (i, (lo, hi)) in self.per_box.iter().enumerate() {
            out.push_str(&format!("box {i} {lo:?} {hi:?}\n"));
        }
        for v in &self.violations {
            let pt = v.point.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
            out.push_str(&format!("violation box {} at {} residual {:?}\n", v.box_index, pt, v.residual));
        }
        out
    }
}

const MAX_REPORTED_VIOLATIONS: usize = 64;

/// Audit `T U - f` at fresh uniform samples in every open box.
pub fn verify_certificate(sol: &PiecewiseSolution, samples_per_box: usize, seed: u64) -> CertificateReport {
    let (lo, hi) = sol.side.band(sol.eps);
    let per_box: Vec<((f64, f64), Vec<Violation>)> = sol
        .boxes
        .par_iter()
        .enumerate()
        .map(|(bi, b)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (bi as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let n = b.bounds.dims();
            let mut range = (f64::INFINITY, f64::NEG_INFINITY);
            let mut bad = Vec::new();
            let mut x = vec![0.0; n];
            for _ in 0..samples_per_box {
                loop {
                    for (k, xk) in x.iter_mut().enumerate() {
                        *xk = b.bounds.lower()[k] + b.bounds.side(k) * rng.gen::<f64>();
                    }
                    if b.bounds.contains_interior(&x) {
                        break;
                    }
                }
                let r = residual(&sol.problem, &b.poly, &x).unwrap_or(f64::NAN);
                if r.is_nan() || r < lo || r > hi {
                    bad.push(Violation { box_index: bi, point: x.clone(), residual: r });
                }
                if !r.is_nan() {
                    range = (range.0.min(r), range.1.max(r));
                }
            }
            (range, bad)
        })
        .collect();
    let mut report = CertificateReport {
        eps: sol.eps,
        side: sol.side,
        samples: samples_per_box * sol.boxes.len(),
        min_residual: f64::INFINITY,
        max_residual: f64::NEG_INFINITY,
        per_box: Vec::with_capacity(per_box.len()),
        violations: Vec::new(),
    };
    for (range, bad) in per_box {
        report.min_residual = report.min_residual.min(range.0);
        report.max_residual = report.max_residual.max(range.1);
        report.per_box.push(range);
        let room = MAX_REPORTED_VIOLATIONS.saturating_sub(report.violations.len());
        report.violations.extend(bad.into_iter().take(room));
    }
    if report.samples == 0 {
        report.min_residual = 0.0;
        report.max_residual = 0.0;
    }
    report
}

/// `U_ε`, `T U_ε` and the residual sampled on a grid. Nodes nearest to the
/// skeleton are masked out.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSamples {
    pub u: GridIntervalFunction,
    pub image: GridIntervalFunction,
    pub residual: GridIntervalFunction,
}

pub fn sample_on_grid(sol: &PiecewiseSolution, grid: &GridDomain) -> Result<GridSamples, SolverError> {
    let mask = sol.skeleton.grid_mask(grid);
    let n = grid.node_count();
    let mut u = Vec::with_capacity(n);
    let mut image = Vec::with_capacity(n);
    let mut res = Vec::with_capacity(n);
    for idx in 0..n {
        let x = grid.point(idx);
        let bi = sol.locate_closed(&x).ok_or(SolverError::Grid(GridError::DomainMismatch))?;
        let p = &sol.boxes[bi].poly;
        let r = residual(&sol.problem, p, &x)?;
        let f = sol.problem.rhs_at(&x)?;
        let point = |v: f64| ExtInterval::from_f64(v, v).expect("finite sample");
        u.push(point(p.eval(&x)));
        image.push(point(r + f));
        res.push(point(r));
    }
    Ok(GridSamples {
        u: GridIntervalFunction::new(grid.clone(), u, mask.clone())?,
        image: GridIntervalFunction::new(grid.clone(), image, mask.clone())?,
        residual: GridIntervalFunction::new(grid.clone(), res, mask)?,
    })
}

/// One side at one refinement level.
#[derive(Debug, Clone)]
pub struct LevelSide {
    pub solution: PiecewiseSolution,
    pub report: CertificateReport,
    pub residual_envelope: GridIntervalFunction,
    pub u_envelope: GridIntervalFunction,
    pub residual_h_continuous: bool,
    pub assimilated_max_width: f64,
}

#[derive(Debug, Clone)]
pub struct RefinementLevel {
    pub level: usize,
    pub eps: f64,
    pub lower: LevelSide,
    pub upper: LevelSide,
}

#[derive(Debug, Clone)]
pub struct RefinementRun {
    pub eps_sequence: Vec<f64>,
    pub levels: Vec<RefinementLevel>,
}

pub const CSV_HEADER: &str = "level,side,eps,boxes,min_residual,max_residual,assimilated_max_width";

impl RefinementRun {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for l in &self.levels {
            for s in [&l.lower, &l.upper] {
                out.push_str(&format!(
                    "{},{},{:?},{},{:?},{:?},{:?}\n",
                    l.level,
                    s.solution.side(),
                    l.eps,
                    s.solution.boxes().len(),
                    s.report.min_residual,
                    s.report.max_residual,
                    s.assimilated_max_width
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions {
    pub samples_per_box: usize,
    pub grid_points_per_axis: usize,
    pub seed: u64,
}

impl RefineOptions {
    pub fn for_dims(dims: usize) -> Self {
        let grid_points_per_axis = match dims {
            1 => 201,
            2 => 41,
            _ => 15,
        };
        Self { samples_per_box: 64, grid_points_per_axis, seed: 1 }
    }
}

fn level_side(problem: &PdeProblem, eps: f64, side: Side, grid: &GridDomain, opts: &RefineOptions) -> Result<LevelSide, SolverError> {
    let solution = assemble_global(problem, eps, side)?;
    let report = verify_certificate(&solution, opts.samples_per_box, opts.seed);
    let samples = sample_on_grid(&solution, grid)?;
    let residual_envelope = assimilate_f0(&samples.residual)?;
    let u_envelope = assimilate_f0(&samples.u)?;
    let assimilated_max_width = u_envelope.values().iter().map(|v| v.width().to_f64()).fold(0.0, f64::max);
    let residual_h_continuous = is_h_continuous(&residual_envelope);
    Ok(LevelSide { solution, report, residual_envelope, u_envelope, residual_h_continuous, assimilated_max_width })
}

/// Lower and upper solutions for `ε_k = ε₀ / 2^k`, `k < levels`, each audited
/// and assimilated on a grid.
pub fn refine(problem: &PdeProblem, eps0: f64, levels: usize, opts: &RefineOptions) -> Result<RefinementRun, SolverError> {
    if levels == 0 {
        return Err(SolverError::NoLevels);
    }
    let eps_sequence: Vec<f64> = (0..levels).map(|k| eps0 / 2f64.powi(k as i32)).collect();
    for &e in &eps_sequence {
        check_eps(e)?;
    }
    let dom = problem.domain();
    let grid = GridDomain::uniform(dom.lower().to_vec(), dom.upper().to_vec(), opts.grid_points_per_axis)?;
    let mut out = Vec::with_capacity(levels);
    for (level, &eps) in eps_sequence.iter().enumerate() {
        let lower = level_side(problem, eps, Side::Lower, &grid, opts)?;
        let upper = level_side(problem, eps, Side::Upper, &grid, opts)?;
        out.push(RefinementLevel { level, eps, lower, upper });
    }
    Ok(RefinementRun { eps_sequence, levels: out })
}

/// A polynomial with `T P ≡ f` as a one-box solution.
pub fn classical_solution(problem: &PdeProblem, poly: Polynomial, eps: f64, side: Side) -> PiecewiseSolution {
    let dom = problem.domain().clone();
    let delta = (0..dom.dims()).map(|k| 0.5 * dom.side(k)).fold(0.0, f64::max);
    PiecewiseSolution::from_parts(problem.clone(), eps, side, vec![BoxPiece { bounds: dom, delta, poly, residual: (0.0, 0.0) }])
}
