//! Nonlinear PDE problems `F(x, D^p u(x) : |p| <= m) = f(x)` on a box,
//! exact Taylor-polynomial calculus, and probes of the operator's range.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expr::{Expr, ExprError};
use crate::grid::{DomainBox, GridError};
use crate::order::{ExtInterval, ExtReal};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PdeError {
    #[error("evaluator returned {value} at x = {point:?}")]
    EvaluatorFailure { point: Vec<f64>, value: f64 },
    #[error("line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("jet has {got} entries, expected {expected}")]
    JetLength { expected: usize, got: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("range probe budget must be at least 1")]
    EmptyBudget,
}

/// All multi-indices `p ∈ ℕⁿ` with `|p| <= m`, in graded-lex order
/// (by total degree, then lexicographically with the first axis highest).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiIndexSet {
    dims: usize,
    order: u32,
    indices: Vec<Vec<u32>>,
}

fn compositions(total: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if parts == 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first);
        compositions(total - first, parts - 1, prefix, out);
        prefix.pop();
    }
}

impl MultiIndexSet {
    pub fn new(dims: usize, order: u32) -> Self {
        assert!(dims >= 1, "multi-indices need at least one axis");
        let mut indices = Vec::new();
        for d in 0..=order {
            compositions(d, dims, &mut Vec::new(), &mut indices);
        }
        Self { dims, order, indices }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<u32>] {
        &self.indices
    }

    pub fn get(&self, i: usize) -> &[u32] {
        &self.indices[i]
    }

    pub fn position(&self, p: &[u32]) -> Option<usize> {
        self.indices.iter().position(|q| q == p)
    }

    /// `D^{(m, 0, …, 0)}`, the highest-order pure derivative along axis 0.
    pub fn pivot(&self) -> usize {
        let mut p = vec![0; self.dims];
        p[0] = self.order;
        self.position(&p).expect("pure derivative is in the set")
    }
}

/// Values `ξ_p` indexed like a [`MultiIndexSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct Jet(pub Vec<f64>);

impl Jet {
    pub fn zeros(set: &MultiIndexSet) -> Self {
        Jet(vec![0.0; set.len()])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn falling(p: u32, q: u32) -> f64 {
    (0..q).map(|i| f64::from(p - i)).product()
}

/// Polynomial in Taylor form `P(x) = Σ c_p (x - center)^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    center: Vec<f64>,
    terms: MultiIndexSet,
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(center: Vec<f64>, degree: u32, coeffs: Vec<f64>) -> Result<Self, PdeError> {
        let terms = MultiIndexSet::new(center.len(), degree);
        if coeffs.len() != terms.len() {
            return Err(PdeError::JetLength { expected: terms.len(), got: coeffs.len() });
        }
        Ok(Self { center, terms, coeffs })
    }

    /// The polynomial whose derivatives at `center` are the jet entries.
    pub fn from_jet(center: Vec<f64>, set: &MultiIndexSet, jet: &Jet) -> Result<Self, PdeError> {
        if jet.0.len() != set.len() {
            return Err(PdeError::JetLength { expected: set.len(), got: jet.0.len() });
        }
        let coeffs = set.indices().iter().zip(&jet.0).map(|(p, v)| v / p.iter().map(|&k| factorial(k)).product::<f64>()).collect();
        Ok(Self { center, terms: set.clone(), coeffs })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn degree(&self) -> u32 {
        self.terms.order()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn terms(&self) -> &MultiIndexSet {
        &self.terms
    }

    /// `D^q P(x)`, exact up to floating-point rounding.
    pub fn derivative(&self, q: &[u32], x: &[f64]) -> f64 {
        let dx: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        let mut acc = 0.0;
        for (p, c) in self.terms.indices().iter().zip(&self.coeffs) {
            if *c == 0.0 || p.iter().zip(q).any(|(pk, qk)| pk < qk) {
                continue;
            }
            let mut term = *c;
            for k in 0..p.len() {
                term *= falling(p[k], q[k]) * dx[k].powi((p[k] - q[k]) as i32);
            }
            acc += term;
        }
        acc
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.derivative(&vec![0; self.center.len()], x)
    }

    pub fn jet_at(&self, set: &MultiIndexSet, x: &[f64]) -> Jet {
        Jet(set.indices().iter().map(|q| self.derivative(q, x)).collect())
    }
}

pub fn poly_jet_at(p: &Polynomial, set: &MultiIndexSet, x: &[f64]) -> Jet {
    p.jet_at(set, x)
}

pub type OperatorFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;
pub type RhsFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A problem `T(x, D) U = f` on a box. Evaluators must be pure.
#[derive(Clone)]
pub struct PdeProblem {
    domain: DomainBox,
    jets: MultiIndexSet,
    operator: Arc<OperatorFn>,
    rhs: Arc<RhsFn>,
    source: Option<(String, String)>,
}

impl fmt::Debug for PdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PdeProblem")
            .field("domain", &self.domain)
            .field("order", &self.jets.order())
            .field("source", &self.source)
            .finish_non_exhaustive()
    }
}

impl PdeProblem {
    pub fn new(
        domain: DomainBox,
        order: u32,
        operator: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        rhs: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let jets = MultiIndexSet::new(domain.dims(), order);
        Self { domain, jets, operator: Arc::new(operator), rhs: Arc::new(rhs), source: None }
    }

    /// Build from catalog expressions for `F` and `f`.
    pub fn from_expressions(domain: DomainBox, order: u32, operator: &str, rhs: &str) -> Result<Self, ExprError> {
        let jets = MultiIndexSet::new(domain.dims(), order);
        let op = Expr::parse(operator, domain.dims(), Some(&jets))?;
        let f = Expr::parse(rhs, domain.dims(), None)?;
        Ok(Self {
            domain,
            jets,
            operator: Arc::new(move |x: &[f64], jet: &[f64]| op.eval(x, jet)),
            rhs: Arc::new(move |x: &[f64]| f.eval(x, &[])),
            source: Some((operator.to_string(), rhs.to_string())),
        })
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn dims(&self) -> usize {
        self.domain.dims()
    }

    pub fn jets(&self) -> &MultiIndexSet {
        &self.jets
    }

    pub fn order(&self) -> u32 {
        self.jets.order()
    }

    /// `(F, f)` expression text, when the problem came from expressions.
    pub fn source(&self) -> Option<(&str, &str)> {
        self.source.as_ref().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    /// `F(x, ξ)`; non-finite results are errors.
    pub fn operator_at(&self, x: &[f64], jet: &[f64]) -> Result<f64, PdeError> {
        if jet.len() != self.jets.len() {
            return Err(PdeError::JetLength { expected: self.jets.len(), got: jet.len() });
        }
        let v = (self.operator)(x, jet);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(PdeError::EvaluatorFailure { point: x.to_vec(), value: v })
        }
    }

    pub fn rhs_at(&self, x: &[f64]) -> Result<f64, PdeError> {
        let v = (self.rhs)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(PdeError::EvaluatorFailure { point: x.to_vec(), value: v })
        }
    }

    /// Parse the key-value problem format:
    ///
    /// ```text
    /// dimension = 1
    /// order = 1
    /// lower = 0
    /// upper = 2*pi
    /// F = xi_1
    /// f = cos(x)
    /// ```
    ///
    /// Corner values are constant expressions, separated by whitespace or
    /// commas when there are several axes.
    pub fn from_text(text: &str) -> Result<Self, PdeError> {
        let mut fields: Vec<(&str, usize, usize, &str)> = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default();
            if line.trim().is_empty() {
                continue;
            }
            let Some(eq) = line.find('=') else {
                let column = line.find(|c: char| !c.is_whitespace()).unwrap_or(0) + 1;
                return Err(PdeError::Parse { line: no + 1, column, msg: "expected `key = value`".into() });
            };
            let key = line[..eq].trim();
            let value = &line[eq + 1..];
            let lead = value.len() - value.trim_start().len();
            let column = eq + 2 + lead;
            if !["dimension", "order", "lower", "upper", "F", "f"].contains(&key) {
                let kc = line.find(key).unwrap_or(0) + 1;
                return Err(PdeError::Parse { line: no + 1, column: kc, msg: format!("unknown key {key:?}") });
            }
            if fields.iter().any(|f| f.0 == key) {
                return Err(PdeError::Parse { line: no + 1, column: 1, msg: format!("duplicate key {key:?}") });
            }
            fields.push((key, no + 1, column, value.trim()));
        }
        let get = |k: &str| fields.iter().find(|f| f.0 == k).copied().ok_or(PdeError::Parse { line: 0, column: 0, msg: format!("missing key {k:?}") });
        let int = |k: &str| -> Result<u32, PdeError> {
            let (_, line, column, v) = get(k)?;
            v.parse().map_err(|_| PdeError::Parse { line, column, msg: format!("{k} must be a non-negative integer") })
        };
        let dims = int("dimension")? as usize;
        let order = int("order")?;
        let corner = |k: &str| -> Result<Vec<f64>, PdeError> {
            let (_, line, column, v) = get(k)?;
            let parts: Vec<&str> = if v.contains(',') { v.split(',').collect() } else { v.split_whitespace().collect() };
            parts
                .iter()
                .map(|p| {
                    let off = v.find(p.trim()).unwrap_or(0);
                    Expr::parse(p, dims.max(1), None)
                        .map_err(|e| PdeError::Parse { line, column: column + off + e.column - 1, msg: e.msg })
                        .and_then(|e| {
                            let val = e.eval(&vec![0.0; dims.max(1)], &[]);
                            if val.is_finite() {
                                Ok(val)
                            } else {
                                Err(PdeError::Parse { line, column, msg: "corner is not finite".into() })
                            }
                        })
                })
                .collect()
        };
        let lower = corner("lower")?;
        let upper = corner("upper")?;
        if lower.len() != dims || upper.len() != dims {
            let (_, line, column, _) = get("lower")?;
            return Err(PdeError::Parse { line, column, msg: format!("expected {dims} corner values") });
        }
        let domain = DomainBox::new(lower, upper)?;
        let (_, fl, fc, op_text) = get("F")?;
        let (_, rl, rc, rhs_text) = get("f")?;
        let jets = MultiIndexSet::new(dims, order);
        Expr::parse(op_text, dims, Some(&jets)).map_err(|e| PdeError::Parse { line: fl, column: fc + e.column - 1, msg: e.msg })?;
        Expr::parse(rhs_text, dims, None).map_err(|e| PdeError::Parse { line: rl, column: rc + e.column - 1, msg: e.msg })?;
        Ok(Self::from_expressions(domain, order, op_text, rhs_text).expect("validated above"))
    }

    /// Inverse of [`Self::from_text`] for expression-backed problems.
    pub fn to_text(&self) -> Option<String> {
        let (op, rhs) = self.source()?;
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        Some(format!(
            "dimension = {}\norder = {}\nlower = {}\nupper = {}\nF = {}\nf = {}\n",
            self.dims(),
            self.order(),
            join(self.domain.lower()),
            join(self.domain.upper()),
            op,
            rhs
        ))
    }
}

/// `T(x, D) P (x) = F(x, D^p P(x))`.
pub fn apply_operator(problem: &PdeProblem, p: &Polynomial, x: &[f64]) -> Result<f64, PdeError> {
    let jet = p.jet_at(problem.jets(), x);
    problem.operator_at(x, &jet.0)
}

/// Residual `T(x, D) P (x) - f(x)`.
pub fn residual(problem: &PdeProblem, p: &Polynomial, x: &[f64]) -> Result<f64, PdeError> {
    Ok(apply_operator(problem, p, x)? - problem.rhs_at(x)?)
}

/// Inner enclosure of the range of `F(x, ·)` over jet space.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeProbe {
    /// `[min, max]` of all sampled values.
    pub enclosure: ExtInterval,
    /// The minimum still dropped substantially on the last doubling.
    pub unbounded_below: bool,
    pub unbounded_above: bool,
    /// Running `(min, max)` after each doubling step.
    pub history: Vec<(f64, f64)>,
}

impl RangeProbe {
    /// The enclosure with flagged sides pushed to infinity.
    pub fn range(&self) -> ExtInterval {
        let lo = if self.unbounded_below { ExtReal::NegInf } else { self.enclosure.lo() };
        let hi = if self.unbounded_above { ExtReal::PosInf } else { self.enclosure.hi() };
        ExtInterval::new(lo, hi).expect("widening keeps order")
    }

    /// Half-width of the jet box used at the last step.
    pub fn radius(&self) -> f64 {
        probe_radius(self.history.len() - 1)
    }
}

const AXIS_SAMPLES: usize = 129;
const SCATTER_SAMPLES: usize = 256;
/// Relative growth on the last doubling that marks a side as unbounded.
const GROWTH_FLAG: f64 = 0.25;

pub fn probe_radius(step: usize) -> f64 {
    (2.0f64).powi(step as i32)
}

/// Sample `F(x, ·)` over the nested jet boxes `[-K, K]^N`, `K = 1, 2, 4, …`
/// (`budget` steps). Each step evaluates the origin, a uniform sweep along
/// every jet axis, and a fixed pseudo-random scatter. Results only depend
/// on `(x, step)`, so enclosures are nested in `budget`.
pub fn range_probe(problem: &PdeProblem, x: &[f64], budget: usize) -> Result<RangeProbe, PdeError> {
    if budget == 0 {
        return Err(PdeError::EmptyBudget);
    }
    let n = problem.jets().len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut history = Vec::with_capacity(budget);
    let mut jet = vec![0.0; n];
    let take = |v: f64, lo: &mut f64, hi: &mut f64| {
        *lo = lo.min(v);
        *hi = hi.max(v);
    };
    let origin = problem.operator_at(x, &jet)?;
    take(origin, &mut lo, &mut hi);
    for step in 0..budget {
        let k = probe_radius(step);
        for axis in 0..n {
            for i in 0..AXIS_SAMPLES {
                jet[axis] = -k + 2.0 * k * i as f64 / (AXIS_SAMPLES - 1) as f64;
                take(problem.operator_at(x, &jet)?, &mut lo, &mut hi);
            }
            jet[axis] = 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + step as u64);
        for _ in 0..SCATTER_SAMPLES {
            for v in jet.iter_mut() {
                *v = rng.gen_range(-k..=k);
            }
            take(problem.operator_at(x, &jet)?, &mut lo, &mut hi);
        }
        jet.iter_mut().for_each(|v| *v = 0.0);
        history.push((lo, hi));
    }
    let grew = |prev: f64, last: f64| (last - prev).abs() > GROWTH_FLAG * (1.0 + prev.abs());
    let (unbounded_below, unbounded_above) = if history.len() >= 2 {
        let (p, l) = (history[history.len() - 2], history[history.len() - 1]);
        (grew(p.0, l.0), grew(p.1, l.1))
    } else {
        (false, false)
    };
    Ok(RangeProbe { enclosure: ExtInterval::from_f64(lo, hi).expect("finite samples"), unbounded_below, unbounded_above, history })
}

/// Interior-margin check of `f(x) ∈ int ℝ_x` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition23 {
    pub point: Vec<f64>,
    pub rhs: f64,
    pub range: ExtInterval,
    pub margin: f64,
    pub holds: bool,
}

pub const DEFAULT_PROBE_BUDGET: usize = 12;

/// Default margin `1e-6 · (1 + |f(x)|)`.
pub fn interior_margin(rhs: f64) -> f64 {
    1e-6 * (1.0 + rhs.abs())
}

pub fn check_condition_23(problem: &PdeProblem, points: &[Vec<f64>], budget: usize) -> Result<Vec<Condition23>, PdeError> {
    points
        .iter()
        .map(|x| {
            let rhs = problem.rhs_at(x)?;
            let probe = range_probe(problem, x, budget)?;
            let margin = interior_margin(rhs);
            let room_below = probe.unbounded_below || rhs - probe.enclosure.lo().to_f64() >= margin;
            let room_above = probe.unbounded_above || probe.enclosure.hi().to_f64() - rhs >= margin;
            Ok(Condition23 { point: x.clone(), rhs, range: probe.range(), margin, holds: room_below && room_above })
        })
        .collect()
}

/// Uniform interior probe lattice with `per_axis` points per axis.
pub fn probe_lattice(domain: &DomainBox, per_axis: usize) -> Vec<Vec<f64>> {
    let n = domain.dims();
    let total = per_axis.pow(n as u32);
    (0..total)
        .map(|mut idx| {
            let mut x = vec![0.0; n];
            for k in (0..n).rev() {
                let i = idx % per_axis;
                idx /= per_axis;
                x[k] = domain.lower()[k] + domain.side(k) * (i as f64 + 0.5) / per_axis as f64;
            }
            x
        })
        .collect()
}
