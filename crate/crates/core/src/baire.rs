//! Lower/upper Baire operators, graph completion, and the Hausdorff
//! continuity tests built on them.
//!
//! Balls are open Chebyshev balls measured in grid cells: the ball of radius
//! `δ` around a node holds the nodes at index distance `< δ`. The smallest
//! ball (`δ = 1`) is the node itself, so on a node of the dense set `D` both
//! operators return that node's own endpoints. Off `D` the ball grows until
//! it meets `D`; since the inf over a ball can only fall as the ball grows,
//! the supremum over `δ` is attained at the first nonempty ball (and dually
//! for the upper operator).

use std::fmt::Write as _;

use thiserror::Error;

use crate::grid::{GridDomain, GridError, GridIntervalFunction};
use crate::order::{ExtInterval, ExtReal};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaireError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("node {node} has no dense-set node in any ball")]
    EmptyBall { node: usize },
    #[error("input is not point valued at reliable node {node}")]
    NotPointValued { node: usize },
    #[error("cannot take the supremum of an empty family")]
    EmptyFamily,
}

/// `I(D, Ω, f)`, `S(D, Ω, f)` and `F(D, Ω, f)` computed together.
#[derive(Debug, Clone, PartialEq)]
pub struct BaireResult {
    pub lower: GridIntervalFunction,
    pub upper: GridIntervalFunction,
    pub completed: GridIntervalFunction,
}

fn max_radius(domain: &GridDomain) -> usize {
    domain.resolution().iter().copied().max().unwrap_or(1)
}

/// Nodes of `D` in the first nonempty ball around `idx`.
fn nearest_dense_ball(domain: &GridDomain, dense: &[bool], idx: usize) -> Result<Vec<usize>, BaireError> {
    if dense[idx] {
        return Ok(vec![idx]);
    }
    for r in 1..=max_radius(domain) {
        let hits: Vec<usize> = domain.neighborhood(idx, r).into_iter().filter(|&j| dense[j]).collect();
        if !hits.is_empty() {
            return Ok(hits);
        }
    }
    Err(BaireError::EmptyBall { node: idx })
}

fn envelopes(f: &GridIntervalFunction, dense: &[bool]) -> Result<(Vec<ExtReal>, Vec<ExtReal>), BaireError> {
    let domain = f.domain();
    domain.check_dense(dense)?;
    let n = domain.node_count();
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    for idx in 0..n {
        let ball = nearest_dense_ball(domain, dense, idx)?;
        lo.push(ball.iter().map(|&j| f.value(j).lo()).min().expect("ball is nonempty"));
        hi.push(ball.iter().map(|&j| f.value(j).hi()).max().expect("ball is nonempty"));
    }
    Ok((lo, hi))
}

fn point_function(domain: &GridDomain, vals: &[ExtReal], mask: &[bool]) -> GridIntervalFunction {
    let values = vals.iter().map(|&v| ExtInterval::point(v)).collect();
    GridIntervalFunction::new(domain.clone(), values, mask.to_vec()).expect("mask was checked dense")
}

pub fn baire_operators(f: &GridIntervalFunction, dense: &[bool]) -> Result<BaireResult, BaireError> {
    let (lo, hi) = envelopes(f, dense)?;
    let domain = f.domain();
    let values = lo.iter().zip(&hi).map(|(a, b)| ExtInterval::new(*a, *b).expect("inf over a ball never exceeds its sup")).collect();
    Ok(BaireResult {
        lower: point_function(domain, &lo, dense),
        upper: point_function(domain, &hi, dense),
        completed: GridIntervalFunction::new(domain.clone(), values, dense.to_vec())?,
    })
}

pub fn baire_lower(f: &GridIntervalFunction, dense: &[bool]) -> Result<GridIntervalFunction, BaireError> {
    let (lo, _) = envelopes(f, dense)?;
    Ok(point_function(f.domain(), &lo, dense))
}

pub fn baire_upper(f: &GridIntervalFunction, dense: &[bool]) -> Result<GridIntervalFunction, BaireError> {
    let (_, hi) = envelopes(f, dense)?;
    Ok(point_function(f.domain(), &hi, dense))
}

/// `F(D, Ω, f) = [I(D, Ω, f), S(D, Ω, f)]`. The result carries `D` as its mask.
pub fn graph_completion(f: &GridIntervalFunction, dense: &[bool]) -> Result<GridIntervalFunction, BaireError> {
    Ok(baire_operators(f, dense)?.completed)
}

/// Nodes where `f` is point valued.
pub fn degenerate_nodes(f: &GridIntervalFunction) -> Vec<bool> {
    f.values().iter().map(ExtInterval::is_degenerate).collect()
}

/// Minimality test for Hausdorff continuity.
///
/// The reference set is the node set where `f` is point valued; it must be
/// dense. Both extreme selections (lower and upper endpoints) are completed
/// from it and must reproduce `f` exactly. Every other selection lies
/// between these two, and completion is monotone.
pub fn is_h_continuous(f: &GridIntervalFunction) -> bool {
    let dense = degenerate_nodes(f);
    if !f.domain().is_discretely_dense(&dense) {
        return false;
    }
    [f.lower_selection(), f.upper_selection()].iter().all(|sel| match graph_completion(sel, &dense) {
        Ok(g) => g.values() == f.values(),
        Err(_) => false,
    })
}

/// Finite on a discretely open dense node set: the nodes carrying an
/// infinite endpoint contain no full grid cell.
pub fn is_nearly_finite(f: &GridIntervalFunction) -> bool {
    let finite: Vec<bool> = f.values().iter().map(ExtInterval::is_finite).collect();
    f.domain().is_discretely_dense(&finite)
}

/// `Γ_ε(f)` at one tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaLevel {
    pub eps: f64,
    pub nodes: Vec<usize>,
    pub nowhere_dense: bool,
    pub closed: bool,
    pub max_width: ExtReal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscontinuityReport {
    /// `Γ(f)`: nodes of positive width.
    pub gamma_nodes: Vec<usize>,
    pub levels: Vec<GammaLevel>,
}

impl DiscontinuityReport {
    pub fn level(&self, eps: f64) -> Option<&GammaLevel> {
        self.levels.iter().find(|l| l.eps == eps)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# discontinuity report: gamma nodes {}", self.gamma_nodes.len());
        for l in &self.levels {
            let _ = writeln!(
                s,
                "eps {:?} nodes {} nowhere_dense {} closed {} max_width {}",
                l.eps,
                l.nodes.len(),
                l.nowhere_dense,
                l.closed,
                l.max_width
            );
        }
        s
    }
}

fn width_at_least(w: ExtReal, eps: f64) -> bool {
    w >= ExtReal::of(eps)
}

/// A node set counts as discretely closed for `f` at level `eps` when it is
/// exactly the superlevel set `{width >= eps}`: every node meeting the
/// threshold belongs to it and no other node does.
pub fn is_discretely_closed(f: &GridIntervalFunction, eps: f64, nodes: &[usize]) -> bool {
    let mut member = vec![false; f.domain().node_count()];
    for &i in nodes {
        member[i] = true;
    }
    f.values().iter().zip(&member).all(|(v, &m)| m == width_at_least(v.width(), eps))
}

pub fn discontinuity_report(f: &GridIntervalFunction, eps_list: &[f64]) -> DiscontinuityReport {
    let domain = f.domain();
    let widths: Vec<ExtReal> = f.values().iter().map(ExtInterval::width).collect();
    let gamma_nodes = (0..widths.len()).filter(|&i| widths[i] > ExtReal::ZERO).collect();
    let levels = eps_list
        .iter()
        .map(|&eps| {
            let nodes: Vec<usize> = (0..widths.len()).filter(|&i| width_at_least(widths[i], eps)).collect();
            let mut outside = vec![true; widths.len()];
            for &i in &nodes {
                outside[i] = false;
            }
            let max_width = nodes.iter().map(|&i| widths[i]).max().unwrap_or(ExtReal::ZERO);
            let closed = is_discretely_closed(f, eps, &nodes);
            GammaLevel { eps, nowhere_dense: domain.is_discretely_dense(&outside), closed, max_width, nodes }
        })
        .collect();
    DiscontinuityReport { gamma_nodes, levels }
}

/// `F₀`: completion of a point-valued function from its own reliable set.
pub fn assimilate_f0(u: &GridIntervalFunction) -> Result<GridIntervalFunction, BaireError> {
    if let Some(node) = (0..u.domain().node_count()).find(|&i| u.is_reliable(i) && !u.value(i).is_degenerate()) {
        return Err(BaireError::NotPointValued { node });
    }
    graph_completion(u, u.mask())
}

/// Agreement on `D` forces agreement of the completions from `D`.
///
/// Returns `true` when the premise fails (the functions differ somewhere on
/// `D`). Intended as an oracle: it should never return `false`.
pub fn dense_determination_check(f: &GridIntervalFunction, g: &GridIntervalFunction, dense: &[bool]) -> Result<bool, BaireError> {
    if f.domain() != g.domain() {
        return Err(GridError::DomainMismatch.into());
    }
    let agree_on_d = (0..dense.len()).filter(|&i| dense[i]).all(|i| f.value(i) == g.value(i));
    if !agree_on_d {
        return Ok(true);
    }
    Ok(graph_completion(f, dense)?.values() == graph_completion(g, dense)?.values())
}

/// Largest jump of the chosen endpoint between `idx` and its immediate
/// neighbours. Used as a discrete modulus-of-continuity probe.
pub fn endpoint_oscillation(f: &GridIntervalFunction, idx: usize, upper: bool) -> ExtReal {
    let pick = |j: usize| if upper { f.value(j).hi() } else { f.value(j).lo() };
    let here = pick(idx);
    f.domain()
        .neighborhood(idx, 1)
        .into_iter()
        .map(|j| {
            let there = pick(j);
            ExtInterval::new(here.min(there), here.max(there)).expect("ordered").width()
        })
        .max()
        .unwrap_or(ExtReal::ZERO)
}

/// Supremum of a finite family under the pointwise order, recompleted from
/// the nodes where the pointwise join is point valued.
pub fn completed_supremum(family: &[GridIntervalFunction]) -> Result<GridIntervalFunction, BaireError> {
    let first = family.first().ok_or(BaireError::EmptyFamily)?;
    let mut values = first.values().to_vec();
    for g in &family[1..] {
        if g.domain() != first.domain() {
            return Err(GridError::DomainMismatch.into());
        }
        for (v, w) in values.iter_mut().zip(g.values()) {
            *v = v.join(w);
        }
    }
    let joined = GridIntervalFunction::new(first.domain().clone(), values, vec![true; first.domain().node_count()])?;
    let dense = degenerate_nodes(&joined);
    graph_completion(&joined, &dense)
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::grid::{pointwise_leq, GridDomain};
    use proptest::prelude::*;

    fn pt(x: f64) -> ExtInterval {
        ExtInterval::point(ExtReal::of(x))
    }

    /// 1-D grid on (-1, 1) with an odd node count, so node `n/2` sits at 0.
    fn symmetric_line(nodes: usize) -> GridDomain {
        GridDomain::uniform(vec![-1.0], vec![1.0], nodes).unwrap()
    }

    fn heaviside(nodes: usize) -> (GridIntervalFunction, usize) {
        let d = symmetric_line(nodes);
        let mid = nodes / 2;
        let f = GridIntervalFunction::from_point_fn(d.clone(), |x| if x[0] < 0.0 { 0.0 } else { 1.0 });
        let mut mask = vec![true; nodes];
        mask[mid] = false;
        (f.with_mask(mask).unwrap(), mid)
    }

    // Brute-force evaluation of sup over δ of inf over B_δ(x) ∩ D (and the
    // dual), scanning every radius up to the grid extent.
    fn oracle(f: &GridIntervalFunction, dense: &[bool]) -> Vec<(f64, f64)> {
        let d = f.domain();
        (0..d.node_count())
            .map(|i| {
                let mut best_lo = f64::NEG_INFINITY;
                let mut best_hi = f64::INFINITY;
                for delta in 1..=d.resolution()[0] + 1 {
                    let ball: Vec<usize> = (0..d.node_count())
                        .filter(|&j| dense[j])
                        .filter(|&j| {
                            let (a, b) = (d.multi_index(i), d.multi_index(j));
                            a.iter().zip(&b).map(|(p, q)| p.abs_diff(*q)).max().unwrap() < delta
                        })
                        .collect();
                    if ball.is_empty() {
                        continue;
                    }
                    let inf = ball.iter().map(|&j| f.value(j).lo().to_f64()).fold(f64::INFINITY, f64::min);
                    let sup = ball.iter().map(|&j| f.value(j).hi().to_f64()).fold(f64::NEG_INFINITY, f64::max);
                    best_lo = best_lo.max(inf);
                    best_hi = best_hi.min(sup);
                }
                (best_lo, best_hi)
            })
            .collect()
    }

    #[test]
    fn constants_are_fixed() {
        let d = GridDomain::uniform(vec![0.0, 0.0], vec![1.0, 1.0], 6).unwrap();
        let f = GridIntervalFunction::from_point_fn(d, |_| 3.5);
        let all = vec![true; 36];
        assert!(baire_lower(&f, &all).unwrap().values().iter().all(|v| *v == pt(3.5)));
        assert!(baire_upper(&f, &all).unwrap().values().iter().all(|v| *v == pt(3.5)));
    }

    #[test]
    fn heaviside_envelopes() {
        let (f, mid) = heaviside(21);
        let lower = baire_lower(&f, f.mask()).unwrap();
        let upper = baire_upper(&f, f.mask()).unwrap();
        assert_eq!(lower.value(mid - 1), pt(0.0));
        assert_eq!(lower.value(mid), pt(0.0));
        assert_eq!(upper.value(mid), pt(1.0));
        let expected = oracle(&f, f.mask());
        for i in 0..21 {
            assert_eq!((lower.value(i).lo().to_f64(), upper.value(i).hi().to_f64()), expected[i]);
        }
    }

    #[test]
    fn heaviside_completion() {
        let (f, mid) = heaviside(21);
        let c = graph_completion(&f, f.mask()).unwrap();
        for i in 0..21 {
            if i == mid {
                assert_eq!(c.value(i), ExtInterval::from_f64(0.0, 1.0).unwrap());
            } else {
                assert!(c.value(i).is_degenerate());
            }
        }
        assert!(is_h_continuous(&c));
    }

    #[test]
    fn spike_on_an_excluded_node_is_flattened() {
        let d = symmetric_line(9);
        let vals: Vec<ExtInterval> = [2.0, 3.0, 1.5, 4.0, 0.0, 2.5, 5.0, 1.0, 2.0].iter().map(|&x| pt(x)).collect();
        let mut vals = vals;
        vals[4] = ExtInterval::point(ExtReal::PosInf);
        let mut mask = vec![true; 9];
        mask[4] = false;
        let f = GridIntervalFunction::new(d, vals, mask.clone()).unwrap();
        let lower = baire_lower(&f, &mask).unwrap();
        let upper = baire_upper(&f, &mask).unwrap();
        let expected = oracle(&f, &mask);
        assert_eq!(expected[4], (2.5, 4.0));
        assert_eq!(lower.value(4), pt(2.5));
        assert_eq!(upper.value(4), pt(4.0));
    }

    #[test]
    fn continuous_sample_is_its_own_completion() {
        let d = symmetric_line(401);
        let f = GridIntervalFunction::from_point_fn(d, |x| (3.0 * x[0]).sin());
        let all = vec![true; 401];
        assert_eq!(graph_completion(&f, &all).unwrap(), f);
        assert!(is_h_continuous(&f));
    }

    #[test]
    fn fat_constant_is_not_h_continuous() {
        let d = symmetric_line(11);
        let f = GridIntervalFunction::from_fn(d, |_| ExtInterval::from_f64(0.0, 2.0).unwrap());
        assert!(!is_h_continuous(&f));
        // the middle selection completes to a point function, not to f
        let mid = GridIntervalFunction::from_point_fn(f.domain().clone(), |_| 1.0);
        assert_ne!(graph_completion(&mid, &[true; 11]).unwrap().values(), f.values());
    }

    #[test]
    fn too_fat_or_too_thin_jump_values_fail() {
        let (f, mid) = heaviside(11);
        let c = graph_completion(&f, f.mask()).unwrap();
        let mut wide = c.values().to_vec();
        wide[mid] = ExtInterval::from_f64(-1.0, 1.0).unwrap();
        assert!(!is_h_continuous(&c.with_values(wide).unwrap()));
        let mut narrow = c.values().to_vec();
        narrow[mid] = ExtInterval::from_f64(0.25, 1.0).unwrap();
        assert!(!is_h_continuous(&c.with_values(narrow).unwrap()));
    }

    #[test]
    fn nearly_finite_examples() {
        let d = symmetric_line(11);
        assert!(is_nearly_finite(&GridIntervalFunction::from_point_fn(d.clone(), |x| x[0])));
        let inf = GridIntervalFunction::from_fn(d.clone(), |_| ExtInterval::point(ExtReal::PosInf));
        assert!(!is_nearly_finite(&inf));
        let one = GridIntervalFunction::from_fn(d, |x| if x[0] == 0.0 { ExtInterval::point(ExtReal::PosInf) } else { pt(x[0]) });
        assert!(is_nearly_finite(&one));
    }

    #[test]
    fn discontinuity_reports() {
        let d = symmetric_line(31);
        let smooth = GridIntervalFunction::from_point_fn(d, |x| x[0].cos());
        let rep = discontinuity_report(&smooth, &[1.0, 0.5, 0.1]);
        assert!(rep.gamma_nodes.is_empty());
        assert!(rep.levels.iter().all(|l| l.nodes.is_empty() && l.nowhere_dense && l.closed));

        let (f, mid) = heaviside(31);
        let c = graph_completion(&f, f.mask()).unwrap();
        let rep = discontinuity_report(&c, &[0.5]);
        let l = rep.level(0.5).unwrap();
        assert_eq!(l.nodes, vec![mid]);
        assert!(l.nowhere_dense && l.closed);
        assert_eq!(l.max_width, ExtReal::of(1.0));
        assert!(rep.to_text().contains("eps 0.5 nodes 1 nowhere_dense true closed true max_width 1.0"));
    }

    #[test]
    fn sin_inverse_oscillation() {
        // spacing h with 1/h = π/2 + 2π·k puts sin(±1/h) = ±1 on the
        // neighbours of the excluded origin node
        let k = 20.0;
        let h = 1.0 / (std::f64::consts::FRAC_PI_2 + 2.0 * std::f64::consts::PI * k);
        let nodes = 201;
        let half = h * (nodes + 1) as f64 / 2.0;
        let d = GridDomain::uniform(vec![-half], vec![half], nodes).unwrap();
        let mid = nodes / 2;
        let f = GridIntervalFunction::from_point_fn(d, |x| if x[0].abs() < 0.5 * h { 0.0 } else { (1.0 / x[0]).sin() });
        let mut mask = vec![true; nodes];
        mask[mid] = false;
        let c = assimilate_f0(&f.with_mask(mask).unwrap()).unwrap();
        let l = discontinuity_report(&c, &[1.0]).levels[0].clone();
        assert_eq!(l.nodes, vec![mid]);
        assert!((l.max_width.to_f64() - 2.0).abs() < 1e-9);
        let (lo, hi) = (c.value(mid).lo().to_f64(), c.value(mid).hi().to_f64());
        assert!((lo + 1.0).abs() < 1e-9 && (hi - 1.0).abs() < 1e-9);
    }

    #[test]
    fn f0_identifies_nd_equivalent_inputs() {
        let d = GridDomain::uniform(vec![0.0, 0.0], vec![1.0, 1.0], 9).unwrap();
        let mask: Vec<bool> = (0..81).map(|i| d.multi_index(i)[1] != 4).collect();
        let u = GridIntervalFunction::from_point_fn(d.clone(), |x| if x[1] < 0.5 { x[0] } else { 2.0 + x[0] }).with_mask(mask.clone()).unwrap();
        let perturbed: Vec<ExtInterval> = (0..81).map(|i| if mask[i] { u.value(i) } else { pt(-40.0) }).collect();
        let v = u.with_values(perturbed).unwrap();
        assert!(crate::grid::nd_equivalent(&u, &v).unwrap());
        assert_eq!(assimilate_f0(&u).unwrap(), assimilate_f0(&v).unwrap());
        assert!(is_h_continuous(&assimilate_f0(&u).unwrap()));
        assert!(is_nearly_finite(&assimilate_f0(&u).unwrap()));
    }

    #[test]
    fn f0_rejects_fat_reliable_values() {
        let d = symmetric_line(5);
        let f = GridIntervalFunction::from_fn(d, |_| ExtInterval::from_f64(0.0, 1.0).unwrap());
        assert_eq!(assimilate_f0(&f), Err(BaireError::NotPointValued { node: 0 }));
    }

    #[test]
    fn non_dense_reference_set_is_an_error() {
        let d = symmetric_line(5);
        let f = GridIntervalFunction::from_point_fn(d, |x| x[0]);
        let mask = vec![true, false, false, true, true];
        assert!(matches!(graph_completion(&f, &mask), Err(BaireError::Grid(GridError::NotDense { .. }))));
    }

    #[test]
    fn dense_determination_examples() {
        let (f, _) = heaviside(15);
        let c = graph_completion(&f, f.mask()).unwrap();
        assert!(dense_determination_check(&c, &c, c.mask()).unwrap());
        // same D-data, different junk off D
        let mut junk = f.values().to_vec();
        junk[7] = pt(9.0);
        let g = graph_completion(&f.with_values(junk).unwrap(), f.mask()).unwrap();
        assert!(dense_determination_check(&c, &g, f.mask()).unwrap());
        // premise fails
        let other = GridIntervalFunction::from_point_fn(f.domain().clone(), |x| x[0]);
        assert!(dense_determination_check(&c, &other, f.mask()).unwrap());
    }

    #[test]
    fn jump_width_matches_endpoint_discontinuity() {
        // piecewise linear with slope ≤ 1 and jumps of size ≥ 1 at excluded nodes
        let d = symmetric_line(101);
        let h = d.spacing(0);
        let jumps = [20usize, 55, 80];
        let f = GridIntervalFunction::from_point_fn(d.clone(), |x| {
            let mut v = 0.3 * x[0];
            for (k, &j) in jumps.iter().enumerate() {
                if x[0] > d.coordinate(0, j) - 0.5 * h {
                    v += if k % 2 == 0 { 1.5 } else { -1.0 };
                }
            }
            v
        });
        let mask: Vec<bool> = (0..101).map(|i| !jumps.contains(&i)).collect();
        let c = assimilate_f0(&f.with_mask(mask).unwrap()).unwrap();
        let tau = ExtReal::of(0.5);
        for i in 0..101 {
            let fat = c.value(i).width() > ExtReal::ZERO;
            let both = endpoint_oscillation(&c, i, false) > tau && endpoint_oscillation(&c, i, true) > tau;
            assert_eq!(fat, both, "node {i}");
        }
    }

    fn random_line_fn(vals: Vec<i8>, fat: Vec<u8>, excluded: Vec<bool>) -> (GridIntervalFunction, Vec<bool>) {
        let d = symmetric_line(vals.len());
        let mut mask: Vec<bool> = excluded.iter().map(|e| !e).collect();
        for i in 1..mask.len() {
            if !mask[i] && !mask[i - 1] {
                mask[i] = true;
            }
        }
        let values = vals.iter().zip(&fat).map(|(&v, &w)| ExtInterval::from_f64(v as f64, v as f64 + w as f64).unwrap()).collect();
        (GridIntervalFunction::new(d, values, vec![true; vals.len()]).unwrap(), mask)
    }

    proptest! {
        #[test]
        fn sandwich_and_idempotence(
            vals in proptest::collection::vec(-5i8..5, 12),
            fat in proptest::collection::vec(0u8..3, 12),
            excluded in proptest::collection::vec(any::<bool>(), 12),
        ) {
            let (f, mask) = random_line_fn(vals, fat, excluded);
            let r = baire_operators(&f, &mask).unwrap();
            for i in 0..12 {
                prop_assert!(r.lower.value(i).leq(&r.upper.value(i)));
                if mask[i] {
                    prop_assert!(r.lower.value(i).leq(&f.value(i)) && f.value(i).leq(&r.upper.value(i)));
                }
            }
            let once = r.completed;
            prop_assert_eq!(&graph_completion(&once, &mask).unwrap(), &once);
            let full = graph_completion(&once, &[true; 12]).unwrap();
            prop_assert_eq!(full.values(), once.values());
            let expected = oracle(&f, &mask);
            for i in 0..12 {
                prop_assert_eq!((once.value(i).lo().to_f64(), once.value(i).hi().to_f64()), expected[i]);
            }
        }

        #[test]
        fn completion_is_monotone(
            vals in proptest::collection::vec(-5i8..5, 12),
            bump in proptest::collection::vec(0u8..3, 12),
            excluded in proptest::collection::vec(any::<bool>(), 12),
        ) {
            let (f, mask) = random_line_fn(vals.clone(), vec![0; 12], excluded);
            let raised: Vec<i8> = vals.iter().zip(&bump).map(|(v, b)| v + *b as i8).collect();
            let (g, _) = random_line_fn(raised, vec![0; 12], vec![false; 12]);
            prop_assert!(pointwise_leq(&f, &g).unwrap());
            prop_assert!(pointwise_leq(&graph_completion(&f, &mask).unwrap(), &graph_completion(&g, &mask).unwrap()).unwrap());
        }

        #[test]
        fn f0_outputs_are_h_continuous_and_order_preserving(
            vals in proptest::collection::vec(-5i8..5, 12),
            bump in proptest::collection::vec(0u8..3, 12),
            excluded in proptest::collection::vec(any::<bool>(), 12),
        ) {
            let (u, mask) = random_line_fn(vals.clone(), vec![0; 12], excluded);
            let u = u.with_mask(mask.clone()).unwrap();
            let raised: Vec<i8> = vals.iter().zip(&bump).map(|(v, b)| v + *b as i8).collect();
            let (v, _) = random_line_fn(raised, vec![0; 12], vec![false; 12]);
            let v = v.with_mask(mask).unwrap();
            let (fu, fv) = (assimilate_f0(&u).unwrap(), assimilate_f0(&v).unwrap());
            prop_assert!(is_h_continuous(&fu) && is_nearly_finite(&fu));
            prop_assert!(crate::grid::nd_leq(&u, &v).unwrap());
            prop_assert!(pointwise_leq(&fu, &fv).unwrap());
            prop_assert!(dense_determination_check(&fu, &fv, u.mask()).unwrap());
        }

        #[test]
        fn finite_suprema_stay_h_continuous(
            a in proptest::collection::vec(-5i8..5, 12),
            b in proptest::collection::vec(-5i8..5, 12),
            excluded in proptest::collection::vec(any::<bool>(), 12),
        ) {
            let (u, mask) = random_line_fn(a, vec![0; 12], excluded);
            let (v, _) = random_line_fn(b, vec![0; 12], vec![false; 12]);
            let fu = assimilate_f0(&u.with_mask(mask.clone()).unwrap()).unwrap();
            let fv = assimilate_f0(&v.with_mask(mask).unwrap()).unwrap();
            let s = completed_supremum(&[fu.clone(), fv.clone()]).unwrap();
            prop_assert!(is_h_continuous(&s));
            let dense = degenerate_nodes(&s);
            for i in (0..12).filter(|&i| dense[i]) {
                prop_assert!(fu.value(i).leq(&s.value(i)) && fv.value(i).leq(&s.value(i)));
            }
        }
    }
}
