//! A truncated model of the reduced special fiber: the bipartite tree of
//! superspecial points and Fermat curves, reduced loci of special cycles on
//! it, and the divisor calculus used to recompute difference-divisor triples.
//!
//! Curves have `p^3 + 1` points, points lie on `p + 1` curves. The window is
//! grown breadth-first from a root curve. Node IDs are path strings: the root
//! is `C`, the `k`-th point child of a curve appends `.k`, the `k`-th curve
//! child of a point appends `/k`.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::ops::Range;

use num_bigint::BigInt;
use thiserror::Error;

use crate::padic::is_odd_prime;

pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeomError {
    #[error("p = {0} is not an odd prime")]
    InvalidPrime(u64),
    #[error("window needs {needed} nodes, budget is {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },
    #[error("window radius {radius} is too small, need {needed}")]
    WindowTooSmall { needed: u32, radius: u32 },
    #[error("shell is not bounded by any constraint")]
    UnboundedShell,
    #[error("case not covered: {0}")]
    CaseNotCovered(String),
    #[error("curve {0} is not in the divisor")]
    NotInDivisor(String),
    #[error("invalid cycle: {0}")]
    InvalidCycle(String),
    #[error("unknown node id {0:?}")]
    UnknownNode(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Curve,
    Point,
}

pub type NodeIdx = u32;
const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Node {
    parent: u32,
    first_child: u32,
    n_children: u32,
    slot: u32,
    /// For a curve its distance from the root in curve steps; for a point the
    /// depth of its parent curve.
    depth: u32,
    kind: NodeKind,
}

#[derive(Clone, Debug)]
pub struct TreeWindow {
    p: u64,
    radius: u32,
    nodes: Vec<Node>,
}

impl TreeWindow {
    /// Number of nodes in the window of the given radius, saturating at
    /// `u64::MAX`.
    pub fn node_count_for(p: u64, radius: u32) -> u64 {
        let p3 = (p as u128).pow(3);
        let mut total: u128 = 1 + p3 + 1;
        if radius == 0 {
            return total as u64;
        }
        // curves at depth 1, then alternate (points on depth-d curves, curves at d + 1)
        let mut curves = (p3 + 1) * p as u128;
        total += curves;
        for _ in 1..radius {
            let points = curves * p3;
            curves = points * p as u128;
            total = total.saturating_add(points).saturating_add(curves);
            if total > u64::MAX as u128 {
                return u64::MAX;
            }
        }
        total as u64
    }

    pub fn build(p: u64, radius: u32, budget: u64) -> Result<Self, GeomError> {
        if !is_odd_prime(p) {
            return Err(GeomError::InvalidPrime(p));
        }
        let needed = Self::node_count_for(p, radius);
        if needed > budget {
            return Err(GeomError::BudgetExceeded { needed, budget });
        }
        let p3 = p.pow(3) as u32;
        let mut nodes = Vec::with_capacity(needed as usize);
        nodes.push(Node {
            parent: NONE,
            first_child: 0,
            n_children: 0,
            slot: 0,
            depth: 0,
            kind: NodeKind::Curve,
        });
        let mut i = 0;
        while i < nodes.len() {
            let n = nodes[i];
            let (count, kind, depth) = match n.kind {
                NodeKind::Curve if n.depth < radius || (i == 0 && radius == 0) => {
                    (if i == 0 { p3 + 1 } else { p3 }, NodeKind::Point, n.depth)
                }
                NodeKind::Point if n.depth < radius => (p as u32, NodeKind::Curve, n.depth + 1),
                _ => (0, NodeKind::Curve, 0),
            };
            let first = nodes.len() as u32;
            for slot in 0..count {
                nodes.push(Node {
                    parent: i as u32,
                    first_child: 0,
                    n_children: 0,
                    slot,
                    depth,
                    kind,
                });
            }
            nodes[i].first_child = first;
            nodes[i].n_children = count;
            i += 1;
        }
        debug_assert_eq!(nodes.len() as u64, needed);
        Ok(Self { p, radius, nodes })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeIdx {
        0
    }

    pub fn kind(&self, i: NodeIdx) -> NodeKind {
        self.nodes[i as usize].kind
    }

    pub fn depth(&self, i: NodeIdx) -> u32 {
        self.nodes[i as usize].depth
    }

    pub fn parent(&self, i: NodeIdx) -> Option<NodeIdx> {
        let q = self.nodes[i as usize].parent;
        (q != NONE).then_some(q)
    }

    pub fn slot(&self, i: NodeIdx) -> u32 {
        self.nodes[i as usize].slot
    }

    pub fn children(&self, i: NodeIdx) -> Range<NodeIdx> {
        let n = &self.nodes[i as usize];
        n.first_child..n.first_child + n.n_children
    }

    pub fn curves(&self) -> impl Iterator<Item = NodeIdx> + '_ {
        (0..self.nodes.len() as u32).filter(move |&i| self.kind(i) == NodeKind::Curve)
    }

    pub fn points(&self) -> impl Iterator<Item = NodeIdx> + '_ {
        (0..self.nodes.len() as u32).filter(move |&i| self.kind(i) == NodeKind::Point)
    }

    pub fn curve_count(&self) -> usize {
        self.curves().count()
    }

    pub fn point_count(&self) -> usize {
        self.nodes.len() - self.curve_count()
    }

    /// The `slot`-th point on the root curve.
    pub fn root_point(&self, slot: u32) -> NodeIdx {
        assert!(slot < self.nodes[0].n_children, "root point {slot} out of range");
        self.nodes[0].first_child + slot
    }

    /// All neighbors of the node are materialized.
    pub fn is_interior(&self, i: NodeIdx) -> bool {
        // a point's depth is that of its parent curve
        self.depth(i) < self.radius
    }

    pub fn is_boundary(&self, i: NodeIdx) -> bool {
        !self.is_interior(i)
    }

    pub fn node_id(&self, i: NodeIdx) -> String {
        let mut parts = Vec::new();
        let mut cur = i;
        while let Some(q) = self.parent(cur) {
            let sep = if self.kind(cur) == NodeKind::Point { '.' } else { '/' };
            parts.push(format!("{sep}{}", self.slot(cur)));
            cur = q;
        }
        let mut s = String::from("C");
        for part in parts.iter().rev() {
            s.push_str(part);
        }
        s
    }

    pub fn find(&self, id: &str) -> Result<NodeIdx, GeomError> {
        let unknown = || GeomError::UnknownNode(id.to_string());
        let rest = id.strip_prefix('C').ok_or_else(unknown)?;
        let mut cur = 0u32;
        let mut chars = rest.char_indices().peekable();
        while let Some((start, sep)) = chars.next() {
            let mut end = rest.len();
            while let Some(&(j, c)) = chars.peek() {
                if c == '.' || c == '/' {
                    end = j;
                    break;
                }
                chars.next();
            }
            let k: u32 = rest[start + 1..end].parse().map_err(|_| unknown())?;
            let want = match sep {
                '.' => NodeKind::Curve,
                '/' => NodeKind::Point,
                _ => return Err(unknown()),
            };
            if self.kind(cur) != want || k >= self.nodes[cur as usize].n_children {
                return Err(unknown());
            }
            cur = self.nodes[cur as usize].first_child + k;
        }
        Ok(cur)
    }

    /// Points on a curve, or curves through a point, that are in the window.
    pub fn neighbors(&self, i: NodeIdx) -> Vec<NodeIdx> {
        let mut out: Vec<NodeIdx> = self.parent(i).into_iter().collect();
        out.extend(self.children(i));
        out
    }

    /// Curves sharing a point with `curve`, each listed once per shared point.
    pub fn adjacent_curves(&self, curve: NodeIdx) -> Result<Vec<NodeIdx>, GeomError> {
        if self.kind(curve) != NodeKind::Curve {
            return Err(GeomError::UnknownNode(self.node_id(curve)));
        }
        if !self.is_interior(curve) {
            return Err(GeomError::WindowTooSmall {
                needed: self.depth(curve) + 1,
                radius: self.radius,
            });
        }
        let mut out = Vec::with_capacity((self.p * (self.p.pow(3) + 1)) as usize);
        for z in self.neighbors(curve) {
            out.extend(self.neighbors(z).into_iter().filter(|&c| c != curve));
        }
        Ok(out)
    }

    /// Checks bipartiteness, the tree property and the degrees of interior
    /// nodes.
    pub fn audit(&self) -> Result<(), String> {
        let p3 = self.p.pow(3) as usize;
        let mut edges = 0usize;
        for i in 0..self.nodes.len() as u32 {
            for c in self.children(i) {
                edges += 1;
                if self.kind(c) == self.kind(i) {
                    return Err(format!("edge {} - {} is not bipartite", self.node_id(i), self.node_id(c)));
                }
                if self.parent(c) != Some(i) || c <= i {
                    return Err(format!("bad parent link at {}", self.node_id(c)));
                }
            }
            if self.is_interior(i) {
                let want = match self.kind(i) {
                    NodeKind::Curve => p3 + 1,
                    NodeKind::Point => self.p as usize + 1,
                };
                let got = self.neighbors(i).len();
                if got != want {
                    return Err(format!("{} has degree {got}, expected {want}", self.node_id(i)));
                }
            }
        }
        if edges + 1 != self.nodes.len() {
            return Err(format!("{edges} edges for {} nodes", self.nodes.len()));
        }
        Ok(())
    }

    /// Graphviz rendering; only for small windows.
    pub fn to_dot(&self, placement: Option<&Placement>, max_nodes: usize) -> Result<String, GeomError> {
        if self.len() > max_nodes {
            return Err(GeomError::BudgetExceeded {
                needed: self.len() as u64,
                budget: max_nodes as u64,
            });
        }
        let mut s = String::from("graph window {\n");
        for i in 0..self.len() as u32 {
            let id = self.node_id(i);
            let shape = match self.kind(i) {
                NodeKind::Curve => "box",
                NodeKind::Point => "point",
            };
            let mut label = id.clone();
            if let (Some(pl), NodeKind::Curve) = (placement, self.kind(i)) {
                let bs: Vec<String> = (0..pl.cycles.len())
                    .map(|c| pl.b_value(c, i).map_or("-".into(), |b| b.to_string()))
                    .collect();
                label = format!("{id} b=[{}]", bs.join(","));
            }
            let _ = writeln!(s, "  \"{id}\" [shape={shape}, label=\"{label}\"];");
        }
        for i in 0..self.len() as u32 {
            for c in self.children(i) {
                let _ = writeln!(s, "  \"{}\" -- \"{}\";", self.node_id(i), self.node_id(c));
            }
        }
        s.push_str("}\n");
        Ok(s)
    }
}

/// Where a cycle sits in the window. Odd cycles have a central subtree `T`
/// grown from the root curve: `marked` lists the `p + 1` root points whose
/// other curves lie in `T`; on every other curve of `T` the marked points
/// are the entry point and the fresh points `0..p`. Even cycles are centered
/// at a point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Center {
    Subtree { marked: Vec<u32> },
    Point(NodeIdx),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleDescriptor {
    pub valuation: u32,
    pub center: Center,
}

impl CycleDescriptor {
    pub fn odd(valuation: u32, marked: Vec<u32>) -> Self {
        Self {
            valuation,
            center: Center::Subtree { marked },
        }
    }

    pub fn even(valuation: u32, point: NodeIdx) -> Self {
        Self {
            valuation,
            center: Center::Point(point),
        }
    }

    pub fn is_odd(&self) -> bool {
        self.valuation % 2 == 1
    }

    /// `⌊valuation / 2⌋`: the largest `b` that occurs on the reduced locus.
    pub fn half(&self) -> u32 {
        self.valuation / 2
    }

    pub fn validate(&self, w: &TreeWindow) -> Result<(), GeomError> {
        match (&self.center, self.is_odd()) {
            (Center::Subtree { marked }, true) => {
                let n = w.p + 1;
                let mut m = marked.clone();
                m.sort_unstable();
                m.dedup();
                if m.len() as u64 != n {
                    return Err(GeomError::InvalidCycle(format!("need {n} distinct marked points")));
                }
                if m.iter().any(|&s| s as u64 > w.p.pow(3)) {
                    return Err(GeomError::InvalidCycle("marked point out of range".into()));
                }
                if w.radius == 0 && w.p > 0 && w.nodes[0].n_children == 0 {
                    return Err(GeomError::InvalidCycle("window has no root points".into()));
                }
                Ok(())
            }
            (Center::Point(x), false) => {
                if (*x as usize) < w.len() && w.kind(*x) == NodeKind::Point {
                    Ok(())
                } else {
                    Err(GeomError::InvalidCycle("even center must be a point".into()))
                }
            }
            _ => Err(GeomError::InvalidCycle("center does not match the parity".into())),
        }
    }
}

fn odd_distances(w: &TreeWindow, marked: &[u32]) -> Vec<u32> {
    let p = w.p as u32;
    let mut d = vec![NONE; w.len()];
    d[0] = 0;
    for c in w.curves().skip(1) {
        let z = w.parent(c).expect("non-root curve");
        let q = w.parent(z).expect("point has a parent");
        let on_t = d[q as usize] == 0
            && if q == 0 {
                marked.contains(&w.slot(z))
            } else {
                w.slot(z) < p
            };
        d[c as usize] = if on_t { 0 } else { d[q as usize] + 1 };
    }
    d
}

/// Distance to a point, counting curves on the path: curves through the point
/// are at distance 1.
fn point_distances(w: &TreeWindow, x: NodeIdx) -> Vec<u32> {
    let mut edges = vec![NONE; w.len()];
    edges[x as usize] = 0;
    let mut queue = VecDeque::from([x]);
    while let Some(i) = queue.pop_front() {
        for j in w.neighbors(i) {
            if edges[j as usize] == NONE {
                edges[j as usize] = edges[i as usize] + 1;
                queue.push_back(j);
            }
        }
    }
    edges
        .into_iter()
        .enumerate()
        .map(|(i, e)| {
            if w.kind(i as u32) == NodeKind::Curve && e != NONE {
                e.div_ceil(2)
            } else {
                NONE
            }
        })
        .collect()
}

/// Cycles placed in a window, with their curve distances precomputed.
#[derive(Clone, Debug)]
pub struct Placement<'w> {
    pub window: &'w TreeWindow,
    pub cycles: Vec<CycleDescriptor>,
    dist: Vec<Vec<u32>>,
}

impl<'w> Placement<'w> {
    pub fn new(window: &'w TreeWindow, cycles: Vec<CycleDescriptor>) -> Result<Self, GeomError> {
        let mut dist = Vec::with_capacity(cycles.len());
        for c in &cycles {
            c.validate(window)?;
            dist.push(match &c.center {
                Center::Subtree { marked } => odd_distances(window, marked),
                Center::Point(x) => point_distances(window, *x),
            });
        }
        Ok(Self { window, cycles, dist })
    }

    /// Perpendicular odd cycles sharing the root curve, with disjoint marked
    /// blocks `i(p+1) .. (i+1)(p+1)`.
    pub fn all_odd(window: &'w TreeWindow, valuations: &[u32]) -> Result<Self, GeomError> {
        let n = window.p as u32 + 1;
        if valuations.len() as u64 * (window.p + 1) > window.p.pow(3) + 1 {
            return Err(GeomError::InvalidCycle("too many cycles for disjoint marked sets".into()));
        }
        let cycles = valuations
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if v % 2 == 0 {
                    return Err(GeomError::InvalidCycle(format!("valuation {v} is even")));
                }
                Ok(CycleDescriptor::odd(v, (i as u32 * n..(i as u32 + 1) * n).collect()))
            })
            .collect::<Result<_, _>>()?;
        Self::new(window, cycles)
    }

    /// One odd cycle on the root with marked block `0..p+1`; every even cycle
    /// is centered at its first marked point.
    pub fn one_odd(window: &'w TreeWindow, odd: u32, evens: &[u32]) -> Result<Self, GeomError> {
        if odd % 2 == 0 || evens.iter().any(|v| v % 2 == 1) {
            return Err(GeomError::InvalidCycle("expected one odd and only even valuations".into()));
        }
        if window.nodes[0].n_children == 0 {
            return Err(GeomError::WindowTooSmall { needed: 0, radius: window.radius });
        }
        let n = window.p as u32 + 1;
        let x = window.root_point(0);
        let mut cycles = vec![CycleDescriptor::odd(odd, (0..n).collect())];
        cycles.extend(evens.iter().map(|&v| CycleDescriptor::even(v, x)));
        Self::new(window, cycles)
    }

    pub fn distance(&self, cycle: usize, curve: NodeIdx) -> u32 {
        self.dist[cycle][curve as usize]
    }

    /// `b_j(Λ)`, or `None` if the curve is not in the reduced locus.
    pub fn b_value(&self, cycle: usize, curve: NodeIdx) -> Option<u32> {
        let d = self.distance(cycle, curve);
        let r = self.cycles[cycle].half();
        if d == NONE || d > r {
            None
        } else {
            Some(r - d)
        }
    }
}

fn require_radius(w: &TreeWindow, needed: u32) -> Result<(), GeomError> {
    if w.radius < needed {
        Err(GeomError::WindowTooSmall { needed, radius: w.radius })
    } else {
        Ok(())
    }
}

/// Curves of the reduced locus inside the window with their `b`-values.
pub fn reduced_locus(w: &TreeWindow, c: &CycleDescriptor) -> Result<Vec<(NodeIdx, u32)>, GeomError> {
    require_radius(w, c.valuation.div_ceil(2) + 1)?;
    let pl = Placement::new(w, vec![c.clone()])?;
    Ok(w.curves().filter_map(|i| pl.b_value(0, i).map(|b| (i, b))).collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HorizontalMarker {
    pub anchor: NodeIdx,
    pub weight: u128,
    /// Incidence multiplicity against each curve through the anchor.
    pub incidence: Vec<(NodeIdx, u128)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DivisorLedger {
    pub vertical: BTreeMap<NodeIdx, u128>,
    pub horizontal: Vec<HorizontalMarker>,
}

fn geometric(p: u64, b: u32) -> u128 {
    (0..=b).map(|i| (p as u128).pow(2 * i)).sum()
}

/// Special fiber of `Z(j)`: curves with multiplicity `1 + p^2 + … + p^{2b}`
/// and, for even valuation `v`, a horizontal part of weight `p^v` through the
/// center meeting each curve there once. Odd valuations have none.
pub fn special_fiber_divisor(w: &TreeWindow, c: &CycleDescriptor) -> Result<DivisorLedger, GeomError> {
    let locus = reduced_locus(w, c)?;
    let mut ledger = DivisorLedger {
        vertical: locus.into_iter().map(|(i, b)| (i, geometric(w.p, b))).collect(),
        horizontal: Vec::new(),
    };
    if let Center::Point(x) = c.center {
        ledger.horizontal.push(HorizontalMarker {
            anchor: x,
            weight: (w.p as u128).pow(c.valuation),
            incidence: w.neighbors(x).into_iter().map(|k| (k, 1)).collect(),
        });
    }
    Ok(ledger)
}

/// Vertical part of `D(j) = Z(j) − Z(j/p)` for odd `j`: multiplicity `p^{2b}`.
pub fn difference_divisor(w: &TreeWindow, c: &CycleDescriptor) -> Result<DivisorLedger, GeomError> {
    if !c.is_odd() {
        return Err(GeomError::CaseNotCovered("difference divisor of an even cycle".into()));
    }
    let locus = reduced_locus(w, c)?;
    Ok(DivisorLedger {
        vertical: locus.into_iter().map(|(i, b)| (i, (w.p as u128).pow(2 * b))).collect(),
        horizontal: Vec::new(),
    })
}

/// `(V(Λ), V(Λ))` inside `D(j)` for odd valuation `u`, where `b = b_j(Λ)`.
pub fn self_intersection_value(p: u64, u: u32, b: u32) -> i128 {
    let p = p as i128;
    match (u, b) {
        (1, _) => -p * p - p,
        (_, 0) => -p * p - p + 1,
        _ => -2 * p * p - p + 1,
    }
}

pub fn self_intersection(pl: &Placement, cycle: usize, curve: NodeIdx) -> Result<i128, GeomError> {
    let c = &pl.cycles[cycle];
    if !c.is_odd() {
        return Err(GeomError::CaseNotCovered("self-intersection in an even divisor".into()));
    }
    let b = pl
        .b_value(cycle, curve)
        .ok_or_else(|| GeomError::NotInDivisor(pl.window.node_id(curve)))?;
    Ok(self_intersection_value(pl.window.p, c.valuation, b))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeZeroReport {
    pub checked: usize,
    pub failures: Vec<String>,
    /// Distinct self-intersection values that occurred.
    pub self_values: Vec<i128>,
}

impl DegreeZeroReport {
    pub fn pass(&self) -> bool {
        self.checked > 0 && self.failures.is_empty()
    }
}

/// For every interior curve of `D(j)_p`: `mult·self + Σ_adjacent mult = 0`.
pub fn degree_zero_report(w: &TreeWindow, c: &CycleDescriptor) -> Result<DegreeZeroReport, GeomError> {
    if !c.is_odd() {
        return Err(GeomError::CaseNotCovered("degree-zero check for an even cycle".into()));
    }
    require_radius(w, 1)?;
    let pl = Placement::new(w, vec![c.clone()])?;
    let p2 = (w.p as i128).pow(2);
    let mult = |i: NodeIdx| pl.b_value(0, i).map_or(0, |b| p2.pow(b));
    let mut report = DegreeZeroReport {
        checked: 0,
        failures: Vec::new(),
        self_values: Vec::new(),
    };
    for curve in w.curves().filter(|&i| w.is_interior(i)) {
        if pl.b_value(0, curve).is_none() {
            continue;
        }
        let s = self_intersection(&pl, 0, curve)?;
        let total: i128 = mult(curve) * s + w.adjacent_curves(curve)?.into_iter().map(mult).sum::<i128>();
        report.checked += 1;
        if !report.self_values.contains(&s) {
            report.self_values.push(s);
        }
        if total != 0 {
            report.failures.push(w.node_id(curve));
        }
    }
    report.self_values.sort_unstable();
    Ok(report)
}

pub fn degree_zero_check(w: &TreeWindow, c: &CycleDescriptor) -> Result<bool, GeomError> {
    Ok(degree_zero_report(w, c)?.pass())
}

/// Multiplicity of `V(Λ)` in `D(j1) ∩ D(j2)` inside `D(j1)` for
/// perpendicular `j1, j2` whose difference divisors contain it with
/// multiplicities `p^{r1}, p^{r2}`.
pub fn vertical_rule(p: u64, a1: u32, r1: u32, a2: u32, r2: u32) -> Result<u128, GeomError> {
    let p = p as u128;
    if r1 != r2 {
        return Ok(p.pow(r1.min(r2)));
    }
    let r = r1;
    let (lo, hi) = (a1.min(a2), a1.max(a2));
    if lo == hi {
        return Err(GeomError::CaseNotCovered(format!("equal valuations {lo} with r1 = r2 = {r}")));
    }
    if lo % 2 == 0 {
        return Err(GeomError::CaseNotCovered(format!(
            "r1 = r2 = {r} with even smaller valuation {lo}"
        )));
    }
    if lo + 1 < r {
        return Err(GeomError::CaseNotCovered(format!("r = {r} exceeds a1 + 1")));
    }
    Ok(((lo + 1 - r) / 2) as u128 * p.pow(r))
}

/// `vertical_rule` evaluated on a placed curve, with `r_i = 2 b_i(Λ)`.
pub fn vertical_multiplicity(pl: &Placement, i: usize, j: usize, curve: NodeIdx) -> Result<u128, GeomError> {
    let not_in = || GeomError::NotInDivisor(pl.window.node_id(curve));
    let bi = pl.b_value(i, curve).ok_or_else(not_in)?;
    let bj = pl.b_value(j, curve).ok_or_else(not_in)?;
    vertical_rule(pl.window.p, pl.cycles[i].valuation, 2 * bi, pl.cycles[j].valuation, 2 * bj)
}

/// Incidence `β` of the horizontal part of `D(j1) ∩ D(j2)` with the curves
/// through the even center, for odd `a1` and even `a2`. `None` when there is
/// no horizontal part.
pub fn horizontal_ledger(p: u64, a1: u32, a2: u32) -> Result<Option<u128>, GeomError> {
    if a1 % 2 == 0 {
        return Err(GeomError::CaseNotCovered(format!("first valuation {a1} must be odd")));
    }
    if a2 % 2 == 1 || a2 > a1 {
        return Ok(None);
    }
    let p = p as u128;
    Ok(Some(if a2 == 0 { 1 } else { p.pow(a2 - 2) * (p * p - 1) }))
}

/// The marker of `horizontal_ledger` anchored at the even cycle's center.
pub fn horizontal_marker(pl: &Placement, odd: usize, even: usize) -> Result<Option<HorizontalMarker>, GeomError> {
    let (c1, c2) = (&pl.cycles[odd], &pl.cycles[even]);
    let Center::Point(x) = c2.center else {
        return Err(GeomError::CaseNotCovered("second cycle must be even".into()));
    };
    Ok(horizontal_ledger(pl.window.p, c1.valuation, c2.valuation)?.map(|beta| HorizontalMarker {
        anchor: x,
        weight: 1,
        incidence: pl.window.neighbors(x).into_iter().map(|k| (k, beta)).collect(),
    }))
}

/// A condition on `b_j(Λ)` for one cycle of a placement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShellCondition {
    /// `Λ` lies in the reduced locus.
    Member,
    /// `b = 0`.
    Boundary,
    /// `b` equals the given value.
    BValue(u32),
    /// `Λ` is not in the reduced locus.
    Outside,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ShellPredicate {
    pub conditions: Vec<(usize, ShellCondition)>,
}

impl ShellPredicate {
    pub fn new(conditions: Vec<(usize, ShellCondition)>) -> Self {
        Self { conditions }
    }

    pub fn matches(&self, pl: &Placement, curve: NodeIdx) -> bool {
        self.conditions.iter().all(|&(i, cond)| {
            let b = pl.b_value(i, curve);
            match cond {
                ShellCondition::Member => b.is_some(),
                ShellCondition::Boundary => b == Some(0),
                ShellCondition::BValue(k) => b == Some(k),
                ShellCondition::Outside => b.is_none(),
            }
        })
    }

    /// Largest curve depth a match can have. Off the branch of at most one
    /// odd cycle, each cycle's distance is at least the depth (even centers
    /// are root points), so every remaining constraint bounds the depth.
    pub fn depth_bound(&self, pl: &Placement) -> Result<u32, GeomError> {
        let bound_of = |i: usize, cond: ShellCondition| -> Option<u32> {
            let r = pl.cycles[i].half();
            let slack = match &pl.cycles[i].center {
                Center::Point(x) => pl.window.depth(*x),
                Center::Subtree { .. } => 0,
            };
            match cond {
                ShellCondition::Member | ShellCondition::Boundary => Some(r + slack),
                ShellCondition::BValue(k) => Some(r.saturating_sub(k) + slack),
                ShellCondition::Outside => None,
            }
        };
        let odd: Vec<Option<usize>> = std::iter::once(None)
            .chain((0..pl.cycles.len()).filter(|&i| pl.cycles[i].is_odd()).map(Some))
            .collect();
        let mut best = 0;
        for excluded in odd {
            let b = self
                .conditions
                .iter()
                .filter(|(i, _)| Some(*i) != excluded)
                .filter_map(|&(i, c)| bound_of(i, c))
                .min()
                .ok_or(GeomError::UnboundedShell)?;
            best = best.max(b);
        }
        Ok(best)
    }
}

/// Number of curves satisfying the predicate. Every match must lie inside
/// the window.
pub fn shell_count(pl: &Placement, pred: &ShellPredicate) -> Result<u128, GeomError> {
    require_radius(pl.window, pred.depth_bound(pl)?)?;
    Ok(pl.window.curves().filter(|&c| pred.matches(pl, c)).count() as u128)
}

/// Curve counts quoted in the computation of all-odd difference-divisor
/// triples, each with its hypotheses and printed expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuotedShell {
    /// `a1 < a2 = a3`: `V(Λ) ∈ B(j3)` with multiplicity 1 in `D(j1)`.
    TopEqualBoundary,
    /// `a1 = a2 < a3`: `V(Λ) ∈ B(j1) ∩ B(j2)` inside `D(j3)`.
    BottomEqualBoundary,
    /// `a1 = a2 < a3`, `a3 ≥ 2a1 − 1`: `b_{j1} = (a1 − 1)/2`, `V(Λ) ∈ B(j2)`.
    BottomEqualCentral,
    /// `a1 = a2 < a3`, `a3 < 2a1 − 1`: `b_{j1} = b_{j3} = (a3 − a1)/2`,
    /// `V(Λ) ∈ B(j2)`.
    BottomEqualMatched,
}

/// `p^e`, replaced by zero when `e` is negative.
fn pz(p: u64, e: i64) -> u128 {
    if e < 0 {
        0
    } else {
        (p as u128).pow(e as u32)
    }
}

impl QuotedShell {
    pub const ALL: [QuotedShell; 4] = [
        QuotedShell::TopEqualBoundary,
        QuotedShell::BottomEqualBoundary,
        QuotedShell::BottomEqualCentral,
        QuotedShell::BottomEqualMatched,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            QuotedShell::TopEqualBoundary => "top-equal-boundary",
            QuotedShell::BottomEqualBoundary => "bottom-equal-boundary",
            QuotedShell::BottomEqualCentral => "bottom-equal-central",
            QuotedShell::BottomEqualMatched => "bottom-equal-matched",
        }
    }

    /// Hypotheses under which the count is stated; the derivation assumes
    /// `a1 > 1` throughout.
    pub fn applies(&self, [a1, a2, a3]: [u32; 3]) -> bool {
        let all_odd = a1 % 2 == 1 && a2 % 2 == 1 && a3 % 2 == 1;
        if !all_odd || a1 < 3 || a1 > a2 || a2 > a3 {
            return false;
        }
        match self {
            QuotedShell::TopEqualBoundary => a1 < a2 && a2 == a3,
            QuotedShell::BottomEqualBoundary => a1 == a2 && a2 < a3,
            QuotedShell::BottomEqualCentral => a1 == a2 && a2 < a3 && a3 + 1 >= 2 * a1,
            QuotedShell::BottomEqualMatched => a1 == a2 && a2 < a3 && a3 + 1 < 2 * a1,
        }
    }

    pub fn predicate(&self, [a1, _, a3]: [u32; 3]) -> ShellPredicate {
        use ShellCondition::*;
        let r = a3.saturating_sub(a1);
        ShellPredicate::new(match self {
            QuotedShell::TopEqualBoundary => vec![(0, Boundary), (1, Member), (2, Boundary)],
            QuotedShell::BottomEqualBoundary => vec![(0, Boundary), (1, Boundary), (2, Member)],
            QuotedShell::BottomEqualCentral => vec![(0, BValue((a1 - 1) / 2)), (1, Boundary), (2, Member)],
            QuotedShell::BottomEqualMatched => vec![(0, BValue(r / 2)), (1, Boundary), (2, BValue(r / 2))],
        })
    }

    /// The printed expression.
    pub fn printed(&self, p: u64, [a1, a2, a3]: [u32; 3]) -> u128 {
        let (a1, a2, a3) = (a1 as i64, a2 as i64, a3 as i64);
        let q = p as u128;
        match self {
            QuotedShell::TopEqualBoundary => {
                (q + 1) * q * pz(p, 2 * ((a2 - a1) / 2 - 1)) * (q.pow(3) - q) * q * pz(p, 4 * ((a1 - 3) / 2))
            }
            QuotedShell::BottomEqualBoundary => {
                (q.pow(3) + 1 - 2 * (q + 1)) * q * pz(p, 4 * ((a1 - 3) / 2))
            }
            QuotedShell::BottomEqualCentral => (q + 1) * pz(p, (a1 - 3) / 2),
            QuotedShell::BottomEqualMatched => {
                let r = a3 - a1;
                (q + 1) * q * pz(p, 2 * (r / 2 - 1)) * (q.pow(3) - q) * q * pz(p, 4 * ((a1 - 1 - r) / 2))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShellCheck {
    pub shell: QuotedShell,
    pub p: u64,
    pub valuations: [u32; 3],
    pub count: u128,
    pub printed: u128,
}

impl ShellCheck {
    pub fn pass(&self) -> bool {
        self.count == self.printed
    }
}

pub fn check_quoted_shell(w: &TreeWindow, shell: QuotedShell, vals: [u32; 3]) -> Result<ShellCheck, GeomError> {
    if !shell.applies(vals) {
        return Err(GeomError::CaseNotCovered(format!("{} at {vals:?}", shell.name())));
    }
    let pl = Placement::all_odd(w, &vals)?;
    Ok(ShellCheck {
        shell,
        p: w.p,
        valuations: vals,
        count: shell_count(&pl, &shell.predicate(vals))?,
        printed: shell.printed(w.p, vals),
    })
}

/// Host cycle for the pairing in `D(j_host)` and its two partners.
fn hosts(vals: [u32; 3]) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    if vals[0] < vals[1] {
        out.push((0, 1, 2));
    }
    if vals[1] < vals[2] {
        out.push((2, 0, 1));
    }
    out
}

/// Radius needed to pair on host `h` with first factor `D(j_h) ∩ D(j_e)`.
pub fn pairing_radius(vals: [u32; 3], h: usize, e: usize) -> u32 {
    let support = [vals[h] / 2, vals[e] / 2];
    // off the branch of one of the two cycles, the other bounds the depth
    support[0].max(support[1]) + 1
}

/// `((D_h ∩ D_e), (D_h ∩ D_f))` computed in `D(j_h)` as
/// `Σ_Λ m_e(Λ)·[m_f(Λ)·(Λ,Λ) + Σ_{Λ' adjacent} m_f(Λ')]`.
pub fn pair_on_host(pl: &Placement, h: usize, e: usize, f: usize) -> Result<i128, GeomError> {
    let w = pl.window;
    let m = |x: usize, c: NodeIdx| -> Result<i128, GeomError> {
        if pl.b_value(h, c).is_none() || pl.b_value(x, c).is_none() {
            return Ok(0);
        }
        Ok(vertical_multiplicity(pl, h, x, c)? as i128)
    };
    let mut total = 0i128;
    for c in w.curves() {
        let me = m(e, c)?;
        if me == 0 {
            continue;
        }
        let mut s = m(f, c)? * self_intersection(pl, h, c)?;
        for n in w.adjacent_curves(c)? {
            s += m(f, n)?;
        }
        total += me * s;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DivisorTriple {
    pub valuations: [u32; 3],
    /// `(host index, value)` for every host the pairing was run on.
    pub by_host: Vec<(usize, BigInt)>,
}

impl DivisorTriple {
    pub fn value(&self) -> &BigInt {
        &self.by_host[0].1
    }

    pub fn hosts_agree(&self) -> bool {
        self.by_host.windows(2).all(|w| w[0].1 == w[1].1)
    }
}

pub fn required_radius(vals: [u32; 3]) -> Result<u32, GeomError> {
    hosts(vals)
        .into_iter()
        .map(|(h, e, _)| pairing_radius(vals, h, e))
        .max()
        .ok_or_else(|| GeomError::CaseNotCovered(format!("all valuations equal: {vals:?}")))
}

/// `(D(j1), D(j2), D(j3))` for perpendicular odd cycles sharing a central
/// curve, computed by divisor calculus in an existing window.
pub fn dtriple_via_divisors_in(w: &TreeWindow, vals: [u32; 3]) -> Result<DivisorTriple, GeomError> {
    if vals.iter().any(|v| v % 2 == 0) || vals[0] > vals[1] || vals[1] > vals[2] {
        return Err(GeomError::InvalidCycle(format!("need sorted odd valuations, got {vals:?}")));
    }
    require_radius(w, required_radius(vals)?)?;
    let pl = Placement::all_odd(w, &vals)?;
    let by_host = hosts(vals)
        .into_iter()
        .map(|(h, e, f)| Ok((h, BigInt::from(pair_on_host(&pl, h, e, f)?))))
        .collect::<Result<Vec<_>, GeomError>>()?;
    Ok(DivisorTriple { valuations: vals, by_host })
}

pub fn dtriple_via_divisors(p: u64, vals: [u32; 3], budget: u64) -> Result<DivisorTriple, GeomError> {
    if !is_odd_prime(p) {
        return Err(GeomError::InvalidPrime(p));
    }
    let w = TreeWindow::build(p, required_radius(vals)?, budget)?;
    dtriple_via_divisors_in(&w, vals)
}
