//! Sparse transportation linear programs.
//!
//! Minimises `sum C_ij λ_ij` subject to `sum_j λ_ij = p_i`, `sum_i λ_ij = q_j`
//! and `λ >= 0`, where only the pairs of a [`SparsityPattern`] may carry mass.
//! The solver is a primal network simplex on the bipartite graph rows → cols
//! with an artificial root node:
//!
//! * the initial basis is built greedily from the pattern (highest warm-start
//!   value first, then lowest cost), leftovers are routed through artificial
//!   arcs to the root;
//! * phase 1 drives the artificial flow out; if more than
//!   [`INFEASIBILITY_TOL`] remains the pattern admits no feasible coupling;
//! * phase 2 optimises the real costs with the artificial arcs frozen.
//!
//! Entering arcs follow Dantzig's rule (most negative reduced cost, lowest arc
//! index on ties). The leaving arc is the last blocking arc met when walking
//! the pivot cycle from its apex, which keeps degenerate pivots from cycling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Primal feasibility tolerance on the marginal sums.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// A pivot is taken only for reduced costs below `-OPTIMALITY_TOL`.
pub const OPTIMALITY_TOL: f64 = 1e-10;
/// Phase-1 artificial flow above this marks the pattern infeasible.
pub const INFEASIBILITY_TOL: f64 = 1e-10;
/// Allowed imbalance between total row and column weight.
pub const BALANCE_TOL: f64 = 1e-12;

/// Admissible `(row, col)` pairs, sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparsityPattern {
    n_rows: usize,
    n_cols: usize,
    pairs: Vec<(usize, usize)>,
    #[serde(skip)]
    row_adj: Vec<Vec<usize>>,
    #[serde(skip)]
    col_adj: Vec<Vec<usize>>,
}

impl SparsityPattern {
    pub fn new(n_rows: usize, n_cols: usize, mut pairs: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| i >= n_rows || j >= n_cols) {
            return Err(Error::domain(format!(
                "pair ({i}, {j}) outside a {n_rows}x{n_cols} problem"
            )));
        }
        pairs.sort_unstable();
        pairs.dedup();
        let mut row_adj = vec![Vec::new(); n_rows];
        let mut col_adj = vec![Vec::new(); n_cols];
        for (k, &(i, j)) in pairs.iter().enumerate() {
            row_adj[i].push(k);
            col_adj[j].push(k);
        }
        Ok(Self {
            n_rows,
            n_cols,
            pairs,
            row_adj,
            col_adj,
        })
    }

    /// Every row paired with every column, row-major.
    pub fn dense(n_rows: usize, n_cols: usize) -> Self {
        let pairs = (0..n_rows)
            .flat_map(|i| (0..n_cols).map(move |j| (i, j)))
            .collect();
        Self::new(n_rows, n_cols, pairs).expect("dense pattern is in range")
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Pair indices in row `i`.
    pub fn row(&self, i: usize) -> &[usize] {
        &self.row_adj[i]
    }

    /// Pair indices in column `j`.
    pub fn col(&self, j: usize) -> &[usize] {
        &self.col_adj[j]
    }

    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        self.pairs.binary_search(&(i, j)).ok()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.position(i, j).is_some()
    }

    /// Every positive-weight row and column has at least one pair.
    pub fn covers(&self, p: &[f64], q: &[f64]) -> bool {
        p.iter()
            .enumerate()
            .all(|(i, &w)| w <= 0.0 || !self.row_adj[i].is_empty())
            && q.iter()
                .enumerate()
                .all(|(j, &w)| w <= 0.0 || !self.col_adj[j].is_empty())
    }

    /// Whether every pair of `self` is also in `other`.
    pub fn is_subset_of(&self, other: &SparsityPattern) -> bool {
        self.pairs.iter().all(|&(i, j)| other.contains(i, j))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportationProblem {
    row_weights: Vec<f64>,
    col_weights: Vec<f64>,
    costs: Vec<f64>,
}

impl TransportationProblem {
    /// `costs[k]` belongs to the `k`-th pair of the pattern it is solved on.
    pub fn new(row_weights: Vec<f64>, col_weights: Vec<f64>, costs: Vec<f64>) -> Result<Self> {
        check_weights(&row_weights, &col_weights)?;
        if let Some(k) = costs.iter().position(|c| !c.is_finite()) {
            return Err(Error::domain(format!("cost of pair {k} is not finite")));
        }
        Ok(Self {
            row_weights,
            col_weights,
            costs,
        })
    }

    pub fn row_weights(&self) -> &[f64] {
        &self.row_weights
    }

    pub fn col_weights(&self) -> &[f64] {
        &self.col_weights
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }
}

fn check_weights(p: &[f64], q: &[f64]) -> Result<f64> {
    if let Some(w) = p.iter().chain(q).find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::domain(format!("invalid weight {w}")));
    }
    let sp: f64 = p.iter().sum();
    let sq: f64 = q.iter().sum();
    if (sp - sq).abs() > BALANCE_TOL * sp.max(sq).max(1.0) {
        return Err(Error::domain(format!(
            "unbalanced marginals: row total {sp}, column total {sq}"
        )));
    }
    Ok(sp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    /// Satisfies the constraints; optimality not claimed.
    Feasible,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSolution {
    /// One value per pattern pair.
    pub values: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    pub pivots: usize,
}

impl CouplingSolution {
    fn infeasible(len: usize, pivots: usize) -> Self {
        Self {
            values: vec![0.0; len],
            objective: f64::INFINITY,
            status: SolveStatus::Infeasible,
            pivots,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn evaluate_objective(&self, costs: &[f64]) -> f64 {
        self.values.iter().zip(costs).map(|(v, c)| v * c).sum()
    }
}

/// Largest absolute deviation of the row and column sums from `p` and `q`.
pub fn marginal_violation(values: &[f64], pattern: &SparsityPattern, p: &[f64], q: &[f64]) -> f64 {
    let mut rows = vec![0.0; pattern.n_rows()];
    let mut cols = vec![0.0; pattern.n_cols()];
    for (&(i, j), &v) in pattern.pairs().iter().zip(values) {
        rows[i] += v;
        cols[j] += v;
    }
    rows.iter()
        .zip(p)
        .chain(cols.iter().zip(q))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// The product coupling `λ_ij = p_i q_j / S` on the dense pattern.
pub fn product_feasible(p: &[f64], q: &[f64]) -> Result<CouplingSolution> {
    let total = check_weights(p, q)?;
    if total <= 0.0 {
        return Err(Error::domain("zero total mass"));
    }
    let values = p
        .iter()
        .flat_map(|&pi| q.iter().map(move |&qj| pi * qj / total))
        .collect();
    Ok(CouplingSolution {
        values,
        objective: 0.0,
        status: SolveStatus::Feasible,
        pivots: 0,
    })
}

/// Optimal coupling restricted to `pattern`.
pub fn solve_transportation(
    problem: &TransportationProblem,
    pattern: &SparsityPattern,
) -> Result<CouplingSolution> {
    solve_inner(problem, pattern, None)
}

/// As [`solve_transportation`], seeding the initial basis from a feasible
/// (or nearly feasible) coupling on the same pattern.
pub fn solve_transportation_warm(
    problem: &TransportationProblem,
    pattern: &SparsityPattern,
    warm: &[f64],
) -> Result<CouplingSolution> {
    if warm.len() != pattern.len() {
        return Err(Error::DimensionMismatch {
            left: warm.len(),
            right: pattern.len(),
        });
    }
    solve_inner(problem, pattern, Some(warm))
}

/// Whether any nonnegative coupling with marginals `p`, `q` fits `pattern`.
pub fn check_feasible(p: &[f64], q: &[f64], pattern: &SparsityPattern) -> bool {
    if check_shape(p, q, pattern).is_err() || check_weights(p, q).is_err() {
        return false;
    }
    if !pattern.covers(p, q) {
        return false;
    }
    let costs = vec![0.0; pattern.len()];
    let mut net = Network::new(p, q, pattern, &costs);
    net.greedy_basis(None);
    matches!(net.phase_one(), Ok(true))
}

fn check_shape(p: &[f64], q: &[f64], pattern: &SparsityPattern) -> Result<()> {
    if p.len() != pattern.n_rows() {
        return Err(Error::DimensionMismatch {
            left: p.len(),
            right: pattern.n_rows(),
        });
    }
    if q.len() != pattern.n_cols() {
        return Err(Error::DimensionMismatch {
            left: q.len(),
            right: pattern.n_cols(),
        });
    }
    Ok(())
}

fn solve_inner(
    problem: &TransportationProblem,
    pattern: &SparsityPattern,
    warm: Option<&[f64]>,
) -> Result<CouplingSolution> {
    let (p, q) = (problem.row_weights(), problem.col_weights());
    check_shape(p, q, pattern)?;
    if problem.costs().len() != pattern.len() {
        return Err(Error::DimensionMismatch {
            left: problem.costs().len(),
            right: pattern.len(),
        });
    }
    if !pattern.covers(p, q) {
        return Ok(CouplingSolution::infeasible(pattern.len(), 0));
    }
    let mut net = Network::new(p, q, pattern, problem.costs());
    net.greedy_basis(warm);
    if !net.phase_one()? {
        log::debug!("phase 1 left artificial flow {}", net.artificial_flow());
        return Ok(CouplingSolution::infeasible(pattern.len(), net.pivots));
    }
    net.phase_two()?;
    let values = net.final_flows()?;
    let objective = values.iter().zip(problem.costs()).map(|(v, c)| v * c).sum();
    Ok(CouplingSolution {
        values,
        objective,
        status: SolveStatus::Optimal,
        pivots: net.pivots,
    })
}

const NONE: usize = usize::MAX;

/// Spanning-tree network simplex state.
///
/// Nodes `0..m` are rows, `m..m+n` columns and `m+n` the root. Arcs `0..E`
/// are the pattern pairs; arc `E + v` is the artificial arc of node `v`.
struct Network {
    n_arcs_real: usize,
    root: usize,
    tail: Vec<usize>,
    head: Vec<usize>,
    real_cost: Vec<f64>,
    cost: Vec<f64>,
    flow: Vec<f64>,
    cap: Vec<f64>,
    in_tree: Vec<bool>,
    /// Node supply: `p_i` for rows, `-q_j` for columns.
    balance: Vec<f64>,
    tree_adj: Vec<Vec<usize>>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    depth: Vec<usize>,
    pot: Vec<f64>,
    preorder: Vec<usize>,
    enter_artificial: bool,
    pivots: usize,
    max_pivots: usize,
}

impl Network {
    fn new(p: &[f64], q: &[f64], pattern: &SparsityPattern, costs: &[f64]) -> Self {
        let m = p.len();
        let n = q.len();
        let nodes = m + n + 1;
        let root = m + n;
        let e = pattern.len();
        let total = e + m + n;
        let mut tail = Vec::with_capacity(total);
        let mut head = Vec::with_capacity(total);
        for &(i, j) in pattern.pairs() {
            tail.push(i);
            head.push(m + j);
        }
        // artificial arcs, natural orientation: rows -> root, root -> cols
        for v in 0..m + n {
            if v < m {
                tail.push(v);
                head.push(root);
            } else {
                tail.push(root);
                head.push(v);
            }
        }
        let mut balance: Vec<f64> = p.iter().copied().chain(q.iter().map(|w| -w)).collect();
        balance.push(0.0);
        let mut real_cost = costs.to_vec();
        real_cost.extend(std::iter::repeat_n(0.0, m + n));
        Self {
            n_arcs_real: e,
            root,
            tail,
            head,
            real_cost,
            cost: vec![0.0; total],
            flow: vec![0.0; total],
            cap: vec![f64::INFINITY; total],
            in_tree: vec![false; total],
            balance,
            tree_adj: vec![Vec::new(); nodes],
            parent: vec![NONE; nodes],
            pred: vec![NONE; nodes],
            depth: vec![0; nodes],
            pot: vec![0.0; nodes],
            preorder: Vec::with_capacity(nodes),
            enter_artificial: true,
            pivots: 0,
            max_pivots: 1000 + 50 * total,
        }
    }

    fn n_nodes(&self) -> usize {
        self.root + 1
    }

    fn is_artificial(&self, a: usize) -> bool {
        a >= self.n_arcs_real
    }

    /// Greedy spanning tree: each component of the greedy forest keeps at
    /// most one node with leftover supply or demand, which is linked to the
    /// root by its artificial arc.
    fn greedy_basis(&mut self, warm: Option<&[f64]>) {
        let e = self.n_arcs_real;
        let mut order: Vec<usize> = (0..e).collect();
        let costs = &self.real_cost;
        match warm {
            Some(w) => order.sort_by(|&a, &b| {
                w[b].total_cmp(&w[a])
                    .then(costs[a].total_cmp(&costs[b]))
                    .then(a.cmp(&b))
            }),
            None => order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b))),
        }
        let nodes = self.root;
        let mut residual: Vec<f64> = self.balance[..nodes].iter().map(|b| b.abs()).collect();
        let mut uf = UnionFind::new(nodes);
        for a in order {
            let (u, v) = (self.tail[a], self.head[a]);
            if residual[u] > 0.0 && residual[v] > 0.0 {
                let f = residual[u].min(residual[v]);
                if residual[u] <= residual[v] {
                    residual[v] -= residual[u];
                    residual[u] = 0.0;
                } else {
                    residual[u] -= residual[v];
                    residual[v] = 0.0;
                }
                self.flow[a] = f;
                self.add_tree_arc(a);
                uf.union(u, v);
            }
        }
        // representative node of every component: its leftover node if any,
        // else its lowest index
        let mut chosen = vec![NONE; nodes];
        for v in 0..nodes {
            let r = uf.find(v);
            if residual[v] > 0.0 || chosen[r] == NONE {
                chosen[r] = v;
            }
        }
        for v in 0..nodes {
            if uf.find(v) != v {
                continue;
            }
            let w = chosen[v];
            let a = e + w;
            if residual[w] > 0.0 {
                // natural orientation carries the leftover towards/away from root
                self.flow[a] = residual[w];
            } else {
                // zero flow arcs in the tree point away from the root
                self.tail[a] = self.root;
                self.head[a] = w;
            }
            self.add_tree_arc(a);
        }
        self.rebuild_tree();
    }

    fn add_tree_arc(&mut self, a: usize) {
        self.in_tree[a] = true;
        let (u, v) = (self.tail[a], self.head[a]);
        self.tree_adj[u].push(a);
        self.tree_adj[v].push(a);
    }

    fn remove_tree_arc(&mut self, a: usize) {
        self.in_tree[a] = false;
        for x in [self.tail[a], self.head[a]] {
            let adj = &mut self.tree_adj[x];
            let pos = adj
                .iter()
                .position(|&b| b == a)
                .expect("tree arc registered");
            adj.remove(pos);
        }
    }

    /// Recomputes parents, depths, potentials and the preorder from the tree
    /// adjacency.
    fn rebuild_tree(&mut self) {
        self.preorder.clear();
        self.parent[self.root] = NONE;
        self.pred[self.root] = NONE;
        self.depth[self.root] = 0;
        self.pot[self.root] = 0.0;
        let mut stack = vec![self.root];
        while let Some(u) = stack.pop() {
            self.preorder.push(u);
            for k in 0..self.tree_adj[u].len() {
                let a = self.tree_adj[u][k];
                if a == self.pred[u] {
                    continue;
                }
                let v = if self.tail[a] == u {
                    self.head[a]
                } else {
                    self.tail[a]
                };
                self.parent[v] = u;
                self.pred[v] = a;
                self.depth[v] = self.depth[u] + 1;
                // reduced cost c + pot[tail] - pot[head] vanishes on tree arcs
                self.pot[v] = if self.tail[a] == u {
                    self.pot[u] + self.cost[a]
                } else {
                    self.pot[u] - self.cost[a]
                };
                stack.push(v);
            }
        }
        debug_assert_eq!(
            self.preorder.len(),
            self.n_nodes(),
            "basis is not a spanning tree"
        );
    }

    fn reduced_cost(&self, a: usize) -> f64 {
        self.cost[a] + self.pot[self.tail[a]] - self.pot[self.head[a]]
    }

    /// Most negative reduced cost among non-tree arcs, lowest index on ties.
    fn select_entering(&self) -> Option<usize> {
        let limit = if self.enter_artificial {
            self.tail.len()
        } else {
            self.n_arcs_real
        };
        let mut best = -OPTIMALITY_TOL;
        let mut entering = None;
        for a in 0..limit {
            if self.in_tree[a] {
                continue;
            }
            let rc = self.reduced_cost(a);
            if rc < best {
                best = rc;
                entering = Some(a);
            }
        }
        entering
    }

    fn pivot(&mut self, entering: usize) -> Result<()> {
        let (u, v) = (self.tail[entering], self.head[entering]);
        // climb to the apex, remembering (arc, child) along both paths
        let (mut x, mut y) = (u, v);
        let mut up_u = Vec::new();
        let mut up_v = Vec::new();
        while self.depth[x] > self.depth[y] {
            up_u.push((self.pred[x], x));
            x = self.parent[x];
        }
        while self.depth[y] > self.depth[x] {
            up_v.push((self.pred[y], y));
            y = self.parent[y];
        }
        while x != y {
            up_u.push((self.pred[x], x));
            x = self.parent[x];
            up_v.push((self.pred[y], y));
            y = self.parent[y];
        }

        // Walk apex -> u (downwards), the entering arc, then v -> apex
        // (upwards); `forward` means the arc's flow increases.
        let mut cycle: Vec<(usize, bool)> = Vec::with_capacity(up_u.len() + up_v.len() + 1);
        for &(a, child) in up_u.iter().rev() {
            cycle.push((a, self.head[a] == child));
        }
        cycle.push((entering, true));
        for &(a, child) in &up_v {
            cycle.push((a, self.tail[a] == child));
        }

        let mut delta = f64::INFINITY;
        let mut leaving = NONE;
        for &(a, forward) in &cycle {
            let r = if forward {
                self.cap[a] - self.flow[a]
            } else {
                self.flow[a]
            };
            let r = r.max(0.0);
            if r <= delta {
                delta = r;
                leaving = a;
            }
        }
        if !delta.is_finite() {
            return Err(Error::Internal("unbounded pivot cycle".into()));
        }
        if delta > 0.0 {
            for &(a, forward) in &cycle {
                if forward {
                    self.flow[a] += delta;
                } else {
                    self.flow[a] = (self.flow[a] - delta).max(0.0);
                }
            }
        }
        if leaving == entering {
            // bounded entering arc saturated; basis unchanged
            return Ok(());
        }
        if !self.is_artificial(leaving) || self.flow[leaving] < 1e-300 {
            self.flow[leaving] = 0.0;
        }
        self.remove_tree_arc(leaving);
        self.add_tree_arc(entering);
        self.rebuild_tree();
        Ok(())
    }

    fn run(&mut self, stop_when_clean: bool) -> Result<()> {
        loop {
            if stop_when_clean && self.artificial_flow() <= INFEASIBILITY_TOL * 1e-3 {
                return Ok(());
            }
            let Some(a) = self.select_entering() else {
                return Ok(());
            };
            self.pivots += 1;
            if self.pivots > self.max_pivots {
                return Err(Error::IterationLimit(self.max_pivots));
            }
            log::trace!("pivot {}: entering arc {a}", self.pivots);
            self.pivot(a)?;
        }
    }

    fn artificial_flow(&self) -> f64 {
        self.flow[self.n_arcs_real..].iter().sum()
    }

    /// Returns whether the artificial flow could be driven below tolerance.
    fn phase_one(&mut self) -> Result<bool> {
        for a in 0..self.cost.len() {
            self.cost[a] = if self.is_artificial(a) { 1.0 } else { 0.0 };
        }
        self.enter_artificial = true;
        self.rebuild_tree();
        self.run(true)?;
        Ok(self.artificial_flow() <= INFEASIBILITY_TOL)
    }

    fn phase_two(&mut self) -> Result<()> {
        self.cost.copy_from_slice(&self.real_cost);
        for a in self.n_arcs_real..self.cap.len() {
            self.cap[a] = self.flow[a];
        }
        self.enter_artificial = false;
        self.rebuild_tree();
        self.run(false)
    }

    /// Tree flows recomputed from the node balances, so that accumulated
    /// rounding from the pivots does not leak into the marginals.
    fn final_flows(&mut self) -> Result<Vec<f64>> {
        let mut sub = self.balance.clone();
        let mut flows = vec![0.0; self.tail.len()];
        for &v in self.preorder.iter().rev() {
            if v == self.root {
                continue;
            }
            let a = self.pred[v];
            let f = if self.tail[a] == v { sub[v] } else { -sub[v] };
            flows[a] = f;
            let parent = self.parent[v];
            sub[parent] += sub[v];
        }
        let scale = self.balance.iter().fold(0.0f64, |m, b| m.max(b.abs()));
        let mut out = flows[..self.n_arcs_real].to_vec();
        for (a, f) in out.iter_mut().enumerate() {
            if *f < 0.0 {
                if *f < -FEASIBILITY_TOL * scale.max(1.0) {
                    return Err(Error::Internal(format!(
                        "basis of arc {a} recomputes to negative flow {f}"
                    )));
                }
                *f = 0.0;
            }
        }
        Ok(out)
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the smaller index as representative
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}
