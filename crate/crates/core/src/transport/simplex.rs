//! Primal simplex on the complete bipartite transportation network.
//!
//! The basis is a spanning tree with `m + k - 1` arcs. After each pivot the potentials
//! of the re-hung subtree are recomputed; the entering arc is the most negative reduced cost
//! (dense pricing) or the best arc of the first improving block (block pricing).

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pricing {
    /// Full scan over a precomputed cost matrix.
    Dense,
    /// Block search; costs are evaluated on demand for very large problems.
    Block,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransportSolution {
    pub objective: f64,
    /// `(row, column, flow)` for every basic arc with positive flow.
    pub flows: Vec<(usize, usize, f64)>,
    pub pivots: usize,
}

#[derive(Clone, Copy, Debug)]
struct Arc {
    row: usize,
    col: usize,
    flow: f64,
}

struct Tree {
    m: usize,
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
    potential: Vec<f64>,
    parent_arc: Vec<usize>,
    depth: Vec<usize>,
    stack: Vec<usize>,
    stamp: Vec<usize>,
    epoch: usize,
}

const NONE: usize = usize::MAX;

/// Largest problem whose cost matrix is cached.
const CACHE_LIMIT: usize = 1 << 22;

impl Tree {
    fn other(&self, arc: usize, node: usize) -> usize {
        let a = self.arcs[arc];
        if node == a.row {
            self.m + a.col
        } else {
            a.row
        }
    }

    /// Recomputes parent pointers, depths and potentials of the subtree hanging from
    /// `root`, whose own entries must already be correct.
    fn rebuild_from<C: Fn(usize, usize) -> f64>(&mut self, root: usize, cost: &C) {
        self.epoch += 1;
        let epoch = self.epoch;
        self.stamp[root] = epoch;
        if self.parent_arc[root] != NONE {
            let up = self.other(self.parent_arc[root], root);
            self.stamp[up] = epoch;
        }
        self.stack.clear();
        self.stack.push(root);
        while let Some(node) = self.stack.pop() {
            for idx in 0..self.adj[node].len() {
                let arc = self.adj[node][idx];
                let next = self.other(arc, node);
                if self.stamp[next] == epoch {
                    continue;
                }
                self.stamp[next] = epoch;
                let a = self.arcs[arc];
                let c = cost(a.row, a.col);
                // u_row + v_col = c on basic arcs
                self.potential[next] = c - self.potential[node];
                self.parent_arc[next] = arc;
                self.depth[next] = self.depth[node] + 1;
                self.stack.push(next);
            }
        }
    }

    fn reduced(&self, row: usize, col: usize, c: f64) -> f64 {
        c - self.potential[row] - self.potential[self.m + col]
    }
}

/// Solves `min Σ c_ij τ_ij` subject to row sums `supply` and column sums `demand`.
///
/// `row_keys` and `col_keys` order the northwest-corner start; nearby keys should mean
/// cheap arcs. Supplies and demands must be nonnegative with equal totals.
pub fn solve_transport<C: Fn(usize, usize) -> f64>(
    supply: &[f64],
    demand: &[f64],
    row_keys: &[f64],
    col_keys: &[f64],
    cost: C,
    pricing: Pricing,
) -> Result<TransportSolution> {
    let (m, k) = (supply.len(), demand.len());
    if m == 0 || k == 0 {
        return Ok(TransportSolution {
            objective: 0.0,
            flows: Vec::new(),
            pivots: 0,
        });
    }
    if pricing == Pricing::Dense || m * k <= CACHE_LIMIT {
        let matrix: Vec<f64> = (0..m * k).map(|e| cost(e / k, e % k)).collect();
        run(supply, demand, row_keys, col_keys, |i, j| matrix[i * k + j], pricing)
    } else {
        run(supply, demand, row_keys, col_keys, cost, pricing)
    }
}

fn order(keys: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
    idx
}

fn northwest(supply: &[f64], demand: &[f64], rows: &[usize], cols: &[usize]) -> Vec<Arc> {
    let (m, k) = (supply.len(), demand.len());
    let total = supply.iter().sum::<f64>().max(demand.iter().sum());
    let tol = total * 1e-15;
    let mut a: Vec<f64> = supply.to_vec();
    let mut b: Vec<f64> = demand.to_vec();
    let mut arcs = Vec::with_capacity(m + k - 1);
    let (mut p, mut q) = (0, 0);
    loop {
        let (i, j) = (rows[p], cols[q]);
        let last = p == m - 1 && q == k - 1;
        let x = if last { a[i].max(0.0) } else { a[i].min(b[j]).max(0.0) };
        arcs.push(Arc { row: i, col: j, flow: x });
        a[i] -= x;
        b[j] -= x;
        if last {
            break;
        }
        if p == m - 1 {
            q += 1;
        } else if q == k - 1 || a[i] <= tol {
            p += 1;
        } else {
            q += 1;
        }
    }
    arcs
}

fn run<C: Fn(usize, usize) -> f64>(
    supply: &[f64],
    demand: &[f64],
    row_keys: &[f64],
    col_keys: &[f64],
    cost: C,
    pricing: Pricing,
) -> Result<TransportSolution> {
    let (m, k) = (supply.len(), demand.len());
    let n = m + k;
    let arcs = northwest(supply, demand, &order(row_keys), &order(col_keys));
    let mut adj = vec![Vec::new(); n];
    for (idx, a) in arcs.iter().enumerate() {
        adj[a.row].push(idx);
        adj[m + a.col].push(idx);
    }
    let mut tree = Tree {
        m,
        arcs,
        adj,
        potential: vec![0.0; n],
        parent_arc: vec![NONE; n],
        depth: vec![0; n],
        stack: Vec::with_capacity(n),
        stamp: vec![0; n],
        epoch: 0,
    };
    tree.rebuild_from(0, &cost);

    let edges = m * k;
    let block = match pricing {
        Pricing::Dense => edges,
        Pricing::Block => ((edges as f64).sqrt().ceil() as usize).max(64).min(edges),
    };
    let max_pivots = 200 * n + 10_000;
    let mut cursor = 0usize;
    let mut pivots = 0usize;
    let mut path: Vec<usize> = Vec::new();
    let mut tail: Vec<usize> = Vec::new();

    loop {
        // pricing
        let mut best: Option<(usize, usize, f64)> = None;
        let mut scanned = 0usize;
        while scanned < edges {
            let end = (scanned + block).min(edges);
            while scanned < end {
                let e = cursor;
                cursor += 1;
                if cursor == edges {
                    cursor = 0;
                }
                scanned += 1;
                let (i, j) = (e / k, e % k);
                let c = cost(i, j);
                let r = tree.reduced(i, j, c);
                if r < -1e-11 * c.abs().max(1.0) && best.map_or(true, |b| r < b.2) {
                    best = Some((i, j, r));
                }
            }
            if best.is_some() {
                break;
            }
        }
        let Some((row, col, _)) = best else { break };
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::SolverStalled {
                iterations: pivots,
                residual: best.map_or(0.0, |b| -b.2),
            });
        }

        // cycle through the tree path from the column node back to the row node
        let (mut a, mut b) = (row, m + col);
        path.clear();
        tail.clear();
        while a != b {
            if tree.depth[b] >= tree.depth[a] {
                let arc = tree.parent_arc[b];
                path.push(arc);
                b = tree.other(arc, b);
            } else {
                let arc = tree.parent_arc[a];
                tail.push(arc);
                a = tree.other(arc, a);
            }
        }
        let column_side = path.len();
        path.extend(tail.iter().rev());

        let mut theta = f64::INFINITY;
        let mut leaving = 0;
        for (pos, &arc) in path.iter().enumerate().step_by(2) {
            if tree.arcs[arc].flow < theta {
                theta = tree.arcs[arc].flow;
                leaving = pos;
            }
        }
        for (pos, &arc) in path.iter().enumerate() {
            let f = &mut tree.arcs[arc].flow;
            if pos % 2 == 0 {
                *f = (*f - theta).max(0.0);
            } else {
                *f += theta;
            }
        }
        let slot = path[leaving];
        let old = tree.arcs[slot];
        tree.adj[old.row].retain(|&x| x != slot);
        tree.adj[m + old.col].retain(|&x| x != slot);
        tree.arcs[slot] = Arc { row, col, flow: theta };
        tree.adj[row].push(slot);
        tree.adj[m + col].push(slot);
        // the endpoint of the entering arc on the far side of the leaving arc is
        // re-hung below the other endpoint
        let (root, up) = if leaving < column_side { (m + col, row) } else { (row, m + col) };
        tree.parent_arc[root] = slot;
        tree.depth[root] = tree.depth[up] + 1;
        tree.potential[root] = cost(row, col) - tree.potential[up];
        tree.rebuild_from(root, &cost);
    }

    let flows: Vec<(usize, usize, f64)> = tree
        .arcs
        .iter()
        .filter(|a| a.flow > 0.0)
        .map(|a| (a.row, a.col, a.flow))
        .collect();
    let objective = flows.iter().map(|&(i, j, f)| f * cost(i, j)).sum();
    Ok(TransportSolution {
        objective,
        flows,
        pivots,
    })
}
