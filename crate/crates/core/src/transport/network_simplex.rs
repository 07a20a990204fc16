//! Primal network simplex for uncapacitated transportation problems.
//!
//! The spanning tree is stored with parent, thread and successor-count
//! arrays so that each pivot touches only the subtree that is re-hung.
//! Masses are integers, which keeps flow updates exact; the leaving-arc
//! rule keeps the tree strongly feasible so degenerate pivots cannot cycle.

use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum FlowError {
    #[error("supplies and demands have different totals")]
    Unbalanced,
    #[error("cost matrix shape does not match the supports")]
    Shape,
    #[error("no feasible flow exists")]
    Infeasible,
}

const NONE: usize = usize::MAX;
const UP: i64 = 1;
const DOWN: i64 = -1;
const LOWER: i8 = 1;
const TREE: i8 = 0;
const REDUCED_COST_TOL: f64 = 1e-13;

struct Solver<'a> {
    n: usize,
    m: usize,
    costs: &'a [f64],
    /// Artificial arc `k` joins node `k` and the root.
    art_source: Vec<usize>,
    art_target: Vec<usize>,
    art_cost_of: Vec<f64>,
    flow: Vec<i64>,
    state: Vec<i8>,
    pi: Vec<f64>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    pred_dir: Vec<i64>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    dirty_revs: Vec<usize>,
    next_arc: usize,
    block: usize,
    in_arc: usize,
    join: usize,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    delta: i64,
}

impl<'a> Solver<'a> {
    fn real_arcs(&self) -> usize {
        self.n * self.m
    }

    fn source(&self, e: usize) -> usize {
        if e < self.real_arcs() {
            e / self.m
        } else {
            self.art_source[e - self.real_arcs()]
        }
    }

    fn target(&self, e: usize) -> usize {
        if e < self.real_arcs() {
            self.n + e % self.m
        } else {
            self.art_target[e - self.real_arcs()]
        }
    }

    fn cost(&self, e: usize) -> f64 {
        if e < self.real_arcs() {
            self.costs[e]
        } else {
            self.art_cost_of[e - self.real_arcs()]
        }
    }

    fn new(supply: &[i64], demand: &[i64], costs: &'a [f64]) -> Self {
        let (n, m) = (supply.len(), demand.len());
        let nodes = n + m;
        let root = nodes;
        let arcs = n * m;
        let max_cost = costs.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
        let art_cost = (max_cost + 1.0) * nodes as f64;
        let mut s = Solver {
            n,
            m,
            costs,
            art_source: vec![0; nodes],
            art_target: vec![0; nodes],
            art_cost_of: vec![0.0; nodes],
            flow: vec![0; arcs + nodes],
            state: vec![LOWER; arcs + nodes],
            pi: vec![0.0; nodes + 1],
            parent: vec![NONE; nodes + 1],
            pred: vec![NONE; nodes + 1],
            pred_dir: vec![UP; nodes + 1],
            thread: vec![0; nodes + 1],
            rev_thread: vec![0; nodes + 1],
            succ_num: vec![1; nodes + 1],
            last_succ: vec![0; nodes + 1],
            dirty_revs: Vec::new(),
            next_arc: 0,
            block: ((arcs as f64).sqrt().ceil() as usize).max(10).min(arcs.max(1)),
            in_arc: 0,
            join: 0,
            u_in: 0,
            v_in: 0,
            u_out: 0,
            delta: 0,
        };
        s.thread[root] = 0;
        s.rev_thread[0] = root;
        s.succ_num[root] = nodes + 1;
        s.last_succ[root] = root - 1;
        for u in 0..nodes {
            let e = arcs + u;
            let b = if u < n { supply[u] } else { -demand[u - n] };
            s.parent[u] = root;
            s.pred[u] = e;
            s.thread[u] = u + 1;
            s.rev_thread[u + 1] = u;
            s.succ_num[u] = 1;
            s.last_succ[u] = u;
            s.state[e] = TREE;
            if b >= 0 {
                s.pred_dir[u] = UP;
                s.pi[u] = 0.0;
                s.art_source[u] = u;
                s.art_target[u] = root;
                s.flow[e] = b;
                s.art_cost_of[u] = 0.0;
            } else {
                s.pred_dir[u] = DOWN;
                s.pi[u] = art_cost;
                s.art_source[u] = root;
                s.art_target[u] = u;
                s.flow[e] = -b;
                s.art_cost_of[u] = art_cost;
            }
        }
        s
    }

    fn reduced_cost(&self, e: usize) -> f64 {
        self.cost(e) + self.pi[self.source(e)] - self.pi[self.target(e)]
    }

    /// Block search over the real arcs.
    fn find_entering_arc(&mut self) -> bool {
        let arcs = self.real_arcs();
        let mut min = 0.0;
        let mut best = NONE;
        let mut count = self.block;
        let mut e = self.next_arc;
        for _ in 0..arcs {
            if self.state[e] == LOWER {
                let c = self.reduced_cost(e);
                if c < min {
                    let scale = self
                        .cost(e)
                        .abs()
                        .max(self.pi[self.source(e)].abs())
                        .max(self.pi[self.target(e)].abs())
                        .max(1.0);
                    if c < -REDUCED_COST_TOL * scale {
                        min = c;
                        best = e;
                    }
                }
            }
            e += 1;
            if e == arcs {
                e = 0;
            }
            count -= 1;
            if count == 0 {
                if best != NONE {
                    self.in_arc = best;
                    self.next_arc = e;
                    return true;
                }
                count = self.block;
            }
        }
        if best != NONE {
            self.in_arc = best;
            self.next_arc = e;
            return true;
        }
        false
    }

    fn find_join_node(&mut self) {
        let mut u = self.source(self.in_arc);
        let mut v = self.target(self.in_arc);
        while u != v {
            if self.succ_num[u] < self.succ_num[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        self.join = u;
    }

    /// Picks the blocking arc on the cycle closed by the entering arc.
    /// Returns false when the cycle is unbounded.
    fn find_leaving_arc(&mut self) -> bool {
        let first = self.source(self.in_arc);
        let second = self.target(self.in_arc);
        let mut delta = i64::MAX;
        let mut result = 0;
        let mut u = first;
        while u != self.join {
            if self.pred_dir[u] == UP {
                let d = self.flow[self.pred[u]];
                if d < delta {
                    delta = d;
                    self.u_out = u;
                    result = 1;
                }
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != self.join {
            if self.pred_dir[u] == DOWN {
                let d = self.flow[self.pred[u]];
                if d <= delta {
                    delta = d;
                    self.u_out = u;
                    result = 2;
                }
            }
            u = self.parent[u];
        }
        if result == 0 {
            return false;
        }
        if result == 1 {
            self.u_in = first;
            self.v_in = second;
        } else {
            self.u_in = second;
            self.v_in = first;
        }
        self.delta = delta;
        true
    }

    fn change_flow(&mut self) {
        let val = self.delta;
        if val > 0 {
            self.flow[self.in_arc] += val;
            let mut u = self.source(self.in_arc);
            while u != self.join {
                self.flow[self.pred[u]] -= self.pred_dir[u] * val;
                u = self.parent[u];
            }
            let mut u = self.target(self.in_arc);
            while u != self.join {
                self.flow[self.pred[u]] += self.pred_dir[u] * val;
                u = self.parent[u];
            }
        }
        self.state[self.in_arc] = TREE;
        let out = self.pred[self.u_out];
        self.state[out] = LOWER;
    }

    fn update_tree_structure(&mut self) {
        let u_in = self.u_in;
        let v_in = self.v_in;
        let u_out = self.u_out;
        let join = self.join;
        let old_rev_thread = self.rev_thread[u_out];
        let old_succ_num = self.succ_num[u_out];
        let old_last_succ = self.last_succ[u_out];
        let v_out = self.parent[u_out];
        let in_dir = if u_in == self.source(self.in_arc) { UP } else { DOWN };

        if u_in == u_out {
            self.parent[u_in] = v_in;
            self.pred[u_in] = self.in_arc;
            self.pred_dir[u_in] = in_dir;
            if self.thread[v_in] != u_out {
                let mut after = self.thread[old_last_succ];
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
                after = self.thread[v_in];
                self.thread[v_in] = u_out;
                self.rev_thread[u_out] = v_in;
                self.thread[old_last_succ] = after;
                self.rev_thread[after] = old_last_succ;
            }
        } else {
            // when old_rev_thread == v_in, join and v_out coincide
            let thread_continue = if old_rev_thread == v_in {
                self.thread[old_last_succ]
            } else {
                self.thread[v_in]
            };
            // re-hang the stem nodes between u_in and u_out
            let mut stem = u_in;
            let mut par_stem = v_in;
            let mut last = self.last_succ[u_in];
            let mut after = self.thread[last];
            self.thread[v_in] = u_in;
            self.dirty_revs.clear();
            self.dirty_revs.push(v_in);
            while stem != u_out {
                let next_stem = self.parent[stem];
                self.thread[last] = next_stem;
                self.dirty_revs.push(last);
                let before = self.rev_thread[stem];
                self.thread[before] = after;
                self.rev_thread[after] = before;
                self.parent[stem] = par_stem;
                par_stem = stem;
                stem = next_stem;
                last = if self.last_succ[stem] == self.last_succ[par_stem] {
                    self.rev_thread[par_stem]
                } else {
                    self.last_succ[stem]
                };
                after = self.thread[last];
            }
            self.parent[u_out] = par_stem;
            self.thread[last] = thread_continue;
            self.rev_thread[thread_continue] = last;
            self.last_succ[u_out] = last;
            if old_rev_thread != v_in {
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
            }
            for k in 0..self.dirty_revs.len() {
                let u = self.dirty_revs[k];
                let t = self.thread[u];
                self.rev_thread[t] = u;
            }
            // walk the reversed stem from u_out back to u_in
            let mut tmp_sc = 0usize;
            let tmp_ls = self.last_succ[u_out];
            let mut u = u_out;
            while u != u_in {
                let p = self.parent[u];
                self.pred[u] = self.pred[p];
                self.pred_dir[u] = -self.pred_dir[p];
                tmp_sc = tmp_sc + self.succ_num[u] - self.succ_num[p];
                self.succ_num[u] = tmp_sc;
                self.last_succ[p] = tmp_ls;
                u = p;
            }
            self.pred[u_in] = self.in_arc;
            self.pred_dir[u_in] = in_dir;
            self.succ_num[u_in] = old_succ_num;
        }

        let up_limit_out = if self.last_succ[join] == v_in { join } else { NONE };
        let last_succ_out = self.last_succ[u_out];
        let mut u = v_in;
        while u != NONE && self.last_succ[u] == v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }
        if join != old_rev_thread && v_in != old_rev_thread {
            let mut u = v_out;
            while u != up_limit_out && u != NONE && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = old_rev_thread;
                u = self.parent[u];
            }
        } else if last_succ_out != old_last_succ {
            let mut u = v_out;
            while u != up_limit_out && u != NONE && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = last_succ_out;
                u = self.parent[u];
            }
        }
        let mut u = v_in;
        while u != join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u];
        }
        let mut u = v_out;
        while u != join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u];
        }
    }

    fn update_potential(&mut self) {
        let u_in = self.u_in;
        let sigma = self.pi[self.v_in] - self.pi[u_in] - self.pred_dir[u_in] as f64 * self.cost(self.in_arc);
        let end = self.thread[self.last_succ[u_in]];
        let mut u = u_in;
        while u != end {
            self.pi[u] += sigma;
            u = self.thread[u];
        }
    }

    fn run(&mut self) -> Result<(), FlowError> {
        while self.find_entering_arc() {
            self.find_join_node();
            if !self.find_leaving_arc() {
                return Err(FlowError::Infeasible);
            }
            self.change_flow();
            self.update_tree_structure();
            self.update_potential();
        }
        let arcs = self.real_arcs();
        if self.flow[arcs..].iter().any(|&f| f != 0) {
            return Err(FlowError::Infeasible);
        }
        Ok(())
    }
}

/// Optimal flow of a transportation problem from `supply` (rows of `costs`)
/// to `demand` (columns), returned as a row-major matrix of integer masses.
pub fn optimal_flow(supply: &[i64], demand: &[i64], costs: &[f64]) -> Result<Vec<i64>, FlowError> {
    if costs.len() != supply.len() * demand.len() {
        return Err(FlowError::Shape);
    }
    if supply.iter().sum::<i64>() != demand.iter().sum::<i64>() {
        return Err(FlowError::Unbalanced);
    }
    if supply.iter().chain(demand).any(|&b| b < 0) {
        return Err(FlowError::Infeasible);
    }
    if supply.is_empty() || demand.is_empty() {
        return Ok(Vec::new());
    }
    let mut solver = Solver::new(supply, demand, costs);
    solver.run()?;
    let arcs = solver.real_arcs();
    solver.flow.truncate(arcs);
    Ok(solver.flow)
}

/// Minimum of `sum c_ij f_ij` over transport plans with the given integer masses.
pub fn transport_cost(supply: &[i64], demand: &[i64], costs: &[f64]) -> Result<f64, FlowError> {
    let flow = optimal_flow(supply, demand, costs)?;
    Ok(flow
        .iter()
        .zip(costs)
        .filter(|(&f, _)| f != 0)
        .map(|(&f, &c)| f as f64 * c)
        .sum())
}
