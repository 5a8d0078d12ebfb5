//! Vertex and edge connectivity by unit-capacity max-flow.

use std::collections::VecDeque;

/// Residual network with adjacency-list arcs; `arcs[2i] / arcs[2i+1]` are a
/// forward/backward pair.
struct FlowNet {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<u32>,
}

impl FlowNet {
    fn new(nodes: usize) -> Self {
        Self {
            head: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
        }
    }

    fn arc(&mut self, from: usize, to: usize, cap: u32, back_cap: u32) {
        self.head[from].push(self.to.len());
        self.to.push(to);
        self.cap.push(cap);
        self.head[to].push(self.to.len());
        self.to.push(from);
        self.cap.push(back_cap);
    }

    /// Augments along shortest paths until `limit` units flow or the sink is
    /// cut off. Returns the flow value.
    fn max_flow(&mut self, s: usize, t: usize, limit: usize) -> usize {
        let mut flow = 0;
        let mut via = vec![usize::MAX; self.head.len()];
        while flow < limit {
            via.fill(usize::MAX);
            let mut queue = VecDeque::from([s]);
            let mut reached = false;
            'bfs: while let Some(u) = queue.pop_front() {
                for &a in &self.head[u] {
                    let w = self.to[a];
                    if self.cap[a] > 0 && w != s && via[w] == usize::MAX {
                        via[w] = a;
                        if w == t {
                            reached = true;
                            break 'bfs;
                        }
                        queue.push_back(w);
                    }
                }
            }
            if !reached {
                break;
            }
            let mut w = t;
            while w != s {
                let a = via[w];
                self.cap[a] -= 1;
                self.cap[a ^ 1] += 1;
                w = self.to[a ^ 1];
            }
            flow += 1;
        }
        flow
    }
}

pub(crate) fn is_connected(adj: &[Vec<usize>]) -> bool {
    let n = adj.len();
    if n <= 1 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    count == n
}

fn edge_flow(adj: &[Vec<usize>], s: usize, t: usize, limit: usize) -> usize {
    let mut net = FlowNet::new(adj.len());
    for (u, nb) in adj.iter().enumerate() {
        for &w in nb.iter().filter(|&&w| w > u) {
            net.arc(u, w, 1, 1);
        }
    }
    net.max_flow(s, t, limit)
}

/// Maximum number of internally vertex-disjoint s-t paths for non-adjacent
/// `s`, `t`, capped at `limit`.
fn vertex_flow(adj: &[Vec<usize>], s: usize, t: usize, limit: usize) -> usize {
    let n = adj.len();
    let big = n as u32;
    // vertex v -> in-node 2v, out-node 2v+1
    let mut net = FlowNet::new(2 * n);
    for v in 0..n {
        let c = if v == s || v == t { big } else { 1 };
        net.arc(2 * v, 2 * v + 1, c, 0);
    }
    for (u, nb) in adj.iter().enumerate() {
        for &w in nb.iter().filter(|&&w| w > u) {
            net.arc(2 * u + 1, 2 * w, 1, 0);
            net.arc(2 * w + 1, 2 * u, 1, 0);
        }
    }
    net.max_flow(2 * s + 1, 2 * t, limit)
}

/// Edge connectivity: minimum number of edges whose removal disconnects the
/// graph. Zero for graphs with fewer than two vertices.
pub(crate) fn edge_connectivity(adj: &[Vec<usize>]) -> usize {
    let n = adj.len();
    if n < 2 {
        return 0;
    }
    if !is_connected(adj) {
        return 0;
    }
    let mut best = adj.iter().map(Vec::len).min().unwrap_or(0);
    for t in 1..n {
        if best <= 1 {
            break;
        }
        best = best.min(edge_flow(adj, 0, t, best));
    }
    best
}

/// Vertex connectivity by Even's method: some vertex among the first
/// `kappa + 1` lies outside a minimum separator, so only pairs `(v_i, v_j)`
/// with `i <= kappa < j` need checking. Complete graphs give `n - 1`.
pub(crate) fn vertex_connectivity(adj: &[Vec<usize>]) -> usize {
    let n = adj.len();
    if n < 2 {
        return 0;
    }
    if !is_connected(adj) {
        return 0;
    }
    let mut best = adj.iter().map(Vec::len).min().unwrap_or(0);
    let mut neighbor = vec![false; n];
    let mut i = 0;
    while i <= best && i < n {
        neighbor.fill(false);
        for &w in &adj[i] {
            neighbor[w] = true;
        }
        for j in (i + 1)..n {
            if best <= 1 {
                return best;
            }
            if !neighbor[j] {
                best = best.min(vertex_flow(adj, i, j, best));
            }
        }
        i += 1;
    }
    best
}
