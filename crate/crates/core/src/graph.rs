//! Small directed-graph helpers over dense node indices.

/// Returns a cycle (as a node path whose last node has an edge back to the
/// first) if the graph has one.
pub fn find_cycle(succ: &[Vec<usize>]) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let n = succ.len();
    let mut mark = vec![Mark::White; n];
    let mut parent = vec![usize::MAX; n];
    for root in 0..n {
        if mark[root] != Mark::White {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        mark[root] = Mark::Grey;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if *next < succ[node].len() {
                let to = succ[node][*next];
                *next += 1;
                match mark[to] {
                    Mark::White => {
                        mark[to] = Mark::Grey;
                        parent[to] = node;
                        stack.push((to, 0));
                    }
                    Mark::Grey => {
                        let mut cycle = vec![node];
                        let mut cur = node;
                        while cur != to {
                            cur = parent[cur];
                            cycle.push(cur);
                        }
                        cycle.reverse();
                        return Some(cycle);
                    }
                    Mark::Black => {}
                }
            } else {
                mark[node] = Mark::Black;
                stack.pop();
            }
        }
    }
    None
}

/// Kahn's algorithm, preferring the smallest ready index. `None` on a cycle.
pub fn topo_order(succ: &[Vec<usize>]) -> Option<Vec<usize>> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let n = succ.len();
    let mut indeg = vec![0usize; n];
    for edges in succ {
        for &b in edges {
            indeg[b] += 1;
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&i| indeg[i] == 0).map(Reverse).collect();
    let mut out = Vec::with_capacity(n);
    while let Some(Reverse(a)) = ready.pop() {
        out.push(a);
        for &b in &succ[a] {
            indeg[b] -= 1;
            if indeg[b] == 0 {
                ready.push(Reverse(b));
            }
        }
    }
    (out.len() == n).then_some(out)
}
