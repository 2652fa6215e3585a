//! Communication classes of the positive-entry digraph of a kernel.

use serde::{Deserialize, Serialize};

use super::kernel::Kernel;

/// Irreducibility, aperiodicity and the SIA property of a single kernel.
///
/// `sia` holds when the kernel has exactly one recurrent class and that class
/// is aperiodic; transient states are allowed, so powers converge to a
/// row-constant matrix that may have zero columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureReport {
    pub irreducible: bool,
    pub aperiodic: bool,
    pub sia: bool,
    /// Closed communication classes, each sorted, ordered by smallest state.
    pub recurrent_classes: Vec<Vec<usize>>,
    /// Period of each recurrent class, aligned with `recurrent_classes`.
    pub class_periods: Vec<usize>,
    /// Period of the first recurrent class (the unique one when `sia` is in play).
    pub period: usize,
    pub transient: Vec<usize>,
}

pub fn classify_structure(k: &Kernel) -> StructureReport {
    let n = k.size();
    let adj: Vec<Vec<usize>> =
        (0..n).map(|x| (0..n).filter(|&y| k.get(x, y) > 0.0).collect()).collect();
    let comp = strongly_connected(&adj);
    let ncomp = comp.iter().copied().max().map_or(0, |c| c + 1);

    let mut closed = vec![true; ncomp];
    for x in 0..n {
        for &y in &adj[x] {
            if comp[x] != comp[y] {
                closed[comp[x]] = false;
            }
        }
    }
    let mut classes: Vec<Vec<usize>> = (0..ncomp)
        .filter(|&c| closed[c])
        .map(|c| (0..n).filter(|&x| comp[x] == c).collect())
        .collect();
    classes.sort_by_key(|class: &Vec<usize>| class[0]);

    let class_periods: Vec<usize> = classes.iter().map(|c| class_period(&adj, c)).collect();
    let transient = (0..n).filter(|&x| !closed[comp[x]]).collect();
    let irreducible = ncomp == 1;
    let aperiodic = class_periods.iter().all(|&p| p == 1);
    let sia = classes.len() == 1 && class_periods[0] == 1;
    StructureReport {
        irreducible,
        aperiodic,
        sia,
        period: class_periods[0],
        recurrent_classes: classes,
        class_periods,
        transient,
    }
}

/// Tarjan's algorithm, iterative. Returns a component id per vertex.
fn strongly_connected(adj: &[Vec<usize>]) -> Vec<usize> {
    const UNSEEN: usize = usize::MAX;
    let n = adj.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut next_comp = 0;

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        // (vertex, position in its adjacency list)
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < adj[v].len() {
                let w = adj[v][*pos];
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    comp
}

/// gcd of `level(u) + 1 - level(v)` over edges inside a strongly connected
/// class, with BFS levels from the class's first state.
fn class_period(adj: &[Vec<usize>], class: &[usize]) -> usize {
    let n = adj.len();
    let mut member = vec![false; n];
    class.iter().for_each(|&x| member[x] = true);
    let mut level = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    level[class[0]] = 0;
    queue.push_back(class[0]);
    let mut g = 0usize;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !member[v] {
                continue;
            }
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            } else {
                let diff = (level[u] as i64 + 1 - level[v] as i64).unsigned_abs() as usize;
                g = gcd(g, diff);
            }
        }
    }
    // A single state without a self-loop cannot be a closed class, so g > 0.
    g.max(1)
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
