//! Graph structure of a transition matrix: irreducibility, strongly
//! connected components, and the block normal form.
//!
//! The patch digraph has an edge j → i whenever `c_ij > 0` (i ≠ j), i.e.
//! whenever members can move from patch j to patch i. A component of the
//! condensation with no outgoing edges is *closed* (population entering it
//! never leaves); every other component is *transient*. Permuting closed
//! components first and transient components downstream-first puts the
//! matrix into a block form in which closed columns are confined to their
//! diagonal block and the transient region is block upper triangular.

use crate::dense::DenseMatrix;
use crate::kolmogorov::TransitionMatrix;

/// Whether a patch belongs to a closed or a transient component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateKind {
    Closed,
    Transient,
}

/// Directed graph on patches; edge j → i present iff c_ij > 0, i ≠ j.
#[derive(Debug, Clone)]
pub struct PatchGraph {
    n: usize,
    succ: Vec<Vec<usize>>,
}

impl PatchGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Successors of node j (targets of edges j → i), sorted ascending.
    pub fn successors(&self, j: usize) -> &[usize] {
        &self.succ[j]
    }

    /// All edges as (from, to) pairs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (j, targets) in self.succ.iter().enumerate() {
            for &i in targets {
                out.push((j, i));
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }
}

/// Builds the patch digraph of a validated transition matrix. Validation has
/// already clamped sub-tolerance noise, so a strict `> 0` test is exact.
pub fn adjacency_graph(c: &TransitionMatrix) -> PatchGraph {
    let n = c.n();
    let mut succ = vec![Vec::new(); n];
    for j in 0..n {
        for i in 0..n {
            if i != j && c.rate(i, j) > 0.0 {
                succ[j].push(i);
            }
        }
    }
    PatchGraph { n, succ }
}

/// True iff the patch digraph is strongly connected (n = 1 counts).
pub fn is_irreducible(c: &TransitionMatrix) -> bool {
    strongly_connected_components(&adjacency_graph(c)).len() == 1
}

/// One diagonal block of the normal form.
#[derive(Debug, Clone)]
pub struct Block {
    pub kind: StateKind,
    /// Position of the block in the permuted ordering: rows/columns
    /// `start .. start + len`.
    pub start: usize,
    pub len: usize,
    /// Original (0-based) patch indices, ascending.
    pub original_indices: Vec<usize>,
}

/// Permutation and block partition exposing the closed/transient structure.
#[derive(Debug, Clone)]
pub struct NormalForm {
    /// `permutation[new_position] = original_index`.
    pub permutation: Vec<usize>,
    /// Closed blocks first (ascending by smallest original index), then
    /// transient blocks downstream-first.
    pub blocks: Vec<Block>,
    /// Number of closed blocks.
    pub m: usize,
    /// P C Pᵀ for the permutation above; zero structure is exact.
    pub permuted_matrix: DenseMatrix,
}

impl NormalForm {
    pub fn n(&self) -> usize {
        self.permutation.len()
    }

    pub fn closed_blocks(&self) -> impl Iterator<Item = &Block> {
        self.blocks.iter().filter(|b| b.kind == StateKind::Closed)
    }

    pub fn transient_blocks(&self) -> impl Iterator<Item = &Block> {
        self.blocks
            .iter()
            .filter(|b| b.kind == StateKind::Transient)
    }

    pub fn has_transient(&self) -> bool {
        self.blocks.len() > self.m
    }

    /// Extracts a diagonal block of the permuted matrix.
    pub fn diagonal_block(&self, block: &Block) -> DenseMatrix {
        let idx: Vec<usize> = (block.start..block.start + block.len).collect();
        self.permuted_matrix.submatrix(&idx)
    }

    /// Inverse permutation: `inverse()[original_index] = new_position`.
    pub fn inverse_permutation(&self) -> Vec<usize> {
        let mut inv = vec![0; self.permutation.len()];
        for (pos, &orig) in self.permutation.iter().enumerate() {
            inv[orig] = pos;
        }
        inv
    }
}

/// Computes the normal form of a validated transition matrix.
///
/// Closed blocks are ordered by their smallest original patch index.
/// Transient blocks are ordered so that a block feeding another appears
/// after it (reverse topological order of the condensation), with ties
/// broken by smallest original index. The ordering among closed blocks and
/// among incomparable transient blocks is otherwise free; this is one
/// admissible, deterministic choice.
pub fn normal_form(c: &TransitionMatrix) -> NormalForm {
    let graph = adjacency_graph(c);
    let n = graph.n();
    let mut comps = strongly_connected_components(&graph);
    for comp in &mut comps {
        comp.sort_unstable();
    }

    let mut comp_of = vec![0usize; n];
    for (id, comp) in comps.iter().enumerate() {
        for &v in comp {
            comp_of[v] = id;
        }
    }

    // Condensation edges in the "feeds" direction: x -> y iff some patch of
    // x has an edge to a patch of y.
    let ncomp = comps.len();
    let mut feeds = vec![Vec::new(); ncomp];
    for (from, to) in graph.edges() {
        let (cf, ct) = (comp_of[from], comp_of[to]);
        if cf != ct && !feeds[cf].contains(&ct) {
            feeds[cf].push(ct);
        }
    }

    let mut closed_ids: Vec<usize> = (0..ncomp).filter(|&x| feeds[x].is_empty()).collect();
    closed_ids.sort_by_key(|&x| comps[x][0]);

    let transient_order = order_transient(&comps, &feeds);

    let mut blocks = Vec::with_capacity(ncomp);
    let mut permutation = Vec::with_capacity(n);
    for &id in closed_ids.iter().chain(transient_order.iter()) {
        let kind = if feeds[id].is_empty() {
            StateKind::Closed
        } else {
            StateKind::Transient
        };
        blocks.push(Block {
            kind,
            start: permutation.len(),
            len: comps[id].len(),
            original_indices: comps[id].clone(),
        });
        permutation.extend_from_slice(&comps[id]);
    }

    let permuted_matrix = c.matrix().permuted(&permutation);
    NormalForm {
        permutation,
        blocks,
        m: closed_ids.len(),
        permuted_matrix,
    }
}

/// Orders transient components downstream-first: Kahn's algorithm on the
/// reversed feed graph, always picking the available component with the
/// smallest original patch index.
fn order_transient(comps: &[Vec<usize>], feeds: &[Vec<usize>]) -> Vec<usize> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let transient: Vec<usize> = (0..comps.len())
        .filter(|&x| !feeds[x].is_empty())
        .collect();
    // pending[x] = number of transient components x still feeds that have
    // not been placed yet; feeders[y] lists transient x with x -> y.
    let mut pending = vec![0usize; comps.len()];
    let mut feeders = vec![Vec::new(); comps.len()];
    for &x in &transient {
        for &y in &feeds[x] {
            if !feeds[y].is_empty() {
                pending[x] += 1;
                feeders[y].push(x);
            }
        }
    }

    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = transient
        .iter()
        .filter(|&&x| pending[x] == 0)
        .map(|&x| Reverse((comps[x][0], x)))
        .collect();
    let mut order = Vec::with_capacity(transient.len());
    while let Some(Reverse((_, x))) = heap.pop() {
        order.push(x);
        for &f in &feeders[x] {
            pending[f] -= 1;
            if pending[f] == 0 {
                heap.push(Reverse((comps[f][0], f)));
            }
        }
    }
    debug_assert_eq!(order.len(), transient.len());
    order
}

/// Per-patch labels (indexed by original patch) from a normal form.
pub fn classify_states(nf: &NormalForm) -> Vec<StateKind> {
    let mut labels = vec![StateKind::Closed; nf.n()];
    for block in &nf.blocks {
        for &orig in &block.original_indices {
            labels[orig] = block.kind;
        }
    }
    labels
}

/// Tarjan's algorithm with an explicit stack (no recursion).
fn strongly_connected_components(graph: &PatchGraph) -> Vec<Vec<usize>> {
    const UNVISITED: usize = usize::MAX;
    let n = graph.n();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut next_index = 0usize;
    // (node, next successor position) frames of the simulated recursion
    let mut frames: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        frames.push((root, 0));
        while let Some(&(v, ei)) = frames.last() {
            if ei == 0 {
                index[v] = next_index;
                low[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if ei < graph.successors(v).len() {
                frames.last_mut().unwrap().1 += 1;
                let w = graph.successors(v)[ei];
                if index[w] == UNVISITED {
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some(&(parent, _)) = frames.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("Tarjan stack underflow");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comps.push(comp);
                }
            }
        }
    }
    comps
}
