//! Radiality and traversal checks, plus rooted-tree utilities.
//!
//! Two independent routes decide whether a set of closed branches is a spanning
//! tree: the rank over GF(2) of the reduced node-branch incidence matrix
//! ([`is_radial`]) and plain graph connectivity ([`all_nodes_traversed`],
//! [`UnionFind`]). For an undirected graph the incidence rank equals
//! `N - components`, so the two agree whenever exactly `N - 1` branches are closed.

use std::collections::VecDeque;

use crate::error::ConstraintError;
use crate::grid::{BranchId, BusId, Configuration, Network};

/// Disjoint-set forest with union by size and path halving.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
    sets: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
            sets: n,
        }
    }

    /// Puts every element back into its own singleton set.
    pub fn reset(&mut self) {
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p = i as u32;
        }
        self.size.fill(1);
        self.sets = self.parent.len();
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let grand = self.parent[self.parent[x] as usize];
            self.parent[x] = grand;
            x = grand as usize;
        }
        x
    }

    /// Merges the sets of `a` and `b`; returns false if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a as u32;
        self.size[a] += self.size[b];
        self.sets -= 1;
        true
    }

    pub fn set_count(&self) -> usize {
        self.sets
    }
}

/// Reduced node-branch incidence matrix over GF(2), bit-packed by row.
///
/// Rows are the non-root buses, columns the closed branches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    bits: Vec<u64>,
}

impl IncidenceMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(64).max(1);
        IncidenceMatrix {
            rows,
            cols,
            words,
            bits: vec![0; rows * words],
        }
    }

    /// Builds a matrix from dense 0/1 rows; any nonzero entry counts as 1.
    pub fn from_dense(dense: &[Vec<u8>]) -> Self {
        let cols = dense.first().map_or(0, Vec::len);
        let mut m = Self::zeros(dense.len(), cols);
        for (r, row) in dense.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged matrix");
            for (c, &v) in row.iter().enumerate() {
                if v != 0 {
                    m.set(r, c);
                }
            }
        }
        m
    }

    /// Incidence of the closed branches of `net` against every bus except the root.
    pub fn reduced(net: &Network, closed: &[bool]) -> Self {
        let root = net.root().index();
        let row_of = |bus: usize| -> Option<usize> {
            match bus.cmp(&root) {
                std::cmp::Ordering::Less => Some(bus),
                std::cmp::Ordering::Equal => None,
                std::cmp::Ordering::Greater => Some(bus - 1),
            }
        };
        let closed_branches: Vec<_> = net
            .branches()
            .iter()
            .zip(closed)
            .filter_map(|(b, &c)| c.then_some(b))
            .collect();
        let mut m = Self::zeros(net.bus_count() - 1, closed_branches.len());
        for (col, br) in closed_branches.iter().enumerate() {
            for end in [br.from, br.to] {
                if let Some(row) = row_of(end.index()) {
                    m.set(row, col);
                }
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.bits[r * self.words + c / 64] >> (c % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize) {
        assert!(r < self.rows && c < self.cols);
        self.bits[r * self.words + c / 64] |= 1 << (c % 64);
    }

    pub fn column_weight(&self, c: usize) -> usize {
        (0..self.rows).filter(|&r| self.get(r, c)).count()
    }
}

/// Rank over GF(2) by Gaussian elimination on packed rows.
pub fn rank_gf2(m: &IncidenceMatrix) -> usize {
    let w = m.words;
    let mut bits = m.bits.clone();
    let mut rank = 0;
    for col in 0..m.cols {
        let (word, mask) = (col / 64, 1u64 << (col % 64));
        let Some(pivot) = (rank..m.rows).find(|&r| bits[r * w + word] & mask != 0) else {
            continue;
        };
        if pivot != rank {
            for k in 0..w {
                bits.swap(pivot * w + k, rank * w + k);
            }
        }
        for r in rank + 1..m.rows {
            if bits[r * w + word] & mask != 0 {
                for k in word..w {
                    let v = bits[rank * w + k];
                    bits[r * w + k] ^= v;
                }
            }
        }
        rank += 1;
        if rank == m.rows {
            break;
        }
    }
    rank
}

/// Every bus is reachable from the root through closed branches.
pub fn traversed(net: &Network, closed: &[bool]) -> bool {
    net.reachable_from_root(closed).iter().all(|&r| r)
}

/// Full-rank reduced incidence matrix and exactly `N - 1` closed branches.
pub fn radial(net: &Network, closed: &[bool]) -> bool {
    let n_closed = closed.iter().filter(|&&c| c).count();
    if n_closed != net.bus_count() - 1 {
        return false;
    }
    rank_gf2(&IncidenceMatrix::reduced(net, closed)) == net.bus_count() - 1
}

pub fn all_nodes_traversed(net: &Network, cfg: &Configuration) -> bool {
    traversed(net, &cfg.closed_mask(net))
}

pub fn is_radial(net: &Network, cfg: &Configuration) -> bool {
    radial(net, &cfg.closed_mask(net))
}

/// Checks the two operating constraints in order: traversal, then radiality.
pub fn check_constraints(net: &Network, closed: &[bool]) -> Result<(), ConstraintError> {
    if !traversed(net, closed) {
        return Err(ConstraintError::Traversal);
    }
    if !radial(net, closed) {
        return Err(ConstraintError::Radiality);
    }
    Ok(())
}

/// Union-find spanning-tree test: `N - 1` closed branches joining every bus.
/// `uf` is scratch space sized to the bus count.
pub fn is_spanning_tree(net: &Network, closed: &[bool], uf: &mut UnionFind) -> bool {
    uf.reset();
    let mut joined = 0;
    for (br, _) in net.branches().iter().zip(closed).filter(|(_, &c)| c) {
        if !uf.union(br.from.index(), br.to.index()) {
            return false;
        }
        joined += 1;
    }
    joined == net.bus_count() - 1
}

/// Spanning tree of the closed branches, oriented away from the substation.
#[derive(Debug, Clone, PartialEq)]
pub struct RootedTree {
    root: BusId,
    parent: Vec<Option<(BusId, BranchId)>>,
    order: Vec<BusId>,
}

impl RootedTree {
    /// Breadth-first construction. Callers must have checked the constraints.
    pub(crate) fn from_closed(net: &Network, closed: &[bool]) -> Self {
        let n = net.bus_count();
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::with_capacity(n);
        let root = net.root();
        seen[root.index()] = true;
        queue.push_back(root.index());
        while let Some(k) = queue.pop_front() {
            order.push(BusId::from_index(k));
            for &(m, e) in net.neighbours(k) {
                if closed[e] && !seen[m] {
                    seen[m] = true;
                    parent[m] = Some((BusId::from_index(k), BranchId::from_index(e)));
                    queue.push_back(m);
                }
            }
        }
        RootedTree {
            root,
            parent,
            order,
        }
    }

    pub fn root(&self) -> BusId {
        self.root
    }

    /// Parent bus and connecting branch; `None` for the root.
    pub fn parent(&self, bus: BusId) -> Option<(BusId, BranchId)> {
        self.parent[bus.index()]
    }

    /// Buses in breadth-first order, root first. Every parent precedes its children.
    pub fn bfs_order(&self) -> &[BusId] {
        &self.order
    }

    /// Branches on the path from `bus` up to the root, nearest first.
    pub fn path_to_root(&self, bus: BusId) -> Vec<BranchId> {
        let mut path = Vec::new();
        let mut cur = bus;
        while let Some((p, e)) = self.parent(cur) {
            path.push(e);
            cur = p;
        }
        path
    }

    pub fn parent_entries(&self) -> usize {
        self.parent.iter().filter(|p| p.is_some()).count()
    }
}

pub fn build_rooted_tree(
    net: &Network,
    cfg: &Configuration,
) -> Result<RootedTree, ConstraintError> {
    let closed = cfg.closed_mask(net);
    check_constraints(net, &closed)?;
    Ok(RootedTree::from_closed(net, &closed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{base_configuration, bundled_network, load_network, DatasetText};

    fn toy(buses: usize, edges: &[(u32, u32, bool)]) -> Network {
        let mut b = String::from("id,demand_kw\n");
        for i in 1..=buses {
            b.push_str(&format!("{i},1\n"));
        }
        let mut e = String::from("id,from,to,r_ohm,x_ohm,is_tie\n");
        for (i, (f, t, tie)) in edges.iter().enumerate() {
            e.push_str(&format!("{},{f},{t},1,1,{}\n", i + 1, *tie as u8));
        }
        load_network(&DatasetText {
            buses: b,
            branches: e,
            manifest: r#"{"name":"toy","root_bus":1,"format_version":1}"#.into(),
        })
        .unwrap()
    }

    #[test]
    fn rank_small_matrices() {
        assert_eq!(
            rank_gf2(&IncidenceMatrix::from_dense(&[vec![1, 0], vec![0, 1]])),
            2
        );
        assert_eq!(
            rank_gf2(&IncidenceMatrix::from_dense(&[vec![0, 0], vec![0, 0]])),
            0
        );
        assert_eq!(
            rank_gf2(&IncidenceMatrix::from_dense(&[vec![1, 1], vec![1, 1]])),
            1
        );
        // Columns of a triangle's full incidence matrix sum to zero over GF(2).
        let tri = IncidenceMatrix::from_dense(&[vec![1, 0, 1], vec![1, 1, 0], vec![0, 1, 1]]);
        assert_eq!(rank_gf2(&tri), 2);
    }

    #[test]
    fn rank_spans_multiple_words() {
        let n = 130;
        let dense: Vec<Vec<u8>> = (0..n)
            .map(|r| (0..n).map(|c| (r == c) as u8).collect())
            .collect();
        assert_eq!(rank_gf2(&IncidenceMatrix::from_dense(&dense)), n);
    }

    #[test]
    fn base_33_is_radial_and_traversed() {
        let net = bundled_network("33");
        let cfg = base_configuration(&net);
        assert!(all_nodes_traversed(&net, &cfg));
        assert!(is_radial(&net, &cfg));
        let m = IncidenceMatrix::reduced(&net, &cfg.closed_mask(&net));
        assert_eq!((m.rows(), m.cols()), (32, 32));
        assert_eq!(rank_gf2(&m), 32);
        for c in 0..m.cols() {
            assert!((1..=2).contains(&m.column_weight(c)));
        }
    }

    #[test]
    fn opening_feeder_head_disconnects() {
        let net = bundled_network("33");
        let cfg = Configuration::from_ids(&net, [1, 34, 35, 36, 37]).unwrap();
        assert!(!all_nodes_traversed(&net, &cfg));
        assert!(!is_radial(&net, &cfg));
        assert_eq!(
            build_rooted_tree(&net, &cfg).unwrap_err(),
            ConstraintError::Traversal
        );
    }

    #[test]
    fn isolated_leaf_fails_traversal() {
        let net = bundled_network("33");
        // Bus 18 touches only branch 17 and tie 36.
        let cfg = Configuration::from_ids(&net, [17, 36, 33, 34, 35]).unwrap();
        assert!(!all_nodes_traversed(&net, &cfg));
    }

    #[test]
    fn triangle_minus_any_edge() {
        let net = toy(3, &[(1, 2, false), (2, 3, false), (1, 3, true)]);
        for e in 1..=3 {
            let cfg = Configuration::from_ids(&net, [e]).unwrap();
            assert!(all_nodes_traversed(&net, &cfg));
            assert!(is_radial(&net, &cfg));
        }
    }

    #[test]
    fn cycle_plus_island_is_not_radial() {
        let net = toy(
            4,
            &[(1, 2, false), (2, 3, false), (3, 4, false), (1, 3, true)],
        );
        let cfg = Configuration::from_ids(&net, [3]).unwrap();
        assert!(!is_radial(&net, &cfg));
        assert!(!all_nodes_traversed(&net, &cfg));
    }

    #[test]
    fn chain_tree() {
        let net = toy(3, &[(1, 2, false), (2, 3, false), (1, 3, true)]);
        let cfg = Configuration::from_ids(&net, [3]).unwrap();
        let tree = build_rooted_tree(&net, &cfg).unwrap();
        assert_eq!(tree.parent(BusId(3)), Some((BusId(2), BranchId(2))));
        assert_eq!(tree.parent(BusId(2)), Some((BusId(1), BranchId(1))));
        assert_eq!(tree.parent(BusId(1)), None);
        assert!(tree.path_to_root(BusId(1)).is_empty());
        assert_eq!(tree.path_to_root(BusId(3)), vec![BranchId(2), BranchId(1)]);
    }

    #[test]
    fn path_lengths_match_bfs_depth() {
        let net = bundled_network("33");
        let cfg = base_configuration(&net);
        let tree = build_rooted_tree(&net, &cfg).unwrap();
        assert_eq!(tree.path_to_root(BusId(2)), vec![BranchId(1)]);
        assert_eq!(tree.parent_entries(), 32);

        // Independent depth via repeated relaxation over closed branches.
        let closed = cfg.closed_mask(&net);
        let mut depth = vec![usize::MAX; 33];
        depth[0] = 0;
        for _ in 0..33 {
            for (br, _) in net.branches().iter().zip(&closed).filter(|(_, &c)| c) {
                let (a, b) = (br.from.index(), br.to.index());
                if depth[a] != usize::MAX {
                    depth[b] = depth[b].min(depth[a] + 1);
                }
                if depth[b] != usize::MAX {
                    depth[a] = depth[a].min(depth[b] + 1);
                }
            }
        }
        for (k, &d) in depth.iter().enumerate() {
            assert_eq!(tree.path_to_root(BusId::from_index(k)).len(), d);
        }
    }

    #[test]
    fn union_find_basics() {
        let mut uf = UnionFind::new(4);
        assert!(uf.union(0, 1));
        assert!(uf.union(2, 3));
        assert!(!uf.union(1, 0));
        assert_eq!(uf.set_count(), 2);
        assert!(uf.union(1, 3));
        assert_eq!(uf.find(0), uf.find(2));
        uf.reset();
        assert_eq!(uf.set_count(), 4);
        assert_ne!(uf.find(0), uf.find(1));
    }
}
