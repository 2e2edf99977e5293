use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Undirected weighted graph on nodes `0..p`. An edge is present exactly
/// when its weight is nonzero; setting a weight to zero removes the edge.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct GraphEstimate {
    p: usize,
    weights: BTreeMap<(usize, usize), f64>,
}

fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

impl GraphEstimate {
    pub fn new(p: usize) -> Self {
        GraphEstimate {
            p,
            weights: BTreeMap::new(),
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn set_weight(&mut self, i: usize, j: usize, weight: f64) -> Result<()> {
        if i == j {
            return Err(Error::invalid(format!("self-loop on node {}", i + 1)));
        }
        if i >= self.p || j >= self.p {
            return Err(Error::invalid(format!(
                "edge ({}, {}) outside a graph on {} nodes",
                i + 1,
                j + 1,
                self.p
            )));
        }
        if !weight.is_finite() {
            return Err(Error::invalid("edge weight must be finite"));
        }
        let key = ordered(i, j);
        if weight == 0.0 {
            self.weights.remove(&key);
        } else {
            self.weights.insert(key, weight);
        }
        Ok(())
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights.get(&ordered(i, j)).copied().unwrap_or(0.0)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.weights.contains_key(&ordered(i, j))
    }

    /// `((i, j), weight)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.weights.iter().map(|(&k, &w)| (k, w))
    }

    pub fn edge_count(&self) -> usize {
        self.weights.len()
    }

    pub fn neighbors(&self, node: usize) -> Vec<usize> {
        self.edges()
            .filter_map(|((i, j), _)| match node {
                n if n == i => Some(j),
                n if n == j => Some(i),
                _ => None,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_and_zero_removes() {
        let mut g = GraphEstimate::new(4);
        g.set_weight(2, 0, 0.5).unwrap();
        assert!(g.has_edge(0, 2) && g.has_edge(2, 0));
        assert_eq!(g.weight(0, 2), 0.5);
        g.set_weight(0, 2, 0.0).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn rejects_self_loops_and_out_of_range() {
        let mut g = GraphEstimate::new(3);
        assert!(g.set_weight(1, 1, 1.0).is_err());
        assert!(g.set_weight(0, 3, 1.0).is_err());
        assert!(g.set_weight(0, 1, f64::NAN).is_err());
    }

    #[test]
    fn neighbors() {
        let mut g = GraphEstimate::new(4);
        g.set_weight(0, 1, 1.0).unwrap();
        g.set_weight(1, 3, -1.0).unwrap();
        assert_eq!(g.neighbors(1), vec![0, 3]);
        assert!(g.neighbors(2).is_empty());
    }
}
