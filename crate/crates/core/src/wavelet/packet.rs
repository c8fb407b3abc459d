//! Wavelet-packet decomposition with Shannon-entropy best-basis selection.

use std::collections::{BTreeMap, BTreeSet};

use super::dwt::{analysis_step, dyadic_exponent};
use super::filter::WaveletFilter;
use crate::error::{Error, Result};

/// Node identifier `(level, path)`: `path` is read in binary, a 0 bit for a
/// low-pass branch and a 1 bit for a high-pass branch, root first.
pub type NodeId = (usize, usize);

#[derive(Debug, Clone)]
pub struct PacketTree {
    pub depth: usize,
    pub nodes: BTreeMap<NodeId, Vec<f64>>,
    pub chosen_basis: BTreeSet<NodeId>,
    /// Squared norm of the input, used to normalize the entropy cost.
    pub signal_energy: f64,
}

impl PacketTree {
    /// Full packet tree of the given depth, with no basis chosen yet.
    pub fn decompose(signal: &[f64], filter: &WaveletFilter, depth: usize) -> Result<Self> {
        let j = dyadic_exponent(signal.len())?;
        if depth > j {
            return Err(Error::TooManyLevels { requested: depth, max: j });
        }
        if signal.len() < filter.support_length {
            return Err(Error::BadLength(signal.len()));
        }
        let mut nodes = BTreeMap::new();
        nodes.insert((0, 0), signal.to_vec());
        for level in 0..depth {
            for path in 0..1usize << level {
                let (a, d) = analysis_step(&nodes[&(level, path)], filter);
                nodes.insert((level + 1, 2 * path), a);
                nodes.insert((level + 1, 2 * path + 1), d);
            }
        }
        Ok(PacketTree {
            depth,
            nodes,
            chosen_basis: BTreeSet::new(),
            signal_energy: signal.iter().map(|x| x * x).sum(),
        })
    }

    /// Additive entropy cost `-sum p log p` of one node, `p = c^2 / |x|^2`.
    pub fn node_cost(&self, id: NodeId) -> f64 {
        self.nodes
            .get(&id)
            .map(|c| shannon_cost(c, self.signal_energy))
            .unwrap_or(0.0)
    }

    /// Total cost of a set of nodes.
    pub fn tiling_cost<'a>(&self, tiling: impl IntoIterator<Item = &'a NodeId>) -> f64 {
        tiling.into_iter().map(|&id| self.node_cost(id)).sum()
    }

    pub fn chosen_cost(&self) -> f64 {
        self.tiling_cost(&self.chosen_basis)
    }

    /// Coefficients of the chosen basis, concatenated in node order.
    pub fn chosen_coefficients(&self) -> Vec<f64> {
        self.chosen_basis
            .iter()
            .flat_map(|id| self.nodes[id].iter().copied())
            .collect()
    }

    /// True when `tiling` covers the root exactly once.
    pub fn is_exact_tiling(&self, tiling: &BTreeSet<NodeId>) -> bool {
        // each node (l, b) covers the interval [b 2^(D-l), (b+1) 2^(D-l)) of leaf slots
        let leaves = 1usize << self.depth;
        let mut covered = vec![0u8; leaves];
        for &(l, b) in tiling {
            if l > self.depth || b >= 1 << l {
                return false;
            }
            let w = 1usize << (self.depth - l);
            for slot in &mut covered[b * w..(b + 1) * w] {
                *slot += 1;
            }
        }
        covered.iter().all(|&c| c == 1)
    }
}

pub(crate) fn shannon_cost(coeffs: &[f64], total_energy: f64) -> f64 {
    if total_energy <= 0.0 {
        return 0.0;
    }
    coeffs
        .iter()
        .map(|c| c * c / total_energy)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}

/// Node set of the plain wavelet basis of the given depth.
pub fn dwt_tiling(depth: usize) -> BTreeSet<NodeId> {
    let mut set: BTreeSet<NodeId> = (1..=depth).map(|l| (l, 1)).collect();
    set.insert((depth, 0));
    set
}

/// Decomposes to `depth` and picks the tiling of minimal entropy cost by
/// bottom-up dynamic programming (a parent wins ties).
pub fn packet_best_basis(
    signal: &[f64],
    filter: &WaveletFilter,
    depth: usize,
) -> Result<PacketTree> {
    let mut tree = PacketTree::decompose(signal, filter, depth)?;
    let mut best: BTreeMap<NodeId, (f64, Vec<NodeId>)> = BTreeMap::new();
    for path in 0..1usize << depth {
        let id = (depth, path);
        best.insert(id, (tree.node_cost(id), vec![id]));
    }
    for level in (0..depth).rev() {
        for path in 0..1usize << level {
            let id = (level, path);
            let own = tree.node_cost(id);
            let (lc, lset) = &best[&(level + 1, 2 * path)];
            let (rc, rset) = &best[&(level + 1, 2 * path + 1)];
            let entry = if own <= lc + rc {
                (own, vec![id])
            } else {
                (lc + rc, lset.iter().chain(rset).copied().collect())
            };
            best.insert(id, entry);
        }
    }
    tree.chosen_basis = best[&(0, 0)].1.iter().copied().collect();
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::filter::{make_filter, Family};

    #[test]
    fn dwt_tiling_is_exact() {
        let f = make_filter(Family::Haar, 1).unwrap();
        let t = PacketTree::decompose(&[1.0; 16], &f, 3).unwrap();
        assert!(t.is_exact_tiling(&dwt_tiling(3)));
        let mut bad = dwt_tiling(3);
        bad.insert((1, 0));
        assert!(!t.is_exact_tiling(&bad));
    }

    #[test]
    fn delta_spike_beats_dwt_basis() {
        let f = make_filter(Family::Daubechies, 2).unwrap();
        let mut x = vec![0.0; 64];
        x[21] = 1.0;
        let t = packet_best_basis(&x, &f, 4).unwrap();
        assert!(t.is_exact_tiling(&t.chosen_basis));
        assert!(t.chosen_cost() <= t.tiling_cost(&dwt_tiling(4)) + 1e-15);
        // a delta is already optimal in the root
        assert!(t.chosen_basis.contains(&(0, 0)));
    }

    #[test]
    fn energy_of_chosen_basis_matches_signal() {
        let f = make_filter(Family::Symmlet, 4).unwrap();
        let x: Vec<f64> = (0..128).map(|i| ((i * i) as f64 * 0.37).sin()).collect();
        let t = packet_best_basis(&x, &f, 5).unwrap();
        let e: f64 = t.chosen_coefficients().iter().map(|c| c * c).sum();
        assert!((e - t.signal_energy).abs() < 1e-10 * t.signal_energy.max(1.0));
        assert_eq!(t.chosen_coefficients().len(), 128);
    }

    #[test]
    fn rejects_non_dyadic() {
        let f = make_filter(Family::Haar, 1).unwrap();
        assert!(matches!(
            packet_best_basis(&[0.0; 10], &f, 1),
            Err(Error::BadLength(10))
        ));
    }
}
