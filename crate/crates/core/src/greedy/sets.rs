use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::angular::AngularQuadrature;

/// Time levels sampled for `rho` and `(time, training node)` pairs sampled
/// for `g`. Time indices run over `1..=N_t`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SampledSets {
    pub times_rho: BTreeSet<usize>,
    pub pairs_g: BTreeSet<(usize, usize)>,
}

impl SampledSets {
    pub fn is_empty(&self) -> bool {
        self.times_rho.is_empty() && self.pairs_g.is_empty()
    }

    /// Every pair whose antipode is in the training set has its partner.
    pub fn is_symmetric(&self, v_train: &AngularQuadrature) -> bool {
        self.pairs_g.iter().all(|&(n, j)| {
            let v = v_train.nodes()[j];
            match v_train.find_node([-v[0], -v[1], -v[2]]) {
                Some(k) => self.pairs_g.contains(&(n, k)),
                None => true,
            }
        })
    }
}

/// Importance indicators of one reduced training run.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorTable {
    /// Entry `n - 1` belongs to time level `n`.
    pub rho: Vec<f64>,
    /// `N_t x N_train`, row `n - 1` for time level `n`.
    pub g: DMatrix<f64>,
}

/// Greedy picks of one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Picks {
    pub time_rho: usize,
    pub time_g: usize,
    pub node_g: usize,
}

/// Largest unsampled indicators. Ties go to the smallest time index, then
/// the smallest node index. `None` once either candidate pool is empty.
pub fn select_samples(ind: &IndicatorTable, sets: &SampledSets) -> Option<Picks> {
    let mut best_rho: Option<(usize, f64)> = None;
    for (i, &d) in ind.rho.iter().enumerate() {
        let n = i + 1;
        if sets.times_rho.contains(&n) {
            continue;
        }
        if best_rho.is_none_or(|(_, b)| d > b) {
            best_rho = Some((n, d));
        }
    }
    let mut best_g: Option<(usize, usize, f64)> = None;
    for i in 0..ind.g.nrows() {
        let n = i + 1;
        for j in 0..ind.g.ncols() {
            if sets.pairs_g.contains(&(n, j)) {
                continue;
            }
            let d = ind.g[(i, j)];
            if best_g.is_none_or(|(_, _, b)| d > b) {
                best_g = Some((n, j, d));
            }
        }
    }
    let (time_rho, _) = best_rho?;
    let (time_g, node_g, _) = best_g?;
    Some(Picks {
        time_rho,
        time_g,
        node_g,
    })
}

/// Inserts the picks, adding the antipodal partner of the `g` pick when the
/// training set contains it. Returns the antipode's node index if found.
pub fn update_sampled_sets(
    sets: &mut SampledSets,
    picks: Picks,
    v_train: &AngularQuadrature,
) -> Option<usize> {
    sets.times_rho.insert(picks.time_rho);
    sets.pairs_g.insert((picks.time_g, picks.node_g));
    let v = v_train.nodes()[picks.node_g];
    let anti = v_train.find_node([-v[0], -v[1], -v[2]]);
    if let Some(k) = anti {
        sets.pairs_g.insert((picks.time_g, k));
    }
    anti
}
