//! Least-squares reduced quadrature and its non-negative fallback.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::harmonics::{harmonics_at, HarmonicIndex};
use super::quadrature::{same_node, AngularQuadrature, Provenance};
use crate::error::{Error, Result};
use crate::linalg::pseudo_inverse;

pub const PINV_CUTOFF: f64 = 1e-12;
/// Slightly negative round-off values are clamped to zero.
const NEG_ROUNDOFF: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct LsWeights {
    pub weights: Vec<f64>,
    pub degree: usize,
    /// Rank of the harmonic design matrix; exactness is certified only when
    /// it equals `(degree + 1)^2`.
    pub rank: usize,
}

impl LsWeights {
    pub fn full_rank(&self) -> bool {
        self.rank == HarmonicIndex::count(self.degree)
    }
}

/// Weights reproducing the integrals of all harmonics of degree `<= degree`
/// in the least-squares sense.
pub fn ls_quadrature_weights(nodes: &[[f64; 3]], degree: usize) -> Result<LsWeights> {
    if degree < 3 {
        return Err(Error::Argument(format!(
            "reduced quadrature degree must be >= 3, got {degree}"
        )));
    }
    let cols = HarmonicIndex::count(degree);
    if cols > nodes.len() {
        return Err(Error::Argument(format!(
            "degree {degree} needs at least {cols} nodes, got {}",
            nodes.len()
        )));
    }
    let design = DMatrix::from_fn(nodes.len(), cols, |_, _| 0.0);
    let mut design = design;
    for (i, v) in nodes.iter().enumerate() {
        let y = harmonics_at(degree, *v);
        for (j, val) in y.into_iter().enumerate() {
            design[(i, j)] = val;
        }
    }
    let (pinv, rank) = pseudo_inverse(&design, PINV_CUTOFF)?;
    let scale = 1.0 / (4.0 * PI).sqrt();
    let weights = (0..nodes.len()).map(|k| scale * pinv[(0, k)]).collect();
    Ok(LsWeights {
        weights,
        degree,
        rank,
    })
}

/// Largest violation of the harmonic moment conditions up to `degree`.
pub fn exactness_defect(quad: &AngularQuadrature, degree: usize) -> f64 {
    let mut acc = vec![0.0; HarmonicIndex::count(degree)];
    for (v, w) in quad.nodes().iter().zip(quad.weights()) {
        for (a, y) in acc.iter_mut().zip(harmonics_at(degree, *v)) {
            *a += w * y;
        }
    }
    acc[0] -= 1.0 / (4.0 * PI).sqrt();
    acc.iter().fold(0.0, |m, a| m.max(a.abs()))
}

/// Reduced rule on `new_nodes` with non-negative weights.
///
/// Degrees from `m_max` down to `m_min` are tried; the first certified
/// non-negative least-squares rule wins. If none exists the previous weights
/// are kept and the newly added nodes get weight zero.
pub fn nonneg_reduced_quadrature(
    new_nodes: &[[f64; 3]],
    old: &AngularQuadrature,
    m_min: usize,
    m_max: usize,
) -> Result<AngularQuadrature> {
    if m_min < 3 || m_max < m_min {
        return Err(Error::Argument(format!(
            "invalid degree window [{m_min}, {m_max}]"
        )));
    }
    if HarmonicIndex::count(m_min) > new_nodes.len() {
        return Err(Error::Argument(format!(
            "degree {m_min} needs at least {} nodes, got {}",
            HarmonicIndex::count(m_min),
            new_nodes.len()
        )));
    }
    if old.weights().iter().any(|w| *w < 0.0) {
        return Err(Error::Argument("previous rule has negative weights".into()));
    }
    let top = m_max.min(((new_nodes.len() as f64).sqrt().floor() as usize).saturating_sub(1));
    for degree in (m_min..=top).rev() {
        let ls = ls_quadrature_weights(new_nodes, degree)?;
        if !ls.full_rank() || ls.weights.iter().any(|w| *w < -NEG_ROUNDOFF) {
            continue;
        }
        let weights: Vec<f64> = ls.weights.iter().map(|w| w.max(0.0)).collect();
        if let Ok(q) =
            AngularQuadrature::new(new_nodes.to_vec(), weights, degree, Provenance::ReducedLs)
        {
            return Ok(q);
        }
    }
    zero_padded(new_nodes, old)
}

fn zero_padded(new_nodes: &[[f64; 3]], old: &AngularQuadrature) -> Result<AngularQuadrature> {
    let mut weights = vec![0.0; new_nodes.len()];
    let mut used = vec![false; new_nodes.len()];
    for (v, w) in old.nodes().iter().zip(old.weights()) {
        let k = new_nodes
            .iter()
            .enumerate()
            .position(|(k, u)| !used[k] && same_node(*u, *v))
            .ok_or_else(|| {
                Error::Argument(format!("previous node {v:?} missing from the new node set"))
            })?;
        used[k] = true;
        weights[k] = *w;
    }
    AngularQuadrature::new(
        new_nodes.to_vec(),
        weights,
        old.exactness_degree(),
        Provenance::FallbackZeroPadded,
    )
}

#[cfg(test)]
mod tests {
    use super::super::lebedev::lebedev;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unit(rng: &mut ChaCha8Rng) -> [f64; 3] {
        loop {
            let v = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0f64),
            ];
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if n > 0.1 && n <= 1.0 {
                return [v[0] / n, v[1] / n, v[2] / n];
            }
        }
    }

    #[test]
    fn ls_on_50_point_rule_is_exact_to_degree_3() {
        let q = lebedev(50).unwrap();
        let ls = ls_quadrature_weights(q.nodes(), 3).unwrap();
        assert!(ls.full_rank());
        let mut acc = vec![0.0; 16];
        for (v, w) in q.nodes().iter().zip(&ls.weights) {
            for (a, y) in acc.iter_mut().zip(harmonics_at(3, *v)) {
                *a += w * y;
            }
        }
        assert!((acc[0] - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-12);
        assert!(acc[1..].iter().all(|a| a.abs() < 1e-10));
    }

    #[test]
    fn too_few_nodes_or_low_degree_rejected() {
        let q = lebedev(6).unwrap();
        assert!(matches!(
            ls_quadrature_weights(q.nodes(), 3),
            Err(Error::Argument(_))
        ));
        let q = lebedev(26).unwrap();
        assert!(ls_quadrature_weights(q.nodes(), 2).is_err());
    }

    #[test]
    fn ls_second_moments_on_26() {
        let q = lebedev(26).unwrap();
        let ls = ls_quadrature_weights(q.nodes(), 3).unwrap();
        let s: f64 = q
            .nodes()
            .iter()
            .zip(&ls.weights)
            .map(|(v, w)| w * v[0] * v[0])
            .sum();
        assert!((s - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn weights_do_not_depend_on_node_order() {
        let q = lebedev(50).unwrap();
        let a = ls_quadrature_weights(q.nodes(), 4).unwrap();
        let perm: Vec<usize> = (0..q.len()).rev().collect();
        let nodes: Vec<[f64; 3]> = perm.iter().map(|&k| q.nodes()[k]).collect();
        let b = ls_quadrature_weights(&nodes, 4).unwrap();
        for (i, &k) in perm.iter().enumerate() {
            assert!((b.weights[i] - a.weights[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn unchanged_node_set_stays_valid() {
        let q = lebedev(26).unwrap();
        let r = nonneg_reduced_quadrature(q.nodes(), &q, 3, 7).unwrap();
        assert!(r.weights().iter().all(|w| *w >= 0.0));
        assert!((r.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_pair_added_to_26_is_certified() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let q = lebedev(26).unwrap();
        let v = random_unit(&mut rng);
        let mut nodes = q.nodes().to_vec();
        nodes.push(v);
        nodes.push([-v[0], -v[1], -v[2]]);
        let r = nonneg_reduced_quadrature(&nodes, &q, 3, 7).unwrap();
        assert_eq!(r.provenance(), Provenance::ReducedLs);
        assert!((3..=7).contains(&r.exactness_degree()));
        assert!(exactness_defect(&r, r.exactness_degree()) < 1e-9);
    }

    fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    }

    fn unit(a: [f64; 3]) -> [f64; 3] {
        let n = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
        [a[0] / n, a[1] / n, a[2] / n]
    }

    /// Three concentric rings of nodes packed into one spherical cap.
    fn cap_cluster() -> Vec<[f64; 3]> {
        let c = unit([0.2, 0.3, 1.0]);
        let e1 = unit(cross(c, [0.3, 0.5, 0.81]));
        let e2 = cross(c, e1);
        let mut out = Vec::new();
        for (radius, count) in [(0.4, 12), (0.2, 6), (0.1, 6)] {
            for i in 0..count {
                let a = 2.0 * PI * (i as f64 + 0.5) / count as f64;
                let (ca, sa) = (radius * a.cos(), radius * a.sin());
                out.push(unit([
                    c[0] + ca * e1[0] + sa * e2[0],
                    c[1] + ca * e1[1] + sa * e2[1],
                    c[2] + ca * e1[2] + sa * e2[2],
                ]));
            }
        }
        out
    }

    #[test]
    fn clustered_nodes_force_zero_padded_fallback() {
        let q = lebedev(26).unwrap();
        let mut nodes = q.nodes().to_vec();
        nodes.extend(cap_cluster());
        // 50 nodes admit degrees 3..=6; each least-squares rule has a negative weight
        for m in 3..=6 {
            let ls = ls_quadrature_weights(&nodes, m).unwrap();
            let min = ls.weights.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(min < -1e-4, "degree {m}: min weight {min}");
        }
        let r = nonneg_reduced_quadrature(&nodes, &q, 3, 7).unwrap();
        assert_eq!(r.provenance(), Provenance::FallbackZeroPadded);
        assert_eq!(&r.weights()[..26], q.weights());
        assert!(r.weights()[26..].iter().all(|w| *w == 0.0));
        assert!((r.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(r.exactness_degree(), q.exactness_degree());
    }

    #[test]
    fn fuzzed_augmentations_keep_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let q = lebedev(26).unwrap();
        for _ in 0..100 {
            let extra = rng.random_range(1..=6);
            let mut nodes = q.nodes().to_vec();
            for _ in 0..extra {
                let v = random_unit(&mut rng);
                nodes.push(v);
                if rng.random_bool(0.5) {
                    nodes.push([-v[0], -v[1], -v[2]]);
                }
            }
            let r = nonneg_reduced_quadrature(&nodes, &q, 3, 7).unwrap();
            r.validate().unwrap();
            match r.provenance() {
                Provenance::ReducedLs => {
                    assert!(exactness_defect(&r, r.exactness_degree()) < 1e-9);
                }
                _ => assert_eq!(&r.weights()[..26], q.weights()),
            }
        }
    }

    #[test]
    fn bad_degree_window_rejected() {
        let q = lebedev(26).unwrap();
        assert!(nonneg_reduced_quadrature(q.nodes(), &q, 2, 7).is_err());
        assert!(nonneg_reduced_quadrature(q.nodes(), &q, 5, 4).is_err());
        assert!(nonneg_reduced_quadrature(&q.nodes()[..10], &q, 3, 7).is_err());
    }
}
