//! Embedded Lebedev tables, weights normalized to sum one.

use super::quadrature::AngularQuadrature;
use crate::error::{Error, Result};

const TABLES: &[(usize, &str)] = &[
    (6, include_str!("../../data/lebedev_6.txt")),
    (26, include_str!("../../data/lebedev_26.txt")),
    (50, include_str!("../../data/lebedev_50.txt")),
    (110, include_str!("../../data/lebedev_110.txt")),
    (194, include_str!("../../data/lebedev_194.txt")),
    (302, include_str!("../../data/lebedev_302.txt")),
    (590, include_str!("../../data/lebedev_590.txt")),
    (2030, include_str!("../../data/lebedev_2030.txt")),
];

/// Node counts with an embedded table.
pub fn available_lebedev_counts() -> Vec<usize> {
    TABLES.iter().map(|(n, _)| *n).collect()
}

pub fn lebedev(points: usize) -> Result<AngularQuadrature> {
    let (_, text) = TABLES.iter().find(|(n, _)| *n == points).ok_or_else(|| {
        Error::Argument(format!(
            "no Lebedev rule with {points} points; available: {:?}",
            available_lebedev_counts()
        ))
    })?;
    AngularQuadrature::from_text(text)
}
