use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const UNIT_TOL: f64 = 1e-12;
const SUM_TOL: f64 = 1e-12;
const SECOND_MOMENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    LebedevTable,
    ReducedLs,
    FallbackZeroPadded,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::LebedevTable => "lebedev_table",
            Provenance::ReducedLs => "reduced_ls",
            Provenance::FallbackZeroPadded => "fallback_zero_padded",
        })
    }
}

impl FromStr for Provenance {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lebedev_table" => Ok(Provenance::LebedevTable),
            "reduced_ls" => Ok(Provenance::ReducedLs),
            "fallback_zero_padded" => Ok(Provenance::FallbackZeroPadded),
            other => Err(Error::Format(format!(
                "unknown quadrature provenance '{other}'"
            ))),
        }
    }
}

/// Discrete angular rule on the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularQuadrature {
    nodes: Vec<[f64; 3]>,
    weights: Vec<f64>,
    exactness_degree: usize,
    provenance: Provenance,
}

impl AngularQuadrature {
    /// Builds a rule and checks the structural invariants.
    pub fn new(
        nodes: Vec<[f64; 3]>,
        weights: Vec<f64>,
        exactness_degree: usize,
        provenance: Provenance,
    ) -> Result<Self> {
        let q = Self {
            nodes,
            weights,
            exactness_degree,
            provenance,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() || self.nodes.len() != self.weights.len() {
            return Err(Error::Argument(format!(
                "quadrature has {} nodes and {} weights",
                self.nodes.len(),
                self.weights.len()
            )));
        }
        for (k, v) in self.nodes.iter().enumerate() {
            let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if !((norm - 1.0).abs() <= UNIT_TOL) {
                return Err(Error::Argument(format!("node {k} has norm {norm}")));
            }
        }
        if let Some((k, w)) = self
            .weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w >= 0.0) || !w.is_finite())
        {
            return Err(Error::Argument(format!("weight {k} is {w}")));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::Argument(format!("weights sum to {sum}")));
        }
        if self.exactness_degree >= 2 {
            let m = self.second_moments();
            for a in 0..3 {
                for b in 0..3 {
                    let expect = if a == b { 1.0 / 3.0 } else { 0.0 };
                    if (m[a][b] - expect).abs() > SECOND_MOMENT_TOL {
                        return Err(Error::Argument(format!(
                            "second moment ({a},{b}) = {} for a degree-{} rule",
                            m[a][b], self.exactness_degree
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn exactness_degree(&self) -> usize {
        self.exactness_degree
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn vx(&self) -> Vec<f64> {
        self.nodes.iter().map(|v| v[0]).collect()
    }

    pub fn vy(&self) -> Vec<f64> {
        self.nodes.iter().map(|v| v[1]).collect()
    }

    /// `<v_a v_b>_h` for `a, b` in `{x, y, z}`.
    pub fn second_moments(&self) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for (v, w) in self.nodes.iter().zip(&self.weights) {
            for a in 0..3 {
                for b in 0..3 {
                    m[a][b] += w * v[a] * v[b];
                }
            }
        }
        m
    }

    /// Position of `v` in this rule, matching coordinates to 1e-12.
    pub fn find_node(&self, v: [f64; 3]) -> Option<usize> {
        self.nodes.iter().position(|u| same_node(*u, v))
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "# exactness={} provenance={}\n",
            self.exactness_degree, self.provenance
        );
        for (v, w) in self.nodes.iter().zip(&self.weights) {
            s.push_str(&format!("{:?} {:?} {:?} {:?}\n", v[0], v[1], v[2], w));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty quadrature text".into()))?;
        let body = header
            .strip_prefix('#')
            .ok_or_else(|| Error::Format(format!("missing quadrature header: '{header}'")))?;
        let mut degree = None;
        let mut provenance = None;
        for tok in body.split_whitespace() {
            if let Some(d) = tok.strip_prefix("exactness=") {
                degree = Some(
                    d.parse::<usize>()
                        .map_err(|e| Error::Format(format!("bad exactness '{d}': {e}")))?,
                );
            } else if let Some(p) = tok.strip_prefix("provenance=") {
                provenance = Some(p.parse::<Provenance>()?);
            }
        }
        let (degree, provenance) = match (degree, provenance) {
            (Some(d), Some(p)) => (d, p),
            _ => {
                return Err(Error::Format(format!(
                    "incomplete quadrature header: '{header}'"
                )))
            }
        };
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 2)))?;
            if vals.len() != 4 {
                return Err(Error::Format(format!(
                    "line {}: expected 4 columns, found {}",
                    lineno + 2,
                    vals.len()
                )));
            }
            nodes.push([vals[0], vals[1], vals[2]]);
            weights.push(vals[3]);
        }
        Self::new(nodes, weights, degree, provenance)
    }
}

pub(crate) fn same_node(a: [f64; 3], b: [f64; 3]) -> bool {
    (a[0] - b[0]).abs() <= 1e-12 && (a[1] - b[1]).abs() <= 1e-12 && (a[2] - b[2]).abs() <= 1e-12
}

/// `sum_j w_j f_j`.
pub fn discrete_moment(quad: &AngularQuadrature, samples: &[f64]) -> Result<f64> {
    if samples.len() != quad.len() {
        return Err(Error::Argument(format!(
            "{} samples for a {}-node rule",
            samples.len(),
            quad.len()
        )));
    }
    Ok(quad.weights.iter().zip(samples).map(|(w, f)| w * f).sum())
}
