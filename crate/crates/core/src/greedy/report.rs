use std::fmt;
use std::io::Write;

use crate::error::Result;

/// Why the greedy loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    /// Iteration budget used up.
    Budget,
    /// No unsampled candidate left.
    Exhausted,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Converged => "converged",
            Self::Budget => "budget",
            Self::Exhausted => "exhausted",
        })
    }
}

/// State of the surrogate when the stopping test ran in one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub r_rho: usize,
    pub r_g: usize,
    pub nv_rq: usize,
    pub ratio_rho: f64,
    pub ratio_g: f64,
    pub est_rho: f64,
    pub est_f: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyReport {
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
}

pub const REPORT_HEADER: &str = "iter,r_rho,r_g,nv_rq,ratio_rho,ratio_g,est_rho,est_f,wall_ms";

impl GreedyReport {
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "{REPORT_HEADER}")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{:e},{:e},{:e},{:e},{:.3}",
                r.iter,
                r.r_rho,
                r.r_g,
                r.nv_rq,
                r.ratio_rho,
                r.ratio_g,
                r.est_rho,
                r.est_f,
                r.wall_ms
            )?;
        }
        writeln!(w, "# termination={}", self.termination)?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }
}
