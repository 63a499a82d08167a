use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Quantities compared at one time level: scalar flux, in-plane flux
/// `<v f>` (x and y), and the angular flux at each test direction
/// (`n_dof x N_test`).
#[derive(Debug, Clone, PartialEq)]
pub struct LevelFields {
    pub rho: Vec<f64>,
    pub flux: [Vec<f64>; 2],
    pub f: DMatrix<f64>,
}

/// Time-accumulated errors of a reduced run against a reference.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunMetrics {
    pub e_rho: f64,
    pub r_rho: f64,
    pub e_vf: f64,
    pub r_vf: f64,
    pub e_f: f64,
    pub r_f: f64,
    pub compression_ratio: f64,
    pub offline_seconds: f64,
    pub online_seconds: f64,
    pub reference_seconds: f64,
}

impl RunMetrics {
    pub const CSV_HEADER: &'static str =
        "e_rho,r_rho,e_vf,r_vf,e_f,r_f,compression_ratio,offline_s,online_s,reference_s";

    pub fn csv_row(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:.6},{:.6},{:.6}",
            self.e_rho,
            self.r_rho,
            self.e_vf,
            self.r_vf,
            self.e_f,
            self.r_f,
            self.compression_ratio,
            self.offline_seconds,
            self.online_seconds,
            self.reference_seconds
        )
    }
}

/// Relative error at one level, for error-vs-time plots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelError {
    pub level: usize,
    pub time: f64,
    pub rel_rho: f64,
    pub rel_vf: f64,
    pub rel_f: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Streaming accumulator for the time-integrated errors. Levels are fed in
/// order `1..=N_t`; level 0 does not enter the sums.
#[derive(Debug, Clone)]
pub struct ErrorAccumulator {
    dt: f64,
    cell_area: f64,
    rho: (f64, f64),
    vf: (f64, f64),
    f_err: Vec<f64>,
    f_ref: Vec<f64>,
    levels: usize,
    series: Vec<LevelError>,
}

impl ErrorAccumulator {
    pub fn new(dt: f64, cell_area: f64, n_test: usize) -> Self {
        Self {
            dt,
            cell_area,
            rho: (0.0, 0.0),
            vf: (0.0, 0.0),
            f_err: vec![0.0; n_test],
            f_ref: vec![0.0; n_test],
            levels: 0,
            series: Vec::new(),
        }
    }

    pub fn add_level(&mut self, rom: &LevelFields, reference: &LevelFields) -> Result<()> {
        let n = reference.rho.len();
        let same = rom.rho.len() == n
            && rom
                .flux
                .iter()
                .chain(reference.flux.iter())
                .all(|c| c.len() == n)
            && rom.f.shape() == reference.f.shape()
            && reference.f.nrows() == n
            && reference.f.ncols() == self.f_err.len();
        if !same {
            return Err(Error::Argument(
                "reduced and reference fields differ in shape".into(),
            ));
        }
        let a = self.cell_area;
        let sq = |x: &[f64], y: &[f64]| -> (f64, f64) {
            x.iter().zip(y).fold((0.0, 0.0), |(e, r), (p, q)| {
                (e + (p - q) * (p - q), r + q * q)
            })
        };
        let (er, rr) = sq(&rom.rho, &reference.rho);
        let (ex, rx) = sq(&rom.flux[0], &reference.flux[0]);
        let (ey, ry) = sq(&rom.flux[1], &reference.flux[1]);
        self.rho.0 += a * er;
        self.rho.1 += a * rr;
        self.vf.0 += a * (ex + ey);
        self.vf.1 += a * (rx + ry);
        let mut worst_f = 0.0f64;
        for j in 0..self.f_err.len() {
            let d = (rom.f.column(j) - reference.f.column(j)).norm_squared() * a;
            let r = reference.f.column(j).norm_squared() * a;
            self.f_err[j] += d;
            self.f_ref[j] += r;
            worst_f = worst_f.max(ratio(d.sqrt(), r.sqrt()));
        }
        self.levels += 1;
        self.series.push(LevelError {
            level: self.levels,
            time: self.levels as f64 * self.dt,
            rel_rho: ratio(er.sqrt(), rr.sqrt()),
            rel_vf: ratio((ex + ey).sqrt(), (rx + ry).sqrt()),
            rel_f: worst_f,
        });
        Ok(())
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn series(&self) -> &[LevelError] {
        &self.series
    }

    /// Absolute and relative errors. `E_f` and the normalizer of `R_f` are
    /// each the maximum over test directions.
    pub fn finish(&self) -> RunMetrics {
        let dt = self.dt;
        let e_f = self
            .f_err
            .iter()
            .fold(0.0f64, |m, e| m.max((dt * e).sqrt()));
        let n_f = self
            .f_ref
            .iter()
            .fold(0.0f64, |m, e| m.max((dt * e).sqrt()));
        let e_rho = (dt * self.rho.0).sqrt();
        let e_vf = (dt * self.vf.0).sqrt();
        RunMetrics {
            e_rho,
            r_rho: ratio(e_rho, (dt * self.rho.1).sqrt()),
            e_vf,
            r_vf: ratio(e_vf, (dt * self.vf.1).sqrt()),
            e_f,
            r_f: ratio(e_f, n_f),
            ..RunMetrics::default()
        }
    }
}

/// Errors of a reduced trajectory against a reference over levels `1..=N_t`.
/// Both slices hold levels `0..=N_t`.
pub fn error_metrics(
    rom: &[LevelFields],
    reference: &[LevelFields],
    dt: f64,
    cell_area: f64,
) -> Result<RunMetrics> {
    if rom.len() != reference.len() || rom.is_empty() {
        return Err(Error::Argument(format!(
            "time grids differ: {} reduced levels, {} reference levels",
            rom.len(),
            reference.len()
        )));
    }
    let n_test = reference[0].f.ncols();
    let mut acc = ErrorAccumulator::new(dt, cell_area, n_test);
    for (r, f) in rom.iter().zip(reference).skip(1) {
        acc.add_level(r, f)?;
    }
    Ok(acc.finish())
}

/// Reduced degrees of freedom over full-order degrees of freedom.
pub fn compression_ratio(
    r_rho: usize,
    r_g: usize,
    n_rq: usize,
    n_train: usize,
    n_dof: usize,
) -> f64 {
    (r_rho + n_rq * r_g) as f64 / ((n_train + 1) * n_dof) as f64
}
