//! Orthonormal real spherical harmonics (no Condon-Shortley phase).

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Flat 1-based index `m^2 + l + m + 1` of degree `m`, order `l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HarmonicIndex {
    pub degree: usize,
    pub order: i64,
}

impl HarmonicIndex {
    pub fn new(degree: usize, order: i64) -> Result<Self> {
        if order.unsigned_abs() as usize > degree {
            return Err(Error::Argument(format!(
                "harmonic order {order} outside [-{degree}, {degree}]"
            )));
        }
        Ok(Self { degree, order })
    }

    pub fn flat(&self) -> usize {
        let m = self.degree as i64;
        (m * m + self.order + m + 1) as usize
    }

    pub fn from_flat(j: usize) -> Result<Self> {
        if j == 0 {
            return Err(Error::Argument("flat harmonic index starts at 1".into()));
        }
        let m = ((j - 1) as f64).sqrt().floor() as usize;
        let order = (j - 1) as i64 - (m * m) as i64 - m as i64;
        Self::new(m, order)
    }

    /// Number of harmonics of degree at most `max_degree`.
    pub fn count(max_degree: usize) -> usize {
        (max_degree + 1) * (max_degree + 1)
    }
}

/// Polar angle from +z and azimuth from +x in `[0, 2 pi)`.
pub fn angles_of(v: [f64; 3]) -> (f64, f64) {
    let theta = v[2].clamp(-1.0, 1.0).acos();
    let mut phi = v[1].atan2(v[0]);
    if phi < 0.0 {
        phi += 2.0 * PI;
    }
    (theta, phi)
}

/// Fully normalized associated Legendre values `P[m][l]`, `0 <= l <= m <= max`,
/// scaled so that `Y_{m,0} = P[m][0]`.
fn normalized_legendre(max_degree: usize, x: f64) -> Vec<Vec<f64>> {
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut p: Vec<Vec<f64>> = (0..=max_degree).map(|m| vec![0.0; m + 1]).collect();
    p[0][0] = 1.0 / (4.0 * PI).sqrt();
    for l in 1..=max_degree {
        let lf = l as f64;
        p[l][l] = ((2.0 * lf + 1.0) / (2.0 * lf)).sqrt() * s * p[l - 1][l - 1];
    }
    for l in 0..max_degree {
        p[l + 1][l] = (2.0 * l as f64 + 3.0).sqrt() * x * p[l][l];
    }
    for l in 0..=max_degree {
        for m in (l + 2)..=max_degree {
            let (mf, lf) = (m as f64, l as f64);
            let a = ((4.0 * mf * mf - 1.0) / (mf * mf - lf * lf)).sqrt();
            let b = (((mf - 1.0) * (mf - 1.0) - lf * lf) / (4.0 * (mf - 1.0) * (mf - 1.0) - 1.0))
                .sqrt();
            p[m][l] = a * (x * p[m - 1][l] - b * p[m - 2][l]);
        }
    }
    p
}

/// Real harmonic `Y_{m,l}(theta, phi)`, orthonormal on the sphere with
/// surface measure.
pub fn real_spherical_harmonic(m: usize, l: i64, theta: f64, phi: f64) -> Result<f64> {
    let idx = HarmonicIndex::new(m, l)?;
    if !(0.0..=PI).contains(&theta) || !theta.is_finite() || !phi.is_finite() {
        return Err(Error::Argument(format!(
            "angles out of range: theta={theta}, phi={phi}"
        )));
    }
    let all = harmonics_up_to(m, theta, phi);
    Ok(all[idx.flat() - 1])
}

/// All `Y_{m,l}` with `m <= max_degree`, stored at flat index minus one.
pub fn harmonics_up_to(max_degree: usize, theta: f64, phi: f64) -> Vec<f64> {
    let p = normalized_legendre(max_degree, theta.cos());
    let mut out = vec![0.0; HarmonicIndex::count(max_degree)];
    let sqrt2 = std::f64::consts::SQRT_2;
    for m in 0..=max_degree {
        let base = m * m + m;
        out[base] = p[m][0];
        for l in 1..=m {
            let lp = l as f64 * phi;
            out[base + l] = sqrt2 * p[m][l] * lp.cos();
            out[base - l] = sqrt2 * p[m][l] * lp.sin();
        }
    }
    out
}

pub fn harmonics_at(max_degree: usize, v: [f64; 3]) -> Vec<f64> {
    let (theta, phi) = angles_of(v);
    harmonics_up_to(max_degree, theta, phi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_harmonic() {
        for (t, p) in [(0.0, 0.0), (1.0, 2.0), (PI, 6.0)] {
            let y = real_spherical_harmonic(0, 0, t, p).unwrap();
            assert!((y - 0.2820947918).abs() < 1e-10);
        }
    }

    #[test]
    fn north_pole_dipole() {
        let y = real_spherical_harmonic(1, 0, 0.0, 0.0).unwrap();
        assert!((y - (3.0 / (4.0 * PI)).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn low_degree_closed_forms() {
        let (t, p) = (0.7f64, 1.3f64);
        let (st, ct) = (t.sin(), t.cos());
        let c1 = (3.0 / (4.0 * PI)).sqrt();
        let y = harmonics_up_to(2, t, p);
        assert!((y[1] - c1 * st * p.sin()).abs() < 1e-14); // (1,-1)
        assert!((y[3] - c1 * st * p.cos()).abs() < 1e-14); // (1,1)
        let c20 = (5.0 / (16.0 * PI)).sqrt();
        assert!((y[6] - c20 * (3.0 * ct * ct - 1.0)).abs() < 1e-14); // (2,0)
        let c22 = (15.0 / (16.0 * PI)).sqrt();
        assert!((y[8] - c22 * st * st * (2.0 * p).cos()).abs() < 1e-14); // (2,2)
    }

    #[test]
    fn index_bijection() {
        let mut seen = Vec::new();
        for m in 0..=6usize {
            for l in -(m as i64)..=(m as i64) {
                let j = HarmonicIndex::new(m, l).unwrap().flat();
                assert_eq!(
                    HarmonicIndex::from_flat(j).unwrap(),
                    HarmonicIndex {
                        degree: m,
                        order: l
                    }
                );
                seen.push(j);
            }
        }
        seen.sort();
        assert_eq!(seen, (1..=49).collect::<Vec<_>>());
    }

    #[test]
    fn out_of_range_order_rejected() {
        assert!(matches!(
            real_spherical_harmonic(2, 3, 0.1, 0.1),
            Err(Error::Argument(_))
        ));
        assert!(real_spherical_harmonic(2, -2, 4.0, 0.1).is_err());
    }
}
