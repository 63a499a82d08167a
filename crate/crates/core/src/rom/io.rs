//! Binary persistence of reduced models.
//!
//! Layout (little endian): magic, `epsilon`, `dt` as `f64`, the angular set
//! as a length-prefixed text block, then every stored matrix as
//! `rows: u64, cols: u64` followed by column-major `f64` data. Factorizations
//! are rebuilt on load, so a reloaded model steps bit-for-bit like the
//! original.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::basis::ReducedBasis;
use super::model::{ProjectedOperators, ReducedModel};
use crate::angular::AngularQuadrature;
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 8] = b"MMRBROM1";

fn put_u64(w: &mut impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_matrix(w: &mut impl Write, m: &DMatrix<f64>) -> Result<()> {
    put_u64(w, m.nrows() as u64)?;
    put_u64(w, m.ncols() as u64)?;
    for v in m.iter() {
        put_f64(w, *v)?;
    }
    Ok(())
}

fn get_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|e| Error::Format(format!("truncated model file: {e}")))?;
    Ok(u64::from_le_bytes(b))
}

fn get_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_bits(get_u64(r)?))
}

fn get_matrix(r: &mut impl Read) -> Result<DMatrix<f64>> {
    let rows = get_u64(r)? as usize;
    let cols = get_u64(r)? as usize;
    let len = rows
        .checked_mul(cols)
        .filter(|n| *n <= 1 << 32)
        .ok_or_else(|| Error::Format(format!("implausible matrix shape {rows}x{cols}")))?;
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        data.push(get_f64(r)?);
    }
    Ok(DMatrix::from_vec(rows, cols, data))
}

fn vector_as_matrix(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

fn matrix_as_vector(m: DMatrix<f64>) -> Result<DVector<f64>> {
    if m.ncols() != 1 {
        return Err(Error::Format(format!(
            "expected a column, found {} columns",
            m.ncols()
        )));
    }
    Ok(DVector::from_column_slice(m.as_slice()))
}

pub fn write_model(w: &mut impl Write, model: &ReducedModel) -> Result<()> {
    w.write_all(MODEL_MAGIC)?;
    put_f64(w, model.epsilon)?;
    put_f64(w, model.dt)?;
    let text = model.quad.to_text();
    put_u64(w, text.len() as u64)?;
    w.write_all(text.as_bytes())?;
    for basis in [&model.basis_rho, &model.basis_g] {
        put_matrix(w, &basis.b)?;
        put_matrix(w, &vector_as_matrix(&basis.sigma))?;
        put_matrix(w, &basis.v)?;
    }
    let o = &model.ops;
    for m in [
        &o.mass_rho,
        &o.absorption_rho,
        &o.jump_rho,
        &o.mass_g,
        &o.scattering_g,
        &o.absorption_g,
        &o.plus_x,
        &o.plus_y,
        &o.minus_x,
        &o.minus_y,
        &o.gg_minus_x,
        &o.gg_plus_x,
        &o.gg_minus_y,
        &o.gg_plus_y,
    ] {
        put_matrix(w, m)?;
    }
    put_matrix(w, &vector_as_matrix(&o.load_rho))?;
    Ok(())
}

pub fn read_model(r: &mut impl Read) -> Result<ReducedModel> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|e| Error::Format(format!("truncated model file: {e}")))?;
    if &magic != MODEL_MAGIC {
        return Err(Error::Format("not a reduced model file".into()));
    }
    let epsilon = get_f64(r)?;
    let dt = get_f64(r)?;
    let len = get_u64(r)? as usize;
    if len > 1 << 28 {
        return Err(Error::Format(format!(
            "implausible quadrature block of {len} bytes"
        )));
    }
    let mut text = vec![0u8; len];
    r.read_exact(&mut text)
        .map_err(|e| Error::Format(format!("truncated quadrature block: {e}")))?;
    let text =
        String::from_utf8(text).map_err(|e| Error::Format(format!("quadrature block: {e}")))?;
    let quad = AngularQuadrature::from_text(&text)?;
    let mut basis = || -> Result<ReducedBasis> {
        Ok(ReducedBasis {
            b: get_matrix(r)?,
            sigma: matrix_as_vector(get_matrix(r)?)?,
            v: get_matrix(r)?,
        })
    };
    let basis_rho = basis()?;
    let basis_g = basis()?;
    let mut m = || get_matrix(r);
    let ops = ProjectedOperators {
        mass_rho: m()?,
        absorption_rho: m()?,
        jump_rho: m()?,
        mass_g: m()?,
        scattering_g: m()?,
        absorption_g: m()?,
        plus_x: m()?,
        plus_y: m()?,
        minus_x: m()?,
        minus_y: m()?,
        gg_minus_x: m()?,
        gg_plus_x: m()?,
        gg_minus_y: m()?,
        gg_plus_y: m()?,
        load_rho: matrix_as_vector(m()?)?,
    };
    let (rr, rg) = (basis_rho.rank(), basis_g.rank());
    let shapes_ok = ops.mass_rho.shape() == (rr, rr)
        && ops.mass_g.shape() == (rg, rg)
        && ops.plus_x.shape() == (rr, rg)
        && ops.minus_x.shape() == (rg, rr)
        && ops.load_rho.len() == rr
        && basis_rho.sigma.len() == rr
        && basis_g.sigma.len() == rg;
    if !shapes_ok {
        return Err(Error::Format(
            "inconsistent matrix shapes in model file".into(),
        ));
    }
    ReducedModel::assemble(basis_rho, basis_g, quad, epsilon, dt, ops)
}

pub fn save_model(path: impl AsRef<Path>, model: &ReducedModel) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_model(&mut w, model)?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ReducedModel> {
    read_model(&mut BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::lebedev;
    use crate::fom::ProblemDefinition;
    use crate::rom::project_operators;
    use crate::spatial::{BoundaryCondition, SpatialMesh};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model() -> (ProblemDefinition, ReducedModel) {
        let mesh = SpatialMesh::new((0.0, 1.0), (0.0, 1.0), 3, 3).unwrap();
        let p = ProblemDefinition {
            mesh,
            epsilon: 0.1,
            sigma_s: vec![2.0; 9],
            sigma_a: vec![0.5; 9],
            source: vec![1.0; 9],
            initial_rho: (0..9).map(|k| k as f64).collect(),
            initial_g: None,
            final_time: 0.1,
            bc: BoundaryCondition::Periodic,
        };
        let q = lebedev(26).unwrap();
        let ops = p.operators_for(&q).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = DMatrix::from_fn(9, 4, |_, _| rng.random_range(-1.0..1.0));
        let b = ReducedBasis::from_snapshots(&s).unwrap();
        let m = project_operators(&p, &ops, &b, &b, &q, 0.02).unwrap();
        (p, m)
    }

    #[test]
    fn roundtrip_is_bitwise() {
        let (p, m) = model();
        let mut bytes = Vec::new();
        write_model(&mut bytes, &m).unwrap();
        let back = read_model(&mut bytes.as_slice()).unwrap();
        let mut again = Vec::new();
        write_model(&mut again, &back).unwrap();
        assert_eq!(bytes, again);
        assert_eq!(back.basis_rho, m.basis_rho);
        assert_eq!(back.ops, m.ops);
        let (a, _) = m.step(&m.initial_state(&p)).unwrap();
        let (b, _) = back.step(&back.initial_state(&p)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn corrupt_input_is_a_format_error() {
        let (_, m) = model();
        let mut bytes = Vec::new();
        write_model(&mut bytes, &m).unwrap();
        assert!(matches!(
            read_model(&mut &bytes[..bytes.len() - 3]),
            Err(Error::Format(_))
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            read_model(&mut bad.as_slice()),
            Err(Error::Format(_))
        ));
    }
}
