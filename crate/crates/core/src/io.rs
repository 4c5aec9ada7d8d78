//! CSV datasets, JSON sidecars and the configuration hash.
//!
//! Every CSV starts with a `# config_hash=<hex>` line followed by the header.
//! Numbers are written in shortest round-trip scientific form, so equal
//! inputs give byte-identical files.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::boundary::BoundaryDatum;
use crate::domain::ConvexDomain;
use crate::dynamics::{energy, impulse, PhaseState};
use crate::error::{Error, Result};
use crate::fields::FieldModel;
use crate::linalg::Vec3;
use crate::real::Real;
use crate::scattering::ScatteringDatum;

/// Hex SHA-256 digest.
pub fn config_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn fmt_num(x: f64) -> String {
    format!("{x:e}")
}

fn io_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Io(e.to_string())
}

fn names(prefix: &str, dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("{prefix}{i}")).collect()
}

fn push_vec<T: Real>(row: &mut Vec<String>, v: &Vec3<T>, dim: usize) {
    row.extend(v.to_f64(dim).into_iter().map(fmt_num));
}

fn writer<W: Write>(mut w: W, hash: &str) -> Result<csv::Writer<W>> {
    writeln!(w, "# config_hash={hash}").map_err(io_err)?;
    Ok(csv::Writer::from_writer(w))
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r)
}

fn parse_row(rec: &csv::StringRecord) -> Result<Vec<f64>> {
    rec.iter().map(|f| f.trim().parse::<f64>().map_err(|e| Error::Io(format!("bad number {f:?}: {e}")))).collect()
}

fn take<T: Real>(vals: &[f64], at: &mut usize, dim: usize) -> Vec3<T> {
    let v = Vec3::from_f64(&vals[*at..*at + dim]);
    *at += dim;
    v
}

pub fn boundary_header(dim: usize) -> Vec<String> {
    let mut h = names("q0_", dim);
    h.extend(names("q_", dim));
    h.extend(["E".to_string(), "s".to_string()]);
    h.extend(names("k0_", dim));
    h.extend(names("k_", dim));
    h.extend(["S0".to_string(), "residual".to_string()]);
    h
}

/// Boundary dataset; a missing action is written as `nan`.
pub fn write_boundary_csv<W: Write, T: Real>(w: W, data: &[BoundaryDatum<T>], dim: usize, hash: &str) -> Result<()> {
    let mut out = writer(w, hash)?;
    out.write_record(boundary_header(dim)).map_err(io_err)?;
    for d in data {
        let mut row = Vec::new();
        push_vec(&mut row, &d.q0, dim);
        push_vec(&mut row, &d.q, dim);
        row.push(fmt_num(d.e.as_f64()));
        row.push(fmt_num(d.s.as_f64()));
        push_vec(&mut row, &d.k0, dim);
        push_vec(&mut row, &d.k, dim);
        row.push(fmt_num(d.s0.map_or(f64::NAN, |v| v.as_f64())));
        row.push(fmt_num(d.residual.as_f64()));
        out.write_record(&row).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Reads a boundary dataset; impulses are rebuilt from the velocities with the model's `g⁻¹`.
pub fn read_boundary_csv<R: Read, T: Real>(r: R, model: &FieldModel<T>) -> Result<Vec<BoundaryDatum<T>>> {
    let dim = model.dim;
    let mut rd = reader(r);
    let header: Vec<String> = rd.headers().map_err(io_err)?.iter().map(str::to_string).collect();
    if header != boundary_header(dim) {
        return Err(Error::Io(format!("unexpected boundary header for dimension {dim}")));
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let vals = parse_row(&rec.map_err(io_err)?)?;
        let mut at = 0;
        let q0 = take(&vals, &mut at, dim);
        let q = take(&vals, &mut at, dim);
        let e = T::lit(vals[at]);
        let s = T::lit(vals[at + 1]);
        at += 2;
        let k0 = take(&vals, &mut at, dim);
        let k = take(&vals, &mut at, dim);
        let s0 = if vals[at].is_nan() { None } else { Some(T::lit(vals[at])) };
        out.push(BoundaryDatum {
            q0,
            q,
            e,
            s,
            k0,
            k,
            kbar0: impulse(model, &k0)?,
            kbar: impulse(model, &k)?,
            s0,
            residual: T::lit(vals[at + 1]),
            iterations: 0,
        });
    }
    Ok(out)
}

pub fn scattering_header(dim: usize) -> Vec<String> {
    let mut h = names("v_minus_", dim);
    h.extend(names("x_minus_", dim));
    h.extend(names("v_plus_", dim));
    h.extend(names("x_plus_", dim));
    h.extend(["E", "chi", "tau_minus", "tau_plus"].map(String::from));
    h
}

/// Scattering dataset; `chi`, `tau_minus`, `tau_plus` describe the incoming line's chord through `domain`.
pub fn write_scattering_csv<W: Write, T: Real>(w: W, data: &[ScatteringDatum<T>], domain: &ConvexDomain<T>, hash: &str) -> Result<()> {
    let dim = domain.dim;
    let mut out = writer(w, hash)?;
    out.write_record(scattering_header(dim)).map_err(io_err)?;
    for d in data {
        let ch = domain.chord(&d.v_minus, &d.x_minus);
        let mut row = Vec::new();
        for v in [&d.v_minus, &d.x_minus, &d.v_plus, &d.x_plus] {
            push_vec(&mut row, v, dim);
        }
        row.push(fmt_num(d.e.as_f64()));
        row.push(ch.chi.to_string());
        row.push(fmt_num(ch.tau_minus.as_f64()));
        row.push(fmt_num(ch.tau_plus.as_f64()));
        out.write_record(&row).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn read_scattering_csv<R: Read, T: Real>(r: R, dim: usize) -> Result<Vec<ScatteringDatum<T>>> {
    let mut rd = reader(r);
    let header: Vec<String> = rd.headers().map_err(io_err)?.iter().map(str::to_string).collect();
    if header != scattering_header(dim) {
        return Err(Error::Io(format!("unexpected scattering header for dimension {dim}")));
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let vals = parse_row(&rec.map_err(io_err)?)?;
        let mut at = 0;
        let v_minus = take(&vals, &mut at, dim);
        let x_minus = take(&vals, &mut at, dim);
        let v_plus = take(&vals, &mut at, dim);
        let x_plus = take(&vals, &mut at, dim);
        out.push(ScatteringDatum { v_minus, x_minus, v_plus, x_plus, e: T::lit(vals[at]), in_m_e: true });
    }
    Ok(out)
}

/// Trajectory dump: `t, x…, p…, E`.
pub fn write_trajectory_csv<W: Write, T: Real>(w: W, model: &FieldModel<T>, states: &[PhaseState<T>], hash: &str) -> Result<()> {
    let dim = model.dim;
    let mut out = writer(w, hash)?;
    let mut header = vec!["t".to_string()];
    header.extend(names("x", dim));
    header.extend(names("p", dim));
    header.push("E".into());
    out.write_record(&header).map_err(io_err)?;
    for s in states {
        let mut row = vec![fmt_num(s.t.as_f64())];
        push_vec(&mut row, &s.x, dim);
        push_vec(&mut row, &s.p, dim);
        row.push(fmt_num(energy(model, &s.x, &s.p).as_f64()));
        out.write_record(&row).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Plain numeric table with the hash line and a header.
pub fn write_table_csv<W: Write>(w: W, header: &[String], rows: &[Vec<f64>], hash: &str) -> Result<()> {
    let mut out = writer(w, hash)?;
    out.write_record(header).map_err(io_err)?;
    for r in rows {
        out.write_record(r.iter().map(|v| fmt_num(*v))).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Description written next to every dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub config_hash: String,
    pub kind: String,
    pub rows: usize,
    pub gauge: Option<String>,
    pub details: serde_json::Value,
}

pub fn write_json<W: Write, S: Serialize>(mut w: W, value: &S) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value).map_err(io_err)?;
    writeln!(w).map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{shoot, ShootOptions};
    use crate::fields::Mode;

    #[test]
    fn boundary_roundtrip_is_exact() {
        let m = FieldModel::<f64>::free(2, 1.0, Mode::Relativistic).with_constant_b12(0.1);
        let d = ConvexDomain::unit_ball(2);
        let g = d.boundary_grid(5);
        let data = vec![shoot(&m, &d, &g[0], &g[2], 200.0, &ShootOptions::default()).unwrap()];
        let mut buf = Vec::new();
        write_boundary_csv(&mut buf, &data, 2, "abc").unwrap();
        assert!(buf.starts_with(b"# config_hash=abc\n"));
        let back = read_boundary_csv(&buf[..], &m).unwrap();
        assert_eq!(back[0].q0, data[0].q0);
        assert_eq!(back[0].k, data[0].k);
        assert_eq!(back[0].s0, data[0].s0);
        assert!((back[0].kbar - data[0].kbar).norm() < 1e-9 * data[0].kbar.norm());
    }

    #[test]
    fn hash_is_sha256() {
        assert_eq!(config_hash(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
