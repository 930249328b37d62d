//! Versioned binary containers for sketches and pseudoinverse bundles,
//! plus JSON debug forms.
//!
//! Layout is little-endian, length-prefixed, field by field; floats are
//! stored as raw bits so a build → save → load → query round trip is
//! bit-exact. Containers open with a 4-byte magic and a u32 version.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::pinv::PseudoinverseSketch;
use crate::sketch::{ComponentSketch, LaplacianSketch, SketchEntry};
use crate::solver::{Preconditioner, RealGraph, SolverOperator, SpectralSparsifier};
use crate::{Error, Result};

const SKETCH_MAGIC: &[u8; 4] = b"LSK1";
const PINV_MAGIC: &[u8; 4] = b"LPV1";
const FORMAT_VERSION: u32 = 1;

struct Enc<W: Write>(W);

impl<W: Write> Enc<W> {
    fn u8(&mut self, v: u8) -> Result<()> {
        self.0.write_all(&[v])?;
        Ok(())
    }
    fn u32(&mut self, v: u32) -> Result<()> {
        self.0.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn u64(&mut self, v: u64) -> Result<()> {
        self.0.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn usize(&mut self, v: usize) -> Result<()> {
        self.u64(v as u64)
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        self.u64(v.to_bits())
    }
}

struct Dec<R: Read>(R);

impl<R: Read> Dec<R> {
    fn u8(&mut self) -> Result<u8> {
        let mut b = [0u8; 1];
        self.0.read_exact(&mut b)?;
        Ok(b[0])
    }
    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.0.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }
    fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.0.read_exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }
    fn usize(&mut self) -> Result<usize> {
        Ok(self.u64()? as usize)
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
}

fn check_magic(dec: &mut Dec<impl Read>, magic: &[u8; 4], what: &str) -> Result<()> {
    let mut seen = [0u8; 4];
    dec.0.read_exact(&mut seen)?;
    if &seen != magic {
        return Err(Error::Format(format!(
            "{what}: bad magic {seen:02x?}, expected {magic:02x?}"
        )));
    }
    let version = dec.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "{what}: unsupported version {version}"
        )));
    }
    Ok(())
}

fn encode_component(enc: &mut Enc<impl Write>, c: &ComponentSketch) -> Result<()> {
    enc.u64(c.alpha())?;
    enc.usize(c.n())?;
    for &d in c.degrees() {
        enc.u64(d)?;
    }
    for &d in c.high_internal_deg() {
        enc.u64(d)?;
    }
    enc.usize(c.stored_edges().len())?;
    for &(u, v) in c.stored_edges() {
        enc.usize(u)?;
        enc.usize(v)?;
    }
    enc.usize(c.samples().len())?;
    for &(u, v, cnt) in c.samples() {
        enc.usize(u)?;
        enc.usize(v)?;
        enc.u32(cnt)?;
    }
    Ok(())
}

fn decode_component(dec: &mut Dec<impl Read>) -> Result<ComponentSketch> {
    let alpha = dec.u64()?;
    let n = dec.usize()?;
    let degrees: Vec<u64> = (0..n).map(|_| dec.u64()).collect::<Result<_>>()?;
    let high: Vec<u64> = (0..n).map(|_| dec.u64()).collect::<Result<_>>()?;
    let n_stored = dec.usize()?;
    let mut stored = Vec::with_capacity(n_stored);
    for _ in 0..n_stored {
        let u = dec.usize()?;
        let v = dec.usize()?;
        stored.push((u, v));
    }
    let n_samples = dec.usize()?;
    let mut samples = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let u = dec.usize()?;
        let v = dec.usize()?;
        let cnt = dec.u32()?;
        samples.push((u, v, cnt));
    }
    Ok(ComponentSketch::from_parts(
        alpha, degrees, high, stored, samples,
    ))
}

fn encode_sketch_body(enc: &mut Enc<impl Write>, sk: &LaplacianSketch) -> Result<()> {
    enc.usize(sk.n)?;
    enc.f64(sk.epsilon)?;
    enc.u64(sk.seed)?;
    enc.u64(sk.alpha)?;
    enc.f64(sk.c_alpha)?;
    enc.f64(sk.phi_target)?;
    enc.u64(sk.graph_hash)?;
    enc.usize(sk.entries.len())?;
    for entry in &sk.entries {
        enc.u32(entry.level)?;
        enc.u32(entry.round)?;
        enc.u8(entry.exact_fallback as u8)?;
        enc.usize(entry.vertices.len())?;
        for &v in &entry.vertices {
            enc.usize(v)?;
        }
        encode_component(enc, &entry.data)?;
    }
    Ok(())
}

fn decode_sketch_body(dec: &mut Dec<impl Read>) -> Result<LaplacianSketch> {
    let n = dec.usize()?;
    let epsilon = dec.f64()?;
    let seed = dec.u64()?;
    let alpha = dec.u64()?;
    let c_alpha = dec.f64()?;
    let phi_target = dec.f64()?;
    let graph_hash = dec.u64()?;
    let n_entries = dec.usize()?;
    let mut entries = Vec::with_capacity(n_entries);
    for _ in 0..n_entries {
        let level = dec.u32()?;
        let round = dec.u32()?;
        let exact_fallback = dec.u8()? != 0;
        let n_verts = dec.usize()?;
        let vertices: Vec<usize> = (0..n_verts).map(|_| dec.usize()).collect::<Result<_>>()?;
        let data = decode_component(dec)?;
        entries.push(SketchEntry {
            level,
            round,
            vertices,
            data,
            exact_fallback,
        });
    }
    Ok(LaplacianSketch {
        n,
        epsilon,
        seed,
        alpha,
        c_alpha,
        phi_target,
        graph_hash,
        entries,
    })
}

/// Serialize a Laplacian sketch.
pub fn write_sketch(w: impl Write, sk: &LaplacianSketch) -> Result<()> {
    let mut enc = Enc(w);
    enc.0.write_all(SKETCH_MAGIC)?;
    enc.u32(FORMAT_VERSION)?;
    encode_sketch_body(&mut enc, sk)
}

pub fn read_sketch(r: impl Read) -> Result<LaplacianSketch> {
    let mut dec = Dec(r);
    check_magic(&mut dec, SKETCH_MAGIC, "sketch container")?;
    decode_sketch_body(&mut dec)
}

fn encode_solver(enc: &mut Enc<impl Write>, s: &SolverOperator) -> Result<()> {
    enc.f64(s.epsilon)?;
    enc.u32(s.z)?;
    enc.f64(s.certified_range.0)?;
    enc.f64(s.certified_range.1)?;
    enc.f64(s.sparsifier.gamma)?;
    enc.usize(s.sparsifier.graph.n())?;
    enc.usize(s.sparsifier.graph.m())?;
    for &(u, v, w) in s.sparsifier.graph.edges() {
        enc.usize(u)?;
        enc.usize(v)?;
        enc.f64(w)?;
    }
    match &s.precond {
        Preconditioner::Dense(m) => {
            enc.u8(0)?;
            enc.usize(m.nrows())?;
            for r in 0..m.nrows() {
                for c in 0..m.ncols() {
                    enc.f64(m[(r, c)])?;
                }
            }
        }
        Preconditioner::Chebyshev { coeffs, lo, hi } => {
            enc.u8(1)?;
            enc.f64(*lo)?;
            enc.f64(*hi)?;
            enc.usize(coeffs.len())?;
            for &c in coeffs {
                enc.f64(c)?;
            }
        }
    }
    Ok(())
}

fn decode_solver(dec: &mut Dec<impl Read>) -> Result<SolverOperator> {
    let epsilon = dec.f64()?;
    let z = dec.u32()?;
    let cert_lo = dec.f64()?;
    let cert_hi = dec.f64()?;
    let gamma = dec.f64()?;
    let n = dec.usize()?;
    let m = dec.usize()?;
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let u = dec.usize()?;
        let v = dec.usize()?;
        let w = dec.f64()?;
        edges.push((u, v, w));
    }
    let graph = RealGraph::new(n, edges);
    let precond = match dec.u8()? {
        0 => {
            let rows = dec.usize()?;
            let mut mat = DMatrix::zeros(rows, rows);
            for r in 0..rows {
                for c in 0..rows {
                    mat[(r, c)] = dec.f64()?;
                }
            }
            Preconditioner::Dense(mat)
        }
        1 => {
            let lo = dec.f64()?;
            let hi = dec.f64()?;
            let k = dec.usize()?;
            let coeffs: Vec<f64> = (0..k).map(|_| dec.f64()).collect::<Result<_>>()?;
            Preconditioner::Chebyshev { coeffs, lo, hi }
        }
        other => {
            return Err(Error::Format(format!(
                "unknown preconditioner mode {other}"
            )))
        }
    };
    let components = graph.connected_components();
    Ok(SolverOperator {
        sparsifier: SpectralSparsifier { graph, gamma },
        precond,
        z,
        epsilon,
        components,
        certified_range: (cert_lo, cert_hi),
    })
}

/// Serialize a pseudoinverse sketch (solver + sketch copies + graph hash).
pub fn write_pinv(w: impl Write, psk: &PseudoinverseSketch) -> Result<()> {
    let mut enc = Enc(w);
    enc.0.write_all(PINV_MAGIC)?;
    enc.u32(FORMAT_VERSION)?;
    enc.f64(psk.epsilon)?;
    enc.f64(psk.epsilon_internal)?;
    enc.u64(psk.seed)?;
    enc.u64(psk.graph_hash)?;
    encode_solver(&mut enc, &psk.solver)?;
    enc.usize(psk.sketches.len())?;
    for sk in &psk.sketches {
        encode_sketch_body(&mut enc, sk)?;
    }
    Ok(())
}

pub fn read_pinv(r: impl Read) -> Result<PseudoinverseSketch> {
    let mut dec = Dec(r);
    check_magic(&mut dec, PINV_MAGIC, "pseudoinverse container")?;
    let epsilon = dec.f64()?;
    let epsilon_internal = dec.f64()?;
    let seed = dec.u64()?;
    let graph_hash = dec.u64()?;
    let solver = decode_solver(&mut dec)?;
    let n_sketches = dec.usize()?;
    let mut sketches = Vec::with_capacity(n_sketches);
    for _ in 0..n_sketches {
        let sk = decode_sketch_body(&mut dec)?;
        if sk.graph_hash != graph_hash {
            return Err(Error::Format(
                "bundled sketch was built from a different graph".into(),
            ));
        }
        sketches.push(sk);
    }
    if sketches.is_empty() {
        return Err(Error::Format("pseudoinverse container has no sketches".into()));
    }
    Ok(PseudoinverseSketch {
        solver,
        sketches,
        epsilon,
        epsilon_internal,
        seed,
        graph_hash,
    })
}

/// JSON debug form of a sketch.
pub fn sketch_to_json(sk: &LaplacianSketch) -> Result<String> {
    serde_json::to_string_pretty(sk).map_err(|e| Error::Format(e.to_string()))
}

/// JSON debug form of a pseudoinverse sketch.
pub fn pinv_to_json(psk: &PseudoinverseSketch) -> Result<String> {
    serde_json::to_string_pretty(psk).map_err(|e| Error::Format(e.to_string()))
}
