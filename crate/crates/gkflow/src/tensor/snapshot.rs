//! Self-describing field snapshots.
//!
//! A snapshot is an ASCII header of `key: value` lines opened by the magic
//! line `gkflow-field 1` and closed by `end_header`, followed by the
//! components in storage order (point-major, covariant indices first, row-major
//! within a point). The payload is either little-endian binary float64 or one
//! value per line in `%.16e` text.

use std::io::{BufRead, Read, Write};
use std::path::Path;
use std::sync::Arc;

use super::backend::{Backend, FrameAlgebra, PatchChart, Stencil, TorusChart};
use super::field::{Symmetry, TensorField};
use crate::error::{Error, Result};

pub const FIELD_MAGIC: &str = "gkflow-field 1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Payload {
    Binary,
    Text,
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

/// Header lines describing a backend.
pub fn backend_header(b: &Backend) -> Vec<(String, String)> {
    let mut h = vec![("backend".to_string(), b.kind().to_string()), ("dim".into(), b.dim().to_string())];
    match b {
        Backend::Torus(t) => {
            h.push(("resolution".into(), t.resolution().iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" ")));
            h.push(("periods".into(), join(t.periods())));
            h.push(("stencil".into(), t.stencil().name()));
        }
        Backend::Frame(f) => {
            h.push(("algebra".into(), f.name().to_string()));
            h.push(("structure_constants".into(), join(f.structure_constants())));
            h.push(("frame_metric".into(), join(f.frame_metric())));
        }
        Backend::Patch(p) => {
            h.push(("center".into(), join(p.center())));
            h.push(("spacing".into(), format!("{:?}", p.spacing())));
            h.push(("half_width".into(), (p.side() / 2).to_string()));
            h.push(("order".into(), p.order().to_string()));
        }
    }
    h
}

pub(crate) struct Header {
    pub entries: Vec<(String, String)>,
}

impl Header {
    pub fn get(&self, key: &str) -> Result<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Format(format!("missing header key '{key}'")))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.get(key)?.trim().parse().map_err(|_| Error::Format(format!("bad integer for '{key}'")))
    }

    pub fn floats(&self, key: &str) -> Result<Vec<f64>> {
        self.get(key)?
            .split_whitespace()
            .map(|s| s.parse::<f64>().map_err(|_| Error::Format(format!("bad float in '{key}'"))))
            .collect()
    }

    pub fn usizes(&self, key: &str) -> Result<Vec<usize>> {
        self.get(key)?
            .split_whitespace()
            .map(|s| s.parse::<usize>().map_err(|_| Error::Format(format!("bad integer in '{key}'"))))
            .collect()
    }
}

pub(crate) fn read_header(r: &mut impl BufRead, magic: &str) -> Result<Header> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    if line.trim_end() != magic {
        return Err(Error::Format(format!("expected '{magic}', found '{}'", line.trim_end())));
    }
    let mut entries = Vec::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::Format("unterminated header".into()));
        }
        let l = line.trim_end();
        if l == "end_header" {
            break;
        }
        let (k, v) = l.split_once(':').ok_or_else(|| Error::Format(format!("bad header line '{l}'")))?;
        entries.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(Header { entries })
}

pub(crate) fn backend_from_header(h: &Header) -> Result<Arc<Backend>> {
    let dim = h.usize("dim")?;
    let b = match h.get("backend")? {
        "torus" => {
            let res = h.usizes("resolution")?;
            let per = h.floats("periods")?;
            Backend::Torus(TorusChart::new(&res, &per, Stencil::parse(h.get("stencil")?)?)?)
        }
        "frame" => Backend::Frame(FrameAlgebra::new(
            h.get("algebra")?,
            dim,
            h.floats("structure_constants")?,
            h.floats("frame_metric")?,
        )?),
        "patch" => Backend::Patch(PatchChart::new(
            &h.floats("center")?,
            h.floats("spacing")?[0],
            h.usize("half_width")?,
            h.usize("order")?,
        )?),
        other => return Err(Error::Format(format!("unknown backend '{other}'"))),
    };
    if b.dim() != dim {
        return Err(Error::Format("dimension does not match backend description".into()));
    }
    Ok(Arc::new(b))
}

pub(crate) fn write_values(w: &mut impl Write, v: &[f64], payload: Payload) -> Result<()> {
    match payload {
        Payload::Binary => {
            let mut buf = Vec::with_capacity(v.len() * 8);
            for x in v {
                buf.extend_from_slice(&x.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Payload::Text => {
            for x in v {
                writeln!(w, "{x:.16e}")?;
            }
        }
    }
    Ok(())
}

pub(crate) fn read_values(r: &mut impl BufRead, count: usize, payload: Payload) -> Result<Vec<f64>> {
    match payload {
        Payload::Binary => {
            let mut buf = vec![0u8; count * 8];
            r.read_exact(&mut buf).map_err(|_| Error::Format("truncated payload".into()))?;
            Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
        }
        Payload::Text => {
            let mut out = Vec::with_capacity(count);
            let mut line = String::new();
            while out.len() < count {
                line.clear();
                if r.read_line(&mut line)? == 0 {
                    return Err(Error::Format("truncated payload".into()));
                }
                let t = line.trim();
                if t.is_empty() {
                    continue;
                }
                out.push(t.parse().map_err(|_| Error::Format(format!("bad value '{t}'")))?);
            }
            Ok(out)
        }
    }
}

pub(crate) fn payload_name(p: Payload) -> &'static str {
    match p {
        Payload::Binary => "binary-le",
        Payload::Text => "text",
    }
}

pub(crate) fn parse_payload(s: &str) -> Result<Payload> {
    match s {
        "binary-le" => Ok(Payload::Binary),
        "text" => Ok(Payload::Text),
        _ => Err(Error::Format(format!("unknown payload '{s}'"))),
    }
}

/// Writes one field.
pub fn write_field(w: &mut impl Write, name: &str, t: &TensorField, payload: Payload) -> Result<()> {
    writeln!(w, "{FIELD_MAGIC}")?;
    writeln!(w, "name: {name}")?;
    for (k, v) in backend_header(t.backend()) {
        writeln!(w, "{k}: {v}")?;
    }
    writeln!(w, "lower: {}", t.lower())?;
    writeln!(w, "upper: {}", t.upper())?;
    writeln!(w, "lower_symmetry: {}", t.lower_symmetry().name())?;
    writeln!(w, "upper_symmetry: {}", t.upper_symmetry().name())?;
    writeln!(w, "points: {}", t.npoints())?;
    writeln!(w, "components: {}", t.ncomp())?;
    writeln!(w, "payload: {}", payload_name(payload))?;
    writeln!(w, "end_header")?;
    write_values(w, t.data(), payload)
}

/// Reads one field; declared symmetries are re-verified exactly.
pub fn read_field(r: &mut impl BufRead) -> Result<(String, TensorField)> {
    let h = read_header(r, FIELD_MAGIC)?;
    let backend = backend_from_header(&h)?;
    let lower = h.usize("lower")?;
    let upper = h.usize("upper")?;
    let count = h.usize("points")? * h.usize("components")?;
    let data = read_values(r, count, parse_payload(h.get("payload")?)?)?;
    let t = TensorField::from_data(&backend, lower, upper, data)?;
    let ls = Symmetry::parse(h.get("lower_symmetry")?)?;
    let us = Symmetry::parse(h.get("upper_symmetry")?)?;
    let t = match ls {
        Symmetry::None => t,
        Symmetry::Symmetric | Symmetry::Antisymmetric => {
            let anti = ls == Symmetry::Antisymmetric;
            if t.symmetry_defect(anti) > 0.0 {
                return Err(Error::Format(format!("payload violates declared {} symmetry", ls.name())));
            }
            t.assume_symmetry(ls, us)
        }
    };
    Ok((h.get("name")?.to_string(), t))
}

pub fn save_field(path: &Path, name: &str, t: &TensorField, payload: Payload) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_field(&mut w, name, t, payload)?;
    w.flush()?;
    Ok(())
}

pub fn load_field(path: &Path) -> Result<(String, TensorField)> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let out = read_field(&mut r)?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::forms::form_from_fn;

    #[test]
    fn roundtrip_binary_and_text() {
        let b = Backend::torus(TorusChart::new(&[8, 1, 8], &[1.0, 2.0, 3.0], Stencil::Fd(6)).unwrap());
        let t = form_from_fn(&b, 2, |p, tup| (p as f64 + 0.1).sin() * (tup[0] + 2 * tup[1]) as f64 / 3.0);
        for payload in [Payload::Binary, Payload::Text] {
            let mut buf = Vec::new();
            write_field(&mut buf, "omega", &t, payload).unwrap();
            let (name, back) = read_field(&mut std::io::Cursor::new(buf)).unwrap();
            assert_eq!(name, "omega");
            assert_eq!(back.data(), t.data());
            assert_eq!(back.lower_symmetry(), Symmetry::Antisymmetric);
            assert_eq!(**back.backend(), *b);
        }
    }

    #[test]
    fn frame_backend_roundtrip() {
        let b = Backend::frame(FrameAlgebra::su2_u1(1.0).opposite());
        let t = TensorField::constant(&b, 1, 1, &(0..16).map(|i| i as f64).collect::<Vec<_>>()).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, "J", &t, Payload::Text).unwrap();
        let (_, back) = read_field(&mut std::io::Cursor::new(buf)).unwrap();
        assert_eq!(**back.backend(), *b);
    }

    #[test]
    fn rejects_bad_magic() {
        let mut c = std::io::Cursor::new(b"nope\n".to_vec());
        assert!(read_field(&mut c).is_err());
    }
}
