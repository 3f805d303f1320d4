//! Field snapshot format: a one-line text header followed by raw
//! little-endian doubles.
//!
//! Header: `ETDRDP v1 d=<d> p=<p> s=<s> complex=<0|1> bc=<D|N|P>`
//! Payload: s * p^d values in component-fastest layout, each one f64
//! (real fields) or two f64 (re, im interleaved; complex fields).
//!
//! Readers treat the input as untrusted: all sizes are checked before any
//! allocation, and the payload length must match the header exactly.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use thiserror::Error;

use crate::operators::{BoundaryKind, GridSpec, StateVector};

pub const FIELD_MAGIC: &str = "ETDRDP v1";

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed field header: {0}")]
    BadHeader(String),
    #[error("payload has {got} bytes, header implies {expect}")]
    PayloadSize { expect: usize, got: usize },
    #[error("state has {got} values, grid implies {expect}")]
    StateSize { expect: usize, got: usize },
}

/// Parsed header of a field file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldHeader {
    pub d: usize,
    pub p: usize,
    pub s: usize,
    pub complex: bool,
    pub bc: BoundaryKind,
}

impl FieldHeader {
    pub fn for_grid(grid: &GridSpec, complex: bool) -> FieldHeader {
        FieldHeader { d: grid.d, p: grid.p, s: grid.s, complex, bc: grid.bc }
    }

    pub fn header_line(&self) -> String {
        format!(
            "{FIELD_MAGIC} d={} p={} s={} complex={} bc={}",
            self.d,
            self.p,
            self.s,
            if self.complex { 1 } else { 0 },
            self.bc.tag()
        )
    }

    /// Total unknown count, with overflow checked since headers are
    /// untrusted input.
    pub fn unknowns(&self) -> Option<usize> {
        let mut m = self.s;
        for _ in 0..self.d {
            m = m.checked_mul(self.p)?;
        }
        Some(m)
    }

    fn payload_bytes(&self) -> Option<usize> {
        let per_value = if self.complex { 16 } else { 8 };
        self.unknowns()?.checked_mul(per_value)
    }
}

fn parse_usize_field(token: &str, key: &str) -> Result<usize, FieldError> {
    let value = token
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| FieldError::BadHeader(format!("expected {key}=<n>, got '{token}'")))?;
    value
        .parse::<usize>()
        .map_err(|_| FieldError::BadHeader(format!("bad {key} value '{value}'")))
}

fn parse_header(line: &str) -> Result<FieldHeader, FieldError> {
    let rest = line
        .strip_prefix(FIELD_MAGIC)
        .ok_or_else(|| FieldError::BadHeader(format!("missing magic '{FIELD_MAGIC}'")))?;
    let tokens: Vec<&str> = rest.split_whitespace().collect();
    if tokens.len() != 5 {
        return Err(FieldError::BadHeader(format!(
            "expected 5 header fields, got {}",
            tokens.len()
        )));
    }
    let d = parse_usize_field(tokens[0], "d")?;
    let p = parse_usize_field(tokens[1], "p")?;
    let s = parse_usize_field(tokens[2], "s")?;
    let complex = match tokens[3] {
        "complex=0" => false,
        "complex=1" => true,
        other => {
            return Err(FieldError::BadHeader(format!("bad complex flag '{other}'")));
        }
    };
    let bc_value = tokens[4]
        .strip_prefix("bc=")
        .ok_or_else(|| FieldError::BadHeader(format!("expected bc=<D|N|P>, got '{}'", tokens[4])))?;
    let bc = match bc_value {
        tag if tag.len() == 1 => BoundaryKind::from_tag(tag.chars().next().unwrap())
            .ok_or_else(|| FieldError::BadHeader(format!("bad bc tag '{tag}'")))?,
        tag => return Err(FieldError::BadHeader(format!("bad bc tag '{tag}'"))),
    };
    if !(1..=3).contains(&d) || p == 0 || s == 0 {
        return Err(FieldError::BadHeader(format!("inadmissible geometry d={d} p={p} s={s}")));
    }
    Ok(FieldHeader { d, p, s, complex, bc })
}

/// Serialize a state to the field format.
pub fn encode_field(
    state: &StateVector,
    header: &FieldHeader,
) -> Result<Vec<u8>, FieldError> {
    let m = header
        .unknowns()
        .ok_or_else(|| FieldError::BadHeader("geometry overflows".into()))?;
    if state.len() != m {
        return Err(FieldError::StateSize { expect: m, got: state.len() });
    }
    let mut out = Vec::with_capacity(header.payload_bytes().unwrap_or(0) + 64);
    out.extend_from_slice(header.header_line().as_bytes());
    out.push(b'\n');
    for z in &state.values {
        out.extend_from_slice(&z.re.to_le_bytes());
        if header.complex {
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    Ok(out)
}

/// Parse a field file from bytes. Safe on arbitrary input.
pub fn decode_field(bytes: &[u8]) -> Result<(FieldHeader, StateVector), FieldError> {
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| FieldError::BadHeader("no header line".into()))?;
    let line = std::str::from_utf8(&bytes[..newline])
        .map_err(|_| FieldError::BadHeader("header is not valid UTF-8".into()))?;
    let header = parse_header(line.trim_end_matches('\r'))?;
    let payload = &bytes[newline + 1..];
    let expect = header
        .payload_bytes()
        .ok_or_else(|| FieldError::BadHeader("geometry overflows".into()))?;
    if payload.len() != expect {
        return Err(FieldError::PayloadSize { expect, got: payload.len() });
    }
    let m = header.unknowns().unwrap();
    let mut values = Vec::with_capacity(m);
    let step = if header.complex { 16 } else { 8 };
    for chunk in payload.chunks_exact(step) {
        let re = f64::from_le_bytes(chunk[0..8].try_into().unwrap());
        let im = if header.complex {
            f64::from_le_bytes(chunk[8..16].try_into().unwrap())
        } else {
            0.0
        };
        values.push(Complex64::new(re, im));
    }
    Ok((header, StateVector { values }))
}

pub fn write_field(
    state: &StateVector,
    grid: &GridSpec,
    complex: bool,
    path: &Path,
) -> Result<(), FieldError> {
    let bytes = encode_field(state, &FieldHeader::for_grid(grid, complex))?;
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<(FieldHeader, StateVector), FieldError> {
    let bytes = fs::read(path)?;
    decode_field(&bytes)
}

/// Plain-text sibling export: one row per node and component with the node
/// coordinates, for external plotting.
pub fn export_csv(state: &StateVector, grid: &GridSpec, path: &Path) -> Result<(), FieldError> {
    let m = grid.unknowns();
    if state.len() != m {
        return Err(FieldError::StateSize { expect: m, got: state.len() });
    }
    let mut out = fs::File::create(path)?;
    let coord_names = ["x", "y", "z"];
    write!(out, "# ")?;
    for axis in 0..grid.d {
        write!(out, "{},", coord_names[axis])?;
    }
    writeln!(out, "component,re,im")?;
    for r in 0..m {
        let (c, _) = grid.split_index(r);
        for x in grid.node_coords(r) {
            write!(out, "{x:.12e},")?;
        }
        let z = state.values[r];
        writeln!(out, "{c},{:.17e},{:.17e}", z.re, z.im)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn header_line_matches_format() {
        let h = FieldHeader { d: 2, p: 100, s: 2, complex: false, bc: BoundaryKind::Neumann };
        assert_eq!(h.header_line(), "ETDRDP v1 d=2 p=100 s=2 complex=0 bc=N");
    }

    #[test]
    fn round_trip_is_bitwise() {
        let grid = GridSpec::unit(2, 4, 2, BoundaryKind::Dirichlet).unwrap();
        let state = StateVector {
            values: (0..32).map(|i| c(i as f64 * 0.1, -(i as f64))).collect(),
        };
        for complex in [true, false] {
            let header = FieldHeader::for_grid(&grid, complex);
            let bytes = encode_field(&state, &header).unwrap();
            let (h2, s2) = decode_field(&bytes).unwrap();
            assert_eq!(h2, header);
            for (a, b) in s2.values.iter().zip(&state.values) {
                assert_eq!(a.re.to_bits(), b.re.to_bits());
                if complex {
                    assert_eq!(a.im.to_bits(), b.im.to_bits());
                } else {
                    assert_eq!(a.im, 0.0);
                }
            }
        }
    }

    #[test]
    fn payload_size_is_checked() {
        let grid = GridSpec::unit(2, 3, 1, BoundaryKind::Periodic).unwrap();
        let state = StateVector::zeros(9);
        let mut bytes = encode_field(&state, &FieldHeader::for_grid(&grid, true)).unwrap();
        // complex d=2 p=3 s=1: 2*8*9 payload bytes after the header
        let header_len = "ETDRDP v1 d=2 p=3 s=1 complex=1 bc=P\n".len();
        assert_eq!(bytes.len() - header_len, 2 * 8 * 9);
        bytes.pop();
        assert!(matches!(
            decode_field(&bytes),
            Err(FieldError::PayloadSize { .. })
        ));
    }

    #[test]
    fn malformed_headers_are_rejected() {
        for line in [
            "",
            "ETDRDP v2 d=2 p=3 s=1 complex=0 bc=D",
            "ETDRDP v1 d=4 p=3 s=1 complex=0 bc=D",
            "ETDRDP v1 d=2 p=0 s=1 complex=0 bc=D",
            "ETDRDP v1 d=2 p=3 s=1 complex=2 bc=D",
            "ETDRDP v1 d=2 p=3 s=1 complex=0 bc=Q",
            "ETDRDP v1 d=2 p=3 s=1 complex=0",
            "ETDRDP v1 d=x p=3 s=1 complex=0 bc=D",
            "ETDRDP v1 d=2 p=99999999999999999999 s=1 complex=0 bc=D",
        ] {
            let mut bytes = line.as_bytes().to_vec();
            bytes.push(b'\n');
            assert!(decode_field(&bytes).is_err(), "accepted: {line}");
        }
        assert!(decode_field(&[0xff, 0xfe, b'\n']).is_err());
        assert!(decode_field(b"no newline at all").is_err());
    }

    #[test]
    fn huge_header_does_not_allocate() {
        // the claimed geometry is astronomically larger than the payload
        let bytes = b"ETDRDP v1 d=3 p=2000000 s=1000 complex=1 bc=D\n".to_vec();
        assert!(decode_field(&bytes).is_err());
    }

    #[test]
    fn file_round_trip_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridSpec::unit(1, 5, 1, BoundaryKind::Neumann).unwrap();
        let state = StateVector {
            values: (0..5).map(|i| c(i as f64, 0.5)).collect(),
        };
        let path = dir.path().join("field.bin");
        write_field(&state, &grid, true, &path).unwrap();
        let (h, s2) = read_field(&path).unwrap();
        assert_eq!(h.p, 5);
        assert_eq!(s2.values, state.values);
        let csv_path = dir.path().join("field.csv");
        export_csv(&state, &grid, &csv_path).unwrap();
        let text = fs::read_to_string(&csv_path).unwrap();
        assert!(text.starts_with("# x,component,re,im"));
        assert_eq!(text.lines().count(), 6);
    }
}
