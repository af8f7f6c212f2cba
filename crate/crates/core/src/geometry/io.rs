//! Text formats for profiles and meshes.
//!
//! Profile file: a header line `mode=<planar|axisym> R=<val> L=<val> e=<val>`
//! followed by one `z r` line per spline knot (inlet and outlet included).
//! Reading a profile back yields the same clamped spline.
//!
//! Mesh dump grammar (blank lines and `#` comments ignored):
//!
//! ```text
//! mode <planar|axisym>
//! length <L>
//! nodes <N>
//! <r> <z>                  (N lines)
//! elements <M>
//! <a> <b> <c>              (M lines, counter-clockwise vertex ids)
//! edges <K>
//! <a> <b> <E|S|Gamma|Axis> (K lines)
//! ```

use std::fmt::Write as _;

use super::mesh::{BoundaryEdge, BoundaryTag, MeridianMesh};
use super::profile::ShapeProfile;
use crate::error::{Error, Result};
use crate::params::Mode;

pub fn write_profile(profile: &ShapeProfile) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "mode={} R={} L={} e={}",
        profile.mode(),
        profile.reference_radius(),
        profile.length(),
        profile.amplitude()
    );
    for (z, r) in profile.knots().iter().zip(profile.knot_radii()) {
        let _ = writeln!(out, "{z} {r}");
    }
    out
}

pub fn read_profile(text: &str) -> Result<ShapeProfile> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (hline, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty profile file".into() })?;
    let mut mode = None;
    let (mut radius, mut length, mut e) = (None, None, 0.0);
    for tok in header.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or(Error::Parse { line: hline + 1, msg: format!("bad header token '{tok}'") })?;
        let num = || v.parse::<f64>().map_err(|_| Error::Parse { line: hline + 1, msg: format!("bad number '{v}'") });
        match k {
            "mode" => mode = Some(v.parse::<Mode>().map_err(|e| Error::Parse { line: hline + 1, msg: e.to_string() })?),
            "R" => radius = Some(num()?),
            "L" => length = Some(num()?),
            "e" => e = num()?,
            other => return Err(Error::Parse { line: hline + 1, msg: format!("unknown header key '{other}'") }),
        }
    }
    let missing = |what: &str| Error::Parse { line: hline + 1, msg: format!("header lacks {what}") };
    let mode = mode.ok_or_else(|| missing("mode"))?;
    let radius = radius.ok_or_else(|| missing("R"))?;
    let length = length.ok_or_else(|| missing("L"))?;
    let mut knots = Vec::new();
    let mut values = Vec::new();
    for (i, line) in lines {
        let mut it = line.split_whitespace();
        let parse = |s: Option<&str>| -> Result<f64> {
            s.and_then(|s| s.parse().ok()).ok_or(Error::Parse { line: i + 1, msg: format!("expected 'z r', got '{line}'") })
        };
        let z = parse(it.next())?;
        let r = parse(it.next())?;
        knots.push(z);
        values.push(r - radius);
    }
    ShapeProfile::from_ordinates(mode, radius, length, e, knots, values)
}

pub fn write_mesh(mesh: &MeridianMesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "mode {}", mesh.mode());
    let _ = writeln!(out, "length {}", mesh.length());
    let _ = writeln!(out, "nodes {}", mesh.nodes().len());
    for [r, z] in mesh.nodes() {
        let _ = writeln!(out, "{r} {z}");
    }
    let _ = writeln!(out, "elements {}", mesh.elements().len());
    for [a, b, c] in mesh.elements() {
        let _ = writeln!(out, "{a} {b} {c}");
    }
    let _ = writeln!(out, "edges {}", mesh.boundary_edges().len());
    for e in mesh.boundary_edges() {
        let _ = writeln!(out, "{} {} {}", e.nodes[0], e.nodes[1], e.tag.code());
    }
    out
}

pub fn read_mesh(text: &str) -> Result<MeridianMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut keyed = |key: &str| -> Result<(usize, String)> {
        let (n, l) = lines.next().ok_or(Error::Parse { line: 0, msg: format!("missing '{key}' section") })?;
        let rest = l.strip_prefix(key).ok_or(Error::Parse { line: n, msg: format!("expected '{key}'") })?;
        Ok((n, rest.trim().to_string()))
    };
    let (n, mode) = keyed("mode")?;
    let mode: Mode = mode.parse().map_err(|e: Error| Error::Parse { line: n, msg: e.to_string() })?;
    let (n, length) = keyed("length")?;
    let length: f64 = length.parse().map_err(|_| Error::Parse { line: n, msg: "bad length".into() })?;
    let count = |n: usize, s: String| s.parse::<usize>().map_err(|_| Error::Parse { line: n, msg: "bad count".into() });

    let (n, c) = keyed("nodes")?;
    let nn = count(n, c)?;
    let mut rows = Vec::new();
    for _ in 0..nn {
        let (n, l) = lines.next().ok_or(Error::Parse { line: 0, msg: "truncated node block".into() })?;
        let v: Vec<f64> = l.split_whitespace().map(|t| t.parse()).collect::<std::result::Result<_, _>>().map_err(|_| Error::Parse { line: n, msg: "bad node".into() })?;
        if v.len() != 2 {
            return Err(Error::Parse { line: n, msg: "node needs 'r z'".into() });
        }
        rows.push([v[0], v[1]]);
    }
    let (n, c) = lines.next().map(|(n, l)| (n, l.strip_prefix("elements").map(|s| s.trim().to_string()))).ok_or(Error::Parse { line: 0, msg: "missing elements".into() })?;
    let ne = count(n, c.ok_or(Error::Parse { line: n, msg: "expected 'elements'".into() })?)?;
    let mut elements = Vec::new();
    for _ in 0..ne {
        let (n, l) = lines.next().ok_or(Error::Parse { line: 0, msg: "truncated element block".into() })?;
        let v: Vec<usize> = l.split_whitespace().map(|t| t.parse()).collect::<std::result::Result<_, _>>().map_err(|_| Error::Parse { line: n, msg: "bad element".into() })?;
        if v.len() != 3 {
            return Err(Error::Parse { line: n, msg: "element needs three vertex ids".into() });
        }
        elements.push([v[0], v[1], v[2]]);
    }
    let (n, c) = lines.next().map(|(n, l)| (n, l.strip_prefix("edges").map(|s| s.trim().to_string()))).ok_or(Error::Parse { line: 0, msg: "missing edges".into() })?;
    let nb = count(n, c.ok_or(Error::Parse { line: n, msg: "expected 'edges'".into() })?)?;
    let mut edges = Vec::new();
    for _ in 0..nb {
        let (n, l) = lines.next().ok_or(Error::Parse { line: 0, msg: "truncated edge block".into() })?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != 3 {
            return Err(Error::Parse { line: n, msg: "edge needs 'a b TAG'".into() });
        }
        let a = t[0].parse().map_err(|_| Error::Parse { line: n, msg: "bad edge node".into() })?;
        let b = t[1].parse().map_err(|_| Error::Parse { line: n, msg: "bad edge node".into() })?;
        let tag = BoundaryTag::from_code(t[2]).ok_or(Error::Parse { line: n, msg: format!("unknown tag '{}'", t[2]) })?;
        edges.push(BoundaryEdge { nodes: [a, b], tag });
    }
    MeridianMesh::from_parts(mode, length, rows, elements, edges)
}
