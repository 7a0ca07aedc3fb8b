//! Reading and writing meshes (OBJ, OFF, ASCII PLY) and point clouds
//! (XYZ, ASCII PLY).
//!
//! Reals are written with Rust's shortest round-trip formatting, so
//! `read(write(x)) == x` bit for bit.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point3, PointCloud, TriangleFace, Vec3};

pub const WELD_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Off,
    Ply,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointFormat {
    Xyz,
    Ply,
}

impl FromStr for MeshFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "obj" => Ok(Self::Obj),
            "off" => Ok(Self::Off),
            "ply" => Ok(Self::Ply),
            other => Err(Error::Config(format!("unknown mesh format '{other}'"))),
        }
    }
}

impl FromStr for PointFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xyz" => Ok(Self::Xyz),
            "ply" => Ok(Self::Ply),
            other => Err(Error::Config(format!("unknown point format '{other}'"))),
        }
    }
}

fn extension(path: &Path) -> Result<&str> {
    path.extension()
        .and_then(|e| e.to_str())
        .ok_or_else(|| Error::Config(format!("cannot infer format of '{}'", path.display())))
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        extension(path)?.parse()
    }
}

impl PointFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        extension(path)?.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReadOptions {
    /// Fan-triangulate faces with more than three corners; when off they
    /// are rejected with `UnsupportedElement`.
    pub triangulate_polygons: bool,
    /// Merge vertices closer than [`WELD_TOLERANCE`].
    pub weld: bool,
}

impl Default for ReadOptions {
    fn default() -> Self {
        Self {
            triangulate_polygons: true,
            weld: false,
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn real(tok: &str, line: usize) -> Result<f64> {
    let x: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("'{tok}' is not a number")))?;
    if !x.is_finite() {
        return Err(parse_err(line, format!("non-finite value '{tok}'")));
    }
    Ok(x)
}

fn count(tok: &str, line: usize) -> Result<usize> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("'{tok}' is not a non-negative integer")))
}

fn unit_normal(n: Vec3, line: usize) -> Result<Vec3> {
    let len = n.norm();
    if !(len > 1e-12) {
        return Err(parse_err(line, "normal has zero length"));
    }
    Ok(if (len - 1.0).abs() > 1e-9 { n / len } else { n })
}

/// Lines with 1-based numbers, comments and blank lines removed.
fn content_lines(text: &str, comment: char) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(move |(i, l)| {
        let l = l.split(comment).next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

struct RawMesh {
    vertices: Vec<Point3>,
    polygons: Vec<(usize, Vec<usize>)>,
}

impl RawMesh {
    fn finish(self, opts: ReadOptions) -> Result<Mesh> {
        let n = self.vertices.len();
        let mut faces = Vec::with_capacity(self.polygons.len());
        for (line, poly) in &self.polygons {
            if poly.len() < 3 {
                return Err(parse_err(*line, "face needs at least 3 vertices"));
            }
            if let Some(&i) = poly.iter().find(|&&i| i >= n) {
                return Err(parse_err(
                    *line,
                    format!("vertex index {i} out of range ({n} vertices)"),
                ));
            }
            if poly.len() > 3 && !opts.triangulate_polygons {
                return Err(Error::UnsupportedElement(format!(
                    "{}-gon on line {line} with polygon triangulation disabled",
                    poly.len()
                )));
            }
            for k in 1..poly.len() - 1 {
                faces.push((*line, [poly[0], poly[k], poly[k + 1]]));
            }
        }
        let (vertices, remap) = if opts.weld {
            weld(&self.vertices)
        } else {
            (self.vertices, (0..n).collect())
        };
        let mut out = Vec::with_capacity(faces.len());
        let mut seen = std::collections::HashSet::new();
        for (line, f) in faces {
            let f = f.map(|i| remap[i]);
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                if opts.weld {
                    continue;
                }
                return Err(parse_err(line, "face repeats a vertex"));
            }
            let face = TriangleFace(f);
            if !seen.insert(face.sorted()) {
                if opts.weld {
                    continue;
                }
                return Err(parse_err(line, "face duplicates an earlier face"));
            }
            out.push(face);
        }
        Mesh::new(vertices, out)
    }
}

/// Merges points within [`WELD_TOLERANCE`] of an earlier kept point.
/// Returns the kept points in first-occurrence order and the old-to-new map.
pub fn weld(points: &[Point3]) -> (Vec<Point3>, Vec<usize>) {
    let cell = |p: &Point3| {
        (
            (p.x / WELD_TOLERANCE).floor() as i64,
            (p.y / WELD_TOLERANCE).floor() as i64,
            (p.z / WELD_TOLERANCE).floor() as i64,
        )
    };
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    let mut kept: Vec<Point3> = Vec::new();
    let mut remap = Vec::with_capacity(points.len());
    for p in points {
        let (cx, cy, cz) = cell(p);
        let mut found = None;
        'search: for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = grid.get(&(cx + dx, cy + dy, cz + dz)) {
                        if let Some(&k) = list.iter().find(|&&k| (kept[k] - p).norm() <= WELD_TOLERANCE) {
                            found = Some(k);
                            break 'search;
                        }
                    }
                }
            }
        }
        let k = found.unwrap_or_else(|| {
            kept.push(*p);
            grid.entry((cx, cy, cz)).or_default().push(kept.len() - 1);
            kept.len() - 1
        });
        remap.push(k);
    }
    (kept, remap)
}

fn parse_obj(text: &str) -> Result<RawMesh> {
    let mut vertices = Vec::new();
    let mut polygons = Vec::new();
    for (line, l) in content_lines(text, '#') {
        let mut toks = l.split_whitespace();
        let key = toks.next().unwrap_or("");
        match key {
            "v" => {
                let c: Vec<&str> = toks.collect();
                if c.len() != 3 && c.len() != 4 {
                    return Err(parse_err(line, format!("vertex needs 3 coordinates, got {}", c.len())));
                }
                vertices.push(Point3::new(real(c[0], line)?, real(c[1], line)?, real(c[2], line)?));
            }
            "f" => {
                let mut poly = Vec::new();
                for t in toks {
                    let idx = t.split('/').next().unwrap_or("");
                    let i: i64 = idx
                        .parse()
                        .map_err(|_| parse_err(line, format!("bad face index '{t}'")))?;
                    let resolved = match i {
                        0 => return Err(parse_err(line, "face index 0 (OBJ indices are 1-based)")),
                        i if i > 0 => i as usize - 1,
                        i => {
                            let back = i.unsigned_abs() as usize;
                            if back > vertices.len() {
                                return Err(parse_err(line, format!("relative index {i} out of range")));
                            }
                            vertices.len() - back
                        }
                    };
                    poly.push(resolved);
                }
                polygons.push((line, poly));
            }
            "vn" | "vt" | "vp" | "o" | "g" | "s" | "usemtl" | "mtllib" => {}
            other => {
                return Err(Error::UnsupportedElement(format!(
                    "OBJ record '{other}' on line {line}"
                )))
            }
        }
    }
    Ok(RawMesh { vertices, polygons })
}

fn parse_off(text: &str) -> Result<RawMesh> {
    let mut lines = content_lines(text, '#');
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing OFF header"))?;
    let mut toks: Vec<&str> = header.split_whitespace().collect();
    if toks.first() != Some(&"OFF") {
        return Err(parse_err(hline, "file does not start with OFF"));
    }
    toks.remove(0);
    let mut last = hline;
    if toks.is_empty() {
        let (l, c) = lines
            .next()
            .ok_or_else(|| parse_err(hline + 1, "missing element counts"))?;
        toks = c.split_whitespace().collect();
        last = l;
    }
    if toks.len() < 2 {
        return Err(parse_err(last, "expected vertex and face counts"));
    }
    let nv = count(toks[0], last)?;
    let nf = count(toks[1], last)?;
    let eof = text.lines().count() + 1;
    let mut vertices = Vec::with_capacity(nv);
    for k in 0..nv {
        let (line, l) = lines
            .next()
            .ok_or_else(|| parse_err(eof, format!("file ends after {k} of {nv} vertices")))?;
        let c: Vec<&str> = l.split_whitespace().collect();
        if c.len() < 3 {
            return Err(parse_err(line, "vertex needs 3 coordinates"));
        }
        vertices.push(Point3::new(real(c[0], line)?, real(c[1], line)?, real(c[2], line)?));
    }
    let mut polygons = Vec::with_capacity(nf);
    for k in 0..nf {
        let (line, l) = lines
            .next()
            .ok_or_else(|| parse_err(eof, format!("file ends after {k} of {nf} faces")))?;
        let c: Vec<&str> = l.split_whitespace().collect();
        let m = count(c[0], line)?;
        if c.len() < m + 1 {
            return Err(parse_err(
                line,
                format!("face declares {m} vertices but lists {}", c.len() - 1),
            ));
        }
        let poly = c[1..=m].iter().map(|t| count(t, line)).collect::<Result<Vec<_>>>()?;
        polygons.push((line, poly));
    }
    if let Some((line, _)) = lines.next() {
        return Err(parse_err(line, "unexpected content after the last face"));
    }
    Ok(RawMesh { vertices, polygons })
}

#[derive(Debug)]
enum Property {
    Scalar(String),
    List(String),
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

struct Ply {
    vertices: Vec<Point3>,
    normals: Option<Vec<Vec3>>,
    polygons: Vec<(usize, Vec<usize>)>,
}

fn parse_ply(text: &str) -> Result<Ply> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(parse_err(1, "file does not start with 'ply'")),
    }
    let mut elements: Vec<Element> = Vec::new();
    let mut last = 1;
    loop {
        let (line, l) = lines
            .next()
            .ok_or_else(|| parse_err(last + 1, "header ends without end_header"))?;
        last = line;
        let toks: Vec<&str> = l.split_whitespace().collect();
        match toks.as_slice() {
            ["end_header"] => break,
            ["format", "ascii", _] => {}
            ["format", fmt, ..] => return Err(Error::UnsupportedElement(format!("PLY format '{fmt}'"))),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, n] => elements.push(Element {
                name: name.to_string(),
                count: count(n, line)?,
                properties: Vec::new(),
            }),
            ["property", "list", _, _, name] => elements
                .last_mut()
                .ok_or_else(|| parse_err(line, "property before any element"))?
                .properties
                .push(Property::List(name.to_string())),
            ["property", _, name] => elements
                .last_mut()
                .ok_or_else(|| parse_err(line, "property before any element"))?
                .properties
                .push(Property::Scalar(name.to_string())),
            _ => return Err(parse_err(line, format!("unrecognized header line '{l}'"))),
        }
    }
    let eof = text.lines().count() + 1;
    let mut body = lines.filter(|(_, l)| !l.is_empty());
    let mut out = Ply {
        vertices: Vec::new(),
        normals: None,
        polygons: Vec::new(),
    };
    for el in &elements {
        let names: Vec<&str> = el
            .properties
            .iter()
            .map(|p| match p {
                Property::Scalar(n) | Property::List(n) => n.as_str(),
            })
            .collect();
        let col = |n: &str| names.iter().position(|&m| m == n);
        let has_normals = el.name == "vertex" && ["nx", "ny", "nz"].iter().all(|n| col(n).is_some());
        if has_normals {
            out.normals = Some(Vec::with_capacity(el.count));
        }
        for k in 0..el.count {
            let (line, l) = body
                .next()
                .ok_or_else(|| parse_err(eof, format!("file ends after {k} of {} {} records", el.count, el.name)))?;
            let toks: Vec<&str> = l.split_whitespace().collect();
            let mut values: Vec<Vec<&str>> = Vec::with_capacity(el.properties.len());
            let mut pos = 0;
            for p in &el.properties {
                let need = match p {
                    Property::Scalar(_) => 1,
                    Property::List(_) => {
                        let m = count(toks.get(pos).ok_or_else(|| parse_err(line, "record too short"))?, line)?;
                        pos += 1;
                        m
                    }
                };
                if pos + need > toks.len() {
                    return Err(parse_err(line, "record too short"));
                }
                values.push(toks[pos..pos + need].to_vec());
                pos += need;
            }
            if pos != toks.len() {
                return Err(parse_err(line, "record has extra values"));
            }
            let scalar = |n: &str| -> Result<f64> {
                let i = col(n).ok_or_else(|| parse_err(line, format!("missing property {n}")))?;
                real(values[i][0], line)
            };
            match el.name.as_str() {
                "vertex" => {
                    out.vertices.push(Point3::new(scalar("x")?, scalar("y")?, scalar("z")?));
                    if let Some(ns) = out.normals.as_mut() {
                        let n = Vec3::new(scalar("nx")?, scalar("ny")?, scalar("nz")?);
                        ns.push(unit_normal(n, line)?);
                    }
                }
                "face" => {
                    let i = col("vertex_indices")
                        .or_else(|| col("vertex_index"))
                        .ok_or_else(|| parse_err(line, "face element has no vertex_indices list"))?;
                    let poly = values[i].iter().map(|t| count(t, line)).collect::<Result<Vec<_>>>()?;
                    out.polygons.push((line, poly));
                }
                _ => {}
            }
        }
    }
    if let Some((line, _)) = body.next() {
        return Err(parse_err(line, "unexpected content after the last element"));
    }
    Ok(out)
}

pub fn parse_mesh(text: &str, format: MeshFormat, opts: ReadOptions) -> Result<Mesh> {
    let raw = match format {
        MeshFormat::Obj => parse_obj(text)?,
        MeshFormat::Off => parse_off(text)?,
        MeshFormat::Ply => {
            let p = parse_ply(text)?;
            RawMesh {
                vertices: p.vertices,
                polygons: p.polygons,
            }
        }
    };
    raw.finish(opts)
}

pub fn read_mesh(path: &Path, format: MeshFormat, opts: ReadOptions) -> Result<Mesh> {
    parse_mesh(&fs::read_to_string(path)?, format, opts)
}

pub fn format_mesh(mesh: &Mesh, format: MeshFormat) -> String {
    let mut s = String::new();
    let v = mesh.vertices();
    let f = mesh.faces();
    match format {
        MeshFormat::Obj => {
            for p in v {
                writeln!(s, "v {} {} {}", p.x, p.y, p.z).unwrap();
            }
            for t in f {
                writeln!(s, "f {} {} {}", t.0[0] + 1, t.0[1] + 1, t.0[2] + 1).unwrap();
            }
        }
        MeshFormat::Off => {
            writeln!(s, "OFF\n{} {} 0", v.len(), f.len()).unwrap();
            for p in v {
                writeln!(s, "{} {} {}", p.x, p.y, p.z).unwrap();
            }
            for t in f {
                writeln!(s, "3 {} {} {}", t.0[0], t.0[1], t.0[2]).unwrap();
            }
        }
        MeshFormat::Ply => {
            write!(
                s,
                "ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\n\
                 element face {}\nproperty list uchar int vertex_indices\nend_header\n",
                v.len(),
                f.len()
            )
            .unwrap();
            for p in v {
                writeln!(s, "{} {} {}", p.x, p.y, p.z).unwrap();
            }
            for t in f {
                writeln!(s, "3 {} {} {}", t.0[0], t.0[1], t.0[2]).unwrap();
            }
        }
    }
    s
}

pub fn write_mesh(mesh: &Mesh, path: &Path, format: MeshFormat) -> Result<()> {
    Ok(fs::write(path, format_mesh(mesh, format))?)
}

fn parse_xyz(text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    let mut normals = Vec::new();
    let mut width = None;
    for (line, l) in content_lines(text, '#') {
        let c: Vec<&str> = l.split_whitespace().collect();
        if c.len() != 3 && c.len() != 6 {
            return Err(parse_err(line, format!("expected 3 or 6 values, got {}", c.len())));
        }
        if *width.get_or_insert(c.len()) != c.len() {
            return Err(parse_err(line, "lines mix points with and without normals"));
        }
        let x = c.iter().map(|t| real(t, line)).collect::<Result<Vec<_>>>()?;
        points.push(Point3::new(x[0], x[1], x[2]));
        if x.len() == 6 {
            normals.push(unit_normal(Vec3::new(x[3], x[4], x[5]), line)?);
        }
    }
    if width == Some(6) {
        PointCloud::with_normals(points, normals)
    } else {
        PointCloud::new(points)
    }
}

pub fn parse_points(text: &str, format: PointFormat) -> Result<PointCloud> {
    match format {
        PointFormat::Xyz => parse_xyz(text),
        PointFormat::Ply => {
            let p = parse_ply(text)?;
            match p.normals {
                Some(n) => PointCloud::with_normals(p.vertices, n),
                None => PointCloud::new(p.vertices),
            }
        }
    }
}

pub fn read_points(path: &Path, format: PointFormat) -> Result<PointCloud> {
    parse_points(&fs::read_to_string(path)?, format)
}

pub fn format_points(cloud: &PointCloud, format: PointFormat) -> String {
    let mut s = String::new();
    let normals = cloud.normals();
    if format == PointFormat::Ply {
        write!(
            s,
            "ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\n",
            cloud.len()
        )
        .unwrap();
        if normals.is_some() {
            s.push_str("property double nx\nproperty double ny\nproperty double nz\n");
        }
        s.push_str("end_header\n");
    }
    for (i, p) in cloud.points().iter().enumerate() {
        write!(s, "{} {} {}", p.x, p.y, p.z).unwrap();
        if let Some(n) = normals {
            write!(s, " {} {} {}", n[i].x, n[i].y, n[i].z).unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn write_points(cloud: &PointCloud, path: &Path, format: PointFormat) -> Result<()> {
    Ok(fs::write(path, format_points(cloud, format))?)
}
