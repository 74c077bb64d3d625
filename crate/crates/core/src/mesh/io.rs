//! Mesh readers and writers.
//!
//! Native text format (0-based indices, `#` starts a comment):
//!
//! ```text
//! nv nc nb
//! x y                  # nv vertex lines
//! v0 v1 v2 subdomain   # nc cell lines
//! v0 v1 kind [label]   # nb boundary lines, kind is D or N
//! ```
//!
//! Gmsh MSH 2.2 ASCII: `$Nodes` and `$Elements` with element types 1 (boundary
//! lines, physical group decides the boundary kind) and 2 (triangles, physical
//! group is the subdomain tag). Line groups are classified through
//! `$PhysicalNames`: names starting with `dirichlet` or `clamped` are
//! Dirichlet, `neumann` or `free` are Neumann.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BoundaryEdge, BoundaryKind, Mesh, Point};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFormat {
    Native,
    Msh2,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> MeshFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("msh") => MeshFormat::Msh2,
            _ => MeshFormat::Native,
        }
    }
}

pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<Mesh> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    let name = path.display().to_string();
    match format {
        MeshFormat::Native => parse_native(&text, &name),
        MeshFormat::Msh2 => parse_msh2(&text, &name),
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    source: &'a str,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str, source: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
            source,
            last: 0,
        }
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.source.to_string(),
            line,
            message: message.into(),
        }
    }

    /// Next non-empty line with comments stripped, plus its 1-based number.
    fn next_content(&mut self) -> Result<(usize, Vec<&'a str>)> {
        for (i, raw) in self.inner.by_ref() {
            self.last = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if !line.is_empty() {
                return Ok((i + 1, line.split_whitespace().collect()));
            }
        }
        Err(self.err(self.last + 1, "unexpected end of file"))
    }

    fn next_raw(&mut self) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((i, raw)) => {
                self.last = i + 1;
                Ok((i + 1, raw.trim()))
            }
            None => Err(self.err(self.last + 1, "unexpected end of file")),
        }
    }
}

fn field<T: std::str::FromStr>(lines: &Lines, line: usize, tokens: &[&str], k: usize, what: &str) -> Result<T> {
    tokens
        .get(k)
        .ok_or_else(|| lines.err(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| lines.err(line, format!("invalid {what} '{}'", tokens[k])))
}

pub fn parse_native(text: &str, source: &str) -> Result<Mesh> {
    let mut lines = Lines::new(text, source);
    let (ln, head) = lines.next_content()?;
    if head.len() != 3 {
        return Err(lines.err(ln, "header must be 'nv nc nb'"));
    }
    let nv: usize = field(&lines, ln, &head, 0, "vertex count")?;
    let nc: usize = field(&lines, ln, &head, 1, "cell count")?;
    let nb: usize = field(&lines, ln, &head, 2, "boundary edge count")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, t) = lines.next_content()?;
        vertices.push([
            field::<f64>(&lines, ln, &t, 0, "x coordinate")?,
            field::<f64>(&lines, ln, &t, 1, "y coordinate")?,
        ]);
    }
    let mut cells = Vec::with_capacity(nc);
    let mut tags = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (ln, t) = lines.next_content()?;
        let cell: [usize; 3] = [
            field(&lines, ln, &t, 0, "vertex index")?,
            field(&lines, ln, &t, 1, "vertex index")?,
            field(&lines, ln, &t, 2, "vertex index")?,
        ];
        if cell.iter().any(|&v| v >= nv) {
            return Err(lines.err(ln, "vertex index out of range"));
        }
        cells.push(cell);
        tags.push(field(&lines, ln, &t, 3, "subdomain tag")?);
    }
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (ln, t) = lines.next_content()?;
        let a: usize = field(&lines, ln, &t, 0, "vertex index")?;
        let b: usize = field(&lines, ln, &t, 1, "vertex index")?;
        if a >= nv || b >= nv {
            return Err(lines.err(ln, "vertex index out of range"));
        }
        let kind = match t.get(2).copied() {
            Some("D") | Some("d") => BoundaryKind::Dirichlet,
            Some("N") | Some("n") => BoundaryKind::Neumann,
            Some(other) => return Err(lines.err(ln, format!("boundary kind must be D or N, got '{other}'"))),
            None => return Err(lines.err(ln, "missing boundary kind")),
        };
        boundary.push(BoundaryEdge {
            vertices: [a, b],
            kind,
            label: t.get(3).map(|s| s.to_string()),
        });
    }
    Mesh::new(vertices, cells, boundary, tags)
}

/// Serializes a mesh in the native format. Coordinates are written with 17
/// significant digits so a round trip is exact.
pub fn write_native(mesh: &Mesh) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {}",
        mesh.num_vertices(),
        mesh.num_cells(),
        mesh.boundary_edges().len()
    );
    for v in mesh.vertices() {
        let _ = writeln!(out, "{:e} {:e}", v[0], v[1]);
    }
    for (cell, tag) in mesh.cells().iter().zip(mesh.cell_subdomain()) {
        let _ = writeln!(out, "{} {} {} {}", cell[0], cell[1], cell[2], tag);
    }
    for e in mesh.boundary_edges() {
        let kind = match e.kind {
            BoundaryKind::Dirichlet => "D",
            BoundaryKind::Neumann => "N",
        };
        match &e.label {
            Some(l) => {
                let _ = writeln!(out, "{} {} {} {}", e.vertices[0], e.vertices[1], kind, l);
            }
            None => {
                let _ = writeln!(out, "{} {} {}", e.vertices[0], e.vertices[1], kind);
            }
        }
    }
    out
}

fn kind_from_name(name: &str) -> Option<BoundaryKind> {
    let lower = name.trim_matches('"').to_ascii_lowercase();
    if lower.starts_with("dirichlet") || lower.starts_with("clamped") {
        Some(BoundaryKind::Dirichlet)
    } else if lower.starts_with("neumann") || lower.starts_with("free") {
        Some(BoundaryKind::Neumann)
    } else {
        None
    }
}

pub fn parse_msh2(text: &str, source: &str) -> Result<Mesh> {
    let mut lines = Lines::new(text, source);
    let mut names: HashMap<i64, String> = HashMap::new();
    let mut nodes: Vec<(i64, Point)> = Vec::new();
    let mut triangles: Vec<(usize, [i64; 3], i32)> = Vec::new();
    let mut segments: Vec<(usize, [i64; 2], i64)> = Vec::new();
    let mut saw_nodes = false;
    let mut saw_elements = false;
    while let Ok((ln, line)) = lines.next_raw() {
        match line {
            "" => continue,
            "$MeshFormat" => {
                let (ln, l) = lines.next_raw()?;
                let version = l.split_whitespace().next().unwrap_or("");
                if !version.starts_with('2') {
                    return Err(lines.err(ln, format!("unsupported MSH version {version}, expected 2.x")));
                }
                if l.split_whitespace().nth(1) != Some("0") {
                    return Err(lines.err(ln, "binary MSH files are not supported"));
                }
                expect_end(&mut lines, "$EndMeshFormat")?;
            }
            "$PhysicalNames" => {
                let (ln, l) = lines.next_raw()?;
                let n: usize = l.parse().map_err(|_| lines.err(ln, "invalid physical name count"))?;
                for _ in 0..n {
                    let (ln, l) = lines.next_raw()?;
                    let t: Vec<&str> = l.splitn(3, char::is_whitespace).collect();
                    let id: i64 = field(&lines, ln, &t, 1, "physical id")?;
                    let name = t.get(2).ok_or_else(|| lines.err(ln, "missing physical name"))?;
                    names.insert(id, name.trim().trim_matches('"').to_string());
                }
                expect_end(&mut lines, "$EndPhysicalNames")?;
            }
            "$Nodes" => {
                saw_nodes = true;
                let (ln, l) = lines.next_raw()?;
                let n: usize = l.parse().map_err(|_| lines.err(ln, "invalid node count"))?;
                nodes.reserve(n);
                for _ in 0..n {
                    let (ln, l) = lines.next_raw()?;
                    let t: Vec<&str> = l.split_whitespace().collect();
                    nodes.push((
                        field(&lines, ln, &t, 0, "node id")?,
                        [field(&lines, ln, &t, 1, "x")?, field(&lines, ln, &t, 2, "y")?],
                    ));
                }
                expect_end(&mut lines, "$EndNodes")?;
            }
            "$Elements" => {
                saw_elements = true;
                let (ln, l) = lines.next_raw()?;
                let n: usize = l.parse().map_err(|_| lines.err(ln, "invalid element count"))?;
                for _ in 0..n {
                    let (ln, l) = lines.next_raw()?;
                    let t: Vec<&str> = l.split_whitespace().collect();
                    let kind: u32 = field(&lines, ln, &t, 1, "element type")?;
                    let ntags: usize = field(&lines, ln, &t, 2, "tag count")?;
                    let physical: i64 = if ntags > 0 { field(&lines, ln, &t, 3, "physical tag")? } else { 0 };
                    let first = 3 + ntags;
                    match kind {
                        1 => segments.push((
                            ln,
                            [field(&lines, ln, &t, first, "node")?, field(&lines, ln, &t, first + 1, "node")?],
                            physical,
                        )),
                        2 => triangles.push((
                            ln,
                            [
                                field(&lines, ln, &t, first, "node")?,
                                field(&lines, ln, &t, first + 1, "node")?,
                                field(&lines, ln, &t, first + 2, "node")?,
                            ],
                            physical as i32,
                        )),
                        other => {
                            return Err(lines.err(ln, Error::UnsupportedElement(other).to_string()));
                        }
                    }
                }
                expect_end(&mut lines, "$EndElements")?;
            }
            other if other.starts_with('$') => {
                // skip unknown sections
                let end = format!("$End{}", &other[1..]);
                loop {
                    let (_, l) = lines.next_raw()?;
                    if l == end {
                        break;
                    }
                }
            }
            _ => return Err(lines.err(ln, format!("unexpected line '{line}'"))),
        }
    }
    if !saw_nodes || !saw_elements {
        return Err(lines.err(lines.last, "missing $Nodes or $Elements section"));
    }

    // keep only nodes referenced by triangles, numbered by first use
    let id_to_node: HashMap<i64, Point> = nodes.into_iter().collect();
    let mut renumber: HashMap<i64, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut cells = Vec::with_capacity(triangles.len());
    let mut tags = Vec::with_capacity(triangles.len());
    for (ln, tri, tag) in &triangles {
        let mut cell = [0usize; 3];
        for (k, id) in tri.iter().enumerate() {
            let p = *id_to_node
                .get(id)
                .ok_or_else(|| lines.err(*ln, format!("unknown node {id}")))?;
            cell[k] = *renumber.entry(*id).or_insert_with(|| {
                vertices.push(p);
                vertices.len() - 1
            });
        }
        cells.push(cell);
        tags.push(*tag);
    }
    let mut boundary = Vec::with_capacity(segments.len());
    for (ln, seg, physical) in &segments {
        let name = names.get(physical);
        let kind = name.and_then(|n| kind_from_name(n)).ok_or_else(|| {
            lines.err(
                *ln,
                format!(
                    "untagged boundary edge: physical group {physical}{} is not named dirichlet/clamped or neumann/free",
                    name.map(|n| format!(" ('{n}')")).unwrap_or_default()
                ),
            )
        })?;
        let a = *renumber
            .get(&seg[0])
            .ok_or_else(|| lines.err(*ln, format!("boundary node {} not used by any triangle", seg[0])))?;
        let b = *renumber
            .get(&seg[1])
            .ok_or_else(|| lines.err(*ln, format!("boundary node {} not used by any triangle", seg[1])))?;
        boundary.push(BoundaryEdge {
            vertices: [a, b],
            kind,
            label: Some(name.cloned().unwrap_or_else(|| physical.to_string())),
        });
    }
    Mesh::new(vertices, cells, boundary, tags)
}

fn expect_end(lines: &mut Lines, marker: &str) -> Result<()> {
    let (ln, l) = lines.next_raw()?;
    if l != marker {
        return Err(lines.err(ln, format!("expected {marker}, got '{l}'")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_square_mesh;

    const SQUARE: &str = "\
# unit square, two cells
4 2 4
0 0
1 0
1 1
0 1
0 1 2 1
0 2 3 1
0 1 D bottom
1 2 N
2 3 N
3 0 N
";

    const SQUARE_MSH: &str = "\
$MeshFormat
2.2 0 8
$EndMeshFormat
$PhysicalNames
3
1 1 \"clamped\"
1 2 \"free\"
2 7 \"body\"
$EndPhysicalNames
$Nodes
4
10 0 0 0
20 1 0 0
30 1 1 0
40 0 1 0
$EndNodes
$Elements
6
1 1 2 1 1 10 20
2 1 2 2 2 20 30
3 1 2 2 3 30 40
4 1 2 2 4 40 10
5 2 2 1 1 10 20 30
6 2 2 1 1 10 30 40
$EndElements
";

    #[test]
    fn native_square() {
        let m = parse_native(SQUARE, "square.txt").unwrap();
        assert_eq!(m.num_vertices(), 4);
        assert_eq!(m.num_cells(), 2);
        assert_eq!(m.boundary_edges()[0].label.as_deref(), Some("bottom"));
    }

    #[test]
    fn msh_matches_native() {
        let native = parse_native(SQUARE, "square.txt").unwrap();
        let msh = parse_msh2(SQUARE_MSH, "square.msh").unwrap();
        assert_eq!(native.vertices(), msh.vertices());
        assert_eq!(native.cells(), msh.cells());
        let kinds = |m: &Mesh| m.boundary_edges().iter().map(|e| (e.vertices, e.kind)).collect::<Vec<_>>();
        assert_eq!(kinds(&native), kinds(&msh));
    }

    #[test]
    fn untagged_boundary_edge() {
        let text = SQUARE.replace("4 2 4", "4 2 3").replace("3 0 N\n", "");
        let err = parse_native(&text, "bad.txt").unwrap_err();
        assert!(err.to_string().contains("untagged boundary edge"), "{err}");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = SQUARE.replace("1 1\n0 1\n0 1 2", "1 x\n0 1\n0 1 2");
        match parse_native(&text, "bad.txt").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 5),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn msh_rejects_other_elements() {
        let text = SQUARE_MSH.replace("6\n1 1 2 1 1 10 20", "6\n1 15 2 1 1 10");
        let err = parse_msh2(&text, "pts.msh").unwrap_err();
        assert!(err.to_string().contains("unsupported gmsh element type 15"), "{err}");
    }

    #[test]
    fn msh_unnamed_group_is_untagged() {
        let text = SQUARE_MSH.replace("1 2 \"free\"\n", "").replace("$PhysicalNames\n3", "$PhysicalNames\n2");
        let err = parse_msh2(&text, "x.msh").unwrap_err();
        assert!(err.to_string().contains("untagged boundary edge"), "{err}");
    }

    #[test]
    fn native_round_trip() {
        let m = unit_square_mesh(3).unwrap();
        let back = parse_native(&write_native(&m), "rt").unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.cells(), m.cells());
        assert_eq!(back.boundary_edges(), m.boundary_edges());
    }
}
