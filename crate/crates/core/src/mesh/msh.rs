//! Gmsh MSH 2.2 ASCII reader. Only `$Nodes` and 3-node triangle elements
//! (type 2) are consumed; other element types are skipped.

use crate::geom::Vec3;
use crate::{cast, Error, Result, Scalar};
use std::collections::HashMap;
use std::path::Path;

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

pub fn parse_msh_ascii<T: Scalar>(
    text: &str,
    path: &Path,
) -> Result<(Vec<Vec3<T>>, Vec<[usize; 3]>)> {
    let mut lines = text.lines().enumerate().peekable();
    let mut vertices: Vec<Vec3<T>> = Vec::new();
    let mut node_index: HashMap<u64, usize> = HashMap::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut saw_format = false;

    while let Some((lineno, raw)) = lines.next() {
        let line = raw.trim();
        match line {
            "$MeshFormat" => {
                let (no, fmt) = lines
                    .next()
                    .ok_or_else(|| parse_err(path, lineno + 1, "truncated $MeshFormat"))?;
                let mut t = fmt.split_whitespace();
                let version = t.next().unwrap_or("");
                if !version.starts_with("2.2") {
                    return Err(parse_err(
                        path,
                        no + 1,
                        format!("unsupported MSH version `{version}` (need 2.2 ASCII)"),
                    ));
                }
                if t.next() != Some("0") {
                    return Err(parse_err(path, no + 1, "binary MSH is not supported"));
                }
                saw_format = true;
                skip_until(&mut lines, "$EndMeshFormat");
            }
            "$Nodes" => {
                let (no, cnt) = lines
                    .next()
                    .ok_or_else(|| parse_err(path, lineno + 1, "truncated $Nodes"))?;
                let n: usize = cnt
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(path, no + 1, "bad node count"))?;
                for _ in 0..n {
                    let (no, l) = lines
                        .next()
                        .ok_or_else(|| parse_err(path, no + 1, "truncated node list"))?;
                    let mut t = l.split_whitespace();
                    let id: u64 = t
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| parse_err(path, no + 1, "bad node id"))?;
                    let mut c = [0.0f64; 3];
                    for x in c.iter_mut() {
                        *x = t
                            .next()
                            .and_then(|s| s.parse().ok())
                            .ok_or_else(|| parse_err(path, no + 1, "bad node coordinate"))?;
                    }
                    node_index.insert(id, vertices.len());
                    vertices.push(Vec3::new(cast(c[0]), cast(c[1]), cast(c[2])));
                }
                skip_until(&mut lines, "$EndNodes");
            }
            "$Elements" => {
                let (no, cnt) = lines
                    .next()
                    .ok_or_else(|| parse_err(path, lineno + 1, "truncated $Elements"))?;
                let n: usize = cnt
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(path, no + 1, "bad element count"))?;
                for _ in 0..n {
                    let (no, l) = lines
                        .next()
                        .ok_or_else(|| parse_err(path, no + 1, "truncated element list"))?;
                    let fields: Vec<&str> = l.split_whitespace().collect();
                    if fields.len() < 3 {
                        return Err(parse_err(path, no + 1, "short element line"));
                    }
                    let etype: usize = fields[1]
                        .parse()
                        .map_err(|_| parse_err(path, no + 1, "bad element type"))?;
                    if etype != 2 {
                        continue; // not a 3-node triangle
                    }
                    let ntags: usize = fields[2]
                        .parse()
                        .map_err(|_| parse_err(path, no + 1, "bad tag count"))?;
                    let first_node = 3 + ntags;
                    if fields.len() < first_node + 3 {
                        return Err(parse_err(path, no + 1, "triangle element needs 3 nodes"));
                    }
                    let mut tri = [0usize; 3];
                    for (k, v) in tri.iter_mut().enumerate() {
                        let id: u64 = fields[first_node + k]
                            .parse()
                            .map_err(|_| parse_err(path, no + 1, "bad node reference"))?;
                        *v = *node_index.get(&id).ok_or_else(|| {
                            parse_err(path, no + 1, format!("unknown node id {id}"))
                        })?;
                    }
                    triangles.push(tri);
                }
                skip_until(&mut lines, "$EndElements");
            }
            _ => {}
        }
    }
    if !saw_format {
        return Err(parse_err(path, 1, "missing $MeshFormat section"));
    }
    if triangles.is_empty() {
        return Err(parse_err(path, 1, "no triangle elements (type 2) found"));
    }
    Ok((vertices, triangles))
}

fn skip_until<'a, I: Iterator<Item = (usize, &'a str)>>(
    lines: &mut std::iter::Peekable<I>,
    marker: &str,
) {
    for (_, l) in lines.by_ref() {
        if l.trim() == marker {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_file() {
        let text = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n3\n1 0 0 0\n2 1 0 0\n3 0 1 0\n$EndNodes\n$Elements\n2\n1 15 2 0 1 1\n2 2 2 0 1 1 2 3\n$EndElements\n";
        let (v, t): (Vec<Vec3<f64>>, _) = parse_msh_ascii(text, Path::new("m.msh")).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(t, vec![[0, 1, 2]]);
    }

    #[test]
    fn rejects_msh4() {
        let text = "$MeshFormat\n4.1 0 8\n$EndMeshFormat\n";
        let r = parse_msh_ascii::<f64>(text, Path::new("m.msh"));
        assert!(matches!(r, Err(Error::Parse { .. })));
    }
}
