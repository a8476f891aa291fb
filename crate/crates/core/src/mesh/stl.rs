//! STL readers (ASCII and binary). Facet normals in the file are ignored;
//! orientation comes from vertex order.

use crate::geom::Vec3;
use crate::{cast, Error, Result, Scalar};
use std::path::Path;

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Parse ASCII STL text into a facet soup. Multiple `solid` blocks in one
/// file are concatenated.
pub fn parse_stl_ascii<T: Scalar>(text: &str, path: &Path) -> Result<Vec<[Vec3<T>; 3]>> {
    let mut soup = Vec::new();
    let mut current: Vec<Vec3<T>> = Vec::new();
    let mut in_solid = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let keyword = tokens.next().unwrap();
        match keyword {
            "solid" => in_solid = true,
            "endsolid" => in_solid = false,
            "facet" | "endloop" | "endfacet" => {}
            "outer" => {
                if !in_solid {
                    return Err(parse_err(path, lineno + 1, "facet outside of solid"));
                }
                current.clear();
            }
            "vertex" => {
                let mut coords = [T::zero(); 3];
                for c in coords.iter_mut() {
                    let tok = tokens
                        .next()
                        .ok_or_else(|| parse_err(path, lineno + 1, "vertex needs 3 coordinates"))?;
                    let v: f64 = tok
                        .parse()
                        .map_err(|_| parse_err(path, lineno + 1, format!("bad number `{tok}`")))?;
                    *c = cast(v);
                }
                current.push(Vec3::new(coords[0], coords[1], coords[2]));
                if current.len() == 3 {
                    soup.push([current[0], current[1], current[2]]);
                    current.clear();
                } else if current.len() > 3 {
                    return Err(parse_err(path, lineno + 1, "more than 3 vertices in facet"));
                }
            }
            other => {
                return Err(parse_err(
                    path,
                    lineno + 1,
                    format!("unexpected token `{other}`"),
                ));
            }
        }
    }
    if soup.is_empty() {
        return Err(parse_err(path, 1, "no facets found"));
    }
    Ok(soup)
}

/// Parse binary STL: 80-byte header, u32 facet count, 50-byte facet records.
pub fn parse_stl_binary<T: Scalar>(bytes: &[u8], path: &Path) -> Result<Vec<[Vec3<T>; 3]>> {
    if bytes.len() < 84 {
        return Err(parse_err(path, 0, "file shorter than binary STL header"));
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    let expected = 84 + count * 50;
    if bytes.len() < expected {
        return Err(parse_err(
            path,
            0,
            format!(
                "truncated binary STL: {} bytes for {count} facets (need {expected})",
                bytes.len()
            ),
        ));
    }
    let mut soup = Vec::with_capacity(count);
    let f32_at = |off: usize| -> f32 { f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) };
    for i in 0..count {
        let rec = 84 + i * 50;
        let mut tri = [Vec3::zero(); 3];
        for (v, slot) in tri.iter_mut().enumerate() {
            let base = rec + 12 + v * 12; // skip the normal
            *slot = Vec3::new(
                cast(f32_at(base) as f64),
                cast(f32_at(base + 4) as f64),
                cast(f32_at(base + 8) as f64),
            );
        }
        soup.push(tri);
    }
    if soup.is_empty() {
        return Err(parse_err(path, 0, "binary STL with zero facets"));
    }
    Ok(soup)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_roundtrip() {
        let text = "solid t\n facet normal 0 0 1\n  outer loop\n   vertex 0 0 0\n   vertex 1 0 0\n   vertex 0 1 0\n  endloop\n endfacet\nendsolid t\n";
        let soup: Vec<[Vec3<f64>; 3]> = parse_stl_ascii(text, Path::new("t.stl")).unwrap();
        assert_eq!(soup.len(), 1);
        assert_eq!(soup[0][1], Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn ascii_bad_number() {
        let text = "solid t\nfacet normal 0 0 1\nouter loop\nvertex 0 x 0\n";
        let r: Result<Vec<[Vec3<f64>; 3]>> = parse_stl_ascii(text, Path::new("t.stl"));
        assert!(matches!(r, Err(Error::Parse { line: 4, .. })));
    }

    #[test]
    fn binary_truncated() {
        let mut bytes = vec![0u8; 84];
        bytes[80..84].copy_from_slice(&5u32.to_le_bytes());
        let r: Result<Vec<[Vec3<f64>; 3]>> = parse_stl_binary(&bytes, Path::new("t.stl"));
        assert!(matches!(r, Err(Error::Parse { .. })));
    }
}
