//! XYZ (read/write) and ASCII PLY (read-only) point-cloud files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::PointCloud;
use crate::error::{Error, Result};

fn parse_error(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_coord(token: &str, line: usize) -> Result<f64> {
    let v: f64 = token
        .parse()
        .map_err(|_| parse_error(line, format!("cannot parse '{token}' as a number")))?;
    if !v.is_finite() {
        return Err(parse_error(line, format!("non-finite coordinate '{token}'")));
    }
    Ok(v)
}

/// Parses XYZ text: three whitespace-separated floats per line, `#` comments
/// and blank lines skipped.
pub fn parse_xyz(text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_error(i + 1, format!("expected 3 fields, found {}", fields.len())));
        }
        points.push([
            parse_coord(fields[0], i + 1)?,
            parse_coord(fields[1], i + 1)?,
            parse_coord(fields[2], i + 1)?,
        ]);
    }
    if points.is_empty() {
        return Err(parse_error(0, "file contains no points"));
    }
    PointCloud::new(points)
}

/// Shortest round-trip decimal representation, one point per line.
pub fn format_xyz(pc: &PointCloud) -> String {
    let mut out = String::with_capacity(pc.len() * 48);
    for p in pc.iter() {
        let _ = writeln!(out, "{} {} {}", p[0], p[1], p[2]);
    }
    out
}

pub fn read_xyz(path: impl AsRef<Path>) -> Result<PointCloud> {
    parse_xyz(&fs::read_to_string(path)?)
}

pub fn write_xyz(pc: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_xyz(pc))?;
    Ok(())
}

struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<String>,
}

/// Parses an ASCII PLY file, returning the x/y/z properties of the `vertex`
/// element. Other elements and properties are skipped.
pub fn parse_ply(text: &str) -> Result<PointCloud> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(parse_error(1, "missing 'ply' magic")),
    }
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut header_done = false;
    for (n, line) in lines.by_ref() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [] | ["comment", ..] | ["obj_info", ..] => {}
            ["format", "ascii", _] => {}
            ["format", other, ..] => {
                return Err(parse_error(n, format!("unsupported PLY format '{other}'")));
            }
            ["element", name, count] => elements.push(PlyElement {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| parse_error(n, format!("bad element count '{count}'")))?,
                properties: Vec::new(),
            }),
            ["property", "list", ..] => match elements.last_mut() {
                Some(e) => e.properties.push("<list>".to_string()),
                None => return Err(parse_error(n, "property before any element")),
            },
            ["property", _ty, name] => match elements.last_mut() {
                Some(e) => e.properties.push(name.to_string()),
                None => return Err(parse_error(n, "property before any element")),
            },
            ["end_header"] => {
                header_done = true;
                break;
            }
            _ => return Err(parse_error(n, format!("unrecognized header line '{line}'"))),
        }
    }
    if !header_done {
        return Err(parse_error(0, "missing end_header"));
    }

    let mut points = Vec::new();
    for element in &elements {
        if element.name != "vertex" {
            // rows of elements preceding the vertex block are skipped
            for _ in 0..element.count {
                if lines.next().is_none() {
                    return Err(parse_error(0, "unexpected end of file"));
                }
            }
            continue;
        }
        let column = |axis: &str, line: usize| {
            element
                .properties
                .iter()
                .position(|p| p == axis)
                .ok_or_else(|| parse_error(line, format!("vertex element has no '{axis}' property")))
        };
        let (ix, iy, iz) = (column("x", 0)?, column("y", 0)?, column("z", 0)?);
        for _ in 0..element.count {
            let (n, line) = lines.next().ok_or_else(|| parse_error(0, "unexpected end of file"))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() < element.properties.len() {
                return Err(parse_error(
                    n,
                    format!("expected {} fields, found {}", element.properties.len(), fields.len()),
                ));
            }
            points.push([parse_coord(fields[ix], n)?, parse_coord(fields[iy], n)?, parse_coord(fields[iz], n)?]);
        }
        break;
    }
    if points.is_empty() {
        return Err(parse_error(0, "no vertices found"));
    }
    PointCloud::new(points)
}

pub fn read_ply(path: impl AsRef<Path>) -> Result<PointCloud> {
    parse_ply(&fs::read_to_string(path)?)
}

/// Reads `.ply` files as PLY and anything else as XYZ.
pub fn read_points(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let is_ply = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("ply"));
    if is_ply {
        read_ply(path)
    } else {
        read_xyz(path)
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn literal_line() {
        let pc = parse_xyz("0.5 0 -1.25\n").unwrap();
        assert_eq!(pc.points(), &[[0.5, 0.0, -1.25]]);
    }

    #[test]
    fn whitespace_comments_and_blank_lines() {
        let pc = parse_xyz("# header\n\n  1\t2   3 \n# more\n4 5 6\n").unwrap();
        assert_eq!(pc.points(), &[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
    }

    #[test]
    fn wrong_field_count_reports_line() {
        match parse_xyz("1 2 3\n0.5 0\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unparsable_float_reports_line() {
        match parse_xyz("# c\n1 2 abc\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_xyz("1 2 NaN\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn ply_vertices() {
        let text = "ply\nformat ascii 1.0\ncomment made by hand\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n0 1 2\n-1.5 0.25 3\n3 0 1 2\n";
        let pc = parse_ply(text).unwrap();
        assert_eq!(pc.points(), &[[0.0, 1.0, 2.0], [-1.5, 0.25, 3.0]]);
    }

    #[test]
    fn ply_property_order_and_extras() {
        let text = "ply\nformat ascii 1.0\nelement vertex 1\nproperty float z\nproperty uchar red\nproperty float x\nproperty float y\nend_header\n3 255 1 2\n";
        assert_eq!(parse_ply(text).unwrap().points(), &[[1.0, 2.0, 3.0]]);
    }

    #[test]
    fn ply_binary_is_rejected() {
        let text = "ply\nformat binary_little_endian 1.0\nelement vertex 1\nend_header\n";
        assert!(matches!(parse_ply(text), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.xyz");
        let pc = PointCloud::new(vec![[0.1, -0.0, 1e-300], [std::f64::consts::PI, -2.5e10, 1.0 / 3.0]]).unwrap();
        write_xyz(&pc, &path).unwrap();
        assert!(read_points(&path).unwrap().bitwise_eq(&pc));
    }

    proptest! {
        #[test]
        fn xyz_round_trip_is_bitwise(coords in prop::collection::vec(
            prop::array::uniform3(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO), 1..40)) {
            let pc = PointCloud::new(coords).unwrap();
            let back = parse_xyz(&format_xyz(&pc)).unwrap();
            prop_assert!(back.bitwise_eq(&pc));
        }
    }
}
