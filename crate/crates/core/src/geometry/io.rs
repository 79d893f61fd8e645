//! Point-cloud file I/O.
//!
//! Two formats are supported:
//!
//! * PLY — reads `ascii 1.0` and `binary_little_endian 1.0`, writes ascii.
//!   The `vertex` element must carry `float`/`double` properties `x`, `y`,
//!   `z`; an integer `layer` property populates per-point layer tags and a
//!   `uchar red/green/blue` triple is written by the heatmap exporter.
//!   Unknown scalar and list properties are skipped on read.
//! * XYZ — one `x y z` triple per line, whitespace separated, `#` comments.
//!   Written with 17 significant digits so a round trip is exact.
//!
//! `float` properties are parsed at 32-bit precision and then widened, so
//! values written by this module read back bit-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Point3, PointCloud};
use crate::error::{Error, Result};

/// Format selector for [`load_point_cloud`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CloudFormat {
    /// Decide from the file extension, falling back to the `ply` magic.
    Auto,
    Ply,
    Xyz,
}

/// Format selector for [`save_point_cloud`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CloudWriteFormat {
    PlyAscii,
    Xyz,
}

pub fn load_point_cloud(path: &Path, format: CloudFormat) -> Result<PointCloud> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let format = match format {
        CloudFormat::Auto => detect_format(path, &bytes),
        f => f,
    };
    match format {
        CloudFormat::Ply => read_ply(path, &bytes),
        CloudFormat::Xyz => read_xyz(path, &bytes),
        CloudFormat::Auto => unreachable!(),
    }
}

pub fn save_point_cloud(cloud: &PointCloud, path: &Path, format: CloudWriteFormat) -> Result<()> {
    let body = match format {
        CloudWriteFormat::PlyAscii => ply_ascii_string(cloud.points(), cloud.layers(), None),
        CloudWriteFormat::Xyz => xyz_string(cloud.points()),
    };
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// Writes an ascii PLY with per-vertex `uchar red/green/blue`. Used by the
/// heatmap exporter; colors must match the points in length.
pub(crate) fn save_ply_with_colors(
    points: &[Point3],
    colors: &[[u8; 3]],
    path: &Path,
) -> Result<()> {
    debug_assert_eq!(points.len(), colors.len());
    let body = ply_ascii_string(points, None, Some(colors));
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn detect_format(path: &Path, bytes: &[u8]) -> CloudFormat {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("ply") => CloudFormat::Ply,
        Some("xyz") | Some("txt") => CloudFormat::Xyz,
        _ if bytes.starts_with(b"ply") => CloudFormat::Ply,
        _ => CloudFormat::Xyz,
    }
}

// ---------------------------------------------------------------------------
// XYZ

fn read_xyz(path: &Path, bytes: &[u8]) -> Result<PointCloud> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::parse(path, 0, format!("file is not valid UTF-8: {e}")))?;
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 3 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 3 coordinates, found {}", tokens.len()),
            ));
        }
        let mut coords = [0.0f64; 3];
        for (c, tok) in coords.iter_mut().zip(&tokens) {
            *c = tok
                .parse::<f64>()
                .map_err(|_| Error::parse(path, lineno, format!("invalid number '{tok}'")))?;
        }
        let p = Point3::new(coords[0], coords[1], coords[2]);
        if !p.is_finite() {
            return Err(Error::parse(path, lineno, "non-finite coordinate"));
        }
        points.push(p);
    }
    Ok(PointCloud::from_points(points))
}

fn xyz_string(points: &[Point3]) -> String {
    let mut out = String::new();
    for p in points {
        writeln!(out, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z).unwrap();
    }
    out
}

// ---------------------------------------------------------------------------
// PLY

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn from_name(name: &str) -> Option<ScalarType> {
        Some(match name {
            "char" | "int8" => ScalarType::I8,
            "uchar" | "uint8" => ScalarType::U8,
            "short" | "int16" => ScalarType::I16,
            "ushort" | "uint16" => ScalarType::U16,
            "int" | "int32" => ScalarType::I32,
            "uint" | "uint32" => ScalarType::U32,
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            ScalarType::I8 | ScalarType::U8 => 1,
            ScalarType::I16 | ScalarType::U16 => 2,
            ScalarType::I32 | ScalarType::U32 | ScalarType::F32 => 4,
            ScalarType::F64 => 8,
        }
    }

    fn is_float(self) -> bool {
        matches!(self, ScalarType::F32 | ScalarType::F64)
    }
}

#[derive(Clone, Debug)]
enum PropKind {
    Scalar(ScalarType),
    List { count: ScalarType, item: ScalarType },
}

#[derive(Clone, Debug)]
struct PlyProperty {
    name: String,
    kind: PropKind,
}

#[derive(Clone, Debug)]
struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<PlyProperty>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
}

struct PlyHeader {
    encoding: PlyEncoding,
    elements: Vec<PlyElement>,
    /// Number of header lines, including `end_header`.
    lines: usize,
    /// Byte offset of the first payload byte.
    body_offset: usize,
}

fn next_header_line<'a>(
    path: &Path,
    bytes: &'a [u8],
    offset: &mut usize,
    lineno: &mut usize,
) -> Result<(usize, &'a str)> {
    if *offset >= bytes.len() {
        return Err(Error::parse(path, *lineno, "unexpected end of header"));
    }
    let rest = &bytes[*offset..];
    let end = rest.iter().position(|&b| b == b'\n').unwrap_or(rest.len());
    let raw = &rest[..end];
    *offset += end + 1;
    *lineno += 1;
    let line = std::str::from_utf8(raw)
        .map(|s| s.trim_end_matches('\r'))
        .map_err(|_| Error::parse(path, *lineno, "header line is not valid UTF-8"))?;
    Ok((*lineno, line))
}

fn parse_ply_header(path: &Path, bytes: &[u8]) -> Result<PlyHeader> {
    let mut offset = 0usize;
    let mut lineno = 0usize;

    let (_, magic) = next_header_line(path, bytes, &mut offset, &mut lineno)?;
    if magic.trim() != "ply" {
        return Err(Error::parse(path, 1, "missing 'ply' magic"));
    }

    let mut encoding = None;
    let mut elements: Vec<PlyElement> = Vec::new();
    loop {
        let (lineno_here, line) = next_header_line(path, bytes, &mut offset, &mut lineno)?;
        let lineno = lineno_here;
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.first().copied() {
            None | Some("comment") | Some("obj_info") => continue,
            Some("format") => {
                if fields.len() != 3 || fields[2] != "1.0" {
                    return Err(Error::parse(path, lineno, format!("bad format line '{line}'")));
                }
                encoding = Some(match fields[1] {
                    "ascii" => PlyEncoding::Ascii,
                    "binary_little_endian" => PlyEncoding::BinaryLittleEndian,
                    "binary_big_endian" => {
                        return Err(Error::parse(
                            path,
                            lineno,
                            "unsupported PLY encoding 'binary_big_endian'",
                        ))
                    }
                    other => {
                        return Err(Error::parse(
                            path,
                            lineno,
                            format!("unknown PLY encoding '{other}'"),
                        ))
                    }
                });
            }
            Some("element") => {
                if fields.len() != 3 {
                    return Err(Error::parse(path, lineno, format!("bad element line '{line}'")));
                }
                let count = fields[2].parse::<usize>().map_err(|_| {
                    Error::parse(path, lineno, format!("bad element count '{}'", fields[2]))
                })?;
                elements.push(PlyElement {
                    name: fields[1].to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let element = elements.last_mut().ok_or_else(|| {
                    Error::parse(path, lineno, "property declared before any element")
                })?;
                let kind = match fields.get(1).copied() {
                    Some("list") if fields.len() == 5 => {
                        let count = ScalarType::from_name(fields[2]);
                        let item = ScalarType::from_name(fields[3]);
                        match (count, item) {
                            (Some(count), Some(item)) => PropKind::List { count, item },
                            _ => {
                                return Err(Error::parse(
                                    path,
                                    lineno,
                                    format!("bad list property '{line}'"),
                                ))
                            }
                        }
                    }
                    Some(type_name) if fields.len() == 3 => match ScalarType::from_name(type_name)
                    {
                        Some(t) => PropKind::Scalar(t),
                        None => {
                            return Err(Error::parse(
                                path,
                                lineno,
                                format!("unknown property type '{type_name}'"),
                            ))
                        }
                    },
                    _ => {
                        return Err(Error::parse(path, lineno, format!("bad property line '{line}'")))
                    }
                };
                let name = fields.last().unwrap().to_string();
                element.properties.push(PlyProperty { name, kind });
            }
            Some("end_header") => break,
            Some(other) => {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("unknown header keyword '{other}'"),
                ))
            }
        }
    }

    let encoding =
        encoding.ok_or_else(|| Error::parse(path, lineno, "header has no format line"))?;
    Ok(PlyHeader {
        encoding,
        elements,
        lines: lineno,
        body_offset: offset,
    })
}

/// Positions of the x/y/z (and optional layer) properties within the vertex
/// element's property list.
struct VertexLayout {
    x: usize,
    y: usize,
    z: usize,
    layer: Option<usize>,
}

fn vertex_layout(path: &Path, element: &PlyElement) -> Result<VertexLayout> {
    let mut x = None;
    let mut y = None;
    let mut z = None;
    let mut layer = None;
    for (i, prop) in element.properties.iter().enumerate() {
        match (prop.name.as_str(), &prop.kind) {
            ("x", PropKind::Scalar(t)) | ("y", PropKind::Scalar(t)) | ("z", PropKind::Scalar(t))
                if t.is_float() =>
            {
                match prop.name.as_str() {
                    "x" => x = Some(i),
                    "y" => y = Some(i),
                    _ => z = Some(i),
                }
            }
            ("x" | "y" | "z", _) => {
                return Err(Error::parse(
                    path,
                    0,
                    format!("vertex property '{}' must be float or double", prop.name),
                ));
            }
            ("layer", PropKind::Scalar(t)) if !t.is_float() => layer = Some(i),
            ("layer", _) => {
                return Err(Error::parse(path, 0, "vertex property 'layer' must be an integer"));
            }
            _ => {}
        }
    }
    match (x, y, z) {
        (Some(x), Some(y), Some(z)) => Ok(VertexLayout { x, y, z, layer }),
        _ => Err(Error::parse(
            path,
            0,
            "vertex element must declare float properties x, y and z",
        )),
    }
}

fn read_ply(path: &Path, bytes: &[u8]) -> Result<PointCloud> {
    let header = parse_ply_header(path, bytes)?;
    let vertex = header
        .elements
        .iter()
        .find(|e| e.name == "vertex")
        .ok_or_else(|| Error::parse(path, 0, "no 'vertex' element in header"))?;
    let layout = vertex_layout(path, vertex)?;

    match header.encoding {
        PlyEncoding::Ascii => read_ply_ascii(path, bytes, &header, vertex, &layout),
        PlyEncoding::BinaryLittleEndian => read_ply_binary(path, bytes, &header, vertex, &layout),
    }
}

fn read_ply_ascii(
    path: &Path,
    bytes: &[u8],
    header: &PlyHeader,
    vertex: &PlyElement,
    layout: &VertexLayout,
) -> Result<PointCloud> {
    let body = std::str::from_utf8(&bytes[header.body_offset..])
        .map_err(|_| Error::parse(path, header.lines, "ascii payload is not valid UTF-8"))?;
    let mut lines = body.lines().enumerate().map(|(i, l)| (header.lines + i + 1, l));

    let mut points = Vec::with_capacity(vertex.count);
    let mut layers = layout.layer.map(|_| Vec::with_capacity(vertex.count));

    for element in &header.elements {
        for _ in 0..element.count {
            let (lineno, line) = lines
                .next()
                .ok_or_else(|| Error::parse(path, 0, format!("missing data for element '{}'", element.name)))?;
            if element.name != "vertex" {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let mut coords = [0.0f64; 3];
            let mut layer_value: Option<i32> = None;
            for (i, prop) in element.properties.iter().enumerate() {
                match &prop.kind {
                    PropKind::Scalar(t) => {
                        let tok = tokens.next().ok_or_else(|| {
                            Error::parse(path, lineno, format!("missing value for '{}'", prop.name))
                        })?;
                        if i == layout.x || i == layout.y || i == layout.z {
                            let value = parse_float(tok, *t).ok_or_else(|| {
                                Error::parse(path, lineno, format!("invalid number '{tok}'"))
                            })?;
                            if i == layout.x {
                                coords[0] = value;
                            } else if i == layout.y {
                                coords[1] = value;
                            } else {
                                coords[2] = value;
                            }
                        } else if Some(i) == layout.layer {
                            let v = tok.parse::<i64>().ok().and_then(|v| i32::try_from(v).ok());
                            layer_value = Some(v.ok_or_else(|| {
                                Error::parse(path, lineno, format!("invalid layer value '{tok}'"))
                            })?);
                        } else if tok.parse::<f64>().is_err() {
                            return Err(Error::parse(
                                path,
                                lineno,
                                format!("invalid value '{tok}' for '{}'", prop.name),
                            ));
                        }
                    }
                    PropKind::List { .. } => {
                        let tok = tokens.next().ok_or_else(|| {
                            Error::parse(path, lineno, format!("missing list count for '{}'", prop.name))
                        })?;
                        let n = tok.parse::<usize>().map_err(|_| {
                            Error::parse(path, lineno, format!("invalid list count '{tok}'"))
                        })?;
                        for _ in 0..n {
                            tokens.next().ok_or_else(|| {
                                Error::parse(path, lineno, "list shorter than its count")
                            })?;
                        }
                    }
                }
            }
            if tokens.next().is_some() {
                return Err(Error::parse(path, lineno, "trailing values on vertex line"));
            }
            let p = Point3::new(coords[0], coords[1], coords[2]);
            if !p.is_finite() {
                return Err(Error::parse(path, lineno, "non-finite coordinate"));
            }
            points.push(p);
            if let (Some(ls), Some(v)) = (layers.as_mut(), layer_value) {
                ls.push(v);
            }
        }
    }

    finish_cloud(points, layers)
}

fn parse_float(token: &str, t: ScalarType) -> Option<f64> {
    match t {
        // 32-bit properties are parsed at their native width and widened so
        // that values we wrote read back bit-identical.
        ScalarType::F32 => token.parse::<f32>().ok().map(f64::from),
        _ => token.parse::<f64>().ok(),
    }
}

fn read_ply_binary(
    path: &Path,
    bytes: &[u8],
    header: &PlyHeader,
    vertex: &PlyElement,
    layout: &VertexLayout,
) -> Result<PointCloud> {
    let mut offset = header.body_offset;
    let mut take = |n: usize, what: &str| -> Result<&[u8]> {
        if offset + n > bytes.len() {
            return Err(Error::parse(
                path,
                0,
                format!("binary payload truncated at byte offset {offset} while reading {what}"),
            ));
        }
        let slice = &bytes[offset..offset + n];
        offset += n;
        Ok(slice)
    };

    let mut points = Vec::with_capacity(vertex.count);
    let mut layers = layout.layer.map(|_| Vec::with_capacity(vertex.count));

    for element in &header.elements {
        let is_vertex = element.name == "vertex";
        for _ in 0..element.count {
            let mut coords = [0.0f64; 3];
            let mut layer_value = 0i32;
            for (i, prop) in element.properties.iter().enumerate() {
                match &prop.kind {
                    PropKind::Scalar(t) => {
                        let raw = take(t.size(), &prop.name)?;
                        if !is_vertex {
                            continue;
                        }
                        if i == layout.x || i == layout.y || i == layout.z {
                            let value = decode_float(raw, *t);
                            if i == layout.x {
                                coords[0] = value;
                            } else if i == layout.y {
                                coords[1] = value;
                            } else {
                                coords[2] = value;
                            }
                        } else if Some(i) == layout.layer {
                            layer_value = decode_int(raw, *t);
                        }
                    }
                    PropKind::List { count, item } => {
                        let raw = take(count.size(), "list count")?;
                        let n = decode_int(raw, *count).max(0) as usize;
                        take(n * item.size(), "list items")?;
                    }
                }
            }
            if !is_vertex {
                continue;
            }
            let p = Point3::new(coords[0], coords[1], coords[2]);
            if !p.is_finite() {
                return Err(Error::parse(
                    path,
                    0,
                    format!("non-finite coordinate in vertex {}", points.len()),
                ));
            }
            points.push(p);
            if let Some(ls) = layers.as_mut() {
                ls.push(layer_value);
            }
        }
    }

    finish_cloud(points, layers)
}

fn decode_float(raw: &[u8], t: ScalarType) -> f64 {
    match t {
        ScalarType::F32 => f32::from_le_bytes(raw.try_into().unwrap()) as f64,
        ScalarType::F64 => f64::from_le_bytes(raw.try_into().unwrap()),
        _ => decode_int(raw, t) as f64,
    }
}

fn decode_int(raw: &[u8], t: ScalarType) -> i32 {
    match t {
        ScalarType::I8 => raw[0] as i8 as i32,
        ScalarType::U8 => raw[0] as i32,
        ScalarType::I16 => i16::from_le_bytes(raw.try_into().unwrap()) as i32,
        ScalarType::U16 => u16::from_le_bytes(raw.try_into().unwrap()) as i32,
        ScalarType::I32 => i32::from_le_bytes(raw.try_into().unwrap()),
        ScalarType::U32 => u32::from_le_bytes(raw.try_into().unwrap()) as i32,
        ScalarType::F32 | ScalarType::F64 => 0,
    }
}

fn finish_cloud(points: Vec<Point3>, layers: Option<Vec<i32>>) -> Result<PointCloud> {
    match layers {
        Some(ls) => PointCloud::with_layers(points, ls),
        None => Ok(PointCloud::from_points(points)),
    }
}

fn ply_ascii_string(
    points: &[Point3],
    layers: Option<&[i32]>,
    colors: Option<&[[u8; 3]]>,
) -> String {
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    writeln!(out, "element vertex {}", points.len()).unwrap();
    out.push_str("property float x\nproperty float y\nproperty float z\n");
    if layers.is_some() {
        out.push_str("property int layer\n");
    }
    if colors.is_some() {
        out.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    out.push_str("end_header\n");
    for (i, p) in points.iter().enumerate() {
        write!(out, "{} {} {}", p.x as f32, p.y as f32, p.z as f32).unwrap();
        if let Some(ls) = layers {
            write!(out, " {}", ls[i]).unwrap();
        }
        if let Some(cs) = colors {
            write!(out, " {} {} {}", cs[i][0], cs[i][1], cs[i][2]).unwrap();
        }
        out.push('\n');
    }
    out
}
