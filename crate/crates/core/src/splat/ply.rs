//! Binary little-endian PLY in the layout produced by Gaussian splatting trainers.
//!
//! Stored fields are pre-activation: opacity is a logit, scale is a natural log, and the
//! quaternion `rot_0..3` is (w, x, y, z) and need not be normalized. SH coefficients are
//! stored channel-major: `f_dc_c` is the band-0 value of channel `c`, and `f_rest` holds
//! all higher-band coefficients of red, then green, then blue.

use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, Read, Write};

use nalgebra::Vector3;
use thiserror::Error;

use super::{sh_coefficient_count, GaussianCloud, GaussianSplat, SplatError, MAX_SH_DEGREE};
use crate::Real;

#[derive(Debug, Error)]
pub enum PlyError {
    #[error("ply header line {line}: {message}")]
    Header { line: usize, message: String },
    #[error("ply schema: missing required vertex property `{0}`")]
    MissingProperty(String),
    #[error("ply schema: {0}")]
    Schema(String),
    #[error("ply payload truncated: expected {expected} vertices, read {read}")]
    Truncated { expected: usize, read: usize },
    #[error("splat {index}: opacity {value} has no finite logit")]
    OpacityRange { index: usize, value: f64 },
    #[error(transparent)]
    Invalid(#[from] SplatError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn read(self, b: &[u8]) -> f64 {
        match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Self::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

struct Element {
    name: String,
    count: usize,
    properties: Vec<(String, ScalarType)>,
}

impl Element {
    fn stride(&self) -> usize {
        self.properties.iter().map(|(_, t)| t.size()).sum()
    }
}

fn header_err(line: usize, message: impl Into<String>) -> PlyError {
    PlyError::Header { line, message: message.into() }
}

fn parse_header<R: BufRead>(reader: &mut R) -> Result<Vec<Element>, PlyError> {
    let mut elements: Vec<Element> = Vec::new();
    let mut buf = Vec::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        line_no += 1;
        if reader.read_until(b'\n', &mut buf)? == 0 {
            return Err(header_err(line_no, "unexpected end of file before end_header"));
        }
        let text = std::str::from_utf8(&buf)
            .map_err(|_| header_err(line_no, "header is not valid ASCII"))?
            .trim_end_matches(['\n', '\r']);
        let mut tokens = text.split_whitespace();
        let keyword = tokens.next().unwrap_or("");

        if line_no == 1 {
            if text != "ply" {
                return Err(header_err(line_no, format!("expected magic `ply`, found `{text}`")));
            }
            continue;
        }
        match keyword {
            "format" => {
                let format: Vec<&str> = tokens.collect();
                if format != ["binary_little_endian", "1.0"] {
                    return Err(header_err(
                        line_no,
                        format!("unsupported format `{}`", format.join(" ")),
                    ));
                }
            }
            "comment" | "obj_info" | "" => {}
            "element" => {
                let (Some(name), Some(count), None) = (tokens.next(), tokens.next(), tokens.next())
                else {
                    return Err(header_err(line_no, "expected `element <name> <count>`"));
                };
                let count = count
                    .parse()
                    .map_err(|_| header_err(line_no, format!("invalid element count `{count}`")))?;
                elements.push(Element { name: name.to_owned(), count, properties: Vec::new() });
            }
            "property" => {
                let Some(element) = elements.last_mut() else {
                    return Err(header_err(line_no, "property declared before any element"));
                };
                let (Some(ty), Some(name), None) = (tokens.next(), tokens.next(), tokens.next())
                else {
                    return Err(header_err(line_no, "expected `property <type> <name>`"));
                };
                if ty == "list" {
                    return Err(header_err(line_no, "list properties are not supported"));
                }
                let ty = ScalarType::parse(ty)
                    .ok_or_else(|| header_err(line_no, format!("unknown property type `{ty}`")))?;
                element.properties.push((name.to_owned(), ty));
            }
            "end_header" => return Ok(elements),
            other => return Err(header_err(line_no, format!("unknown header keyword `{other}`"))),
        }
    }
}

/// Reads a splat cloud, applying sigmoid to opacity, exp to scale and normalizing rotations.
pub fn load_ply<T: Real, R: Read>(reader: R) -> Result<GaussianCloud<T>, PlyError> {
    let mut reader = BufReader::new(reader);
    let elements = parse_header(&mut reader)?;

    let vertex_pos = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| PlyError::Schema("no `vertex` element".into()))?;

    // skip elements stored ahead of the vertex block
    for element in &elements[..vertex_pos] {
        let bytes = (element.count * element.stride()) as u64;
        let skipped = io::copy(&mut (&mut reader).take(bytes), &mut io::sink())?;
        if skipped != bytes {
            return Err(PlyError::Truncated { expected: elements[vertex_pos].count, read: 0 });
        }
    }
    let vertex = &elements[vertex_pos];

    let mut offsets: HashMap<&str, (usize, ScalarType)> = HashMap::new();
    let mut offset = 0;
    for (name, ty) in &vertex.properties {
        offsets.insert(name.as_str(), (offset, *ty));
        offset += ty.size();
    }
    let stride = offset;

    let rest_count = vertex.properties.iter().filter(|(n, _)| n.starts_with("f_rest_")).count();
    let sh_degree = (0..=MAX_SH_DEGREE)
        .find(|d| 3 * (sh_coefficient_count(*d) - 1) == rest_count)
        .ok_or_else(|| {
            PlyError::Schema(format!("{rest_count} f_rest properties do not match any SH degree <= 3"))
        })?;
    let per_channel_rest = sh_coefficient_count(sh_degree) - 1;

    let lookup = |name: String| -> Result<(usize, ScalarType), PlyError> {
        offsets.get(name.as_str()).copied().ok_or(PlyError::MissingProperty(name))
    };
    let pos = ["x", "y", "z"].map(|n| lookup(n.into()));
    let dc = [0, 1, 2].map(|c| lookup(format!("f_dc_{c}")));
    let scale = [0, 1, 2].map(|c| lookup(format!("scale_{c}")));
    let rot = [0, 1, 2, 3].map(|c| lookup(format!("rot_{c}")));
    let opacity = lookup("opacity".into())?;
    let pos = collect(pos)?;
    let dc = collect(dc)?;
    let scale = collect(scale)?;
    let rot = collect(rot)?;
    let rest = (0..3 * per_channel_rest)
        .map(|i| lookup(format!("f_rest_{i}")))
        .collect::<Result<Vec<_>, _>>()?;

    let mut splats = Vec::with_capacity(vertex.count);
    let mut record = vec![0u8; stride];
    for index in 0..vertex.count {
        if let Err(e) = reader.read_exact(&mut record) {
            return match e.kind() {
                io::ErrorKind::UnexpectedEof => {
                    Err(PlyError::Truncated { expected: vertex.count, read: index })
                }
                _ => Err(e.into()),
            };
        }
        let get = |(off, ty): (usize, ScalarType)| ty.read(&record[off..]);

        let mut sh = vec![[T::zero(); 3]; per_channel_rest + 1];
        for c in 0..3 {
            sh[0][c] = T::lit(get(dc[c]));
            for k in 0..per_channel_rest {
                sh[k + 1][c] = T::lit(get(rest[c * per_channel_rest + k]));
            }
        }
        let stored_opacity = get(opacity);
        let splat = GaussianSplat::new(
            Vector3::from(pos.map(|p| T::lit(get(p)))),
            rot.map(|r| T::lit(get(r))),
            Vector3::from(scale.map(|s| T::lit(get(s).exp()))),
            T::lit(1.0 / (1.0 + (-stored_opacity).exp())),
            sh,
        )
        .map_err(|e| reindex(e, index))?;
        splats.push(splat);
    }

    Ok(GaussianCloud::new(splats, sh_degree)?)
}

fn collect<const N: usize>(
    items: [Result<(usize, ScalarType), PlyError>; N],
) -> Result<[(usize, ScalarType); N], PlyError> {
    let mut out = [(0, ScalarType::F32); N];
    for (slot, item) in out.iter_mut().zip(items) {
        *slot = item?;
    }
    Ok(out)
}

fn reindex(e: SplatError, index: usize) -> SplatError {
    match e {
        SplatError::NonPositiveScale { axis, value, .. } => {
            SplatError::NonPositiveScale { index, axis, value }
        }
        SplatError::OpacityOutOfRange { value, .. } => SplatError::OpacityOutOfRange { index, value },
        SplatError::DegenerateRotation { .. } => SplatError::DegenerateRotation { index },
        SplatError::ShCount { expected, found, .. } => SplatError::ShCount { index, expected, found },
        SplatError::NonFinite { field, .. } => SplatError::NonFinite { index, field },
        other => other,
    }
}

/// Names of the vertex properties written by [`save_ply`], in file order.
pub fn property_names(sh_degree: usize) -> Vec<String> {
    let mut names: Vec<String> = ["x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2"].map(String::from).into();
    names.extend((0..3 * (sh_coefficient_count(sh_degree) - 1)).map(|i| format!("f_rest_{i}")));
    names.push("opacity".into());
    names.extend((0..3).map(|i| format!("scale_{i}")));
    names.extend((0..4).map(|i| format!("rot_{i}")));
    names
}

/// Writes the cloud as float32 properties, storing logit(opacity) and log(scale).
pub fn save_ply<T: Real, W: Write>(cloud: &GaussianCloud<T>, writer: W) -> Result<(), PlyError> {
    let mut out = io::BufWriter::new(writer);
    let names = property_names(cloud.sh_degree);
    writeln!(out, "ply")?;
    writeln!(out, "format binary_little_endian 1.0")?;
    writeln!(out, "element vertex {}", cloud.count())?;
    for name in &names {
        writeln!(out, "property float {name}")?;
    }
    writeln!(out, "end_header")?;

    let rest = sh_coefficient_count(cloud.sh_degree) - 1;
    let mut record: Vec<f32> = Vec::with_capacity(names.len());
    for (index, splat) in cloud.splats.iter().enumerate() {
        let opacity = splat.opacity.as_f64();
        if !(opacity > 0.0 && opacity < 1.0) {
            return Err(PlyError::OpacityRange { index, value: opacity });
        }
        if splat.sh.len() != rest + 1 {
            return Err(SplatError::ShCount { index, expected: rest + 1, found: splat.sh.len() }.into());
        }
        record.clear();
        record.extend(splat.position.iter().map(|v| v.as_f32()));
        record.extend((0..3).map(|c| splat.sh[0][c].as_f32()));
        for c in 0..3 {
            record.extend((1..=rest).map(|k| splat.sh[k][c].as_f32()));
        }
        record.push((opacity.ln() - (-opacity).ln_1p()) as f32);
        record.extend(splat.scale.iter().map(|s| s.as_f64().ln() as f32));
        let q = splat.rotation.quaternion();
        record.extend([q.w, q.i, q.j, q.k].map(|v| v.as_f32()));
        for v in &record {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}
