//! Orthographic software rasterizer and binary PGM I/O.
//!
//! The camera looks down −z. Pixel (col, row) samples the world at its
//! center, row 0 at the top. Shading is a headlight: intensity is
//! 255·max(0, n·ẑ). Ties on shared edges follow a top-left rule, so every
//! pixel center is claimed by exactly one triangle of a closed surface.

use std::io::Write as _;
use std::path::Path;

use nalgebra::{Point2, Point3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{compute_aabb, MeshError, TriMesh};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    pub resolution: usize,
    /// World meters spanned by the image side.
    pub scale: f64,
    /// Camera offset along +z from the framing center.
    pub distance: f64,
    pub background: u8,
    /// Recorded for provenance; an orthographic camera ignores them.
    pub focal_length_mm: f64,
    pub sensor_width_mm: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        CameraConfig {
            resolution: 200,
            scale: 2.5,
            distance: 6.0,
            background: 0,
            focal_length_mm: 60.0,
            sensor_width_mm: 32.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("invalid camera: {0}")]
    Camera(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed PGM: {0}")]
    Header(String),
    #[error("truncated PGM: expected {expected} pixel bytes, found {found}")]
    Truncated { expected: usize, found: usize },
}

impl CameraConfig {
    pub fn validate(&self) -> Result<(), RasterError> {
        if self.resolution == 0 {
            return Err(RasterError::Camera("resolution must be positive".into()));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(RasterError::Camera(format!("scale {} must be positive", self.scale)));
        }
        if !(self.distance > 0.0 && self.distance.is_finite()) {
            return Err(RasterError::Camera(format!("distance {} must be positive", self.distance)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, fill: u8) -> Self {
        GrayImage {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Option<Self> {
        (data.len() == width * height).then_some(GrayImage { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Row-major pixels, row 0 at the top.
    pub fn pixels(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, col: usize, row: usize) -> u8 {
        self.data[row * self.width + col]
    }

    fn set(&mut self, col: usize, row: usize, v: u8) {
        self.data[row * self.width + col] = v;
    }

    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }
}

/// Rendered image plus the set of pixels covered by any triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct Render {
    pub image: GrayImage,
    pub coverage: Vec<bool>,
}

/// Window centered on the mesh bounding box center in x and y.
pub fn render_orthographic(mesh: &TriMesh, cam: &CameraConfig) -> Result<GrayImage, RasterError> {
    Ok(render_with_coverage(mesh, cam)?.image)
}

pub fn render_with_coverage(mesh: &TriMesh, cam: &CameraConfig) -> Result<Render, RasterError> {
    let center = compute_aabb(mesh)?.center();
    render_framed(mesh, cam, &center)
}

/// Renders with the image window centered on `center`.x/y; the camera sits
/// at `center.z + distance` and nothing in front of it is drawn.
pub fn render_framed(mesh: &TriMesh, cam: &CameraConfig, center: &Point3<f64>) -> Result<Render, RasterError> {
    cam.validate()?;
    if mesh.is_empty() {
        return Err(MeshError::Empty.into());
    }
    let n = cam.resolution;
    let px = cam.scale / n as f64;
    let left = center.x - cam.scale / 2.0;
    let top = center.y + cam.scale / 2.0;
    let camera_z = center.z + cam.distance;

    let mut image = GrayImage::new(n, n, cam.background);
    let mut depth = vec![f64::NEG_INFINITY; n * n];
    let mut coverage = vec![false; n * n];

    for f in 0..mesh.faces().len() {
        let tri = mesh.triangle(f);
        if tri.iter().any(|p| p.z >= camera_z) {
            continue;
        }
        // pixel coordinates: x right, y down
        let s = tri.map(|p| Point2::new((p.x - left) / px, (top - p.y) / px));
        let area = edge(&s[0], &s[1], &s[2]);
        if area == 0.0 {
            continue;
        }
        let (order, area) = if area > 0.0 { ([0, 1, 2], area) } else { ([0, 2, 1], -area) };
        let v = order.map(|i| s[i]);
        let z = order.map(|i| tri[i].z);
        let shade = (255.0 * mesh.face_normal(f).z.max(0.0)).round() as u8;

        let col0 = (v.iter().map(|p| p.x).fold(f64::INFINITY, f64::min) - 0.5).ceil().max(0.0) as usize;
        let col1 = (v.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max) - 0.5).floor();
        let row0 = (v.iter().map(|p| p.y).fold(f64::INFINITY, f64::min) - 0.5).ceil().max(0.0) as usize;
        let row1 = (v.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max) - 0.5).floor();
        if col1 < 0.0 || row1 < 0.0 {
            continue;
        }
        let col1 = (col1 as usize).min(n - 1);
        let row1 = (row1 as usize).min(n - 1);
        let owns = [owns_ties(&v[1], &v[2]), owns_ties(&v[2], &v[0]), owns_ties(&v[0], &v[1])];

        for row in row0..=row1 {
            for col in col0..=col1 {
                let p = Point2::new(col as f64 + 0.5, row as f64 + 0.5);
                let w = [edge(&v[1], &v[2], &p), edge(&v[2], &v[0], &p), edge(&v[0], &v[1], &p)];
                if !(0..3).all(|i| w[i] > 0.0 || (w[i] == 0.0 && owns[i])) {
                    continue;
                }
                let pz = (w[0] * z[0] + w[1] * z[1] + w[2] * z[2]) / area;
                let k = row * n + col;
                if pz > depth[k] {
                    depth[k] = pz;
                    coverage[k] = true;
                    image.set(col, row, shade);
                }
            }
        }
    }
    Ok(Render { image, coverage })
}

/// Twice the signed area of (a, b, p); positive inside for the chosen winding.
fn edge(a: &Point2<f64>, b: &Point2<f64>, p: &Point2<f64>) -> f64 {
    (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
}

/// Top-left rule: an edge keeps pixel centers lying exactly on it when its
/// inward normal points right, or straight down.
fn owns_ties(a: &Point2<f64>, b: &Point2<f64>) -> bool {
    let (nx, ny) = (-(b.y - a.y), b.x - a.x);
    nx > 0.0 || (nx == 0.0 && ny > 0.0)
}

pub fn write_pgm(img: &GrayImage, path: &Path) -> Result<(), RasterError> {
    let io = |source| RasterError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(&img.to_pgm_bytes()).map_err(io)
}

pub fn read_pgm(path: &Path) -> Result<GrayImage, RasterError> {
    let bytes = std::fs::read(path).map_err(|source| RasterError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_pgm(&bytes)
}

/// Parses binary PGM with maxval 255. Comments are allowed in the header.
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage, RasterError> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(RasterError::Header("header ends early".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P5" {
        return Err(RasterError::Header(format!("magic {:?}, expected P5", fields[0])));
    }
    let num = |s: &str, what: &str| {
        s.parse::<usize>()
            .map_err(|_| RasterError::Header(format!("bad {what} {s:?}")))
    };
    let (width, height, maxval) = (num(&fields[1], "width")?, num(&fields[2], "height")?, num(&fields[3], "maxval")?);
    if maxval != 255 {
        return Err(RasterError::Header(format!("maxval {maxval}, expected 255")));
    }
    if width == 0 || height == 0 {
        return Err(RasterError::Header("zero image size".into()));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(RasterError::Truncated {
            expected: width * height,
            found: 0,
        });
    }
    let data = &bytes[pos + 1..];
    let expected = width * height;
    if data.len() != expected {
        return Err(RasterError::Truncated {
            expected,
            found: data.len(),
        });
    }
    Ok(GrayImage {
        width,
        height,
        data: data.to_vec(),
    })
}
