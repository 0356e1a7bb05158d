//! Pinhole back-projection and multi-camera voxel fusion.

use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};

use crate::demo::{CameraImage, Observation};
use crate::par::{self, Execution};
use crate::pose::{Pose, Vec3};

#[derive(Debug, thiserror::Error)]
pub enum CamvoxError {
    #[error("camera {camera}: image is {got_w}x{got_h}, model expects {want_w}x{want_h}")]
    Shape {
        camera: String,
        got_w: usize,
        got_h: usize,
        want_w: usize,
        want_h: usize,
    },
    #[error("camera {camera}: buffer holds {got} values, expected {want}")]
    BufferLength { camera: String, got: usize, want: usize },
    #[error("no camera model for image {0:?}")]
    MissingCamera(String),
    #[error("voxel index {0:?} outside grid dims {1:?}")]
    IndexOutOfRange([usize; 3], [usize; 3]),
    #[error("invalid camera model {0}: {1}")]
    InvalidCamera(String, &'static str),
    #[error("invalid grid spec: {0}")]
    InvalidGrid(&'static str),
    #[error("voxel dump: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Pinhole camera with a camera-to-world extrinsic.
///
/// Camera frame: +z along the optical axis, +x right, +y down.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub extrinsic: Pose,
}

impl CameraModel {
    /// Square-pixel camera at `eye` looking at `target` with a horizontal field of view.
    pub fn look_at(name: &str, width: usize, height: usize, hfov_deg: f64, eye: Vec3, target: Vec3) -> Self {
        let f = (width as f64 / 2.0) / (hfov_deg.to_radians() / 2.0).tan();
        Self {
            name: name.to_string(),
            width,
            height,
            fx: f,
            fy: f,
            cx: (width / 2) as f64,
            cy: (height / 2) as f64,
            extrinsic: Pose::look_at(eye, target, -Vec3::z()),
        }
    }

    pub fn validate(&self) -> Result<(), CamvoxError> {
        let bad = |m| Err(CamvoxError::InvalidCamera(self.name.clone(), m));
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return bad("focal lengths must be positive");
        }
        if !(0.0..self.width as f64).contains(&self.cx) || !(0.0..self.height as f64).contains(&self.cy) {
            return bad("principal point outside the image");
        }
        Ok(())
    }

    /// Camera-frame ray direction (z = 1) through pixel `(u, v)`.
    pub fn pixel_ray(&self, u: usize, v: usize) -> Vec3 {
        Vec3::new((u as f64 - self.cx) / self.fx, (v as f64 - self.cy) / self.fy, 1.0)
    }
}

/// Axis-aligned lattice of cubic cells. Cell `(i, j, k)` spans the half-open box
/// `origin + [i, i+1) * voxel_size` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: [f64; 3],
    pub voxel_size: f64,
    pub dims: [usize; 3],
}

impl Default for GridSpec {
    /// 100³ cells of 1 cm over the tabletop workspace `[-0.3, 0.7) x [-0.5, 0.5) x [0.6, 1.6)`.
    fn default() -> Self {
        Self {
            origin: [-0.3, -0.5, 0.6],
            voxel_size: 0.01,
            dims: [100, 100, 100],
        }
    }
}

/// A point fell outside the grid; carries the unclamped index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("point maps to voxel {index:?}, outside the grid")]
pub struct OutOfBounds {
    pub index: [i64; 3],
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), CamvoxError> {
        if !(self.voxel_size > 0.0) {
            return Err(CamvoxError::InvalidGrid("voxel_size must be positive"));
        }
        if self.dims.iter().any(|&d| d == 0 || d > i32::MAX as usize) {
            return Err(CamvoxError::InvalidGrid("every dimension must be in [1, i32::MAX]"));
        }
        Ok(())
    }

    pub fn num_cells(&self) -> usize {
        self.dims.iter().product()
    }

    /// x-fastest flattening: `i + nx * (j + ny * k)`.
    pub fn flat(&self, idx: [usize; 3]) -> usize {
        idx[0] + self.dims[0] * (idx[1] + self.dims[1] * idx[2])
    }

    pub fn unflat(&self, flat: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [flat % nx, (flat / nx) % ny, flat / (nx * ny)]
    }

    pub fn contains_index(&self, idx: [usize; 3]) -> bool {
        idx.iter().zip(self.dims).all(|(&i, d)| i < d)
    }

    pub fn world_to_voxel(&self, p: &Vec3) -> Result<[usize; 3], OutOfBounds> {
        let mut signed = [0i64; 3];
        for a in 0..3 {
            let f = ((p[a] - self.origin[a]) / self.voxel_size).floor();
            signed[a] = if f.is_finite() { f as i64 } else { i64::MIN };
        }
        let inside = signed
            .iter()
            .zip(self.dims)
            .all(|(&i, d)| i >= 0 && (i as u64) < d as u64);
        if inside {
            Ok(signed.map(|i| i as usize))
        } else {
            Err(OutOfBounds { index: signed })
        }
    }

    pub fn voxel_to_world(&self, idx: [usize; 3]) -> Result<Vec3, CamvoxError> {
        if !self.contains_index(idx) {
            return Err(CamvoxError::IndexOutOfRange(idx, self.dims));
        }
        Ok(self.cell_center(idx))
    }

    /// Cell center without the range check.
    pub fn cell_center(&self, idx: [usize; 3]) -> Vec3 {
        Vec3::new(
            self.origin[0] + (idx[0] as f64 + 0.5) * self.voxel_size,
            self.origin[1] + (idx[1] as f64 + 0.5) * self.voxel_size,
            self.origin[2] + (idx[2] as f64 + 0.5) * self.voxel_size,
        )
    }

    pub fn center(&self) -> Vec3 {
        Vec3::new(
            self.origin[0] + 0.5 * self.dims[0] as f64 * self.voxel_size,
            self.origin[1] + 0.5 * self.dims[1] as f64 * self.voxel_size,
            self.origin[2] + 0.5 * self.dims[2] as f64 * self.voxel_size,
        )
    }

    pub fn max_corner(&self) -> Vec3 {
        Vec3::new(
            self.origin[0] + self.dims[0] as f64 * self.voxel_size,
            self.origin[1] + self.dims[1] as f64 * self.voxel_size,
            self.origin[2] + self.dims[2] as f64 * self.voxel_size,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Cell {
    pub count: u32,
    pub rgb_sum: [u32; 3],
}

/// Dense grid of per-cell point counts and color sums.
///
/// A cell is occupied iff its count is positive; its color is the mean of
/// every inserted point color. Integer sums keep fusion exactly independent
/// of insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    spec: GridSpec,
    cells: Vec<Cell>,
}

impl VoxelGrid {
    pub fn empty(spec: GridSpec) -> Self {
        Self {
            cells: vec![Cell::default(); spec.num_cells()],
            spec,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, idx: [usize; 3]) -> Cell {
        self.cells[self.spec.flat(idx)]
    }

    pub fn is_occupied(&self, idx: [usize; 3]) -> bool {
        self.cell(idx).count > 0
    }

    pub fn count(&self, idx: [usize; 3]) -> u32 {
        self.cell(idx).count
    }

    /// Mean RGB of the cell, `None` when empty.
    pub fn color(&self, idx: [usize; 3]) -> Option<[f64; 3]> {
        let c = self.cell(idx);
        (c.count > 0).then(|| c.rgb_sum.map(|s| s as f64 / c.count as f64))
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|c| c.count > 0).count()
    }

    /// Occupied cell indices in x-fastest order.
    pub fn occupied(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.count > 0)
            .map(|(f, _)| self.spec.unflat(f))
    }

    /// Inserts a single colored point; returns false when it falls outside.
    pub fn insert(&mut self, p: &Vec3, rgb: [u8; 3]) -> bool {
        match self.spec.world_to_voxel(p) {
            Ok(idx) => {
                let f = self.spec.flat(idx);
                self.add_to_cell(f, 1, rgb.map(u32::from));
                true
            }
            Err(_) => false,
        }
    }

    /// Adds `count` points with color total `rgb_sum` to a flat cell.
    pub fn add_to_cell(&mut self, flat: usize, count: u32, rgb_sum: [u32; 3]) {
        let c = &mut self.cells[flat];
        c.count += count;
        for (acc, v) in c.rgb_sum.iter_mut().zip(rgb_sum) {
            *acc += v;
        }
    }

    /// Cell-wise union: counts add, colors combine by count-weighted mean.
    pub fn merge(&mut self, other: &VoxelGrid) {
        assert_eq!(self.spec, other.spec, "merging grids with different specs");
        for (f, c) in other.cells.iter().enumerate() {
            if c.count > 0 {
                self.add_to_cell(f, c.count, c.rgb_sum);
            }
        }
    }

    /// Occupancy bitset, bit `f % 64` of word `f / 64` for flat index `f`.
    pub fn occupancy_bits(&self) -> Vec<u64> {
        let mut bits = vec![0u64; self.cells.len().div_ceil(64)];
        for (f, c) in self.cells.iter().enumerate() {
            if c.count > 0 {
                bits[f / 64] |= 1 << (f % 64);
            }
        }
        bits
    }
}

/// Back-projects every valid pixel into world coordinates.
pub fn back_project(
    depth: &[f32],
    rgb: &[u8],
    width: usize,
    height: usize,
    cam: &CameraModel,
) -> Result<Vec<(Vec3, [u8; 3])>, CamvoxError> {
    if width != cam.width || height != cam.height {
        return Err(CamvoxError::Shape {
            camera: cam.name.clone(),
            got_w: width,
            got_h: height,
            want_w: cam.width,
            want_h: cam.height,
        });
    }
    let n = width * height;
    for (got, want) in [(depth.len(), n), (rgb.len(), 3 * n)] {
        if got != want {
            return Err(CamvoxError::BufferLength {
                camera: cam.name.clone(),
                got,
                want,
            });
        }
    }
    let mut out = Vec::new();
    for v in 0..height {
        for u in 0..width {
            let p = v * width + u;
            let d = depth[p] as f64;
            if !(d > 0.0) || !d.is_finite() {
                continue;
            }
            let local = cam.pixel_ray(u, v) * d;
            let world = cam.extrinsic.transform_point(&local);
            out.push((world, [rgb[3 * p], rgb[3 * p + 1], rgb[3 * p + 2]]));
        }
    }
    Ok(out)
}

fn back_project_image(img: &CameraImage, cam: &CameraModel) -> Result<Vec<(Vec3, [u8; 3])>, CamvoxError> {
    back_project(&img.depth, &img.rgb, img.width, img.height, cam)
}

/// Fuses every camera image of `obs` into a fresh grid. Out-of-bounds points are dropped.
pub fn fuse(
    obs: &Observation,
    cams: &[CameraModel],
    spec: &GridSpec,
    exec: Execution,
) -> Result<VoxelGrid, CamvoxError> {
    spec.validate()?;
    let mut pairs = Vec::with_capacity(obs.images.len());
    for (name, img) in &obs.images {
        let cam = cams
            .iter()
            .find(|c| &c.name == name)
            .ok_or_else(|| CamvoxError::MissingCamera(name.clone()))?;
        pairs.push((img, cam));
    }
    let per_camera = par::map_slice(exec, &pairs, |(img, cam)| {
        back_project_image(img, cam).map(|pts| {
            pts.into_iter()
                .filter_map(|(p, c)| spec.world_to_voxel(&p).ok().map(|idx| (spec.flat(idx), c)))
                .collect::<Vec<_>>()
        })
    });
    let mut grid = VoxelGrid::empty(*spec);
    for binned in per_camera {
        for (f, c) in binned? {
            grid.add_to_cell(f, 1, c.map(u32::from));
        }
    }
    Ok(grid)
}

const BVOX_MAGIC: &[u8; 4] = b"BVOX";
pub const BVOX_HEADER_LEN: usize = 48;

/// Decoded contents of a voxel dump.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelDump {
    pub spec: GridSpec,
    /// Flat x-fastest occupancy.
    pub occupied: Vec<bool>,
    /// Rounded mean color of each occupied cell, in flat order.
    pub colors: Vec<[u8; 3]>,
}

/// Writes the flat voxel dump.
///
/// Layout (little-endian): `"BVOX"`, origin as 3 x f64, voxel size f64, dims
/// as 3 x i32 (48 bytes total), then the occupancy bitset (bit `f % 8` of byte
/// `f / 8`, x-fastest), then one RGB byte triple per occupied cell in the same order.
pub fn write_bvox<W: Write>(grid: &VoxelGrid, mut w: W) -> Result<(), CamvoxError> {
    let spec = grid.spec();
    w.write_all(BVOX_MAGIC)?;
    for o in spec.origin {
        w.write_all(&o.to_le_bytes())?;
    }
    w.write_all(&spec.voxel_size.to_le_bytes())?;
    for d in spec.dims {
        w.write_all(&(d as i32).to_le_bytes())?;
    }
    let mut bits = vec![0u8; spec.num_cells().div_ceil(8)];
    let mut colors = Vec::new();
    for (f, c) in grid.cells().iter().enumerate() {
        if c.count > 0 {
            bits[f / 8] |= 1 << (f % 8);
            for a in 0..3 {
                colors.push((c.rgb_sum[a] as f64 / c.count as f64).round() as u8);
            }
        }
    }
    w.write_all(&bits)?;
    w.write_all(&colors)?;
    Ok(())
}

pub fn read_bvox<R: Read>(mut r: R) -> Result<VoxelDump, CamvoxError> {
    let mut header = [0u8; BVOX_HEADER_LEN];
    r.read_exact(&mut header)?;
    if &header[..4] != BVOX_MAGIC {
        return Err(CamvoxError::Format("bad magic".into()));
    }
    let f64_at = |o: usize| f64::from_le_bytes(header[o..o + 8].try_into().unwrap());
    let i32_at = |o: usize| i32::from_le_bytes(header[o..o + 4].try_into().unwrap());
    let mut dims = [0usize; 3];
    for (a, d) in dims.iter_mut().enumerate() {
        let v = i32_at(36 + 4 * a);
        if v <= 0 {
            return Err(CamvoxError::Format(format!("non-positive dimension {v}")));
        }
        *d = v as usize;
    }
    let spec = GridSpec {
        origin: [f64_at(4), f64_at(12), f64_at(20)],
        voxel_size: f64_at(28),
        dims,
    };
    spec.validate()?;
    let n = spec.num_cells();
    let mut bits = vec![0u8; n.div_ceil(8)];
    r.read_exact(&mut bits)?;
    let occupied: Vec<bool> = (0..n).map(|f| bits[f / 8] >> (f % 8) & 1 == 1).collect();
    let m = occupied.iter().filter(|&&o| o).count();
    let mut raw = vec![0u8; 3 * m];
    r.read_exact(&mut raw)?;
    let colors = raw.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    Ok(VoxelDump { spec, occupied, colors })
}
