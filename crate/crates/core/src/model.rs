//! Geometry, phantoms, grids and data containers shared by the pipelines.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::specfun::gauss_legendre;
use crate::{Error, Result};

/// Shape of one analytic phantom primitive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimitiveKind {
    /// Indicator of a 2D disk.
    Disk,
    /// Indicator of a 3D ball.
    Ball,
    /// Isotropic Gaussian `A exp(-|x-c|^2 / 2 sigma^2)`.
    Gaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Primitive {
    pub kind: PrimitiveKind,
    pub center: Vec<f64>,
    /// Radius for disks and balls, standard deviation for Gaussians.
    pub size: f64,
    pub amplitude: f64,
}

impl Primitive {
    pub fn disk(center: [f64; 2], radius: f64, amplitude: f64) -> Self {
        Self { kind: PrimitiveKind::Disk, center: center.to_vec(), size: radius, amplitude }
    }

    pub fn ball(center: [f64; 3], radius: f64, amplitude: f64) -> Self {
        Self { kind: PrimitiveKind::Ball, center: center.to_vec(), size: radius, amplitude }
    }

    pub fn gaussian(center: &[f64], sigma: f64, amplitude: f64) -> Self {
        Self { kind: PrimitiveKind::Gaussian, center: center.to_vec(), size: sigma, amplitude }
    }

    /// Radius beyond which the primitive is treated as zero: the radius
    /// itself for indicators, `4 sigma` for Gaussians.
    pub fn support(&self) -> f64 {
        match self.kind {
            PrimitiveKind::Disk | PrimitiveKind::Ball => self.size,
            PrimitiveKind::Gaussian => 4.0 * self.size,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        match self.kind {
            PrimitiveKind::Disk | PrimitiveKind::Ball => {
                if r2 <= self.size * self.size {
                    self.amplitude
                } else {
                    0.0
                }
            }
            PrimitiveKind::Gaussian => self.amplitude * (-r2 / (2.0 * self.size * self.size)).exp(),
        }
    }

    /// Integral over the whole space (the Gaussian is integrated to infinity).
    pub fn mass(&self, dimension: usize) -> f64 {
        let a = self.amplitude;
        let s = self.size;
        match (self.kind, dimension) {
            (PrimitiveKind::Disk, _) => a * PI * s * s,
            (PrimitiveKind::Ball, _) => a * 4.0 / 3.0 * PI * s.powi(3),
            (PrimitiveKind::Gaussian, d) => a * (2.0 * PI * s * s).powf(d as f64 / 2.0),
        }
    }
}

/// Sum of analytic primitives in 2 or 3 dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    dimension: usize,
    primitives: Vec<Primitive>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhantomDoc {
    dimension: usize,
    primitives: Vec<PrimitiveDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PrimitiveDoc {
    kind: PrimitiveKind,
    center: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    amplitude: f64,
}

impl Phantom {
    pub fn new(dimension: usize, primitives: Vec<Primitive>) -> Result<Self> {
        if dimension != 2 && dimension != 3 {
            return Err(Error::Phantom(format!("dimension must be 2 or 3, got {dimension}")));
        }
        for (i, p) in primitives.iter().enumerate() {
            if p.center.len() != dimension {
                return Err(Error::Phantom(format!(
                    "primitive {i}: center has {} coordinates in a {dimension}D phantom",
                    p.center.len()
                )));
            }
            match (p.kind, dimension) {
                (PrimitiveKind::Disk, 3) => {
                    return Err(Error::Phantom(format!("primitive {i}: disk in a 3D phantom (use ball)")))
                }
                (PrimitiveKind::Ball, 2) => {
                    return Err(Error::Phantom(format!("primitive {i}: ball in a 2D phantom (use disk)")))
                }
                _ => {}
            }
            if !(p.size.is_finite() && p.size > 0.0) {
                return Err(Error::Phantom(format!("primitive {i}: radius/sigma must be positive")));
            }
            if !p.amplitude.is_finite() || p.center.iter().any(|c| !c.is_finite()) {
                return Err(Error::Phantom(format!("primitive {i}: non-finite parameter")));
            }
        }
        Ok(Self { dimension, primitives })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    /// Radius of the smallest origin-centred ball containing every support.
    pub fn support_radius(&self) -> f64 {
        self.primitives
            .iter()
            .map(|p| p.center.iter().map(|c| c * c).sum::<f64>().sqrt() + p.support())
            .fold(0.0, f64::max)
    }

    /// Fails unless the phantom lies strictly inside the detector surface.
    pub fn check_inside(&self, radius: f64) -> Result<()> {
        let s = self.support_radius();
        if s >= radius {
            return Err(Error::Geometry(format!(
                "phantom support radius {s:.4} is not inside the detector radius {radius}"
            )));
        }
        Ok(())
    }

    /// Evaluate `f(x)`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dimension, "point dimension does not match phantom");
        self.primitives.iter().map(|p| p.eval(x)).sum()
    }

    pub fn mass(&self) -> f64 {
        self.primitives.iter().map(|p| p.mass(self.dimension)).sum()
    }

    /// Phantom with every amplitude multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for p in &mut out.primitives {
            p.amplitude *= c;
        }
        out
    }

    /// Line integral of a 3D phantom along the line `h1 N(alpha) + h2 e2 + s D(alpha)`.
    pub fn xray_projection(&self, alpha: f64, h: [f64; 2]) -> f64 {
        assert_eq!(self.dimension, 3, "x-ray projection needs a 3D phantom");
        self.primitives
            .iter()
            .map(|p| {
                let rho2 = projected_distance_sq(&p.center, alpha, h);
                match p.kind {
                    PrimitiveKind::Gaussian => {
                        p.amplitude * p.size * (2.0 * PI).sqrt() * (-rho2 / (2.0 * p.size * p.size)).exp()
                    }
                    _ => {
                        let a2 = p.size * p.size;
                        if rho2 < a2 {
                            2.0 * p.amplitude * (a2 - rho2).sqrt()
                        } else {
                            0.0
                        }
                    }
                }
            })
            .sum()
    }

    /// Parse the JSON phantom description.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PhantomDoc = serde_json::from_str(text).map_err(|e| Error::Phantom(e.to_string()))?;
        let mut prims = Vec::with_capacity(doc.primitives.len());
        for (i, p) in doc.primitives.into_iter().enumerate() {
            let size = match (p.kind, p.radius, p.sigma) {
                (PrimitiveKind::Gaussian, None, Some(s)) => s,
                (PrimitiveKind::Disk | PrimitiveKind::Ball, Some(r), None) => r,
                (PrimitiveKind::Gaussian, _, _) => {
                    return Err(Error::Phantom(format!("primitive {i}: gaussian needs exactly `sigma`")))
                }
                _ => return Err(Error::Phantom(format!("primitive {i}: disk/ball needs exactly `radius`"))),
            };
            prims.push(Primitive { kind: p.kind, center: p.center, size, amplitude: p.amplitude });
        }
        Self::new(doc.dimension, prims)
    }

    pub fn to_json(&self) -> String {
        let doc = PhantomDoc {
            dimension: self.dimension,
            primitives: self
                .primitives
                .iter()
                .map(|p| {
                    let gauss = p.kind == PrimitiveKind::Gaussian;
                    PrimitiveDoc {
                        kind: p.kind,
                        center: p.center.clone(),
                        radius: (!gauss).then_some(p.size),
                        sigma: gauss.then_some(p.size),
                        amplitude: p.amplitude,
                    }
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("phantom serialises")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Squared distance between `center` and the line through `h1 N + h2 e2`
/// with direction `D(alpha)`.
fn projected_distance_sq(center: &[f64], alpha: f64, h: [f64; 2]) -> f64 {
    let n = normal(alpha);
    let c1 = center[0] * n[0] + center[1] * n[1] + center[2] * n[2];
    let c2 = center[1];
    (c1 - h[0]).powi(2) + (c2 - h[1]).powi(2)
}

/// Line-detector axis direction `D(alpha) = (cos a, 0, sin a)`.
pub fn direction(alpha: f64) -> [f64; 3] {
    [alpha.cos(), 0.0, alpha.sin()]
}

/// In-plane normal `N(alpha) = (-sin a, 0, cos a)`.
pub fn normal(alpha: f64) -> [f64; 3] {
    [-alpha.sin(), 0.0, alpha.cos()]
}

/// Uniform sampling `t_i = i dt`, `i = 0..nt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub nt: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, nt: usize) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        if nt < 2 {
            return Err(Error::Config(format!("need at least 2 time samples, got {nt}")));
        }
        Ok(Self { dt, nt })
    }

    #[inline]
    pub fn t(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn t_max(&self) -> f64 {
        (self.nt - 1) as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.nt).map(|i| self.t(i)).collect()
    }
}

/// Point detectors equispaced on a circle, `phi_j = 2 pi j / count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorRing {
    pub radius: f64,
    pub count: usize,
}

impl DetectorRing {
    pub fn new(radius: f64, count: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Config(format!("radius must be positive, got {radius}")));
        }
        if count < 2 {
            return Err(Error::Config("a ring needs at least 2 detectors".into()));
        }
        Ok(Self { radius, count })
    }

    pub fn angle(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.count as f64
    }

    pub fn position(&self, j: usize) -> [f64; 2] {
        let a = self.angle(j);
        [self.radius * a.cos(), self.radius * a.sin()]
    }

    /// Largest angular order the ring resolves.
    pub fn max_order(&self) -> usize {
        self.count / 2
    }
}

/// Point detectors on a sphere: Gauss-Legendre nodes in `cos theta` times
/// equispaced azimuths. Detector `i * n_phi + j` sits at `(theta_i, phi_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSphere {
    pub radius: f64,
    pub n_theta: usize,
    pub n_phi: usize,
    cos_theta: Vec<f64>,
    weights: Vec<f64>,
}

impl DetectorSphere {
    pub fn new(radius: f64, n_theta: usize, n_phi: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Config(format!("radius must be positive, got {radius}")));
        }
        if n_theta < 1 || n_phi < 1 {
            return Err(Error::Config("sphere grid must be non-empty".into()));
        }
        let (cos_theta, weights) = gauss_legendre(n_theta);
        Ok(Self { radius, n_theta, n_phi, cos_theta, weights })
    }

    /// Default layout with `n_phi = 2 n_theta`.
    pub fn with_theta(radius: f64, n_theta: usize) -> Result<Self> {
        Self::new(radius, n_theta, 2 * n_theta)
    }

    /// Recover the default layout from a detector count `2 n_theta^2`.
    pub fn from_count(radius: f64, count: usize) -> Result<Self> {
        let n = ((count / 2) as f64).sqrt().round() as usize;
        if n == 0 || 2 * n * n != count {
            return Err(Error::Geometry(format!(
                "sphere detector count {count} is not of the form 2 n_theta^2"
            )));
        }
        Self::with_theta(radius, n)
    }

    pub fn count(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn cos_theta(&self) -> &[f64] {
        &self.cos_theta
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn phi(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_phi as f64
    }

    /// Largest spherical-harmonic degree the grid resolves exactly.
    pub fn max_degree(&self) -> usize {
        (self.n_theta - 1).min(self.n_phi.saturating_sub(1) / 2)
    }

    pub fn position(&self, index: usize) -> [f64; 3] {
        let (i, j) = (index / self.n_phi, index % self.n_phi);
        let ct = self.cos_theta[i];
        let st = (1.0 - ct * ct).max(0.0).sqrt();
        let p = self.phi(j);
        [self.radius * st * p.cos(), self.radius * st * p.sin(), self.radius * ct]
    }
}

/// Integrating line detectors on a cylinder rotated about `e2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineDetectorGeometry {
    pub radius: f64,
    pub alphas: Vec<f64>,
    pub n_beta: usize,
}

impl LineDetectorGeometry {
    pub fn new(radius: f64, alphas: Vec<f64>, n_beta: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Config(format!("radius must be positive, got {radius}")));
        }
        if n_beta < 2 {
            return Err(Error::Config("need at least 2 detectors per ring".into()));
        }
        if alphas.is_empty() || alphas.iter().any(|a| !(0.0..PI).contains(a)) {
            return Err(Error::Config("rotation angles must lie in [0, pi)".into()));
        }
        if alphas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("rotation angles must be strictly increasing".into()));
        }
        Ok(Self { radius, alphas, n_beta })
    }

    /// `n_alpha` equispaced angles `k pi / n_alpha`.
    pub fn uniform(radius: f64, n_alpha: usize, n_beta: usize) -> Result<Self> {
        Self::new(radius, (0..n_alpha).map(|k| PI * k as f64 / n_alpha as f64).collect(), n_beta)
    }

    pub fn beta(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_beta as f64
    }

    /// Anchor point `R cos(beta) e2 + R sin(beta) N(alpha)`.
    pub fn anchor(&self, alpha: f64, beta: f64) -> [f64; 3] {
        let n = normal(alpha);
        let (s, c) = beta.sin_cos();
        [self.radius * s * n[0], self.radius * c, self.radius * s * n[2]]
    }

    /// Detector position in the `(N, e2)` plane coordinates.
    pub fn plane_position(&self, j: usize) -> [f64; 2] {
        let b = self.beta(j);
        [self.radius * b.sin(), self.radius * b.cos()]
    }
}

/// Which detector layout produced a series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeometryTag {
    Ring,
    Sphere,
    LineSlice { alpha: f64 },
    /// Boundary nodes of the square `[-R, R]^2` used by time reversal.
    Square,
}

/// Detector-indexed time series `P(y_j, t_i)`, row-major `[detector][time]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesData {
    pub geometry: GeometryTag,
    pub radius: f64,
    pub count: usize,
    pub time: TimeGrid,
    pub values: Vec<f64>,
}

impl SeriesData {
    pub fn new(geometry: GeometryTag, radius: f64, count: usize, time: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != count * time.nt {
            return Err(Error::Geometry(format!(
                "series has {} samples, expected {count} x {}",
                values.len(),
                time.nt
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("series contains non-finite samples".into()));
        }
        Ok(Self { geometry, radius, count, time, values })
    }

    pub fn zeros(geometry: GeometryTag, radius: f64, count: usize, time: TimeGrid) -> Self {
        Self { geometry, radius, count, time, values: vec![0.0; count * time.nt] }
    }

    /// Copy of the header with an empty payload.
    pub fn clone_header(&self) -> Self {
        Self { geometry: self.geometry, radius: self.radius, count: self.count, time: self.time, values: Vec::new() }
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.time.nt..(j + 1) * self.time.nt]
    }

    pub fn row_mut(&mut self, j: usize) -> &mut [f64] {
        let nt = self.time.nt;
        &mut self.values[j * nt..(j + 1) * nt]
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Node-centred samples on `[-L, L]^dim`, `n` nodes per axis.
///
/// 2D index `i * n + j` is the node `(x_i, y_j)`; 3D index `(i * n + j) * n + k`
/// is `(x_i, y_j, z_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub dim: usize,
    pub n: usize,
    pub extent: f64,
    pub values: Vec<f64>,
}

impl Image {
    pub fn zeros(dim: usize, n: usize, extent: f64) -> Self {
        Self { dim, n, extent, values: vec![0.0; n.pow(dim as u32)] }
    }

    pub fn new(dim: usize, n: usize, extent: f64, values: Vec<f64>) -> Result<Self> {
        validate_grid(dim, n, extent)?;
        if values.len() != n.pow(dim as u32) {
            return Err(Error::Geometry(format!("image payload has {} values, expected {n}^{dim}", values.len())));
        }
        Ok(Self { dim, n, extent, values })
    }

    /// Sample a phantom on the grid.
    pub fn from_phantom(phantom: &Phantom, n: usize, extent: f64) -> Self {
        let dim = phantom.dimension();
        let mut img = Self::zeros(dim, n, extent);
        let mut x = vec![0.0; dim];
        for idx in 0..img.values.len() {
            img.node(idx, &mut x);
            img.values[idx] = phantom.eval(&x);
        }
        img
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / (self.n - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.extent + i as f64 * self.spacing()
    }

    /// Physical coordinates of linear index `idx`.
    pub fn node(&self, idx: usize, out: &mut [f64]) {
        let mut rem = idx;
        for axis in (0..self.dim).rev() {
            out[axis] = self.coord(rem % self.n);
            rem /= self.n;
        }
    }
}

/// Image grid parameters: `n` nodes per axis over `[-extent, extent]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageSpec {
    pub n: usize,
    pub extent: f64,
}

impl ImageSpec {
    pub fn new(n: usize, extent: f64) -> Result<Self> {
        validate_grid(2, n, extent)?;
        Ok(Self { n, extent })
    }
}

pub(crate) fn validate_grid(dim: usize, n: usize, extent: f64) -> Result<()> {
    if dim != 2 && dim != 3 {
        return Err(Error::Config(format!("image dimension must be 2 or 3, got {dim}")));
    }
    if n < 2 {
        return Err(Error::Config(format!("image needs at least 2 nodes per axis, got {n}")));
    }
    if !(extent.is_finite() && extent > 0.0) {
        return Err(Error::Config(format!("image extent must be positive, got {extent}")));
    }
    Ok(())
}

/// Three Gaussian blobs inside the unit disk.
pub fn standard_phantom_2d() -> Phantom {
    Phantom::new(
        2,
        vec![
            Primitive::gaussian(&[-0.35, 0.2], 0.06, 1.0),
            Primitive::gaussian(&[0.3, 0.35], 0.08, 0.7),
            Primitive::gaussian(&[0.1, -0.4], 0.1, 0.5),
        ],
    )
    .expect("valid phantom")
}

/// Single Gaussian ball, sigma 0.1, centred at (0.3, 0, 0).
pub fn standard_phantom_3d() -> Phantom {
    Phantom::new(3, vec![Primitive::gaussian(&[0.3, 0.0, 0.0], 0.1, 1.0)]).expect("valid phantom")
}

/// Single Gaussian ball, sigma 0.1, centred at (-0.25, -0.25, -0.25).
pub fn standard_phantom_linedet() -> Phantom {
    Phantom::new(3, vec![Primitive::gaussian(&[-0.25, -0.25, -0.25], 0.1, 1.0)]).expect("valid phantom")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_disk() -> Phantom {
        Phantom::new(2, vec![Primitive::disk([0.0, 0.0], 0.3, 1.0)]).unwrap()
    }

    #[test]
    fn disk_evaluation() {
        let p = unit_disk();
        assert_eq!(p.eval(&[0.1, 0.0]), 1.0);
        assert_eq!(p.eval(&[0.5, 0.0]), 0.0);
        let two = Phantom::new(2, vec![Primitive::disk([0.0, 0.0], 0.3, 1.0), Primitive::disk([0.1, 0.0], 0.3, 1.0)]).unwrap();
        assert_eq!(two.eval(&[0.05, 0.0]), 2.0);
    }

    #[test]
    fn ball_projection_examples() {
        let p = Phantom::new(3, vec![Primitive::ball([0.0; 3], 0.2, 1.0)]).unwrap();
        assert!((p.xray_projection(0.0, [0.0, 0.0]) - 0.4).abs() < 1e-15);
        assert_eq!(p.xray_projection(0.0, [0.3, 0.0]), 0.0);
        // Midpoint-rule line integral along D(0) = e1.
        let n = 200_000;
        let ds = 0.6 / n as f64;
        let oracle: f64 = (0..n).map(|i| p.eval(&[-0.3 + (i as f64 + 0.5) * ds, 0.1, 0.1]) * ds).sum();
        let got = p.xray_projection(0.0, [0.1, 0.1]);
        assert!((got - 0.282_842_712_474_619).abs() < 1e-12);
        assert!((got - oracle).abs() < 1e-5);
    }

    #[test]
    fn projection_of_gaussian_conserves_mass() {
        let p = Phantom::new(3, vec![Primitive::gaussian(&[0.2, -0.1, 0.15], 0.1, 1.3)]).unwrap();
        for &alpha in &[0.0, 0.7, 2.5] {
            let n = 161;
            let h = 1.6 / (n - 1) as f64;
            let mut total = 0.0;
            for i in 0..n {
                for j in 0..n {
                    total += p.xray_projection(alpha, [-0.8 + i as f64 * h, -0.8 + j as f64 * h]) * h * h;
                }
            }
            assert!((total - p.mass()).abs() < 1e-6 * p.mass(), "alpha={alpha}");
        }
    }

    #[test]
    fn json_round_trip_and_validation() {
        let p = standard_phantom_2d();
        assert_eq!(Phantom::from_json(&p.to_json()).unwrap(), p);
        let bad_kind = r#"{"dimension":2,"primitives":[{"kind":"square","center":[0,0],"radius":0.1,"amplitude":1}]}"#;
        assert!(matches!(Phantom::from_json(bad_kind), Err(Error::Phantom(_))));
        let unknown_field = r#"{"dimension":2,"primitives":[{"kind":"disk","center":[0,0],"radius":0.1,"amplitude":1,"x":2}]}"#;
        assert!(Phantom::from_json(unknown_field).is_err());
        let both = r#"{"dimension":2,"primitives":[{"kind":"gaussian","center":[0,0],"radius":0.1,"sigma":0.1,"amplitude":1}]}"#;
        assert!(Phantom::from_json(both).is_err());
        let wrong_dim = r#"{"dimension":3,"primitives":[{"kind":"ball","center":[0,0],"radius":0.1,"amplitude":1}]}"#;
        assert!(Phantom::from_json(wrong_dim).is_err());
    }

    #[test]
    fn support_radius_and_geometry_check() {
        let p = standard_phantom_2d();
        assert!(p.support_radius() < 1.0);
        assert!(p.check_inside(1.05).is_ok());
        assert!(unit_disk().check_inside(0.3).is_err());
    }

    #[test]
    fn line_detector_frame() {
        let g = LineDetectorGeometry::uniform(1.05, 4, 8).unwrap();
        for &a in &g.alphas {
            let (d, n) = (direction(a), normal(a));
            let dot: f64 = d.iter().zip(&n).map(|(x, y)| x * y).sum();
            assert!(dot.abs() < 1e-15);
            let anchor = g.anchor(a, 0.3);
            let r: f64 = anchor.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((r - 1.05).abs() < 1e-14);
        }
        assert!(LineDetectorGeometry::new(1.0, vec![0.5, 0.2], 4).is_err());
        assert!(LineDetectorGeometry::new(1.0, vec![PI], 4).is_err());
    }

    #[test]
    fn sphere_layout() {
        let s = DetectorSphere::with_theta(1.0, 5).unwrap();
        assert_eq!(s.count(), 50);
        assert_eq!(DetectorSphere::from_count(1.0, 50).unwrap(), s);
        assert!(DetectorSphere::from_count(1.0, 51).is_err());
        let w: f64 = s.weights().iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn image_nodes() {
        let img = Image::zeros(3, 5, 1.0);
        let mut x = [0.0; 3];
        img.node((2 * 5 + 4) * 5 + 0, &mut x);
        assert_eq!(x, [0.0, 1.0, -1.0]);
        assert!(Image::new(2, 3, 1.0, vec![0.0; 8]).is_err());
    }
}
