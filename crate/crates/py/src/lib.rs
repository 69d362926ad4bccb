//! Python bindings: phantoms, detector data, images, simulation, the four
//! reconstruction pipelines and file I/O. Arrays cross the boundary as flat
//! lists of floats or as the binary file encodings.

use std::path::{Path, PathBuf};

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use tatrecon::forward::{add_noise, forward_2d, forward_3d, forward_linedet, NoiseSpec};
use tatrecon::io;
use tatrecon::linedet::{reconstruct_linedet as linedet_pipeline, LinedetConfig};
use tatrecon::metrics;
use tatrecon::model::{self, DetectorRing, DetectorSphere, GeometryTag, LineDetectorGeometry, TimeGrid};
use tatrecon::recon2d::{reconstruct_2d as recon2d_pipeline, Recon2dConfig};
use tatrecon::recon3d::{reconstruct_3d as recon3d_pipeline, Recon3dConfig};
use tatrecon::timereversal::{forward_square_boundary, time_reverse_2d, SquareBoundaryData, SquareSpec};
use tatrecon::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        e if e.is_validation() => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for tatrecon::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// Initial-pressure phantom built from disks, balls and Gaussians.
#[pyclass(name = "Phantom", module = "tatrecon_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPhantom(model::Phantom);

#[pymethods]
impl PyPhantom {
    /// Parse the phantom JSON format.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        model::Phantom::from_json(text).py().map(Self)
    }

    /// Built-in phantoms: `standard2d`, `standard3d` or `standard-linedet`.
    #[staticmethod]
    fn standard(name: &str) -> PyResult<Self> {
        match name {
            "standard2d" => Ok(Self(model::standard_phantom_2d())),
            "standard3d" => Ok(Self(model::standard_phantom_3d())),
            "standard-linedet" => Ok(Self(model::standard_phantom_linedet())),
            other => Err(PyValueError::new_err(format!("unknown standard phantom '{other}'"))),
        }
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.0.dimension()
    }

    /// Integral of the phantom over space.
    fn mass(&self) -> f64 {
        self.0.mass()
    }

    fn support_radius(&self) -> f64 {
        self.0.support_radius()
    }

    /// Point value at a 2D or 3D position.
    fn eval(&self, x: Vec<f64>) -> PyResult<f64> {
        if x.len() != self.0.dimension() {
            return Err(PyValueError::new_err(format!("expected {} coordinates", self.0.dimension())));
        }
        Ok(self.0.eval(&x))
    }

    /// Node samples on `[-extent, extent]^dim` with `n` nodes per axis.
    fn render(&self, n: usize, extent: f64) -> PyResult<PyImage> {
        model::ImageSpec::new(n, extent).py()?;
        Ok(PyImage(model::Image::from_phantom(&self.0, n, extent)))
    }

    fn __repr__(&self) -> String {
        format!("Phantom(dimension={}, primitives={})", self.0.dimension(), self.0.primitives().len())
    }
}

/// Detector time series, row-major `[detector][time]`.
#[pyclass(name = "SeriesData", module = "tatrecon_py", frozen, from_py_object)]
#[derive(Clone)]
struct PySeriesData(model::SeriesData);

#[pymethods]
impl PySeriesData {
    /// `ring`, `sphere`, `line-slice` or `square`.
    #[getter]
    fn geometry(&self) -> &'static str {
        match self.0.geometry {
            GeometryTag::Ring => "ring",
            GeometryTag::Sphere => "sphere",
            GeometryTag::LineSlice { .. } => "line-slice",
            GeometryTag::Square => "square",
        }
    }

    /// Rotation angle of a line-detector slice.
    #[getter]
    fn alpha(&self) -> Option<f64> {
        match self.0.geometry {
            GeometryTag::LineSlice { alpha } => Some(alpha),
            _ => None,
        }
    }

    #[getter]
    fn radius(&self) -> f64 {
        self.0.radius
    }

    #[getter]
    fn count(&self) -> usize {
        self.0.count
    }

    #[getter]
    fn nt(&self) -> usize {
        self.0.time.nt
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.0.time.dt
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values.clone()
    }

    fn row(&self, j: usize) -> PyResult<Vec<f64>> {
        if j >= self.0.count {
            return Err(PyValueError::new_err(format!("detector {j} out of range")));
        }
        Ok(self.0.row(j).to_vec())
    }

    fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// Copy with Gaussian noise of relative L2 size `level`.
    fn with_noise(&self, level: f64, seed: u64) -> PyResult<Self> {
        add_noise(&self.0, &NoiseSpec { level, seed }).py().map(Self)
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &io::encode_series(&self.0))
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        io::decode_series(data, Path::new("<bytes>")).py().map(Self)
    }

    fn __repr__(&self) -> String {
        format!("SeriesData(geometry={}, count={}, nt={})", self.geometry(), self.0.count, self.0.time.nt)
    }
}

/// Node-centred samples on `[-extent, extent]^dim`.
#[pyclass(name = "Image", module = "tatrecon_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyImage(model::Image);

#[pymethods]
impl PyImage {
    #[new]
    fn new(dim: usize, n: usize, extent: f64, values: Vec<f64>) -> PyResult<Self> {
        model::Image::new(dim, n, extent, values).py().map(Self)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }

    #[getter]
    fn extent(&self) -> f64 {
        self.0.extent
    }

    /// Flat values; 2D index `i * n + j` is `(x_i, y_j)`.
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values.clone()
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &io::encode_image(&self.0))
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        io::decode_image(data, Path::new("<bytes>")).py().map(Self)
    }

    /// Write an 8-bit PGM (per z-slice in 3D) and its JSON sidecar.
    fn write_pgm(&self, path: PathBuf) -> PyResult<()> {
        io::write_pgm(&self.0, &path).py().map(drop)
    }

    fn __repr__(&self) -> String {
        format!("Image(dim={}, n={}, extent={})", self.0.dim, self.0.n, self.0.extent)
    }
}

/// Reconstructed image with diagnostics.
#[pyclass(name = "Reconstruction", module = "tatrecon_py", frozen, get_all)]
struct PyReconstruction {
    image: PyImage,
    /// `|Im f| / |Re f|` of the complex inverse transform.
    imag_ratio: f64,
    /// Zero-frequency value used.
    dc: f64,
}

impl From<tatrecon::recon2d::Reconstruction> for PyReconstruction {
    fn from(r: tatrecon::recon2d::Reconstruction) -> Self {
        Self { image: PyImage(r.image), imag_ratio: r.imag_ratio, dc: r.dc }
    }
}

/// Simulate noiseless or noisy detector data.
///
/// `geometry` is `ring` (`detectors` points), `sphere` (`detectors` polar
/// nodes), or `square` (`detectors` nodes per side, `radius` the half-width).
#[pyfunction]
#[pyo3(signature = (phantom, geometry, detectors, radius, nt, dt, noise = 0.0, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    phantom: &PyPhantom,
    geometry: &str,
    detectors: usize,
    radius: f64,
    nt: usize,
    dt: f64,
    noise: f64,
    seed: u64,
) -> PyResult<PySeriesData> {
    let phantom = &phantom.0;
    let data = py.detach(|| {
        let time = TimeGrid::new(dt, nt)?;
        let data = match geometry {
            "ring" => forward_2d(phantom, &DetectorRing::new(radius, detectors)?, &time)?,
            "sphere" => forward_3d(phantom, &DetectorSphere::with_theta(radius, detectors)?, &time)?,
            "square" => forward_square_boundary(phantom, &SquareSpec::new(detectors, radius)?, &time)?.to_series(),
            other => return Err(Error::Config(format!("unknown geometry '{other}'"))),
        };
        add_noise(&data, &NoiseSpec { level: noise, seed })
    });
    data.py().map(PySeriesData)
}

/// Simulate a line-detector scan over `n_alpha` uniform rotation angles;
/// slice `k` uses noise seed `seed + k`.
#[pyfunction]
#[pyo3(signature = (phantom, n_alpha, n_beta, radius, nt, dt, noise = 0.0, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn simulate_linedet(
    py: Python<'_>,
    phantom: &PyPhantom,
    n_alpha: usize,
    n_beta: usize,
    radius: f64,
    nt: usize,
    dt: f64,
    noise: f64,
    seed: u64,
) -> PyResult<Vec<PySeriesData>> {
    let phantom = &phantom.0;
    let scan = py.detach(|| {
        let geom = LineDetectorGeometry::uniform(radius, n_alpha, n_beta)?;
        forward_linedet(phantom, &geom, &TimeGrid::new(dt, nt)?)?
            .iter()
            .enumerate()
            .map(|(k, s)| add_noise(s, &NoiseSpec { level: noise, seed: seed.wrapping_add(k as u64) }))
            .collect::<tatrecon::Result<Vec<_>>>()
    });
    Ok(scan.py()?.into_iter().map(PySeriesData).collect())
}

/// Fourier reconstruction from ring data.
#[pyfunction]
#[pyo3(signature = (data, n, extent = None))]
fn reconstruct_2d(py: Python<'_>, data: &PySeriesData, n: usize, extent: Option<f64>) -> PyResult<PyReconstruction> {
    let data = &data.0;
    let rec = py.detach(|| {
        let ring = DetectorRing::new(data.radius, data.count)?;
        recon2d_pipeline(data, &ring, &Recon2dConfig { extent, ..Recon2dConfig::new(n) })
    });
    rec.py().map(Into::into)
}

/// Spherical-harmonic reconstruction from sphere data.
#[pyfunction]
#[pyo3(signature = (data, n, extent = None, max_degree = None))]
fn reconstruct_3d(
    py: Python<'_>,
    data: &PySeriesData,
    n: usize,
    extent: Option<f64>,
    max_degree: Option<usize>,
) -> PyResult<PyReconstruction> {
    let data = &data.0;
    let rec = py.detach(|| {
        let sphere = DetectorSphere::from_count(data.radius, data.count)?;
        recon3d_pipeline(data, &sphere, &Recon3dConfig { extent, max_degree, ..Recon3dConfig::new(n) })
    });
    rec.py().map(Into::into)
}

fn scan_geometry(scan: &[model::SeriesData]) -> tatrecon::Result<LineDetectorGeometry> {
    let first = scan.first().ok_or_else(|| Error::Geometry("empty scan".into()))?;
    let alphas = scan
        .iter()
        .map(|s| match s.geometry {
            GeometryTag::LineSlice { alpha } => Ok(alpha),
            _ => Err(Error::Geometry("expected line-slice data".into())),
        })
        .collect::<tatrecon::Result<Vec<_>>>()?;
    LineDetectorGeometry::new(first.radius, alphas, first.count)
}

/// Line-detector reconstruction from a full scan.
#[pyfunction]
#[pyo3(signature = (scan, n, extent = None))]
fn reconstruct_linedet(
    py: Python<'_>,
    scan: Vec<PySeriesData>,
    n: usize,
    extent: Option<f64>,
) -> PyResult<PyReconstruction> {
    let scan: Vec<model::SeriesData> = scan.into_iter().map(|s| s.0).collect();
    let rec = py.detach(|| {
        let geom = scan_geometry(&scan)?;
        linedet_pipeline(&scan, &geom, &LinedetConfig { extent, ..LinedetConfig::new(n) })
    });
    rec.py().map(Into::into)
}

/// Time-reversal reconstruction from square boundary data.
#[pyfunction]
fn time_reverse(py: Python<'_>, data: &PySeriesData, n: usize) -> PyResult<PyImage> {
    let data = &data.0;
    let img = py.detach(|| time_reverse_2d(&SquareBoundaryData::from_series(data)?, n));
    img.py().map(PyImage)
}

/// Relative L2 error of `a` against `b` inside `|x| <= mask_radius`.
#[pyfunction]
#[pyo3(signature = (a, b, mask_radius = 0.9))]
fn rel_l2_error(a: &PyImage, b: &PyImage, mask_radius: f64) -> PyResult<f64> {
    metrics::rel_l2_error(&a.0, &b.0, mask_radius).py()
}

#[pyfunction]
fn read_series(path: PathBuf) -> PyResult<PySeriesData> {
    io::read_series(&path).py().map(PySeriesData)
}

#[pyfunction]
fn write_series(path: PathBuf, data: &PySeriesData) -> PyResult<()> {
    io::write_series(&path, &data.0).py()
}

#[pyfunction]
fn read_image(path: PathBuf) -> PyResult<PyImage> {
    io::read_image(&path).py().map(PyImage)
}

#[pyfunction]
fn write_image(path: PathBuf, image: &PyImage) -> PyResult<()> {
    io::write_image(&path, &image.0).py()
}

/// Read a line-detector scan manifest and its slices.
#[pyfunction]
fn read_linedet_scan(path: PathBuf) -> PyResult<Vec<PySeriesData>> {
    Ok(io::read_linedet_scan(&path).py()?.0.into_iter().map(PySeriesData).collect())
}

/// Write a scan manifest and one series file per slice.
#[pyfunction]
fn write_linedet_scan(path: PathBuf, scan: Vec<PySeriesData>) -> PyResult<()> {
    let scan: Vec<model::SeriesData> = scan.into_iter().map(|s| s.0).collect();
    io::write_linedet_scan(&path, &scan).py().map(drop)
}

#[pymodule]
fn tatrecon_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPhantom>()?;
    m.add_class::<PySeriesData>()?;
    m.add_class::<PyImage>()?;
    m.add_class::<PyReconstruction>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_linedet, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct_2d, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct_3d, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct_linedet, m)?)?;
    m.add_function(wrap_pyfunction!(time_reverse, m)?)?;
    m.add_function(wrap_pyfunction!(rel_l2_error, m)?)?;
    m.add_function(wrap_pyfunction!(read_series, m)?)?;
    m.add_function(wrap_pyfunction!(write_series, m)?)?;
    m.add_function(wrap_pyfunction!(read_image, m)?)?;
    m.add_function(wrap_pyfunction!(write_image, m)?)?;
    m.add_function(wrap_pyfunction!(read_linedet_scan, m)?)?;
    m.add_function(wrap_pyfunction!(write_linedet_scan, m)?)?;
    Ok(())
}
