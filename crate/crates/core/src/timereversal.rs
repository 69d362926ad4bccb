//! Reference 2D reconstruction by time reversal in a square.
//!
//! The wave equation is solved backwards from `t = T` (with `u = u_t = 0`)
//! to `t = 0` by the explicit leapfrog scheme on the square `[-L, L]^2`,
//! imposing the recorded pressure as Dirichlet data on the boundary at every
//! time level. The interior field at `t = 0` is the image.

use rayon::prelude::*;

use crate::forward::{apply_taper, pressure_2d_points, ForwardOptions};
use crate::model::{GeometryTag, Image, Phantom, SeriesData, TimeGrid};
use crate::{Error, Result};

/// Square `[-L, L]^2` sampled by `n × n` nodes `x_i = -L + i h`, `h = 2L/(n-1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareSpec {
    pub n: usize,
    pub half_width: f64,
}

impl SquareSpec {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::Config(format!("square grid needs at least 3 nodes per side, got {n}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Config(format!("square half-width must be positive, got {half_width}")));
        }
        Ok(Self { n, half_width })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    pub fn boundary_len(&self) -> usize {
        4 * self.n - 4
    }

    /// Grid indices `(i, j)` of boundary node `k`: the bottom side `j = 0`,
    /// then the top side `j = n - 1` (both with all `i`), then the left and
    /// right sides without corners.
    pub fn boundary_node(&self, k: usize) -> (usize, usize) {
        let n = self.n;
        match k {
            _ if k < n => (k, 0),
            _ if k < 2 * n => (k - n, n - 1),
            _ if k < 3 * n - 2 => (0, k - 2 * n + 1),
            _ => (n - 1, k - (3 * n - 2) + 1),
        }
    }

    pub fn boundary_points(&self) -> Vec<[f64; 2]> {
        (0..self.boundary_len())
            .map(|k| {
                let (i, j) = self.boundary_node(k);
                [self.coord(i), self.coord(j)]
            })
            .collect()
    }
}

/// Pressure on the square's boundary nodes, row-major `[node][time]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareBoundaryData {
    pub square: SquareSpec,
    pub time: TimeGrid,
    pub values: Vec<f64>,
}

impl SquareBoundaryData {
    pub fn new(square: SquareSpec, time: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != square.boundary_len() * time.nt {
            return Err(Error::Config(format!(
                "expected {} boundary samples, got {}",
                square.boundary_len() * time.nt,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("boundary data contain non-finite samples".into()));
        }
        Ok(Self { square, time, values })
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.time.nt..(k + 1) * self.time.nt]
    }

    /// Series with the square tag, `R = L` and `4n - 4` detectors.
    pub fn to_series(&self) -> SeriesData {
        SeriesData {
            geometry: GeometryTag::Square,
            radius: self.square.half_width,
            count: self.square.boundary_len(),
            time: self.time,
            values: self.values.clone(),
        }
    }

    pub fn from_series(data: &SeriesData) -> Result<Self> {
        if data.geometry != GeometryTag::Square {
            return Err(Error::Geometry(format!("expected square boundary data, got {:?}", data.geometry)));
        }
        if data.count < 8 || data.count % 4 != 0 {
            return Err(Error::Geometry(format!(
                "square boundary count {} is not of the form 4n - 4 with n >= 3",
                data.count
            )));
        }
        let square = SquareSpec::new(data.count / 4 + 1, data.radius)?;
        Self::new(square, data.time, data.values.clone())
    }
}

pub fn forward_square_boundary(phantom: &Phantom, square: &SquareSpec, time: &TimeGrid) -> Result<SquareBoundaryData> {
    forward_square_boundary_with(phantom, square, time, ForwardOptions::default())
}

/// Boundary traces from the same Poisson-formula propagation as the ring data.
pub fn forward_square_boundary_with(
    phantom: &Phantom,
    square: &SquareSpec,
    time: &TimeGrid,
    opts: ForwardOptions,
) -> Result<SquareBoundaryData> {
    if phantom.dimension() != 2 {
        return Err(Error::Phantom(format!("expected a 2D phantom, got {}D", phantom.dimension())));
    }
    let s = phantom.support_radius();
    if s >= square.half_width {
        return Err(Error::Geometry(format!(
            "phantom support radius {s:.4} is not inside the square of half-width {}",
            square.half_width
        )));
    }
    let mut values = pressure_2d_points(phantom, &square.boundary_points(), time);
    if opts.taper {
        apply_taper(&mut values, time.nt);
    }
    SquareBoundaryData::new(*square, *time, values)
}

/// Explicit second-order scheme `u^{m±1} = 2u^m - u^{m∓1} + Δt² Δ_h u^m` on
/// an `n × n` grid with Dirichlet boundary values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leapfrog {
    pub n: usize,
    pub dx: f64,
    pub dt: f64,
}

impl Leapfrog {
    pub fn new(n: usize, dx: f64, dt: f64) -> Result<Self> {
        if dt > dx / 2f64.sqrt() * (1.0 + 1e-12) {
            return Err(Error::Config(format!("CFL violated: dt = {dt} > dx/sqrt(2) = {}", dx / 2f64.sqrt())));
        }
        Ok(Self { n, dx, dt })
    }

    /// `out = 2 cur - prev + Δt² Δ_h cur` at interior nodes; boundary nodes
    /// of `out` are left untouched.
    pub fn step(&self, prev: &[f64], cur: &[f64], out: &mut [f64]) {
        let n = self.n;
        let c = (self.dt / self.dx).powi(2);
        out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            if i == 0 || i == n - 1 {
                return;
            }
            for j in 1..n - 1 {
                let k = i * n + j;
                let lap = cur[k - n] + cur[k + n] + cur[k - 1] + cur[k + 1] - 4.0 * cur[k];
                row[j] = 2.0 * cur[k] - prev[k] + c * lap;
            }
        });
    }

    /// `⟨a, Δ_h b⟩` over interior nodes (with `b`'s boundary values).
    fn laplacian_pairing(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                let k = i * n + j;
                acc += a[k] * (b[k - n] + b[k + n] + b[k - 1] + b[k + 1] - 4.0 * b[k]);
            }
        }
        acc / (self.dx * self.dx)
    }

    /// Discrete energy `½‖(u^{m+1} - u^m)/Δt‖² - ½⟨Δ_h u^{m+1}, u^m⟩` (times
    /// the cell area), conserved exactly when the boundary values vanish.
    pub fn energy(&self, next: &[f64], cur: &[f64]) -> f64 {
        let n = self.n;
        let mut kinetic = 0.0;
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                let k = i * n + j;
                kinetic += ((next[k] - cur[k]) / self.dt).powi(2);
            }
        }
        0.5 * self.dx * self.dx * (kinetic - self.laplacian_pairing(cur, next))
    }
}

/// Boundary series resampled onto `m + 1` levels `t = k T / m` by linear
/// interpolation, row-major `[node][level]`.
fn resample(data: &SquareBoundaryData, levels: usize) -> Vec<f64> {
    let nt = data.time.nt;
    let t_max = data.time.t_max();
    let mut out = vec![0.0; data.square.boundary_len() * levels];
    out.par_chunks_mut(levels).enumerate().for_each(|(k, row)| {
        let src = data.row(k);
        for (l, v) in row.iter_mut().enumerate() {
            let u = (t_max * l as f64 / (levels - 1) as f64 / data.time.dt).min((nt - 1) as f64);
            let i = (u.floor() as usize).min(nt - 2);
            let w = u - i as f64;
            *v = (1.0 - w) * src[i] + w * src[i + 1];
        }
    });
    out
}

/// Time step used for a record: the data step if it satisfies CFL, otherwise
/// the largest `T / m` that does.
pub fn reversal_step(time: &TimeGrid, dx: f64) -> (f64, usize) {
    let limit = dx / 2f64.sqrt();
    if time.dt <= limit {
        return (time.dt, time.nt - 1);
    }
    let steps = (time.t_max() / limit).floor() as usize + 1;
    (time.t_max() / steps as f64, steps)
}

/// Reverse the wave field from `t = T` to `t = 0`; `n` must match the
/// boundary sampling.
pub fn time_reverse_2d(data: &SquareBoundaryData, n: usize) -> Result<Image> {
    let square = data.square;
    if n != square.n {
        return Err(Error::Config(format!(
            "grid size {n} does not match the boundary sampling ({} nodes per side)",
            square.n
        )));
    }
    if data.time.nt < 2 {
        return Err(Error::Config("need at least 2 time samples".into()));
    }
    let dx = square.spacing();
    let (dt, steps) = reversal_step(&data.time, dx);
    let scheme = Leapfrog::new(n, dx, dt)?;
    let levels = steps + 1;
    let boundary = if steps == data.time.nt - 1 { data.values.clone() } else { resample(data, levels) };
    let n_b = square.boundary_len();
    let set_boundary = |u: &mut [f64], level: usize| {
        for k in 0..n_b {
            let (i, j) = square.boundary_node(k);
            u[i * n + j] = boundary[k * levels + level];
        }
    };

    // u(T) = 0 inside, u_t(T) = 0: the Taylor start u^{M-1} = u^M + ½Δt² Δ_h u^M.
    let mut next = vec![0.0; n * n];
    set_boundary(&mut next, steps);
    let mut cur = vec![0.0; n * n];
    let half = Leapfrog { dt: dt / 2f64.sqrt(), ..scheme };
    half.step(&next, &next, &mut cur);
    // step() forms 2u - u + (Δt²/2) Δ_h u = u + ½Δt² Δ_h u.
    set_boundary(&mut cur, steps - 1);
    let mut prev = vec![0.0; n * n];
    for level in (0..steps - 1).rev() {
        scheme.step(&next, &cur, &mut prev);
        set_boundary(&mut prev, level);
        std::mem::swap(&mut next, &mut cur);
        std::mem::swap(&mut cur, &mut prev);
    }
    Image::new(2, n, square.half_width, cur)
}
