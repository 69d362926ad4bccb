//! Image comparison and the wall-time scaling harness.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::forward::{forward_2d, forward_3d, forward_linedet};
use crate::linedet::{reconstruct_linedet, LinedetConfig};
use crate::model::{
    standard_phantom_2d, standard_phantom_3d, standard_phantom_linedet, DetectorRing, DetectorSphere, Image,
    LineDetectorGeometry, SeriesData, TimeGrid,
};
use crate::recon2d::{reconstruct_2d, Recon2dConfig};
use crate::recon3d::{reconstruct_3d, Recon3dConfig};
use crate::timereversal::{forward_square_boundary, time_reverse_2d, SquareBoundaryData, SquareSpec};
use crate::{Error, Result};

/// `‖a - b‖ / ‖b‖` over nodes with `|x| <= mask_radius`.
pub fn rel_l2_error(a: &Image, b: &Image, mask_radius: f64) -> Result<f64> {
    if a.dim != b.dim || a.n != b.n || (a.extent - b.extent).abs() > 1e-12 * b.extent {
        return Err(Error::Config(format!(
            "image grids differ: {}D n={} L={} vs {}D n={} L={}",
            a.dim, a.n, a.extent, b.dim, b.n, b.extent
        )));
    }
    let mut x = vec![0.0; b.dim];
    let (mut num, mut den) = (0.0, 0.0);
    let r2 = mask_radius * mask_radius;
    for (idx, (va, vb)) in a.values.iter().zip(&b.values).enumerate() {
        b.node(idx, &mut x);
        if x.iter().map(|c| c * c).sum::<f64>() <= r2 {
            num += (va - vb) * (va - vb);
            den += vb * vb;
        }
    }
    if den == 0.0 {
        return Err(Error::Domain("reference image is zero inside the mask".into()));
    }
    Ok((num / den).sqrt())
}

/// Pipelines the timing harness knows how to size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    Recon2d,
    Recon3d,
    Linedet,
    TimeReverse,
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "recon2d" => Ok(Self::Recon2d),
            "recon3d" => Ok(Self::Recon3d),
            "recon-linedet" | "linedet" => Ok(Self::Linedet),
            "timereverse" => Ok(Self::TimeReverse),
            other => Err(Error::Config(format!("unknown pipeline '{other}'"))),
        }
    }
}

/// Prepared input for one problem size; only the reconstruction is timed.
enum Workload {
    Ring(SeriesData, DetectorRing, Recon2dConfig),
    Sphere(SeriesData, DetectorSphere, Recon3dConfig),
    Lines(Vec<SeriesData>, LineDetectorGeometry, LinedetConfig),
    Square(SquareBoundaryData),
}

const RADIUS: f64 = 1.05;
const T_MAX: f64 = 5.0;

impl Workload {
    /// Size `n`: an `n^d` image with detector and time sampling growing
    /// proportionally (`n` ring detectors and `2n` samples in 2D).
    fn prepare(pipeline: Pipeline, n: usize) -> Result<Self> {
        match pipeline {
            Pipeline::Recon2d => {
                let ring = DetectorRing::new(RADIUS, n)?;
                let time = TimeGrid::new(T_MAX / (2 * n - 1) as f64, 2 * n)?;
                let data = forward_2d(&standard_phantom_2d(), &ring, &time)?;
                Ok(Self::Ring(data, ring, Recon2dConfig::new(n)))
            }
            Pipeline::Recon3d => {
                let sphere = DetectorSphere::with_theta(RADIUS, (n / 2).max(2))?;
                let nt = 2 * n;
                let time = TimeGrid::new(2.2 * RADIUS / (nt - 1) as f64, nt)?;
                let data = forward_3d(&standard_phantom_3d(), &sphere, &time)?;
                Ok(Self::Sphere(data, sphere, Recon3dConfig::new(n)))
            }
            Pipeline::Linedet => {
                let geom = LineDetectorGeometry::uniform(RADIUS, n.max(2), 2 * n)?;
                let time = TimeGrid::new(T_MAX / (2 * n - 1) as f64, 2 * n)?;
                let scan = forward_linedet(&standard_phantom_linedet(), &geom, &time)?;
                Ok(Self::Lines(scan, geom, LinedetConfig::new(n)))
            }
            Pipeline::TimeReverse => {
                let square = SquareSpec::new(n, 1.0)?;
                let dt = square.spacing() / 2f64.sqrt();
                let nt = (T_MAX / dt).ceil() as usize + 1;
                let time = TimeGrid::new(T_MAX / (nt - 1) as f64, nt)?;
                Ok(Self::Square(forward_square_boundary(&standard_phantom_2d(), &square, &time)?))
            }
        }
    }

    fn run(&self) -> Result<()> {
        match self {
            Self::Ring(d, r, c) => reconstruct_2d(d, r, c).map(drop),
            Self::Sphere(d, s, c) => reconstruct_3d(d, s, c).map(drop),
            Self::Lines(d, g, c) => reconstruct_linedet(d, g, c).map(drop),
            Self::Square(d) => time_reverse_2d(d, d.square.n).map(drop),
        }
    }
}

/// Wall times per size and the fitted exponent of `t(n) ~ n^p log n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingTable {
    pub rows: Vec<(usize, f64)>,
    /// `None` with fewer than two sizes.
    pub exponent: Option<f64>,
}

impl ScalingTable {
    /// Least-squares fit of `log(t / log n) = p log n + c`.
    pub fn from_rows(rows: Vec<(usize, f64)>) -> Self {
        let exponent = if rows.len() < 2 {
            None
        } else {
            let pts: Vec<(f64, f64)> =
                rows.iter().map(|&(n, t)| ((n as f64).ln(), (t / (n as f64).ln()).ln())).collect();
            let k = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            Some(sxy / sxx)
        };
        Self { rows, exponent }
    }

    /// Time ratios between consecutive sizes.
    pub fn ratios(&self) -> Vec<f64> {
        self.rows.windows(2).map(|w| w[1].1 / w[0].1).collect()
    }

    /// CSV with columns `n,seconds,fitted_exponent`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,seconds,fitted_exponent\n");
        let p = self.exponent.map(|p| format!("{p:.4}")).unwrap_or_default();
        for (n, t) in &self.rows {
            let _ = writeln!(s, "{n},{t:.6},{p}");
        }
        s
    }
}

/// Shortest span a single timing sample should cover.
const MIN_SAMPLE: Duration = Duration::from_millis(300);

/// Median of three timing samples per size on the monotonic clock.
///
/// Inputs are simulated before timing. After one warm-up run per size, each
/// sample repeats the reconstruction until it spans at least [`MIN_SAMPLE`]
/// and reports the mean per run. Samples are taken round-robin over the
/// sizes so that slow periods of the host affect all sizes alike.
pub fn scaling_probe(pipeline: Pipeline, sizes: &[usize]) -> Result<ScalingTable> {
    if sizes.is_empty() {
        return Err(Error::Config("no sizes given".into()));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("sizes must be strictly ascending".into()));
    }
    let mut work = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let w = Workload::prepare(pipeline, n)?;
        let start = Instant::now();
        w.run()?;
        let warm = start.elapsed().max(Duration::from_micros(1));
        let reps = (MIN_SAMPLE.as_secs_f64() / warm.as_secs_f64()).ceil().clamp(1.0, 1000.0) as u32;
        work.push((w, reps));
    }
    let mut samples = vec![[0.0f64; 3]; sizes.len()];
    for round in 0..3 {
        for ((w, reps), s) in work.iter().zip(&mut samples) {
            let start = Instant::now();
            for _ in 0..*reps {
                w.run()?;
            }
            s[round] = start.elapsed().as_secs_f64() / *reps as f64;
        }
    }
    let rows = sizes
        .iter()
        .zip(&mut samples)
        .map(|(&n, s)| {
            s.sort_by(f64::total_cmp);
            (n, s[1])
        })
        .collect();
    Ok(ScalingTable::from_rows(rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image(values: Vec<f64>) -> Image {
        Image::new(2, 4, 1.0, values).unwrap()
    }

    #[test]
    fn error_examples() {
        let b = image((0..16).map(|k| (k as f64).sin() + 2.0).collect());
        assert_eq!(rel_l2_error(&b, &b, 10.0).unwrap(), 0.0);
        let a = image(b.values.iter().map(|v| 2.0 * v).collect());
        assert!((rel_l2_error(&a, &b, 10.0).unwrap() - 1.0).abs() < 1e-15);
        let zero = image(vec![0.0; 16]);
        assert!(matches!(rel_l2_error(&b, &zero, 10.0), Err(Error::Domain(_))));
        let other = Image::new(2, 5, 1.0, vec![0.0; 25]).unwrap();
        assert!(matches!(rel_l2_error(&other, &b, 1.0), Err(Error::Config(_))));
    }

    #[test]
    fn exponent_fit_recovers_power_law() {
        let rows: Vec<(usize, f64)> =
            [64usize, 128, 256, 512].iter().map(|&n| (n, 1e-9 * (n as f64).powi(2) * (n as f64).ln())).collect();
        let t = ScalingTable::from_rows(rows);
        assert!((t.exponent.unwrap() - 2.0).abs() < 1e-12);
        assert!(t.ratios().iter().all(|r| (4.0..5.0).contains(r)));
        let single = ScalingTable::from_rows(vec![(32, 0.1)]);
        assert_eq!(single.exponent, None);
        assert_eq!(single.to_csv(), "n,seconds,fitted_exponent\n32,0.100000,\n");
    }

    #[test]
    fn pipeline_names() {
        assert_eq!("recon2d".parse::<Pipeline>().unwrap(), Pipeline::Recon2d);
        assert_eq!("recon-linedet".parse::<Pipeline>().unwrap(), Pipeline::Linedet);
        assert!("fbp".parse::<Pipeline>().is_err());
    }
}
