//! The `tat` command line: simulation, reconstruction, comparison and timing.
//!
//! Exit codes: 0 on success, 2 for invalid arguments, files or geometry,
//! 1 for failures during computation. Diagnostics go to standard error and
//! machine-readable results to standard output.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::forward::{add_noise, forward_2d, forward_3d, forward_linedet, NoiseSpec};
use crate::io::{read_image, read_linedet_scan, read_series, write_image, write_linedet_scan, write_pgm, write_series};
use crate::linedet::{reconstruct_linedet, LinedetConfig};
use crate::metrics::{rel_l2_error, scaling_probe, Pipeline};
use crate::model::{
    standard_phantom_2d, standard_phantom_3d, standard_phantom_linedet, DetectorRing, DetectorSphere, GeometryTag,
    validate_grid, Image, LineDetectorGeometry, Phantom, TimeGrid,
};
use crate::recon2d::{reconstruct_2d, Recon2dConfig, Reconstruction};
use crate::recon3d::{reconstruct_3d, Recon3dConfig};
use crate::timereversal::{forward_square_boundary, time_reverse_2d, SquareBoundaryData, SquareSpec};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "tat", version, about = "Fourier-domain thermoacoustic reconstruction")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Geometry {
    Ring,
    Sphere,
    Linedet,
    Square,
}

#[derive(Debug, clap::Args)]
struct ReconArgs {
    /// Input series file (a scan manifest for recon-linedet).
    #[arg(long = "in")]
    input: PathBuf,
    /// Image nodes per axis.
    #[arg(long)]
    n: usize,
    /// Output image file.
    #[arg(long)]
    out: PathBuf,
    /// Also write an 8-bit PGM (a slice stack in 3D) with a JSON sidecar.
    #[arg(long)]
    pgm: bool,
    /// Image half-width; defaults to the detector radius.
    #[arg(long)]
    extent: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate detector data for a phantom.
    Simulate {
        /// Phantom JSON file, or `standard` for the built-in phantom.
        #[arg(long)]
        phantom: String,
        #[arg(long, value_enum)]
        geometry: Geometry,
        /// Ring detectors, sphere polar rows, detectors per line ring, or
        /// square nodes per side.
        #[arg(long)]
        detectors: usize,
        /// Detection radius (half-width for the square).
        #[arg(long)]
        radius: f64,
        #[arg(long)]
        nt: usize,
        #[arg(long)]
        dt: f64,
        /// Number of equispaced rotation angles (linedet only).
        #[arg(long)]
        alphas: Option<usize>,
        /// Noise level relative to the signal L2 norm.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output series file (a scan manifest for linedet).
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct from circular detector data.
    Recon2d(ReconArgs),
    /// Reconstruct from spherical detector data.
    Recon3d(ReconArgs),
    /// Reconstruct from a line-detector scan manifest.
    ReconLinedet(ReconArgs),
    /// Reconstruct by time reversal from square boundary data.
    Timereverse(ReconArgs),
    /// Sample a phantom on an image grid (a reference for `compare`).
    Render {
        /// Phantom JSON file, or `standard2d`, `standard3d`, `standard-linedet`.
        #[arg(long)]
        phantom: String,
        #[arg(long)]
        n: usize,
        /// Image half-width.
        #[arg(long)]
        extent: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the relative L2 error of image `a` against reference `b`.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = 0.9)]
        mask: f64,
    },
    /// Time a pipeline over increasing sizes and print CSV.
    Bench {
        #[arg(long)]
        pipeline: String,
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
    },
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.threads {
        Some(0) => Err(Error::Config("--threads must be at least 1".into())),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| execute(cli.command, out, err)),
            Err(e) => Err(Error::Config(format!("cannot start thread pool: {e}"))),
        },
        None => execute(cli.command, out, err),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_validation() {
                2
            } else {
                1
            }
        }
    }
}

fn execute(cmd: Command, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<()> {
    match cmd {
        Command::Simulate { phantom, geometry, detectors, radius, nt, dt, alphas, noise, seed, out: path } => {
            simulate(&phantom, geometry, detectors, radius, nt, dt, alphas, NoiseSpec { level: noise, seed }, &path, err)
        }
        Command::Recon2d(a) => {
            let data = read_series(&a.input)?;
            expect_tag(&a.input, data.geometry, GeometryTag::Ring, "ring")?;
            let ring = DetectorRing::new(data.radius, data.count)?;
            let cfg = Recon2dConfig { extent: a.extent, ..Recon2dConfig::new(a.n) };
            finish(reconstruct_2d(&data, &ring, &cfg)?, &a, err)
        }
        Command::Recon3d(a) => {
            let data = read_series(&a.input)?;
            expect_tag(&a.input, data.geometry, GeometryTag::Sphere, "sphere")?;
            let sphere = DetectorSphere::from_count(data.radius, data.count)?;
            let cfg = Recon3dConfig { extent: a.extent, ..Recon3dConfig::new(a.n) };
            finish(reconstruct_3d(&data, &sphere, &cfg)?, &a, err)
        }
        Command::ReconLinedet(a) => {
            let (scan, geom) = read_linedet_scan(&a.input)?;
            let cfg = LinedetConfig { extent: a.extent, ..LinedetConfig::new(a.n) };
            finish(reconstruct_linedet(&scan, &geom, &cfg)?, &a, err)
        }
        Command::Timereverse(a) => {
            if a.extent.is_some() {
                return Err(Error::Config("timereverse images always cover the data square; drop --extent".into()));
            }
            let data = read_series(&a.input)?;
            expect_tag(&a.input, data.geometry, GeometryTag::Square, "square")?;
            let bdata = SquareBoundaryData::from_series(&data)?;
            let image = time_reverse_2d(&bdata, a.n)?;
            save(&image, &a)
        }
        Command::Render { phantom, n, extent, out: path } => {
            let phantom = match phantom.as_str() {
                "standard2d" => standard_phantom_2d(),
                "standard3d" => standard_phantom_3d(),
                "standard-linedet" => standard_phantom_linedet(),
                file => read_phantom(file)?,
            };
            validate_grid(phantom.dimension(), n, extent)?;
            write_image(&path, &Image::from_phantom(&phantom, n, extent))
        }
        Command::Compare { a, b, mask } => {
            let e = rel_l2_error(&read_image(&a)?, &read_image(&b)?, mask)?;
            writeln!(out, "{e}")?;
            Ok(())
        }
        Command::Bench { pipeline, sizes } => {
            let table = scaling_probe(pipeline.parse::<Pipeline>()?, &sizes)?;
            out.write_all(table.to_csv().as_bytes())?;
            Ok(())
        }
    }
}

fn expect_tag(path: &Path, got: GeometryTag, want: GeometryTag, name: &str) -> Result<()> {
    let same = std::mem::discriminant(&got) == std::mem::discriminant(&want);
    if same {
        Ok(())
    } else {
        Err(Error::Geometry(format!("{} holds {got:?} data, expected {name} data", path.display())))
    }
}

fn load_phantom(spec: &str, geometry: Geometry) -> Result<Phantom> {
    if spec == "standard" {
        return Ok(match geometry {
            Geometry::Ring | Geometry::Square => standard_phantom_2d(),
            Geometry::Sphere => standard_phantom_3d(),
            Geometry::Linedet => standard_phantom_linedet(),
        });
    }
    read_phantom(spec)
}

fn read_phantom(path: &str) -> Result<Phantom> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Format { path: path.to_string(), reason: format!("cannot read: {e}") })?;
    Phantom::from_json(&text)
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    phantom: &str,
    geometry: Geometry,
    detectors: usize,
    radius: f64,
    nt: usize,
    dt: f64,
    alphas: Option<usize>,
    noise: NoiseSpec,
    out: &Path,
    err: &mut (dyn Write + Send),
) -> Result<()> {
    let phantom = load_phantom(phantom, geometry)?;
    let time = TimeGrid::new(dt, nt)?;
    if alphas.is_some() != (geometry == Geometry::Linedet) {
        return Err(Error::Config("--alphas is required for linedet and only accepted there".into()));
    }
    if dt > radius / 1000.0 && matches!(geometry, Geometry::Ring | Geometry::Square) {
        writeln!(err, "warning: dt = {dt} exceeds R/1000 = {}; the time grid may be coarse", radius / 1000.0)?;
    }
    match geometry {
        Geometry::Ring => {
            let data = forward_2d(&phantom, &DetectorRing::new(radius, detectors)?, &time)?;
            write_series(out, &add_noise(&data, &noise)?)
        }
        Geometry::Sphere => {
            let data = forward_3d(&phantom, &DetectorSphere::with_theta(radius, detectors)?, &time)?;
            write_series(out, &add_noise(&data, &noise)?)
        }
        Geometry::Square => {
            let data = forward_square_boundary(&phantom, &SquareSpec::new(detectors, radius)?, &time)?;
            write_series(out, &add_noise(&data.to_series(), &noise)?)
        }
        Geometry::Linedet => {
            let geom = LineDetectorGeometry::uniform(radius, alphas.unwrap_or(0), detectors)?;
            let scan = forward_linedet(&phantom, &geom, &time)?
                .iter()
                .enumerate()
                .map(|(k, s)| add_noise(s, &NoiseSpec { level: noise.level, seed: noise.seed.wrapping_add(k as u64) }))
                .collect::<Result<Vec<_>>>()?;
            write_linedet_scan(out, &scan).map(drop)
        }
    }
}

fn finish(rec: Reconstruction, args: &ReconArgs, err: &mut (dyn Write + Send)) -> Result<()> {
    if rec.imag_ratio > 0.01 {
        writeln!(
            err,
            "warning: imaginary residual is {:.2}% of the real image; check the detector geometry",
            100.0 * rec.imag_ratio
        )?;
    }
    save(&rec.image, args)
}

fn save(image: &Image, args: &ReconArgs) -> Result<()> {
    write_image(&args.out, image)?;
    if args.pgm {
        write_pgm(image, &args.out.with_extension("pgm"))?;
    }
    Ok(())
}
