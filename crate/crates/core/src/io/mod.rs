//! On-disk formats: `TATS` series, `TATI` images, PGM export and line-detector
//! scan manifests. All binary fields are little-endian without padding.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::model::{GeometryTag, Image, LineDetectorGeometry, SeriesData, TimeGrid};
use crate::{Error, Result};

pub const SERIES_MAGIC: &[u8; 4] = b"TATS";
pub const IMAGE_MAGIC: &[u8; 4] = b"TATI";
pub const FORMAT_VERSION: u16 = 1;

const TAG_RING: u16 = 1;
const TAG_SPHERE: u16 = 2;
const TAG_LINE_SLICE: u16 = 3;
const TAG_SQUARE: u16 = 4;

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format { path: path.display().to_string(), reason: reason.into() }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| format_err(path, format!("cannot read: {e}")))
}

/// Bounds-checked little-endian reader.
struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let end = self.pos + N;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| format_err(self.path, format!("truncated header while reading {what}")))?;
        self.pos = end;
        Ok(chunk.try_into().expect("slice of length N"))
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        self.take::<2>(what).map(u16::from_le_bytes)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        self.take::<4>(what).map(u32::from_le_bytes)
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        self.take::<8>(what).map(f64::from_le_bytes)
    }

    /// Remaining bytes as exactly `count` f64 values.
    fn payload(&self, count: usize) -> Result<Vec<f64>> {
        let rest = &self.bytes[self.pos..];
        if rest.len() != count * 8 {
            return Err(format_err(
                self.path,
                format!("payload has {} bytes, expected {} ({count} values)", rest.len(), count * 8),
            ));
        }
        Ok(rest.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }
}

fn check_magic(c: &mut Cursor, magic: &[u8; 4]) -> Result<()> {
    let m = c.take::<4>("magic")?;
    if &m != magic {
        return Err(format_err(
            c.path,
            format!("bad magic {:?}, expected {:?}", String::from_utf8_lossy(&m), String::from_utf8_lossy(magic)),
        ));
    }
    let v = c.u16("version")?;
    if v != FORMAT_VERSION {
        return Err(format_err(c.path, format!("unsupported version {v}, expected {FORMAT_VERSION}")));
    }
    Ok(())
}

fn push_payload(out: &mut Vec<u8>, values: &[f64]) {
    out.reserve(values.len() * 8);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_series(data: &SeriesData) -> Vec<u8> {
    let mut out = Vec::with_capacity(40 + data.values.len() * 8);
    out.extend_from_slice(SERIES_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let (tag, alpha) = match data.geometry {
        GeometryTag::Ring => (TAG_RING, None),
        GeometryTag::Sphere => (TAG_SPHERE, None),
        GeometryTag::LineSlice { alpha } => (TAG_LINE_SLICE, Some(alpha)),
        GeometryTag::Square => (TAG_SQUARE, None),
    };
    out.extend_from_slice(&tag.to_le_bytes());
    out.extend_from_slice(&(data.count as u32).to_le_bytes());
    out.extend_from_slice(&(data.time.nt as u32).to_le_bytes());
    out.extend_from_slice(&data.time.dt.to_le_bytes());
    out.extend_from_slice(&data.radius.to_le_bytes());
    if let Some(a) = alpha {
        out.extend_from_slice(&a.to_le_bytes());
    }
    push_payload(&mut out, &data.values);
    out
}

/// Parse a series file image; `path` is only used in error messages.
pub fn decode_series(bytes: &[u8], path: &Path) -> Result<SeriesData> {
    let mut c = Cursor { bytes, pos: 0, path };
    check_magic(&mut c, SERIES_MAGIC)?;
    let tag = c.u16("geometry tag")?;
    let count = c.u32("detector count")? as usize;
    let nt = c.u32("nt")? as usize;
    let dt = c.f64("dt")?;
    let radius = c.f64("radius")?;
    let geometry = match tag {
        TAG_RING => GeometryTag::Ring,
        TAG_SPHERE => GeometryTag::Sphere,
        TAG_LINE_SLICE => GeometryTag::LineSlice { alpha: c.f64("alpha")? },
        TAG_SQUARE => GeometryTag::Square,
        other => return Err(format_err(path, format!("unknown geometry tag {other}"))),
    };
    if count == 0 {
        return Err(format_err(path, "detector count is zero"));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(format_err(path, format!("radius must be positive, got {radius}")));
    }
    let time = TimeGrid::new(dt, nt).map_err(|e| format_err(path, e.to_string()))?;
    let values = c.payload(count * nt)?;
    SeriesData::new(geometry, radius, count, time, values).map_err(|e| format_err(path, e.to_string()))
}

pub fn write_series(path: &Path, data: &SeriesData) -> Result<()> {
    fs::write(path, encode_series(data))?;
    Ok(())
}

pub fn read_series(path: &Path) -> Result<SeriesData> {
    decode_series(&read_bytes(path)?, path)
}

/// Header: magic, version, `u16` dims, `u32` size per axis, `f64` half-extent
/// per axis, then the row-major payload.
pub fn encode_image(img: &Image) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 12 * img.dim + img.values.len() * 8);
    out.extend_from_slice(IMAGE_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(img.dim as u16).to_le_bytes());
    for _ in 0..img.dim {
        out.extend_from_slice(&(img.n as u32).to_le_bytes());
    }
    for _ in 0..img.dim {
        out.extend_from_slice(&img.extent.to_le_bytes());
    }
    push_payload(&mut out, &img.values);
    out
}

pub fn decode_image(bytes: &[u8], path: &Path) -> Result<Image> {
    let mut c = Cursor { bytes, pos: 0, path };
    check_magic(&mut c, IMAGE_MAGIC)?;
    let dim = c.u16("dims")? as usize;
    if dim != 2 && dim != 3 {
        return Err(format_err(path, format!("dims must be 2 or 3, got {dim}")));
    }
    let sizes = (0..dim).map(|_| c.u32("size").map(|s| s as usize)).collect::<Result<Vec<_>>>()?;
    let extents = (0..dim).map(|_| c.f64("extent")).collect::<Result<Vec<_>>>()?;
    if sizes.iter().any(|&s| s != sizes[0]) || extents.iter().any(|&e| e != extents[0]) {
        return Err(format_err(path, format!("only cubic grids are supported: sizes {sizes:?}, extents {extents:?}")));
    }
    let total = sizes.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s));
    let total = total.ok_or_else(|| format_err(path, "image size overflows"))?;
    let values = c.payload(total)?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(format_err(path, "image contains non-finite values"));
    }
    Image::new(dim, sizes[0], extents[0], values).map_err(|e| format_err(path, e.to_string()))
}

pub fn write_image(path: &Path, img: &Image) -> Result<()> {
    fs::write(path, encode_image(img))?;
    Ok(())
}

pub fn read_image(path: &Path) -> Result<Image> {
    decode_image(&read_bytes(path)?, path)
}

/// Linear map `[min, max] -> [0, 255]` used for every PGM of one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgmSidecar {
    pub min: f64,
    pub max: f64,
    pub files: Vec<String>,
}

fn to_byte(v: f64, min: f64, max: f64) -> u8 {
    if max > min {
        (255.0 * (v - min) / (max - min)).round().clamp(0.0, 255.0) as u8
    } else {
        0
    }
}

/// One binary P5 slice: columns along `x1`, rows along `x2` from top
/// (largest `x2`) to bottom. `at(i, j)` returns the value at `(x_i, y_j)`.
fn pgm_bytes(n: usize, min: f64, max: f64, at: impl Fn(usize, usize) -> f64) -> Vec<u8> {
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    for r in 0..n {
        let j = n - 1 - r;
        out.extend((0..n).map(|i| to_byte(at(i, j), min, max)));
    }
    out
}

/// Sidecar path for a PGM base path: `img.pgm` -> `img.pgm.json`.
pub fn sidecar_path(base: &Path) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Write `base` (2D) or `base` with `_zNNNN` before the extension per
/// `x3` slice (3D), plus the JSON sidecar next to `base`.
pub fn write_pgm(img: &Image, base: &Path) -> Result<PgmSidecar> {
    let min = img.values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = img.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = img.n;
    let name = |p: &Path| p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let mut files = Vec::new();
    if img.dim == 2 {
        fs::write(base, pgm_bytes(n, min, max, |i, j| img.values[i * n + j]))?;
        files.push(name(base));
    } else {
        let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let ext = base.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| "pgm".into());
        for k in 0..n {
            let path = base.with_file_name(format!("{stem}_z{k:04}.{ext}"));
            fs::write(&path, pgm_bytes(n, min, max, |i, j| img.values[(i * n + j) * n + k]))?;
            files.push(name(&path));
        }
    }
    let sidecar = PgmSidecar { min, max, files };
    fs::write(sidecar_path(base), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(sidecar)
}

/// Line-detector scan: one series file per rotation angle, listed in order.
/// File names are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanManifest {
    pub radius: f64,
    pub n_beta: usize,
    pub alphas: Vec<f64>,
    pub files: Vec<String>,
}

/// Write the slices next to `manifest` as `<stem>_aNNNN.tats` and the
/// manifest itself.
pub fn write_linedet_scan(manifest: &Path, scan: &[SeriesData]) -> Result<ScanManifest> {
    let first = scan.first().ok_or_else(|| Error::Config("empty line-detector scan".into()))?;
    let stem = manifest.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scan".into());
    let mut alphas = Vec::with_capacity(scan.len());
    let mut files = Vec::with_capacity(scan.len());
    for (k, slice) in scan.iter().enumerate() {
        let GeometryTag::LineSlice { alpha } = slice.geometry else {
            return Err(Error::Geometry(format!("slice {k} is not a line-slice series")));
        };
        if slice.count != first.count || slice.radius != first.radius {
            return Err(Error::Geometry(format!("slice {k} differs in detector count or radius from slice 0")));
        }
        let file = format!("{stem}_a{k:04}.tats");
        write_series(&manifest.with_file_name(&file), slice)?;
        alphas.push(alpha);
        files.push(file);
    }
    let m = ScanManifest { radius: first.radius, n_beta: first.count, alphas, files };
    fs::write(manifest, serde_json::to_string_pretty(&m)?)?;
    Ok(m)
}

/// Read a manifest and its slices; slice headers must agree with it.
pub fn read_linedet_scan(manifest: &Path) -> Result<(Vec<SeriesData>, LineDetectorGeometry)> {
    let text = fs::read_to_string(manifest).map_err(|e| format_err(manifest, format!("cannot read: {e}")))?;
    let m: ScanManifest = serde_json::from_str(&text).map_err(|e| format_err(manifest, e.to_string()))?;
    if m.files.len() != m.alphas.len() {
        return Err(format_err(
            manifest,
            format!("{} files listed for {} angles", m.files.len(), m.alphas.len()),
        ));
    }
    let geom = LineDetectorGeometry::new(m.radius, m.alphas.clone(), m.n_beta)?;
    let dir = manifest.parent().unwrap_or(Path::new(""));
    let mut scan = Vec::with_capacity(m.files.len());
    for (file, &alpha) in m.files.iter().zip(&m.alphas) {
        let path = dir.join(file);
        let slice = read_series(&path)?;
        let ok = matches!(slice.geometry, GeometryTag::LineSlice { alpha: a } if (a - alpha).abs() <= 1e-12);
        if !ok || slice.count != m.n_beta || slice.radius != m.radius {
            return Err(format_err(&path, format!("header does not match manifest entry alpha = {alpha}")));
        }
        if let Some(prev) = scan.first().map(|s: &SeriesData| s.time) {
            if prev != slice.time {
                return Err(format_err(&path, "time grid differs from the first slice"));
            }
        }
        scan.push(slice);
    }
    Ok((scan, geom))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(geometry: GeometryTag) -> SeriesData {
        let time = TimeGrid::new(0.01, 5).unwrap();
        let values = (0..15).map(|k| (k as f64 * 0.37).sin() * 1e-3 + f64::EPSILON * k as f64).collect();
        SeriesData::new(geometry, 1.05, 3, time, values).unwrap()
    }

    #[test]
    fn series_header_layout() {
        let bytes = encode_series(&series(GeometryTag::LineSlice { alpha: 0.5 }));
        assert_eq!(&bytes[..4], b"TATS");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(u16::from_le_bytes([bytes[6], bytes[7]]), 3);
        assert_eq!(bytes.len(), 4 + 2 + 2 + 4 + 4 + 8 + 8 + 8 + 15 * 8);
        assert_eq!(encode_series(&series(GeometryTag::Ring)).len(), 32 + 15 * 8);
    }

    #[test]
    fn series_round_trip_is_bitwise() {
        for g in [GeometryTag::Ring, GeometryTag::Sphere, GeometryTag::LineSlice { alpha: 1.2345 }, GeometryTag::Square] {
            let s = series(g);
            let back = decode_series(&encode_series(&s), Path::new("x")).unwrap();
            assert_eq!(back, s);
            assert!(back.values.iter().zip(&s.values).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn malformed_series_rejected() {
        let good = encode_series(&series(GeometryTag::Ring));
        let p = Path::new("bad.tats");
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode_series(&bad, p), Err(Error::Format { .. })));
        let mut bad = good.clone();
        bad[4] = 2;
        assert!(matches!(decode_series(&bad, p), Err(Error::Format { .. })));
        assert!(matches!(decode_series(&good[..good.len() - 1], p), Err(Error::Format { .. })));
        let mut long = good.clone();
        long.push(0);
        assert!(matches!(decode_series(&long, p), Err(Error::Format { .. })));
        assert!(matches!(decode_series(&good[..10], p), Err(Error::Format { .. })));
        let mut bad = good;
        bad[6] = 9;
        let e = decode_series(&bad, p).unwrap_err();
        assert!(e.to_string().contains("geometry tag"));
    }

    #[test]
    fn image_round_trip_and_validation() {
        let img = Image::new(3, 3, 0.7, (0..27).map(|k| k as f64 / 7.0).collect()).unwrap();
        let bytes = encode_image(&img);
        assert_eq!(bytes.len(), 8 + 3 * 4 + 3 * 8 + 27 * 8);
        assert_eq!(decode_image(&bytes, Path::new("x")).unwrap(), img);
        assert!(decode_image(&bytes[..bytes.len() - 8], Path::new("x")).is_err());
        let mut bad = bytes;
        bad[6] = 4;
        assert!(matches!(decode_image(&bad, Path::new("x")), Err(Error::Format { .. })));
    }

    #[test]
    fn pgm_orientation_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        // value = x: dark column on the left; value = y: dark row at the bottom.
        let n = 4;
        let mut img = Image::zeros(2, n, 1.0);
        for i in 0..n {
            for j in 0..n {
                img.values[i * n + j] = j as f64;
            }
        }
        let base = dir.path().join("img.pgm");
        let side = write_pgm(&img, &base).unwrap();
        assert_eq!((side.min, side.max), (0.0, 3.0));
        let bytes = fs::read(&base).unwrap();
        let header = b"P5\n4 4\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        let px = &bytes[header.len()..];
        assert_eq!(px.len(), 16);
        assert_eq!(&px[..4], &[255; 4]);
        assert_eq!(&px[12..], &[0; 4]);
        let json: PgmSidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(&base)).unwrap()).unwrap();
        assert_eq!(json, side);

        let vol = Image::new(3, 2, 1.0, vec![1.0; 8]).unwrap();
        let side = write_pgm(&vol, &dir.path().join("vol.pgm")).unwrap();
        assert_eq!(side.files, vec!["vol_z0000.pgm", "vol_z0001.pgm"]);
        assert!(dir.path().join("vol_z0001.pgm").exists());
    }

    #[test]
    fn scan_manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let scan: Vec<SeriesData> =
            [0.0, 1.0, 2.0].iter().map(|&a| series(GeometryTag::LineSlice { alpha: a })).collect();
        let path = dir.path().join("scan.json");
        let m = write_linedet_scan(&path, &scan).unwrap();
        assert_eq!(m.files[2], "scan_a0002.tats");
        let (back, geom) = read_linedet_scan(&path).unwrap();
        assert_eq!(back, scan);
        assert_eq!(geom.alphas, vec![0.0, 1.0, 2.0]);
        fs::write(dir.path().join("scan_a0001.tats"), encode_series(&series(GeometryTag::LineSlice { alpha: 1.5 })))
            .unwrap();
        assert!(matches!(read_linedet_scan(&path), Err(Error::Format { .. })));
    }
}
