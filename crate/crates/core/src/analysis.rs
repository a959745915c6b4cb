//! Image comparison and the focus-scan experiment.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::biphoton::{build_biphoton, marginal_batch, ring_carrier, BiphotonAmplitude, BuildOptions, IdlerSampling};
use crate::crystal::CrystalParams;
use crate::error::{Error, Result};
use crate::field::{ComplexField, Frame, Grid2D, IntensityMap};
use crate::modes::{lg_value, superpose_at, PumpSpec};
use crate::propagation::{ApertureSpec, Element, OpticalTrain};

/// Pearson correlation of the pixel values.
pub fn ncc(a: &IntensityMap, b: &IntensityMap) -> Result<f64> {
    if a.values.dim() != b.values.dim() {
        return Err(Error::ShapeMismatch("ncc needs images of equal shape".into()));
    }
    let ma = a.values.mean().unwrap_or(0.0);
    let mb = b.values.mean().unwrap_or(0.0);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.values.iter().zip(b.values.iter()) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    let tiny = |ss: f64, m: f64| ss <= 1e-24 * m * m * a.values.len() as f64 || ss == 0.0;
    if tiny(saa, ma) || tiny(sbb, mb) {
        return Err(Error::DegenerateImage("ncc of a constant image is undefined".into()));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Bilinear sample of a real grid at fractional index `(fr, fc)`; zero
/// outside.
pub(crate) fn bilinear(values: &Array2<f64>, fr: f64, fc: f64) -> f64 {
    let (rows, cols) = values.dim();
    let r0 = fr.floor();
    let c0 = fc.floor();
    let (tr, tc) = (fr - r0, fc - c0);
    let get = |r: f64, c: f64| {
        if r < 0.0 || c < 0.0 || r >= rows as f64 || c >= cols as f64 {
            0.0
        } else {
            values[[r as usize, c as usize]]
        }
    };
    get(r0, c0) * (1.0 - tr) * (1.0 - tc)
        + get(r0, c0 + 1.0) * (1.0 - tr) * tc
        + get(r0 + 1.0, c0) * tr * (1.0 - tc)
        + get(r0 + 1.0, c0 + 1.0) * tr * tc
}

pub const HARMONIC_MAX: usize = 16;
const HARMONIC_ANGLES: usize = 128;

/// Angular Fourier power `|c_m|^2`, `m = 0..=16`, of the radially
/// integrated intensity about `center` (grid-relative meters).
pub fn azimuthal_harmonics(img: &IntensityMap, center: [f64; 2]) -> Result<Vec<f64>> {
    let g = img.grid;
    let half = 0.5 * g.window();
    if center[0].abs() >= half || center[1].abs() >= half {
        return Err(Error::Domain(format!("center {center:?} lies outside the image")));
    }
    let p = g.pitch();
    let mid = (g.n() / 2) as f64;
    let r_max = half - center[0].abs().max(center[1].abs()) - p;
    let nr = (r_max / p).floor().max(0.0) as usize;
    let profile: Vec<f64> = (0..HARMONIC_ANGLES)
        .map(|a| {
            let phi = 2.0 * PI * a as f64 / HARMONIC_ANGLES as f64;
            let (s, c) = phi.sin_cos();
            (0..nr)
                .map(|k| {
                    let r = (k as f64 + 0.5) * p;
                    let x = center[0] + r * c;
                    let y = center[1] + r * s;
                    bilinear(&img.values, y / p + mid, x / p + mid) * r
                })
                .sum()
        })
        .collect();
    Ok((0..=HARMONIC_MAX)
        .map(|m| {
            let (mut re, mut im) = (0.0, 0.0);
            for (a, v) in profile.iter().enumerate() {
                let ph = 2.0 * PI * (m * a) as f64 / HARMONIC_ANGLES as f64;
                re += v * ph.cos();
                im -= v * ph.sin();
            }
            (re * re + im * im) / (HARMONIC_ANGLES * HARMONIC_ANGLES) as f64
        })
        .collect())
}

/// Strongest harmonic with `m >= 1`.
pub fn dominant_harmonic(powers: &[f64]) -> usize {
    powers
        .iter()
        .enumerate()
        .skip(1)
        .fold((1, f64::NEG_INFINITY), |best, (m, &p)| if p > best.1 { (m, p) } else { best })
        .0
}

/// Variance of the 5-point Laplacian of the peak-normalized image.
pub fn sharpness(img: &IntensityMap) -> f64 {
    let peak = img.peak();
    if peak <= 0.0 {
        return 0.0;
    }
    let v = &img.values;
    let (rows, cols) = v.dim();
    let mut lap = Vec::with_capacity(rows * cols);
    for r in 1..rows - 1 {
        for c in 1..cols - 1 {
            lap.push((v[[r - 1, c]] + v[[r + 1, c]] + v[[r, c - 1]] + v[[r, c + 1]] - 4.0 * v[[r, c]]) / peak);
        }
    }
    let m = lap.iter().sum::<f64>() / lap.len() as f64;
    lap.iter().map(|x| (x - m).powi(2)).sum::<f64>() / lap.len() as f64
}

/// Pinhole imaging law of a train whose first aperture acts as the pinhole:
/// a crystal-plane point `x` lands at `center + magnification * x` on the
/// output plane (absolute coordinates).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImagingGeometry {
    pub magnification: f64,
    pub center: [f64; 2],
}

pub fn imaging_geometry(train: &OpticalTrain) -> Result<ImagingGeometry> {
    let (idx, ap) = train
        .first_aperture()
        .ok_or_else(|| Error::Domain("train has no aperture to image through".into()))?;
    let p = train.ray_matrix(0..idx);
    let s = train.ray_matrix(idx + 1..train.elements.len());
    if p.b == 0.0 {
        return Err(Error::Domain("aperture sits in an image plane of the crystal".into()));
    }
    let magnification = -s.b / p.b;
    let gain = s.a + s.b * p.d / p.b;
    Ok(ImagingGeometry { magnification, center: [gain * ap.center[0], gain * ap.center[1]] })
}

/// Resample `source` onto `grid` (whose central sample sits at absolute
/// `origin`) through the map `x_out = center + m x_src`, all coordinates
/// absolute.
pub fn resample(source: &IntensityMap, geometry: &ImagingGeometry, grid: Grid2D, origin: [f64; 2]) -> Result<IntensityMap> {
    let m = geometry.magnification;
    if m == 0.0 || !m.is_finite() {
        return Err(Error::Domain(format!("magnification {m} cannot be inverted")));
    }
    let n = grid.n();
    let sp = source.grid.pitch();
    let mid = (source.grid.n() / 2) as f64;
    let values = Array2::from_shape_fn((n, n), |(r, c)| {
        let x = (origin[0] + grid.coord(c) - geometry.center[0]) / m;
        let y = (origin[1] + grid.coord(r) - geometry.center[1]) / m;
        bilinear(&source.values, (y - source.origin[1]) / sp + mid, (x - source.origin[0]) / sp + mid).max(0.0)
    });
    IntensityMap::new(grid, origin, values)
}

/// Pump intensity on `grid`, as imaged by `train` onto a plane sampled by
/// `target`.
pub fn pump_template(pump: &PumpSpec, pump_grid: Grid2D, train: &OpticalTrain, target: &IntensityMap) -> Result<IntensityMap> {
    let geometry = imaging_geometry(train)?;
    let src = superpose_at(pump, pump_grid, crate::modes::DEFAULT_PUMP_WAVELENGTH_M)?.intensity();
    resample(&src, &geometry, target.grid, target.origin)
}

/// Coherent pump amplitude carried to the output plane as a perfect
/// (phase-preserving) image with the train's pinhole magnification. This is
/// the field a phase-transferring process would deliver; it serves as the
/// coherent control for phase-flattening tests.
pub fn imaged_pump_field(
    pump: &PumpSpec,
    geometry: &ImagingGeometry,
    grid: Grid2D,
    origin: [f64; 2],
    wavelength_m: f64,
) -> Result<ComplexField> {
    let m = geometry.magnification;
    if m == 0.0 || !m.is_finite() {
        return Err(Error::Domain(format!("magnification {m} cannot be inverted")));
    }
    let n = grid.n();
    let values = Array2::from_shape_fn((n, n), |(r, c)| {
        let x = (origin[0] + grid.coord(c) - geometry.center[0]) / m;
        let y = (origin[1] + grid.coord(r) - geometry.center[1]) / m;
        let (rho, phi) = (x.hypot(y), y.atan2(x));
        pump.terms()
            .iter()
            .map(|t| t.coeff * lg_value(t.p, t.l, pump.waist_m(), rho, phi))
            .sum::<Complex64>()
    });
    let mut f = ComplexField::new(grid, Frame { origin, carrier: [0.0, 0.0] }, values, wavelength_m)?;
    let p = f.power();
    if !(p > 0.0) {
        return Err(Error::DegenerateSpec("imaged pump has no power on this grid".into()));
    }
    f.scale(Complex64::new(1.0 / p.sqrt(), 0.0));
    Ok(f)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FocusScanResult {
    pub aperture_diameter_m: f64,
    pub z1_samples: Vec<f64>,
    /// `(z1, ncc)` against the magnified pump template.
    pub metric_curve: Vec<(f64, f64)>,
    pub sharpness: Vec<f64>,
    pub best_z1: f64,
    pub depth_of_focus: f64,
}

/// Setup shared by every point of a focus scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanSetup {
    pub grid: Grid2D,
    pub sampling: IdlerSampling,
    pub z0_m: f64,
    pub focal_m: f64,
    /// Azimuth of the aperture on the emission ring.
    pub azimuth_rad: f64,
    pub keep_exit_phase: bool,
    pub strict: bool,
}

impl Default for ScanSetup {
    fn default() -> Self {
        ScanSetup {
            grid: Grid2D::position(256, 16e-6).expect("valid default grid"),
            sampling: IdlerSampling::default(),
            z0_m: 0.05,
            focal_m: 0.10,
            azimuth_rad: 0.0,
            keep_exit_phase: true,
            strict: false,
        }
    }
}

/// `6, 6.5, ..., 20` cm.
pub fn default_z1_range() -> Vec<f64> {
    (0..=28).map(|i| 0.06 + 0.005 * i as f64).collect()
}

/// Marginals at every `(diameter, z1)` through the Fourier-imaging train,
/// scored by NCC against the magnified pump.
pub fn focus_scan(
    pump: &PumpSpec,
    crystal: &CrystalParams,
    aperture_diameters: &[f64],
    z1_range: &[f64],
    setup: &ScanSetup,
) -> Result<Vec<FocusScanResult>> {
    Ok(focus_scan_images(pump, crystal, aperture_diameters, z1_range, setup)?.0)
}

/// As [`focus_scan`], also returning the peak-normalized images in
/// diameter-major order.
pub fn focus_scan_images(
    pump: &PumpSpec,
    crystal: &CrystalParams,
    aperture_diameters: &[f64],
    z1_range: &[f64],
    setup: &ScanSetup,
) -> Result<(Vec<FocusScanResult>, Vec<IntensityMap>)> {
    let (carrier, center) = ring_carrier(crystal, setup.z0_m, setup.azimuth_rad)?;
    let opts = BuildOptions { carrier, keep_exit_phase: setup.keep_exit_phase, strict: setup.strict };
    let bi = build_biphoton(pump, crystal, setup.grid, &setup.sampling, &opts)?;
    let base = OpticalTrain::fourier_imaging(setup.z0_m, ApertureSpec::new(aperture_diameters[0].max(1e-9), center)?, setup.focal_m, setup.focal_m);
    let template = superpose_at(pump, setup.grid, crystal.pump_wavelength_m)?.intensity();
    focus_scan_with(&bi, &template, &base, aperture_diameters, z1_range, setup.strict)
}

/// Focus scan over variants of `base`: the first aperture takes each
/// diameter and the final free-space distance takes each `z1`. The part of
/// `base` before the aperture is evaluated once per idler sample.
pub fn focus_scan_with(
    bi: &BiphotonAmplitude,
    pump_intensity: &IntensityMap,
    base: &OpticalTrain,
    aperture_diameters: &[f64],
    z1_range: &[f64],
    strict: bool,
) -> Result<(Vec<FocusScanResult>, Vec<IntensityMap>)> {
    if aperture_diameters.is_empty() || z1_range.is_empty() {
        return Err(Error::Domain("focus scan needs diameters and z1 samples".into()));
    }
    let (idx, ap) = base
        .first_aperture()
        .ok_or_else(|| Error::Domain("focus scan needs an aperture in the train".into()))?;
    if !matches!(base.elements.last(), Some(Element::FreeSpace { .. })) || base.elements.len() == idx + 1 {
        return Err(Error::Domain("focus scan needs the train to end in free space after the aperture".into()));
    }
    let last = base.elements.len() - 1;
    let mut trains = Vec::new();
    for &d in aperture_diameters {
        for &z1 in z1_range {
            let mut e = base.elements.clone();
            e[idx] = Element::Aperture(ApertureSpec::new(d, ap.center)?);
            e[last] = Element::FreeSpace { distance_m: z1 };
            trains.push(OpticalTrain::new(e)?);
        }
    }
    let prefix = &base.elements[..idx];
    let suffixes: Vec<Vec<Element>> = trains.iter().map(|t| t.elements[idx..].to_vec()).collect();
    let images = marginal_batch(bi, prefix, &suffixes, strict)?;
    let scores: Vec<(f64, f64)> = images
        .par_iter()
        .zip(trains.par_iter())
        .map(|(img, train)| {
            let t = resample(pump_intensity, &imaging_geometry(train)?, img.grid, img.origin)?;
            Ok((ncc(img, &t)?, sharpness(img)))
        })
        .collect::<Result<_>>()?;
    let nz = z1_range.len();
    let results = aperture_diameters
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let row = &scores[i * nz..(i + 1) * nz];
            let metric_curve: Vec<(f64, f64)> = z1_range.iter().zip(row).map(|(z, s)| (*z, s.0)).collect();
            let (best_z1, depth_of_focus) = best_and_depth(&metric_curve);
            FocusScanResult {
                aperture_diameter_m: d,
                z1_samples: z1_range.to_vec(),
                metric_curve,
                sharpness: row.iter().map(|s| s.1).collect(),
                best_z1,
                depth_of_focus,
            }
        })
        .collect();
    let images = images.into_iter().map(|m| m.normalized(crate::field::Normalization::PeakOne)).collect();
    Ok((results, images))
}

/// Argmax of the curve (first on ties) and the width of the contiguous
/// region around it where the metric stays at or above `0.9 max`, with
/// linear interpolation of the crossings.
pub fn best_and_depth(curve: &[(f64, f64)]) -> (f64, f64) {
    let (ib, &(zb, mb)) = curve
        .iter()
        .enumerate()
        .fold((0, &curve[0]), |best, (i, p)| if p.1 > best.1 .1 { (i, p) } else { best });
    let level = 0.9 * mb;
    let cross = |i_in: usize, i_out: usize| {
        let (z0, m0) = curve[i_in];
        let (z1, m1) = curve[i_out];
        if m0 == m1 {
            z0
        } else {
            z0 + (level - m0) / (m1 - m0) * (z1 - z0)
        }
    };
    let mut lo = ib;
    while lo > 0 && curve[lo - 1].1 >= level {
        lo -= 1;
    }
    let z_lo = if lo > 0 { cross(lo, lo - 1) } else { curve[0].0 };
    let mut hi = ib;
    while hi + 1 < curve.len() && curve[hi + 1].1 >= level {
        hi += 1;
    }
    let z_hi = if hi + 1 < curve.len() { cross(hi, hi + 1) } else { curve[hi].0 };
    (zb, (z_hi - z_lo).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid2D;

    fn spot(cx: f64, cy: f64) -> IntensityMap {
        let g = Grid2D::position(64, 1.0).unwrap();
        let v = Array2::from_shape_fn((64, 64), |(r, c)| {
            (-((g.coord(c) - cx).powi(2) + (g.coord(r) - cy).powi(2)) / 8.0).exp()
        });
        IntensityMap::new(g, [0.0, 0.0], v).unwrap()
    }

    #[test]
    fn ncc_basics() {
        let a = spot(0.0, 0.0);
        assert!((ncc(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let peak = a.peak();
        let neg = IntensityMap::new(a.grid, a.origin, a.values.mapv(|v| peak - v)).unwrap();
        assert!((ncc(&a, &neg).unwrap() + 1.0).abs() < 1e-12);
        let b = spot(15.0, 15.0);
        let v = ncc(&spot(-15.0, -15.0), &b).unwrap();
        assert!(v < 0.0 && v.abs() < 0.2, "{v}");
        let flat = IntensityMap::new(a.grid, a.origin, Array2::from_elem((64, 64), 2.0)).unwrap();
        assert_eq!(ncc(&a, &flat).unwrap_err().kind(), "degenerate-image");
    }

    #[test]
    fn uniform_ring_is_m0() {
        let g = Grid2D::position(128, 1.0).unwrap();
        let v = Array2::from_shape_fn((128, 128), |(r, c)| {
            let rho = g.coord(c).hypot(g.coord(r));
            (-(rho - 30.0).powi(2) / 10.0).exp()
        });
        let h = azimuthal_harmonics(&IntensityMap::new(g, [0.0; 2], v).unwrap(), [0.0, 0.0]).unwrap();
        assert!(h[0] / h.iter().sum::<f64>() >= 0.95);
        assert!(azimuthal_harmonics(&spot(0.0, 0.0), [100.0, 0.0]).is_err());
    }

    #[test]
    fn depth_interpolates_crossings() {
        let curve = vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)];
        let (b, d) = best_and_depth(&curve);
        assert_eq!(b, 1.0);
        assert!((d - 0.2).abs() < 1e-12);
    }

    #[test]
    fn magnification_of_the_preset_train() {
        let ap = ApertureSpec::new(100e-6, [4e-3, 0.0]).unwrap();
        for z1 in [0.06, 0.1, 0.2] {
            let g = imaging_geometry(&OpticalTrain::fourier_imaging(0.05, ap, 0.1, z1)).unwrap();
            assert!((g.magnification + 2.0).abs() < 1e-12);
        }
    }
}
