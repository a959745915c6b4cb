//! Forked phase holograms and first-order (phase-flattening) readout.
//!
//! A fork of order `l` has phase `-l phi + 2 pi x / period`. With OAM
//! written as `exp(-i l phi)` (see [`crate::modes`]) it adds `l` units of
//! OAM to the first order, so an `LG^{+3}` beam read out on an `l = -3` fork
//! comes out flat-phased with a bright on-axis spot.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::biphoton::CoherentComponents;
use crate::error::{Error, Result};
use crate::field::{ComplexField, Domain, Grid2D, IntensityMap};

/// Blazed fork grating sampled on a position grid, centered on the grid.
#[derive(Clone, Debug)]
pub struct ForkHologram {
    pub order: i32,
    pub period_m: f64,
    pub grid: Grid2D,
    pub transmission: Array2<Complex64>,
}

pub fn fork_hologram(l: i32, period_m: f64, grid: Grid2D) -> Result<ForkHologram> {
    if grid.domain() != Domain::Position {
        return Err(Error::Domain("holograms are defined in position space".into()));
    }
    if !(period_m >= 4.0 * grid.pitch()) {
        return Err(Error::GratingResolution(format!(
            "grating period {:.2} um is under 4 samples of {:.2} um",
            period_m * 1e6,
            grid.pitch() * 1e6
        )));
    }
    let transmission = Array2::from_shape_fn((grid.n(), grid.n()), |(r, c)| {
        let x = grid.coord(c);
        let y = grid.coord(r);
        Complex64::from_polar(1.0, -(l as f64) * y.atan2(x) + 2.0 * PI * x / period_m)
    });
    Ok(ForkHologram { order: l, period_m, grid, transmission })
}

impl ForkHologram {
    /// OAM added to the first order, measured as minus the phase winding
    /// (in turns) of the dislocation on a square loop around the center.
    pub fn winding_number(&self) -> f64 {
        let n = self.grid.n();
        let c = n / 2;
        let h = n / 4;
        let mut loop_idx = Vec::new();
        for i in c - h..c + h {
            loop_idx.push((c - h, i));
        }
        for i in c - h..c + h {
            loop_idx.push((i, c + h));
        }
        for i in (c - h + 1..=c + h).rev() {
            loop_idx.push((c + h, i));
        }
        for i in (c - h + 1..=c + h).rev() {
            loop_idx.push((i, c - h));
        }
        // strip the grating so only the dislocation winds
        let g = self.grid;
        let flat = |(r, col): (usize, usize)| {
            self.transmission[[r, col]] * Complex64::from_polar(1.0, -2.0 * PI * g.coord(col) / self.period_m)
        };
        let mut total = 0.0;
        for k in 0..loop_idx.len() {
            let a = flat(loop_idx[k]);
            let b = flat(loop_idx[(k + 1) % loop_idx.len()]);
            total += (b * a.conj()).arg();
        }
        -total / (2.0 * PI)
    }

    /// Momentum offset of the first order (rad/m, along x).
    pub fn carrier_offset(&self) -> f64 {
        2.0 * PI / self.period_m
    }
}

/// Readout of one coherent component: the windowed first-order spectrum,
/// and the fraction of its spectral power falling outside the window.
struct OrderWindow {
    values: Array2<Complex64>,
    outside: f64,
    total: f64,
}

fn window_geometry(holo: &ForkHologram) -> (usize, f64, f64) {
    let dq = holo.grid.conjugate().pitch();
    let offset = holo.carrier_offset() / dq;
    let radius = 0.5 * offset;
    let size = ((2.0 * radius).ceil() as usize).next_power_of_two().max(16);
    (size, offset, radius)
}

fn first_order_window(field: &ComplexField, holo: &ForkHologram) -> Result<OrderWindow> {
    let f = field.in_domain(Domain::Position)?;
    if f.grid != holo.grid {
        return Err(Error::ShapeMismatch("component and hologram grids differ".into()));
    }
    let mut modulated = f.clone();
    modulated.values.zip_mut_with(&holo.transmission, |a, t| *a *= t);
    let spec = modulated.to_momentum()?;
    let (size, offset, radius) = window_geometry(holo);
    let n = holo.grid.n();
    let ci = (n / 2) as f64;
    let cc = ci + offset;
    let r2 = radius * radius;
    let mut outside = 0.0;
    let mut total = 0.0;
    for ((r, c), v) in spec.values.indexed_iter() {
        let p = v.norm_sqr();
        total += p;
        let (dr, dc) = (r as f64 - ci, c as f64 - cc);
        if dr * dr + dc * dc > r2 {
            outside += p;
        }
    }
    let half = (size / 2) as isize;
    let c0 = cc.round() as isize;
    let r0 = ci as isize;
    let values = Array2::from_shape_fn((size, size), |(r, c)| {
        let (sr, sc) = (r0 + r as isize - half, c0 + c as isize - half);
        let (dr, dc) = (sr as f64 - ci, sc as f64 - cc);
        if sr < 0 || sc < 0 || sr >= n as isize || sc >= n as isize || dr * dr + dc * dc > r2 {
            Complex64::new(0.0, 0.0)
        } else {
            spec.values[[sr as usize, sc as usize]]
        }
    });
    Ok(OrderWindow { values, outside, total })
}

/// Grid of the first-order readout plane behind a Fourier lens of focal
/// length `readout_distance_m`.
fn readout_grid(holo: &ForkHologram, wavelength_m: f64, readout_distance_m: f64) -> Result<Grid2D> {
    let (size, _, _) = window_geometry(holo);
    let dq = holo.grid.conjugate().pitch();
    Grid2D::position(size, readout_distance_m * dq * wavelength_m / (2.0 * PI))
}

/// Maximum fraction of spectral power allowed outside the first-order
/// window before the orders are considered overlapping.
pub const OVERLAP_TOLERANCE: f64 = 0.05;

/// Coherent first-order field of one component, at the readout plane.
pub fn first_order_field(field: &ComplexField, holo: &ForkHologram, readout_distance_m: f64) -> Result<ComplexField> {
    let w = first_order_window(field, holo)?;
    check_overlap(w.outside, w.total)?;
    let grid = readout_grid(holo, field.wavelength_m, readout_distance_m)?;
    let frame = readout_frame(field, holo, readout_distance_m);
    ComplexField::new(grid, frame, w.values, field.wavelength_m)
}

fn readout_frame(field: &ComplexField, holo: &ForkHologram, readout_distance_m: f64) -> crate::field::Frame {
    let k = field.wavenumber();
    let qx = field.frame.carrier[0] + holo.carrier_offset();
    let qy = field.frame.carrier[1];
    crate::field::Frame { origin: [readout_distance_m * qx / k, readout_distance_m * qy / k], carrier: [0.0, 0.0] }
}

fn check_overlap(outside: f64, total: f64) -> Result<()> {
    if total > 0.0 && outside > OVERLAP_TOLERANCE * total {
        return Err(Error::OrderOverlap(format!(
            "{:.1}% of the diffracted power falls outside the first-order window; increase the grating frequency or shrink the beam",
            100.0 * outside / total
        )));
    }
    Ok(())
}

/// Hologram, far-field readout, first-order window, `|.|^2`, summed over
/// components with their weights.
pub fn diffract_first_order(
    components: &dyn CoherentComponents,
    holo: &ForkHologram,
    readout_distance_m: f64,
) -> Result<IntensityMap> {
    let count = components.count();
    if count == 0 {
        return Err(Error::SamplingMiss("no components to read out".into()));
    }
    let (size, _, _) = window_geometry(holo);
    let chunks: Vec<std::ops::Range<usize>> = (0..count).step_by(8).map(|s| s..(s + 8).min(count)).collect();
    let partials: Vec<Result<(Array2<f64>, f64, f64, Option<ComplexField>)>> = chunks
        .par_iter()
        .map(|range| {
            let mut acc = Array2::<f64>::zeros((size, size));
            let (mut out, mut tot) = (0.0, 0.0);
            let mut probe = None;
            for i in range.clone() {
                let (w, f) = components.component(i)?;
                let win = first_order_window(&f, holo)?;
                acc.zip_mut_with(&win.values, |a, v| *a += w * v.norm_sqr());
                out += w * win.outside;
                tot += w * win.total;
                if probe.is_none() {
                    probe = Some(f);
                }
            }
            Ok((acc, out, tot, probe))
        })
        .collect();
    let mut image = Array2::<f64>::zeros((size, size));
    let (mut outside, mut total) = (0.0, 0.0);
    let mut first = None;
    for p in partials {
        let (a, o, t, probe) = p?;
        image += &a;
        outside += o;
        total += t;
        if first.is_none() {
            first = probe;
        }
    }
    check_overlap(outside, total)?;
    let f = first.expect("at least one component");
    let grid = readout_grid(holo, f.wavelength_m, readout_distance_m)?;
    IntensityMap::new(grid, readout_frame(&f, holo, readout_distance_m).origin, image)
}

/// On-axis sample of a readout image over its total: the brightness of
/// the center relative to the whole first order.
pub fn central_fraction(img: &IntensityMap) -> f64 {
    let t = img.total();
    if t > 0.0 {
        img.center_value() / t
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biphoton::Coherent;
    use crate::modes::lg_mode_at;

    fn grid() -> Grid2D {
        Grid2D::position(256, 10e-6).unwrap()
    }

    #[test]
    fn plain_grating_and_unit_modulus() {
        let h = fork_hologram(0, 80e-6, grid()).unwrap();
        for v in h.transmission.iter() {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        // period 8 samples: phase depends on x only
        assert!((h.transmission[[3, 10]] - h.transmission[[200, 10]]).norm() < 1e-12);
        assert!((h.transmission[[3, 10]] - h.transmission[[3, 18]]).norm() < 1e-9);
    }

    #[test]
    fn under_resolved_grating() {
        assert_eq!(fork_hologram(1, 30e-6, grid()).unwrap_err().kind(), "grating-resolution");
    }

    #[test]
    fn winding_counts_order() {
        for l in [-3, 0, 1, 3] {
            let h = fork_hologram(l, 80e-6, grid()).unwrap();
            assert!((h.winding_number() - l as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn flattening_restores_the_center() {
        let g = grid();
        let beam = lg_mode_at(0, 3, 300e-6, g, 810e-9).unwrap();
        let h = fork_hologram(-3, 80e-6, g).unwrap();
        let img = diffract_first_order(&Coherent(beam.clone()), &h, 0.2).unwrap();
        assert!(img.center_value() >= 0.5 * img.peak());
        let wrong = diffract_first_order(&Coherent(beam), &fork_hologram(3, 80e-6, g).unwrap(), 0.2).unwrap();
        assert!(wrong.center_value() < 0.01 * wrong.peak());
    }

    #[test]
    fn overlap_is_detected() {
        let g = grid();
        let beam = lg_mode_at(0, 0, 12e-6 * 4.0, g, 810e-9).unwrap();
        let h = fork_hologram(0, 80e-6, g).unwrap();
        assert_eq!(diffract_first_order(&Coherent(beam), &h, 0.2).unwrap_err().kind(), "order-overlap");
    }
}
