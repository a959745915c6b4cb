//! Biphoton mode function, angular spectrum, and incoherent signal marginals.
//!
//! The mode function is `Phi(q_s, q_i) = E0(q_s + q_i) w(q_s, q_i)` with `w`
//! the phase-matching weight. It is sampled as one signal-plane field per
//! idler momentum sample. Idler samples lie on a sub-lattice of the signal
//! momentum lattice, shifted by `-carrier`, so `q_s + q_i` always lands on a
//! pump spectrum sample and no interpolation is needed.
//!
//! The signal window is a moving frame with carrier `q_c`: signal momenta
//! cover `q_c + kappa` for the grid's `kappa`. Pointing `q_c` at an aperture
//! on the emission ring lets a modest grid resolve a small off-axis aperture.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::crystal::{annulus_bounds, ring_radius, ring_scan_step, sinc, CrystalParams, PhaseMatcher};
use crate::error::{Error, Result};
use crate::field::{ComplexField, Domain, Frame, Grid2D, IntensityMap, Normalization};
use crate::modes::{superpose_at, PumpSpec};
use crate::propagation::{run_elements, Element, OpticalTrain};

/// Uniform idler quadrature, clipped to the phase-matched annulus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdlerSampling {
    /// Samples per axis of the idler box; must divide the grid size.
    pub samples_per_axis: usize,
    /// Keep idler momenta whose anti-correlated `sinc^2` is at least this.
    pub threshold: f64,
}

impl Default for IdlerSampling {
    fn default() -> Self {
        IdlerSampling { samples_per_axis: 64, threshold: 0.05 }
    }
}

impl IdlerSampling {
    pub fn stride(&self, n: usize) -> Result<usize> {
        let s = self.samples_per_axis;
        if s == 0 || s > n || n % s != 0 {
            return Err(Error::Domain(format!(
                "idler samples per axis {s} must divide the grid size {n}"
            )));
        }
        Ok(n / s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdlerSample {
    /// Idler transverse momentum (rad/m).
    pub q: [f64; 2],
    /// Lattice offset `m` with `q = -carrier + m dq`.
    pub offset: [isize; 2],
    /// Quadrature weight (rad^2/m^2).
    pub weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BuildOptions {
    /// Signal-window carrier (rad/m).
    pub carrier: [f64; 2],
    /// Keep the `exp(i delta_k L / 2)` factor of the phase-matching weight.
    pub keep_exit_phase: bool,
    pub strict: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { carrier: [0.0, 0.0], keep_exit_phase: true, strict: false }
    }
}

/// Sampled biphoton amplitude. Signal fields are generated on demand from
/// the stored pump spectrum, so memory stays at one pump-sized array no
/// matter how many idler samples are used.
#[derive(Clone, Debug)]
pub struct BiphotonAmplitude {
    signal_grid: Grid2D,
    carrier: [f64; 2],
    signal_wavelength_m: f64,
    pump_spectrum: Array2<Complex64>,
    matcher: PhaseMatcher,
    keep_exit_phase: bool,
    samples: Vec<IdlerSample>,
}

impl BiphotonAmplitude {
    pub fn samples(&self) -> &[IdlerSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Signal momentum grid.
    pub fn signal_grid(&self) -> Grid2D {
        self.signal_grid
    }

    pub fn carrier(&self) -> [f64; 2] {
        self.carrier
    }

    pub fn signal_wavelength_m(&self) -> f64 {
        self.signal_wavelength_m
    }

    pub fn matcher(&self) -> &PhaseMatcher {
        &self.matcher
    }

    /// Total quadrature weight (area of the sampled idler region).
    pub fn total_weight(&self) -> f64 {
        self.samples.iter().map(|s| s.weight).sum()
    }

    /// Same amplitude restricted to the samples at `indices`.
    pub fn subset(&self, indices: &[usize]) -> BiphotonAmplitude {
        let samples = indices.iter().map(|&i| self.samples[i]).collect();
        self.with_samples(samples)
    }

    /// Same amplitude with an explicit list of lattice offsets, each with
    /// weight `weight`.
    pub fn with_offsets(&self, offsets: &[[isize; 2]], weight: f64) -> BiphotonAmplitude {
        let dq = self.signal_grid.pitch();
        let samples = offsets
            .iter()
            .map(|&m| IdlerSample {
                q: [-self.carrier[0] + m[0] as f64 * dq, -self.carrier[1] + m[1] as f64 * dq],
                offset: m,
                weight,
            })
            .collect();
        self.with_samples(samples)
    }

    pub fn with_samples(&self, samples: Vec<IdlerSample>) -> BiphotonAmplitude {
        BiphotonAmplitude {
            signal_grid: self.signal_grid,
            carrier: self.carrier,
            signal_wavelength_m: self.signal_wavelength_m,
            pump_spectrum: self.pump_spectrum.clone(),
            matcher: self.matcher,
            keep_exit_phase: self.keep_exit_phase,
            samples,
        }
    }

    /// Pump momentum amplitude on the signal lattice (axial frame).
    pub fn pump_spectrum(&self) -> ComplexField {
        ComplexField {
            grid: self.signal_grid,
            frame: Frame::axial(),
            values: self.pump_spectrum.clone(),
            wavelength_m: self.signal_wavelength_m / 2.0,
        }
    }

    /// Signal field of idler sample `i` in momentum space at the crystal
    /// exit: `E0(q_s + q_i) w(q_s, q_i)`, zero where any wave is evanescent.
    pub fn signal_field(&self, i: usize) -> ComplexField {
        let s = &self.samples[i];
        let g = self.signal_grid;
        let n = g.n() as isize;
        let e0 = &self.pump_spectrum;
        let values = Array2::from_shape_fn((g.n(), g.n()), |(r, c)| {
            let pr = r as isize + s.offset[1];
            let pc = c as isize + s.offset[0];
            if pr < 0 || pc < 0 || pr >= n || pc >= n {
                return Complex64::new(0.0, 0.0);
            }
            let amp = e0[[pr as usize, pc as usize]];
            if amp.norm_sqr() == 0.0 {
                return amp;
            }
            let qs = [self.carrier[0] + g.coord(c), self.carrier[1] + g.coord(r)];
            match self.matcher.try_delta_k(qs, s.q) {
                Some(dk) => amp * self.weight(dk),
                None => Complex64::new(0.0, 0.0),
            }
        });
        ComplexField {
            grid: g,
            frame: Frame::with_carrier(self.carrier),
            values,
            wavelength_m: self.signal_wavelength_m,
        }
    }

    #[inline]
    fn weight(&self, dk: f64) -> Complex64 {
        if self.keep_exit_phase {
            self.matcher.weight_for(dk)
        } else {
            Complex64::new(sinc(0.5 * dk * self.matcher.length_m), 0.0)
        }
    }
}

/// Carrier pointing at azimuth `azimuth_rad` on the phase-matched ring, and
/// the matching aperture center `z0` downstream of the crystal.
pub fn ring_carrier(crystal: &CrystalParams, z0_m: f64, azimuth_rad: f64) -> Result<([f64; 2], [f64; 2])> {
    let pm = crystal.phase_matcher()?;
    let q0 = ring_radius(crystal, ring_scan_step(&pm))?;
    let k0 = 2.0 * PI / crystal.signal_wavelength_m;
    let (s, c) = azimuth_rad.sin_cos();
    let carrier = [q0 * c, q0 * s];
    let center = [z0_m * carrier[0] / k0, z0_m * carrier[1] / k0];
    Ok((carrier, center))
}

/// Sample the biphoton amplitude. `grid` is the signal grid in either
/// domain; the pump is generated on its position-space twin.
pub fn build_biphoton(
    pump: &PumpSpec,
    crystal: &CrystalParams,
    grid: Grid2D,
    sampling: &IdlerSampling,
    opts: &BuildOptions,
) -> Result<BiphotonAmplitude> {
    let pos = match grid.domain() {
        Domain::Position => grid,
        Domain::Momentum => grid.conjugate(),
    };
    let pm = crystal.phase_matcher()?;
    let pump_field = superpose_at(pump, pos, crystal.pump_wavelength_m)?.to_momentum()?;
    let sg = pump_field.grid;
    let n = sg.n();
    let dq = sg.pitch();
    let stride = sampling.stride(n)? as isize;
    let (lo, hi) = annulus_bounds(crystal, sampling.threshold)?;
    let weight = (stride as f64 * dq).powi(2);
    let half = (n / 2) as isize;
    let mut samples = Vec::new();
    let mut my = -half;
    while my < half {
        let mut mx = -half;
        while mx < half {
            let q = [-opts.carrier[0] + mx as f64 * dq, -opts.carrier[1] + my as f64 * dq];
            let r = q[0].hypot(q[1]);
            if r >= lo && r <= hi {
                samples.push(IdlerSample { q, offset: [mx, my], weight });
            }
            mx += stride;
        }
        my += stride;
    }
    let bi = BiphotonAmplitude {
        signal_grid: sg,
        carrier: opts.carrier,
        signal_wavelength_m: crystal.signal_wavelength_m,
        pump_spectrum: pump_field.values,
        matcher: pm,
        keep_exit_phase: opts.keep_exit_phase,
        samples,
    };
    log::info!("biphoton: {} idler samples in annulus [{lo:.4e}, {hi:.4e}] rad/m", bi.len());
    let signal_power: f64 = if bi.is_empty() {
        0.0
    } else {
        // cheap probe of the brightest candidates
        let probe = bi.len().min(16);
        let step = (bi.len() / probe).max(1);
        (0..bi.len()).step_by(step).map(|i| bi.signal_field(i).power()).sum()
    };
    if signal_power <= 0.0 {
        let msg = format!(
            "no idler sample pairs with the pump spectrum inside the signal window (carrier {:?})",
            opts.carrier
        );
        if opts.strict {
            return Err(Error::SamplingMiss(msg));
        }
        log::warn!("{msg}");
    }
    Ok(bi)
}

/// Fixed-order parallel reduction: items are grouped into chunks of
/// `CHUNK`, each chunk summed sequentially, partial sums combined in order.
const CHUNK: usize = 8;

pub(crate) fn ordered_sum<F>(count: usize, shape: (usize, usize), f: F) -> Result<Array2<f64>>
where
    F: Fn(usize) -> Result<Array2<f64>> + Sync,
{
    let chunks: Vec<std::ops::Range<usize>> =
        (0..count).step_by(CHUNK).map(|s| s..(s + CHUNK).min(count)).collect();
    let partials: Vec<Result<Array2<f64>>> = chunks
        .par_iter()
        .map(|range| {
            let mut acc = Array2::<f64>::zeros(shape);
            for i in range.clone() {
                acc += &f(i)?;
            }
            Ok(acc)
        })
        .collect();
    let mut total = Array2::<f64>::zeros(shape);
    for p in partials {
        total += &p?;
    }
    Ok(total)
}

/// Weighted `sum_i w_i |Phi_i(q_s)|^2`, peak-normalized.
pub fn angular_spectrum(bi: &BiphotonAmplitude) -> Result<IntensityMap> {
    Ok(angular_spectrum_raw(bi)?.normalized(Normalization::PeakOne))
}

pub fn angular_spectrum_raw(bi: &BiphotonAmplitude) -> Result<IntensityMap> {
    let g = bi.signal_grid;
    let sum = ordered_sum(bi.len(), (g.n(), g.n()), |i| {
        let w = bi.samples[i].weight;
        Ok(bi.signal_field(i).values.mapv(|v| w * v.norm_sqr()))
    })?;
    IntensityMap::new(g, bi.carrier, sum)
}

/// Angular spectrum evaluated directly as a sum over pump lattice momenta,
/// `R(q_s) = sum_p |E0(p)|^2 dq^2 sinc^2(delta_k(q_s, p - q_s) L / 2)`, on an
/// arbitrary signal momentum grid centered at `carrier`. If `annulus` is
/// given, only idler momenta with `|p - q_s|` inside it contribute. Raw
/// normalization.
pub fn angular_spectrum_direct(
    pump_spectrum: &ComplexField,
    matcher: &PhaseMatcher,
    grid: Grid2D,
    carrier: [f64; 2],
    annulus: Option<(f64, f64)>,
) -> Result<IntensityMap> {
    if grid.domain() != Domain::Momentum {
        return Err(Error::Domain("direct angular spectrum needs a momentum grid".into()));
    }
    let values = angular_spectrum_at(pump_spectrum, matcher, grid.n(), annulus, |r, c| {
        [carrier[0] + grid.coord(c), carrier[1] + grid.coord(r)]
    })?;
    IntensityMap::new(grid, carrier, values)
}

/// Direct angular spectrum at the signal momenta `q_of(row, col)` of an
/// `n x n` image.
pub fn angular_spectrum_at<F>(
    pump_spectrum: &ComplexField,
    matcher: &PhaseMatcher,
    n: usize,
    annulus: Option<(f64, f64)>,
    q_of: F,
) -> Result<Array2<f64>>
where
    F: Fn(usize, usize) -> [f64; 2] + Sync,
{
    if pump_spectrum.grid.domain() != Domain::Momentum {
        return Err(Error::Domain("pump spectrum must be in momentum space".into()));
    }
    let pg = pump_spectrum.grid;
    let peak = pump_spectrum.values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let cell = pg.cell();
    let pump: Vec<([f64; 2], f64)> = pump_spectrum
        .values
        .indexed_iter()
        .filter(|(_, v)| v.norm_sqr() > 1e-14 * peak)
        .map(|((r, c), v)| ([pg.coord(c), pg.coord(r)], v.norm_sqr() * cell))
        .collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|r| {
            (0..n)
                .map(|c| {
                    let qs = q_of(r, c);
                    pump.iter()
                        .map(|(p, e)| {
                            let qi = [p[0] - qs[0], p[1] - qs[1]];
                            if let Some((lo, hi)) = annulus {
                                let ri = qi[0].hypot(qi[1]);
                                if ri < lo || ri > hi {
                                    return 0.0;
                                }
                            }
                            match matcher.try_delta_k(qs, qi) {
                                Some(dk) => e * sinc(0.5 * dk * matcher.length_m).powi(2),
                                None => 0.0,
                            }
                        })
                        .sum()
                })
                .collect()
        })
        .collect();
    Ok(Array2::from_shape_fn((n, n), |(r, c)| rows[r][c]))
}

/// A family of mutually incoherent coherent fields with weights.
pub trait CoherentComponents: Sync {
    fn count(&self) -> usize;
    fn component(&self, i: usize) -> Result<(f64, ComplexField)>;
}

impl CoherentComponents for BiphotonAmplitude {
    fn count(&self) -> usize {
        self.len()
    }

    fn component(&self, i: usize) -> Result<(f64, ComplexField)> {
        Ok((self.samples[i].weight, self.signal_field(i)))
    }
}

/// Biphoton components carried through a sequence of elements.
pub struct Propagated<'a> {
    pub biphoton: &'a BiphotonAmplitude,
    pub elements: Vec<Element>,
}

impl<'a> Propagated<'a> {
    pub fn new(biphoton: &'a BiphotonAmplitude, train: &OpticalTrain) -> Self {
        Propagated { biphoton, elements: train.elements.clone() }
    }
}

impl CoherentComponents for Propagated<'_> {
    fn count(&self) -> usize {
        self.biphoton.len()
    }

    fn component(&self, i: usize) -> Result<(f64, ComplexField)> {
        let f = self.biphoton.signal_field(i).to_position()?;
        Ok((self.biphoton.samples[i].weight, run_elements(&f, &self.elements)?))
    }
}

/// A single coherent field, weight 1.
pub struct Coherent(pub ComplexField);

impl CoherentComponents for Coherent {
    fn count(&self) -> usize {
        1
    }

    fn component(&self, _i: usize) -> Result<(f64, ComplexField)> {
        Ok((1.0, self.0.clone()))
    }
}

/// `sum_i w_i |U_i|^2` in position space, raw normalization.
pub fn incoherent_sum(components: &dyn CoherentComponents) -> Result<IntensityMap> {
    let count = components.count();
    if count == 0 {
        return Err(Error::SamplingMiss("no components to sum".into()));
    }
    let (_, first) = components.component(0)?;
    let first = first.in_domain(Domain::Position)?;
    let n = first.grid.n();
    let sum = ordered_sum(count, (n, n), |i| {
        let (w, f) = components.component(i)?;
        let f = f.in_domain(Domain::Position)?;
        Ok(f.values.mapv(|v| w * v.norm_sqr()))
    })?;
    IntensityMap::new(first.grid, first.frame.origin, sum)
}

/// `sum_i w_i U_i`: the (unphysical) coherent sum, kept as a control.
pub fn coherent_sum(components: &dyn CoherentComponents) -> Result<ComplexField> {
    let count = components.count();
    let (w0, first) = components.component(0)?;
    let mut acc = first.in_domain(Domain::Position)?;
    acc.scale(Complex64::new(w0, 0.0));
    for i in 1..count {
        let (w, f) = components.component(i)?;
        let f = f.in_domain(Domain::Position)?;
        acc.values.zip_mut_with(&f.values, |a, b| *a += w * b);
    }
    Ok(acc)
}

/// Signal marginal after `train`, raw normalization.
pub fn marginal_image_raw(bi: &BiphotonAmplitude, train: &OpticalTrain, strict: bool) -> Result<IntensityMap> {
    let img = incoherent_sum(&Propagated::new(bi, train))?;
    check_survival(bi, std::slice::from_ref(&img), strict)?;
    Ok(img)
}

/// Signal marginal after `train`, peak-normalized.
pub fn marginal_image(bi: &BiphotonAmplitude, train: &OpticalTrain) -> Result<IntensityMap> {
    Ok(marginal_image_raw(bi, train, false)?.normalized(Normalization::PeakOne))
}

fn input_power(bi: &BiphotonAmplitude) -> f64 {
    (0..bi.len()).map(|i| bi.samples[i].weight * bi.signal_field(i).power()).sum()
}

fn check_survival(bi: &BiphotonAmplitude, images: &[IntensityMap], strict: bool) -> Result<()> {
    let p_in = input_power(bi);
    for img in images {
        let p_out = img.power();
        if !(p_out > 1e-6 * p_in) {
            let msg = format!("only {:.2e} of the signal power reaches the detector", p_out / p_in.max(f64::MIN_POSITIVE));
            if strict {
                return Err(Error::SamplingMiss(msg));
            }
            log::warn!("{msg}");
        }
    }
    Ok(())
}

/// Idler samples carried through a shared prefix at a time by
/// [`marginal_batch`]; bounds the cache to this many fields.
const BATCH_BLOCK: usize = 64;

/// Marginals for many trains sharing a common `prefix`. Components are
/// carried through `prefix` a block at a time; each suffix then sums the
/// block in sample order, so every image is summed in the same fixed order
/// regardless of blocking. Raw normalization.
pub fn marginal_batch(
    bi: &BiphotonAmplitude,
    prefix: &[Element],
    suffixes: &[Vec<Element>],
    strict: bool,
) -> Result<Vec<IntensityMap>> {
    if bi.is_empty() {
        return Err(Error::SamplingMiss("no idler samples".into()));
    }
    let mut acc: Vec<Option<(Grid2D, [f64; 2], Array2<f64>)>> = vec![None; suffixes.len()];
    for start in (0..bi.len()).step_by(BATCH_BLOCK) {
        let block: Vec<(f64, ComplexField)> = (start..(start + BATCH_BLOCK).min(bi.len()))
            .into_par_iter()
            .map(|i| {
                let f = bi.signal_field(i).to_position()?;
                Ok((bi.samples[i].weight, run_elements(&f, prefix)?))
            })
            .collect::<Result<_>>()?;
        acc.par_iter_mut().zip(suffixes.par_iter()).try_for_each(|(slot, suffix)| -> Result<()> {
            for (w, f) in &block {
                let out = run_elements(f, suffix)?;
                let inten = out.values.mapv(|v| w * v.norm_sqr());
                match slot.as_mut() {
                    Some((_, _, a)) => *a += &inten,
                    None => *slot = Some((out.grid, out.frame.origin, inten)),
                }
            }
            Ok(())
        })?;
    }
    let images: Vec<IntensityMap> = acc
        .into_iter()
        .map(|slot| {
            let (g, o, v) = slot.expect("nonempty");
            IntensityMap::new(g, o, v)
        })
        .collect::<Result<_>>()?;
    check_survival(bi, &images, strict)?;
    Ok(images)
}

/// Weighted azimuthal-harmonic power of coherent components.
#[derive(Clone, Debug, PartialEq)]
pub struct OamSpectrum {
    pub l: Vec<i32>,
    pub power: Vec<f64>,
}

impl OamSpectrum {
    pub fn total(&self) -> f64 {
        self.power.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        let t = self.total();
        self.l.iter().zip(&self.power).map(|(l, p)| *l as f64 * p).sum::<f64>() / t
    }

    pub fn fraction(&self, l: i32) -> f64 {
        self.l.iter().position(|&x| x == l).map_or(0.0, |i| self.power[i] / self.total())
    }
}

pub const OAM_MAX: i32 = 8;
const OAM_ANGLES: usize = 128;

/// Bilinear sample of a complex grid at fractional index `(fr, fc)`.
fn bilinear(values: &Array2<Complex64>, fr: f64, fc: f64) -> Complex64 {
    let n = values.nrows();
    let r0 = fr.floor();
    let c0 = fc.floor();
    let (tr, tc) = (fr - r0, fc - c0);
    let get = |r: isize, c: isize| {
        if r < 0 || c < 0 || r as usize >= n || c as usize >= n {
            Complex64::new(0.0, 0.0)
        } else {
            values[[r as usize, c as usize]]
        }
    };
    let (r0, c0) = (r0 as isize, c0 as isize);
    get(r0, c0) * ((1.0 - tr) * (1.0 - tc))
        + get(r0, c0 + 1) * ((1.0 - tr) * tc)
        + get(r0 + 1, c0) * (tr * (1.0 - tc))
        + get(r0 + 1, c0 + 1) * (tr * tc)
}

/// Azimuthal decomposition of each component envelope about `center`
/// (grid-relative meters), weight-summed, for `l` in `[-8, 8]`. A field
/// `exp(-i l phi)` reports at `+l`.
pub fn oam_spectrum(components: &dyn CoherentComponents, center: [f64; 2]) -> Result<OamSpectrum> {
    let ls: Vec<i32> = (-OAM_MAX..=OAM_MAX).collect();
    let phis: Vec<f64> = (0..OAM_ANGLES).map(|a| 2.0 * PI * a as f64 / OAM_ANGLES as f64).collect();
    let basis: Vec<Vec<Complex64>> =
        ls.iter().map(|&l| phis.iter().map(|&p| Complex64::from_polar(1.0, l as f64 * p)).collect()).collect();
    let count = components.count();
    let per: Vec<Result<Vec<f64>>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let (w, f) = components.component(i)?;
            let f = f.in_domain(Domain::Position)?;
            let g = f.grid;
            let half = 0.5 * g.window();
            if center[0].abs() >= half || center[1].abs() >= half {
                return Err(Error::Domain(format!("OAM center {center:?} lies outside the grid")));
            }
            let p = g.pitch();
            let r_max = half - center[0].abs().max(center[1].abs()) - p;
            let nr = (r_max / p).floor().max(0.0) as usize;
            let mid = (g.n() / 2) as f64;
            let mut out = vec![0.0; ls.len()];
            let mut ring = vec![Complex64::new(0.0, 0.0); OAM_ANGLES];
            for k in 0..nr {
                let r = (k as f64 + 0.5) * p;
                for (a, &phi) in phis.iter().enumerate() {
                    let x = center[0] + r * phi.cos();
                    let y = center[1] + r * phi.sin();
                    ring[a] = bilinear(&f.values, y / p + mid, x / p + mid);
                }
                for (j, b) in basis.iter().enumerate() {
                    let c: Complex64 =
                        ring.iter().zip(b).map(|(u, e)| u * e).sum::<Complex64>() / OAM_ANGLES as f64;
                    out[j] += w * c.norm_sqr() * 2.0 * PI * r * p;
                }
            }
            Ok(out)
        })
        .collect();
    let mut power = vec![0.0; ls.len()];
    for v in per {
        for (a, b) in power.iter_mut().zip(v?) {
            *a += b;
        }
    }
    Ok(OamSpectrum { l: ls, power })
}
