//! Type-I phase matching in a uniaxial crystal.
//!
//! The pump is extraordinary at the fixed cut angle, signal and idler are
//! ordinary. Walk-off and the dependence of the pump index on its own
//! transverse wavevector are neglected. Transverse momentum is conserved
//! exactly, so the pump component that feeds a pair `(q_s, q_i)` is
//! `q_s + q_i`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// `n^2(lambda) = a + b / (lambda^2 - c) - d lambda^2`, lambda in micrometers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sellmeier {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Sellmeier {
    pub fn index(&self, lambda_um: f64) -> f64 {
        let l2 = lambda_um * lambda_um;
        (self.a + self.b / (l2 - self.c) - self.d * l2).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarization {
    Ordinary,
    Extraordinary,
}

/// Ordinary and extraordinary dispersion of a uniaxial crystal.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexModel {
    pub name: String,
    pub ordinary: Sellmeier,
    pub extraordinary: Sellmeier,
    /// Validity range, micrometers.
    pub range_um: (f64, f64),
}

impl IndexModel {
    /// beta-barium borate, Eimerl et al. (1987) coefficients.
    pub fn bbo() -> Self {
        IndexModel {
            name: "bbo".into(),
            ordinary: Sellmeier { a: 2.7359, b: 0.01878, c: 0.01822, d: 0.01354 },
            extraordinary: Sellmeier { a: 2.3753, b: 0.01224, c: 0.01667, d: 0.01516 },
            range_um: (0.20, 1.10),
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "bbo" => Some(Self::bbo()),
            _ => None,
        }
    }

    pub fn principal_index(&self, wavelength_m: f64, pol: Polarization) -> Result<f64> {
        let um = wavelength_m * 1e6;
        if !(um >= self.range_um.0 && um <= self.range_um.1) {
            return Err(Error::DispersionRange(format!(
                "{:.1} nm is outside the {} model range {:.0}-{:.0} nm",
                wavelength_m * 1e9,
                self.name,
                self.range_um.0 * 1e3,
                self.range_um.1 * 1e3
            )));
        }
        Ok(match pol {
            Polarization::Ordinary => self.ordinary.index(um),
            Polarization::Extraordinary => self.extraordinary.index(um),
        })
    }
}

/// Refractive index seen by a wave of the given polarization travelling at
/// `angle_rad` to the optic axis.
pub fn refractive_index(
    model: &IndexModel,
    wavelength_m: f64,
    pol: Polarization,
    angle_rad: f64,
) -> Result<f64> {
    let no = model.principal_index(wavelength_m, Polarization::Ordinary)?;
    match pol {
        Polarization::Ordinary => Ok(no),
        Polarization::Extraordinary => {
            let ne = model.principal_index(wavelength_m, Polarization::Extraordinary)?;
            let (s, c) = angle_rad.sin_cos();
            Ok(1.0 / (c * c / (no * no) + s * s / (ne * ne)).sqrt())
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrystalParams {
    pub length_m: f64,
    pub cut_angle_rad: f64,
    pub pump_wavelength_m: f64,
    pub signal_wavelength_m: f64,
    pub idler_wavelength_m: f64,
    pub index_model: IndexModel,
}

impl Default for CrystalParams {
    /// 5 mm BBO cut at 29.97 degrees, 405 nm pumping degenerate 810 nm pairs.
    fn default() -> Self {
        CrystalParams {
            length_m: 5e-3,
            cut_angle_rad: 29.97f64.to_radians(),
            pump_wavelength_m: 405e-9,
            signal_wavelength_m: 810e-9,
            idler_wavelength_m: 810e-9,
            index_model: IndexModel::bbo(),
        }
    }
}

impl CrystalParams {
    /// Invariant violations as `(field, message)` pairs.
    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        if !(self.length_m > 0.0 && self.length_m.is_finite()) {
            out.push(("crystal.length_mm".into(), "crystal length must be positive".into()));
        }
        let (p, s, i) = (self.pump_wavelength_m, self.signal_wavelength_m, self.idler_wavelength_m);
        if !(p > 0.0 && s > 0.0 && i > 0.0) {
            out.push(("crystal.pump_nm".into(), "wavelengths must be positive".into()));
        } else {
            let mismatch = (1.0 / p - 1.0 / s - 1.0 / i).abs() * p;
            if mismatch > 1e-9 {
                out.push((
                    "crystal.signal_nm".into(),
                    format!("energy conservation violated: relative mismatch {mismatch:.3e}"),
                ));
            }
        }
        for (key, wl) in [("crystal.pump_nm", p), ("crystal.signal_nm", s), ("crystal.idler_nm", i)] {
            if wl > 0.0 {
                if let Err(e) = self.index_model.principal_index(wl, Polarization::Ordinary) {
                    out.push((key.into(), e.to_string()));
                }
            }
        }
        out
    }

    pub fn phase_matcher(&self) -> Result<PhaseMatcher> {
        if let Some((field, msg)) = self.violations().into_iter().next() {
            return Err(Error::Domain(format!("{field}: {msg}")));
        }
        let m = &self.index_model;
        let np = refractive_index(m, self.pump_wavelength_m, Polarization::Extraordinary, self.cut_angle_rad)?;
        let ns = refractive_index(m, self.signal_wavelength_m, Polarization::Ordinary, 0.0)?;
        let ni = refractive_index(m, self.idler_wavelength_m, Polarization::Ordinary, 0.0)?;
        Ok(PhaseMatcher {
            k_pump: 2.0 * PI * np / self.pump_wavelength_m,
            k_signal: 2.0 * PI * ns / self.signal_wavelength_m,
            k_idler: 2.0 * PI * ni / self.idler_wavelength_m,
            length_m: self.length_m,
        })
    }
}

/// In-medium wavenumbers resolved once for fast evaluation over grids.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseMatcher {
    pub k_pump: f64,
    pub k_signal: f64,
    pub k_idler: f64,
    pub length_m: f64,
}

#[inline]
fn kz(k: f64, q: [f64; 2]) -> Option<f64> {
    let t = k * k - q[0] * q[0] - q[1] * q[1];
    (t > 0.0).then(|| t.sqrt())
}

impl PhaseMatcher {
    /// Longitudinal mismatch `k_pz(q_s + q_i) - k_sz(q_s) - k_iz(q_i)`.
    /// `None` when any of the three waves is evanescent.
    #[inline]
    pub fn try_delta_k(&self, qs: [f64; 2], qi: [f64; 2]) -> Option<f64> {
        let qp = [qs[0] + qi[0], qs[1] + qi[1]];
        Some(kz(self.k_pump, qp)? - kz(self.k_signal, qs)? - kz(self.k_idler, qi)?)
    }

    pub fn delta_k(&self, qs: [f64; 2], qi: [f64; 2]) -> Result<f64> {
        self.try_delta_k(qs, qi).ok_or_else(|| {
            Error::Evanescent(format!("q_s = {qs:?}, q_i = {qi:?} exceed the in-medium wavenumber"))
        })
    }

    #[inline]
    pub fn weight_for(&self, delta_k: f64) -> Complex64 {
        let x = 0.5 * delta_k * self.length_m;
        Complex64::from_polar(sinc(x), x)
    }

    pub fn weight(&self, qs: [f64; 2], qi: [f64; 2]) -> Result<Complex64> {
        Ok(self.weight_for(self.delta_k(qs, qi)?))
    }

    /// `sinc^2(delta_k L / 2)` along anti-correlated pairs `q_i = -q_s`
    /// at transverse radius `q`.
    pub fn anticorrelated_efficiency(&self, q: f64) -> Option<f64> {
        let dk = self.try_delta_k([q, 0.0], [-q, 0.0])?;
        Some(sinc(0.5 * dk * self.length_m).powi(2))
    }
}

/// `sin(x) / x` with `sinc(0) = 1`.
#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

pub fn delta_k(qs: [f64; 2], qi: [f64; 2], crystal: &CrystalParams) -> Result<f64> {
    crystal.phase_matcher()?.delta_k(qs, qi)
}

/// `sinc(delta_k L / 2) exp(i delta_k L / 2)`.
pub fn phase_matching_weight(
    qs: [f64; 2],
    qi: [f64; 2],
    crystal: &CrystalParams,
) -> Result<Complex64> {
    crystal.phase_matcher()?.weight(qs, qi)
}

/// Cut angle at which the collinear mismatch vanishes, by bisection.
pub fn collinear_phase_matching_angle(crystal: &CrystalParams) -> Result<f64> {
    let mismatch = |theta: f64| -> Result<f64> {
        let c = CrystalParams { cut_angle_rad: theta, ..crystal.clone() };
        c.phase_matcher()?.delta_k([0.0, 0.0], [0.0, 0.0])
    };
    let (mut lo, mut hi) = (0.0, 0.5 * PI);
    let (flo, fhi) = (mismatch(lo)?, mismatch(hi)?);
    if flo.signum() == fhi.signum() {
        return Err(Error::Domain("no collinear phase-matching angle for these wavelengths".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mismatch(mid)?.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Transverse radius (rad/m, in-medium transverse wavevector, equal on both
/// sides of the exit face) that maximizes `sinc^2(delta_k L / 2)` for
/// anti-correlated pairs. Found by a uniform scan with step `step` followed
/// by golden-section refinement inside the best bracket.
pub fn ring_radius(crystal: &CrystalParams, step: f64) -> Result<f64> {
    let pm = crystal.phase_matcher()?;
    let q_max = 0.5 * pm.k_signal.min(pm.k_idler);
    let eff = |q: f64| pm.anticorrelated_efficiency(q).unwrap_or(0.0);
    let steps = (q_max / step).ceil() as usize;
    let mut best = (0usize, eff(0.0));
    for i in 1..=steps {
        let v = eff(i as f64 * step);
        if v > best.1 {
            best = (i, v);
        }
    }
    let mut a = (best.0 as f64 - 1.0).max(0.0) * step;
    let mut b = (best.0 as f64 + 1.0) * step;
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if eff(c) > eff(d) {
            b = d;
        } else {
            a = c;
        }
        if b - a < 1e-9 * step.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

/// Radial band `[q_lo, q_hi]` of the main phase-matching lobe where
/// `sinc^2 >= threshold` along anti-correlated pairs.
pub fn annulus_bounds(crystal: &CrystalParams, threshold: f64) -> Result<(f64, f64)> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Domain(format!("annulus threshold {threshold} must be in (0, 1)")));
    }
    let pm = crystal.phase_matcher()?;
    let step = ring_scan_step(&pm);
    let q0 = ring_radius(crystal, step)?;
    let eff = |q: f64| pm.anticorrelated_efficiency(q).unwrap_or(0.0);
    let edge = |dir: f64| {
        let mut inside = q0;
        let mut outside = q0;
        loop {
            let next = outside + dir * step;
            if next < 0.0 {
                return 0.0;
            }
            outside = next;
            if eff(outside) < threshold {
                break;
            }
            inside = outside;
        }
        for _ in 0..60 {
            let mid = 0.5 * (inside + outside);
            if eff(mid) >= threshold {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        0.5 * (inside + outside)
    };
    Ok((edge(-1.0), edge(1.0)))
}

/// Scan step small against the radial width of the phase-matching lobe.
pub fn ring_scan_step(pm: &PhaseMatcher) -> f64 {
    // lobe half-width in q is at least (2 pi k / L)^(1/2) / 4 near collinear
    let width = (2.0 * PI * pm.k_signal / pm.length_m).sqrt();
    width / 400.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn principal_axes_limits() {
        let m = IndexModel::bbo();
        let no = refractive_index(&m, 405e-9, Polarization::Ordinary, 0.3).unwrap();
        let e0 = refractive_index(&m, 405e-9, Polarization::Extraordinary, 0.0).unwrap();
        let e90 = refractive_index(&m, 405e-9, Polarization::Extraordinary, 0.5 * PI).unwrap();
        let ne = m.principal_index(405e-9, Polarization::Extraordinary).unwrap();
        assert!((e0 - no).abs() < 1e-15);
        assert!((e90 - ne).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_wavelength() {
        let m = IndexModel::bbo();
        let e = refractive_index(&m, 1.5e-6, Polarization::Ordinary, 0.0).unwrap_err();
        assert_eq!(e.kind(), "dispersion-range");
    }

    #[test]
    fn sinc_limits() {
        assert_eq!(sinc(0.0), 1.0);
        assert!(sinc(PI).abs() < 1e-15);
        let pm = CrystalParams::default().phase_matcher().unwrap();
        assert_eq!(pm.weight_for(0.0), Complex64::new(1.0, 0.0));
        assert!(pm.weight_for(2.0 * PI / pm.length_m).norm() < 1e-15);
    }

    #[test]
    fn evanescent_input_is_an_error() {
        let pm = CrystalParams::default().phase_matcher().unwrap();
        let e = pm.delta_k([2.0 * pm.k_signal, 0.0], [0.0, 0.0]).unwrap_err();
        assert_eq!(e.kind(), "evanescent");
    }

    #[test]
    fn energy_conservation_is_checked() {
        let c = CrystalParams { signal_wavelength_m: 800e-9, ..CrystalParams::default() };
        assert!(!c.violations().is_empty());
        assert!(c.phase_matcher().is_err());
        assert!(CrystalParams::default().violations().is_empty());
    }
}
