//! Laguerre-Gaussian pump modes and their coaxial superpositions.
//!
//! Modes use the standard normalized form
//!
//! ```text
//! LG_p^l(rho, phi) = (1/w) sqrt(2 p! / (pi (p+|l|)!)) (sqrt2 rho / w)^|l|
//!                    exp(-rho^2/w^2) L_p^|l|(2 rho^2 / w^2) exp(-i l phi)
//! ```
//!
//! The `(sqrt2 rho / w)^|l|` factor carries the `|l|` exponent; without it
//! the family is neither orthogonal nor has the right ring radius. Positive
//! `l` winds as `exp(-i l phi)` and is reported as positive OAM everywhere
//! in this crate.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ComplexField, Domain, Frame, Grid2D};

/// One term `coeff * LG_p^l` of a pump superposition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LgTerm {
    pub p: u32,
    pub l: i32,
    pub coeff: Complex64,
}

impl LgTerm {
    pub fn new(p: u32, l: i32, coeff: Complex64) -> Self {
        LgTerm { p, l, coeff }
    }
}

/// Symbolic pump description: superposed LG terms sharing one waist.
#[derive(Clone, Debug, PartialEq)]
pub struct PumpSpec {
    terms: Vec<LgTerm>,
    waist_m: f64,
}

impl PumpSpec {
    pub fn new(terms: Vec<LgTerm>, waist_m: f64) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::DegenerateSpec("pump has no terms".into()));
        }
        if terms.iter().all(|t| t.coeff.norm() == 0.0) {
            return Err(Error::DegenerateSpec("all pump coefficients are zero".into()));
        }
        if !(waist_m.is_finite() && waist_m > 0.0) {
            return Err(Error::Domain(format!("pump waist {waist_m} must be positive")));
        }
        Ok(PumpSpec { terms, waist_m })
    }

    pub fn gaussian(waist_m: f64) -> Result<Self> {
        Self::vortex(0, waist_m)
    }

    pub fn vortex(l: i32, waist_m: f64) -> Result<Self> {
        Self::new(vec![LgTerm::new(0, l, Complex64::new(1.0, 0.0))], waist_m)
    }

    /// Equal-weight superposition of `+l` and `-l`, with relative sign
    /// `(-1)^l` so that one of the `2|l|` petals always sits on the `+y`
    /// axis. For `l = 1` this is the first-order Hermite-Gaussian mode with
    /// a nodal line along `x`.
    pub fn petals(l: u32, waist_m: f64) -> Result<Self> {
        let l = l as i32;
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        Self::new(
            vec![
                LgTerm::new(0, l, Complex64::new(1.0, 0.0)),
                LgTerm::new(0, -l, Complex64::new(sign, 0.0)),
            ],
            waist_m,
        )
    }

    pub fn terms(&self) -> &[LgTerm] {
        &self.terms
    }

    pub fn waist_m(&self) -> f64 {
        self.waist_m
    }

    /// Same pump with every azimuthal index negated.
    pub fn mirrored(&self) -> PumpSpec {
        PumpSpec {
            terms: self.terms.iter().map(|t| LgTerm { l: -t.l, ..*t }).collect(),
            waist_m: self.waist_m,
        }
    }
}

/// Generalized Laguerre polynomial `L_p^alpha(x)` by the three-term recurrence.
pub fn laguerre(p: u32, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if p == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..p {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

fn ln_factorial(n: u32) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Closed-form LG amplitude at polar position `(rho, phi)`.
pub fn lg_value(p: u32, l: i32, waist_m: f64, rho: f64, phi: f64) -> Complex64 {
    let al = l.unsigned_abs();
    let norm = ((2.0f64).ln() + ln_factorial(p) - PI.ln() - ln_factorial(p + al)).exp().sqrt()
        / waist_m;
    let s = (2.0f64).sqrt() * rho / waist_m;
    let radial = norm
        * s.powi(al as i32)
        * (-(rho * rho) / (waist_m * waist_m)).exp()
        * laguerre(p, al as f64, s * s);
    Complex64::from_polar(radial, -(l as f64) * phi)
}

fn check_pump_grid(waist_m: f64, grid: &Grid2D) -> Result<()> {
    if grid.domain() != Domain::Position {
        return Err(Error::Domain("LG modes are generated in position space".into()));
    }
    if waist_m < 4.0 * grid.pitch() {
        return Err(Error::GridResolution(format!(
            "waist {waist_m:.3e} m is under 4 samples of pitch {:.3e} m",
            grid.pitch()
        )));
    }
    if waist_m > grid.window() / 4.0 {
        return Err(Error::GridResolution(format!(
            "waist {waist_m:.3e} m exceeds a quarter of the {:.3e} m window",
            grid.window()
        )));
    }
    Ok(())
}

/// Sample `LG_p^l` on `grid` in the axial frame, tagged with the default
/// 405 nm pump wavelength. [`lg_mode_at`] takes an explicit wavelength.
pub fn lg_mode(p: i32, l: i32, waist_m: f64, grid: Grid2D) -> Result<ComplexField> {
    lg_mode_at(p, l, waist_m, grid, DEFAULT_PUMP_WAVELENGTH_M)
}

pub const DEFAULT_PUMP_WAVELENGTH_M: f64 = 405e-9;

pub fn lg_mode_at(
    p: i32,
    l: i32,
    waist_m: f64,
    grid: Grid2D,
    wavelength_m: f64,
) -> Result<ComplexField> {
    if p < 0 {
        return Err(Error::Domain(format!("radial index p = {p} must be nonnegative")));
    }
    if !(waist_m.is_finite() && waist_m > 0.0) {
        return Err(Error::Domain(format!("waist {waist_m} must be positive")));
    }
    check_pump_grid(waist_m, &grid)?;
    let p = p as u32;
    let values = Array2::from_shape_fn((grid.n(), grid.n()), |(r, c)| {
        let x = grid.coord(c);
        let y = grid.coord(r);
        lg_value(p, l, waist_m, x.hypot(y), y.atan2(x))
    });
    ComplexField::new(grid, Frame::axial(), values, wavelength_m)
}

/// Superposition of the pump terms, renormalized to unit power.
pub fn superpose(spec: &PumpSpec, grid: Grid2D) -> Result<ComplexField> {
    superpose_at(spec, grid, DEFAULT_PUMP_WAVELENGTH_M)
}

pub fn superpose_at(spec: &PumpSpec, grid: Grid2D, wavelength_m: f64) -> Result<ComplexField> {
    let mut total = ComplexField::zeros(grid, Frame::axial(), wavelength_m);
    check_pump_grid(spec.waist_m, &grid)?;
    for t in &spec.terms {
        if t.coeff.norm() == 0.0 {
            continue;
        }
        let mode = lg_mode_at(t.p as i32, t.l, spec.waist_m, grid, wavelength_m)?;
        total.values.zip_mut_with(&mode.values, |a, b| *a += t.coeff * b);
    }
    let power = total.power();
    if !(power > 0.0) || !power.is_finite() {
        return Err(Error::DegenerateSpec("pump superposition has zero power".into()));
    }
    total.scale(Complex64::new(1.0 / power.sqrt(), 0.0));
    Ok(total)
}

/// Unitary centered transform to momentum space; see
/// [`ComplexField::to_momentum`].
pub fn to_momentum(field: &ComplexField) -> Result<ComplexField> {
    field.to_momentum()
}

pub fn to_position(field: &ComplexField) -> Result<ComplexField> {
    field.to_position()
}
