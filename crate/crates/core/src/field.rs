//! Sampled fields and images.
//!
//! A field is stored as a slowly varying envelope in a *frame*: a reference
//! ray with transverse position `origin` (m) and transverse wavevector
//! `carrier` (rad/m). In position space the physical amplitude at
//! `origin + xi` is `values(xi) * exp(i carrier . xi)`. In momentum space the
//! physical spectrum at `carrier + kappa` is
//! `values(kappa) * exp(-i (carrier + kappa) . origin)`.
//!
//! Keeping the carrier out of the samples lets a 256-point grid follow a
//! beam that leaves the optical axis at several degrees.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{self, Direction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    Position,
    Momentum,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Position => "position",
            Domain::Momentum => "momentum",
        }
    }
}

/// Square sampling grid. `pitch` is meters in position space and rad/m in
/// momentum space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid2D {
    n: usize,
    pitch: f64,
    domain: Domain,
}

impl Grid2D {
    pub fn new(n: usize, pitch: f64, domain: Domain) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::GridResolution(format!(
                "grid size {n} must be a power of two >= 16"
            )));
        }
        if !(pitch.is_finite() && pitch > 0.0) {
            return Err(Error::GridResolution(format!("pitch {pitch} must be positive")));
        }
        Ok(Grid2D { n, pitch, domain })
    }

    pub fn position(n: usize, pitch_m: f64) -> Result<Self> {
        Self::new(n, pitch_m, Domain::Position)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Full width of the sampled window.
    pub fn window(&self) -> f64 {
        self.n as f64 * self.pitch
    }

    /// Signed coordinate of index `i` along either axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.pitch
    }

    /// Index whose coordinate is nearest to `x`, if inside the window.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let i = (x / self.pitch).round() + (self.n / 2) as f64;
        (i >= 0.0 && i < self.n as f64).then_some(i as usize)
    }

    /// The grid reached by a Fourier transform: pitch `2 pi / (n * pitch)`.
    pub fn conjugate(&self) -> Grid2D {
        let domain = match self.domain {
            Domain::Position => Domain::Momentum,
            Domain::Momentum => Domain::Position,
        };
        Grid2D {
            n: self.n,
            pitch: 2.0 * PI / (self.n as f64 * self.pitch),
            domain,
        }
    }

    pub fn with_pitch(&self, pitch: f64) -> Result<Grid2D> {
        Grid2D::new(self.n, pitch, self.domain)
    }

    /// Area element of one sample.
    pub fn cell(&self) -> f64 {
        self.pitch * self.pitch
    }
}

/// Reference ray of a field. See the module docs.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Frame {
    pub origin: [f64; 2],
    pub carrier: [f64; 2],
}

impl Frame {
    pub fn axial() -> Self {
        Frame::default()
    }

    pub fn with_carrier(carrier: [f64; 2]) -> Self {
        Frame { origin: [0.0, 0.0], carrier }
    }
}

/// Sampled complex amplitude. Rows index `y`, columns index `x`.
#[derive(Clone, Debug)]
pub struct ComplexField {
    pub grid: Grid2D,
    pub frame: Frame,
    pub values: Array2<Complex64>,
    /// Vacuum wavelength of the photon carried by this field.
    pub wavelength_m: f64,
}

impl ComplexField {
    pub fn new(
        grid: Grid2D,
        frame: Frame,
        values: Array2<Complex64>,
        wavelength_m: f64,
    ) -> Result<Self> {
        if values.dim() != (grid.n(), grid.n()) {
            return Err(Error::ShapeMismatch(format!(
                "values {:?} do not match grid n = {}",
                values.dim(),
                grid.n()
            )));
        }
        if !(wavelength_m.is_finite() && wavelength_m > 0.0) {
            return Err(Error::Domain(format!("wavelength {wavelength_m} must be positive")));
        }
        Ok(ComplexField { grid, frame, values, wavelength_m })
    }

    pub fn zeros(grid: Grid2D, frame: Frame, wavelength_m: f64) -> Self {
        let n = grid.n();
        ComplexField { grid, frame, values: Array2::zeros((n, n)), wavelength_m }
    }

    /// Vacuum wavenumber `2 pi / lambda`.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength_m
    }

    /// Continuum power: sum of |values|^2 times the sample area.
    pub fn power(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell()
    }

    pub fn intensity(&self) -> IntensityMap {
        IntensityMap {
            grid: self.grid,
            origin: self.frame.origin,
            values: self.values.mapv(|v| v.norm_sqr()),
            normalization: Normalization::Raw,
        }
    }

    /// Continuum inner product `<self, other>` on a shared grid.
    pub fn inner(&self, other: &ComplexField) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::ShapeMismatch("inner product on different grids".into()));
        }
        let s: Complex64 = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.cell())
    }

    /// Unitary transform to momentum space. The continuum convention is
    /// `F(q) = (1/2pi) \int f(x) exp(-i q.x) d^2x`.
    pub fn to_momentum(&self) -> Result<ComplexField> {
        if self.grid.domain() != Domain::Position {
            return Err(Error::Domain("to_momentum needs a position-space field".into()));
        }
        let grid = self.grid.conjugate();
        let mut values = self.values.clone();
        fft::fft2(&mut values, Direction::Forward);
        let scale = self.grid.pitch() / grid.pitch();
        values.mapv_inplace(|v| v * scale);
        Ok(ComplexField { grid, frame: self.frame, values, wavelength_m: self.wavelength_m })
    }

    pub fn to_position(&self) -> Result<ComplexField> {
        if self.grid.domain() != Domain::Momentum {
            return Err(Error::Domain("to_position needs a momentum-space field".into()));
        }
        let grid = self.grid.conjugate();
        let mut values = self.values.clone();
        fft::fft2(&mut values, Direction::Inverse);
        let scale = self.grid.pitch() / grid.pitch();
        values.mapv_inplace(|v| v * scale);
        Ok(ComplexField { grid, frame: self.frame, values, wavelength_m: self.wavelength_m })
    }

    pub fn in_domain(&self, domain: Domain) -> Result<ComplexField> {
        match (self.grid.domain(), domain) {
            (a, b) if a == b => Ok(self.clone()),
            (Domain::Position, Domain::Momentum) => self.to_momentum(),
            _ => self.to_position(),
        }
    }

    pub fn scale(&mut self, s: Complex64) {
        self.values.mapv_inplace(|v| v * s);
    }
}

/// How an [`IntensityMap`] has been scaled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    PeakOne,
    UnitSum,
    Raw,
}

impl Normalization {
    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::PeakOne => "peak-1",
            Normalization::UnitSum => "unit-sum",
            Normalization::Raw => "raw",
        }
    }
}

/// Nonnegative image on a grid. `origin` is the absolute transverse
/// position (or momentum) of the central sample.
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityMap {
    pub grid: Grid2D,
    pub origin: [f64; 2],
    pub values: Array2<f64>,
    pub normalization: Normalization,
}

impl IntensityMap {
    pub fn new(grid: Grid2D, origin: [f64; 2], values: Array2<f64>) -> Result<Self> {
        if values.dim() != (grid.n(), grid.n()) {
            return Err(Error::ShapeMismatch("image does not match grid".into()));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Domain("intensity values must be finite and nonnegative".into()));
        }
        Ok(IntensityMap { grid, origin, values, normalization: Normalization::Raw })
    }

    pub fn total(&self) -> f64 {
        self.values.sum()
    }

    /// Total power including the sample area.
    pub fn power(&self) -> f64 {
        self.total() * self.grid.cell()
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    pub fn center_value(&self) -> f64 {
        let c = self.grid.n() / 2;
        self.values[[c, c]]
    }

    pub fn normalized(&self, normalization: Normalization) -> IntensityMap {
        let s = match normalization {
            Normalization::PeakOne => self.peak(),
            Normalization::UnitSum => self.total(),
            Normalization::Raw => 1.0,
        };
        let values = if s > 0.0 { self.values.mapv(|v| v / s) } else { self.values.clone() };
        IntensityMap { grid: self.grid, origin: self.origin, values, normalization }
    }

    /// Intensity-weighted centroid in grid-relative coordinates.
    pub fn centroid(&self) -> [f64; 2] {
        let (mut sx, mut sy, mut s) = (0.0, 0.0, 0.0);
        for ((r, c), v) in self.values.indexed_iter() {
            sx += v * self.grid.coord(c);
            sy += v * self.grid.coord(r);
            s += v;
        }
        if s > 0.0 {
            [sx / s, sy / s]
        } else {
            [0.0, 0.0]
        }
    }
}
