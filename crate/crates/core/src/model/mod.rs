//! Problem definition: reaction term, nonlocal diffusion coefficient and the
//! parameters of `u_t - a(||u||^2_{H_0^1}) u_xx = lambda f(u) + h` on (0, 1).

mod assumptions;
mod diffusion;
mod nonlinearity;

pub use assumptions::{validate_assumptions, Assumption, AssumptionCheck, AssumptionReport};
pub use diffusion::{DiffusionCoefficient, MonotoneCubic};
pub use nonlinearity::{Nonlinearity, ScalarFn, Side, Well};

use crate::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 1025;

/// Immutable description of one problem instance.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    lambda: f64,
    nonlinearity: Nonlinearity,
    diffusion: DiffusionCoefficient,
    h: f64,
    grid_points: usize,
}

impl ProblemSpec {
    pub fn new(lambda: f64, nonlinearity: Nonlinearity, diffusion: DiffusionCoefficient) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self { lambda, nonlinearity, diffusion, h: 0.0, grid_points: DEFAULT_GRID_POINTS })
    }

    /// Constant forcing term.
    pub fn with_h(mut self, h: f64) -> Result<Self> {
        if !h.is_finite() {
            return Err(Error::InvalidInput("h must be finite".into()));
        }
        self.h = h;
        Ok(self)
    }

    pub fn with_grid_points(mut self, grid_points: usize) -> Result<Self> {
        if grid_points < 3 {
            return Err(Error::InvalidInput(format!("grid_points must be at least 3, got {grid_points}")));
        }
        self.grid_points = grid_points;
        Ok(self)
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let mut next = Self::new(lambda, self.nonlinearity.clone(), self.diffusion.clone())?;
        next.h = self.h;
        next.grid_points = self.grid_points;
        Ok(next)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    pub fn diffusion(&self) -> &DiffusionCoefficient {
        &self.diffusion
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    /// Precondition of the attractor-structure operations.
    pub fn require_unforced(&self) -> Result<()> {
        if self.h != 0.0 {
            return Err(Error::ForcingNotZero(self.h));
        }
        Ok(())
    }
}
