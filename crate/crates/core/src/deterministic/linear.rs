//! The parallel mutation-selection model `dy/dt = y A`, whose normalized
//! first coordinate reproduces `z(z0, t)`.

use crate::deterministic::{check_initial, check_time, equilibria, DeterministicSolution};
use crate::error::{MoranError, Result};
use crate::params::ModelParams;

/// Closed-form `(y0(t), y1(t))` with `y(0) = (z0, 1 - z0)`, built from the
/// eigen-decomposition of `A`. Only defined for `s > 0`, where the two
/// eigenvalues `1 + s x_plus` and `1 + s x_minus` are distinct.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearModelSolution {
    z0: f64,
    s: f64,
    u: f64,
    nu0: f64,
    x_plus: f64,
    x_minus: f64,
}

pub fn linear_model_solution(z0: f64, params: &ModelParams) -> Result<LinearModelSolution> {
    check_initial(z0)?;
    if params.s() <= 0.0 {
        return Err(MoranError::Unsupported(
            "the eigen form of the linear model needs s > 0".into(),
        ));
    }
    let eq = equilibria(params)?;
    Ok(LinearModelSolution {
        z0,
        s: params.s(),
        u: params.u(),
        nu0: params.nu0(),
        x_plus: eq.x_plus,
        x_minus: eq.x_minus.expect("s > 0 has two roots"),
    })
}

impl LinearModelSolution {
    /// The matrix `A` in row-major order.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let nu1 = 1.0 - self.nu0;
        [
            [1.0 + self.s - self.u * nu1, self.u * nu1],
            [self.u * self.nu0, 1.0 - self.u * self.nu0],
        ]
    }

    /// `(lambda_plus, lambda_minus)`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        (1.0 + self.s * self.x_plus, 1.0 + self.s * self.x_minus)
    }

    /// Right eigenvectors `(v_plus, v_minus)`, unnormalized.
    pub fn eigenvectors(&self) -> ([f64; 2], [f64; 2]) {
        let a = self.u * self.nu0;
        (
            [a + self.s * self.x_plus, a],
            [a + self.s * self.x_minus, a],
        )
    }

    pub fn evaluate(&self, t: f64) -> Result<(f64, f64)> {
        check_time(t)?;
        let (xp, xm, z0) = (self.x_plus, self.x_minus, self.z0);
        let growth = ((1.0 + self.s * xp) * t).exp() / (xp - xm);
        let e = (-self.s * (xp - xm) * t).exp();
        let y0 = growth * (xp * (z0 - xm) - xm * (z0 - xp) * e);
        let y1 = growth * ((1.0 - xp) * (z0 - xm) - (1.0 - xm) * (z0 - xp) * e);
        Ok((y0, y1))
    }

    /// Proportion `y0 / (y0 + y1)`.
    pub fn proportion(&self, t: f64) -> Result<f64> {
        let (y0, y1) = self.evaluate(t)?;
        Ok(y0 / (y0 + y1))
    }

    pub fn deterministic(&self, params: &ModelParams) -> Result<DeterministicSolution> {
        crate::deterministic::solve_deterministic(self.z0, params)
    }
}
