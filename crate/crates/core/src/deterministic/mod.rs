//! The large-population limit of `Z^N = X^N / N`: the logistic-type ODE
//! `dz/dt = F(z)`, its equilibria and closed-form solution.
//!
//! With `u > 0` the roots of `F` satisfy `x_minus < 0 < x_plus < 1`. With
//! `u = 0` and `s > 0` they sit on the boundary (`0` and `1`) and the same
//! formulas hold; `0` is then unstable and `1` stable.

pub mod linear;

use serde::{Deserialize, Serialize};

use crate::error::{MoranError, Result};
use crate::ode;
use crate::params::ModelParams;

pub use linear::{linear_model_solution, LinearModelSolution};

/// Drift `F`, its derivative, and the jump activity `g = q(., +1) + q(., -1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftFunctions {
    s: f64,
    u: f64,
    nu0: f64,
    nu1: f64,
}

impl DriftFunctions {
    pub fn new(params: &ModelParams) -> Self {
        Self {
            s: params.s(),
            u: params.u(),
            nu0: params.nu0(),
            nu1: params.nu1(),
        }
    }

    #[inline]
    pub fn drift(&self, x: f64) -> f64 {
        (-self.s * x + (self.s - self.u)) * x + self.u * self.nu0
    }

    #[inline]
    pub fn drift_derivative(&self, x: f64) -> f64 {
        -2.0 * self.s * x + (self.s - self.u)
    }

    #[inline]
    pub fn jump_activity(&self, x: f64) -> f64 {
        let a = 2.0 + self.s;
        (-a * x + (a - self.u * (self.nu0 - self.nu1))) * x + self.u * self.nu0
    }

    /// `(s - u)^2 + 4 s u nu0` when `s > 0`; the convention `u` when `s = 0`.
    pub fn discriminant(&self) -> Result<f64> {
        if self.s > 0.0 {
            let d = self.s - self.u;
            Ok(d * d + 4.0 * self.s * self.u * self.nu0)
        } else if self.u > 0.0 {
            Ok(self.u)
        } else {
            Err(MoranError::NoIsolatedEquilibrium)
        }
    }

    /// `-F'(x_plus)`: rate at which the flow and the fluctuation variance
    /// relax. Equals `sqrt(discriminant)` for `s > 0` and `u` for `s = 0`.
    pub fn relaxation_rate(&self) -> Result<f64> {
        if self.s > 0.0 {
            Ok(self.discriminant()?.sqrt())
        } else if self.u > 0.0 {
            Ok(self.u)
        } else {
            Err(MoranError::NoIsolatedEquilibrium)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    Neutral,
    MutationOnly,
    Selection,
}

impl Regime {
    pub fn of(params: &ModelParams) -> Self {
        if params.s() > 0.0 {
            Regime::Selection
        } else if params.u() > 0.0 {
            Regime::MutationOnly
        } else {
            Regime::Neutral
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    AsymptoticallyStable,
    Unstable,
}

/// Zeros of the drift together with the slope of `F` at each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibria {
    pub regime: Regime,
    pub discriminant: f64,
    pub x_plus: f64,
    pub x_minus: Option<f64>,
    pub slope_plus: f64,
    pub slope_minus: Option<f64>,
    pub stability_plus: Stability,
    pub stability_minus: Option<Stability>,
}

fn classify(slope: f64) -> Stability {
    if slope < 0.0 {
        Stability::AsymptoticallyStable
    } else {
        Stability::Unstable
    }
}

/// Roots of `F(x) = -s x^2 + (s - u) x + u nu0` computed without the
/// cancellation of the textbook formula.
fn selection_roots(s: f64, u: f64, nu0: f64, sqrt_delta: f64) -> (f64, f64) {
    let b = s - u;
    let x_plus = if b >= 0.0 {
        (b + sqrt_delta) / (2.0 * s)
    } else {
        2.0 * u * nu0 / (sqrt_delta - b)
    };
    let x_minus = if b <= 0.0 {
        (b - sqrt_delta) / (2.0 * s)
    } else {
        -2.0 * u * nu0 / (sqrt_delta + b)
    };
    (x_minus, x_plus)
}

pub fn equilibria(params: &ModelParams) -> Result<Equilibria> {
    let drift = DriftFunctions::new(params);
    let discriminant = drift.discriminant()?;
    match Regime::of(params) {
        Regime::Neutral => Err(MoranError::NoIsolatedEquilibrium),
        Regime::MutationOnly => {
            let x_plus = params.nu0();
            let slope_plus = drift.drift_derivative(x_plus);
            Ok(Equilibria {
                regime: Regime::MutationOnly,
                discriminant,
                x_plus,
                x_minus: None,
                slope_plus,
                slope_minus: None,
                stability_plus: classify(slope_plus),
                stability_minus: None,
            })
        }
        Regime::Selection => {
            let (x_minus, x_plus) =
                selection_roots(params.s(), params.u(), params.nu0(), discriminant.sqrt());
            let slope_plus = drift.drift_derivative(x_plus);
            let slope_minus = drift.drift_derivative(x_minus);
            Ok(Equilibria {
                regime: Regime::Selection,
                discriminant,
                x_plus,
                x_minus: Some(x_minus),
                slope_plus,
                slope_minus: Some(slope_minus),
                stability_plus: classify(slope_plus),
                stability_minus: Some(classify(slope_minus)),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Form {
    Constant,
    Relaxation {
        target: f64,
        rate: f64,
    },
    Riccati {
        x_minus: f64,
        x_plus: f64,
        rate: f64,
    },
}

/// Closed-form evaluator of `t -> z(z0, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeterministicSolution {
    z0: f64,
    regime: Regime,
    form: Form,
}

pub(crate) fn check_initial(z0: f64) -> Result<()> {
    if (0.0..=1.0).contains(&z0) {
        Ok(())
    } else {
        Err(MoranError::Domain(format!(
            "initial proportion must lie in [0, 1], got {z0}"
        )))
    }
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && !t.is_nan() {
        Ok(())
    } else {
        Err(MoranError::Domain(format!(
            "time must be nonnegative, got {t}"
        )))
    }
}

pub fn solve_deterministic(z0: f64, params: &ModelParams) -> Result<DeterministicSolution> {
    check_initial(z0)?;
    let regime = Regime::of(params);
    let form = match regime {
        Regime::Neutral => Form::Constant,
        Regime::MutationOnly => Form::Relaxation {
            target: params.nu0(),
            rate: params.u(),
        },
        Regime::Selection => {
            let eq = equilibria(params)?;
            let x_minus = eq.x_minus.expect("selection regime has two roots");
            if z0 == eq.x_plus || z0 == x_minus {
                Form::Constant
            } else {
                Form::Riccati {
                    x_minus,
                    x_plus: eq.x_plus,
                    rate: eq.discriminant.sqrt(),
                }
            }
        }
    };
    Ok(DeterministicSolution { z0, regime, form })
}

impl DeterministicSolution {
    pub fn z0(&self) -> f64 {
        self.z0
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn evaluate(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.at(t))
    }

    /// Evaluation without the time check; `t` must be nonnegative.
    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        let z0 = self.z0;
        if t == 0.0 {
            return z0;
        }
        match self.form {
            Form::Constant => z0,
            Form::Relaxation { target, rate } => {
                (target + (z0 - target) * (-rate * t).exp()).clamp(0.0, 1.0)
            }
            Form::Riccati {
                x_minus,
                x_plus,
                rate,
            } => {
                // z = x+ + (x+ - x-)(z0 - x+) e / ((z0 - x-) - (z0 - x+) e),
                // the printed ratio minus x+, written with the decaying factor.
                let e = (-rate * t).exp();
                let above = z0 - x_plus;
                let denom = (z0 - x_minus) - above * e;
                (x_plus + (x_plus - x_minus) * above * e / denom).clamp(0.0, 1.0)
            }
        }
    }

    /// Evaluates on a caller-supplied grid, giving `(t, z)` rows.
    pub fn trajectory(&self, times: &[f64]) -> Result<Vec<(f64, f64)>> {
        times.iter().map(|&t| Ok((t, self.evaluate(t)?))).collect()
    }
}

fn clamp_ulp(z: f64) -> f64 {
    if (-f64::EPSILON..0.0).contains(&z) {
        0.0
    } else if z > 1.0 && z <= 1.0 + f64::EPSILON {
        1.0
    } else {
        z
    }
}

/// RK4 integration of `dz/dt = F(z)` from `z0`; the numerical reference for
/// the closed form.
pub fn ode_oracle(z0: f64, t_end: f64, step: f64, params: &ModelParams) -> Result<Vec<(f64, f64)>> {
    check_initial(z0)?;
    if !(step > 0.0) {
        return Err(MoranError::Domain(format!(
            "step must be positive, got {step}"
        )));
    }
    check_time(t_end)?;
    let drift = DriftFunctions::new(params);
    let mut path = ode::integrate_fixed(|_, z| drift.drift(z), 0.0, z0, t_end, step)?;
    for p in &mut path {
        p.1 = clamp_ulp(p.1);
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(s: f64, u: f64, nu0: f64) -> ModelParams {
        ModelParams::new(100, s, u, nu0).unwrap()
    }

    #[test]
    fn reference_equilibria() {
        let eq = equilibria(&params(1.0, 0.5, 0.5)).unwrap();
        assert_eq!(eq.regime, Regime::Selection);
        assert!((eq.discriminant - 1.25).abs() < 1e-15);
        // (0.5 +- sqrt(1.25)) / 2
        let r = 1.25f64.sqrt();
        assert!((eq.x_plus - (0.5 + r) / 2.0).abs() < 1e-15);
        assert!((eq.x_plus - 0.809_017_0).abs() < 1e-7);
        assert!((eq.x_minus.unwrap() + 0.309_017_0).abs() < 1e-7);
        let f = DriftFunctions::new(&params(1.0, 0.5, 0.5));
        assert!(f.drift(eq.x_plus).abs() < 1e-12);
        assert!(f.drift(eq.x_minus.unwrap()).abs() < 1e-12);
        assert!((eq.slope_plus + r).abs() < 1e-14);
        assert!((eq.slope_minus.unwrap() - r).abs() < 1e-14);
        assert_eq!(eq.stability_plus, Stability::AsymptoticallyStable);
        assert_eq!(eq.stability_minus, Some(Stability::Unstable));
    }

    #[test]
    fn mutation_only_and_boundary_equilibria() {
        let eq = equilibria(&params(0.0, 0.7, 0.25)).unwrap();
        assert_eq!(eq.regime, Regime::MutationOnly);
        assert_eq!(eq.x_plus, 0.25);
        assert_eq!(eq.x_minus, None);
        assert_eq!(eq.discriminant, 0.7);
        assert_eq!(eq.slope_plus, -0.7);

        let eq = equilibria(&params(1.0, 0.0, 0.5)).unwrap();
        assert_eq!(eq.x_minus, Some(0.0));
        assert_eq!(eq.x_plus, 1.0);
        assert_eq!(eq.stability_minus, Some(Stability::Unstable));

        assert_eq!(
            equilibria(&params(0.0, 0.0, 0.5)).unwrap_err(),
            MoranError::NoIsolatedEquilibrium
        );
        assert!(DriftFunctions::new(&params(0.0, 0.0, 0.5))
            .discriminant()
            .is_err());
    }

    #[test]
    fn jump_activity_matches_kernel_sum() {
        let p = params(0.8, 0.3, 0.35);
        let f = DriftFunctions::new(&p);
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            let q = crate::params::kernel_q(x, 1, &p).unwrap()
                + crate::params::kernel_q(x, -1, &p).unwrap();
            assert!((f.jump_activity(x) - q).abs() < 1e-14);
            let d = crate::params::kernel_q(x, 1, &p).unwrap()
                - crate::params::kernel_q(x, -1, &p).unwrap();
            assert!((f.drift(x) - d).abs() < 1e-14);
        }
    }

    #[test]
    fn closed_form_examples() {
        let sol = solve_deterministic(1.0, &params(0.0, 0.5, 0.3)).unwrap();
        assert!((sol.evaluate(2f64.ln() / 0.5).unwrap() - 0.65).abs() < 1e-15);

        let sol = solve_deterministic(0.42, &params(0.0, 0.0, 0.3)).unwrap();
        assert_eq!(sol.regime(), Regime::Neutral);
        assert_eq!(sol.evaluate(123.0).unwrap(), 0.42);

        let p = params(1.0, 0.5, 0.5);
        let xp = equilibria(&p).unwrap().x_plus;
        let sol = solve_deterministic(xp, &p).unwrap();
        for t in [0.0, 1.0, 50.0, 1e6] {
            assert_eq!(sol.evaluate(t).unwrap(), xp);
        }

        assert!(solve_deterministic(1.1, &p).is_err());
        assert!(solve_deterministic(0.5, &p)
            .unwrap()
            .evaluate(-1.0)
            .is_err());
    }

    #[test]
    fn closed_form_matches_oracle_reference() {
        let p = params(1.0, 0.5, 0.5);
        let sol = solve_deterministic(0.1, &p).unwrap();
        let path = ode_oracle(0.1, 5.0, 1e-3, &p).unwrap();
        let (t, z) = *path.last().unwrap();
        assert_eq!(t, 5.0);
        assert!((sol.evaluate(5.0).unwrap() - z).abs() < 1e-8);
    }

    #[test]
    fn oracle_examples() {
        let p = params(1.0, 0.5, 0.5);
        assert_eq!(ode_oracle(0.5, 0.0, 0.1, &p).unwrap(), vec![(0.0, 0.5)]);
        assert!(ode_oracle(0.5, 1.0, 0.0, &p).is_err());

        let path = ode_oracle(1.0, 2.0, 1e-3, &params(0.0, 0.5, 0.3)).unwrap();
        let z = path.last().unwrap().1;
        assert!((z - (0.3 + 0.7 * (-1.0f64).exp())).abs() < 1e-9);

        let path = ode_oracle(0.1, 20.0, 1e-3, &p).unwrap();
        let xp = equilibria(&p).unwrap().x_plus;
        assert!((path.last().unwrap().1 - xp).abs() < 1e-6);
    }

    #[test]
    fn no_overflow_for_huge_times() {
        let p = params(3.0, 0.1, 0.2);
        let sol = solve_deterministic(0.0, &p).unwrap();
        let xp = equilibria(&p).unwrap().x_plus;
        assert_eq!(sol.evaluate(1e308).unwrap(), xp);
        // u = 0: z0 = 0 is the unstable fixed point, z0 = 1 the stable one.
        let p = params(1.0, 0.0, 0.5);
        assert_eq!(
            solve_deterministic(0.0, &p)
                .unwrap()
                .evaluate(10.0)
                .unwrap(),
            0.0
        );
        let z = solve_deterministic(0.01, &p)
            .unwrap()
            .evaluate(100.0)
            .unwrap();
        assert!((z - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jump_activity_lower_bound() {
        for &(s, u, nu0) in &[(1.0, 0.5, 0.5), (0.0, 0.2, 0.1), (5.0, 0.01, 0.9)] {
            let p = params(s, u, nu0);
            let f = DriftFunctions::new(&p);
            let bound = u * nu0.min(1.0 - nu0);
            let min = (0..=10_000)
                .map(|i| f.jump_activity(i as f64 / 10_000.0))
                .fold(f64::INFINITY, f64::min);
            assert!(min >= bound - 1e-15, "{min} < {bound}");
        }
    }

    fn arb_params() -> impl Strategy<Value = ModelParams> {
        (0.0..4.0f64, 0.01..2.0f64, 0.02..0.98f64)
            .prop_map(|(s, u, nu0)| ModelParams::new(50, s, u, nu0).unwrap())
    }

    proptest! {
        #[test]
        fn flow_property(p in arb_params(), z0 in 0.0..=1.0f64, t in 0.0..5.0f64, h in 0.0..5.0f64) {
            let sol = solve_deterministic(z0, &p).unwrap();
            let mid = sol.evaluate(t).unwrap();
            let restarted = solve_deterministic(mid, &p).unwrap();
            let a = sol.evaluate(t + h).unwrap();
            let b = restarted.evaluate(h).unwrap();
            prop_assert!((a - b).abs() < 1e-10, "{} vs {}", a, b);
        }

        #[test]
        fn monotone_approach_to_stable_point(p in arb_params(), z0 in 0.0..=1.0f64) {
            let sol = solve_deterministic(z0, &p).unwrap();
            let xp = equilibria(&p).unwrap().x_plus;
            let mut last = (z0 - xp).abs();
            for i in 1..=200 {
                let z = sol.evaluate(i as f64 * 0.05).unwrap();
                prop_assert!((0.0..=1.0).contains(&z));
                let gap = (z - xp).abs();
                prop_assert!(gap <= last + 1e-15);
                last = gap;
            }
        }

        #[test]
        fn derivative_consistency(p in arb_params(), z0 in 0.0..=1.0f64, t in 0.01..5.0f64) {
            let sol = solve_deterministic(z0, &p).unwrap();
            let f = DriftFunctions::new(&p);
            let h = 1e-5;
            let fd = (sol.evaluate(t + h).unwrap() - sol.evaluate(t - h).unwrap()) / (2.0 * h);
            prop_assert!((fd - f.drift(sol.evaluate(t).unwrap())).abs() < 1e-7);
        }

        #[test]
        fn roots_are_zeros(p in arb_params()) {
            let eq = equilibria(&p).unwrap();
            let f = DriftFunctions::new(&p);
            prop_assert!(f.drift(eq.x_plus).abs() < 1e-12);
            prop_assert!(eq.x_plus > 0.0 && eq.x_plus < 1.0);
            if let Some(xm) = eq.x_minus {
                prop_assert!(f.drift(xm).abs() < 1e-12 * (p.s() * xm * xm).max(1.0));
                prop_assert!(xm < 0.0);
            }
            prop_assert!((eq.slope_plus + f.relaxation_rate().unwrap()).abs() < 1e-12);
        }
    }
}
