use moran_core::deterministic::DriftFunctions;
use moran_core::params::chain_rates;
use moran_core::{
    equilibria, ode_oracle, simulate_grid_paths, solve_deterministic, stationary_distribution,
    variance_closed_form, variance_ode, ModelParams, VarianceSource,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_params(rng: &mut ChaCha8Rng, n: u64) -> ModelParams {
    let s = if rng.random_bool(0.15) {
        0.0
    } else {
        rng.random_range(0.05..3.0)
    };
    ModelParams::new(
        n,
        s,
        rng.random_range(0.05..2.0),
        rng.random_range(0.05..0.95),
    )
    .unwrap()
}

/// Solves `pi Q = 0, sum pi = 1` by Gaussian elimination on the dense generator.
fn null_space_stationary(params: &ModelParams) -> Vec<f64> {
    let n = params.population_size() as usize + 1;
    let mut q = vec![vec![0.0; n]; n];
    for k in 0..n {
        let (b, d) = chain_rates(k as u64, params).unwrap();
        if k + 1 < n {
            q[k][k + 1] = b;
        }
        if k > 0 {
            q[k][k - 1] = d;
        }
        q[k][k] = -(b + d);
    }
    // Rows of the system are columns of Q; the last is replaced by normalization.
    let mut a: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| q[i][j]).collect()).collect();
    let mut rhs = vec![0.0; n];
    a[n - 1] = vec![1.0; n];
    rhs[n - 1] = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[row][c] -= f * a[col][c];
                }
                rhs[row] -= f * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (rhs[row] - tail) / a[row][row];
    }
    x
}

#[test]
fn null_space_oracle_three_states() {
    let p = ModelParams::new(2, 0.0, 1.0, 0.5).unwrap();
    for v in null_space_stationary(&p) {
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
    }
}

#[test]
fn product_formula_matches_null_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [1u64, 2, 5, 10, 25, 50] {
        for _ in 0..4 {
            let p = random_params(&mut rng, n);
            let exact = null_space_stationary(&p);
            let pi = stationary_distribution(&p).unwrap();
            let diff = exact
                .iter()
                .zip(&pi.probabilities)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(diff < 1e-10, "N={n} {p:?}: {diff:e}");
        }
    }
}

#[test]
fn stationary_generator_residual_dense_sizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in [100u64, 500, 2000] {
        let p = random_params(&mut rng, n);
        let pi = stationary_distribution(&p).unwrap();
        assert!(pi.generator_residual() < 1e-9, "N={n}");
    }
}

// Long-run states of independent simulated paths against the exact law.
#[test]
fn simulation_reaches_stationary_law() {
    let p = ModelParams::new(100, 1.0, 0.5, 0.5).unwrap();
    let pi = stationary_distribution(&p).unwrap();
    // Relaxation rate sqrt(1.25); t = 25 leaves e^{-28} of the initial condition.
    let paths = 8000;
    let states = simulate_grid_paths(10, &[25.0], paths, 99, &p).unwrap();
    let mut counts = vec![0usize; 101];
    for row in &states {
        counts[row[0] as usize] += 1;
    }
    let mut checked = 0;
    for (k, &c) in counts.iter().enumerate() {
        let prob = pi.probabilities[k];
        if prob > 1e-3 {
            let se = (prob * (1.0 - prob) / paths as f64).sqrt();
            let freq = c as f64 / paths as f64;
            assert!((freq - prob).abs() < 4.0 * se, "k={k}: {freq} vs {prob}");
            checked += 1;
        }
    }
    assert!(checked > 10);
}

#[test]
fn closed_form_matches_rk4_on_random_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..60 {
        let p = random_params(&mut rng, 10);
        let z0 = rng.random_range(0.0..=1.0);
        let sol = solve_deterministic(z0, &p).unwrap();
        let path = ode_oracle(z0, 10.0, 1e-3, &p).unwrap();
        let worst = path
            .iter()
            .map(|&(t, z)| (sol.evaluate(t).unwrap() - z).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "{p:?} z0={z0}: {worst:e}");
    }
}

#[test]
fn stable_point_is_reached() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..30 {
        let p = random_params(&mut rng, 10);
        let rate = DriftFunctions::new(&p).relaxation_rate().unwrap();
        let xp = equilibria(&p).unwrap().x_plus;
        for z0 in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let z = solve_deterministic(z0, &p)
                .unwrap()
                .evaluate(20.0 / rate)
                .unwrap();
            assert!((z - xp).abs() < 1e-6);
        }
    }
}

#[test]
fn variance_routes_agree_on_random_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut compared = 0;
    for _ in 0..25 {
        let p = random_params(&mut rng, 10);
        let z0 = rng.random_range(0.0..=1.0);
        let rate = DriftFunctions::new(&p).relaxation_rate().unwrap();
        let t_end = 5.0 / rate;
        let path = variance_ode(z0, t_end, 1e-3, &p).unwrap();
        for &(t, ode) in path.iter().step_by(97) {
            let cf = variance_closed_form(z0, t, &p).unwrap();
            if cf.source == VarianceSource::OdeFallback {
                continue;
            }
            let rel = (ode - cf.value).abs() / ode.max(1e-12);
            assert!(rel < 1e-5, "{p:?} z0={z0} t={t}: {ode} vs {}", cf.value);
            compared += 1;
        }
    }
    assert!(compared > 100);
}
