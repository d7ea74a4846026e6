//! Test problem generators.
//!
//! # Green-kernel operator
//!
//! `(Tf)(x) = ∫ k(x, y) f(y) dy` on `[0, 1]` with
//! `k(x, y) = min{x(1 - y), y(1 - x)}` inverts `-d²/dx²` with Dirichlet
//! boundary conditions. Its eigenfunctions are `√2 sin(kπx)` with eigenvalues
//! `1/(π²k²)`, so `T*T` has eigenvalues `(πk)^{-4}`.
//!
//! Truth coefficients follow the closed forms used for the two benchmark
//! functions (hat function and indicator of `[1/4, 3/4]`):
//!
//! ```text
//! hat:        f_k = ((-1)^k - 1) / (4 π³ k²)
//! indicator:  f_k = (-1)^k sin(πk/2) / (2 π² k)
//! ```
//!
//! Projecting the functions on `√2 sin(kπx)` gives coefficients whose
//! magnitudes are a constant multiple of these: `4√2 π` for the hat function
//! and `4π` for the indicator (see [`sine_basis_coefficient`]); the signs
//! differ as well, which has no statistical effect because the noise is
//! symmetric. [`make_green_problem`] uses the closed forms above with `sigma`
//! the noise on every coefficient.
//!
//! [`make_sampled_green_problem`] instead models data observed at `n`
//! midpoints `x_i = (2i - 1)/(2n)` with white noise of standard deviation
//! `sigma` on each sample. In the orthonormal sine basis this leaves
//! `sigma / sqrt(n)` on each coefficient, and the truth is expanded in
//! `√2 sin(kπx)`. See [`GreenNoise`].

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::rng::{substream, NormalStream};
use crate::spectral::SpectralProblem;

/// Sweep cap of the Jacobi eigensolver.
pub const JACOBI_MAX_SWEEPS: usize = 50;
/// Relative off-diagonal Frobenius mass at which Jacobi stops.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
/// Largest matrix order the eigensolver accepts.
pub const JACOBI_MAX_ORDER: usize = 512;

/// Multiplicative perturbation standard deviation of the diagonal problem's
/// random truth.
pub const DIAGONAL_TRUTH_JITTER: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestFunction {
    /// `x` on `[0, 1/2]`, `1 - x` on `[1/2, 1]`.
    HatFunction,
    /// Indicator of `[1/4, 3/4]`.
    Indicator,
}

impl TestFunction {
    /// Closed-form coefficient of mode `k >= 1`.
    pub fn coefficient(self, k: usize) -> f64 {
        let kf = k as f64;
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        match self {
            TestFunction::HatFunction => {
                if k.is_multiple_of(2) {
                    0.0
                } else {
                    (sign - 1.0) / (4.0 * PI.powi(3) * kf * kf)
                }
            }
            TestFunction::Indicator => {
                // sin(πk/2) is exactly 0, 1, 0, -1 for k = 0, 1, 2, 3 mod 4
                let sine = match k % 4 {
                    1 => 1.0,
                    3 => -1.0,
                    _ => 0.0,
                };
                sign * sine / (2.0 * PI * PI * kf)
            }
        }
    }

    /// Point evaluation on `[0, 1]`.
    pub fn eval(self, x: f64) -> f64 {
        match self {
            TestFunction::HatFunction => {
                if x <= 0.5 {
                    x
                } else {
                    1.0 - x
                }
            }
            TestFunction::Indicator => {
                if (0.25..=0.75).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Ratio between sine-basis and closed-form coefficient magnitudes.
    pub fn sine_basis_scale(self) -> f64 {
        match self {
            TestFunction::HatFunction => 4.0 * 2f64.sqrt() * PI,
            TestFunction::Indicator => 4.0 * PI,
        }
    }
}

/// `<f, √2 sin(kπ·)>` in closed form.
pub fn sine_basis_coefficient(truth: TestFunction, k: usize) -> f64 {
    let kf = k as f64;
    match truth {
        // 2√2 sin(kπ/2) / (kπ)²
        TestFunction::HatFunction => {
            let sine = match k % 4 {
                1 => 1.0,
                3 => -1.0,
                _ => 0.0,
            };
            2.0 * 2f64.sqrt() * sine / (kf * kf * PI * PI)
        }
        // √2 (cos(kπ/4) - cos(3kπ/4)) / (kπ)
        TestFunction::Indicator => {
            let pattern = match k % 8 {
                1 | 7 => 1.0,
                3 | 5 => -1.0,
                _ => 0.0,
            };
            2.0 * pattern / (kf * PI)
        }
    }
}

/// Interpretation of the noise level of a Green-kernel problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GreenNoise {
    /// `sigma` is the noise on every coefficient; closed-form truth.
    Coefficient,
    /// `sigma` is white noise on as many equispaced samples as there are
    /// modes; sine-basis truth.
    Sampled,
}

/// Eigenvalue `(πk)^{-4}` of `T*T` for the Green-kernel operator.
pub fn green_eigenvalue(k: usize) -> f64 {
    (PI * k as f64).powi(-4)
}

/// Green-kernel problem truncated to `n_modes` modes.
pub fn make_green_problem(
    n_modes: usize,
    truth: TestFunction,
    sigma: f64,
) -> Result<SpectralProblem> {
    if n_modes < 1 {
        return Err(invalid("n_modes must be at least 1"));
    }
    let eigenvalues = (1..=n_modes).map(green_eigenvalue).collect();
    let coeffs = (1..=n_modes).map(|k| truth.coefficient(k)).collect();
    SpectralProblem::new(eigenvalues, coeffs, sigma)
}

/// Green-kernel problem for data sampled at `n_modes` midpoints with
/// per-sample noise `sigma`: coefficient noise `sigma / sqrt(n_modes)` and
/// truth `<f, √2 sin(kπ·)>`.
pub fn make_sampled_green_problem(
    n_modes: usize,
    truth: TestFunction,
    sigma: f64,
) -> Result<SpectralProblem> {
    if n_modes < 1 {
        return Err(invalid("n_modes must be at least 1"));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(invalid(format!(
            "sigma must be positive and finite, got {sigma}"
        )));
    }
    let eigenvalues = (1..=n_modes).map(green_eigenvalue).collect();
    let coeffs = (1..=n_modes)
        .map(|k| sine_basis_coefficient(truth, k))
        .collect();
    SpectralProblem::new(eigenvalues, coeffs, sigma / (n_modes as f64).sqrt())
}

/// Green-kernel problem under either noise interpretation.
pub fn make_green_problem_with(
    n_modes: usize,
    truth: TestFunction,
    sigma: f64,
    noise: GreenNoise,
) -> Result<SpectralProblem> {
    match noise {
        GreenNoise::Coefficient => make_green_problem(n_modes, truth, sigma),
        GreenNoise::Sampled => make_sampled_green_problem(n_modes, truth, sigma),
    }
}

/// Diagonal problem with singular values `k^{-a}` (eigenvalues `k^{-2a}`)
/// and random truth `±k^{-nu} (1 + 0.1 z)`, signs and `z` drawn from `seed`.
pub fn make_diagonal_problem(
    n: usize,
    a: f64,
    nu: f64,
    sigma: f64,
    seed: u64,
) -> Result<SpectralProblem> {
    if n < 1 {
        return Err(invalid("n must be at least 1"));
    }
    if !(a > 0.0) || !(nu > 0.0) {
        return Err(invalid(format!(
            "decay parameters must be positive, got a = {a}, nu = {nu}"
        )));
    }
    let eigenvalues = (1..=n).map(|k| (k as f64).powf(-2.0 * a)).collect();
    let mut signs = NormalStream::new(substream(seed, 1));
    let mut jitter = NormalStream::new(substream(seed, 2));
    let truth = (1..=n)
        .map(|k| {
            let sign = if signs.bit() { 1.0 } else { -1.0 };
            sign * (k as f64).powf(-nu) * (1.0 + DIAGONAL_TRUTH_JITTER * jitter.normal())
        })
        .collect();
    SpectralProblem::new(eigenvalues, truth, sigma)
}

/// Symmetric matrix in row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetricMatrix {
    order: usize,
    entries: Vec<f64>,
}

impl DenseSymmetricMatrix {
    /// Builds the matrix from its upper triangle `entry(i, j)`, `i <= j`.
    pub fn from_fn(order: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = vec![0.0; order * order];
        for i in 0..order {
            for j in i..order {
                let v = entry(i, j);
                entries[i * order + j] = v;
                entries[j * order + i] = v;
            }
        }
        Self { order, entries }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.order + j]
    }

    fn frobenius(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn off_diagonal(&self) -> f64 {
        let n = self.order;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let v = self.entries[i * n + j];
                    acc += v * v;
                }
            }
        }
        acc.sqrt()
    }
}

/// Midpoint-rule discretization `M_ij = k(x_i, x_j) / n`,
/// `x_i = (2i - 1) / (2n)`, of the Green-kernel operator.
pub fn discretize_integral_operator(n: usize) -> Result<DenseSymmetricMatrix> {
    if n < 2 {
        return Err(invalid("discretization needs n >= 2"));
    }
    let nodes: Vec<f64> = (1..=n)
        .map(|i| (2 * i - 1) as f64 / (2 * n) as f64)
        .collect();
    let h = 1.0 / n as f64;
    Ok(DenseSymmetricMatrix::from_fn(n, |i, j| {
        let (x, y) = (nodes[i], nodes[j]);
        h * (x * (1.0 - y)).min(y * (1.0 - x))
    }))
}

/// The `count` largest eigenvalues, descending, by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(m: &DenseSymmetricMatrix, count: usize) -> Result<Vec<f64>> {
    let n = m.order;
    if count > n {
        return Err(invalid(format!(
            "requested {count} eigenvalues of an order-{n} matrix"
        )));
    }
    if n > JACOBI_MAX_ORDER {
        return Err(invalid(format!(
            "order {n} exceeds the supported {JACOBI_MAX_ORDER}"
        )));
    }
    let mut a = m.clone();
    let target = JACOBI_TOLERANCE * a.frobenius();
    let mut converged = a.off_diagonal() <= target;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NumericFailure(format!(
                "Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps"
            )));
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, p, q);
            }
        }
        sweeps += 1;
        converged = a.off_diagonal() <= target;
    }
    let mut diag: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    diag.sort_by(|x, y| y.total_cmp(x));
    diag.truncate(count);
    Ok(diag)
}

/// Annihilates `a[p][q]` with a plane rotation applied from both sides.
fn rotate(a: &mut DenseSymmetricMatrix, p: usize, q: usize) {
    let n = a.order;
    let e = &mut a.entries;
    let apq = e[p * n + q];
    if apq == 0.0 {
        return;
    }
    let app = e[p * n + p];
    let aqq = e[q * n + q];
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
    let c = 1.0 / t.hypot(1.0);
    let s = t * c;
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = e[k * n + p];
        let akq = e[k * n + q];
        let new_kp = c * akp - s * akq;
        let new_kq = s * akp + c * akq;
        e[k * n + p] = new_kp;
        e[p * n + k] = new_kp;
        e[k * n + q] = new_kq;
        e[q * n + k] = new_kq;
    }
    e[p * n + p] = app - t * apq;
    e[q * n + q] = aqq + t * apq;
    e[p * n + q] = 0.0;
    e[q * n + p] = 0.0;
}
