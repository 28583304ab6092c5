//! Small combinatorial helpers shared by the state factories and the
//! closed-form evaluators.

use num_complex::Complex64 as C64;

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

pub fn sqrt_factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * (k as f64).sqrt())
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Unnormalized coherent-state coefficients `gamma^n / sqrt(n!)` for
/// `n = 0..len`; multiply by `exp(-|gamma|^2 / 2)` for the physical state.
pub fn coherent_coefficients(gamma: C64, len: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(len);
    let mut c = C64::new(1.0, 0.0);
    for n in 0..len {
        if n > 0 {
            c = c * gamma / (n as f64).sqrt();
        }
        out.push(c);
    }
    out
}

/// Poisson weight `exp(-mean) mean^n / n!` summed over `n > n_max`, summed
/// upward so that small tails are not lost to cancellation.
pub fn poisson_tail(mean: f64, n_max: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let mut term = (-mean).exp();
    for n in 1..=n_max + 1 {
        term *= mean / n as f64;
    }
    let mut total = 0.0;
    let mut n = n_max + 1;
    while term > 1e-300 && (total == 0.0 || term > total * 1e-18) {
        total += term;
        n += 1;
        term *= mean / n as f64;
        if n > n_max + 10_000 {
            break;
        }
    }
    total
}
