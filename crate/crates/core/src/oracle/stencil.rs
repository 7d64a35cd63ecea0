//! Five-point central stencils and Richardson extrapolation.

use num_complex::Complex64;

/// Five-point central first derivative, error `O(h^4)`.
pub fn central_first<F>(f: &F, x: f64, h: f64) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// Five-point central second derivative, error `O(h^4)`.
pub fn central_second<F>(f: &F, x: f64, h: f64) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h * h)
}

/// Richardson table over step sizes `h, h/2, ..., h/2^(levels-1)` for an
/// estimate whose error expands in even powers starting at `h^4`.
pub fn richardson<E>(estimate: E, h: f64, levels: usize) -> Complex64
where
    E: Fn(f64) -> Complex64,
{
    assert!(levels >= 1);
    let mut prev: Vec<Complex64> = Vec::with_capacity(levels);
    for i in 0..levels {
        let mut row = Vec::with_capacity(i + 1);
        row.push(estimate(h / f64::powi(2.0, i as i32)));
        for j in 1..=i {
            let factor = f64::powi(2.0, 2 * j as i32 + 2) - 1.0;
            let better = row[j - 1] + (row[j - 1] - prev[j - 1]) / factor;
            row.push(better);
        }
        prev = row;
    }
    prev[levels - 1]
}

pub fn first_derivative<F>(f: &F, x: f64, h: f64, levels: usize) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    richardson(|s| central_first(f, x, s), h, levels)
}

pub fn second_derivative<F>(f: &F, x: f64, h: f64, levels: usize) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    richardson(|s| central_second(f, x, s), h, levels)
}
