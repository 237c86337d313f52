//! The limiting intensity measure on the cone of ordered tuples and the
//! Poisson rate constants for block-count limits.
//!
//! The measure on `{(x_1, ..., x_N, y) : 0 < x_1 <= ... <= x_N <= y}` has
//! density `theta * N! / y^{N+1}`. Window masses are computed exactly: for a
//! box window the ordered x-volume below a level is a piecewise polynomial,
//! built coordinate by coordinate by exact antidifferentiation, and the final
//! y-integral of `polynomial / y^{N+1}` is a sum of power-rule and log terms.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::special::reg_inc_beta;

#[derive(Debug, Error, PartialEq)]
pub enum WindowError {
    #[error("interval ({0}, {1}] is empty or negative")]
    EmptyInterval(f64, f64),
    #[error("window has infinite intensity mass")]
    InfiniteMass,
    #[error("dimension mismatch: window has N = {0}, expected {1}")]
    Dimension(usize, usize),
}

/// A box constraint intersected with the cone: half-open intervals
/// `(l_i, u_i]` per x-coordinate and `(l_y, u_y]` for the last coordinate.
/// Upper bounds may be infinite; the mass computation reports divergence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeWindow {
    pub x_bounds: Vec<(f64, f64)>,
    pub y_bounds: (f64, f64),
}

impl ConeWindow {
    pub fn new(x_bounds: Vec<(f64, f64)>, y_bounds: (f64, f64)) -> Result<Self, WindowError> {
        for &(l, u) in x_bounds.iter().chain(std::iter::once(&y_bounds)) {
            if !(l >= 0.0) || !(u > l) {
                return Err(WindowError::EmptyInterval(l, u));
            }
        }
        Ok(Self { x_bounds, y_bounds })
    }

    pub fn n(&self) -> usize {
        self.x_bounds.len()
    }

    /// Membership: the box constraints plus the cone ordering
    /// `0 < x_1 <= ... <= x_N <= y`.
    pub fn contains(&self, point: &[f64]) -> bool {
        if point.len() != self.n() + 1 {
            return false;
        }
        let y = point[self.n()];
        let in_cone = point[0] > 0.0
            && point.windows(2).all(|w| w[0] <= w[1]);
        let in_box = self
            .x_bounds
            .iter()
            .zip(point)
            .all(|(&(l, u), &x)| x > l && x <= u)
            && y > self.y_bounds.0
            && y <= self.y_bounds.1;
        in_cone && in_box
    }

    /// The window scaled by c > 0.
    pub fn scaled(&self, c: f64) -> Self {
        assert!(c > 0.0);
        Self {
            x_bounds: self.x_bounds.iter().map(|&(l, u)| (c * l, c * u)).collect(),
            y_bounds: (c * self.y_bounds.0, c * self.y_bounds.1),
        }
    }

    /// Lift to dimension M: the first N x-intervals are kept, the old
    /// y-interval constrains coordinate N+1, and the remaining coordinates
    /// (including the new y) are free above it.
    pub fn lift(&self, m: usize) -> Self {
        assert!(m >= self.n());
        if m == self.n() {
            return self.clone();
        }
        let mut x_bounds = self.x_bounds.clone();
        x_bounds.push(self.y_bounds);
        x_bounds.extend(std::iter::repeat((0.0, f64::INFINITY)).take(m - self.n() - 1));
        Self { x_bounds, y_bounds: (0.0, f64::INFINITY) }
    }
}

// Piecewise polynomial on [0, inf): polys[i] applies on
// [breaks[i], breaks[i+1]), the last piece on [breaks.last(), inf).
#[derive(Debug, Clone)]
struct Piecewise {
    breaks: Vec<f64>,
    polys: Vec<Vec<f64>>,
}

fn poly_eval(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

fn poly_antiderivative(coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0];
    out.extend(coeffs.iter().enumerate().map(|(k, &c)| c / (k as f64 + 1.0)));
    out
}

impl Piecewise {
    fn one() -> Self {
        Self { breaks: vec![0.0], polys: vec![vec![1.0]] }
    }

    fn piece_index(&self, t: f64) -> usize {
        match self.breaks.binary_search_by(|b| b.partial_cmp(&t).unwrap()) {
            Ok(i) => i,
            Err(i) => i - 1,
        }
    }

    fn eval(&self, t: f64) -> f64 {
        poly_eval(&self.polys[self.piece_index(t)], t)
    }

    fn with_break(mut self, b: f64) -> Self {
        if b.is_finite() && !self.breaks.iter().any(|&x| x == b) {
            let i = self.piece_index(b);
            self.breaks.insert(i + 1, b);
            let poly = self.polys[i].clone();
            self.polys.insert(i + 1, poly);
        }
        self
    }

    /// W(t) = integral of self over (l, min(u, t)]; zero for t <= l and
    /// constant for t >= u.
    fn chain_integral(&self, l: f64, u: f64) -> Self {
        let base = self.clone().with_break(l).with_break(u);
        // continuous antiderivative F with F(0) = 0
        let mut f_polys = Vec::with_capacity(base.polys.len());
        let mut offset = 0.0;
        for (i, poly) in base.polys.iter().enumerate() {
            let mut anti = poly_antiderivative(poly);
            let start = base.breaks[i];
            anti[0] += offset - poly_eval(&anti, start);
            // track the value at the right endpoint for the next constant
            if i + 1 < base.breaks.len() {
                offset = poly_eval(&anti, base.breaks[i + 1]);
            }
            f_polys.push(anti);
        }
        let f = Piecewise { breaks: base.breaks, polys: f_polys };
        let f_l = f.eval(l);
        let f_u = if u.is_finite() { f.eval(u) } else { f64::NAN };
        let polys = f
            .breaks
            .iter()
            .zip(&f.polys)
            .map(|(&start, poly)| {
                if start < l {
                    vec![0.0]
                } else if u.is_finite() && start >= u {
                    vec![f_u - f_l]
                } else {
                    let mut p = poly.clone();
                    p[0] -= f_l;
                    p
                }
            })
            .collect();
        Piecewise { breaks: f.breaks, polys }
    }
}

/// Exact mass of a box window under the intensity `theta * N! / y^{N+1}`.
pub fn mass(window: &ConeWindow, theta: f64) -> Result<f64, WindowError> {
    ConeWindow::new(window.x_bounds.clone(), window.y_bounds)?;
    let n = window.n();
    assert!(n >= 1, "window must have at least one x-coordinate");
    // ordered x-volume below level t, as a piecewise polynomial in t
    let mut w = Piecewise::one();
    for &(l, u) in &window.x_bounds {
        w = w.chain_integral(l, u);
    }
    let n_fact: f64 = (1..=n as u64).map(|i| i as f64).product();
    let (l_y, u_y) = window.y_bounds;
    let mut total = 0.0;
    for (i, poly) in w.polys.iter().enumerate() {
        let lo = w.breaks[i].max(l_y);
        let hi = if i + 1 < w.breaks.len() { w.breaks[i + 1].min(u_y) } else { u_y };
        if hi <= lo {
            continue;
        }
        for (k, &c) in poly.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let power = k as i64 - n as i64 - 1; // integrand term c * y^power
            total += c * match power {
                -1 => {
                    if lo == 0.0 || hi.is_infinite() {
                        return Err(WindowError::InfiniteMass);
                    }
                    (hi / lo).ln()
                }
                p if p < -1 => {
                    if lo == 0.0 {
                        return Err(WindowError::InfiniteMass);
                    }
                    let q = (p + 1) as f64;
                    let upper = if hi.is_infinite() { 0.0 } else { hi.powf(q) };
                    (upper - lo.powf(q)) / q
                }
                p => {
                    // nonnegative power: finite only on a bounded range
                    if hi.is_infinite() {
                        return Err(WindowError::InfiniteMass);
                    }
                    let q = (p + 1) as f64;
                    (hi.powf(q) - lo.powf(q)) / q
                }
            };
        }
    }
    Ok(theta * n_fact * total)
}

/// Mass of the lifted window at dimension `m` versus the original at
/// dimension N; the consistency identity says the difference vanishes.
pub fn consistency_check(
    window: &ConeWindow,
    m: usize,
    theta: f64,
) -> Result<(f64, f64, f64), WindowError> {
    let mass_n = mass(window, theta)?;
    let mass_m = mass(&window.lift(m), theta)?;
    Ok((mass_n, mass_m, mass_m - mass_n))
}

fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Poisson mean of the count of blocks that have size i at time 1 and size j
/// at time alpha: `(theta / j) C(j, i) alpha^{-i} (1 - alpha^{-1})^{j-i}`.
/// `i = 0` covers blocks born after time 1.
pub fn lambda_ij(theta: f64, alpha: f64, i: u64, j: u64) -> f64 {
    assert!(alpha > 1.0 && j >= 1 && i <= j);
    theta / j as f64
        * binomial(j, i)
        * alpha.powi(-(i as i32))
        * (1.0 - 1.0 / alpha).powi((j - i) as i32)
}

/// Poisson mean of the count of blocks of size i at time 1 that exceed size N
/// by time alpha: `(theta / i) I_{1 - 1/alpha}(N - i + 1, i)`.
pub fn lambda_tail(theta: f64, alpha: f64, i: u64, n: u64) -> f64 {
    assert!(alpha > 1.0 && i >= 1 && n >= i);
    theta / i as f64 * reg_inc_beta(1.0 - 1.0 / alpha, (n - i + 1) as f64, i as f64)
}

/// Tail mean via the row identity `theta/i - sum_{j=i}^N lambda_ij`; the dual
/// route to [`lambda_tail`].
pub fn lambda_tail_via_rows(theta: f64, alpha: f64, i: u64, n: u64) -> f64 {
    assert!(i >= 1 && n >= i);
    theta / i as f64 - (i..=n).map(|j| lambda_ij(theta, alpha, i, j)).sum::<f64>()
}

/// Checks the negative-binomial CDF identity
/// `sum_{j=0}^{N-i} C(j+i-1, j) alpha^{-i} (1-alpha^{-1})^j == I_{1/alpha}(i, N-i+1)`
/// to 1e-12.
pub fn negbin_cdf_identity_check(i: u64, alpha: f64, n: u64) -> bool {
    assert!(i >= 1 && n >= i && alpha > 1.0);
    let lhs: f64 = (0..=(n - i))
        .map(|j| binomial(j + i - 1, j) * alpha.powi(-(i as i32)) * (1.0 - 1.0 / alpha).powi(j as i32))
        .sum();
    let rhs = reg_inc_beta(1.0 / alpha, i as f64, (n - i + 1) as f64);
    (lhs - rhs).abs() <= 1e-12
}

/// The full rate table for the joint block-count limit at times 1 and alpha.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropCountsConstants {
    pub theta: f64,
    pub alpha: f64,
    pub n: u64,
    /// lambda[i][j - i] for 0 <= i <= j <= N (row i lists j = max(i,1)..=N).
    pub lambda: Vec<Vec<f64>>,
    /// tail[i - 1] for 1 <= i <= N.
    pub tail: Vec<f64>,
}

impl PropCountsConstants {
    pub fn new(theta: f64, alpha: f64, n: u64) -> Self {
        let lambda = (0..=n)
            .map(|i| (i.max(1)..=n).map(|j| lambda_ij(theta, alpha, i, j)).collect())
            .collect();
        let tail = (1..=n).map(|i| lambda_tail(theta, alpha, i, n)).collect();
        Self { theta, alpha, n, lambda, tail }
    }

    pub fn get(&self, i: u64, j: u64) -> f64 {
        self.lambda[i as usize][(j - i.max(1)) as usize]
    }

    pub fn tail(&self, i: u64) -> f64 {
        self.tail[i as usize - 1]
    }

    /// Row sum `sum_j lambda_ij + lambda_{i,>N}`, which must equal theta / i.
    pub fn row_sum(&self, i: u64) -> f64 {
        (i..=self.n).map(|j| self.get(i, j)).sum::<f64>() + self.tail(i)
    }

    /// Poisson mean of C_i at time alpha: `sum_{i'=0}^{i} lambda_{i', i}`.
    pub fn column_sum(&self, j: u64) -> f64 {
        (0..=j).map(|i| self.get(i, j)).sum()
    }
}

/// The window whose count is the number of blocks of size exactly k at time
/// beta: first k coordinates in (0, beta], the rest above beta.
pub fn block_count_window(k: usize, beta: f64, n: usize) -> ConeWindow {
    assert!(k >= 1 && k <= n);
    let mut x_bounds = vec![(0.0, beta); k];
    x_bounds.extend(std::iter::repeat((beta, f64::INFINITY)).take(n - k));
    ConeWindow { x_bounds, y_bounds: (beta, f64::INFINITY) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn membership() {
        let w = ConeWindow::new(vec![(0.2, 1.0)], (1.0, 2.0)).unwrap();
        assert!(w.contains(&[0.5, 1.5]));
        assert!(!w.contains(&[0.2, 1.5])); // half-open at the left
        assert!(w.contains(&[1.0, 2.0])); // closed at the right
        assert!(!w.contains(&[0.5, 2.5]));
        let cone = ConeWindow::new(vec![(0.0, 5.0), (0.0, 5.0)], (0.0, 5.0)).unwrap();
        assert!(cone.contains(&[1.0, 2.0, 3.0]));
        assert!(!cone.contains(&[2.0, 1.0, 3.0])); // violates ordering
    }

    #[test]
    fn mass_log_window() {
        // {(x, y): a < x <= b, y > x}: mass = theta log(b/a)
        let e = std::f64::consts::E;
        let w = ConeWindow::new(vec![(1.0, e)], (0.0, f64::INFINITY)).unwrap();
        assert_abs_diff_eq!(mass(&w, 1.0).unwrap(), 1.0, epsilon = 1e-12);
        let w = ConeWindow::new(vec![(0.5, 2.0)], (0.0, f64::INFINITY)).unwrap();
        assert_abs_diff_eq!(mass(&w, 3.0).unwrap(), 3.0 * 4.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn mass_strip_window() {
        // {(x, y): 0 < x <= t, y > t}: mass = theta for every t
        for &t in &[0.25, 1.0, 7.0] {
            let w = ConeWindow::new(vec![(0.0, t)], (t, f64::INFINITY)).unwrap();
            assert_abs_diff_eq!(mass(&w, 2.5).unwrap(), 2.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn mass_box_n1() {
        // x in (a, b], y in (c, d] with b <= c: mass = theta (b - a)(1/c - 1/d)
        let w = ConeWindow::new(vec![(0.5, 1.0)], (1.0, 2.0)).unwrap();
        assert_abs_diff_eq!(mass(&w, 1.0).unwrap(), 0.5 * 0.5, epsilon = 1e-13);
    }

    #[test]
    fn infinite_mass_detected() {
        // unbounded x with y above it diverges logarithmically
        let w = ConeWindow::new(vec![(1.0, f64::INFINITY)], (1.0, f64::INFINITY)).unwrap();
        assert_eq!(mass(&w, 1.0), Err(WindowError::InfiniteMass));
        // mass near y = 0 diverges when all lower bounds vanish
        let w = ConeWindow::new(vec![(0.0, 1.0)], (0.0, 1.0)).unwrap();
        assert_eq!(mass(&w, 1.0), Err(WindowError::InfiniteMass));
    }

    #[test]
    fn scale_invariance_randomized() {
        let mut rng = crate::rng::derive_rng(3, &[20]);
        for _ in 0..20 {
            let n = rng.random_range(1..=3usize);
            let mut lo = 0.0f64;
            let mut x_bounds = Vec::new();
            for _ in 0..n {
                let l: f64 = lo + rng.random::<f64>() * 0.5;
                let u = l + 0.1 + rng.random::<f64>();
                x_bounds.push((l, u));
                lo = l * 0.3;
            }
            let l_y: f64 = 0.5 + rng.random::<f64>();
            let u_y = l_y + 0.1 + 2.0 * rng.random::<f64>();
            let w = ConeWindow::new(x_bounds, (l_y, u_y)).unwrap();
            let c = 0.1 + 5.0 * rng.random::<f64>();
            let m0 = mass(&w, 1.7).unwrap();
            let m1 = mass(&w.scaled(c), 1.7).unwrap();
            assert!((m0 - m1).abs() <= 1e-9 * m0.abs().max(1.0), "{m0} vs {m1}");
        }
    }

    #[test]
    fn consistency_identity() {
        // identity lift
        let w = ConeWindow::new(vec![(0.0, 1.0)], (1.0, 2.0)).unwrap();
        let (a, b, diff) = consistency_check(&w, 1, 1.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(diff, 0.0);
        // N=1 -> M=2 on (0,1] x (1,2]: both sides theta/2
        for &theta in &[1.0, 2.5] {
            let (a, b, diff) = consistency_check(&w, 2, theta).unwrap();
            assert_abs_diff_eq!(a, theta * 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(b, theta * 0.5, epsilon = 1e-12);
            assert!(diff.abs() <= 1e-10);
        }
        // deeper lifts on a random-ish window
        let w = ConeWindow::new(vec![(0.3, 0.9)], (1.2, 3.7)).unwrap();
        for m in 2..=4usize {
            let (_, _, diff) = consistency_check(&w, m, 2.5).unwrap();
            assert!(diff.abs() <= 1e-8, "M={m}: diff {diff}");
        }
    }

    #[test]
    fn mass_matches_quadrature_n2() {
        // independent oracle: nested Simpson quadrature at N = 2
        let w = ConeWindow::new(vec![(0.2, 0.8), (0.5, 1.1)], (0.9, 2.0)).unwrap();
        let theta = 1.4;
        let exact = mass(&w, theta).unwrap();
        let simpson = |f: &dyn Fn(f64) -> f64, a: f64, b: f64, k: usize| -> f64 {
            let h = (b - a) / k as f64;
            (0..k)
                .map(|i| {
                    let x0 = a + i as f64 * h;
                    (f(x0) + 4.0 * f(x0 + h / 2.0) + f(x0 + h)) * h / 6.0
                })
                .sum()
        };
        let integrand_y = |y: f64| -> f64 {
            // volume of {x1 in (0.2, 0.8], x2 in (0.5, 1.1], x1 <= x2 <= y}
            let inner = |x1: f64| -> f64 {
                let lo = x1.max(0.5);
                let hi = y.min(1.1);
                (hi - lo).max(0.0)
            };
            simpson(&inner, 0.2, 0.8f64.min(y), 800) * theta * 2.0 / y.powi(3)
        };
        let numeric = simpson(&integrand_y, 0.9, 2.0, 800);
        assert!((exact - numeric).abs() < 1e-6, "{exact} vs {numeric}");
    }

    #[test]
    fn lambda_examples() {
        assert_abs_diff_eq!(lambda_ij(1.0, 2.0, 1, 1), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(lambda_tail(1.0, 2.0, 1, 1), 0.5, epsilon = 1e-13);
        // row identity at theta=2, alpha=3, i=2, N=5: theta/i = 1
        let c = PropCountsConstants::new(2.0, 3.0, 5);
        assert_abs_diff_eq!(c.row_sum(2), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn lambda_tail_dual_routes() {
        for &alpha in &[1.5, 2.0, 4.0] {
            for n in 1..=8u64 {
                for i in 1..=n.min(5) {
                    let a = lambda_tail(1.3, alpha, i, n);
                    let b = lambda_tail_via_rows(1.3, alpha, i, n);
                    assert!((a - b).abs() <= 1e-12, "i={i} N={n} alpha={alpha}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn lambda_tail_matches_series() {
        // lambda_{i,>N} = sum_{j=N+1}^inf lambda_ij, truncated at 200
        let (theta, alpha) = (1.0, 2.0);
        for n in 1..=4u64 {
            for i in 1..=n {
                let series: f64 = (n + 1..=200).map(|j| lambda_ij(theta, alpha, i, j)).sum();
                assert!((lambda_tail(theta, alpha, i, n) - series).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn negbin_identity() {
        assert!(negbin_cdf_identity_check(1, 2.0, 1));
        assert!(negbin_cdf_identity_check(2, 2.0, 2));
        assert!(negbin_cdf_identity_check(3, 1.5, 9));
        // CDF limit: large N drives the sum to 1
        let lhs: f64 = (0..=60u64)
            .map(|j| binomial(j, j) * 0.0 + binomial(j + 1 - 1, j) * 0.5 * 0.5f64.powi(j as i32))
            .sum();
        assert!((lhs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_ij_equals_window_mass() {
        // the rate lambda_ij is the mass of the corresponding history window:
        // i coordinates in (0,1], coordinates i+1..j in (1,alpha], the rest
        // and y above alpha
        let (theta, alpha) = (1.3, 2.4);
        let n = 3usize;
        for j in 1..=n as u64 {
            for i in 0..=j {
                let mut x_bounds = vec![(0.0, 1.0); i as usize];
                x_bounds.extend(std::iter::repeat((1.0, alpha)).take((j - i) as usize));
                x_bounds.extend(
                    std::iter::repeat((alpha, f64::INFINITY)).take(n - j as usize),
                );
                let w = ConeWindow::new(x_bounds, (alpha, f64::INFINITY)).unwrap();
                assert_abs_diff_eq!(
                    mass(&w, theta).unwrap(),
                    lambda_ij(theta, alpha, i, j),
                    epsilon = 1e-12
                );
            }
        }
        // and the tail rate is the mass of the early-overflow window
        for i in 1..=n as u64 {
            let mut x_bounds = vec![(0.0, 1.0); i as usize];
            x_bounds.extend(std::iter::repeat((1.0, alpha)).take(n - i as usize));
            let w = ConeWindow::new(x_bounds, (1.0, alpha)).unwrap();
            assert_abs_diff_eq!(
                mass(&w, theta).unwrap(),
                lambda_tail(theta, alpha, i as u64, n as u64),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn block_count_window_mass() {
        // counting blocks of size k at time beta has Poisson mean theta / k
        for &beta in &[1.0, 2.0] {
            for k in 1..=3usize {
                let w = block_count_window(k, beta, 3);
                assert_abs_diff_eq!(mass(&w, 1.5).unwrap(), 1.5 / k as f64, epsilon = 1e-12);
            }
        }
    }
}
