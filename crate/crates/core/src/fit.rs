// SPDX-License-Identifier: Apache-2.0

//! Least-squares polynomial fits and the largest contiguous sub-range of a
//! sweep that a low-degree polynomial explains.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PolyFit {
    /// Coefficients, constant term first.
    pub coeffs: Vec<f64>,
    pub r_squared: f64,
}

impl PolyFit {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

/// Fits a polynomial of `degree` to `(x, y)`. Abscissae are centred and
/// scaled before solving.
pub fn polyfit(x: &[f64], y: &[f64], degree: usize) -> Result<PolyFit> {
    if x.len() != y.len() || x.len() <= degree {
        return Err(Error::Format(format!(
            "degree-{degree} fit needs more than {degree} paired points, got {}/{}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mid = 0.5 * (lo + hi);
    let half = if hi > lo { 0.5 * (hi - lo) } else { 1.0 };
    let a = DMatrix::from_fn(n, degree + 1, |i, j| ((x[i] - mid) / half).powi(j as i32));
    let b = DVector::from_column_slice(y);
    let sol = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Format(format!("least squares failed: {e}")))?;

    // Back to raw x: p(x) = Σ c_j ((x - mid)/half)^j.
    let mut coeffs = vec![0.0; degree + 1];
    for (j, &c) in sol.iter().enumerate() {
        let scale = c / half.powi(j as i32);
        for (k, coeff) in coeffs.iter_mut().enumerate().take(j + 1) {
            *coeff += scale * binomial(j, k) as f64 * (-mid).powi((j - k) as i32);
        }
    }

    let fitted = &a * &sol;
    let mean = y.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(fitted.iter()).map(|(v, f)| (v - f).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(PolyFit { coeffs, r_squared })
}

fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeFit {
    pub degree: usize,
    /// Inclusive index range into the input.
    pub start: usize,
    pub end: usize,
    pub fit: PolyFit,
    /// Span of `y` covered, as a fraction of `full_span`.
    pub coverage: f64,
}

/// Largest contiguous run of points (by covered `y` span) whose
/// degree-`degree` fit reaches `r2_min`. Runs need at least `degree + 2`
/// points.
pub fn best_range(
    x: &[f64],
    y: &[f64],
    degree: usize,
    r2_min: f64,
    full_span: f64,
) -> Result<Option<RangeFit>> {
    if x.len() != y.len() {
        return Err(Error::Format("x and y lengths differ".into()));
    }
    if full_span.is_nan() || full_span <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "full_span",
            reason: "must be positive".into(),
        });
    }
    let n = x.len();
    let min_pts = degree + 2;
    let mut best: Option<RangeFit> = None;
    for start in 0..n {
        for end in (start + min_pts - 1)..n {
            let ys = &y[start..=end];
            let (lo, hi) = ys
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            let coverage = (hi - lo) / full_span;
            if best.as_ref().is_some_and(|b| coverage <= b.coverage) {
                continue;
            }
            let fit = polyfit(&x[start..=end], ys, degree)?;
            if fit.r_squared >= r2_min {
                best = Some(RangeFit {
                    degree,
                    start,
                    end,
                    fit,
                    coverage,
                });
            }
        }
    }
    Ok(best)
}

/// Best of the degree-1 and degree-2 ranges: larger coverage wins, the
/// lower degree on a tie.
pub fn best_low_degree_range(
    x: &[f64],
    y: &[f64],
    r2_min: f64,
    full_span: f64,
) -> Result<Option<RangeFit>> {
    let linear = best_range(x, y, 1, r2_min, full_span)?;
    let quadratic = best_range(x, y, 2, r2_min, full_span)?;
    Ok(match (linear, quadratic) {
        (Some(l), Some(q)) if q.coverage > l.coverage + 1e-12 => Some(q),
        (Some(l), _) => Some(l),
        (None, q) => q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn exact_quadratic_recovered() {
        let x: Vec<f64> = (0..20).map(|i| 0.3 + 0.02 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 1e-3 * (v - 0.3) * (v - 0.3) + 2e-6).collect();
        let f = polyfit(&x, &y, 2).unwrap();
        assert_relative_eq!(f.r_squared, 1.0, epsilon = 1e-12);
        for &v in &x {
            assert_relative_eq!(f.eval(v), 1e-3 * (v - 0.3).powi(2) + 2e-6, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_point_line() {
        let f = polyfit(&[1.0, 3.0], &[2.0, 6.0], 1).unwrap();
        assert_relative_eq!(f.coeffs[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(f.coeffs[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn too_few_points() {
        assert!(polyfit(&[1.0, 2.0], &[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn r_squared_hand_value() {
        // Line fit of (0,0),(1,1),(2,0): ŷ = 1/3, ss_res = 2/3, ss_tot = 2/3.
        let f = polyfit(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0], 1).unwrap();
        assert_relative_eq!(f.r_squared, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn quadratic_wins_on_parabola() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 / 39.0).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let r = best_low_degree_range(&x, &y, 0.999, 1.0).unwrap().unwrap();
        assert_eq!(r.degree, 2);
        assert_eq!((r.start, r.end), (0, 39));
    }

    #[test]
    fn linear_preferred_on_tie() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 1.0).collect();
        let r = best_low_degree_range(&x, &y, 0.98, 27.0).unwrap().unwrap();
        assert_eq!(r.degree, 1);
        assert_relative_eq!(r.coverage, 1.0);
    }

    #[test]
    fn clipped_tail_excluded() {
        let mut y: Vec<f64> = (0..20).map(|i| i as f64).collect();
        y.extend(std::iter::repeat_n(19.0, 10));
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let r = best_range(&x, &y, 1, 0.9999, 19.0).unwrap().unwrap();
        assert!(r.end <= 20);
        assert_relative_eq!(r.coverage, 1.0);
    }

    proptest! {
        #[test]
        fn fit_reproduces_any_line(a in -5.0f64..5.0, b in 0.1f64..5.0) {
            let x: Vec<f64> = (0..8).map(|i| i as f64 * 0.1).collect();
            let y: Vec<f64> = x.iter().map(|v| a + b * v).collect();
            let f = polyfit(&x, &y, 1).unwrap();
            prop_assert!((f.coeffs[0] - a).abs() < 1e-9);
            prop_assert!((f.coeffs[1] - b).abs() < 1e-9);
            prop_assert!(f.r_squared > 1.0 - 1e-9);
        }
    }
}
