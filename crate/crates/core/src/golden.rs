//! Golden-section search for maximizing a unimodal function on an interval.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Result of a one-dimensional maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
}

fn score(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Maximizes `f` over `[lo, hi]` until the bracket is narrower than `tol`.
///
/// Only interior points are evaluated, so `f` may be undefined (or `-inf`)
/// at either endpoint. NaN evaluations count as `-inf`.
pub fn maximize<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Maximum {
    debug_assert!(lo <= hi);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = score(f(c));
    let mut fd = score(f(d));
    let mut iters = 0;
    while (b - a).abs() > tol && iters < 400 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = score(f(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = score(f(d));
        }
        iters += 1;
    }
    if fc >= fd {
        Maximum { x: c, value: fc }
    } else {
        Maximum { x: d, value: fd }
    }
}

/// Maximizes over a uniform grid on `[lo, hi]`, then refines with golden
/// section inside the bracket around the best grid point.
///
/// The returned point is never worse than the best grid point.
pub fn grid_then_golden<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    step: f64,
    tol: f64,
) -> Maximum {
    let n = ((hi - lo) / step).round().max(0.0) as usize;
    let grid = |k: usize| (lo + k as f64 * step).min(hi);
    let mut best_k = 0;
    let mut best = score(f(grid(0)));
    for k in 1..=n {
        let v = score(f(grid(k)));
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let left = grid(best_k.saturating_sub(1));
    let right = grid((best_k + 1).min(n));
    let refined = maximize(&mut f, left, right, tol);
    if refined.value > best {
        refined
    } else {
        Maximum {
            x: grid(best_k),
            value: best,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_peak() {
        let m = maximize(|x| -(x - 1.3).powi(2), 0.0, 4.0, 1e-10);
        assert!((m.x - 1.3).abs() < 1e-8);
    }

    #[test]
    fn boundary_maximum_on_monotone_function() {
        let m = maximize(|x| x, 0.0, 2.0, 1e-10);
        assert!((m.x - 2.0).abs() < 1e-8);
    }

    #[test]
    fn undefined_endpoint_is_tolerated() {
        // -1/(1.5 - x) + x is -inf at 1.5
        let m = maximize(|x| x - 0.01 / (1.5 - x), 1.0, 1.5, 1e-12);
        assert!(m.value.is_finite());
        assert!((m.x - 1.4).abs() < 1e-6);
    }

    #[test]
    fn grid_refinement_never_loses_to_grid() {
        let f = |x: f64| (x * 3.0).sin() - 0.1 * x;
        let m = grid_then_golden(f, 0.0, 10.0, 0.05, 1e-9);
        for k in 0..=200 {
            assert!(m.value >= f(k as f64 * 0.05) - 1e-12);
        }
    }
}
