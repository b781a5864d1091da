//! One-dimensional maximization: uniform grid bootstrap followed by
//! golden-section refinement around the best grid point.

/// Grid points used to bracket the maximum before refinement.
pub const GRID_POINTS: usize = 10_000;

/// Bracket width at which golden-section search stops.
pub const REFINE_TOL: f64 = 1e-10;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes `f` over `[lo, hi]`. Returns `(argmax, max)`.
///
/// Ties on the grid resolve to the smaller argument. The refinement only
/// replaces the grid answer when it strictly improves on it.
pub fn maximize<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> (f64, f64) {
    assert!(lo <= hi, "empty search interval");
    if hi - lo <= REFINE_TOL {
        return (lo, f(lo));
    }
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let at = |k: usize| {
        if k == GRID_POINTS - 1 {
            hi
        } else {
            lo + step * k as f64
        }
    };
    let mut best_k = 0;
    let mut best = f(lo);
    for k in 1..GRID_POINTS {
        let v = f(at(k));
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let mut a = at(best_k.saturating_sub(1));
    let mut b = at((best_k + 1).min(GRID_POINTS - 1));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > REFINE_TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    if fx > best {
        (x, fx)
    } else {
        (at(best_k), best)
    }
}
