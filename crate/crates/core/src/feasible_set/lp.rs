//! Separation margin LP, solved through its dual with a 4-row revised
//! simplex.
//!
//! Primal: maximize `ε` subject to `α · d_j >= ε` for all generator
//! differences `d_j = g_j - x` and box bounds `lo <= α <= hi`. The dual has
//! one simplex constraint plus three stationarity rows, so the basis is 4x4
//! regardless of how many generators there are; the primal `(ε, α)` is read
//! off the final simplex multipliers.

use nalgebra::{Matrix4, Vector4};

const PIVOT_TOL: f64 = 1e-10;

/// Returns `(ε*, α*)`. Positive `ε*` certifies separation with margin `ε*`
/// over the generator set; negative values measure interior depth in the
/// dual box norm.
pub(crate) fn separation_margin(
    diffs: &[[f64; 3]],
    lo: [f64; 3],
    hi: [f64; 3],
) -> (f64, [f64; 3]) {
    assert!(!diffs.is_empty());
    let m = diffs.len();
    let ncols = m + 6;

    let column = |j: usize| -> Vector4<f64> {
        if j < m {
            Vector4::new(1.0, diffs[j][0], diffs[j][1], diffs[j][2])
        } else if j < m + 3 {
            let mut c = Vector4::zeros();
            c[1 + (j - m)] = -1.0;
            c
        } else {
            let mut c = Vector4::zeros();
            c[1 + (j - m - 3)] = 1.0;
            c
        }
    };
    let cost = |j: usize| -> f64 {
        if j < m {
            0.0
        } else if j < m + 3 {
            hi[j - m]
        } else {
            -lo[j - m - 3]
        }
    };

    // start from θ_0 = 1 with sign-matched slack per axis
    let mut basis = [0usize; 4];
    for k in 0..3 {
        basis[k + 1] = if diffs[0][k] >= 0.0 { m + k } else { m + 3 + k };
    }
    let b = Vector4::new(1.0, 0.0, 0.0, 0.0);

    let max_iters = 64 * ncols;
    let mut in_basis = vec![false; ncols];
    for &j in &basis {
        in_basis[j] = true;
    }
    for _ in 0..max_iters {
        let bmat = Matrix4::from_columns(&[
            column(basis[0]),
            column(basis[1]),
            column(basis[2]),
            column(basis[3]),
        ]);
        let binv = match bmat.try_inverse() {
            Some(inv) => inv,
            None => break, // degenerate basis; keep the last multipliers
        };
        let xb = binv * b;
        let cb = Vector4::new(cost(basis[0]), cost(basis[1]), cost(basis[2]), cost(basis[3]));
        let y = binv.transpose() * cb;

        // Bland's rule: first improving column
        let mut entering = None;
        for j in 0..ncols {
            if in_basis[j] {
                continue;
            }
            let reduced = cost(j) - y.dot(&column(j));
            if reduced < -PIVOT_TOL {
                entering = Some(j);
                break;
            }
        }
        let entering = match entering {
            Some(j) => j,
            None => return (y[0], [-y[1], -y[2], -y[3]]),
        };
        let d = binv * column(entering);
        let mut leaving = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..4 {
            if d[i] > PIVOT_TOL {
                let ratio = xb[i] / d[i];
                if ratio < best_ratio - PIVOT_TOL
                    || (ratio < best_ratio + PIVOT_TOL
                        && leaving.is_some_and(|l: usize| basis[i] < basis[l]))
                {
                    best_ratio = ratio;
                    leaving = Some(i);
                }
            }
        }
        let leaving = match leaving {
            Some(i) => i,
            None => break, // dual unbounded; cannot happen for bounded boxes
        };
        in_basis[basis[leaving]] = false;
        in_basis[entering] = true;
        basis[leaving] = entering;
    }

    // fallback: recompute multipliers from the current basis
    let bmat = Matrix4::from_columns(&[
        column(basis[0]),
        column(basis[1]),
        column(basis[2]),
        column(basis[3]),
    ]);
    let cb = Vector4::new(cost(basis[0]), cost(basis[1]), cost(basis[2]), cost(basis[3]));
    match bmat.try_inverse() {
        Some(binv) => {
            let y = binv.transpose() * cb;
            (y[0], [-y[1], -y[2], -y[3]])
        }
        None => (0.0, [0.0, 0.0, 1.0]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const BOX_LO: [f64; 3] = [-1.0, -1.0, 0.0];
    const BOX_HI: [f64; 3] = [1.0, 0.0, 1.0];

    /// Brute-force oracle: dense sweep over the α box.
    fn oracle(diffs: &[[f64; 3]], lo: [f64; 3], hi: [f64; 3]) -> f64 {
        let g = 60;
        let mut best = f64::NEG_INFINITY;
        for i in 0..=g {
            for j in 0..=g {
                for k in 0..=g {
                    let a = [
                        lo[0] + (hi[0] - lo[0]) * i as f64 / g as f64,
                        lo[1] + (hi[1] - lo[1]) * j as f64 / g as f64,
                        lo[2] + (hi[2] - lo[2]) * k as f64 / g as f64,
                    ];
                    let worst = diffs
                        .iter()
                        .map(|d| a[0] * d[0] + a[1] * d[1] + a[2] * d[2])
                        .fold(f64::INFINITY, f64::min);
                    best = best.max(worst);
                }
            }
        }
        best
    }

    #[test]
    fn separates_point_from_cluster() {
        // generators clustered near the origin, query far below in the first
        // coordinate: diffs = g - x all have large positive first component
        let diffs = vec![[2.0, 0.1, 0.4], [2.2, -0.3, 0.2], [1.9, 0.0, 0.9]];
        let (eps, alpha) = separation_margin(&diffs, BOX_LO, BOX_HI);
        assert!(eps > 1.5, "eps = {eps}");
        for d in &diffs {
            let v = alpha[0] * d[0] + alpha[1] * d[1] + alpha[2] * d[2];
            assert!(v >= eps - 1e-9);
        }
        assert_abs_diff_eq!(eps, oracle(&diffs, BOX_LO, BOX_HI), epsilon = 0.08);
    }

    #[test]
    fn interior_point_has_negative_margin() {
        // generators surround the origin in every coordinate
        let diffs = vec![
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.5],
            [0.0, -1.0, 0.5],
            [0.0, 0.0, -1.0],
            [0.0, 0.0, 1.0],
        ];
        let (eps, _) = separation_margin(&diffs, BOX_LO, BOX_HI);
        assert!(eps < -0.3, "eps = {eps}");
        assert_abs_diff_eq!(eps, oracle(&diffs, BOX_LO, BOX_HI), epsilon = 0.08);
    }

    #[test]
    fn matches_oracle_on_random_instances() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..25 {
            let m = rng.random_range(3..40);
            let diffs: Vec<[f64; 3]> = (0..m)
                .map(|_| {
                    [
                        rng.random_range(-3.0..3.0),
                        rng.random_range(-3.0..3.0),
                        rng.random_range(-3.0..3.0),
                    ]
                })
                .collect();
            let (eps, alpha) = separation_margin(&diffs, BOX_LO, BOX_HI);
            // primal feasibility of the reported α
            let worst = diffs
                .iter()
                .map(|d| alpha[0] * d[0] + alpha[1] * d[1] + alpha[2] * d[2])
                .fold(f64::INFINITY, f64::min);
            assert_abs_diff_eq!(worst, eps, epsilon = 1e-8);
            assert!(alpha[0] >= -1.0 - 1e-9 && alpha[0] <= 1.0 + 1e-9);
            assert!(alpha[1] >= -1.0 - 1e-9 && alpha[1] <= 1e-9);
            assert!(alpha[2] >= -1e-9 && alpha[2] <= 1.0 + 1e-9);
            assert_abs_diff_eq!(eps, oracle(&diffs, BOX_LO, BOX_HI), epsilon = 0.1);
        }
    }
}
