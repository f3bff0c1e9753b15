//! Adaptive Gauss-Kronrod quadrature (G7/K15).

/// Kronrod abscissae for the 15-point rule on [-1, 1] (positive half).
const XGK: [f64; 8] = [
    0.991_455_371_120_813,
    0.949_107_912_342_759,
    0.864_864_423_359_769,
    0.741_531_185_599_394,
    0.586_087_235_467_691,
    0.405_845_151_377_397,
    0.207_784_955_007_898,
    0.0,
];

/// Kronrod weights paired with `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529,
    0.063_092_092_629_979,
    0.104_790_010_322_250,
    0.140_653_259_715_525,
    0.169_004_726_639_267,
    0.190_350_578_064_785,
    0.204_432_940_075_298,
    0.209_482_141_084_728,
];

/// Gauss weights for the embedded 7-point rule (nodes XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_870,
    0.279_705_391_489_277,
    0.381_830_050_505_119,
    0.417_959_183_673_469,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = 0.0;
    let mut gauss = 0.0;
    for (i, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let (fl, fr) = if x == 0.0 {
            let v = f(c);
            (v, 0.0)
        } else {
            (f(c - h * x), f(c + h * x))
        };
        let s = fl + fr;
        kron += wk * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, (kron - gauss).abs() * h)
}

/// Integrate `f` over `[a, b]` adaptively until the accumulated Kronrod error
/// estimate drops below `abs_tol + rel_tol * |I|`. Returns (value, error bound).
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> (f64, f64) {
    integrate_segments(&f, &[a, b], abs_tol, rel_tol)
}

/// Same as [`integrate`] but with interior breakpoints (e.g. hard-core radii
/// or potential cutoffs) where the integrand may jump.
pub fn integrate_segments(
    f: &dyn Fn(f64) -> f64,
    breakpoints: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> (f64, f64) {
    const MAX_PANELS: usize = 4096;
    // (neg error, value, a, b); a plain Vec scan keeps it dependency-free.
    let mut panels: Vec<(f64, f64, f64, f64)> = Vec::new();
    for w in breakpoints.windows(2) {
        if w[1] > w[0] {
            let (v, e) = gk15(f, w[0], w[1]);
            panels.push((e, v, w[0], w[1]));
        }
    }
    loop {
        let total: f64 = panels.iter().map(|p| p.1).sum();
        let err: f64 = panels.iter().map(|p| p.0).sum();
        if err <= abs_tol + rel_tol * total.abs() || panels.len() >= MAX_PANELS {
            return (total, err);
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .0.total_cmp(&y.1 .0))
            .expect("nonempty panel list");
        let (_, _, a, b) = panels.swap_remove(worst);
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            // interval exhausted at machine precision; keep its last estimate
            let (v, _) = gk15(f, a, b);
            panels.push((0.0, v, a, b));
            continue;
        }
        let (v1, e1) = gk15(f, a, m);
        let (v2, e2) = gk15(f, m, b);
        panels.push((e1, v1, a, m));
        panels.push((e2, v2, m, b));
    }
}

/// Integrate `f` over `[a, ∞)` by octave doubling: segments `[a, 2a+1]`,
/// `[2a+1, 2(2a+1)]`, ... are added until one falls below `tail_tol` in
/// absolute value. Returns `None` if the octave contributions fail to decay
/// over `max_octaves` doublings (numerical divergence).
pub fn integrate_to_infinity(
    f: impl Fn(f64) -> f64,
    a: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_octaves: u32,
) -> Option<(f64, f64)> {
    let mut lo = a;
    let mut hi = 2.0 * a.max(0.5) + 1.0;
    let mut total = 0.0;
    let mut err = 0.0;
    let mut prev = f64::INFINITY;
    let mut growing = 0u32;
    for _ in 0..max_octaves {
        let (v, e) = integrate(&f, lo, hi, abs_tol, rel_tol);
        total += v;
        err += e;
        let tail_tol = abs_tol.max(rel_tol * total.abs());
        if v.abs() <= tail_tol {
            return Some((total, err));
        }
        if v.abs() >= prev {
            growing += 1;
            if growing >= 3 {
                return None;
            }
        } else {
            growing = 0;
        }
        prev = v.abs();
        lo = hi;
        hi *= 2.0;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomial_is_exact() {
        let (v, _) = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-12, 1e-12);
        assert_abs_diff_eq!(v, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_tail() {
        let (v, _) = integrate_to_infinity(|x| (-x * x).exp(), 0.0, 1e-12, 1e-12, 40).unwrap();
        assert_abs_diff_eq!(v, 0.5 * std::f64::consts::PI.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn step_discontinuity_with_breakpoint() {
        let f = |x: f64| if x < 1.0 { 1.0 } else { 0.25 };
        let (v, _) = integrate_segments(&f, &[0.0, 1.0, 3.0], 1e-12, 1e-12);
        assert_abs_diff_eq!(v, 1.5, epsilon = 1e-12);
    }

    #[test]
    fn divergent_tail_detected() {
        // integrand ~ 1/x does not decay fast enough
        assert!(integrate_to_infinity(|x| 1.0 / (1.0 + x), 0.0, 1e-10, 1e-10, 30).is_none());
    }
}
