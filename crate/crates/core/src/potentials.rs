//! Pair interaction potentials and their structural constants.
//!
//! Every potential here is stable (`U >= -nL`), shift invariant, symmetric,
//! and vanishes on empty and single-particle configurations. Pair energies
//! may be `+inf` (hard cores); downstream Boltzmann weights treat
//! `exp(beta * inf)` as zero for `beta < 0`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::domain::{distance3, BoxDomain};
use crate::error::{Error, Result};
use crate::partition::log_kinetic_factor;
use crate::quad;

/// Functional form of the pair energy `Φ(r)`.
#[derive(Clone)]
pub enum PairForm {
    /// No interaction, `U ≡ 0`.
    Ideal,
    /// `+inf` for `r < sigma`, zero outside.
    HardSphere { sigma: f64 },
    /// Hard core at `sigma`, constant well `-depth` on `[sigma, range)`.
    SquareWell { sigma: f64, range: f64, depth: f64 },
    /// Truncated and shifted Lennard-Jones, zero beyond `cutoff`.
    LennardJonesTs { sigma: f64, epsilon: f64, cutoff: f64 },
    /// Arbitrary radial function, used mainly by tests.
    Custom { f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, breakpoints: Vec<f64> },
}

impl fmt::Debug for PairForm {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairForm::Ideal => write!(fm, "Ideal"),
            PairForm::HardSphere { sigma } => write!(fm, "HardSphere {{ sigma: {sigma} }}"),
            PairForm::SquareWell { sigma, range, depth } => {
                write!(fm, "SquareWell {{ sigma: {sigma}, range: {range}, depth: {depth} }}")
            }
            PairForm::LennardJonesTs { sigma, epsilon, cutoff } => {
                write!(fm, "LennardJonesTs {{ sigma: {sigma}, epsilon: {epsilon}, cutoff: {cutoff} }}")
            }
            PairForm::Custom { breakpoints, .. } => {
                write!(fm, "Custom {{ breakpoints: {breakpoints:?} }}")
            }
        }
    }
}

/// A pair interaction together with its structural constants.
///
/// `stability_l` is a valid global stability constant: the total energy of
/// any `n`-point configuration is bounded below by `-n * stability_l`.
/// `range` is the interaction range (`None` for unbounded support);
/// `tempered_k` / `tempered_delta` witness the temperedness decay
/// `K N1 N2 / d^delta` with `delta > 3`.
#[derive(Debug, Clone)]
pub struct PairPotential {
    pub name: String,
    pub form: PairForm,
    pub stability_l: f64,
    pub range: Option<f64>,
    pub tempered_k: f64,
    pub tempered_delta: f64,
}

impl PairPotential {
    pub fn ideal() -> Self {
        PairPotential {
            name: "ideal".into(),
            form: PairForm::Ideal,
            stability_l: 0.0,
            range: Some(0.0),
            tempered_k: 0.0,
            tempered_delta: 4.0,
        }
    }

    pub fn hard_spheres(sigma: f64) -> Self {
        PairPotential {
            name: "hard-spheres".into(),
            form: PairForm::HardSphere { sigma },
            stability_l: 0.0,
            range: Some(sigma),
            tempered_k: 0.0,
            tempered_delta: 4.0,
        }
    }

    pub fn square_well(sigma: f64, range: f64, depth: f64) -> Self {
        let l = if range > sigma { depth * max_neighbors_in_shell(sigma, range) as f64 } else { 0.0 };
        PairPotential {
            name: "square-well".into(),
            form: PairForm::SquareWell { sigma, range, depth },
            stability_l: l,
            range: Some(range),
            tempered_k: 0.0,
            tempered_delta: 4.0,
        }
    }

    /// Truncated-shifted Lennard-Jones. The stability constant is a
    /// conservative bound: fcc lattice sums for the full potential give about
    /// 17.2 eps per particle in the ordered-pair convention; we round up.
    pub fn lennard_jones_ts(sigma: f64, epsilon: f64, cutoff: f64) -> Self {
        PairPotential {
            name: "lennard-jones-ts".into(),
            form: PairForm::LennardJonesTs { sigma, epsilon, cutoff },
            stability_l: 24.0 * epsilon,
            range: Some(cutoff),
            tempered_k: 0.0,
            tempered_delta: 4.0,
        }
    }

    /// The four built-in potentials with default parameters.
    pub fn catalog() -> Vec<PairPotential> {
        vec![
            PairPotential::ideal(),
            PairPotential::hard_spheres(1.0),
            PairPotential::square_well(1.0, 1.5, 1.0),
            PairPotential::lennard_jones_ts(1.0, 1.0, 2.5),
        ]
    }

    pub fn is_ideal(&self) -> bool {
        matches!(self.form, PairForm::Ideal)
    }

    /// Hard-core diameter, if the potential has one.
    pub fn hard_core(&self) -> Option<f64> {
        match self.form {
            PairForm::HardSphere { sigma } | PairForm::SquareWell { sigma, .. } => Some(sigma),
            _ => None,
        }
    }

    /// Pair energy `Φ(r)`; may be `+inf`.
    pub fn pair_energy(&self, r: f64) -> f64 {
        match &self.form {
            PairForm::Ideal => 0.0,
            PairForm::HardSphere { sigma } => {
                if r < *sigma {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            PairForm::SquareWell { sigma, range, depth } => {
                if r < *sigma {
                    f64::INFINITY
                } else if r < *range {
                    -depth
                } else {
                    0.0
                }
            }
            PairForm::LennardJonesTs { sigma, epsilon, cutoff } => {
                if r >= *cutoff {
                    0.0
                } else {
                    let lj = |x: f64| {
                        let s6 = (sigma / x).powi(6);
                        4.0 * epsilon * (s6 * s6 - s6)
                    };
                    lj(r) - lj(*cutoff)
                }
            }
            PairForm::Custom { f, .. } => f(r),
        }
    }

    /// Radii where `Φ` may jump; used to split quadratures.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.form {
            PairForm::Ideal => vec![],
            PairForm::HardSphere { sigma } => vec![*sigma],
            PairForm::SquareWell { sigma, range, .. } => vec![*sigma, *range],
            PairForm::LennardJonesTs { sigma, cutoff, .. } => vec![*sigma, *cutoff],
            PairForm::Custom { breakpoints, .. } => breakpoints.clone(),
        }
    }

    /// Total energy `U(q_1..q_n) = Σ_{i≠j} Φ(|q_i - q_j|)`: every unordered
    /// pair counts twice. Zero for `n <= 1`.
    pub fn total_potential(&self, positions: &[[f64; 3]]) -> f64 {
        if self.is_ideal() || positions.len() < 2 {
            return 0.0;
        }
        let mut u = 0.0;
        for i in 0..positions.len() {
            for j in (i + 1)..positions.len() {
                let phi = self.pair_energy(distance3(positions[i], positions[j]));
                if phi == f64::INFINITY {
                    return f64::INFINITY;
                }
                u += 2.0 * phi;
            }
        }
        u
    }

    /// Estimate of the per-`n` stability constant `L_Λ^(n)`: the search
    /// returns `-U_min / n` for the lowest total energy found by multistart
    /// sampling, local simplex descent, and (for `n <= 3`) a dense grid pass.
    ///
    /// The result never exceeds the global `stability_l`. It is an estimate
    /// from below of the true per-`n` constant; the reported search budget is
    /// `opts.multistarts` random starts plus the grid. Returns `-inf` when no
    /// finite-energy configuration exists in the box (overpacked hard cores).
    pub fn per_n_stability(&self, bx: &BoxDomain, n: usize, opts: &StabilitySearchOpts) -> f64 {
        if n <= 1 || self.is_ideal() {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        let mut best_cfg: Option<Vec<[f64; 3]>> = None;
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (n as u64).wrapping_mul(0x9e37_79b9));
        let eval = |cfg: &[[f64; 3]]| self.total_potential(cfg);

        for s in 0..opts.multistarts {
            // sequential insertion with core rejection finds valid packings
            // far more often than plain uniform draws
            let cfg: Vec<[f64; 3]> = if self.hard_core().is_some() && s % 2 == 0 {
                let core = self.hard_core().unwrap();
                let mut cfg: Vec<[f64; 3]> = Vec::with_capacity(n);
                for _ in 0..n {
                    let mut placed = None;
                    for _ in 0..64 {
                        let q = random_point(&mut rng, bx);
                        if cfg.iter().all(|&p| distance3(p, q) >= core) {
                            placed = Some(q);
                            break;
                        }
                    }
                    match placed {
                        Some(q) => cfg.push(q),
                        None => break,
                    }
                }
                if cfg.len() < n {
                    continue;
                }
                cfg
            } else {
                (0..n).map(|_| random_point(&mut rng, bx)).collect()
            };
            let u = eval(&cfg);
            if u < best {
                best = u;
                best_cfg = Some(cfg);
            }
        }

        if n <= 3 {
            // 3n-dimensional tensor grid; drop the resolution for n = 3 to
            // keep the point count bounded
            let g = if n == 3 { (opts.grid_per_axis / 2).max(3) } else { opts.grid_per_axis };
            let mut idx = vec![0usize; 3 * n];
            let step: Vec<f64> = (0..3 * n).map(|k| bx.sides[k % 3] / (g - 1) as f64).collect();
            'grid: loop {
                let cfg: Vec<[f64; 3]> = (0..n)
                    .map(|i| {
                        [
                            idx[3 * i] as f64 * step[3 * i],
                            idx[3 * i + 1] as f64 * step[3 * i + 1],
                            idx[3 * i + 2] as f64 * step[3 * i + 2],
                        ]
                    })
                    .collect();
                let u = eval(&cfg);
                if u < best {
                    best = u;
                    best_cfg = Some(cfg);
                }
                for k in 0..3 * n {
                    idx[k] += 1;
                    if idx[k] < g {
                        continue 'grid;
                    }
                    idx[k] = 0;
                }
                break;
            }
        }

        if let Some(cfg) = best_cfg {
            if best.is_finite() {
                let refined = nelder_mead_box(&eval, &cfg, bx, opts.descent_iters);
                best = best.min(refined);
            }
        }
        if !best.is_finite() {
            return f64::NEG_INFINITY;
        }
        // -U_min/n, clipped at the global constant which it can only reach
        // from below (modulo descent round-off).
        (-best / n as f64).min(self.stability_l)
    }

    /// The Mayer-type integral `C(β) = 4π ∫_0^∞ |e^{βΦ(r)} - 1| r² dr`.
    pub fn mayer_integral(&self, beta: f64) -> Result<f64> {
        if beta >= 0.0 {
            return Err(Error::domain(format!("mayer integral requires beta < 0, got {beta}")));
        }
        if self.is_ideal() {
            return Ok(0.0);
        }
        let integrand = |r: f64| {
            let phi = self.pair_energy(r);
            let w = if phi == f64::INFINITY { 0.0 } else { (beta * phi).exp() };
            (w - 1.0).abs() * r * r
        };
        let value = match self.range {
            Some(range) => {
                let mut pts = vec![0.0];
                pts.extend(self.breakpoints().into_iter().filter(|&b| b > 0.0 && b < range));
                pts.push(range);
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                quad::integrate_segments(&integrand, &pts, 1e-13, 1e-11).0
            }
            None => {
                let mut pts = vec![0.0];
                pts.extend(self.breakpoints().into_iter().filter(|&b| b > 0.0));
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                let near_end = *pts.last().unwrap_or(&1.0) + 1.0;
                pts.push(near_end);
                let (head, _) = quad::integrate_segments(&integrand, &pts, 1e-13, 1e-11);
                let tail = quad::integrate_to_infinity(&integrand, near_end, 1e-13, 1e-11, 48)
                    .ok_or_else(|| {
                        Error::Divergence(
                            "mayer integrand tail fails the temperedness decay test".into(),
                        )
                    })?;
                head + tail.0
            }
        };
        Ok(4.0 * PI * value)
    }

    /// Upper bound on `μ` for the low-density analyticity region:
    /// `μ < 2βL - 1 - log C(β) - log ∫ exp(λ·p + β|p|²/2) dp`.
    ///
    /// For the ideal gas `C(β) = 0` and every `μ` is admissible; the bound is
    /// then `+inf` with `degenerate = true`.
    pub fn analyticity_bound(&self, lambda: [f64; 3], beta: f64) -> Result<AnalyticityBound> {
        if beta >= 0.0 {
            return Err(Error::domain(format!(
                "analyticity bound requires beta < 0, got {beta}"
            )));
        }
        let c = self.mayer_integral(beta)?;
        if c == 0.0 {
            return Ok(AnalyticityBound { mu_max: f64::INFINITY, degenerate: true });
        }
        let mu_max =
            2.0 * beta * self.stability_l - 1.0 - c.ln() - log_kinetic_factor(lambda, beta)?;
        Ok(AnalyticityBound { mu_max, degenerate: false })
    }
}

/// Result of [`PairPotential::analyticity_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticityBound {
    pub mu_max: f64,
    /// True when `C(β) = 0` and the bound is vacuous (`mu_max = +inf`).
    pub degenerate: bool,
}

/// Budget knobs for [`PairPotential::per_n_stability`].
#[derive(Debug, Clone)]
pub struct StabilitySearchOpts {
    pub multistarts: usize,
    pub descent_iters: usize,
    pub grid_per_axis: usize,
    pub seed: u64,
}

impl Default for StabilitySearchOpts {
    fn default() -> Self {
        StabilitySearchOpts { multistarts: 256, descent_iters: 400, grid_per_axis: 7, seed: 1 }
    }
}

/// Spherical-cap packing bound on the number of neighbors a particle can have
/// inside radius `range` when all pair distances are at least `sigma`.
/// Neighbors live in the shell `[sigma, range]`; their pairwise angular
/// separation is at least `acos(1 - sigma²/(2 range²))`, so caps of half that
/// angular radius are disjoint on the unit sphere.
pub fn max_neighbors_in_shell(sigma: f64, range: f64) -> usize {
    assert!(range > sigma && sigma > 0.0);
    let cos_theta = 1.0 - sigma * sigma / (2.0 * range * range);
    let half = cos_theta.clamp(-1.0, 1.0).acos() / 2.0;
    let cap_fraction = (1.0 - half.cos()) / 2.0;
    (1.0 / cap_fraction).floor() as usize
}

fn random_point(rng: &mut ChaCha8Rng, bx: &BoxDomain) -> [f64; 3] {
    [
        rng.random::<f64>() * bx.sides[0],
        rng.random::<f64>() * bx.sides[1],
        rng.random::<f64>() * bx.sides[2],
    ]
}

/// Nelder-Mead simplex descent over configurations clamped to the box.
/// Returns the best total energy seen. Good enough for the smooth catalog
/// members; for piecewise-constant wells it degenerates to a local probe,
/// which the grid and multistart phases back up.
fn nelder_mead_box(
    eval: &dyn Fn(&[[f64; 3]]) -> f64,
    start: &[[f64; 3]],
    bx: &BoxDomain,
    iters: usize,
) -> f64 {
    let dim = 3 * start.len();
    let flat = |cfg: &[[f64; 3]]| -> Vec<f64> { cfg.iter().flatten().copied().collect() };
    let unflat = |x: &[f64]| -> Vec<[f64; 3]> {
        x.chunks(3)
            .map(|c| {
                [
                    c[0].clamp(0.0, bx.sides[0]),
                    c[1].clamp(0.0, bx.sides[1]),
                    c[2].clamp(0.0, bx.sides[2]),
                ]
            })
            .collect()
    };
    let f = |x: &[f64]| eval(&unflat(x));

    let x0 = flat(start);
    let h = 0.05 * bx.min_side();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.clone(), f(&x0)));
    for k in 0..dim {
        let mut x = x0.clone();
        x[k] += h;
        let fx = f(&x);
        simplex.push((x, fx));
    }

    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let worst = simplex[dim].clone();
        let centroid: Vec<f64> = (0..dim)
            .map(|k| simplex[..dim].iter().map(|(x, _)| x[k]).sum::<f64>() / dim as f64)
            .collect();
        let shifted = |t: f64| -> Vec<f64> {
            (0..dim).map(|k| centroid[k] + t * (centroid[k] - worst.0[k])).collect()
        };
        let xr = shifted(1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = shifted(2.0);
            let fe = f(&xe);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
        } else {
            let xc = shifted(-0.5);
            let fc = f(&xc);
            if fc < worst.1 {
                simplex[dim] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> =
                        (0..dim).map(|k| 0.5 * (entry.0[k] + best[k])).collect();
                    let fx = f(&x);
                    *entry = (x, fx);
                }
            }
        }
    }
    simplex.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min)
}

/// Declarative form of a potential as it appears in run configs; kind plus
/// geometry parameters, echoed verbatim into result files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
}

impl PotentialSpec {
    pub fn ideal() -> Self {
        PotentialSpec { kind: "ideal".into(), sigma: None, epsilon: None, range: None, cutoff: None }
    }

    pub fn build(&self) -> Result<PairPotential> {
        let sigma = self.sigma.unwrap_or(1.0);
        let epsilon = self.epsilon.unwrap_or(1.0);
        match self.kind.as_str() {
            "ideal" => Ok(PairPotential::ideal()),
            "hard-spheres" => Ok(PairPotential::hard_spheres(sigma)),
            "square-well" => {
                let range = self.range.unwrap_or(1.5 * sigma);
                if range <= sigma {
                    return Err(Error::config(format!(
                        "square well range {range} must exceed sigma {sigma}"
                    )));
                }
                Ok(PairPotential::square_well(sigma, range, epsilon))
            }
            "lennard-jones" => {
                let cutoff = self.cutoff.unwrap_or(2.5 * sigma);
                if cutoff <= sigma {
                    return Err(Error::config(format!(
                        "lennard-jones cutoff {cutoff} must exceed sigma {sigma}"
                    )));
                }
                Ok(PairPotential::lennard_jones_ts(sigma, epsilon, cutoff))
            }
            other => Err(Error::config(format!("unknown potential kind: {other}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_box() -> BoxDomain {
        BoxDomain::cube(1.0).unwrap()
    }

    #[test]
    fn total_potential_trivial_cases() {
        for p in PairPotential::catalog() {
            assert_eq!(p.total_potential(&[]), 0.0);
            assert_eq!(p.total_potential(&[[0.3, 0.4, 0.5]]), 0.0);
        }
    }

    #[test]
    fn hard_sphere_overlap_is_infinite() {
        let hs = PairPotential::hard_spheres(1.0);
        let u = hs.total_potential(&[[0.0, 0.0, 0.0], [0.5, 0.0, 0.0]]);
        assert_eq!(u, f64::INFINITY);
        let u = hs.total_potential(&[[0.0, 0.0, 0.0], [1.5, 0.0, 0.0]]);
        assert_eq!(u, 0.0);
    }

    #[test]
    fn ordered_pair_double_counting() {
        let sw = PairPotential::square_well(1.0, 1.5, 1.0);
        // two particles in the well: U = 2 * Φ = -2
        let u = sw.total_potential(&[[0.0, 0.0, 0.0], [1.2, 0.0, 0.0]]);
        assert_abs_diff_eq!(u, -2.0, epsilon = 1e-14);
    }

    #[test]
    fn per_n_stability_ideal_and_hard_spheres() {
        let opts = StabilitySearchOpts { multistarts: 64, descent_iters: 50, ..Default::default() };
        let bx = BoxDomain::cube(3.0).unwrap();
        assert_eq!(PairPotential::ideal().per_n_stability(&bx, 5, &opts), 0.0);
        // inf U = 0 since U ∈ {0, +inf}
        let hs = PairPotential::hard_spheres(1.0);
        assert_eq!(hs.per_n_stability(&bx, 3, &opts), 0.0);
    }

    #[test]
    fn per_n_stability_square_well_pair_in_unit_box() {
        // Independent oracle: dense grid over the relative displacement in
        // the unit box. Minimum of U = 2Φ is -2 (a pair inside the well), so
        // L_2 = depth = 1.
        let sw = PairPotential::square_well(1.0, 1.5, 1.0);
        let mut grid_best = f64::INFINITY;
        let g = 41;
        for ix in 0..g {
            for iy in 0..g {
                for iz in 0..g {
                    let q2 = [ix as f64 / (g - 1) as f64, iy as f64 / (g - 1) as f64, iz as f64 / (g - 1) as f64];
                    let u = sw.total_potential(&[[0.0, 0.0, 0.0], q2]);
                    grid_best = grid_best.min(u);
                }
            }
        }
        assert_abs_diff_eq!(grid_best, -2.0, epsilon = 1e-12);

        let l2 = sw.per_n_stability(&unit_box(), 2, &StabilitySearchOpts::default());
        assert!(l2 > 0.0 && l2 <= 1.0 + 1e-12, "L_2 = {l2}");
        assert_abs_diff_eq!(l2, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn per_n_stability_overpacked_box_is_degenerate() {
        let hs = PairPotential::hard_spheres(2.0);
        // no two cores of diameter 2 fit in a unit box
        let l = hs.per_n_stability(&unit_box(), 2, &StabilitySearchOpts::default());
        assert_eq!(l, f64::NEG_INFINITY);
    }

    #[test]
    fn mayer_integral_catalog_values() {
        assert_eq!(PairPotential::ideal().mayer_integral(-1.0).unwrap(), 0.0);

        // hard spheres: integrand is 1 on r < sigma, 0 outside
        let hs = PairPotential::hard_spheres(1.0);
        assert_abs_diff_eq!(hs.mayer_integral(-1.0).unwrap(), 4.0 * PI / 3.0, epsilon = 1e-9);

        // square well, beta = -1: analytic radial integral
        let sw = PairPotential::square_well(1.0, 1.5, 1.0);
        let expect = 4.0 * PI / 3.0 * (1.0 + (1f64.exp() - 1.0) * (1.5f64.powi(3) - 1.0));
        assert_abs_diff_eq!(sw.mayer_integral(-1.0).unwrap(), expect, epsilon = 1e-8);
    }

    #[test]
    fn mayer_integral_rejects_nonnegative_beta() {
        let hs = PairPotential::hard_spheres(1.0);
        assert!(matches!(hs.mayer_integral(0.0), Err(Error::Domain(_))));
        assert!(matches!(hs.mayer_integral(0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn mayer_integral_flags_untempered_tail() {
        // Φ(r) ~ r^{-2} decays too slowly in 3 dimensions
        let slow = PairPotential {
            name: "untempered".into(),
            form: PairForm::Custom { f: Arc::new(|r: f64| 1.0 / (r * r).max(1e-12)), breakpoints: vec![] },
            stability_l: 0.0,
            range: None,
            tempered_k: 1.0,
            tempered_delta: 2.0,
        };
        assert!(matches!(slow.mayer_integral(-1.0), Err(Error::Divergence(_))));
    }

    #[test]
    fn mayer_monotone_in_beta_magnitude_for_nonnegative_potentials() {
        let hs = PairPotential::hard_spheres(1.0);
        let mut last = 0.0;
        for k in 1..=5 {
            let v = hs.mayer_integral(-(k as f64) * 0.5).unwrap();
            assert!(v >= last - 1e-12);
            last = v;
        }
    }

    #[test]
    fn analyticity_bound_values() {
        // hard spheres: L = 0, C = 4π/3, kinetic factor (2π)^{3/2}
        let hs = PairPotential::hard_spheres(1.0);
        let b = hs.analyticity_bound([0.0; 3], -1.0).unwrap();
        let expect = -(1.0 + (4.0 * PI / 3.0).ln() + 1.5 * (2.0 * PI).ln());
        assert!(!b.degenerate);
        assert_abs_diff_eq!(b.mu_max, expect, epsilon = 1e-8);

        let ideal = PairPotential::ideal().analyticity_bound([0.0; 3], -1.0).unwrap();
        assert!(ideal.degenerate);
        assert_eq!(ideal.mu_max, f64::INFINITY);

        let sw = PairPotential::square_well(1.0, 1.5, 1.0);
        let b = sw.analyticity_bound([0.0; 3], -1.0).unwrap();
        assert!(b.mu_max.is_finite());
    }

    #[test]
    fn stability_sampling_respects_per_n_constant() {
        // randomized witness of U >= -n L̂_n - tol across the catalog
        let bx = BoxDomain::cube(2.5).unwrap();
        let opts = StabilitySearchOpts::default();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for p in PairPotential::catalog() {
            for n in 2..=5usize {
                let l = p.per_n_stability(&bx, n, &opts);
                if l == f64::NEG_INFINITY {
                    continue;
                }
                for _ in 0..2000 {
                    let cfg: Vec<[f64; 3]> = (0..n).map(|_| random_point(&mut rng, &bx)).collect();
                    let u = p.total_potential(&cfg);
                    assert!(
                        u >= -(n as f64) * l - 1e-9,
                        "{}: U = {u} below -nL = {}",
                        p.name,
                        -(n as f64) * l
                    );
                }
            }
        }
    }

    #[test]
    fn stability_estimate_monotone_in_box_size() {
        let sw = PairPotential::square_well(1.0, 1.5, 1.0);
        let opts = StabilitySearchOpts::default();
        let mut last = f64::NEG_INFINITY;
        for side in [1.0, 1.5, 2.0] {
            let bx = BoxDomain::cube(side).unwrap();
            let l = sw.per_n_stability(&bx, 2, &opts);
            assert!(l >= last - 1e-9, "L_2 not monotone: {l} after {last}");
            last = l;
        }
    }

    #[test]
    fn spec_round_trip() {
        let spec = PotentialSpec {
            kind: "square-well".into(),
            sigma: Some(1.0),
            epsilon: Some(0.5),
            range: Some(1.4),
            cutoff: None,
        };
        let p = spec.build().unwrap();
        assert_abs_diff_eq!(p.pair_energy(1.2), -0.5, epsilon = 1e-15);
        assert!(PotentialSpec { kind: "nope".into(), ..PotentialSpec::ideal() }.build().is_err());
    }
}
