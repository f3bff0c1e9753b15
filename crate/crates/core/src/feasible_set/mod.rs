//! Geometry of the achievable constraint set: per-`n` paraboloid slabs,
//! their convex hull, and interior/boundary/exterior membership tests.
//!
//! The hull of the essential range of `(N, P, H)` is rotation invariant in
//! the momentum coordinates, so membership reduces to three dimensions
//! `(N, |P|, H)`; each slab contributes its boundary parabola
//! `|P|² = 2n(H + n L_n)` plus the upward energy recession ray. Queries are
//! classified by LP separation over sampled parabola points; all arithmetic
//! is extensive, with the division by `|Λ|` confined to the public interface.

mod lp;

use serde::{Deserialize, Serialize};

use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::potentials::{PairPotential, StabilitySearchOpts};

/// Macroscopic constraints: density, momentum density, energy density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroState {
    pub rho: f64,
    pub u: [f64; 3],
    pub e: f64,
}

impl MacroState {
    pub fn new(rho: f64, u: [f64; 3], e: f64) -> Self {
        MacroState { rho, u, e }
    }

    pub fn as_vec5(&self) -> [f64; 5] {
        [self.rho, self.u[0], self.u[1], self.u[2], self.e]
    }

    pub fn from_vec5(v: [f64; 5]) -> Self {
        MacroState { rho: v[0], u: [v[1], v[2], v[3]], e: v[4] }
    }

    /// Extensive coordinates `(N, P, H) = |Λ| (ρ, u, E)`.
    pub fn extensive(&self, volume: f64) -> [f64; 5] {
        [
            volume * self.rho,
            volume * self.u[0],
            volume * self.u[1],
            volume * self.u[2],
            volume * self.e,
        ]
    }
}

/// Per-`n` constraint slab in extensive coordinates:
/// `{N = n, H >= -n L_n, |P|² <= 2n(H + n L_n)}`. For `n = 0` the slab is the
/// single point at the origin. `empty` marks particle numbers with no
/// finite-energy configuration in the box (overpacked hard cores).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlabDescription {
    pub n: usize,
    pub l_n: f64,
    pub empty: bool,
}

impl SlabDescription {
    /// Exact membership of an extensive point in this slab (no hull mixing).
    pub fn contains_extensive(&self, x: [f64; 5], tol: f64) -> bool {
        if self.empty {
            return false;
        }
        let n = self.n as f64;
        let p_sq = x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
        if (x[0] - n).abs() > tol {
            return false;
        }
        if self.n == 0 {
            return p_sq.sqrt() <= tol && x[4].abs() <= tol;
        }
        let base = x[4] + n * self.l_n;
        base >= -tol && p_sq <= 2.0 * n * base + tol
    }
}

/// Build the slab for particle number `n`; `L_n` comes from the stability
/// search on the box.
pub fn slab(
    potential: &PairPotential,
    bx: &BoxDomain,
    n: usize,
    opts: &StabilitySearchOpts,
) -> SlabDescription {
    if n == 0 {
        return SlabDescription { n: 0, l_n: 0.0, empty: false };
    }
    let l_n = potential.per_n_stability(bx, n, opts);
    SlabDescription { n, l_n, empty: l_n == f64::NEG_INFINITY }
}

/// Necessary condition for feasibility: `ρ > 0` and `E >= -Lρ`.
pub fn rough_bound_check(point: &MacroState, potential: &PairPotential) -> bool {
    point.rho > 0.0 && point.e >= -potential.stability_l * point.rho
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeasibilityStatus {
    Interior,
    Boundary,
    Exterior,
}

/// Outcome of a membership query.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeasibilityVerdict {
    pub status: FeasibilityStatus,
    /// Signed margin from the separation LP: positive values certify
    /// exterior separation over the sampled generators, negative values
    /// measure interior depth (both in the dual box norm).
    pub margin: f64,
    /// Separating direction `(α_0, α⃗, α_4)` with `α_4 > 0` for exterior
    /// verdicts that admit one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<[f64; 5]>,
    /// Set when the query sits within one slab of the hull truncation and
    /// the verdict may be biased by the missing high-`n` slabs.
    pub truncation_warning: bool,
}

/// Options for hull construction and membership classification.
#[derive(Debug, Clone)]
pub struct MembershipOpts {
    /// Slabs `n <= n_max` enter the hull.
    pub n_max: usize,
    /// Boundary samples per slab parabola.
    pub points_per_slab: usize,
    /// Half-width of the boundary band in margin units.
    pub tol: f64,
    /// Cap for sampled slab energies; `None` scales with the query.
    pub energy_cap: Option<f64>,
    pub stability: StabilitySearchOpts,
}

impl Default for MembershipOpts {
    fn default() -> Self {
        MembershipOpts {
            n_max: 32,
            points_per_slab: 200,
            tol: 1e-3,
            energy_cap: None,
            stability: StabilitySearchOpts::default(),
        }
    }
}

/// Precomputed hull data for one `(potential, box)` pair; the stability
/// searches dominate construction cost, so reuse this across queries.
pub struct FeasibleHull {
    volume: f64,
    slabs: Vec<SlabDescription>,
    opts: MembershipOpts,
}

impl FeasibleHull {
    pub fn build(potential: &PairPotential, bx: &BoxDomain, opts: MembershipOpts) -> Result<Self> {
        if opts.n_max < 1 {
            return Err(Error::config("membership requires n_max >= 1"));
        }
        let slabs = (0..=opts.n_max)
            .map(|n| slab(potential, bx, n, &opts.stability))
            .collect();
        Ok(FeasibleHull { volume: bx.volume(), slabs, opts })
    }

    pub fn slabs(&self) -> &[SlabDescription] {
        &self.slabs
    }

    /// Classify an intensive constraint point against the hull interior.
    pub fn membership(&self, point: &MacroState) -> FeasibilityVerdict {
        let x5 = point.extensive(self.volume);
        let x_n = x5[0];
        let x_t = (x5[1] * x5[1] + x5[2] * x5[2] + x5[3] * x5[3]).sqrt();
        let x_h = x5[4];

        let last_nonempty =
            self.slabs.iter().rev().find(|s| !s.empty).map(|s| s.n).unwrap_or(0);
        let truncation_warning = x_n >= last_nonempty as f64 - 1.0;

        // hull corner: the empty-configuration moment
        if x_n.abs() <= self.opts.tol && x_t <= self.opts.tol && x_h.abs() <= self.opts.tol {
            return FeasibilityVerdict {
                status: FeasibilityStatus::Boundary,
                margin: 0.0,
                witness: None,
                truncation_warning,
            };
        }

        let diffs = self.generator_diffs(x_n, x_t, x_h);
        let lo = [-1.0, -1.0, 1e-9];
        let hi = [1.0, 0.0, 1.0];
        let (eps, alpha3) = lp::separation_margin(&diffs, lo, hi);

        let status = if eps > self.opts.tol {
            FeasibilityStatus::Exterior
        } else if eps < -self.opts.tol {
            FeasibilityStatus::Interior
        } else {
            FeasibilityStatus::Boundary
        };

        // Points violating the rough necessary bound are never feasible,
        // whatever the sampled hull says about their closure.
        let rough_ok = point.rho > 0.0;
        let status = if !rough_ok { FeasibilityStatus::Exterior } else { status };

        let witness = (status == FeasibilityStatus::Exterior && eps > 0.0).then(|| {
            let p_hat = if x_t > 0.0 {
                [x5[1] / x_t, x5[2] / x_t, x5[3] / x_t]
            } else {
                [1.0, 0.0, 0.0]
            };
            [
                alpha3[0],
                alpha3[1] * p_hat[0],
                alpha3[1] * p_hat[1],
                alpha3[1] * p_hat[2],
                alpha3[2],
            ]
        });

        FeasibilityVerdict { status, margin: eps, witness, truncation_warning }
    }

    /// Sampled generator differences `g - x` in reduced `(N, |P|, H)`
    /// coordinates: the slab parabolas at quadratically spaced energies plus
    /// the origin slab.
    fn generator_diffs(&self, x_n: f64, x_t: f64, x_h: f64) -> Vec<[f64; 3]> {
        let l_bar = self
            .slabs
            .iter()
            .filter(|s| !s.empty)
            .map(|s| s.l_n.abs())
            .fold(0.0, f64::max);
        let h_cap = self.opts.energy_cap.unwrap_or_else(|| {
            4.0 * (x_h.abs() + x_t * x_t + self.opts.n_max as f64 * l_bar + 1.0)
        });

        let mut diffs = Vec::new();
        for s in &self.slabs {
            if s.empty {
                continue;
            }
            if s.n == 0 {
                diffs.push([-x_n, -x_t, -x_h]);
                continue;
            }
            let n = s.n as f64;
            let base = -n * s.l_n;
            let span = (h_cap - base).max(1.0);
            let m = self.opts.points_per_slab;
            for j in 0..m {
                let frac = j as f64 / (m - 1) as f64;
                let h = base + frac * frac * span;
                let t = (2.0 * n * (h - base)).max(0.0).sqrt();
                diffs.push([n - x_n, t - x_t, h - x_h]);
                // the parabola's mirror at |P| = 0 bounds the slab interior
                if j == 0 || j + 1 == m {
                    diffs.push([n - x_n, -x_t, h - x_h]);
                }
            }
        }
        diffs
    }
}

/// One-shot membership query; builds the hull and classifies `point`.
pub fn membership(
    point: &MacroState,
    potential: &PairPotential,
    bx: &BoxDomain,
    opts: MembershipOpts,
) -> Result<FeasibilityVerdict> {
    Ok(FeasibleHull::build(potential, bx, opts)?.membership(point))
}
