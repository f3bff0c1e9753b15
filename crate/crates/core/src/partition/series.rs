//! Truncated particle-number series for the grand-canonical partition
//! function with certified Poisson tail bounds.
//!
//! `Z(μ, λ, β) = Σ_n z^n Q_n(β)` with activity `z = e^μ K(λ, β)` and
//! `Q_n = (1/n!) ∫_{Λ^n} e^{βU} dq`. Stability gives
//! `Q_n <= (|Λ|^n/n!) e^{|β|Ln}`, so the dropped tail is bounded by
//! `Σ_{n>m} a^n/n! <= e^a a^{m+1}/(m+1)!` with `a = z|Λ|e^{|β|L}`.

use std::f64::consts::PI;
use std::sync::Mutex;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::potentials::PairPotential;
use crate::quad;

use super::{
    log_kinetic_factor, EvalMethod, PartitionErrors, PartitionEstimate, PartitionOpts,
    ThermoParams,
};

/// Reusable evaluation context for one `(potential, box, budget, seed)`.
///
/// Position samples are drawn once per particle number and frozen; every
/// evaluation reuses them, so `Φ̂` is smooth in the parameters and values,
/// gradients and Hessians are mutually consistent (common random numbers).
pub struct GrandPartition<'p> {
    potential: &'p PairPotential,
    bx: BoxDomain,
    opts: PartitionOpts,
    volume: f64,
    samples_per_batch: usize,
    pair_quad: Vec<QuadNode>,
    /// `terms[n]` holds the frozen energies for particle number `n + 3`.
    terms: Mutex<Vec<McTerm>>,
}

/// One radial quadrature node of the deterministic pair integral:
/// `u` is the two-particle energy `2Φ(r)`, `w` the weight `w_GK · r² A(r)`.
#[derive(Debug, Clone, Copy)]
struct QuadNode {
    u: f64,
    w: f64,
}

/// Frozen Monte Carlo energies for one particle number, split into batches.
struct McTerm {
    batches: Vec<Vec<f64>>,
}

/// Per-`n` sufficient statistics at a given `β`:
/// `ln_m = ln E[e^{βU}]`, `a = E[U e^{βU}]/E[e^{βU}]`, `b` likewise with `U²`
/// (expectations over uniform positions; `U = +inf` contributes zero weight).
#[derive(Debug, Clone, Copy)]
struct TermStats {
    ln_m: f64,
    a: f64,
    b: f64,
}

const ZERO_STATS: TermStats = TermStats { ln_m: 0.0, a: 0.0, b: 0.0 };

/// Result of [`GrandPartition::config_integral`].
#[derive(Debug, Clone, Copy)]
pub struct ConfigIntegral {
    /// `Q_n` (may overflow to `inf` for large boxes; see `log_value`).
    pub value: f64,
    pub log_value: f64,
    pub std_error: f64,
    /// True when the value came from exact or quadrature evaluation.
    pub deterministic: bool,
}

impl<'p> GrandPartition<'p> {
    pub fn new(potential: &'p PairPotential, bx: &BoxDomain, opts: PartitionOpts) -> Result<Self> {
        if opts.batches < 2 {
            return Err(Error::config("partition batches must be >= 2"));
        }
        if opts.samples_per_n < opts.batches {
            return Err(Error::config("samples_per_n must be >= batches"));
        }
        let samples_per_batch = opts.samples_per_n.div_ceil(opts.batches);
        let pair_quad =
            if potential.is_ideal() { Vec::new() } else { build_pair_quad(bx, potential) };
        Ok(GrandPartition {
            potential,
            bx: bx.clone(),
            opts,
            volume: bx.volume(),
            samples_per_batch,
            pair_quad,
            terms: Mutex::new(Vec::new()),
        })
    }

    pub fn potential(&self) -> &PairPotential {
        self.potential
    }

    pub fn box_domain(&self) -> &BoxDomain {
        &self.bx
    }

    pub fn opts(&self) -> &PartitionOpts {
        &self.opts
    }

    fn check_beta(&self, beta: f64) -> Result<()> {
        if !(beta < 0.0) {
            return Err(Error::domain(format!(
                "partition function diverges for beta = {beta} >= 0"
            )));
        }
        if beta > self.opts.beta_max {
            return Err(Error::domain(format!(
                "beta = {beta} above the refusal threshold {}; estimator variance is \
                 uncontrolled near beta = 0",
                self.opts.beta_max
            )));
        }
        Ok(())
    }

    /// Truncation order needed for the certified tail at these parameters.
    fn required_n_max(&self, params: ThermoParams) -> Result<(usize, f64)> {
        let ln_k = log_kinetic_factor(params.lambda, params.beta)?;
        let ln_a = self.volume.ln()
            + params.mu
            + ln_k
            + (-params.beta) * self.potential.stability_l.max(0.0);
        let a = ln_a.exp();
        if a == 0.0 {
            return Ok((0, 0.0));
        }
        let ln_eps = self.opts.tail_eps.ln();
        let mut ln_fact = 0.0; // ln (m+1)! accumulated
        for m in 0..=self.opts.n_cap {
            ln_fact += ((m + 1) as f64).ln();
            let ln_tail = a + (m + 1) as f64 * ln_a - ln_fact;
            if ln_tail <= ln_eps {
                return Ok((m, ln_tail.exp()));
            }
        }
        Err(Error::Budget(format!(
            "series tail cannot reach {} within n_cap = {} (activity bound a = {a:.3e})",
            self.opts.tail_eps, self.opts.n_cap
        )))
    }

    /// Make sure Monte Carlo terms exist for all `3 <= n <= n_max`.
    fn ensure_terms(&self, n_max: usize) {
        if n_max < 3 {
            return;
        }
        let mut terms = self.terms.lock().expect("partition table poisoned");
        let have = terms.len() + 2; // highest n materialized
        if have >= n_max {
            return;
        }
        let new: Vec<McTerm> = ((have + 1)..=n_max)
            .into_par_iter()
            .map(|n| self.build_term(n))
            .collect();
        terms.extend(new);
    }

    fn build_term(&self, n: usize) -> McTerm {
        let batches = (0..self.opts.batches)
            .map(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(term_seed(self.opts.seed, n, b));
                let mut energies = Vec::with_capacity(self.samples_per_batch);
                let mut cfg = vec![[0.0f64; 3]; n];
                for _ in 0..self.samples_per_batch {
                    for q in cfg.iter_mut() {
                        *q = [
                            rng.random::<f64>() * self.bx.sides[0],
                            rng.random::<f64>() * self.bx.sides[1],
                            rng.random::<f64>() * self.bx.sides[2],
                        ];
                    }
                    energies.push(self.potential.total_potential(&cfg));
                }
                energies
            })
            .collect();
        McTerm { batches }
    }

    /// Pair-term statistics from the deterministic radial quadrature.
    fn quad_stats(&self, beta: f64) -> TermStats {
        let vsq = self.volume * self.volume;
        let mut corr = 0.0;
        let mut g = 0.0;
        let mut h = 0.0;
        for node in &self.pair_quad {
            if node.u == f64::INFINITY {
                corr -= node.w;
            } else {
                let w = (beta * node.u).exp();
                corr += node.w * (w - 1.0);
                g += node.w * node.u * w;
                h += node.w * node.u * node.u * w;
            }
        }
        // Q2 = V²/2 + corr/2, normalized by V²/2!; clamp tiny negative noise
        // from fully packed boxes (Q2 = 0).
        let m = (1.0 + corr / vsq).max(0.0);
        if m == 0.0 {
            return TermStats { ln_m: f64::NEG_INFINITY, a: 0.0, b: 0.0 };
        }
        TermStats { ln_m: m.ln(), a: g / vsq / m, b: h / vsq / m }
    }

    /// Statistics of one Monte Carlo batch group at inverse temperature `β`.
    fn mc_stats(energies: &[&[f64]], beta: f64) -> TermStats {
        let mut shift = f64::NEG_INFINITY;
        let mut count = 0usize;
        for chunk in energies {
            count += chunk.len();
            for &u in *chunk {
                if u.is_finite() {
                    shift = shift.max(beta * u);
                }
            }
        }
        if shift == f64::NEG_INFINITY {
            return TermStats { ln_m: f64::NEG_INFINITY, a: 0.0, b: 0.0 };
        }
        let (mut sw, mut swu, mut swuu) = (0.0, 0.0, 0.0);
        for chunk in energies {
            for &u in *chunk {
                if u.is_finite() {
                    let w = (beta * u - shift).exp();
                    sw += w;
                    swu += w * u;
                    swuu += w * u * u;
                }
            }
        }
        if sw == 0.0 {
            return TermStats { ln_m: f64::NEG_INFINITY, a: 0.0, b: 0.0 };
        }
        TermStats {
            ln_m: shift + (sw / count as f64).ln(),
            a: swu / sw,
            b: swuu / sw,
        }
    }

    /// Evaluate `Φ_Λ` with gradient (and Hessian on request).
    pub fn eval(&self, params: ThermoParams, want_hessian: bool) -> Result<PartitionEstimate> {
        Ok(self.eval_with_batches(params, want_hessian)?.0)
    }

    /// Evaluation plus the per-batch estimates behind the standard errors.
    pub fn eval_with_batches(
        &self,
        params: ThermoParams,
        want_hessian: bool,
    ) -> Result<(PartitionEstimate, Vec<BatchEstimate>)> {
        self.check_beta(params.beta)?;
        if self.potential.is_ideal() {
            let est = self.eval_ideal(params, want_hessian)?;
            return Ok((est, Vec::new()));
        }
        let (n_max, tail_bound) = self.required_n_max(params)?;
        self.ensure_terms(n_max);

        let ln_z = params.mu + log_kinetic_factor(params.lambda, params.beta)?;
        let terms = self.terms.lock().expect("partition table poisoned");

        // pooled statistics per n
        let mut pooled: Vec<TermStats> = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            pooled.push(match n {
                0 | 1 => ZERO_STATS,
                2 => self.quad_stats(params.beta),
                _ => {
                    let term = &terms[n - 3];
                    let views: Vec<&[f64]> = term.batches.iter().map(|b| b.as_slice()).collect();
                    Self::mc_stats(&views, params.beta)
                }
            });
        }
        let (phi, grad, hess) =
            assemble(self.volume, ln_z, params, &pooled, want_hessian);

        // per-batch estimates: deterministic n <= 2 shared, MC terms split
        let mut batch_estimates = Vec::with_capacity(self.opts.batches);
        if n_max >= 3 {
            for b in 0..self.opts.batches {
                let mut stats = pooled.clone();
                for (n, entry) in stats.iter_mut().enumerate().take(n_max + 1).skip(3) {
                    let chunk: &[f64] = &terms[n - 3].batches[b];
                    *entry = Self::mc_stats(&[chunk], params.beta);
                }
                let (bphi, bgrad, bhess) =
                    assemble(self.volume, ln_z, params, &stats, want_hessian);
                batch_estimates.push(BatchEstimate { phi: bphi, grad: bgrad, hessian: bhess });
            }
        }
        drop(terms);

        let stat_error = batch_std_errors(phi, grad, &batch_estimates);
        let method = if n_max <= 2 { EvalMethod::Quadrature } else { EvalMethod::MonteCarlo };
        let est = PartitionEstimate {
            phi,
            grad,
            hessian: hess,
            stat_error,
            n_max,
            tail_bound,
            method,
        };
        Ok((est, batch_estimates))
    }

    fn eval_ideal(&self, params: ThermoParams, want_hessian: bool) -> Result<PartitionEstimate> {
        let ln_k = log_kinetic_factor(params.lambda, params.beta)?;
        let z = (params.mu + ln_k).exp();
        let beta = params.beta;
        let s2 = -1.0 / beta;
        let m_vel = [
            params.lambda[0] * s2,
            params.lambda[1] * s2,
            params.lambda[2] * s2,
        ];
        let e1 = crate::domain::norm3_sq(params.lambda) / (2.0 * beta * beta) - 1.5 / beta;
        let grad = [z, z * m_vel[0], z * m_vel[1], z * m_vel[2], z * e1];
        let hessian = want_hessian.then(|| {
            let v1 = 1.5 * s2 * s2 + crate::domain::norm3_sq(m_vel) * s2;
            let mut c = [[0.0; 5]; 5];
            c[0][0] = z;
            for i in 0..3 {
                c[0][1 + i] = z * m_vel[i];
                c[1 + i][0] = c[0][1 + i];
                for j in 0..3 {
                    c[1 + i][1 + j] =
                        z * (if i == j { s2 } else { 0.0 } + m_vel[i] * m_vel[j]);
                }
                c[1 + i][4] = z * m_vel[i] * (s2 + e1);
                c[4][1 + i] = c[1 + i][4];
            }
            c[0][4] = z * e1;
            c[4][0] = c[0][4];
            c[4][4] = z * (v1 + e1 * e1);
            c
        });
        Ok(PartitionEstimate {
            phi: z,
            grad,
            hessian,
            stat_error: PartitionErrors { phi: 0.0, grad: [0.0; 5] },
            n_max: 0,
            tail_bound: 0.0,
            method: EvalMethod::Exact,
        })
    }

    /// The configurational integral `Q_n(β) = (1/n!) ∫_{Λ^n} e^{βU} dq`.
    pub fn config_integral(&self, beta: f64, n: usize) -> Result<ConfigIntegral> {
        self.check_beta(beta)?;
        let log_meas = n as f64 * self.volume.ln() - ln_factorial(n);
        let (stats, deterministic, rel_err) = match n {
            0 | 1 => (ZERO_STATS, true, 0.0),
            2 if !self.potential.is_ideal() => (self.quad_stats(beta), true, 0.0),
            _ if self.potential.is_ideal() => (ZERO_STATS, true, 0.0),
            _ => {
                self.ensure_terms(n);
                let terms = self.terms.lock().expect("partition table poisoned");
                let term = &terms[n - 3];
                let views: Vec<&[f64]> = term.batches.iter().map(|b| b.as_slice()).collect();
                let pooled = Self::mc_stats(&views, beta);
                // relative spread of per-batch means
                let vals: Vec<f64> = term
                    .batches
                    .iter()
                    .map(|b| Self::mc_stats(&[b.as_slice()], beta).ln_m.exp())
                    .collect();
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                    / (vals.len() - 1) as f64;
                let rel = if mean > 0.0 {
                    (var / vals.len() as f64).sqrt() / mean
                } else {
                    0.0
                };
                (pooled, false, rel)
            }
        };
        let log_value = log_meas + stats.ln_m;
        let value = log_value.exp();
        Ok(ConfigIntegral { value, log_value, std_error: value * rel_err, deterministic })
    }
}

/// One batch's view of `(Φ, ∇Φ, ∇²Φ)`.
#[derive(Debug, Clone)]
pub struct BatchEstimate {
    pub phi: f64,
    pub grad: [f64; 5],
    pub hessian: Option<[[f64; 5]; 5]>,
}

fn term_seed(seed: u64, n: usize, batch: usize) -> u64 {
    seed ^ (n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ (batch as u64).wrapping_mul(0xd1b5_4a32_d192_ed03)
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Assemble `(Φ, ∇Φ, ∇²Φ)` from per-`n` statistics.
///
/// Conditional on `n`, velocities are i.i.d. Gaussians with mean `-λ/β` and
/// variance `-1/β` per axis, independent of positions; all kinetic moments
/// enter analytically and only `E[U|n]`, `E[U²|n]` come from the samples.
fn assemble(
    volume: f64,
    ln_z: f64,
    params: ThermoParams,
    stats: &[TermStats],
    want_hessian: bool,
) -> (f64, [f64; 5], Option<[[f64; 5]; 5]>) {
    let beta = params.beta;
    let s2 = -1.0 / beta;
    let m_vel = [params.lambda[0] * s2, params.lambda[1] * s2, params.lambda[2] * s2];
    let e1 = crate::domain::norm3_sq(params.lambda) / (2.0 * beta * beta) - 1.5 / beta;
    let v1 = 1.5 * s2 * s2 + crate::domain::norm3_sq(m_vel) * s2;

    let ln_v = volume.ln();
    let mut ln_fact = 0.0;
    let mut t = Vec::with_capacity(stats.len());
    for (n, st) in stats.iter().enumerate() {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        let tn = if n == 0 {
            st.ln_m
        } else {
            n as f64 * (ln_z + ln_v) - ln_fact + st.ln_m
        };
        t.push(tn);
    }
    let t_max = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let zsum: f64 = t.iter().map(|&tn| (tn - t_max).exp()).sum();
    let ln_zeta = t_max + zsum.ln();
    let phi = ln_zeta / volume;

    let (mut en, mut enn, mut eu, mut enu, mut euu) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut swa2, mut swh2) = (0.0, 0.0);
    for (n, st) in stats.iter().enumerate() {
        let w = ((t[n] - t_max).exp()) / zsum;
        if w == 0.0 {
            continue;
        }
        let nf = n as f64;
        en += w * nf;
        enn += w * nf * nf;
        eu += w * st.a;
        enu += w * nf * st.a;
        euu += w * st.b;
        swa2 += w * st.a * st.a;
        let eh = nf * e1 + st.a;
        swh2 += w * eh * eh;
    }
    let rho = en / volume;
    let grad = [
        rho,
        rho * m_vel[0],
        rho * m_vel[1],
        rho * m_vel[2],
        (en * e1 + eu) / volume,
    ];

    let hessian = want_hessian.then(|| {
        let var_n = (enn - en * en).max(0.0);
        let cov_nu = enu - en * eu;
        let eh_mean = en * e1 + eu;
        let mut c = [[0.0; 5]; 5];
        c[0][0] = var_n;
        c[0][4] = e1 * var_n + cov_nu;
        c[4][0] = c[0][4];
        for i in 0..3 {
            c[0][1 + i] = m_vel[i] * var_n;
            c[1 + i][0] = c[0][1 + i];
            for j in 0..3 {
                c[1 + i][1 + j] =
                    if i == j { en * s2 } else { 0.0 } + m_vel[i] * m_vel[j] * var_n;
            }
            c[1 + i][4] = m_vel[i] * (en * s2 + e1 * var_n + cov_nu);
            c[4][1 + i] = c[1 + i][4];
        }
        c[4][4] = v1 * en + (euu - swa2) + (swh2 - eh_mean * eh_mean).max(0.0);
        for row in c.iter_mut() {
            for entry in row.iter_mut() {
                *entry /= volume;
            }
        }
        c
    });

    (phi, grad, hessian)
}

fn batch_std_errors(phi: f64, grad: [f64; 5], batches: &[BatchEstimate]) -> PartitionErrors {
    if batches.len() < 2 {
        return PartitionErrors { phi: 0.0, grad: [0.0; 5] };
    }
    let nb = batches.len() as f64;
    let spread = |get: &dyn Fn(&BatchEstimate) -> f64, center: f64| -> f64 {
        let var = batches.iter().map(|b| (get(b) - center).powi(2)).sum::<f64>() / (nb - 1.0);
        (var / nb).sqrt()
    };
    let phi_err = spread(&|b| b.phi, phi);
    let mut grad_err = [0.0; 5];
    for k in 0..5 {
        grad_err[k] = spread(&|b| b.grad[k], grad[k]);
    }
    PartitionErrors { phi: phi_err, grad: grad_err }
}

/// Build the radial quadrature for `∫_{Λ²} f(|q1 - q2|) dq1 dq2
/// = ∫_0^diam f(r) r² A(r) dr` with the box angular weight
/// `A(r) = ∫_{S²} Π_i max(s_i - r|ω_i|, 0) dω`.
fn build_pair_quad(bx: &BoxDomain, potential: &PairPotential) -> Vec<QuadNode> {
    let r_sup = match potential.range {
        Some(range) => range.min(bx.diameter()),
        None => bx.diameter(),
    };
    if r_sup <= 0.0 {
        return Vec::new();
    }
    let mut cuts: Vec<f64> = vec![0.0, r_sup];
    cuts.extend(potential.breakpoints().into_iter().filter(|&b| b > 0.0 && b < r_sup));
    let ms = bx.min_side();
    if ms < r_sup {
        cuts.push(ms);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    const PANELS_PER_SEGMENT: usize = 48;
    let mut nodes = Vec::new();
    for seg in cuts.windows(2) {
        let width = (seg[1] - seg[0]) / PANELS_PER_SEGMENT as f64;
        for p in 0..PANELS_PER_SEGMENT {
            let a = seg[0] + p as f64 * width;
            let b = a + width;
            let c = 0.5 * (a + b);
            let h = 0.5 * (b - a);
            for (i, &x) in GK15_X.iter().enumerate() {
                for sign in [-1.0, 1.0] {
                    if x == 0.0 && sign > 0.0 {
                        continue;
                    }
                    let r = c + sign * h * x;
                    let w = GK15_W[i] * h * r * r * angular_weight(bx, r);
                    nodes.push(QuadNode { u: 2.0 * potential.pair_energy(r), w });
                }
            }
        }
    }
    nodes
}

/// `A(r)`: closed-form polynomial while the sphere of radius `r` fits inside
/// the box along every axis, numeric spherical quadrature beyond.
fn angular_weight(bx: &BoxDomain, r: f64) -> f64 {
    let [s1, s2, s3] = bx.sides;
    if r <= bx.min_side() {
        4.0 * PI * s1 * s2 * s3 - 2.0 * PI * r * (s1 * s2 + s1 * s3 + s2 * s3)
            + (8.0 / 3.0) * r * r * (s1 + s2 + s3)
            - r * r * r
    } else if r >= bx.diameter() {
        0.0
    } else {
        let inner = |theta: f64| -> f64 {
            let (st, ct) = theta.sin_cos();
            let f = |phi: f64| -> f64 {
                let w1 = (s1 - r * st * phi.cos()).max(0.0);
                let w2 = (s2 - r * st * phi.sin()).max(0.0);
                let w3 = (s3 - r * ct).max(0.0);
                w1 * w2 * w3
            };
            quad::integrate(f, 0.0, PI / 2.0, 1e-12, 1e-10).0 * st
        };
        8.0 * quad::integrate(inner, 0.0, PI / 2.0, 1e-11, 1e-9).0
    }
}

const GK15_X: [f64; 8] = [
    0.991_455_371_120_813,
    0.949_107_912_342_759,
    0.864_864_423_359_769,
    0.741_531_185_599_394,
    0.586_087_235_467_691,
    0.405_845_151_377_397,
    0.207_784_955_007_898,
    0.0,
];

const GK15_W: [f64; 8] = [
    0.022_935_322_010_529,
    0.063_092_092_629_979,
    0.104_790_010_322_250,
    0.140_653_259_715_525,
    0.169_004_726_639_267,
    0.190_350_578_064_785,
    0.204_432_940_075_298,
    0.209_482_141_084_728,
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{kinetic_factor, log_partition, moments, PartitionOpts};
    use approx::assert_abs_diff_eq;

    fn opts_small(seed: u64) -> PartitionOpts {
        PartitionOpts { samples_per_n: 4096, seed, ..Default::default() }
    }

    #[test]
    fn angular_weight_polynomial_matches_quadrature() {
        let bx = BoxDomain::new([1.0, 1.5, 2.0]).unwrap();
        // compare the closed form against the numeric route just below min_side
        for r in [0.2, 0.6, 0.99] {
            let poly = angular_weight(&bx, r);
            let inner = |theta: f64| -> f64 {
                let (st, ct) = theta.sin_cos();
                let f = |phi: f64| -> f64 {
                    (bx.sides[0] - r * st * phi.cos()).max(0.0)
                        * (bx.sides[1] - r * st * phi.sin()).max(0.0)
                        * (bx.sides[2] - r * ct).max(0.0)
                };
                quad::integrate(f, 0.0, PI / 2.0, 1e-12, 1e-10).0 * st
            };
            let numeric = 8.0 * quad::integrate(inner, 0.0, PI / 2.0, 1e-11, 1e-9).0;
            assert_abs_diff_eq!(poly, numeric, epsilon = 1e-6 * poly.abs().max(1.0));
        }
    }

    #[test]
    fn angular_weight_integrates_to_volume_squared() {
        // ∫_0^diam r² A(r) dr = |Λ|²
        let bx = BoxDomain::new([1.0, 2.0, 1.5]).unwrap();
        let (v, _) = quad::integrate(
            |r| r * r * angular_weight(&bx, r),
            0.0,
            bx.diameter(),
            1e-10,
            1e-10,
        );
        assert_abs_diff_eq!(v, bx.volume().powi(2), epsilon = 1e-5);
    }

    #[test]
    fn ideal_gas_closed_form_and_scale_consistency() {
        let ideal = PairPotential::ideal();
        let opts = PartitionOpts::default();
        let params = ThermoParams::new(0.0, [0.0; 3], -2.0 * PI).unwrap();
        let mut phis = Vec::new();
        for side in [1.0, 2.0, 4.0] {
            let bx = BoxDomain::cube(side).unwrap();
            let est = log_partition(&ideal, &bx, params, &opts).unwrap();
            assert_eq!(est.method, EvalMethod::Exact);
            phis.push(est.phi);
        }
        for &phi in &phis {
            assert_abs_diff_eq!(phi, 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(phi, phis[0], epsilon = 1e-12);
        }
    }

    #[test]
    fn ideal_gas_moments_examples() {
        let ideal = PairPotential::ideal();
        let bx = BoxDomain::cube(2.0).unwrap();
        let opts = PartitionOpts::default();
        let rho0 = (2.0 * PI).powf(1.5);

        let m = moments(&ideal, &bx, ThermoParams::new(0.0, [0.0; 3], -1.0).unwrap(), &opts)
            .unwrap()
            .state;
        assert_abs_diff_eq!(m.rho, rho0, epsilon = 1e-10);
        assert_abs_diff_eq!(m.u[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.e, 1.5 * rho0, epsilon = 1e-9);

        // mean velocity -λ/β = 1 along x
        let m = moments(
            &ideal,
            &bx,
            ThermoParams::new(0.0, [1.0, 0.0, 0.0], -1.0).unwrap(),
            &opts,
        )
        .unwrap()
        .state;
        assert_abs_diff_eq!(m.u[0], m.rho, epsilon = 1e-10);
        assert_abs_diff_eq!(m.u[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn domain_errors() {
        let ideal = PairPotential::ideal();
        let bx = BoxDomain::cube(1.0).unwrap();
        let opts = PartitionOpts::default();
        let bad = ThermoParams { mu: 0.0, lambda: [0.0; 3], beta: 1.0 };
        assert!(matches!(log_partition(&ideal, &bx, bad, &opts), Err(Error::Domain(_))));
        let near_zero = ThermoParams { mu: 0.0, lambda: [0.0; 3], beta: -1e-6 };
        assert!(matches!(log_partition(&ideal, &bx, near_zero, &opts), Err(Error::Domain(_))));
    }

    #[test]
    fn budget_error_on_huge_activity() {
        let hs = PairPotential::hard_spheres(1.0);
        let bx = BoxDomain::cube(4.0).unwrap();
        let params = ThermoParams::new(50.0, [0.0; 3], -1.0).unwrap();
        assert!(matches!(
            log_partition(&hs, &bx, params, &opts_small(7)),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn config_integral_examples() {
        let bx = BoxDomain::cube(1.3).unwrap();
        let v = bx.volume();
        let gp = GrandPartition::new(&PairPotential::ideal(), &bx, opts_small(3)).unwrap();
        assert_abs_diff_eq!(gp.config_integral(-1.0, 0).unwrap().value, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(gp.config_integral(-1.0, 1).unwrap().value, v, epsilon = 1e-12);
        assert_abs_diff_eq!(
            gp.config_integral(-1.0, 4).unwrap().value,
            v.powi(4) / 24.0,
            epsilon = 1e-10
        );

        // hard cores wider than the box diameter: Q2 = 0 (brute-force oracle
        // agrees: every pair distance is below sigma)
        let hs = PairPotential::hard_spheres(3.0);
        let gp = GrandPartition::new(&hs, &bx, opts_small(3)).unwrap();
        let q2 = gp.config_integral(-1.0, 2).unwrap();
        assert!(q2.deterministic);
        assert!(q2.value.abs() < 1e-10 * v * v, "Q2 = {}", q2.value);
    }

    #[test]
    fn hard_sphere_q2_matches_mayer_volume() {
        // Q2 = (V² - ∫∫ 1_{r<σ})/2; the excluded integral equals
        // ∫_0^σ r² A(r) dr, checked against the small-core large-box limit
        // V · 4πσ³/3 within the boundary correction.
        let bx = BoxDomain::cube(4.0).unwrap();
        let hs = PairPotential::hard_spheres(1.0);
        let gp = GrandPartition::new(&hs, &bx, opts_small(3)).unwrap();
        let q2 = gp.config_integral(-1.0, 2).unwrap().value;
        let v = bx.volume();
        let excluded = v * v - 2.0 * q2;
        let bulk = v * 4.0 * PI / 3.0;
        assert!(excluded < bulk && excluded > 0.9 * bulk, "excluded = {excluded}, bulk = {bulk}");

        // exact radial oracle for the same quantity
        let (oracle, _) = quad::integrate(|r| r * r * angular_weight(&bx, r), 0.0, 1.0, 1e-12, 1e-12);
        assert_abs_diff_eq!(excluded, oracle, epsilon = 1e-7 * oracle);
    }

    #[test]
    fn factorization_in_tau_is_exact() {
        let sw = PairPotential::square_well(1.0, 1.5, 0.3);
        let bx = BoxDomain::cube(2.0).unwrap();
        let gp = GrandPartition::new(&sw, &bx, opts_small(11)).unwrap();
        let lam = [0.4, -0.2, 0.1];
        let th = ThermoParams::new(-4.0, lam, -0.8).unwrap();
        let shifted = ThermoParams::new(-4.0 + th.tau(), [0.0; 3], -0.8).unwrap();
        let a = gp.eval(th, false).unwrap();
        let b = gp.eval(shifted, false).unwrap();
        assert_abs_diff_eq!(a.phi, b.phi, epsilon = 1e-10);
    }

    #[test]
    fn gradient_matches_finite_differences_on_shared_samples() {
        let hs = PairPotential::hard_spheres(1.0);
        let bx = BoxDomain::cube(2.0).unwrap();
        let gp = GrandPartition::new(&hs, &bx, opts_small(5)).unwrap();
        let th = ThermoParams::new(-1.0, [0.3, 0.0, -0.2], -1.2).unwrap();
        let est = gp.eval(th, false).unwrap();
        let h = 1e-5;
        for k in 0..5 {
            let mut up = th.as_vec5();
            let mut dn = th.as_vec5();
            up[k] += h;
            dn[k] -= h;
            let fu = gp.eval(ThermoParams::from_vec5(up), false).unwrap().phi;
            let fd = gp.eval(ThermoParams::from_vec5(dn), false).unwrap().phi;
            let fdiff = (fu - fd) / (2.0 * h);
            assert_abs_diff_eq!(est.grad[k], fdiff, epsilon = 1e-6 * (1.0 + est.grad[k].abs()));
        }
    }

    #[test]
    fn hessian_matches_finite_differences_on_shared_samples() {
        let sw = PairPotential::square_well(1.0, 1.5, 0.4);
        let bx = BoxDomain::cube(2.0).unwrap();
        let gp = GrandPartition::new(&sw, &bx, opts_small(9)).unwrap();
        let th = ThermoParams::new(-2.0, [0.2, 0.0, 0.0], -0.9).unwrap();
        let est = gp.eval(th, true).unwrap();
        let hess = est.hessian.unwrap();
        let h = 1e-4;
        for k in 0..5 {
            let mut up = th.as_vec5();
            let mut dn = th.as_vec5();
            up[k] += h;
            dn[k] -= h;
            let gu = gp.eval(ThermoParams::from_vec5(up), false).unwrap().grad;
            let gd = gp.eval(ThermoParams::from_vec5(dn), false).unwrap().grad;
            for l in 0..5 {
                let fdiff = (gu[l] - gd[l]) / (2.0 * h);
                assert_abs_diff_eq!(
                    hess[k][l],
                    fdiff,
                    epsilon = 5e-5 * (1.0 + hess[k][l].abs())
                );
            }
        }
        // symmetry
        for k in 0..5 {
            for l in 0..5 {
                assert_abs_diff_eq!(hess[k][l], hess[l][k], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn ideal_hessian_entries() {
        let ideal = PairPotential::ideal();
        let bx = BoxDomain::cube(2.0).unwrap();
        let th = ThermoParams::new(0.0, [0.0; 3], -1.0).unwrap();
        let h = crate::partition::hessian(&ideal, &bx, th, &PartitionOpts::default()).unwrap();
        let rho = (2.0 * PI).powf(1.5);
        // Poisson number variance equals the mean
        assert_abs_diff_eq!(h[0][0], rho, epsilon = 1e-9);
        for i in 1..4 {
            assert_abs_diff_eq!(h[0][i], 0.0, epsilon = 1e-12);
        }
        // positive definite: diagonal dominant enough here to just check
        // leading minors via nalgebra
        let m = nalgebra::Matrix5::from_fn(|i, j| h[i][j]);
        let eig = m.symmetric_eigenvalues();
        assert!(eig.iter().all(|&e| e > 0.0), "eigenvalues {eig:?}");
    }

    #[test]
    fn phi_nonnegative_and_below_ideal_for_hard_spheres() {
        let hs = PairPotential::hard_spheres(1.0);
        let ideal = PairPotential::ideal();
        let bx = BoxDomain::cube(2.0).unwrap();
        let opts = opts_small(13);
        for mu in [-4.0, -2.0, -1.0] {
            let th = ThermoParams::new(mu, [0.0; 3], -1.0).unwrap();
            let phi_hs = log_partition(&hs, &bx, th, &opts).unwrap().phi;
            let phi_id = log_partition(&ideal, &bx, th, &opts).unwrap().phi;
            assert!(phi_hs >= 0.0);
            assert!(phi_hs < phi_id, "phi_hs = {phi_hs} not below ideal {phi_id}");
        }
    }

    #[test]
    fn kinetic_factor_is_activity_scale() {
        // Φ for the ideal gas equals e^μ K exactly
        let k = kinetic_factor([0.2, -0.1, 0.4], -1.7).unwrap();
        let bx = BoxDomain::cube(3.0).unwrap();
        let th = ThermoParams::new(-0.3, [0.2, -0.1, 0.4], -1.7).unwrap();
        let est =
            log_partition(&PairPotential::ideal(), &bx, th, &PartitionOpts::default()).unwrap();
        assert_abs_diff_eq!(est.phi, (-0.3f64).exp() * k, epsilon = 1e-12);
    }
}
