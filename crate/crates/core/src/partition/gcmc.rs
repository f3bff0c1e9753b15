//! Grand-canonical Metropolis sampler: particle insertion/deletion,
//! displacement, and exact velocity refreshes.
//!
//! Used to cross-validate the series moments; the chain targets the density
//! `exp(μN + λ·P + βH)` against the reference measure, so the ideal-gas
//! particle number is Poisson with mean `|Λ| e^μ K(λ, β)`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::domain::{distance3, BoxDomain};
use crate::error::Result;
use crate::potentials::PairPotential;

use super::{kinetic_factor, ThermoParams};

/// Sampler knobs.
#[derive(Debug, Clone)]
pub struct GcmcOpts {
    pub seed: u64,
    /// Half-width of the uniform displacement cube.
    pub displacement: f64,
    /// Chain steps between emitted samples.
    pub thin: usize,
}

impl Default for GcmcOpts {
    fn default() -> Self {
        GcmcOpts { seed: 1, displacement: 0.5, thin: 16 }
    }
}

/// Extensive observables of the current chain state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcState {
    pub n: usize,
    pub p: [f64; 3],
    pub h: f64,
}

/// Full configuration snapshot.
#[derive(Debug, Clone)]
pub struct GcConfig {
    pub positions: Vec<[f64; 3]>,
    pub velocities: Vec<[f64; 3]>,
}

/// Metropolis chain over the grand-canonical phase space of a box.
pub struct GcSampler<'p> {
    potential: &'p PairPotential,
    bx: BoxDomain,
    beta: f64,
    /// `|Λ| e^μ K(λ, β)`; the ideal-gas mean particle number.
    activity_volume: f64,
    mean_velocity: [f64; 3],
    sigma_velocity: f64,
    displacement: f64,
    pub thin: usize,
    rng: ChaCha8Rng,
    positions: Vec<[f64; 3]>,
    velocities: Vec<[f64; 3]>,
    u_pot: f64,
    steps: u64,
    accepted: u64,
}

impl<'p> GcSampler<'p> {
    pub fn new(
        potential: &'p PairPotential,
        bx: &BoxDomain,
        params: ThermoParams,
        opts: &GcmcOpts,
    ) -> Result<Self> {
        let k = kinetic_factor(params.lambda, params.beta)?;
        let s2 = -1.0 / params.beta;
        Ok(GcSampler {
            potential,
            bx: bx.clone(),
            beta: params.beta,
            activity_volume: bx.volume() * params.mu.exp() * k,
            mean_velocity: params.lambda.map(|l| l * s2),
            sigma_velocity: s2.sqrt(),
            displacement: opts.displacement,
            thin: opts.thin.max(1),
            rng: ChaCha8Rng::seed_from_u64(opts.seed),
            positions: Vec::new(),
            velocities: Vec::new(),
            u_pot: 0.0,
            steps: 0,
            accepted: 0,
        })
    }

    pub fn n_particles(&self) -> usize {
        self.positions.len()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.accepted as f64 / self.steps as f64
        }
    }

    pub fn state(&self) -> GcState {
        let mut p = [0.0; 3];
        let mut kinetic = 0.0;
        for v in &self.velocities {
            for i in 0..3 {
                p[i] += v[i];
            }
            kinetic += 0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        }
        GcState { n: self.positions.len(), p, h: kinetic + self.u_pot }
    }

    pub fn config(&self) -> GcConfig {
        GcConfig { positions: self.positions.clone(), velocities: self.velocities.clone() }
    }

    pub fn potential_energy(&self) -> f64 {
        self.u_pot
    }

    fn random_point(&mut self) -> [f64; 3] {
        [
            self.rng.random::<f64>() * self.bx.sides[0],
            self.rng.random::<f64>() * self.bx.sides[1],
            self.rng.random::<f64>() * self.bx.sides[2],
        ]
    }

    fn draw_velocity(&mut self) -> [f64; 3] {
        let mut v = [0.0; 3];
        for (i, entry) in v.iter_mut().enumerate() {
            let g: f64 = self.rng.sample(StandardNormal);
            *entry = self.mean_velocity[i] + self.sigma_velocity * g;
        }
        v
    }

    /// Interaction energy of a point against all particles except `skip`.
    fn coupling(&self, q: [f64; 3], skip: Option<usize>) -> f64 {
        if self.potential.is_ideal() {
            return 0.0;
        }
        let mut du = 0.0;
        for (k, other) in self.positions.iter().enumerate() {
            if Some(k) == skip {
                continue;
            }
            let phi = self.potential.pair_energy(distance3(q, *other));
            if phi == f64::INFINITY {
                return f64::INFINITY;
            }
            du += 2.0 * phi;
        }
        du
    }

    /// One Metropolis move. Returns true if accepted.
    pub fn step(&mut self) -> bool {
        self.steps += 1;
        let n = self.positions.len();
        let kind = self.rng.random_range(0..4u8);
        let accepted = match kind {
            0 => {
                // insertion
                let q = self.random_point();
                let du = self.coupling(q, None);
                let ratio = if du.is_infinite() {
                    0.0
                } else {
                    self.activity_volume / (n + 1) as f64 * (self.beta * du).exp()
                };
                if ratio >= 1.0 || self.rng.random::<f64>() < ratio {
                    let v = self.draw_velocity();
                    self.positions.push(q);
                    self.velocities.push(v);
                    self.u_pot += du;
                    true
                } else {
                    false
                }
            }
            1 => {
                // deletion
                if n == 0 {
                    false
                } else {
                    let j = self.rng.random_range(0..n);
                    let du = -self.coupling(self.positions[j], Some(j));
                    let ratio = n as f64 / self.activity_volume * (self.beta * du).exp();
                    if ratio >= 1.0 || self.rng.random::<f64>() < ratio {
                        self.positions.swap_remove(j);
                        self.velocities.swap_remove(j);
                        self.u_pot += du;
                        true
                    } else {
                        false
                    }
                }
            }
            2 => {
                // displacement
                if n == 0 {
                    false
                } else {
                    let j = self.rng.random_range(0..n);
                    let old = self.positions[j];
                    let mut q = old;
                    for entry in q.iter_mut() {
                        *entry += self.displacement * (2.0 * self.rng.random::<f64>() - 1.0);
                    }
                    if !self.bx.contains(q) {
                        false
                    } else {
                        let u_new = self.coupling(q, Some(j));
                        if u_new.is_infinite() {
                            false
                        } else {
                            let du = u_new - self.coupling(old, Some(j));
                            let ratio = (self.beta * du).exp();
                            if ratio >= 1.0 || self.rng.random::<f64>() < ratio {
                                self.positions[j] = q;
                                self.u_pot += du;
                                true
                            } else {
                                false
                            }
                        }
                    }
                }
            }
            _ => {
                // velocity refresh: exact conditional, always accepted
                if n == 0 {
                    false
                } else {
                    let j = self.rng.random_range(0..n);
                    self.velocities[j] = self.draw_velocity();
                    true
                }
            }
        };
        if accepted {
            self.accepted += 1;
        }
        // periodic resync against round-off drift in the incremental energy
        if self.steps % 65_536 == 0 {
            self.u_pot = self.potential.total_potential(&self.positions);
        }
        accepted
    }

    pub fn advance(&mut self, steps: usize) {
        for _ in 0..steps {
            self.step();
        }
    }

    /// Burn in, then emit `count` states separated by `thin` steps each.
    pub fn sample_states(&mut self, burn_in: usize, count: usize) -> Vec<GcState> {
        self.advance(burn_in);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            self.advance(self.thin);
            out.push(self.state());
        }
        out
    }
}
