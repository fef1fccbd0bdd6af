//! Metropolis + parallel-tempering Monte Carlo for volumes beyond the
//! enumeration cap.
//!
//! One disorder realization is simulated by two fully independent replica
//! systems sharing the couplings; the time average of σ_b^{(1)}·σ_b^{(2)}
//! at the target temperature estimates ω(q_b) = ω(σ_b)² without the
//! autocorrelation bias a squared single-chain average would carry.
//!
//! Each replica runs a ladder of inverse temperatures (geometric by
//! default), sweeps every rung with random-scan Metropolis updates, and
//! proposes configuration swaps between adjacent rungs on a fixed cadence
//! with alternating pair parity. Rung potentials are recomputed from
//! scratch at every swap phase, so no incremental-energy drift can enter
//! the swap decisions. All randomness comes from counter-seeded ChaCha8
//! streams keyed by (chain seed, replica, rung, purpose): identical inputs
//! produce bit-identical output regardless of scheduling.
//!
//! The schedule's β stays out of the bond weights here; sweeps use
//! v_b = α_b·√t_b·J_b and multiply by the rung's β in the acceptance test,
//! so one weight table serves the whole ladder.

use crate::disorder::{mix64, unit_open, CouplingAssignment};
use crate::engine::Schedule;
use crate::lattice::LatticeGeometry;
use crate::quad::{self, Accumulator};
use crate::{Error, Result};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const LADDER_RUNGS_DEFAULT: usize = 12;
pub const LADDER_SPAN_DEFAULT: f64 = 8.0;
/// Adjacent-rung swap acceptance below this fraction raises a warning.
pub const SWAP_ACCEPTANCE_FLOOR: f64 = 0.05;

/// Geometric ladder of `rungs` inverse temperatures rising from
/// `beta/span` to `beta`. β = 0 collapses to a single free rung.
pub fn geometric_ladder(beta: f64, rungs: usize, span: f64) -> Vec<f64> {
    if beta == 0.0 || rungs <= 1 {
        return vec![beta];
    }
    (0..rungs)
        .map(|r| beta * libm::pow(span, -((rungs - 1 - r) as f64) / ((rungs - 1) as f64)))
        .collect()
}

/// Sampling plan for one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct McParams {
    /// Total sweeps per rung (burn-in included).
    pub sweeps: usize,
    /// Sweeps discarded before measuring.
    pub burn_in: usize,
    /// Measure every `thin` sweeps after burn-in.
    pub thin: usize,
    /// Strictly increasing β ladder; measurements come from the last rung.
    pub ladder: Vec<f64>,
    /// Propose rung swaps every `swap_interval` sweeps.
    pub swap_interval: usize,
    pub chain_seed: u64,
}

impl McParams {
    pub fn new(
        sweeps: usize,
        burn_in: usize,
        thin: usize,
        ladder: Vec<f64>,
        swap_interval: usize,
        chain_seed: u64,
    ) -> Result<Self> {
        let params = Self {
            sweeps,
            burn_in,
            thin,
            ladder,
            swap_interval,
            chain_seed,
        };
        params.validate()?;
        Ok(params)
    }

    /// Default geometric ladder for a target β.
    pub fn geometric(
        beta: f64,
        sweeps: usize,
        burn_in: usize,
        thin: usize,
        swap_interval: usize,
        chain_seed: u64,
    ) -> Result<Self> {
        Self::new(
            sweeps,
            burn_in,
            thin,
            geometric_ladder(beta, LADDER_RUNGS_DEFAULT, LADDER_SPAN_DEFAULT),
            swap_interval,
            chain_seed,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 {
            return Err(Error::InvalidMcParams("sweep count must be positive"));
        }
        if self.burn_in >= self.sweeps {
            return Err(Error::InvalidMcParams("burn-in must be smaller than sweeps"));
        }
        if self.thin == 0 {
            return Err(Error::InvalidMcParams("thinning interval must be positive"));
        }
        if self.swap_interval == 0 {
            return Err(Error::InvalidMcParams("swap interval must be positive"));
        }
        if self.ladder.is_empty() {
            return Err(Error::InvalidMcParams("temperature ladder is empty"));
        }
        for beta in &self.ladder {
            if !(beta.is_finite() && *beta >= 0.0) {
                return Err(Error::InvalidMcParams("ladder betas must be finite and nonnegative"));
            }
        }
        for pair in self.ladder.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::InvalidMcParams("ladder must be strictly increasing"));
            }
        }
        Ok(())
    }

    fn target_beta(&self) -> f64 {
        *self.ladder.last().expect("validated non-empty ladder")
    }
}

/// Derive an independent chain seed for a disorder realization.
pub fn derive_chain_seed(base: u64, realization_index: u64) -> u64 {
    mix64(base ^ mix64(realization_index ^ 0x6a09_e667_f3bc_c908))
}

/// One bond's two-replica overlap estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapEstimate {
    pub bond: usize,
    pub mean: f64,
    pub std_error: f64,
    /// Integrated autocorrelation time of the measurement series.
    pub tau_int: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapReport {
    pub estimates: Vec<OverlapEstimate>,
    /// Pooled swap acceptance per adjacent rung pair (low to high β).
    pub swap_acceptance: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Thermodynamic-integration estimate of a pressure difference.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub warnings: Vec<String>,
}

const PURPOSE_SWEEP: u64 = 1;
const PURPOSE_SWAP: u64 = 2;

fn chain_key(seed: u64, replica: u64, rung: u64, purpose: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
        let word = crate::disorder::stream_u64(seed ^ mix64(replica ^ 0x243f_6a88_85a3_08d3), rung, purpose, i as u64);
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    key
}

/// One replica: a spin configuration and RNG stream per ladder rung plus a
/// swap stream.
struct ReplicaSystem {
    spins: Vec<Vec<i8>>,
    sweep_rngs: Vec<ChaCha8Rng>,
    swap_rng: ChaCha8Rng,
    swap_parity: bool,
    swap_attempts: Vec<u64>,
    swap_accepts: Vec<u64>,
}

impl ReplicaSystem {
    fn new(sites: usize, rungs: usize, chain_seed: u64, replica: u64) -> Self {
        let mut spins = Vec::with_capacity(rungs);
        let mut sweep_rngs = Vec::with_capacity(rungs);
        for rung in 0..rungs {
            let mut rng =
                ChaCha8Rng::from_seed(chain_key(chain_seed, replica, rung as u64, PURPOSE_SWEEP));
            let mut config = Vec::with_capacity(sites);
            for _ in 0..sites {
                config.push(if rng.next_u64() & 1 == 1 { 1 } else { -1 });
            }
            spins.push(config);
            sweep_rngs.push(rng);
        }
        let pairs = rungs.saturating_sub(1);
        Self {
            spins,
            sweep_rngs,
            swap_rng: ChaCha8Rng::from_seed(chain_key(chain_seed, replica, 0, PURPOSE_SWAP)),
            swap_parity: false,
            swap_attempts: vec![0; pairs],
            swap_accepts: vec![0; pairs],
        }
    }

    /// Random-scan Metropolis sweep (|sites| proposals) on every rung.
    fn sweep(
        &mut self,
        ladder: &[f64],
        weights: &[f64],
        adjacency: &[Vec<(usize, usize)>],
    ) {
        let sites = adjacency.len();
        for (rung, &beta) in ladder.iter().enumerate() {
            let rng = &mut self.sweep_rngs[rung];
            let config = &mut self.spins[rung];
            for _ in 0..sites {
                let site = (rng.next_u64() % sites as u64) as usize;
                let mut local = 0.0f64;
                for &(bond, other) in &adjacency[site] {
                    local += weights[bond] * config[other] as f64;
                }
                let delta = -2.0 * config[site] as f64 * local;
                let accept = if delta >= 0.0 {
                    true
                } else {
                    unit_open(rng.next_u64()) < libm::exp(beta * delta)
                };
                if accept {
                    config[site] = -config[site];
                }
            }
        }
    }

    /// Swap phase: propose exchanges on alternating adjacent pairs; rung
    /// potentials are recomputed exactly here. A uniform draw is consumed
    /// for every attempted pair so the stream position never depends on
    /// outcomes.
    fn swap_phase(&mut self, ladder: &[f64], weights: &[f64], bond_sites: &[(usize, usize)]) {
        let rungs = ladder.len();
        let start = if self.swap_parity { 1 } else { 0 };
        self.swap_parity = !self.swap_parity;
        let mut pair = start;
        while pair + 1 < rungs {
            let u = unit_open(self.swap_rng.next_u64());
            let h_lo = potential(&self.spins[pair], weights, bond_sites);
            let h_hi = potential(&self.spins[pair + 1], weights, bond_sites);
            self.swap_attempts[pair] += 1;
            if u < libm::exp((ladder[pair + 1] - ladder[pair]) * (h_lo - h_hi)) {
                self.spins.swap(pair, pair + 1);
                self.swap_accepts[pair] += 1;
            }
            pair += 2;
        }
    }

    fn target(&self) -> &[i8] {
        self.spins.last().expect("non-empty ladder")
    }
}

/// Σ_b v_b·σ_b for one configuration.
fn potential(config: &[i8], weights: &[f64], bond_sites: &[(usize, usize)]) -> f64 {
    let mut sum = 0.0f64;
    for (&w, &(a, b)) in weights.iter().zip(bond_sites) {
        sum += w * (config[a] * config[b]) as f64;
    }
    sum
}

/// Mean, standard error, and integrated autocorrelation time of a series,
/// with Sokal's self-consistent window (cutoff at the first lag k ≥ 6·τ).
pub(crate) fn autocorrelation_stats(series: &[f64]) -> (f64, f64, f64) {
    let n = series.len();
    let mut mean_acc = Accumulator::default();
    for &x in series {
        mean_acc.add(x);
    }
    let mean = mean_acc.value() / n as f64;
    let mut c0 = 0.0f64;
    for &x in series {
        c0 += (x - mean) * (x - mean);
    }
    c0 /= n as f64;
    if c0 <= 0.0 || n < 8 {
        return (mean, libm::sqrt(c0.max(0.0) / n as f64), 1.0);
    }
    let mut rho_sum = 0.0f64;
    let mut tau = 1.0f64;
    let mut k = 1usize;
    while k < n / 2 {
        let mut ck = 0.0f64;
        for i in 0..n - k {
            ck += (series[i] - mean) * (series[i + k] - mean);
        }
        ck /= (n - k) as f64;
        rho_sum += ck / c0;
        tau = (1.0 + 2.0 * rho_sum).max(1.0);
        if k as f64 >= 6.0 * tau {
            break;
        }
        k += 1;
    }
    (mean, libm::sqrt(c0 * tau / n as f64), tau)
}

struct McRun<'a> {
    weights: Vec<f64>,
    bond_sites: Vec<(usize, usize)>,
    adjacency: Vec<Vec<(usize, usize)>>,
    params: &'a McParams,
}

impl<'a> McRun<'a> {
    fn new(
        geometry: &LatticeGeometry,
        couplings: &CouplingAssignment,
        schedule: &Schedule,
        params: &'a McParams,
    ) -> Result<Self> {
        params.validate()?;
        if couplings.bond_count() != geometry.bond_count()
            || schedule.bond_count() != geometry.bond_count()
        {
            return Err(Error::BondCountMismatch {
                expected: geometry.bond_count(),
                got: couplings.bond_count(),
            });
        }
        let beta = schedule.beta();
        let target = params.target_beta();
        let scale = beta.abs().max(1.0);
        if (target - beta).abs() > 1e-12 * scale {
            return Err(Error::InvalidMcParams(
                "temperature ladder must end at the schedule's beta",
            ));
        }
        let weights = (0..geometry.bond_count())
            .map(|b| schedule.unit_weight(b, couplings))
            .collect();
        Ok(Self {
            weights,
            bond_sites: geometry
                .bonds()
                .iter()
                .map(|b| (b.site_a, b.site_b))
                .collect(),
            adjacency: geometry.site_adjacency(),
            params,
        })
    }

    /// Drive both replicas in lockstep; `measure` sees the two target-rung
    /// configurations at every retained sweep.
    fn run<F: FnMut(&[i8], &[i8])>(&self, replica_ids: [u64; 2], mut measure: F) -> (Vec<f64>, Vec<String>) {
        let p = self.params;
        let rungs = p.ladder.len();
        let sites = self.adjacency.len();
        let mut a = ReplicaSystem::new(sites, rungs, p.chain_seed, replica_ids[0]);
        let mut b = ReplicaSystem::new(sites, rungs, p.chain_seed, replica_ids[1]);
        for sweep in 0..p.sweeps {
            a.sweep(&p.ladder, &self.weights, &self.adjacency);
            b.sweep(&p.ladder, &self.weights, &self.adjacency);
            if (sweep + 1) % p.swap_interval == 0 {
                a.swap_phase(&p.ladder, &self.weights, &self.bond_sites);
                b.swap_phase(&p.ladder, &self.weights, &self.bond_sites);
            }
            if sweep >= p.burn_in && (sweep - p.burn_in) % p.thin == 0 {
                measure(a.target(), b.target());
            }
        }
        let mut acceptance = Vec::new();
        let mut warnings = Vec::new();
        for pair in 0..rungs.saturating_sub(1) {
            let attempts = a.swap_attempts[pair] + b.swap_attempts[pair];
            let accepts = a.swap_accepts[pair] + b.swap_accepts[pair];
            let rate = if attempts == 0 {
                1.0
            } else {
                accepts as f64 / attempts as f64
            };
            acceptance.push(rate);
            if attempts > 0 && rate < SWAP_ACCEPTANCE_FLOOR {
                warnings.push(format!(
                    "swap acceptance {:.3} between ladder rungs {} and {} is below {:.2}",
                    rate,
                    pair,
                    pair + 1,
                    SWAP_ACCEPTANCE_FLOOR
                ));
            }
        }
        (acceptance, warnings)
    }
}

/// Two-replica estimate of ω(q_b) for the listed bonds.
pub fn mc_bond_overlap(
    geometry: &LatticeGeometry,
    couplings: &CouplingAssignment,
    schedule: &Schedule,
    bonds: &[usize],
    params: &McParams,
) -> Result<OverlapReport> {
    for &b in bonds {
        if b >= geometry.bond_count() {
            return Err(Error::InvalidSchedule("queried bond outside the bond list"));
        }
    }
    let run = McRun::new(geometry, couplings, schedule, params)?;
    let mut series: Vec<Vec<f64>> = vec![Vec::new(); bonds.len()];
    let bond_sites: Vec<(usize, usize)> = bonds
        .iter()
        .map(|&b| (geometry.bonds()[b].site_a, geometry.bonds()[b].site_b))
        .collect();
    let (swap_acceptance, warnings) = run.run([0, 1], |sigma, tau| {
        for (slot, &(a, b)) in bond_sites.iter().enumerate() {
            let q = (sigma[a] * sigma[b] * tau[a] * tau[b]) as f64;
            series[slot].push(q);
        }
    });
    let estimates = bonds
        .iter()
        .zip(&series)
        .map(|(&bond, data)| {
            let (mean, std_error, tau_int) = autocorrelation_stats(data);
            OverlapEstimate {
                bond,
                mean,
                std_error,
                tau_int,
            }
        })
        .collect();
    Ok(OverlapReport {
        estimates,
        swap_acceptance,
        warnings,
    })
}

/// P(schedule_hi) − P(schedule_lo) for one realization by thermodynamic
/// integration along the shared designated set.
///
/// With u = √t the derivative of ln Z in u is Σ_{b∈S} β·α_b·J_b·ω(σ_b),
/// which is smooth on the whole path, so the difference is a Gauss-Legendre
/// sum of bond-magnetization averages, never a difference of two
/// independently estimated absolute pressures.
pub fn mc_log_partition_difference(
    geometry: &LatticeGeometry,
    couplings: &CouplingAssignment,
    schedule_hi: &Schedule,
    schedule_lo: &Schedule,
    gl_order: usize,
    params: &McParams,
) -> Result<DifferenceEstimate> {
    if schedule_hi.bond_count() != schedule_lo.bond_count()
        || schedule_hi.designated() != schedule_lo.designated()
        || schedule_hi.beta() != schedule_lo.beta()
    {
        return Err(Error::InvalidSchedule(
            "difference endpoints must share the designated set and beta",
        ));
    }
    if gl_order < 2 {
        return Err(Error::InvalidQuadrature(
            "thermodynamic integration needs at least 2 Gauss-Legendre nodes",
        ));
    }
    let t_hi = schedule_hi.t_designated();
    let t_lo = schedule_lo.t_designated();
    if t_hi == t_lo || schedule_hi.designated().is_empty() {
        return Ok(DifferenceEstimate {
            mean: 0.0,
            std_error: 0.0,
            warnings: Vec::new(),
        });
    }
    let u_lo = libm::sqrt(t_lo);
    let u_hi = libm::sqrt(t_hi);
    let span = u_hi - u_lo;
    let (nodes, gl_weights) = quad::gauss_legendre_01(gl_order)?;
    let beta = schedule_hi.beta();
    let designated = schedule_hi.designated().to_vec();
    let coeffs: Vec<f64> = designated
        .iter()
        .map(|&b| beta * couplings.signed(b))
        .collect();
    let designated_sites: Vec<(usize, usize)> = designated
        .iter()
        .map(|&b| (geometry.bonds()[b].site_a, geometry.bonds()[b].site_b))
        .collect();
    let mut mean = Accumulator::default();
    let mut variance = 0.0f64;
    let mut warnings = Vec::new();
    for (node_index, (&x, &w)) in nodes.iter().zip(&gl_weights).enumerate() {
        let u = u_lo + span * x;
        let mut schedule = schedule_hi.clone();
        schedule.set_designated_t(u * u)?;
        let mut node_params = params.clone();
        node_params.chain_seed = mix64(params.chain_seed ^ mix64(node_index as u64 ^ 0x1319_8a2e_0370_7344));
        let run = McRun::new(geometry, couplings, &schedule, &node_params)?;
        let mut series: Vec<f64> = Vec::new();
        let (_, node_warnings) = run.run([0, 1], |sigma, tau| {
            let mut y = 0.0f64;
            for (&c, &(a, b)) in coeffs.iter().zip(&designated_sites) {
                let pair = (sigma[a] * sigma[b] + tau[a] * tau[b]) as f64;
                y += c * 0.5 * pair;
            }
            series.push(y);
        });
        warnings.extend(node_warnings);
        let (node_mean, node_se, _) = autocorrelation_stats(&series);
        mean.add(w * span * node_mean);
        variance += (w * span * node_se) * (w * span * node_se);
    }
    Ok(DifferenceEstimate {
        mean: mean.value(),
        std_error: libm::sqrt(variance),
        warnings,
    })
}
