//! Exact per-realization evaluation.
//!
//! For one disorder realization the Boltzmann weight is exp(U) with
//! U = Σ_b w_b·σ_b and per-bond weight w_b = α_b·β·√t_b·J_b (β folded into
//! the bond standard deviation, so variance calculus in t_b applies with
//! variance β²·t_b). This module computes ln Z and the bond expectations
//! ω(σ_b) exactly:
//!
//! * [`log_partition`]: full spin enumeration in Gray-code order with
//!   incremental energy updates (one site flip per step);
//! * [`chain_closed_form`] / [`chain_gibbs`]: 1D transfer-matrix closed
//!   forms, an independent oracle for the enumerator;
//! * [`ChainTScan`]: ring closed form factored so scans over the
//!   interpolation parameter reuse the fixed-bond terms;
//! * [`two_replica_overlap`]: explicit two-replica pair enumeration of
//!   ω(q_b), kept deliberately un-factorized as a check on ω(σ_b)²;
//! * [`covariance_probe`]: disorder covariance of the potential on two
//!   fixed spin configurations.

use crate::disorder::{quenched_average, CouplingAssignment, DisorderAverage, QuenchedEstimate};
use crate::lattice::LatticeGeometry;
use crate::quad::Accumulator;
use crate::{Error, Result};
use alloc::vec;
use alloc::vec::Vec;

/// Full-enumeration ceiling: 2^22 configurations.
pub const ENUMERATION_CAP_DEFAULT: usize = 22;
/// Two-replica pair-enumeration ceiling: 4^11 pairs.
pub const PAIR_CAP_DEFAULT: usize = 11;

/// Interpolation schedule: a shared parameter t on a designated bond set,
/// t_b = 1 elsewhere, plus the inverse temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    beta: f64,
    t_values: Vec<f64>,
    designated: Vec<usize>,
    t_designated: f64,
}

impl Schedule {
    /// The un-interpolated model: t_b = 1 on every bond.
    pub fn uniform(bond_count: usize, beta: f64) -> Result<Self> {
        Self::with_designated(bond_count, Vec::new(), 1.0, beta)
    }

    /// t on `designated`, 1 elsewhere.
    pub fn with_designated(
        bond_count: usize,
        designated: Vec<usize>,
        t: f64,
        beta: f64,
    ) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidSchedule("beta must be finite and nonnegative"));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidSchedule("t must lie in [0,1]"));
        }
        let mut seen = vec![false; bond_count];
        for &b in &designated {
            if b >= bond_count {
                return Err(Error::InvalidSchedule("designated bond outside the bond list"));
            }
            if seen[b] {
                return Err(Error::InvalidSchedule("designated bond listed twice"));
            }
            seen[b] = true;
        }
        let mut t_values = vec![1.0; bond_count];
        for &b in &designated {
            t_values[b] = t;
        }
        Ok(Self {
            beta,
            t_values,
            designated,
            t_designated: t,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn bond_count(&self) -> usize {
        self.t_values.len()
    }

    pub fn t(&self, bond: usize) -> f64 {
        self.t_values[bond]
    }

    pub fn designated(&self) -> &[usize] {
        &self.designated
    }

    pub fn t_designated(&self) -> f64 {
        self.t_designated
    }

    /// Move the shared parameter (t-scans reuse one schedule).
    pub fn set_designated_t(&mut self, t: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidSchedule("t must lie in [0,1]"));
        }
        for &b in &self.designated {
            self.t_values[b] = t;
        }
        self.t_designated = t;
        Ok(())
    }

    /// α_b·√t_b·J_b, the bond weight without β (Monte Carlo keeps β on the
    /// temperature ladder instead).
    pub fn unit_weight(&self, bond: usize, couplings: &CouplingAssignment) -> f64 {
        couplings.signed(bond) * libm::sqrt(self.t_values[bond])
    }

    /// w_b = α_b·β·√t_b·J_b.
    pub fn bond_weight(&self, bond: usize, couplings: &CouplingAssignment) -> f64 {
        self.beta * self.unit_weight(bond, couplings)
    }

    /// All bond weights, after length validation.
    pub fn weights(&self, couplings: &CouplingAssignment) -> Result<Vec<f64>> {
        if couplings.bond_count() != self.bond_count() {
            return Err(Error::BondCountMismatch {
                expected: self.bond_count(),
                got: couplings.bond_count(),
            });
        }
        Ok((0..self.bond_count())
            .map(|b| self.bond_weight(b, couplings))
            .collect())
    }
}

/// Exact Gibbs data for one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsReport {
    /// ln Z.
    pub log_z: f64,
    /// ω(σ_b) per bond, each in [−1, 1].
    pub omega_b: Vec<f64>,
}

/// ln cosh w without overflow for any finite w.
pub fn ln_cosh(w: f64) -> f64 {
    let a = libm::fabs(w);
    a + libm::log1p(libm::exp(-2.0 * a)) - core::f64::consts::LN_2
}

/// Gray-code enumeration driver over raw (sites, bond endpoints, weights).
///
/// Configuration g carries spin pattern gray(g) = g ^ (g >> 1); step g−1→g
/// flips the single site trailing_zeros(g), so the energy and the bond
/// products update incrementally. Energy updates go through a compensated
/// accumulator to keep the running U exact across millions of steps.
struct Enumerator<'a> {
    sites: usize,
    adjacency: Vec<Vec<usize>>,
    weights: &'a [f64],
}

impl<'a> Enumerator<'a> {
    fn new(sites: usize, bond_sites: &[(usize, usize)], weights: &'a [f64]) -> Self {
        let mut adjacency = vec![Vec::new(); sites];
        for (i, &(a, b)) in bond_sites.iter().enumerate() {
            adjacency[a].push(i);
            adjacency[b].push(i);
        }
        Self {
            sites,
            adjacency,
            weights,
        }
    }

    /// Walk all 2^sites configurations; `visit(exp_shifted, bond_products)`
    /// sees exp(U − u_max) and the current ±1 bond products.
    fn walk<F: FnMut(f64, &[f64])>(&self, u_max: f64, mut visit: F) {
        let bonds = self.weights.len();
        let mut bp = vec![1.0f64; bonds];
        let mut u = Accumulator::default();
        for &w in self.weights {
            u.add(w);
        }
        let configs: u64 = 1u64 << self.sites;
        for g in 0..configs {
            if g > 0 {
                let site = g.trailing_zeros() as usize;
                let mut local = 0.0f64;
                for &b in &self.adjacency[site] {
                    local += self.weights[b] * bp[b];
                }
                u.add(-2.0 * local);
                for &b in &self.adjacency[site] {
                    bp[b] = -bp[b];
                }
            }
            visit(libm::exp(u.value() - u_max), &bp);
        }
    }

    /// Maximum of U over all configurations (for the overflow shift).
    fn max_energy(&self) -> f64 {
        let bonds = self.weights.len();
        let mut bp = vec![1.0f64; bonds];
        let mut u = Accumulator::default();
        for &w in self.weights {
            u.add(w);
        }
        let mut u_max = u.value();
        let configs: u64 = 1u64 << self.sites;
        for g in 1..configs {
            let site = g.trailing_zeros() as usize;
            let mut local = 0.0f64;
            for &b in &self.adjacency[site] {
                local += self.weights[b] * bp[b];
            }
            u.add(-2.0 * local);
            for &b in &self.adjacency[site] {
                bp[b] = -bp[b];
            }
            u_max = u_max.max(u.value());
        }
        u_max
    }
}

fn check_enumeration_cap(sites: usize, cap: usize) -> Result<()> {
    if sites > cap {
        return Err(Error::EnumerationCapExceeded { sites, cap });
    }
    Ok(())
}

/// Core enumeration over raw lists; public entry points bind it to a
/// geometry. Kept separate so bond-permutation invariance is testable.
fn enumerate_gibbs(sites: usize, bond_sites: &[(usize, usize)], weights: &[f64]) -> GibbsReport {
    let enumerator = Enumerator::new(sites, bond_sites, weights);
    let u_max = enumerator.max_energy();
    let mut z = Accumulator::default();
    let mut numerators = vec![Accumulator::default(); weights.len()];
    enumerator.walk(u_max, |e, bp| {
        z.add(e);
        for (acc, &p) in numerators.iter_mut().zip(bp) {
            acc.add(p * e);
        }
    });
    let z_total = z.value();
    GibbsReport {
        log_z: libm::log(z_total) + u_max,
        omega_b: numerators.iter().map(|n| n.value() / z_total).collect(),
    }
}

/// ln Z and all bond expectations by full enumeration.
pub fn log_partition(
    geometry: &LatticeGeometry,
    couplings: &CouplingAssignment,
    schedule: &Schedule,
) -> Result<GibbsReport> {
    log_partition_with_cap(geometry, couplings, schedule, ENUMERATION_CAP_DEFAULT)
}

pub fn log_partition_with_cap(
    geometry: &LatticeGeometry,
    couplings: &CouplingAssignment,
    schedule: &Schedule,
    cap: usize,
) -> Result<GibbsReport> {
    check_enumeration_cap(geometry.site_count(), cap)?;
    if schedule.bond_count() != geometry.bond_count() {
        return Err(Error::BondCountMismatch {
            expected: geometry.bond_count(),
            got: schedule.bond_count(),
        });
    }
    let weights = schedule.weights(couplings)?;
    let bond_sites: Vec<(usize, usize)> = geometry
        .bonds()
        .iter()
        .map(|b| (b.site_a, b.site_b))
        .collect();
    Ok(enumerate_gibbs(geometry.site_count(), &bond_sites, &weights))
}

/// Single-site expectations ω(σ_n) by full enumeration (all zero for this
/// zero-field model, by global spin-flip symmetry; exported for the
/// property checks).
pub fn site_expectations(
    geometry: &LatticeGeometry,
    couplings: &CouplingAssignment,
    schedule: &Schedule,
) -> Result<Vec<f64>> {
    check_enumeration_cap(geometry.site_count(), ENUMERATION_CAP_DEFAULT)?;
    let weights = schedule.weights(couplings)?;
    let bond_sites: Vec<(usize, usize)> = geometry
        .bonds()
        .iter()
        .map(|b| (b.site_a, b.site_b))
        .collect();
    let sites = geometry.site_count();
    let enumerator = Enumerator::new(sites, &bond_sites, &weights);
    let u_max = enumerator.max_energy();
    // walk() keeps bond products; spins are replayed alongside from the
    // same Gray sequence.
    let mut sigma = vec![1.0f64; sites];
    let mut z = Accumulator::default();
    let mut mags = vec![Accumulator::default(); sites];
    let mut step: u64 = 0;
    enumerator.walk(u_max, |e, _| {
        if step > 0 {
            let site = step.trailing_zeros() as usize;
            sigma[site] = -sigma[site];
        }
        step += 1;
        z.add(e);
        for (m, &s) in mags.iter_mut().zip(sigma.iter()) {
            m.add(s * e);
        }
    });
    let z_total = z.value();
    Ok(mags.iter().map(|m| m.value() / z_total).collect())
}

fn chain_weights(couplings: &CouplingAssignment, schedule: &Schedule) -> Result<Vec<f64>> {
    schedule.weights(couplings)
}

/// Closed-form ln Z for a 1D chain of the given bond weights.
///
/// Free chain (N = bonds + 1 sites): ln Z = N·ln 2 + Σ_b ln cosh w_b.
/// Ring (N = bonds sites): ln Z = N·ln 2 + Σ_b ln cosh w_b + ln(1 + Π_b tanh w_b),
/// the trace of the transfer-matrix product, evaluated without overflow.
pub fn chain_closed_form(
    couplings: &CouplingAssignment,
    schedule: &Schedule,
    periodic: bool,
) -> Result<f64> {
    let weights = chain_weights(couplings, schedule)?;
    if weights.is_empty() {
        return Err(Error::NotOneDimensional);
    }
    if periodic && weights.len() < 3 {
        return Err(Error::SideTooSmall {
            side: weights.len(),
            minimum: 3,
            context: "a periodic chain (smaller rings duplicate bonds)",
        });
    }
    let sites = if periodic {
        weights.len()
    } else {
        weights.len() + 1
    };
    let mut log_z = sites as f64 * core::f64::consts::LN_2;
    let mut sum = Accumulator::default();
    for &w in &weights {
        sum.add(ln_cosh(w));
    }
    log_z += sum.value();
    if periodic {
        let mut product = 1.0f64;
        for &w in &weights {
            product *= libm::tanh(w);
        }
        log_z += libm::log1p(product);
    }
    Ok(log_z)
}

/// Closed-form ln Z and bond expectations for a 1D chain.
///
/// Free: ω_b = tanh w_b. Ring: ω_b = (T_b + R_b)/(1 + T_b·R_b) with
/// T_b = tanh w_b and R_b the product of every other bond's tanh (the two
/// paths joining the bond's endpoints).
pub fn chain_gibbs(
    couplings: &CouplingAssignment,
    schedule: &Schedule,
    periodic: bool,
) -> Result<GibbsReport> {
    let log_z = chain_closed_form(couplings, schedule, periodic)?;
    let weights = chain_weights(couplings, schedule)?;
    let omega_b = if periodic {
        ring_omegas(&weights)
    } else {
        weights.iter().map(|&w| libm::tanh(w)).collect()
    };
    Ok(GibbsReport { log_z, omega_b })
}

/// Ring bond expectations via prefix/suffix tanh products (symmetric in
/// the bond order, no divisions).
fn ring_omegas(weights: &[f64]) -> Vec<f64> {
    let n = weights.len();
    let tanhs: Vec<f64> = weights.iter().map(|&w| libm::tanh(w)).collect();
    let mut prefix = vec![1.0f64; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] * tanhs[i];
    }
    let mut suffix = vec![1.0f64; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] * tanhs[i];
    }
    (0..n)
        .map(|b| {
            let t = tanhs[b];
            let rest = prefix[b] * suffix[b + 1];
            (t + rest) / (1.0 + t * rest)
        })
        .collect()
}

/// Ring evaluator for t-scans: the fixed (t = 1) bonds enter through two
/// cached aggregates, so each t costs only the designated bonds.
///
/// Built once per (geometry, designated set, β); [`ChainTScan::load`] binds
/// a realization, recomputing the fixed aggregates without reallocating,
/// so disorder averages can drive millions of realizations through one
/// instance.
pub struct ChainTScan {
    beta: f64,
    sites: usize,
    designated: Vec<usize>,
    interior: Vec<usize>,
    designated_signed: Vec<f64>,
    fixed_ln_cosh: f64,
    fixed_tanh_product: f64,
    tanhs: Vec<f64>,
    prefix: Vec<f64>,
    suffix: Vec<f64>,
    loaded: bool,
}

impl ChainTScan {
    /// `designated` are the ring bonds carrying the shared t; every other
    /// bond is held at t = 1.
    pub fn new(geometry: &LatticeGeometry, designated: &[usize], beta: f64) -> Result<Self> {
        if geometry.dim() != 1 {
            return Err(Error::NotOneDimensional);
        }
        if !geometry.kind.is_torus() {
            return Err(Error::NotATorus);
        }
        if designated.is_empty() {
            return Err(Error::EmptyDesignatedSet);
        }
        let bonds = geometry.bond_count();
        let mut is_designated = vec![false; bonds];
        for &b in designated {
            if b >= bonds {
                return Err(Error::InvalidSchedule("designated bond outside the bond list"));
            }
            if is_designated[b] {
                return Err(Error::InvalidSchedule("designated bond listed twice"));
            }
            is_designated[b] = true;
        }
        let interior = (0..bonds).filter(|&b| !is_designated[b]).collect();
        let k = designated.len();
        Ok(Self {
            beta,
            sites: geometry.site_count(),
            designated: designated.to_vec(),
            interior,
            designated_signed: vec![0.0; k],
            fixed_ln_cosh: 0.0,
            fixed_tanh_product: 1.0,
            tanhs: vec![0.0; k],
            prefix: vec![1.0; k + 1],
            suffix: vec![1.0; k + 1],
            loaded: false,
        })
    }

    /// Bind a realization: recompute the fixed-bond aggregates.
    pub fn load(&mut self, couplings: &CouplingAssignment) -> Result<()> {
        let bonds = self.designated.len() + self.interior.len();
        if couplings.bond_count() != bonds {
            return Err(Error::BondCountMismatch {
                expected: bonds,
                got: couplings.bond_count(),
            });
        }
        let mut ln_cosh_sum = Accumulator::default();
        let mut tanh_product = 1.0f64;
        for &b in &self.interior {
            let w = self.beta * couplings.signed(b);
            ln_cosh_sum.add(ln_cosh(w));
            tanh_product *= libm::tanh(w);
        }
        self.fixed_ln_cosh = ln_cosh_sum.value();
        self.fixed_tanh_product = tanh_product;
        for (slot, &b) in self.designated_signed.iter_mut().zip(&self.designated) {
            *slot = couplings.signed(b);
        }
        self.loaded = true;
        Ok(())
    }

    pub fn designated_count(&self) -> usize {
        self.designated.len()
    }

    /// Designated bond indices in slot order.
    pub fn designated(&self) -> &[usize] {
        &self.designated
    }

    /// ln Z at interpolation value t; `omegas` (one slot per designated
    /// bond, in [`ChainTScan::designated`] order) receives the designated
    /// ω(σ_b). Allocation-free.
    pub fn eval(&mut self, t: f64, omegas: &mut [f64]) -> f64 {
        debug_assert!(self.loaded, "load a realization before evaluating");
        let scale = self.beta * libm::sqrt(t);
        let k = self.designated.len();
        debug_assert_eq!(omegas.len(), k);
        let mut log_z = self.sites as f64 * core::f64::consts::LN_2 + self.fixed_ln_cosh;
        for i in 0..k {
            let w = scale * self.designated_signed[i];
            self.tanhs[i] = libm::tanh(w);
            log_z += ln_cosh(w);
        }
        for i in 0..k {
            self.prefix[i + 1] = self.prefix[i] * self.tanhs[i];
        }
        self.suffix[k] = 1.0;
        for i in (0..k).rev() {
            self.suffix[i] = self.suffix[i + 1] * self.tanhs[i];
        }
        log_z += libm::log1p(self.fixed_tanh_product * self.prefix[k]);
        for i in 0..k {
            let t_i = self.tanhs[i];
            let rest = self.fixed_tanh_product * self.prefix[i] * self.suffix[i + 1];
            omegas[i] = (t_i + rest) / (1.0 + t_i * rest);
        }
        log_z
    }

    /// ln Z alone. Allocation-free.
    pub fn log_z(&mut self, t: f64) -> f64 {
        debug_assert!(self.loaded, "load a realization before evaluating");
        let scale = self.beta * libm::sqrt(t);
        let mut log_z = self.sites as f64 * core::f64::consts::LN_2 + self.fixed_ln_cosh;
        let mut product = self.fixed_tanh_product;
        for &g in &self.designated_signed {
            let w = scale * g;
            log_z += ln_cosh(w);
            product *= libm::tanh(w);
        }
        log_z + libm::log1p(product)
    }
}

/// Two-replica expectation ω(q_b) = ⟨σ_b·τ_b⟩ over the product Gibbs state,
/// computed as the explicit double sum over configuration pairs (never as
/// the square of the single-replica sum, which it must reproduce).
pub fn two_replica_overlap(
    geometry: &LatticeGeometry,
    couplings: &CouplingAssignment,
    schedule: &Schedule,
    bond: usize,
) -> Result<f64> {
    two_replica_overlap_with_cap(geometry, couplings, schedule, bond, PAIR_CAP_DEFAULT)
}

pub fn two_replica_overlap_with_cap(
    geometry: &LatticeGeometry,
    couplings: &CouplingAssignment,
    schedule: &Schedule,
    bond: usize,
    cap: usize,
) -> Result<f64> {
    let sites = geometry.site_count();
    if sites > cap {
        return Err(Error::PairCapExceeded { sites, cap });
    }
    if bond >= geometry.bond_count() {
        return Err(Error::InvalidSchedule("queried bond outside the bond list"));
    }
    let weights = schedule.weights(couplings)?;
    let bond_sites: Vec<(usize, usize)> = geometry
        .bonds()
        .iter()
        .map(|b| (b.site_a, b.site_b))
        .collect();
    let enumerator = Enumerator::new(sites, &bond_sites, &weights);
    let u_max = enumerator.max_energy();
    let configs = 1usize << sites;
    let mut boltzmann = Vec::with_capacity(configs);
    let mut bond_value = Vec::with_capacity(configs);
    enumerator.walk(u_max, |e, bp| {
        boltzmann.push(e);
        bond_value.push(bp[bond]);
    });
    let mut numerator = Accumulator::default();
    let mut denominator = Accumulator::default();
    for i in 0..configs {
        for j in 0..configs {
            let pair = boltzmann[i] * boltzmann[j];
            numerator.add(pair * bond_value[i] * bond_value[j]);
            denominator.add(pair);
        }
    }
    Ok(numerator.value() / denominator.value())
}

/// Disorder covariance Av[U(σ)·U(τ)] of the potential on two fixed spin
/// configurations, at t ≡ 1 and β = 1. Equals Σ_b σ_b·τ_b = |B|·q_B(σ,τ).
pub fn covariance_probe(
    geometry: &LatticeGeometry,
    sigma: &[i8],
    tau: &[i8],
    method: &DisorderAverage,
) -> Result<QuenchedEstimate> {
    let sites = geometry.site_count();
    if sigma.len() != sites {
        return Err(Error::SiteCountMismatch {
            expected: sites,
            got: sigma.len(),
        });
    }
    if tau.len() != sites {
        return Err(Error::SiteCountMismatch {
            expected: sites,
            got: tau.len(),
        });
    }
    if sigma.iter().chain(tau).any(|&s| s != 1 && s != -1) {
        return Err(Error::Unsupported("spin configurations must have ±1 entries"));
    }
    let sigma_bond: Vec<f64> = geometry
        .bonds()
        .iter()
        .map(|b| (sigma[b.site_a] * sigma[b.site_b]) as f64)
        .collect();
    let tau_bond: Vec<f64> = geometry
        .bonds()
        .iter()
        .map(|b| (tau[b.site_a] * tau[b.site_b]) as f64)
        .collect();
    quenched_average(
        |assignment| {
            let mut u_sigma = Accumulator::default();
            let mut u_tau = Accumulator::default();
            for b in 0..assignment.bond_count() {
                let j = assignment.signed(b);
                u_sigma.add(j * sigma_bond[b]);
                u_tau.add(j * tau_bond[b]);
            }
            Ok(u_sigma.value() * u_tau.value())
        },
        geometry.bond_count(),
        method,
    )
}
