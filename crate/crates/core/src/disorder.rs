//! Disorder realizations and quenched averaging.
//!
//! Couplings are i.i.d. standard Gaussians attached to bonds. Two backends
//! compute the disorder average of a functional:
//!
//! * seeded Monte Carlo over counter-based coupling streams: the coupling
//!   for (seed, sample, bond) is a pure function of that triple, so results
//!   never depend on evaluation order and the same realization can be fed
//!   to several functionals (common random numbers);
//! * tensor-product Gauss-Hermite quadrature: exact for integrands that
//!   are polynomial (degree < 2·nodes) in each coupling, streamed point by
//!   point so large grids never materialize.
//!
//! Grids are described by a [`GhPlan`] holding a node count per bond. The
//! uniform plan is the common case; [`GhPlan::boosted`] raises the order on
//! a designated subset of bonds, which is where quadrature error
//! concentrates when differentiated quantities are compared across routes
//! (the error of the Gaussian integration-by-parts step lives entirely in
//! the coordinates of the bonds whose variance is being varied, so only
//! those need high order).

use crate::quad::{self, Accumulator};
use crate::{Error, Result};
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Default cap on the total Gauss-Hermite grid size.
pub const GH_GRID_CAP_DEFAULT: u128 = 10_000_000;

/// One disorder realization: couplings aligned with the geometry's bond
/// order, per-bond signs, and an averaging weight (1 for MC samples).
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingAssignment {
    pub values: Vec<f64>,
    pub signs: Vec<i8>,
    pub weight: f64,
}

impl CouplingAssignment {
    pub fn bond_count(&self) -> usize {
        self.values.len()
    }

    /// Signed coupling α_b·J_b.
    pub fn signed(&self, bond: usize) -> f64 {
        self.signs[bond] as f64 * self.values[bond]
    }

    /// Flip α_b to −1 on the listed bonds (antiperiodic seam).
    pub fn flip_signs(&mut self, bonds: &[usize]) {
        for &b in bonds {
            self.signs[b] = -self.signs[b];
        }
    }
}

/// splitmix64 finalizer: a bijective avalanche mix on 64 bits.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based stream word for (seed, sample index, bond, lane).
pub(crate) fn stream_u64(seed: u64, index: u64, bond: u64, lane: u64) -> u64 {
    let mut h = mix64(seed ^ 0x9e37_79b9_7f4a_7c15);
    h = mix64(h ^ index);
    h = mix64(h ^ bond);
    h = mix64(h ^ lane);
    h
}

/// Map a stream word to (0,1), never hitting either endpoint.
pub(crate) fn unit_open(word: u64) -> f64 {
    ((word >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Standard normal draw for (seed, sample index, bond): Box-Muller on two
/// stream lanes.
fn standard_normal(seed: u64, index: u64, bond: u64) -> f64 {
    let u1 = unit_open(stream_u64(seed, index, bond, 0));
    let u2 = unit_open(stream_u64(seed, index, bond, 1));
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
}

/// Deterministic realization for (seed, sample_index): same triple, same
/// coupling, independent of evaluation order. All signs +1.
pub fn sample_couplings(bond_count: usize, seed: u64, sample_index: u64) -> CouplingAssignment {
    let values = (0..bond_count)
        .map(|b| standard_normal(seed, sample_index, b as u64))
        .collect();
    CouplingAssignment {
        values,
        signs: vec![1; bond_count],
        weight: 1.0,
    }
}

/// Per-bond Gauss-Hermite node counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GhPlan {
    nodes: Vec<usize>,
}

impl GhPlan {
    /// Same order on every bond.
    pub fn uniform(nodes_per_bond: usize, bond_count: usize) -> Result<Self> {
        if nodes_per_bond < 2 {
            return Err(Error::InvalidQuadrature(
                "Gauss-Hermite disorder grids need at least 2 nodes per bond",
            ));
        }
        Ok(Self {
            nodes: vec![nodes_per_bond; bond_count],
        })
    }

    /// `base` nodes everywhere, `boosted_nodes` on the listed bonds.
    pub fn boosted(
        base: usize,
        bond_count: usize,
        boosted_bonds: &[usize],
        boosted_nodes: usize,
    ) -> Result<Self> {
        let mut plan = Self::uniform(base, bond_count)?;
        if boosted_nodes < 2 {
            return Err(Error::InvalidQuadrature(
                "Gauss-Hermite disorder grids need at least 2 nodes per bond",
            ));
        }
        for &b in boosted_bonds {
            if b >= bond_count {
                return Err(Error::InvalidQuadrature(
                    "boosted bond index outside the bond list",
                ));
            }
            plan.nodes[b] = boosted_nodes;
        }
        Ok(plan)
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn bond_count(&self) -> usize {
        self.nodes.len()
    }

    /// Total grid size Π_b nodes_b, saturating.
    pub fn grid_points(&self) -> u128 {
        let mut total: u128 = 1;
        for &n in &self.nodes {
            total = total.saturating_mul(n as u128);
        }
        total
    }

    pub fn check_cap(&self, cap: u128) -> Result<()> {
        let required = self.grid_points();
        if required > cap {
            return Err(Error::GridCapExceeded { required, cap });
        }
        Ok(())
    }
}

/// Streamed tensor-product Gauss-Hermite grid over the couplings.
#[derive(Debug, Clone)]
pub struct GhGrid {
    node_values: Vec<Vec<f64>>,
    node_weights: Vec<Vec<f64>>,
    points: u128,
}

/// Uniform grid under the default cap; the common entry point.
pub fn gauss_hermite_grid(nodes_per_bond: usize, bond_count: usize) -> Result<GhGrid> {
    GhGrid::new(&GhPlan::uniform(nodes_per_bond, bond_count)?, GH_GRID_CAP_DEFAULT)
}

impl GhGrid {
    pub fn new(plan: &GhPlan, cap: u128) -> Result<Self> {
        plan.check_cap(cap)?;
        let mut node_values = Vec::with_capacity(plan.bond_count());
        let mut node_weights = Vec::with_capacity(plan.bond_count());
        for &n in plan.nodes() {
            let (x, w) = quad::gauss_hermite(n)?;
            node_values.push(x);
            node_weights.push(w);
        }
        Ok(Self {
            node_values,
            node_weights,
            points: plan.grid_points(),
        })
    }

    pub fn point_count(&self) -> u128 {
        self.points
    }

    /// Drive `f` over every grid point in odometer order (bond 0 fastest).
    /// The assignment buffer is reused between calls; `f` gets the point's
    /// ordinal for error attribution.
    pub fn visit<F>(&self, mut f: F) -> Result<()>
    where
        F: FnMut(usize, &CouplingAssignment) -> Result<()>,
    {
        let bonds = self.node_values.len();
        let mut digits = vec![0usize; bonds];
        let mut assignment = CouplingAssignment {
            values: self.node_values.iter().map(|v| v[0]).collect(),
            signs: vec![1; bonds],
            weight: 0.0,
        };
        let mut ordinal = 0usize;
        loop {
            let mut weight = 1.0f64;
            for (b, &d) in digits.iter().enumerate() {
                weight *= self.node_weights[b][d];
            }
            assignment.weight = weight;
            f(ordinal, &assignment)?;
            ordinal += 1;
            let mut carry = 0usize;
            loop {
                if carry == bonds {
                    return Ok(());
                }
                digits[carry] += 1;
                if digits[carry] < self.node_values[carry].len() {
                    assignment.values[carry] = self.node_values[carry][digits[carry]];
                    break;
                }
                digits[carry] = 0;
                assignment.values[carry] = self.node_values[carry][0];
                carry += 1;
            }
        }
    }
}

/// Which disorder-averaging backend to run.
#[derive(Debug, Clone, PartialEq)]
pub enum DisorderAverage {
    Mc { samples: usize, seed: u64 },
    GaussHermite { plan: GhPlan, cap: u128 },
}

impl DisorderAverage {
    /// Uniform-plan quadrature under the default cap.
    pub fn gauss_hermite(nodes_per_bond: usize, bond_count: usize) -> Result<Self> {
        Ok(DisorderAverage::GaussHermite {
            plan: GhPlan::uniform(nodes_per_bond, bond_count)?,
            cap: GH_GRID_CAP_DEFAULT,
        })
    }
}

/// Method provenance attached to every estimate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MethodTag {
    Mc {
        samples: usize,
        seed: u64,
    },
    GaussHermite {
        nodes_min: usize,
        nodes_max: usize,
        grid_points: u64,
    },
}

/// A disorder-averaged value: MC carries a standard error, quadrature is
/// exact (std_error 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuenchedEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub method: MethodTag,
    pub count: u64,
}

fn method_tag(method: &DisorderAverage) -> MethodTag {
    match method {
        DisorderAverage::Mc { samples, seed } => MethodTag::Mc {
            samples: *samples,
            seed: *seed,
        },
        DisorderAverage::GaussHermite { plan, .. } => MethodTag::GaussHermite {
            nodes_min: plan.nodes().iter().copied().min().unwrap_or(0),
            nodes_max: plan.nodes().iter().copied().max().unwrap_or(0),
            grid_points: u64::try_from(plan.grid_points()).unwrap_or(u64::MAX),
        },
    }
}

/// Quenched average of a vector functional: one pass over the disorder
/// feeding every output slot, so multi-quantity runs share realizations
/// (and grid traversals) instead of repeating them.
///
/// MC slots get Welford mean and standard error; quadrature slots get the
/// exact weighted sum with compensated accumulation and std_error 0.
/// Functional failures abort with the realization index attached.
pub fn quenched_average_many<F>(
    mut functional: F,
    bond_count: usize,
    outputs: usize,
    method: &DisorderAverage,
) -> Result<Vec<QuenchedEstimate>>
where
    F: FnMut(&CouplingAssignment, &mut [f64]) -> Result<()>,
{
    let tag = method_tag(method);
    let mut slots = vec![0.0f64; outputs];
    match method {
        DisorderAverage::Mc { samples, seed } => {
            if *samples == 0 {
                return Err(Error::InvalidMcParams("disorder sample count must be positive"));
            }
            let mut mean = vec![0.0f64; outputs];
            let mut m2 = vec![0.0f64; outputs];
            for index in 0..*samples {
                let assignment = sample_couplings(bond_count, *seed, index as u64);
                functional(&assignment, &mut slots).map_err(|e| Error::FunctionalFailed {
                    index,
                    source: alloc::boxed::Box::new(e),
                })?;
                let n = (index + 1) as f64;
                for (slot, value) in slots.iter().enumerate() {
                    let delta = value - mean[slot];
                    mean[slot] += delta / n;
                    m2[slot] += delta * (value - mean[slot]);
                }
            }
            let n = *samples as f64;
            Ok((0..outputs)
                .map(|slot| QuenchedEstimate {
                    mean: mean[slot],
                    std_error: if *samples > 1 {
                        libm::sqrt(m2[slot] / (n * (n - 1.0)))
                    } else {
                        0.0
                    },
                    method: tag.clone(),
                    count: *samples as u64,
                })
                .collect())
        }
        DisorderAverage::GaussHermite { plan, cap } => {
            if plan.bond_count() != bond_count {
                return Err(Error::BondCountMismatch {
                    expected: bond_count,
                    got: plan.bond_count(),
                });
            }
            let grid = GhGrid::new(plan, *cap)?;
            let mut acc = vec![Accumulator::default(); outputs];
            grid.visit(|ordinal, assignment| {
                functional(assignment, &mut slots).map_err(|e| Error::FunctionalFailed {
                    index: ordinal,
                    source: alloc::boxed::Box::new(e),
                })?;
                for (a, value) in acc.iter_mut().zip(&slots) {
                    a.add(assignment.weight * value);
                }
                Ok(())
            })?;
            let count = u64::try_from(grid.point_count()).unwrap_or(u64::MAX);
            Ok(acc
                .iter()
                .map(|a| QuenchedEstimate {
                    mean: a.value(),
                    std_error: 0.0,
                    method: tag.clone(),
                    count,
                })
                .collect())
        }
    }
}

/// Scalar convenience wrapper over [`quenched_average_many`].
pub fn quenched_average<F>(
    mut functional: F,
    bond_count: usize,
    method: &DisorderAverage,
) -> Result<QuenchedEstimate>
where
    F: FnMut(&CouplingAssignment) -> Result<f64>,
{
    let mut out = quenched_average_many(
        |assignment, slots| {
            slots[0] = functional(assignment)?;
            Ok(())
        },
        bond_count,
        1,
        method,
    )?;
    Ok(out.pop().expect("one output slot"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coupling_streams_are_deterministic() {
        let a = sample_couplings(5, 42, 7);
        let b = sample_couplings(5, 42, 7);
        assert_eq!(a, b);
        // the same (seed, index, bond) triple yields the same value no
        // matter which realization it is pulled from
        let c = sample_couplings(9, 42, 7);
        assert_eq!(&a.values[..], &c.values[..5]);
        assert_ne!(a.values, sample_couplings(5, 42, 8).values);
        assert_ne!(a.values, sample_couplings(5, 43, 7).values);
    }

    #[test]
    fn coupling_marginals_are_standard_normal() {
        let n = 100_000u64;
        let mut sum = 0.0f64;
        let mut sum2 = 0.0f64;
        for index in 0..n {
            let x = sample_couplings(1, 1234, index).values[0];
            sum += x;
            sum2 += x * x;
        }
        let mean = sum / n as f64;
        let second = sum2 / n as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((second - 1.0).abs() < 0.02, "second moment {second}");
    }

    #[test]
    fn grid_weights_and_low_moments_exact() {
        let grid = gauss_hermite_grid(6, 3).unwrap();
        let mut w = Accumulator::default();
        let mut j1 = Accumulator::default();
        let mut j2 = Accumulator::default();
        let mut cross = Accumulator::default();
        grid.visit(|_, a| {
            w.add(a.weight);
            j1.add(a.weight * a.values[1]);
            j2.add(a.weight * a.values[1] * a.values[1]);
            // independence across bonds: E[J_0² J_2⁴] = 1·3
            cross.add(a.weight * a.values[0].powi(2) * a.values[2].powi(4));
            Ok(())
        })
        .unwrap();
        assert!((w.value() - 1.0).abs() < 1e-12);
        assert!(j1.value().abs() < 1e-12);
        assert!((j2.value() - 1.0).abs() < 1e-12);
        assert!((cross.value() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn grid_cap_enforced() {
        let err = gauss_hermite_grid(20, 8).unwrap_err();
        match err {
            Error::GridCapExceeded { required, cap } => {
                assert_eq!(required, 20u128.pow(8));
                assert_eq!(cap, GH_GRID_CAP_DEFAULT);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn boosted_plan_counts_points() {
        let plan = GhPlan::boosted(6, 4, &[1, 3], 64).unwrap();
        assert_eq!(plan.nodes(), &[6, 64, 6, 64]);
        assert_eq!(plan.grid_points(), 6 * 64 * 6 * 64);
        assert!(GhPlan::boosted(6, 4, &[4], 64).is_err());
    }

    #[test]
    fn one_bond_tanh_square_regression() {
        // Frozen from a 40-digit 200-node oracle: exact value
        // 0.39429449039784117442; the 64-node rule lands here.
        let method = DisorderAverage::gauss_hermite(64, 1).unwrap();
        let est = quenched_average(|a| Ok(libm::tanh(a.values[0]).powi(2)), 1, &method).unwrap();
        assert!((est.mean - 0.39429449305339133306).abs() < 1e-13);
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.count, 64);
    }

    #[test]
    fn one_bond_pressure_against_high_order_oracle() {
        // E ln(4 cosh J) from the 200-node oracle, frozen at 40 digits.
        let method = DisorderAverage::gauss_hermite(64, 1).unwrap();
        let est = quenched_average(
            |a| Ok(libm::log(4.0 * libm::cosh(a.values[0]))),
            1,
            &method,
        )
        .unwrap();
        assert!((est.mean - 1.760861568611328593).abs() < 1e-10);
    }

    #[test]
    fn quadrature_of_square_is_exact() {
        let method = DisorderAverage::gauss_hermite(2, 3).unwrap();
        let est = quenched_average(|a| Ok(a.values[0] * a.values[0]), 3, &method).unwrap();
        assert!((est.mean - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mc_constant_has_zero_error() {
        let method = DisorderAverage::Mc { samples: 50, seed: 9 };
        let est = quenched_average(|_| Ok(2.5), 4, &method).unwrap();
        assert_eq!(est.mean, 2.5);
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.count, 50);
    }

    #[test]
    fn mc_estimates_are_reproducible() {
        let method = DisorderAverage::Mc { samples: 200, seed: 77 };
        let f = |a: &CouplingAssignment| Ok(libm::log(libm::cosh(a.values[0] + a.values[1])));
        let x = quenched_average(f, 2, &method).unwrap();
        let y = quenched_average(f, 2, &method).unwrap();
        assert_eq!(x.mean.to_bits(), y.mean.to_bits());
        assert_eq!(x.std_error.to_bits(), y.std_error.to_bits());
    }

    #[test]
    fn paired_difference_beats_independent_streams() {
        // Common random numbers: estimate E[f − g] with f, g evaluated on
        // the same realizations; the paired spread must undercut the
        // independent-stream spread for these strongly correlated
        // functionals.
        let samples = 2000usize;
        let f = |j: f64| libm::log(libm::cosh(j));
        let g = |j: f64| libm::log(libm::cosh(0.9 * j));
        let paired = quenched_average(
            |a| Ok(f(a.values[0]) - g(a.values[0])),
            1,
            &DisorderAverage::Mc { samples, seed: 5 },
        )
        .unwrap();
        let f_only = quenched_average(
            |a| Ok(f(a.values[0])),
            1,
            &DisorderAverage::Mc { samples, seed: 5 },
        )
        .unwrap();
        let g_only = quenched_average(
            |a| Ok(g(a.values[0])),
            1,
            &DisorderAverage::Mc { samples, seed: 6 },
        )
        .unwrap();
        let independent = libm::sqrt(
            f_only.std_error * f_only.std_error + g_only.std_error * g_only.std_error,
        );
        assert!(
            paired.std_error < independent,
            "paired {} vs independent {}",
            paired.std_error,
            independent
        );
    }

    #[test]
    fn functional_failures_carry_the_realization_index() {
        let method = DisorderAverage::Mc { samples: 10, seed: 3 };
        let err = quenched_average(
            |a| {
                if a.values[0] > 0.0 {
                    Err(Error::Unsupported("probe"))
                } else {
                    Ok(0.0)
                }
            },
            1,
            &method,
        )
        .unwrap_err();
        assert!(matches!(err, Error::FunctionalFailed { .. }));
    }

    #[test]
    fn vector_average_matches_scalar_calls() {
        let method = DisorderAverage::Mc { samples: 64, seed: 11 };
        let many = quenched_average_many(
            |a, out| {
                out[0] = a.values[0];
                out[1] = a.values[0] * a.values[1];
                Ok(())
            },
            2,
            2,
            &method,
        )
        .unwrap();
        let first = quenched_average(|a| Ok(a.values[0]), 2, &method).unwrap();
        let second = quenched_average(|a| Ok(a.values[0] * a.values[1]), 2, &method).unwrap();
        assert_eq!(many[0].mean.to_bits(), first.mean.to_bits());
        assert_eq!(many[1].mean.to_bits(), second.mean.to_bits());
        assert_eq!(many[0].std_error.to_bits(), first.std_error.to_bits());
    }

    #[test]
    fn sign_flips_only_touch_listed_bonds() {
        let mut a = sample_couplings(4, 1, 0);
        a.flip_signs(&[1, 3]);
        assert_eq!(a.signs, vec![1, -1, 1, -1]);
        assert_eq!(a.signed(1), -a.values[1]);
        assert_eq!(a.signed(0), a.values[0]);
    }
}
