//! Interpolation schedules and the t-integrand.
//!
//! The interpolation scales the designated couplings by √t, so t multiplies
//! their variance. Both routes to a pressure difference live here:
//!
//! * direct: ln Z at the endpoint schedules t = 1 and t = 0;
//! * integral: ∫₀¹ (β²/2)·Σ_{b∈S}(1 − ⟨q_b⟩_t) dt, where ⟨q_b⟩_t is the
//!   disorder average of ω(σ_b)², integrated by Gauss-Legendre on [0,1].
//!
//! The integrand is always evaluated in the (β²/2)(1 − ⟨q_b⟩) form; the
//! 1/(2√t) intermediate form never appears, so t → 0 is regular.
//!
//! [`evaluate_path`] computes both routes over a single sweep of the
//! disorder method, which pairs them realization by realization: under
//! quadrature the shared grid cancels the dominant truncation error of the
//! routes' common interior coordinates, and under sampled disorder the
//! paired gap has a far smaller standard error than the difference of
//! independently averaged routes.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::disorder::{
    quenched_average_many, CouplingAssignment, DisorderAverage, GhPlan, QuenchedEstimate,
    GH_GRID_CAP_DEFAULT,
};
use crate::engine::{log_partition_with_cap, ChainTScan, Schedule, ENUMERATION_CAP_DEFAULT};
use crate::lattice::{corridor_set, cut_set, LatticeGeometry};
use crate::mc::{
    derive_chain_seed, geometric_ladder, mc_bond_overlap, mc_log_partition_difference, McParams,
};
use crate::quad::gauss_legendre_01;
use crate::{Error, Result};

/// Which bond set carries the interpolation parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Designated {
    /// Corridor bonds of a magnified torus (block-decoupling path).
    Corridor,
    /// Wrap bonds of a plain torus (periodic-vs-free path).
    Cut,
}

/// Resolve the designated role to concrete bond indices.
pub fn designated_set(geometry: &LatticeGeometry, designated: Designated) -> Result<Vec<usize>> {
    let set = match designated {
        Designated::Corridor => corridor_set(geometry)?,
        Designated::Cut => cut_set(geometry)?,
    };
    if set.is_empty() {
        return Err(Error::EmptyDesignatedSet);
    }
    Ok(set)
}

/// Schedule with t on the designated role's bonds and 1 elsewhere.
pub fn make_schedule(
    geometry: &LatticeGeometry,
    designated: Designated,
    t: f64,
    beta: f64,
) -> Result<Schedule> {
    let set = designated_set(geometry, designated)?;
    Schedule::with_designated(geometry.bond_count(), set, t, beta)
}

/// Spin-engine selection for quenched functionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineChoice {
    /// Ring closed form for 1D tori, enumeration within the cap, MC beyond.
    Auto,
    Enumerate,
    Chain,
    Mc,
}

/// Parallel-tempering parameters as a template; concrete [`McParams`] are
/// stamped out per (β, chain seed).
#[derive(Debug, Clone, PartialEq)]
pub struct McTemplate {
    pub sweeps: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Rungs of the geometric β ladder.
    pub rungs: usize,
    /// Ratio between the target β and the coldest ladder entry.
    pub span: f64,
    pub swap_interval: usize,
    /// Base seed; per-realization and per-node seeds derive from it.
    pub chain_seed: u64,
}

impl Default for McTemplate {
    fn default() -> Self {
        Self {
            sweeps: 3000,
            burn_in: 800,
            thin: 2,
            rungs: 12,
            span: 8.0,
            swap_interval: 5,
            chain_seed: 0x51ab_90be_6cdd_1a42,
        }
    }
}

impl McTemplate {
    pub fn params_for(&self, beta: f64, chain_seed: u64) -> Result<McParams> {
        McParams::new(
            self.sweeps,
            self.burn_in,
            self.thin,
            geometric_ladder(beta, self.rungs, self.span),
            self.swap_interval,
            chain_seed,
        )
    }
}

/// Disorder-average backend.
#[derive(Debug, Clone, PartialEq)]
pub enum AveragingChoice {
    /// Tensor Gauss-Hermite grid with `nodes` points per bond.
    GaussHermite { nodes: usize },
    /// Sampled realizations from the counter-based stream.
    Mc { samples: usize, seed: u64 },
}

/// Everything a quenched functional needs to pick its backends.
#[derive(Debug, Clone, PartialEq)]
pub struct Methods {
    pub avg: AveragingChoice,
    pub engine: EngineChoice,
    /// Gauss-Legendre order for t-integration (and the u-grid of MC
    /// thermodynamic integration).
    pub gl_order: usize,
    /// Node count boost applied to designated bonds under quadrature
    /// averaging. Endpoint-vs-integral comparisons converge at the rate of
    /// the designated coordinates alone, so boosting only those keeps the
    /// grid small while pushing the route gap below 10^-8.
    pub gh_boost: usize,
    pub gh_cap: u128,
    pub enum_cap: usize,
    pub mc: McTemplate,
}

impl Methods {
    pub fn gauss_hermite(nodes: usize) -> Self {
        Self {
            avg: AveragingChoice::GaussHermite { nodes },
            engine: EngineChoice::Auto,
            gl_order: 16,
            gh_boost: 64,
            gh_cap: GH_GRID_CAP_DEFAULT,
            enum_cap: ENUMERATION_CAP_DEFAULT,
            mc: McTemplate::default(),
        }
    }

    pub fn mc(samples: usize, seed: u64) -> Self {
        Self {
            avg: AveragingChoice::Mc { samples, seed },
            engine: EngineChoice::Auto,
            gl_order: 16,
            gh_boost: 64,
            gh_cap: GH_GRID_CAP_DEFAULT,
            enum_cap: ENUMERATION_CAP_DEFAULT,
            mc: McTemplate::default(),
        }
    }
}

/// The normalized integrand sampled at the t-quadrature nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrandCurve {
    /// Quadrature nodes in (0,1).
    pub t_nodes: Vec<f64>,
    /// (1/|S|)·Σ_{b∈S}(1 − ⟨q_b⟩_t) per node; each lies in [0,1] within
    /// its error bar.
    pub values: Vec<f64>,
    /// Standard errors of `values` (0 under quadrature averaging).
    pub errors: Vec<f64>,
    /// Gauss-Legendre weights on [0,1]; they sum to 1.
    pub weights: Vec<f64>,
    /// |S|, the designated bond count.
    pub designated_count: usize,
}

/// One-node integrand evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrandPoint {
    /// Quenched estimate of (β²/2)·Σ_{b∈S}(1 − ⟨q_b⟩_t).
    pub estimate: QuenchedEstimate,
    /// (1/|S|)·Σ_{b∈S}(1 − ⟨q_b⟩_t).
    pub normalized: f64,
    pub normalized_error: f64,
    pub warnings: Vec<String>,
}

/// A t-integration request: geometry, role, β, and backends.
#[derive(Debug, Clone, Copy)]
pub struct CurveRequest<'a> {
    pub geometry: &'a LatticeGeometry,
    pub designated: Designated,
    pub beta: f64,
    pub methods: &'a Methods,
}

/// ∫₀¹ of the integrand plus the sampled curve.
#[derive(Debug, Clone, PartialEq)]
pub struct TIntegral {
    pub value: QuenchedEstimate,
    pub curve: IntegrandCurve,
    pub warnings: Vec<String>,
}

/// Quenched estimate of the integrand at a single t.
pub fn integrand(
    geometry: &LatticeGeometry,
    designated: Designated,
    t: f64,
    beta: f64,
    methods: &Methods,
) -> Result<IntegrandPoint> {
    let set = designated_set(geometry, designated)?;
    let eval = evaluate_path(geometry, &set, beta, methods, &[t], &[1.0], false)?;
    let curve = eval.curve.expect("single-node evaluation always carries a curve");
    Ok(IntegrandPoint {
        estimate: eval.integral.expect("single-node evaluation always integrates"),
        normalized: curve.values[0],
        normalized_error: curve.errors[0],
        warnings: eval.warnings,
    })
}

/// Gauss-Legendre t-integration of the integrand.
pub fn integrate_t(request: &CurveRequest<'_>, gl_order: usize) -> Result<TIntegral> {
    if gl_order < 2 {
        return Err(Error::InvalidQuadrature("t-integration needs at least 2 Gauss-Legendre nodes"));
    }
    let (t_nodes, t_weights) = gauss_legendre_01(gl_order)?;
    let set = designated_set(request.geometry, request.designated)?;
    let eval = evaluate_path(
        request.geometry,
        &set,
        request.beta,
        request.methods,
        &t_nodes,
        &t_weights,
        false,
    )?;
    Ok(TIntegral {
        value: eval.integral.expect("node evaluation always integrates"),
        curve: eval.curve.expect("node evaluation always carries a curve"),
        warnings: eval.warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ResolvedEngine {
    Chain,
    Enumerate,
    Mc,
}

pub(crate) fn resolve_engine(
    methods: &Methods,
    geometry: &LatticeGeometry,
) -> Result<ResolvedEngine> {
    let ring = geometry.dim() == 1 && geometry.kind.is_torus();
    let resolved = match methods.engine {
        EngineChoice::Auto => {
            if ring {
                ResolvedEngine::Chain
            } else if geometry.site_count() <= methods.enum_cap {
                ResolvedEngine::Enumerate
            } else {
                ResolvedEngine::Mc
            }
        }
        EngineChoice::Chain => {
            if geometry.dim() != 1 {
                return Err(Error::NotOneDimensional);
            }
            if !geometry.kind.is_torus() {
                return Err(Error::NotATorus);
            }
            ResolvedEngine::Chain
        }
        EngineChoice::Enumerate => {
            if geometry.site_count() > methods.enum_cap {
                return Err(Error::EnumerationCapExceeded {
                    sites: geometry.site_count(),
                    cap: methods.enum_cap,
                });
            }
            ResolvedEngine::Enumerate
        }
        EngineChoice::Mc => ResolvedEngine::Mc,
    };
    if resolved == ResolvedEngine::Mc
        && matches!(methods.avg, AveragingChoice::GaussHermite { .. })
    {
        return Err(Error::Unsupported(
            "Gauss-Hermite disorder averaging requires an exact spin engine",
        ));
    }
    Ok(resolved)
}

/// Disorder backend for a functional; `boost` lists bonds whose quadrature
/// node count is raised to `methods.gh_boost`.
pub(crate) fn disorder_method(
    methods: &Methods,
    bond_count: usize,
    boost: &[usize],
) -> Result<DisorderAverage> {
    match &methods.avg {
        AveragingChoice::Mc { samples, seed } => Ok(DisorderAverage::Mc {
            samples: *samples,
            seed: *seed,
        }),
        AveragingChoice::GaussHermite { nodes } => {
            let plan = if boost.is_empty() || methods.gh_boost <= *nodes {
                GhPlan::uniform(*nodes, bond_count)?
            } else {
                GhPlan::boosted(*nodes, bond_count, boost, methods.gh_boost)?
            };
            Ok(DisorderAverage::GaussHermite {
                plan,
                cap: methods.gh_cap,
            })
        }
    }
}

/// Both routes to a designated-set pressure difference over one disorder
/// sweep.
pub(crate) struct PathEvaluation {
    /// Av[ln Z(t=1) − ln Z(t=0)].
    pub direct: Option<QuenchedEstimate>,
    /// Av ∫₀¹ (β²/2)·Σ_{b∈S}(1 − ω(σ_b)²) dt over the supplied nodes.
    pub integral: Option<QuenchedEstimate>,
    /// Av of the per-realization (direct − integral); its standard error
    /// reflects the pairing.
    pub route_gap: Option<QuenchedEstimate>,
    pub curve: Option<IntegrandCurve>,
    pub warnings: Vec<String>,
}

const WARNING_DISPLAY_CAP: usize = 6;

fn push_warning(warnings: &mut Vec<String>, suppressed: &mut usize, message: String) {
    if warnings.iter().any(|w| *w == message) {
        return;
    }
    if warnings.len() < WARNING_DISPLAY_CAP {
        warnings.push(message);
    } else {
        *suppressed += 1;
    }
}

/// Evaluate the designated-set interpolation path: the integrand at
/// `t_nodes` (weighted by `t_weights`) and, when `want_direct`, the
/// endpoint difference, all through one pass of the disorder method so
/// the routes stay paired.
pub(crate) fn evaluate_path(
    geometry: &LatticeGeometry,
    designated: &[usize],
    beta: f64,
    methods: &Methods,
    t_nodes: &[f64],
    t_weights: &[f64],
    want_direct: bool,
) -> Result<PathEvaluation> {
    if designated.is_empty() {
        return Err(Error::EmptyDesignatedSet);
    }
    if t_nodes.len() != t_weights.len() {
        return Err(Error::InvalidQuadrature("t nodes and weights must pair up"));
    }
    debug_assert!(!t_nodes.is_empty() || want_direct);
    let bonds = geometry.bond_count();
    let engine = resolve_engine(methods, geometry)?;
    let method = disorder_method(methods, bonds, designated)?;

    let g = t_nodes.len();
    let integral_slot = if g > 0 { Some(g) } else { None };
    let direct_slot = if want_direct { Some(g + integral_slot.map_or(0, |_| 1)) } else { None };
    let gap_slot = match (integral_slot, direct_slot) {
        (Some(_), Some(d)) => Some(d + 1),
        _ => None,
    };
    let outputs = g
        + usize::from(integral_slot.is_some())
        + usize::from(direct_slot.is_some())
        + usize::from(gap_slot.is_some());

    let half_beta_sq = 0.5 * beta * beta;
    let set_size = designated.len() as f64;

    // schedules for the engines that need explicit ones
    let mut node_schedules = Vec::with_capacity(g);
    for &t in t_nodes {
        node_schedules.push(Schedule::with_designated(bonds, designated.to_vec(), t, beta)?);
    }
    let schedule_hi = Schedule::with_designated(bonds, designated.to_vec(), 1.0, beta)?;
    let schedule_lo = Schedule::with_designated(bonds, designated.to_vec(), 0.0, beta)?;

    let mut warnings: Vec<String> = Vec::new();
    let mut suppressed = 0usize;

    let estimates = match engine {
        ResolvedEngine::Chain => {
            let mut scan = ChainTScan::new(geometry, designated, beta)?;
            let mut omegas = vec![0.0f64; designated.len()];
            quenched_average_many(
                |assignment: &CouplingAssignment, slots: &mut [f64]| {
                    scan.load(assignment)?;
                    let mut integral = 0.0f64;
                    for i in 0..g {
                        scan.eval(t_nodes[i], &mut omegas);
                        let mut s = 0.0f64;
                        for &w in omegas.iter() {
                            s += w * w;
                        }
                        slots[i] = s;
                        integral += t_weights[i] * half_beta_sq * (set_size - s);
                    }
                    if let Some(slot) = integral_slot {
                        slots[slot] = integral;
                    }
                    if let Some(slot) = direct_slot {
                        let direct = scan.log_z(1.0) - scan.log_z(0.0);
                        slots[slot] = direct;
                        if let Some(gap) = gap_slot {
                            slots[gap] = direct - integral;
                        }
                    }
                    Ok(())
                },
                bonds,
                outputs,
                &method,
            )?
        }
        ResolvedEngine::Enumerate => {
            let cap = methods.enum_cap;
            quenched_average_many(
                |assignment: &CouplingAssignment, slots: &mut [f64]| {
                    let mut integral = 0.0f64;
                    for i in 0..g {
                        let report =
                            log_partition_with_cap(geometry, assignment, &node_schedules[i], cap)?;
                        let mut s = 0.0f64;
                        for &b in designated {
                            let w = report.omega_b[b];
                            s += w * w;
                        }
                        slots[i] = s;
                        integral += t_weights[i] * half_beta_sq * (set_size - s);
                    }
                    if let Some(slot) = integral_slot {
                        slots[slot] = integral;
                    }
                    if let Some(slot) = direct_slot {
                        let hi = log_partition_with_cap(geometry, assignment, &schedule_hi, cap)?;
                        let lo = log_partition_with_cap(geometry, assignment, &schedule_lo, cap)?;
                        let direct = hi.log_z - lo.log_z;
                        slots[slot] = direct;
                        if let Some(gap) = gap_slot {
                            slots[gap] = direct - integral;
                        }
                    }
                    Ok(())
                },
                bonds,
                outputs,
                &method,
            )?
        }
        ResolvedEngine::Mc => {
            let template = methods.mc.clone();
            let ti_order = methods.gl_order.max(2);
            let mut realization: u64 = 0;
            quenched_average_many(
                |assignment: &CouplingAssignment, slots: &mut [f64]| {
                    let base = derive_chain_seed(template.chain_seed, realization);
                    realization += 1;
                    let mut integral = 0.0f64;
                    for i in 0..g {
                        let params = template.params_for(beta, derive_chain_seed(base, i as u64))?;
                        let report = mc_bond_overlap(
                            geometry,
                            assignment,
                            &node_schedules[i],
                            designated,
                            &params,
                        )?;
                        for w in report.warnings {
                            push_warning(&mut warnings, &mut suppressed, w);
                        }
                        let mut s = 0.0f64;
                        for est in &report.estimates {
                            s += est.mean;
                        }
                        slots[i] = s;
                        integral += t_weights[i] * half_beta_sq * (set_size - s);
                    }
                    if let Some(slot) = integral_slot {
                        slots[slot] = integral;
                    }
                    if let Some(slot) = direct_slot {
                        let params = template.params_for(beta, base)?;
                        let diff = mc_log_partition_difference(
                            geometry,
                            assignment,
                            &schedule_hi,
                            &schedule_lo,
                            ti_order,
                            &params,
                        )?;
                        for w in diff.warnings {
                            push_warning(&mut warnings, &mut suppressed, w);
                        }
                        slots[slot] = diff.mean;
                        if let Some(gap) = gap_slot {
                            slots[gap] = diff.mean - integral;
                        }
                    }
                    Ok(())
                },
                bonds,
                outputs,
                &method,
            )?
        }
    };

    if suppressed > 0 {
        warnings.push(format!("{suppressed} further distinct warnings suppressed"));
    }

    let curve = if g > 0 {
        let mut values = Vec::with_capacity(g);
        let mut errors = Vec::with_capacity(g);
        for est in &estimates[..g] {
            values.push(1.0 - est.mean / set_size);
            errors.push(est.std_error / set_size);
        }
        Some(IntegrandCurve {
            t_nodes: t_nodes.to_vec(),
            values,
            errors,
            weights: t_weights.to_vec(),
            designated_count: designated.len(),
        })
    } else {
        None
    };

    Ok(PathEvaluation {
        direct: direct_slot.map(|i| estimates[i].clone()),
        integral: integral_slot.map(|i| estimates[i].clone()),
        route_gap: gap_slot.map(|i| estimates[i].clone()),
        curve,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::sample_couplings;
    use crate::engine::{chain_closed_form, log_partition, ln_cosh};
    use crate::lattice::{build_geometry, BondRole, GeometryKind, LatticeSpec};
    use crate::quad::Accumulator;

    fn ring(n: usize) -> LatticeGeometry {
        build_geometry(&LatticeSpec::new(vec![n]).unwrap(), GeometryKind::Torus).unwrap()
    }

    fn magnified_ring(n: usize, k: usize) -> LatticeGeometry {
        build_geometry(
            &LatticeSpec::new(vec![n]).unwrap(),
            GeometryKind::MagnifiedTorus { k },
        )
        .unwrap()
    }

    #[test]
    fn schedule_at_t_one_matches_uniform() {
        let g = ring(4);
        let schedule = make_schedule(&g, Designated::Cut, 1.0, 1.3).unwrap();
        let uniform = Schedule::uniform(g.bond_count(), 1.3).unwrap();
        let couplings = sample_couplings(g.bond_count(), 5, 0);
        for b in 0..g.bond_count() {
            assert_eq!(schedule.t(b), 1.0);
            assert_eq!(
                schedule.bond_weight(b, &couplings),
                uniform.bond_weight(b, &couplings)
            );
        }
    }

    #[test]
    fn corridor_schedule_at_zero_factorizes_over_blocks() {
        let g = magnified_ring(3, 2);
        let couplings = sample_couplings(g.bond_count(), 11, 3);
        let schedule = make_schedule(&g, Designated::Corridor, 0.0, 0.9).unwrap();
        let whole = log_partition(&g, &couplings, &schedule).unwrap().log_z;
        // each block is a free 3-chain over its interior bonds
        let mut blocks: Vec<f64> = Vec::new();
        for block in 0..2 {
            let mut ln_z = 3.0 * core::f64::consts::LN_2;
            for (b, role) in g.roles().iter().enumerate() {
                if *role == (BondRole::BlockInterior(block)) {
                    ln_z += ln_cosh(0.9 * couplings.signed(b));
                }
            }
            blocks.push(ln_z);
        }
        let sum: f64 = blocks.iter().sum();
        assert!((whole - sum).abs() < 1e-12, "{whole} vs {sum}");
    }

    #[test]
    fn cut_schedule_at_zero_equals_free_block() {
        let g = ring(4);
        let couplings = sample_couplings(g.bond_count(), 7, 1);
        let schedule = make_schedule(&g, Designated::Cut, 0.0, 1.1).unwrap();
        let ln_z = log_partition(&g, &couplings, &schedule).unwrap().log_z;
        let cut = cut_set(&g).unwrap();
        let mut free = 4.0 * core::f64::consts::LN_2;
        for b in 0..g.bond_count() {
            if !cut.contains(&b) {
                free += ln_cosh(1.1 * couplings.signed(b));
            }
        }
        assert!((ln_z - free).abs() < 1e-12);
    }

    #[test]
    fn designated_roles_are_strict_about_geometry() {
        let torus = ring(4);
        let magnified = magnified_ring(3, 2);
        assert!(matches!(
            designated_set(&torus, Designated::Corridor).unwrap_err(),
            Error::NotATorus
        ));
        assert!(matches!(
            designated_set(&magnified, Designated::Cut).unwrap_err(),
            Error::NotATorus
        ));
        assert!(!designated_set(&magnified, Designated::Corridor)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn integrand_at_zero_is_exactly_one_per_bond() {
        let g = magnified_ring(3, 2);
        let mut methods = Methods::gauss_hermite(4);
        methods.gh_boost = 8;
        let point = integrand(&g, Designated::Corridor, 0.0, 1.0, &methods).unwrap();
        assert_eq!(point.normalized, 1.0);
        assert_eq!(point.normalized_error, 0.0);
        // ⟨q⟩ = 0 at t = 0, so the estimate is (β²/2)|S| exactly
        let expected = 0.5 * designated_set(&g, Designated::Corridor).unwrap().len() as f64;
        assert!((point.estimate.mean - expected).abs() < 1e-14);
    }

    #[test]
    fn integrand_vanishes_at_beta_zero() {
        let g = ring(4);
        let methods = Methods::gauss_hermite(3);
        let point = integrand(&g, Designated::Cut, 0.7, 0.0, &methods).unwrap();
        assert_eq!(point.estimate.mean, 0.0);
        assert_eq!(point.normalized, 1.0);
    }

    #[test]
    fn integrand_matches_quenched_pressure_slope() {
        // centered finite difference of Av ln Z(t) on the same grid
        let g = magnified_ring(3, 2);
        let designated = designated_set(&g, Designated::Corridor).unwrap();
        let beta = 1.0;
        let t = 0.5;
        let step = 1e-4;
        let mut methods = Methods::gauss_hermite(4);
        methods.gh_boost = 48;
        let point = integrand(&g, Designated::Corridor, t, beta, &methods).unwrap();

        let method = disorder_method(&methods, g.bond_count(), &designated).unwrap();
        let mut scan = ChainTScan::new(&g, &designated, beta).unwrap();
        let endpoints = quenched_average_many(
            |assignment, slots| {
                scan.load(assignment)?;
                slots[0] = scan.log_z(t - step);
                slots[1] = scan.log_z(t + step);
                Ok(())
            },
            g.bond_count(),
            2,
            &method,
        )
        .unwrap();
        let slope = (endpoints[1].mean - endpoints[0].mean) / (2.0 * step);
        let rel = (point.estimate.mean - slope).abs() / slope.abs();
        assert!(rel < 1e-6, "slope {slope} vs integrand {}", point.estimate.mean);
    }

    #[test]
    fn normalized_curve_integrates_to_one_at_beta_zero() {
        let g = ring(4);
        let methods = Methods::gauss_hermite(3);
        let request = CurveRequest {
            geometry: &g,
            designated: Designated::Cut,
            beta: 0.0,
            methods: &methods,
        };
        let result = integrate_t(&request, 16).unwrap();
        assert_eq!(result.value.mean, 0.0);
        let mut acc = Accumulator::default();
        for (v, w) in result.curve.values.iter().zip(&result.curve.weights) {
            acc.add(v * w);
        }
        assert!((acc.value() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn integral_route_matches_endpoints_on_small_rings() {
        // ∫₀¹ integrand dt equals the endpoint pressure difference; the
        // designated-bond boost drives the route gap below 1e-8 while the
        // interior coordinates stay coarse.
        for (n, base) in [(3usize, 16usize), (4, 20), (5, 16), (6, 10), (7, 7), (8, 5)] {
            let g = ring(n);
            let designated = designated_set(&g, Designated::Cut).unwrap();
            let mut methods = Methods::gauss_hermite(base);
            methods.gh_boost = 64;
            let eval = evaluate_path(
                &g,
                &designated,
                1.0,
                &methods,
                &gauss_legendre_01(16).unwrap().0,
                &gauss_legendre_01(16).unwrap().1,
                true,
            )
            .unwrap();
            let gap = eval.route_gap.unwrap().mean;
            assert!(gap.abs() < 1e-8, "N={n}: route gap {gap}");
            let direct = eval.direct.unwrap().mean;
            assert!(direct >= 0.0, "N={n}: endpoint difference {direct}");
        }
    }

    #[test]
    fn corridor_route_gap_small_on_magnified_ring() {
        let g = magnified_ring(3, 2);
        let designated = designated_set(&g, Designated::Corridor).unwrap();
        let mut methods = Methods::gauss_hermite(6);
        methods.gh_boost = 64;
        let (nodes, weights) = gauss_legendre_01(16).unwrap();
        let eval = evaluate_path(&g, &designated, 1.0, &methods, &nodes, &weights, true).unwrap();
        let gap = eval.route_gap.unwrap().mean;
        assert!(gap.abs() < 1e-8, "route gap {gap}");
    }

    #[test]
    fn doubling_gl_order_is_converged() {
        let g = ring(3);
        let mut methods = Methods::gauss_hermite(16);
        methods.gh_boost = 64;
        let request = CurveRequest {
            geometry: &g,
            designated: Designated::Cut,
            beta: 1.0,
            methods: &methods,
        };
        let coarse = integrate_t(&request, 16).unwrap();
        let fine = integrate_t(&request, 32).unwrap();
        assert!((coarse.value.mean - fine.value.mean).abs() < 1e-8);
        assert_eq!(coarse.curve.t_nodes.len(), 16);
        assert_eq!(fine.curve.t_nodes.len(), 32);
    }

    #[test]
    fn curve_values_stay_in_range_and_integrand_nonnegative() {
        let g = ring(5);
        let methods = Methods::gauss_hermite(6);
        for &beta in &[0.3, 1.0, 2.5] {
            let request = CurveRequest {
                geometry: &g,
                designated: Designated::Cut,
                beta,
                methods: &methods,
            };
            let result = integrate_t(&request, 12).unwrap();
            assert!(result.value.mean >= 0.0);
            for &v in &result.curve.values {
                assert!((0.0..=1.0).contains(&v), "curve value {v}");
            }
        }
    }

    #[test]
    fn chain_and_enumeration_engines_agree() {
        let g = ring(5);
        let designated = designated_set(&g, Designated::Cut).unwrap();
        let mut chain_methods = Methods::gauss_hermite(5);
        chain_methods.gh_boost = 12;
        let mut enum_methods = chain_methods.clone();
        enum_methods.engine = EngineChoice::Enumerate;
        let (nodes, weights) = gauss_legendre_01(6).unwrap();
        let by_chain =
            evaluate_path(&g, &designated, 0.8, &chain_methods, &nodes, &weights, true).unwrap();
        let by_enum =
            evaluate_path(&g, &designated, 0.8, &enum_methods, &nodes, &weights, true).unwrap();
        assert!(
            (by_chain.direct.unwrap().mean - by_enum.direct.unwrap().mean).abs() < 1e-11
        );
        assert!(
            (by_chain.integral.unwrap().mean - by_enum.integral.unwrap().mean).abs() < 1e-11
        );
    }

    #[test]
    fn sampled_disorder_tracks_quadrature() {
        // same functional, sampled instead of gridded: agreement within 4σ
        let g = ring(4);
        let designated = designated_set(&g, Designated::Cut).unwrap();
        let mut exact = Methods::gauss_hermite(20);
        exact.gh_boost = 40;
        let sampled = Methods::mc(600, 99);
        let (nodes, weights) = gauss_legendre_01(8).unwrap();
        let grid = evaluate_path(&g, &designated, 1.0, &exact, &nodes, &weights, true).unwrap();
        let mc = evaluate_path(&g, &designated, 1.0, &sampled, &nodes, &weights, true).unwrap();
        let grid_direct = grid.direct.unwrap().mean;
        let mc_direct = mc.direct.unwrap();
        assert!(
            (mc_direct.mean - grid_direct).abs() < 4.0 * mc_direct.std_error,
            "{} vs {} ± {}",
            mc_direct.mean,
            grid_direct,
            mc_direct.std_error
        );
        let grid_integral = grid.integral.unwrap().mean;
        let mc_integral = mc.integral.unwrap();
        assert!(
            (mc_integral.mean - grid_integral).abs() < 4.0 * mc_integral.std_error
        );
    }

    #[test]
    fn mc_engine_runs_and_brackets_exact_value() {
        let g = ring(3);
        let designated = designated_set(&g, Designated::Cut).unwrap();
        let mut exact = Methods::gauss_hermite(24);
        exact.gh_boost = 48;
        let (nodes, weights) = gauss_legendre_01(4).unwrap();
        let grid = evaluate_path(&g, &designated, 0.6, &exact, &nodes, &weights, true).unwrap();

        let mut mc_methods = Methods::mc(40, 7);
        mc_methods.engine = EngineChoice::Mc;
        mc_methods.gl_order = 6;
        mc_methods.mc.sweeps = 1500;
        mc_methods.mc.burn_in = 400;
        mc_methods.mc.rungs = 6;
        let eval = evaluate_path(&g, &designated, 0.6, &mc_methods, &nodes, &weights, true).unwrap();
        let direct = eval.direct.unwrap();
        assert!(direct.std_error > 0.0);
        assert!(
            (direct.mean - grid.direct.unwrap().mean).abs() < 5.0 * direct.std_error,
            "MC endpoint difference {} ± {}",
            direct.mean,
            direct.std_error
        );
        let integral = eval.integral.unwrap();
        assert!(
            (integral.mean - grid.integral.unwrap().mean).abs() < 5.0 * integral.std_error
        );
        for v in &eval.curve.unwrap().values {
            assert!((-0.2..=1.2).contains(v));
        }
    }

    #[test]
    fn engine_and_method_mismatches_are_rejected() {
        let g = ring(3);
        let mut methods = Methods::gauss_hermite(4);
        methods.engine = EngineChoice::Mc;
        assert!(matches!(
            integrand(&g, Designated::Cut, 0.5, 1.0, &methods).unwrap_err(),
            Error::Unsupported(_)
        ));

        let spec = LatticeSpec::new(vec![3, 3]).unwrap();
        let torus = build_geometry(&spec, GeometryKind::Torus).unwrap();
        let mut forced_chain = Methods::gauss_hermite(3);
        forced_chain.engine = EngineChoice::Chain;
        assert!(matches!(
            integrand(&torus, Designated::Cut, 0.5, 1.0, &forced_chain).unwrap_err(),
            Error::NotOneDimensional
        ));

        let mut tiny_cap = Methods::gauss_hermite(3);
        tiny_cap.engine = EngineChoice::Enumerate;
        tiny_cap.enum_cap = 4;
        assert!(matches!(
            integrand(&torus, Designated::Cut, 0.5, 1.0, &tiny_cap).unwrap_err(),
            Error::EnumerationCapExceeded { sites: 9, cap: 4 }
        ));

        assert!(matches!(
            integrate_t(
                &CurveRequest {
                    geometry: &g,
                    designated: Designated::Cut,
                    beta: 1.0,
                    methods: &Methods::gauss_hermite(3),
                },
                1
            )
            .unwrap_err(),
            Error::InvalidQuadrature(_)
        ));
    }

    #[test]
    fn direct_equals_closed_form_difference() {
        // endpoint route against chain closed forms evaluated per schedule
        let g = ring(5);
        let designated = designated_set(&g, Designated::Cut).unwrap();
        let methods = Methods::mc(25, 3);
        let (nodes, weights) = gauss_legendre_01(4).unwrap();
        let eval = evaluate_path(&g, &designated, 1.2, &methods, &nodes, &weights, true).unwrap();
        // recompute with the same sampled realizations
        let hi = Schedule::with_designated(5, designated.clone(), 1.0, 1.2).unwrap();
        let lo = Schedule::with_designated(5, designated.clone(), 0.0, 1.2).unwrap();
        let mut acc = Accumulator::default();
        for r in 0..25 {
            let couplings = sample_couplings(5, 3, r);
            acc.add(
                chain_closed_form(&couplings, &hi, true).unwrap()
                    - chain_closed_form(&couplings, &lo, true).unwrap(),
            );
        }
        let reference = acc.value() / 25.0;
        assert!((eval.direct.unwrap().mean - reference).abs() < 1e-12);
    }
}
