//! Surface-pressure assembly: quenched pressures under the three boundary
//! conditions, the finite-k surface pressure by both routes, τ under both
//! normalization conventions, and the β-scan.
//!
//! Raw quantities and their normalizations are kept separate. The raw
//! corridor difference T = k^{−d}·[k^d·P^Φ_Λ − P^Π_{kΛ}] and the cut
//! difference Δ = P^Π_Λ − P^Φ_Λ are reported as estimated, and τ is then
//! T divided by a surface measure. Two conventions for |∂Λ| coexist in the
//! source bounds (2·Σ|Λ|/L_i counts faces, Σ|Λ|/L_i counts cross-sections,
//! i.e. cut bonds), so reports always carry both divisions rather than
//! choosing silently.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::disorder::{quenched_average, CouplingAssignment, QuenchedEstimate};
use crate::engine::{chain_closed_form, log_partition_with_cap, Schedule};
use crate::interp::{
    designated_set, disorder_method, evaluate_path, integrate_t, CurveRequest, Designated,
    EngineChoice, IntegrandCurve, Methods, PathEvaluation,
};
use crate::lattice::{
    bond_census, build_geometry, cut_set, BondCensus, GeometryKind, LatticeGeometry, LatticeSpec,
};
use crate::quad::gauss_legendre_01;
use crate::{Error, Result};

/// Boundary condition of a quenched pressure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    Free,
    Periodic,
    /// Periodic geometry with the coupling sign flipped on every cut bond.
    Antiperiodic,
}

/// A plain value with an error bar, for derived (normalized) quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValErr {
    pub value: f64,
    pub std_error: f64,
}

/// τ for both boundary conditions under one |∂Λ| convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauPair {
    pub phi: ValErr,
    pub pi: ValErr,
}

/// One bound check: `name` states the inequality, `passed` allows
/// 3·std_error + 1e-12 of slack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundFlag {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub std_error: f64,
    pub passed: bool,
}

/// An integrand curve tagged with the path it samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledCurve {
    pub label: String,
    pub curve: IntegrandCurve,
}

/// Reference bulk pressure: torus pressure per site at the largest
/// affordable magnification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerSiteRef {
    pub k: usize,
    pub sites: usize,
    pub per_site: QuenchedEstimate,
}

/// Everything the surface-pressure study produces for one (Λ, k, β).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfacePressureReport {
    pub sides: Vec<usize>,
    pub k: usize,
    pub beta: f64,
    /// Census of the Λ torus (cut path).
    pub lambda_census: BondCensus,
    /// Census of the k-magnified torus (corridor path).
    pub magnified_census: BondCensus,
    /// Absolute quenched pressures of Λ; absent when no exact engine can
    /// afford them (see `warnings`).
    pub p_phi: Option<QuenchedEstimate>,
    pub p_pi: Option<QuenchedEstimate>,
    pub p_pi_star: Option<QuenchedEstimate>,
    pub p_per_site_ref: Option<PerSiteRef>,
    /// Raw T = k^{−d}[k^d·P^Φ_Λ − P^Π_{kΛ}] by the endpoint route.
    pub t_phi_direct: QuenchedEstimate,
    /// The same T by the integral route.
    pub t_phi_integral: QuenchedEstimate,
    /// Paired per-realization (direct − integral) on the corridor path,
    /// already scaled by −k^{−d}.
    pub t_phi_route_gap: QuenchedEstimate,
    /// Raw Δ = P^Π_Λ − P^Φ_Λ by the endpoint route.
    pub delta_pi_phi_direct: QuenchedEstimate,
    pub delta_pi_phi_integral: QuenchedEstimate,
    pub delta_route_gap: QuenchedEstimate,
    /// τ = T/|∂Λ| with |∂Λ| = 2·Σ|Λ|/L_i (faces). Derived from the direct
    /// raw sums; the π entry uses T^Π = T^Φ + Δ.
    pub tau_by_faces: TauPair,
    /// τ with |∂Λ| = Σ|Λ|/L_i (cut bonds).
    pub tau_by_cut: TauPair,
    pub bounds_flags: Vec<BoundFlag>,
    pub curves: Vec<LabeledCurve>,
    pub warnings: Vec<String>,
}

/// β-scan row: τ/β² for both boundary conditions and both conventions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub beta: f64,
    pub phi_by_faces: ValErr,
    pub phi_by_cut: ValErr,
    pub pi_by_faces: ValErr,
    pub pi_by_cut: ValErr,
}

/// Least-squares β → 0 intercepts of the τ/β² columns, fitted linearly
/// in β².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanExtrapolation {
    pub phi_by_faces: f64,
    pub phi_by_cut: f64,
    pub pi_by_faces: f64,
    pub pi_by_cut: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTable {
    pub sides: Vec<usize>,
    pub k: usize,
    pub rows: Vec<ScanRow>,
    /// Present once the scan has at least two β values.
    pub extrapolation: Option<ScanExtrapolation>,
}

/// k^d for the magnification bookkeeping (no_std: f64::powi is std-only).
fn volume_factor(k: usize, dim: usize) -> f64 {
    let mut out = 1.0f64;
    for _ in 0..dim {
        out *= k as f64;
    }
    out
}

fn scaled(est: &QuenchedEstimate, factor: f64) -> QuenchedEstimate {
    QuenchedEstimate {
        mean: est.mean * factor,
        std_error: est.std_error * libm::fabs(factor),
        method: est.method.clone(),
        count: est.count,
    }
}

fn as_val_err(est: &QuenchedEstimate, divisor: f64) -> ValErr {
    ValErr {
        value: est.mean / divisor,
        std_error: est.std_error / libm::fabs(divisor),
    }
}

/// Av ln Z of Λ under the requested boundary condition.
///
/// Absolute pressures need an exact spin engine: 1D specs use the chain
/// closed form at any size, everything else enumerates within the cap, and
/// past the cap the call fails loudly instead of degrading to sampled
/// chains (those only estimate differences).
pub fn quenched_pressure(
    spec: &LatticeSpec,
    bc: BoundaryCondition,
    beta: f64,
    methods: &Methods,
) -> Result<QuenchedEstimate> {
    let kind = match bc {
        BoundaryCondition::Free => GeometryKind::FreeBlock,
        _ => GeometryKind::Torus,
    };
    let geometry = build_geometry(spec, kind)?;
    if matches!(methods.engine, EngineChoice::Mc) {
        return Err(Error::Unsupported(
            "sampled spin chains estimate only pressure differences; absolute pressures need an exact engine",
        ));
    }
    let chain_capable = geometry.dim() == 1;
    if matches!(methods.engine, EngineChoice::Chain) && !chain_capable {
        return Err(Error::NotOneDimensional);
    }
    let use_chain = chain_capable && !matches!(methods.engine, EngineChoice::Enumerate);
    if !use_chain && geometry.site_count() > methods.enum_cap {
        return Err(match methods.engine {
            EngineChoice::Enumerate => Error::EnumerationCapExceeded {
                sites: geometry.site_count(),
                cap: methods.enum_cap,
            },
            _ => Error::Unsupported(
                "absolute pressure beyond the enumeration cap; raise the cap or work with pressure differences",
            ),
        });
    }
    let flip = match bc {
        BoundaryCondition::Antiperiodic => cut_set(&geometry)?,
        _ => Vec::new(),
    };
    let schedule = Schedule::uniform(geometry.bond_count(), beta)?;
    let periodic = geometry.kind.is_torus();
    let method = disorder_method(methods, geometry.bond_count(), &[])?;
    let enum_cap = methods.enum_cap;
    let compute = |couplings: &CouplingAssignment| -> Result<f64> {
        if use_chain {
            chain_closed_form(couplings, &schedule, periodic)
        } else {
            Ok(log_partition_with_cap(&geometry, couplings, &schedule, enum_cap)?.log_z)
        }
    };
    quenched_average(
        |assignment| {
            if flip.is_empty() {
                compute(assignment)
            } else {
                let mut local = assignment.clone();
                local.flip_signs(&flip);
                compute(&local)
            }
        },
        geometry.bond_count(),
        &method,
    )
}

fn corridor_path(
    spec: &LatticeSpec,
    k: usize,
    beta: f64,
    methods: &Methods,
    t_nodes: &[f64],
    t_weights: &[f64],
) -> Result<(LatticeGeometry, PathEvaluation)> {
    let magnified = build_geometry(spec, GeometryKind::MagnifiedTorus { k })?;
    let corridor = designated_set(&magnified, Designated::Corridor)?;
    let eval = evaluate_path(&magnified, &corridor, beta, methods, t_nodes, t_weights, true)?;
    Ok((magnified, eval))
}

/// Endpoint route: T = k^{−d}·[k^d·P^Φ_Λ − P^Π_{kΛ}], evaluated as the
/// quenched average of k^{−d}·[ln Z(t=0) − ln Z(t=1)] on the magnified
/// torus, which shares every bond (and realization) between the two terms.
pub fn t_phi_direct(
    spec: &LatticeSpec,
    k: usize,
    beta: f64,
    methods: &Methods,
) -> Result<QuenchedEstimate> {
    let (magnified, eval) = corridor_path(spec, k, beta, methods, &[], &[])?;
    let scale = volume_factor(k, magnified.dim());
    Ok(scaled(
        &eval.direct.expect("endpoint route requested"),
        -1.0 / scale,
    ))
}

/// Integral route: T = −k^{−d}·(β²/2)·Σ_{b∈C}∫₀¹(1−⟨q_b⟩_t)dt, with the
/// normalized curve attached.
#[derive(Debug, Clone, PartialEq)]
pub struct TPhiIntegral {
    pub estimate: QuenchedEstimate,
    pub curve: IntegrandCurve,
    pub warnings: Vec<String>,
}

pub fn t_phi_integral(
    spec: &LatticeSpec,
    k: usize,
    beta: f64,
    methods: &Methods,
    gl_order: usize,
) -> Result<TPhiIntegral> {
    let magnified = build_geometry(spec, GeometryKind::MagnifiedTorus { k })?;
    let result = integrate_t(
        &CurveRequest {
            geometry: &magnified,
            designated: Designated::Corridor,
            beta,
            methods,
        },
        gl_order,
    )?;
    let scale = volume_factor(k, magnified.dim());
    Ok(TPhiIntegral {
        estimate: scaled(&result.value, -1.0 / scale),
        curve: result.curve,
        warnings: result.warnings,
    })
}

/// Δ = P^Π − P^Φ by both routes on the Λ torus.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaPiPhi {
    /// Av[ln Z^Π − ln Z^Φ] (cut schedule endpoints).
    pub direct: QuenchedEstimate,
    /// (β²/2)·Σ_{b∈cut}∫₀¹(1−⟨q_b⟩_t)dt.
    pub integral: QuenchedEstimate,
    /// Paired per-realization (direct − integral).
    pub route_gap: QuenchedEstimate,
    pub curve: IntegrandCurve,
    pub warnings: Vec<String>,
}

pub fn delta_pi_phi(
    spec: &LatticeSpec,
    beta: f64,
    methods: &Methods,
    gl_order: usize,
) -> Result<DeltaPiPhi> {
    if gl_order < 2 {
        return Err(Error::InvalidQuadrature("t-integration needs at least 2 Gauss-Legendre nodes"));
    }
    let torus = build_geometry(spec, GeometryKind::Torus)?;
    let cut = designated_set(&torus, Designated::Cut)?;
    let (t_nodes, t_weights) = gauss_legendre_01(gl_order)?;
    let eval = evaluate_path(&torus, &cut, beta, methods, &t_nodes, &t_weights, true)?;
    Ok(DeltaPiPhi {
        direct: eval.direct.expect("endpoint route requested"),
        integral: eval.integral.expect("nodes supplied"),
        route_gap: eval.route_gap.expect("both routes requested"),
        curve: eval.curve.expect("nodes supplied"),
        warnings: eval.warnings,
    })
}

/// Torus pressure per site at the largest magnification the configured
/// backends can afford, scanning k = 8 down to 1.
fn per_site_reference(spec: &LatticeSpec, beta: f64, methods: &Methods) -> Option<PerSiteRef> {
    for k in (1..=8usize).rev() {
        let sides: Vec<usize> = spec.sides().iter().map(|&side| side * k).collect();
        let Ok(scaled_spec) = LatticeSpec::new(sides) else {
            continue;
        };
        let sites = scaled_spec.site_count();
        match quenched_pressure(&scaled_spec, BoundaryCondition::Periodic, beta, methods) {
            Ok(estimate) => {
                return Some(PerSiteRef {
                    k,
                    sites,
                    per_site: scaled(&estimate, 1.0 / sites as f64),
                });
            }
            Err(_) => continue,
        }
    }
    None
}

fn bound_flag(name: &str, value: ValErr, bound: f64, value_must_exceed: bool) -> BoundFlag {
    let slack = 3.0 * value.std_error + 1e-12;
    let passed = if value_must_exceed {
        value.value >= bound - slack
    } else {
        value.value <= bound + slack
    };
    BoundFlag {
        name: String::from(name),
        value: value.value,
        bound,
        std_error: value.std_error,
        passed,
    }
}

/// The full surface-pressure study for one (Λ, k, β).
pub fn tau_report(
    spec: &LatticeSpec,
    k: usize,
    beta: f64,
    methods: &Methods,
) -> Result<SurfacePressureReport> {
    let torus = build_geometry(spec, GeometryKind::Torus)?;
    let (t_nodes, t_weights) = gauss_legendre_01(methods.gl_order.max(2))?;

    let (magnified, corridor_eval) =
        corridor_path(spec, k, beta, methods, &t_nodes, &t_weights)?;
    let cut = designated_set(&torus, Designated::Cut)?;
    let cut_eval = evaluate_path(&torus, &cut, beta, methods, &t_nodes, &t_weights, true)?;

    let inverse_volume = 1.0 / volume_factor(k, spec.dim());
    let t_phi_direct = scaled(corridor_eval.direct.as_ref().expect("endpoint route"), -inverse_volume);
    let t_phi_integral = scaled(corridor_eval.integral.as_ref().expect("nodes supplied"), -inverse_volume);
    let t_phi_route_gap = scaled(corridor_eval.route_gap.as_ref().expect("both routes"), -inverse_volume);
    let delta_direct = cut_eval.direct.clone().expect("endpoint route");
    let delta_integral = cut_eval.integral.clone().expect("nodes supplied");
    let delta_route_gap = cut_eval.route_gap.clone().expect("both routes");

    let mut warnings: Vec<String> = Vec::new();
    warnings.extend(corridor_eval.warnings.iter().cloned());
    for w in &cut_eval.warnings {
        if !warnings.contains(w) {
            warnings.push(w.clone());
        }
    }

    let pressure = |bc: BoundaryCondition| -> Option<QuenchedEstimate> {
        quenched_pressure(spec, bc, beta, methods).ok()
    };
    let p_phi = pressure(BoundaryCondition::Free);
    let p_pi = pressure(BoundaryCondition::Periodic);
    let p_pi_star = pressure(BoundaryCondition::Antiperiodic);
    if p_phi.is_none() || p_pi.is_none() || p_pi_star.is_none() {
        warnings.push(String::from(
            "absolute pressures omitted: no exact engine affordable for this lattice",
        ));
    }
    let p_per_site_ref = per_site_reference(spec, beta, methods);

    // τ from the direct-route raw sums; T^Π = T^Φ + Δ realization-for-
    // realization would require a joint pass, so the two independent
    // estimates combine in quadrature.
    let faces = spec.surface_faces() as f64;
    let cross = spec.cross_sections() as f64;
    let t_pi = ValErr {
        value: t_phi_direct.mean + delta_direct.mean,
        std_error: libm::sqrt(
            t_phi_direct.std_error * t_phi_direct.std_error
                + delta_direct.std_error * delta_direct.std_error,
        ),
    };
    let tau_by_faces = TauPair {
        phi: as_val_err(&t_phi_direct, faces),
        pi: ValErr {
            value: t_pi.value / faces,
            std_error: t_pi.std_error / faces,
        },
    };
    let tau_by_cut = TauPair {
        phi: as_val_err(&t_phi_direct, cross),
        pi: ValErr {
            value: t_pi.value / cross,
            std_error: t_pi.std_error / cross,
        },
    };

    let quarter = beta * beta / 4.0;
    let half = beta * beta / 2.0;
    let delta_by_faces = as_val_err(&delta_direct, faces);
    let bounds_flags = vec![
        bound_flag("tau_phi_by_faces >= -beta^2/4", tau_by_faces.phi, -quarter, true),
        bound_flag("tau_phi_by_faces <= 0", tau_by_faces.phi, 0.0, false),
        bound_flag(
            "tau_pi - tau_phi >= 0 (shared normalization)",
            delta_by_faces,
            0.0,
            true,
        ),
        bound_flag("tau_pi_by_faces <= beta^2/4", tau_by_faces.pi, quarter, false),
        bound_flag("tau_pi_by_cut <= beta^2/2", tau_by_cut.pi, half, false),
    ];

    let mut curves = Vec::new();
    if let Some(curve) = corridor_eval.curve {
        curves.push(LabeledCurve {
            label: String::from("corridor"),
            curve,
        });
    }
    if let Some(curve) = cut_eval.curve {
        curves.push(LabeledCurve {
            label: String::from("cut"),
            curve,
        });
    }

    Ok(SurfacePressureReport {
        sides: spec.sides().to_vec(),
        k,
        beta,
        lambda_census: bond_census(&torus),
        magnified_census: bond_census(&magnified),
        p_phi,
        p_pi,
        p_pi_star,
        p_per_site_ref,
        t_phi_direct,
        t_phi_integral,
        t_phi_route_gap,
        delta_pi_phi_direct: delta_direct,
        delta_pi_phi_integral: delta_integral,
        delta_route_gap,
        tau_by_faces,
        tau_by_cut,
        bounds_flags,
        curves,
        warnings,
    })
}

/// Unweighted least-squares intercept of y against x (= β²).
fn intercept(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return sy / n;
    }
    (sy * sxx - sx * sxy) / denom
}

/// τ/β² across a β list, with both conventions and the β → 0 intercepts.
///
/// The scan reuses one disorder seed across rows, so adjacent-β
/// comparisons ride on common realizations.
pub fn beta_scan(
    spec: &LatticeSpec,
    k: usize,
    beta_list: &[f64],
    methods: &Methods,
) -> Result<ScanTable> {
    if beta_list.is_empty() {
        return Err(Error::InvalidSchedule("beta scan needs at least one beta"));
    }
    for &beta in beta_list {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidSchedule("beta scan needs positive finite betas"));
        }
    }
    let torus = build_geometry(spec, GeometryKind::Torus)?;
    let cut = designated_set(&torus, Designated::Cut)?;
    let faces = spec.surface_faces() as f64;
    let cross = spec.cross_sections() as f64;
    let inverse_volume = 1.0 / volume_factor(k, spec.dim());

    let mut rows = Vec::with_capacity(beta_list.len());
    for &beta in beta_list {
        let (_, corridor_eval) = corridor_path(spec, k, beta, methods, &[], &[])?;
        let cut_eval = evaluate_path(&torus, &cut, beta, methods, &[], &[], true)?;
        let t_phi = scaled(corridor_eval.direct.as_ref().expect("endpoint route"), -inverse_volume);
        let delta = cut_eval.direct.expect("endpoint route");
        let beta_sq = beta * beta;
        let t_pi_value = t_phi.mean + delta.mean;
        let t_pi_err = libm::sqrt(
            t_phi.std_error * t_phi.std_error + delta.std_error * delta.std_error,
        );
        rows.push(ScanRow {
            beta,
            phi_by_faces: ValErr {
                value: t_phi.mean / (faces * beta_sq),
                std_error: t_phi.std_error / (faces * beta_sq),
            },
            phi_by_cut: ValErr {
                value: t_phi.mean / (cross * beta_sq),
                std_error: t_phi.std_error / (cross * beta_sq),
            },
            pi_by_faces: ValErr {
                value: t_pi_value / (faces * beta_sq),
                std_error: t_pi_err / (faces * beta_sq),
            },
            pi_by_cut: ValErr {
                value: t_pi_value / (cross * beta_sq),
                std_error: t_pi_err / (cross * beta_sq),
            },
        });
    }

    let extrapolation = if rows.len() >= 2 {
        let xs: Vec<f64> = rows.iter().map(|r| r.beta * r.beta).collect();
        let column = |f: fn(&ScanRow) -> f64| -> f64 {
            let ys: Vec<f64> = rows.iter().map(f).collect();
            intercept(&xs, &ys)
        };
        Some(ScanExtrapolation {
            phi_by_faces: column(|r| r.phi_by_faces.value),
            phi_by_cut: column(|r| r.phi_by_cut.value),
            pi_by_faces: column(|r| r.pi_by_faces.value),
            pi_by_cut: column(|r| r.pi_by_cut.value),
        })
    } else {
        None
    };

    Ok(ScanTable {
        sides: spec.sides().to_vec(),
        k,
        rows,
        extrapolation,
    })
}
