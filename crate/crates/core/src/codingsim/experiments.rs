//! Monte Carlo packing and resolvability experiments.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::codebook::{generate_codebook, warden_state, Codebook, SimParams};
use super::decoder::{build_srm_decoder_in, exact_error};
use super::typical::{Conditioning, TypicalContext};
use crate::channel::{marginals, CqTable};
use crate::error::Result;
use crate::infomeasures::{
    cq_sandwiched_renyi, quantum_rel_entropy, tensor_power_group_count, Divergence,
    InputDistribution, DEFAULT_GROUP_TOL,
};
use crate::qlinalg::{eigenvalues, trace_distance, DensityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    Packing,
    Resolvability,
    Both,
}

impl SimMode {
    fn packing(self) -> bool {
        matches!(self, SimMode::Packing | SimMode::Both)
    }

    fn resolvability(self) -> bool {
        matches!(self, SimMode::Resolvability | SimMode::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovertnessReport {
    /// `‖ρ_{E^n} − ρ_0^{⊗n}‖₁`
    pub trace_distance: f64,
    /// `D(ρ_{E^n} ‖ ρ_E^{⊗n})`
    pub rel_entropy: Divergence,
}

pub fn covertness_report(cb: &Codebook, table: &CqTable, dist: &InputDistribution) -> Result<CovertnessReport> {
    let m = marginals(table, dist)?;
    let w = warden_state(cb, table)?;
    covertness_against(&w, &m.rho_e.tensor_power(cb.n), &table.rho0().tensor_power(cb.n))
}

fn covertness_against(w: &DensityMatrix, rho_e_n: &DensityMatrix, rho0_n: &DensityMatrix) -> Result<CovertnessReport> {
    Ok(CovertnessReport { trace_distance: trace_distance(w, rho0_n)?, rel_entropy: quantum_rel_entropy(w, rho_e_n)? })
}

/// Analytic packing bound on the average error. `ε_n = 2(α + 3√α)` and `ε′_n = δ` are
/// stand-ins for the vanishing terms; `γ_n` is taken as zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PackingBound {
    pub value: f64,
    pub epsilon_n: f64,
    pub epsilon_prime_n: f64,
    pub gamma_n: f64,
    /// `H(B)`
    pub beta: f64,
    /// `H(B|X1X2X3)`
    pub beta0: f64,
    /// `H(B|X1)`
    pub beta1: f64,
    /// `H(B|X2)`
    pub beta2: f64,
    pub r1: f64,
    pub r2: f64,
}

pub fn packing_bound(entropies: [f64; 4], n: usize, r1: f64, r2: f64, alpha: f64, delta: f64) -> PackingBound {
    let [beta0, beta1, beta2, beta] = entropies;
    let eps = 2.0 * (alpha + 3.0 * alpha.sqrt());
    let nf = n as f64;
    let t = |e: f64| 2f64.powf(-nf * (e - delta));
    let value = eps + 4.0 * (t(beta2 - beta0 - r1) + t(beta1 - beta0 - r2) + t(beta - beta0 - r1 - r2));
    PackingBound { value, epsilon_n: eps, epsilon_prime_n: delta, gamma_n: 0.0, beta, beta0, beta1, beta2, r1, r2 }
}

/// Analytic resolvability bound on `D(ρ_{E^n} ‖ ρ_E^{⊗n})`, reported in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvabilityBound {
    pub value: f64,
    /// Eigenvalue groups of `ρ_E^{⊗n}`.
    pub v_e: usize,
    /// `(n+1)^{d_E}`
    pub v_e_cap: f64,
    /// `D_{1+α}(ρ_{X1X2X3E} ‖ ρ_{X1X2X3} ⊗ ρ_E)`
    pub d123: Divergence,
    /// `D_{1+α}(ρ_{X1E} ‖ ρ_{X1} ⊗ ρ_E)`
    pub d1: Divergence,
    /// `D_{1+α}(ρ_{X2E} ‖ ρ_{X2} ⊗ ρ_E)`
    pub d2: Divergence,
    pub alpha: f64,
    pub r1: f64,
    pub r2: f64,
}

pub fn resolvability_bound(
    table: &CqTable,
    dist: &InputDistribution,
    n: usize,
    r1: f64,
    r2: f64,
    alpha: f64,
) -> Result<ResolvabilityBound> {
    let m = marginals(table, dist)?;
    let joint: Vec<(f64, &DensityMatrix)> =
        (0..table.len()).map(|i| (dist.joint(table.symbol(i)), table.e_state(table.symbol(i)))).collect();
    let d123 = cq_sandwiched_renyi(&joint, &m.rho_e, alpha)?;
    let by_symbol = |probs: &[f64], states: &[Option<DensityMatrix>]| -> Vec<(f64, DensityMatrix)> {
        probs
            .iter()
            .zip(states)
            .filter_map(|(&p, s)| s.as_ref().map(|s| (p, s.clone())))
            .collect()
    };
    let e1 = by_symbol(&dist.p1, &m.e_given[0]);
    let e2 = by_symbol(&dist.p2, &m.e_given[1]);
    fn refs(v: &[(f64, DensityMatrix)]) -> Vec<(f64, &DensityMatrix)> {
        v.iter().map(|(p, s)| (*p, s)).collect()
    }
    let d1 = cq_sandwiched_renyi(&refs(&e1), &m.rho_e, alpha)?;
    let d2 = cq_sandwiched_renyi(&refs(&e2), &m.rho_e, alpha)?;
    let spectrum = eigenvalues(m.rho_e.matrix())?;
    let v_e = tensor_power_group_count(&spectrum, n, DEFAULT_GROUP_TOL);
    let nf = n as f64;
    let term = |r: f64, d: Divergence| 2f64.powf(alpha * nf * (-r + d.value()));
    let nats = (v_e as f64).powf(alpha) / alpha * (term(r1 + r2, d123) + term(r2, d2) + term(r1, d1));
    Ok(ResolvabilityBound {
        value: nats / std::f64::consts::LN_2,
        v_e,
        v_e_cap: (nf + 1.0).powi(table.d_e() as i32),
        d123,
        d1,
        d2,
        alpha,
        r1,
        r2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodebookOutcome {
    pub index: usize,
    pub error: Option<f64>,
    pub trace_distance: Option<f64>,
    pub rel_entropy: Option<Divergence>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub n: usize,
    pub m1: usize,
    pub m2: usize,
    /// `log₂ M1 / n`, the rate the realised message set supports.
    pub r1_eff: f64,
    pub r2_eff: f64,
    pub mode: SimMode,
    pub params: SimParams,
    pub outcomes: Vec<CodebookOutcome>,
    pub mean_error: Option<f64>,
    pub stderr_error: Option<f64>,
    /// Smallest error among the sampled codebooks.
    pub best_error: Option<f64>,
    pub mean_trace_distance: Option<f64>,
    pub stderr_trace_distance: Option<f64>,
    /// `None` when some sample diverged; see `infinite_rel_entropy`.
    pub mean_rel_entropy: Option<f64>,
    pub stderr_rel_entropy: Option<f64>,
    pub infinite_rel_entropy: usize,
    pub nesting_rank_loss: Option<f64>,
    pub bound_packing: Option<PackingBound>,
    pub bound_resolvability: Option<ResolvabilityBound>,
}

fn mean_stderr(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (Some(mean), Some(0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some((var / n).sqrt()))
}

pub fn simulate(table: &CqTable, dist: &InputDistribution, params: &SimParams, mode: SimMode) -> Result<SimReport> {
    params.validate()?;
    params.check_dims(table)?;
    let (m1, m2) = params.message_counts()?;
    let n = params.n;
    let r1_eff = (m1 as f64).log2() / n as f64;
    let r2_eff = (m2 as f64).log2() / n as f64;

    let ctx = if mode.packing() { Some(TypicalContext::new(table, dist, n, params.delta)?) } else { None };
    let refs = if mode.resolvability() {
        let m = marginals(table, dist)?;
        Some((m.rho_e.tensor_power(n), table.rho0().tensor_power(n)))
    } else {
        None
    };

    let per: Vec<(CodebookOutcome, Option<f64>)> = (0..params.num_codebooks)
        .into_par_iter()
        .map(|k| -> Result<(CodebookOutcome, Option<f64>)> {
            let cb = generate_codebook(dist, params, k as u64)?;
            let mut out = CodebookOutcome { index: k, error: None, trace_distance: None, rel_entropy: None };
            let mut loss = None;
            if let Some(ctx) = &ctx {
                let dec = build_srm_decoder_in(&cb, table, ctx)?;
                out.error = Some(exact_error(&cb, &dec, table)?);
                loss = Some(dec.nesting_rank_loss);
            }
            if let Some((rho_e_n, rho0_n)) = &refs {
                let w = warden_state(&cb, table)?;
                let c = covertness_against(&w, rho_e_n, rho0_n)?;
                out.trace_distance = Some(c.trace_distance);
                out.rel_entropy = Some(c.rel_entropy);
            }
            Ok((out, loss))
        })
        .collect::<Result<Vec<_>>>()?;

    let outcomes: Vec<CodebookOutcome> = per.iter().map(|p| p.0.clone()).collect();
    let errors: Vec<f64> = outcomes.iter().filter_map(|o| o.error).collect();
    let tds: Vec<f64> = outcomes.iter().filter_map(|o| o.trace_distance).collect();
    let rels: Vec<Divergence> = outcomes.iter().filter_map(|o| o.rel_entropy).collect();
    let infinite = rels.iter().filter(|d| d.is_infinite()).count();
    let finite: Vec<f64> = rels.iter().filter_map(|d| d.finite()).collect();
    let (mean_error, stderr_error) = mean_stderr(&errors);
    let (mean_td, stderr_td) = mean_stderr(&tds);
    let (mean_rel, stderr_rel) = if infinite > 0 { (None, None) } else { mean_stderr(&finite) };
    let losses: Vec<f64> = per.iter().filter_map(|p| p.1).collect();

    let bound_packing = ctx.as_ref().map(|c| {
        let e = [
            c.entropy(Conditioning::Full),
            c.entropy(Conditioning::X1),
            c.entropy(Conditioning::X2),
            c.entropy(Conditioning::None),
        ];
        packing_bound(e, n, r1_eff, r2_eff, params.alpha, params.delta)
    });
    let bound_resolvability = if mode.resolvability() {
        Some(resolvability_bound(table, dist, n, r1_eff, r2_eff, params.alpha)?)
    } else {
        None
    };

    Ok(SimReport {
        n,
        m1,
        m2,
        r1_eff,
        r2_eff,
        mode,
        params: params.clone(),
        best_error: errors.iter().cloned().reduce(f64::min),
        outcomes,
        mean_error,
        stderr_error,
        mean_trace_distance: mean_td,
        stderr_trace_distance: stderr_td,
        mean_rel_entropy: mean_rel,
        stderr_rel_entropy: stderr_rel,
        infinite_rel_entropy: infinite,
        nesting_rank_loss: mean_stderr(&losses).0,
        bound_packing,
        bound_resolvability,
    })
}

pub fn packing_experiment(table: &CqTable, dist: &InputDistribution, params: &SimParams) -> Result<SimReport> {
    simulate(table, dist, params, SimMode::Packing)
}

pub fn resolvability_experiment(table: &CqTable, dist: &InputDistribution, params: &SimParams) -> Result<SimReport> {
    simulate(table, dist, params, SimMode::Resolvability)
}
