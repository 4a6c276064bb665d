//! Covert feasibility search and the union-of-pentagons rate region.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{marginals, CqTable};
use crate::error::{Error, Result};
use crate::infomeasures::{holevo_cmi, region_bounds, InputDistribution, RegionBounds, Registers, Target};
use crate::qlinalg::trace_distance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionConfig {
    /// Trace-distance budget for `ρ_E = ρ_0`.
    pub covert_tol: f64,
    /// Required slack in each of `b_i − e_i > 0`, in bits.
    pub margin: f64,
    pub restarts: usize,
    /// Objective evaluations per start.
    pub max_iters: usize,
    pub seed: u64,
    pub covertness: bool,
    /// Weight of the margin penalty.
    pub penalty: f64,
    pub mu_grid: usize,
    /// Random perturbations evaluated around each feasible distribution.
    pub perturbations: usize,
    /// Whether `b2 − e2 ≥ margin` is required.
    pub require_margin2: bool,
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self {
            covert_tol: 1e-6,
            margin: 1e-3,
            restarts: 8,
            max_iters: 2000,
            seed: 0,
            covertness: true,
            penalty: 10.0,
            mu_grid: 101,
            perturbations: 4,
            require_margin2: true,
        }
    }
}

impl RegionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.covert_tol > 0.0) {
            return Err(Error::InvalidArgument(format!("covert_tol must be > 0, got {}", self.covert_tol)));
        }
        if !(self.margin >= 0.0) {
            return Err(Error::InvalidArgument(format!("margin must be >= 0, got {}", self.margin)));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("restarts must be >= 1".into()));
        }
        if self.mu_grid < 2 {
            return Err(Error::InvalidArgument("mu_grid must be >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionPentagon {
    pub dist: InputDistribution,
    pub bounds: RegionBounds,
    pub feasible: bool,
    /// `‖ρ_E − ρ_0‖₁`
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovertRegionResult {
    pub pentagons: Vec<RegionPentagon>,
    /// Vertices of the union, R1 ascending.
    pub frontier: Vec<(f64, f64)>,
}

pub fn covertness_residual(table: &CqTable, dist: &InputDistribution) -> Result<f64> {
    let m = marginals(table, dist)?;
    trace_distance(&m.rho_e, table.rho0())
}

fn margin_shortfall(b: &RegionBounds, cfg: &RegionConfig) -> f64 {
    let mut s = (cfg.margin - (b.b1 - b.e1)).max(0.0) + (cfg.margin - (b.b12 - b.e12)).max(0.0);
    if cfg.require_margin2 {
        s += (cfg.margin - (b.b2 - b.e2)).max(0.0);
    }
    s
}

fn margins_met(b: &RegionBounds, cfg: &RegionConfig) -> bool {
    b.b1 - b.e1 >= cfg.margin && b.b12 - b.e12 >= cfg.margin && (!cfg.require_margin2 || b.b2 - b.e2 >= cfg.margin)
}

pub fn pentagon(table: &CqTable, dist: &InputDistribution, cfg: &RegionConfig) -> Result<RegionPentagon> {
    let bounds = region_bounds(table, dist)?;
    let residual = covertness_residual(table, dist)?;
    let feasible = (!cfg.covertness || residual <= cfg.covert_tol) && margins_met(&bounds, cfg);
    Ok(RegionPentagon { dist: dist.clone(), bounds, feasible, residual })
}

/// Softmax blocks with the last logit of each block pinned to zero.
struct Param {
    sizes: [usize; 3],
}

impl Param {
    fn rows(&self) -> usize {
        self.sizes[0] * self.sizes[1]
    }

    fn len(&self) -> usize {
        let [n1, n2, n3] = self.sizes;
        (n1 - 1) + (n2 - 1) + self.rows() * (n3 - 1)
    }

    fn softmax(z: &[f64]) -> Vec<f64> {
        let mut full: Vec<f64> = z.to_vec();
        full.push(0.0);
        let m = full.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = full.iter().map(|v| (v - m).exp()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|v| v / s).collect()
    }

    fn decode(&self, theta: &[f64]) -> InputDistribution {
        let [n1, n2, n3] = self.sizes;
        let mut at = 0;
        let mut take = |k: usize| {
            let v = Self::softmax(&theta[at..at + k - 1]);
            at += k - 1;
            v
        };
        let p1 = take(n1);
        let p2 = take(n2);
        let p3 = (0..self.rows()).map(|_| take(n3)).collect();
        InputDistribution { p1, p2, p3 }
    }

    fn encode(&self, d: &InputDistribution) -> Vec<f64> {
        let logits = |p: &[f64]| {
            let last = p[p.len() - 1].max(1e-300).ln();
            p[..p.len() - 1].iter().map(|&x| x.max(1e-300).ln() - last).collect::<Vec<_>>()
        };
        let mut out = logits(&d.p1);
        out.extend(logits(&d.p2));
        for row in &d.p3 {
            out.extend(logits(row));
        }
        out
    }
}

fn objective(table: &CqTable, d: &InputDistribution, cfg: &RegionConfig) -> f64 {
    let Ok(b) = region_bounds(table, d) else { return f64::INFINITY };
    let res = if cfg.covertness { covertness_residual(table, d).unwrap_or(f64::INFINITY) } else { 0.0 };
    res + cfg.penalty * margin_shortfall(&b, cfg)
}

/// Nelder–Mead with restarts from the incumbent. Returns the best point and value.
fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], step: f64, max_evals: usize) -> (Vec<f64>, f64) {
    let n = x0.len();
    if n == 0 {
        return (vec![], f(x0));
    }
    let mut evals = 0usize;
    let eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        f(x)
    };
    let mut best = x0.to_vec();
    let mut best_f = eval(&best, &mut evals);
    let mut scale = step;
    while evals < max_evals {
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((best.clone(), best_f));
        for i in 0..n {
            let mut x = best.clone();
            x[i] += scale;
            let fx = eval(&x, &mut evals);
            simplex.push((x, fx));
        }
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let spread = simplex[n].1 - simplex[0].1;
            if spread <= 1e-15 * (1.0 + simplex[0].1.abs()) || evals >= max_evals || simplex[0].1 == 0.0 {
                break;
            }
            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for j in 0..n {
                    centroid[j] += x[j] / n as f64;
                }
            }
            let lerp = |t: f64| -> Vec<f64> {
                (0..n).map(|j| centroid[j] + t * (simplex[n].0[j] - centroid[j])).collect()
            };
            let xr = lerp(-1.0);
            let fr = eval(&xr, &mut evals);
            if fr < simplex[0].1 {
                let xe = lerp(-2.0);
                let fe = eval(&xe, &mut evals);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let (xc, fc) = if fr < simplex[n].1 {
                    let xc = lerp(-0.5);
                    let fc = eval(&xc, &mut evals);
                    (xc, fc)
                } else {
                    let xc = lerp(0.5);
                    let fc = eval(&xc, &mut evals);
                    (xc, fc)
                };
                if fc < simplex[n].1.min(fr) {
                    simplex[n] = (xc, fc);
                } else {
                    let x0 = simplex[0].0.clone();
                    for item in simplex.iter_mut().skip(1) {
                        let x: Vec<f64> = (0..n).map(|j| x0[j] + 0.5 * (item.0[j] - x0[j])).collect();
                        let fx = eval(&x, &mut evals);
                        *item = (x, fx);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let improved = simplex[0].1 < best_f - 1e-15 * (1.0 + best_f.abs());
        if simplex[0].1 <= best_f {
            best = simplex[0].0.clone();
            best_f = simplex[0].1;
        }
        if best_f == 0.0 {
            break;
        }
        if !improved {
            if scale < 1e-9 {
                break;
            }
            scale *= 0.1;
        }
    }
    (best, best_f)
}

/// Local search from several seeded starts; returns the distinct feasible optima.
pub fn find_feasible(table: &CqTable, cfg: &RegionConfig) -> Result<Vec<InputDistribution>> {
    cfg.validate()?;
    let param = Param { sizes: table.alphabet_sizes() };
    let dim = param.len();
    let starts: Vec<Vec<f64>> = (0..cfg.restarts)
        .map(|k| {
            if k == 0 {
                vec![0.0; dim]
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (k as u64));
                (0..dim).map(|_| 2.0 * { let z: f64 = StandardNormal.sample(&mut rng); z }).collect::<Vec<f64>>()
            }
        })
        .collect();
    let results: Vec<(InputDistribution, f64)> = starts
        .par_iter()
        .map(|x0| {
            let (x, _) = nelder_mead(|th| objective(table, &param.decode(th), cfg), x0, 0.5, cfg.max_iters);
            let d = param.decode(&x);
            let res = covertness_residual(table, &d).unwrap_or(f64::INFINITY);
            (d, res)
        })
        .collect();
    let mut accepted: Vec<(InputDistribution, f64)> = Vec::new();
    for (d, res) in results {
        let p = pentagon(table, &d, cfg)?;
        if !p.feasible {
            continue;
        }
        let dup = accepted.iter().any(|(a, _)| a.total_variation(&d).map_or(false, |tv| tv <= 1e-4));
        if !dup {
            accepted.push((d, res));
        }
    }
    accepted.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| cmp_dist(&a.0, &b.0)));
    Ok(accepted.into_iter().map(|(d, _)| d).collect())
}

fn cmp_dist(a: &InputDistribution, b: &InputDistribution) -> std::cmp::Ordering {
    let (x, y) = (a.joint_flat(), b.joint_flat());
    for (u, v) in x.iter().zip(&y) {
        let o = u.total_cmp(v);
        if o != std::cmp::Ordering::Equal {
            return o;
        }
    }
    std::cmp::Ordering::Equal
}

/// Non-origin vertices of `{R1 ≤ b1, R2 ≤ b2, R1 + R2 ≤ b12, R ≥ 0}`, R1 ascending.
pub fn pentagon_vertices(b1: f64, b2: f64, b12: f64) -> Vec<(f64, f64)> {
    let b12 = b12.max(0.0);
    let b1 = b1.max(0.0).min(b12);
    let b2 = b2.max(0.0).min(b12);
    let raw = if b12 >= b1 + b2 {
        vec![(0.0, b2), (b1, b2), (b1, 0.0)]
    } else {
        vec![(0.0, b2), (b12 - b2, b2), (b1, b12 - b1), (b1, 0.0)]
    };
    let mut out: Vec<(f64, f64)> = Vec::new();
    for p in raw {
        if !out.iter().any(|q| (q.0 - p.0).abs() <= 1e-15 && (q.1 - p.1).abs() <= 1e-15) {
            out.push(p);
        }
    }
    out
}

/// Support-function sweep over `μ R1 + (1−μ) R2`, keeping every maximiser.
pub fn union_frontier(bounds: &[(f64, f64, f64)], mu_grid: usize) -> Vec<(f64, f64)> {
    let verts: Vec<(f64, f64)> = bounds.iter().flat_map(|&(a, b, c)| pentagon_vertices(a, b, c)).collect();
    if verts.is_empty() {
        return vec![];
    }
    let mut picked: Vec<(f64, f64)> = Vec::new();
    let steps = mu_grid.max(2) - 1;
    for k in 0..=steps {
        let mu = k as f64 / steps as f64;
        let val = |p: &(f64, f64)| mu * p.0 + (1.0 - mu) * p.1;
        let best = verts.iter().map(val).fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-12 * best.abs().max(1.0);
        for p in verts.iter().filter(|p| val(p) >= best - tol) {
            picked.push(*p);
        }
    }
    picked.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    picked.dedup_by(|a, b| (a.0 - b.0).abs() <= 1e-12 && (a.1 - b.1).abs() <= 1e-12);
    let snapshot = picked.clone();
    picked.retain(|p| {
        !snapshot.iter().any(|q| q.0 > p.0 + 1e-12 && q.1 > p.1 + 1e-12)
    });
    picked
}

pub fn achievable_region(table: &CqTable, cfg: &RegionConfig) -> Result<CovertRegionResult> {
    let feasible = find_feasible(table, cfg)?;
    let param = Param { sizes: table.alphabet_sizes() };
    let mut pentagons = Vec::new();
    for (i, d) in feasible.iter().enumerate() {
        pentagons.push(pentagon(table, d, cfg)?);
        let base = param.encode(d);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0000 ^ (i as u64));
        for _ in 0..cfg.perturbations {
            let th: Vec<f64> = base.iter().map(|&v| v + 0.3 * { let z: f64 = StandardNormal.sample(&mut rng); z }).collect();
            pentagons.push(pentagon(table, &param.decode(&th), cfg)?);
        }
    }
    let frontier = frontier_of(&pentagons, cfg, false);
    Ok(CovertRegionResult { pentagons, frontier })
}

fn frontier_of(pentagons: &[RegionPentagon], cfg: &RegionConfig, zero_b2: bool) -> Vec<(f64, f64)> {
    let b: Vec<(f64, f64, f64)> = pentagons
        .iter()
        .filter(|p| p.feasible)
        .map(|p| (p.bounds.b1, if zero_b2 { 0.0 } else { p.bounds.b2 }, p.bounds.b12))
        .collect();
    union_frontier(&b, cfg.mu_grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReductionMode {
    /// `|X3| = 1`, covertness off: the plain two-user cq MAC.
    NoHelperQmac,
    /// Diagonal table, covertness off: a classical MAC with a helper.
    ClassicalHelper,
    /// `|X2| = 1`, covertness on: one message with a helper.
    SingleMessage,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionComparison {
    pub dist: InputDistribution,
    pub bounds: RegionBounds,
    /// Quantities the bounds should reduce to, in the order `(b1, b2, b12)`.
    pub reference: [f64; 3],
    pub max_abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionReport {
    pub mode: ReductionMode,
    pub region: CovertRegionResult,
    pub comparisons: Vec<ReductionComparison>,
}

fn shannon(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

/// Classical `(b1, b2, b12)` from the diagonal of a classical table.
fn classical_reference(table: &CqTable, dist: &InputDistribution) -> [f64; 3] {
    let d = table.d_b();
    let [n1, n2, n3] = table.alphabet_sizes();
    let diag = |x: [usize; 3]| -> Vec<f64> { (0..d).map(|i| table.b_state(x).matrix()[(i, i)].re).collect() };
    // H(B | X_keep) from explicit sums; `keep` selects which symbols condition.
    let h = |keep: [bool; 3]| -> f64 {
        let mut groups: std::collections::BTreeMap<[usize; 3], (f64, Vec<f64>)> = Default::default();
        for x1 in 0..n1 {
            for x2 in 0..n2 {
                for x3 in 0..n3 {
                    let x = [x1, x2, x3];
                    let p = dist.joint(x);
                    let key = [0, 1, 2].map(|i| if keep[i] { x[i] } else { 0 });
                    let e = groups.entry(key).or_insert((0.0, vec![0.0; d]));
                    e.0 += p;
                    for (acc, q) in e.1.iter_mut().zip(diag(x)) {
                        *acc += p * q;
                    }
                }
            }
        }
        groups
            .values()
            .filter(|(w, _)| *w > 0.0)
            .map(|(w, v)| w * shannon(&v.iter().map(|q| q / w).collect::<Vec<_>>()))
            .sum()
    };
    let h123 = h([true, true, true]);
    [h([false, true, false]) - h123, h([true, false, false]) - h123, h([false, false, false]) - h123]
}

pub fn corollary_reduction(table: &CqTable, mode: ReductionMode, cfg: &RegionConfig) -> Result<ReductionReport> {
    let [_, n2, n3] = table.alphabet_sizes();
    let mut cfg = cfg.clone();
    match mode {
        ReductionMode::NoHelperQmac => {
            if n3 != 1 {
                return Err(Error::Incompatible(format!("no-helper reduction needs |X3| = 1, got {n3}")));
            }
            cfg.covertness = false;
        }
        ReductionMode::ClassicalHelper => {
            if !table.is_classical(1e-12) {
                return Err(Error::Incompatible("classical-helper reduction needs a diagonal table".into()));
            }
            cfg.covertness = false;
        }
        ReductionMode::SingleMessage => {
            if n2 != 1 {
                return Err(Error::Incompatible(format!("single-message reduction needs |X2| = 1, got {n2}")));
            }
            cfg.covertness = true;
            cfg.require_margin2 = false;
        }
    }
    let mut region = achievable_region(table, &cfg)?;
    if mode == ReductionMode::SingleMessage {
        region.frontier = frontier_of(&region.pentagons, &cfg, true);
    }
    let mut comparisons = Vec::new();
    for p in region.pentagons.iter().filter(|p| p.feasible) {
        let reference = match mode {
            ReductionMode::NoHelperQmac => [
                holevo_cmi(table, &p.dist, Target::B, Registers::X1, Registers::X2)?,
                holevo_cmi(table, &p.dist, Target::B, Registers::X2, Registers::X1)?,
                holevo_cmi(table, &p.dist, Target::B, Registers::X1 | Registers::X2, Registers::NONE)?,
            ],
            ReductionMode::ClassicalHelper => classical_reference(table, &p.dist),
            ReductionMode::SingleMessage => {
                let b = holevo_cmi(table, &p.dist, Target::B, Registers::X1 | Registers::X3, Registers::NONE)?;
                [b, p.bounds.b2, b]
            }
        };
        let got = [p.bounds.b1, p.bounds.b2, p.bounds.b12];
        let max_abs_diff = got.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        comparisons.push(ReductionComparison { dist: p.dist.clone(), bounds: p.bounds, reference, max_abs_diff });
    }
    Ok(ReductionReport { mode, region, comparisons })
}
