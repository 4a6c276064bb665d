//! Randomised checks of the operator inequalities used by the coding proofs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::infomeasures::{tensor_power_group_count, Pinching, DEFAULT_GROUP_TOL};
use crate::qlinalg::{
    identity, inverse_sqrt_on_support, matrix_function, min_eigenvalue, trace_norm, trace_product,
    CMatrix,
};
use crate::random;

/// Slack below which a trial counts as a violation.
pub const VIOLATION_TOL: f64 = -1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub name: String,
    pub trials: usize,
    pub violations: usize,
    /// Smallest slack seen; nonnegative means the inequality held with room to spare.
    pub worst_slack: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub seed: u64,
    pub trials: usize,
    pub dims: Vec<usize>,
    pub checks: Vec<LemmaCheck>,
}

impl LemmaReport {
    pub fn total_violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn check(&self, name: &str) -> Option<&LemmaCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const HAYASHI_NAGAOKA: &str = "hayashi_nagaoka";
pub const GENTLE_MEASUREMENT: &str = "gentle_measurement";
pub const PINCHING_INEQUALITY: &str = "pinching_inequality";
pub const PINCHING_TRACE_IDENTITY: &str = "pinching_trace_identity";
pub const COMMUTING_POWER_SUBADDITIVITY: &str = "commuting_power_subadditivity";
pub const SCALAR_LOG_POWER: &str = "scalar_log_power";
pub const EIGENVALUE_COUNT: &str = "eigenvalue_count";

/// `min eig(2(I−S) + 4T − [I − (S+T)^{-1/2} S (S+T)^{-1/2}])`.
pub fn hayashi_nagaoka_slack(s: &CMatrix, t: &CMatrix) -> Result<f64> {
    let d = s.nrows();
    let inv = inverse_sqrt_on_support(&(s + t))?;
    let lhs = identity(d) - &inv * s * &inv;
    let rhs = (identity(d) - s).scale(2.0) + t.scale(4.0);
    min_eigenvalue(&crate::qlinalg::hermitian_part(&(rhs - lhs)))
}

/// `2√α − ‖ΠρΠ − ρ‖₁` with `α = 1 − tr Πρ`, the tightest value the hypothesis allows.
pub fn gentle_measurement_slack(rho: &CMatrix, pi: &CMatrix) -> f64 {
    let alpha = (1.0 - trace_product(pi, rho).re).max(0.0);
    let disturbed = pi * rho * pi;
    2.0 * alpha.sqrt() - trace_norm(&(disturbed - rho))
}

/// `min eig(v ℰ_σ(ρ) − ρ)`.
pub fn pinching_inequality_slack(sigma: &CMatrix, rho: &CMatrix) -> Result<f64> {
    let p = Pinching::new(sigma, DEFAULT_GROUP_TOL)?;
    let pinched = p.apply(rho)?;
    min_eigenvalue(&crate::qlinalg::hermitian_part(&(pinched.scale(p.num_groups() as f64) - rho)))
}

/// `−|tr[ℰ_σ(ρ1) ρ2] − tr[ρ1 ℰ_σ(ρ2)]|`.
pub fn pinching_trace_identity_slack(sigma: &CMatrix, rho1: &CMatrix, rho2: &CMatrix) -> Result<f64> {
    let p = Pinching::new(sigma, DEFAULT_GROUP_TOL)?;
    let a = trace_product(&p.apply(rho1)?, rho2);
    let b = trace_product(rho1, &p.apply(rho2)?);
    Ok(-(a - b).norm())
}

/// `min eig(A^s + B^s − (A+B)^s)` for commuting PSD `A, B`.
pub fn commuting_power_slack(a: &CMatrix, b: &CMatrix, s: f64) -> Result<f64> {
    let pow = |m: &CMatrix| matrix_function(m, |x| x.max(0.0).powf(s), true);
    let diff = pow(a)? + pow(b)? - pow(&(a + b))?;
    min_eigenvalue(&crate::qlinalg::hermitian_part(&diff))
}

/// Both links of `(1/α) ln (1+x)^α ≤ (1/α) ln(1 + x^α) ≤ x^α / α`, natural log.
pub fn scalar_log_power_slack(x: f64, alpha: f64) -> f64 {
    let xa = x.powf(alpha);
    let left = (1.0 + x).ln();
    let mid = (1.0 + xa).ln() / alpha;
    let right = xa / alpha;
    (mid - left).min(right - mid)
}

/// `(n+1)^d − v` for the eigenvalue groups `v` of `σ^{⊗n}`.
pub fn eigenvalue_count_slack(spectrum: &[f64], n: usize) -> f64 {
    let v = tensor_power_group_count(spectrum, n, DEFAULT_GROUP_TOL);
    (n as f64 + 1.0).powi(spectrum.len() as i32) - v as f64
}

struct Tally {
    name: &'static str,
    trials: usize,
    violations: usize,
    worst: Option<f64>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self { name, trials: 0, violations: 0, worst: None }
    }

    fn record(&mut self, slack: f64) {
        self.trials += 1;
        if !(slack >= VIOLATION_TOL) {
            self.violations += 1;
        }
        self.worst = Some(self.worst.map_or(slack, |w| w.min(slack)));
    }

    fn done(self) -> LemmaCheck {
        LemmaCheck { name: self.name.to_string(), trials: self.trials, violations: self.violations, worst_slack: self.worst }
    }
}

/// Spectrum with deliberate repeats, so pinching sees degenerate groups.
fn degenerate_spectrum<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    let levels = rng.gen_range(1..=d);
    let vals: Vec<f64> = (0..levels).map(|_| rng.gen::<f64>() + 0.05).collect();
    let mut spec: Vec<f64> = (0..d).map(|i| vals[i % levels]).collect();
    spec.shuffle(rng);
    let s: f64 = spec.iter().sum();
    spec.into_iter().map(|x| x / s).collect()
}

fn random_sigma<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    if rng.gen_bool(0.5) {
        let spec = degenerate_spectrum(rng, d);
        random::with_spectrum(rng, &spec)
    } else {
        random::density(rng, d).into_matrix()
    }
}

/// Runs every check `trials` times. Trial `k` uses dimension `dims[k % dims.len()]`
/// and its own RNG stream, so results do not depend on thread scheduling.
pub fn lemma_checks(seed: u64, trials: usize, dims: &[usize]) -> Result<LemmaReport> {
    if dims.is_empty() || dims.iter().any(|&d| d == 0 || d > 64) {
        return Err(Error::InvalidArgument(format!("dims {dims:?} must be nonempty and in 1..=64")));
    }
    let mut hn = Tally::new(HAYASHI_NAGAOKA);
    let mut gm = Tally::new(GENTLE_MEASUREMENT);
    let mut pi = Tally::new(PINCHING_INEQUALITY);
    let mut pt = Tally::new(PINCHING_TRACE_IDENTITY);
    let mut cp = Tally::new(COMMUTING_POWER_SUBADDITIVITY);
    let mut sc = Tally::new(SCALAR_LOG_POWER);
    let mut ec = Tally::new(EIGENVALUE_COUNT);
    for k in 0..trials {
        let d = dims[k % dims.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);

        let s = if rng.gen_bool(0.2) {
            let rank = rng.gen_range(0..=d);
            random::projector(&mut rng, d, rank).into_matrix()
        } else {
            random::contraction(&mut rng, d)
        };
        let t = if rng.gen_bool(0.2) {
            CMatrix::zeros(d, d)
        } else {
            random::contraction(&mut rng, d).scale(rng.gen_range(0.0..2.0))
        };
        hn.record(hayashi_nagaoka_slack(&s, &t)?);

        let rank = rng.gen_range(1..=d);
        let rho = random::density_with_rank(&mut rng, d, rank).into_matrix();
        let prank = rng.gen_range(0..=d);
        let proj = random::projector(&mut rng, d, prank).into_matrix();
        gm.record(gentle_measurement_slack(&rho, &proj));

        let sigma = random_sigma(&mut rng, d);
        let rho = random::density(&mut rng, d).into_matrix();
        pi.record(pinching_inequality_slack(&sigma, &rho)?);

        let sigma = random_sigma(&mut rng, d);
        let r1 = random::density(&mut rng, d).into_matrix();
        let r2 = random::density(&mut rng, d).into_matrix();
        pt.record(pinching_trace_identity_slack(&sigma, &r1, &r2)?);

        let u = random::unitary(&mut rng, d);
        let diag_of = |rng: &mut ChaCha8Rng| {
            let v: Vec<f64> = (0..d).map(|_| if rng.gen_bool(0.15) { 0.0 } else { rng.gen::<f64>() }).collect();
            let s: f64 = v.iter().sum::<f64>().max(1e-300);
            let m = crate::qlinalg::real_diag(&v.iter().map(|x| x / s).collect::<Vec<_>>());
            &u * m * u.adjoint()
        };
        let a = diag_of(&mut rng);
        let b = diag_of(&mut rng);
        let power = rng.gen_range(1..=10) as f64 / 10.0;
        cp.record(commuting_power_slack(&a, &b, power)?);

        let x = 10f64.powf(rng.gen_range(-6.0..=6.0));
        let alpha = rng.gen_range(1..=10) as f64 / 10.0;
        sc.record(scalar_log_power_slack(x, alpha));

        let de = d.min(4);
        let n = rng.gen_range(1..=4);
        let spec = if rng.gen_bool(0.5) {
            degenerate_spectrum(&mut rng, de)
        } else {
            random::probability_vector(&mut rng, de)
        };
        ec.record(eigenvalue_count_slack(&spec, n));
    }
    Ok(LemmaReport {
        seed,
        trials,
        dims: dims.to_vec(),
        checks: vec![hn.done(), gm.done(), pi.done(), pt.done(), cp.done(), sc.done(), ec.done()],
    })
}
