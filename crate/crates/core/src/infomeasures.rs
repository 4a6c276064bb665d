//! Entropic quantities on classical-quantum states.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use crate::channel::CqTable;
use crate::error::{Error, Result};
use crate::qlinalg::{
    hermitian_eig, hermitian_part, matrix_function_sd, CMatrix, DensityMatrix, SpectralDecomposition,
};

const PROB_TOL: f64 = 1e-12;

/// `p(x1) p(x2) p(x3 | x1, x2)`. Rows of `p3` are indexed by `x1 * |X2| + x2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDistribution {
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub p3: Vec<Vec<f64>>,
}

fn check_simplex(name: &str, p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidDistribution(format!("{name} is empty")));
    }
    if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::InvalidDistribution(format!("{name} has entry {x}")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidDistribution(format!("{name} sums to {s}")));
    }
    Ok(())
}

impl InputDistribution {
    pub fn new(p1: Vec<f64>, p2: Vec<f64>, p3: Vec<Vec<f64>>) -> Result<Self> {
        let d = Self { p1, p2, p3 };
        d.validate()?;
        Ok(d)
    }

    /// Helper input independent of the messages.
    pub fn product(p1: Vec<f64>, p2: Vec<f64>, p3: Vec<f64>) -> Result<Self> {
        let rows = vec![p3; p1.len() * p2.len()];
        Self::new(p1, p2, rows)
    }

    pub fn validate(&self) -> Result<()> {
        check_simplex("p1", &self.p1)?;
        check_simplex("p2", &self.p2)?;
        let rows = self.p1.len() * self.p2.len();
        if self.p3.len() != rows {
            return Err(Error::InvalidDistribution(format!(
                "p3 needs {rows} rows (one per (x1,x2)), got {}",
                self.p3.len()
            )));
        }
        let n3 = self.p3[0].len();
        for (i, row) in self.p3.iter().enumerate() {
            if row.len() != n3 {
                return Err(Error::InvalidDistribution(format!("p3 row {i} has length {}", row.len())));
            }
            check_simplex(&format!("p3 row {i}"), row)?;
        }
        Ok(())
    }

    pub fn uniform(sizes: [usize; 3]) -> Self {
        let u = |k: usize| vec![1.0 / k as f64; k];
        Self { p1: u(sizes[0]), p2: u(sizes[1]), p3: vec![u(sizes[2]); sizes[0] * sizes[1]] }
    }

    pub fn point_mass(sizes: [usize; 3], x: [usize; 3]) -> Result<Self> {
        if (0..3).any(|i| x[i] >= sizes[i]) {
            return Err(Error::OutOfRange(format!("symbol {x:?} for alphabet sizes {sizes:?}")));
        }
        let e = |k: usize, i: usize| (0..k).map(|j| if j == i { 1.0 } else { 0.0 }).collect::<Vec<_>>();
        Ok(Self {
            p1: e(sizes[0], x[0]),
            p2: e(sizes[1], x[1]),
            p3: vec![e(sizes[2], x[2]); sizes[0] * sizes[1]],
        })
    }

    pub fn sizes(&self) -> [usize; 3] {
        [self.p1.len(), self.p2.len(), self.p3.first().map_or(0, |r| r.len())]
    }

    pub fn p3_given(&self, x1: usize, x2: usize) -> &[f64] {
        &self.p3[x1 * self.p2.len() + x2]
    }

    pub fn joint(&self, x: [usize; 3]) -> f64 {
        self.p1[x[0]] * self.p2[x[1]] * self.p3_given(x[0], x[1])[x[2]]
    }

    /// Joint probabilities in table order (x1-major, x3 fastest).
    pub fn joint_flat(&self) -> Vec<f64> {
        let [n1, n2, n3] = self.sizes();
        let mut out = Vec::with_capacity(n1 * n2 * n3);
        for x1 in 0..n1 {
            for x2 in 0..n2 {
                for x3 in 0..n3 {
                    out.push(self.joint([x1, x2, x3]));
                }
            }
        }
        out
    }

    /// Total variation distance between the joint laws.
    pub fn total_variation(&self, other: &InputDistribution) -> Result<f64> {
        if self.sizes() != other.sizes() {
            return Err(Error::Incompatible(format!("sizes {:?} vs {:?}", self.sizes(), other.sizes())));
        }
        let a = self.joint_flat();
        let b = other.joint_flat();
        Ok(0.5 * a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>())
    }
}

/// Subset of the input registers `X1, X2, X3` as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Registers(pub u8);

impl Registers {
    pub const NONE: Registers = Registers(0);
    pub const X1: Registers = Registers(1);
    pub const X2: Registers = Registers(2);
    pub const X3: Registers = Registers(4);
    pub const ALL: Registers = Registers(7);

    /// From 1-based register labels.
    pub fn of(labels: &[usize]) -> Result<Self> {
        let mut m = 0u8;
        for &l in labels {
            if !(1..=3).contains(&l) {
                return Err(Error::OutOfRange(format!("register label {l}")));
            }
            m |= 1 << (l - 1);
        }
        Ok(Registers(m))
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn union(self, o: Registers) -> Registers {
        Registers(self.0 | o.0)
    }

    pub fn intersects(self, o: Registers) -> bool {
        self.0 & o.0 != 0
    }
}

impl std::ops::BitOr for Registers {
    type Output = Registers;
    fn bitor(self, o: Registers) -> Registers {
        self.union(o)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    B,
    E,
}

fn entropy_of_spectrum(vals: &[f64]) -> f64 {
    let max = vals.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let cut = crate::qlinalg::SUPPORT_CUT_REL * max;
    vals.iter().filter(|&&x| x > cut).map(|&x| -x * x.log2()).sum()
}

/// Entropy in bits of a PSD operator's spectrum; used for unnormalised blocks too.
fn entropy_of_matrix(m: &CMatrix) -> Result<f64> {
    Ok(entropy_of_spectrum(&hermitian_eig(m)?.eigenvalues))
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    entropy_of_matrix(rho.matrix()).unwrap_or(f64::NAN)
}

fn check_compatible(table: &CqTable, dist: &InputDistribution) -> Result<()> {
    dist.validate()?;
    if dist.sizes() != table.alphabet_sizes() {
        return Err(Error::Incompatible(format!(
            "distribution alphabets {:?} vs table {:?}",
            dist.sizes(),
            table.alphabet_sizes()
        )));
    }
    Ok(())
}

/// Unnormalised averages `Σ_{x_rest} p(x) ρ_{T|x}` grouped by the conditioned symbols.
pub(crate) fn grouped_averages(
    table: &CqTable,
    dist: &InputDistribution,
    target: Target,
    cond: Registers,
) -> BTreeMap<[usize; 3], (f64, CMatrix)> {
    let [n1, n2, n3] = table.alphabet_sizes();
    let d = match target {
        Target::B => table.d_b(),
        Target::E => table.d_e(),
    };
    let mut groups: BTreeMap<[usize; 3], (f64, CMatrix)> = BTreeMap::new();
    for x1 in 0..n1 {
        for x2 in 0..n2 {
            for x3 in 0..n3 {
                let x = [x1, x2, x3];
                let p = dist.joint(x);
                if p <= 0.0 {
                    continue;
                }
                let key = [0, 1, 2].map(|i| if cond.contains(i) { x[i] } else { usize::MAX });
                let state = match target {
                    Target::B => table.b_state(x),
                    Target::E => table.e_state(x),
                };
                let entry = groups.entry(key).or_insert_with(|| (0.0, CMatrix::zeros(d, d)));
                entry.0 += p;
                entry.1 += state.matrix().scale(p);
            }
        }
    }
    groups
}

/// `H(T | X_cond) = Σ_{x_cond} p(x_cond) H(ρ_{T|x_cond})`.
pub fn conditional_entropy(
    table: &CqTable,
    dist: &InputDistribution,
    target: Target,
    cond: Registers,
) -> Result<f64> {
    check_compatible(table, dist)?;
    let mut h = 0.0;
    for (w, m) in grouped_averages(table, dist, target, cond).into_values() {
        h += w * entropy_of_matrix(&m.unscale(w))?;
    }
    Ok(h)
}

/// `I(X_s ; T | X_t) = H(T | X_t) − H(T | X_{s∪t})`.
pub fn holevo_cmi(
    table: &CqTable,
    dist: &InputDistribution,
    target: Target,
    s: Registers,
    t: Registers,
) -> Result<f64> {
    if s.intersects(t) {
        return Err(Error::InvalidArgument(format!("register sets {:?} and {:?} overlap", s, t)));
    }
    let outer = conditional_entropy(table, dist, target, t)?;
    let inner = conditional_entropy(table, dist, target, s | t)?;
    Ok(outer - inner)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionBounds {
    /// `I(X1,X3;B|X2)`
    pub b1: f64,
    /// `I(X2,X3;B|X1)`
    pub b2: f64,
    /// `I(X1,X2,X3;B)`
    pub b12: f64,
    /// `I(X1;E)`
    pub e1: f64,
    /// `I(X2;E)`
    pub e2: f64,
    /// `I(X1,X2,X3;E)`
    pub e12: f64,
}

impl RegionBounds {
    pub fn as_array(&self) -> [f64; 6] {
        [self.b1, self.b2, self.b12, self.e1, self.e2, self.e12]
    }
}

pub fn region_bounds(table: &CqTable, dist: &InputDistribution) -> Result<RegionBounds> {
    let h = |target, cond| conditional_entropy(table, dist, target, cond);
    let hb = h(Target::B, Registers::NONE)?;
    let hb1 = h(Target::B, Registers::X1)?;
    let hb2 = h(Target::B, Registers::X2)?;
    let hb123 = h(Target::B, Registers::ALL)?;
    let he = h(Target::E, Registers::NONE)?;
    let he1 = h(Target::E, Registers::X1)?;
    let he2 = h(Target::E, Registers::X2)?;
    let he123 = h(Target::E, Registers::ALL)?;
    Ok(RegionBounds {
        b1: hb2 - hb123,
        b2: hb1 - hb123,
        b12: hb - hb123,
        e1: he - he1,
        e2: he - he2,
        e12: he - he123,
    })
}

/// A divergence value that may be `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Divergence {
    Finite(f64),
    Infinite,
}

impl Divergence {
    pub fn value(self) -> f64 {
        match self {
            Divergence::Finite(x) => x,
            Divergence::Infinite => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Divergence::Finite(x) => Some(x),
            Divergence::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Divergence::Infinite)
    }
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Divergence::Finite(x) => write!(f, "{x}"),
            Divergence::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Divergence {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Divergence::Finite(x) => s.serialize_f64(*x),
            Divergence::Infinite => s.serialize_str("inf"),
        }
    }
}

/// Mass of `rho` outside the support of `sigma`.
const SUPPORT_LEAK_TOL: f64 = 1e-10;

fn support_leak(rho: &CMatrix, sigma: &SpectralDecomposition) -> f64 {
    let cut = sigma.support_cut();
    let mut leak = 0.0;
    for (j, &lam) in sigma.eigenvalues.iter().enumerate() {
        if lam > cut {
            continue;
        }
        let v = sigma.eigenvectors.column(j);
        leak += (v.adjoint() * rho * v)[(0, 0)].re;
    }
    leak
}

fn check_dims(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", a.dim(), b.dim())));
    }
    Ok(())
}

/// `D(ρ‖σ) = tr ρ (log ρ − log σ)` in bits.
pub fn quantum_rel_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Divergence> {
    check_dims(rho, sigma)?;
    let ss = hermitian_eig(sigma.matrix())?;
    if support_leak(rho.matrix(), &ss) > SUPPORT_LEAK_TOL {
        return Ok(Divergence::Infinite);
    }
    let cut = ss.support_cut();
    let log_sigma = matrix_function_sd(&ss, |x| if x > cut { x.log2() } else { 0.0 }, true)?;
    let cross = crate::qlinalg::trace_product(rho.matrix(), &log_sigma).re;
    Ok(Divergence::Finite(-von_neumann_entropy(rho) - cross))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::OutOfRange(format!("alpha = {alpha} not in (0, 1]")));
    }
    Ok(())
}

/// `tr[(σ^{-a} ρ σ^{-a})^{1+α}]` with `a = α/(2(1+α))`, on the support of σ.
fn sandwiched_trace(rho: &CMatrix, sigma_pow: &CMatrix, alpha: f64) -> Result<f64> {
    let x = hermitian_part(&(sigma_pow * rho * sigma_pow));
    let vals = hermitian_eig(&x)?.eigenvalues;
    Ok(vals.iter().map(|&l| l.max(0.0).powf(1.0 + alpha)).sum())
}

fn sigma_neg_power(sigma: &SpectralDecomposition, alpha: f64) -> Result<CMatrix> {
    let a = alpha / (2.0 * (1.0 + alpha));
    let cut = sigma.support_cut();
    matrix_function_sd(sigma, |x| if x > cut { x.powf(-a) } else { 0.0 }, true)
}

/// Sandwiched Rényi divergence of order `1+α`, in bits.
pub fn sandwiched_renyi(rho: &DensityMatrix, sigma: &DensityMatrix, alpha: f64) -> Result<Divergence> {
    check_alpha(alpha)?;
    check_dims(rho, sigma)?;
    let ss = hermitian_eig(sigma.matrix())?;
    if support_leak(rho.matrix(), &ss) > SUPPORT_LEAK_TOL {
        return Ok(Divergence::Infinite);
    }
    let sp = sigma_neg_power(&ss, alpha)?;
    let q = sandwiched_trace(rho.matrix(), &sp, alpha)?;
    Ok(Divergence::Finite(q.log2() / alpha))
}

/// Sandwiched Rényi divergence between the cq state `Σ_x p(x)|x⟩⟨x| ⊗ ρ_x` and
/// `Σ_x p(x)|x⟩⟨x| ⊗ σ`, evaluated block by block.
pub fn cq_sandwiched_renyi(
    ensemble: &[(f64, &DensityMatrix)],
    sigma: &DensityMatrix,
    alpha: f64,
) -> Result<Divergence> {
    check_alpha(alpha)?;
    let ss = hermitian_eig(sigma.matrix())?;
    let sp = sigma_neg_power(&ss, alpha)?;
    let mut q = 0.0;
    for &(p, rho) in ensemble {
        check_dims(rho, sigma)?;
        if p <= 0.0 {
            continue;
        }
        if support_leak(rho.matrix(), &ss) > SUPPORT_LEAK_TOL {
            return Ok(Divergence::Infinite);
        }
        q += p * sandwiched_trace(rho.matrix(), &sp, alpha)?;
    }
    Ok(Divergence::Finite(q.log2() / alpha))
}

pub const DEFAULT_GROUP_TOL: f64 = 1e-9;

/// Groups a descending list of eigenvalues: neighbours within `tol` relative to the
/// largest magnitude share a group. Returns the group id of each entry.
pub fn eigenvalue_groups(sorted_desc: &[f64], tol: f64) -> Vec<usize> {
    let scale = sorted_desc.iter().fold(0.0f64, |a, &x| a.max(x.abs())).max(f64::MIN_POSITIVE);
    let mut ids = Vec::with_capacity(sorted_desc.len());
    let mut g = 0;
    for i in 0..sorted_desc.len() {
        if i > 0 && (sorted_desc[i - 1] - sorted_desc[i]).abs() > tol * scale {
            g += 1;
        }
        ids.push(g);
    }
    ids
}

/// Number of eigenvalue groups of `σ^{⊗n}`, from the single-copy spectrum.
pub fn tensor_power_group_count(spectrum: &[f64], n: usize, tol: f64) -> usize {
    let mut vals = vec![1.0f64];
    for _ in 0..n {
        vals = vals.iter().flat_map(|&v| spectrum.iter().map(move |&l| v * l)).collect();
    }
    vals.sort_by(|a, b| b.total_cmp(a));
    eigenvalue_groups(&vals, tol).last().map_or(0, |&g| g + 1)
}

/// The pinching map of σ: `ρ ↦ Σ_i P_i ρ P_i` over eigenvalue groups of σ.
#[derive(Debug, Clone)]
pub struct Pinching {
    basis: CMatrix,
    groups: Vec<usize>,
    num_groups: usize,
}

impl Pinching {
    pub fn new(sigma: &CMatrix, group_tol: f64) -> Result<Self> {
        let sd = hermitian_eig(sigma)?;
        let groups = eigenvalue_groups(&sd.eigenvalues, group_tol);
        let num_groups = groups.last().map_or(0, |&g| g + 1);
        Ok(Self { basis: sd.eigenvectors, groups, num_groups })
    }

    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    pub fn dim(&self) -> usize {
        self.groups.len()
    }

    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        if rho.nrows() != self.dim() || rho.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!("{}x{} vs {}", rho.nrows(), rho.ncols(), self.dim())));
        }
        let v = &self.basis;
        let mut inner = v.adjoint() * rho * v;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                if self.groups[i] != self.groups[j] {
                    inner[(i, j)] = num_complex::Complex::new(0.0, 0.0);
                }
            }
        }
        Ok(v * inner * v.adjoint())
    }
}

pub fn pinching_map(sigma: &DensityMatrix, rho: &DensityMatrix, group_tol: f64) -> Result<(DensityMatrix, usize)> {
    check_dims(rho, sigma)?;
    let p = Pinching::new(sigma.matrix(), group_tol)?;
    let out = p.apply(rho.matrix())?;
    Ok((DensityMatrix::from_trusted(out), p.num_groups()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlinalg::{real_diag, DensityMatrix};

    fn h2(p: f64) -> f64 {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }

    #[test]
    fn entropy_examples() {
        assert!((von_neumann_entropy(&DensityMatrix::maximally_mixed(2)) - 1.0).abs() < 1e-12);
        assert!(von_neumann_entropy(&DensityMatrix::basis(3, 1).unwrap()).abs() < 1e-12);
        let r = DensityMatrix::diagonal(&[0.25, 0.75]).unwrap();
        assert!((von_neumann_entropy(&r) - h2(0.25)).abs() < 1e-12);
    }

    #[test]
    fn rel_entropy_examples() {
        let r = DensityMatrix::diagonal(&[0.3, 0.7]).unwrap();
        assert!(quantum_rel_entropy(&r, &r).unwrap().value().abs() < 1e-12);
        let psi = DensityMatrix::basis(4, 2).unwrap();
        let d = quantum_rel_entropy(&psi, &DensityMatrix::maximally_mixed(4)).unwrap().value();
        assert!((d - 2.0).abs() < 1e-12);
        let s = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        assert!(quantum_rel_entropy(&r, &s).unwrap().is_infinite());
        assert!(sandwiched_renyi(&r, &s, 0.5).unwrap().is_infinite());
    }

    #[test]
    fn renyi_rejects_bad_alpha() {
        let r = DensityMatrix::maximally_mixed(2);
        assert!(sandwiched_renyi(&r, &r, 0.0).is_err());
        assert!(sandwiched_renyi(&r, &r, 1.5).is_err());
        assert!(sandwiched_renyi(&r, &r, 1.0).unwrap().value().abs() < 1e-12);
    }

    #[test]
    fn pinching_examples() {
        let r = DensityMatrix::new(crate::qlinalg::from_real_rows(2, 2, &[0.5, 0.3, 0.3, 0.5]).unwrap()).unwrap();
        let (out, v) = pinching_map(&DensityMatrix::maximally_mixed(2), &r, DEFAULT_GROUP_TOL).unwrap();
        assert_eq!(v, 1);
        assert!(crate::qlinalg::max_abs_diff(out.matrix(), r.matrix()) < 1e-12);
        let s = DensityMatrix::diagonal(&[0.2, 0.8]).unwrap();
        let (out, v) = pinching_map(&s, &r, DEFAULT_GROUP_TOL).unwrap();
        assert_eq!(v, 2);
        assert!(crate::qlinalg::max_abs_diff(out.matrix(), &real_diag(&[0.5, 0.5])) < 1e-12);
    }

    #[test]
    fn group_count_of_tensor_power() {
        assert_eq!(tensor_power_group_count(&[0.5, 0.5], 3, 1e-9), 1);
        assert_eq!(tensor_power_group_count(&[0.3, 0.7], 3, 1e-9), 4);
        assert_eq!(tensor_power_group_count(&[0.2, 0.3, 0.5], 2, 1e-9), 6);
    }

    #[test]
    fn registers_from_labels() {
        assert_eq!(Registers::of(&[1, 3]).unwrap(), Registers::X1 | Registers::X3);
        assert!(Registers::of(&[4]).is_err());
    }

    #[test]
    fn distribution_validation() {
        assert!(InputDistribution::new(vec![0.5, 0.5], vec![1.0], vec![vec![1.0]; 2]).is_ok());
        assert!(InputDistribution::new(vec![0.5, 0.6], vec![1.0], vec![vec![1.0]; 2]).is_err());
        assert!(InputDistribution::new(vec![0.5, 0.5], vec![1.0], vec![vec![1.0]]).is_err());
        let pm = InputDistribution::point_mass([2, 2, 2], [1, 0, 1]).unwrap();
        assert_eq!(pm.joint([1, 0, 1]), 1.0);
    }
}
