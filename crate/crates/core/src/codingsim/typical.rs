//! Entropy-typical projectors on eigenvalue sequences.

use serde::{Deserialize, Serialize};

use super::codebook::{checked_power, DEFAULT_DIM_CAP};
use crate::channel::{marginals, CqTable};
use crate::error::{Error, Result};
use crate::infomeasures::{conditional_entropy, InputDistribution, Registers, Target};
use crate::qlinalg::{hermitian_eig, CMatrix, DensityMatrix, Projector, SpectralDecomposition, C64};

/// Which inputs a conditional projector is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Conditioning {
    /// `x1, x2, x3`
    Full,
    X1,
    X2,
    /// The unconditional code projector.
    None,
}

impl Conditioning {
    fn registers(self) -> Registers {
        match self {
            Conditioning::Full => Registers::ALL,
            Conditioning::X1 => Registers::X1,
            Conditioning::X2 => Registers::X2,
            Conditioning::None => Registers::NONE,
        }
    }
}

/// Span of `⊗_t |e^{(t)}_{i_t}⟩` over index sequences whose eigenvalue product `λ`
/// satisfies `|−(1/n) log₂ λ − h| ≤ delta`.
pub(crate) fn band_projector(factors: &[&SpectralDecomposition], h: f64, delta: f64) -> Result<Projector> {
    let n = factors.len();
    let dims: Vec<usize> = factors.iter().map(|f| f.dim()).collect();
    let total: usize = dims.iter().product();
    if total > DEFAULT_DIM_CAP {
        return Err(Error::DimensionCap { dim: total, cap: DEFAULT_DIM_CAP });
    }
    let cuts: Vec<f64> = factors.iter().map(|f| f.support_cut()).collect();
    let mut selected: Vec<Vec<usize>> = Vec::new();
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        let mut log_prod = 0.0;
        let mut zero = false;
        for t in 0..n {
            let lam = factors[t].eigenvalues[idx[t]];
            if lam <= cuts[t] {
                zero = true;
                break;
            }
            log_prod += lam.log2();
        }
        if !zero {
            let surprisal = -log_prod / n as f64;
            if (surprisal - h).abs() <= delta + 1e-12 {
                selected.push(idx.clone());
            }
        }
        for t in (0..n).rev() {
            idx[t] += 1;
            if idx[t] < dims[t] {
                break;
            }
            idx[t] = 0;
        }
    }
    let mut cols = CMatrix::zeros(total, selected.len());
    for (k, seq) in selected.iter().enumerate() {
        let mut v: Vec<C64> = vec![C64::new(1.0, 0.0)];
        for t in 0..n {
            let col = factors[t].eigenvectors.column(seq[t]);
            v = v.iter().flat_map(|&a| col.iter().map(move |&b| a * b)).collect();
        }
        for (i, z) in v.into_iter().enumerate() {
            cols[(i, k)] = z;
        }
    }
    Ok(Projector::from_orthonormal_columns(&cols))
}

/// Typical projector of `ρ^{⊗n}` around `H(ρ)`.
pub fn typical_projector(rho: &DensityMatrix, n: usize, delta: f64) -> Result<Projector> {
    checked_power(rho.dim(), n, DEFAULT_DIM_CAP)?;
    let sd = hermitian_eig(rho.matrix())?;
    let h = crate::infomeasures::von_neumann_entropy(rho);
    let factors: Vec<&SpectralDecomposition> = vec![&sd; n];
    band_projector(&factors, h, delta)
}

/// Per-symbol spectral data for building conditional projectors of one code.
pub struct TypicalContext {
    n: usize,
    delta: f64,
    /// Entropy targets `H(B|X1X2X3), H(B|X1), H(B|X2), H(B)`.
    entropies: [f64; 4],
    full: Vec<SpectralDecomposition>,
    given_x1: Vec<Option<SpectralDecomposition>>,
    given_x2: Vec<Option<SpectralDecomposition>>,
    uncond: SpectralDecomposition,
    code_projector: Projector,
    index: Box<dyn Fn([usize; 3]) -> usize + Send + Sync>,
}

impl TypicalContext {
    pub fn new(table: &CqTable, dist: &InputDistribution, n: usize, delta: f64) -> Result<Self> {
        checked_power(table.d_b(), n, DEFAULT_DIM_CAP)?;
        if !(delta >= 0.0) {
            return Err(Error::InvalidArgument(format!("delta = {delta} must be >= 0")));
        }
        let m = marginals(table, dist)?;
        let h = |c: Conditioning| conditional_entropy(table, dist, Target::B, c.registers());
        let entropies = [h(Conditioning::Full)?, h(Conditioning::X1)?, h(Conditioning::X2)?, h(Conditioning::None)?];
        let full = (0..table.len())
            .map(|i| hermitian_eig(table.b_state(table.symbol(i)).matrix()))
            .collect::<Result<Vec<_>>>()?;
        let eig_opt = |v: &Vec<Option<DensityMatrix>>| -> Result<Vec<Option<SpectralDecomposition>>> {
            v.iter().map(|s| s.as_ref().map(|s| hermitian_eig(s.matrix())).transpose()).collect()
        };
        let given_x1 = eig_opt(&m.b_given[0])?;
        let given_x2 = eig_opt(&m.b_given[1])?;
        let uncond = hermitian_eig(m.rho_b.matrix())?;
        let factors: Vec<&SpectralDecomposition> = vec![&uncond; n];
        let code_projector = band_projector(&factors, entropies[3], delta)?;
        let sizes = table.alphabet_sizes();
        let index = Box::new(move |x: [usize; 3]| (x[0] * sizes[1] + x[1]) * sizes[2] + x[2]);
        Ok(Self { n, delta, entropies, full, given_x1, given_x2, uncond, code_projector, index })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entropy(&self, c: Conditioning) -> f64 {
        match c {
            Conditioning::Full => self.entropies[0],
            Conditioning::X1 => self.entropies[1],
            Conditioning::X2 => self.entropies[2],
            Conditioning::None => self.entropies[3],
        }
    }

    /// The code projector `Π`.
    pub fn code_projector(&self) -> &Projector {
        &self.code_projector
    }

    /// Band projector for one conditioning, without nesting.
    pub fn raw(&self, c: Conditioning, seq: &[[usize; 3]]) -> Result<Projector> {
        if seq.len() != self.n {
            return Err(Error::DimensionMismatch(format!("sequence length {} vs n = {}", seq.len(), self.n)));
        }
        if c == Conditioning::None {
            return Ok(self.code_projector.clone());
        }
        let mut factors = Vec::with_capacity(self.n);
        for x in seq {
            let f = match c {
                Conditioning::Full => Some(&self.full[(self.index)(*x)]),
                Conditioning::X1 => self.given_x1[x[0]].as_ref(),
                Conditioning::X2 => self.given_x2[x[1]].as_ref(),
                Conditioning::None => Some(&self.uncond),
            };
            factors.push(f.ok_or_else(|| {
                Error::InvalidArgument(format!("symbol {x:?} has zero probability under the distribution"))
            })?);
        }
        band_projector(&factors, self.entropy(c), self.delta)
    }

    /// Projector with `Π_{x1x2x3} ⪯ Π_{x_i} ⪯ Π` enforced by intersection.
    pub fn nested(&self, c: Conditioning, seq: &[[usize; 3]]) -> Result<Projector> {
        let raw = self.raw(c, seq)?;
        match c {
            Conditioning::None => Ok(raw),
            Conditioning::X1 | Conditioning::X2 => raw.intersect(&self.code_projector),
            Conditioning::Full => {
                let p1 = self.raw(Conditioning::X1, seq)?;
                let p2 = self.raw(Conditioning::X2, seq)?;
                raw.intersect(&p1)?.intersect(&p2)?.intersect(&self.code_projector)
            }
        }
    }
}

/// Nested conditional typical projector for the codeword `(x1n, x2n, x3n)`.
pub fn cond_typical_projector(
    table: &CqTable,
    dist: &InputDistribution,
    x1n: &[usize],
    x2n: &[usize],
    x3n: &[usize],
    conditioning: Conditioning,
    delta: f64,
) -> Result<Projector> {
    let seq = zip_sequences(x1n, x2n, x3n, table.alphabet_sizes())?;
    TypicalContext::new(table, dist, seq.len(), delta)?.nested(conditioning, &seq)
}

/// As [`cond_typical_projector`] but without the nesting intersection.
pub fn cond_typical_projector_raw(
    table: &CqTable,
    dist: &InputDistribution,
    x1n: &[usize],
    x2n: &[usize],
    x3n: &[usize],
    conditioning: Conditioning,
    delta: f64,
) -> Result<Projector> {
    let seq = zip_sequences(x1n, x2n, x3n, table.alphabet_sizes())?;
    TypicalContext::new(table, dist, seq.len(), delta)?.raw(conditioning, &seq)
}

fn zip_sequences(x1n: &[usize], x2n: &[usize], x3n: &[usize], sizes: [usize; 3]) -> Result<Vec<[usize; 3]>> {
    if x1n.len() != x2n.len() || x1n.len() != x3n.len() {
        return Err(Error::DimensionMismatch(format!(
            "sequence lengths {}, {}, {}",
            x1n.len(),
            x2n.len(),
            x3n.len()
        )));
    }
    let seq: Vec<[usize; 3]> = (0..x1n.len()).map(|t| [x1n[t], x2n[t], x3n[t]]).collect();
    if seq.iter().any(|x| (0..3).any(|i| x[i] >= sizes[i])) {
        return Err(Error::OutOfRange("sequence symbol outside alphabet".into()));
    }
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximally_mixed_is_identity() {
        let p = typical_projector(&DensityMatrix::maximally_mixed(2), 4, 0.0).unwrap();
        assert_eq!(p.rank(), 16);
    }

    #[test]
    fn pure_is_rank_one() {
        let p = typical_projector(&DensityMatrix::basis(2, 1).unwrap(), 3, 0.1).unwrap();
        assert_eq!(p.rank(), 1);
        assert!((p.matrix()[(7, 7)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_band_count() {
        let rho = DensityMatrix::diagonal(&[0.25, 0.75]).unwrap();
        let p = typical_projector(&rho, 4, 0.2).unwrap();
        let h = crate::infomeasures::von_neumann_entropy(&rho);
        let mut count = 0;
        for s in 0..16u32 {
            let k = s.count_ones() as f64;
            let surprisal = -(k * 0.25f64.log2() + (4.0 - k) * 0.75f64.log2()) / 4.0;
            if (surprisal - h).abs() <= 0.2 {
                count += 1;
            }
        }
        assert_eq!(p.rank(), count);
    }
}
