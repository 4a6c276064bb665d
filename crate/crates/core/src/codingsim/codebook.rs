use std::collections::BTreeMap;

use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::CqTable;
use crate::error::{Error, Result};
use crate::infomeasures::InputDistribution;
use crate::qlinalg::{tensor_all, CMatrix, DensityMatrix};

pub const DEFAULT_DIM_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub n: usize,
    pub r1: f64,
    pub r2: f64,
    /// Typicality band half-width, bits per symbol.
    pub delta: f64,
    /// Rényi parameter in `(0, 1]`.
    pub alpha: f64,
    pub num_codebooks: usize,
    pub seed: u64,
    pub dim_cap: usize,
}

impl Default for SimParams {
    fn default() -> Self {
        Self { n: 2, r1: 0.0, r2: 0.0, delta: 0.5, alpha: 0.5, num_codebooks: 50, seed: 0, dim_cap: DEFAULT_DIM_CAP }
    }
}

/// `⌊2^{nR}⌋`, at least one.
pub fn message_count(n: usize, rate: f64) -> Result<usize> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::InvalidArgument(format!("rate {rate} must be finite and >= 0")));
    }
    let e = n as f64 * rate;
    if e > 30.0 {
        return Err(Error::OutOfRange(format!("n*R = {e} bits is beyond desk scale")));
    }
    Ok(((2f64.powf(e) + 1e-9).floor() as usize).max(1))
}

pub(crate) fn checked_power(d: usize, n: usize, cap: usize) -> Result<usize> {
    let mut acc: usize = 1;
    for _ in 0..n {
        acc = acc.checked_mul(d).filter(|&v| v <= cap).ok_or(Error::DimensionCap {
            dim: d.saturating_pow(n as u32),
            cap,
        })?;
    }
    Ok(acc)
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::OutOfRange(format!("alpha = {} not in (0, 1]", self.alpha)));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::InvalidArgument(format!("delta = {} must be >= 0", self.delta)));
        }
        self.message_counts()?;
        Ok(())
    }

    pub fn message_counts(&self) -> Result<(usize, usize)> {
        Ok((message_count(self.n, self.r1)?, message_count(self.n, self.r2)?))
    }

    /// Checks `d_B^n` and `d_E^n` against the cap before anything is allocated.
    pub fn check_dims(&self, table: &CqTable) -> Result<()> {
        checked_power(table.d_b(), self.n, self.dim_cap)?;
        checked_power(table.d_e(), self.n, self.dim_cap)?;
        Ok(())
    }
}

/// Codewords `x1(m1)`, `x2(m2)` and the helper's `x3(m1, m2)` (stored at `m1 * M2 + m2`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codebook {
    pub n: usize,
    pub x1: Vec<Vec<usize>>,
    pub x2: Vec<Vec<usize>>,
    pub x3: Vec<Vec<usize>>,
}

impl Codebook {
    pub fn from_parts(x1: Vec<Vec<usize>>, x2: Vec<Vec<usize>>, x3: Vec<Vec<usize>>) -> Result<Self> {
        if x1.is_empty() || x2.is_empty() {
            return Err(Error::InvalidArgument("codebook needs at least one message per user".into()));
        }
        if x3.len() != x1.len() * x2.len() {
            return Err(Error::DimensionMismatch(format!(
                "helper needs {} codewords, got {}",
                x1.len() * x2.len(),
                x3.len()
            )));
        }
        let n = x1[0].len();
        if x1.iter().chain(&x2).chain(&x3).any(|w| w.len() != n) {
            return Err(Error::DimensionMismatch("codewords of unequal length".into()));
        }
        Ok(Self { n, x1, x2, x3 })
    }

    pub fn m1(&self) -> usize {
        self.x1.len()
    }

    pub fn m2(&self) -> usize {
        self.x2.len()
    }

    pub fn pairs(&self) -> usize {
        self.m1() * self.m2()
    }

    fn check(&self, m1: usize, m2: usize) -> Result<()> {
        if m1 >= self.m1() || m2 >= self.m2() {
            return Err(Error::OutOfRange(format!("message pair ({m1}, {m2}) for sizes ({}, {})", self.m1(), self.m2())));
        }
        Ok(())
    }

    pub fn codeword(&self, m1: usize, m2: usize) -> Result<(&[usize], &[usize], &[usize])> {
        self.check(m1, m2)?;
        Ok((&self.x1[m1], &self.x2[m2], &self.x3[m1 * self.m2() + m2]))
    }

    /// Symbol triples of a message pair, position by position.
    pub fn symbols(&self, m1: usize, m2: usize) -> Result<Vec<[usize; 3]>> {
        let (a, b, c) = self.codeword(m1, m2)?;
        Ok((0..self.n).map(|t| [a[t], b[t], c[t]]).collect())
    }

    pub fn check_alphabets(&self, sizes: [usize; 3]) -> Result<()> {
        for (i, words) in [&self.x1, &self.x2, &self.x3].into_iter().enumerate() {
            if words.iter().flatten().any(|&s| s >= sizes[i]) {
                return Err(Error::OutOfRange(format!("codeword symbol of user {} outside alphabet", i + 1)));
            }
        }
        Ok(())
    }

    /// Codebook with messages renamed: new `m1` is old `perm1[m1]`, likewise for `m2`.
    pub fn relabel(&self, perm1: &[usize], perm2: &[usize]) -> Result<Codebook> {
        let ok = |p: &[usize], k: usize| {
            let mut s = p.to_vec();
            s.sort_unstable();
            s == (0..k).collect::<Vec<_>>()
        };
        if !ok(perm1, self.m1()) || !ok(perm2, self.m2()) {
            return Err(Error::InvalidArgument("relabelling is not a permutation".into()));
        }
        let x1 = perm1.iter().map(|&i| self.x1[i].clone()).collect();
        let x2 = perm2.iter().map(|&j| self.x2[j].clone()).collect();
        let mut x3 = Vec::with_capacity(self.pairs());
        for &i in perm1 {
            for &j in perm2 {
                x3.push(self.x3[i * self.m2() + j].clone());
            }
        }
        Codebook::from_parts(x1, x2, x3)
    }
}

fn sampler(p: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(p).map_err(|e| Error::InvalidDistribution(e.to_string()))
}

/// Random codebook number `index`; the stream is fixed by `(seed ^ index, n)`.
pub fn generate_codebook(dist: &InputDistribution, params: &SimParams, index: u64) -> Result<Codebook> {
    dist.validate()?;
    let (m1, m2) = params.message_counts()?;
    let n = params.n;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ index);
    rng.set_stream(n as u64);
    let s1 = sampler(&dist.p1)?;
    let s2 = sampler(&dist.p2)?;
    let s3: Vec<WeightedIndex<f64>> = dist.p3.iter().map(|row| sampler(row)).collect::<Result<_>>()?;
    let x1: Vec<Vec<usize>> = (0..m1).map(|_| (0..n).map(|_| s1.sample(&mut rng)).collect()).collect();
    let x2: Vec<Vec<usize>> = (0..m2).map(|_| (0..n).map(|_| s2.sample(&mut rng)).collect()).collect();
    let n2 = dist.p2.len();
    let mut x3 = Vec::with_capacity(m1 * m2);
    for a in &x1 {
        for b in &x2 {
            x3.push((0..n).map(|t| s3[a[t] * n2 + b[t]].sample(&mut rng)).collect());
        }
    }
    Codebook::from_parts(x1, x2, x3)
}

fn product_state<'a, F>(cb: &Codebook, m1: usize, m2: usize, table: &'a CqTable, d: usize, pick: F) -> Result<DensityMatrix>
where
    F: Fn(&'a CqTable, [usize; 3]) -> &'a DensityMatrix,
{
    cb.check_alphabets(table.alphabet_sizes())?;
    checked_power(d, cb.n, DEFAULT_DIM_CAP)?;
    let syms = cb.symbols(m1, m2)?;
    let mats: Vec<&CMatrix> = syms.iter().map(|&x| pick(table, x).matrix()).collect();
    Ok(DensityMatrix::from_trusted(tensor_all(mats)))
}

/// `⊗_t ρ_{BE | x_t}`.
pub fn encode_joint_state(cb: &Codebook, m1: usize, m2: usize, table: &CqTable) -> Result<DensityMatrix> {
    product_state(cb, m1, m2, table, table.d_b() * table.d_e(), |t, x| t.joint_state(x))
}

/// `⊗_t ρ_{B | x_t}`, the receiver's share of [`encode_joint_state`].
pub fn encode_b_state(cb: &Codebook, m1: usize, m2: usize, table: &CqTable) -> Result<DensityMatrix> {
    product_state(cb, m1, m2, table, table.d_b(), |t, x| t.b_state(x))
}

/// `⊗_t ρ_{E | x_t}`, the warden's share of [`encode_joint_state`].
pub fn encode_e_state(cb: &Codebook, m1: usize, m2: usize, table: &CqTable) -> Result<DensityMatrix> {
    product_state(cb, m1, m2, table, table.d_e(), |t, x| t.e_state(x))
}

/// Uniform average of the warden's state over all message pairs.
pub fn warden_state(cb: &Codebook, table: &CqTable) -> Result<DensityMatrix> {
    cb.check_alphabets(table.alphabet_sizes())?;
    let d = checked_power(table.d_e(), cb.n, DEFAULT_DIM_CAP)?;
    let mut counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for m1 in 0..cb.m1() {
        for m2 in 0..cb.m2() {
            let key: Vec<usize> = cb.symbols(m1, m2)?.into_iter().map(|x| table.index(x)).collect();
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    let total = cb.pairs() as f64;
    let mut acc = CMatrix::zeros(d, d);
    for (key, k) in counts {
        let mats: Vec<&CMatrix> = key.iter().map(|&i| table.e_state_flat(i).matrix()).collect();
        acc += tensor_all(mats).scale(k as f64 / total);
    }
    Ok(DensityMatrix::from_trusted(acc))
}
