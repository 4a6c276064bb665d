//! Square-root measurement and exact error probability.

use std::collections::HashMap;

use super::codebook::{encode_b_state, Codebook};
use super::typical::{Conditioning, TypicalContext};
use crate::channel::CqTable;
use crate::error::{Error, Result};
use crate::infomeasures::InputDistribution;
use crate::qlinalg::{identity, inverse_sqrt_on_support, trace_product, CMatrix, Projector};

/// `Λ_{m1,m2}` stored at `m1 * M2 + m2`, plus `I − Σ Λ`.
#[derive(Debug, Clone)]
pub struct DecoderPovm {
    pub m1: usize,
    pub m2: usize,
    pub elements: Vec<CMatrix>,
    pub completion: CMatrix,
    /// Mean fraction of rank lost by nesting the codeword projectors.
    pub nesting_rank_loss: f64,
}

impl DecoderPovm {
    pub fn element(&self, m1: usize, m2: usize) -> Result<&CMatrix> {
        if m1 >= self.m1 || m2 >= self.m2 {
            return Err(Error::OutOfRange(format!("message pair ({m1}, {m2})")));
        }
        Ok(&self.elements[m1 * self.m2 + m2])
    }
}

/// `Λ_i = S^{-1/2} Υ_i S^{-1/2}` with `S = Σ Υ_i`, inverse on `supp(S)`.
pub fn srm_from_operators(upsilons: &[CMatrix]) -> Result<(Vec<CMatrix>, CMatrix)> {
    let first = upsilons.first().ok_or_else(|| Error::InvalidArgument("no operators".into()))?;
    let d = first.nrows();
    let mut s = CMatrix::zeros(d, d);
    for u in upsilons {
        if u.nrows() != d || u.ncols() != d {
            return Err(Error::DimensionMismatch(format!("operator {}x{} vs {d}", u.nrows(), u.ncols())));
        }
        s += u;
    }
    let s_inv = inverse_sqrt_on_support(&crate::qlinalg::hermitian_part(&s))?;
    let mut completion = identity(d);
    let mut elements = Vec::with_capacity(upsilons.len());
    for u in upsilons {
        let l = crate::qlinalg::hermitian_part(&(&s_inv * u * &s_inv));
        completion -= &l;
        elements.push(l);
    }
    Ok((elements, completion))
}

/// Square-root decoder on `Υ = Π Π_{x1 x2 x3} Π` for every message pair.
pub fn build_srm_decoder(cb: &Codebook, table: &CqTable, dist: &InputDistribution, delta: f64) -> Result<DecoderPovm> {
    let ctx = TypicalContext::new(table, dist, cb.n, delta)?;
    build_srm_decoder_in(cb, table, &ctx)
}

pub(crate) fn build_srm_decoder_in(cb: &Codebook, table: &CqTable, ctx: &TypicalContext) -> Result<DecoderPovm> {
    cb.check_alphabets(table.alphabet_sizes())?;
    let pi = ctx.code_projector().matrix();
    let mut cache: HashMap<Vec<[usize; 3]>, (CMatrix, f64)> = HashMap::new();
    let mut upsilons = Vec::with_capacity(cb.pairs());
    let mut loss = 0.0;
    for m1 in 0..cb.m1() {
        for m2 in 0..cb.m2() {
            let seq = cb.symbols(m1, m2)?;
            if !cache.contains_key(&seq) {
                let raw: Projector = ctx.raw(Conditioning::Full, &seq)?;
                let nested = ctx.nested(Conditioning::Full, &seq)?;
                let frac = if raw.rank() > 0 {
                    (raw.rank() as f64 - nested.rank() as f64).max(0.0) / raw.rank() as f64
                } else {
                    0.0
                };
                let ups = crate::qlinalg::hermitian_part(&(pi * nested.matrix() * pi));
                cache.insert(seq.clone(), (ups, frac));
            }
            let (ups, frac) = &cache[&seq];
            upsilons.push(ups.clone());
            loss += frac;
        }
    }
    let (elements, completion) = srm_from_operators(&upsilons)?;
    Ok(DecoderPovm {
        m1: cb.m1(),
        m2: cb.m2(),
        elements,
        completion,
        nesting_rank_loss: loss / cb.pairs() as f64,
    })
}

/// Average over message pairs of `tr[(I − Λ_{m1,m2}) ρ_{B^n | m1,m2}]`.
pub fn exact_error(cb: &Codebook, dec: &DecoderPovm, table: &CqTable) -> Result<f64> {
    if dec.m1 != cb.m1() || dec.m2 != cb.m2() {
        return Err(Error::Incompatible(format!(
            "decoder for ({}, {}) messages, codebook has ({}, {})",
            dec.m1,
            dec.m2,
            cb.m1(),
            cb.m2()
        )));
    }
    let mut total = 0.0;
    for m1 in 0..cb.m1() {
        for m2 in 0..cb.m2() {
            let rho = encode_b_state(cb, m1, m2, table)?;
            let lam = dec.element(m1, m2)?;
            if lam.nrows() != rho.dim() {
                return Err(Error::DimensionMismatch(format!("decoder dim {} vs state dim {}", lam.nrows(), rho.dim())));
            }
            let success = trace_product(lam, rho.matrix()).re;
            total += (1.0 - success).clamp(0.0, 1.0);
        }
    }
    Ok(total / cb.pairs() as f64)
}
