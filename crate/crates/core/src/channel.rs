//! The multiple-access channel with a helper, and its compiled cq table.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::infomeasures::InputDistribution;
use crate::qlinalg::{
    identity, max_abs_diff, partial_trace, tensor, tensor_all, trace_norm, CMatrix, DensityMatrix,
};

/// Signal states of one transmitter, one per symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalEnsemble {
    states: Vec<DensityMatrix>,
}

impl SignalEnsemble {
    pub fn new(states: Vec<DensityMatrix>) -> Result<Self> {
        let first = states.first().ok_or_else(|| Error::InvalidArgument("ensemble has no states".into()))?;
        let d = first.dim();
        if let Some(s) = states.iter().find(|s| s.dim() != d) {
            return Err(Error::DimensionMismatch(format!("ensemble mixes dims {d} and {}", s.dim())));
        }
        Ok(Self { states })
    }

    /// Computational basis states `|0⟩, …, |k-1⟩` of a `d`-dimensional system.
    pub fn basis(d: usize, k: usize) -> Result<Self> {
        Self::new((0..k).map(|i| DensityMatrix::basis(d, i)).collect::<Result<_>>()?)
    }

    pub fn alphabet_size(&self) -> usize {
        self.states.len()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn state(&self, x: usize) -> &DensityMatrix {
        &self.states[x]
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }
}

/// Kraus representation of `N: A1 A2 A3 → B E`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalChannel {
    pub input_dims: [usize; 3],
    pub output_dims: (usize, usize),
    pub kraus: Vec<CMatrix>,
}

impl PhysicalChannel {
    pub fn input_dim(&self) -> usize {
        self.input_dims.iter().product()
    }

    pub fn output_dim(&self) -> usize {
        self.output_dims.0 * self.output_dims.1
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let d = self.output_dim();
        let mut out = CMatrix::zeros(d, d);
        for k in &self.kraus {
            out += k * rho * k.adjoint();
        }
        out
    }

    /// Channel that discards its input and prepares `state`.
    pub fn replacer(input_dims: [usize; 3], output_dims: (usize, usize), state: &DensityMatrix) -> Result<Self> {
        let din: usize = input_dims.iter().product();
        if state.dim() != output_dims.0 * output_dims.1 {
            return Err(Error::DimensionMismatch(format!(
                "replacement state has dim {}, outputs need {}",
                state.dim(),
                output_dims.0 * output_dims.1
            )));
        }
        let sd = crate::qlinalg::hermitian_eig(state.matrix())?;
        let mut kraus = Vec::new();
        for (j, &lam) in sd.eigenvalues.iter().enumerate() {
            if lam <= 1e-15 {
                continue;
            }
            let v = sd.eigenvectors.column(j).scale(lam.sqrt());
            for i in 0..din {
                let mut k = CMatrix::zeros(state.dim(), din);
                k.set_column(i, &v);
                kraus.push(k);
            }
        }
        Ok(Self { input_dims, output_dims, kraus })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub dims_consistent: bool,
    pub dim_issues: Vec<String>,
    /// `‖Σ K†K − I‖₁`
    pub completeness_residual: f64,
    /// `max |Σ K†K − I|` entrywise
    pub completeness_max_entry: f64,
    pub passed: bool,
}

pub const COMPLETENESS_TOL: f64 = 1e-10;

pub fn validate_channel(ch: &PhysicalChannel) -> ValidationReport {
    let din = ch.input_dim();
    let dout = ch.output_dim();
    let mut issues = Vec::new();
    if ch.input_dims.contains(&0) || ch.output_dims.0 == 0 || ch.output_dims.1 == 0 {
        issues.push("zero dimension".to_string());
    }
    if ch.kraus.is_empty() {
        issues.push("no Kraus operators".to_string());
    }
    for (i, k) in ch.kraus.iter().enumerate() {
        if k.nrows() != dout || k.ncols() != din {
            issues.push(format!("Kraus operator {i} is {}x{}, expected {dout}x{din}", k.nrows(), k.ncols()));
        }
    }
    let dims_consistent = issues.is_empty();
    let (resid, max_entry) = if dims_consistent {
        let mut s = CMatrix::zeros(din, din);
        for k in &ch.kraus {
            s += k.adjoint() * k;
        }
        let diff = s - identity(din);
        (trace_norm(&diff), crate::qlinalg::max_abs_entry(&diff))
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    ValidationReport {
        dims_consistent,
        dim_issues: issues,
        completeness_residual: resid,
        completeness_max_entry: max_entry,
        passed: dims_consistent && max_entry <= COMPLETENESS_TOL,
    }
}

/// What each transmitter sends when idle.
#[derive(Debug, Clone, PartialEq)]
pub enum InnocentConfig {
    States([DensityMatrix; 3]),
    Symbols([usize; 3]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableLimits {
    pub max_alphabet: usize,
    pub max_dim: usize,
}

impl Default for TableLimits {
    fn default() -> Self {
        Self { max_alphabet: 8, max_dim: 4 }
    }
}

/// Joint output states `ρ_{BE|x1,x2,x3}` and the warden's idle state `ρ_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CqTable {
    alphabet_sizes: [usize; 3],
    d_b: usize,
    d_e: usize,
    joint: Vec<DensityMatrix>,
    b_marg: Vec<DensityMatrix>,
    e_marg: Vec<DensityMatrix>,
    rho0: DensityMatrix,
}

impl CqTable {
    /// `joint` is in flat order: x1-major, x3 fastest.
    pub fn new(
        alphabet_sizes: [usize; 3],
        d_b: usize,
        d_e: usize,
        joint: Vec<CMatrix>,
        rho0: CMatrix,
    ) -> Result<Self> {
        Self::with_limits(alphabet_sizes, d_b, d_e, joint, rho0, TableLimits::default())
    }

    pub fn with_limits(
        alphabet_sizes: [usize; 3],
        d_b: usize,
        d_e: usize,
        joint: Vec<CMatrix>,
        rho0: CMatrix,
        limits: TableLimits,
    ) -> Result<Self> {
        if alphabet_sizes.iter().any(|&k| k == 0 || k > limits.max_alphabet) {
            return Err(Error::OutOfRange(format!(
                "alphabet sizes {alphabet_sizes:?} must be in 1..={}",
                limits.max_alphabet
            )));
        }
        for d in [d_b, d_e] {
            if d == 0 || d > limits.max_dim {
                return Err(Error::DimensionCap { dim: d, cap: limits.max_dim });
            }
        }
        let total: usize = alphabet_sizes.iter().product();
        if joint.len() != total {
            return Err(Error::DimensionMismatch(format!(
                "table needs {total} joint states, got {}",
                joint.len()
            )));
        }
        let mut states = Vec::with_capacity(total);
        let mut b_marg = Vec::with_capacity(total);
        let mut e_marg = Vec::with_capacity(total);
        for (i, m) in joint.into_iter().enumerate() {
            let x = unflatten(alphabet_sizes, i);
            let bad = |reason: String| Error::InvalidTableEntry { x, reason };
            if m.nrows() != d_b * d_e || m.ncols() != d_b * d_e {
                return Err(bad(format!("is {}x{}, expected {}x{}", m.nrows(), m.ncols(), d_b * d_e, d_b * d_e)));
            }
            let s = DensityMatrix::new(m).map_err(|e| bad(e.to_string()))?;
            b_marg.push(s.partial_trace(&[d_b, d_e], &[0])?);
            e_marg.push(s.partial_trace(&[d_b, d_e], &[1])?);
            states.push(s);
        }
        if rho0.nrows() != d_e || rho0.ncols() != d_e {
            return Err(Error::DimensionMismatch(format!("rho0 is {}x{}, expected {d_e}x{d_e}", rho0.nrows(), rho0.ncols())));
        }
        let rho0 = DensityMatrix::new(rho0)?;
        Ok(Self { alphabet_sizes, d_b, d_e, joint: states, b_marg, e_marg, rho0 })
    }

    /// Table with product outputs `ρ_{B|x} ⊗ ρ_{E|x}`.
    pub fn from_product(
        alphabet_sizes: [usize; 3],
        b_states: &[DensityMatrix],
        e_states: &[DensityMatrix],
        rho0: &DensityMatrix,
    ) -> Result<Self> {
        if b_states.len() != e_states.len() || b_states.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{} B states vs {} E states",
                b_states.len(),
                e_states.len()
            )));
        }
        let d_b = b_states[0].dim();
        let d_e = e_states[0].dim();
        let joint = b_states.iter().zip(e_states).map(|(b, e)| tensor(b.matrix(), e.matrix())).collect();
        Self::new(alphabet_sizes, d_b, d_e, joint, rho0.matrix().clone())
    }

    pub fn alphabet_sizes(&self) -> [usize; 3] {
        self.alphabet_sizes
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn d_e(&self) -> usize {
        self.d_e
    }

    pub fn len(&self) -> usize {
        self.joint.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joint.is_empty()
    }

    pub fn index(&self, x: [usize; 3]) -> usize {
        let [_, n2, n3] = self.alphabet_sizes;
        (x[0] * n2 + x[1]) * n3 + x[2]
    }

    pub fn symbol(&self, flat: usize) -> [usize; 3] {
        unflatten(self.alphabet_sizes, flat)
    }

    pub fn joint_state(&self, x: [usize; 3]) -> &DensityMatrix {
        &self.joint[self.index(x)]
    }

    pub fn b_state(&self, x: [usize; 3]) -> &DensityMatrix {
        &self.b_marg[self.index(x)]
    }

    pub fn e_state(&self, x: [usize; 3]) -> &DensityMatrix {
        &self.e_marg[self.index(x)]
    }

    pub(crate) fn b_state_flat(&self, i: usize) -> &DensityMatrix {
        &self.b_marg[i]
    }

    pub(crate) fn e_state_flat(&self, i: usize) -> &DensityMatrix {
        &self.e_marg[i]
    }

    pub(crate) fn joint_state_flat(&self, i: usize) -> &DensityMatrix {
        &self.joint[i]
    }

    pub fn rho0(&self) -> &DensityMatrix {
        &self.rho0
    }

    pub fn with_rho0(&self, rho0: DensityMatrix) -> Result<Self> {
        if rho0.dim() != self.d_e {
            return Err(Error::DimensionMismatch(format!("rho0 dim {} vs d_E {}", rho0.dim(), self.d_e)));
        }
        let mut t = self.clone();
        t.rho0 = rho0;
        Ok(t)
    }

    /// True when every joint state is diagonal within `tol`.
    pub fn is_classical(&self, tol: f64) -> bool {
        self.joint.iter().all(|s| {
            let m = s.matrix();
            (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)].norm() <= tol))
        })
    }
}

fn unflatten(sizes: [usize; 3], i: usize) -> [usize; 3] {
    let x3 = i % sizes[2];
    let x2 = (i / sizes[2]) % sizes[1];
    let x1 = i / (sizes[2] * sizes[1]);
    [x1, x2, x3]
}

pub fn compile_cq_table(
    ch: &PhysicalChannel,
    e1: &SignalEnsemble,
    e2: &SignalEnsemble,
    e3: &SignalEnsemble,
    innocent: &InnocentConfig,
) -> Result<CqTable> {
    compile_cq_table_with_limits(ch, e1, e2, e3, innocent, TableLimits::default())
}

pub fn compile_cq_table_with_limits(
    ch: &PhysicalChannel,
    e1: &SignalEnsemble,
    e2: &SignalEnsemble,
    e3: &SignalEnsemble,
    innocent: &InnocentConfig,
    limits: TableLimits,
) -> Result<CqTable> {
    let report = validate_channel(ch);
    if !report.dims_consistent {
        return Err(Error::DimensionMismatch(report.dim_issues.join("; ")));
    }
    let ens = [e1, e2, e3];
    for (i, e) in ens.iter().enumerate() {
        if e.dim() != ch.input_dims[i] {
            return Err(Error::DimensionMismatch(format!(
                "ensemble {} has dim {}, channel input {} has dim {}",
                i + 1,
                e.dim(),
                i + 1,
                ch.input_dims[i]
            )));
        }
    }
    let (d_b, d_e) = ch.output_dims;
    let sizes = [e1.alphabet_size(), e2.alphabet_size(), e3.alphabet_size()];
    let mut joint = Vec::with_capacity(sizes.iter().product());
    for x1 in 0..sizes[0] {
        for x2 in 0..sizes[1] {
            for x3 in 0..sizes[2] {
                let input = tensor_all([e1.state(x1).matrix(), e2.state(x2).matrix(), e3.state(x3).matrix()]);
                joint.push(crate::qlinalg::hermitian_part(&ch.apply(&input)));
            }
        }
    }
    let phis: [DensityMatrix; 3] = match innocent {
        InnocentConfig::States(s) => s.clone(),
        InnocentConfig::Symbols(idx) => {
            let mut out = Vec::with_capacity(3);
            for i in 0..3 {
                if idx[i] >= sizes[i] {
                    return Err(Error::OutOfRange(format!(
                        "innocent symbol {} for transmitter {} with alphabet size {}",
                        idx[i],
                        i + 1,
                        sizes[i]
                    )));
                }
                out.push(ens[i].state(idx[i]).clone());
            }
            [out[0].clone(), out[1].clone(), out[2].clone()]
        }
    };
    for (i, p) in phis.iter().enumerate() {
        if p.dim() != ch.input_dims[i] {
            return Err(Error::DimensionMismatch(format!(
                "innocent state {} has dim {}, expected {}",
                i + 1,
                p.dim(),
                ch.input_dims[i]
            )));
        }
    }
    let idle = ch.apply(&tensor_all([phis[0].matrix(), phis[1].matrix(), phis[2].matrix()]));
    let rho0 = partial_trace(&idle, &[d_b, d_e], &[1])?;
    CqTable::with_limits(sizes, d_b, d_e, joint, crate::qlinalg::hermitian_part(&rho0), limits)
}

/// Averaged output states under an input distribution.
#[derive(Debug, Clone)]
pub struct Marginals {
    pub rho_b: DensityMatrix,
    pub rho_e: DensityMatrix,
    /// `b_given[i][x]` is `ρ_{B|X_{i+1}=x}`, `None` when that symbol has probability zero.
    pub b_given: [Vec<Option<DensityMatrix>>; 3],
    pub e_given: [Vec<Option<DensityMatrix>>; 3],
}

impl Marginals {
    pub fn b_given_all<'a>(&self, table: &'a CqTable, x: [usize; 3]) -> &'a DensityMatrix {
        table.b_state(x)
    }

    pub fn e_given_all<'a>(&self, table: &'a CqTable, x: [usize; 3]) -> &'a DensityMatrix {
        table.e_state(x)
    }
}

pub fn marginals(table: &CqTable, dist: &InputDistribution) -> Result<Marginals> {
    dist.validate()?;
    if dist.sizes() != table.alphabet_sizes() {
        return Err(Error::Incompatible(format!(
            "distribution alphabets {:?} vs table {:?}",
            dist.sizes(),
            table.alphabet_sizes()
        )));
    }
    let sizes = table.alphabet_sizes();
    let (db, de) = (table.d_b(), table.d_e());
    let mut rho_b = CMatrix::zeros(db, db);
    let mut rho_e = CMatrix::zeros(de, de);
    let mut wb: [Vec<(f64, CMatrix)>; 3] = [0, 1, 2].map(|i| vec![(0.0, CMatrix::zeros(db, db)); sizes[i]]);
    let mut we: [Vec<CMatrix>; 3] = [0, 1, 2].map(|i| vec![CMatrix::zeros(de, de); sizes[i]]);
    for i in 0..table.len() {
        let x = table.symbol(i);
        let p = dist.joint(x);
        if p <= 0.0 {
            continue;
        }
        let b = table.b_state_flat(i).matrix().scale(p);
        let e = table.e_state_flat(i).matrix().scale(p);
        rho_b += &b;
        rho_e += &e;
        for r in 0..3 {
            wb[r][x[r]].0 += p;
            wb[r][x[r]].1 += &b;
            we[r][x[r]] += &e;
        }
    }
    let mut b_given: [Vec<Option<DensityMatrix>>; 3] = Default::default();
    let mut e_given: [Vec<Option<DensityMatrix>>; 3] = Default::default();
    for r in 0..3 {
        for (x, (w, b)) in wb[r].iter().enumerate() {
            if *w > 0.0 {
                b_given[r].push(Some(DensityMatrix::from_trusted(b.unscale(*w))));
                e_given[r].push(Some(DensityMatrix::from_trusted(we[r][x].unscale(*w))));
            } else {
                b_given[r].push(None);
                e_given[r].push(None);
            }
        }
    }
    Ok(Marginals {
        rho_b: DensityMatrix::from_trusted(rho_b),
        rho_e: DensityMatrix::from_trusted(rho_e),
        b_given,
        e_given,
    })
}

/// `max |ρ − σ|` helper used by callers comparing compiled tables.
pub fn table_distance(a: &CqTable, b: &CqTable) -> Option<f64> {
    if a.alphabet_sizes() != b.alphabet_sizes() || a.d_b() != b.d_b() || a.d_e() != b.d_e() {
        return None;
    }
    let mut worst = max_abs_diff(a.rho0().matrix(), b.rho0().matrix());
    for i in 0..a.len() {
        worst = worst.max(max_abs_diff(a.joint_state_flat(i).matrix(), b.joint_state_flat(i).matrix()));
    }
    Some(worst)
}
