//! Channel and distribution file formats.

use serde::Deserialize;

use covert_qmac::channel::{compile_cq_table, CqTable, InnocentConfig, PhysicalChannel, SignalEnsemble};
use covert_qmac::infomeasures::InputDistribution;
use covert_qmac::qlinalg::{c, CMatrix, DensityMatrix};

use crate::CliError;

/// A complex entry: `[re, im]` or a bare real.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Real(f64),
    Complex([f64; 2]),
}

pub type MatrixRows = Vec<Vec<Scalar>>;

pub fn to_matrix(rows: &MatrixRows, what: &str) -> Result<CMatrix, CliError> {
    let r = rows.len();
    let cols = rows.first().map_or(0, |row| row.len());
    if r == 0 || cols == 0 || rows.iter().any(|row| row.len() != cols) {
        return Err(CliError::Parse(format!("{what}: matrix rows must be nonempty and of equal length")));
    }
    let mut m = CMatrix::zeros(r, cols);
    for (i, row) in rows.iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            m[(i, j)] = match *s {
                Scalar::Real(x) => c(x, 0.0),
                Scalar::Complex([re, im]) => c(re, im),
            };
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnocentSpec {
    Symbols([usize; 3]),
    States([MatrixRows; 3]),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase", deny_unknown_fields)]
pub enum ChannelSpecFile {
    Kraus {
        input_dims: [usize; 3],
        output_dims: [usize; 2],
        kraus: Vec<MatrixRows>,
        ensembles: [Vec<MatrixRows>; 3],
        innocent: InnocentSpec,
    },
    Cq {
        alphabet_sizes: [usize; 3],
        d_b: usize,
        d_e: usize,
        /// Joint `BE` states, x1-major with x3 fastest.
        #[serde(default)]
        joint: Option<Vec<MatrixRows>>,
        /// Product form: `ρ_{B|x} ⊗ ρ_{E|x}` in the same order.
        #[serde(default)]
        b_states: Option<Vec<MatrixRows>>,
        #[serde(default)]
        e_states: Option<Vec<MatrixRows>>,
        rho0: MatrixRows,
    },
}

/// What a spec compiles to, plus the Kraus validation when there was one.
pub struct LoadedSpec {
    pub table: CqTable,
    pub channel: Option<PhysicalChannel>,
}

pub fn parse_spec(text: &str) -> Result<ChannelSpecFile, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(format!("channel spec: {e}")))
}

fn state(rows: &MatrixRows, what: &str) -> Result<DensityMatrix, CliError> {
    DensityMatrix::new(to_matrix(rows, what)?).map_err(|e| CliError::Domain(format!("{what}: {e}")))
}

fn ensemble(list: &[MatrixRows], i: usize) -> Result<SignalEnsemble, CliError> {
    let states = list
        .iter()
        .enumerate()
        .map(|(k, m)| state(m, &format!("ensemble {} state {k}", i + 1)))
        .collect::<Result<Vec<_>, _>>()?;
    SignalEnsemble::new(states).map_err(|e| CliError::Domain(format!("ensemble {}: {e}", i + 1)))
}

/// Builds the physical channel of a Kraus spec without compiling it, so that
/// `check` can report residuals even when compilation would fail.
pub fn kraus_channel(spec: &ChannelSpecFile) -> Result<Option<PhysicalChannel>, CliError> {
    match spec {
        ChannelSpecFile::Kraus { input_dims, output_dims, kraus, .. } => {
            let ops = kraus
                .iter()
                .enumerate()
                .map(|(i, k)| to_matrix(k, &format!("kraus[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Some(PhysicalChannel {
                input_dims: *input_dims,
                output_dims: (output_dims[0], output_dims[1]),
                kraus: ops,
            }))
        }
        ChannelSpecFile::Cq { .. } => Ok(None),
    }
}

pub fn load_spec(spec: &ChannelSpecFile) -> Result<LoadedSpec, CliError> {
    let dom = |e: covert_qmac::Error| CliError::Domain(e.to_string());
    match spec {
        ChannelSpecFile::Kraus { ensembles, innocent, .. } => {
            let ch = kraus_channel(spec)?.expect("kraus form");
            let e: Vec<SignalEnsemble> =
                ensembles.iter().enumerate().map(|(i, l)| ensemble(l, i)).collect::<Result<_, _>>()?;
            let innocent = match innocent {
                InnocentSpec::Symbols(s) => InnocentConfig::Symbols(*s),
                InnocentSpec::States([a, b, cc]) => InnocentConfig::States([
                    state(a, "innocent state 1")?,
                    state(b, "innocent state 2")?,
                    state(cc, "innocent state 3")?,
                ]),
            };
            let table = compile_cq_table(&ch, &e[0], &e[1], &e[2], &innocent).map_err(dom)?;
            Ok(LoadedSpec { table, channel: Some(ch) })
        }
        ChannelSpecFile::Cq { alphabet_sizes, d_b, d_e, joint, b_states, e_states, rho0 } => {
            let rho0 = to_matrix(rho0, "rho0")?;
            let joint = match (joint, b_states, e_states) {
                (Some(j), None, None) => j
                    .iter()
                    .enumerate()
                    .map(|(i, m)| to_matrix(m, &format!("joint[{i}]")))
                    .collect::<Result<Vec<_>, _>>()?,
                (None, Some(bs), Some(es)) => {
                    if bs.len() != es.len() {
                        return Err(CliError::Parse(format!("{} b_states vs {} e_states", bs.len(), es.len())));
                    }
                    let mut out = Vec::with_capacity(bs.len());
                    for (i, (b, e)) in bs.iter().zip(es).enumerate() {
                        let b = to_matrix(b, &format!("b_states[{i}]"))?;
                        let e = to_matrix(e, &format!("e_states[{i}]"))?;
                        out.push(covert_qmac::qlinalg::tensor(&b, &e));
                    }
                    out
                }
                _ => return Err(CliError::Parse("cq form needs either joint or both b_states and e_states".into())),
            };
            let table = CqTable::new(*alphabet_sizes, *d_b, *d_e, joint, rho0).map_err(dom)?;
            Ok(LoadedSpec { table, channel: None })
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistributionFile {
    p1: Vec<f64>,
    p2: Vec<f64>,
    /// One row per `(x1, x2)` with x2 fastest, or a single row shared by all.
    p3: Vec<Vec<f64>>,
}

pub fn parse_distribution(text: &str, sizes: [usize; 3]) -> Result<InputDistribution, CliError> {
    let f: DistributionFile =
        serde_json::from_str(text).map_err(|e| CliError::Parse(format!("distribution: {e}")))?;
    let rows = sizes[0] * sizes[1];
    let p3 = if f.p3.len() == 1 && rows > 1 { vec![f.p3[0].clone(); rows] } else { f.p3 };
    let d = InputDistribution::new(f.p1, f.p2, p3).map_err(|e| CliError::Domain(format!("distribution: {e}")))?;
    if d.sizes() != sizes {
        return Err(CliError::Domain(format!("distribution sizes {:?} do not match channel {:?}", d.sizes(), sizes)));
    }
    Ok(d)
}
