//! Flag/file configuration parsing. A JSON config file can pre-fill any
//! flag; explicitly passed flags win.

use qem_core::channel::{NoiseKind, QuantumChannel};
use qem_core::pauli::PauliString;
use qem_core::random;
use qem_core::state::{
    minus_state, one_state, plus_i_state, plus_state, zero_state, DensityMatrix, Observable,
};
use serde::Deserialize;
use std::fmt;
use std::path::PathBuf;

#[derive(Debug)]
pub enum CliError {
    Core(qem_core::Error),
    Io(std::io::Error),
    Json(serde_json::Error),
    Usage(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io: {e}"),
            CliError::Json(e) => write!(f, "config: {e}"),
            CliError::Usage(msg) => write!(f, "{msg}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl From<qem_core::Error> for CliError {
    fn from(e: qem_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Json(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Optional defaults loaded from `--config`; keys mirror the flag names.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub noise: Option<String>,
    pub shape: Option<String>,
    pub bias: Option<f64>,
    pub relax: Option<String>,
    pub search: Option<String>,
    pub obs: Option<String>,
    pub state: Option<String>,
    pub rounds: Option<u64>,
    pub delta: Option<f64>,
    pub fail: Option<f64>,
    pub n: Option<usize>,
    #[serde(rename = "L")]
    pub layers: Option<usize>,
    pub eps: Option<String>,
    pub order: Option<usize>,
    pub boosts: Option<String>,
    pub family: Option<String>,
    pub strength: Option<f64>,
    pub lambda: Option<f64>,
    pub rest: Option<String>,
    pub copies: Option<usize>,
    pub shots: Option<u64>,
    pub pair: Option<String>,
    pub search_samples: Option<usize>,
    /// Explicit layered circuit; matrices are row-major `[re, im]` pairs.
    pub circuit: Option<CircuitJson>,
}

/// JSON form of a layered circuit.
#[derive(Debug, Deserialize)]
pub struct CircuitJson {
    pub n: usize,
    pub layers: Vec<Vec<Vec<[f64; 2]>>>,
    pub noise_strengths: Vec<Vec<f64>>,
}

impl CircuitJson {
    pub fn build(&self) -> CliResult<qem_core::channel::LayeredCircuitConfig> {
        let mut layers = Vec::with_capacity(self.layers.len());
        for rows in &self.layers {
            layers.push(qem_core::linalg::matrix_from_rows(rows)?);
        }
        Ok(qem_core::channel::LayeredCircuitConfig::new(
            self.n,
            layers,
            self.noise_strengths.clone(),
        )?)
    }
}

impl FileConfig {
    pub fn load(path: Option<&PathBuf>) -> CliResult<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                Ok(serde_json::from_str(&text)?)
            }
        }
    }
}

/// A parsed `kind:eps[:param]` noise description.
#[derive(Debug, Clone)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub eps: f64,
    pub param: Option<usize>,
    pub raw: String,
}

impl NoiseSpec {
    pub fn parse(raw: &str) -> CliResult<Self> {
        let parts: Vec<&str> = raw.split(':').collect();
        if parts.len() < 2 {
            return Err(CliError::usage(format!(
                "noise '{raw}' must look like kind:eps[:param]"
            )));
        }
        let kind = match parts[0] {
            "dephasing" => NoiseKind::Dephasing,
            "depolarizing" => NoiseKind::DepolarizingQubit,
            "depolarizing_d" => NoiseKind::DepolarizingD,
            "local_depolarizing" => NoiseKind::LocalDepolarizingLayer,
            other => {
                return Err(CliError::usage(format!(
                    "unknown noise kind '{other}' (dephasing, depolarizing, depolarizing_d, local_depolarizing)"
                )))
            }
        };
        let eps: f64 = parts[1]
            .parse()
            .map_err(|_| CliError::usage(format!("bad noise rate '{}'", parts[1])))?;
        let param = match parts.get(2) {
            None => None,
            Some(p) => Some(
                p.parse()
                    .map_err(|_| CliError::usage(format!("bad noise parameter '{p}'")))?,
            ),
        };
        Ok(Self {
            kind,
            eps,
            param,
            raw: raw.to_string(),
        })
    }

    /// Build the channel on `n` qubits. Qubit-level models act independently
    /// on each qubit when `n > 1`.
    pub fn channel(&self, n: usize) -> CliResult<QuantumChannel> {
        let ch = match self.kind {
            NoiseKind::Dephasing => {
                let single = QuantumChannel::dephasing(self.eps)?;
                let mut out = QuantumChannel::identity_channel(1);
                for _ in 0..n {
                    out = out.tensor(&single);
                }
                out
            }
            NoiseKind::DepolarizingQubit => QuantumChannel::local_depolarizing_layer(n, self.eps)?,
            NoiseKind::DepolarizingD => {
                let d = self.param.unwrap_or(1 << n);
                if d != (1 << n) {
                    return Err(CliError::usage(format!(
                        "depolarizing_d dimension {d} does not match 2^n = {}",
                        1 << n
                    )));
                }
                QuantumChannel::depolarizing(d, self.eps)?
            }
            NoiseKind::LocalDepolarizingLayer => {
                QuantumChannel::local_depolarizing_layer(self.param.unwrap_or(n), self.eps)?
            }
        };
        Ok(ch)
    }
}

/// Parse `Q,K[,n]`; `expect_qubits` controls whether the third entry is
/// required.
pub fn parse_shape(raw: &str, expect_qubits: bool) -> CliResult<(usize, usize, Option<usize>)> {
    let parts: Vec<&str> = raw.split(',').collect();
    let want = if expect_qubits { 3 } else { 2 };
    if parts.len() != want {
        return Err(CliError::usage(format!(
            "shape '{raw}' must have {want} comma-separated entries"
        )));
    }
    let mut nums = Vec::new();
    for p in &parts {
        nums.push(
            p.trim()
                .parse::<usize>()
                .map_err(|_| CliError::usage(format!("bad shape entry '{p}'")))?,
        );
    }
    Ok((nums[0], nums[1], nums.get(2).copied()))
}

/// Named states: zero, one, plus, minus, plus_i, mixed, haar:<seed>.
pub fn parse_state(raw: &str, qubits: usize) -> CliResult<DensityMatrix> {
    let dim = 1usize << qubits;
    if let Some(seed) = raw.strip_prefix("haar:") {
        let seed: u64 = seed
            .parse()
            .map_err(|_| CliError::usage(format!("bad haar seed in '{raw}'")))?;
        return Ok(random::haar_random_state(dim, seed));
    }
    Ok(match raw {
        "zero" => zero_state(qubits),
        "one" => one_state(qubits),
        "plus" => plus_state(qubits),
        "minus" => minus_state(qubits),
        "plus_i" => plus_i_state(qubits),
        "mixed" => DensityMatrix::maximally_mixed(dim),
        other => {
            return Err(CliError::usage(format!(
                "unknown state '{other}' (zero, one, plus, minus, plus_i, mixed, haar:<seed>)"
            )))
        }
    })
}

/// Observables written as a Pauli string over `/2`, e.g. `X/2` or `XZ/2`.
pub fn parse_observable(raw: &str) -> CliResult<Observable> {
    let name = raw
        .strip_suffix("/2")
        .ok_or_else(|| CliError::usage(format!("observable '{raw}' must end in /2")))?;
    let ps = PauliString::parse(name)
        .map_err(|_| CliError::usage(format!("bad Pauli string '{name}'")))?;
    Ok(ps.normalized_observable())
}

/// Grids: either `lo:hi` (inclusive integer range) or a comma list of
/// floats.
pub fn parse_grid(raw: &str) -> CliResult<Vec<f64>> {
    if raw.trim().is_empty() {
        return Err(CliError::Core(qem_core::Error::EmptyGrid));
    }
    if let Some((lo, hi)) = raw.split_once(':') {
        let lo: i64 = lo
            .parse()
            .map_err(|_| CliError::usage(format!("bad grid bound '{lo}'")))?;
        let hi: i64 = hi
            .parse()
            .map_err(|_| CliError::usage(format!("bad grid bound '{hi}'")))?;
        if hi < lo {
            return Err(CliError::Core(qem_core::Error::EmptyGrid));
        }
        return Ok((lo..=hi).map(|v| v as f64).collect());
    }
    let mut out = Vec::new();
    for part in raw.split(',') {
        out.push(
            part.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("bad grid value '{part}'")))?,
        );
    }
    Ok(out)
}

pub fn parse_float_list(raw: &str) -> CliResult<Vec<f64>> {
    raw.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("bad value '{p}'")))
        })
        .collect()
}
