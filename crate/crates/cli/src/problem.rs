//! Problem files: a series, an affine symbol and the tasks to run on it.

use compop::engine::Ambient;
use compop::fock_basis::AffineSymbol;
use compop::matrix_core::{c, CMatrix, CVector, Tolerances};
use compop::phi_model::{PhiDescriptor, PhiSeries};
use compop::verify_oracle::McConfig;
use compop::Error;
use serde::Deserialize;
use serde_json::Value;

/// A matrix or vector entry: a real number or a `[re, im]` pair.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Pair([f64; 2]),
}

impl Entry {
    fn parts(self) -> [f64; 2] {
        match self {
            Entry::Real(x) => [x, 0.0],
            Entry::Pair(p) => p,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolSpec {
    pub a: Vec<Vec<Entry>>,
    /// Omitted for a linear symbol.
    #[serde(default)]
    pub b: Option<Vec<Entry>>,
}

impl SymbolSpec {
    pub fn build(&self) -> Result<AffineSymbol, Error> {
        let d = self.a.len();
        if let Some(row) = self.a.iter().find(|row| row.len() != d) {
            return Err(Error::DimensionMismatch(format!("A has {d} rows but a row of length {}", row.len())));
        }
        let finite = |e: &Entry| e.parts().iter().all(|x| x.is_finite());
        if !self.a.iter().flatten().chain(self.b.iter().flatten()).all(finite) {
            return Err(Error::Parse("non-finite entry in the symbol".into()));
        }
        let a = CMatrix::from_fn(d, d, |i, j| {
            let [re, im] = self.a[i][j].parts();
            c(re, im)
        });
        let b = match &self.b {
            Some(v) => CVector::from_iterator(v.len(), v.iter().map(|e| {
                let [re, im] = e.parts();
                c(re, im)
            })),
            None => CVector::zeros(d),
        };
        AffineSymbol::new(a, b)
    }
}

/// Overrides of the engine tolerances plus the relative tolerance used when
/// an engine number is compared with its oracle.
#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceSpec {
    pub rank_cutoff: Option<f64>,
    pub residual: Option<f64>,
    pub loewner: Option<f64>,
    pub oracle: Option<f64>,
}

impl ToleranceSpec {
    pub fn engine(&self) -> Tolerances {
        let d = Tolerances::default();
        Tolerances {
            rank_cutoff: self.rank_cutoff.unwrap_or(d.rank_cutoff),
            residual: self.residual.unwrap_or(d.residual),
            loewner: self.loewner.unwrap_or(d.loewner),
        }
    }
}

fn half() -> f64 {
    0.5
}

fn default_iterates() -> usize {
    30
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum Task {
    Verdict,
    Classify,
    Polar,
    Power {
        #[serde(default = "half")]
        t: f64,
    },
    Aluthge {
        #[serde(default = "half")]
        s: f64,
        #[serde(default = "half")]
        t: f64,
    },
    Equal {
        other: SymbolSpec,
    },
    Sab,
    L2 {
        /// Sampled Gram matrices instead of exact moments; the seed comes from the problem.
        #[serde(default)]
        monte_carlo: Option<McConfig>,
    },
    Iterate {
        #[serde(default = "default_iterates")]
        n_max: usize,
    },
    Oracle,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Verdict => "verdict",
            Task::Classify => "classify",
            Task::Polar => "polar",
            Task::Power { .. } => "power",
            Task::Aluthge { .. } => "aluthge",
            Task::Equal { .. } => "equal",
            Task::Sab => "sab",
            Task::L2 { .. } => "l2",
            Task::Iterate { .. } => "iterate",
            Task::Oracle => "oracle",
        }
    }
}

fn default_tasks() -> Vec<Value> {
    vec![Value::from("verdict"), Value::from("oracle")]
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    phi: PhiDescriptor,
    symbol: SymbolSpec,
    #[serde(default)]
    truncation: Option<usize>,
    #[serde(default)]
    tolerance: ToleranceSpec,
    /// Task names or objects tagged by `task`.
    #[serde(default = "default_tasks")]
    tasks: Vec<Value>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    ambient: Ambient,
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub phi: PhiSeries,
    pub symbol: AffineSymbol,
    pub truncation: usize,
    pub tol: Tolerances,
    pub oracle_rtol: f64,
    pub tasks: Vec<Task>,
    pub seed: u64,
    pub ambient: Ambient,
}

/// Relative gap accepted between an engine number and its oracle.
pub const DEFAULT_ORACLE_RTOL: f64 = 5e-3;

/// Largest degree whose basis stays around a few thousand elements.
pub fn default_truncation(d: usize) -> usize {
    match d {
        0 | 1 => 24,
        2 => 12,
        3 => 8,
        4 => 6,
        _ => 4,
    }
}

impl Problem {
    pub fn parse(text: &str) -> Result<Problem, Error> {
        let raw: RawProblem = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let phi = PhiSeries::from_descriptor(&raw.phi)?;
        let symbol = raw.symbol.build()?;
        let tasks = raw
            .tasks
            .into_iter()
            .map(|v| {
                let v = match v {
                    Value::String(name) => serde_json::json!({ "task": name }),
                    other => other,
                };
                serde_json::from_value::<Task>(v).map_err(|e| Error::Parse(format!("task: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(other) = tasks.iter().find_map(|t| match t {
            Task::Equal { other } => Some(other),
            _ => None,
        }) {
            let o = other.build()?;
            if o.dim() != symbol.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "symbols of dimension {} and {}",
                    symbol.dim(),
                    o.dim()
                )));
            }
        }
        let oracle_rtol = raw.tolerance.oracle.unwrap_or(DEFAULT_ORACLE_RTOL);
        if oracle_rtol.is_nan() || oracle_rtol <= 0.0 {
            return Err(Error::Parse(format!("oracle tolerance must be positive, got {oracle_rtol}")));
        }
        Ok(Problem {
            truncation: raw.truncation.unwrap_or_else(|| default_truncation(symbol.dim())),
            phi,
            symbol,
            tol: raw.tolerance.engine(),
            oracle_rtol,
            tasks,
            seed: raw.seed,
            ambient: raw.ambient,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_and_objects_both_parse() {
        let p = Problem::parse(
            r#"{"phi":{"kind":"exp"},"symbol":{"a":[[0.5]],"b":[[0.5,0]]},
                "tasks":["verdict",{"task":"power","t":0.25},"oracle"]}"#,
        )
        .unwrap();
        assert_eq!(p.tasks.len(), 3);
        assert!(matches!(p.tasks[1], Task::Power { t } if t == 0.25));
        assert_eq!(p.truncation, 24);
        assert_eq!(p.oracle_rtol, DEFAULT_ORACLE_RTOL);
    }

    #[test]
    fn input_errors_carry_their_codes() {
        let code = |s: &str| Problem::parse(s).unwrap_err().code();
        assert_eq!(code("{not json"), "PARSE_ERROR");
        assert_eq!(code(r#"{"phi":{"kind":"exp"},"symbol":{"a":[[1,0]]}}"#), "DIMENSION_MISMATCH");
        assert_eq!(code(r#"{"phi":{"kind":"exp"},"symbol":{"a":[[1]],"b":[1,2]}}"#), "DIMENSION_MISMATCH");
        assert_eq!(code(r#"{"phi":{"kind":"exp"},"symbol":{"a":[[1]]},"tasks":["nope"]}"#), "PARSE_ERROR");
        assert_eq!(code(r#"{"phi":{"kind":"exp"},"symbol":{"a":[[1]]},"extra":1}"#), "PARSE_ERROR");
    }
}
