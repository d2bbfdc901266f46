//! JSON document formats: triples, experiment plans and machine-readable reports.
//!
//! Documents are written at full precision so that they round-trip exactly.
//! Reports are rounded to 12 significant digits.

use num_complex::Complex;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::matcore::{Density2, Hermitian2, PureState, QubitState};
use crate::optimizer::Optimum;
use crate::scalar::Real;
use crate::simulator::{ExperimentPlan, NoiseModel, DEFAULT_BATCH_SIZE, DEFAULT_PROBE_GRID, DEFAULT_SHOTS, DEFAULT_SIGNIFICANCE};
use crate::witness::WitnessTriple;

pub const DOCUMENT_VERSION: u64 = 1;
pub const REPORT_DIGITS: usize = 12;

/// Rounds to [`REPORT_DIGITS`] significant digits. Non-finite values pass through.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", REPORT_DIGITS - 1, x).parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().unwrap_or_default());
            *v = serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with floats rounded to 12 significant digits; non-finite numbers become `null`.
pub fn report_json<S: Serialize>(report: &S) -> String {
    let mut v = serde_json::to_value(report).expect("report types serialize");
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}

fn doc_error(e: serde_json::Error) -> Error {
    Error::Document {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn invalid(message: impl Into<String>) -> Error {
    Error::Document {
        line: 0,
        column: 0,
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub a11: f64,
    pub a22: f64,
    pub a12_re: f64,
    #[serde(default)]
    pub a12_im: f64,
}

impl MatrixDoc {
    pub fn from_matrix<T: Real>(m: &Hermitian2<T>) -> Self {
        Self {
            a11: m.a11().as_f64(),
            a22: m.a22().as_f64(),
            a12_re: m.a12().re.as_f64(),
            a12_im: m.a12().im.as_f64(),
        }
    }

    pub fn to_matrix(&self) -> Result<Hermitian2<f64>> {
        Hermitian2::new(self.a11, self.a22, Complex::new(self.a12_re, self.a12_im))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StateDoc {
    Pure {
        alpha_re: f64,
        #[serde(default)]
        alpha_im: f64,
        beta_re: f64,
        #[serde(default)]
        beta_im: f64,
    },
    Mixed {
        rho11: f64,
        rho22: f64,
        rho12_re: f64,
        #[serde(default)]
        rho12_im: f64,
    },
}

impl StateDoc {
    pub fn from_state<T: Real>(s: &QubitState<T>) -> Self {
        match s {
            QubitState::Pure(p) => StateDoc::Pure {
                alpha_re: p.alpha().re.as_f64(),
                alpha_im: p.alpha().im.as_f64(),
                beta_re: p.beta().re.as_f64(),
                beta_im: p.beta().im.as_f64(),
            },
            QubitState::Mixed(rho) => {
                let h = rho.matrix();
                StateDoc::Mixed {
                    rho11: h.a11().as_f64(),
                    rho22: h.a22().as_f64(),
                    rho12_re: h.a12().re.as_f64(),
                    rho12_im: h.a12().im.as_f64(),
                }
            }
        }
    }

    /// Pure states are renormalized, so rounded printed amplitudes load.
    pub fn to_state(&self) -> Result<QubitState<f64>> {
        match *self {
            StateDoc::Pure {
                alpha_re,
                alpha_im,
                beta_re,
                beta_im,
            } => PureState::normalized(Complex::new(alpha_re, alpha_im), Complex::new(beta_re, beta_im)).map(QubitState::Pure),
            StateDoc::Mixed {
                rho11,
                rho22,
                rho12_re,
                rho12_im,
            } => Density2::new(Hermitian2::new(rho11, rho22, Complex::new(rho12_re, rho12_im))?).map(QubitState::Mixed),
        }
    }
}

impl<T: Real> Serialize for QubitState<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        StateDoc::from_state(self).serialize(serializer)
    }
}

/// Versioned JSON carrier for a witness triple.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TripleDocument {
    pub version: u64,
    #[serde(rename = "A")]
    pub a: MatrixDoc,
    #[serde(rename = "B")]
    pub b: MatrixDoc,
    pub state: StateDoc,
    pub metadata: Map<String, Value>,
}

#[derive(Deserialize)]
struct RawTriple {
    version: u64,
    #[serde(rename = "A")]
    a: MatrixDoc,
    #[serde(rename = "B")]
    b: MatrixDoc,
    state: StateDoc,
    #[serde(default)]
    metadata: Map<String, Value>,
}

const TRIPLE_FIELDS: [&str; 5] = ["version", "A", "B", "state", "metadata"];

#[derive(Deserialize)]
struct VersionProbe {
    version: Option<Value>,
}

fn check_version(text: &str) -> Result<()> {
    let probe: VersionProbe = serde_json::from_str(text).map_err(doc_error)?;
    match probe.version {
        Some(Value::Number(n)) if n.as_u64() == Some(DOCUMENT_VERSION) => Ok(()),
        Some(v) => Err(invalid(format!("unsupported document version {v}, expected {DOCUMENT_VERSION}"))),
        None => Err(invalid("missing field `version`")),
    }
}

impl TripleDocument {
    /// Parses a document. Top-level fields outside the schema are moved into `metadata`.
    pub fn parse(text: &str) -> Result<Self> {
        check_version(text)?;
        let raw: RawTriple = serde_json::from_str(text).map_err(doc_error)?;
        let all: Map<String, Value> = serde_json::from_str(text).map_err(doc_error)?;
        let mut metadata = raw.metadata;
        for (k, v) in all.into_iter().filter(|(k, _)| !TRIPLE_FIELDS.contains(&k.as_str())) {
            metadata.entry(k).or_insert(v);
        }
        Ok(Self {
            version: raw.version,
            a: raw.a,
            b: raw.b,
            state: raw.state,
            metadata,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }

    pub fn from_triple<T: Real>(t: &WitnessTriple<T>) -> Self {
        Self {
            version: DOCUMENT_VERSION,
            a: MatrixDoc::from_matrix(&t.a.m),
            b: MatrixDoc::from_matrix(&t.b.m),
            state: StateDoc::from_state(&t.state),
            metadata: Map::new(),
        }
    }

    /// Optimizer output with an `optimizer` metadata block.
    pub fn from_optimum<T: Real>(opt: &Optimum<T>, search: &str, step: f64, tol: Option<f64>) -> Self {
        let mut doc = Self::from_triple(&opt.triple);
        let p = &opt.params;
        let block = serde_json::json!({
            "search": search,
            "step": step,
            "tol": tol,
            "evaluations": opt.evaluations,
            "objective": opt.objective.as_f64(),
            "slacks": [opt.constraint_slacks.0.as_f64(), opt.constraint_slacks.1.as_f64()],
            "params": {
                "a1": p.a1.as_f64(),
                "a2": p.a2.as_f64(),
                "b": p.b.as_f64(),
                "xi": p.xi.as_f64(),
            },
        });
        doc.metadata.insert("optimizer".into(), block);
        doc
    }

    pub fn to_triple(&self) -> Result<WitnessTriple<f64>> {
        Ok(WitnessTriple::new(self.a.to_matrix()?, self.b.to_matrix()?, self.state.to_state()?))
    }
}

/// Experiment configuration. Missing fields take the simulator defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanDocument {
    pub version: u64,
    /// Inline triple; callers may supply one separately instead.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triple: Option<Value>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub shots: Option<usize>,
    #[serde(default)]
    pub noise: Option<String>,
    #[serde(default)]
    pub significance: Option<f64>,
    /// Number of Fibonacci-lattice probes added to the explicit probe list.
    #[serde(default)]
    pub probe_grid: Option<usize>,
    /// Explicit probes. Defaults to the triple's own state.
    #[serde(default)]
    pub probe_states: Option<Vec<StateDoc>>,
    #[serde(default)]
    pub exact: Option<bool>,
    #[serde(default)]
    pub batch_size: Option<usize>,
}

impl PlanDocument {
    pub fn parse(text: &str) -> Result<Self> {
        check_version(text)?;
        serde_json::from_str(text).map_err(doc_error)
    }

    pub fn inline_triple(&self) -> Result<Option<WitnessTriple<f64>>> {
        self.triple
            .as_ref()
            .map(|v| TripleDocument::parse(&v.to_string()).and_then(|d| d.to_triple()))
            .transpose()
    }

    /// Builds a plan around `triple`. `fallback_seed` is used if the document has none.
    pub fn to_plan(&self, triple: WitnessTriple<f64>, fallback_seed: Option<u64>) -> Result<ExperimentPlan> {
        let seed = self
            .seed
            .or(fallback_seed)
            .ok_or_else(|| Error::Plan("a seed is required".into()))?;
        let mut probes = match &self.probe_states {
            Some(list) => list.iter().map(StateDoc::to_state).collect::<Result<Vec<_>>>()?,
            None => vec![triple.state],
        };
        probes.extend(crate::simulator::fibonacci_probes(self.probe_grid.unwrap_or(DEFAULT_PROBE_GRID)));
        let noise = match &self.noise {
            Some(s) => s.parse()?,
            None => NoiseModel::None,
        };
        let plan = ExperimentPlan {
            triple,
            probe_states: probes,
            shots_per_observable: self.shots.unwrap_or(DEFAULT_SHOTS),
            noise,
            seed,
            significance: self.significance.unwrap_or(DEFAULT_SIGNIFICANCE),
            exact: self.exact.unwrap_or(false),
            batch_size: self.batch_size.unwrap_or(DEFAULT_BATCH_SIZE),
        };
        plan.validate()?;
        Ok(plan)
    }
}
