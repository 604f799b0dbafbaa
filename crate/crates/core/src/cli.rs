//! Config-driven experiment runner behind the `strong-algebra` binary.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::calculus::{default_tol, left_inverse, neumann_inverse};
use crate::element::Element;
use crate::error::{Error, ErrorClass, Result};
use crate::factorization::{solve_canonical_factorization, FactorizationOptions};
use crate::grade::Grade;
use crate::instance::InstanceSpec;
use crate::validate::validate_strong_inequality;
use crate::wiener::{
    choose_localization, wiener_invertibility_scan, wiener_left_inverse, wiener_right_inverse, LocalizationOptions,
    PatchOptions, Side, WienerElement,
};

pub const REPORT_SCHEMA: &str = "strong-algebra-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Validate,
    Invert,
    WienerInvert,
    Scan,
    Factorize,
    Localize,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Validate => "validate",
            Task::Invert => "invert",
            Task::WienerInvert => "wiener-invert",
            Task::Scan => "scan",
            Task::Factorize => "factorize",
            Task::Localize => "localize",
        }
    }
}

/// One experiment. Paths in `inputs` are relative to the config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Option<Task>,
    /// Needed by `validate`; other tasks read the instance from their inputs.
    #[serde(default)]
    pub instance: Option<InstanceSpec>,
    #[serde(default)]
    pub inputs: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub alpha: Option<Grade>,
    #[serde(default)]
    pub beta: Option<Grade>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub side: Option<Side>,
    #[serde(default)]
    pub grid_size: Option<usize>,
    #[serde(default)]
    pub half_width: Option<usize>,
    /// Center of the localization (`localize`).
    #[serde(default)]
    pub center: Option<f64>,
    #[serde(default)]
    pub start_epsilon: Option<f64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        ExperimentConfig::from_json(&fs::read_to_string(path)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub name: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub class: ErrorClass,
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema: String,
    pub task: String,
    pub timestamp: String,
    pub config_sha256: String,
    pub inputs: Vec<InputRecord>,
    pub verdict: String,
    pub exit_code: i32,
    pub error: Option<ErrorRecord>,
    pub result: Value,
    /// Elements produced by the task, in the element JSON format.
    pub outputs: BTreeMap<String, Value>,
}

impl ReportDocument {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// The report without its timestamp, for reproducibility checks.
    pub fn canonical_json(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.timestamp.clear();
        copy.to_json()
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Loaded {
    records: Vec<InputRecord>,
    texts: BTreeMap<String, String>,
}

fn load_inputs(config: &ExperimentConfig, base: &Path) -> Result<Loaded> {
    let mut records = Vec::new();
    let mut texts = BTreeMap::new();
    for (name, path) in &config.inputs {
        let full = if path.is_absolute() { path.clone() } else { base.join(path) };
        let text = fs::read_to_string(&full)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", full.display()))))?;
        records.push(InputRecord {
            name: name.clone(),
            path: path.display().to_string(),
            sha256: sha256_hex(text.as_bytes()),
        });
        texts.insert(name.clone(), text);
    }
    Ok(Loaded { records, texts })
}

fn input<'a>(loaded: &'a Loaded, name: &str) -> Result<&'a str> {
    loaded
        .texts
        .get(name)
        .map(String::as_str)
        .ok_or_else(|| Error::Schema(format!("missing input `{name}`")))
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

struct Outcome {
    pass: bool,
    result: Value,
    outputs: BTreeMap<String, Value>,
}

fn grades_for(ladder: &crate::instance::Ladder, config: &ExperimentConfig) -> Result<(Grade, Grade)> {
    let alpha = match config.alpha {
        Some(a) => a,
        None => *ladder
            .tracked()
            .first()
            .ok_or_else(|| Error::Schema("no grade given and the instance tracks none".into()))?,
    };
    ladder.check(&alpha)?;
    let beta = config.beta.unwrap_or_else(|| ladder.admissible(&alpha));
    ladder.check(&beta)?;
    Ok((alpha, beta))
}

fn run_validate(config: &ExperimentConfig) -> Result<Outcome> {
    let spec = config
        .instance
        .clone()
        .ok_or_else(|| Error::Schema("validate needs `instance`".into()))?;
    spec.validate()?;
    let ladder = spec.ladder();
    let (alpha, beta) = grades_for(&ladder, config)?;
    let report = validate_strong_inequality(&spec, &alpha, &beta, config.samples.unwrap_or(1000), config.seed.unwrap_or(0))?;
    Ok(Outcome {
        pass: report.pass,
        result: to_value(&report)?,
        outputs: BTreeMap::new(),
    })
}

fn run_invert(config: &ExperimentConfig, loaded: &Loaded) -> Result<Outcome> {
    let a = Element::from_json(input(loaded, "a")?)?;
    let (alpha, beta) = grades_for(a.ladder(), config)?;
    let tol = config.tol.unwrap_or_else(|| default_tol(a.algebra().kind()));
    let inv = neumann_inverse(&a, &alpha, &beta, tol)?;
    let norm = inv.inverse.norm(&beta)?;
    let one = Element::unit(a.algebra());
    let distance = one.sub(&inv.inverse)?.norm(&beta)?;
    let pass = norm <= inv.bound.bound && distance <= inv.distance.bound;
    let result = json!({
        "alpha": alpha,
        "beta": beta,
        "terms": inv.terms,
        "bound": inv.bound,
        "distance": inv.distance,
        "inverse_norm": norm,
        "inverse_distance": distance,
        "left_residual": inv.left_residual,
        "right_residual": inv.right_residual,
    });
    let mut outputs = BTreeMap::new();
    outputs.insert("inverse".to_string(), to_value(&inv.inverse.to_doc())?);
    Ok(Outcome { pass, result, outputs })
}

fn localization_options(config: &ExperimentConfig) -> LocalizationOptions {
    let mut opts = LocalizationOptions::default();
    if let Some(e) = config.start_epsilon {
        opts.start_epsilon = e;
    }
    opts
}

fn run_wiener_invert(config: &ExperimentConfig, loaded: &Loaded) -> Result<Outcome> {
    let a = WienerElement::from_json(input(loaded, "a")?)?;
    let patch = PatchOptions {
        half_width: config.half_width.unwrap_or(64),
        grid_size: config.grid_size,
        tol: config.tol.unwrap_or(1e-6),
        grade: config.alpha,
    };
    let loc = localization_options(config);
    let report = match config.side.unwrap_or(Side::Left) {
        Side::Left => wiener_left_inverse(&a, &loc, &patch)?,
        Side::Right => wiener_right_inverse(&a, &loc, &patch)?,
    };
    let pass = report.patch.residual <= patch.tol;
    let mut outputs = BTreeMap::new();
    outputs.insert("inverse".to_string(), to_value(&report.inverse.to_doc())?);
    Ok(Outcome {
        pass,
        result: to_value(&report)?,
        outputs,
    })
}

fn run_scan(config: &ExperimentConfig, loaded: &Loaded) -> Result<Outcome> {
    let a = WienerElement::from_json(input(loaded, "a")?)?;
    let grid = config
        .grid_size
        .unwrap_or_else(|| (4 * (2 * a.half_width() + 1)).next_power_of_two().max(256));
    let report = wiener_invertibility_scan(&a, grid, config.side.unwrap_or(Side::Left), config.tol.unwrap_or(1e-10))?;
    Ok(Outcome {
        pass: report.all_invertible,
        result: to_value(&report)?,
        outputs: BTreeMap::new(),
    })
}

fn run_localize(config: &ExperimentConfig, loaded: &Loaded) -> Result<Outcome> {
    let a = WienerElement::from_json(input(loaded, "a")?)?;
    let t0 = config.center.unwrap_or(0.0);
    let opts = localization_options(config);
    let (li, witness) = left_inverse(&a.evaluate(t0), opts.tol)?;
    let loc = choose_localization(&a, t0, &li, &opts)?;
    let pass = loc.certificate.contraction < 1.0;
    let mut outputs = BTreeMap::new();
    outputs.insert("localized".to_string(), to_value(&loc.localized.to_doc())?);
    Ok(Outcome {
        pass,
        result: json!({ "witness": witness, "certificate": loc.certificate }),
        outputs,
    })
}

fn run_factorize(config: &ExperimentConfig, loaded: &Loaded) -> Result<Outcome> {
    let a = WienerElement::from_json(input(loaded, "a")?)?;
    let (alpha, beta) = grades_for(a.ladder(), config)?;
    let mut opts = FactorizationOptions::default();
    if let Some(t) = config.tol {
        opts.tol = t;
    }
    if let Some(w) = config.half_width {
        opts.half_width = w;
    }
    let result = solve_canonical_factorization(&a, &alpha, &beta, &opts)?;
    let grid = config.grid_size.unwrap_or(1024);
    let check = result.verify(&a, grid)?;
    let pass = result.residual <= opts.tol && check.verdict;
    let mut outputs = BTreeMap::new();
    outputs.insert("a_minus".to_string(), to_value(&result.a_minus.to_doc())?);
    outputs.insert("a_plus".to_string(), to_value(&result.a_plus.to_doc())?);
    outputs.insert("a_minus_inv".to_string(), to_value(&result.a_minus_inv.to_doc())?);
    outputs.insert("a_plus_inv".to_string(), to_value(&result.a_plus_inv.to_doc())?);
    Ok(Outcome {
        pass,
        result: json!({ "factorization": result, "verification": check }),
        outputs,
    })
}

fn dispatch(task: Task, config: &ExperimentConfig, loaded: &Loaded) -> Result<Outcome> {
    match task {
        Task::Validate => run_validate(config),
        Task::Invert => run_invert(config, loaded),
        Task::WienerInvert => run_wiener_invert(config, loaded),
        Task::Scan => run_scan(config, loaded),
        Task::Factorize => run_factorize(config, loaded),
        Task::Localize => run_localize(config, loaded),
    }
}

/// Runs the task; failures end up in the report rather than as `Err`.
pub fn run(config: &ExperimentConfig, base: &Path) -> ReportDocument {
    let config_sha256 = sha256_hex(serde_json::to_string(config).unwrap_or_default().as_bytes());
    let timestamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let task_name = config.task.map(Task::name).unwrap_or("").to_string();
    let fail = |error: Error, inputs: Vec<InputRecord>| ReportDocument {
        schema: REPORT_SCHEMA.into(),
        task: task_name.clone(),
        timestamp: timestamp.clone(),
        config_sha256: config_sha256.clone(),
        inputs,
        verdict: "fail".into(),
        exit_code: error.class().exit_code(),
        error: Some(ErrorRecord {
            class: error.class(),
            kind: error.kind().into(),
            message: error.to_string(),
        }),
        result: Value::Null,
        outputs: BTreeMap::new(),
    };
    let Some(task) = config.task else {
        return fail(Error::Schema("config has no `task`".into()), Vec::new());
    };
    let loaded = match load_inputs(config, base) {
        Ok(l) => l,
        Err(e) => return fail(e, Vec::new()),
    };
    match dispatch(task, config, &loaded) {
        Ok(outcome) => ReportDocument {
            schema: REPORT_SCHEMA.into(),
            task: task_name.clone(),
            timestamp: timestamp.clone(),
            config_sha256: config_sha256.clone(),
            inputs: loaded.records,
            verdict: if outcome.pass { "pass" } else { "fail" }.into(),
            exit_code: if outcome.pass { 0 } else { ErrorClass::Numerical.exit_code() },
            error: None,
            result: outcome.result,
            outputs: outcome.outputs,
        },
        Err(e) => fail(e, loaded.records),
    }
}

#[derive(Clone, Debug)]
pub enum OutputElement {
    Element(Element),
    Wiener(WienerElement),
}

/// Loads an element written into a report's `outputs`.
pub fn load_output(doc: &Value) -> Result<OutputElement> {
    let text = doc.to_string();
    if doc.get("half_width").is_some() {
        Ok(OutputElement::Wiener(WienerElement::from_json(&text)?))
    } else {
        Ok(OutputElement::Element(Element::from_json(&text)?))
    }
}
