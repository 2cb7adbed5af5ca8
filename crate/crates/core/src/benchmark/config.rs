use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BenchError, Result};
use crate::clustering::KMeansParams;
use crate::dataset::{load_csv, one_hot_encode, synth_generate, Dataset};
use crate::models::ModelSpec;
use crate::selectors::{SelectorKind, SelectorSpec};

/// Everything that determines a benchmark's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSource>,
    pub selectors: Vec<SelectorConfig>,
    #[serde(default = "default_models")]
    pub models: Vec<ModelSpec>,
    /// Inclusive range of labeled-set sizes.
    #[serde(default = "default_m_range")]
    pub m_range: [usize; 2],
    /// Inclusive range of M over which curve areas are taken.
    #[serde(default = "default_auc_range")]
    pub auc_range: [usize; 2],
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_pool_fraction")]
    pub pool_fraction: f64,
    /// Selector label the p-value table compares against.
    #[serde(default = "default_reference")]
    pub reference: String,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_models() -> Vec<ModelSpec> {
    vec![ModelSpec::ridge(), ModelSpec::svr()]
}
fn default_m_range() -> [usize; 2] {
    [5, 50]
}
fn default_auc_range() -> [usize; 2] {
    [5, 20]
}
fn default_runs() -> usize {
    100
}
fn default_pool_fraction() -> f64 {
    0.5
}
fn default_reference() -> String {
    "irdm".into()
}
fn default_alpha() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetSource {
    Csv {
        name: String,
        path: PathBuf,
        label: String,
        #[serde(default)]
        categorical: Vec<String>,
    },
    Synthetic {
        name: String,
        /// "linear", "clustered" or "clustered:K".
        generator: String,
        n: usize,
        d: usize,
        #[serde(default)]
        noise: f64,
        #[serde(default)]
        seed: u64,
    },
}

impl DatasetSource {
    pub fn name(&self) -> &str {
        match self {
            DatasetSource::Csv { name, .. } | DatasetSource::Synthetic { name, .. } => name,
        }
    }

    /// Loads and one-hot encodes the dataset. Relative CSV paths are
    /// resolved against `base_dir` when given.
    pub fn load(&self, base_dir: Option<&Path>) -> Result<Dataset> {
        let data = match self {
            DatasetSource::Csv {
                name,
                path,
                label,
                categorical,
            } => {
                let path = match base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                load_csv(&path, Some(label), categorical)?.with_name(name.clone())
            }
            DatasetSource::Synthetic {
                name,
                generator,
                n,
                d,
                noise,
                seed,
            } => synth_generate(generator, *n, *d, *noise, *seed)?.with_name(name.clone()),
        };
        Ok(one_hot_encode(&data)?)
    }
}

/// One selector column of the benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectorConfig {
    pub kind: SelectorKind,
    /// Column name in reports; defaults to the kind's name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default = "default_c_max")]
    pub c_max: usize,
    #[serde(default = "default_committee")]
    pub committee_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_init: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_kind: Option<SelectorKind>,
    /// Restrict to these model families; by default every compatible model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub models: Option<Vec<String>>,
}

fn default_c_max() -> usize {
    5
}
fn default_committee() -> usize {
    4
}

impl SelectorConfig {
    pub fn new(kind: SelectorKind) -> Self {
        Self {
            kind,
            label: None,
            c_max: default_c_max(),
            committee_size: default_committee(),
            n_init: None,
            init_kind: None,
            models: None,
        }
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.kind.name().to_owned())
    }

    /// Whether this selector is evaluated with `model`.
    pub fn evaluates_with(&self, model: &ModelSpec) -> bool {
        self.kind.supports(model)
            && self
                .models
                .as_ref()
                .is_none_or(|families| families.iter().any(|f| f.eq_ignore_ascii_case(model.family())))
    }

    pub fn spec(&self, seed: u64, model: ModelSpec) -> SelectorSpec {
        SelectorSpec {
            kind: self.kind,
            seed,
            c_max: self.c_max,
            committee_size: self.committee_size,
            n_init: self.n_init,
            init_kind: self.init_kind,
            model,
            kmeans: KMeansParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn new(datasets: Vec<DatasetSource>, selectors: Vec<SelectorConfig>) -> Self {
        Self {
            datasets,
            selectors,
            models: default_models(),
            m_range: default_m_range(),
            auc_range: default_auc_range(),
            runs: default_runs(),
            base_seed: 0,
            pool_fraction: default_pool_fraction(),
            reference: default_reference(),
            alpha: default_alpha(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn m_values(&self) -> impl Iterator<Item = usize> {
        self.m_range[0]..=self.m_range[1]
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BenchError::Config(msg));
        if self.datasets.is_empty() {
            return bad("at least one dataset is required".into());
        }
        if self.selectors.is_empty() {
            return bad("at least one selector is required".into());
        }
        if self.models.is_empty() {
            return bad("at least one model is required".into());
        }
        if self.runs < 1 {
            return bad("runs must be at least 1".into());
        }
        let [lo, hi] = self.m_range;
        if lo < 1 || lo > hi {
            return bad(format!("m_range [{lo}, {hi}] must satisfy 1 <= lo <= hi"));
        }
        let [alo, ahi] = self.auc_range;
        if alo > ahi || alo < lo || ahi > hi {
            return bad(format!("auc_range [{alo}, {ahi}] must lie inside m_range [{lo}, {hi}]"));
        }
        if !(self.pool_fraction > 0.0 && self.pool_fraction < 1.0) {
            return bad(format!("pool_fraction must be in (0, 1), got {}", self.pool_fraction));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must be in (0, 1), got {}", self.alpha));
        }
        let mut names = HashSet::new();
        for d in &self.datasets {
            if !names.insert(d.name()) {
                return bad(format!("duplicate dataset name '{}'", d.name()));
            }
        }
        let mut labels = HashSet::new();
        for s in &self.selectors {
            let label = s.label();
            if !labels.insert(label.clone()) {
                return bad(format!("duplicate selector label '{label}'"));
            }
            if let Some(families) = &s.models {
                for f in families {
                    let Some(model) = self.models.iter().find(|m| m.family().eq_ignore_ascii_case(f)) else {
                        return bad(format!("selector '{label}' asks for model '{f}', which is not configured"));
                    };
                    if !s.kind.supports(model) {
                        return bad(format!("selector '{label}' cannot be evaluated with model '{f}'"));
                    }
                }
            }
            s.spec(0, self.models[0]).validate_shape().map_err(|e| BenchError::Config(format!("selector '{label}': {e}")))?;
        }
        for m in &self.models {
            m.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        }
        let families: HashSet<_> = self.models.iter().map(|m| m.family()).collect();
        if families.len() != self.models.len() {
            return bad("at most one model per family".into());
        }
        Ok(())
    }
}

impl SelectorSpec {
    /// Spec checks that do not depend on the model family.
    fn validate_shape(&self) -> crate::selectors::Result<()> {
        let mut spec = self.clone();
        spec.model = ModelSpec::ridge();
        spec.validate()
    }
}
