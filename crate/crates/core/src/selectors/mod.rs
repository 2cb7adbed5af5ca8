//! Sample selectors behind one interface.
//!
//! Unsupervised selectors ([`SelectorKind::Rs`], [`SelectorKind::Gsx`],
//! [`SelectorKind::Rd`], [`SelectorKind::Irdm`]) look only at pool geometry.
//! Supervised ones grow a labeled set one query at a time through a
//! [`LabelOracle`]; their output is ordered by query time, so the first `M`
//! picks of a run to `M' > M` are exactly the run to `M`.

mod supervised;
mod unsupervised;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::clustering::{ClusterError, KMeansParams};
use crate::dataset::Dataset;
use crate::models::{ModelError, ModelSpec};

pub use supervised::{
    emcm_scores, igs_scores, qbc_variances, select_emcm, select_igs, select_qbc, select_rd_emcm,
    select_rsal,
};
pub use unsupervised::{
    cluster_representativeness, diversity, irdm_from_model, irdm_objective, irdm_update_one,
    rd_from_model, representativeness, select_gsx, select_irdm, select_rd, select_rs, IrdmOutcome,
    PositionUpdate,
};

#[derive(Debug, Error)]
pub enum SelectError {
    #[error("cannot select {m} samples from a pool of {n}")]
    TooMany { m: usize, n: usize },
    #[error("M must be at least 1")]
    ZeroM,
    #[error("selector '{0}' needs a label oracle")]
    MissingOracle(SelectorKind),
    #[error("invalid selector configuration: {0}")]
    InvalidSpec(String),
    #[error("candidate position {position} out of range for {m} candidates")]
    InvalidPosition { position: usize, m: usize },
    #[error("sample {sample} is not a member of the given cluster")]
    NotInCluster { sample: usize },
    #[error("invalid candidate set: {0}")]
    InvalidCandidates(String),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

pub type Result<T> = std::result::Result<T, SelectError>;

/// Ordered, duplicate-free pool indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    indices: Vec<usize>,
}

impl CandidateSet {
    pub fn new(indices: Vec<usize>, pool_size: usize) -> Result<Self> {
        let mut seen = vec![false; pool_size];
        for &i in &indices {
            if i >= pool_size {
                return Err(SelectError::InvalidCandidates(format!(
                    "index {i} outside pool of {pool_size}"
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(SelectError::InvalidCandidates(format!("index {i} repeated")));
            }
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn sorted(&self) -> Vec<usize> {
        let mut v = self.indices.clone();
        v.sort_unstable();
        v
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.indices
    }

    /// The first `m` picks.
    pub fn prefix(&self, m: usize) -> CandidateSet {
        CandidateSet {
            indices: self.indices[..m.min(self.indices.len())].to_vec(),
        }
    }
}

/// Sorted candidate index lists, one per distinct state visited by iRDM.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IterationHistory {
    rows: Vec<Vec<usize>>,
}

impl IterationHistory {
    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn contains(&self, sorted: &[usize]) -> bool {
        self.rows.iter().any(|r| r == sorted)
    }

    pub(crate) fn push(&mut self, sorted: Vec<usize>) {
        debug_assert!(sorted.windows(2).all(|w| w[0] < w[1]));
        self.rows.push(sorted);
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("no label for pool index {0}")]
    OutOfRange(usize),
    #[error("oracle failed: {0}")]
    Failed(String),
}

/// Reveals true labels on request.
pub trait LabelOracle {
    fn label(&mut self, index: usize) -> std::result::Result<f64, OracleError>;

    /// Number of labels revealed so far.
    fn queries(&self) -> usize;
}

/// Simulated annotator backed by the pool's known labels.
#[derive(Debug, Clone)]
pub struct PoolOracle<'a> {
    labels: &'a [f64],
    queries: usize,
}

impl<'a> PoolOracle<'a> {
    pub fn new(labels: &'a [f64]) -> Self {
        Self { labels, queries: 0 }
    }
}

impl LabelOracle for PoolOracle<'_> {
    fn label(&mut self, index: usize) -> std::result::Result<f64, OracleError> {
        let y = *self.labels.get(index).ok_or(OracleError::OutOfRange(index))?;
        self.queries += 1;
        Ok(y)
    }

    fn queries(&self) -> usize {
        self.queries
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SelectorKind {
    Rs,
    Gsx,
    Rd,
    Irdm,
    Qbc,
    Emcm,
    RdEmcm,
    Igs,
    Rsal,
}

impl SelectorKind {
    pub const ALL: [SelectorKind; 9] = [
        SelectorKind::Rs,
        SelectorKind::Gsx,
        SelectorKind::Rd,
        SelectorKind::Irdm,
        SelectorKind::Qbc,
        SelectorKind::Emcm,
        SelectorKind::RdEmcm,
        SelectorKind::Igs,
        SelectorKind::Rsal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SelectorKind::Rs => "rs",
            SelectorKind::Gsx => "gsx",
            SelectorKind::Rd => "rd",
            SelectorKind::Irdm => "irdm",
            SelectorKind::Qbc => "qbc",
            SelectorKind::Emcm => "emcm",
            SelectorKind::RdEmcm => "rd-emcm",
            SelectorKind::Igs => "igs",
            SelectorKind::Rsal => "rsal",
        }
    }

    pub fn is_supervised(self) -> bool {
        matches!(
            self,
            SelectorKind::Qbc | SelectorKind::Emcm | SelectorKind::RdEmcm | SelectorKind::Igs | SelectorKind::Rsal
        )
    }

    /// Whether results for this selector are reported with the given model family.
    pub fn supports(self, model: &ModelSpec) -> bool {
        match self {
            SelectorKind::Emcm | SelectorKind::RdEmcm | SelectorKind::Igs => model.is_ridge(),
            SelectorKind::Rsal => !model.is_ridge(),
            _ => true,
        }
    }

    /// Selector that picks the warm-start samples of a supervised selector.
    pub fn default_init(self) -> Option<SelectorKind> {
        match self {
            SelectorKind::Qbc | SelectorKind::Emcm | SelectorKind::Rsal => Some(SelectorKind::Rs),
            SelectorKind::RdEmcm => Some(SelectorKind::Rd),
            SelectorKind::Igs => Some(SelectorKind::Gsx),
            _ => None,
        }
    }

    pub fn default_n_init(self) -> usize {
        match self {
            SelectorKind::Igs => 1,
            _ => 5,
        }
    }
}

impl fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for SelectorKind {
    type Err = SelectError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        SelectorKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| SelectError::InvalidSpec(format!("unknown selector '{s}'")))
    }
}

impl serde::Serialize for SelectorKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> serde::Deserialize<'de> for SelectorKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectorSpec {
    pub kind: SelectorKind,
    pub seed: u64,
    /// Maximum number of iRDM sweeps.
    pub c_max: usize,
    pub committee_size: usize,
    /// Warm-start size; `None` uses the kind's default.
    pub n_init: Option<usize>,
    /// Warm-start selector; `None` uses the kind's default.
    pub init_kind: Option<SelectorKind>,
    /// Model family used inside QBC and RSAL, and the ridge penalty used by
    /// EMCM, RD-EMCM and iGS when it is a ridge spec.
    pub model: ModelSpec,
    pub kmeans: KMeansParams,
}

impl SelectorSpec {
    pub fn new(kind: SelectorKind, seed: u64) -> Self {
        Self {
            kind,
            seed,
            c_max: 5,
            committee_size: 4,
            n_init: None,
            init_kind: None,
            model: ModelSpec::ridge(),
            kmeans: KMeansParams::default(),
        }
    }

    pub fn with_c_max(mut self, c_max: usize) -> Self {
        self.c_max = c_max;
        self
    }

    pub fn with_model(mut self, model: ModelSpec) -> Self {
        self.model = model;
        self
    }

    pub fn with_init(mut self, init: SelectorKind) -> Self {
        self.init_kind = Some(init);
        self
    }

    pub fn n_init(&self) -> usize {
        self.n_init.unwrap_or_else(|| self.kind.default_n_init())
    }

    pub fn init_kind(&self) -> SelectorKind {
        self.init_kind
            .or_else(|| self.kind.default_init())
            .unwrap_or(SelectorKind::Rs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.committee_size < 2 {
            return Err(SelectError::InvalidSpec(format!(
                "committee_size must be at least 2, got {}",
                self.committee_size
            )));
        }
        if self.n_init() < 1 {
            return Err(SelectError::InvalidSpec("n_init must be at least 1".into()));
        }
        if self.init_kind().is_supervised() {
            return Err(SelectError::InvalidSpec(format!(
                "warm-start selector must be unsupervised, got '{}'",
                self.init_kind()
            )));
        }
        self.model.validate()?;
        Ok(())
    }
}

/// Selection plus iRDM bookkeeping when applicable.
#[derive(Debug, Clone)]
pub struct Selection {
    pub candidates: CandidateSet,
    pub irdm: Option<IrdmOutcome>,
}

/// Dispatches on `spec.kind`. Supervised kinds require an oracle;
/// unsupervised kinds never touch it.
pub fn select(
    spec: &SelectorSpec,
    pool: &Dataset,
    m: usize,
    oracle: Option<&mut dyn LabelOracle>,
) -> Result<CandidateSet> {
    select_detailed(spec, pool, m, oracle).map(|s| s.candidates)
}

pub fn select_detailed(
    spec: &SelectorSpec,
    pool: &Dataset,
    m: usize,
    oracle: Option<&mut dyn LabelOracle>,
) -> Result<Selection> {
    spec.validate()?;
    let points = pool.features();
    check_m(m, points.nrows())?;
    let plain = |candidates| Selection {
        candidates,
        irdm: None,
    };
    match spec.kind {
        SelectorKind::Rs => Ok(plain(select_rs(points, m, spec.seed)?)),
        SelectorKind::Gsx => Ok(plain(select_gsx(points, m)?)),
        SelectorKind::Rd => Ok(plain(select_rd(points, m, spec.seed, spec.kmeans)?)),
        SelectorKind::Irdm => {
            let out = select_irdm(points, m, spec.c_max, spec.seed, spec.kmeans)?;
            Ok(Selection {
                candidates: out.candidates.clone(),
                irdm: Some(out),
            })
        }
        kind => {
            let oracle = oracle.ok_or(SelectError::MissingOracle(kind))?;
            let picks = match kind {
                SelectorKind::Qbc => select_qbc(spec, points, m, oracle)?,
                SelectorKind::Emcm => select_emcm(spec, points, m, oracle)?,
                SelectorKind::RdEmcm => select_rd_emcm(spec, points, m, oracle)?,
                SelectorKind::Igs => select_igs(spec, points, m, oracle)?,
                SelectorKind::Rsal => select_rsal(spec, points, m, oracle)?,
                _ => unreachable!("unsupervised kinds handled above"),
            };
            Ok(plain(picks))
        }
    }
}

/// Warm-start picks for a supervised selector, in selection order.
pub(crate) fn select_unsupervised(
    kind: SelectorKind,
    spec: &SelectorSpec,
    points: &ndarray::Array2<f64>,
    m: usize,
) -> Result<CandidateSet> {
    match kind {
        SelectorKind::Rs => select_rs(points, m, spec.seed),
        SelectorKind::Gsx => select_gsx(points, m),
        SelectorKind::Rd => select_rd(points, m, spec.seed, spec.kmeans),
        SelectorKind::Irdm => Ok(select_irdm(points, m, spec.c_max, spec.seed, spec.kmeans)?.candidates),
        other => Err(SelectError::InvalidSpec(format!("'{other}' is not unsupervised"))),
    }
}

pub(crate) fn check_m(m: usize, n: usize) -> Result<()> {
    if m == 0 {
        return Err(SelectError::ZeroM);
    }
    if m > n {
        return Err(SelectError::TooMany { m, n });
    }
    Ok(())
}
