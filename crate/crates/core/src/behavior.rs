//! Cooperation-rate model over social-dilemma features, intervention
//! simulation and ranked suggestions.
//!
//! Features are encoded before reaching a model:
//!
//! * binary: `false -> 0`, `true -> 1`;
//! * categorical: one-hot, one column per level named `id=level`;
//! * continuous: `(x - mean) / scale`;
//! * ordinal: the raw value.
//!
//! [`CooperationModel`] is the logistic reference. Anything implementing
//! [`RateModel`] can stand in for it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::svo::{SvoCategory, SvoResult};

/// Step for central differences on continuous and ordinal features.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "error", content = "detail", rename_all = "snake_case")]
pub enum BehaviorError {
    #[error("unknown feature {0}")]
    UnknownFeature(String),
    #[error("cannot encode {feature}: {reason}")]
    EncodingError { feature: String, reason: String },
    #[error("invalid feature catalog: {0}")]
    InvalidCatalog(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("no intervention plans given")]
    NoPlans,
    #[error("invalid settings: {0}")]
    InvalidSettings(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureValue {
    Flag(bool),
    Number(f64),
    Level(String),
}

impl fmt::Display for FeatureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureValue::Flag(b) => write!(f, "{b}"),
            FeatureValue::Number(x) => write!(f, "{x}"),
            FeatureValue::Level(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeatureKind {
    Binary,
    Ordinal { min: f64, max: f64 },
    Continuous { mean: f64, scale: f64 },
    Categorical { levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSpec {
    pub id: String,
    pub label: String,
    pub category: String,
    /// Row number in the full parameter table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table_ref: Option<u32>,
    pub kind: FeatureKind,
    pub default: FeatureValue,
}

impl FeatureSpec {
    fn bad(&self, reason: impl Into<String>) -> BehaviorError {
        BehaviorError::EncodingError { feature: self.id.clone(), reason: reason.into() }
    }

    pub fn check(&self, value: &FeatureValue) -> Result<(), BehaviorError> {
        match (&self.kind, value) {
            (FeatureKind::Binary, FeatureValue::Flag(_)) => Ok(()),
            (FeatureKind::Ordinal { min, max }, FeatureValue::Number(x)) => {
                if x.is_finite() && *min <= *x && *x <= *max {
                    Ok(())
                } else {
                    Err(self.bad(format!("{x} outside [{min}, {max}]")))
                }
            }
            (FeatureKind::Continuous { .. }, FeatureValue::Number(x)) if x.is_finite() => Ok(()),
            (FeatureKind::Categorical { levels }, FeatureValue::Level(l)) => {
                if levels.contains(l) {
                    Ok(())
                } else {
                    Err(self.bad(format!("unknown level {l}")))
                }
            }
            (kind, v) => Err(self.bad(format!("value {v} does not fit {kind:?}"))),
        }
    }

    /// Encoded column names.
    pub fn columns(&self) -> Vec<String> {
        match &self.kind {
            FeatureKind::Categorical { levels } => levels.iter().map(|l| format!("{}={l}", self.id)).collect(),
            _ => vec![self.id.clone()],
        }
    }

    fn encode_into(&self, value: &FeatureValue, out: &mut BTreeMap<String, f64>) -> Result<(), BehaviorError> {
        self.check(value)?;
        match (&self.kind, value) {
            (FeatureKind::Binary, FeatureValue::Flag(b)) => {
                out.insert(self.id.clone(), if *b { 1.0 } else { 0.0 });
            }
            (FeatureKind::Ordinal { .. }, FeatureValue::Number(x)) => {
                out.insert(self.id.clone(), *x);
            }
            (FeatureKind::Continuous { mean, scale }, FeatureValue::Number(x)) => {
                out.insert(self.id.clone(), (x - mean) / scale);
            }
            (FeatureKind::Categorical { levels }, FeatureValue::Level(l)) => {
                for level in levels {
                    out.insert(format!("{}={level}", self.id), if level == l { 1.0 } else { 0.0 });
                }
            }
            _ => unreachable!("checked above"),
        }
        Ok(())
    }

    /// Derivative of the encoded column with respect to the raw value.
    fn encoding_slope(&self) -> Option<f64> {
        match self.kind {
            FeatureKind::Continuous { scale, .. } => Some(1.0 / scale),
            FeatureKind::Ordinal { .. } => Some(1.0),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureCatalog {
    pub features: Vec<FeatureSpec>,
}

const LIVE_FEATURES: &str = include_str!("../data/features.json");
const PARAMETER_TABLE: &str = include_str!("../data/psych_parameters.json");
const REFERENCE_MODEL: &str = include_str!("../data/cooperation_model.json");
const UNUSED_STOCK_MENU: &str = include_str!("../data/interventions_unused_stock.json");

impl FeatureCatalog {
    pub fn new(features: Vec<FeatureSpec>) -> Result<Self, BehaviorError> {
        let catalog = Self { features };
        catalog.validate()?;
        Ok(catalog)
    }

    /// The curated features exposed by default.
    pub fn standard() -> &'static FeatureCatalog {
        static CELL: OnceLock<FeatureCatalog> = OnceLock::new();
        CELL.get_or_init(|| {
            FeatureCatalog::new(serde_json::from_str(LIVE_FEATURES).expect("shipped catalog parses"))
                .expect("shipped catalog is valid")
        })
    }

    pub fn validate(&self) -> Result<(), BehaviorError> {
        let mut ids = BTreeSet::new();
        for f in &self.features {
            if !ids.insert(f.id.as_str()) {
                return Err(BehaviorError::InvalidCatalog(format!("duplicate feature {}", f.id)));
            }
            match &f.kind {
                FeatureKind::Continuous { mean, scale } if !(mean.is_finite() && scale.is_finite() && *scale > 0.0) => {
                    return Err(BehaviorError::InvalidCatalog(format!("{} needs a finite mean and scale > 0", f.id)));
                }
                FeatureKind::Ordinal { min, max } if !(min.is_finite() && max.is_finite() && min <= max) => {
                    return Err(BehaviorError::InvalidCatalog(format!("{} needs finite bounds with min <= max", f.id)));
                }
                FeatureKind::Categorical { levels } => {
                    let unique: BTreeSet<&String> = levels.iter().collect();
                    if levels.is_empty() || unique.len() != levels.len() {
                        return Err(BehaviorError::InvalidCatalog(format!("{} needs distinct levels", f.id)));
                    }
                }
                _ => {}
            }
            f.check(&f.default).map_err(|e| BehaviorError::InvalidCatalog(e.to_string()))?;
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&FeatureSpec> {
        self.features.iter().find(|f| f.id == id)
    }

    pub fn columns(&self) -> BTreeSet<String> {
        self.features.iter().flat_map(FeatureSpec::columns).collect()
    }

    pub fn defaults(&self) -> FeatureVector {
        FeatureVector { values: self.features.iter().map(|f| (f.id.clone(), f.default.clone())).collect() }
    }

    /// Fills missing features from defaults and checks every value. Returns
    /// the complete vector and the ids that were filled.
    pub fn complete(&self, x: &FeatureVector) -> Result<(FeatureVector, Vec<String>), BehaviorError> {
        if let Some(id) = x.values.keys().find(|id| self.get(id).is_none()) {
            return Err(BehaviorError::UnknownFeature(id.clone()));
        }
        let mut filled = Vec::new();
        let mut values = BTreeMap::new();
        for f in &self.features {
            let v = match x.values.get(&f.id) {
                Some(v) => v.clone(),
                None => {
                    filled.push(f.id.clone());
                    f.default.clone()
                }
            };
            f.check(&v)?;
            values.insert(f.id.clone(), v);
        }
        Ok((FeatureVector { values }, filled))
    }

    pub fn encode(&self, x: &FeatureVector) -> Result<BTreeMap<String, f64>, BehaviorError> {
        let (full, _) = self.complete(x)?;
        let mut out = BTreeMap::new();
        for f in &self.features {
            f.encode_into(&full.values[&f.id], &mut out)?;
        }
        Ok(out)
    }
}

/// One row of the full psychological parameter table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterRow {
    pub number: u32,
    pub group: String,
    pub category: String,
    pub parameter: String,
}

pub fn parameter_table() -> &'static [ParameterRow] {
    static CELL: OnceLock<Vec<ParameterRow>> = OnceLock::new();
    CELL.get_or_init(|| serde_json::from_str(PARAMETER_TABLE).expect("shipped parameter table parses"))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureVector {
    pub values: BTreeMap<String, FeatureValue>,
}

impl FeatureVector {
    pub fn with(mut self, id: &str, value: FeatureValue) -> Self {
        self.values.insert(id.to_string(), value);
        self
    }
}

/// Anything that maps a feature vector to a cooperation rate in `(0, 1)`.
pub trait RateModel {
    fn rate(&self, catalog: &FeatureCatalog, x: &FeatureVector) -> Result<f64, BehaviorError>;

    /// Sensitivity per feature. The default uses central differences for
    /// continuous and ordinal features and discrete differences otherwise.
    fn sensitivity(&self, catalog: &FeatureCatalog, x: &FeatureVector) -> Result<BTreeMap<String, f64>, BehaviorError> {
        discrete_and_fd_sensitivity(self, catalog, x)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    LogisticReference,
    External,
}

/// Logistic reference model: `y = 1 / (1 + exp(-(b0 + sum_i b_i enc(x_i))))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CooperationModel {
    pub kind: ModelKind,
    pub intercept: f64,
    pub coefficients: BTreeMap<String, f64>,
}

impl CooperationModel {
    pub fn logistic(intercept: f64, coefficients: impl IntoIterator<Item = (String, f64)>) -> Self {
        Self { kind: ModelKind::LogisticReference, intercept, coefficients: coefficients.into_iter().collect() }
    }

    /// The shipped reference coefficients.
    pub fn reference() -> CooperationModel {
        serde_json::from_str(REFERENCE_MODEL).expect("shipped model parses")
    }

    pub fn validate(&self, catalog: &FeatureCatalog) -> Result<(), BehaviorError> {
        if self.kind != ModelKind::LogisticReference {
            return Err(BehaviorError::InvalidModel("external models are attached in code, not evaluated from config".into()));
        }
        if !self.intercept.is_finite() {
            return Err(BehaviorError::InvalidModel("intercept is not finite".into()));
        }
        let columns = catalog.columns();
        for (k, b) in &self.coefficients {
            if !columns.contains(k) {
                return Err(BehaviorError::UnknownFeature(k.clone()));
            }
            if !b.is_finite() {
                return Err(BehaviorError::InvalidModel(format!("coefficient {k} is not finite")));
            }
        }
        Ok(())
    }

    fn logit(&self, encoded: &BTreeMap<String, f64>) -> f64 {
        self.intercept + self.coefficients.iter().map(|(k, b)| b * encoded.get(k).copied().unwrap_or(0.0)).sum::<f64>()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl RateModel for CooperationModel {
    fn rate(&self, catalog: &FeatureCatalog, x: &FeatureVector) -> Result<f64, BehaviorError> {
        self.validate(catalog)?;
        Ok(sigmoid(self.logit(&catalog.encode(x)?)))
    }

    /// Analytic `b_i / scale * y (1 - y)` for continuous and ordinal
    /// features, discrete differences for the rest.
    fn sensitivity(&self, catalog: &FeatureCatalog, x: &FeatureVector) -> Result<BTreeMap<String, f64>, BehaviorError> {
        let y = self.rate(catalog, x)?;
        let mut out = discrete_sensitivity(self, catalog, x)?;
        for f in &catalog.features {
            if let Some(slope) = f.encoding_slope() {
                let b = self.coefficients.get(&f.id).copied().unwrap_or(0.0);
                out.insert(f.id.clone(), b * slope * y * (1.0 - y));
            }
        }
        Ok(out)
    }
}

/// Model backed by a function of the encoded columns.
pub struct ExternalModel<F>(pub F);

impl<F: Fn(&BTreeMap<String, f64>) -> f64> RateModel for ExternalModel<F> {
    fn rate(&self, catalog: &FeatureCatalog, x: &FeatureVector) -> Result<f64, BehaviorError> {
        let y = (self.0)(&catalog.encode(x)?);
        if y.is_finite() && y > 0.0 && y < 1.0 {
            Ok(y)
        } else {
            Err(BehaviorError::InvalidModel(format!("external model returned {y}")))
        }
    }
}

fn discrete_sensitivity<M: RateModel + ?Sized>(
    model: &M,
    catalog: &FeatureCatalog,
    x: &FeatureVector,
) -> Result<BTreeMap<String, f64>, BehaviorError> {
    let (full, _) = catalog.complete(x)?;
    let base = model.rate(catalog, &full)?;
    let mut out = BTreeMap::new();
    for f in &catalog.features {
        match &f.kind {
            FeatureKind::Binary => {
                let on = model.rate(catalog, &full.clone().with(&f.id, FeatureValue::Flag(true)))?;
                let off = model.rate(catalog, &full.clone().with(&f.id, FeatureValue::Flag(false)))?;
                out.insert(f.id.clone(), on - off);
            }
            FeatureKind::Categorical { levels } => {
                for level in levels {
                    let y = model.rate(catalog, &full.clone().with(&f.id, FeatureValue::Level(level.clone())))?;
                    out.insert(format!("{}={level}", f.id), y - base);
                }
            }
            _ => {}
        }
    }
    Ok(out)
}

/// Discrete differences plus central differences in the raw value of each
/// continuous or ordinal feature.
pub fn discrete_and_fd_sensitivity<M: RateModel + ?Sized>(
    model: &M,
    catalog: &FeatureCatalog,
    x: &FeatureVector,
) -> Result<BTreeMap<String, f64>, BehaviorError> {
    let (full, _) = catalog.complete(x)?;
    let mut out = discrete_sensitivity(model, catalog, &full)?;
    for f in &catalog.features {
        if f.encoding_slope().is_some() {
            let FeatureValue::Number(v) = full.values[&f.id] else { unreachable!("checked by complete") };
            let mut unbounded = f.clone();
            if let FeatureKind::Ordinal { .. } = unbounded.kind {
                unbounded.kind = FeatureKind::Ordinal { min: f64::NEG_INFINITY, max: f64::INFINITY };
            }
            let relaxed = FeatureCatalog {
                features: catalog.features.iter().map(|g| if g.id == f.id { unbounded.clone() } else { g.clone() }).collect(),
            };
            let up = model.rate(&relaxed, &full.clone().with(&f.id, FeatureValue::Number(v + FD_STEP)))?;
            let down = model.rate(&relaxed, &full.clone().with(&f.id, FeatureValue::Number(v - FD_STEP)))?;
            out.insert(f.id.clone(), (up - down) / (2.0 * FD_STEP));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub rate: f64,
    /// Features that were missing and took their default.
    pub filled_defaults: Vec<String>,
}

pub fn predict<M: RateModel + ?Sized>(
    model: &M,
    catalog: &FeatureCatalog,
    x: &FeatureVector,
) -> Result<Prediction, BehaviorError> {
    let (full, filled_defaults) = catalog.complete(x)?;
    Ok(Prediction { rate: model.rate(catalog, &full)?, filled_defaults })
}

pub fn feature_sensitivity<M: RateModel + ?Sized>(
    model: &M,
    catalog: &FeatureCatalog,
    x: &FeatureVector,
) -> Result<BTreeMap<String, f64>, BehaviorError> {
    model.sensitivity(catalog, x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterventionPlan {
    pub id: String,
    pub label: String,
    #[serde(default)]
    pub deltas: BTreeMap<String, FeatureValue>,
}

impl InterventionPlan {
    pub fn apply(&self, catalog: &FeatureCatalog, baseline: &FeatureVector) -> Result<FeatureVector, BehaviorError> {
        let mut x = baseline.clone();
        for (id, v) in &self.deltas {
            let spec = catalog.get(id).ok_or_else(|| BehaviorError::UnknownFeature(id.clone()))?;
            spec.check(v)?;
            x.values.insert(id.clone(), v.clone());
        }
        Ok(catalog.complete(&x)?.0)
    }
}

/// The shipped intervention menu for the unused-stock owners case.
pub fn unused_stock_menu() -> Vec<InterventionPlan> {
    serde_json::from_str(UNUSED_STOCK_MENU).expect("shipped menu parses")
}

/// Baseline of individualistic owners of unused housing stock.
pub fn unused_stock_owners() -> FeatureVector {
    FeatureCatalog::standard()
        .defaults()
        .with("svo_type", FeatureValue::Level("individualistic".into()))
        .with("motivational_orientation", FeatureValue::Level("individualistic".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanOutcome {
    pub plan_id: String,
    pub label: String,
    pub rate: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFailure {
    pub plan_id: String,
    pub error: BehaviorError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub baseline_rate: f64,
    pub ranked: Vec<PlanOutcome>,
    pub failures: Vec<PlanFailure>,
}

impl SimulationReport {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["plan_id", "rate", "delta"]).expect("in-memory write");
        for o in &self.ranked {
            w.write_record([o.plan_id.as_str(), &o.rate.to_string(), &o.delta.to_string()]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}

/// Predicts every plan against the baseline and ranks by gain, largest
/// first, ties by plan id. Failing plans are listed separately.
pub fn simulate_interventions<M: RateModel + ?Sized>(
    model: &M,
    catalog: &FeatureCatalog,
    baseline: &FeatureVector,
    plans: &[InterventionPlan],
) -> Result<SimulationReport, BehaviorError> {
    if plans.is_empty() {
        return Err(BehaviorError::NoPlans);
    }
    let baseline_rate = predict(model, catalog, baseline)?.rate;
    let mut ranked = Vec::new();
    let mut failures = Vec::new();
    for plan in plans {
        match plan.apply(catalog, baseline).and_then(|x| model.rate(catalog, &x)) {
            Ok(rate) => ranked.push(PlanOutcome {
                plan_id: plan.id.clone(),
                label: plan.label.clone(),
                rate,
                delta: rate - baseline_rate,
            }),
            Err(error) => failures.push(PlanFailure { plan_id: plan.id.clone(), error }),
        }
    }
    ranked.sort_by(|a, b| b.delta.total_cmp(&a.delta).then_with(|| a.plan_id.cmp(&b.plan_id)));
    Ok(SimulationReport { baseline_rate, ranked, failures })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SustainabilitySettings {
    /// Decay rate per time step, `>= 0`.
    pub decay: f64,
    pub horizon: u32,
}

impl Default for SustainabilitySettings {
    fn default() -> Self {
        Self { decay: 0.1, horizon: 12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SustainabilityPoint {
    pub t: u32,
    pub delta: f64,
    pub rate: f64,
}

/// `baseline + delta * exp(-decay * t)` for `t = 0..=horizon`.
pub fn sustainability_curve(
    baseline: f64,
    delta: f64,
    settings: SustainabilitySettings,
) -> Result<Vec<SustainabilityPoint>, BehaviorError> {
    if !(settings.decay.is_finite() && settings.decay >= 0.0) {
        return Err(BehaviorError::InvalidSettings(format!("decay must be finite and >= 0, got {}", settings.decay)));
    }
    Ok((0..=settings.horizon)
        .map(|t| {
            let d = delta * (-settings.decay * f64::from(t)).exp();
            SustainabilityPoint { t, delta: d, rate: baseline + d }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestionReport {
    pub plan_id: String,
    pub baseline_rate: f64,
    pub rate: f64,
    pub delta: f64,
    /// Gain from applying each changed feature on its own.
    pub contributions: BTreeMap<String, f64>,
    pub sustainability: Vec<SustainabilityPoint>,
}

pub fn suggest<M: RateModel + ?Sized>(
    model: &M,
    catalog: &FeatureCatalog,
    baseline: &FeatureVector,
    plan: &InterventionPlan,
    settings: SustainabilitySettings,
) -> Result<SuggestionReport, BehaviorError> {
    let baseline_rate = predict(model, catalog, baseline)?.rate;
    let rate = model.rate(catalog, &plan.apply(catalog, baseline)?)?;
    let mut contributions = BTreeMap::new();
    for (id, v) in &plan.deltas {
        let single = InterventionPlan {
            id: plan.id.clone(),
            label: plan.label.clone(),
            deltas: [(id.clone(), v.clone())].into(),
        };
        contributions.insert(id.clone(), model.rate(catalog, &single.apply(catalog, baseline)?)? - baseline_rate);
    }
    let delta = rate - baseline_rate;
    Ok(SuggestionReport {
        plan_id: plan.id.clone(),
        baseline_rate,
        rate,
        delta,
        contributions,
        sustainability: sustainability_curve(baseline_rate, delta, settings)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitoringRecord {
    pub t: u32,
    pub observed: f64,
    /// Observed rate fell below the threshold; the behavior target should be
    /// set again.
    pub below_threshold: bool,
}

/// Append-only record of observed cooperation rates for one subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitoringLog {
    pub subject: String,
    pub threshold: f64,
    pub records: Vec<MonitoringRecord>,
}

impl MonitoringLog {
    pub fn new(subject: impl Into<String>, threshold: f64) -> Self {
        Self { subject: subject.into(), threshold, records: Vec::new() }
    }

    pub fn observe(&mut self, t: u32, observed: f64) -> MonitoringRecord {
        let r = MonitoringRecord { t, observed, below_threshold: observed < self.threshold };
        self.records.push(r);
        r
    }

    pub fn needs_retargeting(&self) -> bool {
        self.records.last().is_some_and(|r| r.below_threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectChange {
    pub subject: String,
    pub feature: String,
    pub from: Option<FeatureValue>,
    pub to: FeatureValue,
}

/// Feature vectors per subject with a log of imported changes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SubjectRegistry {
    pub subjects: BTreeMap<String, FeatureVector>,
    pub changes: Vec<SubjectChange>,
}

pub const SVO_FEATURE: &str = "svo_type";

pub fn svo_level(category: SvoCategory) -> &'static str {
    match category {
        SvoCategory::Altruistic => "altruistic",
        SvoCategory::Prosocial => "prosocial",
        SvoCategory::Individualistic => "individualistic",
        SvoCategory::Competitive => "competitive",
    }
}

impl SubjectRegistry {
    /// Sets the SVO type of each subject from its questionnaire result.
    /// Unknown subjects start from catalog defaults. Returns the updated ids.
    pub fn import_svo<'a>(
        &mut self,
        catalog: &FeatureCatalog,
        results: impl IntoIterator<Item = (&'a str, &'a SvoResult)>,
    ) -> Result<Vec<String>, BehaviorError> {
        let spec = catalog.get(SVO_FEATURE).ok_or_else(|| BehaviorError::UnknownFeature(SVO_FEATURE.into()))?;
        let mut updated = Vec::new();
        for (subject, result) in results {
            let to = FeatureValue::Level(svo_level(result.category).into());
            spec.check(&to)?;
            let x = self.subjects.entry(subject.to_string()).or_insert_with(|| catalog.defaults());
            let from = x.values.insert(SVO_FEATURE.to_string(), to.clone());
            self.changes.push(SubjectChange { subject: subject.to_string(), feature: SVO_FEATURE.into(), from, to });
            updated.push(subject.to_string());
        }
        Ok(updated)
    }
}
