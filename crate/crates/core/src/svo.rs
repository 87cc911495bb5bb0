//! Social value orientation from the 15-item slider instrument.
//!
//! Each slider answer is a position in `[0, 1]` between the item's two
//! allocation endpoints. The six primary items give the mean allocation to
//! self and other and hence the SVO angle; the nine secondary items give an
//! equality-versus-joint-gain index.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::sync::OnceLock;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type ItemId = u32;

/// Tolerance for checking that secondary ideals lie on their segment.
const ON_SEGMENT_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum SvoError {
    #[error("no response for item {item}")]
    MissingItem { item: ItemId },
    #[error("item {item} answered more than once")]
    DuplicateItem { item: ItemId },
    #[error("item {item} is not part of this scale")]
    UnknownItem { item: ItemId },
    #[error("position {position} for item {item} outside [0, 1]")]
    OutOfRange { item: ItemId, position: f64 },
    #[error("every secondary answer sits on both ideals; equality index undefined")]
    DegenerateItem,
    #[error("invalid item catalog: {reason}")]
    InvalidCatalog { reason: String },
    #[error("consent has not been recorded")]
    ConsentMissing,
    #[error("questionnaire is in stage {stage:?}, expected {expected:?}")]
    WrongStage { stage: QuestionnaireStage, expected: QuestionnaireStage },
    #[error("responses missing for items {missing:?}")]
    IncompleteResponses { missing: Vec<ItemId> },
    #[error("bad response file: {reason}")]
    Parse { reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    #[serde(rename = "self")]
    pub own: f64,
    pub other: f64,
}

impl Allocation {
    pub fn new(own: f64, other: f64) -> Self {
        Self { own, other }
    }

    pub fn lerp(self, to: Allocation, t: f64) -> Allocation {
        Allocation { own: self.own + t * (to.own - self.own), other: self.other + t * (to.other - self.other) }
    }

    pub fn distance(self, to: Allocation) -> f64 {
        (self.own - to.own).hypot(self.other - to.other)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ItemKind {
    Primary,
    Secondary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliderItem {
    pub id: ItemId,
    pub kind: ItemKind,
    pub endpoint_a: Allocation,
    pub endpoint_b: Allocation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ideal_equality: Option<Allocation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ideal_jointgain: Option<Allocation>,
}

impl SliderItem {
    pub fn allocation_at(&self, position: f64) -> Allocation {
        self.endpoint_a.lerp(self.endpoint_b, position)
    }

    fn on_segment(&self, p: Allocation) -> bool {
        let len = self.endpoint_a.distance(self.endpoint_b);
        (self.endpoint_a.distance(p) + p.distance(self.endpoint_b) - len).abs() <= ON_SEGMENT_TOLERANCE
    }

    fn validate(&self) -> Result<(), String> {
        if self.endpoint_a == self.endpoint_b {
            return Err(format!("item {} has identical endpoints", self.id));
        }
        match (self.kind, self.ideal_equality, self.ideal_jointgain) {
            (ItemKind::Primary, None, None) => Ok(()),
            (ItemKind::Primary, _, _) => Err(format!("primary item {} carries secondary ideals", self.id)),
            (ItemKind::Secondary, Some(eq), Some(jg)) => {
                if self.on_segment(eq) && self.on_segment(jg) {
                    Ok(())
                } else {
                    Err(format!("ideals of item {} are off its segment", self.id))
                }
            }
            (ItemKind::Secondary, _, _) => Err(format!("secondary item {} lacks ideals", self.id)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SvoCategory {
    Altruistic,
    Prosocial,
    Individualistic,
    Competitive,
}

impl SvoCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            SvoCategory::Altruistic => "Altruistic",
            SvoCategory::Prosocial => "Prosocial",
            SvoCategory::Individualistic => "Individualistic",
            SvoCategory::Competitive => "Competitive",
        }
    }
}

/// Lower angle bounds (degrees, exclusive) of the three upper categories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub altruistic: f64,
    pub prosocial: f64,
    pub individualistic: f64,
}

impl Thresholds {
    pub fn classify(&self, angle: f64) -> SvoCategory {
        if angle > self.altruistic {
            SvoCategory::Altruistic
        } else if angle > self.prosocial {
            SvoCategory::Prosocial
        } else if angle > self.individualistic {
            SvoCategory::Individualistic
        } else {
            SvoCategory::Competitive
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instrument {
    pub thresholds: Thresholds,
    pub items: Vec<SliderItem>,
}

const STANDARD_ITEMS: &str = include_str!("../data/svo_items.json");

impl Instrument {
    pub fn from_json(text: &str) -> Result<Self, SvoError> {
        let inst: Instrument =
            serde_json::from_str(text).map_err(|e| SvoError::InvalidCatalog { reason: e.to_string() })?;
        inst.validate()?;
        Ok(inst)
    }

    /// The shipped six primary plus nine secondary items.
    pub fn standard() -> &'static Instrument {
        static CELL: OnceLock<Instrument> = OnceLock::new();
        CELL.get_or_init(|| Instrument::from_json(STANDARD_ITEMS).expect("shipped item catalog is valid"))
    }

    pub fn validate(&self) -> Result<(), SvoError> {
        let invalid = |reason: String| SvoError::InvalidCatalog { reason };
        let t = self.thresholds;
        if !(t.altruistic > t.prosocial && t.prosocial > t.individualistic) {
            return Err(invalid("thresholds must decrease from altruistic to individualistic".into()));
        }
        let mut ids = BTreeSet::new();
        for item in &self.items {
            if !ids.insert(item.id) {
                return Err(invalid(format!("duplicate item id {}", item.id)));
            }
            item.validate().map_err(invalid)?;
        }
        if self.primary().next().is_none() {
            return Err(invalid("no primary items".into()));
        }
        Ok(())
    }

    pub fn item(&self, id: ItemId) -> Option<&SliderItem> {
        self.items.iter().find(|i| i.id == id)
    }

    pub fn primary(&self) -> impl Iterator<Item = &SliderItem> {
        self.items.iter().filter(|i| i.kind == ItemKind::Primary)
    }

    pub fn secondary(&self) -> impl Iterator<Item = &SliderItem> {
        self.items.iter().filter(|i| i.kind == ItemKind::Secondary)
    }

    pub fn classify(&self, angle: f64) -> SvoCategory {
        self.thresholds.classify(angle)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliderResponse {
    pub item: ItemId,
    pub position: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimaryScore {
    pub mean_self: f64,
    pub mean_other: f64,
    pub angle: f64,
}

/// SVO angle in degrees, in `(-180, 180]`, of the mean allocation measured
/// from the (50, 50) origin.
pub fn angle_from_means(mean_self: f64, mean_other: f64) -> f64 {
    let a = (mean_other - 50.0).atan2(mean_self - 50.0).to_degrees();
    if a <= -180.0 {
        a + 360.0
    } else {
        a
    }
}

/// Classification with the shipped thresholds.
pub fn classify(angle: f64) -> SvoCategory {
    Instrument::standard().classify(angle)
}

/// Picks exactly one response for every item of `kind`, in item order.
fn collect<'a>(
    instrument: &'a Instrument,
    kind: ItemKind,
    responses: &[SliderResponse],
) -> Result<Vec<(&'a SliderItem, f64)>, SvoError> {
    let mut by_item: BTreeMap<ItemId, f64> = BTreeMap::new();
    for r in responses {
        let item = instrument.item(r.item).filter(|i| i.kind == kind).ok_or(SvoError::UnknownItem { item: r.item })?;
        if !(0.0..=1.0).contains(&r.position) {
            return Err(SvoError::OutOfRange { item: item.id, position: r.position });
        }
        if by_item.insert(r.item, r.position).is_some() {
            return Err(SvoError::DuplicateItem { item: r.item });
        }
    }
    instrument
        .items
        .iter()
        .filter(|i| i.kind == kind)
        .map(|i| by_item.get(&i.id).map(|&p| (i, p)).ok_or(SvoError::MissingItem { item: i.id }))
        .collect()
}

pub fn score_primary(instrument: &Instrument, responses: &[SliderResponse]) -> Result<PrimaryScore, SvoError> {
    let answered = collect(instrument, ItemKind::Primary, responses)?;
    let n = answered.len() as f64;
    let (sum_self, sum_other) = answered.iter().fold((0.0, 0.0), |(s, o), (item, p)| {
        let a = item.allocation_at(*p);
        (s + a.own, o + a.other)
    });
    let (mean_self, mean_other) = (sum_self / n, sum_other / n);
    Ok(PrimaryScore { mean_self, mean_other, angle: angle_from_means(mean_self, mean_other) })
}

/// Equality index in `[0, 1]`: 1 when every answer sits on the equality
/// ideal, 0 when every answer sits on the joint-gain ideal.
pub fn score_secondary(instrument: &Instrument, responses: &[SliderResponse]) -> Result<f64, SvoError> {
    let answered = collect(instrument, ItemKind::Secondary, responses)?;
    let (mut d_eq, mut d_jg) = (0.0, 0.0);
    for (item, p) in answered {
        let at = item.allocation_at(p);
        d_eq += at.distance(item.ideal_equality.expect("validated"));
        d_jg += at.distance(item.ideal_jointgain.expect("validated"));
    }
    if d_eq + d_jg == 0.0 {
        return Err(SvoError::DegenerateItem);
    }
    Ok(d_jg / (d_eq + d_jg))
}

pub const EQUALITY_INDEX_DIRECTION: &str = "1 = equality-oriented, 0 = joint-gain-oriented";

fn equality_direction() -> String {
    EQUALITY_INDEX_DIRECTION.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvoResult {
    pub mean_self: f64,
    pub mean_other: f64,
    pub angle: f64,
    pub category: SvoCategory,
    /// Absent when no secondary answers were given.
    pub equality_index: Option<f64>,
    #[serde(default = "equality_direction")]
    pub equality_index_direction: String,
}

/// Scores a full answer set. Secondary items are optional as a block: either
/// none or all of them must be answered.
pub fn score(instrument: &Instrument, responses: &[SliderResponse]) -> Result<SvoResult, SvoError> {
    let (primary, secondary): (Vec<SliderResponse>, Vec<SliderResponse>) = responses
        .iter()
        .partition(|r| instrument.item(r.item).is_some_and(|i| i.kind == ItemKind::Primary));
    let p = score_primary(instrument, &primary)?;
    let equality_index = if secondary.is_empty() { None } else { Some(score_secondary(instrument, &secondary)?) };
    Ok(SvoResult {
        mean_self: p.mean_self,
        mean_other: p.mean_other,
        angle: p.angle,
        category: instrument.classify(p.angle),
        equality_index,
        equality_index_direction: equality_direction(),
    })
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    participant: String,
    item_id: ItemId,
    position: f64,
}

/// Reads `participant,item_id,position` rows grouped by participant.
pub fn read_responses_csv(reader: impl Read) -> Result<BTreeMap<String, Vec<SliderResponse>>, SvoError> {
    let mut out: BTreeMap<String, Vec<SliderResponse>> = BTreeMap::new();
    for row in csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader).deserialize() {
        let row: CsvRow = row.map_err(|e| SvoError::Parse { reason: e.to_string() })?;
        out.entry(row.participant).or_default().push(SliderResponse { item: row.item_id, position: row.position });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuestionnaireStage {
    #[default]
    Consent,
    Explanation,
    Practice,
    Responses,
    Complete,
}

/// Persisted outcome of one questionnaire run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvoRecord {
    pub participant: String,
    pub consented_at: DateTime<Utc>,
    pub completed_at: DateTime<Utc>,
    pub responses: Vec<SliderResponse>,
    pub result: SvoResult,
}

/// One participant's pass through consent, explanation, practice and the
/// scored items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Questionnaire {
    pub participant: String,
    pub stage: QuestionnaireStage,
    pub consented_at: Option<DateTime<Utc>>,
    pub responses: BTreeMap<ItemId, f64>,
    pub record: Option<SvoRecord>,
}

impl Questionnaire {
    pub fn new(participant: impl Into<String>) -> Self {
        Self {
            participant: participant.into(),
            stage: QuestionnaireStage::Consent,
            consented_at: None,
            responses: BTreeMap::new(),
            record: None,
        }
    }

    fn expect_stage(&self, expected: QuestionnaireStage) -> Result<(), SvoError> {
        if self.consented_at.is_none() {
            return Err(SvoError::ConsentMissing);
        }
        if self.stage != expected {
            return Err(SvoError::WrongStage { stage: self.stage, expected });
        }
        Ok(())
    }

    pub fn consent(&mut self, at: DateTime<Utc>) -> Result<(), SvoError> {
        if self.stage != QuestionnaireStage::Consent {
            return Err(SvoError::WrongStage { stage: self.stage, expected: QuestionnaireStage::Consent });
        }
        self.consented_at = Some(at);
        self.stage = QuestionnaireStage::Explanation;
        Ok(())
    }

    /// Items to present. Nothing is served before consent.
    pub fn items<'a>(&self, instrument: &'a Instrument) -> Result<&'a [SliderItem], SvoError> {
        if self.consented_at.is_none() {
            return Err(SvoError::ConsentMissing);
        }
        Ok(&instrument.items)
    }

    pub fn finish_explanation(&mut self) -> Result<(), SvoError> {
        self.expect_stage(QuestionnaireStage::Explanation)?;
        self.stage = QuestionnaireStage::Practice;
        Ok(())
    }

    /// Practice answers are range-checked and then dropped.
    pub fn practice(&mut self, response: SliderResponse) -> Result<(), SvoError> {
        self.expect_stage(QuestionnaireStage::Practice)?;
        if !(0.0..=1.0).contains(&response.position) {
            return Err(SvoError::OutOfRange { item: response.item, position: response.position });
        }
        Ok(())
    }

    pub fn finish_practice(&mut self) -> Result<(), SvoError> {
        self.expect_stage(QuestionnaireStage::Practice)?;
        self.stage = QuestionnaireStage::Responses;
        Ok(())
    }

    /// Records an answer; a later answer to the same item replaces it.
    pub fn respond(&mut self, instrument: &Instrument, response: SliderResponse) -> Result<(), SvoError> {
        self.expect_stage(QuestionnaireStage::Responses)?;
        if instrument.item(response.item).is_none() {
            return Err(SvoError::UnknownItem { item: response.item });
        }
        if !(0.0..=1.0).contains(&response.position) {
            return Err(SvoError::OutOfRange { item: response.item, position: response.position });
        }
        self.responses.insert(response.item, response.position);
        Ok(())
    }

    pub fn complete(&mut self, instrument: &Instrument, at: DateTime<Utc>) -> Result<&SvoRecord, SvoError> {
        self.expect_stage(QuestionnaireStage::Responses)?;
        let missing: Vec<ItemId> =
            instrument.items.iter().map(|i| i.id).filter(|id| !self.responses.contains_key(id)).collect();
        if !missing.is_empty() {
            return Err(SvoError::IncompleteResponses { missing });
        }
        let responses: Vec<SliderResponse> =
            self.responses.iter().map(|(&item, &position)| SliderResponse { item, position }).collect();
        let result = score(instrument, &responses)?;
        self.stage = QuestionnaireStage::Complete;
        Ok(self.record.insert(SvoRecord {
            participant: self.participant.clone(),
            consented_at: self.consented_at.expect("checked"),
            completed_at: at,
            responses,
            result,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn primary_at(position: f64) -> Vec<SliderResponse> {
        Instrument::standard().primary().map(|i| SliderResponse { item: i.id, position }).collect()
    }

    #[test]
    fn shipped_catalog_shape() {
        let inst = Instrument::standard();
        assert_eq!(inst.primary().count(), 6);
        assert_eq!(inst.secondary().count(), 9);
        assert_eq!(inst.item(1).unwrap().endpoint_a, Allocation::new(85.0, 85.0));
        assert_eq!(inst.item(6).unwrap().endpoint_b, Allocation::new(85.0, 85.0));
    }

    #[test]
    fn canonical_angles() {
        assert!((angle_from_means(85.0, 85.0) - 45.0).abs() < 1e-12);
        assert_eq!(angle_from_means(100.0, 50.0), 0.0);
        assert!((angle_from_means(50.0, 100.0) - 90.0).abs() < 1e-12);
        assert!((angle_from_means(85.0, 15.0) + 45.0).abs() < 1e-12);
        assert_eq!(angle_from_means(0.0, 50.0), 180.0);
    }

    #[test]
    fn classification_thresholds() {
        assert_eq!(classify(45.0), SvoCategory::Prosocial);
        assert_eq!(classify(0.0), SvoCategory::Individualistic);
        assert_eq!(classify(90.0), SvoCategory::Altruistic);
        assert_eq!(classify(-45.0), SvoCategory::Competitive);
        assert_eq!(classify(57.15), SvoCategory::Prosocial);
        assert_eq!(classify(22.45), SvoCategory::Individualistic);
        assert_eq!(classify(-12.04), SvoCategory::Competitive);
    }

    #[test]
    fn all_left_answers() {
        // Endpoint a of every primary item: (85,85),(85,15),(50,100),(50,100),(100,50),(100,50).
        let s = score_primary(Instrument::standard(), &primary_at(0.0)).unwrap();
        assert!((s.mean_self - 470.0 / 6.0).abs() < 1e-12);
        assert!((s.mean_other - 400.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn primary_errors() {
        let inst = Instrument::standard();
        let mut r = primary_at(0.5);
        r.pop();
        assert_eq!(score_primary(inst, &r), Err(SvoError::MissingItem { item: 6 }));
        let mut r = primary_at(0.5);
        r.push(r[0]);
        assert_eq!(score_primary(inst, &r), Err(SvoError::DuplicateItem { item: 1 }));
        let mut r = primary_at(0.5);
        r[2].position = 1.5;
        assert_eq!(score_primary(inst, &r), Err(SvoError::OutOfRange { item: 3, position: 1.5 }));
    }

    fn secondary_on(pick: impl Fn(&SliderItem) -> Allocation) -> Vec<SliderResponse> {
        Instrument::standard()
            .secondary()
            .map(|i| {
                let target = pick(i);
                let t = i.endpoint_a.distance(target) / i.endpoint_a.distance(i.endpoint_b);
                SliderResponse { item: i.id, position: t }
            })
            .collect()
    }

    #[test]
    fn equality_index_endpoints() {
        let inst = Instrument::standard();
        let eq = score_secondary(inst, &secondary_on(|i| i.ideal_equality.unwrap())).unwrap();
        assert!((eq - 1.0).abs() < 1e-6, "{eq}");
        // Items whose endpoints share a joint sum have coinciding ideals, so
        // exactly 0 needs a catalog without them.
        let mut custom = inst.clone();
        custom.items.retain(|i| i.kind == ItemKind::Primary || i.ideal_equality != i.ideal_jointgain);
        let jg: Vec<SliderResponse> = custom
            .secondary()
            .map(|i| SliderResponse {
                item: i.id,
                position: if i.ideal_jointgain == Some(i.endpoint_a) { 0.0 } else { 1.0 },
            })
            .collect();
        assert_eq!(score_secondary(&custom, &jg).unwrap(), 0.0);
    }

    #[test]
    fn questionnaire_flow() {
        let inst = Instrument::standard();
        let t0 = DateTime::parse_from_rfc3339("2024-05-01T09:00:00Z").unwrap().with_timezone(&Utc);
        let mut q = Questionnaire::new("s1");
        assert_eq!(q.items(inst), Err(SvoError::ConsentMissing));
        assert_eq!(q.respond(inst, SliderResponse { item: 1, position: 0.5 }), Err(SvoError::ConsentMissing));
        q.consent(t0).unwrap();
        q.finish_explanation().unwrap();
        q.practice(SliderResponse { item: 1, position: 0.9 }).unwrap();
        q.finish_practice().unwrap();
        assert!(q.responses.is_empty());
        for item in &inst.items {
            if item.id != 15 {
                q.respond(inst, SliderResponse { item: item.id, position: 0.5 }).unwrap();
            }
        }
        assert_eq!(q.complete(inst, t0), Err(SvoError::IncompleteResponses { missing: vec![15] }));
        q.respond(inst, SliderResponse { item: 15, position: 0.5 }).unwrap();
        let record = q.complete(inst, t0).unwrap().clone();
        assert_eq!(record.responses.len(), 15);
        assert_eq!(q.stage, QuestionnaireStage::Complete);
        let back: Questionnaire = serde_json::from_str(&serde_json::to_string(&q).unwrap()).unwrap();
        assert_eq!(back.record.unwrap(), record);
    }

    #[test]
    fn csv_batch() {
        let text = "participant,item_id,position\np1,1,0.5\np1,2,0.25\np2,1,1\n";
        let m = read_responses_csv(text.as_bytes()).unwrap();
        assert_eq!(m["p1"].len(), 2);
        assert_eq!(m["p2"][0], SliderResponse { item: 1, position: 1.0 });
        assert!(read_responses_csv("participant,item_id,position\np1,x,0.5\n".as_bytes()).is_err());
    }
}
