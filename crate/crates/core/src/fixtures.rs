//! The unused housing and land stock project used as the shipped example and
//! as a shared test fixture.
//!
//! Graph weights, participant profiles and questionnaire answers are
//! illustrative. The four policy input allocations and the choice and factor
//! catalogs follow the worked community example.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};

use crate::behavior::{unused_stock_menu, unused_stock_owners, CooperationModel, FeatureCatalog, SubjectRegistry};
use crate::consensus::{AnalysisConfig, Approval, Choice, ChoiceSet, Issue, PreferenceProfile, SessionEvent};
use crate::graph::{NodeKind, WeightedGraph};
use crate::impact::LogicModel;
use crate::policy::{MultiAgentModel, PolicyScenario, ValueDimension};
use crate::project::{BehaviorConfig, Project};
use crate::svo::{score, Instrument, SliderResponse, SvoRecord};

pub const PROJECT_ID: &str = "unused-stock";
pub const SESSION_ID: &str = "consensus-1";

/// Logic model from four candidate activities (A to D) to the regional
/// impact.
pub fn unused_stock_logic_model() -> LogicModel {
    use NodeKind::*;
    let g = WeightedGraph::new()
        .node("A", "Farmland and forest production", Input)
        .node("B", "Regional energy", Input)
        .node("C", "Regional product sales", Input)
        .node("D", "Vacant home renovation and tourism", Input)
        .node("o_farmland", "Farmland brought back into use", Output)
        .node("o_energy", "Local energy supply", Output)
        .node("o_products", "Regional products sold", Output)
        .node("o_housing", "Homes renovated", Output)
        .node("s_jobs", "New jobs", OutcomeShort)
        .node("s_income", "Household income", OutcomeShort)
        .node("s_visitors", "Visitors", OutcomeShort)
        .node("m_economy", "Regional economy", OutcomeMid)
        .node("m_culture", "Community culture", OutcomeMid)
        .node("m_landscape", "Landscape", OutcomeMid)
        .node("l_selfreliance", "Economic self-reliance", OutcomeLong)
        .node("l_coexistence", "Coexistence with nature", OutcomeLong)
        .node("impact", "Sustainable regional community", Impact)
        .edge("A", "o_farmland", 0.8)
        .edge("A", "o_products", 0.2)
        .edge("B", "o_energy", 0.9)
        .edge("B", "o_farmland", 0.3)
        .edge("C", "o_products", 0.9)
        .edge("C", "o_farmland", 0.4)
        .edge("D", "o_housing", 0.9)
        .edge("D", "o_farmland", -0.2)
        .edge("o_farmland", "s_jobs", 0.5)
        .edge("o_farmland", "s_income", 0.3)
        .edge("o_farmland", "m_landscape", 0.6)
        .edge("o_energy", "s_income", 0.5)
        .edge("o_energy", "s_jobs", 0.3)
        .edge("o_energy", "m_landscape", 0.4)
        .edge("o_products", "s_income", 0.7)
        .edge("o_products", "s_jobs", 0.4)
        .edge("o_housing", "s_visitors", 0.8)
        .edge("o_housing", "s_income", 0.1)
        .edge("s_income", "m_economy", 0.8)
        .edge("s_jobs", "m_economy", 0.4)
        .edge("s_jobs", "m_culture", 0.5)
        .edge("s_visitors", "m_economy", 0.3)
        .edge("s_visitors", "m_culture", -0.4)
        .edge("m_economy", "l_selfreliance", 0.9)
        .edge("m_culture", "l_coexistence", 0.6)
        .edge("m_landscape", "l_coexistence", 0.7)
        .edge("l_selfreliance", "impact", 0.6)
        .edge("l_coexistence", "impact", 0.5);
    LogicModel::new(g, "impact")
}

/// Funding sources flowing through business and community factors into the
/// social, environmental and economic values.
pub fn unused_stock_multi_agent() -> MultiAgentModel {
    use NodeKind::*;
    let g = WeightedGraph::new()
        .node("resident_fund", "Resident fund", Input)
        .node("external_capital", "External capital", Input)
        .node("regional_finance", "Regional finance", Input)
        .node("central_finance", "Central finance", Input)
        .node("municipal_subsidy", "Municipal subsidy", Input)
        .node("inbound_revenue", "Inbound revenue", Input)
        .node("i_business", "Business activity", IntermediateOutcome)
        .node("i_local_revenue", "Locally retained revenue", IntermediateOutcome)
        .node("i_outflow", "Revenue outflow", IntermediateOutcome)
        .node("i_stewardship", "Land stewardship", IntermediateOutcome)
        .node("i_community", "Community ties", IntermediateOutcome)
        .node("soc", "Social value", ValueSoc)
        .node("env", "Environmental value", ValueEnv)
        .node("eco", "Economic value", ValueEco)
        .edge("resident_fund", "i_community", 0.8)
        .edge("resident_fund", "i_local_revenue", 0.3)
        .edge("external_capital", "i_business", 0.9)
        .edge("external_capital", "i_outflow", 0.7)
        .edge("regional_finance", "i_stewardship", 0.8)
        .edge("regional_finance", "i_local_revenue", 0.5)
        .edge("central_finance", "i_business", 0.7)
        .edge("central_finance", "i_outflow", 0.3)
        .edge("municipal_subsidy", "i_stewardship", 0.6)
        .edge("municipal_subsidy", "i_community", 0.6)
        .edge("inbound_revenue", "i_business", 0.5)
        .edge("inbound_revenue", "i_community", -0.3)
        .edge("i_business", "eco", 0.9)
        .edge("i_business", "env", -0.1)
        .edge("i_local_revenue", "eco", 0.4)
        .edge("i_local_revenue", "soc", 0.5)
        .edge("i_outflow", "soc", -0.4)
        .edge("i_outflow", "eco", -0.2)
        .edge("i_stewardship", "env", 0.9)
        .edge("i_stewardship", "soc", 0.3)
        .edge("i_community", "soc", 0.8);
    MultiAgentModel {
        graph: g,
        value_nodes: [
            (ValueDimension::Soc, "soc".to_string()),
            (ValueDimension::Env, "env".to_string()),
            (ValueDimension::Eco, "eco".to_string()),
        ]
        .into(),
    }
}

const INPUT_COLUMNS: [&str; 6] =
    ["resident_fund", "external_capital", "regional_finance", "central_finance", "municipal_subsidy", "inbound_revenue"];

/// Fund allocations of the four policy proposals.
pub fn policy_scenarios() -> Vec<PolicyScenario> {
    let rows: [(&str, &str, [f64; 6]); 4] = [
        ("A", "Farmland and forest production", [0.1, 0.0, 0.7, 0.0, 0.2, 0.0]),
        ("B", "Regional energy", [0.1, 0.5, 0.1, 0.2, 0.1, 0.0]),
        ("C", "Regional product sales", [0.1, 0.0, 0.2, 0.0, 0.7, 0.0]),
        ("D", "Vacant home renovation and tourism", [0.1, 0.1, 0.2, 0.2, 0.1, 0.3]),
    ];
    rows.iter()
        .map(|(id, label, x)| PolicyScenario {
            id: id.to_string(),
            label: label.to_string(),
            inputs: INPUT_COLUMNS.iter().zip(x).map(|(k, v)| (k.to_string(), *v)).collect(),
            allocation: true,
        })
        .collect()
}

pub fn unused_stock_choices() -> ChoiceSet {
    let factors: BTreeMap<String, String> = [
        ("agriculture", "Revitalization of regional agriculture"),
        ("forestry", "Revitalization of regional forestry"),
        ("tourism", "Revitalization of tourism industry"),
        ("energy_costs", "Reduction in energy costs"),
        ("environment", "Environmental conservation"),
        ("jobs", "Job creation"),
        ("profitability", "Business profitability"),
        ("brands", "Establishment of regional brands"),
        ("circulation", "Intra-regional economic circulation"),
        ("migration", "Promotion of migration and settlement"),
    ]
    .iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();
    let choices = [
        ("A", "Production on idle farmland and forest", &["agriculture", "forestry", "jobs", "circulation"][..]),
        ("B", "Regional energy from idle land", &["forestry", "energy_costs", "environment", "profitability"]),
        ("C", "Sales of regional products", &["agriculture", "brands", "circulation", "profitability"]),
        ("AxB", "Combined production and energy", &["agriculture", "forestry", "energy_costs", "environment", "jobs"]),
        ("BxC", "Ecological sales with local energy", &["energy_costs", "tourism", "brands", "profitability", "environment"]),
        ("CxA", "Local production for local consumption", &["agriculture", "forestry", "brands", "circulation", "jobs", "migration"]),
    ]
    .iter()
    .map(|(id, label, fs)| Choice {
        id: id.to_string(),
        label: label.to_string(),
        factors: fs.iter().map(|f| f.to_string()).collect(),
    })
    .collect();
    ChoiceSet { choices, factors }
}

/// Five residents' preferences over the six choices.
pub fn unused_stock_profiles() -> Vec<PreferenceProfile> {
    let rows: [(&str, [&str; 6], usize, [f64; 10]); 5] = [
        ("P", ["CxA", "A", "AxB", "C", "B", "BxC"], 2, [1.0, 0.8, 0.2, 0.3, 0.5, 0.9, 0.4, 0.6, 0.8, 0.7]),
        ("Q", ["BxC", "C", "AxB", "CxA", "B", "A"], 3, [0.3, 0.2, 0.9, 0.6, 0.7, 0.5, 1.0, 0.9, 0.4, 0.2]),
        ("R", ["A", "CxA", "AxB", "C", "B", "BxC"], 2, [0.9, 0.9, 0.1, 0.2, 0.6, 0.8, 0.3, 0.4, 0.7, 0.5]),
        ("S", ["B", "AxB", "BxC", "C", "A", "CxA"], 2, [0.4, 0.7, 0.3, 1.0, 0.9, 0.3, 0.6, 0.2, 0.3, 0.1]),
        ("T", ["AxB", "B", "CxA", "A", "BxC", "C"], 3, [0.7, 0.6, 0.4, 0.8, 0.8, 0.7, 0.5, 0.3, 0.5, 0.6]),
    ];
    let columns = [
        "agriculture", "forestry", "tourism", "energy_costs", "environment", "jobs", "profitability", "brands",
        "circulation", "migration",
    ];
    rows.iter()
        .map(|(id, order, k, h)| {
            let mut p = PreferenceProfile::new(id, order, *k);
            p.factor_importance = columns.iter().zip(h).map(|(f, v)| (f.to_string(), *v)).collect();
            p
        })
        .collect()
}

/// A complete session that ends in consensus on the combined production and
/// energy project.
pub fn unused_stock_session() -> Vec<SessionEvent> {
    let profiles = unused_stock_profiles();
    let issue = Issue {
        agenda: "Use of abandoned farmland, neglected forest and vacant homes".into(),
        choices: unused_stock_choices(),
        participants: profiles.iter().map(|p| p.participant.clone()).collect(),
    };
    let mut events = vec![SessionEvent::FinalizeIssue { issue, config: AnalysisConfig::default() }];
    events.extend(profiles.iter().cloned().map(|profile| SessionEvent::SubmitProfile { profile }));
    events.push(SessionEvent::StartAnalysis { facilitator_close: false });
    events.push(SessionEvent::ComputeProposals);
    events.push(SessionEvent::CallQuestion { choice: "AxB".into() });
    events.extend(
        profiles
            .iter()
            .map(|p| SessionEvent::CastApproval { participant: p.participant.clone(), vote: Approval::Approve }),
    );
    events
}

fn at(s: &str) -> DateTime<Utc> {
    DateTime::parse_from_rfc3339(s).expect("fixture timestamp").with_timezone(&Utc)
}

fn svo_record(participant: &str, primary: [f64; 6], secondary: f64, day: &str) -> SvoRecord {
    let instrument = Instrument::standard();
    let mut responses: Vec<SliderResponse> =
        primary.iter().enumerate().map(|(i, p)| SliderResponse { item: i as u32 + 1, position: *p }).collect();
    responses.extend(instrument.secondary().map(|it| SliderResponse { item: it.id, position: secondary }));
    let result = score(instrument, &responses).expect("fixture answers are complete");
    SvoRecord {
        participant: participant.to_string(),
        consented_at: at(&format!("{day}T10:00:00Z")),
        completed_at: at(&format!("{day}T10:12:00Z")),
        responses,
        result,
    }
}

/// Questionnaire results of two owners of vacant homes.
pub fn unused_stock_svo() -> BTreeMap<String, SvoRecord> {
    [
        svo_record("owner-01", [0.5, 1.0, 1.0, 1.0, 0.0, 0.0], 0.5, "2024-06-03"),
        svo_record("owner-02", [0.5; 6], 0.5, "2024-06-04"),
    ]
    .into_iter()
    .map(|r| (r.participant.clone(), r))
    .collect()
}

pub fn unused_stock_behavior(svo: &BTreeMap<String, SvoRecord>) -> BehaviorConfig {
    let mut subjects = SubjectRegistry::default();
    subjects
        .import_svo(FeatureCatalog::standard(), svo.iter().map(|(k, r)| (k.as_str(), &r.result)))
        .expect("standard catalog has the SVO feature");
    BehaviorConfig {
        model: CooperationModel::reference(),
        features: None,
        baseline: unused_stock_owners(),
        plans: unused_stock_menu(),
        sustainability: Default::default(),
        subjects,
        monitoring: BTreeMap::new(),
    }
}

/// The whole example project.
pub fn unused_stock_project() -> Project {
    let mut p = Project::new(PROJECT_ID, "Unused stock utilization");
    p.template = Some(PROJECT_ID.into());
    p.logic_model = Some(unused_stock_logic_model());
    p.multi_agent = Some(unused_stock_multi_agent());
    p.scenarios = policy_scenarios();
    p.choices = Some(unused_stock_choices());
    p.sessions.insert(SESSION_ID.into(), unused_stock_session());
    p.svo_results = unused_stock_svo();
    p.behavior = Some(unused_stock_behavior(&p.svo_results));
    p
}

/// Minimal project for templates that only fix the impact goal.
pub fn skeleton_project(id: &str, name: &str, impact_label: &str) -> Project {
    let mut p = Project::new(id, name);
    p.template = Some(id.into());
    p.logic_model = Some(LogicModel::new(WeightedGraph::new().node("impact", impact_label, NodeKind::Impact), "impact"));
    p
}

pub fn skeleton_templates() -> Vec<Project> {
    vec![
        skeleton_project("municipal-planning", "Municipal planning", "Livable municipality"),
        skeleton_project("citizen-council", "Citizen council", "Shared civic decisions"),
        skeleton_project("cooperative-management", "Cooperative management", "Sustainable cooperative"),
        skeleton_project("local-supply-chain", "Local supply chain", "Resilient local supply"),
    ]
}
