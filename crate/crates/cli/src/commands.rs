use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use coos_core::behavior::{feature_sensitivity, predict, simulate_interventions, FeatureVector, InterventionPlan};
use coos_core::consensus::oracle::{compromise_ranking, permissible_choice};
use coos_core::consensus::{
    analyze, compromise_exploration, permissible_meeting, AnalysisConfig, ChoiceSet, PreferenceProfile,
    SessionState,
};
use coos_core::impact::{advanced_trajectory, rank_inputs, sensitivities_csv, AdvancedSettings, LogicModel};
use coos_core::policy::{
    compare_policies, evaluate_batch, normalize_ternary, ternary_csv, MultiAgentModel, ScaleMode, Triple,
};
use coos_core::project::{
    from_template, load_project_file, save_project, save_project_file, template_names, to_canonical, BehaviorConfig,
    Project,
};
use coos_core::svo::{read_responses_csv, score, Instrument};
use coos_server::{AppState, AuthMode, ServerConfig};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use crate::error::CliError;
use crate::{
    AuthArg, BehaviorCmd, Cli, Command, ConsensusCmd, Format, ImpactCmd, Mode, ProfileSource, ProjectCmd, ServeArgs,
    SimCmd, Subject, SvoCmd,
};

type Result<T> = std::result::Result<T, CliError>;

fn rt(e: impl std::fmt::Display) -> CliError {
    CliError::runtime(e)
}

fn print_json<T: Serialize>(value: &T) {
    print!("{}", to_canonical(value));
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| rt(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

fn project_path(cli: &Cli) -> Result<&Path> {
    cli.project.as_deref().ok_or_else(|| CliError::invalid("--project <file> is required"))
}

fn load(cli: &Cli) -> Result<Project> {
    Ok(load_project_file(project_path(cli)?)?)
}

fn missing(what: &str) -> CliError {
    CliError::invalid(format!("project has no {what}"))
}

pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Project(cmd) => project(&cli, cmd),
        Command::Impact(cmd) => {
            let p = load(&cli)?;
            impact(p.logic_model.as_ref().ok_or_else(|| missing("logic model"))?, cmd)
        }
        Command::Sim(cmd) => sim(&load(&cli)?, cmd),
        Command::Consensus(cmd) => consensus(&cli, cmd),
        Command::Svo(SvoCmd::Score { responses }) => svo_score(responses),
        Command::Behavior(cmd) => {
            let p = load(&cli)?;
            behavior(p.behavior.as_ref().ok_or_else(|| missing("behavior settings"))?, cmd)
        }
        Command::Serve(args) => serve(args),
    }
}

fn project(cli: &Cli, cmd: &ProjectCmd) -> Result<()> {
    match cmd {
        ProjectCmd::New { id, name, template, force } => {
            let path = project_path(cli)?;
            if path.exists() && !force {
                return Err(rt(format!("{} exists; pass --force to replace it", path.display())));
            }
            let p = match template {
                Some(t) => from_template(t, id, name)?,
                None => Project::new(id.as_str(), name.as_str()),
            };
            save_project_file(&p, path)?;
            println!("{}", path.display());
        }
        ProjectCmd::Load => print!("{}", save_project(&load(cli)?)?),
        ProjectCmd::Validate => {
            let p = load(cli)?;
            println!("{}: valid project {}", project_path(cli)?.display(), p.id);
        }
        ProjectCmd::Templates => template_names().for_each(|t| println!("{t}")),
    }
    Ok(())
}

fn impact(model: &LogicModel, cmd: &ImpactCmd) -> Result<()> {
    match cmd {
        ImpactCmd::Rank { format } => {
            let ranked = rank_inputs(model).map_err(rt)?;
            match format {
                Format::Json => print_json(&ranked),
                Format::Csv => print!("{}", sensitivities_csv(&ranked).map_err(rt)?),
            }
        }
        ImpactCmd::Trajectory { settings } => {
            let settings: AdvancedSettings = match settings {
                Some(path) => read_json(path)?,
                None => model.advanced_settings.clone().ok_or_else(|| missing("advanced settings"))?,
            };
            let impact = advanced_trajectory(model, &settings).map_err(rt)?;
            print_json(&json!({ "settings": settings, "impact": impact }));
        }
    }
    Ok(())
}

fn scale(mode: Mode) -> ScaleMode {
    match mode {
        Mode::Range => ScaleMode::Range,
        Mode::Minmax => ScaleMode::Minmax,
    }
}

fn sim(p: &Project, cmd: &SimCmd) -> Result<()> {
    let model: &MultiAgentModel = p.multi_agent.as_ref().ok_or_else(|| missing("multi-agent model"))?;
    let raws = || evaluate_batch(model, &p.scenarios).map_err(rt);
    match cmd {
        SimCmd::Evaluate => {
            let rows: Vec<_> = p
                .scenarios
                .iter()
                .zip(raws()?)
                .map(|(s, raw)| json!({ "id": s.id, "label": s.label, "raw": raw }))
                .collect();
            print_json(&rows);
        }
        SimCmd::Ternary { mode, format } => {
            let keyed: Vec<(String, Triple)> = p.scenarios.iter().map(|s| s.id.clone()).zip(raws()?).collect();
            let points = normalize_ternary(&keyed, scale(*mode)).map_err(rt)?;
            match format {
                Format::Json => {
                    print_json(&points.iter().map(|(id, point)| json!({ "id": id, "point": point })).collect::<Vec<_>>())
                }
                Format::Csv => print!("{}", ternary_csv(&points).map_err(rt)?),
            }
        }
        SimCmd::Compare { selected, mode } => {
            print_json(&compare_policies(model, &p.scenarios, selected.as_deref(), scale(*mode)).map_err(rt)?)
        }
    }
    Ok(())
}

struct Instance {
    name: String,
    profiles: Vec<PreferenceProfile>,
    choices: Option<ChoiceSet>,
    config: AnalysisConfig,
}

fn instance(cli: &Cli, source: &ProfileSource) -> Result<Option<Instance>> {
    match (&source.session, &source.profiles) {
        (Some(session), _) => {
            let p = load(cli)?;
            let events = p.sessions.get(session).ok_or_else(|| CliError::invalid(format!("no session {session}")))?;
            let state = SessionState::replay(events).map_err(CliError::invalid)?;
            if state.profiles.is_empty() {
                return Err(CliError::invalid(format!("session {session} has no profiles")));
            }
            Ok(Some(Instance {
                name: format!("session {session}"),
                profiles: state.profiles.into_values().collect(),
                choices: state.issue.map(|i| i.choices),
                config: state.config,
            }))
        }
        (None, Some(path)) => {
            let profiles: Vec<PreferenceProfile> = read_json(path)?;
            let choices = match &cli.project {
                Some(_) => load(cli)?.choices,
                None => None,
            };
            if let Some(c) = &choices {
                for prof in &profiles {
                    prof.validate_against(c).map_err(CliError::invalid)?;
                }
            }
            Ok(Some(Instance { name: path.display().to_string(), profiles, choices, config: AnalysisConfig::default() }))
        }
        (None, None) => Ok(None),
    }
}

fn consensus(cli: &Cli, cmd: &ConsensusCmd) -> Result<()> {
    match cmd {
        ConsensusCmd::Analyze { source } => {
            let inst = instance(cli, source)?.ok_or_else(|| CliError::invalid("give --session or --profiles"))?;
            let choices = inst.choices.ok_or_else(|| missing("choice set"))?;
            let proposals = analyze(&inst.profiles, &choices, inst.config.compromise, inst.config.selection)
                .map_err(CliError::invalid)?;
            print_json(&proposals);
        }
        ConsensusCmd::OracleCheck { source, random, seed } => {
            let mut instances: Vec<Instance> = instance(cli, source)?.into_iter().collect();
            let mut rng = StdRng::seed_from_u64(*seed);
            instances.extend((0..*random).map(|i| Instance {
                name: format!("random {i}"),
                profiles: random_profiles(&mut rng),
                choices: None,
                config: AnalysisConfig::default(),
            }));
            if instances.is_empty() {
                return Err(CliError::invalid("nothing to check: give --session, --profiles or --random"));
            }
            let mut disagreements = 0;
            for inst in &instances {
                match oracle_check(inst)? {
                    Some(problem) => {
                        disagreements += 1;
                        println!("DISAGREE  {}: {problem}", inst.name);
                    }
                    None => println!("agree     {}", inst.name),
                }
            }
            println!("{} instances, {disagreements} disagreements", instances.len());
            if disagreements > 0 {
                return Err(rt(format!("{disagreements} instances disagree with exhaustive search")));
            }
        }
    }
    Ok(())
}

fn random_profiles(rng: &mut StdRng) -> Vec<PreferenceProfile> {
    let m = rng.random_range(2..=5);
    let n = rng.random_range(1..=6);
    let choices: Vec<String> = (0..m).map(|i| format!("c{i}")).collect();
    (0..n)
        .map(|i| {
            let mut order = choices.clone();
            order.shuffle(rng);
            PreferenceProfile {
                participant: format!("p{i}"),
                order,
                permissible_k: rng.random_range(1..=m),
                factor_importance: BTreeMap::new(),
            }
        })
        .collect()
}

/// `None` when both proposals match the exhaustive oracles.
fn oracle_check(inst: &Instance) -> Result<Option<String>> {
    let fast = permissible_meeting(&inst.profiles).map_err(CliError::invalid)?;
    let (choice, cost) = permissible_choice(&inst.profiles).map_err(CliError::invalid)?;
    if (fast.choice.as_str(), fast.widening_cost) != (choice.as_str(), cost) {
        return Ok(Some(format!("permissible {} ({}) vs oracle {choice} ({cost})", fast.choice, fast.widening_cost)));
    }
    let fast = compromise_exploration(&inst.profiles, inst.config.compromise).map_err(CliError::invalid)?;
    if fast.approximate {
        return Ok(None);
    }
    let (ranking, total, max) = compromise_ranking(&inst.profiles).map_err(CliError::invalid)?;
    if (&fast.ranking, fast.total_distance, fast.max_distance) != (&ranking, total, max) {
        return Ok(Some(format!(
            "compromise {:?} ({}/{}) vs oracle {ranking:?} ({total}/{max})",
            fast.ranking, fast.total_distance, fast.max_distance
        )));
    }
    Ok(None)
}

fn svo_score(path: &Path) -> Result<()> {
    let file = fs::File::open(path).map_err(|e| rt(format!("{}: {e}", path.display())))?;
    let by_participant = read_responses_csv(file).map_err(CliError::invalid)?;
    let mut results = BTreeMap::new();
    let mut failures = Vec::new();
    for (participant, responses) in by_participant {
        match score(Instrument::standard(), &responses) {
            Ok(r) => {
                results.insert(participant, r);
            }
            Err(e) => failures.push(format!("{participant}: {e}")),
        }
    }
    print_json(&results);
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::invalid(failures.join("\n")))
    }
}

fn features(config: &BehaviorConfig, who: &Subject) -> Result<FeatureVector> {
    match (&who.features, &who.subject) {
        (Some(path), _) => read_json(path),
        (None, Some(s)) => {
            config.subjects.subjects.get(s).cloned().ok_or_else(|| CliError::invalid(format!("no subject {s}")))
        }
        (None, None) => Ok(config.baseline.clone()),
    }
}

fn behavior(config: &BehaviorConfig, cmd: &BehaviorCmd) -> Result<()> {
    let catalog = config.catalog();
    match cmd {
        BehaviorCmd::Predict { who } => {
            let x = features(config, who)?;
            let p = predict(&config.model, catalog, &x).map_err(CliError::invalid)?;
            let (full, _) = catalog.complete(&x).map_err(CliError::invalid)?;
            let sensitivity = feature_sensitivity(&config.model, catalog, &full).map_err(rt)?;
            print_json(&json!({ "rate": p.rate, "filled_defaults": p.filled_defaults, "sensitivity": sensitivity }));
        }
        BehaviorCmd::Rank { who, plans, format } => {
            let x = features(config, who)?;
            let plans: Vec<InterventionPlan> = match plans {
                Some(path) => read_json(path)?,
                None => config.plans.clone(),
            };
            let report = simulate_interventions(&config.model, catalog, &x, &plans).map_err(CliError::invalid)?;
            for f in &report.failures {
                eprintln!("plan {} skipped: {}", f.plan_id, f.error);
            }
            match format {
                Format::Json => print_json(&report),
                Format::Csv => print!("{}", report.to_csv()),
            }
        }
    }
    Ok(())
}

fn serve(args: &ServeArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| rt(format!("{}: {e}", path.display())))?;
            toml::from_str::<ServerConfig>(&text).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?
        }
        None => ServerConfig::new(args.data_dir.clone().ok_or_else(|| CliError::invalid("--data-dir is required"))?),
    };
    if let Some(dir) = &args.data_dir {
        config.data_dir = dir.clone();
    }
    if let Some(bind) = args.bind {
        config.bind = bind;
    }
    if let Some(auth) = args.auth {
        config.auth = match auth {
            AuthArg::Token => AuthMode::Token,
            AuthArg::Open => AuthMode::Open,
        };
    }
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    let state = AppState::new(config.clone()).map_err(|e| rt(e.body.message))?;
    let runtime = tokio::runtime::Runtime::new().map_err(rt)?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(config.bind).await.map_err(rt)?;
        println!("listening on http://{}", listener.local_addr().map_err(rt)?);
        std::io::stdout().flush().map_err(rt)?;
        coos_server::run(listener, state, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(rt)
    })
}
