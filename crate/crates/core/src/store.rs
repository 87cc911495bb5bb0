//! Directory-backed project store.
//!
//! ```text
//! <root>/projects/<project>.json                  canonical project, sessions stripped
//! <root>/sessions/<project>/<session>.jsonl       one logged event per line
//! <root>/questionnaires/<project>/<participant>.json  questionnaire in progress
//! ```
//!
//! Session state is never stored; it is rebuilt by replaying the log.

use std::fs::{self, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consensus::{SessionError, SessionEvent, SessionState};
use crate::project::{load_project, save_project, to_canonical, valid_id, Project, ProjectError};
use crate::svo::Questionnaire;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("project {0} not found")]
    ProjectNotFound(String),
    #[error("session {0} not found")]
    SessionNotFound(String),
    #[error("{0} already exists")]
    AlreadyExists(String),
    #[error("invalid id {0:?}")]
    InvalidId(String),
    #[error(transparent)]
    Project(#[from] ProjectError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("corrupt event log {path} line {line}: {message}")]
    CorruptLog { path: String, line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// An event as recorded in a session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoggedEvent {
    pub seq: u64,
    pub at: DateTime<Utc>,
    pub event: SessionEvent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectSummary {
    pub id: String,
    pub name: String,
    pub template: Option<String>,
}

/// Writes through a temporary sibling and a rename so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

fn check_id(id: &str) -> Result<(), StoreError> {
    if valid_id(id) {
        Ok(())
    } else {
        Err(StoreError::InvalidId(id.to_string()))
    }
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(root.join("projects"))?;
        fs::create_dir_all(root.join("sessions"))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn project_path(&self, id: &str) -> PathBuf {
        self.root.join("projects").join(format!("{id}.json"))
    }

    fn session_dir(&self, project: &str) -> PathBuf {
        self.root.join("sessions").join(project)
    }

    fn log_path(&self, project: &str, session: &str) -> PathBuf {
        self.session_dir(project).join(format!("{session}.jsonl"))
    }

    fn questionnaire_dir(&self, project: &str) -> PathBuf {
        self.root.join("questionnaires").join(project)
    }

    pub fn list_projects(&self) -> Result<Vec<ProjectSummary>, StoreError> {
        let mut out = Vec::new();
        for entry in fs::read_dir(self.root.join("projects"))? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let p = load_project(&fs::read_to_string(&path)?)?;
                out.push(ProjectSummary { id: p.id, name: p.name, template: p.template });
            }
        }
        out.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(out)
    }

    pub fn has_project(&self, id: &str) -> bool {
        valid_id(id) && self.project_path(id).is_file()
    }

    /// The stored project document, without session histories.
    pub fn get_project(&self, id: &str) -> Result<Project, StoreError> {
        check_id(id)?;
        let path = self.project_path(id);
        if !path.is_file() {
            return Err(StoreError::ProjectNotFound(id.to_string()));
        }
        Ok(load_project(&fs::read_to_string(path)?)?)
    }

    /// Replaces the project document. Session histories in `project` are
    /// ignored; sessions live in their logs.
    pub fn put_project(&self, project: &Project) -> Result<(), StoreError> {
        check_id(&project.id)?;
        let mut doc = project.clone();
        doc.sessions.clear();
        let text = save_project(&doc)?;
        write_atomic(&self.project_path(&project.id), text.as_bytes())?;
        Ok(())
    }

    /// Stores a new project and seeds session logs from its histories.
    pub fn create_project(&self, project: &Project, at: DateTime<Utc>) -> Result<(), StoreError> {
        check_id(&project.id)?;
        if self.has_project(&project.id) {
            return Err(StoreError::AlreadyExists(project.id.clone()));
        }
        project.validate()?;
        self.put_project(project)?;
        for (session, events) in &project.sessions {
            self.create_session(&project.id, session)?;
            for e in events {
                self.append_event(&project.id, session, e.clone(), at)?;
            }
        }
        Ok(())
    }

    pub fn delete_project(&self, id: &str) -> Result<(), StoreError> {
        check_id(id)?;
        let path = self.project_path(id);
        if !path.is_file() {
            return Err(StoreError::ProjectNotFound(id.to_string()));
        }
        fs::remove_file(path)?;
        for dir in [self.session_dir(id), self.questionnaire_dir(id)] {
            if dir.is_dir() {
                fs::remove_dir_all(dir)?;
            }
        }
        Ok(())
    }

    /// Project document with session histories filled from the logs.
    pub fn export_project(&self, id: &str) -> Result<Project, StoreError> {
        let mut p = self.get_project(id)?;
        for s in self.list_sessions(id)? {
            p.sessions.insert(s.clone(), self.read_log(id, &s)?.into_iter().map(|l| l.event).collect());
        }
        Ok(p)
    }

    pub fn list_sessions(&self, project: &str) -> Result<Vec<String>, StoreError> {
        check_id(project)?;
        let dir = self.session_dir(project);
        if !dir.is_dir() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "jsonl") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    out.push(stem.to_string());
                }
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn create_session(&self, project: &str, session: &str) -> Result<(), StoreError> {
        check_id(session)?;
        if !self.has_project(project) {
            return Err(StoreError::ProjectNotFound(project.to_string()));
        }
        fs::create_dir_all(self.session_dir(project))?;
        let path = self.log_path(project, session);
        OpenOptions::new().write(true).create_new(true).open(&path).map_err(|e| {
            if e.kind() == io::ErrorKind::AlreadyExists {
                StoreError::AlreadyExists(session.to_string())
            } else {
                e.into()
            }
        })?;
        Ok(())
    }

    pub fn read_log(&self, project: &str, session: &str) -> Result<Vec<LoggedEvent>, StoreError> {
        check_id(project)?;
        check_id(session)?;
        let path = self.log_path(project, session);
        let file = fs::File::open(&path).map_err(|e| {
            if e.kind() == io::ErrorKind::NotFound {
                StoreError::SessionNotFound(session.to_string())
            } else {
                e.into()
            }
        })?;
        let mut out = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let logged: LoggedEvent = serde_json::from_str(&line).map_err(|e| StoreError::CorruptLog {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })?;
            out.push(logged);
        }
        Ok(out)
    }

    /// Current state of a session, rebuilt from its log.
    pub fn replay_session(&self, project: &str, session: &str) -> Result<SessionState, StoreError> {
        let log = self.read_log(project, session)?;
        Ok(SessionState::replay(log.iter().map(|l| &l.event))?)
    }

    /// Applies `event` to the replayed state and appends it to the log only
    /// when the transition is accepted. Callers serialize writes per project.
    pub fn append_event(
        &self,
        project: &str,
        session: &str,
        event: SessionEvent,
        at: DateTime<Utc>,
    ) -> Result<(LoggedEvent, SessionState), StoreError> {
        let log = self.read_log(project, session)?;
        let mut state = SessionState::replay(log.iter().map(|l| &l.event))?;
        state.apply(event.clone())?;
        let logged = LoggedEvent { seq: log.len() as u64 + 1, at, event };
        let mut line = serde_json::to_string(&logged).expect("events serialize");
        line.push('\n');
        let mut file = OpenOptions::new().append(true).open(self.log_path(project, session))?;
        file.write_all(line.as_bytes())?;
        file.sync_data()?;
        Ok((logged, state))
    }

    /// A participant's questionnaire progress, if one was started.
    pub fn get_questionnaire(&self, project: &str, participant: &str) -> Result<Option<Questionnaire>, StoreError> {
        check_id(participant)?;
        if !self.has_project(project) {
            return Err(StoreError::ProjectNotFound(project.to_string()));
        }
        let path = self.questionnaire_dir(project).join(format!("{participant}.json"));
        if !path.is_file() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path)?;
        serde_json::from_str(&text).map(Some).map_err(|e| StoreError::CorruptLog {
            path: path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn put_questionnaire(&self, project: &str, questionnaire: &Questionnaire) -> Result<(), StoreError> {
        check_id(&questionnaire.participant)?;
        if !self.has_project(project) {
            return Err(StoreError::ProjectNotFound(project.to_string()));
        }
        let dir = self.questionnaire_dir(project);
        fs::create_dir_all(&dir)?;
        let path = dir.join(format!("{}.json", questionnaire.participant));
        write_atomic(&path, to_canonical(questionnaire).as_bytes())?;
        Ok(())
    }

    /// Reads any JSON document kept beside the projects, such as accounts.
    pub fn read_aux<T: for<'de> Deserialize<'de>>(&self, name: &str) -> Result<Option<T>, StoreError> {
        check_id(name)?;
        let path = self.root.join(format!("{name}.json"));
        if !path.is_file() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path)?;
        serde_json::from_str(&text).map(Some).map_err(|e| StoreError::CorruptLog {
            path: path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn write_aux<T: Serialize>(&self, name: &str, value: &T) -> Result<(), StoreError> {
        check_id(name)?;
        write_atomic(&self.root.join(format!("{name}.json")), to_canonical(value).as_bytes())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::SessionPhase;

    fn t0() -> DateTime<Utc> {
        DateTime::parse_from_rfc3339("2024-05-01T09:00:00Z").unwrap().with_timezone(&Utc)
    }

    #[test]
    fn project_crud_and_ids() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let p = Project::new("demo", "Demo");
        store.create_project(&p, t0()).unwrap();
        assert!(matches!(store.create_project(&p, t0()), Err(StoreError::AlreadyExists(_))));
        assert_eq!(store.get_project("demo").unwrap(), p);
        assert_eq!(store.list_projects().unwrap().len(), 1);
        assert!(matches!(store.get_project("../etc"), Err(StoreError::InvalidId(_))));
        store.delete_project("demo").unwrap();
        assert!(matches!(store.get_project("demo"), Err(StoreError::ProjectNotFound(_))));
    }

    #[test]
    fn rejected_event_is_not_logged() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        store.create_project(&Project::new("demo", "Demo"), t0()).unwrap();
        store.create_session("demo", "s1").unwrap();
        let err = store.append_event("demo", "s1", SessionEvent::ComputeProposals, t0()).unwrap_err();
        assert!(matches!(err, StoreError::Session(SessionError::IllegalTransition { .. })));
        assert!(store.read_log("demo", "s1").unwrap().is_empty());
        assert_eq!(store.replay_session("demo", "s1").unwrap().phase, SessionPhase::IssueSetting);
    }

    #[test]
    fn questionnaire_progress_survives_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        store.create_project(&Project::new("demo", "Demo"), t0()).unwrap();
        assert_eq!(store.get_questionnaire("demo", "p1").unwrap(), None);
        let mut q = Questionnaire::new("p1");
        q.consent(t0()).unwrap();
        store.put_questionnaire("demo", &q).unwrap();
        assert_eq!(Store::open(dir.path()).unwrap().get_questionnaire("demo", "p1").unwrap(), Some(q));
        store.delete_project("demo").unwrap();
        assert!(!dir.path().join("questionnaires/demo").exists());
    }
}
