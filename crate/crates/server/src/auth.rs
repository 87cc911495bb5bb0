//! Accounts, password hashing and signed bearer tokens.
//!
//! A token is `<id>.<role>.<expires>.<mac>` where `mac` is a hex HMAC-SHA256
//! of the first three fields under the server secret.

use std::collections::BTreeMap;
use std::sync::RwLock;

use axum::extract::FromRequestParts;
use axum::http::header::AUTHORIZATION;
use axum::http::request::Parts;
use chrono::{DateTime, Duration, Utc};
use coos_core::project::valid_id;
use coos_core::store::Store;
use hmac::{Hmac, Mac};
use pbkdf2::password_hash::{PasswordHash, PasswordHasher, PasswordVerifier, SaltString};
use pbkdf2::{Params, Pbkdf2};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::Sha256;

use crate::error::{ApiError, ApiResult};
use crate::state::AppState;

const ACCOUNTS: &str = "accounts";
const SECRET: &str = "token-secret";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Convener,
    Participant,
    Operator,
    Subject,
}

impl Role {
    fn as_str(self) -> &'static str {
        match self {
            Role::Convener => "Convener",
            Role::Participant => "Participant",
            Role::Operator => "Operator",
            Role::Subject => "Subject",
        }
    }

    fn parse(s: &str) -> Option<Role> {
        [Role::Convener, Role::Participant, Role::Operator, Role::Subject].into_iter().find(|r| r.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuthMode {
    /// Every request needs a bearer token.
    #[default]
    Token,
    /// Requests without a token act as an operator. For local single-user use.
    Open,
}

/// PHC-format PBKDF2-SHA256 hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Credential {
    pub hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserAccount {
    pub id: String,
    pub display_name: String,
    pub role: Role,
    pub credential: Credential,
}

/// An account without its credential.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountView {
    pub id: String,
    pub display_name: String,
    pub role: Role,
}

impl From<&UserAccount> for AccountView {
    fn from(a: &UserAccount) -> Self {
        Self { id: a.id.clone(), display_name: a.display_name.clone(), role: a.role }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Registration {
    pub id: String,
    pub display_name: String,
    pub password: String,
    pub role: Role,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Login {
    pub id: String,
    pub password: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub token: String,
    pub expires_at: DateTime<Utc>,
    pub account: AccountView,
}

/// The authenticated identity behind a request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Caller {
    pub id: String,
    pub role: Role,
}

impl Caller {
    /// Operators pass every role check.
    pub fn require(&self, roles: &[Role]) -> ApiResult<()> {
        if self.role == Role::Operator || roles.contains(&self.role) {
            Ok(())
        } else {
            Err(ApiError::forbidden(format!("{} may not perform this action", self.role.as_str())))
        }
    }

    pub fn is_facilitator(&self) -> bool {
        matches!(self.role, Role::Operator | Role::Convener)
    }

    /// Participants and subjects may only act as themselves.
    pub fn acts_for(&self, participant: &str) -> ApiResult<()> {
        if self.is_facilitator() || self.id == participant {
            Ok(())
        } else {
            Err(ApiError::forbidden(format!("{} may not act for {participant}", self.id)))
        }
    }
}

pub struct Auth {
    mode: AuthMode,
    secret: Vec<u8>,
    ttl: Duration,
    params: Params,
    accounts: RwLock<BTreeMap<String, UserAccount>>,
}

impl Auth {
    pub fn load(store: &Store, mode: AuthMode, ttl: Duration, rounds: u32) -> ApiResult<Self> {
        let accounts = store.read_aux::<BTreeMap<String, UserAccount>>(ACCOUNTS)?.unwrap_or_default();
        let secret = match store.read_aux::<String>(SECRET)? {
            Some(hex_secret) => hex::decode(hex_secret).map_err(|e| ApiError::internal(format!("token secret: {e}")))?,
            None => {
                let mut bytes = vec![0u8; 32];
                rand::rng().fill_bytes(&mut bytes);
                store.write_aux(SECRET, &hex::encode(&bytes))?;
                bytes
            }
        };
        let params = Params { rounds, output_length: 32 };
        Ok(Self { mode, secret, ttl, params, accounts: RwLock::new(accounts) })
    }

    pub fn mode(&self) -> AuthMode {
        self.mode
    }

    pub fn has_accounts(&self) -> bool {
        !self.accounts.read().expect("accounts lock").is_empty()
    }

    pub fn account(&self, id: &str) -> Option<AccountView> {
        self.accounts.read().expect("accounts lock").get(id).map(AccountView::from)
    }

    /// Adds an account and persists the account list.
    pub fn register(&self, store: &Store, reg: Registration) -> ApiResult<AccountView> {
        if !valid_id(&reg.id) {
            return Err(ApiError::bad_request(format!("invalid account id {:?}", reg.id)));
        }
        if reg.password.len() < 8 {
            return Err(ApiError::bad_request("password must be at least 8 characters"));
        }
        let mut salt = [0u8; 16];
        rand::rng().fill_bytes(&mut salt);
        let salt = SaltString::encode_b64(&salt).map_err(|e| ApiError::internal(e.to_string()))?;
        let hash = Pbkdf2
            .hash_password_customized(reg.password.as_bytes(), None, None, self.params, &salt)
            .map_err(|e| ApiError::internal(e.to_string()))?
            .to_string();
        let account =
            UserAccount { id: reg.id, display_name: reg.display_name, role: reg.role, credential: Credential { hash } };
        let mut accounts = self.accounts.write().expect("accounts lock");
        if accounts.contains_key(&account.id) {
            return Err(ApiError::conflict("AlreadyExists", format!("account {} already exists", account.id)));
        }
        let view = AccountView::from(&account);
        accounts.insert(account.id.clone(), account);
        if let Err(e) = store.write_aux(ACCOUNTS, &*accounts) {
            accounts.remove(&view.id);
            return Err(e.into());
        }
        Ok(view)
    }

    pub fn login(&self, login: &Login, now: DateTime<Utc>) -> ApiResult<Session> {
        let account = self.accounts.read().expect("accounts lock").get(&login.id).cloned();
        let failed = || ApiError::unauthorized("unknown account or wrong password");
        let account = account.ok_or_else(failed)?;
        let parsed = PasswordHash::new(&account.credential.hash).map_err(|e| ApiError::internal(e.to_string()))?;
        Pbkdf2.verify_password(login.password.as_bytes(), &parsed).map_err(|_| failed())?;
        let expires_at = now + self.ttl;
        Ok(Session { token: self.sign(&account.id, account.role, expires_at), expires_at, account: (&account).into() })
    }

    fn mac(&self) -> Hmac<Sha256> {
        Hmac::<Sha256>::new_from_slice(&self.secret).expect("hmac takes any key length")
    }

    fn sign(&self, id: &str, role: Role, expires_at: DateTime<Utc>) -> String {
        let payload = format!("{id}.{}.{}", role.as_str(), expires_at.timestamp());
        let mut mac = self.mac();
        mac.update(payload.as_bytes());
        format!("{payload}.{}", hex::encode(mac.finalize().into_bytes()))
    }

    pub fn verify(&self, token: &str, now: DateTime<Utc>) -> ApiResult<Caller> {
        let invalid = || ApiError::unauthorized("invalid token");
        let (payload, mac_hex) = token.rsplit_once('.').ok_or_else(invalid)?;
        let mut mac = self.mac();
        mac.update(payload.as_bytes());
        mac.verify_slice(&hex::decode(mac_hex).map_err(|_| invalid())?).map_err(|_| invalid())?;
        let mut parts = payload.splitn(3, '.');
        let (id, role, exp) = match (parts.next(), parts.next(), parts.next()) {
            (Some(id), Some(role), Some(exp)) => (id, role, exp),
            _ => return Err(invalid()),
        };
        let role = Role::parse(role).ok_or_else(invalid)?;
        let exp: i64 = exp.parse().map_err(|_| invalid())?;
        if now.timestamp() >= exp {
            return Err(ApiError::unauthorized("token expired"));
        }
        match self.account(id) {
            Some(a) if a.role == role => Ok(Caller { id: id.to_string(), role }),
            _ => Err(invalid()),
        }
    }
}

impl FromRequestParts<AppState> for Caller {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, Self::Rejection> {
        let auth = state.auth();
        let header = parts.headers.get(AUTHORIZATION);
        match header {
            None if auth.mode() == AuthMode::Open => Ok(Caller { id: "open".into(), role: Role::Operator }),
            None => Err(ApiError::unauthorized("missing bearer token")),
            Some(value) => {
                let token = value
                    .to_str()
                    .ok()
                    .and_then(|v| v.strip_prefix("Bearer "))
                    .ok_or_else(|| ApiError::unauthorized("expected a bearer token"))?;
                auth.verify(token.trim(), Utc::now())
            }
        }
    }
}

/// Like [`Caller`] but absent when no token was sent.
pub struct MaybeCaller(pub Option<Caller>);

impl FromRequestParts<AppState> for MaybeCaller {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, Self::Rejection> {
        if parts.headers.contains_key(AUTHORIZATION) {
            Caller::from_request_parts(parts, state).await.map(|c| MaybeCaller(Some(c)))
        } else {
            Ok(MaybeCaller(None))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn auth(dir: &std::path::Path) -> (Store, Auth) {
        let store = Store::open(dir).unwrap();
        let auth = Auth::load(&store, AuthMode::Token, Duration::hours(1), 1000).unwrap();
        (store, auth)
    }

    fn reg(id: &str, role: Role) -> Registration {
        Registration { id: id.into(), display_name: id.to_uppercase(), password: "correct horse".into(), role }
    }

    #[test]
    fn token_round_trip_and_tampering() {
        let dir = tempfile::tempdir().unwrap();
        let (store, auth) = auth(dir.path());
        auth.register(&store, reg("ana", Role::Participant)).unwrap();
        let now = Utc::now();
        let s = auth.login(&Login { id: "ana".into(), password: "correct horse".into() }, now).unwrap();
        assert_eq!(auth.verify(&s.token, now).unwrap(), Caller { id: "ana".into(), role: Role::Participant });
        let forged = s.token.replacen("Participant", "Operator", 1);
        assert_eq!(auth.verify(&forged, now).unwrap_err().status, 401);
        assert_eq!(auth.verify(&s.token, now + Duration::hours(2)).unwrap_err().body.message, "token expired");
        assert!(auth.login(&Login { id: "ana".into(), password: "wrong one".into() }, now).is_err());
    }

    #[test]
    fn accounts_and_secret_persist() {
        let dir = tempfile::tempdir().unwrap();
        let (store, first) = auth(dir.path());
        first.register(&store, reg("bo", Role::Convener)).unwrap();
        assert_eq!(first.register(&store, reg("bo", Role::Convener)).unwrap_err().status, 409);
        let now = Utc::now();
        let token = first.login(&Login { id: "bo".into(), password: "correct horse".into() }, now).unwrap().token;
        let (_, second) = auth(dir.path());
        assert_eq!(second.verify(&token, now).unwrap().role, Role::Convener);
        let stored = std::fs::read_to_string(dir.path().join("accounts.json")).unwrap();
        assert!(!stored.contains("correct horse"));
    }
}
