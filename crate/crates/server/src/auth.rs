use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::PathBuf;

use argon2::password_hash::{PasswordHash, PasswordHasher, PasswordVerifier, SaltString};
use argon2::Argon2;
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use topiary_core::UserId;

/// Accounts with argon2 password hashes, optionally persisted as
/// `users.json`.
#[derive(Default)]
pub struct UserStore {
    path: Option<PathBuf>,
    hashes: RwLock<BTreeMap<UserId, String>>,
    sessions: RwLock<HashMap<String, UserId>>,
}

#[derive(Serialize, Deserialize, Default)]
struct UsersFile {
    users: BTreeMap<UserId, String>,
}

pub fn hash_password(password: &str) -> String {
    let salt = SaltString::encode_b64(&rand::random::<[u8; 16]>()).expect("16 bytes is a valid salt");
    Argon2::default().hash_password(password.as_bytes(), &salt).expect("argon2 with default params").to_string()
}

impl UserStore {
    pub fn load(path: Option<PathBuf>) -> std::io::Result<Self> {
        let users = match &path {
            Some(p) if p.exists() => {
                let file: UsersFile = serde_json::from_slice(&fs::read(p)?).map_err(std::io::Error::other)?;
                file.users
            }
            _ => BTreeMap::new(),
        };
        Ok(UserStore { path, hashes: RwLock::new(users), sessions: RwLock::default() })
    }

    pub fn set_password(&self, user: &UserId, password: &str) -> std::io::Result<()> {
        let hash = hash_password(password);
        let mut hashes = self.hashes.write();
        hashes.insert(user.clone(), hash);
        if let Some(path) = &self.path {
            let body = serde_json::to_vec_pretty(&UsersFile { users: hashes.clone() }).map_err(std::io::Error::other)?;
            fs::write(path, body)?;
        }
        Ok(())
    }

    pub fn exists(&self, user: &UserId) -> bool {
        self.hashes.read().contains_key(user)
    }

    /// Checks the password and opens a session.
    pub fn login(&self, user: &UserId, password: &str) -> Option<String> {
        let hash = self.hashes.read().get(user)?.clone();
        let parsed = PasswordHash::new(&hash).ok()?;
        Argon2::default().verify_password(password.as_bytes(), &parsed).ok()?;
        let token: String = rand::random::<[u8; 32]>().iter().map(|b| format!("{b:02x}")).collect();
        self.sessions.write().insert(token.clone(), user.clone());
        Some(token)
    }

    pub fn session(&self, token: &str) -> Option<UserId> {
        self.sessions.read().get(token).cloned()
    }
}
