//! Coarse project capabilities: View < Comment < Edit < Manage.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{ProjectId, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    View,
    Comment,
    Edit,
    Manage,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::View, Role::Comment, Role::Edit, Role::Manage];

    /// Whether this role includes the capability of `required`.
    pub fn implies(self, required: Role) -> bool {
        self >= required
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL.into_iter().find(|r| r.to_string().eq_ignore_ascii_case(s)).ok_or_else(|| format!("unknown role {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuthzError {
    #[error("{user} lacks {required} capability")]
    PermissionDenied { user: UserId, required: Role },
    #[error("the project owner always keeps Manage")]
    CannotDemoteOwner,
}

/// Project grants. The owner always holds Manage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectAcl {
    #[serde(skip)]
    pub project: ProjectId,
    pub owner: UserId,
    #[serde(rename = "acl")]
    grants: BTreeMap<UserId, Role>,
}

impl ProjectAcl {
    pub fn new(project: ProjectId, owner: UserId) -> Self {
        let grants = BTreeMap::from([(owner.clone(), Role::Manage)]);
        ProjectAcl { project, owner, grants }
    }

    /// Rebuilds the owner invariant after deserialization.
    pub fn normalized(mut self, project: ProjectId) -> Self {
        self.project = project;
        self.grants.insert(self.owner.clone(), Role::Manage);
        self
    }

    pub fn grants(&self) -> &BTreeMap<UserId, Role> {
        &self.grants
    }

    pub fn role_of(&self, user: &UserId) -> Option<Role> {
        self.grants.get(user).copied()
    }

    pub fn is_member(&self, user: &UserId) -> bool {
        self.grants.contains_key(user)
    }

    /// True iff `user` holds a role at least `required`. Unknown users get
    /// false.
    pub fn check(&self, user: &UserId, required: Role) -> bool {
        self.role_of(user).is_some_and(|r| r.implies(required))
    }

    pub fn require(&self, user: &UserId, required: Role) -> Result<(), AuthzError> {
        if self.check(user, required) {
            Ok(())
        } else {
            Err(AuthzError::PermissionDenied { user: user.clone(), required })
        }
    }

    pub fn grant(&mut self, actor: &UserId, user: &UserId, role: Role) -> Result<(), AuthzError> {
        self.require(actor, Role::Manage)?;
        if user == &self.owner && role != Role::Manage {
            return Err(AuthzError::CannotDemoteOwner);
        }
        self.grants.insert(user.clone(), role);
        Ok(())
    }

    pub fn revoke(&mut self, actor: &UserId, user: &UserId) -> Result<(), AuthzError> {
        self.require(actor, Role::Manage)?;
        if user == &self.owner {
            return Err(AuthzError::CannotDemoteOwner);
        }
        self.grants.remove(user);
        Ok(())
    }
}
