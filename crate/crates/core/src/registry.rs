//! FIMS data layer: the identity database (ID-DB) and the mission
//! authorization database (AUTH-DB).
//!
//! Reads go through a [`FaultInjection`] overlay that can force database
//! misses or stale expiry dates for selected drones. The authority side
//! uses the `raw_*` queries, which bypass the overlay, to diagnose those
//! faults.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::{RwLock, RwLockReadGuard, RwLockWriteGuard};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::domain::{
    point_in_zone, windows_overlap, zones_intersect, DroneId, GeoPoint, OperatorId,
    RemoteIdMessage, TimeWindow, Timestamp, Zone,
};

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("drone {0} is already registered")]
    DuplicateId(DroneId),
    #[error("authorization {0} already exists")]
    DuplicateAuthId(String),
    #[error("authorization {new} for drone {drone} overlaps {existing}")]
    OverlappingAuthorization {
        drone: DroneId,
        new: String,
        existing: String,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One ID-DB row. Rows are never deleted; `expiry` marks invalidity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdRecord {
    pub drone_id: DroneId,
    pub operator_id: OperatorId,
    pub expiry: Timestamp,
    pub issuer_secret_ref: String,
    #[serde(default)]
    pub personally_identifiable: serde_json::Value,
    #[serde(default)]
    pub tracking: Vec<(Timestamp, GeoPoint)>,
}

/// One AUTH-DB row: a performance authorization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionAuthorization {
    pub auth_id: String,
    pub drone_id: DroneId,
    pub operator_id: OperatorId,
    pub window: TimeWindow,
    pub area: Zone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AccessLevel {
    /// Level 1: the UAS identifier only.
    Public,
    /// Level 2: adds personally identifiable data.
    Officials,
    /// Level 3: adds tracking data.
    Authority,
}

/// An ID-DB record truncated to what an access level may see.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdView {
    pub drone_id: DroneId,
    pub operator_id: Option<OperatorId>,
    pub personally_identifiable: Option<serde_json::Value>,
    pub expiry: Option<Timestamp>,
    pub tracking: Option<Vec<(Timestamp, GeoPoint)>>,
}

impl IdView {
    fn of(rec: &IdRecord, level: AccessLevel, expiry: Timestamp) -> Self {
        let officials = level >= AccessLevel::Officials;
        IdView {
            drone_id: rec.drone_id.clone(),
            operator_id: officials.then_some(rec.operator_id),
            personally_identifiable: officials.then(|| rec.personally_identifiable.clone()),
            expiry: officials.then_some(expiry),
            tracking: (level >= AccessLevel::Authority).then(|| rec.tracking.clone()),
        }
    }
}

/// Scenario switches that make the databases misbehave for chosen drones.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultInjection {
    #[serde(default)]
    pub id_db_miss: BTreeSet<DroneId>,
    #[serde(default)]
    pub auth_db_miss: BTreeSet<DroneId>,
    #[serde(default)]
    pub stale_expiry: BTreeSet<DroneId>,
}

impl FaultInjection {
    pub fn is_empty(&self) -> bool {
        self.id_db_miss.is_empty() && self.auth_db_miss.is_empty() && self.stale_expiry.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FaultKind {
    IdDbMiss,
    AuthDbMiss,
    StaleExpiry,
}

/// Result of checking an ID against the ID-DB at a point in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdValidity {
    Missing,
    Valid,
    Expired,
}

/// Keyed deterministic authenticity token. Swappable for a real signature
/// scheme without touching callers.
pub trait TokenScheme: Send + Sync {
    fn token(&self, drone_id: &DroneId, secret: &[u8]) -> Vec<u8>;
}

/// SHA-256 over a length-prefixed secret followed by the drone id,
/// truncated to 16 bytes.
#[derive(Debug, Default, Clone, Copy)]
pub struct Sha256Token;

impl TokenScheme for Sha256Token {
    fn token(&self, drone_id: &DroneId, secret: &[u8]) -> Vec<u8> {
        let mut h = Sha256::new();
        h.update((secret.len() as u64).to_be_bytes());
        h.update(secret);
        h.update(drone_id.as_str().as_bytes());
        h.finalize()[..16].to_vec()
    }
}

#[derive(Default)]
struct Tables {
    ids: BTreeMap<DroneId, IdRecord>,
    auths: Vec<MissionAuthorization>,
    by_drone: BTreeMap<DroneId, Vec<usize>>,
    // (window start, drone id, auth id) -> row. Iteration order is the
    // potential-operator order.
    by_start: BTreeMap<(Timestamp, DroneId, String), usize>,
    secrets: BTreeMap<String, Vec<u8>>,
    faults: FaultInjection,
}

/// The two FIMS databases behind a single reader-writer lock.
pub struct Registry {
    tables: RwLock<Tables>,
    tokens: Box<dyn TokenScheme>,
}

impl Default for Registry {
    fn default() -> Self {
        Registry::new()
    }
}

impl std::fmt::Debug for Registry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let t = self.read();
        f.debug_struct("Registry")
            .field("ids", &t.ids.len())
            .field("auths", &t.auths.len())
            .field("faults", &t.faults)
            .finish()
    }
}

impl Registry {
    pub fn new() -> Self {
        Registry::with_token_scheme(Box::new(Sha256Token))
    }

    pub fn with_token_scheme(tokens: Box<dyn TokenScheme>) -> Self {
        Registry {
            tables: RwLock::new(Tables::default()),
            tokens,
        }
    }

    fn read(&self) -> RwLockReadGuard<'_, Tables> {
        self.tables.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> RwLockWriteGuard<'_, Tables> {
        self.tables.write().unwrap_or_else(|e| e.into_inner())
    }

    pub fn add_secret(&self, key_id: impl Into<String>, secret: impl Into<Vec<u8>>) {
        self.write().secrets.insert(key_id.into(), secret.into());
    }

    /// Token a drone registered under `key_id` would broadcast.
    pub fn issue_token(&self, drone_id: &DroneId, key_id: &str) -> Option<Vec<u8>> {
        let t = self.read();
        t.secrets
            .get(key_id)
            .map(|secret| self.tokens.token(drone_id, secret))
    }

    pub fn register_drone(&self, rec: IdRecord) -> Result<(), RegistryError> {
        let mut t = self.write();
        if t.ids.contains_key(&rec.drone_id) {
            return Err(RegistryError::DuplicateId(rec.drone_id));
        }
        t.ids.insert(rec.drone_id.clone(), rec);
        Ok(())
    }

    pub fn lookup_id(&self, id: &DroneId, level: AccessLevel) -> Option<IdView> {
        let t = self.read();
        if t.faults.id_db_miss.contains(id) {
            return None;
        }
        let rec = t.ids.get(id)?;
        let expiry = if t.faults.stale_expiry.contains(id) {
            Timestamp(0)
        } else {
            rec.expiry
        };
        Some(IdView::of(rec, level, expiry))
    }

    /// Validity as seen through the fault overlay. Requires at least
    /// `Officials` access; lower levels cannot see the expiry and get
    /// `Missing`.
    pub fn validity(&self, id: &DroneId, now: Timestamp, level: AccessLevel) -> IdValidity {
        match self.lookup_id(id, level).and_then(|v| v.expiry) {
            None => IdValidity::Missing,
            Some(expiry) if now < expiry => IdValidity::Valid,
            Some(_) => IdValidity::Expired,
        }
    }

    /// True iff the token matches some issuer secret held by the authority.
    /// Does not consult the ID-DB.
    pub fn verify_authenticity(&self, msg: &RemoteIdMessage) -> bool {
        let t = self.read();
        t.secrets
            .values()
            .any(|secret| self.tokens.token(&msg.drone_id, secret) == msg.auth_token)
    }

    pub fn insert_authorization(&self, auth: MissionAuthorization) -> Result<(), RegistryError> {
        let mut t = self.write();
        if t.auths.iter().any(|a| a.auth_id == auth.auth_id) {
            return Err(RegistryError::DuplicateAuthId(auth.auth_id));
        }
        if let Some(rows) = t.by_drone.get(&auth.drone_id) {
            if let Some(&clash) = rows
                .iter()
                .find(|&&i| windows_overlap(&t.auths[i].window, &auth.window))
            {
                return Err(RegistryError::OverlappingAuthorization {
                    drone: auth.drone_id.clone(),
                    new: auth.auth_id.clone(),
                    existing: t.auths[clash].auth_id.clone(),
                });
            }
        }
        let idx = t.auths.len();
        t.by_drone.entry(auth.drone_id.clone()).or_default().push(idx);
        t.by_start.insert(
            (auth.window.start(), auth.drone_id.clone(), auth.auth_id.clone()),
            idx,
        );
        t.auths.push(auth);
        Ok(())
    }

    fn drone_auths<'a>(
        t: &'a Tables,
        id: &DroneId,
    ) -> impl Iterator<Item = &'a MissionAuthorization> + 'a {
        t.by_drone
            .get(id)
            .into_iter()
            .flatten()
            .map(move |&i| &t.auths[i])
    }

    /// The authorization whose window contains `t` and whose area contains `p`.
    pub fn find_authorization(
        &self,
        id: &DroneId,
        at: Timestamp,
        p: &GeoPoint,
    ) -> Option<MissionAuthorization> {
        self.find_authorization_any(id, at)
            .filter(|a| point_in_zone(p, &a.area))
    }

    /// Like [`Registry::find_authorization`] but ignoring position.
    pub fn find_authorization_any(&self, id: &DroneId, at: Timestamp) -> Option<MissionAuthorization> {
        let t = self.read();
        if t.faults.auth_db_miss.contains(id) {
            return None;
        }
        let found = Self::drone_auths(&t, id).find(|a| a.window.contains(at)).cloned();
        found
    }

    /// Latest authorization for `id` that started at or before `at`, whether
    /// or not it has already ended. Used to spot time overruns.
    pub fn find_latest_started(&self, id: &DroneId, at: Timestamp) -> Option<MissionAuthorization> {
        let t = self.read();
        if t.faults.auth_db_miss.contains(id) {
            return None;
        }
        Self::drone_auths(&t, id)
            .filter(|a| a.window.start() <= at)
            .max_by_key(|a| a.window.start())
            .cloned()
    }

    /// Authorizations active at `at` whose area touches `zone`, ordered by
    /// window start then drone id.
    pub fn find_potential_operators(&self, zone: &Zone, at: Timestamp) -> Vec<MissionAuthorization> {
        let t = self.read();
        t.by_start
            .range(..=(at, max_drone_key(), String::new()))
            .map(|(_, &i)| &t.auths[i])
            .filter(|a| a.window.contains(at))
            .filter(|a| !t.faults.auth_db_miss.contains(&a.drone_id))
            .filter(|a| zones_intersect(&a.area, zone))
            .cloned()
            .collect()
    }

    pub fn raw_record(&self, id: &DroneId) -> Option<IdRecord> {
        self.read().ids.get(id).cloned()
    }

    pub fn raw_authorization_any(&self, id: &DroneId, at: Timestamp) -> Option<MissionAuthorization> {
        let t = self.read();
        let found = Self::drone_auths(&t, id).find(|a| a.window.contains(at)).cloned();
        found
    }

    pub fn raw_latest_started(&self, id: &DroneId, at: Timestamp) -> Option<MissionAuthorization> {
        let t = self.read();
        Self::drone_auths(&t, id)
            .filter(|a| a.window.start() <= at)
            .max_by_key(|a| a.window.start())
            .cloned()
    }

    pub fn all_records(&self) -> Vec<IdRecord> {
        self.read().ids.values().cloned().collect()
    }

    pub fn all_authorizations(&self) -> Vec<MissionAuthorization> {
        self.read().auths.clone()
    }

    pub fn faults(&self) -> FaultInjection {
        self.read().faults.clone()
    }

    pub fn set_faults(&self, faults: FaultInjection) {
        self.write().faults = faults;
    }

    pub fn has_fault(&self, kind: FaultKind, id: &DroneId) -> bool {
        let t = self.read();
        fault_set(&t.faults, kind).contains(id)
    }

    pub fn inject_fault(&self, kind: FaultKind, id: DroneId) {
        let mut t = self.write();
        fault_set_mut(&mut t.faults, kind).insert(id);
    }

    /// Returns whether the fault was present.
    pub fn clear_fault(&self, kind: FaultKind, id: &DroneId) -> bool {
        let mut t = self.write();
        fault_set_mut(&mut t.faults, kind).remove(id)
    }

    pub fn load_jsonl(&self, id_db: &Path, auth_db: &Path) -> Result<(), RegistryError> {
        for rec in read_jsonl::<IdRecord>(id_db)? {
            self.register_drone(rec)?;
        }
        for auth in read_jsonl::<MissionAuthorization>(auth_db)? {
            self.insert_authorization(auth)?;
        }
        Ok(())
    }

    pub fn dump_jsonl(&self, id_db: &Path, auth_db: &Path) -> Result<(), RegistryError> {
        write_jsonl(id_db, &self.all_records())?;
        write_jsonl(auth_db, &self.all_authorizations())?;
        Ok(())
    }
}

fn max_drone_key() -> DroneId {
    // Sorts after every valid id that starts with a printable character.
    DroneId::new("\u{10FFFF}").expect("valid id")
}

fn fault_set(f: &FaultInjection, kind: FaultKind) -> &BTreeSet<DroneId> {
    match kind {
        FaultKind::IdDbMiss => &f.id_db_miss,
        FaultKind::AuthDbMiss => &f.auth_db_miss,
        FaultKind::StaleExpiry => &f.stale_expiry,
    }
}

fn fault_set_mut(f: &mut FaultInjection, kind: FaultKind) -> &mut BTreeSet<DroneId> {
    match kind {
        FaultKind::IdDbMiss => &mut f.id_db_miss,
        FaultKind::AuthDbMiss => &mut f.auth_db_miss,
        FaultKind::StaleExpiry => &mut f.stale_expiry,
    }
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, RegistryError> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str(&line).map_err(|e| RegistryError::Parse {
            path: path.display().to_string(),
            line: n + 1,
            message: e.to_string(),
        })?;
        rows.push(row);
    }
    Ok(rows)
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), RegistryError> {
    let mut w = BufWriter::new(File::create(path)?);
    for row in rows {
        serde_json::to_writer(&mut w, row).map_err(std::io::Error::other)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}
