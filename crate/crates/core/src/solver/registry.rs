use std::collections::BTreeMap;
use std::sync::Arc;

use super::{AutoDirection, DirectionSolver, KktDirection, Nhs, Nhst, SchurDirection, SolveError, Solver};

/// Name-keyed table of strategy objects.
pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<String, Arc<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    /// Registers `strategy` under `name`, returning any entry it replaced.
    pub fn register(&mut self, name: impl Into<String>, strategy: Arc<T>) -> Option<Arc<T>> {
        self.entries.insert(name.into(), strategy)
    }

    pub fn get(&self, name: &str) -> Option<Arc<T>> {
        self.entries.get(name).cloned()
    }

    /// Like [`get`](Self::get) but reports the available names on a miss.
    pub fn resolve(&self, name: &str) -> Result<Arc<T>, SolveError> {
        self.get(name).ok_or_else(|| SolveError::UnknownStrategy {
            kind: self.kind,
            name: name.to_string(),
            available: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }
}

pub fn solver_registry() -> Registry<dyn Solver> {
    let mut r: Registry<dyn Solver> = Registry::new("solver");
    r.register("nhs", Arc::new(Nhs));
    r.register("nhst", Arc::new(Nhst));
    r
}

pub fn direction_registry() -> Registry<dyn DirectionSolver> {
    let mut r: Registry<dyn DirectionSolver> = Registry::new("direction");
    r.register("auto", Arc::new(AutoDirection));
    r.register("schur", Arc::new(SchurDirection));
    r.register("kkt", Arc::new(KktDirection));
    r
}
