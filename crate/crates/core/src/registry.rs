//! Name-keyed factories for interchangeable strategies.
//!
//! Quadrature rules, path objectives and worldsheet presets are each exposed
//! as a trait object. A [`Registry`] maps a short name (as typed on the command
//! line) to a constructor that receives the remaining argument text.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub type Factory<T> = fn(&str) -> Result<Box<T>>;

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<&'static str, Factory<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Registry {
            kind,
            entries: BTreeMap::new(),
        }
    }

    /// Registers `factory` under `name`, replacing any previous entry.
    pub fn register(&mut self, name: &'static str, factory: Factory<T>) -> &mut Self {
        self.entries.insert(name, factory);
        self
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn create(&self, name: &str, args: &str) -> Result<Box<T>> {
        match self.entries.get(name) {
            Some(factory) => factory(args),
            None => Err(Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                known: self.names().collect::<Vec<_>>().join(", "),
            }),
        }
    }

    /// Parses `name[:args]` and creates the strategy.
    pub fn create_from_spec(&self, spec: &str) -> Result<Box<T>> {
        let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
        self.create(name.trim(), args.trim())
    }
}

impl<T: ?Sized> std::fmt::Debug for Registry<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Registry")
            .field("kind", &self.kind)
            .field("names", &self.names().collect::<Vec<_>>())
            .finish()
    }
}
