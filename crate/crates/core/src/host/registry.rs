use std::collections::HashMap;
use std::fmt;

use indexmap::IndexMap;

use super::{HostValue, HostValueError};

/// Opaque reference to a registered host object. Displays as `oN`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectHandle(u64);

impl ObjectHandle {
    pub fn from_raw(id: u64) -> ObjectHandle {
        ObjectHandle(id)
    }

    pub fn raw(self) -> u64 {
        self.0
    }

    /// Parses the `oN` text form.
    pub fn parse(text: &str) -> Option<ObjectHandle> {
        let digits = text.strip_prefix('o')?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        digits.parse().ok().map(ObjectHandle)
    }
}

impl fmt::Display for ObjectHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "o{}", self.0)
    }
}

impl fmt::Debug for ObjectHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "o{}", self.0)
    }
}

/// An instance of a host class. Methods are resolved by class name in the
/// host runtime.
#[derive(Debug, Clone)]
pub struct HostObject {
    pub class: String,
    pub attrs: IndexMap<String, HostValue>,
}

impl HostObject {
    pub fn new(class: impl Into<String>) -> HostObject {
        HostObject {
            class: class.into(),
            attrs: IndexMap::new(),
        }
    }

    pub fn with_attr(mut self, name: &str, value: HostValue) -> HostObject {
        self.attrs.insert(name.to_string(), value);
        self
    }
}

/// Keeps host objects alive while the logic side holds handles to them.
#[derive(Debug, Default)]
pub struct Registry {
    objects: HashMap<u64, HostObject>,
    next: u64,
}

impl Registry {
    pub fn new() -> Registry {
        Registry::default()
    }

    pub fn register(&mut self, obj: HostObject) -> ObjectHandle {
        self.next += 1;
        self.objects.insert(self.next, obj);
        ObjectHandle(self.next)
    }

    pub fn release(&mut self, h: ObjectHandle) -> Result<(), HostValueError> {
        self.objects
            .remove(&h.0)
            .map(|_| ())
            .ok_or_else(|| HostValueError::DanglingHandle(h.to_string()))
    }

    pub fn get(&self, h: ObjectHandle) -> Result<&HostObject, HostValueError> {
        self.objects
            .get(&h.0)
            .ok_or_else(|| HostValueError::DanglingHandle(h.to_string()))
    }

    pub fn get_mut(&mut self, h: ObjectHandle) -> Result<&mut HostObject, HostValueError> {
        self.objects
            .get_mut(&h.0)
            .ok_or_else(|| HostValueError::DanglingHandle(h.to_string()))
    }

    pub fn is_live(&self, h: ObjectHandle) -> bool {
        self.objects.contains_key(&h.0)
    }

    pub fn live_count(&self) -> usize {
        self.objects.len()
    }
}
