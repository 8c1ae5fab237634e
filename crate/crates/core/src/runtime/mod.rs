//! The in-repo host runtime: modules of native functions loaded on demand,
//! keyword-aware argument binding, and object method and attribute dispatch.

mod demo;
pub mod json;
mod math;
mod moddef;

use std::collections::HashMap;
use std::path::PathBuf;
use std::rc::Rc;

use indexmap::IndexMap;

use crate::error::{BridgeError, ErrorKind, Result};
use crate::host::{HostObject, HostValue, HostValueError, ObjectHandle, Registry};
use crate::xlate::HandleTable;

pub use moddef::parse_module_def;

pub type Kwargs = IndexMap<String, HostValue>;

/// Native body of a host function. The receiver is set for methods.
/// Positional arguments arrive bound to the declared parameters, followed by
/// any extra positionals; `kwargs` holds only undeclared keywords.
pub type Native = fn(&mut Registry, Option<ObjectHandle>, Vec<HostValue>, Kwargs) -> Result<HostValue>;

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub default: Option<HostValue>,
}

impl Param {
    pub fn required(name: &str) -> Param {
        Param {
            name: name.to_string(),
            default: None,
        }
    }

    pub fn optional(name: &str, default: HostValue) -> Param {
        Param {
            name: name.to_string(),
            default: Some(default),
        }
    }
}

#[derive(Clone)]
pub struct HostFunction {
    pub name: String,
    pub params: Vec<Param>,
    pub varargs: bool,
    pub kwargs: bool,
    pub imp: Native,
}

impl HostFunction {
    pub fn new(name: &str, params: Vec<Param>, imp: Native) -> HostFunction {
        HostFunction {
            name: name.to_string(),
            params,
            varargs: false,
            kwargs: false,
            imp,
        }
    }

    pub fn variadic(mut self) -> HostFunction {
        self.varargs = true;
        self
    }

    pub fn with_kwargs(mut self) -> HostFunction {
        self.kwargs = true;
        self
    }

    /// Binds positional arguments left to right, keywords by name and
    /// defaults into the gaps.
    pub fn bind(&self, mut args: Vec<HostValue>, kwargs: Kwargs) -> Result<(Vec<HostValue>, Kwargs)> {
        let n = self.params.len();
        let extra = if args.len() > n {
            if !self.varargs {
                return Err(host_error(
                    ErrorKind::ArityError,
                    format!(
                        "{}() takes {} positional arguments but {} were given",
                        self.name,
                        n,
                        args.len()
                    ),
                ));
            }
            args.split_off(n)
        } else {
            Vec::new()
        };
        let given = args.len();
        let mut slots: Vec<Option<HostValue>> = args.into_iter().map(Some).collect();
        slots.resize(n, None);
        let mut rest = Kwargs::new();
        for (key, value) in kwargs {
            match self.params.iter().position(|p| p.name == key) {
                Some(i) if i < given => {
                    return Err(host_error(
                        ErrorKind::ArityError,
                        format!("{}() got multiple values for argument '{key}'", self.name),
                    ))
                }
                Some(i) => slots[i] = Some(value),
                None if self.kwargs => {
                    rest.insert(key, value);
                }
                None => {
                    return Err(host_error(
                        ErrorKind::UnknownKeyword,
                        format!("{}() got an unexpected keyword argument '{key}'", self.name),
                    ))
                }
            }
        }
        let mut bound = Vec::with_capacity(n + extra.len());
        for (slot, param) in slots.into_iter().zip(&self.params) {
            match slot.or_else(|| param.default.clone()) {
                Some(v) => bound.push(v),
                None => {
                    return Err(host_error(
                        ErrorKind::ArityError,
                        format!("{}() missing required argument '{}'", self.name, param.name),
                    ))
                }
            }
        }
        bound.extend(extra);
        Ok((bound, rest))
    }
}

impl std::fmt::Debug for HostFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HostFunction")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("varargs", &self.varargs)
            .field("kwargs", &self.kwargs)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub struct HostModule {
    pub name: String,
    pub functions: IndexMap<String, HostFunction>,
    /// Non-callable module attributes such as `math.pi`.
    pub constants: IndexMap<String, HostValue>,
    pub loaded: bool,
}

impl HostModule {
    pub fn new(name: &str) -> HostModule {
        HostModule {
            name: name.to_string(),
            functions: IndexMap::new(),
            constants: IndexMap::new(),
            loaded: false,
        }
    }

    pub fn function(mut self, f: HostFunction) -> HostModule {
        self.functions.insert(f.name.clone(), f);
        self
    }

    pub fn constant(mut self, name: &str, value: HostValue) -> HostModule {
        self.constants.insert(name.to_string(), value);
        self
    }
}

#[derive(Debug, Clone)]
pub struct HostClass {
    pub name: String,
    pub methods: IndexMap<String, HostFunction>,
}

pub fn host_error(kind: ErrorKind, message: impl Into<String>) -> BridgeError {
    BridgeError::host(kind, message)
}

impl From<HostValueError> for BridgeError {
    fn from(e: HostValueError) -> BridgeError {
        let kind = match e {
            HostValueError::Unhashable(_) => ErrorKind::Unhashable,
            HostValueError::DanglingHandle(_) => ErrorKind::DanglingHandle,
        };
        BridgeError::host(kind, e.to_string())
    }
}

/// Operations the bridge needs from a host runtime, whether in process or
/// behind the wire adapter.
pub trait HostRuntime: HandleTable {
    fn load_module(&mut self, name: &str) -> Result<()>;

    /// Calls `module.name`. A constant is returned as is when called with no
    /// arguments and is otherwise not callable.
    fn call(&mut self, module: &str, name: &str, args: Vec<HostValue>, kwargs: Kwargs) -> Result<HostValue>;

    fn call_method(&mut self, h: ObjectHandle, name: &str, args: Vec<HostValue>, kwargs: Kwargs) -> Result<HostValue>;

    fn get_attribute(&mut self, h: ObjectHandle, name: &str) -> Result<HostValue>;

    fn release(&mut self, h: ObjectHandle) -> Result<()>;

    fn live_count(&self) -> usize;

    fn clear_error(&mut self);

    fn last_error(&self) -> Option<&BridgeError>;
}

fn is_module_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn builtin_module(name: &str) -> Option<HostModule> {
    match name {
        "json" => Some(json::module()),
        "math" => Some(math::module()),
        "jns_demo" => Some(demo::module()),
        _ => None,
    }
}

pub(crate) fn builtin_function(module: &str, name: &str) -> Option<HostFunction> {
    builtin_module(module)?.functions.get(name).cloned()
}

pub const BUILTIN_MODULES: &[&str] = &["json", "math", "jns_demo"];

pub struct LocalRuntime {
    registry: Registry,
    modules: HashMap<String, Rc<HostModule>>,
    classes: HashMap<String, HostClass>,
    search_path: Vec<PathBuf>,
    loads: HashMap<String, usize>,
    last_error: Option<BridgeError>,
}

impl Default for LocalRuntime {
    fn default() -> Self {
        LocalRuntime::new()
    }
}

impl LocalRuntime {
    pub fn new() -> LocalRuntime {
        let mut classes = HashMap::new();
        for class in demo::classes() {
            classes.insert(class.name.clone(), class);
        }
        LocalRuntime {
            registry: Registry::new(),
            modules: HashMap::new(),
            classes,
            search_path: Vec::new(),
            loads: HashMap::new(),
            last_error: None,
        }
    }

    /// Directories searched for `<module>.toml` definitions after the
    /// builtins.
    pub fn with_search_path(mut self, dirs: Vec<PathBuf>) -> LocalRuntime {
        self.search_path = dirs;
        self
    }

    pub fn add_search_dir(&mut self, dir: PathBuf) {
        self.search_path.push(dir);
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn registry_mut(&mut self) -> &mut Registry {
        &mut self.registry
    }

    pub fn register_class(&mut self, class: HostClass) {
        self.classes.insert(class.name.clone(), class);
    }

    /// Installs a module directly, replacing any loaded module of that name.
    pub fn install_module(&mut self, mut module: HostModule) {
        module.loaded = true;
        self.modules.insert(module.name.clone(), Rc::new(module));
    }

    /// How many times `name` was actually loaded rather than found cached.
    pub fn load_count(&self, name: &str) -> usize {
        self.loads.get(name).copied().unwrap_or(0)
    }

    pub fn module(&mut self, name: &str) -> Result<Rc<HostModule>> {
        if let Some(m) = self.modules.get(name) {
            return Ok(m.clone());
        }
        if !is_module_name(name) {
            return Err(host_error(
                ErrorKind::ModuleNotFound,
                format!("no module named '{name}'"),
            ));
        }
        let mut module = match builtin_module(name) {
            Some(m) => m,
            None => self.load_definition(name)?,
        };
        module.loaded = true;
        let module = Rc::new(module);
        *self.loads.entry(name.to_string()).or_default() += 1;
        self.modules.insert(name.to_string(), module.clone());
        Ok(module)
    }

    fn load_definition(&self, name: &str) -> Result<HostModule> {
        for dir in &self.search_path {
            let path = dir.join(format!("{name}.toml"));
            if path.is_file() {
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| host_error(ErrorKind::Io, format!("{}: {e}", path.display())))?;
                return parse_module_def(name, &text).map_err(|e| BridgeError {
                    message: format!("{}: {}", path.display(), e.message),
                    ..e
                });
            }
        }
        Err(host_error(
            ErrorKind::ModuleNotFound,
            format!("no module named '{name}'"),
        ))
    }

    fn record<T>(&mut self, r: Result<T>) -> Result<T> {
        if let Err(e) = &r {
            self.last_error = Some(e.clone());
        }
        r
    }

    fn call_inner(&mut self, module: &str, name: &str, args: Vec<HostValue>, kwargs: Kwargs) -> Result<HostValue> {
        let m = self.module(module)?;
        if let Some(f) = m.functions.get(name) {
            let (args, kwargs) = f.bind(args, kwargs)?;
            return (f.imp)(&mut self.registry, None, args, kwargs)
                .map_err(|e| push_frame(e, format!("in {module}.{name}")));
        }
        match m.constants.get(name) {
            Some(v) if args.is_empty() && kwargs.is_empty() => Ok(v.clone()),
            Some(v) => Err(host_error(
                ErrorKind::NotCallable,
                format!("'{}' object {module}.{name} is not callable", v.type_name()),
            )),
            None => Err(host_error(
                ErrorKind::NotCallable,
                format!("module '{module}' has no callable attribute '{name}'"),
            )),
        }
    }

    fn method_inner(&mut self, h: ObjectHandle, name: &str, args: Vec<HostValue>, kwargs: Kwargs) -> Result<HostValue> {
        let class = self.registry.get(h)?.class.clone();
        let f = self
            .classes
            .get(&class)
            .and_then(|c| c.methods.get(name))
            .cloned()
            .ok_or_else(|| {
                host_error(
                    ErrorKind::NoSuchMethod,
                    format!("'{class}' object has no method '{name}'"),
                )
            })?;
        let (args, kwargs) = f.bind(args, kwargs)?;
        (f.imp)(&mut self.registry, Some(h), args, kwargs).map_err(|e| push_frame(e, format!("in {class}.{name}")))
    }

    /// Registers a host object and returns its handle.
    pub fn new_object(&mut self, obj: HostObject) -> ObjectHandle {
        self.registry.register(obj)
    }
}

fn push_frame(mut e: BridgeError, frame: String) -> BridgeError {
    e.host_backtrace.push(frame);
    e
}

impl HandleTable for LocalRuntime {
    fn is_live(&self, h: ObjectHandle) -> bool {
        self.registry.is_live(h)
    }
}

impl HostRuntime for LocalRuntime {
    fn load_module(&mut self, name: &str) -> Result<()> {
        let r = self.module(name).map(|_| ());
        self.record(r)
    }

    fn call(&mut self, module: &str, name: &str, args: Vec<HostValue>, kwargs: Kwargs) -> Result<HostValue> {
        let r = self.call_inner(module, name, args, kwargs);
        self.record(r)
    }

    fn call_method(&mut self, h: ObjectHandle, name: &str, args: Vec<HostValue>, kwargs: Kwargs) -> Result<HostValue> {
        let r = self.method_inner(h, name, args, kwargs);
        self.record(r)
    }

    fn get_attribute(&mut self, h: ObjectHandle, name: &str) -> Result<HostValue> {
        let r = self.registry.get(h).map_err(BridgeError::from).and_then(|obj| {
            obj.attrs.get(name).cloned().ok_or_else(|| {
                host_error(
                    ErrorKind::NoSuchAttribute,
                    format!("'{}' object has no attribute '{name}'", obj.class),
                )
            })
        });
        self.record(r)
    }

    fn release(&mut self, h: ObjectHandle) -> Result<()> {
        let r = self.registry.release(h).map_err(BridgeError::from);
        self.record(r)
    }

    fn live_count(&self) -> usize {
        self.registry.live_count()
    }

    fn clear_error(&mut self) {
        self.last_error = None;
    }

    fn last_error(&self) -> Option<&BridgeError> {
        self.last_error.as_ref()
    }
}

/// Coerces a numeric argument.
pub(crate) fn real(v: &HostValue, func: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| {
        host_error(
            ErrorKind::TypeError,
            format!("{func}() must be a real number, not {}", v.type_name()),
        )
    })
}

#[cfg(test)]
mod tests;
