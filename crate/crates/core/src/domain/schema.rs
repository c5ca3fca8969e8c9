use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use super::entity::{Category, EntityId};
use super::fluent::{Fluent, WorldState};
use super::DomainError;
use crate::actionseq::{ActionInstance, Arg};

/// Accepted argument kind for a schema parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Object,
    Location,
    Person,
    /// Any declared entity.
    Any,
    /// A quoted string stored verbatim. Never appears in fluents.
    Text,
}

impl Role {
    pub fn accepts(self, category: Category) -> bool {
        match self {
            Role::Object => category == Category::Object,
            Role::Location => category == Category::Location,
            Role::Person => category == Category::Person,
            Role::Any => true,
            Role::Text => false,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Object => "object",
            Role::Location => "location",
            Role::Person => "person",
            Role::Any => "any",
            Role::Text => "text",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "object" => Ok(Role::Object),
            "location" => Ok(Role::Location),
            "person" => Ok(Role::Person),
            "any" => Ok(Role::Any),
            "text" => Ok(Role::Text),
            other => Err(DomainError::InvalidName(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(EntityId),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

/// A fluent pattern over schema variables and constants.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FluentTemplate {
    pub predicate: String,
    pub terms: Vec<Term>,
}

impl FluentTemplate {
    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v.as_str()),
            Term::Const(_) => None,
        })
    }

    /// Substitutes bound variables. `None` if a variable is unbound.
    pub fn instantiate(&self, binding: &Binding) -> Option<Fluent> {
        let args = self
            .terms
            .iter()
            .map(|t| match t {
                Term::Var(v) => binding.get(v).cloned(),
                Term::Const(c) => Some(c.clone()),
            })
            .collect::<Option<Vec<_>>>()?;
        Fluent::new(&self.predicate, args).ok()
    }

    /// Extends `binding` so the template equals `fluent`, if possible.
    fn unify(&self, fluent: &Fluent, binding: &Binding) -> Option<Binding> {
        if fluent.predicate() != self.predicate || fluent.args().len() != self.terms.len() {
            return None;
        }
        let mut out = binding.clone();
        for (term, value) in self.terms.iter().zip(fluent.args()) {
            match term {
                Term::Const(c) if c == value => {}
                Term::Const(_) => return None,
                Term::Var(v) => match out.get(v) {
                    Some(bound) if bound == value => {}
                    Some(_) => return None,
                    None => {
                        out.insert(v.clone(), value.clone());
                    }
                },
            }
        }
        Some(out)
    }
}

impl fmt::Display for FluentTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate)?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

pub type Binding = BTreeMap<String, EntityId>;

/// A STRIPS-style action schema.
///
/// `context` patterns bind auxiliary variables (such as the room an object is
/// in) by matching against the current state; they are looked up, not tested,
/// and the first consistent match in state order wins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<Param>,
    pub context: Vec<FluentTemplate>,
    pub preconditions: Vec<FluentTemplate>,
    pub add_effects: Vec<FluentTemplate>,
    pub del_effects: Vec<FluentTemplate>,
}

impl ActionSchema {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    /// Predicate-form signature such as `put_on(obj, surface)`.
    pub fn signature(&self) -> String {
        let params: Vec<&str> = self.params.iter().map(|p| p.name.as_str()).collect();
        format!("{}({})", self.name, params.join(", "))
    }

    fn templates(&self) -> impl Iterator<Item = &FluentTemplate> {
        self.context
            .iter()
            .chain(&self.preconditions)
            .chain(&self.add_effects)
            .chain(&self.del_effects)
    }

    /// Structural checks that do not need the entity table.
    pub(crate) fn validate(&self) -> Result<(), String> {
        let mut names = BTreeSet::new();
        for p in &self.params {
            if !names.insert(p.name.as_str()) {
                return Err(format!("schema `{}` repeats parameter ?{}", self.name, p.name));
            }
        }
        let context_vars: BTreeSet<&str> = self.context.iter().flat_map(|t| t.vars()).collect();
        for t in self.templates() {
            if t.terms.is_empty() || t.terms.len() > Fluent::MAX_ARITY {
                return Err(format!("schema `{}`: `{t}` must have 1 to 3 arguments", self.name));
            }
            for v in t.vars() {
                match self.params.iter().find(|p| p.name == v) {
                    Some(p) if p.role == Role::Text => {
                        return Err(format!(
                            "schema `{}`: text parameter ?{v} cannot appear in `{t}`",
                            self.name
                        ))
                    }
                    Some(_) => {}
                    None if context_vars.contains(v) => {}
                    None => {
                        return Err(format!(
                            "schema `{}`: variable ?{v} in `{t}` is neither a parameter nor bound by context",
                            self.name
                        ))
                    }
                }
            }
        }
        for a in &self.add_effects {
            if self.del_effects.contains(a) {
                return Err(format!("schema `{}` both adds and deletes `{a}`", self.name));
            }
        }
        Ok(())
    }
}

impl fmt::Display for ActionSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<String> = self
            .params
            .iter()
            .map(|p| format!("?{}: {}", p.name, p.role))
            .collect();
        writeln!(f, "{}({})", self.name, params.join(", "))?;
        for (kw, list) in [
            ("context", &self.context),
            ("pre", &self.preconditions),
            ("add", &self.add_effects),
            ("del", &self.del_effects),
        ] {
            if !list.is_empty() {
                let items: Vec<String> = list.iter().map(ToString::to_string).collect();
                writeln!(f, "  {kw} {}", items.join(", "))?;
            }
        }
        Ok(())
    }
}

/// A concrete transition: ground preconditions and effects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub preconditions: BTreeSet<Fluent>,
    pub add: BTreeSet<Fluent>,
    pub del: BTreeSet<Fluent>,
}

impl Step {
    pub fn applicable(&self, state: &WorldState) -> bool {
        self.preconditions.iter().all(|f| state.contains(f))
    }

    pub fn missing<'a>(&'a self, state: &'a WorldState) -> impl Iterator<Item = &'a Fluent> {
        self.preconditions.iter().filter(|f| !state.contains(f))
    }

    /// `(state \ del) ∪ add`. Does not check preconditions.
    pub fn apply_unchecked(&self, state: &WorldState) -> Result<WorldState, DomainError> {
        let mut fluents: BTreeSet<Fluent> = state
            .iter()
            .filter(|f| !self.del.contains(*f))
            .cloned()
            .collect();
        fluents.extend(self.add.iter().cloned());
        WorldState::from_set_checked(fluents)
    }

    /// The step with add and delete effects swapped and the former add
    /// effects as preconditions.
    pub fn reversed(&self) -> Step {
        Step {
            preconditions: self.add.clone(),
            add: self.del.clone(),
            del: self.add.clone(),
        }
    }
}

/// An action instance bound to a schema of the problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundAction<'p> {
    instance: ActionInstance,
    schema: &'p ActionSchema,
    binding: Binding,
}

impl<'p> GroundAction<'p> {
    pub(crate) fn new(
        schema: &'p ActionSchema,
        args: &[Arg],
        category_of: impl Fn(&EntityId) -> Option<Category>,
    ) -> Result<Self, DomainError> {
        if args.len() != schema.arity() {
            return Err(DomainError::ArityMismatch {
                action: schema.name.clone(),
                expected: schema.arity(),
                got: args.len(),
            });
        }
        let mut binding = Binding::new();
        for (param, arg) in schema.params.iter().zip(args) {
            let mismatch = |got: String| DomainError::RoleMismatch {
                action: schema.name.clone(),
                param: param.name.clone(),
                expected: param.role,
                got,
            };
            match arg {
                Arg::Text(t) if param.role != Role::Text => return Err(mismatch(format!("\"{t}\""))),
                Arg::Text(_) => {}
                Arg::Entity(e) if param.role == Role::Text => return Err(mismatch(e.to_string())),
                Arg::Entity(e) => {
                    let category =
                        category_of(e).ok_or_else(|| DomainError::UnknownEntity(e.to_string()))?;
                    if !param.role.accepts(category) {
                        return Err(mismatch(format!("{e} ({category})")));
                    }
                    binding.insert(param.name.clone(), e.clone());
                }
            }
        }
        let instance = ActionInstance::new(&schema.name, args.to_vec())?;
        Ok(GroundAction {
            instance,
            schema,
            binding,
        })
    }

    pub fn instance(&self) -> &ActionInstance {
        &self.instance
    }

    pub fn schema(&self) -> &'p ActionSchema {
        self.schema
    }

    pub fn binding(&self) -> &Binding {
        &self.binding
    }

    /// Resolves context variables against `state` and instantiates every
    /// template. `None` when no context match yields disjoint effects.
    pub fn resolve(&self, state: &WorldState) -> Option<Step> {
        let mut found = None;
        self.search(state, 0, self.binding.clone(), &mut found);
        found
    }

    fn search(&self, state: &WorldState, depth: usize, binding: Binding, found: &mut Option<Step>) {
        if found.is_some() {
            return;
        }
        match self.schema.context.get(depth) {
            Some(pattern) => {
                for fluent in state.iter() {
                    if let Some(next) = pattern.unify(fluent, &binding) {
                        self.search(state, depth + 1, next, found);
                        if found.is_some() {
                            return;
                        }
                    }
                }
            }
            None => *found = self.instantiate(&binding),
        }
    }

    fn instantiate(&self, binding: &Binding) -> Option<Step> {
        let all = |ts: &[FluentTemplate]| -> Option<BTreeSet<Fluent>> {
            ts.iter().map(|t| t.instantiate(binding)).collect()
        };
        let step = Step {
            preconditions: all(&self.schema.preconditions)?,
            add: all(&self.schema.add_effects)?,
            del: all(&self.schema.del_effects)?,
        };
        if step.add.intersection(&step.del).next().is_some() {
            return None;
        }
        Some(step)
    }
}

impl fmt::Display for GroundAction<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.instance)
    }
}

/// True iff the action resolves in `state` and all its preconditions hold.
pub fn applicable(state: &WorldState, action: &GroundAction<'_>) -> bool {
    action.resolve(state).is_some_and(|s| s.applicable(state))
}

/// Applies an applicable action. The input state is left untouched.
pub fn apply(state: &WorldState, action: &GroundAction<'_>) -> Result<WorldState, DomainError> {
    match action.resolve(state) {
        Some(step) if step.applicable(state) => step.apply_unchecked(state),
        _ => Err(DomainError::NotApplicable(action.instance.to_string())),
    }
}
