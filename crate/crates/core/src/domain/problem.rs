use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::entity::{normalize_token, Category, EntityId};
use super::fluent::{Fluent, WorldState, ROBOT_AT};
use super::schema::{ActionSchema, FluentTemplate, GroundAction, Param, Role, Term};
use super::DomainError;
use crate::actionseq::{ActionInstance, Arg};

/// Predicate linking an entity to the location it ultimately sits in.
pub const ROOM: &str = "room";
/// Predicate written for `name: category at place` declarations.
pub const AT: &str = "at";

/// Entities, action schemas and the initial state of one scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemDefinition {
    entities: Vec<(EntityId, Category)>,
    index: BTreeMap<EntityId, Category>,
    schemas: Vec<ActionSchema>,
    initial: WorldState,
}

impl ProblemDefinition {
    /// Declared entities in file order.
    pub fn entities(&self) -> impl Iterator<Item = (&EntityId, Category)> {
        self.entities.iter().map(|(e, c)| (e, *c))
    }

    pub fn entity_ids(&self) -> impl Iterator<Item = &EntityId> {
        self.entities.iter().map(|(e, _)| e)
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn category(&self, id: &EntityId) -> Option<Category> {
        self.index.get(id).copied()
    }

    pub fn has_entity(&self, id: &EntityId) -> bool {
        self.index.contains_key(id)
    }

    pub fn schemas(&self) -> &[ActionSchema] {
        &self.schemas
    }

    pub fn schema(&self, name: &str) -> Option<&ActionSchema> {
        self.schemas.iter().find(|s| s.name == name)
    }

    pub fn initial(&self) -> &WorldState {
        &self.initial
    }

    /// Binds `args` to `schema`, checking arity, entity existence and roles.
    pub fn ground<'p>(
        &'p self,
        schema: &'p ActionSchema,
        args: &[Arg],
    ) -> Result<GroundAction<'p>, DomainError> {
        GroundAction::new(schema, args, |e| self.category(e))
    }

    /// Looks up the schema by the action's name, then grounds it.
    pub fn ground_instance(&self, action: &ActionInstance) -> Result<GroundAction<'_>, DomainError> {
        let schema = self
            .schema(action.name())
            .ok_or_else(|| DomainError::UnknownAction(action.name().to_string()))?;
        self.ground(schema, action.args())
    }

    pub fn load(path: &Path) -> Result<Self, DomainError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DomainError::Io(format!("{}: {e}", path.display())))?;
        load_problem(&text)
    }
}

/// Parses the problem text format:
///
/// ```text
/// [entities]
/// kitchen: location
/// table: object at kitchen
///
/// [schemas]
/// grab(?o: object)
///   context at(?o, ?p), room(?o, ?l)
///   pre robot_at(?l), grabbable(?o)
///   add holding(?o)
///   del at(?o, ?p), room(?o, ?l)
///
/// [initial]
/// robot_at(kitchen)
/// grabbable(cup)
/// ```
///
/// Placement `x: category at p` adds `at(x, p)` and `room(x, r)`, where `r`
/// is the location reached by following placements from `p`. Every location
/// `l` also gets `room(l, l)`.
pub fn load_problem(text: &str) -> Result<ProblemDefinition, DomainError> {
    let raw = Parser::default().parse(text)?;
    raw.build()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Entities,
    Schemas,
    Initial,
}

#[derive(Default)]
struct RawProblem {
    entities: Vec<(EntityId, Category, Option<EntityId>, usize)>,
    schemas: Vec<(ActionSchema, usize)>,
    initial: Vec<(Fluent, usize)>,
}

#[derive(Default)]
struct Parser {
    raw: RawProblem,
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> DomainError {
    DomainError::Parse {
        line,
        column,
        message: message.into(),
    }
}

impl Parser {
    fn parse(mut self, text: &str) -> Result<RawProblem, DomainError> {
        let mut section = Section::None;
        let mut saw_content = false;
        for (idx, full) in text.lines().enumerate() {
            let line_no = idx + 1;
            let body = full.split('#').next().unwrap_or("");
            if body.trim().is_empty() {
                continue;
            }
            saw_content = true;
            let indent = body.len() - body.trim_start().len();
            let line = body.trim();
            if line.starts_with('[') {
                section = match line {
                    "[entities]" => Section::Entities,
                    "[schemas]" => Section::Schemas,
                    "[initial]" => Section::Initial,
                    other => {
                        return Err(parse_err(line_no, indent + 1, format!("unknown section `{other}`")))
                    }
                };
                continue;
            }
            match section {
                Section::None => {
                    return Err(parse_err(line_no, indent + 1, "content before the first section header"))
                }
                Section::Entities => self.entity_line(line, line_no, indent + 1)?,
                Section::Initial => {
                    let mut cur = Cursor::new(line, line_no, indent + 1);
                    for t in cur.template_list()? {
                        let fluent = ground_template(&t).map_err(|m| parse_err(line_no, indent + 1, m))?;
                        self.raw.initial.push((fluent, line_no));
                    }
                }
                Section::Schemas if indent == 0 => {
                    let mut cur = Cursor::new(line, line_no, 1);
                    let schema = cur.schema_header()?;
                    self.raw.schemas.push((schema, line_no));
                }
                Section::Schemas => {
                    let (schema, _) = self
                        .raw
                        .schemas
                        .last_mut()
                        .ok_or_else(|| parse_err(line_no, indent + 1, "clause outside of a schema"))?;
                    let (kw, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
                    let offset = indent + 1 + (line.len() - rest.len());
                    let list = Cursor::new(rest, line_no, offset).template_list()?;
                    let target = match kw {
                        "context" => &mut schema.context,
                        "pre" => &mut schema.preconditions,
                        "add" => &mut schema.add_effects,
                        "del" => &mut schema.del_effects,
                        other => {
                            return Err(parse_err(
                                line_no,
                                indent + 1,
                                format!("unknown clause `{other}`, expected context/pre/add/del"),
                            ))
                        }
                    };
                    target.extend(list);
                }
            }
        }
        if !saw_content {
            return Err(parse_err(1, 1, "empty problem file"));
        }
        Ok(self.raw)
    }

    fn entity_line(&mut self, line: &str, line_no: usize, col: usize) -> Result<(), DomainError> {
        let (name, rest) = line
            .split_once(':')
            .ok_or_else(|| parse_err(line_no, col, "expected `name: category [at place]`"))?;
        let id = EntityId::new(name).map_err(|_| parse_err(line_no, col, format!("bad entity name `{name}`")))?;
        if id.as_str() != name.trim() {
            return Err(parse_err(line_no, col, format!("entity name `{}` is not in canonical form", name.trim())));
        }
        let mut words = rest.split_whitespace();
        let cat_col = col + name.len() + 1;
        let category: Category = words
            .next()
            .ok_or_else(|| parse_err(line_no, cat_col, "missing category"))?
            .parse()
            .map_err(|_| parse_err(line_no, cat_col, "category must be object, location or person"))?;
        let place = match (words.next(), words.next(), words.next()) {
            (None, _, _) => None,
            (Some("at"), Some(p), None) => Some(
                EntityId::new(p).map_err(|_| parse_err(line_no, cat_col, format!("bad place `{p}`")))?,
            ),
            _ => return Err(parse_err(line_no, cat_col, "expected `category` or `category at place`")),
        };
        self.raw.entities.push((id, category, place, line_no));
        Ok(())
    }
}

fn ground_template(t: &FluentTemplate) -> Result<Fluent, String> {
    let args = t
        .terms
        .iter()
        .map(|term| match term {
            Term::Const(c) => Ok(c.clone()),
            Term::Var(v) => Err(format!("variable ?{v} not allowed in the initial state")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Fluent::new(&t.predicate, args).map_err(|e| e.to_string())
}

/// Character cursor over one line, tracking the column for error reports.
struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col0: usize,
}

impl Cursor {
    fn new(src: &str, line: usize, col0: usize) -> Self {
        Cursor {
            chars: src.chars().collect(),
            pos: 0,
            line,
            col0,
        }
    }

    fn err(&self, message: impl Into<String>) -> DomainError {
        parse_err(self.line, self.col0 + self.pos, message)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, c: char) -> Result<(), DomainError> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`")))
        }
    }

    fn ident(&mut self) -> Result<String, DomainError> {
        self.skip_ws();
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected an identifier"));
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        if normalize_token(&s) != s {
            return Err(parse_err(self.line, self.col0 + start, format!("`{s}` must be lowercase")));
        }
        Ok(s)
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.chars.len()
    }

    fn term(&mut self) -> Result<Term, DomainError> {
        self.skip_ws();
        if self.peek() == Some('?') {
            self.pos += 1;
            Ok(Term::Var(self.ident()?))
        } else {
            let name = self.ident()?;
            Ok(Term::Const(EntityId::new(&name).map_err(|e| self.err(e.to_string()))?))
        }
    }

    fn template(&mut self) -> Result<FluentTemplate, DomainError> {
        let predicate = self.ident()?;
        self.expect('(')?;
        let mut terms = Vec::new();
        self.skip_ws();
        if self.peek() != Some(')') {
            loop {
                terms.push(self.term()?);
                self.skip_ws();
                match self.peek() {
                    Some(',') => self.pos += 1,
                    _ => break,
                }
            }
        }
        self.expect(')')?;
        Ok(FluentTemplate { predicate, terms })
    }

    /// Comma-separated templates; an empty line yields an empty list.
    fn template_list(&mut self) -> Result<Vec<FluentTemplate>, DomainError> {
        let mut out = Vec::new();
        if self.at_end() {
            return Ok(out);
        }
        loop {
            out.push(self.template()?);
            if self.at_end() {
                return Ok(out);
            }
            self.expect(',')?;
        }
    }

    fn schema_header(&mut self) -> Result<ActionSchema, DomainError> {
        let name = self.ident()?;
        self.expect('(')?;
        let mut params = Vec::new();
        self.skip_ws();
        if self.peek() != Some(')') {
            loop {
                self.expect('?')?;
                let pname = self.ident()?;
                self.skip_ws();
                let role = if self.peek() == Some(':') {
                    self.pos += 1;
                    let r = self.ident()?;
                    r.parse::<Role>()
                        .map_err(|_| self.err(format!("unknown role `{r}`")))?
                } else {
                    Role::Any
                };
                params.push(Param { name: pname, role });
                self.skip_ws();
                match self.peek() {
                    Some(',') => self.pos += 1,
                    _ => break,
                }
            }
        }
        self.expect(')')?;
        if !self.at_end() {
            return Err(self.err("unexpected text after schema header"));
        }
        Ok(ActionSchema {
            name,
            params,
            context: Vec::new(),
            preconditions: Vec::new(),
            add_effects: Vec::new(),
            del_effects: Vec::new(),
        })
    }
}

impl RawProblem {
    fn build(self) -> Result<ProblemDefinition, DomainError> {
        let invalid = |m: String| DomainError::Validation(m);
        let mut index = BTreeMap::new();
        let mut entities = Vec::new();
        for (id, cat, _, line) in &self.entities {
            if index.insert(id.clone(), *cat).is_some() {
                return Err(invalid(format!("line {line}: entity `{id}` declared twice")));
            }
            entities.push((id.clone(), *cat));
        }
        if entities.is_empty() {
            return Err(invalid("problem declares no entities".into()));
        }

        let placement: BTreeMap<&EntityId, &EntityId> = self
            .entities
            .iter()
            .filter_map(|(id, _, p, _)| p.as_ref().map(|p| (id, p)))
            .collect();
        let mut fluents: BTreeSet<Fluent> = BTreeSet::new();
        for (id, cat, place, line) in &self.entities {
            if *cat == Category::Location {
                fluents.insert(fact(ROOM, [id, id]));
            }
            let Some(place) = place else { continue };
            if !index.contains_key(place) {
                return Err(invalid(format!("line {line}: `{id}` is placed at undeclared `{place}`")));
            }
            fluents.insert(fact(AT, [id, place]));
            let mut cursor = place;
            let mut seen = BTreeSet::from([id]);
            loop {
                if !seen.insert(cursor) {
                    return Err(invalid(format!("line {line}: placement cycle through `{cursor}`")));
                }
                if index.get(cursor) == Some(&Category::Location) {
                    fluents.insert(fact(ROOM, [id, cursor]));
                    break;
                }
                match placement.get(cursor) {
                    Some(next) => cursor = next,
                    None => break,
                }
            }
        }

        for (f, line) in &self.initial {
            if let Some(bad) = f.args().iter().find(|a| !index.contains_key(*a)) {
                return Err(invalid(format!(
                    "line {line}: initial fluent `{f}` references undeclared entity `{bad}`"
                )));
            }
            fluents.insert(f.clone());
        }
        let initial = WorldState::from_set_checked(fluents).map_err(|e| match e {
            DomainError::RobotPlacement(n) => invalid(format!(
                "initial state must hold exactly one `{ROBOT_AT}` fluent, found {n}"
            )),
            other => other,
        })?;

        let mut schemas: Vec<ActionSchema> = Vec::new();
        for (schema, line) in self.schemas {
            if schemas.iter().any(|s| s.name == schema.name) {
                return Err(invalid(format!("line {line}: schema `{}` declared twice", schema.name)));
            }
            schema.validate().map_err(|m| invalid(format!("line {line}: {m}")))?;
            for t in schema
                .context
                .iter()
                .chain(&schema.preconditions)
                .chain(&schema.add_effects)
                .chain(&schema.del_effects)
            {
                for term in &t.terms {
                    if let Term::Const(c) = term {
                        if !index.contains_key(c) {
                            return Err(invalid(format!(
                                "line {line}: schema `{}` references undeclared entity `{c}`",
                                schema.name
                            )));
                        }
                    }
                }
            }
            schemas.push(schema);
        }

        Ok(ProblemDefinition {
            entities,
            index,
            schemas,
            initial,
        })
    }
}

fn fact<'a>(pred: &str, args: impl IntoIterator<Item = &'a EntityId>) -> Fluent {
    Fluent::new(pred, args.into_iter().cloned().collect()).expect("fixed arity")
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "\
[entities]
hall: location
kitchen: location
table: object at kitchen
phone: object at table
car: location

[schemas]
move_to(?l: location)
  context robot_at(?f)
  add robot_at(?l)
  del robot_at(?f)
grab(?o: object)
  context at(?o, ?p), room(?o, ?l)
  pre robot_at(?l)
  add holding(?o)
  del at(?o, ?p), room(?o, ?l)
say(?t: text)

[initial]
robot_at(hall)
";

    #[test]
    fn parses_and_derives_room_facts() {
        let p = load_problem(SMALL).unwrap();
        assert_eq!(p.entity_count(), 5);
        assert_eq!(p.schemas().len(), 3);
        let init = p.initial();
        for f in ["room(hall, hall)", "at(phone, table)", "room(phone, kitchen)", "room(table, kitchen)"] {
            assert!(init.contains(&f.parse().unwrap()), "{f}");
        }
        assert_eq!(init.robot_location().as_str(), "hall");
    }

    #[test]
    fn ground_checks_arity_entities_and_roles() {
        let p = load_problem(SMALL).unwrap();
        let grab = p.schema("grab").unwrap();
        let ok = p.ground(grab, &[Arg::entity("phone").unwrap()]).unwrap();
        assert_eq!(ok.to_string(), "grab(phone)");
        let err = p
            .ground(grab, &[Arg::entity("phone").unwrap(), Arg::entity("table").unwrap()])
            .unwrap_err();
        assert!(matches!(err, DomainError::ArityMismatch { expected: 1, got: 2, .. }));
        let err = p.ground(grab, &[Arg::entity("unicorn").unwrap()]).unwrap_err();
        assert!(matches!(err, DomainError::UnknownEntity(ref e) if e == "unicorn"));
        let err = p.ground(grab, &[Arg::entity("car").unwrap()]).unwrap_err();
        assert!(matches!(err, DomainError::RoleMismatch { .. }));
        let say = p.schema("say").unwrap();
        assert!(p.ground(say, &[Arg::Text("hi".into())]).is_ok());
        assert!(p.ground(say, &[Arg::entity("phone").unwrap()]).is_err());
        let move_to = p.schema("move_to").unwrap();
        assert_eq!(
            p.ground(move_to, &[Arg::entity("kitchen").unwrap()]).unwrap().to_string(),
            "move_to(kitchen)"
        );
    }

    #[test]
    fn empty_file_is_parse_error() {
        assert!(matches!(load_problem(""), Err(DomainError::Parse { line: 1, .. })));
        assert!(matches!(load_problem("# only a comment\n"), Err(DomainError::Parse { .. })));
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = load_problem("[entities]\nhall: location\n[schemas]\nmove_to(?l: location\n").unwrap_err();
        match err {
            DomainError::Parse { line, column, .. } => {
                assert_eq!(line, 4);
                assert!(column > 10, "column {column}");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            load_problem("[entities]\nhall: furniture\n"),
            Err(DomainError::Parse { line: 2, .. })
        ));
        assert!(matches!(load_problem("hall: location\n"), Err(DomainError::Parse { line: 1, .. })));
    }

    #[test]
    fn undeclared_entity_in_initial_is_validation_error() {
        let text = "[entities]\nhall: location\n[initial]\nrobot_at(hall)\nat(ghost, hall)\n";
        match load_problem(text).unwrap_err() {
            DomainError::Validation(m) => assert!(m.contains("ghost"), "{m}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validation_catches_schema_defects() {
        let base = "[entities]\nhall: location\n[initial]\nrobot_at(hall)\n[schemas]\n";
        let cases = [
            "a(?x)\nb(?y)\na(?z)\n",
            "a(?x)\n  pre p(?y)\n",
            "a(?x)\n  add p(?x)\n  del p(?x)\n",
            "a(?t: text)\n  add said(?t)\n",
            "a(?x, ?x)\n",
            "a(?x)\n  pre p(ghost)\n",
        ];
        for c in cases {
            let text = format!("{base}{c}");
            assert!(
                matches!(load_problem(&text), Err(DomainError::Validation(_))),
                "should reject:\n{c}"
            );
        }
    }

    #[test]
    fn robot_placement_is_validated() {
        let text = "[entities]\nhall: location\n";
        assert!(matches!(load_problem(text), Err(DomainError::Validation(_))));
    }

    #[test]
    fn placement_cycles_are_rejected() {
        let text = "[entities]\nhall: location\na: object at b\nb: object at a\n[initial]\nrobot_at(hall)\n";
        assert!(matches!(load_problem(text), Err(DomainError::Validation(_))));
    }
}
