//! Discrete planning layer: predicates, action schemas, grounding, successor
//! generation and goal tests.
//!
//! Domains are written in a small line-oriented STRIPS dialect:
//!
//! ```text
//! # comment
//! type robot
//! type crawler robot
//! predicate on 2
//! action step (?r:crawler ?from:support ?to:support) pre: (on ?r ?from) !(holding ?r) add: (on ?r ?to) del: (on ?r ?from) tag: step
//! object c1 crawler
//! init: (on c1 floor)
//! goal: (on c1 stair1)
//! ```
//!
//! Names are interned into a [`SymbolTable`]; facts carry symbol ids so that
//! state comparison and hashing during search stay cheap.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Interned name.
pub type Sym = u32;

const MAX_ARITY: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("predicate `{name}` declared twice")]
    DuplicatePredicate { name: String },
    #[error("predicate `{name}` has arity {arity}, at most 3 supported")]
    ArityTooLarge { name: String, arity: usize },
    #[error("predicate `{name}` expects {expected} arguments, got {got}")]
    ArityMismatch { name: String, expected: usize, got: usize },
    #[error("action `{action}` uses undeclared variable `{var}`")]
    UnboundVariable { action: String, var: String },
    #[error("action `{action}` adds and deletes the same literal")]
    ContradictoryEffects { action: String },
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("unknown geometric tag `{0}`")]
    UnknownTag(String),
    #[error("goal is empty")]
    EmptyGoal,
    #[error("action `{action}` is not applicable in the given state")]
    NotApplicable { action: String },
}

#[derive(Debug, Default, Clone)]
pub struct SymbolTable {
    names: Vec<String>,
    index: HashMap<String, Sym>,
}

impl SymbolTable {
    pub fn intern(&mut self, name: &str) -> Sym {
        if let Some(&s) = self.index.get(name) {
            return s;
        }
        let s = self.names.len() as Sym;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), s);
        s
    }

    pub fn get(&self, name: &str) -> Option<Sym> {
        self.index.get(name).copied()
    }

    pub fn name(&self, sym: Sym) -> &str {
        &self.names[sym as usize]
    }
}

/// Geometric meaning of an action, used by the NLP builder and heuristics.
///
/// Parameter conventions per tag (further parameters are ignored):
/// `pick(robot, object, surface)`, `place(robot, object, surface)`,
/// `step(robot, from, to)`, `stepTogether(lead, partner, from, to)`,
/// `connect(lead, partner, ..)`, `disconnect(lead, partner, lead_support, partner_support)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GeometricTag {
    Pick,
    Place,
    Step,
    StepTogether,
    Connect,
    Disconnect,
    None,
}

impl GeometricTag {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "pick" => Self::Pick,
            "place" => Self::Place,
            "step" => Self::Step,
            "stepTogether" => Self::StepTogether,
            "connect" => Self::Connect,
            "disconnect" => Self::Disconnect,
            "none" => Self::None,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pick => "pick",
            Self::Place => "place",
            Self::Step => "step",
            Self::StepTogether => "stepTogether",
            Self::Connect => "connect",
            Self::Disconnect => "disconnect",
            Self::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predicate {
    pub name: Sym,
    pub arity: usize,
}

/// A ground fact. Unused argument slots are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub pred: Sym,
    pub arity: u8,
    pub args: [Sym; MAX_ARITY],
}

impl Fact {
    pub fn new(pred: Sym, args: &[Sym]) -> Self {
        assert!(args.len() <= MAX_ARITY);
        let mut a = [0; MAX_ARITY];
        a[..args.len()].copy_from_slice(args);
        Self { pred, arity: args.len() as u8, args: a }
    }

    pub fn args(&self) -> &[Sym] {
        &self.args[..self.arity as usize]
    }
}

/// Set of ground facts with a canonical, insertion-order independent id.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolicState {
    facts: Vec<Fact>,
    id: u64,
}

impl SymbolicState {
    pub fn new(facts: impl IntoIterator<Item = Fact>) -> Self {
        let set: BTreeSet<Fact> = facts.into_iter().collect();
        let facts: Vec<Fact> = set.into_iter().collect();
        let id = canonical_hash(&facts);
        Self { facts, id }
    }

    pub fn empty() -> Self {
        Self::new(std::iter::empty())
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.facts.binary_search(fact).is_ok()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    /// Facts with the given predicate whose first argument is `first`.
    pub fn matching(&self, pred: Sym, first: Sym) -> impl Iterator<Item = &Fact> {
        self.facts
            .iter()
            .filter(move |f| f.pred == pred && f.arity > 0 && f.args[0] == first)
    }
}

// FNV-1a over the sorted fact encoding.
fn canonical_hash(sorted: &[Fact]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |x: u32| {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    for f in sorted {
        feed(f.pred);
        feed(f.arity as u32);
        for &a in f.args() {
            feed(a);
        }
        feed(u32::MAX);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    Var(usize),
    Const(Sym),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Literal {
    pub pred: Sym,
    pub args: Vec<Term>,
    pub negated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parameter {
    pub name: String,
    pub ty: Sym,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: Sym,
    pub parameters: Vec<Parameter>,
    pub preconditions: Vec<Literal>,
    pub add: Vec<Literal>,
    pub del: Vec<Literal>,
    /// Parameter pairs that must bind different objects, written `!(= ?a ?b)`.
    pub distinct: Vec<(usize, usize)>,
    pub tag: GeometricTag,
}

/// An instantiated action with its ground preconditions and effects.
#[derive(Debug, Clone)]
pub struct GroundAction {
    pub schema: Arc<ActionSchema>,
    pub binding: Vec<Sym>,
    pub key: String,
    pub pre_pos: Vec<Fact>,
    pub pre_neg: Vec<Fact>,
    pub add: Vec<Fact>,
    pub del: Vec<Fact>,
}

impl GroundAction {
    pub fn tag(&self) -> GeometricTag {
        self.schema.tag
    }

    pub fn arg(&self, i: usize) -> Option<Sym> {
        self.binding.get(i).copied()
    }
}

impl PartialEq for GroundAction {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for GroundAction {}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Goal {
    pub required: Vec<Fact>,
    pub multi_goal: bool,
}

impl Goal {
    pub fn new(required: Vec<Fact>) -> Result<Self, DomainError> {
        if required.is_empty() {
            return Err(DomainError::EmptyGoal);
        }
        let multi_goal = required.len() > 1;
        Ok(Self { required, multi_goal })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedObject {
    pub name: Sym,
    pub ty: Sym,
}

/// A parsed domain together with its problem instance.
#[derive(Debug, Clone)]
pub struct Domain {
    pub symbols: SymbolTable,
    /// type -> parent type
    pub types: Vec<(Sym, Option<Sym>)>,
    pub predicates: Vec<Predicate>,
    pub schemas: Vec<Arc<ActionSchema>>,
    pub objects: Vec<TypedObject>,
    pub init: SymbolicState,
    pub goal: Goal,
}

impl Domain {
    pub fn parse(text: &str) -> Result<Self, DomainError> {
        parser::parse(text)
    }

    pub fn sym(&self, name: &str) -> Option<Sym> {
        self.symbols.get(name)
    }

    pub fn name(&self, sym: Sym) -> &str {
        self.symbols.name(sym)
    }

    pub fn is_subtype(&self, ty: Sym, of: Sym) -> bool {
        is_subtype(&self.types, ty, of)
    }

    pub fn object_type(&self, obj: Sym) -> Option<Sym> {
        self.objects.iter().find(|o| o.name == obj).map(|o| o.ty)
    }

    /// Objects whose type is `ty` or one of its subtypes.
    pub fn objects_of(&self, ty: &str) -> Vec<Sym> {
        let Some(t) = self.sym(ty) else { return Vec::new() };
        self.objects
            .iter()
            .filter(|o| self.is_subtype(o.ty, t))
            .map(|o| o.name)
            .collect()
    }

    pub fn ground(&self) -> Result<Vec<GroundAction>, DomainError> {
        ground(&self.schemas, &self.objects, &self.types, &self.symbols)
    }

    pub fn fact(&self, pred: &str, args: &[&str]) -> Result<Fact, DomainError> {
        let p = self
            .sym(pred)
            .filter(|p| self.predicates.iter().any(|d| d.name == *p))
            .ok_or_else(|| DomainError::UnknownPredicate(pred.to_string()))?;
        let args = args
            .iter()
            .map(|a| self.sym(a).ok_or_else(|| DomainError::UnknownObject(a.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Fact::new(p, &args))
    }

    pub fn fact_to_string(&self, f: &Fact) -> String {
        let mut s = format!("({}", self.name(f.pred));
        for &a in f.args() {
            s.push(' ');
            s.push_str(self.name(a));
        }
        s.push(')');
        s
    }

    pub fn state_to_string(&self, state: &SymbolicState) -> String {
        state
            .facts()
            .iter()
            .map(|f| self.fact_to_string(f))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn is_subtype(types: &[(Sym, Option<Sym>)], ty: Sym, of: Sym) -> bool {
    let mut cur = Some(ty);
    let mut guard = 0;
    while let Some(t) = cur {
        if t == of {
            return true;
        }
        cur = types.iter().find(|(n, _)| *n == t).and_then(|(_, p)| *p);
        guard += 1;
        if guard > types.len() + 1 {
            break;
        }
    }
    false
}

fn ground_literal(lit: &Literal, binding: &[Sym]) -> Fact {
    let args: Vec<Sym> = lit
        .args
        .iter()
        .map(|t| match *t {
            Term::Var(i) => binding[i],
            Term::Const(c) => c,
        })
        .collect();
    Fact::new(lit.pred, &args)
}

/// Instantiates every schema with every type-consistent object tuple.
/// The result is sorted by action key.
pub fn ground(
    schemas: &[Arc<ActionSchema>],
    objects: &[TypedObject],
    types: &[(Sym, Option<Sym>)],
    symbols: &SymbolTable,
) -> Result<Vec<GroundAction>, DomainError> {
    for o in objects {
        if !types.iter().any(|(t, _)| *t == o.ty) {
            return Err(DomainError::UnknownType(symbols.name(o.ty).to_string()));
        }
    }
    let mut out = Vec::new();
    for schema in schemas {
        let candidates: Vec<Vec<Sym>> = schema
            .parameters
            .iter()
            .map(|p| {
                objects
                    .iter()
                    .filter(|o| is_subtype(types, o.ty, p.ty))
                    .map(|o| o.name)
                    .collect()
            })
            .collect();
        if candidates.iter().any(|c| c.is_empty()) {
            continue;
        }
        let mut idx = vec![0usize; candidates.len()];
        'odometer: loop {
            let binding: Vec<Sym> = idx.iter().zip(&candidates).map(|(&i, c)| c[i]).collect();
            if schema.distinct.iter().all(|&(a, b)| binding[a] != binding[b]) {
                out.push(instantiate(schema, binding, symbols));
            }
            let mut k = idx.len();
            loop {
                if k == 0 {
                    break 'odometer;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < candidates[k].len() {
                    continue 'odometer;
                }
                idx[k] = 0;
            }
        }
    }
    out.sort_by(|a, b| a.key.cmp(&b.key));
    Ok(out)
}

fn instantiate(schema: &Arc<ActionSchema>, binding: Vec<Sym>, symbols: &SymbolTable) -> GroundAction {
    let key = format!(
        "{}({})",
        symbols.name(schema.name),
        binding.iter().map(|&b| symbols.name(b)).collect::<Vec<_>>().join(",")
    );
    let mut pre_pos = Vec::new();
    let mut pre_neg = Vec::new();
    for l in &schema.preconditions {
        let f = ground_literal(l, &binding);
        if l.negated {
            pre_neg.push(f);
        } else {
            pre_pos.push(f);
        }
    }
    let add = schema.add.iter().map(|l| ground_literal(l, &binding)).collect();
    let del = schema.del.iter().map(|l| ground_literal(l, &binding)).collect();
    GroundAction { schema: schema.clone(), binding, key, pre_pos, pre_neg, add, del }
}

pub fn is_applicable(state: &SymbolicState, action: &GroundAction) -> bool {
    action.pre_pos.iter().all(|f| state.contains(f)) && !action.pre_neg.iter().any(|f| state.contains(f))
}

/// Actions applicable in `state`, in the order given.
pub fn applicable<'a>(state: &SymbolicState, actions: &'a [GroundAction]) -> Vec<&'a GroundAction> {
    actions.iter().filter(|a| is_applicable(state, a)).collect()
}

/// Successor state: `(facts \ del) ∪ add`.
pub fn apply(state: &SymbolicState, action: &GroundAction) -> Result<SymbolicState, DomainError> {
    if !is_applicable(state, action) {
        return Err(DomainError::NotApplicable { action: action.key.clone() });
    }
    let kept = state.facts().iter().filter(|f| !action.del.contains(f)).copied();
    Ok(SymbolicState::new(kept.chain(action.add.iter().copied())))
}

pub fn is_goal(state: &SymbolicState, goal: &Goal) -> bool {
    goal.required.iter().all(|f| state.contains(f))
}

mod parser {
    use super::*;

    struct Builder {
        symbols: SymbolTable,
        types: Vec<(Sym, Option<Sym>)>,
        predicates: Vec<Predicate>,
        schemas: Vec<Arc<ActionSchema>>,
        objects: Vec<TypedObject>,
        init: Vec<Fact>,
        goal: Vec<Fact>,
    }

    fn err(line: usize, msg: impl Into<String>) -> DomainError {
        DomainError::Parse { line, msg: msg.into() }
    }

    /// Splits `(a b) !(c d)` into `[(false, [a, b]), (true, [c, d])]`.
    fn literals(line: usize, s: &str) -> Result<Vec<(bool, Vec<String>)>, DomainError> {
        let mut out = Vec::new();
        let mut rest = s.trim();
        while !rest.is_empty() {
            let negated = rest.starts_with('!');
            if negated {
                rest = rest[1..].trim_start();
            }
            if !rest.starts_with('(') {
                return Err(err(line, format!("expected `(` in `{rest}`")));
            }
            let close = rest.find(')').ok_or_else(|| err(line, "unterminated literal"))?;
            let toks: Vec<String> = rest[1..close].split_whitespace().map(str::to_string).collect();
            if toks.is_empty() {
                return Err(err(line, "empty literal"));
            }
            out.push((negated, toks));
            rest = rest[close + 1..].trim_start();
        }
        Ok(out)
    }

    impl Builder {
        fn predicate(&self, name: &str, nargs: usize) -> Result<Sym, DomainError> {
            let sym = self.symbols.get(name);
            let p = sym
                .and_then(|s| self.predicates.iter().find(|p| p.name == s))
                .ok_or_else(|| DomainError::UnknownPredicate(name.to_string()))?;
            if p.arity != nargs {
                return Err(DomainError::ArityMismatch { name: name.to_string(), expected: p.arity, got: nargs });
            }
            Ok(p.name)
        }

        fn ground_facts(&mut self, line: usize, s: &str) -> Result<Vec<Fact>, DomainError> {
            let mut out = Vec::new();
            for (neg, toks) in literals(line, s)? {
                if neg {
                    return Err(err(line, "negated facts are not allowed here"));
                }
                let pred = self.predicate(&toks[0], toks.len() - 1)?;
                let args = toks[1..]
                    .iter()
                    .map(|a| {
                        self.symbols
                            .get(a)
                            .filter(|s| self.objects.iter().any(|o| o.name == *s))
                            .ok_or_else(|| DomainError::UnknownObject(a.clone()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                out.push(Fact::new(pred, &args));
            }
            Ok(out)
        }

        fn action(&mut self, line: usize, rest: &str) -> Result<(), DomainError> {
            let open = rest.find('(').ok_or_else(|| err(line, "missing parameter list"))?;
            let close = rest.find(')').ok_or_else(|| err(line, "missing `)`"))?;
            let name = rest[..open].trim();
            if name.is_empty() {
                return Err(err(line, "missing action name"));
            }
            let mut params = Vec::new();
            for p in rest[open + 1..close].split_whitespace() {
                let (var, ty) = p.split_once(':').ok_or_else(|| err(line, format!("parameter `{p}` lacks a type")))?;
                let ty_sym = self
                    .symbols
                    .get(ty)
                    .filter(|t| self.types.iter().any(|(n, _)| n == t))
                    .ok_or_else(|| DomainError::UnknownType(ty.to_string()))?;
                params.push(Parameter { name: var.to_string(), ty: ty_sym });
            }
            let body = &rest[close + 1..];
            let sections = ["pre:", "add:", "del:", "tag:"];
            let mut found: Vec<(usize, &str)> =
                sections.iter().filter_map(|s| body.find(s).map(|i| (i, *s))).collect();
            found.sort();
            let mut parts: HashMap<&str, &str> = HashMap::new();
            for (i, (pos, sec)) in found.iter().enumerate() {
                let end = found.get(i + 1).map(|(p, _)| *p).unwrap_or(body.len());
                parts.insert(sec, &body[pos + sec.len()..end]);
            }
            let tag_str = parts.get("tag:").map(|s| s.trim()).unwrap_or("none");
            let tag = GeometricTag::parse(tag_str).ok_or_else(|| DomainError::UnknownTag(tag_str.to_string()))?;
            let var_index = |t: &String| {
                params.iter().position(|p| &p.name == t).ok_or_else(|| DomainError::UnboundVariable {
                    action: name.to_string(),
                    var: t.clone(),
                })
            };
            let mut distinct = Vec::new();
            for (negated, toks) in literals(line, parts.get("pre:").copied().unwrap_or(""))? {
                if toks[0] == "=" {
                    if !negated || toks.len() != 3 {
                        return Err(err(line, "equality is only supported as `!(= ?a ?b)`"));
                    }
                    distinct.push((var_index(&toks[1])?, var_index(&toks[2])?));
                }
            }
            let lits = |sec: &str| -> Result<Vec<Literal>, DomainError> {
                let mut out = Vec::new();
                for (negated, toks) in literals(line, parts.get(sec).copied().unwrap_or(""))? {
                    if toks[0] == "=" {
                        if sec != "pre:" {
                            return Err(err(line, "equality cannot be an effect"));
                        }
                        continue;
                    }
                    let pred = self.predicate(&toks[0], toks.len() - 1)?;
                    let mut args = Vec::new();
                    for t in &toks[1..] {
                        if t.starts_with('?') {
                            args.push(Term::Var(var_index(t)?));
                        } else {
                            let c = self.symbols.get(t).ok_or_else(|| DomainError::UnknownObject(t.clone()))?;
                            args.push(Term::Const(c));
                        }
                    }
                    out.push(Literal { pred, args, negated });
                }
                Ok(out)
            };
            let preconditions = lits("pre:")?;
            let add = lits("add:")?;
            let del = lits("del:")?;
            if add.iter().any(|a| del.iter().any(|d| d.pred == a.pred && d.args == a.args)) {
                return Err(DomainError::ContradictoryEffects { action: name.to_string() });
            }
            if add.iter().chain(&del).any(|l| l.negated) {
                return Err(err(line, "effects cannot be negated"));
            }
            let name = self.symbols.intern(name);
            self.schemas.push(Arc::new(ActionSchema { name, parameters: params, preconditions, add, del, distinct, tag }));
            Ok(())
        }
    }

    pub(super) fn parse(text: &str) -> Result<Domain, DomainError> {
        let mut b = Builder {
            symbols: SymbolTable::default(),
            types: Vec::new(),
            predicates: Vec::new(),
            schemas: Vec::new(),
            objects: Vec::new(),
            init: Vec::new(),
            goal: Vec::new(),
        };
        let mut goal_seen = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            if let Some(rest) = l.strip_prefix("init:") {
                let facts = b.ground_facts(line, rest)?;
                b.init.extend(facts);
                continue;
            }
            if let Some(rest) = l.strip_prefix("goal:") {
                let facts = b.ground_facts(line, rest)?;
                b.goal.extend(facts);
                goal_seen = true;
                continue;
            }
            let (kw, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
            let toks: Vec<&str> = rest.split_whitespace().collect();
            match kw {
                "type" => {
                    let name = *toks.first().ok_or_else(|| err(line, "missing type name"))?;
                    let parent = match toks.get(1) {
                        Some(p) => Some(b.symbols.get(p).filter(|s| b.types.iter().any(|(t, _)| t == s))
                            .ok_or_else(|| DomainError::UnknownType(p.to_string()))?),
                        None => None,
                    };
                    let s = b.symbols.intern(name);
                    if !b.types.iter().any(|(t, _)| *t == s) {
                        b.types.push((s, parent));
                    }
                }
                "predicate" => {
                    if toks.len() != 2 {
                        return Err(err(line, "expected `predicate <name> <arity>`"));
                    }
                    let arity: usize = toks[1].parse().map_err(|_| err(line, "bad arity"))?;
                    if arity > MAX_ARITY {
                        return Err(DomainError::ArityTooLarge { name: toks[0].to_string(), arity });
                    }
                    let s = b.symbols.intern(toks[0]);
                    if b.predicates.iter().any(|p| p.name == s) {
                        return Err(DomainError::DuplicatePredicate { name: toks[0].to_string() });
                    }
                    b.predicates.push(Predicate { name: s, arity });
                }
                "action" => b.action(line, rest)?,
                "object" => {
                    if toks.len() != 2 {
                        return Err(err(line, "expected `object <name> <type>`"));
                    }
                    let ty = b
                        .symbols
                        .get(toks[1])
                        .filter(|t| b.types.iter().any(|(n, _)| n == t))
                        .ok_or_else(|| DomainError::UnknownType(toks[1].to_string()))?;
                    let name = b.symbols.intern(toks[0]);
                    if b.objects.iter().any(|o| o.name == name) {
                        return Err(err(line, format!("object `{}` declared twice", toks[0])));
                    }
                    b.objects.push(TypedObject { name, ty });
                }
                other => return Err(err(line, format!("unknown declaration `{other}`"))),
            }
        }
        if !goal_seen || b.goal.is_empty() {
            return Err(DomainError::EmptyGoal);
        }
        Ok(Domain {
            symbols: b.symbols,
            types: b.types,
            predicates: b.predicates,
            schemas: b.schemas,
            objects: b.objects,
            init: SymbolicState::new(b.init),
            goal: Goal::new(b.goal)?,
        })
    }
}
