use std::collections::{BTreeMap, BTreeSet};

use super::lexer::{lex, Tok, Token};
use super::{MorphismDocument, ParseError};
use crate::automaton::{Channel, Direction, ExternalTarget, LinkClass, Locus};
use crate::element::{Choice, Element, ParamValue, Position, Range, Value, Variable};
use crate::id::{is_identifier, Id};
use crate::kind::{Constant, KindPath, Sort};
use crate::morphism::SchemaMorphism;
use crate::multigraph::Attachment;
use crate::schema::{Form, LinkSlot, PortSlot, Schema};
use crate::transform::{AbstractionItem, Binding, DeterminationSpec};

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(text: &str) -> PResult<Self> {
        let toks = lex(text).map_err(|(line, col, message)| ParseError::Syntax { line, col, message })?;
        Ok(Parser { toks, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        let t = &self.toks[self.pos];
        Err(ParseError::Syntax { line: t.line, col: t.col, message: message.into() })
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn at_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Word(x) if x == w)
    }

    fn punct(&mut self, p: &str) -> PResult<()> {
        if self.at_punct(p) {
            self.advance();
            Ok(())
        } else {
            self.error(format!("expected `{p}`, found {}", self.peek()))
        }
    }

    fn keyword(&mut self, w: &str) -> PResult<()> {
        if self.at_word(w) {
            self.advance();
            Ok(())
        } else {
            self.error(format!("expected `{w}`, found {}", self.peek()))
        }
    }

    fn word(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Word(w) => {
                self.advance();
                Ok(w)
            }
            other => self.error(format!("expected {what}, found {other}")),
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        let w = self.word(what)?;
        if is_identifier(&w) {
            Ok(w)
        } else {
            self.pos -= 1;
            self.error(format!("`{w}` is not a valid {what}"))
        }
    }

    fn id(&mut self, what: &str) -> PResult<Id> {
        self.ident(what).map(Id::new)
    }

    fn kind_path(&mut self) -> PResult<KindPath> {
        let w = self.word("kind path")?;
        w.parse().or_else(|e| {
            self.pos -= 1;
            self.error(format!("{e}"))
        })
    }

    fn tag(&mut self, what: &str) -> PResult<String> {
        let w = self.word(what)?;
        if !w.is_empty() && w.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            Ok(w)
        } else {
            self.pos -= 1;
            self.error(format!("`{w}` is not a valid {what}"))
        }
    }

    fn constant(&mut self) -> PResult<Constant> {
        let mut c = Constant::new(self.kind_path()?);
        if self.at_punct("[") {
            self.advance();
            while !self.at_punct("]") {
                let k = self.ident("parameter name")?;
                self.punct("=")?;
                let v = self.tag("parameter value")?;
                c.params.insert(k, v);
                if !self.at_punct("]") {
                    self.punct(",")?;
                }
            }
            self.advance();
        }
        Ok(c)
    }

    fn braced_list<T>(&mut self, sep: &str, mut item: impl FnMut(&mut Self) -> PResult<T>) -> PResult<Vec<T>> {
        self.punct("{")?;
        let mut out = Vec::new();
        while !self.at_punct("}") {
            out.push(item(self)?);
            if !self.at_punct("}") {
                self.punct(sep)?;
            }
        }
        self.advance();
        Ok(out)
    }

    fn range(&mut self, sort: Sort) -> PResult<Range> {
        if self.at_punct("*") {
            self.advance();
            return Ok(Range::Universal(sort));
        }
        if self.at_word("values") {
            self.advance();
            let vs = self.braced_list(",", |p| p.tag("value"))?;
            return Ok(Range::Values(vs.into_iter().collect()));
        }
        let ks = self.braced_list(",", |p| p.kind_path())?;
        Ok(Range::Kinds(ks.into_iter().collect()))
    }

    fn element(&mut self, sort: Sort) -> PResult<Element> {
        match self.word("element")?.as_str() {
            "const" => Ok(Element::Constant(self.constant()?)),
            "var" => {
                let name = self.ident("variable name")?;
                self.keyword("range")?;
                Ok(Element::Variable(Variable::new(name, self.range(sort)?)))
            }
            "param" => {
                let kind = self.kind_path()?;
                self.keyword("with")?;
                let mut params = BTreeMap::new();
                loop {
                    let name = self.ident("parameter name")?;
                    self.punct("=")?;
                    let value = self.tag("parameter value")?;
                    let p = if self.at_word("values") {
                        if !is_identifier(&value) {
                            self.pos -= 1;
                            return self.error(format!("`{value}` is not a valid variable name"));
                        }
                        ParamValue::Var(Variable::new(value, self.range(sort)?))
                    } else {
                        ParamValue::Fixed(value)
                    };
                    if params.insert(name.clone(), p).is_some() {
                        return self.error(format!("parameter `{name}` given twice"));
                    }
                    if !self.at_punct(",") {
                        break;
                    }
                    self.advance();
                }
                Ok(Element::Parameterized { kind, params }.normalized())
            }
            other => {
                self.pos -= 1;
                self.error(format!("expected `const`, `var` or `param`, found `{other}`"))
            }
        }
    }

    fn optional_element(&mut self, sort: Sort, default: &str) -> PResult<Element> {
        if self.at_word("as") {
            self.advance();
            self.element(sort)
        } else {
            Ok(Element::constant(default))
        }
    }

    fn id_choice(&mut self, what: &str) -> PResult<Vec<Id>> {
        if self.at_punct("{") {
            self.braced_list("|", |p| p.id(what))
        } else {
            Ok(vec![self.id(what)?])
        }
    }

    fn attachment(&mut self) -> PResult<Attachment<Id>> {
        if self.at_word("from") {
            self.advance();
            let b = self.id("port or node")?;
            if self.at_word("to") {
                self.advance();
                Ok(Attachment::closed(b, self.id("port or node")?))
            } else {
                Ok(Attachment::BeginOnly(b))
            }
        } else if self.at_word("to") {
            self.advance();
            Ok(Attachment::EndOnly(self.id("port or node")?))
        } else {
            self.error(format!("expected `from` or `to`, found {}", self.peek()))
        }
    }

    fn attachments(&mut self) -> PResult<Vec<Attachment<Id>>> {
        if self.at_punct("{") {
            self.braced_list("|", |p| p.attachment())
        } else {
            Ok(vec![self.attachment()?])
        }
    }
}

fn duplicate<T>(id: &Id) -> PResult<T> {
    Err(ParseError::Semantic { id: Some(id.clone()), message: "declared twice".into() })
}

/// Parses a schema document without validating it.
pub fn parse_schema_text(text: &str) -> Result<Schema, ParseError> {
    let mut p = Parser::new(text)?;
    if *p.peek() == Tok::End {
        return Ok(Schema::default());
    }
    p.keyword("schema")?;
    let name = if matches!(p.peek(), Tok::Word(_)) { p.ident("schema name")? } else { String::new() };
    let mut declared_form = None;
    if p.at_punct(":") {
        p.advance();
        declared_form = Some(match p.word("schema form")?.as_str() {
            "basic" => Form::Basic,
            "port" => Form::Port,
            other => {
                p.pos -= 1;
                return p.error(format!("expected `basic` or `port`, found `{other}`"));
            }
        });
    }
    p.punct("{")?;
    let mut s = Schema::new(&name, Form::Basic);
    let mut externals: Vec<(Id, Vec<Id>)> = Vec::new();
    let mut seen: BTreeSet<Id> = BTreeSet::new();
    while !p.at_punct("}") {
        match p.word("declaration")?.as_str() {
            "kind" => {
                let sort: Sort = p.word("sort")?.parse().map_err(|m: String| ParseError::Syntax {
                    line: p.toks[p.pos - 1].line,
                    col: p.toks[p.pos - 1].col,
                    message: m,
                })?;
                let k = p.kind_path()?;
                s.header.universe.register(sort, k);
            }
            "note" => match p.advance() {
                Tok::Str(text) => s.header.notes.push(text),
                other => {
                    p.pos -= 1;
                    return p.error(format!("expected a string, found {other}"));
                }
            },
            "node" => {
                let id = p.id("node id")?;
                p.punct(":")?;
                let e = p.element(Sort::Node)?;
                if !seen.insert(id.clone()) {
                    return duplicate(&id);
                }
                s.nodes.insert(id, e);
            }
            "port" => {
                let id = p.id("port id")?;
                let direction = match p.word("direction")?.as_str() {
                    "in" => Direction::Inlet,
                    "out" => Direction::Outlet,
                    other => {
                        p.pos -= 1;
                        return p.error(format!("expected `in` or `out`, found `{other}`"));
                    }
                };
                let locus = match p.word("locus")?.as_str() {
                    "internal" => Locus::Internal,
                    "external" => Locus::External,
                    other => {
                        p.pos -= 1;
                        return p.error(format!("expected `internal` or `external`, found `{other}`"));
                    }
                };
                let targets = if p.at_word("of") {
                    p.advance();
                    Some(p.id_choice("owner")?)
                } else {
                    None
                };
                let element = p.optional_element(Sort::Port, "port")?;
                if !seen.insert(id.clone()) {
                    return duplicate(&id);
                }
                match (locus, targets) {
                    (Locus::Internal, Some(owners)) => {
                        s.internal_assignment.insert(id.clone(), owners.into_iter().collect());
                    }
                    (Locus::Internal, None) => {}
                    (Locus::External, Some(t)) => externals.push((id.clone(), t)),
                    (Locus::External, None) => {}
                }
                s.ports.insert(id, PortSlot { direction, locus, element });
            }
            "link" => {
                let id = p.id("link id")?;
                p.punct(":")?;
                let class: LinkClass = p.word("link class")?.parse().or_else(|m: String| {
                    p.pos -= 1;
                    p.error(m)
                })?;
                let channel = match p.peek() {
                    Tok::Word(w) if ["simple", "filter", "correct"].contains(&w.as_str()) => {
                        let w = w.clone();
                        p.advance();
                        w.parse::<Channel>().expect("listed above")
                    }
                    _ => Channel::Simple,
                };
                let options = p.attachments()?;
                let element = p.optional_element(Sort::Link, "link")?;
                if !seen.insert(id.clone()) {
                    return duplicate(&id);
                }
                s.adjacency.insert(id.clone(), options.into_iter().collect());
                s.links.insert(id, LinkSlot { class, channel, element });
            }
            other => {
                p.pos -= 1;
                return p.error(format!("expected `kind`, `note`, `node`, `port` or `link`, found `{other}`"));
            }
        }
        p.punct(";")?;
    }
    p.advance();
    if *p.peek() != Tok::End {
        return p.error(format!("unexpected {} after the schema", p.peek()));
    }
    for (port, targets) in externals {
        let mut choice = BTreeSet::new();
        for t in targets {
            let target = if s.nodes.contains_key(&t) {
                ExternalTarget::Node(t)
            } else if s.ports.contains_key(&t) {
                ExternalTarget::Port(t)
            } else if s.links.contains_key(&t) {
                ExternalTarget::Link(t)
            } else {
                return Err(ParseError::Semantic {
                    id: Some(port),
                    message: format!("external target `{t}` is not declared"),
                });
            };
            choice.insert(target);
        }
        s.external_assignment.insert(port, Choice::from_set(choice));
    }
    s.form = declared_form.unwrap_or(if s.ports.is_empty() { Form::Basic } else { Form::Port });
    Ok(s)
}

/// Parses `morphism NAME : DOMAIN -> CODOMAIN { node a -> b; ... }`.
pub fn parse_morphism(text: &str) -> Result<MorphismDocument, ParseError> {
    let mut p = Parser::new(text)?;
    p.keyword("morphism")?;
    let name = p.ident("morphism name")?;
    p.punct(":")?;
    let domain = p.ident("schema name")?;
    p.punct("->")?;
    let codomain = p.ident("schema name")?;
    p.punct("{")?;
    let mut m = SchemaMorphism::default();
    while !p.at_punct("}") {
        let sort_at = p.pos;
        let sort = p.word("slot sort")?;
        let from = p.id("slot id")?;
        p.punct("->")?;
        let to = p.id("slot id")?;
        p.punct(";")?;
        let map = match sort.as_str() {
            "node" => &mut m.node_map,
            "link" => &mut m.link_map,
            "port" => &mut m.port_map,
            other => {
                p.pos = sort_at;
                return p.error(format!("expected `node`, `link` or `port`, found `{other}`"));
            }
        };
        if map.insert(from.clone(), to).is_some() {
            return duplicate(&from);
        }
    }
    p.advance();
    if *p.peek() != Tok::End {
        return p.error(format!("unexpected {} after the morphism", p.peek()));
    }
    Ok(MorphismDocument { name, domain, codomain, morphism: m })
}

fn whole<T>(text: &str, f: impl FnOnce(&mut Parser) -> PResult<T>) -> Result<T, String> {
    let mut p = Parser::new(text).map_err(|e| e.to_string())?;
    let v = f(&mut p).map_err(|e| e.to_string())?;
    if *p.peek() != Tok::End {
        return Err(format!("unexpected {} in `{text}`", p.peek()));
    }
    Ok(v)
}

/// Parses a range written as `{k1,k2}`, `*`, or `values {v1,v2}`.
pub fn parse_range(text: &str, sort: Sort) -> Result<Range, String> {
    whole(text, |p| p.range(sort))
}

/// Adds one `NAME=VALUE`, `NAME@SLOT=VALUE`, or `NAME@SLOT.PARAM=VALUE`
/// entry to a binding. The value's form follows the variable's range.
pub fn parse_binding_entry(s: &Schema, text: &str, binding: &mut Binding) -> Result<(), String> {
    let (lhs, value) = text.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{text}`"))?;
    let (name, occurrence) = match lhs.split_once('@') {
        Some((n, o)) => (n, Some(o)),
        None => (lhs, None),
    };
    let multiset = s.variable_multiset();
    let entry = multiset.entries.get(name).ok_or_else(|| format!("variable `{name}` does not occur"))?;
    let value = if entry.range.is_param_range() {
        Value::Param(value.to_string())
    } else {
        Value::Const(whole(value, |p| p.constant())?)
    };
    match occurrence {
        None => {
            binding.by_name.insert(name.to_string(), value);
        }
        Some(o) => {
            let (slot, position) = match o.split_once('.') {
                Some((slot, param)) => (slot, Position::Param(param.to_string())),
                None => (o, Position::Element),
            };
            binding.by_occurrence.insert((Id::new(slot), position), value);
        }
    }
    Ok(())
}

/// Parses `SLOT=VAR:RANGE` or `SLOT.PARAM=VAR:RANGE`.
pub fn parse_abstraction_item(s: &Schema, text: &str) -> Result<AbstractionItem, String> {
    let (lhs, rhs) = text.split_once('=').ok_or_else(|| format!("expected SLOT=VAR:RANGE, got `{text}`"))?;
    let (var, range) = rhs.split_once(':').ok_or_else(|| format!("expected VAR:RANGE, got `{rhs}`"))?;
    let (slot, position) = match lhs.split_once('.') {
        Some((slot, param)) => (Id::new(slot), Position::Param(param.to_string())),
        None => (Id::new(lhs), Position::Element),
    };
    let (sort, _) = s.slot(&slot).ok_or_else(|| format!("unknown slot `{slot}`"))?;
    if !is_identifier(var) {
        return Err(format!("`{var}` is not a valid variable name"));
    }
    Ok(AbstractionItem { slot, position, variable: Variable::new(var, parse_range(range, sort)?) })
}

/// Adds one `ID=SET` restriction. `ID` names a variable (SET is a range), an
/// internal port (SET lists owners), an external port (SET lists targets),
/// or a link (SET lists attachments).
pub fn parse_determination_entry(s: &Schema, text: &str, spec: &mut DeterminationSpec) -> Result<(), String> {
    let (key, set) = text.split_once('=').ok_or_else(|| format!("expected ID=SET, got `{text}`"))?;
    let multiset = s.variable_multiset();
    if let Some(entry) = multiset.entries.get(key) {
        let range = parse_range(set, entry.occurrences[0].sort)?;
        spec.ranges.insert(key.to_string(), range);
        return Ok(());
    }
    let id = Id::new(key);
    if let Some(port) = s.ports.get(&id) {
        let ids = whole(set, |p| p.id_choice("slot id"))?;
        match port.locus {
            Locus::Internal => {
                spec.owners.insert(id, ids.into_iter().collect());
            }
            Locus::External => {
                let mut choice = BTreeSet::new();
                for t in ids {
                    let target = if s.nodes.contains_key(&t) {
                        ExternalTarget::Node(t)
                    } else if s.ports.contains_key(&t) {
                        ExternalTarget::Port(t)
                    } else if s.links.contains_key(&t) {
                        ExternalTarget::Link(t)
                    } else {
                        return Err(format!("unknown target `{t}`"));
                    };
                    choice.insert(target);
                }
                spec.external.insert(id, Choice::from_set(choice));
            }
        }
        return Ok(());
    }
    if s.links.contains_key(&id) {
        let options = whole(set, |p| p.attachments())?;
        spec.adjacency.insert(id, options.into_iter().collect());
        return Ok(());
    }
    Err(format!("`{key}` is neither a variable, a port, nor a link"))
}
