use std::collections::BTreeMap;
use std::fmt::Display;

use gridschema::engine::{self, ExternalInput, NodeBehavior, Payload};
use gridschema::morphism::{
    check_morphism, close_schema, completeness_flags, find_homomorphisms, preimage, subschema_check, MorphismLevel,
    SchemaMorphism, SearchConstraints,
};
use gridschema::text::{self, DotOptions, Model, MorphismDocument, ParseError};
use gridschema::transform::{self, AbstractionSpec, Binding, DeterminationSpec, Realization};
use gridschema::{Attachment, Direction, Form, Id, KindPath, KindUniverse, Schema};
use serde_json::json;

use crate::{Bindings, Command, Failure, HomCommand, Level};

type Outcome = Result<String, Failure>;

/// Where the kind registration file is looked up.
pub const UNIVERSE_VAR: &str = "SCHEMA_KIND_UNIVERSE";

fn domain(e: impl Display) -> Failure {
    Failure::Domain(e.to_string())
}

fn read(path: &str) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{path}: {e}")))
}

fn parse_failure(path: &str, e: ParseError) -> Failure {
    match e {
        ParseError::Syntax { .. } => Failure::Domain(format!("{path}:{e}")),
        ParseError::Semantic { .. } => Failure::Domain(format!("{path}: {e}")),
    }
}

fn load(path: &str) -> Result<Schema, Failure> {
    let text = read(path)?;
    text::parse(&text).map(Model::into_schema).map_err(|e| parse_failure(path, e))
}

fn load_morphism(path: &str) -> Result<SchemaMorphism, Failure> {
    let text = read(path)?;
    text::parse_morphism(&text).map(|d| d.morphism).map_err(|e| parse_failure(path, e))
}

/// The registered universe, if any, plus the kinds the documents declare.
fn universe(schemas: &[&Schema]) -> Result<KindUniverse, Failure> {
    let mut u = match std::env::var_os(UNIVERSE_VAR) {
        Some(path) => {
            let path = path.to_string_lossy().into_owned();
            KindUniverse::parse_registration(&read(&path)?).map_err(|e| Failure::Usage(format!("{path}: {e}")))?
        }
        None => KindUniverse::new(),
    };
    for s in schemas {
        u.merge(&s.header.universe);
    }
    Ok(u)
}

fn to_json(value: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(value).expect("results serialize") + "\n"
}

fn binding(s: &Schema, b: &Bindings) -> Result<Binding, Failure> {
    let mut out = Binding::new();
    for entry in &b.entries {
        text::parse_binding_entry(s, entry, &mut out).map_err(|e| Failure::Usage(format!("--bind {entry}: {e}")))?;
    }
    Ok(out)
}

fn realized(s: &Schema, b: &Binding) -> Result<Schema, Failure> {
    Ok(transform::realize(s, b).map_err(domain)?.to_schema())
}

pub fn run(command: Command) -> Outcome {
    match command {
        Command::Validate { file } => {
            let text = read(&file)?;
            let s = text::parse_schema_text(&text).map_err(|e| parse_failure(&file, e))?;
            let violations = s.validate();
            if violations.is_empty() {
                Ok(format!("{file}: valid {} schema\n", form_name(s.form)))
            } else {
                let lines: Vec<String> = violations.iter().map(|v| format!("{file}: {v}")).collect();
                Err(Failure::Domain(lines.join("\n")))
            }
        }
        Command::Grid { file } => Ok(to_json(&load(&file)?.grid().map_err(domain)?)),
        Command::Cgrid { file } => Ok(to_json(&load(&file)?.connection_grid().map_err(domain)?)),
        Command::Classify { file } => Ok(to_json(&load(&file)?.classify().map_err(domain)?)),
        Command::Vars { file } => Ok(to_json(&load(&file)?.variable_multiset())),
        Command::Basic { file } => Ok(text::write_schema(&load(&file)?.to_basic().map_err(domain)?)),
        Command::Concretize { file, bind } => {
            let s = load(&file)?;
            let b = binding(&s, &bind)?;
            Ok(text::write_schema(&transform::concretize(&s, &b).map_err(domain)?.schema))
        }
        Command::Realize { file, bind } => {
            let s = load(&file)?;
            let b = binding(&s, &bind)?;
            Ok(text::write_schema(&realized(&s, &b)?))
        }
        Command::Abstract { file, items } => {
            let s = load(&file)?;
            let mut spec = AbstractionSpec::default();
            for item in &items {
                let parsed =
                    text::parse_abstraction_item(&s, item).map_err(|e| Failure::Usage(format!("--abstract {item}: {e}")))?;
                spec.items.push(parsed);
            }
            Ok(text::write_schema(&transform::abstract_elements(&s, &spec).map_err(domain)?.schema))
        }
        Command::Determine { file, entries } => {
            let s = load(&file)?;
            let mut spec = DeterminationSpec::default();
            for entry in &entries {
                text::parse_determination_entry(&s, entry, &mut spec)
                    .map_err(|e| Failure::Usage(format!("--restrict {entry}: {e}")))?;
            }
            Ok(text::write_schema(&transform::determine(&s, &spec).map_err(domain)?))
        }
        Command::Compare { first, second } => {
            let (s, t) = (load(&first)?, load(&second)?);
            Ok(to_json(&transform::compare(&s, &t).map_err(domain)?))
        }
        Command::Equiv { first, second, within } => {
            let (s, t) = (load(&first)?, load(&second)?);
            let u = universe(&[&s, &t])?;
            let equivalent = match within {
                Some(path) => {
                    let kind: KindPath = path.parse().map_err(|e| Failure::Usage(format!("--within {path}: {e}")))?;
                    transform::equivalent_within(&s, &t, &u, |c| c.kind.is_within(&kind))
                }
                None => transform::equivalent(&s, &t, &u),
            }
            .map_err(domain)?;
            let strong = transform::strongly_equivalent(&s, &t, &u).map_err(domain)?;
            Ok(to_json(&json!({ "equivalent": equivalent, "strongly_equivalent": strong })))
        }
        Command::Maxabs { file } => Ok(text::write_schema(&transform::maximal_abstraction(&load(&file)?).map_err(domain)?)),
        Command::Close { file } => Ok(text::write_schema(&close_schema(&load(&file)?).map_err(domain)?.schema)),
        Command::Hom { command } => hom(command),
        Command::Sub { part, whole } => Ok(to_json(&subschema_check(&load(&part)?, &load(&whole)?).map_err(domain)?)),
        Command::Complete { part, whole } => {
            Ok(to_json(&completeness_flags(&load(&part)?, &load(&whole)?).map_err(domain)?))
        }
        Command::Preimage { domain: d, codomain, morphism, part } => {
            let (s, t, q) = (load(&d)?, load(&codomain)?, load(&part)?);
            let m = load_morphism(&morphism)?;
            Ok(text::write_schema(&preimage(&s, &t, &m, &q).map_err(domain)?))
        }
        Command::Sim { file, bind, behaviors, inputs, max_cycles, trace } => {
            sim(&file, &bind, behaviors.as_deref(), &inputs, max_cycles, trace.as_deref())
        }
        Command::Dot { file, ports } => Ok(text::export_dot(&load(&file)?, &DotOptions { show_ports: ports })),
    }
}

fn form_name(f: Form) -> &'static str {
    match f {
        Form::Basic => "basic",
        Form::Port => "port",
    }
}

fn hom(command: HomCommand) -> Outcome {
    match command {
        HomCommand::Check { domain: d, codomain, morphism } => {
            let (s, t) = (load(&d)?, load(&codomain)?);
            let m = load_morphism(&morphism)?;
            Ok(to_json(&check_morphism(&s, &t, &m).map_err(domain)?))
        }
        HomCommand::Find { domain: d, codomain, level, typed, mono, epi, limit } => {
            let (s, t) = (load(&d)?, load(&codomain)?);
            let level = match level {
                Level::Weak => MorphismLevel::Weak,
                Level::Structural => MorphismLevel::Structural,
            };
            let found = find_homomorphisms(&s, &t, SearchConstraints { level, typed, mono, epi, limit }).map_err(domain)?;
            let docs: Vec<String> = found
                .into_iter()
                .enumerate()
                .map(|(i, morphism)| {
                    text::write_morphism(&MorphismDocument {
                        name: format!("h{}", i + 1),
                        domain: s.name().to_string(),
                        codomain: t.name().to_string(),
                        morphism,
                    })
                })
                .collect();
            Ok(docs.join("\n"))
        }
    }
}

/// `[TARGET[@CYCLE]=]WORD`; a missing target means `default`.
fn parse_input(spec: &str, default: Option<&Id>) -> Result<ExternalInput, Failure> {
    let usage = |m: &str| Failure::Usage(format!("--input {spec}: {m}"));
    let (head, word) = match spec.split_once('=') {
        Some((h, w)) => (Some(h), w),
        None => (None, spec),
    };
    let (target, cycle) = match head {
        None => (default.cloned().ok_or_else(|| usage("the automaton has no open inlet; name a target"))?, 0),
        Some(h) => match h.split_once('@') {
            Some((t, c)) => (Id::new(t), c.parse().map_err(|_| usage("cycle must be a number"))?),
            None => (Id::new(h), 0),
        },
    };
    let payload = match word.strip_prefix("signal:") {
        Some(level) => Payload::Signal(level.parse().map_err(|_| usage("signal level must be a number"))?),
        None => Payload::Data(word.to_string()),
    };
    Ok(ExternalInput { cycle, target, payload })
}

/// The first external inlet, or else the first link open at its end.
fn default_inlet(s: &Schema) -> Option<Id> {
    s.external_ports()
        .find(|(_, p)| p.direction == Direction::Inlet)
        .map(|(id, _)| id.clone())
        .or_else(|| {
            s.adjacency.iter().find(|(_, c)| c.iter().any(|a| matches!(a, Attachment::EndOnly(_)))).map(|(l, _)| l.clone())
        })
}

fn sim(
    file: &str,
    bind: &Bindings,
    behaviors: Option<&str>,
    inputs: &[String],
    max_cycles: u64,
    trace: Option<&str>,
) -> Outcome {
    let s = load(file)?;
    let b = binding(&s, bind)?;
    let ga = match transform::realize(&s, &b).map_err(domain)? {
        Realization::Port(ga) => ga,
        Realization::Basic(ba) => Schema::from_basic_automaton(&ba)
            .to_port_form()
            .map_err(domain)?
            .to_automaton()
            .ok_or_else(|| Failure::Domain("realization is not a port automaton".into()))?,
    };
    let mut given: BTreeMap<Id, NodeBehavior> = match behaviors {
        Some(path) => serde_json::from_str(&read(path)?).map_err(|e| Failure::Usage(format!("{path}: {e}")))?,
        None => BTreeMap::new(),
    };
    for n in ga.nodes.keys() {
        given.entry(n.clone()).or_insert(NodeBehavior::Buffer);
    }
    let default = default_inlet(&Schema::from_automaton(&ga));
    let inputs = inputs.iter().map(|i| parse_input(i, default.as_ref())).collect::<Result<Vec<_>, _>>()?;
    let result = engine::run(&ga, &given, &inputs, max_cycles).map_err(domain)?;
    if let Some(path) = trace {
        std::fs::write(path, result.trace_jsonl()).map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
    }
    Ok(result
        .outputs
        .iter()
        .map(|o| serde_json::to_string(o).expect("outputs serialize") + "\n")
        .collect())
}
