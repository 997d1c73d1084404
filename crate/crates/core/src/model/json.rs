//! JSON document format for models and policies.
//!
//! One document per model. Common fields: `kind` (`"mdp"`, `"product"`,
//! `"ldba"`, `"policy"`), `states`, `initial`, `atoms`, `labels`. MDPs add
//! `actions` and probabilistic `transitions`; products additionally carry
//! an `accepting` list; LDBAs carry guarded `transitions`, `accepting`,
//! optional `epsilon`, and the `components` bipartition. Unknown top-level
//! keys are rejected so typos fail loudly. Schema errors name the offending
//! field path; positions of JSON syntax errors come straight from the
//! tokenizer and are deterministic.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Map, Value};

use super::{validate_ldba, Guard, LabeledMdp, Ldba, ModelError, ModelKind, Policy};

#[derive(Debug, Clone, PartialEq)]
pub enum ParsedModel {
    Mdp(LabeledMdp),
    Ldba(Ldba),
}

impl ParsedModel {
    pub fn as_mdp(&self) -> Option<&LabeledMdp> {
        match self {
            ParsedModel::Mdp(m) => Some(m),
            ParsedModel::Ldba(_) => None,
        }
    }

    pub fn as_ldba(&self) -> Option<&Ldba> {
        match self {
            ParsedModel::Ldba(a) => Some(a),
            ParsedModel::Mdp(_) => None,
        }
    }
}

fn parse_json(text: &str) -> Result<Value, ModelError> {
    serde_json::from_str(text).map_err(|e| ModelError::Syntax {
        line: e.line(),
        col: e.column(),
        message: e.to_string(),
    })
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> ModelError {
    ModelError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, ModelError> {
    v.as_object()
        .ok_or_else(|| schema(path, "expected an object"))
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a [Value], ModelError> {
    v.as_array()
        .map(Vec::as_slice)
        .ok_or_else(|| schema(path, "expected an array"))
}

fn as_str<'a>(v: &'a Value, path: &str) -> Result<&'a str, ModelError> {
    v.as_str().ok_or_else(|| schema(path, "expected a string"))
}

fn as_f64(v: &Value, path: &str) -> Result<f64, ModelError> {
    v.as_f64().ok_or_else(|| schema(path, "expected a number"))
}

fn require<'a>(
    obj: &'a Map<String, Value>,
    key: &str,
    parent: &str,
) -> Result<&'a Value, ModelError> {
    obj.get(key)
        .ok_or_else(|| schema(format!("{parent}{key}"), "missing required field"))
}

fn reject_unknown_keys(
    obj: &Map<String, Value>,
    allowed: &[&str],
    parent: &str,
) -> Result<(), ModelError> {
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(schema(format!("{parent}{key}"), "unknown field"));
        }
    }
    Ok(())
}

fn string_list(v: &Value, path: &str) -> Result<Vec<String>, ModelError> {
    let arr = as_array(v, path)?;
    let mut out = Vec::with_capacity(arr.len());
    for (i, item) in arr.iter().enumerate() {
        out.push(as_str(item, &format!("{path}[{i}]"))?.to_string());
    }
    Ok(out)
}

fn unique_ids(ids: &[String], path: &str) -> Result<(), ModelError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(schema(path, format!("duplicate id `{id}`")));
        }
    }
    Ok(())
}

struct Common {
    states: Vec<String>,
    initial: usize,
    atoms: Vec<String>,
    labels: Vec<BTreeSet<usize>>,
}

fn parse_common(obj: &Map<String, Value>) -> Result<Common, ModelError> {
    let states = string_list(require(obj, "states", "")?, "states")?;
    if states.is_empty() {
        return Err(schema("states", "must be non-empty"));
    }
    unique_ids(&states, "states")?;

    let initial_id = as_str(require(obj, "initial", "")?, "initial")?;
    let initial = states
        .iter()
        .position(|s| s == initial_id)
        .ok_or_else(|| schema("initial", format!("unknown state `{initial_id}`")))?;

    let atoms = match obj.get("atoms") {
        Some(v) => string_list(v, "atoms")?,
        None => Vec::new(),
    };
    unique_ids(&atoms, "atoms")?;
    for a in &atoms {
        if a == "t" || a == "f" {
            return Err(schema(
                "atoms",
                format!("atom `{a}` collides with a guard constant"),
            ));
        }
    }

    let mut labels = vec![BTreeSet::new(); states.len()];
    if let Some(v) = obj.get("labels") {
        let map = as_object(v, "labels")?;
        for (state_id, atom_list) in map {
            let path = format!("labels.{state_id}");
            let s = states
                .iter()
                .position(|x| x == state_id)
                .ok_or_else(|| schema(&path, "unknown state"))?;
            for name in string_list(atom_list, &path)? {
                let idx = atoms
                    .iter()
                    .position(|a| *a == name)
                    .ok_or_else(|| schema(&path, format!("undeclared atom `{name}`")))?;
                labels[s].insert(idx);
            }
        }
    }

    Ok(Common {
        states,
        initial,
        atoms,
        labels,
    })
}

fn parse_mdp_body(obj: &Map<String, Value>, kind: ModelKind) -> Result<LabeledMdp, ModelError> {
    let common = parse_common(obj)?;
    let n = common.states.len();

    let actions_map = as_object(require(obj, "actions", "")?, "actions")?;
    let mut actions: Vec<Vec<String>> = vec![Vec::new(); n];
    for (state_id, list) in actions_map {
        let path = format!("actions.{state_id}");
        let s = common
            .states
            .iter()
            .position(|x| x == state_id)
            .ok_or_else(|| schema(&path, "unknown state"))?;
        actions[s] = string_list(list, &path)?;
    }

    let mut transitions: Vec<Vec<Vec<(usize, f64)>>> = actions
        .iter()
        .map(|acts| vec![Vec::new(); acts.len()])
        .collect();
    let trans = as_array(require(obj, "transitions", "")?, "transitions")?;
    for (i, entry) in trans.iter().enumerate() {
        let path = format!("transitions[{i}]");
        let eobj = as_object(entry, &path)?;
        reject_unknown_keys(eobj, &["from", "action", "to", "prob"], &format!("{path}."))?;
        let from_id = as_str(
            require(eobj, "from", &format!("{path}."))?,
            &format!("{path}.from"),
        )?;
        let action_id = as_str(
            require(eobj, "action", &format!("{path}."))?,
            &format!("{path}.action"),
        )?;
        let to_id = as_str(
            require(eobj, "to", &format!("{path}."))?,
            &format!("{path}.to"),
        )?;
        let prob = as_f64(
            require(eobj, "prob", &format!("{path}."))?,
            &format!("{path}.prob"),
        )?;

        let from = common
            .states
            .iter()
            .position(|x| x == from_id)
            .ok_or_else(|| schema(format!("{path}.from"), format!("unknown state `{from_id}`")))?;
        let to = common
            .states
            .iter()
            .position(|x| x == to_id)
            .ok_or_else(|| schema(format!("{path}.to"), format!("unknown state `{to_id}`")))?;
        let a_pos = actions[from]
            .iter()
            .position(|a| a == action_id)
            .ok_or_else(|| {
                ModelError::InvariantViolation(format!(
                    "transition uses action `{action_id}` not allowed in state `{from_id}`"
                ))
            })?;
        transitions[from][a_pos].push((to, prob));
    }

    let accepting = match kind {
        ModelKind::Mdp => {
            if obj.contains_key("accepting") {
                return Err(schema("accepting", "not allowed on kind `mdp`"));
            }
            BTreeSet::new()
        }
        ModelKind::Product => match obj.get("accepting") {
            Some(v) => {
                let mut set = BTreeSet::new();
                for id in string_list(v, "accepting")? {
                    let s = common
                        .states
                        .iter()
                        .position(|x| *x == id)
                        .ok_or_else(|| schema("accepting", format!("unknown state `{id}`")))?;
                    set.insert(s);
                }
                set
            }
            None => BTreeSet::new(),
        },
    };

    let model = LabeledMdp {
        kind,
        states: common.states,
        initial: common.initial,
        atoms: common.atoms,
        labels: common.labels,
        actions,
        transitions,
        accepting,
    };
    model.validate()?;
    Ok(model)
}

fn parse_ldba_body(obj: &Map<String, Value>) -> Result<Ldba, ModelError> {
    let common = parse_common(obj)?;
    let n = common.states.len();

    let mut transitions: Vec<Vec<(Guard, usize)>> = vec![Vec::new(); n];
    let trans = as_array(require(obj, "transitions", "")?, "transitions")?;
    for (i, entry) in trans.iter().enumerate() {
        let path = format!("transitions[{i}]");
        let eobj = as_object(entry, &path)?;
        reject_unknown_keys(eobj, &["from", "guard", "to"], &format!("{path}."))?;
        let from_id = as_str(
            require(eobj, "from", &format!("{path}."))?,
            &format!("{path}.from"),
        )?;
        let guard_src = as_str(
            require(eobj, "guard", &format!("{path}."))?,
            &format!("{path}.guard"),
        )?;
        let to_id = as_str(
            require(eobj, "to", &format!("{path}."))?,
            &format!("{path}.to"),
        )?;

        let from = common
            .states
            .iter()
            .position(|x| x == from_id)
            .ok_or_else(|| schema(format!("{path}.from"), format!("unknown state `{from_id}`")))?;
        let to = common
            .states
            .iter()
            .position(|x| x == to_id)
            .ok_or_else(|| schema(format!("{path}.to"), format!("unknown state `{to_id}`")))?;
        let guard = Guard::parse(guard_src).map_err(|e| match e {
            ModelError::GuardSyntax { offset, message } => schema(
                format!("{path}.guard"),
                format!("guard syntax error at offset {offset}: {message}"),
            ),
            other => other,
        })?;
        guard.check_atoms(&common.atoms).map_err(|e| match e {
            ModelError::UnknownAtom(name) => {
                schema(format!("{path}.guard"), format!("undeclared atom `{name}`"))
            }
            other => other,
        })?;
        transitions[from].push((guard, to));
    }

    let mut accepting = BTreeSet::new();
    for id in string_list(require(obj, "accepting", "")?, "accepting")? {
        let q = common
            .states
            .iter()
            .position(|x| *x == id)
            .ok_or_else(|| schema("accepting", format!("unknown state `{id}`")))?;
        accepting.insert(q);
    }

    let mut epsilon: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    if let Some(v) = obj.get("epsilon") {
        let map = as_object(v, "epsilon")?;
        for (state_id, targets) in map {
            let path = format!("epsilon.{state_id}");
            let q = common
                .states
                .iter()
                .position(|x| x == state_id)
                .ok_or_else(|| schema(&path, "unknown state"))?;
            for id in string_list(targets, &path)? {
                let target = common
                    .states
                    .iter()
                    .position(|x| *x == id)
                    .ok_or_else(|| schema(&path, format!("unknown state `{id}`")))?;
                epsilon[q].insert(target);
            }
        }
    }

    let comps = as_object(require(obj, "components", "")?, "components")?;
    reject_unknown_keys(comps, &["ini", "acc"], "components.")?;
    let read_component = |key: &str| -> Result<BTreeSet<usize>, ModelError> {
        let mut set = BTreeSet::new();
        if let Some(v) = comps.get(key) {
            for id in string_list(v, &format!("components.{key}"))? {
                let q = common.states.iter().position(|x| *x == id).ok_or_else(|| {
                    schema(format!("components.{key}"), format!("unknown state `{id}`"))
                })?;
                set.insert(q);
            }
        }
        Ok(set)
    };
    let ini_component = read_component("ini")?;
    let acc_component = read_component("acc")?;

    let ldba = Ldba {
        states: common.states,
        initial: common.initial,
        atoms: common.atoms,
        transitions,
        epsilon,
        accepting,
        ini_component,
        acc_component,
    };
    let violations = validate_ldba(&ldba);
    if !violations.is_empty() {
        return Err(ModelError::InvariantViolation(violations.join("; ")));
    }
    Ok(ldba)
}

const MDP_KEYS: &[&str] = &[
    "kind",
    "states",
    "initial",
    "atoms",
    "labels",
    "actions",
    "transitions",
];
const PRODUCT_KEYS: &[&str] = &[
    "kind",
    "states",
    "initial",
    "atoms",
    "labels",
    "actions",
    "transitions",
    "accepting",
];
const LDBA_KEYS: &[&str] = &[
    "kind",
    "states",
    "initial",
    "atoms",
    "labels",
    "transitions",
    "accepting",
    "epsilon",
    "components",
];

/// Parses a model document (kind `mdp`, `product`, or `ldba`), checking
/// every structural invariant.
pub fn parse_model(text: &str) -> Result<ParsedModel, ModelError> {
    let value = parse_json(text)?;
    let obj = as_object(&value, "$")?;
    let kind = as_str(require(obj, "kind", "")?, "kind")?;
    match kind {
        "mdp" => {
            reject_unknown_keys(obj, MDP_KEYS, "")?;
            Ok(ParsedModel::Mdp(parse_mdp_body(obj, ModelKind::Mdp)?))
        }
        "product" => {
            reject_unknown_keys(obj, PRODUCT_KEYS, "")?;
            Ok(ParsedModel::Mdp(parse_mdp_body(obj, ModelKind::Product)?))
        }
        "ldba" => {
            reject_unknown_keys(obj, LDBA_KEYS, "")?;
            Ok(ParsedModel::Ldba(parse_ldba_body(obj)?))
        }
        other => Err(schema("kind", format!("unknown kind `{other}`"))),
    }
}

/// Parses a policy document and checks it is total and legal for `model`.
pub fn parse_policy(text: &str, model: &LabeledMdp) -> Result<Policy, ModelError> {
    let value = parse_json(text)?;
    let obj = as_object(&value, "$")?;
    reject_unknown_keys(obj, &["kind", "choice"], "")?;
    let kind = as_str(require(obj, "kind", "")?, "kind")?;
    if kind != "policy" {
        return Err(schema("kind", format!("expected `policy`, found `{kind}`")));
    }
    let choice_obj = as_object(require(obj, "choice", "")?, "choice")?;
    let mut choice = BTreeMap::new();
    for (state_id, action) in choice_obj {
        let action_id = as_str(action, &format!("choice.{state_id}"))?;
        choice.insert(state_id.clone(), action_id.to_string());
    }
    let policy = Policy::new(choice);
    policy.resolve_total(model)?;
    Ok(policy)
}

fn labels_value(states: &[String], atoms: &[String], labels: &[BTreeSet<usize>]) -> Value {
    let mut map = Map::new();
    for (s, label) in labels.iter().enumerate() {
        let names: Vec<Value> = label
            .iter()
            .map(|&i| Value::String(atoms[i].clone()))
            .collect();
        map.insert(states[s].clone(), Value::Array(names));
    }
    Value::Object(map)
}

/// Serializes a labeled MDP (or product) back to its document form.
pub fn serialize_mdp(m: &LabeledMdp) -> String {
    let mut obj = Map::new();
    let kind = match m.kind {
        ModelKind::Mdp => "mdp",
        ModelKind::Product => "product",
    };
    obj.insert("kind".into(), json!(kind));
    obj.insert("states".into(), json!(m.states));
    obj.insert("initial".into(), json!(m.states[m.initial]));
    obj.insert("atoms".into(), json!(m.atoms));
    obj.insert(
        "labels".into(),
        labels_value(&m.states, &m.atoms, &m.labels),
    );

    let mut actions = Map::new();
    for (s, acts) in m.actions.iter().enumerate() {
        actions.insert(m.states[s].clone(), json!(acts));
    }
    obj.insert("actions".into(), Value::Object(actions));

    let mut transitions = Vec::new();
    for (s, rows) in m.transitions.iter().enumerate() {
        for (a_pos, row) in rows.iter().enumerate() {
            for &(t, p) in row {
                transitions.push(json!({
                    "from": m.states[s],
                    "action": m.actions[s][a_pos],
                    "to": m.states[t],
                    "prob": p,
                }));
            }
        }
    }
    obj.insert("transitions".into(), Value::Array(transitions));

    if m.kind == ModelKind::Product {
        let acc: Vec<Value> = m
            .accepting
            .iter()
            .map(|&s| Value::String(m.states[s].clone()))
            .collect();
        obj.insert("accepting".into(), Value::Array(acc));
    }
    serde_json::to_string_pretty(&Value::Object(obj)).expect("serialization cannot fail")
}

/// Serializes an LDBA back to its document form.
pub fn serialize_ldba(a: &Ldba) -> String {
    let mut obj = Map::new();
    obj.insert("kind".into(), json!("ldba"));
    obj.insert("states".into(), json!(a.states));
    obj.insert("initial".into(), json!(a.states[a.initial]));
    obj.insert("atoms".into(), json!(a.atoms));

    let mut transitions = Vec::new();
    for (q, rows) in a.transitions.iter().enumerate() {
        for (guard, target) in rows {
            transitions.push(json!({
                "from": a.states[q],
                "guard": guard.to_string(),
                "to": a.states[*target],
            }));
        }
    }
    obj.insert("transitions".into(), Value::Array(transitions));

    let acc: Vec<Value> = a
        .accepting
        .iter()
        .map(|&q| Value::String(a.states[q].clone()))
        .collect();
    obj.insert("accepting".into(), Value::Array(acc));

    let mut epsilon = Map::new();
    for (q, targets) in a.epsilon.iter().enumerate() {
        if !targets.is_empty() {
            let ids: Vec<Value> = targets
                .iter()
                .map(|&t| Value::String(a.states[t].clone()))
                .collect();
            epsilon.insert(a.states[q].clone(), Value::Array(ids));
        }
    }
    obj.insert("epsilon".into(), Value::Object(epsilon));

    let ini: Vec<Value> = a
        .ini_component
        .iter()
        .map(|&q| Value::String(a.states[q].clone()))
        .collect();
    let accc: Vec<Value> = a
        .acc_component
        .iter()
        .map(|&q| Value::String(a.states[q].clone()))
        .collect();
    obj.insert("components".into(), json!({ "ini": ini, "acc": accc }));

    serde_json::to_string_pretty(&Value::Object(obj)).expect("serialization cannot fail")
}

pub fn serialize_model(m: &ParsedModel) -> String {
    match m {
        ParsedModel::Mdp(mdp) => serialize_mdp(mdp),
        ParsedModel::Ldba(a) => serialize_ldba(a),
    }
}

pub fn serialize_policy(p: &Policy) -> String {
    let mut choice = Map::new();
    for (s, a) in &p.choice {
        choice.insert(s.clone(), Value::String(a.clone()));
    }
    let doc = json!({ "kind": "policy", "choice": Value::Object(choice) });
    serde_json::to_string_pretty(&doc).expect("serialization cannot fail")
}
