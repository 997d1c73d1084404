//! Shared test support: a validator for the subset of JSON Schema the
//! shipped report schema uses (type, enum, required, properties,
//! additionalProperties, items).

use serde_json::Value;

pub const REPORT_SCHEMA: &str = include_str!("../../schema/report.schema.json");

pub fn validate_report(instance: &Value) -> Result<(), String> {
    let schema: Value = serde_json::from_str(REPORT_SCHEMA).expect("schema parses");
    validate(&schema, instance, "$")
}

fn type_matches(expected: &str, instance: &Value) -> bool {
    match expected {
        "object" => instance.is_object(),
        "array" => instance.is_array(),
        "string" => instance.is_string(),
        "number" => instance.is_number(),
        "integer" => instance.is_i64() || instance.is_u64(),
        "boolean" => instance.is_boolean(),
        "null" => instance.is_null(),
        other => panic!("unsupported type keyword `{other}`"),
    }
}

pub fn validate(schema: &Value, instance: &Value, path: &str) -> Result<(), String> {
    let obj = schema.as_object().expect("schema nodes are objects");

    if let Some(t) = obj.get("type").and_then(Value::as_str) {
        if !type_matches(t, instance) {
            return Err(format!("{path}: expected type `{t}`"));
        }
    }
    if let Some(options) = obj.get("enum").and_then(Value::as_array) {
        if !options.contains(instance) {
            return Err(format!("{path}: value not in enum"));
        }
    }
    if let Some(required) = obj.get("required").and_then(Value::as_array) {
        let inst = instance
            .as_object()
            .ok_or_else(|| format!("{path}: required applies to objects"))?;
        for key in required {
            let key = key.as_str().expect("required entries are strings");
            if !inst.contains_key(key) {
                return Err(format!("{path}: missing required field `{key}`"));
            }
        }
    }
    if let Some(props) = obj.get("properties").and_then(Value::as_object) {
        if let Some(inst) = instance.as_object() {
            for (key, sub) in props {
                if let Some(value) = inst.get(key) {
                    validate(sub, value, &format!("{path}.{key}"))?;
                }
            }
            if obj.get("additionalProperties").and_then(Value::as_bool) == Some(false) {
                for key in inst.keys() {
                    if !props.contains_key(key) {
                        return Err(format!("{path}: unexpected field `{key}`"));
                    }
                }
            }
        }
    }
    if let Some(items) = obj.get("items") {
        if let Some(arr) = instance.as_array() {
            for (i, value) in arr.iter().enumerate() {
                validate(items, value, &format!("{path}[{i}]"))?;
            }
        }
    }
    Ok(())
}
