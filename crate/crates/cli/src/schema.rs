//! Versioned JSON schemas shipped in `schemas/` and compiled into the binary.

use jsonschema::JSONSchema;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Domain,
    Disk,
    Verify,
    Subordinacy,
    Asymptotics,
    Fem,
}

impl Schema {
    pub const ALL: [Schema; 6] =
        [Schema::Domain, Schema::Disk, Schema::Verify, Schema::Subordinacy, Schema::Asymptotics, Schema::Fem];

    pub fn stem(self) -> &'static str {
        match self {
            Schema::Domain => "domain",
            Schema::Disk => "disk",
            Schema::Verify => "verify",
            Schema::Subordinacy => "subordinacy",
            Schema::Asymptotics => "asymptotics",
            Schema::Fem => "fem",
        }
    }

    /// Value of the `schema` field written into every report.
    pub fn id(self) -> String {
        format!("magrobin.{}/1", self.stem())
    }

    pub fn text(self) -> &'static str {
        match self {
            Schema::Domain => include_str!("../../../schemas/domain.schema.json"),
            Schema::Disk => include_str!("../../../schemas/disk.schema.json"),
            Schema::Verify => include_str!("../../../schemas/verify.schema.json"),
            Schema::Subordinacy => include_str!("../../../schemas/subordinacy.schema.json"),
            Schema::Asymptotics => include_str!("../../../schemas/asymptotics.schema.json"),
            Schema::Fem => include_str!("../../../schemas/fem.schema.json"),
        }
    }
}

/// Validate `instance`, joining all violations into one message.
pub fn validate(kind: Schema, instance: &Value) -> Result<(), String> {
    let schema: Value = serde_json::from_str(kind.text()).map_err(|e| format!("schema {}: {e}", kind.stem()))?;
    let compiled = JSONSchema::compile(&schema).map_err(|e| format!("schema {}: {e}", kind.stem()))?;
    let result = compiled.validate(instance);
    if let Err(errors) = result {
        let msgs: Vec<String> = errors.map(|e| format!("{} at `{}`", e, e.instance_path)).collect();
        return Err(msgs.join("; "));
    }
    Ok(())
}
