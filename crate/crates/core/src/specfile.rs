//! JSON system spec files.
//!
//! ```json
//! {
//!   "name": "optional label",
//!   "n": 2,
//!   "coords": ["x", "y"],
//!   "defs": {"r2": "x^2 + y^2"},
//!   "metric": [["1", "0"], ["0", "1"]],
//!   "inputs": [["1", "0"]],
//!   "force": ["0", "0"],
//!   "christoffel": "levi-civita",
//!   "box": [[-1, 1], [-1, 1]],
//!   "cost": {"kind": "expr", "G": "x"}
//! }
//! ```
//!
//! `defs` are expanded in document order and may use coordinates, `t` and
//! earlier defs. A Christoffel table is an object with 1-based `"k,i,j"`
//! keys; unlisted entries are zero.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::expr::{parse_with_defs, Defs, Expr, Symbols};
use crate::geometry::{ChristoffelSource, ChristoffelTable};
use crate::systems::{CostSpec, SystemParts, SystemSpec};

/// Raw spec document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: usize,
    pub coords: Vec<String>,
    #[serde(default)]
    pub defs: Map<String, Value>,
    pub metric: Vec<Vec<String>>,
    pub inputs: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub force: Option<Vec<String>>,
    pub christoffel: ChristoffelField,
    #[serde(rename = "box")]
    pub working_box: Vec<[f64; 2]>,
    #[serde(default = "CostField::time")]
    pub cost: CostField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChristoffelField {
    Named(String),
    Table(Map<String, Value>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum CostField {
    #[serde(rename = "time")]
    Time,
    #[serde(rename = "expr")]
    Expr {
        #[serde(rename = "G")]
        g: String,
    },
}

impl CostField {
    fn time() -> Self {
        CostField::Time
    }
}

/// A loaded spec: the checked system, its cost and the source document.
#[derive(Debug, Clone)]
pub struct LoadedSpec {
    pub system: SystemSpec,
    pub cost: CostSpec,
    pub file: SpecFile,
    /// Christoffel source as written in the file.
    pub file_source: ChristoffelSource,
}

impl LoadedSpec {
    /// Same spec with the Christoffel source switched.
    pub fn with_source(&self, source: ChristoffelSource) -> Result<LoadedSpec> {
        let system = self.system.with_source(source)?;
        Ok(LoadedSpec {
            system,
            ..self.clone()
        })
    }

    /// The file's table if it has one; otherwise an error naming the field.
    pub fn table_source(&self) -> Result<ChristoffelSource> {
        match &self.file_source {
            ChristoffelSource::Table(_) => Ok(self.file_source.clone()),
            ChristoffelSource::LeviCivita => Err(Error::InvalidSpec(
                "christoffel: spec has no table to select".into(),
            )),
        }
    }
}

fn value_as_text(field: &str, v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        _ => Err(Error::InvalidSpec(format!(
            "{field}: expected an expression string"
        ))),
    }
}

fn parse_table(
    table: &Map<String, Value>,
    n: usize,
    symbols: &Symbols,
    defs: &Defs,
) -> Result<ChristoffelTable> {
    let mut out = ChristoffelTable::new();
    for (key, value) in table {
        let field = format!("christoffel[\"{key}\"]");
        let idx: Vec<usize> = key
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidSpec(format!("{field}: key must be \"k,i,j\"")))?;
        if idx.len() != 3 || idx.iter().any(|&i| i == 0 || i > n) {
            return Err(Error::InvalidSpec(format!(
                "{field}: key must be three indices in 1..={n}"
            )));
        }
        let text = value_as_text(&field, value)?;
        let e = parse_with_defs(&text, symbols, defs).map_err(|e| Error::parse(field, e))?;
        out.insert(idx[0] - 1, idx[1] - 1, idx[2] - 1, e);
    }
    Ok(out)
}

impl SpecFile {
    pub fn from_json(text: &str) -> Result<SpecFile> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    /// Parses every expression and builds the checked system.
    pub fn load(&self) -> Result<LoadedSpec> {
        let n = self.n;
        if self.coords.len() != n {
            return Err(Error::DimensionMismatch {
                what: "coords",
                expected: n,
                got: self.coords.len(),
            });
        }
        let symbols = Symbols::new(self.coords.iter().cloned().chain(["t".to_string()]));
        let mut defs = Defs::new();
        for (name, value) in &self.defs {
            let field = format!("defs.{name}");
            if symbols.slot(name).is_some() {
                return Err(Error::InvalidSpec(format!("{field}: shadows a symbol")));
            }
            let text = value_as_text(&field, value)?;
            let e = parse_with_defs(&text, &symbols, &defs).map_err(|e| Error::parse(field, e))?;
            defs.insert(name.clone(), e);
        }
        let p = |field: String, text: &str| -> Result<Expr> {
            parse_with_defs(text, &symbols, &defs).map_err(|e| Error::parse(field, e))
        };
        let metric = self
            .metric
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, s)| p(format!("metric[{i}][{j}]"), s))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let inputs = self
            .inputs
            .iter()
            .enumerate()
            .map(|(s, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, e)| p(format!("inputs[{s}][{j}]"), e))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let force = self
            .force
            .as_ref()
            .map(|f| {
                f.iter()
                    .enumerate()
                    .map(|(k, e)| p(format!("force[{k}]"), e))
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        let source = match &self.christoffel {
            ChristoffelField::Named(s) if s == "levi-civita" => ChristoffelSource::LeviCivita,
            ChristoffelField::Named(s) => {
                return Err(Error::InvalidSpec(format!(
                    "christoffel: unknown source `{s}` (expected \"levi-civita\" or a table)"
                )))
            }
            ChristoffelField::Table(t) => {
                ChristoffelSource::Table(parse_table(t, n, &symbols, &defs)?)
            }
        };
        let system = SystemSpec::new(SystemParts {
            name: self.name.clone().unwrap_or_default(),
            coords: self.coords.clone(),
            inputs,
            metric,
            force,
            christoffel: source.clone(),
            working_box: self.working_box.iter().map(|[a, b]| (*a, *b)).collect(),
        })?;
        let cost = match &self.cost {
            CostField::Time => CostSpec::time_optimal(),
            CostField::Expr { g } => CostSpec::expression(p("cost.G".into(), g)?, &system)?,
        };
        Ok(LoadedSpec {
            system,
            cost,
            file: self.clone(),
            file_source: source,
        })
    }
}

/// Parses and loads a spec document.
pub fn load_spec_str(text: &str) -> Result<LoadedSpec> {
    SpecFile::from_json(text)?.load()
}

/// Reads, parses and loads a spec file.
pub fn load_spec_path(path: &Path) -> Result<LoadedSpec> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_spec_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ParseError;

    const PLANE: &str = r#"{
        "n": 2,
        "coords": ["x", "y"],
        "defs": {"a": "x + 1", "b": "a*a"},
        "metric": [["b", "0"], ["0", "1"]],
        "inputs": [["1/a", "0"]],
        "christoffel": "levi-civita",
        "box": [[0, 1], [-1, 1]],
        "cost": {"kind": "expr", "G": "t*x"}
    }"#;

    #[test]
    fn loads_with_chained_defs() {
        let spec = load_spec_str(PLANE).unwrap();
        assert_eq!(spec.system.n(), 2);
        assert_eq!(spec.system.m(), 1);
        let g = spec.system.metric().eval(&[1.0, 0.0]).unwrap();
        assert_eq!(g[(0, 0)], 4.0);
        spec.system.validate(10).unwrap();
    }

    #[test]
    fn errors_name_the_field() {
        let bad = PLANE.replace("\"1/a\"", "\"1/q\"");
        let err = load_spec_str(&bad).unwrap_err();
        assert!(err.to_string().starts_with("inputs[0][0]"), "{err}");
        assert!(matches!(
            err,
            Error::Parse {
                source: ParseError::UnknownSymbol { .. },
                ..
            }
        ));
    }

    #[test]
    fn table_keys_are_checked() {
        let bad = PLANE.replace("\"levi-civita\"", r#"{"1,1,3": "x"}"#);
        let err = load_spec_str(&bad).unwrap_err();
        assert!(err.to_string().contains("christoffel[\"1,1,3\"]"), "{err}");
        let ok = PLANE.replace("\"levi-civita\"", r#"{"1,1,2": "x"}"#);
        let spec = load_spec_str(&ok).unwrap();
        let gamma = spec.system.connection().gamma(&[0.5, 0.0]).unwrap();
        assert_eq!(gamma.get(0, 0, 1), 0.5);
        assert_eq!(gamma.get(0, 1, 0), 0.0);
    }

    #[test]
    fn unknown_fields_rejected() {
        let bad = PLANE.replace("\"n\": 2", "\"n\": 2, \"extra\": 1");
        assert!(matches!(load_spec_str(&bad), Err(Error::Json(_))));
    }

    #[test]
    fn round_trip_through_json() {
        let spec = load_spec_str(PLANE).unwrap();
        let again = SpecFile::from_json(&spec.file.to_json()).unwrap();
        assert_eq!(again, spec.file);
    }
}
