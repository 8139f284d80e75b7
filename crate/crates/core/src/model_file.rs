//! The `thermoflat/1` model file and deterministic JSON output.
//!
//! ```json
//! {
//!   "schema": "thermoflat/1",
//!   "label": "curie-weiss",
//!   "alphabet": { "k": 2, "m": [0.5, 0.5] },
//!   "potentials": [ { "name": "spin", "memory": 1, "table": [1.0, -1.0] } ],
//!   "plus": ["spin"],
//!   "g_plus": { "kind": "quadratic", "beta": 2.0, "dim": 1 },
//!   "minus": [],
//!   "config": { "grid": 17 }
//! }
//! ```
//!
//! Words index tables with the first symbol most significant. `m` defaults
//! to uniform, `config` to [`SolverConfig::default`]. An optional `mixture`
//! (list of weighted Markov components) feeds the Δ-functional commands.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::convex::ConvexSpec;
use crate::error::{Error, Result};
use crate::linearizer::{ModelSpec, SolverConfig};
use crate::measures::{AprioriAlphabet, CylinderPotential, MixtureMeasure};

pub const SCHEMA: &str = "thermoflat/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialEntry {
    pub name: String,
    pub memory: usize,
    pub table: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema: String,
    #[serde(default)]
    pub label: String,
    pub alphabet: AprioriAlphabet,
    pub potentials: Vec<PotentialEntry>,
    #[serde(default)]
    pub plus: Vec<String>,
    #[serde(default)]
    pub minus: Vec<String>,
    #[serde(default)]
    pub g_plus: Option<ConvexSpec>,
    #[serde(default)]
    pub g_minus: Option<ConvexSpec>,
    #[serde(default)]
    pub config: Option<SolverConfig>,
    #[serde(default)]
    pub mixture: Option<MixtureMeasure>,
}

impl ModelFile {
    /// Parses and validates a model file. Syntax errors carry line and
    /// column.
    pub fn parse(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text)
            .map_err(|e| Error::InvalidModel(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        if file.schema != SCHEMA {
            return Err(Error::InvalidModel(format!("unsupported schema {:?}, expected {SCHEMA:?}", file.schema)));
        }
        file.model()?;
        if let Some(config) = &file.config {
            config.validate()?;
        }
        Ok(file)
    }

    fn potential(&self, name: &str) -> Result<CylinderPotential> {
        let entry = self
            .potentials
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::InvalidModel(format!("unknown potential {name:?}")))?;
        Ok(CylinderPotential::new(self.alphabet.k(), entry.memory, entry.table.clone())?.with_name(name))
    }

    /// Every declared potential, in file order.
    pub fn all_potentials(&self) -> Result<Vec<CylinderPotential>> {
        self.potentials.iter().map(|p| self.potential(&p.name)).collect()
    }

    pub fn model(&self) -> Result<ModelSpec> {
        for (i, p) in self.potentials.iter().enumerate() {
            if self.potentials[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::InvalidModel(format!("duplicate potential {:?}", p.name)));
            }
        }
        let plus = self.plus.iter().map(|n| self.potential(n)).collect::<Result<Vec<_>>>()?;
        let minus = self.minus.iter().map(|n| self.potential(n)).collect::<Result<Vec<_>>>()?;
        ModelSpec::new(
            self.label.clone(),
            self.alphabet.clone(),
            plus,
            self.g_plus.clone(),
            minus,
            self.g_minus.clone(),
        )
    }

    pub fn config(&self) -> SolverConfig {
        self.config.clone().unwrap_or_default()
    }
}

/// Pretty printer writing every float with 17 significant digits.
struct Sig17(PrettyFormatter<'static>);

impl Formatter for Sig17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value` as pretty JSON with 17-significant-digit floats.
/// Non-finite floats become `null`.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17(PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(|e| Error::InvalidModel(e.to_string()))?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CW: &str = r#"{
        "schema": "thermoflat/1",
        "label": "cw",
        "alphabet": { "k": 2 },
        "potentials": [ { "name": "spin", "memory": 1, "table": [1.0, -1.0] } ],
        "plus": ["spin"],
        "g_plus": { "kind": "quadratic", "beta": 2.0, "dim": 1 }
    }"#;

    #[test]
    fn parses_minimal_file() {
        let file = ModelFile::parse(CW).unwrap();
        let model = file.model().unwrap();
        assert_eq!(model.n_plus(), 1);
        assert!(model.g_minus.is_none());
        assert_eq!(file.config(), SolverConfig::default());
    }

    #[test]
    fn errors_carry_position() {
        let err = ModelFile::parse("{\n  \"schema\": ,\n}").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        let wrong = CW.replace("thermoflat/1", "thermoflat/0");
        assert!(ModelFile::parse(&wrong).is_err());
        let unknown = CW.replace("[\"spin\"]", "[\"field\"]");
        assert!(ModelFile::parse(&unknown).unwrap_err().to_string().contains("field"));
    }

    #[test]
    fn floats_round_trip() {
        let xs = vec![0.1, 1.0 / 3.0, -2.5e-300, 1e300, 0.0, f64::MIN_POSITIVE, std::f64::consts::PI];
        let text = to_json(&xs).unwrap();
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, xs);
        assert!(text.contains("3.3333333333333331e-1"));
        assert_eq!(to_json(&vec![f64::NAN]).unwrap().trim().replace(char::is_whitespace, ""), "[null]");
    }

    #[test]
    fn file_round_trip() {
        let file = ModelFile::parse(CW).unwrap();
        let again = ModelFile::parse(&to_json(&file).unwrap()).unwrap();
        assert_eq!(again, file);
    }
}
