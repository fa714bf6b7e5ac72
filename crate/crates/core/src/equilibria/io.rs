use serde::{Deserialize, Serialize};

use super::EquilibriumSet;
use crate::model::Side;
use crate::timemap::EquilibriumProfile;
use crate::{Error, Result};

/// Serialized form of one equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumRecord {
    #[serde(default)]
    pub id: String,
    pub k: usize,
    /// `+1` or `-1`; `+1` for the zero equilibrium.
    pub sign: i8,
    #[serde(default)]
    pub branch: usize,
    pub d: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    pub lambda_tilde: f64,
    pub v0: f64,
    pub samples: Vec<[f64; 2]>,
}

impl From<&EquilibriumProfile> for EquilibriumRecord {
    fn from(p: &EquilibriumProfile) -> Self {
        Self {
            id: p.id(),
            k: p.k,
            sign: if p.sign == Side::Plus { 1 } else { -1 },
            branch: p.branch,
            d: p.d,
            energy: p.energy,
            lambda_tilde: p.lambda_tilde,
            v0: p.v0,
            samples: p.samples.clone(),
        }
    }
}

impl TryFrom<EquilibriumRecord> for EquilibriumProfile {
    type Error = Error;

    fn try_from(r: EquilibriumRecord) -> Result<Self> {
        let sign = match r.sign {
            1 => Side::Plus,
            -1 => Side::Minus,
            s => return Err(Error::InvalidInput(format!("equilibrium sign must be 1 or -1, got {s}"))),
        };
        if r.samples.len() < 2 {
            return Err(Error::InvalidInput("equilibrium needs at least two samples".into()));
        }
        if r.samples.windows(2).any(|w| !(w[1][0] > w[0][0])) || r.samples.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("equilibrium samples must be finite with increasing x".into()));
        }
        let sup_u = r.samples.iter().map(|s| s[1].abs()).fold(0.0, f64::max);
        Ok(EquilibriumProfile {
            k: r.k,
            sign,
            branch: r.branch,
            lambda_tilde: r.lambda_tilde,
            energy: r.energy,
            d: r.d,
            v0: r.v0,
            sup_u,
            samples: r.samples,
            shape: None,
        })
    }
}

impl EquilibriumSet {
    pub fn records(&self) -> Vec<EquilibriumRecord> {
        self.entries.iter().map(EquilibriumRecord::from).collect()
    }

    /// JSON array of records, in set order.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.records()).expect("records serialize")
    }
}

/// Parses a JSON array of records, or a single record.
pub fn parse_equilibria_json(text: &str) -> Result<Vec<EquilibriumProfile>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        Many(Vec<EquilibriumRecord>),
        One(EquilibriumRecord),
    }
    let parsed: OneOrMany =
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("equilibrium JSON: {e}")))?;
    let records = match parsed {
        OneOrMany::Many(v) => v,
        OneOrMany::One(r) => vec![r],
    };
    records.into_iter().map(EquilibriumProfile::try_from).collect()
}
