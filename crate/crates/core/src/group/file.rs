//! Descriptor files: JSON with `name`, `layers` and 1-based `brackets`.
//!
//! ```json
//! {"name": "h1", "layers": [2, 1], "brackets": [{"i": 1, "j": 2, "k": 3, "c": 1.0}]}
//! ```

use serde::{Deserialize, Serialize};

use super::{BracketEntry, GroupDescriptor, GroupError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BracketRecord {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    #[serde(default = "one")]
    pub c: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescriptorFile {
    pub name: String,
    pub layers: Vec<usize>,
    #[serde(default)]
    pub brackets: Vec<BracketRecord>,
}

impl DescriptorFile {
    pub fn parse(text: &str) -> Result<Self, GroupError> {
        serde_json::from_str(text).map_err(|e| GroupError::Parse(e.to_string()))
    }

    pub fn from_descriptor(g: &GroupDescriptor) -> Self {
        Self {
            name: g.name().to_string(),
            layers: g.layer_dims().to_vec(),
            brackets: g
                .declared_brackets()
                .iter()
                .map(|b| BracketRecord {
                    i: b.i + 1,
                    j: b.j + 1,
                    k: b.k + 1,
                    c: b.c,
                })
                .collect(),
        }
    }

    /// Builds the descriptor without validating it.
    pub fn build_unchecked(&self) -> Result<GroupDescriptor, GroupError> {
        let dim: usize = self.layers.iter().sum();
        let mut entries = Vec::with_capacity(self.brackets.len());
        for b in &self.brackets {
            if b.i == 0 || b.j == 0 || b.k == 0 {
                return Err(GroupError::BracketIndex {
                    i: b.i,
                    j: b.j,
                    k: b.k,
                    dim,
                });
            }
            entries.push(BracketEntry {
                i: b.i - 1,
                j: b.j - 1,
                k: b.k - 1,
                c: b.c,
            });
        }
        GroupDescriptor::new(self.name.clone(), self.layers.clone(), entries)
    }

    /// Builds and validates; `force` skips validation.
    pub fn build(&self, force: bool) -> Result<GroupDescriptor, GroupError> {
        let g = self.build_unchecked()?;
        if !force {
            let report = g.validate();
            if !report.passed() {
                return Err(GroupError::Invalid {
                    name: g.name().to_string(),
                    summary: report.summary(),
                });
            }
        }
        Ok(g)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("descriptor serializes")
    }
}
