//! Canonical JSON representation of a form.
//!
//! ```json
//! {"d": 2, "n": 2, "constant": 0.0,
//!  "terms": [{"blocks": [1, 2], "indices": [1, 1], "coeff": 1.0}]}
//! ```
//!
//! Blocks and indices are 1-based; terms are sorted by `(blocks, indices)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{BlockMultilinearForm, Monomial};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FormJson {
    pub d: usize,
    pub n: usize,
    pub constant: f64,
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermJson {
    pub blocks: Vec<usize>,
    pub indices: Vec<usize>,
    pub coeff: f64,
}

impl From<&BlockMultilinearForm> for FormJson {
    fn from(f: &BlockMultilinearForm) -> Self {
        FormJson {
            d: f.d(),
            n: f.n(),
            constant: f.constant(),
            terms: f
                .terms()
                .map(|(m, c)| TermJson {
                    blocks: m.blocks().iter().map(|b| b + 1).collect(),
                    indices: m.indices().iter().map(|i| i + 1).collect(),
                    coeff: c,
                })
                .collect(),
        }
    }
}

impl TryFrom<FormJson> for BlockMultilinearForm {
    type Error = Error;

    fn try_from(json: FormJson) -> Result<Self> {
        let mut f = BlockMultilinearForm::constant_form(json.d, json.n, json.constant)?;
        for t in json.terms {
            let one_based = |v: &[usize], what: &str| -> Result<Vec<usize>> {
                v.iter()
                    .map(|&k| {
                        k.checked_sub(1)
                            .ok_or_else(|| Error::InvalidMonomial(format!("{what} are 1-based, got 0")))
                    })
                    .collect()
            };
            let mono = Monomial::new(one_based(&t.blocks, "blocks")?, one_based(&t.indices, "indices")?)?;
            if f.coefficient(&mono) != 0.0 {
                return Err(Error::InvalidMonomial(format!("duplicate term {mono}")));
            }
            f.add_term(mono, t.coeff)?;
        }
        Ok(f)
    }
}

impl Serialize for BlockMultilinearForm {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        FormJson::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BlockMultilinearForm {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let json = FormJson::deserialize(deserializer)?;
        BlockMultilinearForm::try_from(json).map_err(serde::de::Error::custom)
    }
}

impl BlockMultilinearForm {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("forms always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
