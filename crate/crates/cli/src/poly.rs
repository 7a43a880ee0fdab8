//! Polynomial specs for `trace`: a JSON file or an inline list of terms.
//!
//! Inline: whitespace-separated `coeff:word` items with 1-based variables,
//! e.g. `"2:1,2 -1:2,1"` is `2·u1u2 − u2u1`. JSON:
//! `{"terms": [{"word": [1, 2], "coeff": 2}]}`.

use std::path::Path;

use anyhow::{bail, Context, Result};
use cbinfluence::ncpoly::NCPolynomial;
use serde::{Deserialize, Serialize};

#[derive(Serialize, Deserialize)]
pub struct PolyJson {
    pub terms: Vec<PolyTerm>,
}

#[derive(Serialize, Deserialize)]
pub struct PolyTerm {
    pub word: Vec<usize>,
    pub coeff: f64,
}

impl From<&NCPolynomial> for PolyJson {
    fn from(p: &NCPolynomial) -> Self {
        PolyJson {
            terms: p
                .terms()
                .map(|(w, c)| PolyTerm {
                    word: w.iter().map(|k| k + 1).collect(),
                    coeff: c,
                })
                .collect(),
        }
    }
}

fn zero_based(word: &[usize]) -> Result<Vec<usize>> {
    word.iter()
        .map(|&k| k.checked_sub(1).context("variables are 1-based"))
        .collect()
}

fn from_json(json: PolyJson) -> Result<NCPolynomial> {
    let mut p = NCPolynomial::new();
    for t in json.terms {
        let word = zero_based(&t.word)?;
        if p.coefficient(&word) != 0.0 {
            bail!("duplicate word {:?}", t.word);
        }
        p.add_term(word, t.coeff);
    }
    Ok(p)
}

fn parse_inline(spec: &str) -> Result<NCPolynomial> {
    let mut p = NCPolynomial::new();
    for item in spec.split_whitespace() {
        let (coeff, word) = item
            .split_once(':')
            .with_context(|| format!("expected coeff:word, got {item:?}"))?;
        let coeff: f64 = coeff.parse().with_context(|| format!("bad coefficient in {item:?}"))?;
        let word: Vec<usize> = if word.is_empty() {
            Vec::new()
        } else {
            word.split(',')
                .map(|k| k.parse().with_context(|| format!("bad variable in {item:?}")))
                .collect::<Result<_>>()?
        };
        p.add_term(zero_based(&word)?, coeff);
    }
    if p.is_zero() {
        bail!("empty polynomial");
    }
    Ok(p)
}

pub fn load(spec: &str) -> Result<NCPolynomial> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let json: PolyJson = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        return from_json(json);
    }
    parse_inline(spec)
}
