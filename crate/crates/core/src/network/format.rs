//! JSON and TSV network files.
//!
//! JSON (canonical):
//!
//! ```text
//! {"species": ["X", "Y"],
//!  "reactions": [{"reactants": {"Y": 1}, "products": {"X": 2}, "rate": 35.0}]}
//! ```
//!
//! A matrix form with `reactant_stoich`, `product_stoich` and
//! `rate_constants` is accepted as well; `species` is optional there and
//! defaults to `A`, `B`, ...
//!
//! TSV:
//!
//! ```text
//! species
//! X
//! Y
//!
//! reactions
//! Y -> 2*X<TAB>35
//! ```

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};

use super::{default_species_names, NetworkError, ReactionNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkFormat {
    Json,
    Tsv,
}

impl FromStr for NetworkFormat {
    type Err = NetworkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "tsv" => Ok(Self::Tsv),
            other => Err(NetworkError::MalformedInput(format!(
                "unknown network format `{other}`"
            ))),
        }
    }
}

pub fn parse_network(text: &str, format: NetworkFormat) -> Result<ReactionNetwork, NetworkError> {
    match format {
        NetworkFormat::Json => parse_json(text),
        NetworkFormat::Tsv => parse_tsv(text),
    }
}

pub fn save_network(net: &ReactionNetwork, format: NetworkFormat) -> String {
    match format {
        NetworkFormat::Json => save_json(net),
        NetworkFormat::Tsv => save_tsv(net),
    }
}

#[derive(Serialize)]
struct JsonReactionOut {
    reactants: Map<String, Value>,
    products: Map<String, Value>,
    rate: f64,
}

#[derive(Serialize)]
struct JsonNetworkOut<'a> {
    species: &'a [String],
    reactions: Vec<JsonReactionOut>,
}

fn save_json(net: &ReactionNetwork) -> String {
    let side = |row: &[u32]| -> Map<String, Value> {
        row.iter()
            .zip(net.species())
            .filter(|(&c, _)| c > 0)
            .map(|(&c, name)| (name.clone(), Value::from(c)))
            .collect()
    };
    let out = JsonNetworkOut {
        species: net.species(),
        reactions: net
            .reactions()
            .map(|r| JsonReactionOut {
                reactants: side(r.reactants),
                products: side(r.products),
                rate: r.rate,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&out).expect("network serializes");
    text.push('\n');
    text
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonReactionIn {
    #[serde(default)]
    reactants: BTreeMap<String, Number>,
    #[serde(default)]
    products: BTreeMap<String, Number>,
    rate: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonNetworkIn {
    Reactions {
        species: Vec<String>,
        reactions: Vec<JsonReactionIn>,
    },
    Matrices {
        #[serde(default)]
        species: Option<Vec<String>>,
        reactant_stoich: Vec<Vec<Number>>,
        product_stoich: Vec<Vec<Number>>,
        rate_constants: Vec<f64>,
    },
}

fn coefficient(value: &Number, reaction: usize) -> Result<u32, NetworkError> {
    value
        .as_u64()
        .and_then(|v| u32::try_from(v).ok())
        .or_else(|| {
            // Accept `2.0` but not `2.5` or `-1`.
            value
                .as_f64()
                .filter(|f| f.fract() == 0.0 && *f >= 0.0 && *f <= f64::from(u32::MAX))
                .map(|f| f as u32)
        })
        .ok_or_else(|| NetworkError::NonIntegerStoichiometry {
            reaction,
            value: value.to_string(),
        })
}

fn parse_json(text: &str) -> Result<ReactionNetwork, NetworkError> {
    let parsed: JsonNetworkIn =
        serde_json::from_str(text).map_err(|e| NetworkError::MalformedInput(e.to_string()))?;
    match parsed {
        JsonNetworkIn::Reactions { species, reactions } => {
            let n = species.len();
            let index = |name: &str| {
                species
                    .iter()
                    .position(|s| s == name)
                    .ok_or_else(|| NetworkError::UnknownSpecies(name.to_string()))
            };
            let mut reactants = Vec::with_capacity(reactions.len());
            let mut products = Vec::with_capacity(reactions.len());
            let mut rates = Vec::with_capacity(reactions.len());
            for (r, reaction) in reactions.iter().enumerate() {
                let mut re = vec![0; n];
                for (name, c) in &reaction.reactants {
                    re[index(name)?] = coefficient(c, r)?;
                }
                let mut pr = vec![0; n];
                for (name, c) in &reaction.products {
                    pr[index(name)?] = coefficient(c, r)?;
                }
                reactants.push(re);
                products.push(pr);
                rates.push(reaction.rate);
            }
            ReactionNetwork::new(species, reactants, products, rates)
        }
        JsonNetworkIn::Matrices {
            species,
            reactant_stoich,
            product_stoich,
            rate_constants,
        } => {
            let convert = |m: &[Vec<Number>]| -> Result<Vec<Vec<u32>>, NetworkError> {
                m.iter()
                    .enumerate()
                    .map(|(r, row)| row.iter().map(|c| coefficient(c, r)).collect())
                    .collect()
            };
            let reactants = convert(&reactant_stoich)?;
            let products = convert(&product_stoich)?;
            let n = reactants.first().map_or(0, Vec::len);
            let species = species.unwrap_or_else(|| default_species_names(n));
            ReactionNetwork::new(species, reactants, products, rate_constants)
        }
    }
}

fn save_tsv(net: &ReactionNetwork) -> String {
    let side = |row: &[u32]| -> String {
        let terms: Vec<String> = row
            .iter()
            .zip(net.species())
            .filter(|(&c, _)| c > 0)
            .map(|(&c, name)| {
                if c == 1 {
                    name.clone()
                } else {
                    format!("{c}*{name}")
                }
            })
            .collect();
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join(" + ")
        }
    };
    let mut out = String::from("species\n");
    for name in net.species() {
        out.push_str(name);
        out.push('\n');
    }
    out.push_str("\nreactions\n");
    for r in net.reactions() {
        out.push_str(&format!(
            "{} -> {}\t{}\n",
            side(r.reactants),
            side(r.products),
            r.rate
        ));
    }
    out
}

fn parse_side(
    text: &str,
    species: &[String],
    line_no: usize,
    reaction: usize,
) -> Result<Vec<u32>, NetworkError> {
    let mut row = vec![0u32; species.len()];
    let text = text.trim();
    if text == "0" || text == "∅" || text.is_empty() {
        if text.is_empty() {
            return Err(NetworkError::MalformedInput(format!(
                "line {line_no}: empty reaction side (use 0)"
            )));
        }
        return Ok(row);
    }
    for term in text.split('+') {
        let term = term.trim();
        let (coef, name) = match term.split_once('*') {
            Some((c, name)) => {
                let c = c.trim();
                let coef: u32 = c.parse().map_err(|_| {
                    if c.parse::<f64>().is_ok() {
                        NetworkError::NonIntegerStoichiometry {
                            reaction,
                            value: c.to_string(),
                        }
                    } else {
                        NetworkError::MalformedInput(format!(
                            "line {line_no}: bad coefficient `{c}`"
                        ))
                    }
                })?;
                (coef, name.trim())
            }
            None => (1, term),
        };
        if name.is_empty() {
            return Err(NetworkError::MalformedInput(format!(
                "line {line_no}: empty term"
            )));
        }
        let j = species
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| NetworkError::UnknownSpecies(name.to_string()))?;
        row[j] += coef;
    }
    Ok(row)
}

fn parse_tsv(text: &str) -> Result<ReactionNetwork, NetworkError> {
    enum Block {
        None,
        Species,
        Reactions,
    }
    let mut block = Block::None;
    let mut species = Vec::new();
    let mut reactants = Vec::new();
    let mut products = Vec::new();
    let mut rates = Vec::new();
    let mut seen_species = false;
    let mut seen_reactions = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            block = Block::None;
            continue;
        }
        if matches!(block, Block::None) {
            match line.trim() {
                "species" if !seen_species => {
                    block = Block::Species;
                    seen_species = true;
                }
                "reactions" if !seen_reactions => {
                    if !seen_species {
                        return Err(NetworkError::MalformedInput(format!(
                            "line {line_no}: `reactions` block before `species`"
                        )));
                    }
                    block = Block::Reactions;
                    seen_reactions = true;
                }
                other => {
                    return Err(NetworkError::MalformedInput(format!(
                        "line {line_no}: expected block header, found `{other}`"
                    )))
                }
            }
            continue;
        }
        match block {
            Block::Species => species.push(line.trim().to_string()),
            Block::Reactions => {
                let (equation, rate) = line.split_once('\t').ok_or_else(|| {
                    NetworkError::MalformedInput(format!("line {line_no}: missing tab before rate"))
                })?;
                let rate: f64 = rate.trim().parse().map_err(|_| {
                    NetworkError::MalformedInput(format!("line {line_no}: bad rate `{rate}`"))
                })?;
                let (lhs, rhs) = equation.split_once("->").ok_or_else(|| {
                    NetworkError::MalformedInput(format!("line {line_no}: missing `->`"))
                })?;
                let r = rates.len();
                reactants.push(parse_side(lhs, &species, line_no, r)?);
                products.push(parse_side(rhs, &species, line_no, r)?);
                rates.push(rate);
            }
            Block::None => unreachable!(),
        }
    }
    if !seen_species || !seen_reactions {
        return Err(NetworkError::MalformedInput(
            "TSV network needs `species` and `reactions` blocks".into(),
        ));
    }
    ReactionNetwork::new(species, reactants, products, rates)
}
