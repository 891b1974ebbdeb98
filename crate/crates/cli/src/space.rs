//! `--space` and `--initial` grammars.

use zics_core::StateSpace;

use crate::CliError;

/// Splits `NAME=value,...` or positional `value,...` into one string per
/// species, in species order.
fn assign<'a>(spec: &'a str, species: &[String], what: &str) -> Result<Vec<&'a str>, CliError> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != species.len() {
        return Err(CliError::Usage(format!(
            "{what} `{spec}` has {} entries for {} species",
            parts.len(),
            species.len()
        )));
    }
    let named = parts.iter().filter(|p| p.contains('=')).count();
    if named == 0 {
        return Ok(parts);
    }
    if named != parts.len() {
        return Err(CliError::Usage(format!(
            "{what} `{spec}` mixes named and positional entries"
        )));
    }
    let mut out: Vec<Option<&str>> = vec![None; species.len()];
    for p in parts {
        let (name, value) = p.split_once('=').expect("checked above");
        let j = species
            .iter()
            .position(|s| s == name.trim())
            .ok_or_else(|| CliError::Usage(format!("{what}: unknown species `{name}`")))?;
        if out[j].replace(value.trim()).is_some() {
            return Err(CliError::Usage(format!(
                "{what}: species `{name}` given twice"
            )));
        }
    }
    Ok(out
        .into_iter()
        .map(|v| v.expect("all species assigned"))
        .collect())
}

fn parse_count(text: &str, what: &str) -> Result<u32, CliError> {
    text.parse()
        .map_err(|_| CliError::Usage(format!("{what}: `{text}` is not a nonnegative integer")))
}

/// Parses `X=0:50,Y=0:40` or `0:50,0:40`.
pub fn parse_space(spec: &str, species: &[String]) -> Result<StateSpace, CliError> {
    let mut bounds = Vec::with_capacity(species.len());
    for range in assign(spec, species, "--space")? {
        let (lo, hi) = range
            .split_once(':')
            .ok_or_else(|| CliError::Usage(format!("--space: `{range}` is not min:max")))?;
        bounds.push((parse_count(lo, "--space")?, parse_count(hi, "--space")?));
    }
    StateSpace::new(bounds).map_err(|e| CliError::Usage(format!("--space: {e}")))
}

/// Parses `X=3,Y=0` or `3,0`.
pub fn parse_state(spec: &str, species: &[String]) -> Result<Vec<u32>, CliError> {
    assign(spec, species, "--initial")?
        .into_iter()
        .map(|v| parse_count(v, "--initial"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> Vec<String> {
        vec!["X".into(), "Y".into()]
    }

    #[test]
    fn named_and_positional() {
        let a = parse_space("X=0:50,Y=0:40", &xy()).unwrap();
        let b = parse_space("Y=0:40, X=0:50", &xy()).unwrap();
        let c = parse_space("0:50,0:40", &xy()).unwrap();
        assert_eq!(a.bounds(), &[(0, 50), (0, 40)]);
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn rejects_bad_specs() {
        for bad in [
            "X=0:50",
            "X=0:50,0:40",
            "X=0:50,Z=0:4",
            "X=0-50,Y=0:4",
            "X=5:1,Y=0:4",
            "X=0:5,X=0:5",
        ] {
            assert!(parse_space(bad, &xy()).is_err(), "{bad}");
        }
    }

    #[test]
    fn states() {
        assert_eq!(parse_state("Y=2,X=7", &xy()).unwrap(), vec![7, 2]);
        assert_eq!(parse_state("1,2", &xy()).unwrap(), vec![1, 2]);
        assert!(parse_state("1,-2", &xy()).is_err());
    }
}
