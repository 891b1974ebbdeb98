use std::str::FromStr;

use serde::Serialize;

use super::{MomentEquations, MomentIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Csv,
    Text,
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "text" | "txt" => Ok(Self::Text),
            other => Err(format!("unknown export format `{other}`")),
        }
    }
}

#[derive(Serialize)]
struct JsonEquations {
    labels_lower: Vec<String>,
    labels_higher: Vec<String>,
    psi: usize,
    psi_prime: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "A_prime")]
    a_prime: Vec<Vec<f64>>,
    mu_c: Vec<f64>,
}

fn braced(idx: &MomentIndex, species: &[String]) -> String {
    format!("{{{}}}", idx.label(species))
}

fn angled(idx: &MomentIndex, species: &[String]) -> String {
    format!("<{}>", idx.label(species))
}

/// Formats a coefficient without a trailing `.0` for integral values.
pub(crate) fn format_number(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

fn text_row(eqs: &MomentEquations, i: usize, species: &[String]) -> String {
    let basis = &eqs.basis;
    let mut terms: Vec<(f64, Option<String>)> = Vec::new();
    if eqs.mu_c[i] != 0.0 {
        terms.push((eqs.mu_c[i], None));
    }
    for (j, idx) in basis.lower.iter().enumerate() {
        terms.push((eqs.a[(i, j)], Some(angled(idx, species))));
    }
    for (j, idx) in basis.higher.iter().enumerate() {
        terms.push((eqs.a_prime[(i, j)], Some(angled(idx, species))));
    }
    let mut rhs = String::new();
    for (c, label) in terms.into_iter().filter(|(c, _)| *c != 0.0) {
        let magnitude = c.abs();
        if rhs.is_empty() {
            if c < 0.0 {
                rhs.push('-');
            }
        } else {
            rhs.push_str(if c < 0.0 { " - " } else { " + " });
        }
        match label {
            None => rhs.push_str(&format_number(magnitude)),
            Some(l) if magnitude == 1.0 => rhs.push_str(&l),
            Some(l) => rhs.push_str(&format!("{}*{l}", format_number(magnitude))),
        }
    }
    if rhs.is_empty() {
        rhs.push('0');
    }
    format!("d{}/dt = {rhs}", angled(&basis.lower[i], species))
}

/// Serializes moment equations with moment labels such as `{X^2 Y}`.
pub fn export_equations(eqs: &MomentEquations, species: &[String], format: ExportFormat) -> String {
    let basis = &eqs.basis;
    match format {
        ExportFormat::Json => {
            let rows = |m: &nalgebra::DMatrix<f64>| -> Vec<Vec<f64>> {
                (0..m.nrows())
                    .map(|i| m.row(i).iter().copied().collect())
                    .collect()
            };
            let doc = JsonEquations {
                labels_lower: basis.lower.iter().map(|m| braced(m, species)).collect(),
                labels_higher: basis.higher.iter().map(|m| braced(m, species)).collect(),
                psi: basis.psi(),
                psi_prime: basis.psi_prime(),
                a: rows(&eqs.a),
                a_prime: if basis.psi_prime() == 0 {
                    Vec::new()
                } else {
                    rows(&eqs.a_prime)
                },
                mu_c: eqs.mu_c.iter().copied().collect(),
            };
            let mut s = serde_json::to_string_pretty(&doc).expect("equations serialize");
            s.push('\n');
            s
        }
        ExportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["moment".to_string()];
            header.extend(basis.lower.iter().map(|m| braced(m, species)));
            header.extend(basis.higher.iter().map(|m| braced(m, species)));
            header.push("constant".into());
            w.write_record(&header).expect("in-memory write");
            for (i, idx) in basis.lower.iter().enumerate() {
                let mut record = vec![braced(idx, species)];
                record.extend(eqs.a.row(i).iter().map(|&c| format_number(c)));
                record.extend(eqs.a_prime.row(i).iter().map(|&c| format_number(c)));
                record.push(format_number(eqs.mu_c[i]));
                w.write_record(&record).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
        }
        ExportFormat::Text => {
            let mut out = String::new();
            for i in 0..basis.psi() {
                out.push_str(&text_row(eqs, i, species));
                out.push('\n');
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{build_basis, generate_equations};
    use crate::networks;

    #[test]
    fn birth_death_text() {
        let net = networks::birth_death(4.0, 2.0);
        let eqs = generate_equations(&net, &build_basis(1, 1));
        let text = export_equations(&eqs, net.species(), ExportFormat::Text);
        assert_eq!(text, "d<X>/dt = 4 - 2*<X>\n");
        let eqs = generate_equations(&net, &build_basis(1, 2));
        let text = export_equations(&eqs, net.species(), ExportFormat::Text);
        assert_eq!(text, "d<X>/dt = 4 - 2*<X>\nd<X^2>/dt = 8*<X> - 4*<X^2>\n");
    }

    #[test]
    fn empty_a_prime_in_json() {
        let net = networks::birth_death(4.0, 2.0);
        let eqs = generate_equations(&net, &build_basis(1, 1));
        let json: serde_json::Value =
            serde_json::from_str(&export_equations(&eqs, net.species(), ExportFormat::Json))
                .unwrap();
        assert_eq!(json["A_prime"], serde_json::json!([]));
        assert_eq!(json["psi_prime"], 0);
        assert_eq!(json["labels_lower"], serde_json::json!(["{X}"]));
        assert_eq!(json["mu_c"], serde_json::json!([4.0]));
    }

    #[test]
    fn wilhelm_csv_has_order_three_columns() {
        let net = networks::wilhelm();
        let eqs = generate_equations(&net, &build_basis(2, 2));
        let csv = export_equations(&eqs, net.species(), ExportFormat::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 6);
        let header: Vec<&str> = lines[0].split(',').collect();
        assert_eq!(header[0], "moment");
        assert_eq!(&header[1..6], &["{X}", "{Y}", "{X^2}", "{X Y}", "{Y^2}"]);
        assert_eq!(*header.last().unwrap(), "constant");
        let higher = &header[6..header.len() - 1];
        assert!(!higher.is_empty());
        for label in higher {
            let idx = eqs
                .basis
                .higher
                .iter()
                .find(|h| format!("{{{}}}", h.label(net.species())) == *label)
                .unwrap();
            assert_eq!(idx.order(), 3);
        }
        assert!(lines[1].starts_with("{X},"));
    }
}
