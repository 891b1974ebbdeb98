//! Bundled example networks. JSON copies live in the crate's `networks/`
//! directory.

use crate::network::ReactionNetwork;

fn build(species: &[&str], reactions: &[(&[u32], &[u32], f64)]) -> ReactionNetwork {
    ReactionNetwork::new(
        species.iter().map(|s| s.to_string()).collect(),
        reactions.iter().map(|r| r.0.to_vec()).collect(),
        reactions.iter().map(|r| r.1.to_vec()).collect(),
        reactions.iter().map(|r| r.2).collect(),
    )
    .expect("bundled network is well formed")
}

/// `0 -> X (kb)`, `X -> 0 (kd)`.
pub fn birth_death(kb: f64, kd: f64) -> ReactionNetwork {
    build(&["X"], &[(&[0], &[1], kb), (&[1], &[0], kd)])
}

/// Wilhelm's bistable two-species network.
pub fn wilhelm() -> ReactionNetwork {
    build(
        &["X", "Y"],
        &[
            (&[0, 1], &[2, 0], 35.0),
            (&[2, 0], &[1, 1], 1.0),
            (&[1, 1], &[0, 1], 1.0),
            (&[1, 0], &[0, 0], 9.74),
            (&[0, 0], &[1, 0], 30.0),
        ],
    )
}

/// Schlögl's model with bistable constants: `2X -> 3X`, `3X -> 2X`,
/// `0 -> X`, `X -> 0`.
pub fn schlogl() -> ReactionNetwork {
    build(
        &["X"],
        &[
            (&[2], &[3], 0.14),
            (&[3], &[2], 0.0025),
            (&[0], &[1], 11.2),
            (&[1], &[0], 2.07),
        ],
    )
}

/// Closed Michaelis-Menten system over `S, E, S:E, P`.
pub fn michaelis_menten_closed(k1: f64, k2: f64, k3: f64) -> ReactionNetwork {
    build(
        &["S", "E", "S:E", "P"],
        &[
            (&[1, 1, 0, 0], &[0, 0, 1, 0], k1),
            (&[0, 0, 1, 0], &[1, 1, 0, 0], k2),
            (&[0, 0, 1, 0], &[0, 1, 0, 1], k3),
        ],
    )
}

/// Open Michaelis-Menten system over `S, E` after eliminating `S:E` and `P`
/// with total enzyme `e_t`.
pub fn michaelis_menten_open(k1: f64, k2: f64, k3: f64, e_t: f64) -> ReactionNetwork {
    build(
        &["S", "E"],
        &[
            (&[1, 1], &[0, 0], k1),
            (&[0, 0], &[1, 1], e_t * k2),
            (&[0, 1], &[1, 2], -k2),
            (&[0, 0], &[0, 1], e_t * k3),
            (&[0, 1], &[0, 2], -k3),
        ],
    )
}

/// Reversible dimerization with monomer turnover: `0 -> A`, `A -> 0`,
/// `2A -> B`, `B -> 2A`, `B -> 0`.
pub fn dimerization() -> ReactionNetwork {
    build(
        &["A", "B"],
        &[
            (&[0, 0], &[1, 0], 10.0),
            (&[1, 0], &[0, 0], 0.5),
            (&[2, 0], &[0, 1], 0.05),
            (&[0, 1], &[2, 0], 1.0),
            (&[0, 1], &[0, 0], 0.5),
        ],
    )
}

/// Two-stage gene expression: `0 -> M`, `M -> M + P`, `M -> 0`, `P -> 0`.
pub fn gene_expression() -> ReactionNetwork {
    build(
        &["M", "P"],
        &[
            (&[0, 0], &[1, 0], 4.0),
            (&[1, 0], &[1, 1], 2.0),
            (&[1, 0], &[0, 0], 1.0),
            (&[0, 1], &[0, 0], 1.0),
        ],
    )
}

/// Mutual annihilation of two independently produced species.
pub fn annihilation() -> ReactionNetwork {
    build(
        &["A", "B"],
        &[
            (&[0, 0], &[1, 0], 5.0),
            (&[0, 0], &[0, 1], 4.0),
            (&[1, 1], &[0, 0], 0.2),
            (&[1, 0], &[0, 0], 0.5),
            (&[0, 1], &[0, 0], 0.5),
        ],
    )
}

/// `0 -> X`, `2X -> 0`.
pub fn pair_annihilation() -> ReactionNetwork {
    build(&["X"], &[(&[0], &[1], 10.0), (&[2], &[0], 0.1)])
}

/// A bundled network with the state space and maximum closure order it is
/// solved with.
#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub network: ReactionNetwork,
    pub bounds: Vec<(u32, u32)>,
    pub max_order: u32,
}

pub fn corpus() -> Vec<CorpusEntry> {
    let entry = |name, network, bounds: &[(u32, u32)], max_order| CorpusEntry {
        name,
        network,
        bounds: bounds.to_vec(),
        max_order,
    };
    vec![
        entry("birth_death", birth_death(4.0, 2.0), &[(0, 30)], 6),
        entry("wilhelm", wilhelm(), &[(0, 50), (0, 40)], 8),
        entry("schlogl", schlogl(), &[(0, 90)], 8),
        entry("dimerization", dimerization(), &[(0, 40), (0, 40)], 6),
        entry("gene_expression", gene_expression(), &[(0, 20), (0, 50)], 6),
        entry("annihilation", annihilation(), &[(0, 40), (0, 40)], 6),
        entry("pair_annihilation", pair_annihilation(), &[(0, 40)], 6),
    ]
}

/// JSON text of a bundled network file by corpus name.
pub fn bundled_json(name: &str) -> Option<&'static str> {
    Some(match name {
        "birth_death" => include_str!("../networks/birth_death.json"),
        "wilhelm" => include_str!("../networks/wilhelm.json"),
        "schlogl" => include_str!("../networks/schlogl.json"),
        "michaelis_menten_closed" => include_str!("../networks/michaelis_menten_closed.json"),
        "michaelis_menten_open" => include_str!("../networks/michaelis_menten_open.json"),
        "dimerization" => include_str!("../networks/dimerization.json"),
        "gene_expression" => include_str!("../networks/gene_expression.json"),
        "annihilation" => include_str!("../networks/annihilation.json"),
        "pair_annihilation" => include_str!("../networks/pair_annihilation.json"),
        _ => return None,
    })
}
