use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;
use zics_core::moments::{export_equations, ExportFormat};
use zics_core::network::{
    conservation_laws, parse_network, save_network, to_open_form, validate_over, NetworkFormat,
};
use zics_core::oracle::{cme_stationary_with_cap, ssa_sample, OracleError, SsaConfig};
use zics_core::solver::WarmStart;
use zics_core::{
    build_basis, generate_equations, solve_adaptive, ConservationLaw, DistributionTable,
    NetworkError, ReactionNetwork, SolverConfig, SolverError,
};

use crate::args::{Command, MomentsArgs, OracleArgs, SolveArgs, TransformArgs, ValidateArgs};
use crate::output::{
    self, create_dir, relative_names, write_file, MomentRow, NetworkRef, RunManifest,
};
use crate::plot::marginal_svg;
use crate::space::{parse_space, parse_state};
use crate::CliError;

pub fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate(a) => validate(a),
        Command::Transform(a) => transform(a),
        Command::Moments(a) => moments(a),
        Command::Solve(a) => solve(a),
        Command::Oracle(a) => oracle(a),
    }
}

fn format_for(path: &Path) -> NetworkFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("tsv") => NetworkFormat::Tsv,
        _ => NetworkFormat::Json,
    }
}

struct LoadedNetwork {
    net: ReactionNetwork,
    reference: NetworkRef,
}

fn load_network(path: &Path) -> Result<LoadedNetwork, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Input(format!("{}: not UTF-8", path.display())))?;
    let net = parse_network(&text, format_for(path))
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(LoadedNetwork {
        net,
        reference: NetworkRef {
            path: path.display().to_string(),
            sha256: output::sha256_hex(&bytes),
        },
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn validate(a: ValidateArgs) -> Result<(), CliError> {
    let LoadedNetwork { net, .. } = load_network(&a.network)?;
    let space = parse_space(&a.space, net.species())?;
    println!("species: {}", net.species().join(", "));
    println!("reactions:");
    for r in 0..net.n_reactions() {
        println!("  {}", net.format_reaction(r));
    }
    let laws = conservation_laws(&net);
    if !laws.is_empty() {
        println!("conservation laws:");
        for law in &laws {
            println!("  {}", law.describe(net.species()));
        }
    }
    let report = validate_over(&net, &space).map_err(|e| CliError::Usage(e.to_string()))?;
    println!("grouped propensities over {} states:", space.len());
    for g in &report.groups {
        println!(
            "  change {:?} reactions {:?}: min {} at {:?}",
            g.change, g.reactions, g.min_propensity, g.argmin
        );
    }
    match report.first_violation() {
        None => {
            println!("valid");
            Ok(())
        }
        Some(g) => Err(CliError::Domain(format!(
            "invalid: change {:?} (reactions {:?}) has negative propensity {} at state {:?}",
            g.change, g.reactions, g.min_propensity, g.argmin
        ))),
    }
}

fn strip_total_suffix(name: &str) -> &str {
    ["_T", "_t", "_tot", "_total"]
        .iter()
        .find_map(|s| name.strip_suffix(s))
        .unwrap_or(name)
}

/// Assigns each `NAME=VALUE` total to one of `laws`.
///
/// `NAME` may be the law's expression (`E + S:E`, spaces optional), a
/// species the law contains, or such a species with a `_T` suffix
/// (`E_T`). A name matching nothing takes the next unassigned law.
pub fn pair_totals(
    laws: &[ConservationLaw],
    species: &[String],
    totals: &[String],
) -> Result<Vec<ConservationLaw>, CliError> {
    if totals.len() > laws.len() {
        return Err(CliError::Domain(format!(
            "{} totals given but the network has {} conservation laws",
            totals.len(),
            laws.len()
        )));
    }
    let squash = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
    let mut parsed = Vec::with_capacity(totals.len());
    for t in totals {
        let (name, value) = t
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--totals: `{t}` is not NAME=VALUE")))?;
        let value: f64 = value
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| CliError::Usage(format!("--totals: bad value in `{t}`")))?;
        parsed.push((name.trim().to_string(), value));
    }
    let mut taken = vec![false; laws.len()];
    let mut chosen: Vec<Option<usize>> = vec![None; parsed.len()];
    let unique = |taken: &[bool], pred: &dyn Fn(&ConservationLaw) -> bool| -> Option<usize> {
        let hits: Vec<usize> = (0..laws.len())
            .filter(|&i| !taken[i] && pred(&laws[i]))
            .collect();
        (hits.len() == 1).then(|| hits[0])
    };
    for (k, (name, _)) in parsed.iter().enumerate() {
        let by_expr = unique(&taken, &|l| squash(&l.describe(species)) == squash(name));
        let contains = |n: &str| {
            let j = species.iter().position(|s| s == n);
            move |l: &ConservationLaw| j.is_some_and(|j| l.coefficients[j] != 0)
        };
        let hit = by_expr
            .or_else(|| unique(&taken, &contains(name)))
            .or_else(|| unique(&taken, &contains(strip_total_suffix(name))));
        if let Some(i) = hit {
            taken[i] = true;
            chosen[k] = Some(i);
        }
    }
    let mut out = Vec::with_capacity(parsed.len());
    for (k, (_, value)) in parsed.iter().enumerate() {
        let i = match chosen[k] {
            Some(i) => i,
            None => {
                let i = taken
                    .iter()
                    .position(|t| !t)
                    .expect("more laws than totals");
                taken[i] = true;
                i
            }
        };
        out.push(laws[i].clone().with_total(*value));
    }
    Ok(out)
}

fn transform(a: TransformArgs) -> Result<(), CliError> {
    let LoadedNetwork { net, .. } = load_network(&a.network)?;
    let laws = pair_totals(&conservation_laws(&net), net.species(), &a.totals)?;
    let dependent: Vec<&str> = a.dependent.iter().map(String::as_str).collect();
    let open = to_open_form(&net, &laws, &dependent).map_err(|e| match e {
        NetworkError::UnknownSpecies(_) => CliError::Usage(e.to_string()),
        _ => CliError::Domain(e.to_string()),
    })?;
    let format = a.out.as_deref().map_or(NetworkFormat::Json, format_for);
    emit(a.out.as_deref(), &save_network(&open, format))
}

fn moments(a: MomentsArgs) -> Result<(), CliError> {
    let LoadedNetwork { net, .. } = load_network(&a.network)?;
    let format: ExportFormat = a.format.parse().map_err(CliError::Usage)?;
    let eqs = generate_equations(&net, &build_basis(net.n_species(), a.order));
    emit(
        a.out.as_deref(),
        &export_equations(&eqs, net.species(), format),
    )
}

fn solver_error(e: SolverError) -> CliError {
    match e {
        SolverError::InvalidConfig(_) | SolverError::WarmStart(_) => CliError::Usage(e.to_string()),
        _ => CliError::Domain(e.to_string()),
    }
}

fn oracle_error(e: OracleError) -> CliError {
    match e {
        OracleError::InvalidConfig(_) => CliError::Usage(e.to_string()),
        _ => CliError::Domain(e.to_string()),
    }
}

/// Writes SVG marginals, overlaying rows of `overlay` with matching species.
fn write_plots(
    dir: &Path,
    dist: &DistributionTable,
    species: &[String],
    overlay: Option<&Path>,
) -> Result<Vec<PathBuf>, CliError> {
    let points = match overlay {
        Some(p) => output::read_marginals(p)?,
        None => Vec::new(),
    };
    let mut files = Vec::new();
    for (j, name) in species.iter().enumerate() {
        let lo = dist.space().bounds()[j].0;
        let line: Vec<(u32, f64)> = dist
            .marginal(j)
            .into_iter()
            .enumerate()
            .map(|(k, p)| (lo + k as u32, p))
            .collect();
        let dots: Vec<(u32, f64)> = points
            .iter()
            .filter(|r| &r.0 == name)
            .map(|r| (r.1, r.2))
            .collect();
        let path = dir.join(format!("marginal_{}.svg", output::file_stem(name)));
        write_file(&path, marginal_svg(name, &line, &dots).as_bytes())?;
        files.push(path);
    }
    Ok(files)
}

fn solve(a: SolveArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let LoadedNetwork { net, reference } = load_network(&a.network)?;
    let species = net.species().to_vec();
    let space = parse_space(&a.space, &species)?;
    let mut config = SolverConfig {
        max_order: a.max_order,
        initial_order: a.initial_order.min(a.max_order),
        residual_tol: a.residual_tol,
        order_escalation_tol: a.tol,
        adaptive: !a.no_adaptive,
        ..SolverConfig::default()
    };
    if let Some(path) = &a.warm_start {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let warm = WarmStart::from_json(&text)
            .and_then(|w| w.check(&species).map(|()| w))
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        if warm.order > config.max_order {
            return Err(CliError::Usage(format!(
                "warm start has order {} above --max-order {}",
                warm.order, config.max_order
            )));
        }
        config.initial_order = warm.order;
        config.initial_lambdas = Some(warm.lambdas);
    }
    config.validate().map_err(solver_error)?;
    let sol = solve_adaptive(&net, &space, &config).map_err(solver_error)?;

    create_dir(&a.out)?;
    let mut files = output::write_marginals(&a.out, &sol.distribution, &species)?;
    files.push(output::write_distribution(
        &a.out,
        &sol.distribution,
        &species,
    )?);
    let eqs = sol.equations(&net);
    let mut rows: Vec<MomentRow> = sol
        .basis
        .lower
        .iter()
        .zip(&sol.moments_lower)
        .zip(&sol.lambdas.lambdas)
        .map(|((m, &value), &lambda)| MomentRow {
            label: m.label(&species),
            value,
            lambda: Some(lambda),
        })
        .collect();
    rows.extend(
        eqs.basis
            .higher
            .iter()
            .zip(&sol.moments_higher)
            .map(|(m, &value)| MomentRow {
                label: m.label(&species),
                value,
                lambda: None,
            }),
    );
    files.push(output::write_moments(&a.out, &rows)?);
    let lambdas_path = a.out.join("lambdas.json");
    write_file(&lambdas_path, sol.warm_start(&species).to_json().as_bytes())?;
    files.push(lambdas_path);
    if a.plot {
        files.extend(write_plots(
            &a.out,
            &sol.distribution,
            &species,
            a.overlay.as_deref(),
        )?);
    }

    let warnings: Vec<String> = sol.warnings.iter().map(ToString::to_string).collect();
    let history: Vec<serde_json::Value> = sol
        .per_order_history
        .iter()
        .map(|h| {
            json!({
                "order": h.order,
                "residual_norm": h.residual_norm,
                "iterations": h.iterations,
                "l1_step": h.l1_step,
            })
        })
        .collect();
    let outcome = json!({
        "status": "converged",
        "order_used": sol.order_used,
        "residual_norm": sol.residual_norm,
        "raw_residual_norm": sol.raw_residual_norm,
        "iterations": sol.iterations,
        "total_iterations": sol.per_order_history.iter().map(|h| h.iterations).sum::<usize>(),
        "lambda0": sol.lambdas.lambda0,
        "boundary_mass": sol.boundary_mass,
        "residual_trace": sol.residual_trace,
        "per_order_history": history,
        "warnings": warnings,
    });
    let manifest = RunManifest {
        tool: "zics",
        version: env!("CARGO_PKG_VERSION"),
        command: "solve".into(),
        network: reference,
        species: species.clone(),
        space: space.bounds().to_vec(),
        threads: rayon::current_num_threads(),
        config: json!({
            "max_order": config.max_order,
            "initial_order": config.initial_order,
            "adaptive": config.adaptive,
            "order_escalation_tol": config.order_escalation_tol,
            "residual_tol": config.residual_tol,
            "max_newton_iters": config.max_newton_iters,
            "max_backtracks": config.max_backtracks,
            "warm_start": a.warm_start.as_ref().map(|p| p.display().to_string()),
        }),
        elapsed_seconds: start.elapsed().as_secs_f64(),
        outcome,
        files: relative_names(&a.out, &files),
    };
    manifest.write(&a.out)?;

    println!(
        "order {} | relative residual {:.3e} | iterations {} | boundary mass {:.3e}",
        sol.order_used, sol.residual_norm, sol.iterations, sol.boundary_mass
    );
    for r in &rows[..sol.basis.psi()] {
        println!("{}: {:.6}", r.label, r.value);
    }
    for w in &sol.warnings {
        println!("warning: {w}");
    }
    Ok(())
}

fn oracle(a: OracleArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let LoadedNetwork { net, reference } = load_network(&a.network)?;
    let species = net.species().to_vec();
    let space = parse_space(&a.space, &species)?;
    let basis = build_basis(species.len(), 2);
    let (dist, rows, config, outcome) = if a.cme {
        let p = cme_stationary_with_cap(&net, &space, a.cap).map_err(oracle_error)?;
        let rows: Vec<MomentRow> = basis
            .lower
            .iter()
            .map(|m| MomentRow {
                label: m.label(&species),
                value: p.expectation(m),
                lambda: None,
            })
            .collect();
        let outcome = json!({ "status": "solved", "boundary_mass": p.boundary_mass() });
        (p, rows, json!({ "method": "cme", "cap": a.cap }), outcome)
    } else {
        let initial = match &a.initial {
            Some(s) => parse_state(s, &species)?,
            None => space.bounds().iter().map(|b| b.0).collect(),
        };
        let cfg = SsaConfig {
            seed: a.seed,
            n_trajectories: a.trajectories,
            burn_in_time: a.burn_in,
            sample_interval: a.sample_interval,
            total_time: a.time,
            space: Some(space.clone()),
            moment_order: 2,
            ..SsaConfig::new(initial.clone())
        };
        let res = ssa_sample(&net, &cfg).map_err(oracle_error)?;
        let rows: Vec<MomentRow> = res
            .moments
            .iter()
            .map(|m| MomentRow {
                label: m.index.label(&species),
                value: m.mean,
                lambda: None,
            })
            .collect();
        let std_errors: Vec<serde_json::Value> = res
            .moments
            .iter()
            .map(|m| json!({ "label": m.index.label(&species), "std_error": m.std_error }))
            .collect();
        let frozen: Vec<serde_json::Value> = res
            .frozen
            .iter()
            .map(|f| json!({ "trajectory": f.trajectory, "time": f.time, "state": f.state }))
            .collect();
        let outcome = json!({
            "status": "sampled",
            "events": res.events,
            "outside_fraction": res.outside_fraction,
            "moment_std_errors": std_errors,
            "frozen": frozen,
        });
        let config = json!({
            "method": "ssa",
            "seed": a.seed,
            "trajectories": a.trajectories,
            "total_time": a.time,
            "burn_in_time": a.burn_in,
            "sample_interval": a.sample_interval,
            "initial_state": initial,
            "rng": "ChaCha8",
        });
        (res.distribution, rows, config, outcome)
    };

    create_dir(&a.out)?;
    let mut files = output::write_marginals(&a.out, &dist, &species)?;
    files.push(output::write_distribution(&a.out, &dist, &species)?);
    files.push(output::write_moments(&a.out, &rows)?);
    if a.plot {
        files.extend(write_plots(&a.out, &dist, &species, a.overlay.as_deref())?);
    }
    let manifest = RunManifest {
        tool: "zics",
        version: env!("CARGO_PKG_VERSION"),
        command: "oracle".into(),
        network: reference,
        species: species.clone(),
        space: space.bounds().to_vec(),
        threads: rayon::current_num_threads(),
        config,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        outcome,
        files: relative_names(&a.out, &files),
    };
    manifest.write(&a.out)?;
    for r in &rows {
        println!("{}: {:.6}", r.label, r.value);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use zics_core::networks;

    #[test]
    fn totals_pair_by_suffix_expression_and_position() {
        let net = networks::michaelis_menten_closed(1.0, 1.0, 1.0);
        let laws = conservation_laws(&net);
        let sp = net.species();
        let by_suffix = pair_totals(&laws, sp, &["S_T=20".into(), "E_T=10".into()]).unwrap();
        assert_eq!(by_suffix[0].coefficients, vec![1, 0, 1, 1]);
        assert_eq!(by_suffix[0].total, Some(20.0));
        assert_eq!(by_suffix[1].coefficients, vec![0, 1, 1, 0]);
        let by_expr = pair_totals(&laws, sp, &["E+S:E=10".into()]).unwrap();
        assert_eq!(by_expr[0].coefficients, vec![0, 1, 1, 0]);
        let positional = pair_totals(&laws, sp, &["a=3".into(), "b=4".into()]).unwrap();
        assert_eq!(positional[0].coefficients, laws[0].coefficients);
        assert_eq!(positional[1].total, Some(4.0));
        assert!(pair_totals(&laws, sp, &["x".into()]).is_err());
        assert!(pair_totals(&laws, sp, &["a=1".into(), "b=2".into(), "c=3".into()]).is_err());
    }
}
