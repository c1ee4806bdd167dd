//! Command implementations: deterministic sweeps over pure library calls,
//! emitted through the report writer.

use crate::output::{Cell, Format, Report};
use crate::CliError;
use qmoddev_core::channel::{self, CqChannel, EvalMode, SigmaChoice, TypeSearch};
use qmoddev_core::htd::{self, ErrorBranch};
use qmoddev_core::linalg;
use qmoddev_core::moddev::{self, RateOffset};
use qmoddev_core::nsdist::{self, LogBase};
use qmoddev_core::qstate::{matrix_from_json, DensityMatrix, StateFile};
use qmoddev_core::tails::{self, SumAtoms, TailsError};
use qmoddev_core::{Epsilon, ModerateSequence, TabulatedFunctionPair, Tolerances};
use rayon::prelude::*;
use serde::Deserialize;
use std::path::Path;

pub struct Ctx {
    pub base: LogBase,
    pub format: Format,
    pub out: Option<std::path::PathBuf>,
    pub threads: Option<usize>,
    pub tol: Tolerances,
}

impl Ctx {
    fn base_tag(&self) -> &'static str {
        match self.base {
            LogBase::Two => "2",
            LogBase::E => "e",
        }
    }

    fn stamp(&self, report: &mut Report, command: &str) {
        report.meta("tool", "qmoddev");
        report.meta("version", env!("CARGO_PKG_VERSION"));
        report.meta("command", command);
        report.meta("log_base", self.base_tag());
        for (name, value) in self.tol.entries() {
            report.meta(&format!("tol.{name}"), qmoddev_core::tails::fmt17(value));
        }
    }
}

/// Parse "a..b", "2^a..2^b" or a comma list into a sorted n grid.
pub fn parse_n_grid(spec: &str) -> Result<Vec<u64>, CliError> {
    let bad = |why: &str| CliError::validation(format!("bad --n grid {spec:?}: {why}"));
    let mut out: Vec<u64> = Vec::new();
    if let Some((lo, hi)) = spec.split_once("..") {
        if let (Some(a), Some(b)) = (lo.strip_prefix("2^"), hi.strip_prefix("2^")) {
            let a: u32 = a.parse().map_err(|_| bad("power"))?;
            let b: u32 = b.parse().map_err(|_| bad("power"))?;
            if a > b || b >= 63 {
                return Err(bad("power range"));
            }
            for p in a..=b {
                out.push(1u64 << p);
            }
        } else {
            let a: u64 = lo.parse().map_err(|_| bad("start"))?;
            let b: u64 = hi.parse().map_err(|_| bad("end"))?;
            if a == 0 || a > b || b - a > 100_000 {
                return Err(bad("range"));
            }
            out.extend(a..=b);
        }
    } else {
        for item in spec.split(',') {
            out.push(item.trim().parse().map_err(|_| bad("entry"))?);
        }
    }
    if out.is_empty() || out.contains(&0) {
        return Err(bad("empty or zero entry"));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Parse "c,t" with t given as a decimal or a fraction like 1/3.
pub fn parse_seq(spec: &str) -> Result<ModerateSequence, CliError> {
    let bad = || CliError::validation(format!("bad --seq {spec:?}: expected c,t"));
    let (c, t) = spec.split_once(',').ok_or_else(bad)?;
    let c: f64 = c.trim().parse().map_err(|_| bad())?;
    let t = t.trim();
    let t: f64 = if let Some((num, den)) = t.split_once('/') {
        let n: f64 = num.trim().parse().map_err(|_| bad())?;
        let d: f64 = den.trim().parse().map_err(|_| bad())?;
        n / d
    } else {
        t.parse().map_err(|_| bad())?
    };
    ModerateSequence::new(c, t).map_err(CliError::from)
}

fn load_state(path: &Path, tol: &Tolerances) -> Result<DensityMatrix, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    let wire: StateFile = serde_json::from_str(&text)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    let mat = matrix_from_json(&wire.0)?;
    DensityMatrix::validate(mat, tol).map_err(CliError::from)
}

#[derive(Deserialize)]
struct PairFile {
    #[serde(default)]
    atoms: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    llr_atoms: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    lambda_min_sigma: Option<f64>,
}

/// Load either a (p, q) pair file or a raw LLR atom file; returns the atoms
/// of the single-copy variable in nats plus the pair when one exists.
fn load_pair(
    path: &Path,
    base: LogBase,
    tol: &Tolerances,
) -> Result<(SumAtoms, Option<nsdist::ClassicalPair>), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    let wire: PairFile = serde_json::from_str(&text)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    let _ = tol;
    if let Some(atoms) = wire.atoms {
        let pq: Vec<(f64, f64)> = atoms.iter().map(|&[p, q]| (p, q)).collect();
        let pair = nsdist::ClassicalPair::new(
            &pq,
            base,
            wire.lambda_min_sigma.unwrap_or(0.0).max(0.0),
            false,
        )?;
        let sum = SumAtoms::from_pair(&pair)?;
        Ok((sum, Some(pair)))
    } else if let Some(llr) = wire.llr_atoms {
        let values: Vec<f64> = llr.iter().map(|&[z, _]| z).collect();
        let probs: Vec<f64> = llr.iter().map(|&[_, p]| p).collect();
        Ok((SumAtoms::from_probs(&values, &probs)?, None))
    } else {
        Err(CliError::validation(format!(
            "{}: need \"atoms\" ([[p,q],...]) or \"llr_atoms\" ([[z,p],...])",
            path.display()
        )))
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_states(
    ctx: &Ctx,
    rho_path: &Path,
    sigma_path: &Path,
    eps: &[f64],
    n_spec: Option<&str>,
    seq_spec: Option<&str>,
    allow_infinite_llr: bool,
) -> Result<(), CliError> {
    let tol = &ctx.tol;
    let bf = ctx.base.ln();
    let rho = load_state(rho_path, tol)?;
    let sigma = load_state(sigma_path, tol)?;
    let pair = nsdist::nussbaum_szkola(&rho, &sigma, ctx.base, allow_infinite_llr, tol)?;
    let seq = seq_spec.map(parse_seq).transpose()?;
    let grid = n_spec.map(parse_n_grid).transpose()?.unwrap_or_default();
    let eps_levels: Result<Vec<Epsilon>, CliError> = eps
        .iter()
        .map(|&e| {
            Epsilon::from_prob(e)
                .ok_or_else(|| CliError::validation(format!("eps {e} outside (0,1)")))
        })
        .collect();
    let eps_levels = eps_levels?;

    let mut report = Report::new(vec![
        "n",
        "eps",
        "a_n",
        "dh_exact_per_copy",
        "bridge_lower",
        "bridge_upper",
        "second_order_prediction",
        "moddev_prediction_low",
        "moddev_prediction_high",
        "path",
    ]);
    ctx.stamp(&mut report, "states");
    let commuting = linalg::common_eigenbasis(&[rho.matrix(), sigma.matrix()], 1e-11).is_some();
    report.meta("classical_exact_path", commuting);
    report.meta("allow_infinite_llr", allow_infinite_llr);

    let (d_nats, v_nats) = nsdist::quantum_d_and_v(&rho, &sigma, tol)?;
    let (dq, vq, tq) = match nsdist::classical_divergence_stats(&pair) {
        Ok(stats) => stats,
        Err(nsdist::NsDistError::InfiniteLLR) => (f64::INFINITY, f64::INFINITY, f64::INFINITY),
        Err(e) => return Err(e.into()),
    };
    report.meta_num("D", d_nats / bf);
    report.meta_num("V", v_nats / (bf * bf));
    report.meta_num("T", tq);
    let _ = (dq, vq);
    let lambda = pair.lambda_min_sigma();
    report.meta_num("lambda_min_sigma", lambda);
    if lambda > 0.0 {
        for k in 1..=3u8 {
            let b = nsdist::cumulant_bound(lambda, k, rho.dim())?;
            report.meta_num(&format!("C_{k}"), b.c_k);
        }
        report.meta_num("mgf_floor", 1.0 / (rho.dim() as f64 * lambda));
    }
    let atoms_json: Vec<[f64; 2]> = pair.atoms().iter().map(|a| [a.p, a.q]).collect();
    report.meta(
        "ns_atoms",
        serde_json::to_string(&atoms_json).expect("serialisable atoms"),
    );

    // grid evaluation, parallel over (n, eps) pairs with ordered collection
    let mut jobs: Vec<(u64, usize)> = Vec::new();
    for &n in &grid {
        for ei in 0..eps_levels.len() {
            jobs.push((n, ei));
        }
    }
    type StatesRow = (u64, usize, Option<f64>, Option<(f64, f64)>);
    let results: Vec<StatesRow> = jobs
        .par_iter()
        .map(|&(n, ei)| {
            let value = htd::htd_product_exact(&rho, &sigma, n, eps_levels[ei], tol).ok();
            let bridge = htd::htd_bridge_bounds(
                &pair,
                n,
                eps_levels[ei],
                tol.bridge_k,
                ErrorBranch::Low,
                tol,
            )
            .ok();
            (n, ei, value, bridge)
        })
        .collect();
    for (n, ei, value, bridge) in results {
        let e = eps[ei];
        let a_n = seq.as_ref().map(|s| s.a(n));
        let so = value.map(|_| {
            htd::second_order_prediction(d_nats, v_nats, n, eps_levels[ei]) / bf
        });
        let (lo, hi) = match a_n {
            Some(a) => (
                Some(htd::moddev_htd_prediction(d_nats, v_nats, a, ErrorBranch::Low) / bf),
                Some(htd::moddev_htd_prediction(d_nats, v_nats, a, ErrorBranch::High) / bf),
            ),
            None => (None, None),
        };
        report.push(vec![
            Cell::Int(n),
            Cell::Num(e),
            a_n.map(Cell::Num).unwrap_or(Cell::Empty),
            value.map(|v| Cell::Num(v / bf)).unwrap_or(Cell::Empty),
            bridge.map(|(l, _)| Cell::Num(l / bf)).unwrap_or(Cell::Empty),
            bridge.map(|(_, h)| Cell::Num(h / bf)).unwrap_or(Cell::Empty),
            so.map(Cell::Num).unwrap_or(Cell::Empty),
            lo.map(Cell::Num).unwrap_or(Cell::Empty),
            hi.map(Cell::Num).unwrap_or(Cell::Empty),
            Cell::Text(if commuting { "classical-exact" } else { "quantum-exact" }.into()),
        ]);
    }
    report.write(ctx.format, ctx.out.as_deref())?;
    Ok(())
}

pub fn cmd_channel(
    ctx: &Ctx,
    channel_path: &Path,
    seq_spec: Option<&str>,
    n_spec: Option<&str>,
    analysis_out: Option<&Path>,
    converse_search: &str,
) -> Result<(), CliError> {
    let tol = &ctx.tol;
    let bf = ctx.base.ln();
    let text = std::fs::read_to_string(channel_path)
        .map_err(|e| CliError::validation(format!("{}: {e}", channel_path.display())))?;
    let w = CqChannel::from_json(&text, tol)?;
    let analysis = channel::capacity(&w, tol)?;
    let seq = seq_spec.map(parse_seq).transpose()?;
    let grid = n_spec.map(parse_n_grid).transpose()?.unwrap_or_default();

    let mut report = Report::new(vec![
        "n",
        "a_n",
        "ln_eps_n",
        "eps_n",
        "predicted_rate_below",
        "predicted_rate_above",
        "achievability",
        "converse",
        "converse_restricted",
    ]);
    ctx.stamp(&mut report, "channel");
    report.meta_num("capacity", analysis.capacity / bf);
    report.meta_num("v_min", analysis.v_min / (bf * bf));
    report.meta_num("v_max", analysis.v_max / (bf * bf));
    report.meta_num("certificate_gap", analysis.certificate_gap);
    report.meta("iterations", analysis.iterations);
    report.meta("lp_degraded", analysis.lp_degraded);
    report.meta(
        "optimal_input",
        serde_json::to_string(&analysis.optimal_input).expect("serialisable"),
    );
    let commuting = w.common_basis(1e-11).is_some();
    report.meta("classical_exact_path", commuting);
    report.meta("converse_search", converse_search);

    if let Some(path) = analysis_out {
        let centre = qmoddev_core::qstate::matrix_to_json(analysis.centre.matrix());
        let doc = serde_json::json!({
            "log_base": ctx.base_tag(),
            "capacity": analysis.capacity / bf,
            "v_min": analysis.v_min / (bf * bf),
            "v_max": analysis.v_max / (bf * bf),
            "per_input_d": analysis.per_input_d.iter().map(|d| d / bf).collect::<Vec<_>>(),
            "optimal_input": analysis.optimal_input,
            "centre": centre,
            "certificate_gap": analysis.certificate_gap,
            "iterations": analysis.iterations,
            "lp_degraded": analysis.lp_degraded,
            "labels": w.labels(),
        });
        std::fs::write(path, serde_json::to_string_pretty(&doc).expect("json"))?;
    }

    if let Some(seq) = seq {
        let search = match converse_search {
            "full" => TypeSearch::Full,
            "restricted" => TypeSearch::Restricted,
            _ => TypeSearch::Auto,
        };
        let rows: Vec<(u64, f64, f64, Option<f64>, Option<(f64, bool)>)> = grid
            .par_iter()
            .map(|&n| {
                let a_n = seq.a(n);
                let ln_eps = seq.ln_eps(n);
                let eps = Epsilon::low(ln_eps);
                let ach = channel::achievability_bound(
                    &w,
                    &analysis.optimal_input,
                    n,
                    eps,
                    if commuting {
                        EvalMode::ClassicalExact
                    } else {
                        EvalMode::QuantumExact
                    },
                    ErrorBranch::Low,
                    tol,
                )
                .ok()
                .map(|b| b.rate);
                let conv = channel::converse_bound_searched(
                    &w,
                    n,
                    eps,
                    &SigmaChoice::CentreIid(analysis.centre.clone()),
                    Some(&analysis),
                    ErrorBranch::Low,
                    search,
                    tol,
                )
                .ok()
                .map(|b| (b.rate, b.restricted_search));
                (n, a_n, ln_eps, ach, conv)
            })
            .collect();
        for (n, a_n, ln_eps, ach, conv) in rows {
            report.push(vec![
                Cell::Int(n),
                Cell::Num(a_n),
                Cell::Num(ln_eps),
                Cell::Num(ln_eps.exp()),
                Cell::Num(channel::rate_prediction(&analysis, a_n, ErrorBranch::Low) / bf),
                Cell::Num(channel::rate_prediction(&analysis, a_n, ErrorBranch::High) / bf),
                ach.map(|r| Cell::Num(r / bf)).unwrap_or(Cell::Empty),
                conv.map(|(r, _)| Cell::Num(r / bf)).unwrap_or(Cell::Empty),
                conv.map(|(_, restricted)| Cell::Text(restricted.to_string()))
                    .unwrap_or(Cell::Empty),
            ]);
        }
    }
    report.write(ctx.format, ctx.out.as_deref())?;
    Ok(())
}

pub fn cmd_tails(
    ctx: &Ctx,
    pair_path: &Path,
    seq_spec: &str,
    n_spec: &str,
    kappa1: f64,
    kappa2: f64,
    eta: f64,
) -> Result<(), CliError> {
    let tol = &ctx.tol;
    let (atoms, _) = load_pair(pair_path, ctx.base, tol)?;
    let seq = parse_seq(seq_spec)?;
    let grid = parse_n_grid(n_spec)?;
    let (mean, v, t3) = atoms.moments();
    if v <= 0.0 {
        return Err(CliError::validation(
            TailsError::ZeroVariance.to_string(),
        ));
    }

    let mut report = Report::new(vec![
        "n",
        "t_n",
        "ln_tail_exact",
        "chernoff_raw",
        "chernoff_closed",
        "rozovsky",
        "reference",
        "ratio_exact_over_reference",
    ]);
    ctx.stamp(&mut report, "tails");
    report.meta_num("mean", mean);
    report.meta_num("variance", v);
    report.meta_num("third_abs_moment", t3);
    report.meta_num("kappa1", kappa1);
    report.meta_num("kappa2", kappa2);
    report.meta_num("eta", eta);
    report.meta("seq_c", seq.c());
    report.meta("seq_t", seq.t());
    // the Chernoff tilt needs alpha t_n <= 1/2; report from which n on the
    // sweep satisfies it
    {
        let root = (v + eta / 4.0).sqrt();
        let alpha = 1.0 / (root * (root + (eta / 4.0).sqrt()));
        match seq.first_valid_n(0.5 / alpha) {
            Some(n) => report.meta("chernoff_valid_from_n", n),
            None => report.meta("chernoff_valid_from_n", "never"),
        }
    }

    type TailRow = (u64, f64, f64, Option<(f64, f64)>, Option<f64>, f64);
    let rows: Result<Vec<TailRow>, CliError> = grid
        .par_iter()
        .map(|&n| {
            let t_n = seq.a(n);
            let dist = tails::nfold_from_atoms(&atoms, n, tol).map_err(CliError::from)?;
            let exact = tails::tail_log_prob(
                &dist,
                n as f64 * (mean + t_n),
                tails::TailMode::Geq,
            );
            let chernoff = match tails::chernoff_upper_bound(&atoms, n, t_n, eta) {
                Ok(b) => Some((b.raw_log, b.closed_form_log)),
                Err(TailsError::NotYetValid { .. }) => None,
                Err(e) => return Err(CliError::from(e)),
            };
            let rozovsky = match tails::rozovsky_lower_bound(v, t3, n, t_n, kappa1, kappa2) {
                Ok(b) => Some(b),
                Err(TailsError::OutsideValidityWindow { .. }) => None,
                Err(e) => return Err(CliError::from(e)),
            };
            let reference = tails::moddev_reference(n, t_n, v).map_err(CliError::from)?;
            Ok((n, t_n, exact, chernoff, rozovsky, reference))
        })
        .collect();
    for (n, t_n, exact, chernoff, rozovsky, reference) in rows? {
        report.push(vec![
            Cell::Int(n),
            Cell::Num(t_n),
            Cell::Num(exact),
            chernoff.map(|(r, _)| Cell::Num(r)).unwrap_or(Cell::Empty),
            chernoff.map(|(_, c)| Cell::Num(c)).unwrap_or(Cell::Empty),
            rozovsky.map(Cell::Num).unwrap_or(Cell::Empty),
            Cell::Num(reference),
            Cell::Num(exact / reference),
        ]);
    }
    report.write(ctx.format, ctx.out.as_deref())?;
    Ok(())
}

fn parse_offset(spec: &str) -> Result<RateOffset, CliError> {
    let bad = || {
        CliError::validation(format!(
            "bad --classify {spec:?}: expected const-below | power-below:T | sqrt | \
             power-above:T | const-above"
        ))
    };
    Ok(match spec {
        "const-below" => RateOffset::ConstantBelow,
        "sqrt" => RateOffset::SqrtScaling,
        "const-above" => RateOffset::ConstantAbove,
        other => {
            let (kind, t) = other.split_once(':').ok_or_else(bad)?;
            let t: f64 = if let Some((num, den)) = t.split_once('/') {
                let n: f64 = num.parse().map_err(|_| bad())?;
                let d: f64 = den.parse().map_err(|_| bad())?;
                n / d
            } else {
                t.parse().map_err(|_| bad())?
            };
            match kind {
                "power-below" => RateOffset::PowerBelow(t),
                "power-above" => RateOffset::PowerAbove(t),
                _ => return Err(bad()),
            }
        }
    })
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_regimes(
    ctx: &Ctx,
    classify: Option<&str>,
    error_behavior: Option<&str>,
    seq_spec: Option<&str>,
    n_spec: Option<&str>,
    channel_path: Option<&Path>,
    capacity_in: Option<f64>,
    vmin_in: Option<f64>,
    vmax_in: Option<f64>,
) -> Result<(), CliError> {
    let tol = &ctx.tol;
    let bf = ctx.base.ln();

    if let Some(spec) = classify {
        let offset = parse_offset(spec)?;
        let regime = moddev::regime_classify(offset, error_behavior)?;
        let mut report = Report::new(vec!["regime", "name", "error_probability", "code_rate"]);
        ctx.stamp(&mut report, "regimes");
        let (name, rate) = match regime {
            moddev::Regime::ErrorExponent => ("error exponent", "C - Theta(1)"),
            moddev::Regime::ModerateBelow => {
                ("moderate deviation (below capacity)", "C - Theta(n^-t)")
            }
            moddev::Regime::SecondOrder => ("constant error (second-order)", "C - Theta(n^-1/2)"),
            moddev::Regime::ModerateAbove => {
                ("moderate deviation (above capacity)", "C + Theta(n^-t)")
            }
            moddev::Regime::StrongConverse => ("strong converse exponent", "C + Theta(1)"),
        };
        report.push(vec![
            Cell::Text(regime.numeral().into()),
            Cell::Text(name.into()),
            Cell::Text(regime.error_behavior().into()),
            Cell::Text(rate.into()),
        ]);
        report.write(ctx.format, ctx.out.as_deref())?;
        return Ok(());
    }

    let seq = seq_spec
        .map(parse_seq)
        .transpose()?
        .ok_or_else(|| CliError::validation("regimes needs --classify or --seq"))?;
    let grid = n_spec
        .map(parse_n_grid)
        .transpose()?
        .ok_or_else(|| CliError::validation("regimes table needs --n"))?;

    // capacity and dispersions either from a channel file or from flags
    let mut report = Report::new(vec![
        "n",
        "a_n",
        "eps_n",
        "predicted_rate_below",
        "predicted_rate_above",
        "achievability",
        "converse",
    ]);
    ctx.stamp(&mut report, "regimes");
    report.meta("seq_c", seq.c());
    report.meta("seq_t", seq.t());

    let loaded = match channel_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
            let w = CqChannel::from_json(&text, tol)?;
            let an = channel::capacity(&w, tol)?;
            Some((w, an))
        }
        None => None,
    };
    let (cap, vmin, vmax) = match (&loaded, capacity_in, vmin_in, vmax_in) {
        (Some((_, an)), _, _, _) => (an.capacity / bf, an.v_min / (bf * bf), an.v_max / (bf * bf)),
        (None, Some(c), Some(lo), hi) => (c, lo, hi.unwrap_or(lo)),
        _ => {
            return Err(CliError::validation(
                "regimes table needs --channel or --capacity with --vmin",
            ))
        }
    };
    report.meta_num("capacity", cap);
    report.meta_num("v_min", vmin);
    report.meta_num("v_max", vmax);

    let rows: Vec<(u64, f64, f64, Option<f64>, Option<f64>)> = grid
        .par_iter()
        .map(|&n| {
            let a_n = seq.a(n);
            let ln_eps = seq.ln_eps(n);
            let (ach, conv) = match &loaded {
                Some((w, an)) => {
                    let commuting = w.common_basis(1e-11).is_some();
                    let eps = Epsilon::low(ln_eps);
                    let mode = if commuting {
                        EvalMode::ClassicalExact
                    } else {
                        EvalMode::QuantumExact
                    };
                    (
                        channel::achievability_bound(
                            w,
                            &an.optimal_input,
                            n,
                            eps,
                            mode,
                            ErrorBranch::Low,
                            tol,
                        )
                        .ok()
                        .map(|b| b.rate / bf),
                        channel::converse_bound(
                            w,
                            n,
                            eps,
                            &SigmaChoice::CentreIid(an.centre.clone()),
                            Some(an),
                            ErrorBranch::Low,
                            tol,
                        )
                        .ok()
                        .map(|b| b.rate / bf),
                    )
                }
                None => (None, None),
            };
            (n, a_n, ln_eps, ach, conv)
        })
        .collect();
    for (n, a_n, ln_eps, ach, conv) in rows {
        report.push(vec![
            Cell::Int(n),
            Cell::Num(a_n),
            Cell::Num(ln_eps.exp()),
            Cell::Num(cap - (2.0 * vmin).sqrt() * a_n),
            Cell::Num(cap + (2.0 * vmax).sqrt() * a_n),
            ach.map(Cell::Num).unwrap_or(Cell::Empty),
            conv.map(Cell::Num).unwrap_or(Cell::Empty),
        ]);
    }
    report.write(ctx.format, ctx.out.as_deref())?;
    Ok(())
}

#[derive(Deserialize)]
struct TabPairFile {
    domain: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

pub fn cmd_reverse_check(
    ctx: &Ctx,
    pair_file: Option<&Path>,
    a: Option<f64>,
    delta: Option<f64>,
    random: Option<usize>,
    seed: u64,
) -> Result<(), CliError> {
    let mut report = Report::new(vec!["case", "level_a", "delta", "upper_holds", "lower_holds"]);
    ctx.stamp(&mut report, "reverse-check");
    report.meta("seed", seed);

    if let Some(path) = pair_file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        let wire: TabPairFile = serde_json::from_str(&text)
            .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        let pair = TabulatedFunctionPair::new(wire.domain, wire.a, wire.b)?;
        let a = a.ok_or_else(|| CliError::validation("reverse-check needs --a"))?;
        let delta = delta.ok_or_else(|| CliError::validation("reverse-check needs --delta"))?;
        let (upper, lower) = moddev::reversal_check(&pair, a, delta)?;
        report.push(vec![
            Cell::Text("file".into()),
            Cell::Num(a),
            Cell::Num(delta),
            Cell::Text(upper.to_string()),
            Cell::Text(lower.to_string()),
        ]);
    } else if let Some(trials) = random {
        let mut r = qmoddev_core::random::rng(seed);
        let mut all_pass = true;
        for i in 0..trials {
            let (pair, level, del) = qmoddev_core::random::random_tabulated_pair(&mut r);
            let (upper, lower) = moddev::reversal_check(&pair, level, del)?;
            if !(upper && lower) {
                all_pass = false;
                report.push(vec![
                    Cell::Text(format!("random[{i}]")),
                    Cell::Num(level),
                    Cell::Num(del),
                    Cell::Text(upper.to_string()),
                    Cell::Text(lower.to_string()),
                ]);
            }
        }
        report.meta("trials", trials);
        report.meta("all_pass", all_pass);
        if all_pass {
            report.push(vec![
                Cell::Text("random-summary".into()),
                Cell::Empty,
                Cell::Empty,
                Cell::Text("true".into()),
                Cell::Text("true".into()),
            ]);
        }
    } else {
        return Err(CliError::validation(
            "reverse-check needs --pair-file or --random",
        ));
    }
    report.write(ctx.format, ctx.out.as_deref())?;
    Ok(())
}
