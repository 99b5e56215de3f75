//! `restake check`: robustness verdicts from one or more engines.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use elastic_restaking::brute_force::best_attack;
use elastic_restaking::mip::{build_budget_mip, build_byzantine_mip, byzantine_threshold, solve_budget, to_lp_format, MipSettings};
use elastic_restaking::symmetric::as_symmetric;
use elastic_restaking::{Attack, Network64, Scalar};

/// Largest network the brute-force oracle is run on.
pub const ORACLE_LIMIT: usize = 4;
/// Largest `validators × services` the programs are run on without `--mip`.
pub const AUTO_MIP_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Symmetric,
    BruteForce,
    Mip,
}

impl Engine {
    fn name(self) -> &'static str {
        match self {
            Engine::Symmetric => "symmetric",
            Engine::BruteForce => "brute-force",
            Engine::Mip => "MIP",
        }
    }
}

/// A verdict and, when not robust, the Byzantine set and attack behind it.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub engine: Engine,
    pub robust: bool,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone)]
pub struct Witness {
    pub byzantine: Vec<String>,
    /// Network left after the Byzantine services slash.
    pub slashed: Network64,
    pub attack: Attack<f64>,
}

pub struct CheckOptions {
    pub budget: f64,
    pub fraction: f64,
    pub oracle: bool,
    pub mip: bool,
}

fn ids(net: &Network64, services: &[usize]) -> Vec<String> {
    services.iter().map(|&s| net.service_ids()[s].clone()).collect()
}

pub fn engines(net: &Network64, opts: &CheckOptions) -> Result<Vec<Engine>> {
    let mut engines = Vec::new();
    let symmetric = as_symmetric(net);
    if symmetric.is_ok() {
        engines.push(Engine::Symmetric);
    }
    let size = net.n_validators() * net.n_services();
    if opts.mip || (symmetric.is_err() && !opts.oracle) {
        if !opts.mip && size > AUTO_MIP_LIMIT {
            bail!(
                "network is not symmetric ({}) and has {} validator-service pairs; \
                 pass --mip to run the programs anyway",
                symmetric.unwrap_err(),
                size
            );
        }
        engines.push(Engine::Mip);
    }
    if opts.oracle {
        if net.n_validators() > ORACLE_LIMIT || net.n_services() > ORACLE_LIMIT {
            bail!(
                "brute-force oracle is limited to {ORACLE_LIMIT}×{ORACLE_LIMIT} networks, got {}×{}",
                net.n_validators(),
                net.n_services()
            );
        }
        engines.push(Engine::BruteForce);
    }
    Ok(engines)
}

fn symmetric_verdict(net: &Network64, opts: &CheckOptions) -> Result<Verdict> {
    let sym = as_symmetric(net)?;
    let found = sym.byzantine_slack(&opts.fraction)?;
    let breaking = found.filter(|b| !b.slack.definitely_gt(&opts.budget));
    let Some(b) = breaking else {
        return Ok(Verdict { engine: Engine::Symmetric, robust: true, witness: None });
    };
    let slashed_sym = sym.slash(&b.byzantine)?;
    let slashed = net.apply_byzantine(&b.byzantine)?;
    let attack = slashed_sym.consolidated_attack(&b.target);
    Ok(Verdict {
        engine: Engine::Symmetric,
        robust: false,
        witness: Some(Witness { byzantine: ids(net, &b.byzantine), slashed, attack }),
    })
}

fn mip_verdict(net: &Network64, opts: &CheckOptions) -> Result<Verdict> {
    let settings = MipSettings::default();
    let threshold = byzantine_threshold(net, &opts.budget, &settings)?;
    if threshold.is_robust_at(&opts.fraction) {
        return Ok(Verdict { engine: Engine::Mip, robust: true, witness: None });
    }
    let slashed = net.apply_byzantine(&threshold.byzantine)?;
    let outcome = solve_budget(&slashed, &settings)?.context("programs reported a break but no attack")?;
    Ok(Verdict {
        engine: Engine::Mip,
        robust: false,
        witness: Some(Witness { byzantine: ids(net, &threshold.byzantine), slashed, attack: outcome.attack }),
    })
}

fn brute_force_verdict(net: &Network64, opts: &CheckOptions) -> Result<Verdict> {
    let cap = net.byzantine_cap(&opts.fraction)?;
    for byzantine in net.byzantine_subsets(&cap)? {
        let slashed = net.apply_byzantine(&byzantine)?;
        let Some(best) = best_attack(&slashed)? else { continue };
        if !(-opts.budget).definitely_gt(&best.margin) {
            return Ok(Verdict {
                engine: Engine::BruteForce,
                robust: false,
                witness: Some(Witness { byzantine: ids(net, &byzantine), slashed, attack: best.attack }),
            });
        }
    }
    Ok(Verdict { engine: Engine::BruteForce, robust: true, witness: None })
}

pub fn run_engine(engine: Engine, net: &Network64, opts: &CheckOptions) -> Result<Verdict> {
    match engine {
        Engine::Symmetric => symmetric_verdict(net, opts),
        Engine::Mip => mip_verdict(net, opts),
        Engine::BruteForce => brute_force_verdict(net, opts),
    }
}

/// LP-format text of the program matching the options.
pub fn dump_mip(net: &Network64, opts: &CheckOptions) -> Result<String> {
    Ok(if opts.fraction > 0.0 {
        to_lp_format(&build_byzantine_mip(net, &opts.budget)?)
    } else {
        to_lp_format(&build_budget_mip(net))
    })
}

pub fn render_verdict(v: &Verdict) -> String {
    let mut out = String::new();
    let word = if v.robust { "robust" } else { "not robust" };
    let _ = writeln!(out, "engine: {}", v.engine.name());
    let _ = writeln!(out, "verdict: {word}");
    if let Some(w) = &v.witness {
        let eval = w.slashed.evaluate_attack(&w.attack).expect("witness attacks are valid");
        let byz = if w.byzantine.is_empty() { "none".to_string() } else { w.byzantine.join(", ") };
        let _ = writeln!(out, "byzantine: {byz}");
        let _ = writeln!(out, "attacked: {}", ids(&w.slashed, &eval.attacked).join(", "));
        let _ = writeln!(out, "stake used:");
        for (v, vid) in w.slashed.validator_ids().iter().enumerate() {
            let used: Vec<String> = eval
                .attacked
                .iter()
                .filter(|&&s| *w.attack.get(v, s) > 0.0)
                .map(|&s| format!("{}={:.6}", w.slashed.service_ids()[s], w.attack.get(v, s)))
                .collect();
            if !used.is_empty() {
                let _ = writeln!(out, "  {vid}: {}", used.join(" "));
            }
        }
        let _ = writeln!(out, "cost: {:.6}", eval.total_cost);
        let _ = writeln!(out, "prize: {:.6}", eval.total_prize);
    }
    out
}
