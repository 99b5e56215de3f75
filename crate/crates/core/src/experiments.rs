//! Parameter sweeps over symmetric templates, written as CSV.
//!
//! The first column is the x-axis (`restaking_degree` or
//! `robustness_threshold`) and the rest are `min_stake_threshold_<x>` or
//! `min_budget_<x>`. Grid points are independent and evaluated in parallel;
//! row order is always the grid order.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mip::{is_f_beta_robust_mip, MipError, MipSettings};
use crate::symmetric::{min_stake_for, search_min_stake, Predicate, SymmetricError, Template};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Symmetric(#[from] SymmetricError),
    #[error(transparent)]
    Mip(#[from] MipError),
    #[error("cannot write `{path}`: {message}")]
    Write { path: String, message: String },
    #[error("invalid sweep: {0}")]
    Config(String),
}

/// One CSV cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Num(f64),
    Flag(bool),
    /// No finite answer (the property never holds, or holds for any budget).
    Missing,
}

impl Cell {
    pub fn num(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:.6}"),
            Cell::Flag(b) => b.to_string(),
            Cell::Missing => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Numeric values of a column; `None` entries are missing cells.
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let j = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[j].num()).collect())
    }

    pub fn write_csv(&self, dir: &Path) -> Result<PathBuf, ExperimentError> {
        let path = dir.join(format!("{}.csv", self.name));
        let err = |e: &dyn std::fmt::Display| ExperimentError::Write {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_path(&path).map_err(|e| err(&e))?;
        w.write_record(&self.header).map_err(|e| err(&e))?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(|e| err(&e))?;
        }
        w.flush().map_err(|e| err(&e))?;
        Ok(path)
    }
}

/// `lo, lo + step, …` up to `hi` inclusive, rounded to 1e-9 so that grid
/// labels stay clean.
pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=count).map(|k| ((lo + k as f64 * step) * 1e9).round() / 1e9).collect()
}

/// `k/denominator` for `k = 0..=max_k`.
pub fn fraction_grid(denominator: usize, max_k: usize) -> Vec<f64> {
    (0..=max_k).map(|k| k as f64 / denominator as f64).collect()
}

fn label(x: f64) -> String {
    format!("{x:.2}")
}

fn stake_cell(result: Result<f64, SymmetricError>) -> Result<Cell, ExperimentError> {
    match result {
        Ok(x) => Ok(Cell::Num(x)),
        Err(SymmetricError::Unsatisfiable { .. }) => Ok(Cell::Missing),
        Err(e) => Err(e.into()),
    }
}

fn par_rows<X: Sync>(xs: &[X], f: impl Fn(&X) -> Result<Vec<Cell>, ExperimentError> + Sync + Send) -> Result<Vec<Vec<Cell>>, ExperimentError> {
    xs.par_iter().map(f).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseService {
    pub prize: f64,
    pub threshold: f64,
}

/// Minimum stake for security across degrees, one column per threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecuritySweep {
    pub validators: usize,
    pub services: usize,
    pub thresholds: Vec<f64>,
    #[serde(default = "one")]
    pub prize: f64,
    pub degrees: Vec<f64>,
}

/// Minimum stake for `(f, β)`-robustness across degrees, one column per `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessSweep {
    pub validators: usize,
    pub services: usize,
    pub threshold: f64,
    #[serde(default = "one")]
    pub prize: f64,
    pub budget: f64,
    pub fractions: Vec<f64>,
    pub degrees: Vec<f64>,
    #[serde(default)]
    pub base: Option<BaseService>,
}

/// Largest tolerable budget across Byzantine fractions, one column per degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureSweep {
    pub validators: usize,
    pub services: usize,
    pub threshold: f64,
    #[serde(default = "one")]
    pub prize: f64,
    pub stake: f64,
    pub degrees: Vec<f64>,
    pub fractions: Vec<f64>,
}

/// Largest tolerable budget for the base service alone, the network without
/// it, and both combined on the summed stake with the same per-service
/// allocations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionSweep {
    pub validators: usize,
    pub services: usize,
    pub threshold: f64,
    #[serde(default = "one")]
    pub prize: f64,
    pub base: BaseService,
    pub base_stake: f64,
    pub network_stake: f64,
    /// Degree of the network without the base service.
    pub degree: f64,
    pub fractions: Vec<f64>,
}

/// Minimum stake from the mixed-integer programs, optionally next to the
/// symmetric closed form with an agreement flag per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MipSweep {
    pub validators: usize,
    pub services: usize,
    pub threshold: f64,
    #[serde(default = "one")]
    pub prize: f64,
    pub budget: f64,
    pub fractions: Vec<f64>,
    pub degrees: Vec<f64>,
    #[serde(default)]
    pub base: Option<BaseService>,
    /// Also compute the symmetric answer and compare.
    #[serde(default)]
    pub compare: bool,
}

fn one() -> f64 {
    1.0
}

/// Largest allowed disagreement between the two engines.
pub const AGREEMENT_TOLERANCE: f64 = 1e-5;

fn template(n: usize, m: usize, threshold: f64, prize: f64, degree: f64, base: Option<BaseService>) -> Template<f64> {
    let t = Template::new(n, m, threshold, prize, degree);
    match base {
        Some(b) => t.with_base(b.prize, b.threshold),
        None => t,
    }
}

pub fn sweep_min_stake_security(s: &SecuritySweep, name: &str) -> Result<Table, ExperimentError> {
    let mut header = vec!["restaking_degree".to_string()];
    header.extend(s.thresholds.iter().map(|t| format!("min_stake_threshold_{}", label(*t))));
    let rows = par_rows(&s.degrees, |&d| {
        let mut row = vec![Cell::Num(d)];
        for &t in &s.thresholds {
            let tpl = template(s.validators, s.services, t, s.prize, d, None);
            row.push(stake_cell(min_stake_for(&tpl, &Predicate::Secure))?);
        }
        Ok(row)
    })?;
    Ok(Table { name: name.into(), header, rows })
}

pub fn sweep_min_stake_robustness(s: &RobustnessSweep, name: &str) -> Result<Table, ExperimentError> {
    let mut header = vec!["restaking_degree".to_string()];
    header.extend(s.fractions.iter().map(|f| format!("min_stake_threshold_{}", label(*f))));
    let rows = par_rows(&s.degrees, |&d| {
        let tpl = template(s.validators, s.services, s.threshold, s.prize, d, s.base);
        let mut row = vec![Cell::Num(d)];
        for &f in &s.fractions {
            row.push(stake_cell(min_stake_for(&tpl, &Predicate::FBetaRobust(f, s.budget)))?);
        }
        Ok(row)
    })?;
    Ok(Table { name: name.into(), header, rows })
}

fn budget_cell(b: Option<f64>) -> Cell {
    b.map_or(Cell::Missing, Cell::Num)
}

pub fn sweep_failure_threshold(s: &FailureSweep, name: &str) -> Result<Table, ExperimentError> {
    let mut header = vec!["robustness_threshold".to_string()];
    header.extend(s.degrees.iter().map(|d| format!("min_budget_{}", label(*d))));
    let nets = s
        .degrees
        .iter()
        .map(|&d| template(s.validators, s.services, s.threshold, s.prize, d, None).symmetric(&s.stake))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = par_rows(&s.fractions, |&f| {
        let mut row = vec![Cell::Num(f)];
        for net in &nets {
            row.push(budget_cell(net.max_budget(&f)?));
        }
        Ok(row)
    })?;
    Ok(Table { name: name.into(), header, rows })
}

pub fn sweep_decomposition(s: &DecompositionSweep, name: &str) -> Result<Table, ExperimentError> {
    let header = ["robustness_threshold", "min_budget_base_only", "min_budget_no_base", "min_budget_total"]
        .map(String::from)
        .to_vec();
    let total = s.base_stake + s.network_stake;
    let base_only = template(s.validators, 0, s.threshold, s.prize, 0.0, Some(s.base)).symmetric(&s.base_stake)?;
    let no_base = template(s.validators, s.services, s.threshold, s.prize, s.degree, None).symmetric(&s.network_stake)?;
    let combined_degree = s.degree * s.network_stake / total;
    let combined =
        template(s.validators, s.services, s.threshold, s.prize, combined_degree, Some(s.base)).symmetric(&total)?;
    let rows = par_rows(&s.fractions, |&f| {
        Ok(vec![
            Cell::Num(f),
            budget_cell(base_only.max_budget(&f)?),
            budget_cell(no_base.max_budget(&f)?),
            budget_cell(combined.max_budget(&f)?),
        ])
    })?;
    Ok(Table { name: name.into(), header, rows })
}

/// Whether some admissible Byzantine set leaves a service that falls at no
/// cost. Costs scale with stake, so such a template is never robust.
fn has_free_target(tpl: &Template<f64>, fraction: f64) -> Result<bool, ExperimentError> {
    let net = tpl.network(&1.0)?;
    let cap = net.byzantine_cap(&fraction).map_err(SymmetricError::from)?;
    for byzantine in net.byzantine_subsets(&cap).map_err(SymmetricError::from)? {
        let slashed = net.apply_byzantine(&byzantine).map_err(SymmetricError::from)?;
        if (0..slashed.n_services()).any(|s| *slashed.threshold(s) == 0.0 || slashed.total_allocation(s) <= 1e-9) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Minimum stake for `(fraction, budget)`-robustness of `tpl`, decided by
/// the mixed-integer programs instead of the closed form. `None` when no
/// stake suffices.
pub fn min_stake_mip(tpl: &Template<f64>, fraction: f64, budget: f64, settings: &MipSettings) -> Result<Option<f64>, ExperimentError> {
    if has_free_target(tpl, fraction)? {
        return Ok(None);
    }
    let found = search_min_stake(tpl.stake_upper_bound(), |stake: &f64| -> Result<bool, ExperimentError> {
        if *stake <= 0.0 {
            return Ok(false);
        }
        let net = tpl.network(stake)?;
        Ok(is_f_beta_robust_mip(&net, &fraction, &budget, settings)?)
    });
    match found {
        Ok(x) => Ok(Some(x)),
        Err(ExperimentError::Symmetric(SymmetricError::Unsatisfiable { .. })) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn sweep_mip_vs_theory(s: &MipSweep, name: &str) -> Result<Table, ExperimentError> {
    if s.compare && s.base.is_some_and(|b| b.threshold != s.threshold) {
        return Err(ExperimentError::Config(
            "the closed form needs the base service to share the common threshold".into(),
        ));
    }
    let mut header = vec!["restaking_degree".to_string()];
    if s.compare {
        header.extend(s.fractions.iter().map(|f| format!("min_stake_threshold_{f:?}_with_milp")));
        header.extend(s.fractions.iter().map(|f| format!("min_stake_threshold_{f:?}_without_milp")));
        header.push("agree".into());
    } else {
        header.extend(s.fractions.iter().map(|f| format!("min_stake_threshold_{}", label(*f))));
    }
    let settings = MipSettings::default();
    let rows = par_rows(&s.degrees, |&d| {
        let tpl = template(s.validators, s.services, s.threshold, s.prize, d, s.base);
        let mut mip = Vec::new();
        for &f in &s.fractions {
            mip.push(min_stake_mip(&tpl, f, s.budget, &settings)?);
        }
        let mut row = vec![Cell::Num(d)];
        row.extend(mip.iter().map(|x| budget_cell(*x)));
        if s.compare {
            let mut agree = true;
            for (&f, m) in s.fractions.iter().zip(&mip) {
                let theory = min_stake_for(&tpl, &Predicate::FBetaRobust(f, s.budget));
                let cell = stake_cell(theory)?;
                agree &= match (m, cell.num()) {
                    (Some(a), Some(b)) => (a - b).abs() <= AGREEMENT_TOLERANCE,
                    (None, None) => true,
                    _ => false,
                };
                row.push(cell);
            }
            row.push(Cell::Flag(agree));
        }
        Ok(row)
    })?;
    Ok(Table { name: name.into(), header, rows })
}

/// A single custom sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sweep {
    Security(SecuritySweep),
    Robustness(RobustnessSweep),
    FailureThreshold(FailureSweep),
    Decomposition(DecompositionSweep),
    Mip(MipSweep),
}

impl Sweep {
    pub fn run(&self, name: &str) -> Result<Table, ExperimentError> {
        match self {
            Sweep::Security(s) => sweep_min_stake_security(s, name),
            Sweep::Robustness(s) => sweep_min_stake_robustness(s, name),
            Sweep::FailureThreshold(s) => sweep_failure_threshold(s, name),
            Sweep::Decomposition(s) => sweep_decomposition(s, name),
            Sweep::Mip(s) => sweep_mip_vs_theory(s, name),
        }
    }
}

/// An entry of the `sweeps` array in a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "lowercase")]
pub enum SweepConfig {
    Fig3 {
        #[serde(default)]
        degree_step: Option<f64>,
    },
    Fig4 {
        #[serde(default)]
        degree_step: Option<f64>,
    },
    Fig5,
    Fig6,
    Fig7 {
        #[serde(default)]
        degree_step: Option<f64>,
    },
    Fig8 {
        #[serde(default)]
        degree_step: Option<f64>,
    },
    Custom {
        name: String,
        sweep: Sweep,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub sweeps: Vec<SweepConfig>,
}

const DEFAULT_DEGREE_STEP: f64 = 0.1;

/// Stake per validator in the failure-threshold preset.
pub const FAILURE_PRESET_STAKE: f64 = 10.0;
/// Stakes of the decomposition preset: base alone, network alone.
pub const DECOMPOSITION_STAKES: (f64, f64) = (2.4, 5.4);
/// Degree at which the network alone needs 5.4 for `(1/3, 2)`-robustness.
pub const DECOMPOSITION_DEGREE: f64 = 5.0 / 3.0;

impl SweepConfig {
    /// Named sweeps this entry expands to.
    pub fn expand(&self) -> Vec<(String, Sweep)> {
        let third = 1.0 / 3.0;
        match self {
            SweepConfig::Fig3 { degree_step } => [10, 11, 12]
                .into_iter()
                .map(|n| {
                    let s = SecuritySweep {
                        validators: n,
                        services: n,
                        thresholds: vec![third, 0.5],
                        prize: 1.0,
                        degrees: grid(1.0, n as f64, degree_step.unwrap_or(DEFAULT_DEGREE_STEP)),
                    };
                    (format!("figure3_n{n}"), Sweep::Security(s))
                })
                .collect(),
            SweepConfig::Fig4 { degree_step } => {
                let mut out = Vec::new();
                for base in [None, Some(BaseService { prize: 10.0, threshold: third })] {
                    for budget in [0.0, 1.0, 2.0] {
                        let s = RobustnessSweep {
                            validators: 15,
                            services: 15,
                            threshold: third,
                            prize: 1.0,
                            budget,
                            fractions: fraction_grid(15, 9),
                            degrees: grid(1.0, 6.0, degree_step.unwrap_or(DEFAULT_DEGREE_STEP)),
                            base,
                        };
                        let name = match base {
                            None => format!("figure4_y_stake_budget_{budget}"),
                            Some(_) => format!("figure4_y_stake_budget_{budget}_base_service_10_0.33"),
                        };
                        out.push((name, Sweep::Robustness(s)));
                    }
                }
                out
            }
            SweepConfig::Fig5 => vec![(
                "figure5".into(),
                Sweep::FailureThreshold(FailureSweep {
                    validators: 15,
                    services: 15,
                    threshold: third,
                    prize: 1.0,
                    stake: FAILURE_PRESET_STAKE,
                    degrees: grid(1.0, 3.0, 0.25),
                    fractions: fraction_grid(15, 12),
                }),
            )],
            SweepConfig::Fig6 => vec![(
                "figure6".into(),
                Sweep::Decomposition(DecompositionSweep {
                    validators: 15,
                    services: 15,
                    threshold: third,
                    prize: 1.0,
                    base: BaseService { prize: 10.0, threshold: third },
                    base_stake: DECOMPOSITION_STAKES.0,
                    network_stake: DECOMPOSITION_STAKES.1,
                    degree: DECOMPOSITION_DEGREE,
                    fractions: fraction_grid(15, 9),
                }),
            )],
            SweepConfig::Fig7 { degree_step } => [0.0, 1.0, 2.0]
                .into_iter()
                .map(|budget| {
                    let s = MipSweep {
                        validators: 3,
                        services: 3,
                        threshold: third,
                        prize: 1.0,
                        budget,
                        // Written as complements so labels match the reference data files.
                        fractions: vec![0.0, 1.0 - 2.0 / 3.0, 1.0 - 1.0 / 3.0],
                        degrees: grid(1.0, 3.0, degree_step.unwrap_or(DEFAULT_DEGREE_STEP)),
                        base: None,
                        compare: true,
                    };
                    (format!("figure7_budget_{budget}"), Sweep::Mip(s))
                })
                .collect(),
            SweepConfig::Fig8 { degree_step } => [0.0, 1.0, 2.0]
                .into_iter()
                .map(|budget| {
                    let s = MipSweep {
                        validators: 3,
                        services: 3,
                        threshold: third,
                        prize: 1.0,
                        budget,
                        fractions: fraction_grid(3, 3),
                        degrees: grid(1.0, 3.0, degree_step.unwrap_or(DEFAULT_DEGREE_STEP)),
                        base: Some(BaseService { prize: 10.0, threshold: 0.5 }),
                        compare: false,
                    };
                    (format!("figure8_y_stake_base_service_10_0.50_loss_threshold_{budget}"), Sweep::Mip(s))
                })
                .collect(),
            SweepConfig::Custom { name, sweep } => vec![(name.clone(), sweep.clone())],
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de)
            .map_err(|e| ExperimentError::Config(format!("at `{}`: {}", e.path(), e.inner())))
    }

    /// Runs every sweep in order.
    pub fn run(&self) -> Result<Vec<Table>, ExperimentError> {
        self.sweeps
            .iter()
            .flat_map(SweepConfig::expand)
            .map(|(name, sweep)| sweep.run(&name))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Option<f64>, b: f64, tol: f64) -> bool {
        a.is_some_and(|a| (a - b).abs() <= tol)
    }

    #[test]
    fn grids_are_clean() {
        assert_eq!(grid(1.0, 1.5, 0.1), vec![1.0, 1.1, 1.2, 1.3, 1.4, 1.5]);
        assert_eq!(grid(1.0, 3.0, 0.25).len(), 9);
        assert_eq!(label(fraction_grid(15, 9)[1]), "0.07");
    }

    #[test]
    fn security_rows() {
        let s = SecuritySweep {
            validators: 10,
            services: 10,
            thresholds: vec![1.0 / 3.0, 0.5],
            prize: 1.0,
            degrees: vec![1.0, 3.0, 7.5],
        };
        let t = sweep_min_stake_security(&s, "x").unwrap();
        assert_eq!(t.header, ["restaking_degree", "min_stake_threshold_0.33", "min_stake_threshold_0.50"]);
        let third = t.column("min_stake_threshold_0.33").unwrap();
        assert!(close(third[0], 3.0, 1e-5) && close(third[1], 2.5, 1e-5) && close(third[2], 2.5, 1e-5));
        assert!(t.column("min_stake_threshold_0.50").unwrap().iter().all(|x| close(*x, 2.0, 1e-5)));
    }

    #[test]
    fn non_integer_threshold_count_bends_the_curve() {
        let s = SecuritySweep {
            validators: 11,
            services: 11,
            thresholds: vec![1.0 / 3.0],
            prize: 1.0,
            degrees: grid(1.0, 11.0, 0.5),
        };
        let col: Vec<f64> = sweep_min_stake_security(&s, "x").unwrap().column("min_stake_threshold_0.33").unwrap().into_iter().flatten().collect();
        assert!(col.iter().any(|x| (x - col[0]).abs() > 1e-3));
    }

    #[test]
    fn zero_budget_zero_fraction_reduces_to_security() {
        let degrees = grid(1.0, 6.0, 0.5);
        let sec = sweep_min_stake_security(
            &SecuritySweep { validators: 15, services: 15, thresholds: vec![1.0 / 3.0], prize: 1.0, degrees: degrees.clone() },
            "a",
        )
        .unwrap();
        let rob = sweep_min_stake_robustness(
            &RobustnessSweep {
                validators: 15,
                services: 15,
                threshold: 1.0 / 3.0,
                prize: 1.0,
                budget: 0.0,
                fractions: vec![0.0],
                degrees,
                base: None,
            },
            "b",
        )
        .unwrap();
        assert_eq!(sec.rows, rob.rows);
    }

    #[test]
    fn base_service_numbers() {
        let third = 1.0 / 3.0;
        let run = |base, budget, fraction: f64, degrees: Vec<f64>| {
            let s = RobustnessSweep {
                validators: 15,
                services: 15,
                threshold: third,
                prize: 1.0,
                budget,
                fractions: vec![fraction],
                degrees,
                base,
            };
            sweep_min_stake_robustness(&s, "x").unwrap().rows.iter().filter_map(|r| r[1].num()).collect::<Vec<_>>()
        };
        let base = Some(BaseService { prize: 10.0, threshold: third });
        let with = run(base, 0.0, 0.0, vec![1.0]);
        let without = run(None, 0.0, 0.0, vec![1.0]);
        assert!((with[0] - without[0] - 2.0).abs() < 1e-3, "{with:?} {without:?}");

        // The optima sit where the single-service and all-services constraints
        // meet: degree 5/3 without the base service and 9/7.4 with it.
        let mut degrees = grid(1.0, 3.0, 0.05);
        degrees.extend([5.0 / 3.0, 9.0 / 7.4]);
        let best_without = run(None, 2.0, third, degrees.clone()).into_iter().fold(f64::INFINITY, f64::min);
        let best_with = run(base, 2.0, third, degrees).into_iter().fold(f64::INFINITY, f64::min);
        assert!((best_without - 5.4).abs() < 1e-3, "{best_without}");
        assert!((best_with - 7.4).abs() < 1e-3, "{best_with}");
        assert!(best_with < best_without + 2.4);
    }

    #[test]
    fn decomposition_columns() {
        let table = Config { sweeps: vec![SweepConfig::Fig6] }.run().unwrap().remove(0);
        assert_eq!(table.name, "figure6");
        let base_only = table.column("min_budget_base_only").unwrap();
        let total = table.column("min_budget_total").unwrap();
        assert!(base_only.iter().all(|b| close(*b, 2.0, 1e-9)));
        assert!(total[0].unwrap() >= base_only[0].unwrap());
        let no_base = table.column("min_budget_no_base").unwrap();
        // (1/3, 2)-robust at 5.4, so the budget just reaches 2 at f = 1/3.
        assert!(close(no_base[5], 2.0, 1e-6), "{no_base:?}");
    }

    #[test]
    fn failure_threshold_is_a_non_increasing_step_function() {
        let table = Config { sweeps: vec![SweepConfig::Fig5] }.run().unwrap().remove(0);
        for d in grid(1.0, 3.0, 0.25) {
            let col: Vec<f64> = table.column(&format!("min_budget_{}", label(d))).unwrap().into_iter().flatten().collect();
            assert!(col.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{d}: {col:?}");
        }
    }

    #[test]
    fn mip_columns_agree_with_closed_form() {
        let s = MipSweep {
            validators: 3,
            services: 3,
            threshold: 1.0 / 3.0,
            prize: 1.0,
            budget: 1.0,
            fractions: vec![0.0, 1.0 - 2.0 / 3.0],
            degrees: vec![1.0, 2.5],
            base: None,
            compare: true,
        };
        let t = sweep_mip_vs_theory(&s, "x").unwrap();
        assert_eq!(t.header[1], "min_stake_threshold_0.0_with_milp");
        assert_eq!(t.header[2], "min_stake_threshold_0.33333333333333337_with_milp");
        assert!(t.rows.iter().all(|r| r.last() == Some(&Cell::Flag(true))), "{:?}", t.rows);
    }

    #[test]
    fn one_third_and_one_half_coincide_with_a_base_service() {
        let s = MipSweep {
            validators: 3,
            services: 3,
            threshold: 1.0 / 3.0,
            prize: 1.0,
            budget: 1.0,
            fractions: vec![1.0 / 3.0, 0.5],
            degrees: vec![1.0, 1.5],
            base: Some(BaseService { prize: 10.0, threshold: 0.5 }),
            compare: false,
        };
        let t = sweep_mip_vs_theory(&s, "x").unwrap();
        for row in &t.rows {
            assert_eq!(row[1], row[2]);
        }
        assert!((t.rows[0][1].num().unwrap() - 13.0).abs() < 1e-5);
    }

    #[test]
    fn presets_expand_to_expected_file_names() {
        let names = |c: SweepConfig| c.expand().into_iter().map(|(n, _)| n).collect::<Vec<_>>();
        assert_eq!(names(SweepConfig::Fig3 { degree_step: None }), ["figure3_n10", "figure3_n11", "figure3_n12"]);
        assert!(names(SweepConfig::Fig4 { degree_step: None }).contains(&"figure4_y_stake_budget_2_base_service_10_0.33".to_string()));
        assert_eq!(names(SweepConfig::Fig7 { degree_step: None })[0], "figure7_budget_0");
        assert_eq!(
            names(SweepConfig::Fig8 { degree_step: None })[1],
            "figure8_y_stake_base_service_10_0.50_loss_threshold_1"
        );
    }

    #[test]
    fn config_parsing() {
        let c = Config::parse(r#"{"sweeps": [{"preset": "fig3", "degree_step": 1.0}, {"preset": "fig5"},
            {"preset": "custom", "name": "mine", "sweep": {"kind": "security", "validators": 4, "services": 4,
             "thresholds": [0.5], "degrees": [1, 2]}}]}"#)
        .unwrap();
        assert_eq!(c.sweeps.len(), 3);
        let err = Config::parse(r#"{"sweeps": [{"preset": "fig9"}]}"#).unwrap_err();
        assert!(err.to_string().contains("sweeps[0]"), "{err}");
        assert!(Config::parse("{}").unwrap().run().unwrap().is_empty());
    }

    #[test]
    fn csv_output() {
        let dir = tempfile::tempdir().unwrap();
        let t = Table {
            name: "t".into(),
            header: vec!["a".into(), "b".into(), "c".into()],
            rows: vec![vec![Cell::Num(1.0), Cell::Missing, Cell::Flag(true)]],
        };
        let path = t.write_csv(dir.path()).unwrap();
        assert_eq!(std::fs::read_to_string(path).unwrap(), "a,b,c\n1.000000,,true\n");
    }
}
