//! Instance files handed to the reference solver, and the golden records it
//! returns.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ci::{sinr, solve_interf_min, solve_power_min_checked, CiProblem, LinkBudget};
use crate::error::{Error, Result};
use crate::harness::config::SolverConfig;
use crate::linalg::{dot_t, CMatrix, CVector};
use crate::robust::{solve_robust, RobustCiProblem};
use crate::scene::{ChannelSet, ErrorBounds, SymbolSlot};

/// Problem family of an instance or record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemTag {
    /// Block-level power minimisation (classical SINR).
    P0,
    /// Block-level interference minimisation.
    P1,
    /// CI power minimisation.
    P3,
    /// CI interference minimisation.
    P4,
    /// Worst-case robust block-level power minimisation.
    P11,
    /// Worst-case robust CI power minimisation.
    P13,
}

impl ProblemTag {
    /// Block-level problems are solved only by the reference side.
    pub fn is_block_level(self) -> bool {
        matches!(self, ProblemTag::P0 | ProblemTag::P1 | ProblemTag::P11)
    }

    /// CI problem with the same constraints and objective.
    pub fn ci_counterpart(self) -> ProblemTag {
        match self {
            ProblemTag::P0 | ProblemTag::P3 => ProblemTag::P3,
            ProblemTag::P1 | ProblemTag::P4 => ProblemTag::P4,
            ProblemTag::P11 | ProblemTag::P13 => ProblemTag::P13,
        }
    }

    pub fn minimises_power(self) -> bool {
        !matches!(self, ProblemTag::P1 | ProblemTag::P4)
    }
}

impl fmt::Display for ProblemTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSeeds {
    pub channels: u64,
    pub symbols: u64,
}

/// Everything needed to rebuild one problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub problem: ProblemTag,
    pub seeds: InstanceSeeds,
    pub channels: ChannelSet,
    pub budget: LinkBudget,
    pub slot: SymbolSlot,
    /// Transmit power budget for interference minimisation, mW.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_budget_mw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<ErrorBounds>,
}

impl Instance {
    /// Lowercase hex SHA-256 of the compact JSON serialisation.
    pub fn hash(&self) -> Result<String> {
        let bytes = serde_json::to_vec(self)?;
        Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
    }

    /// Write `{"instance_hash": .., "instance": ..}`; the reference solver
    /// echoes the hash into its golden record.
    pub fn write(&self, path: &Path) -> Result<()> {
        let file = InstanceFile { instance_hash: self.hash()?, instance: self.clone() };
        std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if file.instance.hash()? != file.instance_hash {
            return Err(Error::InvalidArgument(format!("{}: instance hash mismatch", path.display())));
        }
        Ok(file.instance)
    }

    fn power_budget(&self) -> Result<f64> {
        self.power_budget_mw
            .ok_or_else(|| Error::InvalidArgument(format!("instance {} has no power budget", self.id)))
    }

    /// Solve the CI counterpart of this instance; returns the objective and
    /// the slot precoding vector `w`.
    pub fn solve_ci(&self, solver: &SolverConfig) -> Result<(f64, CVector)> {
        match self.problem.ci_counterpart() {
            ProblemTag::P3 => {
                let p = CiProblem::build(&self.channels, &self.slot, &self.budget)?;
                let out = solve_power_min_checked(&p, &solver.gp, &solver.engine)?;
                if !out.converged {
                    return Err(Error::MaxIterations { iterations: out.dual.iterations, residual: out.dual.residual });
                }
                Ok((out.solution.power, out.solution.w))
            }
            ProblemTag::P4 => {
                let p = CiProblem::build(&self.channels, &self.slot, &self.budget)?;
                let out = solve_interf_min(&p, self.power_budget()?, &solver.engine)?;
                Ok((out.objective, out.solution.w))
            }
            _ => {
                let bounds = self.bounds.unwrap_or_default();
                let rp = RobustCiProblem::build(&self.channels, &self.slot, &self.budget, bounds)?;
                let out = solve_robust(&rp, &solver.engine)?;
                Ok((out.solution.power, out.solution.w))
            }
        }
    }

    /// Objective of block-level precoders (columns of `t`) under this
    /// instance's problem, with the worst classical-SINR shortfall in dB
    /// (positive: target missed).
    pub fn block_objective(&self, t: &CMatrix) -> Result<(f64, f64)> {
        let (n, k) = (self.channels.n(), self.channels.k());
        if t.shape() != (n, k) {
            return Err(Error::Dimension(format!("block solution is {:?}, expected ({n}, {k})", t.shape())));
        }
        let cols: Vec<CVector> = (0..k).map(|i| t.column(i).into_owned()).collect();
        let objective = if self.problem.minimises_power() {
            cols.iter().map(|c| c.norm_squared()).sum()
        } else {
            (0..self.channels.m())
                .map(|m| {
                    let g = self.channels.g_col(m);
                    cols.iter().map(|c| dot_t(&g, c).norm_sqr()).sum::<f64>()
                })
                .sum()
        };
        let shortfall = (0..k)
            .map(|i| self.budget.gamma_db[i] - crate::units::linear_to_db(sinr(&self.channels, &self.budget, &cols, i)))
            .fold(f64::NEG_INFINITY, f64::max);
        Ok((objective, shortfall))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub instance_hash: String,
    pub instance: Instance,
}

/// Reference solver output for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenRecord {
    pub instance: Instance,
    pub problem: ProblemTag,
    pub instance_hash: String,
    pub objective: Option<f64>,
    /// `w` as an N×1 matrix for CI problems, the N×K precoders otherwise.
    #[serde(default, with = "opt_cmatrix")]
    pub solution: Option<CMatrix>,
    pub status: String,
    #[serde(default)]
    pub randomizations: Option<u32>,
    /// Solver name and version, opaque here.
    #[serde(default)]
    pub solver: Option<String>,
}

mod opt_cmatrix {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrapped(#[serde(with = "crate::json::cmatrix")] CMatrix);

    pub fn serialize<S: Serializer>(m: &Option<CMatrix>, s: S) -> std::result::Result<S::Ok, S::Error> {
        m.clone().map(Wrapped).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<CMatrix>, D::Error> {
        Ok(Option::<Wrapped>::deserialize(d)?.map(|w| w.0))
    }
}

impl GoldenRecord {
    pub fn is_optimal(&self) -> bool {
        self.status.eq_ignore_ascii_case("optimal")
    }
}

/// Load golden records from a file (one record or an array) or from every
/// `.json` file in a directory, in file-name order.
pub fn load_golden(path: &Path) -> Result<Vec<GoldenRecord>> {
    if path.is_dir() {
        let mut files: Vec<_> = std::fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        let mut out = Vec::new();
        for f in files {
            out.extend(load_golden(&f)?);
        }
        return Ok(out);
    }
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    match v {
        serde_json::Value::Array(items) => {
            items.into_iter().map(|x| serde_json::from_value(x).map_err(Error::from)).collect()
        }
        other => Ok(vec![serde_json::from_value(other)?]),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub id: String,
    pub problem: ProblemTag,
    pub hash_ok: bool,
    pub oracle_status: String,
    pub oracle_objective: Option<f64>,
    /// Primary objective: the CI solve for CI records, the recomputed
    /// objective of the golden precoders for block-level records.
    pub primary_objective: Option<f64>,
    pub abs_diff: Option<f64>,
    pub rel_diff: Option<f64>,
    /// CI counterpart objective for block-level records.
    pub ci_objective: Option<f64>,
    /// Worst SINR shortfall of block-level golden precoders, dB.
    pub sinr_shortfall_db: Option<f64>,
    pub pass: bool,
}

pub fn compare(record: &GoldenRecord, solver: &SolverConfig, power_tol_mw: f64, rel_tol: f64) -> Result<Comparison> {
    let inst = &record.instance;
    let hash_ok = inst.hash()? == record.instance_hash && inst.problem == record.problem;
    let mut cmp = Comparison {
        id: inst.id.clone(),
        problem: record.problem,
        hash_ok,
        oracle_status: record.status.clone(),
        oracle_objective: record.objective,
        primary_objective: None,
        abs_diff: None,
        rel_diff: None,
        ci_objective: None,
        sinr_shortfall_db: None,
        pass: false,
    };
    let primary = if record.problem.is_block_level() {
        cmp.ci_objective = match inst.solve_ci(solver) {
            Ok((obj, _)) => Some(obj),
            Err(e) if e.is_infeasible() => None,
            Err(e) => return Err(e),
        };
        match &record.solution {
            Some(t) => {
                let (obj, shortfall) = inst.block_objective(t)?;
                cmp.sinr_shortfall_db = Some(shortfall);
                Some(obj)
            }
            None => None,
        }
    } else {
        match inst.solve_ci(solver) {
            Ok((obj, _)) => Some(obj),
            Err(e) if e.is_infeasible() => None,
            Err(e) => return Err(e),
        }
    };
    cmp.primary_objective = primary;
    cmp.pass = hash_ok
        && match (record.is_optimal(), record.objective, primary) {
            (true, Some(oracle), Some(ours)) => {
                let abs = (ours - oracle).abs();
                let rel = abs / oracle.abs().max(f64::MIN_POSITIVE);
                cmp.abs_diff = Some(abs);
                cmp.rel_diff = Some(rel);
                if record.problem == ProblemTag::P3 {
                    abs <= power_tol_mw
                } else {
                    rel <= rel_tol
                }
            }
            // both sides agree there is no solution
            (false, _, None) => record.status.to_ascii_lowercase().contains("infeasible"),
            _ => false,
        };
    Ok(cmp)
}
