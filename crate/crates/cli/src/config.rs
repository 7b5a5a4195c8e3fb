//! Experiment grid and solver settings assembled from three layers:
//! built-in defaults, an optional TOML file, and command line flags, in
//! increasing precedence.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use robsched_core::{BoundSet, BranchScheme, SolverConfig};
use serde::Deserialize;

/// The (n, m) grid an experiment command sweeps, with one seeded instance
/// per replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentGrid {
    pub n_values: Vec<usize>,
    pub m_values: Vec<usize>,
    pub replications: u64,
    pub base_seed: u64,
    /// Per-solve CPU budget in seconds; runs over it are reported with the
    /// missing-value marker.
    pub time_limit: f64,
}

impl Default for ExperimentGrid {
    /// Desk-scale grid; larger sweeps are reachable through flags or a
    /// config file. Five seeded replications per cell.
    fn default() -> Self {
        ExperimentGrid {
            n_values: vec![8, 10],
            m_values: vec![2, 3],
            replications: 5,
            base_seed: 0,
            time_limit: 60.0,
        }
    }
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_values.is_empty() || self.m_values.is_empty() {
            return Err("grid needs at least one n and one m".into());
        }
        if self.replications == 0 {
            return Err("grid needs at least one replication".into());
        }
        for &n in &self.n_values {
            for &m in &self.m_values {
                if m == 0 || n < m {
                    return Err(format!(
                        "grid cell n={n} m={m} is invalid (need n >= m >= 1)"
                    ));
                }
            }
        }
        if !self.time_limit.is_finite() || self.time_limit <= 0.0 {
            return Err("time limit must be positive".into());
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<(usize, usize)> {
        let mut cells = Vec::new();
        for &n in &self.n_values {
            for &m in &self.m_values {
                cells.push((n, m));
            }
        }
        cells
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.replications).map(|r| self.base_seed + r).collect()
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n_values: Option<Vec<usize>>,
    pub m_values: Option<Vec<usize>>,
    pub replications: Option<u64>,
    pub base_seed: Option<u64>,
    pub time_limit: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub scheme: Option<String>,
    /// Enabled upper bounds, a subset of [1, 2, 3]; empty disables all.
    pub ub: Option<Vec<u8>>,
    /// Enabled dominance rules, a subset of [1, 2].
    pub dom: Option<Vec<u8>>,
    pub frontier_cap: Option<usize>,
    pub dominance_store_cap: Option<usize>,
}

pub fn load_file(path: &Path) -> Result<FileConfig, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
}

pub fn parse_scheme(text: &str) -> Result<BranchScheme, String> {
    match text {
        "new" => Ok(BranchScheme::New),
        "naive" => Ok(BranchScheme::Naive),
        other => Err(format!("unknown scheme '{other}' (expected new or naive)")),
    }
}

/// Parses "1,2,3" style lists; "none" or an empty string disables all.
pub fn parse_toggle_list(text: &str, max: u8) -> Result<Vec<u8>, String> {
    let trimmed = text.trim();
    if trimmed.is_empty() || trimmed == "none" {
        return Ok(Vec::new());
    }
    let mut values = Vec::new();
    for part in trimmed.split(',') {
        let v: u8 = part
            .trim()
            .parse()
            .map_err(|_| format!("bad toggle '{part}' in '{text}'"))?;
        if v == 0 || v > max {
            return Err(format!("toggle {v} out of range 1..={max}"));
        }
        if !values.contains(&v) {
            values.push(v);
        }
    }
    Ok(values)
}

pub fn bound_set_from(values: &[u8]) -> Result<BoundSet, String> {
    let mut set = BoundSet::none();
    for &v in values {
        match v {
            1 => set.ub1 = true,
            2 => set.ub2 = true,
            3 => set.ub3 = true,
            other => return Err(format!("upper bound {other} out of range 1..=3")),
        }
    }
    Ok(set)
}

/// Solver settings merged from the file section and flag strings.
pub fn merge_solver(
    file: &SolverSection,
    scheme_flag: Option<&str>,
    ub_flag: Option<&str>,
    dom_flag: Option<&str>,
) -> Result<SolverConfig, String> {
    let mut config = SolverConfig::default();
    if let Some(text) = &file.scheme {
        config.scheme = parse_scheme(text)?;
    }
    if let Some(values) = &file.ub {
        config.bounds = bound_set_from(values)?;
    }
    if let Some(values) = &file.dom {
        for &v in values {
            if v == 0 || v > 2 {
                return Err(format!("dominance rule {v} out of range 1..=2"));
            }
        }
        config.dominance1 = values.contains(&1);
        config.dominance2 = values.contains(&2);
    }
    if let Some(cap) = file.frontier_cap {
        config.frontier_cap = cap;
    }
    if let Some(cap) = file.dominance_store_cap {
        config.dominance_store_cap = cap;
    }
    if let Some(text) = scheme_flag {
        config.scheme = parse_scheme(text)?;
    }
    if let Some(text) = ub_flag {
        config.bounds = bound_set_from(&parse_toggle_list(text, 3)?)?;
    }
    if let Some(text) = dom_flag {
        let values = parse_toggle_list(text, 2)?;
        config.dominance1 = values.contains(&1);
        config.dominance2 = values.contains(&2);
    }
    Ok(config)
}

/// Grid merged from the file section and flag values.
pub fn merge_grid(
    file: &GridSection,
    n_flag: &[usize],
    m_flag: &[usize],
    replications_flag: Option<u64>,
    base_seed_flag: Option<u64>,
    time_limit_flag: Option<f64>,
) -> Result<ExperimentGrid, String> {
    let mut grid = ExperimentGrid::default();
    if let Some(values) = &file.n_values {
        grid.n_values = values.clone();
    }
    if let Some(values) = &file.m_values {
        grid.m_values = values.clone();
    }
    if let Some(r) = file.replications {
        grid.replications = r;
    }
    if let Some(s) = file.base_seed {
        grid.base_seed = s;
    }
    if let Some(t) = file.time_limit {
        grid.time_limit = t;
    }
    if !n_flag.is_empty() {
        grid.n_values = n_flag.to_vec();
    }
    if !m_flag.is_empty() {
        grid.m_values = m_flag.to_vec();
    }
    if let Some(r) = replications_flag {
        grid.replications = r;
    }
    if let Some(s) = base_seed_flag {
        grid.base_seed = s;
    }
    if let Some(t) = time_limit_flag {
        grid.time_limit = t;
    }
    grid.validate()?;
    Ok(grid)
}

/// One line describing the effective solver settings, for run headers.
pub fn describe_solver(config: &SolverConfig) -> String {
    let mut out = String::new();
    let scheme = match config.scheme {
        BranchScheme::New => "new",
        BranchScheme::Naive => "naive",
    };
    write!(out, "scheme={scheme} ub=").unwrap();
    let mut any = false;
    for (on, label) in [
        (config.bounds.ub1, "1"),
        (config.bounds.ub2, "2"),
        (config.bounds.ub3, "3"),
    ] {
        if on {
            if any {
                out.push(',');
            }
            out.push_str(label);
            any = true;
        }
    }
    if !any {
        out.push_str("none");
    }
    out.push_str(" dom=");
    let mut any = false;
    for (on, label) in [(config.dominance1, "1"), (config.dominance2, "2")] {
        if on {
            if any {
                out.push(',');
            }
            out.push_str(label);
            any = true;
        }
    }
    if !any {
        out.push_str("none");
    }
    out
}
