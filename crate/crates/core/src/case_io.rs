//! MATPOWER case files and the validated network model built from them.
//!
//! Only the DC-relevant columns are interpreted; every other number is kept
//! in [`RawCase`] so the matrices survive a parse/write round trip.
//!
//! Branch ordinals are the 1-based row positions in `mpc.branch`, which is
//! how the detector reports refer to branches ("branch 118" is the 118th
//! row of the file).

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CaseError;

pub mod col {
    //! Zero-based MATPOWER column positions.
    pub const BUS_I: usize = 0;
    pub const BUS_TYPE: usize = 1;
    pub const PD: usize = 2;
    pub const GEN_BUS: usize = 0;
    pub const PG: usize = 1;
    pub const GEN_STATUS: usize = 7;
    pub const PMAX: usize = 8;
    pub const PMIN: usize = 9;
    pub const F_BUS: usize = 0;
    pub const T_BUS: usize = 1;
    pub const BR_X: usize = 3;
    pub const RATE_A: usize = 5;
    pub const BR_STATUS: usize = 10;
    pub const COST_MODEL: usize = 0;
    pub const NCOST: usize = 3;
    pub const COST: usize = 4;

    pub const BUS_MIN_WIDTH: usize = 13;
    pub const BRANCH_MIN_WIDTH: usize = 13;
    pub const GEN_MIN_WIDTH: usize = 10;
    pub const GENCOST_MIN_WIDTH: usize = 5;

    pub const REF_BUS_TYPE: f64 = 3.0;
}

/// Numeric content of a case file, exactly as read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCase {
    pub base_mva: f64,
    pub bus: Vec<Vec<f64>>,
    pub gen: Vec<Vec<f64>>,
    pub branch: Vec<Vec<f64>>,
    pub gencost: Vec<Vec<f64>>,
}

impl RawCase {
    /// Generator rows with a positive status flag.
    pub fn in_service_gen_rows(&self) -> usize {
        self.gen.iter().filter(|g| g[col::GEN_STATUS] > 0.0).count()
    }

    pub fn total_load_mw(&self) -> f64 {
        self.bus.iter().map(|b| b[col::PD]).sum()
    }

    /// Writes the case back in MATPOWER syntax. Values are printed with
    /// shortest round-trip formatting so re-parsing is value-identical.
    pub fn to_matpower(&self, name: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "function mpc = {name}");
        let _ = writeln!(out, "mpc.version = '2';");
        let _ = writeln!(out, "mpc.baseMVA = {};", self.base_mva);
        for (block, rows) in [
            ("bus", &self.bus),
            ("gen", &self.gen),
            ("branch", &self.branch),
            ("gencost", &self.gencost),
        ] {
            let _ = writeln!(out, "\nmpc.{block} = [");
            for row in rows {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
                let _ = writeln!(out, "\t{};", cells.join("\t"));
            }
            let _ = writeln!(out, "];");
        }
        out
    }
}

struct Block {
    name: String,
    rows: Vec<(usize, Vec<f64>)>,
}

fn strip_comment(line: &str) -> &str {
    match line.find('%') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_numbers(segment: &str, line: usize) -> Result<Vec<f64>, CaseError> {
    segment
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>().map_err(|_| CaseError::Parse {
                line,
                message: format!("not a number: {t:?}"),
            })
        })
        .collect()
}

/// Parses MATPOWER `.m` case text.
pub fn parse_matpower(text: &str) -> Result<RawCase, CaseError> {
    let mut base_mva = None;
    let mut blocks: HashMap<String, Block> = HashMap::new();
    let mut open: Option<(Block, usize, bool)> = None;

    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let mut line = strip_comment(raw_line).trim();

        if open.is_none() {
            if line.is_empty() {
                continue;
            }
            let Some(rest) = line.strip_prefix("mpc.") else {
                continue;
            };
            let Some((name, value)) = rest.split_once('=') else {
                continue;
            };
            let name = name.trim().to_string();
            let value = value.trim();
            if let Some(body) = value.strip_prefix('[') {
                let numeric = matches!(name.as_str(), "bus" | "gen" | "branch" | "gencost");
                open = Some((
                    Block {
                        name,
                        rows: Vec::new(),
                    },
                    line_no,
                    numeric,
                ));
                line = body;
            } else if value.starts_with('{') {
                // Cell arrays (bus names and the like) are not needed.
                if !value.contains('}') {
                    open = Some((
                        Block {
                            name: String::new(),
                            rows: Vec::new(),
                        },
                        line_no,
                        false,
                    ));
                    line = "";
                } else {
                    continue;
                }
            } else {
                if name == "baseMVA" {
                    let v = value.trim_end_matches(';').trim();
                    base_mva = Some(v.parse::<f64>().map_err(|_| CaseError::Parse {
                        line: line_no,
                        message: format!("baseMVA is not a number: {v:?}"),
                    })?);
                }
                continue;
            }
        }

        let (block, _, numeric) = open.as_mut().expect("inside a block");
        let (content, closes) = match line.find([']', '}']) {
            Some(pos) => (&line[..pos], true),
            None => (line, false),
        };
        if *numeric {
            for segment in content.split(';') {
                let values = parse_numbers(segment, line_no)?;
                if !values.is_empty() {
                    block.rows.push((line_no, values));
                }
            }
        }
        if closes {
            let (block, _, numeric) = open.take().expect("inside a block");
            if numeric {
                blocks.insert(block.name.clone(), block);
            }
        }
    }

    if let Some((block, start, _)) = open {
        return Err(CaseError::Parse {
            line: start,
            message: format!("matrix block mpc.{} is never closed", block.name),
        });
    }

    let base_mva =
        base_mva.ok_or_else(|| CaseError::Structure("missing scalar mpc.baseMVA".into()))?;
    if !(base_mva > 0.0) {
        return Err(CaseError::Data(format!(
            "baseMVA must be positive, got {base_mva}"
        )));
    }

    let mut take = |name: &str, min_width: usize| -> Result<Vec<Vec<f64>>, CaseError> {
        let block = blocks
            .remove(name)
            .ok_or_else(|| CaseError::Structure(format!("missing matrix block mpc.{name}")))?;
        let Some((first_line, first)) = block.rows.first() else {
            return Err(CaseError::Structure(format!(
                "matrix block mpc.{name} is empty"
            )));
        };
        let width = first.len();
        if width < min_width {
            return Err(CaseError::Parse {
                line: *first_line,
                message: format!(
                    "mpc.{name} rows need at least {min_width} columns, found {width}"
                ),
            });
        }
        for (line, row) in &block.rows {
            if row.len() != width {
                return Err(CaseError::Parse {
                    line: *line,
                    message: format!(
                        "ragged row in mpc.{name}: {} values where {width} expected",
                        row.len()
                    ),
                });
            }
        }
        Ok(block.rows.into_iter().map(|(_, r)| r).collect())
    };

    let bus = take("bus", col::BUS_MIN_WIDTH)?;
    let gen = take("gen", col::GEN_MIN_WIDTH)?;
    let branch = take("branch", col::BRANCH_MIN_WIDTH)?;
    let gencost = take("gencost", col::GENCOST_MIN_WIDTH)?;

    Ok(RawCase {
        base_mva,
        bus,
        gen,
        branch,
        gencost,
    })
}

pub fn read_case(path: impl AsRef<Path>) -> crate::Result<RawCase> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_matpower(&text)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub external_id: u32,
    pub index: usize,
    pub load_mw: f64,
    pub is_load_bus: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    /// 1-based row position in the case file.
    pub ordinal: usize,
    /// Position among in-service branches.
    pub index: usize,
    pub from: usize,
    pub to: usize,
    /// Series reactance, p.u.
    pub reactance: f64,
    pub limit_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub bus: usize,
    pub p_min_mw: f64,
    pub p_max_mw: f64,
    /// $/MWh.
    pub linear_cost: f64,
}

/// Validated DC network. Only in-service branches and generators appear in
/// `branches`/`generators`; their `index` fields are contiguous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
    pub reference_bus: usize,
    /// Ordinals of branches removed from the model.
    pub out_of_service: Vec<usize>,
}

impl Network {
    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    pub fn loads_mw(&self) -> Vec<f64> {
        self.buses.iter().map(|b| b.load_mw).collect()
    }

    pub fn total_load_mw(&self) -> f64 {
        self.buses.iter().map(|b| b.load_mw).sum()
    }

    pub fn load_buses(&self) -> Vec<usize> {
        self.buses
            .iter()
            .filter(|b| b.is_load_bus)
            .map(|b| b.index)
            .collect()
    }

    pub fn non_load_buses(&self) -> Vec<usize> {
        self.buses
            .iter()
            .filter(|b| !b.is_load_bus)
            .map(|b| b.index)
            .collect()
    }

    /// Internal index of the in-service branch with this file ordinal.
    pub fn branch_index(&self, ordinal: usize) -> Option<usize> {
        self.branches.iter().position(|b| b.ordinal == ordinal)
    }

    pub fn bus_index(&self, external_id: u32) -> Option<usize> {
        self.buses.iter().position(|b| b.external_id == external_id)
    }

    pub fn limits_pu(&self) -> Vec<f64> {
        self.branches
            .iter()
            .map(|b| b.limit_mw / self.base_mva)
            .collect()
    }

    /// Total online generation capacity, MW.
    pub fn capacity_mw(&self) -> f64 {
        self.generators.iter().map(|g| g.p_max_mw).sum()
    }

    /// Spreads per-generator outputs onto buses.
    pub fn gen_by_bus<T: crate::Scalar>(&self, outputs: &[T]) -> Vec<T> {
        let mut per_bus = vec![T::zero(); self.bus_count()];
        for (g, p) in self.generators.iter().zip(outputs) {
            per_bus[g.bus] = per_bus[g.bus].clone() + p.clone();
        }
        per_bus
    }

    /// Number of connected components of the in-service graph.
    pub fn island_count(&self) -> usize {
        island_count(
            self.bus_count(),
            self.branches.iter().map(|b| (b.from, b.to)),
        )
    }
}

fn island_count(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut islands = n;
    for (a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            islands -= 1;
        }
    }
    islands
}

fn linear_cost(row: &[f64], line: usize) -> Result<f64, CaseError> {
    let model = row[col::COST_MODEL];
    let n = row[col::NCOST] as usize;
    let coeffs = row.get(col::COST..col::COST + if model == 1.0 { 2 * n } else { n });
    let Some(coeffs) = coeffs else {
        return Err(CaseError::Data(format!(
            "gencost row {line} declares {n} terms but has {} columns",
            row.len()
        )));
    };
    match model as i64 {
        // Polynomial, highest order first: the first-order term is second to last.
        2 => Ok(if n >= 2 { coeffs[n - 2] } else { 0.0 }),
        // Piecewise linear: mean slope across the breakpoints.
        1 if n >= 2 => {
            let (x0, y0) = (coeffs[0], coeffs[1]);
            let (x1, y1) = (coeffs[2 * n - 2], coeffs[2 * n - 1]);
            if x1 == x0 {
                Err(CaseError::Data(format!(
                    "gencost row {line}: degenerate breakpoints"
                )))
            } else {
                Ok((y1 - y0) / (x1 - x0))
            }
        }
        _ => Err(CaseError::Data(format!(
            "gencost row {line}: unsupported cost model {model}"
        ))),
    }
}

/// Builds the validated network, removing the listed branch ordinals.
pub fn validate_case(raw: &RawCase, outaged_branches: &[usize]) -> Result<Network, CaseError> {
    let mut seen = HashMap::new();
    let mut buses = Vec::with_capacity(raw.bus.len());
    let mut reference = Vec::new();
    for (index, row) in raw.bus.iter().enumerate() {
        let id = row[col::BUS_I];
        if id < 0.0 || id.fract() != 0.0 {
            return Err(CaseError::Data(format!(
                "bus row {}: bad bus id {id}",
                index + 1
            )));
        }
        let external_id = id as u32;
        if seen.insert(external_id, index).is_some() {
            return Err(CaseError::Structure(format!(
                "duplicate bus id {external_id}"
            )));
        }
        if row[col::BUS_TYPE] == col::REF_BUS_TYPE {
            reference.push(index);
        }
        let load_mw = row[col::PD];
        buses.push(Bus {
            external_id,
            index,
            load_mw,
            is_load_bus: load_mw > 0.0,
        });
    }
    let lookup = |id: f64, what: &str| -> Result<usize, CaseError> {
        seen.get(&(id as u32))
            .copied()
            .ok_or_else(|| CaseError::Structure(format!("{what} refers to unknown bus {id}")))
    };

    let outages: BTreeSet<usize> = outaged_branches.iter().copied().collect();
    if let Some(&bad) = outages.iter().find(|&&o| o == 0 || o > raw.branch.len()) {
        return Err(CaseError::Structure(format!(
            "outage ordinal {bad} outside 1..={}",
            raw.branch.len()
        )));
    }

    let mut branches = Vec::new();
    let mut out_of_service = Vec::new();
    for (i, row) in raw.branch.iter().enumerate() {
        let ordinal = i + 1;
        if outages.contains(&ordinal) || row[col::BR_STATUS] <= 0.0 {
            out_of_service.push(ordinal);
            continue;
        }
        let from = lookup(row[col::F_BUS], &format!("branch {ordinal}"))?;
        let to = lookup(row[col::T_BUS], &format!("branch {ordinal}"))?;
        let reactance = row[col::BR_X];
        if reactance == 0.0 {
            return Err(CaseError::Data(format!(
                "branch {ordinal} has zero reactance"
            )));
        }
        let limit_mw = row[col::RATE_A];
        if !(limit_mw > 0.0) {
            return Err(CaseError::Data(format!(
                "branch {ordinal} has no positive thermal rating (rateA = {limit_mw})"
            )));
        }
        branches.push(Branch {
            ordinal,
            index: branches.len(),
            from,
            to,
            reactance,
            limit_mw,
        });
    }

    if raw.gencost.len() < raw.gen.len() {
        return Err(CaseError::Structure(format!(
            "{} generators but only {} gencost rows",
            raw.gen.len(),
            raw.gencost.len()
        )));
    }
    let mut generators = Vec::new();
    for (i, (row, cost)) in raw.gen.iter().zip(&raw.gencost).enumerate() {
        if row[col::GEN_STATUS] <= 0.0 {
            continue;
        }
        let bus = lookup(row[col::GEN_BUS], &format!("generator {}", i + 1))?;
        let (p_min_mw, p_max_mw) = (row[col::PMIN], row[col::PMAX]);
        if p_min_mw > p_max_mw {
            return Err(CaseError::Data(format!(
                "generator {} has Pmin {p_min_mw} > Pmax {p_max_mw}",
                i + 1
            )));
        }
        generators.push(Generator {
            bus,
            p_min_mw,
            p_max_mw,
            linear_cost: linear_cost(cost, i + 1)?,
        });
    }

    let reference_bus = match reference.as_slice() {
        [one] => *one,
        [] => generators
            .iter()
            .map(|g| g.bus)
            .min_by_key(|&b| buses[b].external_id)
            .ok_or_else(|| CaseError::Structure("no reference bus and no generator".into()))?,
        many => {
            return Err(CaseError::Structure(format!(
                "{} reference buses; exactly one expected",
                many.len()
            )))
        }
    };

    let network = Network {
        base_mva: raw.base_mva,
        buses,
        branches,
        generators,
        reference_bus,
        out_of_service,
    };
    let islands = network.island_count();
    if islands != 1 {
        let detail = if outages.is_empty() {
            String::new()
        } else {
            format!(" after outage of {outages:?}")
        };
        return Err(CaseError::Island { islands, detail });
    }
    Ok(network)
}

/// Reads, parses and validates a case file in one step.
pub fn load_network(path: impl AsRef<Path>, outages: &[usize]) -> crate::Result<Network> {
    let raw = read_case(path)?;
    Ok(validate_case(&raw, outages)?)
}
