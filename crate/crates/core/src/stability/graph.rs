use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::{linearization_from_coeffs, report_from_spectrum, spectrum, unstable_directions, Classification};
use crate::dynamics::{
    classify_state, h1_distance, integrate, lyapunov_energy, mode_stiffness, project_equilibria, GalerkinState,
    IntegrationOptions, OmegaLimit, DEFAULT_MODES, DEFAULT_OMEGA_TOL, DEFAULT_SETTLE_THRESHOLD,
};
use crate::equilibria::EquilibriumSet;
use crate::model::{ProblemSpec, Side};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOptions {
    /// Size of the `H_0^1` perturbation along each unstable direction.
    pub epsilon: f64,
    pub modes: usize,
    pub integration: IntegrationOptions,
    /// `H_0^1` distance under which the final state counts as converged.
    pub omega_tol: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            modes: DEFAULT_MODES,
            integration: IntegrationOptions {
                settle_threshold: Some(DEFAULT_SETTLE_THRESHOLD),
                ..IntegrationOptions::default()
            },
            omega_tol: DEFAULT_OMEGA_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// A connection `0 -> u_j^{+-}` that must exist; carries probe data once
    /// a probe confirms it.
    Required,
    /// Found by a probe only.
    Observed,
    /// Added by hand, for exercising the order checks.
    Injected,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeData {
    pub epsilon: f64,
    pub direction_index: usize,
    /// First sample time within `omega_tol` of the target.
    pub t_hit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Edge {
    pub src: String,
    pub dst: String,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeData>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Node {
    pub id: String,
    pub k: usize,
    pub sign: i8,
    pub d: f64,
    /// Lyapunov energy of the Galerkin projection.
    pub energy: f64,
    pub classification: Classification,
    pub unstable_count: usize,
}

/// One integration from `u* + sign * epsilon * v`.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeResult {
    pub source: String,
    pub direction_index: usize,
    pub sign: i8,
    pub eigenvalue: f64,
    /// Direction is a sine mode because the spectrum was complex.
    pub fallback: bool,
    pub omega: OmegaLimit,
    pub t_hit: Option<f64>,
    pub t_final: f64,
    /// Energy never rose along the sampled trajectory.
    pub energy_monotone: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConnectionGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    #[serde(skip)]
    pub probes: Vec<ProbeResult>,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

/// Linearizes at every equilibrium, perturbs along each real unstable
/// eigendirection in both signs and records which equilibrium the flow
/// settles on. Probes run in parallel.
pub fn probe_connections(set: &EquilibriumSet, spec: &ProblemSpec, options: &ProbeOptions) -> Result<ConnectionGraph> {
    if !(options.epsilon > 0.0 && options.epsilon.is_finite()) {
        return Err(Error::InvalidInput(format!("probe epsilon must be positive, got {}", options.epsilon)));
    }
    if options.modes == 0 {
        return Err(Error::InvalidInput("probes need at least one mode".into()));
    }
    let n = options.modes;
    let projected = project_equilibria(set, n);
    let mut nodes = Vec::with_capacity(set.len());
    let mut tasks = Vec::new();
    let mut warnings = Vec::new();
    for (entry, proj) in set.entries.iter().zip(&projected) {
        let matrix = linearization_from_coeffs(&proj.coeffs, entry.d, spec);
        let spec_result = spectrum(&matrix)?;
        let report = report_from_spectrum(proj.id.clone(), n, &spec_result);
        nodes.push(Node {
            id: proj.id.clone(),
            k: entry.k,
            sign: if entry.sign == Side::Plus { 1 } else { -1 },
            d: entry.d,
            energy: lyapunov_energy(&GalerkinState::new(proj.coeffs.clone()), spec),
            classification: report.classification,
            unstable_count: report.unstable_count,
        });
        let (directions, fallback) = match unstable_directions(&matrix) {
            Ok(dirs) => (dirs, false),
            Err(Error::InvalidInput(_)) => {
                warnings.push(format!("{}: complex spectrum, probing along sine modes", proj.id));
                let dirs = (1..=report.unstable_count)
                    .map(|j| {
                        let mut v = vec![0.0; n];
                        v[j - 1] = 1.0 / mode_stiffness(j).sqrt();
                        (spec_result.real_parts[j - 1], v)
                    })
                    .collect();
                (dirs, true)
            }
            Err(e) => return Err(e),
        };
        for (index, (mu, v)) in directions.into_iter().enumerate() {
            for sign in [1i8, -1] {
                tasks.push((proj.id.clone(), proj.coeffs.clone(), index, sign, mu, v.clone(), fallback));
            }
        }
    }

    let probes: Vec<ProbeResult> = tasks
        .into_par_iter()
        .map(|(source, base, index, sign, mu, v, fallback)| {
            let coeffs: Vec<f64> =
                base.iter().zip(&v).map(|(c, w)| c + f64::from(sign) * options.epsilon * w).collect();
            let traj = integrate(&GalerkinState::new(coeffs), spec, &options.integration)?;
            let omega = classify_state(&traj.final_state().coeffs, &projected, options.omega_tol);
            let t_hit = omega.id().and_then(|id| {
                let target = &projected.iter().find(|p| p.id == id)?.coeffs;
                traj.states
                    .iter()
                    .zip(&traj.times)
                    .find(|(s, _)| h1_distance(&s.coeffs, target) <= options.omega_tol)
                    .map(|(_, t)| *t)
            });
            Ok(ProbeResult {
                source,
                direction_index: index,
                sign,
                eigenvalue: mu,
                fallback,
                omega,
                t_hit,
                t_final: traj.final_state().time,
                energy_monotone: traj.energy_increases(options.integration.energy_tol) == 0,
            })
        })
        .collect::<Result<_>>()?;

    let mut graph = ConnectionGraph { nodes, edges: Vec::new(), probes: Vec::new(), warnings };
    graph.edges = graph
        .required_edges()
        .into_iter()
        .map(|(src, dst)| Edge { src, dst, provenance: Provenance::Required, probe: None })
        .collect();
    for p in &probes {
        match p.omega.id() {
            Some(dst) if dst != p.source => {
                let data = ProbeData {
                    epsilon: options.epsilon,
                    direction_index: p.direction_index,
                    t_hit: p.t_hit.unwrap_or(p.t_final),
                };
                match graph.edges.iter_mut().find(|e| e.src == p.source && e.dst == dst) {
                    Some(e) => {
                        e.probe.get_or_insert(data);
                    }
                    None => graph.edges.push(Edge {
                        src: p.source.clone(),
                        dst: dst.to_string(),
                        provenance: Provenance::Observed,
                        probe: Some(data),
                    }),
                }
            }
            Some(_) => graph.warnings.push(format!(
                "{} probe {}{} returned to its source",
                p.source,
                p.direction_index,
                sign_char(p.sign)
            )),
            None => graph.warnings.push(format!(
                "unresolved probe {} {}{}: {}",
                p.source,
                p.direction_index,
                sign_char(p.sign),
                p.omega
            )),
        }
    }
    graph.probes = probes;
    Ok(graph)
}

fn sign_char(sign: i8) -> char {
    if sign > 0 {
        '+'
    } else {
        '-'
    }
}

impl ConnectionGraph {
    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn has_edge(&self, src: &str, dst: &str) -> bool {
        self.edges.iter().any(|e| e.src == src && e.dst == dst)
    }

    pub fn inject_edge(&mut self, src: &str, dst: &str) -> Result<()> {
        for id in [src, dst] {
            if self.node(id).is_none() {
                return Err(Error::InvalidInput(format!("unknown equilibrium '{id}'")));
            }
        }
        self.edges.push(Edge { src: src.into(), dst: dst.into(), provenance: Provenance::Injected, probe: None });
        Ok(())
    }

    /// Edges `0 -> u_j^{+-}` expected for every non-marginal `u_j` present.
    pub fn required_edges(&self) -> Vec<(String, String)> {
        if self.node("0").is_none() {
            return Vec::new();
        }
        self.nodes
            .iter()
            .filter(|n| n.k > 0 && n.classification != Classification::Marginal)
            .map(|n| ("0".to_string(), n.id.clone()))
            .collect()
    }

    /// Required edges not confirmed by any probe.
    pub fn missing_required_edges(&self) -> Vec<(String, String)> {
        self.required_edges()
            .into_iter()
            .filter(|(s, d)| {
                !self.edges.iter().any(|e| &e.src == s && &e.dst == d && (e.probe.is_some() || e.provenance != Provenance::Required))
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph connections {\n  rankdir=TB;\n");
        for n in &self.nodes {
            let _ = writeln!(
                out,
                "  \"{}\" [label=\"{}\\nE={:.4e}\\n{}\"];",
                n.id, n.id, n.energy, n.classification
            );
        }
        for e in &self.edges {
            let style = match e.provenance {
                Provenance::Required => "bold",
                Provenance::Observed => "solid",
                Provenance::Injected => "dashed",
            };
            let _ = writeln!(out, "  \"{}\" -> \"{}\" [style={style}];", e.src, e.dst);
        }
        out.push_str("}\n");
        out
    }
}

/// Ways an edge set can contradict the gradient-like ordering of the flow.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Cycle { nodes: Vec<String> },
    EnergyNotDecreasing { src: String, dst: String, src_energy: f64, dst_energy: f64 },
    PartnerEdge { src: String, dst: String },
    ZerosIncrease { src: String, dst: String },
    EdgeIntoZero { src: String },
    IndexNotDecreasing { src: String, dst: String },
    UnknownNode { id: String },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Cycle { nodes } => write!(f, "cycle {}", nodes.join(" -> ")),
            Violation::EnergyNotDecreasing { src, dst, src_energy, dst_energy } => {
                write!(f, "edge {src} -> {dst} does not lower the energy ({src_energy:.6e} -> {dst_energy:.6e})")
            }
            Violation::PartnerEdge { src, dst } => write!(f, "edge {src} -> {dst} joins a symmetric pair"),
            Violation::ZerosIncrease { src, dst } => write!(f, "edge {src} -> {dst} increases the zero count"),
            Violation::EdgeIntoZero { src } => write!(f, "edge {src} -> 0 enters the trivial equilibrium"),
            Violation::IndexNotDecreasing { src, dst } => {
                write!(f, "edge {src} -> {dst} does not lower the Morse index")
            }
            Violation::UnknownNode { id } => write!(f, "edge refers to unknown node {id}"),
        }
    }
}

/// Energy must drop by more than this along every edge.
pub const EDGE_ENERGY_MARGIN: f64 = 1e-12;

/// Checks every edge against the order the flow must respect: energy drops,
/// sign components never increase, no edge joins `u_k^+` and `u_k^-` or
/// enters zero, the family index (`k` for `u_k^{+-}`, `n + 1` for zero with
/// `n` the largest `k`) strictly drops, and the graph is acyclic.
pub fn check_morse_order(graph: &ConnectionGraph) -> Vec<Violation> {
    let mut violations = Vec::new();
    let nodes: BTreeMap<&str, &Node> = graph.nodes.iter().map(|n| (n.id.as_str(), n)).collect();
    let top = graph.nodes.iter().map(|n| n.k).max().unwrap_or(0) + 1;
    let index = |n: &Node| if n.k == 0 { top } else { n.k };
    for e in &graph.edges {
        let (Some(src), Some(dst)) = (nodes.get(e.src.as_str()), nodes.get(e.dst.as_str())) else {
            for id in [&e.src, &e.dst] {
                if !nodes.contains_key(id.as_str()) {
                    violations.push(Violation::UnknownNode { id: id.clone() });
                }
            }
            continue;
        };
        if src.energy <= dst.energy + EDGE_ENERGY_MARGIN {
            violations.push(Violation::EnergyNotDecreasing {
                src: e.src.clone(),
                dst: e.dst.clone(),
                src_energy: src.energy,
                dst_energy: dst.energy,
            });
        }
        if dst.k == 0 {
            violations.push(Violation::EdgeIntoZero { src: e.src.clone() });
        } else if src.k > 0 && dst.k > src.k {
            violations.push(Violation::ZerosIncrease { src: e.src.clone(), dst: e.dst.clone() });
        }
        if index(dst) >= index(src) {
            violations.push(Violation::IndexNotDecreasing { src: e.src.clone(), dst: e.dst.clone() });
        }
        if src.k > 0 && src.k == dst.k && src.sign != dst.sign && (src.d - dst.d).abs() <= 1e-9 * src.d.max(1.0) {
            violations.push(Violation::PartnerEdge { src: e.src.clone(), dst: e.dst.clone() });
        }
    }
    if let Some(cycle) = find_cycle(graph) {
        violations.push(Violation::Cycle { nodes: cycle });
    }
    violations
}

fn find_cycle(graph: &ConnectionGraph) -> Option<Vec<String>> {
    let ids: Vec<&str> = graph.nodes.iter().map(|n| n.id.as_str()).collect();
    let pos = |id: &str| ids.iter().position(|&x| x == id);
    let mut adj = vec![Vec::new(); ids.len()];
    for e in &graph.edges {
        if let (Some(s), Some(d)) = (pos(&e.src), pos(&e.dst)) {
            adj[s].push(d);
        }
    }
    // 0 unvisited, 1 on stack, 2 done
    let mut state = vec![0u8; ids.len()];
    let mut stack = Vec::new();
    fn visit(v: usize, adj: &[Vec<usize>], state: &mut [u8], stack: &mut Vec<usize>) -> Option<Vec<usize>> {
        state[v] = 1;
        stack.push(v);
        for &w in &adj[v] {
            if state[w] == 1 {
                let start = stack.iter().position(|&x| x == w).unwrap_or(0);
                let mut cycle = stack[start..].to_vec();
                cycle.push(w);
                return Some(cycle);
            }
            if state[w] == 0 {
                if let Some(c) = visit(w, adj, state, stack) {
                    return Some(c);
                }
            }
        }
        stack.pop();
        state[v] = 2;
        None
    }
    for v in 0..ids.len() {
        if state[v] == 0 {
            if let Some(c) = visit(v, &adj, &mut state, &mut stack) {
                return Some(c.into_iter().map(|i| ids[i].to_string()).collect());
            }
        }
    }
    None
}
