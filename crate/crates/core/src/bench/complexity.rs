use serde::{Deserialize, Serialize};

use crate::genome::Genome;
use crate::graphplan::{plan, LayerPlan, PlanError};

/// Size and shape of the placed part of a genome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub nodes: usize,
    pub connections: usize,
    /// `nodes + connections`.
    pub parameter_size: usize,
    /// Layer count including input and output layers.
    pub depth: usize,
    pub width: usize,
    pub average_width: f64,
    /// Mean number of layers skipped per connection.
    pub skippiness: f64,
}

pub fn complexity(g: &Genome) -> Result<ComplexityReport, PlanError> {
    Ok(complexity_of_plan(&plan(g)?))
}

pub fn complexity_of_plan(p: &LayerPlan) -> ComplexityReport {
    let nodes = p.placed_node_count();
    let connections = p.connections.len();
    let depth = p.layer_count();
    let width = p.layers.iter().map(|l| l.nodes.len()).max().unwrap_or(0);
    let skipped: usize = p.connections.iter().map(|c| c.layer_gap() - 1).sum();
    ComplexityReport {
        nodes,
        connections,
        parameter_size: nodes + connections,
        depth,
        width,
        average_width: nodes as f64 / depth.max(1) as f64,
        skippiness: if connections == 0 {
            0.0
        } else {
            skipped as f64 / connections as f64
        },
    }
}
