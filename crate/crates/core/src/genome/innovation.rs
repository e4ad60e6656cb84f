use std::collections::HashMap;

use super::{Genome, InnovationId, NodeId};

/// Ids assigned when a connection is split by an add-node mutation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitInnovation {
    pub node: NodeId,
    pub incoming: InnovationId,
    pub outgoing: InnovationId,
}

/// Run-wide id counters plus a per-generation cache so that the same
/// structural mutation made by several genomes in one generation receives
/// the same ids.
#[derive(Clone, Debug)]
pub struct InnovationTracker {
    next_node: u64,
    next_connection: u64,
    connections: HashMap<(NodeId, NodeId), InnovationId>,
    splits: HashMap<InnovationId, SplitInnovation>,
}

impl InnovationTracker {
    pub fn new(next_node: u64, next_connection: u64) -> Self {
        Self {
            next_node,
            next_connection,
            connections: HashMap::new(),
            splits: HashMap::new(),
        }
    }

    /// Starts counting after the largest ids present in `genomes`.
    pub fn after<'a>(genomes: impl IntoIterator<Item = &'a Genome>) -> Self {
        let (mut node, mut conn) = (0, 0);
        for g in genomes {
            if let Some(n) = g.max_node_id() {
                node = node.max(n.0 + 1);
            }
            if let Some(c) = g.max_innovation() {
                conn = conn.max(c.0 + 1);
            }
        }
        Self::new(node, conn)
    }

    pub fn next_node_id(&self) -> u64 {
        self.next_node
    }

    pub fn next_connection_id(&self) -> u64 {
        self.next_connection
    }

    /// Drops the per-generation cache. Counters keep increasing.
    pub fn new_generation(&mut self) {
        self.connections.clear();
        self.splits.clear();
    }

    pub fn fresh_node(&mut self) -> NodeId {
        let id = NodeId(self.next_node);
        self.next_node += 1;
        id
    }

    pub fn fresh_connection(&mut self) -> InnovationId {
        let id = InnovationId(self.next_connection);
        self.next_connection += 1;
        id
    }

    pub fn connection(&mut self, from: NodeId, to: NodeId) -> InnovationId {
        if let Some(&id) = self.connections.get(&(from, to)) {
            return id;
        }
        let id = self.fresh_connection();
        self.connections.insert((from, to), id);
        id
    }

    pub fn split(&mut self, connection: InnovationId) -> SplitInnovation {
        if let Some(&s) = self.splits.get(&connection) {
            return s;
        }
        let s = SplitInnovation {
            node: self.fresh_node(),
            incoming: self.fresh_connection(),
            outgoing: self.fresh_connection(),
        };
        self.splits.insert(connection, s);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_mutation_same_generation_shares_ids() {
        let mut t = InnovationTracker::new(10, 20);
        let a = t.connection(NodeId(1), NodeId(2));
        let b = t.connection(NodeId(1), NodeId(2));
        assert_eq!(a, b);
        let s1 = t.split(InnovationId(3));
        let s2 = t.split(InnovationId(3));
        assert_eq!(s1, s2);
        t.new_generation();
        let c = t.connection(NodeId(1), NodeId(2));
        assert!(c.0 > a.0);
        assert!(t.split(InnovationId(3)).node.0 > s1.node.0);
    }

    #[test]
    fn ids_strictly_increase() {
        let mut t = InnovationTracker::new(0, 0);
        let mut last = None;
        for i in 0..10 {
            let id = t.connection(NodeId(i), NodeId(i + 1));
            assert!(last.is_none_or(|l: InnovationId| id > l));
            last = Some(id);
        }
    }
}
