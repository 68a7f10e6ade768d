//! Discrete belief networks: variables, conditional probability tables,
//! evidence, and the graph queries the samplers rely on.
//!
//! A network is immutable once built. [`NetworkBuilder`] performs every
//! structural check (row counts, row sums, probability range, acyclicity)
//! so downstream code can index CPTs without re-validating.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::cmp::Reverse;
use std::hash::{DefaultHasher, Hash, Hasher};

use thiserror::Error;

use crate::scalar::Probability;

/// Dense 0-based node index.
pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("variable `{0}` declared more than once")]
    DuplicateVariable(String),
    #[error("variable `{name}` has {cardinality} states; at least 2 are required")]
    Cardinality { name: String, cardinality: usize },
    #[error("variable `{variable}` declares state `{state}` more than once")]
    DuplicateState { variable: String, state: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("variable `{variable}` has no state `{state}`")]
    UnknownState { variable: String, state: String },
    #[error("state index {state} is out of range for `{variable}`")]
    StateOutOfRange { variable: String, state: usize },
    #[error("more than one CPT given for `{0}`")]
    DuplicateCpt(String),
    #[error("no CPT given for `{0}`")]
    MissingCpt(String),
    #[error("CPT for `{node}` lists parent `{parent}` more than once")]
    DuplicateParent { node: String, parent: String },
    #[error("CPT for `{node}` has {found} rows; expected {expected}")]
    RowCount {
        node: String,
        found: usize,
        expected: usize,
    },
    #[error("CPT for `{node}`, row {row}: {found} entries; expected {expected}")]
    RowWidth {
        node: String,
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("CPT for `{node}`, row {row}: entry {value} is not a probability")]
    ProbabilityRange { node: String, row: usize, value: f64 },
    #[error("CPT for `{node}`, row {row}: entries sum to {sum}, not 1")]
    RowSum { node: String, row: usize, sum: f64 },
    #[error("cycle detected: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("node set is not closed under parents: `{node}` needs `{parent}`")]
    NotAncestral { node: String, parent: String },
}

/// A discrete random variable with named states.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Variable {
    name: String,
    states: Vec<String>,
}

impl Variable {
    pub fn new<S: Into<String>>(name: S, states: Vec<String>) -> Result<Self, NetworkError> {
        let name = name.into();
        if states.len() < 2 {
            return Err(NetworkError::Cardinality {
                name,
                cardinality: states.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for s in &states {
            if !seen.insert(s.as_str()) {
                return Err(NetworkError::DuplicateState {
                    variable: name.clone(),
                    state: s.clone(),
                });
            }
        }
        Ok(Self { name, states })
    }

    /// Binary variable with states `false` (index 0) and `true` (index 1).
    pub fn binary<S: Into<String>>(name: S) -> Self {
        Self {
            name: name.into(),
            states: vec!["false".to_owned(), "true".to_owned()],
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, state: &str) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }
}

/// Conditional probability table `P(X_j | X_parents)`.
///
/// Rows are laid out over parent configurations in row-major order with the
/// last parent varying fastest; each row is a distribution over the owner's
/// states.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt<T> {
    parents: Vec<NodeId>,
    parent_cards: Vec<usize>,
    cardinality: usize,
    table: Vec<T>,
}

impl<T: Probability> Cpt<T> {
    pub fn parents(&self) -> &[NodeId] {
        &self.parents
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn row_count(&self) -> usize {
        self.table.len() / self.cardinality
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.table[row * self.cardinality..(row + 1) * self.cardinality]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.table.chunks(self.cardinality)
    }

    /// Flat table, row after row.
    pub fn table(&self) -> &[T] {
        &self.table
    }

    /// Row index for the parent values found in a full assignment vector.
    #[inline]
    pub fn row_index(&self, values: &[usize]) -> usize {
        self.parents
            .iter()
            .zip(&self.parent_cards)
            .fold(0, |acc, (&p, &card)| acc * card + values[p])
    }

    /// Row index with one parent's value overridden.
    #[inline]
    pub fn row_index_with(&self, values: &[usize], node: NodeId, state: usize) -> usize {
        self.parents
            .iter()
            .zip(&self.parent_cards)
            .fold(0, |acc, (&p, &card)| {
                let v = if p == node { state } else { values[p] };
                acc * card + v
            })
    }

    /// Parent values (in parent order) for a row index.
    pub fn parent_values(&self, mut row: usize) -> Vec<usize> {
        let mut out = vec![0; self.parents.len()];
        for (slot, &card) in out.iter_mut().zip(&self.parent_cards).rev() {
            *slot = row % card;
            row /= card;
        }
        out
    }

    /// `P(X_j = state | parents as in values)`.
    #[inline]
    pub fn prob(&self, state: usize, values: &[usize]) -> T {
        self.table[self.row_index(values) * self.cardinality + state]
    }
}

/// Full or partial instantiation of every variable in a network.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    values: Vec<usize>,
    known: Vec<bool>,
}

impl Assignment {
    /// Assignment with no variable set.
    pub fn empty(len: usize) -> Self {
        Self {
            values: vec![0; len],
            known: vec![false; len],
        }
    }

    pub fn complete(values: Vec<usize>) -> Self {
        let known = vec![true; values.len()];
        Self { values, known }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, node: NodeId) -> Option<usize> {
        self.known[node].then(|| self.values[node])
    }

    pub fn set(&mut self, node: NodeId, state: usize) {
        self.values[node] = state;
        self.known[node] = true;
    }

    pub fn unset(&mut self, node: NodeId) {
        self.known[node] = false;
    }

    pub fn is_complete(&self) -> bool {
        self.known.iter().all(|&k| k)
    }

    /// Raw state vector; entries for unset nodes are meaningless.
    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn into_values(self) -> Vec<usize> {
        self.values
    }
}

/// Observed evidence `X_E = x*_E`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Evidence {
    observed: BTreeMap<NodeId, usize>,
}

impl Evidence {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new<T: Probability>(
        net: &BeliefNetwork<T>,
        observations: impl IntoIterator<Item = (NodeId, usize)>,
    ) -> Result<Self, NetworkError> {
        let mut ev = Self::empty();
        for (node, state) in observations {
            ev.observe(net, node, state)?;
        }
        Ok(ev)
    }

    /// Evidence from `variable name -> state name` pairs.
    pub fn from_names<'a, T: Probability>(
        net: &BeliefNetwork<T>,
        observations: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, NetworkError> {
        let mut ev = Self::empty();
        for (name, state) in observations {
            let node = net
                .node_id(name)
                .ok_or_else(|| NetworkError::UnknownVariable(name.to_owned()))?;
            let var = net.variable(node);
            let s = var
                .state_index(state)
                .ok_or_else(|| NetworkError::UnknownState {
                    variable: name.to_owned(),
                    state: state.to_owned(),
                })?;
            ev.observed.insert(node, s);
        }
        Ok(ev)
    }

    pub fn observe<T: Probability>(
        &mut self,
        net: &BeliefNetwork<T>,
        node: NodeId,
        state: usize,
    ) -> Result<(), NetworkError> {
        if node >= net.len() {
            return Err(NetworkError::UnknownNode(node));
        }
        if state >= net.variable(node).cardinality() {
            return Err(NetworkError::StateOutOfRange {
                variable: net.variable(node).name().to_owned(),
                state,
            });
        }
        self.observed.insert(node, state);
        Ok(())
    }

    pub fn get(&self, node: NodeId) -> Option<usize> {
        self.observed.get(&node).copied()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.observed.contains_key(&node)
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, usize)> + '_ {
        self.observed.iter().map(|(&n, &s)| (n, s))
    }

    pub fn nodes(&self) -> BTreeSet<NodeId> {
        self.observed.keys().copied().collect()
    }

    /// Lookup table indexed by node.
    pub fn dense(&self, len: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; len];
        for (&n, &s) in &self.observed {
            out[n] = Some(s);
        }
        out
    }

    /// Evidence restricted to `keep`, re-indexed through `old_ids`
    /// (new id -> old id).
    pub fn reindexed(&self, old_ids: &[NodeId]) -> Self {
        let observed = old_ids
            .iter()
            .enumerate()
            .filter_map(|(new, old)| self.get(*old).map(|s| (new, s)))
            .collect();
        Self { observed }
    }

    pub fn to_names<T: Probability>(&self, net: &BeliefNetwork<T>) -> BTreeMap<String, String> {
        self.iter()
            .map(|(n, s)| {
                let v = net.variable(n);
                (v.name().to_owned(), v.states()[s].clone())
            })
            .collect()
    }
}

/// Incrementally assembles and validates a [`BeliefNetwork`].
/// Parents and rows as given, before validation.
type PendingCpt<T> = (Vec<NodeId>, Vec<Vec<T>>);

#[derive(Debug, Clone)]
pub struct NetworkBuilder<T> {
    variables: Vec<Variable>,
    index: HashMap<String, NodeId>,
    cpts: Vec<Option<PendingCpt<T>>>,
}

impl<T: Probability> Default for NetworkBuilder<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Probability> NetworkBuilder<T> {
    pub fn new() -> Self {
        Self {
            variables: Vec::new(),
            index: HashMap::new(),
            cpts: Vec::new(),
        }
    }

    pub fn add_variable(&mut self, variable: Variable) -> Result<NodeId, NetworkError> {
        if self.index.contains_key(variable.name()) {
            return Err(NetworkError::DuplicateVariable(variable.name().to_owned()));
        }
        let id = self.variables.len();
        self.index.insert(variable.name().to_owned(), id);
        self.variables.push(variable);
        self.cpts.push(None);
        Ok(id)
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    /// Sets the CPT of `node`; rows are checked by [`NetworkBuilder::build`].
    pub fn set_cpt(
        &mut self,
        node: NodeId,
        parents: Vec<NodeId>,
        rows: Vec<Vec<T>>,
    ) -> Result<(), NetworkError> {
        let n = self.variables.len();
        if node >= n {
            return Err(NetworkError::UnknownNode(node));
        }
        if let Some(&bad) = parents.iter().find(|&&p| p >= n) {
            return Err(NetworkError::UnknownNode(bad));
        }
        if self.cpts[node].is_some() {
            return Err(NetworkError::DuplicateCpt(self.variables[node].name().to_owned()));
        }
        self.cpts[node] = Some((parents, rows));
        Ok(())
    }

    pub fn build(self) -> Result<BeliefNetwork<T>, NetworkError> {
        let n = self.variables.len();
        let tol = T::row_tolerance();
        let mut cpts = Vec::with_capacity(n);
        for (j, pending) in self.cpts.into_iter().enumerate() {
            let var = &self.variables[j];
            let (parents, rows) =
                pending.ok_or_else(|| NetworkError::MissingCpt(var.name().to_owned()))?;
            let mut seen = BTreeSet::new();
            for &p in &parents {
                if !seen.insert(p) {
                    return Err(NetworkError::DuplicateParent {
                        node: var.name().to_owned(),
                        parent: self.variables[p].name().to_owned(),
                    });
                }
            }
            let parent_cards: Vec<usize> = parents
                .iter()
                .map(|&p| self.variables[p].cardinality())
                .collect();
            let expected_rows: usize = parent_cards.iter().product();
            if rows.len() != expected_rows {
                return Err(NetworkError::RowCount {
                    node: var.name().to_owned(),
                    found: rows.len(),
                    expected: expected_rows,
                });
            }
            let card = var.cardinality();
            let mut table = Vec::with_capacity(expected_rows * card);
            for (r, row) in rows.into_iter().enumerate() {
                if row.len() != card {
                    return Err(NetworkError::RowWidth {
                        node: var.name().to_owned(),
                        row: r,
                        found: row.len(),
                        expected: card,
                    });
                }
                if let Some(&bad) = row
                    .iter()
                    .find(|p| !(p.is_finite() && **p >= T::zero() && **p <= T::one()))
                {
                    return Err(NetworkError::ProbabilityRange {
                        node: var.name().to_owned(),
                        row: r,
                        value: bad.to_f64_lossless(),
                    });
                }
                let sum: T = row.iter().copied().sum();
                if (sum - T::one()).abs() > tol {
                    return Err(NetworkError::RowSum {
                        node: var.name().to_owned(),
                        row: r,
                        sum: sum.to_f64_lossless(),
                    });
                }
                table.extend(row);
            }
            cpts.push(Cpt {
                parents,
                parent_cards,
                cardinality: card,
                table,
            });
        }

        let mut children = vec![Vec::new(); n];
        for (j, cpt) in cpts.iter().enumerate() {
            for &p in &cpt.parents {
                children[p].push(j);
            }
        }
        let order = topological_sort(&self.variables, &cpts, &children)?;
        Ok(BeliefNetwork {
            variables: self.variables,
            index: self.index,
            cpts,
            children,
            order,
        })
    }
}

/// Kahn's algorithm with a min-heap so ties resolve by ascending node id.
fn topological_sort<T>(
    variables: &[Variable],
    cpts: &[Cpt<T>],
    children: &[Vec<NodeId>],
) -> Result<Vec<NodeId>, NetworkError> {
    let n = variables.len();
    let mut indegree: Vec<usize> = cpts.iter().map(|c| c.parents.len()).collect();
    let mut ready: BinaryHeap<Reverse<NodeId>> = (0..n)
        .filter(|&j| indegree[j] == 0)
        .map(Reverse)
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(j)) = ready.pop() {
        order.push(j);
        for &c in &children[j] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }

    // Every unplaced node still has an unplaced parent; walk parents until a
    // node repeats.
    let start = (0..n).find(|&j| indegree[j] > 0).expect("unplaced node");
    let mut path = vec![start];
    let mut pos = HashMap::from([(start, 0usize)]);
    let mut cur = start;
    loop {
        let next = *cpts[cur]
            .parents
            .iter()
            .find(|&&p| indegree[p] > 0)
            .expect("unplaced parent");
        if let Some(&at) = pos.get(&next) {
            let mut cycle: Vec<String> = path[at..]
                .iter()
                .rev()
                .map(|&j| variables[j].name().to_owned())
                .collect();
            cycle.push(cycle[0].clone());
            return Err(NetworkError::Cycle(cycle));
        }
        pos.insert(next, path.len());
        path.push(next);
        cur = next;
    }
}

/// Acyclic directed graph of discrete variables with one CPT per node.
#[derive(Debug, Clone)]
pub struct BeliefNetwork<T> {
    variables: Vec<Variable>,
    index: HashMap<String, NodeId>,
    cpts: Vec<Cpt<T>>,
    children: Vec<Vec<NodeId>>,
    order: Vec<NodeId>,
}

impl<T: PartialEq> PartialEq for BeliefNetwork<T> {
    fn eq(&self, other: &Self) -> bool {
        self.variables == other.variables && self.cpts == other.cpts
    }
}

impl<T: Probability> BeliefNetwork<T> {
    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, node: NodeId) -> &Variable {
        &self.variables[node]
    }

    pub fn cardinality(&self, node: NodeId) -> usize {
        self.variables[node].cardinality()
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn cpt(&self, node: NodeId) -> &Cpt<T> {
        &self.cpts[node]
    }

    pub fn parents(&self, node: NodeId) -> &[NodeId] {
        &self.cpts[node].parents
    }

    pub fn children(&self, node: NodeId) -> &[NodeId] {
        &self.children[node]
    }

    /// Nodes ordered so that every node follows all of its parents; ties are
    /// broken by ascending id.
    pub fn topological_order(&self) -> &[NodeId] {
        &self.order
    }

    /// Parents, children, and the children's other parents of `node`.
    pub fn markov_blanket(&self, node: NodeId) -> Result<BTreeSet<NodeId>, NetworkError> {
        if node >= self.len() {
            return Err(NetworkError::UnknownNode(node));
        }
        let mut blanket: BTreeSet<NodeId> = self.parents(node).iter().copied().collect();
        for &c in self.children(node) {
            blanket.insert(c);
            blanket.extend(self.parents(c).iter().copied());
        }
        blanket.remove(&node);
        Ok(blanket)
    }

    /// Every node with a directed path into `seeds`, plus the seeds.
    pub fn ancestral_closure(&self, seeds: impl IntoIterator<Item = NodeId>) -> BTreeSet<NodeId> {
        let mut closed = BTreeSet::new();
        let mut stack: Vec<NodeId> = seeds.into_iter().collect();
        while let Some(j) = stack.pop() {
            if closed.insert(j) {
                stack.extend(self.parents(j).iter().copied());
            }
        }
        closed
    }

    /// Nodes that must be simulated to estimate `targets` given evidence on
    /// `evidence_nodes`: the ancestral closure of both sets.
    pub fn relevant_nodes(
        &self,
        targets: &BTreeSet<NodeId>,
        evidence_nodes: &BTreeSet<NodeId>,
    ) -> BTreeSet<NodeId> {
        self.ancestral_closure(targets.iter().chain(evidence_nodes).copied())
    }

    /// Sub-network on an ancestrally closed node set. Returns the network and
    /// the map from new ids to the original ids (ascending).
    pub fn induced_subnetwork(
        &self,
        keep: &BTreeSet<NodeId>,
    ) -> Result<(BeliefNetwork<T>, Vec<NodeId>), NetworkError> {
        let old_ids: Vec<NodeId> = keep.iter().copied().collect();
        let mut new_id = vec![usize::MAX; self.len()];
        for (new, &old) in old_ids.iter().enumerate() {
            if old >= self.len() {
                return Err(NetworkError::UnknownNode(old));
            }
            new_id[old] = new;
        }
        let mut builder = NetworkBuilder::new();
        for &old in &old_ids {
            builder.add_variable(self.variables[old].clone())?;
        }
        for (new, &old) in old_ids.iter().enumerate() {
            let cpt = &self.cpts[old];
            let mut parents = Vec::with_capacity(cpt.parents.len());
            for &p in &cpt.parents {
                if new_id[p] == usize::MAX {
                    return Err(NetworkError::NotAncestral {
                        node: self.variables[old].name().to_owned(),
                        parent: self.variables[p].name().to_owned(),
                    });
                }
                parents.push(new_id[p]);
            }
            let rows = cpt.rows().map(<[T]>::to_vec).collect();
            builder.set_cpt(new, parents, rows)?;
        }
        Ok((builder.build()?, old_ids))
    }

    /// Hash of the network's structure (names, states, parents).
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.variables.hash(&mut h);
        for c in &self.cpts {
            c.parents.hash(&mut h);
        }
        h.finish()
    }

    /// Number of joint configurations, saturating at `u128::MAX`.
    pub fn joint_state_count(&self) -> u128 {
        self.variables
            .iter()
            .fold(1u128, |acc, v| acc.saturating_mul(v.cardinality() as u128))
    }

    /// Same structure with every table entry converted to another scalar.
    pub fn map_scalar<U: Probability>(&self) -> Result<BeliefNetwork<U>, NetworkError> {
        let mut b = NetworkBuilder::new();
        for v in &self.variables {
            b.add_variable(v.clone())?;
        }
        for (j, c) in self.cpts.iter().enumerate() {
            let rows = c
                .rows()
                .map(|r| r.iter().map(|p| U::from_f64_lossy(p.to_f64_lossless())).collect())
                .collect();
            b.set_cpt(j, c.parents.clone(), rows)?;
        }
        b.build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> BeliefNetwork<f64> {
        let mut b = NetworkBuilder::new();
        let a = b.add_variable(Variable::binary("A")).unwrap();
        let bb = b.add_variable(Variable::binary("B")).unwrap();
        let c = b.add_variable(Variable::binary("C")).unwrap();
        b.set_cpt(a, vec![], vec![vec![0.1, 0.9]]).unwrap();
        b.set_cpt(bb, vec![a], vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        b.set_cpt(c, vec![bb], vec![vec![0.5, 0.5], vec![0.2, 0.8]]).unwrap();
        b.build().unwrap()
    }

    fn collider() -> BeliefNetwork<f64> {
        let mut b = NetworkBuilder::new();
        let a = b.add_variable(Variable::binary("A")).unwrap();
        let bb = b.add_variable(Variable::binary("B")).unwrap();
        let c = b.add_variable(Variable::binary("C")).unwrap();
        b.set_cpt(a, vec![], vec![vec![0.5, 0.5]]).unwrap();
        b.set_cpt(bb, vec![], vec![vec![0.5, 0.5]]).unwrap();
        b.set_cpt(
            c,
            vec![a, bb],
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0]],
        )
        .unwrap();
        b.build().unwrap()
    }

    #[test]
    fn chain_order_and_blanket() {
        let net = chain();
        assert_eq!(net.topological_order(), &[0, 1, 2]);
        assert_eq!(net.markov_blanket(1).unwrap(), BTreeSet::from([0, 2]));
        assert_eq!(net.markov_blanket(7), Err(NetworkError::UnknownNode(7)));
    }

    #[test]
    fn collider_blanket_includes_coparent() {
        let net = collider();
        assert_eq!(net.markov_blanket(0).unwrap(), BTreeSet::from([1, 2]));
    }

    #[test]
    fn disconnected_roots_tie_break_by_id() {
        let mut b = NetworkBuilder::<f64>::new();
        let y = b.add_variable(Variable::binary("Y")).unwrap();
        let x = b.add_variable(Variable::binary("X")).unwrap();
        b.set_cpt(x, vec![], vec![vec![0.5, 0.5]]).unwrap();
        b.set_cpt(y, vec![], vec![vec![0.5, 0.5]]).unwrap();
        let net = b.build().unwrap();
        assert_eq!(net.topological_order(), &[0, 1]);
    }

    #[test]
    fn order_respects_parents_when_ids_disagree() {
        let mut b = NetworkBuilder::<f64>::new();
        let child = b.add_variable(Variable::binary("child")).unwrap();
        let root = b.add_variable(Variable::binary("root")).unwrap();
        b.set_cpt(root, vec![], vec![vec![0.5, 0.5]]).unwrap();
        b.set_cpt(child, vec![root], vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let net = b.build().unwrap();
        assert_eq!(net.topological_order(), &[1, 0]);
    }

    #[test]
    fn relevant_nodes_is_ancestral_closure() {
        let net = chain();
        let none = BTreeSet::new();
        assert_eq!(net.relevant_nodes(&BTreeSet::from([0]), &none), BTreeSet::from([0]));
        assert_eq!(
            net.relevant_nodes(&BTreeSet::from([0]), &BTreeSet::from([2])),
            BTreeSet::from([0, 1, 2])
        );
    }

    #[test]
    fn row_sum_error_names_node_and_row() {
        let mut b = NetworkBuilder::<f64>::new();
        let a = b.add_variable(Variable::binary("A")).unwrap();
        b.set_cpt(a, vec![], vec![vec![0.5, 0.6]]).unwrap();
        match b.build() {
            Err(NetworkError::RowSum { node, row, .. }) => {
                assert_eq!(node, "A");
                assert_eq!(row, 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            Variable::new("X", vec!["only".into()]),
            Err(NetworkError::Cardinality { cardinality: 1, .. })
        ));

        let mut b = NetworkBuilder::<f64>::new();
        let a = b.add_variable(Variable::binary("A")).unwrap();
        assert!(matches!(
            b.add_variable(Variable::binary("A")),
            Err(NetworkError::DuplicateVariable(_))
        ));
        b.set_cpt(a, vec![], vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(matches!(b.build(), Err(NetworkError::RowCount { expected: 1, found: 2, .. })));

        let mut b = NetworkBuilder::<f64>::new();
        let a = b.add_variable(Variable::binary("A")).unwrap();
        b.set_cpt(a, vec![], vec![vec![1.5, -0.5]]).unwrap();
        assert!(matches!(b.build(), Err(NetworkError::ProbabilityRange { .. })));

        let mut b = NetworkBuilder::<f64>::new();
        b.add_variable(Variable::binary("A")).unwrap();
        assert!(matches!(b.build(), Err(NetworkError::MissingCpt(name)) if name == "A"));
    }

    #[test]
    fn cycle_is_reported() {
        let mut b = NetworkBuilder::<f64>::new();
        let a = b.add_variable(Variable::binary("A")).unwrap();
        let c = b.add_variable(Variable::binary("B")).unwrap();
        let r = b.add_variable(Variable::binary("R")).unwrap();
        let half = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        b.set_cpt(r, vec![], vec![vec![0.5, 0.5]]).unwrap();
        b.set_cpt(a, vec![c], half.clone()).unwrap();
        b.set_cpt(c, vec![a], half).unwrap();
        match b.build() {
            Err(NetworkError::Cycle(names)) => {
                assert_eq!(names.len(), 3);
                assert_eq!(names.first(), names.last());
                assert!(names.contains(&"A".to_owned()) && names.contains(&"B".to_owned()));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn last_parent_varies_fastest() {
        let net = collider();
        let cpt = net.cpt(2);
        // row 1 is (A = 0, B = 1)
        assert_eq!(cpt.row_index(&[0, 1, 0]), 1);
        assert_eq!(cpt.row_index(&[1, 0, 0]), 2);
        assert_eq!(cpt.parent_values(1), vec![0, 1]);
        assert_eq!(cpt.parent_values(2), vec![1, 0]);
        assert_eq!(cpt.row_index_with(&[0, 0, 0], 0, 1), 2);
    }

    #[test]
    fn evidence_validation() {
        let net = chain();
        assert!(Evidence::new(&net, [(1, 1)]).is_ok());
        assert!(matches!(
            Evidence::new(&net, [(1, 2)]),
            Err(NetworkError::StateOutOfRange { .. })
        ));
        assert!(matches!(Evidence::new(&net, [(9, 0)]), Err(NetworkError::UnknownNode(9))));
        let ev = Evidence::from_names(&net, [("C", "true")]).unwrap();
        assert_eq!(ev.get(2), Some(1));
        assert!(matches!(
            Evidence::from_names(&net, [("C", "maybe")]),
            Err(NetworkError::UnknownState { .. })
        ));
    }

    #[test]
    fn subnetwork_requires_closure() {
        let net = chain();
        let (sub, ids) = net.induced_subnetwork(&BTreeSet::from([0, 1])).unwrap();
        assert_eq!(ids, vec![0, 1]);
        assert_eq!(sub.len(), 2);
        assert_eq!(sub.cpt(1).row(1), net.cpt(1).row(1));
        assert!(matches!(
            net.induced_subnetwork(&BTreeSet::from([2])),
            Err(NetworkError::NotAncestral { .. })
        ));
    }

    #[test]
    fn assignment_validity_flags() {
        let mut x = Assignment::empty(3);
        assert!(!x.is_complete());
        x.set(0, 1);
        x.set(1, 0);
        assert_eq!(x.get(0), Some(1));
        assert_eq!(x.get(2), None);
        x.set(2, 1);
        assert!(x.is_complete());
        x.unset(1);
        assert!(!x.is_complete());
    }
}
