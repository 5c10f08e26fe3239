use std::fmt;

/// Per-coordinate polynomial degrees of one tensor-product basis term.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(degrees: Vec<u32>) -> Self {
        MultiIndex(degrees)
    }

    pub fn degrees(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Degree in the final coordinate, the one a map component is monotone in.
    pub fn last(&self) -> u32 {
        *self.0.last().expect("multi-index has at least one entry")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, d) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, "]")
    }
}

/// A total-order multi-index set in graded lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiIndexSet {
    indices: Vec<MultiIndex>,
    dim: usize,
    max_total_order: u32,
}

impl MultiIndexSet {
    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_total_order(&self) -> u32 {
        self.max_total_order
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &MultiIndex> {
        self.indices.iter()
    }
}

/// Builds every multi-index of length `dim` whose entries sum to at most `order`.
///
/// Indices are grouped by total degree; within a degree the first coordinate's
/// degree decreases, so `(2, 2)` yields `[0,0] [1,0] [0,1] [2,0] [1,1] [0,2]`.
pub fn build_total_order_set(dim: usize, order: u32) -> MultiIndexSet {
    assert!(dim >= 1, "multi-index dimension must be positive");
    let mut indices = Vec::new();
    let mut scratch = Vec::with_capacity(dim);
    for total in 0..=order {
        push_compositions(dim, total, &mut scratch, &mut indices);
    }
    MultiIndexSet {
        indices,
        dim,
        max_total_order: order,
    }
}

fn push_compositions(dims_left: usize, sum: u32, scratch: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if dims_left == 1 {
        scratch.push(sum);
        out.push(MultiIndex(scratch.clone()));
        scratch.pop();
        return;
    }
    for first in (0..=sum).rev() {
        scratch.push(first);
        push_compositions(dims_left - 1, sum - first, scratch, out);
        scratch.pop();
    }
}
