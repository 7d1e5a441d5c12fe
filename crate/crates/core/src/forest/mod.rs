//! Multitype plane forests stored in canonical breadth-first order.
//!
//! A forest is a flat vector of vertices. Roots come first, sorted by type;
//! every later vertex follows the children of the vertices before it, and a
//! sibling group is sorted by type. With this layout two forests are equal
//! exactly when their vertex records are equal.

mod chains;
pub(crate) mod edge;

pub use chains::{generation_chains, GenerationChains};
pub use edge::{alive_trajectory, discretize, EdgeLengthForest};

use std::fmt;

use thiserror::Error;

/// Type labels are zero-based internally (`0..d`).
pub type TypeIndex = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vertex {
    pub ty: TypeIndex,
    pub parent: Option<usize>,
    /// Children counted by type, `offspring[j]` = number of type-`j` children.
    pub offspring: Vec<usize>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForestError {
    #[error("invalid forest: {0}")]
    Invalid(ValidationReport),
    #[error("non-positive discretisation span {0}")]
    BadSpan(f64),
    #[error("lifetime of vertex {vertex} is not a positive finite number ({value})")]
    BadLifetime { vertex: usize, value: f64 },
    #[error("expected {expected} lifetimes, got {got}")]
    LifetimeCount { expected: usize, got: usize },
}

/// A single broken invariant of a [`TypedForest`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoTypes,
    TypeOutOfRange { vertex: usize },
    OffspringLength { vertex: usize },
    RootsLength,
    RootsNotFirst { vertex: usize },
    RootsNotTypeSorted { vertex: usize },
    ParentNotBefore { vertex: usize },
    NotBreadthFirst { vertex: usize },
    SiblingsNotTypeSorted { vertex: usize },
    OffspringMismatch { vertex: usize },
    RootCountMismatch { ty: TypeIndex },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoTypes => write!(f, "number of types must be positive"),
            Violation::TypeOutOfRange { vertex } => write!(f, "vertex {vertex}: type out of range"),
            Violation::OffspringLength { vertex } => {
                write!(f, "vertex {vertex}: offspring vector has wrong length")
            }
            Violation::RootsLength => write!(f, "roots vector has wrong length"),
            Violation::RootsNotFirst { vertex } => write!(f, "vertex {vertex}: root after a non-root"),
            Violation::RootsNotTypeSorted { vertex } => {
                write!(f, "vertex {vertex}: roots not type-sorted")
            }
            Violation::ParentNotBefore { vertex } => {
                write!(f, "vertex {vertex}: parent does not precede child")
            }
            Violation::NotBreadthFirst { vertex } => {
                write!(f, "vertex {vertex}: not in breadth-first order")
            }
            Violation::SiblingsNotTypeSorted { vertex } => {
                write!(f, "vertex {vertex}: siblings not type-sorted")
            }
            Violation::OffspringMismatch { vertex } => {
                write!(f, "vertex {vertex}: offspring vector disagrees with children")
            }
            Violation::RootCountMismatch { ty } => {
                write!(f, "type {}: roots vector disagrees with parent-less vertices", ty + 1)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(ToString::to_string).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.messages().join("; "))
    }
}

/// A finite `d`-type plane forest in canonical breadth-first order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedForest {
    d: usize,
    roots: Vec<usize>,
    vertices: Vec<Vertex>,
}

impl TypedForest {
    /// Builds a forest from `(type, parent)` records listed in storage order,
    /// deriving the offspring vectors and root counts, then validates it.
    pub fn new(d: usize, records: &[(TypeIndex, Option<usize>)]) -> Result<Self, ForestError> {
        let forest = Self::from_records(d, records);
        let report = forest.validate();
        if report.is_valid() {
            Ok(forest)
        } else {
            Err(ForestError::Invalid(report))
        }
    }

    /// Like [`TypedForest::new`] but skips validation. Out-of-range types and
    /// parents are kept as given and surface later in [`TypedForest::validate`].
    pub fn from_records(d: usize, records: &[(TypeIndex, Option<usize>)]) -> Self {
        let mut vertices: Vec<Vertex> = records
            .iter()
            .map(|&(ty, parent)| Vertex { ty, parent, offspring: vec![0; d] })
            .collect();
        let mut roots = vec![0; d];
        for &(ty, parent) in records {
            match parent {
                None if ty < d => roots[ty] += 1,
                Some(p) if p < vertices.len() && ty < d => vertices[p].offspring[ty] += 1,
                _ => {}
            }
        }
        TypedForest { d, roots, vertices }
    }

    /// Raw constructor used when every field is supplied explicitly.
    pub fn from_parts(d: usize, roots: Vec<usize>, vertices: Vec<Vertex>) -> Self {
        TypedForest { d, roots, vertices }
    }

    /// Forest of isolated roots, `roots[i]` of type `i`.
    pub fn isolated_roots(roots: &[usize]) -> Self {
        let records: Vec<_> = roots
            .iter()
            .enumerate()
            .flat_map(|(ty, &n)| std::iter::repeat_n((ty, None), n))
            .collect();
        Self::from_records(roots.len(), &records)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Number of vertices of each type.
    pub fn type_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.d];
        for v in &self.vertices {
            counts[v.ty] += 1;
        }
        counts
    }

    /// Generation (distance to the root of its tree) of every vertex.
    pub fn generations(&self) -> Vec<usize> {
        let mut gens = vec![0usize; self.vertices.len()];
        for (idx, v) in self.vertices.iter().enumerate() {
            if let Some(p) = v.parent {
                gens[idx] = gens[p] + 1;
            }
        }
        gens
    }

    /// Children of every vertex, in storage order.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut kids = vec![Vec::new(); self.vertices.len()];
        for (idx, v) in self.vertices.iter().enumerate() {
            if let Some(p) = v.parent {
                kids[p].push(idx);
            }
        }
        kids
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }
}

/// Lists every broken [`TypedForest`] invariant; empty when the forest is valid.
pub fn validate(forest: &TypedForest) -> ValidationReport {
    let d = forest.d;
    let mut out = Vec::new();
    if d == 0 {
        out.push(Violation::NoTypes);
        return ValidationReport { violations: out };
    }
    if forest.roots.len() != d {
        out.push(Violation::RootsLength);
    }
    let n = forest.vertices.len();
    let mut counted = vec![vec![0usize; d]; n];
    let mut root_counts = vec![0usize; d];
    let mut seen_non_root = false;
    let mut last_parent: Option<usize> = None;
    for (idx, v) in forest.vertices.iter().enumerate() {
        if v.ty >= d {
            out.push(Violation::TypeOutOfRange { vertex: idx });
            continue;
        }
        if v.offspring.len() != d {
            out.push(Violation::OffspringLength { vertex: idx });
        }
        match v.parent {
            None => {
                root_counts[v.ty] += 1;
                if seen_non_root {
                    out.push(Violation::RootsNotFirst { vertex: idx });
                } else if idx > 0 && forest.vertices[idx - 1].ty > v.ty {
                    out.push(Violation::RootsNotTypeSorted { vertex: idx });
                }
            }
            Some(p) => {
                seen_non_root = true;
                if p >= idx {
                    out.push(Violation::ParentNotBefore { vertex: idx });
                    continue;
                }
                counted[p][v.ty] += 1;
                match last_parent {
                    Some(q) if q > p => out.push(Violation::NotBreadthFirst { vertex: idx }),
                    Some(q) if q == p && forest.vertices[idx - 1].ty > v.ty => {
                        out.push(Violation::SiblingsNotTypeSorted { vertex: idx })
                    }
                    _ => {}
                }
                last_parent = Some(p);
            }
        }
    }
    for (idx, v) in forest.vertices.iter().enumerate() {
        if v.ty < d && v.offspring.len() == d && v.offspring != counted[idx] {
            out.push(Violation::OffspringMismatch { vertex: idx });
        }
    }
    if forest.roots.len() == d {
        for ty in 0..d {
            if forest.roots[ty] != root_counts[ty] {
                out.push(Violation::RootCountMismatch { ty });
            }
        }
    }
    ValidationReport { violations: out }
}

/// For each type `i`, the storage indices of the type-`i` vertices in
/// breadth-first order (`result[i][n]` is the `n`-th type-`i` vertex).
pub fn bfs_indices(forest: &TypedForest) -> Result<Vec<Vec<usize>>, ForestError> {
    let report = forest.validate();
    if !report.is_valid() {
        return Err(ForestError::Invalid(report));
    }
    let mut lists = vec![Vec::new(); forest.d];
    for (idx, v) in forest.vertices.iter().enumerate() {
        lists[v.ty].push(idx);
    }
    Ok(lists)
}

/// Accumulates a forest in arbitrary insertion order and emits it in
/// canonical breadth-first order. Roots and sibling groups are stably sorted
/// by type, so insertion order only breaks ties between equal types.
#[derive(Debug, Clone, Default)]
pub struct ForestBuilder {
    d: usize,
    types: Vec<TypeIndex>,
    children: Vec<Vec<usize>>,
    roots: Vec<usize>,
}

impl ForestBuilder {
    pub fn new(d: usize) -> Self {
        ForestBuilder { d, ..Default::default() }
    }

    pub fn add_root(&mut self, ty: TypeIndex) -> usize {
        let id = self.push(ty);
        self.roots.push(id);
        id
    }

    pub fn add_child(&mut self, parent: usize, ty: TypeIndex) -> usize {
        let id = self.push(ty);
        self.children[parent].push(id);
        id
    }

    fn push(&mut self, ty: TypeIndex) -> usize {
        self.types.push(ty);
        self.children.push(Vec::new());
        self.types.len() - 1
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    /// Returns the canonical forest and, for each canonical index, the
    /// builder id it came from.
    pub fn build(&self) -> (TypedForest, Vec<usize>) {
        let mut order = Vec::with_capacity(self.types.len());
        let mut parent_of = Vec::with_capacity(self.types.len());
        let mut roots = self.roots.clone();
        roots.sort_by_key(|&id| self.types[id]);
        for id in roots {
            order.push(id);
            parent_of.push(None);
        }
        let mut head = 0;
        while head < order.len() {
            let id = order[head];
            let mut kids = self.children[id].clone();
            kids.sort_by_key(|&c| self.types[c]);
            for c in kids {
                order.push(c);
                parent_of.push(Some(head));
            }
            head += 1;
        }
        let records: Vec<_> = order
            .iter()
            .zip(parent_of)
            .map(|(&id, p)| (self.types[id], p))
            .collect();
        (TypedForest::from_records(self.d, &records), order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // 4-vertex example: root type 1 with children (type 1, type 2), root type 2.
    pub(crate) fn four_vertex() -> TypedForest {
        TypedForest::new(2, &[(0, None), (1, None), (0, Some(0)), (1, Some(0))]).unwrap()
    }

    #[test]
    fn single_root_is_valid() {
        let f = TypedForest::new(1, &[(0, None)]).unwrap();
        assert!(f.validate().is_valid());
        assert_eq!(f.roots(), &[1]);
    }

    #[test]
    fn unsorted_roots_are_reported() {
        let f = TypedForest::from_records(2, &[(1, None), (0, None)]);
        let report = f.validate();
        assert_eq!(report.violations, vec![Violation::RootsNotTypeSorted { vertex: 1 }]);
        assert_eq!(report.messages(), vec!["vertex 1: roots not type-sorted".to_string()]);
    }

    #[test]
    fn eight_vertex_two_type_forest_is_valid() {
        // gen 0: a(1) b(2); gen 1: children of a = c(1) d(2), children of b = e(1);
        // gen 2: children of c = f(2), children of e = g(1) h(1).
        let records = [
            (0, None),
            (1, None),
            (0, Some(0)),
            (1, Some(0)),
            (0, Some(1)),
            (1, Some(2)),
            (0, Some(4)),
            (0, Some(4)),
        ];
        let f = TypedForest::new(2, &records).unwrap();
        assert_eq!(f.type_counts(), vec![5, 3]);
        assert_eq!(f.generations(), vec![0, 0, 1, 1, 1, 2, 2, 2]);
    }

    #[test]
    fn ordering_violations() {
        // child listed before a root
        let f = TypedForest::from_records(1, &[(0, None), (0, Some(0)), (0, None)]);
        assert!(f.validate().violations.contains(&Violation::RootsNotFirst { vertex: 2 }));
        // children of vertex 2 before children of vertex 1
        let f = TypedForest::from_records(
            1,
            &[(0, None), (0, None), (0, Some(1)), (0, Some(0))],
        );
        assert!(f.validate().violations.contains(&Violation::NotBreadthFirst { vertex: 3 }));
        // siblings out of type order
        let f = TypedForest::from_records(2, &[(0, None), (1, Some(0)), (0, Some(0))]);
        assert!(f
            .validate()
            .violations
            .contains(&Violation::SiblingsNotTypeSorted { vertex: 2 }));
        // self parent
        let f = TypedForest::from_records(1, &[(0, None), (0, Some(1))]);
        assert!(f.validate().violations.contains(&Violation::ParentNotBefore { vertex: 1 }));
    }

    #[test]
    fn tampered_offspring_and_roots() {
        let good = four_vertex();
        let mut vertices = good.vertices().to_vec();
        vertices[1].offspring = vec![1, 0];
        let f = TypedForest::from_parts(2, vec![1, 1], vertices);
        assert_eq!(f.validate().violations, vec![Violation::OffspringMismatch { vertex: 1 }]);
        let f = TypedForest::from_parts(2, vec![2, 1], good.vertices().to_vec());
        assert_eq!(f.validate().violations, vec![Violation::RootCountMismatch { ty: 0 }]);
    }

    #[test]
    fn bfs_indices_examples() {
        let f = TypedForest::isolated_roots(&[2, 3]);
        assert_eq!(bfs_indices(&f).unwrap(), vec![vec![0, 1], vec![2, 3, 4]]);
        let f = four_vertex();
        assert_eq!(bfs_indices(&f).unwrap(), vec![vec![0, 2], vec![1, 3]]);
        let bad = TypedForest::from_records(2, &[(1, None), (0, None)]);
        assert!(bfs_indices(&bad).is_err());
    }

    #[test]
    fn builder_canonicalises() {
        let mut b = ForestBuilder::new(2);
        let r2 = b.add_root(1);
        let r1 = b.add_root(0);
        b.add_child(r1, 1);
        b.add_child(r1, 0);
        let _ = r2;
        let (f, order) = b.build();
        assert_eq!(f, four_vertex());
        assert_eq!(order, vec![1, 0, 3, 2]);
    }
}
