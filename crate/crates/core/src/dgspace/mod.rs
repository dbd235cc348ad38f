//! Broken polynomial space `S_hp` and its global degree-of-freedom layout.

mod basis;
mod quadrature;

pub use basis::{eval_basis, n_basis, reference_basis, ReferenceBasis, MAX_DEGREE};
pub use quadrature::{quadrature, Domain, QuadratureRule, MAX_EXACTNESS};

use std::ops::Range;

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Largest allowed ratio of polynomial degrees across a shared edge.
pub const MAX_DEGREE_RATIO: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct DgSpace {
    degrees: Vec<usize>,
    /// Elements in dof order.
    order: Vec<usize>,
    /// First dof of every element, indexed by element id.
    offsets: Vec<usize>,
    n_dofs: usize,
}

impl DgSpace {
    /// Lays out dofs element by element. With `subdomain_of`, elements are
    /// numbered subdomain by subdomain (stable within a subdomain), so every
    /// subdomain owns a contiguous dof range.
    pub fn new(mesh: &Mesh, degrees: Vec<usize>, subdomain_of: Option<&[usize]>) -> Result<Self> {
        Error::check_len(mesh.n_elements(), degrees.len())?;
        if let Some(&p) = degrees.iter().find(|&&p| p == 0 || p > MAX_DEGREE) {
            return Err(Error::Config(format!(
                "polynomial degree {p} outside 1..={MAX_DEGREE}"
            )));
        }
        for (k, nbrs) in mesh.element_neighbors().iter().enumerate() {
            for &j in nbrs {
                let (lo, hi) = (degrees[k].min(degrees[j]), degrees[k].max(degrees[j]));
                if hi > MAX_DEGREE_RATIO * lo {
                    return Err(Error::Config(format!(
                        "degree ratio {hi}/{lo} between neighboring elements {k} and {j} exceeds {MAX_DEGREE_RATIO}"
                    )));
                }
            }
        }
        let mut order: Vec<usize> = (0..mesh.n_elements()).collect();
        if let Some(sub) = subdomain_of {
            Error::check_len(mesh.n_elements(), sub.len())?;
            order.sort_by_key(|&k| sub[k]);
        }
        let mut offsets = vec![0; mesh.n_elements()];
        let mut next = 0;
        for &k in &order {
            offsets[k] = next;
            next += n_basis(degrees[k]);
        }
        Ok(Self {
            degrees,
            order,
            offsets,
            n_dofs: next,
        })
    }

    pub fn uniform(mesh: &Mesh, p: usize, subdomain_of: Option<&[usize]>) -> Result<Self> {
        Self::new(mesh, vec![p; mesh.n_elements()], subdomain_of)
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_elements(&self) -> usize {
        self.degrees.len()
    }

    pub fn degree(&self, k: usize) -> usize {
        self.degrees[k]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn max_degree(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    pub fn n_local(&self, k: usize) -> usize {
        n_basis(self.degrees[k])
    }

    pub fn offset(&self, k: usize) -> usize {
        self.offsets[k]
    }

    pub fn dofs(&self, k: usize) -> Range<usize> {
        self.offsets[k]..self.offsets[k] + self.n_local(k)
    }

    /// Elements in the order their dofs appear.
    pub fn element_order(&self) -> &[usize] {
        &self.order
    }
}

/// Builds the layout for per-element degrees, optionally blocked by subdomain.
pub fn build_dof_layout(
    mesh: &Mesh,
    degrees: Vec<usize>,
    subdomain_of: Option<&[usize]>,
) -> Result<DgSpace> {
    DgSpace::new(mesh, degrees, subdomain_of)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_uniform_square_mesh;

    #[test]
    fn dof_counts() {
        let mesh = build_uniform_square_mesh(24);
        let s = DgSpace::uniform(&mesh, 1, None).unwrap();
        assert_eq!(s.n_dofs(), 3456);
        let s = DgSpace::uniform(&mesh, 3, None).unwrap();
        assert_eq!(s.n_local(0), 10);
        assert_eq!(s.n_dofs(), 11520);
    }

    #[test]
    fn degree_ratio_violation() {
        let mesh = build_uniform_square_mesh(2);
        let mut degrees = vec![1; mesh.n_elements()];
        degrees[0] = 3;
        assert!(matches!(
            DgSpace::new(&mesh, degrees, None),
            Err(Error::Config(_))
        ));

        let mut degrees = vec![1; mesh.n_elements()];
        degrees[0] = 2;
        assert!(DgSpace::new(&mesh, degrees, None).is_ok());
    }

    #[test]
    fn offsets_follow_subdomain_blocks() {
        let mesh = build_uniform_square_mesh(2);
        let sub: Vec<usize> = (0..8).map(|k| (k + 1) % 2).collect();
        let s = DgSpace::uniform(&mesh, 2, Some(&sub)).unwrap();
        let mut prev_end = 0;
        for &k in s.element_order() {
            assert_eq!(s.offset(k), prev_end);
            prev_end = s.dofs(k).end;
        }
        assert_eq!(prev_end, s.n_dofs());
        // subdomain 0 (odd elements) first
        assert!(s.element_order()[..4].iter().all(|k| k % 2 == 1));
    }
}
