use crate::error::{Error, Result};
use crate::geometry::{GridDomain, NodeKind};

/// One value per grid node, tied to the domain it was built on.
#[derive(Debug, Clone)]
pub struct ScalarField {
    domain: GridDomain,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(domain: &GridDomain) -> Self {
        Self {
            domain: domain.clone(),
            values: vec![0.0; domain.node_count()],
        }
    }

    /// Builds a field from per-node values; Boundary and Exterior entries are
    /// forced to zero.
    pub fn from_values(domain: &GridDomain, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.node_count() {
            return Err(Error::DomainMismatch);
        }
        for (v, k) in values.iter_mut().zip(domain.kinds()) {
            if *k != NodeKind::Interior {
                *v = 0.0;
            }
        }
        Ok(Self {
            domain: domain.clone(),
            values,
        })
    }

    /// Evaluates `f` at the coordinates of every interior node.
    pub fn from_fn(domain: &GridDomain, mut f: impl FnMut([f64; 2]) -> f64) -> Self {
        let mut field = Self::zeros(domain);
        for &n in domain.interior() {
            field.values[n] = f(domain.position(n));
        }
        field
    }

    /// Constant value on interior nodes.
    pub fn constant(domain: &GridDomain, c: f64) -> Self {
        Self::from_fn(domain, |_| c)
    }

    pub(crate) fn from_interior(domain: &GridDomain, interior: &[f64]) -> Self {
        let mut field = Self::zeros(domain);
        for (&n, &v) in domain.interior().iter().zip(interior) {
            field.values[n] = v;
        }
        field
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, node: usize) -> f64 {
        self.values[node]
    }

    /// Values at interior nodes, in `domain.interior()` order.
    pub fn interior_values(&self) -> Vec<f64> {
        self.domain.interior().iter().map(|&n| self.values[n]).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.domain
            .interior()
            .iter()
            .fold(f64::NEG_INFINITY, |m, &n| m.max(self.values[n]))
    }

    pub fn min(&self) -> f64 {
        self.domain
            .interior()
            .iter()
            .fold(f64::INFINITY, |m, &n| m.min(self.values[n]))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            domain: self.domain.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        let mut out = Self::zeros(&self.domain);
        for &n in self.domain.interior() {
            out.values[n] = f(self.values[n]);
        }
        out
    }

    /// `sup |self − other|` over all nodes.
    pub fn sup_distance(&self, other: &ScalarField) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    }

    pub(crate) fn check_same(&self, other: &ScalarField) -> Result<()> {
        if self.domain.same_as(&other.domain) {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
