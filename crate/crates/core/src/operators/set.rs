// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

use std::sync::Arc;

use super::{
    build_affine, build_canonical, build_spin, ladder_lowering, GridSpec, OperatorMatrix,
    PhysicalParams, Representation, Storage,
};
use crate::error::{Error, Result};
use crate::phase::Family;

/// The basic operators a classical variable can be promoted to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Generator {
    P,
    Q,
    D,
    QInv,
    S1,
    S2,
    S3,
}

impl Generator {
    pub fn family_allows(self, family: Family) -> bool {
        use Generator::*;
        match family {
            Family::Canonical => matches!(self, P | Q),
            Family::Affine => matches!(self, D | Q | QInv),
            Family::Spin => matches!(self, S1 | S2 | S3),
        }
    }
}

/// A representation together with its generator matrices.
#[derive(Clone, Debug)]
pub struct OperatorSet {
    pub family: Family,
    pub rep: Arc<Representation>,
    generators: Vec<(Generator, OperatorMatrix)>,
}

impl OperatorSet {
    pub fn canonical(dim: usize, params: PhysicalParams) -> Result<Self> {
        let (rep, q, p) = build_canonical(dim, params)?;
        Ok(Self {
            family: Family::Canonical,
            rep,
            generators: vec![(Generator::P, p), (Generator::Q, q)],
        })
    }

    pub fn spin(s: f64, hbar: f64) -> Result<Self> {
        let (rep, s1, s2, s3) = build_spin(s, hbar)?;
        Ok(Self {
            family: Family::Spin,
            rep,
            generators: vec![(Generator::S1, s1), (Generator::S2, s2), (Generator::S3, s3)],
        })
    }

    pub fn affine(grid: &GridSpec, params: PhysicalParams) -> Result<Self> {
        let ops = build_affine(grid, params)?;
        Ok(Self {
            family: Family::Affine,
            rep: ops.rep,
            generators: vec![
                (Generator::D, ops.d),
                (Generator::Q, ops.q),
                (Generator::QInv, ops.q_inv),
            ],
        })
    }

    pub fn family_check(&self, family: Family) -> Result<()> {
        if self.family == family {
            Ok(())
        } else {
            Err(Error::FamilyMismatch { expected: family.to_string(), got: self.family.to_string() })
        }
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.rep.params
    }

    pub fn get(&self, g: Generator) -> Result<&OperatorMatrix> {
        self.generators
            .iter()
            .find(|(k, _)| *k == g)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::WrongFamilyVariable {
                name: format!("{g:?}"),
                family: self.family.to_string(),
            })
    }

    /// Fock lowering operator; canonical family only.
    pub fn lowering(&self) -> Result<OperatorMatrix> {
        if self.family != Family::Canonical {
            return Err(Error::FamilyMismatch {
                expected: Family::Canonical.to_string(),
                got: self.family.to_string(),
            });
        }
        Ok(OperatorMatrix::from_parts_unchecked(
            self.rep.clone(),
            Storage::Dense(ladder_lowering(self.rep.dim)),
        ))
    }
}
