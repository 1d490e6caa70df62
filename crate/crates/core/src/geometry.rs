//! A metric, an embedding and a base point: the full pointwise evaluation.

use alloc::vec::Vec;

use crate::ambient::{AmbientStack, MetricField};
use crate::error::Result;
use crate::hypersurface::{Embedding, SurfaceJets, SurfaceStack};

#[derive(Clone, Debug)]
pub struct Setup {
    pub metric: MetricField,
    pub embedding: Embedding,
}

impl Setup {
    pub fn new(metric: MetricField, embedding: Embedding) -> Setup {
        Setup { metric, embedding }
    }

    pub fn n(&self) -> usize {
        self.embedding.n()
    }

    pub fn at(&self, x0: &[f64], order: usize) -> Result<Geometry> {
        Geometry::new(self, x0, order)
    }
}

/// Jets and frame values of one hypersurface point.
#[derive(Clone, Debug)]
pub struct Geometry {
    pub n: usize,
    pub order: usize,
    pub x0: Vec<f64>,
    pub jets: SurfaceJets,
    pub surface: SurfaceStack,
    pub ambient: AmbientStack,
}

impl Geometry {
    pub fn new(setup: &Setup, x0: &[f64], order: usize) -> Result<Geometry> {
        let jets = SurfaceJets::new(&setup.metric, &setup.embedding, x0, order)?;
        let surface = SurfaceStack::build(&jets)?;
        let ambient = jets.ambient_stack()?;
        Ok(Geometry { n: jets.n, order, x0: x0.to_vec(), jets, surface, ambient })
    }
}
