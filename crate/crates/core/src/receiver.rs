use crate::error::Result;
use crate::kinetics::{LigandReceptorPair, RecognitionLayer};
use crate::physchem::{self, Environment};
use crate::transducer::TransducerConfig;

/// A complete receiver: medium, recognition chemistry, receptor layer and FET.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Receiver {
    pub environment: Environment,
    pub pair: LigandReceptorPair,
    pub layer: RecognitionLayer,
    pub transducer: TransducerConfig,
}

impl Receiver {
    /// Builds a receiver, deriving the receptor count from the transducer area.
    pub fn new(
        environment: Environment,
        pair: LigandReceptorPair,
        receptor_density: f64,
        transducer: TransducerConfig,
    ) -> Result<Self> {
        environment.validate()?;
        pair.validate()?;
        transducer.validate()?;
        let layer = RecognitionLayer::new(receptor_density, transducer.area())?;
        Ok(Receiver {
            environment,
            pair,
            layer,
            transducer,
        })
    }

    /// Default SiNW receiver parameterization.
    pub fn table1() -> Self {
        Receiver::new(
            Environment::table1(),
            LigandReceptorPair::table1(),
            2e16,
            TransducerConfig::table1(),
        )
        .expect("default parameters are valid")
    }

    pub fn dissociation_constant(&self) -> f64 {
        crate::kinetics::dissociation_constant(&self.pair)
    }

    pub fn debye_length(&self) -> Result<f64> {
        physchem::debye_length(&self.environment)
    }

    /// Screened charge N_e·q_eff of one bound ligand (C).
    pub fn charge_per_ligand(&self) -> Result<f64> {
        physchem::ligand_charge(&self.pair, self.debye_length()?)
    }
}
