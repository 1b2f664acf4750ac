use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The nine correlation specifications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    Ccc,
    CccPe,
    StccTue,
    StccTupe,
    Dcc,
    DccTue,
    DccTupe,
    DccTupePsi,
    DccPe,
}

impl ModelKind {
    pub const ALL: [ModelKind; 9] = [
        ModelKind::Ccc,
        ModelKind::CccPe,
        ModelKind::StccTue,
        ModelKind::StccTupe,
        ModelKind::Dcc,
        ModelKind::DccTue,
        ModelKind::DccTupe,
        ModelKind::DccTupePsi,
        ModelKind::DccPe,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Ccc => "CCC",
            ModelKind::CccPe => "CCC-PE",
            ModelKind::StccTue => "STCC-TUE",
            ModelKind::StccTupe => "STCC-TUPE",
            ModelKind::Dcc => "DCC",
            ModelKind::DccTue => "DCC-TUE",
            ModelKind::DccTupe => "DCC-TUPE",
            ModelKind::DccTupePsi => "DCC-TUPE-psi",
            ModelKind::DccPe => "DCC-PE",
        }
    }

    pub fn is_dcc(self) -> bool {
        matches!(self, ModelKind::Dcc | ModelKind::DccTue | ModelKind::DccTupe | ModelKind::DccTupePsi | ModelKind::DccPe)
    }

    pub fn uses_exogenous(self) -> bool {
        matches!(
            self,
            ModelKind::StccTue | ModelKind::StccTupe | ModelKind::DccTue | ModelKind::DccTupe | ModelKind::DccTupePsi
        )
    }

    pub fn uses_regime(self) -> bool {
        matches!(
            self,
            ModelKind::CccPe | ModelKind::StccTupe | ModelKind::DccTupe | ModelKind::DccTupePsi | ModelKind::DccPe
        )
    }

    /// Number of freely estimated parameters for `n` assets. DCC targets are
    /// not counted: they come from the correlation-targeting step.
    pub fn parameter_count(self, n: usize) -> usize {
        let m = n * (n - 1) / 2;
        match self {
            ModelKind::Ccc => m,
            ModelKind::CccPe => 2 * m,
            ModelKind::StccTue => 2 * m + 2,
            ModelKind::StccTupe => 4 * m + 4,
            ModelKind::Dcc => 2,
            ModelKind::DccTue => 3,
            ModelKind::DccTupe => 6,
            ModelKind::DccTupePsi => 4,
            ModelKind::DccPe => 4,
        }
    }

    /// Whether `self` is obtained from `larger` by parameter restrictions.
    pub fn is_nested_in(self, larger: ModelKind) -> bool {
        use ModelKind::*;
        matches!(
            (self, larger),
            (Ccc, CccPe)
                | (Ccc, StccTue)
                | (Ccc, StccTupe)
                | (CccPe, StccTupe)
                | (StccTue, StccTupe)
                | (Dcc, DccTue)
                | (Dcc, DccPe)
                | (Dcc, DccTupePsi)
                | (Dcc, DccTupe)
                | (DccTue, DccTupePsi)
                | (DccTue, DccTupe)
                | (DccTupePsi, DccTupe)
                | (DccPe, DccTupe)
        )
    }

    /// The nested comparisons reported for the LR panel, as
    /// `(restricted, unrestricted)`.
    pub const NESTED_COMPARISONS: [(ModelKind, ModelKind); 9] = [
        (ModelKind::StccTue, ModelKind::StccTupe),
        (ModelKind::Dcc, ModelKind::DccTupe),
        (ModelKind::DccTue, ModelKind::DccTupe),
        (ModelKind::DccTupePsi, ModelKind::DccTupe),
        (ModelKind::DccPe, ModelKind::DccTupe),
        (ModelKind::DccTue, ModelKind::DccTupePsi),
        (ModelKind::Dcc, ModelKind::DccTue),
        (ModelKind::Dcc, ModelKind::DccPe),
        (ModelKind::Dcc, ModelKind::DccTupePsi),
    ];

    /// Directly nested sub-models used as warm starts.
    pub fn nested_submodels(self) -> Vec<ModelKind> {
        ModelKind::ALL.iter().copied().filter(|k| k.is_nested_in(self)).collect()
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let key: String = s
            .trim()
            .to_ascii_uppercase()
            .replace('ψ', "PSI")
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect();
        Ok(match key.as_str() {
            "CCC" => ModelKind::Ccc,
            "CCCPE" => ModelKind::CccPe,
            "STCCTUE" => ModelKind::StccTue,
            "STCCTUPE" => ModelKind::StccTupe,
            "DCC" => ModelKind::Dcc,
            "DCCTUE" => ModelKind::DccTue,
            "DCCTUPE" => ModelKind::DccTupe,
            "DCCTUPEPSI" => ModelKind::DccTupePsi,
            "DCCPE" => ModelKind::DccPe,
            _ => return Err(Error::invalid(format!("unknown model {s:?}"))),
        })
    }
}

/// A model kind bound to a cross-section size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: ModelKind,
    pub n_assets: usize,
    pub uses_exogenous: bool,
    pub uses_regime: bool,
    pub parameter_count: usize,
}

impl ModelSpec {
    pub fn new(family: ModelKind, n_assets: usize) -> Self {
        ModelSpec {
            family,
            n_assets,
            uses_exogenous: family.uses_exogenous(),
            uses_regime: family.uses_regime(),
            parameter_count: family.parameter_count(n_assets),
        }
    }
}
