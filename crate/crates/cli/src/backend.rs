//! Backend instantiation from a run configuration: the exact parabolic
//! kernel/field pair, or a seeded last-passage box behind the scaling map.

use kpzfp_core::busemann::{BusemannField, ParabolicBusemann};
use kpzfp_core::landscape::{LandscapeKernel, ParabolicBackend};
use kpzfp_core::lpp::{sample_weights, LatticeBounds, LatticeBox, LppBusemann, LppKernel, ScalingMap};

use crate::config::{BackendKind, RunConfig};
use crate::error::Result;

/// An instantiated backend; owns the weight box when stochastic.
pub enum BackendInstance {
    Parabolic,
    Lpp {
        lattice: LatticeBox,
        map: ScalingMap,
        horizon: i64,
        checks: usize,
    },
}

impl BackendInstance {
    pub fn build(rc: &RunConfig) -> Result<Self> {
        match rc.backend {
            BackendKind::Parabolic => Ok(BackendInstance::Parabolic),
            BackendKind::Lpp => {
                let p = rc.lpp;
                let bounds = LatticeBounds::new(p.i_min, p.i_max, p.j_min, p.j_max);
                let lattice = sample_weights(rc.seed, bounds)?;
                Ok(BackendInstance::Lpp {
                    lattice,
                    map: ScalingMap::new(p.n),
                    horizon: p.horizon,
                    checks: p.checks,
                })
            }
        }
    }

    pub fn busemann(&self) -> Box<dyn BusemannField + '_> {
        match self {
            BackendInstance::Parabolic => Box::new(ParabolicBusemann),
            BackendInstance::Lpp {
                lattice,
                map,
                horizon,
                checks,
            } => Box::new(LppBusemann {
                lattice,
                map: *map,
                horizon: *horizon,
                checks: *checks,
            }),
        }
    }

    pub fn kernel(&self) -> Box<dyn LandscapeKernel + '_> {
        match self {
            BackendInstance::Parabolic => Box::new(ParabolicBackend),
            BackendInstance::Lpp { lattice, map, .. } => Box::new(LppKernel {
                lattice,
                map: *map,
            }),
        }
    }

    pub fn descriptor(&self) -> String {
        self.kernel().descriptor()
    }

    pub fn is_stochastic(&self) -> bool {
        !matches!(self, BackendInstance::Parabolic)
    }
}
