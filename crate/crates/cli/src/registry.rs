//! The fixed experiment registry.
//!
//! E1.x trains on D0 plus one augmented block; E2.x stacks blocks in the
//! effectiveness order D2, D4, D1, D3, D5; E3.x ablates the weighted-loss
//! terms on D0; E4.x sweeps alpha on the fully augmented set; E5.x further
//! trains the pretrained baselines M1..M5.

use coreseis::augment::AugmentOp;
use coreseis::loss::{LossSpec, WeightedSpec};

use crate::CliError;

pub const FRESH_REPEATS: usize = 32;
pub const TRANSFER_REPEATS: usize = 6;
pub const PRETRAINED_MODELS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExperimentId {
    pub family: u8,
    pub sub: u8,
}

impl std::fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "E{}.{}", self.family, self.sub)
    }
}

impl std::str::FromStr for ExperimentId {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let unknown = || CliError::Config {
            path: "experiment id".into(),
            message: format!("unknown experiment {s:?}"),
        };
        let rest = s.strip_prefix('E').ok_or_else(unknown)?;
        let (family, sub) = rest.split_once('.').ok_or_else(unknown)?;
        let id = ExperimentId {
            family: family.parse().map_err(|_| unknown())?,
            sub: sub.parse().map_err(|_| unknown())?,
        };
        if all_ids().contains(&id) {
            Ok(id)
        } else {
            Err(unknown())
        }
    }
}

/// How the weighted-loss registry entries parameterize [`LossSpec`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossChoice {
    /// The Huber baseline used by E1/E2/E5.1; delta comes from the config.
    Baseline,
    Weighted {
        alpha: f64,
        squared: bool,
        take_mean: bool,
    },
}

impl LossChoice {
    /// `verbatim_eq1` drops the unit floor, reproducing the published form
    /// exactly; the default keeps the floor so the factor decays to one.
    pub fn to_spec(self, huber_delta: f64, verbatim_eq1: bool) -> LossSpec {
        match self {
            LossChoice::Baseline => LossSpec::Huber { delta: huber_delta },
            LossChoice::Weighted {
                alpha,
                squared,
                take_mean,
            } => LossSpec::Weighted(WeightedSpec {
                alpha,
                squared,
                take_mean,
                floor_one: !verbatim_eq1,
                batch_max_beta: false,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    Fresh,
    Pretrained,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentDef {
    pub id: ExperimentId,
    /// Augmented blocks appended to D0, in order.
    pub ops: Vec<AugmentOp>,
    pub loss: LossChoice,
    pub repeats: usize,
    pub start: Start,
}

/// Incremental composition order: D2, D4, D1, D3, D5.
const STACK: [AugmentOp; 5] = [
    AugmentOp::R180,
    AugmentOp::MirrorV,
    AugmentOp::R90,
    AugmentOp::R270,
    AugmentOp::MirrorH,
];

pub fn all_ids() -> Vec<ExperimentId> {
    let mut ids = Vec::new();
    for sub in 0..=5 {
        ids.push(ExperimentId { family: 1, sub });
    }
    for sub in 1..=4 {
        ids.push(ExperimentId { family: 2, sub });
    }
    for sub in 1..=4 {
        ids.push(ExperimentId { family: 3, sub });
    }
    for sub in 0..=3 {
        ids.push(ExperimentId { family: 4, sub });
    }
    for sub in 1..=3 {
        ids.push(ExperimentId { family: 5, sub });
    }
    ids
}

pub fn lookup(id: ExperimentId) -> Result<ExperimentDef, CliError> {
    let single = |op| vec![op];
    let stack = |n: usize| STACK[..n].to_vec();
    let weighted = |alpha, squared, take_mean| LossChoice::Weighted {
        alpha,
        squared,
        take_mean,
    };

    let def = match (id.family, id.sub) {
        (1, 0) => ExperimentDef {
            id,
            ops: vec![],
            loss: LossChoice::Baseline,
            repeats: FRESH_REPEATS,
            start: Start::Fresh,
        },
        (1, 1) => entry(id, single(AugmentOp::R90)),
        (1, 2) => entry(id, single(AugmentOp::R180)),
        (1, 3) => entry(id, single(AugmentOp::R270)),
        (1, 4) => entry(id, single(AugmentOp::MirrorV)),
        (1, 5) => entry(id, single(AugmentOp::MirrorH)),
        (2, n @ 1..=4) => entry(id, stack(n as usize + 1)),
        (3, 1) => loss_entry(id, weighted(1.0, true, true)),
        (3, 2) => loss_entry(id, weighted(1.0, false, true)),
        (3, 3) => loss_entry(id, weighted(1.0, true, false)),
        (3, 4) => loss_entry(id, weighted(1.0, false, false)),
        (4, n @ 0..=3) => ExperimentDef {
            id,
            ops: stack(5),
            loss: weighted(n as f64 + 1.0, true, true),
            repeats: FRESH_REPEATS,
            start: Start::Fresh,
        },
        (5, 1) => ExperimentDef {
            id,
            ops: stack(5),
            loss: LossChoice::Baseline,
            repeats: TRANSFER_REPEATS,
            start: Start::Pretrained,
        },
        (5, n @ 2..=3) => ExperimentDef {
            id,
            ops: stack(5),
            loss: weighted(n as f64 - 1.0, true, true),
            repeats: TRANSFER_REPEATS,
            start: Start::Pretrained,
        },
        _ => {
            return Err(CliError::Config {
                path: "experiment id".into(),
                message: format!("unknown experiment {id}"),
            })
        }
    };
    Ok(def)
}

fn entry(id: ExperimentId, ops: Vec<AugmentOp>) -> ExperimentDef {
    ExperimentDef {
        id,
        ops,
        loss: LossChoice::Baseline,
        repeats: FRESH_REPEATS,
        start: Start::Fresh,
    }
}

fn loss_entry(id: ExperimentId, loss: LossChoice) -> ExperimentDef {
    ExperimentDef {
        id,
        ops: vec![],
        loss,
        repeats: FRESH_REPEATS,
        start: Start::Fresh,
    }
}
