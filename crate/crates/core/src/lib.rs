//! Truncated Fock-space simulation of quasi-ECS generation in a waveguide
//! trimer, lossy distribution, catalysis purification and photon-number
//! teleportation of cat states.

pub mod error;
pub mod fock;
pub mod linear_optics;
pub mod math;
pub mod protocol;
pub mod states;

pub use num_complex::Complex64 as C64;

pub use error::{Error, Result};
pub use fock::{
    fidelity, fock_project, normalize, partial_trace, purity, tensor_product, DensityOperator, PureState,
    TruncationSpec,
};
pub use linear_optics::{
    apply_loss_ancilla, apply_loss_kraus, apply_mode_unitary, beamsplitter_unitary, trimer_unitary, FockLift, LossSpec,
    ModeTransform, ModeUnitary, TrimerConfig,
};
pub use protocol::{
    average_cat_fidelity, build_resource, closed_form_rho_lossy, closed_form_rho_sub, coherent_teleportation,
    distribute, generate_quasi_ecs, purify, teleport, tmsvs_baseline, CatAverage, GenerationConfig, HeraldOutcome,
    Heralded, PipelineConfig, PipelineResource, PurificationConfig, TeleportResult, Teleporter,
};
pub use states::{
    make_cat, make_coherent, make_ecs, make_tmsvs, six_cat_states, CatSpec, EcsSpec, Parity, Prepared, SqueezingSpec,
};
