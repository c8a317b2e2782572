//! Vanilla GCN, snowball and truncated Krylov networks with hand-written
//! reverse passes.

mod backward;
mod collapse;
mod forward;
mod params;
mod spec;

pub use backward::backward;
pub use collapse::collapse_linear_snowball;
pub use forward::{
    forward, forward_snowball, forward_truncated_krylov, forward_vanilla, snowball_layer,
    truncated_layer, vanilla_layer, ForwardTape, Mode,
};
pub use params::{init_params, InitScheme, ModelParams};
pub use spec::{Architecture, Classifier, ModelSpec};
