//! Third-order Tucker tensors: unfoldings and mode products, HOSVD
//! truncation (dense and structured), the implicit right-factor
//! factorizations of the unfoldings, composite index selection over them,
//! oblique tangent projection from fiber samples, and the projected RK
//! stepper on the fixed multilinear-rank manifold.

pub mod project;
pub mod stepper;
pub mod tensor;

pub use project::{
    build_mode_grams, build_tucker_selections, other_modes, project_oblique_tucker,
    project_oblique_tucker_dense, project_orthogonal_tucker_dense,
    project_orthogonal_tucker_sum, sample_v_selection, ModeGram, TuckerSelections, VSelection,
};
pub use stepper::{
    integrate_dense_rk_tensor, integrate_tucker, tucker_prk_step, TuckerIntegrateOpts,
    TuckerIntegrationOutput, TuckerStepStats,
};
pub use tensor::{
    fix_factor_phases, hosvd_truncate, hosvd_truncate_sum, Tensor3, TuckerSum, TuckerTensor,
};
