pub mod ansatz;
pub mod bridge;
pub mod catalog;
pub mod determining;
pub mod doob;
pub mod error;
pub mod expr;
pub mod io;
pub mod linalg;
pub mod montecarlo;
pub mod sde;
pub mod symbol;
pub mod transform;

pub use error::{Error, Result};
pub use expr::{Coeff, Expr, Monomial, PMono, ParamPoly, Point, Q64};
pub use symbol::{sym, Symbol};
pub use ansatz::{closure_check, solve, AnsatzBasis, Generator, Mode, SymmetrySpace};
pub use bridge::{pde_to_sde, sde_to_pde, PdeSymmetry};
pub use catalog::CatalogEntry;
pub use determining::{doob_residual, pde_residual, sde_residual, ResidualReport};
pub use doob::{classify, recover_k, Classification, DensityRecipe, KRecovery, SymmetryClass};
pub use io::{parse_expr, ModelFile};
pub use montecarlo::{McConfig, PathBundle};
pub use sde::{Interval, Sde};
pub use transform::{FiniteTransform, InfTransform};
