pub mod calculus;
pub mod cli;
pub mod element;
pub mod error;
pub mod factorization;
pub mod grade;
pub mod instance;
pub mod oracles;
pub mod validate;
pub mod wiener;

pub use element::{Algebra, Element, ElementDoc, TailBounds, C64};
pub use error::{Error, ErrorClass, Result};
pub use grade::Grade;
pub use instance::{vage_constant, InstanceKind, InstanceSpec, Ladder, VageConstant};
