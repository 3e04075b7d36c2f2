//! Trevisan's extractor built from a bit-wise encodable list-decodable code,
//! together with exact verification tools and the reconstruction game used to
//! argue security against bounded quantum storage.

pub mod bits;
pub mod code;
pub mod design;
pub mod error;
pub mod exec;
pub mod gf2e;
pub mod rac;
pub mod reconstruct;
pub mod trevisan;
pub mod verify;

pub use bits::{BitString, FiniteDist, FlatSource, Rational};
pub use error::{Error, Result};
pub use exec::Strategy;
