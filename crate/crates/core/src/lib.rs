pub mod engine;
pub mod lang;
pub mod process;
pub mod syntax;
