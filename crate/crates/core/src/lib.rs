pub mod document;
pub mod infer;
pub mod schema;
pub mod truncate;
pub mod mapping;
pub mod gateway;
pub mod session;
