pub mod alloc;
pub mod corpus;
pub mod evaluation;
pub mod hashing;
pub mod pipeline;
pub mod service;
pub mod sparse;
pub mod student;
pub mod teacher;
pub mod topics;
pub mod weak_labeler;
