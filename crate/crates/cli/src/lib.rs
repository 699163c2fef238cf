pub mod commands;
pub mod document;
