pub mod boxes;
pub mod error;
pub mod format;
pub mod locality;
pub mod par;
pub mod rational;
pub mod simplex;
pub mod search;
pub mod wiring;
