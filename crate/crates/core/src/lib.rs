pub mod bellman;
pub mod dims;
pub mod error;
pub mod function_class;
pub mod golf;
pub mod io;
pub mod mdp;
pub mod olive;
pub mod zoo;

pub use error::{Error, Result};
