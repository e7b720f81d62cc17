//! Mixed finite element solver for the steady linearized R13 equations in 2D.

pub mod assembly;
pub mod cases;
pub mod elements;
pub mod interp;
pub mod mesh;
pub mod postproc;
pub mod solver;
pub mod tensorops;
