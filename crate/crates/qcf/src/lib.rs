//! File formats, SVG rendering and the command-line front end for
//! `qcf-core`.

pub mod cli;
pub mod io;
pub mod report;
pub mod svg;
pub mod verify;
