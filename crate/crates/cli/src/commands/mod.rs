pub mod continuous;
pub mod detector;
pub mod discrete;
pub mod fokker_planck;
pub mod qec;
pub mod single;
