pub mod gendata;
pub mod learncmd;
pub mod report;
pub mod rl;
pub mod simulate;
