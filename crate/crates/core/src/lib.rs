pub mod audio_io;
pub mod dsp;
pub mod ensemble;
pub mod nn;
pub mod harness;
