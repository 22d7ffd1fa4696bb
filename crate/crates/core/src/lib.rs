pub mod error;
pub mod exec;
pub mod fft2;
pub mod flowrule;
pub mod macro1d;
pub mod micro1d;
pub mod micro2d;
pub mod params;
pub mod strain;
