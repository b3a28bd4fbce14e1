pub mod certify;
pub mod counterexample;
pub mod mc_ici;
pub mod moments;
pub mod transform;
