pub mod digit_model;
pub mod engine;
pub mod numerics;
pub mod oracle;
pub mod series;
pub mod verify;
