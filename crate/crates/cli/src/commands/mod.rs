pub mod evaluate;
pub mod fit;
pub mod simulate;
pub mod study;
