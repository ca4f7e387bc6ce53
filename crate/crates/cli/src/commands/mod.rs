pub mod fit;
pub mod select;
pub mod simulate;
pub mod verify;
