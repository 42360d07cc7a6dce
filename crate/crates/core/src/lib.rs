pub mod grid;
pub mod paths;
pub mod descriptors;
pub mod analysis;
pub mod protocol;
pub mod sim;
pub mod verify;
