pub use refab_core;
