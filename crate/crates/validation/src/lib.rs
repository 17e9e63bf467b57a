//! End-to-end acceptance checks live in `tests/acceptance.rs`. This package
//! sorts after the others so the full suite reports every other test first.
