//! Hosts the `acceptance` test target:
//! `cargo test -p cvqkd-validation --test acceptance`.
