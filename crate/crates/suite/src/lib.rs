//! Holds the `acceptance` test target, which checks the whole workspace
//! end to end. Run it with `cargo test -p delayshield-suite --test acceptance`.
