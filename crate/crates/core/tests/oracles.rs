//! Grid statistics checked against brute-force re-implementations.

mod common;

#[test]
fn every_3x3_over_free_road_obstacle() {
    common::oracles::exhaustive_3x3();
}

#[test]
fn random_6x6_over_all_codes() {
    common::oracles::random_6x6(500, 6);
}
