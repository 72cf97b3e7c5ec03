//! The two 25-step reference sequences, stored verbatim so generator
//! changes cannot silently drift away from the published listings.

use sweetspot_core::object::{dominates, validate_levels, LevelVector, ObjectSpec};
use sweetspot_core::schedule::{full_schedule, level_vector_at, SchedulePolicy};

const INCREASING: [[u32; 6]; 25] = [
    [1, 1, 1, 1, 1, 1],
    [2, 1, 1, 1, 1, 1],
    [2, 2, 1, 1, 1, 1],
    [2, 2, 2, 1, 1, 1],
    [2, 2, 2, 2, 1, 1],
    [2, 2, 2, 2, 2, 1],
    [2, 2, 2, 2, 2, 2],
    [3, 2, 2, 2, 2, 2],
    [3, 3, 2, 2, 2, 2],
    [3, 3, 3, 2, 2, 2],
    [3, 3, 3, 3, 2, 2],
    [3, 3, 3, 3, 3, 2],
    [3, 3, 3, 3, 3, 3],
    [4, 3, 3, 3, 3, 3],
    [4, 4, 3, 3, 3, 3],
    [4, 4, 4, 3, 3, 3],
    [4, 4, 4, 4, 3, 3],
    [4, 4, 4, 4, 4, 3],
    [4, 4, 4, 4, 4, 4],
    [5, 4, 4, 4, 4, 4],
    [5, 5, 4, 4, 4, 4],
    [5, 5, 5, 4, 4, 4],
    [5, 5, 5, 5, 4, 4],
    [5, 5, 5, 5, 5, 4],
    [5, 5, 5, 5, 5, 5],
];

const DECREASING: [[u32; 6]; 25] = [
    [5, 5, 5, 5, 5, 5],
    [4, 5, 5, 5, 5, 5],
    [4, 4, 5, 5, 5, 5],
    [4, 4, 4, 5, 5, 5],
    [4, 4, 4, 4, 5, 5],
    [4, 4, 4, 4, 4, 5],
    [4, 4, 4, 4, 4, 4],
    [3, 4, 4, 4, 4, 4],
    [3, 3, 4, 4, 4, 4],
    [3, 3, 3, 4, 4, 4],
    [3, 3, 3, 3, 4, 4],
    [3, 3, 3, 3, 3, 4],
    [3, 3, 3, 3, 3, 3],
    [2, 3, 3, 3, 3, 3],
    [2, 2, 3, 3, 3, 3],
    [2, 2, 2, 3, 3, 3],
    [2, 2, 2, 2, 3, 3],
    [2, 2, 2, 2, 2, 3],
    [2, 2, 2, 2, 2, 2],
    [1, 2, 2, 2, 2, 2],
    [1, 1, 2, 2, 2, 2],
    [1, 1, 1, 2, 2, 2],
    [1, 1, 1, 1, 2, 2],
    [1, 1, 1, 1, 1, 2],
    [1, 1, 1, 1, 1, 1],
];

fn spec() -> ObjectSpec {
    ObjectSpec::default_six_element()
}

#[test]
fn increasing_matches_reference_listing_exactly() {
    let steps = full_schedule(&SchedulePolicy::increasing(), &spec()).unwrap();
    assert_eq!(steps.len(), 25);
    for (step, expected) in steps.iter().zip(INCREASING) {
        assert_eq!(
            step.levels,
            LevelVector(expected.to_vec()),
            "contact {}",
            step.contact
        );
    }
}

#[test]
fn decreasing_matches_reference_listing_exactly() {
    let steps = full_schedule(&SchedulePolicy::decreasing(), &spec()).unwrap();
    assert_eq!(steps.len(), 25);
    for (step, expected) in steps.iter().zip(DECREASING) {
        assert_eq!(
            step.levels,
            LevelVector(expected.to_vec()),
            "contact {}",
            step.contact
        );
    }
}

#[test]
fn listings_are_mirror_images() {
    for (inc, dec) in INCREASING.iter().zip(DECREASING) {
        for (a, b) in inc.iter().zip(dec) {
            assert_eq!(a + b, 6);
        }
    }
}

#[test]
fn generated_sequences_are_mirror_images() {
    let spec = spec();
    let lmax = spec.max_common_level();
    let inc = full_schedule(&SchedulePolicy::increasing(), &spec).unwrap();
    let dec = full_schedule(&SchedulePolicy::decreasing(), &spec).unwrap();
    for (a, b) in inc.iter().zip(&dec) {
        let mirrored: Vec<u32> = a.levels.0.iter().map(|l| lmax + 1 - l).collect();
        assert_eq!(LevelVector(mirrored), b.levels, "contact {}", a.contact);
    }
}

#[test]
fn contacts_26_through_30_hold_the_final_vector() {
    let spec = spec();
    for contact in 26..=30 {
        let inc = level_vector_at(&SchedulePolicy::increasing(), &spec, contact).unwrap();
        assert_eq!(inc, LevelVector(INCREASING[24].to_vec()));
        let dec = level_vector_at(&SchedulePolicy::decreasing(), &spec, contact).unwrap();
        assert_eq!(dec, LevelVector(DECREASING[24].to_vec()));
    }
}

#[test]
fn every_step_validates_and_dominates_its_predecessor() {
    let spec = spec();
    let steps = full_schedule(&SchedulePolicy::increasing(), &spec).unwrap();
    for pair in steps.windows(2) {
        validate_levels(&spec, &pair[1].levels).unwrap();
        assert!(dominates(&pair[1].levels, &pair[0].levels).unwrap());
        assert!(!dominates(&pair[0].levels, &pair[1].levels).unwrap());
    }
}
