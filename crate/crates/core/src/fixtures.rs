//! The shipped `.crn` example networks.

macro_rules! fixture {
    ($name:literal) => {
        ($name, include_str!(concat!("../../../fixtures/", $name, ".crn")))
    };
}

pub const ALL: [(&str, &str); 9] = [
    fixture!("s1s2"),
    fixture!("first_order_open"),
    fixture!("first_order_closed"),
    fixture!("enzyme1"),
    fixture!("enzyme2"),
    fixture!("fast_subnetwork"),
    fixture!("mm_counterexample"),
    fixture!("irreversible"),
    fixture!("cycle3_not_db"),
];

/// Source text of a fixture by file stem.
pub fn source(name: &str) -> Option<&'static str> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn load(name: &str) -> Option<crate::NetworkDocument> {
    source(name).map(|s| crate::parse(s).expect("shipped fixture parses"))
}
