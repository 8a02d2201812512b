//! JSON output helpers.

use serde::Serialize;

/// Pretty JSON with object keys sorted at every level, newline-terminated.
pub fn to_sorted_json<T: Serialize>(value: &T) -> String {
    // serde_json's default map is ordered, so a round trip through Value
    // sorts every object.
    let v = serde_json::to_value(value).expect("value serializes");
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct T {
        zeta: u8,
        alpha: u8,
    }

    #[test]
    fn keys_are_sorted() {
        let s = to_sorted_json(&T { zeta: 1, alpha: 2 });
        assert!(s.find("alpha").unwrap() < s.find("zeta").unwrap());
    }
}
