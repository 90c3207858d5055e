use ccal_cli::io::{parse_first_stage, parse_second_stage, write_first_stage, write_second_stage};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6f64, -1.0..1.0f64, Just(0.0)]
}

proptest! {
    #[test]
    fn standards_round_trip(
        rows in prop::collection::vec((finite(), 0.0..1e3f64, finite()), 3..40),
    ) {
        let mut text = String::from("X,u,Y\n");
        for (x, u, y) in &rows {
            text.push_str(&format!("{x},{u},{y}\n"));
        }
        let Ok(first) = parse_first_stage(text.as_bytes()) else {
            // Degenerate designs are rejected, which is not a round-trip concern.
            return Ok(());
        };
        let again = parse_first_stage(write_first_stage(&first).as_bytes()).unwrap();
        prop_assert_eq!(first.x_fixed(), again.x_fixed());
        prop_assert_eq!(first.y(), again.y());
        // u is written as sqrt(u^2), which can move the last bit of u^2.
        for (a, b) in first.delta_var().iter().zip(again.delta_var()) {
            prop_assert!((a - b).abs() <= 4.0 * f64::EPSILON * a.abs());
        }
        let third = parse_first_stage(write_first_stage(&again).as_bytes()).unwrap();
        prop_assert_eq!(again.y(), third.y());
    }

    #[test]
    fn samples_round_trip(y0 in prop::collection::vec(finite(), 2..30)) {
        let mut text = String::from("Y0\n");
        for y in &y0 {
            text.push_str(&format!("{y}\n"));
        }
        let second = parse_second_stage(text.as_bytes()).unwrap();
        prop_assert_eq!(second.y0(), y0.as_slice());
        let again = parse_second_stage(write_second_stage(&second).as_bytes()).unwrap();
        prop_assert_eq!(second, again);
    }

    #[test]
    fn trailing_newline_is_optional(y0 in prop::collection::vec(finite(), 2..10)) {
        let body: Vec<String> = y0.iter().map(|y| y.to_string()).collect();
        let text = format!("Y0\n{}", body.join("\n"));
        let parsed = parse_second_stage(text.as_bytes()).unwrap();
        prop_assert_eq!(parsed.y0(), y0.as_slice());
    }
}
