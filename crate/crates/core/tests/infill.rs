use parsemunge::infill::{mark_targets, InfillKind, InfillSpec, TargetRule};
use parsemunge::registry::ColtypeClass;
use parsemunge::tidytable::CellValue;
use proptest::prelude::*;

fn column() -> impl Strategy<Value = Vec<CellValue>> {
    prop::collection::vec(
        prop_oneof![
            Just(CellValue::Missing),
            (-100i32..100).prop_map(|v| CellValue::Number(v as f64)),
        ],
        1..40,
    )
}

proptest! {
    #[test]
    fn non_targets_are_untouched(col in column(), k in 0usize..InfillKind::ALL.len()) {
        let kind = InfillKind::ALL[k];
        let mask = mark_targets(&col, TargetRule::MissingOnly);
        let spec = InfillSpec::fit(kind, &col, &mask, ColtypeClass::NumericOutput).unwrap();
        let mut out = col.clone();
        spec.apply(&mut out, &mask);
        for ((a, b), m) in col.iter().zip(&out).zip(&mask) {
            if !m {
                prop_assert!(a.bit_eq(b));
            }
        }
    }

    #[test]
    fn apply_uses_only_stored_stats(train in column(), test in column(), k in 0usize..InfillKind::ALL.len()) {
        let kind = InfillKind::ALL[k];
        let mask = mark_targets(&train, TargetRule::MissingOnly);
        let spec = InfillSpec::fit(kind, &train, &mask, ColtypeClass::NumericOutput).unwrap();
        let tmask = mark_targets(&test, TargetRule::MissingOnly);
        let mut a = test.clone();
        let mut b = test.clone();
        spec.apply(&mut a, &tmask);
        spec.apply(&mut b, &tmask);
        prop_assert_eq!(&a, &b);
        if let Some(fill) = &spec.fill {
            for (c, m) in a.iter().zip(&tmask) {
                if *m && kind != InfillKind::Adjacent {
                    prop_assert!(c.bit_eq(fill));
                }
            }
        }
    }
}

#[test]
fn train_statistics() {
    let col: Vec<CellValue> = [Some(1.0), None, Some(3.0), Some(3.0), None]
        .iter()
        .map(|v| v.map_or(CellValue::Missing, CellValue::Number))
        .collect();
    let mask = mark_targets(&col, TargetRule::MissingOnly);
    let fill = |k| InfillSpec::fit(k, &col, &mask, ColtypeClass::NumericOutput).unwrap().fill;
    assert_eq!(fill(InfillKind::Mean), Some(CellValue::Number(7.0 / 3.0)));
    assert_eq!(fill(InfillKind::Median), Some(CellValue::Number(3.0)));
    assert_eq!(fill(InfillKind::Mode), Some(CellValue::Number(3.0)));

    let mut adj = col.clone();
    InfillSpec::fit(InfillKind::Adjacent, &col, &mask, ColtypeClass::NumericOutput)
        .unwrap()
        .apply(&mut adj, &mask);
    assert_eq!(adj[1], CellValue::Number(1.0));
    assert_eq!(adj[4], CellValue::Number(3.0));
}

#[test]
fn target_rules() {
    let col = [CellValue::text("7"), CellValue::text("q"), CellValue::Missing, CellValue::text("zone 9")];
    assert_eq!(mark_targets(&col, TargetRule::MissingOnly), [false, false, true, false]);
    assert_eq!(mark_targets(&col, TargetRule::NonNumeric), [false, true, true, true]);
    let rule = TargetRule::NoNumericExtract(Default::default());
    assert_eq!(mark_targets(&col, rule), [false, true, true, false]);
    assert!(InfillSpec::fit(InfillKind::Mean, &col, &[false; 4], ColtypeClass::CategoricOutput).is_err());
}
