//! Pure parts of ingestion: picking the time/value columns and turning
//! value cells into numbers.

use alloc::string::String;
use alloc::vec::Vec;

use crate::series::RawTable;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SelectError {
    #[error("no column named '{0}'")]
    NoSuchColumn(String),
}

/// The two columns the cleaner works on, renamed to `time` and `value`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectedColumns {
    pub time: Vec<String>,
    pub value: Vec<String>,
}

/// Selects the time and value columns by name, defaulting to the first and
/// second column.
pub fn select_columns(
    table: &RawTable,
    time: Option<&str>,
    value: Option<&str>,
) -> Result<SelectedColumns, SelectError> {
    let lookup = |name: Option<&str>, default: usize| match name {
        Some(n) => table
            .column_index(n)
            .ok_or_else(|| SelectError::NoSuchColumn(n.into())),
        None => Ok(default),
    };
    let t = lookup(time, 0)?;
    let v = lookup(value, 1)?;
    Ok(SelectedColumns {
        time: table.columns()[t].clone(),
        value: table.columns()[v].clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoercedValues {
    pub values: Vec<Option<f64>>,
    /// Non-empty, non-NA cells that did not parse as numbers.
    pub failed_indices: Vec<usize>,
}

fn is_na_token(s: &str) -> bool {
    s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan")
}

/// Parses plain decimal or scientific notation after trimming whitespace.
///
/// Empty cells and `NA`/`NaN` become ordinary missing values. Anything else
/// that fails to parse is also missing but reported in `failed_indices`.
/// Thousands separators are not accepted.
pub fn coerce_values<S: AsRef<str>>(texts: &[S]) -> CoercedValues {
    let mut out = CoercedValues {
        values: Vec::with_capacity(texts.len()),
        failed_indices: Vec::new(),
    };
    for (i, text) in texts.iter().enumerate() {
        let s = text.as_ref().trim();
        if is_na_token(s) {
            out.values.push(None);
            continue;
        }
        match parse_number(s) {
            Some(v) => out.values.push(Some(v)),
            None => {
                out.values.push(None);
                out.failed_indices.push(i);
            }
        }
    }
    out
}

// str::parse::<f64> also accepts "inf", "infinity" and friends; only
// digits, a sign, one decimal point and an exponent are allowed here.
fn parse_number(s: &str) -> Option<f64> {
    let ok = s
        .bytes()
        .all(|b| b.is_ascii_digit() || matches!(b, b'+' | b'-' | b'.' | b'e' | b'E'));
    if !ok || !s.bytes().any(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    fn table() -> RawTable {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        RawTable::new(
            s(&["datetime", "Vancouver", "Portland"]),
            vec![s(&["2012-10-01 12:00:00"]), s(&["280.1"]), s(&["282.0"])],
        )
        .unwrap()
    }

    #[test]
    fn select_by_name_and_default() {
        let t = table();
        let sel = select_columns(&t, Some("datetime"), Some("Vancouver")).unwrap();
        assert_eq!(sel.value, ["280.1"]);
        let sel = select_columns(&t, None, None).unwrap();
        assert_eq!(sel.time, ["2012-10-01 12:00:00"]);
        assert_eq!(sel.value, ["280.1"]);
        assert_eq!(
            select_columns(&t, None, Some("Nowhere")),
            Err(SelectError::NoSuchColumn("Nowhere".into()))
        );
    }

    #[test]
    fn coercion_rules() {
        let c = coerce_values(&["12379", " 11935 ", ""]);
        assert_eq!(c.values, [Some(12379.0), Some(11935.0), None]);
        assert!(c.failed_indices.is_empty());

        let c = coerce_values(&["abc"]);
        assert_eq!(c.values, [None]);
        assert_eq!(c.failed_indices, [0]);

        assert_eq!(coerce_values(&["1e3"]).values, [Some(1000.0)]);
        assert_eq!(coerce_values(&["-2.5E-1"]).values, [Some(-0.25)]);

        let c = coerce_values(&["NA", "nan", "NaN", " na "]);
        assert_eq!(c.values, [None; 4]);
        assert!(c.failed_indices.is_empty());

        let c = coerce_values(&["12,345", "inf", "1.2.3", ".", "-"]);
        assert_eq!(c.values, [None; 5]);
        assert_eq!(c.failed_indices, [0, 1, 2, 3, 4]);
    }

    proptest! {
        #[test]
        fn absent_count_is_accounted(cells in prop::collection::vec(
            prop_oneof![
                Just(String::new()),
                Just("NA".to_string()),
                "[a-z]{1,4}",
                any::<i32>().prop_map(|v| v.to_string()),
                any::<f64>().prop_filter("finite", |v| v.is_finite()).prop_map(|v| v.to_string()),
            ],
            0..40,
        )) {
            let c = coerce_values(&cells);
            prop_assert_eq!(c.values.len(), cells.len());
            let na = cells.iter().filter(|s| is_na_token(s.trim())).count();
            let absent = c.values.iter().filter(|v| v.is_none()).count();
            prop_assert_eq!(absent, na + c.failed_indices.len());
        }
    }
}
