//! Markdown table rendering and the number formatting used in explanation
//! intervals: thousands separators, at most three decimals, trailing zeros
//! trimmed (e.g. 902384.0 → "902,384", 335.4049 → "335.405", 0.66 → "0.66").

/// Formats an interval endpoint or feature value.
pub fn fmt_value(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let fixed = format!("{v:.3}");
    let (sign, digits) = match fixed.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", fixed.as_str()),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    let frac = frac_part.trim_end_matches('0');

    let bytes = int_part.as_bytes();
    let mut grouped = String::new();
    for (i, b) in bytes.iter().enumerate() {
        if i > 0 && (bytes.len() - i) % 3 == 0 {
            grouped.push(',');
        }
        grouped.push(*b as char);
    }

    let mut out = String::new();
    if !(grouped == "0" && frac.is_empty()) {
        out.push_str(sign);
    }
    out.push_str(&grouped);
    if !frac.is_empty() {
        out.push('.');
        out.push_str(frac);
    }
    out
}

/// Six-decimal formatting for metric tables.
pub fn fmt_metric(v: f64) -> String {
    format!("{v:.6}")
}

/// Four-decimal formatting for classification reports.
pub fn fmt_score(v: f64) -> String {
    format!("{v:.4}")
}

/// Renders a GitHub-style markdown table.
pub fn markdown_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str("| ");
    out.push_str(&headers.join(" | "));
    out.push_str(" |\n| ");
    out.push_str(&headers.iter().map(|_| "---").collect::<Vec<_>>().join(" | "));
    out.push_str(" |\n");
    for row in rows {
        out.push_str("| ");
        out.push_str(&row.join(" | "));
        out.push_str(" |\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thousands_separators_and_three_decimals() {
        assert_eq!(fmt_value(902384.0), "902,384");
        assert_eq!(fmt_value(10470.0), "10,470");
        assert_eq!(fmt_value(335.4049), "335.405");
        assert_eq!(fmt_value(0.66), "0.66");
        assert_eq!(fmt_value(502.0), "502");
        assert_eq!(fmt_value(2711880.0), "2,711,880");
        assert_eq!(fmt_value(-1234.5), "-1,234.5");
        assert_eq!(fmt_value(0.0), "0");
        assert_eq!(fmt_value(-0.0001), "0");
    }

    #[test]
    fn markdown_table_shape() {
        let t = markdown_table(&["a", "b"], &[vec!["1".into(), "2".into()]]);
        assert_eq!(t, "| a | b |\n| --- | --- |\n| 1 | 2 |\n");
    }
}
