//! Deterministic English claim templates and their field parsers.
//!
//! Each claim type has one sentence pattern; the parser recovers every
//! rendered field with its byte span, which the perturbation stage uses
//! to rewrite single fields in place.

use std::collections::BTreeMap;
use std::ops::Range;
use std::sync::OnceLock;

use regex::Regex;

use crate::extract::{
    ClaimType, DataSample, ExtremeDirection, RankDirection, SamplePayload, TrendDirection,
};

/// Numeric rendering rule: values with magnitude at least 100 round to
/// integers; smaller values keep two decimal places with trailing zeros
/// trimmed.
pub fn render_value(value: f64) -> String {
    if value.abs() >= 100.0 {
        format!("{:.0}", value)
    } else {
        let text = format!("{:.2}", value);
        let trimmed = text.trim_end_matches('0').trim_end_matches('.');
        if trimmed.is_empty() || trimmed == "-" {
            "0".to_string()
        } else {
            trimmed.to_string()
        }
    }
}

/// Label used for "measure M" in claim text: the measure combination
/// values, or the table id when the combination is empty.
pub fn measure_label(sample: &DataSample) -> String {
    if sample.combination.is_empty() {
        sample.table_id.clone()
    } else {
        sample.combination.label()
    }
}

pub fn direction_token_rank(direction: RankDirection) -> &'static str {
    match direction {
        RankDirection::Top => "top",
        RankDirection::Bottom => "bottom",
    }
}

pub fn direction_token_trend(direction: TrendDirection) -> &'static str {
    match direction {
        TrendDirection::Increase => "increase",
        TrendDirection::Decrease => "decrease",
    }
}

pub fn direction_token_extreme(direction: ExtremeDirection) -> &'static str {
    match direction {
        ExtremeDirection::Highest => "highest",
        ExtremeDirection::Lowest => "lowest",
    }
}

/// Renders the English sentence for a sample.
pub fn render_english(sample: &DataSample) -> String {
    let measure = measure_label(sample);
    match &sample.payload {
        SamplePayload::TopK {
            country,
            year,
            k,
            direction,
            ..
        } => format!(
            "{country} was among the {} {k} countries on {measure} in {year}.",
            direction_token_rank(*direction)
        ),
        SamplePayload::ConstantChange {
            country,
            direction,
            n_years,
            end,
            ..
        } => format!(
            "{country} has shown a constant {} on {measure} for {n_years} consecutive years, as of {}.",
            direction_token_trend(*direction),
            end.0
        ),
        SamplePayload::HistoricalExtreme {
            country,
            year,
            direction,
            n_years,
            ..
        } => format!(
            "In {year}, {country} recorded its {} value on {measure} in the last {n_years} years.",
            direction_token_extreme(*direction)
        ),
        SamplePayload::ChangeInRank {
            country,
            year_a,
            year_b,
            rank_a,
            rank_b,
            ..
        } => format!(
            "{country} went from rank {rank_a} to rank {rank_b} on {measure} between {year_a} and {year_b}."
        ),
        SamplePayload::ChangeOverTime {
            country,
            year_a,
            year_b,
            value_a,
            value_b,
        } => format!(
            "{country} went from {} to {} on {measure} between {year_a} and {year_b}.",
            render_value(*value_a),
            render_value(*value_b)
        ),
        SamplePayload::HaveTrait {
            country,
            year,
            value,
        } => format!(
            "{country} recorded {} on {measure} in {year}.",
            render_value(*value)
        ),
    }
}

/// One recovered field with its byte span in the claim text.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedField {
    pub text: String,
    pub span: Range<usize>,
}

/// Fields recovered from a template-shaped claim sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedClaim {
    pub claim_type: ClaimType,
    pub fields: BTreeMap<&'static str, ParsedField>,
}

impl ParsedClaim {
    pub fn field(&self, name: &str) -> Option<&ParsedField> {
        self.fields.get(name)
    }
}

struct TemplatePattern {
    claim_type: ClaimType,
    regex: &'static Regex,
    fields: &'static [&'static str],
}

macro_rules! pattern {
    ($re:expr) => {{
        static CELL: OnceLock<Regex> = OnceLock::new();
        CELL.get_or_init(|| Regex::new($re).expect("template regex compiles"))
    }};
}

fn patterns() -> Vec<TemplatePattern> {
    vec![
        TemplatePattern {
            claim_type: ClaimType::TopK,
            regex: pattern!(
                r"^(?P<country>.+?) was among the (?P<direction>top|bottom) (?P<k>\d+) countries on (?P<measure>.+) in (?P<year>\d{4})\.$"
            ),
            fields: &["country", "direction", "k", "measure", "year"],
        },
        TemplatePattern {
            claim_type: ClaimType::ConstantChange,
            regex: pattern!(
                r"^(?P<country>.+?) has shown a constant (?P<direction>increase|decrease) on (?P<measure>.+) for (?P<n_years>\d+) consecutive years, as of (?P<end_year>\d{4})\.$"
            ),
            fields: &["country", "direction", "measure", "n_years", "end_year"],
        },
        TemplatePattern {
            claim_type: ClaimType::HistoricalExtreme,
            regex: pattern!(
                r"^In (?P<year>\d{4}), (?P<country>.+?) recorded its (?P<direction>highest|lowest) value on (?P<measure>.+) in the last (?P<n_years>\d+) years\.$"
            ),
            fields: &["year", "country", "direction", "measure", "n_years"],
        },
        TemplatePattern {
            claim_type: ClaimType::ChangeInRank,
            regex: pattern!(
                r"^(?P<country>.+?) went from rank (?P<rank_a>\d+) to rank (?P<rank_b>\d+) on (?P<measure>.+) between (?P<year_a>\d{4}) and (?P<year_b>\d{4})\.$"
            ),
            fields: &["country", "rank_a", "rank_b", "measure", "year_a", "year_b"],
        },
        TemplatePattern {
            claim_type: ClaimType::ChangeOverTime,
            regex: pattern!(
                r"^(?P<country>.+?) went from (?P<value_a>-?\d+(?:\.\d+)?) to (?P<value_b>-?\d+(?:\.\d+)?) on (?P<measure>.+) between (?P<year_a>\d{4}) and (?P<year_b>\d{4})\.$"
            ),
            fields: &["country", "value_a", "value_b", "measure", "year_a", "year_b"],
        },
        TemplatePattern {
            claim_type: ClaimType::HaveTrait,
            regex: pattern!(
                r"^(?P<country>.+?) recorded (?P<value>-?\d+(?:\.\d+)?) on (?P<measure>.+) in (?P<year>\d{4})\.$"
            ),
            fields: &["country", "value", "measure", "year"],
        },
    ]
}

/// Parses a claim sentence with the pattern of the given type.
pub fn parse_claim(claim_type: ClaimType, text: &str) -> Option<ParsedClaim> {
    let pattern = patterns()
        .into_iter()
        .find(|p| p.claim_type == claim_type)?;
    let captures = pattern.regex.captures(text)?;
    let mut fields = BTreeMap::new();
    for &name in pattern.fields {
        let m = captures.name(name)?;
        fields.insert(
            name,
            ParsedField {
                text: m.as_str().to_string(),
                span: m.range(),
            },
        );
    }
    Some(ParsedClaim {
        claim_type,
        fields,
    })
}

/// Compares a parsed claim against a sample's payload, field by field.
/// Numbers compare by rendered form, so documented rounding is allowed.
pub fn parsed_matches_payload(parsed: &ParsedClaim, sample: &DataSample) -> bool {
    if parsed.claim_type != sample.claim_type() {
        return false;
    }
    let text = |name: &str| parsed.field(name).map(|f| f.text.as_str());
    let int_eq = |name: &str, expect: i64| text(name) == Some(expect.to_string().as_str());
    let value_eq = |name: &str, expect: f64| {
        text(name).is_some_and(|t| {
            t.parse::<f64>()
                .is_ok_and(|parsed| render_value(parsed) == render_value(expect))
        })
    };
    let measure_ok = text("measure") == Some(measure_label(sample).as_str());
    if !measure_ok {
        return false;
    }
    match &sample.payload {
        SamplePayload::TopK {
            country,
            year,
            k,
            direction,
            ..
        } => {
            text("country") == Some(country)
                && int_eq("year", i64::from(*year))
                && int_eq("k", i64::from(*k))
                && text("direction") == Some(direction_token_rank(*direction))
        }
        SamplePayload::ConstantChange {
            country,
            direction,
            n_years,
            end,
            ..
        } => {
            text("country") == Some(country)
                && text("direction") == Some(direction_token_trend(*direction))
                && int_eq("n_years", i64::from(*n_years))
                && int_eq("end_year", i64::from(end.0))
        }
        SamplePayload::HistoricalExtreme {
            country,
            year,
            direction,
            n_years,
            ..
        } => {
            text("country") == Some(country)
                && int_eq("year", i64::from(*year))
                && text("direction") == Some(direction_token_extreme(*direction))
                && int_eq("n_years", i64::from(*n_years))
        }
        SamplePayload::ChangeInRank {
            country,
            year_a,
            year_b,
            rank_a,
            rank_b,
            ..
        } => {
            text("country") == Some(country)
                && int_eq("rank_a", i64::from(*rank_a))
                && int_eq("rank_b", i64::from(*rank_b))
                && int_eq("year_a", i64::from(*year_a))
                && int_eq("year_b", i64::from(*year_b))
        }
        SamplePayload::ChangeOverTime {
            country,
            year_a,
            year_b,
            value_a,
            value_b,
        } => {
            text("country") == Some(country)
                && value_eq("value_a", *value_a)
                && value_eq("value_b", *value_b)
                && int_eq("year_a", i64::from(*year_a))
                && int_eq("year_b", i64::from(*year_b))
        }
        SamplePayload::HaveTrait {
            country,
            year,
            value,
        } => {
            text("country") == Some(country)
                && value_eq("value", *value)
                && int_eq("year", i64::from(*year))
        }
    }
}
