//! False-claim synthesis: four perturbation families applied to true
//! claims, with audit descriptors and provenance links.
//!
//! Family applicability by claim type: single-value and value-change
//! claims take numeric scaling; rank claims take rank shifts or
//! direction inversion; trend and extreme claims take inversion or
//! duration edits. Duration edits only ever grow the claimed span:
//! shrinking a maximal run or an extreme's lookback can leave the claim
//! weakly true.

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::claimgen::template::{parse_claim, render_value, ParsedClaim};
use crate::claimgen::{ClaimLabel, ClaimRecord};
use crate::config::PerturbConfig;
use crate::extract::{ClaimType, DataSample, SamplePayload};
use crate::hash::{content_id, derive_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PerturbationFamily {
    Numeric,
    Rank,
    Duration,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum PerturbationParams {
    Scaling { factor: f64 },
    RankShift { delta: i64 },
    DurationShift { mode: DurationMode, delta: u32 },
    TokenInversion { from: String, to: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DurationMode {
    ShiftStart,
    ShiftEnd,
    Extend,
}

/// Audit record attached to every false claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationDescriptor {
    pub family: PerturbationFamily,
    pub params: PerturbationParams,
    pub original_value: String,
    pub perturbed_value: String,
}

#[derive(Debug, Error)]
pub enum PerturbError {
    #[error("zero values are scale-invariant; choose another family")]
    ZeroValueUnperturbable,
    #[error("no rank shift satisfies the minimum distance for n={0}")]
    NoFeasibleShift(u32),
    #[error("unknown direction token: {0}")]
    UnknownToken(String),
    #[error("cannot locate the target field in the claim text")]
    UnrecoverableClaimText,
    #[error("no perturbation family applies to this sample")]
    NoApplicableFamily,
}

/// Families applicable to each claim type.
pub fn applicable_families(claim_type: ClaimType) -> &'static [PerturbationFamily] {
    use PerturbationFamily::*;
    match claim_type {
        ClaimType::HaveTrait | ClaimType::ChangeOverTime => &[Numeric],
        ClaimType::TopK => &[Binary, Rank],
        ClaimType::ChangeInRank => &[Rank, Binary],
        ClaimType::ConstantChange | ClaimType::HistoricalExtreme => &[Binary, Duration],
    }
}

/// Scales a value by a random factor from the configured set. The factor
/// is retried until the rendered value actually changes.
pub fn perturb_numeric(
    value: f64,
    config: &PerturbConfig,
    rng: &mut impl Rng,
) -> Result<(f64, PerturbationDescriptor), PerturbError> {
    if value == 0.0 {
        return Err(PerturbError::ZeroValueUnperturbable);
    }
    let mut factors: Vec<f64> = config
        .scaling_factors
        .iter()
        .copied()
        .filter(|f| *f != 1.0)
        .collect();
    factors.shuffle(rng);
    for factor in factors {
        let new_value = value * factor;
        if render_value(new_value) == render_value(value) {
            continue;
        }
        return Ok((
            new_value,
            PerturbationDescriptor {
                family: PerturbationFamily::Numeric,
                params: PerturbationParams::Scaling { factor },
                original_value: render_value(value),
                perturbed_value: render_value(new_value),
            },
        ));
    }
    Err(PerturbError::ZeroValueUnperturbable)
}

/// Shifts a rank to a substantially different position within
/// `[1, n_countries]`.
pub fn perturb_rank(
    rank: u32,
    n_countries: u32,
    config: &PerturbConfig,
    rng: &mut impl Rng,
) -> Result<(u32, PerturbationDescriptor), PerturbError> {
    assert!((1..=n_countries).contains(&rank), "rank within 1..=n");
    let min_shift = config
        .rank_shift_floor
        .max((config.rank_shift_fraction * f64::from(n_countries)).ceil() as u32);
    let feasible: Vec<u32> = (1..=n_countries)
        .filter(|&t| t != rank && t.abs_diff(rank) >= min_shift)
        .collect();
    let Some(&new_rank) = feasible.as_slice().choose(rng) else {
        return Err(PerturbError::NoFeasibleShift(n_countries));
    };
    Ok((
        new_rank,
        PerturbationDescriptor {
            family: PerturbationFamily::Rank,
            params: PerturbationParams::RankShift {
                delta: i64::from(new_rank) - i64::from(rank),
            },
            original_value: rank.to_string(),
            perturbed_value: new_rank.to_string(),
        },
    ))
}

/// Alters a year span: shifts the start earlier or the end later by
/// 2-6 years, or extends the duration by 3-8 years. The span only ever
/// grows, so the result always preserves `start < end`.
pub fn perturb_duration(
    start_year: i32,
    end_year: i32,
    config: &PerturbConfig,
    rng: &mut impl Rng,
) -> ((i32, i32), PerturbationDescriptor) {
    assert!(start_year < end_year, "start before end");
    let mode = *[
        DurationMode::ShiftStart,
        DurationMode::ShiftEnd,
        DurationMode::Extend,
    ]
    .choose(rng)
    .expect("nonempty modes");
    let (lo, hi) = match mode {
        DurationMode::Extend => config.duration_extend_range,
        _ => config.duration_shift_range,
    };
    let delta = rng.gen_range(lo..=hi);
    let (new_start, new_end) = match mode {
        DurationMode::ShiftStart => (start_year - delta as i32, end_year),
        DurationMode::ShiftEnd | DurationMode::Extend => (start_year, end_year + delta as i32),
    };
    (
        (new_start, new_end),
        PerturbationDescriptor {
            family: PerturbationFamily::Duration,
            params: PerturbationParams::DurationShift { mode, delta },
            original_value: format!("{start_year}..{end_year}"),
            perturbed_value: format!("{new_start}..{new_end}"),
        },
    )
}

/// Inverts a direction token within its pair. An involution on the six
/// tokens.
pub fn perturb_binary(token: &str) -> Result<(&'static str, PerturbationDescriptor), PerturbError> {
    let inverted = match token {
        "increase" => "decrease",
        "decrease" => "increase",
        "top" => "bottom",
        "bottom" => "top",
        "highest" => "lowest",
        "lowest" => "highest",
        other => return Err(PerturbError::UnknownToken(other.to_string())),
    };
    Ok((
        inverted,
        PerturbationDescriptor {
            family: PerturbationFamily::Binary,
            params: PerturbationParams::TokenInversion {
                from: token.to_string(),
                to: inverted.to_string(),
            },
            original_value: token.to_string(),
            perturbed_value: inverted.to_string(),
        },
    ))
}

/// One in-place text edit.
struct Rewrite {
    span: Range<usize>,
    replacement: String,
}

fn apply_rewrites(text: &str, mut rewrites: Vec<Rewrite>) -> String {
    rewrites.sort_by_key(|r| std::cmp::Reverse(r.span.start));
    let mut out = text.to_string();
    for rewrite in rewrites {
        out.replace_range(rewrite.span, &rewrite.replacement);
    }
    out
}

/// Finds a field span: template parse first, then a literal search for
/// the rendered value (covers adapter-generated text that kept the
/// numbers verbatim).
fn find_span(
    parsed: Option<&ParsedClaim>,
    field: &str,
    needle: &str,
    text: &str,
) -> Option<Range<usize>> {
    if let Some(span) = parsed
        .and_then(|p| p.field(field))
        .map(|f| f.span.clone())
    {
        return Some(span);
    }
    text.find(needle).map(|start| start..start + needle.len())
}

fn family_edit(
    family: PerturbationFamily,
    claim_text: &str,
    parsed: Option<&ParsedClaim>,
    sample: &DataSample,
    config: &PerturbConfig,
    rng: &mut ChaCha20Rng,
) -> Result<(String, PerturbationDescriptor), PerturbError> {
    match (family, &sample.payload) {
        (PerturbationFamily::Numeric, SamplePayload::HaveTrait { value, .. }) => {
            let (new_value, descriptor) = perturb_numeric(*value, config, rng)?;
            let span = find_span(parsed, "value", &render_value(*value), claim_text)
                .ok_or(PerturbError::UnrecoverableClaimText)?;
            let text = apply_rewrites(
                claim_text,
                vec![Rewrite {
                    span,
                    replacement: render_value(new_value),
                }],
            );
            Ok((text, descriptor))
        }
        (PerturbationFamily::Numeric, SamplePayload::ChangeOverTime { value_a, value_b, .. }) => {
            let pick_a = rng.gen_bool(0.5);
            let (field, value) = if pick_a {
                ("value_a", *value_a)
            } else {
                ("value_b", *value_b)
            };
            let (new_value, descriptor) = perturb_numeric(value, config, rng)?;
            let span = find_span(parsed, field, &render_value(value), claim_text)
                .ok_or(PerturbError::UnrecoverableClaimText)?;
            let text = apply_rewrites(
                claim_text,
                vec![Rewrite {
                    span,
                    replacement: render_value(new_value),
                }],
            );
            Ok((text, descriptor))
        }
        (PerturbationFamily::Binary, payload) => {
            match payload {
                SamplePayload::TopK { direction, .. } => {
                    let token = crate::claimgen::template::direction_token_rank(*direction);
                    binary_token_edit(claim_text, parsed, token)
                }
                SamplePayload::ConstantChange { direction, .. } => {
                    let token = crate::claimgen::template::direction_token_trend(*direction);
                    binary_token_edit(claim_text, parsed, token)
                }
                SamplePayload::HistoricalExtreme { direction, .. } => {
                    let token = crate::claimgen::template::direction_token_extreme(*direction);
                    binary_token_edit(claim_text, parsed, token)
                }
                SamplePayload::ChangeInRank { rank_a, rank_b, .. } => {
                    // Inverting a rank movement swaps its endpoints. Spans
                    // from the template parser cover the bare number; spans
                    // from the needle search cover "rank N".
                    let parsed_spans = parsed.and_then(|p| p.field("rank_a")).is_some();
                    let span_a = find_span(parsed, "rank_a", &format!("rank {rank_a}"), claim_text)
                        .ok_or(PerturbError::UnrecoverableClaimText)?;
                    let span_b = find_span(parsed, "rank_b", &format!("rank {rank_b}"), claim_text)
                        .ok_or(PerturbError::UnrecoverableClaimText)?;
                    let render = |rank: &u32| {
                        if parsed_spans {
                            rank.to_string()
                        } else {
                            format!("rank {rank}")
                        }
                    };
                    let text = apply_rewrites(
                        claim_text,
                        vec![
                            Rewrite {
                                span: span_a,
                                replacement: render(rank_b),
                            },
                            Rewrite {
                                span: span_b,
                                replacement: render(rank_a),
                            },
                        ],
                    );
                    Ok((
                        text,
                        PerturbationDescriptor {
                            family: PerturbationFamily::Binary,
                            params: PerturbationParams::TokenInversion {
                                from: format!("rank {rank_a} to rank {rank_b}"),
                                to: format!("rank {rank_b} to rank {rank_a}"),
                            },
                            original_value: format!("{rank_a}->{rank_b}"),
                            perturbed_value: format!("{rank_b}->{rank_a}"),
                        },
                    ))
                }
                _ => Err(PerturbError::NoApplicableFamily),
            }
        }
        (PerturbationFamily::Rank, SamplePayload::ChangeInRank {
            rank_a,
            rank_b,
            n_countries_a,
            n_countries_b,
            ..
        }) => {
            let pick_a = rng.gen_bool(0.5);
            let (field, rank, n) = if pick_a {
                ("rank_a", *rank_a, *n_countries_a)
            } else {
                ("rank_b", *rank_b, *n_countries_b)
            };
            let (new_rank, descriptor) = perturb_rank(rank, n, config, rng)?;
            let span = find_span(parsed, field, &format!("rank {rank}"), claim_text)
                .ok_or(PerturbError::UnrecoverableClaimText)?;
            // when located by needle the span covers "rank N"; keep the prefix
            let replacement = if parsed.and_then(|p| p.field(field)).is_some() {
                new_rank.to_string()
            } else {
                format!("rank {new_rank}")
            };
            let text = apply_rewrites(claim_text, vec![Rewrite { span, replacement }]);
            Ok((text, descriptor))
        }
        (PerturbationFamily::Rank, SamplePayload::TopK {
            k,
            rank,
            n_countries,
            ..
        }) => {
            // The only rank-like number in a top-k claim is k itself, and
            // only a k below the country's actual rank falsifies it; a
            // larger k weakens the claim but keeps it true.
            let min_shift = config
                .rank_shift_floor
                .max((config.rank_shift_fraction * f64::from(*n_countries)).ceil() as u32);
            let feasible: Vec<u32> = (1..*rank).filter(|t| t.abs_diff(*k) >= min_shift).collect();
            let Some(&new_k) = feasible.as_slice().choose(rng) else {
                return Err(PerturbError::NoFeasibleShift(*n_countries));
            };
            let span = find_span(parsed, "k", &k.to_string(), claim_text)
                .ok_or(PerturbError::UnrecoverableClaimText)?;
            let text = apply_rewrites(
                claim_text,
                vec![Rewrite {
                    span,
                    replacement: new_k.to_string(),
                }],
            );
            Ok((
                text,
                PerturbationDescriptor {
                    family: PerturbationFamily::Rank,
                    params: PerturbationParams::RankShift {
                        delta: i64::from(new_k) - i64::from(*k),
                    },
                    original_value: k.to_string(),
                    perturbed_value: new_k.to_string(),
                },
            ))
        }
        (PerturbationFamily::Duration, SamplePayload::ConstantChange { n_years, end, .. }) => {
            let start_year = end.0 - *n_years as i32 + 1;
            let ((new_start, new_end), descriptor) =
                perturb_duration(start_year, end.0, config, rng);
            let new_n = new_end - new_start + 1;
            let n_span = find_span(parsed, "n_years", &n_years.to_string(), claim_text)
                .ok_or(PerturbError::UnrecoverableClaimText)?;
            let year_span = find_span(parsed, "end_year", &end.0.to_string(), claim_text)
                .ok_or(PerturbError::UnrecoverableClaimText)?;
            let text = apply_rewrites(
                claim_text,
                vec![
                    Rewrite {
                        span: n_span,
                        replacement: new_n.to_string(),
                    },
                    Rewrite {
                        span: year_span,
                        replacement: new_end.to_string(),
                    },
                ],
            );
            Ok((text, descriptor))
        }
        (PerturbationFamily::Duration, SamplePayload::HistoricalExtreme { year, n_years, .. }) => {
            let start_year = year - *n_years as i32;
            let ((new_start, new_end), descriptor) =
                perturb_duration(start_year, *year, config, rng);
            let new_n = new_end - new_start;
            let n_span = find_span(parsed, "n_years", &n_years.to_string(), claim_text)
                .ok_or(PerturbError::UnrecoverableClaimText)?;
            let year_span = find_span(parsed, "year", &year.to_string(), claim_text)
                .ok_or(PerturbError::UnrecoverableClaimText)?;
            let text = apply_rewrites(
                claim_text,
                vec![
                    Rewrite {
                        span: n_span,
                        replacement: new_n.to_string(),
                    },
                    Rewrite {
                        span: year_span,
                        replacement: new_end.to_string(),
                    },
                ],
            );
            Ok((text, descriptor))
        }
        _ => Err(PerturbError::NoApplicableFamily),
    }
}

fn binary_token_edit(
    claim_text: &str,
    parsed: Option<&ParsedClaim>,
    token: &str,
) -> Result<(String, PerturbationDescriptor), PerturbError> {
    let (inverted, descriptor) = perturb_binary(token)?;
    let span = find_span(parsed, "direction", token, claim_text)
        .ok_or(PerturbError::UnrecoverableClaimText)?;
    let text = apply_rewrites(
        claim_text,
        vec![Rewrite {
            span,
            replacement: inverted.to_string(),
        }],
    );
    Ok((text, descriptor))
}

/// Returns `Err` for a pre-condition violation that is not a rewrite
/// failure; infeasible families fall through to the next applicable one.
fn perturb_result_is_fallback(err: &PerturbError) -> bool {
    matches!(
        err,
        PerturbError::ZeroValueUnperturbable | PerturbError::NoFeasibleShift(_)
    )
}

/// Builds a false claim from a true one by perturbing one field in its
/// text. The false claim gets a fresh id and links to its parent.
pub fn make_false_claim(
    true_claim: &ClaimRecord,
    sample: &DataSample,
    config: &PerturbConfig,
    rng: &mut ChaCha20Rng,
) -> Result<ClaimRecord, PerturbError> {
    assert_eq!(
        true_claim.label,
        ClaimLabel::True,
        "only true claims can be perturbed"
    );
    let parsed = parse_claim(sample.claim_type(), &true_claim.text);
    let mut families: Vec<PerturbationFamily> =
        applicable_families(sample.claim_type()).to_vec();
    families.shuffle(rng);

    let mut saw_unrecoverable = false;
    for family in families {
        match family_edit(
            family,
            &true_claim.text,
            parsed.as_ref(),
            sample,
            config,
            rng,
        ) {
            Ok((text, descriptor)) => {
                debug_assert_ne!(descriptor.original_value, descriptor.perturbed_value);
                let descriptor_json =
                    serde_json::to_string(&descriptor).expect("descriptor serializes");
                let claim_id = content_id([
                    true_claim.claim_id.as_bytes(),
                    b"false".as_slice(),
                    descriptor_json.as_bytes(),
                    text.as_bytes(),
                ]);
                return Ok(ClaimRecord {
                    claim_id,
                    language: true_claim.language,
                    text,
                    label: ClaimLabel::False,
                    sample_id: true_claim.sample_id.clone(),
                    perturbation: Some(descriptor),
                    generator: true_claim.generator,
                    parent_id: Some(true_claim.claim_id.clone()),
                });
            }
            Err(PerturbError::UnrecoverableClaimText) => saw_unrecoverable = true,
            Err(e) if perturb_result_is_fallback(&e) => continue,
            Err(e) => return Err(e),
        }
    }
    if saw_unrecoverable {
        Err(PerturbError::UnrecoverableClaimText)
    } else {
        Err(PerturbError::NoApplicableFamily)
    }
}

/// Perturbs a seeded fraction of true claims into false ones. Per-claim
/// randomness derives from the claim id, so results are independent of
/// input order; unrecoverable claims are skipped and reported.
pub fn make_false_claims(
    true_claims: &[(ClaimRecord, DataSample)],
    config: &PerturbConfig,
    root_seed: u64,
) -> (Vec<ClaimRecord>, usize) {
    let mut ordered: Vec<&(ClaimRecord, DataSample)> = true_claims.iter().collect();
    ordered.sort_by(|a, b| a.0.claim_id.cmp(&b.0.claim_id));
    ordered.dedup_by(|a, b| a.0.claim_id == b.0.claim_id);

    let target = ((ordered.len() as f64) * config.false_ratio).round() as usize;
    let target = target.min(ordered.len());
    let mut select_rng = ChaCha20Rng::seed_from_u64(derive_seed(root_seed, &["perturb-select"]));
    let chosen = rand::seq::index::sample(&mut select_rng, ordered.len(), target);
    let mut indices: Vec<usize> = chosen.into_iter().collect();
    indices.sort_unstable();

    let mut false_claims = Vec::new();
    let mut skipped = 0;
    for index in indices {
        let (claim, sample) = ordered[index];
        let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(
            root_seed,
            &["perturb", claim.claim_id.as_str()],
        ));
        match make_false_claim(claim, sample, config, &mut rng) {
            Ok(false_claim) => false_claims.push(false_claim),
            Err(_) => skipped += 1,
        }
    }
    false_claims.sort_by(|a, b| a.claim_id.cmp(&b.claim_id));
    (false_claims, skipped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::claimgen::{render_template, GeneratorKind, Language};
    use crate::extract::{EvidenceRow, RankDirection, TrendDirection};
    use crate::preprocess::MeasureCombination;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    fn config() -> PerturbConfig {
        PerturbConfig::default()
    }

    #[test]
    fn numeric_scaling_factors() {
        let mut r = rng(1);
        let (new_value, descriptor) = perturb_numeric(10.0, &config(), &mut r).unwrap();
        match descriptor.params {
            PerturbationParams::Scaling { factor } => {
                assert!([0.5, 1.5, 2.0].contains(&factor));
                assert_eq!(new_value, 10.0 * factor);
            }
            other => panic!("unexpected params {other:?}"),
        }
        assert!(matches!(
            perturb_numeric(0.0, &config(), &mut r).unwrap_err(),
            PerturbError::ZeroValueUnperturbable
        ));
        // seeded reproducibility
        let a = perturb_numeric(10.0, &config(), &mut rng(7)).unwrap();
        let b = perturb_numeric(10.0, &config(), &mut rng(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rank_shift_respects_floor() {
        let mut r = rng(2);
        for _ in 0..50 {
            let (new_rank, _) = perturb_rank(3, 40, &config(), &mut r).unwrap();
            // floor is max(5, ceil(0.15*40)) = 6
            assert!((9..=40).contains(&new_rank));
        }
        let err = perturb_rank(2, 5, &config(), &mut r).unwrap_err();
        assert!(matches!(err, PerturbError::NoFeasibleShift(5)));
        let a = perturb_rank(3, 40, &config(), &mut rng(9)).unwrap();
        let b = perturb_rank(3, 40, &config(), &mut rng(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn duration_modes_grow_the_span() {
        let mut r = rng(3);
        for _ in 0..100 {
            let ((start, end), descriptor) = perturb_duration(2010, 2018, &config(), &mut r);
            assert!(start < end);
            assert!(end - start > 8, "span must grow: {descriptor:?}");
            match descriptor.params {
                PerturbationParams::DurationShift { mode, delta } => match mode {
                    DurationMode::ShiftStart => {
                        assert!((2..=6).contains(&delta));
                        assert_eq!((start, end), (2010 - delta as i32, 2018));
                    }
                    DurationMode::ShiftEnd => {
                        assert!((2..=6).contains(&delta));
                        assert_eq!((start, end), (2010, 2018 + delta as i32));
                    }
                    DurationMode::Extend => {
                        assert!((3..=8).contains(&delta));
                        assert_eq!((start, end), (2010, 2018 + delta as i32));
                    }
                },
                ref other => panic!("unexpected params {other:?}"),
            }
        }
    }

    #[test]
    fn applicability_map_is_respected() {
        use PerturbationFamily::*;
        assert_eq!(applicable_families(ClaimType::HaveTrait), &[Numeric]);
        assert_eq!(applicable_families(ClaimType::ChangeOverTime), &[Numeric]);
        assert_eq!(applicable_families(ClaimType::TopK), &[Binary, Rank]);
        assert_eq!(applicable_families(ClaimType::ChangeInRank), &[Rank, Binary]);
        assert_eq!(applicable_families(ClaimType::ConstantChange), &[Binary, Duration]);
        assert_eq!(applicable_families(ClaimType::HistoricalExtreme), &[Binary, Duration]);
        // numeric scaling never applies to rank claims, rank shifts never
        // apply to single-point claims
        assert!(!applicable_families(ClaimType::ChangeInRank).contains(&Numeric));
        assert!(!applicable_families(ClaimType::HaveTrait).contains(&Rank));
    }

    #[test]
    fn binary_inversion_is_an_involution() {
        for token in ["increase", "decrease", "top", "bottom", "highest", "lowest"] {
            let (inverted, _) = perturb_binary(token).unwrap();
            let (back, _) = perturb_binary(inverted).unwrap();
            assert_eq!(back, token);
            assert_ne!(inverted, token);
        }
        assert!(matches!(
            perturb_binary("sideways").unwrap_err(),
            PerturbError::UnknownToken(_)
        ));
    }

    fn template_claim(sample: &DataSample) -> ClaimRecord {
        let text = render_template(sample, Language::En).unwrap();
        ClaimRecord::new_true(&sample.sample_id, Language::En, text, GeneratorKind::Template, "p")
    }

    fn combo() -> MeasureCombination {
        MeasureCombination {
            assignments: vec![("MEASURE".to_string(), "road fatalities".to_string())],
        }
    }

    #[test]
    fn false_have_trait_doubles_value_in_text() {
        let sample = DataSample::new(
            "t",
            &combo(),
            SamplePayload::HaveTrait {
                country: "France".to_string(),
                year: 2015,
                value: 3.4,
            },
            vec![EvidenceRow {
                country: "France".to_string(),
                year: 2015,
                value: 3.4,
            }],
        );
        let claim = template_claim(&sample);
        let false_claim = make_false_claim(&claim, &sample, &config(), &mut rng(4)).unwrap();
        assert_eq!(false_claim.label, ClaimLabel::False);
        assert_eq!(false_claim.parent_id.as_deref(), Some(claim.claim_id.as_str()));
        let descriptor = false_claim.perturbation.as_ref().unwrap();
        assert_eq!(descriptor.family, PerturbationFamily::Numeric);
        assert!(!false_claim.text.contains("3.4 on"));
        assert!(false_claim.text.contains(&descriptor.perturbed_value));
        assert_ne!(false_claim.claim_id, claim.claim_id);
    }

    #[test]
    fn false_constant_change_inverts_or_stretches() {
        let sample = DataSample::new(
            "t",
            &combo(),
            SamplePayload::ConstantChange {
                country: "Chile".to_string(),
                direction: TrendDirection::Increase,
                n_years: 9,
                start: (2010, 1.0),
                end: (2018, 9.0),
            },
            vec![],
        );
        let claim = template_claim(&sample);
        for seed in 0..20 {
            let false_claim =
                make_false_claim(&claim, &sample, &config(), &mut rng(seed)).unwrap();
            let descriptor = false_claim.perturbation.as_ref().unwrap();
            match descriptor.family {
                PerturbationFamily::Binary => {
                    assert!(false_claim.text.contains("decrease"));
                }
                PerturbationFamily::Duration => {
                    assert_ne!(false_claim.text, claim.text);
                    assert!(!false_claim.text.contains("for 9 consecutive"));
                }
                ref other => panic!("unexpected family {other:?}"),
            }
        }
    }

    #[test]
    fn false_topk_inverts_direction() {
        let sample = DataSample::new(
            "t",
            &combo(),
            SamplePayload::TopK {
                country: "Sweden".to_string(),
                year: 2019,
                k: 5,
                direction: RankDirection::Top,
                rank: 2,
                value: 60.0,
                n_countries: 60,
            },
            vec![],
        );
        let claim = template_claim(&sample);
        // With the default floor, rank shifts on k are infeasible, so every
        // seed lands on inversion.
        for seed in 0..10 {
            let false_claim =
                make_false_claim(&claim, &sample, &config(), &mut rng(seed)).unwrap();
            assert!(false_claim.text.contains("bottom 5"));
        }
    }

    #[test]
    fn false_change_in_rank_swaps_or_shifts() {
        let sample = DataSample::new(
            "t",
            &combo(),
            SamplePayload::ChangeInRank {
                country: "Chile".to_string(),
                year_a: 2010,
                year_b: 2018,
                rank_a: 22,
                rank_b: 3,
                n_countries_a: 40,
                n_countries_b: 40,
            },
            vec![],
        );
        let claim = template_claim(&sample);
        let mut seen_rank = false;
        let mut seen_binary = false;
        for seed in 0..30 {
            let false_claim =
                make_false_claim(&claim, &sample, &config(), &mut rng(seed)).unwrap();
            let descriptor = false_claim.perturbation.as_ref().unwrap();
            match descriptor.family {
                PerturbationFamily::Rank => {
                    seen_rank = true;
                    assert_ne!(false_claim.text, claim.text);
                }
                PerturbationFamily::Binary => {
                    seen_binary = true;
                    assert!(false_claim.text.contains("from rank 3 to rank 22"));
                }
                ref other => panic!("unexpected family {other:?}"),
            }
        }
        assert!(seen_rank && seen_binary);
    }

    #[test]
    fn unrecoverable_text_is_reported() {
        let sample = DataSample::new(
            "t",
            &combo(),
            SamplePayload::HaveTrait {
                country: "France".to_string(),
                year: 2015,
                value: 3.4,
            },
            vec![],
        );
        let claim = ClaimRecord::new_true(
            &sample.sample_id,
            Language::En,
            "France did quite well that year.".to_string(),
            GeneratorKind::Llm,
            "p",
        );
        let err = make_false_claim(&claim, &sample, &config(), &mut rng(5)).unwrap_err();
        assert!(matches!(err, PerturbError::UnrecoverableClaimText));
    }

    #[test]
    fn llm_text_with_verbatim_number_is_recoverable() {
        let sample = DataSample::new(
            "t",
            &combo(),
            SamplePayload::HaveTrait {
                country: "France".to_string(),
                year: 2015,
                value: 3.4,
            },
            vec![],
        );
        let claim = ClaimRecord::new_true(
            &sample.sample_id,
            Language::En,
            "In 2015, France reported a figure of 3.4 for road fatalities.".to_string(),
            GeneratorKind::Llm,
            "p",
        );
        let false_claim = make_false_claim(&claim, &sample, &config(), &mut rng(6)).unwrap();
        assert!(!false_claim.text.contains("3.4 for"));
    }

    #[test]
    fn llm_rank_swap_keeps_rank_prefix() {
        let sample = DataSample::new(
            "t",
            &combo(),
            SamplePayload::ChangeInRank {
                country: "Chile".to_string(),
                year_a: 2010,
                year_b: 2018,
                rank_a: 22,
                rank_b: 3,
                n_countries_a: 40,
                n_countries_b: 40,
            },
            vec![],
        );
        // off-template wording forces the needle-search path
        let claim = ClaimRecord::new_true(
            &sample.sample_id,
            Language::En,
            "Between 2010 and 2018 Chile climbed from rank 22 to rank 3 in road fatalities."
                .to_string(),
            GeneratorKind::Llm,
            "p",
        );
        let mut saw_binary = false;
        for seed in 0..20 {
            let false_claim =
                make_false_claim(&claim, &sample, &config(), &mut rng(seed)).unwrap();
            if false_claim.perturbation.as_ref().unwrap().family == PerturbationFamily::Binary {
                saw_binary = true;
                assert!(
                    false_claim.text.contains("from rank 3 to rank 22"),
                    "swap mangled text: {}",
                    false_claim.text
                );
            }
        }
        assert!(saw_binary);
    }

    #[test]
    fn batch_is_order_independent() {
        let mut pairs = Vec::new();
        for i in 0..40 {
            let sample = DataSample::new(
                "t",
                &combo(),
                SamplePayload::HaveTrait {
                    country: format!("C{i:02}"),
                    year: 2015,
                    value: 3.0 + f64::from(i),
                },
                vec![],
            );
            let claim = template_claim(&sample);
            pairs.push((claim, sample));
        }
        let (forward, skipped_f) = make_false_claims(&pairs, &config(), 11);
        pairs.reverse();
        let (reverse, skipped_r) = make_false_claims(&pairs, &config(), 11);
        assert_eq!(forward, reverse);
        assert_eq!(skipped_f, skipped_r);
        assert_eq!(forward.len(), 40);
    }
}
