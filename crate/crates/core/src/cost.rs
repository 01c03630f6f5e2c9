//! Cost models: exact absolute dollar cost for a token budget, a relative
//! per-token rate driven by the task's input/output skew, and the min-max
//! normalized penalty that makes rates comparable across a model set.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::money::Money;
use crate::profiles::ModelRecord;

/// Everything the engine knows about what one model costs on one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostQuote {
    pub model: String,
    /// Exact absolute cost for the task's token estimates at `runs` executions.
    pub absolute_usd: Money,
    /// Blended per-million-token rate at the task's input/output skew.
    pub rate_per_mtok: f64,
    /// Min-max normalized rate across the model set: cheapest 0, priciest 1.
    pub penalty: f64,
}

/// Absolute cost of `runs` executions: runs * (tokens_in * price_in +
/// tokens_out * price_out), with per-million prices applied per token.
/// Exact integer arithmetic end to end.
pub fn cost_abs(model: &ModelRecord, tokens_in: u64, tokens_out: u64, runs: u64) -> Result<Money> {
    if runs == 0 {
        return Err(Error::Domain("runs must be >= 1".into()));
    }
    let per_run = tokens_in as i128 * model.price_in_per_token_pico()
        + tokens_out as i128 * model.price_out_per_token_pico();
    Money::from_picodollars(per_run).checked_mul_u64(runs)
}

/// Input share of the task's tokens: tokens_in / (tokens_in + tokens_out).
pub fn skew(tokens_in: u64, tokens_out: u64) -> Result<f64> {
    let total = tokens_in as u128 + tokens_out as u128;
    if total == 0 {
        return Err(Error::Domain(
            "skew undefined when both token counts are zero".into(),
        ));
    }
    Ok(tokens_in as f64 / total as f64)
}

/// Relative price per million tokens at a given input/output skew:
/// skew * price_in + (1 - skew) * price_out.
pub fn cost_rel(model: &ModelRecord, skew: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&skew) {
        return Err(Error::Domain(format!("skew must be in [0, 1], got {skew}")));
    }
    Ok(skew * model.price_in_per_mtok.to_f64() + (1.0 - skew) * model.price_out_per_mtok.to_f64())
}

/// Min-max normalizes each model's relative rate at this skew: the cheapest
/// model gets 0, the most expensive 1, linear in between. A degenerate set
/// where every rate is equal carries no cost signal, so all penalties are 0
/// and quality decides.
pub fn cost_penalty(models: &[ModelRecord], skew: f64) -> Result<BTreeMap<String, f64>> {
    if models.is_empty() {
        return Err(Error::EmptyModelSet);
    }
    let rates: Vec<(String, f64)> = models
        .iter()
        .map(|m| Ok((m.name.clone(), cost_rel(m, skew)?)))
        .collect::<Result<_>>()?;
    let min = rates.iter().map(|(_, r)| *r).fold(f64::INFINITY, f64::min);
    let max = rates.iter().map(|(_, r)| *r).fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    Ok(rates
        .into_iter()
        .map(|(name, rate)| {
            let penalty = if range > 0.0 { (rate - min) / range } else { 0.0 };
            (name, penalty)
        })
        .collect())
}

/// Full quote for one (model, task) pair, given the penalty map already
/// computed for the task's skew.
pub fn quote(
    model: &ModelRecord,
    tokens_in: u64,
    tokens_out: u64,
    runs: u64,
    penalties: &BTreeMap<String, f64>,
) -> Result<CostQuote> {
    let skew = skew(tokens_in, tokens_out)?;
    Ok(CostQuote {
        model: model.name.clone(),
        absolute_usd: cost_abs(model, tokens_in, tokens_out, runs)?,
        rate_per_mtok: cost_rel(model, skew)?,
        penalty: *penalties
            .get(&model.name)
            .ok_or_else(|| Error::UnknownModel { model: model.name.clone() })?,
    })
}
