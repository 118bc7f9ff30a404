use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::reductions::Cnf;

fn check_size(q: &Cnf, limits: &Limits) -> Result<()> {
    if q.num_vars() > limits.max_enum_vars || q.num_vars() >= 64 {
        return Err(Error::LimitExceeded {
            what: format!("brute-force enumeration over {} variables", q.num_vars()),
            limit: limits.max_enum_vars,
        });
    }
    Ok(())
}

pub fn sat_oracle(q: &Cnf, limits: &Limits) -> Result<bool> {
    check_size(q, limits)?;
    Ok((0..1u64 << q.num_vars()).any(|mask| q.evaluate_mask(mask)))
}

pub fn model_count(q: &Cnf, limits: &Limits) -> Result<u64> {
    check_size(q, limits)?;
    Ok((0..1u64 << q.num_vars())
        .filter(|&mask| q.evaluate_mask(mask))
        .count() as u64)
}

/// For each assignment to `X` (the first half of the variables), the number
/// of its extensions over `Y` that satisfy `q`.
fn extension_counts(q: &Cnf, limits: &Limits) -> Result<(usize, Vec<u64>)> {
    check_size(q, limits)?;
    let total = q.num_vars();
    if !total.is_multiple_of(2) {
        return Err(Error::Reduction(format!(
            "need |X| = |Y|, but the formula has {total} variables"
        )));
    }
    let n = total / 2;
    let counts = (0..1u64 << n)
        .map(|x| {
            (0..1u64 << n)
                .filter(|&y| q.evaluate_mask(x | (y << n)))
                .count() as u64
        })
        .collect();
    Ok((n, counts))
}

/// Some X-assignment has at least half of its Y-extensions satisfying `q`.
pub fn emajsat_oracle(q: &Cnf, limits: &Limits) -> Result<bool> {
    let (n, counts) = extension_counts(q, limits)?;
    Ok(counts.iter().any(|&c| 2 * c >= 1 << n))
}

/// Some X-assignment has every Y-extension satisfying `q`.
pub fn forall_exists_oracle(q: &Cnf, limits: &Limits) -> Result<bool> {
    let (n, counts) = extension_counts(q, limits)?;
    Ok(counts.iter().any(|&c| c == 1 << n))
}
