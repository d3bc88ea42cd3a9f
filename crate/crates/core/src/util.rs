use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Formats a float with 17 significant digits.
pub(crate) fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Checks that `p` lies in (1, ∞).
pub(crate) fn check_exponent(p: f64) -> crate::Result<()> {
    if !(p.is_finite() && p > 1.0) {
        return Err(crate::Error::InvalidParameter(format!(
            "exponent p = {p} must lie in (1, inf)"
        )));
    }
    Ok(())
}
