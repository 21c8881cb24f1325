use crate::error::{invalid, Error, Result};
use crate::stream::ObliviousStream;
use crate::types::ceil_pow;

/// `T_0 = 0` and `T_k = ceil(T^(alpha + (k-1)(1-alpha)/(K-1)))` for `k = 1..=K`.
pub fn link_breakpoints(horizon: usize, k: usize, alpha: f64) -> Vec<usize> {
    let mut out = vec![0];
    for i in 1..=k {
        let exponent = alpha + (i - 1) as f64 * (1.0 - alpha) / (k - 1).max(1) as f64;
        out.push(ceil_pow(horizon, exponent).min(horizon));
    }
    out
}

/// Expert `k` loses `(1, c)` up to `T_{k-1}` and `(0, c + r_k)` after, where
/// `r_k = delta ceil(T^alpha) / (T_k - T_{k-1})` spends its whole interval
/// budget by `T_k`. The oracle therefore retires experts in index order.
pub fn build_link(horizon: usize, k: usize, alpha: f64, c: f64, delta: f64) -> Result<ObliviousStream> {
    if k < 2 {
        return Err(invalid("K", "needs at least 2 experts"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid("alpha", format!("{alpha} is not in [0, 1]")));
    }
    if !(0.0..=1.0).contains(&c) || delta < 0.0 {
        return Err(invalid("c", format!("c = {c}, delta = {delta}")));
    }
    let bp = link_breakpoints(horizon, k, alpha);
    let budget = delta * ceil_pow(horizon, alpha) as f64;
    let mut rates = Vec::with_capacity(k);
    for i in 1..=k {
        let span = bp[i].saturating_sub(bp[i - 1]);
        if span == 0 {
            return Err(Error::Infeasible(format!("expert {i}: T_{i} = T_{} = {}", i - 1, bp[i])));
        }
        let rate = budget / span as f64;
        if c + rate > 1.0 + 1e-12 {
            return Err(Error::Infeasible(format!("expert {i}: secondary c + {rate} exceeds 1")));
        }
        rates.push((c + rate).min(1.0));
    }
    let mut primary = Vec::with_capacity(k * horizon);
    let mut secondary = Vec::with_capacity(k * horizon);
    for t in 1..=horizon {
        for i in 1..=k {
            let awake = t > bp[i - 1];
            primary.push(if awake { 0.0 } else { 1.0 });
            secondary.push(if awake { rates[i - 1] } else { c });
        }
    }
    ObliviousStream::from_flat(k, primary, secondary)
}
