/// Formats `x` in positional notation with 17 significant digits, enough
/// for an exact `f64` round trip.
pub fn sig17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:e}", x.abs());
    let exp: i32 = sci
        .split_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .unwrap_or(0);
    if exp >= 17 {
        return format!("{x:.16e}");
    }
    let decimals = (16 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}
