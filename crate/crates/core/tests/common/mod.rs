/// Maximum over every subset of interior breakpoints, endpoints always kept.
pub fn brute_force(seq: &[f64], theta: f64) -> f64 {
    let n = seq.len();
    if n < 2 {
        return 0.0;
    }
    let interior = n - 2;
    let pow = |d: f64| if d == 0.0 { 0.0 } else { d.abs().powf(theta) };
    let mut best = 0.0f64;
    for mask in 0u32..(1 << interior) {
        let mut prev = seq[0];
        let mut sum = 0.0;
        for k in 0..interior {
            if mask & (1 << k) != 0 {
                sum += pow(seq[k + 1] - prev);
                prev = seq[k + 1];
            }
        }
        sum += pow(seq[n - 1] - prev);
        best = best.max(sum);
    }
    best
}
