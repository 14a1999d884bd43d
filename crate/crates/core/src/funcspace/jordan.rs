use super::function::FunctionRep;
use super::grid::SampleGrid;
use crate::error::Result;

/// Upper and lower variation of a sampled function: `plus[i]` accumulates the
/// positive increments up to index `i`, `minus[i]` the negated negative ones.
/// Both start at zero and `plus − minus = values − values[0]`.
pub fn jordan_parts(values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut plus = Vec::with_capacity(values.len());
    let mut minus = Vec::with_capacity(values.len());
    let (mut up, mut down) = (0.0, 0.0);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            let d = v - values[i - 1];
            if d > 0.0 {
                up += d;
            } else {
                down -= d;
            }
        }
        plus.push(up);
        minus.push(down);
    }
    (plus, minus)
}

/// Jordan decomposition of `h` restricted to the points of `grid`.
pub fn jordan_decompose(h: &FunctionRep, grid: &SampleGrid) -> Result<(FunctionRep, FunctionRep)> {
    let pts = grid.points();
    let values: Vec<f64> = pts.iter().map(|&x| h.apply(x)).collect();
    let (plus, minus) = jordan_parts(&values);
    Ok((grid.function_from_samples(&pts, &plus, &[])?, grid.function_from_samples(&pts, &minus, &[])?))
}
