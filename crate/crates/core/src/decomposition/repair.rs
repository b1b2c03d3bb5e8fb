use crate::error::{Error, Result};

/// Signed per-controller kernel `F_k(s'|s,a_k)` stored `[s][a][s']`.
pub type SignedKernel = Vec<Vec<Vec<f64>>>;

const NEG_EPS: f64 = 1e-13;

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Constant-shift transfer loop on one slice: while some component has a
/// negative minimum, move mass from components with positive minima (largest
/// minimum first) until the deficit is covered.
pub fn repair_components(components: &mut [Vec<f64>]) -> Result<()> {
    loop {
        let mins: Vec<f64> = components.iter().map(|c| min_of(c)).collect();
        let Some(i) = mins.iter().position(|&b| b < -NEG_EPS) else {
            return Ok(());
        };
        let deficit = -mins[i];
        let mut order: Vec<usize> = (0..components.len()).collect();
        order.sort_by(|&a, &b| mins[b].total_cmp(&mins[a]).then(a.cmp(&b)));
        let mut moved = 0.0;
        for &j in &order {
            if j == i || moved >= deficit {
                continue;
            }
            let available = mins[j];
            if available <= 0.0 {
                break;
            }
            let take = available.min(deficit - moved);
            components[j].iter_mut().for_each(|v| *v -= take);
            components[i].iter_mut().for_each(|v| *v += take);
            moved += take;
        }
        if moved < deficit - NEG_EPS {
            return Err(Error::Decomposition(format!(
                "cannot cover a deficit of {deficit:.3e}: the summed function is negative somewhere"
            )));
        }
    }
}

/// Applies the transfer loop to every `(s, s')` slice of a set of signed
/// controller kernels, preserving `Σ_k F_k` pointwise.
pub fn repair_nonnegative(kernels: &mut [SignedKernel]) -> Result<()> {
    let Some(first) = kernels.first() else {
        return Ok(());
    };
    let num_states = first.len();
    for s in 0..num_states {
        for sp in 0..num_states {
            let mut slice: Vec<Vec<f64>> = kernels
                .iter()
                .map(|k| k[s].iter().map(|row| row[sp]).collect())
                .collect();
            repair_components(&mut slice)?;
            for (k, comp) in kernels.iter_mut().zip(slice) {
                for (a, v) in comp.into_iter().enumerate() {
                    k[s][a][sp] = v;
                }
            }
        }
    }
    Ok(())
}
