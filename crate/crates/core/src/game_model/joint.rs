//! Joint action enumeration in row-major order (last player varies fastest).

/// Number of joint actions, or `None` on overflow.
pub fn joint_count(action_counts: &[usize]) -> Option<usize> {
    action_counts
        .iter()
        .try_fold(1usize, |acc, &k| acc.checked_mul(k))
}

pub fn joint_index(action_counts: &[usize], actions: &[usize]) -> usize {
    action_counts
        .iter()
        .zip(actions)
        .fold(0, |idx, (&k, &a)| idx * k + a)
}

pub fn joint_from_index(action_counts: &[usize], mut index: usize) -> Vec<usize> {
    let mut out = vec![0; action_counts.len()];
    for (slot, &k) in out.iter_mut().zip(action_counts).rev() {
        *slot = index % k;
        index /= k;
    }
    out
}

/// Calls `f` on every joint action in row-major order.
pub fn for_each_joint(action_counts: &[usize], mut f: impl FnMut(&[usize])) {
    if action_counts.contains(&0) {
        return;
    }
    let mut a = vec![0; action_counts.len()];
    loop {
        f(&a);
        let mut p = action_counts.len();
        loop {
            if p == 0 {
                return;
            }
            p -= 1;
            a[p] += 1;
            if a[p] < action_counts[p] {
                break;
            }
            a[p] = 0;
        }
    }
}
