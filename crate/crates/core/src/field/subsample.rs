use super::{Field, Grid};
use crate::{Error, Result};

/// Restricts `u` to the nodes of a coarser nested grid.
///
/// Values at coincident nodes are copied; nothing is interpolated. The
/// target must have the same dimension and periodicity, and `K_source - 1`
/// must be a multiple of `K_target - 1`. The target's boundary label is
/// taken as given.
pub fn subsample(u: &Field, target: &Grid) -> Result<Field> {
    let src = u.grid();
    if src.dim() != target.dim() || src.is_periodic() != target.is_periodic() {
        return Err(Error::NotNested(format!("{src} -> {target}")));
    }
    let (ns, nt) = (src.points() - 1, target.points() - 1);
    if nt > ns || ns % nt != 0 {
        return Err(Error::NotNested(format!(
            "{src} -> {target}: {ns} intervals not divisible by {nt}"
        )));
    }
    let stride = ns / nt;
    let vals = u.values();
    let values = if target.dim() == 1 {
        (0..target.axis_len()).map(|i| vals[i * stride]).collect()
    } else {
        let (ls, lt) = (src.axis_len(), target.axis_len());
        let mut out = Vec::with_capacity(lt * lt);
        for j in 0..lt {
            let row = j * stride * ls;
            for i in 0..lt {
                out.push(vals[row + i * stride]);
            }
        }
        out
    };
    Ok(Field::from_raw(*target, values))
}
