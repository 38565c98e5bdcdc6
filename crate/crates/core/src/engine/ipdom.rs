use crate::error::FaultKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IpdomEntry {
    pub saved_tmask: u32,
    /// `None` marks a fall-through entry.
    pub target_pc: Option<u32>,
}

/// Executes `split`: pushes the reconvergence entries and returns the new
/// thread mask. `pred` holds one bit per thread.
pub fn split(stack: &mut Vec<IpdomEntry>, limit: usize, tmask: u32, pred: u32, pc: u32) -> Result<u32, FaultKind> {
    let (t, f) = (tmask & pred, tmask & !pred);
    let divergent = t != 0 && f != 0;
    if stack.len() + 1 + divergent as usize > limit {
        return Err(FaultKind::IpdomOverflow { limit });
    }
    stack.push(IpdomEntry { saved_tmask: tmask, target_pc: None });
    if divergent {
        stack.push(IpdomEntry { saved_tmask: f, target_pc: Some(pc.wrapping_add(4)) });
        Ok(t)
    } else {
        Ok(tmask)
    }
}

/// Executes `join`: returns the restored mask and, for an else entry, the
/// PC to resume at.
pub fn join(stack: &mut Vec<IpdomEntry>) -> Result<(u32, Option<u32>), FaultKind> {
    let e = stack.pop().ok_or(FaultKind::IpdomUnderflow)?;
    Ok((e.saved_tmask, e.target_pc))
}
