/// The four wavefront masks of one core's scheduler.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SchedulerMasks {
    pub active: u32,
    pub stalled: u32,
    pub barrier_stalled: u32,
    pub visible: u32,
}

impl SchedulerMasks {
    /// Wavefronts that may be selected at the next refill.
    pub fn eligible(&self) -> u32 {
        self.active & !self.stalled & !self.barrier_stalled
    }

    /// Picks the lowest visible wavefront, refilling the visible mask first
    /// if it is empty.
    pub fn schedule_next(&mut self) -> Option<u32> {
        if self.visible == 0 {
            self.visible = self.eligible();
        }
        if self.visible == 0 {
            return None;
        }
        let w = self.visible.trailing_zeros();
        self.visible &= !(1 << w);
        Some(w)
    }

    fn set(mask: &mut u32, w: u32, on: bool) {
        if on {
            *mask |= 1 << w;
        } else {
            *mask &= !(1 << w);
        }
    }

    pub fn set_active(&mut self, w: u32, on: bool) {
        Self::set(&mut self.active, w, on);
        self.visible &= self.eligible();
    }

    pub fn set_stalled(&mut self, w: u32, on: bool) {
        Self::set(&mut self.stalled, w, on);
        self.visible &= self.eligible();
    }

    pub fn set_barrier(&mut self, w: u32, on: bool) {
        Self::set(&mut self.barrier_stalled, w, on);
        self.visible &= self.eligible();
    }

    /// Clears the barrier stall of every wavefront in `mask`.
    pub fn release(&mut self, mask: u32) {
        self.barrier_stalled &= !mask;
    }
}
