//! Operation and working-space counters.

use std::ops::AddAssign;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OpCounters {
    pub multiplications: u64,
    pub additions: u64,
    pub divisions: u64,
    pub table_writes: u64,
    /// Largest number of working-table entries live at once.
    pub peak_aux_entries: u64,
    live_aux: u64,
}

impl OpCounters {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn mul(&mut self, n: u64) {
        self.multiplications += n;
    }

    #[inline]
    pub fn add(&mut self, n: u64) {
        self.additions += n;
    }

    #[inline]
    pub fn div(&mut self, n: u64) {
        self.divisions += n;
    }

    #[inline]
    pub fn write(&mut self, n: u64) {
        self.table_writes += n;
    }

    /// Registers `n` working entries coming alive.
    pub fn alloc(&mut self, n: u64) {
        self.live_aux += n;
        self.peak_aux_entries = self.peak_aux_entries.max(self.live_aux);
    }

    /// Registers `n` working entries being dropped.
    pub fn free(&mut self, n: u64) {
        debug_assert!(n <= self.live_aux, "freeing more aux entries than allocated");
        self.live_aux -= n.min(self.live_aux);
    }

    pub fn live_aux(&self) -> u64 {
        self.live_aux
    }

    /// (name, value) pairs in a fixed order, for reporting.
    pub fn fields(&self) -> [(&'static str, u64); 5] {
        [
            ("multiplications", self.multiplications),
            ("additions", self.additions),
            ("divisions", self.divisions),
            ("table_writes", self.table_writes),
            ("peak_aux_entries", self.peak_aux_entries),
        ]
    }
}

impl AddAssign<&OpCounters> for OpCounters {
    /// Sums the op counts; peaks combine by maximum.
    fn add_assign(&mut self, o: &OpCounters) {
        self.multiplications += o.multiplications;
        self.additions += o.additions;
        self.divisions += o.divisions;
        self.table_writes += o.table_writes;
        self.peak_aux_entries = self.peak_aux_entries.max(o.peak_aux_entries);
    }
}
