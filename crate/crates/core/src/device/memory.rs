use std::collections::VecDeque;

use crate::record::DeviceRecord;

pub const DEFAULT_CAPACITY: usize = 65_536;

/// Record memory: a fixed-capacity ring that evicts the oldest record when full.
#[derive(Debug, Clone)]
pub struct RecordMemory {
    records: VecDeque<DeviceRecord>,
    capacity: usize,
}

impl Default for RecordMemory {
    fn default() -> Self {
        Self::with_capacity(DEFAULT_CAPACITY)
    }
}

impl RecordMemory {
    pub fn with_capacity(capacity: usize) -> Self {
        let capacity = capacity.max(1);
        RecordMemory {
            records: VecDeque::with_capacity(capacity.min(4096)),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn store(&mut self, record: DeviceRecord) {
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(record);
    }

    /// Up to `count` records starting at position `start` (0 = oldest held).
    /// Positions past the end yield an empty result.
    pub fn read(&self, start: usize, count: usize) -> Vec<DeviceRecord> {
        self.records.iter().skip(start).take(count).copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &DeviceRecord> {
        self.records.iter()
    }

    pub fn format(&mut self) {
        self.records.clear();
    }
}
