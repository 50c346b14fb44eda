//! Bounded FIFO with push/pop/stall accounting.

use std::collections::VecDeque;

/// A depth-bounded queue between two processing units.
///
/// Producers must check [`FifoModel::is_full`] before pushing and report a
/// blocked cycle through [`FifoModel::note_stall`]; this keeps occupancy at
/// or below `depth` at every cycle boundary by construction. Elements pop in
/// push order, so `push_count == pop_count + len` always holds.
#[derive(Debug, Clone)]
pub struct FifoModel<T> {
    depth: usize,
    queue: VecDeque<T>,
    push_count: u64,
    pop_count: u64,
    stall_count: u64,
    max_occupancy: usize,
}

impl<T> FifoModel<T> {
    pub fn new(depth: usize) -> Self {
        assert!(depth >= 1, "fifo depth must be >= 1");
        Self {
            depth,
            queue: VecDeque::with_capacity(depth),
            push_count: 0,
            pop_count: 0,
            stall_count: 0,
            max_occupancy: 0,
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.queue.len() >= self.depth
    }

    /// Enqueues one element. Callers check `is_full` first; pushing into a
    /// full queue is a modeling bug, not a runtime condition.
    pub fn push(&mut self, v: T) {
        assert!(!self.is_full(), "push into full fifo");
        self.queue.push_back(v);
        self.push_count += 1;
        self.max_occupancy = self.max_occupancy.max(self.queue.len());
    }

    pub fn pop(&mut self) -> Option<T> {
        let v = self.queue.pop_front();
        if v.is_some() {
            self.pop_count += 1;
        }
        v
    }

    pub fn front(&self) -> Option<&T> {
        self.queue.front()
    }

    /// Records one producer cycle blocked on a full queue.
    pub fn note_stall(&mut self) {
        self.stall_count += 1;
    }

    pub fn push_count(&self) -> u64 {
        self.push_count
    }

    pub fn pop_count(&self) -> u64 {
        self.pop_count
    }

    pub fn stall_count(&self) -> u64 {
        self.stall_count
    }

    pub fn max_occupancy(&self) -> usize {
        self.max_occupancy
    }
}
