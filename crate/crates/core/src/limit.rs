//! Counting semaphore for capping in-flight requests.

use std::sync::{Condvar, Mutex};

#[derive(Debug)]
pub struct Semaphore {
    max: usize,
    in_use: Mutex<usize>,
    freed: Condvar,
}

pub struct Permit<'a> {
    sem: &'a Semaphore,
}

impl Semaphore {
    pub fn new(max: usize) -> Self {
        Self { max: max.max(1), in_use: Mutex::new(0), freed: Condvar::new() }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_use.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.max {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        Permit { sem: self }
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.sem.in_use.lock().unwrap_or_else(|e| e.into_inner()) -= 1;
        self.sem.freed.notify_one();
    }
}
