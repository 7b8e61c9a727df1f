use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, Mutex};
use std::thread;

use super::worker::Handle;
use super::{Case, Judge, Outcome, Program, RuntimeDescriptor};

const MIN_CHUNK: usize = 16;

/// Runs programs as worker processes, keeping recently used workers alive.
pub struct ProcessJudge {
    runtime: Arc<RuntimeDescriptor>,
    pool: Mutex<Pool>,
}

struct Pool {
    idle: HashMap<String, Vec<Handle>>,
    recent: VecDeque<String>,
    capacity: usize,
}

impl Pool {
    fn take(&mut self, id: &str) -> Vec<Handle> {
        self.idle.remove(id).unwrap_or_default()
    }

    fn give_back(&mut self, id: &str, handles: Vec<Handle>) {
        self.recent.retain(|r| r != id);
        self.recent.push_back(id.to_string());
        self.idle.entry(id.to_string()).or_default().extend(handles);
        while self.recent.len() > self.capacity {
            if let Some(old) = self.recent.pop_front() {
                self.idle.remove(&old);
            }
        }
    }
}

impl ProcessJudge {
    pub fn new(runtime: RuntimeDescriptor) -> ProcessJudge {
        ProcessJudge::with_capacity(runtime, 8)
    }

    /// `capacity` bounds how many programs keep idle workers.
    pub fn with_capacity(runtime: RuntimeDescriptor, capacity: usize) -> ProcessJudge {
        ProcessJudge {
            runtime: Arc::new(runtime),
            pool: Mutex::new(Pool { idle: HashMap::new(), recent: VecDeque::new(), capacity: capacity.max(1) }),
        }
    }

    pub fn runtime(&self) -> &RuntimeDescriptor {
        &self.runtime
    }
}

impl Judge for ProcessJudge {
    fn judge(&self, program: &Program, cases: &[Case]) -> Vec<Outcome> {
        if cases.is_empty() {
            return Vec::new();
        }
        let wanted = self.runtime.workers.max(1).min(cases.len().div_ceil(MIN_CHUNK));
        let mut handles = self.pool.lock().unwrap().take(&program.id);
        let shared = Arc::new(program.clone());
        while handles.len() < wanted {
            handles.push(Handle::new(Arc::clone(&shared), Arc::clone(&self.runtime)));
        }
        // A program that cannot start fails identically everywhere; one handle suffices.
        if let Some(err) = handles.iter().find_map(|h| h.spawn_error().cloned()) {
            let failure = Outcome::failure(err.outcome_class(), err.to_string());
            self.pool.lock().unwrap().give_back(&program.id, handles);
            return vec![failure; cases.len()];
        }

        let chunk = cases.len().div_ceil(wanted);
        let mut outcomes = Vec::with_capacity(cases.len());
        thread::scope(|scope| {
            let jobs: Vec<_> = handles
                .iter_mut()
                .zip(cases.chunks(chunk))
                .map(|(handle, part)| scope.spawn(move || part.iter().map(|c| handle.judge(c)).collect::<Vec<_>>()))
                .collect();
            for job in jobs {
                outcomes.extend(job.join().expect("judge worker thread panicked"));
            }
        });
        self.pool.lock().unwrap().give_back(&program.id, handles);
        outcomes
    }
}
