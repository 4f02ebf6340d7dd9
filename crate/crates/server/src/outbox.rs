use std::collections::VecDeque;
use std::sync::Mutex;

use tokio::sync::Notify;

/// Stream frames kept per client before the oldest is dropped.
pub const STREAM_CAPACITY: usize = 32;
/// Unsent replies tolerated before the client is cut off.
pub const REPLY_CAPACITY: usize = 1024;

#[derive(Default)]
struct Queues {
    replies: VecDeque<String>,
    stream: VecDeque<String>,
    dropped: u64,
    closed: bool,
    finishing: bool,
}

/// Outgoing frames for one client. Replies are never dropped; snapshot and
/// event frames are, oldest first, when the client falls behind.
#[derive(Default)]
pub struct Outbox {
    queues: Mutex<Queues>,
    notify: Notify,
}

pub enum Next {
    Frame(String),
    Empty,
    Closed,
}

impl Outbox {
    pub fn reply(&self, frame: String) {
        let mut q = self.queues.lock().unwrap();
        if q.closed {
            return;
        }
        if q.replies.len() >= REPLY_CAPACITY {
            q.closed = true;
        } else {
            q.replies.push_back(frame);
        }
        drop(q);
        self.notify.notify_one();
    }

    pub fn stream(&self, frame: String) {
        let mut q = self.queues.lock().unwrap();
        if q.closed {
            return;
        }
        if q.stream.len() >= STREAM_CAPACITY {
            q.stream.pop_front();
            q.dropped += 1;
        }
        q.stream.push_back(frame);
        drop(q);
        self.notify.notify_one();
    }

    pub fn clear_stream(&self) {
        self.queues.lock().unwrap().stream.clear();
    }

    /// Closes once everything already queued has been sent.
    pub fn finish(&self) {
        self.queues.lock().unwrap().finishing = true;
        self.notify.notify_one();
    }

    pub fn close(&self) {
        self.queues.lock().unwrap().closed = true;
        self.notify.notify_one();
    }

    #[cfg(test)]
    pub fn dropped(&self) -> u64 {
        self.queues.lock().unwrap().dropped
    }

    pub fn try_next(&self) -> Next {
        let mut q = self.queues.lock().unwrap();
        if q.closed {
            return Next::Closed;
        }
        match q.replies.pop_front().or_else(|| q.stream.pop_front()) {
            Some(f) => Next::Frame(f),
            None if q.finishing => Next::Closed,
            None => Next::Empty,
        }
    }

    /// Waits for the next frame; `None` once the outbox is closed.
    pub async fn next(&self) -> Option<String> {
        loop {
            match self.try_next() {
                Next::Frame(f) => return Some(f),
                Next::Closed => return None,
                Next::Empty => self.notify.notified().await,
            }
        }
    }
}
