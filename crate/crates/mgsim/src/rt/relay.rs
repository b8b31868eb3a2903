//! TCP publish/subscribe relays with hold-last-value semantics.
//!
//! A publisher owns a listening socket and fans frames out to whoever is
//! connected; with no peer, frames are dropped. A subscriber connects to a
//! publisher and keeps only the most recent message per topic in a mailbox
//! slot that the simulation thread reads without blocking.

use std::collections::HashMap;
use std::io::Write;
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use super::codec::{encode, read_frame, CodecError, RelayMessage};

/// Accepts connections in the background and writes frames to all peers.
pub struct Publisher {
    peers: Arc<Mutex<Vec<TcpStream>>>,
    running: Arc<AtomicBool>,
    local_addr: std::net::SocketAddr,
    accept_thread: Option<std::thread::JoinHandle<()>>,
}

impl Publisher {
    pub fn bind(addr: &str) -> std::io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        let local_addr = listener.local_addr()?;
        listener.set_nonblocking(true)?;
        let peers: Arc<Mutex<Vec<TcpStream>>> = Arc::new(Mutex::new(Vec::new()));
        let running = Arc::new(AtomicBool::new(true));
        let accept_peers = Arc::clone(&peers);
        let accept_running = Arc::clone(&running);
        let accept_thread = std::thread::spawn(move || {
            while accept_running.load(Ordering::Relaxed) {
                match listener.accept() {
                    Ok((stream, _)) => {
                        let _ = stream.set_nodelay(true);
                        accept_peers.lock().unwrap().push(stream);
                    }
                    Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                        std::thread::sleep(Duration::from_millis(5));
                    }
                    Err(_) => break,
                }
            }
        });
        Ok(Self { peers, running, local_addr, accept_thread: Some(accept_thread) })
    }

    pub fn local_addr(&self) -> std::net::SocketAddr {
        self.local_addr
    }

    pub fn peer_count(&self) -> usize {
        self.peers.lock().unwrap().len()
    }

    /// Send to every connected peer; dead peers are dropped, and with no
    /// peer the message is discarded.
    pub fn publish(&self, msg: &RelayMessage) -> Result<(), CodecError> {
        let frame = encode(msg)?;
        let mut peers = self.peers.lock().unwrap();
        peers.retain_mut(|stream| stream.write_all(&frame).is_ok());
        Ok(())
    }
}

impl Drop for Publisher {
    fn drop(&mut self) {
        self.running.store(false, Ordering::Relaxed);
        if let Some(t) = self.accept_thread.take() {
            let _ = t.join();
        }
    }
}

struct Mailbox {
    latest: HashMap<String, RelayMessage>,
    last_recv: Option<Instant>,
    disconnected: bool,
}

/// Latest message read from a subscriber mailbox, with staleness.
#[derive(Debug, Clone)]
pub struct Latest {
    pub message: Option<RelayMessage>,
    /// True once the feed has gone quiet (or dropped) longer than the
    /// configured timeout after at least one receipt.
    pub stale: bool,
}

/// Connects to a publisher and mirrors its most recent message per topic.
pub struct Subscriber {
    mailbox: Arc<Mutex<Mailbox>>,
    stale_after: Duration,
    running: Arc<AtomicBool>,
    recv_thread: Option<std::thread::JoinHandle<()>>,
}

impl Subscriber {
    /// Connect, retrying until `connect_timeout` elapses (the peer process
    /// may not have bound its socket yet).
    pub fn connect(
        addr: &str,
        connect_timeout: Duration,
        stale_after: Duration,
    ) -> std::io::Result<Self> {
        let deadline = Instant::now() + connect_timeout;
        let stream = loop {
            match TcpStream::connect(addr) {
                Ok(s) => break s,
                Err(e) => {
                    if Instant::now() >= deadline {
                        return Err(e);
                    }
                    std::thread::sleep(Duration::from_millis(20));
                }
            }
        };
        let _ = stream.set_nodelay(true);
        let mailbox = Arc::new(Mutex::new(Mailbox {
            latest: HashMap::new(),
            last_recv: None,
            disconnected: false,
        }));
        let running = Arc::new(AtomicBool::new(true));
        let recv_mailbox = Arc::clone(&mailbox);
        let recv_running = Arc::clone(&running);
        let recv_thread = std::thread::spawn(move || {
            let mut reader = std::io::BufReader::new(stream);
            loop {
                if !recv_running.load(Ordering::Relaxed) {
                    break;
                }
                match read_frame(&mut reader) {
                    Ok(Some(msg)) => {
                        let mut mb = recv_mailbox.lock().unwrap();
                        // Hold-last: ignore anything not newer than what we
                        // already have, so samples never go backwards.
                        let newer = mb
                            .latest
                            .get(&msg.topic)
                            .map(|old| msg.seq > old.seq)
                            .unwrap_or(true);
                        if newer {
                            mb.latest.insert(msg.topic.clone(), msg);
                        }
                        mb.last_recv = Some(Instant::now());
                    }
                    Ok(None) | Err(_) => {
                        recv_mailbox.lock().unwrap().disconnected = true;
                        break;
                    }
                }
            }
        });
        Ok(Self { mailbox, stale_after, running, recv_thread: Some(recv_thread) })
    }

    /// Non-blocking read of the most recent message on `topic`.
    pub fn latest(&self, topic: &str) -> Latest {
        let mb = self.mailbox.lock().unwrap();
        let message = mb.latest.get(topic).cloned();
        let stale = match (message.is_some(), mb.last_recv) {
            (true, Some(at)) => mb.disconnected || at.elapsed() > self.stale_after,
            _ => false,
        };
        Latest { message, stale }
    }
}

impl Drop for Subscriber {
    fn drop(&mut self) {
        self.running.store(false, Ordering::Relaxed);
        // The receive thread unblocks on stream close when the peer drops;
        // don't join, it may be parked in read_exact.
        drop(self.recv_thread.take());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(topic: &str, seq: u64, value: f64) -> RelayMessage {
        RelayMessage { topic: topic.into(), seq, sim_time: seq as f64, wall_ns: 0, values: vec![value] }
    }

    fn wait_for<F: Fn() -> bool>(what: &str, cond: F) {
        let deadline = Instant::now() + Duration::from_secs(5);
        while !cond() {
            assert!(Instant::now() < deadline, "timed out waiting for {what}");
            std::thread::sleep(Duration::from_millis(5));
        }
    }

    #[test]
    fn read_before_any_message_is_initial_and_fresh() {
        let publisher = Publisher::bind("127.0.0.1:0").unwrap();
        let sub = Subscriber::connect(
            &publisher.local_addr().to_string(),
            Duration::from_secs(5),
            Duration::from_millis(100),
        )
        .unwrap();
        let l = sub.latest("vref");
        assert!(l.message.is_none());
        assert!(!l.stale);
    }

    #[test]
    fn two_rapid_publishes_yield_second_value() {
        let publisher = Publisher::bind("127.0.0.1:0").unwrap();
        let sub = Subscriber::connect(
            &publisher.local_addr().to_string(),
            Duration::from_secs(5),
            Duration::from_secs(10),
        )
        .unwrap();
        wait_for("peer", || publisher.peer_count() == 1);
        publisher.publish(&msg("vref", 1, 10.0)).unwrap();
        publisher.publish(&msg("vref", 2, 20.0)).unwrap();
        wait_for("second message", || {
            sub.latest("vref").message.as_ref().map(|m| m.seq) == Some(2)
        });
        let l = sub.latest("vref");
        assert_eq!(l.message.unwrap().values, vec![20.0]);
        assert!(!l.stale);
    }

    #[test]
    fn killed_publisher_leaves_stale_last_value() {
        let publisher = Publisher::bind("127.0.0.1:0").unwrap();
        let sub = Subscriber::connect(
            &publisher.local_addr().to_string(),
            Duration::from_secs(5),
            Duration::from_millis(50),
        )
        .unwrap();
        wait_for("peer", || publisher.peer_count() == 1);
        publisher.publish(&msg("vref", 7, 3.5)).unwrap();
        wait_for("message", || sub.latest("vref").message.is_some());
        drop(publisher);
        wait_for("staleness", || sub.latest("vref").stale);
        let l = sub.latest("vref");
        assert_eq!(l.message.unwrap().values, vec![3.5]);
        assert!(l.stale);
    }

    #[test]
    fn publish_without_peer_is_dropped_not_an_error() {
        let publisher = Publisher::bind("127.0.0.1:0").unwrap();
        publisher.publish(&msg("vref", 1, 1.0)).unwrap();
        assert_eq!(publisher.peer_count(), 0);
    }

    #[test]
    fn out_of_order_seq_is_not_delivered() {
        let publisher = Publisher::bind("127.0.0.1:0").unwrap();
        let sub = Subscriber::connect(
            &publisher.local_addr().to_string(),
            Duration::from_secs(5),
            Duration::from_secs(10),
        )
        .unwrap();
        wait_for("peer", || publisher.peer_count() == 1);
        publisher.publish(&msg("vref", 5, 50.0)).unwrap();
        publisher.publish(&msg("vref", 3, 30.0)).unwrap();
        wait_for("first message", || sub.latest("vref").message.is_some());
        // Give the stale-seq frame time to arrive and be ignored.
        std::thread::sleep(Duration::from_millis(50));
        assert_eq!(sub.latest("vref").message.unwrap().seq, 5);
    }
}
