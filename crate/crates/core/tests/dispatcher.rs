mod common;

use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;

use axum::http::StatusCode;
use common::{decode, ok, Reply, StubBackend};
use offload_core::benchkit::tasks::{Answer, EchoIndex};
use offload_core::codegen::Task;
use offload_core::dispatcher::{
    ConnectionStrategy, Dispatcher, DispatcherConfig, InvocationStatus, LocalId, ResultSlot,
};
use rand::Rng;

fn dispatcher(url: &str, pool: usize) -> Dispatcher {
    Dispatcher::new(DispatcherConfig::new(url).pool_size(pool)).unwrap()
}

#[test]
fn throttled_three_times_then_ok() {
    let calls = Arc::new(AtomicU32::new(0));
    let seen = Arc::clone(&calls);
    let stub = StubBackend::start(move |_, _| {
        if seen.fetch_add(1, Ordering::SeqCst) < 3 {
            (Reply::Status(StatusCode::TOO_MANY_REQUESTS), 0)
        } else {
            (ok(&42u32), 0)
        }
    });
    let d = dispatcher(&stub.url(), 1);
    let slot = ResultSlot::new();
    d.dispatch(Answer::new(), &slot).unwrap();
    let record = d.wait_any().unwrap();
    assert_eq!(record.status, InvocationStatus::Ok);
    assert_eq!(record.attempts, 4);
    assert_eq!(calls.load(Ordering::SeqCst), 4);
    assert_eq!(slot.cloned(), Some(42));
}

#[test]
fn throttling_past_budget_is_a_transport_error() {
    let stub = StubBackend::start(|_, _| (Reply::Status(StatusCode::TOO_MANY_REQUESTS), 0));
    let d = Dispatcher::new(DispatcherConfig::new(stub.url()).max_retries_throttle(2)).unwrap();
    let slot = ResultSlot::new();
    d.dispatch(Answer::new(), &slot).unwrap();
    let record = d.wait_any().unwrap();
    assert!(matches!(record.status, InvocationStatus::TransportError(_)));
    assert_eq!(record.attempts, 3);
    assert!(!slot.is_filled());
}

#[test]
fn other_failures_are_not_retried() {
    for code in [StatusCode::INTERNAL_SERVER_ERROR, StatusCode::NOT_FOUND] {
        let calls = Arc::new(AtomicU32::new(0));
        let seen = Arc::clone(&calls);
        let stub = StubBackend::start(move |_, _| {
            seen.fetch_add(1, Ordering::SeqCst);
            (Reply::Status(code), 0)
        });
        let d = dispatcher(&stub.url(), 2);
        d.dispatch(Answer::new(), &ResultSlot::new()).unwrap();
        let record = d.wait_any().unwrap();
        assert!(matches!(record.status, InvocationStatus::RemoteError(_)), "{code}");
        assert_eq!((record.attempts, calls.load(Ordering::SeqCst)), (1, 1));
    }
}

#[test]
fn unreachable_backend_surfaces_on_dispatch() {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let d = dispatcher(&format!("127.0.0.1:{port}"), 4);
    d.dispatch(Answer::new(), &ResultSlot::new()).unwrap();
    let record = d.wait_any().unwrap();
    assert!(matches!(record.status, InvocationStatus::TransportError(_)));
    assert_eq!(record.attempts, 1);
}

#[test]
fn worker_error_becomes_remote_error() {
    let stub = StubBackend::start(|_, captures| {
        let index: u64 = decode(captures);
        if index == 1 {
            (Reply::Error("task failed: boom".into()), 0)
        } else {
            (ok(&index), 0)
        }
    });
    let d = dispatcher(&stub.url(), 2);
    let slots: Vec<ResultSlot<u64>> = (0..2).map(|_| ResultSlot::new()).collect();
    for (i, slot) in slots.iter().enumerate() {
        d.dispatch(EchoIndex::new(i as u64), slot).unwrap();
    }
    let mut records = d.wait(2).unwrap();
    records.sort_by_key(|r| r.local_id);
    assert_eq!(records[0].status, InvocationStatus::Ok);
    assert_eq!(records[1].status, InvocationStatus::RemoteError("task failed: boom".into()));
    assert_eq!(slots[0].cloned(), Some(0));
    assert!(!slots[1].is_filled());
}

#[test]
fn function_name_travels_in_the_url() {
    let stub = StubBackend::start(|name, _| {
        if name == Answer::identifier().cloud_name {
            (ok(&42u32), 0)
        } else {
            (Reply::Status(StatusCode::NOT_FOUND), 0)
        }
    });
    let d = dispatcher(&stub.url(), 1);
    d.dispatch(Answer::new(), &ResultSlot::new()).unwrap();
    assert!(d.wait_any().unwrap().status.is_ok());
}

#[test]
fn local_ids_are_dense_and_per_dispatcher() {
    let stub = StubBackend::start(|_, c| (ok(&decode::<u64>(c)), 0));
    let a = dispatcher(&stub.url(), 2);
    let b = dispatcher(&stub.url(), 2);
    let ids: Vec<LocalId> = (0..5).map(|i| a.dispatch(EchoIndex::new(i), &ResultSlot::new()).unwrap()).collect();
    assert_eq!(ids, (0..5).map(LocalId).collect::<Vec<_>>());
    assert_eq!(b.dispatch(EchoIndex::new(9), &ResultSlot::new()).unwrap(), LocalId(0));
    assert_eq!(a.wait(5).unwrap().len(), 5);
    assert_eq!(b.wait_all().len(), 1);
}

#[test]
fn round_robin_coverage_and_slot_integrity() {
    let stub = StubBackend::start(|_, c| {
        let index: u64 = decode(c);
        (ok(&index), rand::rng().random_range(0..15))
    });
    let d = dispatcher(&stub.url(), 16);
    let slots: Vec<ResultSlot<u64>> = (0..64).map(|_| ResultSlot::new()).collect();
    for (i, slot) in slots.iter().enumerate() {
        d.dispatch(EchoIndex::new(i as u64), slot).unwrap();
    }
    let records = d.wait(64).unwrap();
    assert!(records.iter().all(|r| r.status.is_ok()));
    assert!(records.iter().all(|r| r.connection == (r.local_id.0 % 16) as usize));
    assert_eq!(d.connection_request_counts(), vec![4; 16]);
    for (i, slot) in slots.iter().enumerate() {
        assert_eq!(slot.cloned(), Some(i as u64));
    }
}

#[test]
fn wait_any_returns_the_fastest() {
    let stub = StubBackend::start(|_, c| {
        let delay: u64 = decode(c);
        (ok(&delay), delay)
    });
    let d = dispatcher(&stub.url(), 4);
    for delay in [300, 20, 150] {
        d.dispatch(EchoIndex::new(delay), &ResultSlot::new()).unwrap();
    }
    assert_eq!(d.wait_any().unwrap().local_id, LocalId(1));
    assert_eq!(d.wait(2).unwrap().len(), 2);
    assert!(d.wait_any().is_err());
}

#[test]
fn concurrent_waiters_split_the_records() {
    let stub = StubBackend::start(|_, c| (ok(&decode::<u64>(c)), 5));
    let d = dispatcher(&stub.url(), 8);
    for i in 0..40 {
        d.dispatch(EchoIndex::new(i), &ResultSlot::new()).unwrap();
    }
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let d = d.clone();
            std::thread::spawn(move || d.wait(10).unwrap())
        })
        .collect();
    let mut ids: Vec<u64> = handles.into_iter().flat_map(|h| h.join().unwrap()).map(|r| r.local_id.0).collect();
    ids.sort_unstable();
    assert_eq!(ids, (0..40).collect::<Vec<_>>());
}

#[test]
fn per_request_strategy_works() {
    let stub = StubBackend::start(|_, c| (ok(&decode::<u64>(c)), 0));
    let d = Dispatcher::new(DispatcherConfig::new(stub.url()).strategy(ConnectionStrategy::PerRequest)).unwrap();
    let slots: Vec<ResultSlot<u64>> = (0..20).map(|_| ResultSlot::new()).collect();
    for (i, slot) in slots.iter().enumerate() {
        d.dispatch(EchoIndex::new(i as u64), slot).unwrap();
    }
    assert!(d.wait(20).unwrap().iter().all(|r| r.status.is_ok()));
    assert!(slots.iter().enumerate().all(|(i, s)| s.cloned() == Some(i as u64)));
}
