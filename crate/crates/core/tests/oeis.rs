mod common;

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::thread;

use common::{oeis_dir, spec};
use eulerlaw::oeis::{
    fetch_bfile, known_layout, load_fixture, match_triangle, parse_bfile, sha256_hex, BFile, FetchOptions, OeisError,
    CHECKSUM_FILE,
};
use eulerlaw::recurrence::generate_rows;
use num_bigint::BigInt;
use proptest::prelude::*;

const IDS: [&str; 11] =
    ["A008292", "A173018", "A060187", "A008517", "A008290", "A039598", "A193229", "A065600", "A091441", "A202550", "A244312"];

#[test]
fn every_fixture_passes_its_checksum() {
    for id in IDS {
        let b = load_fixture(&oeis_dir(), id).unwrap_or_else(|e| panic!("{id}: {e}"));
        assert!(b.len() >= 400, "{id}");
    }
}

#[test]
fn tampered_fixture_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let src = oeis_dir();
    std::fs::copy(src.join(CHECKSUM_FILE), dir.path().join(CHECKSUM_FILE)).unwrap();
    let text = std::fs::read_to_string(src.join("b008292.txt")).unwrap();
    std::fs::write(dir.path().join("b008292.txt"), text.replacen(" 11\n", " 12\n", 1)).unwrap();
    assert_eq!(load_fixture(dir.path(), "A008292"), Err(OeisError::Checksum("b008292.txt".into())));
    assert!(matches!(load_fixture(dir.path(), "A000001"), Err(OeisError::CacheMiss(_))));
}

#[test]
fn offline_miss_and_bad_ids() {
    let cache = tempfile::tempdir().unwrap();
    let opts = FetchOptions { endpoint: "http://127.0.0.1:9".into(), cache_dir: cache.path().into(), fixtures_dir: None, offline: true };
    assert_eq!(fetch_bfile("A008292", &opts), Err(OeisError::CacheMiss("A008292".into())));
    for bad in ["A1", "B008292", "A00829x", ""] {
        assert!(matches!(fetch_bfile(bad, &opts), Err(OeisError::BadId(_))), "{bad}");
    }
}

/// Serve `body` for each of `count` requests and return the paths requested.
fn serve(body: String, status: &'static str, count: usize) -> (String, thread::JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = format!("http://{}", listener.local_addr().unwrap());
    let handle = thread::spawn(move || {
        let mut paths = Vec::new();
        for stream in listener.incoming().take(count) {
            let mut stream = stream.unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            paths.push(line.split_whitespace().nth(1).unwrap_or_default().to_string());
            loop {
                let mut h = String::new();
                if reader.read_line(&mut h).unwrap() == 0 || h == "\r\n" {
                    break;
                }
            }
            let resp = format!("HTTP/1.1 {status}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}", body.len());
            stream.write_all(resp.as_bytes()).unwrap();
        }
        paths
    });
    (addr, handle)
}

#[test]
fn download_is_cached() {
    let body = std::fs::read_to_string(oeis_dir().join("b008292.txt")).unwrap();
    let (endpoint, server) = serve(body.clone(), "200 OK", 1);
    let cache = tempfile::tempdir().unwrap();
    let mut opts = FetchOptions { endpoint, cache_dir: cache.path().into(), fixtures_dir: None, offline: false };
    let b = fetch_bfile("A008292", &opts).unwrap();
    assert_eq!(server.join().unwrap(), ["/b008292.txt"]);
    assert_eq!(std::fs::read_to_string(cache.path().join("b008292.txt")).unwrap(), body);
    opts.offline = true;
    assert_eq!(fetch_bfile("A008292", &opts).unwrap(), b);
    let leftovers: Vec<_> = std::fs::read_dir(cache.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(leftovers.len(), 1);
}

#[test]
fn http_errors_are_reported() {
    let (endpoint, server) = serve(String::new(), "404 Not Found", 1);
    let cache = tempfile::tempdir().unwrap();
    let opts = FetchOptions { endpoint, cache_dir: cache.path().into(), fixtures_dir: None, offline: false };
    assert_eq!(fetch_bfile("A999999", &opts), Err(OeisError::Status(404)));
    server.join().unwrap();
    assert!(!cache.path().join("b999999.txt").exists());
}

#[test]
fn mismatch_is_located() {
    let s = spec("a060187");
    let rows = generate_rows(&s, 10).unwrap();
    let layout = known_layout("A060187").unwrap();
    let mut b = load_fixture(&oeis_dir(), "A060187").unwrap();
    b.entries.truncate(21);
    assert!(match_triangle("A060187", &rows, 0, &b, &layout).is_full());
    b.entries[14].1 += 1;
    let m = match_triangle("A060187", &rows, 0, &b, &layout);
    assert!(!m.is_full());
    let mm = m.first_mismatch.unwrap();
    assert_eq!((mm.n, mm.k), (4, 4));
    assert_eq!(m.entries_matched, 14);
}

#[test]
fn sha256_known_value() {
    assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

proptest! {
    #[test]
    fn bfile_round_trips(first in -5i64..5, vals in prop::collection::vec(any::<i64>(), 1..40)) {
        let b = BFile::from_values(first, vals.into_iter().map(BigInt::from));
        prop_assert_eq!(parse_bfile(&b.serialize()).unwrap(), b);
    }
}
