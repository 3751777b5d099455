//! Seeded synthetic syslog corpus: a few very frequent event patterns and a
//! long tail of rare ones.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FREQUENT_PATTERNS: usize = 40;
pub const RARE_PATTERNS: usize = 1960;
/// Share of entries drawn from the frequent patterns, in percent.
pub const FREQUENT_SHARE: u64 = 92;

pub const FIRST_STAMP: i64 = 1_462_053_899;

pub const POLICY: &str = "paper-table2";

/// One generated line and the sensitive values planted in it.
#[derive(Debug, Clone)]
pub struct Line {
    pub text: String,
    pub secrets: Vec<String>,
    pub template: usize,
}

// {U} user, {I} IPv4, {P} port, {H} hex, {S} size, {D} path
const SHAPES: [&str; 10] = [
    "Accepted publickey for {U} from {I}",
    "Failed password for {U} from {I} {P} ssh2",
    "pam_unix(sshd:session): session opened for user {U} by root",
    "pam_unix(sshd:session): session closed for {U}",
    "Received disconnect from {I} {P}:11: disconnected by user",
    "EXT4-fs (sda1): mounted filesystem with ordered data mode at {D}",
    "slurmd: launched job step with {S} memory on cpu mask {H}",
    "nfs: server {I} not responding, still trying",
    "systemd-logind: New session {H} for user {U}",
    "crond: job {H} finished for {U} after writing {S} of output",
];

const RACKS: [&str; 4] = ["[rack a]", "[rack b]", "[rack c]", "[rack d]"];

const WORDS: [&str; 16] = [
    "thermal", "fan", "voltage", "link", "buffer", "fifo", "daemon", "watchdog", "raid", "mirror", "sensor",
    "firmware", "ecc", "lane", "switch", "uplink",
];

fn user(rng: &mut ChaCha8Rng) -> String {
    // never a pure hex word, so it cannot hide inside a key
    let len = rng.gen_range(2..=4);
    let mut s = String::from("q");
    for _ in 0..len {
        s.push(rng.gen_range(b'g'..=b'z') as char);
    }
    s
}

fn ip(rng: &mut ChaCha8Rng) -> String {
    let octet = |rng: &mut ChaCha8Rng| rng.gen_range(1..10).to_string();
    format!("{}.{}.{}.{}", octet(rng), octet(rng), octet(rng), octet(rng))
}

fn fill(shape: &str, rng: &mut ChaCha8Rng, secrets: &mut Vec<String>) -> String {
    let mut out = String::new();
    let mut rest = shape;
    while let Some(i) = rest.find('{') {
        out.push_str(&rest[..i]);
        let tag = &rest[i + 1..i + 2];
        rest = &rest[i + 3..];
        let value = match tag {
            "U" => {
                let u = user(rng);
                secrets.push(u.clone());
                u
            }
            "I" => {
                let v = ip(rng);
                secrets.push(v.clone());
                v
            }
            "P" => {
                let v = format!("port {}", rng.gen_range(10..99));
                secrets.push(v.clone());
                v
            }
            "H" => format!("0x{:x}", rng.gen_range(0x10..0x1000)),
            "S" => format!("{}{}", rng.gen_range(1..10), ['k', 'm', 'g'].choose(rng).unwrap()),
            "D" => format!("/mnt/{}", ["a", "b", "c"].choose(rng).unwrap()),
            other => panic!("unknown tag {other}"),
        };
        out.push_str(&value);
    }
    out.push_str(rest);
    out
}

fn frequent(index: usize, rng: &mut ChaCha8Rng, secrets: &mut Vec<String>) -> String {
    let shape = SHAPES[index % SHAPES.len()];
    format!("{} {}", fill(shape, rng, secrets), RACKS[index / SHAPES.len()])
}

fn rare(index: usize, rng: &mut ChaCha8Rng, secrets: &mut Vec<String>) -> String {
    let w = |k: usize| WORDS[(index / 16usize.pow(k as u32)) % 16];
    if index.is_multiple_of(20) {
        // a few rare patterns carry no variable at all
        format!("{} {} {} self test passed without errors", w(0), w(1), w(2))
    } else {
        fill(
            &format!("{} {} {} reported fault {{H}} on {{D}}", w(0), w(1), w(2)),
            rng,
            secrets,
        )
    }
}

/// `n` lines from a fixed seed. Every rare pattern appears once before
/// any repeats.
pub fn corpus(n: usize, seed: u64) -> Vec<Line> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut next_rare = 0;
    (0..n)
        .map(|k| {
            let mut secrets = Vec::new();
            let (message, template) = if rng.gen_range(0..100) < FREQUENT_SHARE {
                let t = rng.gen_range(0..FREQUENT_PATTERNS);
                (frequent(t, &mut rng, &mut secrets), t)
            } else {
                let t = next_rare % RARE_PATTERNS;
                next_rare += 1;
                (rare(t, &mut rng, &mut secrets), FREQUENT_PATTERNS + t)
            };
            Line {
                text: format!("{} {}", FIRST_STAMP + k as i64, message),
                secrets,
                template,
            }
        })
        .collect()
}
